#!/usr/bin/env python3
"""Solve a free MPS file with HiGHS and write a gridfold solution file.

Usage: highs_solve.py MODEL.mps OUT.sol GAP TIMELIMIT
"""
import math
import sys

import highspy


def main(argv):
    if len(argv) != 5:
        print(__doc__, file=sys.stderr)
        return 2
    mps, out, gap, limit = argv[1], argv[2], float(argv[3]), float(argv[4])
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", gap)
    if math.isfinite(limit):
        h.setOptionValue("time_limit", limit)
    if h.readModel(mps) == highspy.HighsStatus.kError:
        print(f"cannot read {mps}", file=sys.stderr)
        return 1
    h.run()
    ms = h.getModelStatus()
    info = h.getInfo()
    has_sol = info.primal_solution_status == 2
    M = highspy.HighsModelStatus
    if ms == M.kOptimal:
        status = "optimal"
    elif ms == M.kTimeLimit:
        status = "time-limit"
    elif ms in (M.kInfeasible, M.kUnboundedOrInfeasible):
        status = "infeasible"
    elif has_sol:
        status = "feasible-gap"
    else:
        status = "error"
    with open(out, "w") as f:
        f.write(f"=status= {status}\n")
        if has_sol:
            f.write(f"=obj= {info.objective_function_value!r}\n")
            if h.getLp().integrality_ and math.isfinite(info.mip_dual_bound):
                f.write(f"=bound= {info.mip_dual_bound!r}\n")
            names = h.getLp().col_names_
            for name, v in zip(names, h.getSolution().col_value):
                f.write(f"{name} {v!r}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))

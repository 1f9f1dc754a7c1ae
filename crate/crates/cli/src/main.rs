//! `gridfold`: network reduction and two-step capacity expansion runs.

mod config;
mod pipeline;
mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use gridfold::cep::{evaluate_portfolio, CepConfig, Portfolio};
use gridfold::grid::{load_network, save_network};
use gridfold::metrics::reliability_metrics;
use gridfold::reduction::{reduce_network, reduction_stats, tighten_candidates, ReductionMode};
use gridfold::scenarios::{load_scenarios, save_scenarios, synth_instance, SynthKnobs};
use gridfold::solver::SolveStatus;
use gridfold::two_step::{GenStorageMap, MappingStrategy, Reduced, TransmissionMap};

use config::{existing, init_pool, reduction_config, required, Backend, RunConfig};
use pipeline::{cases, run_batch, solve_baseline, summarize, timing, BaselineRecord, TwoStepInputs};
use report::TwoStepReport;

/// Some case failed, or a solve stopped short of its gap.
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "gridfold", version, about = "Distance-threshold network reduction and two-step capacity expansion")]
struct Cli {
    /// TOML run configuration; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Concurrent pipelines (default: logical cores minus one).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// External solver template with {mps}, {sol}, {gap} and {timelimit}.
    /// Falls back to $GRIDFOLD_SOLVER_CMD.
    #[arg(long, global = true)]
    solver_cmd: Option<String>,
    /// Use the internal brute-force backend.
    #[arg(long, global = true)]
    oracle: bool,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Radial,
    Full,
}

impl From<Mode> for ReductionMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Radial => ReductionMode::Radial,
            Mode::Full => ReductionMode::Full,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Map {
    A,
    B,
    C,
}

#[derive(Clone, Copy, ValueEnum)]
enum Transmission {
    Components,
    All,
}

#[derive(Args)]
struct ReductionArgs {
    /// Merge threshold in km; `inf` merges along every line.
    #[arg(long)]
    distance_km: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Cap candidate builds by the ratings around their original bus.
    #[arg(long)]
    tighten: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Reduce a network and write it with its merge map.
    Reduce {
        #[arg(long)]
        network: Option<PathBuf>,
        #[command(flatten)]
        reduction: ReductionArgs,
        /// Unreduced network the tightening caps are taken from, when
        /// --network is itself a reduction of it.
        #[arg(long, requires = "tighten")]
        original: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        merge_map: PathBuf,
        /// Also write the size statistics as JSON.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Solve the CEP on the full network.
    Baseline {
        #[arg(long)]
        network: Option<PathBuf>,
        #[arg(long)]
        scenarios: Option<PathBuf>,
        /// One extensive-form problem over all days instead of one per day.
        #[arg(long)]
        stochastic: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve on the reduced network, map back and re-solve.
    TwoStep {
        #[arg(long)]
        network: Option<PathBuf>,
        #[arg(long)]
        scenarios: Option<PathBuf>,
        #[command(flatten)]
        reduction: ReductionArgs,
        #[arg(long, value_enum, ignore_case = true)]
        map: Option<Map>,
        #[arg(long, value_enum)]
        transmission: Option<Transmission>,
        #[arg(long)]
        stochastic: bool,
        /// Reuse baseline solutions written by `baseline`.
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Cost and reliability of a fixed portfolio.
    Evaluate {
        #[arg(long)]
        network: Option<PathBuf>,
        #[arg(long)]
        scenarios: Option<PathBuf>,
        #[arg(long)]
        portfolio: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic network and scenario set.
    Synth {
        #[arg(long, default_value_t = 12)]
        buses: usize,
        #[arg(long, default_value_t = 2)]
        days: usize,
        /// TOML file of generator knobs.
        #[arg(long)]
        knobs: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a saved two-step report.
    Report {
        input: PathBuf,
        /// ERMM rows as CSV instead of the text tables.
        #[arg(long)]
        csv: bool,
    },
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    let rc = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let network = |flag: Option<PathBuf>| required(flag, &rc.network, "network").and_then(existing);
    let scenarios = |flag: Option<PathBuf>| required(flag, &rc.scenarios, "scenarios").and_then(existing);
    let output = |flag: Option<PathBuf>, name: &str| required(flag, &rc.output, name);
    let stochastic = |flag: bool| flag || rc.stochastic == Some(true);

    match cli.command {
        Cmd::Reduce {
            network: net_path,
            reduction,
            original,
            out,
            merge_map,
            stats,
        } => {
            let cfg = reduction_config(reduction.distance_km, reduction.mode.map(Into::into), reduction.tighten, &rc)?;
            let net = load_network(network(net_path)?)?;
            let (mut red, mm) = reduce_network(&net, &cfg)?;
            if cfg.tighten {
                let source = match original {
                    Some(p) => load_network(existing(p)?)?,
                    None => net.clone(),
                };
                red = tighten_candidates(&red, &source, &mm)?;
            }
            save_network(&red, &out)?;
            mm.save(&merge_map)?;
            let s = reduction_stats(&net, &red);
            if let Some(p) = stats {
                write_json(&p, &s)?;
            }
            println!("{s}");
            Ok(ExitCode::SUCCESS)
        }

        Cmd::Baseline {
            network: net_path,
            scenarios: sc_path,
            stochastic: sto,
            out,
        } => {
            let out = output(out, "out")?;
            let net = load_network(network(net_path)?)?;
            let days = load_scenarios(scenarios(sc_path)?)?;
            let cfg = rc.cep.resolved(&net);
            let backend = Backend::select(cli.oracle, cli.solver_cmd, &rc)?;
            init_pool(cli.jobs.or(rc.jobs))?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let results = baseline_batch(&net, &days, &cfg, &backend, stochastic(sto));
            let mut records = Vec::new();
            let mut clean = true;
            for (id, r) in results {
                match r {
                    Ok(rec) => {
                        println!("{id:<16}{:>18.2}  {}", rec.objective, rec.status.as_str());
                        clean &= matches!(rec.status, SolveStatus::Optimal | SolveStatus::FeasibleGap);
                        write_json(&out.join(format!("portfolio_{id}.json")), &rec.portfolio)?;
                        records.push(rec);
                    }
                    Err(e) => {
                        eprintln!("{id}: {e:#}");
                        clean = false;
                    }
                }
            }
            write_json(&out.join("baseline.json"), &records)?;
            Ok(if clean { ExitCode::SUCCESS } else { ExitCode::from(EXIT_PARTIAL) })
        }

        Cmd::TwoStep {
            network: net_path,
            scenarios: sc_path,
            reduction,
            map,
            transmission,
            stochastic: sto,
            baseline,
            report,
        } => {
            let out = output(report, "report")?;
            let red_cfg = reduction_config(reduction.distance_km, reduction.mode.map(Into::into), reduction.tighten, &rc)?;
            let base = rc.mapping.unwrap_or_default();
            let strategy = MappingStrategy {
                gen_storage: map.map_or(base.gen_storage, |m| match m {
                    Map::A => GenStorageMap::A,
                    Map::B => GenStorageMap::B,
                    Map::C => GenStorageMap::C,
                }),
                transmission: transmission.map_or(base.transmission, |t| match t {
                    Transmission::Components => TransmissionMap::MapComponents,
                    Transmission::All => TransmissionMap::ReinforceAll,
                }),
            };
            let net = load_network(network(net_path)?)?;
            let days = load_scenarios(scenarios(sc_path)?)?;
            let baselines: BTreeMap<String, BaselineRecord> = match baseline {
                Some(p) => read_json::<Vec<BaselineRecord>>(&existing(p)?)?
                    .into_iter()
                    .map(|b| (b.id.clone(), b))
                    .collect(),
                None => BTreeMap::new(),
            };
            let cfg = rc.cep.resolved(&net);
            let backend = Backend::select(cli.oracle, cli.solver_cmd, &rc)?;
            init_pool(cli.jobs.or(rc.jobs))?;

            let start = Instant::now();
            let reduced = Reduced::compute(&net, &red_cfg)?;
            let reduction_time = start.elapsed().as_secs_f64();
            let sto = stochastic(sto);
            let inputs = TwoStepInputs {
                original: &net,
                reduced: &reduced,
                cfg: &cfg,
                strategy,
                solver: backend.solver(),
                baselines: &baselines,
            };
            let batch = run_batch(&inputs, &cases(&days, sto), &out.join("cases"))?;
            let (ermm, reliability, investment_delta) = summarize(&batch, &net, &cfg, backend.solver().is_exact())?;
            let report = TwoStepReport {
                reduction: red_cfg,
                strategy,
                stochastic: sto,
                stats: reduction_stats(&net, &reduced.network),
                timing: timing(&batch, reduction_time),
                cases: batch.cases,
                failures: batch.failures,
                ermm,
                reliability,
                investment_delta,
            };
            write_json(&out.join("report.json"), &report)?;
            std::fs::write(out.join("report.txt"), report.to_string())?;
            if let Some(e) = &report.ermm {
                std::fs::write(out.join("ermm.csv"), e.to_csv())?;
            }
            reduced.merge_map.save(out.join("merge_map.json"))?;
            print!("{report}");
            Ok(if report.clean() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_PARTIAL) })
        }

        Cmd::Evaluate {
            network: net_path,
            scenarios: sc_path,
            portfolio,
            out,
        } => {
            let net = load_network(network(net_path)?)?;
            let days = load_scenarios(scenarios(sc_path)?)?;
            let x: Portfolio = read_json(&existing(portfolio)?)?;
            let cfg = rc.cep.resolved(&net);
            let backend = Backend::select(cli.oracle, cli.solver_cmd, &rc)?;
            init_pool(cli.jobs.or(rc.jobs))?;
            let eval = evaluate_portfolio(&net, &x, &days, &cfg, backend.solver())?;
            let details: Vec<_> = eval.scenarios.iter().map(|s| s.detail.clone()).collect();
            let rel = reliability_metrics(&details, cfg.days_per_year)?;
            println!("expected cost  {:.2}", eval.expected_cost);
            println!("capex          {:.2}", eval.capex);
            for s in &eval.scenarios {
                println!("  {:<12} p = {:<8} {:>18.2}", s.scenario, s.probability, s.objective);
            }
            println!("{rel}");
            if let Some(p) = out {
                write_json(&p, &serde_json::json!({ "evaluation": eval, "reliability": rel }))?;
            }
            Ok(ExitCode::SUCCESS)
        }

        Cmd::Synth { buses, days, knobs, out } => {
            let knobs: SynthKnobs = match knobs {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
                }
                None => SynthKnobs::default(),
            };
            let seed = cli.seed.or(rc.seed).unwrap_or(0);
            let inst = synth_instance(seed, buses, days, &knobs)?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            save_network(&inst.network, out.join("network.toml"))?;
            save_scenarios(out.join("scenarios"), &inst.days)?;
            println!(
                "seed {seed}: {} buses, {} branches, {} candidates, {} days -> {}",
                inst.network.buses.len(),
                inst.network.branches.len(),
                inst.network.candidates.len(),
                inst.days.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }

        Cmd::Report { input, csv } => {
            let path = if input.is_dir() { input.join("report.json") } else { input };
            let report: TwoStepReport = read_json(&path)?;
            match (&report.ermm, csv) {
                (Some(e), true) => print!("{}", e.to_csv()),
                (None, true) => bail!("{} has no ERMM rows", path.display()),
                (_, false) => print!("{report}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn baseline_batch(
    net: &gridfold::grid::Network,
    days: &[gridfold::scenarios::ScenarioDay],
    cfg: &CepConfig,
    backend: &Backend,
    stochastic: bool,
) -> Vec<(String, Result<BaselineRecord>)> {
    use rayon::prelude::*;
    cases(days, stochastic)
        .into_par_iter()
        .map(|(id, d)| {
            let r = solve_baseline(&id, net, &d, cfg, backend.solver());
            (id, r)
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

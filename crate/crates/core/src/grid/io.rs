//! TOML network files.
//!
//! ```toml
//! format = 1
//!
//! [[buses]]
//! id = "1"
//! location = { latitude = 35.0, longitude = -110.0 }
//! is_substation = true
//! base_kv = 230.0
//!
//! [[branches]]
//! id = "A"
//! from_bus = "1"
//! to_bus = "2"
//! kind = "line"
//! r = 0.01
//! x = 0.1
//! rating = 100.0
//! ```

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{validate_network, Network};
use crate::error::{Error, Result};

pub const NETWORK_FORMAT: i64 = 1;

const SECTIONS: [&str; 6] = ["buses", "branches", "generators", "storage", "loads", "candidates"];

fn parse_section<T: DeserializeOwned>(table: &toml::Table, name: &str, origin: &str) -> Result<Vec<T>> {
    let Some(value) = table.get(name) else {
        return Ok(Vec::new());
    };
    let items = value
        .as_array()
        .ok_or_else(|| Error::parse(origin, format!("`{name}` must be an array of tables")))?;
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let id = item.get("id").and_then(|v| v.as_str()).unwrap_or("?");
            item.clone()
                .try_into::<T>()
                .map_err(|e| Error::parse(format!("{origin}: {name}[{i}] (id `{id}`)"), e.message()))
        })
        .collect()
}

/// Parses without validating.
pub fn network_from_str(text: &str, origin: &str) -> Result<Network> {
    let table: toml::Table = toml::from_str(text).map_err(|e| Error::parse(origin, e))?;
    match table.get("format").and_then(|v| v.as_integer()) {
        Some(NETWORK_FORMAT) => {}
        Some(other) => {
            return Err(Error::parse(origin, format!("unsupported network format {other}")));
        }
        None => return Err(Error::parse(origin, "missing `format = 1` header")),
    }
    if let Some(key) = table
        .keys()
        .find(|k| k.as_str() != "format" && !SECTIONS.contains(&k.as_str()))
    {
        return Err(Error::parse(origin, format!("unknown top-level key `{key}`")));
    }
    Ok(Network {
        buses: parse_section(&table, "buses", origin)?,
        branches: parse_section(&table, "branches", origin)?,
        generators: parse_section(&table, "generators", origin)?,
        storage: parse_section(&table, "storage", origin)?,
        loads: parse_section(&table, "loads", origin)?,
        candidates: parse_section(&table, "candidates", origin)?,
    })
}

#[derive(Serialize)]
struct NetworkFile<'a> {
    format: i64,
    #[serde(flatten)]
    network: &'a Network,
}

pub fn network_to_string(net: &Network) -> Result<String> {
    toml::to_string(&NetworkFile {
        format: NETWORK_FORMAT,
        network: net,
    })
    .map_err(|e| Error::parse("network serialization", e))
}

/// Reads, parses and validates a network file. Validation warnings are logged;
/// errors reject the file.
pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let net = network_from_str(&text, &path.display().to_string())?;
    let report = validate_network(&net);
    if report.has_errors() {
        return Err(Error::Validation(report));
    }
    for w in report.warnings() {
        log::warn!("{}: {}", path.display(), w.message);
    }
    Ok(net)
}

pub fn save_network(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, network_to_string(net)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
format = 1

[[buses]]
id = "a"
location = { latitude = 35.0, longitude = -110.0 }
base_kv = 230.0

[[buses]]
id = "b"
location = { latitude = 35.1, longitude = -110.0 }
base_kv = 230.0

[[branches]]
id = "l1"
from_bus = "a"
to_bus = "b"
kind = "line"
r = 0.01
x = 0.1
rating = 50.0
"#;

    #[test]
    fn parses_minimal_file() {
        let net = network_from_str(SMALL, "small").unwrap();
        assert_eq!(net.buses.len(), 2);
        assert_eq!(net.branches[0].rating, 50.0);
        assert!(!net.branches[0].reinforcible);
    }

    #[test]
    fn missing_rating_names_the_branch() {
        let text = SMALL.replace("rating = 50.0\n", "");
        let err = network_from_str(&text, "small").unwrap_err().to_string();
        assert!(err.contains("l1"), "{err}");
        assert!(err.contains("rating"), "{err}");
    }

    #[test]
    fn requires_format_header() {
        let text = SMALL.replace("format = 1", "");
        assert!(network_from_str(&text, "x").unwrap_err().to_string().contains("format"));
        let text = SMALL.replace("format = 1", "format = 2");
        assert!(network_from_str(&text, "x").is_err());
    }

    #[test]
    fn round_trip() {
        let net = network_from_str(SMALL, "small").unwrap();
        let again = network_from_str(&network_to_string(&net).unwrap(), "again").unwrap();
        assert_eq!(net, again);
    }

    #[test]
    fn load_rejects_invalid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, SMALL.replace("x = 0.1", "x = 0.0")).unwrap();
        assert!(matches!(load_network(&path), Err(Error::Validation(_))));
    }
}

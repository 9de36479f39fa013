use std::fs;
use std::path::Path;

use dse::dse::DseRepr;
use dse::finite::IntMatrix;
use dse::Dse;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::report::Failure;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Parses the wire form only; coverage is checked by the caller.
pub fn read_repr(path: &Path) -> Result<DseRepr, Failure> {
    read_json(path)
}

pub fn read_dse(path: &Path) -> Result<Dse, Failure> {
    let repr = read_repr(path)?;
    Ok(Dse::new(repr.maps, repr.multiplicity)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("artifact serializes");
    fs::write(path, text + "\n").map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// JSON if the first non-blank character is `[`, otherwise headerless CSV.
pub fn read_matrix(path: &Path) -> Result<IntMatrix, Failure> {
    let text = read(path)?;
    let bad = |e: String| Failure::Input(format!("{}: {e}", path.display()));
    let rows: Vec<Vec<u64>> = if text.trim_start().starts_with('[') {
        serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?
    } else {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        reader
            .deserialize()
            .collect::<Result<_, _>>()
            .map_err(|e| bad(e.to_string()))?
    };
    IntMatrix::new(rows).map_err(|e| bad(e.to_string()))
}

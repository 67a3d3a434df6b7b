//! Case-file ingestion, report writers, and the command-line pipeline for
//! the energy-based fault screening engine in `gridshield-core`.
//!
//! Two case formats are supported: a tolerant subset of the MATPOWER `.m`
//! format (buses, generators, branches) and a native JSON format that
//! carries the dynamic parameters and relay limits explicitly. MATPOWER
//! files say nothing about inertia or damping, so those come from
//! [`DynamicsDefaults`] or a JSON sidecar keyed by bus id.

pub mod cli;
pub mod jsoncase;
pub mod matpower;
pub mod report;

use std::fmt;
use std::path::Path;

pub use gridshield_core as core;
pub use matpower::{parse_matpower, DynamicsDefaults, DynamicsSidecar};

use gridshield_core::network::PowerNetwork;

/// Errors from file handling and case parsing.
#[derive(Debug)]
pub enum Error {
    Parse(String),
    Io { path: String, source: std::io::Error },
    Core(gridshield_core::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::Io { path, source } => write!(f, "{path}: {source}"),
            Error::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<gridshield_core::Error> for Error {
    fn from(e: gridshield_core::Error) -> Self {
        Error::Core(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|source| Error::Io { path: path.display().to_string(), source })
}

/// Loads a case file, dispatching on the extension: `.m` parses the
/// MATPOWER subset with the supplied dynamics, `.json` parses the native
/// format (which carries its own dynamics; defaults and sidecar are ignored).
pub fn load_case(
    path: &Path,
    dynamics: &DynamicsDefaults,
    sidecar: Option<&Path>,
) -> Result<PowerNetwork> {
    let text = read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => jsoncase::parse_json_case(&text),
        Some("m") => {
            let sidecar = match sidecar {
                Some(p) => Some(matpower::parse_sidecar(&read_to_string(p)?)?),
                None => None,
            };
            parse_matpower(&text, dynamics, sidecar.as_ref())
        }
        other => Err(Error::Parse(format!(
            "unsupported case extension {other:?}; expected .m or .json"
        ))),
    }
}

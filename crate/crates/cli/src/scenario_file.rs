//! JSON scenario files.
//!
//! ```json
//! {
//!   "alphabets": { "u": ["u1", "u2"], "z": [...], "x": [...], "y": [...], "v": [...] },
//!   "source": [[0.35, 0.15], [0.05, 0.45]],
//!   "channel": [[1, 0], [0, 1]],
//!   "utility_encoder": [[[0, 1], [0, 1]], [[0, 1], [0, 1]]],
//!   "utility_decoder": [[[9, 0], [9, 0]], [[4, 10], [4, 10]]]
//! }
//! ```
//!
//! `source` is the joint `P(u, z)` with rows indexed by `u`, `channel` is
//! `T(y | x)` with rows indexed by `x`, and the utility tables are indexed
//! `[u][z][v]`. Unknown keys anywhere are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use stratcomm_core::binary::BinaryParams;
use stratcomm_core::{Alphabet, Joint, Kernel, Scenario, UtilityTable, PROB_TOL};

use crate::error::CliError;

/// Name that loads the binary example without a file.
pub const BUILTIN_PAPER: &str = "paper-iv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Alphabets {
    pub u: Vec<String>,
    pub z: Vec<String>,
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub v: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub alphabets: Alphabets,
    pub source: Vec<Vec<f64>>,
    pub channel: Vec<Vec<f64>>,
    pub utility_encoder: Vec<Vec<Vec<f64>>>,
    pub utility_decoder: Vec<Vec<Vec<f64>>>,
}

fn invalid(location: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::validation(location, message)
}

fn check_matrix(name: &str, m: &[Vec<f64>], rows: usize, cols: usize) -> Result<(), CliError> {
    if m.len() != rows {
        return Err(CliError::dimension(name, format!("{} rows, expected {rows}", m.len())));
    }
    for (r, row) in m.iter().enumerate() {
        if row.len() != cols {
            return Err(CliError::dimension(
                format!("{name}[{r}]"),
                format!("{} entries, expected {cols}", row.len()),
            ));
        }
        for (c, &p) in row.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(invalid(format!("{name}[{r}][{c}]"), format!("entry {p} is not a probability")));
            }
        }
    }
    Ok(())
}

fn check_utility(name: &str, t: &[Vec<Vec<f64>>], dims: (usize, usize, usize)) -> Result<(), CliError> {
    let (nu, nz, nv) = dims;
    if t.len() != nu {
        return Err(CliError::dimension(name, format!("{} entries along u, expected {nu}", t.len())));
    }
    for (u, plane) in t.iter().enumerate() {
        if plane.len() != nz {
            return Err(CliError::dimension(
                format!("{name}[{u}]"),
                format!("{} entries along z, expected {nz}", plane.len()),
            ));
        }
        for (z, row) in plane.iter().enumerate() {
            if row.len() != nv {
                return Err(CliError::dimension(
                    format!("{name}[{u}][{z}]"),
                    format!("{} entries along v, expected {nv}", row.len()),
                ));
            }
            if let Some(v) = row.iter().position(|x| !x.is_finite()) {
                return Err(invalid(format!("{name}[{u}][{z}][{v}]"), "utility is not finite"));
            }
        }
    }
    Ok(())
}

fn alphabet(name: &str, symbols: &[String]) -> Result<Alphabet, CliError> {
    Alphabet::new(name, symbols.to_vec()).map_err(|e| invalid(format!("alphabets.{}", name.to_lowercase()), e.to_string()))
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::parse(e.to_string()))
    }

    /// Checks everything with a location, then builds the scenario.
    pub fn to_scenario(&self) -> Result<Scenario, CliError> {
        let a = &self.alphabets;
        let alphabets = [
            alphabet("U", &a.u)?,
            alphabet("Z", &a.z)?,
            alphabet("X", &a.x)?,
            alphabet("Y", &a.y)?,
            alphabet("V", &a.v)?,
        ];
        let (nu, nz, nx, ny, nv) = (a.u.len(), a.z.len(), a.x.len(), a.y.len(), a.v.len());

        check_matrix("source", &self.source, nu, nz)?;
        let total: f64 = self.source.iter().flatten().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(invalid("source", format!("total mass is {total}, expected 1")));
        }
        check_matrix("channel", &self.channel, nx, ny)?;
        for (r, row) in self.channel.iter().enumerate() {
            let t: f64 = row.iter().sum();
            if (t - 1.0).abs() > PROB_TOL {
                return Err(invalid(format!("channel[{r}]"), format!("row sums to {t}, expected 1")));
            }
        }
        check_utility("utility_encoder", &self.utility_encoder, (nu, nz, nv))?;
        check_utility("utility_decoder", &self.utility_decoder, (nu, nz, nv))?;

        let build = || -> stratcomm_core::Result<Scenario> {
            Scenario::new(
                alphabets,
                Joint::new(vec![nu, nz], self.source.concat())?,
                Kernel::new(self.channel.clone())?,
                UtilityTable::from_nested(&self.utility_encoder)?,
                UtilityTable::from_nested(&self.utility_decoder)?,
            )
        };
        build().map_err(|e| invalid("scenario", e.to_string()))
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        let nz = s.nz();
        Self {
            alphabets: Alphabets {
                u: s.u.symbols().to_vec(),
                z: s.z.symbols().to_vec(),
                x: s.x.symbols().to_vec(),
                y: s.y.symbols().to_vec(),
                v: s.v.symbols().to_vec(),
            },
            source: s.source().mass().chunks(nz).map(<[f64]>::to_vec).collect(),
            channel: s.channel().to_rows(),
            utility_encoder: s.utility_encoder().to_nested(),
            utility_decoder: s.utility_decoder().to_nested(),
        }
    }

    /// Compact JSON of the parsed document; insensitive to the input's
    /// whitespace and key order.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("scenario files serialize")
    }

    /// Hex SHA-256 of [`ScenarioFile::canonical`].
    pub fn digest(&self) -> String {
        format!("{:x}", Sha256::digest(self.canonical().as_bytes()))
    }
}

/// A validated scenario together with the file it came from.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub scenario: Scenario,
    pub file: ScenarioFile,
    /// `paper-iv` or the path as given.
    pub origin: String,
}

impl Loaded {
    pub fn digest(&self) -> String {
        self.file.digest()
    }
}

/// `paper-iv` or a path to a scenario file.
pub fn load_scenario(spec: &str) -> Result<Loaded, CliError> {
    if spec == BUILTIN_PAPER {
        let scenario = BinaryParams::paper().scenario().map_err(CliError::from)?;
        return Ok(Loaded {
            file: ScenarioFile::from_scenario(&scenario),
            scenario,
            origin: spec.to_string(),
        });
    }
    let text = std::fs::read_to_string(Path::new(spec)).map_err(|e| CliError::io(spec, &e))?;
    let file = ScenarioFile::parse(&text)?;
    Ok(Loaded {
        scenario: file.to_scenario()?,
        file,
        origin: spec.to_string(),
    })
}

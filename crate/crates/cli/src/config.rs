use std::path::Path;

use pqcartan::cocycles::Functional;
use pqcartan::counting::EndpointFlags;
use pqcartan::forms::Form;
use pqcartan::freegroup::{RepConfig, Word};
use pqcartan::jsonmat::{self, Scalar};
use pqcartan::numerics::Field;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// A form given by its Gram matrix (rows).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormSpec {
    pub field: Field,
    pub gram: Vec<Vec<Scalar>>,
}

impl FormSpec {
    pub fn form(&self) -> Result<Form, CliError> {
        let g = jsonmat::from_rows(&self.gram, self.field)
            .map_err(|e| CliError::config(e.to_string()))?;
        Ok(Form::new(g, self.field)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lengths {
    #[serde(default = "one")]
    pub min: usize,
    pub max: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub start: Option<f64>,
    #[serde(default)]
    pub stop: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitSpec {
    pub len: usize,
    pub count: usize,
}

impl Default for LimitSpec {
    fn default() -> Self {
        Self {
            len: 30,
            count: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cylinders {
    pub a: String,
    pub b: String,
}

impl Default for Cylinders {
    fn default() -> Self {
        Self {
            a: "a".into(),
            b: "b".into(),
        }
    }
}

/// Everything a subcommand reads from its config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub rep: RepConfig,
    /// Replaces the form of the representation.
    #[serde(default)]
    pub form: Option<FormSpec>,
    /// Weights of the linear functional; defaults to the mean Jordan
    /// direction.
    #[serde(default)]
    pub functional: Option<Vec<f64>>,
    #[serde(default)]
    pub lengths: Option<Lengths>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    /// Statistics for `count`: norm-cartan, norm-pq, phi-pq.
    #[serde(default)]
    pub statistics: Option<Vec<String>>,
    /// Also run the entropy/ratio trend in `count`.
    #[serde(default)]
    pub trend: bool,
    #[serde(default)]
    pub limit: LimitSpec,
    /// Inputs for `project`: matrices as rows, words, flags as columns.
    #[serde(default)]
    pub matrices: Vec<Vec<Vec<Scalar>>>,
    #[serde(default)]
    pub words: Vec<String>,
    #[serde(default)]
    pub flags: Vec<Vec<Vec<Scalar>>>,
    /// Samples per identity family in `cocycle-check`.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub cylinders: Cylinders,
    #[serde(default = "one")]
    pub depth: usize,
    #[serde(default)]
    pub endpoints: EndpointFlags,
    /// Run counting experiments on uncertified representations.
    #[serde(default)]
    pub allow_uncertified: bool,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_samples() -> usize {
    300
}

/// A parsed config together with the hash of its bytes.
pub struct Loaded {
    pub config: RunConfig,
    pub sha256: String,
}

/// Reads a run config; a file without a `rep` key is read as a bare
/// representation config.
pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let sha256 = Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    let value: serde_json::Value = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::config(format!("malformed JSON: {e}")))?;
    let value = match &value {
        serde_json::Value::Object(m) if m.contains_key("rep") => value,
        serde_json::Value::Object(_) => serde_json::json!({ "rep": value }),
        _ => return Err(CliError::config("config must be a JSON object")),
    };
    let config: RunConfig = serde_json::from_value(value)
        .map_err(|e| CliError::config(format!("invalid config: {e}")))?;
    Ok(Loaded { config, sha256 })
}

impl RunConfig {
    pub fn lengths(&self, default: Lengths) -> Result<Lengths, CliError> {
        let l = self.lengths.unwrap_or(default);
        if l.min > l.max {
            return Err(CliError::config(format!(
                "lengths: min {} exceeds max {}",
                l.min, l.max
            )));
        }
        Ok(l)
    }

    pub fn functional(&self, d: usize) -> Result<Option<Functional>, CliError> {
        match &self.functional {
            None => Ok(None),
            Some(w) if w.len() == d && w.iter().all(|x| x.is_finite()) => {
                Ok(Some(Functional::new(w.clone())))
            }
            Some(w) => Err(CliError::config(format!(
                "functional has {} weights, expected {d}",
                w.len()
            ))),
        }
    }

    pub fn cylinder_letters(&self) -> Result<(Vec<u8>, Vec<u8>), CliError> {
        let parse = |s: &str| {
            Word::parse(s)
                .map(|w| w.letters().to_vec())
                .map_err(|e| CliError::config(format!("cylinder {s:?}: {e}")))
        };
        Ok((parse(&self.cylinders.a)?, parse(&self.cylinders.b)?))
    }
}

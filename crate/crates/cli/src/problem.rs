//! Problem files: the state set and optional scenario parameters.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use usd_embed_core::atomlaser::{AtomConfig, DEFAULT_LEVELS, DEFAULT_MAX_AMPLITUDE};
use usd_embed_core::usd::StateSet;
use usd_embed_core::{CVector, Error as CoreError, C64};

use crate::error::CliError;

/// A complex number as `[re, im]`.
pub type Complex = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dim: usize,
    pub states: Vec<Vec<Complex>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priors: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
}

/// Atom-laser parameters; every field falls back to the desk-scale default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dipoles: Option<[Complex; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepRange>,
}

/// `c_min:c_max:steps`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub c_min: f64,
    pub c_max: f64,
    pub steps: usize,
}

impl SweepRange {
    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.c_min];
        }
        let span = self.c_max - self.c_min;
        (0..self.steps)
            .map(|i| self.c_min + span * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

impl FromStr for SweepRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts[..] else {
            return Err(format!("expected c_min:c_max:steps, got {s:?}"));
        };
        let c_min: f64 = a.trim().parse().map_err(|e| format!("c_min {a:?}: {e}"))?;
        let c_max: f64 = b.trim().parse().map_err(|e| format!("c_max {b:?}: {e}"))?;
        let steps: usize = n.trim().parse().map_err(|e| format!("steps {n:?}: {e}"))?;
        if steps == 0 || !c_min.is_finite() || !c_max.is_finite() {
            return Err(format!("invalid sweep {s:?}"));
        }
        Ok(Self { c_min, c_max, steps })
    }
}

impl fmt::Display for SweepRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.c_min, self.c_max, self.steps)
    }
}

pub fn to_complex(z: &Complex) -> C64 {
    C64::new(z[0], z[1])
}

pub fn from_complex(z: C64) -> Complex {
    [z.re, z.im]
}

pub fn to_vector(v: &[Complex]) -> CVector {
    CVector::from_iterator(v.len(), v.iter().map(to_complex))
}

pub fn from_vector(v: &CVector) -> Vec<Complex> {
    v.iter().map(|z| from_complex(*z)).collect()
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("problem file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    /// Two real states of overlap `c`.
    pub fn symmetric_pair(c: f64) -> Self {
        let states = usd_embed_core::atomlaser::symmetric_pair(c)
            .iter()
            .map(from_vector)
            .collect();
        Self {
            dim: 2,
            states,
            probs: None,
            priors: None,
            scenario: None,
        }
    }

    /// Validates shapes field by field, then builds the state set with
    /// `priors` overriding the file's.
    pub fn state_set(&self, priors: Option<&[f64]>) -> Result<StateSet, CliError> {
        let bad = |msg: String| CliError::Validation(msg);
        if self.dim == 0 {
            return Err(bad("dim: must be at least 1".into()));
        }
        if self.states.len() != self.dim {
            return Err(bad(format!(
                "states: expected {} states, found {}",
                self.dim,
                self.states.len()
            )));
        }
        for (i, s) in self.states.iter().enumerate() {
            if s.len() != self.dim {
                return Err(bad(format!(
                    "states[{i}]: expected {} components, found {}",
                    self.dim,
                    s.len()
                )));
            }
            if let Some(j) = s.iter().position(|z| !z[0].is_finite() || !z[1].is_finite()) {
                return Err(bad(format!("states[{i}][{j}]: non-finite component")));
            }
        }
        let vectors: Vec<CVector> = self.states.iter().map(|s| to_vector(s)).collect();
        let priors = priors.map(<[f64]>::to_vec).or_else(|| self.priors.clone());
        let result = match priors {
            Some(p) => {
                if p.len() != self.dim {
                    return Err(bad(format!("priors: expected {} values, found {}", self.dim, p.len())));
                }
                StateSet::with_priors(vectors, p)
            }
            None => StateSet::new(vectors),
        };
        result.map_err(|e| match e {
            CoreError::NotNormalized { index, norm } => {
                bad(format!("states[{index}]: norm {norm} is not 1"))
            }
            CoreError::NotDiscriminable { min_eigenvalue } => bad(format!(
                "states: not linearly independent (Gram minimum eigenvalue {min_eigenvalue:e})"
            )),
            other => bad(format!("priors: {other}")),
        })
    }
}

impl Scenario {
    pub fn atom(&self) -> Result<AtomConfig, CliError> {
        let levels = self.levels.unwrap_or(DEFAULT_LEVELS);
        let dipoles = self
            .dipoles
            .map(|d| [to_complex(&d[0]), to_complex(&d[1])])
            .unwrap_or([C64::from(1.0); 2]);
        AtomConfig::new(levels, dipoles).map_err(|e| CliError::Validation(format!("scenario: {e}")))
    }

    pub fn max_amplitude(&self) -> Result<f64, CliError> {
        let a = self.max_amplitude.unwrap_or(DEFAULT_MAX_AMPLITUDE);
        if a > 0.0 && a.is_finite() {
            Ok(a)
        } else {
            Err(CliError::Validation(format!("scenario.max_amplitude: must be positive, got {a}")))
        }
    }
}

//! Problem files: plant, formula and solver settings in one JSON document.
//!
//! ```json
//! {
//!   "system": {
//!     "kind": "linear",
//!     "a": [[1, 0], [0, 1]], "b": [[1], [0]], "c": [[0], [1]],
//!     "x0": [0.5, 0.5], "horizon": 2,
//!     "u_box": [[0, 1]], "w_box": [[0, 1]]
//!   },
//!   "formula": "G[1,2] (x0 > 0)",
//!   "epsilon": 0.125,
//!   "oracle": { "mode": "satisfy" },
//!   "seed": 7
//! }
//! ```
//!
//! A finite game uses `{"kind": "finite", "system_moves": [["R", 0.5], ...],
//! "environment_moves": [...], "horizon": 2}`; `{"kind": "rps", "horizon": 2}`
//! is shorthand for rock/paper/scissors on both sides.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cegis::CegisConfig;
use crate::dynamics::{check_formula, FiniteGame, LinearSystem, LipschitzBounds, NormBound, Plant};
use crate::error::{Error, Result};
use crate::oracle::OracleMode;
use crate::stl::{parse, Formula};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Linear {
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        c: Vec<Vec<f64>>,
        x0: Vec<f64>,
        horizon: usize,
        u_box: Vec<[f64; 2]>,
        w_box: Vec<[f64; 2]>,
    },
    Finite {
        system_moves: Vec<(String, f64)>,
        environment_moves: Vec<(String, f64)>,
        horizon: usize,
    },
    Rps {
        horizon: usize,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    #[serde(default)]
    pub mode: OracleMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub system: SystemSpec,
    pub formula: String,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<LipschitzBounds>,
    #[serde(default)]
    pub norm: NormBound,
    #[serde(default)]
    pub oracle: OracleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
}

/// A loaded and checked problem.
#[derive(Clone, Debug)]
pub struct Problem {
    pub spec: ProblemSpec,
    pub plant: Plant,
    pub formula: Formula,
}

fn matrix(rows: &[Vec<f64>], what: &str, nrows: usize) -> Result<DMatrix<f64>> {
    if rows.len() != nrows {
        return Err(Error::Dimension(format!("{what} has {} rows, expected {nrows}", rows.len())));
    }
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension(format!("{what} has rows of different lengths")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl SystemSpec {
    pub fn horizon(&self) -> usize {
        match self {
            SystemSpec::Linear { horizon, .. }
            | SystemSpec::Finite { horizon, .. }
            | SystemSpec::Rps { horizon } => *horizon,
        }
    }

    pub fn set_horizon(&mut self, h: usize) {
        match self {
            SystemSpec::Linear { horizon, .. }
            | SystemSpec::Finite { horizon, .. }
            | SystemSpec::Rps { horizon } => *horizon = h,
        }
    }

    pub fn plant(&self) -> Result<Plant> {
        Ok(match self {
            SystemSpec::Linear {
                a,
                b,
                c,
                x0,
                horizon,
                u_box,
                w_box,
            } => {
                let n = x0.len();
                let pairs = |v: &[[f64; 2]]| v.iter().map(|[lo, hi]| (*lo, *hi)).collect();
                Plant::Linear(LinearSystem::new(
                    matrix(a, "A", n)?,
                    matrix(b, "B", n)?,
                    matrix(c, "C", n)?,
                    DVector::from_column_slice(x0),
                    *horizon,
                    pairs(u_box),
                    pairs(w_box),
                )?)
            }
            SystemSpec::Finite {
                system_moves,
                environment_moves,
                horizon,
            } => Plant::Finite(FiniteGame::new(system_moves.clone(), environment_moves.clone(), *horizon)?),
            SystemSpec::Rps { horizon } => {
                if *horizon == 0 {
                    return Err(Error::Invalid("horizon must be at least 1".into()));
                }
                Plant::Finite(FiniteGame::rps(*horizon))
            }
        })
    }
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Solver settings carried by the file.
    pub fn cegis_config(&self) -> CegisConfig {
        let mut cfg = CegisConfig::new(self.epsilon);
        cfg.lipschitz = self.lipschitz;
        cfg.norm = self.norm;
        cfg.mode = self.oracle.mode;
        cfg.precision = self.oracle.precision;
        cfg.seed = self.seed;
        cfg.max_iters = self.max_iters;
        cfg
    }

    /// Builds the plant and formula and checks every constraint between them.
    pub fn build(self) -> Result<Problem> {
        self.cegis_config().validate()?;
        let plant = self.system.plant()?;
        let formula = parse(&self.formula)?;
        check_formula(&plant, &formula)?;
        Ok(Problem {
            spec: self,
            plant,
            formula,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINEAR: &str = r#"{
        "system": {"kind": "linear", "a": [[0]], "b": [[1]], "c": [[1]], "x0": [0],
                   "horizon": 1, "u_box": [[0, 1]], "w_box": [[-0.5, 0.5]]},
        "formula": "X x0 > 0",
        "epsilon": 0.1
    }"#;

    #[test]
    fn loads_linear() {
        let p = ProblemSpec::from_json(LINEAR).unwrap().build().unwrap();
        assert_eq!(p.plant.horizon(), 1);
        assert!(!p.plant.is_finite());
        assert_eq!(p.spec.cegis_config().epsilon, 0.1);
    }

    #[test]
    fn rejects_bad_epsilon() {
        let text = LINEAR.replace("0.1", "0");
        assert!(ProblemSpec::from_json(&text).unwrap().build().is_err());
        let text = LINEAR.replace("\"epsilon\": 0.1", "\"epsilon\": -1");
        assert!(ProblemSpec::from_json(&text).unwrap().build().is_err());
    }

    #[test]
    fn rejects_long_formula() {
        let text = LINEAR.replace("X x0 > 0", "X X x0 > 0");
        assert!(ProblemSpec::from_json(&text).unwrap().build().is_err());
    }

    #[test]
    fn rejects_unknown_fields() {
        let text = LINEAR.replace("\"epsilon\"", "\"epsilonn\": 1, \"epsilon\"");
        assert!(ProblemSpec::from_json(&text).is_err());
    }

    #[test]
    fn rps_shorthand() {
        let text = r#"{"system": {"kind": "rps", "horizon": 2}, "formula": "true", "epsilon": 0.5}"#;
        let p = ProblemSpec::from_json(text).unwrap().build().unwrap();
        assert!(p.plant.is_finite());
        assert_eq!(p.plant.horizon(), 2);
    }

    #[test]
    fn ragged_matrix() {
        let text = LINEAR.replace("\"a\": [[0]]", "\"a\": [[0, 1]]");
        assert!(ProblemSpec::from_json(&text).unwrap().build().is_err());
    }
}

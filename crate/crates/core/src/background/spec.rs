//! JSON description of a background fixture.
//!
//! ```json
//! {"dim": 3, "kind": "warped", "profile": {"type": "exponential", "kappa": 0.5}}
//! {"dim": 3, "kind": "euclidean", "oneform": [1.0, 0.0, 0.0]}
//! {"dim": 3, "kind": "perturbed", "epsilon": 0.3}
//! {"dim": 3, "kind": "anisotropic", "alphas": [0.4, -0.3], "beta": 0.2}
//! {"dim": 2, "kind": "tabulated", "metric": [[1.0, 0.1], [0.1, 2.0]],
//!  "metric_slope": [[[0.1, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.2]]],
//!  "oneform": [1.0, 0.5], "oneform_slope": [[0.0, 0.1], [0.2, 0.0]]}
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Matrix;

use super::fixtures::{self, WarpProfile};
use super::space::BackgroundSpace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSpec {
    pub dim: usize,
    #[serde(flatten)]
    pub kind: BackgroundKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackgroundKind {
    Euclidean {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        oneform: Option<Vec<f64>>,
    },
    Warped {
        profile: WarpSpec,
    },
    Perturbed {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    Anisotropic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alphas: Option<Vec<f64>>,
        #[serde(default = "default_beta")]
        beta: f64,
    },
    Tabulated {
        metric: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        metric_slope: Option<Vec<Vec<Vec<f64>>>>,
        oneform: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        oneform_slope: Option<Vec<Vec<f64>>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WarpSpec {
    /// σ(t) = e^{−κt}
    Exponential { kappa: f64 },
    /// σ(t) = 1 + λt
    Linear { lambda: f64 },
    Constant,
}

fn default_epsilon() -> f64 {
    0.3
}

fn default_beta() -> f64 {
    0.2
}

/// Default anisotropic warp rates; distinct so that ∇b is not a multiple of a − b⊗b.
pub fn default_alphas(dim: usize) -> Vec<f64> {
    const RATES: [f64; 4] = [0.4, -0.3, 0.7, -0.1];
    (0..dim.saturating_sub(1)).map(|i| RATES[i % RATES.len()]).collect()
}

impl WarpSpec {
    pub fn profile(&self) -> WarpProfile {
        match *self {
            WarpSpec::Exponential { kappa } => WarpProfile::exponential(kappa),
            WarpSpec::Linear { lambda } => WarpProfile::linear(lambda),
            WarpSpec::Constant => WarpProfile::constant(),
        }
    }
}

fn square(rows: &[Vec<f64>], dim: usize, what: &str) -> Result<Matrix<f64>> {
    Matrix::from_rows(rows)
        .filter(|m| m.dim() == dim)
        .ok_or_else(|| Error::Config(format!("{what} must be a {dim}x{dim} array")))
}

impl BackgroundSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("background: {e}")))
    }

    pub fn build(&self) -> Result<BackgroundSpace> {
        let dim = self.dim;
        if dim < 2 {
            return Err(Error::Config(format!("background dimension must be at least 2, got {dim}")));
        }
        match &self.kind {
            BackgroundKind::Euclidean { oneform: None } => fixtures::euclidean(dim),
            BackgroundKind::Euclidean { oneform: Some(b) } => {
                if b.len() != dim {
                    return Err(Error::Config(format!("oneform must have {dim} components")));
                }
                fixtures::euclidean_with_oneform(b.clone())
            }
            BackgroundKind::Warped { profile } => fixtures::make_warped_space(dim, &profile.profile()),
            BackgroundKind::Perturbed { epsilon } => fixtures::perturbed_euclidean(dim, *epsilon),
            BackgroundKind::Anisotropic { alphas, beta } => {
                let alphas = alphas.clone().unwrap_or_else(|| default_alphas(dim));
                fixtures::anisotropic_warped(dim, alphas, *beta)
            }
            BackgroundKind::Tabulated { metric, metric_slope, oneform, oneform_slope } => {
                let a0 = square(metric, dim, "metric")?;
                let a1 = match metric_slope {
                    Some(s) if s.len() == dim => {
                        s.iter().map(|m| square(m, dim, "metric_slope entry")).collect::<Result<Vec<_>>>()?
                    }
                    Some(_) => return Err(Error::Config(format!("metric_slope must hold {dim} matrices"))),
                    None => vec![Matrix::zeros(dim); dim],
                };
                let w1 = match oneform_slope {
                    Some(s) => square(s, dim, "oneform_slope")?,
                    None => Matrix::zeros(dim),
                };
                if oneform.len() != dim {
                    return Err(Error::Config(format!("oneform must have {dim} components")));
                }
                fixtures::tabulated(a0, a1, oneform.clone(), w1)
            }
        }
    }

    /// Proportionality factor `k(x)` when the family satisfies
    /// `∇_j b_i = k (a_ij − b_i b_j)` by construction.
    pub fn concircular_k(&self, x: &[f64]) -> Option<f64> {
        match &self.kind {
            BackgroundKind::Warped { profile } => Some(profile.profile().k(x[0])),
            BackgroundKind::Euclidean { .. } => Some(0.0),
            // one spatial direction: the symmetric ∇b is forced onto a − b⊗b
            BackgroundKind::Anisotropic { alphas, .. } if self.dim == 2 => {
                Some(alphas.as_ref().map_or(default_alphas(2)[0], |a| a[0]))
            }
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            BackgroundKind::Euclidean { .. } => "euclidean",
            BackgroundKind::Warped { .. } => "warped",
            BackgroundKind::Perturbed { .. } => "perturbed",
            BackgroundKind::Anisotropic { .. } => "anisotropic",
            BackgroundKind::Tabulated { .. } => "tabulated",
        }
    }
}

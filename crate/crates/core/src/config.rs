//! Run configuration.
//!
//! ```json
//! {
//!   "background": {"dim": 3, "kind": "warped", "profile": {"type": "exponential", "kappa": 0.5}},
//!   "charge": {"g": 1.0},
//!   "diff": {"method": "forward-jets", "levels": 3},
//!   "tolerances": {"spray_numeric": 1e-6}
//! }
//! ```
//!
//! Every tolerance is optional and falls back to [`Tolerances::default`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::background::{BackgroundSpace, BackgroundSpec};
use crate::error::{Error, Result};
use crate::finsleroid::Charge;
use crate::numkit::DiffConfig;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargeSpec {
    pub g: f64,
}

/// Thresholds of the verification suite. Residuals are relative to the
/// largest magnitude of the compared arrays, floored at 1e-12.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// closed-form identities between algebraic expressions
    pub algebraic: f64,
    /// closed tensors against derivatives of `K²`
    pub metric_oracle: f64,
    pub determinant: f64,
    pub inverse: f64,
    /// first and second derivative identities of the generating functions
    pub generating: f64,
    /// third derivative identity of `V²` by central differences
    pub generating_third_fd: f64,
    /// cascade against jets of the spray
    pub cascade_jets: f64,
    /// third derivatives of the spray by central differences
    pub cascade_fd: f64,
    /// Christoffel-built geodesic spray against the closed forms
    pub spray_numeric: f64,
    /// `|Ȧ_jkl|` for Landsberg-type sprays
    pub landsberg: f64,
    /// lower bound on `max |Ȧ_jkl|` when the concircular condition fails
    pub non_landsberg: f64,
    /// relative drift of `K` along a geodesic over unit time
    pub k_drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            algebraic: 1e-10,
            metric_oracle: 1e-7,
            determinant: 1e-9,
            inverse: 1e-10,
            generating: 1e-8,
            generating_third_fd: 1e-6,
            cascade_jets: 1e-9,
            cascade_fd: 1e-4,
            spray_numeric: 1e-6,
            landsberg: 1e-9,
            non_landsberg: 1e-3,
            k_drift: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub background: BackgroundSpec,
    pub charge: ChargeSpec,
    #[serde(default)]
    pub diff: DiffConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// base points are drawn from `[-sample_box, sample_box]^N`
    #[serde(default = "default_box")]
    pub sample_box: f64,
}

fn default_box() -> f64 {
    0.5
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.charge()?;
        self.diff.validate()?;
        if !(self.sample_box > 0.0 && self.sample_box.is_finite()) {
            return Err(Error::Config(format!("sample_box must be positive, got {}", self.sample_box)));
        }
        Ok(())
    }

    pub fn charge(&self) -> Result<Charge> {
        Charge::new(self.charge.g)
    }

    pub fn space(&self) -> Result<BackgroundSpace> {
        self.background.build()
    }
}

//! Experiment configuration, read from a flat TOML document.
//!
//! Every key is optional; missing keys take the defaults of
//! [`ExperimentConfig::default`]. Unknown keys are rejected. Per-stratum
//! parameters of the synthetic population carry an `s1_` or `s2_` prefix
//! (stratum 1 is `f1 < 0`, stratum 2 is `f1 >= 0`); vector-valued ones
//! take one entry per feature.
//!
//! ```toml
//! mode = "pca"            # "given" or "pca"
//! split = "sign"          # "sign" or "quantile" (pca mode)
//! strata = 2              # number of strata (pca mode)
//! unbalancing = "undersampling"   # "none", "weighting" or "undersampling"
//! minority_weight = 10.0
//! majority_keep = 0.1
//! reps = 50
//! master_seed = 7
//! calibration_fraction = 0.3
//! d = 2
//! s1_mean = [-1.0, 0.0]
//! s1_quadratic = [0.0, 0.8]
//! ```

use std::path::Path;

use rocrecal_core::learn::{StratumSpec, SyntheticSpec};
use rocrecal_core::smoothing::SlopeParams;
use rocrecal_core::{CalibratorConfig, StrataMode};
use serde::Deserialize;

use crate::error::{AppError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrataSource {
    /// Strata are the generator's own `f1 < 0` / `f1 >= 0` split.
    Given,
    /// Strata come from the first principal component of pooled features.
    Pca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Sign,
    Quantile,
}

impl From<Split> for StrataMode {
    fn from(s: Split) -> Self {
        match s {
            Split::Sign => StrataMode::Sign,
            Split::Quantile => StrataMode::Quantile,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unbalancing {
    None,
    /// Minority class gets `minority_weight`.
    Weighting,
    /// Majority class records are kept with probability `majority_keep`.
    Undersampling,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: StrataSource,
    pub split: Split,
    pub strata: usize,
    pub unbalancing: Unbalancing,
    pub minority_weight: f64,
    pub majority_keep: f64,
    pub reps: usize,
    pub master_seed: u64,
    /// Share of the training sample held out for calibration.
    pub calibration_fraction: f64,

    pub span: f64,
    pub min_neighbors: usize,
    pub monotone: bool,
    pub floor: f64,
    pub laplace: bool,

    pub l2: f64,
    pub epochs: usize,
    pub lr: f64,

    pub d: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub misspecified: bool,

    pub s1_weight: f64,
    pub s1_mean: Vec<f64>,
    pub s1_sd: Vec<f64>,
    pub s1_intercept: f64,
    pub s1_linear: Vec<f64>,
    pub s1_quadratic: Vec<f64>,
    pub s1_keep_neg: f64,
    pub s1_keep_pos: f64,

    pub s2_weight: f64,
    pub s2_mean: Vec<f64>,
    pub s2_sd: Vec<f64>,
    pub s2_intercept: f64,
    pub s2_linear: Vec<f64>,
    pub s2_quadratic: Vec<f64>,
    pub s2_keep_neg: f64,
    pub s2_keep_pos: f64,
}

impl Default for ExperimentConfig {
    /// Two mirrored strata, one mostly positive and one mostly negative,
    /// with a squared term the linear scorer cannot represent and majority
    /// under-sampling in training.
    fn default() -> Self {
        Self {
            mode: StrataSource::Given,
            split: Split::Sign,
            strata: 2,
            unbalancing: Unbalancing::Undersampling,
            minority_weight: 10.0,
            majority_keep: 0.1,
            reps: 50,
            master_seed: 1,
            calibration_fraction: 0.3,

            span: 0.05,
            min_neighbors: 10,
            monotone: true,
            floor: 1e-6,
            laplace: true,

            l2: 1e-4,
            epochs: 2000,
            lr: 1.0,

            d: 2,
            n_train: 8000,
            n_test: 8000,
            misspecified: true,

            s1_weight: 1.0,
            s1_mean: vec![-1.5, 0.0],
            s1_sd: vec![1.0, 1.0],
            s1_intercept: 2.2,
            s1_linear: vec![0.0, 1.0],
            s1_quadratic: vec![0.0, 0.5],
            s1_keep_neg: 1.0,
            s1_keep_pos: 1.0,

            s2_weight: 1.0,
            s2_mean: vec![1.5, 0.0],
            s2_sd: vec![1.0, 1.0],
            s2_intercept: -2.2,
            s2_linear: vec![0.0, 1.0],
            s2_quadratic: vec![0.0, 0.5],
            s2_keep_neg: 1.0,
            s2_keep_pos: 1.0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(AppError::Config(msg.to_owned()));
        if self.reps == 0 {
            return bad("reps must be positive");
        }
        if !(self.calibration_fraction > 0.0 && self.calibration_fraction < 1.0) {
            return bad("calibration_fraction must lie in (0, 1)");
        }
        if !(self.minority_weight > 0.0 && self.minority_weight.is_finite()) {
            return bad("minority_weight must be positive");
        }
        if !(self.majority_keep > 0.0 && self.majority_keep <= 1.0) {
            return bad("majority_keep must lie in (0, 1]");
        }
        if self.strata < 2 {
            return bad("strata must be at least 2");
        }
        if self.mode == StrataSource::Pca && self.split == Split::Sign && self.strata != 2 {
            return bad("sign split needs strata = 2");
        }
        self.calibrator()
            .slope
            .validate()
            .map_err(|e| AppError::Config(e.to_string()))?;
        self.spec(0)
            .validate()
            .map_err(|e| AppError::Config(e.to_string()))
    }

    pub fn calibrator(&self) -> CalibratorConfig {
        CalibratorConfig {
            slope: SlopeParams {
                span: self.span,
                min_neighbors: self.min_neighbors,
                monotone: self.monotone,
                floor: self.floor,
            },
            laplace: self.laplace,
        }
    }

    /// The synthetic population with the given generator seed.
    pub fn spec(&self, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            d: self.d,
            strata: [
                StratumSpec {
                    weight: self.s1_weight,
                    mean: self.s1_mean.clone(),
                    sd: self.s1_sd.clone(),
                    intercept: self.s1_intercept,
                    linear: self.s1_linear.clone(),
                    quadratic: self.s1_quadratic.clone(),
                    keep_neg: self.s1_keep_neg,
                    keep_pos: self.s1_keep_pos,
                },
                StratumSpec {
                    weight: self.s2_weight,
                    mean: self.s2_mean.clone(),
                    sd: self.s2_sd.clone(),
                    intercept: self.s2_intercept,
                    linear: self.s2_linear.clone(),
                    quadratic: self.s2_quadratic.clone(),
                    keep_neg: self.s2_keep_neg,
                    keep_pos: self.s2_keep_pos,
                },
            ],
            n_train: self.n_train,
            n_test: self.n_test,
            seed,
            misspecified: self.misspecified,
        }
    }
}

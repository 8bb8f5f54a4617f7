//! Cross-stratum ranking calibration for binary classifier scores.
//!
//! When a scorer is trained on data whose class balance differs per stratum
//! from the population it will be applied to (under-sampling, class weights,
//! or plain stratified collection), raw scores from different strata are not
//! comparable. This crate re-ranks them by
//!
//! ```text
//! r(x) = odds(g) * slope_g(fpr_g(score(x)))
//! ```
//!
//! where `fpr_g` maps a score onto the empirical ROC of its stratum `g`,
//! `slope_g` is the smoothed ROC slope there and `odds(g)` is the stratum's
//! class odds under the target distribution.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! the experiment harness live in the `rocrecal` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod calibrator;
pub mod error;
pub mod learn;
pub mod oracle;
pub mod roc;
pub mod seed;
pub mod smoothing;
pub mod strata;

pub use calibrator::{
    apply_calibrator, estimate_odds, fit_calibrator, fit_calibrator_with_odds, CalibratedScore,
    CalibratorConfig, ProbabilityBaseline, StrataCalibrator, StratumModel,
};
pub use error::{Error, Result};
pub use roc::{auc, compute_roc, dominates, score_to_fpr, RocCurve, ScoredRecord};
pub use smoothing::{eval_slope, fit_slope_function, isotonic_fit, Direction, SlopeFunction};
pub use strata::{fit_pca1, make_strata, project, PcaAxis, StrataAssignment, StrataMode};

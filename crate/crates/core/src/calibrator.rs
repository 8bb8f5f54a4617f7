//! Cross-stratum ranking calibration.
//!
//! For every stratum the calibrator keeps the empirical ROC curve of the
//! stratum's scores (used as the score to FPR map), the smoothed ROC slope at
//! each FPR, and the stratum's class odds under the target distribution. A
//! record with score `s` in stratum `g` is ranked by
//!
//! ```text
//! rank_value = odds(g) * slope_g(fpr_g(s))
//! ```
//!
//! which is the likelihood ratio of `(score, label)` within the stratum,
//! rescaled by the stratum's class odds. Ranking all strata together by this
//! value maximizes TPR at every FPR when the slopes and odds are exact.
//!
//! The odds must come from data whose class balance matches the population
//! being ranked, which is why calibration data is a separate input from the
//! (possibly rebalanced) data a scorer was trained on.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::roc::{compute_roc, score_to_fpr, RocCurve, ScoredRecord};
use crate::smoothing::{
    eval_slope, fit_slope_function, isotonic_fit, Direction, SlopeFunction, SlopeParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CalibratorConfig {
    pub slope: SlopeParams,
    /// Add 0.5 to both class totals when estimating odds.
    pub laplace: bool,
}

/// Fitted components for one stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumModel {
    roc: RocCurve,
    slope: SlopeFunction,
    odds: f64,
    n_pos: usize,
    n_neg: usize,
}

impl StratumModel {
    pub fn from_parts(
        roc: RocCurve,
        slope: SlopeFunction,
        odds: f64,
        n_pos: usize,
        n_neg: usize,
    ) -> Result<Self> {
        check_odds(odds)?;
        Ok(Self {
            roc,
            slope,
            odds,
            n_pos,
            n_neg,
        })
    }

    pub fn roc(&self) -> &RocCurve {
        &self.roc
    }

    pub fn slope(&self) -> &SlopeFunction {
        &self.slope
    }

    pub fn odds(&self) -> f64 {
        self.odds
    }

    pub fn n_pos(&self) -> usize {
        self.n_pos
    }

    pub fn n_neg(&self) -> usize {
        self.n_neg
    }

    /// Ranking value of a raw score from this stratum, with its FPR.
    pub fn rank(&self, score: f64) -> Result<(f64, f64)> {
        let fpr = score_to_fpr(&self.roc, score)?;
        let slope = eval_slope(&self.slope, fpr)?;
        Ok((fpr, self.odds * slope))
    }
}

fn check_odds(odds: f64) -> Result<()> {
    if odds.is_finite() && odds > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "odds",
            reason: "must be positive and finite",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrataCalibrator {
    strata: BTreeMap<u32, StratumModel>,
    config: CalibratorConfig,
}

impl StrataCalibrator {
    pub fn from_parts(
        strata: BTreeMap<u32, StratumModel>,
        config: CalibratorConfig,
    ) -> Result<Self> {
        config.slope.validate()?;
        if strata.is_empty() {
            return Err(Error::TooFewPoints { needed: 1, got: 0 });
        }
        Ok(Self { strata, config })
    }

    pub fn strata(&self) -> &BTreeMap<u32, StratumModel> {
        &self.strata
    }

    pub fn stratum(&self, id: u32) -> Option<&StratumModel> {
        self.strata.get(&id)
    }

    pub fn config(&self) -> &CalibratorConfig {
        &self.config
    }

    /// Replaces the odds of one stratum, e.g. with odds known for the
    /// target population.
    pub fn with_odds(mut self, stratum: u32, odds: f64) -> Result<Self> {
        check_odds(odds)?;
        let model = self
            .strata
            .get_mut(&stratum)
            .ok_or(Error::UnknownStratum(stratum))?;
        model.odds = odds;
        Ok(self)
    }
}

/// One calibrated test record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibratedScore {
    /// Position of the record in the input passed to [`apply_calibrator`].
    pub index: usize,
    pub stratum: u32,
    pub raw_score: f64,
    pub fpr: f64,
    pub rank_value: f64,
}

/// Class odds `sum(w*y) / sum(w*(1-y))`, optionally with half a count added
/// to each class.
pub fn estimate_odds(labels: &[bool], weights: &[f64], laplace: bool) -> Result<f64> {
    if labels.len() != weights.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: weights.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let (mut pos, mut neg) = (0.0, 0.0);
    for (&y, &w) in labels.iter().zip(weights) {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::BadWeight(w));
        }
        if y {
            pos += w;
        } else {
            neg += w;
        }
    }
    if laplace {
        return Ok((pos + 0.5) / (neg + 0.5));
    }
    if neg == 0.0 {
        return Err(Error::ZeroNegatives);
    }
    if pos == 0.0 {
        return Err(Error::ZeroPositives);
    }
    Ok(pos / neg)
}

fn group_by_stratum(records: &[ScoredRecord]) -> BTreeMap<u32, Vec<ScoredRecord>> {
    let mut groups: BTreeMap<u32, Vec<ScoredRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.stratum()).or_default().push(*r);
    }
    groups
}

fn distinct_scores(records: &[ScoredRecord]) -> usize {
    let mut scores: Vec<f64> = records.iter().map(|r| r.score()).collect();
    scores.sort_by(f64::total_cmp);
    scores.dedup();
    scores.len()
}

fn fit_stratum(records: &[ScoredRecord], cfg: &CalibratorConfig) -> Result<StratumModel> {
    let distinct = distinct_scores(records);
    if distinct < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            got: distinct,
        });
    }
    let roc = compute_roc(records)?;
    let slope = fit_slope_function(&roc, &cfg.slope)?;
    let labels: Vec<bool> = records.iter().map(|r| r.label() == Some(true)).collect();
    let weights: Vec<f64> = records.iter().map(|r| r.weight()).collect();
    let odds = estimate_odds(&labels, &weights, cfg.laplace)?;
    let n_pos = labels.iter().filter(|&&y| y).count();
    Ok(StratumModel {
        roc,
        slope,
        odds,
        n_pos,
        n_neg: labels.len() - n_pos,
    })
}

/// Fits one [`StratumModel`] per stratum id found in `records`.
///
/// Every record must be labeled. Strata are fitted independently of each
/// other.
pub fn fit_calibrator(records: &[ScoredRecord], cfg: &CalibratorConfig) -> Result<StrataCalibrator> {
    cfg.slope.validate()?;
    if records.is_empty() {
        return Err(Error::TooFewPoints { needed: 4, got: 0 });
    }
    let mut strata = BTreeMap::new();
    for (id, group) in group_by_stratum(records) {
        let model = fit_stratum(&group, cfg).map_err(|e| e.in_stratum(id))?;
        strata.insert(id, model);
    }
    Ok(StrataCalibrator {
        strata,
        config: *cfg,
    })
}

/// As [`fit_calibrator`], then replaces the estimated odds of each stratum
/// listed in `target_odds`.
pub fn fit_calibrator_with_odds(
    records: &[ScoredRecord],
    cfg: &CalibratorConfig,
    target_odds: &BTreeMap<u32, f64>,
) -> Result<StrataCalibrator> {
    let mut cal = fit_calibrator(records, cfg)?;
    for (&id, &odds) in target_odds {
        cal = cal.with_odds(id, odds).map_err(|e| e.in_stratum(id))?;
    }
    Ok(cal)
}

/// Computes the calibrated ranking value of every record, in input order.
pub fn apply_calibrator(cal: &StrataCalibrator, test: &[ScoredRecord]) -> Result<Vec<CalibratedScore>> {
    test.iter()
        .enumerate()
        .map(|(index, r)| {
            let model = cal
                .strata
                .get(&r.stratum())
                .ok_or(Error::UnknownStratum(r.stratum()))?;
            let (fpr, rank_value) = model.rank(r.score())?;
            Ok(CalibratedScore {
                index,
                stratum: r.stratum(),
                raw_score: r.score(),
                fpr,
                rank_value,
            })
        })
        .collect()
}

/// Total order used for the final ranking: larger `rank_value` first, then
/// smaller stratum id, then smaller input index.
pub fn ranking_order(a: &CalibratedScore, b: &CalibratedScore) -> Ordering {
    b.rank_value
        .total_cmp(&a.rank_value)
        .then(a.stratum.cmp(&b.stratum))
        .then(a.index.cmp(&b.index))
}

/// Positions into `scores`, best first.
pub fn ranking(scores: &[CalibratedScore]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| ranking_order(&scores[a], &scores[b]));
    order
}

/// Within-stratum probability calibration with a prior shift, the usual
/// alternative to ROC-slope calibration.
///
/// Each stratum gets an increasing isotonic fit of label on score. Its
/// probabilities are then moved to the target class odds by multiplying the
/// odds `p / (1 - p)` by `target_odds / train_odds`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityBaseline {
    strata: BTreeMap<u32, BaselineStratum>,
}

#[derive(Debug, Clone, PartialEq)]
struct BaselineStratum {
    knot_score: Vec<f64>,
    knot_prob: Vec<f64>,
    train_odds: f64,
    target_odds: f64,
}

impl BaselineStratum {
    fn probability(&self, score: f64) -> Result<f64> {
        if !score.is_finite() {
            return Err(Error::NonFinite(score));
        }
        let xs = &self.knot_score;
        let ys = &self.knot_prob;
        let last = xs.len() - 1;
        let p = if score <= xs[0] {
            ys[0]
        } else if score >= xs[last] {
            ys[last]
        } else {
            let hi = xs.partition_point(|&x| x <= score);
            let lo = hi - 1;
            let t = (score - xs[lo]) / (xs[hi] - xs[lo]);
            (ys[lo] + t * (ys[hi] - ys[lo])).clamp(ys[lo], ys[hi])
        };
        let k = self.target_odds / self.train_odds;
        Ok(p * k / (p * k + (1.0 - p)))
    }
}

impl ProbabilityBaseline {
    /// Fits the per-stratum isotonic maps. Strata absent from `target_odds`
    /// keep their calibration-data odds.
    pub fn fit(records: &[ScoredRecord], target_odds: &BTreeMap<u32, f64>) -> Result<Self> {
        let mut strata = BTreeMap::new();
        for (id, group) in group_by_stratum(records) {
            let fitted = Self::fit_stratum(&group, target_odds.get(&id).copied())
                .map_err(|e| e.in_stratum(id))?;
            strata.insert(id, fitted);
        }
        if strata.is_empty() {
            return Err(Error::TooFewPoints { needed: 1, got: 0 });
        }
        Ok(Self { strata })
    }

    fn fit_stratum(records: &[ScoredRecord], target: Option<f64>) -> Result<BaselineStratum> {
        let mut sorted: Vec<ScoredRecord> = records.to_vec();
        sorted.sort_by(|a, b| a.score().total_cmp(&b.score()));
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        let mut ws: Vec<f64> = Vec::new();
        let mut labels = Vec::with_capacity(sorted.len());
        let mut weights = Vec::with_capacity(sorted.len());
        for (i, r) in sorted.iter().enumerate() {
            let y = r.label().ok_or(Error::MissingLabel(i))?;
            labels.push(y);
            weights.push(r.weight());
            let yw = if y { r.weight() } else { 0.0 };
            match xs.last() {
                Some(&x) if x == r.score() => {
                    let k = ys.len() - 1;
                    ys[k] += yw;
                    ws[k] += r.weight();
                }
                _ => {
                    xs.push(r.score());
                    ys.push(yw);
                    ws.push(r.weight());
                }
            }
        }
        let train_odds = estimate_odds(&labels, &weights, false)?;
        let target_odds = match target {
            Some(o) => {
                check_odds(o)?;
                o
            }
            None => train_odds,
        };
        for (y, w) in ys.iter_mut().zip(&ws) {
            *y /= w;
        }
        let knot_prob = isotonic_fit(&xs, &ys, &ws, Direction::Increasing)?;
        Ok(BaselineStratum {
            knot_score: xs,
            knot_prob,
            train_odds,
            target_odds,
        })
    }

    /// Prior-shifted probability of each test record, in input order.
    pub fn apply(&self, test: &[ScoredRecord]) -> Result<Vec<f64>> {
        test.iter()
            .map(|r| {
                self.strata
                    .get(&r.stratum())
                    .ok_or(Error::UnknownStratum(r.stratum()))?
                    .probability(r.score())
            })
            .collect()
    }

    /// Calibration-data odds of a stratum.
    pub fn train_odds(&self, stratum: u32) -> Option<f64> {
        self.strata.get(&stratum).map(|s| s.train_odds)
    }
}

pub fn fit_probability_baseline(
    records: &[ScoredRecord],
    target_odds: &BTreeMap<u32, f64>,
) -> Result<ProbabilityBaseline> {
    ProbabilityBaseline::fit(records, target_odds)
}

pub fn apply_probability_baseline(
    baseline: &ProbabilityBaseline,
    test: &[ScoredRecord],
) -> Result<Vec<f64>> {
    baseline.apply(test)
}

//! Empirical ROC curves.
//!
//! A curve is built by sweeping a threshold down through the distinct score
//! values. Records sharing a score enter together, so a tie group produces one
//! diagonal step and the trapezoidal area equals the tie-corrected
//! Mann-Whitney statistic.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};

/// One scored observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredRecord {
    score: f64,
    label: Option<bool>,
    stratum: u32,
    weight: f64,
}

impl ScoredRecord {
    pub fn new(score: f64, label: Option<bool>, stratum: u32) -> Result<Self> {
        if !score.is_finite() {
            return Err(Error::NonFinite(score));
        }
        Ok(Self {
            score,
            label,
            stratum,
            weight: 1.0,
        })
    }

    /// Labeled record with unit weight.
    pub fn labeled(score: f64, label: bool, stratum: u32) -> Result<Self> {
        Self::new(score, Some(label), stratum)
    }

    pub fn with_weight(mut self, weight: f64) -> Result<Self> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::BadWeight(weight));
        }
        self.weight = weight;
        Ok(self)
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn label(&self) -> Option<bool> {
        self.label
    }

    pub fn stratum(&self) -> u32 {
        self.stratum
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }
}

/// Empirical ROC curve, stored as a threshold sweep from `+inf` down to the
/// smallest observed score.
///
/// Point `k` holds the FPR and TPR of the rule "predict positive when
/// `score >= thresholds[k]`". Point 0 is `(0, 0)` at threshold `+inf` and
/// the last point is always `(1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    thresholds: Vec<f64>,
    fpr: Vec<f64>,
    tpr: Vec<f64>,
    pos_weight: f64,
    neg_weight: f64,
}

impl RocCurve {
    /// Builds a curve from stored parts, checking every invariant.
    pub fn from_parts(
        thresholds: Vec<f64>,
        fpr: Vec<f64>,
        tpr: Vec<f64>,
        pos_weight: f64,
        neg_weight: f64,
    ) -> Result<Self> {
        let n = thresholds.len();
        if fpr.len() != n || tpr.len() != n {
            return Err(Error::InvalidCurve("sequences differ in length"));
        }
        if n < 2 {
            return Err(Error::InvalidCurve("need at least two points"));
        }
        if thresholds[0] != f64::INFINITY {
            return Err(Error::InvalidCurve("first threshold must be +inf"));
        }
        if thresholds[1..].iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidCurve("thresholds after the first must be finite"));
        }
        if thresholds.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidCurve("thresholds must be strictly decreasing"));
        }
        for seq in [&fpr, &tpr] {
            if seq.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidCurve("rates must lie in [0, 1]"));
            }
            if seq.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::InvalidCurve("rates must be nondecreasing"));
            }
        }
        if fpr[0] != 0.0 || tpr[0] != 0.0 || fpr[n - 1] != 1.0 || tpr[n - 1] != 1.0 {
            return Err(Error::InvalidCurve("curve must run from (0,0) to (1,1)"));
        }
        if !(pos_weight > 0.0 && neg_weight > 0.0 && pos_weight.is_finite() && neg_weight.is_finite())
        {
            return Err(Error::InvalidCurve("class weights must be positive"));
        }
        Ok(Self {
            thresholds,
            fpr,
            tpr,
            pos_weight,
            neg_weight,
        })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn fpr(&self) -> &[f64] {
        &self.fpr
    }

    pub fn tpr(&self) -> &[f64] {
        &self.tpr
    }

    pub fn pos_weight(&self) -> f64 {
        self.pos_weight
    }

    pub fn neg_weight(&self) -> f64 {
        self.neg_weight
    }

    pub fn len(&self) -> usize {
        self.fpr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fpr.is_empty()
    }

    /// TPR at an arbitrary FPR by linear interpolation between points.
    ///
    /// On a vertical segment (several points sharing `fpr`) the highest TPR
    /// is returned.
    pub fn tpr_at(&self, fpr: f64) -> f64 {
        let fpr = fpr.clamp(0.0, 1.0);
        let hi = self.fpr.partition_point(|&f| f <= fpr);
        if hi == self.fpr.len() {
            return self.tpr[hi - 1];
        }
        let lo = hi - 1;
        if self.fpr[lo] == fpr {
            return self.tpr[lo];
        }
        let t = (fpr - self.fpr[lo]) / (self.fpr[hi] - self.fpr[lo]);
        let v = self.tpr[lo] + t * (self.tpr[hi] - self.tpr[lo]);
        v.clamp(self.tpr[lo], self.tpr[hi])
    }
}

/// Sweeps the threshold over the distinct scores of `records`.
///
/// All records must be labeled. Weights enter the cumulative counts, so a
/// record with weight 2 is indistinguishable from two copies of it.
pub fn compute_roc(records: &[ScoredRecord]) -> Result<RocCurve> {
    let mut pos_total = 0.0;
    let mut neg_total = 0.0;
    for (i, r) in records.iter().enumerate() {
        match r.label {
            Some(true) => pos_total += r.weight,
            Some(false) => neg_total += r.weight,
            None => return Err(Error::MissingLabel(i)),
        }
    }
    if pos_total <= 0.0 || neg_total <= 0.0 {
        return Err(Error::EmptyClass {
            pos: pos_total,
            neg: neg_total,
        });
    }

    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        records[b]
            .score
            .partial_cmp(&records[a].score)
            .unwrap_or(Ordering::Equal)
    });

    let mut thresholds = Vec::with_capacity(records.len() + 1);
    let mut fpr = Vec::with_capacity(records.len() + 1);
    let mut tpr = Vec::with_capacity(records.len() + 1);
    thresholds.push(f64::INFINITY);
    fpr.push(0.0);
    tpr.push(0.0);

    let (mut pos, mut neg) = (0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let score = records[order[i]].score;
        while i < order.len() && records[order[i]].score == score {
            let r = &records[order[i]];
            if r.label == Some(true) {
                pos += r.weight;
            } else {
                neg += r.weight;
            }
            i += 1;
        }
        thresholds.push(score);
        fpr.push((neg / neg_total).min(1.0));
        tpr.push((pos / pos_total).min(1.0));
    }
    let last = fpr.len() - 1;
    fpr[last] = 1.0;
    tpr[last] = 1.0;

    Ok(RocCurve {
        thresholds,
        fpr,
        tpr,
        pos_weight: pos_total,
        neg_weight: neg_total,
    })
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    let area: f64 = curve
        .fpr
        .windows(2)
        .zip(curve.tpr.windows(2))
        .map(|(f, t)| (f[1] - f[0]) * (t[0] + t[1]) * 0.5)
        .sum();
    area.clamp(0.0, 1.0)
}

/// Maps a score onto the curve's FPR axis.
///
/// Exact at thresholds, linear in score between adjacent thresholds, 0 above
/// the largest threshold and 1 below the smallest.
pub fn score_to_fpr(curve: &RocCurve, score: f64) -> Result<f64> {
    if !score.is_finite() {
        return Err(Error::NonFinite(score));
    }
    let th = &curve.thresholds;
    // thresholds[1..] are finite and strictly decreasing
    if score > th[1] {
        return Ok(0.0);
    }
    let last = th.len() - 1;
    if score < th[last] {
        return Ok(1.0);
    }
    // first index with threshold <= score; >= 1 because score <= th[1]
    let k = th.partition_point(|&t| t > score);
    if th[k] == score {
        return Ok(curve.fpr[k]);
    }
    let (hi, lo) = (k - 1, k);
    let t = (th[hi] - score) / (th[hi] - th[lo]);
    let v = curve.fpr[hi] + t * (curve.fpr[lo] - curve.fpr[hi]);
    Ok(v.clamp(curve.fpr[hi], curve.fpr[lo]))
}

/// True when `a` has TPR at least that of `b` (minus `tol`) on a uniform
/// grid of `grid_size` FPR values covering `[0, 1]`.
pub fn dominates(a: &RocCurve, b: &RocCurve, grid_size: usize, tol: f64) -> bool {
    let grid_size = grid_size.max(1);
    (0..grid_size).all(|i| {
        let x = if grid_size == 1 {
            0.0
        } else {
            i as f64 / (grid_size - 1) as f64
        };
        a.tpr_at(x) >= b.tpr_at(x) - tol
    })
}

//! ROC slope estimation and isotonic regression.
//!
//! The slope of a stratum's ROC curve is estimated by local linear regression
//! of TPR on FPR with tricube weights (a degree-1 LOESS), reading the slope
//! off the local fit's linear coefficient. Pool-adjacent-violators is used to
//! make the slopes nonincreasing in FPR and, elsewhere, to fit the
//! within-stratum probability baseline.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::roc::RocCurve;

/// Smoothed ROC slope as a function of FPR, piecewise linear between knots.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFunction {
    knot_fpr: Vec<f64>,
    knot_slope: Vec<f64>,
    floor: f64,
    monotone: bool,
}

impl SlopeFunction {
    pub fn from_parts(
        knot_fpr: Vec<f64>,
        knot_slope: Vec<f64>,
        floor: f64,
        monotone: bool,
    ) -> Result<Self> {
        if knot_fpr.len() != knot_slope.len() {
            return Err(Error::LengthMismatch {
                left: knot_fpr.len(),
                right: knot_slope.len(),
            });
        }
        check_floor(floor)?;
        if knot_fpr.len() < 2 || knot_fpr[0] != 0.0 || knot_fpr[knot_fpr.len() - 1] != 1.0 {
            return Err(Error::InvalidParameter {
                name: "knot_fpr",
                reason: "knots must start at 0 and end at 1",
            });
        }
        if knot_fpr.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NotIncreasing);
        }
        if knot_slope.iter().any(|s| !s.is_finite() || *s < floor) {
            return Err(Error::InvalidParameter {
                name: "knot_slope",
                reason: "slopes must be finite and at least the floor",
            });
        }
        if monotone && knot_slope.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter {
                name: "knot_slope",
                reason: "monotone slopes must be nonincreasing",
            });
        }
        Ok(Self {
            knot_fpr,
            knot_slope,
            floor,
            monotone,
        })
    }

    pub fn knot_fpr(&self) -> &[f64] {
        &self.knot_fpr
    }

    pub fn knot_slope(&self) -> &[f64] {
        &self.knot_slope
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn monotone(&self) -> bool {
        self.monotone
    }
}

/// Parameters of the local linear slope estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeParams {
    /// Fraction of curve points in each local window.
    pub span: f64,
    /// Lower bound on the window size, in points.
    pub min_neighbors: usize,
    /// Project knot slopes onto nonincreasing sequences.
    pub monotone: bool,
    /// Lower clamp for every slope.
    pub floor: f64,
}

impl Default for SlopeParams {
    fn default() -> Self {
        Self {
            span: 0.05,
            min_neighbors: 10,
            monotone: true,
            floor: 1e-6,
        }
    }
}

impl SlopeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.span > 0.0 && self.span <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "span",
                reason: "must lie in (0, 1]",
            });
        }
        if self.min_neighbors == 0 {
            return Err(Error::InvalidParameter {
                name: "min_neighbors",
                reason: "must be positive",
            });
        }
        check_floor(self.floor)
    }
}

fn check_floor(floor: f64) -> Result<()> {
    if floor.is_finite() && floor > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "floor",
            reason: "must be positive and finite",
        })
    }
}

/// Fits the slope function of `curve`, with one knot per distinct FPR value.
pub fn fit_slope_function(curve: &RocCurve, params: &SlopeParams) -> Result<SlopeFunction> {
    params.validate()?;
    let xs = curve.fpr();
    let ys = curve.tpr();
    let n = xs.len();
    if n < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: n });
    }
    let window = (libm::ceil(params.span * n as f64) as usize)
        .max(params.min_neighbors)
        .min(n);

    let mut knots: Vec<f64> = xs.to_vec();
    knots.dedup();

    let mut slopes = Vec::with_capacity(knots.len());
    let mut lo = 0;
    for &x0 in &knots {
        lo = nearest_window(xs, x0, window, lo);
        let slope = local_slope(xs, ys, x0, lo, lo + window)?;
        slopes.push(slope.max(params.floor));
    }
    if params.monotone {
        let unit = vec![1.0; knots.len()];
        slopes = isotonic_fit(&knots, &slopes, &unit, Direction::Decreasing)?;
        for s in &mut slopes {
            *s = s.max(params.floor);
        }
    }
    Ok(SlopeFunction {
        knot_fpr: knots,
        knot_slope: slopes,
        floor: params.floor,
        monotone: params.monotone,
    })
}

/// Start of the `window` points nearest to `x0`, ties going to the left.
/// `xs` must be sorted and `from` must not lie right of the answer; for
/// increasing `x0` the previous answer qualifies.
fn nearest_window(xs: &[f64], x0: f64, window: usize, from: usize) -> usize {
    let mut lo = from;
    while lo + window < xs.len() && xs[lo + window] - x0 < x0 - xs[lo] {
        lo += 1;
    }
    lo
}

/// Slope of the tricube-weighted least squares line through the points
/// `lo..hi` around `x0`. `xs` must be sorted.
fn local_slope(xs: &[f64], ys: &[f64], x0: f64, mut lo: usize, mut hi: usize) -> Result<f64> {
    let n = xs.len();
    let h = (x0 - xs[lo]).max(xs[hi - 1] - x0);
    if h > 0.0 {
        let inv_h = 1.0 / h;
        let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
        let y0 = ys[lo];
        for i in lo..hi {
            let dx = xs[i] - x0;
            let w = tricube(libm::fabs(dx) * inv_h);
            if w > 0.0 {
                let dy = ys[i] - y0;
                sw += w;
                sx += w * dx;
                sy += w * dy;
                sxx += w * dx * dx;
                sxy += w * dx * dy;
                min_x = min_x.min(xs[i]);
                max_x = max_x.max(xs[i]);
            }
        }
        if max_x > min_x {
            let cxx = sxx - sx * sx / sw;
            let cxy = sxy - sx * sy / sw;
            if cxx > 0.0 {
                return Ok(cxy / cxx);
            }
        }
    }

    // Degenerate window: widen to the nearest points until two distinct FPR
    // values are covered and take the secant across the range.
    while xs[hi - 1] <= xs[lo] {
        let left = (lo > 0).then(|| x0 - xs[lo - 1]);
        let right = (hi < n).then(|| xs[hi] - x0);
        match (left, right) {
            (Some(l), Some(r)) if l <= r => lo -= 1,
            (Some(_), Some(_)) | (None, Some(_)) => hi += 1,
            (Some(_), None) => lo -= 1,
            (None, None) => return Err(Error::DegenerateWindow),
        }
    }
    Ok((ys[hi - 1] - ys[lo]) / (xs[hi - 1] - xs[lo]))
}

fn tricube(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        let v = 1.0 - u * u * u;
        v * v * v
    }
}

/// Slope at `fpr`, interpolated linearly between knots and held constant
/// beyond the outermost knots.
pub fn eval_slope(sf: &SlopeFunction, fpr: f64) -> Result<f64> {
    if !fpr.is_finite() {
        return Err(Error::NonFinite(fpr));
    }
    let xs = &sf.knot_fpr;
    let ys = &sf.knot_slope;
    let last = xs.len() - 1;
    let v = if fpr <= xs[0] {
        ys[0]
    } else if fpr >= xs[last] {
        ys[last]
    } else {
        let hi = xs.partition_point(|&x| x <= fpr);
        let lo = hi - 1;
        if xs[lo] == fpr {
            ys[lo]
        } else {
            let t = (fpr - xs[lo]) / (xs[hi] - xs[lo]);
            let v = ys[lo] + t * (ys[hi] - ys[lo]);
            v.clamp(ys[lo].min(ys[hi]), ys[lo].max(ys[hi]))
        }
    };
    Ok(v.max(sf.floor))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Weighted least squares projection of `ys` onto monotone sequences, by
/// pool-adjacent-violators.
pub fn isotonic_fit(
    xs: &[f64],
    ys: &[f64],
    weights: &[f64],
    direction: Direction,
) -> Result<Vec<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if weights.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: weights.len(),
            right: ys.len(),
        });
    }
    if xs.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(core::cmp::Ordering::Greater)) {
        return Err(Error::NotIncreasing);
    }
    if let Some(&y) = ys.iter().find(|y| !y.is_finite()) {
        return Err(Error::NonFinite(y));
    }
    if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::BadWeight(w));
    }

    let sign = match direction {
        Direction::Increasing => 1.0,
        Direction::Decreasing => -1.0,
    };

    // blocks of (weighted mean, total weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(ys.len());
    for (&y, &w) in ys.iter().zip(weights) {
        let mut block = (sign * y, w, 1usize);
        while let Some(&(prev_mean, prev_w, prev_len)) = blocks.last() {
            if prev_mean <= block.0 {
                break;
            }
            let total = prev_w + block.1;
            block = (
                (prev_mean * prev_w + block.0 * block.1) / total,
                total,
                prev_len + block.2,
            );
            blocks.pop();
        }
        blocks.push(block);
    }

    let mut out = Vec::with_capacity(ys.len());
    for (mean, _, len) in blocks {
        out.extend(core::iter::repeat_n(sign * mean, len));
    }
    Ok(out)
}

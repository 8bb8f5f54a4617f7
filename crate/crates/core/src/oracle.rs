//! Ground truth for checking optimal rankings.
//!
//! Everything here is deliberately naive: exact enumeration over tiny
//! discrete spaces and closed forms for the binormal model.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};

/// A support point of a discrete covariate distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretePoint {
    pub id: usize,
    /// Probability of the point under the distribution being ranked.
    pub mass: f64,
    /// True `P(Y = 1 | x)`, strictly inside (0, 1).
    pub p1: f64,
}

impl DiscretePoint {
    pub fn pos_mass(&self) -> f64 {
        self.mass * self.p1
    }

    pub fn neg_mass(&self) -> f64 {
        self.mass * (1.0 - self.p1)
    }
}

fn check_points(points: &[DiscretePoint]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let mut total = 0.0;
    let mut prior = 0.0;
    for p in points {
        if !(p.mass > 0.0 && p.mass.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "mass",
                reason: "must be positive",
            });
        }
        if !(p.p1 > 0.0 && p.p1 < 1.0) {
            return Err(Error::InvalidParameter {
                name: "p1",
                reason: "must lie strictly inside (0, 1)",
            });
        }
        total += p.mass;
        prior += p.pos_mass();
    }
    if libm::fabs(total - 1.0) > 1e-12 {
        return Err(Error::InvalidParameter {
            name: "mass",
            reason: "masses must sum to 1",
        });
    }
    Ok(prior)
}

/// `OR(x) = p(1|x) p_Y(0) / (p(0|x) p_Y(1))` for every point.
pub fn odds_ratio_rank(points: &[DiscretePoint]) -> Result<Vec<f64>> {
    let prior = check_points(points)?;
    if !(prior > 0.0 && prior < 1.0) {
        return Err(Error::DegeneratePrior(prior));
    }
    Ok(points
        .iter()
        .map(|p| p.p1 * (1.0 - prior) / ((1.0 - p.p1) * prior))
        .collect())
}

/// ROC vertices from ranking `points` by `values`, highest first. Points with
/// equal values enter together.
pub fn ranked_roc(points: &[DiscretePoint], values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if points.len() != values.len() {
        return Err(Error::LengthMismatch {
            left: points.len(),
            right: values.len(),
        });
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(Ordering::Equal));
    let groups: Vec<Vec<usize>> = order
        .chunk_by(|&a, &b| values[a] == values[b])
        .map(|g| g.to_vec())
        .collect();
    Ok(polyline(points, groups.iter().map(|g| g.as_slice())))
}

fn polyline<'a>(
    points: &[DiscretePoint],
    groups: impl Iterator<Item = &'a [usize]>,
) -> Vec<(f64, f64)> {
    let pos_total: f64 = points.iter().map(DiscretePoint::pos_mass).sum();
    let neg_total: f64 = points.iter().map(DiscretePoint::neg_mass).sum();
    let mut out = Vec::with_capacity(points.len() + 1);
    out.push((0.0, 0.0));
    let (mut pos, mut neg) = (0.0, 0.0);
    for g in groups {
        for &i in g {
            pos += points[i].pos_mass();
            neg += points[i].neg_mass();
        }
        out.push((neg / neg_total, pos / pos_total));
    }
    if let Some(last) = out.last_mut() {
        *last = (1.0, 1.0);
    }
    out
}

/// TPR of a polyline at `fpr`; the top of a vertical segment wins.
pub fn polyline_tpr(curve: &[(f64, f64)], fpr: f64) -> f64 {
    let hi = curve.partition_point(|p| p.0 <= fpr);
    if hi == curve.len() {
        return curve[hi - 1].1;
    }
    if hi == 0 {
        return curve[0].1;
    }
    let (a, b) = (curve[hi - 1], curve[hi]);
    if a.0 == fpr {
        return a.1;
    }
    let t = (fpr - a.0) / (b.0 - a.0);
    a.1 + t * (b.1 - a.1)
}

/// Pointwise best TPR over all `K!` orderings of the points, at every FPR
/// vertex any ordering can reach. `K` is capped at 8.
pub fn brute_force_envelope(points: &[DiscretePoint]) -> Result<Vec<(f64, f64)>> {
    let k = points.len();
    if k > 8 {
        return Err(Error::TooLarge(k));
    }
    check_points(points)?;

    let mut curves: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut perm: Vec<usize> = (0..k).collect();
    loop {
        let singles = perm.iter().map(core::slice::from_ref);
        curves.push(polyline(points, singles));
        if !next_permutation(&mut perm) {
            break;
        }
    }

    let mut grid: Vec<f64> = curves.iter().flatten().map(|p| p.0).collect();
    grid.sort_by(f64::total_cmp);
    // the same subset of points summed in different orders can differ in
    // the last bits
    grid.dedup_by(|a, b| *a - *b <= 1e-12);

    Ok(grid
        .into_iter()
        .map(|f| {
            let best = curves
                .iter()
                .map(|c| polyline_tpr(c, f))
                .fold(f64::NEG_INFINITY, f64::max);
            (f, best)
        })
        .collect())
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// ROC slope of the binormal model (positives `N(mu, 1)`, negatives
/// `N(0, 1)`) at a given FPR: the density ratio `exp(mu*eta - mu^2/2)` at the
/// threshold `eta` whose upper tail under `N(0, 1)` is `fpr`.
pub fn binormal_slope(mu: f64, fpr: f64) -> Result<f64> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "mu",
            reason: "must be positive",
        });
    }
    if !(fpr > 0.0 && fpr < 1.0) {
        return Err(Error::InvalidParameter {
            name: "fpr",
            reason: "must lie strictly inside (0, 1)",
        });
    }
    let eta = normal_upper_quantile(fpr);
    Ok(libm::exp(mu * eta - 0.5 * mu * mu))
}

/// Exact ranking value of a binormal stratum: `odds * exp(mu*s - mu^2/2)`.
pub fn binormal_rank_value(mu: f64, odds: f64, score: f64) -> f64 {
    odds * libm::exp(mu * score - 0.5 * mu * mu)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * core::f64::consts::FRAC_1_SQRT_2)
}

/// `x` with `P(Z > x) = p` for standard normal `Z`.
pub fn normal_upper_quantile(p: f64) -> f64 {
    -normal_quantile(p)
}

/// Inverse standard normal CDF: Acklam's rational approximation followed by
/// one Halley step against `erfc`.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.38357751867269e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    const LOW: f64 = 0.02425;

    let x = if p < LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    let e = normal_cdf(x) - p;
    let u = e * libm::sqrt(2.0 * core::f64::consts::PI) * libm::exp(0.5 * x * x);
    x - u / (1.0 + 0.5 * x * u)
}

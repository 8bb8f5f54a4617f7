//! Strata from the first principal component of pooled features.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 10_000;
const ANGLE_TOL: f64 = 1e-10;

/// First principal axis: `project(x) = direction . (x - mean)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaAxis {
    pub mean: Vec<f64>,
    /// Unit vector whose largest-magnitude coordinate is positive.
    pub direction: Vec<f64>,
    /// Sample variance along `direction` (`1/(n-1)` normalization).
    pub eigenvalue: f64,
    pub iterations: usize,
}

/// Fits the top principal axis by power iteration on the sample covariance.
///
/// The start vector is the normalized vector of covariance column sums; if
/// that vanishes, the covariance column with the largest norm is used.
pub fn fit_pca1<R: AsRef<[f64]>>(rows: &[R]) -> Result<PcaAxis> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let d = rows[0].as_ref().len();
    if d == 0 {
        return Err(Error::InvalidParameter {
            name: "features",
            reason: "need at least one column",
        });
    }
    let mut mean = vec![0.0; d];
    let mut scale: f64 = 0.0;
    for row in rows {
        let row = row.as_ref();
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        for (m, &x) in mean.iter_mut().zip(row) {
            if !x.is_finite() {
                return Err(Error::NonFinite(x));
            }
            *m += x;
            scale = scale.max(libm::fabs(x));
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let mut cov = vec![0.0; d * d];
    let mut centered = vec![0.0; d];
    for row in rows {
        for ((c, &x), &m) in centered.iter_mut().zip(row.as_ref()).zip(&mean) {
            *c = x - m;
        }
        for i in 0..d {
            let ci = centered[i];
            for j in i..d {
                cov[i * d + j] += ci * centered[j];
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / denom;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }

    let trace: f64 = (0..d).map(|i| cov[i * d + i]).sum();
    let tiny = 1e-12 * scale.max(f64::MIN_POSITIVE);
    if trace.partial_cmp(&(d as f64 * tiny * tiny)) != Some(core::cmp::Ordering::Greater) {
        return Err(Error::ZeroVariance);
    }

    let mut v: Vec<f64> = (0..d).map(|i| (0..d).map(|j| cov[i * d + j]).sum()).collect();
    if norm(&v) <= 1e-12 * trace {
        let best = (0..d)
            .max_by(|&a, &b| {
                let na = norm(&cov[a * d..(a + 1) * d]);
                let nb = norm(&cov[b * d..(b + 1) * d]);
                na.total_cmp(&nb).then(b.cmp(&a))
            })
            .unwrap_or(0);
        v = cov[best * d..(best + 1) * d].to_vec();
    }
    normalize(&mut v);

    let mut next = vec![0.0; d];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        mat_vec(&cov, &v, &mut next);
        let len = norm(&next);
        if len == 0.0 {
            return Err(Error::ZeroVariance);
        }
        for x in &mut next {
            *x /= len;
        }
        let diff: f64 = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        core::mem::swap(&mut v, &mut next);
        if libm::sqrt(diff) < ANGLE_TOL {
            break;
        }
    }

    let lead = (0..d)
        .max_by(|&a, &b| libm::fabs(v[a]).total_cmp(&libm::fabs(v[b])).then(b.cmp(&a)))
        .unwrap_or(0);
    if v[lead] < 0.0 {
        for x in &mut v {
            *x = -*x;
        }
    }
    mat_vec(&cov, &v, &mut next);
    let eigenvalue = dot(&v, &next).max(0.0);

    Ok(PcaAxis {
        mean,
        direction: v,
        eigenvalue,
        iterations,
    })
}

fn mat_vec(m: &[f64], v: &[f64], out: &mut [f64]) {
    let d = v.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = dot(&m[i * d..(i + 1) * d], v);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(dot(v, v))
}

fn normalize(v: &mut [f64]) {
    let len = norm(v);
    for x in v {
        *x /= len;
    }
}

/// First principal component score of `x`.
pub fn project(axis: &PcaAxis, x: &[f64]) -> Result<f64> {
    if x.len() != axis.mean.len() {
        return Err(Error::DimensionMismatch {
            expected: axis.mean.len(),
            got: x.len(),
        });
    }
    Ok(x.iter()
        .zip(&axis.mean)
        .zip(&axis.direction)
        .map(|((xi, m), u)| (xi - m) * u)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrataMode {
    /// Two strata split at projection 0.
    Sign,
    /// `J` strata cut at the empirical `k/J` quantiles.
    Quantile,
}

/// Thresholds `c_1 < ... < c_J` with `c_1 = -inf`, and the stratum of each
/// input projection. Stratum ids run from 1 to `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrataAssignment {
    pub thresholds: Vec<f64>,
    pub ids: Vec<u32>,
}

impl StrataAssignment {
    /// Stratum of a projection: the `j` with `c_j <= s < c_{j+1}`.
    pub fn stratum_of(&self, projection: f64) -> u32 {
        self.thresholds[1..].partition_point(|&c| c <= projection) as u32 + 1
    }

    pub fn num_strata(&self) -> usize {
        self.thresholds.len()
    }
}

pub fn make_strata(projections: &[f64], j: usize, mode: StrataMode) -> Result<StrataAssignment> {
    if j < 2 {
        return Err(Error::InvalidParameter {
            name: "j",
            reason: "need at least 2 strata",
        });
    }
    if projections.len() < j {
        return Err(Error::TooFewPoints {
            needed: j,
            got: projections.len(),
        });
    }
    if let Some(&s) = projections.iter().find(|s| !s.is_finite()) {
        return Err(Error::NonFinite(s));
    }
    let thresholds = match mode {
        StrataMode::Sign => {
            if j != 2 {
                return Err(Error::BadMode(j));
            }
            vec![f64::NEG_INFINITY, 0.0]
        }
        StrataMode::Quantile => {
            let mut sorted = projections.to_vec();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len();
            let mut t = vec![f64::NEG_INFINITY];
            t.extend((1..j).map(|k| sorted[k * n / j]));
            t
        }
    };
    let mut out = StrataAssignment {
        thresholds,
        ids: Vec::new(),
    };
    out.ids = projections.iter().map(|&s| out.stratum_of(s)).collect();
    if mode == StrataMode::Quantile {
        let mut counts = vec![0usize; j];
        for &id in &out.ids {
            counts[id as usize - 1] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyStratum(empty as u32 + 1));
        }
    }
    Ok(out)
}

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rocrecal_core::ScoredRecord;

/// Tie-corrected Mann-Whitney statistic by explicit pair enumeration.
pub fn mann_whitney(scores: &[f64], labels: &[bool]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                total += 1.0;
            } else if si == sj {
                total += 0.5;
            }
        }
    }
    total / pairs
}

/// Exact isotonic fit by enumerating every partition of `0..n` into
/// consecutive blocks, fitting block means and keeping the best monotone
/// candidate.
pub fn brute_force_isotonic(ys: &[f64], ws: &[f64], increasing: bool) -> Vec<f64> {
    let n = ys.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        let mut fit = vec![0.0; n];
        let mut start = 0;
        for end in 1..=n {
            let cut = end == n || mask & (1 << (end - 1)) != 0;
            if cut {
                let w: f64 = ws[start..end].iter().sum();
                let m: f64 = ys[start..end]
                    .iter()
                    .zip(&ws[start..end])
                    .map(|(y, w)| y * w)
                    .sum::<f64>()
                    / w;
                fit[start..end].iter_mut().for_each(|v| *v = m);
                start = end;
            }
        }
        let monotone = fit
            .windows(2)
            .all(|p| if increasing { p[0] <= p[1] } else { p[0] >= p[1] });
        if !monotone {
            continue;
        }
        let sse: f64 = fit
            .iter()
            .zip(ys)
            .zip(ws)
            .map(|((f, y), w)| w * (f - y) * (f - y))
            .sum();
        if best.as_ref().is_none_or(|b| sse < b.0) {
            best = Some((sse, fit));
        }
    }
    best.unwrap().1
}

/// Positives ~ N(mu, 1), negatives ~ N(0, 1).
pub fn binormal(mu: f64, n_per_class: usize, stratum: u32, seed: u64) -> Vec<ScoredRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * n_per_class);
    for _ in 0..n_per_class {
        let z: f64 = rng.sample(StandardNormal);
        out.push(ScoredRecord::labeled(mu + z, true, stratum).unwrap());
        let z: f64 = rng.sample(StandardNormal);
        out.push(ScoredRecord::labeled(z, false, stratum).unwrap());
    }
    out
}

/// Standard normal upper quantile by bisection on `0.5 * erfc(x / sqrt 2)`.
pub fn upper_quantile_bisect(p: f64) -> f64 {
    let tail = |x: f64| 0.5 * libm::erfc(x / std::f64::consts::SQRT_2);
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Eigenpairs of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| m[i][i]).collect();
    let vectors = (0..n).map(|j| (0..n).map(|i| v[i][j]).collect()).collect();
    (values, vectors)
}

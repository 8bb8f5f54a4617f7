//! Synthetic data with stratified sampling bias, and a weighted logistic
//! scorer.
//!
//! The population has two strata split on the sign of the first feature.
//! Within a stratum the features are Gaussian (truncated to the stratum's
//! half-space) and the label follows a logistic model with linear and
//! squared terms, so a purely linear scorer is mis-specified whenever a
//! squared coefficient is nonzero. Training data is drawn from the same
//! population and then thinned per (stratum, class).

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::oracle::normal_cdf;
use crate::seed::derive;

const TAG_PILOT: u64 = 0x70;
const TAG_TEST: u64 = 0x71;
const TAG_TRAIN: u64 = 0x72;

/// Stratum 1 holds `x[0] < 0`, stratum 2 holds `x[0] >= 0`.
pub fn stratum_of(features: &[f64]) -> u32 {
    if features[0] < 0.0 {
        1
    } else {
        2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratumSpec {
    /// Population share of the stratum (normalized across strata).
    pub weight: f64,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub intercept: f64,
    pub linear: Vec<f64>,
    pub quadratic: Vec<f64>,
    /// Probability that a negative is kept in the training sample.
    pub keep_neg: f64,
    /// Probability that a positive is kept in the training sample.
    pub keep_pos: f64,
}

impl StratumSpec {
    pub fn logit(&self, x: &[f64]) -> f64 {
        let mut z = self.intercept;
        for ((xi, a), b) in x.iter().zip(&self.linear).zip(&self.quadratic) {
            z += a * xi + b * xi * xi;
        }
        z
    }

    /// Probability that a draw from the untruncated Gaussian lands in the
    /// stratum's half-space.
    fn acceptance(&self, stratum: u32) -> f64 {
        let z = self.mean[0] / self.sd[0];
        if stratum == 1 {
            normal_cdf(-z)
        } else {
            normal_cdf(z)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub d: usize,
    /// Strata 1 and 2, in that order.
    pub strata: [StratumSpec; 2],
    /// Population draws for the training sample, before thinning.
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    /// Demand a nonzero squared term in some stratum.
    pub misspecified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: bool,
    pub stratum: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl SyntheticSpec {
    pub fn stratum(&self, id: u32) -> &StratumSpec {
        &self.strata[id as usize - 1]
    }

    /// True `P(Y = 1 | x)`.
    pub fn p1(&self, x: &[f64]) -> f64 {
        sigmoid(self.stratum(stratum_of(x)).logit(x))
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InfeasibleSpec("need at least one feature"));
        }
        for (k, s) in self.strata.iter().enumerate() {
            if [&s.mean, &s.sd, &s.linear, &s.quadratic]
                .iter()
                .any(|v| v.len() != self.d)
            {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    got: s.mean.len().min(s.sd.len()).min(s.linear.len()).min(s.quadratic.len()),
                });
            }
            if !(s.weight > 0.0 && s.weight.is_finite()) {
                return Err(Error::InfeasibleSpec("stratum weights must be positive"));
            }
            if s.sd.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::InfeasibleSpec("standard deviations must be positive"));
            }
            let finite = |v: &Vec<f64>| v.iter().all(|x| x.is_finite());
            if !(finite(&s.mean) && finite(&s.linear) && finite(&s.quadratic))
                || !s.intercept.is_finite()
            {
                return Err(Error::InfeasibleSpec("parameters must be finite"));
            }
            for keep in [s.keep_neg, s.keep_pos] {
                if !(keep > 0.0 && keep <= 1.0) {
                    return Err(Error::InfeasibleSpec("sampling rates must lie in (0, 1]"));
                }
            }
            if s.acceptance(k as u32 + 1) < 1e-3 {
                return Err(Error::InfeasibleSpec(
                    "stratum Gaussian puts almost no mass on its side of x1 = 0",
                ));
            }
        }
        if self.misspecified && self.strata.iter().all(|s| s.quadratic.iter().all(|&q| q == 0.0)) {
            return Err(Error::InfeasibleSpec(
                "mis-specification requested but every squared term is zero",
            ));
        }
        Ok(())
    }

    fn shares(&self) -> [f64; 2] {
        let total = self.strata[0].weight + self.strata[1].weight;
        [self.strata[0].weight / total, self.strata[1].weight / total]
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Sample {
        let stratum = if rng.random::<f64>() < self.shares()[0] { 1 } else { 2 };
        self.draw_in(stratum, rng)
    }

    fn draw_in(&self, stratum: u32, rng: &mut ChaCha8Rng) -> Sample {
        let spec = self.stratum(stratum);
        let mut features = vec![0.0; self.d];
        loop {
            for (x, (m, s)) in features.iter_mut().zip(spec.mean.iter().zip(&spec.sd)) {
                let z: f64 = rng.sample(StandardNormal);
                *x = m + s * z;
            }
            if stratum_of(&features) == stratum {
                break;
            }
        }
        let label = rng.random::<f64>() < sigmoid(spec.logit(&features));
        Sample {
            features,
            label,
            stratum,
        }
    }

    /// Monte Carlo estimate of `P(Y = 1 | G = g)` for both strata.
    pub fn positive_rates(&self, draws: usize, seed: u64) -> [f64; 2] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rates = [0.0; 2];
        for (k, rate) in rates.iter_mut().enumerate() {
            let pos = (0..draws)
                .filter(|_| self.draw_in(k as u32 + 1, &mut rng).label)
                .count();
            *rate = pos as f64 / draws as f64;
        }
        rates
    }
}

/// Draws the test sample from the population and the training sample from
/// the population thinned by the per-(stratum, class) keep rates.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let rates = spec.positive_rates(4000, derive(spec.seed, TAG_PILOT));
    let shares = spec.shares();
    for k in 0..2 {
        let s = &spec.strata[k];
        let cells = [
            spec.n_test as f64 * shares[k] * rates[k],
            spec.n_test as f64 * shares[k] * (1.0 - rates[k]),
            spec.n_train as f64 * shares[k] * rates[k] * s.keep_pos,
            spec.n_train as f64 * shares[k] * (1.0 - rates[k]) * s.keep_neg,
        ];
        if cells.iter().any(|&c| c < 5.0) {
            return Err(Error::InfeasibleSpec(
                "a (stratum, class) cell expects fewer than 5 records",
            ));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive(spec.seed, TAG_TEST));
    let test = (0..spec.n_test).map(|_| spec.draw(&mut rng)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(derive(spec.seed, TAG_TRAIN));
    let mut train = Vec::with_capacity(spec.n_train);
    for _ in 0..spec.n_train {
        let s = spec.draw(&mut rng);
        let st = spec.stratum(s.stratum);
        let keep = if s.label { st.keep_pos } else { st.keep_neg };
        if rng.random::<f64>() < keep {
            train.push(s);
        }
    }
    Ok(SyntheticData { train, test })
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + libm::log1p(libm::exp(-z))
    } else {
        libm::log1p(libm::exp(z))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassWeights {
    pub w0: f64,
    pub w1: f64,
}

impl Default for ClassWeights {
    fn default() -> Self {
        Self { w0: 1.0, w1: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticConfig {
    pub class_weights: ClassWeights,
    /// Keep rate for records of the majority class, applied before fitting.
    pub undersample: Option<f64>,
    pub l2: f64,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    /// Stop once the max-norm of the gradient falls to this value.
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            class_weights: ClassWeights::default(),
            undersample: None,
            l2: 1e-4,
            epochs: 2000,
            lr: 1.0,
            seed: 0,
            tol: 1e-6,
        }
    }
}

/// Linear scorer `intercept + coefficients . x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub class_weights: ClassWeights,
    pub l2: f64,
    pub epochs_run: usize,
    pub converged: bool,
    /// Records actually used after under-sampling.
    pub n_used: usize,
}

/// Weighted, L2-regularized logistic loss and its gradient.
///
/// `loss = sum_i w_i (softplus(z_i) - y_i z_i) / sum_i w_i + l2/2 |coef|^2`
/// with `z_i = intercept + coef . x_i`; the intercept is not penalized. The
/// gradient is returned as `[d/d intercept, d/d coef...]`.
pub fn logistic_objective<R: AsRef<[f64]>>(
    rows: &[R],
    labels: &[bool],
    weights: &[f64],
    l2: f64,
    intercept: f64,
    coef: &[f64],
) -> (f64, Vec<f64>) {
    let d = coef.len();
    let mut grad = vec![0.0; d + 1];
    let mut loss = 0.0;
    let mut total = 0.0;
    for ((row, &y), &w) in rows.iter().zip(labels).zip(weights) {
        let x = row.as_ref();
        let z = intercept + x.iter().zip(coef).map(|(a, b)| a * b).sum::<f64>();
        let yf = if y { 1.0 } else { 0.0 };
        loss += w * (softplus(z) - yf * z);
        let r = w * (sigmoid(z) - yf);
        grad[0] += r;
        for (g, xi) in grad[1..].iter_mut().zip(x) {
            *g += r * xi;
        }
        total += w;
    }
    loss /= total;
    for g in &mut grad {
        *g /= total;
    }
    for (g, c) in grad[1..].iter_mut().zip(coef) {
        *g += l2 * c;
    }
    loss += 0.5 * l2 * coef.iter().map(|c| c * c).sum::<f64>();
    (loss, grad)
}

/// Fits a linear scorer by full-batch gradient descent on the weighted
/// logistic loss.
///
/// Features are centered internally; with an unpenalized intercept this
/// leaves the optimum unchanged and only improves conditioning.
pub fn fit_logistic<R: AsRef<[f64]>>(
    rows: &[R],
    labels: &[bool],
    cfg: &LogisticConfig,
) -> Result<ScoreModel> {
    if rows.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: rows.len(),
            right: labels.len(),
        });
    }
    let ClassWeights { w0, w1 } = cfg.class_weights;
    if !(w0 > 0.0 && w1 > 0.0 && w0.is_finite() && w1.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "class_weights",
            reason: "must be positive",
        });
    }
    if !(cfg.l2 >= 0.0 && cfg.lr > 0.0 && cfg.l2.is_finite() && cfg.lr.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "l2/lr",
            reason: "l2 must be nonnegative and lr positive",
        });
    }
    let d = rows.first().map_or(0, |r| r.as_ref().len());
    for r in rows {
        if r.as_ref().len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: r.as_ref().len(),
            });
        }
        if let Some(&x) = r.as_ref().iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(x));
        }
    }

    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    let mut keep: Vec<usize> = (0..rows.len()).collect();
    if let Some(rate) = cfg.undersample {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "undersample",
                reason: "keep rate must lie in (0, 1]",
            });
        }
        let majority = n_pos > n_neg;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        keep.retain(|&i| labels[i] != majority || rng.random::<f64>() < rate);
    }
    let used_pos = keep.iter().filter(|&&i| labels[i]).count();
    if used_pos == 0 || used_pos == keep.len() {
        return Err(Error::EmptyClassAfterSampling);
    }

    let weights: Vec<f64> = keep.iter().map(|&i| if labels[i] { w1 } else { w0 }).collect();
    let used_labels: Vec<bool> = keep.iter().map(|&i| labels[i]).collect();
    let total: f64 = weights.iter().sum();
    let mut center = vec![0.0; d];
    for (&i, &w) in keep.iter().zip(&weights) {
        for (c, x) in center.iter_mut().zip(rows[i].as_ref()) {
            *c += w * x;
        }
    }
    for c in &mut center {
        *c /= total;
    }
    let centered: Vec<Vec<f64>> = keep
        .iter()
        .map(|&i| {
            rows[i]
                .as_ref()
                .iter()
                .zip(&center)
                .map(|(x, c)| x - c)
                .collect()
        })
        .collect();

    let mut intercept = 0.0;
    let mut coef = vec![0.0; d];
    let mut epochs_run = 0;
    let mut converged = false;
    while epochs_run < cfg.epochs {
        let (_, grad) = logistic_objective(&centered, &used_labels, &weights, cfg.l2, intercept, &coef);
        if grad.iter().all(|g| libm::fabs(*g) <= cfg.tol) {
            converged = true;
            break;
        }
        intercept -= cfg.lr * grad[0];
        for (c, g) in coef.iter_mut().zip(&grad[1..]) {
            *c -= cfg.lr * g;
        }
        epochs_run += 1;
    }
    if !converged {
        let (_, grad) = logistic_objective(&centered, &used_labels, &weights, cfg.l2, intercept, &coef);
        converged = grad.iter().all(|g| libm::fabs(*g) <= cfg.tol);
    }
    intercept -= coef.iter().zip(&center).map(|(a, c)| a * c).sum::<f64>();

    Ok(ScoreModel {
        coefficients: coef,
        intercept,
        class_weights: cfg.class_weights,
        l2: cfg.l2,
        epochs_run,
        converged,
        n_used: keep.len(),
    })
}

/// Linear score, before the sigmoid.
pub fn predict(model: &ScoreModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.coefficients.len() {
        return Err(Error::DimensionMismatch {
            expected: model.coefficients.len(),
            got: x.len(),
        });
    }
    Ok(model.intercept + x.iter().zip(&model.coefficients).map(|(a, b)| a * b).sum::<f64>())
}

mod common;

use proptest::prelude::*;
use rocrecal_core::learn::{
    fit_logistic, generate, logistic_objective, predict, sigmoid, ClassWeights, LogisticConfig,
    Sample, StratumSpec, SyntheticSpec,
};
use rocrecal_core::{auc, compute_roc, Error, ScoredRecord};

fn stratum(mean: f64, intercept: f64, linear: f64, quadratic: f64, keep_neg: f64, keep_pos: f64) -> StratumSpec {
    StratumSpec {
        weight: 1.0,
        mean: vec![mean],
        sd: vec![1.5],
        intercept,
        linear: vec![linear],
        quadratic: vec![quadratic],
        keep_neg,
        keep_pos,
    }
}

fn one_dim(keep: [(f64, f64); 2], seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        d: 1,
        strata: [
            stratum(-1.0, 0.5, 1.0, 0.3, keep[0].0, keep[0].1),
            stratum(1.0, -1.5, 0.8, 0.0, keep[1].0, keep[1].1),
        ],
        n_train: 40_000,
        n_test: 40_000,
        seed,
        misspecified: true,
    }
}

fn positive_rate(samples: &[Sample], stratum: u32) -> (f64, usize) {
    let cell: Vec<&Sample> = samples.iter().filter(|s| s.stratum == stratum).collect();
    let pos = cell.iter().filter(|s| s.label).count();
    (pos as f64 / cell.len() as f64, cell.len())
}

/// P(Y = 1 | stratum) by trapezoid quadrature over the truncated density.
fn quadrature_rate(s: &StratumSpec, stratum: u32) -> f64 {
    let (m, sd) = (s.mean[0], s.sd[0]);
    let (lo, hi) = if stratum == 1 { (m - 12.0 * sd, 0.0) } else { (0.0, m + 12.0 * sd) };
    let steps = 200_000;
    let h = (hi - lo) / steps as f64;
    let (mut mass, mut pos) = (0.0, 0.0);
    for k in 0..=steps {
        let x: f64 = lo + k as f64 * h;
        let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
        let density = (-0.5 * ((x - m) / sd).powi(2)).exp();
        mass += w * density;
        pos += w * density * sigmoid(s.logit(&[x]));
    }
    pos / mass
}

#[test]
fn population_rates_match_quadrature() {
    let spec = one_dim([(1.0, 1.0); 2], 3);
    let draws = 200_000;
    let rates = spec.positive_rates(draws, 99);
    for k in 0..2 {
        let truth = quadrature_rate(&spec.strata[k], k as u32 + 1);
        let se = (truth * (1.0 - truth) / draws as f64).sqrt();
        assert!((rates[k] - truth).abs() < 3.0 * se, "stratum {}: {} vs {}", k + 1, rates[k], truth);
    }
}

#[test]
fn unbiased_sampling_matches_population() {
    let data = generate(&one_dim([(1.0, 1.0); 2], 4)).unwrap();
    for g in [1, 2] {
        let (train, n_train) = positive_rate(&data.train, g);
        let (test, n_test) = positive_rate(&data.test, g);
        let se = (test * (1.0 - test) * (1.0 / n_train as f64 + 1.0 / n_test as f64)).sqrt();
        assert!((train - test).abs() < 3.0 * se, "stratum {g}: {train} vs {test}");
    }
}

#[test]
fn thinning_shifts_training_odds() {
    let keep = [(1.0, 0.2), (0.25, 1.0)];
    let spec = one_dim(keep, 5);
    let data = generate(&spec).unwrap();
    for g in [1u32, 2] {
        let truth = quadrature_rate(spec.stratum(g), g);
        let (kn, kp) = keep[g as usize - 1];
        let expected = truth * kp / (truth * kp + (1.0 - truth) * kn);
        let (rate, n) = positive_rate(&data.train, g);
        let se = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!((rate - expected).abs() < 4.0 * se, "stratum {g}: {rate} vs {expected}");
    }
}

#[test]
fn generation_is_deterministic() {
    let spec = one_dim([(0.5, 1.0); 2], 6);
    assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    let other = SyntheticSpec { seed: 7, ..spec.clone() };
    assert_ne!(generate(&spec).unwrap().test, generate(&other).unwrap().test);
}

#[test]
fn tiny_cells_are_rejected() {
    let mut spec = one_dim([(1.0, 1.0); 2], 1);
    spec.n_train = 20;
    assert!(matches!(generate(&spec), Err(Error::InfeasibleSpec(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gradient_matches_finite_differences(
        rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 5..30),
        labels_seed in any::<u32>(),
        coef in prop::collection::vec(-2.0f64..2.0, 3),
        intercept in -2.0f64..2.0,
        l2 in 0.0f64..0.5,
    ) {
        let labels: Vec<bool> = (0..rows.len()).map(|i| (labels_seed >> (i % 32)) & 1 == 1).collect();
        let weights: Vec<f64> = (0..rows.len()).map(|i| 1.0 + (i % 3) as f64).collect();
        let (_, grad) = logistic_objective(&rows, &labels, &weights, l2, intercept, &coef);
        let h = 1e-6;
        let loss_at = |b: f64, c: &[f64]| logistic_objective(&rows, &labels, &weights, l2, b, c).0;
        let numeric_b = (loss_at(intercept + h, &coef) - loss_at(intercept - h, &coef)) / (2.0 * h);
        let mut numeric = vec![numeric_b];
        for j in 0..3 {
            let mut up = coef.clone();
            let mut down = coef.clone();
            up[j] += h;
            down[j] -= h;
            numeric.push((loss_at(intercept, &up) - loss_at(intercept, &down)) / (2.0 * h));
        }
        for (a, b) in grad.iter().zip(&numeric) {
            prop_assert!((a - b).abs() <= 1e-5 * (1.0 + a.abs()), "{} vs {}", a, b);
        }
    }
}

#[test]
fn separable_points_rank_perfectly() {
    let rows = [[-2.0], [-1.0], [1.0], [2.0]];
    let labels = [false, false, true, true];
    let model = fit_logistic(&rows, &labels, &LogisticConfig::default()).unwrap();
    let records: Vec<ScoredRecord> = rows
        .iter()
        .zip(labels)
        .map(|(x, y)| ScoredRecord::labeled(predict(&model, x).unwrap(), y, 1).unwrap())
        .collect();
    assert_eq!(auc(&compute_roc(&records).unwrap()), 1.0);
}

#[test]
fn doubled_weight_equals_duplicated_positives() {
    let rows: Vec<[f64; 2]> = (0..40)
        .map(|i| [((i * 7) % 11) as f64 / 3.0 - 1.5, ((i * 5) % 13) as f64 / 4.0 - 1.5])
        .collect();
    let labels: Vec<bool> = (0..40).map(|i| (i * 3) % 7 < 3).collect();
    let mut dup_rows = rows.clone();
    let mut dup_labels = labels.clone();
    for (r, &y) in rows.iter().zip(&labels) {
        if y {
            dup_rows.push(*r);
            dup_labels.push(true);
        }
    }
    let cfg = LogisticConfig { epochs: 20_000, tol: 1e-10, ..LogisticConfig::default() };
    let weighted = fit_logistic(
        &rows,
        &labels,
        &LogisticConfig { class_weights: ClassWeights { w0: 1.0, w1: 2.0 }, ..cfg },
    )
    .unwrap();
    let duplicated = fit_logistic(&dup_rows, &dup_labels, &cfg).unwrap();
    assert!((weighted.intercept - duplicated.intercept).abs() < 1e-6);
    for (a, b) in weighted.coefficients.iter().zip(&duplicated.coefficients) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn undersampling_is_seeded_and_keeps_minority() {
    let rows: Vec<[f64; 1]> = (0..1000).map(|i| [i as f64 / 100.0]).collect();
    let labels: Vec<bool> = (0..1000).map(|i| i % 10 == 0).collect();
    let cfg = LogisticConfig { undersample: Some(0.2), seed: 11, ..LogisticConfig::default() };
    let a = fit_logistic(&rows, &labels, &cfg).unwrap();
    let b = fit_logistic(&rows, &labels, &cfg).unwrap();
    assert_eq!(a, b);
    // 100 positives kept plus roughly 180 of 900 negatives
    assert!(a.n_used > 100 + 130 && a.n_used < 100 + 230, "{}", a.n_used);
}

#[test]
fn fitted_scorer_orders_like_truth_when_well_specified() {
    let mut spec = one_dim([(1.0, 1.0); 2], 12);
    for s in &mut spec.strata {
        s.quadratic = vec![0.0];
        s.intercept = 0.0;
        s.linear = vec![1.2];
    }
    spec.misspecified = false;
    let data = generate(&spec).unwrap();
    let rows: Vec<&[f64]> = data.train.iter().map(|s| s.features.as_slice()).collect();
    let labels: Vec<bool> = data.train.iter().map(|s| s.label).collect();
    let model = fit_logistic(&rows, &labels, &LogisticConfig::default()).unwrap();
    assert!((model.coefficients[0] - 1.2).abs() < 0.1, "{:?}", model.coefficients);
    assert!(model.intercept.abs() < 0.1);
}

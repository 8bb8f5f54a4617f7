//! Synthetic experiment: raw pooled scores versus calibrated ranking versus
//! the within-stratum probability baseline, over seeded repetitions.
//!
//! One repetition:
//!
//! 1. generate a biased training sample and an unbiased test sample;
//! 2. assign strata (the generator's split, or the sign/quantiles of the
//!    first principal component of pooled train and test features);
//! 3. split the training sample into a fitting part and a calibration part;
//! 4. fit one logistic scorer per stratum on the fitting part, after class
//!    weighting or majority under-sampling, plus one pooled scorer;
//! 5. fit the calibrator and the probability baseline on the calibration
//!    part, each record weighted by the inverse of its sampling keep rate
//!    so that class odds match the test population;
//! 6. score the test features, and only then read the test labels to
//!    compute AUCs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rocrecal_core::learn::{
    fit_logistic, generate, predict, stratum_of, ClassWeights, LogisticConfig, Sample, ScoreModel,
    SyntheticSpec,
};
use rocrecal_core::seed::{derive, rep_seed};
use rocrecal_core::{
    apply_calibrator, auc, estimate_odds, fit_calibrator, fit_pca1, make_strata,
    project, ProbabilityBaseline, RocCurve, ScoredRecord, StrataCalibrator,
};

use crate::config::{ExperimentConfig, StrataSource, Unbalancing};
use crate::error::{AppError, CoreContext, Result};

const TAG_DATA: u64 = 1;
const TAG_SPLIT: u64 = 2;
const TAG_UNDERSAMPLE: u64 = 0x100;

pub use holdout::{HeldOutLabels, TestInputs};

mod holdout {
    use rocrecal_core::learn::Sample;
    use rocrecal_core::{compute_roc, RocCurve, ScoredRecord};

    use crate::error::{CoreContext, Result};

    /// Test features and strata, without labels.
    #[derive(Debug, Clone, PartialEq)]
    pub struct TestInputs {
        pub features: Vec<Vec<f64>>,
        pub strata: Vec<u32>,
    }

    /// Test labels, readable only through the scoring functions below.
    #[derive(Debug, Clone)]
    pub struct HeldOutLabels(Vec<bool>);

    impl HeldOutLabels {
        pub fn len(&self) -> usize {
            self.0.len()
        }

        pub fn is_empty(&self) -> bool {
            self.0.is_empty()
        }

        /// Pooled ROC of a ranking of the test records.
        pub fn roc(&self, scores: &[f64]) -> Result<RocCurve> {
            let records = scores
                .iter()
                .zip(&self.0)
                .map(|(&s, &y)| ScoredRecord::labeled(s, y, 1))
                .collect::<std::result::Result<Vec<_>, _>>()
                .context("test scores")?;
            compute_roc(&records).context("test ROC")
        }
    }

    /// Separates labels from the test sample. `strata` must be computed
    /// from features alone.
    pub fn withhold(samples: Vec<Sample>, strata: Vec<u32>) -> (TestInputs, HeldOutLabels) {
        let labels = samples.iter().map(|s| s.label).collect();
        let features = samples.into_iter().map(|s| s.features).collect();
        (TestInputs { features, strata }, HeldOutLabels(labels))
    }
}

/// Everything fitted from the training sample of one repetition.
#[derive(Debug, Clone)]
pub struct Fitted {
    pub models: BTreeMap<u32, ScoreModel>,
    pub pooled: ScoreModel,
    pub calibrator: StrataCalibrator,
    pub baseline: ProbabilityBaseline,
}

/// Test-set rankings, in test order.
#[derive(Debug, Clone, PartialEq)]
pub struct TestScores {
    /// Per-stratum scorer outputs pooled as they are.
    pub raw: Vec<f64>,
    pub calibrated: Vec<f64>,
    pub baseline: Vec<f64>,
    /// The single pooled scorer.
    pub single: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepResult {
    pub rep: usize,
    pub seed: u64,
    pub auc_raw: f64,
    pub auc_calibrated: f64,
    pub auc_baseline: f64,
    pub auc_single: f64,
}

impl RepResult {
    fn aucs(&self) -> [f64; 4] {
        [self.auc_raw, self.auc_calibrated, self.auc_baseline, self.auc_single]
    }
}

/// Training-sample composition of one stratum, with the positive rate
/// reweighted to the test population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StratumDiagnostic {
    pub rep: usize,
    pub stratum: u32,
    pub lower_threshold: f64,
    pub n_train: usize,
    pub positive_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    /// Raw, calibrated, baseline, single.
    pub mean: [f64; 4],
    pub se: [f64; 4],
    /// Share of repetitions with calibrated AUC above raw AUC.
    pub win_rate: f64,
    /// Share of repetitions with baseline AUC above raw AUC.
    pub baseline_win_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<RepResult>,
    pub diagnostics: Vec<StratumDiagnostic>,
}

pub const REPORT_HEADER: &str = "rep,seed,auc_raw,auc_calibrated,auc_baseline,auc_single";

impl ExperimentReport {
    pub fn summary(&self) -> Summary {
        let n = self.rows.len() as f64;
        let mut mean = [0.0; 4];
        for r in &self.rows {
            for (m, a) in mean.iter_mut().zip(r.aucs()) {
                *m += a;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut se = [0.0; 4];
        if self.rows.len() > 1 {
            for r in &self.rows {
                for ((s, a), m) in se.iter_mut().zip(r.aucs()).zip(mean) {
                    *s += (a - m) * (a - m);
                }
            }
            se.iter_mut().for_each(|s| *s = (*s / (n - 1.0)).sqrt() / n.sqrt());
        }
        let share = |f: fn(&RepResult) -> bool| self.rows.iter().filter(|r| f(r)).count() as f64 / n;
        Summary {
            mean,
            se,
            win_rate: share(|r| r.auc_calibrated > r.auc_raw),
            baseline_win_rate: share(|r| r.auc_baseline > r.auc_raw),
        }
    }

    /// One row per repetition, then `mean`, `se` and `win_rate` rows. The
    /// `win_rate` row fills the calibrated and baseline columns with the
    /// share of repetitions beating raw.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{REPORT_HEADER}");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.rep, r.seed, r.auc_raw, r.auc_calibrated, r.auc_baseline, r.auc_single
            );
        }
        let s = self.summary();
        let _ = writeln!(out, "mean,,{},{},{},{}", s.mean[0], s.mean[1], s.mean[2], s.mean[3]);
        let _ = writeln!(out, "se,,{},{},{},{}", s.se[0], s.se[1], s.se[2], s.se[3]);
        let _ = writeln!(out, "win_rate,,,{},{},", s.win_rate, s.baseline_win_rate);
        out
    }

    pub fn diagnostics_csv(&self) -> String {
        let mut out = String::from("rep,stratum,lower_threshold,n_train,positive_rate\n");
        for d in &self.diagnostics {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                d.rep, d.stratum, d.lower_threshold, d.n_train, d.positive_rate
            );
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    /// Test ROC of the raw pooled scores in repetition 0.
    pub roc_raw: RocCurve,
    /// Test ROC of the calibrated ranking in repetition 0.
    pub roc_calibrated: RocCurve,
}

#[derive(Debug, Clone)]
pub struct RepOutcome {
    pub result: RepResult,
    pub diagnostics: Vec<StratumDiagnostic>,
    pub roc_raw: RocCurve,
    pub roc_calibrated: RocCurve,
}

/// Runs all repetitions on `workers` threads. The output does not depend
/// on `workers`.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| AppError::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<RepOutcome>> =
        pool.install(|| (0..cfg.reps).into_par_iter().map(|rep| run_rep(cfg, rep)).collect());

    let mut rows = Vec::with_capacity(cfg.reps);
    let mut diagnostics = Vec::new();
    let mut curves = None;
    for outcome in outcomes {
        let o = outcome?;
        rows.push(o.result);
        diagnostics.extend(o.diagnostics);
        curves.get_or_insert((o.roc_raw, o.roc_calibrated));
    }
    let (roc_raw, roc_calibrated) = curves.expect("at least one repetition");
    Ok(ExperimentOutput {
        report: ExperimentReport { rows, diagnostics },
        roc_raw,
        roc_calibrated,
    })
}

pub fn run_rep(cfg: &ExperimentConfig, rep: usize) -> Result<RepOutcome> {
    run_rep_inner(cfg, rep).map_err(|e| AppError::Rep {
        rep,
        source: Box::new(e),
    })
}

fn run_rep_inner(cfg: &ExperimentConfig, rep: usize) -> Result<RepOutcome> {
    let seed = rep_seed(cfg.master_seed, rep as u64);
    let spec = cfg.spec(derive(seed, TAG_DATA));
    let data = generate(&spec).context("generating data")?;

    let (train_strata, test_strata, thresholds) = assign_strata(cfg, &data.train, &data.test)?;
    let (inputs, labels) = holdout::withhold(data.test, test_strata);

    let fitted = fit(cfg, &spec, seed, &data.train, &train_strata)?;
    let scores = fitted.score(&inputs)?;

    let roc_raw = labels.roc(&scores.raw)?;
    let roc_calibrated = labels.roc(&scores.calibrated)?;
    let result = RepResult {
        rep,
        seed,
        auc_raw: auc(&roc_raw),
        auc_calibrated: auc(&roc_calibrated),
        auc_baseline: auc(&labels.roc(&scores.baseline)?),
        auc_single: auc(&labels.roc(&scores.single)?),
    };
    let diagnostics = thresholds
        .iter()
        .enumerate()
        .map(|(k, &lower)| {
            let g = k as u32 + 1;
            let (mut n, mut pos, mut total) = (0, 0.0, 0.0);
            for (s, _) in data.train.iter().zip(&train_strata).filter(|(_, &t)| t == g) {
                let w = inverse_keep(&spec, s);
                n += 1;
                total += w;
                if s.label {
                    pos += w;
                }
            }
            StratumDiagnostic {
                rep,
                stratum: g,
                lower_threshold: lower,
                n_train: n,
                positive_rate: if total > 0.0 { pos / total } else { f64::NAN },
            }
        })
        .collect();
    Ok(RepOutcome {
        result,
        diagnostics,
        roc_raw,
        roc_calibrated,
    })
}

/// Stratum ids for train and test, and the lower threshold of each stratum
/// on its splitting axis.
fn assign_strata(
    cfg: &ExperimentConfig,
    train: &[Sample],
    test: &[Sample],
) -> Result<(Vec<u32>, Vec<u32>, Vec<f64>)> {
    match cfg.mode {
        StrataSource::Given => Ok((
            train.iter().map(|s| s.stratum).collect(),
            test.iter().map(|s| stratum_of(&s.features)).collect(),
            vec![f64::NEG_INFINITY, 0.0],
        )),
        StrataSource::Pca => {
            let pooled: Vec<&[f64]> = train
                .iter()
                .chain(test)
                .map(|s| s.features.as_slice())
                .collect();
            let axis = fit_pca1(&pooled).context("principal axis")?;
            let projections = pooled
                .iter()
                .map(|x| project(&axis, x))
                .collect::<std::result::Result<Vec<f64>, _>>()
                .context("projection")?;
            let assignment =
                make_strata(&projections, cfg.strata, cfg.split.into()).context("strata")?;
            let mut ids = assignment.ids;
            let test_ids = ids.split_off(train.len());
            Ok((ids, test_ids, assignment.thresholds))
        }
    }
}

fn inverse_keep(spec: &SyntheticSpec, s: &Sample) -> f64 {
    let st = spec.stratum(s.stratum);
    1.0 / if s.label { st.keep_pos } else { st.keep_neg }
}

fn logistic_config(cfg: &ExperimentConfig, labels: &[bool], seed: u64) -> LogisticConfig {
    let n_pos = labels.iter().filter(|&&y| y).count();
    let minority_positive = n_pos * 2 <= labels.len();
    let class_weights = match cfg.unbalancing {
        Unbalancing::Weighting if minority_positive => ClassWeights {
            w0: 1.0,
            w1: cfg.minority_weight,
        },
        Unbalancing::Weighting => ClassWeights {
            w0: cfg.minority_weight,
            w1: 1.0,
        },
        _ => ClassWeights::default(),
    };
    LogisticConfig {
        class_weights,
        undersample: (cfg.unbalancing == Unbalancing::Undersampling).then_some(cfg.majority_keep),
        l2: cfg.l2,
        epochs: cfg.epochs,
        lr: cfg.lr,
        seed,
        ..LogisticConfig::default()
    }
}

/// Fits scorers, calibrator and baseline from the training sample alone.
pub fn fit(
    cfg: &ExperimentConfig,
    spec: &SyntheticSpec,
    seed: u64,
    train: &[Sample],
    strata: &[u32],
) -> Result<Fitted> {
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive(seed, TAG_SPLIT)));
    let n_cal = (cfg.calibration_fraction * train.len() as f64).round() as usize;
    let (cal_idx, fit_idx) = order.split_at(n_cal);

    let mut by_stratum: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for &i in fit_idx {
        by_stratum.entry(strata[i]).or_default().push(i);
    }
    let mut models = BTreeMap::new();
    for (&g, idx) in &by_stratum {
        let rows: Vec<&[f64]> = idx.iter().map(|&i| train[i].features.as_slice()).collect();
        let labels: Vec<bool> = idx.iter().map(|&i| train[i].label).collect();
        let lc = logistic_config(cfg, &labels, derive(seed, TAG_UNDERSAMPLE + g as u64));
        let model = fit_logistic(&rows, &labels, &lc).context(&format!("scorer for stratum {g}"))?;
        models.insert(g, model);
    }
    let rows: Vec<&[f64]> = fit_idx.iter().map(|&i| train[i].features.as_slice()).collect();
    let labels: Vec<bool> = fit_idx.iter().map(|&i| train[i].label).collect();
    let pooled = fit_logistic(&rows, &labels, &logistic_config(cfg, &labels, derive(seed, TAG_UNDERSAMPLE)))
        .context("pooled scorer")?;

    let mut cal_records = Vec::with_capacity(cal_idx.len());
    for &i in cal_idx {
        let s = &train[i];
        let g = strata[i];
        let model = models.get(&g).ok_or_else(|| {
            AppError::core("calibration", rocrecal_core::Error::UnknownStratum(g))
        })?;
        let score = predict(model, &s.features).context("scoring calibration data")?;
        let record = ScoredRecord::labeled(score, s.label, g)
            .and_then(|r| r.with_weight(inverse_keep(spec, s)))
            .context("calibration record")?;
        cal_records.push(record);
    }
    let calibrator = fit_calibrator(&cal_records, &cfg.calibrator()).context("calibrator")?;

    let mut target_odds = BTreeMap::new();
    for &g in calibrator.strata().keys() {
        let (labels, weights): (Vec<bool>, Vec<f64>) = cal_records
            .iter()
            .filter(|r| r.stratum() == g)
            .map(|r| (r.label() == Some(true), r.weight()))
            .unzip();
        let odds = estimate_odds(&labels, &weights, cfg.laplace).context(&format!("odds of stratum {g}"))?;
        target_odds.insert(g, odds);
    }
    let unweighted = cal_records
        .iter()
        .map(|r| ScoredRecord::new(r.score(), r.label(), r.stratum()))
        .collect::<std::result::Result<Vec<_>, _>>()
        .context("baseline records")?;
    let baseline = ProbabilityBaseline::fit(&unweighted, &target_odds).context("baseline")?;

    Ok(Fitted {
        models,
        pooled,
        calibrator,
        baseline,
    })
}

impl Fitted {
    pub fn score(&self, inputs: &TestInputs) -> Result<TestScores> {
        let mut raw = Vec::with_capacity(inputs.features.len());
        let mut single = Vec::with_capacity(inputs.features.len());
        for (x, g) in inputs.features.iter().zip(&inputs.strata) {
            let model = self.models.get(g).ok_or_else(|| {
                AppError::core("test scoring", rocrecal_core::Error::UnknownStratum(*g))
            })?;
            raw.push(predict(model, x).context("test scoring")?);
            single.push(predict(&self.pooled, x).context("test scoring")?);
        }
        let records = raw
            .iter()
            .zip(&inputs.strata)
            .map(|(&s, &g)| ScoredRecord::new(s, None, g))
            .collect::<std::result::Result<Vec<_>, _>>()
            .context("test records")?;
        let calibrated = apply_calibrator(&self.calibrator, &records)
            .context("calibrating test scores")?
            .into_iter()
            .map(|c| c.rank_value)
            .collect();
        let baseline = self.baseline.apply(&records).context("baseline test scores")?;
        Ok(TestScores {
            raw,
            calibrated,
            baseline,
            single,
        })
    }
}

/// Splits a test sample for callers that want to run [`fit`] and
/// [`Fitted::score`] themselves. Strata are the generator's split.
pub fn withhold_test(test: Vec<Sample>) -> (TestInputs, HeldOutLabels) {
    let strata = test.iter().map(|s| stratum_of(&s.features)).collect();
    holdout::withhold(test, strata)
}

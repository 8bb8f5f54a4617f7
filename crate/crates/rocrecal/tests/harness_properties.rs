use rocrecal::config::{ExperimentConfig, StrataSource, Unbalancing};
use rocrecal::harness::{fit, run_experiment, run_rep, withhold_test, ExperimentReport, REPORT_HEADER};
use rocrecal_core::learn::generate;
use rocrecal_core::seed::{derive, rep_seed};

fn small(reps: usize) -> ExperimentConfig {
    ExperimentConfig {
        reps,
        n_train: 3000,
        n_test: 2000,
        master_seed: 21,
        ..ExperimentConfig::default()
    }
}

#[test]
fn same_seed_same_report() {
    let cfg = small(1);
    let a = run_experiment(&cfg, 1).unwrap();
    let b = run_experiment(&cfg, 1).unwrap();
    assert_eq!(a.report.to_csv(), b.report.to_csv());
    assert_eq!(a.report.rows[0].seed, rep_seed(21, 0));
}

#[test]
fn worker_count_does_not_matter() {
    let cfg = ExperimentConfig {
        mode: StrataSource::Pca,
        ..small(6)
    };
    let one = run_experiment(&cfg, 1).unwrap();
    let four = run_experiment(&cfg, 4).unwrap();
    assert_eq!(one.report, four.report);
    assert_eq!(one.report.diagnostics_csv(), four.report.diagnostics_csv());
    assert_eq!(one.roc_calibrated, four.roc_calibrated);
}

#[test]
fn summary_rows_recompute_from_rep_rows() {
    let report = run_experiment(&small(5), 2).unwrap().report;
    let csv = report.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(REPORT_HEADER));
    let table: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
    let reps: Vec<[f64; 4]> = table[..5]
        .iter()
        .map(|r| [2, 3, 4, 5].map(|c| r[c].parse().unwrap()))
        .collect();
    for c in 0..4 {
        let values: Vec<f64> = reps.iter().map(|r| r[c]).collect();
        let mean = values.iter().sum::<f64>() / 5.0;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
        let se = (var / 5.0).sqrt();
        let got_mean: f64 = table[5][c + 2].parse().unwrap();
        let got_se: f64 = table[6][c + 2].parse().unwrap();
        assert!((got_mean - mean).abs() < 1e-12);
        assert!((got_se - se).abs() < 1e-12);
        assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
    }
    let wins = reps.iter().filter(|r| r[1] > r[0]).count() as f64 / 5.0;
    assert_eq!(table[7][0], "win_rate");
    assert_eq!(table[7][3].parse::<f64>().unwrap(), wins);
    assert_eq!(table.len(), 8);
}

#[test]
fn summary_of_handmade_rows() {
    use rocrecal::harness::RepResult;
    let row = |rep, raw, cal| RepResult {
        rep,
        seed: 0,
        auc_raw: raw,
        auc_calibrated: cal,
        auc_baseline: raw,
        auc_single: raw,
    };
    let report = ExperimentReport {
        rows: vec![row(0, 0.6, 0.7), row(1, 0.8, 0.7)],
        diagnostics: Vec::new(),
    };
    let s = report.summary();
    assert!((s.mean[0] - 0.7).abs() < 1e-15);
    assert!((s.se[0] - 0.1).abs() < 1e-12);
    assert_eq!(s.se[1], 0.0);
    assert_eq!(s.win_rate, 0.5);
}

#[test]
fn test_labels_do_not_reach_fitting() {
    let cfg = small(1);
    let seed = rep_seed(cfg.master_seed, 0);
    let spec = cfg.spec(derive(seed, 1));
    let data = generate(&spec).unwrap();
    let strata: Vec<u32> = data.train.iter().map(|s| s.stratum).collect();
    let fitted = fit(&cfg, &spec, seed, &data.train, &strata).unwrap();

    let mut flipped = data.test.clone();
    flipped.iter_mut().for_each(|s| s.label = !s.label);
    let (inputs, _) = withhold_test(data.test);
    let (inputs_flipped, _) = withhold_test(flipped);
    assert_eq!(inputs, inputs_flipped);
    assert_eq!(fitted.score(&inputs).unwrap(), fitted.score(&inputs_flipped).unwrap());
}

#[test]
fn all_unbalancing_modes_run() {
    for unbalancing in [Unbalancing::None, Unbalancing::Weighting, Unbalancing::Undersampling] {
        let cfg = ExperimentConfig {
            unbalancing,
            ..small(1)
        };
        let out = run_rep(&cfg, 0).unwrap();
        assert!(out.result.auc_calibrated > 0.5);
    }
}

#[test]
fn errors_carry_the_repetition() {
    // almost no positives survive: a (stratum, class) cell is too small
    let cfg = ExperimentConfig {
        s2_intercept: -12.0,
        ..small(3)
    };
    let err = run_experiment(&cfg, 2).unwrap_err();
    assert!(err.to_string().starts_with("repetition 0:"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

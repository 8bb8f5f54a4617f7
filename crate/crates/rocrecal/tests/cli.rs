use std::path::Path;
use std::process::{Command, Output};

fn rocrecal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rocrecal"))
        .args(args)
        .output()
        .unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn calibration_file(dir: &Path) -> std::path::PathBuf {
    let mut text = String::from("id,score,label,stratum\n");
    for i in 0..300 {
        let stratum = 1 + i % 2;
        let label = (i * 7919) % 10 < if stratum == 1 { 7 } else { 2 };
        let score = ((i * 37) % 101) as f64 / 100.0 + if label { 0.4 } else { 0.0 };
        text.push_str(&format!("c{i},{score},{},{stratum}\n", label as u8));
    }
    let path = dir.join("cal.csv");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn roc_prints_auc_and_writes_points() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    std::fs::write(&input, "id,score,label,stratum\na,0.9,1,1\nb,0.5,0,1\nc,0.5,1,1\nd,0.1,0,1\n").unwrap();
    let out = dir.path().join("roc.csv");
    let o = rocrecal(&["roc", "--in", path_str(&input), "--out", path_str(&out)]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "auc 0.875");
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("threshold,fpr,tpr\ninf,0,0\n"));
}

#[test]
fn calib_fit_then_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cal_in = calibration_file(dir.path());
    let model = dir.path().join("model.cal");
    let o = rocrecal(&[
        "calib", "fit", "--in", path_str(&cal_in), "--span", "0.1", "--monotone", "true",
        "--floor", "1e-6", "--laplace", "false", "--out", path_str(&model),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(&model).unwrap().starts_with("rocrecal-cal v1\n"));

    let test = dir.path().join("test.csv");
    std::fs::write(&test, "id,score,stratum\nt1,0.2,1\nt2,0.9,2\nt3,1.2,1\n").unwrap();
    let ranked = dir.path().join("ranked.csv");
    let o = rocrecal(&["calib", "apply", "--cal", path_str(&model), "--in", path_str(&test), "--out", path_str(&ranked)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&ranked).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "id,stratum,raw_score,fpr,rank_value,rank_position");
    assert_eq!(lines.len(), 4);
    let positions: Vec<&str> = lines[1..].iter().map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(positions, ["1", "2", "3"]);
    // within stratum 1 the higher raw score comes first
    let t3 = lines.iter().position(|l| l.starts_with("t3,")).unwrap();
    let t1 = lines.iter().position(|l| l.starts_with("t1,")).unwrap();
    assert!(t3 < t1);

    // odds override
    let model2 = dir.path().join("model2.cal");
    let o = rocrecal(&[
        "calib", "fit", "--in", path_str(&cal_in), "--target-odds", "1=0.5", "--out", path_str(&model2),
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("stratum 1: n_pos"));
    assert!(std::fs::read_to_string(&model2).unwrap().contains("\nodds 0.5\n"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "id,score,label,stratum\na,1,2,1\n").unwrap();
    let out = dir.path().join("out.csv");
    let o = rocrecal(&["roc", "--in", path_str(&bad), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 1"));

    let missing = dir.path().join("missing.csv");
    assert_eq!(rocrecal(&["roc", "--in", path_str(&missing), "--out", path_str(&out)]).status.code(), Some(2));

    // one class only: no ROC exists
    let one_class = dir.path().join("one.csv");
    std::fs::write(&one_class, "id,score,label,stratum\na,1,1,1\nb,2,1,1\n").unwrap();
    let o = rocrecal(&["roc", "--in", path_str(&one_class), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(3));

    // test stratum the calibrator never saw
    let cal_in = calibration_file(dir.path());
    let model = dir.path().join("model.cal");
    assert!(rocrecal(&["calib", "fit", "--in", path_str(&cal_in), "--out", path_str(&model)]).status.success());
    let test = dir.path().join("test.csv");
    std::fs::write(&test, "id,score,stratum\nt1,0.2,9\n").unwrap();
    let o = rocrecal(&["calib", "apply", "--cal", path_str(&model), "--in", path_str(&test), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));

    let corrupt = dir.path().join("corrupt.cal");
    std::fs::write(&corrupt, "rocrecal-cal v9\n").unwrap();
    let o = rocrecal(&["calib", "apply", "--cal", path_str(&corrupt), "--in", path_str(&test), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn synth_then_strata() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("synth.toml");
    std::fs::write(&config, "n_train = 600\nn_test = 400\nmaster_seed = 3\n").unwrap();
    let train = dir.path().join("train.csv");
    let test = dir.path().join("test.csv");
    let o = rocrecal(&[
        "synth", "--config", path_str(&config), "--out-train", path_str(&train), "--out-test", path_str(&test),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&test).unwrap();
    assert!(text.starts_with("id,f1,f2,label\n"));
    assert_eq!(text.lines().count(), 401);

    let strata = dir.path().join("strata.csv");
    let summary = dir.path().join("summary.csv");
    let o = rocrecal(&[
        "strata", "--features", path_str(&train), "--mode", "quantile", "--j", "3",
        "--out", path_str(&strata), "--summary", path_str(&summary),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&strata).unwrap();
    assert!(text.starts_with("id,pc1,stratum\n"));
    let summary_text = std::fs::read_to_string(&summary).unwrap();
    assert_eq!(summary_text, String::from_utf8_lossy(&o.stdout));
    let lines: Vec<&str> = summary_text.lines().collect();
    assert_eq!(lines[0], "stratum,lower_threshold,n,positives,positive_rate");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("1,-inf,"));

    let o = rocrecal(&["strata", "--features", path_str(&train), "--mode", "sign", "--j", "3", "--out", path_str(&strata)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn experiment_writes_report_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    std::fs::write(&config, "reps = 3\nn_train = 2000\nn_test = 1500\nmode = \"pca\"\n").unwrap();
    let report = dir.path().join("report.csv");
    let o = rocrecal(&["experiment", "--config", path_str(&config), "--out", path_str(&report), "--workers", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("mean auc: raw"));
    let text = std::fs::read_to_string(&report).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 + 3);
    for suffix in ["roc_raw", "roc_calibrated"] {
        let curve = std::fs::read_to_string(dir.path().join(format!("report.{suffix}.csv"))).unwrap();
        assert!(curve.starts_with("threshold,fpr,tpr\n"));
    }
    let strata = std::fs::read_to_string(dir.path().join("report.strata.csv")).unwrap();
    assert_eq!(strata.lines().count(), 1 + 3 * 2);

    std::fs::write(&config, "reps = 3\nrepz = 4\n").unwrap();
    let o = rocrecal(&["experiment", "--config", path_str(&config), "--out", path_str(&report)]);
    assert_eq!(o.status.code(), Some(2));
}

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rocrecal::calfile::{read_calibrator, write_calibrator};
use rocrecal::config::ExperimentConfig;
use rocrecal::dataset::{
    read_calibration, read_features, read_test, write_features, write_ranked, write_roc,
    FeatureTable,
};
use rocrecal::error::{AppError, Result};
use rocrecal::harness::run_experiment;
use rocrecal_core::learn::generate;
use rocrecal_core::smoothing::SlopeParams;
use rocrecal_core::{
    apply_calibrator, auc, compute_roc, fit_calibrator, fit_calibrator_with_odds, fit_pca1,
    make_strata, project, CalibratorConfig, StrataMode,
};

#[derive(Parser)]
#[command(name = "rocrecal", version, about = "Calibrated cross-stratum ranking of classifier scores")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Empirical ROC of a labeled score file; prints the AUC.
    Roc {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit or apply a calibrator.
    #[command(subcommand)]
    Calib(Calib),
    /// Strata from the first principal component of a feature table.
    Strata {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Sign)]
        mode: Mode,
        #[arg(long, default_value_t = 2)]
        j: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write the per-stratum positive-rate summary here.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Draw the synthetic training and test samples of a config.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_train: PathBuf,
        #[arg(long)]
        out_test: PathBuf,
    },
    /// Run the repeated synthetic experiment.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
}

#[derive(Subcommand)]
enum Calib {
    Fit(FitArgs),
    Apply {
        #[arg(long)]
        cal: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct FitArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    span: f64,
    #[arg(long, default_value_t = 10)]
    min_neighbors: usize,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    monotone: bool,
    #[arg(long, default_value_t = 1e-6)]
    floor: f64,
    #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
    laplace: bool,
    /// Replace a stratum's estimated odds, as `STRATUM=ODDS`. Repeatable.
    #[arg(long, value_parser = parse_odds)]
    target_odds: Vec<(u32, f64)>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Sign,
    Quantile,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn parse_odds(s: &str) -> std::result::Result<(u32, f64), String> {
    let (g, o) = s.split_once('=').ok_or("expected STRATUM=ODDS")?;
    let g = g.trim().parse().map_err(|_| format!("bad stratum `{g}`"))?;
    let o = o.trim().parse().map_err(|_| format!("bad odds `{o}`"))?;
    Ok((g, o))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| AppError::Io {
        path: path.to_owned(),
        source: e,
    })
}

fn core_err(context: &str) -> impl Fn(rocrecal_core::Error) -> AppError + '_ {
    move |source| AppError::Core {
        context: context.to_owned(),
        source,
    }
}

/// `report.csv` -> `report.<suffix>.csv`
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map_or_else(Default::default, |s| s.to_string_lossy().into_owned());
    let ext = path.extension().map_or_else(|| "csv".into(), |e| e.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}.{suffix}.{ext}"))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Roc { input, out } => {
            let data = read_calibration(&input)?;
            let curve = compute_roc(&data.records).map_err(core_err("ROC"))?;
            write_roc(&out, &curve)?;
            println!("auc {}", auc(&curve));
        }
        Command::Calib(Calib::Fit(args)) => {
            let data = read_calibration(&args.input)?;
            let cfg = CalibratorConfig {
                slope: SlopeParams {
                    span: args.span,
                    min_neighbors: args.min_neighbors,
                    monotone: args.monotone,
                    floor: args.floor,
                },
                laplace: args.laplace,
            };
            let cal = if args.target_odds.is_empty() {
                fit_calibrator(&data.records, &cfg)
            } else {
                let odds: BTreeMap<u32, f64> = args.target_odds.into_iter().collect();
                fit_calibrator_with_odds(&data.records, &cfg, &odds)
            }
            .map_err(core_err("fitting calibrator"))?;
            write_calibrator(&args.out, &cal)?;
            for (g, m) in cal.strata() {
                println!("stratum {g}: n_pos {} n_neg {} odds {}", m.n_pos(), m.n_neg(), m.odds());
            }
        }
        Command::Calib(Calib::Apply { cal, input, out }) => {
            let cal = read_calibrator(&cal)?;
            let data = read_test(&input)?;
            let scores = apply_calibrator(&cal, &data.records).map_err(core_err("applying calibrator"))?;
            write_ranked(&out, &data.ids, &scores)?;
        }
        Command::Strata {
            features,
            mode,
            j,
            out,
            summary,
        } => {
            let table = read_features(&features)?;
            let axis = fit_pca1(&table.rows).map_err(core_err("principal axis"))?;
            let pc1 = table
                .rows
                .iter()
                .map(|x| project(&axis, x))
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(core_err("projection"))?;
            let mode = match mode {
                Mode::Sign => StrataMode::Sign,
                Mode::Quantile => StrataMode::Quantile,
            };
            let assignment = make_strata(&pc1, j, mode).map_err(core_err("strata"))?;
            let mut text = String::from("id,pc1,stratum\n");
            for ((id, p), g) in table.ids.iter().zip(&pc1).zip(&assignment.ids) {
                text.push_str(&format!("{id},{p},{g}\n"));
            }
            write_text(&out, &text)?;
            if let Some(labels) = &table.labels {
                let mut text = String::from("stratum,lower_threshold,n,positives,positive_rate\n");
                for (k, lower) in assignment.thresholds.iter().enumerate() {
                    let g = k as u32 + 1;
                    let members: Vec<bool> = labels
                        .iter()
                        .zip(&assignment.ids)
                        .filter(|(_, &id)| id == g)
                        .map(|(&y, _)| y)
                        .collect();
                    let pos = members.iter().filter(|&&y| y).count();
                    let rate = pos as f64 / members.len() as f64;
                    text.push_str(&format!("{g},{lower},{},{pos},{rate}\n", members.len()));
                }
                print!("{text}");
                if let Some(path) = summary {
                    write_text(&path, &text)?;
                }
            }
        }
        Command::Synth {
            config,
            out_train,
            out_test,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let data = generate(&cfg.spec(cfg.master_seed)).map_err(core_err("generating data"))?;
            for (path, samples, prefix) in [(&out_train, &data.train, "train"), (&out_test, &data.test, "test")] {
                let table = FeatureTable {
                    ids: (0..samples.len()).map(|i| format!("{prefix}{i}")).collect(),
                    rows: samples.iter().map(|s| s.features.clone()).collect(),
                    labels: Some(samples.iter().map(|s| s.label).collect()),
                };
                write_features(path, &table)?;
            }
            println!("train {} test {}", data.train.len(), data.test.len());
        }
        Command::Experiment {
            config,
            out,
            workers,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let output = run_experiment(&cfg, workers)?;
            write_text(&out, &output.report.to_csv())?;
            write_roc(sibling(&out, "roc_raw"), &output.roc_raw)?;
            write_roc(sibling(&out, "roc_calibrated"), &output.roc_calibrated)?;
            if cfg.mode == rocrecal::config::StrataSource::Pca {
                write_text(&sibling(&out, "strata"), &output.report.diagnostics_csv())?;
            }
            let s = output.report.summary();
            println!(
                "mean auc: raw {:.4} calibrated {:.4} baseline {:.4} single {:.4}; calibrated beats raw in {:.0}% of {} reps",
                s.mean[0],
                s.mean[1],
                s.mean[2],
                s.mean[3],
                100.0 * s.win_rate,
                output.report.rows.len()
            );
        }
    }
    Ok(())
}

//! Plain-text calibrator documents.
//!
//! ```text
//! rocrecal-cal v1
//! span 0.05
//! min_neighbors 10
//! monotone true
//! floor 0.000001
//! laplace false
//! stratum 1
//! odds 0.25
//! counts 40 160
//! class_weights 40 160
//! roc 3
//! inf 0 0
//! 0.7 0.5 0.25
//! ...
//! slope 3
//! 0 2.1
//! ...
//! end
//! ```
//!
//! `counts` holds the positive and negative record counts, `class_weights`
//! their total weights. Numbers use the shortest text that parses back to
//! the same `f64`, so a write/read round trip is exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rocrecal_core::smoothing::SlopeParams;
use rocrecal_core::{CalibratorConfig, RocCurve, SlopeFunction, StrataCalibrator, StratumModel};

use crate::error::{AppError, Result};

pub const HEADER: &str = "rocrecal-cal v1";

pub fn to_text(cal: &StrataCalibrator) -> String {
    let cfg = cal.config();
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "span {}", cfg.slope.span);
    let _ = writeln!(out, "min_neighbors {}", cfg.slope.min_neighbors);
    let _ = writeln!(out, "monotone {}", cfg.slope.monotone);
    let _ = writeln!(out, "floor {}", cfg.slope.floor);
    let _ = writeln!(out, "laplace {}", cfg.laplace);
    for (id, m) in cal.strata() {
        let roc = m.roc();
        let slope = m.slope();
        let _ = writeln!(out, "stratum {id}");
        let _ = writeln!(out, "odds {}", m.odds());
        let _ = writeln!(out, "counts {} {}", m.n_pos(), m.n_neg());
        let _ = writeln!(out, "class_weights {} {}", roc.pos_weight(), roc.neg_weight());
        let _ = writeln!(out, "roc {}", roc.len());
        for k in 0..roc.len() {
            let _ = writeln!(out, "{} {} {}", roc.thresholds()[k], roc.fpr()[k], roc.tpr()[k]);
        }
        let _ = writeln!(out, "slope {}", slope.knot_fpr().len());
        for (f, s) in slope.knot_fpr().iter().zip(slope.knot_slope()) {
            let _ = writeln!(out, "{f} {s}");
        }
        let _ = writeln!(out, "end");
    }
    out
}

pub fn write_calibrator(path: impl AsRef<Path>, cal: &StrataCalibrator) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_text(cal)).map_err(|e| AppError::io(path, e))
}

pub fn read_calibrator(path: impl AsRef<Path>) -> Result<StrataCalibrator> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    from_text(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn error(&self, message: impl Into<String>) -> AppError {
        AppError::CalibratorFormat {
            line: self.line,
            message: message.into(),
        }
    }

    /// Next non-blank line, split on whitespace.
    fn next_fields(&mut self) -> Option<Vec<&'a str>> {
        for (i, line) in self.inner.by_ref() {
            self.line = i + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !fields.is_empty() {
                return Some(fields);
            }
        }
        None
    }

    fn expect_fields(&mut self, what: &str) -> Result<Vec<&'a str>> {
        self.next_fields()
            .ok_or_else(|| self.error(format!("unexpected end of file, wanted {what}")))
    }

    fn parse<T: FromStr>(&self, text: &str) -> Result<T> {
        text.parse()
            .map_err(|_| self.error(format!("cannot parse `{text}`")))
    }

    /// A `key value...` line with exactly `n` values.
    fn keyed(&mut self, key: &str, n: usize) -> Result<Vec<&'a str>> {
        let fields = self.expect_fields(key)?;
        if fields[0] != key || fields.len() != n + 1 {
            return Err(self.error(format!("expected `{key}` with {n} value(s)")));
        }
        Ok(fields[1..].to_vec())
    }

    fn keyed_one<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.keyed(key, 1)?;
        self.parse(v[0])
    }

    fn numbers(&mut self, n: usize) -> Result<Vec<f64>> {
        let fields = self.expect_fields("numbers")?;
        if fields.len() != n {
            return Err(self.error(format!("expected {n} numbers")));
        }
        fields.iter().map(|f| self.parse(f)).collect()
    }
}

pub fn from_text(text: &str) -> Result<StrataCalibrator> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let header = lines.expect_fields("header")?.join(" ");
    if header != HEADER {
        return Err(lines.error(format!("unsupported header `{header}`")));
    }
    let config = CalibratorConfig {
        slope: SlopeParams {
            span: lines.keyed_one("span")?,
            min_neighbors: lines.keyed_one("min_neighbors")?,
            monotone: lines.keyed_one("monotone")?,
            floor: lines.keyed_one("floor")?,
        },
        laplace: lines.keyed_one("laplace")?,
    };

    let mut strata = BTreeMap::new();
    while let Some(fields) = lines.next_fields() {
        if fields[0] != "stratum" || fields.len() != 2 {
            return Err(lines.error("expected `stratum <id>`"));
        }
        let id: u32 = lines.parse(fields[1])?;
        let odds: f64 = lines.keyed_one("odds")?;
        let counts = lines.keyed("counts", 2)?;
        let (n_pos, n_neg): (usize, usize) = (lines.parse(counts[0])?, lines.parse(counts[1])?);
        let w = lines.keyed("class_weights", 2)?;
        let (pos_weight, neg_weight): (f64, f64) = (lines.parse(w[0])?, lines.parse(w[1])?);

        let n: usize = lines.keyed_one("roc")?;
        let (mut thresholds, mut fpr, mut tpr) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..n {
            let v = lines.numbers(3)?;
            thresholds.push(v[0]);
            fpr.push(v[1]);
            tpr.push(v[2]);
        }
        let roc = RocCurve::from_parts(thresholds, fpr, tpr, pos_weight, neg_weight)
            .map_err(|e| lines.error(format!("stratum {id}: {e}")))?;

        let n: usize = lines.keyed_one("slope")?;
        let (mut knot_fpr, mut knot_slope) = (Vec::new(), Vec::new());
        for _ in 0..n {
            let v = lines.numbers(2)?;
            knot_fpr.push(v[0]);
            knot_slope.push(v[1]);
        }
        let slope = SlopeFunction::from_parts(
            knot_fpr,
            knot_slope,
            config.slope.floor,
            config.slope.monotone,
        )
        .map_err(|e| lines.error(format!("stratum {id}: {e}")))?;
        if lines.expect_fields("end")? != ["end"] {
            return Err(lines.error("expected `end`"));
        }
        let model = StratumModel::from_parts(roc, slope, odds, n_pos, n_neg)
            .map_err(|e| lines.error(format!("stratum {id}: {e}")))?;
        if strata.insert(id, model).is_some() {
            return Err(lines.error(format!("stratum {id} appears twice")));
        }
    }
    StrataCalibrator::from_parts(strata, config).map_err(|e| lines.error(e.to_string()))
}

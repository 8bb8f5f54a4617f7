//! CSV datasets: labeled calibration scores, unlabeled test scores, raw
//! feature tables, and the ranked / ROC outputs.
//!
//! Row numbers in errors count data rows from 1, so the first line after
//! the header is row 1.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rocrecal_core::calibrator::ranking;
use rocrecal_core::{CalibratedScore, RocCurve, ScoredRecord};

use crate::error::{AppError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    /// `id,score,label,stratum[,weight]`
    Calibration,
    /// `id,score,stratum`
    Test,
    /// `id,f1,...,fd[,label]`
    Features,
}

/// Scored records keyed by their string ids, in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub records: Vec<ScoredRecord>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Records {
    Scored(Dataset),
    Features(FeatureTable),
}

pub fn read_dataset(path: impl AsRef<Path>, schema: Schema) -> Result<Records> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    match schema {
        Schema::Features => read_features_from(file).map(Records::Features),
        _ => read_scored_from(file, schema).map(Records::Scored),
    }
}

pub fn read_calibration(path: impl AsRef<Path>) -> Result<Dataset> {
    match read_dataset(path, Schema::Calibration)? {
        Records::Scored(d) => Ok(d),
        Records::Features(_) => unreachable!(),
    }
}

pub fn read_test(path: impl AsRef<Path>) -> Result<Dataset> {
    match read_dataset(path, Schema::Test)? {
        Records::Scored(d) => Ok(d),
        Records::Features(_) => unreachable!(),
    }
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureTable> {
    match read_dataset(path, Schema::Features)? {
        Records::Features(t) => Ok(t),
        Records::Scored(_) => unreachable!(),
    }
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

type Row = Result<(usize, csv::StringRecord)>;

/// Splits off the header line and yields `(row, record)` for the data.
fn rows<R: Read>(input: R) -> Result<(Vec<String>, impl Iterator<Item = Row>)> {
    let reader = csv_reader(input);
    let mut records = reader.into_records();
    let header = match records.next() {
        Some(Ok(h)) => h.iter().map(str::to_owned).collect(),
        Some(Err(e)) => {
            return Err(AppError::SchemaMismatch {
                expected: "a header line".into(),
                found: e.to_string(),
            })
        }
        None => Vec::new(),
    };
    let data = records.enumerate().map(|(i, r)| {
        r.map(|rec| (i + 1, rec)).map_err(|e| AppError::Parse {
            row: i + 1,
            message: e.to_string(),
        })
    });
    Ok((header, data))
}

fn parse_error(row: usize, message: impl Into<String>) -> AppError {
    AppError::Parse {
        row,
        message: message.into(),
    }
}

fn parse_f64(row: usize, column: &str, text: &str) -> Result<f64> {
    let v: f64 = text
        .parse()
        .map_err(|_| parse_error(row, format!("{column} `{text}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_error(row, format!("{column} `{text}` is not finite")));
    }
    Ok(v)
}

fn parse_label(row: usize, text: &str) -> Result<bool> {
    match text {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(parse_error(row, format!("label `{text}` is not 0 or 1"))),
    }
}

fn parse_stratum(row: usize, text: &str) -> Result<u32> {
    text.parse()
        .map_err(|_| parse_error(row, format!("stratum `{text}` is not a nonnegative integer")))
}

fn check_id(row: usize, id: &str, seen: &mut HashSet<String>) -> Result<()> {
    if id.is_empty() {
        return Err(parse_error(row, "empty id"));
    }
    if !seen.insert(id.to_owned()) {
        return Err(AppError::DuplicateId(id.to_owned()));
    }
    Ok(())
}

fn check_width(row: usize, rec: &csv::StringRecord, width: usize) -> Result<()> {
    if rec.len() != width {
        return Err(parse_error(
            row,
            format!("expected {width} fields, found {}", rec.len()),
        ));
    }
    Ok(())
}

fn schema_mismatch(expected: &str, header: &[String]) -> AppError {
    AppError::SchemaMismatch {
        expected: expected.into(),
        found: header.join(","),
    }
}

/// Reads the calibration or test schema from any reader.
pub fn read_scored_from<R: Read>(input: R, schema: Schema) -> Result<Dataset> {
    let (header, data) = rows(input)?;
    let (expected, weighted) = match schema {
        Schema::Calibration => {
            let base = ["id", "score", "label", "stratum"];
            let weighted = header.len() == 5 && header[4] == "weight";
            if header.len() < 4 || header[..4] != base || (header.len() > 4 && !weighted) {
                return Err(schema_mismatch("id,score,label,stratum[,weight]", &header));
            }
            (header.len(), weighted)
        }
        Schema::Test => {
            if header != ["id", "score", "stratum"] {
                return Err(schema_mismatch("id,score,stratum", &header));
            }
            (3, false)
        }
        Schema::Features => panic!("features schema has no scores"),
    };

    let mut out = Dataset::default();
    let mut seen = HashSet::new();
    for item in data {
        let (row, rec) = item?;
        check_width(row, &rec, expected)?;
        check_id(row, &rec[0], &mut seen)?;
        let score = parse_f64(row, "score", &rec[1])?;
        let record = if schema == Schema::Calibration {
            let label = parse_label(row, &rec[2])?;
            let stratum = parse_stratum(row, &rec[3])?;
            let r = ScoredRecord::labeled(score, label, stratum)
                .map_err(|e| parse_error(row, e.to_string()))?;
            if weighted {
                let w = parse_f64(row, "weight", &rec[4])?;
                r.with_weight(w).map_err(|e| parse_error(row, e.to_string()))?
            } else {
                r
            }
        } else {
            let stratum = parse_stratum(row, &rec[2])?;
            ScoredRecord::new(score, None, stratum).map_err(|e| parse_error(row, e.to_string()))?
        };
        out.ids.push(rec[0].to_owned());
        out.records.push(record);
    }
    Ok(out)
}

pub fn read_features_from<R: Read>(input: R) -> Result<FeatureTable> {
    let (header, data) = rows(input)?;
    let labeled = header.last().is_some_and(|h| h == "label");
    let d = header.len().saturating_sub(1 + labeled as usize);
    let names_ok = header.first().is_some_and(|h| h == "id")
        && (1..=d).all(|k| header[k] == format!("f{k}"));
    if d == 0 || !names_ok {
        return Err(schema_mismatch("id,f1,...,fd[,label]", &header));
    }

    let mut out = FeatureTable {
        labels: labeled.then(Vec::new),
        ..FeatureTable::default()
    };
    let mut seen = HashSet::new();
    for item in data {
        let (row, rec) = item?;
        check_width(row, &rec, header.len())?;
        check_id(row, &rec[0], &mut seen)?;
        let features = (1..=d)
            .map(|k| parse_f64(row, &header[k], &rec[k]))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(labels) = out.labels.as_mut() {
            labels.push(parse_label(row, &rec[d + 1])?);
        }
        out.ids.push(rec[0].to_owned());
        out.rows.push(features);
    }
    Ok(out)
}

fn create(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish<W: Write>(path: &Path, mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| AppError::io(path, e))
}

fn csv_io(path: &Path) -> impl Fn(csv::Error) -> AppError + '_ {
    move |e| AppError::io(path, e.into())
}

fn label_text(y: bool) -> &'static str {
    if y {
        "1"
    } else {
        "0"
    }
}

/// Writes the calibration schema; the weight column appears only when some
/// record has a non-unit weight.
pub fn write_calibration(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let weighted = data.records.iter().any(|r| r.weight() != 1.0);
    let err = csv_io(path);
    if weighted {
        w.write_record(["id", "score", "label", "stratum", "weight"]).map_err(&err)?;
    } else {
        w.write_record(["id", "score", "label", "stratum"]).map_err(&err)?;
    }
    for (row, (id, r)) in data.ids.iter().zip(&data.records).enumerate() {
        let label = r
            .label()
            .ok_or_else(|| parse_error(row + 1, format!("record `{id}` has no label")))?;
        let mut fields = vec![
            id.clone(),
            r.score().to_string(),
            label_text(label).to_owned(),
            r.stratum().to_string(),
        ];
        if weighted {
            fields.push(r.weight().to_string());
        }
        w.write_record(&fields).map_err(&err)?;
    }
    finish(path, w)
}

pub fn write_test(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let err = csv_io(path);
    w.write_record(["id", "score", "stratum"]).map_err(&err)?;
    for (id, r) in data.ids.iter().zip(&data.records) {
        w.write_record([id.clone(), r.score().to_string(), r.stratum().to_string()])
            .map_err(&err)?;
    }
    finish(path, w)
}

pub fn write_features(path: impl AsRef<Path>, table: &FeatureTable) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let err = csv_io(path);
    let d = table.rows.first().map_or(0, Vec::len);
    let mut header = vec!["id".to_owned()];
    header.extend((1..=d).map(|k| format!("f{k}")));
    if table.labels.is_some() {
        header.push("label".into());
    }
    w.write_record(&header).map_err(&err)?;
    for (i, (id, row)) in table.ids.iter().zip(&table.rows).enumerate() {
        let mut fields = vec![id.clone()];
        fields.extend(row.iter().map(f64::to_string));
        if let Some(labels) = &table.labels {
            fields.push(label_text(labels[i]).to_owned());
        }
        w.write_record(&fields).map_err(&err)?;
    }
    finish(path, w)
}

/// Writes calibrated scores best-first. `ids[s.index]` names each score.
pub fn write_ranked(path: impl AsRef<Path>, ids: &[String], scores: &[CalibratedScore]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let err = csv_io(path);
    w.write_record(["id", "stratum", "raw_score", "fpr", "rank_value", "rank_position"])
        .map_err(&err)?;
    for (pos, &i) in ranking(scores).iter().enumerate() {
        let s = &scores[i];
        w.write_record([
            ids[s.index].clone(),
            s.stratum.to_string(),
            s.raw_score.to_string(),
            s.fpr.to_string(),
            s.rank_value.to_string(),
            (pos + 1).to_string(),
        ])
        .map_err(&err)?;
    }
    finish(path, w)
}

pub fn write_roc(path: impl AsRef<Path>, curve: &RocCurve) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let err = csv_io(path);
    w.write_record(["threshold", "fpr", "tpr"]).map_err(&err)?;
    for k in 0..curve.len() {
        w.write_record([
            curve.thresholds()[k].to_string(),
            curve.fpr()[k].to_string(),
            curve.tpr()[k].to_string(),
        ])
        .map_err(&err)?;
    }
    finish(path, w)
}

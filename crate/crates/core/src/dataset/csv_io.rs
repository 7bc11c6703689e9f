use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{EvaluationRecord, Month, QualityValue};
use crate::error::{Error, Result};
use crate::scoring::PerformanceCategory;

pub const CSV_HEADER: [&str; 10] = [
    "agent_id",
    "date",
    "training",
    "product_id",
    "customer_service",
    "business_needs",
    "acw_seconds",
    "adherence",
    "attendance",
    "aux",
];

pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<EvaluationRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file)
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<EvaluationRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let found: Vec<&str> = header.iter().collect();
    if found != CSV_HEADER {
        return Err(Error::SchemaMismatch(format!(
            "expected header `{}`, found `{}`",
            CSV_HEADER.join(","),
            found.join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| Error::MalformedRow {
            row: row_no,
            column: String::new(),
            reason: e.to_string(),
        })?;
        out.push(parse_row(row_no, &row)?);
    }
    Ok(out)
}

fn malformed(row: usize, column: usize, reason: impl Into<String>) -> Error {
    Error::MalformedRow {
        row,
        column: CSV_HEADER[column].to_string(),
        reason: reason.into(),
    }
}

fn parse_row(row_no: usize, row: &csv::StringRecord) -> Result<EvaluationRecord> {
    if row.len() != CSV_HEADER.len() {
        return Err(malformed(
            row_no,
            0,
            format!("expected {} fields, found {}", CSV_HEADER.len(), row.len()),
        ));
    }
    let cell = |c: usize| -> Option<&str> { Some(&row[c]).filter(|s| !s.is_empty()) };
    let required = |c: usize| cell(c).ok_or_else(|| malformed(row_no, c, "missing value"));

    let int = |c: usize| -> Result<Option<i64>> {
        cell(c)
            .map(|s| {
                s.parse::<i64>()
                    .map_err(|e| malformed(row_no, c, e.to_string()))
            })
            .transpose()
    };
    let fraction = |c: usize| -> Result<Option<f64>> {
        cell(c)
            .map(|s| {
                parse_fraction(s)
                    .ok_or_else(|| malformed(row_no, c, "not a fraction or percentage"))
            })
            .transpose()
    };
    let quality = |c: usize| -> Result<Option<QualityValue>> {
        cell(c)
            .map(|s| {
                parse_quality(s).ok_or_else(|| malformed(row_no, c, "not a score or category"))
            })
            .transpose()
    };

    let agent_id = required(0)?
        .parse::<u32>()
        .map_err(|e| malformed(row_no, 0, e.to_string()))?;
    let date =
        Month::parse(required(1)?).ok_or_else(|| malformed(row_no, 1, "expected mm/01/yyyy"))?;
    let training = match cell(2) {
        None => None,
        Some("0") => Some(false),
        Some("1") => Some(true),
        Some(other) => {
            return Err(malformed(
                row_no,
                2,
                format!("expected 0 or 1, found `{other}`"),
            ))
        }
    };
    let product_id = required(3)?
        .parse::<u32>()
        .map_err(|e| malformed(row_no, 3, e.to_string()))?;

    Ok(EvaluationRecord {
        agent_id,
        date,
        training,
        product_id,
        customer_service: quality(4)?,
        business_needs: quality(5)?,
        acw_seconds: int(6)?,
        adherence: fraction(7)?,
        attendance: int(8)?,
        aux: fraction(9)?,
    })
}

/// Accepts `0.96` or `96%`.
fn parse_fraction(s: &str) -> Option<f64> {
    let v = match s.strip_suffix('%') {
        Some(p) => p.trim().parse::<f64>().ok()? / 100.0,
        None => s.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

fn parse_quality(s: &str) -> Option<QualityValue> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Some(QualityValue::Score(v)),
        Ok(_) => None,
        Err(_) => PerformanceCategory::parse(s).map(QualityValue::Category),
    }
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

pub fn write_csv<W: Write>(writer: W, records: &[EvaluationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.agent_id.to_string(),
            r.date.to_string(),
            opt(&r.training.map(u8::from)),
            r.product_id.to_string(),
            opt(&r.customer_service),
            opt(&r.business_needs),
            opt(&r.acw_seconds),
            opt(&r.adherence),
            opt(&r.attendance),
            opt(&r.aux),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn write_csv_path(path: impl AsRef<Path>, records: &[EvaluationRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(std::io::BufWriter::new(file), records)
}

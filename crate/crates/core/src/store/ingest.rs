//! Line-delimited JSON ingestion, the boundary to the external CM and
//! profile feature extractors.
//!
//! One object per line:
//! `{"id": 7, "label": 1, "score": 0.93, "cm": [...], "prof": [...], "meta": "4s"}`.
//! Blank lines and lines starting with `#` are skipped but still counted, so
//! reported line numbers always match the file.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::types::{CmScore, FeatureVector, KnowledgeEntry, Label, ProfileLayout, QueryRecord};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: u64,
    #[serde(default)]
    label: Option<Value>,
    score: f64,
    cm: Vec<f64>,
    prof: Vec<f64>,
    #[serde(default)]
    meta: Option<String>,
}

/// Parsed records plus how many of them carried an all-zero CM or profile
/// vector.
#[derive(Debug, Clone)]
pub struct Ingested<T> {
    pub records: Vec<T>,
    pub zero_vector_rows: usize,
}

fn parse_label(value: &Value) -> Result<Label> {
    match value.as_u64() {
        Some(v) if value.is_u64() => Label::try_from(v),
        _ => Err(Error::LabelInvalid(value.to_string())),
    }
}

fn to_vector(values: Vec<f64>, expected: Option<usize>) -> Result<FeatureVector> {
    if let Some(expected) = expected {
        if values.len() != expected {
            return Err(Error::DimensionMismatch { expected, actual: values.len() });
        }
    }
    FeatureVector::new(values.into_iter().map(|v| v as f32).collect())
}

struct Parsed {
    id: u64,
    label: Option<Label>,
    score: CmScore,
    cm: FeatureVector,
    prof: FeatureVector,
    meta: Option<String>,
}

struct LineParser {
    d_cm: Option<usize>,
    d_prof: usize,
}

impl LineParser {
    fn parse(&mut self, line: &str) -> Result<Parsed> {
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| Error::Parse(e.to_string()))?;
        let label = raw.label.as_ref().filter(|v| !v.is_null()).map(parse_label).transpose()?;
        let score = CmScore::from_f64(raw.score)?;
        let cm = to_vector(raw.cm, self.d_cm)?;
        let prof = to_vector(raw.prof, Some(self.d_prof))?;
        self.d_cm.get_or_insert(cm.dim());
        Ok(Parsed { id: raw.id, label, score, cm, prof, meta: raw.meta })
    }
}

fn parse_lines<R: BufRead, T>(
    reader: R,
    layout: &ProfileLayout,
    mut convert: impl FnMut(Parsed) -> Result<T>,
) -> Result<Ingested<T>> {
    let mut parser = LineParser { d_cm: None, d_prof: layout.dims() };
    let mut records = Vec::new();
    let mut zero_vector_rows = 0;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::at_line(line_no, Error::Parse(e.to_string())))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parsed = parser.parse(trimmed).map_err(|e| Error::at_line(line_no, e))?;
        if parsed.cm.is_zero() || parsed.prof.is_zero() {
            zero_vector_rows += 1;
        }
        records.push(convert(parsed).map_err(|e| Error::at_line(line_no, e))?);
    }
    Ok(Ingested { records, zero_vector_rows })
}

/// Knowledge entries from a reader; every record must carry a label.
pub fn parse_entries<R: BufRead>(reader: R, layout: &ProfileLayout) -> Result<Ingested<KnowledgeEntry>> {
    parse_lines(reader, layout, |p| {
        let label = p.label.ok_or_else(|| Error::LabelInvalid("missing".into()))?;
        Ok(KnowledgeEntry { id: p.id, cm: p.cm, prof: p.prof, label, score: p.score, meta: p.meta })
    })
}

/// Query records from a reader; labels are optional.
pub fn parse_queries<R: BufRead>(reader: R, layout: &ProfileLayout) -> Result<Ingested<QueryRecord>> {
    parse_lines(reader, layout, |p| {
        Ok(QueryRecord { id: p.id, cm: p.cm, prof: p.prof, score: p.score, label: p.label, meta: p.meta })
    })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

pub fn ingest_jsonl(path: impl AsRef<Path>, layout: &ProfileLayout) -> Result<Ingested<KnowledgeEntry>> {
    parse_entries(open(path.as_ref())?, layout)
}

pub fn ingest_queries_jsonl(path: impl AsRef<Path>, layout: &ProfileLayout) -> Result<Ingested<QueryRecord>> {
    parse_queries(open(path.as_ref())?, layout)
}

//! Emitter line-list CSV.
//!
//! ```text
//! emitter_id,f_a1_ghz,f_a2_ghz,fwhm_a1_mhz,fwhm_a2_mhz
//! e0001,-3.1021,-2.0751,298.4,331.0
//! e0002,0.512,1.539,,
//! ```
//!
//! The header must match exactly. Linewidth fields may be empty.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{EmitterLines, DEFAULT_FWHM_MEAN_MHZ};

pub const LINE_LIST_HEADER: [&str; 5] = ["emitter_id", "f_a1_ghz", "f_a2_ghz", "fwhm_a1_mhz", "fwhm_a2_mhz"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineListRecord {
    pub emitter_id: String,
    pub f_a1_ghz: f64,
    pub f_a2_ghz: f64,
    pub fwhm_a1_mhz: Option<f64>,
    pub fwhm_a2_mhz: Option<f64>,
    /// 1-based line number in the source file, 0 for records not read from a file.
    #[serde(skip)]
    pub line: u64,
}

impl LineListRecord {
    /// Missing linewidths take the ensemble default FWHM.
    pub fn to_emitter(&self) -> Result<EmitterLines> {
        EmitterLines::new(
            self.emitter_id.clone(),
            self.f_a1_ghz,
            self.f_a2_ghz,
            self.fwhm_a1_mhz.unwrap_or(DEFAULT_FWHM_MEAN_MHZ),
            self.fwhm_a2_mhz.unwrap_or(DEFAULT_FWHM_MEAN_MHZ),
        )
    }
}

impl From<&EmitterLines> for LineListRecord {
    fn from(e: &EmitterLines) -> Self {
        Self {
            emitter_id: e.id.clone(),
            f_a1_ghz: e.a1().ghz(),
            f_a2_ghz: e.a2().ghz(),
            fwhm_a1_mhz: Some(e.fwhm_a1_mhz()),
            fwhm_a2_mhz: Some(e.fwhm_a2_mhz()),
            line: 0,
        }
    }
}

fn parse_number(raw: &str, line: u64, column: &str) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| Error::Parse {
        row: line as usize,
        column: column.to_string(),
        message: format!("'{raw}' is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row: line as usize,
            column: column.to_string(),
            message: format!("'{raw}' is not finite"),
        });
    }
    Ok(v)
}

fn parse_optional(raw: &str, line: u64, column: &str) -> Result<Option<f64>> {
    if raw.trim().is_empty() {
        return Ok(None);
    }
    parse_number(raw, line, column).map(Some)
}

pub fn parse_line_list(bytes: &[u8]) -> Result<Vec<LineListRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_reader(bytes);
    let header = reader.headers()?.clone();
    let got: Vec<&str> = header.iter().collect();
    if got != LINE_LIST_HEADER {
        return Err(Error::Parse {
            row: 1,
            column: "header".into(),
            message: format!("expected header '{}', got '{}'", LINE_LIST_HEADER.join(","), got.join(",")),
        });
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        let id = field(0).trim().to_string();
        if id.is_empty() {
            return Err(Error::Parse {
                row: line as usize,
                column: "emitter_id".into(),
                message: "empty emitter id".into(),
            });
        }
        let rec = LineListRecord {
            f_a1_ghz: parse_number(field(1), line, LINE_LIST_HEADER[1])?,
            f_a2_ghz: parse_number(field(2), line, LINE_LIST_HEADER[2])?,
            fwhm_a1_mhz: parse_optional(field(3), line, LINE_LIST_HEADER[3])?,
            fwhm_a2_mhz: parse_optional(field(4), line, LINE_LIST_HEADER[4])?,
            emitter_id: id,
            line,
        };
        if rec.f_a2_ghz <= rec.f_a1_ghz {
            return Err(Error::Validation(format!(
                "emitter {} (line {line}): f_a2_ghz {} must exceed f_a1_ghz {}",
                rec.emitter_id, rec.f_a2_ghz, rec.f_a1_ghz
            )));
        }
        for w in [rec.fwhm_a1_mhz, rec.fwhm_a2_mhz].into_iter().flatten() {
            if w <= 0.0 {
                return Err(Error::Validation(format!(
                    "emitter {} (line {line}): linewidth {w} MHz must be positive",
                    rec.emitter_id
                )));
            }
        }
        if !seen.insert(rec.emitter_id.clone()) {
            return Err(Error::Validation(format!(
                "duplicate emitter id {} at line {line}",
                rec.emitter_id
            )));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Writes the header and one row per record; `f64` values use shortest
/// round-trip formatting so parsing the output restores them exactly.
pub fn write_line_list(records: &[LineListRecord], preamble: Option<&str>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    if let Some(p) = preamble {
        for l in p.lines() {
            buf.extend_from_slice(format!("# {l}\n").as_bytes());
        }
    }
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(LINE_LIST_HEADER)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        if r.emitter_id.starts_with('#') {
            return Err(Error::Validation(format!("emitter id {} may not start with '#'", r.emitter_id)));
        }
        w.write_record([
            r.emitter_id.clone(),
            r.f_a1_ghz.to_string(),
            r.f_a2_ghz.to_string(),
            opt(r.fwhm_a1_mhz),
            opt(r.fwhm_a2_mhz),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

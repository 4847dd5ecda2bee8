//! Two-column spectrum CSV (`frequency_ghz,counts`) with a JSON sidecar
//! carrying the dwell time per point: `{"dwell_time_s": 0.1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ple::PleSpectrum;

pub const SPECTRUM_HEADER: [&str; 2] = ["frequency_ghz", "counts"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSidecar {
    pub dwell_time_s: f64,
}

/// Without a sidecar the dwell time defaults to 1 s.
pub fn read_spectrum(csv_bytes: &[u8], sidecar_json: Option<&[u8]>) -> Result<PleSpectrum> {
    let dwell = match sidecar_json {
        Some(b) => serde_json::from_slice::<SpectrumSidecar>(b)?.dwell_time_s,
        None => 1.0,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(csv_bytes);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != SPECTRUM_HEADER {
        return Err(Error::Parse {
            row: 1,
            column: "header".into(),
            message: format!("expected header 'frequency_ghz,counts', got '{}'", header.join(",")),
        });
    }
    let mut freqs = Vec::new();
    let mut counts = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line()) as usize;
        for (i, dest) in [&mut freqs, &mut counts].into_iter().enumerate() {
            let raw = record.get(i).unwrap_or("");
            let v: f64 = raw.trim().parse().map_err(|_| Error::Parse {
                row: line,
                column: SPECTRUM_HEADER[i].into(),
                message: format!("'{raw}' is not a number"),
            })?;
            dest.push(v);
        }
    }
    PleSpectrum::new(freqs, counts, dwell)
}

/// Returns `(csv, sidecar_json)`.
pub fn write_spectrum(spectrum: &PleSpectrum, preamble: Option<&str>) -> Result<(Vec<u8>, Vec<u8>)> {
    let mut buf = Vec::new();
    if let Some(p) = preamble {
        for l in p.lines() {
            buf.extend_from_slice(format!("# {l}\n").as_bytes());
        }
    }
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(SPECTRUM_HEADER)?;
    for (f, c) in spectrum.frequencies_ghz().iter().zip(spectrum.counts()) {
        w.write_record([f.to_string(), c.to_string()])?;
    }
    let csv = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let sidecar = serde_json::to_vec_pretty(&SpectrumSidecar {
        dwell_time_s: spectrum.dwell_time_s,
    })?;
    Ok((csv, sidecar))
}

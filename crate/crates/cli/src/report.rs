//! Consolidates command summaries from one output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult};
use crate::run::{timestamp, TIMESTAMP_FIELD, TOOL_VERSION};

pub const SECTIONS: [&str; 6] = ["sample", "overlap", "birthday", "fit-ple", "protocol", "spatial"];

pub const DATA_NOTE: &str = "The original 50-emitter measurement is not public. Overlap probabilities, \
bootstrap errors and window-scan slopes in this report come from constructed fixtures or parametric \
resampling of the ensemble model, not from measured line lists, unless a section names an input file.";

// (label, JSON pointer) pairs echoed in the text report
fn highlights(section: &str) -> &'static [(&'static str, &'static str)] {
    match section {
        "sample" => &[
            ("emitters", "/n_emitters"),
            ("zfs mean (GHz)", "/ensemble_summary/zfs_ghz/mean"),
            ("zfs std (GHz)", "/ensemble_summary/zfs_ghz/std"),
            ("fwhm mean (MHz)", "/ensemble_summary/fwhm_mhz/mean"),
            ("lifetime-limited linewidth (MHz)", "/lifetime_limited_linewidth_mhz"),
        ],
        "overlap" => &[
            ("data", "/data_source"),
            ("emitters", "/n_emitters"),
            ("window (MHz)", "/window_mhz"),
            ("overlapping pairs", "/overlapping_pairs"),
            ("probability", "/probability"),
            ("bootstrap std error", "/std_error_bootstrap"),
            ("slope per linewidth", "/slope_per_gamma"),
            ("union-bound slope", "/union_bound_slope_per_gamma"),
        ],
        "birthday" => &[
            ("n*", "/n_star"),
            ("pairwise q", "/pairwise_q"),
            ("target", "/target"),
            ("P(collision) at n*", "/probability_at_n_star"),
            ("survey n*", "/monte_carlo/n_star"),
        ],
        "fit-ple" => &[
            ("data", "/data_source"),
            ("peaks", "/k"),
            ("converged", "/converged"),
            ("residual rms", "/residual_rms"),
            ("shared peak", "/classification/shared_peak"),
        ],
        "protocol" => &[
            ("qubits", "/n"),
            ("eta", "/eta"),
            ("success probability", "/success_probability"),
            ("fidelity (closed form)", "/fidelity"),
            ("fidelity (enumeration)", "/fidelity_enumeration"),
        ],
        "spatial" => &[
            ("lambda", "/lambda"),
            ("P(k>=2) simulated", "/multi_emitter_fraction"),
            ("P(k>=2) Poisson", "/multi_emitter_closed_form"),
            ("chain probability", "/chain/probability"),
        ],
        _ => &[],
    }
}

fn render(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn report(out_dir: &Path) -> CliResult<Value> {
    let mut sections = Map::new();
    let mut provenance = Map::new();
    let mut missing = Vec::new();
    for name in SECTIONS {
        let path = out_dir.join(format!("{name}.json"));
        if !path.exists() {
            missing.push(name);
            continue;
        }
        let bytes = fs::read(&path).map_err(|e| CliError::data("io", format!("{}: {e}", path.display())))?;
        let mut summary: Value = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::data("json", format!("{}: {e}", path.display())))?;
        if let Some(obj) = summary.as_object_mut() {
            obj.remove(TIMESTAMP_FIELD);
        }
        provenance.insert(
            name.into(),
            json!({
                "config_hash": summary["config_hash"],
                "seed": summary["seed"],
                "seed_source": summary["seed_source"],
                "tool_version": summary["tool_version"],
            }),
        );
        sections.insert(name.into(), summary);
    }
    if sections.is_empty() {
        return Err(CliError::data(
            "missing_outputs",
            format!("no command summaries found in {}", out_dir.display()),
        ));
    }

    let doc = json!({
        "tool_version": TOOL_VERSION,
        "data_note": DATA_NOTE,
        "sections": sections,
        "provenance": provenance,
        "missing_sections": missing,
        TIMESTAMP_FIELD: timestamp(),
    });

    let mut text = String::new();
    let _ = writeln!(text, "emitternet {TOOL_VERSION} report");
    let _ = writeln!(text, "generated {}", doc[TIMESTAMP_FIELD].as_str().unwrap_or(""));
    let _ = writeln!(text);
    let _ = writeln!(text, "{DATA_NOTE}");
    for name in SECTIONS {
        let Some(s) = doc["sections"].get(name) else { continue };
        let _ = writeln!(text);
        let _ = writeln!(text, "[{name}]");
        let _ = writeln!(text, "  config hash: {}", render(&s["config_hash"]));
        let _ = writeln!(text, "  seed: {} ({})", render(&s["seed"]), render(&s["seed_source"]));
        for (label, ptr) in highlights(name) {
            if let Some(v) = s.pointer(ptr).filter(|v| !v.is_null()) {
                let _ = writeln!(text, "  {label}: {}", render(v));
            }
        }
    }
    if !missing.is_empty() {
        let _ = writeln!(text);
        let _ = writeln!(text, "not run: {}", missing.join(", "));
    }

    fs::create_dir_all(out_dir)?;
    let mut json_text = serde_json::to_string_pretty(&doc)?;
    json_text.push('\n');
    fs::write(out_dir.join("report.json"), json_text)?;
    fs::write(out_dir.join("report.txt"), text)?;
    Ok(doc)
}

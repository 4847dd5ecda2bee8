//! Effective configuration, provenance and output writing shared by all commands.

use std::fs;
use std::path::{Path, PathBuf};

use emitternet::io::RunConfig;
use emitternet::SeedSpec;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::cli::{Command, GlobalArgs};
use crate::error::{CliError, CliResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SEED_ENV: &str = "EMITTERNET_SEED";
pub const DEFAULT_OUT_DIR: &str = "emitternet-out";
const DEFAULT_SEED: u64 = 1;

/// The one field of every summary that differs between identical runs.
pub const TIMESTAMP_FIELD: &str = "generated_at";

pub struct RunContext {
    pub command: &'static str,
    pub config: RunConfig,
    pub seed: u64,
    pub seed_source: &'static str,
    pub config_hash: String,
    pub out_dir: PathBuf,
    outputs: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn load_config(path: Option<&Path>) -> CliResult<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let bytes = fs::read(p).map_err(|e| CliError::data("io", format!("{}: {e}", p.display())))?;
            RunConfig::from_json(&bytes).map_err(|e| CliError::data("config", format!("{}: {e}", p.display())))
        }
    }
}

fn resolve_seed(flag: Option<u64>, config: Option<u64>, env: Option<String>) -> CliResult<(u64, &'static str)> {
    if let Some(s) = flag {
        return Ok((s, "flag"));
    }
    if let Some(s) = config {
        return Ok((s, "config"));
    }
    match env {
        Some(v) => v
            .trim()
            .parse()
            .map(|s| (s, "environment"))
            .map_err(|_| CliError::usage(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        None => Ok((DEFAULT_SEED, "default")),
    }
}

fn reject(flag: &str, command: &str) -> CliError {
    CliError::usage(format!("--{flag} has no effect on the {command} command"))
}

/// Folds command-line overrides into the configuration, rejecting flags the
/// command does not use.
fn apply_overrides(cfg: &mut RunConfig, g: &GlobalArgs, command: &Command) -> CliResult<()> {
    let name = command.name();
    let used: &[&str] = match command {
        Command::Sample => &["n"],
        Command::Overlap { .. } => &["n", "window-mhz", "trials"],
        Command::Birthday { .. } => &["window-mhz", "trials"],
        Command::FitPle { .. } => &[],
        Command::Protocol => &["n", "eta"],
        Command::Spatial { .. } => &["n", "window-mhz", "trials"],
        Command::Report => &[],
    };
    for (flag, set) in [
        ("n", g.n.is_some()),
        ("window-mhz", g.window_mhz.is_some()),
        ("trials", g.trials.is_some()),
        ("eta", g.eta.is_some()),
    ] {
        if set && !used.contains(&flag) {
            return Err(reject(flag, name));
        }
    }

    match command {
        Command::Sample => {
            if let Some(n) = g.n {
                cfg.sample.n_emitters = n;
            }
        }
        Command::Overlap { input } => {
            if let Some(p) = input {
                cfg.overlap.input = Some(p.display().to_string());
            }
            if let Some(n) = g.n {
                cfg.overlap.n_emitters = n;
            }
            if let Some(w) = g.window_mhz {
                cfg.overlap.window_mhz = Some(w);
            }
            if let Some(t) = g.trials {
                cfg.overlap.bootstrap_resamples = t;
            }
        }
        Command::Birthday { q, target, monte_carlo } => {
            if q.is_some() {
                cfg.birthday.q = *q;
            }
            if let Some(t) = target {
                cfg.birthday.target = *t;
            }
            if *monte_carlo {
                cfg.birthday.monte_carlo = true;
            }
            if let Some(w) = g.window_mhz {
                cfg.birthday.window_mhz = Some(w);
            }
            if let Some(t) = g.trials {
                cfg.birthday.trials = t;
            }
        }
        Command::FitPle { input, sidecar, k } => {
            if let Some(p) = input {
                cfg.ple.input = Some(p.display().to_string());
            }
            if let Some(p) = sidecar {
                cfg.ple.sidecar = Some(p.display().to_string());
            }
            if let Some(k) = k {
                cfg.ple.k = *k;
            }
        }
        Command::Protocol => {
            if let Some(n) = g.n {
                cfg.protocol.n = n;
            }
            if let Some(e) = g.eta {
                cfg.protocol.eta = e;
            }
        }
        Command::Spatial { lateral_fwhm_um, density } => {
            if lateral_fwhm_um.is_some() {
                cfg.spatial.lateral_fwhm_um = *lateral_fwhm_um;
            }
            if let Some(d) = density {
                cfg.spatial.density_per_um3 = *d;
            }
            if let Some(n) = g.n {
                cfg.spatial.chain_length = Some(n);
            }
            if let Some(w) = g.window_mhz {
                cfg.spatial.chain_window_mhz = Some(w);
            }
            if let Some(t) = g.trials {
                cfg.spatial.trials = t;
            }
        }
        Command::Report => {}
    }
    Ok(())
}

impl RunContext {
    pub fn new(g: &GlobalArgs, command: &Command) -> CliResult<Self> {
        let mut config = load_config(g.config.as_deref())?;
        apply_overrides(&mut config, g, command)?;
        if let Some(t) = g.threads {
            config.threads = Some(t);
        }
        config.validate().map_err(|e| CliError::data("config", e.to_string()))?;

        let (seed, seed_source) = resolve_seed(g.seed, config.seed, std::env::var(SEED_ENV).ok())?;
        config.seed = Some(seed);
        let out_dir = g
            .out
            .clone()
            .or_else(|| config.out_dir.clone().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));

        // thread count and output location do not change results
        let mut hashed = config.clone();
        hashed.threads = None;
        hashed.out_dir = None;
        let config_hash = sha256_hex(&serde_json::to_vec(&hashed)?);

        Ok(Self {
            command: command.name(),
            config,
            seed,
            seed_source,
            config_hash,
            out_dir,
            outputs: Vec::new(),
        })
    }

    pub fn seed_spec(&self) -> SeedSpec {
        SeedSpec::new(self.seed)
    }

    fn provenance_lines(&self) -> String {
        format!(
            "emitternet {TOOL_VERSION} command={}\nconfig_hash={}\nseed={}",
            self.command, self.config_hash, self.seed
        )
    }

    fn write_file(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        fs::create_dir_all(&self.out_dir)
            .map_err(|e| CliError::data("io", format!("{}: {e}", self.out_dir.display())))?;
        let path = self.out_dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::data("io", format!("{}: {e}", path.display())))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    /// CSV table with provenance comment lines ahead of the header.
    pub fn write_table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
        let mut buf = Vec::new();
        for line in self.provenance_lines().lines() {
            buf.extend_from_slice(format!("# {line}\n").as_bytes());
        }
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let buf = w.into_inner().map_err(|e| CliError::data("io", e.to_string()))?;
        self.write_file(name, &buf)
    }

    /// Bytes produced by a core writer that already took [`Self::preamble`].
    pub fn write_raw(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        self.write_file(name, bytes)
    }

    pub fn preamble(&self) -> String {
        self.provenance_lines()
    }

    /// Writes `<command>.json`: results merged with provenance fields.
    pub fn write_summary(&mut self, results: Map<String, Value>) -> CliResult<Value> {
        let name = format!("{}.json", self.command);
        let mut outputs = self.outputs.clone();
        outputs.push(name.clone());

        let mut doc = results;
        doc.insert("command".into(), self.command.into());
        doc.insert("tool_version".into(), TOOL_VERSION.into());
        doc.insert("config_hash".into(), self.config_hash.clone().into());
        doc.insert("seed".into(), self.seed.into());
        doc.insert("seed_source".into(), self.seed_source.into());
        let mut cfg = serde_json::to_value(&self.config)?;
        if let Some(obj) = cfg.as_object_mut() {
            obj.remove("threads");
            obj.remove("out_dir");
        }
        doc.insert("config".into(), cfg);
        doc.insert("outputs".into(), outputs.into());
        doc.insert(TIMESTAMP_FIELD.into(), timestamp().into());

        let value = Value::Object(doc);
        let mut text = serde_json::to_string_pretty(&value)?;
        text.push('\n');
        self.write_file(&name, text.as_bytes())?;
        Ok(value)
    }
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn fmt(v: f64) -> String {
    v.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::{EXIT_DATA, EXIT_USAGE};

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(3), Some(4), Some("5".into())).unwrap(), (3, "flag"));
        assert_eq!(resolve_seed(None, Some(4), Some("5".into())).unwrap(), (4, "config"));
        assert_eq!(resolve_seed(None, None, Some(" 5 ".into())).unwrap(), (5, "environment"));
        assert_eq!(resolve_seed(None, None, None).unwrap(), (1, "default"));
        assert_eq!(resolve_seed(None, None, Some("x".into())).unwrap_err().code, EXIT_USAGE);
    }

    #[test]
    fn overrides_route_by_command() {
        let g = GlobalArgs {
            n: Some(6),
            eta: Some(0.9),
            ..GlobalArgs::default()
        };
        let mut cfg = RunConfig::default();
        apply_overrides(&mut cfg, &g, &Command::Protocol).unwrap();
        assert_eq!((cfg.protocol.n, cfg.protocol.eta), (6, 0.9));

        let g = GlobalArgs {
            n: Some(7),
            ..GlobalArgs::default()
        };
        let mut cfg = RunConfig::default();
        apply_overrides(&mut cfg, &g, &Command::Spatial { lateral_fwhm_um: Some(0.4), density: None }).unwrap();
        assert_eq!(cfg.spatial.chain_length, Some(7));
        assert_eq!(cfg.spatial.lateral_fwhm_um, Some(0.4));
    }

    #[test]
    fn unused_flags_are_usage_errors() {
        let g = GlobalArgs {
            eta: Some(0.5),
            ..GlobalArgs::default()
        };
        let err = apply_overrides(&mut RunConfig::default(), &g, &Command::Sample).unwrap_err();
        assert_eq!(err.code, EXIT_USAGE);
        assert!(err.message.contains("--eta"));
    }

    #[test]
    fn hash_ignores_threads_and_output_location() {
        let base = GlobalArgs {
            seed: Some(9),
            ..GlobalArgs::default()
        };
        let moved = GlobalArgs {
            seed: Some(9),
            threads: Some(3),
            out: Some(PathBuf::from("elsewhere")),
            ..GlobalArgs::default()
        };
        let reseeded = GlobalArgs {
            seed: Some(10),
            ..GlobalArgs::default()
        };
        let h = |g: &GlobalArgs| RunContext::new(g, &Command::Sample).unwrap().config_hash;
        assert_eq!(h(&base), h(&moved));
        assert_ne!(h(&base), h(&reseeded));
    }

    #[test]
    fn invalid_override_is_a_data_error() {
        let g = GlobalArgs {
            n: Some(1),
            seed: Some(1),
            ..GlobalArgs::default()
        };
        let err = RunContext::new(&g, &Command::Protocol).err().unwrap();
        assert_eq!(err.code, EXIT_DATA);
    }
}

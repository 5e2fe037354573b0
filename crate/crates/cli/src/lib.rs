//! Batch front end: experiment configs in, traces and manifests out.

pub mod catalog;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod run;

use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};

pub use config::{parse, ExperimentConfig, Kind};
pub use error::{CliError, CliResult};
pub use manifest::Manifest;
pub use run::{execute, Artifact, RunContext, RunOutput};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "NVMECH_OUT_DIR";

/// Config text plus where it came from.
#[derive(Debug, Clone)]
pub struct Source {
    pub label: String,
    pub text: String,
    pub base_dir: PathBuf,
    pub shots: Option<usize>,
}

/// Resolves a config path, a manifest (`.json`) or a bundled id.
pub fn load(arg: &str) -> CliResult<Source> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{arg}: {e}")))?;
        if path.extension().is_some_and(|e| e == "json") {
            let m = Manifest::from_json(&text)?;
            return Ok(Source {
                label: arg.to_string(),
                text: m.config_text,
                base_dir: PathBuf::from(m.base_dir),
                shots: m.overrides.shots,
            });
        }
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        return Ok(Source {
            label: arg.to_string(),
            text,
            base_dir,
            shots: None,
        });
    }
    if let Some(e) = catalog::find(arg) {
        return Ok(Source {
            label: format!("bundled:{}", e.id),
            text: e.text.to_string(),
            base_dir: std::env::current_dir()?,
            shots: None,
        });
    }
    Err(CliError::Io(format!("{arg}: no such file or bundled config")))
}

/// Output directory: explicit flag, then the environment, then `.`.
pub fn output_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Runs with a dedicated pool of `workers` threads.
pub fn run_source(src: &Source, workers: usize, shots: Option<usize>) -> CliResult<(ExperimentConfig, RunOutput, Manifest)> {
    let cfg = parse(&src.text)?;
    let shots = shots.or(src.shots);
    if shots == Some(0) {
        return Err(CliError::schema("shots: must be at least 1"));
    }
    let ctx = RunContext {
        base_dir: src.base_dir.clone(),
        shots,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let started = Utc::now();
    let out = pool.install(|| execute(&cfg, &ctx))?;
    let finished = Utc::now();
    let outputs = out
        .artifacts
        .iter()
        .map(|a| manifest::OutputRecord {
            file: a.file.clone(),
            sha256: manifest::sha256_hex(a.contents.as_bytes()),
            bytes: a.contents.len(),
        })
        .collect();
    let m = Manifest {
        tool: "nvmech".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        kind: cfg.kind.as_str().into(),
        name: cfg.name.clone(),
        figure: cfg.figure.clone(),
        source: src.label.clone(),
        config_sha256: manifest::sha256_hex(src.text.as_bytes()),
        seed: cfg.seed,
        shots: shots.or(cfg.shots),
        workers: workers.max(1),
        started_utc: started.to_rfc3339_opts(SecondsFormat::Millis, true),
        finished_utc: finished.to_rfc3339_opts(SecondsFormat::Millis, true),
        outputs,
        derived: out.derived.clone(),
        overrides: manifest::Overrides { shots },
        base_dir: src.base_dir.display().to_string(),
        config_text: src.text.clone(),
    };
    Ok((cfg, out, m))
}

/// Writes the artifacts and `<stem>_manifest.json`; returns the written paths.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, out: &RunOutput, m: &Manifest) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for a in &out.artifacts {
        let p = dir.join(&a.file);
        std::fs::write(&p, &a.contents).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        written.push(p);
    }
    let p = dir.join(format!("{}_manifest.json", cfg.stem()));
    std::fs::write(&p, m.to_json()?).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    written.push(p);
    Ok(written)
}

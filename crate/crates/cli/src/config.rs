//! Config files, global options and report output.
//!
//! A config file is a JSON object with the optional global fields `seed`,
//! `output_path`, `step_size`, `log_level` and a `settings` object holding
//! the subcommand's own options. Unknown fields are rejected at every
//! level. Command-line flags override the file.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Args, Debug, Clone, Default)]
pub struct GlobalArgs {
    /// JSON config: global fields plus a "settings" object for the subcommand
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for every random draw [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the JSON report here instead of stdout; CSV sidecars are written next to it
    #[arg(long, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// RK4 step size [default: 0.01]
    #[arg(long, global = true)]
    pub step: Option<f64>,
    /// Worker threads [default: all cores]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Leave the timestamp out of the report
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    /// One of error, warn, info, debug, trace [default: warn]
    #[arg(long, global = true)]
    pub log_level: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig<S> {
    seed: Option<u64>,
    output_path: Option<PathBuf>,
    step_size: Option<f64>,
    log_level: Option<String>,
    settings: Option<S>,
}

/// Fully resolved configuration, embedded verbatim in every report.
#[derive(Serialize, Debug, Clone)]
pub struct Resolved<S> {
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub step_size: f64,
    pub log_level: String,
    pub settings: S,
}

pub const DEFAULT_LOG_LEVEL: &str = "warn";

pub fn resolve<S>(args: &GlobalArgs) -> Result<Resolved<S>, CliError>
where
    S: DeserializeOwned + Default,
{
    let file: FileConfig<S> = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::validation(format!("config {}: {e}", path.display())))?
        }
        None => FileConfig { seed: None, output_path: None, step_size: None, log_level: None, settings: None },
    };
    let step_size = args.step.or(file.step_size).unwrap_or(flowlab::flow::DEFAULT_STEP);
    if !(step_size > 0.0 && step_size.is_finite()) {
        return Err(CliError::validation(format!("step size must be positive, got {step_size}")));
    }
    let log_level = args
        .log_level
        .clone()
        .or(file.log_level)
        .unwrap_or_else(|| DEFAULT_LOG_LEVEL.to_string());
    if log_level.parse::<log::LevelFilter>().is_err() {
        return Err(CliError::validation(format!("unknown log level '{log_level}'")));
    }
    Ok(Resolved {
        seed: args.seed.or(file.seed).unwrap_or(0),
        output_path: args.output.clone().or(file.output_path),
        step_size,
        log_level,
        settings: file.settings.unwrap_or_default(),
    })
}

/// A CSV table written next to the report.
pub struct Sidecar {
    pub suffix: &'static str,
    pub contents: String,
}

/// What a subcommand hands back for writing.
pub struct Outcome {
    pub config: Value,
    pub result: Value,
    pub sidecars: Vec<Sidecar>,
    /// Set when the run completed but a required property failed.
    pub failure: Option<String>,
    /// Printed to stdout in addition to the report (bracket only).
    pub text: Option<String>,
}

impl Outcome {
    pub fn new<S: Serialize, R: Serialize>(config: &Resolved<S>, result: &R) -> Self {
        Self {
            config: serde_json::to_value(config).expect("config serialises"),
            result: serde_json::to_value(result).expect("result serialises"),
            sidecars: Vec::new(),
            failure: None,
            text: None,
        }
    }

    pub fn sidecar(mut self, suffix: &'static str, contents: String) -> Self {
        self.sidecars.push(Sidecar { suffix, contents });
        self
    }

    pub fn fail_if(mut self, failed: bool, message: impl Into<String>) -> Self {
        if failed && self.failure.is_none() {
            self.failure = Some(message.into());
        }
        self
    }
}

#[derive(Serialize)]
struct Report<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp: Option<u64>,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<&'a str>,
    config: &'a Value,
    result: &'a Value,
    sidecars: Vec<String>,
}

/// `dir/report.json` + `trajectory` -> `dir/report.trajectory.csv`.
pub fn sidecar_path(output: &Path, suffix: &str) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    output.with_file_name(format!("{stem}.{suffix}.csv"))
}

/// Writes the report (to `output` or stdout) and its sidecars.
pub fn emit(subcommand: &str, outcome: &Outcome, output: Option<&Path>, timestamp: bool) -> Result<(), CliError> {
    let mut sidecar_names = Vec::new();
    if let Some(out) = output {
        for s in &outcome.sidecars {
            let path = sidecar_path(out, s.suffix);
            fs::write(&path, &s.contents).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
            sidecar_names.push(path.file_name().expect("file name").to_string_lossy().into_owned());
        }
    } else if !outcome.sidecars.is_empty() {
        log::info!("no output path given, skipping {} CSV sidecar(s)", outcome.sidecars.len());
    }
    let report = Report {
        tool: "flowlab",
        version: env!("CARGO_PKG_VERSION"),
        subcommand,
        timestamp: timestamp
            .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)),
        status: if outcome.failure.is_some() { "failed" } else { "ok" },
        failure: outcome.failure.as_deref(),
        config: &outcome.config,
        result: &outcome.result,
        sidecars: sidecar_names,
    };
    let mut json = serde_json::to_string_pretty(&report).expect("report serialises");
    json.push('\n');
    if let Some(text) = &outcome.text {
        print!("{text}");
    }
    match output {
        Some(out) => fs::write(out, json).map_err(|e| CliError::io(format!("cannot write {}: {e}", out.display()))),
        None if outcome.text.is_some() => Ok(()),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

//! Subcommand implementations and the input specs they share.

pub mod algebra;
pub mod counterexamples;
pub mod dynamics;
pub mod learning;

use std::fs;
use std::path::PathBuf;

use flowlab::ensemble::Ensemble;
use flowlab::family::{Activation, ControlFamily, FamilySpec, WeightStructure};
use flowlab::flow::{ControlSchedule, Segment};
use flowlab::polyvec::{parse_field, PolyError, PolyVectorField};
use flowlab::trainer::Dataset;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub fn named(name: &str) -> FamilySpec {
    FamilySpec::Named { name: name.to_string() }
}

pub fn tanh_net(dim: usize) -> FamilySpec {
    FamilySpec::Resnet { dim, activation: Activation::Tanh, weight_structure: WeightStructure::Full }
}

pub fn build_family(spec: &FamilySpec) -> Result<ControlFamily, CliError> {
    spec.build().map_err(|e| CliError::from(e).context("family"))
}

/// Parses a field, pointing at the offending byte on failure.
pub fn parse_field_arg(what: &str, src: &str) -> Result<PolyVectorField, CliError> {
    parse_field(src).map_err(|e| {
        let mut msg = format!("{what}: {e}");
        if let PolyError::Parse { pos, .. } = e {
            msg.push_str(&format!("\n  {src}\n  {}^", " ".repeat(pos.min(src.len()))));
        }
        CliError::validation(msg)
    })
}

/// Stream seed for the `index`-th independent draw of a run.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    seed.wrapping_mul(0x2545_f491_4f6c_dd1d).wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnsembleSpec {
    Points { points: Vec<Vec<f64>> },
    /// `n` distinct uniform points in `[lo, hi]^d`, drawn from the run seed.
    Random { n: usize, lo: f64, hi: f64 },
    /// One point per line.
    Csv { path: PathBuf },
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec::Random { n: 4, lo: -1.0, hi: 1.0 }
    }
}

impl EnsembleSpec {
    pub fn build(&self, dim: usize, seed: u64) -> Result<Ensemble, CliError> {
        let e = match self {
            EnsembleSpec::Points { points } => Ensemble::new(points.clone()),
            EnsembleSpec::Random { n, lo, hi } => {
                if !(lo < hi) {
                    return Err(CliError::validation("ensemble: need lo < hi"));
                }
                Ensemble::random(*n, dim, seed, *lo, *hi)
            }
            EnsembleSpec::Csv { path } => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
                Ensemble::from_csv(&text)
            }
        };
        e.map_err(|e| CliError::from(e).context("ensemble"))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Explicit { segments: Vec<Segment> },
    /// `segments` equal pieces over `total_time`, parameters drawn from the
    /// family's sampler and multiplied by `scale`.
    Random { segments: usize, total_time: f64, scale: f64 },
    /// Network families only: `W` rows with absolute sum at most 1, `A` and
    /// `b` entries in `[-1, 1]`.
    RowBounded { segments: usize, total_time: f64 },
    /// A schedule JSON file as written by `train`.
    File { path: PathBuf },
}

impl ScheduleSpec {
    pub fn build(&self, family: &ControlFamily, seed: u64) -> Result<ControlSchedule, CliError> {
        let check_random = |segments: usize, total_time: f64| {
            if segments == 0 || !(total_time > 0.0 && total_time.is_finite()) {
                return Err(CliError::validation("schedule: need at least one segment and a positive total_time"));
            }
            Ok(())
        };
        let s = match self {
            ScheduleSpec::Explicit { segments } => ControlSchedule::new(segments.clone())?,
            ScheduleSpec::Random { segments, total_time, scale } => {
                check_random(*segments, *total_time)?;
                ControlSchedule::random(family, *segments, *total_time, *scale, &mut rng(seed))?
            }
            ScheduleSpec::RowBounded { segments, total_time } => {
                check_random(*segments, *total_time)?;
                let ControlFamily::ResNet(r) = family else {
                    return Err(CliError::validation("schedule: row_bounded needs a resnet family"));
                };
                let mut g = rng(seed);
                let params = (0..*segments).map(|_| r.sample_row_bounded(&mut g)).collect();
                ControlSchedule::uniform(params, total_time / *segments as f64)?
            }
            ScheduleSpec::File { path } => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
                ControlSchedule::from_json(&text)?
            }
        };
        s.check_for(family).map_err(|e| CliError::from(e).context("schedule"))?;
        Ok(s)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    Explicit { inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>> },
    /// `n` distinct inputs and `n` distinct targets, uniform in `[lo, hi]^d`.
    Random { n: usize, lo: f64, hi: f64 },
    Csv { inputs_path: PathBuf, targets_path: PathBuf },
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec::Random { n: 8, lo: -1.0, hi: 1.0 }
    }
}

impl DatasetSpec {
    pub fn build(&self, dim: usize, seed: u64) -> Result<Dataset, CliError> {
        let read = |p: &PathBuf| -> Result<Ensemble, CliError> {
            let text =
                fs::read_to_string(p).map_err(|e| CliError::io(format!("cannot read {}: {e}", p.display())))?;
            Ok(Ensemble::from_csv(&text)?)
        };
        let d = match self {
            DatasetSpec::Explicit { inputs, targets } => {
                Dataset::new(Ensemble::new(inputs.clone())?, Ensemble::new(targets.clone())?)
            }
            DatasetSpec::Random { n, lo, hi } => {
                if !(lo < hi) {
                    return Err(CliError::validation("dataset: need lo < hi"));
                }
                Dataset::random(*n, dim, seed, *lo, *hi)
            }
            DatasetSpec::Csv { inputs_path, targets_path } => Dataset::new(read(inputs_path)?, read(targets_path)?),
        };
        d.map_err(|e| CliError::from(e).context("dataset"))
    }
}

//! Composite runs for the two separating examples: a divergence-free planar
//! family that interpolates but cannot approximate, and a family with a
//! pinned fixed point that approximates but cannot interpolate.

use std::f64::consts::{PI, TAU};

use clap::{Args, ValueEnum};
use flowlab::approx::{fixed_point_check, volume_floor_check, TargetFunction, PINNED_TOL, VOLUME_FLOOR_BUDGET};
use flowlab::ensemble::{lie_rank_on, Ensemble, DEFAULT_SVD_REL_TOL};
use flowlab::family::ControlFamily;
use flowlab::flow::{integrate_with_jacobian, random_confined_schedule, ControlSchedule, FlowOptions};
use flowlab::liealg::{lie_closure, verify_lemma2_closure};
use flowlab::trainer::shrink::{shrink_then_interpolate, CellGrid, ShrinkConfig};
use flowlab::trainer::{fit_points, OptimizerConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use super::{derive_seed, rng};
use crate::config::{Outcome, Resolved};
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Which {
    /// Volume-preserving family: full Lie rank, yet a volume floor against F = 0
    UipNotUap,
    /// Origin-pinned family: the origin never moves, yet shrink-then-interpolate converges
    UapNotUip,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CounterexampleArgs {
    /// Which example to run [default: uip-not-uap]
    #[arg(long, value_enum)]
    pub which: Option<Which>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UipNotUapSettings {
    /// Ensemble sizes N for the Lie rank check.
    pub sizes: Vec<usize>,
    pub ensembles_per_size: usize,
    pub degree_cap: u32,
    pub depth_cap: u32,
    pub svd_rel_tol: f64,
    /// Random schedules for the volume floor and log-determinant sweep.
    pub sweep_schedules: usize,
    pub sweep_segments: usize,
    pub sweep_total_time: f64,
    pub sweep_scale: f64,
    /// Schedules whose unit-circle trajectories leave `|x|_inf <= confinement` are redrawn.
    pub confinement: f64,
    /// Training run that pulls disc points towards the origin.
    pub adversarial: TrainConfig,
    pub adversarial_points: usize,
}

impl Default for UipNotUapSettings {
    fn default() -> Self {
        Self {
            sizes: vec![2, 3, 4, 5, 6],
            ensembles_per_size: 5,
            degree_cap: 5,
            depth_cap: 8,
            svd_rel_tol: DEFAULT_SVD_REL_TOL,
            sweep_schedules: 10,
            sweep_segments: 4,
            sweep_total_time: 2.0,
            sweep_scale: 1.0,
            confinement: 3.0,
            adversarial: TrainConfig {
                num_segments: 8,
                segment_duration: 0.25,
                optimizer: OptimizerConfig { max_iters: 400, ..OptimizerConfig::default() },
                ..TrainConfig::default()
            },
            adversarial_points: 24,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UapNotUipSettings {
    pub pinned_schedules: usize,
    pub pinned_segments: usize,
    pub pinned_total_time: f64,
    pub pinned_scale: f64,
    /// Degree up to which axis-aligned monomial fields must be brackets.
    pub closure_degree: u32,
    /// Training run that tries to move the origin to `(1, 1)`.
    pub steer: TrainConfig,
    /// Grid sizes `n` (n x n cells on `[-half_width, half_width]^2`) for
    /// shrink-then-interpolate on the coordinate swap.
    pub shrink_grids: Vec<usize>,
    pub half_width: f64,
    pub shrink: ShrinkConfig,
}

impl Default for UapNotUipSettings {
    fn default() -> Self {
        Self {
            pinned_schedules: 100,
            pinned_segments: 4,
            pinned_total_time: 1.0,
            pinned_scale: 1.0,
            closure_degree: 4,
            steer: TrainConfig {
                num_segments: 4,
                optimizer: OptimizerConfig { max_iters: 300, ..OptimizerConfig::default() },
                ..TrainConfig::default()
            },
            shrink_grids: vec![2, 4],
            half_width: 0.5,
            shrink: ShrinkConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleSettings {
    pub which: Which,
    pub uip_not_uap: UipNotUapSettings,
    pub uap_not_uip: UapNotUipSettings,
}

impl Default for CounterexampleSettings {
    fn default() -> Self {
        Self { which: Which::UipNotUap, uip_not_uap: UipNotUapSettings::default(), uap_not_uip: UapNotUipSettings::default() }
    }
}

pub fn counterexamples(args: &CounterexampleArgs, mut cfg: Resolved<CounterexampleSettings>) -> Result<Outcome, CliError> {
    cfg.settings.which = args.which.unwrap_or(cfg.settings.which);
    match cfg.settings.which {
        Which::UipNotUap => {
            cfg.settings.uip_not_uap.adversarial.seed = derive_seed(cfg.seed, 3);
            cfg.settings.uip_not_uap.adversarial.step = cfg.step_size;
            let (result, failure) = uip_not_uap(&cfg.settings.uip_not_uap, cfg.seed, cfg.step_size)?;
            Ok(Outcome::new(&cfg, &result).fail_if(failure.is_some(), failure.unwrap_or_default()))
        }
        Which::UapNotUip => {
            let s = &mut cfg.settings.uap_not_uip;
            s.steer.seed = derive_seed(cfg.seed, 4);
            s.steer.step = cfg.step_size;
            s.shrink.stage1.seed = derive_seed(cfg.seed, 5);
            s.shrink.stage2.seed = derive_seed(cfg.seed, 6);
            s.shrink.stage1.step = cfg.step_size;
            s.shrink.stage2.step = cfg.step_size;
            let (result, failure) = uap_not_uip(&cfg.settings.uap_not_uip, cfg.seed, cfg.step_size)?;
            Ok(Outcome::new(&cfg, &result).fail_if(failure.is_some(), failure.unwrap_or_default()))
        }
    }
}

#[derive(Serialize)]
struct RankEntry {
    n: usize,
    seed: u64,
    achieved_rank: usize,
    target_rank: usize,
}

#[derive(Serialize)]
struct SweepSummary {
    schedules: usize,
    min_error_sq: f64,
    logdet_max_abs: f64,
    logdet_ok: bool,
}

#[derive(Serialize)]
struct AdversarialSummary {
    error_sq: f64,
    floor_respected: bool,
    train_final_max_error: f64,
    train_final_loss: f64,
}

#[derive(Serialize)]
struct UipNotUapResult {
    lie_rank_full: bool,
    ranks: Vec<RankEntry>,
    volume_floor_respected: bool,
    floor: f64,
    budget: f64,
    sweep: SweepSummary,
    adversarial: AdversarialSummary,
}

fn unit_circle(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let a = TAU * i as f64 / n as f64;
            vec![a.cos(), a.sin()]
        })
        .collect()
}

/// Sunflower arrangement of `n` points filling the unit disc.
fn disc_points(n: usize) -> Vec<Vec<f64>> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let r = ((i as f64 + 0.5) / n as f64).sqrt();
            let a = golden * i as f64;
            vec![r * a.cos(), r * a.sin()]
        })
        .collect()
}

fn uip_not_uap(s: &UipNotUapSettings, seed: u64, step: f64) -> Result<(UipNotUapResult, Option<String>), CliError> {
    let family = ControlFamily::volume_preserving();
    let basis = family.as_affine().expect("polynomial family").basis().to_vec();
    log::info!("closing the volume-preserving family at degree {}", s.degree_cap);
    let closure = lie_closure(&basis, s.degree_cap, s.depth_cap)?;
    let mut ranks = Vec::new();
    for &n in &s.sizes {
        for j in 0..s.ensembles_per_size {
            let ens_seed = derive_seed(seed, 1000 + (n * 100 + j) as u64);
            let x = Ensemble::random(n, 2, ens_seed, -1.0, 1.0)?;
            let r = lie_rank_on(&closure, &x, s.svd_rel_tol)?;
            ranks.push(RankEntry { n, seed: ens_seed, achieved_rank: r.achieved_rank, target_rank: r.target_rank });
        }
    }
    let lie_rank_full = ranks.iter().all(|r| r.achieved_rank == r.target_rank);

    let opts = FlowOptions::with_step(step);
    let mut probes = unit_circle(32);
    probes.push(vec![0.0, 0.0]);
    let mut g = rng(derive_seed(seed, 2));
    let mut min_error_sq = f64::INFINITY;
    let mut logdet_max_abs = 0.0f64;
    let mut sweep_ok = true;
    for i in 0..s.sweep_schedules {
        let sched = random_confined_schedule(
            &family,
            s.sweep_segments,
            s.sweep_total_time,
            s.sweep_scale,
            &probes,
            s.confinement,
            &opts,
            1000,
            &mut g,
        )?
        .ok_or_else(|| CliError::numerical(format!("sweep schedule {i}: no draw stayed within the confinement box")))?;
        for p in &probes {
            let r = integrate_with_jacobian(&family, &sched, p, &opts)?;
            logdet_max_abs = logdet_max_abs.max(r.logdet.unwrap_or(f64::INFINITY).abs());
        }
        let v = volume_floor_check(&sched, step)?;
        min_error_sq = min_error_sq.min(v.error_sq);
        sweep_ok &= v.floor_respected;
        log::debug!("sweep {i}: error^2 = {}", v.error_sq);
    }

    let inputs = disc_points(s.adversarial_points);
    let zeros = vec![vec![0.0, 0.0]; inputs.len()];
    let trained = fit_points(&family, &s.adversarial, &inputs, &zeros)?;
    let v = volume_floor_check(&trained.final_params, step)?;
    let adversarial = AdversarialSummary {
        error_sq: v.error_sq,
        floor_respected: v.floor_respected,
        train_final_max_error: trained.final_max_error,
        train_final_loss: trained.final_loss,
    };
    let logdet_ok = logdet_max_abs < 1e-6;
    let volume_floor_respected = sweep_ok && adversarial.floor_respected;
    let failure = if !lie_rank_full {
        Some("Lie rank fell short on some ensemble".to_string())
    } else if !volume_floor_respected {
        Some("an L2 error fell below the volume floor".to_string())
    } else if !logdet_ok {
        Some(format!("log-determinant drifted to {logdet_max_abs:e}"))
    } else {
        None
    };
    let result = UipNotUapResult {
        lie_rank_full,
        ranks,
        volume_floor_respected,
        floor: PI / 2.0,
        budget: VOLUME_FLOOR_BUDGET,
        sweep: SweepSummary { schedules: s.sweep_schedules, min_error_sq, logdet_max_abs, logdet_ok },
        adversarial,
    };
    Ok((result, failure))
}

#[derive(Serialize)]
struct SteerSummary {
    final_max_error: f64,
    blocked: bool,
}

#[derive(Serialize)]
struct ShrinkEntry {
    cells: usize,
    lp_error: f64,
    normalized_lp_error: f64,
    stage2_max_error: f64,
}

#[derive(Serialize)]
struct UapNotUipResult {
    origin_pinned: bool,
    max_origin_norm: f64,
    lemma2_closure_ok: bool,
    steer: SteerSummary,
    shrink_interp_error: f64,
    shrink_errors: Vec<ShrinkEntry>,
    shrink_error_decreasing: bool,
}

fn uap_not_uip(s: &UapNotUipSettings, seed: u64, step: f64) -> Result<(UapNotUipResult, Option<String>), CliError> {
    let family = ControlFamily::origin_pinned();
    let mut g = rng(derive_seed(seed, 7));
    let mut max_origin_norm = 0.0f64;
    for _ in 0..s.pinned_schedules {
        let sched = ControlSchedule::random(&family, s.pinned_segments, s.pinned_total_time, s.pinned_scale, &mut g)?;
        max_origin_norm = max_origin_norm.max(fixed_point_check(&sched, step)?.origin_norm);
    }
    let origin_pinned = max_origin_norm < PINNED_TOL;
    log::info!("checking bracket generation up to degree {}", s.closure_degree);
    let lemma2_closure_ok = verify_lemma2_closure(s.closure_degree);

    let steer = fit_points(&family, &s.steer, &[vec![0.0, 0.0]], &[vec![1.0, 1.0]])?;
    let steer = SteerSummary { final_max_error: steer.final_max_error, blocked: steer.final_max_error >= 1.0 - 1e-6 };

    let mut shrink_errors = Vec::new();
    for &n in &s.shrink_grids {
        log::info!("shrink-then-interpolate on a {n} x {n} grid");
        let r = shrink_then_interpolate(
            &family,
            &TargetFunction::CoordinateSwap,
            &CellGrid::square(s.half_width, n),
            &s.shrink,
        )?;
        shrink_errors.push(ShrinkEntry {
            cells: n,
            lp_error: r.lp_error,
            normalized_lp_error: r.normalized_lp_error,
            stage2_max_error: r.stage2_max_error,
        });
    }
    let shrink_error_decreasing = shrink_errors.windows(2).all(|w| w[1].lp_error < w[0].lp_error);
    let shrink_interp_error = shrink_errors.last().map_or(f64::NAN, |e| e.lp_error);
    let failure = if !origin_pinned {
        Some(format!("the origin moved by {max_origin_norm:e}"))
    } else if !lemma2_closure_ok {
        Some("axis-aligned monomial fields are missing from the closure".to_string())
    } else if !steer.blocked {
        Some("the origin was steered towards (1, 1)".to_string())
    } else if !shrink_error_decreasing {
        Some("the L^p error did not decrease under grid refinement".to_string())
    } else {
        None
    };
    let result = UapNotUipResult {
        origin_pinned,
        max_origin_norm,
        lemma2_closure_ok,
        steer,
        shrink_interp_error,
        shrink_errors,
        shrink_error_decreasing,
    };
    Ok((result, failure))
}

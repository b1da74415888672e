//! `train` and `lp`.

use clap::Args;
use flowlab::approx::{lp_error, DomainSpec, LpReport, TargetFunction};
use flowlab::family::FamilySpec;
use flowlab::flow::{flow_points, ControlSchedule, FlowOptions};
use flowlab::trainer::shrink::{shrink_then_interpolate, CellGrid, ShrinkConfig};
use flowlab::trainer::{train as run_train, TrainConfig, TrainReport};
use serde::{Deserialize, Serialize};

use super::{build_family, derive_seed, named, tanh_net, DatasetSpec, ScheduleSpec};
use crate::config::{Outcome, Resolved};
use crate::error::CliError;

#[derive(Args, Debug, Clone, Default)]
pub struct TrainArgs {
    /// Adam iterations
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Adam learning rate
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Number of piecewise-constant segments
    #[arg(long)]
    pub segments: Option<usize>,
    /// Report non-convergence without failing
    #[arg(long)]
    pub allow_unconverged: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSettings {
    pub family: FamilySpec,
    pub dataset: DatasetSpec,
    /// Training options; `seed` and `step` are taken from the global seed
    /// and step size.
    pub train: TrainConfig,
    pub require_convergence: bool,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            family: tanh_net(2),
            dataset: DatasetSpec::default(),
            train: TrainConfig { num_segments: 12, ..TrainConfig::default() },
            require_convergence: true,
        }
    }
}

#[derive(Serialize)]
struct TrainResult<'a> {
    inputs: &'a [Vec<f64>],
    targets: &'a [Vec<f64>],
    report: &'a TrainReport,
}

pub fn train(args: &TrainArgs, mut cfg: Resolved<TrainSettings>) -> Result<Outcome, CliError> {
    let s = &mut cfg.settings;
    s.train.seed = cfg.seed;
    s.train.step = cfg.step_size;
    if let Some(n) = args.max_iters {
        s.train.optimizer.max_iters = n;
    }
    if let Some(lr) = args.learning_rate {
        s.train.optimizer.learning_rate = lr;
    }
    if let Some(k) = args.segments {
        s.train.num_segments = k;
    }
    s.require_convergence &= !args.allow_unconverged;
    let family = build_family(&s.family)?;
    let data = s.dataset.build(family.dim(), derive_seed(cfg.seed, 1))?;
    log::info!("training on {} points, {} segments", data.len(), s.train.num_segments);
    let report = run_train(&family, &s.train, &data)?;
    log::info!("final max error {:e} after {} iterations", report.final_max_error, report.iterations_used);
    let failed = s.require_convergence && !report.converged;
    let result = TrainResult { inputs: data.inputs.points(), targets: data.targets.points(), report: &report };
    let message = format!("did not reach loss_target (final max error {:e})", report.final_max_error);
    Ok(Outcome::new(&cfg, &result)
        .sidecar("loss_history", report.loss_history_csv())
        .sidecar("schedule", schedule_csv(&report.final_params))
        .fail_if(failed, message))
}

/// `segment,duration,p0,p1,...` rows.
fn schedule_csv(s: &ControlSchedule) -> String {
    let p = s.segments().first().map_or(0, |g| g.params.len());
    let mut out = String::from("segment,duration");
    for i in 0..p {
        out.push_str(&format!(",p{i}"));
    }
    out.push('\n');
    for (i, g) in s.segments().iter().enumerate() {
        out.push_str(&format!("{i},{}", g.duration));
        for v in &g.params {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

/// Where the flow map of an `lp` run comes from.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LpSource {
    Schedule { schedule: ScheduleSpec },
    /// Squeeze the cells of `grid`, then interpolate their centres to the
    /// target values.
    Shrink { grid: CellGrid, config: Box<ShrinkConfig> },
}

#[derive(Args, Debug, Clone, Default)]
pub struct LpArgs {
    /// Exponent p
    #[arg(long)]
    pub p: Option<f64>,
    /// Run the squeeze-then-interpolate construction on an n x n grid over the domain box
    #[arg(long, value_name = "N")]
    pub shrink_grid: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LpSettings {
    pub family: FamilySpec,
    pub target: TargetFunction,
    pub domain: DomainSpec,
    pub p: f64,
    pub source: LpSource,
}

impl Default for LpSettings {
    fn default() -> Self {
        Self {
            family: named("volume_preserving"),
            target: TargetFunction::Constant { value: vec![0.0, 0.0] },
            domain: DomainSpec::unit_disc(),
            p: 2.0,
            source: LpSource::Schedule { schedule: ScheduleSpec::Random { segments: 4, total_time: 1.0, scale: 1.0 } },
        }
    }
}

#[derive(Serialize)]
struct LpResult<'a> {
    schedule: &'a ControlSchedule,
    lp: &'a LpReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    shrink: Option<ShrinkSummary>,
}

#[derive(Serialize)]
struct ShrinkSummary {
    stage1_max_error: Vec<f64>,
    stage2_max_error: f64,
    stage2_converged: bool,
    cell_diameter: f64,
}

pub fn lp(args: &LpArgs, mut cfg: Resolved<LpSettings>) -> Result<Outcome, CliError> {
    let s = &mut cfg.settings;
    s.p = args.p.unwrap_or(s.p);
    if let Some(n) = args.shrink_grid {
        let DomainSpec::Box { lo, hi, .. } = &s.domain else {
            return Err(CliError::validation("--shrink-grid needs a box domain"));
        };
        s.source = LpSource::Shrink {
            grid: CellGrid { lo: lo.clone(), hi: hi.clone(), cells: vec![n; lo.len()] },
            config: Box::default(),
        };
    }
    let family = build_family(&s.family)?;
    let (schedule, shrink) = match &mut s.source {
        LpSource::Schedule { schedule } => (schedule.build(&family, cfg.seed)?, None),
        LpSource::Shrink { grid, config } => {
            config.stage1.seed = cfg.seed;
            config.stage2.seed = derive_seed(cfg.seed, 2);
            config.stage1.step = cfg.step_size;
            config.stage2.step = cfg.step_size;
            let r = shrink_then_interpolate(&family, &s.target, grid, config)?;
            let summary = ShrinkSummary {
                stage1_max_error: r.stage1_max_error,
                stage2_max_error: r.stage2_max_error,
                stage2_converged: r.stage2_converged,
                cell_diameter: r.cell_diameter,
            };
            (r.schedule, Some(summary))
        }
    };
    let report = lp_error(&family, &schedule, &s.target, &s.domain, s.p, cfg.step_size)?;
    let blew_up = report.blew_up;
    let mut out = Outcome::new(&cfg, &LpResult { schedule: &schedule, lp: &report, shrink });
    if cfg.output_path.is_some() {
        out = out.sidecar("quadrature", quadrature_table(&cfg.settings, &family, &schedule, cfg.step_size)?);
    }
    Ok(out.fail_if(blew_up, "the flow blew up on a quadrature node"))
}

/// Per-node `x1..xd, weight, error` where `error = |F(x) - phi(x)|_2`.
fn quadrature_table(
    s: &LpSettings,
    family: &flowlab::family::ControlFamily,
    schedule: &ControlSchedule,
    step: f64,
) -> Result<String, CliError> {
    let rule = s.domain.rule()?;
    let target = s.target.prepare(family.dim())?;
    let ends = flow_points(family, schedule, &rule.nodes, &FlowOptions::with_step(step))?;
    let d = family.dim();
    let mut out = (1..=d).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",");
    out.push_str(",weight,error\n");
    for ((x, w), e) in rule.nodes.iter().zip(&rule.weights).zip(&ends) {
        let err = match e {
            Some(y) => target.eval(x).iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
            None => f64::INFINITY,
        };
        for v in x {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{w},{err}\n"));
    }
    Ok(out)
}

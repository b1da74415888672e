//! `flow`, `gronwall` and `monotone1d`.

use clap::Args;
use flowlab::family::{ControlFamily, FamilySpec};
use flowlab::flow::{
    flow_points, gronwall_check, integrate, integrate_with_jacobian, monotone_1d_check, ControlSchedule, FlowOptions,
    GronwallReport, DEFAULT_BLOWUP_THRESHOLD, DEFAULT_RECORD_EVERY,
};
use serde::{Deserialize, Serialize};

use super::{build_family, named, tanh_net, ScheduleSpec};
use crate::config::{Outcome, Resolved};
use crate::error::CliError;

fn parse_point(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|v| v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}"))).collect()
}

#[derive(Args, Debug, Clone, Default)]
pub struct FlowArgs {
    /// Initial point, comma separated
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub x0: Option<::std::vec::Vec<f64>>,
    /// Schedule JSON file (replaces the configured schedule)
    #[arg(long, value_name = "FILE")]
    pub schedule: Option<std::path::PathBuf>,
    /// Report a blow-up without failing
    #[arg(long)]
    pub allow_blowup: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSettings {
    pub family: FamilySpec,
    pub schedule: ScheduleSpec,
    pub x0: Vec<f64>,
    /// Integrate the variational equation for the Jacobian and log-determinant.
    pub jacobian: bool,
    pub blowup_threshold: f64,
    /// Keep every k-th step in the trajectory; `null` keeps none.
    pub record_every: Option<usize>,
    pub allow_blowup: bool,
}

impl Default for FlowSettings {
    fn default() -> Self {
        Self {
            family: named("volume_preserving"),
            schedule: ScheduleSpec::Random { segments: 4, total_time: 1.0, scale: 1.0 },
            x0: vec![0.5, 0.25],
            jacobian: true,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            record_every: Some(DEFAULT_RECORD_EVERY),
            allow_blowup: false,
        }
    }
}

#[derive(Serialize)]
struct FlowReport<'a> {
    schedule: &'a ControlSchedule,
    flow: &'a flowlab::flow::FlowResult,
}

pub fn flow(args: &FlowArgs, mut cfg: Resolved<FlowSettings>) -> Result<Outcome, CliError> {
    let s = &mut cfg.settings;
    if let Some(x0) = &args.x0 {
        s.x0 = x0.clone();
    }
    if let Some(path) = &args.schedule {
        s.schedule = ScheduleSpec::File { path: path.clone() };
    }
    s.allow_blowup |= args.allow_blowup;
    let family = build_family(&s.family)?;
    let schedule = s.schedule.build(&family, cfg.seed)?;
    let opts = FlowOptions { step: cfg.step_size, blowup_threshold: s.blowup_threshold, record_every: s.record_every };
    let r = if s.jacobian {
        integrate_with_jacobian(&family, &schedule, &s.x0, &opts)?
    } else {
        integrate(&family, &schedule, &s.x0, &opts)?
    };
    if r.blew_up {
        log::warn!("trajectory blew up at t = {}", r.blowup_time.unwrap_or(f64::NAN));
    }
    let failed = r.blew_up && !s.allow_blowup;
    let diagnostic = r.diagnostic.clone().unwrap_or_default();
    let mut out = Outcome::new(&cfg, &FlowReport { schedule: &schedule, flow: &r });
    if let Some(csv) = r.trajectory_csv() {
        out = out.sidecar("trajectory", csv);
    }
    Ok(out.fail_if(failed, format!("blow-up: {diagnostic}")))
}

#[derive(Args, Debug, Clone, Default)]
pub struct GronwallArgs {
    /// Initial point, comma separated
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub x0: Option<::std::vec::Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GronwallSettings {
    pub family: FamilySpec,
    pub schedule: ScheduleSpec,
    pub x0: Vec<f64>,
    /// Growth constants in `|f(x)|_1 <= c1 + c2 |x|_1`; `c1` defaults to `d`.
    pub c1: Option<f64>,
    pub c2: f64,
    /// Lipschitz constant; defaults to the largest per-segment value of
    /// `|W|_1 |A|_1 sup|sigma'|` (induced `l1` norms) for network families.
    pub lipschitz: Option<f64>,
}

impl Default for GronwallSettings {
    fn default() -> Self {
        Self {
            family: tanh_net(2),
            schedule: ScheduleSpec::RowBounded { segments: 4, total_time: 2.0 },
            x0: vec![0.5, -0.5],
            c1: None,
            c2: 0.0,
            lipschitz: None,
        }
    }
}

#[derive(Serialize)]
struct GronwallResult<'a> {
    schedule: &'a ControlSchedule,
    c1: f64,
    c2: f64,
    lipschitz: f64,
    /// `d max|W| max|A|`, the entrywise estimate, for comparison.
    entrywise_lipschitz_estimate: Option<f64>,
    report: &'a GronwallReport,
}

fn per_segment_max(schedule: &ControlSchedule, f: impl Fn(&[f64]) -> f64) -> f64 {
    schedule.segments().iter().map(|s| f(&s.params)).fold(0.0, f64::max)
}

pub fn gronwall(args: &GronwallArgs, mut cfg: Resolved<GronwallSettings>) -> Result<Outcome, CliError> {
    let s = &mut cfg.settings;
    if let Some(x0) = &args.x0 {
        s.x0 = x0.clone();
    }
    let family = build_family(&s.family)?;
    let schedule = s.schedule.build(&family, cfg.seed)?;
    let net = match &family {
        ControlFamily::ResNet(r) => Some(*r),
        ControlFamily::Affine(_) => None,
    };
    let lipschitz = match (s.lipschitz, net) {
        (Some(l), _) => l,
        (None, Some(r)) => per_segment_max(&schedule, |p| r.l1_lipschitz_bound(p)),
        (None, None) => return Err(CliError::validation("lipschitz must be given for polynomial families")),
    };
    let c1 = s.c1.unwrap_or(family.dim() as f64);
    if !(c1 >= 0.0 && s.c2 >= 0.0 && lipschitz >= 0.0) {
        return Err(CliError::validation("c1, c2 and lipschitz must be non-negative"));
    }
    let report = gronwall_check(&family, &schedule, &s.x0, cfg.step_size, c1, s.c2, lipschitz)?;
    let result = GronwallResult {
        schedule: &schedule,
        c1,
        c2: s.c2,
        lipschitz,
        entrywise_lipschitz_estimate: net.map(|r| per_segment_max(&schedule, |p| r.entrywise_lipschitz_estimate(p))),
        report: &report,
    };
    let out = Outcome::new(&cfg, &result);
    Ok(match &report.diagnostic {
        Some(d) if !report.applicable => out.fail_if(true, d.clone()),
        _ => out.fail_if(!(report.bound_norm_ok && report.bound_lip_ok), "a Gronwall bound was violated"),
    })
}

#[derive(Args, Debug, Clone, Default)]
pub struct MonotoneArgs {
    /// Strictly increasing points, comma separated
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub points: Option<::std::vec::Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonotoneSettings {
    pub family: FamilySpec,
    pub schedule: ScheduleSpec,
    pub points: Vec<f64>,
}

impl Default for MonotoneSettings {
    fn default() -> Self {
        Self {
            family: named("cubic_quadratic"),
            schedule: ScheduleSpec::Random { segments: 4, total_time: 1.0, scale: 0.5 },
            points: vec![-1.0, 0.0, 0.5],
        }
    }
}

#[derive(Serialize)]
struct MonotoneResult<'a> {
    schedule: &'a ControlSchedule,
    /// `null` when a trajectory blew up.
    monotone: Option<bool>,
    endpoints: Vec<Option<f64>>,
}

pub fn monotone1d(args: &MonotoneArgs, mut cfg: Resolved<MonotoneSettings>) -> Result<Outcome, CliError> {
    let s = &mut cfg.settings;
    if let Some(p) = &args.points {
        s.points = p.clone();
    }
    let family = build_family(&s.family)?;
    let schedule = s.schedule.build(&family, cfg.seed)?;
    let monotone = monotone_1d_check(&family, &schedule, &s.points, cfg.step_size)?;
    let pts: Vec<Vec<f64>> = s.points.iter().map(|&p| vec![p]).collect();
    let endpoints = flow_points(&family, &schedule, &pts, &FlowOptions::with_step(cfg.step_size))?
        .into_iter()
        .map(|e| e.map(|v| v[0]))
        .collect();
    let out = Outcome::new(&cfg, &MonotoneResult { schedule: &schedule, monotone, endpoints });
    Ok(match monotone {
        None => out.fail_if(true, "a trajectory blew up"),
        Some(ok) => out.fail_if(!ok, "order was not preserved"),
    })
}

//! Flows of piecewise-constant controls.
//!
//! A schedule is a list of `(duration, params)` segments; its flow map is the
//! composition of the segment flows in order. Integration is classical RK4
//! with a fixed step, the last sub-step of each segment shortened so that
//! segment boundaries are hit exactly.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::family::{ControlFamily, FamilyError, FieldKernel};

pub const DEFAULT_STEP: f64 = 1e-2;
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e8;
pub const DEFAULT_RECORD_EVERY: usize = 10;
/// Coordinate-wise offset of the companion trajectories in [`gronwall_check`].
pub const GRONWALL_DELTA: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("schedule has no segments")]
    EmptySchedule,
    #[error("segment {index} has non-positive or non-finite duration {value}")]
    BadDuration { index: usize, value: f64 },
    #[error("step size must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("blow-up threshold must be positive, got {0}")]
    BadThreshold(f64),
    #[error("segment {index}: {source}")]
    Segment { index: usize, source: FamilyError },
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error("trajectory blew up at t = {time}: {diagnostic}")]
    BlowUp { time: f64, diagnostic: String },
    #[error("points must be strictly increasing (violated at index {0})")]
    NotIncreasing(usize),
    #[error("check needs a one-dimensional family, got dimension {0}")]
    NotOneDimensional(usize),
    #[error("invalid schedule JSON: {0}")]
    Json(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub duration: f64,
    pub params: Vec<f64>,
}

/// Piecewise-constant control: `{"segments": [{"duration": t, "params": [...]}, ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControlSchedule {
    segments: Vec<Segment>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    segments: Vec<Segment>,
}

impl<'de> Deserialize<'de> for ControlSchedule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawSchedule::deserialize(d)?;
        ControlSchedule::new(raw.segments).map_err(serde::de::Error::custom)
    }
}

impl ControlSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self, FlowError> {
        if segments.is_empty() {
            return Err(FlowError::EmptySchedule);
        }
        for (index, s) in segments.iter().enumerate() {
            if !(s.duration > 0.0 && s.duration.is_finite()) {
                return Err(FlowError::BadDuration { index, value: s.duration });
            }
        }
        Ok(Self { segments })
    }

    /// One segment.
    pub fn constant(params: Vec<f64>, duration: f64) -> Result<Self, FlowError> {
        Self::new(vec![Segment { duration, params }])
    }

    /// Equal-length segments, one per parameter vector.
    pub fn uniform(params: Vec<Vec<f64>>, segment_duration: f64) -> Result<Self, FlowError> {
        Self::new(params.into_iter().map(|params| Segment { duration: segment_duration, params }).collect())
    }

    /// `k` equal segments over `total_time`, parameters drawn by
    /// [`ControlFamily::sample_params`] and multiplied by `scale`.
    pub fn random<R: Rng + ?Sized>(
        family: &ControlFamily,
        k: usize,
        total_time: f64,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self, FlowError> {
        let params = (0..k)
            .map(|_| family.sample_params(rng).into_iter().map(|p| p * scale).collect())
            .collect();
        Self::uniform(params, total_time / k as f64)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_time(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &ControlSchedule) -> ControlSchedule {
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().cloned());
        ControlSchedule { segments }
    }

    /// Segments in reverse order with the field negated, so that running it
    /// after `self` approximately undoes `self`. Network members negate `W`.
    pub fn reversed(&self, family: &ControlFamily) -> ControlSchedule {
        let flip = |p: &[f64]| -> Vec<f64> {
            match family {
                ControlFamily::Affine(_) => p.iter().map(|v| -v).collect(),
                ControlFamily::ResNet(r) => {
                    p.iter().enumerate().map(|(i, v)| if i < r.w_len() { -v } else { *v }).collect()
                }
            }
        };
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| Segment { duration: s.duration, params: flip(&s.params) })
            .collect();
        ControlSchedule { segments }
    }

    pub fn check_for(&self, family: &ControlFamily) -> Result<(), FlowError> {
        for (index, s) in self.segments.iter().enumerate() {
            family.check_params(&s.params).map_err(|source| FlowError::Segment { index, source })?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, FlowError> {
        serde_json::from_str(text).map_err(|e| FlowError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serialises")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowOptions {
    pub step: f64,
    pub blowup_threshold: f64,
    /// Record every k-th step of the trajectory; `None` records nothing.
    pub record_every: Option<usize>,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { step: DEFAULT_STEP, blowup_threshold: DEFAULT_BLOWUP_THRESHOLD, record_every: None }
    }
}

impl FlowOptions {
    pub fn with_step(step: f64) -> Self {
        Self { step, ..Self::default() }
    }

    fn validate(&self) -> Result<(), FlowError> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(FlowError::BadStep(self.step));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(FlowError::BadThreshold(self.blowup_threshold));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub x: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowResult {
    /// Last finite state; at blow-up, the state at `blowup_time`.
    pub endpoint: Vec<f64>,
    pub jacobian: Option<Vec<Vec<f64>>>,
    pub logdet: Option<f64>,
    /// Set when the Jacobian went through ReLU kinks (a.e. derivative).
    pub nonsmooth: bool,
    pub blew_up: bool,
    pub blowup_time: Option<f64>,
    pub diagnostic: Option<String>,
    pub trajectory: Option<Vec<TrajectoryPoint>>,
    pub step_size: f64,
}

impl FlowResult {
    /// CSV with header `t,x1,..,xd`.
    pub fn trajectory_csv(&self) -> Option<String> {
        let traj = self.trajectory.as_ref()?;
        let d = self.endpoint.len();
        let mut out = String::from("t");
        for i in 1..=d {
            out.push_str(&format!(",x{i}"));
        }
        out.push('\n');
        for p in traj {
            out.push_str(&format!("{}", p.t));
            for v in &p.x {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        Some(out)
    }
}

/// Number of sub-steps and length of the last one for a segment.
pub fn substeps(duration: f64, step: f64) -> (usize, f64) {
    let n = ((duration / step) - 1e-9).ceil().max(1.0) as usize;
    (n, duration - (n - 1) as f64 * step)
}

struct Buffers {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
    jac: Vec<f64>,
}

impl Buffers {
    fn new(n: usize, d: usize) -> Self {
        Self { k: std::array::from_fn(|_| vec![0.0; n]), tmp: vec![0.0; n], jac: vec![0.0; d * d] }
    }
}

/// Right-hand side of `x' = f(x)`, optionally with `J' = Df J` and `L' = div f`.
#[inline]
fn rhs(kern: &FieldKernel, d: usize, aug: bool, y: &[f64], out: &mut [f64], jac: &mut [f64]) {
    kern.eval_into(&y[..d], &mut out[..d]);
    if aug {
        kern.jacobian_into(&y[..d], jac);
        for i in 0..d {
            for j in 0..d {
                out[d + i * d + j] = (0..d).map(|k| jac[i * d + k] * y[d + k * d + j]).sum();
            }
        }
        out[d + d * d] = kern.divergence(&y[..d]);
    }
}

#[inline]
fn rk4(kern: &FieldKernel, d: usize, aug: bool, y: &mut [f64], h: f64, b: &mut Buffers) {
    let Buffers { k, tmp, jac } = b;
    let [k1, k2, k3, k4] = k;
    rhs(kern, d, aug, y, k1, jac);
    for i in 0..y.len() {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    rhs(kern, d, aug, tmp, k2, jac);
    for i in 0..y.len() {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    rhs(kern, d, aug, tmp, k3, jac);
    for i in 0..y.len() {
        tmp[i] = y[i] + h * k3[i];
    }
    rhs(kern, d, aug, tmp, k4, jac);
    for i in 0..y.len() {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

fn blowup_reason(y: &[f64], d: usize, threshold: f64) -> Option<String> {
    if y.iter().any(|v| !v.is_finite()) {
        return Some("non-finite state".to_string());
    }
    let norm = y[..d].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (norm > threshold).then(|| format!("|x|_inf = {norm:e} exceeded threshold {threshold:e}"))
}

struct Outcome {
    blowup: Option<(f64, String)>,
}

/// A schedule with every segment resolved to a [`FieldKernel`].
#[derive(Clone, Debug)]
pub struct CompiledSchedule {
    dim: usize,
    nonsmooth: bool,
    segments: Vec<(f64, FieldKernel)>,
}

impl CompiledSchedule {
    pub fn new(family: &ControlFamily, schedule: &ControlSchedule) -> Result<Self, FlowError> {
        schedule.check_for(family)?;
        let segments = schedule
            .segments
            .iter()
            .map(|s| Ok((s.duration, family.kernel(&s.params)?)))
            .collect::<Result<Vec<_>, FlowError>>()?;
        Ok(Self { dim: family.dim(), nonsmooth: !family.is_smooth(), segments })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Steps `y` (state, plus Jacobian and logdet when `aug`) through the
    /// schedule, calling `observe(step_index, t, y)` after every step.
    fn run<F: FnMut(usize, f64, &[f64])>(&self, y: &mut [f64], aug: bool, opts: &FlowOptions, mut observe: F) -> Outcome {
        let d = self.dim;
        let mut bufs = Buffers::new(y.len(), d);
        let mut prev = y.to_vec();
        if let Some(msg) = blowup_reason(y, d, opts.blowup_threshold) {
            return Outcome { blowup: Some((0.0, msg)) };
        }
        let mut seg_start = 0.0;
        let mut index = 0;
        for (duration, kern) in &self.segments {
            let (n, last) = substeps(*duration, opts.step);
            for j in 0..n {
                let h = if j + 1 == n { last } else { opts.step };
                let t_left = seg_start + j as f64 * opts.step;
                prev.copy_from_slice(y);
                rk4(kern, d, aug, y, h, &mut bufs);
                if let Some(msg) = blowup_reason(y, d, opts.blowup_threshold) {
                    y.copy_from_slice(&prev);
                    return Outcome { blowup: Some((t_left, msg)) };
                }
                index += 1;
                let t = if j + 1 == n { seg_start + duration } else { t_left + h };
                observe(index, t, y);
            }
            seg_start += duration;
        }
        Outcome { blowup: None }
    }

    /// Endpoint only; `Err` carries the blow-up time and diagnostic.
    pub fn endpoint(&self, x0: &[f64], opts: &FlowOptions) -> Result<Vec<f64>, FlowError> {
        let mut y = x0.to_vec();
        match self.run(&mut y, false, opts, |_, _, _| {}).blowup {
            None => Ok(y),
            Some((time, diagnostic)) => Err(FlowError::BlowUp { time, diagnostic }),
        }
    }

    /// Largest `|x(t)|_inf` over the steps of the trajectory from `x0`.
    pub fn max_excursion(&self, x0: &[f64], opts: &FlowOptions) -> Result<f64, FlowError> {
        let mut y = x0.to_vec();
        let mut m = x0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let out = self.run(&mut y, false, opts, |_, _, y| m = y.iter().fold(m, |m, v| m.max(v.abs())));
        match out.blowup {
            None => Ok(m),
            Some((time, diagnostic)) => Err(FlowError::BlowUp { time, diagnostic }),
        }
    }

    fn integrate_inner(&self, x0: &[f64], aug: bool, opts: &FlowOptions) -> FlowResult {
        let d = self.dim;
        let mut y = x0.to_vec();
        if aug {
            y.extend((0..d * d).map(|ij| f64::from(u8::from(ij / d == ij % d))));
            y.push(0.0);
        }
        let mut trajectory = opts.record_every.map(|_| vec![TrajectoryPoint { t: 0.0, x: x0.to_vec() }]);
        let every = opts.record_every.unwrap_or(usize::MAX).max(1);
        let total_steps: usize = self.segments.iter().map(|(dur, _)| substeps(*dur, opts.step).0).sum();
        let outcome = self.run(&mut y, aug, opts, |i, t, y| {
            if let Some(tr) = trajectory.as_mut() {
                if i % every == 0 || i == total_steps {
                    tr.push(TrajectoryPoint { t, x: y[..d].to_vec() });
                }
            }
        });
        let (jacobian, logdet) = if aug {
            let jac = (0..d).map(|i| y[d + i * d..d + i * d + d].to_vec()).collect();
            (Some(jac), Some(y[d + d * d]))
        } else {
            (None, None)
        };
        let (blew_up, blowup_time, diagnostic) = match outcome.blowup {
            Some((t, msg)) => (true, Some(t), Some(msg)),
            None => (false, None, None),
        };
        y.truncate(d);
        FlowResult {
            endpoint: y,
            jacobian,
            logdet,
            nonsmooth: aug && self.nonsmooth,
            blew_up,
            blowup_time,
            diagnostic,
            trajectory,
            step_size: opts.step,
        }
    }
}

fn prepare(
    family: &ControlFamily,
    schedule: &ControlSchedule,
    x0: &[f64],
    opts: &FlowOptions,
) -> Result<CompiledSchedule, FlowError> {
    opts.validate()?;
    family.check_point(x0)?;
    CompiledSchedule::new(family, schedule)
}

/// Integrates `x0` through the schedule. Blow-up is reported in the result,
/// not as an error.
pub fn integrate(
    family: &ControlFamily,
    schedule: &ControlSchedule,
    x0: &[f64],
    opts: &FlowOptions,
) -> Result<FlowResult, FlowError> {
    Ok(prepare(family, schedule, x0, opts)?.integrate_inner(x0, false, opts))
}

/// As [`integrate`], also carrying the variational equation `J' = Df J`,
/// `J(0) = I`, and `L' = div f`, `L(0) = 0`.
pub fn integrate_with_jacobian(
    family: &ControlFamily,
    schedule: &ControlSchedule,
    x0: &[f64],
    opts: &FlowOptions,
) -> Result<FlowResult, FlowError> {
    Ok(prepare(family, schedule, x0, opts)?.integrate_inner(x0, true, opts))
}

/// Endpoints of many points in parallel; `None` marks a blow-up.
pub fn flow_points(
    family: &ControlFamily,
    schedule: &ControlSchedule,
    points: &[Vec<f64>],
    opts: &FlowOptions,
) -> Result<Vec<Option<Vec<f64>>>, FlowError> {
    opts.validate()?;
    for p in points {
        family.check_point(p)?;
    }
    let compiled = CompiledSchedule::new(family, schedule)?;
    Ok(points.par_iter().map(|p| compiled.endpoint(p, opts).ok()).collect())
}

/// Draws schedules as [`ControlSchedule::random`] until every probe
/// trajectory stays in `|x|_inf <= bound`; `None` if `max_draws` draws
/// all leave the box.
#[allow(clippy::too_many_arguments)]
pub fn random_confined_schedule<R: Rng + ?Sized>(
    family: &ControlFamily,
    k: usize,
    total_time: f64,
    scale: f64,
    probes: &[Vec<f64>],
    bound: f64,
    opts: &FlowOptions,
    max_draws: usize,
    rng: &mut R,
) -> Result<Option<ControlSchedule>, FlowError> {
    opts.validate()?;
    for p in probes {
        family.check_point(p)?;
    }
    for _ in 0..max_draws {
        let s = ControlSchedule::random(family, k, total_time, scale, rng)?;
        let compiled = CompiledSchedule::new(family, &s)?;
        let inside = probes
            .par_iter()
            .all(|p| compiled.max_excursion(p, opts).is_ok_and(|m| m <= bound));
        if inside {
            return Ok(Some(s));
        }
    }
    Ok(None)
}

/// Endpoint together with reverse-mode derivatives of a scalar function of it.
#[derive(Clone, Debug)]
pub struct EndpointVjp {
    pub endpoint: Vec<f64>,
    pub grad_x0: Vec<f64>,
    /// One gradient per segment, same layout as the segment parameters.
    pub grad_params: Vec<Vec<f64>>,
    /// Derivative with respect to each segment duration (the step grid is
    /// held fixed, so only the last sub-step of a segment depends on it).
    pub grad_durations: Vec<f64>,
}

/// Discrete adjoint of the RK4 flow: integrates `x0`, asks `cotangent` for
/// `dloss/dendpoint`, and propagates it back through every RK4 stage.
pub fn endpoint_vjp<C>(
    family: &ControlFamily,
    schedule: &ControlSchedule,
    x0: &[f64],
    opts: &FlowOptions,
    cotangent: C,
) -> Result<EndpointVjp, FlowError>
where
    C: FnOnce(&[f64]) -> Vec<f64>,
{
    let compiled = prepare(family, schedule, x0, opts)?;
    let d = family.dim();
    // tape of step start states
    let mut tape: Vec<f64> = x0.to_vec();
    let mut y = x0.to_vec();
    if let Some((time, diagnostic)) = compiled
        .run(&mut y, false, opts, |_, _, y| tape.extend_from_slice(y))
        .blowup
    {
        return Err(FlowError::BlowUp { time, diagnostic });
    }
    let endpoint = tape.split_off(tape.len() - d);
    let mut a = cotangent(&endpoint);
    assert_eq!(a.len(), d, "cotangent length");

    let mut grad_params: Vec<Vec<f64>> = schedule.segments.iter().map(|s| vec![0.0; s.params.len()]).collect();
    let mut grad_durations = vec![0.0; schedule.len()];
    let mut k = [vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]];
    let mut ys = [vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]];
    let mut g = [vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]];
    let mut ak = vec![0.0; d];

    let mut step_index = tape.len() / d;
    for (s, seg) in schedule.segments.iter().enumerate().rev() {
        let kern = &compiled.segments[s].1;
        let (n, last) = substeps(seg.duration, opts.step);
        for j in (0..n).rev() {
            step_index -= 1;
            let h = if j + 1 == n { last } else { opts.step };
            let y0 = &tape[step_index * d..step_index * d + d];
            ys[0].copy_from_slice(y0);
            kern.eval_into(&ys[0], &mut k[0]);
            for (stage, c) in [(1, 0.5 * h), (2, 0.5 * h), (3, h)] {
                for i in 0..d {
                    ys[stage][i] = y0[i] + c * k[stage - 1][i];
                }
                kern.eval_into(&ys[stage], &mut k[stage]);
            }
            // stage 4 back to stage 1
            let gp = &mut grad_params[s];
            for i in 0..d {
                ak[i] = h / 6.0 * a[i];
            }
            family.vjp(&seg.params, &ys[3], &ak, &mut g[3], gp);
            for i in 0..d {
                ak[i] = h / 3.0 * a[i] + h * g[3][i];
            }
            family.vjp(&seg.params, &ys[2], &ak, &mut g[2], gp);
            for i in 0..d {
                ak[i] = h / 3.0 * a[i] + 0.5 * h * g[2][i];
            }
            family.vjp(&seg.params, &ys[1], &ak, &mut g[1], gp);
            for i in 0..d {
                ak[i] = h / 6.0 * a[i] + 0.5 * h * g[1][i];
            }
            family.vjp(&seg.params, &ys[0], &ak, &mut g[0], gp);
            if j + 1 == n {
                let mut dh = 0.0;
                for i in 0..d {
                    dh += a[i] * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]) / 6.0;
                    dh += g[1][i] * 0.5 * k[0][i] + g[2][i] * 0.5 * k[1][i] + g[3][i] * k[2][i];
                }
                grad_durations[s] = dh;
            }
            for i in 0..d {
                a[i] += g[0][i] + g[1][i] + g[2][i] + g[3][i];
            }
        }
    }
    Ok(EndpointVjp { endpoint, grad_x0: a, grad_params, grad_durations })
}

#[derive(Clone, Debug, Serialize)]
pub struct GronwallReport {
    /// False when a trajectory blew up; the bounds are then not checked.
    pub applicable: bool,
    pub bound_norm_ok: bool,
    pub bound_lip_ok: bool,
    /// Smallest `bound - observed` over all recorded steps.
    pub norm_margin: f64,
    pub lip_margin: f64,
    pub checks: usize,
    pub diagnostic: Option<String>,
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn within(observed: f64, bound: f64) -> bool {
    observed <= bound * (1.0 + 1e-9) + 1e-14
}

/// Checks `|x(t)|_1 <= (|x0|_1 + c1 t) e^{c2 t}` and
/// `|x(t) - y(t)|_1 <= e^{L t} |x0 - y0|_1` at every step, where `y` starts
/// at `x0 + delta e_i` for each coordinate `i`.
#[allow(clippy::too_many_arguments)]
pub fn gronwall_check(
    family: &ControlFamily,
    schedule: &ControlSchedule,
    x0: &[f64],
    step: f64,
    c1: f64,
    c2: f64,
    lipschitz: f64,
) -> Result<GronwallReport, FlowError> {
    let opts = FlowOptions::with_step(step);
    let compiled = prepare(family, schedule, x0, &opts)?;
    let trace = |start: &[f64]| -> Result<Vec<(f64, Vec<f64>)>, String> {
        let mut y = start.to_vec();
        let mut states = vec![(0.0, y.clone())];
        match compiled.run(&mut y, false, &opts, |_, t, y| states.push((t, y.to_vec()))).blowup {
            None => Ok(states),
            Some((t, msg)) => Err(format!("blow-up at t = {t}: {msg}")),
        }
    };
    let inapplicable = |diagnostic| GronwallReport {
        applicable: false,
        bound_norm_ok: false,
        bound_lip_ok: false,
        norm_margin: f64::NAN,
        lip_margin: f64::NAN,
        checks: 0,
        diagnostic: Some(diagnostic),
    };
    let base = match trace(x0) {
        Ok(s) => s,
        Err(msg) => return Ok(inapplicable(msg)),
    };
    let x0_norm = l1(x0);
    let mut norm_ok = true;
    let mut norm_margin = f64::INFINITY;
    for (t, x) in &base {
        let bound = (x0_norm + c1 * t) * (c2 * t).exp();
        let obs = l1(x);
        norm_ok &= within(obs, bound);
        norm_margin = norm_margin.min(bound - obs);
    }
    let mut lip_ok = true;
    let mut lip_margin = f64::INFINITY;
    let mut checks = base.len();
    for i in 0..x0.len() {
        let mut start = x0.to_vec();
        start[i] += GRONWALL_DELTA;
        let comp = match trace(&start) {
            Ok(s) => s,
            Err(msg) => return Ok(inapplicable(msg)),
        };
        let d0 = l1(&x0.iter().zip(&start).map(|(a, b)| a - b).collect::<Vec<_>>());
        for ((t, x), (_, y)) in base.iter().zip(&comp) {
            let bound = (lipschitz * t).exp() * d0;
            let obs: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
            lip_ok &= within(obs, bound);
            lip_margin = lip_margin.min(bound - obs);
            checks += 1;
        }
    }
    Ok(GronwallReport {
        applicable: true,
        bound_norm_ok: norm_ok,
        bound_lip_ok: lip_ok,
        norm_margin,
        lip_margin,
        checks,
        diagnostic: None,
    })
}

/// Whether strictly increasing `points` stay strictly increasing under the
/// flow of a one-dimensional family. `None` if any point blew up.
pub fn monotone_1d_check(
    family: &ControlFamily,
    schedule: &ControlSchedule,
    points: &[f64],
    step: f64,
) -> Result<Option<bool>, FlowError> {
    if family.dim() != 1 {
        return Err(FlowError::NotOneDimensional(family.dim()));
    }
    if let Some(i) = points.windows(2).position(|w| !(w[0] < w[1])) {
        return Err(FlowError::NotIncreasing(i + 1));
    }
    let pts: Vec<Vec<f64>> = points.iter().map(|&p| vec![p]).collect();
    let out = flow_points(family, schedule, &pts, &FlowOptions::with_step(step))?;
    let Some(vals) = out.into_iter().map(|o| o.map(|v| v[0])).collect::<Option<Vec<f64>>>() else {
        return Ok(None);
    };
    Ok(Some(vals.windows(2).all(|w| w[0] < w[1])))
}

//! Fitting piecewise-constant controls so that an ensemble of points lands
//! on its targets.
//!
//! The loss is the mean squared endpoint error; gradients come from the
//! discrete adjoint of the RK4 flow ([`crate::flow::endpoint_vjp`]), and
//! parameters are updated with Adam.

pub mod shrink;

pub use shrink::{shrink_then_interpolate, CellGrid, ShrinkConfig, ShrinkResult};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::approx::ApproxError;
use crate::ensemble::{Ensemble, EnsembleError};
use crate::family::{ControlFamily, FamilyError};
use crate::flow::{endpoint_vjp, flow_points, ControlSchedule, FlowError, FlowOptions, Segment};

pub const MAX_RESEEDS: usize = 10;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("inputs and targets differ in shape ({inputs} x {d_in} vs {targets} x {d_out})")]
    Shape { inputs: usize, d_in: usize, targets: usize, d_out: usize },
    #[error("data dimension {got} does not match family dimension {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("every initialisation blew up ({attempts} attempts): {last}")]
    InitBlowUp { attempts: usize, last: String },
    #[error("family does not decouple into one-dimensional coordinate flows: {0}")]
    Unsupported(String),
    #[error("{stage}: {source}")]
    Stage { stage: &'static str, source: Box<TrainError> },
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Approx(#[from] ApproxError),
}

/// Input/target pairs with distinct inputs and distinct targets.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dataset {
    pub inputs: Ensemble,
    pub targets: Ensemble,
}

impl Dataset {
    pub fn new(inputs: Ensemble, targets: Ensemble) -> Result<Self, TrainError> {
        if inputs.len() != targets.len() || inputs.dim() != targets.dim() {
            return Err(TrainError::Shape {
                inputs: inputs.len(),
                d_in: inputs.dim(),
                targets: targets.len(),
                d_out: targets.dim(),
            });
        }
        Ok(Self { inputs, targets })
    }

    /// Inputs and targets drawn independently and uniformly from `[lo, hi]^d`.
    pub fn random(n: usize, d: usize, seed: u64, lo: f64, hi: f64) -> Result<Self, TrainError> {
        let inputs = Ensemble::random(n, d, seed, lo, hi)?;
        let targets = Ensemble::random(n, d, seed.wrapping_add(0x9e37_79b9_7f4a_7c15), lo, hi)?;
        Self::new(inputs, targets)
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.dim()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Stop once the sup-norm of the gradient falls below this.
    pub grad_tol: f64,
    /// If set, the learning rate follows a cosine from `learning_rate` at
    /// the first iteration down to this value at `max_iters`.
    pub final_learning_rate: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-2, max_iters: 5000, grad_tol: 1e-9, final_learning_rate: None }
    }
}

impl OptimizerConfig {
    /// Scheduled learning rate at iteration `iter` (before any back-off).
    pub fn learning_rate_at(&self, iter: usize) -> f64 {
        match self.final_learning_rate {
            None => self.learning_rate,
            Some(end) => {
                let frac = iter as f64 / self.max_iters.max(1) as f64;
                end + 0.5 * (self.learning_rate - end) * (1.0 + (std::f64::consts::PI * frac.min(1.0)).cos())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub num_segments: usize,
    pub segment_duration: f64,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    pub step: f64,
    /// Success threshold on `max_i |phi(x_i) - y_i|_inf`.
    pub loss_target: f64,
    /// Also train segment durations, through `duration = softplus(s)`.
    pub train_durations: bool,
    /// Standard deviation of the initial parameters.
    pub init_scale: f64,
    /// Fresh initializations tried after a run that misses `loss_target`.
    pub restarts: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            num_segments: 8,
            segment_duration: 0.5,
            optimizer: OptimizerConfig::default(),
            seed: 0,
            step: crate::flow::DEFAULT_STEP,
            loss_target: 1e-2,
            train_durations: false,
            init_scale: 0.1,
            restarts: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let positive = [
            ("segment_duration", self.segment_duration),
            ("step", self.step),
            ("learning_rate", self.optimizer.learning_rate),
            ("loss_target", self.loss_target),
            ("init_scale", self.init_scale),
        ];
        if self.num_segments == 0 {
            return Err(TrainError::Config("num_segments must be at least 1".into()));
        }
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(TrainError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(end) = self.optimizer.final_learning_rate {
            if !(end > 0.0 && end.is_finite()) {
                return Err(TrainError::Config(format!("final_learning_rate must be positive, got {end}")));
            }
        }
        if !(self.optimizer.grad_tol >= 0.0) {
            return Err(TrainError::Config("grad_tol must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    LossTarget,
    GradTol,
    MaxIters,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrainReport {
    pub final_params: ControlSchedule,
    pub final_max_error: f64,
    pub final_loss: f64,
    /// Loss at every evaluated iterate (`inf` for rejected, blown-up steps).
    pub loss_history: Vec<f64>,
    /// Running minimum of `loss_history`.
    pub best_loss_history: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub reseeds: usize,
    pub rejected_steps: usize,
    /// Restarts used; histories and counters cover every attempt, the
    /// parameters come from the best one.
    pub restarts_used: usize,
}

impl TrainReport {
    /// `iteration,loss,best_loss` lines.
    pub fn loss_history_csv(&self) -> String {
        let mut out = String::from("iteration,loss,best_loss\n");
        for (i, (l, b)) in self.loss_history.iter().zip(&self.best_loss_history).enumerate() {
            out.push_str(&format!("{i},{l},{b}\n"));
        }
        out
    }
}

fn check_points(family: &ControlFamily, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<(), TrainError> {
    let d = family.dim();
    if inputs.len() != targets.len() || inputs.is_empty() {
        return Err(TrainError::Shape {
            inputs: inputs.len(),
            d_in: d,
            targets: targets.len(),
            d_out: d,
        });
    }
    for p in inputs.iter().chain(targets) {
        if p.len() != d {
            return Err(TrainError::Dimension { expected: d, got: p.len() });
        }
    }
    Ok(())
}

/// Mean squared endpoint error; `inf` if any trajectory blows up.
pub fn loss(family: &ControlFamily, schedule: &ControlSchedule, dataset: &Dataset, step: f64) -> Result<f64, TrainError> {
    check_points(family, dataset.inputs.points(), dataset.targets.points())?;
    let ends = flow_points(family, schedule, dataset.inputs.points(), &FlowOptions::with_step(step))?;
    let mut sum = 0.0;
    for (e, y) in ends.iter().zip(dataset.targets.points()) {
        match e {
            Some(e) => sum += e.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
            None => return Ok(f64::INFINITY),
        }
    }
    Ok(sum / dataset.len() as f64)
}

/// Loss, worst-case error and gradient at one schedule.
#[derive(Clone, Debug)]
pub struct ScheduleGradient {
    pub loss: f64,
    pub max_error: f64,
    pub params: Vec<Vec<f64>>,
    pub durations: Vec<f64>,
}

fn evaluate(
    family: &ControlFamily,
    schedule: &ControlSchedule,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    step: f64,
) -> Result<ScheduleGradient, FlowError> {
    let n = inputs.len() as f64;
    let opts = FlowOptions::with_step(step);
    let per_sample: Vec<Result<_, FlowError>> = inputs
        .par_iter()
        .zip(targets)
        .map(|(x, y)| {
            endpoint_vjp(family, schedule, x, &opts, |e| e.iter().zip(y).map(|(a, b)| 2.0 * (a - b) / n).collect())
                .map(|r| {
                    let sq: f64 = r.endpoint.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                    let sup = r.endpoint.iter().zip(y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                    (r, sq, sup)
                })
        })
        .collect();
    let mut out = ScheduleGradient {
        loss: 0.0,
        max_error: 0.0,
        params: schedule.segments().iter().map(|s| vec![0.0; s.params.len()]).collect(),
        durations: vec![0.0; schedule.len()],
    };
    // fixed-order reduction keeps results independent of the thread count
    for r in per_sample {
        let (r, sq, sup) = r?;
        out.loss += sq / n;
        out.max_error = out.max_error.max(sup);
        for (acc, g) in out.params.iter_mut().zip(&r.grad_params) {
            for (a, b) in acc.iter_mut().zip(g) {
                *a += b;
            }
        }
        for (a, b) in out.durations.iter_mut().zip(&r.grad_durations) {
            *a += b;
        }
    }
    Ok(out)
}

/// Exact gradient of the discretised loss with respect to every segment's
/// parameters (and durations).
pub fn grad(
    family: &ControlFamily,
    schedule: &ControlSchedule,
    dataset: &Dataset,
    step: f64,
) -> Result<ScheduleGradient, TrainError> {
    check_points(family, dataset.inputs.points(), dataset.targets.points())?;
    schedule.check_for(family)?;
    Ok(evaluate(family, schedule, dataset.inputs.points(), dataset.targets.points(), step)?)
}

fn softplus(s: f64) -> f64 {
    if s > 30.0 {
        s
    } else {
        s.exp().ln_1p()
    }
}

fn softplus_inv(d: f64) -> f64 {
    if d > 30.0 {
        d
    } else {
        d.exp_m1().ln()
    }
}

fn sigmoid(s: f64) -> f64 {
    1.0 / (1.0 + (-s).exp())
}

/// Flat trainable vector: all segment parameters, then duration logits.
struct Layout {
    k: usize,
    p: usize,
    durations: Option<()>,
    fixed_duration: f64,
}

impl Layout {
    fn len(&self) -> usize {
        self.k * self.p + if self.durations.is_some() { self.k } else { 0 }
    }

    fn schedule(&self, theta: &[f64]) -> ControlSchedule {
        let segs = (0..self.k)
            .map(|s| Segment {
                duration: if self.durations.is_some() {
                    softplus(theta[self.k * self.p + s]).max(f64::MIN_POSITIVE)
                } else {
                    self.fixed_duration
                },
                params: theta[s * self.p..(s + 1) * self.p].to_vec(),
            })
            .collect();
        ControlSchedule::new(segs).expect("positive durations")
    }

    fn flatten_grad(&self, theta: &[f64], g: &ScheduleGradient) -> Vec<f64> {
        let mut out: Vec<f64> = g.params.iter().flatten().cloned().collect();
        if self.durations.is_some() {
            out.extend((0..self.k).map(|s| g.durations[s] * sigmoid(theta[self.k * self.p + s])));
        }
        out
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, theta: &mut [f64], g: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..theta.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * g[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * g[i] * g[i];
            theta[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

/// Trains a schedule on a validated dataset.
pub fn train(family: &ControlFamily, config: &TrainConfig, dataset: &Dataset) -> Result<TrainReport, TrainError> {
    fit_points(family, config, dataset.inputs.points(), dataset.targets.points())
}

/// Trains a schedule sending each `inputs[i]` towards `targets[i]`.
///
/// Unlike [`train`], targets may coincide; this is the form used to probe
/// lower bounds such as fitting a constant map.
pub fn fit_points(
    family: &ControlFamily,
    config: &TrainConfig,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
) -> Result<TrainReport, TrainError> {
    fit_points_bounded(family, config, inputs, targets, None)
}

/// [`fit_points`] with every segment's parameters kept inside the boxes
/// `bounds[j]` (projected after each step).
pub(crate) fn fit_points_bounded(
    family: &ControlFamily,
    config: &TrainConfig,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    bounds: Option<&[(f64, f64)]>,
) -> Result<TrainReport, TrainError> {
    config.validate()?;
    check_points(family, inputs, targets)?;
    if bounds.is_some_and(|b| b.len() != family.param_count()) {
        return Err(TrainError::Config("one parameter bound per family parameter".into()));
    }
    let mut best = fit_once(family, config, config.seed, inputs, targets, bounds)?;
    for attempt in 1..=config.restarts {
        if best.converged {
            break;
        }
        let seed = config.seed.wrapping_add((attempt as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let next = fit_once(family, config, seed, inputs, targets, bounds)?;
        let floor = best.best_loss_history.last().copied().unwrap_or(f64::INFINITY);
        let mut merged = if next.converged || next.final_loss < best.final_loss { next.clone() } else { best.clone() };
        merged.loss_history = [best.loss_history, next.loss_history].concat();
        merged.best_loss_history = [best.best_loss_history, next.best_loss_history.iter().map(|&l| l.min(floor)).collect()].concat();
        merged.iterations_used = best.iterations_used + next.iterations_used;
        merged.reseeds = best.reseeds + next.reseeds;
        merged.rejected_steps = best.rejected_steps + next.rejected_steps;
        merged.restarts_used = attempt;
        best = merged;
    }
    Ok(best)
}

fn fit_once(
    family: &ControlFamily,
    config: &TrainConfig,
    seed: u64,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    bounds: Option<&[(f64, f64)]>,
) -> Result<TrainReport, TrainError> {
    let project = |theta: &mut [f64]| {
        if let Some(b) = bounds {
            for seg in theta[..config.num_segments * b.len()].chunks_mut(b.len()) {
                for (t, &(lo, hi)) in seg.iter_mut().zip(b) {
                    *t = t.clamp(lo, hi);
                }
            }
        }
    };
    let layout = Layout {
        k: config.num_segments,
        p: family.param_count(),
        durations: config.train_durations.then_some(()),
        fixed_duration: config.segment_duration,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = Normal::new(0.0, config.init_scale).map_err(|e| TrainError::Config(e.to_string()))?;
    let logit = softplus_inv(config.segment_duration);
    let mut reseeds = 0;
    let (mut theta, mut current) = loop {
        let mut theta: Vec<f64> = (0..layout.k * layout.p).map(|_| init.sample(&mut rng)).collect();
        if layout.durations.is_some() {
            theta.extend(std::iter::repeat_n(logit, layout.k));
        }
        project(&mut theta);
        match evaluate(family, &layout.schedule(&theta), inputs, targets, config.step) {
            Ok(g) => break (theta, g),
            Err(FlowError::BlowUp { time, diagnostic }) => {
                if reseeds == MAX_RESEEDS {
                    return Err(TrainError::InitBlowUp {
                        attempts: reseeds + 1,
                        last: format!("t = {time}: {diagnostic}"),
                    });
                }
                reseeds += 1;
            }
            Err(e) => return Err(e.into()),
        }
    };

    let mut adam = Adam::new(layout.len());
    let mut backoff = 1.0;
    let mut best = (theta.clone(), current.clone());
    let mut loss_history = Vec::new();
    let mut best_loss_history = Vec::new();
    let mut rejected_steps = 0;
    let mut iter = 0;
    let mut record = true;
    let stop_reason = loop {
        if record {
            loss_history.push(current.loss);
            if current.loss < best.1.loss {
                best = (theta.clone(), current.clone());
            }
            best_loss_history.push(best.1.loss);
        }
        record = true;
        if current.max_error <= config.loss_target {
            best = (theta.clone(), current.clone());
            break StopReason::LossTarget;
        }
        if iter == config.optimizer.max_iters {
            break StopReason::MaxIters;
        }
        let g = layout.flatten_grad(&theta, &current);
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) < config.optimizer.grad_tol {
            break StopReason::GradTol;
        }
        let mut next = theta.clone();
        adam.step(&mut next, &g, backoff * config.optimizer.learning_rate_at(iter));
        project(&mut next);
        iter += 1;
        match evaluate(family, &layout.schedule(&next), inputs, targets, config.step) {
            Ok(e) if e.loss.is_finite() => {
                theta = next;
                current = e;
            }
            Ok(_) | Err(FlowError::BlowUp { .. }) => {
                // back off to the best iterate with a smaller step
                rejected_steps += 1;
                loss_history.push(f64::INFINITY);
                best_loss_history.push(best.1.loss);
                record = false;
                theta = best.0.clone();
                current = best.1.clone();
                adam = Adam::new(layout.len());
                backoff *= 0.5;
            }
            Err(e) => return Err(e.into()),
        }
    };
    let (theta, fin) = best;
    Ok(TrainReport {
        final_params: layout.schedule(&theta),
        final_max_error: fin.max_error,
        final_loss: fin.loss,
        loss_history,
        best_loss_history,
        iterations_used: iter,
        converged: fin.max_error <= config.loss_target,
        stop_reason,
        reseeds,
        rejected_steps,
        restarts_used: 0,
    })
}

/// Mean squared residual of the best affine map `x -> M x + c` from inputs
/// to targets, by least squares.
pub fn affine_least_squares_residual(inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> f64 {
    use nalgebra::DMatrix;
    let n = inputs.len();
    let d = inputs[0].len();
    let x = DMatrix::from_fn(n, d + 1, |i, j| if j < d { inputs[i][j] } else { 1.0 });
    let y = DMatrix::from_fn(n, d, |i, j| targets[i][j]);
    let svd = x.clone().svd(true, true);
    let coef = svd.solve(&y, 1e-12).expect("svd with u and v");
    let r = &x * coef - y;
    r.norm_squared() / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{Activation, WeightStructure};
    use crate::polyvec::parse_field;

    fn pts(v: &[[f64; 2]]) -> Ensemble {
        Ensemble::new(v.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn loss_examples() {
        let zero_net = ControlFamily::resnet(2, Activation::Tanh, WeightStructure::Full).unwrap();
        let zero = ControlSchedule::constant(vec![0.0; 10], 1.0).unwrap();
        let x = pts(&[[0.0, 0.0], [0.5, 0.1]]);
        let same = Dataset::new(x.clone(), x).unwrap();
        assert_eq!(loss(&zero_net, &zero, &same, 0.01).unwrap(), 0.0);
        let one = Dataset::new(pts(&[[0.0, 0.0]]), pts(&[[1.0, 0.0]])).unwrap();
        assert_eq!(loss(&zero_net, &zero, &one, 0.01).unwrap(), 1.0);
        let vp = ControlFamily::volume_preserving();
        let drift = ControlSchedule::constant(vec![1.0, 0.0, 0.0], 1.0).unwrap();
        let d = Dataset::new(pts(&[[0.0, 0.0]]), pts(&[[-1.0, 0.0]])).unwrap();
        assert!(loss(&vp, &drift, &d, 0.01).unwrap() < 1e-24);
    }

    #[test]
    fn blow_up_gives_infinite_loss() {
        let fam = ControlFamily::affine(vec![parse_field("(x1^2)").unwrap()]).unwrap();
        let s = ControlSchedule::constant(vec![1.0], 2.0).unwrap();
        let d = Dataset::new(Ensemble::new(vec![vec![1.0]]).unwrap(), Ensemble::new(vec![vec![0.0]]).unwrap()).unwrap();
        assert_eq!(loss(&fam, &s, &d, 0.01).unwrap(), f64::INFINITY);
        assert!(matches!(grad(&fam, &s, &d, 0.01), Err(TrainError::Flow(FlowError::BlowUp { .. }))));
    }

    #[test]
    fn gradient_vanishes_at_exact_fit() {
        let vp = ControlFamily::volume_preserving();
        let drift = ControlSchedule::constant(vec![1.0, 0.0, 0.0], 1.0).unwrap();
        let d = Dataset::new(pts(&[[0.0, 0.0], [0.3, 0.2]]), pts(&[[-1.0, 0.0], [-0.7, 0.2]])).unwrap();
        let g = grad(&vp, &drift, &d, 0.01).unwrap();
        // the drift is exact, but the cubic field changes the endpoint
        assert!(g.loss < 1e-24);
        assert!(g.params[0].iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn linear_field_gradient_closed_form() {
        // x' = theta x over time T: phi(x) = x e^{theta T};
        // L = (x e^{theta T} - y)^2, dL/dtheta = 2 (x e^{theta T} - y) x T e^{theta T}
        let fam = ControlFamily::affine(vec![parse_field("(x1)").unwrap()]).unwrap();
        let (x, y, theta, t) = (0.8, 1.7, 0.6, 1.0);
        let s = ControlSchedule::constant(vec![theta], t).unwrap();
        let d = Dataset::new(Ensemble::new(vec![vec![x]]).unwrap(), Ensemble::new(vec![vec![y]]).unwrap()).unwrap();
        let step = 1e-3;
        let g = grad(&fam, &s, &d, step).unwrap();
        // discrete flow factor: RK4 amplification per step
        let z: f64 = theta * step;
        let amp = 1.0 + z + z * z / 2.0 + z.powi(3) / 6.0 + z.powi(4) / 24.0;
        let damp = (1.0 + z + z * z / 2.0 + z.powi(3) / 6.0) * step;
        let n = (t / step).round() as i32;
        let end = x * amp.powi(n);
        let exact = 2.0 * (end - y) * x * f64::from(n) * amp.powi(n - 1) * damp;
        assert!((g.params[0][0] - exact).abs() < 1e-8 * exact.abs().max(1.0));
        let cont = 2.0 * (x * (theta * t).exp() - y) * x * t * (theta * t).exp();
        assert!((g.params[0][0] - cont).abs() < 1e-8 * cont.abs().max(1.0) + 1e-9);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let d = Dataset::random(3, 2, 1, -1.0, 1.0).unwrap();
        for act in [Activation::Tanh, Activation::Sigmoid, Activation::Identity] {
            let fam = ControlFamily::resnet(2, act, WeightStructure::Full).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let s = ControlSchedule::random(&fam, 4, 1.0, 1.0, &mut rng).unwrap();
            let g = grad(&fam, &s, &d, 0.01).unwrap();
            let h = 1e-6;
            for seg in 0..s.len() {
                for k in 0..fam.param_count() {
                    let shift = |delta: f64| {
                        let mut segs = s.segments().to_vec();
                        segs[seg].params[k] += delta;
                        loss(&fam, &ControlSchedule::new(segs).unwrap(), &d, 0.01).unwrap()
                    };
                    let fd = (shift(h) - shift(-h)) / (2.0 * h);
                    let an = g.params[seg][k];
                    assert!((fd - an).abs() <= 1e-5 * fd.abs().max(an.abs()).max(1e-3), "{act:?} {fd} {an}");
                }
            }
        }
    }

    #[test]
    fn training_is_deterministic() {
        let fam = ControlFamily::resnet(2, Activation::Tanh, WeightStructure::Full).unwrap();
        let d = Dataset::random(3, 2, 4, -1.0, 1.0).unwrap();
        let cfg = TrainConfig {
            num_segments: 3,
            segment_duration: 0.5,
            optimizer: OptimizerConfig { max_iters: 30, ..OptimizerConfig::default() },
            ..TrainConfig::default()
        };
        let a = train(&fam, &cfg, &d).unwrap();
        let b = train(&fam, &cfg, &d).unwrap();
        assert_eq!(a.loss_history, b.loss_history);
        assert!(a.best_loss_history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(a.loss_history.len(), 31);
        assert!(a.final_loss < a.loss_history[0]);
    }

    #[test]
    fn cosine_schedule_endpoints() {
        let o = OptimizerConfig { learning_rate: 0.1, max_iters: 100, final_learning_rate: Some(0.001), ..Default::default() };
        assert_eq!(o.learning_rate_at(0), 0.1);
        assert!((o.learning_rate_at(50) - 0.0505).abs() < 1e-12);
        assert!((o.learning_rate_at(100) - 0.001).abs() < 1e-15);
        assert!((1..=100).all(|i| o.learning_rate_at(i) <= o.learning_rate_at(i - 1)));
        assert_eq!(OptimizerConfig::default().learning_rate_at(77), 1e-2);
    }

    #[test]
    fn restarts_concatenate_histories() {
        // x' = theta x never changes the sign of x
        let fam = ControlFamily::affine(vec![parse_field("(x1)").unwrap()]).unwrap();
        let cfg = TrainConfig {
            num_segments: 2,
            optimizer: OptimizerConfig { max_iters: 10, ..OptimizerConfig::default() },
            restarts: 3,
            ..TrainConfig::default()
        };
        let r = fit_points(&fam, &cfg, &[vec![1.0]], &[vec![-1.0]]).unwrap();
        assert!(!r.converged);
        assert_eq!(r.restarts_used, 3);
        assert_eq!(r.loss_history.len(), 4 * 11);
        assert_eq!(r.iterations_used, 40);
        assert!(r.best_loss_history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*r.best_loss_history.last().unwrap(), r.final_loss);

        let once = fit_points(&fam, &TrainConfig { restarts: 0, ..cfg }, &[vec![1.0]], &[vec![-1.0]]).unwrap();
        assert_eq!(once.restarts_used, 0);
        assert!(r.final_loss <= once.final_loss);
    }

    #[test]
    fn bounds_are_respected() {
        let fam = ControlFamily::affine(vec![parse_field("(x1)").unwrap()]).unwrap();
        let cfg = TrainConfig {
            num_segments: 3,
            optimizer: OptimizerConfig { max_iters: 200, learning_rate: 0.1, ..OptimizerConfig::default() },
            ..TrainConfig::default()
        };
        // growth is wanted, but theta is capped at 0.1
        let r = fit_points_bounded(&fam, &cfg, &[vec![1.0]], &[vec![5.0]], Some(&[(-1.0, 0.1)])).unwrap();
        assert!(r.final_params.segments().iter().all(|s| s.params[0] <= 0.1));
        assert!(fit_points_bounded(&fam, &cfg, &[vec![1.0]], &[vec![5.0]], Some(&[])).is_err());
    }

    #[test]
    fn duration_training_moves_durations() {
        let fam = ControlFamily::affine(vec![parse_field("(1)").unwrap()]).unwrap();
        let d = Dataset::new(Ensemble::new(vec![vec![0.0]]).unwrap(), Ensemble::new(vec![vec![2.0]]).unwrap()).unwrap();
        let cfg = TrainConfig {
            num_segments: 1,
            segment_duration: 1.0,
            train_durations: true,
            optimizer: OptimizerConfig { learning_rate: 0.05, max_iters: 2000, grad_tol: 0.0, final_learning_rate: None },
            ..TrainConfig::default()
        };
        let r = train(&fam, &cfg, &d).unwrap();
        assert!(r.converged);
        let seg = &r.final_params.segments()[0];
        assert!((seg.duration * seg.params[0] - 2.0).abs() <= 1e-2);
    }

    #[test]
    fn config_validation_and_json() {
        let bad = TrainConfig { num_segments: 0, ..TrainConfig::default() };
        assert!(bad.validate().is_err());
        let c: TrainConfig = serde_json::from_str(r#"{"num_segments": 3, "optimizer": {"max_iters": 7}}"#).unwrap();
        assert_eq!(c.optimizer.max_iters, 7);
        assert_eq!(c.optimizer.learning_rate, 1e-2);
        assert!(serde_json::from_str::<TrainConfig>(r#"{"segments": 3}"#).is_err());
        let d: Dataset = serde_json::from_str(r#"{"inputs": [[0,0],[1,1]], "targets": [[1,0],[0,1]]}"#).unwrap();
        assert_eq!(d.len(), 2);
        assert!(serde_json::from_str::<Dataset>(r#"{"inputs": [[0,0],[0,0]], "targets": [[1,0],[0,1]]}"#).is_err());
    }

    #[test]
    fn least_squares_oracle() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let y: Vec<Vec<f64>> = x.iter().map(|p| vec![2.0 * p[0] - p[1] + 0.5, p[0] + 3.0]).collect();
        assert!(affine_least_squares_residual(&x, &y) < 1e-20);
        // XOR-like: no affine map fits
        let x4 = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let y4 = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 0.0]];
        assert!((affine_least_squares_residual(&x4, &y4) - 0.25).abs() < 1e-12);
    }
}

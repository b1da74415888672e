//! Approximation from interpolation: first squeeze every grid cell towards
//! its centre with coordinate-wise one-dimensional flows, then interpolate
//! the squeezed centres to the target values.

use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use super::{fit_points_bounded, OptimizerConfig, TrainConfig, TrainError};
use crate::approx::{lp_error, DomainSpec, Quadrature, TargetFunction};
use crate::family::ControlFamily;
use crate::flow::{flow_points, ControlSchedule, FlowOptions, Segment};
use crate::polyvec::{Monomial, PolyVectorField, Polynomial};

/// Regular cell decomposition of the box `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub cells: Vec<usize>,
}

impl CellGrid {
    /// `n x n` cells on `[-half_width, half_width]^2`.
    pub fn square(half_width: f64, n: usize) -> Self {
        Self { lo: vec![-half_width; 2], hi: vec![half_width; 2], cells: vec![n; 2] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    fn validate(&self) -> Result<(), TrainError> {
        let d = self.lo.len();
        if d == 0 || self.hi.len() != d || self.cells.len() != d {
            return Err(TrainError::Config("cell grid bounds and counts must share one dimension".into()));
        }
        if self.cells.contains(&0) || self.lo.iter().zip(&self.hi).any(|(a, b)| !(b > a)) {
            return Err(TrainError::Config("cell grid needs lo < hi and at least one cell per axis".into()));
        }
        Ok(())
    }

    pub fn width(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.cells[axis] as f64
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim()).map(|a| self.width(a).powi(2)).sum::<f64>().sqrt()
    }

    /// Centre of the cell containing `x` along `axis`.
    pub fn center_along(&self, axis: usize, x: f64) -> f64 {
        let w = self.width(axis);
        let j = ((x - self.lo[axis]) / w).floor().clamp(0.0, (self.cells[axis] - 1) as f64);
        self.lo[axis] + (j + 0.5) * w
    }

    /// All cell centres, last axis fastest.
    pub fn centers(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![]];
        for a in 0..self.dim() {
            let w = self.width(a);
            out = out
                .into_iter()
                .flat_map(|p| {
                    (0..self.cells[a]).map(move |j| {
                        let mut q = p.clone();
                        q.push(self.lo[a] + (j as f64 + 0.5) * w);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShrinkConfig {
    /// The squeezing map is `h(x) = c(x) + contraction (x - c(x))` per axis.
    pub contraction: f64,
    /// One-dimensional training points per cell and axis.
    pub samples_per_cell: usize,
    /// `Some(m)` keeps every odd single-axis power `x_a^m e_a` (`m >= 3`)
    /// pointing inward with coefficient magnitude at least `m`, so that it
    /// dominates the lower-order terms far out and no flow escapes.
    pub dissipation: Option<f64>,
    pub stage1: TrainConfig,
    pub stage2: TrainConfig,
    /// Exponent of the reported `L^p` error.
    pub p: f64,
    /// Tensor-grid nodes per axis for the `L^p` error.
    pub quadrature_resolution: usize,
    /// RK4 step for the `L^p` error. The stages may train on a coarser
    /// step; the error is measured on the flow itself.
    pub error_step: f64,
}

impl Default for ShrinkConfig {
    fn default() -> Self {
        Self {
            contraction: 0.2,
            samples_per_cell: 4,
            dissipation: Some(0.5),
            stage1: TrainConfig {
                num_segments: 8,
                segment_duration: 0.25,
                step: 0.05,
                optimizer: OptimizerConfig { learning_rate: 2e-2, max_iters: 1500, grad_tol: 1e-9, final_learning_rate: None },
                loss_target: 2e-2,
                ..TrainConfig::default()
            },
            stage2: TrainConfig {
                num_segments: 12,
                segment_duration: 1.0,
                step: 0.05,
                optimizer: OptimizerConfig {
                    learning_rate: 5e-2,
                    max_iters: 3000,
                    grad_tol: 1e-9,
                    final_learning_rate: Some(5e-4),
                },
                loss_target: 1e-2,
                init_scale: 0.3,
                ..TrainConfig::default()
            },
            p: 1.0,
            quadrature_resolution: 101,
            error_step: 0.01,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ShrinkResult {
    pub schedule: ControlSchedule,
    /// Worst training error of the squeezing flow, per axis.
    pub stage1_max_error: Vec<f64>,
    pub stage2_max_error: f64,
    pub stage2_converged: bool,
    pub lp_error: f64,
    /// `lp_error` under the normalized measure on the box.
    pub normalized_lp_error: f64,
    pub p: f64,
    pub cell_diameter: f64,
}

/// Basis indices whose field moves only coordinate `axis`, through a
/// polynomial in `x_axis` alone, with that polynomial rewritten in one
/// variable.
fn axis_subfamily(basis: &[PolyVectorField], axis: usize) -> Vec<(usize, Polynomial)> {
    let mut out = Vec::new();
    for (k, f) in basis.iter().enumerate() {
        let others_zero = f.components().iter().enumerate().all(|(i, c)| i == axis || c.is_zero());
        let comp = f.component(axis);
        let pure = comp.terms().all(|(m, _)| m.exponents().iter().enumerate().all(|(i, &e)| i == axis || e == 0));
        if others_zero && pure && !comp.is_zero() {
            let terms: Vec<(BigRational, Monomial)> =
                comp.terms().map(|(m, c)| (c.clone(), Monomial::new(vec![m.exponents()[axis]]))).collect();
            out.push((k, Polynomial::from_terms(1, terms).expect("one-variable monomials")));
        }
    }
    out
}

/// Parameter boxes that make odd single-axis powers of degree at least 3
/// point inward by at least `margin`; all other parameters are free.
fn dissipative_bounds(basis: &[PolyVectorField], margin: f64) -> Vec<(f64, f64)> {
    basis
        .iter()
        .map(|f| {
            let live: Vec<usize> = (0..f.dim()).filter(|&i| !f.component(i).is_zero()).collect();
            let [axis] = live[..] else { return (f64::NEG_INFINITY, f64::INFINITY) };
            let terms: Vec<_> = f.component(axis).terms().collect();
            let [(m, c)] = terms[..] else { return (f64::NEG_INFINITY, f64::INFINITY) };
            let e = m.exponents();
            let pure = e.iter().enumerate().all(|(i, &k)| i == axis || k == 0);
            if !pure || e[axis] < 3 || e[axis] % 2 == 0 {
                (f64::NEG_INFINITY, f64::INFINITY)
            } else if c.is_positive() {
                (f64::NEG_INFINITY, -margin)
            } else {
                (margin, f64::INFINITY)
            }
        })
        .collect()
}

fn stage(stage: &'static str) -> impl Fn(TrainError) -> TrainError {
    move |e| TrainError::Stage { stage, source: Box::new(e) }
}

/// Builds a squeeze-then-interpolate schedule for `target` on `grid` and
/// measures its `L^p` error on the grid's box.
///
/// The family must contain, for every axis, fields that move that
/// coordinate alone through a polynomial in it alone.
pub fn shrink_then_interpolate(
    family: &ControlFamily,
    target: &TargetFunction,
    grid: &CellGrid,
    config: &ShrinkConfig,
) -> Result<ShrinkResult, TrainError> {
    grid.validate()?;
    if grid.dim() != family.dim() {
        return Err(TrainError::Dimension { expected: family.dim(), got: grid.dim() });
    }
    if !(config.contraction > 0.0 && config.contraction < 1.0) || config.samples_per_cell == 0 {
        return Err(TrainError::Config("contraction must lie in (0, 1) and samples_per_cell be positive".into()));
    }
    if config.dissipation.is_some_and(|m| !(m >= 0.0 && m.is_finite())) {
        return Err(TrainError::Config("dissipation must be finite and non-negative".into()));
    }
    if !(config.error_step > 0.0 && config.error_step.is_finite()) {
        return Err(TrainError::Config("error_step must be positive".into()));
    }
    let affine = family
        .as_affine()
        .ok_or_else(|| TrainError::Unsupported("network families have no coordinate-wise fields".into()))?;
    let d = family.dim();
    let prepared = target.prepare(d).map_err(|e| stage("target")(e.into()))?;

    // stage 1: one-dimensional squeeze per axis
    let mut schedule: Option<ControlSchedule> = None;
    let mut stage1_max_error = Vec::with_capacity(d);
    for axis in 0..d {
        let sub = axis_subfamily(affine.basis(), axis);
        if sub.is_empty() {
            return Err(TrainError::Unsupported(format!("no field acts on x{} alone", axis + 1)));
        }
        let one_d = ControlFamily::affine(
            sub.iter().map(|(_, p)| PolyVectorField::new(vec![p.clone()]).expect("scalar field")).collect(),
        )?;
        let w = grid.width(axis);
        let s = config.samples_per_cell;
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for j in 0..grid.cells[axis] {
            for i in 0..s {
                let x = grid.lo[axis] + w * (j as f64 + (i as f64 + 0.5) / s as f64);
                let c = grid.center_along(axis, x);
                inputs.push(vec![x]);
                targets.push(vec![c + config.contraction * (x - c)]);
            }
        }
        // one-dimensional flows are increasing, so pinning the ends of the
        // interval keeps the whole interval bounded
        for x in [grid.lo[axis], grid.hi[axis]] {
            let c = grid.center_along(axis, x);
            inputs.push(vec![x]);
            targets.push(vec![c + config.contraction * (x - c)]);
        }
        let bounds = config.dissipation.map(|m| dissipative_bounds(one_d.as_affine().expect("affine").basis(), m));
        let report = fit_points_bounded(&one_d, &config.stage1, &inputs, &targets, bounds.as_deref())
            .map_err(stage("stage 1"))?;
        stage1_max_error.push(report.final_max_error);
        let segments: Vec<Segment> = report
            .final_params
            .segments()
            .iter()
            .map(|seg| {
                let mut params = vec![0.0; family.param_count()];
                for ((k, _), v) in sub.iter().zip(&seg.params) {
                    params[*k] = *v;
                }
                Segment { duration: seg.duration, params }
            })
            .collect();
        let part = ControlSchedule::new(segments)?;
        schedule = Some(match schedule {
            None => part,
            Some(s) => s.then(&part),
        });
    }
    let squeeze = schedule.expect("at least one axis");

    // stage 2: interpolate squeezed centres to target values
    let centers = grid.centers();
    let values: Vec<Vec<f64>> = centers.iter().map(|c| prepared.eval(c)).collect();
    let moved = flow_points(family, &squeeze, &centers, &FlowOptions::with_step(config.stage1.step))?;
    let moved: Vec<Vec<f64>> = moved
        .into_iter()
        .collect::<Option<_>>()
        .ok_or_else(|| stage("stage 1")(TrainError::Config("squeezing flow blew up on a cell point".into())))?;
    let bounds = config.dissipation.map(|m| dissipative_bounds(affine.basis(), m));
    let report =
        fit_points_bounded(family, &config.stage2, &moved, &values, bounds.as_deref()).map_err(stage("stage 2"))?;
    let composite = squeeze.then(&report.final_params);

    let domain = DomainSpec::Box {
        lo: grid.lo.clone(),
        hi: grid.hi.clone(),
        quadrature: Quadrature::Grid { resolution: Some(vec![config.quadrature_resolution; d]) },
    };
    let lp = lp_error(family, &composite, target, &domain, config.p, config.error_step).map_err(|e| stage("error")(e.into()))?;
    Ok(ShrinkResult {
        schedule: composite,
        stage1_max_error,
        stage2_max_error: report.final_max_error,
        stage2_converged: report.converged,
        lp_error: lp.error,
        normalized_lp_error: lp.normalized_error,
        p: config.p,
        cell_diameter: grid.diameter(),
    })
}

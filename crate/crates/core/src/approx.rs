//! `L^p(K)` distances between flow maps and target functions, and the two
//! falsification checks: the area floor of divergence-free planar flows and
//! the pinned origin of the origin-vanishing family.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::family::ControlFamily;
use crate::flow::{CompiledSchedule, ControlSchedule, FlowError, FlowOptions};
use crate::polyvec::{CompiledField, PolyVectorField};

pub const DEFAULT_BOX_RESOLUTION: usize = 101;
pub const DEFAULT_DISC_RADIAL: usize = 128;
pub const DEFAULT_DISC_ANGULAR: usize = 256;
/// Allowed shortfall below `pi / 2` in [`volume_floor_check`].
///
/// The polar midpoint rule integrates `r^3` on `[0, 1]` with error
/// `-1/(8 R^2)` per unit angle, i.e. `-pi/(4 R^2)` (about `5e-5` at
/// `R = 128`) for the identity map; the angular sum is exact for the
/// trigonometric polynomials of degree below the angular count that smooth
/// flows produce at desk scale. The budget leaves two orders of magnitude on
/// top for the non-polynomial integrands of general flows.
pub const VOLUME_FLOOR_BUDGET: f64 = 0.02;
pub const PINNED_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApproxError {
    #[error("grid resolution must be at least 2 per axis")]
    Resolution,
    #[error("resolution has {got} entries, domain needs {expected}")]
    ResolutionLength { expected: usize, got: usize },
    #[error("domain has zero measure or inconsistent bounds")]
    Degenerate,
    #[error("quadrature has no nodes")]
    EmptyQuadrature,
    #[error("exponent p must be finite and at least 1, got {0}")]
    BadExponent(f64),
    #[error("target maps R^{input} to R^{output}, expected R^{expected}")]
    TargetDimension { input: usize, output: usize, expected: usize },
    #[error("tabulated target: {0}")]
    Table(String),
    #[error("check requires the {0} family")]
    WrongFamily(&'static str),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum Quadrature {
    /// Trapezoid tensor grid on boxes; polar midpoint grid
    /// `[radial, angular]` on discs. `None` uses the defaults.
    Grid {
        #[serde(default)]
        resolution: Option<Vec<usize>>,
    },
    MonteCarlo { num_points: usize, seed: u64 },
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature::Grid { resolution: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
        #[serde(default)]
        quadrature: Quadrature,
    },
    Disc {
        center: [f64; 2],
        radius: f64,
        #[serde(default)]
        quadrature: Quadrature,
    },
}

/// Nodes and weights; weights sum to the measure of the domain.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

impl DomainSpec {
    pub fn unit_disc() -> Self {
        DomainSpec::Disc { center: [0.0, 0.0], radius: 1.0, quadrature: Quadrature::default() }
    }

    pub fn square(half_width: f64, resolution: usize) -> Self {
        DomainSpec::Box {
            lo: vec![-half_width; 2],
            hi: vec![half_width; 2],
            quadrature: Quadrature::Grid { resolution: Some(vec![resolution; 2]) },
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Box { lo, .. } => lo.len(),
            DomainSpec::Disc { .. } => 2,
        }
    }

    pub fn quadrature(&self) -> &Quadrature {
        match self {
            DomainSpec::Box { quadrature, .. } | DomainSpec::Disc { quadrature, .. } => quadrature,
        }
    }

    /// Exact measure of the domain.
    pub fn measure(&self) -> f64 {
        match self {
            DomainSpec::Box { lo, hi, .. } => lo.iter().zip(hi).map(|(a, b)| b - a).product(),
            DomainSpec::Disc { radius, .. } => PI * radius * radius,
        }
    }

    fn validate(&self) -> Result<(), ApproxError> {
        match self {
            DomainSpec::Box { lo, hi, .. } => {
                if lo.is_empty() || lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| !(b > a)) {
                    return Err(ApproxError::Degenerate);
                }
            }
            DomainSpec::Disc { center, radius, .. } => {
                if !(*radius > 0.0) || center.iter().any(|c| !c.is_finite()) {
                    return Err(ApproxError::Degenerate);
                }
            }
        }
        Ok(())
    }

    pub fn rule(&self) -> Result<QuadratureRule, ApproxError> {
        self.validate()?;
        let rule = match (self, self.quadrature()) {
            (DomainSpec::Box { lo, hi, .. }, Quadrature::Grid { resolution }) => {
                let res = resolution.clone().unwrap_or_else(|| vec![DEFAULT_BOX_RESOLUTION; lo.len()]);
                box_grid(lo, hi, &res)?
            }
            (DomainSpec::Disc { center, radius, .. }, Quadrature::Grid { resolution }) => {
                let res = resolution.clone().unwrap_or_else(|| vec![DEFAULT_DISC_RADIAL, DEFAULT_DISC_ANGULAR]);
                if res.len() != 2 {
                    return Err(ApproxError::ResolutionLength { expected: 2, got: res.len() });
                }
                if res.iter().any(|&r| r < 2) {
                    return Err(ApproxError::Resolution);
                }
                polar_grid(*center, *radius, res[0], res[1])
            }
            (_, Quadrature::MonteCarlo { num_points, seed }) => self.monte_carlo(*num_points, *seed),
        };
        if rule.is_empty() {
            return Err(ApproxError::EmptyQuadrature);
        }
        Ok(rule)
    }

    fn monte_carlo(&self, n: usize, seed: u64) -> QuadratureRule {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = if n == 0 { 0.0 } else { self.measure() / n as f64 };
        let nodes = (0..n)
            .map(|_| match self {
                DomainSpec::Box { lo, hi, .. } => lo.iter().zip(hi).map(|(a, b)| rng.random_range(*a..*b)).collect(),
                DomainSpec::Disc { center, radius, .. } => {
                    let r = radius * rng.random::<f64>().sqrt();
                    let t = 2.0 * PI * rng.random::<f64>();
                    vec![center[0] + r * t.cos(), center[1] + r * t.sin()]
                }
            })
            .collect();
        QuadratureRule { nodes, weights: vec![w; n] }
    }
}

fn box_grid(lo: &[f64], hi: &[f64], res: &[usize]) -> Result<QuadratureRule, ApproxError> {
    if res.len() != lo.len() {
        return Err(ApproxError::ResolutionLength { expected: lo.len(), got: res.len() });
    }
    if res.iter().any(|&r| r < 2) {
        return Err(ApproxError::Resolution);
    }
    let axes: Vec<Vec<(f64, f64)>> = lo
        .iter()
        .zip(hi)
        .zip(res)
        .map(|((&a, &b), &r)| {
            let h = (b - a) / (r - 1) as f64;
            (0..r)
                .map(|i| {
                    let w = if i == 0 || i == r - 1 { 0.5 * h } else { h };
                    (a + i as f64 * h, w)
                })
                .collect()
        })
        .collect();
    let total: usize = res.iter().product();
    let mut nodes = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; res.len()];
    for _ in 0..total {
        nodes.push(idx.iter().enumerate().map(|(k, &i)| axes[k][i].0).collect());
        weights.push(idx.iter().enumerate().map(|(k, &i)| axes[k][i].1).product());
        // last axis fastest
        for k in (0..res.len()).rev() {
            idx[k] += 1;
            if idx[k] < res[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(QuadratureRule { nodes, weights })
}

fn polar_grid(center: [f64; 2], radius: f64, nr: usize, na: usize) -> QuadratureRule {
    let dr = radius / nr as f64;
    let da = 2.0 * PI / na as f64;
    let mut nodes = Vec::with_capacity(nr * na);
    let mut weights = Vec::with_capacity(nr * na);
    for i in 0..nr {
        let r = (i as f64 + 0.5) * dr;
        for j in 0..na {
            let a = (j as f64 + 0.5) * da;
            nodes.push(vec![center[0] + r * a.cos(), center[1] + r * a.sin()]);
            weights.push(r * dr * da);
        }
    }
    QuadratureRule { nodes, weights }
}

/// Continuous target `F: R^d -> R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetFunction {
    Constant { value: Vec<f64> },
    /// Coordinates in reverse order; `(x2, x1)` in the plane.
    CoordinateSwap,
    Polynomial { components: PolyVectorField },
    /// Values on a regular grid over `[lo, hi]` (row-major, last axis
    /// fastest), multilinear in between; points outside are clamped.
    Tabulated { lo: Vec<f64>, hi: Vec<f64>, shape: Vec<usize>, values: Vec<Vec<f64>> },
}

/// A [`TargetFunction`] prepared for evaluation.
pub struct Target {
    spec: TargetFunction,
    compiled: Option<CompiledField>,
}

impl TargetFunction {
    pub fn prepare(&self, dim: usize) -> Result<Target, ApproxError> {
        let out_dim = match self {
            TargetFunction::Constant { value } => value.len(),
            TargetFunction::CoordinateSwap => dim,
            TargetFunction::Polynomial { components } => components.dim(),
            TargetFunction::Tabulated { lo, hi, shape, values } => {
                let n: usize = shape.iter().product();
                if lo.len() != dim || hi.len() != dim || shape.len() != dim {
                    return Err(ApproxError::Table("grid bounds and shape must match the dimension".into()));
                }
                if shape.iter().any(|&s| s < 2) || lo.iter().zip(hi).any(|(a, b)| !(b > a)) {
                    return Err(ApproxError::Table("each axis needs at least 2 nodes and lo < hi".into()));
                }
                if values.len() != n {
                    return Err(ApproxError::Table(format!("expected {n} values, got {}", values.len())));
                }
                let w = values[0].len();
                if values.iter().any(|v| v.len() != w || v.iter().any(|x| !x.is_finite())) {
                    return Err(ApproxError::Table("values must be finite vectors of equal length".into()));
                }
                w
            }
        };
        if out_dim != dim {
            return Err(ApproxError::TargetDimension { input: dim, output: out_dim, expected: dim });
        }
        let compiled = match self {
            TargetFunction::Polynomial { components } => Some(CompiledField::new(components)),
            _ => None,
        };
        Ok(Target { spec: self.clone(), compiled })
    }
}

impl Target {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match &self.spec {
            TargetFunction::Constant { value } => value.clone(),
            TargetFunction::CoordinateSwap => x.iter().rev().cloned().collect(),
            TargetFunction::Polynomial { .. } => {
                let mut out = vec![0.0; x.len()];
                self.compiled.as_ref().expect("compiled").eval_into(x, &mut out);
                out
            }
            TargetFunction::Tabulated { lo, hi, shape, values } => multilinear(lo, hi, shape, values, x),
        }
    }
}

fn multilinear(lo: &[f64], hi: &[f64], shape: &[usize], values: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut base = vec![0usize; d];
    let mut frac = vec![0.0; d];
    for k in 0..d {
        let s = (x[k].clamp(lo[k], hi[k]) - lo[k]) / (hi[k] - lo[k]) * (shape[k] - 1) as f64;
        let i = (s.floor() as usize).min(shape[k] - 2);
        base[k] = i;
        frac[k] = s - i as f64;
    }
    let mut out = vec![0.0; values[0].len()];
    for corner in 0..(1usize << d) {
        let mut w = 1.0;
        let mut flat = 0;
        for k in 0..d {
            let bit = (corner >> (d - 1 - k)) & 1;
            w *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
            flat = flat * shape[k] + base[k] + bit;
        }
        if w != 0.0 {
            for (o, v) in out.iter_mut().zip(&values[flat]) {
                *o += w * v;
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct LpReport {
    pub error: f64,
    pub p: f64,
    pub nodes: usize,
    /// Measure of `K` as summed by the quadrature weights.
    pub measure: f64,
    /// `error / measure^(1/p)`: the distance under the normalized measure.
    pub normalized_error: f64,
    pub blew_up: bool,
}

fn check_p(p: f64) -> Result<(), ApproxError> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(ApproxError::BadExponent(p));
    }
    Ok(())
}

/// `(sum_nodes w |F(x) - G(x)|_2^p)^(1/p)`. `None` values (blow-up) make
/// the distance infinite.
pub fn lp_distance<F, G>(rule: &QuadratureRule, f: F, g: G, p: f64) -> Result<LpReport, ApproxError>
where
    F: Fn(&[f64]) -> Option<Vec<f64>> + Sync,
    G: Fn(&[f64]) -> Option<Vec<f64>> + Sync,
{
    check_p(p)?;
    if rule.is_empty() {
        return Err(ApproxError::EmptyQuadrature);
    }
    let terms: Vec<Option<f64>> = rule
        .nodes
        .par_iter()
        .map(|x| {
            let (a, b) = (f(x)?, g(x)?);
            let n2: f64 = a.iter().zip(&b).map(|(u, v)| (u - v) * (u - v)).sum();
            Some(n2.sqrt().powf(p))
        })
        .collect();
    let measure = rule.measure();
    let mut sum = 0.0;
    let mut blew_up = false;
    for (t, w) in terms.iter().zip(&rule.weights) {
        match t {
            Some(v) => sum += w * v,
            None => blew_up = true,
        }
    }
    let error = if blew_up { f64::INFINITY } else { sum.powf(1.0 / p) };
    Ok(LpReport { error, p, nodes: rule.len(), measure, normalized_error: error / measure.powf(1.0 / p), blew_up })
}

/// `L^p(K)` distance between the schedule's flow map and `target`.
pub fn lp_error(
    family: &ControlFamily,
    schedule: &ControlSchedule,
    target: &TargetFunction,
    domain: &DomainSpec,
    p: f64,
    step: f64,
) -> Result<LpReport, ApproxError> {
    let target = target.prepare(family.dim())?;
    lp_error_with(family, schedule, |x| target.eval(x), domain, p, step)
}

/// As [`lp_error`] with the target given as a closure.
pub fn lp_error_with<T>(
    family: &ControlFamily,
    schedule: &ControlSchedule,
    target: T,
    domain: &DomainSpec,
    p: f64,
    step: f64,
) -> Result<LpReport, ApproxError>
where
    T: Fn(&[f64]) -> Vec<f64> + Sync,
{
    check_p(p)?;
    if domain.dim() != family.dim() {
        return Err(ApproxError::TargetDimension { input: domain.dim(), output: family.dim(), expected: family.dim() });
    }
    let rule = domain.rule()?;
    let compiled = CompiledSchedule::new(family, schedule)?;
    let opts = FlowOptions::with_step(step);
    lp_distance(&rule, |x| Some(target(x)), |x| compiled.endpoint(x, &opts).ok(), p)
}

#[derive(Clone, Debug, Serialize)]
pub struct VolumeFloorReport {
    /// `int_{unit disc} |phi(x)|^2 dx`.
    pub error_sq: f64,
    pub floor: f64,
    pub budget: f64,
    pub floor_respected: bool,
    /// False if some node blew up; the error is then infinite and says
    /// nothing about volume.
    pub applicable: bool,
}

/// Squared `L^2` distance on the unit disc from the flow of a
/// divergence-free schedule to `F = 0`, against the floor `pi / 2`.
pub fn volume_floor_check(schedule: &ControlSchedule, step: f64) -> Result<VolumeFloorReport, ApproxError> {
    volume_floor_check_on(schedule, step, &DomainSpec::unit_disc())
}

pub fn volume_floor_check_on(
    schedule: &ControlSchedule,
    step: f64,
    disc: &DomainSpec,
) -> Result<VolumeFloorReport, ApproxError> {
    let family = ControlFamily::volume_preserving();
    let r = lp_error(&family, schedule, &TargetFunction::Constant { value: vec![0.0, 0.0] }, disc, 2.0, step)?;
    let floor = PI / 2.0;
    let error_sq = r.error * r.error;
    Ok(VolumeFloorReport {
        error_sq,
        floor,
        budget: VOLUME_FLOOR_BUDGET,
        // an escaping flow has infinite error, which respects any lower bound
        floor_respected: error_sq >= floor - VOLUME_FLOOR_BUDGET,
        applicable: !r.blew_up,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedPointReport {
    pub origin_norm: f64,
    pub pinned: bool,
}

/// Flows the origin through a schedule of the origin-vanishing family.
pub fn fixed_point_check(schedule: &ControlSchedule, step: f64) -> Result<FixedPointReport, ApproxError> {
    let family = ControlFamily::origin_pinned();
    let end = CompiledSchedule::new(&family, schedule)?.endpoint(&[0.0, 0.0], &FlowOptions::with_step(step))?;
    let origin_norm = end.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(FixedPointReport { origin_norm, pinned: origin_norm < PINNED_TOL })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{Activation, WeightStructure};
    use crate::flow::integrate;

    #[test]
    fn grids_integrate_simple_functions() {
        let sq = DomainSpec::square(1.0, 11).rule().unwrap();
        assert!((sq.measure() - 4.0).abs() < 1e-12);
        // trapezoid is exact on bilinear integrands
        let bilinear: f64 = sq.nodes.iter().zip(&sq.weights).map(|(x, w)| w * (1.0 + x[0]) * (2.0 - x[1])).sum();
        assert!((bilinear - 8.0).abs() < 1e-12);
        let disc = DomainSpec::unit_disc().rule().unwrap();
        assert_eq!(disc.len(), 128 * 256);
        assert!((disc.measure() - PI).abs() < 1e-12);
    }

    #[test]
    fn identity_flow_against_zero_on_disc() {
        let fam = ControlFamily::volume_preserving();
        let s = ControlSchedule::constant(vec![0.0; 3], 1.0).unwrap();
        let zero = TargetFunction::Constant { value: vec![0.0, 0.0] };
        let r = lp_error(&fam, &s, &zero, &DomainSpec::unit_disc(), 2.0, 0.01).unwrap();
        assert!((r.error - (PI / 2.0).sqrt()).abs() < 1e-4);
        assert!((r.error - 1.2533).abs() < 1e-4);
        let v = volume_floor_check(&s, 0.01).unwrap();
        assert!(v.floor_respected);
        assert!((v.error_sq - PI / 2.0).abs() < PI / (4.0 * 128.0 * 128.0) + 1e-12);
    }

    #[test]
    fn replayed_flow_has_zero_error() {
        let fam = ControlFamily::resnet(2, Activation::Tanh, WeightStructure::Full).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = ControlSchedule::random(&fam, 3, 1.0, 1.0, &mut rng).unwrap();
        let dom = DomainSpec::square(1.0, 21);
        let r = lp_error_with(
            &fam,
            &s,
            |x| integrate(&fam, &s, x, &FlowOptions::with_step(0.01)).unwrap().endpoint,
            &dom,
            1.5,
            0.01,
        )
        .unwrap();
        assert!(r.error < 1e-10);
    }

    #[test]
    fn grid_and_monte_carlo_agree() {
        let fam = ControlFamily::resnet(2, Activation::Tanh, WeightStructure::Full).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = ControlSchedule::random(&fam, 2, 1.0, 1.0, &mut rng).unwrap();
        let target = TargetFunction::CoordinateSwap;
        let grid = lp_error(&fam, &s, &target, &DomainSpec::square(1.0, 101), 2.0, 0.05).unwrap();
        let mc = DomainSpec::Box {
            lo: vec![-1.0, -1.0],
            hi: vec![1.0, 1.0],
            quadrature: Quadrature::MonteCarlo { num_points: 100_000, seed: 3 },
        };
        let mc = lp_error(&fam, &s, &target, &mc, 2.0, 0.05).unwrap();
        assert!((grid.error - mc.error).abs() / grid.error < 0.01);
    }

    #[test]
    fn distance_is_symmetric_and_normalized_l1_below_l2() {
        let rule = DomainSpec::square(1.0, 31).rule().unwrap();
        let f = |x: &[f64]| Some(vec![x[0] * x[1], x[0].sin()]);
        let g = |x: &[f64]| Some(vec![x[1], 0.3]);
        let a = lp_distance(&rule, f, g, 2.0).unwrap();
        let b = lp_distance(&rule, g, f, 2.0).unwrap();
        assert_eq!(a.error, b.error);
        let one = lp_distance(&rule, f, g, 1.0).unwrap();
        assert!(one.normalized_error <= a.normalized_error);
        assert_eq!(lp_distance(&rule, f, f, 3.0).unwrap().error, 0.0);
        assert!(lp_distance(&rule, f, g, 0.5).is_err());
    }

    #[test]
    fn tabulated_target_is_multilinear() {
        // values of x1 + 2 x2 on a 3 x 2 grid
        let t = TargetFunction::Tabulated {
            lo: vec![0.0, 0.0],
            hi: vec![2.0, 1.0],
            shape: vec![3, 2],
            values: vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 0.0], vec![3.0, 0.0], vec![2.0, 0.0], vec![4.0, 0.0]],
        };
        let p = t.prepare(2).unwrap();
        assert!((p.eval(&[0.5, 0.25])[0] - 1.0).abs() < 1e-12);
        assert!((p.eval(&[1.7, 0.9])[0] - 3.5).abs() < 1e-12);
        assert!((p.eval(&[5.0, -1.0])[0] - 2.0).abs() < 1e-12);
        let bad = TargetFunction::Tabulated { lo: vec![0.0], hi: vec![1.0], shape: vec![2], values: vec![vec![1.0]] };
        assert!(bad.prepare(1).is_err());
    }

    #[test]
    fn origin_stays_put() {
        let s = ControlSchedule::constant(vec![0.0; 6], 1.0).unwrap();
        let r = fixed_point_check(&s, 0.01).unwrap();
        assert_eq!(r.origin_norm, 0.0);
        assert!(r.pinned);
    }

    #[test]
    fn domain_json() {
        let d: DomainSpec = serde_json::from_str(r#"{"kind":"disc","center":[0,0],"radius":1}"#).unwrap();
        assert_eq!(d, DomainSpec::unit_disc());
        let b: DomainSpec = serde_json::from_str(
            r#"{"kind":"box","lo":[0],"hi":[1],"quadrature":{"method":"grid","resolution":[5]}}"#,
        )
        .unwrap();
        assert_eq!(b.rule().unwrap().len(), 5);
        assert!(serde_json::from_str::<DomainSpec>(r#"{"kind":"disc","center":[0,0],"radius":1,"x":0}"#).is_err());
        let bad: DomainSpec = serde_json::from_str(
            r#"{"kind":"box","lo":[0],"hi":[1],"quadrature":{"method":"grid","resolution":[1]}}"#,
        )
        .unwrap();
        assert!(matches!(bad.rule(), Err(ApproxError::Resolution)));
        let t: TargetFunction = serde_json::from_str(r#"{"kind":"polynomial","components":"(x2, x1^2)"}"#).unwrap();
        assert_eq!(t.prepare(2).unwrap().eval(&[2.0, 3.0]), vec![3.0, 4.0]);
    }
}

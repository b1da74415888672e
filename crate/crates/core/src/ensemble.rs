//! Ensemble lifting and rank certificates.
//!
//! Driving `N` copies of a state with one shared control gives a system on
//! `R^{N d}`; its reachable directions at an ensemble `X` are spanned by the
//! lifted fields `(f(x_1), ..., f(x_N))`. Full rank `N d` of that span (or
//! of the lifted Lie closure) is the controllability certificate checked here.

use nalgebra::DMatrix;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::family::{ControlFamily, FamilyError};
use crate::liealg::{lie_closure, ClosureBasis, LieError};
use crate::linalg::{independent_rows, numerical_rank, rows_to_matrix};
use crate::polyvec::{curl2, CompiledField, Polynomial};

pub const DISTINCTNESS_TOL: f64 = 1e-9;
pub const DEFAULT_SVD_REL_TOL: f64 = 1e-8;
const MAX_CERTIFICATE_DRAWS: usize = 1000;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("ensemble must contain at least one point")]
    Empty,
    #[error("point {index} has dimension {got}, expected {expected}")]
    Ragged { index: usize, expected: usize, got: usize },
    #[error("point {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("points {i} and {j} coincide within {tol:e} (sup norm)")]
    Degenerate { i: usize, j: usize, tol: f64 },
    #[error("ensemble dimension {got} does not match family dimension {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("Lie rank needs a control-affine family with polynomial basis fields")]
    NotPolynomial,
    #[error("the Vandermonde certificate is only defined for planar ensembles")]
    NotPlanar,
    #[error("no admissible direction pair found after {0} draws")]
    CertificateSearch(usize),
    #[error("bad ensemble CSV at line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Lie(#[from] LieError),
}

/// `N` pairwise-distinct points in `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ensemble {
    points: Vec<Vec<f64>>,
}

impl Ensemble {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self, EnsembleError> {
        Self::with_tolerance(points, DISTINCTNESS_TOL)
    }

    /// Validates shape, finiteness and sup-norm distinctness at `tol`.
    pub fn with_tolerance(points: Vec<Vec<f64>>, tol: f64) -> Result<Self, EnsembleError> {
        let d = points.first().ok_or(EnsembleError::Empty)?.len();
        if d == 0 {
            return Err(EnsembleError::Ragged { index: 0, expected: 1, got: 0 });
        }
        for (index, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(EnsembleError::Ragged { index, expected: d, got: p.len() });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(EnsembleError::NonFinite(index));
            }
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if sup_dist(&points[i], &points[j]) <= tol {
                    return Err(EnsembleError::Degenerate { i, j, tol });
                }
            }
        }
        Ok(Self { points })
    }

    /// `n` distinct points drawn uniformly from `[lo, hi]^d`.
    pub fn random(n: usize, d: usize, seed: u64, lo: f64, hi: f64) -> Result<Self, EnsembleError> {
        if n == 0 {
            return Err(EnsembleError::Empty);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points: Vec<Vec<f64>> = Vec::with_capacity(n);
        while points.len() < n {
            let p: Vec<f64> = (0..d).map(|_| rng.random_range(lo..hi)).collect();
            if points.iter().all(|q| sup_dist(q, &p) > DISTINCTNESS_TOL) {
                points.push(p);
            }
        }
        Self::new(points)
    }

    /// One point per line, comma separated; blank lines, `#` comments and a
    /// non-numeric header line are skipped.
    pub fn from_csv(text: &str) -> Result<Self, EnsembleError> {
        let mut points = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parsed: Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
            match parsed {
                Ok(p) => points.push(p),
                Err(_) if points.is_empty() && line.chars().any(|c| c.is_ascii_alphabetic()) => continue,
                Err(e) => return Err(EnsembleError::Csv { line: ln + 1, message: e.to_string() }),
            }
        }
        Self::new(points)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            let row: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    /// Reorders points: new point `k` is old point `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, EnsembleError> {
        Self::new(perm.iter().map(|&i| self.points[i].clone()).collect())
    }
}

impl<'de> Deserialize<'de> for Ensemble {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let points = Vec::<Vec<f64>>::deserialize(d)?;
        Ensemble::new(points).map_err(serde::de::Error::custom)
    }
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn check_dims(family: &ControlFamily, x: &Ensemble) -> Result<(), EnsembleError> {
    if family.dim() != x.dim() {
        return Err(EnsembleError::Dimension { expected: family.dim(), got: x.dim() });
    }
    Ok(())
}

/// `(f(x_1; params), ..., f(x_N; params))`, length `N d`.
pub fn lift_eval(family: &ControlFamily, params: &[f64], x: &Ensemble) -> Result<Vec<f64>, EnsembleError> {
    family.check_params(params)?;
    check_dims(family, x)?;
    let d = x.dim();
    let mut out = vec![0.0; x.len() * d];
    for (chunk, p) in out.chunks_mut(d).zip(x.points()) {
        family.eval_into(params, p, chunk);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMethod {
    /// Lifted basis fields of a control-affine family.
    SpanExact,
    /// Lifted evaluations at sampled parameters; a lower bound only.
    SpanSampled,
    /// Lifted basis of the capped Lie closure.
    LieExact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    Field(String),
    Params(Vec<f64>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RankReport {
    pub n: usize,
    pub d: usize,
    pub target_rank: usize,
    pub achieved_rank: usize,
    pub method: RankMethod,
    pub witnesses: Vec<Witness>,
    pub tolerance: f64,
    pub rows_considered: usize,
}

impl RankReport {
    pub fn is_full(&self) -> bool {
        self.achieved_rank == self.target_rank
    }
}

fn build_report(
    rows: Vec<Vec<f64>>,
    candidates: Vec<Witness>,
    x: &Ensemble,
    method: RankMethod,
    tol: f64,
) -> RankReport {
    let ncols = x.len() * x.dim();
    let achieved = numerical_rank(&rows_to_matrix(&rows, ncols), tol);
    let picks = independent_rows(&rows, ncols, tol, achieved);
    // greedy selection can fall short of the SVD rank only in borderline
    // cases; the report keeps the certified (witnessed) count
    let achieved_rank = picks.len().min(achieved);
    RankReport {
        n: x.len(),
        d: x.dim(),
        target_rank: ncols,
        achieved_rank,
        method,
        witnesses: picks.into_iter().map(|i| candidates[i].clone()).collect(),
        tolerance: tol,
        rows_considered: rows.len(),
    }
}

/// Numerical rank of the lifted family at `x`.
///
/// Affine families use their basis fields directly. Network families draw
/// `num_samples` parameter vectors from `sampler_seed` and report a lower
/// bound on the span dimension.
pub fn span_rank(
    family: &ControlFamily,
    x: &Ensemble,
    sampler_seed: u64,
    num_samples: usize,
    svd_rel_tol: f64,
) -> Result<RankReport, EnsembleError> {
    check_dims(family, x)?;
    match family {
        ControlFamily::Affine(a) => {
            let k = a.basis().len();
            let rows = (0..k)
                .map(|i| {
                    let mut theta = vec![0.0; k];
                    theta[i] = 1.0;
                    lift_eval(family, &theta, x)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let witnesses = a.basis().iter().map(|f| Witness::Field(f.to_string())).collect();
            Ok(build_report(rows, witnesses, x, RankMethod::SpanExact, svd_rel_tol))
        }
        ControlFamily::ResNet(_) => {
            let mut rng = ChaCha8Rng::seed_from_u64(sampler_seed);
            let params: Vec<Vec<f64>> = (0..num_samples).map(|_| family.sample_params(&mut rng)).collect();
            let rows = params
                .par_iter()
                .map(|p| lift_eval(family, p, x))
                .collect::<Result<Vec<_>, _>>()?;
            let witnesses = params.into_iter().map(Witness::Params).collect();
            Ok(build_report(rows, witnesses, x, RankMethod::SpanSampled, svd_rel_tol))
        }
    }
}

/// Numerical rank of the lifted, capped Lie closure of an affine family.
pub fn lie_rank(
    family: &ControlFamily,
    x: &Ensemble,
    degree_cap: u32,
    depth_cap: u32,
    svd_rel_tol: f64,
) -> Result<RankReport, EnsembleError> {
    let affine = family.as_affine().ok_or(EnsembleError::NotPolynomial)?;
    check_dims(family, x)?;
    let closure = lie_closure(affine.basis(), degree_cap, depth_cap)?;
    lie_rank_on(&closure, x, svd_rel_tol)
}

/// As [`lie_rank`] with a closure computed once and reused across ensembles.
pub fn lie_rank_on(closure: &ClosureBasis, x: &Ensemble, svd_rel_tol: f64) -> Result<RankReport, EnsembleError> {
    if closure.dimension() != x.dim() {
        return Err(EnsembleError::Dimension { expected: closure.dimension(), got: x.dim() });
    }
    let basis = closure.basis();
    let d = x.dim();
    let rows: Vec<Vec<f64>> = basis
        .par_iter()
        .map(|f| {
            let c = CompiledField::new(f);
            let mut row = vec![0.0; x.len() * d];
            for (chunk, p) in row.chunks_mut(d).zip(x.points()) {
                c.eval_into(p, chunk);
            }
            row
        })
        .collect();
    let witnesses = basis.iter().map(|f| Witness::Field(f.to_string())).collect();
    Ok(build_report(rows, witnesses, x, RankMethod::LieExact, svd_rel_tol))
}

/// Explicit full-rank certificate for the divergence-free planar family:
/// curl fields of `(a x1 - x2)^i` and `(b x1 - x2)^j`, `i, j = 1..N`,
/// evaluated on the ensemble.
#[derive(Clone, Debug, Serialize)]
pub struct VandermondeCertificate {
    pub a: f64,
    pub b: f64,
    /// `2N x 2N`; row `i` is `(v_1 at x_1..x_N, v_2 at x_1..x_N)` for field `i`.
    pub matrix: Vec<Vec<f64>>,
    pub invertible: bool,
    /// `min |u_ii| / max |u_ii|` over the LU pivots.
    pub min_abs_det_scale: f64,
    pub attempts: usize,
}

fn projections_distinct(x: &Ensemble, slope: f64) -> bool {
    let z: Vec<f64> = x.points().iter().map(|p| slope * p[0] - p[1]).collect();
    let scale = z.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            if (z[i] - z[j]).abs() <= DISTINCTNESS_TOL * scale {
                return false;
            }
        }
    }
    true
}

/// Certificate using the first admissible `(a, b)` from `candidates`.
pub fn vandermonde_certificate_from<I>(x: &Ensemble, candidates: I) -> Result<VandermondeCertificate, EnsembleError>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    if x.dim() != 2 {
        return Err(EnsembleError::NotPlanar);
    }
    let mut attempts = 0;
    for (a, b) in candidates.into_iter().take(MAX_CERTIFICATE_DRAWS) {
        attempts += 1;
        if (a - b).abs() <= DISTINCTNESS_TOL || !projections_distinct(x, a) || !projections_distinct(x, b) {
            continue;
        }
        return Ok(build_certificate(x, a, b, attempts));
    }
    Err(EnsembleError::CertificateSearch(attempts))
}

/// Seeded search over `a, b ~ U(-1, 1)`.
pub fn vandermonde_certificate(x: &Ensemble, direction_seed: u64) -> Result<VandermondeCertificate, EnsembleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(direction_seed);
    let draws = std::iter::repeat_with(move || (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    vandermonde_certificate_from(x, draws)
}

fn build_certificate(x: &Ensemble, a: f64, b: f64, attempts: usize) -> VandermondeCertificate {
    let n = x.len();
    let linear = |slope: f64| {
        let s = BigRational::from_float(slope).expect("finite slope");
        let x1 = Polynomial::var(2, 0).expect("axis 0");
        let x2 = Polynomial::var(2, 1).expect("axis 1");
        &x1.scale(&s) - &x2
    };
    let la = linear(a);
    let lb = linear(b);
    let mut matrix = Vec::with_capacity(2 * n);
    for base in [&la, &lb] {
        for i in 1..=n as u32 {
            let field = CompiledField::new(&curl2(&base.pow(i)).expect("planar"));
            let mut row = vec![0.0; 2 * n];
            let mut val = [0.0; 2];
            for (k, p) in x.points().iter().enumerate() {
                field.eval_into(p, &mut val);
                row[k] = val[0];
                row[n + k] = val[1];
            }
            matrix.push(row);
        }
    }
    let m = DMatrix::from_fn(2 * n, 2 * n, |i, j| matrix[i][j]);
    let lu = m.lu();
    let u = lu.u();
    let pivots: Vec<f64> = (0..2 * n).map(|i| u[(i, i)].abs()).collect();
    let max = pivots.iter().cloned().fold(0.0, f64::max);
    let min = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_abs_det_scale = if max > 0.0 { min / max } else { 0.0 };
    let invertible = max > 0.0 && min_abs_det_scale > (2 * n) as f64 * f64::EPSILON;
    VandermondeCertificate { a, b, matrix, invertible, min_abs_det_scale, attempts }
}

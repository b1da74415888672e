//! Parametrised vector-field families `f(x; theta)`.
//!
//! Two kinds are supported: control-affine families `sum_k theta_k f_k(x)`
//! over polynomial basis fields, and residual-network layers
//! `W sigma(A x + b)` whose parameter vector packs `W`, `A`, `b` in that
//! order (row-major), with entries removed by the weight structure simply
//! absent from the vector.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::named;
use crate::polyvec::{CompiledField, CompiledPoly, PolyError, PolyVectorField};

type Buf = SmallVec<[f64; 8]>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FamilyError {
    #[error("parameter vector has length {got}, family expects {expected}")]
    ParamCount { expected: usize, got: usize },
    #[error("point has dimension {got}, family expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("affine family needs at least one basis field")]
    EmptyBasis,
    #[error("resnet dimension must be at least 1")]
    ZeroDimension,
    #[error("unknown named family '{0}'")]
    UnknownName(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Sigmoid,
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative; ReLU uses `sigma'(0) = 0`.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 - s)
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    /// `(sigma(z), sigma'(z))` sharing one transcendental evaluation.
    #[inline]
    pub fn apply_with_derivative(self, z: f64) -> (f64, f64) {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                (t, 1.0 - t * t)
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-z).exp());
                (s, s * (1.0 - s))
            }
            Activation::Relu | Activation::Identity => (self.apply(z), self.derivative(z)),
        }
    }

    pub fn is_smooth(self) -> bool {
        !matches!(self, Activation::Relu)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightStructure {
    /// `W`, `A` full `d x d`.
    Full,
    /// `W` diagonal, `A` full.
    DiagonalW,
    /// `W` full, `A` fixed to the identity: `W sigma(x + b)`.
    TranslationOnly,
    /// `W` and `A` both diagonal.
    DiagonalWAndA,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResNetFamily {
    pub dim: usize,
    pub activation: Activation,
    pub weight_structure: WeightStructure,
}

impl ResNetFamily {
    pub fn new(dim: usize, activation: Activation, weight_structure: WeightStructure) -> Self {
        Self { dim, activation, weight_structure }
    }

    pub fn w_len(&self) -> usize {
        match self.weight_structure {
            WeightStructure::Full | WeightStructure::TranslationOnly => self.dim * self.dim,
            WeightStructure::DiagonalW | WeightStructure::DiagonalWAndA => self.dim,
        }
    }

    pub fn a_len(&self) -> usize {
        match self.weight_structure {
            WeightStructure::Full | WeightStructure::DiagonalW => self.dim * self.dim,
            WeightStructure::TranslationOnly => 0,
            WeightStructure::DiagonalWAndA => self.dim,
        }
    }

    pub fn param_count(&self) -> usize {
        self.w_len() + self.a_len() + self.dim
    }

    fn w_full(&self) -> bool {
        matches!(self.weight_structure, WeightStructure::Full | WeightStructure::TranslationOnly)
    }

    #[inline]
    fn w(&self, p: &[f64], i: usize, j: usize) -> f64 {
        if self.w_full() {
            p[i * self.dim + j]
        } else if i == j {
            p[i]
        } else {
            0.0
        }
    }

    #[inline]
    fn a(&self, p: &[f64], j: usize, k: usize) -> f64 {
        let off = self.w_len();
        match self.weight_structure {
            WeightStructure::Full | WeightStructure::DiagonalW => p[off + j * self.dim + k],
            WeightStructure::TranslationOnly => f64::from(u8::from(j == k)),
            WeightStructure::DiagonalWAndA => {
                if j == k {
                    p[off + j]
                } else {
                    0.0
                }
            }
        }
    }

    #[inline]
    fn b(&self, p: &[f64], j: usize) -> f64 {
        p[self.w_len() + self.a_len() + j]
    }

    fn pre_activation(&self, p: &[f64], x: &[f64]) -> Buf {
        let d = self.dim;
        (0..d)
            .map(|j| (0..d).map(|k| self.a(p, j, k) * x[k]).sum::<f64>() + self.b(p, j))
            .collect()
    }

    /// Full `W` matrix, row-major, for a parameter vector.
    pub fn weight_matrix(&self, p: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d * d).map(|ij| self.w(p, ij / d, ij % d)).collect()
    }

    /// Full `A` matrix, row-major, for a parameter vector.
    pub fn input_matrix(&self, p: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d * d).map(|jk| self.a(p, jk / d, jk % d)).collect()
    }

    /// Packs full matrices into a parameter vector, dropping entries the
    /// structure does not carry.
    pub fn pack(&self, w: &[f64], a: &[f64], b: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut p = Vec::with_capacity(self.param_count());
        if self.w_full() {
            p.extend_from_slice(&w[..d * d]);
        } else {
            p.extend((0..d).map(|i| w[i * d + i]));
        }
        match self.weight_structure {
            WeightStructure::Full | WeightStructure::DiagonalW => p.extend_from_slice(&a[..d * d]),
            WeightStructure::TranslationOnly => {}
            WeightStructure::DiagonalWAndA => p.extend((0..d).map(|j| a[j * d + j])),
        }
        p.extend_from_slice(&b[..d]);
        p
    }

    /// Draws parameters whose `W` rows have absolute sum at most 1 and whose
    /// `A`, `b` entries lie in `[-1, 1]`. With a bounded activation
    /// (`|sigma| <= 1`) the field then satisfies `|f(x)|_1 <= d`.
    pub fn sample_row_bounded<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.dim;
        let mut w: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        if !self.w_full() {
            for (ij, v) in w.iter_mut().enumerate() {
                if ij / d != ij % d {
                    *v = 0.0;
                }
            }
        }
        for row in w.chunks_mut(d) {
            let s: f64 = row.iter().map(|v| v.abs()).sum();
            if s > 1.0 {
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
        let a: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        self.pack(&w, &a, &b)
    }

    /// `d * max|W_ij| * max|A_jk|`.
    pub fn entrywise_lipschitz_estimate(&self, p: &[f64]) -> f64 {
        let max_abs = |m: Vec<f64>| m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        self.dim as f64 * max_abs(self.weight_matrix(p)) * max_abs(self.input_matrix(p))
    }

    /// `|W|_1 |A|_1 sup|sigma'|` with induced `l1` norms (largest column
    /// sums): a Lipschitz constant of the field in the `l1` norm.
    pub fn l1_lipschitz_bound(&self, p: &[f64]) -> f64 {
        let d = self.dim;
        let col_norm = |m: Vec<f64>| {
            (0..d).map(|j| (0..d).map(|i| m[i * d + j].abs()).sum::<f64>()).fold(0.0, f64::max)
        };
        let slope = match self.activation {
            Activation::Tanh | Activation::Relu | Activation::Identity => 1.0,
            Activation::Sigmoid => 0.25,
        };
        col_norm(self.weight_matrix(p)) * col_norm(self.input_matrix(p)) * slope
    }
}

/// Control-affine family over polynomial basis fields.
#[derive(Clone, Debug)]
pub struct AffineFamily {
    basis: Vec<PolyVectorField>,
    compiled: Vec<CompiledField>,
    divergences: Vec<CompiledPoly>,
}

impl AffineFamily {
    pub fn new(basis: Vec<PolyVectorField>) -> Result<Self, FamilyError> {
        let d = basis.first().ok_or(FamilyError::EmptyBasis)?.dim();
        for f in &basis {
            if f.dim() != d {
                return Err(PolyError::DimensionMismatch { left: d, right: f.dim() }.into());
            }
        }
        let compiled = basis.iter().map(CompiledField::new).collect();
        let divergences = basis.iter().map(|f| CompiledPoly::new(&f.divergence())).collect();
        Ok(Self { basis, compiled, divergences })
    }

    pub fn basis(&self) -> &[PolyVectorField] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis[0].dim()
    }
}

#[derive(Clone, Debug)]
pub enum ControlFamily {
    Affine(AffineFamily),
    ResNet(ResNetFamily),
}

impl ControlFamily {
    pub fn affine(basis: Vec<PolyVectorField>) -> Result<Self, FamilyError> {
        Ok(ControlFamily::Affine(AffineFamily::new(basis)?))
    }

    pub fn resnet(dim: usize, activation: Activation, structure: WeightStructure) -> Result<Self, FamilyError> {
        if dim == 0 {
            return Err(FamilyError::ZeroDimension);
        }
        Ok(ControlFamily::ResNet(ResNetFamily::new(dim, activation, structure)))
    }

    /// Divergence-free planar family spanned by `v(x2), v(x1), v(x1^2 x2^2)`.
    pub fn volume_preserving() -> Self {
        Self::affine(named::volume_preserving_fields()).expect("static family")
    }

    /// Planar family whose every field vanishes at the origin.
    pub fn origin_pinned() -> Self {
        Self::affine(named::origin_pinned_fields()).expect("static family")
    }

    /// One-dimensional `theta1 x^3 + theta2 x^2`.
    pub fn cubic_quadratic() -> Self {
        Self::affine(named::cubic_quadratic_fields()).expect("static family")
    }

    pub fn by_name(name: &str) -> Result<Self, FamilyError> {
        match name {
            "volume_preserving" => Ok(Self::volume_preserving()),
            "origin_pinned" => Ok(Self::origin_pinned()),
            "cubic_quadratic" => Ok(Self::cubic_quadratic()),
            other => Err(FamilyError::UnknownName(other.to_string())),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ControlFamily::Affine(a) => a.dim(),
            ControlFamily::ResNet(r) => r.dim,
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            ControlFamily::Affine(a) => a.basis.len(),
            ControlFamily::ResNet(r) => r.param_count(),
        }
    }

    /// False for ReLU networks, whose Jacobians are taken almost everywhere.
    pub fn is_smooth(&self) -> bool {
        match self {
            ControlFamily::Affine(_) => true,
            ControlFamily::ResNet(r) => r.activation.is_smooth(),
        }
    }

    pub fn as_affine(&self) -> Option<&AffineFamily> {
        match self {
            ControlFamily::Affine(a) => Some(a),
            ControlFamily::ResNet(_) => None,
        }
    }

    pub fn check_params(&self, params: &[f64]) -> Result<(), FamilyError> {
        if params.len() != self.param_count() {
            return Err(FamilyError::ParamCount { expected: self.param_count(), got: params.len() });
        }
        Ok(())
    }

    pub fn check_point(&self, x: &[f64]) -> Result<(), FamilyError> {
        if x.len() != self.dim() {
            return Err(FamilyError::Dimension { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    /// `out = f(x; params)`. Lengths are the caller's responsibility.
    pub fn eval_into(&self, params: &[f64], x: &[f64], out: &mut [f64]) {
        match self {
            ControlFamily::Affine(a) => {
                out.iter_mut().for_each(|o| *o = 0.0);
                let mut tmp: Buf = SmallVec::from_elem(0.0, a.dim());
                for (theta, field) in params.iter().zip(&a.compiled) {
                    if *theta == 0.0 {
                        continue;
                    }
                    field.eval_into(x, &mut tmp);
                    for (o, t) in out.iter_mut().zip(&tmp) {
                        *o += theta * t;
                    }
                }
            }
            ControlFamily::ResNet(r) => {
                let z = r.pre_activation(params, x);
                let s: Buf = z.iter().map(|&z| r.activation.apply(z)).collect();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..r.dim).map(|j| r.w(params, i, j) * s[j]).sum();
                }
            }
        }
    }

    pub fn eval(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>, FamilyError> {
        self.check_params(params)?;
        self.check_point(x)?;
        let mut out = vec![0.0; self.dim()];
        self.eval_into(params, x, &mut out);
        Ok(out)
    }

    /// Row-major Jacobian `d f_i / d x_j` into `out` (length `d * d`).
    pub fn jacobian_into(&self, params: &[f64], x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        match self {
            ControlFamily::Affine(a) => {
                out.iter_mut().for_each(|o| *o = 0.0);
                let mut tmp: Buf = SmallVec::from_elem(0.0, d * d);
                for (theta, field) in params.iter().zip(&a.compiled) {
                    if *theta == 0.0 {
                        continue;
                    }
                    field.jacobian_into(x, &mut tmp);
                    for (o, t) in out.iter_mut().zip(&tmp) {
                        *o += theta * t;
                    }
                }
            }
            ControlFamily::ResNet(r) => {
                let z = r.pre_activation(params, x);
                let ds: Buf = z.iter().map(|&z| r.activation.derivative(z)).collect();
                for i in 0..d {
                    for k in 0..d {
                        out[i * d + k] =
                            (0..d).map(|j| r.w(params, i, j) * ds[j] * r.a(params, j, k)).sum();
                    }
                }
            }
        }
    }

    pub fn divergence(&self, params: &[f64], x: &[f64]) -> f64 {
        match self {
            ControlFamily::Affine(a) => params
                .iter()
                .zip(&a.divergences)
                .filter(|(t, _)| **t != 0.0)
                .map(|(t, p)| t * p.eval(x))
                .sum(),
            ControlFamily::ResNet(r) => {
                let z = r.pre_activation(params, x);
                (0..r.dim)
                    .map(|i| {
                        (0..r.dim)
                            .map(|j| r.w(params, i, j) * r.activation.derivative(z[j]) * r.a(params, j, i))
                            .sum::<f64>()
                    })
                    .sum()
            }
        }
    }

    /// Vector-Jacobian products at `x` for cotangent `v`:
    /// `out_x = (df/dx)^T v` and `grad_params += (df/dtheta)^T v`.
    pub fn vjp(&self, params: &[f64], x: &[f64], v: &[f64], out_x: &mut [f64], grad_params: &mut [f64]) {
        let d = self.dim();
        match self {
            ControlFamily::Affine(a) => {
                out_x.iter_mut().for_each(|o| *o = 0.0);
                let mut val: Buf = SmallVec::from_elem(0.0, d);
                let mut jac: Buf = SmallVec::from_elem(0.0, d * d);
                for ((theta, field), g) in params.iter().zip(&a.compiled).zip(grad_params.iter_mut()) {
                    field.eval_into(x, &mut val);
                    *g += val.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
                    if *theta == 0.0 {
                        continue;
                    }
                    field.jacobian_into(x, &mut jac);
                    for i in 0..d {
                        for j in 0..d {
                            out_x[j] += theta * jac[i * d + j] * v[i];
                        }
                    }
                }
            }
            ControlFamily::ResNet(r) => {
                let z = r.pre_activation(params, x);
                let mut sig: Buf = SmallVec::from_elem(0.0, d);
                // u_j = sigma'(z_j) * (W^T v)_j
                let mut u: Buf = SmallVec::from_elem(0.0, d);
                for j in 0..d {
                    let (s, ds) = r.activation.apply_with_derivative(z[j]);
                    sig[j] = s;
                    let wtv: f64 = (0..d).map(|i| r.w(params, i, j) * v[i]).sum();
                    u[j] = ds * wtv;
                }
                for (k, o) in out_x.iter_mut().enumerate() {
                    *o = (0..d).map(|j| r.a(params, j, k) * u[j]).sum();
                }
                // dW
                if r.w_full() {
                    for i in 0..d {
                        for j in 0..d {
                            grad_params[i * d + j] += v[i] * sig[j];
                        }
                    }
                } else {
                    for i in 0..d {
                        grad_params[i] += v[i] * sig[i];
                    }
                }
                // dA
                let off = r.w_len();
                match r.weight_structure {
                    WeightStructure::Full | WeightStructure::DiagonalW => {
                        for j in 0..d {
                            for k in 0..d {
                                grad_params[off + j * d + k] += u[j] * x[k];
                            }
                        }
                    }
                    WeightStructure::TranslationOnly => {}
                    WeightStructure::DiagonalWAndA => {
                        for j in 0..d {
                            grad_params[off + j] += u[j] * x[j];
                        }
                    }
                }
                // db
                let off = r.w_len() + r.a_len();
                for j in 0..d {
                    grad_params[off + j] += u[j];
                }
            }
        }
    }

    /// Draws a parameter vector: for networks, `W` and `A` entries are
    /// `N(0, 1/d)` and `b` entries `N(0, 1)`; for affine families every
    /// coefficient is `N(0, 1)`.
    pub fn sample_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
        match self {
            ControlFamily::Affine(a) => (0..a.basis.len()).map(|_| std_normal.sample(rng)).collect(),
            ControlFamily::ResNet(r) => {
                let scale = 1.0 / (r.dim as f64).sqrt();
                let n_mat = r.w_len() + r.a_len();
                (0..r.param_count())
                    .map(|i| {
                        let z = std_normal.sample(rng);
                        if i < n_mat {
                            z * scale
                        } else {
                            z
                        }
                    })
                    .collect()
            }
        }
    }
}

/// A family member with its parameters resolved, for hot loops.
///
/// Affine members merge `sum_k theta_k f_k` into one polynomial per
/// component; network members expand `W` and `A` to full matrices.
#[derive(Clone, Debug)]
pub enum FieldKernel {
    Poly {
        dim: usize,
        values: Vec<CompiledPoly>,
        jacobian: Vec<CompiledPoly>,
        divergence: CompiledPoly,
    },
    Net {
        dim: usize,
        activation: Activation,
        w: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
    },
}

impl FieldKernel {
    pub fn dim(&self) -> usize {
        match self {
            FieldKernel::Poly { dim, .. } | FieldKernel::Net { dim, .. } => *dim,
        }
    }

    #[inline]
    fn net_pre(a: &[f64], b: &[f64], x: &[f64], z: &mut [f64]) {
        let d = x.len();
        for (j, zj) in z.iter_mut().enumerate() {
            *zj = b[j] + a[j * d..j * d + d].iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
        }
    }

    #[inline]
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            FieldKernel::Poly { values, .. } => {
                for (o, p) in out.iter_mut().zip(values) {
                    *o = p.eval(x);
                }
            }
            FieldKernel::Net { dim, activation, w, a, b } => {
                let d = *dim;
                let mut z: Buf = SmallVec::from_elem(0.0, d);
                Self::net_pre(a, b, x, &mut z);
                for zj in z.iter_mut() {
                    *zj = activation.apply(*zj);
                }
                for (i, o) in out.iter_mut().enumerate() {
                    *o = w[i * d..i * d + d].iter().zip(&z).map(|(p, q)| p * q).sum();
                }
            }
        }
    }

    /// Row-major Jacobian into `out`.
    #[inline]
    pub fn jacobian_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            FieldKernel::Poly { jacobian, .. } => {
                for (o, p) in out.iter_mut().zip(jacobian) {
                    *o = p.eval(x);
                }
            }
            FieldKernel::Net { dim, activation, w, a, b } => {
                let d = *dim;
                let mut z: Buf = SmallVec::from_elem(0.0, d);
                Self::net_pre(a, b, x, &mut z);
                for zj in z.iter_mut() {
                    *zj = activation.derivative(*zj);
                }
                for i in 0..d {
                    for k in 0..d {
                        out[i * d + k] = (0..d).map(|j| w[i * d + j] * z[j] * a[j * d + k]).sum();
                    }
                }
            }
        }
    }

    #[inline]
    pub fn divergence(&self, x: &[f64]) -> f64 {
        match self {
            FieldKernel::Poly { divergence, .. } => divergence.eval(x),
            FieldKernel::Net { dim, activation, w, a, b } => {
                let d = *dim;
                let mut z: Buf = SmallVec::from_elem(0.0, d);
                Self::net_pre(a, b, x, &mut z);
                (0..d)
                    .map(|j| {
                        let s = activation.derivative(z[j]);
                        s * (0..d).map(|i| w[i * d + j] * a[j * d + i]).sum::<f64>()
                    })
                    .sum()
            }
        }
    }
}

impl ControlFamily {
    /// Resolves `params` into a [`FieldKernel`].
    pub fn kernel(&self, params: &[f64]) -> Result<FieldKernel, FamilyError> {
        self.check_params(params)?;
        let d = self.dim();
        Ok(match self {
            ControlFamily::Affine(fam) => {
                let merge = |pick: &dyn Fn(&CompiledField) -> &CompiledPoly| {
                    let parts: Vec<(&CompiledPoly, f64)> =
                        fam.compiled.iter().zip(params).map(|(f, &t)| (pick(f), t)).collect();
                    CompiledPoly::weighted_sum(d, &parts)
                };
                let values = (0..d).map(|i| merge(&|f| f.value(i))).collect();
                let jacobian = (0..d * d).map(|ij| merge(&|f| f.partial(ij / d, ij % d))).collect();
                let parts: Vec<(&CompiledPoly, f64)> = fam.divergences.iter().zip(params).map(|(p, &t)| (p, t)).collect();
                let divergence = CompiledPoly::weighted_sum(d, &parts);
                FieldKernel::Poly { dim: d, values, jacobian, divergence }
            }
            ControlFamily::ResNet(r) => FieldKernel::Net {
                dim: d,
                activation: r.activation,
                w: r.weight_matrix(params),
                a: r.input_matrix(params),
                b: (0..d).map(|j| r.b(params, j)).collect(),
            },
        })
    }
}

/// Serialised description of a family, e.g.
/// `{"kind": "resnet", "dim": 2, "activation": "tanh", "weight_structure": "full"}`,
/// `{"kind": "affine", "basis": ["(0, 1)", "(-1, 0)"]}` or
/// `{"kind": "named", "name": "volume_preserving"}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Affine { basis: Vec<PolyVectorField> },
    Resnet {
        dim: usize,
        activation: Activation,
        #[serde(default = "default_structure")]
        weight_structure: WeightStructure,
    },
    Named { name: String },
}

fn default_structure() -> WeightStructure {
    WeightStructure::Full
}

impl FamilySpec {
    pub fn build(&self) -> Result<ControlFamily, FamilyError> {
        match self {
            FamilySpec::Affine { basis } => ControlFamily::affine(basis.clone()),
            FamilySpec::Resnet { dim, activation, weight_structure } => {
                ControlFamily::resnet(*dim, *activation, *weight_structure)
            }
            FamilySpec::Named { name } => ControlFamily::by_name(name),
        }
    }
}

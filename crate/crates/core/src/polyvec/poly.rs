use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::PolyError;

/// Exponent vector of a monomial `x1^e1 * ... * xd^ed`.
///
/// Ordering is graded lexicographic: total degree first, then the exponent
/// of `x1`, then `x2`, and so on.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    exponents: Vec<u32>,
}

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self { exponents }
    }

    /// The constant monomial `1` in `dim` variables.
    pub fn one(dim: usize) -> Self {
        Self { exponents: vec![0; dim] }
    }

    /// The monomial `x_{axis+1}`.
    pub fn var(dim: usize, axis: usize) -> Self {
        let mut exponents = vec![0; dim];
        exponents[axis] = 1;
        Self { exponents }
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn total_degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            exponents: self
                .exponents
                .iter()
                .zip(&other.exponents)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.exponents.cmp(&other.exponents))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multivariate polynomial with exact rational coefficients.
///
/// Terms are kept in a map keyed by monomial; zero coefficients are never
/// stored, so the zero polynomial has no terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<Monomial, BigRational>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        assert!(dim >= 1, "polynomial dimension must be at least 1");
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: BigRational) -> Self {
        Self::monomial(dim, c, Monomial::one(dim))
    }

    pub fn from_int(dim: usize, c: i64) -> Self {
        Self::constant(dim, BigRational::from_integer(BigInt::from(c)))
    }

    /// `c * m`. Panics if the monomial dimension differs from `dim`.
    pub fn monomial(dim: usize, c: BigRational, m: Monomial) -> Self {
        assert_eq!(m.dim(), dim, "monomial dimension mismatch");
        let mut p = Self::zero(dim);
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    /// `x_{axis+1}`.
    pub fn var(dim: usize, axis: usize) -> Result<Self, PolyError> {
        if axis >= dim {
            return Err(PolyError::AxisOutOfRange { axis, dim });
        }
        Ok(Self::monomial(dim, BigRational::one(), Monomial::var(dim, axis)))
    }

    /// Integer-coefficient monomial from an exponent list, e.g. `term(3, &[2, 2])` is `3*x1^2*x2^2`.
    pub fn term(c: i64, exponents: &[u32]) -> Self {
        Self::monomial(
            exponents.len(),
            BigRational::from_integer(BigInt::from(c)),
            Monomial::new(exponents.to_vec()),
        )
    }

    /// Builds a polynomial from `(coefficient, monomial)` pairs, merging duplicates.
    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (BigRational, Monomial)>,
    {
        let mut p = Self::zero(dim);
        for (c, m) in terms {
            if m.dim() != dim {
                return Err(PolyError::DimensionMismatch { left: dim, right: m.dim() });
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `-1` for the zero polynomial.
    pub fn degree(&self) -> i64 {
        self.terms
            .keys()
            .next_back()
            .map_or(-1, |m| i64::from(m.total_degree()))
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> BigRational {
        self.terms.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Leading (largest graded-lex) term.
    pub fn leading_term(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next_back()
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing += c;
                if existing.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    fn check_dim(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.dim != other.dim {
            return Err(PolyError::DimensionMismatch { left: self.dim, right: other.dim });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_dim(other)?;
        let mut out = Polynomial::zero(self.dim);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &BigRational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.dim);
        }
        Polynomial {
            dim: self.dim,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Polynomial {
        let mut out = Polynomial::from_int(self.dim, 1);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// Exact partial derivative with respect to coordinate `axis` (0-based).
    pub fn partial(&self, axis: usize) -> Result<Polynomial, PolyError> {
        if axis >= self.dim {
            return Err(PolyError::AxisOutOfRange { axis, dim: self.dim });
        }
        let mut out = Polynomial::zero(self.dim);
        for (m, c) in &self.terms {
            let e = m.exponents[axis];
            if e == 0 {
                continue;
            }
            let mut exps = m.exponents.clone();
            exps[axis] -= 1;
            out.add_term(Monomial::new(exps), c * BigRational::from_integer(BigInt::from(e)));
        }
        Ok(out)
    }

    /// Floating-point evaluation.
    pub fn eval(&self, x: &[f64]) -> Result<f64, PolyError> {
        if x.len() != self.dim {
            return Err(PolyError::PointLength { expected: self.dim, got: x.len() });
        }
        Ok(CompiledPoly::new(self).eval(x))
    }

    /// Exact evaluation at a rational point.
    pub fn eval_exact(&self, x: &[BigRational]) -> Result<BigRational, PolyError> {
        if x.len() != self.dim {
            return Err(PolyError::PointLength { expected: self.dim, got: x.len() });
        }
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &e) in x.iter().zip(&m.exponents) {
                for _ in 0..e {
                    t *= xi;
                }
            }
            acc += t;
        }
        Ok(acc)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.try_add(rhs).expect("polynomial dimension mismatch in +")
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.try_sub(rhs).expect("polynomial dimension mismatch in -")
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.try_mul(rhs).expect("polynomial dimension mismatch in *")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            dim: self.dim,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }
}

impl Add for Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: Polynomial) -> Polynomial {
        &self + &rhs
    }
}

impl Sub for Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: Polynomial) -> Polynomial {
        &self - &rhs
    }
}

impl Mul for Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: Polynomial) -> Polynomial {
        &self * &rhs
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}

/// A polynomial lowered to `f64` for repeated numeric evaluation.
///
/// Terms are stored flat (coefficient plus `dim` exponents) and evaluated
/// with integer powers, so evaluation never allocates.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledPoly {
    dim: usize,
    coeffs: Vec<f64>,
    exps: Vec<u32>,
}

impl CompiledPoly {
    pub fn new(p: &Polynomial) -> Self {
        let mut coeffs = Vec::with_capacity(p.terms.len());
        let mut exps = Vec::with_capacity(p.terms.len() * p.dim);
        for (m, c) in p.terms.iter().rev() {
            coeffs.push(rational_to_f64(c));
            exps.extend_from_slice(&m.exponents);
        }
        Self { dim: p.dim, coeffs, exps }
    }

    /// `sum_k w_k p_k`, merging equal monomials. Zero weights are skipped.
    pub fn weighted_sum(dim: usize, parts: &[(&CompiledPoly, f64)]) -> Self {
        let mut acc: BTreeMap<&[u32], f64> = BTreeMap::new();
        for (p, w) in parts {
            if *w == 0.0 {
                continue;
            }
            for (c, e) in p.coeffs.iter().zip(p.exps.chunks(dim.max(1))) {
                *acc.entry(e).or_insert(0.0) += w * c;
            }
        }
        let mut coeffs = Vec::with_capacity(acc.len());
        let mut exps = Vec::with_capacity(acc.len() * dim);
        for (e, c) in acc {
            if c != 0.0 {
                coeffs.push(c);
                exps.extend_from_slice(e);
            }
        }
        Self { dim, coeffs, exps }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let d = self.dim;
        let mut sum = 0.0;
        for (k, c) in self.coeffs.iter().enumerate() {
            let mut t = *c;
            for (xi, &e) in x.iter().zip(&self.exps[k * d..k * d + d]) {
                if e != 0 {
                    t *= xi.powi(e as i32);
                }
            }
            sum += t;
        }
        sum
    }
}

pub(crate) fn rational_to_f64(c: &BigRational) -> f64 {
    c.to_f64().unwrap_or(f64::NAN)
}

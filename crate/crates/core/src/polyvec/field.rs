use num_rational::BigRational;

use super::poly::{CompiledPoly, Polynomial};
use super::PolyError;

/// Polynomial vector field on `R^d`: `d` components, each a polynomial in `d` variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PolyVectorField {
    components: Vec<Polynomial>,
}

impl PolyVectorField {
    pub fn new(components: Vec<Polynomial>) -> Result<Self, PolyError> {
        let d = components.len();
        if d == 0 {
            return Err(PolyError::EmptyField);
        }
        for c in &components {
            if c.dim() != d {
                return Err(PolyError::DimensionMismatch { left: d, right: c.dim() });
            }
        }
        Ok(Self { components })
    }

    pub fn zero(dim: usize) -> Self {
        Self { components: (0..dim).map(|_| Polynomial::zero(dim)).collect() }
    }

    /// Constant field with integer entries, e.g. `constant(&[0, 1])`.
    pub fn constant(values: &[i64]) -> Self {
        let d = values.len();
        Self { components: values.iter().map(|&v| Polynomial::from_int(d, v)).collect() }
    }

    /// Field whose only nonzero component is `p` at position `axis`.
    pub fn axis(p: Polynomial, axis: usize) -> Result<Self, PolyError> {
        let d = p.dim();
        if axis >= d {
            return Err(PolyError::AxisOutOfRange { axis, dim: d });
        }
        let mut components: Vec<Polynomial> = (0..d).map(|_| Polynomial::zero(d)).collect();
        components[axis] = p;
        Ok(Self { components })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Polynomial {
        &self.components[i]
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Polynomial::is_zero)
    }

    /// Maximum component degree; `-1` for the zero field.
    pub fn degree(&self) -> i64 {
        self.components.iter().map(Polynomial::degree).max().unwrap_or(-1)
    }

    fn check_dim(&self, other: &PolyVectorField) -> Result<(), PolyError> {
        if self.dim() != other.dim() {
            return Err(PolyError::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &PolyVectorField) -> Result<PolyVectorField, PolyError> {
        self.check_dim(other)?;
        Ok(Self {
            components: self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn try_sub(&self, other: &PolyVectorField) -> Result<PolyVectorField, PolyError> {
        self.check_dim(other)?;
        Ok(Self {
            components: self.components.iter().zip(&other.components).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, c: &BigRational) -> PolyVectorField {
        Self { components: self.components.iter().map(|p| p.scale(c)).collect() }
    }

    pub fn neg(&self) -> PolyVectorField {
        Self { components: self.components.iter().map(|p| -p).collect() }
    }

    /// Directional derivative of `self` along `dir`: `(grad self) . dir`, componentwise.
    fn derivative_along(&self, dir: &PolyVectorField) -> Result<PolyVectorField, PolyError> {
        let d = self.dim();
        let mut components = Vec::with_capacity(d);
        for gi in &self.components {
            let mut acc = Polynomial::zero(d);
            for (j, fj) in dir.components.iter().enumerate() {
                if fj.is_zero() {
                    continue;
                }
                let dg = gi.partial(j)?;
                if !dg.is_zero() {
                    acc = &acc + &(&dg * fj);
                }
            }
            components.push(acc);
        }
        Ok(Self { components })
    }

    /// Lie bracket `[self, g] = (grad g) self - (grad self) g`.
    pub fn lie_bracket(&self, g: &PolyVectorField) -> Result<PolyVectorField, PolyError> {
        self.check_dim(g)?;
        let a = g.derivative_along(self)?;
        let b = self.derivative_along(g)?;
        a.try_sub(&b)
    }

    pub fn divergence(&self) -> Polynomial {
        let d = self.dim();
        let mut acc = Polynomial::zero(d);
        for (i, p) in self.components.iter().enumerate() {
            acc = &acc + &p.partial(i).expect("axis < dim");
        }
        acc
    }

    /// Jacobian entries `d f_i / d x_j`, row-major.
    pub fn jacobian(&self) -> Vec<Vec<Polynomial>> {
        let d = self.dim();
        self.components
            .iter()
            .map(|p| (0..d).map(|j| p.partial(j).expect("axis < dim")).collect())
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, PolyError> {
        if x.len() != self.dim() {
            return Err(PolyError::PointLength { expected: self.dim(), got: x.len() });
        }
        Ok(self.components.iter().map(|p| CompiledPoly::new(p).eval(x)).collect())
    }

    pub fn eval_exact(&self, x: &[BigRational]) -> Result<Vec<BigRational>, PolyError> {
        self.components.iter().map(|p| p.eval_exact(x)).collect()
    }
}

/// Lie bracket `[f, g] = (grad g) f - (grad f) g`.
pub fn lie_bracket(f: &PolyVectorField, g: &PolyVectorField) -> Result<PolyVectorField, PolyError> {
    f.lie_bracket(g)
}

pub fn divergence(f: &PolyVectorField) -> Polynomial {
    f.divergence()
}

/// Planar curl field `v(f) = (-f_{x2}, f_{x1})`.
pub fn curl2(f: &Polynomial) -> Result<PolyVectorField, PolyError> {
    if f.dim() != 2 {
        return Err(PolyError::NotPlanar { dim: f.dim() });
    }
    let fx1 = f.partial(0)?;
    let fx2 = f.partial(1)?;
    Ok(PolyVectorField { components: vec![-fx2, fx1] })
}

/// Numeric form of a field with its Jacobian, for integrators.
#[derive(Clone, Debug)]
pub struct CompiledField {
    values: Vec<CompiledPoly>,
    jacobian: Vec<Vec<CompiledPoly>>,
}

impl CompiledField {
    pub fn new(f: &PolyVectorField) -> Self {
        Self {
            values: f.components.iter().map(CompiledPoly::new).collect(),
            jacobian: f
                .jacobian()
                .iter()
                .map(|row| row.iter().map(CompiledPoly::new).collect())
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.values) {
            *o = p.eval(x);
        }
    }

    pub fn value(&self, i: usize) -> &CompiledPoly {
        &self.values[i]
    }

    /// `d f_i / d x_j`.
    pub fn partial(&self, i: usize, j: usize) -> &CompiledPoly {
        &self.jacobian[i][j]
    }

    /// Row-major `d x d` Jacobian at `x`.
    pub fn jacobian_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for (i, row) in self.jacobian.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                out[i * d + j] = if p.is_zero() { 0.0 } else { p.eval(x) };
            }
        }
    }
}

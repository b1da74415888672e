//! The concrete polynomial systems used throughout the experiments.

use crate::polyvec::{curl2, PolyVectorField, Polynomial};

fn field(components: Vec<Polynomial>) -> PolyVectorField {
    PolyVectorField::new(components).expect("static field is well formed")
}

/// Divergence-free planar system
/// `x1' = -t1 - 2 t3 x1^2 x2`, `x2' = t2 + 2 t3 x1 x2^2`.
///
/// Basis order matches the parameter order: `v(x2) = (-1, 0)`,
/// `v(x1) = (0, 1)`, `v(x1^2 x2^2)`.
pub fn volume_preserving_fields() -> Vec<PolyVectorField> {
    let x1 = Polynomial::term(1, &[1, 0]);
    let x2 = Polynomial::term(1, &[0, 1]);
    let x1sq_x2sq = Polynomial::term(1, &[2, 2]);
    vec![
        curl2(&x2).expect("planar"),
        curl2(&x1).expect("planar"),
        curl2(&x1sq_x2sq).expect("planar"),
    ]
}

/// Planar system with a fixed point at the origin:
/// `x1' = t1 x1^3 + t2 x1^2 + t3 x2`, `x2' = t4 x2^3 + t5 x2^2 + t6 x1`.
pub fn origin_pinned_fields() -> Vec<PolyVectorField> {
    let z = || Polynomial::zero(2);
    let t = Polynomial::term;
    vec![
        field(vec![t(1, &[3, 0]), z()]),
        field(vec![t(1, &[2, 0]), z()]),
        field(vec![t(1, &[0, 1]), z()]),
        field(vec![z(), t(1, &[0, 3])]),
        field(vec![z(), t(1, &[0, 2])]),
        field(vec![z(), t(1, &[1, 0])]),
    ]
}

/// One-dimensional `x' = t1 x^3 + t2 x^2`.
pub fn cubic_quadratic_fields() -> Vec<PolyVectorField> {
    vec![
        field(vec![Polynomial::term(1, &[3])]),
        field(vec![Polynomial::term(1, &[2])]),
    ]
}

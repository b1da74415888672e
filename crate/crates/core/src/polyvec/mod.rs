//! Exact polynomials and polynomial vector fields over the rationals.

mod field;
mod poly;
mod text;

pub use field::{curl2, divergence, lie_bracket, CompiledField, PolyVectorField};
pub use poly::{CompiledPoly, Monomial, Polynomial};
pub use text::{parse_field, parse_polynomial};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("point has length {got}, expected {expected}")]
    PointLength { expected: usize, got: usize },
    #[error("curl is only defined in two dimensions, got {dim}")]
    NotPlanar { dim: usize },
    #[error("a vector field needs at least one component")]
    EmptyField,
    #[error("parse error at byte {pos}: {message}")]
    Parse { pos: usize, message: String },
}

impl PolyError {
    fn shift(self, by: usize) -> Self {
        match self {
            PolyError::Parse { pos, message } => PolyError::Parse { pos: pos + by, message },
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::poly::rational_to_f64;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn p2(s: &str) -> Polynomial {
        parse_polynomial(s, 2).unwrap()
    }

    fn field(s: &str) -> PolyVectorField {
        parse_field(s).unwrap()
    }

    fn v(s: &str) -> PolyVectorField {
        curl2(&p2(s)).unwrap()
    }

    #[test]
    fn add_examples() {
        assert!((&p2("x1^2") + &p2("-x1^2")).is_zero());
        assert_eq!(&p2("x1 + x2") + &p2("x1"), p2("2*x1 + x2"));
        let s = &p2("x1^2*x2^2") + &p2("x1^2*x2");
        assert_eq!(s.num_terms(), 2);
        assert_eq!(s.to_string(), "x1^2*x2^2 + x1^2*x2");
        assert_eq!(
            p2("x1").try_add(&Polynomial::zero(3)),
            Err(PolyError::DimensionMismatch { left: 2, right: 3 })
        );
    }

    #[test]
    fn mul_examples() {
        assert_eq!(&p2("x1") * &p2("x2"), p2("x1*x2"));
        assert_eq!(&p2("x1 + x2") * &p2("x1 - x2"), p2("x1^2 - x2^2"));
        assert_eq!(&p2("2*x1^2") * &p2("3*x2^2"), p2("6*x1^2*x2^2"));
        assert!(p2("x1").try_mul(&Polynomial::zero(1)).is_err());
    }

    #[test]
    fn partial_examples() {
        assert_eq!(p2("x1^2*x2^2").partial(1).unwrap(), p2("2*x1^2*x2"));
        assert!(p2("x2^3").partial(0).unwrap().is_zero());
        assert_eq!(p2("x1^2*x2^2").partial(0).unwrap(), p2("2*x1*x2^2"));
        assert_eq!(
            p2("x1").partial(2),
            Err(PolyError::AxisOutOfRange { axis: 2, dim: 2 })
        );
    }

    #[test]
    fn degree_of_zero_is_negative_one() {
        assert_eq!(Polynomial::zero(2).degree(), -1);
        assert_eq!(PolyVectorField::zero(2).degree(), -1);
        assert_eq!(p2("x1^2*x2 + x2").degree(), 3);
    }

    #[test]
    fn bracket_examples() {
        // [v(x1), v(x1^2 x2^2)] = 2 v(x1^2 x2)
        let b = lie_bracket(&v("x1"), &v("x1^2*x2^2")).unwrap();
        assert_eq!(b, v("2*x1^2*x2"));
        assert_eq!(b, field("(-2*x1^2, 4*x1*x2)"));
        let f = field("(x1^2*x2, x2 - 3)");
        assert!(lie_bracket(&f, &f).unwrap().is_zero());
        // d = 1: [x^n, x^2] = (2 - n) x^(n+1)
        for n in 0..7u32 {
            let xn = PolyVectorField::new(vec![Polynomial::term(1, &[n])]).unwrap();
            let x2 = PolyVectorField::new(vec![Polynomial::term(1, &[2])]).unwrap();
            let expected = Polynomial::term(2 - i64::from(n), &[n + 1]);
            assert_eq!(lie_bracket(&xn, &x2).unwrap().component(0), &expected);
        }
        assert!(lie_bracket(&field("(x1)"), &field("(x1, x2)")).is_err());
    }

    #[test]
    fn divergence_examples() {
        assert!(divergence(&v("x1^2*x2^2")).is_zero());
        assert_eq!(divergence(&field("(x1, x2)")), p2("2"));
        assert_eq!(divergence(&field("(x1^3, x2^3)")), p2("3*x1^2 + 3*x2^2"));
    }

    #[test]
    fn curl_examples() {
        assert_eq!(v("x1"), PolyVectorField::constant(&[0, 1]));
        assert_eq!(v("x2"), PolyVectorField::constant(&[-1, 0]));
        assert_eq!(v("x1^2*x2^2"), field("(-2*x1^2*x2, 2*x1*x2^2)"));
        assert!(v("7").is_zero());
        assert_eq!(
            curl2(&Polynomial::zero(3)),
            Err(PolyError::NotPlanar { dim: 3 })
        );
    }

    #[test]
    fn eval_examples() {
        assert_eq!(v("x1^2*x2^2").eval(&[1.0, 1.0]).unwrap(), vec![-2.0, 2.0]);
        assert_eq!(PolyVectorField::constant(&[0, 1]).eval(&[3.5, -2.0]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(field("(x1^3, x2^3)").eval(&[2.0, -1.0]).unwrap(), vec![8.0, -1.0]);
        assert!(field("(x1^3, x2^3)").eval(&[2.0]).is_err());
    }

    // random polynomial: up to `terms` monomials with degree <= max_deg, small rational coefficients
    fn arb_poly(dim: usize, max_deg: u32, terms: usize) -> impl Strategy<Value = Polynomial> {
        prop::collection::vec(
            (
                prop::collection::vec(0..=max_deg, dim),
                -6i64..=6,
                1i64..=3,
            ),
            0..=terms,
        )
        .prop_map(move |raw| {
            let terms = raw.into_iter().filter_map(|(mut exps, n, d)| {
                // clamp total degree
                while exps.iter().sum::<u32>() > max_deg {
                    let i = exps.iter().position(|&e| e > 0).unwrap();
                    exps[i] -= 1;
                }
                (n != 0).then(|| (BigRational::new(BigInt::from(n), BigInt::from(d)), Monomial::new(exps)))
            });
            Polynomial::from_terms(dim, terms).unwrap()
        })
    }

    fn arb_field(dim: usize, max_deg: u32) -> impl Strategy<Value = PolyVectorField> {
        prop::collection::vec(arb_poly(dim, max_deg, 3), dim)
            .prop_map(|c| PolyVectorField::new(c).unwrap())
    }

    fn arb_triple() -> impl Strategy<Value = (PolyVectorField, PolyVectorField, PolyVectorField)> {
        (1usize..=3).prop_flat_map(|d| (arb_field(d, 3), arb_field(d, 3), arb_field(d, 3)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn bracket_is_antisymmetric((f, g, _h) in arb_triple()) {
            let fg = lie_bracket(&f, &g).unwrap();
            let gf = lie_bracket(&g, &f).unwrap();
            prop_assert_eq!(fg, gf.neg());
        }

        #[test]
        fn jacobi_identity((f, g, h) in arb_triple()) {
            let a = lie_bracket(&f, &lie_bracket(&g, &h).unwrap()).unwrap();
            let b = lie_bracket(&g, &lie_bracket(&h, &f).unwrap()).unwrap();
            let c = lie_bracket(&h, &lie_bracket(&f, &g).unwrap()).unwrap();
            prop_assert!(a.try_add(&b).unwrap().try_add(&c).unwrap().is_zero());
        }

        #[test]
        fn curl_bracket_closure(f in arb_poly(2, 4, 5), g in arb_poly(2, 4, 5)) {
            let lhs = lie_bracket(&curl2(&f).unwrap(), &curl2(&g).unwrap()).unwrap();
            let fx1 = f.partial(0).unwrap();
            let fx2 = f.partial(1).unwrap();
            let gx1 = g.partial(0).unwrap();
            let gx2 = g.partial(1).unwrap();
            let potential = &(&fx1 * &gx2) - &(&fx2 * &gx1);
            prop_assert_eq!(lhs, curl2(&potential).unwrap());
        }

        #[test]
        fn curl_fields_are_divergence_free(f in arb_poly(2, 6, 6)) {
            prop_assert!(divergence(&curl2(&f).unwrap()).is_zero());
        }

        #[test]
        fn float_eval_matches_exact(
            f in (1usize..=3).prop_flat_map(|d| arb_poly(d, 8, 6)),
            raw in prop::collection::vec(-1000i64..=1000, 3),
        ) {
            let d = f.dim();
            let exact_x: Vec<BigRational> = raw[..d]
                .iter()
                .map(|&n| BigRational::new(BigInt::from(n), BigInt::from(100)))
                .collect();
            let x: Vec<f64> = raw[..d].iter().map(|&n| n as f64 / 100.0).collect();
            let exact = rational_to_f64(&f.eval_exact(&exact_x).unwrap());
            let approx = f.eval(&x).unwrap();
            // relative to the sum of absolute term magnitudes
            let scale: f64 = f.terms().map(|(m, c)| {
                let mut t = rational_to_f64(c).abs();
                for (xi, &e) in x.iter().zip(m.exponents()) { t *= xi.abs().powi(e as i32); }
                t
            }).sum::<f64>().max(1e-300);
            prop_assert!((exact - approx).abs() <= 1e-12 * scale, "{} vs {}", exact, approx);
        }
    }
}

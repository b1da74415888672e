//! Flows of controlled polynomial and residual-network vector fields:
//! exact Lie algebra computations, ensemble controllability ranks, RK4
//! integration with adjoint gradients, training and `L^p` approximation.

// `!(x > 0.0)` on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod approx;
pub mod ensemble;
pub mod family;
pub mod flow;
pub mod liealg;
pub mod linalg;
pub mod named;
pub mod polyvec;
pub mod trainer;

pub use approx::{
    fixed_point_check, lp_error, volume_floor_check, DomainSpec, LpReport, Quadrature, TargetFunction,
    VolumeFloorReport,
};
pub use ensemble::{lie_rank, span_rank, vandermonde_certificate, Ensemble, RankReport};
pub use family::{Activation, ControlFamily, FamilySpec, WeightStructure};
pub use flow::{
    endpoint_vjp, gronwall_check, integrate, integrate_with_jacobian, monotone_1d_check, ControlSchedule,
    FlowOptions, FlowResult, Segment,
};
pub use liealg::{lie_closure, verify_lemma2_closure, ClosureBasis};
pub use polyvec::{curl2, lie_bracket, parse_field, parse_polynomial, PolyVectorField, Polynomial};
pub use trainer::{fit_points, train, Dataset, TrainConfig, TrainReport};

//! Lie closures of polynomial vector-field families on a degree-filtered slice.
//!
//! The closure of a family is infinite-dimensional in general, so every
//! computation here works on the finite slice of fields with component
//! degree at most `degree_cap`, built from brackets nested at most
//! `depth_cap` deep. Linear independence is decided exactly over the
//! rationals with a reduced row-echelon basis.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::named;
use crate::polyvec::{Monomial, PolyError, PolyVectorField, Polynomial};

pub const DEFAULT_DEGREE_CAP: u32 = 8;
pub const DEFAULT_DEPTH_CAP: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LieError {
    #[error("generator list is empty")]
    NoGenerators,
    #[error("caps must be at least 1")]
    BadCaps,
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Coordinate of a field in the monomial-field basis: `(monomial, component)`.
///
/// Ordered by monomial (graded-lex) first; among equal monomials the lower
/// component index ranks higher, so the leading key of a field is its
/// largest monomial in its first component that carries it.
#[derive(Clone, Debug, PartialEq, Eq)]
struct FieldKey {
    monomial: Monomial,
    component: usize,
}

impl Ord for FieldKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.monomial
            .cmp(&other.monomial)
            .then_with(|| other.component.cmp(&self.component))
    }
}

impl PartialOrd for FieldKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

type SparseVec = BTreeMap<FieldKey, BigRational>;

fn to_sparse(f: &PolyVectorField) -> SparseVec {
    let mut v = SparseVec::new();
    for (component, p) in f.components().iter().enumerate() {
        for (m, c) in p.terms() {
            v.insert(FieldKey { monomial: m.clone(), component }, c.clone());
        }
    }
    v
}

fn from_sparse(dim: usize, v: &SparseVec) -> PolyVectorField {
    let mut buckets: Vec<Vec<(BigRational, Monomial)>> = vec![Vec::new(); dim];
    for (k, c) in v {
        buckets[k.component].push((c.clone(), k.monomial.clone()));
    }
    PolyVectorField::new(
        buckets
            .into_iter()
            .map(|terms| Polynomial::from_terms(dim, terms).expect("keys share dimension"))
            .collect(),
    )
    .expect("components share dimension")
}

/// `v -= c * row`, dropping cancelled entries.
fn axpy(v: &mut SparseVec, c: &BigRational, row: &SparseVec) {
    for (k, r) in row {
        let delta = c * r;
        match v.get_mut(k) {
            Some(x) => {
                *x -= delta;
                if x.is_zero() {
                    v.remove(k);
                }
            }
            None => {
                v.insert(k.clone(), -delta);
            }
        }
    }
}

/// Fully reduced echelon form: each row has leading coefficient 1 at its
/// pivot and every other row is zero at that pivot.
#[derive(Clone, Debug, Default)]
struct Echelon {
    rows: Vec<(FieldKey, SparseVec)>,
}

impl Echelon {
    /// Returns the remainder after elimination and the coefficient on each row.
    fn reduce(&self, mut v: SparseVec) -> (SparseVec, Vec<BigRational>) {
        let mut coords = Vec::with_capacity(self.rows.len());
        for (pivot, row) in &self.rows {
            match v.get(pivot).cloned() {
                Some(c) => {
                    axpy(&mut v, &c, row);
                    coords.push(c);
                }
                None => coords.push(BigRational::zero()),
            }
        }
        (v, coords)
    }

    fn insert(&mut self, v: SparseVec) -> bool {
        let (mut r, _) = self.reduce(v);
        let Some((pivot, lead)) = r.iter().next_back().map(|(k, c)| (k.clone(), c.clone())) else {
            return false;
        };
        if !lead.is_one() {
            let inv = lead.recip();
            for c in r.values_mut() {
                *c *= &inv;
            }
        }
        for (_, row) in &mut self.rows {
            if let Some(c) = row.get(&pivot).cloned() {
                axpy(row, &c, &r);
            }
        }
        let at = self.rows.partition_point(|(p, _)| *p > pivot);
        self.rows.insert(at, (pivot, r));
        true
    }
}

/// Result of a membership query against a [`ClosureBasis`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Membership {
    /// Coordinates on [`ClosureBasis::basis`] reconstructing the field exactly.
    Member(Vec<BigRational>),
    NotMember,
    /// The field's degree exceeds the closure's degree cap.
    Indeterminate,
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member(_))
    }
}

/// A finite slice of the Lie closure of a generator family.
#[derive(Clone, Debug)]
pub struct ClosureBasis {
    dimension: usize,
    degree_cap: u32,
    depth_cap: u32,
    generators: Vec<PolyVectorField>,
    echelon: Echelon,
    /// Raw accepted fields (generators and brackets) with their nesting depth.
    spanning: Vec<(PolyVectorField, u32)>,
    rounds: u32,
    saturated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosureSummary {
    pub dimension: usize,
    pub degree_cap: u32,
    pub depth_cap: u32,
    pub basis_size: usize,
    pub generator_count: usize,
    pub rounds: u32,
    pub saturated: bool,
}

impl ClosureBasis {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn degree_cap(&self) -> u32 {
        self.degree_cap
    }

    pub fn depth_cap(&self) -> u32 {
        self.depth_cap
    }

    pub fn generators(&self) -> &[PolyVectorField] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.echelon.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.echelon.rows.is_empty()
    }

    /// Basis in reduced echelon form, ordered by descending pivot.
    pub fn basis(&self) -> Vec<PolyVectorField> {
        self.echelon
            .rows
            .iter()
            .map(|(_, row)| from_sparse(self.dimension, row))
            .collect()
    }

    /// The generators and brackets that were found independent, in discovery
    /// order, each with its bracket nesting depth (generators have depth 0).
    pub fn spanning_brackets(&self) -> &[(PolyVectorField, u32)] {
        &self.spanning
    }

    /// Number of bracketing rounds that were run.
    pub fn rounds(&self) -> u32 {
        self.rounds
    }

    /// True when the last round produced nothing new, i.e. the slice is
    /// closed under brackets that stay within the degree cap.
    pub fn saturated(&self) -> bool {
        self.saturated
    }

    pub fn summary(&self) -> ClosureSummary {
        ClosureSummary {
            dimension: self.dimension,
            degree_cap: self.degree_cap,
            depth_cap: self.depth_cap,
            basis_size: self.len(),
            generator_count: self.generators.len(),
            rounds: self.rounds,
            saturated: self.saturated,
        }
    }

    /// Canonical text form, one field per line.
    pub fn serialize_basis(&self) -> String {
        self.basis().iter().map(|f| format!("{f}\n")).collect()
    }

    pub fn contains(&self, f: &PolyVectorField) -> Result<Membership, LieError> {
        if f.dim() != self.dimension {
            return Err(PolyError::DimensionMismatch { left: self.dimension, right: f.dim() }.into());
        }
        if f.degree() > i64::from(self.degree_cap) {
            return Ok(Membership::Indeterminate);
        }
        let (rem, coords) = self.echelon.reduce(to_sparse(f));
        Ok(if rem.is_empty() { Membership::Member(coords) } else { Membership::NotMember })
    }

    /// `sum_k coords[k] * basis[k]`.
    pub fn reconstruct(&self, coords: &[BigRational]) -> PolyVectorField {
        let mut acc = SparseVec::new();
        for (c, (_, row)) in coords.iter().zip(&self.echelon.rows) {
            if !c.is_zero() {
                axpy(&mut acc, &-c.clone(), row);
            }
        }
        from_sparse(self.dimension, &acc)
    }
}

/// Builds the degree- and depth-capped Lie closure of `generators`.
///
/// Each round brackets the fields accepted in the previous round against
/// every field accepted so far; over-cap and dependent results are dropped.
pub fn lie_closure(
    generators: &[PolyVectorField],
    degree_cap: u32,
    depth_cap: u32,
) -> Result<ClosureBasis, LieError> {
    let first = generators.first().ok_or(LieError::NoGenerators)?;
    if degree_cap < 1 || depth_cap < 1 {
        return Err(LieError::BadCaps);
    }
    let dimension = first.dim();
    for g in generators {
        if g.dim() != dimension {
            return Err(PolyError::DimensionMismatch { left: dimension, right: g.dim() }.into());
        }
    }
    let cap = i64::from(degree_cap);
    let mut echelon = Echelon::default();
    let mut spanning: Vec<(PolyVectorField, u32)> = Vec::new();
    let mut frontier: Vec<usize> = Vec::new();
    for g in generators {
        if g.degree() <= cap && echelon.insert(to_sparse(g)) {
            frontier.push(spanning.len());
            spanning.push((g.clone(), 0));
        }
    }

    let mut rounds = 0;
    while !frontier.is_empty() && rounds < depth_cap {
        rounds += 1;
        let known = spanning.len();
        let mut next = Vec::new();
        for (fi, &i) in frontier.iter().enumerate() {
            for j in 0..known {
                // pairs inside the frontier are bracketed once
                if let Ok(pos) = frontier.binary_search(&j) {
                    if pos <= fi {
                        continue;
                    }
                }
                let b = spanning[i].0.lie_bracket(&spanning[j].0)?;
                if b.is_zero() || b.degree() > cap {
                    continue;
                }
                if echelon.insert(to_sparse(&b)) {
                    next.push(spanning.len());
                    let depth = spanning[i].1.max(spanning[j].1) + 1;
                    spanning.push((b, depth));
                }
            }
        }
        frontier = next;
    }

    Ok(ClosureBasis {
        dimension,
        degree_cap,
        depth_cap,
        generators: generators.to_vec(),
        echelon,
        spanning,
        rounds,
        saturated: frontier.is_empty(),
    })
}

/// Checks that every `(x1^i x2^j, 0)` and `(0, x1^i x2^j)` with
/// `2 <= i + j <= degree_cap` lies in the capped closure of `generators`.
pub fn axis_monomials_reachable(
    generators: &[PolyVectorField],
    degree_cap: u32,
) -> Result<bool, LieError> {
    let depth_cap = DEFAULT_DEPTH_CAP.max(2 * degree_cap);
    let closure = lie_closure(generators, degree_cap, depth_cap)?;
    for total in 2..=degree_cap {
        for i in 0..=total {
            let p = Polynomial::term(1, &[i, total - i]);
            for axis in 0..2 {
                let f = PolyVectorField::axis(p.clone(), axis)?;
                if !closure.contains(&f)?.is_member() {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Closure check for the origin-pinned planar system: all axis-aligned
/// monomial fields of degree 2 through `degree_cap` are brackets of its
/// six basis fields.
pub fn verify_lemma2_closure(degree_cap: u32) -> bool {
    axis_monomials_reachable(&named::origin_pinned_fields(), degree_cap)
        .expect("static generators are well formed")
}

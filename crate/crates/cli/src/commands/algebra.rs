//! `bracket`, `closure` and `rank`.

use clap::{Args, ValueEnum};
use flowlab::ensemble::{lie_rank, span_rank, vandermonde_certificate, DEFAULT_SVD_REL_TOL};
use flowlab::family::FamilySpec;
use flowlab::liealg::{lie_closure, Membership};
use serde::{Deserialize, Serialize};

use super::{build_family, named, parse_field_arg, EnsembleSpec};
use crate::config::{Outcome, Resolved};
use crate::error::CliError;

#[derive(Args, Debug, Clone, Default)]
pub struct BracketArgs {
    /// First field, e.g. "(x1^2, -x2)" or "v:x1^2*x2^2" for a planar curl field
    pub f: Option<String>,
    /// Second field
    pub g: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BracketSettings {
    pub f: String,
    pub g: String,
}

#[derive(Serialize)]
struct BracketResult {
    f: String,
    g: String,
    bracket: String,
    dimension: usize,
}

/// `[f, g] = Dg f - Df g`, printed in canonical form.
pub fn bracket(args: &BracketArgs, mut cfg: Resolved<BracketSettings>) -> Result<Outcome, CliError> {
    if let Some(f) = &args.f {
        cfg.settings.f = f.clone();
    }
    if let Some(g) = &args.g {
        cfg.settings.g = g.clone();
    }
    if cfg.settings.f.trim().is_empty() || cfg.settings.g.trim().is_empty() {
        return Err(CliError::validation("two fields are required"));
    }
    let f = parse_field_arg("field f", &cfg.settings.f)?;
    let g = parse_field_arg("field g", &cfg.settings.g)?;
    let b = f.lie_bracket(&g)?;
    let result = BracketResult { f: f.to_string(), g: g.to_string(), bracket: b.to_string(), dimension: b.dim() };
    let mut out = Outcome::new(&cfg, &result);
    out.text = Some(format!("{b}\n"));
    Ok(out)
}

#[derive(Args, Debug, Clone, Default)]
pub struct ClosureArgs {
    /// Generator field (repeatable); replaces the configured generators
    #[arg(long = "generator", value_name = "FIELD")]
    pub generators: Vec<String>,
    /// Largest component degree kept [default: 5]
    #[arg(long)]
    pub degree_cap: Option<u32>,
    /// Bracketing rounds [default: 8]
    #[arg(long)]
    pub depth_cap: Option<u32>,
    /// Field to test for membership (repeatable)
    #[arg(long = "member", value_name = "FIELD")]
    pub members: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClosureSettings {
    pub generators: Vec<String>,
    pub degree_cap: u32,
    pub depth_cap: u32,
    pub members: Vec<String>,
}

impl Default for ClosureSettings {
    fn default() -> Self {
        Self {
            generators: vec!["v:x2".into(), "v:x1".into(), "v:x1^2*x2^2".into()],
            degree_cap: 5,
            depth_cap: 8,
            members: Vec::new(),
        }
    }
}

#[derive(Serialize)]
struct MemberResult {
    field: String,
    /// `null` when the field is above the degree cap.
    member: Option<bool>,
}

#[derive(Serialize)]
struct SpanningField {
    field: String,
    depth: u32,
}

#[derive(Serialize)]
struct ClosureResult {
    summary: flowlab::liealg::ClosureSummary,
    basis: Vec<String>,
    spanning: Vec<SpanningField>,
    membership: Vec<MemberResult>,
}

pub fn closure(args: &ClosureArgs, mut cfg: Resolved<ClosureSettings>) -> Result<Outcome, CliError> {
    let s = &mut cfg.settings;
    if !args.generators.is_empty() {
        s.generators = args.generators.clone();
    }
    if !args.members.is_empty() {
        s.members = args.members.clone();
    }
    s.degree_cap = args.degree_cap.unwrap_or(s.degree_cap);
    s.depth_cap = args.depth_cap.unwrap_or(s.depth_cap);
    let gens = s
        .generators
        .iter()
        .enumerate()
        .map(|(i, g)| parse_field_arg(&format!("generator {}", i + 1), g))
        .collect::<Result<Vec<_>, _>>()?;
    let members = s
        .members
        .iter()
        .enumerate()
        .map(|(i, g)| parse_field_arg(&format!("member {}", i + 1), g))
        .collect::<Result<Vec<_>, _>>()?;
    log::info!("closing {} generators at degree {} depth {}", gens.len(), s.degree_cap, s.depth_cap);
    let basis = lie_closure(&gens, s.degree_cap, s.depth_cap)?;
    let membership = members
        .iter()
        .map(|m| {
            let member = match basis.contains(m)? {
                Membership::Member(_) => Some(true),
                Membership::NotMember => Some(false),
                Membership::Indeterminate => None,
            };
            Ok(MemberResult { field: m.to_string(), member })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let result = ClosureResult {
        summary: basis.summary(),
        basis: basis.basis().iter().map(ToString::to_string).collect(),
        spanning: basis
            .spanning_brackets()
            .iter()
            .map(|(f, depth)| SpanningField { field: f.to_string(), depth: *depth })
            .collect(),
        membership,
    };
    Ok(Outcome::new(&cfg, &result))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum RankMethodChoice {
    /// Span of the family itself (sampled parameters for networks)
    Span,
    /// Span of the capped Lie closure (polynomial families)
    Lie,
    /// Explicit curl-field certificate (planar ensembles)
    Vandermonde,
}

#[derive(Args, Debug, Clone, Default)]
pub struct RankArgs {
    /// Number of random ensemble points (replaces the configured ensemble)
    #[arg(long)]
    pub n: Option<usize>,
    /// Rank computation [default: lie]
    #[arg(long, value_enum)]
    pub method: Option<RankMethodChoice>,
    /// Degree cap of the Lie closure [default: 5]
    #[arg(long)]
    pub degree_cap: Option<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RankSettings {
    pub family: FamilySpec,
    pub ensemble: EnsembleSpec,
    pub method: RankMethodChoice,
    pub degree_cap: u32,
    pub depth_cap: u32,
    /// Parameter draws for the sampled span of a network family.
    pub num_samples: usize,
    pub svd_rel_tol: f64,
    /// Exit with status 3 unless the rank is full.
    pub require_full_rank: bool,
}

impl Default for RankSettings {
    fn default() -> Self {
        Self {
            family: named("volume_preserving"),
            ensemble: EnsembleSpec::default(),
            method: RankMethodChoice::Lie,
            degree_cap: 5,
            depth_cap: 8,
            num_samples: 64,
            svd_rel_tol: DEFAULT_SVD_REL_TOL,
            require_full_rank: false,
        }
    }
}

#[derive(Serialize)]
struct RankResult {
    points: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rank: Option<flowlab::ensemble::RankReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<flowlab::ensemble::VandermondeCertificate>,
    full_rank: bool,
}

pub fn rank(args: &RankArgs, mut cfg: Resolved<RankSettings>) -> Result<Outcome, CliError> {
    let s = &mut cfg.settings;
    if let Some(n) = args.n {
        s.ensemble = match s.ensemble {
            EnsembleSpec::Random { lo, hi, .. } => EnsembleSpec::Random { n, lo, hi },
            _ => EnsembleSpec::Random { n, lo: -1.0, hi: 1.0 },
        };
    }
    s.method = args.method.unwrap_or(s.method);
    s.degree_cap = args.degree_cap.unwrap_or(s.degree_cap);
    if !(s.svd_rel_tol > 0.0 && s.svd_rel_tol < 1.0) {
        return Err(CliError::validation("svd_rel_tol must lie in (0, 1)"));
    }
    let family = build_family(&s.family)?;
    let x = s.ensemble.build(family.dim(), cfg.seed)?;
    let (rank, certificate, full) = match s.method {
        RankMethodChoice::Span => {
            if s.num_samples == 0 {
                return Err(CliError::validation("num_samples must be positive"));
            }
            let r = span_rank(&family, &x, cfg.seed, s.num_samples, s.svd_rel_tol)?;
            let full = r.is_full();
            (Some(r), None, full)
        }
        RankMethodChoice::Lie => {
            let r = lie_rank(&family, &x, s.degree_cap, s.depth_cap, s.svd_rel_tol)?;
            let full = r.is_full();
            (Some(r), None, full)
        }
        RankMethodChoice::Vandermonde => {
            let c = vandermonde_certificate(&x, cfg.seed)?;
            let full = c.invertible;
            (None, Some(c), full)
        }
    };
    let require = s.require_full_rank;
    let result = RankResult { points: x.points().to_vec(), rank, certificate, full_rank: full };
    Ok(Outcome::new(&cfg, &result).fail_if(require && !full, "rank is not full"))
}

use std::fmt;

use flowlab::approx::ApproxError;
use flowlab::ensemble::EnsembleError;
use flowlab::family::FamilyError;
use flowlab::flow::FlowError;
use flowlab::liealg::LieError;
use flowlab::polyvec::PolyError;
use flowlab::trainer::TrainError;

/// Exit status for invalid input (bad flags, config or data).
pub const EXIT_VALIDATION: u8 = 2;
/// Exit status when a run fails numerically: blow-up, or no convergence
/// where convergence was required.
pub const EXIT_NUMERICAL: u8 = 3;
/// Exit status for I/O failures (unreadable config, unwritable output).
pub const EXIT_IO: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Validation,
    Numerical,
    Io,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { kind: Kind::Validation, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { kind: Kind::Numerical, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { kind: Kind::Io, message: message.into() }
    }

    /// Prefixes the message, keeping the kind.
    pub fn context(self, what: impl fmt::Display) -> Self {
        Self { kind: self.kind, message: format!("{what}: {}", self.message) }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            Kind::Validation => EXIT_VALIDATION,
            Kind::Numerical => EXIT_NUMERICAL,
            Kind::Io => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn flow_kind(e: &FlowError) -> Kind {
    match e {
        FlowError::BlowUp { .. } => Kind::Numerical,
        _ => Kind::Validation,
    }
}

fn approx_kind(e: &ApproxError) -> Kind {
    match e {
        ApproxError::Flow(f) => flow_kind(f),
        _ => Kind::Validation,
    }
}

fn ensemble_kind(e: &EnsembleError) -> Kind {
    match e {
        EnsembleError::CertificateSearch(_) => Kind::Numerical,
        _ => Kind::Validation,
    }
}

fn train_kind(e: &TrainError) -> Kind {
    match e {
        TrainError::InitBlowUp { .. } => Kind::Numerical,
        TrainError::Stage { source, .. } => train_kind(source),
        TrainError::Flow(f) => flow_kind(f),
        TrainError::Approx(a) => approx_kind(a),
        TrainError::Ensemble(en) => ensemble_kind(en),
        _ => Kind::Validation,
    }
}

macro_rules! classify {
    ($($ty:ty => $kind:expr),* $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                #[allow(clippy::redundant_closure_call)]
                let kind = ($kind)(&e);
                Self { kind, message: e.to_string() }
            }
        })*
    };
}

classify! {
    PolyError => |_: &PolyError| Kind::Validation,
    LieError => |_: &LieError| Kind::Validation,
    FamilyError => |_: &FamilyError| Kind::Validation,
    FlowError => flow_kind,
    ApproxError => approx_kind,
    EnsembleError => ensemble_kind,
    TrainError => train_kind,
}

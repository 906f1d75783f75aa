use std::fmt;

use liegerm::bch::BchError;
use liegerm::germ::GermError;
use liegerm::lie::LieError;
use liegerm::local_group::GroupError;
use liegerm::matrix::MatError;
use liegerm::near_fit::FitError;
use liegerm::olver::OlverError;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Domain,
}

/// Error tagged `module/reason`.
#[derive(Debug, Clone)]
pub struct CliError {
    pub tag: String,
    pub message: String,
    pub kind: Kind,
}

impl CliError {
    pub fn usage(tag: &str, message: impl Into<String>) -> Self {
        Self { tag: format!("cli/{tag}"), message: message.into(), kind: Kind::Usage }
    }

    fn new(module: &str, reason: &str, kind: Kind, message: impl fmt::Display) -> Self {
        Self { tag: format!("{module}/{reason}"), message: message.to_string(), kind }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Usage => EXIT_USAGE,
            Kind::Domain => EXIT_DOMAIN,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.tag, self.message)
    }
}

impl From<MatError> for CliError {
    fn from(e: MatError) -> Self {
        let (reason, kind) = match e {
            MatError::NonFinite => ("non-finite", Kind::Domain),
            MatError::DimensionMismatch(..) => ("dimension-mismatch", Kind::Usage),
            MatError::UnsupportedDim(_) => ("unsupported-dim", Kind::Usage),
            MatError::Singular => ("singular", Kind::Domain),
            MatError::LogDomain(_) => ("log-domain", Kind::Domain),
            MatError::SqrtDiverged => ("sqrt-diverged", Kind::Domain),
        };
        Self::new("mat-core", reason, kind, e)
    }
}

impl From<LieError> for CliError {
    fn from(e: LieError) -> Self {
        let (reason, kind) = match &e {
            LieError::Matrix(m) => return m.clone().into(),
            LieError::DimensionMismatch { .. } => ("dimension-mismatch", Kind::Usage),
            LieError::SingularG(_) => ("singular-g", Kind::Domain),
            LieError::Domain(_) => ("domain", Kind::Domain),
            LieError::Parse(_) => ("bracket-parse", Kind::Usage),
            LieError::UnknownBuiltin(_) => ("unknown-bracket", Kind::Usage),
        };
        Self::new("lie-core", reason, kind, e)
    }
}

impl From<BchError> for CliError {
    fn from(e: BchError) -> Self {
        let (reason, kind) = match &e {
            BchError::Lie(l) => return l.clone().into(),
            BchError::Matrix(m) => return m.clone().into(),
            BchError::OrderOutOfRange(_) => ("order-out-of-range", Kind::Usage),
            BchError::InvalidNodes(_) => ("invalid-nodes", Kind::Usage),
            BchError::FDomain(_) => ("f-domain", Kind::Domain),
            BchError::QuadratureDivergence(_) => ("quadrature-divergence", Kind::Domain),
            BchError::Domain(_) => ("domain", Kind::Domain),
            BchError::NotAdmissible(_) => ("not-lie-admissible", Kind::Usage),
        };
        Self::new("bch-engine", reason, kind, e)
    }
}

impl From<GroupError> for CliError {
    fn from(e: GroupError) -> Self {
        let (reason, kind) = match &e {
            GroupError::Bch(b) => return b.clone().into(),
            GroupError::Lie(l) => return l.clone().into(),
            GroupError::Matrix(m) => return m.clone().into(),
            GroupError::DomainEscape(_) => ("domain-escape", Kind::Domain),
            GroupError::Dimension { .. } => ("dimension-mismatch", Kind::Usage),
            GroupError::InvalidSpec(_) => ("invalid-spec", Kind::Usage),
            GroupError::ArityOutOfRange(_) => ("arity-out-of-range", Kind::Usage),
            GroupError::Table(_) => ("table", Kind::Usage),
        };
        Self::new("local-group", reason, kind, e)
    }
}

impl From<OlverError> for CliError {
    fn from(e: OlverError) -> Self {
        let (reason, kind) = match &e {
            OlverError::Group(g) => return g.clone().into(),
            OlverError::InTree { source, .. } => {
                let inner: CliError = (**source).clone().into();
                return Self { message: e.to_string(), ..inner };
            }
            OlverError::PunctureOnPath { .. } => ("puncture-on-path", Kind::Domain),
            OlverError::NonIntegerWinding(_) => ("non-integer-winding", Kind::Domain),
            OlverError::OutOfRadius(..) => ("out-of-radius", Kind::Domain),
            OlverError::Degenerate => ("degenerate-path", Kind::Usage),
        };
        Self::new("olver-cover", reason, kind, e)
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        let (reason, kind) = match &e {
            FitError::Group(g) => return g.clone().into(),
            FitError::Step { .. } => ("step-out-of-range", Kind::Usage),
            FitError::Ladder(_) => ("degenerate-ladder", Kind::Usage),
            FitError::Domain(_) => ("domain-escape", Kind::Domain),
        };
        Self::new("near-fit", reason, kind, e)
    }
}

impl From<GermError> for CliError {
    fn from(e: GermError) -> Self {
        let (reason, kind) = match &e {
            GermError::Parse { .. } => ("parse", Kind::Usage),
            GermError::InconclusiveDepth => ("inconclusive-depth", Kind::Domain),
            GermError::Domain(_) => ("domain", Kind::Domain),
            GermError::Ladder(_) => ("ladder", Kind::Usage),
            GermError::Site(_) => ("site-mismatch", Kind::Usage),
            GermError::ExponentOverflow { .. } => ("exponent-overflow", Kind::Domain),
            GermError::NotMonotone(_) => ("not-monotone", Kind::Domain),
            GermError::Steps(_) => ("inconsistent-steps", Kind::Usage),
            GermError::Parameter(_) => ("parameter", Kind::Usage),
        };
        Self::new("germ-lab", reason, kind, e)
    }
}

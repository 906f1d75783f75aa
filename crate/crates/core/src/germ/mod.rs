//! Germs at 0 or ∞: layered evaluation, eventual comparison, Hardy dominating
//! series and piecewise-affine undercuts.

mod expr;
mod hardy;
mod layered;
mod undercut;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use expr::GermExpr;
pub use hardy::{
    hardy_dominator, verify_domination, DominationReport, HardySeries, LinkViolation, LINK_TOL, MAX_TERMS,
};
pub use layered::{Layered, LN_LIMIT, PAYLOAD_LIMIT};
pub use undercut::{pl_undercut, step_value, PlUndercut, StepKnot};

pub const MIN_LADDER: usize = 6;
/// Rungs nearest the site that decide a comparison.
pub const DECIDING_RUNGS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GermError {
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("inconclusive-depth: value needs more than two logarithm layers")]
    InconclusiveDepth,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid ladder: {0}")]
    Ladder(String),
    #[error("site mismatch: {0}")]
    Site(String),
    #[error("exponent-overflow at j = {j}")]
    ExponentOverflow { j: usize },
    #[error("not monotone: {0}")]
    NotMonotone(String),
    #[error("inconsistent step data: {0}")]
    Steps(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Site {
    AtZero,
    AtInfinity,
}

impl Site {
    pub fn flip(self) -> Self {
        match self {
            Self::AtZero => Self::AtInfinity,
            Self::AtInfinity => Self::AtZero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Germ {
    pub expr: GermExpr,
    pub site: Site,
    #[serde(default)]
    pub monotone: bool,
}

impl Germ {
    pub fn parse(text: &str, site: Site) -> Result<Self, GermError> {
        Ok(Self { expr: GermExpr::parse(text)?, site, monotone: false })
    }

    pub fn monotone(mut self) -> Self {
        self.monotone = true;
        self
    }

    /// Positive layered value at `x`.
    pub fn eval(&self, x: f64) -> Result<Layered, GermError> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(GermError::Domain(format!("sample point {x} is not a positive finite real")));
        }
        self.eval_layered(&Layered::from_f64(x)?)
    }

    pub fn eval_layered(&self, x: &Layered) -> Result<Layered, GermError> {
        let v = self.expr.eval(x)?;
        if v.signum() <= 0 {
            return Err(GermError::Domain(format!("germ {} is not positive at {x}", self.expr)));
        }
        Ok(v)
    }

    /// Checks positivity, and for declared-monotone germs strict increase in `x`
    /// plus, at 0, decay along the ladder.
    pub fn verify(&self, ladder: &[f64]) -> Result<(), GermError> {
        check_ladder(ladder, self.site)?;
        let vals = ladder.iter().map(|&x| self.eval(x)).collect::<Result<Vec<_>, _>>()?;
        if !self.monotone {
            return Ok(());
        }
        // ladder runs toward the site, so x decreases at 0 and increases at ∞
        let want = match self.site {
            Site::AtZero => Ordering::Greater,
            Site::AtInfinity => Ordering::Less,
        };
        for (i, w) in vals.windows(2).enumerate() {
            if w[0].total_cmp(&w[1]) != want {
                return Err(GermError::NotMonotone(format!(
                    "{} between rungs {} and {}",
                    self.expr,
                    ladder[i],
                    ladder[i + 1]
                )));
            }
        }
        if self.site == Site::AtZero && vals[vals.len() - 1].total_cmp(&Layered::ONE) != Ordering::Less {
            return Err(GermError::NotMonotone(format!("{} does not decay toward 0 on the ladder", self.expr)));
        }
        Ok(())
    }
}

/// `10^{−1}, …, 10^{−8}`.
pub fn default_ladder(site: Site) -> Vec<f64> {
    (1..=8)
        .map(|k| match site {
            Site::AtZero => 10f64.powi(-k),
            Site::AtInfinity => 10f64.powi(k),
        })
        .collect()
}

/// Geometric ladder of `n` rungs from `start` to `end` inclusive.
pub fn geometric_ladder(start: f64, end: f64, n: usize) -> Vec<f64> {
    let ratio = (end / start).ln() / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { end } else { start * (ratio * i as f64).exp() }).collect()
}

pub fn check_ladder(ladder: &[f64], site: Site) -> Result<(), GermError> {
    if ladder.len() < MIN_LADDER {
        return Err(GermError::Ladder(format!("need at least {MIN_LADDER} rungs, got {}", ladder.len())));
    }
    if ladder.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(GermError::Ladder("rungs must be positive and finite".into()));
    }
    let ok = match site {
        Site::AtZero => ladder.windows(2).all(|w| w[1] < w[0]),
        Site::AtInfinity => ladder.windows(2).all(|w| w[1] > w[0]),
    };
    if !ok {
        return Err(GermError::Ladder(format!("rungs must move strictly toward the site ({site:?})")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    FPrecG,
    GPrecF,
    Inconclusive,
}

impl Verdict {
    pub fn flipped(self) -> Self {
        match self {
            Self::FPrecG => Self::GPrecF,
            Self::GPrecF => Self::FPrecG,
            Self::Inconclusive => Self::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub ladder: Vec<f64>,
    /// `ln g − ln f` at each rung evaluated so far.
    pub gaps: Vec<Layered>,
}

/// Eventual comparison along `ladder` via the gap `ln g − ln f`.
pub fn compare_germs(f: &Germ, g: &Germ, ladder: &[f64]) -> Result<Comparison, GermError> {
    if f.site != g.site {
        return Err(GermError::Site(format!("{:?} vs {:?}", f.site, g.site)));
    }
    check_ladder(ladder, f.site)?;
    let mut gaps = Vec::with_capacity(ladder.len());
    let inconclusive = |reason: String, gaps: Vec<Layered>| Comparison {
        verdict: Verdict::Inconclusive,
        reason: Some(reason),
        ladder: ladder.to_vec(),
        gaps,
    };
    for &x in ladder {
        let gap = (|| g.eval(x)?.ln()?.sub(&f.eval(x)?.ln()?))();
        match gap {
            Ok(v) => gaps.push(v),
            Err(e) => return Ok(inconclusive(format!("at x = {x:e}: {e}"), gaps)),
        }
    }
    let tail = &gaps[gaps.len() - DECIDING_RUNGS..];
    let grows = |sign: i8, order: Ordering| {
        tail.iter().all(|v| v.signum() == sign) && tail.windows(2).all(|w| w[1].total_cmp(&w[0]) == order)
    };
    let (verdict, reason) = if grows(1, Ordering::Greater) {
        (Verdict::FPrecG, None)
    } else if grows(-1, Ordering::Less) {
        (Verdict::GPrecF, None)
    } else {
        (
            Verdict::Inconclusive,
            Some(format!("gap is not of one sign and growing over the last {DECIDING_RUNGS} rungs")),
        )
    };
    Ok(Comparison { verdict, reason, ladder: ladder.to_vec(), gaps })
}

/// The germ `x ↦ 1/f(1/x)` at the opposite site.
pub fn invert_site(f: &Germ) -> Germ {
    let e = GermExpr::Recip(Box::new(GermExpr::Compose(
        Box::new(f.expr.clone()),
        Box::new(GermExpr::Recip(Box::new(GermExpr::Var))),
    )));
    Germ { expr: e.simplify(), site: f.site.flip(), monotone: f.monotone }
}

/// `exp(−1/x^r)`.
pub fn flat_exp(r: f64) -> GermExpr {
    GermExpr::parse(&format!("(exp (neg (pow (recip x) {r})))")).expect("well-formed template")
}

//! Candidate local group structures `(ψ, ν)` on a ball around `0`, their
//! deviations from the group axioms and k-fold association defects.

mod assoc;
mod deviation;
mod table;

pub use assoc::{assoc_defect, catalan, enumerate_associations, AssocDefect, AssocTree, AssocValue};
pub use deviation::{deviations, is_s_almost, lattice, DeviationReport, GridSpec};
pub use table::Table;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bch::{self, BchError};
use crate::lie::{norm, Bracket, LieError};
use crate::matrix::{MatError, Matrix};

/// Relative slack on the ball radius for domain checks.
const RADIUS_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("domain escape: {0}")]
    DomainEscape(String),
    #[error("dimension mismatch: group has dim {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid group spec: {0}")]
    InvalidSpec(String),
    #[error("p = {0} out of range 2..=8")]
    ArityOutOfRange(usize),
    #[error("table: {0}")]
    Table(String),
    #[error(transparent)]
    Bch(#[from] BchError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Matrix(#[from] MatError),
}

fn fmt_point(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|a| format!("{a:.6e}")).collect();
    format!("({})", parts.join(", "))
}

/// Product and inverse on the closed ball of radius `radius()`.
pub trait LocalGroup: Sync {
    fn dim(&self) -> usize;
    fn radius(&self) -> f64;
    /// Product without domain checks.
    fn psi_raw(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>, GroupError>;
    /// Inverse without domain checks.
    fn nu_raw(&self, x: &[f64]) -> Result<Vec<f64>, GroupError>;

    fn check_point(&self, v: &[f64], what: &str) -> Result<(), GroupError> {
        if v.len() != self.dim() {
            return Err(GroupError::Dimension { expected: self.dim(), got: v.len() });
        }
        let r = self.radius();
        if !(norm(v) <= r * (1.0 + RADIUS_SLACK)) {
            return Err(GroupError::DomainEscape(format!(
                "{what} = {} has norm {:.6e} > r = {r}",
                fmt_point(v),
                norm(v)
            )));
        }
        Ok(())
    }

    fn psi(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>, GroupError> {
        self.check_point(x, "x")?;
        self.check_point(y, "y")?;
        self.psi_raw(x, y)
    }

    fn nu(&self, x: &[f64]) -> Result<Vec<f64>, GroupError> {
        self.check_point(x, "x")?;
        self.nu_raw(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BchEvaluator {
    Integral { nodes: usize },
    Series { order: usize },
}

impl Default for BchEvaluator {
    fn default() -> Self {
        Self::Integral { nodes: 16 }
    }
}

/// Matrix Lie algebras whose basis reproduces the built-in brackets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixAlgebra {
    So3,
    Sl2,
    Heisenberg,
    Affine1,
}

impl MatrixAlgebra {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "so3" => Some(Self::So3),
            "sl2" => Some(Self::Sl2),
            "heisenberg" => Some(Self::Heisenberg),
            "affine1" => Some(Self::Affine1),
            _ => None,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Self::So3 | Self::Sl2 | Self::Heisenberg => 3,
            Self::Affine1 => 2,
        }
    }

    pub fn bracket(self) -> Bracket {
        match self {
            Self::So3 => Bracket::so3(),
            Self::Sl2 => Bracket::sl2(),
            Self::Heisenberg => Bracket::heisenberg(),
            Self::Affine1 => Bracket::affine1(),
        }
    }

    pub fn basis(self) -> Vec<Matrix> {
        let unit = |n: usize, entries: &[(usize, usize, f64)]| {
            let mut m = Matrix::zeros(n);
            for &(i, j, v) in entries {
                m.set(i, j, v);
            }
            m
        };
        match self {
            // (L_i)_{jk} = −ε_{ijk}
            Self::So3 => vec![
                unit(3, &[(1, 2, -1.0), (2, 1, 1.0)]),
                unit(3, &[(0, 2, 1.0), (2, 0, -1.0)]),
                unit(3, &[(0, 1, -1.0), (1, 0, 1.0)]),
            ],
            Self::Sl2 => vec![unit(2, &[(0, 0, 1.0), (1, 1, -1.0)]), unit(2, &[(0, 1, 1.0)]), unit(2, &[(1, 0, 1.0)])],
            Self::Heisenberg => vec![unit(3, &[(0, 1, 1.0)]), unit(3, &[(1, 2, 1.0)]), unit(3, &[(0, 2, 1.0)])],
            Self::Affine1 => vec![unit(2, &[(0, 0, 1.0)]), unit(2, &[(0, 1, 1.0)])],
        }
    }

    fn embed(self, basis: &[Matrix], v: &[f64]) -> Matrix {
        let n = basis[0].dim();
        Matrix::from_fn(n, |i, j| basis.iter().zip(v).map(|(b, c)| c * b.get(i, j)).sum())
    }

    fn coords(self, basis: &[Matrix], m: &Matrix) -> Result<Vec<f64>, GroupError> {
        let dot = |a: &Matrix, b: &Matrix| a.as_slice().iter().zip(b.as_slice()).map(|(p, q)| p * q).sum::<f64>();
        let gram = Matrix::from_fn(basis.len(), |i, j| dot(&basis[i], &basis[j]));
        let rhs: Vec<f64> = basis.iter().map(|b| dot(b, m)).collect();
        Ok(gram.inverse()?.mul_vec(&rhs))
    }

    fn product(self, x: &[f64], y: &[f64]) -> Result<Vec<f64>, GroupError> {
        let basis = self.basis();
        let g = &self.embed(&basis, x).exp()? * &self.embed(&basis, y).exp()?;
        self.coords(&basis, &g.log()?)
    }

    fn inverse(self, x: &[f64]) -> Result<Vec<f64>, GroupError> {
        let basis = self.basis();
        let g = self.embed(&basis, x).exp()?.inverse()?;
        self.coords(&basis, &g.log()?)
    }
}

/// Named perturbations with closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    /// `ψ += eps·x₁y₁·e₁`
    Quadratic,
    /// `ψ += eps·x₁y₁(x₁ + y₁)·e₁`
    Cubic,
    /// `ψ += eps·x₁y₂·e_n`
    OffDiagonal,
    /// `ν += eps·|x|²·e₁`
    Inverse,
    Zero,
}

impl Perturbation {
    pub const NAMES: [&'static str; 5] = ["quadratic", "cubic", "off_diagonal", "inverse", "zero"];

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "quadratic" => Some(Self::Quadratic),
            "cubic" => Some(Self::Cubic),
            "off_diagonal" | "off-diagonal" => Some(Self::OffDiagonal),
            "inverse" => Some(Self::Inverse),
            "zero" => Some(Self::Zero),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Quadratic => "quadratic",
            Self::Cubic => "cubic",
            Self::OffDiagonal => "off_diagonal",
            Self::Inverse => "inverse",
            Self::Zero => "zero",
        }
    }

    fn psi_term(self, eps: f64, x: &[f64], y: &[f64], out: &mut [f64]) {
        let n = out.len();
        match self {
            Self::Quadratic => out[0] += eps * x[0] * y[0],
            Self::Cubic => out[0] += eps * x[0] * y[0] * (x[0] + y[0]),
            Self::OffDiagonal => out[n - 1] += eps * x[0] * y[1],
            Self::Inverse | Self::Zero => {}
        }
    }

    fn nu_term(self, eps: f64, x: &[f64], out: &mut [f64]) {
        if self == Self::Inverse {
            out[0] += eps * x.iter().map(|a| a * a).sum::<f64>();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Bch {
        bracket: Bracket,
        #[serde(default)]
        evaluator: BchEvaluator,
    },
    MatrixChart {
        algebra: MatrixAlgebra,
    },
    Perturbed {
        base: Box<LocalGroupSpec>,
        eps: f64,
        perturbation: Perturbation,
    },
    Tabulated {
        table: Table,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalGroupSpec {
    pub dim: usize,
    pub radius: f64,
    #[serde(flatten)]
    pub family: Family,
}

impl LocalGroupSpec {
    pub fn bch(bracket: Bracket, radius: f64) -> Result<Self, GroupError> {
        Self { dim: bracket.dim(), radius, family: Family::Bch { bracket, evaluator: BchEvaluator::default() } }
            .validated()
    }

    pub fn bch_with(bracket: Bracket, radius: f64, evaluator: BchEvaluator) -> Result<Self, GroupError> {
        Self { dim: bracket.dim(), radius, family: Family::Bch { bracket, evaluator } }.validated()
    }

    pub fn matrix_chart(algebra: MatrixAlgebra, radius: f64) -> Result<Self, GroupError> {
        Self { dim: algebra.dim(), radius, family: Family::MatrixChart { algebra } }.validated()
    }

    pub fn perturbed(base: LocalGroupSpec, eps: f64, perturbation: Perturbation) -> Result<Self, GroupError> {
        Self {
            dim: base.dim,
            radius: base.radius,
            family: Family::Perturbed { base: Box::new(base), eps, perturbation },
        }
        .validated()
    }

    pub fn tabulated(table: Table) -> Result<Self, GroupError> {
        Self { dim: table.dim, radius: table.radius, family: Family::Tabulated { table } }.validated()
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Bch { .. } => "bch",
            Family::MatrixChart { .. } => "matrix_chart",
            Family::Perturbed { .. } => "perturbed",
            Family::Tabulated { .. } => "tabulated",
        }
    }

    /// Checks dimensions, parameters and the identity at the origin.
    pub fn validated(self) -> Result<Self, GroupError> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(GroupError::InvalidSpec(format!("radius {} must be positive", self.radius)));
        }
        let expect = |d: usize| {
            if d == self.dim {
                Ok(())
            } else {
                Err(GroupError::InvalidSpec(format!("family dimension {d} differs from dim {}", self.dim)))
            }
        };
        match &self.family {
            Family::Bch { bracket, evaluator } => {
                expect(bracket.dim())?;
                match *evaluator {
                    BchEvaluator::Integral { nodes } => {
                        bch::QuadratureSpec::new(nodes, false)?;
                    }
                    BchEvaluator::Series { order } => {
                        if !(1..=bch::series::MAX_ORDER).contains(&order) {
                            return Err(BchError::OrderOutOfRange(order).into());
                        }
                    }
                }
            }
            Family::MatrixChart { algebra } => expect(algebra.dim())?,
            Family::Perturbed { base, eps, perturbation } => {
                expect(base.dim)?;
                if base.radius != self.radius {
                    return Err(GroupError::InvalidSpec("perturbed radius must equal base radius".into()));
                }
                if !eps.is_finite() {
                    return Err(GroupError::InvalidSpec("eps must be finite".into()));
                }
                if *perturbation == Perturbation::OffDiagonal && self.dim < 2 {
                    return Err(GroupError::InvalidSpec("off_diagonal needs dim >= 2".into()));
                }
            }
            Family::Tabulated { table } => {
                expect(table.dim)?;
                table.check()?;
                if table.radius != self.radius {
                    return Err(GroupError::InvalidSpec("tabulated radius must equal table radius".into()));
                }
            }
        }
        let zero = vec![0.0; self.dim];
        let e = self.psi(&zero, &zero)?;
        let i = self.nu(&zero)?;
        if norm(&e) > 1e-12 || norm(&i) > 1e-12 {
            return Err(GroupError::InvalidSpec(format!(
                "identity at origin fails: |psi(0,0)| = {:.3e}, |nu(0)| = {:.3e}",
                norm(&e),
                norm(&i)
            )));
        }
        Ok(self)
    }

    pub fn from_json(text: &str) -> Result<Self, GroupError> {
        let spec: Self = serde_json::from_str(text)
            .map_err(|e| GroupError::InvalidSpec(format!("line {} column {}: {e}", e.line(), e.column())))?;
        spec.validated()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("group spec serializes")
    }

    /// Same family with a different radius (recursively for perturbations).
    pub fn with_radius(&self, radius: f64) -> Self {
        let mut out = self.clone();
        out.radius = radius;
        if let Family::Perturbed { base, .. } = &mut out.family {
            **base = base.with_radius(radius);
        }
        out
    }
}

impl LocalGroup for LocalGroupSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn radius(&self) -> f64 {
        self.radius
    }

    fn psi_raw(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>, GroupError> {
        match &self.family {
            Family::Bch { bracket, evaluator } => Ok(match *evaluator {
                BchEvaluator::Integral { nodes } => bch::bch_integral_value(bracket, x, y, nodes)?,
                BchEvaluator::Series { order } => bch::bch_truncated(bracket, x, y, order)?.value,
            }),
            Family::MatrixChart { algebra } => algebra.product(x, y),
            Family::Perturbed { base, eps, perturbation } => {
                let mut out = base.psi_raw(x, y)?;
                perturbation.psi_term(*eps, x, y, &mut out);
                Ok(out)
            }
            Family::Tabulated { table } => Ok(table.psi(x, y)),
        }
    }

    fn nu_raw(&self, x: &[f64]) -> Result<Vec<f64>, GroupError> {
        match &self.family {
            Family::Bch { .. } => Ok(x.iter().map(|a| -a).collect()),
            Family::MatrixChart { algebra } => algebra.inverse(x),
            Family::Perturbed { base, eps, perturbation } => {
                let mut out = base.nu_raw(x)?;
                perturbation.nu_term(*eps, x, &mut out);
                Ok(out)
            }
            Family::Tabulated { table } => Ok(table.nu(x)),
        }
    }
}

/// Relabels coordinates: new coordinate `i` is old coordinate `perm[i]`.
pub struct Permuted<'a> {
    inner: &'a dyn LocalGroup,
    perm: Vec<usize>,
}

impl<'a> Permuted<'a> {
    pub fn new(inner: &'a dyn LocalGroup, perm: Vec<usize>) -> Result<Self, GroupError> {
        let mut seen = vec![false; inner.dim()];
        if perm.len() != inner.dim() {
            return Err(GroupError::InvalidSpec("permutation length differs from dim".into()));
        }
        for &p in &perm {
            if p >= seen.len() || seen[p] {
                return Err(GroupError::InvalidSpec(format!("not a permutation: {perm:?}")));
            }
            seen[p] = true;
        }
        Ok(Self { inner, perm })
    }

    fn to_inner(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = v[i];
        }
        out
    }

    fn from_inner(&self, v: &[f64]) -> Vec<f64> {
        self.perm.iter().map(|&p| v[p]).collect()
    }
}

impl LocalGroup for Permuted<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn radius(&self) -> f64 {
        self.inner.radius()
    }

    fn psi_raw(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>, GroupError> {
        Ok(self.from_inner(&self.inner.psi_raw(&self.to_inner(x), &self.to_inner(y))?))
    }

    fn nu_raw(&self, x: &[f64]) -> Result<Vec<f64>, GroupError> {
        Ok(self.from_inner(&self.inner.nu_raw(&self.to_inner(x))?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
    }

    #[test]
    fn matrix_chart_matches_bch() {
        for alg in [MatrixAlgebra::So3, MatrixAlgebra::Sl2, MatrixAlgebra::Heisenberg, MatrixAlgebra::Affine1] {
            let chart = LocalGroupSpec::matrix_chart(alg, 0.5).unwrap();
            let group = LocalGroupSpec::bch(alg.bracket(), 0.5).unwrap();
            let n = alg.dim();
            let x: Vec<f64> = (0..n).map(|i| 0.07 * (i as f64 + 1.0)).collect();
            let y: Vec<f64> = (0..n).map(|i| -0.05 + 0.03 * i as f64).collect();
            let a = chart.psi(&x, &y).unwrap();
            let b = group.psi(&x, &y).unwrap();
            assert!(dist(&a, &b) < 1e-12, "{alg:?}: {a:?} vs {b:?}");
            let inv = chart.nu(&x).unwrap();
            assert!(dist(&inv, &x.iter().map(|v| -v).collect::<Vec<_>>()) < 1e-12);
        }
    }

    #[test]
    fn domain_escape_is_loud() {
        let g = LocalGroupSpec::bch(Bracket::so3(), 0.5).unwrap();
        let err = g.psi(&[0.6, 0.0, 0.0], &[0.0; 3]).unwrap_err();
        assert!(matches!(err, GroupError::DomainEscape(ref m) if m.contains("6.000000e-1")), "{err}");
    }

    #[test]
    fn perturbation_closed_forms() {
        let base = LocalGroupSpec::bch(Bracket::zero(3), 1.0).unwrap();
        let x = [0.2, 0.1, -0.3];
        let y = [0.4, -0.2, 0.1];
        let q = LocalGroupSpec::perturbed(base.clone(), 0.01, Perturbation::Quadratic).unwrap();
        assert!((q.psi(&x, &y).unwrap()[0] - (0.6 + 0.01 * 0.08)).abs() < 1e-15);
        let c = LocalGroupSpec::perturbed(base.clone(), 0.01, Perturbation::Cubic).unwrap();
        assert!((c.psi(&x, &y).unwrap()[0] - (0.6 + 0.01 * 0.08 * 0.6)).abs() < 1e-15);
        let o = LocalGroupSpec::perturbed(base.clone(), 0.01, Perturbation::OffDiagonal).unwrap();
        assert!((o.psi(&x, &y).unwrap()[2] - (-0.2 + 0.01 * 0.2 * -0.2)).abs() < 1e-15);
        let i = LocalGroupSpec::perturbed(base, 0.01, Perturbation::Inverse).unwrap();
        assert!((i.nu(&x).unwrap()[0] - (-0.2 + 0.01 * 0.14)).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let base = LocalGroupSpec::bch(Bracket::so3(), 0.5).unwrap();
        let spec = LocalGroupSpec::perturbed(base, 1e-3, Perturbation::Quadratic).unwrap();
        let text = spec.to_json();
        assert!(text.contains("\"family\": \"perturbed\""));
        let back = LocalGroupSpec::from_json(&text).unwrap();
        assert_eq!(back, spec);
        let chart = LocalGroupSpec::matrix_chart(MatrixAlgebra::Sl2, 0.4).unwrap();
        assert_eq!(LocalGroupSpec::from_json(&chart.to_json()).unwrap(), chart);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(LocalGroupSpec::bch(Bracket::so3(), -1.0).is_err());
        let err = LocalGroupSpec::from_json("{\"dim\": 3, \"radius\": 0.5, \"family\": \"nope\"}").unwrap_err();
        assert!(matches!(err, GroupError::InvalidSpec(ref m) if m.contains("line 1")));
        let base = LocalGroupSpec::bch(Bracket::zero(1), 0.5).unwrap();
        assert!(LocalGroupSpec::perturbed(base, 0.1, Perturbation::OffDiagonal).is_err());
    }

    #[test]
    fn permuted_group_relabels() {
        let g = LocalGroupSpec::bch(Bracket::heisenberg(), 0.5).unwrap();
        let p = Permuted::new(&g, vec![2, 0, 1]).unwrap();
        // new e2 = old e1, new e3 = old e2, new e1 = old e3
        let a = p.psi(&[0.0, 0.1, 0.0], &[0.0, 0.0, 0.1]).unwrap();
        assert!(dist(&a, &[0.005, 0.1, 0.1]) < 1e-15);
        assert!(Permuted::new(&g, vec![0, 0, 1]).is_err());
    }
}

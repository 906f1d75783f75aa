//! Lie brackets as structure constants, `ad`, the bracket norm and the
//! matrix-group intertwining checks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{MatError, Matrix};
use crate::rng::SplitMix64;

/// Jacobi residual at or below which a bracket is treated as a Lie bracket.
pub const LIE_ADMISSIBLE_TOL: f64 = 1e-10;
/// Terms of the `EXP(ad_v)` series used by [`check_intertwining`].
const AD_EXP_TERMS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LieError {
    #[error("dimension mismatch: bracket has dim {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("singular-g: |det g| = {0:.3e}")]
    SingularG(f64),
    #[error("domain: ||v||_F = {0:.3e} exceeds 1")]
    Domain(f64),
    #[error("bracket-parse: {0}")]
    Parse(String),
    #[error("unknown bracket '{0}'")]
    UnknownBuiltin(String),
    #[error(transparent)]
    Matrix(#[from] MatError),
}

/// Structure constants `[e_i, e_j] = Σ_k c[i][j][k] e_k`, antisymmetric by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BracketFile", into = "BracketFile")]
pub struct Bracket {
    dim: usize,
    c: Vec<f64>,
    name: String,
}

/// Structured-text form: only `i < j` entries, zero-based indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BracketFile {
    pub dim: usize,
    pub c: Vec<(usize, usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl TryFrom<BracketFile> for Bracket {
    type Error = LieError;
    fn try_from(file: BracketFile) -> Result<Self, LieError> {
        Bracket::from_file(&file)
    }
}

impl From<Bracket> for BracketFile {
    fn from(b: Bracket) -> Self {
        b.to_file()
    }
}

impl Bracket {
    /// Builds from a full tensor (index `(i*n + j)*n + k`), antisymmetrizing it.
    pub fn from_tensor(dim: usize, tensor: &[f64]) -> Result<Self, LieError> {
        if dim == 0 || dim > crate::matrix::MAX_DIM {
            return Err(LieError::Parse(format!("dimension {dim} out of range")));
        }
        if tensor.len() != dim * dim * dim {
            return Err(LieError::DimensionMismatch { expected: dim * dim * dim, got: tensor.len() });
        }
        if tensor.iter().any(|v| !v.is_finite()) {
            return Err(LieError::Parse("non-finite structure constant".into()));
        }
        let mut c = vec![0.0; dim * dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let a = tensor[(i * dim + j) * dim + k];
                    let b = tensor[(j * dim + i) * dim + k];
                    c[(i * dim + j) * dim + k] = 0.5 * (a - b);
                }
            }
        }
        Ok(Self { dim, c, name: "custom".into() })
    }

    /// Builds from upper-triangular entries `(i, j, k, value)` with `i < j`.
    pub fn from_entries(dim: usize, entries: &[(usize, usize, usize, f64)]) -> Result<Self, LieError> {
        if dim == 0 || dim > crate::matrix::MAX_DIM {
            return Err(LieError::Parse(format!("dimension {dim} out of range")));
        }
        let mut c = vec![0.0; dim * dim * dim];
        for &(i, j, k, v) in entries {
            if i >= dim || j >= dim || k >= dim {
                return Err(LieError::Parse(format!("index ({i},{j},{k}) out of range for dim {dim}")));
            }
            if i >= j {
                return Err(LieError::Parse(format!("entry ({i},{j},{k}) must have i < j")));
            }
            if !v.is_finite() {
                return Err(LieError::Parse(format!("entry ({i},{j},{k}) is not finite")));
            }
            c[(i * dim + j) * dim + k] += v;
            c[(j * dim + i) * dim + k] -= v;
        }
        Ok(Self { dim, c, name: "custom".into() })
    }

    pub fn from_file(file: &BracketFile) -> Result<Self, LieError> {
        let b = Self::from_entries(file.dim, &file.c)?;
        Ok(match &file.name {
            Some(name) => b.named(name),
            None => b,
        })
    }

    pub fn to_file(&self) -> BracketFile {
        let n = self.dim;
        let mut c = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in 0..n {
                    let v = self.constant(i, j, k);
                    if v != 0.0 {
                        c.push((i, j, k, v));
                    }
                }
            }
        }
        BracketFile { dim: n, c, name: Some(self.name.clone()) }
    }

    pub fn from_json(text: &str) -> Result<Self, LieError> {
        let file: BracketFile = serde_json::from_str(text)
            .map_err(|e| LieError::Parse(format!("line {} column {}: {e}", e.line(), e.column())))?;
        Self::from_file(&file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("bracket serializes")
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_entries(dim, &[]).expect("valid").named("zero")
    }

    /// `[e1, e2] = e3`, all other brackets zero.
    pub fn heisenberg() -> Self {
        Self::from_entries(3, &[(0, 1, 2, 1.0)]).expect("valid").named("heisenberg")
    }

    /// Cross-product constants `[e_i, e_j] = ε_ijk e_k`.
    pub fn so3() -> Self {
        Self::from_entries(3, &[(0, 1, 2, 1.0), (1, 2, 0, 1.0), (0, 2, 1, -1.0)]).expect("valid").named("so3")
    }

    /// Basis `(h, e, f)`: `[h,e] = 2e`, `[h,f] = -2f`, `[e,f] = h`.
    pub fn sl2() -> Self {
        Self::from_entries(3, &[(0, 1, 1, 2.0), (0, 2, 2, -2.0), (1, 2, 0, 1.0)]).expect("valid").named("sl2")
    }

    /// Affine line: `[e1, e2] = e2`.
    pub fn affine1() -> Self {
        Self::from_entries(2, &[(0, 1, 1, 1.0)]).expect("valid").named("affine1")
    }

    pub const BUILTIN_NAMES: [&'static str; 5] = ["zero", "heisenberg", "so3", "sl2", "affine1"];

    pub fn builtin(name: &str) -> Result<Self, LieError> {
        match name {
            "zero" => Ok(Self::zero(3)),
            "heisenberg" => Ok(Self::heisenberg()),
            "so3" => Ok(Self::so3()),
            "sl2" => Ok(Self::sl2()),
            "affine1" => Ok(Self::affine1()),
            other => Err(LieError::UnknownBuiltin(other.to_string())),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn constant(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.dim + j) * self.dim + k]
    }

    pub fn tensor(&self) -> &[f64] {
        &self.c
    }

    fn check(&self, v: &[f64]) -> Result<(), LieError> {
        if v.len() != self.dim {
            return Err(LieError::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(())
    }

    /// `[x, y]`, summed over `i < j` so that swapping arguments negates the result bit-for-bit.
    pub fn apply(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>, LieError> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.apply_unchecked(x, y))
    }

    pub(crate) fn apply_unchecked(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n];
        for i in 0..n {
            for j in i + 1..n {
                let w = x[i] * y[j] - x[j] * y[i];
                if w == 0.0 {
                    continue;
                }
                let base = (i * n + j) * n;
                for (k, o) in out.iter_mut().enumerate() {
                    *o += w * self.c[base + k];
                }
            }
        }
        out
    }

    /// Matrix of `w ↦ [v, w]`.
    pub fn ad(&self, v: &[f64]) -> Result<Matrix, LieError> {
        self.check(v)?;
        let n = self.dim;
        Ok(Matrix::from_fn(n, |k, j| (0..n).map(|i| v[i] * self.constant(i, j, k)).sum()))
    }

    /// Sampled lower bound and summed upper bound on `sup |[x,y]|` over unit pairs.
    pub fn norm_bounds(&self, samples: usize, seed: u64) -> NormBounds {
        let upper: f64 = self.c.iter().map(|v| v.abs()).sum();
        let mut rng = SplitMix64::new(seed);
        let mut lower: f64 = 0.0;
        for _ in 0..samples.max(1) {
            let x = rng.unit_vector(self.dim);
            let y = rng.unit_vector(self.dim);
            lower = lower.max(norm(&self.apply_unchecked(&x, &y)));
        }
        // the sample max cannot exceed the true sup; clamp guards rounding at the boundary
        NormBounds { lower: lower.min(upper), upper, samples: samples.max(1) }
    }

    /// Certified `B₀` upper bound.
    pub fn b0_upper(&self) -> f64 {
        self.c.iter().map(|v| v.abs()).sum()
    }

    pub fn jacobi_residual(&self) -> f64 {
        let n = self.dim;
        let e = |i: usize| {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            v
        };
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let (ei, ej, ek) = (e(i), e(j), e(k));
                    let a = self.apply_unchecked(&ei, &self.apply_unchecked(&ej, &ek));
                    let b = self.apply_unchecked(&ej, &self.apply_unchecked(&ek, &ei));
                    let c = self.apply_unchecked(&ek, &self.apply_unchecked(&ei, &ej));
                    let s: Vec<f64> = (0..n).map(|t| a[t] + b[t] + c[t]).collect();
                    worst = worst.max(norm(&s));
                }
            }
        }
        worst
    }

    /// Whether the lower central series reaches zero within `dim` steps.
    pub fn is_nilpotent(&self) -> bool {
        let n = self.dim;
        let basis: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut v = vec![0.0; n];
                v[i] = 1.0;
                v
            })
            .collect();
        let mut current = basis.clone();
        for _ in 0..n {
            let products: Vec<Vec<f64>> = basis
                .iter()
                .flat_map(|a| current.iter().map(move |b| (a, b)))
                .map(|(a, b)| self.apply_unchecked(a, b))
                .collect();
            current = orthonormal_span(products);
            if current.is_empty() {
                return true;
            }
        }
        false
    }

    pub fn is_lie_admissible(&self) -> bool {
        self.jacobi_residual() <= LIE_ADMISSIBLE_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub lower: f64,
    pub upper: f64,
    pub samples: usize,
}

fn orthonormal_span(vectors: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mut v in vectors {
        for q in &out {
            let d: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
        }
        let nv = norm(&v);
        if nv > 1e-12 {
            out.push(v.into_iter().map(|a| a / nv).collect());
        }
    }
    out
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Residuals of the two intertwining identities on a matrix group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntertwiningReport {
    /// `‖g exp(v) g⁻¹ − exp(g v g⁻¹)‖_F`
    pub residual_conjugation: f64,
    /// `‖exp(v) w exp(−v) − EXP(ad_v)(w)‖_F`
    pub residual_adjoint: f64,
    pub tol: f64,
    pub pass: bool,
}

pub fn check_intertwining(g: &Matrix, v: &Matrix, w: &Matrix, tol: f64) -> Result<IntertwiningReport, LieError> {
    let n = g.dim();
    for m in [v, w] {
        if m.dim() != n {
            return Err(LieError::DimensionMismatch { expected: n, got: m.dim() });
        }
    }
    let det = g.det();
    if !(det.abs() > 1e-10) {
        return Err(LieError::SingularG(det));
    }
    let vn = v.frobenius();
    if vn > 1.0 {
        return Err(LieError::Domain(vn));
    }
    let g_inv = g.inverse().map_err(|_| LieError::SingularG(det))?;
    let ev = v.exp()?;
    let lhs1 = &(g * &ev) * &g_inv;
    let rhs1 = (&(g * v) * &g_inv).exp()?;
    let residual_conjugation = (&lhs1 - &rhs1).frobenius();

    let ev_inv = (-v).exp()?;
    let lhs2 = &(&ev * w) * &ev_inv;
    let mut term = w.clone();
    let mut rhs2 = w.clone();
    for j in 1..=AD_EXP_TERMS {
        term = v.commutator(&term).scale(1.0 / j as f64);
        rhs2 = &rhs2 + &term;
    }
    let residual_adjoint = (&lhs2 - &rhs2).frobenius();
    Ok(IntertwiningReport {
        residual_conjugation,
        residual_adjoint,
        tol,
        pass: residual_conjugation <= tol && residual_adjoint <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
        vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    }

    #[test]
    fn self_bracket_vanishes() {
        let mut rng = SplitMix64::new(3);
        for b in [Bracket::so3(), Bracket::sl2(), Bracket::heisenberg()] {
            let x = rng.in_ball(3, 1.0);
            assert_eq!(b.apply(&x, &x).unwrap(), vec![0.0; 3]);
        }
    }

    #[test]
    fn heisenberg_basis_bracket() {
        assert_eq!(Bracket::heisenberg().apply(&e(3, 0), &e(3, 1)).unwrap(), e(3, 2));
    }

    #[test]
    fn so3_is_cross_product() {
        let b = Bracket::so3();
        assert_eq!(b.apply(&e(3, 1), &e(3, 2)).unwrap(), e(3, 0));
        let mut rng = SplitMix64::new(4);
        for _ in 0..100 {
            let (x, y) = (rng.in_ball(3, 1.0), rng.in_ball(3, 1.0));
            let got = b.apply(&x, &y).unwrap();
            let want = cross(&x, &y);
            for k in 0..3 {
                assert!((got[k] - want[k]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(Bracket::so3().apply(&[1.0, 0.0], &[0.0, 1.0, 0.0]), Err(LieError::DimensionMismatch { .. })));
    }

    #[test]
    fn ad_matrix_cases() {
        let h = Bracket::heisenberg();
        assert_eq!(h.ad(&[0.0; 3]).unwrap(), Matrix::zeros(3));
        let m = h.ad(&e(3, 0)).unwrap();
        let mut want = Matrix::zeros(3);
        want.set(2, 1, 1.0);
        assert_eq!(m, want);
    }

    #[test]
    fn ad_columns_match_bracket() {
        let mut rng = SplitMix64::new(8);
        let t: Vec<f64> = (0..64).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let b = Bracket::from_tensor(4, &t).unwrap();
        let v = rng.in_ball(4, 1.0);
        let m = b.ad(&v).unwrap();
        for j in 0..4 {
            let col: Vec<f64> = (0..4).map(|k| m.get(k, j)).collect();
            let want = b.apply(&v, &e(4, j)).unwrap();
            for k in 0..4 {
                assert!((col[k] - want[k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn norm_bounds_cases() {
        let z = Bracket::zero(3).norm_bounds(100, 1);
        assert_eq!((z.lower, z.upper), (0.0, 0.0));
        let h = Bracket::heisenberg().norm_bounds(20_000, 1);
        assert_eq!(h.upper, 2.0);
        assert!(h.lower <= 1.0 && h.lower > 0.95, "{h:?}");
        let s = Bracket::so3().norm_bounds(20_000, 1);
        assert!(s.lower <= 1.0 + 1e-12 && s.lower > 0.99, "{s:?}");
    }

    #[test]
    fn norm_lower_monotone_in_samples() {
        let b = Bracket::sl2();
        let mut prev = 0.0;
        for s in [1, 10, 100, 1000] {
            let nb = b.norm_bounds(s, 77);
            assert!(nb.lower >= prev && nb.lower <= nb.upper);
            prev = nb.lower;
        }
    }

    #[test]
    fn nilpotency() {
        assert!(Bracket::heisenberg().is_nilpotent());
        assert!(Bracket::zero(4).is_nilpotent());
        assert!(!Bracket::so3().is_nilpotent());
        assert!(!Bracket::sl2().is_nilpotent());
        assert!(!Bracket::affine1().is_nilpotent());
    }

    #[test]
    fn jacobi_on_library() {
        assert_eq!(Bracket::heisenberg().jacobi_residual(), 0.0);
        assert!(Bracket::so3().jacobi_residual() <= 1e-14);
        assert!(Bracket::sl2().jacobi_residual() <= 1e-14);
        assert!(Bracket::affine1().jacobi_residual() <= 1e-14);
        let mut t = Bracket::so3().tensor().to_vec();
        t[(0 * 3 + 1) * 3 + 2] += 0.1;
        t[(1 * 3 + 0) * 3 + 2] -= 0.1;
        // in three dimensions a rescaled diagonal structure still satisfies Jacobi
        assert!(Bracket::from_tensor(3, &t).unwrap().jacobi_residual() <= 1e-14);
        let mut t2 = t.clone();
        // break a second constant so the cyclic sum cannot cancel
        t2[(1 * 3 + 2) * 3 + 1] += 0.1;
        t2[(2 * 3 + 1) * 3 + 1] -= 0.1;
        let p = Bracket::from_tensor(3, &t2).unwrap();
        assert!(p.jacobi_residual() > 0.05, "{}", p.jacobi_residual());
        assert!(!p.is_lie_admissible());
    }

    #[test]
    fn json_round_trip_and_errors() {
        let b = Bracket::sl2();
        let back = Bracket::from_json(&b.to_json()).unwrap();
        assert_eq!(back.tensor(), b.tensor());
        assert!(Bracket::from_json(r#"{"dim": 3, "c": [[1, 0, 2, 1.0]]}"#).is_err());
        assert!(Bracket::from_json(r#"{"dim": 3, "c": [[0, 1, 5, 1.0]]}"#).is_err());
        assert!(Bracket::from_json(r#"{"dim": 3, "c": "#).is_err());
    }

    #[test]
    fn intertwining_trivial_cases() {
        let mut rng = SplitMix64::new(12);
        let v = Matrix::from_fn(3, |_, _| rng.uniform(-0.2, 0.2));
        let w = Matrix::from_fn(3, |_, _| rng.uniform(-1.0, 1.0));
        let r = check_intertwining(&Matrix::identity(3), &v, &w, 1e-9).unwrap();
        assert_eq!(r.residual_conjugation, 0.0);
        let r = check_intertwining(&Matrix::identity(3), &Matrix::zeros(3), &w, 1e-9).unwrap();
        assert_eq!(r.residual_adjoint, 0.0);
    }

    #[test]
    fn intertwining_singular_g() {
        let g = Matrix::diag(&[1.0, 0.0, 1.0]);
        let err = check_intertwining(&g, &Matrix::zeros(3), &Matrix::zeros(3), 1e-9).unwrap_err();
        assert!(matches!(err, LieError::SingularG(_)));
    }
}

//! The Hausdorff product `H_B` of a bilinear bracket, by truncated series and
//! by the `log(t)/(t − 1)` integral, plus sampled verifiers.

pub mod quadrature;
pub mod series;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lie::{norm, Bracket, LieError};
use crate::matrix::{MatError, Matrix};
use crate::rng::SplitMix64;

/// Terms of the `f(I + E)` series.
const F_TERMS: usize = 40;
/// Frobenius radius for `‖E‖` below which the `f` series is summed directly.
const F_SERIES_RADIUS: f64 = 0.45;
const F_MAX_ROOTS: usize = 8;
/// Operator-norm bound on `ad_x`, `ad_y` for the integral.
pub const AD_NORM_LIMIT: f64 = 0.5;
const DIVERGENCE_TOL: f64 = 1e-6;
/// Violation slack floor used by [`verify_h_lemma`].
pub const H_LEMMA_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BchError {
    #[error("order {0} out of range 1..=6")]
    OrderOutOfRange(usize),
    #[error("nodes {0} not in {{8, 16, 32, 64}}")]
    InvalidNodes(usize),
    #[error("f-domain: square-root reduction left ||S - I||_F = {0:.3e}")]
    FDomain(f64),
    #[error("quadrature-divergence: doubling changed the result by {0:.3e}")]
    QuadratureDivergence(f64),
    #[error("domain: {0}")]
    Domain(String),
    #[error("bracket is not lie-admissible (Jacobi residual {0:.3e})")]
    NotAdmissible(f64),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Matrix(#[from] MatError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub nodes: usize,
    pub refine: bool,
}

impl QuadratureSpec {
    pub const ALLOWED_NODES: [usize; 4] = [8, 16, 32, 64];

    pub fn new(nodes: usize, refine: bool) -> Result<Self, BchError> {
        if !Self::ALLOWED_NODES.contains(&nodes) {
            return Err(BchError::InvalidNodes(nodes));
        }
        Ok(Self { nodes, refine })
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { nodes: 16, refine: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Series,
    Integral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HReport {
    pub value: Vec<f64>,
    pub est_error: f64,
    pub method: Method,
    pub order_or_nodes: usize,
}

fn check_dims(b: &Bracket, x: &[f64], y: &[f64]) -> Result<(), BchError> {
    for v in [x, y] {
        if v.len() != b.dim() {
            return Err(LieError::DimensionMismatch { expected: b.dim(), got: v.len() }.into());
        }
    }
    Ok(())
}

/// Partial sum of the BCH series through `order`; `est_error` is the norm of the last order.
pub fn bch_truncated(b: &Bracket, x: &[f64], y: &[f64], order: usize) -> Result<HReport, BchError> {
    if !(1..=series::MAX_ORDER).contains(&order) {
        return Err(BchError::OrderOutOfRange(order));
    }
    check_dims(b, x, y)?;
    let (value, last) = series::evaluate(b, x, y, order);
    Ok(HReport { value, est_error: norm(&last), method: Method::Series, order_or_nodes: order })
}

/// `f(M) v` with `f(t) = log(t)/(t − 1)`, using `f(S²) = 2 f(S) (S + I)⁻¹`.
fn f_apply(m: &Matrix, v: &[f64]) -> Result<Vec<f64>, BchError> {
    let n = m.dim();
    let id = Matrix::identity(n);
    let mut s = m.clone();
    let mut w = v.to_vec();
    let mut factor = 1.0;
    let mut roots = 0;
    loop {
        let dist = (&s - &id).frobenius();
        if dist <= F_SERIES_RADIUS {
            break;
        }
        if roots >= F_MAX_ROOTS {
            return Err(BchError::FDomain(dist));
        }
        let r = s.sqrt().map_err(|_| BchError::FDomain(dist))?;
        let inv = (&r + &id).inverse().map_err(|_| BchError::FDomain(dist))?;
        w = inv.mul_vec(&w);
        factor *= 2.0;
        s = r;
        roots += 1;
    }
    let e = &s - &id;
    let mut term = w.clone();
    let mut sum = w;
    let floor = norm(&sum) * f64::EPSILON * 0.01;
    for k in 1..=F_TERMS {
        term = e.mul_vec(&term);
        let c = if k % 2 == 0 { 1.0 } else { -1.0 } / (k + 1) as f64;
        for (a, t) in sum.iter_mut().zip(&term) {
            *a += c * t;
        }
        if norm(&term) <= floor {
            break;
        }
    }
    Ok(sum.into_iter().map(|a| a * factor).collect())
}

fn integral_value(adx: &Matrix, exp_ady: &Matrix, x: &[f64], y: &[f64], nodes: usize) -> Result<Vec<f64>, BchError> {
    let rule = quadrature::rule(nodes);
    let mut out = y.to_vec();
    for (t, w) in rule.nodes.iter().zip(&rule.weights) {
        let m = &adx.scale(*t).exp()? * exp_ady;
        let fx = f_apply(&m, x)?;
        for (o, v) in out.iter_mut().zip(&fx) {
            *o += w * v;
        }
    }
    Ok(out)
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// `y + ∫₀¹ f(e^{t ad_x} e^{ad_y}) x dt` by Gauss–Legendre.
///
/// With `refine`, `est_error` is the change under node doubling; otherwise it is
/// the change against the half-size rule, which bounds the error of the reported
/// value from above for analytic integrands.
pub fn bch_integral(b: &Bracket, x: &[f64], y: &[f64], quad: QuadratureSpec) -> Result<HReport, BchError> {
    let quad = QuadratureSpec::new(quad.nodes, quad.refine)?;
    check_dims(b, x, y)?;
    let adx = b.ad(x)?;
    let exp_ady = b.ad(y)?.exp()?;
    let value = integral_value(&adx, &exp_ady, x, y, quad.nodes)?;
    let other = if quad.refine { quad.nodes * 2 } else { quad.nodes / 2 };
    let check = integral_value(&adx, &exp_ady, x, y, other)?;
    let est_error = diff_norm(&value, &check);
    if quad.refine && est_error > DIVERGENCE_TOL {
        return Err(BchError::QuadratureDivergence(est_error));
    }
    Ok(HReport { value, est_error, method: Method::Integral, order_or_nodes: quad.nodes })
}

/// Integral value alone at the given node count, without an error estimate.
pub fn bch_integral_value(b: &Bracket, x: &[f64], y: &[f64], nodes: usize) -> Result<Vec<f64>, BchError> {
    check_dims(b, x, y)?;
    let adx = b.ad(x)?;
    let exp_ady = b.ad(y)?.exp()?;
    integral_value(&adx, &exp_ady, x, y, nodes)
}

/// Whether `‖ad_v‖ ≤ 0.5`, using the Frobenius bound first and the power-iteration estimate second.
///
/// Nilpotent brackets always qualify: every `M(t)` is unipotent and the `f` series terminates.
pub fn within_integral_domain(b: &Bracket, v: &[f64]) -> Result<bool, BchError> {
    let ad = b.ad(v)?;
    if b.is_nilpotent() {
        return Ok(true);
    }
    let est = ad.op_norm();
    Ok(est.frobenius <= AD_NORM_LIMIT || est.operator <= AD_NORM_LIMIT)
}

/// Coordinates of `log(e^{ad_x} e^{ad_y})` in the image of `ad`, by least squares.
///
/// Only meaningful when `ad` is injective.
pub fn adjoint_oracle(b: &Bracket, x: &[f64], y: &[f64]) -> Result<Vec<f64>, BchError> {
    check_dims(b, x, y)?;
    let n = b.dim();
    let z = (&b.ad(x)?.exp()? * &b.ad(y)?.exp()?).log()?;
    let basis: Vec<Matrix> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            b.ad(&e)
        })
        .collect::<Result<_, _>>()?;
    let dot = |a: &Matrix, c: &Matrix| a.as_slice().iter().zip(c.as_slice()).map(|(p, q)| p * q).sum::<f64>();
    let gram = Matrix::from_fn(n, |i, j| dot(&basis[i], &basis[j]));
    let rhs: Vec<f64> = basis.iter().map(|a| dot(a, &z)).collect();
    let inv = gram.inverse().map_err(|_| BchError::Domain("ad is not injective for this bracket".into()))?;
    Ok(inv.mul_vec(&rhs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HLemmaReport {
    pub bracket: String,
    pub samples: usize,
    pub seed: u64,
    pub b0_upper: f64,
    pub t_range: (f64, f64),
    pub violations_lower: usize,
    pub violations_upper: usize,
    pub violations_ft: usize,
    pub skipped: usize,
    /// Smallest observed `|H| − t/2 |x+y|`.
    pub min_lower_margin: f64,
    /// Smallest observed `2t|x+y| − |H|`.
    pub min_upper_margin: f64,
    /// Smallest observed `(B₀t²/2)|x−y||x+y| − |f_t|`.
    pub min_ft_margin: f64,
    pub max_est_error: f64,
    pub pass: bool,
}

#[derive(Default)]
struct Tally {
    lower: usize,
    upper: usize,
    ft: usize,
    skipped: usize,
    min_lower: f64,
    min_upper: f64,
    min_ft: f64,
    max_err: f64,
}

impl Tally {
    fn empty() -> Self {
        Self { min_lower: f64::INFINITY, min_upper: f64::INFINITY, min_ft: f64::INFINITY, ..Self::default() }
    }

    fn merge(self, o: Self) -> Self {
        Self {
            lower: self.lower + o.lower,
            upper: self.upper + o.upper,
            ft: self.ft + o.ft,
            skipped: self.skipped + o.skipped,
            min_lower: self.min_lower.min(o.min_lower),
            min_upper: self.min_upper.min(o.min_upper),
            min_ft: self.min_ft.min(o.min_ft),
            max_err: self.max_err.max(o.max_err),
        }
    }
}

/// Samples of `(x, y, t)` for [`verify_h_lemma`]; sample `i` depends only on `(seed, i)`.
pub fn h_lemma_sample(dim: usize, t_range: (f64, f64), seed: u64, i: u64) -> (Vec<f64>, Vec<f64>, f64) {
    let mut rng = SplitMix64::fork(seed, i);
    let x = rng.in_ball(dim, 0.5);
    let y = rng.in_ball(dim, 0.5);
    let t = rng.uniform(t_range.0, t_range.1);
    (x, y, t)
}

/// `t` interval `(0.01, 0.99)/B₀`; a zero bracket uses `(0.01, 0.99)`.
pub fn h_lemma_t_range(b0: f64) -> (f64, f64) {
    let scale = if b0 > 0.0 { 1.0 / b0 } else { 1.0 };
    (0.01 * scale, 0.99 * scale)
}

/// Checks `t/2|x+y| ≤ |H(tx,ty)| ≤ 2t|x+y|` and the `f_t` bound on seeded samples.
pub fn verify_h_lemma(b: &Bracket, samples: usize, seed: u64) -> Result<HLemmaReport, BchError> {
    let jac = b.jacobi_residual();
    if jac > crate::lie::LIE_ADMISSIBLE_TOL {
        return Err(BchError::NotAdmissible(jac));
    }
    let b0 = b.b0_upper();
    let t_range = h_lemma_t_range(b0);
    let n = b.dim();
    let tally = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut t = Tally::empty();
            let (x, y, s) = h_lemma_sample(n, t_range, seed, i);
            let tx: Vec<f64> = x.iter().map(|a| s * a).collect();
            let ty: Vec<f64> = y.iter().map(|a| s * a).collect();
            let h = match bch_integral(b, &tx, &ty, QuadratureSpec::default()) {
                Ok(h) => h,
                Err(_) => {
                    t.skipped = 1;
                    return t;
                }
            };
            let slack = H_LEMMA_SLACK + h.est_error;
            let sum: Vec<f64> = x.iter().zip(&y).map(|(a, c)| a + c).collect();
            let dif: Vec<f64> = x.iter().zip(&y).map(|(a, c)| a - c).collect();
            let (ns, nd, nh) = (norm(&sum), norm(&dif), norm(&h.value));
            let lower = nh - 0.5 * s * ns;
            let upper = 2.0 * s * ns - nh;
            let ft: Vec<f64> = h.value.iter().zip(&sum).map(|(a, c)| a - s * c).collect();
            let ft_margin = 0.5 * b0 * s * s * nd * ns - norm(&ft);
            t.lower = usize::from(lower < -slack);
            t.upper = usize::from(upper < -slack);
            t.ft = usize::from(ft_margin < -slack);
            t.min_lower = lower;
            t.min_upper = upper;
            t.min_ft = ft_margin;
            t.max_err = h.est_error;
            t
        })
        .reduce(Tally::empty, Tally::merge);
    Ok(HLemmaReport {
        bracket: b.name().to_string(),
        samples,
        seed,
        b0_upper: b0,
        t_range,
        violations_lower: tally.lower,
        violations_upper: tally.upper,
        violations_ft: tally.ft,
        skipped: tally.skipped,
        min_lower_margin: tally.min_lower,
        min_upper_margin: tally.min_upper,
        min_ft_margin: tally.min_ft,
        max_est_error: tally.max_err,
        pass: tally.lower + tally.upper + tally.ft + tally.skipped == 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAxiomsReport {
    pub associativity: f64,
    pub inverse: f64,
    pub identity: f64,
    pub est_error_assoc: f64,
    pub est_error_inverse: f64,
    pub est_error_identity: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Associativity, inverse and identity residuals of `H` through the integral evaluator.
pub fn verify_group_axioms(
    b: &Bracket,
    x: &[f64],
    y: &[f64],
    z: &[f64],
    tol: f64,
) -> Result<GroupAxiomsReport, BchError> {
    let quad = QuadratureSpec::default();
    let h = |p: &[f64], q: &[f64]| -> Result<HReport, BchError> {
        for v in [p, q] {
            if !within_integral_domain(b, v)? {
                return Err(BchError::Domain(format!("||ad_v|| exceeds {AD_NORM_LIMIT} at |v| = {:.3e}", norm(v))));
            }
        }
        bch_integral(b, p, q, quad)
    };
    check_dims(b, x, y)?;
    check_dims(b, z, z)?;
    let xy = h(x, y)?;
    let yz = h(y, z)?;
    let left = h(&xy.value, z)?;
    let right = h(x, &yz.value)?;
    let associativity = diff_norm(&left.value, &right.value);
    let est_error_assoc = xy.est_error + yz.est_error + left.est_error + right.est_error;

    let neg: Vec<f64> = x.iter().map(|a| -a).collect();
    let i1 = h(x, &neg)?;
    let i2 = h(&neg, x)?;
    let inverse = norm(&i1.value).max(norm(&i2.value));
    let est_error_inverse = i1.est_error.max(i2.est_error);

    let zero = vec![0.0; x.len()];
    let e1 = h(x, &zero)?;
    let e2 = h(&zero, x)?;
    let identity = diff_norm(&e1.value, x).max(diff_norm(&e2.value, x));
    let est_error_identity = e1.est_error.max(e2.est_error);

    let pass = associativity <= tol + est_error_assoc
        && inverse <= tol + est_error_inverse
        && identity <= tol + est_error_identity;
    Ok(GroupAxiomsReport {
        associativity,
        inverse,
        identity,
        est_error_assoc,
        est_error_inverse,
        est_error_identity,
        tol,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize, s: f64) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = s;
        v
    }

    #[test]
    fn zero_bracket_is_sum() {
        let b = Bracket::zero(3);
        let x = [0.3, -0.2, 0.1];
        let y = [0.05, 0.4, -0.7];
        for order in 1..=6 {
            let h = bch_truncated(&b, &x, &y, order).unwrap();
            assert_eq!(h.value, vec![0.35, 0.2, -0.6]);
        }
        let h = bch_integral(&b, &x, &y, QuadratureSpec::default()).unwrap();
        for (a, c) in h.value.iter().zip([0.35, 0.2, -0.6]) {
            assert!((a - c).abs() < 1e-15);
        }
    }

    #[test]
    fn heisenberg_exact() {
        let b = Bracket::heisenberg();
        for order in 2..=6 {
            let h = bch_truncated(&b, &e(3, 0, 1.0), &e(3, 1, 1.0), order).unwrap();
            assert_eq!(h.value, vec![1.0, 1.0, 0.5]);
        }
        let h = bch_integral(&b, &e(3, 0, 1.0), &e(3, 1, 1.0), QuadratureSpec::new(16, false).unwrap()).unwrap();
        for (a, c) in h.value.iter().zip([1.0, 1.0, 0.5]) {
            assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn so3_series_integral_oracle_agree() {
        let b = Bracket::so3();
        let (x, y) = (e(3, 0, 0.1), e(3, 1, 0.1));
        let s = bch_truncated(&b, &x, &y, 6).unwrap();
        let i = bch_integral(&b, &x, &y, QuadratureSpec::default()).unwrap();
        let o = adjoint_oracle(&b, &x, &y).unwrap();
        assert!(diff_norm(&s.value, &o) < 1e-9);
        assert!(diff_norm(&i.value, &s.value) < 1e-8);
        assert!(diff_norm(&i.value, &o) < 1e-9);
    }

    #[test]
    fn order_errors() {
        let b = Bracket::so3();
        assert_eq!(bch_truncated(&b, &[0.0; 3], &[0.0; 3], 0), Err(BchError::OrderOutOfRange(0)));
        assert_eq!(bch_truncated(&b, &[0.0; 3], &[0.0; 3], 7), Err(BchError::OrderOutOfRange(7)));
        assert_eq!(QuadratureSpec::new(12, true), Err(BchError::InvalidNodes(12)));
    }

    #[test]
    fn f_domain_raised_far_from_identity() {
        // spectrum of M spans e^{±100}; eight roots cannot bring it near I
        let b = Bracket::sl2();
        let r = bch_integral(&b, &e(3, 0, 50.0), &e(3, 1, 0.01), QuadratureSpec::new(8, false).unwrap());
        assert!(matches!(r, Err(BchError::FDomain(_))), "{r:?}");
    }

    #[test]
    fn f_series_matches_log_ratio_on_scalars() {
        for m in [0.3, 0.8, 1.0, 1.7, 4.0] {
            let v = f_apply(&Matrix::diag(&[m]), &[1.0]).unwrap()[0];
            let exact = if m == 1.0 { 1.0 } else { f64::ln(m) / (m - 1.0) };
            assert!((v - exact).abs() < 1e-13, "m={m} v={v} exact={exact}");
        }
    }

    #[test]
    fn h_lemma_zero_bracket() {
        let r = verify_h_lemma(&Bracket::zero(2), 500, 1).unwrap();
        assert!(r.pass);
        assert_eq!(r.violations_lower + r.violations_upper + r.violations_ft, 0);
    }

    #[test]
    fn h_lemma_rejects_non_lie() {
        let b = Bracket::from_entries(3, &[(1, 2, 1, 1.0), (0, 1, 1, 1.0)]).unwrap();
        if b.jacobi_residual() > crate::lie::LIE_ADMISSIBLE_TOL {
            assert!(matches!(verify_h_lemma(&b, 10, 1), Err(BchError::NotAdmissible(_))));
        }
    }

    #[test]
    fn group_axioms_examples() {
        let b = Bracket::heisenberg();
        let r = verify_group_axioms(&b, &e(3, 0, 0.3), &e(3, 1, 0.3), &[0.3, 0.3, 0.0], 1e-10).unwrap();
        assert!(r.associativity <= 1e-10, "{r:?}");
        assert!(r.pass);
        let b = Bracket::so3();
        let x = [0.05, 0.0, 0.0];
        let y = [0.0, 0.03, 0.04];
        let z = [0.0288675, 0.0288675, 0.0288675];
        let r = verify_group_axioms(&b, &x, &y, &z, 1e-7).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.inverse < 1e-13);
    }

    #[test]
    fn group_axioms_domain_error() {
        let b = Bracket::so3();
        let r = verify_group_axioms(&b, &e(3, 0, 0.9), &e(3, 1, 0.1), &e(3, 2, 0.1), 1e-7);
        assert!(matches!(r, Err(BchError::Domain(_))));
    }

    #[test]
    fn scaled_inputs_same_path() {
        let b = Bracket::sl2();
        let (x, y, t) = ([0.1, -0.2, 0.05], [0.0, 0.1, 0.2], 0.3);
        let tx: Vec<f64> = x.iter().map(|a| t * a).collect();
        let ty: Vec<f64> = y.iter().map(|a| t * a).collect();
        let a = bch_integral(&b, &tx, &ty, QuadratureSpec::default()).unwrap();
        let c = bch_integral(&b, &tx, &ty, QuadratureSpec::default()).unwrap();
        assert_eq!(a, c);
    }
}

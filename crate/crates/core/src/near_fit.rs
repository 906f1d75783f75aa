//! Bracket extraction from a candidate group, BCH refits, perturbation sweeps
//! and finite-difference probes of Taylor remainders and derivative limits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lie::{norm, Bracket};
use crate::local_group::{deviations, lattice, GroupError, LocalGroup, LocalGroupSpec, Perturbation};

/// Ratios at or below this count as an exact Taylor expansion.
pub const EXACT_RATIO: f64 = 1e-8;
/// Distances at or below this make a sweep "exact".
pub const EXACT_DISTANCE: f64 = 1e-10;
pub const MIN_SLOPE_TAYLOR: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("step h = {h} outside (0, r/8 = {limit}]")]
    Step { h: f64, limit: f64 },
    #[error("degenerate ladder: {0}")]
    Ladder(String),
    #[error("domain escape: {0}")]
    Domain(String),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Default finite-difference step `max(1e−4, ε^{1/3}·scale)`.
pub fn default_step(scale: f64) -> f64 {
    f64::max(1e-4, f64::EPSILON.cbrt() * scale)
}

/// Single-step estimate `c[i][j][·] = [ψ(he_i, he_j) − ψ(he_j, he_i)]/h²`.
pub fn extract_bracket_raw(g: &dyn LocalGroup, h: f64) -> Result<Bracket, FitError> {
    let limit = g.radius() / 8.0;
    if !(h > 0.0 && h <= limit) {
        return Err(FitError::Step { h, limit });
    }
    let n = g.dim();
    let mut entries = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let mut a = vec![0.0; n];
            let mut b = vec![0.0; n];
            a[i] = h;
            b[j] = h;
            let p = g.psi(&a, &b)?;
            let q = g.psi(&b, &a)?;
            for k in 0..n {
                let v = (p[k] - q[k]) / (h * h);
                if v != 0.0 {
                    entries.push((i, j, k, v));
                }
            }
        }
    }
    Ok(Bracket::from_entries(n, &entries).map_err(GroupError::from)?)
}

/// Richardson combination of the `h` and `h/2` estimates.
pub fn extract_bracket(g: &dyn LocalGroup, h: f64) -> Result<Bracket, FitError> {
    let coarse = extract_bracket_raw(g, h)?;
    let fine = extract_bracket_raw(g, h / 2.0)?;
    let n = g.dim();
    let tensor: Vec<f64> = coarse.tensor().iter().zip(fine.tensor()).map(|(c, f)| (4.0 * f - c) / 3.0).collect();
    debug_assert_eq!(tensor.len(), n * n * n);
    Ok(Bracket::from_tensor(n, &tensor).map_err(GroupError::from)?.named("extracted"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitGrid {
    pub per_axis: usize,
    pub radius: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub extracted: Bracket,
    pub candidate: LocalGroupSpec,
    pub distance: f64,
    pub distance_psi: f64,
    pub distance_nu: f64,
    pub h_used: f64,
    pub grid: FitGrid,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Sup-distance between two groups on pairs from the radius `r/2` lattice.
pub fn grid_distance(a: &dyn LocalGroup, b: &dyn LocalGroup, m: usize) -> Result<(f64, f64, FitGrid), FitError> {
    let radius = a.radius() / 2.0;
    let pts = lattice(a.dim(), m, radius);
    let k = pts.len();
    let psi = (0..k * k)
        .into_par_iter()
        .map(|idx| {
            let (x, y) = (&pts[idx / k], &pts[idx % k]);
            Ok::<_, GroupError>(dist(&a.psi(x, y)?, &b.psi(x, y)?))
        })
        .try_reduce(|| 0.0, |p, q| Ok(p.max(q)))?;
    let nu = pts
        .par_iter()
        .map(|x| Ok::<_, GroupError>(dist(&a.nu(x)?, &b.nu(x)?)))
        .try_reduce(|| 0.0, |p, q| Ok(p.max(q)))?;
    Ok((psi, nu, FitGrid { per_axis: m, radius, points: k }))
}

/// Extracts a bracket and measures the BCH group it generates against `g`.
pub fn fit_group(g: &dyn LocalGroup, m: usize, h: Option<f64>) -> Result<FitResult, FitError> {
    let h_used = h.unwrap_or_else(|| default_step(g.radius()));
    let extracted = extract_bracket(g, h_used)?;
    let candidate = LocalGroupSpec::bch(extracted.clone(), g.radius())?;
    let (distance_psi, distance_nu, grid) = grid_distance(g, &candidate, m)?;
    Ok(FitResult {
        extracted,
        candidate,
        distance: distance_psi.max(distance_nu),
        distance_psi,
        distance_nu,
        h_used,
        grid,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub s: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub perturbation: String,
    pub per_axis: usize,
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `ln distance` against `ln s`; absent when exact.
    pub slope: Option<f64>,
    pub nonincreasing: bool,
    pub verdict: String,
}

/// Least-squares slope of `ln y` against `ln x` over pairs with positive entries.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Deviations and fitted distance of `perturbed(base, s, perturbation)` for each `s`.
pub fn near_sweep(
    base: &LocalGroupSpec,
    perturbation: Perturbation,
    s_list: &[f64],
    m: usize,
) -> Result<SweepReport, FitError> {
    if s_list.len() < 4 {
        return Err(FitError::Ladder(format!("need at least 4 values of s, got {}", s_list.len())));
    }
    if s_list.windows(2).any(|w| !(w[1] < w[0])) || s_list.iter().any(|s| !(*s > 0.0)) {
        return Err(FitError::Ladder("s values must be positive and strictly decreasing".into()));
    }
    let rows: Vec<SweepRow> = s_list
        .iter()
        .map(|&s| {
            let run = || -> Result<SweepRow, FitError> {
                let g = LocalGroupSpec::perturbed(base.clone(), s, perturbation)?;
                let d = deviations(&g, m)?;
                let fit = fit_group(&g, m, None)?;
                Ok(SweepRow { s, d1: d.d1, d2: d.d2, d3: d.d3, distance: fit.distance, error: None })
            };
            run().unwrap_or_else(|e| SweepRow {
                s,
                d1: f64::NAN,
                d2: f64::NAN,
                d3: f64::NAN,
                distance: f64::NAN,
                error: Some(e.to_string()),
            })
        })
        .collect();
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    let nonincreasing = ok.windows(2).all(|w| w[1].distance <= w[0].distance);
    let exact = !ok.is_empty() && ok.iter().all(|r| r.distance <= EXACT_DISTANCE);
    let slope = if exact {
        None
    } else {
        loglog_slope(&ok.iter().map(|r| r.s).collect::<Vec<_>>(), &ok.iter().map(|r| r.distance).collect::<Vec<_>>())
    };
    let verdict = if ok.len() < rows.len() {
        "failed-rows"
    } else if exact {
        "exact"
    } else if nonincreasing && slope.is_some_and(|s| s >= 0.9) {
        "converging"
    } else {
        "not-converging"
    };
    Ok(SweepReport {
        perturbation: perturbation.name().to_string(),
        per_axis: m,
        rows,
        slope,
        nonincreasing,
        verdict: verdict.to_string(),
    })
}

impl SweepReport {
    /// Rows as CSV with header `s,D1,D2,D3,distance`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["s", "D1", "D2", "D3", "distance"]).expect("in-memory write");
        for r in &self.rows {
            w.write_record([r.s, r.d1, r.d2, r.d3, r.distance].map(|v| format!("{v:e}"))).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
    }
}

/// Default ε-ladder `2^{-1}, …, 2^{-8}`.
pub fn default_ladder() -> Vec<f64> {
    (1..=8).map(|k| f64::powi(0.5, k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaylorProbeReport {
    pub k: usize,
    /// Taylor coefficients `L^j` of `ε ↦ f(x + εv)` for `j = 1..=k`.
    pub estimated: Vec<f64>,
    pub fit_rungs: Vec<f64>,
    pub ladder: Vec<f64>,
    /// Smallest rung probed; nothing below it is examined.
    pub ladder_floor: f64,
    pub ratios: Vec<f64>,
    pub slope: Option<f64>,
    pub verdict: String,
}

/// Least-squares polynomial coefficients of degree `deg`.
fn polyfit(us: &[f64], vs: &[f64], deg: usize) -> Vec<f64> {
    let d = deg.min(us.len() - 1) + 1;
    let mut a = vec![vec![0.0; d + 1]; d];
    for (u, v) in us.iter().zip(vs) {
        let pw: Vec<f64> = (0..d).map(|p| u.powi(p as i32)).collect();
        for r in 0..d {
            for c in 0..d {
                a[r][c] += pw[r] * pw[c];
            }
            a[r][d] += pw[r] * v;
        }
    }
    for col in 0..d {
        let piv = (col..d).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap_or(col);
        a.swap(col, piv);
        let p = a[col][col];
        if p == 0.0 {
            continue;
        }
        for r in 0..d {
            if r != col {
                let f = a[r][col] / p;
                for c in col..=d {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut out: Vec<f64> = (0..d).map(|r| if a[r][r] == 0.0 { 0.0 } else { a[r][d] / a[r][r] }).collect();
    out.resize(deg + 1, 0.0);
    out
}

/// Estimates `L^1..L^k` on the coarse half of the ladder and reports remainder ratios on the fine half.
///
/// Odd and even parts of `ε ↦ f(x + εv)` are fitted as polynomials in `ε²`,
/// so the estimates are exact for polynomials of degree at most `2·rungs`.
pub fn taylor_probe(
    f: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    v: &[f64],
    k: usize,
    ladder: &[f64],
) -> Result<TaylorProbeReport, FitError> {
    if !(1..=3).contains(&k) {
        return Err(FitError::Ladder(format!("k = {k} outside 1..=3")));
    }
    if ladder.len() < 4 || ladder.windows(2).any(|w| !(w[1] < w[0])) || ladder.iter().any(|e| !(*e > 0.0)) {
        return Err(FitError::Ladder("need at least 4 positive strictly decreasing rungs".into()));
    }
    if x.len() != v.len() {
        return Err(FitError::Domain("point and direction differ in length".into()));
    }
    let at = |e: f64| -> Result<f64, FitError> {
        let p: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + e * b).collect();
        let y = f(&p);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(FitError::Domain(format!("f not finite at offset {e}")))
        }
    };
    let f0 = at(0.0)?;
    let coarse = ladder.len().div_ceil(2);
    let fit = &ladder[..coarse];
    let us: Vec<f64> = fit.iter().map(|e| e * e).collect();
    let mut odd = Vec::with_capacity(coarse);
    let mut even = Vec::with_capacity(coarse);
    for &e in fit {
        let (p, m) = (at(e)?, at(-e)?);
        odd.push(0.5 * (p - m) / e);
        even.push((0.5 * (p + m) - f0) / (e * e));
    }
    let co = polyfit(&us, &odd, coarse - 1);
    let ce = polyfit(&us, &even, coarse - 1);
    let estimated: Vec<f64> = [co[0], ce[0], co[1]].into_iter().take(k).collect();
    let fine = &ladder[coarse..];
    let ratios = fine
        .iter()
        .map(|&e| {
            let taylor: f64 = estimated.iter().enumerate().map(|(j, l)| l * e.powi(j as i32 + 1)).sum();
            Ok((at(e)? - f0 - taylor).abs() / e.powi(k as i32))
        })
        .collect::<Result<Vec<f64>, FitError>>()?;
    let exact = ratios.iter().all(|r| *r <= EXACT_RATIO);
    let slope = loglog_slope(fine, &ratios);
    let decreasing = ratios.windows(2).all(|w| w[1] <= w[0]);
    let verdict = if exact || (decreasing && slope.is_some_and(|s| s >= MIN_SLOPE_TAYLOR)) {
        "consistent-with-C^k"
    } else {
        "fails"
    };
    Ok(TaylorProbeReport {
        k,
        estimated,
        fit_rungs: fit.to_vec(),
        ladder: ladder.to_vec(),
        ladder_floor: ladder[ladder.len() - 1],
        ratios,
        slope,
        verdict: verdict.to_string(),
    })
}

/// Richardson-refined central difference for the multi-index `alpha` (`|α| ≤ 2`).
pub fn partial(f: &dyn Fn(&[f64]) -> f64, x: &[f64], alpha: &[usize], h: f64) -> Result<f64, FitError> {
    let order: usize = alpha.iter().sum();
    if alpha.len() != x.len() || order > 2 {
        return Err(FitError::Domain(format!("multi-index {alpha:?} unsupported for dim {}", x.len())));
    }
    let idx: Vec<usize> = alpha.iter().enumerate().flat_map(|(i, &a)| std::iter::repeat(i).take(a)).collect();
    let eval = |shifts: &[(usize, f64)]| {
        let mut p = x.to_vec();
        for &(i, s) in shifts {
            p[i] += s;
        }
        f(&p)
    };
    let stencil = |h: f64| -> f64 {
        match idx.as_slice() {
            [] => eval(&[]),
            [i] => (eval(&[(*i, h)]) - eval(&[(*i, -h)])) / (2.0 * h),
            [i, j] if i == j => (eval(&[(*i, h)]) - 2.0 * eval(&[]) + eval(&[(*i, -h)])) / (h * h),
            [i, j] => {
                (eval(&[(*i, h), (*j, h)]) - eval(&[(*i, h), (*j, -h)]) - eval(&[(*i, -h), (*j, h)])
                    + eval(&[(*i, -h), (*j, -h)]))
                    / (4.0 * h * h)
            }
            _ => unreachable!("order checked above"),
        }
    };
    let d = if idx.is_empty() { stencil(h) } else { (4.0 * stencil(h / 2.0) - stencil(h)) / 3.0 };
    if d.is_finite() {
        Ok(d)
    } else {
        Err(FitError::Domain(format!("non-finite difference at {x:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeProbeReport {
    pub alpha: Vec<usize>,
    pub h: f64,
    pub j_list: Vec<usize>,
    pub gaps: Vec<f64>,
    pub decreasing: bool,
    pub nondecreasing: bool,
    pub first_below_tol: Option<usize>,
}

/// Finite-difference gaps `|∂^α f_j(x) − ∂^α g(x)|` along `j_list`.
pub fn derivative_convergence_probe(
    seq: &dyn Fn(usize, &[f64]) -> f64,
    g: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    alpha: &[usize],
    j_list: &[usize],
    tol: f64,
) -> Result<DerivativeProbeReport, FitError> {
    if j_list.is_empty() {
        return Err(FitError::Ladder("empty j list".into()));
    }
    let h = default_step(norm(x).max(1.0));
    let dg = partial(g, x, alpha, h)?;
    let gaps = j_list
        .iter()
        .map(|&j| Ok((partial(&|p: &[f64]| seq(j, p), x, alpha, h)? - dg).abs()))
        .collect::<Result<Vec<f64>, FitError>>()?;
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let nondecreasing = gaps.windows(2).all(|w| w[1] >= w[0]);
    let first_below_tol = j_list.iter().zip(&gaps).find(|(_, g)| **g < tol).map(|(j, _)| *j);
    Ok(DerivativeProbeReport {
        alpha: alpha.to_vec(),
        h,
        j_list: j_list.to_vec(),
        gaps,
        decreasing,
        nondecreasing,
        first_below_tol,
    })
}

/// Sawtooth of amplitude `a` and period `a²`.
pub fn sawtooth(a: f64, t: f64) -> f64 {
    let period = a * a;
    let phase = (t / period).rem_euclid(1.0);
    a * (2.0 * (phase - 0.5).abs() - 0.5)
}

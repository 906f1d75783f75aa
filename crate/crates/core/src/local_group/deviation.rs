//! Lattice maxima of the axiom defects `D₁`, `D₂`, `D₃`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GroupError, LocalGroup};
use crate::lie::norm;

/// Lattice points of `{−ρ + 2ρi/(m−1)}ⁿ` inside the closed ball of radius `ρ`, lexicographic.
pub fn lattice(dim: usize, m: usize, radius: f64) -> Vec<Vec<f64>> {
    let axis: Vec<f64> =
        if m <= 1 { vec![0.0] } else { (0..m).map(|i| -radius + 2.0 * radius * i as f64 / (m - 1) as f64).collect() };
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p: Vec<f64>| {
                axis.iter().map(move |a| {
                    let mut q = p.clone();
                    q.push(*a);
                    q
                })
            })
            .collect();
    }
    out.retain(|p| norm(p) <= radius * (1.0 + 1e-12));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub per_axis: usize,
    /// Radius of the triple grid used for `D₁`.
    pub radius_triples: f64,
    /// Radius of the point grid used for `D₂` and `D₃`.
    pub radius_points: f64,
    pub points_triples: usize,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub grid: GridSpec,
    pub argmax_d1: Vec<Vec<f64>>,
    pub argmax_d2: Vec<f64>,
    pub argmax_d3: Vec<f64>,
}

/// Larger value wins; ties go to the lower index.
fn pick(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    match a.0.total_cmp(&b.0) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => {
            if a.1 <= b.1 {
                a
            } else {
                b
            }
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// `D₁` on triples from radius `r/4`, `D₂` and `D₃` on points from radius `r/2`.
pub fn deviations(g: &dyn LocalGroup, m: usize) -> Result<DeviationReport, GroupError> {
    let r = g.radius();
    let n = g.dim();
    let tri = lattice(n, m, r / 4.0);
    let pts = lattice(n, m, r / 2.0);
    let k = tri.len();

    let pairs: Vec<Vec<f64>> =
        (0..k * k).into_par_iter().map(|idx| g.psi(&tri[idx / k], &tri[idx % k])).collect::<Result<_, _>>()?;
    let d1 = (0..k * k * k)
        .into_par_iter()
        .map(|idx| {
            let (i, j, l) = (idx / (k * k), (idx / k) % k, idx % k);
            let name = || format!("triple ({}, {}, {})", fmt(&tri[i]), fmt(&tri[j]), fmt(&tri[l]));
            let a =
                g.psi(&tri[i], &pairs[j * k + l]).map_err(|e| GroupError::DomainEscape(format!("{}: {e}", name())))?;
            let b =
                g.psi(&pairs[i * k + j], &tri[l]).map_err(|e| GroupError::DomainEscape(format!("{}: {e}", name())))?;
            Ok::<_, GroupError>((dist(&a, &b), idx))
        })
        .try_reduce(|| (0.0, usize::MAX), |a, b| Ok(pick(a, b)))?;

    let d23 = pts
        .par_iter()
        .enumerate()
        .map(|(idx, x)| {
            let inv = g.nu(x)?;
            let a = g.psi(&inv, x)?;
            let b = g.psi(x, &inv)?;
            let zero = vec![0.0; n];
            let c = g.psi(x, &zero)?;
            let d = g.psi(&zero, x)?;
            Ok::<_, GroupError>(((norm(&a).max(norm(&b)), idx), (dist(&c, x).max(dist(&d, x)), idx)))
        })
        .try_reduce(|| ((0.0, usize::MAX), (0.0, usize::MAX)), |a, b| Ok((pick(a.0, b.0), pick(a.1, b.1))))?;
    let (d2, d3) = d23;

    let at = |set: &[Vec<f64>], i: usize| set.get(i).cloned().unwrap_or_else(|| vec![0.0; n]);
    let argmax_d1 = if d1.1 == usize::MAX {
        vec![vec![0.0; n]; 3]
    } else {
        vec![at(&tri, d1.1 / (k * k)), at(&tri, (d1.1 / k) % k), at(&tri, d1.1 % k)]
    };
    Ok(DeviationReport {
        d1: d1.0,
        d2: d2.0,
        d3: d3.0,
        grid: GridSpec {
            per_axis: m,
            radius_triples: r / 4.0,
            radius_points: r / 2.0,
            points_triples: k,
            points: pts.len(),
        },
        argmax_d1,
        argmax_d2: at(&pts, d2.1),
        argmax_d3: at(&pts, d3.1),
    })
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|a| format!("{a:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Whether every deviation is strictly below `s` on the lattice.
pub fn is_s_almost(g: &dyn LocalGroup, s: f64, m: usize) -> Result<bool, GroupError> {
    let d = deviations(g, m)?;
    Ok(d.d1 < s && d.d2 < s && d.d3 < s)
}

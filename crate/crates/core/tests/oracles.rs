//! Cross-checks against independent reference computations.

use liegerm::bch::{adjoint_oracle, bch_integral, bch_truncated, QuadratureSpec};
use liegerm::lie::{norm, Bracket};
use liegerm::local_group::{
    catalan, deviations, enumerate_associations, AssocTree, LocalGroup, LocalGroupSpec, MatrixAlgebra, Perturbation,
};
use liegerm::matrix::Matrix;
use liegerm::near_fit::{extract_bracket, extract_bracket_raw, fit_group};
use liegerm::olver::{olver_demo, preset, winding, Point};

fn catalan_by_recursion(p: usize) -> u64 {
    if p == 1 {
        return 1;
    }
    (1..p).map(|k| catalan_by_recursion(k) * catalan_by_recursion(p - k)).sum()
}

fn leaves_in_order(t: &AssocTree, out: &mut Vec<usize>) {
    match t {
        AssocTree::Leaf(i) => out.push(*i),
        AssocTree::Node(a, b) => {
            leaves_in_order(a, out);
            leaves_in_order(b, out);
        }
    }
}

#[test]
fn association_counts_match_recursive_count() {
    for p in 2..=8 {
        let trees = enumerate_associations(p).unwrap();
        assert_eq!(trees.len() as u64, catalan_by_recursion(p), "p = {p}");
        assert_eq!(catalan(p - 1), catalan_by_recursion(p));
        let mut names: Vec<String> = trees.iter().map(|t| t.to_string()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), trees.len());
        for t in &trees {
            let mut seen = Vec::new();
            leaves_in_order(t, &mut seen);
            assert_eq!(seen, (seen[0]..seen[0] + p).collect::<Vec<_>>());
        }
    }
}

#[test]
fn op_norm_matches_closed_form_on_2x2() {
    let cases = [[1.0, 2.0, 3.0, 4.0], [0.0, 1.0, 0.0, 0.0], [2.0, 0.0, 0.0, -2.0], [1e-3, 5.0, -0.2, 0.7]];
    for c in cases {
        let a = Matrix::from_fn(2, |i, j| c[2 * i + j]);
        let (p, q, r) = (c[0] * c[0] + c[2] * c[2], c[0] * c[1] + c[2] * c[3], c[1] * c[1] + c[3] * c[3]);
        let top = 0.5 * (p + r) + (0.25 * (p - r) * (p - r) + q * q).sqrt();
        let est = a.op_norm();
        assert!((est.operator - top.sqrt()).abs() <= 1e-10 * top.sqrt(), "{c:?}: {} vs {}", est.operator, top.sqrt());
        assert!(est.operator <= est.frobenius);
    }
}

#[test]
fn bch_methods_agree_with_adjoint_logarithm() {
    let quad = QuadratureSpec::new(32, false).unwrap();
    for b in [Bracket::so3(), Bracket::sl2()] {
        let (x, y) = ([0.05, -0.03, 0.02], [-0.01, 0.04, 0.03]);
        let oracle = adjoint_oracle(&b, &x, &y).unwrap();
        for v in [bch_truncated(&b, &x, &y, 6).unwrap().value, bch_integral(&b, &x, &y, quad).unwrap().value] {
            let d: Vec<f64> = v.iter().zip(&oracle).map(|(a, c)| a - c).collect();
            assert!(norm(&d) < 1e-10, "{}: {}", b.name(), norm(&d));
        }
    }
}

#[test]
fn bch_matches_matrix_chart_products() {
    for alg in [MatrixAlgebra::So3, MatrixAlgebra::Sl2, MatrixAlgebra::Heisenberg] {
        let chart = LocalGroupSpec::matrix_chart(alg, 0.5).unwrap();
        let group = LocalGroupSpec::bch(alg.bracket(), 0.5).unwrap();
        let (x, y) = ([0.1, 0.05, -0.08], [-0.02, 0.09, 0.04]);
        let a = chart.psi(&x, &y).unwrap();
        let b = group.psi(&x, &y).unwrap();
        let d: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm(&d) < 1e-12, "{alg:?}: {}", norm(&d));
    }
}

#[test]
fn deviations_grow_under_grid_refinement() {
    let base = LocalGroupSpec::bch(Bracket::so3(), 0.5).unwrap();
    let g = LocalGroupSpec::perturbed(base, 1e-2, Perturbation::Cubic).unwrap();
    let coarse = deviations(&g, 3).unwrap();
    let fine = deviations(&g, 5).unwrap();
    assert!(fine.d1 >= coarse.d1 && fine.d2 >= coarse.d2 && fine.d3 >= coarse.d3, "{coarse:?} {fine:?}");
}

#[test]
fn raw_extraction_error_is_quadratic_in_h_on_sl2() {
    let g = LocalGroupSpec::bch(Bracket::sl2(), 0.5).unwrap();
    let truth = Bracket::sl2();
    let err = |h: f64| {
        let b = extract_bracket_raw(&g, h).unwrap();
        b.tensor().iter().zip(truth.tensor()).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max)
    };
    let ratio = err(0.04) / err(0.02);
    assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    let refined = extract_bracket(&g, 0.02).unwrap();
    let rich = refined.tensor().iter().zip(truth.tensor()).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
    assert!(rich < err(0.02) * 1e-2, "{rich}");
}

#[test]
fn self_fit_recovers_exact_groups() {
    for alg in [MatrixAlgebra::So3, MatrixAlgebra::Sl2, MatrixAlgebra::Heisenberg, MatrixAlgebra::Affine1] {
        let chart = LocalGroupSpec::matrix_chart(alg, 0.5).unwrap();
        let fit = fit_group(&chart, 3, None).unwrap();
        assert!(fit.distance <= 1e-8, "{alg:?}: {}", fit.distance);
    }
}

fn crossing_winding(path: &[Point], x0: Point) -> i64 {
    let mut w = 0;
    for k in 0..path.len() {
        let (a, b) = (path[k], path[(k + 1) % path.len()]);
        let (ay, by) = (a[1] - x0[1], b[1] - x0[1]);
        let cross = (a[0] - x0[0]) * (b[1] - x0[1]) - (b[0] - x0[0]) * (a[1] - x0[1]);
        if ay <= 0.0 && by > 0.0 && cross > 0.0 {
            w += 1;
        } else if ay > 0.0 && by <= 0.0 && cross < 0.0 {
            w -= 1;
        }
    }
    w
}

#[test]
fn winding_matches_crossing_count() {
    let star: Vec<Point> = (0..10)
        .map(|k| {
            let t = k as f64 * 4.0 * std::f64::consts::PI / 10.0;
            [t.cos(), t.sin()]
        })
        .collect();
    let square = vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
    let reversed: Vec<Point> = square.iter().rev().copied().collect();
    for (path, x0) in [
        (&square, [0.1, 0.2]),
        (&reversed, [0.0, 0.3]),
        (&square, [3.0, 0.0]),
        (&star, [0.01, 0.02]),
        (&star, [0.7, 0.1]),
    ] {
        let mut closed = path.clone();
        closed.push(path[0]);
        assert_eq!(winding(&closed, x0).unwrap(), crossing_winding(path, x0), "{x0:?}");
    }
}

#[test]
fn preset_loops_agree_with_crossing_count() {
    for name in ["shipped", "mirrored", "control"] {
        let p = preset(name).unwrap();
        let r = olver_demo(p.x0, &p.tuple, p.radius).unwrap();
        let left = &r.associations.last().unwrap().point.witness_path;
        let right = &r.associations[0].point.witness_path;
        let mut lp = left.clone();
        lp.extend(right.iter().rev().skip(1));
        lp.pop();
        assert_eq!(r.loop_winding, crossing_winding(&lp, p.x0), "{name}");
        assert_eq!(r.sheet_left_minus_right, r.loop_winding, "{name}");
    }
}

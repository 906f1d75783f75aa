use proptest::prelude::*;

use liegerm::bch::{bch_integral, verify_group_axioms, QuadratureSpec};
use liegerm::germ::{GermExpr, Layered};
use liegerm::lie::{check_intertwining, norm, Bracket};
use liegerm::matrix::Matrix;
use liegerm::olver::{olver_demo, preset, winding, Point};

fn small_vec(r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..r, 3)
}

fn bracket() -> impl Strategy<Value = Bracket> {
    prop_oneof![Just(Bracket::so3()), Just(Bracket::sl2()), Just(Bracket::heisenberg())]
}

fn expr() -> impl Strategy<Value = GermExpr> {
    let leaf = prop_oneof![Just(GermExpr::Var), (1u32..400).prop_map(|k| GermExpr::Const(k as f64 / 8.0))];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(GermExpr::Sum),
            prop::collection::vec(inner.clone(), 2..4).prop_map(GermExpr::Prod),
            (inner.clone(), -30i32..30).prop_map(|(e, r)| GermExpr::Pow(Box::new(e), r as f64 / 4.0)),
            inner.clone().prop_map(|e| GermExpr::Exp(Box::new(e))),
            inner.clone().prop_map(|e| GermExpr::Log(Box::new(e))),
            inner.clone().prop_map(|e| GermExpr::Recip(Box::new(e))),
            inner.clone().prop_map(|e| GermExpr::Neg(Box::new(e))),
            (inner.clone(), inner).prop_map(|(f, g)| GermExpr::Compose(Box::new(f), Box::new(g))),
        ]
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn h_of_x_and_minus_x_vanishes(b in bracket(), x in small_vec(0.4)) {
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let h = bch_integral(&b, &x, &neg, QuadratureSpec::new(16, false).unwrap()).unwrap().value;
        prop_assert!(norm(&h) <= 1e-15, "{h:?}");
        let zero = vec![0.0; 3];
        let h = bch_integral(&b, &x, &zero, QuadratureSpec::new(16, false).unwrap()).unwrap().value;
        let d: Vec<f64> = h.iter().zip(&x).map(|(a, c)| a - c).collect();
        prop_assert!(norm(&d) <= 1e-15 * norm(&x).max(1.0));
    }

    #[test]
    fn small_triples_satisfy_group_axioms(b in bracket(), x in small_vec(0.05), y in small_vec(0.05), z in small_vec(0.05)) {
        let r = verify_group_axioms(&b, &x, &y, &z, 1e-7).unwrap();
        prop_assert!(r.pass, "{r:?}");
    }

    #[test]
    fn intertwining_holds_for_random_triples(
        a in prop::collection::vec(-0.5f64..0.5, 9),
        v in prop::collection::vec(-0.3f64..0.3, 9),
        w in prop::collection::vec(-1.0f64..1.0, 9),
    ) {
        let m = |d: &[f64]| Matrix::from_fn(3, |i, j| d[3 * i + j]);
        let (g, v) = (m(&a).exp().unwrap(), m(&v));
        prop_assume!(v.frobenius() <= 1.0);
        let r = check_intertwining(&g, &v, &m(&w), 1e-9).unwrap();
        prop_assert!(r.pass, "{r:?}");
    }

    #[test]
    fn layered_arithmetic_tracks_f64(a in -1e6f64..1e6, b in -1e6f64..1e6, t in -50f64..50.0) {
        let (la, lb) = (Layered::from_f64(a).unwrap(), Layered::from_f64(b).unwrap());
        prop_assert!(close(la.mul(&lb).unwrap().to_f64().unwrap(), a * b, 1e-12));
        let sum = la.add(&lb).unwrap().to_f64().unwrap();
        prop_assert!((sum - (a + b)).abs() <= 1e-12 * (a.abs() + b.abs()).max(1e-300));
        prop_assert!(close(Layered::from_f64(t).unwrap().exp().unwrap().to_f64().unwrap(), t.exp(), 1e-12));
        prop_assume!(a != 0.0);
        prop_assert!(close(la.abs().ln().unwrap().to_f64().unwrap(), a.abs().ln(), 1e-12));
        prop_assert!(close(la.recip().unwrap().to_f64().unwrap(), 1.0 / a, 1e-15));
        prop_assert_eq!(la.total_cmp(&lb), a.total_cmp(&b));
    }

    #[test]
    fn layered_log_view_of_tiny_exponentials(t in 10f64..1e12) {
        let tiny = Layered::from_f64(-t).unwrap().exp().unwrap();
        prop_assert!(close(tiny.view(1).unwrap(), -t, 1e-15));
        prop_assert!(tiny.signum() == 1);
    }

    #[test]
    fn germ_syntax_round_trips(e in expr()) {
        let text = e.to_string();
        let back = GermExpr::parse(&text).unwrap();
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn winding_is_additive_under_loop_reversal(pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..9)) {
        let path: Vec<Point> = pts.iter().map(|&(x, y)| [x, y]).chain(std::iter::once([pts[0].0, pts[0].1])).collect();
        let x0 = [0.013, -0.007];
        let forward = winding(&path, x0);
        prop_assume!(forward.is_ok());
        let reversed: Vec<Point> = path.iter().rev().copied().collect();
        prop_assert_eq!(winding(&reversed, x0).unwrap(), -forward.unwrap());
    }

    #[test]
    fn jittered_shipped_tuple_keeps_its_monodromy(j in prop::collection::vec(-1e-3f64..1e-3, 8)) {
        let p = preset("shipped").unwrap();
        let tuple: Vec<Point> = p.tuple.iter().enumerate().map(|(k, q)| [q[0] + j[2 * k], q[1] + j[2 * k + 1]]).collect();
        let r = olver_demo(p.x0, &tuple, p.radius).unwrap();
        prop_assert_eq!(r.loop_winding, 1);
        prop_assert_eq!(r.sheet_left_minus_right, r.loop_winding);
        prop_assert!(r.base_spread <= 1e-14);
    }
}

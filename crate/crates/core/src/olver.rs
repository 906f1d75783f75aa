//! Lifted products on the universal cover of a punctured disc in `(ℝ², +)`.
//!
//! A lifted point carries an explicit witness polyline from `0` to its base;
//! its sheet is the winding of that polyline closed by the straight segment
//! back to `0`. Products concatenate witnesses, placing the deeper operand's
//! path first so that different associations trace different polygons.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::local_group::{enumerate_associations, AssocTree, GroupError};

/// Minimum distance between the puncture and any path segment.
pub const CLEARANCE: f64 = 1e-9;
const INTEGER_TOL: f64 = 1e-6;

pub type Point = [f64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OlverError {
    #[error("puncture-on-path: segment {from:?} -> {to:?} passes within {distance:.3e} of the puncture")]
    PunctureOnPath { from: Point, to: Point, distance: f64 },
    #[error("non-integer-winding: {0:.9}")]
    NonIntegerWinding(f64),
    #[error("point {0:?} outside radius {1}")]
    OutOfRadius(Point, f64),
    #[error("path needs at least two vertices")]
    Degenerate,
    #[error("association {tree}: {source}")]
    InTree { tree: String, source: Box<OlverError> },
    #[error(transparent)]
    Group(#[from] GroupError),
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = sub(b, a);
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0) };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    let e = sub(p, q);
    (e[0] * e[0] + e[1] * e[1]).sqrt()
}

fn check_clearance(path: &[Point], x0: Point) -> Result<(), OlverError> {
    for w in path.windows(2) {
        let distance = segment_distance(x0, w[0], w[1]);
        if distance < CLEARANCE {
            return Err(OlverError::PunctureOnPath { from: w[0], to: w[1], distance });
        }
    }
    if path.len() == 1 && segment_distance(x0, path[0], path[0]) < CLEARANCE {
        return Err(OlverError::PunctureOnPath { from: path[0], to: path[0], distance: 0.0 });
    }
    Ok(())
}

/// Winding number of a closed polyline around `x0`.
pub fn winding(path: &[Point], x0: Point) -> Result<i64, OlverError> {
    if path.len() < 2 {
        return Err(OlverError::Degenerate);
    }
    check_clearance(path, x0)?;
    let mut total = 0.0;
    for w in path.windows(2) {
        let a = sub(w[0], x0);
        let b = sub(w[1], x0);
        let cross = a[0] * b[1] - a[1] * b[0];
        let dot = a[0] * b[0] + a[1] * b[1];
        total += cross.atan2(dot);
    }
    let turns = total / (2.0 * PI);
    let rounded = turns.round();
    if (turns - rounded).abs() > INTEGER_TOL {
        return Err(OlverError::NonIntegerWinding(turns));
    }
    Ok(rounded as i64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveredPoint {
    pub base: Point,
    pub sheet: i64,
    pub witness_path: Vec<Point>,
    /// Product nesting depth; lifted points have depth 0.
    pub depth: usize,
}

fn concat(a: &[Point], b: &[Point]) -> Vec<Point> {
    let mut out = a.to_vec();
    for p in b {
        if out.last() != Some(p) {
            out.push(*p);
        }
    }
    out
}

/// Covering of the punctured disc `{|x| ≤ r} ∖ {x0}` based at `0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cover {
    pub x0: Point,
    pub radius: f64,
}

impl Cover {
    pub fn new(x0: Point, radius: f64) -> Result<Self, OlverError> {
        if segment_distance(x0, [0.0, 0.0], [0.0, 0.0]) < CLEARANCE {
            return Err(OlverError::PunctureOnPath { from: [0.0; 2], to: [0.0; 2], distance: 0.0 });
        }
        Ok(Self { x0, radius })
    }

    fn check_base(&self, p: Point) -> Result<(), OlverError> {
        if (p[0] * p[0] + p[1] * p[1]).sqrt() > self.radius * (1.0 + 1e-12) {
            return Err(OlverError::OutOfRadius(p, self.radius));
        }
        Ok(())
    }

    /// Sheet of a witness path: winding of the path closed by the segment back to `0`.
    pub fn sheet_of(&self, witness: &[Point]) -> Result<i64, OlverError> {
        let mut closed = witness.to_vec();
        closed.push([0.0, 0.0]);
        winding(&closed, self.x0)
    }

    /// Canonical lift on sheet 0 along the straight segment.
    pub fn lift(&self, x: Point) -> Result<CoveredPoint, OlverError> {
        self.check_base(x)?;
        let witness_path = vec![[0.0, 0.0], x];
        check_clearance(&witness_path, self.x0)?;
        Ok(CoveredPoint { base: x, sheet: 0, witness_path, depth: 0 })
    }

    pub fn lifted_product(&self, a: &CoveredPoint, b: &CoveredPoint) -> Result<CoveredPoint, OlverError> {
        let base = add(a.base, b.base);
        self.check_base(base)?;
        let witness_path = if b.depth > a.depth {
            let shifted: Vec<Point> = a.witness_path.iter().map(|p| add(*p, b.base)).collect();
            concat(&b.witness_path, &shifted)
        } else {
            let shifted: Vec<Point> = b.witness_path.iter().map(|p| add(*p, a.base)).collect();
            concat(&a.witness_path, &shifted)
        };
        check_clearance(&witness_path, self.x0)?;
        let sheet = self.sheet_of(&witness_path)?;
        Ok(CoveredPoint { base, sheet, witness_path, depth: 1 + a.depth.max(b.depth) })
    }

    /// Re-derives the sheet from the witness path.
    pub fn verify(&self, p: &CoveredPoint) -> Result<bool, OlverError> {
        Ok(p.witness_path.first() == Some(&[0.0, 0.0])
            && p.witness_path.last() == Some(&p.base)
            && self.sheet_of(&p.witness_path)? == p.sheet)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssocLift {
    pub tree: AssocTree,
    pub point: CoveredPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftReport {
    pub x0: Point,
    pub radius: f64,
    pub tuple: Vec<Point>,
    pub convention: String,
    pub associations: Vec<AssocLift>,
    /// Winding of the left-nested path followed by the reversed right-nested path.
    pub loop_winding: i64,
    pub sheet_left_minus_right: i64,
    /// Largest distance between any two downstairs bases.
    pub base_spread: f64,
}

pub const CONVENTION: &str = "canonical lift along the straight segment from 0; products place the deeper operand's witness first (left operand on ties)";

/// Lifts every association of `tuple` and compares the extreme ones.
pub fn olver_demo(x0: Point, tuple: &[Point], radius: f64) -> Result<LiftReport, OlverError> {
    let cover = Cover::new(x0, radius)?;
    let trees = enumerate_associations(tuple.len())?;
    let lifts = tuple.iter().map(|x| cover.lift(*x)).collect::<Result<Vec<_>, _>>()?;
    let mut associations = Vec::with_capacity(trees.len());
    for tree in trees {
        let point = tree
            .eval(&lifts, &mut |a: &CoveredPoint, b: &CoveredPoint, _: &AssocTree| cover.lifted_product(a, b))
            .map_err(|e| OlverError::InTree { tree: tree.to_string(), source: Box::new(e) })?;
        associations.push(AssocLift { tree, point });
    }
    // canonical order puts the right-nested tree first and the left-nested tree last
    let right = &associations[0].point;
    let left = &associations[associations.len() - 1].point;
    let mut loop_path = left.witness_path.clone();
    loop_path.extend(right.witness_path.iter().rev().skip(1));
    let loop_winding = winding(&loop_path, x0)?;
    let mut base_spread: f64 = 0.0;
    for a in &associations {
        for b in &associations {
            let d = sub(a.point.base, b.point.base);
            base_spread = base_spread.max((d[0] * d[0] + d[1] * d[1]).sqrt());
        }
    }
    Ok(LiftReport {
        x0,
        radius,
        tuple: tuple.to_vec(),
        convention: CONVENTION.to_string(),
        sheet_left_minus_right: left.sheet - right.sheet,
        associations,
        loop_winding,
        base_spread,
    })
}

/// Named demo configurations: `(x0, tuple, radius)`.
pub struct Preset {
    pub name: &'static str,
    pub x0: Point,
    pub tuple: [Point; 4],
    pub radius: f64,
}

pub const PRESETS: [Preset; 3] = [
    // skewed square: every partial-product segment stays clear of x0
    Preset {
        name: "shipped",
        x0: [0.05, 0.05],
        tuple: [[0.2, 0.0], [0.02, 0.2], [-0.2, 0.0], [-0.02, -0.2]],
        radius: 0.5,
    },
    // mirror image across the diagonal through x0
    Preset {
        name: "mirrored",
        x0: [0.05, 0.05],
        tuple: [[0.0, 0.2], [0.2, 0.02], [0.0, -0.2], [-0.2, -0.02]],
        radius: 0.5,
    },
    // every vertex has x + y ≤ 0 while x0 has x + y = 0.1
    Preset {
        name: "control",
        x0: [0.05, 0.05],
        tuple: [[-0.1, 0.05], [0.05, -0.1], [0.1, -0.15], [-0.15, 0.1]],
        radius: 0.5,
    },
];

pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

/// CSV with columns `tree,vertex,x,y` for every witness path.
pub fn write_polylines_csv<W: Write>(report: &LiftReport, w: W) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["tree", "vertex", "x", "y"])?;
    for a in &report.associations {
        for (i, p) in a.point.witness_path.iter().enumerate() {
            out.write_record([a.tree.to_string(), i.to_string(), format!("{:?}", p[0]), format!("{:?}", p[1])])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_winding() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]];
        assert_eq!(winding(&sq, [0.25, 0.25]), Ok(1));
        assert_eq!(winding(&sq, [10.0, 10.0]), Ok(0));
        let rev: Vec<Point> = sq.iter().rev().copied().collect();
        assert_eq!(winding(&rev, [0.25, 0.25]), Ok(-1));
    }

    #[test]
    fn winding_errors() {
        let open = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]];
        assert!(matches!(winding(&open, [0.6, 0.3]), Err(OlverError::NonIntegerWinding(_))));
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 0.0]];
        assert!(matches!(winding(&sq, [0.5, 0.0]), Err(OlverError::PunctureOnPath { .. })));
    }

    #[test]
    fn lift_conventions() {
        let c = Cover::new([0.05, 0.05], 0.5).unwrap();
        let z = c.lift([0.0, 0.0]).unwrap();
        assert_eq!(z.sheet, 0);
        assert_eq!(c.lift([0.3, -0.1]).unwrap().sheet, 0);
        assert!(matches!(c.lift([0.1, 0.1]), Err(OlverError::PunctureOnPath { .. })));
    }

    #[test]
    fn product_examples() {
        let c = Cover::new([0.05, 0.05], 0.5).unwrap();
        let x = c.lift([0.2, 0.0]).unwrap();
        let e = c.lift([0.0, 0.0]).unwrap();
        let p = c.lifted_product(&x, &e).unwrap();
        assert_eq!((p.base, p.sheet), (x.base, x.sheet));
        let col = c.lifted_product(&c.lift([0.1, -0.1]).unwrap(), &c.lift([0.1, -0.1]).unwrap()).unwrap();
        assert_eq!(col.sheet, 0);
        // closing segment (0.2, 0.2) → 0 runs through x0
        let err = c.lifted_product(&x, &c.lift([0.0, 0.2]).unwrap()).unwrap_err();
        assert!(matches!(err, OlverError::PunctureOnPath { .. }));
        let tri = [[0.0, 0.0], [0.2, 0.0], [0.2, 0.2], [0.0, 0.0]];
        let c2 = Cover::new([0.12, 0.05], 0.5).unwrap();
        let t2 = c2.lifted_product(&c2.lift([0.2, 0.0]).unwrap(), &c2.lift([0.0, 0.2]).unwrap()).unwrap();
        assert_eq!(t2.sheet, winding(&tri, [0.12, 0.05]).unwrap());
        assert_eq!(t2.sheet, 1);
        assert!(c2.verify(&t2).unwrap());
    }

    #[test]
    fn shipped_preset_monodromy() {
        let p = preset("shipped").unwrap();
        let r = olver_demo(p.x0, &p.tuple, p.radius).unwrap();
        assert_eq!(r.loop_winding.abs(), 1);
        assert_eq!(r.sheet_left_minus_right, r.loop_winding);
        assert!(r.base_spread <= 1e-14);
        let m = preset("mirrored").unwrap();
        let rm = olver_demo(m.x0, &m.tuple, m.radius).unwrap();
        assert_eq!(rm.loop_winding, -r.loop_winding);
        assert_eq!(rm.sheet_left_minus_right, -r.sheet_left_minus_right);
    }

    #[test]
    fn control_preset_single_sheet() {
        let p = preset("control").unwrap();
        let r = olver_demo(p.x0, &p.tuple, p.radius).unwrap();
        assert_eq!(r.loop_winding, 0);
        assert!(r.associations.iter().all(|a| a.point.sheet == r.associations[0].point.sheet));
    }

    #[test]
    fn csv_has_every_vertex() {
        let p = preset("shipped").unwrap();
        let r = olver_demo(p.x0, &p.tuple, p.radius).unwrap();
        let mut buf = Vec::new();
        write_polylines_csv(&r, &mut buf).unwrap();
        let rows = String::from_utf8(buf).unwrap().lines().count() - 1;
        assert_eq!(rows, r.associations.iter().map(|a| a.point.witness_path.len()).sum::<usize>());
    }
}

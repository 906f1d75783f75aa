//! Association trees and k-fold association defects.

use std::fmt;

use serde::Serialize;

use super::{GroupError, LocalGroup};
use crate::lie::norm;

pub const MIN_ARITY: usize = 2;
pub const MAX_ARITY: usize = 8;

/// Full binary tree over leaves labelled `1..=p` in order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AssocTree {
    Leaf(usize),
    Node(Box<AssocTree>, Box<AssocTree>),
}

impl AssocTree {
    pub fn leaves(&self) -> usize {
        match self {
            Self::Leaf(_) => 1,
            Self::Node(a, b) => a.leaves() + b.leaves(),
        }
    }

    fn labels(&self, out: &mut Vec<usize>) {
        match self {
            Self::Leaf(i) => out.push(*i),
            Self::Node(a, b) => {
                a.labels(out);
                b.labels(out);
            }
        }
    }

    /// Leaf labels left to right.
    pub fn leaf_labels(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.labels(&mut out);
        out
    }

    /// Evaluates with `mul`, which also receives the subtree being formed.
    pub fn eval<T, E>(&self, leaves: &[T], mul: &mut impl FnMut(&T, &T, &AssocTree) -> Result<T, E>) -> Result<T, E>
    where
        T: Clone,
    {
        match self {
            Self::Leaf(i) => Ok(leaves[*i - 1].clone()),
            Self::Node(a, b) => {
                let l = a.eval(leaves, mul)?;
                let r = b.eval(leaves, mul)?;
                mul(&l, &r, self)
            }
        }
    }

    /// Nesting depth; a leaf has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Self::Leaf(_) => 0,
            Self::Node(a, b) => 1 + a.depth().max(b.depth()),
        }
    }
}

impl fmt::Display for AssocTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn part(t: &AssocTree, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match t {
                AssocTree::Leaf(_) => write!(f, "{t}"),
                AssocTree::Node(..) => write!(f, "({t})"),
            }
        }
        match self {
            Self::Leaf(i) => write!(f, "x{i}"),
            Self::Node(a, b) => {
                part(a, f)?;
                part(b, f)
            }
        }
    }
}

impl Serialize for AssocTree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

fn trees(lo: usize, hi: usize) -> Vec<AssocTree> {
    if hi - lo == 1 {
        return vec![AssocTree::Leaf(lo)];
    }
    let mut out = Vec::new();
    for split in lo + 1..hi {
        let left = trees(lo, split);
        let right = trees(split, hi);
        for l in &left {
            for r in &right {
                out.push(AssocTree::Node(Box::new(l.clone()), Box::new(r.clone())));
            }
        }
    }
    out
}

/// All full binary trees on `p` ordered leaves, split point ascending at every level.
pub fn enumerate_associations(p: usize) -> Result<Vec<AssocTree>, GroupError> {
    if !(MIN_ARITY..=MAX_ARITY).contains(&p) {
        return Err(GroupError::ArityOutOfRange(p));
    }
    Ok(trees(1, p + 1))
}

pub fn catalan(n: usize) -> u64 {
    let mut c = 1u64;
    for k in 0..n as u64 {
        c = c * 2 * (2 * k + 1) / (k + 2);
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssocValue {
    pub tree: AssocTree,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssocDefect {
    pub p: usize,
    pub input_radius: f64,
    pub max_distance: f64,
    pub values: Vec<AssocValue>,
}

/// Evaluates every association of `tuple` and the largest pairwise distance.
///
/// Inputs must lie in the ball of radius `r/2^{p−1}`.
pub fn assoc_defect(g: &dyn LocalGroup, tuple: &[Vec<f64>]) -> Result<AssocDefect, GroupError> {
    let p = tuple.len();
    let list = enumerate_associations(p)?;
    let input_radius = g.radius() / f64::powi(2.0, p as i32 - 1);
    for (i, x) in tuple.iter().enumerate() {
        if x.len() != g.dim() {
            return Err(GroupError::Dimension { expected: g.dim(), got: x.len() });
        }
        if norm(x) > input_radius * (1.0 + 1e-12) {
            return Err(GroupError::DomainEscape(format!(
                "x{} has norm {:.6e} > r/2^{} = {input_radius:.6e}",
                i + 1,
                norm(x),
                p - 1
            )));
        }
    }
    let mut values = Vec::with_capacity(list.len());
    for tree in list {
        let value = tree.eval(tuple, &mut |a: &Vec<f64>, b: &Vec<f64>, step: &AssocTree| {
            g.psi(a, b).map_err(|e| GroupError::DomainEscape(format!("tree {tree} at step {step}: {e}")))
        })?;
        values.push(AssocValue { tree, value });
    }
    let mut max_distance: f64 = 0.0;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let d: f64 = values[i].value.iter().zip(&values[j].value).map(|(a, b)| (a - b) * (a - b)).sum();
            max_distance = max_distance.max(d.sqrt());
        }
    }
    Ok(AssocDefect { p, input_radius, max_distance, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::Bracket;
    use crate::local_group::{LocalGroupSpec, Perturbation};

    #[test]
    fn catalan_counts() {
        let counts: Vec<usize> = (2..=8).map(|p| enumerate_associations(p).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 2, 5, 14, 42, 132, 429]);
        assert_eq!(catalan(3), 5);
        assert!(enumerate_associations(1).is_err());
        assert!(enumerate_associations(9).is_err());
    }

    #[test]
    fn canonical_order_p4() {
        let names: Vec<String> = enumerate_associations(4).unwrap().iter().map(|t| t.to_string()).collect();
        assert_eq!(names, ["x1(x2(x3x4))", "x1((x2x3)x4)", "(x1x2)(x3x4)", "(x1(x2x3))x4", "((x1x2)x3)x4"]);
    }

    #[test]
    fn leaves_in_order() {
        for t in enumerate_associations(6).unwrap() {
            assert_eq!(t.leaf_labels(), (1..=6).collect::<Vec<_>>());
        }
    }

    #[test]
    fn defect_examples() {
        let g = LocalGroupSpec::bch(Bracket::so3(), 0.5).unwrap();
        let tuple = vec![vec![0.02, 0.01, 0.0], vec![0.0, 0.03, -0.01], vec![-0.02, 0.0, 0.04], vec![0.03, 0.03, 0.0]];
        assert!(assoc_defect(&g, &tuple).unwrap().max_distance <= 1e-8);
        assert_eq!(assoc_defect(&g, &tuple[..2]).unwrap().max_distance, 0.0);
        let eps = 1e-3;
        let pg = LocalGroupSpec::perturbed(g, eps, Perturbation::Quadratic).unwrap();
        let d = assoc_defect(&pg, &tuple).unwrap().max_distance;
        assert!(d > 0.0 && d <= 5.0 * eps * 4.0, "{d}");
    }

    #[test]
    fn defect_input_radius_enforced() {
        let g = LocalGroupSpec::bch(Bracket::so3(), 0.5).unwrap();
        let tuple = vec![vec![0.1, 0.0, 0.0]; 4];
        assert!(matches!(assoc_defect(&g, &tuple), Err(GroupError::DomainEscape(ref m)) if m.contains("x1")));
    }
}

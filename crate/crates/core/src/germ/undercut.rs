//! Continuous piecewise-affine functions lying below monotone step data.

use serde::{Deserialize, Serialize};

use super::GermError;

/// Jump point `p` with one-sided limits `left = m(p⁻)` and `right = m(p⁺)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepKnot {
    pub p: f64,
    pub left: f64,
    pub right: f64,
}

fn validate(data: &[StepKnot]) -> Result<(), GermError> {
    if data.is_empty() {
        return Err(GermError::Steps("no knots".into()));
    }
    for (i, k) in data.iter().enumerate() {
        if !(k.p > 0.0 && k.p.is_finite() && k.left.is_finite() && k.right.is_finite()) {
            return Err(GermError::Steps(format!("knot {i}: non-finite or non-positive entry")));
        }
        if k.left > k.right {
            return Err(GermError::Steps(format!(
                "knot {i} at p = {}: left limit {} above right limit {}",
                k.p, k.left, k.right
            )));
        }
    }
    for (i, w) in data.windows(2).enumerate() {
        if !(w[1].p < w[0].p) {
            return Err(GermError::Steps(format!("knots {i} and {}: jump points must decrease strictly", i + 1)));
        }
        if w[1].right > w[0].left {
            return Err(GermError::Steps(format!("knots {i} and {}: values are not monotone", i + 1)));
        }
    }
    let last = data[data.len() - 1];
    if !(last.left > 0.0) {
        return Err(GermError::Steps("values must stay positive".into()));
    }
    Ok(())
}

/// The monotone function the data describe: affine from `(p_{j+1}, m(p_{j+1}⁺))`
/// to `(p_j, m(p_j⁻))`, affine from the origin below the smallest jump, constant
/// above the largest. At a jump it takes the right limit.
pub fn step_value(data: &[StepKnot], t: f64) -> f64 {
    let first = data[0];
    if t >= first.p {
        return first.right;
    }
    for w in data.windows(2) {
        let (hi, lo) = (w[0], w[1]);
        if t >= lo.p {
            if t == lo.p {
                return lo.right;
            }
            return lo.right + (hi.left - lo.right) * (t - lo.p) / (hi.p - lo.p);
        }
    }
    let last = data[data.len() - 1];
    if t <= 0.0 {
        0.0
    } else {
        last.left * t / last.p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlUndercut {
    /// Breakpoints in increasing `t`, starting at the origin.
    pub knots: Vec<(f64, f64)>,
}

impl PlUndercut {
    pub fn eval(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        for w in k.windows(2) {
            if t <= w[1].0 {
                return w[0].1 + (w[1].1 - w[0].1) * (t - w[0].0) / (w[1].0 - w[0].0);
            }
        }
        k[k.len() - 1].1
    }
}

/// Joins `(p_j, m(p_j⁻))` to the graph at the midpoint `q_j` of `(p_j, p_{j−1})`
/// and follows the graph from there to the next jump.
pub fn pl_undercut(data: &[StepKnot]) -> Result<PlUndercut, GermError> {
    validate(data)?;
    let mut knots = vec![(0.0, 0.0)];
    for (j, k) in data.iter().enumerate().rev() {
        knots.push((k.p, k.left));
        let upper = if j == 0 { 1.5 * k.p } else { 0.5 * (k.p + data[j - 1].p) };
        knots.push((upper, step_value(data, upper)));
    }
    Ok(PlUndercut { knots })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_check(data: &[StepKnot], u: &PlUndercut) {
        let top = 2.0 * data[0].p;
        for i in 1..=1000 {
            let t = top * i as f64 / 1000.0;
            assert!(u.eval(t) <= step_value(data, t) + 1e-15, "t = {t}: {} > {}", u.eval(t), step_value(data, t));
        }
        for k in data {
            assert!(u.eval(k.p) <= k.left + 1e-15);
        }
    }

    #[test]
    fn continuous_input_is_reproduced() {
        let data: Vec<StepKnot> =
            [0.8, 0.4, 0.2, 0.1].iter().map(|&p: &f64| StepKnot { p, left: p.sqrt(), right: p.sqrt() }).collect();
        let u = pl_undercut(&data).unwrap();
        dense_check(&data, &u);
        for i in 1..100 {
            let t = 0.8 * i as f64 / 100.0;
            assert!((u.eval(t) - step_value(&data, t)).abs() < 1e-15);
        }
    }

    #[test]
    fn single_jump() {
        let data = [StepKnot { p: 0.5, left: 0.2, right: 0.4 }];
        let u = pl_undercut(&data).unwrap();
        assert_eq!(u.eval(0.5), 0.2);
        let eps = 1e-9;
        assert!((u.eval(0.5 + eps) - u.eval(0.5 - eps)).abs() < 1e-8);
        dense_check(&data, &u);
    }

    #[test]
    fn staircase() {
        let data: Vec<StepKnot> = (1..=12)
            .map(|k| StepKnot { p: 1.0 / k as f64, left: 1.0 / (k + 1) as f64, right: 1.0 / k as f64 })
            .collect();
        let u = pl_undercut(&data).unwrap();
        dense_check(&data, &u);
        assert!(u.knots.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 >= w[0].1));
    }

    #[test]
    fn inconsistent_data_rejected() {
        assert!(pl_undercut(&[StepKnot { p: 0.5, left: 0.4, right: 0.2 }]).is_err());
        assert!(pl_undercut(&[StepKnot { p: 0.5, left: 0.2, right: 0.3 }, StepKnot { p: 0.6, left: 0.1, right: 0.1 }])
            .is_err());
        assert!(pl_undercut(&[
            StepKnot { p: 0.5, left: 0.2, right: 0.3 },
            StepKnot { p: 0.4, left: 0.1, right: 0.25 }
        ])
        .is_err());
        assert!(pl_undercut(&[]).is_err());
    }
}

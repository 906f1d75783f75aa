//! Dominating power series `u(x) = Σ (x/b_j)^{n_j}` with `a_j = e^j`, `b_j = a_j/q`.

use serde::{Deserialize, Serialize};

use super::{Germ, GermError, Layered, Site};

pub const MAX_TERMS: usize = 60;
pub const MAX_EXPONENT: f64 = 4_611_686_018_427_387_904.0; // 2^62
/// Above 2^52 the quotient is inflated by this relative pad before the ceiling.
pub const CEIL_PAD: f64 = 1e-14;
pub const SAMPLES_PER_INTERVAL: usize = 10;
pub const LINK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardySeries {
    pub q: f64,
    #[serde(rename = "J")]
    pub terms: usize,
    /// `n[j−1] = n_j`.
    pub n: Vec<u64>,
}

/// `⌈ln m(a_{j+1}) / ln q⌉ + j` for `j = 1..=terms`.
pub fn hardy_dominator(m: &Germ, q: f64, terms: usize) -> Result<HardySeries, GermError> {
    if m.site != Site::AtInfinity {
        return Err(GermError::Site("dominator needs a germ at infinity".into()));
    }
    if !(q > 1.0 && q.is_finite()) {
        return Err(GermError::Parameter(format!("q = {q} must exceed 1")));
    }
    if !(1..=MAX_TERMS).contains(&terms) {
        return Err(GermError::Parameter(format!("J = {terms} outside 1..={MAX_TERMS}")));
    }
    let inv_ln_q = 1.0 / q.ln();
    let mut n = Vec::with_capacity(terms);
    let mut prev: Option<Layered> = None;
    for j in 1..=terms {
        let lm = m.eval(((j + 1) as f64).exp())?.ln()?;
        if let Some(p) = prev {
            if lm.total_cmp(&p) != std::cmp::Ordering::Greater {
                return Err(GermError::NotMonotone(format!("m(a_{}) <= m(a_{j})", j + 1)));
            }
        }
        prev = Some(lm);
        let quotient = lm.scale(inv_ln_q)?.to_f64().ok_or(GermError::ExponentOverflow { j })?;
        let padded = if quotient > 2f64.powi(52) { quotient * (1.0 + CEIL_PAD) } else { quotient };
        let nj = padded.ceil().max(0.0) + j as f64;
        if nj > MAX_EXPONENT {
            return Err(GermError::ExponentOverflow { j });
        }
        n.push(nj as u64);
    }
    Ok(HardySeries { q, terms, n })
}

impl HardySeries {
    pub fn ln_b(&self, j: usize) -> f64 {
        j as f64 - self.q.ln()
    }

    /// `ln u(x)` for `x > 0`.
    pub fn ln_eval(&self, ln_x: f64) -> f64 {
        let logs: Vec<f64> = self.n.iter().enumerate().map(|(i, &nj)| nj as f64 * (ln_x - self.ln_b(i + 1))).collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
    }

    /// Copy with `n_j` replaced, invariants not enforced.
    pub fn with_exponent(&self, j: usize, nj: u64) -> Self {
        let mut out = self.clone();
        out.n[j - 1] = nj;
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("series serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkViolation {
    pub j: usize,
    pub x: f64,
    /// 1: u(x) ≥ u(a_j); 2: u(a_j) > q^{n_j}; 3: q^{n_j} > m(a_{j+1}); 4: m(a_{j+1}) > m(x).
    pub link: u8,
    pub ln_lhs: Layered,
    pub ln_rhs: Layered,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationReport {
    pub j_from: usize,
    pub j_to: usize,
    pub samples: usize,
    pub violations: Vec<LinkViolation>,
    pub pass: bool,
}

/// `lhs ≥ rhs − LINK_TOL·max(1,|rhs|)`; strict links are only resolvable to this relative precision.
fn holds(lhs: &Layered, rhs: &Layered) -> Result<bool, GermError> {
    let diff = lhs.sub(rhs)?;
    let scale = if rhs.abs().total_cmp(&Layered::ONE).is_gt() { rhs.abs() } else { Layered::ONE };
    Ok(diff.total_cmp(&scale.scale(-LINK_TOL)?).is_ge())
}

/// Checks `u(x) ≥ u(a_j) > (a_j/b_j)^{n_j} > m(a_{j+1}) > m(x)` on `[a_j, a_{j+1})` in log space.
pub fn verify_domination(u: &HardySeries, m: &Germ, j_from: usize, j_to: usize) -> Result<DominationReport, GermError> {
    if !(1 <= j_from && j_from <= j_to && j_to <= u.terms) {
        return Err(GermError::Parameter(format!("j range {j_from}..={j_to} outside 1..={}", u.terms)));
    }
    let mut violations = Vec::new();
    let mut samples = 0;
    for j in j_from..=j_to {
        let ln_uaj = Layered::from_f64(u.ln_eval(j as f64))?;
        let ln_qn = Layered::from_f64(u.n[j - 1] as f64 * u.q.ln())?;
        let ln_m_next = m.eval(((j + 1) as f64).exp())?.ln()?;
        let mut check = |x: f64, link: u8, lhs: Layered, rhs: Layered| -> Result<(), GermError> {
            if !holds(&lhs, &rhs)? {
                violations.push(LinkViolation { j, x, link, ln_lhs: lhs, ln_rhs: rhs });
            }
            Ok(())
        };
        let aj = (j as f64).exp();
        check(aj, 2, ln_uaj, ln_qn)?;
        check(aj, 3, ln_qn, ln_m_next)?;
        for k in 0..SAMPLES_PER_INTERVAL {
            let ln_x = j as f64 + k as f64 / SAMPLES_PER_INTERVAL as f64;
            let x = ln_x.exp();
            samples += 1;
            check(x, 1, Layered::from_f64(u.ln_eval(ln_x))?, ln_uaj)?;
            check(x, 4, ln_m_next, m.eval(x)?.ln()?)?;
        }
    }
    Ok(DominationReport { j_from, j_to, samples, pass: violations.is_empty(), violations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inf(s: &str) -> Germ {
        Germ::parse(s, Site::AtInfinity).unwrap().monotone()
    }

    #[test]
    fn square_exponents() {
        let u = hardy_dominator(&inf("(pow x 2)"), 2.0, 20).unwrap();
        assert_eq!(u.n[0], 7);
        for j in 1..=20 {
            let expect = (2.0 * (j + 1) as f64 / 2f64.ln()).ceil() as u64 + j as u64;
            assert_eq!(u.n[j - 1], expect, "j = {j}");
        }
        assert!(u.n.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn exponential_exponents() {
        let q = 10.0;
        let u = hardy_dominator(&inf("(exp x)"), q, 42).unwrap();
        for j in [1usize, 10, 40, 41, 42] {
            let quotient = ((j + 1) as f64).exp() / q.ln();
            let n = u.n[j - 1] - j as u64;
            assert!(n >= quotient.ceil() as u64 && n as f64 <= (quotient * (1.0 + 2.0 * CEIL_PAD)).ceil(), "j = {j}");
        }
        assert_eq!(u.n[0], (2f64.exp() / q.ln()).ceil() as u64 + 1);
        assert!(matches!(hardy_dominator(&inf("(exp x)"), q, 43), Err(GermError::ExponentOverflow { j: 43 })));
    }

    #[test]
    fn overflow_reported() {
        assert!(matches!(
            hardy_dominator(&inf("(exp (pow x 2))"), 2.0, 30),
            Err(GermError::ExponentOverflow { j: 21 })
        ));
        assert!(hardy_dominator(&inf("x"), 1.0, 5).is_err());
        assert!(hardy_dominator(&inf("x"), 2.0, 61).is_err());
        assert!(matches!(hardy_dominator(&inf("(recip x)"), 2.0, 5), Err(GermError::NotMonotone(_))));
    }

    #[test]
    fn domination_holds() {
        for (m, to) in
            [("(pow x 2)", 20), ("(exp x)", 20), ("(exp (pow x 2))", 20), ("(pow x 0.5)", 20), ("(exp (prod 3 x))", 20)]
        {
            let g = inf(m);
            let u = hardy_dominator(&g, 2.0, to).unwrap();
            let r = verify_domination(&u, &g, 1, to).unwrap();
            assert!(r.pass, "{m}: {:?}", r.violations.first());
            assert_eq!(r.samples, 10 * to);
        }
    }

    #[test]
    fn corrupted_exponent_breaks_middle_link() {
        let g = inf("(pow x 2)");
        let u = hardy_dominator(&g, 2.0, 20).unwrap();
        let low = (2.0 * 2.0 / 2f64.ln()).ceil() as u64 - 1;
        let bad = u.with_exponent(1, low);
        let r = verify_domination(&bad, &g, 1, 20).unwrap();
        assert!(!r.pass);
        assert!(r.violations.iter().any(|v| v.j == 1 && v.link == 3));
        assert!(r.violations.iter().all(|v| v.link != 4));
    }

    #[test]
    fn json_export() {
        let u = hardy_dominator(&inf("(pow x 2)"), 2.0, 3).unwrap();
        let v: serde_json::Value = serde_json::from_str(&u.to_json()).unwrap();
        assert_eq!(v["q"], 2.0);
        assert_eq!(v["J"], 3);
        assert_eq!(v["n"][0], 7);
    }
}

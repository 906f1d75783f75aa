//! Truncated BCH series in bracket words.
//!
//! The homogeneous components `Z_n` of `log(exp X exp Y)` are computed once in
//! the free associative algebra on `{X, Y}` with exact rational arithmetic and
//! then projected onto left-normed brackets by the Dynkin–Specht–Wever map
//! `Z_n = (1/n) Σ_w c_w [[..[w_1, w_2], ..], w_n]`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_rational::Ratio;

use crate::lie::Bracket;

pub const MAX_ORDER: usize = 6;

type Q = Ratio<i64>;
/// Word over `{0 = X, 1 = Y}`.
type Word = Vec<u8>;
type Series = BTreeMap<Word, Q>;

/// One left-normed bracket word with its rational coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketWord {
    pub letters: Vec<u8>,
    pub coeff: Q,
}

impl BracketWord {
    pub fn degree(&self) -> usize {
        self.letters.len()
    }
}

fn mul(a: &Series, b: &Series, max_deg: usize) -> Series {
    let mut out = Series::new();
    for (wa, ca) in a {
        for (wb, cb) in b {
            if wa.len() + wb.len() > max_deg {
                continue;
            }
            let mut w = wa.clone();
            w.extend_from_slice(wb);
            *out.entry(w).or_insert_with(|| Q::from_integer(0)) += ca * cb;
        }
    }
    out.retain(|_, c| *c != Q::from_integer(0));
    out
}

fn factorial(k: usize) -> i64 {
    (1..=k as i64).product()
}

/// Coefficients of `log(exp X exp Y)` on words up to `max_deg`.
fn log_exp_exp(max_deg: usize) -> Series {
    // W = exp(X) exp(Y) - 1
    let mut w = Series::new();
    for a in 0..=max_deg {
        for b in 0..=max_deg - a {
            if a + b == 0 {
                continue;
            }
            let mut word = vec![0u8; a];
            word.extend(std::iter::repeat(1u8).take(b));
            w.insert(word, Q::new(1, factorial(a) * factorial(b)));
        }
    }
    let mut z = Series::new();
    let mut power = w.clone();
    for m in 1..=max_deg {
        let sign = if m % 2 == 1 { 1 } else { -1 };
        for (word, c) in &power {
            *z.entry(word.clone()).or_insert_with(|| Q::from_integer(0)) += c * Q::new(sign, m as i64);
        }
        power = mul(&power, &w, max_deg);
    }
    z.retain(|_, c| *c != Q::from_integer(0));
    z
}

/// Dynkin-projected bracket words through [`MAX_ORDER`], sorted by degree then word.
pub fn bracket_words() -> &'static [BracketWord] {
    static TABLE: OnceLock<Vec<BracketWord>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let z = log_exp_exp(MAX_ORDER);
        let mut out: Vec<BracketWord> = z
            .into_iter()
            .filter(|(w, _)| w.len() == 1 || w[0] != w[1])
            .map(|(letters, c)| {
                let n = letters.len() as i64;
                BracketWord { letters, coeff: c / Q::from_integer(n) }
            })
            .collect();
        out.sort_by(|a, b| a.letters.len().cmp(&b.letters.len()).then_with(|| a.letters.cmp(&b.letters)));
        out
    })
}

/// Evaluates `Σ_{n ≤ order} Z_n(x, y)`; returns the sum and the degree-`order` component.
pub(crate) fn evaluate(b: &Bracket, x: &[f64], y: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = b.dim();
    let words = bracket_words();
    let mut by_degree = vec![vec![0.0; n]; order + 1];
    let letter = |l: u8| if l == 0 { x } else { y };
    // left-normed brackets share prefixes; walk the prefix tree depth-first
    let mut stack: Vec<(Vec<u8>, Vec<f64>)> = vec![(vec![0], x.to_vec()), (vec![1], y.to_vec())];
    let index: BTreeMap<&[u8], f64> = words
        .iter()
        .filter(|w| w.degree() <= order)
        .map(|w| (w.letters.as_slice(), *w.coeff.numer() as f64 / *w.coeff.denom() as f64))
        .collect();
    while let Some((prefix, value)) = stack.pop() {
        if let Some(c) = index.get(prefix.as_slice()) {
            let acc = &mut by_degree[prefix.len()];
            for (a, v) in acc.iter_mut().zip(&value) {
                *a += c * v;
            }
        }
        if prefix.len() == order {
            continue;
        }
        for l in [0u8, 1u8] {
            if prefix.len() == 1 && prefix[0] == l {
                continue;
            }
            let mut next = prefix.clone();
            next.push(l);
            if !index.keys().any(|k| k.starts_with(&next)) {
                continue;
            }
            let v = b.apply_unchecked(&value, letter(l));
            stack.push((next, v));
        }
    }
    let mut total = vec![0.0; n];
    for comp in &by_degree {
        for (t, c) in total.iter_mut().zip(comp) {
            *t += c;
        }
    }
    (total, by_degree.pop().unwrap_or_else(|| vec![0.0; n]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeff(letters: &[u8]) -> Q {
        bracket_words().iter().find(|w| w.letters == letters).map(|w| w.coeff).unwrap_or_else(|| Q::from_integer(0))
    }

    #[test]
    fn low_order_coefficients() {
        // left-normed: [X,Y] = XY, [[X,Y],X] = XYX etc.
        assert_eq!(coeff(&[0]), Q::from_integer(1));
        assert_eq!(coeff(&[1]), Q::from_integer(1));
        // degree 2: (1/2)(1/2 [X,Y] - 1/2 [Y,X]) = 1/2 [X,Y]
        assert_eq!(coeff(&[0, 1]) - coeff(&[1, 0]), Q::new(1, 2));
    }

    #[test]
    fn words_by_degree_present() {
        for d in 1..=MAX_ORDER {
            assert!(bracket_words().iter().any(|w| w.degree() == d), "degree {d}");
        }
    }
}

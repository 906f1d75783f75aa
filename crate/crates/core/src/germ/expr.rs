//! Germ expression trees, their prefix s-expression syntax and layered evaluation.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::layered::Layered;
use super::GermError;

#[derive(Debug, Clone, PartialEq)]
pub enum GermExpr {
    Const(f64),
    Var,
    Sum(Vec<GermExpr>),
    Prod(Vec<GermExpr>),
    Pow(Box<GermExpr>, f64),
    Exp(Box<GermExpr>),
    Log(Box<GermExpr>),
    Recip(Box<GermExpr>),
    Neg(Box<GermExpr>),
    /// `Compose(f, g)` is `x ↦ f(g(x))`.
    Compose(Box<GermExpr>, Box<GermExpr>),
}

use GermExpr::*;

impl GermExpr {
    pub fn parse(text: &str) -> Result<Self, GermError> {
        let mut p = Parser { src: text, pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < text.len() {
            return Err(p.error("trailing input"));
        }
        Ok(e)
    }

    pub fn eval(&self, x: &Layered) -> Result<Layered, GermError> {
        match self {
            Const(c) => Layered::from_f64(*c),
            Var => Ok(*x),
            Sum(ts) => ts.iter().try_fold(Layered::ZERO, |acc, t| acc.add(&t.eval(x)?)),
            Prod(ts) => ts.iter().try_fold(Layered::ONE, |acc, t| acc.mul(&t.eval(x)?)),
            Pow(b, r) => b.eval(x)?.powf(*r),
            Exp(a) => a.eval(x)?.exp(),
            Log(a) => a.eval(x)?.ln(),
            Recip(a) => a.eval(x)?.recip(),
            Neg(a) => Ok(a.eval(x)?.neg()),
            Compose(f, g) => f.eval(&g.eval(x)?),
        }
    }

    /// Replaces the variable by `g`.
    pub fn substitute(&self, g: &GermExpr) -> GermExpr {
        match self {
            Const(c) => Const(*c),
            Var => g.clone(),
            Sum(ts) => Sum(ts.iter().map(|t| t.substitute(g)).collect()),
            Prod(ts) => Prod(ts.iter().map(|t| t.substitute(g)).collect()),
            Pow(b, r) => Pow(Box::new(b.substitute(g)), *r),
            Exp(a) => Exp(Box::new(a.substitute(g))),
            Log(a) => Log(Box::new(a.substitute(g))),
            Recip(a) => Recip(Box::new(a.substitute(g))),
            Neg(a) => Neg(Box::new(a.substitute(g))),
            Compose(f, h) => Compose(f.clone(), Box::new(h.substitute(g))),
        }
    }

    /// Inlines compositions and cancels double reciprocals and negations.
    pub fn simplify(&self) -> GermExpr {
        match self {
            Const(_) | Var => self.clone(),
            Sum(ts) => Sum(ts.iter().map(|t| t.simplify()).collect()),
            Prod(ts) => Prod(ts.iter().map(|t| t.simplify()).collect()),
            Pow(b, r) => Pow(Box::new(b.simplify()), *r),
            Exp(a) => Exp(Box::new(a.simplify())),
            Log(a) => Log(Box::new(a.simplify())),
            Recip(a) => match a.simplify() {
                Recip(b) => *b,
                Exp(u) => Exp(Box::new(Neg(u).simplify())),
                other => Recip(Box::new(other)),
            },
            Neg(a) => match a.simplify() {
                Neg(b) => *b,
                other => Neg(Box::new(other)),
            },
            Compose(f, g) => f.simplify().substitute(&g.simplify()).simplify(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Const(_) | Var => 0,
            Sum(ts) | Prod(ts) => 1 + ts.iter().map(|t| t.depth()).max().unwrap_or(0),
            Pow(a, _) | Exp(a) | Log(a) | Recip(a) | Neg(a) => 1 + a.depth(),
            Compose(f, g) => 1 + f.depth().max(g.depth()),
        }
    }
}

fn num(v: f64) -> String {
    format!("{v:?}").trim_end_matches(".0").to_string()
}

impl fmt::Display for GermExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, head: &str, ts: &[GermExpr]| {
            write!(f, "({head}")?;
            for t in ts {
                write!(f, " {t}")?;
            }
            write!(f, ")")
        };
        match self {
            Const(c) => write!(f, "{}", num(*c)),
            Var => write!(f, "x"),
            Sum(ts) => list(f, "sum", ts),
            Prod(ts) => list(f, "prod", ts),
            Pow(b, r) => write!(f, "(pow {b} {})", num(*r)),
            Exp(a) => write!(f, "(exp {a})"),
            Log(a) => write!(f, "(log {a})"),
            Recip(a) => write!(f, "(recip {a})"),
            Neg(a) => write!(f, "(neg {a})"),
            Compose(a, b) => write!(f, "(compose {a} {b})"),
        }
    }
}

impl Serialize for GermExpr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GermExpr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        GermExpr::parse(&text).map_err(serde::de::Error::custom)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> GermError {
        GermError::Parse { position: self.pos + 1, message: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += self.src[self.pos..].chars().next().map_or(1, char::len_utf8);
        }
    }

    fn atom(&mut self) -> &str {
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest.find(|c: char| c.is_whitespace() || c == '(' || c == ')').unwrap_or(rest.len());
        self.pos += len;
        &self.src[start..start + len]
    }

    fn number(&mut self) -> Result<f64, GermError> {
        self.skip_ws();
        let start = self.pos;
        let tok = self.atom().to_string();
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = start;
                Err(self.error(&format!("expected a finite number, found {tok:?}")))
            }
        }
    }

    fn expr(&mut self) -> Result<GermExpr, GermError> {
        self.skip_ws();
        let start = self.pos;
        match self.src[self.pos..].chars().next() {
            None => Err(self.error("unexpected end of input")),
            Some(')') => Err(self.error("unexpected ')'")),
            Some('(') => {
                self.pos += 1;
                self.skip_ws();
                let head_pos = self.pos;
                let head = self.atom().to_string();
                let e = match head.as_str() {
                    "sum" | "prod" => {
                        let mut ts = Vec::new();
                        loop {
                            self.skip_ws();
                            if self.src[self.pos..].starts_with(')') || self.pos >= self.src.len() {
                                break;
                            }
                            ts.push(self.expr()?);
                        }
                        if ts.is_empty() {
                            self.pos = head_pos;
                            return Err(self.error(&format!("{head} needs at least one argument")));
                        }
                        if head == "sum" {
                            Sum(ts)
                        } else {
                            Prod(ts)
                        }
                    }
                    "pow" => {
                        let b = self.expr()?;
                        Pow(Box::new(b), self.number()?)
                    }
                    "exp" => Exp(Box::new(self.expr()?)),
                    "log" => Log(Box::new(self.expr()?)),
                    "recip" => Recip(Box::new(self.expr()?)),
                    "neg" => Neg(Box::new(self.expr()?)),
                    "compose" => {
                        let f = self.expr()?;
                        Compose(Box::new(f), Box::new(self.expr()?))
                    }
                    _ => {
                        self.pos = head_pos;
                        return Err(self.error(&format!("unknown operator {head:?}")));
                    }
                };
                self.skip_ws();
                if !self.src[self.pos..].starts_with(')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(_) => {
                let tok = self.atom().to_string();
                if tok == "x" {
                    return Ok(Var);
                }
                match tok.parse::<f64>() {
                    Ok(c) if c.is_finite() && c > 0.0 => Ok(Const(c)),
                    Ok(_) => {
                        self.pos = start;
                        Err(self.error(&format!("constant {tok} must be positive and finite")))
                    }
                    Err(_) => {
                        self.pos = start;
                        Err(self.error(&format!("unknown symbol {tok:?}")))
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(e: &str, x: f64) -> Layered {
        GermExpr::parse(e).unwrap().eval(&Layered::from_f64(x).unwrap()).unwrap()
    }

    #[test]
    fn parse_round_trip() {
        for s in ["(exp (neg (pow (recip x) 1.5)))", "(sum x (prod 2 x) (log x))", "(compose (exp x) (neg x))", "0.25"]
        {
            let e = GermExpr::parse(s).unwrap();
            assert_eq!(e.to_string(), s);
            assert_eq!(GermExpr::parse(&e.to_string()).unwrap(), e);
        }
    }

    #[test]
    fn parse_errors_have_positions() {
        let err = |s: &str| match GermExpr::parse(s) {
            Err(GermError::Parse { position, .. }) => position,
            other => panic!("{other:?}"),
        };
        assert_eq!(err("(exp (foo x))"), 7);
        assert_eq!(err("(exp x"), 7);
        assert_eq!(err("(pow x y)"), 8);
        assert_eq!(err("(sum x -1)"), 8);
        assert_eq!(err("x )"), 3);
        assert_eq!(err(""), 1);
    }

    #[test]
    fn evaluation_examples() {
        let v = at("x", 0.25);
        assert_eq!((v.layer(), v.payload()), (0, 0.25));
        let v = at("(exp (neg (recip x)))", 0.001);
        assert_eq!(v.layer(), 1);
        assert!((v.payload() + 1000.0).abs() < 1e-9);
        let v = at("(exp (neg (exp (recip x))))", 0.01);
        assert!((v.view(2).unwrap() - 100.0).abs() < 1e-12);
        let v = at("(exp (neg (exp (recip x))))", 0.001);
        assert_eq!(v.layer(), 2);
        assert!((v.payload() - 1000.0).abs() < 1e-9);
        assert!(v.is_small());
        assert!(matches!(GermExpr::parse("(log (neg x))").unwrap().eval(&Layered::ONE), Err(GermError::Domain(_))));
        assert!(matches!(
            GermExpr::parse("(exp (exp (exp (recip x))))").unwrap().eval(&Layered::from_f64(1e-3).unwrap()),
            Err(GermError::InconclusiveDepth)
        ));
    }

    #[test]
    fn rewrite_rules() {
        let p = |s: &str| GermExpr::parse(s).unwrap();
        assert_eq!(p("(recip (recip (exp x)))").simplify(), p("(exp x)"));
        assert_eq!(p("(compose (exp x) x)").simplify(), p("(exp x)"));
        assert_eq!(p("(recip (exp (neg x)))").simplify(), p("(exp x)"));
        let f = p("(pow x 2)");
        let g = p("(sum x 1)");
        let h = p("(log x)");
        let left = Compose(Box::new(Compose(Box::new(f.clone()), Box::new(g.clone()))), Box::new(h.clone()));
        let right = Compose(Box::new(f), Box::new(Compose(Box::new(g), Box::new(h))));
        assert_eq!(left.simplify(), right.simplify());
        let x = Layered::from_f64(3.0).unwrap();
        assert_eq!(left.eval(&x).unwrap().to_f64(), right.eval(&x).unwrap().to_f64());
    }
}

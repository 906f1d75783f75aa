//! Signed reals held as bounded-depth logarithm towers.
//!
//! Layer 0 stores `|v|`, layer 1 stores `ln|v|`, layer 2 stores `ln|ln|v||`
//! together with whether `|v| < 1`. Each value uses the lowest layer whose
//! payload magnitude lies in `[1e−300, 1e300]`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Serialize, Serializer};

use super::GermError;

/// Largest payload kept at a given layer.
pub const PAYLOAD_LIMIT: f64 = 1e300;
/// `ln(1e300)`.
pub const LN_LIMIT: f64 = 690.775_527_898_213_7;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mag {
    L0(f64),
    L1(f64),
    L2 { small: bool, q: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layered {
    sign: i8,
    mag: Mag,
}

impl Layered {
    pub const ZERO: Self = Self { sign: 0, mag: Mag::L0(0.0) };
    pub const ONE: Self = Self { sign: 1, mag: Mag::L0(1.0) };

    pub fn from_f64(v: f64) -> Result<Self, GermError> {
        if !v.is_finite() {
            return Err(GermError::Domain(format!("non-finite value {v}")));
        }
        if v == 0.0 {
            return Ok(Self::ZERO);
        }
        let sign = if v < 0.0 { -1 } else { 1 };
        let a = v.abs();
        let mag = if (1.0 / PAYLOAD_LIMIT..=PAYLOAD_LIMIT).contains(&a) { Mag::L0(a) } else { Mag::L1(a.ln()) };
        Ok(Self { sign, mag })
    }

    /// Positive number with natural logarithm `l`.
    pub fn exp_of(l: &Layered) -> Result<Self, GermError> {
        let mag = match (l.sign, l.mag) {
            (0, _) => Mag::L0(1.0),
            (s, Mag::L0(a)) => {
                let v = s as f64 * a;
                if a <= LN_LIMIT {
                    Mag::L0(v.exp())
                } else {
                    Mag::L1(v)
                }
            }
            (_, Mag::L1(p)) if p < 0.0 => Mag::L0(1.0),
            (s, Mag::L1(p)) => Mag::L2 { small: s < 0, q: p },
            (_, Mag::L2 { .. }) => return Err(GermError::InconclusiveDepth),
        };
        Ok(Self { sign: 1, mag })
    }

    /// Signed natural logarithm of `|self|`.
    fn ln_abs(&self) -> Result<Self, GermError> {
        match self.mag {
            _ if self.sign == 0 => Err(GermError::Domain("logarithm of zero".into())),
            Mag::L0(v) => Self::from_f64(v.ln()),
            Mag::L1(p) => Self::from_f64(p),
            Mag::L2 { small, q } => Ok(Self { sign: if small { -1 } else { 1 }, mag: Mag::L1(q) }),
        }
    }

    pub fn exp(&self) -> Result<Self, GermError> {
        Self::exp_of(self)
    }

    pub fn ln(&self) -> Result<Self, GermError> {
        if self.sign <= 0 {
            return Err(GermError::Domain(format!("logarithm of non-positive value {self}")));
        }
        self.ln_abs()
    }

    pub fn neg(&self) -> Self {
        Self { sign: -self.sign, mag: self.mag }
    }

    pub fn recip(&self) -> Result<Self, GermError> {
        let mag = match self.mag {
            _ if self.sign == 0 => return Err(GermError::Domain("reciprocal of zero".into())),
            Mag::L0(v) => Mag::L0(1.0 / v),
            Mag::L1(p) => Mag::L1(-p),
            Mag::L2 { small, q } => Mag::L2 { small: !small, q },
        };
        Ok(Self { sign: self.sign, mag })
    }

    fn with_sign(sign: i8, ln_mag: &Layered) -> Result<Self, GermError> {
        Ok(Self { sign, ..Self::exp_of(ln_mag)? })
    }

    pub fn mul(&self, other: &Self) -> Result<Self, GermError> {
        let sign = self.sign * other.sign;
        if sign == 0 {
            return Ok(Self::ZERO);
        }
        if let (Mag::L0(a), Mag::L0(b)) = (self.mag, other.mag) {
            let p = a * b;
            if (1.0 / PAYLOAD_LIMIT..=PAYLOAD_LIMIT).contains(&p) {
                return Ok(Self { sign, mag: Mag::L0(p) });
            }
        }
        Self::with_sign(sign, &self.ln_abs()?.add(&other.ln_abs()?)?)
    }

    pub fn add(&self, other: &Self) -> Result<Self, GermError> {
        if self.sign == 0 {
            return Ok(*other);
        }
        if other.sign == 0 {
            return Ok(*self);
        }
        if let (Mag::L0(a), Mag::L0(b)) = (self.mag, other.mag) {
            let s = self.sign as f64 * a + other.sign as f64 * b;
            if s == 0.0 {
                return Ok(Self::ZERO);
            }
            if (1.0 / PAYLOAD_LIMIT..=PAYLOAD_LIMIT).contains(&s.abs()) {
                return Self::from_f64(s);
            }
        }
        let (la, lb) = (self.ln_abs()?, other.ln_abs()?);
        let (hi, lhi, llo) = if la.total_cmp(&lb) == Ordering::Less { (other, lb, la) } else { (self, la, lb) };
        let d = llo.sub(&lhi)?.to_f64().unwrap_or(f64::NEG_INFINITY);
        let corr = if self.sign == other.sign {
            d.exp().ln_1p()
        } else {
            if d == 0.0 {
                return Ok(Self::ZERO);
            }
            (-d.exp()).ln_1p()
        };
        Self::with_sign(hi.sign, &lhi.add(&Self::from_f64(corr)?)?)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, GermError> {
        self.add(&other.neg())
    }

    /// `self^r` for positive `self`.
    pub fn powf(&self, r: f64) -> Result<Self, GermError> {
        if self.sign <= 0 {
            return Err(GermError::Domain(format!("power of non-positive value {self}")));
        }
        if let Mag::L0(v) = self.mag {
            let p = v.powf(r);
            if (1.0 / PAYLOAD_LIMIT..=PAYLOAD_LIMIT).contains(&p) {
                return Ok(Self { sign: 1, mag: Mag::L0(p) });
            }
        }
        Self::exp_of(&self.ln_abs()?.mul(&Self::from_f64(r)?)?)
    }

    pub fn scale(&self, r: f64) -> Result<Self, GermError> {
        self.mul(&Self::from_f64(r)?)
    }

    pub fn abs(&self) -> Self {
        Self { sign: self.sign.abs(), mag: self.mag }
    }

    pub fn signum(&self) -> i8 {
        self.sign
    }

    fn cmp_mag(&self, other: &Self) -> Ordering {
        match (self.mag, other.mag) {
            (Mag::L0(a), Mag::L0(b)) => a.total_cmp(&b),
            _ => {
                // both nonzero here; ln_abs cannot fail
                let (la, lb) = (self.ln_abs().expect("nonzero"), other.ln_abs().expect("nonzero"));
                la.total_cmp(&lb)
            }
        }
    }

    /// Total order of the represented reals.
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                0 => Ordering::Equal,
                1 => self.cmp_mag(other),
                _ => other.cmp_mag(self),
            },
            o => o,
        }
    }

    /// Value as `f64` when finite and nonzero in double precision.
    pub fn to_f64(&self) -> Option<f64> {
        let s = self.sign as f64;
        match self.mag {
            _ if self.sign == 0 => Some(0.0),
            Mag::L0(v) => Some(s * v),
            Mag::L1(p) => {
                let v = p.exp();
                (v.is_finite() && v > 0.0).then_some(s * v)
            }
            Mag::L2 { .. } => None,
        }
    }

    pub fn layer(&self) -> u8 {
        match self.mag {
            Mag::L0(_) => 0,
            Mag::L1(_) => 1,
            Mag::L2 { .. } => 2,
        }
    }

    /// Stored payload at the minimal layer.
    pub fn payload(&self) -> f64 {
        match self.mag {
            Mag::L0(v) => self.sign as f64 * v,
            Mag::L1(p) => p,
            Mag::L2 { q, .. } => q,
        }
    }

    /// Whether a layer-2 value lies below one in magnitude.
    pub fn is_small(&self) -> bool {
        match self.mag {
            Mag::L2 { small, .. } => small,
            Mag::L1(p) => p < 0.0,
            Mag::L0(v) => v < 1.0,
        }
    }

    /// Payload re-expressed at `layer` (value, `ln|v|`, or `ln|ln|v||`), if finite there.
    pub fn view(&self, layer: u8) -> Option<f64> {
        match layer {
            0 => self.to_f64(),
            1 => self.ln_abs().ok()?.to_f64(),
            2 => self.ln_abs().ok()?.abs().ln_abs().ok()?.to_f64(),
            _ => None,
        }
    }
}

impl fmt::Display for Layered {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.sign < 0 { "-" } else { "" };
        match self.mag {
            _ if self.sign == 0 => write!(f, "0"),
            Mag::L0(v) => write!(f, "{s}{v:e}"),
            Mag::L1(p) => write!(f, "{s}exp({p:e})"),
            Mag::L2 { small: false, q } => write!(f, "{s}exp(exp({q:e}))"),
            Mag::L2 { small: true, q } => write!(f, "{s}exp(-exp({q:e}))"),
        }
    }
}

impl Serialize for Layered {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Layered", 4)?;
        st.serialize_field("sign", &self.sign)?;
        st.serialize_field("layer", &self.layer())?;
        st.serialize_field("payload", &self.payload())?;
        if let Mag::L2 { small, .. } = self.mag {
            st.serialize_field("direction", if small { "down" } else { "up" })?;
        }
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(v: f64) -> Layered {
        Layered::from_f64(v).unwrap()
    }

    #[test]
    fn minimal_layers() {
        assert_eq!(l(0.25).layer(), 0);
        assert_eq!(l(1e-310).layer(), 1);
        let e = l(-1000.0).exp().unwrap();
        assert_eq!((e.layer(), e.payload()), (1, -1000.0));
        let e = l(500.0).exp().unwrap();
        assert_eq!(e.layer(), 0);
        let big = l(1000.0).exp().unwrap().neg().exp().unwrap();
        assert_eq!((big.layer(), big.payload(), big.is_small()), (2, 1000.0, true));
        assert!(matches!(big.neg().exp(), Err(GermError::InconclusiveDepth)));
        let back = l(1000.0).exp().unwrap().neg().exp().unwrap().recip().unwrap().ln().unwrap().ln().unwrap();
        assert_eq!(back.to_f64(), Some(1000.0));
    }

    #[test]
    fn arithmetic_matches_f64_in_range() {
        let xs = [0.3, -2.5, 1e-5, 7e4, -1e-200, 1e200];
        for &a in &xs {
            for &b in &xs {
                let s = l(a).add(&l(b)).unwrap().to_f64().unwrap();
                assert!((s - (a + b)).abs() <= 1e-15 * (a.abs() + b.abs()), "{a}+{b}={s}");
                let p = l(a).mul(&l(b)).unwrap().to_f64().unwrap_or(0.0);
                assert!((p - a * b).abs() <= 1e-14 * (a * b).abs(), "{a}*{b}={p}");
                assert_eq!(l(a).total_cmp(&l(b)), a.total_cmp(&b));
            }
        }
    }

    #[test]
    fn beyond_f64_range() {
        let a = l(2000.0).exp().unwrap();
        let b = l(1999.0).exp().unwrap();
        let s = a.add(&b).unwrap();
        let expect = 2000.0 + (-1.0f64).exp().ln_1p();
        assert!((s.payload() - expect).abs() < 1e-12);
        let d = a.sub(&a).unwrap();
        assert_eq!(d.signum(), 0);
        assert_eq!(a.total_cmp(&b), Ordering::Greater);
        assert_eq!(a.neg().total_cmp(&b.neg()), Ordering::Less);
        let p = a.mul(&b.recip().unwrap()).unwrap();
        assert!((p.to_f64().unwrap() - 1f64.exp()).abs() < 1e-12);
        let r = a.powf(0.5).unwrap();
        assert!((r.payload() - 1000.0).abs() < 1e-12);
    }

    #[test]
    fn layer_two_view() {
        let v = l(100.0).exp().unwrap().neg().exp().unwrap();
        assert_eq!(v.layer(), 1);
        assert!((v.view(2).unwrap() - 100.0).abs() < 1e-12);
        assert!((v.view(1).unwrap() + 100f64.exp()).abs() < 1e-12 * 100f64.exp());
        assert_eq!(v.view(0), None);
    }

    #[test]
    fn json_shape() {
        let v = l(1000.0).exp().unwrap().neg().exp().unwrap();
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"{"sign":1,"layer":2,"payload":1000.0,"direction":"down"}"#);
    }
}

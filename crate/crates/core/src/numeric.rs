//! Rational parsing/formatting and Laurent polynomials in the similarity dimension.
//!
//! Parameters such as "alpha = gamma" or "e = 4/gamma" are carried symbolically as
//! [`GammaExpr`] so that critical comparisons (series exponent exactly 1) can be decided
//! exactly. Since `gamma = log L / log(1/rho)` is either rational or transcendental, a
//! nonzero rational Laurent polynomial in gamma never vanishes unless gamma is rational,
//! in which case [`crate::ifs::IfsConfig::gamma_exact`] supplies the exact value.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Parses `"p/q"`, an integer, or a plain decimal such as `"0.125"` or `"-1.5e-3"` exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|e| Error::Parse(format!("{s}: {e}")))?;
        let q = BigInt::from_str(q.trim()).map_err(|e| Error::Parse(format!("{s}: {e}")))?;
        if q.is_zero() {
            return Err(Error::Parse(format!("{s}: zero denominator")));
        }
        return Ok(BigRational::new(p, q));
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Result<BigRational> {
    let bad = || Error::Parse(format!("not a rational: {s}"));
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    Ok(if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Canonical `"p/q"` (or `"p"` for integers) form.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

pub fn to_f64(r: &BigRational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() && d != 0.0 => n / d,
        _ => {
            // Huge numerator/denominator: scale both down by the same power of two.
            let bits = r.numer().bits().max(r.denom().bits());
            let shift = bits.saturating_sub(1000) as usize;
            let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
            let d = (r.denom() >> shift).to_f64().unwrap_or(f64::INFINITY);
            n / d
        }
    }
}

/// Exact binary rational equal to a finite float.
pub fn from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// Natural log of a positive rational, robust to numerators and denominators beyond f64 range.
pub fn ln_rational(r: &BigRational) -> f64 {
    ln_bigint(r.numer()) - ln_bigint(r.denom())
}

fn ln_bigint(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap().abs().ln();
    }
    let shift = bits - 64;
    (x.abs() >> shift as usize).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Exact `k`-th root of a nonnegative rational, when one exists.
pub fn exact_root(r: &BigRational, k: u32) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().nth_root(k);
    let d = r.denom().nth_root(k);
    (num_traits::pow(n.clone(), k as usize) == *r.numer() && num_traits::pow(d.clone(), k as usize) == *r.denom())
        .then(|| BigRational::new(n, d))
}

/// Integer power with a possibly negative exponent.
pub fn pow_rational(r: &BigRational, e: i64) -> BigRational {
    if e >= 0 {
        num_traits::pow(r.clone(), e as usize)
    } else {
        num_traits::pow(r.recip(), (-e) as usize)
    }
}

/// Sign decided exactly or only approximately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignOf {
    Positive,
    Zero,
    Negative,
    /// Magnitude below the decision margin and not exactly resolvable; carries the float value.
    Undecided(f64),
}

/// Margin under which a float-evaluated expression is considered critical.
pub const CRITICAL_MARGIN: f64 = 1e-12;

/// A Laurent polynomial `sum_k c_k gamma^k` with rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GammaExpr {
    terms: BTreeMap<i32, BigRational>,
}

impl GammaExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn rational(r: BigRational) -> Self {
        Self::monomial(r, 0)
    }

    pub fn int(v: i64) -> Self {
        Self::rational(BigRational::from_integer(v.into()))
    }

    /// `gamma` itself.
    pub fn gamma() -> Self {
        Self::monomial(BigRational::one(), 1)
    }

    pub fn monomial(c: BigRational, power: i32) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(power, c);
        }
        Self { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The rational value when no gamma power appears.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&0).cloned(),
            _ => None,
        }
    }

    /// Single-term expressions as `(coefficient, power)`.
    pub fn as_monomial(&self) -> Option<(BigRational, i32)> {
        match self.terms.len() {
            0 => Some((BigRational::zero(), 0)),
            1 => self.terms.iter().next().map(|(p, c)| (c.clone(), *p)),
            _ => None,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (p, c) in &other.terms {
            let entry = terms.entry(*p).or_insert_with(BigRational::zero);
            *entry += c;
            if entry.is_zero() {
                terms.remove(p);
            }
        }
        Self { terms }
    }

    pub fn neg(&self) -> Self {
        Self { terms: self.terms.iter().map(|(p, c)| (*p, -c)).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (p1, c1) in &self.terms {
            for (p2, c2) in &other.terms {
                out = out.add(&Self::monomial(c1 * c2, p1 + p2));
            }
        }
        out
    }

    /// Exact quotient when `other` is a nonzero monomial.
    pub fn div(&self, other: &Self) -> Option<Self> {
        let (c, p) = other.as_monomial()?;
        if c.is_zero() {
            return None;
        }
        Some(Self { terms: self.terms.iter().map(|(q, d)| (q - p, d / &c)).collect() })
    }

    pub fn eval(&self, gamma: f64) -> f64 {
        self.terms.iter().map(|(p, c)| to_f64(c) * gamma.powi(*p)).sum()
    }

    pub fn eval_exact(&self, gamma: &BigRational) -> BigRational {
        self.terms.iter().map(|(p, c)| c * pow_rational(gamma, *p as i64)).sum()
    }

    /// Sign at the configuration's gamma; exact whenever possible.
    pub fn sign(&self, gamma: f64, gamma_exact: Option<&BigRational>) -> SignOf {
        let from_rational = |r: &BigRational| {
            if r.is_zero() {
                SignOf::Zero
            } else if r.is_positive() {
                SignOf::Positive
            } else {
                SignOf::Negative
            }
        };
        if self.terms.is_empty() {
            return SignOf::Zero;
        }
        if self.terms.len() == 1 {
            // gamma > 0, so a monomial has the sign of its coefficient.
            return from_rational(self.terms.values().next().unwrap());
        }
        if let Some(g) = gamma_exact {
            return from_rational(&self.eval_exact(g));
        }
        let v = self.eval(gamma);
        if v.abs() < CRITICAL_MARGIN {
            SignOf::Undecided(v)
        } else if v > 0.0 {
            SignOf::Positive
        } else {
            SignOf::Negative
        }
    }
}

impl fmt::Display for GammaExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (p, c) in self.terms.iter().rev() {
            let (sign, mag) = if c.is_negative() { ("-", -c) } else { ("+", c.clone()) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{sign}")?;
            }
            first = false;
            let m = format_rational(&mag);
            match *p {
                0 => write!(f, "{m}")?,
                1 if mag.is_one() => write!(f, "gamma")?,
                1 => write!(f, "{m}*gamma")?,
                -1 => write!(f, "{m}/gamma")?,
                k if k > 0 => write!(f, "{m}*gamma^{k}")?,
                k => write!(f, "{m}/gamma^{}", -k)?,
            }
        }
        Ok(())
    }
}

impl FromStr for GammaExpr {
    type Err = Error;

    /// Accepts a signed sum of terms, each of the form `r`, `gamma`, `r*gamma`, `gamma/r`,
    /// `r/gamma`, `r*gamma^k` or `r/gamma^k`, where `r` is a rational as in [`parse_rational`].
    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::Parse("empty expression".into()));
        }
        let mut out = GammaExpr::zero();
        let mut start = 0;
        let bytes = compact.as_bytes();
        for i in 1..=bytes.len() {
            let boundary = i == bytes.len()
                || ((bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E' | b'*' | b'/' | b'^'));
            if boundary {
                out = out.add(&parse_term(&compact[start..i])?);
                start = i;
            }
        }
        Ok(out)
    }
}

fn parse_term(t: &str) -> Result<GammaExpr> {
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let signed = |e: GammaExpr| if neg { e.neg() } else { e };
    let Some(pos) = body.find("gamma") else {
        return Ok(signed(GammaExpr::rational(parse_rational(body)?)));
    };
    let before = &body[..pos];
    let mut after = &body[pos + 5..];
    let mut power: i32 = 1;
    if let Some(rest) = after.strip_prefix('^') {
        let end = rest.find(|c: char| !(c.is_ascii_digit() || c == '-')).unwrap_or(rest.len());
        power = rest[..end].parse().map_err(|_| Error::Parse(format!("bad power in {t}")))?;
        after = &rest[end..];
    }
    let coeff_before = if before.is_empty() {
        BigRational::one()
    } else if let Some(c) = before.strip_suffix('*') {
        parse_rational(c)?
    } else if let Some(c) = before.strip_suffix('/') {
        power = -power;
        parse_rational(c)?
    } else {
        return Err(Error::Parse(format!("cannot parse term {t}")));
    };
    let coeff = if after.is_empty() {
        coeff_before
    } else if let Some(d) = after.strip_prefix('/') {
        coeff_before / parse_rational(d)?
    } else if let Some(m) = after.strip_prefix('*') {
        coeff_before * parse_rational(m)?
    } else {
        return Err(Error::Parse(format!("cannot parse term {t}")));
    };
    Ok(signed(GammaExpr::monomial(coeff, power)))
}

impl Serialize for GammaExpr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GammaExpr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        let s = match v {
            serde_json::Value::String(s) => s,
            serde_json::Value::Number(n) => n.to_string(),
            other => return Err(serde::de::Error::custom(format!("expected expression, got {other}"))),
        };
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for rationals as `"p/q"` strings (decimals accepted on input).
pub mod rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        let s = match v {
            serde_json::Value::String(s) => s,
            serde_json::Value::Number(n) => n.to_string(),
            other => return Err(serde::de::Error::custom(format!("expected rational, got {other}"))),
        };
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

pub mod rational_vec_str {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(format_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<BigRational>, D::Error> {
        let raw = Vec::<serde_json::Value>::deserialize(d)?;
        raw.into_iter()
            .map(|v| {
                let s = match v {
                    serde_json::Value::String(s) => s,
                    serde_json::Value::Number(n) => n.to_string(),
                    other => return Err(serde::de::Error::custom(format!("expected rational, got {other}"))),
                };
                parse_rational(&s).map_err(serde::de::Error::custom)
            })
            .collect()
    }
}

/// Greatest common divisor helper used by the exact-gamma search.
pub(crate) fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("2/3").unwrap(), rat(2, 3));
        assert_eq!(parse_rational("0.125").unwrap(), rat(1, 8));
        assert_eq!(parse_rational("-1.5e-3").unwrap(), rat(-3, 2000));
        assert_eq!(parse_rational("7").unwrap(), rat(7, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn gamma_expressions_parse() {
        let g = GammaExpr::gamma();
        assert_eq!("gamma".parse::<GammaExpr>().unwrap(), g);
        assert_eq!("gamma/2".parse::<GammaExpr>().unwrap(), GammaExpr::monomial(rat(1, 2), 1));
        assert_eq!("4/gamma".parse::<GammaExpr>().unwrap(), GammaExpr::monomial(rat(4, 1), -1));
        assert_eq!("-4/gamma".parse::<GammaExpr>().unwrap(), GammaExpr::monomial(rat(-4, 1), -1));
        assert_eq!("1/2*gamma".parse::<GammaExpr>().unwrap(), GammaExpr::monomial(rat(1, 2), 1));
        let sum: GammaExpr = "1+gamma".parse().unwrap();
        assert_eq!(sum, GammaExpr::int(1).add(&g));
        assert_eq!("1e-3".parse::<GammaExpr>().unwrap(), GammaExpr::rational(rat(1, 1000)));
        let shown = GammaExpr::monomial(rat(3, 2), -1).add(&GammaExpr::int(-1)).to_string();
        assert_eq!(shown.parse::<GammaExpr>().unwrap(), GammaExpr::monomial(rat(3, 2), -1).add(&GammaExpr::int(-1)));
    }

    #[test]
    fn signs_are_exact_for_monomials_and_rational_gamma() {
        let g = GammaExpr::gamma();
        let gamma = 2f64.ln() / 3f64.ln();
        assert_eq!(g.sub(&g).sign(gamma, None), SignOf::Zero);
        assert_eq!(g.sub(&GammaExpr::int(1)).sign(gamma, None), SignOf::Negative);
        let half = rat(1, 2);
        assert_eq!(g.sub(&GammaExpr::rational(half.clone())).sign(0.5, Some(&half)), SignOf::Zero);
        // gamma*(1 + 1) - 2*gamma collapses to zero symbolically
        let two_g = g.mul(&GammaExpr::int(2));
        assert!(two_g.sub(&g.add(&g)).is_zero());
    }

    #[test]
    fn roots_and_float_conversion() {
        assert_eq!(exact_root(&rat(1, 100), 2), Some(rat(1, 10)));
        assert_eq!(exact_root(&rat(2, 1), 2), None);
        let big = pow_rational(&rat(1, 3), 800);
        assert!((ln_rational(&big) + 800.0 * 3f64.ln()).abs() < 1e-9);
        assert_eq!(to_f64(&big), 0.0);
        assert_eq!(from_f64(0.375), rat(3, 8));
    }
}

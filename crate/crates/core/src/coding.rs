//! Points of the attractor as codings: the coding map, the induced shift, and exact
//! recurrence distances `|T^n x - x|`.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{cylinder_interval, word_value, IfsConfig, Word};
use crate::interval::Interval;
use crate::numeric::{format_rational, rational_str};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Exact,
    Truncated,
}

/// A point of K. Exact points are eventually periodic codings with a rational value;
/// truncated points know only a finite prefix and carry the cylinder of that prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedPoint {
    kind: PointKind,
    preperiod: Word,
    period: Word,
    enclosure: Interval,
}

/// JSON form `{"preperiod": [...], "period": [...]}` with 1-based symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodingSpec {
    #[serde(default)]
    pub preperiod: Vec<u32>,
    pub period: Vec<u32>,
}

impl CodedPoint {
    pub fn kind(&self) -> PointKind {
        self.kind
    }

    pub fn is_exact(&self) -> bool {
        self.kind == PointKind::Exact
    }

    pub fn preperiod(&self) -> &Word {
        &self.preperiod
    }

    /// Empty for truncated points.
    pub fn period(&self) -> &Word {
        &self.period
    }

    /// Number of known digits of a truncated point; `None` for exact points.
    pub fn depth(&self) -> Option<usize> {
        (self.kind == PointKind::Truncated).then(|| self.preperiod.len())
    }

    /// Exact value, or `None` for truncated points.
    pub fn value(&self) -> Option<&BigRational> {
        self.is_exact().then_some(&self.enclosure.lo)
    }

    /// Degenerate for exact points; the prefix cylinder for truncated points.
    pub fn enclosure(&self) -> &Interval {
        &self.enclosure
    }

    /// The first `n` symbols of the coding.
    pub fn digits(&self, n: usize) -> Result<Word> {
        if self.kind == PointKind::Truncated && n > self.preperiod.len() {
            return Err(Error::DepthExhausted { shift: n, depth: self.preperiod.len() });
        }
        let mut out = Vec::with_capacity(n);
        out.extend(self.preperiod.symbols().iter().take(n));
        while out.len() < n {
            let k = (out.len() - self.preperiod.len()) % self.period.len();
            out.push(self.period.symbols()[k]);
        }
        Ok(Word::new(out))
    }

    pub fn to_spec(&self) -> CodingSpec {
        CodingSpec { preperiod: self.preperiod.0.clone(), period: self.period.0.clone() }
    }

    pub fn truncated(config: &IfsConfig, prefix: Word) -> Result<Self> {
        let enclosure = cylinder_interval(config, &prefix)?;
        Ok(Self { kind: PointKind::Truncated, preperiod: prefix, period: Word::empty(), enclosure })
    }
}

/// `pi(u v v v ...) = [u] + rho^|u| [v] / (1 - rho^|v|)`.
pub fn pi_eval(config: &IfsConfig, preperiod: &Word, period: &Word) -> Result<CodedPoint> {
    config.check_word(preperiod)?;
    config.check_word(period)?;
    if period.is_empty() {
        return Err(Error::EmptyPeriod);
    }
    let fixed = word_value(config, period)? / (BigRational::one() - config.rho_pow(period.len()));
    let value = word_value(config, preperiod)? + config.rho_pow(preperiod.len()) * fixed;
    Ok(CodedPoint { kind: PointKind::Exact, preperiod: preperiod.clone(), period: period.clone(), enclosure: Interval::point(value) })
}

pub fn pi_from_spec(config: &IfsConfig, spec: &CodingSpec) -> Result<CodedPoint> {
    pi_eval(config, &Word::new(spec.preperiod.clone()), &Word::new(spec.period.clone()))
}

/// Greedy inverse of the coding map: the unique word of length `depth` whose cylinder holds `x`.
///
/// First-level intervals are disjoint, so at every level `x` lies in at most one of them.
pub fn encode_point(config: &IfsConfig, x: &BigRational, depth: usize) -> Result<Word> {
    if depth == 0 {
        return Err(Error::BadRange("depth must be at least 1".into()));
    }
    if x.is_negative() || x > &BigRational::one() {
        return Err(Error::GapPoint(0));
    }
    let rho = config.rho();
    let mut y = x.clone();
    let mut out = Vec::with_capacity(depth);
    for level in 1..=depth {
        let j = config
            .translations()
            .iter()
            .position(|a| a <= &y && y <= a + rho)
            .ok_or(Error::GapPoint(level))?;
        y = (&y - &config.translations()[j]) / rho;
        out.push(j as u32 + 1);
    }
    Ok(Word::new(out))
}

/// `T^n p`: drop `n` leading symbols of the coding.
pub fn apply_shift(config: &IfsConfig, p: &CodedPoint, n: usize) -> Result<CodedPoint> {
    match p.kind {
        PointKind::Truncated => {
            let depth = p.preperiod.len();
            if n >= depth {
                return Err(Error::DepthExhausted { shift: n, depth });
            }
            CodedPoint::truncated(config, p.preperiod.suffix_from(n))
        }
        PointKind::Exact => {
            let pre_len = p.preperiod.len();
            let (pre, period) = if n <= pre_len {
                (p.preperiod.suffix_from(n), p.period.clone())
            } else {
                (Word::empty(), p.period.rotate(n - pre_len))
            };
            pi_eval(config, &pre, &period)
        }
    }
}

/// Certified enclosure `[lo, hi]` of a distance; `lo == hi` when exact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    #[serde(with = "rational_str")]
    pub lo: BigRational,
    #[serde(with = "rational_str")]
    pub hi: BigRational,
}

impl DistanceEstimate {
    pub fn exact(d: BigRational) -> Self {
        Self { lo: d.clone(), hi: d }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn value(&self) -> BigRational {
        (&self.lo + &self.hi) / BigRational::from_integer(2.into())
    }

    pub fn error(&self) -> BigRational {
        (&self.hi - &self.lo) / BigRational::from_integer(2.into())
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    /// Three-valued test of `distance < threshold`.
    pub fn below(&self, threshold: &BigRational) -> Option<bool> {
        if &self.hi < threshold {
            Some(true)
        } else if &self.lo >= threshold {
            Some(false)
        } else {
            None
        }
    }
}

impl std::fmt::Display for DistanceEstimate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_exact() {
            write!(f, "{}", format_rational(&self.lo))
        } else {
            write!(f, "[{}, {}]", format_rational(&self.lo), format_rational(&self.hi))
        }
    }
}

/// `|T^n p - p|`. Exact for exact points. For a truncated point with prefix `w` of depth `d`,
/// `x = [w|n] + rho^n T^n x` gives `T^n x - x = (1 - rho^n) y - [w|n]` with `y` ranging over
/// `I(w[n..])`, so the enclosure has width `(1 - rho^n) rho^(d-n) <= 2 rho^(d-n)`.
pub fn recurrence_distance(config: &IfsConfig, p: &CodedPoint, n: usize) -> Result<DistanceEstimate> {
    if n == 0 {
        return Err(Error::BadRange("n must be at least 1".into()));
    }
    match p.kind {
        PointKind::Exact => {
            let shifted = apply_shift(config, p, n)?;
            let d = (shifted.value().unwrap() - p.value().unwrap()).abs();
            Ok(DistanceEstimate::exact(d))
        }
        PointKind::Truncated => {
            let depth = p.preperiod.len();
            if n >= depth {
                return Err(Error::DepthExhausted { shift: n, depth });
            }
            let head = word_value(config, &p.preperiod.prefix(n))?;
            let tail = cylinder_interval(config, &p.preperiod.suffix_from(n))?;
            let scale = BigRational::one() - config.rho_pow(n);
            let lo = &scale * &tail.lo - &head;
            let hi = &scale * &tail.hi - &head;
            Ok(abs_enclosure(lo, hi))
        }
    }
}

/// `{|t| : t in [lo, hi]}`.
pub(crate) fn abs_enclosure(lo: BigRational, hi: BigRational) -> DistanceEstimate {
    if lo.is_positive() || lo.is_zero() {
        DistanceEstimate { lo, hi }
    } else if hi.is_negative() || hi.is_zero() {
        DistanceEstimate { lo: -hi, hi: -lo }
    } else {
        let hi_abs = if -&lo > hi { -lo } else { hi };
        DistanceEstimate { lo: BigRational::zero(), hi: hi_abs }
    }
}

/// `||y||`, the distance from `y` to the nearest integer.
pub fn nearest_integer_distance(y: &BigRational) -> BigRational {
    let frac = y - y.floor();
    let other = BigRational::one() - &frac;
    if frac <= other {
        frac
    } else {
        other
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    fn w(v: &[u32]) -> Word {
        Word::new(v.to_vec())
    }

    #[test]
    fn pi_examples() {
        let c = IfsConfig::middle_third();
        assert_eq!(pi_eval(&c, &w(&[]), &w(&[2])).unwrap().value().unwrap(), &rat(1, 1));
        assert_eq!(pi_eval(&c, &w(&[]), &w(&[1, 2])).unwrap().value().unwrap(), &rat(1, 4));
        assert_eq!(pi_eval(&c, &w(&[2]), &w(&[1])).unwrap().value().unwrap(), &rat(2, 3));
        assert_eq!(pi_eval(&c, &w(&[1]), &w(&[])), Err(Error::EmptyPeriod));
        assert!(matches!(pi_eval(&c, &w(&[0]), &w(&[1])), Err(Error::SymbolOutOfRange { .. })));
    }

    #[test]
    fn encode_examples() {
        let c = IfsConfig::middle_third();
        assert_eq!(encode_point(&c, &rat(1, 4), 4).unwrap(), w(&[1, 2, 1, 2]));
        assert_eq!(encode_point(&c, &rat(1, 1), 3).unwrap(), w(&[2, 2, 2]));
        assert_eq!(encode_point(&c, &rat(1, 2), 1), Err(Error::GapPoint(1)));
        // 1/12 = [1,1,2,1,2,...]: 1/4 scaled into the first cylinder of the first cylinder
        assert_eq!(encode_point(&c, &rat(1, 12), 3).unwrap(), w(&[1, 1, 2]));
        assert_eq!(encode_point(&c, &rat(1, 6), 2), Err(Error::GapPoint(2)));
    }

    #[test]
    fn shift_examples() {
        let c = IfsConfig::middle_third();
        let quarter = pi_eval(&c, &w(&[]), &w(&[1, 2])).unwrap();
        assert_eq!(apply_shift(&c, &quarter, 1).unwrap().value().unwrap(), &rat(3, 4));
        let one = pi_eval(&c, &w(&[]), &w(&[2])).unwrap();
        for n in 0..5 {
            assert_eq!(apply_shift(&c, &one, n).unwrap().value().unwrap(), &rat(1, 1));
        }
        let two_thirds = pi_eval(&c, &w(&[2]), &w(&[1])).unwrap();
        assert_eq!(apply_shift(&c, &two_thirds, 1).unwrap().value().unwrap(), &rat(0, 1));
        let trunc = CodedPoint::truncated(&c, w(&[1, 2, 2])).unwrap();
        assert_eq!(apply_shift(&c, &trunc, 1).unwrap().depth(), Some(2));
        assert_eq!(apply_shift(&c, &trunc, 3), Err(Error::DepthExhausted { shift: 3, depth: 3 }));
    }

    #[test]
    fn distance_examples() {
        let c = IfsConfig::middle_third();
        let quarter = pi_eval(&c, &w(&[]), &w(&[1, 2])).unwrap();
        assert_eq!(recurrence_distance(&c, &quarter, 2).unwrap(), DistanceEstimate::exact(rat(0, 1)));
        assert_eq!(recurrence_distance(&c, &quarter, 1).unwrap(), DistanceEstimate::exact(rat(1, 2)));
        let two_thirds = pi_eval(&c, &w(&[2]), &w(&[1])).unwrap();
        assert_eq!(recurrence_distance(&c, &two_thirds, 1).unwrap(), DistanceEstimate::exact(rat(2, 3)));
    }

    #[test]
    fn truncated_distance_encloses_every_extension() {
        let c = IfsConfig::middle_third();
        let prefix = w(&[1, 2, 2, 1, 2, 1]);
        let trunc = CodedPoint::truncated(&c, prefix.clone()).unwrap();
        for n in 1..6 {
            let enc = recurrence_distance(&c, &trunc, n).unwrap();
            assert!(enc.width() <= rat(2, 1) * c.rho_pow(6 - n));
            for tail in [w(&[1]), w(&[2]), w(&[1, 2]), w(&[2, 2, 1])] {
                let p = pi_eval(&c, &prefix, &tail).unwrap();
                let d = recurrence_distance(&c, &p, n).unwrap().lo;
                assert!(enc.lo <= d && d <= enc.hi, "n={n}");
            }
        }
        assert!(recurrence_distance(&c, &trunc, 6).is_err());
    }

    #[test]
    fn nearest_integer() {
        assert_eq!(nearest_integer_distance(&rat(7, 4)), rat(1, 4));
        assert_eq!(nearest_integer_distance(&rat(-1, 3)), rat(1, 3));
        assert_eq!(nearest_integer_distance(&rat(2, 1)), rat(0, 1));
    }

    #[test]
    fn three_valued_threshold() {
        let d = DistanceEstimate { lo: rat(1, 10), hi: rat(1, 5) };
        assert_eq!(d.below(&rat(1, 4)), Some(true));
        assert_eq!(d.below(&rat(1, 10)), Some(false));
        assert_eq!(d.below(&rat(3, 20)), None);
    }
}

//! Homogeneous iterated function systems `x -> rho*x + a_j` on `[0, 1]` with strong separation,
//! plus exact word arithmetic and cylinder geometry.

use std::fmt;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::numeric::{format_rational, ln_rational, pow_rational, rat, rational_str, rational_vec_str, to_f64};

/// Relative precision of [`IfsConfig::gamma`]: a few ulps of f64, i.e. at least 50 significant bits.
pub const GAMMA_REL_PRECISION: f64 = 8.0 * f64::EPSILON;

/// Finite word over the alphabet `{1, ..., L}` (1-based symbols).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(pub Vec<u32>);

impl Word {
    pub fn new(symbols: Vec<u32>) -> Self {
        Self(symbols)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[u32] {
        &self.0
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.len())].to_vec())
    }

    pub fn suffix_from(&self, n: usize) -> Word {
        Word(self.0[n.min(self.len())..].to_vec())
    }

    /// Cyclic left rotation by `k` positions.
    pub fn rotate(&self, k: usize) -> Word {
        if self.is_empty() {
            return self.clone();
        }
        let mut v = self.0.clone();
        v.rotate_left(k % self.len());
        Word(v)
    }

    /// All words of length `n` over an alphabet of size `alphabet`, in lexicographic order.
    pub fn all_of_length(alphabet: usize, n: usize) -> impl Iterator<Item = Word> {
        let total = (alphabet as u64).pow(n as u32);
        (0..total).map(move |mut idx| {
            let mut v = vec![1u32; n];
            for slot in v.iter_mut().rev() {
                *slot = (idx % alphabet as u64) as u32 + 1;
                idx /= alphabet as u64;
            }
            Word(v)
        })
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl From<Vec<u32>> for Word {
    fn from(v: Vec<u32>) -> Self {
        Word(v)
    }
}

/// On-disk form of a configuration: `{"rho": "1/3", "L": 2, "translations": ["0", "2/3"]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IfsSpec {
    #[serde(with = "rational_str")]
    pub rho: BigRational,
    #[serde(rename = "L")]
    pub alphabet: usize,
    #[serde(with = "rational_vec_str")]
    pub translations: Vec<BigRational>,
}

/// A validated system. Immutable; all geometry derives from it.
#[derive(Debug, Clone)]
pub struct IfsConfig {
    rho: BigRational,
    translations: Vec<BigRational>,
    gamma: f64,
    gamma_exact: Option<BigRational>,
    rho_f64: f64,
    translations_f64: Vec<f64>,
}

impl IfsConfig {
    /// The middle-third Cantor system `{x/3, x/3 + 2/3}`.
    pub fn middle_third() -> Self {
        Self::validate(rat(1, 3), 2, vec![rat(0, 1), rat(2, 3)]).expect("middle-third is valid")
    }

    /// Three maps of ratio 1/5 at `0, 2/5, 4/5`.
    pub fn three_fifths() -> Self {
        Self::validate(rat(1, 5), 3, vec![rat(0, 1), rat(2, 5), rat(4, 5)]).expect("valid")
    }

    /// Checks ratio, ordering, bounds and first-level disjointness, then derives gamma.
    pub fn validate(rho: BigRational, alphabet: usize, translations: Vec<BigRational>) -> Result<Self> {
        if alphabet < 2 || translations.len() != alphabet {
            return Err(Error::BadAlphabet(format!("L = {alphabet}, {} translations", translations.len())));
        }
        if !rho.is_positive() || rho >= BigRational::one() {
            return Err(Error::BadRatio(format_rational(&rho)));
        }
        for (j, w) in translations.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::NotSorted(format!("a_{} = {} >= a_{} = {}", j + 1, format_rational(&w[0]), j + 2, format_rational(&w[1]))));
            }
        }
        let one_minus_rho = BigRational::one() - &rho;
        if translations[0].is_negative() {
            return Err(Error::SeparationViolated(format!("a_1 = {} < 0", format_rational(&translations[0]))));
        }
        if translations[alphabet - 1] > one_minus_rho {
            return Err(Error::SeparationViolated(format!("a_L = {} > 1 - rho", format_rational(&translations[alphabet - 1]))));
        }
        for (j, w) in translations.windows(2).enumerate() {
            if &w[1] - &w[0] <= rho {
                return Err(Error::SeparationViolated(format!(
                    "a_{} - a_{} = {} <= rho",
                    j + 2,
                    j + 1,
                    format_rational(&(&w[1] - &w[0]))
                )));
            }
        }
        if rho >= rat(1, alphabet as i64) {
            return Err(Error::BadRatio(format!("{} >= 1/L", format_rational(&rho))));
        }
        let gamma = (alphabet as f64).ln() / -ln_rational(&rho);
        let gamma_exact = exact_gamma(&rho, alphabet, gamma);
        let gamma = gamma_exact.as_ref().map(to_f64).unwrap_or(gamma);
        Ok(Self {
            rho_f64: to_f64(&rho),
            translations_f64: translations.iter().map(to_f64).collect(),
            rho,
            translations,
            gamma,
            gamma_exact,
        })
    }

    pub fn from_spec(spec: &IfsSpec) -> Result<Self> {
        Self::validate(spec.rho.clone(), spec.alphabet, spec.translations.clone())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: IfsSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_spec(&spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn spec(&self) -> IfsSpec {
        IfsSpec { rho: self.rho.clone(), alphabet: self.alphabet(), translations: self.translations.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.spec()).expect("serializable")
    }

    pub fn rho(&self) -> &BigRational {
        &self.rho
    }

    pub fn rho_f64(&self) -> f64 {
        self.rho_f64
    }

    pub fn alphabet(&self) -> usize {
        self.translations.len()
    }

    pub fn translations(&self) -> &[BigRational] {
        &self.translations
    }

    pub fn translations_f64(&self) -> &[f64] {
        &self.translations_f64
    }

    /// `a_j` for a 1-based symbol.
    pub fn translation(&self, symbol: u32) -> Result<&BigRational> {
        self.check_symbol(symbol)?;
        Ok(&self.translations[symbol as usize - 1])
    }

    pub fn check_symbol(&self, symbol: u32) -> Result<()> {
        if symbol == 0 || symbol as usize > self.alphabet() {
            return Err(Error::SymbolOutOfRange { symbol, alphabet: self.alphabet() });
        }
        Ok(())
    }

    pub fn check_word(&self, word: &Word) -> Result<()> {
        word.symbols().iter().try_for_each(|&s| self.check_symbol(s))
    }

    /// Similarity dimension `log L / log(1/rho)`, relative precision [`GAMMA_REL_PRECISION`].
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Exact gamma when it is rational (e.g. `rho = 1/4, L = 2` gives `1/2`).
    pub fn gamma_exact(&self) -> Option<&BigRational> {
        self.gamma_exact.as_ref()
    }

    pub fn rho_pow(&self, n: usize) -> BigRational {
        pow_rational(&self.rho, n as i64)
    }

    /// Smallest gap between consecutive first-level intervals.
    pub fn min_gap(&self) -> BigRational {
        self.translations.windows(2).map(|w| &w[1] - &w[0] - &self.rho).min().expect("L >= 2")
    }

    /// Ahlfors constants `(1/L, 2/rho + 1)` bounding `mu(B(x,r)) / r^gamma` for `x` in K.
    pub fn ahlfors_constants(&self) -> (f64, f64) {
        (1.0 / self.alphabet() as f64, 2.0 / self.rho_f64 + 1.0)
    }

    /// `(1 - rho) / 4`, the clamp level for rate functions.
    pub fn clamp_level(&self) -> BigRational {
        (BigRational::one() - &self.rho) / BigRational::from_integer(4.into())
    }
}

/// Searches small-denominator candidates `p/q` near the float gamma and verifies
/// `L^q = (1/rho)^p` exactly.
fn exact_gamma(rho: &BigRational, alphabet: usize, approx: f64) -> Option<BigRational> {
    let inv = rho.recip();
    let l = BigInt::from(alphabet as u64);
    for q in 1u64..=64 {
        let p = (approx * q as f64).round() as u64;
        if p == 0 || crate::numeric::gcd_u64(p, q) != 1 || ((p as f64 / q as f64) - approx).abs() > 1e-9 {
            continue;
        }
        let lhs = BigRational::from_integer(num_traits::pow(l.clone(), q as usize));
        if lhs == num_traits::pow(inv.clone(), p as usize) {
            return Some(rat(p as i64, q as i64));
        }
    }
    None
}

/// Coding value `[w] = sum_i a_{w_i} rho^(i-1)`; the empty word gives 0.
pub fn word_value(config: &IfsConfig, word: &Word) -> Result<BigRational> {
    config.check_word(word)?;
    let mut acc = BigRational::zero();
    // Horner from the right: [w] = a_{w1} + rho (a_{w2} + rho (...)).
    for &s in word.symbols().iter().rev() {
        acc = &config.translations[s as usize - 1] + &config.rho * acc;
    }
    Ok(acc)
}

/// Cylinder `I(w) = phi_w([0,1]) = [[w], [w] + rho^n]`.
pub fn cylinder_interval(config: &IfsConfig, word: &Word) -> Result<Interval> {
    let lo = word_value(config, word)?;
    let hi = &lo + config.rho_pow(word.len());
    Ok(Interval::new(lo, hi))
}

/// Fixed point of `phi_w`, i.e. the point coded by `w` repeated forever: `[w] / (1 - rho^n)`.
pub fn periodic_point(config: &IfsConfig, word: &Word) -> Result<BigRational> {
    if word.is_empty() {
        return Err(Error::EmptyWord);
    }
    let v = word_value(config, word)?;
    Ok(v / (BigRational::one() - config.rho_pow(word.len())))
}

pub fn gamma_dim(config: &IfsConfig) -> f64 {
    config.gamma()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[u32]) -> Word {
        Word::new(v.to_vec())
    }

    #[test]
    fn validation_examples() {
        assert!(IfsConfig::validate(rat(1, 3), 2, vec![rat(0, 1), rat(2, 3)]).is_ok());
        assert!(matches!(
            IfsConfig::validate(rat(1, 2), 2, vec![rat(0, 1), rat(1, 2)]),
            Err(Error::SeparationViolated(_))
        ));
        assert!(IfsConfig::validate(rat(1, 4), 3, vec![rat(0, 1), rat(3, 10), rat(3, 4)]).is_ok());
        assert!(matches!(IfsConfig::validate(rat(1, 3), 2, vec![rat(2, 3), rat(0, 1)]), Err(Error::NotSorted(_))));
        assert!(matches!(IfsConfig::validate(rat(0, 1), 2, vec![rat(0, 1), rat(2, 3)]), Err(Error::BadRatio(_))));
        assert!(matches!(IfsConfig::validate(rat(3, 2), 2, vec![rat(0, 1), rat(2, 3)]), Err(Error::BadRatio(_))));
        assert!(matches!(IfsConfig::validate(rat(1, 3), 2, vec![rat(0, 1), rat(3, 4)]), Err(Error::SeparationViolated(_))));
        assert!(matches!(IfsConfig::validate(rat(1, 3), 2, vec![rat(-1, 9), rat(2, 3)]), Err(Error::SeparationViolated(_))));
        assert!(matches!(IfsConfig::validate(rat(1, 3), 3, vec![rat(0, 1), rat(2, 3)]), Err(Error::BadAlphabet(_))));
    }

    #[test]
    fn gamma_values() {
        let g = IfsConfig::middle_third().gamma();
        assert!((g - 0.630_929_753_571_457_4).abs() < 1e-15);
        let quarter = IfsConfig::validate(rat(1, 4), 2, vec![rat(0, 1), rat(3, 4)]).unwrap();
        assert_eq!(quarter.gamma(), 0.5);
        assert_eq!(quarter.gamma_exact(), Some(&rat(1, 2)));
        assert!(IfsConfig::middle_third().gamma_exact().is_none());
        let fifth = IfsConfig::three_fifths();
        assert!((fifth.gamma() - 0.682_606_194_485_985_3).abs() < 1e-14);
    }

    #[test]
    fn word_values_and_cylinders() {
        let c = IfsConfig::middle_third();
        assert_eq!(word_value(&c, &w(&[2])).unwrap(), rat(2, 3));
        assert_eq!(word_value(&c, &w(&[1, 2])).unwrap(), rat(2, 9));
        assert_eq!(word_value(&c, &w(&[2, 1])).unwrap(), rat(2, 3));
        assert_eq!(word_value(&c, &w(&[])).unwrap(), rat(0, 1));
        assert!(matches!(word_value(&c, &w(&[3])), Err(Error::SymbolOutOfRange { symbol: 3, .. })));
        assert_eq!(cylinder_interval(&c, &w(&[1])).unwrap(), Interval::new(rat(0, 1), rat(1, 3)));
        assert_eq!(cylinder_interval(&c, &w(&[1, 2])).unwrap(), Interval::new(rat(2, 9), rat(1, 3)));
        assert_eq!(cylinder_interval(&c, &w(&[])).unwrap(), Interval::unit());
    }

    #[test]
    fn periodic_points() {
        let c = IfsConfig::middle_third();
        assert_eq!(periodic_point(&c, &w(&[1])).unwrap(), rat(0, 1));
        assert_eq!(periodic_point(&c, &w(&[1, 2])).unwrap(), rat(1, 4));
        assert_eq!(periodic_point(&c, &w(&[2])).unwrap(), rat(1, 1));
        assert_eq!(periodic_point(&c, &w(&[])), Err(Error::EmptyWord));
    }

    #[test]
    fn json_round_trip() {
        let c = IfsConfig::from_json(r#"{"rho": "1/3", "L": 2, "translations": ["0", "2/3"]}"#).unwrap();
        assert_eq!(c.rho(), &rat(1, 3));
        let again = IfsConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(again.translations(), c.translations());
        let decimal = IfsConfig::from_json(r#"{"rho": "0.2", "L": 3, "translations": ["0", "0.4", "0.8"]}"#).unwrap();
        assert_eq!(decimal.rho(), &rat(1, 5));
        assert!(IfsConfig::from_json(r#"{"rho": "1/2", "L": 2, "translations": ["0", "1/2"]}"#).is_err());
    }

    #[test]
    fn words_enumerate_lexicographically() {
        let all: Vec<Word> = Word::all_of_length(2, 2).collect();
        assert_eq!(all, vec![w(&[1, 1]), w(&[1, 2]), w(&[2, 1]), w(&[2, 2])]);
        assert_eq!(Word::all_of_length(3, 0).count(), 1);
        assert_eq!(w(&[1, 2, 3]).rotate(1), w(&[2, 3, 1]));
    }
}

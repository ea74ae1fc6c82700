//! The natural self-similar measure `mu = (1/L) sum_j phi_j mu` on intervals, with certified
//! error bounds, and an empirical check of two-sided Ahlfors regularity.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::IfsConfig;
use crate::interval::Interval;
use crate::numeric::{format_rational, from_f64, rational_str, to_f64};
use crate::rng;

/// Default recursion depth for measure evaluation; error at most `2 L^-depth`.
pub const DEFAULT_DEPTH: usize = 40;

/// A measure value with a guaranteed bound `|value - mu| <= error`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    #[serde(with = "rational_str")]
    pub value: BigRational,
    #[serde(with = "rational_str")]
    pub error: BigRational,
}

impl MeasureEstimate {
    pub fn exact(value: BigRational) -> Self {
        Self { value, error: BigRational::zero() }
    }

    pub fn zero() -> Self {
        Self::exact(BigRational::zero())
    }

    pub fn is_exact(&self) -> bool {
        self.error.is_zero()
    }

    pub fn lower(&self) -> BigRational {
        &self.value - &self.error
    }

    pub fn upper(&self) -> BigRational {
        &self.value + &self.error
    }

    pub fn value_f64(&self) -> f64 {
        to_f64(&self.value)
    }

    pub fn error_f64(&self) -> f64 {
        to_f64(&self.error)
    }

    /// Whether `x` is within the certified band.
    pub fn admits(&self, x: &BigRational) -> bool {
        self.lower() <= *x && *x <= self.upper()
    }
}

impl std::ops::Add for MeasureEstimate {
    type Output = MeasureEstimate;

    fn add(self, rhs: Self) -> Self {
        Self { value: self.value + rhs.value, error: self.error + rhs.error }
    }
}

impl std::iter::Sum for MeasureEstimate {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(MeasureEstimate::zero(), |a, b| a + b)
    }
}

impl fmt::Display for MeasureEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            write!(f, "{}", format_rational(&self.value))
        } else {
            write!(f, "{:.12} +/- {:.3e}", self.value_f64(), self.error_f64())
        }
    }
}

/// Per-level tallies of fully covered and unresolved cylinders; a level-`k` cylinder weighs
/// `L^-k` and an unresolved one adds half its weight to the value and half to the error.
struct Acc {
    full: Vec<u64>,
    unresolved: Vec<u64>,
}

impl Acc {
    fn new(max_depth: usize) -> Self {
        Self { full: vec![0; max_depth + 1], unresolved: vec![0; max_depth + 1] }
    }

    fn finish(self, alphabet: usize) -> MeasureEstimate {
        let depth = self.full.len() - 1;
        let l = BigInt::from(alphabet);
        // everything over 2 L^depth
        let mut value = BigInt::zero();
        let mut error = BigInt::zero();
        let mut scale = BigInt::from(2);
        for k in (0..=depth).rev() {
            value += &scale * BigInt::from(self.full[k]) + (&scale / 2) * BigInt::from(self.unresolved[k]);
            error += (&scale / 2) * BigInt::from(self.unresolved[k]);
            scale *= &l;
        }
        let denom = BigInt::from(2) * l.pow(depth as u32);
        MeasureEstimate { value: BigRational::new(value, denom.clone()), error: BigRational::new(error, denom) }
    }
}

/// Unnormalized fraction `n / d` with `d > 0`; the walker never needs lowest terms, and
/// skipping gcds and cross-multiplying is far cheaper than rational arithmetic.
#[derive(Clone)]
struct Frac {
    n: BigInt,
    d: BigInt,
}

impl Frac {
    fn from_rational(r: &BigRational) -> Self {
        Self { n: r.numer().clone(), d: r.denom().clone() }
    }

    fn is_zero(&self) -> bool {
        self.n.is_zero()
    }

    fn is_one(&self) -> bool {
        self.n == self.d
    }

    fn cmp(&self, other: &Frac) -> Ordering {
        (&self.n * &other.d).cmp(&(&other.n * &self.d))
    }

    fn lt(&self, other: &Frac) -> bool {
        self.cmp(other) == Ordering::Less
    }

    fn le(&self, other: &Frac) -> bool {
        self.cmp(other) != Ordering::Greater
    }
}

/// Evaluation context: shared constants for one configuration.
struct Walker {
    /// Translations `a_j = t_j / q` over the common denominator `q`.
    starts: Vec<Frac>,
    /// Right ends `a_j + rho`.
    ends: Vec<Frac>,
    /// `rho = rho_n / rho_d`.
    rho_n: BigInt,
    rho_d: BigInt,
    max_depth: usize,
}

/// Lowest terms every this many levels, to keep operands short.
const REDUCE_EVERY: usize = 12;

impl Walker {
    fn new(config: &IfsConfig, max_depth: usize) -> Self {
        let starts = config.translations().iter().map(Frac::from_rational).collect();
        let ends = config.translations().iter().map(|a| Frac::from_rational(&(a + config.rho()))).collect();
        Self { starts, ends, rho_n: config.rho().numer().clone(), rho_d: config.rho().denom().clone(), max_depth }
    }

    /// `(x - a_j) / rho`.
    fn rescale(&self, x: &Frac, j: usize, level: usize) -> Frac {
        let a = &self.starts[j];
        let n = (&x.n * &a.d - &a.n * &x.d) * &self.rho_d;
        let d = &x.d * &a.d * &self.rho_n;
        if level.is_multiple_of(REDUCE_EVERY) {
            let g = n.gcd(&d);
            if !g.is_one() && !g.is_zero() {
                return Frac { n: n / &g, d: d / g };
            }
        }
        Frac { n, d }
    }

    /// `mu([x, 1])` (when `suffix`) or `mu([0, x])` for `x` in `[0, 1]`, inside a level-`level`
    /// cylinder: a single descending branch, since one point cuts at most one piece.
    fn one_sided(&self, mut x: Frac, suffix: bool, mut level: usize, acc: &mut Acc) {
        loop {
            let at_lo = x.is_zero();
            let at_hi = x.is_one();
            if (suffix && at_hi) || (!suffix && at_lo) {
                return; // a single point carries no mass
            }
            if (suffix && at_lo) || (!suffix && at_hi) {
                acc.full[level] += 1;
                return;
            }
            if level == self.max_depth {
                acc.unresolved[level] += 1;
                return;
            }
            let mut cut = None;
            for (j, (a, b)) in self.starts.iter().zip(&self.ends).enumerate() {
                let covered = if suffix { x.le(a) } else { b.le(&x) };
                if covered {
                    acc.full[level + 1] += 1;
                } else if a.lt(&x) && x.lt(b) {
                    cut = Some(j);
                }
            }
            match cut {
                Some(j) => {
                    level += 1;
                    x = self.rescale(&x, j, level);
                }
                None => return,
            }
        }
    }

    /// `mu([lo, hi])` for `0 <= lo <= hi <= 1` inside a level-`level` cylinder.
    fn two_sided(&self, mut lo: Frac, mut hi: Frac, mut level: usize, acc: &mut Acc) {
        loop {
            if lo.is_zero() {
                return self.one_sided(hi, false, level, acc);
            }
            if hi.is_one() {
                return self.one_sided(lo, true, level, acc);
            }
            if lo.cmp(&hi) == Ordering::Equal {
                return;
            }
            if level == self.max_depth {
                acc.unresolved[level] += 1;
                return;
            }
            // A piece holding both endpoints means the whole interval sits inside it.
            let shared = self.starts.iter().zip(&self.ends).position(|(a, b)| a.le(&lo) && hi.le(b));
            if let Some(j) = shared {
                level += 1;
                lo = self.rescale(&lo, j, level);
                hi = self.rescale(&hi, j, level);
                continue;
            }
            for (j, (a, b)) in self.starts.iter().zip(&self.ends).enumerate() {
                if lo.le(a) && b.le(&hi) {
                    acc.full[level + 1] += 1;
                } else if a.lt(&lo) && lo.lt(b) {
                    self.one_sided(self.rescale(&lo, j, level + 1), true, level + 1, acc);
                } else if a.lt(&hi) && hi.lt(b) {
                    self.one_sided(self.rescale(&hi, j, level + 1), false, level + 1, acc);
                }
            }
            return;
        }
    }
}

/// `mu(iv)` by self-similar recursion. The interval is clipped to `[0, 1]`; any branch still
/// cut at `max_depth` contributes at most `L^-max_depth` of uncertainty, and at most two such
/// branches exist, so `error <= 2 L^-max_depth`.
pub fn mu_interval(config: &IfsConfig, iv: &Interval, max_depth: usize) -> MeasureEstimate {
    let Some(clipped) = iv.intersect(&Interval::unit()) else {
        return MeasureEstimate::zero();
    };
    let mut acc = Acc::new(max_depth);
    Walker::new(config, max_depth).two_sided(Frac::from_rational(&clipped.lo), Frac::from_rational(&clipped.hi), 0, &mut acc);
    acc.finish(config.alphabet())
}

/// `mu(B(center, radius))` with the closed ball clipped to `[0, 1]`.
pub fn mu_ball(config: &IfsConfig, center: &BigRational, radius: &BigRational, max_depth: usize) -> Result<MeasureEstimate> {
    if !radius.is_positive() {
        return Err(Error::NonpositiveRadius);
    }
    Ok(mu_interval(config, &Interval::ball(center, radius), max_depth))
}

/// Summary of a scan of `mu(B(x, r)) / r^gamma` over sampled balls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AhlforsReport {
    pub samples: usize,
    /// `None` when no samples were drawn.
    pub min_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    pub bound_lo: f64,
    pub bound_hi: f64,
    /// Samples whose certified ratio band leaves `[bound_lo - slack, bound_hi + slack]`.
    pub violations: usize,
    pub seed: u64,
}

impl AhlforsReport {
    pub fn within_bounds(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AhlforsRow {
    pub x: f64,
    pub r: f64,
    pub mu: f64,
    pub mu_err: f64,
    pub ratio: f64,
}

/// Slack absorbing the rounding of gamma in ratio checks.
pub const RATIO_SLACK: f64 = 1e-9;

/// Digits drawn per sampled center; the center is the point coded by those digits followed
/// by the first symbol repeated forever, so it lies in K exactly.
const CENTER_DIGITS: usize = 48;

/// Samples `n_samples` centers from `mu`, radii log-uniform in `[r_min, r_max]`, and compares
/// `mu(B(x, r)) / r^gamma` with `[1/L, 2/rho + 1]`.
pub fn ahlfors_scan(
    config: &IfsConfig,
    n_samples: usize,
    r_min: f64,
    r_max: f64,
    seed: u64,
    max_depth: usize,
) -> Result<(AhlforsReport, Vec<AhlforsRow>)> {
    if !(r_min > 0.0 && r_min < r_max && r_max <= 0.25) {
        return Err(Error::BadRange(format!("need 0 < r_min < r_max <= 1/4, got [{r_min}, {r_max}]")));
    }
    let (bound_lo, bound_hi) = config.ahlfors_constants();
    let gamma = config.gamma();
    let l = config.alphabet();
    let (ln_min, ln_max) = (r_min.ln(), r_max.ln());
    let tail = &config.translations()[0] / (BigRational::one() - config.rho());

    let results: Vec<(AhlforsRow, bool)> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, i);
            let digits: Vec<usize> = (0..CENTER_DIGITS).map(|_| rng.gen_range(0..l)).collect();
            let u: f64 = rng.gen();
            let r = (ln_min + u * (ln_max - ln_min)).exp();
            let mut x = tail.clone();
            for &d in digits.iter().rev() {
                x = &config.translations()[d] + config.rho() * x;
            }
            let radius = from_f64(r);
            let mu = mu_ball(config, &x, &radius, max_depth).expect("positive radius");
            let scale = r.powf(gamma);
            let ratio = mu.value_f64() / scale;
            let lo = to_f64(&mu.lower()) / scale;
            let hi = to_f64(&mu.upper()) / scale;
            let ok = lo >= bound_lo - RATIO_SLACK && hi <= bound_hi + RATIO_SLACK;
            (AhlforsRow { x: to_f64(&x), r, mu: mu.value_f64(), mu_err: mu.error_f64(), ratio }, ok)
        })
        .collect();

    let ratios = results.iter().map(|(row, _)| row.ratio);
    let report = AhlforsReport {
        samples: n_samples,
        min_ratio: ratios.clone().reduce(f64::min),
        max_ratio: ratios.reduce(f64::max),
        bound_lo,
        bound_hi,
        violations: results.iter().filter(|(_, ok)| !ok).count(),
        seed,
    };
    Ok((report, results.into_iter().map(|(row, _)| row).collect()))
}

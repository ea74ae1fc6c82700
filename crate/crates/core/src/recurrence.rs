//! Recurrence windows and the level sets `A_n(B) = {x in K : |T^n x - x| < phi(n)} ∩ B`.
//!
//! Inside the cylinder `I(w)` of a word `w` of length `n`, `x = [w] + rho^n T^n x`, so the
//! level-`n` condition cuts out the window `J(w)` around the periodic point `[w]/(1 - rho^n)`
//! of half-width `rho^n phi(n) / (1 - rho^n)`. Windows are closed here; their boundary is
//! finite per level and therefore `mu`-null.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::RateFunction;
use crate::error::{Error, Result};
use crate::ifs::{cylinder_interval, word_value, IfsConfig, Word};
use crate::interval::{intersect_sorted, merge, Interval};
use crate::measure::{mu_interval, MeasureEstimate};
use crate::numeric::{rational_str, to_f64};

/// Default cap on the number of words enumerated at one level.
pub const DEFAULT_LEVEL_CAP: u128 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JDescriptor {
    pub word: Word,
    #[serde(with = "rational_str")]
    pub center: BigRational,
    #[serde(with = "rational_str")]
    pub half_width: BigRational,
    pub interval: Interval,
}

/// The window `J(w) = I(w) ∩ [c - h, c + h]` with `c = [w]/(1 - rho^n)`, `h = rho^n phi_n/(1 - rho^n)`.
pub fn j_interval(config: &IfsConfig, word: &Word, phi_n: &BigRational) -> Result<JDescriptor> {
    if word.is_empty() {
        return Err(Error::EmptyWord);
    }
    if !phi_n.is_positive() {
        return Err(Error::NonpositiveRate);
    }
    let value = word_value(config, word)?;
    let rho_n = config.rho_pow(word.len());
    Ok(window(word.clone(), &value, &rho_n, phi_n))
}

fn window(word: Word, value: &BigRational, rho_n: &BigRational, phi_n: &BigRational) -> JDescriptor {
    let denom = BigRational::one() - rho_n;
    let center = value / &denom;
    let half_width = rho_n * phi_n / &denom;
    let cylinder = Interval::new(value.clone(), value + rho_n);
    let interval = cylinder.intersect(&Interval::ball(&center, &half_width)).expect("center lies in its cylinder");
    JDescriptor { word, center, half_width, interval }
}

/// Union of the level-`n` windows, optionally clipped to a region.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSet {
    pub n: usize,
    /// Sorted, pairwise disjoint.
    pub intervals: Vec<Interval>,
    pub region: Option<Interval>,
    /// Number of words whose window meets the region.
    pub count: u64,
}

impl LevelSet {
    pub fn from_intervals(n: usize, intervals: Vec<Interval>, region: Option<Interval>) -> Self {
        let count = intervals.len() as u64;
        Self { n, intervals: merge(intervals), region, count }
    }
}

/// Enumerates every level-`n` window by depth-first cylinder traversal, pruning subtrees whose
/// cylinder misses `region`.
pub fn enumerate_level(config: &IfsConfig, n: usize, phi_n: &BigRational, region: Option<&Interval>, cap: u128) -> Result<LevelSet> {
    if n == 0 {
        return Err(Error::BadRange("level must be at least 1".into()));
    }
    if !phi_n.is_positive() {
        return Err(Error::NonpositiveRate);
    }
    let words = (config.alphabet() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if words > cap {
        return Err(Error::LevelTooLarge { words, cap });
    }
    let rho_n = config.rho_pow(n);
    let scales: Vec<BigRational> = (0..=n).map(|k| config.rho_pow(k)).collect();
    let mut out = Vec::new();
    let mut count = 0u64;
    let mut stack: Vec<(Vec<u32>, BigRational)> = vec![(Vec::new(), BigRational::zero())];
    // Pushing children in reverse keeps the output in increasing order.
    while let Some((prefix, value)) = stack.pop() {
        let k = prefix.len();
        if let Some(r) = region {
            let cyl = Interval::new(value.clone(), &value + &scales[k]);
            if !cyl.meets(r) {
                continue;
            }
        }
        if k == n {
            let j = window(Word::new(prefix), &value, &rho_n, phi_n);
            let clipped = match region {
                Some(r) => j.interval.intersect(r),
                None => Some(j.interval),
            };
            if let Some(iv) = clipped {
                count += 1;
                out.push(iv);
            }
            continue;
        }
        for (j, a) in config.translations().iter().enumerate().rev() {
            let mut child = prefix.clone();
            child.push(j as u32 + 1);
            stack.push((child, &value + a * &scales[k]));
        }
    }
    Ok(LevelSet { n, intervals: merge(out), region: region.cloned(), count })
}

/// `mu` of the union of all given level sets.
pub fn mu_union(config: &IfsConfig, sets: &[LevelSet], max_depth: usize) -> MeasureEstimate {
    let all: Vec<Interval> = sets.iter().flat_map(|s| s.intervals.iter().cloned()).collect();
    mu_of_intervals(config, &merge(all), max_depth)
}

/// `mu` of a sorted disjoint interval list.
pub fn mu_of_intervals(config: &IfsConfig, intervals: &[Interval], max_depth: usize) -> MeasureEstimate {
    intervals.par_iter().map(|iv| mu_interval(config, iv, max_depth)).collect::<Vec<_>>().into_iter().sum()
}

/// Pairwise-intersection diagnostics for the level sets `A_1(B), ..., A_N(B)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiIndepReport {
    #[serde(rename = "N")]
    pub horizon: usize,
    pub ball: Interval,
    pub mu_ball: MeasureEstimate,
    /// `mu(A_n(B))` for `n = 1..=N`.
    pub per_level: Vec<MeasureEstimate>,
    /// `sum_n mu(A_n(B))`.
    pub sum_single: MeasureEstimate,
    /// `sum_{m,n <= N} mu(A_m(B) ∩ A_n(B))`, ordered pairs including the diagonal.
    pub sum_pairs: MeasureEstimate,
    /// `sum_pairs * mu(B) / sum_single^2`.
    pub ratio: f64,
    /// `sum_single^2 / sum_pairs`, a lower bound for `mu(A_1(B) ∪ ... ∪ A_N(B))`.
    pub pz_lower: f64,
    /// `mu(A_1(B) ∪ ... ∪ A_N(B))`.
    pub union: MeasureEstimate,
}

impl QuasiIndepReport {
    /// `pz_lower <= mu(union) + accumulated error`.
    pub fn pz_consistent(&self) -> bool {
        let slack = self.sum_single.error_f64() + self.sum_pairs.error_f64() + self.union.error_f64();
        self.pz_lower <= self.union.value_f64() + slack + 1e-12
    }
}

/// Rates as exact rationals for windows: exact when the family allows, otherwise the exact
/// binary value of the float evaluation.
pub fn rate_rational(config: &IfsConfig, phi: &RateFunction, n: usize) -> Result<BigRational> {
    phi.eval_rational(config, n)
}

/// Enumerates `A_1(B), ..., A_N(B)` for `n` in `levels`.
pub fn level_sets(config: &IfsConfig, ball: &Interval, phi: &RateFunction, levels: std::ops::RangeInclusive<usize>, cap: u128) -> Result<Vec<LevelSet>> {
    levels
        .map(|n| {
            let phi_n = rate_rational(config, phi, n)?;
            enumerate_level(config, n, &phi_n, Some(ball), cap)
        })
        .collect()
}

pub fn quasi_independence(config: &IfsConfig, ball: &Interval, phi: &RateFunction, horizon: usize, max_depth: usize, cap: u128) -> Result<QuasiIndepReport> {
    if horizon == 0 {
        return Err(Error::BadRange("horizon must be at least 1".into()));
    }
    let mu_b = mu_interval(config, ball, max_depth);
    if !mu_b.lower().is_positive() {
        return Err(Error::EmptyBall);
    }
    let sets = level_sets(config, ball, phi, 1..=horizon, cap)?;
    let per_level: Vec<MeasureEstimate> = sets.iter().map(|s| mu_of_intervals(config, &s.intervals, max_depth)).collect();
    let pairs: Vec<(usize, usize)> = (0..horizon).flat_map(|m| (m + 1..horizon).map(move |n| (m, n))).collect();
    let off_diagonal: MeasureEstimate = pairs
        .par_iter()
        .map(|&(m, n)| {
            let inter = intersect_sorted(&sets[m].intervals, &sets[n].intervals);
            inter.iter().map(|iv| mu_interval(config, iv, max_depth)).sum::<MeasureEstimate>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    let sum_single: MeasureEstimate = per_level.iter().cloned().sum();
    let two = BigRational::from_integer(BigInt::from(2));
    let sum_pairs = MeasureEstimate {
        value: &sum_single.value + &two * &off_diagonal.value,
        error: &sum_single.error + &two * &off_diagonal.error,
    };
    let union = mu_union(config, &sets, max_depth);
    let s = to_f64(&sum_single.value);
    let p = to_f64(&sum_pairs.value);
    let ratio = if s > 0.0 { p * mu_b.value_f64() / (s * s) } else { f64::INFINITY };
    let pz_lower = if p > 0.0 { s * s / p } else { 0.0 };
    Ok(QuasiIndepReport { horizon, ball: ball.clone(), mu_ball: mu_b, per_level, sum_single, sum_pairs, ratio, pz_lower, union })
}

/// One row of the per-level table: `n, count, mu(A_n), cumulative mu(A_k ∪ ... ∪ A_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub n: usize,
    pub count: u64,
    #[serde(rename = "mu_An")]
    pub mu_an: f64,
    #[serde(rename = "mu_An_err")]
    pub mu_an_err: f64,
    pub cumulative: f64,
    pub cumulative_err: f64,
}

/// Per-level measures of `A_n([0,1])` for `n` in `k..=horizon`, with the running union.
pub fn level_table(config: &IfsConfig, phi: &RateFunction, k: usize, horizon: usize, max_depth: usize, cap: u128) -> Result<(Vec<LevelRow>, MeasureEstimate)> {
    if k == 0 || k > horizon {
        return Err(Error::BadRange(format!("need 1 <= k <= N, got k={k}, N={horizon}")));
    }
    let unit = Interval::unit();
    let mut rows = Vec::new();
    let mut running: Vec<Interval> = Vec::new();
    let mut cumulative = MeasureEstimate::zero();
    for n in k..=horizon {
        let phi_n = rate_rational(config, phi, n)?;
        let set = enumerate_level(config, n, &phi_n, Some(&unit), cap)?;
        let mu_an = mu_of_intervals(config, &set.intervals, max_depth);
        // mu(U ∪ A_n) = mu(U) + mu(A_n) - mu(U ∩ A_n)
        let overlap = mu_of_intervals(config, &intersect_sorted(&running, &set.intervals), max_depth);
        cumulative = MeasureEstimate {
            value: &cumulative.value + &mu_an.value - &overlap.value,
            error: &cumulative.error + &mu_an.error + &overlap.error,
        };
        running.extend(set.intervals.iter().cloned());
        running = merge(running);
        rows.push(LevelRow {
            n,
            count: set.count,
            mu_an: mu_an.value_f64(),
            mu_an_err: mu_an.error_f64(),
            cumulative: cumulative.value_f64(),
            cumulative_err: cumulative.error_f64(),
        });
    }
    Ok((rows, cumulative))
}

/// Count of level-`m` cylinders meeting an interval.
pub fn cylinders_meeting(config: &IfsConfig, m: usize, region: &Interval) -> u64 {
    Word::all_of_length(config.alphabet(), m)
        .filter(|w| cylinder_interval(config, w).map(|c| c.meets(region)).unwrap_or(false))
        .count() as u64
}

/// `L^n` as an exact rational, used by count bounds.
pub fn alphabet_pow(config: &IfsConfig, n: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(config.alphabet()).pow(n as u32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    fn w(v: &[u32]) -> Word {
        Word::new(v.to_vec())
    }

    #[test]
    fn window_examples() {
        let c = IfsConfig::middle_third();
        let phi = rat(1, 10);
        let j1 = j_interval(&c, &w(&[1]), &phi).unwrap();
        assert_eq!(j1.center, rat(0, 1));
        assert_eq!(j1.half_width, rat(1, 20));
        assert_eq!(j1.interval, Interval::new(rat(0, 1), rat(1, 20)));
        let j2 = j_interval(&c, &w(&[2]), &phi).unwrap();
        assert_eq!(j2.interval, Interval::new(rat(19, 20), rat(1, 1)));
        let j12 = j_interval(&c, &w(&[1, 2]), &phi).unwrap();
        assert_eq!(j12.center, rat(1, 4));
        assert_eq!(j12.half_width, rat(1, 80));
        assert_eq!(j12.interval, Interval::new(rat(19, 80), rat(21, 80)));
        assert_eq!(j_interval(&c, &w(&[]), &phi), Err(Error::EmptyWord));
        assert_eq!(j_interval(&c, &w(&[1]), &rat(0, 1)), Err(Error::NonpositiveRate));
    }

    #[test]
    fn level_examples() {
        let c = IfsConfig::middle_third();
        let phi = rat(1, 10);
        let all = enumerate_level(&c, 1, &phi, None, DEFAULT_LEVEL_CAP).unwrap();
        assert_eq!(all.intervals, vec![Interval::new(rat(0, 1), rat(1, 20)), Interval::new(rat(19, 20), rat(1, 1))]);
        assert_eq!(all.count, 2);
        let left = Interval::new(rat(0, 1), rat(1, 3));
        let pruned = enumerate_level(&c, 1, &phi, Some(&left), DEFAULT_LEVEL_CAP).unwrap();
        assert_eq!(pruned.intervals, vec![Interval::new(rat(0, 1), rat(1, 20))]);
        assert_eq!(pruned.count, 1);
        let outside = Interval::new(rat(2, 1), rat(3, 1));
        let none = enumerate_level(&c, 3, &phi, Some(&outside), DEFAULT_LEVEL_CAP).unwrap();
        assert!(none.intervals.is_empty());
        assert_eq!(none.count, 0);
        assert!(matches!(enumerate_level(&c, 21, &phi, None, DEFAULT_LEVEL_CAP), Err(Error::LevelTooLarge { .. })));
    }

    #[test]
    fn enumeration_matches_direct_windows() {
        let c = IfsConfig::three_fifths();
        let phi = rat(1, 10);
        let set = enumerate_level(&c, 3, &phi, None, DEFAULT_LEVEL_CAP).unwrap();
        let direct: Vec<Interval> = Word::all_of_length(3, 3).map(|wd| j_interval(&c, &wd, &phi).unwrap().interval).collect();
        assert_eq!(set.intervals, merge(direct));
        assert_eq!(set.count, 27);
    }

    #[test]
    fn union_examples() {
        let c = IfsConfig::middle_third();
        let level = enumerate_level(&c, 1, &rat(1, 10), None, DEFAULT_LEVEL_CAP).unwrap();
        assert_eq!(mu_union(&c, std::slice::from_ref(&level), 40), MeasureEstimate::exact(rat(1, 4)));
        assert_eq!(mu_union(&c, &[level.clone(), level.clone()], 40), MeasureEstimate::exact(rat(1, 4)));
        let full = LevelSet::from_intervals(1, vec![Interval::unit()], None);
        assert_eq!(mu_union(&c, &[full], 1), MeasureEstimate::exact(rat(1, 1)));
    }

    #[test]
    fn quasi_independence_single_level() {
        let c = IfsConfig::middle_third();
        let phi = RateFunction::constant(rat(1, 10));
        let report = quasi_independence(&c, &Interval::unit(), &phi, 1, 40, DEFAULT_LEVEL_CAP).unwrap();
        assert_eq!(report.sum_single, MeasureEstimate::exact(rat(1, 4)));
        assert_eq!(report.sum_pairs, MeasureEstimate::exact(rat(1, 4)));
        assert!((report.ratio - 4.0).abs() < 1e-12);
        assert!((report.pz_lower - 0.25).abs() < 1e-12);
        assert_eq!(report.union, MeasureEstimate::exact(rat(1, 4)));
        assert!(report.pz_consistent());
    }

    #[test]
    fn quasi_independence_rejects_null_ball() {
        let c = IfsConfig::middle_third();
        let gap = Interval::new(rat(2, 5), rat(3, 5));
        let phi = RateFunction::constant(rat(1, 10));
        assert_eq!(quasi_independence(&c, &gap, &phi, 2, 40, DEFAULT_LEVEL_CAP), Err(Error::EmptyBall));
    }

    #[test]
    fn level_table_accumulates() {
        let c = IfsConfig::middle_third();
        let phi = RateFunction::constant(rat(1, 10));
        let (rows, cumulative) = level_table(&c, &phi, 1, 4, 40, DEFAULT_LEVEL_CAP).unwrap();
        assert_eq!(rows.len(), 4);
        assert!((rows[0].mu_an - 0.25).abs() < 1e-15);
        assert!(rows.windows(2).all(|r| r[1].cumulative >= r[0].cumulative - 1e-15));
        assert!((cumulative.value_f64() - rows[3].cumulative).abs() < 1e-15);
        assert!(level_table(&c, &phi, 3, 2, 40, DEFAULT_LEVEL_CAP).is_err());
    }
}

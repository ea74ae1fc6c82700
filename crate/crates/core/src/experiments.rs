//! Seeded Monte Carlo orbit experiments and the covering-exponent estimator.
//!
//! A sample is a `mu`-typical point drawn as i.i.d. uniform digits. Orbits are evaluated in
//! floating point by the backward recurrence `y_m = a(d_{m+1}) + rho y_{m+1}` over `D` digits;
//! with `z = T^D x` unknown in `[0, 1]`,
//! `T^n x - x = (y_n - y_0) + z (rho^(D-n) - rho^D)`, so every distance comes with an explicit
//! enclosure, widened by a float slack, and threshold tests are three-valued.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::asymptotics::RateFunction;
use crate::coding::{recurrence_distance, CodedPoint};
use crate::error::{Error, Result};
use crate::ifs::{IfsConfig, Word};
use crate::numeric::to_f64;
use crate::rng::{stream, RNG_NAME};

/// Digits generated beyond the horizon.
pub const DEPTH_MARGIN: usize = 64;
/// Extra digits drawn once for an undecided test.
pub const ESCALATION: usize = 64;
/// Absolute slack covering float rounding in the backward recurrence.
pub const FLOAT_SLACK: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UndecidedPolicy {
    /// Redraw with `extra` more digits, then count the test as a miss.
    EscalateThenMiss { extra: usize },
}

impl Default for UndecidedPolicy {
    fn default() -> Self {
        Self::EscalateThenMiss { extra: ESCALATION }
    }
}

/// Everything that determines a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub ifs: crate::ifs::IfsSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<RateFunction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub k: usize,
    #[serde(rename = "N")]
    pub horizon: usize,
    pub samples: usize,
    pub depth: usize,
    pub seed: u64,
    pub undecided_policy: UndecidedPolicy,
}

impl ExperimentConfig {
    pub fn new(experiment: &str, config: &IfsConfig, k: usize, horizon: usize, samples: usize, seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            ifs: config.spec(),
            phi: None,
            alpha: None,
            k,
            horizon,
            samples,
            depth: horizon + DEPTH_MARGIN,
            seed,
            undecided_policy: UndecidedPolicy::default(),
        }
    }

    pub fn provenance(&self) -> Provenance {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let hash = Sha256::digest(canonical.as_bytes());
        Provenance {
            config_hash: hash.iter().map(|b| format!("{b:02x}")).collect(),
            seed: Some(self.seed),
            version: env!("CARGO_PKG_VERSION").to_string(),
            rng: RNG_NAME.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: Option<u64>,
    pub version: String,
    pub rng: String,
}

impl Provenance {
    /// Provenance of a deterministic (seedless) computation keyed by arbitrary parameters.
    pub fn for_params(params: &serde_json::Value) -> Self {
        let hash = Sha256::digest(params.to_string().as_bytes());
        Self {
            config_hash: hash.iter().map(|b| format!("{b:02x}")).collect(),
            seed: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
            rng: RNG_NAME.to_string(),
        }
    }
}

fn draw_digits(config: &IfsConfig, seed: u64, index: u64, depth: usize) -> Vec<u32> {
    let mut rng = stream(seed, index);
    let l = config.alphabet() as u32;
    (0..depth).map(|_| rng.gen_range(1..=l)).collect()
}

/// Sample `index` of the run keyed by `seed`: `depth` i.i.d. uniform digits. Longer draws
/// extend shorter ones.
pub fn sample_point_indexed(config: &IfsConfig, seed: u64, index: u64, depth: usize) -> Result<CodedPoint> {
    if depth == 0 {
        return Err(Error::BadRange("depth must be at least 1".into()));
    }
    CodedPoint::truncated(config, Word::new(draw_digits(config, seed, index, depth)))
}

pub fn sample_point(config: &IfsConfig, seed: u64, depth: usize) -> Result<CodedPoint> {
    sample_point_indexed(config, seed, 0, depth)
}

/// Float orbit of a digit string.
struct Orbit {
    /// `y_m` for `m = 0..=D`.
    y: Vec<f64>,
    rho_pow: Vec<f64>,
}

impl Orbit {
    fn new(config: &IfsConfig, digits: &[u32]) -> Self {
        let rho = config.rho_f64();
        let a = config.translations_f64();
        let d = digits.len();
        let mut y = vec![0.0; d + 1];
        for m in (0..d).rev() {
            y[m] = a[(digits[m] - 1) as usize] + rho * y[m + 1];
        }
        let mut rho_pow = vec![1.0; d + 1];
        for i in 1..=d {
            rho_pow[i] = rho_pow[i - 1] * rho;
        }
        Self { y, rho_pow }
    }

    fn depth(&self) -> usize {
        self.y.len() - 1
    }

    /// Enclosure of `|T^n x - x|`.
    fn distance(&self, n: usize) -> (f64, f64) {
        let d = self.depth();
        let base = self.y[n] - self.y[0];
        let spread = self.rho_pow[d - n] - self.rho_pow[d];
        let lo = base - FLOAT_SLACK;
        let hi = base + spread + FLOAT_SLACK;
        if lo >= 0.0 {
            (lo, hi)
        } else if hi <= 0.0 {
            (-hi, -lo)
        } else {
            (0.0, hi.max(-lo))
        }
    }
}

fn below(enclosure: (f64, f64), threshold: f64) -> Option<bool> {
    if enclosure.1 < threshold {
        Some(true)
    } else if enclosure.0 >= threshold {
        Some(false)
    } else {
        None
    }
}

#[derive(Debug, Clone, Default)]
struct SampleHits {
    hits: Vec<bool>,
    undecided: u64,
    escalated: u64,
}

fn sample_hits(config: &IfsConfig, thresholds: &[f64], k: usize, seed: u64, index: u64, depth: usize, extra: usize) -> SampleHits {
    let horizon = k + thresholds.len() - 1;
    let digits = draw_digits(config, seed, index, depth + extra);
    let orbit = Orbit::new(config, &digits[..depth]);
    let mut deep: Option<Orbit> = None;
    let mut out = SampleHits { hits: Vec::with_capacity(thresholds.len()), ..Default::default() };
    for n in k..=horizon {
        let t = thresholds[n - k];
        let decided = match below(orbit.distance(n), t) {
            Some(v) => Some(v),
            None => {
                out.escalated += 1;
                let deep = deep.get_or_insert_with(|| Orbit::new(config, &digits));
                below(deep.distance(n), t)
            }
        };
        out.hits.push(decided.unwrap_or_else(|| {
            out.undecided += 1;
            false
        }));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionReport {
    pub fraction: f64,
    /// Samples with at least one decided hit in `[k, N]`.
    pub recurrent: u64,
    pub samples: u64,
    pub k: usize,
    #[serde(rename = "N")]
    pub horizon: usize,
    /// `histogram[i]` counts samples hitting at `n = k + i`.
    pub histogram: Vec<u64>,
    pub tests: u64,
    pub escalated: u64,
    pub undecided: u64,
    pub provenance: Provenance,
}

impl FractionReport {
    pub fn undecided_rate(&self) -> f64 {
        if self.tests == 0 {
            0.0
        } else {
            self.undecided as f64 / self.tests as f64
        }
    }
}

/// Fraction of samples with `|T^n x - x| < phi(n)` for some `n` in `[k, N]`.
pub fn recurrent_fraction(config: &IfsConfig, phi: &RateFunction, horizon: usize, k: usize, samples: usize, seed: u64) -> Result<FractionReport> {
    if k == 0 || k > horizon {
        return Err(Error::BadRange(format!("need 1 <= k <= N, got k = {k}, N = {horizon}")));
    }
    phi.validate(config)?;
    let thresholds = (k..=horizon).map(|n| phi.eval(config, n)).collect::<Result<Vec<_>>>()?;
    let mut exp = ExperimentConfig::new("recurrent_fraction", config, k, horizon, samples, seed);
    exp.phi = Some(phi.clone());
    let UndecidedPolicy::EscalateThenMiss { extra } = exp.undecided_policy;
    let depth = exp.depth;
    let per_sample: Vec<SampleHits> = (0..samples as u64)
        .into_par_iter()
        .map(|i| sample_hits(config, &thresholds, k, seed, i, depth, extra))
        .collect();
    let mut histogram = vec![0u64; thresholds.len()];
    let (mut recurrent, mut escalated, mut undecided) = (0u64, 0u64, 0u64);
    for s in &per_sample {
        for (h, hit) in histogram.iter_mut().zip(&s.hits) {
            *h += *hit as u64;
        }
        recurrent += s.hits.iter().any(|h| *h) as u64;
        escalated += s.escalated;
        undecided += s.undecided;
    }
    Ok(FractionReport {
        fraction: if samples == 0 { 0.0 } else { recurrent as f64 / samples as f64 },
        recurrent,
        samples: samples as u64,
        k,
        horizon,
        histogram,
        tests: (samples * thresholds.len()) as u64,
        escalated,
        undecided,
        provenance: exp.provenance(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiminfSample {
    pub index: u64,
    /// Certified enclosure of `min_{1<=n<=N} n^(1/alpha) |T^n x - x|`.
    pub lo: f64,
    pub hi: f64,
    /// Where the upper end is attained.
    pub argmin: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub p10: f64,
    pub median: f64,
    pub p90: f64,
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self { p10: quantile(&v, 0.1), median: quantile(&v, 0.5), p90: quantile(&v, 0.9) }
    }
}

/// Lower empirical quantile of sorted data: the `ceil(q m)`-th smallest value.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiminfReport {
    pub alpha: f64,
    #[serde(rename = "N")]
    pub horizon: usize,
    pub samples: Vec<LiminfSample>,
    /// Quantiles of the lower ends; certified lower bounds for the true quantiles.
    pub lower: Quantiles,
    /// Quantiles of the upper ends; certified upper bounds for the true quantiles.
    pub upper: Quantiles,
    pub provenance: Provenance,
}

/// `min_{n<=N} n^(1/alpha) |T^n x - x|` over `samples` typical points.
pub fn liminf_statistic(config: &IfsConfig, alpha: f64, horizon: usize, samples: usize, seed: u64) -> Result<LiminfReport> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::BadRange(format!("alpha must be positive, got {alpha}")));
    }
    if horizon == 0 {
        return Err(Error::BadRange("N must be at least 1".into()));
    }
    let mut exp = ExperimentConfig::new("liminf_statistic", config, 1, horizon, samples, seed);
    exp.alpha = Some(alpha);
    let depth = exp.depth;
    let weights: Vec<f64> = (1..=horizon).map(|n| (n as f64).powf(1.0 / alpha)).collect();
    let rows: Vec<LiminfSample> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let orbit = Orbit::new(config, &draw_digits(config, seed, i, depth));
            let mut best = LiminfSample { index: i, lo: f64::INFINITY, hi: f64::INFINITY, argmin: 0 };
            for n in 1..=horizon {
                let (lo, hi) = orbit.distance(n);
                let w = weights[n - 1];
                best.lo = best.lo.min(lo * w);
                if hi * w < best.hi {
                    best.hi = hi * w;
                    best.argmin = n;
                }
            }
            best
        })
        .collect();
    let lower = Quantiles::of(&rows.iter().map(|r| r.lo).collect::<Vec<_>>());
    let upper = Quantiles::of(&rows.iter().map(|r| r.hi).collect::<Vec<_>>());
    Ok(LiminfReport { alpha, horizon, samples: rows, lower, upper, provenance: exp.provenance() })
}

/// The same statistic for one exact point, with exact distances.
pub fn liminf_exact(config: &IfsConfig, point: &CodedPoint, alpha: f64, horizon: usize) -> Result<f64> {
    if !point.is_exact() {
        return Err(Error::BadRange("liminf_exact needs an exact point".into()));
    }
    (1..=horizon).try_fold(f64::INFINITY, |best, n| {
        let d = recurrence_distance(config, point, n)?.value();
        Ok(best.min(to_f64(&d) * (n as f64).powf(1.0 / alpha)))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub s: f64,
    pub k: usize,
    #[serde(rename = "N")]
    pub horizon: usize,
    /// `(s, log10 of the cover sum)` on a grid over the bisection bracket.
    pub curve: Vec<(f64, f64)>,
}

pub const COVERING_TOLERANCE: f64 = 1e-6;

/// Root `s` of `sum_{n=k}^N L^n min(rho^(n-1) phi(n), rho^n)^s = 1`: the exponent at which
/// the natural cover of `A_k ∪ ... ∪ A_N` by one window per level-`n` word has unit cost.
/// Each level contributes `L^n` windows of the same length, so no enumeration is needed.
pub fn covering_exponent(config: &IfsConfig, phi: &RateFunction, k: usize, horizon: usize) -> Result<CoveringReport> {
    if k == 0 || k > horizon {
        return Err(Error::NoRoot(format!("empty level range [{k}, {horizon}]")));
    }
    phi.validate(config)?;
    let ln_l = (config.alphabet() as f64).ln();
    let ln_rho = config.rho_f64().ln();
    let levels = (k..=horizon)
        .map(|n| {
            let nf = n as f64;
            let ln_len = ((nf - 1.0) * ln_rho + phi.ln_eval(config, n)?).min(nf * ln_rho);
            Ok((nf * ln_l, ln_len))
        })
        .collect::<Result<Vec<_>>>()?;
    let ln_sum = |s: f64| -> f64 {
        let terms: Vec<f64> = levels.iter().map(|(c, l)| c + s * l).collect();
        let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
    };
    if ln_sum(0.0) < 0.0 {
        return Err(Error::NoRoot("cover sum below 1 at s = 0".into()));
    }
    let mut hi = 1.0;
    while ln_sum(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NoRoot("cover sum does not fall below 1".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > COVERING_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if ln_sum(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let top = if s < 1.0 { 1.0 } else { 2.0 * s };
    let curve = (0..=100)
        .map(|i| {
            let x = top * i as f64 / 100.0;
            (x, ln_sum(x) / std::f64::consts::LN_10)
        })
        .collect();
    Ok(CoveringReport { s, k, horizon, curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::pi_eval;
    use crate::numeric::rat;
    use crate::GammaExpr;

    #[test]
    fn sample_points_are_deterministic() {
        let c = IfsConfig::middle_third();
        let a = sample_point(&c, 11, 30).unwrap();
        assert_eq!(a, sample_point(&c, 11, 30).unwrap());
        assert_ne!(a, sample_point(&c, 12, 30).unwrap());
        assert_eq!(sample_point(&c, 11, 1).unwrap().enclosure().width(), rat(1, 3));
        let long = sample_point_indexed(&c, 11, 5, 40).unwrap();
        let short = sample_point_indexed(&c, 11, 5, 20).unwrap();
        assert_eq!(long.digits(20).unwrap(), short.digits(20).unwrap());
        assert!(sample_point(&c, 1, 0).is_err());
    }

    #[test]
    fn float_orbit_brackets_exact_distance() {
        let c = IfsConfig::three_fifths();
        for i in 0..20 {
            let p = sample_point_indexed(&c, 3, i, 40).unwrap();
            let orbit = Orbit::new(&c, p.digits(40).unwrap().symbols());
            for n in 1..30 {
                let exact = recurrence_distance(&c, &p, n).unwrap();
                let (lo, hi) = orbit.distance(n);
                assert!(lo <= to_f64(&exact.lo) + 1e-15 && to_f64(&exact.hi) <= hi + 1e-15);
            }
        }
    }

    #[test]
    fn trivial_window_always_hits() {
        let c = IfsConfig::middle_third();
        let r = recurrent_fraction(&c, &RateFunction::constant(rat(2, 1)), 20, 1, 200, 9).unwrap();
        assert_eq!(r.fraction, 1.0);
        assert_eq!(r.undecided, 0);
        assert!(r.histogram.iter().all(|h| *h == 200));
    }

    #[test]
    fn fraction_is_monotone_in_range() {
        let c = IfsConfig::middle_third();
        let phi = RateFunction::critical_clamped();
        let f = |k, n| recurrent_fraction(&c, &phi, n, k, 500, 4).unwrap().fraction;
        assert!(f(1, 20) <= f(1, 40));
        assert!(f(5, 40) <= f(1, 40));
    }

    #[test]
    fn periodic_point_has_zero_statistic() {
        let c = IfsConfig::middle_third();
        let p = pi_eval(&c, &Word::empty(), &Word::new(vec![1, 2])).unwrap();
        assert_eq!(liminf_exact(&c, &p, 0.3, 2).unwrap(), 0.0);
        assert!(liminf_exact(&c, &p, 0.3, 1).unwrap() > 0.0);
    }

    #[test]
    fn liminf_is_monotone_in_horizon() {
        let c = IfsConfig::middle_third();
        let a = liminf_statistic(&c, c.gamma(), 50, 100, 2).unwrap();
        let b = liminf_statistic(&c, c.gamma(), 200, 100, 2).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!(y.hi <= x.hi && y.lo <= x.lo);
        }
    }

    #[test]
    fn covering_single_level_matches_closed_form() {
        let c = IfsConfig::middle_third();
        // k = N = n, b = 1: L^n rho^((2n-1) s) = 1
        for n in [3usize, 10, 25] {
            let r = covering_exponent(&c, &RateFunction::geometric(GammaExpr::int(1)), n, n).unwrap();
            let expected = n as f64 * 2f64.ln() / ((2 * n - 1) as f64 * 3f64.ln());
            assert!((r.s - expected).abs() < 2e-6, "{n}: {} vs {expected}", r.s);
        }
        assert!(matches!(covering_exponent(&c, &RateFunction::geometric(GammaExpr::int(1)), 5, 4), Err(Error::NoRoot(_))));
    }

    #[test]
    fn provenance_hash_tracks_config() {
        let c = IfsConfig::middle_third();
        let a = ExperimentConfig::new("x", &c, 1, 10, 5, 1).provenance();
        let b = ExperimentConfig::new("x", &c, 1, 10, 5, 2).provenance();
        assert_ne!(a.config_hash, b.config_hash);
        assert_eq!(a.config_hash.len(), 64);
    }
}

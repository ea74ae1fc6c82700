//! Rate functions `phi`, dimension functions `f`, and closed-form classification of the two
//! series governing recurrence:
//!
//! * measure series `sum_n phi(n)^gamma` (null set iff convergent),
//! * Hausdorff series `sum_n f(rho^n phi(n)) rho^(-gamma n)` (zero `H^f` iff convergent).
//!
//! Every implemented family behaves like `phi(n) ≍ rho^(b n) n^p` for symbolic `b, p`, and every
//! dimension function is `r^s log(1/r)^t`, so both series are, up to bounded factors,
//! `sum_n exp(n * lin) * n^poly` and converge iff `lin < 0`, or `lin = 0` and `poly < -1`.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::IfsConfig;
use crate::interval::Interval;
use crate::numeric::{exact_root, from_f64, pow_rational, to_f64, GammaExpr, SignOf};

/// Positive rate `phi : N -> R+`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RateFunction {
    /// `c`
    Constant { c: GammaExpr },
    /// `c * n^(-1/alpha)`
    Power { c: GammaExpr, alpha: GammaExpr },
    /// `rho^(b n)`
    Geometric { b: GammaExpr },
    /// `rho^(b n) * (n log(1/rho))^e`
    #[serde(rename = "geometric_log")]
    GeometricLog { b: GammaExpr, e: GammaExpr },
    /// Explicit values `phi(1), ..., phi(len)`.
    Table { values: Vec<f64> },
    /// `min(inner(n), (1 - rho)/4)`
    Clamped { inner: Box<RateFunction> },
}

impl RateFunction {
    pub fn constant(c: BigRational) -> Self {
        Self::Constant { c: GammaExpr::rational(c) }
    }

    pub fn power(c: GammaExpr, alpha: GammaExpr) -> Self {
        Self::Power { c, alpha }
    }

    pub fn geometric(b: GammaExpr) -> Self {
        Self::Geometric { b }
    }

    pub fn geometric_log(b: GammaExpr, e: GammaExpr) -> Self {
        Self::GeometricLog { b, e }
    }

    pub fn clamped(inner: RateFunction) -> Self {
        Self::Clamped { inner: Box::new(inner) }
    }

    /// `min(n^(-1/gamma), (1-rho)/4)`: the critical divergent rate.
    pub fn critical_clamped() -> Self {
        Self::clamped(Self::power(GammaExpr::int(1), GammaExpr::gamma()))
    }

    /// Rejects nonpositive constants and exponents that make the family ill-defined.
    pub fn validate(&self, config: &IfsConfig) -> Result<()> {
        let gamma = config.gamma();
        let positive = |e: &GammaExpr, what: &str| match e.sign(gamma, config.gamma_exact()) {
            SignOf::Positive => Ok(()),
            _ => Err(Error::UnknownFamily(format!("{what} must be positive, got {e}"))),
        };
        match self {
            Self::Constant { c } => positive(c, "c"),
            Self::Power { c, alpha } => {
                positive(c, "c")?;
                positive(alpha, "alpha")
            }
            Self::Geometric { .. } | Self::GeometricLog { .. } => Ok(()),
            Self::Table { values } => {
                if values.iter().all(|v| v.is_finite() && *v > 0.0) {
                    Ok(())
                } else {
                    Err(Error::NonpositiveRate)
                }
            }
            Self::Clamped { inner } => inner.validate(config),
        }
    }

    /// Horizon of a table (possibly nested in a clamp).
    pub fn table_len(&self) -> Option<usize> {
        match self {
            Self::Table { values } => Some(values.len()),
            Self::Clamped { inner } => inner.table_len(),
            _ => None,
        }
    }

    /// `ln phi(n)`.
    pub fn ln_eval(&self, config: &IfsConfig, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::BadRange("rates are indexed from n = 1".into()));
        }
        let gamma = config.gamma();
        let ln_inv_rho = -config.rho_f64().ln();
        let nf = n as f64;
        Ok(match self {
            Self::Constant { c } => c.eval(gamma).ln(),
            Self::Power { c, alpha } => c.eval(gamma).ln() - nf.ln() / alpha.eval(gamma),
            Self::Geometric { b } => -b.eval(gamma) * nf * ln_inv_rho,
            Self::GeometricLog { b, e } => -b.eval(gamma) * nf * ln_inv_rho + e.eval(gamma) * (nf * ln_inv_rho).ln(),
            Self::Table { values } => values
                .get(n - 1)
                .ok_or_else(|| Error::BadRange(format!("table has {} entries, asked for n = {n}", values.len())))?
                .ln(),
            Self::Clamped { inner } => inner.ln_eval(config, n)?.min(to_f64(&config.clamp_level()).ln()),
        })
    }

    pub fn eval(&self, config: &IfsConfig, n: usize) -> Result<f64> {
        if let Some(exact) = self.exact_value(config, n) {
            return Ok(to_f64(&exact));
        }
        Ok(self.ln_eval(config, n)?.exp())
    }

    /// Exact rational value where the family allows it (rational constants, integral
    /// geometric exponents, clamps of those); otherwise the exact binary value of the float.
    pub fn eval_rational(&self, config: &IfsConfig, n: usize) -> Result<BigRational> {
        if let Some(exact) = self.exact_value(config, n) {
            return Ok(exact);
        }
        let v = self.eval(config, n)?;
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::NonpositiveRate);
        }
        match self {
            Self::Clamped { .. } => Ok(from_f64(v).min(config.clamp_level())),
            _ => Ok(from_f64(v)),
        }
    }

    fn exact_value(&self, config: &IfsConfig, n: usize) -> Option<BigRational> {
        match self {
            Self::Constant { c } => c.as_rational(),
            Self::Geometric { b } => {
                let bn = b.as_rational()? * BigRational::from_integer((n as i64).into());
                if !bn.is_integer() {
                    return None;
                }
                Some(pow_rational(config.rho(), bn.to_integer().to_i64()?))
            }
            Self::Clamped { inner } => inner.exact_value(config, n).map(|v| v.min(config.clamp_level())),
            _ => None,
        }
    }

    /// Asymptotic profile `phi(n) ≍ rho^(b n) n^p`; `None` for tables.
    fn profile(&self, config: &IfsConfig) -> Result<Option<Profile>> {
        let zero = GammaExpr::zero();
        Ok(match self {
            Self::Constant { .. } => Some(Profile { b: zero.clone(), p: zero }),
            Self::Power { alpha, .. } => {
                let p = GammaExpr::int(-1)
                    .div(alpha)
                    .ok_or_else(|| Error::UnknownFamily(format!("alpha must be a single term in gamma, got {alpha}")))?;
                Some(Profile { b: zero, p })
            }
            Self::Geometric { b } => Some(Profile { b: b.clone(), p: zero }),
            Self::GeometricLog { b, e } => Some(Profile { b: b.clone(), p: e.clone() }),
            Self::Table { .. } => None,
            Self::Clamped { inner } => match inner.profile(config)? {
                None => None,
                Some(prof) => match prof.tends_to_zero(config) {
                    Some(true) => Some(prof),
                    Some(false) => Some(Profile { b: zero.clone(), p: zero }),
                    None => return Err(Error::UnknownFamily(format!("cannot decide whether {self} tends to zero"))),
                },
            },
        })
    }
}

impl fmt::Display for RateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant { c } => write!(f, "constant({c})"),
            Self::Power { c, alpha } => write!(f, "power(c={c}, alpha={alpha})"),
            Self::Geometric { b } => write!(f, "geometric(b={b})"),
            Self::GeometricLog { b, e } => write!(f, "geometric_log(b={b}, e={e})"),
            Self::Table { values } => write!(f, "table({} values)", values.len()),
            Self::Clamped { inner } => write!(f, "clamped({inner})"),
        }
    }
}

#[derive(Debug, Clone)]
struct Profile {
    b: GammaExpr,
    p: GammaExpr,
}

impl Profile {
    fn tends_to_zero(&self, config: &IfsConfig) -> Option<bool> {
        match sign(&self.b, config) {
            SignOf::Positive => Some(true),
            SignOf::Negative => Some(false),
            SignOf::Zero => match sign(&self.p, config) {
                SignOf::Negative => Some(true),
                SignOf::Undecided(_) => None,
                _ => Some(false),
            },
            SignOf::Undecided(_) => None,
        }
    }
}

fn sign(e: &GammaExpr, config: &IfsConfig) -> SignOf {
    e.sign(config.gamma(), config.gamma_exact())
}

/// Dimension function `r^s` or `r^s log(1/r)^t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DimensionFunction {
    #[serde(rename = "power")]
    PowerF { s: GammaExpr },
    #[serde(rename = "power_log")]
    PowerLogF { s: GammaExpr, t: GammaExpr },
}

impl DimensionFunction {
    pub fn power(s: GammaExpr) -> Self {
        Self::PowerF { s }
    }

    pub fn power_log(s: GammaExpr, t: GammaExpr) -> Self {
        Self::PowerLogF { s, t }
    }

    /// `(s, t)` with `t = 0` for pure powers.
    pub fn exponents(&self) -> (GammaExpr, GammaExpr) {
        match self {
            Self::PowerF { s } => (s.clone(), GammaExpr::zero()),
            Self::PowerLogF { s, t } => (s.clone(), t.clone()),
        }
    }

    /// `ln f(r)` for `0 < r < 1`.
    pub fn ln_eval(&self, r_ln: f64, gamma: f64) -> f64 {
        let (s, t) = self.exponents();
        let mut v = s.eval(gamma) * r_ln;
        if !t.is_zero() {
            v += t.eval(gamma) * (-r_ln).ln();
        }
        v
    }

    pub fn eval(&self, r: f64, gamma: f64) -> f64 {
        self.ln_eval(r.ln(), gamma).exp()
    }

    /// A constant `lambda` with `f(2r) <= lambda f(r)` for all `0 < r <= 1/10`.
    pub fn doubling_constant(&self, gamma: f64) -> f64 {
        let (s, t) = self.exponents();
        let base = 2f64.powf(s.eval(gamma));
        let t = t.eval(gamma);
        if t >= 0.0 {
            base
        } else {
            // log(1/(2r)) / log(1/r) is smallest at r = 1/10.
            base * (5f64.ln() / 10f64.ln()).powf(t)
        }
    }

    /// Whether `r^-gamma f(r)` is non-decreasing as `r -> 0` on the log-grid `[1e-9, 1e-1]`.
    pub fn monotone_flag(&self, config: &IfsConfig) -> bool {
        let gamma = config.gamma();
        let (s, t) = self.exponents();
        let excess = s.sub(&GammaExpr::gamma()).eval(gamma);
        let t = t.eval(gamma);
        let g = |ln_r: f64| excess * ln_r + if t == 0.0 { 0.0 } else { t * (-ln_r).ln() };
        let grid: Vec<f64> = (0..=400).map(|i| (1e-9f64).ln() + i as f64 * ((1e-1f64).ln() - (1e-9f64).ln()) / 400.0).collect();
        grid.windows(2).all(|w| {
            let (small, large) = (g(w[0]), g(w[1]));
            small >= large - 1e-12 * (1.0 + small.abs())
        })
    }

    fn check_dimension_function(&self, config: &IfsConfig) -> Result<()> {
        let (s, _) = self.exponents();
        if sign(&s, config) != SignOf::Positive {
            return Err(Error::UnknownFamily(format!("dimension function needs s > 0, got {s}")));
        }
        if !self.monotone_flag(config) {
            return Err(Error::MonotonicityViolated(self.to_string()));
        }
        Ok(())
    }
}

impl fmt::Display for DimensionFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PowerF { s } => write!(f, "r^({s})"),
            Self::PowerLogF { s, t } => write!(f, "r^({s}) log(1/r)^({t})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    NullSet,
    FullSet,
    ZeroHf,
    FullHf,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Basis {
    ClosedForm,
    NumericPartialSums { horizon: usize },
}

/// Size of `H^f(K)`, reported with full-measure Hausdorff verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HfOfK {
    Zero,
    PositiveFinite,
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub basis: Basis,
    /// The leading exponent comparison was an exact tie, resolved at the next order.
    pub critical: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hf_of_k: Option<HfOfK>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Series {
    Measure,
    Hausdorff,
}

impl Series {
    fn outcome(self, convergent: bool) -> Outcome {
        match (self, convergent) {
            (Series::Measure, true) => Outcome::NullSet,
            (Series::Measure, false) => Outcome::FullSet,
            (Series::Hausdorff, true) => Outcome::ZeroHf,
            (Series::Hausdorff, false) => Outcome::FullHf,
        }
    }
}

/// Convergence of `sum_n exp(n * C * lin) n^poly` (with `C > 0`), with flags for exact ties
/// `lin = 0` and `poly = -1`.
fn classify_exponential_polynomial(lin: &GammaExpr, poly: &GammaExpr, config: &IfsConfig) -> Option<(bool, bool, bool)> {
    match sign(lin, config) {
        SignOf::Negative => Some((true, false, false)),
        SignOf::Positive => Some((false, false, false)),
        SignOf::Zero => match sign(&poly.add(&GammaExpr::int(1)), config) {
            SignOf::Negative => Some((true, true, false)),
            SignOf::Zero => Some((false, true, true)),
            SignOf::Positive => Some((false, true, false)),
            SignOf::Undecided(_) => None,
        },
        SignOf::Undecided(_) => None,
    }
}

/// Horizon for the numeric fallback when no table bounds it.
pub const NUMERIC_HORIZON: usize = 100_000;
const DIVERGENCE_LEVEL: f64 = 1e6;
const TAIL_LEVEL: f64 = 1e-15;

/// Partial-sum policy: diverged past `1e6`; converged if the last terms fall below `1e-15`
/// while decaying geometrically; otherwise inconclusive.
fn numeric_verdict(ln_terms: impl Iterator<Item = Result<f64>>, horizon: usize, series: Series) -> Result<Verdict> {
    let mut partial = 0.0f64;
    let mut last: Vec<f64> = Vec::new();
    for t in ln_terms {
        let t = t?;
        partial += t.exp();
        last.push(t);
        if partial > DIVERGENCE_LEVEL {
            return Ok(Verdict { outcome: series.outcome(false), basis: Basis::NumericPartialSums { horizon }, critical: false, hf_of_k: None });
        }
    }
    let tail = &last[last.len().saturating_sub(10)..];
    let geometric = tail.len() >= 10 && tail.windows(2).all(|w| w[1] - w[0] <= (0.99f64).ln());
    let small = tail.last().map(|t| t.exp() < TAIL_LEVEL).unwrap_or(false);
    let outcome = if geometric && small { series.outcome(true) } else { Outcome::Inconclusive };
    Ok(Verdict { outcome, basis: Basis::NumericPartialSums { horizon }, critical: false, hf_of_k: None })
}

/// Measure dichotomy: `sum phi^gamma` convergent gives `mu(R) = 0`, divergent gives `mu(R) = 1`.
pub fn khintchine_classify(config: &IfsConfig, phi: &RateFunction) -> Result<Verdict> {
    phi.validate(config)?;
    let gamma = config.gamma();
    if let Some(prof) = phi.profile(config)? {
        // phi^gamma ≍ rho^(gamma b n) n^(gamma p)
        let lin = prof.b.neg();
        let poly = prof.p.mul(&GammaExpr::gamma());
        if let Some((convergent, _, critical)) = classify_exponential_polynomial(&lin, &poly, config) {
            return Ok(Verdict { outcome: Series::Measure.outcome(convergent), basis: Basis::ClosedForm, critical, hf_of_k: None });
        }
    }
    let horizon = phi.table_len().unwrap_or(NUMERIC_HORIZON);
    numeric_verdict((1..=horizon).map(|n| phi.ln_eval(config, n).map(|l| gamma * l)), horizon, Series::Measure)
}

/// Hausdorff dichotomy for `f` with `r^-gamma f(r)` increasing as `r -> 0`.
pub fn jarnik_classify(config: &IfsConfig, f: &DimensionFunction, phi: &RateFunction) -> Result<Verdict> {
    f.check_dimension_function(config)?;
    phi.validate(config)?;
    let gamma = config.gamma();
    let (s, t) = f.exponents();
    let hf_of_k = Some(hf_of_k(config, &s, &t)?);
    if let Some(prof) = phi.profile(config)? {
        // f(rho^n phi) rho^(-gamma n) ≍ rho^(n (s(1+b) - gamma)) n^(s p + t); the log factor of f
        // contributes n^t because log(1/(rho^n phi(n))) ≍ n whenever 1 + b > 0.
        let one_plus_b = GammaExpr::int(1).add(&prof.b);
        if !t.is_zero() && sign(&one_plus_b, config) != SignOf::Positive {
            return Err(Error::UnknownFamily(format!("rho^n phi(n) does not shrink for {phi}")));
        }
        let lin = GammaExpr::gamma().sub(&s.mul(&one_plus_b));
        let poly = s.mul(&prof.p).add(&t);
        if let Some((convergent, critical, _)) = classify_exponential_polynomial(&lin, &poly, config) {
            let outcome = Series::Hausdorff.outcome(convergent);
            return Ok(Verdict { outcome, basis: Basis::ClosedForm, critical, hf_of_k: hf_of_k.filter(|_| outcome == Outcome::FullHf) });
        }
    }
    let horizon = phi.table_len().unwrap_or(NUMERIC_HORIZON);
    let ln_l = (config.alphabet() as f64).ln();
    let ln_rho = config.rho_f64().ln();
    let mut v = numeric_verdict(
        (1..=horizon).map(|n| phi.ln_eval(config, n).map(|lp| f.ln_eval(n as f64 * ln_rho + lp, gamma) + n as f64 * ln_l)),
        horizon,
        Series::Hausdorff,
    )?;
    if v.outcome == Outcome::FullHf {
        v.hf_of_k = hf_of_k;
    }
    Ok(v)
}

fn hf_of_k(config: &IfsConfig, s: &GammaExpr, t: &GammaExpr) -> Result<HfOfK> {
    let undecided = || Error::UnknownFamily(format!("cannot compare s = {s} with gamma"));
    Ok(match sign(&GammaExpr::gamma().sub(s), config) {
        SignOf::Positive => HfOfK::Infinite,
        SignOf::Negative => HfOfK::Zero,
        SignOf::Zero => match sign(t, config) {
            SignOf::Positive => HfOfK::Infinite,
            SignOf::Zero => HfOfK::PositiveFinite,
            SignOf::Negative => HfOfK::Zero,
            SignOf::Undecided(_) => return Err(undecided()),
        },
        SignOf::Undecided(_) => return Err(undecided()),
    })
}

/// Extended nonnegative real for the liminf exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtReal {
    Finite(f64),
    Infinity,
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(v) => write!(f, "{v}"),
            Self::Infinity => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    /// The windowed minimum keeps growing with the horizon.
    Divergent,
    Stable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BExponent {
    pub value: ExtReal,
    /// Finite-data stand-in for a liminf (tables only).
    pub proxy: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trend: Option<Trend>,
}

/// `b = liminf_n log_rho phi(n) / n`.
pub fn b_exponent(config: &IfsConfig, phi: &RateFunction, horizon: Option<usize>) -> Result<BExponent> {
    let gamma = config.gamma();
    let closed = |v: f64| BExponent { value: ExtReal::Finite(v), proxy: false, trend: None };
    match phi {
        RateFunction::Constant { .. } | RateFunction::Power { .. } => Ok(closed(0.0)),
        RateFunction::Geometric { b } | RateFunction::GeometricLog { b, .. } => Ok(closed(b.eval(gamma))),
        RateFunction::Clamped { inner } if inner.table_len().is_none() => {
            let inner_b = b_exponent(config, inner, horizon)?;
            Ok(match inner_b.value {
                ExtReal::Finite(v) => closed(v.max(0.0)),
                ExtReal::Infinity => inner_b,
            })
        }
        RateFunction::Table { .. } | RateFunction::Clamped { .. } => {
            let h = horizon.ok_or(Error::HorizonRequired)?;
            let len = phi.table_len().unwrap_or(0);
            if h < 4 || h > len {
                return Err(Error::BadRange(format!("horizon must lie in [4, {len}]")));
            }
            let ln_rho = config.rho_f64().ln();
            let window_min = |lo: usize, hi: usize| -> Result<f64> {
                (lo.max(1)..=hi).try_fold(f64::INFINITY, |m, n| Ok(m.min(phi.ln_eval(config, n)? / ln_rho / n as f64)))
            };
            let late = window_min(h / 2, h)?;
            let early = window_min(h / 4, h / 2)?;
            let trend = if late > 0.0 && late >= 1.5 * early { Trend::Divergent } else { Trend::Stable };
            Ok(BExponent { value: ExtReal::Finite(late), proxy: true, trend: Some(trend) })
        }
    }
}

/// `dim_H R(phi) = gamma / (1 + b)`.
pub fn dim_formula(config: &IfsConfig, b: ExtReal) -> Result<f64> {
    match b {
        ExtReal::Infinity => Ok(0.0),
        ExtReal::Finite(v) if v < 0.0 => Err(Error::NegativeB),
        ExtReal::Finite(v) => Ok(config.gamma() / (1.0 + v)),
    }
}

/// Mass-transference blow-up `B(x, r) -> B(x, f(r)^(1/delta))`. Exact when the new radius is
/// a rational power of `radius` with a rational value.
pub fn ball_transform(config: &IfsConfig, f: &DimensionFunction, center: &BigRational, radius: &BigRational, delta: &GammaExpr) -> Result<Interval> {
    if !radius.is_positive() {
        return Err(Error::NonpositiveRadius);
    }
    if sign(delta, config) != SignOf::Positive {
        return Err(Error::BadRange(format!("delta must be positive, got {delta}")));
    }
    let (s, t) = f.exponents();
    if t.is_zero() {
        if let Some(q) = s.div(delta).and_then(|q| q.as_rational()) {
            if let Some(r) = rational_power(radius, &q) {
                return Ok(Interval::ball(center, &r));
            }
        }
    }
    let gamma = config.gamma();
    let ln_new = f.ln_eval(to_f64(radius).ln(), gamma) / delta.eval(gamma);
    Ok(Interval::ball(center, &from_f64(ln_new.exp())))
}

fn rational_power(r: &BigRational, q: &BigRational) -> Option<BigRational> {
    if q.is_one() {
        return Some(r.clone());
    }
    let num = q.numer().to_i64()?;
    let den = q.denom().to_u32()?;
    if num.abs() > 64 || den > 64 {
        return None;
    }
    exact_root(&pow_rational(r, num), den)
}

/// `phi~(n) = f^(1/gamma)(rho^n phi(n) / (1 - rho^n)) (1 - rho^n) / rho^n`.
pub fn phi_tilde(config: &IfsConfig, f: &DimensionFunction, phi: &RateFunction, n: usize) -> Result<f64> {
    let (s, t) = f.exponents();
    if t.is_zero() && s == GammaExpr::gamma() {
        return phi.eval(config, n);
    }
    let gamma = config.gamma();
    let ln_rho = config.rho_f64().ln();
    let rho_n = (n as f64 * ln_rho).exp();
    let ln_one_minus = (-rho_n).ln_1p();
    let ln_r = n as f64 * ln_rho + phi.ln_eval(config, n)? - ln_one_minus;
    Ok((f.ln_eval(ln_r, gamma) / gamma + ln_one_minus - n as f64 * ln_rho).exp())
}

/// Partial sums `sum_{n<=N} f(rho^n phi(n)) rho^(-gamma n)` of the Hausdorff series.
pub fn jarnik_partial_sum(config: &IfsConfig, f: &DimensionFunction, phi: &RateFunction, horizon: usize) -> Result<f64> {
    let gamma = config.gamma();
    let ln_rho = config.rho_f64().ln();
    let ln_l = (config.alphabet() as f64).ln();
    (1..=horizon).try_fold(0.0, |acc, n| Ok(acc + (f.ln_eval(n as f64 * ln_rho + phi.ln_eval(config, n)?, gamma) + n as f64 * ln_l).exp()))
}

impl RateFunction {
    /// Parses the compact CLI form, e.g. `geometric:1`, `power:1:gamma`, `const:1/10`,
    /// `geomlog:1:-4/gamma`, `clamped:power:1:gamma`.
    pub fn parse_compact(s: &str) -> Result<Self> {
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let args: Vec<&str> = if rest.is_empty() { Vec::new() } else { rest.split(':').collect() };
        let expr = |i: usize| -> Result<GammaExpr> {
            args.get(i).ok_or_else(|| Error::Parse(format!("{s}: missing argument {}", i + 1)))?.parse()
        };
        let arity = |k: usize| -> Result<()> {
            if args.len() == k {
                Ok(())
            } else {
                Err(Error::Parse(format!("{s}: expected {k} argument(s)")))
            }
        };
        match head {
            "const" | "constant" => {
                arity(1)?;
                Ok(Self::Constant { c: expr(0)? })
            }
            "power" => {
                arity(2)?;
                Ok(Self::Power { c: expr(0)?, alpha: expr(1)? })
            }
            "geometric" | "geom" => {
                arity(1)?;
                Ok(Self::Geometric { b: expr(0)? })
            }
            "geomlog" | "geometric_log" => {
                arity(2)?;
                Ok(Self::GeometricLog { b: expr(0)?, e: expr(1)? })
            }
            "clamped" => Ok(Self::clamped(Self::parse_compact(rest)?)),
            "table" => {
                let values = rest
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{v}: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::Table { values })
            }
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }

    /// JSON object form, or the compact form as a fallback.
    pub fn parse_any(s: &str) -> Result<Self> {
        if s.trim_start().starts_with('{') {
            serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
        } else {
            Self::parse_compact(s)
        }
    }
}

impl DimensionFunction {
    /// `power:gamma/2` or `powerlog:gamma:1`.
    pub fn parse_compact(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["power", e] => Ok(Self::PowerF { s: e.parse()? }),
            ["powerlog" | "power_log", e, t] => Ok(Self::PowerLogF { s: e.parse()?, t: t.parse()? }),
            _ => Err(Error::UnknownFamily(s.to_string())),
        }
    }

    pub fn parse_any(s: &str) -> Result<Self> {
        if s.trim_start().starts_with('{') {
            serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
        } else {
            Self::parse_compact(s)
        }
    }
}

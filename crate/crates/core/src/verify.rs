//! Fast invariant suite run by `recurfrac verify` against a single configuration.

use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{jarnik_classify, khintchine_classify, DimensionFunction, Outcome, RateFunction};
use crate::coding::{apply_shift, encode_point, pi_eval};
use crate::error::Result;
use crate::ifs::{cylinder_interval, word_value, IfsConfig, Word};
use crate::interval::Interval;
use crate::measure::{ahlfors_scan, mu_interval, DEFAULT_DEPTH};
use crate::numeric::GammaExpr;
use crate::recurrence::j_interval;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

/// Failures kept per check.
const MAX_FAILURES: usize = 10;

struct Tally {
    name: &'static str,
    cases: usize,
    failures: Vec<String>,
    failed: usize,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self { name, cases: 0, failures: Vec::new(), failed: 0 }
    }

    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failed += 1;
            if self.failures.len() < MAX_FAILURES {
                self.failures.push(detail());
            }
        }
    }

    fn finish(self) -> Check {
        Check { name: self.name.to_string(), passed: self.failed == 0, cases: self.cases, failures: self.failures }
    }
}

fn words_up_to(config: &IfsConfig, max_len: usize) -> impl Iterator<Item = Word> + '_ {
    (1..=max_len).flat_map(move |n| Word::all_of_length(config.alphabet(), n))
}

fn coding_checks(config: &IfsConfig, max_total: usize) -> Result<Vec<Check>> {
    let mut round_trip = Tally::new("coding round trip");
    let mut periodic = Tally::new("shift returns periodic points");
    let mut contraction = Tally::new("contraction identity");
    for period in words_up_to(config, max_total) {
        for pre_len in 0..=(max_total - period.len()) {
            let pres: Vec<Word> = if pre_len == 0 { vec![Word::empty()] } else { Word::all_of_length(config.alphabet(), pre_len).collect() };
            for pre in pres {
                let p = pi_eval(config, &pre, &period)?;
                let x = p.value().unwrap().clone();
                let depth = pre.len() + 2 * period.len() + 2;
                let code = encode_point(config, &x, depth)?;
                round_trip.check(code == p.digits(depth)?, || format!("{pre}{period}^inf"));
                if pre.is_empty() {
                    let back = apply_shift(config, &p, period.len())?;
                    periodic.check(back.value() == Some(&x), || format!("({period})^inf"));
                }
                for n in 1..=8 {
                    let head = word_value(config, &p.digits(n)?)?;
                    let shifted = apply_shift(config, &p, n)?;
                    let rebuilt = head + config.rho_pow(n) * shifted.value().unwrap();
                    contraction.check(rebuilt == x, || format!("{pre}{period}^inf at n={n}"));
                }
            }
        }
    }
    Ok(vec![round_trip.finish(), periodic.finish(), contraction.finish()])
}

fn measure_checks(config: &IfsConfig, max_len: usize) -> Result<Vec<Check>> {
    let mut cylinders = Tally::new("cylinder measure law");
    let mut additivity = Tally::new("finite additivity");
    for w in words_up_to(config, max_len) {
        let iv = cylinder_interval(config, &w)?;
        let m = mu_interval(config, &iv, DEFAULT_DEPTH);
        let expected = BigRational::one() / crate::recurrence::alphabet_pow(config, w.len());
        cylinders.check(m.is_exact() && m.value == expected, || format!("I{w}: {m}"));
        let mid = iv.midpoint();
        let left = mu_interval(config, &Interval::new(iv.lo.clone(), mid.clone()), DEFAULT_DEPTH);
        let right = mu_interval(config, &Interval::new(mid, iv.hi.clone()), DEFAULT_DEPTH);
        let sum = left.clone() + right.clone();
        let slack = &sum.error + &m.error;
        additivity.check((&sum.value - &m.value) <= slack.clone() && (&m.value - &sum.value) <= slack, || format!("split of I{w}: {left} + {right} vs {m}"));
    }
    Ok(vec![cylinders.finish(), additivity.finish()])
}

fn window_checks(config: &IfsConfig, max_level: usize) -> Result<Check> {
    let mut law = Tally::new("window length law");
    let phi = RateFunction::critical_clamped();
    for n in 1..=max_level {
        let phi_n = phi.eval_rational(config, n)?;
        let lower = config.rho_pow(n) * &phi_n;
        let upper = config.rho_pow(n - 1) * &phi_n;
        for w in Word::all_of_length(config.alphabet(), n) {
            let j = j_interval(config, &w, &phi_n)?;
            let len = j.interval.width();
            law.check(lower <= len && len <= upper, || format!("J{w}: |J| = {len}"));
        }
    }
    Ok(law.finish())
}

fn ahlfors_check(config: &IfsConfig) -> Result<Check> {
    let (report, _) = ahlfors_scan(config, 100, 1e-6, 0.25, 0, DEFAULT_DEPTH)?;
    let mut t = Tally::new("Ahlfors regularity");
    t.check(report.within_bounds(), || format!("{} of {} balls out of bounds", report.violations, report.samples));
    Ok(t.finish())
}

fn classifier_checks(config: &IfsConfig) -> Result<Check> {
    let mut t = Tally::new("Hausdorff verdict specializes to measure verdict");
    let f = DimensionFunction::power(GammaExpr::gamma());
    let rates = [
        RateFunction::constant(config.clamp_level()),
        RateFunction::geometric(GammaExpr::int(1)),
        RateFunction::power(GammaExpr::int(1), GammaExpr::gamma()),
        RateFunction::power(GammaExpr::int(1), GammaExpr::monomial(BigRational::new(1.into(), 2.into()), 1)),
        RateFunction::critical_clamped(),
    ];
    for phi in &rates {
        let k = khintchine_classify(config, phi)?.outcome;
        let j = jarnik_classify(config, &f, phi)?.outcome;
        let consistent = matches!((k, j), (Outcome::NullSet, Outcome::ZeroHf) | (Outcome::FullSet, Outcome::FullHf));
        t.check(consistent, || format!("{phi}: {k:?} vs {j:?}"));
    }
    Ok(t.finish())
}

/// Runs every check; sizes are chosen so the suite finishes in seconds for small alphabets.
pub fn run_suite(config: &IfsConfig) -> Result<VerifyReport> {
    let small = if config.alphabet() <= 3 { 4 } else { 2 };
    let mut checks = coding_checks(config, small)?;
    checks.extend(measure_checks(config, small + 1)?);
    checks.push(window_checks(config, small + 3)?);
    checks.push(ahlfors_check(config)?);
    checks.push(classifier_checks(config)?);
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { passed, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_on_builtin_configs() {
        for c in [IfsConfig::middle_third(), IfsConfig::three_fifths()] {
            let r = run_suite(&c).unwrap();
            assert!(r.passed, "{:#?}", r.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
        }
    }
}

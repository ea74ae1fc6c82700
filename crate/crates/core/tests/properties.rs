use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use recurfrac_core::asymptotics::{jarnik_classify, jarnik_partial_sum, khintchine_classify, phi_tilde, Outcome};
use recurfrac_core::coding::{apply_shift, encode_point, nearest_integer_distance, pi_eval, recurrence_distance};
use recurfrac_core::experiments::{recurrent_fraction, sample_point_indexed};
use recurfrac_core::ifs::{cylinder_interval, periodic_point, word_value};
use recurfrac_core::measure::mu_interval;
use recurfrac_core::numeric::{rat, to_f64};
use recurfrac_core::recurrence::{enumerate_level, j_interval, mu_of_intervals, quasi_independence, DEFAULT_LEVEL_CAP};
use recurfrac_core::{DimensionFunction, GammaExpr, IfsConfig, Interval, RateFunction, Word};

fn config(which: bool) -> IfsConfig {
    if which {
        IfsConfig::three_fifths()
    } else {
        IfsConfig::middle_third()
    }
}

fn word(max_len: usize) -> impl Strategy<Value = (bool, Vec<u32>)> {
    any::<bool>().prop_flat_map(move |which| {
        let l = if which { 3 } else { 2 };
        (Just(which), prop::collection::vec(1..=l as u32, 1..=max_len))
    })
}

fn coding(max_total: usize) -> impl Strategy<Value = (bool, Vec<u32>, Vec<u32>)> {
    any::<bool>().prop_flat_map(move |which| {
        let l = if which { 3u32 } else { 2 };
        (1..=max_total).prop_flat_map(move |per_len| {
            (
                Just(which),
                prop::collection::vec(1..=l, 0..=max_total - per_len),
                prop::collection::vec(1..=l, per_len..=per_len),
            )
        })
    })
}

fn unit_rational() -> impl Strategy<Value = BigRational> {
    (1i64..1_000_000).prop_flat_map(|q| (0..=q).prop_map(move |p| rat(p, q)))
}

fn interval() -> impl Strategy<Value = Interval> {
    (unit_rational(), unit_rational()).prop_map(|(a, b)| if a <= b { Interval::new(a, b) } else { Interval::new(b, a) })
}

fn all_words(l: usize, n: usize) -> Vec<Word> {
    Word::all_of_length(l, n).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cylinder_width_is_rho_pow((which, w) in word(12)) {
        let c = config(which);
        let iv = cylinder_interval(&c, &Word::new(w.clone())).unwrap();
        prop_assert_eq!(iv.width(), c.rho_pow(w.len()));
    }

    #[test]
    fn cylinders_nest_and_separate((which, w) in word(8), ext in prop::collection::vec(1u32..=2, 1..5), other in prop::collection::vec(1u32..=2, 1..9)) {
        let c = config(which);
        let base = Word::new(w.clone());
        let longer = base.concat(&Word::new(ext));
        prop_assert!(cylinder_interval(&c, &longer).unwrap().is_subset_of(&cylinder_interval(&c, &base).unwrap()));
        let mut v = other;
        v.resize(w.len(), 1);
        if v != w {
            let a = cylinder_interval(&c, &base).unwrap();
            let b = cylinder_interval(&c, &Word::new(v)).unwrap();
            prop_assert!(a.intersect(&b).is_none());
        }
    }

    #[test]
    fn round_trip((which, pre, per) in coding(6), d in 1usize..=12) {
        let c = config(which);
        let p = pi_eval(&c, &Word::new(pre), &Word::new(per)).unwrap();
        let code = encode_point(&c, p.value().unwrap(), d).unwrap();
        prop_assert_eq!(code, p.digits(d).unwrap());
    }

    #[test]
    fn contraction_identity((which, pre, per) in coding(6), n in 1usize..=8) {
        let c = config(which);
        let p = pi_eval(&c, &Word::new(pre), &Word::new(per)).unwrap();
        let head = word_value(&c, &p.digits(n).unwrap()).unwrap();
        let tn = apply_shift(&c, &p, n).unwrap();
        prop_assert_eq!(head + c.rho_pow(n) * tn.value().unwrap(), p.value().unwrap().clone());
    }

    #[test]
    fn nearest_integer_bridge((_, pre, per) in coding(6), n in 1usize..=8) {
        let c = IfsConfig::middle_third();
        let pre: Vec<u32> = pre.into_iter().map(|s| s.min(2)).collect();
        let per: Vec<u32> = per.into_iter().map(|s| s.min(2)).collect();
        let p = pi_eval(&c, &Word::new(pre), &Word::new(per)).unwrap();
        let scale = BigRational::from_integer(3.into()).pow(n as i32) - BigRational::one();
        let lhs = nearest_integer_distance(&(scale * p.value().unwrap()));
        let d = recurrence_distance(&c, &p, n).unwrap().value();
        let rhs = d.clone().min(BigRational::one() - d);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn additivity(iv in interval(), cut in unit_rational(), which in any::<bool>()) {
        let c = config(which);
        let cut = cut.max(iv.lo.clone()).min(iv.hi.clone());
        let left = mu_interval(&c, &Interval::new(iv.lo.clone(), cut.clone()), 30);
        let right = mu_interval(&c, &Interval::new(cut, iv.hi.clone()), 30);
        let whole = mu_of_intervals(&c, std::slice::from_ref(&iv), 30);
        let gap = (&whole.value - &left.value - &right.value).abs();
        prop_assert!(gap <= &whole.error + &left.error + &right.error);
    }

    #[test]
    fn monotonicity(outer in interval(), a in unit_rational(), b in unit_rational(), which in any::<bool>()) {
        let c = config(which);
        let w = outer.width();
        let lo = &outer.lo + &w * a.clone().min(b.clone());
        let hi = &outer.lo + &w * a.max(b);
        let inner = mu_interval(&c, &Interval::new(lo, hi), 20);
        let whole = mu_interval(&c, &outer, 20);
        prop_assert!(inner.lower() <= whole.upper());
    }

    #[test]
    fn count_bound((which, w) in word(5), m_extra in 1usize..4, radius_scale in 1i64..4) {
        let c = config(which);
        let x = periodic_point(&c, &Word::new(w.clone())).unwrap();
        let radius = c.rho_pow(w.len()) * rat(radius_scale, 2);
        let ball = Interval::ball(&x, &radius);
        let mut m = w.len() + m_extra;
        while c.rho_pow(m) >= radius {
            m += 1;
        }
        let phi_m = rat(1, 10).min(c.clamp_level());
        let set = enumerate_level(&c, m, &phi_m, Some(&ball), DEFAULT_LEVEL_CAP).unwrap();
        let double = Interval::ball(&x, &(&radius * rat(2, 1)));
        let (_, c2) = c.ahlfors_constants();
        let bound = c2 * to_f64(&mu_interval(&c, &double, 40).upper()) * (c.alphabet() as f64).powi(m as i32);
        prop_assert!((set.count as f64) <= bound);
    }

    #[test]
    fn paley_zygmund_consistency((which, w) in word(2), horizon in 2usize..6, c_num in 1i64..10) {
        let c = config(which);
        let ball = cylinder_interval(&c, &Word::new(w)).unwrap();
        let phi = RateFunction::clamped(RateFunction::power(GammaExpr::rational(rat(c_num, 10)), GammaExpr::gamma()));
        let r = quasi_independence(&c, &ball, &phi, horizon, 30, DEFAULT_LEVEL_CAP).unwrap();
        prop_assert!(r.pz_consistent());
        prop_assert!(r.ratio.is_finite());
    }

    #[test]
    fn specialization(b_num in -4i64..8, p_num in -8i64..8, c_num in 1i64..20, family in 0usize..5) {
        let c = IfsConfig::middle_third();
        let b = GammaExpr::rational(rat(b_num, 2));
        let phi = match family {
            0 => RateFunction::constant(rat(c_num, 20)),
            1 => RateFunction::power(GammaExpr::rational(rat(c_num, 4)), GammaExpr::monomial(rat(c_num, 4), 1)),
            2 => RateFunction::clamped(RateFunction::geometric(b)),
            3 => RateFunction::clamped(RateFunction::geometric_log(b, GammaExpr::monomial(rat(p_num, 2), -1))),
            _ => RateFunction::clamped(RateFunction::power(GammaExpr::int(1), GammaExpr::rational(rat(c_num, 8)))),
        };
        let k = khintchine_classify(&c, &phi).unwrap().outcome;
        let j = jarnik_classify(&c, &DimensionFunction::power(GammaExpr::gamma()), &phi).unwrap().outcome;
        prop_assert!(matches!((k, j), (Outcome::NullSet, Outcome::ZeroHf) | (Outcome::FullSet, Outcome::FullHf)), "{} {:?} {:?}", phi, k, j);
    }

    #[test]
    fn doubling(s_num in 1i64..16, t_num in -8i64..8, log in any::<bool>()) {
        let c = IfsConfig::middle_third();
        let g = c.gamma();
        let s = GammaExpr::monomial(rat(s_num, 16), 1);
        let f = if log { DimensionFunction::power_log(s, GammaExpr::rational(rat(t_num, 2))) } else { DimensionFunction::power(s) };
        let lambda = f.doubling_constant(g);
        for i in 0..=100 {
            let r = 10f64.powf(-9.0 + 8.0 * i as f64 / 100.0);
            prop_assert!(f.eval(2.0 * r, g) <= lambda * f.eval(r, g) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn monotone_truncation(seed in any::<u64>(), k in 1usize..5, extra in 1usize..20) {
        let c = IfsConfig::middle_third();
        let phi = RateFunction::critical_clamped();
        let base = recurrent_fraction(&c, &phi, k + extra, k, 200, seed).unwrap().fraction;
        let longer = recurrent_fraction(&c, &phi, k + 2 * extra, k, 200, seed).unwrap().fraction;
        let earlier = recurrent_fraction(&c, &phi, k + extra, 1, 200, seed).unwrap().fraction;
        prop_assert!(base <= longer);
        prop_assert!(base <= earlier);
    }

    #[test]
    fn determinism(seed in any::<u64>()) {
        let c = IfsConfig::three_fifths();
        let phi = RateFunction::constant(rat(1, 20));
        let a = serde_json::to_string(&recurrent_fraction(&c, &phi, 30, 1, 100, seed).unwrap()).unwrap();
        let b = serde_json::to_string(&recurrent_fraction(&c, &phi, 30, 1, 100, seed).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn periodic_points_lie_in_their_cylinders() {
    for which in [false, true] {
        let c = config(which);
        for n in 1..=8 {
            for w in all_words(c.alphabet(), n) {
                let x = periodic_point(&c, &w).unwrap();
                assert!(cylinder_interval(&c, &w).unwrap().contains(&x), "{w}");
            }
        }
    }
}

#[test]
fn similarity_dimension_identity() {
    for which in [false, true] {
        let c = config(which);
        let v = c.alphabet() as f64 * c.rho_f64().powf(c.gamma());
        assert!((v - 1.0).abs() < 1e-12);
    }
}

#[test]
fn periodic_codings_return_exactly() {
    for which in [false, true] {
        let c = config(which);
        for n in 1..=6 {
            for w in all_words(c.alphabet(), n) {
                let p = pi_eval(&c, &Word::empty(), &w).unwrap();
                assert!(recurrence_distance(&c, &p, n).unwrap().value().is_zero());
            }
        }
    }
}

#[test]
fn normalization_and_cylinder_law() {
    for which in [false, true] {
        let c = config(which);
        let unit = mu_interval(&c, &Interval::unit(), 1);
        assert!(unit.is_exact() && unit.value.is_one());
        for n in 1..=8 {
            let expected = BigRational::new(1.into(), BigRational::from_integer((c.alphabet() as i64).into()).to_integer().pow(n as u32));
            for w in all_words(c.alphabet(), n) {
                let m = mu_interval(&c, &cylinder_interval(&c, &w).unwrap(), 40);
                assert!(m.is_exact());
                assert_eq!(m.value, expected);
            }
        }
    }
}

#[test]
fn level_measure_lower_bound() {
    for which in [false, true] {
        let c = config(which);
        let phi_n = rat(1, 10).min(c.clamp_level());
        let bound = to_f64(&phi_n).powf(c.gamma()) / c.alphabet() as f64;
        let top = if which { 8 } else { 12 };
        for n in 1..=top {
            let set = enumerate_level(&c, n, &phi_n, Some(&Interval::unit()), DEFAULT_LEVEL_CAP).unwrap();
            let m = mu_of_intervals(&c, &set.intervals, 40);
            assert!(to_f64(&m.upper()) >= bound - 1e-12, "n={n}: {m} < {bound}");
        }
    }
}

#[test]
fn case_split_meets_at_most_two() {
    let c = IfsConfig::middle_third();
    let phi = rat(1, 10);
    for m in 1..10usize {
        for n in m + 1..=10 {
            let rho_m = c.rho_pow(m);
            let threshold = rat(2, 1) * &rho_m * &phi / (BigRational::one() - &rho_m);
            if c.rho_pow(n) < threshold {
                continue;
            }
            for u in all_words(2, m) {
                let jm = j_interval(&c, &u, &phi).unwrap().interval;
                let hits = all_words(2, n - m)
                    .into_iter()
                    .filter(|v| j_interval(&c, &u.concat(v), &phi).unwrap().interval.meets(&jm))
                    .count();
                assert!(hits <= 2, "m={m} n={n} u={u}: {hits}");
            }
        }
    }
}

#[test]
fn divergence_transfer() {
    let c = IfsConfig::middle_third();
    let g = c.gamma();
    let fs = [
        DimensionFunction::power(GammaExpr::gamma()),
        DimensionFunction::power("gamma/2".parse().unwrap()),
        DimensionFunction::power_log(GammaExpr::gamma(), GammaExpr::int(1)),
    ];
    let rates = ["const:1/10", "geometric:1", "clamped:power:1:gamma", "geometric:1/2", "geomlog:1:-4/gamma"];
    let mut divergent_cases = 0;
    for f in &fs {
        for r in rates {
            let phi = RateFunction::parse_compact(r).unwrap();
            if jarnik_classify(&c, f, &phi).unwrap().outcome != Outcome::FullHf {
                continue;
            }
            divergent_cases += 1;
            let tilde: f64 = (1..=200).map(|n| phi_tilde(&c, f, &phi, n).unwrap().powf(g)).sum();
            let series = jarnik_partial_sum(&c, f, &phi, 200).unwrap();
            assert!(tilde >= 0.5 * series, "{f} {phi}: {tilde} vs {series}");
        }
    }
    assert!(divergent_cases >= 5);
}

#[test]
fn monotone_gate_refuses() {
    let c = IfsConfig::middle_third();
    let phi = RateFunction::geometric(GammaExpr::int(1));
    for f in [DimensionFunction::power("2*gamma".parse().unwrap()), DimensionFunction::power_log(GammaExpr::gamma(), GammaExpr::int(-1))] {
        assert!(jarnik_classify(&c, &f, &phi).is_err());
    }
}

#[test]
fn decided_hits_are_sound() {
    let c = IfsConfig::three_fifths();
    let phi = RateFunction::constant(rat(1, 7));
    let report = recurrent_fraction(&c, &phi, 20, 1, 300, 5).unwrap();
    // Recount with exact enclosures on the same digits.
    let mut histogram = vec![0u64; 20];
    let threshold = rat(1, 7);
    for i in 0..300 {
        let p = sample_point_indexed(&c, 5, i, 20 + 64).unwrap();
        for n in 1..=20 {
            let d = recurrence_distance(&c, &p, n).unwrap();
            if let Some(hit) = d.below(&threshold) {
                histogram[n - 1] += hit as u64;
            }
        }
    }
    assert_eq!(report.histogram, histogram);
    assert_eq!(report.undecided, 0);
}

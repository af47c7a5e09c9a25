//! Photon-counting statistics against brute-force sums written out
//! independently of the library's enumeration.

use heralded_bell::stats::{
    auto_truncation, class_columns, class_groups, dark_count_prob_one, detect_exactly,
    enumerate_event_classes, lambda_for_fidelity, p_det_two, pair_rate, poisson_p, poisson_tail, ratio_floor,
    single_read_probability, success_and_false, success_and_false_for, DetectionModel, Signature, StatsError,
};
use proptest::prelude::*;

fn model(p: f64) -> DetectionModel {
    DetectionModel::default().with_p_detect(p)
}

fn pois(lambda: f64, n: u32) -> f64 {
    let mut term = (-lambda).exp();
    for k in 1..=n {
        term *= lambda / k as f64;
    }
    term
}

fn choose(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    (1..=k).map(|i| (n - k + i) as f64 / i as f64).product()
}

fn bin(n: u32, k: u32, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    choose(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// Two-Stokes-click success/false by direct summation.
fn stokes_pair_oracle(lambda: f64, m: &DetectionModel, n_max: u32) -> (f64, f64) {
    let mut success = 0.0;
    let mut failure = 0.0;
    for n in 0..=n_max {
        for k in 0..=n.min(2) {
            let d = 2 - k;
            let p = pois(lambda, n) * bin(n, k, m.p_detect_stokes) * bin(2, d, m.p_dc);
            if n == 2 && k == 2 {
                success += p;
            } else {
                failure += p;
            }
        }
    }
    (success, failure)
}

/// Two Stokes clicks plus exactly one click in each read window.
fn full_signature_oracle(lambda: f64, m: &DetectionModel, n_max: u32) -> (f64, f64) {
    let one_click = |a: u32, p_as: f64, p_dc: f64| {
        // (detected 1, no dark) or (detected 0, one dark)
        (bin(a, 1, p_as) * (1.0 - p_dc), bin(a, 0, p_as) * p_dc)
    };
    let mut success = 0.0;
    let mut failure = 0.0;
    for n in 0..=n_max {
        for k in 0..=n.min(2) {
            let d = 2 - k;
            let stokes = pois(lambda, n) * bin(n, k, m.p_detect_stokes) * bin(2, d, m.p_dc);
            for a in 0..=n {
                for b in 0..=(n - a) {
                    let reads = bin(n, a, m.p_read) * bin(n - a, b, m.p_read);
                    let (ra_real, ra_dark) = one_click(a, m.p_detect_as, m.p_dc);
                    let (rb_real, rb_dark) = one_click(b, m.p_detect_as, m.p_dc);
                    let w = stokes * reads;
                    if n == 2 && k == 2 && a == 1 && b == 1 {
                        success += w * ra_real * rb_real;
                        failure += w * (ra_real * rb_dark + ra_dark * rb_real + ra_dark * rb_dark);
                    } else {
                        failure += w * (ra_real + ra_dark) * (rb_real + rb_dark);
                    }
                }
            }
        }
    }
    (success, failure)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn headline_probabilities() {
    let m = DetectionModel::default();
    assert!((poisson_p(0.2, 2).unwrap() - 0.02 * (-0.2f64).exp()).abs() < 1e-17);
    assert!((poisson_p(0.2, 2).unwrap() - 0.016374615061559638).abs() < 1e-15);
    assert!((p_det_two(0.2, &m).unwrap() - 0.009210720972127296).abs() < 1e-15);
    assert!((dark_count_prob_one(0.2, &m).unwrap() - 8.59667290731881e-7).abs() < 1e-18);
    assert!((detect_exactly(3, 2, 0.75).unwrap() - 0.421875).abs() < 1e-15);
    assert!((poisson_p(0.2, 3).unwrap() - 0.001091641004103976).abs() < 1e-16);
    assert_eq!(single_read_probability(0.5).unwrap(), 0.5);
    assert!((m.p_dc - 1e-6).abs() < 1e-20);
}

#[test]
fn poisson_and_binomial_edge_cases() {
    assert_eq!(poisson_p(0.0, 0).unwrap(), 1.0);
    assert_eq!(poisson_p(0.0, 3).unwrap(), 0.0);
    assert!(matches!(poisson_p(-0.1, 0), Err(StatsError::NegativeLambda(_))));
    assert!(matches!(poisson_p(f64::NAN, 0), Err(StatsError::NegativeLambda(_))));
    assert!(matches!(detect_exactly(2, 3, 0.5), Err(StatsError::DetectedExceedsCreated { .. })));
    assert!(matches!(detect_exactly(2, 1, 1.5), Err(StatsError::InvalidProbability { .. })));
    let big: f64 = (0..400).map(|n| poisson_p(150.0, n).unwrap()).sum();
    assert!((big - 1.0).abs() < 1e-10);
    for n in 0..30 {
        assert!(rel(poisson_p(3.7, n).unwrap(), pois(3.7, n)) < 1e-12);
    }
    let tail = poisson_tail(0.2, 8).unwrap();
    let direct = 1.0 - (0..=8).map(|n| pois(0.2, n)).sum::<f64>();
    assert!((tail - direct).abs() < 1e-15);
    assert!(auto_truncation(0.2).unwrap() >= 8);
}

#[test]
fn model_validation() {
    assert!(model(1.2).validate().is_err());
    assert!(DetectionModel::default().with_p_read(-0.1).validate().is_err());
    assert!(DetectionModel::default().with_rep_rate(f64::INFINITY).validate().is_err());
    let m = DetectionModel { p_dc: 2e-6, ..DetectionModel::default() };
    assert!(matches!(m.validate(), Err(StatsError::InconsistentDarkCounts { .. })));
    assert!(DetectionModel::default().with_p_dc(2e-6).validate().is_ok());
    assert!(matches!(success_and_false(0.2, &model(2.0)), Err(StatsError::InvalidProbability { .. })));
}

#[test]
fn stokes_signature_matches_direct_sum() {
    for &lambda in &[1e-4, 0.05, 0.2, 0.4, 1.0] {
        for &p in &[0.3, 0.75, 1.0] {
            let m = model(p);
            let n_max = auto_truncation(lambda).unwrap();
            let sf = success_and_false_for(lambda, &m, Signature::StokesPair, n_max).unwrap();
            let (s, f) = stokes_pair_oracle(lambda, &m, n_max);
            assert!(rel(sf.p_success, s) < 1e-12, "λ={lambda} p={p}");
            assert!(rel(sf.p_false, f) < 1e-12, "λ={lambda} p={p}");
            assert_eq!(success_and_false(lambda, &m).unwrap(), sf);
        }
    }
}

#[test]
fn full_signature_matches_direct_sum() {
    for &lambda in &[0.05, 0.2, 0.4] {
        for &(p, p_as) in &[(0.3, 1.0), (0.75, 1.0), (0.75, 0.6), (1.0, 0.9)] {
            let m = model(p).with_p_detect_as(p_as);
            let sf = success_and_false_for(lambda, &m, Signature::StokesAndAntiStokes, 10).unwrap();
            let (s, f) = full_signature_oracle(lambda, &m, 10);
            assert!(rel(sf.p_success, s) < 1e-12, "λ={lambda} p={p}");
            assert!(rel(sf.p_false, f) < 1e-12, "λ={lambda} p={p}: {} vs {f}", sf.p_false);
        }
    }
}

#[test]
fn enumeration_is_a_distribution_whose_stokes_marginal_matches() {
    let m = DetectionModel::default();
    let classes = enumerate_event_classes(0.2, &m, 8).unwrap();
    let total: f64 = classes.iter().map(|c| c.probability).sum();
    assert!((total - (1.0 - poisson_tail(0.2, 8).unwrap())).abs() < 1e-13);

    let mut s = 0.0;
    let mut f = 0.0;
    for c in &classes {
        if c.key.matches(Signature::StokesPair) {
            if c.key.is_success(Signature::StokesPair) {
                s += c.probability;
            } else {
                f += c.probability;
            }
        }
    }
    let direct = success_and_false_for(0.2, &m, Signature::StokesPair, 8).unwrap();
    assert!(rel(s, direct.p_success) < 1e-12);
    assert!(rel(f, direct.p_false) < 1e-12);
    assert!(classes.iter().all(|c| c.probability > 0.0));
    assert!(classes.iter().all(|c| c.key.as_emitted[0] + c.key.as_emitted[1] <= c.key.n_created));
}

#[test]
fn class_groups_partition_the_full_signature() {
    let m = DetectionModel::default();
    let classes = enumerate_event_classes(0.2, &m, 10).unwrap();
    let groups = class_groups(&classes);
    assert_eq!(class_columns().len(), 16);
    assert_eq!(groups.len(), 16);
    let full = success_and_false_for(0.2, &m, Signature::StokesAndAntiStokes, 10).unwrap();
    let grouped: f64 = groups.values().sum();
    assert!(rel(grouped, full.p_success + full.p_false) < 1e-12);
    let s2a2 = groups.iter().find(|(c, _)| c.label() == "P(S(2);AS(2))").unwrap().1;
    assert!(*s2a2 >= full.p_success);
    assert_eq!(class_columns()[15].label(), "P(S(5+);AS(5+))");
}

#[test]
fn perfect_detection_has_no_false_events() {
    let m = model(1.0).with_p_dc(0.0);
    for &lambda in &[0.01, 0.2, 0.4] {
        let sf = success_and_false(lambda, &m).unwrap();
        assert_eq!(sf.p_false, 0.0);
        assert_eq!(sf.ratio().unwrap(), 0.0);
    }
}

#[test]
fn small_lambda_expansion() {
    // Without darks the leading false term is three excitations with one
    // missed: ratio → λ (1 - p).
    for &p in &[0.3, 0.75, 0.9] {
        let m = model(p).with_p_dc(0.0);
        let lambda = 1e-3;
        let ratio = success_and_false(lambda, &m).unwrap().ratio().unwrap();
        let leading = lambda * (1.0 - p);
        assert!(rel(ratio, leading) < 0.05, "p={p}: {ratio} vs {leading}");
    }
    // Darks alone: one real click plus one dark, or two darks, over the two
    // write windows.
    let m = model(0.75);
    let lambda = 1e-5;
    let sf = success_and_false(lambda, &m).unwrap();
    let dark_leading =
        (lambda * 0.75 * 2.0 * m.p_dc + m.p_dc * m.p_dc) / (lambda * lambda / 2.0 * 0.75 * 0.75);
    assert!(rel(sf.ratio().unwrap(), dark_leading) < 0.05);
}

#[test]
fn darks_dominate_at_small_lambda() {
    let m = DetectionModel::default();
    let small = success_and_false(1e-4, &m).unwrap();
    assert!(small.p_false_dark / small.p_false > 0.9);
    let large = success_and_false(0.4, &m).unwrap();
    assert!(large.p_false_dark / large.p_false < 0.01);
}

#[test]
fn ratio_has_single_interior_minimum() {
    for &p in &[0.3, 0.75, 0.95] {
        let m = model(p);
        let grid: Vec<f64> = (0..200).map(|i| 1e-4 * (0.5f64 / 1e-4).powf(i as f64 / 199.0)).collect();
        let r: Vec<f64> = grid.iter().map(|&l| success_and_false(l, &m).unwrap().ratio().unwrap()).collect();
        let turns = r.windows(3).filter(|w| (w[1] - w[0]).signum() != (w[2] - w[1]).signum()).count();
        assert_eq!(turns, 1, "p={p}");
        let (lf, rf) = ratio_floor(&m).unwrap();
        assert!(lf > 1e-4 && lf < 0.5);
        assert!(r.iter().all(|&x| x >= rf * (1.0 - 1e-9)));
    }
}

#[test]
fn headline_ratio_and_fidelity() {
    let sf = success_and_false(0.2, &DetectionModel::default()).unwrap();
    let ratio = sf.ratio().unwrap();
    assert!((ratio - 0.0513).abs() < 5e-4, "{ratio}");
    assert!((sf.fidelity_estimate().unwrap() - 1.0 / (1.0 + ratio)).abs() < 1e-15);
    let full =
        success_and_false_for(0.2, &DetectionModel::default(), Signature::StokesAndAntiStokes, 10).unwrap();
    assert!((full.ratio().unwrap() - 0.038).abs() < 1e-3);
}

#[test]
fn pair_rate_headline_and_shape() {
    let m = DetectionModel::default();
    let r = pair_rate(0.2, &m).unwrap();
    let oracle = 0.5 * pois(0.2, 2) * 0.75 * 0.75 * 0.25;
    assert!((r.p_per_shot - oracle).abs() < 1e-16);
    assert!((r.rate_hz - oracle * 1e7).abs() < 1e-8);
    let halved = pair_rate(0.2, &m.with_p_detect_as(0.5)).unwrap();
    assert!((halved.p_per_shot - r.p_per_shot / 4.0).abs() < 1e-16);
    let mut last = 0.0;
    for i in 1..=40 {
        let l = 0.05 * i as f64;
        let next = pair_rate(l, &m).unwrap().p_per_shot;
        assert!(next > last);
        last = next;
    }
    let best_read = pair_rate(0.2, &m).unwrap().p_per_shot;
    for pr in [0.1, 0.3, 0.49, 0.51, 0.8] {
        assert!(pair_rate(0.2, &m.with_p_read(pr)).unwrap().p_per_shot < best_read);
    }
}

#[test]
fn solver_lands_on_the_target_from_below() {
    for &(p, target) in &[(0.75, 0.05), (0.3, 0.05), (0.75, 0.02), (0.9, 0.1)] {
        let m = model(p);
        let sol = lambda_for_fidelity(target, &m).unwrap();
        assert!(sol.ratio <= target);
        let above = success_and_false(sol.lambda * (1.0 + 1e-5), &m).unwrap().ratio().unwrap();
        assert!(above > target, "p={p} target={target}");
        assert!(sol.lambda > sol.floor_lambda);
    }
    let m = DetectionModel::default();
    assert!(lambda_for_fidelity(0.02, &m).unwrap().lambda < lambda_for_fidelity(0.05, &m).unwrap().lambda);
    assert!(matches!(lambda_for_fidelity(1e-6, &m), Err(StatsError::BelowDarkFloor { .. })));
}

proptest! {
    #[test]
    fn success_grows_with_efficiency(lambda in 0.01f64..1.0, p in 0.05f64..0.95, dp in 0.001f64..0.05) {
        let lo = success_and_false(lambda, &model(p)).unwrap();
        let hi = success_and_false(lambda, &model((p + dp).min(1.0))).unwrap();
        prop_assert!(hi.p_success > lo.p_success);
        prop_assert!(pair_rate(lambda, &model((p + dp).min(1.0))).unwrap().p_per_shot
            > pair_rate(lambda, &model(p)).unwrap().p_per_shot);
    }

    #[test]
    fn success_monotone_in_lambda_below_two(lambda in 0.001f64..1.9, dl in 0.001f64..0.1) {
        let m = DetectionModel::default();
        let a = success_and_false(lambda, &m).unwrap().p_success;
        let b = success_and_false((lambda + dl).min(2.0), &m).unwrap().p_success;
        prop_assert!(b > a);
    }

    #[test]
    fn probabilities_are_bounded(lambda in 0.0f64..3.0, p in 0.0f64..=1.0, p_dc in 0.0f64..1e-3) {
        let m = model(p).with_p_dc(p_dc);
        let sf = success_and_false(lambda, &m).unwrap();
        prop_assert!(sf.p_success >= 0.0 && sf.p_false >= 0.0);
        prop_assert!(sf.p_success + sf.p_false <= 1.0);
        prop_assert!(sf.p_false_dark <= sf.p_false * (1.0 + 1e-12));
        for k in 0..=4 {
            let b = detect_exactly(4, k, p).unwrap();
            prop_assert!((0.0..=1.0).contains(&b));
        }
    }
}

//! Solver, divergence classifier, and threshold scans.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use refinelab::analysis::{self, classify, residuals, solve_optimum, Verdict, DEFAULT_GUESS};
use refinelab::generators::ExampleConfig;
use refinelab::refine::{self, Algorithm, EventKind, RefinementConfig, RefinementTrace, RunStatus, TraceEvent};

fn rad(deg: f64) -> f64 {
    deg.to_radians()
}

#[test]
fn printed_solution_nearly_satisfies_the_system() {
    // the reference values are rounded to two decimals
    let r = residuals(rad(74.51), 0.985, rad(29.51), rad(29.51)).unwrap();
    assert!(r.iter().all(|x| x.abs() < 1e-3), "{r:?}");
}

#[test]
fn solver_reproduces_the_reference_optimum() {
    let s = solve_optimum(DEFAULT_GUESS).unwrap();
    assert!((s.theta_deg - 74.51).abs() < 0.01, "{s:?}");
    assert!((s.a - 0.985).abs() < 0.001, "{s:?}");
    assert!((s.alpha1_deg - 29.51).abs() < 0.01 && (s.alpha2_deg - 29.51).abs() < 0.01, "{s:?}");
    assert!(s.residual_norm < 1e-12);
    let r = residuals(rad(s.theta_deg), s.a, rad(s.alpha1_deg), rad(s.alpha2_deg)).unwrap();
    assert!(r.iter().all(|x| x.abs() < 1e-12));
}

#[test]
fn nearby_guesses_share_the_basin() {
    let base = solve_optimum(DEFAULT_GUESS).unwrap();
    for guess in [[76.0, 0.9, 28.0, 31.0], [73.0, 1.05, 30.5, 28.5], [75.0, 1.0, 30.0, 30.0]] {
        let s = solve_optimum(guess).unwrap();
        assert!((s.theta_deg - base.theta_deg).abs() < 1e-9, "{guess:?}");
        assert!((s.a - base.a).abs() < 1e-9, "{guess:?}");
        assert!((s.alpha1_deg - base.alpha1_deg).abs() < 1e-9, "{guess:?}");
    }
}

#[test]
fn out_of_domain_guess_is_an_error() {
    assert!(solve_optimum([95.0, 1.0, 29.0, 30.0]).is_err());
    assert!(solve_optimum([75.0, -1.0, 29.0, 30.0]).is_err());
}

#[test]
fn jacobian_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let x = [
            rng.gen_range(rad(62.0)..rad(85.0)),
            rng.gen_range(0.6..1.4),
            rng.gen_range(rad(20.0)..rad(40.0)),
            rng.gen_range(rad(20.0)..rad(40.0)),
        ];
        let j = analysis::jacobian(x[0], x[1], x[2], x[3]).unwrap();
        for k in 0..4 {
            let h = 1e-6 * x[k].abs().max(1.0);
            let (mut up, mut dn) = (x, x);
            up[k] += h;
            dn[k] -= h;
            let ru = residuals(up[0], up[1], up[2], up[3]).unwrap();
            let rd = residuals(dn[0], dn[1], dn[2], dn[3]).unwrap();
            for i in 0..4 {
                let fd = (ru[i] - rd[i]) / (2.0 * h);
                assert!((fd - j[i][k]).abs() <= 1e-6 * j[i][k].abs().max(1.0), "d r{i}/d x{k}: {fd} vs {}", j[i][k]);
            }
        }
    }
}

fn synthetic(splits: &[(usize, f64)]) -> RefinementTrace {
    let mut t = RefinementTrace::default();
    for (i, &(l, len)) in splits.iter().enumerate() {
        t.events.push(TraceEvent {
            seq: i as u64,
            kind: EventKind::SegmentSplit,
            lineage: Some(l),
            length: Some(len),
            min_angle_deg: None,
            x: 0.0,
            y: 0.0,
        });
    }
    t
}

#[test]
fn classifier_on_synthetic_cascades() {
    // period 3, per-event decay 0.8
    let geometric: Vec<(usize, f64)> = (0..30).map(|i| (i % 3, 0.8f64.powi(i as i32))).collect();
    let v = classify(&synthetic(&geometric), RunStatus::DivergenceFloorHit);
    assert_eq!(v.status, Verdict::Diverging);
    assert!((v.decay_ratio.unwrap() - 0.8).abs() < 1e-12);
    assert_eq!(v.lineage_cycle.unwrap().len(), 3);

    // shrinking but with no repeating lineage pattern
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let erratic: Vec<(usize, f64)> =
        (0..30).map(|i| (rng.gen_range(0..9), 0.9f64.powi(i) * rng.gen_range(0.5..1.0))).collect();
    assert_eq!(classify(&synthetic(&erratic), RunStatus::BudgetExhausted).status, Verdict::Inconclusive);

    // too short to judge
    assert_eq!(classify(&synthetic(&geometric[..6]), RunStatus::BudgetExhausted).status, Verdict::Inconclusive);
    assert_eq!(classify(&synthetic(&geometric), RunStatus::Terminated).status, Verdict::Terminated);
}

#[test]
fn classifier_on_real_cascades() {
    let run = |ex: ExampleConfig, alpha: f64| {
        let p = ex.generate().unwrap();
        let out = refine::refine(&p, &RefinementConfig::with_alpha(alpha), Algorithm::Ruppert).unwrap();
        assert_eq!(out.status, RunStatus::DivergenceFloorHit);
        classify(&out.trace, out.status)
    };
    let v = run(ExampleConfig::pinwheel(4), 31.0);
    assert_eq!(v.status, Verdict::Diverging);
    assert!((v.decay_ratio.unwrap() / 2f64.powf(-0.25) - 1.0).abs() < 0.01);
    let mut cycle = v.lineage_cycle.unwrap();
    cycle.sort();
    assert_eq!(cycle, vec![0, 1, 2, 3]);

    let v = run(ExampleConfig::pav(1e-3), 30.5);
    assert_eq!(v.status, Verdict::Diverging);
    assert!((v.decay_ratio.unwrap() / 2f64.powf(-0.5) - 1.0).abs() < 0.01);
    assert_eq!(v.lineage_cycle.unwrap().len(), 2);
}

#[test]
fn scan_brackets_are_consistent() {
    let r = analysis::threshold_scan(&ExampleConfig::pinwheel(4), Algorithm::Ruppert, 28.0, 33.0, 0.1).unwrap();
    assert!(r.hi_deg - r.lo_deg <= 0.1);
    assert!(r.lo_deg < r.threshold_deg && r.threshold_deg < r.hi_deg);
    let expected = 2f64.powf(-0.75).atan().to_degrees();
    assert!(r.lo_deg <= expected + 0.05 && expected - 0.05 <= r.hi_deg, "{r:?}");
    // post hoc: no probe terminated above one that diverged
    let first_div =
        r.probes.iter().filter(|q| q.verdict == Verdict::Diverging).map(|q| q.alpha_deg).fold(f64::MAX, f64::min);
    assert!(r.probes.iter().filter(|q| q.verdict == Verdict::Terminated).all(|q| q.alpha_deg < first_div));
}

#[test]
fn scan_rejects_bad_brackets() {
    let ex = ExampleConfig::pinwheel(4);
    assert!(analysis::threshold_scan(&ex, Algorithm::Ruppert, 31.0, 28.0, 0.1).is_err());
    // both ends terminate
    assert!(analysis::threshold_scan(&ex, Algorithm::Ruppert, 20.0, 25.0, 0.1).is_err());
}

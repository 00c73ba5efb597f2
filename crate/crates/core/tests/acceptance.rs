//! End-to-end acceptance suite. Each test prints exactly one pass/fail
//! line; statistical thresholds were fixed by pilot runs and are pinned
//! here, not tuned per run.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqstat_core::expsum::{make_windows, stationary_phase, ExpSumEngine, ScaleParams};
use seqstat_core::moments::{enumerate_partitions, moment_report, partition_target};
use seqstat_core::quad;
use seqstat_core::sequences::{PhaseModel, SequenceSpec};
use seqstat_core::testfn::TestFunction;
use seqstat_core::teststat::{correlate_m, correlate_m_brute, ordered_points, OrderedSample};
use seqstat_core::vandermonde::{
    d_norm_lower_bound, det_m_leading, kt_ratio, kt_sampling_study, phase_derivatives,
    ExponentVector, NodeVector, PhaseDerivativeSystem,
};
use std::f64::consts::PI;
use std::time::Instant;

fn report(name: &str, pass: bool, detail: &str) {
    println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name}: {detail}");
}

fn e(x: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * x).sin_cos();
    Complex64::new(c, s)
}

#[test]
fn gap_histograms_match_figure_one() {
    let start = Instant::now();
    let n = 100_000;
    let ks2 = ordered_points(&SequenceSpec::log_power(1.0, 2.0).unwrap(), n)
        .unwrap()
        .ks_exponential()
        .unwrap();
    let ks3 = ordered_points(&SequenceSpec::log_power(1.0, 3.0).unwrap(), n)
        .unwrap()
        .ks_exponential()
        .unwrap();
    // (log n) itself: the A = 1 baseline, which is not even equidistributed
    let ks1 = ordered_points(&SequenceSpec::log_base(std::f64::consts::E).unwrap(), n)
        .unwrap()
        .ks_exponential()
        .unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = ks2 < 0.05 && ks3 < 0.05 && ks1 > 0.1 && secs < 10.0;
    report(
        "gap histograms",
        pass,
        &format!("KS(A=2)={ks2:.4} <0.05, KS(A=3)={ks3:.4} <0.05, KS(A=1)={ks1:.4} >0.1, {secs:.1}s <10s"),
    );
}

#[test]
fn pair_correlation_converges() {
    let f = TestFunction::bump(0.0, 1.0, 1.0).unwrap();
    let spec = SequenceSpec::log_power(1.0, 2.0).unwrap();
    let mut dev = Vec::new();
    let mut secs6 = 0.0;
    for &n in &[10_000usize, 100_000, 1_000_000] {
        let start = Instant::now();
        let est = correlate_m(&ordered_points(&spec, n).unwrap(), &[f.clone()]).unwrap();
        if n == 1_000_000 {
            secs6 = start.elapsed().as_secs_f64();
        }
        dev.push((est.value / est.reference - 1.0).abs());
    }
    // the deviation sequence is deterministic (2.3%, 2.9%, 1.7%): the
    // largest N gives the smallest deviation, though the path is not
    // strictly monotone
    let pass = dev[1] < 0.10
        && dev[2] < 0.05
        && dev[2] < dev[0]
        && dev[2] < dev[1]
        && secs6 < 60.0;
    report(
        "pair correlation",
        pass,
        &format!(
            "deviations {:.3}/{:.3}/{:.3} at N=1e4/1e5/1e6 (1e5 <0.10, 1e6 <0.05 and smallest), {secs6:.1}s <60s",
            dev[0], dev[1], dev[2]
        ),
    );
}

#[test]
fn triple_correlation() {
    let f = TestFunction::bump(0.0, 1.0, 1.0).unwrap();
    let spec = SequenceSpec::log_power(1.0, 2.0).unwrap();
    let est = correlate_m(
        &ordered_points(&spec, 100_000).unwrap(),
        &[f.clone(), f.clone()],
    )
    .unwrap();
    let dev = (est.value / est.reference - 1.0).abs();
    report(
        "triple correlation",
        dev < 0.15,
        &format!("m=3 relative deviation {dev:.3} < 0.15"),
    );
}

#[test]
fn moment_identity_exact() {
    let start = Instant::now();
    let spec = SequenceSpec::log_power(1.0, 2.0).unwrap();
    let fns = [
        TestFunction::bump(0.0, 1.0, 1.0).unwrap(),
        TestFunction::bump(0.1, 0.8, 1.5).unwrap(),
        TestFunction::smoothed_box(-0.6, 0.6, 0.25).unwrap(),
    ];
    let mut worst = 0.0f64;
    for f in &fns {
        for &n in &[50usize, 100, 200] {
            for m in 2..=3usize {
                let rep = moment_report(&spec, n, f, m).unwrap();
                worst = worst.max((rep.moment_value - rep.completed_sum_value).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst < 1e-8 && secs < 30.0;
    report(
        "moment identity",
        pass,
        &format!("worst |moment − completed sum| = {worst:.2e} < 1e-8 over 18 cases, {secs:.1}s <30s"),
    );
}

#[test]
fn partition_targets() {
    let bell = [1usize, 2, 5, 15, 52];
    let non_isolating = [1usize, 1, 4, 11];
    let mut pass = true;
    for m in 1..=5usize {
        pass &= enumerate_partitions(m, false).unwrap().len() == bell[m - 1];
        if m >= 2 {
            pass &= enumerate_partitions(m, true).unwrap().len() == non_isolating[m - 2];
        }
    }
    let f = TestFunction::bump(0.0, 1.0, 1.0).unwrap();
    let target = partition_target(&f, 4, true).unwrap();
    let e2 = f.expectation_power(2).unwrap();
    let e4 = f.expectation_power(4).unwrap();
    let gap = (target - (e4 + 3.0 * e2 * e2)).abs();
    pass &= gap < 1e-12;
    report(
        "partition targets",
        pass,
        &format!("Bell counts 1,2,5,15,52 and non-isolating 1,1,4,11 exact; m=4 target gap {gap:.1e} < 1e-12"),
    );
}

#[test]
fn b_process_fidelity() {
    let model = PhaseModel::new(SequenceSpec::log_power(1.0, 2.0).unwrap()).unwrap();
    let f = TestFunction::bump(0.0, 1.0, 1.0).unwrap();
    let grid: Vec<f64> = (0..64).map(|i| i as f64 / 64.0).collect();
    let mut ratios = Vec::new();
    for &(q, u) in &[(8usize, 10usize), (10, 12)] {
        let family = make_windows(q + 2, u).unwrap();
        let engine = ExpSumEngine::new(&model, &family, &f, (u as f64).exp());
        let rep = engine.compare_variants(q, u, &grid, 2).unwrap();
        ratios.push((rep.d_exact_b / rep.norm_exact, rep.d_b_bb / rep.norm_exact));
    }
    let pass = ratios[0].0 < 0.05
        && ratios[0].1 < 0.05
        && ratios[1].0 < ratios[0].0
        && ratios[1].1 < ratios[0].1;
    report(
        "B-process fidelity",
        pass,
        &format!(
            "(8,10): |E−B|/|E|={:.1e}, |B−BB|/|E|={:.1e} (<0.05); (10,12): {:.1e}, {:.1e} (both decreased)",
            ratios[0].0, ratios[0].1, ratios[1].0, ratios[1].1
        ),
    );
}

#[test]
fn stationary_phase_decay() {
    let w = TestFunction::bump(0.5, 0.4, 1.0).unwrap();
    let scales = ScaleParams {
        lambda_psi: 0.0,
        omega_psi: 1.0,
        omega_w: 0.8,
        lambda_w: 1.0,
    };
    let mut errs = Vec::new();
    let mut improved = true;
    for &lambda in &[100.0f64, 1000.0, 10_000.0] {
        let psi = move |x: f64| lambda * (x - 0.5) * (x - 0.5);
        let dpsi = move |x: f64| 2.0 * lambda * (x - 0.5);
        let d2psi = move |_: f64| 2.0 * lambda;
        let truth = quad::integrate_complex_panels(
            |x| w.eval(x) * e(psi(x)),
            0.1,
            0.9,
            (4.0 * lambda * 0.16).ceil() as usize,
            1e-12,
        );
        let wf = |x: f64| w.eval(x);
        let o0 = stationary_phase(&wf, &psi, &dpsi, &d2psi, 0.1, 0.9, scales, 0).unwrap();
        let o1 = stationary_phase(&wf, &psi, &dpsi, &d2psi, 0.1, 0.9, scales, 1).unwrap();
        let e0 = (o0 - truth).norm() / truth.norm();
        let e1 = (o1 - truth).norm() / truth.norm();
        improved &= e1 < e0;
        errs.push(e0);
    }
    // order-0 error ∝ Λ^{-1} within a factor of 3 per decade
    let r01 = errs[0] / errs[1];
    let r12 = errs[1] / errs[2];
    let pass = improved && (10.0 / 3.0..30.0).contains(&r01) && (10.0 / 3.0..30.0).contains(&r12);
    report(
        "stationary phase",
        pass,
        &format!(
            "order-0 errors {:.2e}/{:.2e}/{:.2e} (decade ratios {r01:.1}, {r12:.1} ∈ [3.3,30]); order-1 improves at every Λ: {improved}",
            errs[0], errs[1], errs[2]
        ),
    );
}

#[test]
fn khare_tao_sampling() {
    // ratio 1 exactly on the minimal exponent vector
    let u0 = NodeVector::new(vec![1.5, 2.5, 3.5, 4.5]).unwrap();
    let exact = (kt_ratio(&u0, &ExponentVector::minimal(4)).unwrap() - 1.0).abs();
    let mut pass = exact < 1e-12;
    let mut detail = format!("n_min ratio gap {exact:.1e} < 1e-12");
    // boxes differ by exponent spread (the ratio is shift-invariant)
    for &(lo, hi) in &[(-0.15, 0.15), (-0.3, 0.3), (-0.45, 0.45)] {
        let s1 = kt_sampling_study(3, (1.0, 10.0), (lo, hi), 10_000, 1).unwrap();
        let s2 = kt_sampling_study(3, (1.0, 10.0), (lo, hi), 10_000, 2).unwrap();
        pass &= s1.positive == 10_000 && s2.positive == 10_000;
        pass &= (s1.min_ratio / s2.min_ratio - 1.0).abs() < 0.10;
        pass &= (s1.max_ratio / s2.max_ratio - 1.0).abs() < 0.10;
        detail += &format!("; box ±{hi}: [{:.3},{:.3}] all>0", s1.min_ratio, s1.max_ratio);
    }
    report("Khare–Tao sampling", pass, &detail);
}

#[test]
fn derivative_system() {
    // b·M vs central finite differences of the phase, m = 1..4
    let mut worst = 0.0f64;
    for m in 1..=4usize {
        let h: Vec<u64> = [2u64, 3, 5, 8][..m].to_vec();
        let r: Vec<i64> = [1i64, -2, 3, 1][..m].to_vec();
        let sys = PhaseDerivativeSystem::new(h, r, 0.4, 2.0).unwrap();
        let got = phase_derivatives(&sys).unwrap();
        let g = |s: f64| -> f64 {
            sys.h
                .iter()
                .zip(&sys.r)
                .map(|(&h, &r)| r as f64 * (h as f64 + s).powf(0.5).exp())
                .sum()
        };
        // all four stencils are O(d⁴)-accurate; the step balances their
        // truncation against cancellation noise in the j = 4 difference
        let (s, d) = (sys.s, 5e-2);
        let fd = [
            (-g(s + 2.0 * d) + 8.0 * g(s + d) - 8.0 * g(s - d) + g(s - 2.0 * d)) / (12.0 * d),
            (-g(s + 2.0 * d) + 16.0 * g(s + d) - 30.0 * g(s) + 16.0 * g(s - d) - g(s - 2.0 * d))
                / (12.0 * d * d),
            (g(s - 3.0 * d) - 8.0 * g(s - 2.0 * d) + 13.0 * g(s - d) - 13.0 * g(s + d)
                + 8.0 * g(s + 2.0 * d)
                - g(s + 3.0 * d))
                / (8.0 * d * d * d),
            (-g(s - 3.0 * d) + 12.0 * g(s - 2.0 * d) - 39.0 * g(s - d) + 56.0 * g(s)
                - 39.0 * g(s + d)
                + 12.0 * g(s + 2.0 * d)
                - g(s + 3.0 * d))
                / (6.0 * d * d * d * d),
        ];
        for j in 0..m.min(4) {
            worst = worst.max(((got[j] - fd[j]) / fd[j]).abs());
        }
    }
    let mut pass = worst < 1e-5;

    // det(M) leading-term ratio → 1 as min h grows
    let mut prev = f64::INFINITY;
    let mut trend = true;
    for &scale in &[1_000u64, 10_000, 100_000] {
        let sys = PhaseDerivativeSystem::new(vec![scale, 2 * scale], vec![1, 1], 0.3, 2.0).unwrap();
        let (_, _, ratio) = det_m_leading(&sys).unwrap();
        trend &= (ratio - 1.0).abs() < prev;
        prev = (ratio - 1.0).abs();
    }
    pass &= trend;

    // ‖D‖₂ lower bound on 10³ random essential-range systems
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut bound_holds = 0usize;
    for _ in 0..1000 {
        let m = rng.gen_range(2..=4usize);
        let mut h: Vec<u64> = Vec::new();
        while h.len() < m {
            let cand = rng.gen_range(5_000..200_000u64);
            if !h.contains(&cand) {
                h.push(cand);
            }
        }
        let r: Vec<i64> = (0..m)
            .map(|_| rng.gen_range(1..=10i64) * if rng.gen_bool(0.5) { 1 } else { -1 })
            .collect();
        let sys = PhaseDerivativeSystem::new(h, r, rng.gen_range(0.0..1.0), 2.0).unwrap();
        let (nd, lb) = d_norm_lower_bound(&sys).unwrap();
        if nd >= lb * (1.0 - 1e-9) {
            bound_holds += 1;
        }
    }
    pass &= bound_holds == 1000;
    report(
        "derivative system",
        pass,
        &format!(
            "b·M vs finite differences worst rel {worst:.1e} < 1e-5; det(M) ratio→1 trend {trend}; ‖D‖ bound held {bound_holds}/1000"
        ),
    );
}

#[test]
fn engine_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut cases = 0usize;
    let mut exact = 0usize;
    while cases < 200 {
        let n = rng.gen_range(4..=50usize);
        let m = rng.gen_range(2..=3usize);
        let radius = rng.gen_range(0.2..1.2f64);
        if (m - 1) as f64 * 2.0 * radius / n as f64 >= 0.5 {
            continue;
        }
        let sample = OrderedSample::iid_uniform(n, rng.gen());
        let f = TestFunction::bump(0.0, radius, 1.0).unwrap();
        let factors = vec![f; m - 1];
        let fast = correlate_m(&sample, &factors).unwrap().value;
        let brute = correlate_m_brute(&sample, &factors).unwrap();
        if fast.to_bits() == brute.to_bits() {
            exact += 1;
        }
        cases += 1;
    }
    report(
        "engine vs oracle",
        exact == 200,
        &format!("bitwise-equal on {exact}/200 randomized cases (N ≤ 50, m ≤ 3)"),
    );
}

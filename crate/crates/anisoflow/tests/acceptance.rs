//! Acceptance gate: one test per release criterion, each printing a single
//! pass/fail line with the measured quantities behind the verdict.

use anisoflow::anisotropy::{Anisotropy, FourierMode};
use anisoflow::curve::{ConvexSupportCurve, PolylineCurve};
use anisoflow::flow::{
    check_area_derivative, check_max_curvature_monitor, run_flow, FlowConfig, FlowTrace,
    StopReason,
};
use anisoflow::gen::{generate, mix_seed, Family, GenSpec};
use anisoflow::spectral::{PeriodicField, TWO_PI};
use anisoflow::vec2::Vec2;
use anisoflow::verify::{
    batch_verify, convex_chain, equality_gap, isoperimetric, main_inequality, wulff_gage,
};

fn gate(name: &str, pass: bool, detail: &str) {
    println!("[{name}] {} - {detail}", if pass { "pass" } else { "FAIL" });
    assert!(pass, "[{name}] {detail}");
}

fn quadratic() -> Anisotropy {
    Anisotropy::quadratic(4.0, 1.0).unwrap()
}

fn fourier() -> Anisotropy {
    Anisotropy::fourier(
        1.0,
        vec![FourierMode {
            m: 4,
            a: 0.05,
            b: 0.0,
        }],
    )
    .unwrap()
}

fn sampled() -> Anisotropy {
    let quad = quadratic();
    Anisotropy::sampled((0..512).map(|i| quad.support(TWO_PI * i as f64 / 512.0)).collect())
        .unwrap()
}

fn circle(m: usize) -> PolylineCurve {
    PolylineCurve::new((0..m).map(|i| Vec2::from_angle(TWO_PI * i as f64 / m as f64)).collect())
        .unwrap()
}

fn support_input(a: &Anisotropy, m: usize) -> ConvexSupportCurve {
    ConvexSupportCurve::new(PeriodicField::from_fn(m, |t| a.support(t)).unwrap()).unwrap()
}

/// Nonuniform three-point first derivative at interior sample `i`.
fn d_dt(t: &[f64], f: &[f64], i: usize) -> f64 {
    let (hm, hp) = (t[i] - t[i - 1], t[i + 1] - t[i]);
    (f[i + 1] * hm * hm - f[i - 1] * hp * hp + f[i] * (hp * hp - hm * hm))
        / (hm * hp * (hm + hp))
}

#[test]
fn gate_01_euclidean_specialization() {
    let r = main_inequality(&circle(512), &Anisotropy::euclidean());
    let pass = (r.lhs - 1.0).abs() <= 1e-4 && (r.rhs - 1.0).abs() <= 1e-4 && r.margin.abs() <= 1e-4;
    gate(
        "gate 01 euclidean unit circle",
        pass,
        &format!("kF_max = {:.8}, sqrt(kappa/A) = {:.8}, |margin| = {:.2e}", r.lhs, r.rhs, r.margin.abs()),
    );
}

#[test]
fn gate_02_wulff_equality_case() {
    let mut worst_margin = 0.0f64;
    let mut worst_gap = 0.0f64;
    for a in [quadratic(), fourier()] {
        let wulff = a.wulff_boundary(1024).unwrap();
        for r in [0.5, 1.0, 2.0] {
            let c = wulff.scaled(r).unwrap();
            let report = main_inequality(&c, &a);
            let gap = equality_gap(&c, &a).unwrap();
            worst_margin = worst_margin.max(report.relative_margin.abs());
            worst_gap = worst_gap.max(gap);
        }
    }
    gate(
        "gate 02 wulff equality",
        worst_margin <= 1e-3 && worst_gap <= 1e-3,
        &format!("max |relative margin| = {worst_margin:.2e}, max equality gap = {worst_gap:.2e}"),
    );
}

#[test]
fn gate_03_batch_sweep_has_zero_failures() {
    let start = std::time::Instant::now();
    let mut failures = 0;
    let mut curves = 0;
    for (i, a) in [Anisotropy::euclidean(), quadratic(), fourier()].iter().enumerate() {
        for family in [
            Family::RandomConvex { max_mode: 6, amp: 0.5 },
            Family::RandomJordan { max_mode: 6, amp: 0.3 },
        ] {
            let spec = GenSpec { family, vertex_count: 256, seed: 0 };
            let summary = batch_verify(&spec, a, 100, 1000 + i as u64).unwrap();
            failures += summary.failures.len();
            curves += summary.n;
        }
    }
    gate(
        "gate 03 batch sweep",
        failures == 0,
        &format!("{curves} curves, {failures} failures, {:.1}s", start.elapsed().as_secs_f64()),
    );
}

#[test]
fn gate_04_wulff_gage_and_chain() {
    let mut worst_eq = 0.0f64;
    let mut all_pass = true;
    for a in [Anisotropy::euclidean(), quadratic(), fourier()] {
        let wulff = a.wulff_boundary(1024).unwrap();
        let r = wulff_gage(&wulff, &a).unwrap();
        worst_eq = worst_eq.max(r.relative_margin.abs());
        for i in 0..100u64 {
            let c = generate(
                &GenSpec {
                    family: Family::RandomConvex { max_mode: 6, amp: 0.5 },
                    vertex_count: 256,
                    seed: mix_seed(4, i),
                },
                &a,
            )
            .unwrap();
            all_pass &= wulff_gage(&c, &a).unwrap().pass;
            all_pass &= convex_chain(&c, &a).unwrap().pass();
        }
    }
    gate(
        "gate 04 wulff-gage",
        worst_eq <= 5e-3 && all_pass,
        &format!("Wulff equality deviation = {worst_eq:.2e}, 300 convex curves, both chain links"),
    );
}

#[test]
fn gate_05_isoperimetric_everywhere() {
    let mut all_pass = true;
    let mut worst_eq = 0.0f64;
    let mut curves = 0;
    for a in [Anisotropy::euclidean(), quadratic(), fourier()] {
        let wulff = a.wulff_boundary(1024).unwrap();
        let eq = isoperimetric(&wulff, &a);
        worst_eq = worst_eq.max(eq.relative_margin.abs());
        let mut fixtures = vec![
            wulff,
            circle(512),
            generate(
                &GenSpec { family: Family::Ellipse { a: 2.0, b: 1.0 }, vertex_count: 256, seed: 0 },
                &a,
            )
            .unwrap(),
            generate(&GenSpec { family: Family::Bean, vertex_count: 256, seed: 0 }, &a).unwrap(),
            generate(
                &GenSpec {
                    family: Family::PerturbedWulff { eps: 0.01, mode: 4 },
                    vertex_count: 256,
                    seed: 0,
                },
                &a,
            )
            .unwrap(),
        ];
        for i in 0..10u64 {
            for family in [
                Family::RandomConvex { max_mode: 6, amp: 0.5 },
                Family::RandomJordan { max_mode: 6, amp: 0.3 },
            ] {
                fixtures.push(
                    generate(
                        &GenSpec { family, vertex_count: 256, seed: mix_seed(5, i) },
                        &a,
                    )
                    .unwrap(),
                );
            }
        }
        curves += fixtures.len();
        for c in &fixtures {
            all_pass &= isoperimetric(c, &a).pass;
        }
    }
    gate(
        "gate 05 isoperimetric",
        all_pass && worst_eq <= 1e-3,
        &format!("{curves} curves, Wulff equality deviation = {worst_eq:.2e}"),
    );
}

fn area_derivative_worst(c: PolylineCurve, a: &Anisotropy, t_end: f64) -> f64 {
    let cfg = FlowConfig { t_end: Some(t_end), ..FlowConfig::default() };
    let tr = run_flow(c.into(), a, &cfg).unwrap();
    check_area_derivative(&tr).unwrap().rhs
}

#[test]
fn gate_06_area_derivative_law() {
    let quad = quadratic();
    let euclid = Anisotropy::euclidean();
    let cases: Vec<(&str, Family, &Anisotropy)> = vec![
        ("wulff", Family::Wulff { scale: 1.0, center: Vec2::ZERO }, &quad),
        ("circle", Family::Ellipse { a: 1.0, b: 1.0 }, &euclid),
        ("ellipse", Family::Ellipse { a: 2.0, b: 1.0 }, &euclid),
        ("bean", Family::Bean, &euclid),
    ];
    let mut default_worst = 0.0f64;
    let mut doubled_worst = 0.0f64;
    for (_, family, a) in &cases {
        for (m, worst) in [(256usize, &mut default_worst), (512, &mut doubled_worst)] {
            let c = generate(
                &GenSpec { family: family.clone(), vertex_count: m, seed: 0 },
                a,
            )
            .unwrap();
            let rel = area_derivative_worst(c, a, 0.1);
            *worst = worst.max(rel);
        }
    }
    gate(
        "gate 06 area derivative",
        default_worst <= 0.02 && doubled_worst <= 0.01,
        &format!(
            "worst |dA/dt + flux|/flux: {default_worst:.2e} at M=256 (<= 2e-2), {doubled_worst:.2e} at M=512 (<= 1e-2)"
        ),
    );
}

#[test]
fn gate_07_self_similar_wulff_shrinking() {
    let a = quadratic();
    let kappa = a.wulff_area();
    let cfg = FlowConfig { area_stop_fraction: 0.1, ..FlowConfig::default() };
    let tr = run_flow(support_input(&a, 256).into(), &a, &cfg).unwrap();
    assert_eq!(tr.stop_reason, StopReason::AreaFloor);
    let a0 = tr.initial_area;
    let target = (kappa / a0).sqrt();
    let mut worst_area = 0.0f64;
    let mut worst_kfu = 0.0f64;
    for s in &tr.samples {
        worst_area = worst_area.max((s.area - (a0 - 2.0 * kappa * s.t)).abs() / a0);
        worst_kfu = worst_kfu.max((s.kf_u_max - target).abs() / target);
    }
    gate(
        "gate 07 self-similar shrinking",
        worst_area <= 1e-2 && worst_kfu <= 1e-2,
        &format!(
            "max |A - (A0 - 2 kappa t)|/A0 = {worst_area:.2e}, max |kF_U_max/sqrt(kappa/A0) - 1| = {worst_kfu:.2e} over {} samples to 0.1 A0",
            tr.samples.len()
        ),
    );
}

#[test]
fn gate_08_bean_convexifies() {
    let a = Anisotropy::euclidean();
    let c = generate(&GenSpec { family: Family::Bean, vertex_count: 256, seed: 0 }, &a).unwrap();
    let tr = run_flow(c.into(), &a, &FlowConfig::default()).unwrap();
    assert_eq!(tr.stop_reason, StopReason::AreaFloor);
    let first = tr.first_convex_sample;
    let target = (tr.kappa / tr.initial_area).sqrt();
    let mut worst = f64::INFINITY;
    let mut stays_convex = true;
    if let Some(i0) = first {
        for s in &tr.samples[i0..] {
            stays_convex &= s.convex;
            worst = worst.min((s.kf_u_max - target) / target);
        }
    }
    gate(
        "gate 08 bean convexification",
        first.is_some() && stays_convex && worst >= -1e-2,
        &format!(
            "first convex at t = {:?}, min normalized margin = {worst:.2e} (>= -1e-2), convexity persists",
            tr.first_convex_time()
        ),
    );
}

#[test]
fn gate_09_duality_identities() {
    let mut worst = 0.0f64;
    let mut all_pass = true;
    for a in [Anisotropy::euclidean(), quadratic(), fourier(), sampled()] {
        for r in a.check_duality(1000, 9) {
            all_pass &= r.pass;
            if r.name != "duality-cauchy-schwarz" {
                worst = worst.max(r.rhs);
            }
        }
    }
    gate(
        "gate 09 duality identities",
        all_pass,
        &format!("4 anisotropies x 1000 samples, worst residual = {worst:.2e} (<= 1e-6)"),
    );
}

/// Worst deviation of `d/dt (kF_max)^2` from the self-similar bound
/// `2 kF_max^4` over interior samples, relative to the bound.
fn monitor_equality_deviation(tr: &FlowTrace) -> f64 {
    let t: Vec<f64> = tr.samples.iter().map(|s| s.t).collect();
    let sq: Vec<f64> = tr.samples.iter().map(|s| s.kf_max * s.kf_max).collect();
    let mut worst = 0.0f64;
    for i in 1..t.len() - 1 {
        let growth = d_dt(&t, &sq, i);
        let bound = 2.0 * sq[i] * sq[i];
        worst = worst.max((bound - growth).abs() / bound);
    }
    worst
}

#[test]
fn gate_10_max_curvature_monitor() {
    let quad = quadratic();
    let euclid = Anisotropy::euclidean();
    let cfg = FlowConfig { area_stop_fraction: 0.1, ..FlowConfig::default() };
    let wulff_tr = run_flow(support_input(&quad, 256).into(), &quad, &cfg).unwrap();
    let circle_tr = run_flow(support_input(&euclid, 256).into(), &euclid, &cfg).unwrap();
    let wulff_dev = monitor_equality_deviation(&wulff_tr);
    let circle_dev = monitor_equality_deviation(&circle_tr);

    let mut generic_pass = true;
    for (family, a) in [
        (Family::Bean, &euclid),
        (Family::Ellipse { a: 2.0, b: 1.0 }, &quad),
        (Family::RandomJordan { max_mode: 6, amp: 0.25 }, &fourier()),
    ] {
        let c = generate(&GenSpec { family, vertex_count: 256, seed: 3 }, a).unwrap();
        let cfg = FlowConfig { area_stop_fraction: 0.25, ..FlowConfig::default() };
        let tr = run_flow(c.into(), a, &cfg).unwrap();
        generic_pass &= check_max_curvature_monitor(&tr).unwrap().pass;
    }
    gate(
        "gate 10 max-curvature monitor",
        wulff_dev <= 5e-2 && circle_dev <= 5e-2 && generic_pass,
        &format!(
            "self-similar equality deviation: wulff {wulff_dev:.2e}, circle {circle_dev:.2e} (<= 5e-2); generic traces hold"
        ),
    );
}

#[test]
fn gate_11_discretization_order() {
    let euclid = Anisotropy::euclidean();
    let err = |m: usize| -> f64 {
        circle(m)
            .geometry(&euclid)
            .curvature
            .iter()
            .fold(0.0f64, |w, k| w.max((k - 1.0).abs()))
    };
    let curvature_ratio = err(256) / err(512);

    let mut margin_ratios = Vec::new();
    for a in [quadratic(), fourier()] {
        let margin = |m: usize| main_inequality(&a.wulff_boundary(m).unwrap(), &a).margin;
        margin_ratios.push(margin(512) / margin(1024));
    }
    let in_window = |r: f64| (3.5..=4.5).contains(&r);
    gate(
        "gate 11 discretization order",
        in_window(curvature_ratio) && margin_ratios.iter().copied().all(in_window),
        &format!(
            "circle curvature error ratio = {curvature_ratio:.2}, Wulff margin ratios = {:.2} / {:.2} (target [3.5, 4.5])",
            margin_ratios[0], margin_ratios[1]
        ),
    );
}

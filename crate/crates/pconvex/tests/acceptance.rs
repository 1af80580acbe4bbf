//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantities (run with `--nocapture` to see them).

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pconvex::convexity::{
    certify_boundary, is_p_psh_at, sample_boundary, sample_collar, Verdict,
};
use pconvex::field::{catalog, ExprField, ScalarField};
use pconvex::harmonic::ConformalHarmonicMap;
use pconvex::levi::theorem3_check;
use pconvex::linalg::{
    dot, eigh, min_trace_p, norm, random_frame_with, trace_on_plane, SymMatrix,
};
use pconvex::sdf::{
    curvature_transport_check, delta_field, principal_curvatures, tangent_basis,
};
use pconvex::synthesis::{
    composite_hessian, deep_point, h_func, level_set_family_check, synthesize, GridSpec,
    SynthesisOptions,
};

fn random_sym(n: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
    let entries: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    SymMatrix::new(n, entries).unwrap()
}

/// Criterion 1: for 50 random symmetric matrices (n ≤ 10, p ∈ {1..n−1}),
/// the minimum restricted trace over 1e5 random p-frames never drops below
/// λ₁+···+λ_p − 1e-8, and the bottom eigenframe attains it within 1e-10.
#[test]
fn criterion_1_lemma_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for case in 0..50 {
        let n = 2 + (case % 9); // 2..=10
        let p = 1 + rng.gen_range(0..n - 1);
        let q = random_sym(n, &mut rng);
        let formula = min_trace_p(&q, p).unwrap();

        let mut oracle = f64::INFINITY;
        for _ in 0..100_000 {
            let frame = random_frame_with(&mut rng, n, p).unwrap();
            oracle = oracle.min(trace_on_plane(&q, &frame).unwrap());
        }
        assert!(
            oracle >= formula - 1e-8,
            "case {case}: sampled min {oracle} below formula {formula}"
        );
        let eigframe = eigh(&q).unwrap().bottom_frame(p).unwrap();
        let attained = trace_on_plane(&q, &eigframe).unwrap();
        assert!(
            (attained - formula).abs() <= 1e-10,
            "case {case}: eigenframe trace {attained} vs {formula}"
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "runtime {elapsed:.1}s exceeds 30s");
    println!("PASS criterion 1: lemma oracle equivalence ({elapsed:.1}s)");
}

/// Criterion 2: measured interior-normal-line Hessian eigenvalues of δ match
/// ν_i/(1+tν_i) within relative 1e-3 (finite differences) on three domains,
/// and within 1e-6 using the analytic δ of the ball.
#[test]
fn criterion_2_curvature_transport() {
    let start = Instant::now();
    let t_values = [-0.2, -0.1, -0.05, 0.05];
    let domains = [
        catalog("ball", &[1.0]).unwrap(),
        catalog("ellipsoid", &[1.0, 2.0, 3.0]).unwrap(),
        catalog("solid_torus", &[2.5, 1.0]).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for dom in &domains {
        let points = sample_boundary(dom, 20, 2020).unwrap();
        for q in &points {
            let report = curvature_transport_check(dom, q, &t_values).unwrap();
            worst = worst.max(report.max_rel_err);
            assert!(
                report.max_rel_err <= 1e-3,
                "{}: rel err {}",
                dom.spec().name,
                report.max_rel_err
            );
        }
    }

    // Analytic-δ route on the ball: δ = |x| − 1 parsed symbolically.
    let ball = catalog("ball", &[1.0]).unwrap();
    let exact_delta = ExprField::parse("sqrt(normsq) - 1", 3).unwrap();
    let points = sample_boundary(&ball, 20, 2021).unwrap();
    let mut worst_exact: f64 = 0.0;
    for q in &points {
        let bp = principal_curvatures(&ball, q).unwrap();
        for t in t_values {
            let x: Vec<f64> = bp
                .point
                .iter()
                .zip(bp.outer_normal())
                .map(|(a, b)| a + t * b)
                .collect();
            let grad = exact_delta.gradient(&x).unwrap();
            let tangent = tangent_basis(&grad);
            let eig = eigh(&exact_delta.hessian(&x).unwrap().restrict(&tangent))
                .unwrap()
                .eigenvalues;
            for (m, nu) in eig.iter().zip(&bp.principal_curvatures) {
                let predicted = nu / (1.0 + t * nu);
                let rel = (m - predicted).abs() / predicted.abs();
                worst_exact = worst_exact.max(rel);
                assert!(rel <= 1e-6, "analytic-δ rel err {rel}");
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "runtime {elapsed:.1}s exceeds 60s");
    println!(
        "PASS criterion 2: curvature transport (fd {worst:.2e}, analytic {worst_exact:.2e}, {elapsed:.1}s)"
    );
}

/// Criterion 3: ‖∇δ‖ = 1 within 1e-6 and the normal-direction Hessian
/// eigenvalue of δ is 0 within 1e-5 at 200 collar points per catalog domain.
#[test]
fn criterion_3_eikonal_and_kernel() {
    let domains = [
        catalog("ball", &[1.0]).unwrap(),
        catalog("ellipsoid", &[1.0, 2.0, 3.0]).unwrap(),
        catalog("solid_torus", &[2.5, 1.0]).unwrap(),
        catalog("perturbed_ball", &[1.0, 0.1, 2.0]).unwrap(),
        catalog("complex_egg", &[2.0]).unwrap(),
        catalog("hartogs_example", &[]).unwrap(),
    ];
    let mut worst_eik: f64 = 0.0;
    let mut worst_kernel: f64 = 0.0;
    for dom in &domains {
        let delta = delta_field(dom);
        let points = sample_collar(dom, 200, -0.1, 303).unwrap();
        for x in &points {
            let g = delta.gradient(x).unwrap();
            let eik = (norm(&g) - 1.0).abs();
            worst_eik = worst_eik.max(eik);
            assert!(eik <= 1e-6, "{}: eikonal {eik}", dom.spec().name);

            let h = delta.hessian(x).unwrap();
            let spec = eigh(&h).unwrap();
            // Eigenpair whose vector is the normal direction.
            let (k, _) = spec
                .eigenvectors
                .iter()
                .enumerate()
                .map(|(k, v)| (k, dot(v, &g).abs()))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            let kernel = spec.eigenvalues[k].abs();
            worst_kernel = worst_kernel.max(kernel);
            assert!(kernel <= 1e-5, "{}: kernel {kernel}", dom.spec().name);
        }
    }
    println!("PASS criterion 3: eikonal {worst_eik:.2e}, normal kernel {worst_kernel:.2e}");
}

/// Criterion 4: synthesis certificates on solid_torus(2.5,1), ball(1) and
/// ellipsoid(1,2,3) with p = 2: min over the D̄ grid ≥ −1e-6 and min over
/// interior samples > 0, within the runtime budget.
#[test]
fn criterion_4_synthesis_certificates() {
    let start = Instant::now();
    let domains = [
        catalog("solid_torus", &[2.5, 1.0]).unwrap(),
        catalog("ball", &[1.0]).unwrap(),
        catalog("ellipsoid", &[1.0, 2.0, 3.0]).unwrap(),
    ];
    for dom in &domains {
        let df = synthesize(
            dom,
            2,
            Some(SynthesisOptions {
                grid: GridSpec {
                    n_interior: 2000,
                    n_collar: 2000,
                    n_boundary: 500,
                    seed: 4,
                },
                ..Default::default()
            }),
        )
        .unwrap();
        let cert = df.certificate();
        assert!(
            cert.min_overall >= -1e-6,
            "{}: overall {}",
            dom.spec().name,
            cert.min_overall
        );
        assert!(
            cert.min_interior > 0.0,
            "{}: interior {}",
            dom.spec().name,
            cert.min_interior
        );
        assert!(cert.strong, "{}: expected strong certificate", dom.spec().name);
        println!(
            "  {}: min_overall {:.3e}, min_interior {:.3e}, a {:.4}, eps {:.2e}",
            dom.spec().name,
            cert.min_overall,
            cert.min_interior,
            df.params().a,
            df.params().eps
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 300.0, "runtime {elapsed:.1}s exceeds 5 min");
    println!("PASS criterion 4: synthesis certificates ({elapsed:.1}s)");
}

/// Criterion 5: at 50 boundary points, the tangential eigenvalues of
/// Hess(h∘δ) equal ν_i within 1e-5 and the normal eigenvalue equals a
/// within 1e-5.
#[test]
fn criterion_5_boundary_identities() {
    let dom = catalog("solid_torus", &[2.5, 1.0]).unwrap();
    let delta = delta_field(&dom);
    let a = 0.7667;
    let h = h_func(a);
    let points = sample_boundary(&dom, 50, 505).unwrap();
    let mut worst_t: f64 = 0.0;
    let mut worst_n: f64 = 0.0;
    for q in &points {
        let bp = principal_curvatures(&dom, q).unwrap();
        let hess = composite_hessian(&h, &delta, &bp.point).unwrap();
        let outward = bp.outer_normal();
        let tangent = tangent_basis(&outward);
        let eig = eigh(&hess.restrict(&tangent)).unwrap().eigenvalues;
        for (m, nu) in eig.iter().zip(&bp.principal_curvatures) {
            worst_t = worst_t.max((m - nu).abs());
            assert!((m - nu).abs() <= 1e-5, "tangential {} vs {}", m, nu);
        }
        let normal_eig = hess.quad_form(&outward);
        worst_n = worst_n.max((normal_eig - a).abs());
        assert!((normal_eig - a).abs() <= 1e-5, "normal {normal_eig} vs {a}");
    }
    println!("PASS criterion 5: boundary identities (tangential {worst_t:.2e}, normal {worst_n:.2e})");
}

/// Criterion 6: on solid_torus(2.5,1), min s₂ over bD_t is non-decreasing as
/// t decreases through {0, −0.05, −0.1, −0.2}, each step ≥ −1e-6.
#[test]
fn criterion_6_level_set_monotonicity() {
    let dom = catalog("solid_torus", &[2.5, 1.0]).unwrap();
    let points = sample_boundary(&dom, 60, 606).unwrap();
    let t_values = [0.0, -0.05, -0.1, -0.2];
    let report = level_set_family_check(&dom, 2, &t_values, &points).unwrap();
    for w in report.entries.windows(2) {
        let step = w[1].min_sp - w[0].min_sp;
        assert!(
            step >= -1e-6,
            "step from t={} to t={} is {step}",
            w[0].t,
            w[1].t
        );
    }
    let mins: Vec<String> = report
        .entries
        .iter()
        .map(|e| format!("{:.4}", e.min_sp))
        .collect();
    println!("PASS criterion 6: level-set monotonicity (min s₂ = {})", mins.join(" → "));
}

/// Criterion 7: pullback Laplacian of synthesized ρ̃ along catenoid,
/// helicoid, Enneper and affine patches in ball(1) and solid_torus(2.5,1)
/// is ≥ −1e-5 at 500 parameter samples each, with the chain rule within
/// 1e-3 of a 5-point stencil.
#[test]
fn criterion_7_subharmonic_pullbacks() {
    let tau = std::f64::consts::TAU;
    for name in ["ball", "solid_torus"] {
        let dom = match name {
            "ball" => catalog("ball", &[1.0]).unwrap(),
            _ => catalog("solid_torus", &[2.5, 1.0]).unwrap(),
        };
        let df = synthesize(
            &dom,
            2,
            Some(SynthesisOptions {
                grid: GridSpec {
                    n_interior: 800,
                    n_collar: 800,
                    n_boundary: 300,
                    seed: 7,
                },
                ..Default::default()
            }),
        )
        .unwrap();
        let (center, clearance) = deep_point(&dom, 50, 77).unwrap();
        let patches = [
            ConformalHarmonicMap::catenoid([[0.0, tau], [-0.8, 0.8]]),
            ConformalHarmonicMap::helicoid([[-1.0, 1.0], [-0.8, 0.8]]),
            ConformalHarmonicMap::enneper([[-0.5, 0.5], [-0.5, 0.5]]),
            ConformalHarmonicMap::affine_plane(
                vec![0.0; 3],
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                [[-1.0, 1.0], [-1.0, 1.0]],
            )
            .unwrap(),
        ];
        for patch in patches {
            let fitted = patch.fitted_into(&center, 0.9 * clearance);
            // 25 × 20 = 500 parameter samples.
            let sweep =
                pconvex::harmonic::subharmonicity_sweep(df.field(), &fitted, 25, 20).unwrap();
            assert_eq!(sweep.rows.len(), 500);
            assert!(
                sweep.min_laplacian >= -1e-5,
                "{name}/{}: min {}",
                sweep.surface,
                sweep.min_laplacian
            );
            assert!(
                sweep.max_stencil_dev <= 1e-3,
                "{name}/{}: stencil dev {}",
                sweep.surface,
                sweep.max_stencil_dev
            );
        }
        println!("  {name}: all four patches subharmonic");
    }
    println!("PASS criterion 7: subharmonic pullbacks");
}

/// Criterion 8: hartogs_example has K = −4 ± 1e-3 on its Levi-degenerate
/// lines with strictly positive interior Levi minima at t ∈ {−0.05, −0.1};
/// complex_egg(2) has K = 0 there and interior minima within 1e-6 of 0.
#[test]
fn criterion_8_levi_positive_and_negative_cases() {
    let t_values = [-0.05, -0.1];

    let hartogs = catalog("hartogs_example", &[]).unwrap();
    let samples = sample_boundary(&hartogs, 40, 808).unwrap();
    let report = theorem3_check(&hartogs, &t_values, &samples).unwrap();
    assert!(report.pseudoconvex);
    assert!(!report.degenerate_lines.is_empty());
    for line in &report.degenerate_lines {
        assert!(
            (line.k_sectional + 4.0).abs() <= 1e-3,
            "hartogs K = {}",
            line.k_sectional
        );
    }
    assert!(report.hypothesis_holds);
    for entry in &report.per_t {
        let m = entry.min_degenerate_lines.unwrap();
        assert!(m > 0.0, "hartogs t={}: interior Levi {m}", entry.t);
    }
    let k0 = report.degenerate_lines[0].k_sectional;

    let egg = catalog("complex_egg", &[2.0]).unwrap();
    let samples = sample_boundary(&egg, 40, 809).unwrap();
    let report = theorem3_check(&egg, &t_values, &samples).unwrap();
    assert!(report.pseudoconvex);
    assert!(!report.degenerate_lines.is_empty());
    for line in &report.degenerate_lines {
        assert!(line.k_sectional.abs() <= 1e-6, "egg K = {}", line.k_sectional);
    }
    assert!(!report.hypothesis_holds);
    let mut worst: f64 = 0.0;
    for entry in &report.per_t {
        let m = entry.min_degenerate_lines.unwrap();
        worst = worst.max(m.abs());
        assert!(m.abs() <= 1e-6, "egg t={}: interior Levi {m}", entry.t);
    }
    println!("PASS criterion 8: hartogs K = {k0:.6}, egg interior |Levi| ≤ {worst:.2e}");
}

/// Criterion 9: solid_torus(1.5,1) is certified not-2-convex with witness
/// min s₂ = −1 ± 1e-3, and x₁² − x₂² in R³ fails the p = 2 test with value
/// −2 exactly.
#[test]
fn criterion_9_negative_controls() {
    let dom = catalog("solid_torus", &[1.5, 1.0]).unwrap();
    let points = sample_boundary(&dom, 200, 909).unwrap();
    let report = certify_boundary(&dom, 2, &points).unwrap();
    assert_eq!(report.verdict, Verdict::NotPConvex);
    assert!(
        (report.min_sp + 1.0).abs() <= 1e-3,
        "witness min_sp = {}",
        report.min_sp
    );

    let saddle = ExprField::parse("x1^2 - x2^2", 3).unwrap();
    let value = is_p_psh_at(&saddle, &[0.3, -0.4, 0.9], 2).unwrap();
    assert_eq!(value, -2.0, "expected exactly −2, got {value}");
    println!(
        "PASS criterion 9: negative controls (witness {:.6}, saddle {value})",
        report.min_sp
    );
}

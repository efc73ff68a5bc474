//! Batch verification suites behind the CLI: each one runs a related set of
//! identity, inequality or equivalence checks and returns a report.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::diagnostics::{self, RadialPhi};
use crate::equilibrium::{self, Normalization};
use crate::geometry;
use crate::kernels::{AngularModel, KernelSpec};
use crate::linearized;
use crate::minkowski::{com_transform, FourMomentum, Vec3};
use crate::norms::{self, LpGrid};
use crate::operator::{self, DyadicSign, OpContext};
use crate::quadrature::QuadratureSpec;
use crate::report::Report;
use crate::testfn::TestFunction;

fn random_momentum(rng: &mut impl Rng, scale: f64) -> FourMomentum {
    FourMomentum::new(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    )
    .expect("finite")
}

fn random_direction(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v * (1.0 / n);
        }
    }
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let var: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    cov / var
}

/// Geometry suite: conservation, frame conditions, Jacobians and the
/// pointwise inequality sweep over random tuples.
pub fn geometry_suite(cfg: &RunConfig, n: u64, seed: u64) -> Report {
    let mut report = Report::new("geometry", seed, cfg.to_config_string());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // conservation sweep
    let mut worst_momentum = 0.0_f64;
    let mut worst_energy = 0.0_f64;
    let mut worst_g = 0.0_f64;
    for _ in 0..n {
        let p = random_momentum(&mut rng, 10.0);
        let q = random_momentum(&mut rng, 10.0);
        let w = random_direction(&mut rng);
        let (pn, qn) = geometry::post_collision(&p, &q, w);
        let scale = p.energy() + q.energy();
        for i in 0..3 {
            let gap = (pn.spatial()[i] + qn.spatial()[i] - p.spatial()[i] - q.spatial()[i]).abs();
            worst_momentum = worst_momentum.max(gap / scale);
        }
        worst_energy =
            worst_energy.max((pn.energy() + qn.energy() - scale).abs() / scale);
        let g = geometry::relative_g(&p, &q);
        worst_g = worst_g.max((geometry::relative_g(&pn, &qn) - g).abs() / (1.0 + g));
    }
    report.metric("conservation.momentum_worst", worst_momentum);
    report.metric("conservation.energy_worst", worst_energy);
    report.metric("conservation.g_worst", worst_g);
    report.check(
        "conservation",
        worst_momentum <= 1e-12 && worst_energy <= 1e-12,
        format!("momentum {worst_momentum:.3e}, energy {worst_energy:.3e}"),
    );

    // frame conditions over non-colinear pairs
    let frame_n = (n / 10).max(1);
    let mut worst_frame = 0.0_f64;
    let mut worst_isometry = 0.0_f64;
    let mut accepted = 0u64;
    while accepted < frame_n {
        let p = random_momentum(&mut rng, 8.0);
        let q = random_momentum(&mut rng, 8.0);
        let lambda = match com_transform(&p, &q) {
            Ok(l) => l,
            Err(_) => continue,
        };
        accepted += 1;
        let inv = geometry::invariants(&p, &q).expect("mass shell");
        let rs = inv.s.sqrt();
        let total = [
            p.energy() + q.energy(),
            p.spatial()[0] + q.spatial()[0],
            p.spatial()[1] + q.spatial()[1],
            p.spatial()[2] + q.spatial()[2],
        ];
        let diff = [
            p.energy() - q.energy(),
            p.spatial()[0] - q.spatial()[0],
            p.spatial()[1] - q.spatial()[1],
            p.spatial()[2] - q.spatial()[2],
        ];
        let a = lambda.apply(total);
        let b = lambda.apply(diff);
        let residual = [
            (a[0] - rs).abs(),
            a[1].abs(),
            a[2].abs(),
            a[3].abs(),
            b[0].abs(),
            b[1].abs(),
            b[2].abs(),
            (b[3] + inv.g).abs(),
        ]
        .into_iter()
        .fold(0.0_f64, f64::max);
        worst_frame = worst_frame.max(residual / rs);
        worst_isometry = worst_isometry.max(lambda.isometry_residual());
    }
    report.metric("frame.residual_worst", worst_frame);
    report.metric("frame.isometry_worst", worst_isometry);
    report.check(
        "frame",
        worst_frame <= 1e-10 && worst_isometry <= 1e-12,
        format!("frame {worst_frame:.3e}, isometry {worst_isometry:.3e}"),
    );

    // analytic vs finite-difference pre-post Jacobian
    let jac_n = (n / 1000).max(10).min(2000);
    let mut worst_jac = 0.0_f64;
    for _ in 0..jac_n {
        let p = random_momentum(&mut rng, 4.0);
        let q = random_momentum(&mut rng, 4.0);
        let w = random_direction(&mut rng);
        let analytic = geometry::prepost_jacobian_analytic(&p, &q, w);
        if let Ok(numeric) = geometry::prepost_jacobian_numeric(&p, &q, w, 1e-4) {
            worst_jac = worst_jac.max(((numeric - analytic) / analytic).abs());
        }
    }
    report.metric("jacobian.rel_worst", worst_jac);
    report.check(
        "jacobian",
        worst_jac <= 1e-6,
        format!("worst relative gap {worst_jac:.3e} over {jac_n} triples"),
    );

    // pointwise inequality sweep
    let mut violations = 0u64;
    let mut checked = 0u64;
    for _ in 0..n {
        let p = random_momentum(&mut rng, 8.0);
        let q = random_momentum(&mut rng, 8.0);
        let w = random_direction(&mut rng);
        let (pn, qn) = geometry::post_collision(&p, &q, w);
        let z = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let rep = geometry::pointwise_inequality_suite(&p, &q, &pn, &qn, z);
        checked += rep.checked as u64;
        violations += rep.violations.len() as u64;
    }
    report.metric("inequalities.checked", checked as f64);
    report.metric("inequalities.violations", violations as f64);
    report.check(
        "inequalities",
        violations == 0,
        format!("{violations} violations in {checked} checks"),
    );
    report
}

/// Equilibrium and conservation suite: unit mass, the Bessel oracle, moment
/// bands, collision-invariant moments and entropy sign.
pub fn conservation_suite(cfg: &RunConfig) -> Report {
    let mut report = Report::new("conservation", cfg.quad.seed, cfg.to_config_string());

    // equilibrium normalization and special-function oracle
    let k2 = equilibrium::bessel_k2(1.0).expect("positive argument");
    report.metric("k2_one", k2);
    report.check(
        "k2_oracle",
        (k2 - 1.62483889863517748).abs() < 1e-8 * k2,
        format!("K2(1) = {k2:.12}"),
    );
    let nodes = crate::quadrature::ball_nodes(Vec3::ZERO, 40.0, 64, 12);
    let mass = crate::quadrature::compensated_sum(nodes.iter().map(|&(p, w)| {
        w * equilibrium::juttner_energy((1.0 + p.norm_sq()).sqrt(), Normalization::UnitMass)
    }));
    report.metric("unit_mass", mass);
    report.check(
        "unit_mass",
        (mass - 1.0).abs() < 1e-8,
        format!("int J = {mass:.12}"),
    );

    // moment band of the sqrt-equilibrium convolution weights
    let mut band_ok = true;
    for &k in &[-1i32, 0, 1, 2] {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..10 {
            let p0 = 50.0_f64.powf(i as f64 / 9.0);
            let p = FourMomentum::new((p0 * p0 - 1.0).max(0.0).sqrt(), 0.0, 0.0).expect("finite");
            let ratio = equilibrium::sqrt_juttner_moment(&p, k, Normalization::PaperLiteral)
                / p.energy().powi(k);
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        report.metric(&format!("moment_band.k{k}.lo"), lo);
        report.metric(&format!("moment_band.k{k}.hi"), hi);
        band_ok &= lo > 0.0 && hi / lo < 10.0;
    }
    report.check("moment_band", band_ok, "two-sided bands for k in {-1,0,1,2}".into());

    // collision-invariant moments and entropy production
    let ctx = OpContext::new(cfg.kernel, cfg.quad, cfg.normalization);
    let f = TestFunction::gaussian(0.5);
    match operator::collision_moments(&ctx, &f) {
        Ok(m) => {
            let scale = m.gain_scale.max(1e-300);
            report.metric("moments.mass", m.mass / scale);
            report.metric("moments.energy", m.energy / scale);
            report.metric(
                "moments.momentum_max",
                m.momentum.iter().fold(0.0_f64, |a, &b| a.max(b.abs())) / scale,
            );
            report.metric("entropy_production", m.entropy_production / scale);
            let tol = 1e-6;
            report.check(
                "moment_conservation",
                m.mass.abs() <= tol * scale
                    && m.energy.abs() <= tol * scale
                    && m.momentum.iter().all(|v| v.abs() <= tol * scale),
                format!(
                    "relative moments: mass {:.2e}, energy {:.2e}",
                    m.mass / scale,
                    m.energy / scale
                ),
            );
            report.check(
                "entropy_sign",
                m.entropy_production <= tol * scale,
                format!("relative entropy production {:.2e}", m.entropy_production / scale),
            );
        }
        Err(e) => report.check("moment_conservation", false, e.to_string()),
    }

    // equilibrium annihilation
    let j = TestFunction::juttner_density(cfg.normalization);
    let p = FourMomentum::new(0.6, -0.2, 0.4).expect("finite");
    match operator::collision_q(&ctx, &j, &j, &p) {
        Ok(v) => report.check(
            "equilibrium_annihilation",
            v.abs() < 1e-10,
            format!("Q(J,J) = {v:.3e}"),
        ),
        Err(e) => report.check("equilibrium_annihilation", false, e.to_string()),
    }
    report
}

/// The three Schwartz triples used by the representation-equivalence run.
pub fn representation_triples() -> Vec<(String, TestFunction, TestFunction, TestFunction)> {
    vec![
        (
            "gauss".into(),
            TestFunction::gaussian(0.5),
            TestFunction::gaussian(1.0),
            TestFunction::gaussian(0.75),
        ),
        (
            "poly_gauss".into(),
            TestFunction::gaussian_radial_poly(0.6, &[1.0, 0.3]),
            TestFunction::gaussian(0.8),
            TestFunction::gaussian_radial_poly(0.9, &[0.5, 0.1]),
        ),
        (
            "mixed".into(),
            TestFunction::gaussian(1.2),
            TestFunction::gaussian_radial_poly(0.5, &[1.0, -0.15]),
            TestFunction::gaussian(0.6),
        ),
    ]
}

/// Representation equivalence: the scattering-sphere form against the
/// transverse-plane (dual) form and the Carleman-surface form, plus the
/// center-of-momentum reduction gap and the dyadic scaling measurements.
pub fn representations_suite(cfg: &RunConfig) -> Report {
    let mut report = Report::new("representations", cfg.quad.seed, cfg.to_config_string());
    let ctx = OpContext::new(cfg.kernel, cfg.quad, cfg.normalization);
    let nodes_per_form = (cfg.quad.radial_order
        * cfg.quad.radial_order
        * cfg.quad.sphere_order
        * cfg.quad.sphere_order) as u64;

    for (name, f, h, eta) in representation_triples() {
        for l in [0i32, 1] {
            let omega = match operator::trilinear_omega(&ctx, &f, &h, &eta, l, true) {
                Ok(v) => v,
                Err(e) => {
                    report.check(&format!("omega[{name},l={l}]"), false, e.to_string());
                    continue;
                }
            };
            let dual = match operator::trilinear_dual(&ctx, &f, &h, &eta, l, false) {
                Ok(v) => v,
                Err(e) => {
                    report.check(&format!("dual[{name},l={l}]"), false, e.to_string());
                    continue;
                }
            };
            report.entry(&format!("trilinear[{name},l={l}]"), "omega", omega, 0.0, nodes_per_form);
            report.entry(&format!("trilinear[{name},l={l}]"), "dual", dual, 0.0, nodes_per_form);
            let gap = ((omega - dual) / omega).abs();
            report.metric(&format!("gap.dual.{name}.l{l}"), gap);
            report.check(
                &format!("omega_vs_dual[{name},l={l}]"),
                gap <= 1e-4,
                format!("omega {omega:.9e} vs dual {dual:.9e}, rel gap {gap:.3e}"),
            );
        }
        // Carleman comparison on the cancellation-bearing term
        let omega_n = match operator::omega_n_term(&ctx, &f, &eta, true) {
            Ok(v) => v,
            Err(e) => {
                report.check(&format!("omega_n[{name}]"), false, e.to_string());
                continue;
            }
        };
        let carleman = match operator::carleman_n_term(&ctx, &f, &eta) {
            Ok(v) => v,
            Err(e) => {
                report.check(&format!("carleman[{name}]"), false, e.to_string());
                continue;
            }
        };
        report.entry(&format!("n_term[{name}]"), "omega", omega_n, 0.0, nodes_per_form);
        report.entry(&format!("n_term[{name}]"), "carleman", carleman, 0.0, nodes_per_form);
        let gap = ((omega_n - carleman) / omega_n).abs();
        report.metric(&format!("gap.carleman.{name}"), gap);
        report.check(
            &format!("omega_vs_carleman[{name}]"),
            gap <= 1e-4,
            format!("omega {omega_n:.9e} vs carleman {carleman:.9e}, rel gap {gap:.3e}"),
        );
    }

    // center-of-momentum reduction gap on fixed pairs
    let pairs = [
        (
            FourMomentum::new(1.0, 0.0, 0.2).expect("finite"),
            FourMomentum::new(-0.4, 0.8, 0.0).expect("finite"),
        ),
        (
            FourMomentum::new(2.0, -1.0, 0.5).expect("finite"),
            FourMomentum::new(0.3, 0.9, -1.2).expect("finite"),
        ),
    ];
    let mut worst = 0.0_f64;
    for (p, q) in &pairs {
        for g_choice in 0..2 {
            let result = if g_choice == 0 {
                operator::com_reduction_check(&ctx, p, q, |_, _, _, qn| {
                    equilibrium::juttner(qn, ctx.norm)
                })
            } else {
                operator::com_reduction_check(&ctx, p, q, |_, _, pn, _| {
                    (-0.3 * pn.spatial().norm_sq()).exp()
                })
            };
            match result {
                Ok((lifted, direct)) => {
                    worst = worst.max(((lifted - direct) / direct).abs());
                }
                Err(e) => report.check("com_reduction", false, e.to_string()),
            }
        }
    }
    report.metric("gap.com_reduction", worst);
    report.check(
        "com_reduction",
        worst <= 1e-6,
        format!("worst relative gap {worst:.3e}"),
    );
    report
}

/// Dyadic scaling: the loss-piece magnitudes against the dyadic scale and the
/// reduced kernel constant.
pub fn dyadic_suite(cfg: &RunConfig) -> Report {
    let mut report = Report::new("dyadic", cfg.quad.seed, cfg.to_config_string());
    // broad test functions keep the relevant relative-momentum range populated
    // down to k = -3
    let kernel = KernelSpec::hard(0.0, 0.5, 1.0, 0.0).expect("valid");
    let quad = QuadratureSpec {
        radial_order: 48,
        sphere_order: 10,
        truncation_r: 70.0,
        ..cfg.quad
    };
    let ctx = OpContext::new(kernel, quad, cfg.normalization);
    let broad = TestFunction::gaussian(2.2e-4);
    let f = TestFunction::gaussian(0.5);
    let mut points = Vec::new();
    for k in -3..=3 {
        match operator::dyadic_t(&ctx, k, DyadicSign::Loss, &f, &broad, &broad, 0) {
            Ok(v) => {
                report.metric(&format!("t_minus.k{k}"), v);
                points.push((k as f64, v.abs().max(1e-300).log2()));
            }
            Err(e) => report.check(&format!("t_minus.k{k}"), false, e.to_string()),
        }
    }
    let slope = ls_slope(&points);
    report.metric("t_minus.slope", slope);
    report.check(
        "dyadic_slope",
        (slope - 0.5).abs() <= 0.15,
        format!("log2|T-| slope {slope:.4} vs gamma = 0.5"),
    );

    // telescoping back to the full form on a cutoff kernel
    let cut_kernel = KernelSpec::hard(0.0, 0.5, 1.0, 0.15).expect("valid");
    let cut_ctx = OpContext::new(cut_kernel, cfg.quad, cfg.normalization);
    let (tf, th, te) = (
        TestFunction::gaussian(0.5),
        TestFunction::gaussian(1.0),
        TestFunction::gaussian(0.75),
    );
    let full = operator::trilinear_omega(&cut_ctx, &tf, &th, &te, 0, false).unwrap_or(f64::NAN);
    let mut telescoped = 0.0;
    for k in -6..=9 {
        let gain =
            operator::dyadic_t(&cut_ctx, k, DyadicSign::Gain, &tf, &th, &te, 0).unwrap_or(0.0);
        let loss =
            operator::dyadic_t(&cut_ctx, k, DyadicSign::Loss, &tf, &th, &te, 0).unwrap_or(0.0);
        telescoped += gain - loss;
    }
    let gap = ((telescoped - full) / full).abs();
    report.metric("telescoping.gap", gap);
    report.check(
        "telescoping",
        gap <= cfg.quad.tol.max(1e-6) * 100.0,
        format!("sum over k {telescoped:.9e} vs full {full:.9e}"),
    );

    // reduced kernel bound over a pair grid
    let mut worst_c = 0.0_f64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.quad.seed);
    for _ in 0..20 {
        let p_new = random_momentum(&mut rng, 5.0);
        let q = random_momentum(&mut rng, 5.0);
        for k in -5..=5 {
            if let Ok(r) = diagnostics::reduced_k2_bound(&p_new, &q, k, 0.5) {
                worst_c = worst_c.max(r.value / r.dyadic_scale);
            }
        }
    }
    report.metric("reduced_k2.constant", worst_c);
    report.check(
        "reduced_k2",
        worst_c <= 10.0,
        format!("largest constant {worst_c:.4}"),
    );
    report
}

/// Coercivity suite: the family ratios between the norm part, the fractional
/// norm and the Dirichlet form. Returns the report and CSV rows
/// `fId,dirichlet,nForm,fractionalSq,ratio`.
pub fn coercivity_suite(cfg: &RunConfig) -> (Report, Vec<String>) {
    let mut report = Report::new("coercivity", cfg.quad.seed, cfg.to_config_string());
    let ctx = OpContext::new(cfg.kernel, cfg.quad, Normalization::UnitMass);
    let family = crate::testfn::default_family(Normalization::UnitMass);
    let mut rows = Vec::new();
    let mut ratio_lo = f64::INFINITY;
    let mut ratio_hi = 0.0_f64;
    let mut delta_min = f64::INFINITY;
    let mut dirichlet_floor = 0.0_f64;
    for (name, f) in &family {
        let n = match linearized::n_form(&ctx, f, 0) {
            Ok(v) => v,
            Err(e) => {
                report.check(&format!("n_form[{name}]"), false, e.to_string());
                continue;
            }
        };
        let frac_sq = match norms::fractional_norm_sq(f, cfg.kernel.rho, cfg.kernel.gamma, 0, &cfg.quad)
        {
            Ok(v) => v,
            Err(e) => {
                report.check(&format!("fractional[{name}]"), false, e.to_string());
                continue;
            }
        };
        let dirichlet = match linearized::dirichlet_form(&ctx, f) {
            Ok(v) => v,
            Err(e) => {
                report.check(&format!("dirichlet[{name}]"), false, e.to_string());
                continue;
            }
        };
        let ratio = n / frac_sq;
        ratio_lo = ratio_lo.min(ratio);
        ratio_hi = ratio_hi.max(ratio);
        let scale = n.max(frac_sq);
        dirichlet_floor = dirichlet_floor.min(dirichlet / scale);
        report.metric(&format!("dirichlet.{name}"), dirichlet);
        report.metric(&format!("n_form.{name}"), n);
        report.metric(&format!("fractional_sq.{name}"), frac_sq);
        rows.push(format!("{name},{dirichlet},{n},{frac_sq},{ratio}"));

        // coercivity against the microscopic part
        let micro = linearized::micro_part(f, &cfg.quad);
        if let (Ok(micro_n), Ok(_)) = (
            linearized::n_form(&ctx, &micro, 0),
            linearized::dirichlet_form(&ctx, &micro),
        ) {
            if micro_n > 1e-9 {
                delta_min = delta_min.min(dirichlet.max(0.0) / micro_n);
            }
        }
    }
    report.metric("ratio.lo", ratio_lo);
    report.metric("ratio.hi", ratio_hi);
    report.metric("ratio.spread", ratio_hi / ratio_lo);
    report.metric("delta_min", delta_min);
    report.metric("dirichlet.rel_floor", dirichlet_floor);
    report.check(
        "norm_equivalence_band",
        ratio_hi / ratio_lo < 100.0,
        format!("ratios in [{ratio_lo:.4}, {ratio_hi:.4}]"),
    );
    report.check(
        "dirichlet_nonnegative",
        dirichlet_floor >= -1e-8,
        format!("relative floor {dirichlet_floor:.3e}"),
    );
    report.check(
        "coercivity_delta",
        delta_min > 0.0 && delta_min.is_finite(),
        format!("fitted delta {delta_min:.6}"),
    );

    // hydrodynamic identities and conservation constants
    let constants = linearized::conservation_constants();
    report.metric("mu1", constants.mu1);
    report.metric("mu2", constants.mu2);
    report.metric("mu3", constants.mu3);
    report.metric("mu4", constants.mu4);
    report.check(
        "conservation_constants",
        constants.mu1 > 0.0 && constants.mu3 < 0.0,
        format!("mu1 = {:.6}, mu3 = {:.6}", constants.mu1, constants.mu3),
    );
    let mut identities_ok = true;
    let mut worst = 0.0_f64;
    for f in [
        TestFunction::gaussian(0.5),
        TestFunction::gaussian_radial_poly(0.7, &[1.0, -0.2]),
        TestFunction::gaussian_monomial(0.6, [1, 0, 0], 0),
    ] {
        let rep = linearized::microscopic_identity_check(&f, &cfg.quad, 1e-6);
        identities_ok &= rep.ok();
        worst = worst.max(rep.worst);
        for v in rep.violations {
            report.check("microscopic_identity", false, v);
        }
    }
    report.metric("microscopic.worst", worst);
    report.check(
        "microscopic_identities",
        identities_ok,
        format!("worst residual {worst:.3e}"),
    );
    (report, rows)
}

/// Gaussian-class family used by the lattice frequency suite: members whose
/// content fits inside the lattice extent.
pub fn lp_family() -> Vec<(String, TestFunction)> {
    vec![
        ("gauss_1".into(), TestFunction::gaussian(1.0)),
        ("gauss_half".into(), TestFunction::gaussian(0.5)),
        ("gauss_2".into(), TestFunction::gaussian(2.0)),
        (
            "r2_gauss".into(),
            TestFunction::gaussian_radial_poly(0.7, &[0.0, 1.0]),
        ),
        (
            "poly_gauss".into(),
            TestFunction::gaussian_radial_poly(0.6, &[1.0, -0.5, 0.05]),
        ),
        (
            "p1_gauss".into(),
            TestFunction::gaussian_monomial(0.8, [1, 0, 0], 0),
        ),
        (
            "p1p2_gauss".into(),
            TestFunction::gaussian_monomial(0.9, [1, 1, 0], 0),
        ),
        (
            "sharp_gauss".into(),
            TestFunction::gaussian_radial_poly(3.0, &[1.0, 1.0]),
        ),
    ]
}

/// Frequency-decomposition suite: inequality ratios for the family at the
/// base scale count and two deeper, plus norm values. Returns CSV rows
/// `fId,jMax,lhs,lhsDeriv,rhsSq,ratio,ratioDeriv`.
pub fn norms_suite(cfg: &RunConfig, rho: f64, gamma: f64, j_max: u32) -> (Report, Vec<String>) {
    let mut report = Report::new("norms", cfg.quad.seed, cfg.to_config_string());
    let mut rows = Vec::new();
    let mut max_ratio = 0.0_f64;
    let mut max_ratio_deriv = 0.0_f64;
    let mut stable = true;
    for (name, f) in lp_family() {
        let base_grid = LpGrid {
            h: 2.0_f64.powi(-(j_max as i32) - 2),
            extent: 3.0,
        };
        let deep_grid = LpGrid {
            h: 2.0_f64.powi(-(j_max as i32) - 4),
            extent: 3.0,
        };
        let base = match norms::lp_inequality_ratio(&f, rho, gamma, j_max, base_grid, &cfg.quad) {
            Ok(r) => r,
            Err(e) => {
                report.check(&format!("lp[{name}]"), false, e.to_string());
                continue;
            }
        };
        let deep =
            match norms::lp_inequality_ratio(&f, rho, gamma, j_max + 2, deep_grid, &cfg.quad) {
                Ok(r) => r,
                Err(e) => {
                    report.check(&format!("lp_deep[{name}]"), false, e.to_string());
                    continue;
                }
            };
        max_ratio = max_ratio.max(base.ratio).max(deep.ratio);
        max_ratio_deriv = max_ratio_deriv.max(base.ratio_deriv).max(deep.ratio_deriv);
        let drift = (deep.ratio / base.ratio - 1.0).abs();
        stable &= drift <= 0.2;
        report.metric(&format!("lp.ratio.{name}"), base.ratio);
        report.metric(&format!("lp.ratio_deep.{name}"), deep.ratio);
        report.metric(&format!("lp.ratio_deriv.{name}"), base.ratio_deriv);
        report.metric(&format!("lp.drift.{name}"), drift);
        rows.push(format!(
            "{name},{j_max},{},{},{},{},{}",
            base.lhs, base.lhs_deriv, base.rhs_sq, base.ratio, base.ratio_deriv
        ));
        rows.push(format!(
            "{name},{},{},{},{},{},{}",
            j_max + 2,
            deep.lhs,
            deep.lhs_deriv,
            deep.rhs_sq,
            deep.ratio,
            deep.ratio_deriv
        ));
    }
    report.metric("lp.max_ratio", max_ratio);
    report.metric("lp.max_ratio_deriv", max_ratio_deriv);
    report.check(
        "lp_bounded",
        max_ratio.is_finite() && max_ratio > 0.0 && max_ratio_deriv.is_finite(),
        format!("ratios bounded by {max_ratio:.4} / {max_ratio_deriv:.4}"),
    );
    report.check(
        "lp_stable",
        stable,
        "ratio drift within 20% of the deeper decomposition".into(),
    );
    (report, rows)
}

/// Collision-frequency weight asymptotics: the fitted growth exponent of
/// `zeta(p)` against `(rho + gamma) / 2`.
pub fn zeta_exponent_fit(cfg: &RunConfig) -> (Report, Vec<(f64, f64)>) {
    let mut report = Report::new("zeta", cfg.quad.seed, cfg.to_config_string());
    let ctx = OpContext::new(cfg.kernel, cfg.quad, Normalization::PaperLiteral);
    let energies = linearized::energy_grid(5.0, 50.0, 8);
    let mut points = Vec::new();
    for p in &energies {
        match operator::zeta_weight(&ctx, p) {
            Ok(z) => {
                report.metric(&format!("zeta.p0_{:.1}", p.energy()), z);
                if z > 0.0 {
                    points.push((p.energy().ln(), z.ln()));
                } else {
                    report.check("zeta_positive", false, format!("zeta = {z} at {}", p.energy()));
                }
            }
            Err(e) => report.check("zeta", false, e.to_string()),
        }
    }
    let slope = ls_slope(&points);
    let expect = (cfg.kernel.rho + cfg.kernel.gamma) / 2.0;
    report.metric("zeta.exponent", slope);
    report.metric("zeta.exponent_expected", expect);
    report.check(
        "zeta_exponent",
        (slope - expect).abs() <= 0.1,
        format!("fitted {slope:.4} vs (rho+gamma)/2 = {expect:.4}"),
    );
    (report, points)
}

/// Cancellation counterexample: stabilizing and diverging truncations.
pub fn counterexample_suite(cfg: &RunConfig, p: &FourMomentum, r_list: &[f64]) -> Report {
    let mut report = Report::new("counterexample", cfg.quad.seed, cfg.to_config_string());
    let kernel = cfg.kernel.with_angular(AngularModel::Constant(1.0));
    match diagnostics::zeta_b_split(p, &kernel, r_list, &cfg.quad, RadialPhi::PowerLaw) {
        Ok(rep) => {
            for (i, &r) in rep.truncations.iter().enumerate() {
                report.metric(&format!("zeta_b1.R{r}"), rep.zeta_b1[i]);
                report.metric(&format!("zeta_b2.R{r}"), rep.zeta_b2[i]);
            }
            report.metric("growth_factor", rep.growth_factor);
            report.metric("b1_rel_change", rep.b1_rel_change);
            report.check(
                "b1_stabilizes",
                rep.b1_cauchy(0.01),
                format!("relative change {:.3e}", rep.b1_rel_change),
            );
            report.check(
                "b2_diverges",
                rep.b2_strictly_increasing() && rep.growth_factor >= 1.9,
                format!("growth factor {:.4}", rep.growth_factor),
            );
        }
        Err(e) => report.check("counterexample", false, e.to_string()),
    }
    report
}

/// Jacobian scan driver. Returns the report plus CSV rows `p1,p2,p3,det`.
pub fn jacobian_scan_suite(
    cfg: &RunConfig,
    q: &FourMomentum,
    omega: Vec3,
    grid_min: f64,
    grid_max: f64,
    step: f64,
    extended: bool,
) -> (Report, Vec<String>) {
    let mut report = Report::new("jacobian-scan", cfg.quad.seed, cfg.to_config_string());
    let (rows, summary) = diagnostics::jacobian_scan(q, omega, grid_min, grid_max, step, extended);
    report.metric("min_abs_det", summary.min_abs_det);
    report.metric("count_below_threshold", summary.count_below_threshold as f64);
    report.metric("rows", summary.rows as f64);
    report.check(
        "scan_complete",
        rows.iter().all(|r| r.det.is_finite()),
        format!(
            "min |det| = {:.3e} at ({}, {}, {})",
            summary.min_abs_det, summary.argmin[0], summary.argmin[1], summary.argmin[2]
        ),
    );
    let csv = rows
        .iter()
        .map(|r| format!("{},{},{},{}", r.p1, r.p2, r.p3, r.det))
        .collect();
    (report, csv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_fit_recovers_line() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 + 0.5 * i as f64)).collect();
        assert!((ls_slope(&pts) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn geometry_suite_small_run_passes() {
        let cfg = RunConfig::default();
        let report = geometry_suite(&cfg, 2000, 7);
        assert!(report.passed, "{}", report.to_json());
    }
}

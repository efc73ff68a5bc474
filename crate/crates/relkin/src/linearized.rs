//! Hydrodynamic projection, the Dirichlet form of the linearized operator,
//! the norm part with its collision-frequency weight, and the conservation-law
//! constants. Everything here works in the unit-mass normalization: the
//! projection coefficient formulas assume the equilibrium integrates to one.

use crate::equilibrium::{moments, sqrt_juttner_energy, Moments, Normalization};
use crate::minkowski::{mass_shell_lift, FourMomentum, Vec3};
use crate::operator::{OpContext, OperatorError};
use crate::quadrature::{ball_nodes, compensated_sum, gl_interval, QuadratureSpec};
use crate::testfn::{hydro_combination, TestFunction};

/// Coefficients of the hydrodynamic part `Pf = (A + B.p + C p0) sqrt(J)`.
#[derive(Clone, Copy, Debug)]
pub struct HydroCoefficients {
    pub a: f64,
    pub b: Vec3,
    pub c: f64,
}

/// Truncation radius used for the `sqrt(J)`-weighted inner products: the
/// slowest integrands decay like `e^{-p0}`, so the tail at 28 is ~1e-10.
const PROJECTION_RADIUS: f64 = 28.0;

fn projection_nodes(quad: &QuadratureSpec) -> Vec<(Vec3, f64)> {
    ball_nodes(
        Vec3::ZERO,
        PROJECTION_RADIUS.max(quad.truncation_r),
        quad.radial_order.max(64),
        quad.sphere_order.max(12),
    )
}

/// `int f g sqrt(J) dp` for a plain closure `g` of `(p, p0)`.
fn weighted_inner(
    f: &TestFunction,
    weight: impl Fn(Vec3, f64) -> f64,
    quad: &QuadratureSpec,
) -> f64 {
    let nodes = projection_nodes(quad);
    compensated_sum(nodes.iter().map(|&(p, w)| {
        let p0 = (1.0 + p.norm_sq()).sqrt();
        w * f.eval(p) * weight(p, p0) * sqrt_juttner_energy(p0, Normalization::UnitMass)
    }))
}

/// Projection onto the null space `span{sqrt(J), p_i sqrt(J), p0 sqrt(J)}`.
pub fn project_p(f: &TestFunction, quad: &QuadratureSpec) -> HydroCoefficients {
    let m = moments(Normalization::UnitMass);
    let f1 = weighted_inner(f, |_, _| 1.0, quad);
    let fp = Vec3::new(
        weighted_inner(f, |p, _| p[0], quad),
        weighted_inner(f, |p, _| p[1], quad),
        weighted_inner(f, |p, _| p[2], quad),
    );
    let fe = weighted_inner(f, |_, p0| p0, quad);
    let c = (fe - m.lam0 * f1) / (m.lam00 - m.lam0 * m.lam0);
    let a = f1 - m.lam0 * c;
    let b = fp * (1.0 / m.lam11);
    HydroCoefficients { a, b, c }
}

/// The microscopic remainder `(I - P) f` as a closed-form test function.
pub fn micro_part(f: &TestFunction, quad: &QuadratureSpec) -> TestFunction {
    let coeff = project_p(f, quad);
    let hydro = hydro_combination(coeff.a, coeff.b, coeff.c, Normalization::UnitMass);
    f.minus(&hydro)
}

/// The hydrodynamic part `Pf` as a test function.
pub fn hydro_part(f: &TestFunction, quad: &QuadratureSpec) -> TestFunction {
    let coeff = project_p(f, quad);
    hydro_combination(coeff.a, coeff.b, coeff.c, Normalization::UnitMass)
}

/// Norm part `<N f, f>` with weight `(p0)^{2l}`: the quadratic difference
/// term plus the collision-frequency weight, accumulated in a single
/// `(p, q, omega)` pass. Both pieces carry the grazing cancellation, so the
/// evaluation is cutoff-free.
pub fn n_form(ctx: &OpContext, f: &TestFunction, l: i32) -> Result<f64, OperatorError> {
    assert_eq!(ctx.norm, Normalization::UnitMass, "norm part uses unit mass");
    crate::operator::n_form_impl(ctx, f, l)
}

/// Dirichlet form `<L f, f>` through `L = N + K`: the norm part minus the
/// compact pairing `<Gamma(f, sqrt(J)), f>`.
pub fn dirichlet_form(ctx: &OpContext, f: &TestFunction) -> Result<f64, OperatorError> {
    assert_eq!(ctx.norm, Normalization::UnitMass);
    let n = n_form(ctx, f, 0)?;
    let k = crate::operator::compact_pairing(ctx, f)?;
    Ok(n - k)
}

/// Conservation-law constants from the equilibrium moments.
#[derive(Clone, Copy, Debug)]
pub struct ConservationConstants {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub mu4: f64,
}

pub fn conservation_constants() -> ConservationConstants {
    let Moments {
        lam0,
        lam00,
        lam11,
        lam110,
    } = moments(Normalization::UnitMass);
    ConservationConstants {
        mu1: 1.0 - lam0 * lam0 / lam00,
        mu2: lam110 - lam0 * lam11 / lam00,
        mu3: lam0 - lam00 / lam0,
        mu4: lam110 - lam11 / lam0,
    }
}

/// Outcome of the microscopic/transport identity checks.
#[derive(Clone, Debug, Default)]
pub struct IdentityReport {
    pub checked: usize,
    pub worst: f64,
    pub violations: Vec<String>,
}

impl IdentityReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn check(&mut self, name: &str, value: f64, tol: f64) {
        self.checked += 1;
        self.worst = self.worst.max(value.abs());
        if value.abs() > tol {
            self.violations.push(format!("{name}: |{value}| > {tol}"));
        }
    }
}

/// Verifies that the microscopic part is orthogonal to the collision
/// invariants and that the transport moments of the hydrodynamic part
/// reproduce their equilibrium-moment expressions.
pub fn microscopic_identity_check(
    f: &TestFunction,
    quad: &QuadratureSpec,
    tol: f64,
) -> IdentityReport {
    let mut report = IdentityReport::default();
    let m = moments(Normalization::UnitMass);
    let coeff = project_p(f, quad);
    let micro = micro_part(f, quad);
    let scale = weighted_inner(f, |_, _| 1.0, quad).abs().max(1.0);

    // orthogonality of the microscopic remainder to the five invariants
    report.check(
        "micro vs sqrtJ",
        weighted_inner(&micro, |_, _| 1.0, quad) / scale,
        tol,
    );
    for i in 0..3 {
        report.check(
            &format!("micro vs p{} sqrtJ", i + 1),
            weighted_inner(&micro, |p, _| p[i], quad) / scale,
            tol,
        );
    }
    report.check(
        "micro vs p0 sqrtJ",
        weighted_inner(&micro, |_, p0| p0, quad) / scale,
        tol,
    );

    // idempotence: projecting the projection changes nothing
    let hydro = hydro_part(f, quad);
    let again = project_p(&hydro, quad);
    report.check("P idempotent (A)", again.a - coeff.a, tol * scale);
    report.check("P idempotent (C)", again.c - coeff.c, tol * scale);
    for i in 0..3 {
        report.check(
            &format!("P idempotent (B{})", i + 1),
            again.b[i] - coeff.b[i],
            tol * scale,
        );
    }

    // transport moments of Pf against the stated moment combinations
    let hydro_fn = &hydro;
    for j in 0..3 {
        let lhs = weighted_inner(hydro_fn, |p, p0| p[j] / p0, quad);
        report.check(
            &format!("transport p{}/p0", j + 1),
            lhs - m.lam110 * coeff.b[j],
            tol * scale.max(m.lam11),
        );
        let lhs = weighted_inner(hydro_fn, |p, _| p[j], quad);
        report.check(
            &format!("transport p{}", j + 1),
            lhs - m.lam11 * coeff.b[j],
            tol * scale.max(m.lam11),
        );
        for i in 0..3 {
            let lhs = weighted_inner(hydro_fn, |p, p0| p[i] * p[j] / p0, quad);
            let rhs = if i == j {
                m.lam110 * coeff.a + m.lam11 * coeff.c
            } else {
                0.0
            };
            report.check(
                &format!("transport p{}p{}/p0", i + 1, j + 1),
                lhs - rhs,
                tol * scale.max(m.lam11),
            );
        }
    }
    report
}

/// `L^2` norm squared of a test function against plain measure, used by the
/// Pythagoras check.
pub fn l2_norm_sq(f: &TestFunction, quad: &QuadratureSpec) -> f64 {
    let nodes = ball_nodes(
        Vec3::ZERO,
        PROJECTION_RADIUS.max(quad.truncation_r),
        quad.radial_order.max(64),
        quad.sphere_order.max(12),
    );
    compensated_sum(
        nodes
            .iter()
            .map(|&(p, w)| w * f.eval(p) * f.eval(p)),
    )
}

/// Radial grid of energies `p0` in `[lo, hi]`, log-spaced, used by weight
/// asymptotics fits.
pub fn energy_grid(lo: f64, hi: f64, n: usize) -> Vec<FourMomentum> {
    gl_interval(1, 0.0, 1.0); // keep the cache warm
    (0..n)
        .map(|i| {
            let p0 = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
            mass_shell_lift(Vec3::new((p0 * p0 - 1.0).max(0.0).sqrt(), 0.0, 0.0)).unwrap()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{Family, KernelSpec};
    use crate::testfn::Monomial;

    fn quad() -> QuadratureSpec {
        QuadratureSpec {
            radial_order: 64,
            sphere_order: 12,
            ..Default::default()
        }
    }

    #[test]
    fn projection_basis_cases() {
        let q = quad();
        let sqrt_j = TestFunction::sqrt_juttner(Normalization::UnitMass);
        let c = project_p(&sqrt_j, &q);
        assert!((c.a - 1.0).abs() < 1e-8, "A = {}", c.a);
        assert!(c.b.norm() < 1e-10 && c.c.abs() < 1e-8);

        let p1_sqrt_j = TestFunction::juttner_poly(
            vec![Monomial {
                coef: 1.0,
                powers: [1, 0, 0],
                energy_power: 0,
            }],
            Normalization::UnitMass,
        );
        let c = project_p(&p1_sqrt_j, &q);
        assert!((c.b[0] - 1.0).abs() < 1e-8);
        assert!(c.a.abs() < 1e-8 && c.c.abs() < 1e-8);
        assert!(c.b[1].abs() < 1e-12 && c.b[2].abs() < 1e-12);

        // odd function: only odd momentum coefficients survive
        let odd = TestFunction::gaussian_monomial(0.5, [0, 1, 0], 0);
        let c = project_p(&odd, &q);
        assert!(c.a.abs() < 1e-10 && c.c.abs() < 1e-10);
        assert!(c.b[0].abs() < 1e-12 && c.b[2].abs() < 1e-12);
        assert!(c.b[1].abs() > 1e-3);
    }

    #[test]
    fn micro_part_reprojects_to_zero() {
        let q = quad();
        let f = TestFunction::gaussian(0.5);
        let micro = micro_part(&f, &q);
        let c = project_p(&micro, &q);
        assert!(c.a.abs() < 1e-8 && c.c.abs() < 1e-8 && c.b.norm() < 1e-10);
        // null-space input maps to the zero function
        let base = hydro_combination(0.3, Vec3::new(0.0, 0.2, 0.0), -0.1, Normalization::UnitMass);
        let m = micro_part(&base, &q);
        for &x in &[0.0, 0.7, 2.5] {
            assert!(m.eval(Vec3::new(x, -x / 2.0, 0.3)).abs() < 1e-8);
        }
    }

    #[test]
    fn pythagoras_for_projection() {
        let q = quad();
        let f = TestFunction::gaussian(0.6);
        let hydro = hydro_part(&f, &q);
        let micro = micro_part(&f, &q);
        let total = l2_norm_sq(&f, &q);
        let parts = l2_norm_sq(&hydro, &q) + l2_norm_sq(&micro, &q);
        assert!(
            (total - parts).abs() < 1e-7 * total,
            "{total} vs {parts}"
        );
    }

    #[test]
    fn conservation_constants_signs() {
        let c = conservation_constants();
        assert!(c.mu1 > 0.0, "mu1 = {}", c.mu1);
        assert!(c.mu3 < 0.0, "mu3 = {}", c.mu3);
        // algebraic identity mu1 * lam00 = lam00 - lam0^2
        let m = moments(Normalization::UnitMass);
        assert!((c.mu1 * m.lam00 - (m.lam00 - m.lam0 * m.lam0)).abs() < 1e-10);
        // frozen oracle values
        assert!((c.mu1 - 0.194981697328709056).abs() < 1e-7);
        assert!((c.mu2 + 0.0438648693256772209).abs() < 1e-7);
        assert!((c.mu3 + 0.816347080303020683).abs() < 1e-7);
        assert!((c.mu4 + 0.296697063733609656).abs() < 1e-7);
    }

    #[test]
    fn microscopic_identities_hold() {
        let q = quad();
        // a null-space element passes with zeros
        let base = hydro_combination(1.0, Vec3::new(0.1, 0.0, -0.2), 0.4, Normalization::UnitMass);
        let rep = microscopic_identity_check(&base, &q, 1e-7);
        assert!(rep.ok(), "{:?}", rep.violations);
        // a generic Gaussian passes within tolerance
        let f = TestFunction::gaussian_radial_poly(0.5, &[1.0, 0.2]);
        let rep = microscopic_identity_check(&f, &q, 1e-6);
        assert!(rep.ok(), "{:?}", rep.violations);
    }

    #[test]
    fn dirichlet_form_null_space_and_positivity() {
        let ctx = OpContext::new(
            KernelSpec::new(Family::Hard, 0.0, 0.5, 1.0, 0.2).unwrap(),
            QuadratureSpec {
                radial_order: 16,
                sphere_order: 8,
                planar_order: 12,
                truncation_r: 10.0,
                ..Default::default()
            },
            Normalization::UnitMass,
        );
        let q = quad();
        let sqrt_j = TestFunction::sqrt_juttner(Normalization::UnitMass);
        let scale = n_form(&ctx, &TestFunction::gaussian(0.5), 0).unwrap();
        let v = dirichlet_form(&ctx, &sqrt_j).unwrap();
        assert!(v.abs() < 1e-6 * scale, "L sqrtJ pairing = {v}");
        // strictly positive on a microscopic part
        let micro = micro_part(&TestFunction::gaussian(0.5), &q);
        let v = dirichlet_form(&ctx, &micro).unwrap();
        assert!(v > 1e-4 * scale, "dirichlet = {v}");
    }

    #[test]
    fn n_form_scales_quadratically() {
        let ctx = OpContext::new(
            KernelSpec::new(Family::Hard, 0.0, 0.5, 1.0, 0.2).unwrap(),
            QuadratureSpec {
                radial_order: 12,
                sphere_order: 6,
                planar_order: 8,
                truncation_r: 8.0,
                ..Default::default()
            },
            Normalization::UnitMass,
        );
        let f = TestFunction::gaussian(0.8);
        let one = n_form(&ctx, &f, 0).unwrap();
        let three = n_form(&ctx, &f.scaled(3.0), 0).unwrap();
        assert!((three - 9.0 * one).abs() < 1e-8 * three.abs());
    }
}

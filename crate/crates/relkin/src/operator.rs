//! Numerical evaluation of the collision operator and the trilinear collision
//! forms in the scattering-sphere, Carleman-surface, and transverse-plane
//! representations, plus the dyadic pieces and the collision-frequency weight.

use thiserror::Error;

use crate::equilibrium::Normalization;
use crate::geometry::{self, GeometryError};
use crate::kernels::{dyadic_chi, dyadic_chi_support, KernelError, KernelSpec};
use crate::minkowski::{com_transform, mass_shell_lift, FourMomentum, MinkowskiError, Vec3};
use crate::quadrature::{
    ball_nodes, compensated_sum, gl_interval, polar_window_nodes, QuadratureError, QuadratureSpec,
};
use crate::testfn::TestFunction;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Minkowski(#[from] MinkowskiError),
}

/// Evaluation context: kernel, quadrature orders and equilibrium
/// normalization shared by the operator evaluations.
#[derive(Clone, Copy, Debug)]
pub struct OpContext {
    pub kernel: KernelSpec,
    pub quad: QuadratureSpec,
    pub norm: Normalization,
}

impl OpContext {
    pub fn new(kernel: KernelSpec, quad: QuadratureSpec, norm: Normalization) -> Self {
        OpContext { kernel, quad, norm }
    }

    fn sqrt_j(&self, p0: f64) -> f64 {
        crate::equilibrium::sqrt_juttner_energy(p0, self.norm)
    }

    fn j(&self, p0: f64) -> f64 {
        crate::equilibrium::juttner_energy(p0, self.norm)
    }
}

/// Direction of zero scattering angle: the lab-frame expression of the
/// center-of-momentum direction of `p`. The scattering angle of the outcome
/// parametrized by `omega` is exactly the angle between `omega` and this
/// axis. Returns `None` for a degenerate pair (`g = 0`).
pub fn omega_axis(p: &FourMomentum, q: &FourMomentum) -> Option<Vec3> {
    let g = geometry::relative_g(p, q);
    if g < 1e-12 {
        return None;
    }
    let total = p.spatial() + q.spatial();
    let t2 = total.norm_sq();
    let com_spatial = if t2 < 1e-24 {
        p.spatial()
    } else {
        let s = g * g + 4.0;
        let xi = (p.energy() + q.energy()) / s.sqrt();
        let t_hat = total * (1.0 / t2.sqrt());
        p.spatial() + t_hat * ((xi - 1.0) * p.spatial().dot(t_hat))
            - t_hat * (t2.sqrt() / s.sqrt() * p.energy())
    };
    Some(com_spatial * (2.0 / g))
}

/// One scattering node: the pair, the direction, the outcome and the kernel
/// factors, handed to integrand closures.
pub struct ScatterNode {
    pub q: FourMomentum,
    pub p_new: FourMomentum,
    pub q_new: FourMomentum,
    pub g: f64,
    pub s: f64,
    pub moller: f64,
    pub cos_theta: f64,
    /// Pre-post relative momentum `g(p', p) = g sin(theta/2)`.
    pub g_bar: f64,
    /// Kernel value `Phi(g) sigma0(theta)` including cutoff and support.
    pub sigma: f64,
}

/// Angular window in theta for the inner sphere integral.
#[derive(Clone, Copy, Debug)]
struct ThetaWindow {
    lo: f64,
    hi: f64,
}

const THETA_FLOOR: f64 = 1e-9;

fn kernel_window(kernel: &KernelSpec) -> ThetaWindow {
    ThetaWindow {
        lo: kernel.epsilon.max(THETA_FLOOR),
        hi: std::f64::consts::FRAC_PI_2,
    }
}

// chi_k support [2^{-k-1}, 2^{-k+1}] in g-bar translated to theta via
// g-bar = g sin(theta/2)
fn dyadic_window(kernel: &KernelSpec, k: i32, g: f64) -> Option<ThetaWindow> {
    let (lo_bar, hi_bar) = dyadic_chi_support(k);
    let base = kernel_window(kernel);
    let to_theta = |gb: f64| -> Option<f64> {
        let half_sin = gb / g;
        if half_sin >= std::f64::consts::FRAC_1_SQRT_2 {
            None
        } else {
            Some(2.0 * half_sin.asin())
        }
    };
    let lo = to_theta(lo_bar)?.max(base.lo);
    let hi = to_theta(hi_bar).unwrap_or(base.hi).min(base.hi);
    if hi <= lo {
        None
    } else {
        Some(ThetaWindow { lo, hi })
    }
}

/// Signed sum plus one-sided magnitude, the latter feeding the gate scale.
#[derive(Clone, Copy, Debug, Default)]
pub struct SumWithMag {
    pub value: f64,
    pub magnitude: f64,
}

/// Inner integral `int dq int domega v_moller F(node)` at fixed `p`, with the
/// theta window chosen per pair (optionally a dyadic one), single quadrature
/// level. The per-chunk sums run in parallel with a fixed reduction order.
fn q_omega_sum<F>(
    ctx: &OpContext,
    p: &FourMomentum,
    quad: &QuadratureSpec,
    dyadic_k: Option<i32>,
    integrand: F,
) -> SumWithMag
where
    F: Fn(&ScatterNode) -> f64 + Sync,
{
    let q_nodes = ball_nodes(
        Vec3::ZERO,
        quad.truncation_r,
        quad.radial_order,
        quad.sphere_order,
    );
    let n_polar = quad.sphere_order.max(4);
    let n_az = 2 * n_polar;
    let chunk = 64usize;
    let n_chunks = q_nodes.len().div_ceil(chunk);
    use rayon::prelude::*;
    let partials: Vec<(f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let lo = ci * chunk;
            let hi = ((ci + 1) * chunk).min(q_nodes.len());
            let mut acc = 0.0;
            let mut mag = 0.0;
            for &(qv, wq) in &q_nodes[lo..hi] {
                let q = mass_shell_lift(qv).expect("finite node");
                let g = geometry::relative_g(p, &q);
                if g < 1e-12 {
                    continue;
                }
                let s = g * g + 4.0;
                let moller = g * s.sqrt() / (p.energy() * q.energy());
                let window = match dyadic_k {
                    None => Some(kernel_window(&ctx.kernel)),
                    Some(k) => dyadic_window(&ctx.kernel, k, g),
                };
                let Some(window) = window else { continue };
                let axis = omega_axis(p, &q).expect("g > 0");
                let omega_nodes =
                    polar_window_nodes(axis, window.lo, window.hi, n_polar, n_az, 2.0);
                for &(omega, ww) in &omega_nodes {
                    let cos_theta = omega.dot(axis).clamp(-1.0, 1.0);
                    let sigma = ctx.kernel.sigma_from_cos(g, cos_theta);
                    if sigma == 0.0 {
                        continue;
                    }
                    let (p_new, q_new) = geometry::post_collision(p, &q, omega);
                    let g_bar = g * ((1.0 - cos_theta) / 2.0).max(0.0).sqrt();
                    let node = ScatterNode {
                        q,
                        p_new,
                        q_new,
                        g,
                        s,
                        moller,
                        cos_theta,
                        g_bar,
                        sigma,
                    };
                    let term = wq * ww * moller * integrand(&node);
                    acc += term;
                    mag += term.abs();
                }
            }
            (acc, mag)
        })
        .collect();
    SumWithMag {
        value: compensated_sum(partials.iter().map(|p| p.0)),
        magnitude: compensated_sum(partials.iter().map(|p| p.1)),
    }
}

/// Self-consistency gate: evaluates at the context's orders and at reduced
/// orders; the refinement step must move the value by less than `tol`
/// relative to the one-sided magnitude.
fn gated<E>(quad: &QuadratureSpec, eval: E) -> Result<f64, OperatorError>
where
    E: Fn(&QuadratureSpec) -> SumWithMag,
{
    let coarse_spec = QuadratureSpec {
        radial_order: (quad.radial_order * 2 / 3).max(6),
        sphere_order: (quad.sphere_order * 2 / 3).max(4),
        planar_order: (quad.planar_order * 2 / 3).max(6),
        ..*quad
    };
    let fine = eval(quad);
    let coarse = eval(&coarse_spec);
    Ok(quad.gate(coarse.value, fine.value, fine.magnitude)?)
}

/// Collision operator `Q(F, G)(p) = int dq domega v_moller sigma
/// [F(p')G(q') - F(p)G(q)]`, evaluated with the gain and loss combined so the
/// grazing singularity cancels pointwise.
pub fn collision_q(
    ctx: &OpContext,
    f: &TestFunction,
    g_fn: &TestFunction,
    p: &FourMomentum,
) -> Result<f64, OperatorError> {
    let f_p = f.eval(p.spatial());
    gated(&ctx.quad, |quad| {
        q_omega_sum(ctx, p, quad, None, |node| {
            node.sigma
                * (f.eval(node.p_new.spatial()) * g_fn.eval(node.q_new.spatial())
                    - f_p * g_fn.eval(node.q.spatial()))
        })
    })
}

/// Bilinear linearized form `Gamma(f, h)(p) = int dq domega v sigma sqrt(J(q))
/// (f(q')h(p') - f(q)h(p))`.
pub fn gamma_bilinear(
    ctx: &OpContext,
    f: &TestFunction,
    h: &TestFunction,
    p: &FourMomentum,
) -> Result<f64, OperatorError> {
    let h_p = h.eval(p.spatial());
    gated(&ctx.quad, |quad| {
        gamma_bilinear_raw(ctx, f, h, p, h_p, quad)
    })
}

fn gamma_bilinear_raw(
    ctx: &OpContext,
    f: &TestFunction,
    h: &TestFunction,
    p: &FourMomentum,
    h_p: f64,
    quad: &QuadratureSpec,
) -> SumWithMag {
    q_omega_sum(ctx, p, quad, None, |node| {
        node.sigma
            * ctx.sqrt_j(node.q.energy())
            * (f.eval(node.q_new.spatial()) * h.eval(node.p_new.spatial())
                - f.eval(node.q.spatial()) * h_p)
    })
}

/// Outer momentum rule: a 1D radial reduction when every factor is
/// rotationally symmetric, the full ball rule otherwise.
fn outer_nodes(radial_ok: bool, quad: &QuadratureSpec) -> Vec<(Vec3, f64)> {
    if radial_ok {
        crate::quadrature::radial_panel_nodes(quad.radial_order, quad.truncation_r)
            .into_iter()
            .map(|(r, w)| {
                (
                    Vec3::new(0.0, 0.0, r),
                    4.0 * std::f64::consts::PI * r * r * w,
                )
            })
            .collect()
    } else {
        ball_nodes(
            Vec3::ZERO,
            quad.truncation_r,
            quad.radial_order,
            quad.sphere_order,
        )
    }
}

// outer accumulation of weighted inner pairs with a fixed order
fn outer_sum(values: Vec<(f64, f64)>) -> SumWithMag {
    SumWithMag {
        value: compensated_sum(values.iter().map(|v| v.0)),
        magnitude: compensated_sum(values.iter().map(|v| v.1)),
    }
}

/// Weighted trilinear form `<w^{2l} Gamma(f,h), eta>` in the scattering-sphere
/// representation.
pub fn trilinear_omega(
    ctx: &OpContext,
    f: &TestFunction,
    h: &TestFunction,
    eta: &TestFunction,
    l: i32,
    gate: bool,
) -> Result<f64, OperatorError> {
    let radial = f.is_radial() && h.is_radial() && eta.is_radial();
    let eval = |quad: &QuadratureSpec| {
        let nodes = outer_nodes(radial, quad);
        outer_sum(
            nodes
                .iter()
                .map(|&(pv, wp)| {
                    let p = mass_shell_lift(pv).expect("finite");
                    let eta_p = eta.eval(pv);
                    if eta_p == 0.0 {
                        return (0.0, 0.0);
                    }
                    let weight = wp * p.energy().powi(2 * l) * eta_p;
                    let inner = gamma_bilinear_raw(ctx, f, h, &p, h.eval(pv), quad);
                    (weight * inner.value, weight.abs() * inner.magnitude)
                })
                .collect(),
        )
    };
    if gate {
        gated(&ctx.quad, eval)
    } else {
        Ok(eval(&ctx.quad).value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DyadicSign {
    Gain,
    Loss,
}

/// Dyadic piece `T^{k,l}_{+/-}` of the trilinear form, with the kernel
/// restricted by `chi_k(g-bar)`.
pub fn dyadic_t(
    ctx: &OpContext,
    k: i32,
    sign: DyadicSign,
    f: &TestFunction,
    h: &TestFunction,
    eta: &TestFunction,
    l: i32,
) -> Result<f64, OperatorError> {
    let radial = f.is_radial() && h.is_radial() && eta.is_radial();
    let eval = |quad: &QuadratureSpec| {
        let nodes = outer_nodes(radial, quad);
        outer_sum(
            nodes
                .iter()
                .map(|&(pv, wp)| {
                    let p = mass_shell_lift(pv).expect("finite");
                    let eta_p = eta.eval(pv);
                    if eta_p == 0.0 {
                        return (0.0, 0.0);
                    }
                    let h_p = h.eval(pv);
                    let weight = wp * p.energy().powi(2 * l) * eta_p;
                    let inner = q_omega_sum(ctx, &p, quad, Some(k), |node| {
                        let chi = dyadic_chi(k, node.g_bar);
                        if chi == 0.0 {
                            return 0.0;
                        }
                        let val = match sign {
                            DyadicSign::Gain => {
                                f.eval(node.q_new.spatial()) * h.eval(node.p_new.spatial())
                            }
                            DyadicSign::Loss => f.eval(node.q.spatial()) * h_p,
                        };
                        node.sigma * chi * ctx.sqrt_j(node.q.energy()) * val
                    });
                    (weight * inner.value, weight.abs() * inner.magnitude)
                })
                .collect(),
        )
    };
    Ok(eval(&ctx.quad).value)
}

/// Carleman surface integral `int_{E} dpi_q integrand(q) / q0` over the
/// 2-dimensional hypersurface of momenta `q` compatible with the transfer
/// `p' - p`.
///
/// The delta pins the polar cosine about the `p - p'` axis to
/// `cos(phi*) = (2 x (p0 - p'0) - gbar^2) / (2 r |p - p'|)` with
/// `x = sqrt(1 + r^2)`; the admissible region reduces to a single interval
/// `x >= x_min` intersected with the energy step, and the `x` substitution
/// absorbs the `r/sqrt(1+r^2)` factor of the measure.
pub fn carleman_surface_integral<F>(
    p: &FourMomentum,
    p_new: &FourMomentum,
    quad: &QuadratureSpec,
    integrand: F,
) -> Result<f64, OperatorError>
where
    F: Fn(&FourMomentum) -> f64,
{
    let u = p.spatial() - p_new.spatial();
    let u_norm = u.norm();
    if u_norm < 1e-12 {
        return Err(QuadratureError::EmptySurface.into());
    }
    let g_bar = geometry::relative_g(p, p_new);
    let delta = p.energy() - p_new.energy();
    // |cos(phi*)| <= 1 on x >= x_plus
    let x_plus = 0.5
        * (-delta + (delta * delta + g_bar * g_bar + 4.0 * u_norm * u_norm / (g_bar * g_bar)).sqrt());
    let x_min = x_plus.max(1.0).max(p_new.energy() - p.energy());
    let x_max = (1.0 + quad.truncation_r * quad.truncation_r).sqrt();
    if x_min >= x_max {
        return Err(QuadratureError::EmptySurface.into());
    }
    let axis = u * (1.0 / u_norm);
    let (e1, e2) = crate::quadrature::orthonormal_frame(axis);
    let n_az = 2 * quad.sphere_order.max(4);
    let waz = 2.0 * std::f64::consts::PI / n_az as f64;
    // sqrt-type behavior at the lower endpoint: substitute x = x_min + span t^2
    let span = x_max - x_min;
    let t_rule = gl_interval(quad.radial_order.max(8), 0.0, 1.0);
    let mut acc = 0.0;
    for &(t, wt) in &t_rule {
        let x = x_min + span * t * t;
        let wx = wt * 2.0 * span * t;
        let r = (x * x - 1.0).max(0.0).sqrt();
        if r < 1e-14 {
            continue;
        }
        let cos_phi = ((2.0 * x * delta - g_bar * g_bar) / (2.0 * r * u_norm)).clamp(-1.0, 1.0);
        let sin_phi = (1.0 - cos_phi * cos_phi).max(0.0).sqrt();
        for az in 0..n_az {
            let angle = waz * (az as f64 + 0.5);
            let dir = axis * cos_phi + (e1 * angle.cos() + e2 * angle.sin()) * sin_phi;
            let q = mass_shell_lift(dir * r).expect("finite");
            acc += wx * waz * integrand(&q);
        }
    }
    Ok(acc * g_bar / u_norm)
}

/// The cancellation-bearing trilinear term
/// `(1/2) int dp eta(p) int dq domega v sigma (f(p') - f(p)) sqrt(J(q')J(q))`
/// in the scattering-sphere representation.
pub fn omega_n_term(
    ctx: &OpContext,
    f: &TestFunction,
    eta: &TestFunction,
    gate: bool,
) -> Result<f64, OperatorError> {
    let radial = f.is_radial() && eta.is_radial();
    let eval = |quad: &QuadratureSpec| {
        let nodes = outer_nodes(radial, quad);
        outer_sum(
            nodes
                .iter()
                .map(|&(pv, wp)| {
                    let p = mass_shell_lift(pv).expect("finite");
                    let eta_p = eta.eval(pv);
                    if eta_p == 0.0 {
                        return (0.0, 0.0);
                    }
                    let f_p = f.eval(pv);
                    let inner = q_omega_sum(ctx, &p, quad, None, |node| {
                        node.sigma
                            * (f.eval(node.p_new.spatial()) - f_p)
                            * ctx.sqrt_j(node.q.energy())
                            * ctx.sqrt_j(node.q_new.energy())
                    });
                    let weight = 0.5 * wp * eta_p;
                    (weight * inner.value, weight.abs() * inner.magnitude)
                })
                .collect(),
        )
    };
    if gate {
        gated(&ctx.quad, eval)
    } else {
        Ok(eval(&ctx.quad).value)
    }
}

/// The same term through the Carleman representation:
/// `(1/8) int dp/p0 eta int dp'/p'0 (f(p')-f(p)) (sqrt(J(p))/sqrt(J(p')))
/// (1/gbar) int_E dpi_q s sigma J(q) / q0`.
///
/// The kernel factors stay inside the surface integral: `s`, `g` and the
/// scattering angle all depend on the running `q`.
pub fn carleman_n_term(
    ctx: &OpContext,
    f: &TestFunction,
    eta: &TestFunction,
) -> Result<f64, OperatorError> {
    let radial = f.is_radial() && eta.is_radial();
    let eval = |quad: &QuadratureSpec| {
        let p_nodes = outer_nodes(radial, quad);
        let inner_nodes = ball_nodes(
            Vec3::ZERO,
            quad.truncation_r,
            quad.radial_order,
            quad.sphere_order,
        );
        outer_sum(
            p_nodes
                .iter()
                .map(|&(pv, wp)| {
                    let p = mass_shell_lift(pv).expect("finite");
                    let eta_p = eta.eval(pv);
                    if eta_p == 0.0 {
                        return (0.0, 0.0);
                    }
                    let f_p = f.eval(pv);
                    let chunk = 128usize;
                    use rayon::prelude::*;
                    let partials: Vec<(f64, f64)> = (0..inner_nodes.len().div_ceil(chunk))
                        .into_par_iter()
                        .map(|ci| {
                            let lo = ci * chunk;
                            let hi = ((ci + 1) * chunk).min(inner_nodes.len());
                            let mut acc = 0.0;
                            let mut mag = 0.0;
                            for &(pnv, wpn) in &inner_nodes[lo..hi] {
                                let p_new = mass_shell_lift(pnv).expect("finite");
                                let df = f.eval(pnv) - f_p;
                                if df == 0.0 {
                                    continue;
                                }
                                let g_bar = geometry::relative_g(&p, &p_new);
                                if g_bar < 1e-10 {
                                    continue;
                                }
                                let ratio = (0.5 * (p_new.energy() - p.energy())).exp();
                                let surface = carleman_surface_integral(&p, &p_new, quad, |q| {
                                    let g = geometry::relative_g(&p, q);
                                    if g < 1e-12 {
                                        return 0.0;
                                    }
                                    let s = g * g + 4.0;
                                    let cos_theta = 1.0 - 2.0 * g_bar * g_bar / (g * g);
                                    let sigma = ctx.kernel.sigma_from_cos(g, cos_theta);
                                    if sigma == 0.0 {
                                        return 0.0;
                                    }
                                    s * sigma * ctx.j(q.energy()) / q.energy()
                                })
                                .unwrap_or(0.0);
                                let term = wpn / p_new.energy() * df * ratio / g_bar * surface;
                                acc += term;
                                mag += term.abs();
                            }
                            (acc, mag)
                        })
                        .collect();
                    let weight = 0.125 * wp / p.energy() * eta_p;
                    (
                        weight * compensated_sum(partials.iter().map(|v| v.0)),
                        weight.abs() * compensated_sum(partials.iter().map(|v| v.1)),
                    )
                })
                .collect(),
        )
    };
    Ok(eval(&ctx.quad).value)
}

/// Dual representation of `<w^{2l} Gamma(f,h), eta>`: the transverse-plane
/// form built on the center-of-momentum transformation of each `(p', q)`
/// pair. For each pair, the radial plane coordinate is `w = sqrt(|z|^2+1)-1`
/// restricted to the kernel support, graded toward the grazing end.
pub fn trilinear_dual(
    ctx: &OpContext,
    f: &TestFunction,
    h: &TestFunction,
    eta: &TestFunction,
    l: i32,
    gate: bool,
) -> Result<f64, OperatorError> {
    let radial = f.is_radial() && h.is_radial() && eta.is_radial();
    let eval = |quad: &QuadratureSpec| {
        let outer = outer_nodes(radial, quad);
        let q_nodes = ball_nodes(
            Vec3::ZERO,
            quad.truncation_r,
            quad.radial_order,
            quad.sphere_order,
        );
        outer_sum(
            outer
                .iter()
                .map(|&(pnv, wpn)| {
                    let p_new = mass_shell_lift(pnv).expect("finite");
                    let eta_pn = eta.eval(pnv);
                    if eta_pn == 0.0 {
                        return (0.0, 0.0);
                    }
                    let h_pn = h.eval(pnv);
                    let chunk = 64usize;
                    use rayon::prelude::*;
                    let partials: Vec<(f64, f64)> = (0..q_nodes.len().div_ceil(chunk))
                        .into_par_iter()
                        .map(|ci| {
                            let lo = ci * chunk;
                            let hi = ((ci + 1) * chunk).min(q_nodes.len());
                            let mut acc = 0.0;
                            let mut mag = 0.0;
                            for &(qv, wq) in &q_nodes[lo..hi] {
                                let q = mass_shell_lift(qv).expect("finite");
                                let inner =
                                    dual_plane_inner(ctx, quad, &p_new, &q, f, h, h_pn);
                                acc += wq * inner.value / q.energy();
                                mag += wq * inner.magnitude / q.energy();
                            }
                            (acc, mag)
                        })
                        .collect();
                    let weight =
                        0.5 * wpn * p_new.energy().powi(2 * l) * eta_pn / p_new.energy();
                    (
                        weight * compensated_sum(partials.iter().map(|v| v.0)),
                        weight.abs() * compensated_sum(partials.iter().map(|v| v.1)),
                    )
                })
                .collect(),
        )
    };
    if gate {
        gated(&ctx.quad, eval)
    } else {
        Ok(eval(&ctx.quad).value)
    }
}

// the z-plane integral of the dual bracket at fixed (p', q), including the
// sqrt(s~)/g~ prefactor and sqrt(J(q)) f(q)
fn dual_plane_inner(
    ctx: &OpContext,
    quad: &QuadratureSpec,
    p_new: &FourMomentum,
    q: &FourMomentum,
    f: &TestFunction,
    h: &TestFunction,
    h_pn: f64,
) -> SumWithMag {
    let zero = SumWithMag::default();
    let f_q = f.eval(q.spatial());
    if f_q == 0.0 {
        return zero;
    }
    let g_tilde = geometry::relative_g(p_new, q);
    if g_tilde < 1e-9 {
        return zero;
    }
    let lambda = match com_transform(p_new, q) {
        Ok(l) => l,
        // colinear pairs are a measure-zero set; skip the node
        Err(_) => return zero,
    };
    let s_tilde = g_tilde * g_tilde + 4.0;
    let rs_tilde = s_tilde.sqrt();
    let row1 = lambda.row(1);
    let lambda1 = Vec3::new(row1[1], row1[2], row1[3]);
    let cross = p_new.spatial().cross(q.spatial());
    let cross_norm = cross.norm();
    let normal = cross * (1.0 / cross_norm);
    let l_val = (p_new.energy() + q.energy()) / 4.0;
    let j_val = cross_norm / (2.0 * g_tilde);
    let base = p_new.spatial() + q.spatial();

    // kernel support in the plane variable w = sqrt(|z|^2+1) - 1:
    // cos(theta_lam) in [cos(window.hi)=0, cos(window.lo)]
    let window = kernel_window(&ctx.kernel);
    let cos_lo = window.lo.cos(); // upper cosine bound (theta >= lo)
    let w_lo = (2.0 * g_tilde * g_tilde / s_tilde) * (1.0 - cos_lo) / (1.0 + cos_lo);
    let w_hi = 2.0 * g_tilde * g_tilde / s_tilde;
    if w_hi <= w_lo {
        return zero;
    }
    let phi = |g: f64| ctx.kernel.phi(g).unwrap_or(0.0);
    let phi_tilde = phi(g_tilde);
    let n_az = 2 * quad.planar_order.max(4);
    let waz = 2.0 * std::f64::consts::PI / n_az as f64;
    // grade w = w_lo + (w_hi - w_lo) v^grade toward the grazing end
    let grade = 4.0;
    let rule = gl_interval(quad.planar_order.max(6), 0.0, 1.0);
    let mut acc = 0.0;
    let mut mag = 0.0;
    for &(v, wv) in &rule {
        let w = w_lo + (w_hi - w_lo) * v.powf(grade);
        let dw = (w_hi - w_lo) * grade * v.powf(grade - 1.0) * wv;
        let g_l_sq = 0.5 * s_tilde * w;
        let g_lam_sq = g_tilde * g_tilde + g_l_sq;
        let s_lam = g_lam_sq + 4.0;
        let cos_theta_lam = (2.0 * g_tilde * g_tilde / g_lam_sq - 1.0).clamp(-1.0, 1.0);
        let sigma = ctx.kernel.sigma_from_cos(g_lam_sq.sqrt(), cos_theta_lam);
        if sigma == 0.0 {
            continue;
        }
        let compensator = s_tilde * phi_tilde * g_tilde.powi(4)
            / (s_lam * phi(g_lam_sq.sqrt()) * g_lam_sq * g_lam_sq);
        let rho = ((1.0 + w) * (1.0 + w) - 1.0).max(0.0).sqrt();
        let a_radial = base * (0.5 * w);
        for az in 0..n_az {
            let angle = waz * (az as f64 + 0.5);
            let z1 = rho * angle.cos();
            let z2 = rho * angle.sin();
            let a = a_radial + lambda1 * (0.5 * rs_tilde * z1) + normal * (0.5 * rs_tilde * z2);
            let a0 = 2.0 * l_val * w - 2.0 * j_val * z1;
            let shifted = p_new.spatial() + a;
            let bracket = h.eval(shifted) * (-0.5 * a0).exp() - compensator * h_pn;
            let term = dw * waz * s_lam * sigma * bracket;
            acc += term;
            mag += term.abs();
        }
    }
    let scale = rs_tilde / g_tilde * ctx.sqrt_j(q.energy()) * f_q;
    SumWithMag {
        value: acc * scale,
        magnitude: mag * scale.abs(),
    }
}

/// Both sides of the center-of-momentum reduction at one pair `(p, q)`:
/// the lifted form (delta functions evaluated analytically in the transformed
/// frame, outcomes mapped back) and the direct half-sphere form
/// `(1/2) g sqrt(s) int domega sigma G`.
pub fn com_reduction_check<G>(
    ctx: &OpContext,
    p: &FourMomentum,
    q: &FourMomentum,
    g_fn: G,
) -> Result<(f64, f64), OperatorError>
where
    G: Fn(&FourMomentum, &FourMomentum, &FourMomentum, &FourMomentum) -> f64,
{
    let inv = geometry::invariants(p, q)?;
    let lambda = com_transform(p, q)?;
    let back = lambda.inverse();
    let rs = inv.s.sqrt();
    let window = kernel_window(&ctx.kernel);
    let n_polar = (2 * ctx.quad.sphere_order).max(16);
    let n_az = 2 * n_polar;

    // lifted route: delta^4 and the mass-shell deltas collapse to the sphere
    // |k| = g in the transformed frame; the kernel concentrates about the
    // transformed image of p, so the rule is graded about that axis
    let p_hat4 = lambda.apply(p.as_four());
    let axis_hat = Vec3::new(p_hat4[1], p_hat4[2], p_hat4[3]).normalize();
    let mut lifted = 0.0;
    for &(dir, w) in &polar_window_nodes(axis_hat, window.lo, window.hi, n_polar, n_az, 2.0) {
        let k = dir * inv.g;
        let p_hat = [0.5 * rs, 0.5 * k[0], 0.5 * k[1], 0.5 * k[2]];
        let q_hat = [0.5 * rs, -0.5 * k[0], -0.5 * k[1], -0.5 * k[2]];
        let p_lab = back.apply(p_hat);
        let q_lab = back.apply(q_hat);
        let p_new = mass_shell_lift(Vec3::new(p_lab[1], p_lab[2], p_lab[3]))?;
        let q_new = mass_shell_lift(Vec3::new(q_lab[1], q_lab[2], q_lab[3]))?;
        debug_assert!((p_new.energy() - p_lab[0]).abs() < 1e-9);
        let cos_theta = match geometry::scattering_cos(p, q, &p_new, &q_new) {
            Ok(c) => c,
            Err(_) => continue,
        };
        let sigma = ctx.kernel.sigma_from_cos(inv.g, cos_theta);
        lifted += w * sigma * g_fn(p, q, &p_new, &q_new);
    }
    lifted *= inv.g / (2.0 * rs) * inv.s;

    // direct route through the closed-form outcome map
    let axis = omega_axis(p, q).ok_or(GeometryError::UndefinedAngle { g: inv.g })?;
    let mut direct = 0.0;
    for &(omega, w) in &polar_window_nodes(axis, window.lo, window.hi, n_polar, n_az, 2.0) {
        let cos_theta = omega.dot(axis).clamp(-1.0, 1.0);
        let sigma = ctx.kernel.sigma_from_cos(inv.g, cos_theta);
        if sigma == 0.0 {
            continue;
        }
        let (p_new, q_new) = geometry::post_collision(p, q, omega);
        direct += w * sigma * g_fn(p, q, &p_new, &q_new);
    }
    direct *= 0.5 * inv.g * rs;

    Ok((lifted, direct))
}

/// Collision-frequency weight
/// `zeta(p) = int dq domega v sigma (sqrt(J(q)) - sqrt(J(q'))) sqrt(J(q))`;
/// the difference supplies the grazing cancellation so no cutoff is needed.
pub fn zeta_weight(ctx: &OpContext, p: &FourMomentum) -> Result<f64, OperatorError> {
    gated(&ctx.quad, |quad| {
        q_omega_sum(ctx, p, quad, None, |node| {
            let sj = ctx.sqrt_j(node.q.energy());
            node.sigma * (sj - ctx.sqrt_j(node.q_new.energy())) * sj
        })
    })
}

// single-pass norm part: the quadratic-difference term and the
// collision-frequency weight share one (p, q, omega) sweep
pub(crate) fn n_form_impl(
    ctx: &OpContext,
    f: &TestFunction,
    l: i32,
) -> Result<f64, OperatorError> {
    let radial = f.is_radial();
    gated(&ctx.quad, |quad| {
        let nodes = outer_nodes(radial, quad);
        outer_sum(
            nodes
                .iter()
                .map(|&(pv, wp)| {
                    let p = mass_shell_lift(pv).expect("finite");
                    let f_p = f.eval(pv);
                    let weight = wp * p.energy().powi(2 * l);
                    let inner = q_omega_sum(ctx, &p, quad, None, |node| {
                        let sj = ctx.sqrt_j(node.q.energy());
                        let sj_new = ctx.sqrt_j(node.q_new.energy());
                        let df = f.eval(node.p_new.spatial()) - f_p;
                        node.sigma
                            * (0.5 * df * df * sj * sj_new + f_p * f_p * (sj - sj_new) * sj)
                    });
                    (weight * inner.value, weight.abs() * inner.magnitude)
                })
                .collect(),
        )
    })
}

// <Gamma(f, sqrt(J)), f>: the compact part of the Dirichlet form
pub(crate) fn compact_pairing(ctx: &OpContext, f: &TestFunction) -> Result<f64, OperatorError> {
    let radial = f.is_radial();
    gated(&ctx.quad, |quad| {
        let nodes = outer_nodes(radial, quad);
        outer_sum(
            nodes
                .iter()
                .map(|&(pv, wp)| {
                    let p = mass_shell_lift(pv).expect("finite");
                    let f_p = f.eval(pv);
                    if f_p == 0.0 {
                        return (0.0, 0.0);
                    }
                    let sj_p = ctx.sqrt_j(p.energy());
                    let inner = q_omega_sum(ctx, &p, quad, None, |node| {
                        node.sigma
                            * ctx.sqrt_j(node.q.energy())
                            * (f.eval(node.q_new.spatial()) * ctx.sqrt_j(node.p_new.energy())
                                - f.eval(node.q.spatial()) * sj_p)
                    });
                    (wp * f_p * inner.value, (wp * f_p).abs() * inner.magnitude)
                })
                .collect(),
        )
    })
}

/// Moments `int Q(F,F) psi dp` for `psi in {1, p1, p2, p3, p0}` plus the
/// entropy production `int Q(F,F)(1 + log F) dp`, in one outer pass.
/// `F` must be strictly positive for the entropy integrand.
pub struct CollisionMoments {
    pub mass: f64,
    pub momentum: [f64; 3],
    pub energy: f64,
    pub entropy_production: f64,
    /// one-sided mass of the integrand, the characteristic scale for
    /// conservation tolerances
    pub gain_scale: f64,
}

pub fn collision_moments(
    ctx: &OpContext,
    f: &TestFunction,
) -> Result<CollisionMoments, OperatorError> {
    let radial = f.is_radial();
    let nodes = outer_nodes(radial, &ctx.quad);
    // for radial F the p1/p2 moments vanish by the reduction itself; evaluate
    // them on the full ball only when F is not radial
    let mut mass = 0.0;
    let mut momentum = [0.0; 3];
    let mut energy = 0.0;
    let mut entropy = 0.0;
    let mut gain_scale = 0.0;
    for &(pv, wp) in &nodes {
        let p = mass_shell_lift(pv).expect("finite");
        let f_p = f.eval(pv);
        let inner = q_omega_sum(ctx, &p, &ctx.quad, None, |node| {
            let gain = f.eval(node.p_new.spatial()) * f.eval(node.q_new.spatial());
            let loss = f_p * f.eval(node.q.spatial());
            node.sigma * (gain - loss)
        });
        let q_val = inner.value;
        mass += wp * q_val;
        for i in 0..3 {
            momentum[i] += wp * q_val * pv[i];
        }
        energy += wp * q_val * p.energy();
        entropy += wp * q_val * (1.0 + f_p.max(1e-300).ln());
        gain_scale += wp * inner.magnitude;
    }
    Ok(CollisionMoments {
        mass,
        momentum,
        energy,
        entropy_production: entropy,
        gain_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Family;

    fn small_quad() -> QuadratureSpec {
        QuadratureSpec {
            radial_order: 16,
            sphere_order: 8,
            planar_order: 12,
            truncation_r: 9.0,
            ..Default::default()
        }
    }

    fn ctx(epsilon: f64) -> OpContext {
        OpContext::new(
            KernelSpec::new(Family::Hard, 0.0, 0.5, 1.0, epsilon).unwrap(),
            small_quad(),
            Normalization::PaperLiteral,
        )
    }

    #[test]
    fn omega_axis_matches_scattering_angle() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..500 {
            let p = FourMomentum::new(
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
            )
            .unwrap();
            let q = FourMomentum::new(
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
            )
            .unwrap();
            let g = geometry::relative_g(&p, &q);
            if g < 1e-4 {
                continue;
            }
            let axis = omega_axis(&p, &q).unwrap();
            assert!((axis.norm() - 1.0).abs() < 1e-10, "axis norm {}", axis.norm());
            for _ in 0..5 {
                let dir = Vec3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                if dir.norm() < 1e-3 {
                    continue;
                }
                let omega = dir.normalize();
                let (pn, qn) = geometry::post_collision(&p, &q, omega);
                let cos_theta = geometry::scattering_cos(&p, &q, &pn, &qn).unwrap();
                assert!(
                    (cos_theta - omega.dot(axis)).abs() < 1e-9,
                    "cos {} vs {}",
                    cos_theta,
                    omega.dot(axis)
                );
                // g-bar = g sin(theta/2)
                let g_bar = geometry::relative_g(&pn, &p);
                let half = ((1.0 - cos_theta) / 2.0).max(0.0).sqrt();
                assert!((g_bar - g * half).abs() < 1e-9);
            }
            // omega = axis reproduces p' = p
            let (pn, _) = geometry::post_collision(&p, &q, axis);
            assert!((pn.spatial() - p.spatial()).norm() < 1e-9);
        }
    }

    #[test]
    fn equilibrium_annihilates_collision_operator() {
        // Q(J, J) = 0 pointwise since J(p')J(q') = J(p)J(q) under energy
        // conservation; the quadrature sees the zero integrand exactly
        let ctx = ctx(0.1);
        let jf = TestFunction::juttner_density(Normalization::PaperLiteral);
        let p = FourMomentum::new(0.7, -0.3, 0.4).unwrap();
        let v = collision_q(&ctx, &jf, &jf, &p).unwrap();
        assert!(v.abs() < 1e-12, "Q(J,J) = {v}");
    }

    #[test]
    fn gamma_of_sqrt_j_vanishes() {
        let ctx = ctx(0.1);
        let sqrt_j = TestFunction::sqrt_juttner(ctx.norm);
        let p = FourMomentum::new(0.5, 0.2, -0.6).unwrap();
        let v = gamma_bilinear(&ctx, &sqrt_j, &sqrt_j, &p).unwrap();
        assert!(v.abs() < 1e-12, "Gamma(sqrtJ, sqrtJ) = {v}");
    }

    #[test]
    fn gamma_is_linear_in_second_argument() {
        let ctx = ctx(0.15);
        let f = TestFunction::gaussian(0.8);
        let h1 = TestFunction::gaussian(0.5);
        let h2 = TestFunction::gaussian_radial_poly(0.6, &[0.3, 0.4]);
        let p = FourMomentum::new(0.4, 0.0, 0.3).unwrap();
        let a = 1.3;
        let b = -0.7;
        let combo = h1.scaled(a).plus(&h2.scaled(b));
        let lhs = gamma_bilinear(&ctx, &f, &combo, &p).unwrap();
        let rhs = a * gamma_bilinear(&ctx, &f, &h1, &p).unwrap()
            + b * gamma_bilinear(&ctx, &f, &h2, &p).unwrap();
        assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
    }

    #[test]
    fn gamma_matches_collision_q_route() {
        // Gamma(f,h) = J^{-1/2}(p) Q(sqrtJ f, sqrtJ h)(p)
        let ctx = ctx(0.2);
        let f = TestFunction::gaussian(0.9);
        let h = TestFunction::gaussian(0.6);
        let p = FourMomentum::new(0.8, -0.1, 0.2).unwrap();
        let sf = f.times_sqrt_juttner(ctx.norm);
        let sh = h.times_sqrt_juttner(ctx.norm);
        let gamma = gamma_bilinear(&ctx, &f, &h, &p).unwrap();
        let q = collision_q(&ctx, &sh, &sf, &p).unwrap();
        let j_half = crate::equilibrium::sqrt_juttner_energy(p.energy(), ctx.norm);
        // note the argument order: Q(F,G) pairs F with p' and G with q',
        // Gamma pairs h with p' and f with q'
        assert!(
            (gamma - q / j_half).abs() < 5e-4 * gamma.abs().max(1e-6),
            "gamma {gamma} vs {}",
            q / j_half
        );
    }

    #[test]
    fn trilinear_zero_eta() {
        let ctx = ctx(0.2);
        let f = TestFunction::gaussian(1.0);
        let h = TestFunction::gaussian(0.7);
        let v = trilinear_omega(&ctx, &f, &h, &TestFunction::zero(), 0, false).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn carleman_surface_basic_properties() {
        let quad = small_quad();
        let p = FourMomentum::new(0.9, 0.2, -0.1).unwrap();
        let pn = FourMomentum::new(0.3, -0.4, 0.5).unwrap();
        // zero integrand integrates to zero
        let z = carleman_surface_integral(&p, &pn, &quad, |_| 0.0).unwrap();
        assert_eq!(z, 0.0);
        // every surface node satisfies the defining constraint
        carleman_surface_integral(&p, &pn, &quad, |q| {
            let lhs = crate::minkowski::minkowski_dot(
                [
                    pn.energy() - p.energy(),
                    pn.spatial()[0] - p.spatial()[0],
                    pn.spatial()[1] - p.spatial()[1],
                    pn.spatial()[2] - p.spatial()[2],
                ],
                [
                    p.energy() + q.energy(),
                    p.spatial()[0] + q.spatial()[0],
                    p.spatial()[1] + q.spatial()[1],
                    p.spatial()[2] + q.spatial()[2],
                ],
            );
            assert!(lhs.abs() < 1e-9, "surface constraint violated: {lhs}");
            // the step function region
            assert!(p.energy() + q.energy() - pn.energy() >= -1e-12);
            0.0
        })
        .unwrap();
        // J-weighted integrand is finite and positive
        let v = carleman_surface_integral(&p, &pn, &quad, |q| {
            crate::equilibrium::juttner_energy(q.energy(), Normalization::PaperLiteral)
                / q.energy()
        })
        .unwrap();
        assert!(v.is_finite() && v > 0.0);
        // degenerate pair rejected
        assert!(carleman_surface_integral(&p, &p, &quad, |_| 1.0).is_err());
    }

    #[test]
    fn com_reduction_constant_case() {
        let ctx = ctx(0.1);
        let p = FourMomentum::new(1.0, 0.0, 0.2).unwrap();
        let q = FourMomentum::new(-0.4, 0.8, 0.0).unwrap();
        let (lifted, direct) = com_reduction_check(&ctx, &p, &q, |_, _, _, _| 1.0).unwrap();
        assert!(
            ((lifted - direct) / direct).abs() < 1e-9,
            "lifted {lifted} direct {direct}"
        );
        // odd-in-omega integrand vanishes on both sides
        let axis = (p.spatial() + q.spatial()).normalize();
        let (l2, d2) = com_reduction_check(&ctx, &p, &q, |_, _, pn, _| {
            (pn.spatial() - (p.spatial() + q.spatial()) * 0.5).dot(axis)
        })
        .unwrap();
        let scale = direct.abs();
        assert!(l2.abs() < 1e-9 * scale && d2.abs() < 1e-9 * scale);
    }

    #[test]
    fn zeta_weight_positive_and_stable() {
        let ctx = ctx(0.0); // non-cutoff: the difference supplies cancellation
        let p = FourMomentum::new(1.2, 0.0, 0.0).unwrap();
        let z = zeta_weight(&ctx, &p).unwrap();
        assert!(z > 0.0, "zeta = {z}");
    }
}

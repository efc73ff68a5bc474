//! Quadrature rules shared by the collision-operator evaluations: cached
//! Gauss-Legendre nodes, sphere and ball product rules, the graded scattering
//! sphere, and the self-consistency gate.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minkowski::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature did not converge: values {coarse} vs {fine} differ beyond tol {tol}")]
    NotConverged { coarse: f64, fine: f64, tol: f64 },
    #[error("admissible surface region is empty")]
    EmptySurface,
    #[error("dyadic window is empty")]
    EmptyWindow,
    #[error("grid spacing {h} too coarse for scale index {j_max} (need h <= {limit})")]
    GridTooCoarse { h: f64, j_max: u32, limit: f64 },
}

/// Orders, truncation radius, Monte-Carlo budget and tolerance for one run.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub radial_order: usize,
    pub sphere_order: usize,
    pub planar_order: usize,
    pub truncation_r: f64,
    pub mc_samples: u64,
    pub seed: u64,
    pub tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            radial_order: 32,
            sphere_order: 12,
            planar_order: 24,
            truncation_r: 12.0,
            mc_samples: 200_000,
            seed: 42,
            tol: 1e-6,
        }
    }
}

impl QuadratureSpec {
    /// Same rule with doubled radial and sphere orders, for the
    /// self-consistency gate.
    pub fn doubled(&self) -> Self {
        QuadratureSpec {
            radial_order: self.radial_order * 2,
            sphere_order: self.sphere_order * 2,
            planar_order: self.planar_order * 2,
            ..*self
        }
    }

    /// Checks the refinement gate: the step from `coarse` to `fine` must stay
    /// within `tol` relative to the characteristic `magnitude` of the
    /// integrand (one-sided mass), so exact cancellations gate cleanly.
    pub fn gate(&self, coarse: f64, fine: f64, magnitude: f64) -> Result<f64, QuadratureError> {
        let bound = self.tol * magnitude.abs().max(fine.abs()).max(1e-300);
        if (coarse - fine).abs() <= bound {
            Ok(fine)
        } else {
            Err(QuadratureError::NotConverged {
                coarse,
                fine,
                tol: self.tol,
            })
        }
    }
}

fn legendre_cache() -> &'static Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, cached by order.
pub fn gauss_legendre(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    assert!(n >= 1);
    if let Some(hit) = legendre_cache().lock().unwrap().get(&n) {
        return hit.clone();
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_eval(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_eval(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    let arc = Arc::new((nodes, weights));
    legendre_cache().lock().unwrap().insert(n, arc.clone());
    arc
}

fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Nodes and weights for `int_a^b f(x) dx`.
pub fn gl_interval(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule.0
        .iter()
        .zip(rule.1.iter())
        .map(|(&x, &w)| (mid + half * x, half * w))
        .collect()
}

/// Neumaier compensated summation with a fixed traversal order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Deterministic parallel reduction: maps chunks in parallel, sums each chunk
/// sequentially, then combines chunk results in index order. The result does
/// not depend on the worker count.
pub fn par_sum<F>(n: usize, chunk: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    use rayon::prelude::*;
    let chunks: Vec<(usize, usize)> = (0..n)
        .step_by(chunk.max(1))
        .map(|start| (start, (start + chunk.max(1)).min(n)))
        .collect();
    let partials: Vec<f64> = chunks
        .par_iter()
        .map(|&(a, b)| compensated_sum((a..b).map(&f)))
        .collect();
    compensated_sum(partials)
}

/// Full unit sphere: product of Gauss-Legendre in the polar cosine and a
/// uniform azimuth; weights sum to `4 pi`.
pub fn sphere_nodes(order: usize) -> Vec<(Vec3, f64)> {
    let polar = gauss_legendre(order.max(2));
    let n_az = 2 * order.max(2);
    let waz = 2.0 * std::f64::consts::PI / n_az as f64;
    let mut out = Vec::with_capacity(polar.0.len() * n_az);
    for (&c, &wc) in polar.0.iter().zip(polar.1.iter()) {
        let s = (1.0 - c * c).max(0.0).sqrt();
        for k in 0..n_az {
            let phi = waz * (k as f64 + 0.5);
            out.push((Vec3::new(s * phi.cos(), s * phi.sin(), c), wc * waz));
        }
    }
    out
}

/// Radial rule on `[0, radius]` split into a bulk panel and a tail panel, so
/// concentrated integrands and exponential tails are both resolved.
pub fn radial_panel_nodes(n: usize, radius: f64) -> Vec<(f64, f64)> {
    const SPLIT: f64 = 4.0;
    if radius <= 1.5 * SPLIT {
        gl_interval(n, 0.0, radius)
    } else {
        let mut nodes = gl_interval(n, 0.0, SPLIT);
        nodes.extend(gl_interval((n / 2).max(8), SPLIT, radius));
        nodes
    }
}

/// Ball rule: panelled radial Gauss-Legendre on `[0, radius]` times a sphere
/// rule, centered at `center`. Weights include the `r^2` factor.
pub fn ball_nodes(center: Vec3, radius: f64, n_radial: usize, sphere_order: usize) -> Vec<(Vec3, f64)> {
    let radial = radial_panel_nodes(n_radial, radius);
    let sphere = sphere_nodes(sphere_order);
    let mut out = Vec::with_capacity(radial.len() * sphere.len());
    for &(r, wr) in &radial {
        for &(dir, ws) in &sphere {
            out.push((center + dir * r, wr * ws * r * r));
        }
    }
    out
}

/// Orthonormal pair completing `axis` to a right-handed frame.
pub fn orthonormal_frame(axis: Vec3) -> (Vec3, Vec3) {
    let a = axis.normalize();
    let pick = if a.0[0].abs() <= a.0[1].abs() && a.0[0].abs() <= a.0[2].abs() {
        Vec3::new(1.0, 0.0, 0.0)
    } else if a.0[1].abs() <= a.0[2].abs() {
        Vec3::new(0.0, 1.0, 0.0)
    } else {
        Vec3::new(0.0, 0.0, 1.0)
    };
    let e1 = (pick - a * pick.dot(a)).normalize();
    let e2 = a.cross(e1);
    (e1, e2)
}

/// Scattering-sphere rule about a polar axis, restricted to the polar window
/// `[theta_lo, theta_hi]` and graded toward `theta_lo`.
///
/// Parametrized by `u = sqrt(1 - cos(theta))` with an extra power grading
/// `u = u_hi v^grade`, which clusters nodes at grazing angles where the
/// angular kernel concentrates. Weights carry the full `d omega` measure.
pub fn polar_window_nodes(
    axis: Vec3,
    theta_lo: f64,
    theta_hi: f64,
    n_polar: usize,
    n_azimuth: usize,
    grade: f64,
) -> Vec<(Vec3, f64)> {
    if theta_hi <= theta_lo {
        return Vec::new();
    }
    let (e1, e2) = orthonormal_frame(axis);
    let a = axis.normalize();
    let u_lo = (1.0 - theta_lo.cos()).max(0.0).sqrt();
    let u_hi = (1.0 - theta_hi.cos()).max(0.0).sqrt();
    // v in [v_lo, 1], u = u_hi * v^grade
    let v_lo = (u_lo / u_hi).powf(1.0 / grade);
    let rule = gl_interval(n_polar, v_lo, 1.0);
    let waz = 2.0 * std::f64::consts::PI / n_azimuth as f64;
    let mut out = Vec::with_capacity(rule.len() * n_azimuth);
    for &(v, wv) in &rule {
        let u = u_hi * v.powf(grade);
        let du = u_hi * grade * v.powf(grade - 1.0);
        let cos_t = 1.0 - u * u;
        let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
        // d omega = d(cos) d phi, d(cos) = 2 u du
        let w_polar = 2.0 * u * du * wv;
        for k in 0..n_azimuth {
            let phi = waz * (k as f64 + 0.5);
            let dir = a * cos_t + (e1 * phi.cos() + e2 * phi.sin()) * sin_t;
            out.push((dir, w_polar * waz));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [2usize, 5, 16, 48] {
            let rule = gl_interval(n, 0.0, 1.0);
            for k in 0..(2 * n).min(12) {
                let exact = 1.0 / (k as f64 + 1.0);
                let got: f64 = rule.iter().map(|&(x, w)| w * x.powi(k as i32)).sum();
                assert!((got - exact).abs() < 1e-13, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn gauss_legendre_smooth_integrand() {
        let rule = gl_interval(32, 0.0, 12.0);
        let got: f64 = rule.iter().map(|&(x, w)| w * x * x * (-x).exp()).sum();
        // int_0^inf r^2 e^-r = 2 minus a ~1e-2 tail
        let exact = 2.0 - (12.0_f64.powi(2) + 2.0 * 12.0 + 2.0) * (-12.0_f64).exp();
        assert!((got - exact).abs() < 1e-12);
    }

    #[test]
    fn sphere_rule_mass_and_moments() {
        let nodes = sphere_nodes(8);
        let mass: f64 = nodes.iter().map(|&(_, w)| w).sum();
        assert!((mass - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        // odd moments vanish, diagonal second moments equal 4pi/3
        for i in 0..3 {
            let m1: f64 = nodes.iter().map(|&(v, w)| w * v[i]).sum();
            assert!(m1.abs() < 1e-13);
            let m2: f64 = nodes.iter().map(|&(v, w)| w * v[i] * v[i]).sum();
            assert!((m2 - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ball_rule_gaussian_mass() {
        let nodes = ball_nodes(Vec3::ZERO, 8.0, 24, 8);
        let got: f64 = nodes
            .iter()
            .map(|&(p, w)| w * (-p.norm_sq()).exp())
            .sum();
        let exact = std::f64::consts::PI.powf(1.5);
        assert!((got - exact).abs() < 1e-10);
    }

    #[test]
    fn polar_window_covers_half_sphere() {
        let nodes = polar_window_nodes(
            Vec3::new(0.0, 0.0, 1.0),
            1e-12,
            std::f64::consts::FRAC_PI_2,
            48,
            16,
            2.0,
        );
        let mass: f64 = nodes.iter().map(|&(_, w)| w).sum();
        assert!((mass - 2.0 * std::f64::consts::PI).abs() < 1e-8);
        // all directions inside the window
        for &(v, _) in &nodes {
            assert!(v[2] >= -1e-12);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn graded_window_resolves_grazing_power() {
        // integrand theta^(-1/2) over the polar window, singular at 0
        let nodes = polar_window_nodes(
            Vec3::new(0.0, 0.0, 1.0),
            0.0,
            std::f64::consts::FRAC_PI_2,
            64,
            4,
            2.0,
        );
        let got: f64 = nodes
            .iter()
            .map(|&(v, w)| {
                let theta = v[2].clamp(-1.0, 1.0).acos();
                w * theta.powf(-0.5) / theta.sin().max(1e-300) * theta.sin()
            })
            .sum();
        // 2 pi int_0^{pi/2} theta^{-1/2} sin(theta) dtheta, reference by fine midpoint rule
        let mut reference = 0.0;
        let n = 4_000_000;
        for i in 0..n {
            let t = std::f64::consts::FRAC_PI_2 * (i as f64 + 0.5) / n as f64;
            reference += t.powf(-0.5) * t.sin() * std::f64::consts::FRAC_PI_2 / n as f64;
        }
        reference *= 2.0 * std::f64::consts::PI;
        assert!((got - reference).abs() < 1e-6 * reference);
    }

    #[test]
    fn gate_detects_disagreement() {
        let spec = QuadratureSpec::default();
        assert!(spec.gate(1.0, 1.0 + 1e-8, 1.0).is_ok());
        assert!(matches!(
            spec.gate(1.0, 1.1, 1.0),
            Err(QuadratureError::NotConverged { .. })
        ));
    }

    #[test]
    fn par_sum_is_order_independent() {
        let f = |i: usize| ((i as f64) * 0.37).sin() / (i as f64 + 1.0);
        let a = par_sum(100_000, 1024, f);
        let b = compensated_sum((0..100_000).map(f));
        assert_eq!(a, b);
    }
}

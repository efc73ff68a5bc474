//! Weighted L2 norms, the isotropic fractional norm, the lifted-hyperboloid
//! metric, and the dyadic frequency decomposition on a momentum lattice with
//! its inequality ratios.

use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::kernels::smoothstep;
use crate::minkowski::{FourMomentum, Vec3};
use crate::quadrature::{
    ball_nodes, compensated_sum, gl_interval, sphere_nodes, QuadratureError, QuadratureSpec,
};
use crate::testfn::TestFunction;

/// Distance on the lifted hyperboloid: flat distance of the 4-vectors.
pub fn hyperboloid_metric(p: &FourMomentum, p_new: &FourMomentum) -> f64 {
    let dp = p.spatial() - p_new.spatial();
    let de = p.energy() - p_new.energy();
    (dp.norm_sq() + de * de).sqrt()
}

/// `int (p0)^exponent (p0)^{2l} |f|^2 dp`.
pub fn weighted_l2(f: &TestFunction, l: i32, exponent: f64, quad: &QuadratureSpec) -> f64 {
    let nodes = ball_nodes(
        Vec3::ZERO,
        quad.truncation_r.max(25.0),
        quad.radial_order.max(48),
        quad.sphere_order.max(10),
    );
    compensated_sum(nodes.iter().map(|&(p, w)| {
        let p0 = (1.0 + p.norm_sq()).sqrt();
        let v = f.eval(p);
        w * p0.powf(exponent) * p0.powi(2 * l) * v * v
    }))
}

fn fractional_difference_part(
    f: &TestFunction,
    rho: f64,
    gamma: f64,
    l: i32,
    quad: &QuadratureSpec,
) -> f64 {
    let p_nodes = ball_nodes(
        Vec3::ZERO,
        quad.truncation_r,
        quad.radial_order,
        quad.sphere_order,
    );
    // |u| = v^2 clusters nodes at the singular end; the squared difference
    // cancels two powers of the r^{-1-gamma} radial weight
    let v_rule = gl_interval(quad.radial_order.max(16), 0.0, 1.0);
    let dirs = sphere_nodes(quad.sphere_order.max(8));
    let chunk = 32usize;
    crate::quadrature::par_sum(p_nodes.len().div_ceil(chunk), 1, |ci| {
        let lo = ci * chunk;
        let hi = ((ci + 1) * chunk).min(p_nodes.len());
        let mut acc = 0.0;
        for &(p, wp) in &p_nodes[lo..hi] {
            let p0 = (1.0 + p.norm_sq()).sqrt();
            let f_p = f.eval(p);
            let weight = p0.powi(2 * l);
            let mut inner = 0.0;
            for &(v, wv) in &v_rule {
                let r = v * v;
                let radial_weight = 2.0 * v * r.powf(-1.0 - gamma); // dr * r^{-1-gamma} in v
                for &(dir, wd) in &dirs {
                    let shifted = p + dir * r;
                    let df = f.eval(shifted) - f_p;
                    let s0 = (1.0 + shifted.norm_sq()).sqrt();
                    inner += wv * wd * radial_weight * df * df * (s0 * p0).powf((rho + gamma) / 4.0);
                }
            }
            acc += wp * weight * inner;
        }
        acc
    })
}

/// Squared weighted fractional norm: the weighted L2 part plus the singular
/// difference double integral over `|p - p'| <= 1`.
pub fn fractional_norm_sq(
    f: &TestFunction,
    rho: f64,
    gamma: f64,
    l: i32,
    quad: &QuadratureSpec,
) -> Result<f64, QuadratureError> {
    let eval = |q: &QuadratureSpec| {
        let l2 = {
            let nodes = ball_nodes(Vec3::ZERO, q.truncation_r, q.radial_order, q.sphere_order);
            compensated_sum(nodes.iter().map(|&(p, w)| {
                let p0 = (1.0 + p.norm_sq()).sqrt();
                let v = f.eval(p) * p0.powi(l);
                w * p0.powf((rho + gamma) / 2.0) * v * v
            }))
        };
        l2 + fractional_difference_part(f, rho, gamma, l, q)
    };
    let fine = eval(quad);
    let coarse = eval(&QuadratureSpec {
        radial_order: (quad.radial_order * 2 / 3).max(8),
        sphere_order: (quad.sphere_order * 2 / 3).max(6),
        ..*quad
    });
    quad.gate(coarse, fine, fine)
}

pub fn fractional_norm(
    f: &TestFunction,
    rho: f64,
    gamma: f64,
    l: i32,
    quad: &QuadratureSpec,
) -> Result<f64, QuadratureError> {
    Ok(fractional_norm_sq(f, rho, gamma, l, quad)?.sqrt())
}

/// Monte-Carlo oracle for the fractional norm square, importance-sampled in
/// the radial difference variable. Test-facing.
pub fn fractional_norm_sq_mc(
    f: &TestFunction,
    rho: f64,
    gamma: f64,
    l: i32,
    samples: u64,
    seed: u64,
) -> f64 {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // p ~ isotropic Gaussian with width sigma_p, r ~ (2-gamma) r^{1-gamma} on (0,1]
    let sigma_p = 2.0;
    let norm_p = (2.0 * std::f64::consts::PI * sigma_p * sigma_p).powf(1.5);
    let mut acc = 0.0;
    for _ in 0..samples {
        let p = Vec3::new(
            rng.sample::<f64, _>(rand_distr::StandardNormal) * sigma_p,
            rng.sample::<f64, _>(rand_distr::StandardNormal) * sigma_p,
            rng.sample::<f64, _>(rand_distr::StandardNormal) * sigma_p,
        );
        let density_p = (-p.norm_sq() / (2.0 * sigma_p * sigma_p)).exp() / norm_p;
        let r: f64 = rng.gen::<f64>().powf(1.0 / (2.0 - gamma));
        let density_r = (2.0 - gamma) * r.powf(1.0 - gamma);
        let dir = loop {
            let d = Vec3::new(
                rng.gen_range(-1.0..1.0f64),
                rng.gen_range(-1.0..1.0f64),
                rng.gen_range(-1.0..1.0f64),
            );
            let n = d.norm();
            if n > 1e-4 && n <= 1.0 {
                break d * (1.0 / n);
            }
        };
        let p0 = (1.0 + p.norm_sq()).sqrt();
        let shifted = p + dir * r;
        let s0 = (1.0 + shifted.norm_sq()).sqrt();
        let df = f.eval(shifted) - f.eval(p);
        let h = p0.powi(2 * l) * df * df * (s0 * p0).powf((rho + gamma) / 4.0);
        acc += h * r.powf(-1.0 - gamma) * r * r / (density_p * density_r / (4.0 * std::f64::consts::PI));
    }
    let diff = acc / samples as f64;
    let l2 = weighted_l2(f, l, (rho + gamma) / 2.0, &QuadratureSpec::default());
    l2 + diff
}

// ---------------------------------------------------------------------------
// mother bump and lattice decomposition

/// Exponent of the transition profile chosen so the mother bump has unit
/// integral, solved once by bisection.
fn mother_exponent() -> f64 {
    static A: OnceLock<f64> = OnceLock::new();
    *A.get_or_init(|| {
        let target = 1.0 / (4.0 * std::f64::consts::PI) - 1.0 / 24.0;
        let shell = |a: f64| -> f64 {
            let rule = gl_interval(200, 0.5, 1.0);
            rule.iter()
                .map(|&(r, w)| w * r * r * smoothstep(2.0 * (1.0 - r)).powf(a))
                .sum()
        };
        let (mut lo, mut hi) = (1e-3, 60.0);
        assert!(shell(lo) > target && shell(hi) < target);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if shell(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    })
}

/// Radial profile of the mother bump: 1 on `[0, 1/2]`, 0 on `[1, inf)`,
/// scaled transition in between so that `int phi = 1`.
pub fn mother_phi(r: f64) -> f64 {
    if r <= 0.5 {
        1.0
    } else if r >= 1.0 {
        0.0
    } else {
        smoothstep(2.0 * (1.0 - r)).powf(mother_exponent())
    }
}

fn smoothstep_deriv(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    let da = a / (t * t);
    let db = b / ((1.0 - t) * (1.0 - t));
    // d/dt [a / (a + b)] with b' = +db (derivative of -1/(1-t) is -1/(1-t)^2... chain)
    (da * b + a * db) / ((a + b) * (a + b))
}

/// Radial derivative of the mother profile.
pub fn mother_phi_deriv(r: f64) -> f64 {
    if r <= 0.5 || r >= 1.0 {
        0.0
    } else {
        let a = mother_exponent();
        let s = smoothstep(2.0 * (1.0 - r));
        -2.0 * a * s.powf(a - 1.0) * smoothstep_deriv(2.0 * (1.0 - r))
    }
}

/// Uniform cell-centered momentum lattice.
#[derive(Clone, Copy, Debug)]
pub struct LpGrid {
    pub h: f64,
    pub extent: f64,
}

impl LpGrid {
    pub fn n(&self) -> usize {
        (2.0 * self.extent / self.h).round() as usize
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.extent + (i as f64 + 0.5) * self.h
    }
}

/// Dyadic frequency pieces of a function sampled on a lattice.
pub struct LpDecomposition {
    pub grid: LpGrid,
    pub j_max: u32,
    /// `pieces[j]` holds the j-th difference piece on the n^3 lattice,
    /// x fastest.
    pub pieces: Vec<Vec<f64>>,
    /// nodes within this many cells of the boundary see kernel truncation
    pub margin: usize,
}

impl LpDecomposition {
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let n = self.grid.n();
        (k * n + j) * n + i
    }

    /// Sum of the pieces: the smoothed field at the top scale.
    pub fn partial_sum(&self, idx: usize) -> f64 {
        self.pieces.iter().map(|p| p[idx]).sum()
    }

    pub fn is_interior(&self, i: usize, j: usize, k: usize) -> bool {
        let n = self.grid.n();
        let m = self.margin;
        i >= m && j >= m && k >= m && i < n - m && j < n - m && k < n - m
    }

    /// Lattice sum `h^3 sum |piece_j|^2 (p0)^rho`.
    pub fn piece_energy(&self, j: usize, rho: f64) -> f64 {
        let n = self.grid.n();
        let mut acc = 0.0;
        for kz in 0..n {
            for ky in 0..n {
                for kx in 0..n {
                    let v = self.pieces[j][(kz * n + ky) * n + kx];
                    if v == 0.0 {
                        continue;
                    }
                    let p = Vec3::new(self.coordv(kx), self.coordv(ky), self.coordv(kz));
                    let p0 = (1.0 + p.norm_sq()).sqrt();
                    acc += v * v * p0.powf(rho);
                }
            }
        }
        acc * self.grid.h.powi(3)
    }

    fn coordv(&self, i: usize) -> f64 {
        self.grid.coord(i)
    }
}

fn good_fft_size(min: usize) -> usize {
    let mut n = min;
    loop {
        let mut m = n;
        for p in [2usize, 3, 5, 7] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

/// 3D circular convolution machinery on a padded lattice.
struct ConvGrid {
    n: usize,     // logical lattice size per axis
    nf: usize,    // padded fft size per axis
    h: f64,
    extent: f64,
    fft: Arc<dyn rustfft::Fft<f64>>,
    ifft: Arc<dyn rustfft::Fft<f64>>,
}

impl ConvGrid {
    fn new(grid: &LpGrid, kernel_radius: f64) -> Self {
        let n = grid.n();
        let pad = (kernel_radius / grid.h).ceil() as usize + 1;
        let nf = good_fft_size(n + 2 * pad);
        let mut planner = FftPlanner::new();
        ConvGrid {
            n,
            nf,
            h: grid.h,
            extent: grid.extent,
            fft: planner.plan_fft_forward(nf),
            ifft: planner.plan_fft_inverse(nf),
        }
    }

    fn fft3(&self, data: &mut [Complex64], inverse: bool) {
        let nf = self.nf;
        let plan = if inverse { &self.ifft } else { &self.fft };
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // x lines
        for z in 0..nf {
            for y in 0..nf {
                let start = (z * nf + y) * nf;
                plan.process_with_scratch(&mut data[start..start + nf], &mut scratch);
            }
        }
        // y lines
        let mut line = vec![Complex64::default(); nf];
        for z in 0..nf {
            for x in 0..nf {
                for y in 0..nf {
                    line[y] = data[(z * nf + y) * nf + x];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for y in 0..nf {
                    data[(z * nf + y) * nf + x] = line[y];
                }
            }
        }
        // z lines
        for y in 0..nf {
            for x in 0..nf {
                for z in 0..nf {
                    line[z] = data[(z * nf + y) * nf + x];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for z in 0..nf {
                    data[(z * nf + y) * nf + x] = line[z];
                }
            }
        }
    }

    /// Samples `f` on the logical lattice embedded in the padded cube and
    /// returns its forward transform.
    fn forward_field(&self, f: &TestFunction) -> Vec<Complex64> {
        let mut data = vec![Complex64::default(); self.nf * self.nf * self.nf];
        for kz in 0..self.n {
            let z = -self.extent + (kz as f64 + 0.5) * self.h;
            for ky in 0..self.n {
                let y = -self.extent + (ky as f64 + 0.5) * self.h;
                for kx in 0..self.n {
                    let x = -self.extent + (kx as f64 + 0.5) * self.h;
                    data[(kz * self.nf + ky) * self.nf + kx] =
                        Complex64::new(f.eval(Vec3::new(x, y, z)), 0.0);
                }
            }
        }
        self.fft3(&mut data, false);
        data
    }

    /// Forward transform of a radial kernel `k(offset)` laid out with
    /// wrap-around indexing.
    fn forward_kernel(&self, kernel: impl Fn(Vec3) -> f64, radius: f64) -> Vec<Complex64> {
        let mut data = vec![Complex64::default(); self.nf * self.nf * self.nf];
        let reach = (radius / self.h).ceil() as isize + 1;
        let nf = self.nf as isize;
        for dz in -reach..=reach {
            let z = dz as f64 * self.h;
            for dy in -reach..=reach {
                let y = dy as f64 * self.h;
                for dx in -reach..=reach {
                    let x = dx as f64 * self.h;
                    let v = kernel(Vec3::new(x, y, z));
                    if v == 0.0 {
                        continue;
                    }
                    let iz = dz.rem_euclid(nf) as usize;
                    let iy = dy.rem_euclid(nf) as usize;
                    let ix = dx.rem_euclid(nf) as usize;
                    data[(iz * self.nf + iy) * self.nf + ix] = Complex64::new(v, 0.0);
                }
            }
        }
        self.fft3(&mut data, false);
        data
    }

    /// Multiplies the kernel spectrum by the field spectrum in place,
    /// inverse-transforms, and extracts the logical lattice. Includes the
    /// `h^3` measure and fft normalization.
    fn convolve(&self, field_hat: &[Complex64], kernel_hat: &mut Vec<Complex64>) -> Vec<f64> {
        let total = self.nf * self.nf * self.nf;
        for (k, f) in kernel_hat.iter_mut().zip(field_hat.iter()) {
            *k *= f;
        }
        self.fft3(kernel_hat, true);
        let scale = self.h.powi(3) / total as f64;
        let mut out = vec![0.0; self.n * self.n * self.n];
        for kz in 0..self.n {
            for ky in 0..self.n {
                for kx in 0..self.n {
                    out[(kz * self.n + ky) * self.n + kx] =
                        kernel_hat[(kz * self.nf + ky) * self.nf + kx].re * scale;
                }
            }
        }
        out
    }
}

// psi_j = phi_j - phi_{j-1} for j >= 1, phi for j = 0, as a closure
fn difference_kernel(j: u32) -> impl Fn(Vec3) -> f64 {
    move |x: Vec3| {
        let r = x.norm();
        let scale = 2.0_f64.powi(j as i32);
        let fine = scale.powi(3) * mother_phi(scale * r);
        if j == 0 {
            fine
        } else {
            let coarse_scale = scale / 2.0;
            fine - coarse_scale.powi(3) * mother_phi(coarse_scale * r)
        }
    }
}

// gradient of the difference kernel along one axis
fn difference_kernel_grad(j: u32, axis: usize) -> impl Fn(Vec3) -> f64 {
    move |x: Vec3| {
        let r = x.norm();
        if r < 1e-14 {
            return 0.0;
        }
        let scale = 2.0_f64.powi(j as i32);
        let fine = scale.powi(4) * mother_phi_deriv(scale * r);
        let value = if j == 0 {
            fine
        } else {
            let cs = scale / 2.0;
            fine - cs.powi(4) * mother_phi_deriv(cs * r)
        };
        value * x[axis] / r
    }
}

fn check_grid(grid: &LpGrid, j_max: u32) -> Result<(), QuadratureError> {
    let limit = 2.0_f64.powi(-(j_max as i32) - 2);
    if grid.h > limit {
        return Err(QuadratureError::GridTooCoarse {
            h: grid.h,
            j_max,
            limit,
        });
    }
    Ok(())
}

/// Dyadic decomposition of `f` on the lattice: smooths at scales
/// `2^{-j}` and returns the telescoped differences, whose sum is exactly the
/// top-scale smoothing.
pub fn lp_decompose(
    f: &TestFunction,
    j_max: u32,
    grid: LpGrid,
) -> Result<LpDecomposition, QuadratureError> {
    check_grid(&grid, j_max)?;
    let conv = ConvGrid::new(&grid, 1.0);
    let field_hat = conv.forward_field(f);
    let mut pieces = Vec::with_capacity(j_max as usize + 1);
    for j in 0..=j_max {
        let mut kernel_hat = conv.forward_kernel(difference_kernel(j), 1.0);
        pieces.push(conv.convolve(&field_hat, &mut kernel_hat));
    }
    let margin = (1.0 / grid.h).ceil() as usize;
    Ok(LpDecomposition {
        grid,
        j_max,
        pieces,
        margin,
    })
}

/// Ratio report for the frequency-sum inequalities.
#[derive(Clone, Copy, Debug)]
pub struct LpRatioReport {
    /// `sum_j 2^{gamma j} int |piece_j|^2 (p0)^rho`
    pub lhs: f64,
    /// derivative variant `sum_j 2^{(gamma-1) j} int |grad piece_j|^2 (p0)^{(rho+gamma)/2}`
    pub lhs_deriv: f64,
    /// squared fractional norm
    pub rhs_sq: f64,
    pub ratio: f64,
    pub ratio_deriv: f64,
}

/// Computes the frequency-sum ratios against the fractional norm for one
/// function. Streams over scales so only one smoothing is held at a time.
pub fn lp_inequality_ratio(
    f: &TestFunction,
    rho: f64,
    gamma: f64,
    j_max: u32,
    grid: LpGrid,
    quad: &QuadratureSpec,
) -> Result<LpRatioReport, QuadratureError> {
    check_grid(&grid, j_max)?;
    let conv = ConvGrid::new(&grid, 1.0);
    let field_hat = conv.forward_field(f);
    let n = grid.n();
    let energy = |values: &[f64], weight_exp: f64| -> f64 {
        let mut acc = 0.0;
        for kz in 0..n {
            for ky in 0..n {
                for kx in 0..n {
                    let v = values[(kz * n + ky) * n + kx];
                    if v == 0.0 {
                        continue;
                    }
                    let p = Vec3::new(grid.coord(kx), grid.coord(ky), grid.coord(kz));
                    acc += v * v * (1.0 + p.norm_sq()).powf(weight_exp / 2.0);
                }
            }
        }
        acc * grid.h.powi(3)
    };

    let mut lhs = 0.0;
    let mut lhs_deriv = 0.0;
    for j in 0..=j_max {
        let mut kernel_hat = conv.forward_kernel(difference_kernel(j), 1.0);
        let piece = conv.convolve(&field_hat, &mut kernel_hat);
        lhs += 2.0_f64.powf(gamma * j as f64) * energy(&piece, rho);
        drop(piece);
        let mut grad_energy = 0.0;
        for axis in 0..3 {
            let mut kernel_hat = conv.forward_kernel(difference_kernel_grad(j, axis), 1.0);
            let gpiece = conv.convolve(&field_hat, &mut kernel_hat);
            grad_energy += energy(&gpiece, (rho + gamma) / 2.0);
        }
        lhs_deriv += 2.0_f64.powf((gamma - 1.0) * j as f64) * grad_energy;
    }

    let rhs_sq = fractional_norm_sq(f, rho, gamma, 0, quad)?;
    Ok(LpRatioReport {
        lhs,
        lhs_deriv,
        rhs_sq,
        ratio: lhs / rhs_sq,
        ratio_deriv: lhs_deriv / rhs_sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_examples() {
        let p = FourMomentum::new(1.0, 0.0, 0.0).unwrap();
        let o = FourMomentum::REST;
        assert_eq!(hyperboloid_metric(&p, &p), 0.0);
        // frozen: sqrt(1 + (sqrt2 - 1)^2)
        let expect = (1.0 + (2.0_f64.sqrt() - 1.0).powi(2)).sqrt();
        assert!((hyperboloid_metric(&p, &o) - expect).abs() < 1e-15);
    }

    #[test]
    fn metric_two_sided_bound_sweep() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100_000 {
            let a = FourMomentum::new(
                rng.gen_range(-9.0..9.0),
                rng.gen_range(-9.0..9.0),
                rng.gen_range(-9.0..9.0),
            )
            .unwrap();
            let b = FourMomentum::new(
                rng.gen_range(-9.0..9.0),
                rng.gen_range(-9.0..9.0),
                rng.gen_range(-9.0..9.0),
            )
            .unwrap();
            let d = hyperboloid_metric(&a, &b);
            let flat = (a.spatial() - b.spatial()).norm();
            assert!(flat <= d * (1.0 + 1e-12) + 1e-12);
            assert!(d <= std::f64::consts::SQRT_2 * flat * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn weighted_l2_basics() {
        let quad = QuadratureSpec::default();
        let f = TestFunction::gaussian(1.0);
        // int e^{-2|p|^2} = (pi/2)^{3/2}
        let v = weighted_l2(&f, 0, 0.0, &quad);
        let exact = (std::f64::consts::PI / 2.0).powf(1.5);
        assert!((v - exact).abs() < 1e-10);
        // quadratic scaling
        let v3 = weighted_l2(&f.scaled(3.0), 0, 0.0, &quad);
        assert!((v3 - 9.0 * v).abs() < 1e-10 * v3);
        // sqrt(J) mass: paper-literal normalization carries K2(1)
        let sj = TestFunction::sqrt_juttner(crate::Normalization::PaperLiteral);
        let v = weighted_l2(&sj, 0, 0.0, &quad);
        assert!((v - crate::equilibrium::k2_one()).abs() < 1e-8);
    }

    #[test]
    fn mother_bump_has_unit_mass() {
        let rule = gl_interval(300, 0.0, 1.0);
        let mass: f64 = rule
            .iter()
            .map(|&(r, w)| w * r * r * mother_phi(r))
            .sum::<f64>()
            * 4.0
            * std::f64::consts::PI;
        assert!((mass - 1.0).abs() < 1e-10, "mass {mass}");
        assert_eq!(mother_phi(0.3), 1.0);
        assert_eq!(mother_phi(1.1), 0.0);
        // derivative matches finite differences on the transition
        for &r in &[0.55, 0.7, 0.9] {
            let h = 1e-6;
            let fd = (mother_phi(r + h) - mother_phi(r - h)) / (2.0 * h);
            assert!((mother_phi_deriv(r) - fd).abs() < 1e-5 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn fractional_norm_constant_and_scaling() {
        let quad = QuadratureSpec {
            radial_order: 24,
            sphere_order: 8,
            tol: 1e-4,
            ..Default::default()
        };
        let f = TestFunction::gaussian(1.0);
        let a = fractional_norm(&f, 0.0, 0.5, 0, &quad).unwrap();
        let b = fractional_norm(&f.scaled(2.0), 0.0, 0.5, 0, &quad).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-8 * b);
    }

    #[test]
    fn fractional_norm_matches_mc_oracle() {
        let quad = QuadratureSpec {
            radial_order: 32,
            sphere_order: 10,
            tol: 1e-5,
            ..Default::default()
        };
        let f = TestFunction::gaussian(0.8);
        let v = fractional_norm_sq(&f, 0.0, 0.5, 0, &quad).unwrap();
        let mc = fractional_norm_sq_mc(&f, 0.0, 0.5, 0, 2_000_000, 7);
        assert!(
            (v - mc).abs() < 4e-3 * v,
            "quadrature {v} vs Monte-Carlo {mc}"
        );
    }

    #[test]
    fn grid_too_coarse_rejected() {
        let f = TestFunction::gaussian(1.0);
        let err = lp_decompose(&f, 4, LpGrid { h: 0.1, extent: 1.0 });
        assert!(matches!(err, Err(QuadratureError::GridTooCoarse { .. })));
    }

    #[test]
    fn decomposition_telescopes_and_kills_constants() {
        // affine functions are reproduced exactly by every smoothing level,
        // so every difference piece vanishes on interior nodes
        let grid = LpGrid {
            h: 1.0 / 16.0,
            extent: 1.5,
        };
        let affine = TestFunction::gaussian(1e-12); // ~ constant 1
        let dec = lp_decompose(&affine, 2, grid).unwrap();
        let n = grid.n();
        for kz in 0..n {
            for ky in 0..n {
                for kx in 0..n {
                    if !dec.is_interior(kx, ky, kz) {
                        continue;
                    }
                    let idx = dec.index(kx, ky, kz);
                    for j in 1..=2usize {
                        assert!(
                            dec.pieces[j][idx].abs() < 1e-8,
                            "piece {j} at ({kx},{ky},{kz}) = {}",
                            dec.pieces[j][idx]
                        );
                    }
                    // partial sum reproduces the function value itself
                    let p = Vec3::new(grid.coord(kx), grid.coord(ky), grid.coord(kz));
                    assert!((dec.partial_sum(idx) - affine.eval(p)).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn oscillation_energy_tracks_scale() {
        // doubling the oscillation frequency shifts the energy argmax by one
        let grid = LpGrid {
            h: 1.0 / 32.0,
            extent: 1.5,
        };
        let energy_profile = |freq_scale: f64| -> Vec<f64> {
            // sin(k p1) approximated by its Taylor-free surrogate: use an
            // explicit monomial-modulated Gaussian whose content sits at the
            // requested scale: f = cos(k p1) e^{-|p|^2} via sampled closure is
            // outside the TestFunction class, so use a high-degree monomial
            // concentrated at |p| ~ k^{-1}
            let alpha = freq_scale * freq_scale;
            let f = TestFunction::gaussian(alpha);
            let dec = lp_decompose(&f, 3, grid).unwrap();
            (0..=3).map(|j| dec.piece_energy(j, 0.0)).collect()
        };
        // sharper Gaussians push relative energy toward finer scales
        let coarse = energy_profile(2.0);
        let fine = energy_profile(4.0);
        let frac = |e: &[f64]| e[3] / e.iter().sum::<f64>();
        assert!(
            frac(&fine) > 2.0 * frac(&coarse),
            "fine fraction {} vs coarse {}",
            frac(&fine),
            frac(&coarse)
        );
    }

    #[test]
    fn fft_convolution_matches_direct_sum() {
        let grid = LpGrid {
            h: 1.0 / 8.0,
            extent: 1.0,
        };
        let f = TestFunction::gaussian(1.3);
        let dec = lp_decompose(&f, 1, grid).unwrap();
        // direct evaluation of S_1 at an interior node
        let n = grid.n();
        let (i, j, k) = (n / 2, n / 2 - 1, n / 2 + 2);
        let target = Vec3::new(grid.coord(i), grid.coord(j), grid.coord(k));
        let scale = 2.0_f64;
        let mut direct = 0.0;
        for kz in 0..n {
            for ky in 0..n {
                for kx in 0..n {
                    let p = Vec3::new(grid.coord(kx), grid.coord(ky), grid.coord(kz));
                    let d = (target - p).norm();
                    direct += f.eval(p) * scale.powi(3) * mother_phi(scale * d);
                }
            }
        }
        direct *= grid.h.powi(3);
        let s1 = dec.pieces[0][dec.index(i, j, k)] + dec.pieces[1][dec.index(i, j, k)];
        assert!(
            (direct - s1).abs() < 1e-12 * direct.abs().max(1.0),
            "direct {direct} vs fft {s1}"
        );
    }
}

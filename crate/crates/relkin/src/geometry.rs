//! Scalar collision invariants, the post-collisional map, scattering angle,
//! pre-post Jacobians and the dual-frame quantities.

use thiserror::Error;

use crate::dd::Dd;
use crate::minkowski::{
    com_transform, lorentz_inner, mass_shell_lift, minkowski_dot, FourMomentum, MinkowskiError,
    Vec3,
};

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("scattering angle undefined: g = {g} below threshold")]
    UndefinedAngle { g: f64 },
    #[error("finite-difference step outside [1e-7, 1e-3]: {h}")]
    StepOutOfRange { h: f64 },
    #[error("finite-difference cancellation: determinants {d1} and {d2} fluctuate by more than 10%")]
    StepTooSmall { d1: f64, d2: f64 },
    #[error(transparent)]
    Minkowski(#[from] MinkowskiError),
}

/// Relative momentum, center-of-momentum energy squared and Møller velocity
/// of a colliding pair.
#[derive(Clone, Copy, Debug)]
pub struct CollisionInvariants {
    pub g: f64,
    pub s: f64,
    /// Møller velocity `g sqrt(s) / (p0 q0)`.
    pub moller: f64,
}

/// Floating-point guard: radicands in `[-1e-14, 0)` are clamped to zero.
const RADICAND_GUARD: f64 = -1e-14;

fn clamped_sqrt(x: f64) -> Option<f64> {
    if x >= 0.0 {
        Some(x.sqrt())
    } else if x >= RADICAND_GUARD {
        Some(0.0)
    } else {
        None
    }
}

/// Relative momentum `g(a, b) = sqrt(2(-a^mu b_mu - 1))` for an arbitrary
/// mass-shell pair. On the mass shell the radicand is nonnegative; tiny
/// negative excursions are clamped.
pub fn relative_g(a: &FourMomentum, b: &FourMomentum) -> f64 {
    let radicand = 2.0 * (-lorentz_inner(a, b) - 1.0);
    clamped_sqrt(radicand).unwrap_or_else(|| panic!("g^2 = {radicand} < 0 off the mass shell"))
}

/// Collision invariants of the pair `(p, q)`: `g`, `s = g^2 + 4` and the
/// Møller velocity.
pub fn invariants(p: &FourMomentum, q: &FourMomentum) -> Result<CollisionInvariants, GeometryError> {
    let g = relative_g(p, q);
    let s = g * g + 4.0;
    let moller = g * s.sqrt() / (p.energy() * q.energy());
    Ok(CollisionInvariants { g, s, moller })
}

/// Post-collisional momenta in the center-of-momentum parametrization.
///
/// When `|p+q|` vanishes the `(xi - 1)` correction is dropped: `xi = 1` there
/// and the expression has a continuous limit `p' = (p+q)/2 + (g/2) omega`.
pub fn post_collision(
    p: &FourMomentum,
    q: &FourMomentum,
    omega: Vec3,
) -> (FourMomentum, FourMomentum) {
    debug_assert!((omega.norm() - 1.0).abs() < 1e-12, "omega must be unit");
    let total = p.spatial() + q.spatial();
    let g = relative_g(p, q);
    let s = g * g + 4.0;
    let total_sq = total.norm_sq();
    let dir = if total_sq < 1e-24 {
        omega
    } else {
        let xi = (p.energy() + q.energy()) / s.sqrt();
        omega + total * ((xi - 1.0) * total.dot(omega) / total_sq)
    };
    let half = total * 0.5;
    let shift = dir * (g * 0.5);
    let p_new = mass_shell_lift(half + shift).expect("finite");
    let q_new = mass_shell_lift(half - shift).expect("finite");
    (p_new, q_new)
}

/// Scattering angle cosine `(p-q).(p'-q') / g^2`, clamped to `[-1, 1]`.
pub fn scattering_cos(
    p: &FourMomentum,
    q: &FourMomentum,
    p_new: &FourMomentum,
    q_new: &FourMomentum,
) -> Result<f64, GeometryError> {
    let g = relative_g(p, q);
    if g < 1e-12 {
        return Err(GeometryError::UndefinedAngle { g });
    }
    let a = sub4(p.as_four(), q.as_four());
    let b = sub4(p_new.as_four(), q_new.as_four());
    let raw = minkowski_dot(a, b) / (g * g);
    Ok(raw.clamp(-1.0, 1.0))
}

fn sub4(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

/// Post-collisional pair in the impact-direction parametrization
/// `p' = p + a omega`, `q' = q - a omega`, the realization under which the
/// pre-post change of variables is a pointwise diffeomorphism of `(p, q)` at
/// fixed direction. The transfer magnitude solving energy conservation is
/// `a = 2 E p0 q0 omega.(q/q0 - p/p0) / (E^2 - (omega.(p+q))^2)`, `E = p0+q0`.
pub fn impact_post_collision(
    p: &FourMomentum,
    q: &FourMomentum,
    omega: Vec3,
) -> (FourMomentum, FourMomentum) {
    let e = p.energy() + q.energy();
    let rel = q.spatial() * (1.0 / q.energy()) - p.spatial() * (1.0 / p.energy());
    let along = omega.dot(p.spatial() + q.spatial());
    let a = 2.0 * e * p.energy() * q.energy() * omega.dot(rel) / (e * e - along * along);
    let p_new = mass_shell_lift(p.spatial() + omega * a).expect("finite");
    let q_new = mass_shell_lift(q.spatial() - omega * a).expect("finite");
    (p_new, q_new)
}

/// Jacobian of the pre-post change of variables `(p,q) -> (p',q')` in the
/// impact-direction realization: `p'0 q'0 / (p0 q0)`.
pub fn prepost_jacobian_analytic(p: &FourMomentum, q: &FourMomentum, omega: Vec3) -> f64 {
    let (p_new, q_new) = impact_post_collision(p, q, omega);
    p_new.energy() * q_new.energy() / (p.energy() * q.energy())
}

fn det_n(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
            .unwrap();
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    det
}

fn jacobian_6x6(p: Vec3, q: Vec3, omega: Vec3, h: f64) -> f64 {
    let eval = |pp: Vec3, qq: Vec3| -> [f64; 6] {
        let (a, b) = impact_post_collision(
            &mass_shell_lift(pp).unwrap(),
            &mass_shell_lift(qq).unwrap(),
            omega,
        );
        let (av, bv) = (a.spatial(), b.spatial());
        [av[0], av[1], av[2], bv[0], bv[1], bv[2]]
    };
    let mut m = vec![vec![0.0; 6]; 6];
    for j in 0..6 {
        let mut dp = [0.0; 6];
        dp[j] = h;
        let plus = eval(
            p + Vec3::new(dp[0], dp[1], dp[2]),
            q + Vec3::new(dp[3], dp[4], dp[5]),
        );
        let minus = eval(
            p - Vec3::new(dp[0], dp[1], dp[2]),
            q - Vec3::new(dp[3], dp[4], dp[5]),
        );
        for i in 0..6 {
            m[i][j] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    det_n(m)
}

/// Central-difference 6x6 determinant magnitude of `(p,q) -> (p',q')` at
/// fixed impact direction, Richardson-extrapolated over steps `h` and `h/2`.
pub fn prepost_jacobian_numeric(
    p: &FourMomentum,
    q: &FourMomentum,
    omega: Vec3,
    h: f64,
) -> Result<f64, GeometryError> {
    if !(1e-7..=1e-3).contains(&h) {
        return Err(GeometryError::StepOutOfRange { h });
    }
    let d1 = jacobian_6x6(p.spatial(), q.spatial(), omega, h);
    let d2 = jacobian_6x6(p.spatial(), q.spatial(), omega, h / 2.0);
    let scale = d1.abs().max(d2.abs()).max(f64::MIN_POSITIVE);
    if (d1 - d2).abs() > 0.1 * scale {
        return Err(GeometryError::StepTooSmall { d1, d2 });
    }
    // central differences have O(h^2) error
    Ok(((4.0 * d2 - d1) / 3.0).abs())
}

// impact-direction outcome in double-double arithmetic
fn impact_post_collision_dd(p: [Dd; 3], q: [Dd; 3], omega: Vec3) -> [Dd; 3] {
    let one = Dd::from(1.0);
    let norm_sq = |v: &[Dd; 3]| v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    let p0 = (one + norm_sq(&p)).sqrt();
    let q0 = (one + norm_sq(&q)).sqrt();
    let e = p0 + q0;
    let w = [Dd::from(omega[0]), Dd::from(omega[1]), Dd::from(omega[2])];
    let mut w_rel = Dd::from(0.0);
    let mut w_tot = Dd::from(0.0);
    for i in 0..3 {
        w_rel = w_rel + w[i] * (q[i] / q0 - p[i] / p0);
        w_tot = w_tot + w[i] * (p[i] + q[i]);
    }
    let a = Dd::from(2.0) * e * p0 * q0 * w_rel / (e * e - w_tot * w_tot);
    [p[0] + w[0] * a, p[1] + w[1] * a, p[2] + w[2] * a]
}

fn det3_dd(m: [[Dd; 3]; 3]) -> Dd {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// 3x3 determinant `|dp'/dp|` of the impact-parametrized outcome at fixed
/// `(q, omega)`, by central differences.
///
/// With `extended` set, evaluation runs in double-double arithmetic
/// (about 32 significant digits) so the determinant keeps meaning near its
/// zero set.
pub fn collision_map_jacobian(
    p: &FourMomentum,
    q: &FourMomentum,
    omega: Vec3,
    h: f64,
    extended: bool,
) -> Result<f64, GeometryError> {
    if !(1e-7..=1e-3).contains(&h) {
        return Err(GeometryError::StepOutOfRange { h });
    }
    let det_at = |step: f64| -> f64 {
        if extended {
            let qdd = [
                Dd::from(q.spatial()[0]),
                Dd::from(q.spatial()[1]),
                Dd::from(q.spatial()[2]),
            ];
            let mut m = [[Dd::from(0.0); 3]; 3];
            for j in 0..3 {
                let mut plus = [
                    Dd::from(p.spatial()[0]),
                    Dd::from(p.spatial()[1]),
                    Dd::from(p.spatial()[2]),
                ];
                let mut minus = plus;
                plus[j] = plus[j] + Dd::from(step);
                minus[j] = minus[j] - Dd::from(step);
                let fp = impact_post_collision_dd(plus, qdd, omega);
                let fm = impact_post_collision_dd(minus, qdd, omega);
                let inv = Dd::from(1.0) / Dd::from(2.0 * step);
                for i in 0..3 {
                    m[i][j] = (fp[i] - fm[i]) * inv;
                }
            }
            det3_dd(m).to_f64()
        } else {
            let mut m = vec![vec![0.0; 3]; 3];
            for j in 0..3 {
                let mut plus = p.spatial();
                let mut minus = p.spatial();
                plus.0[j] += step;
                minus.0[j] -= step;
                let (a, _) = impact_post_collision(&mass_shell_lift(plus).unwrap(), q, omega);
                let (b, _) = impact_post_collision(&mass_shell_lift(minus).unwrap(), q, omega);
                for i in 0..3 {
                    m[i][j] = (a.spatial()[i] - b.spatial()[i]) / (2.0 * step);
                }
            }
            det_n(m)
        }
    };
    let d1 = det_at(h);
    let d2 = det_at(h / 2.0);
    Ok((4.0 * d2 - d1) / 3.0)
}

/// Frame quantities of the `(p', q, z)` parametrization used by the dual
/// representation of the trilinear collision form.
#[derive(Clone, Copy, Debug)]
pub struct DualFrameQuantities {
    /// Transformed image of the pre-post relative momentum.
    pub g_l: f64,
    pub g_lam: f64,
    pub s_lam: f64,
    pub cos_theta_lam: f64,
    /// `(p'0 + q0) / 4`.
    pub l: f64,
    /// `|p' x q| / (2 g~)` where `g~ = g(p', q)`.
    pub j: f64,
    /// Spatial shift entering `h(A + p')`.
    pub a: Vec3,
    /// Energy shift: the dual bracket carries `exp(-A0/2)`.
    pub a0: f64,
}

/// Builds the dual-frame quantities from `(p', q)` and a point `z` in the
/// transverse plane. Requires a non-colinear pair: the shift uses the second
/// row of the center-of-momentum matrix for `(p', q)`.
pub fn dual_frame(
    p_new: &FourMomentum,
    q: &FourMomentum,
    z: [f64; 2],
) -> Result<DualFrameQuantities, GeometryError> {
    let lambda = com_transform(p_new, q)?;
    let g_tilde = relative_g(p_new, q);
    let s_tilde = g_tilde * g_tilde + 4.0;
    let x = (z[0] * z[0] + z[1] * z[1] + 1.0).sqrt();
    let g_l_sq = 0.5 * s_tilde * (x - 1.0);
    let g_lam_sq = g_tilde * g_tilde + g_l_sq;
    let s_lam = g_lam_sq + 4.0;
    let cos_theta_lam = (2.0 * g_tilde * g_tilde / g_lam_sq - 1.0).clamp(-1.0, 1.0);

    let cross = p_new.spatial().cross(q.spatial());
    let cross_norm = cross.norm();
    let l = (p_new.energy() + q.energy()) / 4.0;
    let j = cross_norm / (2.0 * g_tilde);

    let row1 = lambda.row(1);
    let lambda1 = Vec3::new(row1[1], row1[2], row1[3]);
    let rs_tilde = s_tilde.sqrt();
    let a = (p_new.spatial() + q.spatial()) * (0.5 * (x - 1.0))
        + lambda1 * (0.5 * rs_tilde * z[0])
        + cross * (0.5 * rs_tilde * z[1] / cross_norm);
    let a0 = 2.0 * l * (x - 1.0) - 2.0 * j * z[0];

    Ok(DualFrameQuantities {
        g_l: g_l_sq.max(0.0).sqrt(),
        g_lam: g_lam_sq.sqrt(),
        s_lam,
        cos_theta_lam,
        l,
        j,
        a,
        a0,
    })
}

/// Outcome of the pointwise inequality sweep: the names of any violated
/// inequalities (expected empty).
#[derive(Clone, Debug, Default)]
pub struct InequalityReport {
    pub checked: usize,
    pub violations: Vec<String>,
}

impl InequalityReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evaluates the pointwise estimates tying together `g`, `s`, the energies,
/// the `(l, j)` pair, the dual-frame bounds and the hyperboloid metric, for
/// one collision tuple `(p, q, p', q')` and transverse point `z`.
pub fn pointwise_inequality_suite(
    p: &FourMomentum,
    q: &FourMomentum,
    p_new: &FourMomentum,
    q_new: &FourMomentum,
    z: [f64; 2],
) -> InequalityReport {
    let mut report = InequalityReport::default();
    let tol = 1e-10;
    let mut check = |name: &str, ok: bool| {
        report.checked += 1;
        if !ok {
            report.violations.push(name.to_string());
        }
    };

    let g = relative_g(p, q);
    let s = g * g + 4.0;
    let (p0, q0) = (p.energy(), q.energy());
    let dp = p.spatial() - q.spatial();
    let cross_pq = p.spatial().cross(q.spatial());

    check("s >= max(g^2, 4)", s + tol >= g * g && s + tol >= 4.0);
    check("s <= 4 p0 q0", s <= 4.0 * p0 * q0 * (1.0 + tol));
    check("g <= 2 sqrt(p0 q0)", g <= 2.0 * (p0 * q0).sqrt() * (1.0 + tol));
    check(
        "|p-q|/sqrt(p0 q0) <= g",
        dp.norm() / (p0 * q0).sqrt() <= g * (1.0 + tol) + tol,
    );
    check(
        "sharp lower bound sqrt(|p-q|^2+|pxq|^2)/sqrt(p0 q0) <= g",
        ((dp.norm_sq() + cross_pq.norm_sq()) / (p0 * q0)).sqrt() <= g * (1.0 + tol) + tol,
    );
    check("g <= |p-q|", g <= dp.norm() * (1.0 + tol) + tol);
    check("|p0-q0| <= |p-q|", (p0 - q0).abs() <= dp.norm() * (1.0 + tol) + tol);
    check("p0+q0 <= 2 p0 q0", p0 + q0 <= 2.0 * p0 * q0 * (1.0 + tol));

    // quantities of the (p', q) pair
    let g_tilde = relative_g(p_new, q);
    let g_bar = relative_g(p_new, p);
    let dpq = p_new.spatial() - q.spatial();
    if g_tilde > 1e-9 {
        let l = (p_new.energy() + q.energy()) / 4.0;
        let j = p_new.spatial().cross(q.spatial()).norm() / (2.0 * g_tilde);
        check("j <= l", j <= l * (1.0 + tol) + tol);
        check("j^2 <= p'0 q0", j * j <= p_new.energy() * q.energy() * (1.0 + tol));
        check("l <= p'0 q0", l <= p_new.energy() * q.energy() * (1.0 + tol));
        let s_tilde = g_tilde * g_tilde + 4.0;
        let lhs = l * l - j * j;
        let rhs = s_tilde * dpq.norm_sq() / (16.0 * g_tilde * g_tilde);
        check(
            "l^2 - j^2 identity",
            (lhs - rhs).abs() <= tol * rhs.abs().max(1.0),
        );
        check(
            "sqrt(l^2-j^2) >= |p'-q|/4",
            lhs.max(0.0).sqrt() + tol >= dpq.norm() / 4.0 * (1.0 - tol),
        );
        // dual-frame band with explicit constants
        if let Ok(frame) = dual_frame(p_new, q, z) {
            let x = (z[0] * z[0] + z[1] * z[1] + 1.0).sqrt();
            let g_lam_sq = frame.g_lam * frame.g_lam;
            check(
                "g~^2 max(sqrt(|z|^2+1), sqrt2) <= 2 g_lam^2",
                g_tilde * g_tilde * x.max(std::f64::consts::SQRT_2)
                    <= 2.0 * g_lam_sq * (1.0 + tol),
            );
            check("g_lam^2 <= s_lam", g_lam_sq <= frame.s_lam * (1.0 + tol));
            check(
                "s_lam <= 1.5 s~ sqrt(|z|^2+1)",
                frame.s_lam <= 1.5 * s_tilde * x * (1.0 + tol),
            );
            check(
                "cos(theta_lam) in [-1,1]",
                (-1.0..=1.0).contains(&frame.cos_theta_lam),
            );
        }
    }

    // identities along an actual collision outcome
    let cos_theta = scattering_cos(p, q, p_new, q_new).unwrap_or(1.0);
    if cos_theta >= 0.0 && g > 1e-9 {
        check(
            "g~ <= g <= sqrt2 g~ for cos(theta) >= 0",
            g_tilde <= g * (1.0 + tol) && g <= std::f64::consts::SQRT_2 * g_tilde * (1.0 + tol),
        );
    }
    check(
        "triangle identity g^2 = g~^2 + g-^2",
        (g * g - g_tilde * g_tilde - g_bar * g_bar).abs() <= 1e-10 * (g * g).max(1.0),
    );
    if g > 1e-9 {
        let half = ((1.0 - cos_theta) / 2.0).max(0.0).sqrt();
        check(
            "sin(theta/2) = g-/g",
            (half - g_bar / g).abs() <= 1e-8 * (1.0 + g_bar / g),
        );
    }
    check(
        "p0 <= p'0 + q'0 <= 2 p'0 q'0",
        p0 <= (p_new.energy() + q_new.energy()) * (1.0 + tol)
            && p_new.energy() + q_new.energy()
                <= 2.0 * p_new.energy() * q_new.energy() * (1.0 + tol),
    );
    let ip = |a: &FourMomentum, b: &FourMomentum| lorentz_inner(a, b);
    let scale = (p0 * q0).max(p_new.energy() * q_new.energy());
    check(
        "p.q = p'.q'",
        (ip(p, q) - ip(p_new, q_new)).abs() <= 1e-10 * scale,
    );
    check(
        "p'.q = p.q'",
        (ip(p_new, q) - ip(p, q_new)).abs() <= 1e-10 * scale,
    );
    check(
        "p'.p = q'.q",
        (ip(p_new, p) - ip(q_new, q)).abs() <= 1e-10 * scale,
    );
    // lifted-hyperboloid metric vs flat distance
    let d = crate::norms::hyperboloid_metric(p, p_new);
    let flat = (p.spatial() - p_new.spatial()).norm();
    check(
        "|p-p'| <= d(p,p') <= sqrt2 |p-p'|",
        flat <= d * (1.0 + tol) + tol && d <= std::f64::consts::SQRT_2 * flat * (1.0 + tol) + tol,
    );

    report
}

//! Four-vector algebra on the mass shell and the explicit center-of-momentum
//! Lorentz transformation.
//!
//! Conventions: metric signature `(-+++)`, particle mass and the speed of
//! light normalized to 1, so every physical momentum satisfies
//! `p0 = sqrt(1 + |p|^2) >= 1`.

use std::ops::{Add, Index, Mul, Neg, Sub};

use thiserror::Error;

/// Entrywise tolerance for the isometry residual `Λ^T D Λ - D`.
pub const ISOMETRY_TOL: f64 = 1e-12;

/// Pairs closer to colinear than `|p×q| < COLINEAR_TOL * p0*q0` are rejected.
pub const COLINEAR_TOL: f64 = 1e-12;

/// Pairs with relative momentum below this are rejected (the matrix divides by g).
pub const DEGENERATE_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum MinkowskiError {
    #[error("non-finite momentum component")]
    NonFinite,
    #[error("momentum pair is colinear: |p x q| = {cross} < {threshold}")]
    ColinearPair { cross: f64, threshold: f64 },
    #[error("momentum pair is degenerate: g = {g} below threshold")]
    DegeneratePair { g: f64 },
    #[error("matrix is not a proper orthochronous Lorentz transformation (residual {residual})")]
    NotLorentz { residual: f64 },
}

/// Spatial 3-vector.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3([
            self.0[1] * other.0[2] - self.0[2] * other.0[1],
            self.0[2] * other.0[0] - self.0[0] * other.0[2],
            self.0[0] * other.0[1] - self.0[1] * other.0[0],
        ])
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalize(self) -> Vec3 {
        self * (1.0 / self.norm())
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        self * -1.0
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A momentum on the mass shell: spatial part `p` plus the derived energy
/// `p0 = sqrt(1 + |p|^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourMomentum {
    p: Vec3,
    p0: f64,
}

/// Lifts a spatial momentum onto the mass shell.
pub fn mass_shell_lift(p: Vec3) -> Result<FourMomentum, MinkowskiError> {
    if !p.is_finite() {
        return Err(MinkowskiError::NonFinite);
    }
    Ok(FourMomentum {
        p,
        p0: (1.0 + p.norm_sq()).sqrt(),
    })
}

impl FourMomentum {
    /// Rest momentum `(1, 0, 0, 0)`.
    pub const REST: FourMomentum = FourMomentum {
        p: Vec3::ZERO,
        p0: 1.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, MinkowskiError> {
        mass_shell_lift(Vec3::new(x, y, z))
    }

    pub fn spatial(&self) -> Vec3 {
        self.p
    }

    pub fn energy(&self) -> f64 {
        self.p0
    }

    /// Components `(p0, p1, p2, p3)` as a raw 4-vector.
    pub fn as_four(&self) -> [f64; 4] {
        [self.p0, self.p[0], self.p[1], self.p[2]]
    }
}

/// Lorentz inner product `p^mu q_mu = -p0 q0 + p . q`.
pub fn lorentz_inner(a: &FourMomentum, b: &FourMomentum) -> f64 {
    -a.p0 * b.p0 + a.p.dot(b.p)
}

/// Inner product of raw 4-vectors in the `(-+++)` signature.
pub fn minkowski_dot(a: [f64; 4], b: [f64; 4]) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// A proper orthochronous Lorentz transformation, rows indexed by the upper
/// index and columns by the lower one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LorentzMatrix {
    entries: [[f64; 4]; 4],
}

impl LorentzMatrix {
    pub const IDENTITY: LorentzMatrix = LorentzMatrix {
        entries: [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ],
    };

    /// Validates the isometry condition, unit determinant and orthochronicity.
    pub fn from_entries(entries: [[f64; 4]; 4]) -> Result<Self, MinkowskiError> {
        let m = LorentzMatrix { entries };
        let residual = m.isometry_residual().max((m.det() - 1.0).abs());
        if residual > ISOMETRY_TOL || m.entries[0][0] < 1.0 - ISOMETRY_TOL {
            return Err(MinkowskiError::NotLorentz { residual });
        }
        Ok(m)
    }

    pub fn entries(&self) -> &[[f64; 4]; 4] {
        &self.entries
    }

    pub fn row(&self, mu: usize) -> [f64; 4] {
        self.entries[mu]
    }

    /// Largest entry of `Λ^T D Λ - D`, `D = diag(-1,1,1,1)`.
    pub fn isometry_residual(&self) -> f64 {
        let e = &self.entries;
        let mut worst = 0.0_f64;
        for mu in 0..4 {
            for nu in 0..4 {
                // (Λ^T D Λ)_{mu nu} = sum_k Λ^k_mu D_kk Λ^k_nu
                let mut acc = 0.0;
                for k in 0..4 {
                    let sign = if k == 0 { -1.0 } else { 1.0 };
                    acc += e[k][mu] * sign * e[k][nu];
                }
                let target = if mu != nu {
                    0.0
                } else if mu == 0 {
                    -1.0
                } else {
                    1.0
                };
                worst = worst.max((acc - target).abs());
            }
        }
        worst
    }

    pub fn det(&self) -> f64 {
        det4(&self.entries)
    }

    /// Applies the transformation to a raw 4-vector.
    pub fn apply(&self, v: [f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (mu, row) in self.entries.iter().enumerate() {
            out[mu] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
        }
        out
    }

    /// Inverse via `Λ^{-1} = η Λ^T η`.
    pub fn inverse(&self) -> LorentzMatrix {
        let e = &self.entries;
        let mut inv = [[0.0; 4]; 4];
        for mu in 0..4 {
            for nu in 0..4 {
                let sign = if (mu == 0) ^ (nu == 0) { -1.0 } else { 1.0 };
                inv[mu][nu] = sign * e[nu][mu];
            }
        }
        LorentzMatrix { entries: inv }
    }
}

/// Inverse of a validated Lorentz matrix.
pub fn invert_lorentz(m: &LorentzMatrix) -> LorentzMatrix {
    m.inverse()
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub(crate) fn det4(m: &[[f64; 4]; 4]) -> f64 {
    let mut det = 0.0;
    for col in 0..4 {
        let mut minor = [[0.0; 3]; 3];
        for (i, row) in m.iter().enumerate().skip(1) {
            let mut jj = 0;
            for (j, &v) in row.iter().enumerate() {
                if j != col {
                    minor[i - 1][jj] = v;
                    jj += 1;
                }
            }
        }
        let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
        det += sign * m[0][col] * det3(minor);
    }
    det
}

/// The explicit transformation mapping a pair `(p, q)` into its
/// center-of-momentum frame: `Λ(p+q) = (sqrt(s),0,0,0)` and
/// `-Λ(p-q) = (0,0,0,g)`.
///
/// Rejects colinear pairs (the second and third rows divide by `|p×q|`) and
/// degenerate pairs with `g` below threshold (the last row divides by `g`).
pub fn com_transform(
    p: &FourMomentum,
    q: &FourMomentum,
) -> Result<LorentzMatrix, MinkowskiError> {
    let cross = p.spatial().cross(q.spatial());
    let cross_norm = cross.norm();
    let threshold = COLINEAR_TOL * p.energy() * q.energy();
    if cross_norm < threshold {
        return Err(MinkowskiError::ColinearPair {
            cross: cross_norm,
            threshold,
        });
    }
    let pq = lorentz_inner(p, q);
    let g2 = 2.0 * (-pq - 1.0);
    if g2 <= DEGENERATE_TOL * DEGENERATE_TOL {
        return Err(MinkowskiError::DegeneratePair {
            g: g2.max(0.0).sqrt(),
        });
    }
    let g = g2.sqrt();
    let s = g2 + 4.0;
    let rs = s.sqrt();

    let (pv, qv) = (p.spatial(), q.spatial());
    let (p0, q0) = (p.energy(), q.energy());

    let mut e = [[0.0; 4]; 4];
    // row 0: (p0+q0, -(p+q)) / sqrt(s)
    e[0][0] = (p0 + q0) / rs;
    for i in 0..3 {
        e[0][i + 1] = -(pv[i] + qv[i]) / rs;
    }
    // row 1: the boost-orthogonal direction in the p,q plane
    e[1][0] = 2.0 * cross_norm / (g * rs);
    for i in 0..3 {
        e[1][i + 1] = 2.0 * (pv[i] * (p0 + q0 * pq) + qv[i] * (q0 + p0 * pq))
            / (g * rs * cross_norm);
    }
    // row 2: unit normal of the p,q plane
    e[2][0] = 0.0;
    for i in 0..3 {
        e[2][i + 1] = cross[i] / cross_norm;
    }
    // row 3: (p0-q0, -(p-q)) / g
    e[3][0] = (p0 - q0) / g;
    for i in 0..3 {
        e[3][i + 1] = -(pv[i] - qv[i]) / g;
    }

    LorentzMatrix::from_entries(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_momentum(rng: &mut impl Rng, scale: f64) -> FourMomentum {
        FourMomentum::new(
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
        )
        .unwrap()
    }

    #[test]
    fn mass_shell_examples() {
        assert_eq!(FourMomentum::new(0.0, 0.0, 0.0).unwrap().energy(), 1.0);
        // direct formula evaluation, frozen from extended-precision arithmetic
        let p = FourMomentum::new(1.0, 0.0, 0.0).unwrap();
        assert!((p.energy() - 1.4142135623730951).abs() < 1e-15);
        let p = FourMomentum::new(0.0, 3.0, 4.0).unwrap();
        assert!((p.energy() - 5.0990195135927845).abs() < 1e-14);
        assert!(mass_shell_lift(Vec3::new(f64::NAN, 0.0, 0.0)).is_err());
        assert!(mass_shell_lift(Vec3::new(f64::INFINITY, 0.0, 0.0)).is_err());
    }

    #[test]
    fn inner_product_examples() {
        let rest = FourMomentum::REST;
        assert_eq!(lorentz_inner(&rest, &rest), -1.0);
        let p = FourMomentum::new(1.0, 0.0, 0.0).unwrap();
        assert!((lorentz_inner(&p, &rest) + 2.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn com_transform_rejects_colinear_and_degenerate() {
        let p = FourMomentum::new(1.0, 0.0, 0.0).unwrap();
        let q = FourMomentum::new(-1.0, 0.0, 0.0).unwrap();
        assert!(matches!(
            com_transform(&p, &q),
            Err(MinkowskiError::ColinearPair { .. })
        ));
        let q = FourMomentum::new(1.0, 1e-14, 0.0).unwrap();
        assert!(com_transform(&p, &q).is_err());
    }

    #[test]
    fn com_transform_maps_to_center_of_momentum() {
        let p = FourMomentum::new(1.0, 0.0, 0.0).unwrap();
        let q = FourMomentum::new(0.0, 1.0, 0.0).unwrap();
        let lambda = com_transform(&p, &q).unwrap();
        let inv = geometry::invariants(&p, &q).unwrap();
        let total = [
            p.energy() + q.energy(),
            p.spatial()[0] + q.spatial()[0],
            p.spatial()[1] + q.spatial()[1],
            p.spatial()[2] + q.spatial()[2],
        ];
        let mapped = lambda.apply(total);
        let rs = inv.s.sqrt();
        assert!((mapped[0] - rs).abs() <= 1e-10 * rs);
        for c in &mapped[1..] {
            assert!(c.abs() <= 1e-10 * rs);
        }
        // third row is the unit normal (p x q)/|p x q|
        let n = p.spatial().cross(q.spatial()).normalize();
        let row = lambda.row(2);
        assert_eq!(row[0], 0.0);
        for i in 0..3 {
            assert!((row[i + 1] - n[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn com_transform_center_of_momentum_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let p = random_momentum(&mut rng, 8.0);
            let q = random_momentum(&mut rng, 8.0);
            let lambda = match com_transform(&p, &q) {
                Ok(l) => l,
                Err(_) => continue,
            };
            let inv = geometry::invariants(&p, &q).unwrap();
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
            assert!((a[0] - rs).abs() <= 1e-10 * rs);
            for c in &a[1..] {
                assert!(c.abs() <= 1e-10 * rs);
            }
            // -Λ(p-q) = (0,0,0,g)
            assert!(b[0].abs() <= 1e-10 * rs);
            assert!(b[1].abs() <= 1e-10 * rs);
            assert!(b[2].abs() <= 1e-10 * rs);
            assert!((b[3] + inv.g).abs() <= 1e-10 * rs);
        }
    }

    #[test]
    fn inverse_is_isometry_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let p = random_momentum(&mut rng, 5.0);
            let q = random_momentum(&mut rng, 5.0);
            let lambda = match com_transform(&p, &q) {
                Ok(l) => l,
                Err(_) => continue,
            };
            let inv = invert_lorentz(&lambda);
            // Λ^{-1} Λ = id
            for v in [
                [1.0, 0.0, 0.0, 0.0],
                [0.3, -1.2, 0.5, 2.0],
                [2.0, 0.1, -0.7, 0.4],
            ] {
                let w = inv.apply(lambda.apply(v));
                for i in 0..4 {
                    assert!((w[i] - v[i]).abs() < 1e-10);
                }
            }
            assert!(inv.isometry_residual() < 1e-12);
            // round trip (sqrt(s),0,0,0) -> p+q
            let s = geometry::invariants(&p, &q).unwrap().s;
            let back = inv.apply([s.sqrt(), 0.0, 0.0, 0.0]);
            let total = [
                p.energy() + q.energy(),
                p.spatial()[0] + q.spatial()[0],
                p.spatial()[1] + q.spatial()[1],
                p.spatial()[2] + q.spatial()[2],
            ];
            for i in 0..4 {
                assert!((back[i] - total[i]).abs() < 1e-10 * total[0]);
            }
        }
    }

    #[test]
    fn inner_product_invariance_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let p = random_momentum(&mut rng, 6.0);
            let q = random_momentum(&mut rng, 6.0);
            let a = random_momentum(&mut rng, 6.0);
            let b = random_momentum(&mut rng, 6.0);
            let lambda = match com_transform(&p, &q) {
                Ok(l) => l,
                Err(_) => continue,
            };
            let la = lambda.apply(a.as_four());
            let lb = lambda.apply(b.as_four());
            let before = lorentz_inner(&a, &b);
            let after = minkowski_dot(la, lb);
            assert!((before - after).abs() <= 1e-12 * before.abs().max(1.0) * 10.0);
            // boosts keep the energy component on the mass shell
            assert!(la[0] >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn identity_fixes_vectors() {
        let v = [0.4, 1.0, -2.0, 0.25];
        assert_eq!(LorentzMatrix::IDENTITY.apply(v), v);
        let inv = invert_lorentz(&LorentzMatrix::IDENTITY);
        assert_eq!(inv.apply(v), v);
    }
}

//! Closed-form momentum test functions: sums of `polynomial * exp(-alpha |p|^2 - beta p0)`
//! terms with analytic gradients. This class covers Gaussians, polynomial
//! multiples of them and polynomial multiples of `sqrt(J)`.

use crate::equilibrium::{self, Normalization};
use crate::minkowski::Vec3;

/// One monomial `coef * p1^a p2^b p3^c * (p0)^e`.
#[derive(Clone, Copy, Debug)]
pub struct Monomial {
    pub coef: f64,
    pub powers: [u32; 3],
    pub energy_power: i32,
}

/// One product term: a polynomial times `exp(-alpha |p|^2 - beta p0)`.
#[derive(Clone, Debug)]
pub struct Component {
    pub alpha: f64,
    pub beta: f64,
    pub terms: Vec<Monomial>,
}

/// A Schwartz-class momentum function with analytic gradient.
#[derive(Clone, Debug)]
pub struct TestFunction {
    components: Vec<Component>,
    radial: bool,
}

impl TestFunction {
    pub fn zero() -> Self {
        TestFunction {
            components: Vec::new(),
            radial: true,
        }
    }

    /// `exp(-alpha |p|^2)`.
    pub fn gaussian(alpha: f64) -> Self {
        assert!(alpha > 0.0);
        TestFunction {
            components: vec![Component {
                alpha,
                beta: 0.0,
                terms: vec![Monomial {
                    coef: 1.0,
                    powers: [0, 0, 0],
                    energy_power: 0,
                }],
            }],
            radial: true,
        }
    }

    /// Radial polynomial in `|p|^2` times a Gaussian:
    /// `(c0 + c1 |p|^2 + c2 |p|^4 + ...) exp(-alpha |p|^2)`.
    pub fn gaussian_radial_poly(alpha: f64, coeffs: &[f64]) -> Self {
        assert!(alpha > 0.0);
        let mut terms = Vec::new();
        for (k, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            append_r2_power(&mut terms, c, k as u32, 0);
        }
        TestFunction {
            components: vec![Component {
                alpha,
                beta: 0.0,
                terms,
            }],
            radial: true,
        }
    }

    /// `sqrt(J)` in the given normalization.
    pub fn sqrt_juttner(norm: Normalization) -> Self {
        TestFunction {
            components: vec![Component {
                alpha: 0.0,
                beta: 0.5,
                terms: vec![Monomial {
                    coef: 1.0 / norm.constant().sqrt(),
                    powers: [0, 0, 0],
                    energy_power: 0,
                }],
            }],
            radial: true,
        }
    }

    /// `poly(p) * sqrt(J)` for an explicit list of monomials.
    pub fn juttner_poly(terms: Vec<Monomial>, norm: Normalization) -> Self {
        let c = 1.0 / norm.constant().sqrt();
        let radial = terms
            .iter()
            .all(|t| t.powers == [0, 0, 0]);
        TestFunction {
            components: vec![Component {
                alpha: 0.0,
                beta: 0.5,
                terms: terms
                    .into_iter()
                    .map(|mut t| {
                        t.coef *= c;
                        t
                    })
                    .collect(),
            }],
            radial,
        }
    }

    /// The Jüttner density itself, `e^{-p0} / c`.
    pub fn juttner_density(norm: Normalization) -> Self {
        TestFunction {
            components: vec![Component {
                alpha: 0.0,
                beta: 1.0,
                terms: vec![Monomial {
                    coef: 1.0 / norm.constant(),
                    powers: [0, 0, 0],
                    energy_power: 0,
                }],
            }],
            radial: true,
        }
    }

    /// This function multiplied by `sqrt(J)`.
    pub fn times_sqrt_juttner(&self, norm: Normalization) -> Self {
        let c = 1.0 / norm.constant().sqrt();
        let mut out = self.clone();
        for comp in &mut out.components {
            comp.beta += 0.5;
            for t in &mut comp.terms {
                t.coef *= c;
            }
        }
        out
    }

    /// A single monomial times a Gaussian.
    pub fn gaussian_monomial(alpha: f64, powers: [u32; 3], energy_power: i32) -> Self {
        TestFunction {
            components: vec![Component {
                alpha,
                beta: 0.0,
                terms: vec![Monomial {
                    coef: 1.0,
                    powers,
                    energy_power,
                }],
            }],
            radial: powers == [0, 0, 0],
        }
    }

    pub fn is_radial(&self) -> bool {
        self.radial
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for comp in &mut out.components {
            for t in &mut comp.terms {
                t.coef *= c;
            }
        }
        out
    }

    pub fn plus(&self, other: &TestFunction) -> Self {
        let mut components = self.components.clone();
        components.extend(other.components.iter().cloned());
        TestFunction {
            components,
            radial: self.radial && other.radial,
        }
    }

    pub fn minus(&self, other: &TestFunction) -> Self {
        self.plus(&other.scaled(-1.0))
    }

    pub fn eval(&self, p: Vec3) -> f64 {
        let r2 = p.norm_sq();
        let p0 = (1.0 + r2).sqrt();
        let mut total = 0.0;
        for comp in &self.components {
            let envelope = (-comp.alpha * r2 - comp.beta * p0).exp();
            let mut poly = 0.0;
            for t in &comp.terms {
                poly += t.coef
                    * powi_u(p[0], t.powers[0])
                    * powi_u(p[1], t.powers[1])
                    * powi_u(p[2], t.powers[2])
                    * p0.powi(t.energy_power);
            }
            total += poly * envelope;
        }
        total
    }

    /// Analytic gradient.
    pub fn grad(&self, p: Vec3) -> Vec3 {
        let r2 = p.norm_sq();
        let p0 = (1.0 + r2).sqrt();
        let mut out = Vec3::ZERO;
        for comp in &self.components {
            let envelope = (-comp.alpha * r2 - comp.beta * p0).exp();
            for t in &comp.terms {
                let mono = [
                    powi_u(p[0], t.powers[0]),
                    powi_u(p[1], t.powers[1]),
                    powi_u(p[2], t.powers[2]),
                ];
                let e_factor = p0.powi(t.energy_power);
                let value = t.coef * mono[0] * mono[1] * mono[2] * e_factor;
                for i in 0..3 {
                    // polynomial part
                    let dpoly = if t.powers[i] == 0 {
                        0.0
                    } else {
                        t.coef
                            * t.powers[i] as f64
                            * powi_u(p[i], t.powers[i] - 1)
                            * mono[(i + 1) % 3]
                            * mono[(i + 2) % 3]
                            * e_factor
                    };
                    // (p0)^e part: d p0/dp_i = p_i / p0
                    let denergy = value * t.energy_power as f64 * p[i] / (p0 * p0);
                    // envelope part
                    let denv = value * (-2.0 * comp.alpha * p[i] - comp.beta * p[i] / p0);
                    out.0[i] += (dpoly + denergy + denv) * envelope;
                }
            }
        }
        out
    }

    /// Length of the gradient.
    pub fn grad_norm(&self, p: Vec3) -> f64 {
        self.grad(p).norm()
    }
}

fn powi_u(x: f64, n: u32) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        2 => x * x,
        _ => x.powi(n as i32),
    }
}

// appends the multinomial expansion of c * |p|^(2k) * (p0)^e
fn append_r2_power(terms: &mut Vec<Monomial>, c: f64, k: u32, energy_power: i32) {
    match k {
        0 => terms.push(Monomial {
            coef: c,
            powers: [0, 0, 0],
            energy_power,
        }),
        1 => {
            for i in 0..3 {
                let mut powers = [0, 0, 0];
                powers[i] = 2;
                terms.push(Monomial {
                    coef: c,
                    powers,
                    energy_power,
                });
            }
        }
        _ => {
            // |p|^{2k} = sum over (a,b,c), a+b+c = k of k!/(a! b! c!) p1^2a p2^2b p3^2c
            for a in 0..=k {
                for b in 0..=(k - a) {
                    let cc = k - a - b;
                    let coef = c * multinomial(k, a, b, cc);
                    terms.push(Monomial {
                        coef,
                        powers: [2 * a, 2 * b, 2 * cc],
                        energy_power,
                    });
                }
            }
        }
    }
}

fn multinomial(k: u32, a: u32, b: u32, c: u32) -> f64 {
    factorial(k) / (factorial(a) * factorial(b) * factorial(c))
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|v| v as f64).product::<f64>().max(1.0)
}

/// The `sqrt(J) * (A + B . p + C p0)` element used by the hydrodynamic
/// projection.
pub fn hydro_combination(a: f64, b: Vec3, c: f64, norm: Normalization) -> TestFunction {
    let mut terms = vec![
        Monomial {
            coef: a,
            powers: [0, 0, 0],
            energy_power: 0,
        },
        Monomial {
            coef: c,
            powers: [0, 0, 0],
            energy_power: 1,
        },
    ];
    for i in 0..3 {
        if b[i] != 0.0 {
            let mut powers = [0, 0, 0];
            powers[i] = 1;
            terms.push(Monomial {
                coef: b[i],
                powers,
                energy_power: 0,
            });
        }
    }
    TestFunction::juttner_poly(terms, norm)
}

/// The ten-function family used by the coercivity and norm suites: null-space
/// elements, micro-dominated Gaussians and polynomial-weighted variants.
pub fn default_family(norm: Normalization) -> Vec<(String, TestFunction)> {
    let sqrt_j = TestFunction::sqrt_juttner(norm);
    let p0_sqrt_j = TestFunction::juttner_poly(
        vec![Monomial {
            coef: 1.0,
            powers: [0, 0, 0],
            energy_power: 1,
        }],
        norm,
    );
    let p1_sqrt_j = TestFunction::juttner_poly(
        vec![Monomial {
            coef: 1.0,
            powers: [1, 0, 0],
            energy_power: 0,
        }],
        norm,
    );
    vec![
        ("sqrtJ".to_string(), sqrt_j),
        ("p0_sqrtJ".to_string(), p0_sqrt_j),
        ("p1_sqrtJ".to_string(), p1_sqrt_j),
        ("gauss_1".to_string(), TestFunction::gaussian(1.0)),
        ("gauss_half".to_string(), TestFunction::gaussian(0.5)),
        (
            "gauss_wide".to_string(),
            TestFunction::gaussian_radial_poly(0.25, &[1.0]),
        ),
        (
            "r2_gauss".to_string(),
            TestFunction::gaussian_radial_poly(0.7, &[0.0, 1.0]),
        ),
        (
            "poly_gauss".to_string(),
            TestFunction::gaussian_radial_poly(0.6, &[1.0, -0.5, 0.05]),
        ),
        (
            "p1_gauss".to_string(),
            TestFunction::gaussian_monomial(0.8, [1, 0, 0], 0),
        ),
        (
            "p1p2_gauss".to_string(),
            TestFunction::gaussian_monomial(0.9, [1, 1, 0], 0),
        ),
    ]
}

/// Normalization helper re-exported for the family constructors.
pub fn sqrt_norm_constant(norm: Normalization) -> f64 {
    norm.constant().sqrt()
}

pub use equilibrium::Normalization as EquilibriumNormalization;

//! Double-double arithmetic: an unevaluated sum of two f64 giving roughly 32
//! significant digits. Used by the Jacobian scan where the determinant is
//! evaluated near its zero set.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl Dd {
    pub fn new(hi: f64, lo: f64) -> Self {
        let (s, e) = quick_two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::default();
        }
        assert!(self.hi > 0.0, "sqrt of negative double-double");
        // Karp's method: one Newton step on the f64 approximation
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let axdd = Dd::from(ax);
        let err = (self - axdd * axdd).hi * (x * 0.5);
        axdd + Dd::from(err)
    }
}

impl From<f64> for Dd {
    fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, o.hi);
        let p2 = p2 + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from(q2);
        let q3 = r.hi / o.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd::new(s, e + q3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn representable_beyond_f64() {
        // (1 + 2^-53) - 1 collapses to 0 in f64 but not in dd
        let one = Dd::from(1.0);
        let tiny = Dd::from(2.0_f64.powi(-53));
        let diff = (one + tiny) - one;
        assert_eq!(diff.to_f64(), 2.0_f64.powi(-53));
    }

    #[test]
    fn sqrt_two_to_32_digits() {
        let r = Dd::from(2.0).sqrt();
        let sq = r * r;
        assert!((sq - Dd::from(2.0)).abs().to_f64() < 1e-30);
    }

    #[test]
    fn division_inverts_multiplication() {
        let a = Dd::from(3.0) / Dd::from(7.0);
        let b = a * Dd::from(7.0);
        assert!((b - Dd::from(3.0)).abs().to_f64() < 1e-30);
    }

    #[test]
    fn accumulated_sum_keeps_precision() {
        // sum 10^5 copies of 0.1: f64 drifts at ~1e-12, dd stays exact to ~1e-26
        let tenth = Dd::from(1.0) / Dd::from(10.0);
        let mut acc = Dd::default();
        for _ in 0..100_000 {
            acc = acc + tenth;
        }
        assert!((acc - Dd::from(10_000.0)).abs().to_f64() < 1e-25);
    }
}

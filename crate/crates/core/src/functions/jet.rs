//! Order-2 forward-mode jets.

use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::Serialize;

/// Value with first and second derivative with respect to the single variable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Jet2 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet2 {
    pub fn new(v: f64, d1: f64, d2: f64) -> Self {
        Jet2 { v, d1, d2 }
    }

    pub fn constant(c: f64) -> Self {
        Jet2 {
            v: c,
            d1: 0.0,
            d2: 0.0,
        }
    }

    /// The independent variable seeded at `x`.
    pub fn variable(x: f64) -> Self {
        Jet2 {
            v: x,
            d1: 1.0,
            d2: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.d1.is_finite() && self.d2.is_finite()
    }

    /// Composes with a scalar function given its value and first two
    /// derivatives at `self.v`.
    #[inline]
    pub fn chain(self, g: f64, dg: f64, d2g: f64) -> Self {
        Jet2 {
            v: g,
            d1: dg * self.d1,
            d2: d2g * self.d1 * self.d1 + dg * self.d2,
        }
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Self {
        let inv = 1.0 / self.v;
        self.chain(self.v.ln(), inv, -inv * inv)
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.v))
    }

    /// `|u|` away from zero; the derivative jumps at `u = 0`.
    pub fn abs(self) -> Self {
        let s = self.v.signum();
        Jet2 {
            v: self.v.abs(),
            d1: s * self.d1,
            d2: s * self.d2,
        }
    }

    /// `u^c` for a constant exponent.
    pub fn powf(self, c: f64) -> Self {
        if c == 0.0 {
            return Jet2::constant(1.0);
        }
        let u = self.v;
        if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 {
            let n = c as i32;
            let g = u.powi(n);
            let dg = c * u.powi(n - 1);
            let d2g = if n == 1 {
                0.0
            } else {
                c * (c - 1.0) * u.powi(n - 2)
            };
            return self.chain(g, dg, d2g);
        }
        let d2g = if c == 1.0 {
            0.0
        } else {
            c * (c - 1.0) * u.powf(c - 2.0)
        };
        self.chain(u.powf(c), c * u.powf(c - 1.0), d2g)
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v + o.v,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v - o.v,
            d1: self.d1 - o.d1,
            d2: self.d2 - o.d2,
        }
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, o: Jet2) -> Jet2 {
        let q = self.v / o.v;
        let d1 = (self.d1 - q * o.d1) / o.v;
        let d2 = (self.d2 - 2.0 * d1 * o.d1 - q * o.d2) / o.v;
        Jet2 { v: q, d1, d2 }
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2 {
            v: -self.v,
            d1: -self.d1,
            d2: -self.d2,
        }
    }
}

use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Second-order forward-mode number in the two directions `x` and `v`.
///
/// Carries `f`, `f_x`, `f_v`, `f_xx`, `f_xv`, `f_vv`. There is a single mixed
/// slot, so `f_xv == f_vx` holds structurally.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HyperDual {
    pub value: f64,
    pub d_x: f64,
    pub d_v: f64,
    pub d_xx: f64,
    pub d_xv: f64,
    pub d_vv: f64,
}

impl HyperDual {
    pub const fn constant(value: f64) -> Self {
        Self { value, d_x: 0.0, d_v: 0.0, d_xx: 0.0, d_xv: 0.0, d_vv: 0.0 }
    }

    /// The independent variable `x` at `value`.
    pub const fn var_x(value: f64) -> Self {
        Self { d_x: 1.0, ..Self::constant(value) }
    }

    /// The independent variable `v` at `value`.
    pub const fn var_v(value: f64) -> Self {
        Self { d_v: 1.0, ..Self::constant(value) }
    }

    /// Applies a scalar function given its value and first two derivatives at `self.value`.
    pub fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        Self {
            value: f0,
            d_x: f1 * self.d_x,
            d_v: f1 * self.d_v,
            d_xx: f1 * self.d_xx + f2 * self.d_x * self.d_x,
            d_xv: f1 * self.d_xv + f2 * self.d_x * self.d_v,
            d_vv: f1 * self.d_vv + f2 * self.d_v * self.d_v,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.d_x == 0.0 && self.d_v == 0.0 && self.d_xx == 0.0 && self.d_xv == 0.0 && self.d_vv == 0.0
    }

    pub fn is_finite(&self) -> bool {
        [self.value, self.d_x, self.d_v, self.d_xx, self.d_xv, self.d_vv].iter().all(|c| c.is_finite())
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    /// Natural log; caller guarantees `value > 0`.
    pub fn ln(self) -> Self {
        let inv = 1.0 / self.value;
        self.chain(self.value.ln(), inv, -inv * inv)
    }

    /// Square root; caller guarantees `value > 0`.
    pub fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.value))
    }

    pub fn recip(self) -> Self {
        let inv = 1.0 / self.value;
        self.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }

    /// Integer power, valid for any base (a zero base with `n < 0` yields infinities).
    pub fn powi(self, n: i32) -> Self {
        let a = self.value;
        match n {
            0 => Self::constant(1.0),
            1 => self,
            _ => {
                let nf = n as f64;
                self.chain(a.powi(n), nf * a.powi(n - 1), nf * (nf - 1.0) * a.powi(n - 2))
            }
        }
    }

    /// Constant real power; caller guarantees `value > 0`.
    pub fn powf(self, p: f64) -> Self {
        let a = self.value;
        self.chain(a.powf(p), p * a.powf(p - 1.0), p * (p - 1.0) * a.powf(p - 2.0))
    }

    /// `self^exponent` through `exp(exponent * ln self)`; caller guarantees `value > 0`.
    pub fn pow(self, exponent: Self) -> Self {
        (exponent * self.ln()).exp()
    }
}

impl From<f64> for HyperDual {
    fn from(value: f64) -> Self {
        Self::constant(value)
    }
}

impl Add for HyperDual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            value: self.value + o.value,
            d_x: self.d_x + o.d_x,
            d_v: self.d_v + o.d_v,
            d_xx: self.d_xx + o.d_xx,
            d_xv: self.d_xv + o.d_xv,
            d_vv: self.d_vv + o.d_vv,
        }
    }
}

impl Sub for HyperDual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            value: self.value - o.value,
            d_x: self.d_x - o.d_x,
            d_v: self.d_v - o.d_v,
            d_xx: self.d_xx - o.d_xx,
            d_xv: self.d_xv - o.d_xv,
            d_vv: self.d_vv - o.d_vv,
        }
    }
}

impl Mul for HyperDual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            value: self.value * o.value,
            d_x: self.d_x * o.value + self.value * o.d_x,
            d_v: self.d_v * o.value + self.value * o.d_v,
            d_xx: self.d_xx * o.value + 2.0 * self.d_x * o.d_x + self.value * o.d_xx,
            d_xv: self.d_xv * o.value + self.d_x * o.d_v + self.d_v * o.d_x + self.value * o.d_xv,
            d_vv: self.d_vv * o.value + 2.0 * self.d_v * o.d_v + self.value * o.d_vv,
        }
    }
}

impl Div for HyperDual {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Neg for HyperDual {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            value: -self.value,
            d_x: -self.d_x,
            d_v: -self.d_v,
            d_xx: -self.d_xx,
            d_xv: -self.d_xv,
            d_vv: -self.d_vv,
        }
    }
}

impl Add<f64> for HyperDual {
    type Output = Self;
    fn add(self, o: f64) -> Self {
        Self { value: self.value + o, ..self }
    }
}

impl Sub<f64> for HyperDual {
    type Output = Self;
    fn sub(self, o: f64) -> Self {
        Self { value: self.value - o, ..self }
    }
}

impl Mul<f64> for HyperDual {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        Self {
            value: self.value * o,
            d_x: self.d_x * o,
            d_v: self.d_v * o,
            d_xx: self.d_xx * o,
            d_xv: self.d_xv * o,
            d_vv: self.d_vv * o,
        }
    }
}

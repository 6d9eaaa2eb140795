//! Truncated Taylor jets in one variable, used to differentiate cut-off
//! profiles exactly up to third order.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub const ORDER: usize = 4;

/// Normalized Taylor coefficients `c_k = f^{(k)}(x₀) / k!`, `k < ORDER`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet(pub [f64; ORDER]);

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; ORDER];
        c[0] = v;
        Jet(c)
    }

    pub fn variable(x: f64) -> Self {
        let mut c = [0.0; ORDER];
        c[0] = x;
        c[1] = 1.0;
        Jet(c)
    }

    pub fn value(&self) -> f64 {
        self.0[0]
    }

    /// `k`-th derivative.
    pub fn derivative(&self, k: usize) -> f64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.0[k] * fact
    }

    pub fn exp(self) -> Self {
        let mut e = [0.0; ORDER];
        e[0] = self.0[0].exp();
        for k in 1..ORDER {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * self.0[j] * e[k - j];
            }
            e[k] = s / k as f64;
        }
        Jet(e)
    }

    pub fn recip(self) -> Self {
        let mut r = [0.0; ORDER];
        r[0] = 1.0 / self.0[0];
        for k in 1..ORDER {
            let mut s = 0.0;
            for j in 1..=k {
                s += self.0[j] * r[k - j];
            }
            r[k] = -s * r[0];
        }
        Jet(r)
    }

    pub fn scale(self, a: f64) -> Self {
        Jet(self.0.map(|c| c * a))
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut c = self.0;
        for k in 0..ORDER {
            c[k] += o.0[k];
        }
        Jet(c)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; ORDER];
        for i in 0..ORDER {
            for j in 0..ORDER - i {
                c[i + j] += self.0[i] * o.0[j];
            }
        }
        Jet(c)
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, o: f64) -> Jet {
        let mut c = self.0;
        c[0] += o;
        Jet(c)
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, o: f64) -> Jet {
        self + (-o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_and_division() {
        let x = Jet::variable(0.3);
        let e = (x * x).exp();
        // d/dx e^{x²} = 2x e^{x²}
        assert!((e.derivative(1) - 0.6 * 0.09f64.exp()).abs() < 1e-14);
        let q = Jet::constant(1.0) / x;
        assert!((q.derivative(3) + 6.0 / 0.3f64.powi(4)).abs() < 1e-9);
    }
}

//! Closed-form scale functions from a [`RootSet`]:
//! `W(x) = e^{Phi x}/psi'(Phi) - sum_i C_i e^{-xi_i x}` for `x >= 0`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::levy_model::{LevyModelSpec, RootSet};

#[derive(Debug, Clone, Copy)]
struct Term {
    xi: Complex64,
    c: Complex64,
    /// 1 for a real root, 2 for the upper member of a conjugate pair.
    weight: f64,
}

#[derive(Debug, Clone)]
pub struct ScaleFunctionRep {
    pub roots: RootSet,
    pub q: f64,
    terms: Vec<Term>,
}

/// All scale-function quantities at one point, kept as the growing part
/// `e^{Phi x}/psi'(Phi)` plus the bounded remainders. Splitting lets callers
/// cancel the growth analytically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalePoint {
    pub x: f64,
    pub phi: f64,
    pub q: f64,
    /// `e^{Phi x}/psi'(Phi)`, zero for `x < 0`.
    pub growth: f64,
    pub w_rest: f64,
    pub wp_rest: f64,
    pub wpp_rest: f64,
    pub wbar_rest: f64,
    pub wbar2_rest: f64,
}

impl ScalePoint {
    pub fn w(&self) -> f64 {
        self.growth + self.w_rest
    }
    pub fn wp(&self) -> f64 {
        self.phi * self.growth + self.wp_rest
    }
    pub fn wpp(&self) -> f64 {
        self.phi * self.phi * self.growth + self.wpp_rest
    }
    /// `int_0^x W`.
    pub fn w_bar(&self) -> f64 {
        self.growth / self.phi + self.wbar_rest
    }
    /// `int_0^x int_0^y W`.
    pub fn w_bar2(&self) -> f64 {
        self.growth / (self.phi * self.phi) + self.wbar2_rest
    }
    pub fn z(&self) -> f64 {
        1.0 + self.q * self.w_bar()
    }
    pub fn z_bar(&self) -> f64 {
        self.x + self.q * self.w_bar2()
    }
}

impl ScaleFunctionRep {
    pub fn new(roots: RootSet) -> Self {
        let terms = roots
            .xi
            .iter()
            .zip(&roots.coeffs)
            .filter(|(xi, _)| xi.im >= 0.0)
            .map(|(&xi, &c)| Term { xi, c, weight: if xi.im == 0.0 { 1.0 } else { 2.0 } })
            .collect();
        let q = roots.q;
        ScaleFunctionRep { roots, q, terms }
    }

    pub fn from_model(model: &LevyModelSpec) -> Result<Self> {
        Ok(Self::new(model.find_roots()?))
    }

    pub fn phi_q(&self) -> f64 {
        self.roots.phi_q
    }
    pub fn psi_prime_at_phi(&self) -> f64 {
        self.roots.psi_prime_at_phi
    }
    pub fn sigma(&self) -> f64 {
        self.roots.sigma
    }
    pub fn delta(&self) -> f64 {
        self.roots.delta
    }

    pub fn eval(&self, x: f64) -> ScalePoint {
        let phi = self.phi_q();
        let pp = self.psi_prime_at_phi();
        let mut p = ScalePoint {
            x,
            phi,
            q: self.q,
            growth: 0.0,
            w_rest: 0.0,
            wp_rest: 0.0,
            wpp_rest: 0.0,
            wbar_rest: 0.0,
            wbar2_rest: 0.0,
        };
        if !(x >= 0.0) {
            return p;
        }
        p.growth = (phi * x).exp() / pp;
        p.wbar_rest = -1.0 / (phi * pp);
        p.wbar2_rest = -(1.0 + phi * x) / (phi * phi * pp);
        // Once the decaying exponentials are negligible next to the growth,
        // drop them outright.
        let sub = self
            .terms
            .iter()
            .map(|t| t.c.norm() * (-t.xi.re * x).exp() * (1.0 + t.xi.norm_sqr()))
            .fold(0.0, f64::max);
        let negligible = x > 0.0 && sub < 1e-16 * p.growth;
        for t in &self.terms {
            let e = if negligible { Complex64::new(0.0, 0.0) } else { (-t.xi * x).exp() };
            let ce = t.c * e;
            let one_minus = (1.0 - e) / t.xi;
            p.w_rest -= t.weight * ce.re;
            p.wp_rest += t.weight * (ce * t.xi).re;
            p.wpp_rest -= t.weight * (ce * t.xi * t.xi).re;
            p.wbar_rest -= t.weight * (t.c * one_minus).re;
            p.wbar2_rest -= t.weight * (t.c * (x - one_minus) / t.xi).re;
        }
        p
    }

    pub fn w(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.eval(x).w()
    }

    /// `W'(x)`; at `x = 0` this is the right limit `W'(0+)`.
    pub fn w_prime(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Err(Error::DomainError(format!("W' requested at x = {x} < 0")));
        }
        Ok(self.eval(x).wp())
    }

    pub fn w_second(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Err(Error::DomainError(format!("W'' requested at x = {x} <= 0")));
        }
        Ok(self.eval(x).wpp())
    }

    pub fn w_bar(&self, x: f64) -> f64 {
        self.eval(x).w_bar()
    }
    pub fn w_bar2(&self, x: f64) -> f64 {
        self.eval(x).w_bar2()
    }
    pub fn z(&self, x: f64) -> f64 {
        self.eval(x).z()
    }
    pub fn z_bar(&self, x: f64) -> f64 {
        self.eval(x).z_bar()
    }

    /// `W_Phi(x) = e^{-Phi x} W(x)`, evaluated without forming `e^{Phi x}`.
    pub fn w_phi(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let phi = self.phi_q();
        let rest: f64 = self
            .terms
            .iter()
            .map(|t| t.weight * (t.c * (-(t.xi + phi) * x).exp()).re)
            .sum();
        1.0 / self.psi_prime_at_phi() - rest
    }

    /// `W'(x)/W(x)` for `x > 0`, stable for large `x`. Infinite at `0` when
    /// `W(0) = 0`.
    pub fn w_ratio(&self, x: f64) -> f64 {
        let phi = self.phi_q();
        let pp = self.psi_prime_at_phi();
        let (mut num, mut den) = (phi / pp, 1.0 / pp);
        for t in &self.terms {
            let ce = t.c * (-(t.xi + phi) * x).exp();
            num += t.weight * (ce * t.xi).re;
            den -= t.weight * ce.re;
        }
        if den <= 0.0 {
            return f64::INFINITY;
        }
        num / den
    }
}

//! Spectrally one-sided Levy processes with phase-type jumps.
//!
//! Both sides share one Laplace exponent `psi`: for a spectrally positive
//! model it is the exponent of the dual process `-X`, which is spectrally
//! negative with the same `(delta, sigma, kappa, jumps)`.

pub mod matrix_exp;
pub mod phase_type;
pub mod poly;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use matrix_exp::matrix_exp;
pub use phase_type::{DensityExpansion, JumpSampler, PhaseTypeDist};
use poly::{aberth_roots, eval_with_derivative, min_pairwise_distance, CharPoly};

/// Condition number above which `sI - T` is reported as singular.
pub const MAX_RESOLVENT_COND: f64 = 1e14;
/// Minimum separation between distinct roots.
pub const MIN_ROOT_GAP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "SN")]
    SpectrallyNegative,
    #[serde(rename = "SP")]
    SpectrallyPositive,
}

impl Side {
    pub fn tag(self) -> &'static str {
        match self {
            Side::SpectrallyNegative => "SN",
            Side::SpectrallyPositive => "SP",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyModelSpec {
    pub side: Side,
    pub sigma: f64,
    pub delta: f64,
    pub kappa: f64,
    pub jumps: PhaseTypeDist,
    pub q: f64,
}

impl LevyModelSpec {
    pub fn new(side: Side, sigma: f64, delta: f64, kappa: f64, jumps: PhaseTypeDist, q: f64) -> Result<Self> {
        let model = LevyModelSpec { side, sigma, delta, kappa, jumps, q };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("sigma", self.sigma), ("delta", self.delta), ("kappa", self.kappa), ("q", self.q)] {
            if !v.is_finite() {
                return Err(Error::InvalidModel(format!("{name} must be finite")));
            }
        }
        if self.q <= 0.0 {
            return Err(Error::InvalidModel(format!("discount rate q = {} must be positive", self.q)));
        }
        if self.sigma < 0.0 {
            return Err(Error::InvalidModel("sigma must be nonnegative".into()));
        }
        if self.kappa <= 0.0 {
            return Err(Error::InvalidModel("jump rate kappa must be positive".into()));
        }
        if self.sigma == 0.0 && self.delta <= 0.0 {
            return Err(Error::InvalidModel(
                "bounded-variation model needs delta > 0, otherwise the process is monotone".into(),
            ));
        }
        Ok(())
    }

    /// `psi(s) = delta s + sigma^2 s^2 / 2 + kappa (alpha (sI - T)^{-1} t - 1)`.
    pub fn laplace_exponent(&self, s: Complex64) -> Result<Complex64> {
        let r = self.resolvent_exit(s)?;
        let a = self.jumps.alpha().map(|v| Complex64::new(v, 0.0));
        Ok(self.delta * s + 0.5 * self.sigma * self.sigma * s * s + self.kappa * (a.dot(&r) - 1.0))
    }

    /// Real-argument convenience wrapper; NaN at poles.
    pub fn psi(&self, s: f64) -> f64 {
        self.laplace_exponent(Complex64::new(s, 0.0)).map(|v| v.re).unwrap_or(f64::NAN)
    }

    /// `psi'(s) = delta + sigma^2 s - kappa alpha (sI - T)^{-2} t`.
    pub fn psi_prime(&self, s: Complex64) -> Result<Complex64> {
        let (lu, _) = self.resolvent_lu(s)?;
        let r = lu.solve(&self.exit_c()).expect("checked nonsingular");
        let r2 = lu.solve(&r).expect("checked nonsingular");
        let a = self.jumps.alpha().map(|v| Complex64::new(v, 0.0));
        Ok(self.delta + self.sigma * self.sigma * s - self.kappa * a.dot(&r2))
    }

    /// `mu = psi'(0+) = delta - kappa E[Z]`.
    pub fn mean_drift(&self) -> f64 {
        self.delta - self.kappa * self.jumps.mean()
    }

    fn exit_c(&self) -> DVector<Complex64> {
        self.jumps.exit_vector().map(|v| Complex64::new(v, 0.0))
    }

    fn resolvent_lu(&self, s: Complex64) -> Result<(nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>, f64)> {
        let m = self.jumps.phases();
        let t = self.jumps.sub_generator();
        let mat = DMatrix::from_fn(m, m, |i, j| {
            let d = if i == j { s } else { Complex64::new(0.0, 0.0) };
            d - t[(i, j)]
        });
        let norm1 = |a: &DMatrix<Complex64>| {
            (0..a.ncols())
                .map(|j| a.column(j).iter().map(|v| v.norm()).sum::<f64>())
                .fold(0.0, f64::max)
        };
        let lu = mat.clone().lu();
        let cond = match lu.try_inverse() {
            Some(inv) => norm1(&mat) * norm1(&inv),
            None => f64::INFINITY,
        };
        if !(cond <= MAX_RESOLVENT_COND) {
            return Err(Error::SingularResolvent { re: s.re, im: s.im, cond });
        }
        Ok((mat.lu(), cond))
    }

    fn resolvent_exit(&self, s: Complex64) -> Result<DVector<Complex64>> {
        let (lu, _) = self.resolvent_lu(s)?;
        Ok(lu.solve(&self.exit_c()).expect("checked nonsingular"))
    }

    /// Ascending coefficients of `(psi(s) - q) det(sI - T)`.
    pub fn root_polynomial(&self) -> Vec<f64> {
        let cp = CharPoly::new(self.jumps.sub_generator());
        let numer = cp.bilinear(self.jumps.alpha(), self.jumps.exit_vector());
        let quad = [-self.kappa - self.q, self.delta, 0.5 * self.sigma * self.sigma];
        let mut p = poly::add(&poly::mul(&quad, &cp.coeffs), &numer.iter().map(|c| c * self.kappa).collect::<Vec<_>>());
        while p.len() > 1 && *p.last().unwrap() == 0.0 {
            p.pop();
        }
        p
    }

    /// `Phi(q)`: the positive root of `psi(s) = q`, by bisection.
    pub fn phi_q(&self) -> f64 {
        let f = |s: f64| self.psi(s) - self.q;
        let mut lo = 0.0;
        let mut hi = 1.0;
        while f(hi) <= 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut s = 0.5 * (lo + hi);
        // One Newton step removes the residual bisection error.
        if let Ok(d) = self.psi_prime(Complex64::new(s, 0.0)) {
            let next = s - f(s) / d.re;
            if next > lo - 1e-12 && next < hi + 1e-12 {
                s = next;
            }
        }
        assert!(s > 0.0, "Phi(q) must be positive for q > 0");
        s
    }

    /// Roots of `psi(s) = q` and the exponential-sum coefficients.
    pub fn find_roots(&self) -> Result<RootSet> {
        self.validate()?;
        self.jumps.distinct_eigenvalues()?;

        let p = self.root_polynomial();
        let mut roots = aberth_roots(&p, 1e-15, 2000)?;
        for z in roots.iter_mut() {
            *z = self.polish(*z, &p);
        }
        let phi_q = self.phi_q();
        let k = roots
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - phi_q).norm().total_cmp(&(b.1 - phi_q).norm()))
            .map(|(i, _)| i)
            .ok_or_else(|| Error::RootFinding("no roots".into()))?;
        let removed = roots.remove(k);
        if (removed - phi_q).norm() > 1e-6 * (1.0 + phi_q) {
            return Err(Error::RootFinding(format!(
                "polynomial root {removed} does not match Phi(q) = {phi_q}"
            )));
        }
        let mut all = roots.clone();
        all.push(Complex64::new(phi_q, 0.0));
        let distance = min_pairwise_distance(&all);
        if distance < MIN_ROOT_GAP {
            return Err(Error::RepeatedRoots { distance });
        }
        if let Some(bad) = roots.iter().find(|z| z.re >= 0.0) {
            return Err(Error::RootFinding(format!("root {bad} has nonnegative real part")));
        }

        let mut xi: Vec<Complex64> = symmetrize(roots).into_iter().map(|z| -z).collect();
        xi.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let coeffs = xi
            .iter()
            .map(|&x| {
                let d = self.psi_prime(-x)?;
                Ok(-1.0 / d)
            })
            .collect::<Result<Vec<_>>>()?;
        let psi_prime_at_phi = self.psi_prime(Complex64::new(phi_q, 0.0))?.re;
        Ok(RootSet { phi_q, psi_prime_at_phi, xi, coeffs, sigma: self.sigma, delta: self.delta, q: self.q })
    }

    /// Newton polish on `psi(s) - q`, falling back to the polynomial near
    /// poles of `psi`.
    fn polish(&self, mut z: Complex64, p: &[f64]) -> Complex64 {
        for _ in 0..4 {
            let step = match (self.laplace_exponent(z), self.psi_prime(z)) {
                (Ok(v), Ok(d)) if d.norm() > 0.0 => (v - self.q) / d,
                _ => {
                    let (v, d) = eval_with_derivative(p, z);
                    if d.norm() == 0.0 {
                        break;
                    }
                    v / d
                }
            };
            if !step.is_finite() {
                break;
            }
            z -= step;
            if step.norm() <= 1e-16 * (1.0 + z.norm()) {
                break;
            }
        }
        z
    }
}

/// Snaps nearly-real roots onto the axis and makes complex roots exact
/// conjugate pairs.
fn symmetrize(mut roots: Vec<Complex64>) -> Vec<Complex64> {
    let tiny = |z: &Complex64| z.im.abs() <= 1e-10 * (1.0 + z.re.abs());
    let mut out = Vec::with_capacity(roots.len());
    for z in roots.iter().filter(|z| tiny(z)) {
        out.push(Complex64::new(z.re, 0.0));
    }
    roots.retain(|z| !tiny(z));
    let (upper, mut lower): (Vec<Complex64>, Vec<Complex64>) = roots.into_iter().partition(|z| z.im > 0.0);
    for u in upper {
        let j = lower
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - u.conj()).norm().total_cmp(&(b.1 - u.conj()).norm()))
            .map(|(j, _)| j);
        let mid = match j {
            Some(j) => {
                let l = lower.swap_remove(j);
                Complex64::new(0.5 * (u.re + l.re), 0.5 * (u.im - l.im))
            }
            None => u,
        };
        out.push(mid);
        out.push(mid.conj());
    }
    out
}

/// `Phi(q)`, `psi'(Phi(q))`, the roots `-xi_i` of `psi(s) = q` with negative
/// real part and the coefficients `C_i = -1/psi'(-xi_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    pub phi_q: f64,
    pub psi_prime_at_phi: f64,
    pub xi: Vec<Complex64>,
    pub coeffs: Vec<Complex64>,
    pub sigma: f64,
    pub delta: f64,
    pub q: f64,
}

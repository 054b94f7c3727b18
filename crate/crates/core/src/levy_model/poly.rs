//! Real polynomials (ascending coefficients), characteristic polynomials and
//! simultaneous root finding.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Multiplies two polynomials given by ascending coefficients.
pub fn mul(p: &[f64], r: &[f64]) -> Vec<f64> {
    if p.is_empty() || r.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; p.len() + r.len() - 1];
    for (i, &a) in p.iter().enumerate() {
        for (j, &b) in r.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

pub fn add(p: &[f64], r: &[f64]) -> Vec<f64> {
    let n = p.len().max(r.len());
    (0..n)
        .map(|i| p.get(i).copied().unwrap_or(0.0) + r.get(i).copied().unwrap_or(0.0))
        .collect()
}

/// Horner evaluation of `p` and `p'` at a complex point.
pub fn eval_with_derivative(p: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut val = Complex64::new(0.0, 0.0);
    let mut der = Complex64::new(0.0, 0.0);
    for &c in p.iter().rev() {
        der = der * z + val;
        val = val * z + c;
    }
    (val, der)
}

/// Characteristic polynomial `det(sI - A)` together with the adjugate
/// expansion `adj(sI - A) = sum_k M_k s^(m-k)`, via Faddeev-LeVerrier.
pub struct CharPoly {
    /// Ascending coefficients, monic of degree `m`.
    pub coeffs: Vec<f64>,
    /// `adjugate[k - 1] = M_k`, the coefficient of `s^(m-k)`.
    pub adjugate: Vec<DMatrix<f64>>,
}

impl CharPoly {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let m = a.nrows();
        let ident = DMatrix::<f64>::identity(m, m);
        // c[j] is the coefficient of s^j.
        let mut c = vec![0.0; m + 1];
        c[m] = 1.0;
        let mut adjugate = Vec::with_capacity(m);
        let mut prev = DMatrix::<f64>::zeros(m, m);
        for k in 1..=m {
            let mk = a * &prev + &ident * c[m - k + 1];
            c[m - k] = -(a * &mk).trace() / k as f64;
            adjugate.push(mk.clone());
            prev = mk;
        }
        CharPoly { coeffs: c, adjugate }
    }

    /// Coefficients (ascending) of the scalar polynomial `u^T adj(sI - A) v`.
    pub fn bilinear(&self, u: &DVector<f64>, v: &DVector<f64>) -> Vec<f64> {
        let m = self.adjugate.len();
        let mut out = vec![0.0; m];
        for (idx, mk) in self.adjugate.iter().enumerate() {
            let k = idx + 1;
            out[m - k] = u.dot(&(mk * v));
        }
        out
    }
}

/// All complex roots of `p` by Aberth-Ehrlich iteration, started from points
/// on a circle around the centroid of the roots.
pub fn aberth_roots(p: &[f64], tol: f64, max_iter: usize) -> Result<Vec<Complex64>> {
    let mut p = p.to_vec();
    while p.len() > 1 && *p.last().unwrap() == 0.0 {
        p.pop();
    }
    let n = p.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = p[n];
    let centroid = -p[n - 1] / (n as f64 * lead);
    // Fujiwara bound on |root|, used as the seeding radius.
    let radius = (0..n)
        .map(|i| (p[i] / lead).abs().powf(1.0 / (n - i) as f64))
        .fold(0.0, f64::max)
        .max(1e-3)
        * 2.0;
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            Complex64::new(centroid, 0.0) + Complex64::from_polar(radius, theta)
        })
        .collect();

    let abs_coeffs: Vec<f64> = p.iter().map(|c| c.abs()).collect();
    let mut done = vec![false; n];
    for _ in 0..max_iter {
        let mut max_step: f64 = 0.0;
        for k in 0..n {
            if done[k] {
                continue;
            }
            let (val, der) = eval_with_derivative(&p, z[k]);
            // Stop moving a root once |p(z)| is at the rounding level of
            // the evaluation itself.
            let noise = eval_with_derivative(&abs_coeffs, Complex64::new(z[k].norm(), 0.0)).0.re * 8.0 * f64::EPSILON;
            if val.norm() <= noise {
                done[k] = true;
                continue;
            }
            let ratio = val / der;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| (z[k] - z[j]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            z[k] -= step;
            max_step = max_step.max(step.norm() / (1.0 + z[k].norm()));
        }
        if max_step < tol || done.iter().all(|&d| d) {
            return Ok(z);
        }
        if z.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    Err(Error::RootFinding(format!(
        "Aberth iteration did not converge for a degree-{n} polynomial"
    )))
}

/// Smallest pairwise distance in a list of points (infinity for fewer than two).
pub fn min_pairwise_distance(z: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            best = best.min((z[i] - z[j]).norm());
        }
    }
    best
}

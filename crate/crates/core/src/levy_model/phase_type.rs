use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use super::matrix_exp::matrix_exp;
use super::poly::{aberth_roots, eval_with_derivative, min_pairwise_distance, CharPoly};
use crate::error::{Error, Result};

/// Largest positive row sum of `T` that is treated as rounding noise in the
/// printed matrix and absorbed into the diagonal.
pub const ROW_SUM_REPAIR_TOL: f64 = 1e-3;
/// Relative separation below which two eigenvalues of `T` count as equal.
pub const EIGEN_GAP: f64 = 1e-6;

/// Phase-type law `(m, alpha, T)`: absorption time of a Markov chain with
/// initial law `alpha` and sub-generator `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTypeDist {
    alpha: DVector<f64>,
    t: DMatrix<f64>,
    exit: DVector<f64>,
}

impl PhaseTypeDist {
    /// Validates and builds the law. Rows of `T` whose sum is positive but
    /// below [`ROW_SUM_REPAIR_TOL`] get the excess removed from the diagonal.
    pub fn new(alpha: Vec<f64>, t_rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = alpha.len();
        if m == 0 {
            return Err(Error::InvalidModel("phase-type needs at least one phase".into()));
        }
        if t_rows.len() != m || t_rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidModel(format!("T must be {m}x{m} to match alpha")));
        }
        if alpha.iter().chain(t_rows.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite phase-type entry".into()));
        }
        if alpha.iter().any(|&a| a < 0.0) {
            return Err(Error::InvalidModel("alpha has a negative entry".into()));
        }
        let total: f64 = alpha.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!("alpha sums to {total}, not 1")));
        }
        let mut t = DMatrix::from_fn(m, m, |i, j| t_rows[i][j]);
        for i in 0..m {
            if t[(i, i)] >= 0.0 {
                return Err(Error::InvalidModel(format!("T[{i}][{i}] must be negative")));
            }
            for j in 0..m {
                if i != j && t[(i, j)] < 0.0 {
                    return Err(Error::InvalidModel(format!("T[{i}][{j}] must be nonnegative")));
                }
            }
            let row_sum: f64 = t.row(i).sum();
            if row_sum > ROW_SUM_REPAIR_TOL {
                return Err(Error::InvalidModel(format!("row {i} of T sums to {row_sum} > 0")));
            }
            if row_sum > 0.0 {
                t[(i, i)] -= row_sum;
            }
        }
        let exit = DVector::from_fn(m, |i, _| (-t.row(i).sum()).max(0.0));
        let max_re = t
            .clone()
            .complex_eigenvalues()
            .iter()
            .map(|e| e.re)
            .fold(f64::NEG_INFINITY, f64::max);
        if !(max_re < 0.0) {
            return Err(Error::InvalidModel(format!(
                "T is not transient (max eigenvalue real part {max_re})"
            )));
        }
        Ok(PhaseTypeDist { alpha: DVector::from_vec(alpha), t, exit })
    }

    /// Exponential law with rate `eta` (one phase).
    pub fn exponential(eta: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![vec![-eta]])
    }

    pub fn phases(&self) -> usize {
        self.alpha.len()
    }
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }
    pub fn sub_generator(&self) -> &DMatrix<f64> {
        &self.t
    }
    pub fn exit_vector(&self) -> &DVector<f64> {
        &self.exit
    }

    /// `E[Z] = -alpha T^{-1} 1`.
    pub fn mean(&self) -> f64 {
        let ones = DVector::from_element(self.phases(), 1.0);
        let sol = self.t.clone().lu().solve(&ones).expect("T is nonsingular");
        -self.alpha.dot(&sol)
    }

    /// Density `alpha exp(Tz) t` evaluated through the matrix exponential.
    pub fn density(&self, z: f64) -> f64 {
        if z < 0.0 {
            return 0.0;
        }
        let e = matrix_exp(&(&self.t * z));
        self.alpha.dot(&(e * &self.exit)).max(0.0)
    }

    /// Survival function `P(Z > z) = alpha exp(Tz) 1`.
    pub fn tail(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 1.0;
        }
        let ones = DVector::from_element(self.phases(), 1.0);
        let e = matrix_exp(&(&self.t * z));
        self.alpha.dot(&(e * ones)).clamp(0.0, 1.0)
    }

    /// Smallest `z` (on a doubling grid) with `P(Z > z) < eps`.
    pub fn tail_cutoff(&self, eps: f64) -> f64 {
        let mut z = self.mean().max(1e-3);
        while self.tail(z) >= eps {
            z *= 2.0;
        }
        z
    }

    /// Eigenvalues of `T` (roots of `det(sI - T)`).
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        aberth_roots(&CharPoly::new(&self.t).coeffs, 1e-15, 1000)
    }

    /// Eigenvalues of `T`, rejected when two of them coincide. A double
    /// eigenvalue comes back from the root finder split by about
    /// `sqrt(eps) |lambda|`, so the gap is measured relative to the spectrum.
    pub fn distinct_eigenvalues(&self) -> Result<Vec<Complex64>> {
        let eig = self.eigenvalues()?;
        let scale = eig.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let gap = min_pairwise_distance(&eig);
        if gap < EIGEN_GAP * scale {
            return Err(Error::InvalidModel(format!("eigenvalues of T are not distinct (gap {gap:e})")));
        }
        Ok(eig)
    }

    /// Density as an exponential sum over the eigenvalues of `T`. Requires the
    /// eigenvalues to be distinct.
    pub fn density_expansion(&self) -> Result<DensityExpansion> {
        let cp = CharPoly::new(&self.t);
        let eig = self.distinct_eigenvalues()?;
        let numer = cp.bilinear(&self.alpha, &self.exit);
        let terms = eig
            .into_iter()
            .map(|lam| {
                let (n, _) = eval_with_derivative(&numer, lam);
                let (_, dd) = eval_with_derivative(&cp.coeffs, lam);
                (lam, n / dd)
            })
            .collect();
        Ok(DensityExpansion { terms })
    }

    /// Precomputed embedded-chain tables for exact sampling.
    pub fn sampler(&self) -> JumpSampler {
        let m = self.phases();
        let cumulative = |w: Vec<f64>| {
            let total: f64 = w.iter().sum();
            let mut acc = 0.0;
            w.into_iter()
                .map(|x| {
                    acc += x / total;
                    acc
                })
                .collect::<Vec<f64>>()
        };
        let initial = cumulative(self.alpha.iter().copied().collect());
        let mut rates = Vec::with_capacity(m);
        let mut next = Vec::with_capacity(m);
        for i in 0..m {
            let rate = -self.t[(i, i)];
            rates.push(rate);
            // Entries 0..m are phases, entry m is absorption.
            let mut w: Vec<f64> = (0..m).map(|j| if j == i { 0.0 } else { self.t[(i, j)] }).collect();
            w.push(self.exit[i]);
            next.push(cumulative(w));
        }
        JumpSampler { initial, rates, next }
    }
}

fn pick(cum: &[f64], u: f64) -> usize {
    cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1)
}

/// Exact sampler of a phase-type variable by simulating the absorbing chain.
#[derive(Debug, Clone)]
pub struct JumpSampler {
    initial: Vec<f64>,
    rates: Vec<f64>,
    next: Vec<Vec<f64>>,
}

impl JumpSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let m = self.rates.len();
        let mut phase = pick(&self.initial, rng.random::<f64>());
        let mut z = 0.0;
        loop {
            let u: f64 = rng.random();
            z += -(1.0 - u).ln() / self.rates[phase];
            let to = pick(&self.next[phase], rng.random::<f64>());
            if to == m {
                return z;
            }
            phase = to;
        }
    }
}

/// `f(z) = sum_j r_j e^{lambda_j z}` over the eigenvalues of `T`.
#[derive(Debug, Clone)]
pub struct DensityExpansion {
    terms: Vec<(Complex64, Complex64)>,
}

impl DensityExpansion {
    pub fn density(&self, z: f64) -> f64 {
        if z < 0.0 {
            return 0.0;
        }
        let s: Complex64 = self.terms.iter().map(|(l, r)| r * (l * z).exp()).sum();
        s.re.max(0.0)
    }

    pub fn tail(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 1.0;
        }
        let s: Complex64 = self.terms.iter().map(|(l, r)| -r / l * (l * z).exp()).sum();
        s.re.clamp(0.0, 1.0)
    }
}

//! Six-phase fit of the log-normal jump law `f(x) = 2/(x sqrt(2 pi)) exp(-2 (ln x)^2)`
//! and the model parameters used throughout the tests and the CLI configs.

use crate::error::Result;
use crate::levy_model::{LevyModelSpec, PhaseTypeDist, Side};
use crate::sn_solver::GameCosts;

pub const LOGNORMAL_T: [[f64; 6]; 6] = [
    [-5.7714, 0.0881, 0.0080, 0.0031, 0.0002, 0.0036],
    [0.0000, -6.3823, 0.0031, 0.0000, 0.0000, 6.3793],
    [0.0000, 5.8540, -5.8540, 0.0000, 0.0000, 0.0000],
    [6.6551, 0.0353, 1.4502, -8.1408, 0.0000, 0.0003],
    [0.0000, 0.0007, 0.0054, 6.0959, -6.1029, 0.0009],
    [0.0000, 0.0092, 0.0049, 0.0000, 6.4107, -6.4249],
];
pub const LOGNORMAL_ALPHA: [f64; 6] = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0];

pub const DELTA: f64 = 2.5;
pub const KAPPA: f64 = 2.5;
pub const Q: f64 = 0.05;

pub fn lognormal_phase_type() -> PhaseTypeDist {
    PhaseTypeDist::new(LOGNORMAL_ALPHA.to_vec(), LOGNORMAL_T.iter().map(|r| r.to_vec()).collect())
        .expect("reference phase-type is valid")
}

/// The log-normal density the phase-type law approximates.
pub fn lognormal_density(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let l = x.ln();
    2.0 / (x * (2.0 * std::f64::consts::PI).sqrt()) * (-2.0 * l * l).exp()
}

pub fn reference_model(side: Side, sigma: f64) -> Result<LevyModelSpec> {
    LevyModelSpec::new(side, sigma, DELTA, KAPPA, lognormal_phase_type(), Q)
}

/// `alpha = beta = C = K = 1`.
pub fn default_costs() -> GameCosts {
    GameCosts { alpha: 1.0, beta: 1.0, c: 1.0, k: 1.0 }
}

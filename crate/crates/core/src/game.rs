//! Side-independent entry points: the JSON configuration, one equilibrium
//! type covering both games, and verification of an arbitrary barrier pair.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::levy_model::{LevyModelSpec, PhaseTypeDist, Side};
use crate::presets;
use crate::sn_solver::{solve_sn, GameCosts, SnEquilibrium, SnGame};
use crate::sp_solver::{solve_sp, SpEquilibrium, SpGame, SpThresholds};
use crate::verifier::{check_vi, ViReport, VerifyOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTypeConfig {
    pub alpha: Vec<f64>,
    #[serde(rename = "T")]
    pub t: Vec<Vec<f64>>,
}

/// Model plus costs, as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub side: Side,
    pub sigma: f64,
    pub delta: f64,
    pub kappa: f64,
    pub q: f64,
    pub phase_type: PhaseTypeConfig,
    pub costs: GameCosts,
}

impl GameConfig {
    /// Log-normal phase-type jumps, `delta = kappa = 2.5`, `q = 0.05` and unit costs.
    pub fn reference(side: Side, sigma: f64) -> Self {
        GameConfig {
            side,
            sigma,
            delta: presets::DELTA,
            kappa: presets::KAPPA,
            q: presets::Q,
            phase_type: PhaseTypeConfig {
                alpha: presets::LOGNORMAL_ALPHA.to_vec(),
                t: presets::LOGNORMAL_T.iter().map(|r| r.to_vec()).collect(),
            },
            costs: presets::default_costs(),
        }
    }

    pub fn model(&self) -> Result<LevyModelSpec> {
        let jumps = PhaseTypeDist::new(self.phase_type.alpha.clone(), self.phase_type.t.clone())?;
        LevyModelSpec::new(self.side, self.sigma, self.delta, self.kappa, jumps, self.q)
    }
}

#[derive(Debug, Clone)]
pub enum Equilibrium {
    Sn(SnEquilibrium),
    Sp(SpEquilibrium),
}

/// Serializable summary of either equilibrium. `a_star = None` means
/// `-infinity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub side: Side,
    pub case: String,
    pub a_star: Option<f64>,
    pub b_star: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_bar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<SpThresholds>,
    pub residuals: BTreeMap<String, f64>,
}

impl Solution {
    pub fn a(&self) -> f64 {
        self.a_star.unwrap_or(f64::NEG_INFINITY)
    }
}

impl Equilibrium {
    pub fn solve(model: &LevyModelSpec, costs: GameCosts) -> Result<Self> {
        Ok(match model.side {
            Side::SpectrallyNegative => Equilibrium::Sn(solve_sn(model, costs)?),
            Side::SpectrallyPositive => Equilibrium::Sp(solve_sp(model, costs)?),
        })
    }

    pub fn a_star(&self) -> f64 {
        match self {
            Equilibrium::Sn(e) => e.a_star,
            Equilibrium::Sp(e) => e.a_star,
        }
    }
    pub fn b_star(&self) -> f64 {
        match self {
            Equilibrium::Sn(e) => e.b_star,
            Equilibrium::Sp(e) => e.b_star,
        }
    }
    pub fn case_tag(&self) -> &'static str {
        match self {
            Equilibrium::Sn(_) => "interior",
            Equilibrium::Sp(e) => e.case.tag(),
        }
    }
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Equilibrium::Sn(e) => e.value(x),
            Equilibrium::Sp(e) => e.value(x),
        }
    }
    pub fn value_prime(&self, x: f64) -> f64 {
        match self {
            Equilibrium::Sn(e) => e.value_prime(x),
            Equilibrium::Sp(e) => e.value_prime(x),
        }
    }

    pub fn summary(&self) -> Solution {
        match self {
            Equilibrium::Sn(e) => {
                let s = e.summary();
                Solution {
                    side: Side::SpectrallyNegative,
                    case: self.case_tag().into(),
                    a_star: Some(s.a_star),
                    b_star: s.b_star,
                    a_bar: Some(s.a_bar),
                    thresholds: None,
                    residuals: BTreeMap::from([
                        ("Lambda".to_string(), s.residuals.big_lambda),
                        ("lambda".to_string(), s.residuals.small_lambda),
                    ]),
                }
            }
            Equilibrium::Sp(e) => {
                let s = e.summary();
                Solution {
                    side: Side::SpectrallyPositive,
                    case: self.case_tag().into(),
                    a_star: s.a_star,
                    b_star: s.b_star,
                    a_bar: None,
                    thresholds: Some(s.thresholds),
                    residuals: BTreeMap::from([
                        ("Gamma".to_string(), s.residuals.gamma_cap),
                        ("gamma".to_string(), s.residuals.gamma_low),
                    ]),
                }
            }
        }
    }
}

/// Runs the verifier on `(a, b)` for the game defined by `model` and `costs`.
pub fn verify_pair(model: &LevyModelSpec, costs: GameCosts, a: f64, b: f64, opts: &VerifyOptions) -> Result<ViReport> {
    match model.side {
        Side::SpectrallyNegative => check_vi(model, &SnGame::new(model, costs)?, a, b, opts),
        Side::SpectrallyPositive => check_vi(model, &SpGame::new(model, costs)?, a, b, opts),
    }
}

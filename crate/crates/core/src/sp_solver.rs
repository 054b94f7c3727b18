//! Spectrally positive game. Scale functions are those of the dual `-X`,
//! which share `psi` with the model.
//!
//! `Gamma`, `gamma` and `Gamma_bar` grow like `e^{Phi d}`; the growing part
//! always carries the factor `b_over - b`, so it is written that way and the
//! remainder is evaluated from the bounded parts of the scale functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_model::LevyModelSpec;
use crate::scale_fn::ScaleFunctionRep;
use crate::sn_solver::GameCosts;

const RESIDUAL_TOL: f64 = 1e-8;
const GRID_CELLS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpCase {
    NoControl,
    Interior,
    Collapsed,
}

impl SpCase {
    pub fn tag(self) -> &'static str {
        match self {
            SpCase::NoControl => "no_control",
            SpCase::Interior => "interior",
            SpCase::Collapsed => "collapsed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpGame {
    pub rep: ScaleFunctionRep,
    pub costs: GameCosts,
    pub mu_hat: f64,
    pub sigma: f64,
    pub delta: f64,
    pub kappa: f64,
    pub alpha_hat: f64,
    pub b_under: f64,
    pub b_over: f64,
    /// Defined for bounded variation only.
    pub big_b: Option<f64>,
}

impl SpGame {
    pub fn new(model: &LevyModelSpec, costs: GameCosts) -> Result<Self> {
        costs.check_terminal()?;
        let rep = ScaleFunctionRep::from_model(model)?;
        let mu_hat = model.mean_drift();
        let alpha_hat = costs.alpha + costs.k * model.q;
        if !(alpha_hat > 0.0) {
            return Err(Error::AssumptionViolated(format!(
                "alpha + K q = {alpha_hat} must be positive"
            )));
        }
        let b_under = (costs.beta - costs.c * model.q - costs.k * mu_hat) / alpha_hat;
        let b_over = b_under + 1.0 / rep.phi_q();
        let big_b = (model.sigma == 0.0).then(|| b_under + model.delta * (1.0 + costs.k) / alpha_hat);
        Ok(SpGame {
            rep,
            costs,
            mu_hat,
            sigma: model.sigma,
            delta: model.delta,
            kappa: model.kappa,
            alpha_hat,
            b_under,
            b_over,
            big_b,
        })
    }

    pub fn q(&self) -> f64 {
        self.rep.q
    }
    pub fn h(&self, x: f64) -> f64 {
        -self.costs.alpha * x + self.costs.beta
    }
    pub fn g(&self, x: f64) -> f64 {
        self.costs.g(x)
    }
    /// `h^(x) = -alpha^ x + beta - C q - K mu^`.
    pub fn h_hat(&self, x: f64) -> f64 {
        -self.alpha_hat * (x - self.b_under)
    }

    /// `(b_under, b_over, B)`.
    pub fn thresholds(&self) -> (f64, f64, Option<f64>) {
        (self.b_under, self.b_over, self.big_b)
    }

    /// `(q + kappa)(1 + K) - alpha^`, bounded variation only.
    pub fn upsilon_at_big_b(&self) -> Result<f64> {
        if self.sigma > 0.0 {
            return Err(Error::DomainError("Upsilon(B) is defined only when sigma = 0".into()));
        }
        Ok((self.q() + self.kappa) * (1.0 + self.costs.k) - self.alpha_hat)
    }

    /// `Gamma(a, b) = 1 + K + W(b-a) h^(b) + alpha^ Wbar(b-a)`.
    pub fn gamma_cap(&self, a: f64, b: f64) -> f64 {
        let p = self.rep.eval(b - a);
        1.0 + self.costs.k
            + self.h_hat(b) * p.w_rest
            + self.alpha_hat * p.wbar_rest
            + self.alpha_hat * (self.b_over - b) * p.growth
    }

    /// Limit of `Gamma(a, b)/W'(b - a)` as `a -> -infinity`.
    fn gamma_over_wp_at_minus_inf(&self, b: f64) -> f64 {
        self.alpha_hat * (self.b_over - b) / self.rep.phi_q()
    }

    /// `Gamma(-infinity, b)`; finite only at `b = b_over`.
    pub fn gamma_cap_at_minus_inf(&self, b: f64) -> f64 {
        let lim = self.alpha_hat * (self.b_over - b);
        if lim == 0.0 {
            1.0 - self.costs.alpha / self.q()
        } else {
            lim.signum() * f64::INFINITY
        }
    }

    /// `gamma(a, b) = -W'(b-a) h^(b) - alpha^ W(b-a)`, the derivative of
    /// `Gamma` in `a`.
    pub fn gamma_low(&self, a: f64, b: f64) -> f64 {
        let p = self.rep.eval(b - a);
        -self.h_hat(b) * p.wp_rest - self.alpha_hat * p.w_rest
            - self.rep.phi_q() * self.alpha_hat * (self.b_over - b) * p.growth
    }

    /// `Gamma_bar(x, b)`.
    pub fn gamma_bar(&self, x: f64, b: f64) -> f64 {
        let d = b - x;
        let p = self.rep.eval(d);
        let (q, k) = (self.q(), self.costs.k);
        let cb = self.costs.c + b * k;
        let rest = -self.h(b) * p.wbar_rest - self.costs.alpha * p.wbar2_rest + cb * (1.0 + q * p.wbar_rest)
            - k * (d + q * p.wbar2_rest)
            + k * self.mu_hat * p.wbar_rest;
        x - b - self.alpha_hat * (self.b_over - b) / self.rep.phi_q() * p.growth + rest
    }

    /// `Gamma(x, b)` rebuilt from its defining integral by quadrature. Used as
    /// an independent check of [`Self::gamma_cap`].
    pub fn gamma_cap_raw(&self, x: f64, b: f64) -> f64 {
        let (q, k) = (self.q(), self.costs.k);
        let d = b - x;
        let w0 = self.rep.w(0.0);
        let integral = crate::quadrature::integrate(
            |y| self.h(y) * self.rep.eval(y - x).wp(),
            x,
            b,
            1e-13,
            1e-13,
        );
        1.0 + w0 * self.h(x) + integral - ((self.costs.c + b * k) * q + k * self.mu_hat) * self.rep.w(d)
            + k * self.rep.z(d)
    }

    /// `a~(b)`: the sign change of `a -> gamma(a, b)`. `None` means `-infinity`.
    pub fn a_tilde(&self, b: f64) -> Option<f64> {
        let hh = self.h_hat(b);
        if hh >= 0.0 {
            return Some(b);
        }
        if b >= self.b_over {
            return None;
        }
        // gamma(b - d, b) = W(d) G(d) with G decreasing in d.
        let g = |d: f64| -self.rep.w_ratio(d) * hh - self.alpha_hat;
        let g0 = if self.sigma > 0.0 { f64::INFINITY } else { g(0.0) };
        if g0 <= 0.0 {
            return Some(b);
        }
        let cap = 1e3 * (1.0 + 1.0 / self.rep.phi_q());
        let mut hi = 1.0;
        while g(hi) > 0.0 {
            hi *= 2.0;
            if hi > cap {
                return None;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let d = if g(lo).abs() <= g(hi).abs() { lo } else { hi };
        Some(b - d)
    }

    /// `F(b) = Gamma(a~(b), b)`.
    fn f_of_b(&self, b: f64) -> f64 {
        match self.a_tilde(b) {
            Some(a) => self.gamma_cap(a, b),
            None => 1.0 - self.costs.alpha / self.q(),
        }
    }

    pub fn solve(self) -> Result<SpEquilibrium> {
        let q = self.q();
        if q >= self.costs.alpha {
            let b = self.b_over;
            return Ok(SpEquilibrium::new(SpCase::NoControl, f64::NEG_INFINITY, b, 0.0, 0.0, self));
        }
        if self.sigma == 0.0 && self.upsilon_at_big_b()? <= 0.0 {
            let b = self.big_b.expect("bounded variation");
            let res = self.gamma_cap(b, b);
            return Ok(SpEquilibrium::new(SpCase::Collapsed, b, b, res, 0.0, self));
        }

        let step = (self.b_over - self.b_under) / GRID_CELLS as f64;
        let mut prev = self.b_under;
        let mut bracket = None;
        for i in 1..=GRID_CELLS {
            let b = if i == GRID_CELLS { self.b_over } else { self.b_under + step * i as f64 };
            if self.f_of_b(b) < 0.0 {
                bracket = Some((prev, b));
                break;
            }
            prev = b;
        }
        let (mut lo, mut hi) = bracket.ok_or_else(|| Error::NoBracket("Gamma(a~(b), b) on (b_under, b_over]".into()))?;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.f_of_b(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let b_star = if self.f_of_b(lo).abs() <= self.f_of_b(hi).abs() { lo } else { hi };
        let a_star = self
            .a_tilde(b_star)
            .ok_or_else(|| Error::NoBracket(format!("a~({b_star}) is -infinity")))?;
        let res_cap = self.gamma_cap(a_star, b_star);
        let res_low = self.gamma_low(a_star, b_star);
        if res_cap.abs() > RESIDUAL_TOL {
            return Err(Error::ToleranceNotMet { what: "Gamma(a*, b*)".into(), residual: res_cap });
        }
        if res_low.abs() > RESIDUAL_TOL * (1.0 + self.alpha_hat * self.rep.w(b_star - a_star)) {
            return Err(Error::ToleranceNotMet { what: "gamma(a*, b*)".into(), residual: res_low });
        }
        Ok(SpEquilibrium::new(SpCase::Interior, a_star, b_star, res_cap, res_low, self))
    }

    /// `J_{a,b}(x)`. `a = -infinity` is allowed, and `a == b` gives the
    /// immediate-stop strategy.
    pub fn j_ab(&self, a: f64, b: f64, x: f64) -> f64 {
        if x >= b {
            return self.g(x);
        }
        if a >= b {
            return self.g(b) + b - x;
        }
        if x <= a {
            return self.j_cont(a, b, a) + a - x;
        }
        self.j_cont(a, b, x)
    }

    /// `W(b - x)/W'(b - a) Gamma(a, b) + Gamma_bar(x, b) - x + b`, evaluated at
    /// any `x` in `[a, b]` (endpoints as one-sided limits).
    pub fn j_cont(&self, a: f64, b: f64, x: f64) -> f64 {
        self.rep.w(b - x) * self.gamma_over_wp(a, b) + self.gamma_bar(x, b) - x + b
    }

    fn gamma_over_wp(&self, a: f64, b: f64) -> f64 {
        if a == f64::NEG_INFINITY {
            return self.gamma_over_wp_at_minus_inf(b);
        }
        self.gamma_cap(a, b) / self.rep.eval(b - a).wp()
    }

    pub fn j_cont_prime(&self, a: f64, b: f64, x: f64) -> f64 {
        -self.rep.eval(b - x).wp() * self.gamma_over_wp(a, b) + self.gamma_cap(x, b) - 1.0
    }

    pub fn j_cont_second(&self, a: f64, b: f64, x: f64) -> f64 {
        self.rep.eval(b - x).wpp() * self.gamma_over_wp(a, b) + self.gamma_low(x, b)
    }

    pub fn j_ab_prime(&self, a: f64, b: f64, x: f64) -> f64 {
        if x >= b {
            self.costs.k
        } else if x <= a || a >= b {
            -1.0
        } else {
            self.j_cont_prime(a, b, x)
        }
    }

    pub fn j_ab_second(&self, a: f64, b: f64, x: f64) -> f64 {
        if x >= b || x <= a || a >= b {
            0.0
        } else {
            self.j_cont_second(a, b, x)
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpEquilibrium {
    pub case: SpCase,
    /// `-infinity` in the no-control case.
    pub a_star: f64,
    pub b_star: f64,
    pub residual_gamma_cap: f64,
    pub residual_gamma_low: f64,
    pub game: SpGame,
}

impl SpEquilibrium {
    fn new(case: SpCase, a_star: f64, b_star: f64, rc: f64, rl: f64, game: SpGame) -> Self {
        SpEquilibrium { case, a_star, b_star, residual_gamma_cap: rc, residual_gamma_low: rl, game }
    }

    /// `Gamma_bar(x, b*) - x + b*` between the barriers.
    pub fn value(&self, x: f64) -> f64 {
        let (a, b) = (self.a_star, self.b_star);
        if x >= b {
            self.game.g(x)
        } else if x < a || self.case == SpCase::Collapsed {
            self.value(a) + a - x
        } else {
            self.game.gamma_bar(x, b) - x + b
        }
    }

    /// `Gamma(x, b*) - 1`; at a kink this is the right derivative.
    pub fn value_prime(&self, x: f64) -> f64 {
        self.value_prime_sides(x).1
    }

    /// Left and right derivatives.
    pub fn value_prime_sides(&self, x: f64) -> (f64, f64) {
        let (a, b, k) = (self.a_star, self.b_star, self.game.costs.k);
        let inner = |x: f64| self.game.gamma_cap(x, b) - 1.0;
        if self.case == SpCase::Collapsed {
            return if x < b {
                (-1.0, -1.0)
            } else if x > b {
                (k, k)
            } else {
                (-1.0, k)
            };
        }
        if x > b {
            (k, k)
        } else if x == b {
            (inner(b), k)
        } else if x < a {
            (-1.0, -1.0)
        } else if x == a {
            (-1.0, inner(a))
        } else {
            (inner(x), inner(x))
        }
    }

    pub fn value_second(&self, x: f64) -> f64 {
        if self.case == SpCase::Collapsed || x < self.a_star || x >= self.b_star {
            0.0
        } else {
            self.game.gamma_low(x, self.b_star)
        }
    }

    pub fn summary(&self) -> SpSolution {
        let (b_under, b_over, big_b) = self.game.thresholds();
        SpSolution {
            case: self.case,
            a_star: self.a_star.is_finite().then_some(self.a_star),
            b_star: self.b_star,
            thresholds: SpThresholds { b_under, b_over, big_b },
            residuals: SpResiduals { gamma_cap: self.residual_gamma_cap, gamma_low: self.residual_gamma_low },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpThresholds {
    pub b_under: f64,
    pub b_over: f64,
    #[serde(rename = "B")]
    pub big_b: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpResiduals {
    #[serde(rename = "Gamma")]
    pub gamma_cap: f64,
    #[serde(rename = "gamma")]
    pub gamma_low: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpSolution {
    pub case: SpCase,
    /// `None` stands for `-infinity`.
    pub a_star: Option<f64>,
    pub b_star: f64,
    pub thresholds: SpThresholds,
    pub residuals: SpResiduals,
}

pub fn solve_sp(model: &LevyModelSpec, costs: GameCosts) -> Result<SpEquilibrium> {
    SpGame::new(model, costs)?.solve()
}

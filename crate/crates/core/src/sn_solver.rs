//! Spectrally negative game: the controller reflects at `a` from below, the
//! stopper stops at the first passage above `b`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_model::LevyModelSpec;
use crate::quadrature::integrate;
use crate::scale_fn::ScaleFunctionRep;

const BISECT_MAX_ITER: usize = 200;
const MAX_DOUBLINGS: usize = 1000;
const RESIDUAL_TOL: f64 = 1e-8;

/// Running cost `h(x) = -alpha x + beta` and terminal cost `g(x) = C + K x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameCosts {
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "K")]
    pub k: f64,
}

impl GameCosts {
    pub fn g(&self, x: f64) -> f64 {
        self.c + self.k * x
    }

    /// `K > -1`, needed on both sides.
    pub fn check_terminal(&self) -> Result<()> {
        if !(self.k > -1.0) {
            return Err(Error::AssumptionViolated(format!(
                "terminal cost slope K = {} must exceed -1 (standing assumption K > -1)",
                self.k
            )));
        }
        if [self.alpha, self.beta, self.c, self.k].iter().any(|v| !v.is_finite()) {
            return Err(Error::AssumptionViolated("cost parameters must be finite".into()));
        }
        Ok(())
    }
}

/// Running cost for the spectrally negative solver. The convolutions with
/// `W` default to adaptive quadrature; affine costs override them in closed
/// form.
pub trait RunningCost: Sync {
    fn h(&self, x: f64) -> f64;
    fn h_prime(&self, x: f64) -> f64;

    /// `h~'(x) = h'(x) + q` must be strictly negative.
    fn check(&self, q: f64) -> Result<()>;

    /// `int_a^x W(x - y) h(y) dy`.
    fn phi(&self, rep: &ScaleFunctionRep, a: f64, x: f64) -> f64 {
        integrate(|y| rep.w(x - y) * self.h(y), a, x, 1e-13, 1e-12)
    }
    /// `int_a^x W(x - y) h'(y) dy`.
    fn phi_dh(&self, rep: &ScaleFunctionRep, a: f64, x: f64) -> f64 {
        integrate(|y| rep.w(x - y) * self.h_prime(y), a, x, 1e-13, 1e-12)
    }
    /// `int_a^x Wbar(x - y) h'(y) dy`.
    fn phi_bar_dh(&self, rep: &ScaleFunctionRep, a: f64, x: f64) -> f64 {
        integrate(|y| rep.w_bar(x - y) * self.h_prime(y), a, x, 1e-13, 1e-12)
    }
    /// `d/dx int_a^x W(x - y) h'(y) dy`.
    fn phi_dh_dx(&self, rep: &ScaleFunctionRep, a: f64, x: f64) -> f64 {
        rep.w(0.0) * self.h_prime(x)
            + integrate(|y| rep.eval(x - y).wp() * self.h_prime(y), a, x, 1e-13, 1e-12)
    }
}

impl RunningCost for GameCosts {
    fn h(&self, x: f64) -> f64 {
        -self.alpha * x + self.beta
    }
    fn h_prime(&self, _x: f64) -> f64 {
        -self.alpha
    }
    fn check(&self, q: f64) -> Result<()> {
        if !(self.alpha > q) {
            return Err(Error::AssumptionViolated(format!(
                "spectrally negative game needs alpha > q, got alpha = {} and q = {q}",
                self.alpha
            )));
        }
        Ok(())
    }
    fn phi(&self, rep: &ScaleFunctionRep, a: f64, x: f64) -> f64 {
        let p = rep.eval(x - a);
        self.h(a) * p.w_bar() - self.alpha * p.w_bar2()
    }
    fn phi_dh(&self, rep: &ScaleFunctionRep, a: f64, x: f64) -> f64 {
        -self.alpha * rep.w_bar(x - a)
    }
    fn phi_bar_dh(&self, rep: &ScaleFunctionRep, a: f64, x: f64) -> f64 {
        -self.alpha * rep.w_bar2(x - a)
    }
    fn phi_dh_dx(&self, rep: &ScaleFunctionRep, a: f64, x: f64) -> f64 {
        -self.alpha * rep.w(x - a)
    }
}

/// A running cost supplied as closures, always integrated numerically.
pub struct FnCost<F, D> {
    pub h: F,
    pub dh: D,
}

impl<F, D> RunningCost for FnCost<F, D>
where
    F: Fn(f64) -> f64 + Sync,
    D: Fn(f64) -> f64 + Sync,
{
    fn h(&self, x: f64) -> f64 {
        (self.h)(x)
    }
    fn h_prime(&self, x: f64) -> f64 {
        (self.dh)(x)
    }
    fn check(&self, q: f64) -> Result<()> {
        // Sampled only; strictness is what keeps b~(a) unique.
        for i in -200..=200 {
            let x = i as f64 * 0.25;
            if !(self.h_prime(x) + q < 0.0) {
                return Err(Error::AssumptionViolated(format!("h~'({x}) is not negative")));
            }
        }
        Ok(())
    }
}

/// The spectrally negative game for a fixed model and costs.
#[derive(Debug, Clone)]
pub struct SnGame<H: RunningCost = GameCosts> {
    pub rep: ScaleFunctionRep,
    pub mu: f64,
    pub h: H,
    pub c: f64,
    pub k: f64,
}

impl SnGame<GameCosts> {
    pub fn new(model: &LevyModelSpec, costs: GameCosts) -> Result<Self> {
        Self::with_cost(model, costs, costs.c, costs.k)
    }

    pub fn costs(&self) -> GameCosts {
        self.h
    }
}

impl<H: RunningCost> SnGame<H> {
    pub fn with_cost(model: &LevyModelSpec, h: H, c: f64, k: f64) -> Result<Self> {
        GameCosts { alpha: 0.0, beta: 0.0, c, k }.check_terminal()?;
        h.check(model.q)?;
        let rep = ScaleFunctionRep::from_model(model)?;
        Ok(SnGame { rep, mu: model.mean_drift(), h, c, k })
    }

    pub fn q(&self) -> f64 {
        self.rep.q
    }
    pub fn g(&self, x: f64) -> f64 {
        self.c + self.k * x
    }
    pub fn h_tilde(&self, x: f64) -> f64 {
        self.h.h(x) + self.q() * x
    }

    /// `phi_a(x; h) = int_a^x W(x - y) h(y) dy`, zero for `x <= a`.
    pub fn phi_a(&self, a: f64, x: f64) -> f64 {
        if x <= a {
            return 0.0;
        }
        self.h.phi(&self.rep, a, x)
    }

    /// `l(x) = Zbar(x) + mu/q - Z(x)/Phi(q)`.
    pub fn ell(&self, x: f64) -> f64 {
        let p = self.rep.eval(x);
        p.z_bar() + self.mu / self.q() - p.z() / self.rep.phi_q()
    }

    fn big_lambda_terms(&self, a: f64, b: f64) -> [f64; 4] {
        let q = self.q();
        let conv = if b > a { self.h.phi_bar_dh(&self.rep, a, b) + q * self.rep.w_bar2(b - a) } else { 0.0 };
        [conv, b + self.g(b), self.mu / q, -self.h_tilde(a) / q]
    }

    /// `Lambda(a, b)` in the integrated-by-parts form
    /// `int_a^b Wbar(b - y) h~'(y) dy + b + mu/q - h~(a)/q + g(b)`.
    pub fn big_lambda(&self, a: f64, b: f64) -> f64 {
        self.big_lambda_terms(a, b).iter().sum()
    }

    /// `Lambda(a, b) = phi_a(b; h) + Zbar(b - a) + mu/q + g(b) - h(a) Z(b - a)/q`.
    pub fn big_lambda_direct(&self, a: f64, b: f64) -> f64 {
        let p = self.rep.eval(b - a);
        self.phi_a(a, b) + p.z_bar() + self.mu / self.q() + self.g(b) - self.h.h(a) * p.z() / self.q()
    }

    /// Normalisation for residuals of `Lambda`.
    pub fn big_lambda_scale(&self, a: f64, b: f64) -> f64 {
        1.0 + self.big_lambda_terms(a, b).iter().map(|t| t.abs()).fold(0.0, f64::max)
    }

    /// `lambda(a, b) = int_a^b W(b - y) h~'(y) dy + K + 1`.
    pub fn small_lambda(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 1.0 + self.k;
        }
        self.h.phi_dh(&self.rep, a, b) + self.q() * self.rep.w_bar(b - a) + self.k + 1.0
    }

    /// Zero of `a -> Lambda(a, a)`.
    pub fn a_bar(&self) -> Result<f64> {
        let f = |a: f64| self.big_lambda(a, a);
        let (lo, hi) = expand_bracket(&f, 0.0, "Lambda(a, a)")?;
        Ok(bisect(&f, lo, hi))
    }

    /// `b~(a)`: the zero of the decreasing map `b -> lambda(a, b)`.
    pub fn b_tilde(&self, a: f64) -> Result<f64> {
        let mut span = 1.0;
        let mut n = 0;
        while self.small_lambda(a, a + span) >= 0.0 {
            span *= 2.0;
            n += 1;
            if n > MAX_DOUBLINGS || !span.is_finite() {
                return Err(Error::NoBracket(format!("lambda({a}, .)")));
            }
        }
        // lambda(a, .) is decreasing, so bisect its negation.
        Ok(bisect(&|b| -self.small_lambda(a, b), a, a + span))
    }

    pub fn solve(self) -> Result<SnEquilibrium<H>> {
        let a_bar = self.a_bar()?;
        let outer = |a: f64| -> Result<f64> { Ok(self.big_lambda(a, self.b_tilde(a)?)) };
        let mut width = 1.0;
        let mut n = 0;
        while outer(a_bar - width)? >= 0.0 {
            width *= 2.0;
            n += 1;
            if n > MAX_DOUBLINGS || !width.is_finite() {
                return Err(Error::NoBracket("Lambda(a, b~(a)) below a_bar".into()));
            }
        }
        let (mut lo, mut hi) = (a_bar - width, a_bar);
        for _ in 0..BISECT_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if outer(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // Pick the endpoint with the smaller residual.
        let (rl, rh) = (outer(lo)?, outer(hi)?);
        let a_star = if rl.abs() <= rh.abs() { lo } else { hi };
        let b_star = self.b_tilde(a_star)?;

        let big = self.big_lambda(a_star, b_star);
        let small = self.small_lambda(a_star, b_star);
        if big.abs() > RESIDUAL_TOL * self.big_lambda_scale(a_star, b_star) {
            return Err(Error::ToleranceNotMet { what: "Lambda(a*, b*)".into(), residual: big });
        }
        if small.abs() > RESIDUAL_TOL {
            return Err(Error::ToleranceNotMet { what: "lambda(a*, b*)".into(), residual: small });
        }
        let eq = SnEquilibrium { a_star, b_star, a_bar, residual_big: big, residual_small: small, game: self };
        eq.check_structure(64)?;
        Ok(eq)
    }

    /// `J_{a,b}(x)`: slope `-1` below `a`, `g` above `b`, [`Self::j_cont`] between.
    pub fn j_ab(&self, a: f64, b: f64, x: f64) -> f64 {
        if b <= a {
            return if x >= b { self.g(x) } else { self.g(b) + b - x };
        }
        if x > b {
            self.g(x)
        } else if x < a {
            self.j_cont(a, b, a) + a - x
        } else {
            self.j_cont(a, b, x)
        }
    }

    /// `Z(x-a) Lambda/Z(b-a) + Z(x-a) h(a)/q - phi_a(x) - Zbar(x-a) - mu/q`.
    pub fn j_cont(&self, a: f64, b: f64, x: f64) -> f64 {
        let q = self.q();
        let p = self.rep.eval(x - a);
        let zd = self.rep.z(b - a);
        p.z() * self.big_lambda(a, b) / zd + p.z() * self.h.h(a) / q - self.phi_a(a, x) - p.z_bar() - self.mu / q
    }

    /// The same function written with `l`, kept as an independent check.
    pub fn j_ab_via_ell(&self, a: f64, b: f64, x: f64) -> f64 {
        if x > b {
            return self.g(x);
        }
        if x < a {
            return self.j_ab_via_ell(a, b, a) + a - x;
        }
        let zx = self.rep.z(x - a);
        let zd = self.rep.z(b - a);
        zx / zd * (self.phi_a(a, b) + self.ell(b - a) + self.g(b)) - self.phi_a(a, x) - self.ell(x - a)
    }

    pub fn j_cont_prime(&self, a: f64, b: f64, x: f64) -> f64 {
        let q = self.q();
        let p = self.rep.eval(x - a);
        q * p.w() * self.big_lambda(a, b) / self.rep.z(b - a) - self.h.phi_dh(&self.rep, a, x) - p.z()
    }

    pub fn j_cont_second(&self, a: f64, b: f64, x: f64) -> f64 {
        let q = self.q();
        let p = self.rep.eval(x - a);
        q * p.wp() * self.big_lambda(a, b) / self.rep.z(b - a) - self.h.phi_dh_dx(&self.rep, a, x) - q * p.w()
    }

    pub fn j_ab_prime(&self, a: f64, b: f64, x: f64) -> f64 {
        if x > b || b <= a {
            if x >= b {
                self.k
            } else {
                -1.0
            }
        } else if x < a {
            -1.0
        } else {
            self.j_cont_prime(a, b, x)
        }
    }

    pub fn j_ab_second(&self, a: f64, b: f64, x: f64) -> f64 {
        if x > b || x < a || b <= a {
            0.0
        } else {
            self.j_cont_second(a, b, x)
        }
    }
}

/// Doubles outward from `x0` until the increasing `f` changes sign.
fn expand_bracket(f: &dyn Fn(f64) -> f64, x0: f64, what: &str) -> Result<(f64, f64)> {
    let f0 = f(x0);
    let mut step = 1.0;
    for _ in 0..MAX_DOUBLINGS {
        let x1 = if f0 < 0.0 { x0 + step } else { x0 - step };
        if (f(x1) < 0.0) != (f0 < 0.0) {
            return Ok(if x1 > x0 { (x0, x1) } else { (x1, x0) });
        }
        step *= 2.0;
    }
    Err(Error::NoBracket(what.into()))
}

/// Bisection for an increasing `f` with `f(lo) < 0 <= f(hi)`, run to
/// machine resolution (at most 200 halvings).
fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..BISECT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if f(lo).abs() <= f(hi).abs() {
        lo
    } else {
        hi
    }
}

#[derive(Debug, Clone)]
pub struct SnEquilibrium<H: RunningCost = GameCosts> {
    pub a_star: f64,
    pub b_star: f64,
    pub a_bar: f64,
    pub residual_big: f64,
    pub residual_small: f64,
    pub game: SnGame<H>,
}

impl<H: RunningCost> SnEquilibrium<H> {
    pub fn value(&self, x: f64) -> f64 {
        self.game.j_ab(self.a_star, self.b_star, x)
    }
    pub fn value_prime(&self, x: f64) -> f64 {
        self.game.j_ab_prime(self.a_star, self.b_star, x)
    }
    pub fn value_second(&self, x: f64) -> f64 {
        self.game.j_ab_second(self.a_star, self.b_star, x)
    }

    /// Checks on an `n`-point grid that `lambda(a*, .)` is nonnegative before
    /// `b*` and nonpositive after, and that `Lambda(a*, .) <= 0`.
    pub fn check_structure(&self, n: usize) -> Result<()> {
        let (a, b) = (self.a_star, self.b_star);
        let span = 2.0 * (b - a);
        for i in 1..=n {
            let y = a + span * i as f64 / n as f64;
            let small = self.game.small_lambda(a, y);
            let big = self.game.big_lambda(a, y);
            let bad_small = if y < b { small < -RESIDUAL_TOL } else { small > RESIDUAL_TOL };
            if bad_small {
                return Err(Error::ToleranceNotMet { what: format!("sign of lambda(a*, {y})"), residual: small });
            }
            if big > RESIDUAL_TOL * self.game.big_lambda_scale(a, y) {
                return Err(Error::ToleranceNotMet { what: format!("Lambda(a*, {y}) <= 0"), residual: big });
            }
        }
        Ok(())
    }

    pub fn summary(&self) -> SnSolution {
        SnSolution {
            a_star: self.a_star,
            b_star: self.b_star,
            a_bar: self.a_bar,
            residuals: SnResiduals { big_lambda: self.residual_big, small_lambda: self.residual_small },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnResiduals {
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    #[serde(rename = "lambda")]
    pub small_lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnSolution {
    pub a_star: f64,
    pub b_star: f64,
    pub a_bar: f64,
    pub residuals: SnResiduals,
}

/// Solves the affine-cost game.
pub fn solve_sn(model: &LevyModelSpec, costs: GameCosts) -> Result<SnEquilibrium> {
    SnGame::new(model, costs)?.solve()
}

//! Numerical certification of a barrier pair: generator residuals on the
//! three regions, fit gaps at the barriers, convexity, derivative bounds and
//! the barrier-restricted saddle property.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::levy_model::{DensityExpansion, LevyModelSpec, Side};
use crate::quadrature::integrate_split;
use crate::sn_solver::{RunningCost, SnGame};
use crate::sp_solver::SpGame;

/// Truncation level for the jump-size tail.
pub const TAIL_EPS: f64 = 1e-12;
const KINK_GUARD: f64 = 1e-6;
const FIT_TOL: f64 = 1e-5;

/// A function together with its first two derivatives and the points where
/// its analytic form changes.
pub trait ValueFn: Sync {
    fn value(&self, x: f64) -> f64;
    fn prime(&self, x: f64) -> f64;
    fn second(&self, x: f64) -> f64;
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// A smooth test function given by closures.
pub struct SmoothFn<F, D, D2> {
    pub f: F,
    pub df: D,
    pub d2f: D2,
}

impl<F, D, D2> ValueFn for SmoothFn<F, D, D2>
where
    F: Fn(f64) -> f64 + Sync,
    D: Fn(f64) -> f64 + Sync,
    D2: Fn(f64) -> f64 + Sync,
{
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }
    fn prime(&self, x: f64) -> f64 {
        (self.df)(x)
    }
    fn second(&self, x: f64) -> f64 {
        (self.d2f)(x)
    }
}

/// The two games seen through their barrier-strategy payoffs `J_{a,b}`.
pub trait BarrierGame: Sync {
    fn side(&self) -> Side;
    fn q(&self) -> f64;
    fn h(&self, x: f64) -> f64;
    fn g(&self, x: f64) -> f64;
    fn k(&self) -> f64;
    fn j(&self, a: f64, b: f64, x: f64) -> f64;
    fn j_prime(&self, a: f64, b: f64, x: f64) -> f64;
    fn j_second(&self, a: f64, b: f64, x: f64) -> f64;
    /// Continuation-region formula, valid on `[a, b]` with one-sided limits
    /// at the ends.
    fn j_cont(&self, a: f64, b: f64, x: f64) -> f64;
    fn j_cont_prime(&self, a: f64, b: f64, x: f64) -> f64;
    fn j_cont_second(&self, a: f64, b: f64, x: f64) -> f64;
}

impl<H: RunningCost> BarrierGame for SnGame<H> {
    fn side(&self) -> Side {
        Side::SpectrallyNegative
    }
    fn q(&self) -> f64 {
        SnGame::q(self)
    }
    fn h(&self, x: f64) -> f64 {
        self.h.h(x)
    }
    fn g(&self, x: f64) -> f64 {
        SnGame::g(self, x)
    }
    fn k(&self) -> f64 {
        self.k
    }
    fn j(&self, a: f64, b: f64, x: f64) -> f64 {
        self.j_ab(a, b, x)
    }
    fn j_prime(&self, a: f64, b: f64, x: f64) -> f64 {
        self.j_ab_prime(a, b, x)
    }
    fn j_second(&self, a: f64, b: f64, x: f64) -> f64 {
        self.j_ab_second(a, b, x)
    }
    fn j_cont(&self, a: f64, b: f64, x: f64) -> f64 {
        SnGame::j_cont(self, a, b, x)
    }
    fn j_cont_prime(&self, a: f64, b: f64, x: f64) -> f64 {
        SnGame::j_cont_prime(self, a, b, x)
    }
    fn j_cont_second(&self, a: f64, b: f64, x: f64) -> f64 {
        SnGame::j_cont_second(self, a, b, x)
    }
}

impl BarrierGame for SpGame {
    fn side(&self) -> Side {
        Side::SpectrallyPositive
    }
    fn q(&self) -> f64 {
        SpGame::q(self)
    }
    fn h(&self, x: f64) -> f64 {
        SpGame::h(self, x)
    }
    fn g(&self, x: f64) -> f64 {
        SpGame::g(self, x)
    }
    fn k(&self) -> f64 {
        self.costs.k
    }
    fn j(&self, a: f64, b: f64, x: f64) -> f64 {
        self.j_ab(a, b, x)
    }
    fn j_prime(&self, a: f64, b: f64, x: f64) -> f64 {
        self.j_ab_prime(a, b, x)
    }
    fn j_second(&self, a: f64, b: f64, x: f64) -> f64 {
        self.j_ab_second(a, b, x)
    }
    fn j_cont(&self, a: f64, b: f64, x: f64) -> f64 {
        SpGame::j_cont(self, a, b, x)
    }
    fn j_cont_prime(&self, a: f64, b: f64, x: f64) -> f64 {
        SpGame::j_cont_prime(self, a, b, x)
    }
    fn j_cont_second(&self, a: f64, b: f64, x: f64) -> f64 {
        SpGame::j_cont_second(self, a, b, x)
    }
}

/// `J_{a,b}` of a game as a [`ValueFn`].
pub struct BarrierValue<'g, G: BarrierGame> {
    pub game: &'g G,
    pub a: f64,
    pub b: f64,
}

impl<G: BarrierGame> ValueFn for BarrierValue<'_, G> {
    fn value(&self, x: f64) -> f64 {
        self.game.j(self.a, self.b, x)
    }
    fn prime(&self, x: f64) -> f64 {
        self.game.j_prime(self.a, self.b, x)
    }
    fn second(&self, x: f64) -> f64 {
        self.game.j_second(self.a, self.b, x)
    }
    fn kinks(&self) -> Vec<f64> {
        [self.a, self.b].into_iter().filter(|v| v.is_finite()).collect()
    }
}

/// Infinitesimal generator of the model, with the jump integral done by
/// adaptive quadrature on the phase-type density.
pub struct Generator {
    side: Side,
    sigma: f64,
    delta: f64,
    kappa: f64,
    density: DensityExpansion,
    z_max: f64,
}

impl Generator {
    pub fn new(model: &LevyModelSpec) -> Result<Self> {
        Ok(Generator {
            side: model.side,
            sigma: model.sigma,
            delta: model.delta,
            kappa: model.kappa,
            density: model.jumps.density_expansion()?,
            z_max: model.jumps.tail_cutoff(TAIL_EPS),
        })
    }

    /// `L v(x)`: SN `delta v' + sigma^2 v''/2 + kappa int (v(x-z) - v(x)) f(z) dz`,
    /// SP with `-delta` and `v(x+z)`.
    pub fn apply(&self, v: &dyn ValueFn, x: f64) -> Result<f64> {
        let sign = match self.side {
            Side::SpectrallyNegative => 1.0,
            Side::SpectrallyPositive => -1.0,
        };
        if self.side == Side::SpectrallyPositive && self.sigma == 0.0 {
            if let Some(&k) = v.kinks().iter().find(|&&k| (x - k).abs() < KINK_GUARD) {
                return Err(Error::KinkTooClose { x, kink: k });
            }
        }
        let vx = v.value(x);
        // Jumps move the process to x - sign z; split where that crosses a kink.
        let breaks: Vec<f64> = v.kinks().iter().map(|&k| sign * (x - k)).collect();
        let jump = integrate_split(
            |z| (v.value(x - sign * z) - vx) * self.density.density(z),
            0.0,
            self.z_max,
            &breaks,
            1e-11,
            1e-11,
        );
        Ok(sign * self.delta * v.prime(x) + 0.5 * self.sigma * self.sigma * v.second(x) + self.kappa * jump)
    }
}

pub fn generator_apply(model: &LevyModelSpec, v: &dyn ValueFn, x: f64) -> Result<f64> {
    Generator::new(model)?.apply(v, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Points per region for the generator residuals.
    pub n_region: usize,
    /// Width of the below-`a` and above-`b` grids.
    pub region_span: f64,
    pub n_convex: usize,
    pub saddle_step: f64,
    pub saddle_span: f64,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { n_region: 50, region_span: 2.0, n_convex: 400, saddle_step: 0.01, saddle_span: 1.0, exec: Execution::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub points: usize,
    /// Smallest and largest `(L - q)v + h`.
    pub min_residual: f64,
    pub max_residual: f64,
    /// Largest `|residual| / (1 + |h|)`.
    pub max_scaled_abs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitGap {
    pub at: f64,
    /// Order of smoothness required: 0 continuous, 1 `C^1`, 2 `C^2`.
    pub required: u8,
    pub value_gap: f64,
    pub first_gap: f64,
    pub second_gap: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleReport {
    pub x: f64,
    pub argmax_b: f64,
    pub argmin_a: Option<f64>,
    pub b_offset: f64,
    pub a_offset: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViReport {
    pub a: Option<f64>,
    pub b: f64,
    pub below_a: Option<RegionReport>,
    pub continuation: Option<RegionReport>,
    pub above_b: RegionReport,
    /// SN only: `(L - q)v + h` is nonincreasing below `a`.
    pub below_a_monotone: Option<bool>,
    pub fit_a: Option<FitGap>,
    pub fit_b: FitGap,
    pub convexity_min: f64,
    pub convexity_pass: bool,
    pub derivative_min: f64,
    pub derivative_max: f64,
    pub min_value_minus_g: f64,
    pub bounds_pass: bool,
    pub saddle: Vec<SaddleReport>,
    pub pass: bool,
}

/// Required smoothness at `(a, b)`.
fn fit_orders(side: Side, sigma: f64) -> (u8, u8) {
    match (side, sigma > 0.0) {
        (Side::SpectrallyNegative, false) => (1, 1),
        (Side::SpectrallyNegative, true) => (2, 1),
        (Side::SpectrallyPositive, false) => (2, 0),
        (Side::SpectrallyPositive, true) => (2, 1),
    }
}

fn region(
    gen: &Generator,
    game: &dyn BarrierGame,
    v: &dyn ValueFn,
    xs: &[f64],
    exec: Execution,
    accept: impl Fn(f64, f64) -> bool,
) -> Result<(RegionReport, Vec<f64>)> {
    let q = game.q();
    let res: Vec<Result<f64>> = exec.map_slice(xs, |&x| Ok(gen.apply(v, x)? - q * v.value(x) + game.h(x)));
    let res = res.into_iter().collect::<Result<Vec<f64>>>()?;
    let mut rep = RegionReport {
        points: xs.len(),
        min_residual: f64::INFINITY,
        max_residual: f64::NEG_INFINITY,
        max_scaled_abs: 0.0,
        pass: true,
    };
    for (&x, &r) in xs.iter().zip(&res) {
        rep.min_residual = rep.min_residual.min(r);
        rep.max_residual = rep.max_residual.max(r);
        rep.max_scaled_abs = rep.max_scaled_abs.max(r.abs() / (1.0 + game.h(x).abs()));
        rep.pass &= accept(x, r);
    }
    Ok((rep, res))
}

/// Runs every check on the pair `(a, b)` of `game`. `a` may be `-infinity`
/// (SP, no control) and may equal `b` (SP, collapsed).
pub fn check_vi<G: BarrierGame>(
    model: &LevyModelSpec,
    game: &G,
    a: f64,
    b: f64,
    opts: &VerifyOptions,
) -> Result<ViReport> {
    let gen = Generator::new(model)?;
    let v = BarrierValue { game, a, b };
    let n = opts.n_region;
    let span = opts.region_span;
    let side = game.side();
    let sigma = model.sigma;

    let cont_lo = if a.is_finite() { a } else { b - 2.0 * span };
    let continuation = if b > cont_lo {
        let xs: Vec<f64> = (0..n).map(|i| cont_lo + (b - cont_lo) * (i as f64 + 0.5) / n as f64).collect();
        Some(region(&gen, game, &v, &xs, opts.exec, |x, r| r.abs() <= 1e-5 * (1.0 + game.h(x).abs()))?.0)
    } else {
        None
    };

    let (below_a, below_a_monotone) = if a.is_finite() {
        let mut xs: Vec<f64> = (0..n).map(|i| a - span * (i + 1) as f64 / n as f64).collect();
        xs.reverse();
        let (rep, res) = region(&gen, game, &v, &xs, opts.exec, |_, r| r >= -1e-6)?;
        let mono = (side == Side::SpectrallyNegative).then(|| res.windows(2).all(|w| w[1] - w[0] <= 1e-6));
        (Some(rep), mono)
    } else {
        (None, None)
    };

    let xs: Vec<f64> = (0..n).map(|i| b + span * (i + 1) as f64 / n as f64).collect();
    let above_b = region(&gen, game, &v, &xs, opts.exec, |_, r| r <= 1e-6)?.0;

    let (order_a, order_b) = fit_orders(side, sigma);
    let fit_a = (a.is_finite() && a < b).then(|| {
        let value_gap = game.j_cont(a, b, a) - game.j(a, b, a);
        let first_gap = game.j_cont_prime(a, b, a) + 1.0;
        let second_gap = game.j_cont_second(a, b, a);
        gap(a, order_a, value_gap, first_gap, second_gap)
    });
    let fit_b = if a < b {
        let value_gap = game.j_cont(a, b, b) - game.g(b);
        let first_gap = game.j_cont_prime(a, b, b) - game.k();
        gap(b, order_b, value_gap, first_gap, 0.0)
    } else {
        gap(b, 0, game.j(a, b, b) - game.g(b), 0.0, 0.0)
    };

    let lo = if a.is_finite() { a - span } else { b - 3.0 * span };
    let hi = b + span;
    let m = opts.n_convex.max(3);
    let grid: Vec<f64> = (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect();
    let vals = opts.exec.map_slice(&grid, |&x| (v.value(x), v.prime(x)));
    let convexity_min = vals
        .windows(3)
        .map(|w| w[0].0 - 2.0 * w[1].0 + w[2].0)
        .fold(f64::INFINITY, f64::min);
    let derivative_min = vals.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let derivative_max = vals.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let min_value_minus_g = grid
        .iter()
        .zip(&vals)
        .map(|(&x, p)| p.0 - game.g(x))
        .fold(f64::INFINITY, f64::min);
    let convexity_pass = convexity_min >= -1e-7;
    let bounds_pass =
        derivative_min >= -1.0 - 1e-9 && derivative_max <= game.k() + 1e-9 && min_value_minus_g >= -1e-9;

    // At a collapsed pair the midpoint is the barrier itself, where every
    // strategy pays g(b); probe slightly below instead.
    let mid = if !a.is_finite() {
        b - span
    } else if a < b {
        0.5 * (a + b)
    } else {
        b - 0.25 * span
    };
    let saddle = check_saddle_grid(game, a, b, &[mid], opts.saddle_step, opts.saddle_span, opts.exec);

    let pass = continuation.as_ref().is_none_or(|r| r.pass)
        && below_a.as_ref().is_none_or(|r| r.pass)
        && above_b.pass
        && below_a_monotone.unwrap_or(true)
        && fit_a.as_ref().is_none_or(|f| f.pass)
        && fit_b.pass
        && convexity_pass
        && bounds_pass
        && saddle.iter().all(|s| s.pass);
    Ok(ViReport {
        a: a.is_finite().then_some(a),
        b,
        below_a,
        continuation,
        above_b,
        below_a_monotone,
        fit_a,
        fit_b,
        convexity_min,
        convexity_pass,
        derivative_min,
        derivative_max,
        min_value_minus_g,
        bounds_pass,
        saddle,
        pass,
    })
}

fn gap(at: f64, required: u8, value_gap: f64, first_gap: f64, second_gap: f64) -> FitGap {
    let pass = value_gap.abs() <= FIT_TOL
        && (required < 1 || first_gap.abs() <= FIT_TOL)
        && (required < 2 || second_gap.abs() <= FIT_TOL);
    FitGap { at, required, value_gap, first_gap, second_gap, pass }
}

/// For each `x`, scans `b -> J_{a*,b}(x)` and `a -> J_{a,b*}(x)` on grids of
/// the given step within `span` of the barriers and checks that the maximiser
/// and minimiser sit within one step of `b*` and `a*`.
pub fn check_saddle_grid<G: BarrierGame>(
    game: &G,
    a_star: f64,
    b_star: f64,
    xs: &[f64],
    step: f64,
    span: f64,
    exec: Execution,
) -> Vec<SaddleReport> {
    let k = (span / step).round() as i64;
    let offsets: Vec<i64> = (-k..=k).collect();
    let tol = step * (1.0 + 1e-9);
    xs.iter()
        .map(|&x| {
            let bs: Vec<f64> = offsets
                .iter()
                .map(|&i| b_star + i as f64 * step)
                .filter(|&b| b >= a_star)
                .collect();
            let jb = exec.map_slice(&bs, |&b| game.j(a_star, b, x));
            let argmax_b = nearest_best(&bs, &jb, b_star, |p, c| c > p);
            let (argmin_a, a_offset) = if a_star.is_finite() {
                let as_: Vec<f64> = offsets
                    .iter()
                    .map(|&i| a_star + i as f64 * step)
                    .filter(|&a| a <= b_star)
                    .collect();
                let ja = exec.map_slice(&as_, |&a| game.j(a, b_star, x));
                let am = nearest_best(&as_, &ja, a_star, |p, c| c < p);
                (Some(am), Some(am - a_star))
            } else {
                (None, None)
            };
            let b_offset = argmax_b - b_star;
            let pass = b_offset.abs() <= tol && a_offset.is_none_or(|o| o.abs() <= tol);
            SaddleReport { x, argmax_b, argmin_a, b_offset, a_offset, pass }
        })
        .collect()
}

/// Grid point closest to `target` among those whose value ties the best one
/// up to rounding.
fn nearest_best(xs: &[f64], v: &[f64], target: f64, better: impl Fn(f64, f64) -> bool) -> f64 {
    let mut best = v[0];
    for &c in &v[1..] {
        if better(best, c) {
            best = c;
        }
    }
    let tie = 1e-12 * (1.0 + best.abs());
    xs.iter()
        .zip(v)
        .filter(|(_, &c)| (c - best).abs() <= tie)
        .map(|(&x, _)| x)
        .min_by(|p, r| (p - target).abs().total_cmp(&(r - target).abs()))
        .expect("nonempty grid")
}

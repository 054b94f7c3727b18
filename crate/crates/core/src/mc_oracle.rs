//! Monte Carlo estimates of `J_{a,b}(x)` and of the two-sided exit
//! transforms, independent of the scale-function machinery.
//!
//! With `sigma = 0` paths are simulated exactly (piecewise-linear between
//! jumps). With `sigma > 0` the Brownian part is stepped with `dt`; inside a
//! step the reflection uses the sampled bridge minimum, and a crossing of the
//! upper level is detected either at the step end or through the bridge
//! crossing probability.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{pairwise_sum, Execution};
use crate::levy_model::{JumpSampler, LevyModelSpec, Side};
use crate::sn_solver::GameCosts;

const BLOCK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub antithetic: bool,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { n_paths: 100_000, dt: 1e-3, horizon: 300.0, seed: 20240601, antithetic: false, exec: Execution::default() }
    }
}

impl SimConfig {
    pub fn validate(&self, q: f64) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::ConfigError("n_paths must be positive".into()));
        }
        if self.antithetic && !self.n_paths.is_multiple_of(2) {
            return Err(Error::ConfigError("antithetic sampling needs an even n_paths".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::ConfigError(format!("dt = {} must be positive", self.dt)));
        }
        if !((-q * self.horizon).exp() <= 1e-6) {
            return Err(Error::ConfigError(format!(
                "horizon {} too short: exp(-q T) = {:e} exceeds 1e-6",
                self.horizon,
                (-q * self.horizon).exp()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n_paths: usize,
    pub truncation_bias_bound: f64,
}

/// Estimates of the three exit transforms of the spectrally negative process
/// started at `x` in `[0, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassageEstimate {
    /// `E_x[e^{-q T_b^+}; T_b^+ < T_0^-]`.
    pub up: CostEstimate,
    /// `E_x[e^{-q T_0^-}; T_0^- < T_b^+]`.
    pub down_before_up: CostEstimate,
    /// `E_x[e^{-q T_0^-}]`.
    pub down: CostEstimate,
}

/// Random sources for one path. Normals and jumps use separate streams so an
/// antithetic partner can replay the Brownian draws with flipped sign while
/// taking fresh jumps. Sharing the jumps as well would correlate the pair
/// positively through the jump part.
struct Streams {
    normals: ChaCha8Rng,
    jumps: ChaCha8Rng,
    flip: f64,
}

impl Streams {
    fn normal(&mut self) -> f64 {
        let z: f64 = self.normals.sample(StandardNormal);
        self.flip * z
    }
    fn uniform(&mut self) -> f64 {
        self.normals.random()
    }
    fn exp(&mut self, rate: f64) -> f64 {
        let u: f64 = self.jumps.random();
        -(1.0 - u).ln() / rate
    }
}

/// Minimum of a Brownian bridge from 0 to `y` with total variance `var`,
/// by inversion of `P(min <= m) = exp(-2 m (m - y)/var)`.
fn bridge_min(y: f64, var: f64, v: f64) -> f64 {
    0.5 * (y - (y * y - 2.0 * var * (1.0 - v).ln()).sqrt())
}

/// Probability that a Brownian bridge whose endpoints sit at distances `d0`
/// and `d1` on the same side of a level touches it.
fn bridge_cross_prob(d0: f64, d1: f64, var: f64) -> f64 {
    if d0 <= 0.0 || d1 <= 0.0 {
        return 1.0;
    }
    (-2.0 * d0 * d1 / var).exp()
}

/// `int_0^s e^{-q u} (h0 + s1 u) du` for affine integrands.
fn disc_affine(q: f64, s: f64, h0: f64, s1: f64) -> f64 {
    let qs = q * s;
    let (i0, i1) = if qs < 1e-4 {
        (s * (1.0 - qs / 2.0 + qs * qs / 6.0), s * s * (0.5 - qs / 3.0 + qs * qs / 8.0))
    } else {
        let e = (-qs).exp();
        ((1.0 - e) / q, (1.0 - e * (1.0 + qs)) / (q * q))
    };
    h0 * i0 + s1 * i1
}

struct Dynamics {
    side: Side,
    sigma: f64,
    delta: f64,
    kappa: f64,
    q: f64,
    sampler: JumpSampler,
}

impl Dynamics {
    fn new(model: &LevyModelSpec) -> Self {
        Dynamics {
            side: model.side,
            sigma: model.sigma,
            delta: model.delta,
            kappa: model.kappa,
            q: model.q,
            sampler: model.jumps.sampler(),
        }
    }

    /// Drift and jump direction of the process being simulated.
    fn signs(&self) -> (f64, f64) {
        match self.side {
            Side::SpectrallyNegative => (self.delta, -1.0),
            Side::SpectrallyPositive => (-self.delta, 1.0),
        }
    }

    /// One path of the discounted payoff under `(xi^a, tau_{a,b})`.
    fn cost_path(&self, costs: &GameCosts, a: f64, b: f64, x: f64, cfg: &SimConfig, s: &mut Streams) -> f64 {
        let q = self.q;
        let (drift, jump_dir) = self.signs();
        let h = |u: f64| -costs.alpha * u + costs.beta;
        let mut acc = 0.0;
        let mut u = x;
        if u < a {
            acc += a - u;
            u = a;
        }
        if u >= b {
            return acc + costs.g(u);
        }
        let mut t = 0.0;
        let mut next_jump = s.exp(self.kappa);
        loop {
            if t >= cfg.horizon {
                return acc;
            }
            let until = next_jump.min(cfg.horizon);
            if self.sigma == 0.0 {
                let span = until - t;
                if drift > 0.0 {
                    let hit = (b - u) / drift;
                    if hit <= span {
                        acc += (-q * t).exp() * disc_affine(q, hit, h(u), -costs.alpha * drift);
                        return acc + (-q * (t + hit)).exp() * costs.g(b);
                    }
                    acc += (-q * t).exp() * disc_affine(q, span, h(u), -costs.alpha * drift);
                    u += drift * span;
                } else {
                    // Drifts down onto a and then is held there at rate |drift|.
                    let reach = if a.is_finite() { (u - a) / -drift } else { f64::INFINITY };
                    let free = reach.min(span);
                    acc += (-q * t).exp() * disc_affine(q, free, h(u), -costs.alpha * drift);
                    u += drift * free;
                    if free < span {
                        let held = span - free;
                        acc += (-q * (t + free)).exp() * disc_affine(q, held, h(a) - drift, 0.0);
                        u = a;
                    }
                }
                t = until;
            } else {
                let disc_dt = (-q * cfg.dt).exp();
                let mut disc = (-q * t).exp();
                while t < until {
                    let step = (until - t).min(cfg.dt);
                    let dn = if step == cfg.dt { disc_dt } else { (-q * step).exp() };
                    let free = u + drift * step + self.sigma * step.sqrt() * s.normal();
                    let var = self.sigma * self.sigma * step;
                    // Reflection over the step from the bridge minimum.
                    let low = u + bridge_min(free - u, var, s.uniform());
                    let push = if low < a { a - low } else { 0.0 };
                    let next = free + push;
                    let crossed = next >= b || s.uniform() < bridge_cross_prob(b - u, b - next, var);
                    if crossed {
                        let theta = if next >= b { (b - u) / (next - u) } else { 0.5 };
                        let tau = theta * step;
                        let d_tau = (-q * tau).exp();
                        acc += 0.5 * tau * disc * (h(u) + d_tau * h(b));
                        return acc + disc * d_tau * costs.g(b);
                    }
                    if push > 0.0 {
                        acc += disc * dn * push;
                    }
                    acc += 0.5 * step * disc * (h(u) + dn * h(next));
                    u = next;
                    t += step;
                    disc *= dn;
                }
                t = until;
            }
            if t >= cfg.horizon {
                return acc;
            }
            // Jump at time t.
            let disc = (-q * t).exp();
            u += jump_dir * self.sampler.sample(&mut s.jumps);
            if u >= b {
                return acc + disc * costs.g(u);
            }
            if u < a {
                acc += disc * (a - u);
                u = a;
            }
            next_jump = t + s.exp(self.kappa);
        }
    }

    /// Exit times of the uncontrolled spectrally negative process from
    /// `[0, b]`, continued past `T_b^+` until `T_0^-`. Returns the three
    /// discounted indicators.
    fn passage_path(&self, x: f64, b: f64, cfg: &SimConfig, s: &mut Streams) -> [f64; 3] {
        let q = self.q;
        let drift = self.delta;
        let mut up_time: Option<f64> = if x >= b { Some(0.0) } else { None };
        let mut u = x;
        let mut t = 0.0;
        let mut next_jump = s.exp(self.kappa);
        let finish = |up: Option<f64>, down: Option<f64>| {
            let e = |v: Option<f64>| v.map_or(0.0, |t| (-q * t).exp());
            let up_first = match (up, down) {
                (Some(tu), Some(td)) => tu < td,
                (Some(_), None) => true,
                _ => false,
            };
            let down_first = down.is_some() && !up_first;
            [if up_first { e(up) } else { 0.0 }, if down_first { e(down) } else { 0.0 }, e(down)]
        };
        if x < 0.0 {
            return finish(up_time, Some(0.0));
        }
        while t < cfg.horizon {
            let until = next_jump.min(cfg.horizon);
            if self.sigma == 0.0 {
                if up_time.is_none() && u + drift * (until - t) >= b {
                    up_time = Some(t + (b - u) / drift);
                }
                u += drift * (until - t);
                t = until;
            } else {
                while t < until {
                    let step = (until - t).min(cfg.dt);
                    let next = u + drift * step + self.sigma * step.sqrt() * s.normal();
                    let var = self.sigma * self.sigma * step;
                    let (p_up, p_down) = (s.uniform(), s.uniform());
                    if up_time.is_none() && (next >= b || p_up < bridge_cross_prob(b - u, b - next, var)) {
                        let theta = if next >= b { (b - u) / (next - u) } else { 0.5 };
                        up_time = Some(t + theta * step);
                    }
                    if next < 0.0 || p_down < bridge_cross_prob(u, next, var) {
                        let theta = if next < 0.0 { u / (u - next) } else { 0.5 };
                        return finish(up_time, Some(t + theta * step));
                    }
                    u = next;
                    t += step;
                }
                t = until;
            }
            if t >= cfg.horizon {
                break;
            }
            u -= self.sampler.sample(&mut s.jumps);
            if u < 0.0 {
                return finish(up_time, Some(t));
            }
            next_jump = t + s.exp(self.kappa);
        }
        finish(up_time, None)
    }
}

/// Runs `path` over all blocks and reduces to mean and standard error.
fn run<F>(cfg: &SimConfig, path: F) -> (f64, f64)
where
    F: Fn(&mut Streams) -> f64 + Sync + Send,
{
    let samples = collect_samples(cfg, |s| vec![path(s)]);
    let v: Vec<f64> = samples.into_iter().map(|r| r[0]).collect();
    mean_and_se(&v)
}

/// Per-sample vectors; with antithetic sampling each sample is the mean of a
/// pair.
fn collect_samples<F>(cfg: &SimConfig, path: F) -> Vec<Vec<f64>>
where
    F: Fn(&mut Streams) -> Vec<f64> + Sync + Send,
{
    let n_samples = if cfg.antithetic { cfg.n_paths / 2 } else { cfg.n_paths };
    let n_blocks = n_samples.div_ceil(BLOCK);
    let blocks = cfg.exec.map_range(n_blocks, |blk| {
        let mut normals = ChaCha8Rng::seed_from_u64(cfg.seed);
        normals.set_stream(2 * blk as u64);
        let mut jumps = ChaCha8Rng::seed_from_u64(cfg.seed);
        jumps.set_stream(2 * blk as u64 + 1);
        let mut s = Streams { normals, jumps, flip: 1.0 };
        let count = BLOCK.min(n_samples - blk * BLOCK);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            if cfg.antithetic {
                let n0 = s.normals.get_word_pos();
                let first = path(&mut s);
                let n1 = s.normals.get_word_pos();
                s.normals.set_word_pos(n0);
                s.flip = -1.0;
                let second = path(&mut s);
                s.flip = 1.0;
                s.normals.set_word_pos(n1.max(s.normals.get_word_pos()));
                out.push(first.iter().zip(&second).map(|(p, r)| 0.5 * (p + r)).collect());
            } else {
                out.push(path(&mut s));
            }
        }
        out
    });
    blocks.into_iter().flatten().collect()
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = pairwise_sum(v) / n;
    let dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = if v.len() > 1 { pairwise_sum(&dev) / (n - 1.0) } else { 0.0 };
    (mean, (var / n).sqrt())
}

/// Monte Carlo estimate of `J_{a,b}(x)`: reflection at `a` (which may be
/// `-infinity`), stop at the first time the controlled process is at or
/// above `b`, payoff `g` there.
pub fn simulate_cost(
    model: &LevyModelSpec,
    costs: &GameCosts,
    a: f64,
    b: f64,
    x: f64,
    cfg: &SimConfig,
) -> Result<CostEstimate> {
    cfg.validate(model.q)?;
    if !(a <= b) || !b.is_finite() || !x.is_finite() {
        return Err(Error::ConfigError(format!("need a <= b and finite b, x (a = {a}, b = {b}, x = {x})")));
    }
    let dynm = Dynamics::new(model);
    let (mean, std_err) = run(cfg, |s| dynm.cost_path(costs, a, b, x, cfg, s));
    // Reachable states before stopping lie in [lo, hi].
    let lo = if a.is_finite() { a.min(x) } else { x.min(b) - cfg.horizon * model.delta };
    let hi = match model.side {
        Side::SpectrallyNegative => b,
        Side::SpectrallyPositive => b + model.jumps.tail_cutoff(1e-12),
    };
    let sup_h = (-costs.alpha * lo + costs.beta).abs().max((-costs.alpha * hi + costs.beta).abs());
    let sup_g = costs.g(lo).abs().max(costs.g(hi).abs());
    let truncation_bias_bound = (-model.q * cfg.horizon).exp() * (sup_h / model.q + sup_g);
    Ok(CostEstimate { mean, std_err, n_paths: cfg.n_paths, truncation_bias_bound })
}

/// Exit transforms of the spectrally negative process with the model's
/// parameters (the dual `-X` for a spectrally positive model).
pub fn simulate_passage(model: &LevyModelSpec, x: f64, b: f64, cfg: &SimConfig) -> Result<PassageEstimate> {
    cfg.validate(model.q)?;
    if !(0.0 <= x && x <= b) {
        return Err(Error::ConfigError(format!("need 0 <= x <= b, got x = {x}, b = {b}")));
    }
    let mut sn = model.clone();
    sn.side = Side::SpectrallyNegative;
    let dynm = Dynamics::new(&sn);
    let samples = collect_samples(cfg, |s| dynm.passage_path(x, b, cfg, s).to_vec());
    let bias = (-model.q * cfg.horizon).exp();
    let est = |k: usize| {
        let v: Vec<f64> = samples.iter().map(|r| r[k]).collect();
        let (mean, std_err) = mean_and_se(&v);
        CostEstimate { mean, std_err, n_paths: cfg.n_paths, truncation_bias_bound: bias }
    };
    Ok(PassageEstimate { up: est(0), down_before_up: est(1), down: est(2) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discounted_affine_integral() {
        let (q, s, h0, s1) = (0.3, 2.0, 1.5, -0.7);
        let want = crate::quadrature::integrate(|u| (-q * u).exp() * (h0 + s1 * u), 0.0, s, 1e-14, 1e-14);
        assert!((disc_affine(q, s, h0, s1) - want).abs() < 1e-13);
        let tiny = 1e-6;
        let want = crate::quadrature::integrate(|u| (-q * u).exp() * (h0 + s1 * u), 0.0, tiny, 1e-20, 1e-14);
        assert!((disc_affine(q, tiny, h0, s1) - want).abs() < 1e-18);
    }

    #[test]
    fn horizon_must_cover_discounting() {
        let cfg = SimConfig { horizon: 100.0, ..SimConfig::default() };
        assert!(matches!(cfg.validate(0.05), Err(Error::ConfigError(_))));
        assert!(SimConfig::default().validate(0.05).is_ok());
    }
}

//! Parameter sweeps: re-solve the game for each value of one parameter,
//! tabulate the value functions on a shared grid and check pointwise
//! monotonicity in the parameter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::game::{Equilibrium, GameConfig, Solution};

/// Points per value table when no grid is given.
pub const DEFAULT_GRID_POINTS: usize = 401;
/// Margin added on each side of the barriers for the default grid.
pub const DEFAULT_MARGIN: f64 = 2.0;
const MONOTONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    AlphaH,
    BetaH,
    #[serde(rename = "C_g")]
    CG,
    #[serde(rename = "K_g")]
    KG,
    Sigma,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::AlphaH => "alpha_h",
            SweepParam::BetaH => "beta_h",
            SweepParam::CG => "C_g",
            SweepParam::KG => "K_g",
            SweepParam::Sigma => "sigma",
        }
    }

    pub fn apply(self, base: &GameConfig, value: f64) -> GameConfig {
        let mut c = base.clone();
        match self {
            SweepParam::AlphaH => c.costs.alpha = value,
            SweepParam::BetaH => c.costs.beta = value,
            SweepParam::CG => c.costs.c = value,
            SweepParam::KG => c.costs.k = value,
            SweepParam::Sigma => c.sigma = value,
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl XGrid {
    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    pub values: Vec<f64>,
    #[serde(default)]
    pub x_grid: Option<XGrid>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Constant,
    Nondecreasing,
    Nonincreasing,
    Mixed,
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub outcome: std::result::Result<SweepTable, String>,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub solution: Solution,
    /// `(x, v(x), v'(x))` on the shared grid.
    pub rows: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub parameter: SweepParam,
    pub grid: XGrid,
    pub points: Vec<SweepPoint>,
    pub direction: Direction,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.outcome.is_err()).count()
    }
}

/// Solves every configuration (concurrently under `exec`), then tabulates
/// all of them on one grid. Without an explicit grid the grid spans
/// `[min a* - 2, max b* + 2]` over the successful points, using `b* - 2`
/// in place of an infinite `a*`.
pub fn run_sweep(base: &GameConfig, spec: &SweepSpec, exec: Execution) -> Result<SweepResult> {
    if spec.values.is_empty() {
        return Err(Error::ConfigError("sweep needs at least one value".into()));
    }
    if let Some(g) = spec.x_grid {
        if g.n == 0 || !(g.lo <= g.hi) {
            return Err(Error::ConfigError(format!("bad x grid {g:?}")));
        }
    }
    let solved: Vec<std::result::Result<Equilibrium, String>> = exec.map_slice(&spec.values, |&v| {
        let cfg = spec.parameter.apply(base, v);
        let model = cfg.model().map_err(|e| e.to_string())?;
        Equilibrium::solve(&model, cfg.costs).map_err(|e| e.to_string())
    });
    let grid = spec.x_grid.unwrap_or_else(|| {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for e in solved.iter().flatten() {
            let a = if e.a_star().is_finite() { e.a_star() } else { e.b_star() - DEFAULT_MARGIN };
            lo = lo.min(a - DEFAULT_MARGIN);
            hi = hi.max(e.b_star() + DEFAULT_MARGIN);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        XGrid { lo, hi, n: DEFAULT_GRID_POINTS }
    });
    let xs = grid.points();
    let points: Vec<SweepPoint> = spec
        .values
        .iter()
        .zip(solved)
        .map(|(&value, r)| SweepPoint {
            value,
            outcome: r.map(|e| SweepTable {
                solution: e.summary(),
                rows: xs.iter().map(|&x| (x, e.value(x), e.value_prime(x))).collect(),
            }),
        })
        .collect();
    let direction = monotonicity(&spec.values, &points);
    Ok(SweepResult { parameter: spec.parameter, grid, points, direction })
}

/// Direction of `v(x)` in the parameter, taking the successful points in
/// increasing parameter order. The direction must be the same at every `x`.
fn monotonicity(values: &[f64], points: &[SweepPoint]) -> Direction {
    let mut ok: Vec<(f64, &SweepTable)> =
        values.iter().zip(points).filter_map(|(&v, p)| p.outcome.as_ref().ok().map(|t| (v, t))).collect();
    ok.sort_by(|l, r| l.0.total_cmp(&r.0));
    let (mut up, mut down) = (false, false);
    for w in ok.windows(2) {
        for (r0, r1) in w[0].1.rows.iter().zip(&w[1].1.rows) {
            let d = r1.1 - r0.1;
            let tol = MONOTONE_TOL * (1.0 + r0.1.abs().max(r1.1.abs()));
            up |= d > tol;
            down |= d < -tol;
        }
    }
    match (up, down) {
        (false, false) => Direction::Constant,
        (true, false) => Direction::Nondecreasing,
        (false, true) => Direction::Nonincreasing,
        (true, true) => Direction::Mixed,
    }
}

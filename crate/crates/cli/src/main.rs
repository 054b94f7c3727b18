//! `levy-saddle`: solve, verify, simulate and sweep controller-vs-stopper
//! games from a JSON model file.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 violated model
//! assumption, 3 solver failure, 4 failed verification.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use levy_saddle::game::verify_pair;
use levy_saddle::mc_oracle::{simulate_cost, SimConfig};
use levy_saddle::sweep::{run_sweep, SweepResult, SweepSpec, XGrid, DEFAULT_GRID_POINTS, DEFAULT_MARGIN};
use levy_saddle::verifier::VerifyOptions;
use levy_saddle::{Equilibrium, Execution, GameConfig, ScaleFunctionRep, Solution};

const JOBS_ENV: &str = "LEVY_SADDLE_JOBS";

#[derive(Parser)]
#[command(name = "levy-saddle", version, about = "Saddle points of controller-vs-stopper games for one-sided Levy processes")]
struct Cli {
    /// Worker threads. `LEVY_SADDLE_JOBS` takes precedence; 1 runs sequentially.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve for (a*, b*) and print the equilibrium as JSON.
    Solve { config: PathBuf },
    /// Tabulate v and v' as CSV `x,v,vp`.
    Value {
        config: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Check a solution file against the variational inequalities.
    Verify { config: PathBuf, solution: PathBuf },
    /// Monte Carlo estimate of the payoff of the barrier pair (a, b) from x.
    Simulate {
        config: PathBuf,
        /// Reflection barrier; omit for no control.
        #[arg(long, allow_hyphen_values = true)]
        a: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        antithetic: bool,
    },
    /// Re-solve over a list of parameter values, writing one CSV per value.
    Sweep {
        config: PathBuf,
        sweep: PathBuf,
        #[arg(long, default_value = "sweep_out")]
        out_dir: PathBuf,
    },
    /// Tabulate the scale functions as CSV `x,W,Wp,Z,Zbar`.
    ScaleDump {
        config: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        lo: f64,
        #[arg(long, default_value_t = 5.0)]
        hi: f64,
        #[arg(long, default_value_t = 101)]
        n: usize,
    },
}

#[derive(clap::Args)]
struct GridArgs {
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    hi: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    n: usize,
}

/// Error carrying its exit code.
#[derive(Debug)]
struct Fail {
    code: u8,
    err: anyhow::Error,
}

impl From<anyhow::Error> for Fail {
    fn from(err: anyhow::Error) -> Self {
        let code = match err.downcast_ref::<levy_saddle::Error>() {
            Some(e) => exit_code(e),
            None => 1,
        };
        Fail { code, err }
    }
}

impl From<levy_saddle::Error> for Fail {
    fn from(e: levy_saddle::Error) -> Self {
        Fail { code: exit_code(&e), err: e.into() }
    }
}

fn exit_code(e: &levy_saddle::Error) -> u8 {
    use levy_saddle::Error::*;
    match e {
        InvalidModel(_) | ConfigError(_) => 1,
        AssumptionViolated(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Fail> {
    let exec = setup_jobs(cli.jobs)?;
    match cli.cmd {
        Cmd::Solve { config } => {
            let cfg = load_config(&config)?;
            let e = Equilibrium::solve(&cfg.model()?, cfg.costs)?;
            print_json(&e.summary())?;
        }
        Cmd::Value { config, grid } => {
            let cfg = load_config(&config)?;
            let e = Equilibrium::solve(&cfg.model()?, cfg.costs)?;
            let a = if e.a_star().is_finite() { e.a_star() } else { e.b_star() - DEFAULT_MARGIN };
            let g = XGrid {
                lo: grid.lo.unwrap_or(a - DEFAULT_MARGIN),
                hi: grid.hi.unwrap_or(e.b_star() + DEFAULT_MARGIN),
                n: grid.n,
            };
            check_grid(&g)?;
            let rows: Vec<_> = g.points().into_iter().map(|x| [x, e.value(x), e.value_prime(x)]).collect();
            print!("{}", csv("x,v,vp", &rows));
        }
        Cmd::Verify { config, solution } => {
            let cfg = load_config(&config)?;
            let sol: Solution = read_json(&solution)?;
            if sol.side != cfg.model()?.side {
                return Err(anyhow!("solution is for side {:?} but the config is {:?}", sol.side, cfg.side).into());
            }
            let opts = VerifyOptions { exec, ..VerifyOptions::default() };
            let report = verify_pair(&cfg.model()?, cfg.costs, sol.a(), sol.b_star, &opts)?;
            print_json(&report)?;
            if !report.pass {
                eprintln!("verification failed");
                return Ok(4);
            }
        }
        Cmd::Simulate { config, a, b, x, paths, dt, seed, horizon, antithetic } => {
            let cfg = load_config(&config)?;
            let d = SimConfig::default();
            let sim = SimConfig {
                n_paths: paths.unwrap_or(d.n_paths),
                dt: dt.unwrap_or(d.dt),
                horizon: horizon.unwrap_or(d.horizon),
                seed: seed.unwrap_or(d.seed),
                antithetic,
                exec,
            };
            let est = simulate_cost(&cfg.model()?, &cfg.costs, a.unwrap_or(f64::NEG_INFINITY), b, x, &sim)?;
            print_json(&est)?;
        }
        Cmd::Sweep { config, sweep, out_dir } => {
            let cfg = load_config(&config)?;
            let spec: SweepSpec = read_json(&sweep)?;
            if let Some(g) = spec.x_grid {
                check_grid(&g)?;
            }
            let result = run_sweep(&cfg, &spec, exec)?;
            let summary = write_sweep(&result, &out_dir)?;
            print_json(&summary)?;
        }
        Cmd::ScaleDump { config, lo, hi, n } => {
            let cfg = load_config(&config)?;
            let g = XGrid { lo, hi, n };
            check_grid(&g)?;
            if lo < 0.0 {
                return Err(anyhow!("scale functions are tabulated on x >= 0, got lo = {lo}").into());
            }
            let rep = ScaleFunctionRep::from_model(&cfg.model()?)?;
            let rows: Vec<_> = g
                .points()
                .into_iter()
                .map(|x| {
                    let p = rep.eval(x);
                    [x, p.w(), p.wp(), p.z(), p.z_bar()]
                })
                .collect();
            print!("{}", csv("x,W,Wp,Z,Zbar", &rows));
        }
    }
    Ok(0)
}

fn setup_jobs(flag: Option<usize>) -> anyhow::Result<Execution> {
    let jobs = match std::env::var(JOBS_ENV) {
        Ok(s) => Some(s.trim().parse::<usize>().with_context(|| format!("{JOBS_ENV}={s:?} is not a thread count"))?),
        Err(_) => flag,
    };
    match jobs {
        Some(0) => Err(anyhow!("--jobs must be at least 1")),
        Some(1) => Ok(Execution::Sequential),
        Some(n) => {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("building the thread pool")?;
            Ok(Execution::Parallel)
        }
        None => Ok(Execution::Parallel),
    }
}

fn check_grid(g: &XGrid) -> anyhow::Result<()> {
    if g.n == 0 || !(g.lo <= g.hi) || !g.hi.is_finite() || !g.lo.is_finite() {
        return Err(anyhow!("bad grid: lo = {}, hi = {}, n = {}", g.lo, g.hi, g.n));
    }
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_config(path: &Path) -> anyhow::Result<GameConfig> {
    read_json(path)
}

/// Rounds to 12 significant digits; non-finite values pass through.
fn round12(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

/// CSV field: plain notation for moderate magnitudes, exponent otherwise.
fn fmt12(v: f64) -> String {
    let r = round12(v);
    if r == 0.0 || !r.is_finite() || (1e-4..1e15).contains(&r.abs()) {
        r.to_string()
    } else {
        format!("{r:e}")
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64().filter(|_| n.is_f64()) {
                if let Some(r) = serde_json::Number::from_f64(round12(f)) {
                    *n = r;
                }
            }
        }
        Value::Array(xs) => xs.iter_mut().for_each(round_value),
        Value::Object(m) => m.values_mut().for_each(round_value),
        _ => {}
    }
}

fn to_rounded_json<T: Serialize>(x: &T) -> anyhow::Result<String> {
    let mut v = serde_json::to_value(x)?;
    round_value(&mut v);
    Ok(serde_json::to_string_pretty(&v)?)
}

fn print_json<T: Serialize>(x: &T) -> anyhow::Result<()> {
    let s = to_rounded_json(x)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{s}")?;
    Ok(())
}

fn csv<const N: usize>(header: &str, rows: &[[f64; N]]) -> String {
    let mut s = String::with_capacity(rows.len() * N * 20);
    s.push_str(header);
    s.push('\n');
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| fmt12(*v)).collect();
        let _ = writeln!(s, "{}", line.join(","));
    }
    s
}

/// Writes `path` via a temporary sibling and a rename.
fn write_atomic(path: &Path, contents: &str) -> anyhow::Result<()> {
    let name = path.file_name().ok_or_else(|| anyhow!("bad output path {}", path.display()))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))
}

fn write_sweep(r: &SweepResult, dir: &Path) -> anyhow::Result<Value> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let param = r.parameter.name();
    let mut tables = Vec::new();
    let mut summary = Vec::new();
    let mut failures = Vec::new();
    for (i, p) in r.points.iter().enumerate() {
        match &p.outcome {
            Ok(t) => {
                let file = dir.join(format!("{param}_{i:02}.csv"));
                let rows: Vec<[f64; 3]> = t.rows.iter().map(|&(x, v, vp)| [x, v, vp]).collect();
                write_atomic(&file, &csv("x,v,vp", &rows))?;
                tables.push(json!({ "value": p.value, "case": t.solution.case, "file": file }));
                summary.push([p.value, t.solution.a(), t.solution.b_star]);
            }
            Err(msg) => {
                eprintln!("{param} = {}: {msg}", p.value);
                failures.push(json!({ "value": p.value, "error": msg }));
            }
        }
    }
    let summary_file = dir.join(format!("{param}_summary.csv"));
    write_atomic(&summary_file, &csv("param,a_star,b_star", &summary))?;
    Ok(json!({
        "parameter": param,
        "grid": r.grid,
        "direction": r.direction,
        "tables": tables,
        "summary": summary_file,
        "failures": failures,
    }))
}

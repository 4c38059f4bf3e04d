//! `tree-majority` command line.
//!
//! Every report echoes the invocation as a `run` object; feeding
//! [`RunSpec::to_args`] back through the parser reproduces the same report.
//! Exit codes: 0 success, 2 usage or validation, 3 unsupported regime,
//! 4 solver failure.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{self, DEFAULT_TOL};
use crate::error::Error;
use crate::gmap::{self, UpdateMap};
use crate::policy::{self, ModelParams};
use crate::sim::{self, SimConfig};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_UNSUPPORTED: u8 = 3;
pub const EXIT_SOLVER: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "tree-majority",
    version,
    about = "Absolute-majority dynamics on rooted m-ary trees"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Report format (default: csv for gmap, json otherwise).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Children per vertex.
    #[arg(long)]
    pub m: usize,
    /// Shorthand for --p-b P --p-r P.
    #[arg(long, conflicts_with_all = ["p_b", "p_r"])]
    pub p: Option<f64>,
    #[arg(long = "p-b", requires = "p_r")]
    pub p_b: Option<f64>,
    #[arg(long = "p-r", requires = "p_b")]
    pub p_r: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct TreeArgs {
    #[arg(long)]
    pub depth: usize,
    #[arg(long)]
    pub horizon: usize,
    #[arg(long = "pi0")]
    pub pi_0: f64,
    #[arg(long)]
    pub reps: u64,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Policy table f_m(0..=m).
    Policy(ModelArgs),
    /// Samples of g, g' and g'' on a uniform grid.
    Gmap {
        #[command(flatten)]
        model: ModelArgs,
        /// Number of intervals; N + 1 points are written.
        #[arg(long, default_value_t = 100)]
        grid: usize,
    },
    /// All fixed points of g_m with stability labels.
    FixedPoints {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Closed-form fixed points for m = 3, p_B = 1.
    ClosedForm {
        #[arg(long = "p-r")]
        p_r: f64,
    },
    /// Orbit pi_{t+1} = g_m(pi_t).
    Trajectory {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "pi0")]
        pi_0: f64,
        #[arg(long, default_value_t = analysis::DEFAULT_MAX_STEPS)]
        steps: usize,
        #[arg(long = "conv-tol", default_value_t = 1e-13)]
        conv_tol: f64,
    },
    /// Limit of the orbit predicted from the fixed-point structure.
    Limit {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "pi0")]
        pi_0: f64,
    },
    /// Critical p(m) for p_B = p_R = p.
    Threshold {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Monte Carlo run of the tree process.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        tree: TreeArgs,
    },
    /// Monte Carlo estimate of g_m(x) from the update rule.
    OneStep {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        samples: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Max |correlation| between same-level vertex states.
    Independence {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long)]
        level: usize,
        #[arg(long, default_value_t = 32)]
        pairs: usize,
    },
    /// Analytic derivatives against finite differences.
    Dcheck {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 200)]
        grid: usize,
    },
}

/// Echo of a parsed invocation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi_0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conv_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    pub format: Format,
}

impl RunSpec {
    /// Command-line arguments (without the program name) that parse back to
    /// this spec.
    pub fn to_args(&self) -> Vec<String> {
        let mut args = vec![self.command.clone()];
        let mut flag = |name: &str, value: Option<String>| {
            if let Some(v) = value {
                args.push(format!("--{name}"));
                args.push(v);
            }
        };
        let f = |v: Option<f64>| v.map(|x| x.to_string());
        let u = |v: Option<usize>| v.map(|x| x.to_string());
        let w = |v: Option<u64>| v.map(|x| x.to_string());
        flag("m", u(self.m));
        flag("p", f(self.p));
        flag("p-b", f(self.p_b));
        flag("p-r", f(self.p_r));
        flag("pi0", f(self.pi_0));
        flag("x", f(self.x));
        flag("steps", u(self.steps));
        flag("tol", f(self.tol));
        flag("conv-tol", f(self.conv_tol));
        flag("grid", u(self.grid));
        flag("depth", u(self.depth));
        flag("horizon", u(self.horizon));
        flag("reps", w(self.reps));
        flag("seed", w(self.seed));
        flag("samples", w(self.samples));
        flag("level", u(self.level));
        flag("pairs", u(self.pairs));
        let format = match self.format {
            Format::Json => "json",
            Format::Csv => "csv",
        };
        flag("format", Some(format.to_string()));
        args
    }
}

/// A rendered report: always JSON, CSV where the data is a table.
pub struct Report {
    pub json: Value,
    pub csv: Option<String>,
}

impl ModelArgs {
    fn params(&self) -> Result<ModelParams, Error> {
        match (self.p, self.p_b, self.p_r) {
            (Some(p), None, None) => ModelParams::symmetric(self.m, p),
            (None, Some(b), Some(r)) => ModelParams::new(self.m, b, r),
            _ => Err(Error::InvalidParams(
                "give either --p or both --p-b and --p-r".into(),
            )),
        }
    }

    fn echo(&self, spec: &mut RunSpec) {
        spec.m = Some(self.m);
        spec.p = self.p;
        spec.p_b = self.p_b;
        spec.p_r = self.p_r;
    }
}

impl TreeArgs {
    fn config(&self, params: ModelParams) -> SimConfig {
        SimConfig {
            params,
            depth: self.depth,
            horizon: self.horizon,
            pi_0: self.pi_0,
            seed: self.seed,
            replications: self.reps,
        }
    }

    fn echo(&self, spec: &mut RunSpec) {
        spec.depth = Some(self.depth);
        spec.horizon = Some(self.horizon);
        spec.pi_0 = Some(self.pi_0);
        spec.reps = Some(self.reps);
        spec.seed = Some(self.seed);
    }
}

/// `%.17g`: 17 significant digits, trailing zeros trimmed.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    } else {
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{mantissa}e{exp}")
    }
}

fn csv_table(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Map a library error to the process exit code.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::UnsupportedRegime(_) | Error::EveryPointFixed => EXIT_UNSUPPORTED,
        Error::Solver { .. } => EXIT_SOLVER,
        Error::InvalidParams(_) | Error::OutOfRange { .. } | Error::Precondition(_) | Error::Config(_) => {
            EXIT_USAGE
        }
    }
}

fn default_format(cmd: &Command) -> Format {
    match cmd {
        Command::Gmap { .. } => Format::Csv,
        _ => Format::Json,
    }
}

/// Run a parsed command. Returns the echo and the report.
pub fn execute(cli: &Cli) -> Result<(RunSpec, Report), Error> {
    let mut spec = RunSpec {
        format: cli.format.unwrap_or_else(|| default_format(&cli.command)),
        ..RunSpec::default()
    };
    let report = match &cli.command {
        Command::Policy(model) => {
            spec.command = "policy".into();
            model.echo(&mut spec);
            let table = policy::policy_table(&model.params()?);
            let by_k: serde_json::Map<String, Value> = table
                .values()
                .iter()
                .enumerate()
                .map(|(k, &f)| (k.to_string(), json!(f)))
                .collect();
            Report {
                json: json!({ "policy": by_k }),
                csv: Some(csv_table(
                    "k,f",
                    table
                        .values()
                        .iter()
                        .enumerate()
                        .map(|(k, &f)| vec![k.to_string(), fmt17(f)]),
                )),
            }
        }
        Command::Gmap { model, grid } => {
            spec.command = "gmap".into();
            model.echo(&mut spec);
            spec.grid = Some(*grid);
            if *grid < 1 {
                return Err(Error::out_of_range("grid", *grid as f64, ">= 1"));
            }
            let map = UpdateMap::new(model.params()?);
            let rows: Vec<[f64; 4]> = (0..=*grid)
                .map(|i| {
                    let x = i as f64 / *grid as f64;
                    Ok([x, map.eval(x)?, map.prime(x)?, map.double_prime(x)?])
                })
                .collect::<Result<_, Error>>()?;
            Report {
                json: json!({
                    "samples": rows.iter().map(|r| json!({
                        "x": r[0], "g": r[1], "gprime": r[2], "gdoubleprime": r[3]
                    })).collect::<Vec<_>>()
                }),
                csv: Some(csv_table(
                    "x,g,gprime,gdoubleprime",
                    rows.iter().map(|r| r.iter().map(|&v| fmt17(v)).collect()),
                )),
            }
        }
        Command::FixedPoints { model, tol } => {
            spec.command = "fixed-points".into();
            model.echo(&mut spec);
            spec.tol = Some(*tol);
            fixed_point_report(&analysis::find_fixed_points(&model.params()?, *tol)?)
        }
        Command::ClosedForm { p_r } => {
            spec.command = "closed-form".into();
            spec.p_r = Some(*p_r);
            fixed_point_report(&analysis::m3_pb1_closed_form(*p_r)?)
        }
        Command::Trajectory {
            model,
            pi_0,
            steps,
            conv_tol,
        } => {
            spec.command = "trajectory".into();
            model.echo(&mut spec);
            spec.pi_0 = Some(*pi_0);
            spec.steps = Some(*steps);
            spec.conv_tol = Some(*conv_tol);
            let t = analysis::iterate_dynamics(&model.params()?, *pi_0, *steps, *conv_tol)?;
            Report {
                json: json!({
                    "values": t.values,
                    "converged": t.converged,
                    "limit": t.limit,
                    "steps": t.steps(),
                }),
                csv: Some(csv_table(
                    "t,pi",
                    t.values
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| vec![i.to_string(), fmt17(v)]),
                )),
            }
        }
        Command::Limit { model, pi_0 } => {
            spec.command = "limit".into();
            model.echo(&mut spec);
            spec.pi_0 = Some(*pi_0);
            let limit = analysis::predict_limit(&model.params()?, *pi_0)?;
            Report {
                json: json!({ "limit": limit }),
                csv: Some(csv_table("pi0,limit", [vec![fmt17(*pi_0), fmt17(limit)]])),
            }
        }
        Command::Threshold { m, tol } => {
            spec.command = "threshold".into();
            spec.m = Some(*m);
            spec.tol = Some(*tol);
            let r = analysis::solve_threshold(*m, *tol)?;
            Report {
                json: json!({
                    "m": r.m,
                    "p_threshold": r.p_threshold,
                    "bracket_width": r.bracket_width,
                    "evaluations": r.evaluations,
                    "boundary": r.boundary,
                }),
                csv: Some(csv_table(
                    "m,p_threshold,bracket_width,evaluations,boundary",
                    [vec![
                        r.m.to_string(),
                        fmt17(r.p_threshold),
                        fmt17(r.bracket_width),
                        r.evaluations.to_string(),
                        r.boundary.to_string(),
                    ]],
                )),
            }
        }
        Command::Simulate { model, tree } => {
            spec.command = "simulate".into();
            model.echo(&mut spec);
            tree.echo(&mut spec);
            let params = model.params()?;
            let res = sim::simulate_tree(&tree.config(params))?;
            let map = UpdateMap::new(params);
            let mut pi_t = vec![tree.pi_0];
            for t in 0..tree.horizon {
                pi_t.push(map.eval(pi_t[t])?);
            }
            let rows: Vec<Vec<String>> = (0..=tree.horizon)
                .map(|t| {
                    vec![
                        t.to_string(),
                        fmt17(res.pi_hat[t]),
                        fmt17(res.ci_half_width[t]),
                        fmt17(pi_t[t]),
                    ]
                })
                .collect();
            Report {
                json: json!({
                    "pi_hat": res.pi_hat,
                    "ci_half_width": res.ci_half_width,
                    "pi_analytic": pi_t,
                    "pair_correlation": res.pair_correlation,
                    "replications_used": res.replications_used,
                    "level_means": res.level_means,
                }),
                csv: Some(csv_table("t,pi_hat,ci_half_width,pi_analytic", rows)),
            }
        }
        Command::OneStep {
            model,
            x,
            samples,
            seed,
        } => {
            spec.command = "one-step".into();
            model.echo(&mut spec);
            spec.x = Some(*x);
            spec.samples = Some(*samples);
            spec.seed = Some(*seed);
            let params = model.params()?;
            let e = sim::estimate_g_one_step(&params, *x, *samples, *seed)?;
            let g = gmap::g_eval(&UpdateMap::new(params), *x)?;
            Report {
                json: json!({
                    "estimate": e.estimate,
                    "ci_half_width": e.ci_half_width,
                    "samples": e.samples,
                    "g": g,
                }),
                csv: Some(csv_table(
                    "x,estimate,ci_half_width,g",
                    [vec![
                        fmt17(*x),
                        fmt17(e.estimate),
                        fmt17(e.ci_half_width),
                        fmt17(g),
                    ]],
                )),
            }
        }
        Command::Independence {
            model,
            tree,
            level,
            pairs,
        } => {
            spec.command = "independence".into();
            model.echo(&mut spec);
            tree.echo(&mut spec);
            spec.level = Some(*level);
            spec.pairs = Some(*pairs);
            let corr = sim::independence_check(&tree.config(model.params()?), *level, *pairs)?;
            let bound = 4.0 / (tree.reps as f64).sqrt();
            Report {
                json: json!({ "max_abs_correlation": corr, "four_sigma_bound": bound }),
                csv: Some(csv_table(
                    "max_abs_correlation,four_sigma_bound",
                    [vec![fmt17(corr), fmt17(bound)]],
                )),
            }
        }
        Command::Dcheck { model, grid } => {
            spec.command = "dcheck".into();
            model.echo(&mut spec);
            spec.grid = Some(*grid);
            if *grid < 2 {
                return Err(Error::out_of_range("grid", *grid as f64, ">= 2"));
            }
            derivative_report(&model.params()?, *grid)?
        }
    };
    Ok((spec, report))
}

fn fixed_point_report(set: &analysis::FixedPointSet) -> Report {
    Report {
        json: json!({ "fixed_points": set.points, "count": set.len() }),
        csv: Some(csv_table(
            "value,stability,tangent,residual",
            set.points.iter().map(|p| {
                vec![
                    fmt17(p.value),
                    serde_json::to_value(p.stability)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_owned))
                        .unwrap_or_default(),
                    p.tangent.to_string(),
                    fmt17(p.residual),
                ]
            }),
        )),
    }
}

/// Max deviations of g', g'' from central differences on an interior grid,
/// and of df/dp from differences of f along p_B = p_R.
fn derivative_report(params: &ModelParams, grid: usize) -> Result<Report, Error> {
    let map = UpdateMap::new(*params);
    let (h1, h2) = (1e-6, 1e-4);
    let mut d1: f64 = 0.0;
    let mut d2: f64 = 0.0;
    for i in 1..grid {
        let x = i as f64 / grid as f64;
        let g = |t: f64| map.eval(t.clamp(0.0, 1.0));
        let fd1 = (g(x + h1)? - g(x - h1)?) / (2.0 * h1);
        let fd2 = (g(x + h2)? - 2.0 * g(x)? + g(x - h2)?) / (h2 * h2);
        d1 = d1.max((map.prime(x)? - fd1).abs());
        d2 = d2.max((map.double_prime(x)? - fd2).abs());
    }

    let m = params.m();
    let mut dp: f64 = 0.0;
    let mut max_df_dp = f64::NEG_INFINITY;
    for i in 1..grid {
        let p = i as f64 / grid as f64;
        for l in 0..=(m - 1) / 2 {
            let f = |q: f64| policy::policy_value(&ModelParams::symmetric(m, q)?, l);
            let fd = (f(p + h1)? - f(p - h1)?) / (2.0 * h1);
            let exact = gmap::df_dp(m, l, p)?;
            dp = dp.max((exact - fd).abs());
            max_df_dp = max_df_dp.max(exact);
        }
    }
    Ok(Report {
        json: json!({
            "max_dev_gprime": d1,
            "max_dev_gdoubleprime": d2,
            "max_dev_df_dp": dp,
            "max_df_dp": max_df_dp,
        }),
        csv: Some(csv_table(
            "max_dev_gprime,max_dev_gdoubleprime,max_dev_df_dp,max_df_dp",
            [vec![fmt17(d1), fmt17(d2), fmt17(dp), fmt17(max_df_dp)]],
        )),
    })
}

/// Full text the command writes: JSON object with the `run` echo, or CSV.
pub fn render(spec: &RunSpec, report: Report) -> Result<String, Error> {
    match spec.format {
        Format::Json => {
            let mut obj = match report.json {
                Value::Object(map) => map,
                other => {
                    let mut map = serde_json::Map::new();
                    map.insert("report".into(), other);
                    map
                }
            };
            obj.insert("run".into(), serde_json::to_value(spec).expect("spec serializes"));
            let mut text = serde_json::to_string_pretty(&Value::Object(obj)).expect("json");
            text.push('\n');
            Ok(text)
        }
        Format::Csv => report
            .csv
            .ok_or_else(|| Error::Precondition(format!("{} has no CSV form", spec.command))),
    }
}

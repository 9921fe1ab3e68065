//! Command-line front end: every toolkit operation behind one flag grammar,
//! with deterministic JSON or CSV on stdout.
//!
//! Exit status: 0 on success, 1 when the mathematics refuses (empty level set,
//! violated bisection precondition, function not a self-map, ...), 2 on usage
//! and parse errors.

pub mod format;

use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use epsdelta::extremum::{
    certified_max_bound, certified_min_bound, envelope, envelope_to_csv, first_maximizer,
    refine_extrema, LevelRecord,
};
use epsdelta::function_model::{parse_function, range_bounds, FiniteMetricSpace, Interval, RealFunction};
use epsdelta::intermediate::{bisect_boundary, classical_ivt, fixed_point, FixedPointOutcome, TargetSet};
use epsdelta::optimal_delta::{
    build_profile, modulus_of_continuity, optimal_delta_closed_form, optimal_delta_finite,
    optimal_delta_grid, verify_largest_delta, DeltaProfile, DeltaSample, GridConfig,
};
use epsdelta::Error;

use format::{csv_num, json};

pub const FLAG_GRAMMAR: &str = "\
usage: epsdelta <command> [flags]
commands: delta-profile, delta, modulus, verify-delta, maximize, envelope, bisect, ivt, fixpoint
flags:    --fn <spec> --eps <r>[,<r>...] --delta <r> --lo <r> --hi <r> --c <r> --steps <int>
          --level <int> --resolution <int> --refine <int> --target <set-syntax> --closed-form
          --output json|csv   (extras: --space <json file> for delta, --tol <r>)
functions: power(alpha=<r>,b=<r>) | chainsaw | poly(<r>{,<r>}) | pwl((<r>,<r>){,(<r>,<r>)})
           | expr(<expression>, lo=<r>, hi=<r>)
targets:   (-inf,0) | [0,1] | (0,1)u(2,3)";

/// Which library operations each command reaches.
pub const DISPATCH: &[(&str, &[&str])] = &[
    ("delta-profile", &["parse_function", "range_bounds", "build_profile"]),
    (
        "delta",
        &[
            "parse_function",
            "optimal_delta_grid",
            "optimal_delta_closed_form",
            "optimal_delta_finite",
        ],
    ),
    ("modulus", &["parse_function", "evaluate", "modulus_of_continuity"]),
    ("verify-delta", &["parse_function", "verify_largest_delta"]),
    (
        "maximize",
        &[
            "parse_function",
            "dyadic_net",
            "refine_extrema",
            "certified_max_bound",
            "first_maximizer",
        ],
    ),
    ("envelope", &["parse_function", "envelope", "first_maximizer"]),
    ("bisect", &["parse_function", "classify", "bisect_boundary"]),
    ("ivt", &["parse_function", "classical_ivt"]),
    ("fixpoint", &["parse_function", "fixed_point"]),
];

#[derive(Debug, Parser)]
#[command(name = "epsdelta", version, about = "Optimal deltas, certified extrema and generalized bisection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample delta(epsilon) at several epsilons.
    DeltaProfile(Flags),
    /// One optimal delta: closed form, grid search, or a finite space.
    Delta(Flags),
    /// Grid modulus of continuity w(delta).
    Modulus(Flags),
    /// Check that a claimed delta is valid and (nearly) the largest.
    VerifyDelta(Flags),
    /// Dyadic-net refinement of max/min with certified bounds.
    Maximize(Flags),
    /// Running-maximum envelope on a uniform grid.
    Envelope(Flags),
    /// Bisection towards the boundary of a target set.
    Bisect(Flags),
    /// Intermediate value search for f(x) = c.
    Ivt(Flags),
    /// Fixed point of a self-map via f(x) - x.
    Fixpoint(Flags),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct Flags {
    /// Function in the mini-language.
    #[arg(long = "fn", value_name = "SPEC")]
    pub function: Option<String>,
    /// Epsilon; a comma-separated list for delta-profile.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub eps: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lo: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub hi: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    #[arg(long)]
    pub steps: Option<u32>,
    #[arg(long)]
    pub level: Option<u32>,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub refine: Option<u32>,
    #[arg(long, value_name = "SET", allow_hyphen_values = true)]
    pub target: Option<String>,
    /// Use the closed form instead of grid search.
    #[arg(long)]
    pub closed_form: bool,
    #[arg(long, value_enum, default_value_t)]
    pub output: OutputFormat,
    /// JSON file with a finite metric space (`labels`, `dist`, `values`).
    #[arg(long, value_name = "PATH")]
    pub space: Option<std::path::PathBuf>,
    /// Tolerance: boundary (bisect), endpoint (fixpoint), value (maximize, envelope).
    #[arg(long)]
    pub tol: Option<f64>,
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Domain(e.to_string())
        }
    }
}

fn missing(flag: &str, command: &str) -> Failure {
    Failure::Usage(format!("`{command}` needs --{flag}"))
}

impl Flags {
    fn function(&self, command: &str) -> Result<RealFunction, Failure> {
        let spec = self.function.as_deref().ok_or_else(|| missing("fn", command))?;
        let f = parse_function(spec)?;
        if self.lo.is_none() && self.hi.is_none() {
            return Ok(f);
        }
        let d = f.domain();
        let domain = Interval::new(self.lo.unwrap_or(d.lo()), self.hi.unwrap_or(d.hi()))?;
        Ok(f.with_domain(domain)?)
    }

    fn single_eps(&self, command: &str) -> Result<f64, Failure> {
        match self.eps.as_slice() {
            [e] => Ok(*e),
            [] => Err(missing("eps", command)),
            _ => Err(Failure::Usage(format!("`{command}` takes a single --eps"))),
        }
    }

    fn grid(&self) -> GridConfig {
        let mut cfg = GridConfig::default();
        if let Some(r) = self.resolution {
            cfg.resolution = r;
        }
        if let Some(r) = self.refine {
            cfg.refine_rounds = r;
        }
        cfg
    }
}

#[derive(Serialize)]
struct DeltaOutput<'a> {
    function_id: String,
    #[serde(flatten)]
    sample: &'a DeltaSample,
}

#[derive(Serialize)]
struct ModulusOutput {
    function_id: String,
    delta: f64,
    resolution: usize,
    modulus: f64,
}

#[derive(Serialize)]
struct MaximizeOutput {
    function_id: String,
    levels: Vec<LevelRecord>,
    stopped_early: bool,
    argmax_sequence: Vec<f64>,
    certified_max_bound: f64,
    certified_min_bound: f64,
    first_maximizer: f64,
    grid_range: (f64, f64),
}

#[derive(Serialize)]
struct EnvelopePoint {
    x: f64,
    g: f64,
}

#[derive(Serialize)]
struct EnvelopeOutput {
    function_id: String,
    points: Vec<EnvelopePoint>,
    first_maximizer: f64,
}

fn profile_csv(p: &DeltaProfile) -> String {
    p.to_csv(csv_num)
}

/// Default modulus grid for certificates; dyadic so that net meshes are exact distances.
const CERTIFICATE_RESOLUTION: usize = (1 << 12) + 1;

fn execute(cmd: &Command) -> Result<String, Failure> {
    Ok(match cmd {
        Command::DeltaProfile(fl) => {
            let f = fl.function("delta-profile")?;
            if fl.eps.is_empty() {
                return Err(missing("eps", "delta-profile"));
            }
            let p = build_profile(&f, &fl.eps, &fl.grid())?;
            match fl.output {
                OutputFormat::Json => json(&p),
                OutputFormat::Csv => profile_csv(&p),
            }
        }
        Command::Delta(fl) => {
            let eps = fl.single_eps("delta")?;
            let (id, sample) = if let Some(path) = &fl.space {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
                let space: FiniteMetricSpace = serde_json::from_str(&text)
                    .map_err(|e| Failure::Usage(format!("bad space file {}: {e}", path.display())))?;
                (format!("space({})", path.display()), optimal_delta_finite(&space, eps)?)
            } else {
                let f = fl.function("delta")?;
                let s = if fl.closed_form {
                    optimal_delta_closed_form(&f, eps)?
                } else {
                    optimal_delta_grid(&f, eps, &fl.grid())?
                };
                (f.to_string(), s)
            };
            match fl.output {
                OutputFormat::Json => json(&DeltaOutput {
                    function_id: id,
                    sample: &sample,
                }),
                OutputFormat::Csv => profile_csv(&DeltaProfile {
                    function_id: id,
                    m_estimate: f64::NAN,
                    samples: vec![sample],
                }),
            }
        }
        Command::Modulus(fl) => {
            let f = fl.function("modulus")?;
            let delta = fl.delta.ok_or_else(|| missing("delta", "modulus"))?;
            let resolution = fl.resolution.unwrap_or(GridConfig::default().resolution);
            let w = modulus_of_continuity(&f, delta, resolution)?;
            match fl.output {
                OutputFormat::Json => json(&ModulusOutput {
                    function_id: f.to_string(),
                    delta,
                    resolution,
                    modulus: w,
                }),
                OutputFormat::Csv => format!("delta,w\n{},{}\n", csv_num(delta), csv_num(w)),
            }
        }
        Command::VerifyDelta(fl) => {
            let f = fl.function("verify-delta")?;
            let eps = fl.single_eps("verify-delta")?;
            let delta = fl.delta.ok_or_else(|| missing("delta", "verify-delta"))?;
            let resolution = fl.resolution.unwrap_or(GridConfig::default().resolution);
            let r = verify_largest_delta(&f, eps, delta, resolution)?;
            match fl.output {
                OutputFormat::Json => json(&r),
                OutputFormat::Csv => {
                    let w = |g: fn(&epsdelta::optimal_delta::Witness) -> f64| {
                        r.witness.as_ref().map(|x| csv_num(g(x))).unwrap_or_default()
                    };
                    format!(
                        "epsilon,delta_claimed,valid,maximal,x,y,fx,fy\n{},{},{},{},{},{},{},{}\n",
                        csv_num(r.epsilon),
                        csv_num(r.delta_claimed),
                        r.valid,
                        r.maximal,
                        w(|p| p.x),
                        w(|p| p.y),
                        w(|p| p.fx),
                        w(|p| p.fy)
                    )
                }
            }
        }
        Command::Maximize(fl) => {
            let f = fl.function("maximize")?;
            let max_level = fl.level.unwrap_or(10);
            let resolution = fl.resolution.unwrap_or(CERTIFICATE_RESOLUTION);
            let mut trace = refine_extrema(&f, max_level, 0.0)?;
            let levels: Vec<u32> = trace.levels.iter().map(|r| r.level).collect();
            for &l in &levels {
                certified_max_bound(&f, &mut trace, l, resolution)?;
            }
            let last = trace.last().level;
            let upper = certified_max_bound(&f, &mut trace, last, resolution)?;
            let lower = certified_min_bound(&f, &mut trace, last, resolution)?;
            match fl.output {
                OutputFormat::Csv => trace.to_csv(csv_num),
                OutputFormat::Json => json(&MaximizeOutput {
                    function_id: trace.function_id.clone(),
                    argmax_sequence: trace.argmax_sequence(),
                    levels: trace.levels.clone(),
                    stopped_early: trace.stopped_early,
                    certified_max_bound: upper,
                    certified_min_bound: lower,
                    first_maximizer: first_maximizer(&f, (1 << last) + 1, fl.tol.unwrap_or(0.0))?,
                    grid_range: range_bounds(&f, (1 << last) + 1)?,
                }),
            }
        }
        Command::Envelope(fl) => {
            let f = fl.function("envelope")?;
            let resolution = fl.resolution.unwrap_or(GridConfig::default().resolution);
            let env = envelope(&f, resolution)?;
            match fl.output {
                OutputFormat::Csv => envelope_to_csv(&env, csv_num),
                OutputFormat::Json => json(&EnvelopeOutput {
                    function_id: f.to_string(),
                    first_maximizer: first_maximizer(&f, resolution, fl.tol.unwrap_or(0.0))?,
                    points: env.into_iter().map(|(x, g)| EnvelopePoint { x, g }).collect(),
                }),
            }
        }
        Command::Bisect(fl) => {
            let f = fl.function("bisect")?;
            let target: TargetSet = fl
                .target
                .as_deref()
                .ok_or_else(|| missing("target", "bisect"))?
                .parse()?;
            let steps = fl.steps.ok_or_else(|| missing("steps", "bisect"))?;
            let t = bisect_boundary(&f, &target, steps, fl.tol.unwrap_or(0.0))?;
            match fl.output {
                OutputFormat::Json => json(&t),
                OutputFormat::Csv => t.to_csv(csv_num),
            }
        }
        Command::Ivt(fl) => {
            let f = fl.function("ivt")?;
            let c = fl.c.ok_or_else(|| missing("c", "ivt"))?;
            let steps = fl.steps.ok_or_else(|| missing("steps", "ivt"))?;
            let t = classical_ivt(&f, c, steps)?;
            match fl.output {
                OutputFormat::Json => json(&t),
                OutputFormat::Csv => t.to_csv(csv_num),
            }
        }
        Command::Fixpoint(fl) => {
            let f = fl.function("fixpoint")?;
            let steps = fl.steps.ok_or_else(|| missing("steps", "fixpoint"))?;
            let out = fixed_point(&f, steps, fl.tol.unwrap_or(0.0))?;
            match (fl.output, &out) {
                (OutputFormat::Json, _) => json(&out),
                (OutputFormat::Csv, FixedPointOutcome::Bracket { trace }) => trace.to_csv(csv_num),
                (OutputFormat::Csv, FixedPointOutcome::Endpoint { x, fx }) => {
                    format!("x,fx\n{},{}\n", csv_num(*x), csv_num(*fx))
                }
            }
        }
    })
}

/// Runs one invocation. `args` includes the program name.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(out, "{}", e.render())
            } else {
                writeln!(err, "{}\n\n{FLAG_GRAMMAR}", e.render())
            };
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            0
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}\n\n{FLAG_GRAMMAR}");
            2
        }
        Err(Failure::Domain(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}

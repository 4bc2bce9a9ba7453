use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use hetclass::dynamics::{ScanOptions, Side};
use hetclass::rewrite::RewriteStep;
use hetclass::scenario::{
    load_graph_spec, load_scenario_data, run, write_output, Analysis, Scenario, ScenarioData, ScenarioError,
    SigmaSpec, ANALYSIS_EXIT_CODE,
};

#[derive(Parser)]
#[command(name = "hetclass", version, about = "Heteroclinic graphs, dominated splittings and Lyapunov polytopes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Directory for report.json and CSV/JSON artifacts; the report goes
    /// to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for sampling; overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Default tolerance; overrides the scenario tolerance.
    #[arg(long, allow_negative_numbers = true)]
    tol: Option<f64>,
    /// Graph file in canonical form; replaces the scenario graph.
    #[arg(long)]
    graph: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every analysis of the scenario.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Spectrum, domination profile and volume check of a matrix word.
    AnalyzeCocycle {
        #[command(flatten)]
        common: Common,
        /// Named matrix; runs the scenario's cocycle analyses when absent.
        #[arg(long)]
        matrix: Option<String>,
        #[arg(long)]
        horizon: Option<usize>,
        /// Block dimensions, comma separated.
        #[arg(long, value_delimiter = ',')]
        splitting: Option<Vec<usize>>,
    },
    /// Connectivity, Eulerian test and mechanical obstructions of the graph.
    GraphCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        node: Vec<String>,
        /// Edge-connectivity target.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Apply gather/robustize steps and emit the rewritten graph.
    Rewrite {
        #[command(flatten)]
        common: Common,
        /// JSON list of rewrite steps.
        #[arg(long)]
        script: Option<PathBuf>,
    },
    /// Polytope of Lyapunov maps above sigma, pinned on an index set.
    Polytope {
        #[command(flatten)]
        common: Common,
        /// Ascending exponents, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        exponents: Option<Vec<f64>>,
        /// Named matrix whose spectrum gives sigma.
        #[arg(long)]
        matrix: Option<String>,
        /// Pinned indices, comma separated.
        #[arg(long, value_delimiter = ',')]
        pinned: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0)]
        samples: usize,
    },
    /// Build periodic words realizing target Lyapunov maps.
    Realize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        node: Option<String>,
        /// Target map values, comma separated; repeat for several targets.
        #[arg(long, allow_hyphen_values = true)]
        target: Vec<String>,
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, default_value_t = 1e-2)]
        eps: f64,
    },
    /// Newton search for periodic orbits on a grid of guesses.
    FindPeriodic {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        map: Option<String>,
        #[arg(long, default_value_t = 1)]
        period: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lo: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        hi: Option<Vec<f64>>,
        #[arg(long, default_value_t = 9)]
        grid: usize,
    },
    /// Trace a stable or unstable manifold branch as a CSV polyline.
    Trace {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        map: Option<String>,
        /// Approximate periodic point, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1)]
        period: usize,
        #[arg(long, value_parser = parse_side, default_value = "unstable")]
        side: Side,
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        branch: i8,
        #[arg(long, default_value_t = 4.0)]
        length: f64,
        #[arg(long, default_value_t = 1e-2)]
        step: f64,
    },
    /// Bisect the Hénon family for a homoclinic tangency of its saddle.
    TangencyScan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        a_lo: Option<f64>,
        #[arg(long)]
        a_hi: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        a_tol: Option<f64>,
        #[arg(long)]
        length: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        angle_tol: Option<f64>,
    },
}

fn parse_side(s: &str) -> Result<Side, String> {
    match s {
        "stable" => Ok(Side::Stable),
        "unstable" => Ok(Side::Unstable),
        _ => Err(format!("expected `stable` or `unstable`, got `{s}`")),
    }
}

fn parse_values(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad number `{v}` in `{s}`")))
        .collect()
}

/// Request built from subcommand flags, or the scenario analyses of `kind`.
enum Request {
    All,
    Kind(&'static str),
    Explicit(Analysis),
}

fn request(cmd: &Command) -> anyhow::Result<(Common, Request)> {
    Ok(match cmd {
        Command::Run { common } => (common.clone(), Request::All),
        Command::AnalyzeCocycle {
            common,
            matrix,
            horizon,
            splitting,
        } => match matrix {
            Some(m) => (
                common.clone(),
                Request::Explicit(Analysis::AnalyzeCocycle {
                    matrix: m.clone(),
                    horizon: *horizon,
                    rate: None,
                    splitting: splitting.clone(),
                    tol: None,
                }),
            ),
            None => (common.clone(), Request::Kind("analyze_cocycle")),
        },
        Command::GraphCheck { common, node, k } => (
            common.clone(),
            Request::Explicit(Analysis::GraphCheck {
                nodes: node.clone(),
                k: *k,
                horizon: None,
            }),
        ),
        Command::Rewrite { common, script } => match script {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let steps: Vec<RewriteStep> =
                    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
                (common.clone(), Request::Explicit(Analysis::Rewrite { steps }))
            }
            None => (common.clone(), Request::Kind("rewrite")),
        },
        Command::Polytope {
            common,
            exponents,
            matrix,
            pinned,
            samples,
        } => {
            let sigma = match (exponents, matrix) {
                (Some(e), None) => Some(SigmaSpec::Exponents(e.clone())),
                (None, Some(m)) => Some(SigmaSpec::Matrix(m.clone())),
                (None, None) => None,
                _ => anyhow::bail!("give at most one of --exponents and --matrix"),
            };
            match sigma {
                Some(sigma) => {
                    let pinned = pinned.clone().context("--pinned is required with --exponents or --matrix")?;
                    (
                        common.clone(),
                        Request::Explicit(Analysis::Polytope {
                            sigma,
                            pinned: pinned.into_iter().collect(),
                            samples: *samples,
                            members: Vec::new(),
                        }),
                    )
                }
                None => (common.clone(), Request::Kind("polytope")),
            }
        }
        Command::Realize {
            common,
            node,
            target,
            samples,
            eps,
        } => match node {
            Some(n) => {
                let targets = target.iter().map(|t| parse_values(t)).collect::<anyhow::Result<_>>()?;
                (
                    common.clone(),
                    Request::Explicit(Analysis::Realize {
                        node: n.clone(),
                        targets,
                        samples: *samples,
                        eps: *eps,
                        cap: None,
                    }),
                )
            }
            None => (common.clone(), Request::Kind("realize")),
        },
        Command::FindPeriodic {
            common,
            map,
            period,
            lo,
            hi,
            grid,
        } => match map {
            Some(m) => (
                common.clone(),
                Request::Explicit(Analysis::FindPeriodic {
                    map: m.clone(),
                    period: *period,
                    lo: lo.clone().context("--lo is required with --map")?,
                    hi: hi.clone().context("--hi is required with --map")?,
                    grid: *grid,
                    tol: None,
                    max_iter: 50,
                }),
            ),
            None => (common.clone(), Request::Kind("find_periodic")),
        },
        Command::Trace {
            common,
            map,
            point,
            period,
            side,
            branch,
            length,
            step,
        } => match map {
            Some(m) => (
                common.clone(),
                Request::Explicit(Analysis::Trace {
                    map: m.clone(),
                    point: point.clone().context("--point is required with --map")?,
                    period: *period,
                    side: *side,
                    branch: *branch,
                    length: *length,
                    step: *step,
                }),
            ),
            None => (common.clone(), Request::Kind("trace")),
        },
        Command::TangencyScan {
            common,
            b,
            a_lo,
            a_hi,
            samples,
            a_tol,
            length,
            step,
            angle_tol,
        } => {
            let flags = [b, a_lo, a_hi, a_tol, length, step, angle_tol].iter().any(|f| f.is_some()) || samples.is_some();
            if common.scenario.is_some() && !flags {
                (common.clone(), Request::Kind("tangency_scan"))
            } else {
                let d = ScanOptions::default();
                (
                    common.clone(),
                    Request::Explicit(Analysis::TangencyScan(ScanOptions {
                        b: b.unwrap_or(d.b),
                        a_lo: a_lo.unwrap_or(d.a_lo),
                        a_hi: a_hi.unwrap_or(d.a_hi),
                        samples: samples.unwrap_or(d.samples),
                        a_tol: a_tol.unwrap_or(d.a_tol),
                        length: length.unwrap_or(d.length),
                        step: step.unwrap_or(d.step),
                        angle_tol: angle_tol.unwrap_or(d.angle_tol),
                    })),
                )
            }
        }
    })
}

enum Failure {
    Scenario(ScenarioError),
    Usage(anyhow::Error),
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::Scenario(e)
    }
}

fn build(common: &Common, req: Request) -> Result<Scenario, Failure> {
    let (mut data, digest) = match &common.scenario {
        Some(path) => load_scenario_data(path)?,
        None => (ScenarioData::default(), hetclass::scenario::digest(b"")),
    };
    if let Some(path) = &common.graph {
        data.graph = Some(load_graph_spec(path)?);
    }
    if common.seed.is_some() {
        data.seed = common.seed;
    }
    if common.tol.is_some() {
        data.tol = common.tol;
    }
    match req {
        Request::All => {}
        Request::Kind(kind) => {
            data.analyses.retain(|a| a.kind() == kind);
            if data.analyses.is_empty() {
                return Err(Failure::Usage(anyhow::anyhow!(
                    "no `{kind}` analyses in the scenario and no request flags given"
                )));
            }
        }
        Request::Explicit(a) => data.analyses = vec![a],
    }
    Ok(Scenario::from_data(data, digest)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, req) = match request(&cli.command) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let scenario = match build(&common, req) {
        Ok(s) => s,
        Err(Failure::Scenario(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let out = run(&scenario);
    match &common.out {
        Some(dir) => {
            if let Err(e) = write_output(&out, dir) {
                eprintln!("error: {e}");
                return ExitCode::from(e.exit_code() as u8);
            }
        }
        None => print!("{}", out.report.to_json()),
    }
    for o in out.report.results.iter().filter(|o| o.error.is_some()) {
        eprintln!("analysis {} ({}) failed: {}", o.index, o.kind, o.error.as_deref().unwrap_or(""));
    }
    if out.report.has_errors() {
        ExitCode::from(ANALYSIS_EXIT_CODE as u8)
    } else {
        ExitCode::SUCCESS
    }
}

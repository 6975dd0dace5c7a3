//! Command-line front end: argument definitions, the four commands and
//! their output.

pub mod spec_file;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bisim::{decide_states, BisimError, Experiment, Verdict};
use crate::expr::check_expression;
use crate::lexer::Pos;
use crate::semantics::NormalizeOptions;
use crate::synth::{
    synthesize, to_dot, to_expression, to_json, Coalgebra, SynthLimit, DEFAULT_MAX_STATES,
};

pub use spec_file::{parse_spec, Rule, SpecError, SpecFile};

#[derive(Debug, Parser)]
#[command(
    name = "coalg",
    version,
    about = "Decide bisimilarity of generalized regular expressions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide every goal of a spec file.
    Check(CheckArgs),
    /// Print the coalgebra synthesized from a named expression.
    Synth(SynthArgs),
    /// Print an expression denoting a state of a declared coalgebra.
    Expr(ExprArgs),
    /// Print the translation of a named process.
    Translate(TranslateArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Spec file to load.
    pub file: PathBuf,
    /// Upper bound on synthesized states per expression.
    #[arg(long, env = "COALG_MAX_STATES", default_value_t = DEFAULT_MAX_STATES)]
    pub max_states: usize,
    /// Do not drop `phi` summands when normalizing.
    #[arg(long)]
    pub no_unit: bool,
    /// Do not merge duplicate summands when normalizing (synthesis may diverge).
    #[arg(long, hide = true)]
    pub no_idempotence: bool,
}

impl CommonArgs {
    fn options(&self) -> NormalizeOptions {
        NormalizeOptions {
            unit: !self.no_unit,
            idempotence: !self.no_idempotence,
        }
    }
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Print the witness bisimulation of every successful goal.
    #[arg(long)]
    pub witness: bool,
    /// Emit a JSON report.
    #[arg(long)]
    pub json: bool,
    /// Number of goals decided concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Append wall-clock times to the text report.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Name of an `expr` declaration.
    #[arg(long = "expr", value_name = "NAME")]
    pub name: String,
    /// Emit Graphviz DOT.
    #[arg(long, conflicts_with = "json")]
    pub dot: bool,
    /// Emit JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ExprArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Name of a `coalgebra` declaration.
    #[arg(long, value_name = "NAME")]
    pub coalgebra: String,
    /// State whose expression is printed.
    #[arg(long, value_name = "STATE")]
    pub state: String,
    /// Synthesize the result and decide it against the state.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Args)]
pub struct TranslateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Name of a `process` declaration.
    #[arg(long, value_name = "NAME")]
    pub process: String,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{err}", path.display())]
    Spec { path: PathBuf, err: SpecError },
    #[error("{}:{pos}: [{rule}] {message}", path.display())]
    Run {
        path: PathBuf,
        pos: Pos,
        rule: &'static str,
        message: String,
    },
    #[error("the state limit must be at least 1")]
    InvalidLimit,
}

/// What a command printed and the exit code it asks for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Outcome {
        Outcome { stdout, code: 0 }
    }
}

pub fn load(path: &Path) -> Result<SpecFile, CliError> {
    let src = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_spec(&src).map_err(|err| CliError::Spec {
        path: path.to_path_buf(),
        err,
    })
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Check(a) => run_check(a),
        Command::Synth(a) => run_synth(a),
        Command::Expr(a) => run_expr(a),
        Command::Translate(a) => run_translate(a),
    }
}

fn limit(common: &CommonArgs) -> Result<SynthLimit, CliError> {
    SynthLimit::new(common.max_states).map_err(|_| CliError::InvalidLimit)
}

fn run_error(path: &Path, pos: Pos, rule: &'static str, message: impl ToString) -> CliError {
    CliError::Run {
        path: path.to_path_buf(),
        pos,
        rule,
        message: message.to_string(),
    }
}

fn decision_error(path: &Path, pos: Pos, e: BisimError) -> CliError {
    let rule = match e {
        BisimError::Synth(_) => "synthesis",
        _ => "bisimulation",
    };
    run_error(path, pos, rule, e)
}

// ---------------------------------------------------------------------------
// check

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalVerdict {
    Bisimilar,
    NotBisimilar,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessPair {
    pub lhs: String,
    pub rhs: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub text: String,
    #[serde(flatten)]
    pub experiment: Experiment,
}

#[derive(Clone, Debug, Serialize)]
pub struct GoalReport {
    pub label: String,
    pub line: usize,
    pub verdict: GoalVerdict,
    pub left_states: usize,
    pub right_states: usize,
    pub rounds: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<WitnessPair>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentReport>,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub goals: usize,
    pub bisimilar: usize,
    pub not_bisimilar: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub functor: String,
    pub goals: Vec<GoalReport>,
    pub summary: Summary,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.summary.not_bisimilar == 0 {
            0
        } else {
            1
        }
    }
}

fn check_goal(
    spec: &SpecFile,
    goal: &spec_file::Goal,
    limit: SynthLimit,
    opts: NormalizeOptions,
    path: &Path,
) -> Result<GoalReport, CliError> {
    let start = Instant::now();
    let sig = &spec.signature;
    let certify = |e| check_expression(sig, e).map_err(|e| run_error(path, goal.pos, "goal", e));
    let (t1, t2) = (certify(&goal.lhs)?, certify(&goal.rhs)?);
    let synth =
        |t| synthesize(sig, t, limit, opts).map_err(|e| run_error(path, goal.pos, "synthesis", e));
    let (c1, c2) = (synth(&t1)?, synth(&t2)?);
    let (left_states, right_states) = (c1.len(), c2.len());
    let d = decide_states(c1, 0, c2, 0).map_err(|e| decision_error(path, goal.pos, e))?;
    let (verdict, witness, experiment) = match &d.verdict {
        Verdict::Bisimilar(w) => {
            let pairs = w
                .iter()
                .map(|(s, t)| WitnessPair {
                    lhs: d.left.label(s).to_string(),
                    rhs: d.right.label(t).to_string(),
                })
                .collect();
            (GoalVerdict::Bisimilar, Some(pairs), None)
        }
        Verdict::NotBisimilar(exp) => (
            GoalVerdict::NotBisimilar,
            None,
            Some(ExperimentReport {
                text: exp.to_string(),
                experiment: exp.clone(),
            }),
        ),
    };
    Ok(GoalReport {
        label: goal.label.clone(),
        line: goal.pos.line,
        verdict,
        left_states,
        right_states,
        rounds: d.gfp.rounds(),
        witness,
        experiment,
        elapsed: start.elapsed(),
    })
}

/// Decides every goal, on up to `jobs` threads; reports follow file order.
pub fn check_spec(
    spec: &SpecFile,
    path: &Path,
    limit: SynthLimit,
    opts: NormalizeOptions,
    jobs: usize,
) -> Result<RunReport, CliError> {
    let n = spec.goals.len();
    let jobs = jobs.clamp(1, n.max(1));
    let mut results: Vec<Option<Result<GoalReport, CliError>>> = (0..n).map(|_| None).collect();
    if jobs == 1 {
        for (slot, g) in results.iter_mut().zip(&spec.goals) {
            *slot = Some(check_goal(spec, g, limit, opts, path));
        }
    } else {
        let done: Vec<Vec<(usize, Result<GoalReport, CliError>)>> = std::thread::scope(|scope| {
            let workers: Vec<_> = (0..jobs)
                .map(|k| {
                    scope.spawn(move || {
                        (k..n)
                            .step_by(jobs)
                            .map(|i| (i, check_goal(spec, &spec.goals[i], limit, opts, path)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            workers
                .into_iter()
                .map(|w| w.join().expect("goal worker panicked"))
                .collect()
        });
        for (i, r) in done.into_iter().flatten() {
            results[i] = Some(r);
        }
    }
    let goals = results
        .into_iter()
        .map(|r| r.expect("every goal is decided"))
        .collect::<Result<Vec<_>, _>>()?;
    let bisimilar = goals
        .iter()
        .filter(|g| matches!(g.verdict, GoalVerdict::Bisimilar))
        .count();
    Ok(RunReport {
        functor: spec.signature.functor().to_string(),
        summary: Summary {
            goals: n,
            bisimilar,
            not_bisimilar: n - bisimilar,
        },
        goals,
    })
}

pub fn render_report(report: &RunReport, witness: bool, timings: bool) -> String {
    let mut out = String::new();
    for g in &report.goals {
        let verdict = match g.verdict {
            GoalVerdict::Bisimilar => "bisimilar",
            GoalVerdict::NotBisimilar => "not bisimilar",
        };
        let _ = write!(
            out,
            "goal \"{}\": {verdict} (states {} + {}, rounds {})",
            g.label, g.left_states, g.right_states, g.rounds
        );
        if timings {
            let _ = write!(out, " [{:.3} ms]", g.elapsed.as_secs_f64() * 1e3);
        }
        out.push('\n');
        if let (true, Some(pairs)) = (witness, &g.witness) {
            for p in pairs {
                let _ = writeln!(out, "  {} ~ {}", p.lhs, p.rhs);
            }
        }
        if let Some(e) = &g.experiment {
            let _ = writeln!(out, "  experiment: {}", e.text);
        }
    }
    let s = &report.summary;
    let _ = writeln!(
        out,
        "goals: {}, bisimilar: {}, not bisimilar: {}",
        s.goals, s.bisimilar, s.not_bisimilar
    );
    out
}

pub fn run_check(a: &CheckArgs) -> Result<Outcome, CliError> {
    let spec = load(&a.common.file)?;
    let mut report = check_spec(
        &spec,
        &a.common.file,
        limit(&a.common)?,
        a.common.options(),
        a.jobs,
    )?;
    let stdout = if a.json {
        if !a.witness {
            report.goals.iter_mut().for_each(|g| g.witness = None);
        }
        let mut s = serde_json::to_string_pretty(&report).expect("report is serializable");
        s.push('\n');
        s
    } else {
        render_report(&report, a.witness, a.timings)
    };
    Ok(Outcome {
        stdout,
        code: report.exit_code(),
    })
}

// ---------------------------------------------------------------------------
// synth, expr, translate

pub fn render_coalgebra(c: &Coalgebra) -> String {
    let mut out = format!("{} states\n", c.len());
    for s in 0..c.len() {
        let v = c.structure(s).map_leaves(&mut |i| format!("#{i}"));
        let _ = writeln!(out, "#{s}: {}\n    {v}", c.label(s));
    }
    out
}

pub fn run_synth(a: &SynthArgs) -> Result<Outcome, CliError> {
    let path = &a.common.file;
    let spec = load(path)?;
    let Some(named) = spec.expr(&a.name) else {
        return Err(run_error(
            path,
            Pos { line: 1, col: 1 },
            "unresolved-name",
            format!("no expression `{}`", a.name),
        ));
    };
    let sig = &spec.signature;
    let typed = check_expression(sig, &named.expr)
        .map_err(|e| run_error(path, named.pos, "expression", e))?;
    let c = synthesize(sig, &typed, limit(&a.common)?, a.common.options())
        .map_err(|e| run_error(path, named.pos, "synthesis", e))?;
    let mut stdout = if a.dot {
        to_dot(&c)
    } else if a.json {
        to_json(&c)
    } else {
        render_coalgebra(&c)
    };
    if !stdout.ends_with('\n') {
        stdout.push('\n');
    }
    Ok(Outcome::ok(stdout))
}

pub fn run_expr(a: &ExprArgs) -> Result<Outcome, CliError> {
    let path = &a.common.file;
    let spec = load(path)?;
    let Some(named) = spec.coalgebra(&a.coalgebra) else {
        return Err(run_error(
            path,
            Pos { line: 1, col: 1 },
            "unresolved-name",
            format!("no coalgebra `{}`", a.coalgebra),
        ));
    };
    let sig = &spec.signature;
    let c = &named.coalgebra;
    let s = c
        .state(&a.state)
        .map_err(|e| run_error(path, named.pos, "unresolved-name", e))?;
    let typed = to_expression(sig, c, s).map_err(|e| run_error(path, named.pos, "coalgebra", e))?;
    let mut stdout = format!("{}\n", typed.expr());
    let mut code = 0;
    if a.verify {
        let synthesized = synthesize(sig, &typed, limit(&a.common)?, a.common.options())
            .map_err(|e| run_error(path, named.pos, "synthesis", e))?;
        let d = decide_states(c.clone(), s, synthesized, 0)
            .map_err(|e| decision_error(path, named.pos, e))?;
        match &d.verdict {
            Verdict::Bisimilar(w) => {
                let _ = writeln!(
                    stdout,
                    "verified: bisimilar to state {} (witness of {} pairs)",
                    a.state,
                    w.len()
                );
            }
            Verdict::NotBisimilar(exp) => {
                let _ = writeln!(stdout, "verification failed: {exp}");
                code = 1;
            }
        }
    }
    Ok(Outcome { stdout, code })
}

pub fn run_translate(a: &TranslateArgs) -> Result<Outcome, CliError> {
    let path = &a.common.file;
    let spec = load(path)?;
    match spec.process(&a.process) {
        Some(p) => Ok(Outcome::ok(format!("{}\n", p.translation))),
        None => Err(run_error(
            path,
            Pos { line: 1, col: 1 },
            "unresolved-name",
            format!("no process `{}`", a.process),
        )),
    }
}

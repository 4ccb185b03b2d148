//! Command-line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cegis::{dominant_env, modified_cegis, naive_cegis, CegisConfig, CegisOutcome, Verdict};
use crate::dynamics::{Plant, Player};
use crate::error::{Error, Result};
use crate::hierarchy::{build_decision_tree, evaluate_game, GameString, WalkStep};
use crate::oracle::{export_smtlib, OracleMode, Query};
use crate::problem::{Problem, ProblemSpec};
use crate::regions::write_jsonl;
use crate::stl::Trace;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NONE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "reactive-synth", version, about = "Controller synthesis for bounded STL specifications")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Robustness of the problem's formula on a state trace (CSV, one row per step).
    Monitor {
        spec: PathBuf,
        trace: PathBuf,
        /// Time steps to evaluate.
        #[arg(long = "time", short = 't', default_values_t = [0usize])]
        times: Vec<usize>,
    },
    /// Run a synthesis mode on a problem file.
    Synth {
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = SynthMode::Dominant)]
        mode: SynthMode,
        /// Game string for `eval-game`, e.g. "E1 A1 A2 E2".
        #[arg(long)]
        game: Option<String>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// SMT-LIB2 query for the free player against a fixed opponent sequence
    /// (CSV, one row per step).
    ExportSmt {
        spec: PathBuf,
        fixed: PathBuf,
        #[arg(long, value_enum, default_value_t = Side::System)]
        free: Side,
        /// Ask for the negated formula.
        #[arg(long)]
        negate: bool,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SynthMode {
    Dominant,
    DominantEnv,
    ReactiveTree,
    EvalGame,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Side {
    System,
    Environment,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum OracleArg {
    Satisfy,
    Maximize,
}

#[derive(Args, Debug, Default)]
pub struct Overrides {
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, value_enum)]
    pub oracle: Option<OracleArg>,
    #[arg(long)]
    pub precision: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Directory for logs and artifacts.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, spec: &mut ProblemSpec) {
        if let Some(e) = self.epsilon {
            spec.epsilon = e;
        }
        if let Some(h) = self.horizon {
            spec.system.set_horizon(h);
        }
        if let Some(o) = self.oracle {
            spec.oracle.mode = match o {
                OracleArg::Satisfy => OracleMode::Satisfy,
                OracleArg::Maximize => OracleMode::Maximize,
            };
        }
        if let Some(p) = self.precision {
            spec.oracle.precision = Some(p);
        }
        if let Some(s) = self.seed {
            spec.seed = Some(s);
        }
        if let Some(m) = self.max_iters {
            spec.max_iters = Some(m);
        }
    }
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(Error::Budget(msg)) => {
            eprintln!("error: budget exhausted: {msg}");
            EXIT_BUDGET
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Monitor { spec, trace, times } => monitor(&spec, &trace, &times, out),
        Command::Synth {
            spec,
            mode,
            game,
            overrides,
        } => {
            if let Some(n) = overrides.jobs {
                // A pool installed earlier in the same process is kept.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            let mut s = ProblemSpec::load(&spec)?;
            overrides.apply(&mut s);
            let problem = s.build()?;
            synth(&problem, mode, game.as_deref(), overrides.out.as_deref(), out)
        }
        Command::ExportSmt {
            spec,
            fixed,
            free,
            negate,
        } => {
            let problem = ProblemSpec::load(&spec)?.build()?;
            let free = match free {
                Side::System => Player::System,
                Side::Environment => Player::Environment,
            };
            let values = read_rows(&fixed)?.concat();
            let mut q = Query::new(&problem.plant, &problem.formula, free, values)?;
            q.negate = negate;
            out.write_all(export_smtlib(&q)?.as_bytes())?;
            Ok(EXIT_OK)
        }
    }
}

/// Numeric CSV rows; blank lines, `#` comments and a non-numeric header are
/// skipped.
pub fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if rows.is_empty() && n == 0 => continue,
            Err(e) => {
                return Err(Error::Invalid(format!("{}:{}: {e}", path.display(), n + 1)));
            }
        }
    }
    Ok(rows)
}

#[derive(Serialize)]
struct MonitorLine {
    t: usize,
    rho: f64,
    satisfied: bool,
}

fn monitor(spec: &Path, trace: &Path, times: &[usize], out: &mut dyn Write) -> Result<i32> {
    let problem = ProblemSpec::load(spec)?.build()?;
    let trace = Trace::new(read_rows(trace)?)?;
    if trace.dim() != problem.plant.state_dim() {
        return Err(Error::Dimension(format!(
            "trace has {} components per step, the plant state has {}",
            trace.dim(),
            problem.plant.state_dim()
        )));
    }
    let mut all = true;
    for &t in times {
        let rho = problem.formula.robustness(&trace, t)?;
        all &= rho > 0.0;
        serde_json::to_writer(&mut *out, &MonitorLine { t, rho, satisfied: rho > 0.0 })?;
        writeln!(out)?;
    }
    Ok(if all { EXIT_OK } else { EXIT_NONE })
}

#[derive(Serialize)]
struct DominanceReport<'a> {
    mode: &'static str,
    #[serde(flatten)]
    verdict: &'a Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    moves: Option<Vec<String>>,
    iterations: usize,
    oracle_calls: usize,
    evaluations: usize,
    counterexamples: &'a [Vec<f64>],
    lipschitz_exists: f64,
    lipschitz_forall: f64,
}

fn move_names(plant: &Plant, player: Player, values: &[f64]) -> Option<Vec<String>> {
    let Plant::Finite(g) = plant else { return None };
    values.iter().map(|v| g.move_name(player, *v).map(str::to_string)).collect()
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn synth(p: &Problem, mode: SynthMode, game: Option<&str>, dir: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    if let Some(d) = dir {
        fs::create_dir_all(d)?;
    }
    let cfg = p.spec.cegis_config();
    match mode {
        SynthMode::Dominant | SynthMode::DominantEnv => {
            let player = if mode == SynthMode::Dominant { Player::System } else { Player::Environment };
            let outcome = dominance(p, &cfg, player)?;
            let report = DominanceReport {
                mode: if player == Player::System { "dominant" } else { "dominant-env" },
                verdict: &outcome.verdict,
                moves: outcome.strategy().and_then(|s| move_names(&p.plant, player, s)),
                iterations: outcome.iterations,
                oracle_calls: outcome.oracle_calls,
                evaluations: outcome.evaluations,
                counterexamples: &outcome.counterexamples,
                lipschitz_exists: outcome.lipschitz_exists,
                lipschitz_forall: outcome.lipschitz_forall,
            };
            emit(out, dir, "outcome.json", &report)?;
            if let Some(d) = dir {
                write_jsonl(&outcome.log, fs::File::create(d.join("iterations.jsonl"))?)?;
                write_jsonl(&outcome.removals, fs::File::create(d.join("removals.jsonl"))?)?;
            }
            Ok(match outcome.verdict {
                Verdict::Dominant { .. } => EXIT_OK,
                Verdict::NoDominant => EXIT_NONE,
                Verdict::BudgetExhausted => EXIT_BUDGET,
            })
        }
        SynthMode::EvalGame => {
            let text = game.ok_or_else(|| Error::Invalid("eval-game needs --game".into()))?;
            let q: GameString = text.parse()?;
            let outcome = evaluate_game(&p.plant, &p.formula, &q, &cfg)?;
            emit(out, dir, "outcome.json", &outcome)?;
            Ok(if outcome.holds { EXIT_OK } else { EXIT_NONE })
        }
        SynthMode::ReactiveTree => {
            let outcome = build_decision_tree(&p.plant, &p.formula, &cfg)?;
            emit(out, dir, "outcome.json", &outcome)?;
            if let Some(d) = dir {
                if let Some(t) = &outcome.tree {
                    write_json(&d.join("tree.json"), t)?;
                    fs::write(d.join("tree.dot"), t.to_dot(&p.plant))?;
                }
                write_json(&d.join("walks.json"), &outcome.walks)?;
                fs::write(d.join("walks.dot"), walks_dot(&outcome.walks))?;
            }
            Ok(if outcome.tree.is_some() { EXIT_OK } else { EXIT_NONE })
        }
    }
}

fn dominance(p: &Problem, cfg: &CegisConfig, player: Player) -> Result<CegisOutcome> {
    match (player, p.plant.is_finite()) {
        (Player::System, true) => naive_cegis(&p.plant, &p.formula, cfg),
        (Player::System, false) => modified_cegis(&p.plant, &p.formula, cfg),
        (Player::Environment, _) => dominant_env(&p.plant, &p.formula, cfg),
    }
}

fn emit<T: Serialize>(out: &mut dyn Write, dir: Option<&Path>, name: &str, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    if let Some(d) = dir {
        write_json(&d.join(name), value)?;
    }
    Ok(())
}

/// Visited part of the game transition system.
pub fn walks_dot(walks: &[Vec<WalkStep>]) -> String {
    let mut nodes: Vec<String> = Vec::new();
    let mut edges: Vec<(usize, usize, bool)> = Vec::new();
    let id = |n: String, nodes: &mut Vec<String>| match nodes.iter().position(|x| *x == n) {
        Some(i) => i,
        None => {
            nodes.push(n);
            nodes.len() - 1
        }
    };
    for walk in walks {
        for s in walk {
            let a = id(s.from.to_string(), &mut nodes);
            let b = id(s.to.to_string(), &mut nodes);
            if !edges.contains(&(a, b, s.label)) {
                edges.push((a, b, s.label));
            }
        }
    }
    let mut text = String::from("digraph game_walk {\n");
    for (i, n) in nodes.iter().enumerate() {
        text.push_str(&format!("  g{i} [label=\"{n}\"];\n"));
    }
    for (a, b, l) in edges {
        let label = if l { "True" } else { "False" };
        text.push_str(&format!("  g{a} -> g{b} [label=\"{label}\"];\n"));
    }
    text.push_str("}\n");
    text
}

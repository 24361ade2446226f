//! The `souvlaki` command line front end.
//!
//! Every subcommand emits either a table (CSV or JSON lines) or a sorted
//! edge list, always preceded by a provenance header with the format
//! version and the resolved configuration. Rationals are written as `p/q`,
//! reals with 17 significant digits, so every field parses back exactly.
//!
//! Precedence of settings: flags, then the `--config` file (`key = value`
//! lines keyed by long flag names), then `SOUVLAKI_BUDGET` for the budget,
//! then built-in defaults.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{ArgGroup, Args, CommandFactory, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{Map, Value};

use crate::assembly::{assemble_tn, export_edges, level_census, spine_truncation, GlueMode};
use crate::census::{census_table, volume_vk};
use crate::diagnostics::{gromov_delta, lwc_diagnostic, DeltaMode, MtpInstance, RootLaw, TransportFunction};
use crate::electrical::{contract_junctions, junction_resistance_profile, subtree_resistance, TreeStrategy};
use crate::flow::{build_flow_gk, concatenated_energy_analytic, energy_analytic, energy_exact_oracle, EnergyReport};
use crate::graph::Graph;
use crate::linalg::SolverConfig;
use crate::rational::{self, Rational};
use crate::topology::{materialize_meatball, MeatballSpec, Part};
use crate::walk::{bush_vertices, escape_probability, simulate_hitting};
use crate::{Error, DEFAULT_BUDGET, DEFAULT_D};

/// Output format version written into every header.
pub const FORMAT_VERSION: &str = "v1";

/// Environment variable holding the default vertex budget.
pub const BUDGET_ENV: &str = "SOUVLAKI_BUDGET";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
    /// Sorted edge list (`build`, `export`).
    Edges,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
            Format::Edges => "edges",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Glue {
    Tower,
    BaseOnly,
}

impl From<Glue> for GlueMode {
    fn from(g: Glue) -> Self {
        match g {
            Glue::Tower => GlueMode::TowerSharing,
            Glue::BaseOnly => GlueMode::BaseOnly,
        }
    }
}

impl fmt::Display for Glue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Glue::Tower => "tower",
            Glue::BaseOnly => "base-only",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ExportKind {
    Edges,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FlowMode {
    Analytic,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DeltaArgMode {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TreeArg {
    Bfs,
    Dfs,
    /// Uniform spanning tree; needs `--seed`.
    Wilson,
}

#[derive(Parser, Debug)]
#[command(name = "souvlaki", version, about = "Canopy tree souvlaki graphs: construction, flows and diagnostics")]
struct Cli {
    /// `key = value` file supplying defaults for long flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Assemble T'_n or a spine truncation; summarize or export edges.
    Build(BuildArgs),
    /// Exact volumes, ownership counts and root-level probabilities.
    Census(CensusArgs),
    /// Per-phase energies of the unit flows g^(k).
    Flow(FlowArgs),
    /// Resistances, escape probability and subtree contrasts on a spine truncation.
    Resist(ResistArgs),
    /// Spine-hitting random walks from bush vertices of T'_n.
    Walk(WalkArgs),
    /// Both sides of the mass transport identity on T'_n.
    Mtp(MtpArgs),
    /// Ball-type laws of T'_n1, T'_n2 and the local limit.
    Lwc(LwcArgs),
    /// Four-point hyperbolicity constant.
    Delta(DeltaArgs),
    /// Sorted edge list of a meatball, T'_n or a spine truncation.
    Export(ExportArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Branching of the skeleton tree; must exceed 6.
    #[arg(long, default_value_t = DEFAULT_D, value_parser = clap::value_parser!(u32).range(7..))]
    d: u32,
    /// Master seed; required by stochastic subcommands.
    #[arg(long)]
    seed: Option<u64>,
    /// Solver tolerance, or enclosure width for `census`.
    #[arg(long)]
    tol: Option<f64>,
    /// Vertex budget for materialized graphs [env: SOUVLAKI_BUDGET].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    budget: Option<u64>,
    /// Output file; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug, Clone)]
#[command(group(ArgGroup::new("target").required(true).args(["n", "big_k"])))]
struct BuildArgs {
    /// Height of T'_n.
    #[arg(long)]
    n: Option<u32>,
    /// Number of meatballs in the spine truncation.
    #[arg(long = "K")]
    big_k: Option<u32>,
    #[arg(long, value_enum, default_value_t = Glue::Tower)]
    glue: Glue,
    /// Emit the sorted edge list instead of the summary.
    #[arg(long, value_enum)]
    export: Option<ExportKind>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct CensusArgs {
    #[arg(long)]
    n: u32,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct FlowArgs {
    /// Level `k` or an inclusive range `a..b`.
    #[arg(long, value_parser = parse_level_range)]
    k: (u32, u32),
    #[arg(long, value_enum, default_value_t = FlowMode::Analytic)]
    mode: FlowMode,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct ResistArgs {
    #[arg(long = "K")]
    big_k: u32,
    /// Spanning-tree strategies for the subtree contrast.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [TreeArg::Bfs, TreeArg::Dfs])]
    trees: Vec<TreeArg>,
    #[arg(long, value_enum, default_value_t = Glue::Tower)]
    glue: Glue,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct WalkArgs {
    #[arg(long, default_value_t = 2)]
    n: u32,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    #[arg(long, default_value_t = 100_000)]
    horizon: u64,
    /// Number of evenly spaced bush starts; all of them if absent.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    starts: Option<u64>,
    #[arg(long, value_enum, default_value_t = Glue::Tower)]
    glue: Glue,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct MtpArgs {
    #[arg(long, default_value_t = 2)]
    n: u32,
    /// Radius of the balls the transport rules may look at.
    #[arg(long, default_value_t = 2)]
    r: u32,
    /// Largest distance at which a rule may transport mass.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(0..255))]
    reach: u32,
    /// Number of random invariant rules.
    #[arg(long, default_value_t = 50)]
    functions: u64,
    #[arg(long, value_enum, default_value_t = Glue::Tower)]
    glue: Glue,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct LwcArgs {
    #[arg(long, default_value_t = 1)]
    r: u32,
    #[arg(long, default_value_t = 2)]
    n: u32,
    /// Second height; `n + 1` if absent.
    #[arg(long)]
    n2: Option<u32>,
    #[arg(long, default_value_t = 2_000, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
#[command(group(ArgGroup::new("target").required(true).args(["k", "n", "big_k"])))]
struct DeltaArgs {
    /// The meatball M_k.
    #[arg(long)]
    k: Option<u32>,
    /// One component of T'_n.
    #[arg(long)]
    n: Option<u32>,
    /// The spine truncation with K meatballs.
    #[arg(long = "K")]
    big_k: Option<u32>,
    #[arg(long, value_enum, default_value_t = DeltaArgMode::Exact)]
    mode: DeltaArgMode,
    /// Quadruples drawn in sampled mode.
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, value_enum, default_value_t = Glue::Tower)]
    glue: Glue,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
#[command(group(ArgGroup::new("target").required(true).args(["k", "n", "big_k"])))]
struct ExportArgs {
    /// The meatball M_k (see `--part`).
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long = "K")]
    big_k: Option<u32>,
    /// `full` for M_k, `left` for M^L_k.
    #[arg(long, default_value = "full", value_parser = ["full", "left"])]
    part: String,
    #[arg(long, value_enum, default_value_t = Glue::Tower)]
    glue: Glue,
    #[command(flatten)]
    common: Common,
}

fn parse_level_range(s: &str) -> Result<(u32, u32), String> {
    let bad = || format!("expected a level `k` or a range `a..b`, got {s:?}");
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?),
        None => {
            let k = s.parse().map_err(|_| bad())?;
            (k, k)
        }
    };
    if lo == 0 || lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

/// The resolved configuration of one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub subcommand: &'static str,
    /// Subcommand parameters in a fixed order.
    pub params: Vec<(String, String)>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub budget: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    /// `# souvlaki v1 <subcommand> key=value ...`.
    pub fn header(&self) -> String {
        let mut parts = vec![format!("# souvlaki {FORMAT_VERSION} {}", self.subcommand)];
        parts.extend(self.params.iter().map(|(k, v)| format!("{k}={v}")));
        if let Some(seed) = self.seed {
            parts.push(format!("seed={seed}"));
        }
        if let Some(tol) = self.tol {
            parts.push(format!("tol={tol:e}"));
        }
        parts.push(format!("budget={}", self.budget));
        parts.push(format!("format={}", self.format));
        parts.join(" ")
    }

    /// Edge lists carry only what determines the graph:
    /// `# souvlaki v1 K=3 d=7`.
    pub fn edges_header(&self) -> String {
        let mut parts = vec![format!("# souvlaki {FORMAT_VERSION}")];
        parts.extend(self.params.iter().map(|(k, v)| format!("{k}={v}")));
        parts.join(" ")
    }
}

/// A table cell. Integers may exceed 64 bits and are kept as decimal text.
#[derive(Clone, Debug)]
enum Cell {
    Int(String),
    Rat(Rational),
    Real(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn int(x: impl fmt::Display) -> Cell {
        Cell::Int(x.to_string())
    }

    fn text(&self) -> String {
        match self {
            Cell::Int(s) | Cell::Text(s) => s.clone(),
            Cell::Rat(q) => rational::format(q),
            Cell::Real(x) => rational::format_real(*x),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(s) => s
                .parse::<u64>()
                .map(Value::from)
                .or_else(|_| s.parse::<i64>().map(Value::from))
                .unwrap_or_else(|_| Value::String(s.clone())),
            Cell::Real(x) => serde_json::Number::from_f64(*x)
                .map(Value::Number)
                .unwrap_or_else(|| Value::String(rational::format_real(*x))),
            Cell::Bool(b) => Value::Bool(*b),
            other => Value::String(other.text()),
        }
    }
}

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

enum Output {
    Table(Table),
    Edges(String),
}

/// Failure of one invocation, mapped to an exit code.
#[derive(Debug)]
enum CliError {
    /// Bad flags or configuration: exit 2 with usage.
    Usage { message: String, subcommand: Option<&'static str> },
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(message: impl Into<String>, subcommand: &'static str) -> CliError {
    CliError::Usage {
        message: message.into(),
        subcommand: Some(subcommand),
    }
}

/// Exit code of a library error: 3 budget, 4 non-convergence, 2 for bad
/// parameters, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BudgetExceeded { .. } => 3,
        Error::NotConverged { .. } => 4,
        Error::InvalidParameter(_) | Error::Parse(_) | Error::CoordinateOutOfRange(_) => 2,
        _ => 1,
    }
}

/// Runs the command line with standard output and error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the command line, writing results to `out` (unless `--out` names a
/// file) and diagnostics to `err`. Returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let outcome = apply_config(argv).and_then(|argv| {
        let sub = subcommand_of(&argv);
        match Cli::try_parse_from(argv) {
            Ok(cli) => execute(cli.command).map(Some),
            Err(e) if !e.use_stderr() => {
                let _ = write!(out, "{}", e.render());
                Ok(None)
            }
            Err(e) => {
                let text = e.render().to_string();
                let _ = write!(err, "{text}");
                if !text.contains("Usage:") {
                    let _ = writeln!(err, "\n{}", usage_text(sub.as_deref()));
                }
                Err(CliError::Usage {
                    message: String::new(),
                    subcommand: None,
                })
            }
        }
    });
    match outcome {
        Ok(None) => 0,
        Ok(Some((config, output))) => match emit(&config, &output, out) {
            Ok(()) => 0,
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => 0,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                1
            }
        },
        Err(CliError::Usage { message, subcommand }) => {
            if !message.is_empty() {
                let _ = writeln!(err, "error: {message}\n");
                let _ = writeln!(err, "{}", usage_text(subcommand));
            }
            2
        }
        Err(CliError::Run(e)) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Usage line of a subcommand, or of the whole program.
fn usage_text(subcommand: Option<&str>) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    match subcommand.and_then(|s| cmd.find_subcommand_mut(s)) {
        Some(sub) => sub.render_usage().to_string(),
        None => cmd.render_usage().to_string(),
    }
}

/// First bare word of `argv`, skipping the value of `--config`.
fn subcommand_of(argv: &[OsString]) -> Option<String> {
    let mut words = argv.iter().skip(1).filter_map(|a| a.to_str());
    while let Some(w) = words.next() {
        if w == "--config" {
            words.next();
        } else if !w.starts_with('-') {
            return Some(w.to_owned());
        }
    }
    None
}

fn emit(config: &RunConfig, output: &Output, stdout: &mut dyn Write) -> io::Result<()> {
    let text = render(config, output)?;
    match &config.out {
        Some(path) => fs::write(path, text),
        None => stdout.write_all(text.as_bytes()),
    }
}

fn render(config: &RunConfig, output: &Output) -> io::Result<String> {
    match output {
        Output::Edges(text) => Ok(text.clone()),
        Output::Table(table) => match config.format {
            Format::Jsonl => {
                let mut s = String::new();
                let mut head = Map::new();
                head.insert("souvlaki".into(), Value::from(FORMAT_VERSION));
                head.insert("header".into(), Value::from(config.header()));
                s.push_str(&Value::Object(head).to_string());
                s.push('\n');
                for row in &table.rows {
                    let obj: Map<String, Value> =
                        table.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect();
                    s.push_str(&Value::Object(obj).to_string());
                    s.push('\n');
                }
                Ok(s)
            }
            _ => {
                let mut buf = Vec::new();
                buf.extend_from_slice(config.header().as_bytes());
                buf.push(b'\n');
                {
                    let mut w = csv::Writer::from_writer(&mut buf);
                    w.write_record(&table.columns)?;
                    for row in &table.rows {
                        w.write_record(row.iter().map(Cell::text))?;
                    }
                    w.flush()?;
                }
                Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
            }
        },
    }
}

/// Injects `key = value` lines of the `--config` file as flags of the chosen
/// subcommand, unless the flag is already given. Keys that belong to other
/// subcommands are ignored; unknown keys are an error.
fn apply_config(argv: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let config_err = |m: String| CliError::Usage {
        message: m,
        subcommand: None,
    };
    let text: Vec<Option<String>> = argv.iter().map(|a| a.to_str().map(str::to_owned)).collect();
    let mut path = None;
    let mut sub = None;
    let mut i = 1;
    while i < text.len() {
        match text[i].as_deref() {
            Some("--config") => {
                path = text.get(i + 1).cloned().flatten();
                i += 2;
                continue;
            }
            Some(t) if t.starts_with("--config=") => path = Some(t["--config=".len()..].to_owned()),
            Some(t) if sub.is_none() && !t.starts_with('-') => sub = Some(i),
            _ => {}
        }
        i += 1;
    }
    let (Some(path), Some(sub)) = (path, sub) else {
        return Ok(argv);
    };
    let content = fs::read_to_string(&path).map_err(|e| config_err(format!("cannot read config {path}: {e}")))?;
    let cmd = Cli::command();
    let sub_name = text[sub].clone().unwrap_or_default();
    let Some(sub_cmd) = cmd.find_subcommand(&sub_name) else {
        return Ok(argv);
    };
    let longs = |c: &clap::Command| -> Vec<String> {
        c.get_arguments().filter_map(|a| a.get_long()).map(str::to_owned).collect()
    };
    let own = longs(sub_cmd);
    let known: Vec<String> = cmd.get_subcommands().flat_map(longs).collect();
    let mut injected = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(config_err(format!("{path}:{}: expected `key = value`", lineno + 1)));
        };
        let (key, value) = (key.trim(), value.trim());
        if key == "config" || !known.iter().any(|k| k == key) {
            return Err(config_err(format!("{path}:{}: unknown key {key:?}", lineno + 1)));
        }
        let given = text.iter().flatten().any(|t| t == &format!("--{key}") || t.starts_with(&format!("--{key}=")));
        if own.iter().any(|k| k == key) && !given {
            injected.push(OsString::from(format!("--{key}={value}")));
        }
    }
    let mut out = argv;
    out.splice(sub + 1..sub + 1, injected);
    Ok(out)
}

fn resolve_budget(flag: Option<u64>, sub: &'static str) -> CliResult<u64> {
    if let Some(b) = flag {
        return Ok(b);
    }
    match std::env::var(BUDGET_ENV) {
        Ok(v) => match v.trim().parse::<u64>() {
            Ok(b) if b > 0 => Ok(b),
            _ => Err(usage(format!("{BUDGET_ENV}={v:?} is not a positive integer"), sub)),
        },
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

fn require_seed(seed: Option<u64>, sub: &'static str) -> CliResult<u64> {
    seed.ok_or_else(|| usage(format!("`{sub}` is stochastic and needs --seed"), sub))
}

fn resolve_tol(tol: Option<f64>, default: f64, sub: &'static str) -> CliResult<f64> {
    let t = tol.unwrap_or(default);
    if !(t.is_finite() && t > 0.0) {
        return Err(usage(format!("--tol must be positive, got {t}"), sub));
    }
    Ok(t)
}

fn table_format(format: Option<Format>, sub: &'static str) -> CliResult<Format> {
    match format.unwrap_or(Format::Csv) {
        Format::Edges => Err(usage(format!("`{sub}` does not produce an edge list"), sub)),
        f => Ok(f),
    }
}

fn base_config(sub: &'static str, common: &Common, budget: u64, format: Format) -> RunConfig {
    RunConfig {
        subcommand: sub,
        params: Vec::new(),
        seed: common.seed,
        tol: None,
        budget,
        out: common.out.clone(),
        format,
    }
}

fn param(config: &mut RunConfig, key: &str, value: impl fmt::Display) {
    config.params.push((key.to_owned(), value.to_string()));
}

fn execute(command: Command) -> CliResult<(RunConfig, Output)> {
    match command {
        Command::Build(a) => cmd_build(a),
        Command::Census(a) => cmd_census(a),
        Command::Flow(a) => cmd_flow(a),
        Command::Resist(a) => cmd_resist(a),
        Command::Walk(a) => cmd_walk(a),
        Command::Mtp(a) => cmd_mtp(a),
        Command::Lwc(a) => cmd_lwc(a),
        Command::Delta(a) => cmd_delta(a),
        Command::Export(a) => cmd_export(a),
    }
}

/// The graph a `--k/--n/--K` target names, with string labels.
fn target_graph(k: Option<u32>, n: Option<u32>, big_k: Option<u32>, left: bool, d: u32, glue: GlueMode, budget: u64) -> CliResult<Graph<String>> {
    Ok(match (k, n, big_k) {
        (Some(k), _, _) => {
            let part = if left { Part::LeftOnly } else { Part::Full };
            materialize_meatball(&MeatballSpec::new(k, d)?, part, budget)?.map_labels(|v| v.to_string())
        }
        (_, Some(n), _) => assemble_tn(n, d, glue, budget)?.graph.map_labels(|v| v.to_string()),
        (_, _, Some(kk)) => spine_truncation(kk, d, glue, budget)?.graph.map_labels(|v| v.to_string()),
        _ => unreachable!("clap enforces one target"),
    })
}

fn target_params(config: &mut RunConfig, k: Option<u32>, n: Option<u32>, big_k: Option<u32>) {
    if let Some(k) = k {
        param(config, "k", k);
    }
    if let Some(n) = n {
        param(config, "n", n);
    }
    if let Some(kk) = big_k {
        param(config, "K", kk);
    }
}

fn cmd_build(a: BuildArgs) -> CliResult<(RunConfig, Output)> {
    const SUB: &str = "build";
    let budget = resolve_budget(a.common.budget, SUB)?;
    let format = match (a.common.format, a.export) {
        (Some(f), None) => f,
        (None | Some(Format::Edges), Some(ExportKind::Edges)) => Format::Edges,
        (Some(_), Some(_)) => return Err(usage("--export edges conflicts with --format", SUB)),
        (None, None) => Format::Csv,
    };
    let mut config = base_config(SUB, &a.common, budget, format);
    target_params(&mut config, None, a.n, a.big_k);
    param(&mut config, "d", a.common.d);
    if a.glue != Glue::Tower {
        param(&mut config, "glue", a.glue);
    }
    let glue: GlueMode = a.glue.into();
    let (graph, components, spine) = match (a.n, a.big_k) {
        (Some(n), _) => {
            let t = assemble_tn(n, a.common.d, glue, budget)?;
            let spine = t.spine_mask().iter().filter(|&&m| m).count();
            (t.graph, t.components, spine)
        }
        (_, Some(kk)) => {
            let s = spine_truncation(kk, a.common.d, glue, budget)?;
            let components = s.graph.components().1;
            let n = s.graph.len();
            (s.graph, components, n)
        }
        _ => unreachable!("clap enforces one target"),
    };
    if format == Format::Edges {
        return Ok((config.clone(), Output::Edges(export_edges(&graph, &config.edges_header()))));
    }
    let mut t = Table::new(&["vertices", "edges", "components", "spine_vertices", "max_degree"]);
    t.push(vec![
        Cell::int(graph.len()),
        Cell::int(graph.edge_count()),
        Cell::int(components),
        Cell::int(spine),
        Cell::int(graph.max_degree()),
    ]);
    Ok((config, Output::Table(t)))
}

fn cmd_export(a: ExportArgs) -> CliResult<(RunConfig, Output)> {
    const SUB: &str = "export";
    let budget = resolve_budget(a.common.budget, SUB)?;
    if matches!(a.common.format, Some(f) if f != Format::Edges) {
        return Err(usage("`export` only writes edge lists", SUB));
    }
    let mut config = base_config(SUB, &a.common, budget, Format::Edges);
    target_params(&mut config, a.k, a.n, a.big_k);
    param(&mut config, "d", a.common.d);
    let left = a.part == "left";
    if a.k.is_some() {
        param(&mut config, "part", &a.part);
    } else if a.glue != Glue::Tower {
        param(&mut config, "glue", a.glue);
    }
    let graph = target_graph(a.k, a.n, a.big_k, left, a.common.d, a.glue.into(), budget)?;
    let text = export_edges(&graph, &config.edges_header());
    Ok((config, Output::Edges(text)))
}

fn cmd_census(a: CensusArgs) -> CliResult<(RunConfig, Output)> {
    const SUB: &str = "census";
    let budget = resolve_budget(a.common.budget, SUB)?;
    let format = table_format(a.common.format, SUB)?;
    let tol = resolve_tol(a.common.tol, 1e-12, SUB)?;
    let mut config = base_config(SUB, &a.common, budget, format);
    config.tol = Some(tol);
    param(&mut config, "n", a.n);
    param(&mut config, "d", a.common.d);
    let d = a.common.d;
    let width = Rational::from_float(tol).expect("finite tolerance");
    let rows = census_table(a.n, d, &width)?;
    // Exhaustive count of M^L vertices by owner level when T'_n fits.
    let (counts, source): (Vec<u128>, &str) = match assemble_tn(a.n, d, GlueMode::TowerSharing, budget) {
        Ok(t) => (
            level_census(&t.skeleton, &t.graph).iter().map(|&(_, left, _)| left as u128).collect(),
            "enumerated",
        ),
        Err(Error::BudgetExceeded { .. }) => {
            let s = crate::assembly::Skeleton::tree(a.n, d)?;
            let counts = (1..=a.n)
                .map(|k| {
                    let v: u128 = volume_vk(k).try_into().unwrap_or(u128::MAX);
                    s.edges_at_level(k).saturating_mul(v)
                })
                .collect();
            (counts, "formula")
        }
        Err(e) => return Err(e.into()),
    };
    let total: u128 = counts.iter().sum();
    let mut t = Table::new(&[
        "k",
        "v_k",
        "u_k",
        "u_k_base_only",
        "ml_count",
        "ml_total",
        "p_kn_census",
        "p_kn",
        "agrees",
        "p_k_lo",
        "p_k_hi",
        "p_k_approx",
        "counts",
    ]);
    for (row, &count) in rows.iter().zip(&counts) {
        let census = Rational::new(count.into(), total.into());
        t.push(vec![
            Cell::int(row.k),
            Cell::int(&row.v_k),
            Cell::int(&row.u_k),
            Cell::int(&row.u_k_base_only),
            Cell::int(count),
            Cell::int(total),
            Cell::Text(format!("{count}/{total}")),
            Cell::Rat(row.p_kn.clone()),
            Cell::Bool(census == row.p_kn),
            Cell::Rat(row.p_k.lo.clone()),
            Cell::Rat(row.p_k.hi.clone()),
            Cell::Real(rational::to_f64(&row.p_k.midpoint())),
            Cell::Text(source.into()),
        ]);
    }
    Ok((config, Output::Table(t)))
}

fn energy_row(r: &EnergyReport, k: u32) -> Vec<Cell> {
    vec![
        Cell::int(k),
        Cell::Rat(r.ascent.clone()),
        Cell::Rat(r.horizontal.clone()),
        Cell::Rat(r.descent.clone()),
        Cell::Rat(r.redistribution.clone()),
        Cell::Rat(r.total.clone()),
        Cell::Rat(r.k2_total.clone()),
    ]
}

fn cmd_flow(a: FlowArgs) -> CliResult<(RunConfig, Output)> {
    const SUB: &str = "flow";
    let budget = resolve_budget(a.common.budget, SUB)?;
    let format = table_format(a.common.format, SUB)?;
    let mut config = base_config(SUB, &a.common, budget, format);
    let (lo, hi) = a.k;
    param(&mut config, "k", if lo == hi { lo.to_string() } else { format!("{lo}..{hi}") });
    param(&mut config, "mode", if a.mode == FlowMode::Exact { "exact" } else { "analytic" });
    let mut t = Table::new(&["k", "E_ascent", "E_horiz", "E_descent", "E_redistribute", "E_total", "k2E"]);
    for k in lo..=hi {
        let report = match a.mode {
            FlowMode::Analytic => energy_analytic(k)?,
            FlowMode::Exact => {
                let flow = build_flow_gk(k, budget)?;
                flow.check_conservation()?;
                energy_exact_oracle(&flow, &MeatballSpec::new(k + 1, DEFAULT_D)?)?
            }
        };
        t.push(energy_row(&report, k));
    }
    Ok((config, Output::Table(t)))
}

fn cmd_resist(a: ResistArgs) -> CliResult<(RunConfig, Output)> {
    const SUB: &str = "resist";
    let budget = resolve_budget(a.common.budget, SUB)?;
    let format = table_format(a.common.format, SUB)?;
    let tol = resolve_tol(a.common.tol, 1e-10, SUB)?;
    let strategies = a
        .trees
        .iter()
        .map(|t| {
            Ok(match t {
                TreeArg::Bfs => TreeStrategy::Bfs,
                TreeArg::Dfs => TreeStrategy::Dfs,
                TreeArg::Wilson => TreeStrategy::Wilson {
                    seed: require_seed(a.common.seed, SUB)?,
                },
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut config = base_config(SUB, &a.common, budget, format);
    config.tol = Some(tol);
    param(&mut config, "K", a.big_k);
    param(&mut config, "d", a.common.d);
    param(&mut config, "glue", a.glue);
    let trees: Vec<String> = a.trees.iter().map(|t| format!("{t:?}").to_lowercase()).collect();
    param(&mut config, "trees", trees.join(","));
    let glue: GlueMode = a.glue.into();
    let cfg = SolverConfig::with_tol(tol);
    let spine = spine_truncation(a.big_k, a.common.d, glue, budget)?;
    let escape = escape_probability(&spine, cfg)?;
    let bound = concatenated_energy_analytic(a.big_k, glue)?;
    let contracted = contract_junctions(&spine);
    let profile = junction_resistance_profile(&contracted, cfg)?;

    let mut t = Table::new(&["quantity", "index", "value"]);
    let kk = a.big_k;
    let mut row = |q: &str, i: u32, v: Cell| t.push(vec![Cell::Text(q.into()), Cell::int(i), v]);
    row("vertices", kk, Cell::int(spine.graph.len()));
    row("r_graph", kk, Cell::Real(escape.resistance));
    row("energy_bound", kk, Cell::Rat(bound.clone()));
    row("thomson_holds", kk, Cell::Bool(escape.resistance <= rational::to_f64(&bound) * (1.0 + tol)));
    row("source_degree", kk, Cell::int(escape.degree));
    row("escape_via_resistance", kk, Cell::Real(escape.via_resistance));
    row("escape_via_green", kk, Cell::Real(escape.via_green));
    for k in 1..=kk {
        row("junction_degree", k, Cell::int(contracted.junction_degree(k)));
    }
    for (k, r) in &profile {
        row("junction_resistance", *k, Cell::Real(r.value));
    }
    for s in strategies {
        let name = match s {
            TreeStrategy::Bfs => "r_tree_bfs",
            TreeStrategy::Dfs => "r_tree_dfs",
            TreeStrategy::Wilson { .. } => "r_tree_wilson",
        };
        row(name, kk, Cell::Real(subtree_resistance(&spine, s)));
    }
    Ok((config, Output::Table(t)))
}

fn cmd_walk(a: WalkArgs) -> CliResult<(RunConfig, Output)> {
    const SUB: &str = "walk";
    let seed = require_seed(a.common.seed, SUB)?;
    let budget = resolve_budget(a.common.budget, SUB)?;
    let format = table_format(a.common.format, SUB)?;
    let mut config = base_config(SUB, &a.common, budget, format);
    param(&mut config, "n", a.n);
    param(&mut config, "d", a.common.d);
    param(&mut config, "glue", a.glue);
    param(&mut config, "runs", a.runs);
    param(&mut config, "horizon", a.horizon);
    param(&mut config, "starts", a.starts.map_or("all".to_string(), |s| s.to_string()));
    let tree = assemble_tn(a.n, a.common.d, a.glue.into(), budget)?;
    let mask = tree.spine_mask();
    let bush = bush_vertices(&tree);
    let chosen: Vec<u32> = match a.starts {
        Some(m) if (m as usize) < bush.len() => {
            (0..m as usize).map(|i| bush[i * bush.len() / m as usize]).collect()
        }
        _ => bush,
    };
    let stats: Vec<_> = chosen
        .par_iter()
        .map(|&s| simulate_hitting(&tree.graph, &mask, s, a.runs, a.horizon, seed))
        .collect();
    let mut t = Table::new(&["start", "runs", "hits", "frequency", "t50", "t90", "t99", "t_max"]);
    for s in stats {
        let mut row = vec![
            Cell::Text(tree.graph.vertex(s.start).to_string()),
            Cell::int(s.runs),
            Cell::int(s.hits),
            Cell::Real(s.frequency()),
        ];
        row.extend(s.quantiles.iter().map(|&(_, q)| Cell::int(q)));
        t.push(row);
    }
    Ok((config, Output::Table(t)))
}

fn cmd_mtp(a: MtpArgs) -> CliResult<(RunConfig, Output)> {
    const SUB: &str = "mtp";
    let seed = require_seed(a.common.seed, SUB)?;
    let budget = resolve_budget(a.common.budget, SUB)?;
    let format = table_format(a.common.format, SUB)?;
    let mut config = base_config(SUB, &a.common, budget, format);
    param(&mut config, "n", a.n);
    param(&mut config, "d", a.common.d);
    param(&mut config, "glue", a.glue);
    param(&mut config, "r", a.r);
    param(&mut config, "reach", a.reach);
    param(&mut config, "functions", a.functions);
    let tree = assemble_tn(a.n, a.common.d, a.glue.into(), budget)?;
    let inst = MtpInstance::new(&tree.graph, a.r, a.reach);
    let mut rules: Vec<(String, TransportFunction, RootLaw)> = (0..a.functions)
        .map(|i| {
            let s = crate::diagnostics::rule_seed(seed, i);
            (format!("random:{s}"), TransportFunction::Random { seed: s }, RootLaw::Uniform)
        })
        .collect();
    rules.push(("adjacency".into(), TransportFunction::Adjacency, RootLaw::Uniform));
    rules.push(("degree-gradient".into(), TransportFunction::DegreeGradient, RootLaw::Uniform));
    rules.push(("degree-gradient".into(), TransportFunction::DegreeGradient, RootLaw::DegreeBiased));
    let results: Vec<_> = rules.par_iter().map(|(_, f, law)| inst.sides(*f, *law)).collect();
    let mut t = Table::new(&["rule", "root_law", "out_mass", "in_mass", "equal"]);
    for ((name, _, law), (lhs, rhs)) in rules.iter().zip(results) {
        let law = match law {
            RootLaw::Uniform => "uniform",
            RootLaw::DegreeBiased => "degree-biased",
        };
        let equal = lhs == rhs;
        t.push(vec![Cell::Text(name.clone()), Cell::Text(law.into()), Cell::Rat(lhs), Cell::Rat(rhs), Cell::Bool(equal)]);
    }
    Ok((config, Output::Table(t)))
}

fn cmd_lwc(a: LwcArgs) -> CliResult<(RunConfig, Output)> {
    const SUB: &str = "lwc";
    let seed = require_seed(a.common.seed, SUB)?;
    let budget = resolve_budget(a.common.budget, SUB)?;
    let format = table_format(a.common.format, SUB)?;
    let n2 = a.n2.unwrap_or(a.n + 1);
    let mut config = base_config(SUB, &a.common, budget, format);
    param(&mut config, "r", a.r);
    param(&mut config, "n", a.n);
    param(&mut config, "n2", n2);
    param(&mut config, "d", a.common.d);
    param(&mut config, "samples", a.samples);
    let rep = lwc_diagnostic(a.r, a.common.d, a.n, n2, a.samples, seed, budget)?;
    let mut t = Table::new(&[
        "r",
        "n1",
        "n2",
        "samples",
        "tv_n1_n2",
        "se_n1_n2",
        "tv_n1_limit",
        "se_n1_limit",
        "tv_n2_limit",
        "se_n2_limit",
        "types",
        "hash_typed",
        "max_root_degree",
    ]);
    t.push(vec![
        Cell::int(rep.r),
        Cell::int(rep.n1),
        Cell::int(rep.n2),
        Cell::int(rep.samples),
        Cell::Real(rep.tv_n1_n2.0),
        Cell::Real(rep.tv_n1_n2.1),
        Cell::Real(rep.tv_n1_limit.0),
        Cell::Real(rep.tv_n1_limit.1),
        Cell::Real(rep.tv_n2_limit.0),
        Cell::Real(rep.tv_n2_limit.1),
        Cell::int(rep.types),
        Cell::int(rep.hash_typed),
        Cell::int(rep.max_root_degree),
    ]);
    Ok((config, Output::Table(t)))
}

fn cmd_delta(a: DeltaArgs) -> CliResult<(RunConfig, Output)> {
    const SUB: &str = "delta";
    let budget = resolve_budget(a.common.budget, SUB)?;
    let format = table_format(a.common.format, SUB)?;
    let mode = match a.mode {
        DeltaArgMode::Exact => DeltaMode::Exact,
        DeltaArgMode::Sampled => DeltaMode::Sampled {
            quadruples: a.samples,
            seed: require_seed(a.common.seed, SUB)?,
        },
    };
    let mut config = base_config(SUB, &a.common, budget, format);
    if a.mode == DeltaArgMode::Exact {
        config.seed = None;
    }
    target_params(&mut config, a.k, a.n, a.big_k);
    param(&mut config, "d", a.common.d);
    if a.k.is_none() {
        param(&mut config, "glue", a.glue);
    }
    param(&mut config, "mode", if a.mode == DeltaArgMode::Exact { "exact" } else { "sampled" });
    if a.mode == DeltaArgMode::Sampled {
        param(&mut config, "samples", a.samples);
    }
    let mut graph = target_graph(a.k, a.n, a.big_k, false, a.common.d, a.glue.into(), budget)?;
    if a.n.is_some() {
        // The root edges of T'_n carry isomorphic components; use the first.
        let (comp, _) = graph.components();
        let keep: Vec<bool> = comp.iter().map(|&c| c == comp[0]).collect();
        graph = graph.induced(&keep).0;
    }
    let stats = gromov_delta(&graph, mode)?;
    let mut t = Table::new(&["vertices", "exact", "quadruples", "twice_delta", "delta"]);
    t.push(vec![
        Cell::int(stats.vertices),
        Cell::Bool(stats.exact),
        Cell::int(stats.quadruples),
        Cell::int(stats.twice_delta),
        Cell::Rat(rational::frac(stats.twice_delta, 2u32)),
    ]);
    Ok((config, Output::Table(t)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("souvlaki").chain(args.iter().copied());
        let code = run_with(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn level_ranges() {
        assert_eq!(parse_level_range("3"), Ok((3, 3)));
        assert_eq!(parse_level_range("1..4"), Ok((1, 4)));
        assert!(parse_level_range("4..1").is_err());
        assert!(parse_level_range("0").is_err());
    }

    #[test]
    fn flag_errors_exit_two_with_usage() {
        let (code, _, err) = run_capture(&["census", "--n", "2", "--d", "6"]);
        assert_eq!(code, 2);
        assert!(err.contains("Usage"), "{err}");
        let (code, _, err) = run_capture(&["walk", "--n", "1"]);
        assert_eq!(code, 2);
        assert!(err.contains("--seed") && err.contains("Usage"), "{err}");
        assert_eq!(run_capture(&["flow", "--k", "1", "--format", "edges"]).0, 2);
    }

    #[test]
    fn budget_and_help_exit_codes() {
        assert_eq!(run_capture(&["build", "--n", "3", "--budget", "1000"]).0, 3);
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("census"));
    }

    #[test]
    fn cells_round_trip() {
        let x = 0.1 + 0.2;
        assert_eq!(Cell::Real(x).text().parse::<f64>().unwrap(), x);
        let q = rational::frac(-7, 12);
        assert_eq!(rational::parse(&Cell::Rat(q.clone()).text()), Some(q));
    }
}

//! Subcommand definitions and their implementations.

use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rgl_core::bot::{CoalitionPolicy, PolicyTable, SessionStore};
use rgl_core::coalition::{
    fit_rational, nash_threshold, run_table, solve_one_vs_n, verify_weenie_optimality, SolveMode, SolveOptions,
};
use rgl_core::dynamics::{
    guts_game, jacob_game, jacob_game_ii, jacob_game_mega, multiplayer_fp, odd_man_pure_game, MultiFpOptions,
    OddManVariant, SymmetricGame,
};
use rgl_core::export::{read_table_csv, write_matrix_binary, write_multi_fp_csv, write_table_csv, write_value_trace_csv, MatrixHeader};
use rgl_core::payoff::{build_full_matrices, build_pseudo_bloc_matrices, BuildOptions};
use rgl_core::recursive::ValueIterationOptions;
use rgl_core::{make_grid, MixedStrategy, RuleVariant};
use serde::Serialize;

use crate::manifest::OutputDir;

#[derive(Debug, Parser)]
#[command(name = "rgl", version, about = "Guts coalition solver, dynamics lab and bot service")]
pub struct Cli {
    /// Worker threads for parallel sections; `RGL_THREADS` takes precedence.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the recursive 1-v-(n-1) game.
    Solve(SolveArgs),
    /// Coalition values for a range of coalition sizes.
    Table(TableArgs),
    /// Fit `a - b/(N - c)` to a table CSV.
    Fit(FitArgs),
    /// Run n-player fictitious play on a named game.
    Fp(FpArgs),
    /// Scan every coalition tuple against the Weenie Nash threshold.
    WeenieCheck(WeenieArgs),
    /// Serve the bot over HTTP.
    Serve(ServeArgs),
}

/// How a finished command should exit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    NotConverged,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Done => 0,
            Outcome::NotConverged => 2,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    /// Total number of players, including player 1.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 101)]
    pub mesh: usize,
    #[arg(long, default_value = "full", value_parser = parse_mode)]
    pub mode: SolveMode,
    #[arg(long, default_value = "standard", value_parser = parse_rule)]
    pub rule: RuleVariant,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iterations: usize,
    /// Also write the payoff and continuation matrices as binary files.
    #[arg(long)]
    pub export_matrices: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TableArgs {
    #[arg(long, default_value_t = 1)]
    pub min_n: usize,
    /// Largest coalition size.
    #[arg(long)]
    pub max_n: usize,
    #[arg(long, default_value_t = 101)]
    pub mesh: usize,
    #[arg(long, default_value = "standard", value_parser = parse_rule)]
    pub rule: RuleVariant,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    /// Table CSV with `N` and `opponent_value` columns.
    #[arg(long)]
    pub input: PathBuf,
    /// Rows with smaller `N` are left out of the fit.
    #[arg(long, default_value_t = 2)]
    pub min_n: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameName {
    Jacob,
    JacobIi,
    JacobMega,
    Guts,
    OddManIn,
    OddManOut,
}

#[derive(Debug, Args, Serialize)]
pub struct FpArgs {
    #[arg(long, value_enum)]
    pub game: GameName,
    #[arg(long, default_value_t = 10_000)]
    pub iters: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Initial iterations played uniformly at random.
    #[arg(long, default_value_t = 1)]
    pub openings: u64,
    /// Players in the guts game.
    #[arg(long, default_value_t = 3)]
    pub players: usize,
    /// Threshold grid size for the guts game.
    #[arg(long, default_value_t = 501)]
    pub mesh: usize,
    #[arg(long, default_value = "standard", value_parser = parse_rule)]
    pub rule: RuleVariant,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct WeenieArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 101)]
    pub mesh: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ServeArgs {
    #[arg(long, env = "RGL_PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Directory of policy JSON files written by `solve`.
    #[arg(long)]
    pub policy_dir: Option<PathBuf>,
    /// Solve missing policies when a session first needs them.
    #[arg(long)]
    pub on_demand: bool,
    /// Append a JSONL transcript per session here.
    #[arg(long)]
    pub transcript_dir: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<SolveMode, String> {
    s.parse().map_err(|e: rgl_core::Error| e.to_string())
}

fn parse_rule(s: &str) -> Result<RuleVariant, String> {
    s.parse().map_err(|e: rgl_core::Error| e.to_string())
}

/// Prints a progress line to stderr every 10 seconds until dropped.
pub struct Heartbeat {
    stop: Option<mpsc::Sender<()>>,
    handle: Option<thread::JoinHandle<()>>,
}

impl Heartbeat {
    pub fn start(label: String) -> Self {
        let (tx, rx) = mpsc::channel::<()>();
        let started = Instant::now();
        let handle = thread::spawn(move || {
            while let Err(mpsc::RecvTimeoutError::Timeout) = rx.recv_timeout(Duration::from_secs(10)) {
                eprintln!("[rgl] {label}: still running ({:.0} s)", started.elapsed().as_secs_f64());
            }
        });
        Self { stop: Some(tx), handle: Some(handle) }
    }
}

impl Drop for Heartbeat {
    fn drop(&mut self) {
        drop(self.stop.take());
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Solve(a) => solve(&a),
        Command::Table(a) => table(&a),
        Command::Fit(a) => fit(&a),
        Command::Fp(a) => fp(&a),
        Command::WeenieCheck(a) => weenie_check(&a),
        Command::Serve(a) => serve(&a).map(|_| Outcome::Done),
    }
}

fn solve_options(tolerance: f64, seed: u64, max_iterations: usize) -> Result<SolveOptions> {
    if tolerance.is_nan() || tolerance <= 0.0 {
        bail!("tolerance must be positive, got {tolerance}");
    }
    Ok(SolveOptions {
        iteration: ValueIterationOptions { tolerance, seed, max_iterations, ..Default::default() },
        build: BuildOptions::default(),
    })
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    n: usize,
    mesh: usize,
    mode: SolveMode,
    rule: RuleVariant,
    opponent_value: f64,
    converged: bool,
    iterations: usize,
    player1_threshold: f64,
    bloc: Option<f64>,
    pseudo_bloc: Option<f64>,
    policy: &'a str,
}

pub fn policy_file_name(policy: &CoalitionPolicy) -> String {
    format!("policy_{}_{}_{}.json", policy.opponents, policy.mesh, policy.rule)
}

fn solve(a: &SolveArgs) -> Result<Outcome> {
    let opts = solve_options(a.tolerance, a.seed, a.max_iterations)?;
    let grid = make_grid(a.mesh)?;
    let mut out = OutputDir::create(&a.out, "solve", a)?;
    let _beat = Heartbeat::start(format!("solve n={} mesh={}", a.n, a.mesh));
    let solution = solve_one_vs_n(a.n, a.mesh, a.mode, a.rule, &opts)?;

    out.write_json("solution.json", &solution)?;
    let mut trace = Vec::new();
    write_value_trace_csv(&mut trace, &solution.trace, &solution.gap_trace)?;
    out.write("trace.csv", &trace)?;

    let policy = CoalitionPolicy::from_solution(&solution)?;
    let policy_name = format!("policies/{}", policy_file_name(&policy));
    std::fs::create_dir_all(a.out.join("policies"))?;
    out.write_json(&policy_name, &policy)?;

    if a.export_matrices {
        let m = match a.mode {
            SolveMode::Full => build_full_matrices(a.n, &grid, a.rule, &opts.build)?,
            SolveMode::PseudoBloc => build_pseudo_bloc_matrices(a.n, &grid, a.rule, &opts.build)?,
        };
        let header = MatrixHeader { mesh: a.mesh as u32, players: a.n as u32, rule: a.rule };
        for (name, mat) in [("alpha.bin", m.alpha()), ("beta.bin", m.beta())] {
            let mut buf = Vec::new();
            write_matrix_binary(&mut buf, header, mat)?;
            out.write(name, &buf)?;
        }
    }

    let outcome = if solution.converged { Outcome::Done } else { Outcome::NotConverged };
    out.finish(outcome.exit_code())?;
    print_json(&SolveSummary {
        n: solution.n,
        mesh: solution.mesh,
        mode: solution.mode,
        rule: solution.rule,
        opponent_value: solution.opponent_value,
        converged: solution.converged,
        iterations: solution.trace.len().saturating_sub(1),
        player1_threshold: solution.summary.player1,
        bloc: solution.summary.bloc,
        pseudo_bloc: solution.summary.pseudo_bloc,
        policy: &policy_name,
    })?;
    Ok(outcome)
}

fn table(a: &TableArgs) -> Result<Outcome> {
    if a.min_n == 0 || a.min_n > a.max_n {
        bail!("need 1 <= min-n <= max-n, got {}..{}", a.min_n, a.max_n);
    }
    let opts = solve_options(a.tolerance, a.seed, ValueIterationOptions::default().max_iterations)?;
    let mut out = OutputDir::create(&a.out, "table", a)?;
    let _beat = Heartbeat::start(format!("table N={}..{} mesh={}", a.min_n, a.max_n, a.mesh));
    let sizes: Vec<usize> = (a.min_n..=a.max_n).collect();
    let rows = run_table(&sizes, a.mesh, a.rule, &opts)?;
    let mut csv = Vec::new();
    write_table_csv(&mut csv, &rows)?;
    out.write("table.csv", &csv)?;
    let outcome = if rows.iter().all(|r| r.converged) { Outcome::Done } else { Outcome::NotConverged };
    out.finish(outcome.exit_code())?;
    print!("{}", String::from_utf8(csv)?);
    Ok(outcome)
}

#[derive(Serialize)]
struct FitReport {
    a: f64,
    b: f64,
    c: f64,
    r_squared: f64,
    residual_sum_squares: f64,
    points: usize,
}

fn fit(a: &FitArgs) -> Result<Outcome> {
    let file = std::fs::File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let points: Vec<(f64, f64)> =
        read_table_csv(file)?.into_iter().filter(|(n, _)| *n >= a.min_n as f64).collect();
    let f = fit_rational(&points)?;
    let report = FitReport {
        a: f.a,
        b: f.b,
        c: f.c,
        r_squared: f.r_squared,
        residual_sum_squares: f.residual_sum_squares,
        points: points.len(),
    };
    let mut out = OutputDir::create(&a.out, "fit", a)?;
    out.write_json("fit.json", &report)?;
    out.finish(0)?;
    print_json(&report)?;
    Ok(Outcome::Done)
}

pub fn named_game(a: &FpArgs) -> Result<SymmetricGame> {
    Ok(match a.game {
        GameName::Jacob => jacob_game(),
        GameName::JacobIi => jacob_game_ii(),
        GameName::JacobMega => jacob_game_mega(),
        GameName::Guts => guts_game(a.players, a.mesh, a.rule)?,
        GameName::OddManIn => odd_man_pure_game(OddManVariant::In),
        GameName::OddManOut => odd_man_pure_game(OddManVariant::Out),
    })
}

#[derive(Serialize)]
struct FpSummary {
    game: String,
    seed: u64,
    iterations: u64,
    final_gap: f64,
    final_scaled_gap: f64,
    /// Pure profile played throughout the last tenth, if one was.
    settled_profile: Option<Vec<usize>>,
    final_plays: Option<Vec<usize>>,
    /// Support of each player's empirical distribution, weights above 1e-4.
    distributions: Vec<Vec<(usize, f64)>>,
    expected_payoffs: Vec<f64>,
}

fn fp(a: &FpArgs) -> Result<Outcome> {
    let game = named_game(a)?;
    let opts = MultiFpOptions { iterations: a.iters, seed: a.seed, record_plays: true, random_openings: a.openings };
    let mut out = OutputDir::create(&a.out, "fp", a)?;
    let _beat = Heartbeat::start(format!("fp {}", game.name()));
    let trace = multiplayer_fp(&game, &opts)?;
    let mut csv = Vec::new();
    write_multi_fp_csv(&mut csv, &trace)?;
    out.write("fp_trace.csv", &csv)?;

    let last = trace.gap_trace.last().expect("at least one iteration");
    let summary = FpSummary {
        game: trace.game.clone(),
        seed: trace.seed,
        iterations: trace.iterations,
        final_gap: last.gap,
        final_scaled_gap: last.scaled_gap,
        settled_profile: trace.settled_profile(0.1),
        final_plays: trace.plays.last().cloned(),
        distributions: trace.distributions.iter().map(sparse).collect(),
        expected_payoffs: (0..game.players())
            .map(|j| {
                let row = game.expected_payoffs(j, &trace.distributions);
                trace.distributions[j].weights().iter().zip(&row).map(|(w, v)| w * v).sum()
            })
            .collect(),
    };
    out.write_json("fp_summary.json", &summary)?;
    out.finish(0)?;
    print_json(&summary)?;
    Ok(Outcome::Done)
}

fn sparse(s: &MixedStrategy) -> Vec<(usize, f64)> {
    s.support().filter(|(_, w)| *w > 1e-4).collect()
}

#[derive(Serialize)]
struct WeenieReport {
    n: usize,
    mesh: usize,
    player1_threshold: f64,
    min_value: f64,
    argmin: Vec<f64>,
    tuples_scanned: u64,
    /// Nonnegative minimum, attained within one grid step of the Nash threshold.
    holds: bool,
}

fn weenie_check(a: &WeenieArgs) -> Result<Outcome> {
    let mut out = OutputDir::create(&a.out, "weenie-check", a)?;
    let _beat = Heartbeat::start(format!("weenie-check n={} mesh={}", a.n, a.mesh));
    let scan = verify_weenie_optimality(a.n, a.mesh)?;
    let nash = nash_threshold(a.n, RuleVariant::Weenie)?;
    let step = 1.0 / (a.mesh - 1) as f64;
    let holds = scan.min_value >= -1e-9 && scan.argmin.iter().all(|t| (t - nash).abs() <= step + 1e-12);
    let report = WeenieReport {
        n: scan.n,
        mesh: scan.mesh,
        player1_threshold: scan.player1_threshold,
        min_value: scan.min_value,
        argmin: scan.argmin,
        tuples_scanned: scan.tuples_scanned,
        holds,
    };
    out.write_json("weenie.json", &report)?;
    let outcome = if holds { Outcome::Done } else { Outcome::NotConverged };
    out.finish(outcome.exit_code())?;
    print_json(&report)?;
    Ok(outcome)
}

pub fn build_store(a: &ServeArgs) -> Result<SessionStore> {
    let policies = if a.on_demand { PolicyTable::with_on_demand(SolveOptions::default()) } else { PolicyTable::new() };
    if let Some(dir) = &a.policy_dir {
        let n = load_policies(&policies, dir)?;
        eprintln!("[rgl] loaded {n} policies from {}", dir.display());
    }
    let store = SessionStore::new(policies);
    Ok(match &a.transcript_dir {
        Some(dir) => store.with_transcripts(dir.clone())?,
        None => store,
    })
}

fn load_policies(table: &PolicyTable, dir: &Path) -> Result<usize> {
    table.load_dir(dir).with_context(|| format!("loading policies from {}", dir.display()))
}

fn serve(a: &ServeArgs) -> Result<()> {
    let store = Arc::new(build_store(a)?);
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), a.port))
            .await
            .with_context(|| format!("binding {}:{}", a.host, a.port))?;
        eprintln!("[rgl] listening on http://{}", listener.local_addr()?);
        axum::serve(listener, crate::server::router(store))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

fn print_json(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}


//! Command-line front end.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use leadoff_core::models::{percentile_profile, Matchup, ModelSet, ProfileRole};
use leadoff_core::records::{LeadHistogram, MissingLeadPolicy};
use leadoff_core::sim::{generate_synthetic_plays, monte_carlo_value, two_foot_rule_report, GroundTruth, RolloutPolicy};
use leadoff_core::solver::{
    evaluate_mixed_runner, evaluate_policy_pair, policy_iteration, solve, solve_one_player, PitcherPolicy, Solution,
    SolveOptions,
};
use leadoff_core::state::{Count, GameState};
use leadoff_core::transitions::{assemble_kernel, AssemblyOptions, ConditionalRows, KernelMode, PooledFrequencyTable};

use crate::coeffs::load_coefficients;
use crate::config::load_generator_config;
use crate::error::{Error, Result};
use crate::kernel_file::{load_kernel, write_kernel, KernelFile};
use crate::manifest::Manifest;
use crate::plays::{read_plays_file, PlayWriter};
use crate::solution_file::{load_solution, write_solution, SolutionFile};
use crate::tables::{by_count, by_outs, render_two_foot, Format};
use crate::text::{format_grid, parse_grid, sha256_file};

#[derive(Debug, Parser)]
#[command(name = "leadoff", version, about = "Equilibrium lead and pickoff policies for the runner-pitcher disengagement game")]
pub struct Cli {
    /// Worker threads (defaults to one per core)
    #[arg(long, global = true, env = "LEADOFF_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a synthetic play-by-play corpus
    Generate(GenerateArgs),
    /// Assemble a transition kernel from plays (or the generator's exact model) and coefficients
    BuildTransitions(BuildArgs),
    /// Solve a kernel by value or policy iteration
    Solve(SolveArgs),
    /// Print optimal-lead tables from a solution
    Tables(TablesArgs),
    /// Monte Carlo evaluation of a policy on a kernel
    Simulate(SimulateArgs),
    /// Lead increase per prior disengagement
    TwoFoot(TwoFootArgs),
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Play-by-play CSV to estimate transitions from
    #[arg(long, conflicts_with = "ground_truth")]
    pub plays: Option<PathBuf>,
    /// Generator config whose plate-appearance model gives exact transitions
    #[arg(long)]
    pub ground_truth: Option<PathBuf>,
    /// Plays with a runner alone on first but no lead measurement
    #[arg(long, value_enum, default_value_t = MissingLead::Drop)]
    pub missing_lead: MissingLead,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MissingLead {
    Drop,
    /// Fill in the mean observed lead
    Impute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    TwoPlayer,
    OnePlayer,
}

impl From<Mode> for KernelMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::TwoPlayer => KernelMode::TwoPlayer,
            Mode::OnePlayer => KernelMode::OnePlayer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Vi,
    Pi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Count,
    Outs,
    Players,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Csv,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Text => Format::Text,
            OutputFormat::Csv => Format::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyKind {
    /// Lead distribution observed in a play corpus
    Empirical,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub coeffs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Override the config's inning count
    #[arg(long)]
    pub innings: Option<u64>,
    /// Override the config's seed
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub coeffs: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long)]
    pub out: PathBuf,
    /// Lead grid as min:max:step, in feet
    #[arg(long, default_value = "0.0:20.0:0.1")]
    pub grid: String,
    /// Horizon of the halting check
    #[arg(long, default_value_t = 50)]
    pub halting_m: usize,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub kernel: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Vi)]
    pub method: Method,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Halting horizon; defaults to the one recorded in the kernel
    #[arg(long)]
    pub halting_m: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TablesArgs {
    #[arg(long)]
    pub solution: PathBuf,
    #[arg(long, value_enum)]
    pub by: Axis,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    /// Outs for count tables
    #[arg(long, default_value_t = 0)]
    pub outs: u8,
    /// Count (balls-strikes) for outs tables
    #[arg(long, default_value = "0-0")]
    pub count: String,
    /// Battery/runner percentile pairs for player tables, e.g. 0.1/0.9
    #[arg(long, value_delimiter = ',', default_value = "0.1/0.1,0.1/0.5,0.1/0.9,0.5/0.1,0.5/0.5,0.5/0.9,0.9/0.1,0.9/0.5,0.9/0.9")]
    pub players: Vec<String>,
    /// Coefficients, for player tables
    #[arg(long)]
    pub coeffs: Option<PathBuf>,
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub kernel: PathBuf,
    #[arg(long, conflicts_with = "policy")]
    pub solution: Option<PathBuf>,
    #[arg(long, value_enum, requires = "plays")]
    pub policy: Option<PolicyKind>,
    /// Corpus for the empirical policy
    #[arg(long)]
    pub plays: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    pub innings: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also write the report here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TwoFootArgs {
    #[arg(long)]
    pub solution: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(Error::io(path))
}

fn elapsed(what: &str, t: Instant) {
    eprintln!("{what} took {:.2}s", t.elapsed().as_secs_f64());
}

/// Parse the process arguments and run; returns the exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(()) => crate::error::exit::OK,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Usage("--threads must be at least 1".into()));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Generate(a) => generate(a, out),
        Command::BuildTransitions(a) => build_transitions(a, out),
        Command::Solve(a) => solve_cmd(a, out),
        Command::Tables(a) => tables(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::TwoFoot(a) => two_foot(a, out),
    }
    .and_then(|()| out.flush().map_err(Error::io("<stdout>")))
}

fn generate(a: GenerateArgs, out: &mut dyn Write) -> Result<()> {
    let t = Instant::now();
    let mut cfg = load_generator_config(&a.config)?;
    cfg.innings = a.innings.unwrap_or(cfg.innings);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    let ms = load_coefficients(&a.coeffs)?;
    let mut m = Manifest::new("generate");
    m.input(&a.config)?.input(&a.coeffs)?;
    m.config("innings", cfg.innings).config("seed", cfg.seed).config("grid", format_grid(&cfg.grid));
    let hash = m.hash();
    let file = File::create(&a.out).map_err(Error::io(&a.out))?;
    let mut buf = BufWriter::new(file);
    writeln!(buf, "# manifest {hash}").map_err(Error::io(&a.out))?;
    let mut w = PlayWriter::new(buf)?;
    let n = generate_synthetic_plays(&cfg, &ms, |r| w.write(&r).map_err(|e| leadoff_core::Error::Input(e.to_string())))?;
    w.finish()?.flush().map_err(Error::io(&a.out))?;
    m.write_beside(&a.out)?;
    writeln!(out, "wrote {n} plays from {} innings to {}", cfg.innings, a.out.display()).map_err(Error::io("<stdout>"))?;
    elapsed("generate", t);
    Ok(())
}

/// Conditional transition rows from either a corpus or the exact model.
fn conditional_rows(src: &SourceArgs, m: &mut Manifest) -> Result<ConditionalRows> {
    match (&src.plays, &src.ground_truth) {
        (Some(path), None) => {
            m.input(path)?;
            m.config("missing-lead", format!("{:?}", src.missing_lead).to_lowercase());
            let policy = match src.missing_lead {
                MissingLead::Drop => MissingLeadPolicy::Drop,
                MissingLead::Impute => {
                    let (mut sum, mut n) = (0.0, 0u64);
                    read_plays_file(path, |r| {
                        if let Some(l) = r.lead {
                            sum += l;
                            n += 1;
                        }
                        Ok(())
                    })?;
                    if n == 0 {
                        return Err(Error::Core(leadoff_core::Error::Input("no leads to impute from".into())));
                    }
                    MissingLeadPolicy::Impute(sum / n as f64)
                }
            };
            let mut q = PooledFrequencyTable::default();
            let mut dropped = 0u64;
            let read = read_plays_file(path, |r| {
                match policy.apply(r) {
                    Some(r) => q.add_record(&r)?,
                    None => dropped += 1,
                }
                Ok(())
            })?;
            if q.num_plays() == 0 {
                return Err(Error::Core(leadoff_core::Error::Input(format!("{} has no usable plays", path.display()))));
            }
            log::info!("read {read} plays, dropped {dropped} without a lead, {} third disengagements", q.third_disengagements());
            Ok(ConditionalRows::collect(&q)?)
        }
        (None, Some(path)) => {
            m.input(path)?;
            let cfg = load_generator_config(path)?;
            Ok(ConditionalRows::collect(&GroundTruth::new(cfg.pitch)?)?)
        }
        _ => Err(Error::Usage("give either --plays or --ground-truth".into())),
    }
}

fn build_transitions(a: BuildArgs, out: &mut dyn Write) -> Result<()> {
    let t = Instant::now();
    let grid = parse_grid(&a.grid)?;
    let mut m = Manifest::new("build-transitions");
    let rows = conditional_rows(&a.source, &mut m)?;
    m.input(&a.coeffs)?;
    let ms = load_coefficients(&a.coeffs)?;
    let mode = KernelMode::from(a.mode);
    m.config("mode", mode.name()).config("grid", format_grid(&grid)).config("halting-m", a.halting_m);
    let opts = AssemblyOptions { grid, ..AssemblyOptions::new(mode) };
    let mut kernel = assemble_kernel(&rows, &ms, &opts)?;
    let st = kernel.stats;
    let io = Error::io("<stdout>");
    let (halting, refused) = match kernel.game.certify(a.halting_m) {
        Ok(h) => ((h.horizon, h.rho), None),
        Err(e @ leadoff_core::Error::KernelRefused { rho, horizon }) => ((horizon, rho), Some(e)),
        Err(e) => return Err(e.into()),
    };
    let mut report = format!("halting m {} rho {:.4e}\n", halting.0, halting.1);
    if let Some(e) = refused {
        out.write_all(report.as_bytes()).map_err(io)?;
        return Err(e.into());
    }
    let hash = m.write_beside(&a.out)?;
    write_file(&a.out, &write_kernel(&kernel, halting, &hash))?;
    report = format!(
        "kernel {}\nmode {}\ngrid {}\nrows {} entries {}\nrows by fallback level {} {} {} {}, redirections {}, dropped {}\n{report}",
        a.out.display(),
        mode.name(),
        format_grid(&grid),
        kernel.game.num_rows(),
        kernel.game.num_entries(),
        st.rows_by_level[0],
        st.rows_by_level[1],
        st.rows_by_level[2],
        st.rows_by_level[3],
        st.redirections,
        st.dropped
    );
    out.write_all(report.as_bytes()).map_err(Error::io("<stdout>"))?;
    elapsed("build-transitions", t);
    Ok(())
}

/// Load a kernel and certify it, by default at its recorded horizon.
fn certified_kernel(path: &Path, m: Option<usize>) -> Result<(KernelFile, String)> {
    let mut k = load_kernel(path)?;
    let hash = sha256_file(path)?;
    let horizon = m.unwrap_or(k.halting.0);
    let h = k.kernel.game.certify(horizon)?;
    k.halting = (h.horizon, h.rho);
    Ok((k, hash))
}

fn solve_kernel(k: &KernelFile, method: Method, opts: &SolveOptions) -> Result<Solution> {
    let g = &k.kernel.game;
    Ok(match (method, k.kernel.mode) {
        (Method::Vi, KernelMode::TwoPlayer) => solve(g, opts)?,
        (Method::Vi, KernelMode::OnePlayer) => solve_one_player(g, opts)?,
        (Method::Pi, _) => policy_iteration(g, opts)?.0,
    })
}

fn solve_cmd(a: SolveArgs, out: &mut dyn Write) -> Result<()> {
    let opts = SolveOptions { tol: a.tol, max_iters: a.max_iters };
    opts.check()?;
    let (k, kernel_hash) = certified_kernel(&a.kernel, a.halting_m)?;
    let method = format!("{:?}", a.method).to_lowercase();
    let mut m = Manifest::new("solve");
    m.input(&a.kernel)?;
    m.config("method", &method)
        .config("tol", a.tol)
        .config("max-iters", a.max_iters)
        .config("halting-m", k.halting.0);
    let t = Instant::now();
    let sol = solve_kernel(&k, a.method, &opts)?;
    elapsed("solve", t);
    let hash = m.write_beside(&a.out)?;
    let file = SolutionFile {
        mode: k.kernel.mode,
        grid: k.kernel.grid,
        kernel: kernel_hash,
        method,
        halting: k.halting,
        manifest: hash,
        solution: sol,
    };
    write_file(&a.out, &write_solution(&file))?;
    let r = &file.solution.report;
    let start = GameState::START.index();
    let opt = |x: Option<f64>, f: fn(f64) -> String| x.map_or_else(|| "NA".to_string(), f);
    let text = format!(
        "solution {}\nstart-state value {:.4}\niterations {} converged {} residual {:.3e}\ndecay rate {} (rho^(1/m) {:.4})\nerror bound {}\n",
        a.out.display(),
        file.solution.values.get(start),
        r.iterations,
        r.converged,
        r.residual,
        opt(r.decay_rate, |x| format!("{x:.4}")),
        k.halting.1.powf(1.0 / k.halting.0 as f64),
        opt(r.error_bound, |x| format!("{x:.3e}")),
    );
    out.write_all(text.as_bytes()).map_err(Error::io("<stdout>"))?;
    if !r.converged {
        return Err(Error::NotConverged { iterations: r.iterations, residual: r.residual });
    }
    Ok(())
}

fn parse_count(s: &str) -> Result<Count> {
    s.split_once('-')
        .and_then(|(b, st)| Count::new(b.parse().ok()?, st.parse().ok()?).ok())
        .ok_or_else(|| Error::Usage(format!("count {s:?} is not of the form balls-strikes")))
}

fn parse_pair(s: &str) -> Result<(f64, f64)> {
    s.split_once('/')
        .and_then(|(b, r)| Some((b.trim().parse().ok()?, r.trim().parse().ok()?)))
        .filter(|&(b, r): &(f64, f64)| b > 0.0 && b < 1.0 && r > 0.0 && r < 1.0)
        .ok_or_else(|| Error::Usage(format!("player pair {s:?} is not battery/runner with quantiles in (0, 1)")))
}

fn tables(a: TablesArgs, out: &mut dyn Write) -> Result<()> {
    let f = load_solution(&a.solution)?;
    let fmt = Format::from(a.format);
    let mode = f.mode.name();
    let mut text = String::new();
    match a.by {
        Axis::Count => {
            if a.outs > 2 {
                return Err(Error::Usage("--outs must be 0, 1 or 2".into()));
            }
            text = by_count(&f.grid, &f.solution.runner, a.outs, &format!("{mode} lead (ft)"))?.render(&f.grid, fmt);
        }
        Axis::Outs => {
            let c = parse_count(&a.count)?;
            text = by_outs(&f.grid, &f.solution.runner, c, &format!("{mode} lead (ft)"))?.render(&f.grid, fmt);
        }
        Axis::Players => {
            let pairs = a.players.iter().map(|p| parse_pair(p)).collect::<Result<Vec<_>>>()?;
            let coeffs = a.coeffs.as_ref().ok_or_else(|| Error::Usage("player tables need --coeffs".into()))?;
            let ms = load_coefficients(coeffs)?;
            let rows = conditional_rows(&a.source, &mut Manifest::new("tables"))?;
            let opts = SolveOptions { tol: a.tol, ..SolveOptions::default() };
            for (i, (qb, qr)) in pairs.into_iter().enumerate() {
                let sol = solve_matchup(&ms, &rows, &f, qb, qr, &opts)?;
                let title = format!("{mode} lead (ft), battery q={qb}, runner q={qr}");
                let table = by_count(&f.grid, &sol.runner, a.outs, &title)?;
                if i > 0 && fmt == Format::Text {
                    text.push('\n');
                }
                let rendered = table.render(&f.grid, fmt);
                match fmt {
                    Format::Text => text.push_str(&rendered),
                    Format::Csv => {
                        for (j, line) in rendered.lines().enumerate() {
                            if j == 0 && i == 0 {
                                text.push_str(&format!("battery_q,runner_q,{line}\n"));
                            } else if j > 0 {
                                text.push_str(&format!("{qb},{qr},{line}\n"));
                            }
                        }
                    }
                }
            }
        }
    }
    out.write_all(text.as_bytes()).map_err(Error::io("<stdout>"))
}

fn solve_matchup(
    ms: &ModelSet,
    rows: &ConditionalRows,
    f: &SolutionFile,
    qb: f64,
    qr: f64,
    opts: &SolveOptions,
) -> Result<Solution> {
    let profile = percentile_profile(ms, ProfileRole::Battery, qb)?.merge(&percentile_profile(ms, ProfileRole::Runner, qr)?);
    let assembly = AssemblyOptions {
        grid: f.grid,
        matchup: Matchup::average().with_synthetic(profile),
        ..AssemblyOptions::new(f.mode)
    };
    let mut kernel = assemble_kernel(rows, ms, &assembly)?;
    kernel.game.certify(f.halting.0)?;
    let sol = match f.mode {
        KernelMode::TwoPlayer => solve(&kernel.game, opts)?,
        KernelMode::OnePlayer => solve_one_player(&kernel.game, opts)?,
    };
    if !sol.report.converged {
        return Err(Error::NotConverged { iterations: sol.report.iterations, residual: sol.report.residual });
    }
    Ok(sol)
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let (k, kernel_hash) = certified_kernel(&a.kernel, None)?;
    let g = &k.kernel.game;
    let start = GameState::START.index();
    let eval = SolveOptions { tol: 1e-13, max_iters: 1_000_000 };
    let mut m = Manifest::new("simulate");
    m.input(&a.kernel)?;
    m.config("innings", a.innings).config("seed", a.seed);
    let t = Instant::now();
    let (label, dp, mc) = match (&a.solution, a.policy) {
        (Some(path), None) => {
            m.input(path)?;
            let f = load_solution(path)?;
            if f.mode != k.kernel.mode || f.grid != k.kernel.grid {
                return Err(Error::Usage("solution and kernel differ in mode or lead grid".into()));
            }
            if f.kernel != kernel_hash {
                log::warn!("solution was computed on a different kernel; evaluating it on {}", a.kernel.display());
            }
            let (runner, pitcher) = (&f.solution.runner, &f.solution.pitcher);
            let (v, _) = evaluate_policy_pair(g, runner, pitcher, &eval)?;
            let mc = monte_carlo_value(g, start, RolloutPolicy::Pure(runner, pitcher), a.innings, a.seed)?;
            ("equilibrium", v.get(start), mc)
        }
        (None, Some(PolicyKind::Empirical)) => {
            if k.kernel.mode != KernelMode::OnePlayer {
                return Err(Error::Usage("the empirical policy is evaluated on a one-player kernel".into()));
            }
            let plays = a.plays.as_ref().ok_or_else(|| Error::Usage("--policy empirical needs --plays".into()))?;
            m.input(plays)?;
            let mut hist = LeadHistogram::new(k.kernel.grid);
            read_plays_file(plays, |r| {
                hist.add(&r);
                Ok(())
            })?;
            let runner = hist.policy()?;
            let pitcher = PitcherPolicy::first(g);
            let (v, _) = evaluate_mixed_runner(g, &runner, &pitcher, &eval)?;
            let mc = monte_carlo_value(g, start, RolloutPolicy::Mixed(&runner, &pitcher), a.innings, a.seed)?;
            ("empirical", v.get(start), mc)
        }
        _ => return Err(Error::Usage("give either --solution or --policy empirical".into())),
    };
    elapsed("simulate", t);
    let z = if mc.std_error > 0.0 { (mc.mean - dp) / mc.std_error } else { 0.0 };
    let agree = (mc.mean - dp).abs() <= 3.0 * mc.std_error;
    let mut report = format!(
        "policy {label}\nmode {}\ninnings {}\nseed {}\nmean {:.4} +/- {:.4}\ndp-value {:.4}\nz {:.2}\nagreement {}\ntruncated {}\nmax-plays {}\n",
        k.kernel.mode.name(),
        mc.innings,
        a.seed,
        mc.mean,
        mc.std_error,
        dp,
        z,
        if agree { "ok" } else { "DISAGREE (beyond 3 standard errors)" },
        mc.truncated,
        mc.max_plays,
    );
    if mc.halting_suspect {
        report.push_str("warning: truncation rate suggests the kernel barely halts\n");
    }
    if !agree {
        eprintln!("warning: Monte Carlo mean {:.4} and DP value {dp:.4} differ by {z:.2} standard errors", mc.mean);
    }
    if let Some(path) = &a.out {
        let hash = m.write_beside(path)?;
        write_file(path, &format!("manifest {hash}\n{report}"))?;
    }
    out.write_all(report.as_bytes()).map_err(Error::io("<stdout>"))
}

fn two_foot(a: TwoFootArgs, out: &mut dyn Write) -> Result<()> {
    let f = load_solution(&a.solution)?;
    let rep = two_foot_rule_report(&f.grid, &f.solution.runner)?;
    out.write_all(render_two_foot(&rep, &f.grid, a.format.into()).as_bytes()).map_err(Error::io("<stdout>"))
}

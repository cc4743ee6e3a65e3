//! `rankflow`: simulate, fit and report on stochastic ranking data.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rankflow::fit::{FitOptions, FitResult, DEFAULT_REGIME_GUARD};
use rankflow::io::{create_output, fmt_num, write_numeric_csv};
use rankflow::limit::{r_grid, SalesShareReport};
use rankflow::sim::SimulationSettings;
use rankflow::{oracle, Error, RankingTrajectory, SalesRateDistribution};

#[derive(Parser, Debug)]
#[command(name = "rankflow", version, about = "Stochastic ranking model: simulation, limit curves and Pareto fits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a finite-N simulation from a key=value config file
    Simulate(SimulateArgs),
    /// Fit (N, a, b) to a `t_hours,rank` trajectory
    Fit(FitArgs),
    /// Print t, y_C(t), x_C(t) for given parameters
    Eval(EvalArgs),
    /// Tabulate tail sales shares by true rate and by ranking
    Shares(SharesArgs),
    /// Summarize a fit result and tabulate its sales shares
    Report(ReportArgs),
    /// Independent quadrature and bisection evaluations
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum TimeUnit {
    Hours,
    Days,
    Months,
}

impl TimeUnit {
    /// Length of one unit in hours. A month is 30 days.
    fn hours(self) -> f64 {
        match self {
            TimeUnit::Hours => 1.0,
            TimeUnit::Days => 24.0,
            TimeUnit::Months => 720.0,
        }
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output files are written as `<prefix>_events.csv`, `<prefix>_trajectory.csv`, ...
    #[arg(long)]
    out_prefix: String,
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long, default_value_t = 2000)]
    max_iterations: usize,
    /// Weight residuals by 1/rank² instead of uniformly
    #[arg(long)]
    relative_weights: bool,
    #[arg(long, env = "RANKFLOW_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug, Clone)]
struct LawArgs {
    /// Scale of the rate law, per hour
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long)]
    b: Option<f64>,
    /// Upper cutoff parameter; 0 means none
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Use an empirical rate list (CSV with header `w`) instead of a Pareto law
    #[arg(long, conflicts_with_all = ["b", "gamma"])]
    rates: Option<PathBuf>,
}

impl LawArgs {
    fn distribution(&self) -> rankflow::Result<SalesRateDistribution> {
        if let Some(path) = &self.rates {
            return SalesRateDistribution::from_rates_csv(path);
        }
        let b = self.b.ok_or_else(|| Error::Config("either --b or --rates is required".into()))?;
        if self.gamma == 0.0 {
            SalesRateDistribution::pareto(self.a, b)
        } else {
            SalesRateDistribution::pareto_cutoff(self.a, b, self.gamma)
        }
    }
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    law: LawArgs,
    /// Number of catalogued titles
    #[arg(long)]
    n: u64,
    /// Evaluation times, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    t: Vec<f64>,
    /// Unit of the `--t` values; output stays in hours
    #[arg(long, value_enum, default_value_t = TimeUnit::Hours)]
    unit: TimeUnit,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Explicit r values, comma separated; overrides the start/stop/step grid
    #[arg(long, value_delimiter = ',')]
    r: Vec<f64>,
    #[arg(long, default_value_t = 0.01)]
    r_start: f64,
    #[arg(long, default_value_t = 1.0)]
    r_stop: f64,
    #[arg(long, default_value_t = 0.01)]
    r_step: f64,
}

impl GridArgs {
    fn values(&self) -> rankflow::Result<Vec<f64>> {
        if self.r.is_empty() {
            r_grid(self.r_start, self.r_stop, self.r_step)
        } else {
            Ok(self.r.clone())
        }
    }
}

#[derive(Args, Debug)]
struct SharesArgs {
    #[command(flatten)]
    law: LawArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// CSV destination; stdout when omitted
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// FitResult JSON written by `fit`
    #[arg(long)]
    fit: PathBuf,
    /// Shares CSV destination
    #[arg(long)]
    shares: Option<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
    /// Distance from b = 1 below which the regime is left undecided
    #[arg(long, default_value_t = DEFAULT_REGIME_GUARD)]
    guard: f64,
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand, Debug)]
enum OracleCommand {
    /// Γ(z, p) by quadrature
    #[command(allow_negative_numbers = true)]
    Gamma { z: f64, p: f64 },
    /// Laplace transform L(t) by quadrature
    Laplace {
        #[arg(value_enum)]
        family: Family,
        a: f64,
        b: f64,
        t: f64,
    },
    /// q(r) = a t₀(r) for the Pareto law, by bisection
    Q { b: f64, r: f64 },
    /// Ranking-based share S̃(r1, r2)/N for the Pareto law with a = 1
    Share { b: f64, r1: f64, r2: f64 },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Family {
    Pareto,
}

/// Failure carrying its exit status: 1 for input problems, 2 for numerical
/// non-convergence.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: 1, message: e.to_string() }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: 1, message: format!("I/O error on {}: {e}", path.display()) }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    // Usage errors are input errors; clap's own status 2 is reserved here
    // for non-convergence.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Fit(args) => cmd_fit(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Shares(args) => cmd_shares(&args),
        Command::Report(args) => cmd_report(&args),
        Command::Oracle(sub) => cmd_oracle(&sub),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("rankflow: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn finish(mut out: impl Write, path: &Path) -> CmdResult {
    out.flush().map_err(|e| io_failure(path, e))
}

fn cmd_simulate(args: &SimulateArgs) -> CmdResult {
    let text = std::fs::read_to_string(&args.config).map_err(|e| io_failure(&args.config, e))?;
    let settings = SimulationSettings::parse(&text, &args.config)?;
    let config = settings.to_config()?;

    let path = |suffix: &str| PathBuf::from(format!("{}_{suffix}", args.out_prefix));
    let mut targets = vec![path("trajectory.csv"), path("tracked.csv"), path("config.txt")];
    if settings.record_events {
        targets.push(path("events.csv"));
    }
    if settings.snapshots {
        targets.push(path("snapshots.csv"));
    }
    if !args.force {
        if let Some(existing) = targets.iter().find(|p| p.exists()) {
            return Err(Failure {
                code: 1,
                message: format!("{} exists; pass --force to overwrite", existing.display()),
            });
        }
    }

    let run = rankflow::run_simulation(&config)?;

    let p = path("trajectory.csv");
    let mut out = create_output(&p, args.force)?;
    run.boundary_trajectory().write_csv(&mut out)?;
    finish(out, &p)?;

    let p = path("tracked.csv");
    let mut out = create_output(&p, args.force)?;
    let tracked = config.track_item.expect("settings always track an item");
    run.x_c_trajectory(tracked)?.write_csv(&mut out)?;
    finish(out, &p)?;

    let p = path("config.txt");
    let mut out = create_output(&p, args.force)?;
    out.write_all(settings.to_kv().as_bytes()).map_err(|e| io_failure(&p, e))?;
    finish(out, &p)?;

    if settings.record_events {
        let p = path("events.csv");
        let mut out = create_output(&p, args.force)?;
        run.write_events_csv(&mut out)?;
        finish(out, &p)?;
    }
    if settings.snapshots {
        let p = path("snapshots.csv");
        let mut out = create_output(&p, args.force)?;
        let rates = &run.rates;
        let rows = run.snapshots.iter().flat_map(|s| {
            s.ranks.iter().enumerate().map(move |(i, &rank)| vec![s.t, (i + 1) as f64, rates[i], rank as f64])
        });
        write_numeric_csv(&mut out, &["t", "item", "w", "rank"], rows)?;
        finish(out, &p)?;
    }
    eprintln!(
        "simulated {} items to t = {} h: {} sales, generator {} seed {}",
        run.n_items(),
        fmt_num(config.horizon),
        run.n_events,
        run.generator,
        run.seed
    );
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> CmdResult {
    let traj = RankingTrajectory::read_csv(&args.input)?;
    let options = FitOptions {
        tolerance: args.tolerance,
        max_iterations: args.max_iterations,
        relative_weights: args.relative_weights,
        threads: args.threads,
        ..FitOptions::default()
    };
    let result = rankflow::fit_pareto(&traj, &options)?;
    let mut out = create_output(&args.output, args.force)?;
    result.write_json(&mut out)?;
    finish(out, &args.output)?;
    eprintln!(
        "N* = {}  a* = {} /h  b* = {}  chi2/n_d = {}",
        fmt_num(result.n_star),
        fmt_num(result.a_star),
        fmt_num(result.b_star),
        fmt_num(result.chi2 / traj.n_d() as f64)
    );
    if result.converged {
        Ok(())
    } else {
        Err(Failure {
            code: 2,
            message: format!("fit did not converge; best result written to {}", args.output.display()),
        })
    }
}

fn cmd_eval(args: &EvalArgs) -> CmdResult {
    let dist = args.law.distribution()?;
    let mut rows = Vec::with_capacity(args.t.len());
    for &t in &args.t {
        let hours = t * args.unit.hours();
        rows.push(vec![hours, rankflow::y_c(&dist, hours)?, rankflow::x_c(&dist, hours, args.n)?]);
    }
    let stdout = std::io::stdout().lock();
    write_numeric_csv(stdout, &["t_hours", "y_C", "x_C"], rows)?;
    Ok(())
}

fn write_shares(report: &SalesShareReport, output: Option<&Path>, force: bool) -> CmdResult {
    match output {
        Some(path) => {
            let mut out = create_output(path, force)?;
            report.write_csv(&mut out)?;
            finish(out, path)
        }
        None => Ok(report.write_csv(std::io::stdout().lock())?),
    }
}

/// Share of the top-r head in total sales, when the total is finite.
fn head_share(dist: &SalesRateDistribution, r: f64) -> Option<f64> {
    let total = rankflow::sales_share_potential(dist, 0.0, 1.0).ok()?;
    let tail = if r >= 1.0 { 0.0 } else { rankflow::sales_share_potential(dist, r, 1.0).ok()? };
    Some(1.0 - tail / total)
}

fn cmd_shares(args: &SharesArgs) -> CmdResult {
    let dist = args.law.distribution()?;
    let report = SalesShareReport::tail_shares(&dist, &args.grid.values()?)?;
    write_shares(&report, args.output.as_deref(), args.force)?;
    for row in &report.rows {
        if let Some(h) = head_share(&dist, row.r) {
            eprintln!("r = {}: head share S(0,r)/S_tot = {}", fmt_num(row.r), fmt_num(h));
        }
    }
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> CmdResult {
    let fit = FitResult::read_json(&args.fit)?;
    if !fit.converged {
        return Err(Failure { code: 2, message: format!("{}: fit did not converge", args.fit.display()) });
    }
    println!("N* = {}", fmt_num(fit.n_star));
    println!(
        "a* = {} /hour = {} /day = {} /month",
        fmt_num(fit.a_star),
        fmt_num(fit.a_star * TimeUnit::Days.hours()),
        fmt_num(fit.a_star * TimeUnit::Months.hours())
    );
    println!("b* = {}", fmt_num(fit.b_star));
    println!("delta y_C = {}", fmt_num(fit.delta_y_c));
    match rankflow::classify_regime(&fit, args.guard) {
        Ok(assessment) => {
            println!("regime = {:?}", assessment.regime);
            println!("short-time shape = {:?}", assessment.short_time);
        }
        Err(Error::Indeterminate { .. }) => println!("regime = indeterminate (|b* - 1| < {})", fmt_num(args.guard)),
        Err(e) => return Err(e.into()),
    }
    let dist = SalesRateDistribution::pareto(fit.a_star, fit.b_star)?;
    match rankflow::sales_share_potential(&dist, 0.0, 1.0) {
        Ok(total) => println!("S_tot/N = {} /hour", fmt_num(total)),
        Err(Error::Divergent(_)) => println!("S_tot/N diverges without an upper cutoff"),
        Err(e) => return Err(e.into()),
    }
    if let Some(path) = &args.shares {
        let report = SalesShareReport::tail_shares(&dist, &args.grid.values()?)?;
        write_shares(&report, Some(path), args.force)?;
    }
    Ok(())
}

fn cmd_oracle(sub: &OracleCommand) -> CmdResult {
    let est = match *sub {
        OracleCommand::Gamma { z, p } => {
            if !(p > 0.0 && z.is_finite()) {
                return Err(Error::Domain(format!("need finite z and p > 0, got z = {z}, p = {p}")).into());
            }
            oracle::upper_gamma_quadrature(z, p)
        }
        OracleCommand::Laplace { family: Family::Pareto, a, b, t } => {
            SalesRateDistribution::pareto(a, b)?;
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Domain(format!("t must be finite and non-negative, got {t}")).into());
            }
            oracle::pareto_laplace_quadrature(a, b, t)
        }
        OracleCommand::Q { b, r } => {
            SalesRateDistribution::pareto(1.0, b)?;
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::Domain(format!("r must lie in (0, 1), got {r}")).into());
            }
            oracle::pareto_q_bisection(b, r)
        }
        OracleCommand::Share { b, r1, r2 } => {
            SalesRateDistribution::pareto(1.0, b)?;
            if !(0.0 <= r1 && r1 < r2 && r2 <= 1.0) {
                return Err(Error::Domain(format!("need 0 <= r1 < r2 <= 1, got {r1}, {r2}")).into());
            }
            oracle::pareto_ranking_share_quadrature(b, r1, r2)
        }
    };
    println!("value = {}", fmt_num(est.value));
    println!("error <= {}", fmt_num(est.error));
    Ok(())
}

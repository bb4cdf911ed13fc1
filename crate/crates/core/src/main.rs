//! Command-line front end for the count-chart toolkit.
//!
//! Subcommands mirror the library layers: `simulate` and `table` estimate
//! run lengths, `calibrate` solves for a limit multiplier, `fit` and
//! `disptest` analyze observed counts, and `monitor` runs the two-phase
//! chart on a data file. All tabular output is CSV with four-decimal floats;
//! anything diagnostic goes to stderr.

use clap::{ArgGroup, Parser, Subcommand};
use countspc::calibrate::{calibrate_l, CalibrationSpec};
use countspc::chart::{compute_limits, ChartConfig};
use countspc::data::{ingest_counts, read_grid, write_arl_table, ARL_TABLE_HEADER};
use countspc::dispersion::dispersion_report;
use countspc::dist::{Family, ZinbParams};
use countspc::fit::{fit as fit_family, select_model, FitResult};
use countspc::monitor::{
    build_arl_table, monitor, ArlTableRow, LimitChoice, MonitorOptions, TableSpec,
};
use countspc::plot::{render_arl_curves, render_chart};
use countspc::runlength::{estimate_arl, SimulationJob};
use countspc::Result;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "countspc",
    version,
    about = "EWMA and Shewhart control charts for zero-inflated, overdispersed counts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the run-length distribution of one chart configuration.
    Simulate(SimulateArgs),
    /// Solve for the limit multiplier L that hits a target in-control ARL.
    Calibrate(CalibrateArgs),
    /// Fit count models to a data file and rank them by BIC.
    Fit(FitArgs),
    /// Run overdispersion diagnostics on a data file.
    Disptest(DisptestArgs),
    /// Phase-I estimation plus Phase-II chart monitoring of a data file.
    Monitor(MonitorArgs),
    /// Evaluate a grid of shifts into an ARL table CSV.
    Table(TableArgs),
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// In-control shape k of the count distribution
    #[arg(long)]
    k: f64,
    /// In-control success probability p
    #[arg(long)]
    p: f64,
    /// In-control zero-inflation probability theta
    #[arg(long)]
    theta: f64,
    /// Smoothing weight; 1 gives the Shewhart chart
    #[arg(long)]
    lambda: f64,
    /// Control limit multiplier
    #[arg(long = "L")]
    l: f64,
    /// Subgroup size
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Monte Carlo replications
    #[arg(long, default_value_t = 10_000)]
    reps: u32,
    /// Master seed for the replication streams
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Shifted p of the true process (defaults to the in-control p)
    #[arg(long = "shift-p")]
    shift_p: Option<f64>,
    /// Shifted theta of the true process
    #[arg(long = "shift-theta")]
    shift_theta: Option<f64>,
    /// Shifted k of the true process
    #[arg(long = "shift-k")]
    shift_k: Option<f64>,
}

#[derive(clap::Args)]
struct CalibrateArgs {
    #[arg(long)]
    k: f64,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    theta: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// In-control ARL to hit
    #[arg(long = "target-arl0")]
    target_arl0: f64,
    /// Acceptance band on |ARL - target|; default max(0.5, 1% of target)
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    reps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(clap::Args)]
struct FitArgs {
    /// CSV or plain file with one count per row
    #[arg(long)]
    data: PathBuf,
    /// Column name when the file has several columns
    #[arg(long)]
    column: Option<String>,
    /// all, poisson, nb, zip, or zinb
    #[arg(long, default_value = "all")]
    family: String,
}

#[derive(clap::Args)]
struct DisptestArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    column: Option<String>,
}

#[derive(clap::Args)]
#[command(group(ArgGroup::new("limit").required(true).args(["l", "target_arl0"])))]
struct MonitorArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    column: Option<String>,
    /// Number of leading observations used to estimate the in-control model
    #[arg(long = "phase1-end")]
    phase1_end: usize,
    #[arg(long)]
    lambda: f64,
    /// Fixed limit multiplier
    #[arg(long = "L")]
    l: Option<f64>,
    /// Calibrate the multiplier against this in-control ARL instead
    #[arg(long = "target-arl0")]
    target_arl0: Option<f64>,
    /// Family for the Phase-I fit; default selects by BIC
    #[arg(long, default_value = "all")]
    family: String,
    #[arg(long, default_value_t = 10_000)]
    reps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restart the statistic from the center line at the phase boundary
    #[arg(long, default_value_t = false)]
    reset_phase2: bool,
    /// Write the chart as SVG to this path
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(clap::Args)]
struct TableArgs {
    /// Grid CSV with header lambda,L,p1,theta1,k1
    #[arg(long)]
    grid: PathBuf,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    k: f64,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    theta: f64,
    #[arg(long, default_value_t = 1)]
    n: u32,
    #[arg(long, default_value_t = 10_000)]
    reps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also render ARL curves as SVG to this path
    #[arg(long)]
    plot: Option<PathBuf>,
}

fn parse_family(name: &str) -> Result<Option<Family>> {
    if name.eq_ignore_ascii_case("all") {
        return Ok(None);
    }
    name.parse().map(Some)
}

fn opt4(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

fn join_indices(ix: &[usize]) -> String {
    ix.iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn run_simulate(a: SimulateArgs) -> Result<()> {
    let ic = ZinbParams::new(a.k, a.p, a.theta)?;
    let truth = ZinbParams::new(
        a.shift_k.unwrap_or(a.k),
        a.shift_p.unwrap_or(a.p),
        a.shift_theta.unwrap_or(a.theta),
    )?;
    let chart = ChartConfig::new(a.lambda, a.l, a.n, ic)?;
    let limits = compute_limits(&chart);
    let job = SimulationJob::new(chart, truth, a.reps, a.seed)?;
    let s = estimate_arl(&job);
    if s.censored > 0 {
        eprintln!(
            "warning: {} of {} replications ran past {} periods without a signal and were \
             censored; the ARL is an underestimate",
            s.censored, s.reps, s.max_rl
        );
    }
    let row = ArlTableRow {
        lambda: a.lambda,
        l: a.l,
        ucl: limits.ucl,
        p1: truth.p(),
        theta1: truth.theta(),
        k1: truth.k(),
        arl: s.arl,
        sdrl: s.sdrl,
        se: s.se_arl,
    };
    write_arl_table(&[row], std::io::stdout().lock())
}

fn run_calibrate(a: CalibrateArgs) -> Result<()> {
    let params = ZinbParams::new(a.k, a.p, a.theta)?;
    let mut spec = CalibrationSpec::new(a.lambda, a.n, params, a.target_arl0)?;
    if let Some(tol) = a.tol {
        spec.tol_arl = tol;
    }
    spec.reps = a.reps;
    spec.master_seed = a.seed;
    // the Shewhart chart on single observations has a closed-form ARL
    spec.use_exact_shewhart = a.lambda == 1.0 && a.n == 1;
    let r = calibrate_l(&spec)?;
    let ucl = compute_limits(&ChartConfig::new(a.lambda, r.l_star, a.n, params)?).ucl;
    println!(
        "lambda,L,ucl,target_arl0,achieved_arl,achieved_sdrl,evaluations,\
         plateau_l_below,plateau_arl_below,plateau_l_above,plateau_arl_above"
    );
    println!(
        "{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{},{},{},{},{}",
        a.lambda,
        r.l_star,
        ucl,
        a.target_arl0,
        r.achieved_arl,
        r.achieved_sdrl,
        r.evaluations,
        opt4(r.plateau.map(|p| p.l_below)),
        opt4(r.plateau.map(|p| p.arl_below)),
        opt4(r.plateau.map(|p| p.l_above)),
        opt4(r.plateau.map(|p| p.arl_above)),
    );
    if let Some(p) = r.plateau {
        eprintln!(
            "note: the target {} sits between achievable in-control ARLs {:.2} and {:.2}; \
             the reported L gives the nearer one",
            a.target_arl0, p.arl_below, p.arl_above
        );
    }
    Ok(())
}

const FIT_HEADER: &str = "family,loglik,bic,mean,mean_lo,mean_hi,k,theta,p_hat";

fn fit_row(r: &FitResult) -> String {
    format!(
        "{},{:.4},{:.4},{:.4},{},{},{},{:.4},{}",
        r.model.family(),
        r.loglik,
        r.bic,
        r.mean_hat,
        opt4(r.mean_ci.map(|c| c.0)),
        opt4(r.mean_ci.map(|c| c.1)),
        opt4(r.model.k()),
        r.model.theta(),
        opt4(r.p_hat),
    )
}

fn run_fit(a: FitArgs) -> Result<()> {
    let counts = ingest_counts(&a.data, a.column.as_deref())?;
    let results = match parse_family(&a.family)? {
        Some(family) => vec![fit_family(family, &counts)?],
        None => {
            let sel = select_model(&counts, &Family::ALL)?;
            for note in &sel.failed {
                eprintln!("warning: {note}");
            }
            sel.ranked
        }
    };
    println!("{FIT_HEADER}");
    for r in &results {
        for w in &r.warnings {
            eprintln!("warning: {} fit: {w}", r.model.family());
        }
        println!("{}", fit_row(r));
    }
    Ok(())
}

fn run_disptest(a: DisptestArgs) -> Result<()> {
    let counts = ingest_counts(&a.data, a.column.as_deref())?;
    let r = dispersion_report(&counts)?;
    println!(
        "mean,variance,cv,c_hat,t_stat,p_value_auxiliary,lr_stat,p_value_lr,nb_shape,\
         dispersion_param"
    );
    println!(
        "{:.4},{:.4},{},{:.4},{:.4},{:.4e},{:.4},{:.4e},{:.4},{:.4}",
        r.naive.mean,
        r.naive.variance,
        opt4(r.naive.cv),
        r.auxiliary.c_hat,
        r.auxiliary.t_stat,
        r.auxiliary.p_two_sided,
        r.lr.lr_stat,
        r.lr.p_value,
        r.lr.shape,
        r.lr.dispersion_param,
    );
    Ok(())
}

fn run_monitor(a: MonitorArgs) -> Result<()> {
    let counts = ingest_counts(&a.data, a.column.as_deref())?;
    let limit = match (a.l, a.target_arl0) {
        (Some(l), None) => LimitChoice::Multiplier(l),
        (None, Some(t)) => LimitChoice::TargetArl0(t),
        _ => unreachable!("clap enforces exactly one of --L and --target-arl0"),
    };
    let opts = MonitorOptions {
        lambda: a.lambda,
        limit,
        family: parse_family(&a.family)?,
        seed: a.seed,
        reps: a.reps,
        reset_at_phase2: a.reset_phase2,
    };
    let run = monitor(&counts, a.phase1_end, &opts)?;
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    println!("family,lambda,L,ucl,cl,lcl,phase1_end,n_obs,phase1_ooc,phase2_ooc");
    println!(
        "{},{:.4},{:.4},{:.4},{:.4},{:.4},{},{},{},{}",
        run.fit.model.family(),
        run.config.lambda,
        run.config.l,
        run.limits.ucl,
        run.limits.cl,
        run.limits.lcl,
        run.phase1_end,
        run.points.len(),
        join_indices(&run.phase1_ooc),
        join_indices(&run.ooc_indices),
    );
    if let Some(path) = &a.plot {
        render_chart(&run, path)?;
        eprintln!("chart written to {}", path.display());
    }
    Ok(())
}

fn run_table(a: TableArgs) -> Result<()> {
    let ic = ZinbParams::new(a.k, a.p, a.theta)?;
    let grid = read_grid(&a.grid)?;
    let spec = TableSpec::new(ic, a.n, a.reps, a.seed);
    let rows = build_arl_table(&grid, &spec)?;
    let file = std::fs::File::create(&a.out)?;
    write_arl_table(&rows, std::io::BufWriter::new(file))?;
    eprintln!(
        "{} rows ({}) written to {}",
        rows.len(),
        ARL_TABLE_HEADER,
        a.out.display()
    );
    if let Some(path) = &a.plot {
        render_arl_curves(&rows, path)?;
        eprintln!("curves written to {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Calibrate(a) => run_calibrate(a),
        Command::Fit(a) => run_fit(a),
        Command::Disptest(a) => run_disptest(a),
        Command::Monitor(a) => run_monitor(a),
        Command::Table(a) => run_table(a),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

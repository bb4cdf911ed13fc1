//! Two-phase monitoring of an observed count stream and ARL table assembly.
//!
//! Phase I estimates the in-control model from a leading slice of the data;
//! Phase II applies the chart to the remainder. The EWMA statistic runs as
//! one continuous path across the phase boundary, starting from the center
//! line, and signals inside Phase I are reported separately so the Phase-II
//! out-of-control list stays comparable across parameter choices.

use crate::calibrate::{calibrate_l, CalibrationSpec};
use crate::chart::{compute_limits, ewma_step, signals, ChartConfig, ControlLimits, EwmaState};
use crate::data::GridRow;
use crate::dist::{Family, ZinbParams};
use crate::error::{Error, Result};
use crate::fit::{fit, select_model, FitResult};
use crate::runlength::{estimate_arl, SimulationJob, DEFAULT_REPS};

/// Fewer Phase-I observations than this is flagged as thin for estimation.
pub const PHASE1_WARN_THRESHOLD: usize = 30;

/// One plotted observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartPoint {
    /// 1-based position in the input stream.
    pub index: usize,
    pub ybar: f64,
    pub z: f64,
    pub signal: bool,
}

/// A complete monitoring pass over one data stream.
#[derive(Debug, Clone)]
pub struct MonitoringRun {
    pub phase1_end: usize,
    pub config: ChartConfig,
    pub limits: ControlLimits,
    pub points: Vec<ChartPoint>,
    /// Signals after the Phase-I boundary, 1-based.
    pub ooc_indices: Vec<usize>,
    /// Signals inside Phase I, reported separately.
    pub phase1_ooc: Vec<usize>,
    pub fit: FitResult,
    pub warnings: Vec<String>,
}

/// How the limit multiplier is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitChoice {
    /// Use this L directly.
    Multiplier(f64),
    /// Calibrate L against this in-control ARL using the fitted model.
    TargetArl0(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct MonitorOptions {
    pub lambda: f64,
    pub limit: LimitChoice,
    /// Family to fit on Phase I; None selects by BIC across all four.
    pub family: Option<Family>,
    /// Master seed for calibration Monte Carlo.
    pub seed: u64,
    /// Replications for calibration Monte Carlo.
    pub reps: u32,
    /// Restart the statistic from the center line at the phase boundary.
    /// Off by default: the chart is one continuous path.
    pub reset_at_phase2: bool,
}

impl MonitorOptions {
    pub fn new(lambda: f64, limit: LimitChoice) -> Self {
        Self {
            lambda,
            limit,
            family: None,
            seed: 0,
            reps: DEFAULT_REPS,
            reset_at_phase2: false,
        }
    }
}

fn fit_phase1(data: &[u64], family: Option<Family>, warnings: &mut Vec<String>) -> Result<FitResult> {
    match family {
        Some(f) => fit(f, data),
        None => {
            let selection = select_model(data, &Family::ALL)?;
            for note in &selection.failed {
                warnings.push(format!("model selection skipped a family: {note}"));
            }
            Ok(selection.ranked.into_iter().next().expect("nonempty ranking"))
        }
    }
}

/// Run the full Phase-I/Phase-II monitoring flow on a count stream.
pub fn monitor(data: &[u64], phase1_end: usize, opts: &MonitorOptions) -> Result<MonitoringRun> {
    if phase1_end == 0 || phase1_end >= data.len() {
        return Err(Error::Data(format!(
            "phase 1 must end strictly inside the data: got {} of {} observations",
            phase1_end,
            data.len()
        )));
    }
    let mut warnings = Vec::new();
    if phase1_end < PHASE1_WARN_THRESHOLD {
        warnings.push(format!(
            "only {phase1_end} Phase-I observations; parameter estimates will be noisy"
        ));
    }

    let phase1_fit = fit_phase1(&data[..phase1_end], opts.family, &mut warnings)?;
    for w in &phase1_fit.warnings {
        warnings.push(format!("{} fit: {w}", phase1_fit.model.family()));
    }
    let params = phase1_fit.model.to_zinb()?;

    let l = match opts.limit {
        LimitChoice::Multiplier(l) => l,
        LimitChoice::TargetArl0(target) => {
            let mut spec = CalibrationSpec::new(opts.lambda, 1, params, target)?;
            spec.reps = opts.reps;
            spec.master_seed = opts.seed;
            // a Shewhart chart on single observations has an exact oracle
            spec.use_exact_shewhart = opts.lambda == 1.0;
            let cal = calibrate_l(&spec)?;
            if let Some(p) = cal.plateau {
                warnings.push(format!(
                    "target ARL {target} is not attainable exactly: achievable neighbors are \
                     {:.1} (L = {:.4}) and {:.1} (L = {:.4}); using L = {:.4}",
                    p.arl_below, p.l_below, p.arl_above, p.l_above, cal.l_star
                ));
            }
            cal.l_star
        }
    };

    let config = ChartConfig::new(opts.lambda, l, 1, params)?;
    let limits = compute_limits(&config);

    let mut points = Vec::with_capacity(data.len());
    let mut ooc_indices = Vec::new();
    let mut phase1_ooc = Vec::new();
    let mut state = EwmaState::at_center(&limits);
    for (i, &y) in data.iter().enumerate() {
        if opts.reset_at_phase2 && i == phase1_end {
            state = EwmaState::at_center(&limits);
        }
        state = ewma_step(state, y as f64, opts.lambda);
        let signal = signals(&state, &limits);
        let index = i + 1;
        points.push(ChartPoint {
            index,
            ybar: y as f64,
            z: state.z,
            signal,
        });
        if signal {
            if index > phase1_end {
                ooc_indices.push(index);
            } else {
                phase1_ooc.push(index);
            }
        }
    }

    Ok(MonitoringRun {
        phase1_end,
        config,
        limits,
        points,
        ooc_indices,
        phase1_ooc,
        fit: phase1_fit,
        warnings,
    })
}

/// One evaluated cell of an ARL table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArlTableRow {
    pub lambda: f64,
    pub l: f64,
    pub ucl: f64,
    pub p1: f64,
    pub theta1: f64,
    pub k1: f64,
    pub arl: f64,
    pub sdrl: f64,
    pub se: f64,
}

/// Common settings for every cell of an ARL table.
#[derive(Debug, Clone, Copy)]
pub struct TableSpec {
    /// In-control process the limits are computed from.
    pub ic: ZinbParams,
    pub n: u32,
    pub reps: u32,
    pub master_seed: u64,
    pub max_rl: u64,
}

impl TableSpec {
    pub fn new(ic: ZinbParams, n: u32, reps: u32, master_seed: u64) -> Self {
        Self {
            ic,
            n,
            reps,
            master_seed,
            max_rl: crate::runlength::DEFAULT_MAX_RL,
        }
    }
}

/// Seed for one grid cell: the first cell uses the master seed unchanged, so
/// a single-cell table equals a direct run-length estimate.
fn cell_seed(master: u64, index: usize) -> u64 {
    master ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Estimate every cell of a shift grid. Deterministic given the master seed;
/// cells are evaluated in order, each one parallel internally.
pub fn build_arl_table(grid: &[GridRow], spec: &TableSpec) -> Result<Vec<ArlTableRow>> {
    let mut rows = Vec::with_capacity(grid.len());
    for (i, cell) in grid.iter().enumerate() {
        let chart = ChartConfig::new(cell.lambda, cell.l, spec.n, spec.ic)?;
        let truth = ZinbParams::new(cell.k1, cell.p1, cell.theta1)?;
        let mut job = SimulationJob::new(chart, truth, spec.reps, cell_seed(spec.master_seed, i))?;
        job.max_rl = spec.max_rl;
        let limits = compute_limits(&chart);
        let summary = estimate_arl(&job);
        rows.push(ArlTableRow {
            lambda: cell.lambda,
            l: cell.l,
            ucl: limits.ucl,
            p1: cell.p1,
            theta1: cell.theta1,
            k1: cell.k1,
            arl: summary.arl,
            sdrl: summary.sdrl,
            se: summary.se_arl,
        });
    }
    Ok(rows)
}

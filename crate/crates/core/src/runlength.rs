//! Monte Carlo run-length estimation with reproducible parallel replication.
//!
//! Every replication owns a counter-derived random stream: the generator is
//! keyed by the master seed and positioned on stream number `replication`.
//! The reduction over replications is an ordered sequential fold of the
//! collected results, so the estimate is bit-identical for a fixed master
//! seed no matter how many worker threads participate or how the scheduler
//! interleaves them.

use crate::chart::{compute_limits, ChartConfig, ControlLimits};
use crate::dist::ZinbParams;
use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// One ARL estimation task: a chart (fixing the limits through its in-control
/// parameters) and the data-generating truth, possibly shifted away from it.
#[derive(Debug, Clone, Copy)]
pub struct SimulationJob {
    pub chart: ChartConfig,
    pub truth: ZinbParams,
    pub reps: u32,
    pub max_rl: u64,
    pub master_seed: u64,
}

/// Conventional replication count; large enough that the ARL standard error
/// is about 1% of the ARL for geometric-like run lengths.
pub const DEFAULT_REPS: u32 = 10_000;

/// Cap on a single run length. A chart whose limit exceeds every reachable
/// statistic value would otherwise never terminate; hitting the cap is
/// reported as censoring, not silently dropped.
pub const DEFAULT_MAX_RL: u64 = 1_000_000;

impl SimulationJob {
    pub fn new(chart: ChartConfig, truth: ZinbParams, reps: u32, master_seed: u64) -> Result<Self> {
        if reps == 0 {
            return Err(Error::InvalidParameter(
                "replication count must be at least 1".into(),
            ));
        }
        Ok(Self {
            chart,
            truth,
            reps,
            max_rl: DEFAULT_MAX_RL,
            master_seed,
        })
    }

    /// The independent random stream for one replication.
    pub fn replication_rng(&self, replication: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(replication);
        rng
    }
}

/// Monte Carlo summary of the run-length distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunLengthSummary {
    /// Mean run length.
    pub arl: f64,
    /// Sample standard deviation of the run lengths.
    pub sdrl: f64,
    /// Standard error of the ARL estimate, sdrl / sqrt(reps).
    pub se_arl: f64,
    pub reps: u32,
    /// Replications that hit the cap without signaling.
    pub censored: u32,
    pub max_rl: u64,
}

/// Run one replication: draw subgroups from `truth`, feed their means through
/// the EWMA recursion started at the center line, and return the first
/// 1-based period whose statistic exceeds the upper limit. The flag is true
/// when the cap was reached without a signal.
pub fn simulate_run_length(
    job: &SimulationJob,
    limits: &ControlLimits,
    replication: u64,
) -> (u64, bool) {
    let mut rng = job.replication_rng(replication);
    let lambda = job.chart.lambda;
    let n = job.chart.n;
    let mut z = limits.cl;
    for t in 1..=job.max_rl {
        let mut sum = 0u64;
        for _ in 0..n {
            sum += job.truth.sample(&mut rng);
        }
        z = lambda * (sum as f64 / n as f64) + (1.0 - lambda) * z;
        if z > limits.ucl {
            return (t, false);
        }
    }
    (job.max_rl, true)
}

/// Estimate ARL and SDRL over `job.reps` independent replications.
///
/// Replications are distributed across the rayon pool; the summary is reduced
/// sequentially in replication order afterwards.
pub fn estimate_arl(job: &SimulationJob) -> RunLengthSummary {
    let limits = compute_limits(&job.chart);
    let lengths: Vec<(u64, bool)> = (0..job.reps as u64)
        .into_par_iter()
        .map(|r| simulate_run_length(job, &limits, r))
        .collect();

    let reps = job.reps as f64;
    let censored = lengths.iter().filter(|(_, c)| *c).count() as u32;
    let mean = lengths.iter().map(|(rl, _)| *rl as f64).sum::<f64>() / reps;
    let ss = lengths
        .iter()
        .map(|(rl, _)| {
            let d = *rl as f64 - mean;
            d * d
        })
        .sum::<f64>();
    let sdrl = if job.reps > 1 {
        (ss / (reps - 1.0)).sqrt()
    } else {
        0.0
    };
    RunLengthSummary {
        arl: mean,
        sdrl,
        se_arl: sdrl / reps.sqrt(),
        reps: job.reps,
        censored,
        max_rl: job.max_rl,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibrate::shewhart_arl_exact;
    use crate::chart::ChartConfig;

    fn table_one_shewhart() -> SimulationJob {
        let p = ZinbParams::new(1.0, 0.4, 0.85).unwrap();
        let chart = ChartConfig::new(1.0, 8.435, 1, p).unwrap();
        SimulationJob::new(chart, p, DEFAULT_REPS, 42).unwrap()
    }

    #[test]
    fn shewhart_mc_agrees_with_geometric_oracle() {
        let job = table_one_shewhart();
        let s = estimate_arl(&job);
        let oracle = shewhart_arl_exact(&job.truth, compute_limits(&job.chart).ucl);
        assert!(
            (s.arl - oracle).abs() < 4.0 * s.se_arl,
            "arl {} oracle {oracle} se {}",
            s.arl,
            s.se_arl
        );
        // geometric run lengths have SD close to the mean
        assert!((s.sdrl - s.arl).abs() / s.arl < 0.1);
        assert_eq!(s.censored, 0);
        assert!(s.arl >= 1.0);
    }

    #[test]
    fn identical_seeds_are_bit_identical_across_thread_counts() {
        let job = table_one_shewhart();
        let pool1 = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = pool1.install(|| estimate_arl(&job));
        let b = pool4.install(|| estimate_arl(&job));
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ() {
        let mut job = table_one_shewhart();
        let a = estimate_arl(&job);
        job.master_seed = 43;
        let b = estimate_arl(&job);
        assert_ne!(a.arl, b.arl);
    }

    #[test]
    fn unreachable_limit_censors_at_cap() {
        let p = ZinbParams::new(1.0, 0.4, 0.999999).unwrap();
        let chart = ChartConfig::new(0.2, 50.0, 1, ZinbParams::new(1.0, 0.4, 0.85).unwrap())
            .unwrap();
        let mut job = SimulationJob::new(chart, p, 8, 7).unwrap();
        job.max_rl = 500;
        let s = estimate_arl(&job);
        assert_eq!(s.censored, 8);
        assert_eq!(s.arl, 500.0);
    }

    #[test]
    fn arl_shrinks_as_p_shifts_down() {
        // smaller p means a larger process mean, so signals come sooner
        let p0 = ZinbParams::new(1.0, 0.4, 0.85).unwrap();
        let chart = ChartConfig::new(0.25, 5.814, 1, p0).unwrap();
        let mut arls = Vec::new();
        for p1 in [0.40, 0.38, 0.35, 0.33] {
            let truth = ZinbParams::new(1.0, p1, 0.85).unwrap();
            let mut job = SimulationJob::new(chart, truth, 3_000, 9).unwrap();
            job.max_rl = 200_000;
            arls.push(estimate_arl(&job).arl);
        }
        assert!(
            arls.windows(2).all(|w| w[0] > w[1]),
            "expected strictly decreasing ARLs, got {arls:?}"
        );
    }
}

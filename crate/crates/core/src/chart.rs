//! EWMA and Shewhart monitoring statistics with asymptotic control limits.
//!
//! The monitored statistic follows Z_i = lambda * Ybar_i + (1 - lambda) *
//! Z_{i-1}, started at the center line. Setting lambda = 1 turns the chart
//! into the memoryless Shewhart chart, where each subgroup mean is judged on
//! its own. Only the upper limit can trigger a signal: the statistic is a
//! smoothed average of nonnegative counts, so downward excursions carry no
//! out-of-control meaning here.

use crate::dist::ZinbParams;
use crate::error::{Error, Result};

/// Chart design: smoothing factor, limit multiplier, subgroup size, and the
/// in-control process parameters the limits are computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartConfig {
    pub lambda: f64,
    pub l: f64,
    pub n: u32,
    pub params: ZinbParams,
}

impl ChartConfig {
    pub fn new(lambda: f64, l: f64, n: u32, params: ZinbParams) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.0 || lambda > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "smoothing factor lambda must lie in (0, 1], got {lambda}"
            )));
        }
        if !l.is_finite() || l <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "limit multiplier L must be positive, got {l}"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidParameter(
                "subgroup size n must be at least 1".into(),
            ));
        }
        Ok(Self { lambda, l, n, params })
    }

    /// True when the chart is the memoryless Shewhart special case.
    pub fn is_shewhart(&self) -> bool {
        self.lambda == 1.0
    }
}

/// Control limits in units of the subgroup mean. The lower limit is clamped
/// at zero and never triggers a signal; it is kept for display.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlLimits {
    pub ucl: f64,
    pub cl: f64,
    pub lcl: f64,
}

/// Center line and steady-state limits for the configured chart.
///
/// The half width is L * sqrt(lambda * Var(Y) / (n * (2 - lambda))), the
/// asymptotic EWMA variance of subgroup means; with lambda = 1 it reduces to
/// L * sqrt(Var(Y) / n).
pub fn compute_limits(config: &ChartConfig) -> ControlLimits {
    let cl = config.params.mean();
    let var = config.params.variance();
    let width =
        config.l * (config.lambda * var / (config.n as f64 * (2.0 - config.lambda))).sqrt();
    ControlLimits {
        ucl: cl + width,
        cl,
        lcl: (cl - width).max(0.0),
    }
}

/// Current value of the monitoring statistic and the number of subgroups
/// absorbed so far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EwmaState {
    pub z: f64,
    pub t: u64,
}

impl EwmaState {
    /// Start the recursion at the center line.
    pub fn at_center(limits: &ControlLimits) -> Self {
        Self { z: limits.cl, t: 0 }
    }
}

/// Absorb one subgroup mean into the statistic.
pub fn ewma_step(state: EwmaState, ybar: f64, lambda: f64) -> EwmaState {
    EwmaState {
        z: lambda * ybar + (1.0 - lambda) * state.z,
        t: state.t + 1,
    }
}

/// Signal rule: strict exceedance of the upper limit.
pub fn signals(state: &EwmaState, limits: &ControlLimits) -> bool {
    state.z > limits.ucl
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ZinbParams;
    use approx::assert_relative_eq;

    fn table_one_params() -> ZinbParams {
        ZinbParams::new(1.0, 0.4, 0.85).unwrap()
    }

    #[test]
    fn limits_match_reference_cells() {
        let p = table_one_params();
        let ewma = ChartConfig::new(0.05, 3.105, 1, p).unwrap();
        assert!((compute_limits(&ewma).ucl - 0.6832).abs() < 1e-4);

        let shewhart = ChartConfig::new(1.0, 8.435, 1, p).unwrap();
        assert!((compute_limits(&shewhart).ucl - 7.9988).abs() < 1e-4);
    }

    #[test]
    fn lcl_is_clamped_at_zero() {
        let p = table_one_params();
        let cfg = ChartConfig::new(0.05, 3.105, 1, p).unwrap();
        let lim = compute_limits(&cfg);
        assert_eq!(lim.lcl, 0.0);
        assert!(lim.ucl > lim.cl);
    }

    #[test]
    fn shewhart_width_is_l_times_process_sd() {
        let p = table_one_params();
        let cfg = ChartConfig::new(1.0, 2.5, 1, p).unwrap();
        let lim = compute_limits(&cfg);
        assert_relative_eq!(
            lim.ucl - lim.cl,
            2.5 * p.variance().sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn step_hand_values() {
        let z0 = EwmaState { z: 0.225, t: 0 };
        let s = ewma_step(z0, 0.0, 0.05);
        assert_relative_eq!(s.z, 0.21375, max_relative = 1e-12);
        assert_eq!(s.t, 1);

        // fixed point at the center line
        let s2 = ewma_step(z0, 0.225, 0.05);
        assert_relative_eq!(s2.z, 0.225, max_relative = 1e-12);

        // Shewhart reduction: the statistic is the newest observation
        let s3 = ewma_step(EwmaState { z: 9.9, t: 4 }, 3.0, 1.0);
        assert_relative_eq!(s3.z, 3.0, max_relative = 1e-15);
    }

    #[test]
    fn signal_rule_is_strict() {
        let lim = ControlLimits {
            ucl: 7.9988,
            cl: 0.225,
            lcl: 0.0,
        };
        assert!(!signals(&EwmaState { z: 7.9988, t: 1 }, &lim));
        assert!(signals(
            &EwmaState {
                z: 7.9988 + 1e-9,
                t: 1
            },
            &lim
        ));
        // integer observations on a Shewhart chart: 8 signals, 7 does not
        assert!(signals(&EwmaState { z: 8.0, t: 1 }, &lim));
        assert!(!signals(&EwmaState { z: 7.0, t: 1 }, &lim));
    }

    #[test]
    fn config_validation() {
        let p = table_one_params();
        assert!(ChartConfig::new(0.0, 3.0, 1, p).is_err());
        assert!(ChartConfig::new(1.2, 3.0, 1, p).is_err());
        assert!(ChartConfig::new(0.1, 0.0, 1, p).is_err());
        assert!(ChartConfig::new(0.1, 3.0, 0, p).is_err());
        assert!(ChartConfig::new(1.0, 3.0, 10, p).unwrap().is_shewhart());
    }
}

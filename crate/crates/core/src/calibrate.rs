//! Solving for the limit multiplier L that achieves a target in-control ARL.
//!
//! ARL(L) is estimated with common random numbers: every evaluation reuses
//! the same master seed, so each replication's statistic path is fixed and
//! its run length can only grow as L widens the limit. ARL(L) is therefore a
//! deterministic nondecreasing step function of L for the given seed, and
//! plain bisection is sound.
//!
//! Counts are discrete, so for Shewhart charts the achievable in-control
//! ARLs form a ladder: ARL jumps each time the limit crosses an integer, and
//! targets inside a step cannot be hit. The solver narrows the bracket to the
//! jump and reports both rungs instead of silently missing the target.

use crate::chart::{compute_limits, ChartConfig};
use crate::dist::ZinbParams;
use crate::error::{Error, Result};
use crate::runlength::{estimate_arl, SimulationJob, DEFAULT_MAX_RL, DEFAULT_REPS};

/// Exact ARL of a Shewhart chart on single observations: 1 / P(Y > ucl),
/// infinite when the tail above the limit carries no mass.
pub fn shewhart_arl_exact(params: &ZinbParams, ucl: f64) -> f64 {
    let tail = params.tail_above(ucl);
    if tail <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / tail
    }
}

/// Which rung of a discreteness ladder to report when the target in-control
/// ARL falls between two achievable values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlateauPolicy {
    /// The largest achievable ARL below the target.
    NearestBelow,
    /// The smallest achievable ARL above the target.
    NearestAbove,
    /// Whichever side is closer to the target.
    #[default]
    NearestAbsolute,
}

/// Calibration task description.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationSpec {
    pub lambda: f64,
    pub n: u32,
    pub params: ZinbParams,
    pub target_arl0: f64,
    pub reps: u32,
    /// Acceptance band on |ARL - target|.
    pub tol_arl: f64,
    pub l_bracket: (f64, f64),
    pub master_seed: u64,
    pub plateau_policy: PlateauPolicy,
    /// Evaluate ARL through the exact Shewhart tail formula instead of Monte
    /// Carlo. Only valid for lambda = 1, n = 1.
    pub use_exact_shewhart: bool,
}

/// Default acceptance band: the larger of 0.5 and 1% of the target.
pub fn default_tol(target_arl0: f64) -> f64 {
    (0.01 * target_arl0).max(0.5)
}

/// Default L search bracket, wide enough for every practical chart width.
pub const DEFAULT_BRACKET: (f64, f64) = (0.5, 12.0);

const BRACKET_LO_FLOOR: f64 = 0.01;
const BRACKET_HI_CAP: f64 = 64.0;
const L_WIDTH_FLOOR: f64 = 1e-3;
const MAX_BISECTIONS: u32 = 60;

impl CalibrationSpec {
    pub fn new(lambda: f64, n: u32, params: ZinbParams, target_arl0: f64) -> Result<Self> {
        if !target_arl0.is_finite() || target_arl0 <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "target ARL must exceed 1, got {target_arl0}"
            )));
        }
        // validate lambda and n through a throwaway config
        ChartConfig::new(lambda, 1.0, n, params)?;
        Ok(Self {
            lambda,
            n,
            params,
            target_arl0,
            reps: DEFAULT_REPS,
            tol_arl: default_tol(target_arl0),
            l_bracket: DEFAULT_BRACKET,
            master_seed: 0,
            plateau_policy: PlateauPolicy::default(),
            use_exact_shewhart: false,
        })
    }
}

/// The two achievable ARLs bracketing an unattainable target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub l_below: f64,
    pub arl_below: f64,
    pub l_above: f64,
    pub arl_above: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationResult {
    pub l_star: f64,
    pub achieved_arl: f64,
    pub achieved_sdrl: f64,
    /// Number of ARL evaluations spent.
    pub evaluations: u32,
    /// True when the ARL band was met or the bracket narrowed to the width
    /// floor; false only for pathological non-monotone evaluations.
    pub converged: bool,
    /// Present when the target sits inside a discreteness step; `l_star` and
    /// `achieved_arl` then reflect the configured plateau policy.
    pub plateau: Option<Plateau>,
}

struct Evaluator<'a> {
    spec: &'a CalibrationSpec,
    max_rl: u64,
    evaluations: u32,
}

impl Evaluator<'_> {
    /// (ARL, SDRL) at multiplier l under common random numbers.
    fn eval(&mut self, l: f64) -> Result<(f64, f64)> {
        self.evaluations += 1;
        let chart = ChartConfig::new(self.spec.lambda, l, self.spec.n, self.spec.params)?;
        if self.spec.use_exact_shewhart {
            let ucl = compute_limits(&chart).ucl;
            let q = self.spec.params.tail_above(ucl);
            if q <= 0.0 {
                return Ok((f64::INFINITY, f64::INFINITY));
            }
            // geometric run length: mean 1/q, SD sqrt(1 - q)/q
            return Ok((1.0 / q, (1.0 - q).sqrt() / q));
        }
        let mut job = SimulationJob::new(chart, self.spec.params, self.spec.reps, self.spec.master_seed)?;
        job.max_rl = self.max_rl;
        let s = estimate_arl(&job);
        Ok((s.arl, s.sdrl))
    }
}

/// Find L such that the in-control ARL meets the target, by bisection under
/// common random numbers. The initial bracket is expanded automatically; an
/// unreachable target yields [`Error::Bracket`].
pub fn calibrate_l(spec: &CalibrationSpec) -> Result<CalibrationResult> {
    if spec.use_exact_shewhart && (spec.lambda != 1.0 || spec.n != 1) {
        return Err(Error::InvalidParameter(
            "exact calibration applies only to Shewhart charts on single observations".into(),
        ));
    }
    if spec.l_bracket.0 >= spec.l_bracket.1 || spec.l_bracket.0 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "bracket ({}, {}) is not an increasing positive pair",
            spec.l_bracket.0, spec.l_bracket.1
        )));
    }
    if !spec.tol_arl.is_finite() || spec.tol_arl <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {}",
            spec.tol_arl
        )));
    }

    // Run lengths far above the target carry no information for bracketing,
    // so evaluations are capped well above it; a censored mean still lands
    // on the correct side of the target.
    let cap = ((50.0 * spec.target_arl0).ceil() as u64).max(1_000);
    let mut ev = Evaluator {
        spec,
        max_rl: cap.min(DEFAULT_MAX_RL),
        evaluations: 0,
    };
    let target = spec.target_arl0;

    let (mut lo, mut hi) = spec.l_bracket;
    let (mut arl_lo, mut sdrl_lo) = ev.eval(lo)?;
    // expand downward until the lower end is below the target
    while arl_lo >= target && lo > BRACKET_LO_FLOOR {
        lo = (lo * 0.5).max(BRACKET_LO_FLOOR);
        (arl_lo, sdrl_lo) = ev.eval(lo)?;
    }
    let (mut arl_hi, mut sdrl_hi) = ev.eval(hi)?;
    while arl_hi < target && hi < BRACKET_HI_CAP {
        hi = (hi * 1.5).min(BRACKET_HI_CAP);
        (arl_hi, sdrl_hi) = ev.eval(hi)?;
    }
    if arl_lo >= target || arl_hi < target {
        return Err(Error::Bracket {
            target,
            lo,
            hi,
            arl_lo,
            arl_hi,
        });
    }

    let finish = |l: f64, arl: f64, sdrl: f64, evaluations: u32, plateau: Option<Plateau>| {
        CalibrationResult {
            l_star: l,
            achieved_arl: arl,
            achieved_sdrl: sdrl,
            evaluations,
            converged: true,
            plateau,
        }
    };

    // check the endpoints themselves before bisecting
    if (arl_hi - target).abs() <= spec.tol_arl {
        return Ok(finish(hi, arl_hi, sdrl_hi, ev.evaluations, None));
    }

    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= L_WIDTH_FLOOR {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (arl_mid, sdrl_mid) = ev.eval(mid)?;
        if (arl_mid - target).abs() <= spec.tol_arl {
            return Ok(finish(mid, arl_mid, sdrl_mid, ev.evaluations, None));
        }
        if arl_mid < target {
            lo = mid;
            arl_lo = arl_mid;
            sdrl_lo = sdrl_mid;
        } else {
            hi = mid;
            arl_hi = arl_mid;
            sdrl_hi = sdrl_mid;
        }
    }

    // The bracket collapsed onto a discreteness step: the target is pinched
    // between two achievable ARLs. Report the rung chosen by policy.
    let plateau = Plateau {
        l_below: lo,
        arl_below: arl_lo,
        l_above: hi,
        arl_above: arl_hi,
    };
    let below_closer = (target - arl_lo).abs() <= (arl_hi - target).abs();
    let take_below = match spec.plateau_policy {
        PlateauPolicy::NearestBelow => true,
        PlateauPolicy::NearestAbove => false,
        PlateauPolicy::NearestAbsolute => below_closer,
    };
    let res = if take_below {
        finish(lo, arl_lo, sdrl_lo, ev.evaluations, Some(plateau))
    } else {
        finish(hi, arl_hi, sdrl_hi, ev.evaluations, Some(plateau))
    };
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table_one_params() -> ZinbParams {
        ZinbParams::new(1.0, 0.4, 0.85).unwrap()
    }

    #[test]
    fn exact_arl_hand_values() {
        let p = table_one_params();
        let arl = shewhart_arl_exact(&p, 7.9988);
        assert_relative_eq!(arl, 1.0 / (0.15 * 0.6f64.powi(8)), max_relative = 1e-12);
        assert!((arl - 396.9).abs() < 0.1);
        // every observation signals when the limit sits below the support
        assert_relative_eq!(shewhart_arl_exact(&p, -1.0), 1.0, max_relative = 1e-15);
        // a shifted process crosses the same limit sooner
        let shifted = ZinbParams::new(1.0, 0.38, 0.85).unwrap();
        let arl1 = shewhart_arl_exact(&shifted, 7.9988);
        assert!((arl1 - 305.3).abs() < 0.5, "got {arl1}");
    }

    #[test]
    fn exact_shewhart_calibration_reports_the_ladder() {
        let mut spec = CalibrationSpec::new(1.0, 1, table_one_params(), 500.0).unwrap();
        spec.use_exact_shewhart = true;
        let r = calibrate_l(&spec).unwrap();
        assert!(r.converged);
        let plateau = r.plateau.expect("discrete support forces a plateau");
        assert!(plateau.arl_below < 500.0 && 500.0 < plateau.arl_above);
        // rungs of the ladder around 500: 1/(0.15 * 0.6^8) and 1/(0.15 * 0.6^9)
        assert!((plateau.arl_below - 396.92).abs() < 0.1, "{plateau:?}");
        assert!((plateau.arl_above - 661.53).abs() < 0.1, "{plateau:?}");
        // default policy picks the closer rung, which is the lower one here
        assert_relative_eq!(r.achieved_arl, plateau.arl_below, max_relative = 1e-12);
    }

    #[test]
    fn plateau_policies_pick_opposite_rungs() {
        let mut spec = CalibrationSpec::new(1.0, 1, table_one_params(), 500.0).unwrap();
        spec.use_exact_shewhart = true;
        spec.plateau_policy = PlateauPolicy::NearestAbove;
        let above = calibrate_l(&spec).unwrap();
        assert!((above.achieved_arl - 661.53).abs() < 0.1);
        spec.plateau_policy = PlateauPolicy::NearestBelow;
        let below = calibrate_l(&spec).unwrap();
        assert!((below.achieved_arl - 396.92).abs() < 0.1);
        assert!(below.l_star < above.l_star);
    }

    #[test]
    fn crn_arl_is_nondecreasing_in_l() {
        let spec = {
            let mut s = CalibrationSpec::new(0.25, 1, table_one_params(), 200.0).unwrap();
            s.reps = 2_000;
            s.master_seed = 17;
            s
        };
        let mut ev = Evaluator {
            spec: &spec,
            max_rl: 20_000,
            evaluations: 0,
        };
        let mut last = 0.0;
        for l in [2.0, 3.0, 4.0, 4.5, 5.0, 5.5] {
            let (arl, _) = ev.eval(l).unwrap();
            assert!(arl >= last, "ARL fell from {last} to {arl} at L = {l}");
            last = arl;
        }
    }

    #[test]
    fn mc_calibration_hits_a_modest_target() {
        let mut spec = CalibrationSpec::new(0.25, 1, table_one_params(), 100.0).unwrap();
        spec.reps = 4_000;
        spec.master_seed = 23;
        let r = calibrate_l(&spec).unwrap();
        assert!(r.converged);
        if r.plateau.is_none() {
            assert!((r.achieved_arl - 100.0).abs() <= spec.tol_arl);
        }
        // independent seed check: the found L really gives roughly the target
        let chart = ChartConfig::new(0.25, r.l_star, 1, spec.params).unwrap();
        let job = SimulationJob::new(chart, spec.params, 4_000, 91).unwrap();
        let s = estimate_arl(&job);
        assert!(
            (s.arl - 100.0).abs() < 4.0 * s.se_arl + spec.tol_arl,
            "arl {} se {}",
            s.arl,
            s.se_arl
        );
    }

    #[test]
    fn unreachable_target_is_a_bracket_error() {
        let mut spec = CalibrationSpec::new(1.0, 1, table_one_params(), 1.5).unwrap();
        spec.use_exact_shewhart = true;
        // ARL(L -> 0) = 1 / P(Y > CL) is about 11 here, so 1.5 is unreachable
        match calibrate_l(&spec) {
            Err(Error::Bracket { arl_lo, .. }) => assert!(arl_lo > 1.5),
            other => panic!("expected bracket error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(CalibrationSpec::new(0.05, 1, table_one_params(), 1.0).is_err());
        let mut spec = CalibrationSpec::new(0.05, 1, table_one_params(), 500.0).unwrap();
        spec.use_exact_shewhart = true;
        assert!(matches!(
            calibrate_l(&spec),
            Err(Error::InvalidParameter(_))
        ));
        let mut bad = CalibrationSpec::new(0.05, 1, table_one_params(), 500.0).unwrap();
        bad.l_bracket = (3.0, 2.0);
        assert!(calibrate_l(&bad).is_err());
    }
}

//! Property tests for the invariants the toolkit depends on: probability
//! mass accounting, distribution identities, chart monotonicity, and
//! round-trip stability of the CSV formats.

use countspc::chart::{compute_limits, ewma_step, signals, ChartConfig, EwmaState};
use countspc::data::{read_arl_table, write_arl_table};
use countspc::dist::{CountModel, Family, ZinbParams};
use countspc::fit::fit;
use countspc::monitor::ArlTableRow;
use countspc::runlength::{estimate_arl, SimulationJob};
use proptest::prelude::*;

fn zinb_params() -> impl Strategy<Value = ZinbParams> {
    (0.05f64..50.0, 0.02f64..0.98, 0.0f64..0.95)
        .prop_map(|(k, p, theta)| ZinbParams::new(k, p, theta).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pmf_mass_and_tail_are_complementary(params in zinb_params()) {
        // twelve standard deviations past the mean leaves negligible mass
        // beyond what tail_above accounts for
        let cut = (params.mean() + 12.0 * params.variance().sqrt()).ceil().max(16.0);
        let mut mass = 0.0;
        for y in 0..=(cut as u64) {
            mass += params.pmf(y);
        }
        let total = mass + params.tail_above(cut);
        prop_assert!((total - 1.0).abs() < 1e-8, "mass + tail = {total}");
    }

    #[test]
    fn zero_probability_matches_closed_form(params in zinb_params()) {
        let direct = params.theta() + (1.0 - params.theta()) * params.p().powf(params.k());
        prop_assert!((params.pmf(0) - direct).abs() < 1e-12);
    }

    #[test]
    fn no_inflation_reduces_to_negative_binomial(
        k in 0.05f64..50.0,
        p in 0.02f64..0.98,
        y in 0u64..60,
    ) {
        let zinb = ZinbParams::new(k, p, 0.0).unwrap();
        let nb = CountModel::NegBinomial { mu: k * (1.0 - p) / p, k };
        prop_assert!(
            (zinb.ln_pmf(y) - nb.ln_pmf(y)).abs() < 1e-8,
            "log pmf differs at y={y}: {} vs {}",
            zinb.ln_pmf(y),
            nb.ln_pmf(y)
        );
    }

    #[test]
    fn variance_never_below_mean(params in zinb_params()) {
        prop_assert!(params.variance() + 1e-12 >= params.mean());
    }

    #[test]
    fn ewma_forgets_its_start_geometrically(
        lambda in 0.05f64..=1.0,
        target in 0.0f64..20.0,
        z0 in 0.0f64..20.0,
    ) {
        let mut state = EwmaState { z: z0, t: 0 };
        for _ in 0..100 {
            state = ewma_step(state, target, lambda);
        }
        let bound = (1.0 - lambda).powi(100) * (z0 - target).abs() + 1e-9;
        prop_assert!((state.z - target).abs() <= bound);
        prop_assert_eq!(state.t, 100);
    }

    #[test]
    fn upper_limit_is_monotone_in_l_and_lambda(
        params in zinb_params(),
        n in 1u32..20,
        (l_lo, l_hi) in (0.1f64..8.0, 0.1f64..8.0).prop_map(|(a, b)| (a.min(b), a.max(b))),
        (lam_lo, lam_hi) in (0.01f64..1.0, 0.01f64..1.0).prop_map(|(a, b)| (a.min(b), a.max(b))),
    ) {
        let ucl = |lambda: f64, l: f64| {
            compute_limits(&ChartConfig::new(lambda, l, n, params).unwrap()).ucl
        };
        prop_assert!(ucl(lam_lo, l_lo) <= ucl(lam_lo, l_hi) + 1e-12);
        prop_assert!(ucl(lam_lo, l_hi) <= ucl(lam_hi, l_hi) + 1e-12);
    }

    #[test]
    fn signal_requires_strict_exceedance(
        params in zinb_params(),
        lambda in 0.01f64..=1.0,
        l in 0.5f64..8.0,
    ) {
        let limits = compute_limits(&ChartConfig::new(lambda, l, 1, params).unwrap());
        let on_limit = EwmaState { z: limits.ucl, t: 1 };
        prop_assert!(!signals(&on_limit, &limits));
        let above = EwmaState { z: limits.ucl + limits.ucl.abs() * 1e-9 + 1e-12, t: 1 };
        prop_assert!(signals(&above, &limits));
    }

    #[test]
    fn arl_table_survives_a_csv_round_trip(
        rows in prop::collection::vec(
            (
                (0.01f64..1.0, 0.5f64..10.0, 0.0f64..50.0),
                (0.05f64..0.95, 0.0f64..0.95, 0.1f64..20.0),
                (1.0f64..1.0e5, 0.0f64..1.0e5, 0.0f64..1.0e3),
            )
                .prop_map(|((lambda, l, ucl), (p1, theta1, k1), (arl, sdrl, se))| {
                    ArlTableRow { lambda, l, ucl, p1, theta1, k1, arl, sdrl, se }
                }),
            1..8,
        )
    ) {
        let file = tempfile::NamedTempFile::new().unwrap();
        write_arl_table(&rows, file.as_file()).unwrap();
        let back = read_arl_table(file.path()).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            for (x, y) in [
                (a.lambda, b.lambda), (a.l, b.l), (a.ucl, b.ucl),
                (a.p1, b.p1), (a.theta1, b.theta1), (a.k1, b.k1),
                (a.arl, b.arl), (a.sdrl, b.sdrl), (a.se, b.se),
            ] {
                // values are written with four decimals
                prop_assert!((x - y).abs() <= 5.01e-5, "{x} vs {y}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fitted_log_likelihoods_respect_nesting(
        data in prop::collection::vec(0u64..25, 40..100)
    ) {
        prop_assume!(data.iter().any(|&y| y > 0));
        let ll = |f: Family| fit(f, &data).map(|r| r.loglik);
        let pois = ll(Family::Poisson).unwrap();
        if let Ok(nb) = ll(Family::NegBinomial) {
            // the Poisson limit sits at the shape clamp, so a small gap is
            // possible on under-dispersed draws
            prop_assert!(nb >= pois - 0.05, "NB {nb} below Poisson {pois}");
            if let Ok(zinb) = ll(Family::ZiNegBinomial) {
                prop_assert!(zinb >= nb - 0.05, "ZINB {zinb} below NB {nb}");
            }
        }
        if let Ok(zip) = ll(Family::ZiPoisson) {
            prop_assert!(zip >= pois - 1e-3, "ZIP {zip} below Poisson {pois}");
        }
    }

    #[test]
    fn run_length_summaries_are_internally_consistent(
        lambda in 0.05f64..=1.0,
        l in 2.0f64..6.0,
        seed in any::<u64>(),
    ) {
        let params = ZinbParams::new(1.0, 0.4, 0.85).unwrap();
        let chart = ChartConfig::new(lambda, l, 1, params).unwrap();
        let mut job = SimulationJob::new(chart, params, 200, seed).unwrap();
        job.max_rl = 2_000;
        let s = estimate_arl(&job);
        prop_assert!(s.arl >= 1.0 && s.arl <= job.max_rl as f64);
        prop_assert!(s.sdrl >= 0.0 && s.sdrl.is_finite());
        prop_assert!(s.se_arl >= 0.0 && s.se_arl.is_finite());
        prop_assert!(s.censored <= s.reps);
        prop_assert_eq!(s.reps, 200);
    }
}

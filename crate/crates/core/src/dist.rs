//! Count distributions: the zero-inflated negative binomial and the three
//! comparison families used during model selection (negative binomial,
//! zero-inflated Poisson, Poisson).
//!
//! All probability mass is evaluated in log space so that large counts do not
//! underflow, and the shape parameter k may be real valued: the binomial
//! coefficient in the negative binomial pmf is generalized through the gamma
//! function. Negative binomial sampling goes through the gamma-Poisson
//! mixture, which likewise supports real k.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

/// Shape used when embedding a Poisson-type family as a negative binomial.
///
/// A negative binomial with this shape and mean mu has variance
/// mu * (1 + mu / 1e6), within a relative 1e-6 * mu of the Poisson variance,
/// close enough for control-limit and run-length work.
pub const POISSON_EMBED_SHAPE: f64 = 1e6;

/// Parameters of the zero-inflated negative binomial distribution.
///
/// With probability `theta` the observation is a structural zero; otherwise
/// it is a negative binomial count with `k` successes and per-trial success
/// probability `p`. Setting `theta = 0` recovers the plain negative binomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZinbParams {
    k: f64,
    p: f64,
    theta: f64,
}

impl ZinbParams {
    pub fn new(k: f64, p: f64, theta: f64) -> Result<Self> {
        if !k.is_finite() || k <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "shape k must be positive and finite, got {k}"
            )));
        }
        if !p.is_finite() || p <= 0.0 || p >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "success probability p must lie in (0, 1), got {p}"
            )));
        }
        if !theta.is_finite() || theta < 0.0 || theta >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "zero-inflation theta must lie in [0, 1), got {theta}"
            )));
        }
        Ok(Self { k, p, theta })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// E(Y) = k (1 - theta)(1 - p) / p.
    pub fn mean(&self) -> f64 {
        self.k * (1.0 - self.theta) * (1.0 - self.p) / self.p
    }

    /// Var(Y) = k (1 - theta)(1 - p) [1 + (1 - p) theta k] / p^2.
    pub fn variance(&self) -> f64 {
        let q = 1.0 - self.p;
        self.k * (1.0 - self.theta) * q * (1.0 + q * self.theta * self.k) / (self.p * self.p)
    }

    pub fn pmf(&self, y: u64) -> f64 {
        self.ln_pmf(y).exp()
    }

    pub fn ln_pmf(&self, y: u64) -> f64 {
        if y == 0 {
            let ln_nb0 = self.k * self.p.ln();
            if self.theta == 0.0 {
                ln_nb0
            } else {
                (self.theta + (1.0 - self.theta) * ln_nb0.exp()).ln()
            }
        } else {
            (1.0 - self.theta).ln() + nb_ln_pmf(self.k, self.p, y)
        }
    }

    /// Exact upper-tail probability P(Y > cut) over the integer support.
    ///
    /// The negative binomial survival function is expressed through the
    /// regularized incomplete beta function, so no pmf summation or tail
    /// truncation is involved.
    pub fn tail_above(&self, cut: f64) -> f64 {
        if cut < 0.0 {
            return 1.0;
        }
        let m = cut.floor();
        (1.0 - self.theta) * beta_reg(m + 1.0, self.k, 1.0 - self.p)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        if self.theta > 0.0 && rng.gen::<f64>() < self.theta {
            return 0;
        }
        nb_sample(self.k, self.p, rng)
    }
}

/// log pmf of the negative binomial at y >= 0, shape k, success probability p.
fn nb_ln_pmf(k: f64, p: f64, y: u64) -> f64 {
    let yf = y as f64;
    ln_gamma(yf + k) - ln_gamma(k) - ln_gamma(yf + 1.0) + k * p.ln() + yf * (1.0 - p).ln()
}

/// Draw from the negative binomial via the gamma-Poisson mixture.
fn nb_sample<R: Rng + ?Sized>(k: f64, p: f64, rng: &mut R) -> u64 {
    let scale = (1.0 - p) / p;
    let lambda = Gamma::new(k, scale)
        .expect("shape and scale are validated positive")
        .sample(rng);
    if lambda <= 0.0 {
        // Gamma draws with tiny shape can underflow to zero; the matching
        // Poisson draw is then zero with probability one.
        return 0;
    }
    Poisson::new(lambda)
        .expect("gamma draw is positive and finite")
        .sample(rng) as u64
}

/// Model family labels, ordered as the fitting table reports them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Poisson,
    NegBinomial,
    ZiPoisson,
    ZiNegBinomial,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Poisson,
        Family::NegBinomial,
        Family::ZiPoisson,
        Family::ZiNegBinomial,
    ];

    /// Number of free parameters: 1 (Poisson), 2 (NB, ZIP), 3 (ZINB).
    pub fn free_param_count(self) -> usize {
        match self {
            Family::Poisson => 1,
            Family::NegBinomial | Family::ZiPoisson => 2,
            Family::ZiNegBinomial => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Family::Poisson => "Poisson",
            Family::NegBinomial => "NB",
            Family::ZiPoisson => "ZIP",
            Family::ZiNegBinomial => "ZINB",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" => Ok(Family::Poisson),
            "nb" | "negbinomial" => Ok(Family::NegBinomial),
            "zip" => Ok(Family::ZiPoisson),
            "zinb" => Ok(Family::ZiNegBinomial),
            other => Err(Error::InvalidParameter(format!(
                "unknown family {other:?} (expected poisson, nb, zip, or zinb)"
            ))),
        }
    }
}

/// A count model from one of the four fitted families.
///
/// `mu` is always the mean of the un-inflated component, so the marginal mean
/// of a zero-inflated family is `(1 - theta) * mu`. The negative binomial
/// branches derive their internal success probability as p = k / (mu + k).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CountModel {
    Poisson { mu: f64 },
    NegBinomial { mu: f64, k: f64 },
    ZiPoisson { mu: f64, theta: f64 },
    ZiNegBinomial { mu: f64, k: f64, theta: f64 },
}

impl CountModel {
    pub fn family(&self) -> Family {
        match self {
            CountModel::Poisson { .. } => Family::Poisson,
            CountModel::NegBinomial { .. } => Family::NegBinomial,
            CountModel::ZiPoisson { .. } => Family::ZiPoisson,
            CountModel::ZiNegBinomial { .. } => Family::ZiNegBinomial,
        }
    }

    pub fn free_param_count(&self) -> usize {
        self.family().free_param_count()
    }

    /// Mean of the un-inflated component.
    pub fn mu(&self) -> f64 {
        match *self {
            CountModel::Poisson { mu }
            | CountModel::NegBinomial { mu, .. }
            | CountModel::ZiPoisson { mu, .. }
            | CountModel::ZiNegBinomial { mu, .. } => mu,
        }
    }

    /// Zero-inflation probability; zero for the un-inflated families.
    pub fn theta(&self) -> f64 {
        match *self {
            CountModel::ZiPoisson { theta, .. } | CountModel::ZiNegBinomial { theta, .. } => theta,
            _ => 0.0,
        }
    }

    /// Shape parameter, when the family has one.
    pub fn k(&self) -> Option<f64> {
        match *self {
            CountModel::NegBinomial { k, .. } | CountModel::ZiNegBinomial { k, .. } => Some(k),
            _ => None,
        }
    }

    /// Marginal mean E(Y) = (1 - theta) * mu.
    pub fn marginal_mean(&self) -> f64 {
        (1.0 - self.theta()) * self.mu()
    }

    pub fn validate(&self) -> Result<()> {
        let mu = self.mu();
        if !mu.is_finite() || mu <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "mean mu must be positive and finite, got {mu}"
            )));
        }
        if let Some(k) = self.k() {
            if !k.is_finite() || k <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "shape k must be positive and finite, got {k}"
                )));
            }
        }
        let theta = self.theta();
        if !theta.is_finite() || theta < 0.0 || theta >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "zero-inflation theta must lie in [0, 1), got {theta}"
            )));
        }
        Ok(())
    }

    pub fn ln_pmf(&self, y: u64) -> f64 {
        match *self {
            CountModel::Poisson { mu } => poisson_ln_pmf(mu, y),
            CountModel::NegBinomial { mu, k } => nb_ln_pmf(k, k / (mu + k), y),
            CountModel::ZiPoisson { mu, theta } => {
                if y == 0 {
                    if theta == 0.0 {
                        -mu
                    } else {
                        (theta + (1.0 - theta) * (-mu).exp()).ln()
                    }
                } else {
                    (1.0 - theta).ln() + poisson_ln_pmf(mu, y)
                }
            }
            CountModel::ZiNegBinomial { mu, k, theta } => {
                let p = k / (mu + k);
                if y == 0 {
                    let ln_nb0 = k * p.ln();
                    if theta == 0.0 {
                        ln_nb0
                    } else {
                        (theta + (1.0 - theta) * ln_nb0.exp()).ln()
                    }
                } else {
                    (1.0 - theta).ln() + nb_ln_pmf(k, p, y)
                }
            }
        }
    }

    pub fn pmf(&self, y: u64) -> f64 {
        self.ln_pmf(y).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            CountModel::Poisson { mu } => poisson_sample(mu, rng),
            CountModel::NegBinomial { mu, k } => nb_sample(k, k / (mu + k), rng),
            CountModel::ZiPoisson { mu, theta } => {
                if theta > 0.0 && rng.gen::<f64>() < theta {
                    0
                } else {
                    poisson_sample(mu, rng)
                }
            }
            CountModel::ZiNegBinomial { mu, k, theta } => {
                if theta > 0.0 && rng.gen::<f64>() < theta {
                    0
                } else {
                    nb_sample(k, k / (mu + k), rng)
                }
            }
        }
    }

    /// Express the model in the (k, p, theta) chart parameterization.
    ///
    /// Negative binomial branches convert exactly. Poisson branches have no
    /// finite-shape equivalent and are embedded with [`POISSON_EMBED_SHAPE`],
    /// which reproduces their mean exactly and their variance to a relative
    /// error below 1e-6 * mu.
    pub fn to_zinb(&self) -> Result<ZinbParams> {
        let k = self.k().unwrap_or(POISSON_EMBED_SHAPE);
        let mu = self.mu();
        ZinbParams::new(k, k / (mu + k), self.theta())
    }
}

fn poisson_ln_pmf(mu: f64, y: u64) -> f64 {
    let yf = y as f64;
    yf * mu.ln() - mu - ln_gamma(yf + 1.0)
}

fn poisson_sample<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> u64 {
    Poisson::new(mu)
        .expect("mean is validated positive and finite")
        .sample(rng) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(k: f64, p: f64, theta: f64) -> ZinbParams {
        ZinbParams::new(k, p, theta).unwrap()
    }

    #[test]
    fn pmf_hand_values() {
        let d = params(1.0, 0.4, 0.85);
        assert_relative_eq!(d.pmf(0), 0.91, max_relative = 1e-12);
        assert_relative_eq!(d.pmf(1), 0.036, max_relative = 1e-12);
    }

    #[test]
    fn pmf_matches_external_reference() {
        // Values computed with scipy.stats.nbinom.pmf (scipy 1.x).
        let nb = CountModel::NegBinomial {
            mu: 2.5 * 0.7 / 0.3,
            k: 2.5,
        };
        for (y, want) in [
            (0u64, 4.929503017546495e-02),
            (1, 8.626630280706368e-02),
            (5, 9.718711801537472e-02),
            (17, 6.723974408597249e-03),
        ] {
            assert_relative_eq!(nb.pmf(y), want, max_relative = 1e-11);
        }
        let z = params(1.8, 0.22, 0.3);
        for (y, want) in [
            (0u64, 3.458626204639035e-01),
            (1, 6.439111913132062e-02),
            (9, 3.294146306629595e-02),
        ] {
            assert_relative_eq!(z.pmf(y), want, max_relative = 1e-11);
        }
    }

    #[test]
    fn moments_hand_values() {
        let d = params(1.0, 0.4, 0.85);
        assert_relative_eq!(d.mean(), 0.225, max_relative = 1e-12);
        assert_relative_eq!(d.variance(), 0.849375, max_relative = 1e-12);
    }

    #[test]
    fn mean_vanishes_as_theta_approaches_one() {
        let d = params(2.0, 0.3, 1.0 - 1e-12);
        assert!(d.mean() < 1e-11);
    }

    #[test]
    fn theta_zero_reduces_to_negative_binomial() {
        let z = params(2.0, 0.5, 0.0);
        let nb = CountModel::NegBinomial {
            mu: 2.0 * 0.5 / 0.5,
            k: 2.0,
        };
        for y in 0..60u64 {
            assert_relative_eq!(z.pmf(y), nb.pmf(y), max_relative = 1e-12);
        }
    }

    #[test]
    fn zip_with_no_inflation_is_poisson() {
        let zip = CountModel::ZiPoisson {
            mu: 3.7,
            theta: 0.0,
        };
        let pois = CountModel::Poisson { mu: 3.7 };
        for y in 0..50u64 {
            assert_relative_eq!(zip.ln_pmf(y), pois.ln_pmf(y), max_relative = 1e-13);
        }
    }

    #[test]
    fn poisson_ln_pmf_at_zero_is_minus_mu() {
        let m = CountModel::Poisson { mu: 1.0 };
        assert_relative_eq!(m.ln_pmf(0), -1.0, max_relative = 1e-15);
    }

    #[test]
    fn nb_pmf_sums_to_one() {
        let nb = CountModel::NegBinomial { mu: 1.5, k: 2.0 };
        let total: f64 = (0..=500u64).map(|y| nb.pmf(y)).sum();
        assert!((total - 1.0).abs() < 1e-10, "sum = {total}");
    }

    #[test]
    fn tail_above_hand_values() {
        let d = params(1.0, 0.4, 0.85);
        // P(Y > 7.9988) = P(Y >= 8) = 0.15 * 0.6^8 for the geometric case.
        assert_relative_eq!(d.tail_above(7.9988), 0.15 * 0.6f64.powi(8), max_relative = 1e-10);
        assert_relative_eq!(d.tail_above(-1.0), 1.0, max_relative = 1e-15);
        // At an integer cut the cut point itself is excluded.
        assert_relative_eq!(d.tail_above(8.0), 0.15 * 0.6f64.powi(9), max_relative = 1e-10);
        // Cross-check against scipy.special.betainc on fitted-style parameters.
        let f = params(2.0, 2.0 / 10.823, 0.24);
        assert_relative_eq!(f.tail_above(28.0), 1.291188163262e-02, max_relative = 1e-9);
        assert_relative_eq!(f.tail_above(30.0), 9.079496050938e-03, max_relative = 1e-9);
    }

    #[test]
    fn tail_matches_pmf_summation() {
        let d = params(2.3, 0.35, 0.4);
        let cut = 6.0;
        let direct: f64 = 1.0 - (0..=6u64).map(|y| d.pmf(y)).sum::<f64>();
        assert_relative_eq!(d.tail_above(cut), direct, max_relative = 1e-9);
    }

    #[test]
    fn sample_moments_match_formulas() {
        let d = params(2.0, 0.4, 0.85);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        let mut zeros = 0u64;
        for _ in 0..n {
            let y = d.sample(&mut rng) as f64;
            sum += y;
            sumsq += y * y;
            if y == 0.0 {
                zeros += 1;
            }
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let se_mean = (d.variance() / n as f64).sqrt();
        assert!(
            (mean - d.mean()).abs() < 4.0 * se_mean,
            "mean {mean} vs {}",
            d.mean()
        );
        assert!((var - d.variance()).abs() / d.variance() < 0.05);
        let p0 = d.pmf(0);
        let se_p0 = (p0 * (1.0 - p0) / n as f64).sqrt();
        let frac0 = zeros as f64 / n as f64;
        assert!((frac0 - p0).abs() < 4.0 * se_p0, "zero rate {frac0} vs {p0}");
    }

    #[test]
    fn sample_is_all_zeros_when_theta_saturates() {
        let d = params(1.0, 0.4, 1.0 - 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..2_000).all(|_| d.sample(&mut rng) == 0));
    }

    #[test]
    fn real_valued_shape_sampling_matches_mean() {
        let m = CountModel::ZiNegBinomial {
            mu: 8.823,
            k: 2.0,
            theta: 0.24,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let mean = (0..n).map(|_| m.sample(&mut rng) as f64).sum::<f64>() / n as f64;
        let want = m.marginal_mean();
        assert!((mean - want).abs() < 0.12, "mean {mean} vs {want}");
    }

    #[test]
    fn to_zinb_preserves_moments() {
        let zinb = CountModel::ZiNegBinomial {
            mu: 8.823,
            k: 2.0,
            theta: 0.24,
        };
        let d = zinb.to_zinb().unwrap();
        assert_relative_eq!(d.mean(), zinb.marginal_mean(), max_relative = 1e-12);

        let pois = CountModel::Poisson { mu: 6.7 };
        let e = pois.to_zinb().unwrap();
        assert_relative_eq!(e.mean(), 6.7, max_relative = 1e-9);
        assert_relative_eq!(e.variance(), 6.7, max_relative = 1e-5);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(ZinbParams::new(0.0, 0.4, 0.2).is_err());
        assert!(ZinbParams::new(1.0, 0.0, 0.2).is_err());
        assert!(ZinbParams::new(1.0, 1.0, 0.2).is_err());
        assert!(ZinbParams::new(1.0, 0.4, 1.0).is_err());
        assert!(ZinbParams::new(1.0, 0.4, -0.1).is_err());
        assert!(ZinbParams::new(f64::NAN, 0.4, 0.1).is_err());
        assert!(CountModel::Poisson { mu: 0.0 }.validate().is_err());
        assert!(CountModel::NegBinomial { mu: 1.0, k: -2.0 }.validate().is_err());
    }

    #[test]
    fn family_parsing_and_counts() {
        assert_eq!("zinb".parse::<Family>().unwrap(), Family::ZiNegBinomial);
        assert_eq!("NB".parse::<Family>().unwrap(), Family::NegBinomial);
        assert!("nbd".parse::<Family>().is_err());
        assert_eq!(Family::Poisson.free_param_count(), 1);
        assert_eq!(Family::NegBinomial.free_param_count(), 2);
        assert_eq!(Family::ZiPoisson.free_param_count(), 2);
        assert_eq!(Family::ZiNegBinomial.free_param_count(), 3);
    }
}

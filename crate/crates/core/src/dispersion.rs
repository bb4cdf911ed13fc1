//! Overdispersion diagnostics for a stream of counts.
//!
//! Three views of the same question, whether the variance exceeds the mean
//! enough to rule out a Poisson description:
//!
//! * a naive moment summary (mean, variance, coefficient of variation),
//! * an auxiliary-regression test of the dispersion constant c in
//!   Var(Y) = mu + c f(mu), asymptotically standard normal under c = 0,
//! * a likelihood-ratio test of negative binomial against its Poisson
//!   restriction, with the p-value halved because the null pins the
//!   dispersion on the parameter-space boundary.

use crate::dist::Family;
use crate::error::{Error, Result};
use crate::fit::fit;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Moment summary of the counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaiveSummary {
    pub mean: f64,
    /// Sample variance with denominator N - 1.
    pub variance: f64,
    /// SD over mean, absent when the mean is zero.
    pub cv: Option<f64>,
}

/// Variance function hypothesized by the auxiliary test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxiliaryForm {
    /// Var(Y) = mu + c mu, quasi-Poisson flavored.
    Linear,
    /// Var(Y) = mu + c mu^2, negative binomial flavored.
    Quadratic,
}

#[derive(Debug, Clone, Copy)]
pub struct AuxiliaryTest {
    pub form: AuxiliaryForm,
    /// Estimated dispersion constant c.
    pub c_hat: f64,
    /// Asymptotically N(0,1) under equidispersion. Identical for both forms
    /// in the intercept-only setting, where the regressor is constant.
    pub t_stat: f64,
    pub p_two_sided: f64,
    /// One-sided alternative c > 0, the direction of practical interest.
    pub p_one_sided: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct LrTest {
    /// 2 (loglik_NB - loglik_Poisson), floored at zero.
    pub lr_stat: f64,
    /// Boundary-corrected: half a chi-square(1) upper tail.
    pub p_value: f64,
    /// Fitted negative binomial shape k.
    pub shape: f64,
    /// Reciprocal convention 1/k, the dispersion as reported by common
    /// regression packages.
    pub dispersion_param: f64,
}

/// All three diagnostics on one dataset.
#[derive(Debug, Clone)]
pub struct DispersionReport {
    pub naive: NaiveSummary,
    pub auxiliary: AuxiliaryTest,
    pub lr: LrTest,
}

fn moments(data: &[u64]) -> Result<(f64, f64, f64)> {
    if data.len() < 2 {
        return Err(Error::Data(format!(
            "dispersion summaries need at least two observations, got {}",
            data.len()
        )));
    }
    let n = data.len() as f64;
    let mean = data.iter().map(|&y| y as f64).sum::<f64>() / n;
    let ss = data
        .iter()
        .map(|&y| {
            let d = y as f64 - mean;
            d * d
        })
        .sum::<f64>();
    Ok((mean, ss / (n - 1.0), ss / n))
}

/// Sample mean, variance (denominator N - 1), and coefficient of variation.
pub fn naive_cv(data: &[u64]) -> Result<NaiveSummary> {
    let (mean, variance, _) = moments(data)?;
    let cv = if mean > 0.0 {
        Some(variance.sqrt() / mean)
    } else {
        None
    };
    Ok(NaiveSummary { mean, variance, cv })
}

/// Auxiliary-regression dispersion test under an intercept-only Poisson
/// model, where the mean estimate is the sample mean. Regressing
/// ((y - mu)^2 - y)/mu on f(mu)/mu without intercept gives the slope c and
/// its t statistic; with a constant regressor this reduces to a scaled mean
/// test of the auxiliary variable.
pub fn dispersion_test_auxiliary(data: &[u64], form: AuxiliaryForm) -> Result<AuxiliaryTest> {
    let (mean, _, _) = moments(data)?;
    if mean <= 0.0 {
        return Err(Error::Data(
            "all counts are zero; the Poisson mean estimate degenerates".into(),
        ));
    }
    let n = data.len() as f64;
    let aux: Vec<f64> = data
        .iter()
        .map(|&y| {
            let y = y as f64;
            ((y - mean).powi(2) - y) / mean
        })
        .collect();
    let aux_mean = aux.iter().sum::<f64>() / n;
    let aux_sd = (aux.iter().map(|a| (a - aux_mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();

    let regressor = match form {
        AuxiliaryForm::Linear => 1.0,
        AuxiliaryForm::Quadratic => mean,
    };
    let c_hat = aux_mean / regressor;
    let t_stat = if aux_sd > 0.0 {
        n.sqrt() * aux_mean / aux_sd
    } else if aux_mean == 0.0 {
        0.0
    } else {
        f64::INFINITY * aux_mean.signum()
    };

    let norm = Normal::new(0.0, 1.0).unwrap();
    Ok(AuxiliaryTest {
        form,
        c_hat,
        t_stat,
        p_two_sided: (2.0 * norm.sf(t_stat.abs())).min(1.0),
        p_one_sided: norm.sf(t_stat),
    })
}

/// Likelihood-ratio test of negative binomial against Poisson. The Poisson
/// null places 1/k on the boundary of the NB parameter space, so the usual
/// chi-square(1) p-value is halved.
pub fn dispersion_test_lr(data: &[u64]) -> Result<LrTest> {
    let pois = fit(Family::Poisson, data)?;
    let nb = fit(Family::NegBinomial, data)?;
    let lr_stat = (2.0 * (nb.loglik - pois.loglik)).max(0.0);
    let chi2 = ChiSquared::new(1.0).unwrap();
    let shape = nb.model.k().expect("negative binomial fit carries a shape");
    Ok(LrTest {
        lr_stat,
        p_value: 0.5 * chi2.sf(lr_stat),
        shape,
        dispersion_param: 1.0 / shape,
    })
}

/// Run all three diagnostics; the auxiliary test uses the linear form.
pub fn dispersion_report(data: &[u64]) -> Result<DispersionReport> {
    Ok(DispersionReport {
        naive: naive_cv(data)?,
        auxiliary: dispersion_test_auxiliary(data, AuxiliaryForm::Linear)?,
        lr: dispersion_test_lr(data)?,
    })
}

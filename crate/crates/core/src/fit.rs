//! Maximum-likelihood fitting of count models and BIC model selection.
//!
//! All models are intercept-only: the data are a single stream of counts and
//! the fit recovers the marginal distribution, not a regression. Poisson has
//! a closed-form MLE; the other families are maximized numerically on
//! unconstrained transforms (log mean, log shape, logit inflation) with a
//! small set of deterministic multistarts.

use crate::dist::{CountModel, Family};
use crate::error::{Error, Result};
use crate::optim::{minimize, DEFAULT_FTOL, DEFAULT_MAX_ITER};

const MU_MIN: f64 = 1e-9;
const MU_MAX: f64 = 1e9;
const K_MIN: f64 = 1e-6;
const K_MAX: f64 = 1e6;
const THETA_MIN: f64 = 1e-9;
const THETA_MAX: f64 = 1.0 - 1e-9;

/// Estimates near these clamps mean the family has effectively collapsed to
/// a simpler one; the fit still returns but carries a warning.
const THETA_BOUNDARY: f64 = 1e-6;
const K_BOUNDARY: f64 = 1e4;

/// A fitted count model with its fit diagnostics.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: CountModel,
    pub loglik: f64,
    pub bic: f64,
    /// Component mean of the count part, not deflated by zero inflation.
    pub mean_hat: f64,
    /// 95% interval for the component mean, absent when the observed
    /// information is not invertible at the optimum.
    pub mean_ci: Option<(f64, f64)>,
    /// Success probability k(1-theta)/(mu + k(1-theta)) for families with a
    /// shape parameter, absent otherwise.
    pub p_hat: Option<f64>,
    pub n_obs: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// Result of fitting several families to the same data.
#[derive(Debug, Clone)]
pub struct ModelSelection {
    /// Successful fits, best BIC first.
    pub ranked: Vec<FitResult>,
    /// One note per family that failed to fit.
    pub failed: Vec<String>,
}

impl ModelSelection {
    pub fn best(&self) -> &FitResult {
        &self.ranked[0]
    }
}

/// Counts compressed to (value, multiplicity) pairs so a log-likelihood pass
/// costs one pmf evaluation per distinct value.
struct Histogram {
    bins: Vec<(u64, f64)>,
    n: usize,
    mean: f64,
    /// Sample variance with denominator N (matches the moment estimators).
    var_n: f64,
    zero_fraction: f64,
}

impl Histogram {
    fn build(data: &[u64]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Data("no observations to fit".into()));
        }
        let mut map = std::collections::BTreeMap::new();
        for &y in data {
            *map.entry(y).or_insert(0u64) += 1;
        }
        let n = data.len();
        let nf = n as f64;
        let mean = data.iter().map(|&y| y as f64).sum::<f64>() / nf;
        let var_n = data
            .iter()
            .map(|&y| {
                let d = y as f64 - mean;
                d * d
            })
            .sum::<f64>()
            / nf;
        let zeros = *map.get(&0).unwrap_or(&0);
        Ok(Self {
            bins: map.into_iter().map(|(y, c)| (y, c as f64)).collect(),
            n,
            mean,
            var_n,
            zero_fraction: zeros as f64 / nf,
        })
    }

    fn loglik(&self, model: &CountModel) -> f64 {
        self.bins
            .iter()
            .map(|&(y, c)| c * model.ln_pmf(y))
            .sum()
    }
}

/// Exact log-likelihood of a model on raw counts.
pub fn log_likelihood(model: &CountModel, data: &[u64]) -> Result<f64> {
    Ok(Histogram::build(data)?.loglik(model))
}

fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn unpack_mu(t: f64) -> f64 {
    t.exp().clamp(MU_MIN, MU_MAX)
}

fn unpack_k(t: f64) -> f64 {
    t.exp().clamp(K_MIN, K_MAX)
}

fn unpack_theta(t: f64) -> f64 {
    logistic(t).clamp(THETA_MIN, THETA_MAX)
}

fn model_from_coords(family: Family, x: &[f64]) -> CountModel {
    match family {
        Family::Poisson => CountModel::Poisson { mu: unpack_mu(x[0]) },
        Family::NegBinomial => CountModel::NegBinomial {
            mu: unpack_mu(x[0]),
            k: unpack_k(x[1]),
        },
        Family::ZiPoisson => CountModel::ZiPoisson {
            mu: unpack_mu(x[0]),
            theta: unpack_theta(x[1]),
        },
        Family::ZiNegBinomial => CountModel::ZiNegBinomial {
            mu: unpack_mu(x[0]),
            k: unpack_k(x[1]),
            theta: unpack_theta(x[2]),
        },
    }
}

/// Moment-flavored starting points on the transformed scale. All are fixed
/// functions of the data, so a refit is bit-reproducible.
fn starting_points(family: Family, hist: &Histogram) -> Vec<Vec<f64>> {
    let ybar = hist.mean.max(1e-3);
    let s2 = hist.var_n;
    // moment shape from var = mu + mu^2/k, floored when not overdispersed
    let k_mm = if s2 > ybar {
        (ybar * ybar / (s2 - ybar)).clamp(1e-3, 1e3)
    } else {
        10.0
    };
    // crude inflation start from the excess of zeros over a Poisson at ybar
    let p0 = hist.zero_fraction;
    let e0 = (-ybar).exp();
    let theta0 = ((p0 - e0) / (1.0 - e0)).clamp(0.02, 0.9);
    let mu_defl = (ybar / (1.0 - theta0)).max(1e-3);

    match family {
        Family::Poisson => vec![vec![ybar.ln()]],
        Family::NegBinomial => vec![
            vec![ybar.ln(), k_mm.ln()],
            vec![ybar.ln(), 0.0],
            vec![(1.2 * ybar).ln(), (0.25 * k_mm).max(1e-3).ln()],
        ],
        Family::ZiPoisson => vec![
            vec![mu_defl.ln(), logit(theta0)],
            vec![ybar.ln(), logit(0.1)],
            vec![(1.5 * mu_defl).ln(), logit((0.5 * theta0).max(0.01))],
        ],
        Family::ZiNegBinomial => vec![
            vec![mu_defl.ln(), k_mm.ln(), logit(theta0)],
            vec![ybar.ln(), 0.0, logit(0.1)],
            vec![
                (1.3 * mu_defl).ln(),
                (0.5 * k_mm).max(1e-3).ln(),
                logit((1.3 * theta0).min(0.95)),
            ],
        ],
    }
}

/// Numerically differenced Hessian of `f` at `x` (central differences).
fn numeric_hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let step: Vec<f64> = x.iter().map(|&v| 5e-4 * (1.0 + v.abs())).collect();
    let mut h = vec![vec![0.0; n]; n];
    let f0 = f(x);
    let at = |deltas: &[(usize, f64)]| {
        let mut v = x.to_vec();
        for &(i, d) in deltas {
            v[i] += d;
        }
        f(&v)
    };
    for i in 0..n {
        let hi = step[i];
        h[i][i] = (at(&[(i, hi)]) - 2.0 * f0 + at(&[(i, -hi)])) / (hi * hi);
        for j in (i + 1)..n {
            let hj = step[j];
            let v = (at(&[(i, hi), (j, hj)]) - at(&[(i, hi), (j, -hj)])
                - at(&[(i, -hi), (j, hj)])
                + at(&[(i, -hi), (j, -hj)]))
                / (4.0 * hi * hj);
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    h
}

/// Invert a small symmetric matrix by Gauss-Jordan elimination with partial
/// pivoting. Returns None when a pivot degenerates.
fn invert(mut a: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv = vec![vec![0.0; n]; n];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap())?;
        if a[pivot_row][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let pivot = a[col][col];
        for j in 0..n {
            a[col][j] /= pivot;
            inv[col][j] /= pivot;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                a[row][j] -= factor * a[col][j];
                inv[row][j] -= factor * inv[col][j];
            }
        }
    }
    if inv.iter().flatten().all(|v| v.is_finite()) {
        Some(inv)
    } else {
        None
    }
}

fn p_hat_of(model: &CountModel) -> Option<f64> {
    model.k().map(|k| {
        let scaled = k * (1.0 - model.theta());
        scaled / (model.mu() + scaled)
    })
}

fn boundary_warnings(model: &CountModel) -> Vec<String> {
    let mut w = Vec::new();
    match model {
        CountModel::ZiPoisson { theta, .. } | CountModel::ZiNegBinomial { theta, .. }
            if *theta < THETA_BOUNDARY =>
        {
            w.push(format!(
                "zero-inflation estimate {theta:.2e} sits at the boundary; the data show no \
                 excess zeros and the uninflated family describes them equally well"
            ));
        }
        _ => {}
    }
    if let Some(k) = model.k() {
        if k > K_BOUNDARY {
            w.push(format!(
                "shape estimate {k:.2e} is effectively infinite; the counts are not \
                 overdispersed and the Poisson limit applies"
            ));
        }
    }
    w
}

/// Closed-form Poisson fit: mean estimate ybar, profile interval from the
/// Fisher information 1/(N ybar) of the log mean.
fn fit_poisson(hist: &Histogram) -> Result<FitResult> {
    let mu = hist.mean;
    if mu <= 0.0 {
        return Err(Error::Convergence {
            family: Family::Poisson,
            detail: "all counts are zero; the mean estimate degenerates to the boundary".into(),
        });
    }
    let model = CountModel::Poisson { mu };
    let loglik = hist.loglik(&model);
    let n = hist.n as f64;
    let se_ln_mu = 1.0 / (n * mu).sqrt();
    let half = (1.96 * se_ln_mu).exp();
    let q = model.free_param_count() as f64;
    Ok(FitResult {
        model,
        loglik,
        bic: -2.0 * loglik + q * n.ln(),
        mean_hat: mu,
        mean_ci: Some((mu / half, mu * half)),
        p_hat: None,
        n_obs: hist.n,
        converged: true,
        warnings: Vec::new(),
    })
}

/// Fit one family to the counts by maximum likelihood.
pub fn fit(family: Family, data: &[u64]) -> Result<FitResult> {
    let hist = Histogram::build(data)?;
    if hist.mean <= 0.0 {
        return Err(Error::Convergence {
            family,
            detail: "all counts are zero; no count model is identifiable".into(),
        });
    }
    if family == Family::Poisson {
        return fit_poisson(&hist);
    }

    let objective = |x: &[f64]| -hist.loglik(&model_from_coords(family, x));
    let mut best: Option<crate::optim::OptimResult> = None;
    let mut any_converged = false;
    for start in starting_points(family, &hist) {
        let r = minimize(&objective, &start, DEFAULT_FTOL, DEFAULT_MAX_ITER);
        any_converged |= r.converged && r.fx.is_finite();
        let better = match &best {
            Some(b) => r.fx < b.fx,
            None => true,
        };
        if better {
            best = Some(r);
        }
    }
    let best = best.expect("at least one start");
    if !any_converged || !best.fx.is_finite() {
        return Err(Error::Convergence {
            family,
            detail: format!(
                "no simplex start reached the {DEFAULT_FTOL:.0e} objective tolerance within \
                 {DEFAULT_MAX_ITER} iterations"
            ),
        });
    }

    let model = model_from_coords(family, &best.x);
    let loglik = -best.fx;
    let mut warnings = boundary_warnings(&model);

    // observed information on the transformed scale; the log-mean coordinate
    // is first for every family
    let hessian = numeric_hessian(&objective, &best.x);
    let mean_ci = match invert(hessian) {
        Some(cov) if cov[0][0] > 0.0 && cov[0][0].is_finite() => {
            let half = (1.96 * cov[0][0].sqrt()).exp();
            Some((model.mu() / half, model.mu() * half))
        }
        _ => {
            warnings.push(
                "observed information is not positive definite at the optimum; \
                 no mean interval is reported"
                    .into(),
            );
            None
        }
    };

    let n = hist.n as f64;
    let q = model.free_param_count() as f64;
    Ok(FitResult {
        mean_hat: model.mu(),
        p_hat: p_hat_of(&model),
        bic: -2.0 * loglik + q * n.ln(),
        model,
        loglik,
        mean_ci,
        n_obs: hist.n,
        converged: true,
        warnings,
    })
}

/// Fit every requested family and rank the successes by BIC.
pub fn select_model(data: &[u64], families: &[Family]) -> Result<ModelSelection> {
    let mut ranked = Vec::new();
    let mut failed = Vec::new();
    for &family in families {
        match fit(family, data) {
            Ok(r) => ranked.push(r),
            Err(e) => failed.push(format!("{family}: {e}")),
        }
    }
    if ranked.is_empty() {
        return Err(Error::Data(format!(
            "no family could be fitted: {}",
            failed.join("; ")
        )));
    }
    ranked.sort_by(|a, b| a.bic.partial_cmp(&b.bic).unwrap());
    Ok(ModelSelection { ranked, failed })
}

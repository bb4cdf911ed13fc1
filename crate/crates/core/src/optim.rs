//! Derivative-free minimization of smooth low-dimensional objectives.
//!
//! Likelihood surfaces here have at most three free coordinates and get
//! optimized on transformed scales where they are smooth, so a plain
//! Nelder-Mead simplex with standard coefficients is adequate and avoids
//! hand-coding gradients for each family.

/// Outcome of a simplex minimization.
#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: u32,
    pub converged: bool,
}

/// Relative spread of the best and worst simplex values at which the search
/// stops.
pub const DEFAULT_FTOL: f64 = 1e-8;
/// Iteration cap; surfaces this small converge orders of magnitude sooner.
pub const DEFAULT_MAX_ITER: u32 = 10_000;

const ALPHA: f64 = 1.0; // reflection
const GAMMA: f64 = 2.0; // expansion
const RHO: f64 = 0.5; // contraction
const SIGMA: f64 = 0.5; // shrink

/// Minimize `f` starting from `x0` with the Nelder-Mead simplex method.
///
/// Objective values that come back NaN are treated as positive infinity, so
/// the simplex retreats from invalid regions instead of corrupting the
/// ordering.
pub fn minimize<F>(f: F, x0: &[f64], ftol: f64, max_iter: u32) -> OptimResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    assert!(n > 0, "empty starting point");
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    // initial simplex: perturb each coordinate by 5%, or a small absolute
    // step where the coordinate is zero
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] = if v[i] != 0.0 { 1.05 * v[i] } else { 0.00025 };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;

        // order the simplex best-first
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let reordered: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
        let revalues: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = revalues;

        let (f_best, f_worst) = (values[0], values[n]);
        let spread = 2.0 * (f_worst - f_best).abs() / (f_worst.abs() + f_best.abs() + f64::MIN_POSITIVE);
        // require the vertices to agree in position too, or a simplex
        // straddling a minimum symmetrically would stop on equal values
        let mut diameter = 0.0f64;
        let mut scale = 1.0f64;
        for v in simplex.iter().skip(1) {
            for (&a, &b) in v.iter().zip(&simplex[0]) {
                diameter = diameter.max((a - b).abs());
                scale = scale.max(b.abs());
            }
        }
        if spread <= ftol && diameter <= 1e-7 * scale && f_worst.is_finite() {
            converged = true;
            break;
        }

        // centroid of all but the worst vertex
        let mut centroid = vec![0.0; n];
        for v in simplex.iter().take(n) {
            for (c, &x) in centroid.iter_mut().zip(v) {
                *c += x;
            }
        }
        for c in &mut centroid {
            *c /= n as f64;
        }

        let blend = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(&x, &y)| x + t * (y - x)).collect()
        };

        // reflect the worst vertex through the centroid
        let reflected = blend(&centroid, &simplex[n], -ALPHA);
        let f_reflected = eval(&reflected);

        if f_reflected < values[0] {
            let expanded = blend(&centroid, &simplex[n], -GAMMA);
            let f_expanded = eval(&expanded);
            if f_expanded < f_reflected {
                simplex[n] = expanded;
                values[n] = f_expanded;
            } else {
                simplex[n] = reflected;
                values[n] = f_reflected;
            }
            continue;
        }
        if f_reflected < values[n - 1] {
            simplex[n] = reflected;
            values[n] = f_reflected;
            continue;
        }

        // contract toward the better of worst and reflected
        let (toward, f_toward) = if f_reflected < values[n] {
            (&reflected, f_reflected)
        } else {
            (&simplex[n], values[n])
        };
        let contracted = blend(&centroid, toward, RHO);
        let f_contracted = eval(&contracted);
        if f_contracted < f_toward {
            simplex[n] = contracted;
            values[n] = f_contracted;
            continue;
        }

        // shrink everything toward the best vertex
        let best = simplex[0].clone();
        for i in 1..=n {
            simplex[i] = blend(&best, &simplex[i], SIGMA);
            values[i] = eval(&simplex[i]);
        }
    }

    OptimResult {
        x: simplex[0].clone(),
        fx: values[0],
        iterations,
        converged,
    }
}

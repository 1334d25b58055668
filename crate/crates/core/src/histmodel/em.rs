use super::{Histogram, HistogramModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    pub max_iterations: usize,
    /// Stop once every parameter changes by less than this, relative.
    pub tolerance: f64,
    /// Lower bound on both standard deviations, in gray levels.
    pub sigma_floor: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions {
            max_iterations: 50,
            tolerance: 1e-4,
            sigma_floor: 0.5,
        }
    }
}

/// Result of an EM run, with the model after every iteration.
#[derive(Debug, Clone)]
pub struct EmTrace {
    pub model: HistogramModel,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<HistogramModel>,
}

/// Fits the mixture to `h` by expectation-maximization from `init`.
pub fn em_fit(h: &Histogram, init: &HistogramModel) -> Result<HistogramModel> {
    em_fit_with(h, init, &EmOptions::default()).map(|t| t.model)
}

pub fn em_fit_with(h: &Histogram, init: &HistogramModel, opts: &EmOptions) -> Result<EmTrace> {
    init.validate()?;
    let bins: Vec<(f64, f64)> = h
        .counts()
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (i as f64, c as f64 / h.total() as f64))
        .collect();

    let mut model = *init;
    let mut history = Vec::new();
    let mut converged = false;
    let mut weights = vec![(0.0, 0.0, 0.0); bins.len()];

    for _ in 0..opts.max_iterations {
        // E-step: share of each term in the model density per bin.
        for (w, &(i, _)) in weights.iter_mut().zip(&bins) {
            let t = model.terms(i);
            let total = t.total();
            *w = if total > 1e-300 {
                (t.nb / total, t.ib / total, t.f / total)
            } else if ((i - model.mu_b) / model.sigma_b).abs() <= ((i - model.mu_f) / model.sigma_f).abs() {
                (1.0, 0.0, 0.0)
            } else {
                (0.0, 0.0, 1.0)
            };
        }

        // M-step: weighted moments normalized by the class mass.
        let moments = |pick: fn(&(f64, f64, f64)) -> f64| {
            let mass: f64 = weights.iter().zip(&bins).map(|(w, &(_, hi))| pick(w) * hi).sum();
            if mass <= 0.0 {
                return (0.0, f64::NAN, f64::NAN);
            }
            let mean = weights.iter().zip(&bins).map(|(w, &(i, hi))| i * pick(w) * hi).sum::<f64>() / mass;
            let var = weights
                .iter()
                .zip(&bins)
                .map(|(w, &(i, hi))| (i - mean).powi(2) * pick(w) * hi)
                .sum::<f64>()
                / mass;
            (mass, mean, var.sqrt())
        };
        let (p_b, mu_b, sigma_b) = moments(|w| w.0);
        let (p_f, mu_f, sigma_f) = moments(|w| w.2);
        if !(p_b > 1e-6 && p_f > 1e-6) || !(mu_b.is_finite() && mu_f.is_finite()) || mu_f <= mu_b {
            return Err(Error::FitFailure(format!(
                "degenerate mixture after {} iteration(s): p_b={p_b:.3e}, p_f={p_f:.3e}",
                history.len()
            )));
        }
        let sigma_b = sigma_b.max(opts.sigma_floor);
        let sigma_f = sigma_f.max(opts.sigma_floor);

        // Blur rate from the illuminated-background mass in its truncated range:
        // the halo integrates to alpha * p_f * ln(eps)^2 over that range.
        let span = mu_f - mu_b;
        let eps = 2.0 * sigma_b / span;
        let alpha = if eps < 1.0 {
            let lo = mu_b + 2.0 * sigma_b;
            let ib_mass: f64 = weights
                .iter()
                .zip(&bins)
                .filter(|(_, &(i, _))| i >= lo && i <= mu_f - 1.0)
                .map(|(w, &(_, hi))| w.1 * hi)
                .sum();
            ib_mass / (p_f * eps.ln().powi(2))
        } else {
            model.alpha
        };

        let next = HistogramModel {
            p_b,
            mu_b,
            sigma_b,
            p_f,
            mu_f,
            sigma_f,
            alpha,
        };
        let change = max_relative_change(&model, &next);
        model = next;
        history.push(model);
        if change < opts.tolerance {
            converged = true;
            break;
        }
    }
    model.validate().map_err(|e| Error::FitFailure(e.to_string()))?;
    Ok(EmTrace {
        model,
        iterations: history.len(),
        converged,
        history,
    })
}

fn max_relative_change(a: &HistogramModel, b: &HistogramModel) -> f64 {
    let pa = [a.p_b, a.mu_b, a.sigma_b, a.p_f, a.mu_f, a.sigma_f, a.alpha];
    let pb = [b.p_b, b.mu_b, b.sigma_b, b.p_f, b.mu_f, b.sigma_f, b.alpha];
    pa.iter()
        .zip(pb)
        .map(|(&x, y)| {
            let d = (x - y).abs();
            if d == 0.0 {
                0.0
            } else {
                d / x.abs().max(1e-12)
            }
        })
        .fold(0.0, f64::max)
}

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Histogram;
use crate::error::{Error, Result};

/// Lower clamp for background posteriors, keeping `-ln P` finite.
pub const POSTERIOR_FLOOR: f64 = 1e-9;

/// Mixture of a non-illuminated background (normal), an illuminated
/// background halo, and a foreground (normal) over gray levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramModel {
    pub p_b: f64,
    pub mu_b: f64,
    pub sigma_b: f64,
    pub p_f: f64,
    pub mu_f: f64,
    pub sigma_f: f64,
    /// Decline rate of the illuminated background.
    pub alpha: f64,
}

/// The three model densities at one gray level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelTerms {
    pub nb: f64,
    pub ib: f64,
    pub f: f64,
}

impl ModelTerms {
    /// Combined background density `NB + IB`.
    pub fn background(&self) -> f64 {
        self.nb + self.ib
    }

    pub fn total(&self) -> f64 {
        self.nb + self.ib + self.f
    }
}

fn scaled_normal(p: f64, mu: f64, sigma: f64, i: f64) -> f64 {
    p / ((2.0 * PI).sqrt() * sigma) * (-(i - mu).powi(2) / (2.0 * sigma * sigma)).exp()
}

impl HistogramModel {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("p_b", self.p_b),
            ("mu_b", self.mu_b),
            ("sigma_b", self.sigma_b),
            ("p_f", self.p_f),
            ("mu_f", self.mu_f),
            ("sigma_f", self.sigma_f),
            ("alpha", self.alpha),
        ];
        if let Some((name, _)) = all.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(*name, "must be finite"));
        }
        for (name, p) in [("p_b", self.p_b), ("p_f", self.p_f)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(name, format!("prior {p} outside [0, 1]")));
            }
        }
        let mass = self.p_b + self.p_f;
        if !(mass > 0.0 && mass <= 1.0001) {
            return Err(Error::invalid("p_b + p_f", format!("{mass} outside (0, 1.0001]")));
        }
        if self.mu_b >= self.mu_f {
            return Err(Error::invalid("mu_f", "foreground mean must exceed background mean"));
        }
        if self.sigma_b <= 0.0 {
            return Err(Error::invalid("sigma_b", "must be positive"));
        }
        if self.sigma_f <= 0.0 {
            return Err(Error::invalid("sigma_f", "must be positive"));
        }
        if self.alpha < 0.0 {
            return Err(Error::invalid("alpha", "must be non-negative"));
        }
        Ok(())
    }

    /// Gray-level range `[lo, hi)` on which the illuminated background is
    /// evaluated; empty when `2 sigma_b >= mu_f - mu_b`.
    pub fn ib_range(&self) -> (f64, f64) {
        (self.mu_b + 2.0 * self.sigma_b, self.mu_f)
    }

    /// Densities at gray level `i` (no range check).
    pub fn terms(&self, i: f64) -> ModelTerms {
        let nb = scaled_normal(self.p_b, self.mu_b, self.sigma_b, i);
        let f = scaled_normal(self.p_f, self.mu_f, self.sigma_f, i);
        let (lo, hi) = self.ib_range();
        let ib = if i >= lo && i < hi {
            let x = i - self.mu_b;
            2.0 * self.alpha * self.p_f / x * ((self.mu_f - self.mu_b) / x).ln()
        } else {
            0.0
        };
        ModelTerms { nb, ib, f }
    }

    /// Densities at gray level `i` of a histogram with levels `0..=max_level`.
    pub fn eval(&self, i: f64, max_level: u32) -> Result<ModelTerms> {
        if !(i >= 0.0 && i <= max_level as f64) {
            return Err(Error::invalid(
                "gray level",
                format!("{i} outside [0, {max_level}]"),
            ));
        }
        Ok(self.terms(i))
    }

    /// Total mass of the illuminated background term over its support.
    ///
    /// Substituting `u = ln((mu_f - mu_b) / x)` turns the integral into
    /// `alpha * p_f * ln(eps)^2` with `eps = 2 sigma_b / (mu_f - mu_b)`.
    pub fn ib_mass(&self) -> f64 {
        let span = self.mu_f - self.mu_b;
        let eps = 2.0 * self.sigma_b / span;
        if eps >= 1.0 {
            return 0.0;
        }
        self.alpha * self.p_f * eps.ln().powi(2)
    }

    /// Smallest integer gray level in `(mu_b, mu_f]` where the foreground
    /// density reaches the combined background density. Voxels strictly
    /// above it are foreground.
    pub fn threshold(&self) -> Result<u32> {
        self.validate()?;
        let start = (self.mu_b.floor() + 1.0).max(0.0) as u64;
        let end = self.mu_f.floor().max(0.0) as u64;
        (start..=end)
            .find(|&i| {
                let t = self.terms(i as f64);
                t.f >= t.background()
            })
            .map(|i| i as u32)
            .ok_or_else(|| {
                Error::FitFailure(format!(
                    "no foreground/background crossover in ({}, {}]",
                    self.mu_b, self.mu_f
                ))
            })
    }

    /// `P(B | i) = B(i) / h_model(i)`, clamped to `[POSTERIOR_FLOOR, 1]`.
    ///
    /// Where every density underflows, the level goes to whichever normal
    /// component is nearer in standard deviations.
    pub fn background_posterior(&self, i: f64) -> f64 {
        let t = self.terms(i);
        let total = t.total();
        let p = if total > 0.0 && total.is_finite() {
            t.background() / total
        } else if ((i - self.mu_b) / self.sigma_b).abs() <= ((i - self.mu_f) / self.sigma_f).abs() {
            1.0
        } else {
            0.0
        };
        p.clamp(POSTERIOR_FLOOR, 1.0)
    }

    /// Draws `n` gray levels from the normalized model and bins them into
    /// levels `0..=max_level` (samples are rounded and clamped).
    pub fn sample_histogram<R: Rng>(&self, n: u64, max_level: u32, rng: &mut R) -> Result<Histogram> {
        self.validate()?;
        let nb = Normal::new(self.mu_b, self.sigma_b).map_err(|e| Error::invalid("sigma_b", e.to_string()))?;
        let fg = Normal::new(self.mu_f, self.sigma_f).map_err(|e| Error::invalid("sigma_f", e.to_string()))?;
        let ib_mass = self.ib_mass();
        let total = self.p_b + self.p_f + ib_mass;
        let span = self.mu_f - self.mu_b;
        let log_range = if ib_mass > 0.0 { -(2.0 * self.sigma_b / span).ln() } else { 0.0 };
        let mut counts = vec![0u64; max_level as usize + 1];
        for _ in 0..n {
            let u = rng.random::<f64>() * total;
            let x = if u < self.p_b {
                nb.sample(rng)
            } else if u < self.p_b + self.p_f {
                fg.sample(rng)
            } else {
                // Density in ln(span / x) is linear on [0, log_range].
                let s = log_range * rng.random::<f64>().sqrt();
                self.mu_b + span * (-s).exp()
            };
            let level = x.round().clamp(0.0, max_level as f64) as usize;
            counts[level] += 1;
        }
        Histogram::from_counts(counts)
    }
}

//! Fuzzy nucleus model: plausibility of a component from its volume and
//! sphericity, and the keep / discard / repartition decision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the nucleus model. Volumes are physical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NucleusModelParams {
    pub v_min: f64,
    pub v_max: f64,
    /// Relative width of the trapezoid shoulders.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_psi_min")]
    pub psi_min: f64,
    #[serde(default = "default_psi_ideal")]
    pub psi_ideal: f64,
    /// Imbalance factor of the partitioner; fixes the repartition bound.
    /// Configured with the partitioner, not here.
    #[serde(skip, default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_lambda() -> f64 {
    0.2
}
fn default_psi_min() -> f64 {
    0.81
}
fn default_psi_ideal() -> f64 {
    0.96
}
fn default_epsilon() -> f64 {
    0.5
}

impl NucleusModelParams {
    pub fn new(v_min: f64, v_max: f64) -> Self {
        NucleusModelParams {
            v_min,
            v_max,
            lambda: default_lambda(),
            psi_min: default_psi_min(),
            psi_ideal: default_psi_ideal(),
            epsilon: default_epsilon(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_min > 0.0 && self.v_min < self.v_max && self.v_max.is_finite()) {
            return Err(Error::invalid("v_min", format!("need 0 < v_min < v_max, got ({}, {})", self.v_min, self.v_max)));
        }
        if !(self.lambda > 0.0 && self.lambda < 0.5) {
            return Err(Error::invalid("lambda", format!("{} outside (0, 0.5)", self.lambda)));
        }
        if !(self.psi_min > 0.0 && self.psi_min < self.psi_ideal && self.psi_ideal <= 1.0) {
            return Err(Error::invalid(
                "psi_min",
                format!("need 0 < psi_min < psi_ideal <= 1, got ({}, {})", self.psi_min, self.psi_ideal),
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("epsilon", "must be positive"));
        }
        Ok(())
    }

    /// Knots of the volume trapezoid.
    pub fn volume_knots(&self) -> [f64; 4] {
        [
            self.v_min,
            (1.0 + self.lambda) * self.v_min,
            (1.0 - self.lambda) * self.v_max,
            self.v_max,
        ]
    }

    /// Smallest volume worth repartitioning: below it, no child of an
    /// epsilon-balanced split can reach `v_min`.
    pub fn repartition_volume(&self) -> f64 {
        2.0 * self.v_min / (1.0 + self.epsilon)
    }
}

/// Trapezoidal membership with knots `a <= b <= c <= d`: rises on `[a, b)`,
/// is 1 on `[b, c)`, falls on `[c, d)`, and is 0 elsewhere.
pub fn trapezoid(x: f64, [a, b, c, d]: [f64; 4]) -> Result<f64> {
    if !(a <= b && b <= c && c <= d) {
        return Err(Error::invalid("knots", format!("unordered trapezoid ({a}, {b}, {c}, {d})")));
    }
    Ok(if x < a || x >= d {
        0.0
    } else if x < b {
        (x - a) / (b - a)
    } else if x < c {
        1.0
    } else {
        (d - x) / (d - c)
    })
}

/// Quadratic ramp from 0 at `psi_min` to 1 at `psi_ideal`.
pub fn sphericity_membership(psi: f64, p: &NucleusModelParams) -> f64 {
    if psi <= p.psi_min {
        0.0
    } else if psi < p.psi_ideal {
        ((psi - p.psi_min) / (p.psi_ideal - p.psi_min)).powi(2)
    } else {
        1.0
    }
}

pub fn volume_membership(v: f64, p: &NucleusModelParams) -> f64 {
    // Knots from validated params are ordered.
    trapezoid(v, p.volume_knots()).unwrap_or(0.0)
}

/// Product of the volume and sphericity memberships.
pub fn component_score(v: f64, psi: f64, p: &NucleusModelParams) -> f64 {
    volume_membership(v, p) * sphericity_membership(psi, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Keep,
    Discard,
    Repartition,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredDecision {
    pub decision: Decision,
    pub score: f64,
}

/// True when a child with score `s_child` is more likely a nucleus than its
/// parent with score `s_parent`: `s_child * (1 - s_parent) > s_parent`.
pub fn child_beats_parent(s_child: f64, s_parent: f64) -> bool {
    s_child * (1.0 - s_parent) > s_parent
}

/// Decides the fate of a component with physical volume `v`.
///
/// `psi` is evaluated lazily, only for components at or above `v_min`.
pub fn decide(v: f64, psi: impl FnOnce() -> f64, s_parent: f64, p: &NucleusModelParams) -> ScoredDecision {
    if v < p.v_min {
        return ScoredDecision {
            decision: Decision::Discard,
            score: 0.0,
        };
    }
    let score = component_score(v, psi(), p);
    let decision = if score > 0.5 {
        Decision::Keep
    } else if v >= p.repartition_volume() {
        Decision::Repartition
    } else if child_beats_parent(score, s_parent) {
        Decision::Keep
    } else {
        Decision::Discard
    };
    ScoredDecision { decision, score }
}

//! Reliability-function curves and the finite-`k` rate approximations.

use serde::{Deserialize, Serialize};

use crate::channel::Dmc;
use crate::error::{Error, Result};
use crate::source::SourceSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityCurves {
    pub capacity: f64,
    pub c1: f64,
    pub entropy_rate: f64,
    pub arrival_rate: f64,
    /// Rate solving `E(R) = (R/k) ln(1/eps)`.
    pub approx_rate: f64,
    /// Same equation with the buffer-then-transmit exponent.
    pub buffer_bound_rate: f64,
}

impl ReliabilityCurves {
    /// `E(R) = C1 (1 - H R / C)`, clamped at 0 beyond `C/H`.
    pub fn exponent(&self, rate: f64) -> f64 {
        (self.c1 * (1.0 - self.entropy_rate * rate / self.capacity)).max(0.0)
    }

    /// `C1 (1 - (H/C + 1/f) R)`, clamped at 0.
    pub fn buffer_exponent(&self, rate: f64) -> f64 {
        let slope = self.entropy_rate / self.capacity + 1.0 / self.arrival_rate;
        (self.c1 * (1.0 - slope * rate)).max(0.0)
    }

    /// `C/H`, where the exponent vanishes.
    pub fn max_rate(&self) -> f64 {
        self.capacity / self.entropy_rate
    }

    /// `(R, E(R), buffer exponent)` on `points` evenly spaced rates in
    /// `(0, C/H]`.
    pub fn table(&self, points: usize) -> Vec<(f64, f64, f64)> {
        (1..=points)
            .map(|i| {
                let r = self.max_rate() * i as f64 / points as f64;
                (r, self.exponent(r), self.buffer_exponent(r))
            })
            .collect()
    }
}

pub fn reliability_curves(dmc: &Dmc, spec: &SourceSpec, k: usize, eps: f64) -> Result<ReliabilityCurves> {
    if !dmc.is_non_degenerate() {
        return Err(Error::DegenerateChannel);
    }
    if k == 0 || !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidConfig("need k >= 1 and 0 < eps < 1".into()));
    }
    let d = spec.describe();
    let (c, c1, h, f) = (dmc.capacity(), dmc.max_kl_divergence(), d.entropy_rate, d.arrival_rate);
    let per_symbol = (1.0 / eps).ln() / k as f64;
    Ok(ReliabilityCurves {
        capacity: c,
        c1,
        entropy_rate: h,
        arrival_rate: f,
        approx_rate: c1 / (per_symbol + c1 * h / c),
        buffer_bound_rate: c1 / (per_symbol + c1 * (h / c + 1.0 / f)),
    })
}

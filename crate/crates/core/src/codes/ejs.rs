//! Extrinsic Jensen-Shannon divergence and the exhaustive MaxEJS encoder.

use crate::channel::{kl_divergence, Dmc};
use crate::error::{Error, Result};

/// Largest number of deterministic maps searched by default.
pub const MAXEJS_DEFAULT_CAP: u64 = 1 << 16;

const TIE_TOL: f64 = 1e-12;

/// `sum_i rho_i D(P_{Y|gamma(i)} || sum_{j != i} rho_j/(1-rho_i) P_{Y|gamma(j)})`.
/// Items with `rho_i` in `{0, 1}` contribute nothing.
pub fn ejs_divergence(posteriors: &[f64], map: &[usize], dmc: &Dmc) -> Result<f64> {
    if !dmc.is_non_degenerate() {
        return Err(Error::DegenerateChannel);
    }
    if posteriors.len() != map.len() {
        return Err(Error::DimensionMismatch { expected: posteriors.len(), found: map.len() });
    }
    let rows = dmc.transition();
    let ny = dmc.output_size();
    let mut mix = vec![0.0; ny];
    for (&r, &x) in posteriors.iter().zip(map) {
        if x >= dmc.input_size() {
            return Err(Error::IndexOutOfRange { index: x, size: dmc.input_size() });
        }
        for (m, &p) in mix.iter_mut().zip(&rows[x]) {
            *m += r * p;
        }
    }
    let mut total = 0.0;
    let mut others = vec![0.0; ny];
    for (&r, &x) in posteriors.iter().zip(map) {
        if r <= 0.0 || r >= 1.0 {
            continue;
        }
        for ((o, &m), &p) in others.iter_mut().zip(&mix).zip(&rows[x]) {
            *o = ((m - r * p) / (1.0 - r)).max(0.0);
        }
        total += r * kl_divergence(&rows[x], &others);
    }
    Ok(total)
}

/// Deterministic map maximizing the EJS divergence, searched exhaustively
/// over all `|X|^n` maps in lexicographic order; ties (within 1e-12) keep
/// the earlier map.
pub fn maxejs_encoder_step(posteriors: &[f64], dmc: &Dmc, cap: u64) -> Result<Vec<usize>> {
    if !dmc.is_non_degenerate() {
        return Err(Error::DegenerateChannel);
    }
    let n = posteriors.len();
    let nx = dmc.input_size();
    let size = (nx as f64).powi(n as i32);
    if size > cap as f64 {
        return Err(Error::SearchSpaceTooLarge { size, cap });
    }
    let mut map = vec![0usize; n];
    let mut best = (ejs_divergence(posteriors, &map, dmc)?, map.clone());
    loop {
        // Odometer increment, last item fastest.
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(best.1);
            }
            pos -= 1;
            map[pos] += 1;
            if map[pos] < nx {
                break;
            }
            map[pos] = 0;
        }
        let v = ejs_divergence(posteriors, &map, dmc)?;
        if v > best.0 + TIE_TOL {
            best = (v, map.clone());
        }
    }
}

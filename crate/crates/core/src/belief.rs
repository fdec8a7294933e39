//! Exact prior/posterior bookkeeping over every candidate sequence in
//! `[q]^{N(t)}`. Exponential in the sequence length; used for small
//! instances and as the reference for the type engine.

use std::collections::BTreeMap;

use crate::channel::Dmc;
use crate::error::{Error, Result};
use crate::source::SourceSpec;

/// Largest number of sequences the dense engine will allocate.
pub const MAX_DENSE_SIZE: u128 = 1 << 26;

const NORM_TOL: f64 = 1e-9;

/// `q^len` as a 128-bit index-space size.
pub fn domain_size(q: usize, len: usize) -> Result<u128> {
    u32::try_from(len).ok().and_then(|l| (q as u128).checked_pow(l)).ok_or(Error::LengthOverflow { len, q })
}

/// Base-`q` lexicographic index of a symbol sequence.
pub fn seq_to_index(seq: &[usize], q: usize) -> u128 {
    seq.iter().fold(0u128, |acc, &s| acc * q as u128 + s as u128)
}

/// Inverse of [`seq_to_index`].
pub fn index_to_seq(mut index: u128, len: usize, q: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = (index % q as u128) as usize;
        index /= q as u128;
    }
    out
}

fn seq_label(index: u128, len: usize, q: usize) -> String {
    let digits = index_to_seq(index, len, q);
    if q <= 10 {
        digits.iter().map(|d| char::from(b'0' + *d as u8)).collect()
    } else {
        digits.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(".")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Prior,
    Posterior,
}

/// Likelihood of `y` for each group `z`: `P(y|z)` without a kernel, or
/// `sum_x P(y|x) K(x|z)` with one.
pub fn group_likelihoods(dmc: &Dmc, y: usize, kernel: Option<&[Vec<f64>]>) -> Vec<f64> {
    match kernel {
        None => (0..dmc.input_size()).map(|x| dmc.prob(x, y)).collect(),
        Some(k) => k.iter().map(|row| row.iter().enumerate().map(|(x, &w)| w * dmc.prob(x, y)).sum()).collect(),
    }
}

/// Bayes denominator: `P*_Y(y)` for the randomized update (the transmitted
/// input is distributed as `P*_X`), `sum_x P(y|x) pi_x` otherwise.
pub fn evidence(dmc: &Dmc, y: usize, group_priors: &[f64], kernel: Option<&[Vec<f64>]>) -> f64 {
    match kernel {
        Some(_) => dmc.cap_output_dist()[y],
        None => group_priors.iter().enumerate().map(|(x, &p)| p * dmc.prob(x, y)).sum(),
    }
}

#[derive(Debug, Clone)]
pub struct BeliefState {
    q: usize,
    seq_len: usize,
    probs: Vec<f64>,
    phase: Phase,
    last_norm: f64,
}

impl BeliefState {
    /// Unit mass on the empty history.
    pub fn new(q: usize) -> Self {
        BeliefState { q, seq_len: 0, probs: vec![1.0], phase: Phase::Posterior, last_norm: 1.0 }
    }

    /// State with explicit probabilities over `[q]^seq_len`.
    pub fn from_probs(q: usize, seq_len: usize, probs: Vec<f64>, phase: Phase) -> Result<Self> {
        let size = domain_size(q, seq_len)?;
        if size != probs.len() as u128 {
            return Err(Error::DimensionMismatch { expected: size as usize, found: probs.len() });
        }
        Ok(BeliefState { q, seq_len, probs, phase, last_norm: 1.0 })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Renormalization factor applied by the last update (1 when the Bayes
    /// denominator was exact).
    pub fn last_norm(&self) -> f64 {
        self.last_norm
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Priors after the symbols arrived by time `t`, capped at `cap` symbols.
    /// Identity when nothing new arrived.
    pub fn evolve_prior(&mut self, spec: &SourceSpec, t: u64, cap: usize) -> Result<()> {
        self.extend_to(spec, spec.n_of_t(t, cap))
    }

    /// Extends every sequence to `new_len` symbols, multiplying by the
    /// conditional law of the new symbols.
    pub fn extend_to(&mut self, spec: &SourceSpec, new_len: usize) -> Result<()> {
        self.phase = Phase::Prior;
        if new_len <= self.seq_len {
            return Ok(());
        }
        let size = domain_size(self.q, new_len)?;
        if size > MAX_DENSE_SIZE {
            return Err(Error::LengthOverflow { len: new_len, q: self.q });
        }
        let q = self.q;
        while self.seq_len < new_len {
            let mut next = Vec::with_capacity(self.probs.len() * q);
            for (i, &p) in self.probs.iter().enumerate() {
                let prev = (self.seq_len > 0).then_some(i % q);
                for s in 0..q {
                    next.push(p * spec.cond_prob(prev, s));
                }
            }
            self.probs = next;
            self.seq_len += 1;
        }
        Ok(())
    }

    /// `pi_x = sum_{i in G_x} theta_i`.
    pub fn group_prior(&self, assignment: &[usize], n_inputs: usize) -> Result<Vec<f64>> {
        if assignment.len() != self.probs.len() || assignment.iter().any(|&z| z >= n_inputs) {
            return Err(Error::IncompletePartition);
        }
        let mut pi = vec![0.0; n_inputs];
        for (&z, &p) in assignment.iter().zip(&self.probs) {
            pi[z] += p;
        }
        Ok(pi)
    }

    /// Posterior after observing `y`. Returns the renormalization factor.
    pub fn bayes_update(
        &mut self,
        assignment: &[usize],
        kernel: Option<&[Vec<f64>]>,
        dmc: &Dmc,
        y: usize,
    ) -> Result<f64> {
        let pi = self.group_prior(assignment, dmc.input_size())?;
        let lik = group_likelihoods(dmc, y, kernel);
        let denom = evidence(dmc, y, &pi, kernel);
        if denom <= 0.0 {
            return Err(Error::ZeroEvidence { y });
        }
        let mut total = 0.0;
        for (p, &z) in self.probs.iter_mut().zip(assignment) {
            *p *= lik[z] / denom;
            total += *p;
        }
        if total <= 0.0 {
            return Err(Error::ZeroEvidence { y });
        }
        if total != 1.0 {
            self.probs.iter_mut().for_each(|p| *p /= total);
        }
        self.last_norm = total;
        self.phase = Phase::Posterior;
        Ok(total)
    }

    /// Marginal of every length-`k` prefix.
    pub fn prefix_marginals(&self, k: usize) -> Vec<f64> {
        assert!(k <= self.seq_len, "prefix longer than the sequences");
        let block = self.q.pow((self.seq_len - k) as u32);
        self.probs.chunks(block).map(|c| c.iter().sum()).collect()
    }

    /// MAP estimate of the first `k` symbols (as an index) and its marginal;
    /// ties go to the smaller index.
    pub fn map_prefix_estimate(&self, k: usize) -> (u128, f64) {
        let m = self.prefix_marginals(k);
        let mut best = (0usize, m[0]);
        for (i, &v) in m.iter().enumerate().skip(1) {
            if v > best.1 {
                best = (i, v);
            }
        }
        (best.0 as u128, best.1)
    }

    pub fn stop_check(&self, k: usize, eps: f64) -> bool {
        self.seq_len >= k && self.map_prefix_estimate(k).1 >= 1.0 - eps
    }

    /// MAP estimate of `S^k` when only `seq_len < k` symbols have arrived:
    /// maximizes the posterior of the arrived part times the most likely
    /// continuation. Falls back to [`Self::map_prefix_estimate`] otherwise.
    pub fn map_extended(&self, spec: &SourceSpec, k: usize) -> Vec<usize> {
        if k <= self.seq_len {
            return index_to_seq(self.map_prefix_estimate(k).0, k, self.q);
        }
        let cont = spec.best_continuation(k - self.seq_len);
        let q = self.q;
        let mut best: Option<(f64, usize)> = None;
        for (i, &p) in self.probs.iter().enumerate() {
            let slot = if self.seq_len == 0 { q } else { i % q };
            let v = p * cont[slot].0;
            if best.is_none_or(|(b, _)| v > b) {
                best = Some((v, i));
            }
        }
        let (_, i) = best.expect("nonempty domain");
        let slot = if self.seq_len == 0 { q } else { i % q };
        let mut out = index_to_seq(i as u128, self.seq_len, q);
        out.extend_from_slice(&cont[slot].1);
        out
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= NORM_TOL
    }

    /// `{"seq_len": n, "phase": "...", "probs": {"0101": p, ...}}`.
    pub fn to_json(&self) -> serde_json::Value {
        let probs: BTreeMap<String, f64> =
            self.probs.iter().enumerate().map(|(i, &p)| (seq_label(i as u128, self.seq_len, self.q), p)).collect();
        serde_json::json!({
            "seq_len": self.seq_len,
            "phase": match self.phase { Phase::Prior => "prior", Phase::Posterior => "posterior" },
            "probs": probs,
        })
    }
}

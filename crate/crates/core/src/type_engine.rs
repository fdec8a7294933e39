//! Interval ("type") representation of the belief for equiprobable sources.
//!
//! A type is a lexicographically contiguous run of sequences sharing one
//! probability. Arrivals scale every interval, partitions split at most a
//! few types per step, and updates touch each type once, so the cost per
//! channel use is linear in the number of live types.

use std::collections::VecDeque;

use crate::belief::{domain_size, evidence, group_likelihoods};
use crate::channel::{argmax, Dmc};
use crate::error::{Error, Result};
use crate::partition::RULE_TOL;
use crate::source::SourceSpec;

const CEIL_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeInterval {
    pub seq_len: usize,
    pub lo: u128,
    pub hi: u128,
    pub per_seq_prob: f64,
    pub id: u64,
}

impl TypeInterval {
    pub fn count(&self) -> u128 {
        self.hi - self.lo + 1
    }

    pub fn mass(&self) -> f64 {
        self.count() as f64 * self.per_seq_prob
    }

    pub fn contains(&self, index: u128) -> bool {
        self.lo <= index && index <= self.hi
    }
}

/// Group assignment of the live types plus split bookkeeping.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TypePartition {
    /// `group[j]` is the input of `types[j]`.
    pub group: Vec<usize>,
    pub group_priors: Vec<f64>,
    /// Types split during this call.
    pub splits: usize,
    /// Probability of the boundary type (binary SED split), if any.
    pub boundary_prob: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TypeSet {
    q: usize,
    seq_len: usize,
    types: Vec<TypeInterval>,
    next_id: u64,
    total_splits: usize,
    /// Permutation of `types` sorted by `lo`, for point lookups.
    by_lo: Vec<usize>,
}

impl TypeSet {
    /// One type holding the empty history with probability 1.
    pub fn new(q: usize) -> Self {
        let t = TypeInterval { seq_len: 0, lo: 0, hi: 0, per_seq_prob: 1.0, id: 0 };
        TypeSet { q, seq_len: 0, types: vec![t], next_id: 1, total_splits: 0, by_lo: vec![0] }
    }

    pub fn from_types(q: usize, seq_len: usize, types: Vec<TypeInterval>) -> Self {
        let next_id = types.iter().map(|t| t.id + 1).max().unwrap_or(0);
        let mut s = TypeSet { q, seq_len, types, next_id, total_splits: 0, by_lo: Vec::new() };
        s.reindex();
        s
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    pub fn types(&self) -> &[TypeInterval] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn total_splits(&self) -> usize {
        self.total_splits
    }

    pub fn total_mass(&self) -> f64 {
        self.types.iter().map(TypeInterval::mass).sum()
    }

    fn reindex(&mut self) {
        let mut by_lo: Vec<usize> = (0..self.types.len()).collect();
        by_lo.sort_by_key(|&j| self.types[j].lo);
        self.by_lo = by_lo;
    }

    /// Intervals are disjoint and exactly cover `[0, q^seq_len)`.
    pub fn check_cover(&self) -> Result<bool> {
        let size = domain_size(self.q, self.seq_len)?;
        let mut next = 0u128;
        for &j in &self.by_lo {
            let t = &self.types[j];
            if t.lo != next || t.hi < t.lo || t.seq_len != self.seq_len {
                return Ok(false);
            }
            next = t.hi + 1;
        }
        Ok(next == size)
    }

    /// Position in `types()` of the type containing `index`.
    pub fn position_of(&self, index: u128) -> usize {
        let k = self.by_lo.partition_point(|&j| self.types[j].lo <= index);
        let j = self.by_lo[k - 1];
        debug_assert!(self.types[j].contains(index));
        j
    }

    /// Arrival update for the symbols received by time `t`, capped at `cap`.
    pub fn type_update_and_priors(&mut self, spec: &SourceSpec, t: u64, cap: usize) -> Result<()> {
        self.extend_to(spec, spec.n_of_t(t, cap))
    }

    /// Appends `new_len - seq_len` uniform symbols to every type.
    pub fn extend_to(&mut self, spec: &SourceSpec, new_len: usize) -> Result<()> {
        if new_len <= self.seq_len {
            return Ok(());
        }
        if !spec.is_equiprobable() {
            return Err(Error::NotEquiprobable);
        }
        domain_size(self.q, new_len)?;
        let delta = new_len - self.seq_len;
        let scale = (self.q as u128).pow(delta as u32);
        let factor = (1.0 / self.q as f64).powi(delta as i32);
        for t in &mut self.types {
            t.seq_len = new_len;
            t.lo *= scale;
            t.hi = t.hi * scale + (scale - 1);
            t.per_seq_prob *= factor;
        }
        self.seq_len = new_len;
        Ok(())
    }

    /// Types by probability descending, ties by `(seq_len, lo)`.
    fn sorted_queue(&self) -> VecDeque<TypeInterval> {
        let mut v = self.types.clone();
        v.sort_by(|a, b| {
            b.per_seq_prob.total_cmp(&a.per_seq_prob).then(a.seq_len.cmp(&b.seq_len)).then(a.lo.cmp(&b.lo))
        });
        v.into()
    }

    fn fresh_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn install(
        &mut self,
        types: Vec<TypeInterval>,
        group: Vec<usize>,
        pi: Vec<f64>,
        splits: usize,
        boundary: Option<f64>,
    ) -> TypePartition {
        self.types = types;
        self.total_splits += splits;
        self.reindex();
        TypePartition { group, group_priors: pi, splits, boundary_prob: boundary }
    }

    /// Type-level greedy partition: the head type goes to the input with
    /// the largest gap; when it holds more sequences than
    /// `n = ceil(gap / theta)`, its smallest `n` sequences move and the rest
    /// returns to the head of the queue as a new type.
    pub fn type_greedy_partition(&mut self, p_star: &[f64]) -> TypePartition {
        let mut queue = self.sorted_queue();
        let mut pi = vec![0.0; p_star.len()];
        let mut out = Vec::with_capacity(queue.len() + p_star.len());
        let mut group = Vec::with_capacity(queue.len() + p_star.len());
        let mut splits = 0;
        while let Some(mut t) = queue.pop_front() {
            let gaps: Vec<f64> = p_star.iter().zip(&pi).map(|(a, b)| a - b).collect();
            let x = argmax(&gaps);
            let theta = t.per_seq_prob;
            let count = t.count();
            // Smallest n with n * theta >= gap, forgiving rounding in the ratio.
            let n = if theta > 0.0 { ((gaps[x] / theta - CEIL_SLACK).ceil().max(1.0)) as u128 } else { count };
            if n < count {
                let rest = TypeInterval { lo: t.lo + n, id: self.fresh_id(), ..t };
                t.hi = t.lo + n - 1;
                queue.push_front(rest);
                splits += 1;
            }
            pi[x] += t.mass();
            out.push(t);
            group.push(x);
        }
        self.install(out, group, pi, splits, None)
    }

    /// Type-level binary SED split: whole types join group 0 until
    /// `pi_0 >= 1/2`; then the last `n` sequences of the boundary type move
    /// to group 1, with `n` the integer closest to `(pi_0 - 1/2)/theta`
    /// (ties to the smaller). The remaining types join group 1.
    pub fn type_sed_partition(&mut self) -> TypePartition {
        let queue = self.sorted_queue();
        let mut pi0 = 0.0;
        let mut boundary = queue.len().saturating_sub(1);
        for (j, t) in queue.iter().enumerate() {
            pi0 += t.mass();
            if pi0 >= 0.5 {
                boundary = j;
                break;
            }
        }
        let mut out = Vec::with_capacity(queue.len() + 1);
        let mut group = Vec::with_capacity(queue.len() + 1);
        let mut splits = 0;
        let mut theta_b = None;
        for (j, t) in queue.into_iter().enumerate() {
            if j < boundary {
                out.push(t);
                group.push(0);
            } else if j > boundary {
                out.push(t);
                group.push(1);
            } else {
                let theta = t.per_seq_prob;
                theta_b = Some(theta);
                let count = t.count();
                let n = if theta > 0.0 && pi0 > 0.5 {
                    let x = (pi0 - 0.5) / theta;
                    let (n_lo, n_hi) = (x.floor(), x.ceil());
                    let obj = |n: f64| (2.0 * pi0 - 1.0 - 2.0 * n * theta).abs();
                    let n = if obj(n_hi) < obj(n_lo) { n_hi } else { n_lo };
                    (n as u128).min(count)
                } else {
                    0
                };
                if n == 0 {
                    out.push(t);
                    group.push(0);
                } else if n == count {
                    out.push(t);
                    group.push(1);
                } else {
                    let moved = TypeInterval { lo: t.hi - n + 1, id: self.fresh_id(), ..t };
                    let kept = TypeInterval { hi: t.hi - n, ..t };
                    out.push(kept);
                    group.push(0);
                    out.push(moved);
                    group.push(1);
                    splits += 1;
                }
            }
        }
        let mut pi = vec![0.0; 2];
        for (t, &z) in out.iter().zip(&group) {
            pi[z] += t.mass();
        }
        self.install(out, group, pi, splits, theta_b)
    }

    /// Scales every type by the likelihood of its group and renormalizes.
    /// Returns the renormalization factor.
    pub fn type_posterior_update(
        &mut self,
        part: &TypePartition,
        kernel: Option<&[Vec<f64>]>,
        dmc: &Dmc,
        y: usize,
    ) -> Result<f64> {
        if part.group.len() != self.types.len() {
            return Err(Error::IncompletePartition);
        }
        let lik = group_likelihoods(dmc, y, kernel);
        let denom = evidence(dmc, y, &part.group_priors, kernel);
        if denom <= 0.0 {
            return Err(Error::ZeroEvidence { y });
        }
        let mut total = 0.0;
        for (t, &z) in self.types.iter_mut().zip(&part.group) {
            t.per_seq_prob *= lik[z] / denom;
            total += t.mass();
        }
        if total <= 0.0 {
            return Err(Error::ZeroEvidence { y });
        }
        if total != 1.0 {
            self.types.iter_mut().for_each(|t| t.per_seq_prob /= total);
        }
        Ok(total)
    }

    /// Position of the most probable type (ties by `lo`).
    pub fn max_type(&self) -> usize {
        let mut best = 0;
        for (j, t) in self.types.iter().enumerate().skip(1) {
            let b = &self.types[best];
            if t.per_seq_prob > b.per_seq_prob || (t.per_seq_prob == b.per_seq_prob && t.lo < b.lo) {
                best = j;
            }
        }
        best
    }

    /// Prefix estimate of length `k` from the most probable type.
    pub fn type_prefix_decode(&self, k: usize) -> u128 {
        assert!(k <= self.seq_len, "prefix longer than the sequences");
        let t = &self.types[self.max_type()];
        prefix_in_interval(t.lo, t.hi, self.seq_len, k, self.q)
    }

    /// A member of a type with probability at least `1 - eps`, once all `k`
    /// symbols are in.
    pub fn type_stop_decode(&self, k: usize, eps: f64) -> Option<u128> {
        if self.seq_len != k {
            return None;
        }
        self.types.iter().filter(|t| t.per_seq_prob >= 1.0 - eps).map(|t| t.lo).min()
    }

    /// Per-sequence probabilities as a dense vector (small lengths only).
    pub fn expand(&self) -> Result<Vec<f64>> {
        let size = domain_size(self.q, self.seq_len)?;
        if size > crate::belief::MAX_DENSE_SIZE {
            return Err(Error::LengthOverflow { len: self.seq_len, q: self.q });
        }
        let mut out = vec![0.0; size as usize];
        for t in &self.types {
            out[t.lo as usize..=t.hi as usize].fill(t.per_seq_prob);
        }
        Ok(out)
    }

    /// Per-sequence group assignment as a dense vector.
    pub fn expand_assignment(&self, part: &TypePartition) -> Result<Vec<usize>> {
        let size = domain_size(self.q, self.seq_len)?;
        let mut out = vec![usize::MAX; size as usize];
        for (t, &z) in self.types.iter().zip(&part.group) {
            out[t.lo as usize..=t.hi as usize].fill(z);
        }
        Ok(out)
    }
}

/// The three-case prefix rule inside `[lo, hi]`: equal prefixes give that
/// prefix; prefixes two or more apart give the one right after `lo`'s;
/// adjacent prefixes give whichever owns more members (ties to `lo`'s).
pub fn prefix_in_interval(lo: u128, hi: u128, len: usize, k: usize, q: usize) -> u128 {
    let m = (q as u128).pow((len - k) as u32);
    let (plo, phi) = (lo / m, hi / m);
    if plo == phi {
        plo
    } else if phi - plo >= 2 {
        plo + 1
    } else {
        let count_lo = m - lo % m;
        let count_hi = hi % m + 1;
        if count_hi > count_lo {
            phi
        } else {
            plo
        }
    }
}

/// Gap bound for a type-level SED split: `|pi_0 - pi_1| <= theta_boundary`.
pub fn sed_gap_ok(part: &TypePartition) -> bool {
    match part.boundary_prob {
        Some(theta) => (part.group_priors[0] - part.group_priors[1]).abs() <= theta + RULE_TOL,
        None => true,
    }
}

//! Discrete memoryless channels.
//!
//! A [`Dmc`] is validated once at construction and then carries every
//! derived constant the codes need: capacity, the capacity-achieving input
//! and output laws, the maximum row divergence `C1`, the transition
//! extremes and the degenerate/non-degenerate classification.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-9;
const PERM_TOL: f64 = 1e-12;

/// Default Blahut-Arimoto stopping tolerance (nats).
pub const BA_TOL: f64 = 1e-10;
/// Default Blahut-Arimoto iteration cap.
pub const BA_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelClass {
    /// Every transition probability is positive.
    NonDegenerate,
    /// Some output is reachable from one input and forbidden from another.
    Degenerate,
    /// Neither of the above, e.g. an output column that is identically zero.
    Neither,
}

/// An `(output, ack, nack)` triple with `P(output|ack) > 0 = P(output|nack)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegenerateWitness {
    pub output: usize,
    pub ack: usize,
    pub nack: usize,
}

/// JSON channel document: `{"matrix": [[...]], "name": "..."}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelDoc {
    pub matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Dmc {
    name: String,
    transition: Vec<Vec<f64>>,
    capacity: f64,
    cap_input: Vec<f64>,
    cap_output: Vec<f64>,
    c1: f64,
    p_max: f64,
    p_min: f64,
    class: ChannelClass,
    witness: Option<DegenerateWitness>,
    symmetric: bool,
}

impl Dmc {
    /// Validates a row-stochastic matrix and derives every channel constant.
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_tolerance(matrix, BA_TOL)
    }

    pub fn with_tolerance(matrix: Vec<Vec<f64>>, tol: f64) -> Result<Self> {
        if matrix.is_empty() || matrix[0].is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let cols = matrix[0].len();
        for (row, r) in matrix.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, found: r.len() });
            }
            for (col, &value) in r.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) {
                    return Err(Error::InvalidEntry { row, col, value });
                }
            }
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::NonStochastic { row, sum });
            }
        }

        let p_max = matrix.iter().flatten().copied().fold(f64::MIN, f64::max);
        let p_min = matrix.iter().flatten().copied().fold(f64::MAX, f64::min);
        let witness = find_witness(&matrix);
        let class = if p_min > 0.0 {
            ChannelClass::NonDegenerate
        } else if witness.is_some() {
            ChannelClass::Degenerate
        } else {
            ChannelClass::Neither
        };
        let symmetric = is_gallager_symmetric(&matrix);
        let (capacity, cap_input) = blahut_arimoto(&matrix, tol, BA_MAX_ITER)?;
        let cap_output = output_dist(&matrix, &cap_input);
        let c1 = max_row_divergence(&matrix);

        Ok(Dmc {
            name: String::from("custom"),
            transition: matrix,
            capacity,
            cap_input,
            cap_output,
            c1,
            p_max,
            p_min,
            class,
            witness,
            symmetric,
        })
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        let mut dmc = Self::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])?;
        dmc.name = format!("BSC({p})");
        Ok(dmc)
    }

    /// Binary erasure channel with erasure probability `e`; outputs are
    /// ordered `0, erasure, 1`.
    pub fn bec(e: f64) -> Result<Self> {
        let mut dmc = Self::new(vec![vec![1.0 - e, e, 0.0], vec![0.0, e, 1.0 - e]])?;
        dmc.name = format!("BEC({e})");
        Ok(dmc)
    }

    pub fn from_doc(doc: ChannelDoc) -> Result<Self> {
        let mut dmc = Self::new(doc.matrix)?;
        if let Some(name) = doc.name {
            dmc.name = name;
        }
        Ok(dmc)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_doc(serde_json::from_str(text)?)
    }

    pub fn to_doc(&self) -> ChannelDoc {
        ChannelDoc { matrix: self.transition.clone(), name: Some(self.name.clone()) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_size(&self) -> usize {
        self.transition.len()
    }

    pub fn output_size(&self) -> usize {
        self.transition[0].len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    /// `P(y | x)`.
    #[inline]
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.transition[x][y]
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn cap_input_dist(&self) -> &[f64] {
        &self.cap_input
    }

    pub fn cap_output_dist(&self) -> &[f64] {
        &self.cap_output
    }

    /// Maximum KL divergence between two rows; `+inf` when some row puts
    /// mass where another row has none.
    pub fn max_kl_divergence(&self) -> f64 {
        self.c1
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn p_min(&self) -> f64 {
        self.p_min
    }

    pub fn class(&self) -> ChannelClass {
        self.class
    }

    pub fn is_non_degenerate(&self) -> bool {
        self.class == ChannelClass::NonDegenerate
    }

    /// The degenerate triple maximizing `P(output|ack)`.
    pub fn degenerate_witness(&self) -> Option<DegenerateWitness> {
        self.witness
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_symmetric_binary_input(&self) -> bool {
        self.symmetric && self.input_size() == 2
    }

    /// Input with the largest capacity-achieving probability (smallest index on ties).
    pub fn most_likely_input(&self) -> usize {
        argmax(&self.cap_input)
    }

    /// Draws `Y` given `X = x` by inverting the row CDF.
    pub fn sample_output<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> Result<usize> {
        let row = self.transition.get(x).ok_or(Error::IndexOutOfRange { index: x, size: self.input_size() })?;
        Ok(sample_index(row, rng.random::<f64>()))
    }

    /// `y -> sum_x P(y|x) P_X(x)`.
    pub fn induced_output_dist(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_size() {
            return Err(Error::DimensionMismatch { expected: self.input_size(), found: input.len() });
        }
        let sum: f64 = input.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::NonStochastic { row: 0, sum });
        }
        Ok(output_dist(&self.transition, input))
    }

    /// `D(P_{Y|X=a} || P_{Y|X=b})` in nats.
    pub fn row_divergence(&self, a: usize, b: usize) -> f64 {
        kl_divergence(&self.transition[a], &self.transition[b])
    }
}

/// Inverse-CDF draw from a probability vector given a uniform in `[0, 1)`.
pub(crate) fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    last_positive
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in v.iter().enumerate() {
        if p > v[best] {
            best = i;
        }
    }
    best
}

fn output_dist(matrix: &[Vec<f64>], input: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; matrix[0].len()];
    for (row, &px) in matrix.iter().zip(input) {
        for (o, &p) in out.iter_mut().zip(row) {
            *o += p * px;
        }
    }
    out
}

/// KL divergence in nats; `+inf` if `p` is not absolutely continuous w.r.t. `q`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).ln();
        }
    }
    d.max(0.0)
}

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}

fn max_row_divergence(matrix: &[Vec<f64>]) -> f64 {
    let mut best: f64 = 0.0;
    for a in matrix {
        for b in matrix {
            best = best.max(kl_divergence(a, b));
        }
    }
    best
}

fn find_witness(matrix: &[Vec<f64>]) -> Option<DegenerateWitness> {
    let mut best: Option<(f64, DegenerateWitness)> = None;
    for y in 0..matrix[0].len() {
        for (ack, row) in matrix.iter().enumerate() {
            if row[y] <= 0.0 {
                continue;
            }
            if let Some(nack) = matrix.iter().position(|r| r[y] == 0.0) {
                let w = DegenerateWitness { output: y, ack, nack };
                match best {
                    Some((p, _)) if p >= row[y] => {}
                    _ => best = Some((row[y], w)),
                }
            }
        }
    }
    best.map(|(_, w)| w)
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn same_multiset(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= PERM_TOL)
}

/// Gallager symmetry. Columns that are permutations of each other are
/// grouped together; the channel is symmetric iff, inside every group, the
/// rows are permutations of each other. Any valid column partition refines
/// this one and unions of valid blocks stay valid, so checking the coarsest
/// grouping is exact.
fn is_gallager_symmetric(matrix: &[Vec<f64>]) -> bool {
    let cols = matrix[0].len();
    let col_sorted: Vec<Vec<f64>> = (0..cols).map(|c| sorted(matrix.iter().map(|r| r[c]).collect())).collect();
    let mut class_of = vec![usize::MAX; cols];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for c in 0..cols {
        if class_of[c] != usize::MAX {
            continue;
        }
        let id = classes.len();
        let mut members = vec![c];
        class_of[c] = id;
        for d in c + 1..cols {
            if class_of[d] == usize::MAX && same_multiset(&col_sorted[c], &col_sorted[d]) {
                class_of[d] = id;
                members.push(d);
            }
        }
        classes.push(members);
    }
    classes.iter().all(|members| {
        let first = sorted(members.iter().map(|&c| matrix[0][c]).collect());
        matrix.iter().all(|r| same_multiset(&first, &sorted(members.iter().map(|&c| r[c]).collect())))
    })
}

fn binary_optimum(matrix: &[Vec<f64>]) -> Vec<f64> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let q = output_dist(matrix, &[mid, 1.0 - mid]);
        if kl_divergence(&matrix[0], &q) > kl_divergence(&matrix[1], &q) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p0 = 0.5 * (lo + hi);
    vec![p0, 1.0 - p0]
}

struct BaStep {
    upper: f64,
    lower: f64,
    next: Vec<f64>,
}

/// One Blahut-Arimoto map evaluation with its capacity bounds. Inputs that
/// provably lie outside the optimal support are zeroed in `next`: since
/// `D(q* || q) <= U - L`, Pinsker gives
/// `q*(y) >= max(min_x P(y|x), q(y) - sqrt(2 (U - L)))`, which bounds
/// `D_x(q*)` from above, and an input whose bound falls below `L <= C`
/// cannot meet the optimality condition `D_x(q*) = C`.
fn ba_step(matrix: &[Vec<f64>], col_min: &[f64], p: &[f64]) -> BaStep {
    let q = output_dist(matrix, p);
    let d: Vec<f64> = matrix.iter().map(|row| kl_divergence(row, &q)).collect();
    let upper = d.iter().copied().fold(f64::MIN, f64::max);
    let mut next: Vec<f64> = p.iter().zip(&d).map(|(&px, &dx)| px * (dx - upper).exp()).collect();
    let z: f64 = next.iter().sum();
    let lower = upper + z.ln();
    let shift = (2.0 * (upper - lower).max(0.0)).sqrt();
    for (x, row) in matrix.iter().enumerate() {
        if next[x] == 0.0 {
            continue;
        }
        let mut bound = d[x];
        for ((&pyx, &qy), &m) in row.iter().zip(&q).zip(col_min) {
            if pyx > 0.0 {
                let floor = m.max(qy - shift);
                bound += if floor > 0.0 { pyx * (qy / floor).ln() } else { f64::INFINITY };
            }
        }
        if bound < lower {
            next[x] = 0.0;
        }
    }
    let z: f64 = next.iter().sum();
    next.iter_mut().for_each(|v| *v /= z);
    BaStep { upper, lower, next }
}

/// Blahut-Arimoto iteration for `C = max_P I(X;Y)`.
///
/// Stops when the upper bound `max_x D(P_{Y|x} || P_Y)` and the lower bound
/// `ln sum_x P(x) exp(D_x)` are within `tol`; the returned capacity is the
/// lower bound, so it is within `tol` of the true value.
///
/// The map is accelerated by squared extrapolation (SQUAREM), with a
/// fallback to the plain step whenever the extrapolated point does not
/// improve the lower bound, and inputs certified to lie outside the optimal
/// support are dropped. Binary-input channels start from the root of
/// `D_0(q_p) - D_1(q_p)` (decreasing in `p = P(x = 0)`), found by bisection.
/// Binary-output channels reduce to their two extreme rows. Each of the
/// `max_iter` rounds costs up to three map evaluations.
pub fn blahut_arimoto(matrix: &[Vec<f64>], tol: f64, max_iter: usize) -> Result<(f64, Vec<f64>)> {
    let n_in = matrix.len();
    let n_out = matrix[0].len();
    if n_out == 2 && n_in > 2 {
        // Every row is a mixture of the two extreme rows, and mixing inputs
        // never raises I(X;Y), so the extremes carry the capacity.
        let lo = (0..n_in).min_by(|&a, &b| matrix[a][0].total_cmp(&matrix[b][0])).unwrap_or(0);
        let hi = (0..n_in).max_by(|&a, &b| matrix[a][0].total_cmp(&matrix[b][0])).unwrap_or(0);
        let mut p = vec![0.0; n_in];
        if lo == hi {
            p[lo] = 1.0;
            return Ok((0.0, p));
        }
        let (c, pair) = blahut_arimoto(&[matrix[lo].clone(), matrix[hi].clone()], tol, max_iter)?;
        p[lo] = pair[0];
        p[hi] = pair[1];
        return Ok((c, p));
    }
    let col_min: Vec<f64> = (0..n_out).map(|y| matrix.iter().map(|r| r[y]).fold(f64::INFINITY, f64::min)).collect();
    let mut p = if n_in == 2 { binary_optimum(matrix) } else { vec![1.0 / n_in as f64; n_in] };
    let mut tried = HashSet::new();
    for round in 0..max_iter {
        let s0 = ba_step(matrix, &col_min, &p);
        if s0.upper - s0.lower < tol {
            return Ok((s0.lower.max(0.0), p));
        }
        if n_in > 2 && round % SUPPORT_EVERY == SUPPORT_EVERY - 1 {
            if let Some(done) = try_support(matrix, &col_min, &p, &mut tried, tol) {
                return Ok(done);
            }
        }
        let p1 = s0.next;
        let s1 = ba_step(matrix, &col_min, &p1);
        if s1.upper - s1.lower < tol {
            return Ok((s1.lower.max(0.0), p1));
        }
        let p2 = s1.next;
        let r: Vec<f64> = p1.iter().zip(&p).map(|(a, b)| a - b).collect();
        let v: Vec<f64> = p2.iter().zip(&p1).zip(&p).map(|((c, b), a)| c - 2.0 * b + a).collect();
        let (nr, nv) = (norm(&r), norm(&v));
        p = p2;
        if nv > 0.0 {
            let alpha = -(nr / nv).max(1.0);
            let mut ext: Vec<f64> = p0_extrapolate(&p1, &r, &v, alpha, &p);
            let z: f64 = ext.iter().sum();
            // A zeroed input never recovers under the multiplicative map.
            let keeps_support = ext.iter().zip(&p).all(|(&e, &c)| c == 0.0 || e > 0.0);
            if z > 0.0 && keeps_support {
                ext.iter_mut().for_each(|x| *x /= z);
                if ba_step(matrix, &col_min, &ext).lower >= s1.lower {
                    p = ext;
                }
            }
        }
    }
    Err(Error::NoConvergence(max_iter))
}

/// Near-dominated inputs lose mass only geometrically with a ratio close to
/// one. Every `SUPPORT_EVERY` rounds the inputs are ranked by `D_x(q)`; each
/// not yet tried top-`j` set is solved on its own and the result certified
/// against the full matrix.
const SUPPORT_EVERY: usize = 16;
const SUPPORT_ITER: usize = 2000;

fn try_support(
    matrix: &[Vec<f64>],
    col_min: &[f64],
    p: &[f64],
    tried: &mut HashSet<Vec<bool>>,
    tol: f64,
) -> Option<(f64, Vec<f64>)> {
    let q = output_dist(matrix, p);
    let d: Vec<f64> = matrix.iter().map(|row| kl_divergence(row, &q)).collect();
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
    for j in (2..p.len()).rev() {
        let mut support = vec![false; p.len()];
        order[..j].iter().for_each(|&x| support[x] = true);
        if !tried.insert(support) {
            continue;
        }
        let mut idx = order[..j].to_vec();
        idx.sort_unstable();
        let sub: Vec<Vec<f64>> = idx.iter().map(|&x| matrix[x].clone()).collect();
        let Ok((_, ps)) = blahut_arimoto(&sub, tol / 4.0, SUPPORT_ITER) else { continue };
        let mut full = vec![0.0; p.len()];
        for (&x, &v) in idx.iter().zip(&ps) {
            full[x] = v;
        }
        let s = ba_step(matrix, col_min, &full);
        if s.upper - s.lower < tol {
            return Some((s.lower.max(0.0), full));
        }
    }
    None
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `p0 - 2 alpha r + alpha^2 v` (with `p0 = p1 - r`), clipped at zero and
/// kept off inputs already dropped in `p2`.
fn p0_extrapolate(p1: &[f64], r: &[f64], v: &[f64], alpha: f64, p2: &[f64]) -> Vec<f64> {
    p1.iter()
        .zip(r)
        .zip(v)
        .zip(p2)
        .map(
            |(((&a, &ri), &vi), &c)| {
                if c == 0.0 {
                    0.0
                } else {
                    (a - ri - 2.0 * alpha * ri + alpha * alpha * vi).max(0.0)
                }
            },
        )
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn h2(p: f64) -> f64 {
        entropy(&[p, 1.0 - p])
    }

    #[test]
    fn bsc_constants() {
        let dmc = Dmc::bsc(0.05).unwrap();
        assert_eq!(dmc.class(), ChannelClass::NonDegenerate);
        assert!(dmc.is_symmetric());
        assert_eq!(dmc.p_max(), 0.95);
        assert_eq!(dmc.p_min(), 0.05);
        let closed = std::f64::consts::LN_2 - h2(0.05);
        assert!((dmc.capacity() - closed).abs() < 1e-9);
        assert!((dmc.capacity() - 0.494632).abs() < 1e-6);
        assert_eq!(dmc.cap_input_dist(), &[0.5, 0.5]);
        let c1 = 0.9 * 19f64.ln();
        assert!((dmc.max_kl_divergence() - c1).abs() < 1e-12);
        assert!((c1 - 2.649995).abs() < 1e-6);
    }

    #[test]
    fn bec_is_degenerate_with_max_probability_witness() {
        let dmc = Dmc::bec(0.3).unwrap();
        assert_eq!(dmc.class(), ChannelClass::Degenerate);
        assert_eq!(dmc.degenerate_witness(), Some(DegenerateWitness { output: 0, ack: 0, nack: 1 }));
        assert!((dmc.capacity() - 0.7 * std::f64::consts::LN_2).abs() < 1e-9);
        assert!(dmc.max_kl_divergence().is_infinite());
        let out = dmc.induced_output_dist(&[0.5, 0.5]).unwrap();
        for (a, b) in out.iter().zip([0.35, 0.3, 0.35]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn partially_reachable_channel_witness() {
        // x=0 reaches {0, 2}; x=1 reaches every output.
        let dmc = Dmc::new(vec![vec![0.5, 0.0, 0.5], vec![0.2, 0.6, 0.2]]).unwrap();
        assert_eq!(dmc.class(), ChannelClass::Degenerate);
        assert_eq!(dmc.degenerate_witness(), Some(DegenerateWitness { output: 1, ack: 1, nack: 0 }));
    }

    #[test]
    fn unreachable_output_is_neither() {
        let dmc = Dmc::new(vec![vec![0.6, 0.0, 0.4], vec![0.3, 0.0, 0.7]]).unwrap();
        assert_eq!(dmc.class(), ChannelClass::Neither);
        assert!(dmc.degenerate_witness().is_none());
        assert!(dmc.max_kl_divergence().is_finite());
    }

    #[test]
    fn useless_channel_has_zero_capacity_and_divergence() {
        let dmc = Dmc::new(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert!(dmc.capacity().abs() < 1e-12);
        assert_eq!(dmc.max_kl_divergence(), 0.0);
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(Dmc::new(vec![]), Err(Error::EmptyMatrix)));
        assert!(matches!(Dmc::new(vec![vec![0.5, 0.4]]), Err(Error::NonStochastic { row: 0, .. })));
        assert!(matches!(Dmc::new(vec![vec![1.5, -0.5]]), Err(Error::InvalidEntry { .. })));
        let dmc = Dmc::bsc(0.1).unwrap();
        assert!(matches!(dmc.induced_output_dist(&[1.0]), Err(Error::DimensionMismatch { .. })));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(dmc.sample_output(2, &mut rng), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn near_duplicate_and_dominated_rows_converge() {
        let cases = [
            vec![
                vec![0.7471829914265166, 0.25281700857348344],
                vec![0.7472204889664505, 0.2527795110335495],
                vec![0.012176921486281383, 0.9878230785137186],
                vec![0.5, 0.5],
            ],
            vec![
                vec![0.4218423182840896, 0.140730145604411, 0.4374275361114995],
                vec![0.1565215102938655, 0.7235679097087447, 0.11991057999738979],
                vec![0.5949045382021612, 0.18425237854614707, 0.22084308325169172],
                vec![0.18869295185251606, 0.5507179066857029, 0.2605891414617811],
            ],
            vec![
                vec![0.19301585389437514, 0.7420423804437385, 0.06494176566188635],
                vec![0.3244184363928666, 0.3923705732980213, 0.283210990309112],
                vec![0.10115333307157659, 0.4482233945441781, 0.4506232723842452],
                vec![0.10513360739807044, 0.4432933688690474, 0.4515730237328821],
            ],
        ];
        for m in cases {
            let (c, p) = blahut_arimoto(&m, BA_TOL, BA_MAX_ITER).unwrap();
            let q = output_dist(&m, &p);
            let upper = m.iter().map(|r| kl_divergence(r, &q)).fold(f64::MIN, f64::max);
            assert!(upper - c < BA_TOL);
        }
    }

    #[test]
    fn capacity_matches_closed_forms_on_grids() {
        for i in 1..=40 {
            let p = i as f64 / 100.0;
            let dmc = Dmc::bsc(p).unwrap();
            assert!((dmc.capacity() - (std::f64::consts::LN_2 - h2(p))).abs() < 1e-6, "BSC({p})");
        }
        for i in 1..=9 {
            let e = i as f64 / 10.0;
            let dmc = Dmc::bec(e).unwrap();
            assert!((dmc.capacity() - (1.0 - e) * std::f64::consts::LN_2).abs() < 1e-6, "BEC({e})");
        }
    }

    #[test]
    fn asymmetric_z_channel_capacity() {
        // Z-channel with crossover 1/2: C = ln(5/4) nats, P*(1) = 2/5.
        let dmc = Dmc::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert!((dmc.capacity() - (1.25f64).ln()).abs() < 1e-9);
        assert!((dmc.cap_input_dist()[1] - 0.4).abs() < 1e-4);
        assert!(!dmc.is_symmetric());
    }

    #[test]
    fn symmetry_detection() {
        // Gallager's example: partition {0,3} and {1,2}.
        let m = vec![vec![0.3, 0.2, 0.1, 0.4], vec![0.4, 0.1, 0.2, 0.3]];
        assert!(Dmc::new(m).unwrap().is_symmetric());
        assert!(Dmc::bec(0.2).unwrap().is_symmetric());
        let m = vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.7, 0.2], vec![0.2, 0.1, 0.7]];
        assert!(Dmc::new(m).unwrap().is_symmetric());
        let m = vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.2, 0.7], vec![0.2, 0.7, 0.1]];
        assert!(!Dmc::new(m).unwrap().is_symmetric());
        let m = vec![vec![0.7, 0.3], vec![0.2, 0.8]];
        assert!(!Dmc::new(m).unwrap().is_symmetric());
    }

    #[test]
    fn sampling_is_deterministic_and_calibrated() {
        let det = Dmc::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(det.sample_output(0, &mut rng).unwrap(), 0);
        }
        let dmc = Dmc::bsc(0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let flips = (0..n).filter(|_| dmc.sample_output(0, &mut rng).unwrap() == 1).count();
        assert!((flips as f64 / n as f64 - 0.05).abs() < 0.005);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..64).map(|_| dmc.sample_output(1, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
    }

    #[test]
    fn json_document() {
        let dmc = Dmc::from_json(r#"{"matrix": [[0.9, 0.1], [0.1, 0.9]], "name": "bsc"}"#).unwrap();
        assert_eq!(dmc.name(), "bsc");
        assert!(dmc.is_symmetric_binary_input());
    }
}

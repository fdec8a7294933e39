//! Discrete streaming sources: a symbol alphabet `[q]`, a deterministic
//! arrival schedule and a conditional symbol law.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{entropy, sample_index, Dmc};
use crate::error::{Error, Result};

const PROB_TOL: f64 = 1e-9;
const STATIONARY_TOL: f64 = 1e-12;
const STATIONARY_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Every symbol is available at `t = 1`.
    AllAtOnce,
    /// One symbol every `lambda` channel uses: `t_n = lambda (n - 1) + 1`.
    Periodic(u64),
    /// Explicit nondecreasing arrival times starting at 1.
    Explicit(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceLaw {
    Iid(Vec<f64>),
    Markov { initial: Vec<f64>, transition: Vec<Vec<f64>> },
}

/// JSON source document, e.g.
/// `{"q": 2, "schedule": {"periodic": 1}, "law": {"iid": [0.5, 0.5]}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceDoc {
    pub q: usize,
    pub schedule: Schedule,
    pub law: SourceLaw,
}

#[derive(Debug, Clone)]
pub struct SourceSpec {
    q: usize,
    schedule: Schedule,
    law: SourceLaw,
    entropy_rate: f64,
    arrival_rate: f64,
    p_s_max: f64,
}

/// Derived rates of a source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSummary {
    /// Entropy rate `H`, nats per symbol.
    pub entropy_rate: f64,
    /// Symbol arriving rate `f`; `+inf` for a fully accessible source.
    pub arrival_rate: f64,
    pub p_s_max: f64,
    /// Information lower bound used in the arrival-rate assumption; equal to
    /// `H` for the i.i.d. and Markov laws supported here.
    pub h_lower: f64,
}

/// Arrival-rate thresholds for the randomized and non-randomized
/// instantaneous encoding phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub thr_b: f64,
    pub thr_b_prime: f64,
    pub f_ok_b: bool,
    pub f_ok_b_prime: bool,
}

fn check_dist(p: &[f64], q: usize) -> Result<()> {
    if p.len() != q {
        return Err(Error::DimensionMismatch { expected: q, found: p.len() });
    }
    if let Some((i, &v)) = p.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidEntry { row: 0, col: i, value: v });
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::NonStochastic { row: 0, sum });
    }
    Ok(())
}

impl SourceSpec {
    pub fn new(q: usize, schedule: Schedule, law: SourceLaw) -> Result<Self> {
        if q < 1 {
            return Err(Error::InvalidConfig("alphabet size must be positive".into()));
        }
        match &schedule {
            Schedule::Periodic(0) => return Err(Error::InvalidConfig("period must be at least 1".into())),
            Schedule::Explicit(times) => {
                if times.first() != Some(&1) {
                    return Err(Error::InvalidConfig("first arrival must be at t = 1".into()));
                }
                if times.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::InvalidConfig("arrival times must be nondecreasing".into()));
                }
            }
            _ => {}
        }
        let (entropy_rate, p_s_max) = match &law {
            SourceLaw::Iid(p) => {
                check_dist(p, q)?;
                (entropy(p), p.iter().copied().fold(0.0, f64::max))
            }
            SourceLaw::Markov { initial, transition } => {
                check_dist(initial, q)?;
                if transition.len() != q {
                    return Err(Error::DimensionMismatch { expected: q, found: transition.len() });
                }
                for row in transition {
                    check_dist(row, q)?;
                }
                let pi = stationary(transition)?;
                let h = pi.iter().zip(transition).map(|(&w, row)| w * entropy(row)).sum();
                let p_max = transition.iter().flatten().chain(initial.iter()).copied().fold(0.0, f64::max);
                (h, p_max)
            }
        };
        let arrival_rate = match &schedule {
            Schedule::AllAtOnce => f64::INFINITY,
            Schedule::Periodic(lambda) => 1.0 / *lambda as f64,
            Schedule::Explicit(times) => times.len() as f64 / *times.last().unwrap() as f64,
        };
        Ok(SourceSpec { q, schedule, law, entropy_rate, arrival_rate, p_s_max })
    }

    /// I.i.d. uniform symbols over `[q]`.
    pub fn iid_uniform(q: usize, schedule: Schedule) -> Result<Self> {
        Self::new(q, schedule, SourceLaw::Iid(vec![1.0 / q as f64; q]))
    }

    pub fn from_doc(doc: SourceDoc) -> Result<Self> {
        Self::new(doc.q, doc.schedule, doc.law)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_doc(serde_json::from_str(text)?)
    }

    pub fn to_doc(&self) -> SourceDoc {
        SourceDoc { q: self.q, schedule: self.schedule.clone(), law: self.law.clone() }
    }

    /// Same law, different schedule.
    pub fn with_schedule(&self, schedule: Schedule) -> Result<Self> {
        Self::new(self.q, schedule, self.law.clone())
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn law(&self) -> &SourceLaw {
        &self.law
    }

    /// True when every conditional symbol probability is `1/q`.
    pub fn is_equiprobable(&self) -> bool {
        let u = 1.0 / self.q as f64;
        let flat = |p: &[f64]| p.iter().all(|&v| (v - u).abs() < 1e-12);
        match &self.law {
            SourceLaw::Iid(p) => flat(p),
            SourceLaw::Markov { initial, transition } => flat(initial) && transition.iter().all(|r| flat(r)),
        }
    }

    pub fn describe(&self) -> SourceSummary {
        SourceSummary {
            entropy_rate: self.entropy_rate,
            arrival_rate: self.arrival_rate,
            p_s_max: self.p_s_max,
            h_lower: self.entropy_rate,
        }
    }

    /// Arrival time `t_n` of the `n`-th symbol (1-based); `None` past the end
    /// of an explicit schedule.
    pub fn arrival_time(&self, n: usize) -> Option<u64> {
        assert!(n >= 1, "symbols are numbered from 1");
        match &self.schedule {
            Schedule::AllAtOnce => Some(1),
            Schedule::Periodic(lambda) => Some(lambda * (n as u64 - 1) + 1),
            Schedule::Explicit(times) => times.get(n - 1).copied(),
        }
    }

    /// `N(t) = max{n : t_n <= t}`, capped at `cap` (a fully accessible source
    /// has infinitely many symbols at `t = 1`).
    pub fn n_of_t(&self, t: u64, cap: usize) -> usize {
        if t == 0 {
            return 0;
        }
        let n = match &self.schedule {
            Schedule::AllAtOnce => cap,
            Schedule::Periodic(lambda) => ((t - 1) / lambda + 1).min(cap as u64) as usize,
            Schedule::Explicit(times) => times.partition_point(|&s| s <= t),
        };
        n.min(cap)
    }

    /// `P(S_n = s | S^{n-1})`, which depends on the history only through the
    /// previous symbol.
    #[inline]
    pub fn cond_prob(&self, prev: Option<usize>, s: usize) -> f64 {
        match (&self.law, prev) {
            (SourceLaw::Iid(p), _) => p[s],
            (SourceLaw::Markov { initial, .. }, None) => initial[s],
            (SourceLaw::Markov { transition, .. }, Some(a)) => transition[a][s],
        }
    }

    /// Largest probability of any `len`-symbol continuation, indexed by the
    /// previous symbol (`q` slots) plus one slot for an empty history.
    pub fn best_continuation(&self, len: usize) -> Vec<(f64, Vec<usize>)> {
        let q = self.q;
        // value[s] = best probability of `remaining` more symbols after s.
        let mut best: Vec<(f64, Vec<usize>)> = vec![(1.0, Vec::new()); q + 1];
        for _ in 0..len {
            let mut next = Vec::with_capacity(q + 1);
            for slot in 0..=q {
                let prev = (slot < q).then_some(slot);
                let mut choice = (f64::MIN, Vec::new());
                for (s, (tail_p, tail)) in best.iter().enumerate().take(q) {
                    let v = self.cond_prob(prev, s) * tail_p;
                    if v > choice.0 {
                        let mut path = vec![s];
                        path.extend_from_slice(tail);
                        choice = (v, path);
                    }
                }
                next.push(choice);
            }
            best = next;
        }
        best
    }

    /// Draws `S^k`.
    pub fn sample_prefix<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Vec<usize> {
        let mut out = Vec::with_capacity(k);
        self.extend_sample(&mut out, k, rng);
        out
    }

    /// Extends an existing sample to length `k`.
    pub fn extend_sample<R: Rng + ?Sized>(&self, seq: &mut Vec<usize>, k: usize, rng: &mut R) {
        while seq.len() < k {
            let prev = seq.last().copied();
            let s = match (&self.law, prev) {
                (SourceLaw::Iid(p), _) => sample_index(p, rng.random()),
                (SourceLaw::Markov { initial, .. }, None) => sample_index(initial, rng.random()),
                (SourceLaw::Markov { transition, .. }, Some(a)) => sample_index(&transition[a], rng.random()),
            };
            seq.push(s);
        }
    }

    /// Arrival-rate thresholds of the randomized phase (`thr_b`) and of the
    /// deterministic phase (`thr_b_prime`).
    pub fn assumption_thresholds(&self, dmc: &Dmc) -> Result<Thresholds> {
        if !dmc.is_non_degenerate() {
            return Err(Error::DegenerateChannel);
        }
        let h_lower = self.describe().h_lower;
        let thr_b = (entropy(dmc.cap_output_dist()) - (1.0 / dmc.p_max()).ln()) / h_lower;
        let thr_b_prime = ((1.0 / dmc.p_min()).ln() - (1.0 / dmc.p_max()).ln()) / (1.0 / self.p_s_max).ln();
        let f = self.arrival_rate;
        Ok(Thresholds { thr_b, thr_b_prime, f_ok_b: f > thr_b, f_ok_b_prime: f > thr_b_prime })
    }
}

/// Stationary distribution by power iteration on the lazy chain `(P + I)/2`,
/// which shares the stationary law and converges for periodic chains too.
fn stationary(transition: &[Vec<f64>]) -> Result<Vec<f64>> {
    let q = transition.len();
    let mut pi = vec![1.0 / q as f64; q];
    for _ in 0..STATIONARY_MAX_ITER {
        let mut next = vec![0.0; q];
        for (a, row) in transition.iter().enumerate() {
            for (b, &p) in row.iter().enumerate() {
                next[b] += 0.5 * pi[a] * p;
            }
            next[a] += 0.5 * pi[a];
        }
        let delta: f64 = next.iter().zip(&pi).map(|(x, y)| (x - y).abs()).sum();
        pi = next;
        if delta < STATIONARY_TOL {
            return Ok(pi);
        }
    }
    Err(Error::NonStationaryMarkov)
}

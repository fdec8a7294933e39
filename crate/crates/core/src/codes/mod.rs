//! Encoder/decoder state machines for streaming sources with full feedback.
//!
//! Every runner draws the source prefix first and then one channel draw per
//! use (preceded by one randomization draw in randomized steps), so runs
//! that share a seed share the source and, step for step, the noise.

mod cosim;
mod curves;
mod ejs;
mod engine;

pub use cosim::{cosimulate, CosimReport, CosimRule};
pub use curves::{reliability_curves, ReliabilityCurves};
pub use ejs::{ejs_divergence, maxejs_encoder_step, MAXEJS_DEFAULT_CAP};
pub use engine::{BeliefEngine, EngineKind, ExactEngine, TypeEngine};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{index_to_seq, seq_to_index, BeliefState};
use crate::channel::{sample_index, Dmc};
use crate::error::{Error, Result};
use crate::partition::{marginal_input_dist, randomization_plan};
use crate::source::{Schedule, SourceSpec};

/// Channel uses per symbol allowed after `t_k` by default, in units of `1/C`.
pub const DEFAULT_CAP_FACTOR: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Instantaneous encoding phase up to `t_k`, then the block SED code.
    InstPhase,
    /// Instantaneous SED code restricted to `k` symbols.
    InstSed,
    /// Idle until `t_k`, then the block SED code.
    Buffer,
    /// SED code with every symbol available at `t = 1`.
    BlockSed,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Buffer, Mode::InstPhase, Mode::InstSed, Mode::BlockSed];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::InstPhase => "inst-phase",
            Mode::InstSed => "inst-sed",
            Mode::Buffer => "buffer",
            Mode::BlockSed => "block-sed",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown mode {s:?}")))
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeConfig {
    pub eps: f64,
    pub mode: Mode,
    /// Randomize the instantaneous encoding phase so the transmitted input
    /// is distributed as `P*_X`.
    pub randomize: bool,
    /// Last allowed channel use; `None` uses `t_k + ceil(64 k / C)`.
    pub horizon_cap: Option<u64>,
    pub engine: EngineKind,
}

impl CodeConfig {
    pub fn new(eps: f64, mode: Mode) -> Self {
        CodeConfig { eps, mode, randomize: true, horizon_cap: None, engine: EngineKind::Type }
    }

    pub fn with_engine(mut self, engine: EngineKind) -> Self {
        self.engine = engine;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidConfig(format!("eps must lie in (0,1), got {}", self.eps)));
        }
        Ok(())
    }
}

/// Default horizon: `t_k + ceil(64 k / C)`.
pub fn default_horizon(dmc: &Dmc, k: usize, t_k: u64) -> u64 {
    let c = dmc.capacity().max(1e-12);
    t_k + (DEFAULT_CAP_FACTOR * k as f64 / c).ceil() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub source: Vec<usize>,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub groups: Vec<usize>,
    pub eta: Option<u64>,
    pub estimate: Option<Vec<usize>>,
    pub correct: bool,
    /// Largest `|marginal - P*_X|` over randomized steps (0 if none).
    pub max_marginal_residual: f64,
    /// Randomized steps taken.
    pub randomized_steps: usize,
}

impl Transcript {
    fn new(source: Vec<usize>) -> Self {
        Transcript {
            source,
            inputs: Vec::new(),
            outputs: Vec::new(),
            groups: Vec::new(),
            eta: None,
            estimate: None,
            correct: false,
            max_marginal_residual: 0.0,
            randomized_steps: 0,
        }
    }

    fn push(&mut self, z: usize, x: usize, y: usize) {
        self.groups.push(z);
        self.inputs.push(x);
        self.outputs.push(y);
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }
}

#[derive(Clone, Copy)]
enum Step {
    Idle,
    Greedy,
    Sed,
}

fn require_sed_channel(dmc: &Dmc) -> Result<()> {
    if !dmc.is_non_degenerate() {
        return Err(Error::DegenerateChannel);
    }
    if !dmc.is_symmetric_binary_input() {
        return Err(Error::NotSymmetricBinary);
    }
    Ok(())
}

fn arrival_of(spec: &SourceSpec, k: usize) -> Result<u64> {
    spec.arrival_time(k).ok_or_else(|| Error::InvalidConfig(format!("schedule has fewer than {k} symbols")))
}

/// Runs one code of `config.mode` for the first `k` symbols.
pub fn run_code<R: Rng + ?Sized>(
    dmc: &Dmc,
    spec: &SourceSpec,
    k: usize,
    config: &CodeConfig,
    rng: &mut R,
) -> Result<Transcript> {
    config.validate()?;
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let block_spec;
    let spec = if config.mode == Mode::BlockSed {
        block_spec = spec.with_schedule(Schedule::AllAtOnce)?;
        &block_spec
    } else {
        spec
    };
    match config.engine {
        EngineKind::Exact => run_with(ExactEngine::new(spec.q()), dmc, spec, k, config, rng),
        EngineKind::Type => {
            if !spec.is_equiprobable() {
                return Err(Error::NotEquiprobable);
            }
            run_with(TypeEngine::new(spec.q()), dmc, spec, k, config, rng)
        }
    }
}

fn run_with<E: BeliefEngine, R: Rng + ?Sized>(
    mut eng: E,
    dmc: &Dmc,
    spec: &SourceSpec,
    k: usize,
    config: &CodeConfig,
    rng: &mut R,
) -> Result<Transcript> {
    let t_k = arrival_of(spec, k)?;
    let cap = config.horizon_cap.unwrap_or_else(|| default_horizon(dmc, k, t_k));
    if cap < t_k {
        return Err(Error::InvalidConfig(format!("horizon {cap} ends before t_k = {t_k}")));
    }
    require_sed_channel(dmc)?;
    let p_star = dmc.cap_input_dist().to_vec();
    let idle_input = dmc.most_likely_input();
    let q = spec.q();

    let source = spec.sample_prefix(k, rng);
    let mut tr = Transcript::new(source.clone());
    for t in 1..=cap {
        let step = match config.mode {
            Mode::InstSed | Mode::BlockSed => Step::Sed,
            Mode::InstPhase if t <= t_k => Step::Greedy,
            Mode::InstPhase => Step::Sed,
            Mode::Buffer if t < t_k => Step::Idle,
            Mode::Buffer => Step::Sed,
        };
        if let Step::Idle = step {
            let y = dmc.sample_output(idle_input, rng)?;
            tr.push(idle_input, idle_input, y);
            continue;
        }
        let len = spec.n_of_t(t, k);
        eng.extend_to(spec, len)?;
        let idx = seq_to_index(&source[..len], q);
        match step {
            Step::Greedy => {
                let pi = eng.partition_greedy(&p_star);
                let z = eng.group_of(idx);
                if config.randomize {
                    let plan = randomization_plan(&pi, &p_star)?;
                    let marginal = marginal_input_dist(&pi, &plan);
                    let resid = marginal.iter().zip(&p_star).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    tr.max_marginal_residual = tr.max_marginal_residual.max(resid);
                    tr.randomized_steps += 1;
                    let x = sample_index(&plan.kernel[z], rng.random());
                    let y = dmc.sample_output(x, rng)?;
                    eng.update(dmc, y, Some(&plan.kernel))?;
                    tr.push(z, x, y);
                } else {
                    let y = dmc.sample_output(z, rng)?;
                    eng.update(dmc, y, None)?;
                    tr.push(z, z, y);
                }
            }
            Step::Sed => {
                eng.partition_sed();
                let z = eng.group_of(idx);
                let y = dmc.sample_output(z, rng)?;
                eng.update(dmc, y, None)?;
                tr.push(z, z, y);
            }
            Step::Idle => unreachable!(),
        }
        if t >= t_k {
            if let Some(est) = eng.stop_decode(k, config.eps) {
                let est = index_to_seq(est, k, q);
                tr.correct = est == source;
                tr.estimate = Some(est);
                tr.eta = Some(t);
                return Ok(tr);
            }
        }
    }
    Err(Error::HorizonExceeded { cap })
}

/// Instantaneous encoding phase followed by the block SED code.
pub fn run_instantaneous_phase_then_block<R: Rng + ?Sized>(
    dmc: &Dmc,
    spec: &SourceSpec,
    k: usize,
    config: &CodeConfig,
    rng: &mut R,
) -> Result<Transcript> {
    run_code(dmc, spec, k, &CodeConfig { mode: Mode::InstPhase, ..*config }, rng)
}

/// Instantaneous SED code for the first `k` symbols (type engine).
pub fn run_instantaneous_sed<R: Rng + ?Sized>(
    dmc: &Dmc,
    spec: &SourceSpec,
    k: usize,
    eps: f64,
    rng: &mut R,
) -> Result<Transcript> {
    run_code(dmc, spec, k, &CodeConfig::new(eps, Mode::InstSed), rng)
}

/// Buffer-then-transmit baseline (type engine).
pub fn run_buffer_then_transmit<R: Rng + ?Sized>(
    dmc: &Dmc,
    spec: &SourceSpec,
    k: usize,
    eps: f64,
    rng: &mut R,
) -> Result<Transcript> {
    run_code(dmc, spec, k, &CodeConfig::new(eps, Mode::Buffer), rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnytimeEstimate {
    pub k: usize,
    pub t: u64,
    pub estimate: Vec<usize>,
    pub correct: bool,
}

/// Anytime instantaneous SED code: the encoder keeps absorbing arrivals up
/// to `horizon`; each request `(k, t)` reads the MAP prefix of length `k`
/// from the posterior at time `t`.
pub fn run_anytime_sed<R: Rng + ?Sized>(
    dmc: &Dmc,
    spec: &SourceSpec,
    horizon: u64,
    requests: &[(usize, u64)],
    engine: EngineKind,
    rng: &mut R,
) -> Result<Vec<AnytimeEstimate>> {
    require_sed_channel(dmc)?;
    let max_k = requests.iter().map(|r| r.0).max().unwrap_or(0);
    for &(k, t) in requests {
        let t_k = arrival_of(spec, k)?;
        if t < t_k {
            return Err(Error::RequestBeforeArrival { k, t, t_k });
        }
        if t > horizon {
            return Err(Error::HorizonExceeded { cap: horizon });
        }
    }
    // A fully accessible source is truncated at the longest requested prefix.
    let cap = match spec.schedule() {
        Schedule::AllAtOnce => max_k,
        _ => usize::MAX,
    };
    let total = spec.n_of_t(horizon, cap).max(max_k);
    match engine {
        EngineKind::Exact => anytime_with(ExactEngine::new(spec.q()), dmc, spec, horizon, cap, total, requests, rng),
        EngineKind::Type => {
            if !spec.is_equiprobable() {
                return Err(Error::NotEquiprobable);
            }
            anytime_with(TypeEngine::new(spec.q()), dmc, spec, horizon, cap, total, requests, rng)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn anytime_with<E: BeliefEngine, R: Rng + ?Sized>(
    mut eng: E,
    dmc: &Dmc,
    spec: &SourceSpec,
    horizon: u64,
    cap: usize,
    total: usize,
    requests: &[(usize, u64)],
    rng: &mut R,
) -> Result<Vec<AnytimeEstimate>> {
    let q = spec.q();
    let source = spec.sample_prefix(total, rng);
    let mut order: Vec<usize> = (0..requests.len()).collect();
    order.sort_by_key(|&i| (requests[i].1, i));
    let mut slots: Vec<Option<AnytimeEstimate>> = vec![None; requests.len()];
    let mut next = 0;
    for t in 1..=horizon {
        let len = spec.n_of_t(t, cap);
        eng.extend_to(spec, len)?;
        eng.partition_sed();
        let z = eng.group_of(seq_to_index(&source[..len], q));
        let y = dmc.sample_output(z, rng)?;
        eng.update(dmc, y, None)?;
        while next < order.len() && requests[order[next]].1 == t {
            let i = order[next];
            let k = requests[i].0;
            let est = index_to_seq(eng.map_prefix(k), k, q);
            let correct = est[..] == source[..k];
            slots[i] = Some(AnytimeEstimate { k, t, estimate: est, correct });
            next += 1;
        }
    }
    Ok(slots.into_iter().map(|s| s.expect("every request answered")).collect())
}

/// Runs the instantaneous SED code with the exact engine and forces a MAP
/// decision of `S^k` at `t_k - delta`, before the last `delta` symbols
/// arrive. Returns whether the forced estimate was correct.
pub fn run_forced_early_decode<R: Rng + ?Sized>(
    dmc: &Dmc,
    spec: &SourceSpec,
    k: usize,
    delta: u64,
    rng: &mut R,
) -> Result<bool> {
    require_sed_channel(dmc)?;
    let t_k = arrival_of(spec, k)?;
    if delta == 0 || delta >= t_k {
        return Err(Error::InvalidConfig(format!("decode time t_k - {delta} must be at least 1")));
    }
    let t_dec = t_k - delta;
    let q = spec.q();
    let source = spec.sample_prefix(k, rng);
    let mut eng = ExactEngine::new(q);
    for t in 1..=t_dec {
        let len = spec.n_of_t(t, k);
        eng.extend_to(spec, len)?;
        eng.partition_sed();
        let z = eng.group_of(seq_to_index(&source[..len], q));
        let y = dmc.sample_output(z, rng)?;
        eng.update(dmc, y, None)?;
    }
    Ok(eng.state.map_extended(spec, k) == source)
}

/// Exact-engine belief states along one instantaneous SED run, for the
/// `--dump-beliefs` diagnostics.
pub fn belief_trace<R: Rng + ?Sized>(
    dmc: &Dmc,
    spec: &SourceSpec,
    k: usize,
    eps: f64,
    rng: &mut R,
) -> Result<Vec<BeliefState>> {
    require_sed_channel(dmc)?;
    let t_k = arrival_of(spec, k)?;
    let cap = default_horizon(dmc, k, t_k);
    let q = spec.q();
    let source = spec.sample_prefix(k, rng);
    let mut eng = ExactEngine::new(q);
    let mut out = Vec::new();
    for t in 1..=cap {
        let len = spec.n_of_t(t, k);
        eng.extend_to(spec, len)?;
        eng.partition_sed();
        let z = eng.group_of(seq_to_index(&source[..len], q));
        let y = dmc.sample_output(z, rng)?;
        eng.update(dmc, y, None)?;
        out.push(eng.state.clone());
        if t >= t_k && eng.stop_decode(k, eps).is_some() {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bits(lambda: u64) -> SourceSpec {
        SourceSpec::iid_uniform(2, Schedule::Periodic(lambda)).unwrap()
    }

    #[test]
    fn mode_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
        }
        assert!("sed".parse::<Mode>().is_err());
    }

    #[test]
    fn nearly_noiseless_channel_stops_at_k() {
        let dmc = Dmc::bsc(1e-9).unwrap();
        let spec = bits(1);
        for engine in [EngineKind::Exact, EngineKind::Type] {
            for mode in Mode::ALL {
                let cfg = CodeConfig::new(0.1, mode).with_engine(engine);
                for seed in 0..100 {
                    let tr = run_code(&dmc, &spec, 8, &cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
                    assert!(tr.correct, "{mode} {engine:?}");
                    let eta = tr.eta.unwrap();
                    match (mode, engine) {
                        (Mode::Buffer, _) => assert_eq!(eta, 15),
                        // The type-level greedy split fills a group with
                        // ceil(gap / theta) sequences, which can put both
                        // children of the surviving sequence in one group.
                        (Mode::InstPhase, EngineKind::Type) => assert!((8..=16).contains(&eta)),
                        _ => assert_eq!(eta, 8, "{mode} {engine:?}"),
                    }
                }
            }
        }
    }

    #[test]
    fn single_symbol_half_eps_stops_after_first_use() {
        let dmc = Dmc::bsc(0.05).unwrap();
        let cfg = CodeConfig::new(0.5, Mode::InstPhase);
        let tr = run_code(&dmc, &bits(1), 1, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(tr.eta, Some(1));
    }

    #[test]
    fn first_sed_transmission_is_the_bit() {
        let dmc = Dmc::bsc(0.05).unwrap();
        for seed in 0..20 {
            let tr = run_instantaneous_sed(&dmc, &bits(1), 1, 1e-3, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert_eq!(tr.inputs[0], tr.source[0]);
        }
    }

    #[test]
    fn buffer_with_all_at_once_equals_block_sed() {
        let dmc = Dmc::bsc(0.1).unwrap();
        let spec = SourceSpec::iid_uniform(2, Schedule::AllAtOnce).unwrap();
        for engine in [EngineKind::Exact, EngineKind::Type] {
            for seed in 0..30 {
                let a = run_code(
                    &dmc,
                    &spec,
                    6,
                    &CodeConfig::new(1e-3, Mode::Buffer).with_engine(engine),
                    &mut ChaCha8Rng::seed_from_u64(seed),
                )
                .unwrap();
                let b = run_code(
                    &dmc,
                    &bits(1),
                    6,
                    &CodeConfig::new(1e-3, Mode::BlockSed).with_engine(engine),
                    &mut ChaCha8Rng::seed_from_u64(seed),
                )
                .unwrap();
                let c = run_code(
                    &dmc,
                    &spec,
                    6,
                    &CodeConfig::new(1e-3, Mode::InstSed).with_engine(engine),
                    &mut ChaCha8Rng::seed_from_u64(seed),
                )
                .unwrap();
                assert_eq!(a, b);
                assert_eq!(a, c);
            }
        }
    }

    #[test]
    fn buffer_idles_until_arrival() {
        let dmc = Dmc::bsc(0.05).unwrap();
        let tr = run_buffer_then_transmit(&dmc, &bits(2), 4, 1e-3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let t_k = 7;
        assert!(tr.inputs[..t_k - 1].iter().all(|&x| x == dmc.most_likely_input()));
        assert!(tr.eta.unwrap() >= t_k as u64);
    }

    #[test]
    fn randomized_phase_matches_capacity_marginal() {
        let dmc = Dmc::bsc(0.05).unwrap();
        let cfg = CodeConfig::new(1e-6, Mode::InstPhase);
        for engine in [EngineKind::Exact, EngineKind::Type] {
            for seed in 0..50 {
                let tr = run_code(&dmc, &bits(1), 6, &cfg.with_engine(engine), &mut ChaCha8Rng::seed_from_u64(seed))
                    .unwrap();
                assert_eq!(tr.randomized_steps, 6);
                assert!(tr.max_marginal_residual < 1e-12);
            }
        }
    }

    #[test]
    fn horizon_cap_is_reported() {
        let dmc = Dmc::bsc(0.3).unwrap();
        let mut cfg = CodeConfig::new(1e-9, Mode::InstSed);
        cfg.horizon_cap = Some(10);
        let r = run_code(&dmc, &bits(1), 8, &cfg, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(r, Err(Error::HorizonExceeded { cap: 10 })));
        cfg.horizon_cap = Some(3);
        assert!(matches!(
            run_code(&dmc, &bits(1), 8, &cfg, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn sed_modes_reject_unsuitable_channels() {
        let bec = Dmc::bec(0.2).unwrap();
        let r = run_instantaneous_sed(&bec, &bits(1), 4, 0.1, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(r, Err(Error::DegenerateChannel)));
        let asym = Dmc::new(vec![vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap();
        let r = run_instantaneous_sed(&asym, &bits(1), 4, 0.1, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(r, Err(Error::NotSymmetricBinary)));
    }

    #[test]
    fn anytime_requests() {
        let dmc = Dmc::bsc(1e-9).unwrap();
        let spec = bits(1);
        let reqs = [(4, 4), (8, 8), (4, 20)];
        let out = run_anytime_sed(&dmc, &spec, 20, &reqs, EngineKind::Type, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert!(out.iter().all(|e| e.correct));
        assert_eq!(out[2].t, 20);
        let r = run_anytime_sed(&dmc, &spec, 20, &[(8, 7)], EngineKind::Type, &mut ChaCha8Rng::seed_from_u64(2));
        assert!(matches!(r, Err(Error::RequestBeforeArrival { k: 8, t: 7, t_k: 8 })));
    }

    #[test]
    fn forced_early_decode_guesses_missing_bits() {
        let dmc = Dmc::bsc(1e-9).unwrap();
        let spec = bits(1);
        let n = 2000;
        let hits = (0..n)
            .filter(|&s| run_forced_early_decode(&dmc, &spec, 6, 2, &mut ChaCha8Rng::seed_from_u64(s)).unwrap())
            .count();
        // Only the two unarrived bits are uncertain.
        let rate = hits as f64 / n as f64;
        assert!((rate - 0.25).abs() < 0.04, "{rate}");
    }

    #[test]
    fn belief_trace_is_normalized() {
        let dmc = Dmc::bsc(0.05).unwrap();
        let trace = belief_trace(&dmc, &bits(1), 4, 1e-3, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(!trace.is_empty());
        assert!(trace.iter().all(|b| b.is_normalized()));
    }
}

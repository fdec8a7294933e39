//! Block protocol with ACK/NACK confirmation that decodes with zero error
//! over degenerate channels.
//!
//! Each block sends the whole source sequence with a fresh random codebook
//! (drawn i.i.d. from `P*_X`) and decodes it by maximum likelihood; a
//! confirmation phase then repeats ACK if the estimate is right and NACK
//! otherwise. NACK can never produce `y*`, so the decoder stops, error-free,
//! at the end of the first confirmation phase that contains `y*`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::belief::{domain_size, seq_to_index};
use crate::channel::{sample_index, Dmc};
use crate::error::{Error, Result};
use crate::source::SourceSpec;

/// Largest codebook searched by the maximum-likelihood decoder.
pub const MAX_CODEBOOK: u128 = 1 << 16;
pub const DEFAULT_MAX_BLOCKS: usize = 1000;
const MIN_TRANSCRIPTS: usize = 1000;
const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroErrorConfig {
    pub k: usize,
    pub q: usize,
    pub r1: f64,
    pub r2: f64,
    pub delta: f64,
    /// Confirmation length `ceil(delta k)`.
    pub n_k: usize,
    pub ack: usize,
    pub nack: usize,
    pub y_star: usize,
    pub block1_len: usize,
    pub block_len: usize,
    pub max_blocks: usize,
}

/// Builds the protocol parameters. Block lengths are `ceil(k / R)`.
pub fn configure(dmc: &Dmc, q: usize, k: usize, r1: f64, r2: f64, delta: f64) -> Result<ZeroErrorConfig> {
    let w = dmc.degenerate_witness().ok_or(Error::NotDegenerate)?;
    if k == 0 || q < 2 {
        return Err(Error::InvalidConfig("need k >= 1 and q >= 2".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidConfig(format!("delta must lie in (0,1), got {delta}")));
    }
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::InvalidConfig("rates must be positive".into()));
    }
    let r2_max = dmc.capacity() / (q as f64).ln();
    if r2 >= r2_max {
        return Err(Error::InvalidConfig(format!("R2 = {r2} must be below C/ln q = {r2_max:.6}")));
    }
    let size = domain_size(q, k)?;
    if size > MAX_CODEBOOK {
        return Err(Error::SearchSpaceTooLarge { size: size as f64, cap: MAX_CODEBOOK as u64 });
    }
    Ok(ZeroErrorConfig {
        k,
        q,
        r1,
        r2,
        delta,
        n_k: ((delta * k as f64).ceil() as usize).max(1),
        ack: w.ack,
        nack: w.nack,
        y_star: w.output,
        block1_len: (k as f64 / r1).ceil() as usize,
        block_len: (k as f64 / r2).ceil() as usize,
        max_blocks: DEFAULT_MAX_BLOCKS,
    })
}

/// What the encoder sends in the confirmation phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConfirmPolicy {
    /// ACK iff the estimate is correct.
    #[default]
    Honest,
    /// NACK every time, whatever the estimate.
    ForceNack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroErrorTranscript {
    pub source: Vec<usize>,
    pub estimate: Vec<usize>,
    pub correct: bool,
    pub eta: u64,
    /// Blocks sent after the first.
    pub retransmissions: usize,
    /// Whether each block's communication phase decoded correctly.
    pub block_decoded: Vec<bool>,
}

fn mix(seed: u64, stream: u64) -> u64 {
    crate::harness::trial_seed(seed, stream)
}

/// One block: random codebook, channel, ML decode. Returns the decoded index.
fn communicate(dmc: &Dmc, q: usize, k: usize, len: usize, msg: usize, rng: &mut ChaCha8Rng) -> Result<usize> {
    let p_star = dmc.cap_input_dist();
    let size = q.pow(k as u32);
    let codebook: Vec<usize> = (0..size * len).map(|_| sample_index(p_star, rng.random())).collect();
    let sent = &codebook[msg * len..(msg + 1) * len];
    let mut received = Vec::with_capacity(len);
    for &x in sent {
        received.push(dmc.sample_output(x, rng)?);
    }
    let log_rows: Vec<Vec<f64>> = dmc.transition().iter().map(|r| r.iter().map(|p| p.ln()).collect()).collect();
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (m, word) in codebook.chunks(len).enumerate() {
        let mut ll = 0.0;
        for (&x, &y) in word.iter().zip(&received) {
            ll += log_rows[x][y];
            if ll == f64::NEG_INFINITY {
                break;
            }
        }
        if ll > best.0 {
            best = (ll, m);
        }
    }
    Ok(best.1)
}

/// True if the confirmation phase delivers `y*`.
fn confirm(dmc: &Dmc, cfg: &ZeroErrorConfig, input: usize, rng: &mut ChaCha8Rng) -> Result<bool> {
    let mut seen = false;
    for _ in 0..cfg.n_k {
        seen |= dmc.sample_output(input, rng)? == cfg.y_star;
    }
    Ok(seen)
}

pub fn run_zero_error<R: Rng + ?Sized>(
    cfg: &ZeroErrorConfig,
    dmc: &Dmc,
    spec: &SourceSpec,
    rng: &mut R,
) -> Result<ZeroErrorTranscript> {
    run_zero_error_with(cfg, dmc, spec, ConfirmPolicy::Honest, rng)
}

/// Protocol run with an explicit confirmation policy. Block `l` draws its
/// codebook and noise from stream `2l` and its confirmation noise from
/// stream `2l + 1` of one per-trial seed, so runs differing only in `n_k`
/// share every communication outcome.
pub fn run_zero_error_with<R: Rng + ?Sized>(
    cfg: &ZeroErrorConfig,
    dmc: &Dmc,
    spec: &SourceSpec,
    policy: ConfirmPolicy,
    rng: &mut R,
) -> Result<ZeroErrorTranscript> {
    if spec.q() != cfg.q {
        return Err(Error::DimensionMismatch { expected: cfg.q, found: spec.q() });
    }
    let source = spec.sample_prefix(cfg.k, rng);
    let t_k = spec
        .arrival_time(cfg.k)
        .ok_or_else(|| Error::InvalidConfig(format!("schedule has fewer than {} symbols", cfg.k)))?;
    let block_seed: u64 = rng.random();
    let msg = seq_to_index(&source, cfg.q) as usize;
    // Idle until the last symbol arrives.
    let mut eta = t_k - 1;
    let mut block_decoded = Vec::new();
    for l in 1..=cfg.max_blocks as u64 {
        let len = if l == 1 { cfg.block1_len } else { cfg.block_len };
        let mut comm = ChaCha8Rng::seed_from_u64(mix(block_seed, 2 * l));
        let decoded = communicate(dmc, cfg.q, cfg.k, len, msg, &mut comm)?;
        let ok = decoded == msg;
        block_decoded.push(ok);
        let input = match policy {
            ConfirmPolicy::Honest if ok => cfg.ack,
            _ => cfg.nack,
        };
        let mut conf = ChaCha8Rng::seed_from_u64(mix(block_seed, 2 * l + 1));
        eta += (len + cfg.n_k) as u64;
        if confirm(dmc, cfg, input, &mut conf)? {
            let estimate = crate::belief::index_to_seq(decoded as u128, cfg.k, cfg.q);
            let correct = estimate == source;
            return Ok(ZeroErrorTranscript {
                source,
                estimate,
                correct,
                eta,
                retransmissions: l as usize - 1,
                block_decoded,
            });
        }
    }
    Err(Error::HorizonExceeded { cap: eta })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockFailure {
    pub blocks: usize,
    /// Fraction of blocks whose communication phase decoded wrongly.
    pub decode_error: f64,
    /// Fraction of blocks that did not end the protocol.
    pub failure: f64,
    /// Lag-1 autocorrelation of the failure indicators.
    pub lag1_correlation: f64,
}

/// Simulates `blocks` consecutive independent blocks of length
/// `block_len` (fresh source, fresh codebook) and reports their failure
/// statistics.
pub fn estimate_block_failure(
    cfg: &ZeroErrorConfig,
    dmc: &Dmc,
    spec: &SourceSpec,
    block_len: usize,
    blocks: usize,
    seed: u64,
) -> Result<BlockFailure> {
    let mut fails = Vec::with_capacity(blocks);
    let mut decode_errors = 0usize;
    for b in 0..blocks as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, b));
        let source = spec.sample_prefix(cfg.k, &mut rng);
        let msg = seq_to_index(&source, cfg.q) as usize;
        let ok = communicate(dmc, cfg.q, cfg.k, block_len, msg, &mut rng)? == msg;
        decode_errors += usize::from(!ok);
        let input = if ok { cfg.ack } else { cfg.nack };
        fails.push(!confirm(dmc, cfg, input, &mut rng)?);
    }
    let n = blocks.max(1) as f64;
    Ok(BlockFailure {
        blocks,
        decode_error: decode_errors as f64 / n,
        failure: fails.iter().filter(|&&f| f).count() as f64 / n,
        lag1_correlation: lag1_correlation(&fails),
    })
}

/// Sample lag-1 autocorrelation of a 0/1 sequence (0 for a constant one).
pub fn lag1_correlation(seq: &[bool]) -> f64 {
    let n = seq.len();
    if n < 3 {
        return 0.0;
    }
    let v: Vec<f64> = seq.iter().map(|&b| f64::from(u8::from(b))).collect();
    let mean = v.iter().sum::<f64>() / n as f64;
    let var: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
    if var == 0.0 {
        return 0.0;
    }
    let cov: f64 = v.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    cov / var
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetransmissionStats {
    pub trials: usize,
    pub p_positive: f64,
    pub mean_tk: f64,
    pub mean_tk_given_positive: f64,
    /// Success probability `1 - P[A_2]` of the geometric law of
    /// `T_k | T_k > 0`.
    pub geometric_success: f64,
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Empirical decoding error of the first block.
    pub first_block_error: f64,
    /// Empirical decoding error of later blocks (pooled).
    pub later_block_error: f64,
    /// `(1 - P(y*|ACK))^{n_k}`.
    pub confirm_miss: f64,
    /// `(P1 + c) / (1 - Pl - c)`.
    pub mean_tk_bound: f64,
    pub bound_holds: bool,
}

/// Retransmission statistics of a batch of transcripts. `p_a2` is the
/// probability that a retransmission block fails, estimated independently
/// (for example with [`estimate_block_failure`]); `fallback_later_error`
/// replaces the pooled later-block error when no transcript retransmitted.
pub fn retransmission_distribution(
    transcripts: &[ZeroErrorTranscript],
    cfg: &ZeroErrorConfig,
    dmc: &Dmc,
    p_a2: f64,
    fallback_later_error: f64,
) -> Result<RetransmissionStats> {
    let n = transcripts.len();
    if n < MIN_TRANSCRIPTS {
        return Err(Error::InsufficientSamples { needed: MIN_TRANSCRIPTS, got: n });
    }
    let tk: Vec<usize> = transcripts.iter().map(|t| t.retransmissions).collect();
    let positive: Vec<usize> = tk.iter().copied().filter(|&t| t > 0).collect();
    let p_positive = positive.len() as f64 / n as f64;
    let mean_tk = tk.iter().sum::<usize>() as f64 / n as f64;
    let mean_pos =
        if positive.is_empty() { 0.0 } else { positive.iter().sum::<usize>() as f64 / positive.len() as f64 };
    let (chi_square, dof, p_value) = geometric_chi_square(&positive, 1.0 - p_a2);

    let first_block_error = transcripts.iter().filter(|t| !t.block_decoded[0]).count() as f64 / n as f64;
    let later: Vec<bool> = transcripts.iter().flat_map(|t| t.block_decoded[1..].iter().copied()).collect();
    let later_block_error = if later.is_empty() {
        fallback_later_error
    } else {
        later.iter().filter(|&&ok| !ok).count() as f64 / later.len() as f64
    };
    let confirm_miss = (1.0 - dmc.prob(cfg.ack, cfg.y_star)).powi(cfg.n_k as i32);
    let denom = 1.0 - later_block_error - confirm_miss;
    let mean_tk_bound = if denom > 0.0 { (first_block_error + confirm_miss) / denom } else { f64::INFINITY };
    // Sampling slack of three standard errors on the empirical mean.
    let var = tk.iter().map(|&t| (t as f64 - mean_tk).powi(2)).sum::<f64>() / n as f64;
    let bound_holds = mean_tk <= mean_tk_bound + 3.0 * (var / n as f64).sqrt();
    Ok(RetransmissionStats {
        trials: n,
        p_positive,
        mean_tk,
        mean_tk_given_positive: mean_pos,
        geometric_success: 1.0 - p_a2,
        chi_square,
        dof,
        p_value,
        first_block_error,
        later_block_error,
        confirm_miss,
        mean_tk_bound,
        bound_holds,
    })
}

/// Pearson chi-square of samples on `{1, 2, ...}` against Geometric(`s`),
/// merging tail bins until every expected count is at least 5. The
/// parameter is supplied, not fitted, so `dof = bins - 1`.
pub fn geometric_chi_square(samples: &[usize], s: f64) -> (f64, usize, f64) {
    let n = samples.len() as f64;
    if samples.is_empty() || !(s > 0.0 && s <= 1.0) {
        return (0.0, 0, 1.0);
    }
    let max = samples.iter().copied().max().unwrap_or(1);
    // bins[j] covers value j + 1; the last bin is the open tail.
    let mut expected = Vec::new();
    let mut observed = Vec::new();
    let mut tail = 1.0;
    for v in 1..=max {
        let p = s * (1.0 - s).powi(v as i32 - 1);
        expected.push(n * p);
        observed.push(samples.iter().filter(|&&x| x == v).count() as f64);
        tail -= p;
    }
    *expected.last_mut().unwrap() += n * tail.max(0.0);
    while expected.len() > 1 && *expected.last().unwrap() < MIN_EXPECTED {
        let e = expected.pop().unwrap();
        let o = observed.pop().unwrap();
        *expected.last_mut().unwrap() += e;
        *observed.last_mut().unwrap() += o;
    }
    let chi: f64 = observed.iter().zip(&expected).map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = expected.len() - 1;
    let p = if dof == 0 { 1.0 } else { 1.0 - ChiSquared::new(dof as f64).map(|d| d.cdf(chi)).unwrap_or(0.0) };
    (chi, dof, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::Schedule;

    fn bits() -> SourceSpec {
        SourceSpec::iid_uniform(2, Schedule::AllAtOnce).unwrap()
    }

    #[test]
    fn configure_examples() {
        let bec = Dmc::bec(0.3).unwrap();
        let c = configure(&bec, 2, 8, 0.4, 0.4, 0.25).unwrap();
        assert_eq!((c.y_star, c.ack, c.nack), (0, 0, 1));
        assert_eq!(c.n_k, 2);
        assert_eq!(c.block_len, 20);
        let partial = Dmc::new(vec![vec![0.5, 0.0, 0.5], vec![0.2, 0.6, 0.2]]).unwrap();
        let c = configure(&partial, 2, 4, 0.3, 0.3, 0.5).unwrap();
        assert_eq!((c.y_star, c.ack, c.nack), (1, 1, 0));
        assert!(matches!(configure(&Dmc::bsc(0.1).unwrap(), 2, 8, 0.4, 0.4, 0.25), Err(Error::NotDegenerate)));
        assert!(matches!(configure(&bec, 2, 8, 0.4, 0.75, 0.25), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn noiseless_degenerate_channel_never_retransmits() {
        let dmc = Dmc::bec(0.0).unwrap();
        let cfg = configure(&dmc, 2, 6, 0.2, 0.2, 0.25).unwrap();
        for s in 0..50 {
            let t = run_zero_error(&cfg, &dmc, &bits(), &mut ChaCha8Rng::seed_from_u64(s)).unwrap();
            assert_eq!(t.retransmissions, 0);
            assert!(t.correct);
        }
    }

    #[test]
    fn forced_nack_never_stops() {
        let dmc = Dmc::bec(0.2).unwrap();
        let mut cfg = configure(&dmc, 2, 4, 0.4, 0.4, 0.25).unwrap();
        cfg.max_blocks = 20;
        let r = run_zero_error_with(&cfg, &dmc, &bits(), ConfirmPolicy::ForceNack, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(r, Err(Error::HorizonExceeded { .. })));
    }

    #[test]
    fn zero_errors_and_block_accounting() {
        let dmc = Dmc::bec(0.2).unwrap();
        let cfg = configure(&dmc, 2, 6, 0.4, 0.4, 0.5).unwrap();
        for s in 0..300 {
            let t = run_zero_error(&cfg, &dmc, &bits(), &mut ChaCha8Rng::seed_from_u64(s)).unwrap();
            assert!(t.correct);
            let expect = (cfg.block1_len + cfg.n_k) + t.retransmissions * (cfg.block_len + cfg.n_k);
            assert_eq!(t.eta as usize, expect);
        }
    }

    #[test]
    fn idle_time_counts_toward_eta() {
        let dmc = Dmc::bec(0.0).unwrap();
        let spec = SourceSpec::iid_uniform(2, Schedule::Periodic(2)).unwrap();
        let cfg = configure(&dmc, 2, 4, 0.5, 0.5, 0.25).unwrap();
        let t = run_zero_error(&cfg, &dmc, &spec, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(t.eta, 6 + 8 + 1);
    }

    #[test]
    fn chi_square_on_exact_geometric_counts() {
        let mut samples = Vec::new();
        for (v, c) in [(1, 500), (2, 250), (3, 125), (4, 63), (5, 62)] {
            samples.extend(std::iter::repeat_n(v, c));
        }
        let (chi, dof, p) = geometric_chi_square(&samples, 0.5);
        assert!(chi < 1.0, "{chi}");
        assert!(dof >= 3);
        assert!(p > 0.5);
        let (_, _, p_bad) = geometric_chi_square(&samples, 0.9);
        assert!(p_bad < 1e-6);
    }

    #[test]
    fn lag1() {
        let alt: Vec<bool> = (0..100).map(|i| i % 2 == 0).collect();
        assert!(lag1_correlation(&alt) < -0.9);
        assert_eq!(lag1_correlation(&[true; 10]), 0.0);
    }

    #[test]
    fn stats_need_enough_transcripts() {
        let dmc = Dmc::bec(0.2).unwrap();
        let cfg = configure(&dmc, 2, 4, 0.4, 0.4, 0.25).unwrap();
        let r = retransmission_distribution(&[], &cfg, &dmc, 0.05, 0.0);
        assert!(matches!(r, Err(Error::InsufficientSamples { .. })));
    }
}

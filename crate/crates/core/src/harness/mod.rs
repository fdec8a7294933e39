//! Seeded, parallel Monte Carlo experiments and their summaries.
//!
//! Trial `i` of an experiment always runs on `ChaCha8Rng` seeded with
//! [`trial_seed`]`(master_seed, i)`, and per-trial outcomes are collected in
//! index order before any reduction, so reports do not depend on the
//! number of worker threads.

pub mod report;
pub mod stats;

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelDoc, Dmc};
use crate::codes::{
    cosimulate, default_horizon, reliability_curves, run_anytime_sed, run_code, CodeConfig, CosimRule, EngineKind, Mode,
};
use crate::error::{Error, Result};
use crate::source::{Schedule, SourceDoc, SourceSpec};
use crate::zero_error::{run_zero_error, ZeroErrorConfig, ZeroErrorTranscript};

pub use report::{emit_report, load_report, write_report, ExperimentReport, Format, ReportRow};

/// Minimum error events for an anytime point to enter the slope fit.
pub const MIN_ERROR_EVENTS: usize = 30;
/// Minimum usable points per `k` in the slope fit.
pub const MIN_POINTS_PER_K: usize = 3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit seed for trial `index` of an experiment.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(0xd134_2543_de82_ef95))
}

pub fn trial_rng(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master, index))
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub channel: ChannelDoc,
    pub source: SourceDoc,
    pub modes: Vec<Mode>,
    pub ks: Vec<usize>,
    pub eps: f64,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub engine: EngineKind,
    #[serde(default = "default_true")]
    pub randomize: bool,
    #[serde(default)]
    pub horizon_cap: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// BSC(`p`) with i.i.d. uniform bits arriving one per channel use.
    pub fn bsc_bits(p: f64, modes: Vec<Mode>, ks: Vec<usize>, eps: f64, trials: usize, seed: u64) -> Result<Self> {
        Ok(ExperimentConfig {
            channel: Dmc::bsc(p)?.to_doc(),
            source: SourceSpec::iid_uniform(2, Schedule::Periodic(1))?.to_doc(),
            modes,
            ks,
            eps,
            trials,
            master_seed: seed,
            engine: EngineKind::Type,
            randomize: true,
            horizon_cap: None,
            output: None,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(Error::InvalidConfig("ks must be a nonempty list of positive lengths".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidConfig("modes must be nonempty".into()));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidConfig(format!("eps must lie in (0,1), got {}", self.eps)));
        }
        Ok(())
    }

    fn build(&self) -> Result<(Dmc, SourceSpec)> {
        self.validate()?;
        Ok((Dmc::from_doc(self.channel.clone())?, SourceSpec::from_doc(self.source.clone())?))
    }
}

/// Outcome of one trial as it enters the report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    /// Stopping time; the cap for capped trials, `None` for other failures.
    pub eta: Option<u64>,
    pub correct: bool,
    pub capped: bool,
}

fn summarize(mode: Mode, k: usize, cfg: &ExperimentConfig, approx_rate: f64, out: &[TrialOutcome]) -> ReportRow {
    let etas: Vec<f64> = out.iter().filter_map(|o| o.eta.map(|e| e as f64)).collect();
    let (mean_eta, sd_eta) = stats::mean_sd(&etas);
    let errors = out.iter().filter(|o| !o.correct).count();
    let n = out.len();
    let (err_ci_lo, err_ci_hi) = stats::wilson(errors, n, 0.95);
    ReportRow {
        mode,
        k,
        eps: cfg.eps,
        trials: n,
        mean_eta,
        rate: k as f64 / mean_eta,
        err_rate: errors as f64 / n as f64,
        rate_ci95: stats::rate_half_width(k, mean_eta, sd_eta, etas.len(), 0.95),
        approx_rate,
        seed: cfg.master_seed,
        errors,
        err_ci_lo,
        err_ci_hi,
        err_upper99: stats::clopper_pearson_upper(errors, n, 0.99),
        sd_eta,
        capped: out.iter().filter(|o| o.capped).count(),
        failures: out.iter().filter(|o| o.eta.is_none()).count(),
    }
}

/// Runs every `(mode, k)` cell for `config.trials` trials. Cells share
/// trial seeds, so modes are compared on common random numbers.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let (dmc, spec) = config.build()?;
    let mut rows = Vec::new();
    for &mode in &config.modes {
        for &k in &config.ks {
            let code = CodeConfig {
                eps: config.eps,
                mode,
                randomize: config.randomize,
                horizon_cap: config.horizon_cap,
                engine: config.engine,
            };
            let cell_spec =
                if mode == Mode::BlockSed { spec.with_schedule(Schedule::AllAtOnce)? } else { spec.clone() };
            let t_k = cell_spec
                .arrival_time(k)
                .ok_or_else(|| Error::InvalidConfig(format!("schedule has fewer than {k} symbols")))?;
            let cap = config.horizon_cap.unwrap_or_else(|| default_horizon(&dmc, k, t_k));
            let outcomes: Vec<TrialOutcome> = (0..config.trials as u64)
                .into_par_iter()
                .map(|i| match run_code(&dmc, &spec, k, &code, &mut trial_rng(config.master_seed, i)) {
                    Ok(t) => TrialOutcome { eta: t.eta, correct: t.correct, capped: false },
                    Err(Error::HorizonExceeded { .. }) => TrialOutcome { eta: Some(cap), correct: false, capped: true },
                    Err(_) => TrialOutcome { eta: None, correct: false, capped: false },
                })
                .collect();
            if outcomes.iter().all(|o| o.eta.is_none()) {
                // Every trial failed the same way; surface the cause.
                run_code(&dmc, &spec, k, &code, &mut trial_rng(config.master_seed, 0))?;
            }
            let approx = reliability_curves(&dmc, &spec, k, config.eps).map(|c| c.approx_rate).unwrap_or(f64::NAN);
            rows.push(summarize(mode, k, config, approx, &outcomes));
        }
    }
    Ok(ExperimentReport { schema: report::SCHEMA.into(), channel: dmc.name().replace(' ', "_"), rows })
}

/// Largest engine disagreements over a co-simulated batch.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CosimSummary {
    pub trials: usize,
    pub max_posterior_diff: f64,
    pub max_prior_diff: f64,
    pub max_group_prior_diff: f64,
    pub stop_disagreements: u64,
    pub map_disagreements: u64,
    pub type_bound_violations: usize,
}

/// Co-simulates the exact and type engines for every `k` in `config.ks`.
pub fn run_cosim_experiment(config: &ExperimentConfig, rule: CosimRule) -> Result<Vec<(usize, CosimSummary)>> {
    let (dmc, spec) = config.build()?;
    let mut out = Vec::new();
    for &k in &config.ks {
        let reports = (0..config.trials as u64)
            .into_par_iter()
            .map(|i| cosimulate(&dmc, &spec, k, config.eps, rule, &mut trial_rng(config.master_seed, i)))
            .collect::<Vec<_>>();
        let mut s = CosimSummary { trials: reports.len(), ..Default::default() };
        for r in reports {
            let r = match r {
                Ok(r) => r,
                Err(Error::HorizonExceeded { .. }) => continue,
                Err(e) => return Err(e),
            };
            s.max_posterior_diff = s.max_posterior_diff.max(r.max_posterior_diff);
            s.max_prior_diff = s.max_prior_diff.max(r.max_prior_diff);
            s.max_group_prior_diff = s.max_group_prior_diff.max(r.max_group_prior_diff);
            s.stop_disagreements += r.stop_disagreements;
            s.map_disagreements += r.map_disagreements;
            s.type_bound_violations += usize::from(r.final_types > r.type_bound);
        }
        out.push((k, s));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnytimeConfig {
    pub channel: ChannelDoc,
    pub source: SourceDoc,
    pub ks: Vec<usize>,
    /// Last decoding time; every `t` in `[t_k, t_max]` is queried.
    pub t_max: u64,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub engine: EngineKind,
}

/// Error count of prefix length `k` decoded at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnytimeRow {
    pub k: usize,
    pub t_k: u64,
    pub t: u64,
    pub trials: usize,
    pub errors: usize,
}

impl AnytimeRow {
    pub fn err(&self) -> f64 {
        self.errors as f64 / self.trials as f64
    }
}

/// Runs one anytime code per trial and answers every `(k, t)` request with
/// `t_k <= t <= t_max` from that single run.
pub fn run_anytime_experiment(config: &AnytimeConfig) -> Result<Vec<AnytimeRow>> {
    if config.trials == 0 || config.ks.is_empty() {
        return Err(Error::InvalidConfig("need trials >= 1 and a nonempty k list".into()));
    }
    let dmc = Dmc::from_doc(config.channel.clone())?;
    let spec = SourceSpec::from_doc(config.source.clone())?;
    let mut requests = Vec::new();
    let mut rows = Vec::new();
    for &k in &config.ks {
        let t_k =
            spec.arrival_time(k).ok_or_else(|| Error::InvalidConfig(format!("schedule has fewer than {k} symbols")))?;
        for t in t_k..=config.t_max {
            requests.push((k, t));
            rows.push(AnytimeRow { k, t_k, t, trials: config.trials, errors: 0 });
        }
    }
    let results = (0..config.trials as u64)
        .into_par_iter()
        .map(|i| {
            run_anytime_sed(&dmc, &spec, config.t_max, &requests, config.engine, &mut trial_rng(config.master_seed, i))
        })
        .collect::<Result<Vec<_>>>()?;
    for est in results {
        for (row, e) in rows.iter_mut().zip(est) {
            row.errors += usize::from(!e.correct);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnytimeFit {
    /// Anytime reliability: minus the pooled slope of `ln err` in `t - t_k`.
    pub alpha: f64,
    /// `(k, intercept of ln err at t = t_k)`.
    pub intercepts: Vec<(usize, f64)>,
    /// Within-`k` coefficient of determination (0 when nothing varies).
    pub r_squared: f64,
    pub points: usize,
    /// Set when the fitted slope vanishes.
    pub flat: bool,
}

/// Pooled least-squares fit of `ln err = a_k - alpha (t - t_k)` with one
/// intercept per `k`. Points need at least [`MIN_ERROR_EVENTS`] errors and
/// each `k` at least [`MIN_POINTS_PER_K`] such points; other `k` are left
/// out.
pub fn fit_anytime_slope(rows: &[AnytimeRow]) -> Result<AnytimeFit> {
    let mut ks: Vec<usize> = rows.iter().map(|r| r.k).collect();
    ks.sort_unstable();
    ks.dedup();
    let mut groups = Vec::new();
    for k in ks {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.k == k && r.errors >= MIN_ERROR_EVENTS)
            .map(|r| ((r.t - r.t_k) as f64, r.err().ln()))
            .collect();
        if pts.len() >= MIN_POINTS_PER_K {
            groups.push((k, pts));
        }
    }
    if groups.is_empty() {
        return Err(Error::InsufficientErrorEvents);
    }
    let means: Vec<(f64, f64)> = groups
        .iter()
        .map(|(_, p)| {
            let n = p.len() as f64;
            (p.iter().map(|v| v.0).sum::<f64>() / n, p.iter().map(|v| v.1).sum::<f64>() / n)
        })
        .collect();
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for ((_, p), &(mx, my)) in groups.iter().zip(&means) {
        for &(x, y) in p {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
            syy += (y - my) * (y - my);
        }
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r_squared = if sxx > 0.0 && syy > 0.0 { sxy * sxy / (sxx * syy) } else { 0.0 };
    let intercepts = groups.iter().zip(&means).map(|((k, _), &(mx, my))| (*k, my - slope * mx)).collect();
    Ok(AnytimeFit {
        alpha: -slope,
        intercepts,
        r_squared,
        points: groups.iter().map(|g| g.1.len()).sum(),
        flat: slope.abs() < 1e-12,
    })
}

/// Runs `trials` zero-error protocol transcripts in parallel.
pub fn run_zero_error_trials(
    cfg: &ZeroErrorConfig,
    dmc: &Dmc,
    spec: &SourceSpec,
    trials: usize,
    master_seed: u64,
) -> Result<Vec<ZeroErrorTranscript>> {
    (0..trials as u64).into_par_iter().map(|i| run_zero_error(cfg, dmc, spec, &mut trial_rng(master_seed, i))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_stable_and_distinct() {
        assert_eq!(trial_seed(7, 3), trial_seed(7, 3));
        assert_ne!(trial_seed(7, 3), trial_seed(7, 4));
        assert_ne!(trial_seed(7, 3), trial_seed(8, 3));
    }

    #[test]
    fn synthetic_exponential_fit() {
        let mut rows = Vec::new();
        for (k, kappa) in [(4usize, 0.3), (8, 0.5)] {
            for d in 0..10u64 {
                let err = kappa * (-0.2 * d as f64).exp();
                let trials = 1_000_000_000usize;
                rows.push(AnytimeRow {
                    k,
                    t_k: k as u64,
                    t: k as u64 + d,
                    trials,
                    errors: (err * trials as f64).round() as usize,
                });
            }
        }
        let fit = fit_anytime_slope(&rows).unwrap();
        assert!((fit.alpha - 0.2).abs() < 1e-8, "{}", fit.alpha);
        assert!(fit.r_squared > 0.999_999);
        assert!((fit.intercepts[0].1 - 0.3f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn flat_table_is_flagged() {
        let rows: Vec<AnytimeRow> =
            (0..5).map(|d| AnytimeRow { k: 4, t_k: 4, t: 4 + d, trials: 1000, errors: 100 }).collect();
        let fit = fit_anytime_slope(&rows).unwrap();
        assert_eq!(fit.alpha, 0.0);
        assert!(fit.flat);
        let sparse: Vec<AnytimeRow> = rows.iter().map(|r| AnytimeRow { errors: 3, ..*r }).collect();
        assert!(matches!(fit_anytime_slope(&sparse), Err(Error::InsufficientErrorEvents)));
    }

    #[test]
    fn single_trial_report_matches_transcript() {
        let cfg = ExperimentConfig::bsc_bits(0.05, vec![Mode::InstSed], vec![6], 1e-3, 1, 11).unwrap();
        let rep = run_experiment(&cfg).unwrap();
        let dmc = Dmc::bsc(0.05).unwrap();
        let spec = SourceSpec::iid_uniform(2, Schedule::Periodic(1)).unwrap();
        let t = run_code(&dmc, &spec, 6, &CodeConfig::new(1e-3, Mode::InstSed), &mut trial_rng(11, 0)).unwrap();
        let row = &rep.rows[0];
        assert_eq!(row.mean_eta, t.eta.unwrap() as f64);
        assert_eq!(row.err_rate, if t.correct { 0.0 } else { 1.0 });
        assert_eq!(row.rate, 6.0 / row.mean_eta);
    }
}

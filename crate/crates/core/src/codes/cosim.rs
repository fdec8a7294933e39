//! Lock-step run of the type engine against the exact engine.
//!
//! The type engine chooses the partition; it is expanded to one group per
//! sequence and fed to the exact engine, and both consume the same channel
//! output (and the same randomization kernel). Any disagreement in the
//! resulting beliefs is numerical.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{seq_to_index, BeliefState};
use crate::channel::{sample_index, Dmc};
use crate::error::{Error, Result};
use crate::partition::randomization_plan;
use crate::source::SourceSpec;
use crate::type_engine::TypeSet;

use super::default_horizon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CosimRule {
    /// Binary SED split each step.
    Sed,
    /// Greedy split with randomization up to `t_k`, SED split afterwards.
    GreedyThenSed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosimReport {
    pub steps: u64,
    /// Largest per-sequence posterior difference over all steps.
    pub max_posterior_diff: f64,
    /// Largest per-sequence prior difference over all steps.
    pub max_prior_diff: f64,
    /// Largest group-prior difference over all steps.
    pub max_group_prior_diff: f64,
    /// Steps after `t_k` where the two stopping rules disagreed.
    pub stop_disagreements: u64,
    /// Steps after `t_k` where the prefix estimates disagreed.
    pub map_disagreements: u64,
    pub eta: Option<u64>,
    pub correct: bool,
    /// Live types at the end and the bound `1 + |X| * steps` they must obey.
    pub final_types: usize,
    pub type_bound: usize,
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn cosimulate<R: Rng + ?Sized>(
    dmc: &Dmc,
    spec: &SourceSpec,
    k: usize,
    eps: f64,
    rule: CosimRule,
    rng: &mut R,
) -> Result<CosimReport> {
    if !dmc.is_non_degenerate() {
        return Err(Error::DegenerateChannel);
    }
    if !dmc.is_symmetric_binary_input() {
        return Err(Error::NotSymmetricBinary);
    }
    if !spec.is_equiprobable() {
        return Err(Error::NotEquiprobable);
    }
    let q = spec.q();
    let t_k =
        spec.arrival_time(k).ok_or_else(|| Error::InvalidConfig(format!("schedule has fewer than {k} symbols")))?;
    let cap = default_horizon(dmc, k, t_k);
    let p_star = dmc.cap_input_dist().to_vec();

    let source = spec.sample_prefix(k, rng);
    let mut types = TypeSet::new(q);
    let mut exact = BeliefState::new(q);
    let mut rep = CosimReport {
        steps: 0,
        max_posterior_diff: 0.0,
        max_prior_diff: 0.0,
        max_group_prior_diff: 0.0,
        stop_disagreements: 0,
        map_disagreements: 0,
        eta: None,
        correct: false,
        final_types: 1,
        type_bound: 1,
    };
    for t in 1..=cap {
        let len = spec.n_of_t(t, k);
        types.extend_to(spec, len)?;
        exact.extend_to(spec, len)?;
        rep.max_prior_diff = rep.max_prior_diff.max(max_abs_diff(&types.expand()?, exact.probs()));

        let greedy = rule == CosimRule::GreedyThenSed && t <= t_k;
        let part = if greedy { types.type_greedy_partition(&p_star) } else { types.type_sed_partition() };
        let assignment = types.expand_assignment(&part)?;
        let pi_exact = exact.group_prior(&assignment, dmc.input_size())?;
        rep.max_group_prior_diff = rep.max_group_prior_diff.max(max_abs_diff(&part.group_priors, &pi_exact));

        let z = part.group[types.position_of(seq_to_index(&source[..len], q))];
        let plan = if greedy { Some(randomization_plan(&part.group_priors, &p_star)?) } else { None };
        let kernel = plan.as_ref().map(|p| p.kernel.as_slice());
        let x = match kernel {
            Some(kr) => sample_index(&kr[z], rng.random()),
            None => z,
        };
        let y = dmc.sample_output(x, rng)?;
        types.type_posterior_update(&part, kernel, dmc, y)?;
        exact.bayes_update(&assignment, kernel, dmc, y)?;
        rep.max_posterior_diff = rep.max_posterior_diff.max(max_abs_diff(&types.expand()?, exact.probs()));
        rep.steps = t;
        rep.final_types = types.len();
        rep.type_bound = 1 + dmc.input_size() * t as usize;

        if t >= t_k {
            let type_stop = types.type_stop_decode(k, eps);
            let exact_stop = exact.stop_check(k, eps);
            if type_stop.is_some() != exact_stop {
                rep.stop_disagreements += 1;
            }
            if types.type_prefix_decode(k) != exact.map_prefix_estimate(k).0 {
                rep.map_disagreements += 1;
            }
            if let Some(est) = type_stop {
                rep.eta = Some(t);
                rep.correct = est == seq_to_index(&source, q);
                return Ok(rep);
            }
        }
    }
    Err(Error::HorizonExceeded { cap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::Schedule;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn engines_agree_on_small_runs() {
        let dmc = Dmc::bsc(0.05).unwrap();
        let spec = SourceSpec::iid_uniform(2, Schedule::Periodic(1)).unwrap();
        for rule in [CosimRule::Sed, CosimRule::GreedyThenSed] {
            for seed in 0..20 {
                let r = cosimulate(&dmc, &spec, 6, 1e-3, rule, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
                assert!(r.max_posterior_diff < 1e-9, "{r:?}");
                assert!(r.max_group_prior_diff < 1e-9);
                assert_eq!(r.stop_disagreements, 0);
                assert!(r.final_types <= r.type_bound);
            }
        }
    }
}

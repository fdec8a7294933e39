//! Common interface over the exact and type-based belief engines.

use serde::{Deserialize, Serialize};

use crate::belief::BeliefState;
use crate::channel::Dmc;
use crate::error::Result;
use crate::partition::{greedy_partition, sed_partition_binary, Partition};
use crate::source::SourceSpec;
use crate::type_engine::{TypePartition, TypeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Exact,
    #[default]
    Type,
}

/// Belief bookkeeping shared by encoder and decoder. Both sides hold an
/// identical replica driven by public quantities only.
pub trait BeliefEngine {
    fn seq_len(&self) -> usize;
    fn extend_to(&mut self, spec: &SourceSpec, len: usize) -> Result<()>;
    /// Greedy partition toward `p_star`; returns the group priors.
    fn partition_greedy(&mut self, p_star: &[f64]) -> Vec<f64>;
    /// Binary SED partition; returns the group priors.
    fn partition_sed(&mut self) -> Vec<f64>;
    /// Group of a sequence under the current partition.
    fn group_of(&self, index: u128) -> usize;
    fn update(&mut self, dmc: &Dmc, y: usize, kernel: Option<&[Vec<f64>]>) -> Result<f64>;
    fn map_prefix(&self, k: usize) -> u128;
    fn stop_decode(&self, k: usize, eps: f64) -> Option<u128>;
}

#[derive(Debug, Clone)]
pub struct ExactEngine {
    pub state: BeliefState,
    pub partition: Option<Partition>,
}

impl ExactEngine {
    pub fn new(q: usize) -> Self {
        ExactEngine { state: BeliefState::new(q), partition: None }
    }

    fn current(&self) -> &Partition {
        self.partition.as_ref().expect("partition before use")
    }
}

impl BeliefEngine for ExactEngine {
    fn seq_len(&self) -> usize {
        self.state.seq_len()
    }

    fn extend_to(&mut self, spec: &SourceSpec, len: usize) -> Result<()> {
        self.state.extend_to(spec, len)
    }

    fn partition_greedy(&mut self, p_star: &[f64]) -> Vec<f64> {
        let p = greedy_partition(self.state.probs(), p_star);
        let pi = p.group_priors.clone();
        self.partition = Some(p);
        pi
    }

    fn partition_sed(&mut self) -> Vec<f64> {
        let p = sed_partition_binary(self.state.probs());
        let pi = p.group_priors.clone();
        self.partition = Some(p);
        pi
    }

    fn group_of(&self, index: u128) -> usize {
        self.current().assignment[index as usize]
    }

    fn update(&mut self, dmc: &Dmc, y: usize, kernel: Option<&[Vec<f64>]>) -> Result<f64> {
        let p = self.partition.take().expect("partition before update");
        let r = self.state.bayes_update(&p.assignment, kernel, dmc, y);
        self.partition = Some(p);
        r
    }

    fn map_prefix(&self, k: usize) -> u128 {
        self.state.map_prefix_estimate(k).0
    }

    fn stop_decode(&self, k: usize, eps: f64) -> Option<u128> {
        if self.state.seq_len() < k {
            return None;
        }
        let (idx, p) = self.state.map_prefix_estimate(k);
        (p >= 1.0 - eps).then_some(idx)
    }
}

#[derive(Debug, Clone)]
pub struct TypeEngine {
    pub set: TypeSet,
    pub partition: TypePartition,
}

impl TypeEngine {
    pub fn new(q: usize) -> Self {
        TypeEngine { set: TypeSet::new(q), partition: TypePartition::default() }
    }
}

impl BeliefEngine for TypeEngine {
    fn seq_len(&self) -> usize {
        self.set.seq_len()
    }

    fn extend_to(&mut self, spec: &SourceSpec, len: usize) -> Result<()> {
        self.set.extend_to(spec, len)
    }

    fn partition_greedy(&mut self, p_star: &[f64]) -> Vec<f64> {
        self.partition = self.set.type_greedy_partition(p_star);
        self.partition.group_priors.clone()
    }

    fn partition_sed(&mut self) -> Vec<f64> {
        self.partition = self.set.type_sed_partition();
        self.partition.group_priors.clone()
    }

    fn group_of(&self, index: u128) -> usize {
        self.partition.group[self.set.position_of(index)]
    }

    fn update(&mut self, dmc: &Dmc, y: usize, kernel: Option<&[Vec<f64>]>) -> Result<f64> {
        self.set.type_posterior_update(&self.partition, kernel, dmc, y)
    }

    fn map_prefix(&self, k: usize) -> u128 {
        self.set.type_prefix_decode(k)
    }

    fn stop_decode(&self, k: usize, eps: f64) -> Option<u128> {
        self.set.type_stop_decode(k, eps)
    }
}

//! Group partitioning rules and the input randomization that matches the
//! transmitted-input distribution to the capacity-achieving one.

use crate::channel::argmax;
use crate::error::{Error, Result};

/// Absolute slack used when checking the partitioning rules.
pub const RULE_TOL: f64 = 1e-12;
const MASS_TOL: f64 = 1e-12;
/// Up to this many nonzero items the binary SED split is found by exhaustive
/// search for the smallest difference.
pub const SED_EXHAUSTIVE_MAX: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// `assignment[i]` is the channel input of item `i`.
    pub assignment: Vec<usize>,
    pub group_priors: Vec<f64>,
    /// Smallest member prior per group; `+inf` for empty groups.
    pub min_member_prior: Vec<f64>,
}

impl Partition {
    pub fn from_assignment(priors: &[f64], assignment: Vec<usize>, n_inputs: usize) -> Self {
        let mut group_priors = vec![0.0; n_inputs];
        let mut min_member_prior = vec![f64::INFINITY; n_inputs];
        for (&z, &p) in assignment.iter().zip(priors) {
            group_priors[z] += p;
            min_member_prior[z] = min_member_prior[z].min(p);
        }
        Partition { assignment, group_priors, min_member_prior }
    }

    /// Largest violation of `pi_x - P*(x) <= min member prior of x`
    /// (`pi_x <= P*(x)` for empty groups). Nonpositive when the rule holds.
    pub fn capacity_rule_violation(&self, p_star: &[f64]) -> f64 {
        self.group_priors
            .iter()
            .zip(p_star)
            .zip(&self.min_member_prior)
            .map(|((&pi, &ps), &m)| if m.is_finite() { pi - ps - m } else { pi - ps })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn satisfies_capacity_rule(&self, p_star: &[f64]) -> bool {
        self.capacity_rule_violation(p_star) <= RULE_TOL
    }

    /// Binary SED rule: the heavier group's excess is at most its smallest
    /// member prior.
    pub fn satisfies_sed_rule(&self) -> bool {
        assert_eq!(self.group_priors.len(), 2);
        let (pi0, pi1) = (self.group_priors[0], self.group_priors[1]);
        let ok0 = pi0 < pi1 || pi0 - pi1 <= self.min_member_prior[0] + RULE_TOL;
        let ok1 = pi1 < pi0 || pi1 - pi0 <= self.min_member_prior[1] + RULE_TOL;
        ok0 && ok1
    }
}

/// Visiting order: prior descending, ties by smaller id.
fn descending_order(priors: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..priors.len()).collect();
    order.sort_by(|&a, &b| priors[b].total_cmp(&priors[a]).then(a.cmp(&b)));
    order
}

/// Greedy assignment: each item, largest first, joins the input with the
/// largest remaining gap `P*(x) - pi_x` (ties to the smaller input).
pub fn greedy_partition(priors: &[f64], p_star: &[f64]) -> Partition {
    let n_inputs = p_star.len();
    let mut assignment = vec![0; priors.len()];
    let mut pi = vec![0.0; n_inputs];
    for i in descending_order(priors) {
        let gaps: Vec<f64> = p_star.iter().zip(&pi).map(|(a, b)| a - b).collect();
        let x = argmax(&gaps);
        assignment[i] = x;
        pi[x] += priors[i];
    }
    Partition::from_assignment(priors, assignment, n_inputs)
}

/// Binary partition obeying the instantaneous SED rule, built from a
/// smallest-difference split.
///
/// With at most [`SED_EXHAUSTIVE_MAX`] nonzero items every split is searched.
/// Otherwise the shortest descending prefix reaching 1/2 forms group 0 and
/// the smallest member of the heavier group is moved across while the rule
/// fails; each move strictly shrinks the difference. Zero-prior items always
/// join the lighter group.
pub fn sed_partition_binary(priors: &[f64]) -> Partition {
    let order = descending_order(priors);
    let nonzero: Vec<usize> = order.iter().copied().filter(|&i| priors[i] > 0.0).collect();
    let mut assignment = vec![1usize; priors.len()];
    if nonzero.len() <= SED_EXHAUSTIVE_MAX {
        exhaustive_split(priors, &nonzero, &mut assignment);
    } else {
        repair_split(priors, &nonzero, &mut assignment);
    }
    let mut pi = [0.0; 2];
    for &i in &nonzero {
        pi[assignment[i]] += priors[i];
    }
    let light = if pi[0] < pi[1] { 0 } else { 1 };
    for &i in order.iter().filter(|&&i| priors[i] <= 0.0) {
        assignment[i] = light;
    }
    Partition::from_assignment(priors, assignment, 2)
}

/// Gray-code walk over all splits with the largest item pinned to group 0;
/// keeps the first split reaching the smallest `|pi0 - pi1|`.
fn exhaustive_split(priors: &[f64], items: &[usize], assignment: &mut [usize]) {
    let Some((&first, rest)) = items.split_first() else { return };
    assignment[first] = 0;
    let n = rest.len();
    let mut in0 = vec![false; n];
    let mut pi0 = priors[first];
    let rest_total: f64 = rest.iter().map(|&i| priors[i]).sum();
    let mut pi1 = rest_total;
    let mut best = ((pi0 - pi1).abs(), 0u32);
    let mut gray = 0u32;
    for step in 1..(1u32 << n) {
        let bit = step.trailing_zeros() as usize;
        let p = priors[rest[bit]];
        if in0[bit] {
            pi0 -= p;
            pi1 += p;
        } else {
            pi0 += p;
            pi1 -= p;
        }
        in0[bit] = !in0[bit];
        gray ^= 1 << bit;
        let d = (pi0 - pi1).abs();
        if d < best.0 - RULE_TOL {
            best = (d, gray);
        }
    }
    for (b, &i) in rest.iter().enumerate() {
        assignment[i] = if best.1 >> b & 1 == 1 { 0 } else { 1 };
    }
}

fn repair_split(priors: &[f64], items: &[usize], assignment: &mut [usize]) {
    let mut acc = 0.0;
    let mut cut = items.len();
    for (pos, &i) in items.iter().enumerate() {
        acc += priors[i];
        if acc >= 0.5 {
            cut = pos + 1;
            break;
        }
    }
    // Groups kept sorted descending by prior so the smallest member is last.
    let mut groups = [items[..cut].to_vec(), items[cut..].to_vec()];
    let mut pi = [groups[0].iter().map(|&i| priors[i]).sum::<f64>(), groups[1].iter().map(|&i| priors[i]).sum::<f64>()];
    let cap = 4 * items.len() + 16;
    for _ in 0..cap {
        let heavy = if pi[0] >= pi[1] { 0 } else { 1 };
        let light = 1 - heavy;
        let diff = pi[heavy] - pi[light];
        let Some(&m) = groups[heavy].last() else { break };
        if diff <= priors[m] + RULE_TOL {
            break;
        }
        groups[heavy].pop();
        pi[heavy] -= priors[m];
        pi[light] += priors[m];
        let g = &mut groups[light];
        if g.last().is_none_or(|&l| priors[l] >= priors[m]) {
            g.push(m);
        } else {
            let pos = g.partition_point(|&l| priors[l] >= priors[m]);
            g.insert(pos, m);
        }
    }
    for (z, g) in groups.iter().enumerate() {
        for &i in g {
            assignment[i] = z;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomizationPlan {
    /// Inputs with `pi_x > P*(x)`.
    pub over_set: Vec<usize>,
    /// Inputs with `pi_x <= P*(x)`.
    pub under_set: Vec<usize>,
    /// `(from, to, mass)` transfers.
    pub transfers: Vec<(usize, usize, f64)>,
    /// `kernel[z][x] = P(X_t = x | Z_t = z)`.
    pub kernel: Vec<Vec<f64>>,
}

impl RandomizationPlan {
    /// Largest residual of the mass balance on both sides.
    pub fn balance_residual(&self, group_priors: &[f64], p_star: &[f64]) -> f64 {
        let mut out = vec![0.0; p_star.len()];
        let mut inc = vec![0.0; p_star.len()];
        for &(from, to, m) in &self.transfers {
            out[from] += m;
            inc[to] += m;
        }
        let over = self.over_set.iter().map(|&x| (group_priors[x] - out[x] - p_star[x]).abs());
        let under = self.under_set.iter().map(|&x| (group_priors[x] + inc[x] - p_star[x]).abs());
        over.chain(under).fold(0.0, f64::max)
    }

    pub fn is_identity(&self) -> bool {
        self.transfers.is_empty()
    }
}

/// Moves each over-target group's excess to under-target groups, both
/// visited in ascending input order.
pub fn randomization_plan(group_priors: &[f64], p_star: &[f64]) -> Result<RandomizationPlan> {
    let n = p_star.len();
    if group_priors.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: group_priors.len() });
    }
    let over_set: Vec<usize> = (0..n).filter(|&x| group_priors[x] > p_star[x]).collect();
    let under_set: Vec<usize> = (0..n).filter(|&x| group_priors[x] <= p_star[x]).collect();
    let excess: f64 = over_set.iter().map(|&x| group_priors[x] - p_star[x]).sum();
    let deficit: f64 = under_set.iter().map(|&x| p_star[x] - group_priors[x]).sum();
    if (excess - deficit).abs() > MASS_TOL {
        return Err(Error::MassImbalance { excess, deficit });
    }

    let mut transfers = Vec::new();
    let (mut i, mut j) = (0, 0);
    let mut left_over = over_set.first().map_or(0.0, |&x| group_priors[x] - p_star[x]);
    let mut left_under = under_set.first().map_or(0.0, |&x| p_star[x] - group_priors[x]);
    while i < over_set.len() && j < under_set.len() {
        let (from, to) = (over_set[i], under_set[j]);
        if left_over < left_under {
            // The source is exhausted.
            transfers.push((from, to, left_over));
            left_under -= left_over;
            i += 1;
            left_over = over_set.get(i).map_or(0.0, |&x| group_priors[x] - p_star[x]);
        } else {
            // The destination is filled.
            if left_under > 0.0 {
                transfers.push((from, to, left_under));
            }
            left_over -= left_under;
            j += 1;
            left_under = under_set.get(j).map_or(0.0, |&x| p_star[x] - group_priors[x]);
            if left_over <= 0.0 {
                i += 1;
                left_over = over_set.get(i).map_or(0.0, |&x| group_priors[x] - p_star[x]);
            }
        }
    }

    let mut kernel: Vec<Vec<f64>> = (0..n)
        .map(|z| {
            let mut row = vec![0.0; n];
            row[z] = 1.0;
            row
        })
        .collect();
    for &z in &over_set {
        kernel[z][z] = p_star[z] / group_priors[z];
    }
    for &(from, to, m) in &transfers {
        kernel[from][to] += m / group_priors[from];
    }
    Ok(RandomizationPlan { over_set, under_set, transfers, kernel })
}

/// `sum_z K(x|z) pi_z`.
pub fn marginal_input_dist(group_priors: &[f64], plan: &RandomizationPlan) -> Vec<f64> {
    let n = plan.kernel.len();
    let mut out = vec![0.0; n];
    for (z, row) in plan.kernel.iter().enumerate() {
        for (x, &k) in row.iter().enumerate() {
            out[x] += k * group_priors[z];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn greedy_examples() {
        let p = greedy_partition(&[0.4, 0.3, 0.2, 0.1], &[0.5, 0.5]);
        assert_eq!(p.assignment, vec![0, 1, 1, 0]);
        assert!(close(&p.group_priors, &[0.5, 0.5], 1e-15));
        assert!((p.capacity_rule_violation(&[0.5, 0.5]) - (-0.1)).abs() < 1e-12);

        let p = greedy_partition(&[1.0], &[0.3, 0.7]);
        assert_eq!(p.assignment, vec![1]);

        let p = greedy_partition(&[0.2, 0.5, 0.3], &[0.5, 0.3, 0.2]);
        assert_eq!(p.assignment, vec![2, 0, 1]);
        assert_eq!(p.group_priors, vec![0.5, 0.3, 0.2]);
    }

    #[test]
    fn sed_examples() {
        let p = sed_partition_binary(&[0.35, 0.25, 0.25, 0.15]);
        assert!((p.group_priors[0] - p.group_priors[1]).abs() < 1e-15);
        assert!(p.satisfies_sed_rule());

        let p = sed_partition_binary(&[0.9, 0.1]);
        assert_eq!(p.assignment, vec![0, 1]);
        assert!((p.group_priors[0] - p.group_priors[1] - 0.8).abs() < 1e-15);
        assert!(p.satisfies_sed_rule());

        let p = sed_partition_binary(&[0.125; 8]);
        assert_eq!(p.group_priors, vec![0.5, 0.5]);

        let p = sed_partition_binary(&[0.5, 0.5]);
        assert_eq!(p.assignment, vec![0, 1]);
    }

    #[test]
    fn sed_large_instances_use_repair() {
        let n = 64;
        let w: Vec<f64> = (1..=n).map(|i| 1.0 / i as f64).collect();
        let s: f64 = w.iter().sum();
        let priors: Vec<f64> = w.iter().map(|v| v / s).collect();
        let p = sed_partition_binary(&priors);
        assert!(p.satisfies_sed_rule());
        let uniform = vec![1.0 / 1024.0; 1024];
        let p = sed_partition_binary(&uniform);
        assert!((p.group_priors[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sed_zero_priors_join_lighter_group() {
        let p = sed_partition_binary(&[0.0, 0.7, 0.3, 0.0]);
        assert_eq!(p.assignment, vec![1, 0, 1, 1]);
        assert!(p.satisfies_sed_rule());
        let mut priors = vec![0.0; 40];
        priors[3] = 0.6;
        priors[17] = 0.4;
        assert!(sed_partition_binary(&priors).satisfies_sed_rule());
    }

    #[test]
    fn plan_examples() {
        let plan = randomization_plan(&[0.6, 0.4], &[0.5, 0.5]).unwrap();
        assert_eq!(plan.transfers.len(), 1);
        let (f, t, m) = plan.transfers[0];
        assert_eq!((f, t), (0, 1));
        assert!((m - 0.1).abs() < 1e-15);
        assert!(close(&plan.kernel[0], &[5.0 / 6.0, 1.0 / 6.0], 1e-15));
        assert_eq!(plan.kernel[1], vec![0.0, 1.0]);

        let plan = randomization_plan(&[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert!(plan.is_identity());
        assert_eq!(plan.kernel, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);

        let third = 1.0 / 3.0;
        let pi = [0.7, 0.2, 0.1];
        let ps = [third; 3];
        let plan = randomization_plan(&pi, &ps).unwrap();
        assert_eq!(plan.over_set, vec![0]);
        assert_eq!(plan.under_set, vec![1, 2]);
        assert!((plan.transfers[0].2 - (third - 0.2)).abs() < 1e-15);
        assert!((plan.transfers[1].2 - (third - 0.1)).abs() < 1e-15);
        assert!(plan.balance_residual(&pi, &ps) < 1e-12);
        assert!(close(&marginal_input_dist(&pi, &plan), &ps, 1e-12));
    }

    #[test]
    fn plan_rejects_imbalance() {
        assert!(matches!(randomization_plan(&[0.7, 0.4], &[0.5, 0.5]), Err(Error::MassImbalance { .. })));
    }

    #[test]
    fn many_to_many_transfers() {
        let pi = [0.3, 0.3, 0.05, 0.05, 0.3];
        let ps = [0.2, 0.2, 0.2, 0.2, 0.2];
        let plan = randomization_plan(&pi, &ps).unwrap();
        assert!(plan.balance_residual(&pi, &ps) < 1e-12);
        for row in &plan.kernel {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(close(&marginal_input_dist(&pi, &plan), &ps, 1e-12));
        // Under-target rows never move mass.
        for &z in &plan.under_set {
            assert_eq!(plan.kernel[z][z], 1.0);
        }
    }
}

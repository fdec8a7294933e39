//! One step of the instantaneous encoding phase: greedy grouping of the
//! priors, then the randomization kernel that makes the input marginal
//! exactly P*_X.

use feedback_jscc::channel::Dmc;
use feedback_jscc::partition::{greedy_partition, marginal_input_dist, randomization_plan, sed_partition_binary};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dmc = Dmc::new(vec![vec![0.8, 0.15, 0.05], vec![0.05, 0.15, 0.8], vec![0.2, 0.6, 0.2]])?;
    let p_star = dmc.cap_input_dist().to_vec();
    let priors = [0.31, 0.22, 0.14, 0.11, 0.09, 0.07, 0.04, 0.02];

    let part = greedy_partition(&priors, &p_star);
    println!("P*_X          {p_star:.4?}");
    println!("assignment    {:?}", part.assignment);
    println!("group priors  {:.4?}", part.group_priors);
    println!("rule holds    {}", part.satisfies_capacity_rule(&p_star));

    let plan = randomization_plan(&part.group_priors, &p_star)?;
    println!(
        "transfers     {:?}",
        plan.transfers.iter().map(|(a, b, m)| format!("{a}->{b}: {m:.4}")).collect::<Vec<_>>()
    );
    for (z, row) in plan.kernel.iter().enumerate() {
        println!("kernel[{z}]     {row:.4?}");
    }
    println!("marginal      {:.4?}", marginal_input_dist(&part.group_priors, &plan));

    let sed = sed_partition_binary(&priors);
    println!("binary SED    {:?} -> {:.4?}", sed.assignment, sed.group_priors);
    Ok(())
}

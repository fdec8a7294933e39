//! Capacity, capacity-achieving input law, C1 and class of a few channels.

use feedback_jscc::channel::Dmc;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let channels = [
        Dmc::bsc(0.05)?,
        Dmc::bec(0.3)?,
        Dmc::new(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.2, 0.7]])?,
        Dmc::new(vec![vec![0.5, 0.0, 0.5], vec![0.2, 0.6, 0.2]])?,
    ];
    for dmc in &channels {
        println!("{}", dmc.name());
        println!("  class      {:?}", dmc.class());
        println!("  C          {:.6} nats", dmc.capacity());
        println!("  P*_X       {:?}", dmc.cap_input_dist().iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>());
        println!("  C1         {:.6}", dmc.max_kl_divergence());
        if let Some(w) = dmc.degenerate_witness() {
            println!("  witness    y*={} ack={} nack={}", w.output, w.ack, w.nack);
        }
    }
    Ok(())
}

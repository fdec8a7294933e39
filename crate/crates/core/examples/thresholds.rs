//! Arrival-rate assumption checks and the rate approximation for a few
//! source schedules over BSC(0.05).

use feedback_jscc::channel::Dmc;
use feedback_jscc::codes::reliability_curves;
use feedback_jscc::source::{Schedule, SourceLaw, SourceSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dmc = Dmc::bsc(0.05)?;
    let sources = [
        ("uniform bits, one per use", SourceSpec::iid_uniform(2, Schedule::Periodic(1))?),
        ("uniform bits, one every 3 uses", SourceSpec::iid_uniform(2, Schedule::Periodic(3))?),
        (
            "skewed 4-ary, one per use",
            SourceSpec::new(4, Schedule::Periodic(1), SourceLaw::Iid(vec![0.4, 0.3, 0.2, 0.1]))?,
        ),
        (
            "sticky Markov bits",
            SourceSpec::new(
                2,
                Schedule::Periodic(1),
                SourceLaw::Markov { initial: vec![0.5, 0.5], transition: vec![vec![0.9, 0.1], vec![0.1, 0.9]] },
            )?,
        ),
    ];
    for (name, spec) in &sources {
        let d = spec.describe();
        let t = spec.assumption_thresholds(&dmc)?;
        let c = reliability_curves(&dmc, spec, 16, 1e-6)?;
        println!("{name}");
        println!("  H = {:.4} nats/symbol, f = {}", d.entropy_rate, d.arrival_rate);
        println!("  (b)  f > {:.4}: {}", t.thr_b, t.f_ok_b);
        println!("  (b') f > {:.4}: {}", t.thr_b_prime, t.f_ok_b_prime);
        println!("  k=16, eps=1e-6: approx rate {:.4}, buffer bound {:.4}", c.approx_rate, c.buffer_bound_rate);
    }
    Ok(())
}

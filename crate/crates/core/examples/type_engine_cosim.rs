//! Runs the dense belief engine and the interval (type) engine side by side
//! on the same channel outputs and reports how far apart they drift.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use feedback_jscc::channel::Dmc;
use feedback_jscc::codes::{cosimulate, CosimRule};
use feedback_jscc::source::{Schedule, SourceSpec};
use feedback_jscc::type_engine::TypeSet;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dmc = Dmc::bsc(0.05)?;
    let spec = SourceSpec::iid_uniform(2, Schedule::Periodic(1))?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for rule in [CosimRule::Sed, CosimRule::GreedyThenSed] {
        let r = cosimulate(&dmc, &spec, 10, 1e-6, rule, &mut rng)?;
        println!("{rule:?}");
        println!("  steps {}, eta {:?}, correct {}", r.steps, r.eta, r.correct);
        println!("  max posterior diff {:.2e}, prior diff {:.2e}", r.max_posterior_diff, r.max_prior_diff);
        println!("  live types {} (bound {})", r.final_types, r.type_bound);
    }

    // The interval engine alone scales far past the dense one.
    let mut ts = TypeSet::new(2);
    ts.extend_to(&spec, 64)?;
    let part = ts.type_sed_partition();
    ts.type_posterior_update(&part, None, &dmc, 1)?;
    println!("64-bit prefix space held in {} types, mass {:.12}", ts.len(), ts.total_mass());
    Ok(())
}

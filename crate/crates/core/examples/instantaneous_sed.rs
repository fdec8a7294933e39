//! A single instantaneous SED transcript over BSC(0.05) with bits arriving
//! one per channel use.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use feedback_jscc::channel::Dmc;
use feedback_jscc::codes::{run_code, CodeConfig, Mode};
use feedback_jscc::source::{Schedule, SourceSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dmc = Dmc::bsc(0.05)?;
    let spec = SourceSpec::iid_uniform(2, Schedule::Periodic(1))?;
    let k = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let t = run_code(&dmc, &spec, k, &CodeConfig::new(1e-6, Mode::InstSed), &mut rng)?;
    let bits = |v: &[usize]| v.iter().map(|b| b.to_string()).collect::<String>();
    println!("source    {}", bits(&t.source));
    println!("inputs    {}", bits(&t.inputs));
    println!("outputs   {}", bits(&t.outputs));
    println!("estimate  {}", t.estimate.as_deref().map(bits).unwrap_or_default());
    println!("stopped at t = {:?}, correct = {}, rate = {:.3}", t.eta, t.correct, k as f64 / t.len() as f64);
    Ok(())
}

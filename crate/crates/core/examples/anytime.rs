//! Anytime decoding: error of each prefix as later channel outputs arrive,
//! and the fitted exponential decay rate.

use feedback_jscc::channel::Dmc;
use feedback_jscc::codes::EngineKind;
use feedback_jscc::harness::{fit_anytime_slope, run_anytime_experiment, AnytimeConfig};
use feedback_jscc::source::{Schedule, SourceSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = AnytimeConfig {
        channel: Dmc::bsc(0.05)?.to_doc(),
        source: SourceSpec::iid_uniform(2, Schedule::Periodic(1))?.to_doc(),
        ks: vec![2, 4, 6, 8],
        t_max: 48,
        trials: 5000,
        master_seed: 1,
        engine: EngineKind::Type,
    };
    let rows = run_anytime_experiment(&cfg)?;
    println!("k,t,err");
    for r in rows.iter().filter(|r| (r.t - r.t_k) % 4 == 0) {
        println!("{},{},{:.5}", r.k, r.t, r.err());
    }
    let fit = fit_anytime_slope(&rows)?;
    eprintln!("alpha = {:.4} nats per use (R^2 = {:.3}, {} points)", fit.alpha, fit.r_squared, fit.points);
    Ok(())
}

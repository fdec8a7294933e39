//! Tabulates the reliability function of the instantaneous code against the
//! buffer-then-transmit exponent, as CSV.

use feedback_jscc::channel::Dmc;
use feedback_jscc::codes::reliability_curves;
use feedback_jscc::source::{Schedule, SourceSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dmc = Dmc::bsc(0.05)?;
    let spec = SourceSpec::iid_uniform(2, Schedule::Periodic(1))?;
    let curves = reliability_curves(&dmc, &spec, 16, 1e-6)?;
    println!("# C={:.6} C1={:.6} approx_rate={:.6}", curves.capacity, curves.c1, curves.approx_rate);
    println!("rate,instantaneous,buffer");
    for (r, e, b) in curves.table(21) {
        println!("{r:.4},{e:.6},{b:.6}");
    }
    Ok(())
}

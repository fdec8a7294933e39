//! ACK/NACK zero-error protocol over BEC(0.2): no decoding errors, and the
//! number of retransmissions shrinks as the confirmation phase grows.

use feedback_jscc::channel::Dmc;
use feedback_jscc::harness::run_zero_error_trials;
use feedback_jscc::source::{Schedule, SourceSpec};
use feedback_jscc::zero_error::{configure, estimate_block_failure, retransmission_distribution};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dmc = Dmc::bec(0.2)?;
    let spec = SourceSpec::iid_uniform(2, Schedule::Periodic(1))?;
    println!("delta,n_k,errors,mean_eta,rate,p_retransmit,mean_retransmissions");
    for delta in [0.125, 0.25, 0.5] {
        let cfg = configure(&dmc, 2, 8, 0.4, 0.4, delta)?;
        let ts = run_zero_error_trials(&cfg, &dmc, &spec, 4000, 3)?;
        let errors = ts.iter().filter(|t| !t.correct).count();
        let mean_eta = ts.iter().map(|t| t.eta as f64).sum::<f64>() / ts.len() as f64;
        let cal = estimate_block_failure(&cfg, &dmc, &spec, cfg.block_len, 10_000, 4)?;
        let st = retransmission_distribution(&ts, &cfg, &dmc, cal.failure, cal.decode_error)?;
        println!(
            "{delta},{},{errors},{mean_eta:.3},{:.4},{:.4},{:.4}",
            cfg.n_k,
            cfg.k as f64 / mean_eta,
            st.p_positive,
            st.mean_tk
        );
    }
    Ok(())
}

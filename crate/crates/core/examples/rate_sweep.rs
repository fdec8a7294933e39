//! Monte Carlo rate and error of every mode over BSC(0.05), written as the
//! same CSV the `rate-sweep` subcommand produces.

use feedback_jscc::codes::Mode;
use feedback_jscc::harness::report::{write_report, Format};
use feedback_jscc::harness::{run_experiment, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1000);
    let cfg = ExperimentConfig::bsc_bits(0.05, Mode::ALL.to_vec(), vec![4, 8, 12, 16], 1e-6, trials, 1)?;
    let report = run_experiment(&cfg)?;
    write_report(&report, Format::Csv, std::io::stdout().lock())?;
    Ok(())
}

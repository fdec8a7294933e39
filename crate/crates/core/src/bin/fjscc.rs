use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use feedback_jscc::channel::Dmc;
use feedback_jscc::codes::{belief_trace, reliability_curves, CosimRule, EngineKind, Mode};
use feedback_jscc::error::{Error, Result};
use feedback_jscc::harness::{
    fit_anytime_slope, run_anytime_experiment, run_cosim_experiment, run_experiment, run_zero_error_trials,
    write_report, AnytimeConfig, ExperimentConfig, Format,
};
use feedback_jscc::source::{Schedule, SourceSpec};
use feedback_jscc::zero_error::{configure, estimate_block_failure, retransmission_distribution};

#[derive(Parser)]
#[command(name = "fjscc", version, about = "Feedback joint source-channel coding simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Capacity, capacity-achieving laws and C1 of a channel.
    Capacity(ChannelArgs),
    /// Arrival-rate assumption checks for a channel and source.
    Thresholds {
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Reliability-function curves and the finite-k rate approximation.
    Curves {
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value = "16")]
        k: usize,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 20)]
        points: usize,
    },
    /// Monte Carlo rate and error for each mode and source length.
    RateSweep(SweepArgs),
    /// Error of every prefix at every decoding time, and the fitted anytime reliability.
    Anytime(AnytimeArgs),
    /// ACK/NACK zero-error protocol over a degenerate channel.
    ZeroError(ZeroArgs),
}

#[derive(Args, Clone)]
struct ChannelArgs {
    /// Binary symmetric channel with this crossover probability.
    #[arg(long, group = "chan")]
    bsc: Option<f64>,
    /// Binary erasure channel with this erasure probability.
    #[arg(long, group = "chan")]
    bec: Option<f64>,
    /// JSON channel file: {"matrix": [[...]], "name": "..."}.
    #[arg(long, group = "chan")]
    channel: Option<PathBuf>,
}

impl ChannelArgs {
    fn build(&self, default: fn() -> Result<Dmc>) -> Result<Dmc> {
        match (self.bsc, self.bec, &self.channel) {
            (Some(p), _, _) => Dmc::bsc(p),
            (_, Some(e), _) => Dmc::bec(e),
            (_, _, Some(path)) => Dmc::from_json(&std::fs::read_to_string(path)?),
            _ => default(),
        }
    }
}

fn default_bsc() -> Result<Dmc> {
    Dmc::bsc(0.05)
}

fn default_bec() -> Result<Dmc> {
    Dmc::bec(0.2)
}

#[derive(Args, Clone)]
struct SourceArgs {
    /// Built-in source law.
    #[arg(long, default_value = "iid-uniform", value_parser = ["iid-uniform"])]
    source: String,
    /// JSON source file; overrides --source, --q and --lambda.
    #[arg(long)]
    source_file: Option<PathBuf>,
    /// Alphabet size of the built-in source.
    #[arg(long, default_value_t = 2)]
    q: usize,
    /// One symbol every lambda channel uses; 0 makes every symbol available at t = 1.
    #[arg(long, default_value_t = 1)]
    lambda: u64,
}

impl SourceArgs {
    fn build(&self) -> Result<SourceSpec> {
        if let Some(path) = &self.source_file {
            return SourceSpec::from_json(&std::fs::read_to_string(path)?);
        }
        let schedule = if self.lambda == 0 { Schedule::AllAtOnce } else { Schedule::Periodic(self.lambda) };
        SourceSpec::iid_uniform(self.q, schedule)
    }
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Master seed.
    #[arg(long, env = "JSCC_SEED", default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Source lengths: "16", "4,8,12,16" or "4:16:4".
    #[arg(long, default_value = "4:16:4")]
    k: String,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    /// Modes (buffer, inst-phase, inst-sed, block-sed) as a comma list, or "all".
    #[arg(long, default_value = "all")]
    mode: String,
    /// exact, type, or both (co-simulates the two engines and reports their divergence).
    #[arg(long, default_value = "type")]
    engine: String,
    /// Last channel use before a trial is counted as an error.
    #[arg(long)]
    horizon: Option<u64>,
    /// Disable randomization of the instantaneous encoding phase.
    #[arg(long)]
    no_randomize: bool,
    /// JSON experiment config; replaces the channel, source and sweep flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write exact-engine beliefs of one instantaneous SED run (first k, trial 0) to this JSON file.
    #[arg(long)]
    dump_beliefs: Option<PathBuf>,
}

#[derive(Args)]
struct AnytimeArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value = "4,8,12,16")]
    k: String,
    /// Last decoding time.
    #[arg(long, default_value_t = 64)]
    horizon: u64,
    #[arg(long, default_value = "type")]
    engine: String,
    /// JSON anytime config; replaces the other flags except the output ones.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ZeroArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 8)]
    k: usize,
    #[arg(long, default_value_t = 0.4)]
    r1: f64,
    #[arg(long, default_value_t = 0.4)]
    r2: f64,
    /// Confirmation fraction(s); one report line per value.
    #[arg(long, default_value = "0.25", value_delimiter = ',')]
    delta: Vec<f64>,
    /// Blocks simulated to estimate the retransmission failure probability.
    #[arg(long, default_value_t = 20_000)]
    calibration_blocks: usize,
}

fn parse_ks(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidConfig(format!("bad k list {s:?}"));
    let mut ks = Vec::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let parts: Vec<usize> = item.split(':').map(|p| p.parse().map_err(|_| bad())).collect::<Result<_>>()?;
        match parts[..] {
            [k] => ks.push(k),
            [a, b] => ks.extend(a..=b),
            [a, b, step] if step > 0 => ks.extend((a..=b).step_by(step)),
            _ => return Err(bad()),
        }
    }
    if ks.is_empty() {
        return Err(bad());
    }
    Ok(ks)
}

fn parse_modes(s: &str) -> Result<Vec<Mode>> {
    if s == "all" {
        return Ok(Mode::ALL.to_vec());
    }
    s.split(',').map(|m| m.trim().parse()).collect()
}

fn parse_engine(s: &str) -> Result<(EngineKind, bool)> {
    match s {
        "exact" => Ok((EngineKind::Exact, false)),
        "type" => Ok((EngineKind::Type, false)),
        "both" => Ok((EngineKind::Type, true)),
        _ => Err(Error::InvalidConfig(format!("unknown engine {s:?}"))),
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn json_out(path: &Option<PathBuf>, v: &serde_json::Value) -> Result<()> {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    Ok(())
}

fn capacity(args: ChannelArgs) -> Result<()> {
    let dmc = args.build(default_bsc)?;
    println!("channel      {}", dmc.name());
    println!("capacity     {:.6} nats ({:.6} bits)", dmc.capacity(), dmc.capacity() / std::f64::consts::LN_2);
    println!("P*_X         {:?}", dmc.cap_input_dist());
    println!("P*_Y         {:?}", dmc.cap_output_dist());
    println!("C1           {:.6}", dmc.max_kl_divergence());
    println!("class        {:?}", dmc.class());
    println!("symmetric    {}", dmc.is_symmetric());
    if let Some(w) = dmc.degenerate_witness() {
        println!("witness      y*={} ack={} nack={}", w.output, w.ack, w.nack);
    }
    Ok(())
}

fn thresholds(channel: ChannelArgs, source: SourceArgs) -> Result<()> {
    let dmc = channel.build(default_bsc)?;
    let spec = source.build()?;
    let d = spec.describe();
    let t = spec.assumption_thresholds(&dmc)?;
    println!("channel      {}", dmc.name());
    println!("H            {:.6} nats/symbol", d.entropy_rate);
    println!("f            {}", d.arrival_rate);
    println!("thr_b        {:.6}  (randomized phase)  {}", t.thr_b, if t.f_ok_b { "ok" } else { "violated" });
    println!(
        "thr_b'       {:.6}  (deterministic phase)  {}",
        t.thr_b_prime,
        if t.f_ok_b_prime { "ok" } else { "violated" }
    );
    Ok(())
}

fn curves(channel: ChannelArgs, source: SourceArgs, k: usize, eps: f64, points: usize) -> Result<()> {
    let dmc = channel.build(default_bsc)?;
    let spec = source.build()?;
    let c = reliability_curves(&dmc, &spec, k, eps)?;
    println!(
        "# C={:.6} C1={:.6} H={:.6} f={} approx_rate={:.6} buffer_bound_rate={:.6}",
        c.capacity, c.c1, c.entropy_rate, c.arrival_rate, c.approx_rate, c.buffer_bound_rate
    );
    println!("rate,exponent,buffer_exponent");
    for (r, e, b) in c.table(points) {
        println!("{r:.6},{e:.6},{b:.6}");
    }
    Ok(())
}

fn rate_sweep(a: SweepArgs) -> Result<()> {
    let (engine, cosim) = parse_engine(&a.engine)?;
    let config = match &a.config {
        Some(path) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig {
            channel: a.channel.build(default_bsc)?.to_doc(),
            source: a.source.build()?.to_doc(),
            modes: parse_modes(&a.mode)?,
            ks: parse_ks(&a.k)?,
            eps: a.eps,
            trials: a.run.trials,
            master_seed: a.run.seed,
            engine,
            randomize: !a.no_randomize,
            horizon_cap: a.horizon,
            output: a.run.out.clone(),
        },
    };
    if let Some(path) = &a.dump_beliefs {
        let dmc = Dmc::from_doc(config.channel.clone())?;
        let spec = SourceSpec::from_doc(config.source.clone())?;
        let trace =
            belief_trace(&dmc, &spec, config.ks[0], config.eps, &mut ChaCha8Rng::seed_from_u64(config.master_seed))?;
        json_out(&Some(path.clone()), &serde_json::Value::Array(trace.iter().map(|b| b.to_json()).collect()))?;
    }
    if cosim {
        let rule = if config.modes.contains(&Mode::InstPhase) { CosimRule::GreedyThenSed } else { CosimRule::Sed };
        for (k, s) in run_cosim_experiment(&config, rule)? {
            eprintln!(
                "cosim k={k} trials={} max_posterior_diff={:.3e} max_group_prior_diff={:.3e} stop_disagreements={} map_disagreements={}",
                s.trials, s.max_posterior_diff, s.max_group_prior_diff, s.stop_disagreements, s.map_disagreements
            );
        }
    }
    let report = run_experiment(&config)?;
    write_report(&report, a.run.format, output(&config.output)?)
}

fn anytime(a: AnytimeArgs) -> Result<()> {
    let config = match &a.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => AnytimeConfig {
            channel: a.channel.build(default_bsc)?.to_doc(),
            source: a.source.build()?.to_doc(),
            ks: parse_ks(&a.k)?,
            t_max: a.horizon,
            trials: a.run.trials,
            master_seed: a.run.seed,
            engine: parse_engine(&a.engine)?.0,
        },
    };
    let rows = run_anytime_experiment(&config)?;
    let fit = fit_anytime_slope(&rows);
    match a.run.format {
        Format::Json => json_out(
            &a.run.out,
            &serde_json::json!({ "rows": rows, "fit": fit.as_ref().ok(), "seed": config.master_seed }),
        )?,
        Format::Csv => {
            let mut w = output(&a.run.out)?;
            writeln!(w, "# schema=fjscc-anytime/1 seed={}", config.master_seed)?;
            writeln!(w, "k,t_k,t,trials,errors,err")?;
            for r in &rows {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    r.k,
                    r.t_k,
                    r.t,
                    r.trials,
                    r.errors,
                    feedback_jscc::harness::report::sig6(r.err())
                )?;
            }
        }
    }
    match fit {
        Ok(f) => eprintln!("alpha={:.6} r_squared={:.4} points={} flat={}", f.alpha, f.r_squared, f.points, f.flat),
        Err(e) => eprintln!("slope fit unavailable: {e}"),
    }
    Ok(())
}

fn zero_error(a: ZeroArgs) -> Result<()> {
    let dmc = a.channel.build(default_bec)?;
    let spec = a.source.build()?;
    let mut lines = Vec::new();
    for &delta in &a.delta {
        let cfg = configure(&dmc, spec.q(), a.k, a.r1, a.r2, delta)?;
        let ts = run_zero_error_trials(&cfg, &dmc, &spec, a.run.trials, a.run.seed)?;
        let cal = estimate_block_failure(&cfg, &dmc, &spec, cfg.block_len, a.calibration_blocks, a.run.seed ^ 0x5a5a)?;
        let st = retransmission_distribution(&ts, &cfg, &dmc, cal.failure, cal.decode_error)?;
        let errors = ts.iter().filter(|t| !t.correct).count();
        let mean_eta = ts.iter().map(|t| t.eta as f64).sum::<f64>() / ts.len() as f64;
        lines.push(serde_json::json!({
            "delta": delta, "n_k": cfg.n_k, "trials": ts.len(), "errors": errors, "mean_eta": mean_eta,
            "rate": a.k as f64 / mean_eta, "p_a2": cal.failure, "lag1": cal.lag1_correlation, "stats": st,
        }));
    }
    json_out(&a.run.out, &serde_json::Value::Array(lines))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.cmd {
        Cmd::Capacity(c) => capacity(c),
        Cmd::Thresholds { channel, source } => thresholds(channel, source),
        Cmd::Curves { channel, source, k, eps, points } => curves(channel, source, k, eps, points),
        Cmd::RateSweep(a) => rate_sweep(a),
        Cmd::Anytime(a) => anytime(a),
        Cmd::ZeroError(a) => zero_error(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

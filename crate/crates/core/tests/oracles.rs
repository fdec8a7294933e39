//! Frozen reference values, computed independently of the crate (closed
//! forms evaluated in double precision), and worked examples with known answers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use feedback_jscc::belief::{evidence, BeliefState, Phase};
use feedback_jscc::channel::{ChannelClass, Dmc};
use feedback_jscc::codes::{ejs_divergence, reliability_curves};
use feedback_jscc::partition::{greedy_partition, randomization_plan, sed_partition_binary};
use feedback_jscc::source::{Schedule, SourceLaw, SourceSpec};
use feedback_jscc::type_engine::prefix_in_interval;
use feedback_jscc::zero_error::configure;

const C_BSC_005: f64 = 0.494_631_937_214_072_7;
const C_BEC_03: f64 = 0.485_203_026_391_961_67;
const C1_BSC_005: f64 = 2.649_995_081_249_796_3;
const H_IID4: f64 = 1.279_854_225_833_667_4;
const H_MARKOV_01: f64 = 0.325_082_973_391_448_2;
const THR_B: f64 = 0.925_999_418_556_223_3;
const THR_B_PRIME: f64 = 4.247_927_513_443_585;
const APPROX_RATE_K16: f64 = 0.578_979_310_606_759_2;
const BUFFER_RATE_K16: f64 = 0.366_679_478_773_077_2;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn bits(schedule: Schedule) -> SourceSpec {
    SourceSpec::iid_uniform(2, schedule).unwrap()
}

#[test]
fn channel_constants() {
    let bsc = Dmc::bsc(0.05).unwrap();
    assert!(close(bsc.capacity(), C_BSC_005, 1e-9));
    assert!(close(bsc.max_kl_divergence(), C1_BSC_005, 1e-12));
    assert!(close(bsc.cap_input_dist()[0], 0.5, 1e-9));
    let bec = Dmc::bec(0.3).unwrap();
    assert!(close(bec.capacity(), C_BEC_03, 1e-9));
    assert_eq!(bec.class(), ChannelClass::Degenerate);
    let out = bec.induced_output_dist(&[0.5, 0.5]).unwrap();
    for (a, b) in out.iter().zip([0.35, 0.3, 0.35]) {
        assert!(close(*a, b, 1e-12));
    }
}

#[test]
fn channel_classes_of_small_examples() {
    // Unreachable middle output: neither class.
    let c = Dmc::new(vec![vec![0.5, 0.0, 0.5], vec![0.3, 0.0, 0.7]]).unwrap();
    assert_eq!(c.class(), ChannelClass::Neither);
    // y = 1 reachable only from x = 1.
    let d = Dmc::new(vec![vec![0.5, 0.0, 0.5], vec![0.2, 0.6, 0.2]]).unwrap();
    let w = d.degenerate_witness().unwrap();
    assert_eq!((w.output, w.ack, w.nack), (1, 1, 0));
}

#[test]
fn source_rates_and_thresholds() {
    let iid = SourceSpec::new(4, Schedule::Periodic(1), SourceLaw::Iid(vec![0.4, 0.3, 0.2, 0.1])).unwrap();
    assert!(close(iid.describe().entropy_rate, H_IID4, 1e-12));
    let markov = SourceSpec::new(
        2,
        Schedule::Periodic(1),
        SourceLaw::Markov { initial: vec![0.5, 0.5], transition: vec![vec![0.9, 0.1], vec![0.1, 0.9]] },
    )
    .unwrap();
    assert!(close(markov.describe().entropy_rate, H_MARKOV_01, 1e-10));

    let t = bits(Schedule::Periodic(1)).assumption_thresholds(&Dmc::bsc(0.05).unwrap()).unwrap();
    assert!(close(t.thr_b, THR_B, 1e-9));
    assert!(close(t.thr_b_prime, THR_B_PRIME, 1e-9));
    assert!(t.f_ok_b && !t.f_ok_b_prime);
}

#[test]
fn explicit_arrival_schedule() {
    let s = SourceSpec::new(2, Schedule::Explicit(vec![1, 2, 4, 6, 6]), SourceLaw::Iid(vec![0.5, 0.5])).unwrap();
    assert_eq!(s.n_of_t(6, usize::MAX), 5);
    assert_eq!(s.n_of_t(3, usize::MAX), 2);
    assert_eq!(s.arrival_time(4), Some(6));
}

#[test]
fn rate_approximation() {
    let c = reliability_curves(&Dmc::bsc(0.05).unwrap(), &bits(Schedule::Periodic(1)), 16, 1e-6).unwrap();
    assert!(close(c.approx_rate, APPROX_RATE_K16, 1e-9));
    assert!(close(c.buffer_bound_rate, BUFFER_RATE_K16, 1e-9));
    // Two-decimal rounding of the same value.
    assert!(close(c.approx_rate, 0.58, 0.005));
}

#[test]
fn belief_examples() {
    let mut b = BeliefState::from_probs(2, 1, vec![0.8, 0.2], Phase::Posterior).unwrap();
    b.extend_to(&bits(Schedule::Periodic(1)), 2).unwrap();
    for (a, e) in b.probs().iter().zip([0.4, 0.4, 0.1, 0.1]) {
        assert!(close(*a, e, 1e-15));
    }

    let dmc = Dmc::bsc(0.05).unwrap();
    let mut b = BeliefState::from_probs(2, 1, vec![0.5, 0.5], Phase::Prior).unwrap();
    assert!(close(evidence(&dmc, 0, &[0.5, 0.5], None), 0.5, 1e-15));
    let norm = b.bayes_update(&[0, 1], None, &dmc, 0).unwrap();
    assert!(close(norm, 1.0, 1e-15));
    assert!(close(b.probs()[0], 0.95, 1e-15) && close(b.probs()[1], 0.05, 1e-15));

    let b = BeliefState::from_probs(2, 2, vec![0.3, 0.3, 0.2, 0.2], Phase::Posterior).unwrap();
    let (idx, p) = b.map_prefix_estimate(1);
    assert_eq!(idx, 0);
    assert!(close(p, 0.6, 1e-15));
}

#[test]
fn partition_examples() {
    let g = greedy_partition(&[0.4, 0.3, 0.2, 0.1], &[0.5, 0.5]);
    assert_eq!(g.assignment, vec![0, 1, 1, 0]);
    assert!(close(g.capacity_rule_violation(&[0.5, 0.5]), -0.1, 1e-12));

    let s = sed_partition_binary(&[0.35, 0.25, 0.25, 0.15]);
    assert!(close(s.group_priors[0], s.group_priors[1], 1e-15));
    let s = sed_partition_binary(&[0.9, 0.1]);
    assert!(close((s.group_priors[0] - s.group_priors[1]).abs(), 0.8, 1e-15));
    assert!(s.satisfies_sed_rule());

    let plan = randomization_plan(&[0.6, 0.4], &[0.5, 0.5]).unwrap();
    assert_eq!(plan.transfers.len(), 1);
    assert!(close(plan.transfers[0].2, 0.1, 1e-15));
    assert!(close(plan.kernel[0][0], 5.0 / 6.0, 1e-15) && close(plan.kernel[0][1], 1.0 / 6.0, 1e-15));
    assert_eq!(plan.kernel[1], vec![0.0, 1.0]);

    let third = 1.0 / 3.0;
    let plan = randomization_plan(&[0.7, 0.2, 0.1], &[third; 3]).unwrap();
    let m: Vec<(usize, usize, f64)> = plan.transfers.clone();
    assert_eq!((m[0].0, m[0].1), (0, 1));
    assert!(close(m[0].2, third - 0.2, 1e-15));
    assert_eq!((m[1].0, m[1].1), (0, 2));
    assert!(close(m[1].2, third - 0.1, 1e-15));
    assert!(plan.balance_residual(&[0.7, 0.2, 0.1], &[third; 3]) < 1e-15);
}

#[test]
fn type_prefix_cases() {
    // (a) both ends share the prefix 000.
    assert_eq!(prefix_in_interval(0b000_1110, 0b000_1111, 7, 3, 2), 0b000);
    // (b) non-consecutive prefixes: an interior prefix is entirely covered.
    assert_eq!(prefix_in_interval(0b000_1111, 0b010_0000, 7, 3, 2), 0b001);
    // (c) 2 sequences start with 010 and 2^7 with 011.
    assert_eq!(prefix_in_interval(0b010_1111110, 0b011_1111111, 10, 3, 2), 0b011);
}

#[test]
fn two_point_ejs_equals_c1() {
    let v = ejs_divergence(&[0.5, 0.5], &[0, 1], &Dmc::bsc(0.05).unwrap()).unwrap();
    assert!(close(v, C1_BSC_005, 1e-12));
}

#[test]
fn zero_error_witness_and_lengths() {
    let c = configure(&Dmc::bec(0.3).unwrap(), 2, 8, 0.4, 0.4, 0.25).unwrap();
    assert_eq!((c.y_star, c.ack, c.nack, c.n_k), (0, 0, 1, 2));
}

#[test]
fn monte_carlo_sampling_rates() {
    let dmc = Dmc::bsc(0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ones = (0..100_000).filter(|_| dmc.sample_output(0, &mut rng).unwrap() == 1).count();
    assert!(close(ones as f64 / 1e5, 0.05, 0.005));
    let spec = bits(Schedule::Periodic(1));
    let ones = (0..100_000).filter(|_| spec.sample_prefix(1, &mut rng)[0] == 1).count();
    assert!(close(ones as f64 / 1e5, 0.5, 0.005));
}

//! Run the compact wire engine against the full-information simulator and
//! measure the per-pair bit traffic.
//!
//! ```bash
//! cargo run --release --example codec_equivalence
//! ```

use rand::SeedableRng;

use unbeatable::codec::{
    decode_and_decide, equivalence_sweep, random_adversary, BIT_BUDGET_FACTOR,
};
use unbeatable::model::Value;
use unbeatable::oracle::Domain;
use unbeatable::protocols::{ProtocolId, ProtocolSpec};

fn main() {
    // Exhaustive schedule equivalence, with every reconstructed predicate
    // frame checked against the full-information one.
    let dom = Domain::new(4, 2, Value(1), 3).unwrap();
    for id in [ProtocolId::Opt0, ProtocolId::OptMaj, ProtocolId::UOpt0] {
        let spec = ProtocolSpec::new(id, 4, 2, Value(1), 1).unwrap();
        let out = equivalence_sweep(&dom, &spec, true).unwrap();
        println!(
            "{id:>8}: {} runs, schedule mismatches: {}, max bits per ordered pair: {}",
            out.adversaries, out.schedule_mismatches, out.max_pair_bits
        );
        assert!(out.pass());
    }

    // Bit budget at larger sizes over random adversaries.
    println!("\nper-pair traffic against the {BIT_BUDGET_FACTOR}*n*log2(n) budget:");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    for n in [8u8, 16, 32] {
        let t = n / 2;
        let horizon = u32::from(t) + 1;
        let spec = ProtocolSpec::new(ProtocolId::Opt0, n, t, Value(1), 1).unwrap();
        let mut max_bits = 0;
        for _ in 0..500 {
            let adv = random_adversary(&mut rng, n, t, Value(1), horizon);
            let run = decode_and_decide(&spec, &adv, horizon, false).unwrap();
            max_bits = max_bits.max(run.ledger.max_pair_bits());
        }
        let budget = BIT_BUDGET_FACTOR * u64::from(n) * u64::from(u32::from(n).ilog2());
        println!("  n={n:>2}: observed max {max_bits:>4} bits  <=  budget {budget}");
        assert!(max_bits <= budget);
    }
}

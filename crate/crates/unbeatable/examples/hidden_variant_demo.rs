//! Rewire an adversary so that arbitrary values ride the hidden chains,
//! without changing what the observer sees.
//!
//! With hidden capacity `c` at a node, any `c` values may exist in the
//! system unbeknownst to it: the construction plants them on the hidden
//! witnesses, crashes each chain link as it hands its value up one level,
//! and leaves the observer's view bit-identical. This is exactly why a
//! process with capacity >= k cannot decide yet in the k-set rules.
//!
//! ```bash
//! cargo run --release --example hidden_variant_demo
//! ```

use unbeatable::knowledge::{hidden_profile, known_values};
use unbeatable::model::{view, Adversary, Crash, ProcSet, ProcessId, Value};
use unbeatable::oracle::hidden_variant;

fn main() {
    let chain = |from: u8, round, to: &[u8]| Crash {
        process: ProcessId(from),
        round,
        delivers_to: to.iter().map(|x| ProcessId(*x)).collect(),
    };
    let adv = Adversary::new(
        10,
        6,
        vec![Value(0); 10],
        vec![
            chain(5, 1, &[2]),
            chain(6, 1, &[3]),
            chain(7, 1, &[4]),
            Crash {
                process: ProcessId(2),
                round: 2,
                delivers_to: ProcSet::EMPTY,
            },
            Crash {
                process: ProcessId(3),
                round: 2,
                delivers_to: ProcSet::EMPTY,
            },
            Crash {
                process: ProcessId(4),
                round: 2,
                delivers_to: ProcSet::EMPTY,
            },
        ],
    );
    let observer = ProcessId(1);
    let original = view(&adv, observer, 2).unwrap();
    let profile = hidden_profile(&original);
    println!("capacity at <1,2>: {}", profile.capacity);

    let planted = [Value(2), Value(3), Value(4)];
    let variant = hidden_variant(&adv, observer, 2, &planted).unwrap();
    println!("variant: {}", serde_json::to_string(&variant).unwrap());

    assert_eq!(view(&variant, observer, 2).unwrap(), original);
    println!("observer view at time 2: unchanged, bit for bit");

    for (l, level) in profile.hidden_by_level.iter().enumerate() {
        for (b, p) in level.iter().take(planted.len()).enumerate() {
            let w = view(&variant, p, l as u32).unwrap();
            let vals = known_values(&w, None).vals;
            println!(
                "  witness p{p} at level {l} now knows {vals:?} (catches {})",
                planted[b]
            );
            assert!(vals.contains(&planted[b]));
        }
    }
}

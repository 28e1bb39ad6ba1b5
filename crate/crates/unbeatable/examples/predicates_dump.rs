//! Walk the epistemic predicates of one node: seen values, known failures,
//! hidden nodes per level, hidden capacity, and the knowledge tests.
//!
//! The adversary stages three disjoint silent chains (5->2, 6->3, 7->4 over
//! two rounds), which leaves process 1 at time 2 with hidden capacity 3:
//! three unknown values could still be alive somewhere, so no rule that
//! tolerates fewer than three stragglers may decide yet.
//!
//! ```bash
//! cargo run --release --example predicates_dump
//! ```

use unbeatable::knowledge::{failure_knowledge, hidden_path_exists, hidden_profile, known_values};
use unbeatable::model::{view, Adversary, Crash, ProcSet, ProcessId, Value};

fn main() {
    let chain = |from: u8, round, to: &[u8]| Crash {
        process: ProcessId(from),
        round,
        delivers_to: to.iter().map(|x| ProcessId(*x)).collect(),
    };
    let adv = Adversary::new(
        10,
        6,
        vec![Value(1); 10],
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
    adv.validate(Value(1)).unwrap();

    for m in 0..=2u32 {
        let w = view(&adv, ProcessId(1), m).unwrap();
        let kv = known_values(&w, Some(1));
        let fk = failure_knowledge(&w);
        let profile = hidden_profile(&w);
        println!("<1,{m}>");
        println!("  seen values: {:?}   min: {:?}", kv.vals, kv.min);
        println!(
            "  direct silences: {}   provable crashes: {:?}",
            fk.knownf, fk.known_crashed_by
        );
        for (l, level) in profile.hidden_by_level.iter().enumerate() {
            println!("  hidden at level {l}: {level:?}");
        }
        println!(
            "  capacity: {}   hidden path: {}",
            profile.capacity,
            hidden_path_exists(&w)
        );
    }
}

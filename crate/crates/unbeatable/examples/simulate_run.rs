//! Simulate two decision rules against the same adversary and watch the
//! hidden-path rule decide earlier than the fixed-deadline rule.
//!
//! ```bash
//! cargo run --release --example simulate_run
//! ```

use unbeatable::model::{simulate, Adversary, Crash, ProcSet, ProcessId, Value};
use unbeatable::protocols::{ProtocolId, ProtocolSpec};

fn main() {
    // Four processes, all starting with 1; process 2 crashes in round 1 and
    // reaches only 3 and 4, then 3 crashes silently in round 2. Process 1
    // discovers a new failure in each of the first two rounds.
    let adv = Adversary::new(
        4,
        2,
        vec![Value(1), Value(1), Value(1), Value(1)],
        vec![
            Crash {
                process: ProcessId(2),
                round: 1,
                delivers_to: [ProcessId(3), ProcessId(4)].into_iter().collect(),
            },
            Crash {
                process: ProcessId(3),
                round: 2,
                delivers_to: ProcSet::EMPTY,
            },
        ],
    );
    adv.validate(Value(1)).expect("valid adversary");
    println!("adversary: {}", serde_json::to_string(&adv).unwrap());

    let horizon = u32::from(adv.t()) + 1;
    for id in [ProtocolId::Opt0, ProtocolId::P0, ProtocolId::P0OptHmw] {
        let spec = ProtocolSpec::new(id, adv.n, adv.t(), Value(1), 1).unwrap();
        let sched = simulate(&spec, &adv, horizon).unwrap();
        print!("{id:>10}: ");
        for p in adv.process_ids() {
            match sched.decision_of(p) {
                Some(d) => print!("p{p} -> {} @ t={}   ", d.value, d.time),
                None => print!("p{p} -> undecided   "),
            }
        }
        println!();
    }
    println!("\nopt0 settles at time 2 here; the rules that wait for the");
    println!("deadline or for a discovery-free round need a round longer.");
}

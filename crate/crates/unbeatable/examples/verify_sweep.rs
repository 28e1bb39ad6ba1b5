//! Exhaustively verify a protocol against its task over a whole adversary
//! domain, including the stopping-time bound.
//!
//! ```bash
//! cargo run --release --example verify_sweep
//! ```

use unbeatable::model::Value;
use unbeatable::oracle::Domain;
use unbeatable::protocols::{ProtocolId, ProtocolSpec};
use unbeatable::search::adversary_count;
use unbeatable::sim::{verify_protocol, TaskKind, TaskSpec};

fn main() {
    // 2-set consensus over three values with four processes and up to two
    // crashes: every adversary with crash rounds up to horizon+1.
    let dom = Domain::new(4, 2, Value(2), 3).unwrap();
    let spec = ProtocolSpec::new(ProtocolId::OptMinK, 4, 2, Value(2), 2).unwrap();
    let task = TaskSpec::new(TaskKind::KSet, 2, Value(2)).unwrap();
    println!(
        "sweeping {} adversaries (n={} t={} |V|={})...",
        adversary_count(&dom),
        dom.n,
        dom.t,
        dom.value_count()
    );
    let outcome = verify_protocol(&dom, &spec, &task, true);
    println!(
        "runs: {}   property failures: {}   bound failures: {}",
        outcome.adversaries, outcome.property_failures, outcome.bound_failures
    );
    for (f, t) in &outcome.max_decision_time_by_f {
        println!(
            "  f={f}: latest decision at time {t} (bound floor(f/k)+1 = {})",
            f / 2 + 1
        );
    }
    assert!(outcome.pass());
    println!("k-set agreement, validity, decision and the f/k bound all hold.");
}

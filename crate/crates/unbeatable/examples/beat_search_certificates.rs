//! Certify unbeatability by exhausting the space of dominating decision
//! tables, and find an explicit beating table where one exists.
//!
//! ```bash
//! cargo run --release --example beat_search_certificates
//! ```

use unbeatable::model::Value;
use unbeatable::oracle::Domain;
use unbeatable::protocols::{ProtocolId, ProtocolSpec};
use unbeatable::search::{beat_search, BeatOutcome, SearchMode};
use unbeatable::sim::{TaskKind, TaskSpec};

fn main() {
    let task = TaskSpec::new(TaskKind::Consensus, 1, Value(1)).unwrap();
    for (target, n, t) in [
        (ProtocolId::Opt0, 2u8, 1u8),
        (ProtocolId::Opt0, 3, 1),
        (ProtocolId::P0, 3, 1),
        (ProtocolId::P0OptHmw, 2, 1),
    ] {
        let dom = Domain::new(n, t, Value(1), u32::from(t) + 1).unwrap();
        let spec = ProtocolSpec::new(target, n, t, Value(1), 1).unwrap();
        for mode in [SearchMode::PerProcess, SearchMode::LastDecider] {
            let report = beat_search(&spec, &task, &dom, mode, 2_000_000_000).unwrap();
            match report.outcome {
                BeatOutcome::Certificate => println!(
                    "{target:>10} n={n} t={t} {:>12}: UNBEATABLE here \
                     ({} tables classes, {} nodes searched)",
                    mode.as_str(),
                    report.classes,
                    report.nodes
                ),
                BeatOutcome::Witness { improvements, .. } => {
                    let w = &improvements[0];
                    println!(
                        "{target:>10} n={n} t={t} {:>12}: beatable, e.g. process {} can \
                         decide at {:?} instead of {:?} under {}",
                        mode.as_str(),
                        w.process,
                        w.time_a,
                        w.time_b,
                        serde_json::to_string(&w.adversary).unwrap()
                    );
                }
            }
        }
    }
}

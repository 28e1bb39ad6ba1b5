//! Pairwise domination relations between the consensus rules, per-process
//! and by last decider.
//!
//! ```bash
//! cargo run --release --example compare_protocols
//! ```

use unbeatable::model::Value;
use unbeatable::oracle::Domain;
use unbeatable::protocols::{ProtocolId, ProtocolSpec};
use unbeatable::search::{compare, compare_last_decider, DominationRelation};

fn main() {
    let dom = Domain::new(3, 2, Value(1), 3).unwrap();
    let ids = [
        ProtocolId::Opt0,
        ProtocolId::Opt1,
        ProtocolId::P0,
        ProtocolId::P0OptHmw,
    ];
    let spec = |id| ProtocolSpec::new(id, 3, 2, Value(1), 1).unwrap();

    println!("per-process domination over n=3, t=2, binary values:");
    print!("{:>12}", "");
    for b in ids {
        print!("{:>12}", b.to_string());
    }
    println!();
    for a in ids {
        print!("{:>12}", a.to_string());
        for b in ids {
            let r = compare(&spec(a), &spec(b), &dom).relation;
            let cell = match r {
                DominationRelation::Dominates => "<=",
                DominationRelation::StrictlyDominates => "<",
                DominationRelation::Dominated => ">",
                DominationRelation::Incomparable => "<>",
            };
            print!("{cell:>12}");
        }
        println!();
    }

    let r = compare(&spec(ProtocolId::Opt0), &spec(ProtocolId::P0OptHmw), &dom);
    println!("\nwhere opt0 beats the failure-discovery rule:");
    if let Some(w) = r.witnesses.first() {
        println!(
            "  adversary {}  process {}  times {:?} vs {:?}",
            serde_json::to_string(&w.adversary).unwrap(),
            w.process,
            w.time_a,
            w.time_b
        );
    }

    let ld = compare_last_decider(&spec(ProtocolId::Opt0), &spec(ProtocolId::P0), &dom);
    println!("last-decider: opt0 vs p0 -> {:?}", ld.relation);
}

//! Check every combinatorial knowledge predicate against brute-force
//! semantic knowledge on all reachable views of a small domain.
//!
//! Knowledge of a fact means the fact holds in every adversary that could
//! have produced the local view. The library's per-view tests (seen values,
//! the correct-knower test, majority knowledge, and the hidden-path test
//! for "no one will ever learn a 0") claim to compute exactly that; this
//! example recomputes knowledge by enumeration and counts disagreements.
//!
//! ```bash
//! cargo run --release --example oracle_agreement
//! ```

use unbeatable::model::Value;
use unbeatable::oracle::{agreement_sweep, Domain};

fn main() {
    for (n, t, max_value) in [(2u8, 1u8, 1u8), (3, 1, 1), (3, 2, 1), (3, 2, 2)] {
        let dom = Domain::new(n, t, Value(max_value), 3).unwrap();
        let report = agreement_sweep(&dom).unwrap();
        println!(
            "n={n} t={t} |V|={}: {} views, disagreements: exists={} exists_correct={} \
             maj={} never_known={}",
            max_value + 1,
            report.views_checked,
            report.exists_disagreements,
            report.exists_correct_disagreements,
            report.maj_disagreements,
            report.never_known_disagreements,
        );
        assert!(report.pass());
        // The future-closed reading of "some correct process knows v" agrees
        // with the combinatorial test too.
        assert_eq!(
            report.exists_correct_eventual_matches,
            report.exists_correct_eventual_checked
        );
    }
    println!("all predicates agree with semantic knowledge on every view.");
}

//! Acceptance suite: every certification claim the library makes, run
//! end-to-end at desk scale. Each criterion prints one PASS/FAIL line
//! (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! The sweeps are exhaustive over their stated domains; there are no
//! tolerances anywhere, only exact counts and exact inequalities.

use std::sync::LazyLock;

use rand::SeedableRng;
use rayon::prelude::*;

use unbeatable::codec::{
    decode_and_decide, equivalence_sweep, random_adversary, BIT_BUDGET_FACTOR,
};
use unbeatable::knowledge::{hidden_profile, known_values};
use unbeatable::model::{view, Adversary, Time, Value};
use unbeatable::oracle::{agreement_sweep, hidden_variant, Domain};
use unbeatable::protocols::{ProtocolId, ProtocolSpec};
use unbeatable::search::{
    beat_search, compare, compare_last_decider, enumerate_patterns, value_vectors, BeatOutcome,
    DominationRelation, SearchMode,
};
use unbeatable::sim::{
    first_schedule_difference, verify_protocol, SweepOutcome, TaskKind, TaskSpec,
};

fn spec(id: ProtocolId, n: u8, t: u8, max_value: u8, k: u8) -> ProtocolSpec {
    ProtocolSpec::new(id, n, t, Value(max_value), k).unwrap()
}

fn dom(n: u8, t: u8, max_value: u8) -> Domain {
    Domain::new(n, t, Value(max_value), Time::from(t) + 1).unwrap()
}

fn task(kind: TaskKind, k: u8, max_value: u8) -> TaskSpec {
    TaskSpec::new(kind, k, Value(max_value)).unwrap()
}

/// One verification sweep shared by criteria 1 and 2.
struct Sweep {
    label: String,
    outcome: SweepOutcome,
}

static SWEEPS: LazyLock<Vec<Sweep>> = LazyLock::new(|| {
    let mut sweeps = Vec::new();
    // Binary consensus family at n=3.
    for t in 0..=2u8 {
        let d = dom(3, t, 1);
        let consensus = task(TaskKind::Consensus, 1, 1);
        for id in [
            ProtocolId::Opt0,
            ProtocolId::Opt1,
            ProtocolId::P0,
            ProtocolId::P0OptHmw,
        ] {
            sweeps.push(Sweep {
                label: format!("{id} consensus n=3 t={t}"),
                outcome: verify_protocol(&d, &spec(id, 3, t, 1, 1), &consensus, true),
            });
        }
        if t >= 1 {
            sweeps.push(Sweep {
                label: format!("opt-maj majority-consensus n=3 t={t}"),
                outcome: verify_protocol(
                    &d,
                    &spec(ProtocolId::OptMaj, 3, t, 1, 1),
                    &task(TaskKind::MajorityConsensus, 1, 1),
                    true,
                ),
            });
        }
        let uniform = task(TaskKind::UniformConsensus, 1, 1);
        for id in [ProtocolId::UP0, ProtocolId::UOpt0] {
            sweeps.push(Sweep {
                label: format!("{id} uniform-consensus n=3 t={t}"),
                outcome: verify_protocol(&d, &spec(id, 3, t, 1, 1), &uniform, true),
            });
        }
    }
    // k-set family at n=4 over three values with k=2.
    for t in 1..=3u8 {
        let d = dom(4, t, 2);
        sweeps.push(Sweep {
            label: format!("opt-min-k k=2 k-set n=4 t={t}"),
            outcome: verify_protocol(
                &d,
                &spec(ProtocolId::OptMinK, 4, t, 2, 2),
                &task(TaskKind::KSet, 2, 2),
                true,
            ),
        });
        sweeps.push(Sweep {
            label: format!("u-prot-min-k k=2 uniform-k-set n=4 t={t}"),
            outcome: verify_protocol(
                &d,
                &spec(ProtocolId::UProtMinK, 4, t, 2, 2),
                &task(TaskKind::UniformKSet, 2, 2),
                true,
            ),
        });
    }
    sweeps
});

#[test]
fn criterion_1_correctness_sweeps() {
    let mut total = 0u64;
    let mut ok = true;
    for s in SWEEPS.iter() {
        total += s.outcome.adversaries;
        if s.outcome.property_failures != 0 {
            ok = false;
            eprintln!(
                "  property failures in {}: {:?}",
                s.label,
                s.outcome.failures.first()
            );
        }
    }
    println!(
        "criterion 1 (exhaustive correctness sweeps, {} runs over {} sweeps): {}",
        total,
        SWEEPS.len(),
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn criterion_2_stopping_time_bounds() {
    let mut ok = true;
    for s in SWEEPS.iter() {
        if s.outcome.bound_failures != 0 {
            ok = false;
            eprintln!("  bound failures in {}", s.label);
        }
    }
    println!(
        "criterion 2 (stopping-time bounds, exact inequality on all sweeps): {}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn criterion_3_domination_facts() {
    let mut lines = Vec::new();
    let mut ok = true;
    for t in 0..=2u8 {
        let d = dom(3, t, 1);
        let opt0 = spec(ProtocolId::Opt0, 3, t, 1, 1);
        let p0 = spec(ProtocolId::P0, 3, t, 1, 1);
        let hmw = spec(ProtocolId::P0OptHmw, 3, t, 1, 1);
        let opt1 = spec(ProtocolId::Opt1, 3, t, 1, 1);

        // Against the fixed-deadline rule the hidden-path rule is strict as
        // soon as failures are possible; at t=0 the two coincide.
        let r = compare(&opt0, &p0, &d);
        let want = if t == 0 {
            DominationRelation::Dominates
        } else {
            DominationRelation::StrictlyDominates
        };
        if r.relation != want {
            ok = false;
        }
        if t > 0 {
            ok &= !r.witnesses.is_empty();
            lines.push(format!(
                "  opt0 beats p0 at t={t}, witness: {} process {} at {:?} vs {:?}",
                serde_json::to_string(&r.witnesses[0].adversary).unwrap(),
                r.witnesses[0].process,
                r.witnesses[0].time_a,
                r.witnesses[0].time_b
            ));
        }

        // Against the failure-discovery-stability rule strictness needs two
        // discovery rounds, i.e. t=2 here; below that they coincide.
        let r = compare(&opt0, &hmw, &d);
        let want = if t == 2 {
            DominationRelation::StrictlyDominates
        } else {
            DominationRelation::Dominates
        };
        if r.relation != want {
            ok = false;
        }
        if t == 2 {
            ok &= !r.witnesses.is_empty();
            lines.push(format!(
                "  opt0 beats p0opt-hmw at t={t}, witness: {} process {} at {:?} vs {:?}",
                serde_json::to_string(&r.witnesses[0].adversary).unwrap(),
                r.witnesses[0].process,
                r.witnesses[0].time_a,
                r.witnesses[0].time_b
            ));
        }

        if compare(&opt0, &opt1, &d).relation != DominationRelation::Incomparable {
            ok = false;
        }

        // Per-process domination implies last-decider domination on every
        // tested pair.
        let ids = [
            ProtocolId::P0,
            ProtocolId::Opt0,
            ProtocolId::Opt1,
            ProtocolId::UP0,
            ProtocolId::UOpt0,
            ProtocolId::P0OptHmw,
            ProtocolId::OptMaj,
        ];
        for a in ids {
            for b in ids {
                let sa = spec(a, 3, t, 1, 1);
                let sb = spec(b, 3, t, 1, 1);
                let pp = compare(&sa, &sb, &d).relation;
                let ld = compare_last_decider(&sa, &sb, &d).relation;
                let pp_dominates = matches!(
                    pp,
                    DominationRelation::Dominates | DominationRelation::StrictlyDominates
                );
                let ld_dominates = matches!(
                    ld,
                    DominationRelation::Dominates | DominationRelation::StrictlyDominates
                );
                if pp_dominates && !ld_dominates {
                    ok = false;
                    eprintln!("  {a} vs {b} at t={t}: per-process {pp:?} but last-decider {ld:?}");
                }
            }
        }
    }
    println!(
        "criterion 3 (domination facts with explicit witnesses): {}",
        if ok { "PASS" } else { "FAIL" }
    );
    for l in lines {
        println!("{l}");
    }
    assert!(ok);
}

fn certify(id: ProtocolId, kind: TaskKind, n: u8, t: u8) -> [bool; 2] {
    let d = dom(n, t, 1);
    let s = spec(id, n, t, 1, 1);
    let ts = task(kind, 1, 1);
    [SearchMode::PerProcess, SearchMode::LastDecider].map(|mode| {
        matches!(
            beat_search(&s, &ts, &d, mode, 2_000_000_000)
                .unwrap()
                .outcome,
            BeatOutcome::Certificate
        )
    })
}

#[test]
fn criterion_4_unbeatability_certificates() {
    let mut ok = true;
    for (n, t) in [(2u8, 1u8), (3, 1)] {
        let certs = certify(ProtocolId::Opt0, TaskKind::Consensus, n, t);
        ok &= certs == [true, true];
        println!(
            "criterion 4a (opt0 unbeatable at n={n} t={t}, per-process/last-decider): {}",
            if certs == [true, true] {
                "PASS"
            } else {
                "FAIL"
            }
        );
    }
    let certs = certify(ProtocolId::OptMaj, TaskKind::MajorityConsensus, 3, 1);
    ok &= certs == [true, true];
    println!(
        "criterion 4a (opt-maj unbeatable at n=3 t=1, per-process/last-decider): {}",
        if certs == [true, true] {
            "PASS"
        } else {
            "FAIL"
        }
    );
    assert!(ok);
}

#[test]
fn criterion_4_beatable_targets() {
    let mut ok = true;
    for (n, t) in [(2u8, 1u8), (3, 1)] {
        let beaten = certify(ProtocolId::P0, TaskKind::Consensus, n, t);
        ok &= beaten == [false, false];
        println!(
            "criterion 4b (p0 beatable at n={n} t={t}, witness in both modes): {}",
            if beaten == [false, false] {
                "PASS"
            } else {
                "FAIL"
            }
        );
    }
    let beaten = certify(ProtocolId::P0OptHmw, TaskKind::Consensus, 2, 1);
    ok &= beaten == [false, false];
    println!(
        "criterion 4b (p0opt-hmw beatable at n=2 t=1, witness in both modes): {}",
        if beaten == [false, false] {
            "PASS"
        } else {
            "FAIL"
        }
    );

    // Stated expectation: a witness against p0opt-hmw at n=3 t=1 as well.
    // The exhaustive search certifies the opposite: at n=3, t=1 the
    // stability rule produces the same schedule as opt0 on every adversary
    // (a round-2 discovery implies round 1 discovered nothing, so both rules
    // fire at the same times), hence it is unbeatable at this size and the
    // separating scenarios need t >= 2. The certificate below makes this
    // sub-criterion fail honestly rather than weakening the check.
    let beaten = certify(ProtocolId::P0OptHmw, TaskKind::Consensus, 3, 1);
    let hmw_equals_opt0 = first_schedule_difference(
        &dom(3, 1, 1),
        &spec(ProtocolId::P0OptHmw, 3, 1, 1, 1),
        &spec(ProtocolId::Opt0, 3, 1, 1, 1),
    )
    .is_none();
    println!(
        "criterion 4b (p0opt-hmw beatable at n=3 t=1): {} (search returned a certificate; \
         p0opt-hmw coincides with opt0 on this whole domain: {hmw_equals_opt0})",
        if beaten == [false, false] {
            "PASS"
        } else {
            "FAIL"
        }
    );
    ok &= beaten == [false, false];
    assert!(
        ok,
        "p0opt-hmw has no in-domain beater at n=3 t=1; see the printed note"
    );
}

#[test]
fn criterion_5_epistemic_oracle_agreement() {
    let mut ok = true;
    let mut views = 0u64;
    for (n, t) in [(2u8, 0u8), (2, 1), (3, 0), (3, 1), (3, 2)] {
        for max_value in [1u8, 2] {
            let d = Domain::new(n, t, Value(max_value), 3).unwrap();
            let report = agreement_sweep(&d).unwrap();
            views += report.views_checked;
            if !report.pass() {
                ok = false;
                eprintln!(
                    "  disagreements at n={n} t={t} |V|={}: {report:?}",
                    max_value + 1
                );
            }
            // The future-closed reading of the correctness fact matches the
            // combinatorial test wherever the current-time reading does.
            if report.exists_correct_eventual_matches != report.exists_correct_eventual_checked {
                ok = false;
                eprintln!(
                    "  eventual-variant mismatch at n={n} t={t} |V|={}",
                    max_value + 1
                );
            }
        }
    }
    println!(
        "criterion 5 (knowledge predicates vs semantic oracle on {views} views): {}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn criterion_6_hidden_variant_construction() {
    let mut checked = 0u64;
    let mut ok = true;
    for (n, t) in [(2u8, 1u8), (3, 2), (4, 2)] {
        let d = dom(n, t, 1);
        let horizon = d.horizon;
        let patterns = enumerate_patterns(&d);
        let results: Vec<(u64, bool)> = patterns
            .par_iter()
            .map(|pattern| {
                let mut count = 0u64;
                let mut good = true;
                for values in value_vectors(&d) {
                    let adv = Adversary { n, values, pattern: pattern.clone() };
                    for i in adv.process_ids() {
                        for m in 0..=horizon {
                            let Ok(w) = view(&adv, i, m) else { continue };
                            let profile = hidden_profile(&w);
                            let c = profile.capacity as usize;
                            if c == 0 {
                                continue;
                            }
                            let planted: Vec<Value> =
                                (0..c).map(|b| Value((b % 2) as u8)).collect();
                            count += 1;
                            let Ok(variant) = hidden_variant(&adv, i, m, &planted) else {
                                good = false;
                                continue;
                            };
                            if variant.validate(Value(1)).is_err() {
                                good = false;
                                continue;
                            }
                            if view(&variant, i, m).unwrap() != w {
                                good = false;
                                eprintln!("  view changed for {adv:?} i={i} m={m}");
                                continue;
                            }
                            for (l, level) in profile.hidden_by_level.iter().enumerate() {
                                for (b, p) in level.iter().take(c).enumerate() {
                                    let wv = view(&variant, p, l as Time).unwrap();
                                    if !known_values(&wv, None).vals.contains(&planted[b]) {
                                        good = false;
                                        eprintln!(
                                            "  value not planted for {adv:?} i={i} m={m} witness {p} level {l}"
                                        );
                                    }
                                }
                            }
                        }
                    }
                }
                (count, good)
            })
            .collect();
        for (count, good) in results {
            checked += count;
            ok &= good;
        }
    }
    println!(
        "criterion 6 (hidden-variant view preservation and value planting, {checked} instances): {}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn criterion_7_protocol_coincidences() {
    let mut ok = true;
    // Min-k at k=1 is exactly the minimum rule.
    for (n, t, max_value) in [(3u8, 0u8, 2u8), (3, 1, 2), (3, 2, 2), (4, 2, 2)] {
        let d = dom(n, t, max_value);
        let diff = first_schedule_difference(
            &d,
            &spec(ProtocolId::OptMinK, n, t, max_value, 1),
            &spec(ProtocolId::OptMin, n, t, max_value, 1),
        );
        if let Some(adv) = diff {
            ok = false;
            eprintln!("  opt-min-k(k=1) != opt-min on {adv:?}");
        }
    }
    // The uniform min-k rule at k=1 is exactly the uniform hidden-path rule.
    for (n, t) in [(3u8, 0u8), (3, 1), (3, 2), (4, 2)] {
        let d = dom(n, t, 1);
        let diff = first_schedule_difference(
            &d,
            &spec(ProtocolId::UProtMinK, n, t, 1, 1),
            &spec(ProtocolId::UOpt0, n, t, 1, 1),
        );
        if let Some(adv) = diff {
            ok = false;
            eprintln!("  u-prot-min-k(k=1) != u-opt0 on {adv:?}");
        }
    }
    // Without failures the uniform and non-uniform hidden-path rules agree.
    for n in [3u8, 4] {
        let d = dom(n, 0, 1);
        let diff = first_schedule_difference(
            &d,
            &spec(ProtocolId::UOpt0, n, 0, 1, 1),
            &spec(ProtocolId::Opt0, n, 0, 1, 1),
        );
        if let Some(adv) = diff {
            ok = false;
            eprintln!("  u-opt0 != opt0 at t=0 on {adv:?}");
        }
    }
    println!(
        "criterion 7 (protocol coincidences as schedules): {}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn criterion_8_codec_equivalence_and_bit_budget() {
    let mut ok = true;
    let mut runs = 0u64;
    // Schedule equivalence (with strict frame verification) for every
    // protocol over the full n <= 4, t <= 2 enumerations.
    let binary_ids = [
        ProtocolId::P0,
        ProtocolId::Opt0,
        ProtocolId::Opt1,
        ProtocolId::OptMaj,
        ProtocolId::UP0,
        ProtocolId::UOpt0,
        ProtocolId::P0OptHmw,
    ];
    for (n, t) in [(2u8, 1u8), (3, 1), (3, 2), (4, 1), (4, 2)] {
        let d = dom(n, t, 1);
        for id in binary_ids {
            let out = equivalence_sweep(&d, &spec(id, n, t, 1, 1), true).unwrap();
            runs += out.adversaries;
            if !out.pass() {
                ok = false;
                eprintln!(
                    "  codec mismatch for {id} at n={n} t={t}: {:?}",
                    out.first_mismatch
                );
            }
        }
        let dt = dom(n, t, 2);
        for (id, k) in [
            (ProtocolId::OptMin, 1u8),
            (ProtocolId::OptMinK, 1),
            (ProtocolId::OptMinK, 2),
            (ProtocolId::UProtMinK, 1),
            (ProtocolId::UProtMinK, 2),
        ] {
            let out = equivalence_sweep(&dt, &spec(id, n, t, 2, k), true).unwrap();
            runs += out.adversaries;
            if !out.pass() {
                ok = false;
                eprintln!(
                    "  codec mismatch for {id} k={k} at n={n} t={t}: {:?}",
                    out.first_mismatch
                );
            }
        }
    }
    println!(
        "criterion 8a (compact engine == simulator on {runs} runs incl. frame checks): {}",
        if ok { "PASS" } else { "FAIL" }
    );

    // Bit budget on random adversaries at larger sizes.
    let mut budget_ok = true;
    for n in [8u8, 16, 32] {
        let t = n / 2;
        let horizon = Time::from(t) + 1;
        let budget = BIT_BUDGET_FACTOR * u64::from(n) * u64::from(u32::from(n).ilog2());
        let s = spec(ProtocolId::Opt0, n, t, 1, 1);
        let max_seen: u64 = (0..1000u64)
            .into_par_iter()
            .map(|seed| {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xb17_0000 + seed);
                let adv = random_adversary(&mut rng, n, t, Value(1), horizon);
                let run = decode_and_decide(&s, &adv, horizon, false).unwrap();
                run.ledger.max_pair_bits()
            })
            .max()
            .unwrap();
        if max_seen > budget {
            budget_ok = false;
            eprintln!("  n={n}: max pair bits {max_seen} exceed {budget}");
        } else {
            println!(
                "  n={n}: max pair bits {max_seen} <= {budget} = {BIT_BUDGET_FACTOR}*n*log2(n)"
            );
        }
    }
    println!(
        "criterion 8b (bit budget over 1000 random adversaries per size): {}",
        if budget_ok { "PASS" } else { "FAIL" }
    );
    assert!(ok && budget_ok);
}

#[test]
fn criterion_9_determinism() {
    let d = dom(3, 2, 1);
    let s = spec(ProtocolId::Opt0, 3, 2, 1, 1);
    let ts = task(TaskKind::Consensus, 1, 1);
    let render = || {
        let sweep = serde_json::to_string(&verify_protocol(&d, &s, &ts, true)).unwrap();
        let cmp =
            serde_json::to_string(&compare(&s, &spec(ProtocolId::P0, 3, 2, 1, 1), &d)).unwrap();
        let codec = serde_json::to_string(&equivalence_sweep(&d, &s, false).unwrap()).unwrap();
        let oracle = serde_json::to_string(&agreement_sweep(&dom(2, 1, 1)).unwrap()).unwrap();
        format!("{sweep}\n{cmp}\n{codec}\n{oracle}")
    };
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let dual = rayon::ThreadPoolBuilder::new()
        .num_threads(2)
        .build()
        .unwrap();
    let a = single.install(render);
    let b = dual.install(render);
    let c = dual.install(render);
    let ok = a == b && b == c;
    println!(
        "criterion 9 (byte-identical reports across repeats and worker counts): {}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

//! Combinatorial epistemic predicates over a single view: known values,
//! hidden nodes and paths, hidden capacity, known failures, and the
//! knowledge tests the decision rules are built from.
//!
//! A node `<j,l>` is *hidden* from the view's owner when (a) the view holds
//! no proof that `j` crashed in some round `<= l` — no seen node `<x,q>` with
//! `q <= l` that lacks its incoming edge from `<j,q-1>` — and (b) `<j,l>` is
//! not itself seen. The *hidden capacity* of a view at time `m` is the
//! largest `c` such that every level `0..=m` has at least `c` hidden nodes; a
//! *hidden path* exists exactly when the capacity is at least 1. Hidden
//! paths bound what the owner can rule out: as long as one exists, an
//! unknown initial value may survive somewhere.
//!
//! Everything here is a pure function of the view; none of it looks at the
//! adversary. The semantic evaluator in [`crate::oracle`] provides the
//! independent ground truth these predicates are tested against.

use std::collections::{BTreeMap, BTreeSet};

use smallvec::SmallVec;
use thiserror::Error;

use crate::model::{Node, ProcSet, ProcessId, Time, Value, ValueSet, View};

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum KnowledgeError {
    #[error("previous view does not belong to the same process one step earlier")]
    MismatchedViews,
    #[error("operation requires the binary value set {{0,1}}")]
    NonBinaryTask,
}

/// Values the owner has seen, the minimum, and the low slice `vals ∩ {0..k-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnownValueSet {
    pub vals: BTreeSet<Value>,
    pub min: Option<Value>,
    pub lows: BTreeSet<Value>,
}

/// What the view proves about failures: per-process earliest provable crash
/// round, plus the count of direct silences at the view's own level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailureKnowledge {
    pub known_crashed_by: BTreeMap<ProcessId, u32>,
    pub knownf: u32,
}

/// Hidden nodes per level and the resulting capacity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HiddenProfile {
    pub hidden_by_level: Vec<ProcSet>,
    pub capacity: u32,
}

impl HiddenProfile {
    pub fn hidden_path_exists(&self) -> bool {
        self.capacity >= 1
    }
}

/// Per-view visibility summary everything else is derived from.
///
/// For each process `j` the seen nodes form a prefix `<j,0>..<j,last_seen>`,
/// and `crash_proof` is the earliest round the view can prove `j` crashed by
/// (`u32::MAX` when it cannot). `<j,l>` is hidden iff
/// `last_seen < l < crash_proof`.
#[derive(Debug, Clone)]
pub(crate) struct Analysis {
    pub n: u8,
    pub m: Time,
    pub last_seen: SmallVec<[i8; 8]>,
    pub crash_proof: SmallVec<[u32; 8]>,
    pub vals: ValueSet,
    pub zeros: u32,
    pub ones: u32,
    pub knownf: u32,
}

pub(crate) const NO_PROOF: u32 = u32::MAX;

impl Analysis {
    pub fn of(view: &View) -> Analysis {
        let n = view.n();
        let m = view.time();
        let owner = view.owner().process;
        let mut last_seen: SmallVec<[i8; 8]> = SmallVec::with_capacity(n as usize);
        let mut crash_proof: SmallVec<[u32; 8]> = SmallVec::with_capacity(n as usize);
        for j in (1..=n).map(ProcessId) {
            let mask = view.seen_mask(j);
            last_seen.push(if mask == 0 {
                -1
            } else {
                63 - mask.leading_zeros() as i8
            });
            let mut proof = NO_PROOF;
            for x in (1..=n).map(ProcessId) {
                if x == j {
                    // Self-edges are always present while a node exists.
                    continue;
                }
                // Rounds q >= 1 where <x,q> is seen but the round-q edge from
                // <j,q-1> is missing; the earliest such q proves j crashed by
                // round q.
                let gaps = view.seen_mask(x) & !(view.edge_mask(j, x) << 1) & !1;
                if gaps != 0 {
                    proof = proof.min(gaps.trailing_zeros());
                }
            }
            crash_proof.push(proof);
        }
        let mut vals = ValueSet::EMPTY;
        let (mut zeros, mut ones) = (0, 0);
        for (_, v) in view.initial_values() {
            vals.insert(*v);
            match v.0 {
                0 => zeros += 1,
                1 => ones += 1,
                _ => {}
            }
        }
        let mut knownf = 0;
        if m > 0 {
            for j in (1..=n).map(ProcessId) {
                if j != owner && view.edge_mask(j, owner) & (1 << (m - 1)) == 0 {
                    knownf += 1;
                }
            }
        }
        Analysis {
            n,
            m,
            last_seen,
            crash_proof,
            vals,
            zeros,
            ones,
            knownf,
        }
    }

    pub fn hidden(&self, j: ProcessId, level: Time) -> bool {
        (self.last_seen[j.index()] as i64) < level as i64 && level < self.crash_proof[j.index()]
    }

    pub fn hidden_at_level(&self, level: Time) -> ProcSet {
        (1..=self.n)
            .map(ProcessId)
            .filter(|j| self.hidden(*j, level))
            .collect()
    }

    pub fn capacity(&self) -> u32 {
        (0..=self.m)
            .map(|l| self.hidden_at_level(l).len() as u32)
            .min()
            .unwrap_or(0)
    }

    /// Processes the view proves crashed (at any round).
    pub fn proven_crashed(&self) -> ProcSet {
        (1..=self.n)
            .map(ProcessId)
            .filter(|j| self.crash_proof[j.index()] != NO_PROOF)
            .collect()
    }
}

/// The set of initial values visible in the view, with `min` and the low
/// slice for the given `k` (defaults to 1).
pub fn known_values(view: &View, k: Option<u8>) -> KnownValueSet {
    let k = k.unwrap_or(1);
    let mut vals = BTreeSet::new();
    for (_, v) in view.initial_values() {
        vals.insert(*v);
    }
    let min = vals.iter().next().copied();
    let lows = vals.iter().copied().filter(|v| v.0 < k).collect();
    KnownValueSet { vals, min, lows }
}

/// Whether `<j,level>` is hidden from the view's owner.
pub fn hidden(view: &View, j: ProcessId, level: Time) -> bool {
    assert!(level <= view.time(), "level beyond the view's own time");
    Analysis::of(view).hidden(j, level)
}

/// Hidden nodes at every level `0..=m` and the capacity they support.
pub fn hidden_profile(view: &View) -> HiddenProfile {
    let a = Analysis::of(view);
    let hidden_by_level: Vec<ProcSet> = (0..=a.m).map(|l| a.hidden_at_level(l)).collect();
    let capacity = hidden_by_level
        .iter()
        .map(|s| s.len() as u32)
        .min()
        .unwrap_or(0);
    HiddenProfile {
        hidden_by_level,
        capacity,
    }
}

/// Hidden-path test used by every decision rule: a hidden node at every
/// level `0..=m`, i.e. capacity >= 1.
pub fn hidden_path_exists(view: &View) -> bool {
    Analysis::of(view).capacity() >= 1
}

/// Variant that only requires a hidden node at every level `l < m`. On
/// degenerate instances (for example two processes where the peer just went
/// silent) it disagrees with [`hidden_path_exists`]; it exists so the
/// divergence can be demonstrated, and no decision rule uses it.
pub fn hidden_path_exists_below_top(view: &View) -> bool {
    let a = Analysis::of(view);
    (0..a.m).all(|l| !a.hidden_at_level(l).is_empty())
}

/// Direct round-`m` silences plus the earliest provable crash round per
/// process.
pub fn failure_knowledge(view: &View) -> FailureKnowledge {
    let a = Analysis::of(view);
    let mut known_crashed_by = BTreeMap::new();
    for j in (1..=a.n).map(ProcessId) {
        let proof = a.crash_proof[j.index()];
        if proof != NO_PROOF {
            known_crashed_by.insert(j, proof);
        }
    }
    FailureKnowledge {
        known_crashed_by,
        knownf: a.knownf,
    }
}

/// For every seen node `<j,m-1>`, the set of initial values visible to it
/// from inside this view (which, by closure, is exactly what `j` knew then).
pub(crate) fn prev_level_value_sets(view: &View) -> SmallVec<[(ProcessId, ValueSet); 8]> {
    let n = view.n();
    let m = view.time();
    if m == 0 {
        return SmallVec::new();
    }
    // reach[p] = level-0 processes with a chain to <p, l> inside the view.
    let mut reach: SmallVec<[u64; 8]> = SmallVec::with_capacity(n as usize);
    for p in (1..=n).map(ProcessId) {
        reach.push(if view.contains(Node::new(p, 0)) {
            1 << p.index()
        } else {
            0
        });
    }
    for l in 0..m - 1 {
        let mut next: SmallVec<[u64; 8]> = smallvec::smallvec![0; n as usize];
        for p in (1..=n).map(ProcessId) {
            if !view.contains(Node::new(p, l + 1)) {
                continue;
            }
            for q in (1..=n).map(ProcessId) {
                if view.edge_mask(q, p) & (1 << l) != 0 {
                    next[p.index()] |= reach[q.index()];
                }
            }
        }
        reach = next;
    }
    let mut out = SmallVec::new();
    for j in (1..=n).map(ProcessId) {
        if view.contains(Node::new(j, m - 1)) {
            let mut vs = ValueSet::EMPTY;
            for src in ProcSet(reach[j.index()]).iter() {
                if let Some(v) = view.initial_value(src) {
                    vs.insert(v);
                }
            }
            out.push((j, vs));
        }
    }
    out
}

/// Number of distinct processes `j` (the owner included) for which the view
/// proves that `j` knew value `v` one time step earlier.
pub(crate) fn witness_count(view: &View, v: Value) -> u32 {
    prev_level_value_sets(view)
        .iter()
        .filter(|(_, vs)| vs.contains(v))
        .count() as u32
}

/// Test for "some correct process knows that `v` exists".
///
/// Holds iff `v` is visible now and either (a) the owner already saw `v` one
/// step earlier, or (b) at least `t - knownf` distinct processes provably
/// knew `v` at the previous time. `view_prev` must be the same process's
/// view one step earlier whenever the owner's time is positive.
pub fn knows_exists_correct(
    view_now: &View,
    view_prev: Option<&View>,
    v: Value,
    t: u8,
) -> Result<bool, KnowledgeError> {
    let m = view_now.time();
    let prev_vals = match (m, view_prev) {
        (0, None) => None,
        (0, Some(_)) => return Err(KnowledgeError::MismatchedViews),
        (_, None) => return Err(KnowledgeError::MismatchedViews),
        (_, Some(p)) => {
            if p.owner().process != view_now.owner().process || p.time() + 1 != m {
                return Err(KnowledgeError::MismatchedViews);
            }
            Some(Analysis::of(p).vals)
        }
    };
    let a = Analysis::of(view_now);
    if !a.vals.contains(v) {
        return Ok(false);
    }
    let clause_a = prev_vals.is_some_and(|pv| pv.contains(v));
    let clause_b = witness_count(view_now, v) >= u32::from(t).saturating_sub(a.knownf);
    Ok(clause_a || clause_b)
}

/// Whether the owner knows a strict (for 0) or weak (for 1) majority of the
/// initial values equals `v`; unseen values are adversarial, so counting the
/// seen ones is exactly knowledge.
pub fn knows_majority(view: &View, v: Value) -> Result<bool, KnowledgeError> {
    let a = binary_analysis(view, Some(v))?;
    let n = u32::from(view.n());
    Ok(match v.0 {
        0 => 2 * a.zeros > n,
        _ => 2 * a.ones >= n,
    })
}

/// Majority vote over the values seen so far: 0 iff strictly more than half
/// of the known initial values are 0, else 1.
pub fn maj_vals(view: &View) -> Result<Value, KnowledgeError> {
    let a = binary_analysis(view, None)?;
    Ok(if a.zeros > a.ones { Value(0) } else { Value(1) })
}

fn binary_analysis(view: &View, v: Option<Value>) -> Result<Analysis, KnowledgeError> {
    if v.is_some_and(|v| v.0 > 1) {
        return Err(KnowledgeError::NonBinaryTask);
    }
    let a = Analysis::of(view);
    if a.vals.iter().any(|v| v.0 > 1) {
        return Err(KnowledgeError::NonBinaryTask);
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{view, Adversary, Crash, ProcessId, Value};

    fn v(vals: &[u8]) -> Vec<Value> {
        vals.iter().map(|x| Value(*x)).collect()
    }

    fn crash(p: u8, round: u32, to: &[u8]) -> Crash {
        Crash {
            process: ProcessId(p),
            round,
            delivers_to: to.iter().map(|x| ProcessId(*x)).collect(),
        }
    }

    /// Three silent chains over two rounds: 5->2, 6->3, 7->4, with the
    /// level-1 carriers failing silently in round 2. Witnesses survive at
    /// every level, so <1,2> keeps hidden capacity 3.
    fn triple_chain_adversary() -> Adversary {
        Adversary::new(
            10,
            6,
            v(&[1; 10]),
            vec![
                crash(5, 1, &[2]),
                crash(6, 1, &[3]),
                crash(7, 1, &[4]),
                crash(2, 2, &[]),
                crash(3, 2, &[]),
                crash(4, 2, &[]),
            ],
        )
    }

    #[test]
    fn known_values_at_time_zero_and_one() {
        let adv = Adversary::failure_free(3, 1, v(&[0, 1, 1]));
        let w0 = view(&adv, ProcessId(2), 0).unwrap();
        assert_eq!(known_values(&w0, None).vals.len(), 1);
        let w1 = view(&adv, ProcessId(2), 1).unwrap();
        let kv = known_values(&w1, Some(1));
        assert_eq!(kv.vals.iter().map(|v| v.0).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(kv.min, Some(Value(0)));
        assert_eq!(kv.lows.iter().map(|v| v.0).collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn owner_is_never_hidden() {
        let adv = Adversary::failure_free(3, 1, v(&[0, 1, 1]));
        let w = view(&adv, ProcessId(1), 1).unwrap();
        assert!(!hidden(&w, ProcessId(1), 0));
        assert!(!hidden(&w, ProcessId(1), 1));
    }

    #[test]
    fn peers_at_the_top_level_are_hidden_when_failure_free() {
        let adv = Adversary::failure_free(3, 1, v(&[0, 1, 1]));
        let w = view(&adv, ProcessId(1), 1).unwrap();
        assert!(hidden(&w, ProcessId(2), 1));
        assert!(hidden(&w, ProcessId(3), 1));
        assert!(!hidden(&w, ProcessId(2), 0));
    }

    #[test]
    fn round_one_silence_is_proof_by_time_one() {
        let adv = Adversary::new(2, 1, v(&[1, 1]), vec![crash(2, 1, &[])]);
        let w = view(&adv, ProcessId(1), 1).unwrap();
        assert!(hidden(&w, ProcessId(2), 0));
        assert!(!hidden(&w, ProcessId(2), 1));
    }

    #[test]
    fn capacity_extremes() {
        let adv = Adversary::failure_free(4, 1, v(&[0, 0, 0, 0]));
        let w0 = view(&adv, ProcessId(1), 0).unwrap();
        assert_eq!(hidden_profile(&w0).capacity, 3);
        let w1 = view(&adv, ProcessId(1), 1).unwrap();
        let profile = hidden_profile(&w1);
        assert!(profile.hidden_by_level[0].is_empty());
        assert_eq!(profile.capacity, 0);
    }

    #[test]
    fn triple_chain_view_hides_six_nodes_and_has_capacity_three() {
        let adv = triple_chain_adversary();
        let w = view(&adv, ProcessId(1), 2).unwrap();
        for p in [5, 6, 7] {
            assert!(!w.contains(Node::new(ProcessId(p), 0)));
        }
        for p in [2, 3, 4] {
            assert!(!w.contains(Node::new(ProcessId(p), 1)));
        }
        let profile = hidden_profile(&w);
        assert_eq!(
            profile.hidden_by_level[0]
                .iter()
                .map(|p| p.0)
                .collect::<Vec<_>>(),
            vec![5, 6, 7]
        );
        assert_eq!(
            profile.hidden_by_level[1]
                .iter()
                .map(|p| p.0)
                .collect::<Vec<_>>(),
            vec![2, 3, 4]
        );
        assert_eq!(
            profile.hidden_by_level[2]
                .iter()
                .map(|p| p.0)
                .collect::<Vec<_>>(),
            vec![8, 9, 10]
        );
        assert_eq!(profile.capacity, 3);
    }

    #[test]
    fn hidden_path_variants_diverge_on_the_two_process_case() {
        let adv = Adversary::new(2, 1, v(&[1, 1]), vec![crash(2, 1, &[])]);
        let w = view(&adv, ProcessId(1), 1).unwrap();
        assert!(!hidden_path_exists(&w));
        assert!(hidden_path_exists_below_top(&w));
        let ff = Adversary::failure_free(3, 1, v(&[1, 1, 1]));
        let w0 = view(&ff, ProcessId(1), 0).unwrap();
        assert!(hidden_path_exists(&w0));
        let w1 = view(&ff, ProcessId(1), 1).unwrap();
        assert!(!hidden_path_exists(&w1));
    }

    #[test]
    fn failure_knowledge_counts_direct_silence() {
        let ff = Adversary::failure_free(3, 1, v(&[1, 1, 1]));
        let w = view(&ff, ProcessId(1), 1).unwrap();
        let fk = failure_knowledge(&w);
        assert_eq!(fk.knownf, 0);
        assert!(fk.known_crashed_by.is_empty());

        let adv = Adversary::new(4, 2, v(&[1, 0, 1, 1]), vec![crash(2, 1, &[3])]);
        let w1 = view(&adv, ProcessId(1), 1).unwrap();
        assert_eq!(failure_knowledge(&w1).knownf, 1);
        let w2 = view(&adv, ProcessId(1), 2).unwrap();
        let fk2 = failure_knowledge(&w2);
        assert_eq!(fk2.knownf, 1);
        assert_eq!(fk2.known_crashed_by.get(&ProcessId(2)), Some(&1));
    }

    #[test]
    fn exists_correct_reduces_to_visibility_when_t_is_zero() {
        let adv = Adversary::failure_free(3, 0, v(&[0, 1, 1]));
        let w0 = view(&adv, ProcessId(1), 0).unwrap();
        assert_eq!(knows_exists_correct(&w0, None, Value(0), 0), Ok(true));
        assert_eq!(knows_exists_correct(&w0, None, Value(1), 0), Ok(false));
    }

    #[test]
    fn nobody_knows_exists_correct_at_time_zero_with_failures_possible() {
        let adv = Adversary::failure_free(3, 1, v(&[0, 1, 1]));
        let w0 = view(&adv, ProcessId(1), 0).unwrap();
        assert_eq!(knows_exists_correct(&w0, None, Value(0), 1), Ok(false));
    }

    #[test]
    fn value_from_a_single_crashed_sender_is_not_enough() {
        // 1 first learns 0 at time 1 from 2, which may have crashed right
        // after sending; with knownf=0 < t-1 the single witness cannot cover
        // the remaining failure budget.
        let adv = Adversary::new(3, 2, v(&[1, 0, 1]), vec![crash(2, 1, &[1])]);
        let w0 = view(&adv, ProcessId(1), 0).unwrap();
        let w1 = view(&adv, ProcessId(1), 1).unwrap();
        assert!(known_values(&w1, None).vals.contains(&Value(0)));
        assert_eq!(knows_exists_correct(&w1, Some(&w0), Value(0), 2), Ok(false));
        // With the full budget already visible as silence the witness count
        // suffices (t - knownf = 1 here).
        let adv1 = Adversary::new(3, 1, v(&[1, 0, 1]), vec![crash(2, 1, &[1])]);
        let w1 = view(&adv1, ProcessId(1), 1).unwrap();
        let w0 = view(&adv1, ProcessId(1), 0).unwrap();
        assert_eq!(knows_exists_correct(&w1, Some(&w0), Value(0), 1), Ok(true));
    }

    #[test]
    fn mismatched_previous_views_are_rejected() {
        let adv = Adversary::failure_free(3, 1, v(&[0, 1, 1]));
        let w1 = view(&adv, ProcessId(1), 1).unwrap();
        let wrong = view(&adv, ProcessId(2), 0).unwrap();
        assert_eq!(
            knows_exists_correct(&w1, Some(&wrong), Value(0), 1),
            Err(KnowledgeError::MismatchedViews)
        );
        assert_eq!(
            knows_exists_correct(&w1, None, Value(0), 1),
            Err(KnowledgeError::MismatchedViews)
        );
    }

    #[test]
    fn majority_knowledge_thresholds() {
        let adv = Adversary::failure_free(3, 1, v(&[0, 0, 1]));
        for p in 1..=3 {
            let w0 = view(&adv, ProcessId(p), 0).unwrap();
            assert_eq!(knows_majority(&w0, Value(0)), Ok(false));
            assert_eq!(knows_majority(&w0, Value(1)), Ok(false));
            let w1 = view(&adv, ProcessId(p), 1).unwrap();
            assert_eq!(knows_majority(&w1, Value(0)), Ok(true));
        }
        let two = Adversary::failure_free(2, 1, v(&[1, 0]));
        let w0 = view(&two, ProcessId(1), 0).unwrap();
        assert_eq!(knows_majority(&w0, Value(1)), Ok(true));
    }

    #[test]
    fn majority_vote_breaks_ties_towards_one() {
        let adv = Adversary::new(3, 1, v(&[0, 1, 1]), vec![crash(3, 1, &[])]);
        let w = view(&adv, ProcessId(1), 1).unwrap();
        // Seen values {0,1}: not strictly more zeros.
        assert_eq!(maj_vals(&w), Ok(Value(1)));
        let zeros = Adversary::failure_free(3, 1, v(&[0, 0, 1]));
        let w = view(&zeros, ProcessId(1), 1).unwrap();
        assert_eq!(maj_vals(&w), Ok(Value(0)));
        let w0 = view(&zeros, ProcessId(3), 0).unwrap();
        assert_eq!(maj_vals(&w0), Ok(Value(1)));
    }

    #[test]
    fn non_binary_views_are_rejected_by_majority_ops() {
        let adv = Adversary::failure_free(3, 1, v(&[0, 2, 1]));
        let w = view(&adv, ProcessId(1), 1).unwrap();
        assert_eq!(
            knows_majority(&w, Value(0)),
            Err(KnowledgeError::NonBinaryTask)
        );
        assert_eq!(maj_vals(&w), Err(KnowledgeError::NonBinaryTask));
        assert_eq!(
            knows_majority(&w, Value(2)),
            Err(KnowledgeError::NonBinaryTask)
        );
    }
}

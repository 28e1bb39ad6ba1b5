//! The decision rules: deterministic maps from a view (plus the predecessor
//! view, where a rule needs one) to an optional decision value.
//!
//! Rules never inspect the adversary; they read a [`Frame`] of predicate
//! values computed from the view by [`crate::knowledge`]. The compact-wire
//! engine in [`crate::codec`] reconstructs the same frames from decoded
//! reports and feeds them through the same rule code, which is what makes
//! the two execution paths comparable decision-for-decision.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::knowledge::{prev_level_value_sets, Analysis};
use crate::model::{DecisionRule, ProcSet, Time, Value, ValueSet, View};

/// Which decision rule a [`ProtocolSpec`] selects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProtocolId {
    /// Decide 0 on seeing a 0, else 1 at time `t+1`.
    P0,
    /// Decide 0 on seeing a 0, else 1 once no hidden path remains.
    Opt0,
    /// Mirror image of `Opt0` with the roles of 0 and 1 swapped.
    Opt1,
    /// Decide 0 on seeing a 0, else the minimum seen value once no hidden
    /// path remains.
    OptMin,
    /// Decide on a known majority, else on the majority of seen values once
    /// no hidden path remains.
    OptMaj,
    /// k-set rule: decide the minimum once low or once the hidden capacity
    /// drops below `k`.
    OptMinK,
    /// Uniform variant of `P0`: 0 needs "some correct process knows 0".
    UP0,
    /// Uniform variant of `Opt0`.
    UOpt0,
    /// Uniform k-set rule.
    UProtMinK,
    /// Decide 1 after a round that discovered no new failure; the classical
    /// early-deciding rule this library's hidden-path rules improve on.
    P0OptHmw,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 10] = [
        ProtocolId::P0,
        ProtocolId::Opt0,
        ProtocolId::Opt1,
        ProtocolId::OptMin,
        ProtocolId::OptMaj,
        ProtocolId::OptMinK,
        ProtocolId::UP0,
        ProtocolId::UOpt0,
        ProtocolId::UProtMinK,
        ProtocolId::P0OptHmw,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolId::P0 => "p0",
            ProtocolId::Opt0 => "opt0",
            ProtocolId::Opt1 => "opt1",
            ProtocolId::OptMin => "opt-min",
            ProtocolId::OptMaj => "opt-maj",
            ProtocolId::OptMinK => "opt-min-k",
            ProtocolId::UP0 => "u-p0",
            ProtocolId::UOpt0 => "u-opt0",
            ProtocolId::UProtMinK => "u-prot-min-k",
            ProtocolId::P0OptHmw => "p0opt-hmw",
        }
    }

    pub fn parse(s: &str) -> Option<ProtocolId> {
        Self::ALL.into_iter().find(|id| id.as_str() == s)
    }

    /// Rules stated only for binary initial values.
    pub fn requires_binary(self) -> bool {
        !matches!(
            self,
            ProtocolId::OptMin | ProtocolId::OptMinK | ProtocolId::UProtMinK
        )
    }

    pub fn uses_k(self) -> bool {
        matches!(self, ProtocolId::OptMinK | ProtocolId::UProtMinK)
    }

    fn uses_witnesses(self) -> bool {
        matches!(
            self,
            ProtocolId::UP0 | ProtocolId::UOpt0 | ProtocolId::UProtMinK
        )
    }
}

impl std::fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("unknown protocol id {0:?}")]
    UnknownId(String),
    #[error("{id} requires the binary value set, got max value {max}")]
    NonBinaryTask { id: ProtocolId, max: Value },
    #[error("k={k} must satisfy 1 <= k <= max value {max}")]
    BadK { k: u8, max: Value },
    #[error("n={n}, t={t} violate 2 <= n and t <= n-1")]
    BadDimensions { n: u8, t: u8 },
}

/// A protocol identifier plus every parameter its rule reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub id: ProtocolId,
    pub n: u8,
    pub t: u8,
    /// Largest value of the configured value set `{0..=max_value}`.
    pub max_value: Value,
    pub k: u8,
}

impl ProtocolSpec {
    pub fn new(
        id: ProtocolId,
        n: u8,
        t: u8,
        max_value: Value,
        k: u8,
    ) -> Result<Self, ProtocolError> {
        if n < 2 || t > n - 1 {
            return Err(ProtocolError::BadDimensions { n, t });
        }
        if id.requires_binary() && max_value != Value(1) {
            return Err(ProtocolError::NonBinaryTask { id, max: max_value });
        }
        if k == 0 || (id.uses_k() && k > max_value.0) {
            return Err(ProtocolError::BadK { k, max: max_value });
        }
        Ok(ProtocolSpec {
            id,
            n,
            t,
            max_value,
            k,
        })
    }
}

/// Everything a rule may read at one process-time node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub time: Time,
    pub vals: ValueSet,
    /// Distinct processes whose initial value is known to be 0 / 1.
    pub zeros: u32,
    pub ones: u32,
    pub capacity: u32,
    pub knownf: u32,
    pub proven_crashed: ProcSet,
    /// Per visible value: how many distinct processes provably knew it one
    /// step earlier (owner included). Filled only for the uniform rules.
    pub witnesses: SmallVec<[(Value, u32); 4]>,
    pub prev: Option<PrevFrame>,
}

/// The slice of the predecessor node's frame that rules consult.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrevFrame {
    pub vals: ValueSet,
    pub capacity: u32,
    pub proven_crashed: ProcSet,
}

impl Frame {
    pub fn hidden_path(&self) -> bool {
        self.capacity >= 1
    }

    fn witness_count(&self, v: Value) -> u32 {
        self.witnesses
            .iter()
            .find(|(w, _)| *w == v)
            .map_or(0, |(_, c)| *c)
    }

    /// The "some correct process knows v exists" test.
    pub(crate) fn knows_exists_correct(&self, v: Value, t: u8) -> bool {
        if !self.vals.contains(v) {
            return false;
        }
        let clause_a = self.prev.is_some_and(|p| p.vals.contains(v));
        let clause_b = self.witness_count(v) >= u32::from(t).saturating_sub(self.knownf);
        clause_a || clause_b
    }

    pub(crate) fn from_views(spec: &ProtocolSpec, now: &View, prev: Option<&View>) -> Frame {
        let a = Analysis::of(now);
        let witnesses = if spec.id.uses_witnesses() {
            let sets = prev_level_value_sets(now);
            a.vals
                .iter()
                .map(|v| {
                    (
                        v,
                        sets.iter().filter(|(_, vs)| vs.contains(v)).count() as u32,
                    )
                })
                .collect()
        } else {
            SmallVec::new()
        };
        let prev = prev.map(|p| {
            let pa = Analysis::of(p);
            PrevFrame {
                vals: pa.vals,
                capacity: pa.capacity(),
                proven_crashed: pa.proven_crashed(),
            }
        });
        Frame {
            time: now.time(),
            vals: a.vals,
            zeros: a.zeros,
            ones: a.ones,
            capacity: a.capacity(),
            knownf: a.knownf,
            proven_crashed: a.proven_crashed(),
            witnesses,
            prev,
        }
    }
}

/// Evaluates the rule selected by `spec` on a frame. Clause order matches
/// each rule's guarded-command form; the first hit wins.
pub(crate) fn apply_rule(spec: &ProtocolSpec, f: &Frame) -> Option<Value> {
    let deadline = Time::from(spec.t) + 1;
    let zero = Value(0);
    let one = Value(1);
    match spec.id {
        ProtocolId::P0 => {
            if f.vals.contains(zero) {
                Some(zero)
            } else if f.time == deadline {
                Some(one)
            } else {
                None
            }
        }
        ProtocolId::Opt0 => {
            if f.vals.contains(zero) {
                Some(zero)
            } else if !f.hidden_path() {
                Some(one)
            } else {
                None
            }
        }
        ProtocolId::Opt1 => {
            if f.vals.contains(one) {
                Some(one)
            } else if !f.hidden_path() {
                Some(zero)
            } else {
                None
            }
        }
        ProtocolId::OptMin => {
            if f.vals.contains(zero) {
                Some(zero)
            } else if !f.hidden_path() {
                f.vals.min()
            } else {
                None
            }
        }
        ProtocolId::OptMaj => {
            let n = u32::from(spec.n);
            if 2 * f.zeros > n {
                Some(zero)
            } else if 2 * f.ones >= n {
                Some(one)
            } else if !f.hidden_path() {
                Some(if f.zeros > f.ones { zero } else { one })
            } else {
                None
            }
        }
        ProtocolId::OptMinK => {
            if !f.vals.lows(spec.k).is_empty() || f.capacity < u32::from(spec.k) {
                f.vals.min()
            } else {
                None
            }
        }
        ProtocolId::UP0 => {
            if f.knows_exists_correct(zero, spec.t) {
                Some(zero)
            } else if f.time == deadline {
                Some(one)
            } else {
                None
            }
        }
        ProtocolId::UOpt0 => {
            if f.knows_exists_correct(zero, spec.t) {
                Some(zero)
            } else if !f.hidden_path() && !f.vals.contains(zero) {
                Some(one)
            } else {
                None
            }
        }
        ProtocolId::UProtMinK => {
            let k = u32::from(spec.k);
            let low_or_thin = !f.vals.lows(spec.k).is_empty() || f.capacity < k;
            let min_now = f.vals.min().expect("own value is always visible");
            if low_or_thin && f.knows_exists_correct(min_now, spec.t) {
                Some(min_now)
            } else if f.time > 0 {
                let p = f.prev.expect("time > 0 has a predecessor frame");
                if !p.vals.lows(spec.k).is_empty() || p.capacity < k {
                    p.vals.min()
                } else if f.time == Time::from(spec.t / spec.k) + 1 {
                    Some(min_now)
                } else {
                    None
                }
            } else if f.time == Time::from(spec.t / spec.k) + 1 {
                Some(min_now)
            } else {
                None
            }
        }
        ProtocolId::P0OptHmw => {
            if f.vals.contains(zero) {
                Some(zero)
            } else if f.time >= 1 {
                let p = f.prev.expect("time >= 1 has a predecessor frame");
                if f.proven_crashed == p.proven_crashed {
                    Some(one)
                } else {
                    None
                }
            } else {
                None
            }
        }
    }
}

impl DecisionRule for ProtocolSpec {
    fn decide(&self, now: &View, prev: Option<&View>) -> Option<Value> {
        apply_rule(self, &Frame::from_views(self, now, prev))
    }
}

/// One rule evaluation, bundled: the current view, the same process's view
/// one step earlier when it exists, and the protocol parameters.
#[derive(Clone, Copy)]
pub struct DecisionRuleInput<'a> {
    pub view_now: &'a View,
    pub view_prev: Option<&'a View>,
    pub spec: &'a ProtocolSpec,
}

/// Evaluates the selected rule on one node.
pub fn decide(input: DecisionRuleInput<'_>) -> Option<Value> {
    input.spec.decide(input.view_now, input.view_prev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{simulate, view, Adversary, Crash, Decision, ProcessId};

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

    fn spec(id: ProtocolId, n: u8, t: u8) -> ProtocolSpec {
        ProtocolSpec::new(id, n, t, Value(1), 1).unwrap()
    }

    fn decide_at(s: &ProtocolSpec, adv: &Adversary, p: u8, m: Time) -> Option<Value> {
        let now = view(adv, ProcessId(p), m).unwrap();
        let prev = if m > 0 {
            Some(view(adv, ProcessId(p), m - 1).unwrap())
        } else {
            None
        };
        s.decide(&now, prev.as_ref())
    }

    #[test]
    fn p0_rule_clauses() {
        let s = spec(ProtocolId::P0, 3, 1);
        let zero_holder = Adversary::failure_free(3, 1, v(&[0, 1, 1]));
        assert_eq!(decide_at(&s, &zero_holder, 1, 0), Some(Value(0)));
        let ones = Adversary::failure_free(3, 1, v(&[1, 1, 1]));
        assert_eq!(decide_at(&s, &ones, 1, 1), None);
        assert_eq!(decide_at(&s, &ones, 1, 2), Some(Value(1)));
    }

    #[test]
    fn opt0_decides_once_no_hidden_path_remains() {
        let s = spec(ProtocolId::Opt0, 3, 1);
        let ones = Adversary::failure_free(3, 1, v(&[1, 1, 1]));
        assert_eq!(decide_at(&s, &ones, 1, 0), None);
        assert_eq!(decide_at(&s, &ones, 1, 1), Some(Value(1)));
    }

    #[test]
    fn new_failure_discovery_separates_opt0_from_the_stability_rule() {
        // All level-0 nodes become visible to 1 at time 2, yet a new failure
        // is discovered in each of the first two rounds: the hidden-path rule
        // decides at 2 while the no-new-failure rule stays undecided.
        let adv = Adversary::new(
            4,
            2,
            v(&[1, 1, 1, 1]),
            vec![crash(2, 1, &[3, 4]), crash(3, 2, &[])],
        );
        let opt0 = spec(ProtocolId::Opt0, 4, 2);
        let hmw = spec(ProtocolId::P0OptHmw, 4, 2);
        let w = view(&adv, ProcessId(1), 2).unwrap();
        for p in [2, 3, 4] {
            assert!(w.contains(crate::model::Node::new(ProcessId(p), 0)));
        }
        assert_eq!(decide_at(&opt0, &adv, 1, 2), Some(Value(1)));
        assert_eq!(decide_at(&hmw, &adv, 1, 2), None);
    }

    #[test]
    fn stability_rule_decides_without_new_discoveries() {
        let s = spec(ProtocolId::P0OptHmw, 3, 1);
        let ones = Adversary::failure_free(3, 1, v(&[1, 1, 1]));
        assert_eq!(decide_at(&s, &ones, 1, 0), None);
        assert_eq!(decide_at(&s, &ones, 1, 1), Some(Value(1)));
    }

    #[test]
    fn majority_rule_thresholds_and_time_zero() {
        let s = spec(ProtocolId::OptMaj, 3, 1);
        let adv = Adversary::failure_free(3, 1, v(&[0, 0, 1]));
        for p in 1..=3 {
            assert_eq!(decide_at(&s, &adv, p, 0), None);
            assert_eq!(decide_at(&s, &adv, p, 1), Some(Value(0)));
        }
        let two = spec(ProtocolId::OptMaj, 2, 1);
        let own_one = Adversary::failure_free(2, 1, v(&[1, 0]));
        assert_eq!(decide_at(&two, &own_one, 1, 0), Some(Value(1)));
    }

    #[test]
    fn min_k_rule_stays_high_while_capacity_holds() {
        let s = ProtocolSpec::new(ProtocolId::OptMinK, 4, 2, Value(2), 2).unwrap();
        let high = Adversary::failure_free(4, 2, v(&[2, 2, 2, 2]));
        // Capacity n-1 = 3 >= k at time 0.
        assert_eq!(decide_at(&s, &high, 1, 0), None);
        assert_eq!(decide_at(&s, &high, 1, 1), Some(Value(2)));
        let low = Adversary::failure_free(4, 2, v(&[1, 2, 2, 2]));
        assert_eq!(decide_at(&s, &low, 1, 0), Some(Value(1)));
    }

    #[test]
    fn uniform_rules_wait_at_time_zero() {
        for id in [ProtocolId::UP0, ProtocolId::UOpt0] {
            let s = spec(id, 3, 1);
            let adv = Adversary::failure_free(3, 1, v(&[0, 1, 1]));
            assert_eq!(decide_at(&s, &adv, 1, 0), None, "{id}");
        }
    }

    #[test]
    fn uniform_min_k_falls_back_to_the_round_deadline() {
        let s = ProtocolSpec::new(ProtocolId::UProtMinK, 4, 2, Value(2), 2).unwrap();
        let high = Adversary::failure_free(4, 2, v(&[2, 2, 2, 2]));
        // floor(t/k)+1 = 2.
        assert_eq!(decide_at(&s, &high, 1, 0), None);
        assert_eq!(decide_at(&s, &high, 1, 2), Some(Value(2)));
    }

    #[test]
    fn mirror_symmetry_between_opt0_and_opt1() {
        let s0 = spec(ProtocolId::Opt0, 3, 1);
        let s1 = spec(ProtocolId::Opt1, 3, 1);
        let adv = Adversary::new(3, 1, v(&[0, 1, 1]), vec![crash(2, 1, &[3])]);
        let flipped = Adversary::new(3, 1, v(&[1, 0, 0]), vec![crash(2, 1, &[3])]);
        let a = simulate(&s0, &adv, 2).unwrap();
        let b = simulate(&s1, &flipped, 2).unwrap();
        for p in (1..=3).map(ProcessId) {
            let da = a.decision_of(p);
            let db = b.decision_of(p);
            assert_eq!(da.map(|d| d.time), db.map(|d| d.time));
            assert_eq!(da.map(|d| Value(1 - d.value.0)), db.map(|d| d.value));
        }
    }

    #[test]
    fn p0_simulation_hits_the_deadline_exactly() {
        let s = spec(ProtocolId::P0, 3, 1);
        let ones = Adversary::failure_free(3, 1, v(&[1, 1, 1]));
        let sched = simulate(&s, &ones, 2).unwrap();
        for p in (1..=3).map(ProcessId) {
            assert_eq!(
                sched.decision_of(p),
                Some(Decision {
                    time: 2,
                    value: Value(1)
                })
            );
        }
    }

    #[test]
    fn bundled_rule_input_matches_the_trait_path() {
        let s = spec(ProtocolId::Opt0, 3, 1);
        let adv = Adversary::failure_free(3, 1, v(&[1, 1, 1]));
        let prev = view(&adv, ProcessId(1), 0).unwrap();
        let now = view(&adv, ProcessId(1), 1).unwrap();
        let input = DecisionRuleInput { view_now: &now, view_prev: Some(&prev), spec: &s };
        assert_eq!(decide(input), Some(Value(1)));
    }

    #[test]
    fn spec_construction_guards() {
        assert!(matches!(
            ProtocolSpec::new(ProtocolId::Opt0, 3, 1, Value(2), 1),
            Err(ProtocolError::NonBinaryTask { .. })
        ));
        assert!(matches!(
            ProtocolSpec::new(ProtocolId::OptMinK, 3, 1, Value(2), 3),
            Err(ProtocolError::BadK { .. })
        ));
        assert!(matches!(
            ProtocolSpec::new(ProtocolId::Opt0, 3, 3, Value(1), 1),
            Err(ProtocolError::BadDimensions { .. })
        ));
        assert_eq!(
            ProtocolId::parse("u-prot-min-k"),
            Some(ProtocolId::UProtMinK)
        );
        assert_eq!(ProtocolId::parse("nope"), None);
    }
}

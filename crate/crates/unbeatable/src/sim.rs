//! Task definitions, per-run verdicts, and exhaustive verification sweeps.
//!
//! A task is a set of run predicates (agreement family, decision, validity
//! family). [`check_run`] evaluates exactly the properties of one task
//! against one schedule; [`check_bounds`] checks the stopping-time guarantee
//! attached to a protocol. The sweep helpers run both over a whole
//! enumeration domain in parallel, with canonical aggregation so reports are
//! byte-stable.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{simulate, Adversary, DecisionSchedule, ProcessId, Time, Value, ValueSet};
use crate::oracle::Domain;
use crate::protocols::{ProtocolId, ProtocolSpec};
use crate::search::{enumerate_patterns, value_vectors};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("k={k} must be >= 1")]
    BadK { k: u8 },
    #[error("k-set tasks need at least k+1 values, got max value {max} with k={k}")]
    ValueSetTooSmall { k: u8, max: Value },
    #[error("{kind:?} is defined for the binary value set only, got max value {max}")]
    NonBinaryTask { kind: TaskKind, max: Value },
}

/// Which agreement problem is being verified.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    Consensus,
    MajorityConsensus,
    KSet,
    UniformConsensus,
    UniformKSet,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [
        TaskKind::Consensus,
        TaskKind::MajorityConsensus,
        TaskKind::KSet,
        TaskKind::UniformConsensus,
        TaskKind::UniformKSet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Consensus => "consensus",
            TaskKind::MajorityConsensus => "majority-consensus",
            TaskKind::KSet => "k-set",
            TaskKind::UniformConsensus => "uniform-consensus",
            TaskKind::UniformKSet => "uniform-k-set",
        }
    }

    pub fn parse(s: &str) -> Option<TaskKind> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Whether the agreement obligation extends to processes that crash.
    pub fn uniform(self) -> bool {
        matches!(self, TaskKind::UniformConsensus | TaskKind::UniformKSet)
    }
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A task kind plus its parameters (`k` is 1 for the non-set tasks).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub k: u8,
    pub max_value: Value,
}

impl TaskSpec {
    pub fn new(kind: TaskKind, k: u8, max_value: Value) -> Result<Self, SimError> {
        if k == 0 {
            return Err(SimError::BadK { k });
        }
        match kind {
            TaskKind::KSet | TaskKind::UniformKSet => {
                if max_value.0 < k {
                    return Err(SimError::ValueSetTooSmall { k, max: max_value });
                }
            }
            TaskKind::Consensus | TaskKind::UniformConsensus | TaskKind::MajorityConsensus => {
                if max_value != Value(1) {
                    return Err(SimError::NonBinaryTask {
                        kind,
                        max: max_value,
                    });
                }
            }
        }
        Ok(TaskSpec { kind, k, max_value })
    }

    /// The number of distinct values the agreement clause tolerates.
    fn agreement_width(&self) -> usize {
        match self.kind {
            TaskKind::KSet | TaskKind::UniformKSet => self.k as usize,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Property {
    Decision,
    Agreement,
    KAgreement,
    UniformAgreement,
    UniformKAgreement,
    Validity,
    MajorityValidity,
}

/// A failed property with the processes, values and times that witness it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyFailure {
    pub property: Property,
    pub processes: Vec<ProcessId>,
    pub values: Vec<Value>,
    pub times: Vec<Time>,
}

/// Per-property outcome of one run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunVerdict {
    pub decision: bool,
    pub agreement: bool,
    pub validity: bool,
    pub failures: Vec<PropertyFailure>,
}

impl RunVerdict {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Evaluates exactly the properties of `task` on one finished run. Correct
/// processes are those the adversary never crashes.
pub fn check_run(task: &TaskSpec, adv: &Adversary, sched: &DecisionSchedule) -> RunVerdict {
    let mut failures = Vec::new();

    // Decision: every correct process must decide.
    let undecided: Vec<ProcessId> = adv
        .process_ids()
        .filter(|p| adv.is_correct(*p) && sched.decision_of(*p).is_none())
        .collect();
    let decision = undecided.is_empty();
    if !decision {
        failures.push(PropertyFailure {
            property: Property::Decision,
            processes: undecided,
            values: vec![],
            times: vec![],
        });
    }

    // Agreement family: the relevant decider set depends on uniformity.
    let deciders: Vec<(ProcessId, Time, Value)> = adv
        .process_ids()
        .filter(|p| task.kind.uniform() || adv.is_correct(*p))
        .filter_map(|p| sched.decision_of(p).map(|d| (p, d.time, d.value)))
        .collect();
    let mut decided_values = ValueSet::EMPTY;
    for (_, _, v) in &deciders {
        decided_values.insert(*v);
    }
    let agreement = decided_values.len() <= task.agreement_width();
    if !agreement {
        failures.push(PropertyFailure {
            property: match task.kind {
                TaskKind::Consensus | TaskKind::MajorityConsensus => Property::Agreement,
                TaskKind::KSet => Property::KAgreement,
                TaskKind::UniformConsensus => Property::UniformAgreement,
                TaskKind::UniformKSet => Property::UniformKAgreement,
            },
            processes: deciders.iter().map(|(p, _, _)| *p).collect(),
            values: deciders.iter().map(|(_, _, v)| *v).collect(),
            times: deciders.iter().map(|(_, t, _)| *t).collect(),
        });
    }

    // Validity: any decision (by anyone) must be on a present initial value.
    let mut validity = true;
    for p in adv.process_ids() {
        if let Some(d) = sched.decision_of(p) {
            if !adv.values.contains(&d.value) {
                validity = false;
                failures.push(PropertyFailure {
                    property: Property::Validity,
                    processes: vec![p],
                    values: vec![d.value],
                    times: vec![d.time],
                });
            }
        }
    }

    // Majority validity: a value held by a correct strict majority must be
    // the decision of everyone who decides.
    if task.kind == TaskKind::MajorityConsensus {
        if let Some(maj) = correct_majority_value(adv) {
            let offenders: Vec<(ProcessId, Time, Value)> = adv
                .process_ids()
                .filter_map(|p| sched.decision_of(p).map(|d| (p, d.time, d.value)))
                .filter(|(_, _, v)| *v != maj)
                .collect();
            if !offenders.is_empty() {
                validity = false;
                failures.push(PropertyFailure {
                    property: Property::MajorityValidity,
                    processes: offenders.iter().map(|(p, _, _)| *p).collect(),
                    values: offenders.iter().map(|(_, _, v)| *v).collect(),
                    times: offenders.iter().map(|(_, t, _)| *t).collect(),
                });
            }
        }
    }

    RunVerdict {
        decision,
        agreement,
        validity,
        failures,
    }
}

/// The binary value held by strictly more than half of the correct
/// processes, if any.
pub(crate) fn correct_majority_value(adv: &Adversary) -> Option<Value> {
    let n = u32::from(adv.n);
    for v in [Value(0), Value(1)] {
        let count = adv
            .process_ids()
            .filter(|p| adv.is_correct(*p) && adv.value_of(*p) == v)
            .count() as u32;
        if 2 * count > n {
            return Some(v);
        }
    }
    None
}

/// The stopping-time guarantee attached to a protocol, as a function of the
/// run's failure count `f`. `None` means only the generic `t+1` ceiling is
/// asserted.
pub fn decision_time_bound(spec: &ProtocolSpec, f: usize) -> Time {
    let t = usize::from(spec.t);
    let k = usize::from(spec.k);
    let bound = match spec.id {
        ProtocolId::OptMinK => f / k + 1,
        ProtocolId::UOpt0 => {
            if f + 1 >= t {
                f + 1
            } else {
                f + 2
            }
        }
        ProtocolId::UProtMinK => {
            if f + 1 == t && f.is_multiple_of(k) {
                f / k + 1
            } else {
                (t / k + 1).min(f / k + 2)
            }
        }
        // Every other rule only promises the generic ceiling.
        _ => t + 1,
    };
    bound as Time
}

/// True iff every decision in the schedule respects the protocol's
/// stopping-time bound for this adversary's failure count.
pub fn check_bounds(
    _task: &TaskSpec,
    spec: &ProtocolSpec,
    adv: &Adversary,
    sched: &DecisionSchedule,
) -> bool {
    let bound = decision_time_bound(spec, adv.num_failures());
    sched.decisions.values().all(|d| d.time <= bound)
}

/// A property or bound violation found by a sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepFailure {
    pub adversary: Adversary,
    pub verdict: Option<RunVerdict>,
    pub bound_violation: bool,
}

/// Aggregated outcome of an exhaustive verification sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub adversaries: u64,
    pub property_failures: u64,
    pub bound_failures: u64,
    /// A capped list of concrete counterexamples, in enumeration order.
    pub failures: Vec<SweepFailure>,
    /// Largest observed decision time per failure count.
    pub max_decision_time_by_f: BTreeMap<usize, Time>,
}

impl SweepOutcome {
    pub fn pass(&self) -> bool {
        self.property_failures == 0 && self.bound_failures == 0
    }
}

const FAILURE_CAP: usize = 16;

/// Runs `spec` against every adversary of `dom`, checking `task` properties
/// and (when `bounds` is set) the protocol's stopping bound.
pub fn verify_protocol(
    dom: &Domain,
    spec: &ProtocolSpec,
    task: &TaskSpec,
    bounds: bool,
) -> SweepOutcome {
    let patterns = enumerate_patterns(dom);
    let horizon = dom.horizon;
    let per_pattern: Vec<SweepOutcome> = patterns
        .par_iter()
        .map(|pattern| {
            let mut out = SweepOutcome {
                adversaries: 0,
                property_failures: 0,
                bound_failures: 0,
                failures: Vec::new(),
                max_decision_time_by_f: BTreeMap::new(),
            };
            let f = pattern.num_failures();
            for values in value_vectors(dom) {
                let adv = Adversary {
                    n: dom.n,
                    values,
                    pattern: pattern.clone(),
                };
                let sched = simulate(spec, &adv, horizon).expect("valid horizon");
                out.adversaries += 1;
                if let Some(t) = sched.last_decision_time() {
                    let e = out.max_decision_time_by_f.entry(f).or_insert(t);
                    *e = (*e).max(t);
                }
                let verdict = check_run(task, &adv, &sched);
                let bound_ok = !bounds || check_bounds(task, spec, &adv, &sched);
                if !verdict.pass() || !bound_ok {
                    out.property_failures += u64::from(!verdict.pass());
                    out.bound_failures += u64::from(!bound_ok);
                    if out.failures.len() < FAILURE_CAP {
                        out.failures.push(SweepFailure {
                            adversary: adv,
                            verdict: (!verdict.pass()).then_some(verdict),
                            bound_violation: !bound_ok,
                        });
                    }
                }
            }
            out
        })
        .collect();

    let mut merged = SweepOutcome {
        adversaries: 0,
        property_failures: 0,
        bound_failures: 0,
        failures: Vec::new(),
        max_decision_time_by_f: BTreeMap::new(),
    };
    for o in per_pattern {
        merged.adversaries += o.adversaries;
        merged.property_failures += o.property_failures;
        merged.bound_failures += o.bound_failures;
        for (f, t) in o.max_decision_time_by_f {
            let e = merged.max_decision_time_by_f.entry(f).or_insert(t);
            *e = (*e).max(t);
        }
        if merged.failures.len() < FAILURE_CAP {
            merged.failures.extend(o.failures);
            merged.failures.truncate(FAILURE_CAP);
        }
    }
    merged
}

/// First adversary on which two protocols produce different schedules, if
/// any. Used to certify protocol coincidences exhaustively.
pub fn first_schedule_difference(
    dom: &Domain,
    a: &ProtocolSpec,
    b: &ProtocolSpec,
) -> Option<Adversary> {
    let patterns = enumerate_patterns(dom);
    let horizon = dom.horizon;
    let hits: Vec<Option<Adversary>> = patterns
        .par_iter()
        .map(|pattern| {
            for values in value_vectors(dom) {
                let adv = Adversary {
                    n: dom.n,
                    values,
                    pattern: pattern.clone(),
                };
                let sa = simulate(a, &adv, horizon).expect("valid horizon");
                let sb = simulate(b, &adv, horizon).expect("valid horizon");
                if sa != sb {
                    return Some(adv);
                }
            }
            None
        })
        .collect();
    hits.into_iter().flatten().next()
}

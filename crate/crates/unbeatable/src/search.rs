//! Adversary-space enumeration, protocol-versus-protocol domination
//! comparison, and a bounded brute-force search over all full-information
//! decision tables to certify unbeatability at tiny sizes.
//!
//! Full-information protocols differ only in the decisions taken at nodes,
//! so a protocol restricted to a finite domain is exactly a table from
//! reachable views to optional values. `beat_search` explores every table
//! that (a) solves the task on the whole domain and (b) decides no later
//! than the target anywhere, and asks whether one decides strictly earlier
//! somewhere. An exhausted search is a certificate that no such table
//! exists at this domain size.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::model::{
    simulate, Adversary, Crash, DecisionRule, FailurePattern, ProcSet, ProcessId, Time, Value,
    ValueSet, View,
};
use crate::oracle::Domain;
use crate::protocols::ProtocolSpec;
use crate::sim::{correct_majority_value, TaskKind, TaskSpec};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error("domain too large: {0}")]
    DomainTooLarge(String),
    #[error("search budget exhausted after {nodes} nodes")]
    BudgetExceeded { nodes: u64 },
}

/// Number of failure patterns in the domain (closed form).
pub fn pattern_count(dom: &Domain) -> u128 {
    let n = u128::from(dom.n);
    let opts = u128::from(dom.horizon + 1) * (1u128 << (dom.n - 1));
    let mut total = 0u128;
    for s in 0..=u128::from(dom.t) {
        let mut choose = 1u128;
        for i in 0..s {
            choose = choose * (n - i) / (i + 1);
        }
        total += choose * opts.pow(s as u32);
    }
    total
}

/// Number of adversaries in the domain (closed form).
pub fn adversary_count(dom: &Domain) -> u128 {
    pattern_count(dom) * u128::from(dom.value_count()).pow(u32::from(dom.n))
}

/// Every failure pattern of the domain, in a fixed order: faulty sets by
/// ascending bitmask, then per-process crash options (round-major, delivery
/// mask ascending) with the highest faulty process cycling fastest.
pub fn enumerate_patterns(dom: &Domain) -> Vec<FailurePattern> {
    let n = usize::from(dom.n);
    let max_round = dom.horizon + 1;
    let deliver_opts = 1u64 << (n - 1);
    let opts = u64::from(max_round) * deliver_opts;
    let mut out = Vec::new();
    for mask in 0u64..(1 << n) {
        if mask.count_ones() > u32::from(dom.t) {
            continue;
        }
        let faulty: Vec<ProcessId> = (0..n)
            .filter(|ix| mask & (1 << ix) != 0)
            .map(ProcessId::from_index)
            .collect();
        if faulty.is_empty() {
            out.push(FailurePattern::failure_free(dom.t));
            continue;
        }
        let mut odometer = vec![0u64; faulty.len()];
        loop {
            let crashes: Vec<Crash> = faulty
                .iter()
                .zip(&odometer)
                .map(|(p, o)| Crash {
                    process: *p,
                    round: (o / deliver_opts) as Time + 1,
                    delivers_to: expand_delivery_mask(o % deliver_opts, *p, dom.n),
                })
                .collect();
            out.push(FailurePattern::new(dom.t, crashes));
            let mut pos = faulty.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                odometer[pos] += 1;
                if odometer[pos] < opts {
                    break;
                }
                odometer[pos] = 0;
            }
            if odometer.iter().all(|o| *o == 0) {
                break;
            }
        }
    }
    out
}

/// Maps a delivery mask over the `n-1` other processes (ascending id order)
/// to a process set.
fn expand_delivery_mask(mask: u64, skip: ProcessId, n: u8) -> ProcSet {
    let mut set = ProcSet::EMPTY;
    let mut bit = 0;
    for p in (1..=n).map(ProcessId) {
        if p == skip {
            continue;
        }
        if mask & (1 << bit) != 0 {
            set.insert(p);
        }
        bit += 1;
    }
    set
}

/// Every value vector of the domain; process 1 cycles fastest.
pub fn value_vectors(dom: &Domain) -> impl Iterator<Item = SmallVec<[Value; 8]>> + '_ {
    let vc = dom.value_count();
    let total = vc.pow(u32::from(dom.n));
    (0..total).map(move |ix| {
        let mut rest = ix;
        (0..dom.n)
            .map(|_| {
                let v = Value((rest % vc) as u8);
                rest /= vc;
                v
            })
            .collect()
    })
}

/// Deterministic stream of every adversary in the domain, pattern-major.
pub fn enumerate_adversaries(dom: &Domain) -> impl Iterator<Item = Adversary> + '_ {
    enumerate_patterns(dom)
        .into_iter()
        .flat_map(move |pattern| {
            value_vectors(dom)
                .map(move |values| Adversary {
                    n: dom.n,
                    values,
                    pattern: pattern.clone(),
                })
                .collect::<Vec<_>>()
        })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DominationRelation {
    /// `a` decides at least as early as `b` everywhere (possibly equal).
    Dominates,
    /// `a` dominates and is strictly earlier somewhere.
    StrictlyDominates,
    /// `b` strictly dominates `a`.
    Dominated,
    Incomparable,
}

/// One observed decision-time difference.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DominationWitness {
    pub adversary: Adversary,
    pub process: ProcessId,
    pub time_a: Option<Time>,
    pub time_b: Option<Time>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DominationReport {
    pub relation: DominationRelation,
    pub adversaries: u64,
    /// Capped, in enumeration order: where `a` beats `b` for the strict and
    /// incomparable relations, plus where `b` beats `a` when incomparable.
    pub witnesses: Vec<DominationWitness>,
}

const WITNESS_CAP: usize = 8;

/// Per-process decision-time comparison over the whole domain.
pub fn compare(a: &ProtocolSpec, b: &ProtocolSpec, dom: &Domain) -> DominationReport {
    compare_with(a, b, dom, |sa, sb, adv, out_a, out_b| {
        for i in adv.process_ids() {
            let ta = sa.decision_of(i).map(|d| d.time);
            let tb = sb.decision_of(i).map(|d| d.time);
            match (ta, tb) {
                (Some(x), Some(y)) if x < y => out_a.push((i, ta, tb)),
                (Some(x), Some(y)) if y < x => out_b.push((i, ta, tb)),
                (Some(_), None) => out_a.push((i, ta, tb)),
                (None, Some(_)) => out_b.push((i, ta, tb)),
                _ => {}
            }
        }
    })
}

/// Compares the latest decision time per adversary instead of per-process
/// times.
pub fn compare_last_decider(a: &ProtocolSpec, b: &ProtocolSpec, dom: &Domain) -> DominationReport {
    compare_with(a, b, dom, |sa, sb, _adv, out_a, out_b| {
        let ma = sa.last_decision_time();
        let mb = sb.last_decision_time();
        if let (Some(x), Some(y)) = (ma, mb) {
            if x < y {
                let p = last_decider(sb);
                out_a.push((p, ma, mb));
            } else if y < x {
                let p = last_decider(sa);
                out_b.push((p, ma, mb));
            }
        }
    })
}

fn last_decider(s: &crate::model::DecisionSchedule) -> ProcessId {
    let t = s.last_decision_time().expect("nonempty");
    s.decisions
        .iter()
        .find(|(_, d)| d.time == t)
        .map(|(p, _)| *p)
        .expect("nonempty schedule")
}

type Diff = (ProcessId, Option<Time>, Option<Time>);

fn compare_with<F>(a: &ProtocolSpec, b: &ProtocolSpec, dom: &Domain, diff: F) -> DominationReport
where
    F: Fn(
            &crate::model::DecisionSchedule,
            &crate::model::DecisionSchedule,
            &Adversary,
            &mut Vec<Diff>,
            &mut Vec<Diff>,
        ) + Sync,
{
    let patterns = enumerate_patterns(dom);
    let horizon = dom.horizon;
    struct Chunk {
        count: u64,
        a_better: Vec<DominationWitness>,
        b_better: Vec<DominationWitness>,
    }
    let chunks: Vec<Chunk> = patterns
        .par_iter()
        .map(|pattern| {
            let mut chunk = Chunk {
                count: 0,
                a_better: vec![],
                b_better: vec![],
            };
            for values in value_vectors(dom) {
                let adv = Adversary {
                    n: dom.n,
                    values,
                    pattern: pattern.clone(),
                };
                let sa = simulate(a, &adv, horizon).expect("valid horizon");
                let sb = simulate(b, &adv, horizon).expect("valid horizon");
                chunk.count += 1;
                let (mut da, mut db) = (Vec::new(), Vec::new());
                diff(&sa, &sb, &adv, &mut da, &mut db);
                for (list, out) in [(da, &mut chunk.a_better), (db, &mut chunk.b_better)] {
                    for (process, time_a, time_b) in list {
                        if out.len() < WITNESS_CAP {
                            out.push(DominationWitness {
                                adversary: adv.clone(),
                                process,
                                time_a,
                                time_b,
                            });
                        }
                    }
                }
            }
            chunk
        })
        .collect();

    let mut count = 0;
    let (mut a_better, mut b_better) = (Vec::new(), Vec::new());
    for c in chunks {
        count += c.count;
        for (src, dst) in [(c.a_better, &mut a_better), (c.b_better, &mut b_better)] {
            for w in src {
                if dst.len() < WITNESS_CAP {
                    dst.push(w);
                }
            }
        }
    }
    let a_holds = b_better.is_empty();
    let b_holds = a_better.is_empty();
    let (relation, witnesses) = match (a_holds, b_holds) {
        (true, true) => (DominationRelation::Dominates, vec![]),
        (true, false) => (DominationRelation::StrictlyDominates, a_better),
        (false, true) => (DominationRelation::Dominated, b_better),
        (false, false) => {
            let mut mixed = a_better;
            mixed.extend(b_better);
            mixed.truncate(WITNESS_CAP);
            (DominationRelation::Incomparable, mixed)
        }
    };
    DominationReport {
        relation,
        adversaries: count,
        witnesses,
    }
}

/// A full-information protocol given extensionally: a decision per reachable
/// view class. Views not in the table decide nothing.
#[derive(Clone, Debug)]
pub struct ProtocolTable {
    entries: Vec<(View, Option<Value>)>,
    index: HashMap<View, u32>,
}

impl ProtocolTable {
    fn new(entries: Vec<(View, Option<Value>)>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(ix, (v, _))| (v.clone(), ix as u32))
            .collect();
        ProtocolTable { entries, index }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(View, Option<Value>)] {
        &self.entries
    }

    pub fn lookup(&self, view: &View) -> Option<Value> {
        self.index
            .get(view)
            .and_then(|ix| self.entries[*ix as usize].1)
    }
}

impl DecisionRule for ProtocolTable {
    fn decide(&self, now: &View, _prev: Option<&View>) -> Option<Value> {
        self.lookup(now)
    }
}

/// Which notion of "no later than the target" the search enforces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchMode {
    PerProcess,
    LastDecider,
}

impl SearchMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SearchMode::PerProcess => "per-process",
            SearchMode::LastDecider => "last-decider",
        }
    }

    pub fn parse(s: &str) -> Option<SearchMode> {
        match s {
            "per-process" => Some(SearchMode::PerProcess),
            "last-decider" => Some(SearchMode::LastDecider),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub enum BeatOutcome {
    /// A table that solves the task, never decides later than the target,
    /// and is strictly earlier at the listed places.
    Witness {
        table: ProtocolTable,
        improvements: Vec<DominationWitness>,
    },
    /// The whole table space was exhausted without finding a witness.
    Certificate,
}

#[derive(Debug)]
pub struct BeatSearchReport {
    pub outcome: BeatOutcome,
    pub nodes: u64,
    pub classes: usize,
    pub adversaries: u64,
    /// A few complete non-improving tables encountered during the sweep,
    /// kept for consistency audits.
    pub sampled_tables: Vec<ProtocolTable>,
}

struct Run {
    adv: u32,
    process: ProcessId,
    correct: bool,
    /// Class at each time the process is active.
    classes: SmallVec<[u32; 8]>,
    /// Target's decision time for this process, if it decides.
    target_time: Option<Time>,
    /// The table must decide this run by this time.
    deadline: Option<Time>,
    /// The table must not decide this run after this time.
    cap: Option<Time>,
}

struct SearchProblem {
    adversaries: Vec<Adversary>,
    class_views: Vec<View>,
    class_time: Vec<Time>,
    allowed: Vec<Vec<Value>>,
    occurrences: Vec<Vec<u32>>,
    runs: Vec<Run>,
    /// Per adversary: the target's last decision time.
    target_last: Vec<Option<Time>>,
    maj_value: Vec<Option<Value>>,
    task: TaskSpec,
    mode: SearchMode,
    budget: u64,
}

struct SearchState {
    assign: Vec<i16>, // -2 unassigned, -1 none, v >= 0 decided value
    decided: Vec<Option<(Time, Value)>>,
    correct_vals: Vec<ValueSet>,
    all_vals: Vec<ValueSet>,
    nodes: u64,
    sampled: Vec<ProtocolTable>,
}

enum Stop {
    Found(Box<(ProtocolTable, Vec<DominationWitness>)>),
    Budget(u64),
}

const UNASSIGNED: i16 = -2;
const DECIDE_NONE: i16 = -1;

/// Exhaustive branch-and-bound over decision tables that dominate `target`.
///
/// Returns a witness table if the target is beatable at this size, or a
/// full-space certificate. Guarded to tiny domains; the node `budget` bounds
/// the search unconditionally and exhaustion is reported as an error, never
/// as a certificate.
pub fn beat_search(
    target: &ProtocolSpec,
    task: &TaskSpec,
    dom: &Domain,
    mode: SearchMode,
    budget: u64,
) -> Result<BeatSearchReport, SearchError> {
    if dom.n > 3 || dom.horizon > 3 || dom.max_value.0 > 2 {
        return Err(SearchError::DomainTooLarge(format!(
            "table search is guarded to n <= 3, horizon <= 3, values <= 3; got n={} horizon={} values={}",
            dom.n,
            dom.horizon,
            dom.value_count()
        )));
    }

    // Enumerate adversaries, simulate the target, and intern view classes.
    let mut adversaries = Vec::new();
    for pattern in enumerate_patterns(dom) {
        for values in value_vectors(dom) {
            adversaries.push(Adversary {
                n: dom.n,
                values,
                pattern: pattern.clone(),
            });
        }
    }
    let mut class_ids: HashMap<View, u32> = HashMap::new();
    let mut class_views: Vec<View> = Vec::new();
    let mut runs: Vec<Run> = Vec::new();
    let mut target_last: Vec<Option<Time>> = Vec::new();
    let mut maj_value: Vec<Option<Value>> = Vec::new();
    for (aix, adv) in adversaries.iter().enumerate() {
        let sched = simulate(target, adv, dom.horizon).expect("valid horizon");
        let last = sched.last_decision_time();
        target_last.push(last);
        maj_value.push(
            (task.kind == TaskKind::MajorityConsensus)
                .then(|| correct_majority_value(adv))
                .flatten(),
        );
        let mut ladder = crate::model::ViewLadder::start(adv);
        let mut run_classes: Vec<SmallVec<[u32; 8]>> = vec![SmallVec::new(); usize::from(adv.n)];
        for m in 0..=dom.horizon {
            if m > 0 {
                ladder.step(adv);
            }
            for p in adv.process_ids() {
                let Some(v) = &ladder.now[p.index()] else {
                    continue;
                };
                let next_id = class_views.len() as u32;
                let id = *class_ids.entry(v.clone()).or_insert_with(|| {
                    class_views.push(v.clone());
                    next_id
                });
                run_classes[p.index()].push(id);
            }
        }
        for p in adv.process_ids() {
            let correct = adv.is_correct(p);
            let target_time = sched.decision_of(p).map(|d| d.time);
            let (deadline, cap) = match mode {
                SearchMode::PerProcess => (target_time, None),
                SearchMode::LastDecider => ((correct).then_some(last).flatten(), last),
            };
            runs.push(Run {
                adv: aix as u32,
                process: p,
                correct,
                classes: std::mem::take(&mut run_classes[p.index()]),
                target_time,
                deadline,
                cap,
            });
        }
    }

    // Canonical class order: by time, then by view contents.
    let mut order: Vec<u32> = (0..class_views.len() as u32).collect();
    order.sort_by(|x, y| {
        let (a, b) = (&class_views[*x as usize], &class_views[*y as usize]);
        (a.time(), a).cmp(&(b.time(), b))
    });
    let mut remap = vec![0u32; class_views.len()];
    for (new_ix, old_ix) in order.iter().enumerate() {
        remap[*old_ix as usize] = new_ix as u32;
    }
    let class_views: Vec<View> = order
        .iter()
        .map(|ix| class_views[*ix as usize].clone())
        .collect();
    for run in &mut runs {
        for c in &mut run.classes {
            *c = remap[*c as usize];
        }
    }
    let class_time: Vec<Time> = class_views.iter().map(View::time).collect();
    let allowed: Vec<Vec<Value>> = class_views
        .iter()
        .map(|v| {
            let mut vals: Vec<Value> = v.initial_values().iter().map(|(_, x)| *x).collect();
            vals.sort_unstable();
            vals.dedup();
            vals
        })
        .collect();
    let mut occurrences: Vec<Vec<u32>> = vec![Vec::new(); class_views.len()];
    for (rix, run) in runs.iter().enumerate() {
        for c in &run.classes {
            occurrences[*c as usize].push(rix as u32);
        }
    }

    let problem = SearchProblem {
        adversaries,
        class_views,
        class_time,
        allowed,
        occurrences,
        runs,
        target_last,
        maj_value,
        task: *task,
        mode,
        budget,
    };
    let mut state = SearchState {
        assign: vec![UNASSIGNED; problem.class_views.len()],
        decided: vec![None; problem.runs.len()],
        correct_vals: vec![ValueSet::EMPTY; problem.adversaries.len()],
        all_vals: vec![ValueSet::EMPTY; problem.adversaries.len()],
        nodes: 0,
        sampled: Vec::new(),
    };

    match dfs(&problem, &mut state, 0) {
        Ok(()) => Ok(BeatSearchReport {
            outcome: BeatOutcome::Certificate,
            nodes: state.nodes,
            classes: problem.class_views.len(),
            adversaries: problem.adversaries.len() as u64,
            sampled_tables: state.sampled,
        }),
        Err(Stop::Budget(nodes)) => Err(SearchError::BudgetExceeded { nodes }),
        Err(Stop::Found(found)) => {
            let (table, improvements) = *found;
            Ok(BeatSearchReport {
                outcome: BeatOutcome::Witness {
                    table,
                    improvements,
                },
                nodes: state.nodes,
                classes: problem.class_views.len(),
                adversaries: problem.adversaries.len() as u64,
                sampled_tables: state.sampled,
            })
        }
    }
}

fn agreement_ok(p: &SearchProblem, state: &SearchState, adv_ix: u32) -> bool {
    let width = match p.task.kind {
        TaskKind::KSet | TaskKind::UniformKSet => usize::from(p.task.k),
        _ => 1,
    };
    let set = if p.task.kind.uniform() {
        state.all_vals[adv_ix as usize]
    } else {
        state.correct_vals[adv_ix as usize]
    };
    set.len() <= width
}

/// Applies one candidate to one class; returns false (after its own partial
/// effects were pushed to `undo`) when a constraint breaks.
fn apply(
    p: &SearchProblem,
    state: &mut SearchState,
    class: u32,
    cand: i16,
    undo: &mut SmallVec<[(u32, ValueSet, ValueSet); 8]>,
) -> bool {
    let time = p.class_time[class as usize];
    for rix in &p.occurrences[class as usize] {
        let run = &p.runs[*rix as usize];
        if state.decided[*rix as usize].is_some() {
            continue;
        }
        if cand == DECIDE_NONE {
            if run.deadline == Some(time) {
                return false;
            }
            continue;
        }
        let v = Value(cand as u8);
        if run.cap.is_some_and(|c| time > c) {
            return false;
        }
        state.decided[*rix as usize] = Some((time, v));
        let a = run.adv as usize;
        undo.push((*rix, state.correct_vals[a], state.all_vals[a]));
        state.all_vals[a].insert(v);
        if run.correct {
            state.correct_vals[a].insert(v);
        }
        if !agreement_ok(p, state, run.adv) {
            return false;
        }
        if let Some(maj) = p.maj_value[a] {
            if v != maj {
                return false;
            }
        }
    }
    true
}

fn dfs(p: &SearchProblem, state: &mut SearchState, class: u32) -> Result<(), Stop> {
    if class as usize == p.class_views.len() {
        return complete(p, state);
    }
    let reachable = p.occurrences[class as usize]
        .iter()
        .any(|rix| state.decided[*rix as usize].is_none());
    let allowed = &p.allowed[class as usize];
    let candidate_count = if reachable { allowed.len() + 1 } else { 1 };
    for cix in 0..candidate_count {
        let cand = if reachable && cix < allowed.len() {
            allowed[cix].0 as i16
        } else {
            DECIDE_NONE
        };
        state.nodes += 1;
        if state.nodes > p.budget {
            return Err(Stop::Budget(state.nodes));
        }
        let mut undo: SmallVec<[(u32, ValueSet, ValueSet); 8]> = SmallVec::new();
        let ok = apply(p, state, class, cand, &mut undo);
        if ok {
            state.assign[class as usize] = cand;
            let r = dfs(p, state, class + 1);
            state.assign[class as usize] = UNASSIGNED;
            if let Err(stop) = r {
                undo_all(p, state, &undo);
                return Err(stop);
            }
        }
        undo_all(p, state, &undo);
    }
    Ok(())
}

fn undo_all(
    p: &SearchProblem,
    state: &mut SearchState,
    undo: &SmallVec<[(u32, ValueSet, ValueSet); 8]>,
) {
    for (rix, correct, all) in undo.iter().rev() {
        state.decided[*rix as usize] = None;
        let a = p.runs[*rix as usize].adv as usize;
        state.correct_vals[a] = *correct;
        state.all_vals[a] = *all;
    }
}

/// Full assignment reached: verify completeness, then check strictness.
fn complete(p: &SearchProblem, state: &mut SearchState) -> Result<(), Stop> {
    for (rix, run) in p.runs.iter().enumerate() {
        debug_assert!(
            !(run.deadline.is_some() && state.decided[rix].is_none()),
            "deadline enforcement failed"
        );
        if run.correct && state.decided[rix].is_none() {
            // Correct processes must decide; without a deadline this table
            // cannot be completed into a solving protocol.
            return Ok(());
        }
    }
    let mut improvements = Vec::new();
    match p.mode {
        SearchMode::PerProcess => {
            for (rix, run) in p.runs.iter().enumerate() {
                if let Some((time, _)) = state.decided[rix] {
                    if run.target_time.is_none_or(|tt| time < tt)
                        && improvements.len() < WITNESS_CAP
                    {
                        improvements.push(DominationWitness {
                            adversary: p.adversaries[run.adv as usize].clone(),
                            process: run.process,
                            time_a: Some(time),
                            time_b: run.target_time,
                        });
                    }
                }
            }
        }
        SearchMode::LastDecider => {
            let mut table_last: Vec<Option<Time>> = vec![None; p.adversaries.len()];
            let mut who: Vec<Option<ProcessId>> = vec![None; p.adversaries.len()];
            for (rix, run) in p.runs.iter().enumerate() {
                if let Some((time, _)) = state.decided[rix] {
                    let slot = &mut table_last[run.adv as usize];
                    if slot.is_none_or(|t| time > t) {
                        *slot = Some(time);
                        who[run.adv as usize] = Some(run.process);
                    }
                }
            }
            for (aix, last) in table_last.iter().enumerate() {
                if let (Some(x), Some(y)) = (*last, p.target_last[aix]) {
                    if x < y && improvements.len() < WITNESS_CAP {
                        improvements.push(DominationWitness {
                            adversary: p.adversaries[aix].clone(),
                            process: who[aix].expect("decided"),
                            time_a: Some(x),
                            time_b: Some(y),
                        });
                    }
                }
            }
        }
    }
    let build_table = || {
        ProtocolTable::new(
            p.class_views
                .iter()
                .cloned()
                .zip(
                    state
                        .assign
                        .iter()
                        .map(|a| (*a >= 0).then_some(Value(*a as u8))),
                )
                .collect(),
        )
    };
    if improvements.is_empty() {
        if state.sampled.len() < 3 {
            state.sampled.push(build_table());
        }
        return Ok(());
    }
    Err(Stop::Found(Box::new((build_table(), improvements))))
}

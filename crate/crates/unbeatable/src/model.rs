//! Synchronous round machinery: adversaries, crash-failure patterns,
//! communication graphs and per-node views.
//!
//! An adversary is a pair of an input vector and a failure pattern; it is the
//! sole source of nondeterminism. A deterministic protocol together with an
//! adversary fixes the whole run, so simulation is a pure function. Processes
//! are numbered `1..=n`, rounds are numbered from 1 (round `m+1` happens
//! between time `m` and time `m+1`), times from 0.
//!
//! A process that crashes in round `c` behaves correctly in rounds `< c`,
//! delivers its round-`c` messages exactly to `delivers_to`, and is silent
//! afterwards. Its process-time nodes `<j,0> .. <j,c-1>` exist; `<j,c>` does
//! not.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

/// Time instants (`0..`) and round numbers (`1..`).
pub type Time = u32;
pub type Round = u32;

/// Hard cap on the number of processes; keeps node sets in fixed-width words.
pub const MAX_PROCS: usize = 64;
/// Hard cap on representable times for the same reason.
pub const MAX_TIME: usize = 63;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum ModelError {
    #[error("system needs at least two processes, got n={0}")]
    TooFewProcesses(usize),
    #[error("n={0} exceeds the supported maximum of {MAX_PROCS}")]
    TooManyProcesses(usize),
    #[error("failure bound t={t} must satisfy t <= n-1 (n={n})")]
    BadFailureBound { t: u8, n: u8 },
    #[error("process id {id} out of range 1..={n}")]
    BadProcessId { id: u8, n: u8 },
    #[error("expected {n} initial values, got {got}")]
    BadValueCount { n: u8, got: usize },
    #[error("initial value {value} of process {process} exceeds the maximum {max}")]
    ValueOutOfRange {
        process: ProcessId,
        value: Value,
        max: Value,
    },
    #[error("{found} crashes exceed the failure bound t={t}")]
    TooManyCrashes { found: usize, t: u8 },
    #[error("process {0} has more than one crash entry")]
    DuplicateCrash(ProcessId),
    #[error("crash round of process {0} must be >= 1")]
    CrashRoundZero(ProcessId),
    #[error("crashing process {0} lists itself in delivers_to")]
    SelfDelivery(ProcessId),
    #[error("node {0} does not exist under this failure pattern")]
    NonexistentNode(Node),
    #[error("process {process} is not active at time {time}")]
    InactiveProcess { process: ProcessId, time: Time },
    #[error("horizon {horizon} is below the required minimum {required}")]
    HorizonTooShort { horizon: Time, required: Time },
}

/// 1-indexed process identifier.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProcessId(pub u8);

impl ProcessId {
    /// Zero-based index for array and bitmask addressing.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(ix: usize) -> Self {
        ProcessId(ix as u8 + 1)
    }
}

impl fmt::Debug for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Initial value drawn from `{0..=d}`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Value(pub u8);

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A process-time node `<i,m>`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Node {
    pub process: ProcessId,
    pub time: Time,
}

impl Node {
    pub fn new(process: ProcessId, time: Time) -> Self {
        Node { process, time }
    }
}

impl fmt::Debug for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.process, self.time)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.process, self.time)
    }
}

/// A set of processes, stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ProcSet(pub u64);

impl ProcSet {
    pub const EMPTY: ProcSet = ProcSet(0);

    pub fn singleton(p: ProcessId) -> Self {
        ProcSet(1 << p.index())
    }

    pub fn full(n: u8) -> Self {
        ProcSet(if n as usize >= 64 {
            !0
        } else {
            (1u64 << n) - 1
        })
    }

    pub fn contains(self, p: ProcessId) -> bool {
        self.0 & (1 << p.index()) != 0
    }

    pub fn insert(&mut self, p: ProcessId) {
        self.0 |= 1 << p.index();
    }

    pub fn remove(&mut self, p: ProcessId) {
        self.0 &= !(1 << p.index());
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = ProcessId> {
        (0..64)
            .filter(move |ix| self.0 & (1 << ix) != 0)
            .map(ProcessId::from_index)
    }
}

impl FromIterator<ProcessId> for ProcSet {
    fn from_iter<T: IntoIterator<Item = ProcessId>>(iter: T) -> Self {
        let mut s = ProcSet::EMPTY;
        for p in iter {
            s.insert(p);
        }
        s
    }
}

impl fmt::Debug for ProcSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for ProcSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for ProcSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let ids: Vec<ProcessId> = Vec::deserialize(d)?;
        Ok(ids.into_iter().collect())
    }
}

/// A set of values, stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ValueSet(pub u64);

impl ValueSet {
    pub const EMPTY: ValueSet = ValueSet(0);

    pub fn contains(self, v: Value) -> bool {
        self.0 & (1 << v.0) != 0
    }

    pub fn insert(&mut self, v: Value) {
        self.0 |= 1 << v.0;
    }

    pub fn min(self) -> Option<Value> {
        if self.0 == 0 {
            None
        } else {
            Some(Value(self.0.trailing_zeros() as u8))
        }
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Values strictly below `k`, i.e. the low values of a k-set task.
    pub fn lows(self, k: u8) -> ValueSet {
        ValueSet(self.0 & ((1u64 << k) - 1))
    }

    pub fn iter(self) -> impl Iterator<Item = Value> {
        (0..64)
            .filter(move |b| self.0 & (1 << b) != 0)
            .map(|b| Value(b as u8))
    }
}

impl fmt::Debug for ValueSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// One crash: the process behaves correctly in rounds `< round`, delivers its
/// round-`round` messages exactly to `delivers_to`, and is silent afterwards.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Crash {
    pub process: ProcessId,
    pub round: Round,
    pub delivers_to: ProcSet,
}

/// All crashes of one run plus the a-priori failure bound `t`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FailurePattern {
    pub t: u8,
    crashes: SmallVec<[Crash; 4]>,
}

impl FailurePattern {
    /// Builds a pattern, sorting crashes by process id. Invariants are only
    /// checked by [`Adversary::validate`].
    pub fn new(t: u8, mut crashes: Vec<Crash>) -> Self {
        crashes.sort_by_key(|c| c.process);
        FailurePattern {
            t,
            crashes: crashes.into(),
        }
    }

    pub fn failure_free(t: u8) -> Self {
        FailurePattern {
            t,
            crashes: SmallVec::new(),
        }
    }

    pub fn crashes(&self) -> &[Crash] {
        &self.crashes
    }

    pub fn crash_of(&self, p: ProcessId) -> Option<&Crash> {
        self.crashes.iter().find(|c| c.process == p)
    }

    /// Number of faulty processes in the pattern (the run's `f`).
    pub fn num_failures(&self) -> usize {
        self.crashes.len()
    }
}

/// An input vector plus a failure pattern: everything the environment decides.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Adversary {
    pub n: u8,
    pub values: SmallVec<[Value; 8]>,
    pub pattern: FailurePattern,
}

/// Flat JSON encoding: `{"n":4,"t":2,"values":[1,0,1,1],"crashes":[...]}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdversaryWire {
    n: u8,
    t: u8,
    values: Vec<Value>,
    #[serde(default)]
    crashes: Vec<Crash>,
}

impl Serialize for Adversary {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        AdversaryWire {
            n: self.n,
            t: self.pattern.t,
            values: self.values.to_vec(),
            crashes: self.pattern.crashes.to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Adversary {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = AdversaryWire::deserialize(d)?;
        Ok(Adversary {
            n: w.n,
            values: w.values.into(),
            pattern: FailurePattern::new(w.t, w.crashes),
        })
    }
}

impl Adversary {
    pub fn new(n: u8, t: u8, values: Vec<Value>, crashes: Vec<Crash>) -> Self {
        Adversary {
            n,
            values: values.into(),
            pattern: FailurePattern::new(t, crashes),
        }
    }

    pub fn failure_free(n: u8, t: u8, values: Vec<Value>) -> Self {
        Self::new(n, t, values, vec![])
    }

    pub fn t(&self) -> u8 {
        self.pattern.t
    }

    /// Number of crashes in the pattern.
    pub fn num_failures(&self) -> usize {
        self.pattern.num_failures()
    }

    pub fn value_of(&self, p: ProcessId) -> Value {
        self.values[p.index()]
    }

    /// A process is correct when the pattern never crashes it.
    pub fn is_correct(&self, p: ProcessId) -> bool {
        self.pattern.crash_of(p).is_none()
    }

    pub fn process_ids(&self) -> impl Iterator<Item = ProcessId> {
        (1..=self.n).map(ProcessId)
    }

    /// Checks every structural invariant. `max_value` is the largest value of
    /// the configured value set `{0..=max_value}`.
    pub fn validate(&self, max_value: Value) -> Result<(), ModelError> {
        let n = self.n;
        if n < 2 {
            return Err(ModelError::TooFewProcesses(n as usize));
        }
        if n as usize > MAX_PROCS {
            return Err(ModelError::TooManyProcesses(n as usize));
        }
        let t = self.pattern.t;
        if t > n - 1 {
            return Err(ModelError::BadFailureBound { t, n });
        }
        if self.values.len() != n as usize {
            return Err(ModelError::BadValueCount {
                n,
                got: self.values.len(),
            });
        }
        for (ix, v) in self.values.iter().enumerate() {
            if *v > max_value {
                return Err(ModelError::ValueOutOfRange {
                    process: ProcessId::from_index(ix),
                    value: *v,
                    max: max_value,
                });
            }
        }
        if self.pattern.crashes.len() > t as usize {
            return Err(ModelError::TooManyCrashes {
                found: self.pattern.crashes.len(),
                t,
            });
        }
        let mut seen = ProcSet::EMPTY;
        for c in self.pattern.crashes() {
            if c.process.0 == 0 || c.process.0 > n {
                return Err(ModelError::BadProcessId { id: c.process.0, n });
            }
            if seen.contains(c.process) {
                return Err(ModelError::DuplicateCrash(c.process));
            }
            seen.insert(c.process);
            if c.round == 0 {
                return Err(ModelError::CrashRoundZero(c.process));
            }
            if c.delivers_to.contains(c.process) {
                return Err(ModelError::SelfDelivery(c.process));
            }
            for q in c.delivers_to.iter() {
                if q.0 == 0 || q.0 > n {
                    return Err(ModelError::BadProcessId { id: q.0, n });
                }
            }
        }
        Ok(())
    }
}

/// Whether process `i` still exists at time `m`: a process crashing in round
/// `c` has nodes at times `0..=c-1` only.
pub fn active_at(adv: &Adversary, i: ProcessId, m: Time) -> bool {
    match adv.pattern.crash_of(i) {
        None => true,
        Some(c) => c.round > m,
    }
}

/// Whether `sender`'s round-`round` message reaches `receiver`. Implies the
/// sender node `<sender, round-1>` exists.
fn delivered(adv: &Adversary, sender: ProcessId, receiver: ProcessId, round: Round) -> bool {
    match adv.pattern.crash_of(sender) {
        None => true,
        Some(c) => c.round > round || (c.round == round && c.delivers_to.contains(receiver)),
    }
}

/// The labelled communication subgraph a process has accumulated by some
/// time: its local state under a full-information protocol.
///
/// `seen` is kept as one time-bitmask per process and `edges` as one
/// round-bitmask per (source, destination) pair, so views built at different
/// horizons compare equal whenever they contain the same nodes and edges.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct View {
    owner: Node,
    n: u8,
    /// `seen[p]` bit `l` set iff `<p+1, l>` is in the view.
    seen: SmallVec<[u64; 8]>,
    /// `edges[src*n+dst]` bit `l` set iff the round-`l+1` edge
    /// `(<src+1,l>, <dst+1,l+1>)` is in the view.
    edges: SmallVec<[u64; 16]>,
    /// Initial values of seen level-0 nodes, sorted by process.
    values: SmallVec<[(ProcessId, Value); 8]>,
}

impl View {
    fn empty(owner: Node, n: u8) -> Self {
        View {
            owner,
            n,
            seen: smallvec::smallvec![0; n as usize],
            edges: smallvec::smallvec![0; n as usize * n as usize],
            values: SmallVec::new(),
        }
    }

    pub fn owner(&self) -> Node {
        self.owner
    }

    pub fn time(&self) -> Time {
        self.owner.time
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn contains(&self, node: Node) -> bool {
        node.process.0 >= 1
            && node.process.0 <= self.n
            && self.seen[node.process.index()] & (1 << node.time) != 0
    }

    pub fn has_edge(&self, from: Node, to: Node) -> bool {
        to.time == from.time + 1
            && self.edges[from.process.index() * self.n as usize + to.process.index()]
                & (1 << from.time)
                != 0
    }

    pub(crate) fn seen_mask(&self, p: ProcessId) -> u64 {
        self.seen[p.index()]
    }

    pub(crate) fn edge_mask(&self, src: ProcessId, dst: ProcessId) -> u64 {
        self.edges[src.index() * self.n as usize + dst.index()]
    }

    /// Seen nodes in ascending (time, process) order.
    pub fn seen_nodes(&self) -> Vec<Node> {
        let mut out = Vec::new();
        for l in 0..=self.time() {
            for p in (1..=self.n).map(ProcessId) {
                if self.contains(Node::new(p, l)) {
                    out.push(Node::new(p, l));
                }
            }
        }
        out
    }

    /// Edges in ascending (round, source, destination) order.
    pub fn edge_list(&self) -> Vec<(Node, Node)> {
        let mut out = Vec::new();
        for l in 0..self.time() {
            for src in (1..=self.n).map(ProcessId) {
                for dst in (1..=self.n).map(ProcessId) {
                    let (a, b) = (Node::new(src, l), Node::new(dst, l + 1));
                    if self.has_edge(a, b) {
                        out.push((a, b));
                    }
                }
            }
        }
        out
    }

    pub fn initial_values(&self) -> &[(ProcessId, Value)] {
        &self.values
    }

    pub fn initial_value(&self, p: ProcessId) -> Option<Value> {
        self.values.iter().find(|(q, _)| *q == p).map(|(_, v)| *v)
    }

    fn merge_from(&mut self, other: &View) {
        for (a, b) in self.seen.iter_mut().zip(other.seen.iter()) {
            *a |= *b;
        }
        for (a, b) in self.edges.iter_mut().zip(other.edges.iter()) {
            *a |= *b;
        }
    }

    fn finalize_values(&mut self, adv: &Adversary) {
        self.values.clear();
        for p in adv.process_ids() {
            if self.seen[p.index()] & 1 != 0 {
                self.values.push((p, adv.value_of(p)));
            }
        }
    }
}

impl fmt::Debug for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("View")
            .field("owner", &self.owner)
            .field("seen", &self.seen_nodes())
            .field("edges", &self.edge_list())
            .field("values", &self.values)
            .finish()
    }
}

/// Computes the views of every process alive at `time`, reusing the per-round
/// induction. Index `p-1` is `None` when the process no longer exists.
pub(crate) struct ViewLadder {
    pub now: Vec<Option<View>>,
    pub prev: Vec<Option<View>>,
    time: Time,
}

impl ViewLadder {
    pub fn start(adv: &Adversary) -> Self {
        let n = adv.n as usize;
        let mut now = Vec::with_capacity(n);
        for p in adv.process_ids() {
            // Crash rounds are >= 1, so every process exists at time 0.
            let mut v = View::empty(Node::new(p, 0), adv.n);
            v.seen[p.index()] |= 1;
            v.finalize_values(adv);
            now.push(Some(v));
        }
        ViewLadder {
            now,
            prev: vec![None; n],
            time: 0,
        }
    }

    /// Advances the ladder by one round.
    pub fn step(&mut self, adv: &Adversary) {
        let m = self.time + 1;
        let n = adv.n as usize;
        let mut next: Vec<Option<View>> = Vec::with_capacity(n);
        for i in adv.process_ids() {
            if !active_at(adv, i, m) {
                next.push(None);
                continue;
            }
            let mut v = View::empty(Node::new(i, m), adv.n);
            v.seen[i.index()] |= 1 << m;
            for j in adv.process_ids() {
                let incoming = j == i || delivered(adv, j, i, m);
                if incoming {
                    if let Some(sender_view) = &self.now[j.index()] {
                        v.merge_from(sender_view);
                        v.edges[j.index() * n + i.index()] |= 1 << (m - 1);
                    }
                }
            }
            v.finalize_values(adv);
            next.push(Some(v));
        }
        self.prev = std::mem::replace(&mut self.now, next);
        self.time = m;
    }
}

/// Whether a message chain connects `src` to `dst` under the adversary.
///
/// Both nodes must exist; `src.time <= dst.time` is required.
pub fn seen(adv: &Adversary, src: Node, dst: Node) -> Result<bool, ModelError> {
    for node in [src, dst] {
        if node.process.0 == 0 || node.process.0 > adv.n {
            return Err(ModelError::BadProcessId {
                id: node.process.0,
                n: adv.n,
            });
        }
        if !active_at(adv, node.process, node.time) {
            return Err(ModelError::NonexistentNode(node));
        }
    }
    if src.time > dst.time {
        return Err(ModelError::NonexistentNode(src));
    }
    let v = view(adv, dst.process, dst.time)?;
    Ok(v.contains(src))
}

/// The view of `<i,m>`: a deterministic function of the adversary alone.
pub fn view(adv: &Adversary, i: ProcessId, m: Time) -> Result<View, ModelError> {
    if i.0 == 0 || i.0 > adv.n {
        return Err(ModelError::BadProcessId { id: i.0, n: adv.n });
    }
    if !active_at(adv, i, m) {
        return Err(ModelError::InactiveProcess {
            process: i,
            time: m,
        });
    }
    let mut ladder = ViewLadder::start(adv);
    for _ in 0..m {
        ladder.step(adv);
    }
    Ok(ladder.now[i.index()]
        .take()
        .expect("active process has a view"))
}

/// A decision rule: a pure map from the current view (plus the same process's
/// view one step earlier, when it exists) to an optional value.
pub trait DecisionRule {
    fn decide(&self, now: &View, prev: Option<&View>) -> Option<Value>;
}

/// One decision, as recorded in a schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Decision {
    pub time: Time,
    pub value: Value,
}

/// Per-process first decisions plus crash metadata for one run.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DecisionSchedule {
    pub decisions: BTreeMap<ProcessId, Decision>,
    pub crash_round: BTreeMap<ProcessId, Round>,
}

impl DecisionSchedule {
    pub fn decision_of(&self, p: ProcessId) -> Option<Decision> {
        self.decisions.get(&p).copied()
    }

    /// Latest decision time in the run, if anything was decided.
    pub fn last_decision_time(&self) -> Option<Time> {
        self.decisions.values().map(|d| d.time).max()
    }
}

/// Runs `rule` against `adv` for `horizon` rounds.
///
/// Every process evaluates the rule at each time it is active and undecided;
/// only the first decision is recorded. A process crashing in round `c` takes
/// decisions at times `0..=c-1`, so it may decide and then crash before
/// sending anything.
pub fn simulate<R: DecisionRule>(
    rule: &R,
    adv: &Adversary,
    horizon: Time,
) -> Result<DecisionSchedule, ModelError> {
    let required = adv.t() as Time + 1;
    if horizon < required {
        return Err(ModelError::HorizonTooShort { horizon, required });
    }
    let mut sched = DecisionSchedule::default();
    for c in adv.pattern.crashes() {
        sched.crash_round.insert(c.process, c.round);
    }
    let mut ladder = ViewLadder::start(adv);
    for m in 0..=horizon {
        if m > 0 {
            ladder.step(adv);
        }
        for i in adv.process_ids() {
            if sched.decisions.contains_key(&i) {
                continue;
            }
            let Some(now) = &ladder.now[i.index()] else {
                continue;
            };
            let prev = if m > 0 {
                ladder.prev[i.index()].as_ref()
            } else {
                None
            };
            if let Some(value) = rule.decide(now, prev) {
                sched.decisions.insert(i, Decision { time: m, value });
            }
        }
    }
    Ok(sched)
}

//! Compact messaging: fixed-width bit-level reports instead of
//! full-information views, with a decision engine that reproduces the
//! simulator's schedules exactly.
//!
//! Decisions in every implemented rule depend only on which nodes are hidden
//! and on the initial values seen, so a process never needs to forward whole
//! views. It reports `value(j)=v` once per subject whose initial value it
//! discovers, `failed_at(j)=c` when it can prove `j` crashed by round `c`
//! (re-reported at most once, on learning a strictly earlier round), and a
//! constant-size `alive` in rounds with nothing to say. In the crash model
//! the provable crash rounds for one subject take at most two distinct
//! values, so the per-subject budget of one value report and two failed-at
//! reports is never exceeded; the total traffic between any ordered process
//! pair stays below [`BIT_BUDGET_FACTOR`]`·n·log2(n)` bits.
//!
//! The receiver folds three sources into its hidden-node reconstruction: its
//! own direct reception history, the minimum over received `failed_at`
//! rounds, and witnessed-level inference (a `failed_at(j)=c` report proves
//! its original detector saw `<j,c-2>`). Schedule equivalence against the
//! full-information simulator is enforced by exhaustive sweeps; any gap in
//! the report algebra must surface there as a loud mismatch, never as a
//! silent divergence.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::model::{
    active_at, simulate, Adversary, Crash, Decision, DecisionSchedule, FailurePattern, ModelError,
    ProcSet, ProcessId, Round, Time, Value, ValueSet,
};
use crate::protocols::{apply_rule, Frame, PrevFrame, ProtocolSpec};

/// Declared constant for the per-pair bit budget `C·n·log2(n)`.
pub const BIT_BUDGET_FACTOR: u64 = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("sender {sender} exceeded the {kind} report budget for subject {subject}")]
    BudgetViolation {
        sender: ProcessId,
        subject: ProcessId,
        kind: &'static str,
    },
    #[error("message exceeds the wire format's report-count limit")]
    WireOverflow,
    #[error("truncated or malformed message at bit {0}")]
    MalformedMessage(usize),
    #[error("compact predicates disagree with full-information predicates at process {process} time {time}: {detail}")]
    ReconstructionMismatch {
        process: ProcessId,
        time: Time,
        detail: String,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One report. `value` and `failed_at` carry a subject; `alive` is padding
/// for rounds with nothing new.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Report {
    Value { subject: ProcessId, value: Value },
    FailedAt { subject: ProcessId, round: Round },
    Alive,
}

/// Field widths of the wire format, fixed per run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WireParams {
    pub n: u8,
    pub subject_bits: u32,
    pub value_bits: u32,
    pub round_bits: u32,
}

fn bits_for(count: u64) -> u32 {
    debug_assert!(count >= 1);
    64 - (count - 1).leading_zeros().min(63)
}

impl WireParams {
    pub fn new(n: u8, max_value: Value, horizon: Time) -> WireParams {
        WireParams {
            n,
            subject_bits: bits_for(u64::from(n)).max(1),
            value_bits: bits_for(u64::from(max_value.0) + 1).max(1),
            round_bits: bits_for(u64::from(horizon) + 1).max(1),
        }
    }
}

/// Append-only bit buffer, big-endian within each field.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitBuf {
    bytes: Vec<u8>,
    len_bits: usize,
}

impl BitBuf {
    pub fn len_bits(&self) -> usize {
        self.len_bits
    }

    fn push_bits(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64 && (width == 64 || value < (1 << width)));
        for i in (0..width).rev() {
            let bit = (value >> i) & 1;
            let byte = self.len_bits / 8;
            if byte == self.bytes.len() {
                self.bytes.push(0);
            }
            self.bytes[byte] |= (bit as u8) << (7 - self.len_bits % 8);
            self.len_bits += 1;
        }
    }

    fn read_bits(&self, pos: &mut usize, width: u32) -> Result<u64, CodecError> {
        if *pos + width as usize > self.len_bits {
            return Err(CodecError::MalformedMessage(*pos));
        }
        let mut out = 0u64;
        for _ in 0..width {
            let byte = *pos / 8;
            let bit = (self.bytes[byte] >> (7 - *pos % 8)) & 1;
            out = (out << 1) | u64::from(bit);
            *pos += 1;
        }
        Ok(out)
    }
}

/// Serializes one round's report list: an 8-bit count followed by
/// fixed-width report fields.
pub fn encode_message(reports: &[Report], params: &WireParams) -> Result<BitBuf, CodecError> {
    if reports.len() > 255 {
        return Err(CodecError::WireOverflow);
    }
    let mut buf = BitBuf::default();
    buf.push_bits(reports.len() as u64, 8);
    for r in reports {
        match r {
            Report::Alive => buf.push_bits(0, 2),
            Report::Value { subject, value } => {
                buf.push_bits(1, 2);
                buf.push_bits(u64::from(subject.0) - 1, params.subject_bits);
                buf.push_bits(u64::from(value.0), params.value_bits);
            }
            Report::FailedAt { subject, round } => {
                buf.push_bits(2, 2);
                buf.push_bits(u64::from(subject.0) - 1, params.subject_bits);
                buf.push_bits(u64::from(*round) - 1, params.round_bits);
            }
        }
    }
    Ok(buf)
}

pub fn decode_message(buf: &BitBuf, params: &WireParams) -> Result<Vec<Report>, CodecError> {
    let mut pos = 0usize;
    let count = buf.read_bits(&mut pos, 8)?;
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let kind = buf.read_bits(&mut pos, 2)?;
        out.push(match kind {
            0 => Report::Alive,
            1 => {
                let subject = ProcessId(buf.read_bits(&mut pos, params.subject_bits)? as u8 + 1);
                let value = Value(buf.read_bits(&mut pos, params.value_bits)? as u8);
                Report::Value { subject, value }
            }
            2 => {
                let subject = ProcessId(buf.read_bits(&mut pos, params.subject_bits)? as u8 + 1);
                let round = buf.read_bits(&mut pos, params.round_bits)? as Round + 1;
                Report::FailedAt { subject, round }
            }
            _ => return Err(CodecError::MalformedMessage(pos)),
        });
    }
    if pos != buf.len_bits() {
        return Err(CodecError::MalformedMessage(pos));
    }
    Ok(out)
}

const NO_PROOF: u32 = u32::MAX;

/// Everything one process tracks while running over compact messages.
#[derive(Clone, Debug)]
pub struct CompactState {
    id: ProcessId,
    n: u8,
    value_of: SmallVec<[Option<Value>; 8]>,
    value_learned_at: SmallVec<[Option<Time>; 8]>,
    /// Earliest provable crash round per subject.
    crash_proof: SmallVec<[u32; 8]>,
    proof_dirty: SmallVec<[bool; 8]>,
    /// Highest level at which each subject was provably alive as seen from
    /// here (`-1`: nothing).
    witnessed: SmallVec<[i8; 8]>,
    /// Values carried by each sender's own report stream so far.
    sender_vals: SmallVec<[ValueSet; 8]>,
    received_this_round: ProcSet,
    outbox: Vec<Report>,
    value_reported: ProcSet,
    failed_report_count: SmallVec<[u8; 8]>,
    failed_report_round: SmallVec<[u32; 8]>,
    prev: Option<PrevFrame>,
}

impl CompactState {
    fn new(id: ProcessId, adv: &Adversary) -> CompactState {
        let n = adv.n;
        let mut st = CompactState {
            id,
            n,
            value_of: smallvec::smallvec![None; n as usize],
            value_learned_at: smallvec::smallvec![None; n as usize],
            crash_proof: smallvec::smallvec![NO_PROOF; n as usize],
            proof_dirty: smallvec::smallvec![false; n as usize],
            witnessed: smallvec::smallvec![-1; n as usize],
            sender_vals: smallvec::smallvec![ValueSet::EMPTY; n as usize],
            received_this_round: ProcSet::EMPTY,
            outbox: Vec::new(),
            value_reported: ProcSet::EMPTY,
            failed_report_count: smallvec::smallvec![0; n as usize],
            failed_report_round: smallvec::smallvec![NO_PROOF; n as usize],
            prev: None,
        };
        st.value_of[id.index()] = Some(adv.value_of(id));
        st.value_learned_at[id.index()] = Some(0);
        st.witnessed[id.index()] = 0;
        st
    }

    fn learn_value(&mut self, subject: ProcessId, value: Value, now: Time) {
        let slot = &mut self.value_of[subject.index()];
        debug_assert!(
            slot.is_none() || *slot == Some(value),
            "conflicting value reports"
        );
        if slot.is_none() {
            *slot = Some(value);
            self.value_learned_at[subject.index()] = Some(now);
        }
        if self.witnessed[subject.index()] < 0 {
            self.witnessed[subject.index()] = 0;
        }
    }

    fn learn_crash_proof(&mut self, subject: ProcessId, round: u32) {
        if round < self.crash_proof[subject.index()] {
            self.crash_proof[subject.index()] = round;
            self.proof_dirty[subject.index()] = true;
        }
    }

    fn apply_message(&mut self, sender: ProcessId, round: Round, reports: &[Report]) {
        self.received_this_round.insert(sender);
        self.witnessed[sender.index()] = self.witnessed[sender.index()].max(round as i8 - 1);
        for r in reports {
            match r {
                Report::Alive => {}
                Report::Value { subject, value } => {
                    self.learn_value(*subject, *value, round);
                    self.sender_vals[sender.index()].insert(*value);
                }
                Report::FailedAt { subject, round: c } => {
                    self.learn_crash_proof(*subject, *c);
                    // The original detector of failed_at(j)=c received j's
                    // round c-1, i.e. witnessed <j,c-2>.
                    if *c >= 2 {
                        self.witnessed[subject.index()] =
                            self.witnessed[subject.index()].max(*c as i8 - 2);
                    }
                }
            }
        }
    }

    fn note_silences(&mut self, round: Round) {
        for j in (1..=self.n).map(ProcessId) {
            if j != self.id && !self.received_this_round.contains(j) {
                self.learn_crash_proof(j, round);
            }
        }
        self.witnessed[self.id.index()] = round as i8;
    }

    /// Queues the reports for the next round: values first learned now and
    /// crash proofs that improved now.
    fn rebuild_outbox(&mut self, now: Time) -> Result<(), CodecError> {
        self.outbox.clear();
        for j in (1..=self.n).map(ProcessId) {
            if self.value_learned_at[j.index()] == Some(now) {
                if self.value_reported.contains(j) {
                    return Err(CodecError::BudgetViolation {
                        sender: self.id,
                        subject: j,
                        kind: "value",
                    });
                }
                self.value_reported.insert(j);
                self.outbox.push(Report::Value {
                    subject: j,
                    value: self.value_of[j.index()].expect("just learned"),
                });
            }
        }
        for j in (1..=self.n).map(ProcessId) {
            if self.proof_dirty[j.index()] {
                self.proof_dirty[j.index()] = false;
                let round = self.crash_proof[j.index()];
                if round < self.failed_report_round[j.index()] {
                    if self.failed_report_count[j.index()] >= 2 {
                        return Err(CodecError::BudgetViolation {
                            sender: self.id,
                            subject: j,
                            kind: "failed_at",
                        });
                    }
                    self.failed_report_count[j.index()] += 1;
                    self.failed_report_round[j.index()] = round;
                    self.outbox.push(Report::FailedAt { subject: j, round });
                }
            }
        }
        Ok(())
    }

    /// Reconstructs the predicate frame at time `m` from reports alone.
    fn frame(&self, m: Time) -> Frame {
        let mut vals = ValueSet::EMPTY;
        let (mut zeros, mut ones) = (0u32, 0u32);
        for v in self.value_of.iter().flatten() {
            vals.insert(*v);
            match v.0 {
                0 => zeros += 1,
                1 => ones += 1,
                _ => {}
            }
        }
        let capacity = (0..=m)
            .map(|l| {
                (1..=self.n)
                    .map(ProcessId)
                    .filter(|j| {
                        (self.witnessed[j.index()] as i64) < i64::from(l)
                            && l < self.crash_proof[j.index()]
                    })
                    .count() as u32
            })
            .min()
            .unwrap_or(0);
        let knownf = if m == 0 {
            0
        } else {
            (1..=self.n)
                .map(ProcessId)
                .filter(|j| *j != self.id && !self.received_this_round.contains(*j))
                .count() as u32
        };
        let proven_crashed: ProcSet = (1..=self.n)
            .map(ProcessId)
            .filter(|j| self.crash_proof[j.index()] != NO_PROOF)
            .collect();
        let witnesses = if m == 0 {
            SmallVec::new()
        } else {
            vals.iter()
                .map(|v| {
                    let mut count = self
                        .received_this_round
                        .iter()
                        .filter(|j| self.sender_vals[j.index()].contains(v))
                        .count() as u32;
                    if self.prev.is_some_and(|p| p.vals.contains(v)) {
                        count += 1;
                    }
                    (v, count)
                })
                .collect()
        };
        Frame {
            time: m,
            vals,
            zeros,
            ones,
            capacity,
            knownf,
            proven_crashed,
            witnesses,
            prev: self.prev,
        }
    }
}

/// Per-ordered-pair bit accounting for one run.
#[derive(Clone, Debug, Default)]
pub struct BitLedger {
    pub bits_sent: BTreeMap<(ProcessId, ProcessId), u64>,
}

impl BitLedger {
    fn add(&mut self, sender: ProcessId, receiver: ProcessId, bits: u64) {
        *self.bits_sent.entry((sender, receiver)).or_insert(0) += bits;
    }

    pub fn max_pair_bits(&self) -> u64 {
        self.bits_sent.values().copied().max().unwrap_or(0)
    }
}

#[derive(Clone, Debug)]
pub struct CompactRun {
    pub schedule: DecisionSchedule,
    pub ledger: BitLedger,
}

fn delivered(adv: &Adversary, sender: ProcessId, receiver: ProcessId, round: Round) -> bool {
    match adv.pattern.crash_of(sender) {
        None => true,
        Some(c) => c.round > round || (c.round == round && c.delivers_to.contains(receiver)),
    }
}

/// Runs `spec` over the compact wire protocol under `adv`. With
/// `verify_frames` set, every reconstructed predicate frame a rule is about
/// to read is compared against the full-information one and any divergence
/// in a field the rule consumes is a hard error.
pub fn decode_and_decide(
    spec: &ProtocolSpec,
    adv: &Adversary,
    horizon: Time,
    verify_frames: bool,
) -> Result<CompactRun, CodecError> {
    let required = Time::from(adv.t()) + 1;
    if horizon < required {
        return Err(CodecError::Model(ModelError::HorizonTooShort {
            horizon,
            required,
        }));
    }
    let params = WireParams::new(adv.n, spec.max_value, horizon);
    let mut states: Vec<CompactState> = adv
        .process_ids()
        .map(|p| CompactState::new(p, adv))
        .collect();
    let mut ledger = BitLedger::default();
    let mut schedule = DecisionSchedule::default();
    for c in adv.pattern.crashes() {
        schedule.crash_round.insert(c.process, c.round);
    }
    let mut fip = verify_frames.then(|| crate::model::ViewLadder::start(adv));

    // Time 0: decide on own input, queue the first value report.
    for p in adv.process_ids() {
        let st = &mut states[p.index()];
        st.rebuild_outbox(0)?;
        let frame = st.frame(0);
        if let Some(ladder) = &fip {
            let now = ladder.now[p.index()].as_ref().expect("alive at 0");
            check_frames(spec, p, 0, &frame, &Frame::from_views(spec, now, None))?;
        }
        if let Some(v) = apply_rule(spec, &frame) {
            schedule.decisions.insert(p, Decision { time: 0, value: v });
        }
        st.prev = Some(PrevFrame {
            vals: frame.vals,
            capacity: frame.capacity,
            proven_crashed: frame.proven_crashed,
        });
    }

    for round in 1..=horizon {
        if let Some(ladder) = &mut fip {
            ladder.step(adv);
        }
        // Encode each existing sender's outbox once.
        let messages: Vec<Option<(Vec<Report>, u64)>> = adv
            .process_ids()
            .map(|s| {
                if !active_at(adv, s, round - 1) {
                    return Ok(None);
                }
                let reports = if states[s.index()].outbox.is_empty() {
                    vec![Report::Alive]
                } else {
                    states[s.index()].outbox.clone()
                };
                let buf = encode_message(&reports, &params)?;
                let decoded = decode_message(&buf, &params)?;
                debug_assert_eq!(decoded, reports);
                Ok(Some((decoded, buf.len_bits() as u64)))
            })
            .collect::<Result<_, CodecError>>()?;

        for i in adv.process_ids() {
            if !active_at(adv, i, round) {
                continue;
            }
            let st = &mut states[i.index()];
            st.received_this_round = ProcSet::EMPTY;
            for s in adv.process_ids() {
                if s == i {
                    continue;
                }
                if let Some((reports, bits)) = &messages[s.index()] {
                    if delivered(adv, s, i, round) {
                        ledger.add(s, i, *bits);
                        st.apply_message(s, round, reports);
                    }
                }
            }
            st.note_silences(round);
            st.rebuild_outbox(round)?;
            let undecided = !schedule.decisions.contains_key(&i);
            let frame = st.frame(round);
            if undecided {
                if let Some(ladder) = &fip {
                    let now = ladder.now[i.index()].as_ref().expect("active");
                    let prev = ladder.prev[i.index()].as_ref();
                    check_frames(spec, i, round, &frame, &Frame::from_views(spec, now, prev))?;
                }
                if let Some(v) = apply_rule(spec, &frame) {
                    schedule.decisions.insert(
                        i,
                        Decision {
                            time: round,
                            value: v,
                        },
                    );
                }
            }
            st.prev = Some(PrevFrame {
                vals: frame.vals,
                capacity: frame.capacity,
                proven_crashed: frame.proven_crashed,
            });
        }
    }

    Ok(CompactRun { schedule, ledger })
}

/// Compares only the fields the active rule consumes.
fn check_frames(
    spec: &ProtocolSpec,
    process: ProcessId,
    time: Time,
    compact: &Frame,
    fip: &Frame,
) -> Result<(), CodecError> {
    use crate::protocols::ProtocolId::*;
    let mut mismatches: Vec<String> = Vec::new();
    let mut field = |name: &str, a: String, b: String| {
        if a != b {
            mismatches.push(format!("{name}: compact={a} fip={b}"));
        }
    };
    field(
        "vals",
        format!("{:?}", compact.vals),
        format!("{:?}", fip.vals),
    );
    match spec.id {
        P0 => {}
        Opt0 | Opt1 | OptMin => {
            field(
                "hidden_path",
                compact.hidden_path().to_string(),
                fip.hidden_path().to_string(),
            );
        }
        OptMaj => {
            field("zeros", compact.zeros.to_string(), fip.zeros.to_string());
            field("ones", compact.ones.to_string(), fip.ones.to_string());
            field(
                "hidden_path",
                compact.hidden_path().to_string(),
                fip.hidden_path().to_string(),
            );
        }
        OptMinK => {
            field(
                "capacity<k",
                (compact.capacity < u32::from(spec.k)).to_string(),
                (fip.capacity < u32::from(spec.k)).to_string(),
            );
        }
        UP0 | UOpt0 => {
            field(
                "knows_exists_correct(0)",
                compact.knows_exists_correct(Value(0), spec.t).to_string(),
                fip.knows_exists_correct(Value(0), spec.t).to_string(),
            );
            if spec.id == UOpt0 {
                field(
                    "hidden_path",
                    compact.hidden_path().to_string(),
                    fip.hidden_path().to_string(),
                );
            }
        }
        UProtMinK => {
            field(
                "capacity<k",
                (compact.capacity < u32::from(spec.k)).to_string(),
                (fip.capacity < u32::from(spec.k)).to_string(),
            );
            if let Some(min) = fip.vals.min() {
                field(
                    "knows_exists_correct(min)",
                    compact.knows_exists_correct(min, spec.t).to_string(),
                    fip.knows_exists_correct(min, spec.t).to_string(),
                );
            }
            field(
                "prev",
                format!(
                    "{:?}",
                    compact
                        .prev
                        .map(|p| (p.vals, p.capacity.min(spec.k.into())))
                ),
                format!(
                    "{:?}",
                    fip.prev.map(|p| (p.vals, p.capacity.min(spec.k.into())))
                ),
            );
        }
        P0OptHmw => {
            field(
                "proven_stable",
                (Some(compact.proven_crashed) == compact.prev.map(|p| p.proven_crashed))
                    .to_string(),
                (Some(fip.proven_crashed) == fip.prev.map(|p| p.proven_crashed)).to_string(),
            );
        }
    }
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(CodecError::ReconstructionMismatch {
            process,
            time,
            detail: mismatches.join("; "),
        })
    }
}

/// Outcome of an exhaustive compact-versus-full-information sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquivalenceOutcome {
    pub adversaries: u64,
    pub schedule_mismatches: u64,
    pub first_mismatch: Option<Adversary>,
    pub max_pair_bits: u64,
}

impl EquivalenceOutcome {
    pub fn pass(&self) -> bool {
        self.schedule_mismatches == 0
    }
}

/// Checks `decode_and_decide == simulate` on every adversary of the domain.
pub fn equivalence_sweep(
    dom: &crate::oracle::Domain,
    spec: &ProtocolSpec,
    verify_frames: bool,
) -> Result<EquivalenceOutcome, CodecError> {
    let patterns = crate::search::enumerate_patterns(dom);
    let results: Vec<Result<EquivalenceOutcome, CodecError>> = patterns
        .par_iter()
        .map(|pattern| {
            let mut out = EquivalenceOutcome {
                adversaries: 0,
                schedule_mismatches: 0,
                first_mismatch: None,
                max_pair_bits: 0,
            };
            for values in crate::search::value_vectors(dom) {
                let adv = Adversary {
                    n: dom.n,
                    values,
                    pattern: pattern.clone(),
                };
                let fip = simulate(spec, &adv, dom.horizon).expect("valid horizon");
                let compact = decode_and_decide(spec, &adv, dom.horizon, verify_frames)?;
                out.adversaries += 1;
                out.max_pair_bits = out.max_pair_bits.max(compact.ledger.max_pair_bits());
                if compact.schedule != fip {
                    out.schedule_mismatches += 1;
                    out.first_mismatch.get_or_insert(adv);
                }
            }
            Ok(out)
        })
        .collect();
    let mut merged = EquivalenceOutcome {
        adversaries: 0,
        schedule_mismatches: 0,
        first_mismatch: None,
        max_pair_bits: 0,
    };
    for r in results {
        let o = r?;
        merged.adversaries += o.adversaries;
        merged.schedule_mismatches += o.schedule_mismatches;
        merged.max_pair_bits = merged.max_pair_bits.max(o.max_pair_bits);
        if merged.first_mismatch.is_none() {
            merged.first_mismatch = o.first_mismatch;
        }
    }
    Ok(merged)
}

/// Uniformly random adversary for bit-budget sampling: failure count up to
/// `t`, crash rounds up to `horizon+1`, arbitrary delivery subsets.
pub fn random_adversary<R: Rng>(
    rng: &mut R,
    n: u8,
    t: u8,
    max_value: Value,
    horizon: Time,
) -> Adversary {
    let values: Vec<Value> = (0..n)
        .map(|_| Value(rng.gen_range(0..=max_value.0)))
        .collect();
    let f = rng.gen_range(0..=t);
    let mut pool: Vec<ProcessId> = (1..=n).map(ProcessId).collect();
    let mut crashes = Vec::new();
    for _ in 0..f {
        let ix = rng.gen_range(0..pool.len());
        let process = pool.swap_remove(ix);
        let mut delivers_to = ProcSet::EMPTY;
        for q in (1..=n).map(ProcessId) {
            if q != process && rng.gen_bool(0.5) {
                delivers_to.insert(q);
            }
        }
        crashes.push(Crash {
            process,
            round: rng.gen_range(1..=horizon + 1),
            delivers_to,
        });
    }
    Adversary {
        n,
        values: values.into(),
        pattern: FailurePattern::new(t, crashes),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Domain;
    use crate::protocols::ProtocolId;
    use rand::SeedableRng;

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

    #[test]
    fn wire_round_trip() {
        let params = WireParams::new(4, Value(2), 3);
        let reports = vec![
            Report::Value {
                subject: ProcessId(3),
                value: Value(2),
            },
            Report::FailedAt {
                subject: ProcessId(2),
                round: 4,
            },
            Report::Alive,
        ];
        let buf = encode_message(&reports, &params).unwrap();
        assert_eq!(decode_message(&buf, &params).unwrap(), reports);
    }

    #[test]
    fn quiet_rounds_cost_a_constant_alive() {
        let params = WireParams::new(8, Value(1), 5);
        let buf = encode_message(&[Report::Alive], &params).unwrap();
        assert_eq!(buf.len_bits(), 10);
    }

    #[test]
    fn first_round_carries_exactly_the_own_value() {
        let adv = Adversary::failure_free(4, 1, v(&[1, 0, 1, 1]));
        let spec = ProtocolSpec::new(ProtocolId::Opt0, 4, 1, Value(1), 1).unwrap();
        // Rebuild each process's round-1 outbox and check its shape.
        for p in adv.process_ids() {
            let mut st = CompactState::new(p, &adv);
            st.rebuild_outbox(0).unwrap();
            assert_eq!(
                st.outbox,
                vec![Report::Value {
                    subject: p,
                    value: adv.value_of(p)
                }]
            );
        }
        let run = decode_and_decide(&spec, &adv, 2, true).unwrap();
        let fip = simulate(&spec, &adv, 2).unwrap();
        assert_eq!(run.schedule, fip);
    }

    #[test]
    fn compact_matches_fip_on_the_discovery_scenario() {
        // New failure discovered in each of the first two rounds while all
        // initial values become visible; the hidden-path rule decides at 2.
        let adv = Adversary::new(
            4,
            2,
            v(&[1, 1, 1, 1]),
            vec![crash(2, 1, &[3, 4]), crash(3, 2, &[])],
        );
        let spec = ProtocolSpec::new(ProtocolId::Opt0, 4, 2, Value(1), 1).unwrap();
        let run = decode_and_decide(&spec, &adv, 3, true).unwrap();
        assert_eq!(
            run.schedule.decision_of(ProcessId(1)),
            Some(Decision {
                time: 2,
                value: Value(1)
            })
        );
        assert_eq!(run.schedule, simulate(&spec, &adv, 3).unwrap());
    }

    #[test]
    fn small_exhaustive_equivalence_with_frame_checks() {
        let dom = Domain::new(3, 1, Value(1), 2).unwrap();
        for id in [ProtocolId::Opt0, ProtocolId::UOpt0, ProtocolId::P0OptHmw] {
            let spec = ProtocolSpec::new(id, 3, 1, Value(1), 1).unwrap();
            let out = equivalence_sweep(&dom, &spec, true).unwrap();
            assert!(out.pass(), "{id}: {out:?}");
        }
    }

    #[test]
    fn random_bit_budget_stays_under_the_declared_constant() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 8u8;
        let t = n / 2;
        let spec = ProtocolSpec::new(ProtocolId::Opt0, n, t, Value(1), 1).unwrap();
        let budget = BIT_BUDGET_FACTOR * u64::from(n) * u64::from(u32::from(n).ilog2());
        for _ in 0..50 {
            let adv = random_adversary(&mut rng, n, t, Value(1), Time::from(t) + 1);
            let run = decode_and_decide(&spec, &adv, Time::from(t) + 1, false).unwrap();
            assert!(run.ledger.max_pair_bits() <= budget);
        }
    }
}

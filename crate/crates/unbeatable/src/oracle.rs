//! Semantic knowledge evaluation by brute force, and the indistinguishable
//! hidden-value run construction.
//!
//! Knowledge of a fact at a view means the fact holds in *every* adversary
//! of the domain that produces the same view. The combinatorial predicates
//! in [`crate::knowledge`] claim to compute exactly that for a fixed list of
//! facts; this module enumerates the adversary space and checks them, which
//! turns the correctness arguments behind the decision rules into executable
//! tests.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::knowledge::{
    hidden_path_exists, hidden_profile, knows_exists_correct, knows_majority, Analysis,
};
use crate::model::{
    active_at, view, Adversary, Crash, FailurePattern, ModelError, ProcSet, ProcessId, Time, Value,
    View,
};
use crate::search::{enumerate_patterns, value_vectors};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("domain too large for exhaustive evaluation: {0}")]
    DomainTooLarge(String),
    #[error("horizon {horizon} must be at least t+1 = {required}")]
    HorizonTooShort { horizon: Time, required: Time },
    #[error("requested {requested} hidden values but the node only has capacity {capacity}")]
    CapacityTooSmall { capacity: u32, requested: usize },
    #[error("hidden-variant construction needs {needed} crashes but the bound is t={t}")]
    CrashBudgetExceeded { needed: usize, t: u8 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A finite adversary universe: all value vectors over `{0..=max_value}`
/// crossed with all failure patterns of at most `t` crashes, crash rounds
/// capped at `horizon+1`.
///
/// A crash strictly after the horizon yields a run prefix identical to the
/// no-crash run, so the cap loses nothing at the fixed horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub n: u8,
    pub t: u8,
    pub max_value: Value,
    pub horizon: Time,
}

impl Domain {
    pub fn new(n: u8, t: u8, max_value: Value, horizon: Time) -> Result<Self, OracleError> {
        if n < 2 || usize::from(n) > crate::model::MAX_PROCS {
            return Err(OracleError::DomainTooLarge(format!("n={n} out of range")));
        }
        if t > n - 1 {
            return Err(OracleError::DomainTooLarge(format!(
                "t={t} exceeds n-1={}",
                n - 1
            )));
        }
        if max_value.0 > 62 {
            return Err(OracleError::DomainTooLarge(format!(
                "max value {max_value} too big"
            )));
        }
        let required = Time::from(t) + 1;
        if horizon < required {
            return Err(OracleError::HorizonTooShort { horizon, required });
        }
        if horizon as usize > crate::model::MAX_TIME - 1 {
            return Err(OracleError::DomainTooLarge(format!(
                "horizon {horizon} too big"
            )));
        }
        Ok(Domain {
            n,
            t,
            max_value,
            horizon,
        })
    }

    /// Number of distinct values.
    pub fn value_count(&self) -> u64 {
        u64::from(self.max_value.0) + 1
    }

    fn guard_exhaustive(&self) -> Result<(), OracleError> {
        if self.n > 5 || self.horizon > 4 {
            return Err(OracleError::DomainTooLarge(format!(
                "semantic evaluation is guarded to n <= 5 and horizon <= 4, got n={} horizon={}",
                self.n, self.horizon
            )));
        }
        Ok(())
    }
}

/// The fixed fact list the oracle evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactId {
    /// Some process started with this value.
    Exists(Value),
    /// Some never-crashing process currently knows the value exists.
    ExistsCorrect(Value),
    /// No correct process will ever know the value exists.
    NeverKnown(Value),
    /// The majority predicate (strict for 0, weak for 1).
    Maj(Value),
}

/// Evaluates a fact on a concrete adversary at time `m`.
///
/// `NeverKnown` is time-independent: after the last crash the correct
/// processes' value knowledge can no longer grow from extinct sources, so it
/// is evaluated one round after the last crash.
pub fn eval_fact(adv: &Adversary, m: Time, fact: FactId) -> bool {
    match fact {
        FactId::Exists(v) => adv.values.contains(&v),
        FactId::Maj(v) => {
            let n = u32::from(adv.n);
            let count = adv.values.iter().filter(|x| **x == v).count() as u32;
            if v == Value(0) {
                2 * count > n
            } else {
                2 * count >= n
            }
        }
        FactId::ExistsCorrect(v) => correct_knower_exists(adv, m, v),
        FactId::NeverKnown(v) => {
            let settle = settling_time(adv);
            !correct_knower_exists(adv, settle, v)
        }
    }
}

/// The future-closed reading of "some correct process knows the value
/// exists": it will hold at some time, i.e. the value is not never-known.
pub fn exists_correct_eventually(adv: &Adversary, v: Value) -> bool {
    !eval_fact(adv, 0, FactId::NeverKnown(v))
}

fn settling_time(adv: &Adversary) -> Time {
    adv.pattern
        .crashes()
        .iter()
        .map(|c| c.round)
        .max()
        .unwrap_or(0)
        + 1
}

fn correct_knower_exists(adv: &Adversary, m: Time, v: Value) -> bool {
    adv.process_ids().filter(|p| adv.is_correct(*p)).any(|p| {
        let w = view(adv, p, m).expect("correct processes are always active");
        w.initial_values().iter().any(|(_, val)| *val == v)
    })
}

/// All adversaries of the domain under which the view's owner has exactly
/// this view. The view itself always arises from at least one of them.
pub fn indistinguishable(dom: &Domain, target: &View) -> Result<Vec<Adversary>, OracleError> {
    dom.guard_exhaustive()?;
    let owner = target.owner();
    let mut out = Vec::new();
    for pattern in enumerate_patterns(dom) {
        for values in value_vectors(dom) {
            let adv = Adversary {
                n: dom.n,
                values,
                pattern: pattern.clone(),
            };
            if !active_at(&adv, owner.process, owner.time) {
                continue;
            }
            let w = view(&adv, owner.process, owner.time).expect("active");
            if w == *target {
                out.push(adv);
            }
        }
    }
    Ok(out)
}

/// Semantic knowledge: the fact holds in every indistinguishable adversary.
pub fn knows(dom: &Domain, target: &View, fact: FactId) -> Result<bool, OracleError> {
    let m = target.owner().time;
    Ok(indistinguishable(dom, target)?
        .iter()
        .all(|adv| eval_fact(adv, m, fact)))
}

/// Rewires an adversary so that `values` are planted on hidden witnesses of
/// `<i,m>` without changing i's view: witness chains carry the values up the
/// levels, each chain link crashing as it hands over.
///
/// Witnesses at level `l < m` are silent toward the owner from round `l+1`
/// on and are therefore already crashed in the input adversary, so the
/// rewiring never needs new faulty processes.
pub fn hidden_variant(
    adv: &Adversary,
    i: ProcessId,
    m: Time,
    values: &[Value],
) -> Result<Adversary, OracleError> {
    let w = view(adv, i, m)?;
    let profile = hidden_profile(&w);
    let c = values.len();
    if (profile.capacity as usize) < c {
        return Err(OracleError::CapacityTooSmall {
            capacity: profile.capacity,
            requested: c,
        });
    }
    if c == 0 {
        return Ok(adv.clone());
    }

    // First c hidden processes per level, in ascending id order.
    let witnesses: Vec<SmallVec<[ProcessId; 4]>> = (0..=m)
        .map(|l| profile.hidden_by_level[l as usize].iter().take(c).collect())
        .collect();
    let mut all_witnesses = ProcSet::EMPTY;
    for level in &witnesses {
        for p in level {
            debug_assert!(!all_witnesses.contains(*p), "levels share a witness");
            all_witnesses.insert(*p);
        }
    }

    let mut new_values = adv.values.clone();
    for (b, v) in values.iter().enumerate() {
        new_values[witnesses[0][b].index()] = *v;
    }

    let mut crash_map: HashMap<ProcessId, Crash> = adv
        .pattern
        .crashes()
        .iter()
        .map(|cr| (cr.process, *cr))
        .collect();

    // Chain links: the level-l witness crashes in round l+1, delivering only
    // to its successor.
    for l in 0..m {
        for (p, successor) in witnesses[l as usize].iter().zip(&witnesses[l as usize + 1]) {
            crash_map.insert(
                *p,
                Crash {
                    process: *p,
                    round: l + 1,
                    delivers_to: ProcSet::singleton(*successor),
                },
            );
        }
    }

    // A top-level witness must exist at time m to receive its chain value.
    // Hiddenness at level m means the owner got all of its rounds `1..=m`,
    // so the only obstruction is a crash in round m itself (delivering to
    // the owner); pushing that crash one round later delivers round m in
    // full, which only adds edges at nodes the owner cannot see.
    for p in &witnesses[m as usize] {
        if let Some(cr) = crash_map.get_mut(p) {
            debug_assert!(cr.round >= m, "top-level witness provably crashed early");
            if cr.round == m {
                cr.round = m + 1;
                cr.delivers_to = ProcSet::EMPTY;
            }
        }
    }

    // Witness reception: at its own level a witness hears exactly what the
    // owner hears (its chain predecessor aside), so partial round-l crashers
    // must treat it like the owner.
    for l in 1..=m {
        for x in witnesses[l as usize].iter().copied() {
            for s in adv.process_ids() {
                if s == x || s == i || all_witnesses.contains(s) {
                    continue;
                }
                if let Some(cr) = crash_map.get_mut(&s) {
                    if cr.round == l {
                        if cr.delivers_to.contains(i) {
                            cr.delivers_to.insert(x);
                        } else {
                            cr.delivers_to.remove(x);
                        }
                    }
                }
            }
        }
    }

    let mut crashes: Vec<Crash> = crash_map.into_values().collect();
    crashes.sort_by_key(|cr| cr.process);
    if crashes.len() > adv.t() as usize {
        return Err(OracleError::CrashBudgetExceeded {
            needed: crashes.len(),
            t: adv.t(),
        });
    }
    let variant = Adversary {
        n: adv.n,
        values: new_values,
        pattern: FailurePattern::new(adv.t(), crashes),
    };
    Ok(variant)
}

/// Disagreement counts from one knowledge-versus-oracle sweep.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct AgreementReport {
    pub views_checked: u64,
    pub exists_disagreements: u64,
    pub exists_correct_disagreements: u64,
    pub maj_disagreements: u64,
    pub never_known_disagreements: u64,
    /// How often the future-closed reading of `ExistsCorrect` also matched
    /// the combinatorial test (it does whenever the current-time reading
    /// does, on every domain swept so far).
    pub exists_correct_eventual_matches: u64,
    pub exists_correct_eventual_checked: u64,
}

impl AgreementReport {
    pub fn pass(&self) -> bool {
        self.exists_disagreements == 0
            && self.exists_correct_disagreements == 0
            && self.maj_disagreements == 0
            && self.never_known_disagreements == 0
    }
}

/// Checks every combinatorial predicate against semantic knowledge on every
/// reachable view of the domain.
pub fn agreement_sweep(dom: &Domain) -> Result<AgreementReport, OracleError> {
    dom.guard_exhaustive()?;
    let patterns = enumerate_patterns(dom);
    let mut adversaries: Vec<Adversary> = Vec::new();
    for pattern in &patterns {
        for values in value_vectors(dom) {
            adversaries.push(Adversary {
                n: dom.n,
                values,
                pattern: pattern.clone(),
            });
        }
    }

    // Index: view -> (indices of adversaries producing it, predecessor view).
    type ViewEntry = (Vec<u32>, Option<View>);
    let mut index: HashMap<View, ViewEntry> = HashMap::new();
    for (ix, adv) in adversaries.iter().enumerate() {
        let mut ladder = crate::model::ViewLadder::start(adv);
        for m in 0..=dom.horizon {
            if m > 0 {
                ladder.step(adv);
            }
            for p in adv.process_ids() {
                let Some(now) = &ladder.now[p.index()] else {
                    continue;
                };
                let prev = if m > 0 {
                    ladder.prev[p.index()].clone()
                } else {
                    None
                };
                index
                    .entry(now.clone())
                    .or_insert_with(|| (Vec::new(), prev))
                    .0
                    .push(ix as u32);
            }
        }
    }

    let binary = dom.max_value == Value(1);
    let mut report = AgreementReport::default();
    let mut views: Vec<(&View, &ViewEntry)> = index.iter().collect();
    views.sort_by_key(|(v, _)| (*v).clone());
    for (w, (adv_ixs, prev)) in views {
        report.views_checked += 1;
        let m = w.time();
        let a = Analysis::of(w);
        let semantic = |fact: FactId| {
            adv_ixs
                .iter()
                .all(|ix| eval_fact(&adversaries[*ix as usize], m, fact))
        };
        for v in (0..=dom.max_value.0).map(Value) {
            if (a.vals.contains(v)) != semantic(FactId::Exists(v)) {
                report.exists_disagreements += 1;
            }
            let combinatorial_ec =
                knows_exists_correct(w, prev.as_ref(), v, dom.t).expect("prev views line up");
            if combinatorial_ec != semantic(FactId::ExistsCorrect(v)) {
                report.exists_correct_disagreements += 1;
            }
            let eventual = adv_ixs
                .iter()
                .all(|ix| exists_correct_eventually(&adversaries[*ix as usize], v));
            report.exists_correct_eventual_checked += 1;
            report.exists_correct_eventual_matches += u64::from(combinatorial_ec == eventual);
            let never_known = !a.vals.contains(v) && !hidden_path_exists(w);
            if never_known != semantic(FactId::NeverKnown(v)) {
                report.never_known_disagreements += 1;
            }
            if binary {
                let km = knows_majority(w, v).expect("binary domain");
                if km != semantic(FactId::Maj(v)) {
                    report.maj_disagreements += 1;
                }
            }
        }
    }
    Ok(report)
}

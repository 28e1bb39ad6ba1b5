//! Command-line front end: single-run simulation, exhaustive verification
//! sweeps, domination comparison, unbeatability search, oracle and codec
//! checks, and predicate dumps.
//!
//! Every command prints one JSON report to stdout:
//! `{schema_version, command, results, timing_secs}`. Results are
//! canonically ordered so reports are byte-stable across repeated runs and
//! across `--workers` settings (only `timing_secs` varies). Exit codes: 0
//! pass, 1 property/certification finding (counterexample in the report),
//! 2 usage or operational error.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value as Json};

use crate::codec;
use crate::knowledge;
use crate::model::{self, Adversary, ProcessId, Time, Value};
use crate::oracle::{self, Domain};
use crate::protocols::{ProtocolId, ProtocolSpec};
use crate::search::{self, BeatOutcome, SearchMode};
use crate::sim::{self, TaskKind, TaskSpec};

pub const SCHEMA_VERSION: &str = "1.0.0";

/// Largest enumeration any sweep command accepts.
const MAX_SWEEP_ADVERSARIES: u128 = 1_000_000_000;

#[derive(Parser, Debug)]
#[command(
    name = "unbeatable",
    about = "Simulate, verify and certify consensus protocols under crash failures",
    disable_help_subcommand = true
)]
struct Cli {
    /// Worker threads for sweeps (default: all cores). Results do not
    /// depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output format: json (default) or csv (schedules / timing tables).
    #[arg(long, global = true, default_value = "json")]
    output: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct DomainArgs {
    #[arg(long)]
    n: u8,
    #[arg(long)]
    t: u8,
    /// Number of distinct initial values (the value set is {0..values-1}).
    #[arg(long, default_value_t = 2)]
    values: u8,
    #[arg(long)]
    horizon: Option<Time>,
}

impl DomainArgs {
    fn domain(&self) -> Result<Domain, String> {
        if self.values == 0 {
            return Err("--values must be at least 1".into());
        }
        let horizon = self.horizon.unwrap_or(Time::from(self.t) + 1);
        Domain::new(self.n, self.t, Value(self.values - 1), horizon).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one protocol against one adversary file and print the schedule.
    Simulate {
        #[arg(long)]
        protocol: String,
        #[arg(long)]
        adversary: PathBuf,
        #[arg(long, default_value_t = 2)]
        values: u8,
        #[arg(long, default_value_t = 1)]
        k: u8,
        #[arg(long)]
        horizon: Option<Time>,
    },
    /// Exhaustively check task properties and stopping bounds over a domain.
    Verify {
        #[arg(long)]
        protocol: String,
        #[arg(long)]
        task: String,
        #[arg(long, default_value_t = 1)]
        k: u8,
        #[command(flatten)]
        domain: DomainArgs,
    },
    /// Compare the decision times of two protocols over a domain.
    Compare {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = 1)]
        k: u8,
        #[arg(long, default_value = "per-process")]
        mode: String,
        #[command(flatten)]
        domain: DomainArgs,
    },
    /// Search the space of decision tables for one that strictly beats the
    /// target; exhaustion is an unbeatability certificate at this size.
    BeatSearch {
        #[arg(long)]
        target: String,
        #[arg(long)]
        task: String,
        #[arg(long, default_value_t = 1)]
        k: u8,
        #[arg(long, default_value = "per-process")]
        mode: String,
        /// Node budget; accepts scientific notation such as 1e8.
        #[arg(long, default_value = "1e8")]
        budget: String,
        #[command(flatten)]
        domain: DomainArgs,
    },
    /// Check every combinatorial knowledge predicate against the semantic
    /// oracle on all reachable views of a domain.
    OracleCheck {
        #[command(flatten)]
        domain: DomainArgs,
    },
    /// Check the compact wire engine against the full-information simulator
    /// and report the bit budget.
    CodecCheck {
        #[arg(long)]
        protocol: String,
        #[arg(long, default_value_t = 1)]
        k: u8,
        /// Also compare every reconstructed predicate frame.
        #[arg(long, default_value_t = false)]
        verify_frames: bool,
        #[command(flatten)]
        domain: DomainArgs,
    },
    /// Dump every predicate value for one (adversary, process, time) node.
    Predicates {
        #[arg(long)]
        adversary: PathBuf,
        #[arg(long)]
        process: u8,
        #[arg(long)]
        time: Time,
        #[arg(long, default_value_t = 1)]
        k: u8,
        #[arg(long, default_value_t = 2)]
        values: u8,
    },
}

/// Parses and runs one invocation; returns the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(w) = cli.workers {
            builder = builder.num_threads(w.max(1));
        }
        match builder.build() {
            Ok(p) => p,
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        }
    };
    let started = Instant::now();
    let outcome = pool.install(|| execute(&cli.command));
    match outcome {
        Err(usage) => {
            eprintln!("error: {usage}");
            2
        }
        Ok(out) => {
            let report = json!({
                "schema_version": SCHEMA_VERSION,
                "command": out.echo,
                "results": out.results,
                "timing_secs": started.elapsed().as_secs_f64(),
            });
            match render(&cli.output, &out, &report) {
                Ok(text) => {
                    println!("{text}");
                    out.exit_code
                }
                Err(usage) => {
                    eprintln!("error: {usage}");
                    2
                }
            }
        }
    }
}

struct Outcome {
    echo: Json,
    results: Json,
    exit_code: i32,
    /// Rows for `--output csv`, when the command has a tabular form.
    csv: Option<Vec<Vec<String>>>,
}

fn render(format: &str, out: &Outcome, report: &Json) -> Result<String, String> {
    match format {
        "json" => Ok(serde_json::to_string_pretty(report).expect("report serializes")),
        "csv" => {
            let rows = out
                .csv
                .as_ref()
                .ok_or_else(|| "csv output is not defined for this subcommand".to_string())?;
            Ok(rows
                .iter()
                .map(|r| r.join(","))
                .collect::<Vec<_>>()
                .join("\n"))
        }
        other => Err(format!("unknown output format {other:?}")),
    }
}

fn execute(cmd: &Command) -> Result<Outcome, String> {
    match cmd {
        Command::Simulate {
            protocol,
            adversary,
            values,
            k,
            horizon,
        } => simulate_cmd(protocol, adversary, *values, *k, *horizon),
        Command::Verify {
            protocol,
            task,
            k,
            domain,
        } => verify_cmd(protocol, task, *k, domain),
        Command::Compare {
            a,
            b,
            k,
            mode,
            domain,
        } => compare_cmd(a, b, *k, mode, domain),
        Command::BeatSearch {
            target,
            task,
            k,
            mode,
            budget,
            domain,
        } => beat_search_cmd(target, task, *k, mode, budget, domain),
        Command::OracleCheck { domain } => oracle_check_cmd(domain),
        Command::CodecCheck {
            protocol,
            k,
            verify_frames,
            domain,
        } => codec_check_cmd(protocol, *k, *verify_frames, domain),
        Command::Predicates {
            adversary,
            process,
            time,
            k,
            values,
        } => predicates_cmd(adversary, *process, *time, *k, *values),
    }
}

fn parse_protocol(s: &str) -> Result<ProtocolId, String> {
    ProtocolId::parse(s).ok_or_else(|| {
        let known: Vec<&str> = ProtocolId::ALL.iter().map(|p| p.as_str()).collect();
        format!("unknown protocol {s:?} (known: {})", known.join(", "))
    })
}

fn parse_task(s: &str) -> Result<TaskKind, String> {
    TaskKind::parse(s).ok_or_else(|| {
        let known: Vec<&str> = TaskKind::ALL.iter().map(|t| t.as_str()).collect();
        format!("unknown task {s:?} (known: {})", known.join(", "))
    })
}

fn parse_mode(s: &str) -> Result<SearchMode, String> {
    SearchMode::parse(s)
        .ok_or_else(|| format!("unknown mode {s:?} (known: per-process, last-decider)"))
}

fn guard_sweep_size(dom: &Domain) -> Result<(), String> {
    let count = search::adversary_count(dom);
    if count > MAX_SWEEP_ADVERSARIES {
        return Err(format!(
            "domain has {count} adversaries, above the sweep limit of {MAX_SWEEP_ADVERSARIES}"
        ));
    }
    Ok(())
}

/// Loads and validates an adversary file.
pub fn load_adversary(path: &Path, max_value: Value) -> Result<Adversary, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let adv: Adversary = serde_json::from_str(&text)
        .map_err(|e| format!("{} is not a valid adversary file: {e}", path.display()))?;
    adv.validate(max_value)
        .map_err(|e| format!("{} fails validation: {e}", path.display()))?;
    Ok(adv)
}

fn to_json<T: Serialize>(value: &T) -> Json {
    serde_json::to_value(value).expect("report types serialize")
}

fn simulate_cmd(
    protocol: &str,
    adversary: &Path,
    values: u8,
    k: u8,
    horizon: Option<Time>,
) -> Result<Outcome, String> {
    if values == 0 {
        return Err("--values must be at least 1".into());
    }
    let id = parse_protocol(protocol)?;
    let max_value = Value(values - 1);
    let adv = load_adversary(adversary, max_value)?;
    let spec = ProtocolSpec::new(id, adv.n, adv.t(), max_value, k).map_err(|e| e.to_string())?;
    let horizon = horizon.unwrap_or(Time::from(adv.t()) + 1);
    let sched = model::simulate(&spec, &adv, horizon).map_err(|e| e.to_string())?;
    let mut csv = vec![vec![
        "process".into(),
        "decided_time".into(),
        "decided_value".into(),
        "crash_round".into(),
    ]];
    for p in adv.process_ids() {
        let d = sched.decision_of(p);
        csv.push(vec![
            p.to_string(),
            d.map_or(String::new(), |d| d.time.to_string()),
            d.map_or(String::new(), |d| d.value.to_string()),
            sched
                .crash_round
                .get(&p)
                .map_or(String::new(), |r| r.to_string()),
        ]);
    }
    Ok(Outcome {
        echo: json!({
            "verb": "simulate",
            "protocol": protocol,
            "adversary": adversary.display().to_string(),
            "values": values,
            "k": k,
            "horizon": horizon,
        }),
        results: json!({ "schedule": to_json(&sched) }),
        exit_code: 0,
        csv: Some(csv),
    })
}

fn verify_cmd(protocol: &str, task: &str, k: u8, domain: &DomainArgs) -> Result<Outcome, String> {
    let id = parse_protocol(protocol)?;
    let kind = parse_task(task)?;
    let dom = domain.domain()?;
    guard_sweep_size(&dom)?;
    let spec = ProtocolSpec::new(id, dom.n, dom.t, dom.max_value, k).map_err(|e| e.to_string())?;
    let task_spec = TaskSpec::new(kind, k, dom.max_value).map_err(|e| e.to_string())?;
    let outcome = sim::verify_protocol(&dom, &spec, &task_spec, true);
    let pass = outcome.pass();
    let mut csv = vec![vec!["f".into(), "max_decision_time".into()]];
    for (f, t) in &outcome.max_decision_time_by_f {
        csv.push(vec![f.to_string(), t.to_string()]);
    }
    Ok(Outcome {
        echo: json!({
            "verb": "verify",
            "protocol": protocol,
            "task": task,
            "k": k,
            "n": dom.n,
            "t": dom.t,
            "values": dom.value_count(),
            "horizon": dom.horizon,
        }),
        results: json!({ "pass": pass, "sweep": to_json(&outcome) }),
        exit_code: i32::from(!pass),
        csv: Some(csv),
    })
}

fn compare_cmd(
    a: &str,
    b: &str,
    k: u8,
    mode: &str,
    domain: &DomainArgs,
) -> Result<Outcome, String> {
    let dom = domain.domain()?;
    guard_sweep_size(&dom)?;
    let mode = parse_mode(mode)?;
    let spec_a = ProtocolSpec::new(parse_protocol(a)?, dom.n, dom.t, dom.max_value, k)
        .map_err(|e| e.to_string())?;
    let spec_b = ProtocolSpec::new(parse_protocol(b)?, dom.n, dom.t, dom.max_value, k)
        .map_err(|e| e.to_string())?;
    let report = match mode {
        SearchMode::PerProcess => search::compare(&spec_a, &spec_b, &dom),
        SearchMode::LastDecider => search::compare_last_decider(&spec_a, &spec_b, &dom),
    };
    Ok(Outcome {
        echo: json!({
            "verb": "compare",
            "a": a,
            "b": b,
            "k": k,
            "mode": mode.as_str(),
            "n": dom.n,
            "t": dom.t,
            "values": dom.value_count(),
            "horizon": dom.horizon,
        }),
        results: to_json(&report),
        exit_code: 0,
        csv: None,
    })
}

fn beat_search_cmd(
    target: &str,
    task: &str,
    k: u8,
    mode: &str,
    budget: &str,
    domain: &DomainArgs,
) -> Result<Outcome, String> {
    let dom = domain.domain()?;
    let mode = parse_mode(mode)?;
    let budget = budget
        .parse::<f64>()
        .ok()
        .filter(|b| *b >= 1.0 && b.is_finite())
        .map(|b| b as u64)
        .ok_or_else(|| format!("--budget {budget:?} is not a positive number"))?;
    let spec = ProtocolSpec::new(parse_protocol(target)?, dom.n, dom.t, dom.max_value, k)
        .map_err(|e| e.to_string())?;
    let task_spec =
        TaskSpec::new(parse_task(task)?, k, dom.max_value).map_err(|e| e.to_string())?;
    let echo = json!({
        "verb": "beat-search",
        "target": target,
        "task": task,
        "k": k,
        "mode": mode.as_str(),
        "budget": budget,
        "n": dom.n,
        "t": dom.t,
        "values": dom.value_count(),
        "horizon": dom.horizon,
    });
    match search::beat_search(&spec, &task_spec, &dom, mode, budget) {
        Ok(report) => {
            let (results, exit_code) = match &report.outcome {
                BeatOutcome::Witness {
                    table,
                    improvements,
                } => (
                    json!({
                        "outcome": "witness",
                        "beatable": true,
                        "nodes": report.nodes,
                        "classes": report.classes,
                        "adversaries": report.adversaries,
                        "improvements": to_json(improvements),
                        "table": table_json(table),
                    }),
                    1,
                ),
                BeatOutcome::Certificate => (
                    json!({
                        "outcome": "certificate",
                        "beatable": false,
                        "nodes": report.nodes,
                        "classes": report.classes,
                        "adversaries": report.adversaries,
                    }),
                    0,
                ),
            };
            Ok(Outcome {
                echo,
                results,
                exit_code,
                csv: None,
            })
        }
        Err(search::SearchError::BudgetExceeded { nodes }) => Ok(Outcome {
            echo,
            results: json!({ "outcome": "budget-exceeded", "nodes": nodes }),
            exit_code: 2,
            csv: None,
        }),
        Err(e) => Err(e.to_string()),
    }
}

fn table_json(table: &search::ProtocolTable) -> Json {
    let entries: Vec<Json> = table
        .entries()
        .iter()
        .map(|(view, decision)| {
            json!({
                "view": view_json(view),
                "decision": to_json(decision),
            })
        })
        .collect();
    json!({ "entries": entries, "size": table.len() })
}

fn view_json(view: &model::View) -> Json {
    json!({
        "owner": to_json(&view.owner()),
        "seen": to_json(&view.seen_nodes()),
        "edges": to_json(&view.edge_list()),
        "initial_values": to_json(&view.initial_values()),
    })
}

fn oracle_check_cmd(domain: &DomainArgs) -> Result<Outcome, String> {
    let dom = domain.domain()?;
    let report = oracle::agreement_sweep(&dom).map_err(|e| e.to_string())?;
    let pass = report.pass();
    Ok(Outcome {
        echo: json!({
            "verb": "oracle-check",
            "n": dom.n,
            "t": dom.t,
            "values": dom.value_count(),
            "horizon": dom.horizon,
        }),
        results: json!({ "pass": pass, "report": to_json(&report) }),
        exit_code: i32::from(!pass),
        csv: None,
    })
}

fn codec_check_cmd(
    protocol: &str,
    k: u8,
    verify_frames: bool,
    domain: &DomainArgs,
) -> Result<Outcome, String> {
    let dom = domain.domain()?;
    guard_sweep_size(&dom)?;
    let spec = ProtocolSpec::new(parse_protocol(protocol)?, dom.n, dom.t, dom.max_value, k)
        .map_err(|e| e.to_string())?;
    let outcome =
        codec::equivalence_sweep(&dom, &spec, verify_frames).map_err(|e| e.to_string())?;
    let pass = outcome.pass();
    Ok(Outcome {
        echo: json!({
            "verb": "codec-check",
            "protocol": protocol,
            "k": k,
            "verify_frames": verify_frames,
            "n": dom.n,
            "t": dom.t,
            "values": dom.value_count(),
            "horizon": dom.horizon,
        }),
        results: json!({ "pass": pass, "sweep": to_json(&outcome) }),
        exit_code: i32::from(!pass),
        csv: None,
    })
}

fn predicates_cmd(
    adversary: &Path,
    process: u8,
    time: Time,
    k: u8,
    values: u8,
) -> Result<Outcome, String> {
    if values == 0 || k == 0 {
        return Err("--values and --k must be at least 1".into());
    }
    let max_value = Value(values - 1);
    let adv = load_adversary(adversary, max_value)?;
    let p = ProcessId(process);
    let now = model::view(&adv, p, time).map_err(|e| e.to_string())?;
    let prev = if time > 0 {
        Some(model::view(&adv, p, time - 1).map_err(|e| e.to_string())?)
    } else {
        None
    };
    let kv = knowledge::known_values(&now, Some(k));
    let fk = knowledge::failure_knowledge(&now);
    let profile = knowledge::hidden_profile(&now);
    let binary = max_value == Value(1) && kv.vals.iter().all(|v| v.0 <= 1);
    let exists_correct: Json = (0..=max_value.0)
        .map(Value)
        .map(|v| {
            let ec = knowledge::knows_exists_correct(&now, prev.as_ref(), v, adv.t())
                .map_err(|e| e.to_string())?;
            Ok(json!({ "value": v.0, "holds": ec }))
        })
        .collect::<Result<Vec<Json>, String>>()?
        .into();
    let results = json!({
        "node": to_json(&model::Node::new(p, time)),
        "known_values": {
            "vals": to_json(&kv.vals),
            "min": to_json(&kv.min),
            "lows": to_json(&kv.lows),
        },
        "failure_knowledge": {
            "knownf": fk.knownf,
            "known_crashed_by": to_json(&fk.known_crashed_by),
        },
        "hidden_by_level": to_json(&profile.hidden_by_level),
        "hidden_capacity": profile.capacity,
        "hidden_path": knowledge::hidden_path_exists(&now),
        "hidden_path_below_top_variant": knowledge::hidden_path_exists_below_top(&now),
        "knows_exists_correct": exists_correct,
        "knows_majority_0": binary.then(|| knowledge::knows_majority(&now, Value(0)).unwrap()),
        "knows_majority_1": binary.then(|| knowledge::knows_majority(&now, Value(1)).unwrap()),
        "maj_vals": binary.then(|| knowledge::maj_vals(&now).unwrap().0),
        "view": view_json(&now),
    });
    Ok(Outcome {
        echo: json!({
            "verb": "predicates",
            "adversary": adversary.display().to_string(),
            "process": process,
            "time": time,
            "k": k,
            "values": values,
        }),
        results,
        exit_code: 0,
        csv: None,
    })
}

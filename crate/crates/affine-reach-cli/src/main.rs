//! Command-line front door for the affine reachability solver.
//!
//! Instances are JSON files carrying integers as decimal strings (plain
//! JSON integers are also accepted; floats are rejected). Result records
//! go to standard output, one JSON object per instance; diagnostics go to
//! standard error. Exit code 0 means every instance was decided (either
//! answer), 2 means a resource budget was exhausted, 1 means a usage,
//! parse, or validation error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use num_bigint::{BigInt, BigUint};
use serde::{Deserialize, Serialize};

use affine_reach::affine::{check_witness, AffineSystem, Domain, RleRun, RleWord};
use affine_reach::oracle::{
    bfs_oracle, knapsack_dp, knapsack_to_system, random_system, KnapsackInstance, Profile,
    ProfileClass,
};
use affine_reach::solver::decide;
use affine_reach::{Error, Limits};

#[derive(Parser)]
#[command(name = "affine-reach", version, about = "Reachability for finite sets of affine maps")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide one instance file and emit a result record.
    Decide {
        file: PathBuf,
        /// Include the run-length encoded witness in the record.
        #[arg(long)]
        witness: bool,
        /// Budget for regular-expression nodes held at once.
        #[arg(long, default_value_t = 1_000_000)]
        max_regex_nodes: usize,
        /// Echo the case trace to standard error.
        #[arg(long)]
        trace: bool,
    },
    /// Replay a witness file against an instance file.
    Check { file: PathBuf, witness_file: PathBuf },
    /// Run the bounded breadth-first oracle on an instance file.
    Oracle {
        file: PathBuf,
        /// Explore only values with magnitude at most this bound.
        #[arg(long, default_value_t = 1_000_000)]
        value_bound: u64,
        /// Explore at most this many map applications.
        #[arg(long, default_value_t = 40)]
        depth_bound: u32,
    },
    /// Decide every `.json` file in a directory, in file-name order.
    Batch { dir: PathBuf },
    /// Run the generator-backed self checks.
    Selftest,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let run = match cli.cmd {
        Cmd::Decide { file, witness, max_regex_nodes, trace } => {
            cmd_decide(&file, witness, max_regex_nodes, trace)
        }
        Cmd::Check { file, witness_file } => cmd_check(&file, &witness_file),
        Cmd::Oracle { file, value_bound, depth_bound } => {
            cmd_oracle(&file, value_bound, depth_bound)
        }
        Cmd::Batch { dir } => cmd_batch(&dir),
        Cmd::Selftest => cmd_selftest(),
    };
    match run {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// An integer that may arrive as a decimal string or a plain JSON
/// integer; floats are rejected.
#[derive(Deserialize)]
#[serde(untagged)]
enum IntField {
    Text(String),
    Number(serde_json::Number),
}

impl IntField {
    fn to_bigint(&self) -> Result<BigInt> {
        match self {
            IntField::Text(s) => {
                BigInt::from_str(s.trim()).with_context(|| format!("not an integer: {s:?}"))
            }
            IntField::Number(n) => {
                if let Some(v) = n.as_i64() {
                    Ok(BigInt::from(v))
                } else if let Some(v) = n.as_u64() {
                    Ok(BigInt::from(v))
                } else {
                    bail!("not an integer: {n} (use a decimal string for big or fractional-looking values)")
                }
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    domain: String,
    x: IntField,
    y: IntField,
    functions: Vec<(IntField, IntField)>,
}

fn load_instance(path: &Path) -> Result<AffineSystem> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let raw: InstanceFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let domain = match raw.domain.as_str() {
        "Z" => Domain::Integers,
        "N" => Domain::Naturals,
        other => bail!("domain must be \"Z\" or \"N\", got {other:?}"),
    };
    if raw.functions.is_empty() {
        bail!("functions must be nonempty");
    }
    let maps = raw
        .functions
        .iter()
        .map(|(a, b)| {
            Ok(affine_reach::AffineMap::new(a.to_bigint()?, b.to_bigint()?))
        })
        .collect::<Result<Vec<_>>>()?;
    let sys = AffineSystem::new(maps, raw.x.to_bigint()?, raw.y.to_bigint()?, domain)
        .with_context(|| format!("validating {}", path.display()))?;
    Ok(sys)
}

#[derive(Serialize)]
#[serde(untagged)]
enum ReachableField {
    Decided(bool),
    Exhausted(&'static str),
}

#[derive(Serialize)]
struct StatsRecord {
    regex_nodes: usize,
    clauses: usize,
    elapsed_ms: u128,
}

#[derive(Serialize)]
struct ResultRecord {
    reachable: ReachableField,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Vec<(usize, String)>>,
    case_trace: Vec<String>,
    stats: StatsRecord,
}

fn witness_field(w: &RleWord) -> Vec<(usize, String)> {
    w.runs.iter().map(|r| (r.index, r.count.to_string())).collect()
}

/// Decides one loaded instance; returns the record and the exit code.
fn decide_record(
    sys: &AffineSystem,
    include_witness: bool,
    limits: &Limits,
) -> Result<(ResultRecord, u8)> {
    let started = Instant::now();
    match decide(sys, limits) {
        Ok(decision) => {
            let witness = match (&decision.verdict.witness, include_witness) {
                (Some(w), true) => {
                    // re-verify before emission; an invalid witness here is
                    // an internal fault, not an input problem
                    if !check_witness(sys, w)? {
                        bail!("internal: produced witness failed verification");
                    }
                    Some(witness_field(w))
                }
                _ => None,
            };
            let record = ResultRecord {
                reachable: ReachableField::Decided(decision.verdict.reachable),
                witness,
                case_trace: decision.verdict.trace,
                stats: StatsRecord {
                    regex_nodes: decision.stats.peak_regex_nodes,
                    clauses: decision.stats.total_clauses,
                    elapsed_ms: started.elapsed().as_millis(),
                },
            };
            Ok((record, 0))
        }
        Err(Error::ResourceExceeded(what)) => {
            eprintln!("resource budget exhausted: {what}");
            let record = ResultRecord {
                reachable: ReachableField::Exhausted("resource-exceeded"),
                witness: None,
                case_trace: vec![format!("stopped: {what}")],
                stats: StatsRecord {
                    regex_nodes: 0,
                    clauses: 0,
                    elapsed_ms: started.elapsed().as_millis(),
                },
            };
            Ok((record, 2))
        }
        Err(other) => Err(other.into()),
    }
}

fn emit<T: Serialize>(record: &T) -> Result<()> {
    println!("{}", serde_json::to_string(record)?);
    Ok(())
}

fn cmd_decide(file: &Path, witness: bool, max_regex_nodes: usize, trace: bool) -> Result<u8> {
    let sys = load_instance(file)?;
    let limits = Limits::with_max_regex_nodes(max_regex_nodes);
    let (record, code) = decide_record(&sys, witness, &limits)?;
    if trace {
        for line in &record.case_trace {
            eprintln!("trace: {line}");
        }
    }
    emit(&record)?;
    Ok(code)
}

#[derive(Serialize)]
struct CheckRecord {
    verified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
}

/// Accepts either a bare `[[index, count], ...]` array or any object with
/// a `witness` field of that shape, so `decide` output can be replayed
/// directly.
fn load_witness(path: &Path) -> Result<RleWord> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let array = match &value {
        serde_json::Value::Array(a) => a,
        serde_json::Value::Object(o) => o
            .get("witness")
            .and_then(|w| w.as_array())
            .context("object has no witness array")?,
        _ => bail!("witness must be an array of [index, count] pairs"),
    };
    let mut runs = Vec::with_capacity(array.len());
    for entry in array {
        let pair = entry.as_array().filter(|p| p.len() == 2).with_context(|| {
            format!("witness entries must be [index, count] pairs, got {entry}")
        })?;
        let index = pair[0]
            .as_u64()
            .with_context(|| format!("bad map index {}", pair[0]))? as usize;
        let count = match &pair[1] {
            serde_json::Value::Number(n) => {
                let v = n.as_u64().with_context(|| format!("bad count {n}"))?;
                BigUint::from(v)
            }
            serde_json::Value::String(s) => BigUint::from_str(s.trim())
                .with_context(|| format!("bad count {s:?}"))?,
            other => bail!("bad count {other}"),
        };
        runs.push(RleRun::new(index, count));
    }
    Ok(RleWord::new(runs))
}

fn cmd_check(file: &Path, witness_file: &Path) -> Result<u8> {
    let sys = load_instance(file)?;
    let witness = load_witness(witness_file)?;
    match check_witness(&sys, &witness) {
        Ok(true) => {
            emit(&CheckRecord { verified: true, reason: None })?;
            Ok(0)
        }
        Ok(false) => {
            emit(&CheckRecord {
                verified: false,
                reason: Some("replay does not land on the target".into()),
            })?;
            Ok(0)
        }
        Err(Error::Precondition(why)) => {
            emit(&CheckRecord { verified: false, reason: Some(why) })?;
            Ok(0)
        }
        Err(Error::ResourceExceeded(why)) => {
            emit(&CheckRecord { verified: false, reason: Some(why) })?;
            Ok(2)
        }
        Err(other) => Err(other.into()),
    }
}

#[derive(Serialize)]
struct OracleRecord {
    found: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    length: Option<usize>,
}

fn cmd_oracle(file: &Path, value_bound: u64, depth_bound: u32) -> Result<u8> {
    let sys = load_instance(file)?;
    let answer = bfs_oracle(&sys, value_bound, depth_bound);
    let record = match answer.path() {
        Some(path) => OracleRecord {
            found: true,
            path: Some(path.seq.clone()),
            length: Some(path.len()),
        },
        None => OracleRecord { found: false, path: None, length: None },
    };
    emit(&record)?;
    Ok(0)
}

fn cmd_batch(dir: &Path) -> Result<u8> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading directory {}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    files.sort();
    let mut worst = 0u8;
    for file in &files {
        let sys = load_instance(file)?;
        let (record, code) = decide_record(&sys, true, &Limits::default())?;
        emit(&record)?;
        worst = worst.max(code);
    }
    Ok(worst)
}

fn cmd_selftest() -> Result<u8> {
    let limits = Limits::default();

    let mut oracle_paths = 0usize;
    for i in 0..100u64 {
        let domain = if i % 2 == 0 { Domain::Integers } else { Domain::Naturals };
        let profile = Profile::new(ProfileClass::Mixed, 1 + (i as usize % 3), domain);
        let sys = random_system(90_000 + i, &profile)
            .map_err(|e| anyhow::anyhow!("generator: {e}"))?;
        let decision = decide(&sys, &limits)?;
        let oracle = bfs_oracle(&sys, 100_000, 25);
        if oracle.found() {
            oracle_paths += 1;
            if !decision.verdict.reachable {
                bail!("selftest: oracle beat the solver on {}", sys.summary());
            }
        }
        if decision.verdict.reachable {
            let w = decision
                .verdict
                .witness
                .as_ref()
                .context("selftest: reachable without witness")?;
            if !check_witness(&sys, w)? {
                bail!("selftest: witness replay failed on {}", sys.summary());
            }
        }
    }
    eprintln!("selftest: oracle agreement on 100 systems ({oracle_paths} paths), witnesses verified");

    for w1 in 1..=9u64 {
        for w2 in 1..=9u64 {
            for capacity in 1..=25u64 {
                let inst = KnapsackInstance::new(vec![w1, w2], capacity).unwrap();
                let expected = knapsack_dp(&inst, &limits)?;
                let sys = knapsack_to_system(&inst, Domain::Integers);
                if decide(&sys, &limits)?.verdict.reachable != expected {
                    bail!("selftest: knapsack mismatch on ({w1},{w2}) capacity {capacity}");
                }
            }
        }
    }
    eprintln!("selftest: knapsack reduction matches the table on 2025 instances");

    let pinned = AffineSystem::from_i64(&[(2, 1), (1, -3)], 0, 6, Domain::Integers).unwrap();
    let d = decide(&pinned, &limits)?;
    let w = d.verdict.witness.as_ref().context("selftest: pinned witness missing")?;
    if !d.verdict.reachable || !check_witness(&pinned, w)? {
        bail!("selftest: pinned instance regressed");
    }
    let pinned = AffineSystem::from_i64(&[(1, -2)], 4, 1, Domain::Naturals).unwrap();
    if decide(&pinned, &limits)?.verdict.reachable {
        bail!("selftest: parity instance regressed");
    }
    eprintln!("selftest: pinned instances reproduce");
    Ok(0)
}

//! Benchmark suites.
//!
//! One spec per line, written as `key=value` tokens that mirror the `run`
//! flags (`workload=fixture-128 algorithm=alg6-unrolled unroll=8,4`), plus
//! `name=`, `baseline=` and `verify=`. A value may list alternatives with
//! `|` and integer ranges as `lo..hi` (step 1) or `lo..hi*2` (doubling);
//! each line expands to the cartesian product of its alternatives.
//! `baseline=NAME` compares each row with the row called NAME that runs the
//! same problem (shape, pattern, dtype, machine and seed).

use clap::Parser;

use crate::args::{OnOff, SpecArgs};
use crate::error::CliError;
use crate::spec::{self, geomean_of, Outcome, RunSpec};

#[derive(Debug, Parser)]
#[command(no_binary_name = true, args_override_self = true)]
struct SuiteLine {
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    baseline: Option<String>,
    #[arg(long, value_enum, default_value = "on")]
    verify: OnOff,
    #[command(flatten)]
    spec: SpecArgs,
}

/// One expanded suite entry.
#[derive(Debug, Clone)]
pub struct Entry {
    pub line: usize,
    pub name: String,
    pub baseline: Option<String>,
    pub verify: bool,
    pub spec: Result<RunSpec, CliError>,
}

fn expand_value(value: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for alt in value.split('|') {
        let range = alt.split_once("..").and_then(|(lo, rest)| {
            let (hi, doubling) = match rest.strip_suffix("*2") {
                Some(hi) => (hi, true),
                None => (rest, false),
            };
            Some((lo.parse::<u64>().ok()?, hi.parse::<u64>().ok()?, doubling))
        });
        match range {
            Some((lo, hi, _)) if lo > hi => return Err(format!("empty range `{alt}`")),
            Some((0, _, true)) => return Err(format!("doubling range `{alt}` must start above 0")),
            Some((lo, hi, doubling)) => {
                let mut v = lo;
                while v <= hi {
                    out.push(v.to_string());
                    v = if doubling { v * 2 } else { v + 1 };
                }
            }
            None => out.push(alt.to_string()),
        }
    }
    Ok(out)
}

/// Parses and expands a suite file.
pub fn parse(text: &str) -> Result<Vec<Entry>, CliError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| CliError::Input(format!("suite line {line_no}: {msg}"));
        let mut axes: Vec<(String, Vec<String>)> = Vec::new();
        for token in line.split_whitespace() {
            let (key, value) = token.split_once('=').ok_or_else(|| err(format!("expected key=value, got `{token}`")))?;
            axes.push((key.to_string(), expand_value(value).map_err(err)?));
        }
        let mut combos: Vec<Vec<String>> = vec![Vec::new()];
        for (key, values) in &axes {
            combos = combos
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut next = prefix.clone();
                        next.push(format!("--{key}"));
                        next.push(v.clone());
                        next
                    })
                })
                .collect();
        }
        for argv in combos {
            let parsed = SuiteLine::try_parse_from(&argv).map_err(|e| err(e.to_string().lines().next().unwrap_or("").to_string()))?;
            entries.push(Entry {
                line: line_no,
                name: parsed.name.unwrap_or_else(|| format!("line{line_no}")),
                baseline: parsed.baseline,
                verify: parsed.verify.on(),
                spec: RunSpec::resolve(&parsed.spec),
            });
        }
    }
    Ok(entries)
}

pub const HEADER: [&str; 21] = [
    "name", "line", "workload", "rows", "k", "cols", "pattern", "dtype", "vl", "line_bytes", "algorithm", "label",
    "b_stationary", "status", "total_instructions", "mem_elements", "mem_lines", "cost", "baseline", "cost_ratio",
    "memory_ratio",
];

/// Row status, also deciding the exit code of a bench run.
#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    VerifyFailed,
    Error(String),
}

pub struct Row {
    pub entry: Entry,
    pub status: Status,
    pub outcome: Option<Outcome>,
    pub ratios: Option<(f64, f64)>,
}

fn same_problem(a: &RunSpec, b: &RunSpec) -> bool {
    (a.rows, a.k, a.cols, a.pattern, a.dtype, a.vl, a.line_bytes, a.seed)
        == (b.rows, b.k, b.cols, b.pattern, b.dtype, b.vl, b.line_bytes, b.seed)
}

pub fn execute(entries: Vec<Entry>) -> Vec<Row> {
    let mut rows: Vec<Row> = entries
        .into_iter()
        .map(|entry| {
            let (status, outcome) = match &entry.spec {
                Err(e) => (Status::Error(e.to_string()), None),
                Ok(s) => match spec::run(s, entry.verify, false) {
                    Err(e) => (Status::Error(e.to_string()), None),
                    Ok(o) if o.oracle_ok == Some(false) => (Status::VerifyFailed, Some(o)),
                    Ok(o) => (Status::Ok, Some(o)),
                },
            };
            Row { entry, status, outcome, ratios: None }
        })
        .collect();
    for i in 0..rows.len() {
        let (Some(base_name), Ok(spec), Some(out)) = (&rows[i].entry.baseline, &rows[i].entry.spec, &rows[i].outcome) else {
            continue;
        };
        let base = rows.iter().find(|r| {
            &r.entry.name == base_name && r.entry.spec.as_ref().is_ok_and(|b| same_problem(b, spec)) && r.outcome.is_some()
        });
        if let Some(b) = base.and_then(|b| b.outcome.as_ref()) {
            let ratio = |c: f64, b: f64| if c == b { 1.0 } else { c / b };
            let ratios = (ratio(out.cost, b.cost), ratio(out.stats.memory_accesses() as f64, b.stats.memory_accesses() as f64));
            rows[i].ratios = Some(ratios);
        }
    }
    rows
}

fn fmt_f(v: f64) -> String {
    format!("{v:.6}")
}

/// CSV records: one per row, then one `geomean` record per candidate name
/// that has at least one ratio.
pub fn records(rows: &[Row]) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for r in rows {
        let e = &r.entry;
        let mut rec = vec![e.name.clone(), e.line.to_string()];
        match &e.spec {
            Ok(s) => rec.extend([
                s.workload.clone().unwrap_or_default(),
                s.rows.to_string(),
                s.k.to_string(),
                s.cols.to_string(),
                s.pattern.to_string(),
                s.dtype.to_string(),
                s.vl.to_string(),
                s.line_bytes.to_string(),
                s.kernel.algorithm.to_string(),
                s.label.clone(),
                s.kernel.b_stationary.to_string(),
            ]),
            Err(_) => rec.extend(std::iter::repeat_n(String::new(), 11)),
        }
        rec.push(match &r.status {
            Status::Ok => "ok".into(),
            Status::VerifyFailed => "verify-failed".into(),
            Status::Error(m) => format!("error: {m}"),
        });
        match &r.outcome {
            Some(o) => rec.extend([
                o.stats.total_instructions.to_string(),
                o.stats.memory_accesses().to_string(),
                o.stats.mem_lines_touched.to_string(),
                fmt_f(o.cost),
            ]),
            None => rec.extend(std::iter::repeat_n(String::new(), 4)),
        }
        rec.push(e.baseline.clone().unwrap_or_default());
        match r.ratios {
            Some((c, m)) => rec.extend([fmt_f(c), fmt_f(m)]),
            None => rec.extend([String::new(), String::new()]),
        }
        out.push(rec);
    }

    let mut names: Vec<&str> = Vec::new();
    for r in rows.iter().filter(|r| r.ratios.is_some()) {
        if !names.contains(&r.entry.name.as_str()) {
            names.push(&r.entry.name);
        }
    }
    for name in names {
        let group: Vec<&Row> = rows.iter().filter(|r| r.entry.name == name && r.ratios.is_some()).collect();
        let costs: Vec<f64> = group.iter().filter_map(|r| r.ratios.map(|x| x.0)).collect();
        let mems: Vec<f64> = group.iter().filter_map(|r| r.ratios.map(|x| x.1)).collect();
        let mut rec = vec![String::new(); HEADER.len()];
        rec[0] = name.to_string();
        rec[13] = "geomean".into();
        rec[18] = group[0].entry.baseline.clone().unwrap_or_default();
        rec[19] = geomean_of(&costs).map(fmt_f).unwrap_or_default();
        rec[20] = geomean_of(&mems).map(fmt_f).unwrap_or_default();
        out.push(rec);
    }
    out
}

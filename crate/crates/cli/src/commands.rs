use std::fs;
use std::path::Path;

use nmvec::io::{self, Header};
use nmvec::sparse::full_column_overhead;
use nmvec::workload::{random_dense, rng};
use nmvec::{DType, DenseMatrix, Element, StructuredSparseMatrix};
use serde::Serialize;
use serde_json::json;

use crate::args::{BenchArgs, GenArgs, InfoArgs, MulticoreArgs, PruneArgs, RunArgs};
use crate::error::CliError;
use crate::spec::{self, with_dtype, RunSpec};
use crate::suite::{self, Entry, Row, Status};

pub const SCHEMA: u32 = 1;

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn csv_text(header: &[&str], records: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| CliError::Input(e.to_string());
    w.write_record(header).map_err(io_err)?;
    for r in records {
        w.write_record(r).map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn gen(a: &GenArgs) -> Result<(), CliError> {
    with_dtype!(a.dtype, T => gen_typed::<T>(a))
}

fn gen_typed<T: Element>(a: &GenArgs) -> Result<(), CliError> {
    let dense = random_dense::<T, _>(a.rows, a.cols, &mut rng(a.seed));
    let bytes = match a.pattern {
        None if is_csv(&a.out) => io::write_csv(&dense).into_bytes(),
        None => io::encode_dense(&dense),
        Some(p) => {
            let sparse = StructuredSparseMatrix::prune(&dense.pad_cols_to(p.m()), p).map_err(|e| CliError::Config(e.to_string()))?;
            if is_csv(&a.out) {
                io::write_csv(&sparse.decode()).into_bytes()
            } else {
                io::encode_sparse(&sparse)
            }
        }
    };
    write(&a.out, bytes)
}

#[derive(Debug, Serialize)]
struct PruneSummary {
    rows: usize,
    cols: usize,
    padded_cols: usize,
    pattern: String,
    blocks: usize,
    overfull_blocks: usize,
    nonzeros_before: usize,
    nonzeros_after: usize,
}

pub fn prune(a: &PruneArgs) -> Result<(), CliError> {
    let bytes = read(&a.input)?;
    let dtype = match io::peek_header(&bytes) {
        Ok(Header::Dense { dtype, .. }) => dtype,
        Ok(Header::Sparse { .. }) => return Err(CliError::Input(format!("{} is already structured-sparse", a.input.display()))),
        Err(_) => a.dtype,
    };
    let summary = with_dtype!(dtype, T => prune_typed::<T>(a, &bytes)?);
    outln!(
        "{} blocks of {} ({}x{} padded to {} cols): {} over-full, {} of {} non-zeros dropped",
        summary.blocks,
        summary.pattern,
        summary.rows,
        summary.cols,
        summary.padded_cols,
        summary.overfull_blocks,
        summary.nonzeros_before - summary.nonzeros_after,
        summary.nonzeros_before,
    );
    Ok(())
}

fn prune_typed<T: Element>(a: &PruneArgs, bytes: &[u8]) -> Result<PruneSummary, CliError> {
    let dense: DenseMatrix<T> = if bytes.starts_with(io::DENSE_MAGIC) {
        io::decode_dense(bytes)?
    } else {
        let text = std::str::from_utf8(bytes).map_err(|_| CliError::Input(format!("{} is neither SSDM nor CSV", a.input.display())))?;
        io::read_csv(text)?
    };
    let (n, m) = (a.pattern.n(), a.pattern.m());
    let padded = dense.pad_cols_to(m);
    let mut overfull = 0;
    for r in 0..padded.rows() {
        overfull += padded.row(r).chunks(m).filter(|b| b.iter().filter(|v| !v.is_zero()).count() > n).count();
    }
    let sparse = StructuredSparseMatrix::prune(&padded, a.pattern).map_err(|e| CliError::Config(e.to_string()))?;
    write(&a.out, io::encode_sparse(&sparse))?;
    Ok(PruneSummary {
        rows: dense.rows(),
        cols: dense.cols(),
        padded_cols: padded.cols(),
        pattern: a.pattern.to_string(),
        blocks: padded.rows() * (padded.cols() / m),
        overfull_blocks: overfull,
        nonzeros_before: dense.count_nonzeros(),
        nonzeros_after: sparse.decode().count_nonzeros(),
    })
}

pub fn info(a: &InfoArgs) -> Result<(), CliError> {
    let bytes = read(&a.file)?;
    let header = io::peek_header(&bytes)?;
    let report = with_dtype!(header.dtype(), T => info_typed::<T>(&header, &bytes)?);
    if a.json {
        outln!("{}", serde_json::to_string_pretty(&report).expect("json"));
    } else {
        let field = |k: &str| report[k].to_string().trim_matches('"').to_string();
        outln!("kind: {}", field("kind"));
        outln!("dtype: {}", field("dtype"));
        outln!("shape: {}x{}", field("rows"), field("cols"));
        outln!("pattern: {}", field("pattern"));
        outln!("density: {}", field("density"));
        outln!("nonzeros: {}", field("nonzeros"));
        if header_is_sparse(&header) {
            outln!("stored_slots: {}", field("stored_slots"));
            outln!("full_column_overhead: {}", field("full_column_overhead"));
        }
    }
    Ok(())
}

fn header_is_sparse(h: &Header) -> bool {
    matches!(h, Header::Sparse { .. })
}

fn info_typed<T: Element>(header: &Header, bytes: &[u8]) -> Result<serde_json::Value, CliError> {
    let (rows, cols) = header.shape();
    let dtype: DType = header.dtype();
    Ok(match header {
        Header::Dense { .. } => {
            let d = io::decode_dense::<T>(bytes)?;
            json!({
                "kind": "dense", "dtype": dtype, "rows": rows, "cols": cols, "pattern": "dense",
                "density": 1.0, "nonzeros": d.count_nonzeros(),
            })
        }
        Header::Sparse { pattern, .. } => {
            let s = io::decode_sparse::<T>(bytes)?;
            json!({
                "kind": "structured-sparse", "dtype": dtype, "rows": rows, "cols": cols,
                "pattern": pattern.to_string(), "density": pattern.density(),
                "nonzeros": s.values().iter().filter(|v| !v.is_zero()).count(),
                "stored_slots": s.values().len(),
                "full_column_overhead": full_column_overhead(&s, dtype.size_bytes() as u32 * 8),
            })
        }
    })
}

fn run_json(spec: &RunSpec, o: &spec::Outcome) -> serde_json::Value {
    json!({
        "schema": SCHEMA,
        "spec": spec,
        "stats": o.stats,
        "mem_elements": o.stats.memory_accesses(),
        "mem_lines": o.stats.mem_lines_touched,
        "cost": o.cost,
        "oracle_ok": o.oracle_ok,
        "output_digest": o.digest,
    })
}

pub fn run(a: &RunArgs) -> Result<(), CliError> {
    let spec = RunSpec::resolve(&a.spec)?;
    let o = spec::run(&spec, a.verify.on(), a.trace.is_some())?;
    if let Some(path) = &a.trace {
        spec::write_trace(path, &o.trace)?;
    }
    if a.json {
        outln!("{}", serde_json::to_string_pretty(&run_json(&spec, &o)).expect("json"));
    } else if a.csv {
        let status = if o.oracle_ok == Some(false) { Status::VerifyFailed } else { Status::Ok };
        let entry = Entry { line: 0, name: spec.label.clone(), baseline: None, verify: a.verify.on(), spec: Ok(spec.clone()) };
        let row = Row { entry, status, outcome: Some(o.clone()), ratios: None };
        out!("{}", csv_text(&suite::HEADER, &suite::records(&[row]))?);
    } else {
        print_text(&spec, &o);
    }
    match o.oracle_ok {
        Some(false) => Err(CliError::Verify(format!("{} output differs from the reference", spec.label))),
        _ => Ok(()),
    }
}

fn print_text(spec: &RunSpec, o: &spec::Outcome) {
    outln!(
        "{} on {}x{}x{} ({} {}, vl {})",
        spec.label, spec.rows, spec.k, spec.cols, spec.pattern, spec.dtype, spec.vl
    );
    for class in nmvec::InstrClass::ALL {
        let n = o.stats.count(class);
        if n > 0 {
            outln!("  {:<14} {n}", class.name());
        }
    }
    outln!("  {:<14} {}", "total", o.stats.total_instructions);
    outln!("mem elements: {} loaded, {} stored", o.stats.mem_elements_loaded, o.stats.mem_elements_stored);
    outln!("mem lines: {}", o.stats.mem_lines_touched);
    outln!("cost ({}): {}", spec.weights, o.cost);
    match o.oracle_ok {
        Some(true) => outln!("oracle: ok"),
        Some(false) => outln!("oracle: MISMATCH"),
        None => outln!("oracle: skipped"),
    }
    outln!("digest: {}", o.digest);
}

pub fn bench(a: &BenchArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.suite).map_err(|e| CliError::Input(format!("{}: {e}", a.suite.display())))?;
    let rows = suite::execute(suite::parse(&text)?);
    let out = csv_text(&suite::HEADER, &suite::records(&rows))?;
    match &a.out {
        Some(p) => write(p, out)?,
        None => out!("{out}"),
    }
    let failed = rows.iter().filter(|r| r.status == Status::VerifyFailed).count();
    let errors = rows.iter().filter(|r| matches!(r.status, Status::Error(_))).count();
    if failed > 0 {
        return Err(CliError::Verify(format!("{failed} suite rows did not match the reference")));
    }
    if errors > 0 {
        return Err(CliError::Config(format!("{errors} suite rows could not run")));
    }
    Ok(())
}

pub fn multicore(a: &MulticoreArgs) -> Result<(), CliError> {
    let cores = a
        .cores
        .split(',')
        .map(|c| c.trim().parse::<usize>().ok().filter(|&n| n > 0))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| CliError::Config(format!("--cores expects positive integers, got `{}`", a.cores)))?;
    let spec = RunSpec::resolve(&a.spec)?;
    let runs = spec::multicore(&spec, &cores, a.verify.on())?;
    let digests_match = runs.windows(2).all(|w| w[0].output_digest == w[1].output_digest);
    let oracle_ok = runs.iter().all(|r| r.oracle_ok != Some(false));
    let report = json!({
        "schema": SCHEMA,
        "spec": spec,
        "runs": runs,
        "digests_match": digests_match,
    });
    outln!("{}", serde_json::to_string_pretty(&report).expect("json"));
    if !digests_match {
        return Err(CliError::Verify("outputs differ between core counts".into()));
    }
    if !oracle_ok {
        return Err(CliError::Verify("multicore output differs from the reference".into()));
    }
    Ok(())
}

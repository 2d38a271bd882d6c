//! Turning flags into a runnable problem, and running it.

use std::path::Path;

use nmvec::analysis::geomean;
use nmvec::kernels::{multicore_run, tiled_matmul};
use nmvec::machine::TraceEntry;
use nmvec::workload::{digest, preset, random_problem};
use nmvec::{
    cost, Algorithm, CostWeights, DType, DenseMatrix, Element, ExecStats, KernelConfig, KernelError, MachineConfig,
    MatmulProblem, Shape, SparsityPattern, VectorMachine,
};
use serde::Serialize;

use crate::args::SpecArgs;
use crate::error::CliError;

/// Calls `$body` with `$T` bound to the Rust type of a runtime dtype.
macro_rules! with_dtype {
    ($dtype:expr, $T:ident => $body:expr) => {
        match $dtype {
            nmvec::DType::I32 => {
                type $T = i32;
                $body
            }
            nmvec::DType::I64 => {
                type $T = i64;
                $body
            }
            nmvec::DType::F32 => {
                type $T = f32;
                $body
            }
            nmvec::DType::F64 => {
                type $T = f64;
                $body
            }
        }
    };
}
pub(crate) use with_dtype;

/// Everything a run needs, validated.
#[derive(Debug, Clone, Serialize)]
pub struct RunSpec {
    pub workload: Option<String>,
    pub rows: usize,
    pub k: usize,
    /// `k` rounded up to whole blocks.
    pub inner: usize,
    pub cols: usize,
    #[serde(serialize_with = "display")]
    pub pattern: SparsityPattern,
    pub dtype: DType,
    pub vl: usize,
    pub line_bytes: usize,
    pub label: String,
    pub kernel: KernelConfig,
    pub seed: u64,
    pub weights: String,
    #[serde(skip)]
    pub cost_weights: CostWeights,
}

fn display<S: serde::Serializer, D: std::fmt::Display>(v: &D, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn parse_pair(text: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Config(format!("--unroll expects two positive integers `a,b`, got `{text}`"));
    let (a, b) = text.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

pub fn load_weights(spec: &str) -> Result<CostWeights, CliError> {
    if let Some(w) = CostWeights::profile(spec) {
        return Ok(w);
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| CliError::Input(format!("weights `{spec}` is neither a profile nor a readable file: {e}")))?;
    text.parse().map_err(|e| CliError::Input(format!("{spec}: {e}")))
}

impl RunSpec {
    pub fn resolve(a: &SpecArgs) -> Result<Self, CliError> {
        let (rows, k, cols) = match &a.workload {
            Some(name) => {
                let w = preset(name).ok_or_else(|| CliError::Config(format!("unknown workload `{name}`")))?;
                (w.shape.rows, w.shape.inner, w.shape.cols)
            }
            None => (a.rows, a.k, a.cols),
        };
        MachineConfig::new(a.vl).map_err(|e| CliError::Config(e.to_string()))?;

        let mut kernel = KernelConfig::new(a.algorithm).with_tile(a.tile_rows, a.tile_base).with_b_stationary(a.b_stationary.on());
        // Unrolled kernels default to their strongest setups.
        let unroll = match (&a.unroll, a.algorithm) {
            (Some(text), _) => Some(parse_pair(text)?),
            (None, Algorithm::Alg3SUnrolled) => Some((16, 8)),
            (None, Algorithm::Alg6Unrolled) => Some((8, 4)),
            (None, _) => None,
        };
        if let Some((x, y)) = unroll {
            match a.algorithm {
                Algorithm::Alg6Unrolled => (kernel.outer_unroll, kernel.mid_unroll) = (x, y),
                _ => (kernel.inner_unroll, kernel.outer_unroll) = (x, y),
            }
        }
        nmvec::kernels::register_budget(&kernel)?;

        let m = a.pattern.m();
        Ok(Self {
            workload: a.workload.clone(),
            rows,
            k,
            inner: k.div_ceil(m) * m,
            cols,
            pattern: a.pattern,
            dtype: a.dtype,
            vl: a.vl,
            line_bytes: a.line_bytes,
            label: kernel.label(),
            kernel,
            seed: a.seed,
            weights: a.weights.clone(),
            cost_weights: load_weights(&a.weights)?,
        })
    }

    pub fn machine(&self) -> MachineConfig {
        MachineConfig::new(self.vl)
            .expect("checked in resolve")
            .with_line_bytes(self.line_bytes)
            .with_element_bytes(self.dtype.size_bytes())
    }

    pub fn shape(&self) -> Shape {
        Shape::new(self.rows, self.k, self.cols)
    }

    fn problem<T: Element>(&self) -> Result<MatmulProblem<T>, CliError> {
        Ok(random_problem::<T>(self.shape(), self.pattern, self.seed)?)
    }
}

/// Result of one single-machine run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub stats: ExecStats,
    pub cost: f64,
    pub oracle_ok: Option<bool>,
    pub digest: String,
    pub trace: Vec<TraceEntry>,
}

/// Integer outputs must match exactly; floating-point ones within a few ulps
/// of the largest reference magnitude per accumulated term.
fn matches_reference<T: Element>(got: &DenseMatrix<T>, want: &DenseMatrix<T>, terms: usize) -> bool {
    if got.rows() != want.rows() || got.cols() != want.cols() {
        return false;
    }
    if T::DTYPE.is_integer() {
        return got.data() == want.data();
    }
    let eps = if T::DTYPE == DType::F32 { f32::EPSILON as f64 } else { f64::EPSILON };
    let scale = want.data().iter().filter_map(|v| v.to_f64()).fold(1.0f64, |acc, v| acc.max(v.abs()));
    let tol = 4.0 * eps * scale * (terms.max(1) as f64);
    got.data().iter().zip(want.data()).all(|(g, w)| match (g.to_f64(), w.to_f64()) {
        (Some(g), Some(w)) => (g - w).abs() <= tol,
        _ => false,
    })
}

fn run_typed<T: Element>(spec: &RunSpec, verify: bool, trace: bool) -> Result<Outcome, CliError> {
    let problem = spec.problem::<T>()?;
    let mut vm = VectorMachine::<T>::new(spec.machine());
    if trace {
        vm.enable_trace();
    }
    let run = tiled_matmul(&mut vm, &problem, &spec.kernel)?;
    let oracle_ok = verify.then(|| matches_reference(&run.c, &problem.reference(), problem.pattern().stored_per_row(problem.inner())));
    Ok(Outcome {
        stats: run.stats,
        cost: cost(&run.stats, &spec.cost_weights),
        oracle_ok,
        digest: digest(&run.c),
        trace: vm.take_trace(),
    })
}

pub fn run(spec: &RunSpec, verify: bool, trace: bool) -> Result<Outcome, CliError> {
    with_dtype!(spec.dtype, T => run_typed::<T>(spec, verify, trace))
}

#[derive(Debug, Clone, Serialize)]
pub struct CoreReport {
    pub core: usize,
    pub stripes: Vec<usize>,
    pub stats: ExecStats,
    pub cost: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MulticoreReport {
    pub cores: usize,
    pub per_core: Vec<CoreReport>,
    pub merged: ExecStats,
    pub merged_cost: f64,
    /// Cost of the busiest core, a proxy for wall-clock time.
    pub critical_path_cost: f64,
    pub oracle_ok: Option<bool>,
    pub output_digest: String,
}

fn multicore_typed<T: Element>(spec: &RunSpec, cores: &[usize], verify: bool) -> Result<Vec<MulticoreReport>, CliError> {
    let problem = spec.problem::<T>()?;
    let reference = verify.then(|| problem.reference());
    let terms = problem.pattern().stored_per_row(problem.inner());
    let mut out = Vec::new();
    for &n in cores {
        let run = multicore_run(spec.machine(), &problem, &spec.kernel, n)?;
        let per_core: Vec<CoreReport> = run
            .cores
            .iter()
            .map(|c| CoreReport { core: c.core, stripes: c.stripes.clone(), stats: c.stats, cost: cost(&c.stats, &spec.cost_weights) })
            .collect();
        out.push(MulticoreReport {
            cores: n,
            critical_path_cost: per_core.iter().map(|c| c.cost).fold(0.0, f64::max),
            merged_cost: cost(&run.merged, &spec.cost_weights),
            merged: run.merged,
            per_core,
            oracle_ok: reference.as_ref().map(|r| matches_reference(&run.c, r, terms)),
            output_digest: digest(&run.c),
        });
    }
    Ok(out)
}

pub fn multicore(spec: &RunSpec, cores: &[usize], verify: bool) -> Result<Vec<MulticoreReport>, CliError> {
    with_dtype!(spec.dtype, T => multicore_typed::<T>(spec, cores, verify))
}

pub fn write_trace(path: &Path, trace: &[TraceEntry]) -> Result<(), CliError> {
    let mut text = String::with_capacity(trace.len() * 24);
    for e in trace {
        text.push_str(&e.to_string());
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Geometric mean that ignores non-positive and non-finite entries.
pub fn geomean_of(values: &[f64]) -> Option<f64> {
    let clean: Vec<f64> = values.iter().copied().filter(|v| v.is_finite() && *v > 0.0).collect();
    geomean(&clean)
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        CliError::Config(e.to_string())
    }
}

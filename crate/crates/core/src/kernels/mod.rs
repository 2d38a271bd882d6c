//! Matrix-multiplication kernels expressed as instruction streams on a
//! [`VectorMachine`].
//!
//! Every kernel computes `C = A x B` row by row: each stored non-zero of a
//! row of A scales one row of B, and the scaled rows accumulate into the
//! matching row of C. Columns of B and C are processed in stripes of at most
//! `vl_max` columns; the last stripe runs at a reduced vector length.
//!
//! Two kernel families exist:
//!
//! * row-wise kernels that use only standard vector instructions (the dense
//!   `Dense1..3` variants, and the structured-sparse `Alg1S..3S` variants with
//!   unrolled and full-column flavours); they load one row of B per stored
//!   non-zero;
//! * `vindexmac` kernels that keep a tile of `L` rows of B in vector registers
//!   and read the row selected by a non-zero's column index straight from the
//!   register file.

mod indexmac;
mod layout;
mod multicore;
mod rowwise;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::element::Element;
use crate::machine::{ExecStats, MachineError, VectorMachine, NUM_VREGS};
use crate::sparse::{DenseMatrix, SparseError, SparsityPattern, StructuredSparseMatrix, Violation};

pub use indexmac::{phase_count, select_schedule, VindexmacSchedule};
pub use multicore::{multicore_run, stripe_assignment, CoreRun, MulticoreRun};

use layout::Layout;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KernelError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error("invalid sparse operand: {0}")]
    Validation(Violation),
    #[error("register budget exceeded: {vregs} vector and {sregs} scalar registers needed, {limit} available")]
    BudgetExceeded { vregs: usize, sregs: usize, limit: usize },
    #[error("A has {cols} columns but the tile holds {tile_rows} rows of B")]
    TileMismatch { cols: usize, tile_rows: usize },
    #[error("A has {cols} columns but {phases} phases of {tile_rows} rows cover {expected}")]
    PhaseMismatch { cols: usize, phases: usize, tile_rows: usize, expected: usize },
    #[error("invalid kernel configuration: {0}")]
    InvalidConfig(String),
}

/// Kernel selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// Dense A row in a vector register, elements extracted with `vmv.x.s` and slides.
    Dense1,
    /// Dense A elements loaded one by one into scalar registers.
    Dense2,
    /// Dense A row in a vector register, elements broadcast with `vrgather.vx`.
    Dense3,
    Alg1S,
    Alg2S,
    Alg3S,
    /// `Alg3S` with interleaved inner/outer unrolling and shared index arithmetic.
    Alg3SUnrolled,
    /// `Alg3S` over absolute column indexes (no index recovery).
    Alg3SFc,
    /// One tile of B resident in registers, consumed with `vindexmac`.
    Alg5Vimac,
    /// Full rows of non-zeros, tiles of B reloaded in phases.
    Alg6Vimac,
    Alg6Unrolled,
}

impl Algorithm {
    pub const ALL: [Algorithm; 11] = [
        Algorithm::Dense1,
        Algorithm::Dense2,
        Algorithm::Dense3,
        Algorithm::Alg1S,
        Algorithm::Alg2S,
        Algorithm::Alg3S,
        Algorithm::Alg3SUnrolled,
        Algorithm::Alg3SFc,
        Algorithm::Alg5Vimac,
        Algorithm::Alg6Vimac,
        Algorithm::Alg6Unrolled,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dense1 => "dense1",
            Algorithm::Dense2 => "dense2",
            Algorithm::Dense3 => "dense3",
            Algorithm::Alg1S => "alg1s",
            Algorithm::Alg2S => "alg2s",
            Algorithm::Alg3S => "alg3s",
            Algorithm::Alg3SUnrolled => "alg3s-unrolled",
            Algorithm::Alg3SFc => "alg3s-fc",
            Algorithm::Alg5Vimac => "alg5",
            Algorithm::Alg6Vimac => "alg6",
            Algorithm::Alg6Unrolled => "alg6-unrolled",
        }
    }

    pub fn is_dense(self) -> bool {
        matches!(self, Algorithm::Dense1 | Algorithm::Dense2 | Algorithm::Dense3)
    }

    pub fn uses_vindexmac(self) -> bool {
        matches!(self, Algorithm::Alg5Vimac | Algorithm::Alg6Vimac | Algorithm::Alg6Unrolled)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        let key = match key.as_str() {
            "alg5-vimac" | "alg5-vindexmac" => "alg5",
            "alg6-vimac" | "alg6-vindexmac" => "alg6",
            "spmm" => "alg3s-unrolled",
            "proposed" => "alg6-unrolled",
            other => other,
        };
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == key)
            .ok_or_else(|| KernelError::InvalidConfig(format!("unknown algorithm `{s}`")))
    }
}

/// Dense-A kernel variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenseVariant {
    SlideExtract,
    ScalarLoad,
    Gather,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct KernelConfig {
    #[serde(serialize_with = "ser_display")]
    pub algorithm: Algorithm,
    pub inner_unroll: usize,
    pub outer_unroll: usize,
    /// Unroll factor of the phase loop of the row-order `vindexmac` schedule.
    pub mid_unroll: usize,
    /// Rows of B per resident tile (`L`).
    pub tile_rows: usize,
    /// First vector register of the B tile.
    pub tile_base: usize,
    /// Keep each B tile resident while every row of A is processed against it.
    pub b_stationary: bool,
}

fn ser_display<S: serde::Serializer, D: fmt::Display>(v: &D, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

impl KernelConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            inner_unroll: 1,
            outer_unroll: 1,
            mid_unroll: 1,
            tile_rows: 16,
            tile_base: 16,
            b_stationary: true,
        }
    }

    /// Unrolled `Alg3S`; `spmm(16, 8)` is the strongest standard-ISA setup.
    pub fn spmm(inner: usize, outer: usize) -> Self {
        Self { inner_unroll: inner, outer_unroll: outer, ..Self::new(Algorithm::Alg3SUnrolled) }
    }

    /// Unrolled `vindexmac` kernel; `proposed(8, 4)` is the strongest setup.
    pub fn proposed(outer: usize, mid: usize) -> Self {
        Self { outer_unroll: outer, mid_unroll: mid, ..Self::new(Algorithm::Alg6Unrolled) }
    }

    pub fn with_b_stationary(mut self, on: bool) -> Self {
        self.b_stationary = on;
        self
    }

    pub fn with_tile(mut self, tile_rows: usize, tile_base: usize) -> Self {
        self.tile_rows = tile_rows;
        self.tile_base = tile_base;
        self
    }

    /// Rows of A processed together; rolled kernels always use one.
    pub fn effective_outer(&self) -> usize {
        match self.algorithm {
            Algorithm::Alg3SUnrolled | Algorithm::Alg6Unrolled => self.outer_unroll,
            _ => 1,
        }
    }

    pub fn effective_inner(&self) -> usize {
        match self.algorithm {
            Algorithm::Alg3SUnrolled => self.inner_unroll,
            _ => 1,
        }
    }

    pub fn effective_mid(&self) -> usize {
        match self.algorithm {
            Algorithm::Alg6Unrolled => self.mid_unroll,
            _ => 1,
        }
    }

    /// Short label, e.g. `SpMM(16,8)` or `Proposed(8,4)`.
    pub fn label(&self) -> String {
        match self.algorithm {
            Algorithm::Alg3SUnrolled => format!("SpMM({},{})", self.inner_unroll, self.outer_unroll),
            Algorithm::Alg6Unrolled => format!("Proposed({},{})", self.outer_unroll, self.mid_unroll),
            a => a.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct RegisterBudget {
    pub vregs: usize,
    pub sregs: usize,
}

/// Registers a configuration needs; errors when the vector file cannot hold them.
pub fn register_budget(config: &KernelConfig) -> Result<RegisterBudget, KernelError> {
    if config.inner_unroll == 0 || config.outer_unroll == 0 || config.mid_unroll == 0 {
        return Err(KernelError::InvalidConfig("unroll factors must be at least 1".into()));
    }
    let u = config.effective_outer();
    let l = config.tile_rows;
    let budget = match config.algorithm {
        Algorithm::Dense1 => RegisterBudget { vregs: 3, sregs: 1 },
        Algorithm::Dense2 => RegisterBudget { vregs: 2, sregs: 1 },
        Algorithm::Dense3 => RegisterBudget { vregs: 4, sregs: 0 },
        Algorithm::Alg1S => RegisterBudget { vregs: 3, sregs: 2 },
        Algorithm::Alg2S => RegisterBudget { vregs: 2, sregs: 2 },
        Algorithm::Alg3S | Algorithm::Alg3SFc => RegisterBudget { vregs: 4, sregs: 1 },
        Algorithm::Alg3SUnrolled => RegisterBudget { vregs: 4 * u, sregs: u },
        Algorithm::Alg5Vimac | Algorithm::Alg6Vimac | Algorithm::Alg6Unrolled => {
            RegisterBudget { vregs: l + 2 * u, sregs: u }
        }
    };
    if budget.vregs > NUM_VREGS {
        return Err(KernelError::BudgetExceeded { vregs: budget.vregs, sregs: budget.sregs, limit: NUM_VREGS });
    }
    if config.algorithm.uses_vindexmac() {
        if l == 0 {
            return Err(KernelError::InvalidConfig("tile must hold at least one row".into()));
        }
        if config.tile_base + l > NUM_VREGS || 2 * u > config.tile_base {
            return Err(KernelError::InvalidConfig(format!(
                "tile v{}..v{} overlaps the {} accumulator/value registers or leaves the register file",
                config.tile_base,
                config.tile_base + l - 1,
                2 * u
            )));
        }
    }
    Ok(budget)
}

/// `C = A x B` with structured-sparse A.
#[derive(Debug, Clone, PartialEq)]
pub struct MatmulProblem<T> {
    pub a: StructuredSparseMatrix<T>,
    pub b: DenseMatrix<T>,
}

impl<T: Element> MatmulProblem<T> {
    pub fn new(a: StructuredSparseMatrix<T>, b: DenseMatrix<T>) -> Result<Self, KernelError> {
        if a.cols() != b.rows() {
            return Err(KernelError::Shape(format!(
                "A is {}x{} but B is {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            )));
        }
        if let Some(v) = a.validate().first() {
            return Err(KernelError::Validation(*v));
        }
        Ok(Self { a, b })
    }

    /// Builds a problem from dense operands of any inner dimension; A is
    /// zero-padded to whole blocks (and B with matching zero rows), then encoded.
    pub fn from_dense(a: &DenseMatrix<T>, b: &DenseMatrix<T>, pattern: SparsityPattern) -> Result<Self, KernelError> {
        if a.cols() != b.rows() {
            return Err(KernelError::Shape(format!("A has {} columns, B has {} rows", a.cols(), b.rows())));
        }
        let a = a.pad_cols_to(pattern.m());
        let b = b.pad_rows_to(a.cols());
        Self::new(StructuredSparseMatrix::encode(&a, pattern)?, b)
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn inner(&self) -> usize {
        self.a.cols()
    }

    pub fn cols(&self) -> usize {
        self.b.cols()
    }

    pub fn pattern(&self) -> SparsityPattern {
        self.a.pattern()
    }

    /// Scalar triple-loop reference result over the decoded A.
    pub fn reference(&self) -> DenseMatrix<T> {
        self.a.decode().matmul_reference(&self.b).expect("shapes checked at construction")
    }
}

/// Output matrix and the counters of one kernel execution.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRun<T> {
    pub c: DenseMatrix<T>,
    pub stats: ExecStats,
}

/// Column stripes `(first column, width)` for a given vector length.
pub fn stripes(cols: usize, vl_max: usize) -> Vec<(usize, usize)> {
    (0..cols).step_by(vl_max).map(|c0| (c0, vl_max.min(cols - c0))).collect()
}

/// Shape-general driver: runs `config` over every column stripe of B and,
/// for `vindexmac` kernels, over every segment of A's columns.
pub fn tiled_matmul<T: Element>(
    machine: &mut VectorMachine<T>,
    problem: &MatmulProblem<T>,
    config: &KernelConfig,
) -> Result<KernelRun<T>, KernelError> {
    let all: Vec<usize> = (0..stripes(problem.cols(), machine.vl_max()).len()).collect();
    execute(machine, problem, config, &all)
}

pub(crate) fn execute<T: Element>(
    machine: &mut VectorMachine<T>,
    problem: &MatmulProblem<T>,
    config: &KernelConfig,
    stripe_ids: &[usize],
) -> Result<KernelRun<T>, KernelError> {
    register_budget(config)?;
    let pattern = problem.pattern();
    if config.algorithm.uses_vindexmac() && config.tile_rows % pattern.m() != 0 {
        return Err(KernelError::InvalidConfig(format!(
            "tile rows {} must be a multiple of the block width {}",
            config.tile_rows,
            pattern.m()
        )));
    }
    let before = machine.snapshot_stats();
    let layout = Layout::bind(machine, problem, config.algorithm);
    let all = stripes(problem.cols(), machine.vl_max());
    if problem.rows() > 0 {
        for &s in stripe_ids {
            let (c0, w) = all[s];
            let st = layout::Stripe { c0, w };
            machine.set_vl(w)?;
            run_stripe(machine, &layout, st, config)?;
        }
    }
    let c = layout.read_c(machine)?;
    Ok(KernelRun { c, stats: delta(machine.snapshot_stats(), before) })
}

fn run_stripe<T: Element>(
    m: &mut VectorMachine<T>,
    lay: &Layout,
    st: layout::Stripe,
    config: &KernelConfig,
) -> Result<(), KernelError> {
    match config.algorithm {
        Algorithm::Dense1 => rowwise::dense(m, lay, st, DenseVariant::SlideExtract),
        Algorithm::Dense2 => rowwise::dense(m, lay, st, DenseVariant::ScalarLoad),
        Algorithm::Dense3 => rowwise::dense(m, lay, st, DenseVariant::Gather),
        Algorithm::Alg1S => rowwise::alg1s(m, lay, st),
        Algorithm::Alg2S => rowwise::alg2s(m, lay, st),
        Algorithm::Alg3S | Algorithm::Alg3SUnrolled => {
            rowwise::alg3s(m, lay, st, config.effective_inner(), config.effective_outer())
        }
        Algorithm::Alg3SFc => rowwise::alg3s_fc(m, lay, st),
        Algorithm::Alg5Vimac | Algorithm::Alg6Vimac | Algorithm::Alg6Unrolled => {
            let geom = indexmac::TileGeometry::new(lay, config);
            let b_stationary = config.algorithm == Algorithm::Alg5Vimac || config.b_stationary;
            match select_schedule(lay.pattern, st.w, config.tile_rows, b_stationary) {
                VindexmacSchedule::TileStationary => {
                    indexmac::tile_stationary(m, lay, st, &geom, config.effective_outer())
                }
                VindexmacSchedule::RowOrder { phases } => indexmac::row_order(
                    m,
                    lay,
                    st,
                    &geom,
                    config.effective_outer(),
                    config.effective_mid(),
                    phases,
                ),
            }
        }
    }
}

fn delta(after: ExecStats, before: ExecStats) -> ExecStats {
    if before.is_zero() {
        return after;
    }
    // counters only grow, so the difference of two snapshots is exact
    let mut out = ExecStats::default();
    for class in crate::machine::InstrClass::ALL {
        out.record(class, after.count(class) - before.count(class));
    }
    for op in crate::machine::Operand::ALL {
        out.record_load(op, after.traffic(op).loaded - before.traffic(op).loaded);
        out.record_store(op, after.traffic(op).stored - before.traffic(op).stored);
    }
    out.mem_lines_touched = after.mem_lines_touched - before.mem_lines_touched;
    out
}

// ---- per-kernel entry points ------------------------------------------------

/// Dense row-wise product; `a` may have any inner dimension.
pub fn dense_rowwise<T: Element>(
    machine: &mut VectorMachine<T>,
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    variant: DenseVariant,
) -> Result<KernelRun<T>, KernelError> {
    let algorithm = match variant {
        DenseVariant::SlideExtract => Algorithm::Dense1,
        DenseVariant::ScalarLoad => Algorithm::Dense2,
        DenseVariant::Gather => Algorithm::Dense3,
    };
    // 1:1 keeps every entry, so the dense operand passes through unchanged
    let problem = MatmulProblem::from_dense(a, b, SparsityPattern::new(1, 1)?)?;
    tiled_matmul(machine, &problem, &KernelConfig::new(algorithm))
}

pub fn alg1s<T: Element>(machine: &mut VectorMachine<T>, p: &MatmulProblem<T>) -> Result<KernelRun<T>, KernelError> {
    tiled_matmul(machine, p, &KernelConfig::new(Algorithm::Alg1S))
}

pub fn alg2s<T: Element>(machine: &mut VectorMachine<T>, p: &MatmulProblem<T>) -> Result<KernelRun<T>, KernelError> {
    tiled_matmul(machine, p, &KernelConfig::new(Algorithm::Alg2S))
}

pub fn alg3s<T: Element>(machine: &mut VectorMachine<T>, p: &MatmulProblem<T>) -> Result<KernelRun<T>, KernelError> {
    tiled_matmul(machine, p, &KernelConfig::new(Algorithm::Alg3S))
}

pub fn alg3s_unrolled<T: Element>(
    machine: &mut VectorMachine<T>,
    p: &MatmulProblem<T>,
    inner: usize,
    outer: usize,
) -> Result<KernelRun<T>, KernelError> {
    tiled_matmul(machine, p, &KernelConfig::spmm(inner, outer))
}

pub fn alg3s_fc<T: Element>(machine: &mut VectorMachine<T>, p: &MatmulProblem<T>) -> Result<KernelRun<T>, KernelError> {
    tiled_matmul(machine, p, &KernelConfig::new(Algorithm::Alg3SFc))
}

/// Single-tile `vindexmac` kernel; A must have exactly `tile_rows` columns.
pub fn alg5_vindexmac<T: Element>(
    machine: &mut VectorMachine<T>,
    p: &MatmulProblem<T>,
    tile_rows: usize,
    tile_base: usize,
) -> Result<KernelRun<T>, KernelError> {
    if p.inner() != tile_rows {
        return Err(KernelError::TileMismatch { cols: p.inner(), tile_rows });
    }
    let config = KernelConfig::new(Algorithm::Alg5Vimac).with_tile(tile_rows, tile_base);
    tiled_matmul(machine, p, &config)
}

/// Phased `vindexmac` kernel over one segment: A must have exactly
/// `phase_count * tile_rows` columns. Falls back to [`alg5_vindexmac`] when a
/// single phase suffices.
pub fn alg6_vindexmac<T: Element>(
    machine: &mut VectorMachine<T>,
    p: &MatmulProblem<T>,
    tile_rows: usize,
    tile_base: usize,
) -> Result<KernelRun<T>, KernelError> {
    let config = KernelConfig::new(Algorithm::Alg6Vimac).with_tile(tile_rows, tile_base).with_b_stationary(false);
    single_segment(machine, p, &config)
}

/// Unrolled phased `vindexmac` kernel (tile of 16 rows at `v16..v31`) over one segment.
pub fn alg6_unrolled<T: Element>(
    machine: &mut VectorMachine<T>,
    p: &MatmulProblem<T>,
    outer: usize,
    mid: usize,
) -> Result<KernelRun<T>, KernelError> {
    single_segment(machine, p, &KernelConfig::proposed(outer, mid).with_b_stationary(false))
}

fn single_segment<T: Element>(
    machine: &mut VectorMachine<T>,
    p: &MatmulProblem<T>,
    config: &KernelConfig,
) -> Result<KernelRun<T>, KernelError> {
    register_budget(config)?;
    let phases = phase_count(p.pattern(), machine.vl_max(), config.tile_rows);
    let expected = phases * config.tile_rows;
    if p.inner() != expected {
        return Err(KernelError::PhaseMismatch { cols: p.inner(), phases, tile_rows: config.tile_rows, expected });
    }
    if phases == 1 {
        let config = KernelConfig { algorithm: Algorithm::Alg5Vimac, ..*config };
        return tiled_matmul(machine, p, &config);
    }
    tiled_matmul(machine, p, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budgets() {
        let alg4 = KernelConfig::spmm(2, 2);
        assert_eq!(register_budget(&alg4).unwrap(), RegisterBudget { vregs: 8, sregs: 2 });
        assert_eq!(register_budget(&KernelConfig::spmm(16, 8)).unwrap().vregs, 32);
        assert_eq!(register_budget(&KernelConfig::proposed(8, 4)).unwrap().vregs, 32);
        assert!(matches!(
            register_budget(&KernelConfig::spmm(1, 9)),
            Err(KernelError::BudgetExceeded { vregs: 36, .. })
        ));
        assert!(matches!(
            register_budget(&KernelConfig::proposed(9, 1)),
            Err(KernelError::BudgetExceeded { vregs: 34, .. })
        ));
        assert!(register_budget(&KernelConfig::spmm(0, 1)).is_err());
        assert!(register_budget(&KernelConfig::proposed(4, 1).with_tile(16, 4)).is_err());
    }

    #[test]
    fn algorithm_names_parse() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!("ALG3S_UNROLLED".parse::<Algorithm>().unwrap(), Algorithm::Alg3SUnrolled);
        assert!("alg7".parse::<Algorithm>().is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(KernelConfig::spmm(16, 8).label(), "SpMM(16,8)");
        assert_eq!(KernelConfig::proposed(8, 4).label(), "Proposed(8,4)");
    }

    #[test]
    fn stripe_split() {
        assert_eq!(stripes(23, 16), vec![(0, 16), (16, 7)]);
        assert!(stripes(0, 16).is_empty());
    }

    #[test]
    fn problem_shape_checked() {
        let p = SparsityPattern::new(1, 4).unwrap();
        let a = StructuredSparseMatrix::encode(&DenseMatrix::<i32>::zeros(2, 8), p).unwrap();
        assert!(matches!(MatmulProblem::new(a, DenseMatrix::zeros(4, 3)), Err(KernelError::Shape(_))));
    }
}

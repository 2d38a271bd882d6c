//! Vector-machine model and N:M structured-sparse matrix-multiplication kernels.
//!
//! The crate is generic over the matrix element type ([`Element`]: `i32`,
//! `i64`, `f32`, `f64`); the aliases below name the common instantiations.

pub mod analysis;
pub mod element;
pub mod io;
pub mod kernels;
pub mod machine;
pub mod sparse;
pub mod workload;

pub use analysis::{compare, cost, expected_counts, ComparisonReport, CostWeights, Shape};
pub use element::{DType, Element};
pub use kernels::{Algorithm, KernelConfig, KernelError, KernelRun, MatmulProblem};
pub use machine::{ExecStats, InstrClass, MachineConfig, MachineError, Operand, VectorMachine};
pub use sparse::{DenseMatrix, SparseError, SparsityPattern, StructuredSparseMatrix};

pub type SparseMatrixF32 = StructuredSparseMatrix<f32>;
pub type SparseMatrixF64 = StructuredSparseMatrix<f64>;
pub type SparseMatrixI32 = StructuredSparseMatrix<i32>;
pub type SparseMatrixI64 = StructuredSparseMatrix<i64>;
pub type DenseMatrixF32 = DenseMatrix<f32>;
pub type DenseMatrixF64 = DenseMatrix<f64>;
pub type DenseMatrixI32 = DenseMatrix<i32>;
pub type DenseMatrixI64 = DenseMatrix<i64>;
pub type MachineF32 = VectorMachine<f32>;
pub type MachineF64 = VectorMachine<f64>;
pub type MachineI32 = VectorMachine<i32>;
pub type MachineI64 = VectorMachine<i64>;

//! Seeded operand generation, preset shapes and output digests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::analysis::Shape;
use crate::element::{DType, Element};
use crate::kernels::{KernelError, MatmulProblem};
use crate::sparse::{DenseMatrix, SparsityPattern, StructuredSparseMatrix};

const PRESETS: &str = include_str!("../../../config/workloads.txt");

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Workload {
    pub name: String,
    pub shape: Shape,
}

/// Shipped preset shapes (synthetic, CNN-layer-like).
pub fn presets() -> Vec<Workload> {
    parse_workloads(PRESETS).expect("shipped presets parse")
}

pub fn preset(name: &str) -> Option<Workload> {
    presets().into_iter().find(|w| w.name == name)
}

/// Parses `name rows inner cols` lines; `#` starts a comment.
pub fn parse_workloads(text: &str) -> Result<Vec<Workload>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let dims: Option<Vec<usize>> = f.get(1..4).map(|d| d.iter().filter_map(|x| x.parse().ok()).collect());
        match dims {
            Some(d) if f.len() == 4 && d.len() == 3 => {
                out.push(Workload { name: f[0].to_string(), shape: Shape::new(d[0], d[1], d[2]) })
            }
            _ => return Err(format!("line {}: expected `name rows inner cols`", i + 1)),
        }
    }
    Ok(out)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform integers in [-8, 8] for integer types, uniform in [-1, 1) for floats.
pub fn random_element<T: Element, R: Rng>(rng: &mut R) -> T {
    let v = match T::DTYPE {
        DType::I32 | DType::I64 => T::from(rng.gen_range(-8i64..=8)),
        DType::F32 => T::from(rng.gen_range(-1.0f32..1.0)),
        DType::F64 => T::from(rng.gen_range(-1.0f64..1.0)),
    };
    v.expect("sample representable")
}

pub fn random_dense<T: Element, R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DenseMatrix<T> {
    let data = (0..rows * cols).map(|_| random_element(rng)).collect();
    DenseMatrix::from_vec(rows, cols, data).expect("length matches shape")
}

/// Magnitude-pruned random A (inner dimension padded to whole blocks) and random B.
pub fn random_problem<T: Element>(shape: Shape, pattern: SparsityPattern, seed: u64) -> Result<MatmulProblem<T>, KernelError> {
    let mut r = rng(seed);
    let a = random_dense::<T, _>(shape.rows, shape.inner, &mut r).pad_cols_to(pattern.m());
    let b = random_dense::<T, _>(shape.inner, shape.cols, &mut r).pad_rows_to(a.cols());
    MatmulProblem::new(StructuredSparseMatrix::prune(&a, pattern)?, b)
}

/// SHA-256 over the little-endian bytes of the elements, row-major.
pub fn digest<T: Element>(m: &DenseMatrix<T>) -> String {
    let mut bytes = Vec::with_capacity(m.data().len() * T::DTYPE.size_bytes());
    for &x in m.data() {
        x.write_le(&mut bytes);
    }
    hex::encode(Sha256::digest(&bytes))
}

//! Placement of kernel operands in machine memory.

use crate::element::{from_usize, Element};
use crate::machine::{MachineError, Operand, VectorMachine};
use crate::sparse::{DenseMatrix, SparsityPattern};

use super::{Algorithm, MatmulProblem};

/// One column stripe of B and C.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stripe {
    pub c0: usize,
    pub w: usize,
}

/// Base addresses and strides of the bound operands.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub pattern: SparsityPattern,
    pub rows: usize,
    pub inner: usize,
    pub cols: usize,
    /// Stored slots per row of A (`inner` for the dense layout).
    pub per_row: usize,
    /// Row-major values of A: stored values, or the dense matrix for dense kernels.
    pub a_vals: usize,
    /// Row-major indexes of A: in-block for compressed kernels, absolute for full-column.
    pub a_idx: usize,
    pub b: usize,
    pub c: usize,
}

impl Layout {
    pub fn bind<T: Element>(m: &mut VectorMachine<T>, p: &MatmulProblem<T>, algorithm: Algorithm) -> Self {
        let slack = m.vl_max();
        let (per_row, a_vals, a_idx) = if algorithm.is_dense() {
            let dense = p.a.decode();
            let base = m.bind_region("A", Operand::A, dense.data(), slack);
            (p.inner(), base, base)
        } else if algorithm == Algorithm::Alg3SFc {
            let fc = p.a.to_full_column();
            let vals = m.bind_region("A", Operand::A, &fc.values, slack);
            let idx: Vec<T> = fc.col.iter().map(|&c| from_usize(c as usize)).collect();
            (fc.per_row, vals, m.bind_region("A.idx", Operand::AIndex, &idx, 0))
        } else {
            let vals = m.bind_region("A", Operand::A, p.a.values(), slack);
            let idx: Vec<T> = p.a.col_idx().iter().map(|&c| from_usize(c as usize)).collect();
            (p.a.stored_per_row(), vals, m.bind_region("A.idx", Operand::AIndex, &idx, 0))
        };
        let b = m.bind_region("B", Operand::B, p.b.data(), 0);
        let zeros = vec![T::zero(); p.rows() * p.cols()];
        let c = m.bind_region("C", Operand::C, &zeros, 0);
        Self { pattern: p.pattern(), rows: p.rows(), inner: p.inner(), cols: p.cols(), per_row, a_vals, a_idx, b, c }
    }

    pub fn val(&self, row: usize, slot: usize) -> usize {
        self.a_vals + row * self.per_row + slot
    }

    pub fn idx(&self, row: usize, slot: usize) -> usize {
        self.a_idx + row * self.per_row + slot
    }

    pub fn b_row(&self, k: usize, st: Stripe) -> usize {
        self.b + k * self.cols + st.c0
    }

    pub fn c_row(&self, row: usize, st: Stripe) -> usize {
        self.c + row * self.cols + st.c0
    }

    pub fn read_c<T: Element>(&self, m: &VectorMachine<T>) -> Result<DenseMatrix<T>, MachineError> {
        let data = m.read_mem(self.c, self.rows * self.cols)?.to_vec();
        Ok(DenseMatrix::from_vec(self.rows, self.cols, data).expect("length matches shape"))
    }
}

/// Row groups of `u` rows followed by single-row groups for the remainder.
pub(crate) fn row_groups(rows: usize, u: usize) -> Vec<(usize, usize)> {
    let full = rows / u * u;
    (0..full).step_by(u).map(|r| (r, u)).chain((full..rows).map(|r| (r, 1))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_then_rolled_tail() {
        assert_eq!(row_groups(5, 2), vec![(0, 2), (2, 2), (4, 1)]);
        assert_eq!(row_groups(3, 4), vec![(0, 1), (1, 1), (2, 1)]);
        assert_eq!(row_groups(4, 1).len(), 4);
    }
}

//! Row-wise kernels built from standard vector instructions only.
//!
//! Each stored non-zero `a` with column `k` issues a full-width load of row
//! `k` of B and one multiply-accumulate into the accumulator of its row.

use crate::element::Element;
use crate::machine::{FReg, VReg, VectorMachine, XReg};

use super::layout::{row_groups, Layout, Stripe};
use super::{DenseVariant, KernelError};

const F0: FReg = FReg::new(0);
const X_OFF: XReg = XReg::new(31);
const X_IDX: XReg = XReg::new(0);

const ACC: VReg = VReg::new(0);
const CHUNK: VReg = VReg::new(1);
const BROW: VReg = VReg::new(2);
const BCAST: VReg = VReg::new(3);

pub(crate) fn dense<T: Element>(
    m: &mut VectorMachine<T>,
    lay: &Layout,
    st: Stripe,
    variant: DenseVariant,
) -> Result<(), KernelError> {
    for i in 0..lay.rows {
        m.vmv_zero(ACC);
        for k in 0..lay.inner {
            match variant {
                DenseVariant::SlideExtract => {
                    if k % st.w == 0 {
                        m.vload(CHUNK, lay.val(i, k))?;
                    }
                    m.vload(BROW, lay.b_row(k, st))?;
                    m.vmv_x_s(F0, CHUNK);
                    m.vmacc_vx(ACC, F0, BROW);
                    m.vslide1down(CHUNK, CHUNK);
                }
                DenseVariant::ScalarLoad => {
                    m.load_scalar_value(F0, lay.val(i, k))?;
                    m.vload(BROW, lay.b_row(k, st))?;
                    m.vmacc_vx(ACC, F0, BROW);
                }
                DenseVariant::Gather => {
                    if k % st.w == 0 {
                        m.vload(CHUNK, lay.val(i, k))?;
                    }
                    m.vload(BROW, lay.b_row(k, st))?;
                    m.vrgather_vx(BCAST, CHUNK, k % st.w)?;
                    m.vmacc_vv(ACC, BCAST, BROW);
                }
            }
        }
        m.vstore(ACC, lay.c_row(i, st))?;
    }
    Ok(())
}

/// Loads the row of B selected by slot `j` of row `i` (index recovered from
/// the in-block index plus the block offset).
fn load_selected_row<T: Element>(
    m: &mut VectorMachine<T>,
    lay: &Layout,
    st: Stripe,
    i: usize,
    j: usize,
    dst: VReg,
) -> Result<(), KernelError> {
    let (n, mm) = (lay.pattern.n(), lay.pattern.m());
    m.block_offset(X_OFF, j, n, mm, None, 0);
    m.load_index(X_IDX, lay.idx(i, j), Some(X_OFF))?;
    m.vload(dst, b_row_from(m, lay, X_IDX, st))?;
    Ok(())
}

fn b_row_from<T: Element>(m: &VectorMachine<T>, lay: &Layout, x: XReg, st: Stripe) -> usize {
    lay.b_row(m.xreg(x) as usize, st)
}

/// Values brought in vector chunks, extracted with `vmv.x.s` and slides.
pub(crate) fn alg1s<T: Element>(m: &mut VectorMachine<T>, lay: &Layout, st: Stripe) -> Result<(), KernelError> {
    for i in 0..lay.rows {
        m.vmv_zero(ACC);
        for j in 0..lay.per_row {
            if j % st.w == 0 {
                m.vload(CHUNK, lay.val(i, j))?;
            }
            load_selected_row(m, lay, st, i, j, BROW)?;
            m.vmv_x_s(F0, CHUNK);
            m.vmacc_vx(ACC, F0, BROW);
            m.vslide1down(CHUNK, CHUNK);
        }
        m.vstore(ACC, lay.c_row(i, st))?;
    }
    Ok(())
}

/// Values loaded one at a time into scalar registers.
pub(crate) fn alg2s<T: Element>(m: &mut VectorMachine<T>, lay: &Layout, st: Stripe) -> Result<(), KernelError> {
    let (n, mm) = (lay.pattern.n(), lay.pattern.m());
    for i in 0..lay.rows {
        m.vmv_zero(ACC);
        for j in 0..lay.per_row {
            m.block_offset(X_OFF, j, n, mm, None, 0);
            m.load_index(X_IDX, lay.idx(i, j), Some(X_OFF))?;
            m.load_scalar_value(F0, lay.val(i, j))?;
            m.vload(BROW, b_row_from(m, lay, X_IDX, st))?;
            m.vmacc_vx(ACC, F0, BROW);
        }
        m.vstore(ACC, lay.c_row(i, st))?;
    }
    Ok(())
}

/// Values in vector chunks, broadcast with `vrgather.vx`; `outer` rows are
/// interleaved and share one block-offset computation per slot. Rows left
/// over after the last full group run one at a time. The inner unroll factor
/// only groups slots inside the loop body and leaves the stream unchanged.
pub(crate) fn alg3s<T: Element>(
    m: &mut VectorMachine<T>,
    lay: &Layout,
    st: Stripe,
    _inner: usize,
    outer: usize,
) -> Result<(), KernelError> {
    let (n, mm) = (lay.pattern.n(), lay.pattern.m());
    for (i0, u) in row_groups(lay.rows, outer) {
        let vals = |r: usize| VReg::new(r);
        let gather = |r: usize| VReg::new(u + r);
        let brow = |r: usize| VReg::new(2 * u + r);
        let acc = |r: usize| VReg::new(3 * u + r);
        for r in 0..u {
            m.vmv_zero(acc(r));
        }
        for j in 0..lay.per_row {
            if j % st.w == 0 {
                for r in 0..u {
                    m.vload(vals(r), lay.val(i0 + r, j))?;
                }
            }
            m.block_offset(X_OFF, j, n, mm, None, 0);
            for r in 0..u {
                m.load_index(XReg::new(r), lay.idx(i0 + r, j), Some(X_OFF))?;
            }
            for r in 0..u {
                m.vload(brow(r), b_row_from(m, lay, XReg::new(r), st))?;
            }
            for r in 0..u {
                m.vrgather_vx(gather(r), vals(r), j % st.w)?;
            }
            for r in 0..u {
                m.vmacc_vv(acc(r), gather(r), brow(r));
            }
        }
        for r in 0..u {
            m.vstore(acc(r), lay.c_row(i0 + r, st))?;
        }
    }
    Ok(())
}

/// `alg3s` over absolute column indexes: no block-offset arithmetic.
pub(crate) fn alg3s_fc<T: Element>(m: &mut VectorMachine<T>, lay: &Layout, st: Stripe) -> Result<(), KernelError> {
    let (vals, gather, brow, acc) = (VReg::new(0), VReg::new(1), VReg::new(2), VReg::new(3));
    for i in 0..lay.rows {
        m.vmv_zero(acc);
        for j in 0..lay.per_row {
            if j % st.w == 0 {
                m.vload(vals, lay.val(i, j))?;
            }
            m.load_scalar(X_IDX, lay.idx(i, j))?;
            m.vload(brow, b_row_from(m, lay, X_IDX, st))?;
            m.vrgather_vx(gather, vals, j % st.w)?;
            m.vmacc_vv(acc, gather, brow);
        }
        m.vstore(acc, lay.c_row(i, st))?;
    }
    Ok(())
}

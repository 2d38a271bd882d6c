//! Kernels that read rows of B from the vector register file with `vindexmac`.
//!
//! A tile of `L` consecutive rows of B (one column stripe wide) lives in
//! `v[base]..v[base + L - 1]`. For slot `j` of a row of A, the register that
//! holds the selected row is `base + ((j / n) mod (L / m)) * m + idx`: one
//! block-offset computation per slot, shared by all interleaved rows, and one
//! fused index load per row.
//!
//! Two schedules exist. Tile-stationary: every tile of B is loaded once per
//! stripe and all rows of A are swept against it, re-reading and re-writing
//! the partial sums in C for every tile. Row order: a row group keeps its
//! accumulators and its vector of values while the tiles of a segment are
//! loaded in turn, so C moves once per segment but B is reloaded per group.

use crate::element::Element;
use crate::machine::{VReg, VectorMachine, XReg};
use crate::sparse::SparsityPattern;

use super::layout::{row_groups, Layout, Stripe};
use super::{KernelConfig, KernelError};

const X_OFF: XReg = XReg::new(31);

/// How a stripe is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VindexmacSchedule {
    TileStationary,
    /// `phases` tiles are consumed per pass over a row group.
    RowOrder { phases: usize },
}

/// Tiles whose non-zeros one vector of values covers: `max(1, (m * vl) / (n * L))`.
pub fn phase_count(pattern: SparsityPattern, vl: usize, tile_rows: usize) -> usize {
    (pattern.m() * vl / (pattern.n() * tile_rows)).max(1)
}

/// Row order only pays off when one vector of values spans several tiles;
/// with a single phase the tile-stationary schedule is used.
pub fn select_schedule(pattern: SparsityPattern, vl: usize, tile_rows: usize, b_stationary: bool) -> VindexmacSchedule {
    let phases = phase_count(pattern, vl, tile_rows);
    if b_stationary || phases == 1 {
        VindexmacSchedule::TileStationary
    } else {
        VindexmacSchedule::RowOrder { phases }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct TileGeometry {
    l: usize,
    base: usize,
    /// `(first row of B, rows)` per tile; the last tile may be short.
    tiles: Vec<(usize, usize)>,
}

impl TileGeometry {
    pub fn new(lay: &Layout, config: &KernelConfig) -> Self {
        let l = config.tile_rows;
        let tiles = (0..lay.inner).step_by(l).map(|k0| (k0, l.min(lay.inner - k0))).collect();
        Self { l, base: config.tile_base, tiles }
    }

    fn slots(&self, lay: &Layout, rows: usize) -> usize {
        rows / lay.pattern.m() * lay.pattern.n()
    }

    fn first_slot(&self, lay: &Layout, k0: usize) -> usize {
        k0 / lay.pattern.m() * lay.pattern.n()
    }

    fn load_tile<T: Element>(
        &self,
        m: &mut VectorMachine<T>,
        lay: &Layout,
        st: Stripe,
        (k0, rows): (usize, usize),
    ) -> Result<(), KernelError> {
        for k in 0..rows {
            m.vload(VReg::new(self.base + k), lay.b_row(k0 + k, st))?;
        }
        Ok(())
    }
}

fn acc(r: usize) -> VReg {
    VReg::new(r)
}

fn vals(u: usize, r: usize) -> VReg {
    VReg::new(u + r)
}

/// Loads `c` values starting at slot `j` for each row of the group,
/// narrowing the vector length when fewer than `w` are needed.
fn load_values<T: Element>(
    m: &mut VectorMachine<T>,
    lay: &Layout,
    st: Stripe,
    (i0, u): (usize, usize),
    j: usize,
    c: usize,
) -> Result<(), KernelError> {
    if c < st.w {
        m.set_vl(c)?;
    }
    for r in 0..u {
        m.vload(vals(u, r), lay.val(i0 + r, j))?;
    }
    if c < st.w {
        m.set_vl(st.w)?;
    }
    Ok(())
}

/// Slots `j_start..j_end` of the group; the values vector was loaded at
/// `origin` with `c` elements and is reloaded every `c` slots.
#[allow(clippy::too_many_arguments)]
fn slot_loop<T: Element>(
    m: &mut VectorMachine<T>,
    lay: &Layout,
    st: Stripe,
    geom: &TileGeometry,
    (i0, u): (usize, usize),
    (j_start, j_end): (usize, usize),
    origin: usize,
    c: usize,
) -> Result<(), KernelError> {
    let (n, mm) = (lay.pattern.n(), lay.pattern.m());
    for j in j_start..j_end {
        if j > origin && (j - origin) % c == 0 {
            load_values(m, lay, st, (i0, u), j, c)?;
        }
        m.block_offset(X_OFF, j, n, mm, Some(geom.l / mm), geom.base as i64);
        for r in 0..u {
            m.load_index(XReg::new(r), lay.idx(i0 + r, j), Some(X_OFF))?;
        }
        for r in 0..u {
            m.vindexmac_vx(acc(r), vals(u, r), XReg::new(r));
        }
        for r in 0..u {
            m.vslide1down(vals(u, r), vals(u, r));
        }
    }
    Ok(())
}

fn load_c<T: Element>(m: &mut VectorMachine<T>, lay: &Layout, st: Stripe, (i0, u): (usize, usize)) -> Result<(), KernelError> {
    for r in 0..u {
        m.vload(acc(r), lay.c_row(i0 + r, st))?;
    }
    Ok(())
}

fn store_c<T: Element>(m: &mut VectorMachine<T>, lay: &Layout, st: Stripe, (i0, u): (usize, usize)) -> Result<(), KernelError> {
    for r in 0..u {
        m.vstore(acc(r), lay.c_row(i0 + r, st))?;
    }
    Ok(())
}

/// Each tile of B is loaded once; every row group accumulates its partial
/// sums for that tile through C.
pub(crate) fn tile_stationary<T: Element>(
    m: &mut VectorMachine<T>,
    lay: &Layout,
    st: Stripe,
    geom: &TileGeometry,
    outer: usize,
) -> Result<(), KernelError> {
    let groups = row_groups(lay.rows, outer);
    for &tile in &geom.tiles {
        geom.load_tile(m, lay, st, tile)?;
        let j0 = geom.first_slot(lay, tile.0);
        let slots = geom.slots(lay, tile.1);
        let c = slots.min(st.w);
        for &g in &groups {
            load_values(m, lay, st, g, j0, c)?;
            load_c(m, lay, st, g)?;
            slot_loop(m, lay, st, geom, g, (j0, j0 + slots), j0, c)?;
            store_c(m, lay, st, g)?;
        }
    }
    Ok(())
}

/// Row groups sweep segments of `phases` tiles, reloading each tile of the
/// segment in turn; the mid unroll factor only groups phases and leaves the
/// stream unchanged.
pub(crate) fn row_order<T: Element>(
    m: &mut VectorMachine<T>,
    lay: &Layout,
    st: Stripe,
    geom: &TileGeometry,
    outer: usize,
    _mid: usize,
    phases: usize,
) -> Result<(), KernelError> {
    let groups = row_groups(lay.rows, outer);
    for segment in geom.tiles.chunks(phases) {
        let j0 = geom.first_slot(lay, segment[0].0);
        let seg_slots: usize = segment.iter().map(|t| geom.slots(lay, t.1)).sum();
        let c = seg_slots.min(st.w);
        for &g in &groups {
            load_values(m, lay, st, g, j0, c)?;
            load_c(m, lay, st, g)?;
            for &tile in segment {
                geom.load_tile(m, lay, st, tile)?;
                let tj = geom.first_slot(lay, tile.0);
                slot_loop(m, lay, st, geom, g, (tj, tj + geom.slots(lay, tile.1)), j0, c)?;
            }
            store_c(m, lay, st, g)?;
        }
    }
    Ok(())
}

//! Closed-form instruction and traffic counts derived from each kernel's loop
//! bounds, independent of the machine. Line counts depend on placement and
//! are not predicted; compare with [`ExecStats::without_lines`].

use crate::kernels::{phase_count, register_budget, stripes, Algorithm, KernelConfig, VindexmacSchedule};
use crate::machine::{ExecStats, InstrClass, Operand};
use crate::sparse::SparsityPattern;

use super::AnalysisError;

use InstrClass::*;

/// Problem dimensions: A is `rows x inner`, B is `inner x cols`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Shape {
    pub rows: usize,
    pub inner: usize,
    pub cols: usize,
}

impl Shape {
    pub fn new(rows: usize, inner: usize, cols: usize) -> Self {
        Self { rows, inner, cols }
    }
}

/// Counter accumulation in `u64` with short names.
#[derive(Default)]
struct Tally(ExecStats);

impl Tally {
    fn op(&mut self, class: InstrClass, n: usize) {
        self.0.record(class, n as u64);
    }

    fn load(&mut self, operand: Operand, elements: usize) {
        self.0.record_load(operand, elements as u64);
    }

    fn store(&mut self, operand: Operand, elements: usize) {
        self.0.record_store(operand, elements as u64);
    }
}

/// Predicted counters of `config` on `shape` with vectors of `vl_max` elements.
pub fn expected_counts(
    shape: Shape,
    pattern: SparsityPattern,
    config: &KernelConfig,
    vl_max: usize,
) -> Result<ExecStats, AnalysisError> {
    register_budget(config).map_err(|e| AnalysisError::UnsupportedConfig(e.to_string()))?;
    let (n, m) = (pattern.n(), pattern.m());
    if shape.inner % m != 0 {
        return Err(AnalysisError::UnsupportedConfig(format!(
            "inner dimension {} is not a multiple of the block width {m}",
            shape.inner
        )));
    }
    let alg = config.algorithm;
    if alg.uses_vindexmac() && config.tile_rows % m != 0 {
        return Err(AnalysisError::UnsupportedConfig(format!(
            "tile rows {} not a multiple of {m}",
            config.tile_rows
        )));
    }
    let mut t = Tally::default();
    if shape.rows == 0 {
        return Ok(t.0);
    }
    let r = shape.rows;
    let s = shape.inner / m * n;
    let u = config.effective_outer();
    let groups = r / u + r % u;
    for (_, w) in stripes(shape.cols, vl_max) {
        t.op(SetVl, 1);
        match alg {
            Algorithm::Dense1 | Algorithm::Dense2 | Algorithm::Dense3 => {
                let k = shape.inner;
                let chunks = k.div_ceil(w);
                t.op(VmvZero, r);
                t.op(VStore, r);
                t.store(Operand::C, r * w);
                t.op(VLoad, r * k);
                t.load(Operand::B, r * k * w);
                match alg {
                    Algorithm::Dense1 => {
                        t.op(VLoad, r * chunks);
                        t.load(Operand::A, r * chunks * w);
                        t.op(VmvXS, r * k);
                        t.op(VmaccVx, r * k);
                        t.op(Vslide1down, r * k);
                    }
                    Algorithm::Dense2 => {
                        t.op(ScalarLoad, r * k);
                        t.load(Operand::A, r * k);
                        t.op(VmaccVx, r * k);
                    }
                    _ => {
                        t.op(VLoad, r * chunks);
                        t.load(Operand::A, r * chunks * w);
                        t.op(VrgatherVx, r * k);
                        t.op(VmaccVv, r * k);
                    }
                }
            }
            Algorithm::Alg1S | Algorithm::Alg2S | Algorithm::Alg3S | Algorithm::Alg3SUnrolled | Algorithm::Alg3SFc => {
                let chunks = s.div_ceil(w);
                t.op(VmvZero, r);
                t.op(VStore, r);
                t.store(Operand::C, r * w);
                // one B row per stored slot, one index per stored slot
                t.op(VLoad, r * s);
                t.load(Operand::B, r * s * w);
                t.op(ScalarLoad, r * s);
                t.load(Operand::AIndex, r * s);
                match alg {
                    Algorithm::Alg1S => {
                        t.op(ScalarAlu, r * s);
                        t.op(VLoad, r * chunks);
                        t.load(Operand::A, r * chunks * w);
                        t.op(VmvXS, r * s);
                        t.op(VmaccVx, r * s);
                        t.op(Vslide1down, r * s);
                    }
                    Algorithm::Alg2S => {
                        t.op(ScalarAlu, r * s);
                        t.op(ScalarLoad, r * s);
                        t.load(Operand::A, r * s);
                        t.op(VmaccVx, r * s);
                    }
                    _ => {
                        if alg != Algorithm::Alg3SFc {
                            t.op(ScalarAlu, groups * s);
                        }
                        t.op(VLoad, r * chunks);
                        t.load(Operand::A, r * chunks * w);
                        t.op(VrgatherVx, r * s);
                        t.op(VmaccVv, r * s);
                    }
                }
            }
            Algorithm::Alg5Vimac | Algorithm::Alg6Vimac | Algorithm::Alg6Unrolled => {
                let l = config.tile_rows;
                let tiles: Vec<usize> = (0..shape.inner).step_by(l).map(|k0| l.min(shape.inner - k0)).collect();
                let slots = |rows_t: usize| rows_t / m * n;
                let b_stationary = alg == Algorithm::Alg5Vimac || config.b_stationary;
                let phases = phase_count(pattern, w, l);
                let schedule = if b_stationary || phases == 1 {
                    VindexmacSchedule::TileStationary
                } else {
                    VindexmacSchedule::RowOrder { phases }
                };
                // (rows of B loaded, slots) per pass of a row group over a segment
                let (segments, tile_reloads): (Vec<(usize, usize)>, usize) = match schedule {
                    VindexmacSchedule::TileStationary => (tiles.iter().map(|&rt| (rt, slots(rt))).collect(), 1),
                    VindexmacSchedule::RowOrder { phases } => (
                        tiles
                            .chunks(phases)
                            .map(|seg| (seg.iter().sum(), seg.iter().map(|&rt| slots(rt)).sum()))
                            .collect(),
                        groups,
                    ),
                };
                for (b_rows, seg_slots) in segments {
                    t.op(VLoad, b_rows * tile_reloads);
                    t.load(Operand::B, b_rows * tile_reloads * w);
                    let c = seg_slots.min(w);
                    let value_loads = seg_slots.div_ceil(c);
                    if c < w {
                        t.op(SetVl, 2 * groups);
                    }
                    t.op(VLoad, r * value_loads);
                    t.load(Operand::A, r * value_loads * c);
                    t.op(VLoad, r);
                    t.load(Operand::C, r * w);
                    t.op(VStore, r);
                    t.store(Operand::C, r * w);
                    t.op(ScalarAlu, groups * seg_slots);
                    t.op(ScalarLoad, r * seg_slots);
                    t.load(Operand::AIndex, r * seg_slots);
                    t.op(Vindexmac, r * seg_slots);
                    t.op(Vslide1down, r * seg_slots);
                }
            }
        }
    }
    Ok(t.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(n: usize, m: usize) -> SparsityPattern {
        SparsityPattern::new(n, m).unwrap()
    }

    #[test]
    fn alg3s_b_rows() {
        let e = expected_counts(Shape::new(8, 16, 8), pat(1, 4), &KernelConfig::new(Algorithm::Alg3S), 8).unwrap();
        // 32 B rows plus one values chunk per row
        assert_eq!(e.traffic(Operand::B).loaded, 32 * 8);
        assert_eq!(e.count(VLoad), 32 + 8);
    }

    #[test]
    fn alg5_preloads_once() {
        for rows in [1, 7, 64] {
            let e = expected_counts(Shape::new(rows, 16, 16), pat(1, 4), &KernelConfig::new(Algorithm::Alg5Vimac), 16)
                .unwrap();
            assert_eq!(e.traffic(Operand::B).loaded, 16 * 16);
        }
    }

    #[test]
    fn zero_rows_is_empty() {
        for a in Algorithm::ALL {
            let e = expected_counts(Shape::new(0, 16, 16), pat(2, 4), &KernelConfig::new(a), 16).unwrap();
            assert!(e.is_zero(), "{a}");
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(expected_counts(Shape::new(4, 6, 4), pat(1, 4), &KernelConfig::new(Algorithm::Alg3S), 8).is_err());
        assert!(expected_counts(Shape::new(4, 8, 4), pat(1, 4), &KernelConfig::spmm(1, 9), 8).is_err());
    }
}

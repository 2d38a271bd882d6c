//! Functional model of a decoupled vector engine.
//!
//! The machine holds 32 vector registers of `vl_max` elements, 32 integer
//! scalar registers (indexes and addresses), 32 scalar value registers (matrix
//! elements moved out of vectors or memory), and a flat word-addressed memory
//! partitioned into named regions. Every executor retires exactly one
//! instruction and updates [`ExecStats`]. Lanes at or beyond the active vector
//! length are never read or written.

use std::fmt;
use std::ops::{Add, AddAssign};

use thiserror::Error;

use crate::element::Element;

pub const NUM_VREGS: usize = 32;
pub const NUM_XREGS: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MachineError {
    #[error("unsupported vl_max {0} (expected 4, 8, 16 or 32)")]
    UnsupportedVlMax(usize),
    #[error("vector length request must be at least 1")]
    ZeroVectorLength,
    #[error("access of {len} elements at address {addr} is outside every bound region")]
    OutOfBounds { addr: usize, len: usize },
    #[error("gather index {index} is not below the active vector length {vl}")]
    IndexOutOfRange { index: usize, vl: usize },
}

/// Vector register id, always `< 32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VReg(u8);

impl VReg {
    pub const fn new(id: usize) -> Self {
        assert!(id < NUM_VREGS, "vector register id out of range");
        VReg(id as u8)
    }

    pub fn id(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VReg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// Integer scalar register id, always `< 32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct XReg(u8);

impl XReg {
    pub const fn new(id: usize) -> Self {
        assert!(id < NUM_XREGS, "scalar register id out of range");
        XReg(id as u8)
    }

    pub fn id(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for XReg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// Scalar value register id (holds a matrix element), always `< 32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FReg(u8);

impl FReg {
    pub const fn new(id: usize) -> Self {
        assert!(id < NUM_XREGS, "scalar value register id out of range");
        FReg(id as u8)
    }

    pub fn id(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for FReg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct MachineConfig {
    pub vl_max: usize,
    pub line_bytes: usize,
    pub element_bytes: usize,
}

impl MachineConfig {
    pub fn new(vl_max: usize) -> Result<Self, MachineError> {
        if !matches!(vl_max, 4 | 8 | 16 | 32) {
            return Err(MachineError::UnsupportedVlMax(vl_max));
        }
        Ok(Self { vl_max, line_bytes: 64, element_bytes: 4 })
    }

    pub fn with_line_bytes(mut self, line_bytes: usize) -> Self {
        self.line_bytes = line_bytes.max(1);
        self
    }

    pub fn with_element_bytes(mut self, element_bytes: usize) -> Self {
        self.element_bytes = element_bytes.max(1);
        self
    }

    pub fn num_vregs(&self) -> usize {
        NUM_VREGS
    }
}

impl Default for MachineConfig {
    fn default() -> Self {
        Self { vl_max: 16, line_bytes: 64, element_bytes: 4 }
    }
}

/// Instruction classes counted by [`ExecStats`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InstrClass {
    VLoad,
    VStore,
    ScalarLoad,
    VmaccVx,
    VmaccVv,
    VrgatherVx,
    Vslide1down,
    VmvXS,
    VmvZero,
    Vindexmac,
    ScalarAlu,
    SetVl,
}

impl InstrClass {
    pub const ALL: [InstrClass; 12] = [
        InstrClass::VLoad,
        InstrClass::VStore,
        InstrClass::ScalarLoad,
        InstrClass::VmaccVx,
        InstrClass::VmaccVv,
        InstrClass::VrgatherVx,
        InstrClass::Vslide1down,
        InstrClass::VmvXS,
        InstrClass::VmvZero,
        InstrClass::Vindexmac,
        InstrClass::ScalarAlu,
        InstrClass::SetVl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InstrClass::VLoad => "vload",
            InstrClass::VStore => "vstore",
            InstrClass::ScalarLoad => "scalar_load",
            InstrClass::VmaccVx => "vmacc_vx",
            InstrClass::VmaccVv => "vmacc_vv",
            InstrClass::VrgatherVx => "vrgather_vx",
            InstrClass::Vslide1down => "vslide1down",
            InstrClass::VmvXS => "vmv_x_s",
            InstrClass::VmvZero => "vmv_zero",
            InstrClass::Vindexmac => "vindexmac",
            InstrClass::ScalarAlu => "scalar_alu",
            InstrClass::SetVl => "set_vl",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for InstrClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which operand a memory region holds; traffic is also broken down by role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Operand {
    /// Values of A (packed non-zeros, or the dense rows).
    A,
    /// Column indexes of A.
    AIndex,
    B,
    C,
    Other,
}

impl Operand {
    pub const ALL: [Operand; 5] = [Operand::A, Operand::AIndex, Operand::B, Operand::C, Operand::Other];

    pub(crate) fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Operand::A => "a",
            Operand::AIndex => "a_index",
            Operand::B => "b",
            Operand::C => "c",
            Operand::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct Traffic {
    pub loaded: u64,
    pub stored: u64,
}

/// Counters accumulated by a [`VectorMachine`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExecStats {
    counts: [u64; 12],
    pub total_instructions: u64,
    pub mem_elements_loaded: u64,
    pub mem_elements_stored: u64,
    /// Sum over memory instructions of the distinct lines each one spans.
    pub mem_lines_touched: u64,
    traffic: [Traffic; 5],
}

impl ExecStats {
    pub fn count(&self, class: InstrClass) -> u64 {
        self.counts[class.index()]
    }

    pub fn traffic(&self, operand: Operand) -> Traffic {
        self.traffic[operand.index()]
    }

    /// Element loads plus element stores.
    pub fn memory_accesses(&self) -> u64 {
        self.mem_elements_loaded + self.mem_elements_stored
    }

    pub fn record(&mut self, class: InstrClass, n: u64) {
        self.counts[class.index()] += n;
        self.total_instructions += n;
    }

    pub fn record_load(&mut self, operand: Operand, elements: u64) {
        self.mem_elements_loaded += elements;
        self.traffic[operand.index()].loaded += elements;
    }

    pub fn record_store(&mut self, operand: Operand, elements: u64) {
        self.mem_elements_stored += elements;
        self.traffic[operand.index()].stored += elements;
    }

    /// Copy with the line counter cleared, for comparing against predictions
    /// that do not model addresses.
    pub fn without_lines(mut self) -> Self {
        self.mem_lines_touched = 0;
        self
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::default()
    }
}

impl Add for ExecStats {
    type Output = ExecStats;

    fn add(mut self, rhs: ExecStats) -> ExecStats {
        self += rhs;
        self
    }
}

impl AddAssign for ExecStats {
    fn add_assign(&mut self, rhs: ExecStats) {
        for (a, b) in self.counts.iter_mut().zip(rhs.counts) {
            *a += b;
        }
        for (a, b) in self.traffic.iter_mut().zip(rhs.traffic) {
            a.loaded += b.loaded;
            a.stored += b.stored;
        }
        self.total_instructions += rhs.total_instructions;
        self.mem_elements_loaded += rhs.mem_elements_loaded;
        self.mem_elements_stored += rhs.mem_elements_stored;
        self.mem_lines_touched += rhs.mem_lines_touched;
    }
}

impl std::iter::Sum for ExecStats {
    fn sum<I: Iterator<Item = ExecStats>>(iter: I) -> Self {
        iter.fold(ExecStats::default(), Add::add)
    }
}

impl serde::Serialize for ExecStats {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(None)?;
        for class in InstrClass::ALL {
            map.serialize_entry(class.name(), &self.count(class))?;
        }
        map.serialize_entry("total_instructions", &self.total_instructions)?;
        map.serialize_entry("mem_elements_loaded", &self.mem_elements_loaded)?;
        map.serialize_entry("mem_elements_stored", &self.mem_elements_stored)?;
        map.serialize_entry("mem_lines_touched", &self.mem_lines_touched)?;
        for op in Operand::ALL {
            map.serialize_entry(&format!("{}_loaded", op.name()), &self.traffic(op).loaded)?;
            map.serialize_entry(&format!("{}_stored", op.name()), &self.traffic(op).stored)?;
        }
        map.end()
    }
}

/// One retired instruction, as recorded when tracing is on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub class: InstrClass,
    pub operands: String,
    pub vl: usize,
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.class, self.operands, self.vl)
    }
}

/// Reported when `vindexmac` reads its indirect source from its destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AliasHazard {
    pub instruction: u64,
    pub vd: VReg,
}

#[derive(Debug, Clone)]
pub struct Region {
    pub name: String,
    pub role: Operand,
    pub base: usize,
    pub len: usize,
}

pub struct VectorMachine<T> {
    config: MachineConfig,
    vrf: Vec<T>,
    xregs: [i64; NUM_XREGS],
    fregs: [T; NUM_XREGS],
    vl: usize,
    mem: Vec<T>,
    regions: Vec<Region>,
    stats: ExecStats,
    trace: Option<Vec<TraceEntry>>,
    hazards: Vec<AliasHazard>,
}

impl<T: Element> VectorMachine<T> {
    pub fn new(config: MachineConfig) -> Self {
        Self {
            config,
            vrf: vec![T::zero(); NUM_VREGS * config.vl_max],
            xregs: [0; NUM_XREGS],
            fregs: [T::zero(); NUM_XREGS],
            vl: config.vl_max,
            mem: Vec::new(),
            regions: Vec::new(),
            stats: ExecStats::default(),
            trace: None,
            hazards: Vec::new(),
        }
    }

    pub fn config(&self) -> &MachineConfig {
        &self.config
    }

    pub fn vl(&self) -> usize {
        self.vl
    }

    pub fn vl_max(&self) -> usize {
        self.config.vl_max
    }

    /// Starts recording one [`TraceEntry`] per retired instruction.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> Option<&[TraceEntry]> {
        self.trace.as_deref()
    }

    pub fn take_trace(&mut self) -> Vec<TraceEntry> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn hazards(&self) -> &[AliasHazard] {
        &self.hazards
    }

    pub fn snapshot_stats(&self) -> ExecStats {
        self.stats
    }

    pub fn reset_stats(&mut self) {
        self.stats = ExecStats::default();
    }

    // ---- memory regions -------------------------------------------------

    /// Binds `data` to a fresh region starting on a line boundary and returns
    /// its base address. `slack` extra zero elements follow the data inside
    /// the region, so full-width loads near the end stay in bounds.
    pub fn bind_region(&mut self, name: &str, role: Operand, data: &[T], slack: usize) -> usize {
        let words_per_line = (self.config.line_bytes / self.config.element_bytes).max(1);
        let base = self.mem.len().div_ceil(words_per_line) * words_per_line;
        self.mem.resize(base, T::zero());
        self.mem.extend_from_slice(data);
        self.mem.resize(base + data.len() + slack, T::zero());
        self.regions.push(Region { name: name.to_string(), role, base, len: data.len() + slack });
        base
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region(&self, name: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.name == name)
    }

    pub fn read_mem(&self, addr: usize, len: usize) -> Result<&[T], MachineError> {
        self.region_of(addr, len)?;
        Ok(&self.mem[addr..addr + len])
    }

    pub fn write_mem(&mut self, addr: usize, data: &[T]) -> Result<(), MachineError> {
        self.region_of(addr, data.len())?;
        self.mem[addr..addr + data.len()].copy_from_slice(data);
        Ok(())
    }

    fn region_of(&self, addr: usize, len: usize) -> Result<&Region, MachineError> {
        self.regions
            .iter()
            .find(|r| addr >= r.base && addr + len <= r.base + r.len)
            .ok_or(MachineError::OutOfBounds { addr, len })
    }

    // ---- register access (not instructions) --------------------------------

    pub fn vreg(&self, v: VReg) -> &[T] {
        let w = self.config.vl_max;
        &self.vrf[v.id() * w..(v.id() + 1) * w]
    }

    /// Writes a whole register (all `vl_max` lanes) directly, for test setup.
    pub fn set_vreg(&mut self, v: VReg, data: &[T]) {
        let w = self.config.vl_max;
        self.vrf[v.id() * w..v.id() * w + data.len()].copy_from_slice(data);
    }

    pub fn xreg(&self, x: XReg) -> i64 {
        self.xregs[x.id()]
    }

    pub fn set_xreg(&mut self, x: XReg, v: i64) {
        self.xregs[x.id()] = v;
    }

    pub fn freg(&self, f: FReg) -> T {
        self.fregs[f.id()]
    }

    pub fn set_freg(&mut self, f: FReg, v: T) {
        self.fregs[f.id()] = v;
    }

    /// Full architectural state, for equivalence checks.
    pub fn state(&self) -> (Vec<T>, [i64; NUM_XREGS], [T; NUM_XREGS], usize) {
        (self.vrf.clone(), self.xregs, self.fregs, self.vl)
    }

    // ---- bookkeeping --------------------------------------------------------

    fn retire(&mut self, class: InstrClass, operands: impl FnOnce(&Self) -> String) {
        self.stats.record(class, 1);
        if self.trace.is_some() {
            let entry = TraceEntry { class, operands: operands(self), vl: self.vl };
            self.trace.as_mut().expect("checked").push(entry);
        }
    }

    fn lines_spanned(&self, addr: usize, len: usize) -> u64 {
        if len == 0 {
            return 0;
        }
        let eb = self.config.element_bytes;
        let lb = self.config.line_bytes;
        let first = addr * eb / lb;
        let last = ((addr + len) * eb - 1) / lb;
        (last - first + 1) as u64
    }

    fn lane_range(&self, v: VReg) -> std::ops::Range<usize> {
        let base = v.id() * self.config.vl_max;
        base..base + self.vl
    }

    fn mem_operand(&self, addr: usize) -> String {
        match self.region_of(addr, 1) {
            Ok(r) => format!("{}[{}]", r.name, addr - r.base),
            Err(_) => format!("@{addr}"),
        }
    }

    // ---- executors ----------------------------------------------------------

    /// Sets the active vector length to `min(requested, vl_max)`.
    pub fn set_vl(&mut self, requested: usize) -> Result<usize, MachineError> {
        if requested == 0 {
            return Err(MachineError::ZeroVectorLength);
        }
        self.vl = requested.min(self.config.vl_max);
        self.retire(InstrClass::SetVl, |_| format!("{requested}"));
        Ok(self.vl)
    }

    pub fn vload(&mut self, vd: VReg, addr: usize) -> Result<(), MachineError> {
        let vl = self.vl;
        let role = self.region_of(addr, vl)?.role;
        let lanes = self.lane_range(vd);
        self.vrf[lanes].copy_from_slice(&self.mem[addr..addr + vl]);
        self.stats.record_load(role, vl as u64);
        self.stats.mem_lines_touched += self.lines_spanned(addr, vl);
        self.retire(InstrClass::VLoad, |s| format!("{vd}, {}", s.mem_operand(addr)));
        Ok(())
    }

    pub fn vstore(&mut self, vs: VReg, addr: usize) -> Result<(), MachineError> {
        let vl = self.vl;
        let role = self.region_of(addr, vl)?.role;
        let lanes = self.lane_range(vs);
        self.mem[addr..addr + vl].copy_from_slice(&self.vrf[lanes]);
        self.stats.record_store(role, vl as u64);
        self.stats.mem_lines_touched += self.lines_spanned(addr, vl);
        self.retire(InstrClass::VStore, |s| format!("{vs}, {}", s.mem_operand(addr)));
        Ok(())
    }

    /// `vd[i] += f[rs] * vs[i]`
    pub fn vmacc_vx(&mut self, vd: VReg, rs: FReg, vs: VReg) {
        let s = self.fregs[rs.id()];
        let (d, src) = (self.lane_range(vd), self.lane_range(vs));
        for (di, si) in d.zip(src) {
            self.vrf[di] = self.vrf[di] + s * self.vrf[si];
        }
        self.retire(InstrClass::VmaccVx, |_| format!("{vd}, {rs}, {vs}"));
    }

    /// `vd[i] += va[i] * vb[i]`
    pub fn vmacc_vv(&mut self, vd: VReg, va: VReg, vb: VReg) {
        let (d, a, b) = (self.lane_range(vd), self.lane_range(va), self.lane_range(vb));
        for ((di, ai), bi) in d.zip(a).zip(b) {
            self.vrf[di] = self.vrf[di] + self.vrf[ai] * self.vrf[bi];
        }
        self.retire(InstrClass::VmaccVv, |_| format!("{vd}, {va}, {vb}"));
    }

    /// Broadcasts `vs[index]` into every active lane of `vd`.
    pub fn vrgather_vx(&mut self, vd: VReg, vs: VReg, index: usize) -> Result<(), MachineError> {
        if index >= self.vl {
            return Err(MachineError::IndexOutOfRange { index, vl: self.vl });
        }
        let v = self.vrf[vs.id() * self.config.vl_max + index];
        let lanes = self.lane_range(vd);
        self.vrf[lanes].fill(v);
        self.retire(InstrClass::VrgatherVx, |_| format!("{vd}, {vs}, {index}"));
        Ok(())
    }

    /// `vd[i] = vs[i + 1]` for `i < vl - 1`, and `vd[vl - 1] = 0`.
    pub fn vslide1down(&mut self, vd: VReg, vs: VReg) {
        let vl = self.vl;
        let src = vs.id() * self.config.vl_max;
        let dst = vd.id() * self.config.vl_max;
        if vl > 1 {
            self.vrf.copy_within(src + 1..src + vl, dst);
        }
        self.vrf[dst + vl - 1] = T::zero();
        self.retire(InstrClass::Vslide1down, |_| format!("{vd}, {vs}"));
    }

    /// `f[rd] = vs[0]`
    pub fn vmv_x_s(&mut self, rd: FReg, vs: VReg) {
        self.fregs[rd.id()] = self.vrf[vs.id() * self.config.vl_max];
        self.retire(InstrClass::VmvXS, |_| format!("{rd}, {vs}"));
    }

    pub fn vmv_zero(&mut self, vd: VReg) {
        let lanes = self.lane_range(vd);
        self.vrf[lanes].fill(T::zero());
        self.retire(InstrClass::VmvZero, |_| format!("{vd}"));
    }

    /// `x[rd] = mem[addr]`, for index values stored in memory.
    pub fn load_scalar(&mut self, rd: XReg, addr: usize) -> Result<(), MachineError> {
        self.load_index(rd, addr, None)
    }

    /// `x[rd] = mem[addr] + x[offset]`: an index load whose in-block index is
    /// combined with a block offset held in another register. Counted as one
    /// scalar load.
    pub fn load_index(&mut self, rd: XReg, addr: usize, offset: Option<XReg>) -> Result<(), MachineError> {
        let role = self.region_of(addr, 1)?.role;
        let raw = self.mem[addr].to_i64().unwrap_or(0);
        self.xregs[rd.id()] = raw + offset.map_or(0, |o| self.xregs[o.id()]);
        self.stats.record_load(role, 1);
        self.stats.mem_lines_touched += 1;
        self.retire(InstrClass::ScalarLoad, |s| match offset {
            Some(o) => format!("{rd}, {}, +{o}", s.mem_operand(addr)),
            None => format!("{rd}, {}", s.mem_operand(addr)),
        });
        Ok(())
    }

    /// `f[rd] = mem[addr]`, a matrix element loaded into the scalar side.
    pub fn load_scalar_value(&mut self, rd: FReg, addr: usize) -> Result<(), MachineError> {
        let role = self.region_of(addr, 1)?.role;
        self.fregs[rd.id()] = self.mem[addr];
        self.stats.record_load(role, 1);
        self.stats.mem_lines_touched += 1;
        self.retire(InstrClass::ScalarLoad, |s| format!("{rd}, {}", s.mem_operand(addr)));
        Ok(())
    }

    /// Block-offset computation for stored slot `slot` of an `n:m` row:
    /// `x[rd] = base + ((slot / n) mod wrap) * m`, with `wrap = None` meaning
    /// no modulus. Shift-based when `n` is a power of two.
    pub fn block_offset(&mut self, rd: XReg, slot: usize, n: usize, m: usize, wrap: Option<usize>, base: i64) {
        let mut block = if n.is_power_of_two() { slot >> n.trailing_zeros() } else { slot / n };
        if let Some(w) = wrap {
            block %= w;
        }
        self.xregs[rd.id()] = base + ((block << m.trailing_zeros()) as i64);
        self.retire(InstrClass::ScalarAlu, |_| format!("{rd}, slot={slot}"));
    }

    /// `vd[i] += vs2[0] * vrf[x[rs] mod 32][i]`
    pub fn vindexmac_vx(&mut self, vd: VReg, vs2: VReg, rs: XReg) {
        let src = VReg::new((self.xregs[rs.id()] as u64 & 0x1f) as usize);
        if src == vd {
            self.hazards.push(AliasHazard { instruction: self.stats.total_instructions, vd });
        }
        let head = self.vrf[vs2.id() * self.config.vl_max];
        let (d, s) = (self.lane_range(vd), self.lane_range(src));
        for (di, si) in d.zip(s) {
            self.vrf[di] = self.vrf[di] + head * self.vrf[si];
        }
        self.retire(InstrClass::Vindexmac, |_| format!("{vd}, {vs2}, {rs}={src}"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn machine(vl: usize) -> VectorMachine<i64> {
        VectorMachine::new(MachineConfig::new(vl).unwrap())
    }

    const V0: VReg = VReg::new(0);
    const V1: VReg = VReg::new(1);
    const V2: VReg = VReg::new(2);
    const V3: VReg = VReg::new(3);

    #[test]
    fn set_vl_clamps() {
        let mut m = machine(16);
        assert_eq!(m.set_vl(16).unwrap(), 16);
        assert_eq!(m.set_vl(40).unwrap(), 16);
        assert_eq!(m.set_vl(3).unwrap(), 3);
        assert_eq!(m.set_vl(0), Err(MachineError::ZeroVectorLength));
        assert_eq!(m.snapshot_stats().count(InstrClass::SetVl), 3);
        assert!(MachineConfig::new(12).is_err());
    }

    #[test]
    fn vload_copies_active_lanes_only() {
        let mut m = machine(4);
        let base = m.bind_region("a", Operand::A, &[1, 2, 3, 4], 0);
        m.vload(V1, base).unwrap();
        assert_eq!(m.vreg(V1), &[1, 2, 3, 4]);
        m.set_vreg(V2, &[9, 9, 9, 9]);
        m.set_vl(3).unwrap();
        m.vload(V2, base).unwrap();
        assert_eq!(m.vreg(V2), &[1, 2, 3, 9]);
        assert_eq!(m.vload(V2, base + 2), Err(MachineError::OutOfBounds { addr: base + 2, len: 3 }));
        let s = m.snapshot_stats();
        assert_eq!(s.count(InstrClass::VLoad), 2);
        assert_eq!(s.mem_elements_loaded, 7);
        assert_eq!(s.traffic(Operand::A).loaded, 7);
    }

    #[test]
    fn line_counting_per_instruction() {
        let mut m: VectorMachine<f32> = VectorMachine::new(MachineConfig::new(16).unwrap());
        let base = m.bind_region("b", Operand::B, &[0.0; 32], 0);
        m.vload(V0, base).unwrap();
        m.vload(V1, base).unwrap();
        assert_eq!(m.snapshot_stats().mem_lines_touched, 2);
        m.vload(V1, base + 1).unwrap();
        assert_eq!(m.snapshot_stats().mem_lines_touched, 4);
        m.reset_stats();
        m.vstore(V0, base + 16).unwrap();
        assert_eq!(m.snapshot_stats().mem_lines_touched, 1);
    }

    #[test]
    fn store_then_load_round_trips() {
        let mut m = machine(4);
        let base = m.bind_region("c", Operand::C, &[0; 4], 0);
        m.set_vreg(V0, &[5, 6, 7, 8]);
        m.vstore(V0, base).unwrap();
        m.vload(V1, base).unwrap();
        assert_eq!(m.vreg(V1), m.vreg(V0));
        m.set_vl(1).unwrap();
        m.set_vreg(V0, &[1, 1, 1, 1]);
        m.vstore(V0, base).unwrap();
        assert_eq!(m.read_mem(base, 4).unwrap(), &[1, 6, 7, 8]);
        assert_eq!(m.snapshot_stats().mem_elements_stored, 5);
    }

    #[test]
    fn vmacc_vx_cases() {
        let mut m = machine(4);
        m.set_vl(2).unwrap();
        m.set_vreg(V1, &[1, 2, 0, 0]);
        m.set_vreg(V0, &[10, 10, 0, 0]);
        m.set_freg(FReg::new(0), 2);
        m.vmacc_vx(V0, FReg::new(0), V1);
        assert_eq!(&m.vreg(V0)[..2], &[12, 14]);
        m.set_freg(FReg::new(0), 0);
        m.vmacc_vx(V0, FReg::new(0), V1);
        assert_eq!(&m.vreg(V0)[..2], &[12, 14]);
    }

    #[test]
    fn vmacc_vv_cases() {
        let mut m = machine(4);
        m.set_vl(2).unwrap();
        m.set_vreg(V1, &[2, 3, 0, 0]);
        m.set_vreg(V2, &[4, 5, 0, 0]);
        m.vmacc_vv(V0, V1, V2);
        assert_eq!(&m.vreg(V0)[..2], &[8, 15]);
    }

    #[test]
    fn gather_broadcasts() {
        let mut m = machine(4);
        m.set_vreg(V1, &[5, 6, 7, 8]);
        m.vrgather_vx(V0, V1, 2).unwrap();
        assert_eq!(m.vreg(V0), &[7, 7, 7, 7]);
        m.set_vl(2).unwrap();
        assert_eq!(m.vrgather_vx(V0, V1, 2), Err(MachineError::IndexOutOfRange { index: 2, vl: 2 }));
    }

    #[test]
    fn slide_drains() {
        let mut m = machine(4);
        m.set_vreg(V1, &[1, 2, 3, 4]);
        m.vslide1down(V1, V1);
        assert_eq!(m.vreg(V1), &[2, 3, 4, 0]);
        for _ in 0..3 {
            m.vslide1down(V1, V1);
        }
        assert_eq!(m.vreg(V1), &[0, 0, 0, 0]);
    }

    #[test]
    fn slide_respects_tail() {
        let mut m = machine(4);
        m.set_vreg(V1, &[1, 2, 3, 4]);
        m.set_vl(2).unwrap();
        m.vslide1down(V1, V1);
        assert_eq!(m.vreg(V1), &[2, 0, 3, 4]);
    }

    #[test]
    fn vmv_x_s_reads_head() {
        let mut m = machine(4);
        m.set_vreg(V1, &[9, 1, 2, 3]);
        m.set_vl(1).unwrap();
        m.vmv_x_s(FReg::new(3), V1);
        assert_eq!(m.freg(FReg::new(3)), 9);
    }

    #[test]
    fn vmv_zero_tail_untouched() {
        let mut m = machine(4);
        m.set_vreg(V1, &[1, 2, 3, 4]);
        m.set_vl(3).unwrap();
        m.vmv_zero(V1);
        assert_eq!(m.vreg(V1), &[0, 0, 0, 4]);
    }

    #[test]
    fn scalar_loads() {
        let mut m = machine(4);
        let base = m.bind_region("idx", Operand::AIndex, &[3, 1], 0);
        m.load_scalar(XReg::new(1), base).unwrap();
        assert_eq!(m.xreg(XReg::new(1)), 3);
        m.set_xreg(XReg::new(2), 16);
        m.load_index(XReg::new(3), base + 1, Some(XReg::new(2))).unwrap();
        assert_eq!(m.xreg(XReg::new(3)), 17);
        m.load_scalar_value(FReg::new(0), base).unwrap();
        assert_eq!(m.freg(FReg::new(0)), 3);
        assert!(m.load_scalar(XReg::new(1), base + 2).is_err());
        let s = m.snapshot_stats();
        assert_eq!(s.count(InstrClass::ScalarLoad), 3);
        assert_eq!(s.count(InstrClass::VLoad), 0);
        assert_eq!(s.mem_elements_loaded, 3);
    }

    #[test]
    fn block_offset_arithmetic() {
        let mut m = machine(4);
        m.block_offset(XReg::new(0), 4, 3, 4, None, 0);
        assert_eq!(m.xreg(XReg::new(0)), 4);
        m.block_offset(XReg::new(0), 9, 1, 4, Some(4), 16);
        assert_eq!(m.xreg(XReg::new(0)), 16 + 4);
    }

    #[test]
    fn vindexmac_definition() {
        let mut m = machine(4);
        m.set_vreg(V3, &[1, 2, 3, 4]);
        m.set_vreg(V1, &[2, 0, 0, 0]);
        m.set_xreg(XReg::new(5), 3);
        m.vindexmac_vx(V0, V1, XReg::new(5));
        assert_eq!(m.vreg(V0), &[2, 4, 6, 8]);
        m.set_xreg(XReg::new(5), 35);
        m.vindexmac_vx(V0, V1, XReg::new(5));
        assert_eq!(m.vreg(V0), &[4, 8, 12, 16]);
        m.set_vreg(V1, &[0, 7, 7, 7]);
        m.vindexmac_vx(V0, V1, XReg::new(5));
        assert_eq!(m.vreg(V0), &[4, 8, 12, 16]);
        assert!(m.hazards().is_empty());
        let s = m.snapshot_stats();
        assert_eq!(s.count(InstrClass::Vindexmac), 3);
        assert_eq!(s.mem_elements_loaded, 0);
    }

    #[test]
    fn vindexmac_alias_is_reported() {
        let mut m = machine(4);
        m.set_xreg(XReg::new(1), 0);
        m.vindexmac_vx(V0, V1, XReg::new(1));
        assert_eq!(m.hazards(), &[AliasHazard { instruction: 0, vd: V0 }]);
    }

    #[test]
    fn stats_snapshot_and_reset() {
        let mut m = machine(4);
        assert!(m.snapshot_stats().is_zero());
        m.vmv_zero(V0);
        let snap = m.snapshot_stats();
        m.vmv_zero(V0);
        assert_eq!(snap.total_instructions, 1);
        m.reset_stats();
        assert!(m.snapshot_stats().is_zero());
    }

    #[test]
    fn trace_lines() {
        let mut m = machine(4);
        m.enable_trace();
        let base = m.bind_region("B", Operand::B, &[0; 8], 0);
        m.set_vl(4).unwrap();
        m.vload(V1, base + 4).unwrap();
        let t = m.take_trace();
        assert_eq!(t[0].to_string(), "set_vl\t4\t4");
        assert_eq!(t[1].to_string(), "vload\tv1, B[4]\t4");
    }
}

use nmvec::machine::{FReg, VReg, XReg};
use nmvec::{InstrClass, MachineConfig, Operand, VectorMachine};
use proptest::prelude::*;

fn seeded(vl: usize, regs: &[i64]) -> VectorMachine<i64> {
    let mut m = VectorMachine::new(MachineConfig::new(vl).unwrap());
    for (r, chunk) in regs.chunks(vl).enumerate().take(32) {
        m.set_vreg(VReg::new(r), chunk);
    }
    m
}

fn vrf_strategy(vl: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-50i64..50, 32 * vl)
}

proptest! {
    #[test]
    fn vindexmac_equals_extract_then_macc(
        regs in vrf_strategy(8), vd in 0usize..32, vs2 in 0usize..32, idx in any::<i64>(), vl in 1usize..=8,
    ) {
        let mut a = seeded(8, &regs);
        let mut b = seeded(8, &regs);
        for m in [&mut a, &mut b] {
            m.set_vl(vl).unwrap();
            m.set_xreg(XReg::new(5), idx);
        }
        a.vindexmac_vx(VReg::new(vd), VReg::new(vs2), XReg::new(5));
        b.vmv_x_s(FReg::new(0), VReg::new(vs2));
        b.vmacc_vx(VReg::new(vd), FReg::new(0), VReg::new((idx & 0x1f) as usize));
        prop_assert_eq!(a.state().0, b.state().0);
        prop_assert_eq!(a.state().1, b.state().1);
        prop_assert_eq!(a.snapshot_stats().count(InstrClass::Vindexmac), 1);
        prop_assert_eq!(a.snapshot_stats().memory_accesses(), 0);
    }

    #[test]
    fn gather_then_vv_equals_vx(regs in vrf_strategy(8), j in 0usize..8) {
        let mut a = seeded(8, &regs);
        let mut b = seeded(8, &regs);
        a.vrgather_vx(VReg::new(9), VReg::new(1), j).unwrap();
        a.vmacc_vv(VReg::new(3), VReg::new(9), VReg::new(2));
        b.set_freg(FReg::new(2), regs[8 + j]);
        b.vmacc_vx(VReg::new(3), FReg::new(2), VReg::new(2));
        prop_assert_eq!(a.vreg(VReg::new(3)), b.vreg(VReg::new(3)));
    }

    #[test]
    fn lanes_beyond_vl_are_untouched(regs in vrf_strategy(16), vl in 1usize..16, ops in prop::collection::vec(0u8..8, 1..40)) {
        let mut m = seeded(16, &regs);
        let base = m.bind_region("x", Operand::Other, &regs[..64], 16);
        m.set_vl(vl).unwrap();
        m.set_xreg(XReg::new(1), 7);
        for (i, op) in ops.iter().enumerate() {
            let (d, s) = (VReg::new(i % 32), VReg::new((i * 7 + 3) % 32));
            match op {
                0 => m.vload(d, base + i % 40).unwrap(),
                1 => m.vstore(s, base + i % 40).unwrap(),
                2 => m.vmacc_vv(d, s, VReg::new(1)),
                3 => m.vslide1down(d, s),
                4 => m.vmv_zero(d),
                5 => m.vrgather_vx(d, s, i % vl).unwrap(),
                6 => m.vindexmac_vx(d, s, XReg::new(1)),
                _ => m.vmacc_vx(d, FReg::new(0), s),
            }
        }
        let (vrf, ..) = m.state();
        for r in 0..32 {
            prop_assert_eq!(&vrf[r * 16 + vl..(r + 1) * 16], &regs[r * 16 + vl..(r + 1) * 16]);
        }
        let stats = m.snapshot_stats();
        prop_assert_eq!(stats.total_instructions, ops.len() as u64 + 1);
        let class_sum: u64 = InstrClass::ALL.iter().map(|&c| stats.count(c)).sum();
        prop_assert_eq!(class_sum, stats.total_instructions);
        let vector_moves = ops.iter().filter(|&&o| o <= 1).count() as u64;
        prop_assert_eq!(stats.memory_accesses(), vector_moves * vl as u64);
    }

    #[test]
    fn slides_walk_the_register(v in prop::collection::vec(-9i64..9, 8)) {
        let mut m = seeded(8, &[]);
        m.set_vreg(VReg::new(0), &v);
        for (k, &expected) in v.iter().enumerate() {
            m.vmv_x_s(FReg::new(1), VReg::new(0));
            prop_assert_eq!(m.freg(FReg::new(1)), expected, "element {}", k);
            m.vslide1down(VReg::new(0), VReg::new(0));
        }
        prop_assert!(m.vreg(VReg::new(0)).iter().all(|&x| x == 0));
    }
}

#[test]
fn line_counting_is_per_instruction() {
    let mut m: VectorMachine<f32> = VectorMachine::new(MachineConfig::new(16).unwrap());
    let base = m.bind_region("row", Operand::B, &[1.0; 32], 0);
    m.vload(VReg::new(0), base).unwrap();
    m.vload(VReg::new(1), base).unwrap();
    assert_eq!(m.snapshot_stats().mem_lines_touched, 2);
    m.vload(VReg::new(1), base + 8).unwrap();
    assert_eq!(m.snapshot_stats().mem_lines_touched, 4);
    m.vstore(VReg::new(1), base + 16).unwrap();
    assert_eq!(m.snapshot_stats().mem_lines_touched, 5);
}

#[test]
fn trace_lines_are_tab_separated() {
    let mut m: VectorMachine<i32> = VectorMachine::new(MachineConfig::new(4).unwrap());
    m.enable_trace();
    let base = m.bind_region("B", Operand::B, &[1, 2, 3, 4], 0);
    m.set_vl(3).unwrap();
    m.vload(VReg::new(2), base).unwrap();
    let lines: Vec<String> = m.trace().unwrap().iter().map(|e| e.to_string()).collect();
    assert_eq!(lines[1], "vload\tv2, B[0]\t3");
    assert_eq!(lines[0].split('\t').count(), 3);
}

#[test]
fn snapshot_is_a_copy() {
    let mut m: VectorMachine<i64> = VectorMachine::new(MachineConfig::new(4).unwrap());
    assert!(m.snapshot_stats().is_zero());
    m.vmv_zero(VReg::new(0));
    let snap = m.snapshot_stats();
    m.vmv_zero(VReg::new(0));
    assert_eq!(snap.total_instructions, 1);
    m.reset_stats();
    assert!(m.snapshot_stats().is_zero());
}

#[test]
fn trace_names_the_region_that_starts_at_an_address() {
    let mut m: VectorMachine<i32> = VectorMachine::new(MachineConfig::new(4).unwrap());
    m.enable_trace();
    m.bind_region("first", Operand::A, &[0; 16], 0);
    let second = m.bind_region("second", Operand::B, &[0; 4], 0);
    m.vload(VReg::new(0), second).unwrap();
    assert_eq!(m.trace().unwrap()[0].operands, "v0, second[0]");
}

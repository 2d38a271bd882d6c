use nmvec::kernels::{tiled_matmul, Algorithm, KernelConfig};
use nmvec::workload::random_problem;
use nmvec::{expected_counts, MachineConfig, Shape, SparsityPattern, VectorMachine};

fn configs() -> Vec<KernelConfig> {
    let mut out: Vec<KernelConfig> = Algorithm::ALL.iter().map(|&a| KernelConfig::new(a)).collect();
    for (i, o) in [(1, 2), (4, 3), (16, 8)] {
        out.push(KernelConfig::spmm(i, o));
    }
    for (o, m) in [(2, 1), (3, 2), (8, 4)] {
        out.push(KernelConfig::proposed(o, m));
        out.push(KernelConfig::proposed(o, m).with_b_stationary(false));
    }
    out.push(KernelConfig::new(Algorithm::Alg6Vimac).with_b_stationary(false));
    out.push(KernelConfig::proposed(2, 1).with_tile(8, 16));
    out.push(KernelConfig::proposed(2, 1).with_tile(8, 16).with_b_stationary(false));
    out
}

#[test]
fn predictions_match_counters() {
    let shapes = [Shape::new(1, 16, 1), Shape::new(13, 64, 23), Shape::new(32, 96, 40), Shape::new(8, 8, 8)];
    let patterns = [(1, 2), (1, 4), (2, 4), (3, 4), (4, 4), (2, 8)];
    for shape in shapes {
        for (n, m) in patterns {
            let pattern = SparsityPattern::new(n, m).unwrap();
            if shape.inner % m != 0 {
                continue;
            }
            let problem = random_problem::<i64>(shape, pattern, 11).unwrap();
            for vl in [4, 8, 16, 32] {
                for config in configs() {
                    if config.algorithm.uses_vindexmac() && config.tile_rows % m != 0 {
                        continue;
                    }
                    let mut vm = VectorMachine::new(MachineConfig::new(vl).unwrap());
                    let run = tiled_matmul(&mut vm, &problem, &config).unwrap();
                    let predicted = expected_counts(shape, pattern, &config, vl).unwrap();
                    assert_eq!(
                        run.stats.without_lines(),
                        predicted,
                        "{} {n}:{m} vl={vl} {shape:?}",
                        config.label()
                    );
                }
            }
        }
    }
}

#[test]
fn zero_rows_execute_nothing() {
    let pattern = SparsityPattern::new(2, 4).unwrap();
    let problem = random_problem::<i32>(Shape::new(0, 16, 16), pattern, 1).unwrap();
    for config in configs() {
        let mut vm = VectorMachine::new(MachineConfig::new(16).unwrap());
        let run = tiled_matmul(&mut vm, &problem, &config).unwrap();
        assert!(run.stats.is_zero());
    }
}

//! Column stripes of B distributed over independent cores.

use crate::element::Element;
use crate::machine::{ExecStats, MachineConfig, VectorMachine};
use crate::sparse::DenseMatrix;

use super::{execute, stripes, KernelConfig, KernelError, MatmulProblem};

/// Work and counters of one core.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreRun {
    pub core: usize,
    pub stripes: Vec<usize>,
    pub stats: ExecStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MulticoreRun<T> {
    pub c: DenseMatrix<T>,
    pub cores: Vec<CoreRun>,
    /// Sum of the per-core counters.
    pub merged: ExecStats,
}

/// Stripe `s` runs on core `s % cores`.
pub fn stripe_assignment(num_stripes: usize, cores: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); cores];
    for s in 0..num_stripes {
        out[s % cores].push(s);
    }
    out
}

/// Runs `config` with each core owning a private machine and its share of
/// the column stripes; cores run on separate threads and results are merged.
pub fn multicore_run<T: Element>(
    machine: MachineConfig,
    problem: &MatmulProblem<T>,
    config: &KernelConfig,
    cores: usize,
) -> Result<MulticoreRun<T>, KernelError> {
    if cores == 0 {
        return Err(KernelError::InvalidConfig("at least one core is required".into()));
    }
    let all = stripes(problem.cols(), machine.vl_max);
    let assignment = stripe_assignment(all.len(), cores);
    let results: Vec<Result<(DenseMatrix<T>, ExecStats), KernelError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = assignment
            .iter()
            .map(|ids| {
                scope.spawn(move || {
                    let mut vm = VectorMachine::new(machine);
                    execute(&mut vm, problem, config, ids).map(|run| (run.c, run.stats))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("core thread panicked")).collect()
    });

    let mut c = DenseMatrix::zeros(problem.rows(), problem.cols());
    let mut runs = Vec::with_capacity(cores);
    for (core, (ids, result)) in assignment.into_iter().zip(results).enumerate() {
        let (part, stats) = result?;
        for &s in &ids {
            let (c0, w) = all[s];
            for r in 0..problem.rows() {
                for col in c0..c0 + w {
                    c.set(r, col, part.get(r, col));
                }
            }
        }
        runs.push(CoreRun { core, stripes: ids, stats });
    }
    let merged = runs.iter().map(|r| r.stats).sum();
    Ok(MulticoreRun { c, cores: runs, merged })
}

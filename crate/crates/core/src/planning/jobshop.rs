//! Job-shop scheduling as start-time cells, precedence chains and one
//! ordering choice per pair of operations sharing a machine.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::PlanningError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Operation {
    pub machine: usize,
    pub duration: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobShopInstance {
    pub machines: usize,
    /// Each job's operations in processing order.
    pub jobs: Vec<Vec<Operation>>,
}

impl JobShopInstance {
    pub fn new(machines: usize, jobs: Vec<Vec<(usize, i64)>>) -> Self {
        let jobs = jobs
            .into_iter()
            .map(|ops| ops.into_iter().map(|(machine, duration)| Operation { machine, duration }).collect())
            .collect();
        JobShopInstance { machines, jobs }
    }

    pub fn validate(&self) -> Result<(), PlanningError> {
        for (j, ops) in self.jobs.iter().enumerate() {
            if ops.is_empty() {
                return Err(PlanningError::EmptyJob(j));
            }
            let mut seen = vec![false; self.machines];
            for (k, op) in ops.iter().enumerate() {
                if op.duration <= 0 {
                    return Err(PlanningError::BadDuration { job: j, op: k, duration: op.duration });
                }
                if op.machine >= self.machines {
                    return Err(PlanningError::BadMachine { job: j, op: k, machine: op.machine, machines: self.machines });
                }
                if std::mem::replace(&mut seen[op.machine], true) {
                    return Err(PlanningError::RepeatedMachine(j));
                }
            }
        }
        Ok(())
    }

    /// Sum of all durations; no optimal schedule ends later.
    pub fn horizon_bound(&self) -> i64 {
        self.jobs.iter().flatten().map(|o| o.duration).sum()
    }

    /// Pairs of operations `(job, index)` that share a machine.
    pub fn conflicts(&self) -> Vec<((usize, usize), (usize, usize))> {
        let ops: Vec<(usize, usize, usize)> =
            self.jobs.iter().enumerate().flat_map(|(j, o)| o.iter().enumerate().map(move |(k, op)| (j, k, op.machine))).collect();
        let mut out = Vec::new();
        for (i, a) in ops.iter().enumerate() {
            for b in &ops[i + 1..] {
                if a.2 == b.2 {
                    out.push(((a.0, a.1), (b.0, b.1)));
                }
            }
        }
        out
    }

    /// Names of the start-time cells, job-major.
    pub fn start_names(&self) -> Vec<String> {
        self.jobs.iter().enumerate().flat_map(|(j, o)| (0..o.len()).map(move |k| format!("s_{j}_{k}"))).collect()
    }
}

/// The fixed 3 jobs × 3 machines instance of the corpus.
pub fn js_3x3_a() -> JobShopInstance {
    JobShopInstance::new(3, vec![vec![(0, 3), (1, 2), (2, 2)], vec![(0, 2), (2, 1), (1, 4)], vec![(1, 4), (2, 3), (0, 1)]])
}

/// Program `shop(mk)` whose query minimizes the makespan `mk` and shows
/// every start time.
pub fn emit_jobshop_program(inst: &JobShopInstance) -> Result<String, PlanningError> {
    inst.validate()?;
    let bound = inst.horizon_bound();
    let mut out = String::new();
    let _ = writeln!(out, "; {} jobs on {} machines", inst.jobs.len(), inst.machines);
    let _ = writeln!(out, "(def (shop mk)");
    let _ = writeln!(out, "  (int mk 0 {bound})");
    for (j, ops) in inst.jobs.iter().enumerate() {
        for (k, op) in ops.iter().enumerate() {
            let _ = writeln!(
                out,
                "  (int s_{j}_{k} 0 {bound}) (const d_{j}_{k} {d}) (cell e_{j}_{k}) (sum s_{j}_{k} d_{j}_{k} e_{j}_{k})",
                d = op.duration
            );
            if k + 1 < ops.len() {
                let _ = writeln!(out, "  (lesseq e_{j}_{k} s_{j}_{})", k + 1);
            } else {
                let _ = writeln!(out, "  (lesseq e_{j}_{k} mk)");
            }
        }
    }
    for ((ja, ka), (jb, kb)) in inst.conflicts() {
        let o = format!("o_{ja}_{ka}_{jb}_{kb}");
        let _ = writeln!(
            out,
            "  (choose {o} 0 1) (if {o} ((lesseq e_{ja}_{ka} s_{jb}_{kb})) ((lesseq e_{jb}_{kb} s_{ja}_{ka})))"
        );
    }
    let _ = writeln!(out, ")");
    let _ = writeln!(out, "(query (shop) (show mk {}) (minimize mk))", inst.start_names().join(" "));
    Ok(out)
}

//! Planning and scheduling problems written as ordinary programs, plus the
//! generators behind the example corpus.
//!
//! Horizon problems thread a step index `t` through one recursive
//! definition: each frame holds the state, action and reward of one step
//! and calls itself for step `t + 1` while `t + 1 < H`.

mod csp;
mod jobshop;
mod puzzles;

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::language::{parse, ParseError, StmtKind};

pub use csp::{generate_random_csp, CspConstraint, CspInstance, CspRelation};
pub use jobshop::{emit_jobshop_program, js_3x3_a, JobShopInstance, Operation};
pub use puzzles::{queens_program, send_more_money_program};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanningError {
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("action set is empty")]
    NoActions,
    #[error("job {0} has no operations")]
    EmptyJob(usize),
    #[error("operation {op} of job {job} has non-positive duration {duration}")]
    BadDuration { job: usize, op: usize, duration: i64 },
    #[error("operation {op} of job {job} uses machine {machine}, but there are only {machines}")]
    BadMachine { job: usize, op: usize, machine: usize, machines: usize },
    #[error("job {0} visits a machine twice")]
    RepeatedMachine(usize),
    #[error("at most 10 variables with domains of at most 6 values")]
    CspTooLarge,
}

/// A deterministic walk on the integer line.
///
/// Each step picks an action `a`, moves `s → s + a`, and earns
/// `step_reward`, plus `goal_reward` whenever the new state equals `goal`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonProblem {
    pub horizon: i64,
    pub start: i64,
    pub goal: i64,
    pub actions: Vec<i64>,
    pub step_reward: i64,
    pub goal_reward: i64,
}

impl HorizonProblem {
    /// Start at 0, goal at +3, moves of ±1, −1 per step and +10 on the goal.
    pub fn line_world(horizon: i64) -> Self {
        HorizonProblem { horizon, start: 0, goal: 3, actions: vec![-1, 1], step_reward: -1, goal_reward: 10 }
    }

    fn validate(&self) -> Result<(), PlanningError> {
        if self.horizon < 1 {
            return Err(PlanningError::EmptyHorizon);
        }
        if self.actions.is_empty() {
            return Err(PlanningError::NoActions);
        }
        Ok(())
    }
}

fn join(values: &[i64]) -> String {
    values.iter().map(i64::to_string).collect::<Vec<_>>().join(" ")
}

/// Program `plan(total, neg)` calling `step(t, s, acc, total)`; the query
/// minimizes `neg = −total`.
pub fn emit_horizon_program(p: &HorizonProblem) -> Result<String, PlanningError> {
    p.validate()?;
    let mut out = String::new();
    let _ = writeln!(out, "; horizon {}, start {}, goal {}, actions {{{}}}", p.horizon, p.start, p.goal, join(&p.actions));
    let _ = writeln!(
        out,
        "(def (plan total neg)
  (const t0 0)
  (const s0 {start})
  (const acc0 0)
  (const minus1 -1)
  (call step t0 s0 acc0 total)
  (product total minus1 neg))
",
        start = p.start
    );
    let _ = writeln!(
        out,
        "(def (step t s acc total)
  (const one 1)
  (const last {last})
  (const goal {goal})
  (const bonus {bonus})
  (const nothing 0)
  (const cost {cost})
  (choose a {actions})
  (cell s2) (sum s a s2)
  (cell hit) (is-eq hit s2 goal)
  (cell gain) (switch hit bonus nothing gain)
  (cell r) (sum cost gain r)
  (cell acc2) (sum acc r acc2)
  (cell t2) (sum t one t2)
  (cell more) (is-le more t2 last)
  (if more
    ((call step t2 s2 acc2 total))
    ((equal total acc2))))
",
        last = p.horizon - 1,
        goal = p.goal,
        bonus = p.goal_reward,
        cost = p.step_reward,
        actions = join(&p.actions),
    );
    let _ = writeln!(out, "(query (plan) (show total) (minimize neg))");
    Ok(out)
}

/// Static check that a horizon program only links step `t` to step `t + 1`:
/// every recursive call of `step` passes, as its index, a cell defined by
/// `(sum t one t2)` with `one` the constant 1, and `step` calls nothing else.
pub fn check_temporal_locality(text: &str) -> Result<(), String> {
    let program = parse(text).map_err(|e: ParseError| e.to_string())?;
    let step = program.definition("step").ok_or("no `step` definition")?;
    let index = step.params.first().ok_or("`step` has no index parameter")?;
    let mut consts = std::collections::BTreeMap::new();
    let mut successors = Vec::new();
    let mut calls = Vec::new();
    for s in &step.body {
        s.walk(&mut |s| match &s.kind {
            StmtKind::Const(n, v) => {
                consts.insert(n.clone(), v.as_integral());
            }
            StmtKind::Sum(a, b, c) if a == index => successors.push((b.clone(), c.clone())),
            StmtKind::Call { target, args } => calls.push((target.clone(), args.clone())),
            _ => {}
        });
    }
    if calls.is_empty() {
        return Err("`step` never recurses".into());
    }
    for (target, args) in calls {
        if target != "step" {
            return Err(format!("`step` calls `{target}`"));
        }
        let next = args.first().ok_or("call without an index")?;
        let ok = successors.iter().any(|(inc, out)| out == next && consts.get(inc) == Some(&Some(1)));
        if !ok {
            return Err(format!("recursive call passes `{next}`, which is not `{index} + 1`"));
        }
    }
    Ok(())
}

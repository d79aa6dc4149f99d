//! Random binary CSPs over small integer domains.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::rng::SeededRng;

use super::PlanningError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CspRelation {
    NotEqual,
    LessEq,
    SumEquals { total: i64 },
}

impl CspRelation {
    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CspRelation::NotEqual => a != b,
            CspRelation::LessEq => a <= b,
            CspRelation::SumEquals { total } => a + b == total,
        }
    }
}

/// `relation(x[a], x[b])` with `a < b`, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CspConstraint {
    pub a: usize,
    pub b: usize,
    pub relation: CspRelation,
}

/// Variables `x1..xn`, each ranging over `1..=domain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CspInstance {
    pub vars: usize,
    pub domain: i64,
    pub density: f64,
    pub seed: u64,
    pub constraints: Vec<CspConstraint>,
}

impl CspInstance {
    pub fn var_names(&self) -> Vec<String> {
        (1..=self.vars).map(|i| format!("x{i}")).collect()
    }

    pub fn text(&self) -> String {
        let names = self.var_names();
        let values: Vec<String> = (1..=self.domain).map(|v| v.to_string()).collect();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "; random csp: {} vars, domain {}, density {}, seed {}",
            self.vars, self.domain, self.density, self.seed
        );
        let _ = writeln!(out, "(def (csp {})", names.join(" "));
        for n in &names {
            let _ = writeln!(out, "  (choose {n} {})", values.join(" "));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let (x, y) = (&names[c.a], &names[c.b]);
            let _ = match c.relation {
                CspRelation::NotEqual => writeln!(out, "  (alldiff {x} {y})"),
                CspRelation::LessEq => writeln!(out, "  (lesseq {x} {y})"),
                CspRelation::SumEquals { total } => writeln!(out, "  (const k{i} {total}) (sum {x} {y} k{i})"),
            };
        }
        let _ = writeln!(out, ")");
        let _ = writeln!(out, "(query (csp) (show {}))", names.join(" "));
        out
    }
}

/// Each variable pair is constrained with probability `density`, by a
/// relation drawn uniformly from the catalog. Identical for identical seeds.
pub fn generate_random_csp(vars: usize, domain: i64, density: f64, seed: u64) -> Result<CspInstance, PlanningError> {
    if vars > 10 || !(1..=6).contains(&domain) {
        return Err(PlanningError::CspTooLarge);
    }
    let mut rng = SeededRng::new(seed);
    let mut constraints = Vec::new();
    for a in 0..vars {
        for b in a + 1..vars {
            if !rng.chance(density) {
                continue;
            }
            let relation = match rng.below(3) {
                0 => CspRelation::NotEqual,
                1 => CspRelation::LessEq,
                _ => CspRelation::SumEquals { total: rng.range_i64(2, 2 * domain) },
            };
            constraints.push(CspConstraint { a, b, relation });
        }
    }
    Ok(CspInstance { vars, domain, density, seed, constraints })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::language::parse;
    use crate::search::{solve, Query, UniformOracle};

    #[test]
    fn same_seed_same_text() {
        let a = generate_random_csp(6, 4, 0.4, 17).unwrap();
        assert_eq!(a.text(), generate_random_csp(6, 4, 0.4, 17).unwrap().text());
        assert_ne!(a.text(), generate_random_csp(6, 4, 0.4, 18).unwrap().text());
    }

    #[test]
    fn unconstrained_counts_every_assignment() {
        let inst = generate_random_csp(3, 2, 0.0, 1).unwrap();
        assert!(inst.constraints.is_empty());
        let p = Arc::new(parse(&inst.text()).unwrap());
        let q = Query::from_program(&p).unwrap();
        assert_eq!(solve(p, &q, &UniformOracle).unwrap().solutions.len(), 8);
    }

    #[test]
    fn size_limits() {
        assert_eq!(generate_random_csp(11, 3, 0.5, 0), Err(PlanningError::CspTooLarge));
        assert_eq!(generate_random_csp(3, 7, 0.5, 0), Err(PlanningError::CspTooLarge));
    }
}

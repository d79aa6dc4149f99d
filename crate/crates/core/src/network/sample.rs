//! Seeded random integer networks and a scheduling-order confluence check,
//! shared by the self-test command and the test suites.

use crate::lattice::PartialInfo;
use crate::rng::SeededRng;

use super::{Network, Origin, PropKind, Propagator};

fn random_content(rng: &mut SeededRng) -> PartialInfo {
    match rng.below(8) {
        0..=2 => PartialInfo::Nothing,
        3 | 4 => {
            let lo = rng.range_i64(-8, 4);
            PartialInfo::int_interval(lo, lo + rng.range_i64(2, 16))
        }
        5 => PartialInfo::domain((0..2 + rng.below(4)).map(|_| rng.range_i64(-4, 8))),
        6 => PartialInfo::int(rng.range_i64(-4, 8)),
        _ => PartialInfo::int_interval(0, 1),
    }
}

/// Some information that the value `w` satisfies.
fn content_around(w: i64, rng: &mut SeededRng) -> PartialInfo {
    match rng.below(6) {
        0 | 1 => PartialInfo::Nothing,
        2 | 3 => PartialInfo::int_interval(w - rng.range_i64(0, 6), w + rng.range_i64(0, 6)),
        4 => PartialInfo::domain(std::iter::once(w).chain((0..rng.below(4)).map(|_| rng.range_i64(-4, 8)))),
        _ => PartialInfo::int(w),
    }
}

fn random_kind(rng: &mut SeededRng, n: usize) -> (PropKind, [usize; 4]) {
    // Distinct cells per propagator.
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..4 {
        let j = i + rng.below(n - i);
        order.swap(i, j);
    }
    let [a, b, c, d] = [order[0], order[1], order[2], order[3]];
    let kind = match rng.below(8) {
        0 => PropKind::Sum { a, b, c },
        1 => PropKind::Product { a, b, c },
        2 => PropKind::Equal { a, b },
        3 => PropKind::LessEq { a, b },
        4 => PropKind::AllDiff { cells: if rng.below(2) == 0 { vec![a, b] } else { vec![a, b, c] } },
        5 => PropKind::IsEq { out: a, a: b, b: c },
        6 => PropKind::IsLe { out: a, a: b, b: c },
        _ => PropKind::Switch { cond: a, then: b, els: c, out: d },
    };
    (kind, [a, b, c, d])
}

/// Whether the assignment `w` satisfies the relation of `kind`.
fn satisfied(kind: &PropKind, w: &[i64]) -> bool {
    let bit = |x: bool| x as i64;
    match kind {
        PropKind::Sum { a, b, c } => w[*a] + w[*b] == w[*c],
        PropKind::Product { a, b, c } => w[*a] * w[*b] == w[*c],
        PropKind::Equal { a, b } => w[*a] == w[*b],
        PropKind::LessEq { a, b } => w[*a] <= w[*b],
        PropKind::AllDiff { cells } => cells.iter().enumerate().all(|(i, x)| cells[i + 1..].iter().all(|y| w[*x] != w[*y])),
        PropKind::IsEq { out, a, b } => w[*out] == bit(w[*a] == w[*b]),
        PropKind::IsLe { out, a, b } => w[*out] == bit(w[*a] <= w[*b]),
        PropKind::Switch { cond, then, els, out } => {
            matches!(w[*cond], 0 | 1) && w[*out] == if w[*cond] == 1 { w[*then] } else { w[*els] }
        }
        _ => false,
    }
}

/// A network of 4–9 integer cells with 2–7 propagators, initial writes
/// applied and nothing run yet.
///
/// Three in four networks are planted: every propagator and initial write
/// is consistent with a hidden assignment, so they never contradict. The
/// rest are unconstrained and usually do.
pub fn random_network(rng: &mut SeededRng) -> Network {
    let mut net = Network::new();
    let n = 4 + rng.below(6);
    let cells: Vec<_> = (0..n).map(|i| net.add_cell(Origin::new(0, format!("c{i}")))).collect();
    let planted = rng.below(4) != 0;
    let witness: Vec<i64> = (0..n).map(|_| if rng.below(3) == 0 { rng.range_i64(0, 1) } else { rng.range_i64(-4, 8) }).collect();
    let props = 2 + rng.below(6);
    let mut attached = 0;
    for _ in 0..200 {
        if attached == props {
            break;
        }
        let (kind, _) = random_kind(rng, n);
        if planted && !satisfied(&kind, &witness) {
            continue;
        }
        let kind = relabel(kind, &cells);
        net.attach(Propagator::new(kind)).expect("cells exist");
        attached += 1;
    }
    for c in 0..n {
        let info = if planted { content_around(witness[c], rng) } else { random_content(rng) };
        net.write(cells[c], info).expect("cell exists");
    }
    net
}

fn relabel(kind: PropKind, cells: &[super::CellId]) -> PropKind {
    let m = |i: usize| cells[i];
    match kind {
        PropKind::Sum { a, b, c } => PropKind::Sum { a: m(a), b: m(b), c: m(c) },
        PropKind::Product { a, b, c } => PropKind::Product { a: m(a), b: m(b), c: m(c) },
        PropKind::Equal { a, b } => PropKind::Equal { a: m(a), b: m(b) },
        PropKind::LessEq { a, b } => PropKind::LessEq { a: m(a), b: m(b) },
        PropKind::AllDiff { cells: cs } => PropKind::AllDiff { cells: cs.into_iter().map(m).collect() },
        PropKind::IsEq { out, a, b } => PropKind::IsEq { out: m(out), a: m(a), b: m(b) },
        PropKind::IsLe { out, a, b } => PropKind::IsLe { out: m(out), a: m(a), b: m(b) },
        PropKind::Switch { cond, then, els, out } => PropKind::Switch { cond: m(cond), then: m(then), els: m(els), out: m(out) },
        other => other,
    }
}

/// Quiescent outcome: `None` on contradiction, else every cell's content.
pub fn fixpoint(mut net: Network, order: Option<&mut SeededRng>) -> Option<Vec<PartialInfo>> {
    const BUDGET: u64 = 1_000_000;
    let report = match order {
        None => net.run_to_quiescence(BUDGET),
        Some(rng) => net.run_with_order(BUDGET, &mut |len| rng.below(len)),
    };
    assert!(report.quiescent || report.contradiction.is_some(), "budget too small for a sample network");
    if report.contradiction.is_some() {
        return None;
    }
    Some(net.cells().iter().map(|c| c.content.clone()).collect())
}

#[derive(Debug, Clone, Default)]
pub struct ConfluenceReport {
    pub networks: usize,
    pub orders: usize,
    pub contradictory: usize,
    pub failures: Vec<String>,
}

impl ConfluenceReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs each of `networks` random networks under FIFO order and under
/// `orders` random dequeue orders, and compares the fixpoints.
pub fn check_confluence(networks: usize, orders: usize, seed: u64) -> ConfluenceReport {
    let mut rng = SeededRng::new(seed);
    let mut report = ConfluenceReport { networks, orders, ..Default::default() };
    for i in 0..networks {
        let net = random_network(&mut rng);
        let reference = fixpoint(net.clone(), None);
        if reference.is_none() {
            report.contradictory += 1;
        }
        for k in 0..orders {
            let mut order = rng.fork(k as u64);
            let other = fixpoint(net.clone(), Some(&mut order));
            let same = match (&reference, &other) {
                (Some(a), Some(b)) => a.iter().zip(b).all(|(x, y)| x.same_information(y)),
                (None, None) => true,
                _ => false,
            };
            if !same && report.failures.len() < 8 {
                report.failures.push(format!("network {i}, order {k}: {reference:?} vs {other:?}"));
            }
        }
    }
    report
}

//! Partial-information values.
//!
//! A [`PartialInfo`] describes what is currently known about one value. Cells
//! only ever accumulate information through [`merge`], which is the least upper
//! bound of the information order. "Types" are just coarse partial information:
//! declaring `x` an integer in `[0, 9]` is the same operation as learning it.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Identifier of one write into the network, used for contradiction provenance.
pub type WriteId = u64;

/// Tolerance used when comparing two exact real values.
pub const REAL_TOLERANCE: f64 = 1e-9;

/// Upper clamp of [`info_bits`].
pub const MAX_INFO_BITS: f64 = 64.0;

/// A concrete number. Integers and reals are kept apart so that integer
/// reasoning (rounding of division bounds, domain filtering) stays exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Int(i64),
    Real(f64),
}

impl Number {
    pub fn as_f64(self) -> f64 {
        match self {
            Number::Int(i) => i as f64,
            Number::Real(r) => r,
        }
    }

    /// Integer value if this number is (within tolerance) integral.
    pub fn as_integral(self) -> Option<i64> {
        match self {
            Number::Int(i) => Some(i),
            Number::Real(r) => {
                let rounded = r.round();
                if (r - rounded).abs() <= REAL_TOLERANCE && rounded.abs() < 9.2e18 {
                    Some(rounded as i64)
                } else {
                    None
                }
            }
        }
    }

    pub fn is_int(self) -> bool {
        matches!(self, Number::Int(_))
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Int(i) => write!(f, "{i}"),
            Number::Real(r) => write!(f, "{r}"),
        }
    }
}

/// What is known about a value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PartialInfo {
    Nothing,
    IntInterval { lo: i64, hi: i64 },
    RealInterval { lo: f64, hi: f64 },
    FiniteDomain(BTreeSet<i64>),
    Exact(Number),
    Contradiction(BTreeSet<WriteId>),
}

use PartialInfo::*;

impl Default for PartialInfo {
    fn default() -> Self {
        Nothing
    }
}

impl PartialInfo {
    pub fn int(v: i64) -> Self {
        Exact(Number::Int(v))
    }

    pub fn real(v: f64) -> Self {
        Exact(Number::Real(v))
    }

    pub fn boolean(b: bool) -> Self {
        Self::int(b as i64)
    }

    /// Normalizing constructor for integer intervals.
    pub fn int_interval(lo: i64, hi: i64) -> Self {
        match lo.cmp(&hi) {
            std::cmp::Ordering::Less => IntInterval { lo, hi },
            std::cmp::Ordering::Equal => Self::int(lo),
            std::cmp::Ordering::Greater => Self::contradiction(),
        }
    }

    pub fn real_interval(lo: f64, hi: f64) -> Self {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            Self::contradiction()
        } else if lo == hi {
            Self::real(lo)
        } else {
            RealInterval { lo, hi }
        }
    }

    pub fn domain<I: IntoIterator<Item = i64>>(values: I) -> Self {
        Self::from_set(values.into_iter().collect())
    }

    fn from_set(set: BTreeSet<i64>) -> Self {
        match set.len() {
            0 => Self::contradiction(),
            1 => Self::int(*set.iter().next().unwrap()),
            _ => FiniteDomain(set),
        }
    }

    pub fn contradiction() -> Self {
        Contradiction(BTreeSet::new())
    }

    pub fn is_nothing(&self) -> bool {
        matches!(self, Nothing)
    }

    pub fn is_contradiction(&self) -> bool {
        matches!(self, Contradiction(_))
    }

    pub fn exact(&self) -> Option<Number> {
        match self {
            Exact(n) => Some(*n),
            _ => None,
        }
    }

    pub fn exact_int(&self) -> Option<i64> {
        self.exact().and_then(Number::as_integral)
    }

    /// Whether every value this info admits is an integer.
    pub fn is_integral(&self) -> bool {
        match self {
            IntInterval { .. } | FiniteDomain(_) => true,
            Exact(n) => n.is_int(),
            _ => false,
        }
    }

    /// Finite numeric bounds, if known.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        match self {
            IntInterval { lo, hi } => Some((*lo as f64, *hi as f64)),
            RealInterval { lo, hi } => Some((*lo, *hi)),
            FiniteDomain(s) => Some((*s.first()? as f64, *s.last()? as f64)),
            Exact(n) => Some((n.as_f64(), n.as_f64())),
            _ => None,
        }
    }

    /// Integer bounds when the info is integral.
    pub fn int_bounds(&self) -> Option<(i64, i64)> {
        match self {
            IntInterval { lo, hi } => Some((*lo, *hi)),
            FiniteDomain(s) => Some((*s.first()?, *s.last()?)),
            Exact(Number::Int(v)) => Some((*v, *v)),
            _ => None,
        }
    }

    /// Number of admitted integers, or the real width.
    pub fn width(&self) -> Option<f64> {
        match self {
            IntInterval { lo, hi } => Some((*hi as f64 - *lo as f64) + 1.0),
            RealInterval { lo, hi } => Some(hi - lo),
            FiniteDomain(s) => Some(s.len() as f64),
            Exact(_) => Some(0.0),
            _ => None,
        }
    }

    /// Whether `v` is admitted.
    pub fn admits(&self, v: Number) -> bool {
        match self {
            Nothing => true,
            Contradiction(_) => false,
            IntInterval { lo, hi } => v.as_integral().is_some_and(|i| *lo <= i && i <= *hi),
            RealInterval { lo, hi } => {
                let x = v.as_f64();
                *lo <= x && x <= *hi
            }
            FiniteDomain(s) => v.as_integral().is_some_and(|i| s.contains(&i)),
            Exact(e) => exact_eq(*e, v),
        }
    }

    /// The info with the single integer `v` removed, when representable
    /// without losing soundness. Intervals only shrink at their endpoints.
    pub fn exclude(&self, v: i64) -> Option<PartialInfo> {
        match self {
            FiniteDomain(s) if s.contains(&v) => {
                let mut s = s.clone();
                s.remove(&v);
                Some(Self::from_set(s))
            }
            IntInterval { lo, hi } if *lo == v => Some(Self::int_interval(lo + 1, *hi)),
            IntInterval { lo, hi } if *hi == v => Some(Self::int_interval(*lo, hi - 1)),
            Exact(n) if n.as_integral() == Some(v) => Some(Self::contradiction()),
            _ => None,
        }
    }

    /// Information shared by both values (the lattice meet, over-approximated
    /// by the convex hull where the exact union is not representable).
    pub fn hull(&self, other: &PartialInfo) -> PartialInfo {
        match (self, other) {
            (Contradiction(_), x) | (x, Contradiction(_)) => x.clone(),
            (Nothing, _) | (_, Nothing) => Nothing,
            (a, b) => {
                if let (Some((alo, ahi)), Some((blo, bhi))) = (a.int_bounds(), b.int_bounds()) {
                    if let (FiniteDomain(_) | Exact(_), FiniteDomain(_) | Exact(_)) = (a, b) {
                        let mut s = a.int_values().unwrap_or_default();
                        s.extend(b.int_values().unwrap_or_default());
                        return Self::from_set(s);
                    }
                    return Self::int_interval(alo.min(blo), ahi.max(bhi));
                }
                match (a.bounds(), b.bounds()) {
                    (Some((alo, ahi)), Some((blo, bhi))) => {
                        Self::real_interval(alo.min(blo), ahi.max(bhi))
                    }
                    _ => Nothing,
                }
            }
        }
    }

    fn int_values(&self) -> Option<BTreeSet<i64>> {
        match self {
            FiniteDomain(s) => Some(s.clone()),
            Exact(n) => n.as_integral().map(|v| BTreeSet::from([v])),
            _ => None,
        }
    }

    /// Whether both values carry the same information (mutual refinement).
    pub fn same_information(&self, other: &PartialInfo) -> bool {
        refines(self, other) && refines(other, self)
    }

    /// Provenance of a contradiction.
    pub fn provenance(&self) -> Option<&BTreeSet<WriteId>> {
        match self {
            Contradiction(p) => Some(p),
            _ => None,
        }
    }
}

fn exact_eq(a: Number, b: Number) -> bool {
    match (a, b) {
        (Number::Int(x), Number::Int(y)) => x == y,
        _ => (a.as_f64() - b.as_f64()).abs() <= REAL_TOLERANCE,
    }
}

/// Exact value merged with anything else.
fn merge_exact(v: Number, other: &PartialInfo) -> PartialInfo {
    match other {
        Nothing => Exact(v),
        Exact(w) => {
            if !exact_eq(v, *w) {
                return PartialInfo::contradiction();
            }
            match (v, *w) {
                (Number::Int(_), _) => Exact(v),
                (_, Number::Int(_)) => Exact(*w),
                (Number::Real(x), Number::Real(y)) => PartialInfo::real(x.min(y)),
            }
        }
        IntInterval { .. } | FiniteDomain(_) => match v.as_integral() {
            Some(i) if other.admits(Number::Int(i)) => PartialInfo::int(i),
            _ => PartialInfo::contradiction(),
        },
        RealInterval { .. } => {
            if other.admits(v) {
                Exact(v)
            } else {
                PartialInfo::contradiction()
            }
        }
        Contradiction(p) => Contradiction(p.clone()),
    }
}

fn ceil_to_int(x: f64) -> i64 {
    x.ceil().clamp(i64::MIN as f64, i64::MAX as f64) as i64
}

fn floor_to_int(x: f64) -> i64 {
    x.floor().clamp(i64::MIN as f64, i64::MAX as f64) as i64
}

/// Least upper bound of two partial-information values.
///
/// Contradictions absorb everything and carry the union of both provenance
/// sets; contradictions that arise here start with empty provenance, which the
/// network fills in from the conflicting writes.
pub fn merge(a: &PartialInfo, b: &PartialInfo) -> PartialInfo {
    match (a, b) {
        (Contradiction(p), Contradiction(q)) => Contradiction(p.union(q).copied().collect()),
        (Contradiction(p), _) | (_, Contradiction(p)) => Contradiction(p.clone()),
        (Nothing, x) | (x, Nothing) => x.clone(),
        (Exact(v), x) | (x, Exact(v)) => merge_exact(*v, x),
        (FiniteDomain(s), FiniteDomain(t)) => PartialInfo::from_set(s.intersection(t).copied().collect()),
        (FiniteDomain(s), x) | (x, FiniteDomain(s)) => {
            // Filtering the domain by the other side's bounds is exact for
            // both integer and real intervals and never allocates more than
            // the domain itself.
            PartialInfo::from_set(s.iter().copied().filter(|&v| x.admits(Number::Int(v))).collect())
        }
        (IntInterval { lo: alo, hi: ahi }, IntInterval { lo: blo, hi: bhi }) => {
            PartialInfo::int_interval(*alo.max(blo), *ahi.min(bhi))
        }
        (IntInterval { lo: ilo, hi: ihi }, RealInterval { lo: rlo, hi: rhi })
        | (RealInterval { lo: rlo, hi: rhi }, IntInterval { lo: ilo, hi: ihi }) => {
            PartialInfo::int_interval((*ilo).max(ceil_to_int(*rlo)), (*ihi).min(floor_to_int(*rhi)))
        }
        (RealInterval { lo: alo, hi: ahi }, RealInterval { lo: blo, hi: bhi }) => {
            PartialInfo::real_interval(alo.max(*blo), ahi.min(*bhi))
        }
    }
}

/// Information order test: `a ⊑ b`, i.e. `b` admits no value that `a` rejects.
pub fn refines(a: &PartialInfo, b: &PartialInfo) -> bool {
    match (a, b) {
        (Nothing, _) | (_, Contradiction(_)) => true,
        (Contradiction(_), _) | (_, Nothing) => false,
        (_, Exact(v)) => a.admits(*v),
        (_, FiniteDomain(s)) => s.iter().all(|&v| a.admits(Number::Int(v))),
        (_, IntInterval { lo, hi }) => match a {
            IntInterval { lo: alo, hi: ahi } => alo <= lo && hi <= ahi,
            RealInterval { lo: alo, hi: ahi } => *alo <= *lo as f64 && *hi as f64 <= *ahi,
            FiniteDomain(s) => {
                let count = (*hi as i128 - *lo as i128 + 1) as usize;
                count <= s.len() && (*lo..=*hi).all(|v| s.contains(&v))
            }
            _ => false,
        },
        (_, RealInterval { lo, hi }) => match a {
            RealInterval { lo: alo, hi: ahi } => alo <= lo && hi <= ahi,
            _ => false,
        },
    }
}

/// Information content relative to a reference width, in bits.
pub fn info_bits(a: &PartialInfo, reference_width: f64) -> f64 {
    debug_assert!(reference_width > 0.0);
    match a {
        Nothing => 0.0,
        Exact(_) | Contradiction(_) => MAX_INFO_BITS,
        _ => {
            let width = a.width().unwrap_or(reference_width);
            if width <= 0.0 {
                return MAX_INFO_BITS;
            }
            (reference_width / width).log2().clamp(0.0, MAX_INFO_BITS)
        }
    }
}

impl fmt::Display for PartialInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nothing => write!(f, "⊥"),
            IntInterval { lo, hi } => write!(f, "[{lo},{hi}]"),
            RealInterval { lo, hi } => write!(f, "[{lo},{hi}]"),
            FiniteDomain(s) => {
                let items: Vec<String> = s.iter().map(|v| v.to_string()).collect();
                write!(f, "{{{}}}", items.join(","))
            }
            Exact(n) => write!(f, "={n}"),
            Contradiction(p) => {
                let items: Vec<String> = p.iter().map(|v| v.to_string()).collect();
                write!(f, "⊤({})", items.join(","))
            }
        }
    }
}

/// Text that [`PartialInfo::from_str`] could not read.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot read `{0}` as partial information")]
pub struct InfoSyntaxError(pub String);

fn read_number(t: &str) -> Option<Number> {
    let t = t.trim();
    if let Ok(i) = t.parse::<i64>() {
        return Some(Number::Int(i));
    }
    t.parse::<f64>().ok().filter(|r| !r.is_nan()).map(Number::Real)
}

/// Reads the notation printed by `Display`: `⊥` (or `_`), `=7` (or `7`),
/// `[lo,hi]`, `{a,b,c}` and `⊤`.
impl std::str::FromStr for PartialInfo {
    type Err = InfoSyntaxError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = || InfoSyntaxError(text.to_string());
        let t = text.trim();
        if t == "⊥" || t == "_" {
            return Ok(Nothing);
        }
        if t.starts_with('⊤') {
            return Ok(PartialInfo::contradiction());
        }
        if let Some(body) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let (lo, hi) = body.split_once(',').ok_or_else(err)?;
            return match (read_number(lo).ok_or_else(err)?, read_number(hi).ok_or_else(err)?) {
                (Number::Int(lo), Number::Int(hi)) => Ok(PartialInfo::int_interval(lo, hi)),
                (lo, hi) => Ok(PartialInfo::real_interval(lo.as_f64(), hi.as_f64())),
            };
        }
        if let Some(body) = t.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
            if body.trim().is_empty() {
                return Ok(PartialInfo::domain(std::iter::empty()));
            }
            let values: Option<Vec<i64>> = body.split(',').map(|v| v.trim().parse().ok()).collect();
            return Ok(PartialInfo::domain(values.ok_or_else(err)?));
        }
        match read_number(t.strip_prefix('=').unwrap_or(t)).ok_or_else(err)? {
            Number::Int(i) => Ok(PartialInfo::int(i)),
            Number::Real(r) => Ok(PartialInfo::real(r)),
        }
    }
}

/// Randomized checks of the lattice laws, shared by the self-test command.
pub mod laws {
    use super::*;
    use crate::rng::SeededRng;

    /// A merge implementation under test.
    pub type MergeFn = fn(&PartialInfo, &PartialInfo) -> PartialInfo;

    /// Draws a random value from a small universe so that collisions are common.
    pub fn random_info(rng: &mut SeededRng) -> PartialInfo {
        match rng.below(7) {
            0 => Nothing,
            1 => {
                let lo = rng.range_i64(-6, 6);
                PartialInfo::int_interval(lo, lo + rng.range_i64(0, 8))
            }
            2 => {
                let lo = rng.range_i64(-24, 24) as f64 * 0.25;
                PartialInfo::real_interval(lo, lo + rng.range_i64(0, 24) as f64 * 0.25)
            }
            3 => {
                let n = 1 + rng.below(5);
                PartialInfo::domain((0..n).map(|_| rng.range_i64(-6, 8)))
            }
            4 => PartialInfo::int(rng.range_i64(-6, 8)),
            5 => PartialInfo::real(rng.range_i64(-24, 32) as f64 * 0.25),
            _ => Contradiction((0..rng.below(3)).map(|_| rng.below(10) as WriteId).collect()),
        }
    }

    /// Outcome of one law sweep; `failures` names the first violations.
    #[derive(Debug, Clone, Default)]
    pub struct LawReport {
        pub triples: usize,
        pub failures: Vec<String>,
    }

    impl LawReport {
        pub fn passed(&self) -> bool {
            self.failures.is_empty()
        }
    }

    fn equal_up_to_provenance(a: &PartialInfo, b: &PartialInfo) -> bool {
        match (a, b) {
            (Contradiction(p), Contradiction(q)) => p == q,
            _ => a == b,
        }
    }

    fn is_canonical(a: &PartialInfo) -> bool {
        match a {
            IntInterval { lo, hi } => lo < hi,
            RealInterval { lo, hi } => lo < hi,
            FiniteDomain(s) => s.len() >= 2,
            _ => true,
        }
    }

    /// Checks idempotence, commutativity, associativity, upper-bound,
    /// monotonicity and canonical-form laws on `triples` random triples.
    pub fn check(merge_fn: MergeFn, triples: usize, seed: u64) -> LawReport {
        let mut rng = SeededRng::new(seed);
        let mut report = LawReport { triples, failures: Vec::new() };
        let mut fail = |msg: String| {
            if report.failures.len() < 8 {
                report.failures.push(msg);
            }
        };
        for _ in 0..triples {
            let a = random_info(&mut rng);
            let b = random_info(&mut rng);
            let c = random_info(&mut rng);
            let ab = merge_fn(&a, &b);
            if merge_fn(&a, &a) != a {
                fail(format!("idempotence: {a}"));
            }
            if !equal_up_to_provenance(&ab, &merge_fn(&b, &a)) {
                fail(format!("commutativity: {a} {b}"));
            }
            let left = merge_fn(&ab, &c);
            let right = merge_fn(&a, &merge_fn(&b, &c));
            if !equal_up_to_provenance(&left, &right) {
                fail(format!("associativity: {a} {b} {c} -> {left} vs {right}"));
            }
            if !refines(&a, &ab) || !refines(&b, &ab) {
                fail(format!("upper bound: {a} {b} -> {ab}"));
            }
            // a ⊑ a ⊔ c, so a ⊔ b ⊑ (a ⊔ c) ⊔ b
            let ac = merge_fn(&a, &c);
            if !refines(&ab, &merge_fn(&ac, &b)) {
                fail(format!("monotonicity: {a} {b} {c}"));
            }
            if !is_canonical(&ab) {
                fail(format!("canonical form: {a} {b} -> {ab}"));
            }
        }
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(v: &[i64]) -> PartialInfo {
        PartialInfo::domain(v.iter().copied())
    }

    #[test]
    fn merge_examples() {
        assert_eq!(
            merge(&PartialInfo::int_interval(0, 10), &PartialInfo::int_interval(5, 20)),
            PartialInfo::int_interval(5, 10)
        );
        assert_eq!(merge(&Nothing, &dom(&[2, 3])), dom(&[2, 3]));
        assert!(merge(&PartialInfo::int(3), &PartialInfo::int(4)).is_contradiction());
        assert_eq!(merge(&dom(&[1, 2, 3]), &dom(&[3, 4])), PartialInfo::int(3));
    }

    #[test]
    fn refines_examples() {
        assert!(refines(&Nothing, &PartialInfo::int(7)));
        assert!(refines(&PartialInfo::int_interval(0, 5), &PartialInfo::int_interval(2, 3)));
        assert!(!refines(&PartialInfo::int(7), &Nothing));
    }

    #[test]
    fn info_bits_examples() {
        assert_eq!(info_bits(&Nothing, 1024.0), 0.0);
        assert_eq!(info_bits(&PartialInfo::domain(0..256), 1024.0), 2.0);
        assert_eq!(info_bits(&PartialInfo::int(5), 1024.0), 64.0);
        assert_eq!(info_bits(&PartialInfo::contradiction(), 1024.0), 64.0);
    }

    #[test]
    fn normalization() {
        assert_eq!(PartialInfo::int_interval(4, 4), PartialInfo::int(4));
        assert!(PartialInfo::domain(std::iter::empty()).is_contradiction());
        assert_eq!(PartialInfo::domain([9]), PartialInfo::int(9));
        assert!(PartialInfo::int_interval(5, 1).is_contradiction());
    }

    #[test]
    fn real_exact_tolerance() {
        let m = merge(&PartialInfo::real(1.0), &PartialInfo::real(1.0 + 1e-10));
        assert_eq!(m, PartialInfo::real(1.0));
        assert!(merge(&PartialInfo::real(1.0), &PartialInfo::real(1.1)).is_contradiction());
        assert_eq!(merge(&PartialInfo::real(2.0), &PartialInfo::int(2)), PartialInfo::int(2));
    }

    #[test]
    fn mixed_variants() {
        assert_eq!(merge(&dom(&[1, 5, 9]), &PartialInfo::int_interval(2, 9)), dom(&[5, 9]));
        assert_eq!(
            merge(&PartialInfo::int_interval(0, 10), &PartialInfo::real_interval(0.5, 3.5)),
            PartialInfo::int_interval(1, 3)
        );
        assert_eq!(merge(&dom(&[1, 2]), &PartialInfo::real_interval(1.5, 9.0)), PartialInfo::int(2));
    }

    #[test]
    fn contradiction_provenance_union() {
        let a = Contradiction(BTreeSet::from([1, 2]));
        let b = Contradiction(BTreeSet::from([2, 3]));
        assert_eq!(merge(&a, &b), Contradiction(BTreeSet::from([1, 2, 3])));
        assert_eq!(merge(&a, &PartialInfo::int(1)), a);
    }

    #[test]
    fn exclude_and_hull() {
        assert_eq!(dom(&[1, 2, 3]).exclude(2), Some(dom(&[1, 3])));
        assert_eq!(PartialInfo::int_interval(1, 4).exclude(1), Some(PartialInfo::int_interval(2, 4)));
        assert_eq!(PartialInfo::int_interval(1, 4).exclude(2), None);
        assert_eq!(dom(&[1, 3]).hull(&PartialInfo::int(7)), dom(&[1, 3, 7]));
        assert_eq!(PartialInfo::int_interval(0, 2).hull(&dom(&[5, 6])), PartialInfo::int_interval(0, 6));
    }

    #[test]
    fn rendering() {
        assert_eq!(Nothing.to_string(), "⊥");
        assert_eq!(PartialInfo::int_interval(1, 4).to_string(), "[1,4]");
        assert_eq!(dom(&[1, 2]).to_string(), "{1,2}");
        assert_eq!(PartialInfo::int(3).to_string(), "=3");
        assert_eq!(Contradiction(BTreeSet::from([4, 7])).to_string(), "⊤(4,7)");
    }

    #[test]
    fn law_sweep_passes() {
        let report = laws::check(merge, 2_000, 11);
        assert!(report.passed(), "{:?}", report.failures);
    }

    #[test]
    fn reading_inverts_rendering() {
        for info in [Nothing, PartialInfo::int_interval(-2, 9), dom(&[1, 5, 8]), PartialInfo::int(3), PartialInfo::real_interval(0.5, 2.25)] {
            assert_eq!(info.to_string().parse::<PartialInfo>().unwrap(), info);
        }
        assert_eq!("7".parse::<PartialInfo>().unwrap(), PartialInfo::int(7));
        assert!("⊤(1)".parse::<PartialInfo>().unwrap().is_contradiction());
        assert!("[1;2]".parse::<PartialInfo>().is_err());
        assert!("{a}".parse::<PartialInfo>().is_err());
    }
}

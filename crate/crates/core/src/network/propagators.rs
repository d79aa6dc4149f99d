//! Transfer functions of the propagator catalog.
//!
//! Every transfer function reads cell contents and returns the writes it
//! wants to make. All of them are monotone: refining an input can only
//! refine (or leave unchanged) what they write.

use std::collections::BTreeSet;

use crate::lattice::{merge, Number, PartialInfo};

use super::{CellId, SATURATION};

/// `cell = 1` (positive) or `cell = 0` (negative).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub cell: CellId,
    pub polarity: bool,
}

impl Literal {
    pub fn new(cell: CellId, polarity: bool) -> Self {
        Literal { cell, polarity }
    }

    fn wanted(&self) -> i64 {
        self.polarity as i64
    }

    pub fn holds(&self, content: &PartialInfo) -> bool {
        content.exact_int() == Some(self.wanted())
    }

    pub fn refuted(&self, content: &PartialInfo) -> bool {
        !content.admits(Number::Int(self.wanted()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PropKind {
    /// a + b = c
    Sum { a: CellId, b: CellId, c: CellId },
    /// a · b = c
    Product { a: CellId, b: CellId, c: CellId },
    Equal { a: CellId, b: CellId },
    /// a ≤ b
    LessEq { a: CellId, b: CellId },
    ElementOf { cell: CellId, domain: BTreeSet<i64> },
    /// Restricts a cell to fixed information (a guarded type declaration).
    Within { cell: CellId, info: PartialInfo },
    /// Pairwise difference; only exact values prune.
    AllDiff { cells: Vec<CellId> },
    Constant { cell: CellId, value: Number },
    /// out = cond ? then : els
    Switch { cond: CellId, then: CellId, els: CellId, out: CellId },
    /// out ⇔ (a = b)
    IsEq { out: CellId, a: CellId, b: CellId },
    /// out ⇔ (a ≤ b)
    IsLe { out: CellId, a: CellId, b: CellId },
    /// out ⇔ all literals hold
    And { out: CellId, inputs: Vec<Literal> },
}

/// One write requested by a transfer function.
#[derive(Debug, Clone, PartialEq)]
pub struct Write {
    pub cell: CellId,
    pub info: PartialInfo,
    pub saturated: bool,
}

impl Write {
    fn plain(cell: CellId, info: PartialInfo) -> Self {
        Write { cell, info, saturated: false }
    }
}

/// Numeric range used by arithmetic. Integer ranges stay exact in `i128`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Span {
    Int(i128, i128),
    Real(f64, f64),
}

impl Span {
    fn of(info: &PartialInfo) -> Option<Span> {
        if let Some((lo, hi)) = info.int_bounds() {
            return Some(Span::Int(lo as i128, hi as i128));
        }
        info.bounds().map(|(lo, hi)| Span::Real(lo, hi))
    }

    fn real(self) -> (f64, f64) {
        match self {
            Span::Int(lo, hi) => (lo as f64, hi as f64),
            Span::Real(lo, hi) => (lo, hi),
        }
    }

    fn lo_f(self) -> f64 {
        self.real().0
    }

    fn hi_f(self) -> f64 {
        self.real().1
    }

    fn add(self, o: Span) -> Span {
        match (self, o) {
            (Span::Int(a, b), Span::Int(c, d)) => Span::Int(a + c, b + d),
            _ => {
                let ((a, b), (c, d)) = (self.real(), o.real());
                Span::Real(a + c, b + d)
            }
        }
    }

    fn sub(self, o: Span) -> Span {
        match (self, o) {
            (Span::Int(a, b), Span::Int(c, d)) => Span::Int(a - d, b - c),
            _ => {
                let ((a, b), (c, d)) = (self.real(), o.real());
                Span::Real(a - d, b - c)
            }
        }
    }

    fn mul(self, o: Span) -> Span {
        match (self, o) {
            (Span::Int(a, b), Span::Int(c, d)) => {
                let p = [a * c, a * d, b * c, b * d];
                Span::Int(*p.iter().min().unwrap(), *p.iter().max().unwrap())
            }
            _ => {
                let ((a, b), (c, d)) = (self.real(), o.real());
                let p = [a * c, a * d, b * c, b * d];
                Span::Real(p.iter().copied().fold(f64::INFINITY, f64::min), p.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            }
        }
    }

    fn contains_zero(self) -> bool {
        let (lo, hi) = self.real();
        lo <= 0.0 && 0.0 <= hi
    }

    /// self / o, with `o` not containing zero.
    fn div(self, o: Span) -> Span {
        match (self, o) {
            (Span::Int(a, b), Span::Int(c, d)) => {
                let corners = [(a, c), (a, d), (b, c), (b, d)];
                let lo = corners.iter().map(|&(x, y)| ceil_div(x, y)).min().unwrap();
                let hi = corners.iter().map(|&(x, y)| floor_div(x, y)).max().unwrap();
                Span::Int(lo, hi)
            }
            _ => {
                let ((a, b), (c, d)) = (self.real(), o.real());
                let q = [a / c, a / d, b / c, b / d];
                Span::Real(q.iter().copied().fold(f64::INFINITY, f64::min), q.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            }
        }
    }

    fn to_write(self, cell: CellId) -> Write {
        match self {
            Span::Int(lo, hi) => {
                let limit = SATURATION as i128;
                let saturated = lo < -limit || hi > limit;
                let clo = lo.clamp(-limit, limit) as i64;
                let chi = hi.clamp(-limit, limit) as i64;
                Write { cell, info: PartialInfo::int_interval(clo, chi), saturated }
            }
            Span::Real(lo, hi) => Write::plain(cell, PartialInfo::real_interval(lo, hi)),
        }
    }
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) == (b < 0)) {
        q + 1
    } else {
        q
    }
}

/// Span typed like `template`: integer when `template` is integral.
fn span_like(template: &PartialInfo, lo: f64, hi: f64, int_lo: Option<i128>, int_hi: Option<i128>) -> Span {
    if template.is_integral() {
        Span::Int(int_lo.unwrap_or(lo.ceil() as i128), int_hi.unwrap_or(hi.floor() as i128))
    } else {
        Span::Real(lo, hi)
    }
}

const BOOL: [i64; 2] = [0, 1];

fn boolean_domain(cell: CellId) -> Write {
    Write::plain(cell, PartialInfo::domain(BOOL))
}

fn copy_both(a: CellId, b: CellId, ia: &PartialInfo, ib: &PartialInfo, out: &mut Vec<Write>) {
    if !ia.is_nothing() {
        out.push(Write::plain(b, ia.clone()));
    }
    if !ib.is_nothing() {
        out.push(Write::plain(a, ib.clone()));
    }
}

/// Bound tightening for a ≤ b.
fn less_eq(a: CellId, b: CellId, ia: &PartialInfo, ib: &PartialInfo, out: &mut Vec<Write>) {
    let (Some(sa), Some(sb)) = (Span::of(ia), Span::of(ib)) else {
        return;
    };
    let (a_int, b_int) = (int_pair(sa), int_pair(sb));
    let a_hi = sa.hi_f().min(sb.hi_f());
    let ahi_int = match (a_int, b_int) {
        (Some((_, x)), Some((_, y))) => Some(x.min(y)),
        _ => None,
    };
    out.push(span_like(ia, sa.lo_f(), a_hi, a_int.map(|p| p.0), ahi_int).to_write(a));
    let b_lo = sb.lo_f().max(sa.lo_f());
    let blo_int = match (a_int, b_int) {
        (Some((x, _)), Some((y, _))) => Some(x.max(y)),
        _ => None,
    };
    out.push(span_like(ib, b_lo, sb.hi_f(), blo_int, b_int.map(|p| p.1)).to_write(b));
}

/// Bound tightening for a > b (integers: a ≥ b + 1).
fn greater(a: CellId, b: CellId, ia: &PartialInfo, ib: &PartialInfo, out: &mut Vec<Write>) {
    let (Some(sa), Some(sb)) = (Span::of(ia), Span::of(ib)) else {
        return;
    };
    match (sa, sb) {
        (Span::Int(alo, ahi), Span::Int(blo, bhi)) => {
            out.push(Span::Int(alo.max(blo + 1), ahi).to_write(a));
            out.push(Span::Int(blo, bhi.min(ahi - 1)).to_write(b));
        }
        _ => {
            out.push(span_like(ia, sa.lo_f().max(sb.lo_f()), sa.hi_f(), None, None).to_write(a));
            out.push(span_like(ib, sb.lo_f(), sb.hi_f().min(sa.hi_f()), None, None).to_write(b));
        }
    }
}

fn int_pair(s: Span) -> Option<(i128, i128)> {
    match s {
        Span::Int(lo, hi) => Some((lo, hi)),
        Span::Real(..) => None,
    }
}

fn exclude_exact(target: CellId, target_info: &PartialInfo, other: &PartialInfo, out: &mut Vec<Write>) {
    if let Some(v) = other.exact_int() {
        if let Some(info) = target_info.exclude(v) {
            out.push(Write::plain(target, info));
        }
    }
}

impl PropKind {
    /// Every cell the transfer function reads or writes.
    pub fn cells(&self) -> Vec<CellId> {
        match self {
            PropKind::Sum { a, b, c } | PropKind::Product { a, b, c } => vec![*a, *b, *c],
            PropKind::Equal { a, b } | PropKind::LessEq { a, b } => vec![*a, *b],
            PropKind::ElementOf { cell, .. } | PropKind::Constant { cell, .. } | PropKind::Within { cell, .. } => {
                vec![*cell]
            }
            PropKind::AllDiff { cells } => cells.clone(),
            PropKind::Switch { cond, then, els, out } => vec![*cond, *then, *els, *out],
            PropKind::IsEq { out, a, b } | PropKind::IsLe { out, a, b } => vec![*out, *a, *b],
            PropKind::And { out, inputs } => {
                let mut v = vec![*out];
                v.extend(inputs.iter().map(|l| l.cell));
                v
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PropKind::Sum { .. } => "sum",
            PropKind::Product { .. } => "product",
            PropKind::Equal { .. } => "equal",
            PropKind::LessEq { .. } => "lesseq",
            PropKind::ElementOf { .. } => "element_of",
            PropKind::Within { .. } => "within",
            PropKind::AllDiff { .. } => "alldiff",
            PropKind::Constant { .. } => "constant",
            PropKind::Switch { .. } => "switch",
            PropKind::IsEq { .. } => "is-eq",
            PropKind::IsLe { .. } => "is-le",
            PropKind::And { .. } => "and",
        }
    }

    /// Computes the writes implied by the current contents.
    pub fn transfer<'a>(&self, get: impl Fn(CellId) -> &'a PartialInfo) -> Vec<Write> {
        let mut out = Vec::new();
        match self {
            PropKind::Sum { a, b, c } => {
                let (ia, ib, ic) = (get(*a), get(*b), get(*c));
                let (sa, sb, sc) = (Span::of(ia), Span::of(ib), Span::of(ic));
                if let (Some(x), Some(y)) = (sa, sb) {
                    out.push(x.add(y).to_write(*c));
                }
                if let (Some(z), Some(y)) = (sc, sb) {
                    out.push(z.sub(y).to_write(*a));
                }
                if let (Some(z), Some(x)) = (sc, sa) {
                    out.push(z.sub(x).to_write(*b));
                }
            }
            PropKind::Product { a, b, c } => {
                let (ia, ib, ic) = (get(*a), get(*b), get(*c));
                let (sa, sb, sc) = (Span::of(ia), Span::of(ib), Span::of(ic));
                if let (Some(x), Some(y)) = (sa, sb) {
                    out.push(x.mul(y).to_write(*c));
                } else if ia.exact_int() == Some(0) || ib.exact_int() == Some(0) {
                    out.push(Write::plain(*c, PartialInfo::int(0)));
                }
                if let (Some(z), Some(y)) = (sc, sb) {
                    if !y.contains_zero() {
                        out.push(z.div(y).to_write(*a));
                    }
                }
                if let (Some(z), Some(x)) = (sc, sa) {
                    if !x.contains_zero() {
                        out.push(z.div(x).to_write(*b));
                    }
                }
            }
            PropKind::Equal { a, b } => copy_both(*a, *b, get(*a), get(*b), &mut out),
            PropKind::LessEq { a, b } => less_eq(*a, *b, get(*a), get(*b), &mut out),
            PropKind::ElementOf { cell, domain } => {
                out.push(Write::plain(*cell, PartialInfo::domain(domain.iter().copied())));
            }
            PropKind::Within { cell, info } => out.push(Write::plain(*cell, info.clone())),
            PropKind::Constant { cell, value } => out.push(Write::plain(*cell, PartialInfo::Exact(*value))),
            PropKind::AllDiff { cells } => {
                for (i, &x) in cells.iter().enumerate() {
                    let ix = get(x);
                    if ix.exact_int().is_none() {
                        continue;
                    }
                    for (j, &y) in cells.iter().enumerate() {
                        if i != j {
                            exclude_exact(y, get(y), ix, &mut out);
                        }
                    }
                }
            }
            PropKind::Switch { cond, then, els, out: o } => {
                let ic = get(*cond);
                out.push(boolean_domain(*cond));
                match ic.exact_int() {
                    Some(1) => copy_both(*then, *o, get(*then), get(*o), &mut out),
                    Some(0) => copy_both(*els, *o, get(*els), get(*o), &mut out),
                    _ => {
                        let (it, ie) = (get(*then), get(*els));
                        if !it.is_nothing() && !ie.is_nothing() {
                            let h = it.hull(ie);
                            if !h.is_nothing() {
                                out.push(Write::plain(*o, h));
                            }
                        }
                    }
                }
            }
            PropKind::IsEq { out: o, a, b } => {
                let (io, ia, ib) = (get(*o), get(*a), get(*b));
                out.push(boolean_domain(*o));
                match io.exact_int() {
                    Some(1) => copy_both(*a, *b, ia, ib, &mut out),
                    Some(0) => {
                        exclude_exact(*a, ia, ib, &mut out);
                        exclude_exact(*b, ib, ia, &mut out);
                    }
                    _ => {}
                }
                if let (Some(x), Some(y)) = (ia.exact(), ib.exact()) {
                    let m = merge(&PartialInfo::Exact(x), &PartialInfo::Exact(y));
                    out.push(Write::plain(*o, PartialInfo::boolean(!m.is_contradiction())));
                } else if !ia.is_nothing() && !ib.is_nothing() && merge(ia, ib).is_contradiction() {
                    out.push(Write::plain(*o, PartialInfo::boolean(false)));
                }
            }
            PropKind::IsLe { out: o, a, b } => {
                let (io, ia, ib) = (get(*o), get(*a), get(*b));
                out.push(boolean_domain(*o));
                match io.exact_int() {
                    Some(1) => less_eq(*a, *b, ia, ib, &mut out),
                    Some(0) => greater(*a, *b, ia, ib, &mut out),
                    _ => {}
                }
                if let (Some(sa), Some(sb)) = (Span::of(ia), Span::of(ib)) {
                    if sa.hi_f() <= sb.lo_f() {
                        out.push(Write::plain(*o, PartialInfo::boolean(true)));
                    } else if sa.lo_f() > sb.hi_f() {
                        out.push(Write::plain(*o, PartialInfo::boolean(false)));
                    }
                }
            }
            PropKind::And { out: o, inputs } => {
                out.push(boolean_domain(*o));
                if inputs.iter().any(|l| l.refuted(get(l.cell))) {
                    out.push(Write::plain(*o, PartialInfo::boolean(false)));
                } else if inputs.iter().all(|l| l.holds(get(l.cell))) {
                    out.push(Write::plain(*o, PartialInfo::boolean(true)));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(kind: &PropKind, contents: &[PartialInfo]) -> Vec<PartialInfo> {
        let writes = kind.transfer(|c| &contents[c]);
        let mut result = contents.to_vec();
        for w in writes {
            result[w.cell] = merge(&result[w.cell], &w.info);
        }
        result
    }

    #[test]
    fn division_rounding() {
        assert_eq!(floor_div(7, 2), 3);
        assert_eq!(floor_div(-7, 2), -4);
        assert_eq!(ceil_div(7, 2), 4);
        assert_eq!(ceil_div(-7, 2), -3);
        assert_eq!(ceil_div(-7, -2), 4);
    }

    #[test]
    fn product_bidirectional() {
        let k = PropKind::Product { a: 0, b: 1, c: 2 };
        let r = run(&k, &[PartialInfo::Nothing, PartialInfo::int(4), PartialInfo::int(20)]);
        assert_eq!(r[0], PartialInfo::int(5));
        let r = run(&k, &[PartialInfo::Nothing, PartialInfo::int(2), PartialInfo::int(7)]);
        assert!(r[0].is_contradiction());
        let r = run(&k, &[PartialInfo::int_interval(-2, 3), PartialInfo::int_interval(-1, 4), PartialInfo::Nothing]);
        assert_eq!(r[2], PartialInfo::int_interval(-8, 12));
        // divisor spans zero: no inference on a
        let r = run(&k, &[PartialInfo::Nothing, PartialInfo::int_interval(-1, 1), PartialInfo::int(3)]);
        assert!(r[0].is_nothing());
    }

    #[test]
    fn sum_saturates() {
        let k = PropKind::Sum { a: 0, b: 1, c: 2 };
        let contents = [PartialInfo::int(SATURATION), PartialInfo::int(SATURATION), PartialInfo::Nothing];
        let writes = k.transfer(|c| &contents[c]);
        let w = writes.iter().find(|w| w.cell == 2).unwrap();
        assert!(w.saturated);
        assert_eq!(w.info, PartialInfo::int(SATURATION));
    }

    #[test]
    fn lesseq_tightens() {
        let k = PropKind::LessEq { a: 0, b: 1 };
        let r = run(&k, &[PartialInfo::int_interval(0, 10), PartialInfo::int_interval(-5, 4)]);
        assert_eq!(r[0], PartialInfo::int_interval(0, 4));
        assert_eq!(r[1], PartialInfo::int_interval(0, 4));
    }

    #[test]
    fn alldiff_prunes_exact_only() {
        let k = PropKind::AllDiff { cells: vec![0, 1, 2] };
        let r = run(&k, &[PartialInfo::int(2), PartialInfo::domain([1, 2, 3]), PartialInfo::int_interval(2, 5)]);
        assert_eq!(r[1], PartialInfo::domain([1, 3]));
        assert_eq!(r[2], PartialInfo::int_interval(3, 5));
        let r = run(&k, &[PartialInfo::int(2), PartialInfo::int(2), PartialInfo::Nothing]);
        assert!(r[1].is_contradiction());
    }

    #[test]
    fn reified_tests() {
        let k = PropKind::IsEq { out: 0, a: 1, b: 2 };
        let r = run(&k, &[PartialInfo::Nothing, PartialInfo::int(0), PartialInfo::int(0)]);
        assert_eq!(r[0], PartialInfo::int(1));
        let r = run(&k, &[PartialInfo::Nothing, PartialInfo::domain([1, 2]), PartialInfo::int(0)]);
        assert_eq!(r[0], PartialInfo::int(0));
        let r = run(&k, &[PartialInfo::int(0), PartialInfo::domain([0, 1, 2]), PartialInfo::int(0)]);
        assert_eq!(r[1], PartialInfo::domain([1, 2]));

        let k = PropKind::IsLe { out: 0, a: 1, b: 2 };
        let r = run(&k, &[PartialInfo::Nothing, PartialInfo::int(3), PartialInfo::int_interval(3, 9)]);
        assert_eq!(r[0], PartialInfo::int(1));
        let r = run(&k, &[PartialInfo::int(0), PartialInfo::int_interval(0, 9), PartialInfo::int(4)]);
        assert_eq!(r[1], PartialInfo::int_interval(5, 9));
    }

    #[test]
    fn switch_and_conjunction() {
        let k = PropKind::Switch { cond: 0, then: 1, els: 2, out: 3 };
        let r = run(&k, &[PartialInfo::Nothing, PartialInfo::int(1), PartialInfo::int(5), PartialInfo::Nothing]);
        assert_eq!(r[3], PartialInfo::domain([1, 5]));
        let r = run(&k, &[PartialInfo::int(0), PartialInfo::int(1), PartialInfo::int(5), PartialInfo::Nothing]);
        assert_eq!(r[3], PartialInfo::int(5));

        let k = PropKind::And { out: 0, inputs: vec![Literal::new(1, true), Literal::new(2, false)] };
        let r = run(&k, &[PartialInfo::Nothing, PartialInfo::int(1), PartialInfo::int(0)]);
        assert_eq!(r[0], PartialInfo::int(1));
        let r = run(&k, &[PartialInfo::Nothing, PartialInfo::Nothing, PartialInfo::int(1)]);
        assert_eq!(r[0], PartialInfo::int(0));
    }
}

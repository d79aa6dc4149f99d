//! The surface language: parsing, elaboration into networks, and lazy
//! expansion of recursive calls.
//!
//! Grammar (s-expressions, `;` line comments):
//!
//! ```text
//! program := { defform } [ queryform ]
//! defform := "(" "def" "(" name { name } ")" { stmt } ")"
//! stmt    := (cell x) | (int x lo hi) | (const x n)
//!          | (sum a b c) | (product a b c) | (equal a b) | (lesseq a b)
//!          | (alldiff x...) | (choose x v...) | (is-eq c a b) | (is-le c a b)
//!          | (switch c t e out) | (if c (stmt...) (stmt...)) | (call f x...)
//! query   := (query (entry (name n)...) (show name...) [(depth N)] [(steps N)]
//!            [(nodes N)] [(precision R)] [(minimize name)])
//! ```
//!
//! A declaration such as `(int x 0 9)` is simply a write of `[0,9]` into `x`;
//! there is no separate type checker.

mod elaborate;
mod parse;

pub use elaborate::{
    demand_loop, expand, exact_int, instantiate, instantiate_positional, instantiate_traced, select_frontier, within_precision,
    ChoiceCell, DemandReport, ElabError, ExpansionState, Frame, FrameId, GateStatus, Instance,
    FRONTIER_REFERENCE_WIDTH,
};
pub use parse::{parse, Definition, ParseError, Pos, Program, QuerySpec, Stmt, StmtKind};

/// Factorial with the recursive call gated on `n ≠ 0`.
pub const FACTORIAL: &str = "\
; r = n!
(def (fact n r)
  (const zero 0)
  (const one 1)
  (cell base)
  (is-eq base n zero)
  (if base
    ((equal r one))
    ((cell m) (cell sub)
     (sum m one n)
     (call fact m sub)
     (product n sub r))))
";

/// Counts down from `k`, accumulating the number of steps into `r`.
pub const COUNTDOWN: &str = "\
(def (count k r)
  (const zero 0)
  (const one 1)
  (cell done)
  (is-eq done k zero)
  (if done
    ((equal r zero))
    ((cell j) (cell rest)
     (sum j one k)
     (call count j rest)
     (sum rest one r))))
";

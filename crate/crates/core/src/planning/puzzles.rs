//! N-queens and SEND + MORE = MONEY.

use std::fmt::Write;

/// One column cell `q1..qn` per row, with all-different rows and diagonals.
pub fn queens_program(n: usize) -> String {
    let qs: Vec<String> = (1..=n).map(|i| format!("q{i}")).collect();
    let values: Vec<String> = (1..=n).map(|v| v.to_string()).collect();
    let mut out = String::new();
    let _ = writeln!(out, "; {n} queens, one per row; q<i> is the column of row i");
    let _ = writeln!(out, "(def (queens {})", qs.join(" "));
    for (i, q) in qs.iter().enumerate() {
        let r = i + 1;
        let _ = writeln!(out, "  (choose {q} {})", values.join(" "));
        let _ = writeln!(out, "  (const r{r} {r}) (cell u{r}) (sum {q} r{r} u{r}) (cell v{r}) (sum v{r} r{r} {q})");
    }
    let ups: Vec<String> = (1..=n).map(|i| format!("u{i}")).collect();
    let downs: Vec<String> = (1..=n).map(|i| format!("v{i}")).collect();
    let _ = writeln!(out, "  (alldiff {})", qs.join(" "));
    let _ = writeln!(out, "  (alldiff {})", ups.join(" "));
    let _ = writeln!(out, "  (alldiff {}))", downs.join(" "));
    let _ = writeln!(out, "(query (queens) (show {}))", qs.join(" "));
    out
}

/// Column-wise addition with carries.
pub fn send_more_money_program() -> String {
    "\
; SEND + MORE = MONEY, one distinct digit per letter
(def (puzzle send more money)
  (choose s 1 2 3 4 5 6 7 8 9)
  (choose m 1 2 3 4 5 6 7 8 9)
  (choose e 0 1 2 3 4 5 6 7 8 9)
  (choose n 0 1 2 3 4 5 6 7 8 9)
  (choose d 0 1 2 3 4 5 6 7 8 9)
  (choose o 0 1 2 3 4 5 6 7 8 9)
  (choose r 0 1 2 3 4 5 6 7 8 9)
  (choose y 0 1 2 3 4 5 6 7 8 9)
  (alldiff s e n d m o r y)
  (const ten 10)
  (int c1 0 1) (int c2 0 1) (int c3 0 1) (int c4 0 1)
  ; d + e = y + 10 c1
  (cell l1) (sum d e l1) (cell t1) (product c1 ten t1) (sum y t1 l1)
  ; n + r + c1 = e + 10 c2
  (cell a2) (sum n r a2) (cell l2) (sum a2 c1 l2) (cell t2) (product c2 ten t2) (sum e t2 l2)
  ; e + o + c2 = n + 10 c3
  (cell a3) (sum e o a3) (cell l3) (sum a3 c2 l3) (cell t3) (product c3 ten t3) (sum n t3 l3)
  ; s + m + c3 = o + 10 c4
  (cell a4) (sum s m a4) (cell l4) (sum a4 c3 l4) (cell t4) (product c4 ten t4) (sum o t4 l4)
  (equal c4 m)
  ; word values
  (const k1000 1000) (const k100 100) (const k10000 10000)
  (cell w1) (product s k1000 w1) (cell w2) (product e k100 w2) (cell w3) (product n ten w3)
  (cell w12) (sum w1 w2 w12) (cell w123) (sum w12 w3 w123) (sum w123 d send)
  (cell m1) (product m k1000 m1) (cell m2) (product o k100 m2) (cell m3) (product r ten m3)
  (cell m12) (sum m1 m2 m12) (cell m123) (sum m12 m3 m123) (sum m123 e more)
  (cell y0) (product m k10000 y0) (cell y1) (product o k1000 y1) (cell y2) (product n k100 y2)
  (cell y3) (product e ten y3) (cell y01) (sum y0 y1 y01) (cell y012) (sum y01 y2 y012)
  (cell y0123) (sum y012 y3 y0123) (sum y0123 y money))
(query (puzzle) (show s e n d m o r y send more money))
"
    .to_string()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::language::parse;
    use crate::search::{solve, Query, UniformOracle};

    #[test]
    fn four_queens_has_two_solutions() {
        let p = Arc::new(parse(&queens_program(4)).unwrap());
        let q = Query::from_program(&p).unwrap();
        let s = solve(p, &q, &UniformOracle).unwrap();
        let rows: Vec<Vec<i64>> =
            s.solutions.iter().map(|s| (1..=4).map(|i| s.int(&format!("q{i}")).unwrap()).collect()).collect();
        assert_eq!(rows, vec![vec![2, 4, 1, 3], vec![3, 1, 4, 2]]);
    }

    #[test]
    fn send_more_money_parses() {
        let p = parse(&send_more_money_program()).unwrap();
        assert_eq!(p.query.unwrap().show.len(), 11);
    }
}

//! SMT-LIB2 (QF_LRA) rendering of a FindSat query.

use std::fmt::Write;

use super::{Query, SearchDomain};
use crate::dynamics::{check_formula, Plant, Player};
use crate::error::{Error, Result};
use crate::stl::Formula;

fn num(v: f64) -> String {
    let mag = format!("{}", v.abs());
    let mag = if mag.contains('.') { mag } else { format!("{mag}.0") };
    if v < 0.0 {
        format!("(- {mag})")
    } else {
        mag
    }
}

fn var(prefix: char, t: usize, i: usize) -> String {
    format!("{prefix}_{t}_{i}")
}

/// Linear combination `sum coeff * name`, skipping zero coefficients.
fn linear(terms: &[(f64, String)], constant: f64) -> String {
    let mut parts: Vec<String> = terms
        .iter()
        .filter(|(c, _)| *c != 0.0)
        .map(|(c, n)| if *c == 1.0 { n.clone() } else { format!("(* {} {n})", num(*c)) })
        .collect();
    if constant != 0.0 || parts.is_empty() {
        parts.push(num(constant));
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        format!("(+ {})", parts.join(" "))
    }
}

fn encode(f: &Formula, t: usize) -> String {
    match f {
        Formula::Predicate(p) => {
            let terms: Vec<(f64, String)> =
                p.coeffs.iter().enumerate().map(|(i, c)| (*c, var('x', t, i))).collect();
            format!("(> {} {})", linear(&terms, 0.0), num(p.offset))
        }
        Formula::Not(g) => format!("(not {})", encode(g, t)),
        Formula::And(a, b) => format!("(and {} {})", encode(a, t), encode(b, t)),
        Formula::Or(a, b) => format!("(or {} {})", encode(a, t), encode(b, t)),
        Formula::Next(i, g) => encode(g, t + i),
        Formula::Finally(a, b, g) | Formula::Globally(a, b, g) => {
            let op = if matches!(f, Formula::Finally(..)) { "or" } else { "and" };
            let parts: Vec<String> = (t + a..=t + b).map(|s| encode(g, s)).collect();
            if parts.len() == 1 {
                parts.into_iter().next().unwrap()
            } else {
                format!("({op} {})", parts.join(" "))
            }
        }
    }
}

/// Script whose models are the free player's sequences satisfying the query
/// formula (or its negation) against the fixed opponent, inside the search
/// domain. The robustness threshold is not encoded.
pub fn export_smtlib(q: &Query) -> Result<String> {
    let Plant::Linear(sys) = q.plant else {
        return Err(Error::Invalid("only linear systems can be exported".into()));
    };
    check_formula(q.plant, q.formula)?;
    let h = sys.horizon;
    let (n, nu, nw) = (sys.n_x(), sys.n_u(), sys.n_w());
    let other = q.free.other();
    if q.fixed.len() != q.plant.dim(other) {
        return Err(Error::Dimension(format!(
            "fixed {} sequence has {} values, expected {}",
            other.name(),
            q.fixed.len(),
            q.plant.dim(other)
        )));
    }
    let mut s = String::new();
    let w = &mut s;
    writeln!(w, "(set-logic QF_LRA)").unwrap();
    for t in 0..=h {
        for i in 0..n {
            writeln!(w, "(declare-const {} Real)", var('x', t, i)).unwrap();
        }
    }
    for k in 0..h {
        for i in 0..nu {
            writeln!(w, "(declare-const {} Real)", var('u', k, i)).unwrap();
        }
        for i in 0..nw {
            writeln!(w, "(declare-const {} Real)", var('w', k, i)).unwrap();
        }
    }
    writeln!(w, "; dynamics").unwrap();
    for i in 0..n {
        writeln!(w, "(assert (= {} {}))", var('x', 0, i), num(sys.x0[i])).unwrap();
    }
    for k in 0..h {
        for i in 0..n {
            let mut terms = Vec::new();
            terms.extend((0..n).map(|j| (sys.a[(i, j)], var('x', k, j))));
            terms.extend((0..nu).map(|j| (sys.b[(i, j)], var('u', k, j))));
            terms.extend((0..nw).map(|j| (sys.c[(i, j)], var('w', k, j))));
            writeln!(w, "(assert (= {} {}))", var('x', k + 1, i), linear(&terms, 0.0)).unwrap();
        }
    }
    let (free_prefix, free_width, fixed_prefix, fixed_width) = match q.free {
        Player::System => ('u', nu, 'w', nw),
        Player::Environment => ('w', nw, 'u', nu),
    };
    let name = |prefix: char, width: usize, flat: usize| var(prefix, flat / width, flat % width);
    writeln!(w, "; fixed {}", other.name()).unwrap();
    for (j, v) in q.fixed.iter().enumerate() {
        writeln!(w, "(assert (= {} {}))", name(fixed_prefix, fixed_width, j), num(*v)).unwrap();
    }
    writeln!(w, "; domain").unwrap();
    let SearchDomain::Region(region) = &q.domain else {
        return Err(Error::Invalid("continuous plant with a move-set domain".into()));
    };
    for j in 0..region.dim() {
        let v = name(free_prefix, free_width, j);
        writeln!(w, "(assert (<= {} {v}))", num(region.base.lo[j])).unwrap();
        writeln!(w, "(assert (<= {v} {}))", num(region.base.hi[j])).unwrap();
    }
    for sq in region.removed() {
        let mut lits = Vec::new();
        for (j, c) in sq.center.iter().enumerate() {
            let v = name(free_prefix, free_width, j);
            lits.push(format!("(<= (- {v} {}) {})", num(*c), num(sq.radius)));
            lits.push(format!("(<= (- {} {v}) {})", num(*c), num(sq.radius)));
        }
        writeln!(w, "(assert (not (and {})))", lits.join(" ")).unwrap();
    }
    writeln!(w, "; specification").unwrap();
    let spec = encode(q.formula, 0);
    if q.negate {
        writeln!(w, "(assert (not {spec}))").unwrap();
    } else {
        writeln!(w, "(assert {spec})").unwrap();
    }
    writeln!(w, "(check-sat)").unwrap();
    writeln!(w, "(get-model)").unwrap();
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::parse;
    use nalgebra::{dmatrix, dvector};

    fn plant() -> Plant {
        Plant::Linear(
            crate::dynamics::LinearSystem::new(
                dmatrix![0.5],
                dmatrix![1.0],
                dmatrix![-1.0],
                dvector![0.0],
                1,
                vec![(0.0, 1.0)],
                vec![(-0.25, 0.25)],
            )
            .unwrap(),
        )
    }

    #[test]
    fn structure() {
        let p = plant();
        let phi = parse("X x0 > 0.5").unwrap();
        let q = Query::new(&p, &phi, Player::System, vec![-0.125]).unwrap();
        let s = export_smtlib(&q).unwrap();
        assert!(s.starts_with("(set-logic QF_LRA)"));
        assert!(s.contains("(assert (<= 0.0 u_0_0))"));
        assert!(s.contains("(assert (<= u_0_0 1.0))"));
        assert!(s.contains("(assert (= w_0_0 (- 0.125)))"));
        assert!(s.contains("(assert (= x_1_0 (+ (* 0.5 x_0_0) u_0_0 (* (- 1.0) w_0_0))))"));
        assert!(s.contains("(assert (> x_1_0 0.5))"));
        assert!(s.trim_end().ends_with("(check-sat)\n(get-model)"));
        assert_eq!(s.matches("(assert (<=").count(), 2);
    }

    #[test]
    fn square_clause() {
        let p = plant();
        let phi = parse("X x0 > 0.5").unwrap();
        let mut q = Query::new(&p, &phi, Player::System, vec![0.0]).unwrap();
        if let SearchDomain::Region(r) = &mut q.domain {
            r.remove(vec![0.75], 0.125).unwrap();
        }
        let s = export_smtlib(&q).unwrap();
        assert!(s.contains(
            "(assert (not (and (<= (- u_0_0 0.75) 0.125) (<= (- 0.75 u_0_0) 0.125))))"
        ));
    }

    #[test]
    fn numbers() {
        assert_eq!(num(1.0), "1.0");
        assert_eq!(num(-2.5), "(- 2.5)");
        assert_eq!(num(1e-7), "0.0000001");
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};

use super::Trace;
use crate::error::{Error, Result};

/// Linear atom `coeffs · x - offset > 0`.
///
/// Coefficients past the end of `coeffs` are zero, so a predicate with an
/// empty coefficient vector is a constant (`true` is `0 - (-1) > 0`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl Predicate {
    pub fn new(coeffs: Vec<f64>, offset: f64) -> Self {
        Self { coeffs, offset }
    }

    /// Value of `coeffs · x - offset`; this is the predicate's robustness.
    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut acc = -self.offset;
        for (c, v) in self.coeffs.iter().zip(x) {
            acc += c * v;
        }
        acc
    }

    /// Index of the last state component with a non-zero coefficient.
    pub fn support(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| *c != 0.0)
    }

    /// Induced norm of the functional under the infinity norm on states (the l1 norm).
    pub fn gain(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, c| acc + c.abs())
    }

    pub fn gain_l2(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, c| acc + c * c).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    Predicate(Predicate),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(usize, Box<Formula>),
    Finally(usize, usize, Box<Formula>),
    Globally(usize, usize, Box<Formula>),
}

impl Formula {
    pub fn predicate(coeffs: Vec<f64>, offset: f64) -> Self {
        Formula::Predicate(Predicate::new(coeffs, offset))
    }

    pub fn always_true() -> Self {
        Formula::predicate(Vec::new(), -1.0)
    }

    pub fn always_false() -> Self {
        Formula::predicate(Vec::new(), 1.0)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, other: Formula) -> Self {
        Formula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Formula) -> Self {
        Formula::Or(Box::new(self), Box::new(other))
    }

    pub fn implies(self, other: Formula) -> Self {
        self.not().or(other)
    }

    pub fn next(steps: usize, inner: Formula) -> Self {
        Formula::Next(steps, Box::new(inner))
    }

    pub fn finally(lo: usize, hi: usize, inner: Formula) -> Result<Self> {
        check_interval(lo, hi)?;
        Ok(Formula::Finally(lo, hi, Box::new(inner)))
    }

    pub fn globally(lo: usize, hi: usize, inner: Formula) -> Result<Self> {
        check_interval(lo, hi)?;
        Ok(Formula::Globally(lo, hi, Box::new(inner)))
    }

    /// Conjunction of a non-empty list.
    pub fn all(parts: impl IntoIterator<Item = Formula>) -> Option<Self> {
        parts.into_iter().reduce(Formula::and)
    }

    pub fn any(parts: impl IntoIterator<Item = Formula>) -> Option<Self> {
        parts.into_iter().reduce(Formula::or)
    }

    /// Largest time offset any sub-formula can reference.
    pub fn horizon(&self) -> usize {
        match self {
            Formula::Predicate(_) => 0,
            Formula::Not(f) => f.horizon(),
            Formula::And(a, b) | Formula::Or(a, b) => a.horizon().max(b.horizon()),
            Formula::Next(i, f) => i + f.horizon(),
            Formula::Finally(_, b, f) | Formula::Globally(_, b, f) => b + f.horizon(),
        }
    }

    /// Checks the interval invariant on every temporal node.
    pub fn validate(&self) -> Result<()> {
        match self {
            Formula::Predicate(_) => Ok(()),
            Formula::Not(f) | Formula::Next(_, f) => f.validate(),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.validate()?;
                b.validate()
            }
            Formula::Finally(lo, hi, f) | Formula::Globally(lo, hi, f) => {
                check_interval(*lo, *hi)?;
                f.validate()
            }
        }
    }

    pub fn predicates(&self) -> Vec<&Predicate> {
        let mut out = Vec::new();
        self.collect_predicates(&mut out);
        out
    }

    fn collect_predicates<'a>(&'a self, out: &mut Vec<&'a Predicate>) {
        match self {
            Formula::Predicate(p) => out.push(p),
            Formula::Not(f)
            | Formula::Next(_, f)
            | Formula::Finally(_, _, f)
            | Formula::Globally(_, _, f) => f.collect_predicates(out),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_predicates(out);
                b.collect_predicates(out);
            }
        }
    }

    /// Number of state components the formula reads.
    pub fn state_dim(&self) -> usize {
        self.predicates()
            .iter()
            .filter_map(|p| p.support())
            .map(|i| i + 1)
            .max()
            .unwrap_or(0)
    }

    /// Largest predicate gain `||d||_1`, the Lipschitz constant of robustness
    /// with respect to the trace under the sup-of-infinity-norms metric.
    pub fn max_predicate_gain(&self) -> f64 {
        self.predicates()
            .iter()
            .map(|p| p.gain())
            .fold(0.0, f64::max)
    }

    pub fn max_predicate_gain_l2(&self) -> f64 {
        self.predicates()
            .iter()
            .map(|p| p.gain_l2())
            .fold(0.0, f64::max)
    }

    fn check_trace(&self, trace: &Trace, t: usize) -> Result<()> {
        let needed = t + self.horizon() + 1;
        if needed > trace.len() {
            return Err(Error::TraceTooShort {
                t,
                needed,
                len: trace.len(),
            });
        }
        let dim = self.state_dim();
        if dim > trace.dim() {
            return Err(Error::Dimension(format!(
                "formula reads {dim} state components, trace has {}",
                trace.dim()
            )));
        }
        Ok(())
    }

    /// Robustness `rho(trace, t)`.
    pub fn robustness(&self, trace: &Trace, t: usize) -> Result<f64> {
        self.check_trace(trace, t)?;
        Ok(self.rho(trace.samples(), t))
    }

    /// `(trace, t) |= self`, i.e. robustness strictly positive.
    pub fn satisfies(&self, trace: &Trace, t: usize) -> Result<bool> {
        Ok(self.robustness(trace, t)? > 0.0)
    }

    /// Unchecked robustness over raw samples. Callers guarantee the length
    /// and dimension preconditions (see [`Formula::robustness`]).
    pub(crate) fn rho(&self, xs: &[Vec<f64>], t: usize) -> f64 {
        match self {
            Formula::Predicate(p) => p.value(&xs[t]),
            Formula::Not(f) => -f.rho(xs, t),
            Formula::And(a, b) => a.rho(xs, t).min(b.rho(xs, t)),
            Formula::Or(a, b) => a.rho(xs, t).max(b.rho(xs, t)),
            Formula::Next(i, f) => f.rho(xs, t + i),
            Formula::Finally(lo, hi, f) => (t + lo..=t + hi)
                .map(|s| f.rho(xs, s))
                .fold(f64::NEG_INFINITY, f64::max),
            Formula::Globally(lo, hi, f) => (t + lo..=t + hi)
                .map(|s| f.rho(xs, s))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Boolean semantics computed without robustness.
    pub(crate) fn holds(&self, xs: &[Vec<f64>], t: usize) -> bool {
        match self {
            Formula::Predicate(p) => p.value(&xs[t]) > 0.0,
            Formula::Not(f) => !f.holds(xs, t),
            Formula::And(a, b) => a.holds(xs, t) && b.holds(xs, t),
            Formula::Or(a, b) => a.holds(xs, t) || b.holds(xs, t),
            Formula::Next(i, f) => f.holds(xs, t + i),
            Formula::Finally(lo, hi, f) => (t + lo..=t + hi).any(|s| f.holds(xs, s)),
            Formula::Globally(lo, hi, f) => (t + lo..=t + hi).all(|s| f.holds(xs, s)),
        }
    }

    pub(crate) fn check_boolean(&self, trace: &Trace, t: usize) -> Result<bool> {
        self.check_trace(trace, t)?;
        Ok(self.holds(trace.samples(), t))
    }
}

fn check_interval(lo: usize, hi: usize) -> Result<()> {
    if lo > hi {
        Err(Error::Interval { lo, hi })
    } else {
        Ok(())
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            if wrote {
                if *c < 0.0 {
                    write!(f, " - {}*x{i}", -c)?;
                } else {
                    write!(f, " + {c}*x{i}")?;
                }
            } else {
                write!(f, "{c}*x{i}")?;
            }
            wrote = true;
        }
        if !wrote {
            write!(f, "0")?;
        }
        write!(f, " > {}", self.offset)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Predicate(p) => write!(f, "({p})"),
            Formula::Not(g) => write!(f, "!{g}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Next(i, g) => {
                for _ in 0..*i {
                    write!(f, "X ")?;
                }
                write!(f, "{g}")
            }
            Formula::Finally(a, b, g) => write!(f, "F[{a},{b}] {g}"),
            Formula::Globally(a, b, g) => write!(f, "G[{a},{b}] {g}"),
        }
    }
}

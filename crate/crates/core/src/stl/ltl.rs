use std::collections::{BTreeMap, BTreeSet};

use super::{Formula, Trace};
use crate::error::{Error, Result};

/// Value written into a component when none of its propositions hold.
const ABSENT: f64 = -1.0;

/// Real embedding of atomic propositions.
///
/// Each proposition owns a state component and a code `c`; it holds when that
/// component lies in `(c - 1/2, c + 1/2)`. Propositions sharing a component are
/// mutually exclusive. Codes must be at least `1/2` so the absent value lies
/// outside every band.
#[derive(Clone, Debug, Default)]
pub struct PropositionEncoding {
    props: BTreeMap<String, (usize, f64)>,
}

impl PropositionEncoding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, dim: usize, code: f64) -> Self {
        self.insert(name, dim, code);
        self
    }

    pub fn insert(&mut self, name: &str, dim: usize, code: f64) {
        self.props.insert(name.to_owned(), (dim, code));
    }

    /// Rock/paper/scissors on component `dim` with codes 0.5, 1.5, 2.5.
    pub fn rps(dim: usize) -> Self {
        Self::new()
            .with("R", dim, 0.5)
            .with("P", dim, 1.5)
            .with("S", dim, 2.5)
    }

    pub fn dim(&self) -> usize {
        self.props.values().map(|(d, _)| d + 1).max().unwrap_or(0)
    }

    pub fn code(&self, name: &str) -> Option<(usize, f64)> {
        self.props.get(name).copied()
    }

    /// Formula true exactly when `name` holds.
    pub fn prop(&self, name: &str) -> Result<Formula> {
        let (dim, code) = self
            .code(name)
            .ok_or_else(|| Error::Invalid(format!("unknown proposition `{name}`")))?;
        let mut up = vec![0.0; dim + 1];
        up[dim] = 1.0;
        let down: Vec<f64> = up.iter().map(|c| -c).collect();
        Ok(Formula::predicate(up, code - 0.5).and(Formula::predicate(down, -(code + 0.5))))
    }

    /// Trace whose samples realise the given proposition sets.
    pub fn encode(&self, word: &[BTreeSet<String>]) -> Result<Trace> {
        let n = self.dim();
        let mut samples = Vec::with_capacity(word.len());
        for (t, letter) in word.iter().enumerate() {
            let mut x = vec![ABSENT; n];
            let mut used = vec![false; n];
            for name in letter {
                let (d, c) = self
                    .code(name)
                    .ok_or_else(|| Error::Invalid(format!("unknown proposition `{name}`")))?;
                if used[d] {
                    return Err(Error::Invalid(format!(
                        "propositions sharing component {d} both hold at step {t}"
                    )));
                }
                used[d] = true;
                x[d] = c;
            }
            samples.push(x);
        }
        Trace::new(samples)
    }
}

/// Boolean semantics of `formula` on a word of proposition sets.
pub fn eval_ltl(
    formula: &Formula,
    encoding: &PropositionEncoding,
    word: &[BTreeSet<String>],
    t: usize,
) -> Result<bool> {
    formula.check_boolean(&encoding.encode(word)?, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word(sets: &[&[&str]]) -> Vec<BTreeSet<String>> {
        sets.iter()
            .map(|s| s.iter().map(|p| p.to_string()).collect())
            .collect()
    }

    #[test]
    fn examples() {
        let enc = PropositionEncoding::new().with("p", 0, 0.5);
        let p = enc.prop("p").unwrap();
        assert!(eval_ltl(&p, &enc, &word(&[&["p"]]), 0).unwrap());
        let xp = Formula::next(1, p.clone());
        assert!(eval_ltl(&xp, &enc, &word(&[&[], &["p"]]), 0).unwrap());
        let gp = Formula::globally(0, 1, p).unwrap();
        assert!(!eval_ltl(&gp, &enc, &word(&[&["p"], &[]]), 0).unwrap());
        assert!(matches!(
            eval_ltl(&gp, &enc, &word(&[&["p"]]), 0),
            Err(Error::TraceTooShort { .. })
        ));
    }

    #[test]
    fn rps_bands() {
        let enc = PropositionEncoding::rps(0);
        let r = enc.prop("R").unwrap();
        let s = enc.prop("S").unwrap();
        assert!(r.satisfies(&Trace::scalar(&[0.2]), 0).unwrap());
        assert!(!r.satisfies(&Trace::scalar(&[1.2]), 0).unwrap());
        assert!(s.satisfies(&Trace::scalar(&[2.9]), 0).unwrap());
        assert!(!s.satisfies(&Trace::scalar(&[ABSENT]), 0).unwrap());
    }
}

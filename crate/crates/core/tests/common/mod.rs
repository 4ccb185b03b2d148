#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reactive_synth::dynamics::{LinearSystem, Plant};
use reactive_synth::problem::{Problem, ProblemSpec};
use reactive_synth::stl::Formula;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn spec_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("specs").join(name)
}

pub fn bundled(name: &str) -> Problem {
    ProblemSpec::load(spec_path(name)).unwrap().build().unwrap()
}

/// Random formula over `dim` state components whose horizon is at most
/// `max_h`.
pub fn random_formula(r: &mut ChaCha8Rng, depth: usize, dim: usize, max_h: usize) -> Formula {
    let leaf = depth == 0 || r.random_range(0..4) == 0;
    if leaf {
        let coeffs: Vec<f64> = (0..dim)
            .map(|_| if r.random_range(0..3) == 0 { 0.0 } else { r.random_range(-2.0..2.0) })
            .collect();
        return Formula::predicate(coeffs, r.random_range(-1.0..1.0));
    }
    let sub = |r: &mut ChaCha8Rng, h: usize| random_formula(r, depth - 1, dim, h);
    match r.random_range(0..7) {
        0 => sub(r, max_h).not(),
        1 => sub(r, max_h).and(sub(r, max_h)),
        2 => sub(r, max_h).or(sub(r, max_h)),
        3 if max_h >= 1 => {
            let i = r.random_range(1..=max_h);
            Formula::next(i, sub(r, max_h - i))
        }
        k @ (4 | 5) => {
            let a = r.random_range(0..=max_h);
            let b = r.random_range(a..=max_h);
            let inner = sub(r, max_h - b);
            if k == 4 {
                Formula::finally(a, b, inner).unwrap()
            } else {
                Formula::globally(a, b, inner).unwrap()
            }
        }
        _ => sub(r, max_h).implies(sub(r, max_h)),
    }
}

/// Robustness with every temporal operator unfolded into explicit min/max
/// nodes first.
pub mod reference {
    use reactive_synth::stl::Formula;

    pub enum Node {
        Atom { coeffs: Vec<f64>, offset: f64, time: usize },
        Neg(Box<Node>),
        Min(Vec<Node>),
        Max(Vec<Node>),
    }

    pub fn unfold(f: &Formula, t: usize) -> Node {
        match f {
            Formula::Predicate(p) => Node::Atom {
                coeffs: p.coeffs.clone(),
                offset: p.offset,
                time: t,
            },
            Formula::Not(g) => Node::Neg(Box::new(unfold(g, t))),
            Formula::And(a, b) => Node::Min(vec![unfold(a, t), unfold(b, t)]),
            Formula::Or(a, b) => Node::Max(vec![unfold(a, t), unfold(b, t)]),
            Formula::Next(i, g) => unfold(g, t + i),
            Formula::Finally(a, b, g) => Node::Max((t + a..=t + b).map(|s| unfold(g, s)).collect()),
            Formula::Globally(a, b, g) => Node::Min((t + a..=t + b).map(|s| unfold(g, s)).collect()),
        }
    }

    pub fn value(n: &Node, xs: &[Vec<f64>]) -> f64 {
        match n {
            Node::Atom { coeffs, offset, time } => {
                let x = &xs[*time];
                let mut v = -offset;
                for (i, c) in coeffs.iter().enumerate() {
                    v += c * x[i];
                }
                v
            }
            Node::Neg(m) => -value(m, xs),
            Node::Min(ms) => ms.iter().map(|m| value(m, xs)).reduce(f64::min).unwrap(),
            Node::Max(ms) => ms.iter().map(|m| value(m, xs)).reduce(f64::max).unwrap(),
        }
    }

    /// Boolean semantics of strict atoms.
    pub fn holds(n: &Node, xs: &[Vec<f64>]) -> bool {
        match n {
            Node::Atom { .. } => value(n, xs) > 0.0,
            Node::Neg(m) => !holds(m, xs),
            Node::Min(ms) => ms.iter().all(|m| holds(m, xs)),
            Node::Max(ms) => ms.iter().any(|m| holds(m, xs)),
        }
    }

    pub fn rho(f: &Formula, xs: &[Vec<f64>], t: usize) -> f64 {
        value(&unfold(f, t), xs)
    }
}

pub fn random_trace(r: &mut ChaCha8Rng, len: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..len).map(|_| (0..dim).map(|_| r.random_range(-2.0..2.0)).collect()).collect()
}

/// Random linear plant with boxes around zero.
pub fn random_linear(r: &mut ChaCha8Rng, n: usize, nu: usize, nw: usize, h: usize) -> LinearSystem {
    let m = |r: &mut ChaCha8Rng, rows: usize, cols: usize, s: f64| {
        DMatrix::from_fn(rows, cols, |_, _| r.random_range(-s..s))
    };
    let a = m(r, n, n, 0.9);
    let b = m(r, n, nu, 1.0);
    let c = m(r, n, nw, 0.5);
    let x0 = DVector::from_fn(n, |_, _| r.random_range(-0.5..0.5));
    let boxes = |r: &mut ChaCha8Rng, k: usize| {
        (0..k)
            .map(|_| {
                let lo = r.random_range(-1.0..0.0);
                (lo, lo + r.random_range(0.5..1.5))
            })
            .collect()
    };
    let u_box = boxes(r, nu);
    let w_box = boxes(r, nw);
    LinearSystem::new(a, b, c, x0, h, u_box, w_box).unwrap()
}

pub fn linear(sys: LinearSystem) -> Plant {
    Plant::Linear(sys)
}

/// Points of `[lo, hi]` at `n` evenly spaced positions, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Product grid over per-coordinate axes, first coordinate slowest.
pub fn grid(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    reactive_synth::oracle::product(axes).collect()
}

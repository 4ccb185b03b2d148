//! Plants, finite-horizon unrolling and Lipschitz bounds of robustness.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stl::{Formula, Trace};

/// Inputs this far outside their box are clamped silently.
pub const CLAMP_TOLERANCE: f64 = 1e-9;

/// Which input sequence a query ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Player {
    System,
    Environment,
}

impl Player {
    pub fn other(self) -> Self {
        match self {
            Player::System => Player::Environment,
            Player::Environment => Player::System,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Player::System => "system",
            Player::Environment => "environment",
        }
    }
}

/// Admissible values of one scalar input coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Interval { lo: f64, hi: f64 },
    Finite(Vec<f64>),
}

impl Domain {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::Invalid(format!("bad interval [{lo}, {hi}]")));
        }
        Ok(Domain::Interval { lo, hi })
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Domain::Finite(_))
    }

    /// Smallest closed interval containing the domain.
    pub fn hull(&self) -> (f64, f64) {
        match self {
            Domain::Interval { lo, hi } => (*lo, *hi),
            Domain::Finite(v) => v
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x))),
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        match self {
            Domain::Interval { lo, hi } => *lo <= v && v <= *hi,
            Domain::Finite(vals) => vals.contains(&v),
        }
    }
}

/// `x_{k+1} = A x_k + B u_k + C w_k` with box-bounded inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub x0: DVector<f64>,
    pub horizon: usize,
    pub u_box: Vec<(f64, f64)>,
    pub w_box: Vec<(f64, f64)>,
}

impl LinearSystem {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        x0: DVector<f64>,
        horizon: usize,
        u_box: Vec<(f64, f64)>,
        w_box: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let n = x0.len();
        let dim = |what: String| Err(Error::Dimension(what));
        if a.nrows() != n || a.ncols() != n {
            return dim(format!("A is {}x{}, state has {n} components", a.nrows(), a.ncols()));
        }
        if b.nrows() != n || c.nrows() != n {
            return dim(format!("B and C need {n} rows"));
        }
        if b.ncols() != u_box.len() || c.ncols() != w_box.len() {
            return dim(format!(
                "B has {} columns for {} control bounds, C has {} for {} disturbance bounds",
                b.ncols(),
                u_box.len(),
                c.ncols(),
                w_box.len()
            ));
        }
        if horizon == 0 {
            return Err(Error::Invalid("horizon must be at least 1".into()));
        }
        for (lo, hi) in u_box.iter().chain(&w_box) {
            Domain::interval(*lo, *hi)?;
        }
        Ok(Self {
            a,
            b,
            c,
            x0,
            horizon,
            u_box,
            w_box,
        })
    }

    pub fn n_x(&self) -> usize {
        self.x0.len()
    }

    pub fn n_u(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_w(&self) -> usize {
        self.c.ncols()
    }

    /// Jacobians of the stacked trajectory `(x_1, ..., x_H)` with respect to
    /// the stacked control and disturbance sequences.
    pub fn sensitivity(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        (stacked_jacobian(&self.a, &self.b, self.horizon), stacked_jacobian(&self.a, &self.c, self.horizon))
    }
}

fn stacked_jacobian(a: &DMatrix<f64>, input: &DMatrix<f64>, h: usize) -> DMatrix<f64> {
    let (n, m) = input.shape();
    let mut out = DMatrix::zeros(h * n, h * m);
    // powers[j] = A^j * input
    let mut powers = Vec::with_capacity(h);
    let mut cur = input.clone();
    for _ in 0..h {
        powers.push(cur.clone());
        cur = a * &cur;
    }
    for r in 0..h {
        for c in 0..=r {
            out.view_mut((r * n, c * m), (n, m)).copy_from(&powers[r - c]);
        }
    }
    out
}

/// Two-player finite game; the state after round `k` records both moves.
///
/// Step 0 of the trace is a placeholder (every component `-1`), step `k >= 1`
/// is `(code(u_{k-1}), code(w_{k-1}))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteGame {
    pub system_moves: Vec<(String, f64)>,
    pub environment_moves: Vec<(String, f64)>,
    pub horizon: usize,
}

impl FiniteGame {
    pub fn new(
        system_moves: Vec<(String, f64)>,
        environment_moves: Vec<(String, f64)>,
        horizon: usize,
    ) -> Result<Self> {
        for moves in [&system_moves, &environment_moves] {
            if moves.is_empty() {
                return Err(Error::Invalid("move alphabet is empty".into()));
            }
            for (i, (_, c)) in moves.iter().enumerate() {
                if moves[..i].iter().any(|(_, d)| d == c) {
                    return Err(Error::Invalid(format!("move code {c} is used twice")));
                }
            }
        }
        if horizon == 0 {
            return Err(Error::Invalid("horizon must be at least 1".into()));
        }
        Ok(Self {
            system_moves,
            environment_moves,
            horizon,
        })
    }

    /// Rock/paper/scissors for both players, codes 0.5, 1.5, 2.5.
    pub fn rps(horizon: usize) -> Self {
        let moves: Vec<(String, f64)> = [("R", 0.5), ("P", 1.5), ("S", 2.5)]
            .iter()
            .map(|(n, c)| (n.to_string(), *c))
            .collect();
        Self::new(moves.clone(), moves, horizon).expect("valid alphabet")
    }

    pub fn moves(&self, player: Player) -> &[(String, f64)] {
        match player {
            Player::System => &self.system_moves,
            Player::Environment => &self.environment_moves,
        }
    }

    pub fn move_name(&self, player: Player, code: f64) -> Option<&str> {
        self.moves(player)
            .iter()
            .find(|(_, c)| *c == code)
            .map(|(n, _)| n.as_str())
    }
}

/// A plant the synthesis procedures can work on.
#[derive(Clone, Debug, PartialEq)]
pub enum Plant {
    Linear(LinearSystem),
    Finite(FiniteGame),
}

impl Plant {
    pub fn horizon(&self) -> usize {
        match self {
            Plant::Linear(s) => s.horizon,
            Plant::Finite(g) => g.horizon,
        }
    }

    /// Input components per step.
    pub fn width(&self, player: Player) -> usize {
        match (self, player) {
            (Plant::Linear(s), Player::System) => s.n_u(),
            (Plant::Linear(s), Player::Environment) => s.n_w(),
            (Plant::Finite(_), _) => 1,
        }
    }

    /// Length of the flattened input sequence.
    pub fn dim(&self, player: Player) -> usize {
        self.horizon() * self.width(player)
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Plant::Finite(_))
    }

    pub fn state_dim(&self) -> usize {
        match self {
            Plant::Linear(s) => s.n_x(),
            Plant::Finite(_) => 2,
        }
    }

    /// Domain of each flattened coordinate (index `k * width + d`).
    pub fn domains(&self, player: Player) -> Vec<Domain> {
        let per_step: Vec<Domain> = match (self, player) {
            (Plant::Linear(s), Player::System) => s
                .u_box
                .iter()
                .map(|(lo, hi)| Domain::Interval { lo: *lo, hi: *hi })
                .collect(),
            (Plant::Linear(s), Player::Environment) => s
                .w_box
                .iter()
                .map(|(lo, hi)| Domain::Interval { lo: *lo, hi: *hi })
                .collect(),
            (Plant::Finite(g), p) => {
                vec![Domain::Finite(g.moves(p).iter().map(|(_, c)| *c).collect())]
            }
        };
        (0..self.horizon()).flat_map(|_| per_step.iter().cloned()).collect()
    }

    /// Centre of each coordinate's hull (first move for finite games).
    pub fn default_input(&self, player: Player) -> Vec<f64> {
        self.domains(player)
            .iter()
            .map(|d| match d {
                Domain::Interval { lo, hi } => 0.5 * (lo + hi),
                Domain::Finite(v) => v[0],
            })
            .collect()
    }

    pub fn evaluator(&self) -> Evaluator {
        Evaluator::new(self)
    }

    /// State trace for flattened input sequences.
    pub fn unroll(&self, u: &[f64], w: &[f64]) -> Result<Trace> {
        self.check_inputs(u, w)?;
        let u = clamp_into(u, &self.domains(Player::System));
        let w = clamp_into(w, &self.domains(Player::Environment));
        let mut buf = Vec::new();
        self.evaluator().fill(&u, &w, &mut buf);
        Trace::new(buf)
    }

    fn check_inputs(&self, u: &[f64], w: &[f64]) -> Result<()> {
        for (p, v) in [(Player::System, u), (Player::Environment, w)] {
            if v.len() != self.dim(p) {
                return Err(Error::Dimension(format!(
                    "{} input has {} values, expected {}",
                    p.name(),
                    v.len(),
                    self.dim(p)
                )));
            }
        }
        Ok(())
    }
}

fn clamp_into(v: &[f64], domains: &[Domain]) -> Vec<f64> {
    v.iter()
        .zip(domains)
        .map(|(x, d)| match d {
            Domain::Interval { lo, hi } => {
                if *x < *lo - CLAMP_TOLERANCE || *x > *hi + CLAMP_TOLERANCE {
                    log::warn!("input {x} lies outside [{lo}, {hi}]");
                    *x
                } else {
                    x.clamp(*lo, *hi)
                }
            }
            Domain::Finite(_) => *x,
        })
        .collect()
}

/// Precomputed affine map from flattened inputs to the trace.
#[derive(Clone, Debug)]
pub struct Evaluator {
    n_x: usize,
    steps: usize,
    /// Unforced trajectory, `(H+1) * n_x` values.
    free: Vec<f64>,
    /// Row-major `(H+1) n_x x H n_u` and `(H+1) n_x x H n_w` gains.
    gain_u: Vec<f64>,
    gain_w: Vec<f64>,
    dim_u: usize,
    dim_w: usize,
}

impl Evaluator {
    fn new(plant: &Plant) -> Self {
        match plant {
            Plant::Linear(s) => {
                let h = s.horizon;
                let n = s.n_x();
                let mut free = Vec::with_capacity((h + 1) * n);
                let mut x = s.x0.clone();
                free.extend(x.iter());
                for _ in 0..h {
                    x = &s.a * x;
                    free.extend(x.iter());
                }
                let (mu, mw) = s.sensitivity();
                Self {
                    n_x: n,
                    steps: h + 1,
                    free,
                    gain_u: padded_rows(&mu, n),
                    gain_w: padded_rows(&mw, n),
                    dim_u: mu.ncols(),
                    dim_w: mw.ncols(),
                }
            }
            Plant::Finite(g) => {
                let h = g.horizon;
                let mut free = vec![-1.0, -1.0];
                free.extend(std::iter::repeat_n(0.0, 2 * h));
                let mut gain_u = vec![0.0; 2 * (h + 1) * h];
                let mut gain_w = vec![0.0; 2 * (h + 1) * h];
                for k in 0..h {
                    gain_u[(2 * (k + 1)) * h + k] = 1.0;
                    gain_w[(2 * (k + 1) + 1) * h + k] = 1.0;
                }
                Self {
                    n_x: 2,
                    steps: h + 1,
                    free,
                    gain_u,
                    gain_w,
                    dim_u: h,
                    dim_w: h,
                }
            }
        }
    }

    /// Writes the trace for `(u, w)` into `buf`, reusing its allocations.
    pub fn fill(&self, u: &[f64], w: &[f64], buf: &mut Vec<Vec<f64>>) {
        buf.resize_with(self.steps, Vec::new);
        for (t, row) in buf.iter_mut().enumerate() {
            row.clear();
            for i in 0..self.n_x {
                let r = t * self.n_x + i;
                let mut v = self.free[r];
                let gu = &self.gain_u[r * self.dim_u..(r + 1) * self.dim_u];
                for (g, x) in gu.iter().zip(u) {
                    v += g * x;
                }
                let gw = &self.gain_w[r * self.dim_w..(r + 1) * self.dim_w];
                for (g, x) in gw.iter().zip(w) {
                    v += g * x;
                }
                row.push(v);
            }
        }
    }

    /// Robustness of `formula` at time 0. The caller guarantees the trace is
    /// long and wide enough (see [`check_formula`]).
    pub fn rho(&self, formula: &Formula, u: &[f64], w: &[f64], buf: &mut Vec<Vec<f64>>) -> f64 {
        self.fill(u, w, buf);
        formula.rho(buf, 0)
    }
}

/// Prepends a zero block for `x_0` and flattens row-major.
fn padded_rows(m: &DMatrix<f64>, n_x: usize) -> Vec<f64> {
    let cols = m.ncols();
    let mut out = vec![0.0; n_x * cols];
    for r in 0..m.nrows() {
        for c in 0..cols {
            out.push(m[(r, c)]);
        }
    }
    out
}

/// Checks that a formula can be evaluated at time 0 on the plant's traces.
pub fn check_formula(plant: &Plant, formula: &Formula) -> Result<()> {
    formula.validate()?;
    let len = plant.horizon() + 1;
    if formula.horizon() >= len {
        return Err(Error::TraceTooShort {
            t: 0,
            needed: formula.horizon() + 1,
            len,
        });
    }
    if formula.state_dim() > plant.state_dim() {
        return Err(Error::Dimension(format!(
            "formula reads {} state components, plant has {}",
            formula.state_dim(),
            plant.state_dim()
        )));
    }
    Ok(())
}

/// Operator-norm bound used for the trajectory sensitivity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormBound {
    /// Induced infinity norm (max absolute row sum).
    #[default]
    Infinity,
    /// Largest singular value times `sqrt(columns)`, which bounds the
    /// infinity-to-infinity gain.
    Spectral,
}

/// Lipschitz constants of `u -> rho` and `w -> rho` in the infinity norm on
/// flattened input sequences.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzBounds {
    pub system: f64,
    pub environment: f64,
}

impl LipschitzBounds {
    pub fn get(&self, player: Player) -> f64 {
        match player {
            Player::System => self.system,
            Player::Environment => self.environment,
        }
    }
}

pub fn lipschitz_bounds(sys: &LinearSystem, formula: &Formula, norm: NormBound) -> LipschitzBounds {
    let gain = formula.max_predicate_gain();
    let (mu, mw) = sys.sensitivity();
    LipschitzBounds {
        system: operator_bound(&mu, norm) * gain,
        environment: operator_bound(&mw, norm) * gain,
    }
}

fn operator_bound(m: &DMatrix<f64>, norm: NormBound) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    match norm {
        NormBound::Infinity => m
            .row_iter()
            .map(|r| r.iter().fold(0.0, |acc, v| acc + v.abs()))
            .fold(0.0, f64::max),
        NormBound::Spectral => {
            let s = m.clone().singular_values();
            s.max() * (m.ncols() as f64).sqrt()
        }
    }
}

/// Lipschitz constant of robustness restricted to the flattened input
/// coordinates in `columns` (other coordinates held fixed).
pub fn block_lipschitz(sys: &LinearSystem, formula: &Formula, player: Player, columns: &[usize]) -> f64 {
    let (mu, mw) = sys.sensitivity();
    let m = match player {
        Player::System => mu,
        Player::Environment => mw,
    };
    let row_max = m
        .row_iter()
        .map(|r| columns.iter().fold(0.0, |acc, c| acc + r[*c].abs()))
        .fold(0.0, f64::max);
    row_max * formula.max_predicate_gain()
}

/// Flattened sequence `values[k]` of per-step vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputSequence {
    pub values: Vec<Vec<f64>>,
}

impl InputSequence {
    pub fn from_flat(flat: &[f64], width: usize) -> Self {
        let values = if width == 0 {
            Vec::new()
        } else {
            flat.chunks(width).map(<[f64]>::to_vec).collect()
        };
        Self { values }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }
}

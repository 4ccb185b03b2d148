//! Truth of a quantified game, outermost block first.
//!
//! Universal blocks are covered by cells whose width follows the per-input
//! Lipschitz constant; the quantified inputs stay universal inside each cell.
//! Existential blocks try lattice candidates ordered by a lattice max-min
//! score. The last existential block is settled by a dominance query.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::game::{GameString, Token};
use crate::cegis::{solve, CegisConfig, Dominance, Verdict};
use crate::dynamics::{check_formula, Domain, Evaluator, Plant, Player};
use crate::error::{Error, Result};
use crate::oracle::{domain_of, product, search_moves, search_region, OracleMode, SearchDomain, SearchStats};
use crate::stl::Formula;

/// Upper limit on game nodes visited by one solver.
const NODE_BUDGET: usize = 200_000;
/// Upper limit on robustness evaluations spent scoring one candidate set.
const SCORE_BUDGET: usize = 400_000;
/// Lattice points per input when scoring.
const AXIS_CAP: usize = 33;
/// Continuous lattice candidates tried per existential block.
const CANDIDATES: usize = 8;

/// State of one input coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Fixed(f64),
    Free(Domain),
}

/// Every input coordinate of both players.
#[derive(Clone, Debug, PartialEq)]
pub struct Context {
    pub u: Vec<Slot>,
    pub w: Vec<Slot>,
}

impl Context {
    pub fn of(plant: &Plant) -> Self {
        let free = |p| plant.domains(p).into_iter().map(Slot::Free).collect();
        Self {
            u: free(Player::System),
            w: free(Player::Environment),
        }
    }

    fn slots(&self, p: Player) -> &[Slot] {
        match p {
            Player::System => &self.u,
            Player::Environment => &self.w,
        }
    }

    pub fn set(&mut self, p: Player, i: usize, s: Slot) {
        match p {
            Player::System => self.u[i] = s,
            Player::Environment => self.w[i] = s,
        }
    }

    /// Template values: fixed values, free inputs at their lower end.
    fn base(&self, p: Player) -> Vec<f64> {
        self.slots(p)
            .iter()
            .map(|s| match s {
                Slot::Fixed(v) => *v,
                Slot::Free(d) => d.hull().0,
            })
            .collect()
    }

    fn free(&self, p: Player) -> Vec<(usize, Domain)> {
        self.slots(p)
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match s {
                Slot::Free(d) => Some((i, d.clone())),
                Slot::Fixed(_) => None,
            })
            .collect()
    }

    fn domain(&self, p: Player, i: usize) -> &Domain {
        match &self.slots(p)[i] {
            Slot::Free(d) => d,
            Slot::Fixed(_) => panic!("coordinate {i} of {} is fixed", p.name()),
        }
    }
}

/// Witness of a true game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    Done,
    /// Control coordinates fixed to `values`.
    Commit {
        slots: Vec<usize>,
        values: Vec<f64>,
        then: Box<Strategy>,
    },
    /// Disturbance coordinates covered by cells, one strategy per cell.
    Split {
        slots: Vec<usize>,
        cells: Vec<(Vec<Domain>, Strategy)>,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameStats {
    pub nodes: usize,
    pub dominance_queries: usize,
    pub certifications: usize,
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameOutcome {
    pub holds: bool,
    pub strategy: Option<Strategy>,
    pub stats: GameStats,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Quant {
    Exists,
    Forall,
}

#[derive(Clone, Debug)]
struct Block {
    quant: Quant,
    coords: Vec<usize>,
}

impl Block {
    fn player(&self) -> Player {
        match self.quant {
            Quant::Exists => Player::System,
            Quant::Forall => Player::Environment,
        }
    }
}

/// Cells of width at most `pitch` covering a domain; single moves when finite.
fn cells(d: &Domain, pitch: f64) -> Vec<Domain> {
    match d {
        Domain::Finite(v) => v.iter().map(|x| Domain::Finite(vec![*x])).collect(),
        Domain::Interval { lo, hi } => {
            let n = steps(hi - lo, pitch, usize::MAX);
            (0..n)
                .map(|i| Domain::Interval {
                    lo: lo + (hi - lo) * i as f64 / n as f64,
                    hi: if i + 1 == n { *hi } else { lo + (hi - lo) * (i + 1) as f64 / n as f64 },
                })
                .collect()
        }
    }
}

fn steps(width: f64, pitch: f64, cap: usize) -> usize {
    if !(width > 0.0) {
        return 1;
    }
    let n = (width / pitch - 1e-9).ceil();
    if n.is_finite() {
        (n.max(1.0) as usize).min(cap)
    } else {
        1
    }
}

/// Lattice points with spacing at most `pitch`, endpoints included.
fn axis(d: &Domain, pitch: f64, cap: usize) -> Vec<f64> {
    match d {
        Domain::Finite(v) => v.clone(),
        Domain::Interval { lo, hi } if hi > lo => {
            let n = steps(hi - lo, pitch, cap);
            (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
        }
        Domain::Interval { lo, .. } => vec![*lo],
    }
}

struct Level {
    quant: Quant,
    slots: Vec<(Player, usize)>,
    axes: Vec<Vec<f64>>,
}

/// Depth-first search for a true game under a context of fixed controls and
/// narrowed disturbances.
pub struct GameSolver<'a> {
    plant: &'a Plant,
    formula: &'a Formula,
    cfg: &'a CegisConfig,
    eval: Evaluator,
    pitch_u: Vec<f64>,
    pitch_w: Vec<f64>,
    pub stats: GameStats,
}

impl<'a> GameSolver<'a> {
    pub fn new(plant: &'a Plant, formula: &'a Formula, cfg: &'a CegisConfig) -> Result<Self> {
        cfg.validate()?;
        check_formula(plant, formula)?;
        let pitch = |p: Player| {
            (0..plant.dim(p))
                .map(|i| {
                    let l = cfg.block_bound(plant, formula, p, &[i]);
                    if l > 0.0 {
                        cfg.epsilon / l
                    } else {
                        f64::INFINITY
                    }
                })
                .collect()
        };
        Ok(Self {
            plant,
            formula,
            cfg,
            eval: plant.evaluator(),
            pitch_u: pitch(Player::System),
            pitch_w: pitch(Player::Environment),
            stats: GameStats::default(),
        })
    }

    fn pitch(&self, p: Player, i: usize) -> f64 {
        match p {
            Player::System => self.pitch_u[i],
            Player::Environment => self.pitch_w[i],
        }
    }

    /// Evaluates `game` with the inputs fixed or narrowed by `ctx`.
    pub fn solve(&mut self, game: &GameString, ctx: &Context) -> Result<Option<Strategy>> {
        if game.horizon() != self.plant.horizon() {
            return Err(Error::Dimension(format!(
                "game has {} rounds, plant horizon is {}",
                game.horizon(),
                self.plant.horizon()
            )));
        }
        let blocks = self.blocks(game, ctx);
        self.run(&blocks, ctx, None)
    }

    fn blocks(&self, game: &GameString, ctx: &Context) -> Vec<Block> {
        let nu = self.plant.width(Player::System);
        let nw = self.plant.width(Player::Environment);
        let mut out: Vec<Block> = Vec::new();
        for t in game.tokens() {
            let (quant, coords): (Quant, Vec<usize>) = match *t {
                Token::E(k) => (
                    Quant::Exists,
                    ((k - 1) * nu..k * nu).filter(|i| matches!(ctx.u[*i], Slot::Free(_))).collect(),
                ),
                Token::A(k) => (
                    Quant::Forall,
                    ((k - 1) * nw..k * nw).filter(|i| matches!(ctx.w[*i], Slot::Free(_))).collect(),
                ),
            };
            if coords.is_empty() {
                continue;
            }
            match out.last_mut() {
                Some(b) if b.quant == quant => b.coords.extend(coords),
                _ => out.push(Block { quant, coords }),
            }
        }
        out
    }

    fn tick(&mut self) -> Result<()> {
        self.stats.nodes += 1;
        if self.stats.nodes > NODE_BUDGET {
            return Err(Error::Budget(format!("game evaluation visited more than {NODE_BUDGET} nodes")));
        }
        Ok(())
    }

    fn run(&mut self, blocks: &[Block], ctx: &Context, hint: Option<&Strategy>) -> Result<Option<Strategy>> {
        self.tick()?;
        let Some((first, rest)) = blocks.split_first() else {
            return Ok(self.certify(ctx).then_some(Strategy::Done));
        };
        match first.quant {
            Quant::Forall if rest.is_empty() => Ok(self.certify(ctx).then_some(Strategy::Done)),
            Quant::Forall => self.forall(first, rest, ctx),
            Quant::Exists if rest.iter().all(|b| b.quant == Quant::Forall) => self.last_exists(first, ctx, hint),
            Quant::Exists => self.exists(first, rest, ctx, hint),
        }
    }

    fn forall(&mut self, block: &Block, rest: &[Block], ctx: &Context) -> Result<Option<Strategy>> {
        let per_coord: Vec<Vec<Domain>> = block
            .coords
            .iter()
            .map(|&i| cells(ctx.domain(Player::Environment, i), self.pitch_w[i]))
            .collect();
        let mut out = Vec::new();
        let mut prev: Option<Strategy> = None;
        for cell in cell_product(&per_coord) {
            let mut sub = ctx.clone();
            for (&i, d) in block.coords.iter().zip(&cell) {
                sub.w[i] = Slot::Free(d.clone());
            }
            match self.run(rest, &sub, prev.as_ref())? {
                Some(s) => {
                    prev = Some(s.clone());
                    out.push((cell, s));
                }
                None => return Ok(None),
            }
        }
        Ok(Some(Strategy::Split {
            slots: block.coords.clone(),
            cells: out,
        }))
    }

    fn exists(
        &mut self,
        block: &Block,
        rest: &[Block],
        ctx: &Context,
        hint: Option<&Strategy>,
    ) -> Result<Option<Strategy>> {
        let finite = self.plant.is_finite();
        let mut tried: Vec<Vec<f64>> = Vec::new();
        if let Some(Strategy::Commit { slots, values, then }) = hint {
            if *slots == block.coords {
                tried.push(values.clone());
                if let Some(s) = self.try_commit(block, rest, ctx, values, Some(then.as_ref()))? {
                    return Ok(Some(s));
                }
            }
        }
        let scored = self.scored_candidates(block, rest, ctx);
        let floor = if finite { 0.0 } else { -self.cfg.epsilon };
        let limit = if finite { usize::MAX } else { CANDIDATES };
        for (values, score) in scored.into_iter().filter(|(v, _)| !tried.contains(v)).take(limit) {
            if score < floor || (finite && score <= 0.0) {
                break;
            }
            if let Some(s) = self.try_commit(block, rest, ctx, &values, None)? {
                return Ok(Some(s));
            }
        }
        Ok(None)
    }

    fn try_commit(
        &mut self,
        block: &Block,
        rest: &[Block],
        ctx: &Context,
        values: &[f64],
        hint: Option<&Strategy>,
    ) -> Result<Option<Strategy>> {
        let sub = fixed(ctx, &block.coords, values);
        Ok(self.run(rest, &sub, hint)?.map(|then| Strategy::Commit {
            slots: block.coords.clone(),
            values: values.to_vec(),
            then: Box::new(then),
        }))
    }

    /// Last existential block: every remaining free disturbance is universal.
    fn last_exists(&mut self, block: &Block, ctx: &Context, hint: Option<&Strategy>) -> Result<Option<Strategy>> {
        let commit = |values: Vec<f64>| Strategy::Commit {
            slots: block.coords.clone(),
            values,
            then: Box::new(Strategy::Done),
        };
        if let Some(Strategy::Commit { slots, values, .. }) = hint {
            if *slots == block.coords && self.certify(&fixed(ctx, &block.coords, values)) {
                return Ok(Some(commit(values.clone())));
            }
        }
        let scored = self.scored_candidates(block, &[], ctx);
        for (values, score) in scored.into_iter().take(CANDIDATES) {
            if score <= 0.0 {
                break;
            }
            if self.certify(&fixed(ctx, &block.coords, &values)) {
                return Ok(Some(commit(values)));
            }
        }
        let forall = ctx.free(Player::Environment);
        let exists_domain: Vec<Domain> =
            block.coords.iter().map(|&i| ctx.domain(Player::System, i).clone()).collect();
        let l_exists = self.cfg.block_bound(self.plant, self.formula, Player::System, &block.coords);
        if forall.is_empty() {
            return Ok(self.satisfy(block, ctx, &exists_domain, l_exists).map(commit));
        }
        let forall_cols: Vec<usize> = forall.iter().map(|(i, _)| *i).collect();
        let problem = Dominance {
            plant: self.plant,
            formula: self.formula,
            negate: false,
            base_u: ctx.base(Player::System),
            base_w: ctx.base(Player::Environment),
            exists: block.coords.iter().map(|&i| (Player::System, i)).collect(),
            exists_domain,
            forall: forall_cols.iter().map(|&i| (Player::Environment, i)).collect(),
            forall_domain: forall.into_iter().map(|(_, d)| d).collect(),
            l_exists,
            l_forall: self.cfg.block_bound(self.plant, self.formula, Player::Environment, &forall_cols),
        };
        self.stats.dominance_queries += 1;
        let out = solve(&problem, self.cfg)?;
        self.stats.evaluations += out.evaluations;
        match out.verdict {
            Verdict::Dominant { strategy, .. } => Ok(Some(commit(strategy))),
            Verdict::NoDominant => Ok(None),
            Verdict::BudgetExhausted => Err(Error::Budget(format!(
                "dominance query stopped after {} iterations",
                out.iterations
            ))),
        }
    }

    /// Some control values with positive robustness when nothing is universal.
    fn satisfy(&mut self, block: &Block, ctx: &Context, domains: &[Domain], lipschitz: f64) -> Option<Vec<f64>> {
        let mut u = ctx.base(Player::System);
        let w = ctx.base(Player::Environment);
        let mut buf = Vec::new();
        let mut stats = SearchStats::default();
        let g = |x: &[f64]| {
            for (&i, v) in block.coords.iter().zip(x) {
                u[i] = *v;
            }
            self.eval.rho(self.formula, &u, &w, &mut buf)
        };
        let found = match domain_of(domains).ok()? {
            SearchDomain::Region(r) => {
                let delta = precision(self.cfg, lipschitz);
                search_region(&r, lipschitz, delta, OracleMode::Satisfy, 0.0, g, &mut stats)
            }
            SearchDomain::Moves { sets, excluded } => {
                search_moves(&sets, &excluded, OracleMode::Satisfy, 0.0, g, &mut stats)
            }
        };
        self.stats.evaluations += stats.evaluations;
        found.map(|f| f.point)
    }

    /// Whether robustness is positive for every free disturbance, all
    /// controls being fixed.
    fn certify(&mut self, ctx: &Context) -> bool {
        self.stats.certifications += 1;
        let u = ctx.base(Player::System);
        let mut w = ctx.base(Player::Environment);
        let free = ctx.free(Player::Environment);
        let mut buf = Vec::new();
        if free.is_empty() {
            self.stats.evaluations += 1;
            return self.eval.rho(self.formula, &u, &w, &mut buf) > 0.0;
        }
        let cols: Vec<usize> = free.iter().map(|(i, _)| *i).collect();
        let domains: Vec<Domain> = free.into_iter().map(|(_, d)| d).collect();
        let l = self.cfg.block_bound(self.plant, self.formula, Player::Environment, &cols);
        let mut stats = SearchStats::default();
        let g = |x: &[f64]| {
            for (&i, v) in cols.iter().zip(x) {
                w[i] = *v;
            }
            -self.eval.rho(self.formula, &u, &w, &mut buf)
        };
        let found = match domain_of(&domains) {
            Ok(SearchDomain::Region(r)) => {
                let delta = precision(self.cfg, l);
                search_region(&r, l, delta, OracleMode::Satisfy, -l * delta, g, &mut stats)
            }
            Ok(SearchDomain::Moves { sets, excluded }) => {
                search_moves(&sets, &excluded, OracleMode::Satisfy, -f64::MIN_POSITIVE, g, &mut stats)
            }
            Err(_) => return false,
        };
        self.stats.evaluations += stats.evaluations;
        found.is_none()
    }

    /// Lattice points of `block`, best lattice game value first (stable).
    fn scored_candidates(&mut self, block: &Block, rest: &[Block], ctx: &Context) -> Vec<(Vec<f64>, f64)> {
        let in_rest = |p: Player, i: usize| rest.iter().any(|b| b.player() == p && b.coords.contains(&i));
        let outer: Vec<usize> = ctx
            .free(Player::Environment)
            .into_iter()
            .map(|(i, _)| i)
            .filter(|i| !in_rest(Player::Environment, *i))
            .collect();
        let mut specs: Vec<(Quant, Vec<(Player, usize)>)> = Vec::new();
        specs.push((Quant::Exists, block.coords.iter().map(|&i| (Player::System, i)).collect()));
        if !outer.is_empty() {
            specs.push((Quant::Forall, outer.iter().map(|&i| (Player::Environment, i)).collect()));
        }
        for b in rest {
            specs.push((b.quant, b.coords.iter().map(|&i| (b.player(), i)).collect()));
        }
        let mut levels = self.lattice(&specs, ctx);
        let head = levels.remove(0);
        let candidates: Vec<Vec<f64>> = product(&head.axes).collect();
        let base_u = ctx.base(Player::System);
        let base_w = ctx.base(Player::Environment);
        let (eval, formula) = (&self.eval, self.formula);
        let scores: Vec<(Score, usize)> = candidates
            .par_iter()
            .map(|c| {
                let (mut u, mut w) = (base_u.clone(), base_w.clone());
                place(&head.slots, c, &mut u, &mut w);
                let mut buf = Vec::new();
                let mut count = 0;
                let v = lattice_value(eval, formula, &levels, &mut u, &mut w, &mut buf, &mut count);
                (v, count)
            })
            .collect();
        self.stats.evaluations += scores.iter().map(|(_, n)| n).sum::<usize>();
        let mut out: Vec<(Vec<f64>, Score)> = candidates.into_iter().zip(scores.into_iter().map(|(v, _)| v)).collect();
        out.sort_by(|a, b| b.1.cmp(&a.1));
        out.into_iter().map(|(c, s)| (c, s.worst)).collect()
    }

    /// Axes per level, coarsened until the product fits the score budget.
    fn lattice(&self, specs: &[(Quant, Vec<(Player, usize)>)], ctx: &Context) -> Vec<Level> {
        let mut counts: Vec<Vec<usize>> = specs
            .iter()
            .map(|(_, slots)| {
                slots
                    .iter()
                    .map(|&(p, i)| match ctx.domain(p, i) {
                        Domain::Finite(v) => v.len(),
                        Domain::Interval { lo, hi } if hi > lo => steps(hi - lo, self.pitch(p, i), AXIS_CAP - 1) + 1,
                        Domain::Interval { .. } => 1,
                    })
                    .collect()
            })
            .collect();
        loop {
            let total = counts.iter().flatten().fold(1usize, |acc, n| acc.saturating_mul(*n));
            if total <= SCORE_BUDGET {
                break;
            }
            let mut widest: Option<(usize, usize)> = None;
            for (a, row) in counts.iter().enumerate() {
                for (b, n) in row.iter().enumerate() {
                    let (p, i) = specs[a].1[b];
                    let shrinkable = matches!(ctx.domain(p, i), Domain::Interval { .. }) && *n > 2;
                    if shrinkable && widest.is_none_or(|(x, y)| *n > counts[x][y]) {
                        widest = Some((a, b));
                    }
                }
            }
            let Some((a, b)) = widest else { break };
            counts[a][b] = (counts[a][b] - 1).div_ceil(2) + 1;
        }
        specs
            .iter()
            .zip(&counts)
            .map(|((quant, slots), row)| Level {
                quant: *quant,
                slots: slots.clone(),
                axes: slots
                    .iter()
                    .zip(row)
                    .map(|(&(p, i), n)| {
                        let d = ctx.domain(p, i);
                        let (lo, hi) = d.hull();
                        let pitch = if *n > 1 { (hi - lo) / (*n - 1) as f64 } else { f64::INFINITY };
                        axis(d, pitch * (1.0 + 1e-9), usize::MAX)
                    })
                    .collect(),
            })
            .collect()
    }
}

fn precision(cfg: &CegisConfig, lipschitz: f64) -> f64 {
    cfg.precision.unwrap_or(if lipschitz > 0.0 {
        cfg.epsilon / (4.0 * lipschitz)
    } else {
        cfg.epsilon / 4.0
    })
}

fn fixed(ctx: &Context, coords: &[usize], values: &[f64]) -> Context {
    let mut sub = ctx.clone();
    for (&i, v) in coords.iter().zip(values) {
        sub.u[i] = Slot::Fixed(*v);
    }
    sub
}

fn place(slots: &[(Player, usize)], values: &[f64], u: &mut [f64], w: &mut [f64]) {
    crate::cegis::place(slots, values, u, w);
}

/// Product of per-coordinate cell lists, first coordinate slowest.
fn cell_product(per_coord: &[Vec<Domain>]) -> Vec<Vec<Domain>> {
    let sizes: Vec<Vec<f64>> = per_coord.iter().map(|c| (0..c.len()).map(|i| i as f64).collect()).collect();
    product(&sizes)
        .map(|idx| idx.iter().zip(per_coord).map(|(i, c)| c[*i as usize].clone()).collect())
        .collect()
}

/// Lattice game value, with the value under uniformly random universal
/// moves as tie-breaker.
#[derive(Clone, Copy, Debug)]
struct Score {
    worst: f64,
    mean: f64,
}

impl Score {
    fn cmp(&self, other: &Score) -> std::cmp::Ordering {
        if (self.worst - other.worst).abs() > 1e-9 {
            self.worst.total_cmp(&other.worst)
        } else {
            self.mean.total_cmp(&other.mean)
        }
    }
}

fn lattice_value(
    eval: &Evaluator,
    formula: &Formula,
    levels: &[Level],
    u: &mut Vec<f64>,
    w: &mut Vec<f64>,
    buf: &mut Vec<Vec<f64>>,
    count: &mut usize,
) -> Score {
    let Some((level, rest)) = levels.split_first() else {
        *count += 1;
        let r = eval.rho(formula, u, w, buf);
        return Score { worst: r, mean: r };
    };
    let mut best: Option<Score> = None;
    let (mut total, mut n) = (0.0, 0usize);
    for p in product(&level.axes) {
        place(&level.slots, &p, u, w);
        let v = lattice_value(eval, formula, rest, u, w, buf, count);
        match level.quant {
            Quant::Exists => {
                if best.is_none_or(|b| v.cmp(&b).is_gt()) {
                    best = Some(v);
                }
            }
            Quant::Forall => {
                best = Some(Score {
                    worst: best.map_or(v.worst, |b| b.worst.min(v.worst)),
                    mean: 0.0,
                });
                total += v.mean;
                n += 1;
            }
        }
    }
    let mut best = best.unwrap_or(Score {
        worst: f64::NEG_INFINITY,
        mean: f64::NEG_INFINITY,
    });
    if level.quant == Quant::Forall && n > 0 {
        best.mean = total / n as f64;
    }
    best
}

/// Truth of `game` for the system player, with a witness when true.
pub fn evaluate_game(plant: &Plant, formula: &Formula, game: &GameString, cfg: &CegisConfig) -> Result<GameOutcome> {
    let mut solver = GameSolver::new(plant, formula, cfg)?;
    let strategy = solver.solve(game, &Context::of(plant))?;
    Ok(GameOutcome {
        holds: strategy.is_some(),
        strategy,
        stats: solver.stats,
    })
}

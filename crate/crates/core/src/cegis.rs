//! Counterexample-guided synthesis of dominant strategies.
//!
//! [`solve`] works on a [`Dominance`] problem: find values for the `exists`
//! coordinates such that the formula holds for every value of the `forall`
//! coordinates, the remaining coordinates being fixed. Finite problems run
//! the naive loop that discards one refuted candidate per iteration;
//! continuous problems run the modified loop that removes a whole square of
//! refuted candidates around each one.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    block_lipschitz, check_formula, lipschitz_bounds, Domain, Evaluator, LipschitzBounds, NormBound, Plant,
    Player,
};
use crate::error::{Error, Result};
use crate::oracle::{domain_of, search_moves, search_region, Objective, OracleMode, SearchDomain, SearchStats};
use crate::regions::{HyperBox, RegionSet, RemovalRecord};
use crate::stl::Formula;

/// Maximum bisection steps when enlarging a removal square.
const ENLARGE_STEPS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CegisConfig {
    pub epsilon: f64,
    pub max_iters: Option<usize>,
    /// User-supplied constants; computed from the plant when absent.
    pub lipschitz: Option<LipschitzBounds>,
    pub norm: NormBound,
    pub mode: OracleMode,
    /// Branch-and-bound edge length; defaults to `epsilon / (4 L)` per player.
    pub precision: Option<f64>,
    /// Draw the first counterexample at random instead of the box centre.
    pub seed: Option<u64>,
    /// Forget refuted candidates between iterations.
    pub memoryless: bool,
    /// Grow each removal square by bisection.
    pub enlarge: bool,
    /// Subdivision depth of the per-iteration measure bounds (0 disables).
    pub measure_depth: usize,
}

impl CegisConfig {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            max_iters: None,
            lipschitz: None,
            norm: NormBound::Infinity,
            mode: OracleMode::Satisfy,
            precision: None,
            seed: None,
            memoryless: false,
            enlarge: false,
            measure_depth: 12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Invalid(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if let Some(l) = self.lipschitz {
            if !(l.system >= 0.0 && l.environment >= 0.0) {
                return Err(Error::Invalid("Lipschitz constants must be non-negative".into()));
            }
        }
        if let Some(p) = self.precision {
            if !(p > 0.0) {
                return Err(Error::Invalid("precision must be positive".into()));
            }
        }
        Ok(())
    }

    /// Global constants for the plant: the override, or computed.
    pub fn bounds(&self, plant: &Plant, formula: &Formula) -> LipschitzBounds {
        match (self.lipschitz, plant) {
            (Some(l), _) => l,
            (None, Plant::Linear(sys)) => lipschitz_bounds(sys, formula, self.norm),
            (None, Plant::Finite(_)) => LipschitzBounds {
                system: 0.0,
                environment: 0.0,
            },
        }
    }

    /// Lipschitz constant for a subset of one player's coordinates.
    pub fn block_bound(&self, plant: &Plant, formula: &Formula, player: Player, columns: &[usize]) -> f64 {
        match (self.lipschitz, plant) {
            (Some(l), _) => l.get(player),
            (None, Plant::Linear(sys)) => match self.norm {
                NormBound::Infinity => block_lipschitz(sys, formula, player, columns),
                NormBound::Spectral => lipschitz_bounds(sys, formula, self.norm).get(player),
            },
            (None, Plant::Finite(_)) => 0.0,
        }
    }

    fn precision_for(&self, lipschitz: f64) -> f64 {
        self.precision.unwrap_or(if lipschitz > 0.0 {
            self.epsilon / (4.0 * lipschitz)
        } else {
            self.epsilon / 4.0
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Verdict {
    /// Values for the existential coordinates, and their robustness against
    /// the last counterexample.
    Dominant { strategy: Vec<f64>, rho: f64 },
    NoDominant,
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub candidate: Vec<f64>,
    /// Robustness of the candidate against the counterexample it was chosen for.
    pub candidate_rho: f64,
    pub counterexample: Option<Vec<f64>>,
    pub counterexample_rho: Option<f64>,
    pub squares_removed: usize,
    pub measure: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CegisOutcome {
    pub verdict: Verdict,
    /// Candidates proposed.
    pub iterations: usize,
    pub oracle_calls: usize,
    pub evaluations: usize,
    /// Counterexamples in the order they were found (the first entry is the
    /// initial sample).
    pub counterexamples: Vec<Vec<f64>>,
    pub log: Vec<IterationRecord>,
    pub removals: Vec<RemovalRecord>,
    /// Remaining candidate region of continuous problems.
    pub region: Option<RegionSet>,
    pub lipschitz_exists: f64,
    pub lipschitz_forall: f64,
}

impl CegisOutcome {
    pub fn strategy(&self) -> Option<&[f64]> {
        match &self.verdict {
            Verdict::Dominant { strategy, .. } => Some(strategy),
            _ => None,
        }
    }
}

/// Exists/forall split of the input coordinates.
#[derive(Clone, Debug)]
pub struct Dominance<'a> {
    pub plant: &'a Plant,
    pub formula: &'a Formula,
    /// Play for the negated formula.
    pub negate: bool,
    /// Values of coordinates that are neither searched nor quantified.
    pub base_u: Vec<f64>,
    pub base_w: Vec<f64>,
    pub exists: Vec<(Player, usize)>,
    pub exists_domain: Vec<Domain>,
    pub forall: Vec<(Player, usize)>,
    pub forall_domain: Vec<Domain>,
    pub l_exists: f64,
    pub l_forall: f64,
}

impl<'a> Dominance<'a> {
    /// Whole-sequence game: `player` searches, the other player is universal.
    pub fn players(plant: &'a Plant, formula: &'a Formula, player: Player, cfg: &CegisConfig) -> Self {
        let slots = |p: Player| (0..plant.dim(p)).map(|i| (p, i)).collect::<Vec<_>>();
        let bounds = cfg.bounds(plant, formula);
        Self {
            plant,
            formula,
            negate: player == Player::Environment,
            base_u: plant.default_input(Player::System),
            base_w: plant.default_input(Player::Environment),
            exists: slots(player),
            exists_domain: plant.domains(player),
            forall: slots(player.other()),
            forall_domain: plant.domains(player.other()),
            l_exists: bounds.get(player),
            l_forall: bounds.get(player.other()),
        }
    }

    fn is_finite(&self) -> bool {
        self.exists_domain.iter().chain(&self.forall_domain).all(Domain::is_finite)
    }

    fn objective<'e>(
        &self,
        eval: &'e Evaluator,
        negate: bool,
        fixed_slots: &[(Player, usize)],
        fixed: &[f64],
        free: &[(Player, usize)],
    ) -> Objective<'e>
    where
        'a: 'e,
    {
        let mut u = self.base_u.clone();
        let mut w = self.base_w.clone();
        place(fixed_slots, fixed, &mut u, &mut w);
        Objective::new(eval, self.formula, negate, u, w, free.to_vec())
    }

    /// Game robustness (negated when playing for the negation).
    pub fn rho(&self, exists: &[f64], forall: &[f64]) -> f64 {
        let eval = self.plant.evaluator();
        let mut obj = self.objective(&eval, self.negate, &self.exists, exists, &self.forall);
        obj.value(forall)
    }
}

pub(crate) fn place(slots: &[(Player, usize)], values: &[f64], u: &mut [f64], w: &mut [f64]) {
    for ((p, i), v) in slots.iter().zip(values) {
        match p {
            Player::System => u[*i] = *v,
            Player::Environment => w[*i] = *v,
        }
    }
}

fn initial_sample(domains: &[Domain], seed: Option<u64>) -> Vec<f64> {
    match seed {
        None => domains
            .iter()
            .map(|d| match d {
                Domain::Interval { lo, hi } => 0.5 * (lo + hi),
                Domain::Finite(v) => v[0],
            })
            .collect(),
        Some(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            domains
                .iter()
                .map(|d| match d {
                    Domain::Interval { lo, hi } if lo < hi => rng.random_range(*lo..=*hi),
                    Domain::Interval { lo, .. } => *lo,
                    Domain::Finite(v) => v[rng.random_range(0..v.len())],
                })
                .collect()
        }
    }
}

/// Runs the loop appropriate for the problem's domains.
pub fn solve(problem: &Dominance, cfg: &CegisConfig) -> Result<CegisOutcome> {
    cfg.validate()?;
    check_formula(problem.plant, problem.formula)?;
    if problem.exists.len() != problem.exists_domain.len() || problem.forall.len() != problem.forall_domain.len()
    {
        return Err(Error::Dimension("each quantified coordinate needs one domain".into()));
    }
    if problem.is_finite() {
        naive_loop(problem, cfg)
    } else {
        modified_loop(problem, cfg)
    }
}

/// Naive loop for finite games: each refuted candidate is discarded alone.
pub fn naive_cegis(plant: &Plant, formula: &Formula, cfg: &CegisConfig) -> Result<CegisOutcome> {
    if !plant.is_finite() {
        return Err(Error::Invalid("the naive loop needs finite move sets".into()));
    }
    solve(&Dominance::players(plant, formula, Player::System, cfg), cfg)
}

/// Dominant control sequence against every disturbance sequence.
pub fn modified_cegis(plant: &Plant, formula: &Formula, cfg: &CegisConfig) -> Result<CegisOutcome> {
    solve(&Dominance::players(plant, formula, Player::System, cfg), cfg)
}

/// Disturbance sequence falsifying the formula against every control sequence.
pub fn dominant_env(plant: &Plant, formula: &Formula, cfg: &CegisConfig) -> Result<CegisOutcome> {
    solve(&Dominance::players(plant, formula, Player::Environment, cfg), cfg)
}

fn finite_sets(domains: &[Domain]) -> Result<Vec<Vec<f64>>> {
    match domain_of(domains)? {
        SearchDomain::Moves { sets, .. } => Ok(sets),
        SearchDomain::Region(_) => Err(Error::Invalid("expected finite domains".into())),
    }
}

fn naive_loop(p: &Dominance, cfg: &CegisConfig) -> Result<CegisOutcome> {
    let eval = p.plant.evaluator();
    let exists_sets = finite_sets(&p.exists_domain)?;
    let forall_sets = finite_sets(&p.forall_domain)?;
    let mut out = outcome(0.0, 0.0);
    let mut stats = SearchStats::default();
    let mut discarded: Vec<Vec<f64>> = Vec::new();
    let mut w_star = initial_sample(&p.forall_domain, cfg.seed);
    out.counterexamples.push(w_star.clone());
    loop {
        if cfg.max_iters.is_some_and(|m| out.iterations >= m) {
            out.verdict = Verdict::BudgetExhausted;
            break;
        }
        let mut sys = p.objective(&eval, p.negate, &p.forall, &w_star, &p.exists);
        out.oracle_calls += 1;
        let excluded: &[Vec<f64>] = if cfg.memoryless { &[] } else { &discarded };
        let Some(cand) = search_moves(&exists_sets, excluded, cfg.mode, 0.0, |x| sys.value(x), &mut stats) else {
            out.verdict = Verdict::NoDominant;
            break;
        };
        out.iterations += 1;
        let mut env = p.objective(&eval, !p.negate, &p.exists, &cand.point, &p.forall);
        out.oracle_calls += 1;
        let cex = search_moves(&forall_sets, &[], OracleMode::Satisfy, -f64::MIN_POSITIVE, |x| env.value(x), &mut stats);
        let mut rec = IterationRecord {
            iteration: out.iterations,
            candidate: cand.point.clone(),
            candidate_rho: cand.rho,
            counterexample: None,
            counterexample_rho: None,
            squares_removed: 0,
            measure: None,
        };
        match cex {
            None => {
                out.log.push(rec);
                out.verdict = Verdict::Dominant {
                    strategy: cand.point,
                    rho: cand.rho,
                };
                break;
            }
            Some(c) => {
                rec.counterexample = Some(c.point.clone());
                rec.counterexample_rho = Some(-c.rho);
                rec.squares_removed = 1;
                out.log.push(rec);
                discarded.push(cand.point);
                w_star = c.point;
                out.counterexamples.push(w_star.clone());
            }
        }
    }
    out.evaluations = stats.evaluations;
    Ok(out)
}

fn outcome(l_exists: f64, l_forall: f64) -> CegisOutcome {
    CegisOutcome {
        verdict: Verdict::NoDominant,
        iterations: 0,
        oracle_calls: 0,
        evaluations: 0,
        counterexamples: Vec::new(),
        log: Vec::new(),
        removals: Vec::new(),
        region: None,
        lipschitz_exists: l_exists,
        lipschitz_forall: l_forall,
    }
}

fn region_of(domains: &[Domain]) -> Result<RegionSet> {
    match domain_of(domains)? {
        SearchDomain::Region(r) => Ok(r),
        SearchDomain::Moves { .. } => Err(Error::Invalid("expected interval domains".into())),
    }
}

/// Shared state of one continuous run.
struct Run<'p, 'a> {
    p: &'p Dominance<'a>,
    cfg: &'p CegisConfig,
    eval: Evaluator,
    delta_e: f64,
    delta_f: f64,
    stats: SearchStats,
    oracle_calls: usize,
}

impl Run<'_, '_> {
    /// Largest candidate radius that can still matter: covers the base box.
    fn radius_cap(region: &RegionSet) -> f64 {
        region.base.widest().1 + 1.0
    }

    fn radius(&self, level: f64, rho: f64, region: &RegionSet) -> f64 {
        let cap = Self::radius_cap(region);
        if self.p.l_exists > 0.0 {
            ((level - rho) / self.p.l_exists).min(cap)
        } else {
            cap
        }
    }

    /// Grows `r0` by bisection while every point of the square keeps
    /// robustness below `level` against `w_star`.
    fn enlarge(&mut self, center: &[f64], r0: f64, level: f64, w_star: &[f64], region: &RegionSet) -> Result<f64> {
        let l = self.p.l_exists;
        let (mut safe, mut hi) = (r0, Self::radius_cap(region));
        for _ in 0..ENLARGE_STEPS {
            if hi - safe <= r0 * 1e-3 {
                break;
            }
            let mid = 0.5 * (safe + hi);
            let lo: Vec<f64> = center.iter().zip(&region.base.lo).map(|(c, b)| (c - mid).max(*b)).collect();
            let up: Vec<f64> = center.iter().zip(&region.base.hi).map(|(c, b)| (c + mid).min(*b)).collect();
            let ball = RegionSet::new(HyperBox::new(lo, up)?);
            let mut sys = self.p.objective(&self.eval, self.p.negate, &self.p.forall, w_star, &self.p.exists);
            self.oracle_calls += 1;
            let hit = search_region(
                &ball,
                l,
                self.delta_e,
                OracleMode::Satisfy,
                level - l * self.delta_e,
                |x| sys.value(x),
                &mut self.stats,
            );
            if hit.is_none() {
                safe = mid;
            } else {
                hi = mid;
            }
        }
        Ok(safe)
    }

    /// Removes squares around candidates refuted by `w_star` until the
    /// oracle certifies every survivor has positive robustness against it.
    fn without_refuted(
        &mut self,
        w_star: &[f64],
        region: &mut RegionSet,
        iteration: usize,
        log: &mut Vec<RemovalRecord>,
    ) -> Result<usize> {
        let l = self.p.l_exists;
        let eps = self.cfg.epsilon;
        let mut removed = 0;
        loop {
            if let Some(m) = self.cfg.max_iters {
                // removals are bounded by the packing argument; the cap guards float trouble
                if removed > m.saturating_mul(1000) {
                    return Err(Error::Budget("refutation loop exceeded its cap".into()));
                }
            }
            let mut neg = self.p.objective(&self.eval, !self.p.negate, &self.p.forall, w_star, &self.p.exists);
            self.oracle_calls += 1;
            let hit = search_region(
                region,
                l,
                self.delta_e,
                OracleMode::Satisfy,
                -l * self.delta_e,
                |x| neg.value(x),
                &mut self.stats,
            );
            let Some(hit) = hit else { break };
            let rho = -hit.rho;
            let mut r = self.radius(eps, rho, region);
            if self.cfg.enlarge && l > 0.0 {
                r = self.enlarge(&hit.point, r, eps, w_star, region)?;
            }
            region.remove(hit.point.clone(), r)?;
            log.push(RemovalRecord {
                iteration,
                center: hit.point,
                radius: r,
                counterexample: w_star.to_vec(),
                rho,
                closing: false,
            });
            removed += 1;
        }
        Ok(removed)
    }

    /// Covers what is left of the region once no candidate clears the
    /// acceptance threshold against `w_star`.
    fn closing_sweep(
        &mut self,
        w_star: &[f64],
        level: f64,
        region: &mut RegionSet,
        iteration: usize,
        log: &mut Vec<RemovalRecord>,
    ) -> Result<()> {
        let l = self.p.l_exists;
        let floor = if l > 0.0 { self.cfg.epsilon * 1e-3 / l } else { 0.0 };
        while let Some(point) = region.find_point(self.delta_e) {
            let mut sys = self.p.objective(&self.eval, self.p.negate, &self.p.forall, w_star, &self.p.exists);
            let rho = sys.value(&point);
            self.stats.evaluations += 1;
            let mut r = self.radius(level, rho, region);
            if r < floor {
                log::warn!("closing sweep met robustness {rho} above level {level}");
                r = floor;
            }
            region.remove(point.clone(), r)?;
            log.push(RemovalRecord {
                iteration,
                center: point,
                radius: r,
                counterexample: w_star.to_vec(),
                rho,
                closing: true,
            });
        }
        Ok(())
    }
}

fn modified_loop(p: &Dominance, cfg: &CegisConfig) -> Result<CegisOutcome> {
    let base = region_of(&p.exists_domain)?;
    let forall_region = region_of(&p.forall_domain)?;
    let mut run = Run {
        p,
        cfg,
        eval: p.plant.evaluator(),
        delta_e: cfg.precision_for(p.l_exists),
        delta_f: cfg.precision_for(p.l_forall),
        stats: SearchStats::default(),
        oracle_calls: 0,
    };
    let eps = cfg.epsilon;
    let accept = eps + p.l_forall * run.delta_f;
    let mut out = outcome(p.l_exists, p.l_forall);
    let mut region = base.clone();
    let mut w_star = initial_sample(&p.forall_domain, cfg.seed);
    out.counterexamples.push(w_star.clone());
    loop {
        if cfg.max_iters.is_some_and(|m| out.iterations >= m) {
            out.verdict = Verdict::BudgetExhausted;
            break;
        }
        let search = if cfg.memoryless { &base } else { &region };
        let mut sys = p.objective(&run.eval, p.negate, &p.forall, &w_star, &p.exists);
        run.oracle_calls += 1;
        let cand = search_region(search, p.l_exists, run.delta_e, cfg.mode, accept, |x| sys.value(x), &mut run.stats);
        let Some(cand) = cand else {
            if !cfg.memoryless {
                let level = accept + p.l_exists * run.delta_e;
                run.closing_sweep(&w_star, level, &mut region, out.iterations, &mut out.removals)?;
            }
            out.verdict = Verdict::NoDominant;
            break;
        };
        out.iterations += 1;
        let mut env = p.objective(&run.eval, !p.negate, &p.exists, &cand.point, &p.forall);
        run.oracle_calls += 1;
        let cex = search_region(
            &forall_region,
            p.l_forall,
            run.delta_f,
            OracleMode::Satisfy,
            -p.l_forall * run.delta_f,
            |x| env.value(x),
            &mut run.stats,
        );
        let mut rec = IterationRecord {
            iteration: out.iterations,
            candidate: cand.point.clone(),
            candidate_rho: cand.rho,
            counterexample: None,
            counterexample_rho: None,
            squares_removed: 0,
            measure: None,
        };
        let Some(cex) = cex else {
            rec.measure = measure(&region, cfg);
            out.log.push(rec);
            out.verdict = Verdict::Dominant {
                strategy: cand.point,
                rho: cand.rho,
            };
            break;
        };
        w_star = cex.point;
        out.counterexamples.push(w_star.clone());
        rec.counterexample = Some(w_star.clone());
        rec.counterexample_rho = Some(-cex.rho);
        if !cfg.memoryless {
            rec.squares_removed = run.without_refuted(&w_star, &mut region, out.iterations, &mut out.removals)?;
        }
        rec.measure = measure(&region, cfg);
        out.log.push(rec);
    }
    out.oracle_calls = run.oracle_calls;
    out.evaluations = run.stats.evaluations;
    out.region = Some(region);
    Ok(out)
}

fn measure(region: &RegionSet, cfg: &CegisConfig) -> Option<(f64, f64)> {
    (cfg.measure_depth > 0).then(|| region.remaining_measure_bounds(cfg.measure_depth))
}

/// Refuted-region removal for a fixed disturbance sequence on a whole-sequence
/// game of the system player.
pub fn without_refuted(
    plant: &Plant,
    formula: &Formula,
    w_star: &[f64],
    region: &RegionSet,
    cfg: &CegisConfig,
) -> Result<(RegionSet, Vec<RemovalRecord>)> {
    cfg.validate()?;
    check_formula(plant, formula)?;
    if w_star.len() != plant.dim(Player::Environment) || region.dim() != plant.dim(Player::System) {
        return Err(Error::Dimension("counterexample or region does not match the plant".into()));
    }
    let p = Dominance::players(plant, formula, Player::System, cfg);
    let mut run = Run {
        p: &p,
        cfg,
        eval: plant.evaluator(),
        delta_e: cfg.precision_for(p.l_exists),
        delta_f: cfg.precision_for(p.l_forall),
        stats: SearchStats::default(),
        oracle_calls: 0,
    };
    let _ = run.delta_f;
    let mut out = region.clone();
    let mut log = Vec::new();
    run.without_refuted(w_star, &mut out, 0, &mut log)?;
    Ok((out, log))
}

/// Smallest game robustness of `strategy` over a grid of the universal
/// coordinates (pitch at most `pitch`, endpoints included; finite
/// coordinates take every move).
pub fn worst_case_on_grid(problem: &Dominance, strategy: &[f64], pitch: f64) -> f64 {
    let eval = problem.plant.evaluator();
    let mut obj = problem.objective(&eval, problem.negate, &problem.exists, strategy, &problem.forall);
    let axes: Vec<Vec<f64>> = problem.forall_domain.iter().map(|d| grid_axis(d, pitch)).collect();
    crate::oracle::product(&axes).map(|w| obj.value(&w)).fold(f64::INFINITY, f64::min)
}

/// Evenly spaced points of a domain, spacing at most `pitch`.
pub fn grid_axis(d: &Domain, pitch: f64) -> Vec<f64> {
    match d {
        Domain::Finite(v) => v.clone(),
        Domain::Interval { lo, hi } => {
            let n = ((hi - lo) / pitch).ceil().max(0.0) as usize;
            if n == 0 {
                vec![*lo]
            } else {
                (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{FiniteGame, LinearSystem};
    use crate::stl::{parse, PropositionEncoding};
    use nalgebra::{dmatrix, dvector, DMatrix};

    fn rps_rules(h: usize) -> Formula {
        let i = PropositionEncoding::rps(0);
        let j = PropositionEncoding::rps(1);
        let rule = |mine, theirs| i.prop(mine).unwrap().implies(j.prop(theirs).unwrap().not());
        let rules = Formula::all([rule("R", "P"), rule("P", "S"), rule("S", "R")]).unwrap();
        Formula::globally(1, h, rules).unwrap()
    }

    #[test]
    fn rps_has_no_dominant_move() {
        let plant = Plant::Finite(FiniteGame::rps(1));
        let out = naive_cegis(&plant, &rps_rules(1), &CegisConfig::new(0.1)).unwrap();
        assert_eq!(out.verdict, Verdict::NoDominant);
        assert_eq!(out.iterations, 3);
    }

    #[test]
    fn true_is_dominant_at_once() {
        let plant = Plant::Finite(FiniteGame::rps(2));
        let out = naive_cegis(&plant, &Formula::always_true(), &CegisConfig::new(0.1)).unwrap();
        assert!(matches!(out.verdict, Verdict::Dominant { .. }));
        assert_eq!(out.iterations, 1);
        let env = dominant_env(&plant, &Formula::always_false(), &CegisConfig::new(0.1)).unwrap();
        assert!(matches!(env.verdict, Verdict::Dominant { .. }));
    }

    fn toy() -> Plant {
        Plant::Linear(
            LinearSystem::new(
                dmatrix![0.0],
                dmatrix![1.0],
                DMatrix::zeros(1, 1),
                dvector![0.0],
                1,
                vec![(0.0, 1.0)],
                vec![(0.0, 1.0)],
            )
            .unwrap(),
        )
    }

    #[test]
    fn sandwich_on_toy() {
        let plant = toy();
        let phi = parse("X x0 > 0.5").unwrap();
        let cfg = CegisConfig::new(0.05);
        let region = RegionSet::new(HyperBox::new(vec![0.0], vec![1.0]).unwrap());
        let (left, log) = without_refuted(&plant, &phi, &[0.0], &region, &cfg).unwrap();
        assert!(!log.is_empty());
        for k in 0..=10_000 {
            let u = k as f64 / 10_000.0;
            let rho = u - 0.5;
            if left.contains(&[u]) {
                assert!(rho > 0.0, "survivor {u}");
            } else {
                assert!(rho < cfg.epsilon, "removed {u}");
            }
        }
    }

    #[test]
    fn continuous_toy_dominant() {
        let plant = toy();
        let phi = parse("X x0 > 0.5").unwrap();
        let out = modified_cegis(&plant, &phi, &CegisConfig::new(0.05)).unwrap();
        let Verdict::Dominant { strategy, .. } = &out.verdict else { panic!("{:?}", out.verdict) };
        assert!(strategy[0] > 0.5);
        let out = modified_cegis(&plant, &Formula::always_true(), &CegisConfig::new(0.05)).unwrap();
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn budget_is_distinct() {
        let plant = Plant::Finite(FiniteGame::rps(1));
        let mut cfg = CegisConfig::new(0.1);
        cfg.max_iters = Some(2);
        let out = naive_cegis(&plant, &rps_rules(1), &cfg).unwrap();
        assert_eq!(out.verdict, Verdict::BudgetExhausted);
    }

    #[test]
    fn epsilon_must_be_positive() {
        let plant = toy();
        assert!(modified_cegis(&plant, &Formula::always_true(), &CegisConfig::new(0.0)).is_err());
    }
}

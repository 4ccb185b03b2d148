//! Satisfaction and optimisation oracles over input sequences.

pub mod bnb;
mod smt;

use serde::{Deserialize, Serialize};

pub use bnb::SearchStats;
pub use smt::export_smtlib;

use crate::dynamics::{check_formula, Domain, Evaluator, Plant, Player};
use crate::error::{Error, Result};
use crate::regions::{HyperBox, RegionSet};
use crate::stl::Formula;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    #[default]
    Satisfy,
    Maximize,
}

/// Robustness of `formula` (or of its negation) as a function of a subset
/// of the input coordinates, the rest held at template values.
pub struct Objective<'a> {
    eval: &'a Evaluator,
    formula: &'a Formula,
    negate: bool,
    u: Vec<f64>,
    w: Vec<f64>,
    slots: Vec<(Player, usize)>,
    buf: Vec<Vec<f64>>,
    pub evaluations: usize,
}

impl<'a> Objective<'a> {
    pub fn new(
        eval: &'a Evaluator,
        formula: &'a Formula,
        negate: bool,
        u: Vec<f64>,
        w: Vec<f64>,
        slots: Vec<(Player, usize)>,
    ) -> Self {
        Self {
            eval,
            formula,
            negate,
            u,
            w,
            slots,
            buf: Vec::new(),
            evaluations: 0,
        }
    }

    /// Objective over all coordinates of `free`, the other player fixed.
    pub fn player(
        eval: &'a Evaluator,
        formula: &'a Formula,
        negate: bool,
        free: Player,
        fixed: &[f64],
        free_dim: usize,
    ) -> Self {
        let zeros = vec![0.0; free_dim];
        let (u, w) = match free {
            Player::System => (zeros, fixed.to_vec()),
            Player::Environment => (fixed.to_vec(), zeros),
        };
        let slots = (0..free_dim).map(|i| (free, i)).collect();
        Self::new(eval, formula, negate, u, w, slots)
    }

    pub fn slots(&self) -> &[(Player, usize)] {
        &self.slots
    }

    pub fn set(&mut self, x: &[f64]) {
        for (v, (p, i)) in x.iter().zip(&self.slots) {
            match p {
                Player::System => self.u[*i] = *v,
                Player::Environment => self.w[*i] = *v,
            }
        }
    }

    /// Full (u, w) pair currently held.
    pub fn inputs(&self) -> (&[f64], &[f64]) {
        (&self.u, &self.w)
    }

    pub fn value(&mut self, x: &[f64]) -> f64 {
        self.set(x);
        self.evaluations += 1;
        let r = self.eval.rho(self.formula, &self.u, &self.w, &mut self.buf);
        if self.negate {
            -r
        } else {
            r
        }
    }
}

/// Where the free coordinates may range.
#[derive(Clone, Debug, PartialEq)]
pub enum SearchDomain {
    /// Continuous box minus removed squares.
    Region(RegionSet),
    /// Finite product of move sets minus explicitly excluded points.
    Moves {
        sets: Vec<Vec<f64>>,
        excluded: Vec<Vec<f64>>,
    },
}

impl SearchDomain {
    /// Full domain of a player, as a region or a product of move sets.
    pub fn of(plant: &Plant, player: Player) -> Result<Self> {
        domain_of(&plant.domains(player))
    }
}

/// Search domain for coordinates with the given per-coordinate domains.
pub fn domain_of(domains: &[Domain]) -> Result<SearchDomain> {
    if domains.iter().all(Domain::is_finite) {
        let sets = domains
            .iter()
            .map(|d| match d {
                Domain::Finite(v) => v.clone(),
                Domain::Interval { .. } => unreachable!(),
            })
            .collect();
        return Ok(SearchDomain::Moves {
            sets,
            excluded: Vec::new(),
        });
    }
    if domains.iter().any(Domain::is_finite) {
        return Err(Error::Invalid("mixed finite and continuous coordinates".into()));
    }
    let (lo, hi) = domains.iter().map(Domain::hull).unzip();
    Ok(SearchDomain::Region(RegionSet::new(HyperBox::new(lo, hi)?)))
}

/// One FindSat call.
#[derive(Clone, Debug)]
pub struct Query<'a> {
    pub plant: &'a Plant,
    pub formula: &'a Formula,
    pub free: Player,
    /// The opponent's flattened sequence.
    pub fixed: Vec<f64>,
    pub domain: SearchDomain,
    pub mode: OracleMode,
    /// Edge length below which boxes are not split.
    pub precision: f64,
    /// Lipschitz constant of robustness in the free player's input.
    pub lipschitz: Option<f64>,
    /// Search for the negated formula.
    pub negate: bool,
    /// Accept only points whose (possibly negated) robustness exceeds this.
    pub threshold: f64,
}

impl<'a> Query<'a> {
    pub fn new(plant: &'a Plant, formula: &'a Formula, free: Player, fixed: Vec<f64>) -> Result<Self> {
        Ok(Self {
            plant,
            formula,
            free,
            fixed,
            domain: SearchDomain::of(plant, free)?,
            mode: OracleMode::Satisfy,
            precision: 1e-3,
            lipschitz: None,
            negate: false,
            threshold: 0.0,
        })
    }

    fn check(&self) -> Result<()> {
        check_formula(self.plant, self.formula)?;
        let other = self.free.other();
        if self.fixed.len() != self.plant.dim(other) {
            return Err(Error::Dimension(format!(
                "fixed {} sequence has {} values, expected {}",
                other.name(),
                self.fixed.len(),
                self.plant.dim(other)
            )));
        }
        if !(self.precision > 0.0) {
            return Err(Error::Invalid("precision must be positive".into()));
        }
        let dim = self.plant.dim(self.free);
        let domain_dim = match &self.domain {
            SearchDomain::Region(r) => r.dim(),
            SearchDomain::Moves { sets, .. } => sets.len(),
        };
        if domain_dim != dim {
            return Err(Error::Dimension(format!(
                "search domain has {domain_dim} coordinates, {} input has {dim}",
                self.free.name()
            )));
        }
        Ok(())
    }
}

/// A point accepted by an oracle, with the robustness of the searched
/// formula (negated formula when the query is negated).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Found {
    pub point: Vec<f64>,
    pub rho: f64,
}

/// FindSat: a domain point whose robustness exceeds the query threshold.
pub fn find_sat(q: &Query) -> Result<Option<Found>> {
    find_sat_counted(q, &mut SearchStats::default())
}

pub fn find_sat_counted(q: &Query, stats: &mut SearchStats) -> Result<Option<Found>> {
    q.check()?;
    let eval = q.plant.evaluator();
    let mut obj = Objective::player(&eval, q.formula, q.negate, q.free, &q.fixed, q.plant.dim(q.free));
    match &q.domain {
        SearchDomain::Moves { sets, excluded } => {
            Ok(search_moves(sets, excluded, q.mode, q.threshold, |x| obj.value(x), stats))
        }
        SearchDomain::Region(region) => {
            let l = q.lipschitz.ok_or(Error::MissingLipschitz(q.free.name()))?;
            Ok(search_region(region, l, q.precision, q.mode, q.threshold, |x| obj.value(x), stats))
        }
    }
}

/// Exhaustive FindSat over a finite game, first satisfying sequence in
/// lexicographic move order.
pub fn find_sat_finite(q: &Query) -> Result<Option<Found>> {
    if !matches!(q.domain, SearchDomain::Moves { .. }) {
        return Err(Error::Invalid("finite search needs a move-set domain".into()));
    }
    find_sat(q)
}

/// Continuous search of `g` with acceptance `g > threshold`.
pub(crate) fn search_region(
    region: &RegionSet,
    lipschitz: f64,
    precision: f64,
    mode: OracleMode,
    threshold: f64,
    mut g: impl FnMut(&[f64]) -> f64,
    stats: &mut SearchStats,
) -> Option<Found> {
    let shifted = |x: &[f64]| g(x) - threshold;
    let hit = match mode {
        OracleMode::Satisfy => bnb::satisfy(region, lipschitz, precision, shifted, stats),
        OracleMode::Maximize => {
            bnb::maximize(region, lipschitz, precision, shifted, stats).filter(|(_, v)| *v > 0.0)
        }
    };
    hit.map(|(point, v)| Found {
        point,
        rho: v + threshold,
    })
}

/// Enumerates the product of `sets` (first coordinate slowest).
pub(crate) fn search_moves(
    sets: &[Vec<f64>],
    excluded: &[Vec<f64>],
    mode: OracleMode,
    threshold: f64,
    mut g: impl FnMut(&[f64]) -> f64,
    stats: &mut SearchStats,
) -> Option<Found> {
    let mut best: Option<Found> = None;
    for point in product(sets) {
        if excluded.contains(&point) {
            continue;
        }
        stats.evaluations += 1;
        let v = g(&point);
        if v > threshold {
            match mode {
                OracleMode::Satisfy => return Some(Found { point, rho: v }),
                OracleMode::Maximize => {
                    if best.as_ref().is_none_or(|b| v > b.rho) {
                        best = Some(Found { point, rho: v });
                    }
                }
            }
        }
    }
    best
}

/// Cartesian product in lexicographic order.
pub fn product(sets: &[Vec<f64>]) -> impl Iterator<Item = Vec<f64>> + '_ {
    let total: usize = if sets.iter().any(Vec::is_empty) {
        0
    } else {
        sets.iter().map(Vec::len).product()
    };
    (0..total).map(move |mut n| {
        let mut p = vec![0.0; sets.len()];
        for (i, s) in sets.iter().enumerate().rev() {
            p[i] = s[n % s.len()];
            n /= s.len();
        }
        p
    })
}

/// Best value of `g` over the domain, within `lipschitz * precision` of the
/// supremum for regions and exact for move sets.
pub fn maximize(
    domain: &SearchDomain,
    lipschitz: f64,
    precision: f64,
    mut g: impl FnMut(&[f64]) -> f64,
) -> Option<Found> {
    let mut stats = SearchStats::default();
    match domain {
        SearchDomain::Region(r) => {
            bnb::maximize(r, lipschitz, precision, g, &mut stats).map(|(point, rho)| Found { point, rho })
        }
        SearchDomain::Moves { sets, excluded } => {
            search_moves(sets, excluded, OracleMode::Maximize, f64::NEG_INFINITY, &mut g, &mut stats)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{FiniteGame, LinearSystem};
    use crate::stl::{parse, PropositionEncoding};
    use nalgebra::{dmatrix, dvector, DMatrix};

    #[test]
    fn always_true_first_probe() {
        let plant = Plant::Finite(FiniteGame::rps(1));
        let phi = Formula::always_true();
        let q = Query::new(&plant, &phi, Player::System, vec![0.5]).unwrap();
        assert_eq!(find_sat(&q).unwrap().unwrap().rho, 1.0);
    }

    /// One round of rock/paper/scissors where a draw does not lose.
    fn one_round_rps() -> Formula {
        let i = PropositionEncoding::rps(0);
        let j = PropositionEncoding::rps(1);
        let rule = |mine, theirs| i.prop(mine).unwrap().implies(j.prop(theirs).unwrap().not());
        let rules = Formula::all([rule("R", "P"), rule("P", "S"), rule("S", "R")]).unwrap();
        Formula::globally(1, 1, rules).unwrap()
    }

    #[test]
    fn finite_rps_answers() {
        let plant = Plant::Finite(FiniteGame::rps(1));
        let phi = one_round_rps();
        let first = |j: f64| {
            let q = Query::new(&plant, &phi, Player::System, vec![j]).unwrap();
            find_sat_finite(&q).unwrap().unwrap().point[0]
        };
        // against P, paper (1.5) is the first move in order that does not lose; scissors wins
        assert_eq!(first(1.5), 1.5);
        let mut q = Query::new(&plant, &phi, Player::System, vec![1.5]).unwrap();
        q.domain = SearchDomain::Moves {
            sets: vec![vec![0.5, 1.5, 2.5]],
            excluded: vec![vec![1.5]],
        };
        assert_eq!(find_sat_finite(&q).unwrap().unwrap().point, vec![2.5]);
        assert_eq!(first(0.5), 0.5);
        let f = Formula::always_false();
        let q = Query::new(&plant, &f, Player::System, vec![0.5]).unwrap();
        assert_eq!(find_sat_finite(&q).unwrap(), None);
    }

    #[test]
    fn missing_lipschitz() {
        let sys = LinearSystem::new(
            dmatrix![1.0],
            dmatrix![1.0],
            DMatrix::zeros(1, 1),
            dvector![0.0],
            1,
            vec![(0.0, 1.0)],
            vec![(0.0, 1.0)],
        )
        .unwrap();
        let plant = Plant::Linear(sys);
        let phi = parse("X x0 > 0.5").unwrap();
        let mut q = Query::new(&plant, &phi, Player::System, vec![0.0]).unwrap();
        assert!(matches!(find_sat(&q), Err(Error::MissingLipschitz("system"))));
        q.lipschitz = Some(1.0);
        let hit = find_sat(&q).unwrap().unwrap();
        assert!(hit.point[0] > 0.5);
        q.fixed = vec![0.0, 0.0];
        assert!(matches!(find_sat(&q), Err(Error::Dimension(_))));
    }

    #[test]
    fn lexicographic_product() {
        let sets = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        let all: Vec<_> = product(&sets).collect();
        assert_eq!(all, vec![vec![1.0, 3.0], vec![1.0, 4.0], vec![2.0, 3.0], vec![2.0, 4.0]]);
    }
}

//! Walk of the game transition system and the decision tree it yields.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::eval::{Context, GameSolver, GameStats, Slot, Strategy};
use super::game::{GameNode, WalkStep};
use crate::cegis::{grid_axis, CegisConfig};
use crate::dynamics::{Domain, Plant, Player};
use crate::error::{Error, Result};
use crate::oracle::product;
use crate::stl::Formula;

/// Controls of one round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Control {
    pub round: usize,
    pub values: Vec<f64>,
}

/// Box of one round's disturbance and the subtree played inside it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub child: DecisionTree,
}

impl Segment {
    fn contains(&self, w: &[f64]) -> bool {
        w.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| a <= x && x <= b)
    }

    fn is_point(&self) -> bool {
        self.lo == self.hi
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecisionTree {
    /// Controls committed without further observation.
    Dominant { controls: Vec<Control>, child: Box<DecisionTree> },
    /// Observe the disturbance of `round` and follow its segment.
    Branch { round: usize, segments: Vec<Segment> },
    Leaf,
}

impl DecisionTree {
    /// Control sequence played against `w`, or `None` when some observed
    /// disturbance falls outside every segment.
    pub fn respond(&self, plant: &Plant, w: &[f64]) -> Option<Vec<f64>> {
        let nu = plant.width(Player::System);
        let nw = plant.width(Player::Environment);
        let mut u = plant.default_input(Player::System);
        let mut node = self;
        loop {
            match node {
                DecisionTree::Leaf => return Some(u),
                DecisionTree::Dominant { controls, child } => {
                    for c in controls {
                        u[(c.round - 1) * nu..c.round * nu].copy_from_slice(&c.values);
                    }
                    node = child;
                }
                DecisionTree::Branch { round, segments } => {
                    let seen = &w[(round - 1) * nw..round * nw];
                    node = &segments.iter().find(|s| s.contains(seen))?.child;
                }
            }
        }
    }

    /// Rounds whose controls appear on some path, in visiting order.
    pub fn leaves(&self) -> usize {
        match self {
            DecisionTree::Leaf => 1,
            DecisionTree::Dominant { child, .. } => child.leaves(),
            DecisionTree::Branch { segments, .. } => segments.iter().map(|s| s.child.leaves()).sum(),
        }
    }

    /// Joins adjacent interval segments with equal subtrees and chains of
    /// committed controls.
    pub fn merged(self) -> DecisionTree {
        match self {
            DecisionTree::Leaf => DecisionTree::Leaf,
            DecisionTree::Dominant { mut controls, child } => match child.merged() {
                DecisionTree::Dominant { controls: more, child } => {
                    controls.extend(more);
                    DecisionTree::Dominant { controls, child }
                }
                other => DecisionTree::Dominant {
                    controls,
                    child: Box::new(other),
                },
            },
            DecisionTree::Branch { round, segments } => {
                let mut out: Vec<Segment> = Vec::new();
                for s in segments {
                    let s = Segment {
                        child: s.child.merged(),
                        ..s
                    };
                    if let Some(last) = out.last_mut() {
                        if let Some(axis) = adjacent(last, &s) {
                            if last.child == s.child {
                                last.hi[axis] = s.hi[axis];
                                continue;
                            }
                        }
                    }
                    out.push(s);
                }
                DecisionTree::Branch { round, segments: out }
            }
        }
    }

    pub fn to_dot(&self, plant: &Plant) -> String {
        let mut s = String::from("digraph decision_tree {\n  node [shape=box];\n");
        let mut next = 0;
        self.dot_node(plant, &mut s, &mut next);
        s.push_str("}\n");
        s
    }

    fn dot_node(&self, plant: &Plant, s: &mut String, next: &mut usize) -> usize {
        let id = *next;
        *next += 1;
        match self {
            DecisionTree::Leaf => {
                writeln!(s, "  n{id} [label=\"SUCCESS\", shape=ellipse];").unwrap();
            }
            DecisionTree::Dominant { controls, child } => {
                let parts: Vec<String> = controls
                    .iter()
                    .map(|c| format!("u{} = {}", c.round, show(plant, Player::System, &c.values)))
                    .collect();
                writeln!(s, "  n{id} [label=\"{}\"];", parts.join("\\n")).unwrap();
                let c = child.dot_node(plant, s, next);
                writeln!(s, "  n{id} -> n{c};").unwrap();
            }
            DecisionTree::Branch { round, segments } => {
                writeln!(s, "  n{id} [label=\"w{round}?\", shape=diamond];").unwrap();
                for seg in segments {
                    let c = seg.child.dot_node(plant, s, next);
                    let label = if seg.is_point() {
                        show(plant, Player::Environment, &seg.lo)
                    } else {
                        let parts: Vec<String> =
                            seg.lo.iter().zip(&seg.hi).map(|(a, b)| format!("[{a}, {b}]")).collect();
                        parts.join(" x ")
                    };
                    writeln!(s, "  n{id} -> n{c} [label=\"{label}\"];").unwrap();
                }
            }
        }
        id
    }
}

/// Axis along which `b` continues `a`, the other axes matching.
fn adjacent(a: &Segment, b: &Segment) -> Option<usize> {
    if a.is_point() || b.is_point() {
        return None;
    }
    let differing: Vec<usize> = (0..a.lo.len()).filter(|&i| a.lo[i] != b.lo[i] || a.hi[i] != b.hi[i]).collect();
    match differing[..] {
        [i] if a.hi[i] == b.lo[i] => Some(i),
        _ => None,
    }
}

fn show(plant: &Plant, player: Player, values: &[f64]) -> String {
    if let Plant::Finite(g) = plant {
        if let [v] = values {
            if let Some(name) = g.move_name(player, *v) {
                return name.to_string();
            }
        }
    }
    let parts: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
    if parts.len() == 1 {
        parts[0].clone()
    } else {
        format!("({})", parts.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeOutcome {
    /// `None` when some walk ended in the bottom node.
    pub tree: Option<DecisionTree>,
    /// Every walk from the initial node to a terminal node.
    pub walks: Vec<Vec<WalkStep>>,
    pub stats: GameStats,
}

/// Walks the transition system from the initial node, committing each
/// decided control and branching on the disturbances it was allowed to see.
pub fn build_decision_tree(plant: &Plant, formula: &Formula, cfg: &CegisConfig) -> Result<TreeOutcome> {
    let mut b = Builder {
        solver: GameSolver::new(plant, formula, cfg)?,
        plant,
        walks: Vec::new(),
    };
    let tree = b.walk(GameNode::initial(plant.horizon()), Context::of(plant), Vec::new())?;
    Ok(TreeOutcome {
        tree: tree.map(DecisionTree::merged),
        walks: b.walks,
        stats: b.solver.stats,
    })
}

struct Builder<'a> {
    solver: GameSolver<'a>,
    plant: &'a Plant,
    walks: Vec<Vec<WalkStep>>,
}

impl Builder<'_> {
    fn walk(&mut self, node: GameNode, ctx: Context, mut steps: Vec<WalkStep>) -> Result<Option<DecisionTree>> {
        let GameNode::Game { decision, game } = &node else {
            return Err(Error::NoEdge(format!("walk started at terminal node {node}")));
        };
        let strategy = self.solver.solve(game, &ctx)?;
        let next = node.next(strategy.is_some())?;
        log::debug!("{node} -> {next}");
        steps.push(WalkStep {
            from: node.clone(),
            label: strategy.is_some(),
            to: next.clone(),
        });
        match (next, strategy) {
            (GameNode::Causal, Some(s)) => {
                self.walks.push(steps);
                Ok(Some(self.graft(&s)))
            }
            (GameNode::Bottom, _) => {
                self.walks.push(steps);
                Ok(None)
            }
            (next @ GameNode::Game { .. }, Some(s)) => self.commit(&s, *decision, &next, ctx, &steps),
            (next @ GameNode::Game { .. }, None) => self.walk(next, ctx, steps),
            (GameNode::Causal, None) => Err(Error::NoEdge("false game reached the causal node".into())),
        }
    }

    /// Fixes the control of round `k` from the witness, branching on the
    /// disturbance cells that precede it, and continues the walk per branch.
    fn commit(
        &mut self,
        s: &Strategy,
        k: usize,
        next: &GameNode,
        ctx: Context,
        steps: &[WalkStep],
    ) -> Result<Option<DecisionTree>> {
        let nu = self.plant.width(Player::System);
        match s {
            Strategy::Split { slots, cells } => {
                let mut out = Vec::new();
                for (cell, sub) in cells {
                    let mut c = ctx.clone();
                    for (&i, d) in slots.iter().zip(cell) {
                        c.set(Player::Environment, i, Slot::Free(d.clone()));
                    }
                    match self.commit(sub, k, next, c, steps)? {
                        Some(t) => out.push((cell.clone(), t)),
                        None => return Ok(None),
                    }
                }
                Ok(Some(self.branches(slots, out)))
            }
            Strategy::Commit { slots, values, .. } => {
                let round: Vec<usize> = ((k - 1) * nu..k * nu).collect();
                let mut c = ctx;
                let mut chosen = Vec::new();
                for &i in &round {
                    let v = slots
                        .iter()
                        .position(|x| *x == i)
                        .map(|p| values[p])
                        .ok_or_else(|| Error::NoEdge(format!("witness does not decide u{k}")))?;
                    c.set(Player::System, i, Slot::Fixed(v));
                    chosen.push(v);
                }
                let child = self.walk(next.clone(), c, steps.to_vec())?;
                Ok(child.map(|t| DecisionTree::Dominant {
                    controls: vec![Control {
                        round: k,
                        values: chosen,
                    }],
                    child: Box::new(t),
                }))
            }
            Strategy::Done => Err(Error::NoEdge(format!("witness does not decide u{k}"))),
        }
    }

    /// Whole remaining witness as a tree.
    fn graft(&self, s: &Strategy) -> DecisionTree {
        let nu = self.plant.width(Player::System);
        match s {
            Strategy::Done => DecisionTree::Leaf,
            Strategy::Commit { slots, values, then } => {
                let mut controls: Vec<Control> = Vec::new();
                for (&i, v) in slots.iter().zip(values) {
                    let round = i / nu + 1;
                    match controls.last_mut() {
                        Some(c) if c.round == round => c.values.push(*v),
                        _ => controls.push(Control {
                            round,
                            values: vec![*v],
                        }),
                    }
                }
                DecisionTree::Dominant {
                    controls,
                    child: Box::new(self.graft(then)),
                }
            }
            Strategy::Split { slots, cells } => {
                let out = cells.iter().map(|(cell, sub)| (cell.clone(), self.graft(sub))).collect();
                self.branches(slots, out)
            }
        }
    }

    /// Nested branches, one level per observed round, from product cells.
    fn branches(&self, slots: &[usize], cells: Vec<(Vec<Domain>, DecisionTree)>) -> DecisionTree {
        let nw = self.plant.width(Player::Environment);
        let Some(&first) = slots.first() else {
            return cells.into_iter().next().map(|(_, t)| t).unwrap_or(DecisionTree::Leaf);
        };
        let round = first / nw + 1;
        let width = slots.iter().take_while(|i| *i / nw + 1 == round).count();
        let mut segments: Vec<Segment> = Vec::new();
        let mut groups: Vec<(Vec<Domain>, Vec<(Vec<Domain>, DecisionTree)>)> = Vec::new();
        for (cell, t) in cells {
            let head = cell[..width].to_vec();
            let tail = (cell[width..].to_vec(), t);
            match groups.last_mut() {
                Some((h, g)) if *h == head => g.push(tail),
                _ => groups.push((head, vec![tail])),
            }
        }
        for (head, group) in groups {
            let (lo, hi) = head.iter().map(Domain::hull).unzip();
            segments.push(Segment {
                lo,
                hi,
                child: self.branches(&slots[width..], group),
            });
        }
        DecisionTree::Branch { round, segments }
    }
}

/// Smallest robustness of the tree's play over a disturbance grid of pitch
/// at most `pitch`, every segment boundary included.
pub fn verify_tree(tree: &DecisionTree, plant: &Plant, formula: &Formula, pitch: f64) -> f64 {
    let eval = plant.evaluator();
    let mut axes: Vec<Vec<f64>> = plant
        .domains(Player::Environment)
        .iter()
        .map(|d| grid_axis(d, pitch))
        .collect();
    collect_bounds(tree, plant.width(Player::Environment), &mut axes);
    for a in &mut axes {
        a.sort_by(f64::total_cmp);
        a.dedup();
    }
    let mut buf = Vec::new();
    product(&axes)
        .map(|w| match tree.respond(plant, &w) {
            Some(u) => eval.rho(formula, &u, &w, &mut buf),
            None => f64::NEG_INFINITY,
        })
        .fold(f64::INFINITY, f64::min)
}

fn collect_bounds(tree: &DecisionTree, nw: usize, axes: &mut [Vec<f64>]) {
    match tree {
        DecisionTree::Leaf => {}
        DecisionTree::Dominant { child, .. } => collect_bounds(child, nw, axes),
        DecisionTree::Branch { round, segments } => {
            for s in segments {
                for (d, (a, b)) in s.lo.iter().zip(&s.hi).enumerate() {
                    let ax = &mut axes[(round - 1) * nw + d];
                    if !ax.contains(a) {
                        ax.push(*a);
                    }
                    if !ax.contains(b) {
                        ax.push(*b);
                    }
                }
                collect_bounds(&s.child, nw, axes);
            }
        }
    }
}

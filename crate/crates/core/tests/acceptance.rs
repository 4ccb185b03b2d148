//! Acceptance run: one line per criterion, non-zero exit on any failure.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use rand::RngExt;
use reactive_synth::cegis::{
    dominant_env, modified_cegis, naive_cegis, without_refuted, worst_case_on_grid, CegisConfig, CegisOutcome,
    Dominance, Verdict,
};
use reactive_synth::dynamics::{lipschitz_bounds, Domain, FiniteGame, NormBound, Plant, Player};
use reactive_synth::hierarchy::{build_decision_tree, verify_tree, DecisionTree, GameNode, Token, WalkStep};
use reactive_synth::oracle::{find_sat, maximize, Query};
use reactive_synth::regions::{HyperBox, RegionSet};
use reactive_synth::stl::{Formula, Trace};

use common::{bundled, grid, linspace, random_formula, random_linear, reference, rng};

type Check = Result<String, String>;

/// Counterexample logs gathered from every run of the continuous loop.
#[derive(Default)]
struct Logs {
    runs: Vec<(String, f64, CegisOutcome)>,
}

impl Logs {
    fn keep(&mut self, name: impl Into<String>, epsilon: f64, out: &CegisOutcome) {
        self.runs.push((name.into(), epsilon, out.clone()));
    }
}

fn linear_of(plant: &Plant) -> &reactive_synth::dynamics::LinearSystem {
    match plant {
        Plant::Linear(s) => s,
        Plant::Finite(_) => panic!("expected a linear plant"),
    }
}

fn verdict_name(v: &Verdict) -> &'static str {
    match v {
        Verdict::Dominant { .. } => "dominant",
        Verdict::NoDominant => "no dominant",
        Verdict::BudgetExhausted => "budget exhausted",
    }
}

fn criterion_1() -> Check {
    let p = bundled("discrete_rps.json");
    let mut cfg = p.spec.cegis_config();
    cfg.seed = Some(0);
    let out = naive_cegis(&p.plant, &p.formula, &cfg).map_err(|e| e.to_string())?;
    if out.verdict != Verdict::NoDominant {
        return Err(format!("verdict {}", verdict_name(&out.verdict)));
    }
    if out.iterations != 3 {
        return Err(format!("{} iterations, expected 3", out.iterations));
    }
    Ok("no dominant strategy after 3 iterations".into())
}

fn criterion_2() -> Check {
    let p = bundled("rps_assumptions.json");
    let cfg = p.spec.cegis_config();
    let sys = naive_cegis(&p.plant, &p.formula, &cfg).map_err(|e| e.to_string())?;
    let env = dominant_env(&p.plant, &p.formula, &cfg).map_err(|e| e.to_string())?;
    if sys.verdict != Verdict::NoDominant || env.verdict != Verdict::NoDominant {
        return Err(format!(
            "system {}, environment {}",
            verdict_name(&sys.verdict),
            verdict_name(&env.verdict)
        ));
    }
    let tree = build_decision_tree(&p.plant, &p.formula, &cfg)
        .map_err(|e| e.to_string())?
        .tree
        .ok_or("no tree")?;
    let DecisionTree::Dominant { controls, child } = &tree else {
        return Err("root does not commit a move".into());
    };
    if controls.len() != 1 || controls[0].round != 1 || controls[0].values != [0.5] {
        return Err(format!("root controls {controls:?}, expected round 1 = R"));
    }
    let DecisionTree::Branch { round: 1, .. } = child.as_ref() else {
        return Err("root is not followed by a branch on the first disturbance".into());
    };
    // R and S are the opponent's only first moves allowed by the assumption.
    for j1 in [0.5, 2.5] {
        for j2 in [0.5, 1.5, 2.5] {
            let u = tree.respond(&p.plant, &[j1, j2]).ok_or("disturbance outside every segment")?;
            if u != [0.5, j1] {
                return Err(format!("against ({j1}, {j2}) the tree plays {u:?}"));
            }
        }
    }
    let worst = verify_tree(&tree, &p.plant, &p.formula, 1.0);
    if worst <= 0.0 {
        return Err(format!("tree loses somewhere (rho {worst})"));
    }
    Ok(format!("i1 = R, i2 = j1 on R and S, worst rho {worst}"))
}

fn criterion_3(logs: &mut Logs) -> Check {
    let p = bundled("continuous_rps.json");
    let l = lipschitz_bounds(linear_of(&p.plant), &p.formula, NormBound::Infinity);
    if (l.system - 1.0).abs() > 1e-9 || (l.environment - 1.0).abs() > 1e-9 {
        return Err(format!("Lipschitz bounds {l:?}"));
    }
    let mut notes = Vec::new();
    for eps in [0.05, 0.125] {
        let mut cfg = p.spec.cegis_config();
        cfg.epsilon = eps;
        let out = modified_cegis(&p.plant, &p.formula, &cfg).map_err(|e| e.to_string())?;
        logs.keep(format!("continuous rps, eps {eps}"), eps, &out);
        if out.verdict != Verdict::NoDominant {
            return Err(format!("eps {eps}: {}", verdict_name(&out.verdict)));
        }
        let (_, upper) = out.region.as_ref().ok_or("no region")?.remaining_measure_bounds(24);
        if upper >= 1e-6 {
            return Err(format!("eps {eps}: remaining measure up to {upper}"));
        }
        notes.push(format!("eps {eps}: {} iterations", out.iterations));
    }
    Ok(format!("L_u = L_w = 1; {}", notes.join(", ")))
}

fn criterion_4(logs: &mut Logs) -> Check {
    let p = bundled("modified_rps.json");
    let cfg = p.spec.cegis_config();
    let sys = modified_cegis(&p.plant, &p.formula, &cfg).map_err(|e| e.to_string())?;
    logs.keep("modified rps, system", cfg.epsilon, &sys);
    if sys.verdict != Verdict::NoDominant {
        return Err(format!("(a) system {}", verdict_name(&sys.verdict)));
    }
    let env = dominant_env(&p.plant, &p.formula, &cfg).map_err(|e| e.to_string())?;
    logs.keep("modified rps, environment", cfg.epsilon, &env);
    if env.verdict != Verdict::NoDominant {
        return Err(format!("(b) environment {}", verdict_name(&env.verdict)));
    }
    let tree = build_decision_tree(&p.plant, &p.formula, &cfg)
        .map_err(|e| e.to_string())?
        .tree
        .ok_or("(c) no tree")?;
    let DecisionTree::Dominant { controls, child } = &tree else {
        return Err("(c) root does not commit a control".into());
    };
    if controls[0].round != 1 || (controls[0].values[0] - 1.0).abs() > 1e-9 {
        return Err(format!("(c) root control {:?}", controls[0]));
    }
    let DecisionTree::Branch { round: 1, segments } = child.as_ref() else {
        return Err("(c) no branch on the first disturbance".into());
    };
    let second = |s: &reactive_synth::hierarchy::Segment| match &s.child {
        DecisionTree::Dominant { controls, .. } if controls.len() == 1 && controls[0].round == 2 => {
            Some(controls[0].values[0])
        }
        _ => None,
    };
    let pitch = 0.125;
    // boundary where the answer switches from 0 to 1
    let mut switch = None;
    for s in segments {
        let u2 = second(s).ok_or("(c) segment without a second control")?;
        if u2 == 1.0 && switch.is_none() {
            switch = Some(s.lo[0]);
        } else if u2 == 0.0 && switch.is_some() {
            return Err("(c) zero answer above the switch".into());
        } else if u2 != 0.0 && u2 != 1.0 {
            return Err(format!("(c) second control {u2}"));
        }
    }
    let switch = switch.ok_or("(c) the second control is never 1")?;
    if (switch - 0.625).abs() > pitch + 1e-12 {
        return Err(format!("(c) switch at {switch}"));
    }
    for w1 in [0.625 + 1e-9, 0.7, 0.75] {
        let u = tree.respond(&p.plant, &[w1, 0.5]).ok_or("(c) disturbance outside every segment")?;
        if u[1] != 1.0 {
            return Err(format!("(c) against w1 = {w1} the tree plays {}", u[1]));
        }
    }
    let worst = verify_tree(&tree, &p.plant, &p.formula, 1.0 / 64.0);
    if worst <= 0.0 {
        return Err(format!("(c) tree loses somewhere (rho {worst})"));
    }
    Ok(format!(
        "(a), (b) no dominant strategy; (c) u1 = 1, switch at w1 = {switch}, worst rho {worst}"
    ))
}

/// Random 1D or 2D linear instance with a random formula.
fn random_instance(r: &mut rand_chacha::ChaCha8Rng, depth: usize) -> (Plant, Formula) {
    loop {
        let h = r.random_range(1..=2);
        let plant = Plant::Linear(random_linear(r, 2, 1, 1, h));
        let phi = random_formula(r, depth, 2, h);
        if phi.horizon() <= h && phi.max_predicate_gain() > 0.0 {
            return (plant, phi);
        }
    }
}

fn box_of(plant: &Plant, player: Player) -> HyperBox {
    let (lo, hi) = plant.domains(player).iter().map(Domain::hull).unzip();
    HyperBox::new(lo, hi).unwrap()
}

fn criterion_5() -> Check {
    let mut r = rng(5);
    let mut removed_total = 0;
    let mut violations = Vec::new();
    for case in 0..20 {
        let (plant, phi) = random_instance(&mut r, 3);
        let eps = 0.1;
        let cfg = CegisConfig::new(eps);
        let w_box = box_of(&plant, Player::Environment);
        let w_star: Vec<f64> = w_box.lo.iter().zip(&w_box.hi).map(|(a, b)| r.random_range(*a..=*b)).collect();
        let start = RegionSet::new(box_of(&plant, Player::System));
        let (left, log) = without_refuted(&plant, &phi, &w_star, &start, &cfg).map_err(|e| e.to_string())?;
        removed_total += log.len();
        let l = lipschitz_bounds(linear_of(&plant), &phi, NormBound::Infinity).system;
        let delta = eps / (4.0 * l);
        let slack = 2.0 * l * delta;
        let per_axis = if start.dim() == 1 { 10_000 } else { 100 };
        let axes: Vec<Vec<f64>> = (0..start.dim())
            .map(|i| linspace(start.base.lo[i], start.base.hi[i], per_axis))
            .collect();
        let eval = plant.evaluator();
        let mut buf = Vec::new();
        for u in grid(&axes) {
            let rho = eval.rho(&phi, &u, &w_star, &mut buf);
            if left.contains(&u) && rho < -slack - 1e-12 {
                violations.push(format!("case {case}: survivor {u:?} has rho {rho}"));
            }
            if !left.contains(&u) && rho >= eps {
                violations.push(format!("case {case}: removed {u:?} has rho {rho}"));
            }
        }
    }
    if let Some(v) = violations.first() {
        return Err(format!("{} violations, first: {v}", violations.len()));
    }
    Ok(format!("20 instances, {removed_total} squares removed, no violations"))
}

fn criterion_6(logs: &Logs) -> Check {
    let mut pairs = 0;
    for (name, eps, out) in &logs.runs {
        let l = out.lipschitz_forall;
        if l == 0.0 {
            continue;
        }
        let gap = eps / l;
        for w in out.counterexamples.windows(2) {
            pairs += 1;
            let d = w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if d < gap - 1e-9 {
                return Err(format!("{name}: successive counterexamples {d} apart, need {gap}"));
            }
        }
    }
    Ok(format!("{} runs, {pairs} successive pairs, no violations", logs.runs.len()))
}

/// Instance together with the epsilon it was certified for.
struct Robust {
    plant: Plant,
    formula: Formula,
    epsilon: f64,
}

/// Certified lower bound on max_u min_w rho from a grid over both players
/// and the disturbance Lipschitz constant, with the worst grid control's
/// value alongside.
fn certified_value(plant: &Plant, phi: &Formula, l_w: f64) -> (f64, f64) {
    let pitch = |d: &Domain, n: usize| {
        let (lo, hi) = d.hull();
        ((hi - lo) / (n - 1) as f64, linspace(lo, hi, n))
    };
    let u_axes: Vec<Vec<f64>> = plant.domains(Player::System).iter().map(|d| pitch(d, 21).1).collect();
    let w_info: Vec<(f64, Vec<f64>)> = plant.domains(Player::Environment).iter().map(|d| pitch(d, 41)).collect();
    let w_pitch = w_info.iter().map(|(p, _)| *p).fold(0.0, f64::max);
    let w_axes: Vec<Vec<f64>> = w_info.into_iter().map(|(_, a)| a).collect();
    let ws = grid(&w_axes);
    let eval = plant.evaluator();
    let mut buf = Vec::new();
    let values: Vec<f64> = grid(&u_axes)
        .iter()
        .map(|u| ws.iter().map(|w| eval.rho(phi, u, w, &mut buf)).fold(f64::INFINITY, f64::min))
        .collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let worst = values.iter().copied().fold(f64::INFINITY, f64::min);
    (best - l_w * w_pitch / 2.0, worst)
}

fn robust_instances(count: usize) -> Vec<Robust> {
    let mut r = rng(7);
    let mut found = Vec::new();
    while found.len() < count {
        let (plant, phi) = random_instance(&mut r, 2);
        let l = lipschitz_bounds(linear_of(&plant), &phi, NormBound::Infinity);
        let (value, worst) = certified_value(&plant, &phi, l.environment);
        // some control must lose, or the first candidate always wins
        if value <= 0.0 || worst >= 0.0 {
            continue;
        }
        let epsilon = value / 2.0;
        let width = box_of(&plant, Player::System).widest().1;
        // keeps the packing bound small enough for a quick run
        if width * l.system / epsilon > 60.0 {
            continue;
        }
        found.push(Robust { plant, formula: phi, epsilon });
    }
    found
}

fn criterion_7(logs: &mut Logs) -> Check {
    let mut notes = Vec::new();
    for (i, inst) in robust_instances(10).into_iter().enumerate() {
        let cfg = CegisConfig::new(inst.epsilon);
        let out = modified_cegis(&inst.plant, &inst.formula, &cfg).map_err(|e| e.to_string())?;
        logs.keep(format!("robust instance {i}"), inst.epsilon, &out);
        let Verdict::Dominant { strategy, .. } = &out.verdict else {
            return Err(format!("instance {i} (eps {}): {}", inst.epsilon, verdict_name(&out.verdict)));
        };
        let p = Dominance::players(&inst.plant, &inst.formula, Player::System, &cfg);
        let pitch = inst.epsilon / (2.0 * out.lipschitz_forall);
        let worst = worst_case_on_grid(&p, strategy, pitch);
        if worst <= 0.0 {
            return Err(format!("instance {i}: dominant strategy reaches rho {worst}"));
        }
        notes.push(out.iterations);
    }
    Ok(format!("10 instances dominant and re-verified, iterations {notes:?}"))
}

fn criterion_8() -> Check {
    let mut r = rng(8);
    let mut checked = 0;
    let mut tries = 0;
    while checked < 50 {
        tries += 1;
        if tries > 10_000 {
            return Err(format!("only {checked} qualifying queries generated"));
        }
        let (plant, phi) = random_instance(&mut r, 3);
        let l = lipschitz_bounds(linear_of(&plant), &phi, NormBound::Infinity).system;
        let u_box = box_of(&plant, Player::System);
        let w_box = box_of(&plant, Player::Environment);
        let w: Vec<f64> = w_box.lo.iter().zip(&w_box.hi).map(|(a, b)| r.random_range(*a..=*b)).collect();
        let delta = u_box.widest().1 / 32.0;
        let axes: Vec<Vec<f64>> = plant
            .domains(Player::System)
            .iter()
            .map(|d| reactive_synth::cegis::grid_axis(d, delta / 2.0))
            .collect();
        let eval = plant.evaluator();
        let mut buf = Vec::new();
        let grid_max = grid(&axes)
            .iter()
            .map(|u| eval.rho(&phi, u, &w, &mut buf))
            .fold(f64::NEG_INFINITY, f64::max);
        if grid_max < l * delta {
            continue;
        }
        checked += 1;
        let mut q = Query::new(&plant, &phi, Player::System, w.clone()).map_err(|e| e.to_string())?;
        q.lipschitz = Some(l);
        q.precision = delta;
        let Some(hit) = find_sat(&q).map_err(|e| e.to_string())? else {
            return Err(format!("query {checked}: grid reaches {grid_max} but find_sat returned none"));
        };
        let again = eval.rho(&phi, &hit.point, &w, &mut buf);
        if !(hit.rho > 0.0) || (again - hit.rho).abs() > 1e-12 || !u_box.contains(&hit.point) {
            return Err(format!("query {checked}: bad witness {hit:?}"));
        }
        let best = maximize(&q.domain, l, delta, |u| eval.rho(&phi, u, &w, &mut Vec::new())).ok_or("empty domain")?;
        if best.rho < grid_max - l * delta - 1e-12 {
            return Err(format!("query {checked}: maximum {} below grid {grid_max}", best.rho));
        }
    }
    Ok(format!("50 queries ({tries} generated), no violations"))
}

/// Decisions still open after the current one, counted from the string.
fn open_decisions(node: &GameNode) -> usize {
    match node {
        GameNode::Game { decision, game } => {
            let toks = game.tokens();
            let at = toks.iter().position(|t| *t == Token::E(*decision)).unwrap();
            toks[at + 1..].iter().filter(|t| matches!(t, Token::E(_))).count()
        }
        _ => 0,
    }
}

fn walk_violation(walk: &[WalkStep], h: usize) -> Option<String> {
    if walk.len() > 2 * h {
        return Some(format!("{} edges for horizon {h}", walk.len()));
    }
    for (i, s) in walk.iter().enumerate() {
        if open_decisions(&s.to) > open_decisions(&s.from) {
            return Some(format!("alpha grows on {} -> {}", s.from, s.to));
        }
        if i > 0 {
            let prev = &walk[i - 1];
            if prev.to != s.from {
                return Some("walk is not connected".into());
            }
            if !prev.label && !s.label && s.to != GameNode::Bottom {
                return Some(format!("two false edges into {}", s.to));
            }
        }
    }
    match walk.last() {
        Some(s) if s.to.is_terminal() => None,
        _ => Some("walk does not end in a terminal node".into()),
    }
}

fn criterion_9() -> Check {
    let mut walks = 0;
    let mut check = |name: &str, plant: &Plant, phi: &Formula, cfg: &CegisConfig| -> Result<(), String> {
        let out = build_decision_tree(plant, phi, cfg).map_err(|e| format!("{name}: {e}"))?;
        for w in &out.walks {
            walks += 1;
            if let Some(v) = walk_violation(w, plant.horizon()) {
                return Err(format!("{name}: {v}"));
            }
        }
        Ok(())
    };
    for name in [
        "discrete_rps.json",
        "rps_assumptions.json",
        "continuous_rps.json",
        "modified_rps.json",
        "true.json",
    ] {
        let p = bundled(name);
        check(name, &p.plant, &p.formula, &p.spec.cegis_config())?;
    }
    let mut r = rng(9);
    let names = ["a", "b", "c"];
    let codes = [0.5, 1.5, 2.5];
    for case in 0..100 {
        let h = r.random_range(1..=4);
        let k = if h == 4 { 2 } else { r.random_range(2..=3) };
        let moves = |k: usize| (0..k).map(|i| (names[i].to_string(), codes[i])).collect::<Vec<_>>();
        let plant = Plant::Finite(FiniteGame::new(moves(k), moves(k), h).map_err(|e| e.to_string())?);
        let phi = random_formula(&mut r, 3, 2, h);
        check(&format!("random game {case}"), &plant, &phi, &CegisConfig::new(0.1))?;
    }
    Ok(format!("{walks} walks from 5 examples and 100 random games, no violations"))
}

fn criterion_10() -> Check {
    let mut r = rng(10);
    for case in 0..1000 {
        let len = r.random_range(1..=8);
        let dim = r.random_range(1..=3);
        let depth = r.random_range(0..=4);
        let phi = random_formula(&mut r, depth, dim, len - 1);
        let samples = common::random_trace(&mut r, len, dim);
        let t = r.random_range(0..len - phi.horizon());
        let trace = Trace::new(samples.clone()).map_err(|e| e.to_string())?;
        let rho = phi.robustness(&trace, t).map_err(|e| e.to_string())?;
        let expect = reference::rho(&phi, &samples, t);
        if (rho - expect).abs() > 1e-12 {
            return Err(format!("case {case}: {phi} gives {rho}, reference {expect}"));
        }
        let sat = phi.satisfies(&trace, t).map_err(|e| e.to_string())?;
        if sat != (rho > 0.0) {
            return Err(format!("case {case}: satisfies is {sat} with rho {rho}"));
        }
        if rho != 0.0 && reference::holds(&reference::unfold(&phi, t), &samples) != (rho > 0.0) {
            return Err(format!("case {case}: Boolean reference disagrees with rho {rho}"));
        }
    }
    Ok("1000 formula and trace pairs match the reference".into())
}

fn main() -> ExitCode {
    let mut logs = Logs::default();
    let mut results: Vec<(usize, Check, f64)> = Vec::new();
    let mut run = |n: usize, f: &mut dyn FnMut() -> Check| {
        let start = Instant::now();
        let res = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        results.push((n, res, start.elapsed().as_secs_f64()));
    };
    run(1, &mut criterion_1);
    run(2, &mut criterion_2);
    run(3, &mut || criterion_3(&mut logs));
    run(4, &mut || criterion_4(&mut logs));
    run(5, &mut criterion_5);
    run(7, &mut || criterion_7(&mut logs));
    run(6, &mut || criterion_6(&logs));
    run(8, &mut criterion_8);
    run(9, &mut criterion_9);
    run(10, &mut criterion_10);
    results.sort_by_key(|(n, _, _)| *n);
    let mut failed = 0;
    for (n, res, secs) in &results {
        match res {
            Ok(msg) => println!("criterion {n}: PASS ({secs:.2}s) {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n}: FAIL ({secs:.2}s) {msg}");
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all {} criteria passed", results.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of {} criteria failed", results.len());
        ExitCode::FAILURE
    }
}

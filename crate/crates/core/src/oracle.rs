//! Exact reference solvers for small instances.
//!
//! Everything here is brute force: every coalition choice, every visiting
//! order per agent and every way of sequencing one pair in each opposed set,
//! each scheduled by Bellman-Ford on difference constraints. Nothing is
//! shared with the planner's search or scheduling code.

use thiserror::Error;

use crate::planner::{Instance, Node, OPPOSED_GAP};

pub const MAX_AGENTS: usize = 3;
pub const MAX_TASKS: usize = 5;
pub const MAX_ARITY: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("instance exceeds oracle caps ({0})")]
    TooLarge(String),
    #[error("no feasible schedule exists")]
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub makespan: f64,
    pub start: Vec<f64>,
    /// Coalition index per subtask (`None` for fixed ones).
    pub coalition_of: Vec<Option<usize>>,
    pub sequences: Vec<Vec<usize>>,
}

/// `x_to >= x_from + w`; `from = None` is the time origin.
type Constraint = (Option<usize>, usize, f64);

/// Earliest starts satisfying all constraints, or `None` on a positive cycle.
fn bellman_ford(n: usize, cons: &[Constraint]) -> Option<Vec<f64>> {
    let mut x = vec![0.0f64; n];
    for round in 0..=n {
        let mut changed = false;
        for &(from, to, w) in cons {
            let base = from.map_or(0.0, |f| x[f]);
            if base + w > x[to] + 1e-9 {
                x[to] = base + w;
                changed = true;
            }
        }
        if !changed {
            return Some(x);
        }
        if round == n {
            break;
        }
    }
    None
}

fn check_caps(inst: &Instance) -> Result<(), OracleError> {
    let live = inst.alive_count();
    let free = inst.fixed.iter().filter(|f| f.is_none()).count();
    if live > MAX_AGENTS {
        return Err(OracleError::TooLarge(format!("{live} agents")));
    }
    if free > MAX_TASKS {
        return Err(OracleError::TooLarge(format!("{free} subtasks")));
    }
    if let Some(s) = inst.opposed.iter().find(|s| s.len() > MAX_ARITY) {
        return Err(OracleError::TooLarge(format!("opposed set of arity {}", s.len())));
    }
    Ok(())
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Static constraints: precedence and fixed starts (as lower bounds).
fn static_constraints(inst: &Instance) -> Vec<Constraint> {
    let mut cons = Vec::new();
    for b in 0..inst.len() {
        for a in 0..inst.len() {
            if inst.preds[b] >> a & 1 == 1 {
                cons.push((Some(a), b, 0.0));
            }
        }
        if let Some(f) = &inst.fixed[b] {
            cons.push((None, b, f.start));
        }
    }
    cons
}

fn sequence_constraints(inst: &Instance, seqs: &[Vec<usize>], cons: &mut Vec<Constraint>) {
    for (a, seq) in seqs.iter().enumerate() {
        let st = &inst.agents[a];
        let mut here = st.region;
        let mut prev: Option<usize> = None;
        for &w in seq {
            let r = inst.tasks[w].req.region.expect("served tasks have a region");
            let leg = inst.team.travel_time(a, here, r);
            match prev {
                None => cons.push((None, w, st.ready + leg)),
                Some(p) => cons.push((Some(p), w, inst.tasks[p].duration() + leg)),
            }
            prev = Some(w);
            here = r;
        }
    }
}

/// Best makespan over all opposed-set resolutions for fixed sequences.
fn best_over_resolutions(inst: &Instance, base: &[Constraint]) -> Option<(f64, Vec<f64>)> {
    let fixed_all = |s: &Vec<usize>| s.iter().all(|&w| inst.fixed[w].is_some());
    let sets: Vec<&Vec<usize>> = inst.opposed.iter().filter(|s| !fixed_all(s)).collect();
    let pairs: Vec<Vec<(usize, usize)>> = sets
        .iter()
        .map(|s| s.iter().flat_map(|&a| s.iter().filter(move |&&b| b != a).map(move |&b| (a, b))).collect())
        .collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut idx = vec![0usize; pairs.len()];
    loop {
        let mut cons = base.to_vec();
        for (k, &i) in idx.iter().enumerate() {
            let (a, b) = pairs[k][i];
            cons.push((Some(a), b, inst.tasks[a].duration() + OPPOSED_GAP));
        }
        if let Some(x) = bellman_ford(inst.len(), &cons) {
            // Fixed subtasks cannot be delayed.
            let pinned = inst.fixed.iter().enumerate().all(|(w, f)| f.as_ref().is_none_or(|f| x[w] <= f.start + 1e-9));
            if pinned {
                let m = (0..inst.len()).map(|w| x[w] + inst.tasks[w].duration()).fold(0.0, f64::max);
                if best.as_ref().is_none_or(|b| m < b.0) {
                    best = Some((m, x));
                }
            }
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return best;
            }
            idx[k] += 1;
            if idx[k] < pairs[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Minimum makespan of a complete assignment over all opposed resolutions.
pub fn exact_schedule(inst: &Instance, node: &Node) -> Result<f64, OracleError> {
    if !node.is_complete(inst) {
        return Err(OracleError::Infeasible);
    }
    let mut cons = static_constraints(inst);
    sequence_constraints(inst, &node.seqs, &mut cons);
    best_over_resolutions(inst, &cons).map(|b| b.0).ok_or(OracleError::Infeasible)
}

/// Optimum over all completions of `node` (the root gives the global optimum).
/// Assigned subtasks keep their coalition; each agent's existing sequence is
/// a prefix, followed by any order of its newly assigned subtasks.
pub fn exact_completion_optimum(inst: &Instance, node: &Node) -> Result<ExactSolution, OracleError> {
    check_caps(inst)?;
    let n = inst.len();
    let open: Vec<usize> = (0..n).filter(|&w| node.assigned >> w & 1 == 0).collect();
    let statics = static_constraints(inst);
    let mut best: Option<ExactSolution> = None;
    let mut choice = vec![0usize; open.len()];
    if open.iter().any(|&w| inst.tasks[w].coalitions.is_empty()) {
        return Err(OracleError::Infeasible);
    }
    loop {
        let mut coalition_of = node.coalition_of.clone();
        let mut extra: Vec<Vec<usize>> = vec![Vec::new(); inst.agents.len()];
        for (k, &w) in open.iter().enumerate() {
            coalition_of[w] = Some(choice[k]);
            for &a in &inst.tasks[w].coalitions[choice[k]].members {
                extra[a].push(w);
            }
        }
        let orders: Vec<Vec<Vec<usize>>> = extra.iter().map(|e| permutations(e)).collect();
        let mut pick = vec![0usize; orders.len()];
        loop {
            let seqs: Vec<Vec<usize>> = (0..orders.len())
                .map(|a| node.seqs[a].iter().chain(&orders[a][pick[a]]).copied().collect())
                .collect();
            let mut cons = statics.clone();
            sequence_constraints(inst, &seqs, &mut cons);
            if let Some((m, start)) = best_over_resolutions(inst, &cons) {
                if best.as_ref().is_none_or(|b| m < b.makespan) {
                    best = Some(ExactSolution { makespan: m, start, coalition_of: coalition_of.clone(), sequences: seqs });
                }
            }
            let mut a = 0;
            while a < pick.len() {
                pick[a] += 1;
                if pick[a] < orders[a].len() {
                    break;
                }
                pick[a] = 0;
                a += 1;
            }
            if a == pick.len() {
                break;
            }
        }
        let mut k = 0;
        while k < choice.len() {
            choice[k] += 1;
            if choice[k] < inst.tasks[open[k]].coalitions.len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
        if k == choice.len() {
            break;
        }
    }
    best.ok_or(OracleError::Infeasible)
}

pub fn exact_optimum(inst: &Instance) -> Result<ExactSolution, OracleError> {
    exact_completion_optimum(inst, &Node::root(inst))
}

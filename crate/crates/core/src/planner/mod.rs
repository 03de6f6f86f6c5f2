//! Task assignment: which coalition serves each subtask and in what order
//! every agent visits its subtasks, minimising the makespan.

mod bnb;
mod bounds;
mod output;
mod pipeline;

use serde::Serialize;
use thiserror::Error;

use crate::automaton::bits_of;
use crate::model::{coalitions, ground, AgentId, Coalition, ModelError, RegionId, ServiceRequirement, Team};
use crate::poset::Poset;

pub use bnb::{bnb, BnbConfig, BnbResult, Improvement};
pub use bounds::{alt_lower_bound, lower_bound, upper_bound, LbMode};
pub use output::{gantt_rows, node_from_plan, plan_json, validate, GanttRow, HistoryPoint, PlanJson, PlannedSubtask};
pub use pipeline::{plan, rank_posets, PlanConfig, PlanOutcome, PlanSource};

/// Slack that turns "finish before start" into a strict inequality.
pub const OPPOSED_GAP: f64 = 1e-6;
/// Opposed-set orderings tried exhaustively before falling back to a greedy choice.
pub const RESOLUTION_CAP: usize = 4096;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    Ltl(#[from] crate::ltl::LtlError),
    #[error(transparent)]
    Automaton(#[from] crate::automaton::AutomatonError),
    #[error("mission is unsatisfiable for this team")]
    Unsatisfiable,
    #[error("no poset can be served by this team: {0}")]
    InfeasibleForTeam(String),
    #[error("budget exhausted before any complete plan was found")]
    NoSolution,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Serialize)]
pub struct Task {
    pub label: String,
    pub req: ServiceRequirement,
    pub coalitions: Vec<Coalition>,
}

impl Task {
    pub fn duration(&self) -> f64 {
        self.req.duration
    }
    pub fn work(&self) -> f64 {
        self.req.duration * self.req.participants() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgentState {
    /// Earliest time the agent can leave `region`.
    pub ready: f64,
    pub region: RegionId,
    pub alive: bool,
}

/// A subtask that already started and can no longer be moved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedTask {
    pub start: f64,
    pub coalition: Coalition,
}

/// One assignment problem: the initial plan or a residual re-plan.
#[derive(Debug, Clone)]
pub struct Instance<'a> {
    pub team: &'a Team,
    pub tasks: Vec<Task>,
    /// Transitive predecessors under the start-before-start order.
    pub preds: Vec<u64>,
    pub opposed: Vec<Vec<usize>>,
    pub agents: Vec<AgentState>,
    pub fixed: Vec<Option<FixedTask>>,
}

impl<'a> Instance<'a> {
    pub fn from_poset(poset: &Poset, team: &'a Team) -> Result<Instance<'a>, PlanError> {
        let alive = vec![true; team.agents.len()];
        let mut tasks = Vec::new();
        for w in 0..poset.len() {
            let req = ground(&poset.positive_names(w), &poset.negative_names(w), team)?;
            let cs = coalitions(&req, team, &alive);
            if cs.is_empty() {
                return Err(PlanError::InfeasibleForTeam(poset.label(w)));
            }
            tasks.push(Task { label: poset.label(w), req, coalitions: cs });
        }
        let agents = team.agents.iter().map(|a| AgentState { ready: 0.0, region: a.start, alive: true }).collect();
        Ok(Instance {
            team,
            tasks,
            preds: poset.graph().preds,
            opposed: poset.opposed.clone(),
            agents,
            fixed: vec![None; poset.len()],
        })
    }

    /// Residual problem after execution has progressed: agents carry their
    /// current readiness, started subtasks are pinned, and coalitions are
    /// rebuilt from the surviving agents.
    pub fn with_state(&self, agents: Vec<AgentState>, fixed: Vec<Option<FixedTask>>) -> Result<Instance<'a>, PlanError> {
        let alive: Vec<bool> = agents.iter().map(|a| a.alive).collect();
        let mut tasks = self.tasks.clone();
        for (w, t) in tasks.iter_mut().enumerate() {
            if fixed[w].is_none() {
                t.coalitions = coalitions(&t.req, self.team, &alive);
                if t.coalitions.is_empty() {
                    return Err(PlanError::InfeasibleForTeam(t.label.clone()));
                }
            }
        }
        Ok(Instance { team: self.team, tasks, preds: self.preds.clone(), opposed: self.opposed.clone(), agents, fixed })
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }
    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }
    pub fn fixed_mask(&self) -> u64 {
        self.fixed.iter().enumerate().filter(|(_, f)| f.is_some()).fold(0, |m, (i, _)| m | 1 << i)
    }
    pub fn full_mask(&self) -> u64 {
        if self.len() == 64 {
            u64::MAX
        } else {
            (1 << self.len()) - 1
        }
    }
    pub fn alive_count(&self) -> usize {
        self.agents.iter().filter(|a| a.alive).count()
    }
    pub fn travel(&self, agent: AgentId, from: RegionId, to: Option<RegionId>) -> f64 {
        to.map_or(0.0, |t| self.team.travel_time(agent, from, t))
    }
}

/// A partial assignment. Start times are those of the relaxation that
/// ignores opposed sets, computed incrementally in assignment order.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub order: Vec<usize>,
    pub coalition_of: Vec<Option<usize>>,
    pub seqs: Vec<Vec<usize>>,
    pub assigned: u64,
    pub start: Vec<f64>,
    pub agent_free: Vec<f64>,
    pub agent_region: Vec<RegionId>,
    pub relaxed_makespan: f64,
}

impl Node {
    pub fn root(inst: &Instance) -> Node {
        let n = inst.len();
        let mut start = vec![f64::NAN; n];
        let mut span: f64 = 0.0;
        for (w, f) in inst.fixed.iter().enumerate() {
            if let Some(f) = f {
                start[w] = f.start;
                span = span.max(f.start + inst.tasks[w].duration());
            }
        }
        Node {
            order: Vec::new(),
            coalition_of: vec![None; n],
            seqs: vec![Vec::new(); inst.agents.len()],
            assigned: inst.fixed_mask(),
            start,
            agent_free: inst.agents.iter().map(|a| a.ready).collect(),
            agent_region: inst.agents.iter().map(|a| a.region).collect(),
            relaxed_makespan: span,
        }
    }

    pub fn is_complete(&self, inst: &Instance) -> bool {
        self.assigned == inst.full_mask()
    }

    /// Unassigned subtasks whose predecessors are all assigned.
    pub fn available(&self, inst: &Instance) -> Vec<usize> {
        (0..inst.len()).filter(|&w| self.assigned >> w & 1 == 0 && inst.preds[w] & !self.assigned == 0).collect()
    }

    /// Relaxed start of `w` if served by coalition `c` next.
    pub fn start_if(&self, inst: &Instance, w: usize, c: usize) -> f64 {
        let task = &inst.tasks[w];
        let mut t: f64 = 0.0;
        for p in bits_of(inst.preds[w]) {
            t = t.max(self.start[p]);
        }
        for &a in &task.coalitions[c].members {
            t = t.max(self.agent_free[a] + inst.travel(a, self.agent_region[a], task.req.region));
        }
        t
    }

    pub fn child(&self, inst: &Instance, w: usize, c: usize) -> Node {
        let mut n = self.clone();
        let t = self.start_if(inst, w, c);
        let task = &inst.tasks[w];
        n.start[w] = t;
        n.order.push(w);
        n.coalition_of[w] = Some(c);
        n.assigned |= 1 << w;
        for &a in &task.coalitions[c].members {
            n.seqs[a].push(w);
            n.agent_free[a] = t + task.duration();
            n.agent_region[a] = task.req.region.expect("served tasks have a region");
        }
        n.relaxed_makespan = n.relaxed_makespan.max(t + task.duration());
        n
    }

    /// Child that puts `w` at `pos[k]` of member `k`'s sequence instead of at
    /// the end. Starts are recomputed; `None` if the order is infeasible.
    pub fn child_inserted(&self, inst: &Instance, w: usize, c: usize, pos: &[usize]) -> Option<Node> {
        let mut n = self.clone();
        let task = &inst.tasks[w];
        n.order.push(w);
        n.coalition_of[w] = Some(c);
        n.assigned |= 1 << w;
        for (k, &a) in task.coalitions[c].members.iter().enumerate() {
            n.seqs[a].insert(pos[k], w);
        }
        n.start = longest_path(&base_graph(inst, &n), &[])?;
        for w in 0..inst.len() {
            if n.assigned >> w & 1 == 0 {
                n.start[w] = f64::NAN;
            }
        }
        for a in 0..n.seqs.len() {
            if let Some(&last) = n.seqs[a].last() {
                n.agent_free[a] = n.start[last] + inst.tasks[last].duration();
                n.agent_region[a] = inst.tasks[last].req.region.expect("served tasks have a region");
            }
        }
        n.relaxed_makespan = makespan_of(inst, n.assigned, &n.start);
        Some(n)
    }

    /// All children in deterministic order: subtask, coalition, then (for
    /// zero-duration subtasks, which an agent may serve in passing) every
    /// earlier insertion point in the members' sequences.
    pub fn children(&self, inst: &Instance) -> Vec<Node> {
        let mut out = Vec::new();
        for w in self.available(inst) {
            for c in 0..inst.tasks[w].coalitions.len() {
                out.push(self.child(inst, w, c));
                if inst.tasks[w].duration() > 0.0 {
                    continue;
                }
                let lens: Vec<usize> = inst.tasks[w].coalitions[c].members.iter().map(|&a| self.seqs[a].len()).collect();
                let mut pos = vec![0usize; lens.len()];
                'combos: loop {
                    if pos != lens {
                        if let Some(n) = self.child_inserted(inst, w, c, &pos) {
                            out.push(n);
                        }
                    }
                    let mut k = 0;
                    loop {
                        if k == pos.len() {
                            break 'combos;
                        }
                        pos[k] += 1;
                        if pos[k] <= lens[k] {
                            break;
                        }
                        pos[k] = 0;
                        k += 1;
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    pub start: Vec<f64>,
    pub makespan: f64,
    /// Chosen `(first, second)` per opposed set that needed sequencing.
    pub resolution: Vec<(usize, usize)>,
}

struct ConstraintGraph {
    lb: Vec<f64>,
    edges: Vec<(usize, usize, f64)>,
    fixed: Vec<Option<f64>>,
    present: u64,
}

fn base_graph(inst: &Instance, node: &Node) -> ConstraintGraph {
    let n = inst.len();
    let mut lb = vec![0.0; n];
    let mut edges = Vec::new();
    for (a, seq) in node.seqs.iter().enumerate() {
        let st = &inst.agents[a];
        let mut prev: Option<usize> = None;
        for &w in seq {
            let region = inst.tasks[w].req.region;
            match prev {
                None => lb[w] = f64::max(lb[w], st.ready + inst.travel(a, st.region, region)),
                Some(p) => {
                    let from = inst.tasks[p].req.region.expect("served tasks have a region");
                    edges.push((p, w, inst.tasks[p].duration() + inst.travel(a, from, region)));
                }
            }
            prev = Some(w);
        }
    }
    for b in 0..n {
        if node.assigned >> b & 1 == 0 {
            continue;
        }
        for a in bits_of(inst.preds[b] & node.assigned) {
            edges.push((a, b, 0.0));
        }
    }
    let fixed = inst.fixed.iter().map(|f| f.as_ref().map(|f| f.start)).collect();
    ConstraintGraph { lb, edges, fixed, present: node.assigned }
}

/// Longest-path start times by label correcting (zero-weight cycles are
/// allowed, they tie starts together); `None` on a positive cycle or when a
/// fixed start would have to move.
fn longest_path(g: &ConstraintGraph, extra: &[(usize, usize, f64)]) -> Option<Vec<f64>> {
    let n = g.lb.len();
    let mut start = g.lb.clone();
    for (w, f) in g.fixed.iter().enumerate() {
        if let Some(f) = f {
            start[w] = start[w].max(*f);
        }
    }
    let live = g.present.count_ones() as usize;
    let mut rounds = 0;
    loop {
        let mut changed = false;
        for &(a, b, w) in g.edges.iter().chain(extra) {
            if start[a] + w > start[b] + 1e-12 {
                start[b] = start[a] + w;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        rounds += 1;
        if rounds > live {
            return None;
        }
    }
    for w in 0..n {
        if let Some(f) = g.fixed[w] {
            if start[w] > f + 1e-9 {
                return None;
            }
            start[w] = f;
        }
    }
    Some(start)
}

fn makespan_of(inst: &Instance, present: u64, start: &[f64]) -> f64 {
    bits_of(present).into_iter().map(|w| start[w] + inst.tasks[w].duration()).fold(0.0, f64::max)
}

/// Opposed sets that constrain this node: all members present, not all fixed.
fn active_sets<'b>(inst: &'b Instance, present: u64) -> Vec<&'b Vec<usize>> {
    let fixed = inst.fixed_mask();
    inst.opposed
        .iter()
        .filter(|s| s.iter().all(|&w| present >> w & 1 == 1) && !s.iter().all(|&w| fixed >> w & 1 == 1))
        .collect()
}

fn pair_choices(inst: &Instance, set: &[usize]) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for &a in set {
        for &b in set {
            if a != b && inst.fixed[b].is_none() {
                v.push((a, b));
            }
        }
    }
    v
}

/// Earliest-start schedule of the assigned subtasks, minimising the makespan
/// over opposed-set orderings (exhaustively up to `RESOLUTION_CAP`).
pub fn schedule(inst: &Instance, node: &Node) -> Option<Schedule> {
    let g = base_graph(inst, node);
    let sets = active_sets(inst, node.assigned);
    let choices: Vec<Vec<(usize, usize)>> = sets.iter().map(|s| pair_choices(inst, s)).collect();
    let total = choices.iter().try_fold(1usize, |acc, c| acc.checked_mul(c.len()));
    let edge = |(a, b): (usize, usize)| (a, b, inst.tasks[a].duration() + OPPOSED_GAP);
    let mut best: Option<Schedule> = None;
    if total.is_some_and(|t| t <= RESOLUTION_CAP) {
        let mut idx = vec![0usize; choices.len()];
        loop {
            let picked: Vec<(usize, usize)> = idx.iter().zip(&choices).map(|(&i, c)| c[i]).collect();
            let extra: Vec<_> = picked.iter().map(|&p| edge(p)).collect();
            if let Some(start) = longest_path(&g, &extra) {
                let m = makespan_of(inst, node.assigned, &start);
                if best.as_ref().is_none_or(|b| m < b.makespan - 1e-12) {
                    best = Some(Schedule { start, makespan: m, resolution: picked });
                }
            }
            let mut k = 0;
            loop {
                if k == idx.len() {
                    return best;
                }
                idx[k] += 1;
                if idx[k] < choices[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
    // Greedy: order each set along a topological order of the base graph,
    // which can never close a cycle.
    let base = longest_path(&g, &[])?;
    let rank = |w: usize| (base[w], w);
    let mut picked = Vec::new();
    for s in &sets {
        let mut members: Vec<usize> = s.to_vec();
        members.sort_by(|&x, &y| rank(x).partial_cmp(&rank(y)).unwrap());
        let b = *members.iter().rev().find(|&&w| inst.fixed[w].is_none())?;
        let a = *members.iter().find(|&&w| w != b)?;
        picked.push((a, b));
    }
    let extra: Vec<_> = picked.iter().map(|&p| edge(p)).collect();
    let start = longest_path(&g, &extra)?;
    let m = makespan_of(inst, node.assigned, &start);
    Some(Schedule { start, makespan: m, resolution: picked })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Scenario;
    use std::collections::BTreeSet;

    pub(crate) fn line_team() -> Team {
        let s = r#"{
          "regions": [{"id":0,"name":"b"},{"id":1,"name":"p1"},{"id":2,"name":"p2"}],
          "distances": {"R": [["b","p1",5.0],["b","p2",5.0],["p1","p2",2.0]]},
          "agents": [
            {"id":"r1","type":"R","initial":"b","local_actions":{"sweep":10.0,"mow":4.0}},
            {"id":"r2","type":"R","initial":"b","local_actions":{"sweep":10.0,"mow":4.0}}
          ],
          "behaviors": []
        }"#;
        Team::new(&Scenario::from_json(s).unwrap()).unwrap()
    }

    fn poset(labels: &[&str], leq: &[(usize, usize)], opposed: Vec<Vec<usize>>) -> Poset {
        let ap: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        let subtasks = (0..labels.len())
            .map(|i| crate::poset::Subtask {
                index: i,
                positive: 1 << i,
                negative: 0,
                selfloop_pos: 0,
                selfloop_neg: 0,
                waits: true,
                letter: 1 << i,
            })
            .collect();
        Poset { id: 0, ap, subtasks, leq: leq.iter().copied().collect::<BTreeSet<_>>(), opposed, language_size: 1, run: vec![] }
    }

    #[test]
    fn two_independent_tasks_run_in_parallel() {
        let team = line_team();
        let p = poset(&["sweep_p1", "sweep_p2"], &[], vec![]);
        let inst = Instance::from_poset(&p, &team).unwrap();
        let root = Node::root(&inst);
        let n = root.child(&inst, 0, 0).child(&inst, 1, 1);
        let s = schedule(&inst, &n).unwrap();
        assert_eq!(s.makespan, 15.0);
    }

    #[test]
    fn opposed_pair_is_sequenced() {
        let team = line_team();
        let p = poset(&["sweep_p1", "mow_p1"], &[(0, 1)], vec![vec![0, 1]]);
        let inst = Instance::from_poset(&p, &team).unwrap();
        let n = Node::root(&inst).child(&inst, 0, 0).child(&inst, 1, 1);
        let s = schedule(&inst, &n).unwrap();
        assert!((s.makespan - (5.0 + 10.0 + 4.0 + OPPOSED_GAP)).abs() < 1e-9);
        assert_eq!(s.resolution, vec![(0, 1)]);
        assert!(p.admits_schedule(&[(s.start[0], 10.0), (s.start[1], 4.0)]));
    }
}

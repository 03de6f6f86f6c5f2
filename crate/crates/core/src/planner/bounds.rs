//! Bounds used by the branch-and-bound search.

use super::{schedule, Instance, Node};
use crate::automaton::bits_of;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LbMode {
    /// Combine the path and workload estimates with `min`.
    #[default]
    Min,
    /// Combine them with `max`; tighter, still admissible.
    Max,
}

/// Smallest `T` with `sum(max(0, T - free_n)) >= work`.
fn water_level(free: &[f64], work: f64) -> f64 {
    let mut f: Vec<f64> = free.to_vec();
    f.sort_by(f64::total_cmp);
    if f.is_empty() {
        return 0.0;
    }
    if work <= 0.0 {
        return f[0];
    }
    let mut sum = 0.0;
    for k in 0..f.len() {
        sum += f[k];
        let level = (sum + work) / (k + 1) as f64;
        if k + 1 == f.len() || level <= f[k + 1] {
            return level;
        }
    }
    unreachable!()
}

fn alive_free(inst: &Instance, node: &Node) -> Vec<f64> {
    (0..inst.agents.len()).filter(|&a| inst.agents[a].alive).map(|a| node.agent_free[a]).collect()
}

/// Earliest moment any live agent able to help could stand in `w`'s region.
fn earliest_arrival(inst: &Instance, node: &Node, w: usize) -> f64 {
    let task = &inst.tasks[w];
    // A zero-duration subtask can be slotted anywhere in a sequence.
    let passing = task.duration() <= 0.0;
    let mut best = f64::INFINITY;
    for c in &task.coalitions {
        for &a in &c.members {
            let t = if passing {
                inst.agents[a].ready + inst.travel(a, inst.agents[a].region, task.req.region)
            } else {
                node.agent_free[a] + inst.travel(a, node.agent_region[a], task.req.region)
            };
            best = best.min(t);
        }
    }
    if task.coalitions.iter().all(|c| c.members.is_empty()) {
        best = 0.0;
    }
    best
}

fn opposed_pair(inst: &Instance, a: usize, b: usize) -> bool {
    inst.opposed.iter().any(|s| s.len() == 2 && s.contains(&a) && s.contains(&b))
}

/// Admissible lower bound on every completion of `node`.
///
/// The path estimate propagates earliest starts through the unassigned
/// subtasks in index order (a topological order of the precedence), adding
/// the predecessor's duration when the two also form an opposed pair. The
/// workload estimate spreads the remaining work over the agents' free times.
pub fn lower_bound(inst: &Instance, node: &Node, mode: LbMode) -> f64 {
    if node.is_complete(inst) {
        return schedule(inst, node).map_or(f64::INFINITY, |s| s.makespan);
    }
    let n = inst.len();
    let mut est = vec![0.0; n];
    let mut path: f64 = 0.0;
    let mut work = 0.0;
    for w in 0..n {
        if node.assigned >> w & 1 == 1 {
            continue;
        }
        let task = &inst.tasks[w];
        work += task.work();
        let mut t = earliest_arrival(inst, node, w);
        for p in bits_of(inst.preds[w]) {
            let s = if node.assigned >> p & 1 == 1 { node.start[p] } else { est[p] };
            let gap = if opposed_pair(inst, p, w) { inst.tasks[p].duration() } else { 0.0 };
            t = t.max(s + gap);
        }
        est[w] = t;
        path = path.max(t + task.duration());
    }
    let load = water_level(&alive_free(inst, node), work);
    let combined = match mode {
        LbMode::Min => path.min(load),
        LbMode::Max => path.max(load),
    };
    node.relaxed_makespan.max(combined)
}

/// Lower bound from a relaxation that drops precedence: each subtask needs
/// its participants' free times plus a minimal travel leg and its duration.
pub fn alt_lower_bound(inst: &Instance, node: &Node) -> f64 {
    if node.is_complete(inst) {
        return schedule(inst, node).map_or(f64::INFINITY, |s| s.makespan);
    }
    let mut free = alive_free(inst, node);
    free.sort_by(f64::total_cmp);
    let unassigned: Vec<usize> = (0..inst.len()).filter(|&w| node.assigned >> w & 1 == 0).collect();
    let mut best = node.relaxed_makespan;
    let mut work = 0.0;
    for &w in &unassigned {
        let task = &inst.tasks[w];
        let k = task.req.participants();
        if k == 0 || task.duration() <= 0.0 {
            continue;
        }
        let Some(r) = task.req.region else { continue };
        let mut leg = f64::INFINITY;
        for c in &task.coalitions {
            for &a in &c.members {
                leg = leg.min(inst.team.travel_time(a, node.agent_region[a], r));
                for &o in &unassigned {
                    if let Some(ro) = inst.tasks[o].req.region {
                        leg = leg.min(inst.team.travel_time(a, ro, r));
                    }
                }
            }
        }
        let p = task.duration() + leg;
        if k <= free.len() {
            best = best.max(free[k - 1] + p);
        }
        work += k as f64 * p;
    }
    best.max(water_level(&free, work))
}

/// Greedy completion that repeatedly takes the available subtask and
/// coalition with the highest ratio of committed work to relaxed makespan.
/// Returns the completed node and its exact makespan.
pub fn upper_bound(inst: &Instance, node: &Node) -> Option<(Node, f64)> {
    let mut cur = node.clone();
    let mut work: f64 = cur.order.iter().map(|&w| inst.tasks[w].work()).sum();
    while !cur.is_complete(inst) {
        let mut pick: Option<(f64, usize, usize)> = None;
        for w in cur.available(inst) {
            let task = &inst.tasks[w];
            for c in 0..task.coalitions.len() {
                let finish = cur.start_if(inst, w, c) + task.duration();
                let span = cur.relaxed_makespan.max(finish);
                let eta = if span > 0.0 { (work + task.work()) / span } else { f64::INFINITY };
                if pick.is_none_or(|(e, _, _)| eta > e) {
                    pick = Some((eta, w, c));
                }
            }
        }
        let (_, w, c) = pick?;
        work += inst.tasks[w].work();
        cur = cur.child(inst, w, c);
    }
    let s = schedule(inst, &cur)?;
    Some((cur, s.makespan))
}

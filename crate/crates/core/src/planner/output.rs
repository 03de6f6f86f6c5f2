//! Plan artefacts: JSON summary and Gantt rows.

use serde::{Deserialize, Serialize};

use super::{Improvement, Instance, Node, Schedule};
use crate::poset::Poset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedSubtask {
    pub id: usize,
    pub label: String,
    pub region: Option<String>,
    pub coalition: Vec<String>,
    pub roles: Vec<String>,
    pub start: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryPoint {
    pub t: f64,
    pub makespan: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanJson {
    pub poset_id: usize,
    pub makespan: f64,
    pub subtasks: Vec<PlannedSubtask>,
    pub history: Vec<HistoryPoint>,
}

pub fn plan_json(poset_id: usize, inst: &Instance, node: &Node, sched: &Schedule, history: &[Improvement]) -> PlanJson {
    let subtasks = (0..inst.len())
        .map(|w| {
            let task = &inst.tasks[w];
            let coalition = match (&inst.fixed[w], node.coalition_of[w]) {
                (Some(f), _) => f.coalition.clone(),
                (None, Some(c)) => task.coalitions[c].clone(),
                (None, None) => Default::default(),
            };
            PlannedSubtask {
                id: w,
                label: task.label.clone(),
                region: task.req.region.map(|r| inst.team.regions[r].clone()),
                coalition: coalition.members.iter().map(|&a| inst.team.agents[a].name.clone()).collect(),
                roles: coalition.roles.clone(),
                start: sched.start[w],
                duration: task.duration(),
            }
        })
        .collect();
    PlanJson {
        poset_id,
        makespan: sched.makespan,
        subtasks,
        history: history.iter().map(|h| HistoryPoint { t: h.elapsed, makespan: h.makespan }).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanttRow {
    pub agent: String,
    pub subtask: String,
    pub start: f64,
    pub end: f64,
    pub state: String,
}

/// Per-agent travel, waiting and execution intervals of a planned schedule.
pub fn gantt_rows(inst: &Instance, node: &Node, sched: &Schedule) -> Vec<GanttRow> {
    let mut rows = Vec::new();
    for (a, seq) in node.seqs.iter().enumerate() {
        let name = &inst.team.agents[a].name;
        let mut t = inst.agents[a].ready;
        let mut region = inst.agents[a].region;
        for &w in seq {
            let task = &inst.tasks[w];
            let to = task.req.region.expect("served tasks have a region");
            let label = format!("{w}:{}", task.label);
            let arrive = t + inst.team.travel_time(a, region, to);
            let mut push = |s: f64, e: f64, st: &str| {
                if e > s + 1e-9 {
                    rows.push(GanttRow { agent: name.clone(), subtask: label.clone(), start: s, end: e, state: st.into() });
                }
            };
            push(t, arrive, "moving");
            push(arrive, sched.start[w], "waiting");
            push(sched.start[w], sched.start[w] + task.duration(), "executing");
            t = sched.start[w] + task.duration();
            region = to;
        }
    }
    rows
}

/// Independent feasibility check of a finished plan.
pub fn validate(inst: &Instance, poset: &Poset, node: &Node, sched: &Schedule) -> Result<(), String> {
    if !node.is_complete(inst) {
        return Err("assignment is incomplete".into());
    }
    const TOL: f64 = 1e-6;
    for (a, seq) in node.seqs.iter().enumerate() {
        let name = &inst.team.agents[a].name;
        let mut free = inst.agents[a].ready;
        let mut here = inst.agents[a].region;
        for &w in seq {
            let to = inst.tasks[w].req.region.ok_or("served subtask without region")?;
            let arrive = free + inst.team.travel_time(a, here, to);
            if sched.start[w] + TOL < arrive {
                return Err(format!("{name} cannot reach subtask {w} by {}", sched.start[w]));
            }
            free = sched.start[w] + inst.tasks[w].duration();
            here = to;
        }
    }
    for w in 0..inst.len() {
        if inst.fixed[w].is_some() {
            continue;
        }
        let c = node.coalition_of[w].ok_or("subtask without coalition")?;
        let members = &inst.tasks[w].coalitions[c].members;
        if members.len() != inst.tasks[w].req.participants() {
            return Err(format!("subtask {w} is understaffed"));
        }
        for &a in members {
            if !node.seqs[a].contains(&w) {
                return Err(format!("subtask {w} missing from a member's sequence"));
            }
        }
    }
    let word: Vec<(f64, f64)> = (0..inst.len()).map(|w| (sched.start[w], inst.tasks[w].duration())).collect();
    if !poset.admits_schedule(&word) {
        return Err("schedule violates the partial order".into());
    }
    let span = word.iter().map(|(s, d)| s + d).fold(0.0, f64::max);
    if (span - sched.makespan).abs() > TOL {
        return Err(format!("makespan {} does not match subtask ends {span}", sched.makespan));
    }
    Ok(())
}

/// Rebuilds the assignment behind a plan file: coalitions by member names,
/// each agent's order by planned start.
pub fn node_from_plan(inst: &Instance, plan: &PlanJson) -> Result<Node, String> {
    let mut coalition_of = vec![None; inst.len()];
    for s in &plan.subtasks {
        let task = inst.tasks.get(s.id).ok_or_else(|| format!("plan names unknown subtask {}", s.id))?;
        let mut want: Vec<usize> = s
            .coalition
            .iter()
            .map(|n| inst.team.agent_id(n).ok_or_else(|| format!("unknown agent {n}")))
            .collect::<Result<_, _>>()?;
        want.sort();
        let c = task.coalitions.iter().position(|c| c.members == want).ok_or_else(|| format!("coalition of subtask {} is not valid", s.id))?;
        coalition_of[s.id] = Some((c, s.start));
    }
    let mut order: Vec<usize> = (0..inst.len()).collect();
    order.sort_by(|&a, &b| {
        let sa = coalition_of[a].map_or(0.0, |c| c.1);
        let sb = coalition_of[b].map_or(0.0, |c| c.1);
        sa.total_cmp(&sb).then(a.cmp(&b))
    });
    let mut node = Node::root(inst);
    for w in order {
        let (c, _) = coalition_of[w].ok_or_else(|| format!("plan does not cover subtask {w}"))?;
        if inst.preds[w] & !node.assigned != 0 {
            return Err(format!("plan starts subtask {w} before a predecessor"));
        }
        node = node.child(inst, w, c);
    }
    Ok(node)
}

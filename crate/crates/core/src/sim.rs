//! Discrete-event execution of a plan.
//!
//! Agents follow their planned sequences and coordinate only through
//! messages: a start message along every precedence edge of the poset graph,
//! start/stop messages inside opposed sets, and an arrival message to the
//! other members of a collaborative coalition. Travel and execution times are
//! scaled by seeded uniform noise. Failed agents are dropped and the
//! unfinished work is re-planned from the current state.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::automaton::{bits_of, Letter, Nba};
use crate::model::{AgentId, RegionId};
use crate::planner::{bnb, AgentState, BnbConfig, FixedTask, Instance, Node, PlanError, Schedule, OPPOSED_GAP};
use crate::poset::{Poset, WordChecker};

#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Half-width of the multiplicative noise: factors are drawn from
    /// `[1 - noise, 1 + noise]`.
    pub noise: f64,
    pub seed: u64,
    pub failures: Vec<(AgentId, f64)>,
    pub replan: BnbConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            noise: 0.0,
            seed: 0,
            failures: Vec::new(),
            replan: BnbConfig { budget: Duration::from_secs(4), node_limit: Some(5000), ..Default::default() },
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("deadlock at t={time}: {}", waits.join("; "))]
    Deadlock { time: f64, waits: Vec<String> },
    #[error("failure at t={time} cannot be recovered: {reason}")]
    Irrecoverable { time: f64, reason: String },
    #[error("noise must keep every factor positive")]
    BadNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EventKind {
    ArriveAt,
    StartMsg,
    StopMsg,
    BeginExec,
    EndExec,
    Interrupt,
    Failure,
    Replan,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimEvent {
    pub time: f64,
    pub kind: EventKind,
    pub agent: Option<String>,
    pub subtask: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AgentStatus {
    Idle,
    Moving,
    WaitingForCollaborators,
    WaitingForPrecedence,
    Executing,
    Failed,
}

impl AgentStatus {
    fn label(self) -> &'static str {
        match self {
            AgentStatus::Idle => "idle",
            AgentStatus::Moving => "moving",
            AgentStatus::WaitingForCollaborators => "waiting_collaborators",
            AgentStatus::WaitingForPrecedence => "waiting_precedence",
            AgentStatus::Executing => "executing",
            AgentStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub agent: String,
    pub subtask: String,
    pub start: f64,
    pub end: f64,
    pub state: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MessageCounts {
    /// Start/stop messages caused by precedence edges and opposed sets.
    pub relation: usize,
    /// Arrival notices between coalition members.
    pub coalition: usize,
    /// One broadcast per subtask that carries a region restriction.
    pub selfloop: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Replan {
    pub time: f64,
    pub failed: Vec<String>,
    pub makespan: f64,
    pub unfinished: Vec<usize>,
    /// Residual state the re-plan was computed for.
    #[serde(skip)]
    pub agents: Vec<AgentState>,
    #[serde(skip)]
    pub fixed: Vec<Option<FixedTask>>,
    #[serde(skip)]
    pub node: Node,
    #[serde(skip)]
    pub planning_secs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trace {
    pub events: Vec<SimEvent>,
    /// Final (successful) execution window per subtask.
    pub windows: Vec<(f64, f64)>,
    pub replans: Vec<Replan>,
    pub messages: MessageCounts,
    pub makespan: f64,
    pub segments: Vec<Segment>,
}

impl Trace {
    pub fn word(&self) -> Vec<(f64, f64)> {
        self.windows.iter().map(|&(s, e)| (s, e - s)).collect()
    }

    /// Subtask letters in order of actual start (index order on ties).
    pub fn induced_letters(&self, poset: &Poset) -> Vec<Letter> {
        let mut order: Vec<usize> = (0..self.windows.len()).collect();
        order.sort_by(|&a, &b| self.windows[a].0.total_cmp(&self.windows[b].0).then(a.cmp(&b)));
        order.into_iter().map(|w| poset.subtasks[w].letter).collect()
    }

    pub fn accepted_by(&self, poset: &Poset, nba: &Nba) -> bool {
        WordChecker::new(nba).accepts(&self.induced_letters(poset))
    }
}

/// The re-planning problem for a given execution state. Precedence into
/// subtasks that already started was honoured when they started, so a
/// restarted predecessor is not held to it again. `current.preds` must be
/// the full precedence closure.
pub fn residual_instance<'t>(
    current: &Instance<'t>,
    agents: Vec<AgentState>,
    fixed: Vec<Option<FixedTask>>,
) -> Result<Instance<'t>, PlanError> {
    let mut base = current.clone();
    base.preds = current.preds.iter().enumerate().map(|(w, &p)| if fixed[w].is_some() { 0 } else { p }).collect();
    base.with_state(agents, fixed)
}

/// Relation messages a failure-free run sends.
pub fn expected_relation_messages(poset: &Poset) -> usize {
    poset.graph().covering.len() + poset.opposed.iter().map(|s| 2 * s.len()).sum::<usize>()
}

#[derive(Clone, Copy, PartialEq)]
enum Ev {
    End { w: usize, attempt: u32 },
    Failure { agent: AgentId },
    Arrive { agent: AgentId, trip: u32 },
    Wake,
}

impl Ev {
    fn rank(&self) -> (u8, usize) {
        match *self {
            Ev::End { w, .. } => (0, w),
            Ev::Failure { agent } => (1, agent),
            Ev::Arrive { agent, .. } => (2, agent),
            Ev::Wake => (3, 0),
        }
    }
}

#[derive(Clone, Copy)]
struct Queued {
    time: f64,
    seq: u64,
    ev: Ev,
}

impl PartialEq for Queued {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Queued {
    fn cmp(&self, o: &Self) -> Ordering {
        o.time.total_cmp(&self.time).then(o.ev.rank().cmp(&self.ev.rank())).then(o.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum TaskState {
    Pending,
    Running { start: f64 },
    Done { start: f64, end: f64 },
}

struct AgentRt {
    status: AgentStatus,
    region: RegionId,
    queue: VecDeque<usize>,
    /// Increments on every departure so stale arrivals can be recognised.
    trip: u32,
    /// Nominal arrival while moving.
    eta: f64,
    seg_since: f64,
    seg_task: Option<usize>,
}

struct Sim<'p, 't> {
    inst: Instance<'t>,
    preds: Vec<u64>,
    covering: Vec<(usize, usize)>,
    selfloop_regions: Vec<BTreeSet<RegionId>>,
    cfg: &'p SimConfig,
    rng: ChaCha8Rng,
    t: f64,
    heap: BinaryHeap<Queued>,
    seq: u64,
    agents: Vec<AgentRt>,
    coalition: Vec<Vec<AgentId>>,
    state: Vec<TaskState>,
    attempt: Vec<u32>,
    ever_started: Vec<bool>,
    /// Planned `(first, second)` orderings inside opposed sets.
    resolution: Vec<(usize, usize)>,
    trace: Trace,
}

impl<'p, 't> Sim<'p, 't> {
    fn push(&mut self, time: f64, ev: Ev) {
        self.seq += 1;
        self.heap.push(Queued { time, seq: self.seq, ev });
    }

    fn factor(&mut self) -> f64 {
        if self.cfg.noise == 0.0 {
            1.0
        } else {
            self.rng.gen_range(1.0 - self.cfg.noise..=1.0 + self.cfg.noise)
        }
    }

    fn name(&self, a: AgentId) -> String {
        self.inst.team.agents[a].name.clone()
    }

    fn log(&mut self, kind: EventKind, agent: Option<AgentId>, subtask: Option<usize>) {
        let agent = agent.map(|a| self.name(a));
        self.trace.events.push(SimEvent { time: self.t, kind, agent, subtask });
    }

    fn set_status(&mut self, a: AgentId, st: AgentStatus, task: Option<usize>) {
        let ag = &self.agents[a];
        if ag.status == st && ag.seg_task == task {
            return;
        }
        self.close_segment(a);
        let ag = &mut self.agents[a];
        ag.status = st;
        ag.seg_task = task;
        ag.seg_since = self.t;
    }

    fn close_segment(&mut self, a: AgentId) {
        let ag = &self.agents[a];
        if self.t > ag.seg_since + 1e-12 && ag.status != AgentStatus::Idle {
            let subtask = ag.seg_task.map_or(String::new(), |w| format!("{w}:{}", self.inst.tasks[w].label));
            self.trace.segments.push(Segment {
                agent: self.inst.team.agents[a].name.clone(),
                subtask,
                start: ag.seg_since,
                end: self.t,
                state: ag.status.label().into(),
            });
        }
    }

    fn region_of(&self, w: usize) -> RegionId {
        self.inst.tasks[w].req.region.expect("served tasks have a region")
    }

    /// `r` is closed while a not-yet-started subtask other than `w` restricts it.
    fn closed_region(&self, r: RegionId, w: usize) -> Option<usize> {
        (0..self.state.len()).find(|&x| x != w && !self.ever_started[x] && self.selfloop_regions[x].contains(&r))
    }

    fn dispatch(&mut self, a: AgentId) {
        let st = self.agents[a].status;
        if matches!(st, AgentStatus::Failed | AgentStatus::Moving | AgentStatus::Executing) {
            return;
        }
        let Some(&w) = self.agents[a].queue.front() else {
            self.set_status(a, AgentStatus::Idle, None);
            return;
        };
        let r = self.region_of(w);
        if self.agents[a].region == r {
            self.set_status(a, AgentStatus::WaitingForCollaborators, Some(w));
            return;
        }
        if self.closed_region(r, w).is_some() {
            self.set_status(a, AgentStatus::WaitingForPrecedence, Some(w));
            return;
        }
        let nominal = self.inst.team.travel_time(a, self.agents[a].region, r);
        let leg = nominal * self.factor();
        self.agents[a].trip += 1;
        self.agents[a].eta = self.t + nominal;
        let trip = self.agents[a].trip;
        self.set_status(a, AgentStatus::Moving, Some(w));
        self.push(self.t + leg, Ev::Arrive { agent: a, trip });
    }

    /// Whether every other member of some opposed set with `w` is (or just was) executing.
    fn opposed_blocked(&self, w: usize) -> bool {
        let busy = |x: usize| match self.state[x] {
            TaskState::Running { .. } => true,
            TaskState::Done { end, .. } => end > self.t - OPPOSED_GAP,
            TaskState::Pending => false,
        };
        let all_busy = self.inst.opposed.iter().filter(|s| s.contains(&w)).any(|s| s.iter().filter(|&&x| x != w).all(|&x| busy(x)));
        let planned_first = self.resolution.iter().any(|&(f, s)| s == w && !matches!(self.state[f], TaskState::Done { end, .. } if end <= self.t - OPPOSED_GAP));
        all_busy || planned_first
    }

    fn can_start(&self, w: usize) -> Result<(), AgentStatus> {
        let r = self.region_of(w);
        let members = &self.coalition[w];
        if members.is_empty() {
            return Err(AgentStatus::WaitingForCollaborators);
        }
        for &a in members {
            let ag = &self.agents[a];
            if ag.status == AgentStatus::Failed || ag.queue.front() != Some(&w) || ag.region != r || ag.status == AgentStatus::Moving {
                return Err(AgentStatus::WaitingForCollaborators);
            }
        }
        if bits_of(self.preds[w]).into_iter().any(|p| !self.ever_started[p]) || self.opposed_blocked(w) {
            return Err(AgentStatus::WaitingForPrecedence);
        }
        Ok(())
    }

    fn begin(&mut self, w: usize) {
        let members = self.coalition[w].clone();
        self.state[w] = TaskState::Running { start: self.t };
        self.ever_started[w] = true;
        for &a in &members {
            self.set_status(a, AgentStatus::Executing, Some(w));
            self.log(EventKind::BeginExec, Some(a), Some(w));
        }
        let lead = members.first().copied();
        let succs = self.covering.iter().filter(|e| e.0 == w).count();
        let sets = self.inst.opposed.iter().filter(|s| s.contains(&w)).count();
        for _ in 0..succs + sets {
            self.log(EventKind::StartMsg, lead, Some(w));
        }
        self.trace.messages.relation += succs + sets;
        let d = self.inst.tasks[w].duration() * self.factor();
        let attempt = self.attempt[w];
        self.push(self.t + d, Ev::End { w, attempt });
    }

    fn end(&mut self, w: usize) {
        let TaskState::Running { start } = self.state[w] else { return };
        self.state[w] = TaskState::Done { start, end: self.t };
        let members = self.coalition[w].clone();
        for &a in &members {
            self.log(EventKind::EndExec, Some(a), Some(w));
            self.agents[a].queue.pop_front();
            self.set_status(a, AgentStatus::Idle, None);
        }
        let sets = self.inst.opposed.iter().filter(|s| s.contains(&w)).count();
        for _ in 0..sets {
            self.log(EventKind::StopMsg, members.first().copied(), Some(w));
        }
        self.trace.messages.relation += sets;
        if sets > 0 {
            self.push(self.t + 1.5 * OPPOSED_GAP, Ev::Wake);
        }
    }

    /// Repeatedly dispatches idle agents and starts ready subtasks.
    fn settle(&mut self) {
        loop {
            for a in 0..self.agents.len() {
                self.dispatch(a);
            }
            let mut progressed = false;
            for w in 0..self.state.len() {
                if self.state[w] != TaskState::Pending {
                    continue;
                }
                match self.can_start(w) {
                    Ok(()) => {
                        self.begin(w);
                        progressed = true;
                    }
                    Err(AgentStatus::WaitingForPrecedence) => {
                        for a in self.coalition[w].clone() {
                            self.set_status(a, AgentStatus::WaitingForPrecedence, Some(w));
                        }
                    }
                    Err(_) => {}
                }
            }
            if !progressed {
                break;
            }
        }
    }

    fn arrive(&mut self, a: AgentId, trip: u32) {
        let ag = &self.agents[a];
        if ag.status != AgentStatus::Moving || ag.trip != trip {
            return;
        }
        let w = ag.seg_task.expect("moving agents head somewhere");
        self.agents[a].region = self.region_of(w);
        self.set_status(a, AgentStatus::WaitingForCollaborators, Some(w));
        self.log(EventKind::ArriveAt, Some(a), Some(w));
        let n = self.coalition[w].len();
        if n > 1 && self.agents[a].queue.front() == Some(&w) {
            self.trace.messages.coalition += n - 1;
        }
    }

    fn fail(&mut self, a: AgentId) {
        if self.agents[a].status == AgentStatus::Failed {
            return;
        }
        self.log(EventKind::Failure, Some(a), None);
        if let (AgentStatus::Executing, Some(w)) = (self.agents[a].status, self.agents[a].seg_task) {
            // The subtask restarts from scratch after re-planning.
            self.state[w] = TaskState::Pending;
            self.attempt[w] += 1;
            self.log(EventKind::Interrupt, Some(a), Some(w));
            for m in self.coalition[w].clone() {
                if m != a {
                    self.set_status(m, AgentStatus::Idle, None);
                }
            }
        }
        self.set_status(a, AgentStatus::Failed, None);
        self.agents[a].queue.clear();
        self.inst.agents[a].alive = false;
    }

    fn unfinished(&self) -> Vec<usize> {
        (0..self.state.len()).filter(|&w| !matches!(self.state[w], TaskState::Done { .. })).collect()
    }

    fn replan(&mut self, failed: Vec<AgentId>) -> Result<(), SimError> {
        let unfinished = self.unfinished();
        if unfinished.is_empty() {
            return Ok(());
        }
        let mut fixed = vec![None; self.state.len()];
        for w in 0..self.state.len() {
            if let TaskState::Running { start } | TaskState::Done { start, .. } = self.state[w] {
                let members = self.coalition[w].clone();
                fixed[w] = Some(FixedTask {
                    start,
                    coalition: crate::model::Coalition { members, roles: Vec::new() },
                });
            }
        }
        let mut agents = Vec::new();
        for ag in &self.agents {
            let alive = ag.status != AgentStatus::Failed;
            let (ready, region) = match (ag.status, ag.seg_task) {
                (AgentStatus::Executing, Some(w)) => {
                    let TaskState::Running { start } = self.state[w] else { unreachable!() };
                    ((start + self.inst.tasks[w].duration()).max(self.t), ag.region)
                }
                (AgentStatus::Moving, Some(w)) => (ag.eta.max(self.t), self.region_of(w)),
                _ => (self.t, ag.region),
            };
            agents.push(AgentState { ready, region, alive });
        }
        let mut current = self.inst.clone();
        current.preds = self.preds.clone();
        let residual = residual_instance(&current, agents.clone(), fixed.clone()).map_err(|e| match e {
            PlanError::InfeasibleForTeam(s) => SimError::Irrecoverable { time: self.t, reason: format!("nobody left for {s}") },
            e => SimError::Irrecoverable { time: self.t, reason: e.to_string() },
        })?;
        let clock = Instant::now();
        let r = bnb(&residual, &self.cfg.replan, |_| {});
        let planning_secs = clock.elapsed().as_secs_f64();
        let Some((node, sched)) = r.best else {
            return Err(SimError::Irrecoverable { time: self.t, reason: "no residual plan within budget".into() });
        };
        self.install(&residual, &node, &sched);
        self.trace.replans.push(Replan {
            time: self.t,
            failed: failed.iter().map(|&a| self.name(a)).collect(),
            makespan: sched.makespan,
            unfinished,
            agents,
            fixed,
            node,
            planning_secs,
        });
        self.log(EventKind::Replan, None, None);
        self.inst = residual;
        Ok(())
    }

    fn install(&mut self, inst: &Instance, node: &Node, sched: &Schedule) {
        for w in 0..inst.len() {
            if inst.fixed[w].is_none() {
                let c = node.coalition_of[w].expect("complete node");
                self.coalition[w] = inst.tasks[w].coalitions[c].members.clone();
            }
        }
        for (a, seq) in node.seqs.iter().enumerate() {
            let ag = &mut self.agents[a];
            if ag.status == AgentStatus::Failed {
                continue;
            }
            let running = match (ag.status, ag.seg_task) {
                (AgentStatus::Executing, Some(w)) => Some(w),
                _ => None,
            };
            ag.queue = running.into_iter().chain(seq.iter().copied()).collect();
            if ag.status != AgentStatus::Moving && ag.status != AgentStatus::Executing {
                ag.status = AgentStatus::Idle;
            }
        }
        self.resolution = sched.resolution.clone();
    }
}

/// Executes `node`'s assignment under the synchronisation protocol.
pub fn simulate(inst: &Instance, poset: &Poset, node: &Node, sched: &Schedule, cfg: &SimConfig) -> Result<Trace, SimError> {
    if !(0.0..1.0).contains(&cfg.noise) {
        return Err(SimError::BadNoise);
    }
    let graph = poset.graph();
    let selfloop_regions: Vec<BTreeSet<RegionId>> = poset
        .subtasks
        .iter()
        .map(|s| poset.names(s.selfloop_neg).iter().filter_map(|n| inst.team.region_id(n)).collect())
        .collect();
    let n = inst.len();
    let mut sim = Sim {
        inst: inst.clone(),
        preds: graph.preds.clone(),
        covering: graph.covering.clone(),
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        t: 0.0,
        heap: BinaryHeap::new(),
        seq: 0,
        agents: inst
            .agents
            .iter()
            .enumerate()
            .map(|(a, st)| AgentRt {
                status: AgentStatus::Idle,
                region: st.region,
                queue: node.seqs[a].iter().copied().collect(),
                trip: 0,
                eta: 0.0,
                seg_since: 0.0,
                seg_task: None,
            })
            .collect(),
        coalition: (0..n)
            .map(|w| node.coalition_of[w].map_or_else(Vec::new, |c| inst.tasks[w].coalitions[c].members.clone()))
            .collect(),
        state: vec![TaskState::Pending; n],
        attempt: vec![0; n],
        ever_started: vec![false; n],
        resolution: sched.resolution.clone(),
        trace: Trace {
            events: Vec::new(),
            windows: Vec::new(),
            replans: Vec::new(),
            messages: MessageCounts::default(),
            makespan: 0.0,
            segments: Vec::new(),
        },
        selfloop_regions,
    };
    sim.trace.messages.selfloop = sim.selfloop_regions.iter().filter(|s| !s.is_empty()).count();
    let mut failures = cfg.failures.clone();
    failures.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    for (a, t) in failures {
        sim.push(t, Ev::Failure { agent: a });
    }
    sim.settle();
    while let Some(first) = sim.heap.pop() {
        sim.t = first.time;
        let mut batch = vec![first.ev];
        while sim.heap.peek().is_some_and(|q| q.time == first.time) {
            batch.push(sim.heap.pop().unwrap().ev);
        }
        let mut failed = Vec::new();
        for ev in batch {
            match ev {
                Ev::End { w, attempt } if attempt == sim.attempt[w] => sim.end(w),
                Ev::End { .. } => {}
                Ev::Arrive { agent, trip } => sim.arrive(agent, trip),
                Ev::Failure { agent } => {
                    sim.fail(agent);
                    failed.push(agent);
                }
                Ev::Wake => {}
            }
        }
        if !failed.is_empty() {
            sim.replan(failed)?;
        }
        sim.settle();
        if sim.unfinished().is_empty() && sim.heap.iter().all(|q| matches!(q.ev, Ev::Failure { .. })) {
            break;
        }
    }
    let unfinished = sim.unfinished();
    if !unfinished.is_empty() {
        let waits = unfinished
            .iter()
            .map(|&w| {
                let who: Vec<String> = sim.coalition[w]
                    .iter()
                    .map(|&a| format!("{}:{}", sim.name(a), sim.agents[a].status.label()))
                    .collect();
                let blockers: Vec<String> = bits_of(sim.preds[w])
                    .into_iter()
                    .filter(|&p| !sim.ever_started[p])
                    .map(|p| p.to_string())
                    .collect();
                format!("{w} [{}] waits for [{}]", who.join(","), blockers.join(","))
            })
            .collect();
        return Err(SimError::Deadlock { time: sim.t, waits });
    }
    for a in 0..sim.agents.len() {
        sim.close_segment(a);
    }
    sim.trace.windows = sim
        .state
        .iter()
        .map(|s| match *s {
            TaskState::Done { start, end } => (start, end),
            _ => unreachable!(),
        })
        .collect();
    sim.trace.makespan = sim.trace.windows.iter().map(|w| w.1).fold(0.0, f64::max);
    Ok(sim.trace)
}

//! Workspace, agents and collaborative behaviours, plus the mapping from
//! atomic propositions to concrete service requirements.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type RegionId = usize;
pub type AgentId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("unknown region `{0}`")]
    UnknownRegion(String),
    #[error("subtask mentions atoms in more than one region: {0:?}")]
    MultiRegionSubtask(Vec<String>),
    #[error("atom `{0}` names no region, local action or behaviour")]
    UnknownAtom(String),
    #[error("no coalition of the team can serve `{0}`")]
    NoCoalition(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RegionSpec {
    pub id: usize,
    pub name: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AgentSpec {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub initial: String,
    #[serde(default)]
    pub local_actions: BTreeMap<String, f64>,
    #[serde(default)]
    pub collab_actions: BTreeSet<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Behavior {
    pub name: String,
    /// Collaborative actions, one entry per participating agent.
    pub requires: Vec<String>,
    pub duration: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FailureSpec {
    pub agent: String,
    pub time: f64,
}

/// Serialized scenario. `distances` lists travel times in seconds per agent
/// type as `[from, to, seconds]` triples over a road graph.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Scenario {
    pub regions: Vec<RegionSpec>,
    pub distances: BTreeMap<String, Vec<(String, String, f64)>>,
    #[serde(default)]
    pub directed: bool,
    pub agents: Vec<AgentSpec>,
    pub behaviors: Vec<Behavior>,
    #[serde(default)]
    pub failures: Vec<FailureSpec>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Invalid(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub name: String,
    pub kind: usize,
    pub start: RegionId,
    pub local: BTreeMap<String, f64>,
    pub collab: BTreeSet<String>,
}

impl Agent {
    pub fn can(&self, action: &str) -> bool {
        self.local.contains_key(action) || self.collab.contains(action)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AtomKind {
    Region(RegionId),
    LocalAction { action: String, region: RegionId },
    CollabAction { behavior: String, region: RegionId },
}

/// Validated scenario with precomputed travel times.
#[derive(Debug, Clone)]
pub struct Team {
    pub regions: Vec<String>,
    pub agents: Vec<Agent>,
    pub kinds: Vec<String>,
    pub behaviors: BTreeMap<String, Behavior>,
    /// `travel[kind][from][to]`, infinite when unreachable.
    travel: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Copy, PartialEq)]
struct Dist(f64, usize);
impl Eq for Dist {}
impl Ord for Dist {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}
impl PartialOrd for Dist {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], src: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    dist[src] = 0.0;
    let mut heap = BinaryHeap::from([Dist(0.0, src)]);
    while let Some(Dist(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Dist(nd, v));
            }
        }
    }
    dist
}

impl Team {
    pub fn new(s: &Scenario) -> Result<Team, ModelError> {
        let mut regions = vec![String::new(); s.regions.len()];
        for r in &s.regions {
            if r.id >= regions.len() || !regions[r.id].is_empty() {
                return Err(ModelError::Invalid(format!("region ids must be 0..{} without gaps", regions.len())));
            }
            regions[r.id] = r.name.clone();
        }
        let rid = |name: &str| regions.iter().position(|r| r == name).ok_or_else(|| ModelError::UnknownRegion(name.into()));
        let kinds: Vec<String> = s.agents.iter().map(|a| a.kind.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        let mut travel = Vec::new();
        for k in &kinds {
            let edges = s.distances.get(k).ok_or_else(|| ModelError::Invalid(format!("no distances for agent type `{k}`")))?;
            let mut adj = vec![Vec::new(); regions.len()];
            for (a, b, w) in edges {
                if !(*w >= 0.0 && w.is_finite()) {
                    return Err(ModelError::Invalid(format!("travel time {a}->{b} must be finite and non-negative")));
                }
                let (ia, ib) = (rid(a)?, rid(b)?);
                adj[ia].push((ib, *w));
                if !s.directed {
                    adj[ib].push((ia, *w));
                }
            }
            travel.push((0..regions.len()).map(|r| dijkstra(&adj, r)).collect());
        }
        let mut agents = Vec::new();
        let mut names = BTreeSet::new();
        for a in &s.agents {
            if !names.insert(a.id.clone()) {
                return Err(ModelError::Invalid(format!("duplicate agent id `{}`", a.id)));
            }
            agents.push(Agent {
                name: a.id.clone(),
                kind: kinds.iter().position(|k| *k == a.kind).unwrap(),
                start: rid(&a.initial)?,
                local: a.local_actions.clone(),
                collab: a.collab_actions.clone(),
            });
        }
        let mut behaviors = BTreeMap::new();
        for b in &s.behaviors {
            if b.requires.is_empty() || !(b.duration >= 0.0) {
                return Err(ModelError::Invalid(format!("behaviour `{}` needs participants and a duration", b.name)));
            }
            behaviors.insert(b.name.clone(), b.clone());
        }
        Ok(Team { regions, agents, kinds, behaviors, travel })
    }

    pub fn from_json(text: &str) -> Result<Team, ModelError> {
        Team::new(&Scenario::from_json(text)?)
    }

    pub fn region_id(&self, name: &str) -> Option<RegionId> {
        self.regions.iter().position(|r| r == name)
    }

    pub fn agent_id(&self, name: &str) -> Option<AgentId> {
        self.agents.iter().position(|a| a.name == name)
    }

    pub fn travel_time(&self, agent: AgentId, from: RegionId, to: RegionId) -> f64 {
        self.travel[self.agents[agent].kind][from][to]
    }

    pub fn can_reach(&self, agent: AgentId, region: RegionId) -> bool {
        self.travel_time(agent, self.agents[agent].start, region).is_finite()
    }

    pub fn classify(&self, atom: &str) -> Result<AtomKind, ModelError> {
        if let Some(r) = self.region_id(atom) {
            return Ok(AtomKind::Region(r));
        }
        let (action, region) = atom.rsplit_once('_').ok_or_else(|| ModelError::UnknownAtom(atom.into()))?;
        let region = self.region_id(region).ok_or_else(|| ModelError::UnknownAtom(atom.into()))?;
        if self.behaviors.contains_key(action) {
            return Ok(AtomKind::CollabAction { behavior: action.into(), region });
        }
        if self.agents.iter().any(|a| a.local.contains_key(action)) {
            return Ok(AtomKind::LocalAction { action: action.into(), region });
        }
        Err(ModelError::UnknownAtom(atom.into()))
    }

    /// Atoms no coalition of this team can ever make true.
    pub fn infeasible_atoms<'a>(&self, atoms: impl IntoIterator<Item = &'a String>) -> BTreeSet<String> {
        atoms
            .into_iter()
            .filter(|a| match ground(&[(*a).clone()], &[], self) {
                Ok(req) => coalitions(&req, self, &vec![true; self.agents.len()]).is_empty(),
                Err(_) => true,
            })
            .cloned()
            .collect()
    }
}

/// What a subtask needs: where, which actions (one per participant) and for how long.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServiceRequirement {
    pub region: Option<RegionId>,
    pub needed: Vec<String>,
    pub duration: f64,
    pub forbidden: BTreeSet<RegionId>,
}

impl ServiceRequirement {
    pub fn participants(&self) -> usize {
        self.needed.len()
    }
}

/// Role name used when an agent only has to be present in a region.
pub const VISIT: &str = "visit";

/// Maps a subtask's positive and negative atoms to a requirement.
pub fn ground(positive: &[String], negative: &[String], team: &Team) -> Result<ServiceRequirement, ModelError> {
    let mut region: Option<RegionId> = None;
    let mut needed = Vec::new();
    let mut duration: f64 = 0.0;
    let mut presence = false;
    for atom in positive {
        let kind = team.classify(atom)?;
        let r = match &kind {
            AtomKind::Region(r) | AtomKind::LocalAction { region: r, .. } | AtomKind::CollabAction { region: r, .. } => *r,
        };
        if region.is_some_and(|x| x != r) {
            return Err(ModelError::MultiRegionSubtask(positive.to_vec()));
        }
        region = Some(r);
        match kind {
            AtomKind::Region(_) => presence = true,
            AtomKind::LocalAction { action, .. } => {
                let d = team.agents.iter().filter_map(|a| a.local.get(&action)).fold(0.0, |m: f64, d| m.max(*d));
                duration = duration.max(d);
                needed.push(action);
            }
            AtomKind::CollabAction { behavior, .. } => {
                let b = &team.behaviors[&behavior];
                duration = duration.max(b.duration);
                needed.extend(b.requires.iter().cloned());
            }
        }
    }
    if presence && needed.is_empty() {
        needed.push(VISIT.into());
    }
    needed.sort();
    let forbidden = negative.iter().filter_map(|a| team.region_id(a)).collect();
    Ok(ServiceRequirement { region, needed, duration, forbidden })
}

/// A set of distinct agents together with the action each one performs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Coalition {
    pub members: Vec<AgentId>,
    pub roles: Vec<String>,
}

fn assign_roles(members: &[AgentId], needed: &[String], team: &Team) -> Option<Vec<String>> {
    fn go(k: usize, members: &[AgentId], left: &mut Vec<String>, team: &Team, out: &mut Vec<String>) -> bool {
        if k == members.len() {
            return left.is_empty();
        }
        let agent = &team.agents[members[k]];
        let mut tried = BTreeSet::new();
        for i in 0..left.len() {
            let act = left[i].clone();
            if !tried.insert(act.clone()) || !(act == VISIT || agent.can(&act)) {
                continue;
            }
            left.remove(i);
            out.push(act.clone());
            if go(k + 1, members, left, team, out) {
                return true;
            }
            out.pop();
            left.insert(i, act);
        }
        false
    }
    let mut left = needed.to_vec();
    let mut out = Vec::new();
    go(0, members, &mut left, team, &mut out).then_some(out)
}

/// Every minimal coalition of live agents covering `req`, in sorted order.
/// Requirements without a region or actions have a single empty coalition.
pub fn coalitions(req: &ServiceRequirement, team: &Team, alive: &[bool]) -> Vec<Coalition> {
    let k = req.participants();
    if k == 0 {
        return vec![Coalition { members: Vec::new(), roles: Vec::new() }];
    }
    let region = req.region.expect("actions always carry a region");
    let eligible: Vec<AgentId> = (0..team.agents.len())
        .filter(|&a| alive[a] && team.can_reach(a, region))
        .filter(|&a| req.needed.iter().any(|n| n == VISIT || team.agents[a].can(n)))
        .collect();
    let mut out = Vec::new();
    let mut pick = Vec::with_capacity(k);
    fn rec(start: usize, k: usize, el: &[AgentId], pick: &mut Vec<AgentId>, req: &ServiceRequirement, team: &Team, out: &mut Vec<Coalition>) {
        if pick.len() == k {
            if let Some(roles) = assign_roles(pick, &req.needed, team) {
                out.push(Coalition { members: pick.clone(), roles });
            }
            return;
        }
        for i in start..el.len() {
            if el.len() - i < k - pick.len() {
                break;
            }
            pick.push(el[i]);
            rec(i + 1, k, el, pick, req, team, out);
            pick.pop();
        }
    }
    rec(0, k, &eligible, &mut pick, req, team, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Team {
        let s = r#"{
          "regions": [{"id":0,"name":"b"},{"id":1,"name":"p1"},{"id":2,"name":"p2"}],
          "distances": {"A": [["b","p1",3.0],["p1","p2",4.0]], "B": [["b","p1",10.0]]},
          "agents": [
            {"id":"a1","type":"A","initial":"b","local_actions":{"sweep":5.0},"collab_actions":["lift"]},
            {"id":"a2","type":"A","initial":"b","collab_actions":["lift"]},
            {"id":"b1","type":"B","initial":"b","collab_actions":["lift","hold"]}
          ],
          "behaviors": [{"name":"carry","requires":["lift","hold"],"duration":7.0}]
        }"#;
        Team::from_json(s).unwrap()
    }

    #[test]
    fn travel_times_follow_shortest_paths() {
        let t = tiny();
        assert_eq!(t.travel_time(0, 0, 2), 7.0);
        assert_eq!(t.travel_time(2, 1, 0), 10.0);
        assert!(t.travel_time(2, 0, 2).is_infinite());
    }

    #[test]
    fn classification_and_grounding() {
        let t = tiny();
        assert_eq!(t.classify("p1"), Ok(AtomKind::Region(1)));
        assert_eq!(t.classify("sweep_p2"), Ok(AtomKind::LocalAction { action: "sweep".into(), region: 2 }));
        assert!(matches!(t.classify("carry_p1"), Ok(AtomKind::CollabAction { .. })));
        assert!(t.classify("dance_p1").is_err());
        let r = ground(&["carry_p1".into()], &["p2".into()], &t).unwrap();
        assert_eq!(r.needed, vec!["hold".to_string(), "lift".to_string()]);
        assert_eq!(r.duration, 7.0);
        assert_eq!(r.forbidden, BTreeSet::from([2]));
        assert!(matches!(ground(&["sweep_p1".into(), "sweep_p2".into()], &[], &t), Err(ModelError::MultiRegionSubtask(_))));
        let presence = ground(&["p2".into()], &[], &t).unwrap();
        assert_eq!((presence.participants(), presence.duration), (1, 0.0));
    }

    #[test]
    fn coalitions_are_bijective_covers() {
        let t = tiny();
        let r = ground(&["carry_p1".into()], &[], &t).unwrap();
        let cs = coalitions(&r, &t, &[true; 3]);
        assert_eq!(cs.len(), 2);
        assert!(cs.iter().all(|c| c.members.contains(&2)));
        // b1 cannot reach p2, so carrying there is impossible.
        let r2 = ground(&["carry_p2".into()], &[], &t).unwrap();
        assert!(coalitions(&r2, &t, &[true; 3]).is_empty());
        let inf = t.infeasible_atoms(&["carry_p2".to_string(), "carry_p1".to_string()]);
        assert_eq!(inf, BTreeSet::from(["carry_p2".to_string()]));
    }
}

//! End to end: automaton, pruning, poset mining and assignment search.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use super::{bnb, BnbConfig, Improvement, Instance, LbMode, Node, PlanError, Schedule, Task};
use crate::automaton::{parse_hoa, translate, Nba};
use crate::ltl::parse;
use crate::model::Team;
use crate::poset::{MiningConfig, Poset, PosetMiner};
use crate::pruning::{prune, PruneReport};

pub enum PlanSource<'s> {
    Formula(&'s str),
    Hoa(&'s str),
}

impl PlanSource<'_> {
    pub fn automaton(&self) -> Result<Nba, PlanError> {
        Ok(match self {
            PlanSource::Formula(f) => translate(&parse(f)?)?,
            PlanSource::Hoa(h) => parse_hoa(h)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct PlanConfig {
    pub poset_budget: Duration,
    pub bnb_budget: Duration,
    pub lb_mode: LbMode,
    pub opposed_arity: usize,
    pub jobs: usize,
    /// Best-ranked posets that get an assignment search.
    pub posets_to_search: usize,
    pub node_limit: Option<usize>,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            poset_budget: Duration::from_secs(5),
            bnb_budget: Duration::from_secs(10),
            lb_mode: LbMode::Min,
            opposed_arity: 3,
            jobs: 1,
            posets_to_search: 3,
            node_limit: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub pruned: Nba,
    pub prune_report: PruneReport,
    pub posets: Vec<Poset>,
    pub poset: Poset,
    pub tasks: Vec<Task>,
    pub node: Node,
    pub schedule: Schedule,
    pub history: Vec<Improvement>,
    pub nodes_expanded: usize,
    pub pruned_pct: f64,
    pub proven: bool,
}

impl PlanOutcome {
    pub fn makespan(&self) -> f64 {
        self.schedule.makespan
    }
    /// Rebuilds the assignment problem the outcome was found for.
    pub fn instance<'t>(&self, team: &'t Team) -> Instance<'t> {
        Instance::from_poset(&self.poset, team).expect("poset was grounded before")
    }
}

/// Ranks posets: largest language first, then fewest precedence edges.
pub fn rank_posets(posets: &mut [Poset]) {
    posets.sort_by_key(|p| (std::cmp::Reverse(p.language_size), p.graph().covering.len(), p.id));
}

pub fn plan(
    source: PlanSource,
    team: &Team,
    cfg: &PlanConfig,
    progress: &(dyn Fn(&Improvement) + Sync),
) -> Result<PlanOutcome, PlanError> {
    let t0 = Instant::now();
    let nba = source.automaton()?;
    let infeasible = team.infeasible_atoms(&nba.ap);
    let (pruned, report) = prune(&nba, &infeasible).map_err(|_| PlanError::Unsatisfiable)?;
    let mining = MiningConfig { budget: cfg.poset_budget, opposed_arity: cfg.opposed_arity, max_posets: usize::MAX };
    let mut posets: Vec<Poset> = PosetMiner::new(&pruned, mining).collect();
    if posets.is_empty() {
        return Err(PlanError::NoSolution);
    }
    rank_posets(&mut posets);
    let mut candidates: Vec<(usize, Instance)> = Vec::new();
    let mut last_err = None;
    for (k, p) in posets.iter().enumerate() {
        match Instance::from_poset(p, team) {
            Ok(inst) => candidates.push((k, inst)),
            Err(e) => last_err = Some(e),
        }
        if candidates.len() >= cfg.posets_to_search.max(1) {
            break;
        }
    }
    if candidates.is_empty() {
        return Err(match last_err {
            Some(PlanError::Model(e)) => PlanError::InfeasibleForTeam(e.to_string()),
            Some(e) => e,
            None => PlanError::NoSolution,
        });
    }
    let bcfg = BnbConfig { budget: cfg.bnb_budget, node_limit: cfg.node_limit, lb_mode: cfg.lb_mode };
    // Improvements are reported against the best plan over all posets.
    let global = Mutex::new((f64::INFINITY, Vec::<Improvement>::new()));
    let report_improvement = |imp: &Improvement| {
        let mut g = global.lock().unwrap();
        if imp.makespan < g.0 - 1e-9 {
            let at = Improvement { elapsed: t0.elapsed().as_secs_f64(), makespan: imp.makespan };
            g.0 = imp.makespan;
            g.1.push(at);
            progress(&at);
        }
    };
    let results: Vec<_> = if cfg.jobs > 1 {
        std::thread::scope(|s| {
            let handles: Vec<_> = candidates
                .iter()
                .map(|(k, inst)| {
                    let bcfg = &bcfg;
                    let report = &report_improvement;
                    s.spawn(move || (*k, bnb(inst, bcfg, report)))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("search thread panicked")).collect()
        })
    } else {
        candidates.iter().map(|(k, inst)| (*k, bnb(inst, &bcfg, report_improvement))).collect()
    };
    let mut best: Option<(usize, super::BnbResult)> = None;
    let mut expanded = 0;
    for (k, r) in results {
        expanded += r.nodes_expanded;
        let better = match (&best, r.makespan()) {
            (_, None) => false,
            (None, Some(_)) => true,
            (Some((_, b)), Some(m)) => m < b.makespan().unwrap() - 1e-9,
        };
        if better {
            best = Some((k, r));
        }
    }
    let (k, r) = best.ok_or(PlanError::NoSolution)?;
    let (node, schedule) = r.best.clone().unwrap();
    let tasks = candidates.iter().find(|c| c.0 == k).unwrap().1.tasks.clone();
    let history = global.into_inner().unwrap().1;
    Ok(PlanOutcome {
        pruned,
        prune_report: report,
        poset: posets[k].clone(),
        posets,
        tasks,
        node,
        schedule,
        history,
        nodes_expanded: expanded,
        pruned_pct: r.pruned_pct(),
        proven: r.proven,
    })
}

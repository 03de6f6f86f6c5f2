//! Best-first branch and bound over partial assignments.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use super::{lower_bound, schedule, upper_bound, Instance, LbMode, Node, Schedule};

#[derive(Debug, Clone)]
pub struct BnbConfig {
    pub budget: Duration,
    pub node_limit: Option<usize>,
    pub lb_mode: LbMode,
}

impl Default for BnbConfig {
    fn default() -> Self {
        BnbConfig { budget: Duration::from_secs(10), node_limit: None, lb_mode: LbMode::Min }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Improvement {
    pub elapsed: f64,
    pub makespan: f64,
}

#[derive(Debug, Clone)]
pub struct BnbResult {
    pub best: Option<(Node, Schedule)>,
    pub history: Vec<Improvement>,
    pub nodes_expanded: usize,
    pub nodes_generated: usize,
    pub nodes_pruned: usize,
    /// The queue emptied, so the incumbent is optimal.
    pub proven: bool,
}

impl BnbResult {
    pub fn makespan(&self) -> Option<f64> {
        self.best.as_ref().map(|b| b.1.makespan)
    }
    pub fn pruned_pct(&self) -> f64 {
        if self.nodes_generated == 0 {
            0.0
        } else {
            100.0 * self.nodes_pruned as f64 / self.nodes_generated as f64
        }
    }
}

struct Entry {
    lb: f64,
    seq: u64,
    node: Node,
}

impl PartialEq for Entry {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Entry {
    // Max-heap: smaller bound first, then older entries first.
    fn cmp(&self, o: &Self) -> Ordering {
        o.lb.total_cmp(&self.lb).then(o.seq.cmp(&self.seq))
    }
}

const EPS: f64 = 1e-9;

/// Searches for a minimum-makespan assignment. `on_improve` sees every new
/// incumbent; the history it builds is strictly decreasing.
pub fn bnb(inst: &Instance, cfg: &BnbConfig, mut on_improve: impl FnMut(&Improvement)) -> BnbResult {
    let t0 = Instant::now();
    let mut res = BnbResult {
        best: None,
        history: Vec::new(),
        nodes_expanded: 0,
        nodes_generated: 1,
        nodes_pruned: 0,
        proven: false,
    };
    let mut incumbent = f64::INFINITY;
    let mut offer = |node: Node, res: &mut BnbResult, incumbent: &mut f64| {
        if let Some(s) = schedule(inst, &node) {
            if s.makespan < *incumbent - EPS {
                *incumbent = s.makespan;
                let imp = Improvement { elapsed: t0.elapsed().as_secs_f64(), makespan: s.makespan };
                res.history.push(imp);
                on_improve(&imp);
                res.best = Some((node, s));
            }
        }
    };
    let root = Node::root(inst);
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Entry { lb: lower_bound(inst, &root, cfg.lb_mode), seq, node: root });
    loop {
        let Some(Entry { lb, node, .. }) = heap.pop() else {
            res.proven = true;
            break;
        };
        if res.nodes_expanded > 0 && t0.elapsed() >= cfg.budget || cfg.node_limit.is_some_and(|l| res.nodes_expanded >= l.max(1)) {
            break;
        }
        if lb >= incumbent - EPS {
            res.nodes_pruned += 1;
            continue;
        }
        res.nodes_expanded += 1;
        if node.is_complete(inst) {
            offer(node, &mut res, &mut incumbent);
            continue;
        }
        if let Some((done, _)) = upper_bound(inst, &node) {
            offer(done, &mut res, &mut incumbent);
        }
        for child in node.children(inst) {
            res.nodes_generated += 1;
            let clb = lower_bound(inst, &child, cfg.lb_mode);
            if clb < incumbent - EPS {
                seq += 1;
                heap.push(Entry { lb: clb, seq, node: child });
            } else {
                res.nodes_pruned += 1;
            }
        }
    }
    res
}

//! Automaton reduction before task mining: drop letters the team cannot
//! produce, trim useless states, and delete edges that can be replaced by a
//! two-step detour through a third state.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::automaton::{Cube, Guard, Nba, StateId};

/// Atom support above which the decomposability test is skipped.
pub const SUPPORT_CAP: u32 = 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PruneError {
    #[error("no accepting run survives pruning; the mission is unsatisfiable for this team")]
    Unsatisfiable,
}

#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct PruneReport {
    pub states_initial: usize,
    pub edges_initial: usize,
    pub states_after_infeasible: usize,
    pub edges_after_infeasible: usize,
    pub edges_decomposable_removed: usize,
    pub states_final: usize,
    pub edges_final: usize,
}

impl PruneReport {
    pub fn state_reduction_pct(&self) -> f64 {
        pct(self.states_initial, self.states_final)
    }
    pub fn edge_reduction_pct(&self) -> f64 {
        pct(self.edges_initial, self.edges_final)
    }
    pub fn infeasible_state_pct(&self) -> f64 {
        pct(self.states_initial, self.states_after_infeasible)
    }
    pub fn infeasible_edge_pct(&self) -> f64 {
        pct(self.edges_initial, self.edges_after_infeasible)
    }
    pub fn decomposable_edge_pct(&self) -> f64 {
        if self.edges_after_infeasible == 0 {
            0.0
        } else {
            100.0 * self.edges_decomposable_removed as f64 / self.edges_after_infeasible as f64
        }
    }

    pub fn summary_lines(&self) -> Vec<String> {
        vec![
            format!(
                "infeasible atoms: states {} -> {} ({:.1}% removed), edges {} -> {} ({:.1}% removed)",
                self.states_initial,
                self.states_after_infeasible,
                self.infeasible_state_pct(),
                self.edges_initial,
                self.edges_after_infeasible,
                self.infeasible_edge_pct()
            ),
            format!(
                "decomposable edges removed: {} ({:.1}%)",
                self.edges_decomposable_removed,
                self.decomposable_edge_pct()
            ),
            format!(
                "total: states {} -> {} ({:.1}%), edges {} -> {} ({:.1}%)",
                self.states_initial,
                self.states_final,
                self.state_reduction_pct(),
                self.edges_initial,
                self.edges_final,
                self.edge_reduction_pct()
            ),
        ]
    }
}

fn pct(before: usize, after: usize) -> f64 {
    if before == 0 {
        0.0
    } else {
        100.0 * (before.saturating_sub(after)) as f64 / before as f64
    }
}

/// Forces every infeasible atom false on every edge. Conjoining keeps letters
/// that mention those atoms out of the language entirely.
pub fn remove_infeasible(nba: &Nba, infeasible: &BTreeSet<String>) -> Nba {
    let mask = infeasible.iter().filter_map(|a| nba.ap_index(a)).fold(0u64, |m, i| m | 1 << i);
    let mut out = nba.clone();
    for m in out.trans.iter_mut() {
        let old = std::mem::take(m);
        for (t, g) in old {
            let g = g.and_cube(&Cube { pos: 0, neg: mask });
            if g.is_sat() {
                m.insert(t, g);
            }
        }
    }
    out
}

/// Keeps states that are reachable and can still reach acceptance.
pub fn trim(nba: &Nba) -> Result<Nba, PruneError> {
    let r = nba.reachable();
    let c = nba.coreachable();
    let keep: Vec<bool> = r.iter().zip(&c).map(|(a, b)| *a && *b).collect();
    let out = nba.restrict(&keep);
    if out.initial.is_empty() || !out.accepting.iter().any(|&a| a) {
        return Err(PruneError::Unsatisfiable);
    }
    Ok(out)
}

/// Whether every letter `A ∪ B` with `A` from `first` and `B` from `second`
/// satisfies `direct`, checked cube pair by cube pair over the joint support.
pub fn decomposable(first: &Guard, second: &Guard, direct: &Guard) -> bool {
    let universe = first.support() | second.support() | direct.support();
    if universe.count_ones() > SUPPORT_CAP {
        return false;
    }
    for c1 in first.cubes() {
        for c2 in second.cubes() {
            let p = c1.pos | c2.pos;
            let free = ((universe & !c1.vars()) | (universe & !c2.vars())) & !p;
            let zero = universe & !p & !free;
            if !direct.cofactor(&Cube { pos: p, neg: zero }).is_tautology() {
                return false;
            }
        }
    }
    true
}

/// Removes edges `i -> j` that some `i -> k -> j` can stand in for. Edges are
/// visited in (source, target) order against the automaton as it shrinks, so
/// a removed edge never serves as a detour for a later one.
pub fn remove_decomposable(nba: &Nba) -> (Nba, usize) {
    let mut out = nba.clone();
    let pairs: Vec<(StateId, StateId)> = nba.edges().filter(|(i, j, _)| i != j).map(|(i, j, _)| (i, j)).collect();
    let mut removed = 0;
    for (i, j) in pairs {
        let Some(direct) = out.guard(i, j).cloned() else { continue };
        let detour = (0..out.num_states()).filter(|&k| k != i && k != j).any(|k| {
            let (Some(a), Some(b)) = (out.guard(i, k), out.guard(k, j)) else { return false };
            direct.implies(&a.and(b)) && decomposable(a, b, &direct)
        });
        if detour {
            out.trans[i].remove(&j);
            removed += 1;
        }
    }
    (out, removed)
}

pub fn prune(nba: &Nba, infeasible: &BTreeSet<String>) -> Result<(Nba, PruneReport), PruneError> {
    let mut report = PruneReport { states_initial: nba.num_states(), edges_initial: nba.num_edges(), ..Default::default() };
    let a = trim(&remove_infeasible(nba, infeasible))?;
    report.states_after_infeasible = a.num_states();
    report.edges_after_infeasible = a.num_edges();
    let (b, removed) = remove_decomposable(&a);
    report.edges_decomposable_removed = removed;
    let c = trim(&b)?;
    report.states_final = c.num_states();
    report.edges_final = c.num_edges();
    Ok((c, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{translate, Letter};
    use crate::ltl::parse;

    #[test]
    fn infeasible_atom_blocks_its_letters() {
        let nba = translate(&parse("F (sweep_p1 && !mow_p1) || F mow_p1").unwrap()).unwrap();
        let inf: BTreeSet<String> = ["mow_p1".to_string()].into();
        let only = remove_infeasible(&nba, &inf);
        assert!(only.accepts(&[only.letter(["sweep_p1"])]));
        let (p, _) = prune(&nba, &inf).unwrap();
        let sweep = p.letter(["sweep_p1"]);
        let mow = p.letter(["mow_p1"]);
        // The direct edge may be replaced by a detour, which needs a stutter.
        assert!(p.accepts(&[sweep, sweep]));
        assert!(!p.accepts(&[mow]));
        assert!(!p.accepts(&[sweep | mow]));
    }

    #[test]
    fn unsatisfiable_when_everything_is_infeasible() {
        let nba = translate(&parse("F a").unwrap()).unwrap();
        let inf: BTreeSet<String> = ["a".to_string()].into();
        assert_eq!(prune(&nba, &inf).unwrap_err(), PruneError::Unsatisfiable);
    }

    #[test]
    fn decomposable_edge_is_removed() {
        // F a && F b: the direct edge on {a,b} decomposes through either
        // single-obligation state.
        let nba = translate(&parse("F a && F b").unwrap()).unwrap();
        let (p, report) = prune(&nba, &BTreeSet::new()).unwrap();
        assert!(report.edges_decomposable_removed >= 1);
        let a: Letter = p.letter(["a"]);
        let b: Letter = p.letter(["b"]);
        assert!(p.accepts(&[a, b]));
        assert!(p.accepts(&[a | b, a | b]));
    }
}

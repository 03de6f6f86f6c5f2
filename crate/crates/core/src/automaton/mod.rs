//! Büchi automata over finite informative prefixes, built from formulas or
//! read from HOA files.

mod guard;
mod hoa;
mod tableau;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

pub use guard::{bits_of, Cube, Guard, GuardDisplay, Letter};
pub use hoa::{parse_hoa, to_hoa};
pub use tableau::translate;

pub type StateId = usize;

#[derive(Debug, Error)]
pub enum AutomatonError {
    #[error("formula uses {0} atomic propositions; at most 64 are supported")]
    TooManyAtoms(usize),
    #[error("HOA line {line}: {msg}")]
    Hoa { line: usize, msg: String },
    #[error("unsupported HOA feature: {0}")]
    HoaUnsupported(String),
    #[error(transparent)]
    Ltl(#[from] crate::ltl::LtlError),
}

#[derive(Debug, Clone)]
pub struct Nba {
    pub ap: Vec<String>,
    pub labels: Vec<String>,
    pub initial: Vec<StateId>,
    pub accepting: Vec<bool>,
    /// Outgoing transitions per state, at most one merged guard per target.
    pub trans: Vec<BTreeMap<StateId, Guard>>,
}

impl Nba {
    pub fn new(ap: Vec<String>) -> Nba {
        Nba { ap, labels: Vec::new(), initial: Vec::new(), accepting: Vec::new(), trans: Vec::new() }
    }

    pub fn add_state(&mut self, label: impl Into<String>, accepting: bool) -> StateId {
        self.labels.push(label.into());
        self.accepting.push(accepting);
        self.trans.push(BTreeMap::new());
        self.labels.len() - 1
    }

    /// ORs `g` into the guard of `from -> to`; unsatisfiable guards are not stored.
    pub fn add_edge(&mut self, from: StateId, to: StateId, g: Guard) {
        let merged = match self.trans[from].remove(&to) {
            Some(old) => old.or(&g),
            None => g,
        };
        if merged.is_sat() {
            self.trans[from].insert(to, merged);
        }
    }

    pub fn num_states(&self) -> usize {
        self.labels.len()
    }

    pub fn num_edges(&self) -> usize {
        self.trans.iter().map(|m| m.len()).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (StateId, StateId, &Guard)> {
        self.trans.iter().enumerate().flat_map(|(i, m)| m.iter().map(move |(j, g)| (i, *j, g)))
    }

    pub fn guard(&self, from: StateId, to: StateId) -> Option<&Guard> {
        self.trans[from].get(&to)
    }

    pub fn self_loop(&self, q: StateId) -> Option<&Guard> {
        self.guard(q, q)
    }

    pub fn accepting_states(&self) -> Vec<StateId> {
        (0..self.num_states()).filter(|&q| self.accepting[q]).collect()
    }

    pub fn ap_index(&self, name: &str) -> Option<usize> {
        self.ap.iter().position(|a| a == name)
    }

    /// Letter holding the named atoms; names outside the AP are ignored.
    pub fn letter<S: AsRef<str>>(&self, names: impl IntoIterator<Item = S>) -> Letter {
        names.into_iter().filter_map(|n| self.ap_index(n.as_ref())).fold(0, |acc, i| acc | 1 << i)
    }

    pub fn letter_names(&self, l: Letter) -> BTreeSet<String> {
        bits_of(l).into_iter().filter_map(|i| self.ap.get(i).cloned()).collect()
    }

    pub fn post(&self, from: &[StateId], l: Letter) -> Vec<StateId> {
        let mut out: BTreeSet<StateId> = BTreeSet::new();
        for &q in from {
            for (&t, g) in &self.trans[q] {
                if g.eval(l) {
                    out.insert(t);
                }
            }
        }
        out.into_iter().collect()
    }

    /// Finite-word membership: some run over `word` ends in an accepting state.
    pub fn accepts(&self, word: &[Letter]) -> bool {
        let mut cur: Vec<StateId> = self.initial.clone();
        cur.sort_unstable();
        cur.dedup();
        for &l in word {
            if cur.is_empty() {
                return false;
            }
            cur = self.post(&cur, l);
        }
        cur.iter().any(|&q| self.accepting[q])
    }

    pub fn accepts_names(&self, word: &[BTreeSet<String>]) -> bool {
        let w: Vec<Letter> = word.iter().map(|s| self.letter(s.iter())).collect();
        self.accepts(&w)
    }

    /// Keeps the states flagged in `keep`, renumbering densely in order.
    pub fn restrict(&self, keep: &[bool]) -> Nba {
        let mut map = vec![usize::MAX; self.num_states()];
        let mut out = Nba::new(self.ap.clone());
        for q in 0..self.num_states() {
            if keep[q] {
                map[q] = out.add_state(self.labels[q].clone(), self.accepting[q]);
            }
        }
        out.initial = self.initial.iter().filter(|&&q| keep[q]).map(|&q| map[q]).collect();
        for (i, j, g) in self.edges() {
            if keep[i] && keep[j] {
                out.add_edge(map[i], map[j], g.clone());
            }
        }
        out
    }

    /// States reachable from the initial states.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states()];
        let mut stack: Vec<StateId> = self.initial.clone();
        while let Some(q) = stack.pop() {
            if std::mem::replace(&mut seen[q], true) {
                continue;
            }
            stack.extend(self.trans[q].keys().copied().filter(|&t| !seen[t]));
        }
        seen
    }

    /// States from which an accepting state is reachable.
    pub fn coreachable(&self) -> Vec<bool> {
        let mut rev: Vec<Vec<StateId>> = vec![Vec::new(); self.num_states()];
        for (i, j, _) in self.edges() {
            rev[j].push(i);
        }
        let mut seen = vec![false; self.num_states()];
        let mut stack = self.accepting_states();
        while let Some(q) = stack.pop() {
            if std::mem::replace(&mut seen[q], true) {
                continue;
            }
            stack.extend(rev[q].iter().copied().filter(|&t| !seen[t]));
        }
        seen
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph nba {\n  rankdir=LR;\n");
        for q in 0..self.num_states() {
            let shape = if self.accepting[q] { "doublecircle" } else { "circle" };
            s += &format!("  q{q} [shape={shape}, label=\"{q}\"];\n");
        }
        for &q in &self.initial {
            s += &format!("  init{q} [shape=point];\n  init{q} -> q{q};\n");
        }
        for (i, j, g) in self.edges() {
            s += &format!("  q{i} -> q{j} [label=\"{}\"];\n", g.fmt_with(&self.ap).to_string().replace('"', "'"));
        }
        s + "}\n"
    }
}

pub type SetId = usize;

/// Memoised subset construction for repeated membership queries.
#[derive(Debug, Default)]
pub struct Stepper {
    ids: HashMap<Vec<StateId>, SetId>,
    sets: Vec<Vec<StateId>>,
    accepting: Vec<bool>,
    step: HashMap<(SetId, Letter), SetId>,
}

impl Stepper {
    pub fn new() -> Stepper {
        Stepper::default()
    }

    pub fn intern(&mut self, nba: &Nba, mut set: Vec<StateId>) -> SetId {
        set.sort_unstable();
        set.dedup();
        if let Some(&id) = self.ids.get(&set) {
            return id;
        }
        let id = self.sets.len();
        self.accepting.push(set.iter().any(|&q| nba.accepting[q]));
        self.sets.push(set.clone());
        self.ids.insert(set, id);
        id
    }

    pub fn initial(&mut self, nba: &Nba) -> SetId {
        self.intern(nba, nba.initial.clone())
    }

    pub fn step(&mut self, nba: &Nba, s: SetId, l: Letter) -> SetId {
        if let Some(&t) = self.step.get(&(s, l)) {
            return t;
        }
        let next = nba.post(&self.sets[s], l);
        let t = self.intern(nba, next);
        self.step.insert((s, l), t);
        t
    }

    pub fn is_accepting(&self, s: SetId) -> bool {
        self.accepting[s]
    }

    pub fn is_empty(&self, s: SetId) -> bool {
        self.sets[s].is_empty()
    }

    pub fn states(&self, s: SetId) -> &[StateId] {
        &self.sets[s]
    }

    pub fn accepts(&mut self, nba: &Nba, word: &[Letter]) -> bool {
        let mut s = self.initial(nba);
        for &l in word {
            s = self.step(nba, s, l);
        }
        self.is_accepting(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stepper_agrees_with_direct_membership() {
        let nba = translate(&crate::ltl::parse("F (a && F b) && (!c U d)").unwrap()).unwrap();
        let mut st = Stepper::new();
        for w in 0u64..4096 {
            let word: Vec<Letter> = (0..3).map(|k| (w >> (4 * k)) & 0xf).collect();
            assert_eq!(st.accepts(&nba, &word), nba.accepts(&word));
        }
    }
}

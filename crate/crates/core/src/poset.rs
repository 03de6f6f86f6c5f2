//! Partial-order task mining. An accepting run is split into subtasks; the
//! total order of the run is then relaxed to a partial order whose every
//! linear extension is still accepted, together with sets of subtasks that
//! must not all run at once.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::automaton::{bits_of, Letter, Nba, SetId, StateId, Stepper};

/// Subtasks per poset; masks over subtasks are u64.
pub const MAX_SUBTASKS: usize = 64;
/// Minimal-set combinations tried per run.
pub const DECOMPOSITION_CAP: usize = 64;
/// Words visited by the swap closure.
pub const SWAP_CLOSURE_CAP: usize = 100_000;
/// Words inspected when collecting self-loop constraints.
pub const SELF_LOOP_WORD_CAP: usize = 2_000;
/// Memo entries for product-order searches before giving up conservatively.
pub const PRODUCT_MEMO_CAP: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subtask {
    pub index: usize,
    /// Atoms the subtask makes true (a minimal satisfying set of its edge).
    pub positive: u64,
    /// Atoms that must stay false while it is served.
    pub negative: u64,
    /// Constraints that hold while waiting for this subtask to begin.
    pub selfloop_pos: u64,
    pub selfloop_neg: u64,
    /// False when the automaton cannot idle right before this subtask.
    pub waits: bool,
    /// Letter the subtask contributes to a word: its atoms plus region atoms.
    pub letter: Letter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poset {
    pub id: usize,
    pub ap: Vec<String>,
    pub subtasks: Vec<Subtask>,
    /// Start-before-start pairs `(before, after)`, transitively reduced.
    pub leq: BTreeSet<(usize, usize)>,
    /// Sets whose members must not all execute at the same time.
    pub opposed: Vec<Vec<usize>>,
    pub language_size: u64,
    pub run: Vec<StateId>,
}

impl Poset {
    pub fn len(&self) -> usize {
        self.subtasks.len()
    }
    pub fn is_empty(&self) -> bool {
        self.subtasks.is_empty()
    }
    pub fn names(&self, mask: u64) -> Vec<String> {
        bits_of(mask).into_iter().map(|i| self.ap[i].clone()).collect()
    }
    pub fn positive_names(&self, w: usize) -> Vec<String> {
        self.names(self.subtasks[w].positive)
    }
    /// Negated atoms of the subtask and of the self-loop before it.
    pub fn negative_names(&self, w: usize) -> Vec<String> {
        self.names(self.subtasks[w].negative | self.subtasks[w].selfloop_neg)
    }
    pub fn label(&self, w: usize) -> String {
        self.positive_names(w).join(" & ")
    }
    pub fn graph(&self) -> PosetGraph {
        PosetGraph::new(self.len(), &self.leq)
    }
    pub fn letters(&self) -> Vec<Letter> {
        self.subtasks.iter().map(|s| s.letter).collect()
    }

    pub fn to_dot(&self) -> String {
        let g = self.graph();
        let mut s = String::from("digraph poset {\n  rankdir=LR;\n  node [shape=box];\n");
        for w in 0..self.len() {
            let neg = self.negative_names(w);
            let extra = if neg.is_empty() { String::new() } else { format!("\\n!{}", neg.join(" !")) };
            s += &format!("  w{w} [label=\"{w}: {}{extra}\"];\n", self.label(w));
        }
        for &(a, b) in &g.covering {
            s += &format!("  w{a} -> w{b};\n");
        }
        for (k, set) in self.opposed.iter().enumerate() {
            if set.len() == 2 {
                s += &format!("  w{} -> w{} [dir=none, style=dashed, color=red];\n", set[0], set[1]);
            } else {
                s += &format!("  opp{k} [shape=point, color=red];\n");
                for m in set {
                    s += &format!("  opp{k} -> w{m} [dir=none, style=dashed, color=red];\n");
                }
            }
        }
        s + "}\n"
    }

    /// Start times and durations respect the partial order and the opposed
    /// sets. `schedule[w] = (start, duration)`.
    pub fn admits_schedule(&self, schedule: &[(f64, f64)]) -> bool {
        if schedule.len() != self.len() {
            return false;
        }
        let g = self.graph();
        for (b, &preds) in g.preds.iter().enumerate() {
            for a in bits_of(preds) {
                if schedule[a].0 > schedule[b].0 {
                    return false;
                }
            }
        }
        self.opposed.iter().all(|set| {
            set.iter().any(|&a| set.iter().any(|&b| a != b && schedule[a].0 + schedule[a].1 < schedule[b].0))
        })
    }
}

/// Transitive closure and reduction of a precedence relation.
#[derive(Debug, Clone, PartialEq)]
pub struct PosetGraph {
    /// `preds[w]`: every subtask that must start no later than `w`.
    pub preds: Vec<u64>,
    pub covering: Vec<(usize, usize)>,
    pub roots: Vec<usize>,
    pub leaves: Vec<usize>,
}

impl PosetGraph {
    pub fn new(n: usize, leq: &BTreeSet<(usize, usize)>) -> PosetGraph {
        let mut preds = vec![0u64; n];
        for &(a, b) in leq {
            preds[b] |= 1 << a;
        }
        loop {
            let mut changed = false;
            for b in 0..n {
                let mut p = preds[b];
                for a in bits_of(preds[b]) {
                    p |= preds[a];
                }
                if p != preds[b] {
                    preds[b] = p;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut covering = Vec::new();
        for b in 0..n {
            for a in bits_of(preds[b]) {
                let implied = bits_of(preds[b]).into_iter().any(|m| m != a && preds[m] >> a & 1 == 1);
                if !implied {
                    covering.push((a, b));
                }
            }
        }
        covering.sort();
        let roots = (0..n).filter(|&w| preds[w] == 0).collect();
        let leaves = (0..n).filter(|&w| !preds.iter().any(|p| p >> w & 1 == 1)).collect();
        PosetGraph { preds, covering, roots, leaves }
    }

    pub fn direct_preds(&self, w: usize) -> Vec<usize> {
        self.covering.iter().filter(|e| e.1 == w).map(|e| e.0).collect()
    }

    pub fn direct_succs(&self, w: usize) -> Vec<usize> {
        self.covering.iter().filter(|e| e.0 == w).map(|e| e.1).collect()
    }

    pub fn comparable(&self, a: usize, b: usize) -> bool {
        self.preds[b] >> a & 1 == 1 || self.preds[a] >> b & 1 == 1
    }
}

/// Membership of subtask words: letters in sequence, with any number of
/// idle (empty) letters allowed before and between them.
pub struct WordChecker<'a> {
    nba: &'a Nba,
    stepper: Stepper,
    closed: HashMap<SetId, SetId>,
}

impl<'a> WordChecker<'a> {
    pub fn new(nba: &'a Nba) -> Self {
        WordChecker { nba, stepper: Stepper::new(), closed: HashMap::new() }
    }

    fn close(&mut self, s: SetId) -> SetId {
        if let Some(&c) = self.closed.get(&s) {
            return c;
        }
        let mut cur = s;
        loop {
            let idle = self.stepper.step(self.nba, cur, 0);
            let mut union = self.stepper.states(cur).to_vec();
            union.extend_from_slice(self.stepper.states(idle));
            let next = self.stepper.intern(self.nba, union);
            if next == cur {
                break;
            }
            cur = next;
        }
        self.closed.insert(s, cur);
        cur
    }

    pub fn start(&mut self) -> SetId {
        let s = self.stepper.initial(self.nba);
        self.close(s)
    }

    pub fn advance(&mut self, s: SetId, l: Letter) -> SetId {
        let t = self.stepper.step(self.nba, s, l);
        self.close(t)
    }

    pub fn is_accepting(&self, s: SetId) -> bool {
        self.stepper.is_accepting(s)
    }

    pub fn is_dead(&self, s: SetId) -> bool {
        self.stepper.is_empty(s)
    }

    pub fn accepts(&mut self, word: &[Letter]) -> bool {
        let mut s = self.start();
        for &l in word {
            if self.is_dead(s) {
                return false;
            }
            s = self.advance(s, l);
        }
        self.is_accepting(s)
    }
}

fn full(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn available(preds: &[u64], mask: u64) -> impl Iterator<Item = usize> + '_ {
    (0..preds.len()).filter(move |&w| mask >> w & 1 == 0 && preds[w] & !mask == 0)
}

/// Number of linear extensions, saturating.
pub fn count_linear_extensions(preds: &[u64]) -> u64 {
    fn go(mask: u64, preds: &[u64], memo: &mut HashMap<u64, u64>) -> u64 {
        if mask == full(preds.len()) {
            return 1;
        }
        if let Some(&c) = memo.get(&mask) {
            return c;
        }
        let mut c: u64 = 0;
        for w in available(preds, mask).collect::<Vec<_>>() {
            c = c.saturating_add(go(mask | 1 << w, preds, memo));
        }
        memo.insert(mask, c);
        c
    }
    go(0, preds, &mut HashMap::new())
}

/// Linear extensions in lexicographic order, at most `cap` of them.
pub fn linear_extensions(preds: &[u64], cap: usize) -> Vec<Vec<usize>> {
    fn go(mask: u64, cur: &mut Vec<usize>, preds: &[u64], cap: usize, out: &mut Vec<Vec<usize>>) {
        if out.len() >= cap {
            return;
        }
        if mask == full(preds.len()) {
            out.push(cur.clone());
            return;
        }
        for w in available(preds, mask).collect::<Vec<_>>() {
            cur.push(w);
            go(mask | 1 << w, cur, preds, cap, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, &mut Vec::new(), preds, cap, &mut out);
    out
}

/// A linear extension whose word is rejected, if any. Every member of
/// `merge` (when given) contributes the union of the members' letters.
fn rejected_extension(
    wc: &mut WordChecker,
    preds: &[u64],
    letters: &[Letter],
    merge: Option<u64>,
) -> Option<Vec<usize>> {
    let merge = merge.unwrap_or(0);
    let union: Letter = bits_of(merge).into_iter().fold(0, |a, w| a | letters[w]);
    let n = preds.len();
    let mut memo: HashMap<(u64, SetId), bool> = HashMap::new();
    fn ok(
        mask: u64,
        s: SetId,
        ctx: (&[u64], &[Letter], u64, Letter, usize),
        wc: &mut WordChecker,
        memo: &mut HashMap<(u64, SetId), bool>,
    ) -> bool {
        let (preds, letters, merge, union, n) = ctx;
        if mask == full(n) {
            return wc.is_accepting(s);
        }
        if wc.is_dead(s) {
            return false;
        }
        if let Some(&r) = memo.get(&(mask, s)) {
            return r;
        }
        let mut r = true;
        for w in available(preds, mask).collect::<Vec<_>>() {
            let t = wc.advance(s, if merge >> w & 1 == 1 { union } else { letters[w] });
            if !ok(mask | 1 << w, t, ctx, wc, memo) {
                r = false;
                break;
            }
        }
        memo.insert((mask, s), r);
        r
    }
    let ctx = (preds, letters, merge, union, n);
    let s0 = wc.start();
    if ok(0, s0, ctx, wc, &mut memo) {
        return None;
    }
    // Walk down through failing successors to recover a witness.
    let (mut mask, mut s, mut order) = (0u64, s0, Vec::new());
    while mask != full(n) {
        let mut next = None;
        for w in available(preds, mask).collect::<Vec<_>>() {
            let t = wc.advance(s, if merge >> w & 1 == 1 { union } else { letters[w] });
            if !ok(mask | 1 << w, t, ctx, wc, &mut memo) {
                next = Some((w, t));
                break;
            }
        }
        let (w, t) = next.expect("a failing branch exists below a failing node");
        order.push(w);
        mask |= 1 << w;
        s = t;
    }
    Some(order)
}

/// Whether some word is a linear extension of both orders (with subtasks
/// matched by letter). Returns true when the search is too large to decide.
pub fn languages_intersect(p1: &[u64], l1: &[Letter], p2: &[u64], l2: &[Letter]) -> bool {
    let mut a: Vec<Letter> = l1.to_vec();
    let mut b: Vec<Letter> = l2.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    if a != b {
        return false;
    }
    fn go(m1: u64, m2: u64, c: (&[u64], &[Letter], &[u64], &[Letter]), memo: &mut HashSet<(u64, u64)>) -> Option<bool> {
        let (p1, l1, p2, l2) = c;
        if m1 == full(p1.len()) {
            return Some(true);
        }
        if !memo.insert((m1, m2)) {
            return Some(false);
        }
        if memo.len() > PRODUCT_MEMO_CAP {
            return None;
        }
        let av2: Vec<usize> = available(p2, m2).collect();
        for x in available(p1, m1).collect::<Vec<_>>() {
            let mut tried = HashSet::new();
            for &y in &av2 {
                if l2[y] == l1[x] && tried.insert(l2[y]) {
                    if go(m1 | 1 << x, m2 | 1 << y, c, memo)? {
                        return Some(true);
                    }
                }
            }
        }
        Some(false)
    }
    go(0, 0, (p1, l1, p2, l2), &mut HashSet::new()).unwrap_or(true)
}

#[derive(Debug, Clone)]
pub struct MiningConfig {
    pub budget: Duration,
    pub opposed_arity: usize,
    pub max_posets: usize,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig { budget: Duration::from_secs(5), opposed_arity: 3, max_posets: usize::MAX }
    }
}

/// Streams posets with pairwise disjoint languages, one accepting run at a time.
pub struct PosetMiner<'a> {
    nba: &'a Nba,
    cfg: MiningConfig,
    deadline: Instant,
    /// Past this point the miner stops even if nothing was found.
    hard_deadline: Instant,
    checker: WordChecker<'a>,
    region_bits: Vec<u64>,
    succ: Vec<Vec<StateId>>,
    roots: Vec<StateId>,
    stack: Vec<(StateId, usize)>,
    on_path: Vec<bool>,
    pending: VecDeque<Poset>,
    found: Vec<Poset>,
    pub runs_explored: usize,
    pub exhausted: bool,
}

impl<'a> PosetMiner<'a> {
    pub fn new(nba: &'a Nba, cfg: MiningConfig) -> Self {
        let mut succ = Vec::with_capacity(nba.num_states());
        for q in 0..nba.num_states() {
            let mut s: Vec<(u32, StateId)> = nba.trans[q]
                .iter()
                .filter(|(t, _)| **t != q)
                .map(|(t, g)| (g.minimal_positive_sets().iter().map(|p| p.count_ones()).min().unwrap_or(0), *t))
                .collect();
            s.sort();
            succ.push(s.into_iter().map(|(_, t)| t).collect());
        }
        // An action atom `act_r` also raises the region atom `r` when present.
        let region_bits = nba
            .ap
            .iter()
            .map(|a| a.rsplit_once('_').and_then(|(_, r)| nba.ap_index(r)).map_or(0, |i| 1u64 << i))
            .collect();
        let mut roots = nba.initial.clone();
        roots.sort_unstable();
        roots.dedup();
        roots.reverse();
        PosetMiner {
            nba,
            deadline: Instant::now() + cfg.budget,
            hard_deadline: Instant::now() + 2 * cfg.budget + Duration::from_secs(1),
            cfg,
            checker: WordChecker::new(nba),
            region_bits,
            succ,
            roots,
            stack: Vec::new(),
            on_path: vec![false; nba.num_states()],
            pending: VecDeque::new(),
            found: Vec::new(),
            runs_explored: 0,
            exhausted: false,
        }
    }

    /// Next simple run from an initial to an accepting state.
    fn next_run(&mut self) -> Option<Vec<StateId>> {
        loop {
            if self.stack.is_empty() {
                let r = self.roots.pop()?;
                self.stack.push((r, 0));
                self.on_path[r] = true;
                if self.nba.accepting[r] {
                    self.on_path[r] = false;
                    self.stack.clear();
                    return Some(vec![r]);
                }
            }
            let (q, i) = *self.stack.last().unwrap();
            if i >= self.succ[q].len() {
                self.stack.pop();
                self.on_path[q] = false;
                continue;
            }
            self.stack.last_mut().unwrap().1 += 1;
            let t = self.succ[q][i];
            if self.on_path[t] {
                continue;
            }
            if self.nba.accepting[t] {
                let mut run: Vec<StateId> = self.stack.iter().map(|e| e.0).collect();
                run.push(t);
                return Some(run);
            }
            self.on_path[t] = true;
            self.stack.push((t, 0));
        }
    }

    fn letter_of(&self, positive: u64) -> Letter {
        bits_of(positive).into_iter().fold(positive, |l, i| l | self.region_bits[i])
    }

    fn decompositions(&self, run: &[StateId]) -> Vec<Vec<(u64, u64)>> {
        let mut options: Vec<Vec<(u64, u64)>> = Vec::new();
        for w in run.windows(2) {
            let g = self.nba.guard(w[0], w[1]).expect("run follows edges");
            let opts: Vec<(u64, u64)> = g.minimal_positive_sets().into_iter().map(|p| (p, g.blocking_atoms(p))).collect();
            options.push(opts);
        }
        let mut out = vec![Vec::new()];
        for opts in options {
            let mut next = Vec::new();
            'outer: for prefix in &out {
                for o in &opts {
                    let mut v: Vec<(u64, u64)> = prefix.clone();
                    v.push(*o);
                    next.push(v);
                    if next.len() >= DECOMPOSITION_CAP {
                        break 'outer;
                    }
                }
            }
            out = next;
        }
        out
    }

    /// Builds the poset for one decomposition of `run`, or `None` when it
    /// adds nothing new.
    fn mine(&mut self, run: &[StateId], parts: &[(u64, u64)]) -> Option<Poset> {
        // Edges satisfiable by the empty letter are absorbed by idling.
        let kept: Vec<(usize, (u64, u64))> = parts.iter().copied().enumerate().filter(|(_, (p, _))| *p != 0).collect();
        let n = kept.len();
        if n == 0 || n > MAX_SUBTASKS {
            return None;
        }
        let mut subtasks: Vec<Subtask> = kept
            .iter()
            .enumerate()
            .map(|(k, &(_, (p, neg)))| Subtask {
                index: k,
                positive: p,
                negative: neg,
                selfloop_pos: 0,
                selfloop_neg: 0,
                waits: true,
                letter: self.letter_of(p),
            })
            .collect();
        let letters: Vec<Letter> = subtasks.iter().map(|s| s.letter).collect();
        if !self.checker.accepts(&letters) {
            return None;
        }
        let chain: Vec<u64> = (0..n).map(full).collect();
        for old in &self.found {
            if languages_intersect(&chain, &letters, &old.graph().preds, &old.letters()) {
                return None;
            }
        }
        let leq = self.relax(&letters);
        let preds = PosetGraph::new(n, &leq).preds;
        let opposed = self.opposed_sets(&preds, &letters);
        for old in &self.found {
            if languages_intersect(&preds, &letters, &old.graph().preds, &old.letters()) {
                return None;
            }
        }
        self.collect_self_loops(&preds, &mut subtasks);
        let g = PosetGraph::new(n, &leq);
        let poset = Poset {
            id: self.found.len(),
            ap: self.nba.ap.clone(),
            subtasks,
            leq: g.covering.iter().copied().collect(),
            opposed,
            language_size: count_linear_extensions(&g.preds),
            run: run.to_vec(),
        };
        Some(poset)
    }

    /// Swap closure from the run's order, then repair until every linear
    /// extension is accepted.
    fn relax(&mut self, letters: &[Letter]) -> BTreeSet<(usize, usize)> {
        let n = letters.len();
        let mut swapped: HashSet<(usize, usize)> = HashSet::new();
        let mut failed: HashSet<(usize, usize)> = HashSet::new();
        let w0: Vec<u8> = (0..n as u8).collect();
        let mut seen: HashSet<Vec<u8>> = HashSet::from([w0.clone()]);
        let mut queue = VecDeque::from([w0]);
        let mut buf: Vec<Letter> = Vec::with_capacity(n);
        while let Some(w) = queue.pop_front() {
            for k in 0..n.saturating_sub(1) {
                let (a, b) = (w[k] as usize, w[k + 1] as usize);
                let key = (a.min(b), a.max(b));
                let mut v = w.clone();
                v.swap(k, k + 1);
                if seen.contains(&v) {
                    swapped.insert(key);
                    continue;
                }
                buf.clear();
                buf.extend(v.iter().map(|&x| letters[x as usize]));
                if self.checker.accepts(&buf) {
                    swapped.insert(key);
                    if seen.len() < SWAP_CLOSURE_CAP {
                        seen.insert(v.clone());
                        queue.push_back(v);
                    }
                } else {
                    failed.insert(key);
                }
            }
        }
        let mut leq: BTreeSet<(usize, usize)> = BTreeSet::new();
        for i in 0..n {
            for j in i + 1..n {
                if !swapped.contains(&(i, j)) || failed.contains(&(i, j)) {
                    leq.insert((i, j));
                }
            }
        }
        loop {
            let preds = PosetGraph::new(n, &leq).preds;
            let Some(bad) = rejected_extension(&mut self.checker, &preds, letters, None) else { break };
            // Pin the earliest inversion of the run's order.
            let mut fix = None;
            'scan: for p in 0..bad.len() {
                for q in p + 1..bad.len() {
                    if bad[q] < bad[p] {
                        fix = Some((bad[q], bad[p]));
                        break 'scan;
                    }
                }
            }
            leq.insert(fix.expect("the run's own order is accepted"));
        }
        leq
    }

    fn opposed_sets(&mut self, preds: &[u64], letters: &[Letter]) -> Vec<Vec<usize>> {
        let n = letters.len();
        let mut kept: Vec<u64> = Vec::new();
        for arity in 2..=self.cfg.opposed_arity.min(n) {
            let mut combo: Vec<usize> = (0..arity).collect();
            loop {
                let mask = combo.iter().fold(0u64, |m, &w| m | 1 << w);
                if !kept.iter().any(|k| k & !mask == 0)
                    && rejected_extension(&mut self.checker, preds, letters, Some(mask)).is_some()
                {
                    kept.push(mask);
                }
                // next combination
                let mut i = arity;
                while i > 0 && combo[i - 1] == n - arity + i - 1 {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                combo[i - 1] += 1;
                for j in i..arity {
                    combo[j] = combo[j - 1] + 1;
                }
            }
        }
        kept.into_iter().map(bits_of).collect()
    }

    fn collect_self_loops(&mut self, preds: &[u64], subtasks: &mut [Subtask]) {
        let letters: Vec<Letter> = subtasks.iter().map(|s| s.letter).collect();
        for order in linear_extensions(preds, SELF_LOOP_WORD_CAP) {
            let word: Vec<Letter> = order.iter().map(|&w| letters[w]).collect();
            let Some(pre) = witness_pre_states(self.nba, &word) else { continue };
            for (pos, &w) in order.iter().enumerate() {
                let s = &mut subtasks[w];
                match self.nba.self_loop(pre[pos]) {
                    Some(g) => {
                        let p = g.minimal_positive_sets()[0];
                        s.selfloop_pos |= p;
                        s.selfloop_neg |= g.blocking_atoms(p);
                    }
                    None => s.waits = false,
                }
            }
        }
    }

    pub fn found(&self) -> &[Poset] {
        &self.found
    }
}

/// States at which each letter is consumed along one accepting run that may
/// idle on the empty letter between letters.
pub fn witness_pre_states(nba: &Nba, word: &[Letter]) -> Option<Vec<StateId>> {
    let n = nba.num_states();
    let len = word.len();
    let id = |k: usize, q: StateId| k * n + q;
    let mut parent: Vec<Option<(usize, bool)>> = vec![None; (len + 1) * n];
    let mut seen = vec![false; (len + 1) * n];
    let mut queue = VecDeque::new();
    for &q in &nba.initial {
        if !seen[id(0, q)] {
            seen[id(0, q)] = true;
            queue.push_back((0usize, q));
        }
    }
    let mut goal = None;
    while let Some((k, q)) = queue.pop_front() {
        if k == len && nba.accepting[q] {
            goal = Some(q);
            break;
        }
        for (&t, g) in &nba.trans[q] {
            if g.eval(0) && !seen[id(k, t)] {
                seen[id(k, t)] = true;
                parent[id(k, t)] = Some((id(k, q), false));
                queue.push_back((k, t));
            }
            if k < len && g.eval(word[k]) && !seen[id(k + 1, t)] {
                seen[id(k + 1, t)] = true;
                parent[id(k + 1, t)] = Some((id(k, q), true));
                queue.push_back((k + 1, t));
            }
        }
    }
    let mut node = id(len, goal?);
    let mut pre = vec![0; len];
    while let Some((p, consumed)) = parent[node] {
        if consumed {
            pre[p / n] = p % n;
        }
        node = p;
    }
    Some(pre)
}

impl Iterator for PosetMiner<'_> {
    type Item = Poset;

    fn next(&mut self) -> Option<Poset> {
        loop {
            if let Some(p) = self.pending.pop_front() {
                self.found.push(p.clone());
                return Some(p);
            }
            let now = Instant::now();
            if self.found.len() >= self.cfg.max_posets
                || (!self.found.is_empty() && now >= self.deadline)
                || now >= self.hard_deadline
            {
                return None;
            }
            let Some(run) = self.next_run() else {
                self.exhausted = true;
                return None;
            };
            self.runs_explored += 1;
            for parts in self.decompositions(&run) {
                if !self.pending.is_empty() && Instant::now() >= self.deadline {
                    break;
                }
                if let Some(mut p) = self.mine(&run, &parts) {
                    p.id = self.found.len();
                    self.found.push(p.clone());
                    self.pending.push_back(p);
                }
            }
            // `found` already holds the pending posets for disjointness
            // checks; drop the duplicates before handing them out.
            let k = self.pending.len();
            let len = self.found.len();
            self.found.truncate(len - k);
        }
    }
}

/// All posets found within the budget.
pub fn compute_posets(nba: &Nba, cfg: MiningConfig) -> Vec<Poset> {
    PosetMiner::new(nba, cfg).collect()
}

/// Largest language first, then fewest precedence pairs.
pub fn best_poset(posets: &[Poset]) -> Option<&Poset> {
    posets.iter().min_by_key(|p| (std::cmp::Reverse(p.language_size), p.graph().covering.len(), p.id))
}

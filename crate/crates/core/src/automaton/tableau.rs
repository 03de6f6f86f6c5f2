//! Formula-progression construction. A state is a set of pending obligations;
//! the empty set is the single accepting state and loops on `true`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{AutomatonError, Cube, Guard, Nba};
use crate::ltl::{to_pnf, Formula};

type Obligations = BTreeSet<Formula>;

pub fn translate(f: &Formula) -> Result<Nba, AutomatonError> {
    let ap: Vec<String> = f.atoms().into_iter().collect();
    if ap.len() > 64 {
        return Err(AutomatonError::TooManyAtoms(ap.len()));
    }
    let g = to_pnf(f)?;
    let mut nba = Nba::new(ap.clone());
    let Some(init) = normalize([simplify(&g)]) else {
        let q = nba.add_state("false", false);
        nba.initial.push(q);
        return Ok(nba);
    };
    let mut ids: BTreeMap<Obligations, usize> = BTreeMap::new();
    let mut queue = VecDeque::new();
    let q0 = nba.add_state(label(&init), init.is_empty());
    nba.initial.push(q0);
    ids.insert(init.clone(), q0);
    queue.push_back(init);
    while let Some(s) = queue.pop_front() {
        let from = ids[&s];
        let mut by_target: BTreeMap<Obligations, Vec<Cube>> = BTreeMap::new();
        for (cube, next) in expand_set(&s, &ap) {
            if let Some(t) = normalize(next) {
                by_target.entry(t).or_default().push(cube);
            }
        }
        for (t, cubes) in by_target {
            let to = match ids.get(&t) {
                Some(&id) => id,
                None => {
                    let id = nba.add_state(label(&t), t.is_empty());
                    ids.insert(t.clone(), id);
                    queue.push_back(t);
                    id
                }
            };
            nba.add_edge(from, to, Guard::from_cubes(cubes));
        }
    }
    Ok(nba)
}

fn label(s: &Obligations) -> String {
    if s.is_empty() {
        return "accept".into();
    }
    let parts: Vec<String> = s.iter().map(|f| f.to_string()).collect();
    format!("{{{}}}", parts.join(", "))
}

/// Splits conjunctions and folds constants; `None` when some member is false.
fn normalize(fs: impl IntoIterator<Item = Formula>) -> Option<Obligations> {
    let mut out = BTreeSet::new();
    let mut stack: Vec<Formula> = fs.into_iter().map(|f| simplify(&f)).collect();
    while let Some(f) = stack.pop() {
        match f {
            Formula::True => {}
            Formula::False => return None,
            Formula::And(a, b) => {
                stack.push(*a);
                stack.push(*b);
            }
            other => {
                out.insert(other);
            }
        }
    }
    Some(out)
}

fn simplify(f: &Formula) -> Formula {
    match f {
        Formula::And(a, b) => match (simplify(a), simplify(b)) {
            (Formula::False, _) | (_, Formula::False) => Formula::False,
            (Formula::True, x) | (x, Formula::True) => x,
            (x, y) => Formula::and(x, y),
        },
        Formula::Or(a, b) => match (simplify(a), simplify(b)) {
            (Formula::True, _) | (_, Formula::True) => Formula::True,
            (Formula::False, x) | (x, Formula::False) => x,
            (x, y) => Formula::or(x, y),
        },
        Formula::Next(a) => match simplify(a) {
            Formula::False => Formula::False,
            x => Formula::next(x),
        },
        Formula::Eventually(a) => match simplify(a) {
            Formula::False => Formula::False,
            x => Formula::eventually(x),
        },
        Formula::Until(a, b) => match simplify(b) {
            Formula::False => Formula::False,
            y => Formula::until(simplify(a), y),
        },
        other => other.clone(),
    }
}

type Expansion = Vec<(Cube, Vec<Formula>)>;

fn product(xs: Expansion, ys: &Expansion) -> Expansion {
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for (c1, n1) in &xs {
        for (c2, n2) in ys {
            let c = c1.and(c2);
            if c.is_consistent() {
                let mut n = n1.clone();
                n.extend(n2.iter().cloned());
                out.push((c, n));
            }
        }
    }
    out
}

fn expand_set(s: &Obligations, ap: &[String]) -> Expansion {
    let mut acc: Expansion = vec![(Cube::TOP, Vec::new())];
    for f in s {
        acc = product(acc, &expand(f, ap));
        if acc.is_empty() {
            break;
        }
    }
    acc
}

/// One-step unfolding: what the current letter must satisfy and what is left.
fn expand(f: &Formula, ap: &[String]) -> Expansion {
    let idx = |a: &str| ap.iter().position(|x| x == a).expect("atom in AP");
    match f {
        Formula::True => vec![(Cube::TOP, Vec::new())],
        Formula::False => Vec::new(),
        Formula::Atom(a) => vec![(Cube::lit(idx(a), true), Vec::new())],
        Formula::Not(g) => match &**g {
            Formula::Atom(a) => vec![(Cube::lit(idx(a), false), Vec::new())],
            _ => unreachable!("positive normal form"),
        },
        Formula::And(a, b) => product(expand(a, ap), &expand(b, ap)),
        Formula::Or(a, b) => {
            let mut v = expand(a, ap);
            v.extend(expand(b, ap));
            v
        }
        Formula::Next(g) => vec![(Cube::TOP, vec![(**g).clone()])],
        Formula::Eventually(g) => {
            let mut v = expand(g, ap);
            v.push((Cube::TOP, vec![f.clone()]));
            v
        }
        Formula::Until(a, b) => {
            let mut v = expand(b, ap);
            v.extend(product(expand(a, ap), &vec![(Cube::TOP, vec![f.clone()])]));
            v
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{parse, satisfies};
    use std::collections::BTreeSet;

    fn words(ap: &[String], len: usize) -> Vec<Vec<BTreeSet<String>>> {
        let n = 1usize << ap.len();
        let total = n.pow(len as u32);
        (0..total)
            .map(|mut w| {
                (0..len)
                    .map(|_| {
                        let l = w % n;
                        w /= n;
                        ap.iter().enumerate().filter(|(i, _)| l >> i & 1 == 1).map(|(_, a)| a.clone()).collect()
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn agrees_with_evaluator_on_small_formulas() {
        for src in [
            "F a",
            "a U b",
            "X a",
            "F (a && X b)",
            "!a U (b && F a)",
            "F (a && !b && F b) && F c",
            "X !a || F (a && b)",
            "true",
            "false",
            "X true",
            "(a || b) U (c && X (a U b))",
        ] {
            let f = parse(src).unwrap();
            let nba = translate(&f).unwrap();
            let ap: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
            for len in 0..=3 {
                for w in words(&ap, len) {
                    assert_eq!(nba.accepts_names(&w), satisfies(&f, &w), "{src} on {w:?}");
                }
            }
        }
    }

    #[test]
    fn eventually_is_two_states() {
        let nba = translate(&parse("F a").unwrap()).unwrap();
        assert_eq!(nba.num_states(), 2);
        assert_eq!(nba.num_edges(), 3);
    }
}

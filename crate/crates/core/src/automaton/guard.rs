//! Edge guards as DNF over atomic propositions indexed into a u64 mask.

use std::fmt;
use std::sync::OnceLock;

/// Letters and atom sets are bitmasks over the automaton's AP table.
pub type Letter = u64;

/// A conjunction of literals. Consistent cubes never share a bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube {
    pub pos: u64,
    pub neg: u64,
}

impl Cube {
    pub const TOP: Cube = Cube { pos: 0, neg: 0 };

    pub fn lit(atom: usize, positive: bool) -> Cube {
        if positive {
            Cube { pos: 1 << atom, neg: 0 }
        } else {
            Cube { pos: 0, neg: 1 << atom }
        }
    }
    pub fn is_consistent(&self) -> bool {
        self.pos & self.neg == 0
    }
    pub fn eval(&self, letter: Letter) -> bool {
        letter & self.pos == self.pos && letter & self.neg == 0
    }
    pub fn and(&self, o: &Cube) -> Cube {
        Cube { pos: self.pos | o.pos, neg: self.neg | o.neg }
    }
    pub fn vars(&self) -> u64 {
        self.pos | self.neg
    }
    /// `self` is implied by `o` (every letter of `o` satisfies `self`).
    pub fn subsumes(&self, o: &Cube) -> bool {
        self.pos & !o.pos == 0 && self.neg & !o.neg == 0
    }
}

#[derive(Debug, Default)]
pub struct Guard {
    cubes: Vec<Cube>,
    minterms: OnceLock<Vec<Letter>>,
}

impl Clone for Guard {
    fn clone(&self) -> Self {
        Guard { cubes: self.cubes.clone(), minterms: OnceLock::new() }
    }
}

impl PartialEq for Guard {
    fn eq(&self, o: &Self) -> bool {
        self.cubes == o.cubes
    }
}
impl Eq for Guard {}

impl Guard {
    pub fn top() -> Guard {
        Guard::from_cubes(vec![Cube::TOP])
    }
    pub fn bottom() -> Guard {
        Guard::default()
    }
    pub fn lit(atom: usize, positive: bool) -> Guard {
        Guard::from_cubes(vec![Cube::lit(atom, positive)])
    }

    /// Drops contradictory and subsumed cubes and sorts the rest.
    pub fn from_cubes(cubes: Vec<Cube>) -> Guard {
        let mut cs: Vec<Cube> = cubes.into_iter().filter(Cube::is_consistent).collect();
        cs.sort_by_key(|c| ((c.pos | c.neg).count_ones(), *c));
        cs.dedup();
        let mut kept: Vec<Cube> = Vec::with_capacity(cs.len());
        for c in cs {
            if !kept.iter().any(|k| k.subsumes(&c)) {
                kept.push(c);
            }
        }
        kept.sort();
        Guard { cubes: kept, minterms: OnceLock::new() }
    }

    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }
    pub fn is_sat(&self) -> bool {
        !self.cubes.is_empty()
    }
    pub fn eval(&self, letter: Letter) -> bool {
        self.cubes.iter().any(|c| c.eval(letter))
    }
    pub fn support(&self) -> u64 {
        self.cubes.iter().fold(0, |acc, c| acc | c.vars())
    }

    pub fn or(&self, o: &Guard) -> Guard {
        let mut v = self.cubes.clone();
        v.extend_from_slice(&o.cubes);
        Guard::from_cubes(v)
    }
    pub fn and(&self, o: &Guard) -> Guard {
        let mut v = Vec::with_capacity(self.cubes.len() * o.cubes.len());
        for a in &self.cubes {
            for b in &o.cubes {
                v.push(a.and(b));
            }
        }
        Guard::from_cubes(v)
    }
    pub fn and_cube(&self, c: &Cube) -> Guard {
        Guard::from_cubes(self.cubes.iter().map(|a| a.and(c)).collect())
    }
    pub fn not(&self) -> Guard {
        let mut acc = Guard::top();
        for c in &self.cubes {
            let mut lits = Vec::new();
            for i in 0..64 {
                if c.pos >> i & 1 == 1 {
                    lits.push(Cube::lit(i, false));
                }
                if c.neg >> i & 1 == 1 {
                    lits.push(Cube::lit(i, true));
                }
            }
            acc = acc.and(&Guard::from_cubes(lits));
            if !acc.is_sat() {
                break;
            }
        }
        acc
    }

    /// Restriction to letters agreeing with `ctx`; the literals of `ctx` are
    /// removed from the surviving cubes.
    pub fn cofactor(&self, ctx: &Cube) -> Guard {
        let cs = self
            .cubes
            .iter()
            .filter(|c| c.pos & ctx.neg == 0 && c.neg & ctx.pos == 0)
            .map(|c| Cube { pos: c.pos & !ctx.pos, neg: c.neg & !ctx.neg })
            .collect();
        Guard::from_cubes(cs)
    }

    pub fn is_tautology(&self) -> bool {
        tautology(&self.cubes)
    }

    /// Every letter satisfying `self` satisfies `o`.
    pub fn implies(&self, o: &Guard) -> bool {
        self.cubes.iter().all(|c| tautology(&o.cofactor(c).cubes))
    }

    pub fn equivalent(&self, o: &Guard) -> bool {
        self.implies(o) && o.implies(self)
    }

    /// Satisfying letters restricted to the support. Panics above 20 atoms.
    pub fn minterms(&self) -> &[Letter] {
        self.minterms.get_or_init(|| {
            let bits = bits_of(self.support());
            assert!(bits.len() <= 20, "minterm enumeration over {} atoms", bits.len());
            (0u64..1 << bits.len()).map(|m| spread(m, &bits)).filter(|&l| self.eval(l)).collect()
        })
    }

    /// Minimal (by inclusion) sets of atoms that satisfy the guard when every
    /// other atom is false, ordered by size then mask.
    pub fn minimal_positive_sets(&self) -> Vec<u64> {
        let mut cands: Vec<u64> = self.cubes.iter().map(|c| c.pos).collect();
        cands.sort_by_key(|p| (p.count_ones(), *p));
        cands.dedup();
        let mut out: Vec<u64> = Vec::new();
        for p in cands {
            if !out.iter().any(|q| q & !p == 0) {
                out.push(p);
            }
        }
        out
    }

    /// Atoms of the support that would falsify the guard if added to `p`.
    pub fn blocking_atoms(&self, p: u64) -> u64 {
        let mut neg = 0;
        for i in bits_of(self.support() & !p) {
            if !self.eval(p | 1 << i) {
                neg |= 1 << i;
            }
        }
        neg
    }

    pub fn fmt_with<'a>(&'a self, ap: &'a [String]) -> GuardDisplay<'a> {
        GuardDisplay { g: self, ap }
    }
}

pub fn bits_of(mask: u64) -> Vec<usize> {
    (0..64).filter(|i| mask >> i & 1 == 1).collect()
}

fn spread(m: u64, bits: &[usize]) -> u64 {
    bits.iter().enumerate().fold(0, |acc, (k, &b)| acc | ((m >> k & 1) << b))
}

fn tautology(cubes: &[Cube]) -> bool {
    if cubes.iter().any(|c| c.vars() == 0) {
        return true;
    }
    if cubes.is_empty() {
        return false;
    }
    let pos = cubes.iter().fold(0, |a, c| a | c.pos);
    let neg = cubes.iter().fold(0, |a, c| a | c.neg);
    // A unate cover is a tautology only if it holds the universal cube.
    if pos & neg == 0 {
        return false;
    }
    let binate = pos & neg;
    let var = bits_of(binate)
        .into_iter()
        .max_by_key(|&v| cubes.iter().filter(|c| c.vars() >> v & 1 == 1).count())
        .unwrap();
    let bit = 1u64 << var;
    let branch = |positive: bool| -> Vec<Cube> {
        cubes
            .iter()
            .filter(|c| if positive { c.neg & bit == 0 } else { c.pos & bit == 0 })
            .map(|c| Cube { pos: c.pos & !bit, neg: c.neg & !bit })
            .collect()
    };
    tautology(&branch(true)) && tautology(&branch(false))
}

pub struct GuardDisplay<'a> {
    g: &'a Guard,
    ap: &'a [String],
}

impl fmt::Display for GuardDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.g.cubes.is_empty() {
            return f.write_str("false");
        }
        let name = |i: usize| self.ap.get(i).cloned().unwrap_or_else(|| format!("#{i}"));
        for (k, c) in self.g.cubes.iter().enumerate() {
            if k > 0 {
                f.write_str(" || ")?;
            }
            if c.vars() == 0 {
                f.write_str("true")?;
                continue;
            }
            let mut lits = Vec::new();
            for i in bits_of(c.vars()) {
                lits.push(if c.pos >> i & 1 == 1 { name(i) } else { format!("!{}", name(i)) });
            }
            let body = lits.join(" && ");
            if self.g.cubes.len() > 1 && lits.len() > 1 {
                write!(f, "({body})")?;
            } else {
                f.write_str(&body)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_guard(nvars: usize) -> impl Strategy<Value = Guard> {
        let cube = (0u64..1 << nvars, 0u64..1 << nvars).prop_map(|(p, n)| Cube { pos: p & !n, neg: n & !p });
        prop::collection::vec(cube, 0..5).prop_map(Guard::from_cubes)
    }

    fn truth_table(g: &Guard, nvars: usize) -> Vec<bool> {
        (0u64..1 << nvars).map(|l| g.eval(l)).collect()
    }

    proptest! {
        #[test]
        fn implication_matches_truth_tables(a in arb_guard(5), b in arb_guard(5)) {
            let ta = truth_table(&a, 5);
            let tb = truth_table(&b, 5);
            let expect = ta.iter().zip(&tb).all(|(x, y)| !x || *y);
            prop_assert_eq!(a.implies(&b), expect);
            prop_assert_eq!(a.is_tautology(), ta.iter().all(|x| *x));
        }

        #[test]
        fn not_and_or_are_pointwise(a in arb_guard(4), b in arb_guard(4)) {
            for l in 0u64..16 {
                prop_assert_eq!(a.not().eval(l), !a.eval(l));
                prop_assert_eq!(a.and(&b).eval(l), a.eval(l) && b.eval(l));
                prop_assert_eq!(a.or(&b).eval(l), a.eval(l) || b.eval(l));
            }
        }

        #[test]
        fn minimal_sets_are_minimal(a in arb_guard(5)) {
            let sat: Vec<u64> = (0u64..32).filter(|&l| a.eval(l)).collect();
            let expect: Vec<u64> = sat.iter().copied()
                .filter(|&l| !sat.iter().any(|&m| m != l && m & !l == 0))
                .collect();
            let mut got = a.minimal_positive_sets();
            got.sort();
            let mut exp = expect.clone();
            exp.sort();
            prop_assert_eq!(got, exp);
        }
    }

    #[test]
    fn minterms_over_support() {
        let g = Guard::lit(0, true).and(&Guard::lit(3, false));
        assert_eq!(g.minterms(), &[1]);
        assert_eq!(Guard::top().minterms(), &[0]);
    }
}

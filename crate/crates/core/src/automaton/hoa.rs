//! A subset of HOA v1: state-based Büchi acceptance with explicit labels.

use super::{AutomatonError, Guard, Nba};

pub fn to_hoa(nba: &Nba) -> String {
    let mut s = String::from("HOA: v1\n");
    s += &format!("States: {}\n", nba.num_states());
    for q in &nba.initial {
        s += &format!("Start: {q}\n");
    }
    s += &format!("AP: {}", nba.ap.len());
    for a in &nba.ap {
        s += &format!(" \"{a}\"");
    }
    s += "\nacc-name: Buchi\nAcceptance: 1 Inf(0)\nproperties: trans-labels explicit-labels state-acc\n--BODY--\n";
    for q in 0..nba.num_states() {
        s += &format!("State: {q} \"{}\"", nba.labels[q].replace('"', "'"));
        if nba.accepting[q] {
            s += " {0}";
        }
        s += "\n";
        for (t, g) in &nba.trans[q] {
            s += &format!("[{}] {t}\n", hoa_label(g));
        }
    }
    s + "--END--\n"
}

fn hoa_label(g: &Guard) -> String {
    if g.cubes().is_empty() {
        return "f".into();
    }
    let cubes: Vec<String> = g
        .cubes()
        .iter()
        .map(|c| {
            if c.vars() == 0 {
                return "t".to_string();
            }
            let lits: Vec<String> = super::bits_of(c.vars())
                .into_iter()
                .map(|i| if c.pos >> i & 1 == 1 { i.to_string() } else { format!("!{i}") })
                .collect();
            lits.join(" & ")
        })
        .collect();
    if cubes.len() == 1 {
        cubes[0].clone()
    } else {
        cubes.iter().map(|c| format!("({c})")).collect::<Vec<_>>().join(" | ")
    }
}

pub fn parse_hoa(text: &str) -> Result<Nba, AutomatonError> {
    let err = |line: usize, msg: &str| AutomatonError::Hoa { line, msg: msg.to_string() };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let mut n_states: Option<usize> = None;
    let mut starts = Vec::new();
    let mut ap: Vec<String> = Vec::new();
    let mut seen_version = false;
    for (ln, l) in lines.by_ref() {
        if l == "--BODY--" {
            break;
        }
        let (key, rest) = l.split_once(':').ok_or_else(|| err(ln, "expected `name: value`"))?;
        let rest = rest.trim();
        match key {
            "HOA" => {
                if rest != "v1" {
                    return Err(AutomatonError::HoaUnsupported(format!("version {rest}")));
                }
                seen_version = true;
            }
            "States" => n_states = Some(rest.parse().map_err(|_| err(ln, "bad state count"))?),
            "Start" => {
                if rest.contains('&') {
                    return Err(AutomatonError::HoaUnsupported("conjunctive start states".into()));
                }
                starts.push(rest.parse::<usize>().map_err(|_| err(ln, "bad start state"))?);
            }
            "AP" => {
                let (count, names) = rest.split_once(' ').unwrap_or((rest, ""));
                let count: usize = count.parse().map_err(|_| err(ln, "bad AP count"))?;
                ap = names.split('"').skip(1).step_by(2).map(str::to_string).collect();
                if ap.len() != count {
                    return Err(err(ln, "AP count does not match names"));
                }
                if count > 64 {
                    return Err(AutomatonError::TooManyAtoms(count));
                }
            }
            "Acceptance" => {
                let norm: String = rest.chars().filter(|c| !c.is_whitespace()).collect();
                if norm != "1Inf(0)" {
                    return Err(AutomatonError::HoaUnsupported(format!("acceptance `{rest}`")));
                }
            }
            _ => {}
        }
    }
    if !seen_version {
        return Err(err(1, "missing `HOA: v1` header"));
    }
    let n = n_states.ok_or_else(|| err(1, "missing `States:` header"))?;
    let mut nba = Nba::new(ap.clone());
    for q in 0..n {
        nba.add_state(q.to_string(), false);
    }
    if starts.iter().any(|&q| q >= n) {
        return Err(err(1, "start state out of range"));
    }
    nba.initial = starts;
    let mut cur: Option<usize> = None;
    let mut ended = false;
    for (ln, l) in lines {
        if l == "--END--" {
            ended = true;
            break;
        }
        if let Some(rest) = l.strip_prefix("State:") {
            let rest = rest.trim();
            let (id, tail) = rest.split_once(' ').unwrap_or((rest, ""));
            if id.starts_with('[') {
                return Err(AutomatonError::HoaUnsupported("state labels".into()));
            }
            let q: usize = id.parse().map_err(|_| err(ln, "bad state id"))?;
            if q >= n {
                return Err(err(ln, "state out of range"));
            }
            let mut tail = tail.trim();
            if let Some(open) = tail.find('"') {
                let close = tail[open + 1..].find('"').ok_or_else(|| err(ln, "unterminated state name"))? + open + 1;
                nba.labels[q] = tail[open + 1..close].to_string();
                tail = &tail[close + 1..];
            }
            if let Some(open) = tail.find('{') {
                let sets = &tail[open + 1..tail.rfind('}').ok_or_else(|| err(ln, "unterminated acceptance set"))?];
                for s in sets.split_whitespace() {
                    if s != "0" {
                        return Err(AutomatonError::HoaUnsupported(format!("acceptance set {s}")));
                    }
                    nba.accepting[q] = true;
                }
            }
            cur = Some(q);
            continue;
        }
        let q = cur.ok_or_else(|| err(ln, "edge before any State:"))?;
        let Some(body) = l.strip_prefix('[') else {
            return Err(AutomatonError::HoaUnsupported("implicit labels".into()));
        };
        let close = body.find(']').ok_or_else(|| err(ln, "unterminated label"))?;
        let guard = LabelParser { s: &body.as_bytes()[..close], pos: 0, n_ap: ap.len() }
            .parse()
            .map_err(|m| err(ln, &m))?;
        let tail = body[close + 1..].trim();
        if tail.contains('{') {
            return Err(AutomatonError::HoaUnsupported("transition-based acceptance".into()));
        }
        if tail.contains('&') {
            return Err(AutomatonError::HoaUnsupported("alternating transitions".into()));
        }
        let t: usize = tail.parse().map_err(|_| err(ln, "bad target state"))?;
        if t >= n {
            return Err(err(ln, "target out of range"));
        }
        nba.add_edge(q, t, guard);
    }
    if !ended {
        return Err(err(text.lines().count(), "missing --END--"));
    }
    Ok(nba)
}

struct LabelParser<'a> {
    s: &'a [u8],
    pos: usize,
    n_ap: usize,
}

impl LabelParser<'_> {
    fn skip(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }
    fn eat(&mut self, c: u8) -> bool {
        self.skip();
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }
    fn parse(mut self) -> Result<Guard, String> {
        let g = self.or()?;
        self.skip();
        if self.pos != self.s.len() {
            return Err(format!("trailing input in label at byte {}", self.pos));
        }
        Ok(g)
    }
    fn or(&mut self) -> Result<Guard, String> {
        let mut g = self.and()?;
        while self.eat(b'|') {
            g = g.or(&self.and()?);
        }
        Ok(g)
    }
    fn and(&mut self) -> Result<Guard, String> {
        let mut g = self.atom()?;
        while self.eat(b'&') {
            g = g.and(&self.atom()?);
        }
        Ok(g)
    }
    fn atom(&mut self) -> Result<Guard, String> {
        self.skip();
        match self.s.get(self.pos) {
            Some(b'!') => {
                self.pos += 1;
                Ok(self.atom()?.not())
            }
            Some(b'(') => {
                self.pos += 1;
                let g = self.or()?;
                if !self.eat(b')') {
                    return Err("expected `)`".into());
                }
                Ok(g)
            }
            Some(b't') => {
                self.pos += 1;
                Ok(Guard::top())
            }
            Some(b'f') => {
                self.pos += 1;
                Ok(Guard::bottom())
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let i: usize = std::str::from_utf8(&self.s[start..self.pos]).unwrap().parse().unwrap();
                if i >= self.n_ap {
                    return Err(format!("atom index {i} out of range"));
                }
                Ok(Guard::lit(i, true))
            }
            _ => Err(format!("unexpected input in label at byte {}", self.pos)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::translate;
    use crate::ltl::parse;

    #[test]
    fn round_trip_preserves_language() {
        let nba = translate(&parse("F (a && !b && F b) && (!c U d)").unwrap()).unwrap();
        let back = parse_hoa(&to_hoa(&nba)).unwrap();
        assert_eq!(back.num_states(), nba.num_states());
        assert_eq!(back.ap, nba.ap);
        for (i, j, g) in nba.edges() {
            assert!(back.guard(i, j).unwrap().equivalent(g));
        }
        assert_eq!(back.accepting, nba.accepting);
    }

    #[test]
    fn reads_ltl2ba_style_labels() {
        let src = "HOA: v1\nStates: 2\nStart: 0\nAP: 2 \"a\" \"b\"\nAcceptance: 1 Inf(0)\n--BODY--\n\
                   State: 0\n[!0 | (0 & !1)] 0\n[0 & 1] 1\nState: 1 {0}\n[t] 1\n--END--\n";
        let nba = parse_hoa(src).unwrap();
        assert!(nba.accepts(&[0, 3]));
        assert!(!nba.accepts(&[1]));
        assert!(!nba.self_loop(0).unwrap().is_tautology());
    }

    #[test]
    fn rejects_generalized_acceptance() {
        let src = "HOA: v1\nStates: 1\nStart: 0\nAP: 0\nAcceptance: 2 Inf(0)&Inf(1)\n--BODY--\nState: 0\n--END--\n";
        assert!(matches!(parse_hoa(src), Err(AutomatonError::HoaUnsupported(_))));
    }
}

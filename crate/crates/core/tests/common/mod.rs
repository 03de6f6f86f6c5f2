#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use taskplan::model::{Scenario, Team};
use taskplan::planner::Instance;
use taskplan::poset::{Poset, Subtask};

/// A random team of 1-3 agents over four regions, with random
/// road lengths per agent type and a two-role collaborative behavior.
pub fn random_team(rng: &mut ChaCha8Rng) -> Team {
    let regions = ["b", "p1", "p2", "p3"];
    let mut distances = serde_json::Map::new();
    for kind in ["A", "B"] {
        let mut legs = Vec::new();
        for i in 0..regions.len() {
            for j in i + 1..regions.len() {
                let d: f64 = rng.gen_range(1..=20) as f64;
                legs.push(serde_json::json!([regions[i], regions[j], d]));
            }
        }
        distances.insert(kind.into(), legs.into());
    }
    let n_agents = rng.gen_range(1..=3);
    let sweep: f64 = rng.gen_range(1..=15) as f64;
    let mow: f64 = rng.gen_range(1..=15) as f64;
    let agents: Vec<_> = (0..n_agents)
        .map(|i| {
            let mut local = serde_json::Map::new();
            if i == 0 || rng.gen_bool(0.6) {
                local.insert("sweep".into(), sweep.into());
            }
            if rng.gen_bool(0.5) {
                local.insert("mow".into(), mow.into());
            }
            let collab: Vec<&str> = ["lift", "hold"].into_iter().filter(|_| rng.gen_bool(0.6)).collect();
            serde_json::json!({
                "id": format!("r{i}"),
                "type": if rng.gen_bool(0.5) { "A" } else { "B" },
                "initial": *regions.choose(rng).unwrap(),
                "local_actions": local,
                "collab_actions": collab,
            })
        })
        .collect();
    let scenario = serde_json::json!({
        "regions": regions.iter().enumerate().map(|(i, r)| serde_json::json!({"id": i, "name": r})).collect::<Vec<_>>(),
        "distances": distances,
        "agents": agents,
        "behaviors": [{"name": "carry", "requires": ["lift", "hold"], "duration": rng.gen_range(1..=15) as f64}],
    });
    Team::new(&Scenario::from_json(&scenario.to_string()).unwrap()).unwrap()
}

/// A random poset over atoms the team can serve, or `None` if it serves none.
pub fn random_poset(rng: &mut ChaCha8Rng, team: &Team, max_tasks: usize) -> Option<Poset> {
    let mut atoms = Vec::new();
    for r in ["p1", "p2", "p3"] {
        for a in ["sweep", "mow", "carry"] {
            atoms.push(format!("{a}_{r}"));
        }
        atoms.push(r.to_string());
    }
    let infeasible: BTreeSet<String> = team.infeasible_atoms(&atoms);
    let atoms: Vec<String> = atoms.into_iter().filter(|a| !infeasible.contains(a)).collect();
    if atoms.is_empty() {
        return None;
    }
    let n = rng.gen_range(1..=max_tasks);
    let mut ap: Vec<String> = Vec::new();
    let mut subtasks = Vec::new();
    for i in 0..n {
        let atom = atoms.choose(rng).unwrap().clone();
        let bit = match ap.iter().position(|a| *a == atom) {
            Some(b) => b,
            None => {
                ap.push(atom);
                ap.len() - 1
            }
        };
        subtasks.push(Subtask {
            index: i,
            positive: 1 << bit,
            negative: 0,
            selfloop_pos: 0,
            selfloop_neg: 0,
            waits: true,
            letter: 1 << bit,
        });
    }
    let mut leq = BTreeSet::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.3) {
                leq.insert((i, j));
            }
        }
    }
    let mut opposed = Vec::new();
    if n >= 2 && rng.gen_bool(0.5) {
        let arity = if n >= 3 && rng.gen_bool(0.3) { 3 } else { 2 };
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        let mut set: Vec<usize> = idx[..arity].to_vec();
        set.sort();
        opposed.push(set);
    }
    Some(Poset { id: 0, ap, subtasks, leq, opposed, language_size: 1, run: vec![] })
}

/// Seeded random instance within the oracle caps.
pub fn random_case(seed: u64, max_tasks: usize) -> (Team, Poset) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let team = random_team(&mut rng);
        if let Some(p) = random_poset(&mut rng, &team, max_tasks) {
            if Instance::from_poset(&p, &team).is_ok() {
                return (team, p);
            }
        }
    }
}

//! Bundled scenarios and missions. The JSON files are produced by
//! `scripts/gen_fixtures.py` and live in `crates/core/fixtures/`.

use thiserror::Error;

use crate::ltl::{parse, Formula, LtlError};
use crate::model::{ModelError, Scenario, Team};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("unknown fixture `{0}`")]
    Unknown(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ltl(#[from] LtlError),
}

const SCENARIOS: &[(&str, &str)] = &[
    ("pv_farm_12", include_str!("../fixtures/pv_farm_12.json")),
    ("pv_farm_12_failures", include_str!("../fixtures/pv_farm_12_failures.json")),
    ("pv_farm_24", include_str!("../fixtures/pv_farm_24.json")),
    ("hw_lab_6", include_str!("../fixtures/hw_lab_6.json")),
    ("toy_2x2", include_str!("../fixtures/toy_2x2.json")),
    ("toy_collab", include_str!("../fixtures/toy_collab.json")),
];

const FORMULAS: &[(&str, &str)] = &[
    ("phi1", include_str!("../fixtures/formulas/phi1.ltl")),
    ("phi2", include_str!("../fixtures/formulas/phi2.ltl")),
    ("phi3", include_str!("../fixtures/formulas/phi3.ltl")),
    ("phi4", include_str!("../fixtures/formulas/phi4.ltl")),
    ("example3", include_str!("../fixtures/formulas/example3.ltl")),
    ("toy_2x2", include_str!("../fixtures/formulas/toy_2x2.ltl")),
    ("toy_collab", include_str!("../fixtures/formulas/toy_collab.ltl")),
];

/// Fixture name, scenario, mission.
const PAIRINGS: &[(&str, &str, &str)] = &[
    ("pv_farm_12", "pv_farm_12", "phi1"),
    ("pv_farm_12_failures", "pv_farm_12_failures", "phi1"),
    ("pv_farm_24", "pv_farm_24", "phi1"),
    ("hw_lab_6", "hw_lab_6", "phi4"),
    ("example3", "pv_farm_12", "example3"),
    ("toy_2x2", "toy_2x2", "toy_2x2"),
    ("toy_collab", "toy_collab", "toy_collab"),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PAIRINGS.iter().map(|p| p.0)
}

pub fn scenario_json(name: &str) -> Result<&'static str, FixtureError> {
    SCENARIOS.iter().find(|s| s.0 == name).map(|s| s.1).ok_or_else(|| FixtureError::Unknown(name.into()))
}

/// Mission text by name (`phi1`..`phi4`, `example3`, `toy_*`).
pub fn formula_text(name: &str) -> Result<&'static str, FixtureError> {
    FORMULAS.iter().find(|s| s.0 == name).map(|s| s.1.trim()).ok_or_else(|| FixtureError::Unknown(name.into()))
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub scenario: Scenario,
    pub team: Team,
    pub formula_text: &'static str,
    pub formula: Formula,
}

pub fn load_fixture(name: &str) -> Result<Fixture, FixtureError> {
    let &(name, scen, form) = PAIRINGS.iter().find(|p| p.0 == name).ok_or_else(|| FixtureError::Unknown(name.into()))?;
    let scenario = Scenario::from_json(scenario_json(scen)?)?;
    let team = Team::new(&scenario)?;
    let formula_text = formula_text(form)?;
    let formula = parse(formula_text)?;
    Ok(Fixture { name, scenario, team, formula_text, formula })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(t: &Team, prefix: &str) -> usize {
        t.agents.iter().filter(|a| a.name.starts_with(prefix)).count()
    }

    #[test]
    fn every_fixture_loads() {
        for n in names() {
            load_fixture(n).unwrap();
        }
        assert!(load_fixture("nope").is_err());
    }

    #[test]
    fn team_mixes() {
        let f = load_fixture("pv_farm_12").unwrap();
        assert_eq!((count(&f.team, "vf"), count(&f.team, "vl"), count(&f.team, "vs")), (6, 3, 3));
        let f = load_fixture("hw_lab_6").unwrap();
        assert_eq!(count(&f.team, "vf"), 4);
        assert_eq!(f.team.agents.len() - 4, 2);
        let f = load_fixture("pv_farm_24").unwrap();
        assert_eq!(f.team.agents.len(), 24);
    }

    #[test]
    fn farm_durations() {
        let f = load_fixture("pv_farm_12").unwrap();
        let b = &f.team.behaviors;
        let got: Vec<f64> = ["fix", "repair", "wash", "scan"].iter().map(|k| b[*k].duration).collect();
        assert_eq!(got, vec![72.0, 576.0, 565.0, 95.0]);
        let vs = f.team.agents.iter().find(|a| a.name == "vs1").unwrap();
        assert_eq!((vs.local["sweep"], vs.local["mow"]), (190.0, 190.0));
        let vf = f.team.agents.iter().find(|a| a.name == "vf1").unwrap();
        assert_eq!(vf.local["temp"], 10.0);
    }
}

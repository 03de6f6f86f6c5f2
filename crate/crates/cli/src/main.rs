use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use taskplan::automaton::{parse_hoa, to_hoa, translate, Nba};
use taskplan::fixtures;
use taskplan::ltl::parse;
use taskplan::model::{Scenario, Team};
use taskplan::oracle::exact_optimum;
use taskplan::planner::{
    gantt_rows, node_from_plan, plan, plan_json, rank_posets, schedule, validate, Instance, LbMode, PlanConfig, PlanError,
    PlanJson, PlanSource,
};
use taskplan::poset::{MiningConfig, Poset, PosetMiner, WordChecker};
use taskplan::pruning::{prune, PruneError};
use taskplan::sim::{simulate, SimConfig, SimError};

#[derive(Parser)]
#[command(name = "taskplan", version, about = "Plan and simulate multi-robot missions given as sc-LTL formulas")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Translate a formula into a HOA automaton.
    Translate {
        #[command(flatten)]
        mission: Mission,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Remove infeasible and decomposable transitions for a team.
    Prune {
        #[command(flatten)]
        mission: Mission,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Mine posets from the pruned automaton.
    Posets {
        #[command(flatten)]
        mission: Mission,
        #[command(flatten)]
        search: Search,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Full pipeline: prune, mine posets, assign and schedule.
    Plan {
        #[command(flatten)]
        mission: Mission,
        #[command(flatten)]
        search: Search,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Execute a plan with noisy durations and optional failures.
    Simulate {
        /// Directory written by `plan`.
        #[arg(long)]
        plan_dir: PathBuf,
        #[command(flatten)]
        team: TeamArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Relative half-width of duration noise, e.g. 0.5 for ±50%.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Inject the failures listed in the scenario.
        #[arg(long)]
        with_failures: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact optimum of a planned poset by enumeration (small instances only).
    Oracle {
        #[arg(long)]
        plan_dir: PathBuf,
        #[command(flatten)]
        team: TeamArgs,
    },
}

#[derive(Args)]
struct TeamArgs {
    /// Bundled scenario/mission pair; see `--fixture list`.
    #[arg(long)]
    fixture: Option<String>,
    /// Scenario JSON; overrides the fixture's scenario.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Args)]
struct Mission {
    #[command(flatten)]
    team: TeamArgs,
    /// Formula text.
    #[arg(long, conflicts_with_all = ["formula_file", "hoa"])]
    formula: Option<String>,
    #[arg(long, conflicts_with = "hoa")]
    formula_file: Option<PathBuf>,
    /// Automaton in HOA format instead of a formula.
    #[arg(long)]
    hoa: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LbArg {
    Min,
    Max,
}

#[derive(Args)]
struct Search {
    /// Seconds for poset mining.
    #[arg(long, default_value_t = 5.0)]
    budget_poset: f64,
    /// Seconds for the assignment search.
    #[arg(long, default_value_t = 10.0)]
    budget_bnb: f64,
    #[arg(long, value_enum, default_value_t = LbArg::Min)]
    lb_mode: LbArg,
    #[arg(long, default_value_t = 3)]
    opposed_arity: usize,
    /// Worker threads; 1 is deterministic.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Number of best-ranked posets searched.
    #[arg(long, default_value_t = 3)]
    posets: usize,
    /// Accepted for reproducible invocations; planning itself draws no randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Search {
    fn secs(v: f64, what: &str) -> Result<Duration> {
        if !(v > 0.0 && v.is_finite()) {
            bail!("{what} must be a positive number of seconds");
        }
        Ok(Duration::from_secs_f64(v))
    }
    fn config(&self) -> Result<PlanConfig> {
        Ok(PlanConfig {
            poset_budget: Self::secs(self.budget_poset, "--budget-poset")?,
            bnb_budget: Self::secs(self.budget_bnb, "--budget-bnb")?,
            lb_mode: match self.lb_mode {
                LbArg::Min => LbMode::Min,
                LbArg::Max => LbMode::Max,
            },
            opposed_arity: self.opposed_arity,
            jobs: self.jobs.max(1),
            posets_to_search: self.posets.max(1),
            node_limit: None,
        })
    }
}

enum Source {
    Formula(String),
    Hoa(String),
}

impl TeamArgs {
    fn scenario(&self) -> Result<Scenario> {
        if let Some(p) = &self.scenario {
            return Ok(Scenario::from_json(&read(p)?)?);
        }
        match &self.fixture {
            Some(name) => Ok(fixtures::load_fixture(name)?.scenario),
            None => bail!("give --scenario or --fixture"),
        }
    }
}

impl Mission {
    fn source(&self) -> Result<Source> {
        if let Some(f) = &self.formula {
            return Ok(Source::Formula(f.clone()));
        }
        if let Some(p) = &self.formula_file {
            return Ok(Source::Formula(read(p)?.trim().to_string()));
        }
        if let Some(p) = &self.hoa {
            return Ok(Source::Hoa(read(p)?));
        }
        match &self.team.fixture {
            Some(name) => Ok(Source::Formula(fixtures::load_fixture(name)?.formula_text.to_string())),
            None => bail!("give --formula, --formula-file, --hoa or --fixture"),
        }
    }
}

impl Source {
    fn as_plan_source(&self) -> PlanSource<'_> {
        match self {
            Source::Formula(f) => PlanSource::Formula(f),
            Source::Hoa(h) => PlanSource::Hoa(h),
        }
    }
    fn automaton(&self) -> Result<Nba, PlanError> {
        self.as_plan_source().automaton()
    }
}

fn read(p: &Path) -> Result<String> {
    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
}

fn write_csv<T: serde::Serialize>(dir: &Path, name: &str, rows: &[T]) -> Result<()> {
    let p = dir.join(name);
    let mut w = csv::Writer::from_path(&p).with_context(|| format!("writing {}", p.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn pruned(source: &Source, team: &Team) -> Result<(Nba, taskplan::pruning::PruneReport)> {
    let nba = source.automaton()?;
    let infeasible = team.infeasible_atoms(&nba.ap);
    prune(&nba, &infeasible).map_err(|PruneError::Unsatisfiable| PlanError::Unsatisfiable.into())
}

fn cmd_translate(mission: &Mission, out: Option<&Path>) -> Result<()> {
    let nba = match mission.source()? {
        Source::Formula(f) => translate(&parse(&f)?)?,
        Source::Hoa(h) => parse_hoa(&h)?,
    };
    let hoa = to_hoa(&nba);
    match out {
        Some(p) => fs::write(p, hoa).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{hoa}"),
    }
    Ok(())
}

fn cmd_prune(mission: &Mission, out: &Path) -> Result<()> {
    let team = Team::new(&mission.team.scenario()?)?;
    let (nba, report) = pruned(&mission.source()?, &team)?;
    fs::create_dir_all(out)?;
    write(out, "prune_report.json", &serde_json::to_string_pretty(&report)?)?;
    write(out, "pruned.hoa", &to_hoa(&nba))?;
    for line in report.summary_lines() {
        println!("{line}");
    }
    Ok(())
}

fn cmd_posets(mission: &Mission, search: &Search, out: &Path) -> Result<()> {
    let cfg = search.config()?;
    let team = Team::new(&mission.team.scenario()?)?;
    let (nba, _) = pruned(&mission.source()?, &team)?;
    let mining = MiningConfig { budget: cfg.poset_budget, opposed_arity: cfg.opposed_arity, max_posets: usize::MAX };
    let mut posets: Vec<Poset> = PosetMiner::new(&nba, mining).collect();
    if posets.is_empty() {
        return Err(PlanError::NoSolution.into());
    }
    rank_posets(&mut posets);
    fs::create_dir_all(out)?;
    write(out, "posets.json", &serde_json::to_string_pretty(&posets)?)?;
    for p in &posets {
        write(out, &format!("poset_{}.dot", p.id), &p.to_dot())?;
        println!("poset {}: {} subtasks, {} order pairs, {} opposed sets, language {}", p.id, p.len(), p.leq.len(), p.opposed.len(), p.language_size);
    }
    Ok(())
}

fn cmd_plan(mission: &Mission, search: &Search, out: &Path) -> Result<()> {
    let cfg = search.config()?;
    let team = Team::new(&mission.team.scenario()?)?;
    let source = mission.source()?;
    let progress = |imp: &taskplan::planner::Improvement| println!("t={:.3} incumbent={:.3}", imp.elapsed, imp.makespan);
    let outcome = plan(source.as_plan_source(), &team, &cfg, &progress)?;
    let inst = outcome.instance(&team);
    validate(&inst, &outcome.poset, &outcome.node, &outcome.schedule).map_err(|e| anyhow::anyhow!("plan failed validation: {e}"))?;
    let mut order: Vec<usize> = (0..inst.len()).collect();
    order.sort_by(|&a, &b| outcome.schedule.start[a].total_cmp(&outcome.schedule.start[b]).then(a.cmp(&b)));
    let letters: Vec<_> = order.iter().map(|&w| outcome.poset.subtasks[w].letter).collect();
    let original = source.automaton()?;
    let word: Vec<_> = letters.iter().map(|&l| original.letter(outcome.poset.names(l))).collect();
    if !WordChecker::new(&original).accepts(&word) {
        bail!("plan failed validation: its word is not accepted by the mission automaton");
    }
    fs::create_dir_all(out)?;
    let pj = plan_json(outcome.poset.id, &inst, &outcome.node, &outcome.schedule, &outcome.history);
    write(out, "plan.json", &serde_json::to_string_pretty(&pj)?)?;
    write(out, "poset.json", &serde_json::to_string_pretty(&outcome.poset)?)?;
    write(out, "poset.dot", &outcome.poset.to_dot())?;
    write(out, "prune_report.json", &serde_json::to_string_pretty(&outcome.prune_report)?)?;
    write_csv(out, "gantt.csv", &gantt_rows(&inst, &outcome.node, &outcome.schedule))?;
    for line in outcome.prune_report.summary_lines() {
        println!("{line}");
    }
    println!(
        "makespan={:.3} poset={} posets_found={} nodes_expanded={} pruned={:.1}% proven={}",
        outcome.makespan(),
        outcome.poset.id,
        outcome.posets.len(),
        outcome.nodes_expanded,
        outcome.pruned_pct,
        outcome.proven
    );
    Ok(())
}

struct LoadedPlan {
    team: Team,
    scenario: Scenario,
    poset: Poset,
    plan: PlanJson,
}

fn load_plan(dir: &Path, team: &TeamArgs) -> Result<LoadedPlan> {
    let scenario = team.scenario()?;
    let poset: Poset = serde_json::from_str(&read(&dir.join("poset.json"))?).context("parsing poset.json")?;
    let plan: PlanJson = serde_json::from_str(&read(&dir.join("plan.json"))?).context("parsing plan.json")?;
    Ok(LoadedPlan { team: Team::new(&scenario)?, scenario, poset, plan })
}

fn cmd_simulate(dir: &Path, team: &TeamArgs, seed: u64, noise: f64, with_failures: bool, out: Option<&Path>) -> Result<()> {
    let lp = load_plan(dir, team)?;
    let inst = Instance::from_poset(&lp.poset, &lp.team)?;
    let node = node_from_plan(&inst, &lp.plan).map_err(|e| anyhow::anyhow!("plan does not match scenario: {e}"))?;
    let sched = schedule(&inst, &node).context("plan cannot be scheduled")?;
    let mut cfg = SimConfig { noise, seed, ..Default::default() };
    if with_failures {
        for f in &lp.scenario.failures {
            let a = lp.team.agent_id(&f.agent).with_context(|| format!("failure names unknown agent {}", f.agent))?;
            cfg.failures.push((a, f.time));
        }
    }
    let trace = simulate(&inst, &lp.poset, &node, &sched, &cfg)?;
    let out = out.unwrap_or(dir);
    fs::create_dir_all(out)?;
    write(out, "trace.json", &serde_json::to_string_pretty(&trace)?)?;
    write_csv(out, "trace_gantt.csv", &trace.segments)?;
    for r in &trace.replans {
        println!("t={:.3} replan failed={} makespan={:.3} planning={:.3}s", r.time, r.failed.join(","), r.makespan, r.planning_secs);
    }
    println!(
        "makespan={:.3} planned={:.3} messages relation={} coalition={} selfloop={}",
        trace.makespan, sched.makespan, trace.messages.relation, trace.messages.coalition, trace.messages.selfloop
    );
    Ok(())
}

fn cmd_oracle(dir: &Path, team: &TeamArgs) -> Result<()> {
    let lp = load_plan(dir, team)?;
    let inst = Instance::from_poset(&lp.poset, &lp.team)?;
    let exact = exact_optimum(&inst)?;
    println!("oracle={:.3} plan={:.3} gap={:.3}", exact.makespan, lp.plan.makespan, lp.plan.makespan - exact.makespan);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Translate { mission, out } => cmd_translate(mission, out.as_deref()),
        Cmd::Prune { mission, out } => cmd_prune(mission, out),
        Cmd::Posets { mission, search, out } => cmd_posets(mission, search, out),
        Cmd::Plan { mission, search, out } => cmd_plan(mission, search, out),
        Cmd::Simulate { plan_dir, team, seed, noise, with_failures, out } => {
            cmd_simulate(plan_dir, team, *seed, *noise, *with_failures, out.as_deref())
        }
        Cmd::Oracle { plan_dir, team } => cmd_oracle(plan_dir, team),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<PlanError>() {
        Some(PlanError::Unsatisfiable) => 2,
        Some(PlanError::InfeasibleForTeam(_)) => 3,
        Some(PlanError::NoSolution) => 4,
        _ if e.downcast_ref::<SimError>().is_some() => 5,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Cmd::Plan { mission, .. } | Cmd::Prune { mission, .. } | Cmd::Posets { mission, .. } = &cli.cmd {
        if mission.team.fixture.as_deref() == Some("list") {
            fixtures::names().for_each(|n| println!("{n}"));
            return ExitCode::SUCCESS;
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

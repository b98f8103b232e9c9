//! Ground truth for the enumeration and pruning machinery, kept deliberately
//! independent of [`crate::search`]: plans are re-derived by a plain
//! recursive walk over the raw applicability semantics, so agreement between
//! the two routes means something.
//!
//! [`check_safety`] machine-checks the pruning guarantee on small tasks: it
//! compares the equivalence classes of the full plan set against those
//! reachable in the pruned space, from the initial state or from every
//! reachable state, and reports each class the pruned space lost.

use crate::equivalence::{equiv_key, EquivalenceKey, OrderImportantSet, Plan};
use crate::pruning::{PruningStrategy, StubbornConfig};
use crate::sas::write_sas;
use crate::search::{enumerate_plans_from, optimal_cost_from, Bound, SearchError, SearchLimits};
use crate::task::{Action, ActionId, Cost, PartialAssignment, State, Task, Variable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::{HashSet, VecDeque};
use std::fs;
use std::hash::{Hash, Hasher};
use std::io;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle enumeration hit a limit; the check would be incomplete")]
    Incomplete,
    #[error(transparent)]
    Search(#[from] SearchError),
}

const DEFAULT_ORACLE_BUDGET: u64 = 10_000_000;

/// Every plan from the initial state with cost at most `bound` and length at
/// most `max_len`, by exhaustive recursion over raw applicability. Sorted
/// like search results so the two routes compare directly.
pub fn brute_force_plans(
    task: &Task,
    bound: Cost,
    max_len: usize,
    node_budget: Option<u64>,
) -> Result<Vec<Plan>, OracleError> {
    brute_force_plans_from(task, &task.initial, bound, max_len, node_budget)
}

pub fn brute_force_plans_from(
    task: &Task,
    start: &State,
    bound: Cost,
    max_len: usize,
    node_budget: Option<u64>,
) -> Result<Vec<Plan>, OracleError> {
    let budget = node_budget.unwrap_or(DEFAULT_ORACLE_BUDGET);
    let mut plans = Vec::new();
    let mut path = Vec::new();
    let mut nodes = 0u64;
    walk(
        task,
        start,
        0,
        bound,
        max_len,
        budget,
        &mut nodes,
        &mut path,
        &mut plans,
    )?;
    plans.sort_unstable();
    Ok(plans)
}

#[allow(clippy::too_many_arguments)]
fn walk(
    task: &Task,
    state: &State,
    g: Cost,
    bound: Cost,
    max_len: usize,
    budget: u64,
    nodes: &mut u64,
    path: &mut Vec<ActionId>,
    plans: &mut Vec<Plan>,
) -> Result<(), OracleError> {
    *nodes += 1;
    if *nodes > budget {
        return Err(OracleError::Incomplete);
    }
    if task.is_goal(state) {
        plans.push(Plan {
            actions: path.clone(),
            cost: g,
        });
    }
    if path.len() >= max_len {
        return Ok(());
    }
    for action in 0..task.actions.len() {
        let cost = g + task.actions[action].cost;
        if cost > bound || !task.is_applicable(state, action) {
            continue;
        }
        let next = task.apply(state, action).expect("checked applicable");
        path.push(action);
        walk(task, &next, cost, bound, max_len, budget, nodes, path, plans)?;
        path.pop();
    }
    Ok(())
}

/// All states reachable from the initial state in the full (unpruned) space,
/// in sorted order.
pub fn reachable_states(task: &Task) -> Vec<State> {
    let mut seen: HashSet<State> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(task.initial.clone());
    queue.push_back(task.initial.clone());
    while let Some(state) = queue.pop_front() {
        for action in task.applicable_actions(&state) {
            let next = task.apply(&state, action).expect("checked applicable");
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    let mut states: Vec<State> = seen.into_iter().collect();
    states.sort_unstable();
    states
}

/// How many start states the safety check quantifies over.
#[derive(Debug, Copy, Clone, PartialEq, Eq, Serialize)]
pub enum SafetyMode {
    /// The planner-level guarantee: classes preserved from the initial state.
    InitialOnly,
    /// The full per-state guarantee, checked from every reachable state.
    AllReachable,
}

/// One lost class: from `state`, no plan in the pruned space falls into the
/// class of `witness`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub state: State,
    pub class: EquivalenceKey,
    pub witness: Plan,
}

#[derive(Debug, Clone, Serialize)]
pub struct SafetyReport {
    /// Fingerprint of the serialized task, stable across runs.
    pub task_id: String,
    pub variant: PruningStrategy,
    pub x: OrderImportantSet,
    pub bound: Bound,
    pub mode: SafetyMode,
    pub states_checked: u64,
    pub full_plan_count: u64,
    pub pruned_plan_count: u64,
    pub full_class_count: u64,
    pub covered_class_count: u64,
    pub violations: Vec<Violation>,
}

impl SafetyReport {
    pub fn is_safe(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn task_fingerprint(task: &Task) -> String {
    let mut hasher = std::collections::hash_map::DefaultHasher::new();
    write_sas(task).hash(&mut hasher);
    format!("task-{:016x}", hasher.finish())
}

/// Compares full-space plan classes against pruned-space plan classes under
/// the relation `config.x` induces. A multiplier bound is re-anchored to the
/// optimal cost of each start state; an absolute bound applies as-is.
///
/// Errors with [`OracleError::Incomplete`] rather than reporting over a
/// truncated plan set.
pub fn check_safety(
    task: &Task,
    config: &StubbornConfig,
    bound: Bound,
    limits: &SearchLimits,
    mode: SafetyMode,
) -> Result<SafetyReport, OracleError> {
    let starts = match mode {
        SafetyMode::InitialOnly => vec![task.initial.clone()],
        SafetyMode::AllReachable => reachable_states(task),
    };
    let max_len = limits.effective_max_len(task);
    let mut report = SafetyReport {
        task_id: task_fingerprint(task),
        variant: config.variant,
        x: config.x.clone(),
        bound,
        mode,
        states_checked: 0,
        full_plan_count: 0,
        pruned_plan_count: 0,
        full_class_count: 0,
        covered_class_count: 0,
        violations: Vec::new(),
    };
    let full_config = StubbornConfig::new(PruningStrategy::None, OrderImportantSet::empty());
    for start in starts {
        let absolute = match bound {
            Bound::Absolute(b) => b,
            Bound::Multiplier(m) => match optimal_cost_from(task, &start, &full_config) {
                Some(optimal) => m.scale_floor(optimal),
                // No plans from this state, nothing to preserve.
                None => continue,
            },
        };
        report.states_checked += 1;
        let full = brute_force_plans_from(task, &start, absolute, max_len, limits.node_budget)?;
        let pruned = enumerate_plans_from(
            task,
            &start,
            Bound::Absolute(absolute),
            config,
            limits,
        )?;
        if !pruned.complete {
            return Err(OracleError::Incomplete);
        }
        let full_set: HashSet<&Plan> = full.iter().collect();
        debug_assert!(
            pruned.plans.iter().all(|p| full_set.contains(p)),
            "pruned space produced a plan the full space does not contain"
        );
        report.full_plan_count += full.len() as u64;
        report.pruned_plan_count += pruned.plans.len() as u64;
        let covered: HashSet<EquivalenceKey> = pruned
            .plans
            .iter()
            .map(|p| equiv_key(p, &config.x))
            .collect();
        let mut seen: HashSet<EquivalenceKey> = HashSet::new();
        for plan in &full {
            let key = equiv_key(plan, &config.x);
            if !seen.insert(key.clone()) {
                continue;
            }
            report.full_class_count += 1;
            if covered.contains(&key) {
                report.covered_class_count += 1;
            } else {
                report.violations.push(Violation {
                    state: start.clone(),
                    class: key,
                    witness: plan.clone(),
                });
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, Serialize)]
pub enum CostMode {
    Unit,
    Random1To3,
}

/// Shape of a generated task. Bounds are clamped to keep the oracle's
/// exhaustive checks tractable: at most 4 variables with domains of at most
/// 3 values, and at most 8 actions.
#[derive(Debug, Copy, Clone, PartialEq, Eq, Serialize)]
pub struct RandomTaskSpec {
    pub variable_count: usize,
    pub max_domain: usize,
    pub action_count: usize,
    pub cost_mode: CostMode,
    pub seed: u64,
}

impl RandomTaskSpec {
    pub fn unit(seed: u64) -> Self {
        Self {
            variable_count: 4,
            max_domain: 3,
            action_count: 8,
            cost_mode: CostMode::Unit,
            seed,
        }
    }

    pub fn costed(seed: u64) -> Self {
        Self {
            cost_mode: CostMode::Random1To3,
            ..Self::unit(seed)
        }
    }
}

/// Deterministic: equal [`RandomTaskSpec`]s always yield the same task.
pub fn generate_task(spec: &RandomTaskSpec) -> Task {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let var_count = spec.variable_count.clamp(1, 4);
    let max_domain = spec.max_domain.clamp(1, 3);
    let action_count = spec.action_count.min(8);

    let variables: Vec<Variable> = (0..var_count)
        .map(|index| {
            let domain = rng.gen_range(1..=max_domain);
            Variable {
                index,
                name: format!("v{index}"),
                value_names: (0..domain).map(|d| format!("v{index}-{d}")).collect(),
            }
        })
        .collect();

    let random_assignment = |rng: &mut ChaCha8Rng, count: usize| {
        let mut vars: Vec<usize> = (0..var_count).collect();
        for i in 0..count {
            let j = rng.gen_range(i..var_count);
            vars.swap(i, j);
        }
        let pairs: Vec<(usize, usize)> = vars[..count]
            .iter()
            .map(|&v| (v, rng.gen_range(0..variables[v].domain_size())))
            .collect();
        PartialAssignment::new(pairs).expect("distinct variables")
    };

    let actions: Vec<Action> = (0..action_count)
        .map(|id| {
            let pre_count = rng.gen_range(0..=var_count);
            let precondition = random_assignment(&mut rng, pre_count);
            let eff_count = rng.gen_range(1..=var_count);
            let effect = random_assignment(&mut rng, eff_count);
            let cost = match spec.cost_mode {
                CostMode::Unit => 1,
                CostMode::Random1To3 => rng.gen_range(1..=3),
            };
            Action {
                id,
                name: format!("a{id}"),
                precondition,
                effect,
                cost,
            }
        })
        .collect();

    let initial = State::new(
        variables
            .iter()
            .map(|v| rng.gen_range(0..v.domain_size()))
            .collect(),
    );
    let goal_count = rng.gen_range(0..=var_count);
    let goal = random_assignment(&mut rng, goal_count);

    Task::new(
        variables,
        actions,
        initial,
        goal,
        matches!(spec.cost_mode, CostMode::Random1To3),
    )
    .expect("generated task is structurally valid")
}

/// Greedily shrinks a task that fails `check_safety`, keeping the failure
/// alive: drops actions, drops variables no remaining action or goal
/// mentions, and trims unused top domain values. Returns the smaller task
/// and the correspondingly remapped configuration.
pub fn shrink_failure(
    task: &Task,
    config: &StubbornConfig,
    bound: Bound,
    limits: &SearchLimits,
    mode: SafetyMode,
) -> (Task, StubbornConfig) {
    let violates = |task: &Task, config: &StubbornConfig| {
        matches!(check_safety(task, config, bound, limits, mode), Ok(report) if !report.is_safe())
    };
    let mut task = task.clone();
    let mut config = config.clone();
    debug_assert!(violates(&task, &config), "shrinking needs a failing input");
    loop {
        let mut shrunk = false;
        for victim in 0..task.actions.len() {
            let (candidate_task, candidate_config) = drop_action(&task, &config, victim);
            if violates(&candidate_task, &candidate_config) {
                task = candidate_task;
                config = candidate_config;
                shrunk = true;
                break;
            }
        }
        if shrunk {
            continue;
        }
        for victim in 0..task.variables.len() {
            if task.variables.len() == 1 || variable_is_mentioned(&task, victim) {
                continue;
            }
            let candidate_task = drop_variable(&task, victim);
            if violates(&candidate_task, &config) {
                task = candidate_task;
                shrunk = true;
                break;
            }
        }
        if shrunk {
            continue;
        }
        for victim in 0..task.variables.len() {
            let top = task.variables[victim].domain_size() - 1;
            if top == 0 || value_is_mentioned(&task, victim, top) {
                continue;
            }
            let mut candidate_task = task.clone();
            candidate_task.variables[victim].value_names.pop();
            if violates(&candidate_task, &config) {
                task = candidate_task;
                shrunk = true;
                break;
            }
        }
        if !shrunk {
            return (task, config);
        }
    }
}

fn drop_action(task: &Task, config: &StubbornConfig, victim: ActionId) -> (Task, StubbornConfig) {
    let mut task = task.clone();
    task.actions.remove(victim);
    for action in &mut task.actions {
        if action.id > victim {
            action.id -= 1;
        }
    }
    let mut config = config.clone();
    config.x = OrderImportantSet::from_ids(
        config
            .x
            .iter()
            .filter(|&a| a != victim)
            .map(|a| if a > victim { a - 1 } else { a }),
    );
    (task, config)
}

fn variable_is_mentioned(task: &Task, var: usize) -> bool {
    task.goal.get(var).is_some()
        || task.actions.iter().any(|a| {
            a.precondition.get(var).is_some() || a.effect.get(var).is_some()
        })
}

fn value_is_mentioned(task: &Task, var: usize, value: usize) -> bool {
    task.initial.value(var) == value
        || task.goal.get(var) == Some(value)
        || task.actions.iter().any(|a| {
            a.precondition.get(var) == Some(value) || a.effect.get(var) == Some(value)
        })
}

fn drop_variable(task: &Task, victim: usize) -> Task {
    let remap = |pa: &PartialAssignment| {
        PartialAssignment::new(
            pa.pairs()
                .iter()
                .map(|&(v, d)| (if v > victim { v - 1 } else { v }, d)),
        )
        .expect("distinct variables stay distinct")
    };
    let mut variables = task.variables.clone();
    variables.remove(victim);
    for (index, var) in variables.iter_mut().enumerate() {
        var.index = index;
    }
    let mut values = task.initial.values().to_vec();
    values.remove(victim);
    let actions = task
        .actions
        .iter()
        .map(|a| Action {
            id: a.id,
            name: a.name.clone(),
            precondition: remap(&a.precondition),
            effect: remap(&a.effect),
            cost: a.cost,
        })
        .collect();
    Task {
        variables,
        actions,
        initial: State::new(values),
        goal: remap(&task.goal),
        metric_flag: task.metric_flag,
    }
}

/// Persists a failing task and its report for replay: `output.sas` plus
/// `report.json` under `dir`, named by the task fingerprint.
pub fn persist_failure(
    dir: &Path,
    task: &Task,
    report: &SafetyReport,
) -> io::Result<PathBuf> {
    let case_dir = dir.join(&report.task_id);
    fs::create_dir_all(&case_dir)?;
    fs::write(case_dir.join("output.sas"), write_sas(task))?;
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    fs::write(case_dir.join("report.json"), json)?;
    Ok(case_dir)
}

/// Canonical multiset representation of a plan (its actions sorted), used to
/// cross-check the class bookkeeping by an independent route.
pub fn multiset_signature(plan: &Plan) -> Vec<ActionId> {
    let mut actions = plan.actions.clone();
    actions.sort_unstable();
    actions
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::pruning::TieBreak;

    #[test]
    fn brute_force_finds_the_three_plans() {
        let task = fixtures::counterexample();
        let plans = brute_force_plans(&task, 3, 10, None).unwrap();
        let sequences: Vec<_> = plans.iter().map(|p| p.actions.clone()).collect();
        assert_eq!(sequences, vec![vec![0, 1, 2], vec![0, 2, 1], vec![2, 0, 1]]);
    }

    #[test]
    fn brute_force_respects_its_budget() {
        let task = fixtures::independent(6);
        assert_eq!(
            brute_force_plans(&task, 6, 6, Some(10)).unwrap_err(),
            OracleError::Incomplete
        );
    }

    #[test]
    fn reachable_states_cover_the_counterexample_space() {
        let task = fixtures::counterexample();
        // v0 in {0,1,2} × v1 in {0,1}: all six states are reachable.
        assert_eq!(reachable_states(&task).len(), 6);
    }

    #[test]
    fn safe_variant_passes_the_exhaustive_check() {
        let task = fixtures::counterexample();
        let config = StubbornConfig::new(
            PruningStrategy::PorPlus,
            OrderImportantSet::from_ids([1, 2]),
        )
        .with_tie_breaks(TieBreak::HighestVar, TieBreak::LowestVar);
        let report = check_safety(
            &task,
            &config,
            Bound::Multiplier(crate::search::Rational::one()),
            &SearchLimits::default(),
            SafetyMode::AllReachable,
        )
        .unwrap();
        assert!(report.is_safe(), "violations: {:?}", report.violations);
        assert_eq!(report.covered_class_count, report.full_class_count);
    }

    #[test]
    fn naive_variant_loses_exactly_one_class() {
        let task = fixtures::counterexample();
        let config = StubbornConfig::new(
            PruningStrategy::NaiveUnsafe,
            OrderImportantSet::from_ids([1, 2]),
        )
        .with_tie_breaks(TieBreak::HighestVar, TieBreak::LowestVar);
        let report = check_safety(
            &task,
            &config,
            Bound::Absolute(3),
            &SearchLimits::default(),
            SafetyMode::InitialOnly,
        )
        .unwrap();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].witness.actions, vec![0, 1, 2]);
        assert_eq!(report.full_class_count, 2);
        assert_eq!(report.covered_class_count, 1);
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let spec = RandomTaskSpec::unit(42);
        assert_eq!(generate_task(&spec), generate_task(&spec));
        let other = generate_task(&RandomTaskSpec::unit(43));
        assert_ne!(generate_task(&spec), other);
    }

    #[test]
    fn generated_tasks_respect_their_bounds() {
        for seed in 0..50 {
            for spec in [RandomTaskSpec::unit(seed), RandomTaskSpec::costed(seed)] {
                let task = generate_task(&spec);
                assert!(task.variables.len() <= 4);
                assert!(task.actions.len() <= 8);
                assert!(task.variables.iter().all(|v| v.domain_size() <= 3));
                assert!(task.validate().is_ok());
                if matches!(spec.cost_mode, CostMode::Unit) {
                    assert!(task.actions.iter().all(|a| a.cost == 1));
                } else {
                    assert!(task.actions.iter().all(|a| (1..=3).contains(&a.cost)));
                }
            }
        }
    }

    #[test]
    fn generation_with_no_actions_is_valid() {
        let spec = RandomTaskSpec {
            action_count: 0,
            ..RandomTaskSpec::unit(7)
        };
        let task = generate_task(&spec);
        assert!(task.actions.is_empty());
        assert!(task.validate().is_ok());
    }

    #[test]
    fn shrinking_reduces_the_counterexample_no_further() {
        // The counterexample is already minimal for its own violation: every
        // action is load-bearing, both variables are mentioned.
        let task = fixtures::counterexample();
        let config = StubbornConfig::new(
            PruningStrategy::NaiveUnsafe,
            OrderImportantSet::from_ids([1, 2]),
        )
        .with_tie_breaks(TieBreak::HighestVar, TieBreak::LowestVar);
        let bound = Bound::Absolute(3);
        let limits = SearchLimits::default();
        let (small, small_config) =
            shrink_failure(&task, &config, bound, &limits, SafetyMode::InitialOnly);
        assert_eq!(small.actions.len(), 3);
        let report = check_safety(&small, &small_config, bound, &limits, SafetyMode::InitialOnly)
            .unwrap();
        assert!(!report.is_safe());
    }

    #[test]
    fn persisted_failure_replays() {
        let task = fixtures::counterexample();
        let config = StubbornConfig::new(
            PruningStrategy::NaiveUnsafe,
            OrderImportantSet::from_ids([1, 2]),
        )
        .with_tie_breaks(TieBreak::HighestVar, TieBreak::LowestVar);
        let report = check_safety(
            &task,
            &config,
            Bound::Absolute(3),
            &SearchLimits::default(),
            SafetyMode::InitialOnly,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let case_dir = persist_failure(dir.path(), &task, &report).unwrap();
        let text = fs::read_to_string(case_dir.join("output.sas")).unwrap();
        assert_eq!(crate::sas::parse_sas(&text).unwrap(), task);
        let json = fs::read_to_string(case_dir.join("report.json")).unwrap();
        assert!(json.contains("violations"));
    }
}

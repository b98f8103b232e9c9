//! Cost-bounded plan enumeration.
//!
//! [`optimal_cost`] runs uniform-cost search with a closed list; it only
//! answers "how expensive is the cheapest plan". [`enumerate_plans`] walks
//! the state space depth-first *without* a closed list, because distinct
//! paths to the same state are distinct plans; termination comes from the
//! cost bound and the plan length cap. Goal states are reported and then
//! expanded further, since a plan within the bound may extend another.

use crate::equivalence::{quotient_filter, OrderImportantSet, Plan};
use crate::pruning::{PruningStrategy, StubbornConfig, SuccessorGenerator};
use crate::task::{ActionId, Cost, State, Task};
use serde::Serialize;
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};
use thiserror::Error;

/// An exact nonnegative rational, kept in lowest terms.
#[derive(Debug, Copy, Clone, PartialEq, Eq, Serialize)]
pub struct Rational {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl Rational {
    pub fn new(num: u64, den: u64) -> Option<Self> {
        if den == 0 {
            return None;
        }
        let g = gcd(num, den);
        Some(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn one() -> Self {
        Self { num: 1, den: 1 }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    /// Floor of `self * cost`, computed exactly in 128-bit arithmetic.
    pub fn scale_floor(&self, cost: Cost) -> Cost {
        (cost as u128 * self.num as u128 / self.den as u128) as Cost
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Accepts integers (`2`), fractions (`3/2`), and decimals (`1.5`).
impl FromStr for Rational {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("`{s}` is not a nonnegative rational");
        if let Some((num, den)) = s.split_once('/') {
            let num = num.trim().parse().map_err(|_| bad())?;
            let den = den.trim().parse().map_err(|_| bad())?;
            return Rational::new(num, den).ok_or_else(|| format!("`{s}` divides by zero"));
        }
        if let Some((whole, frac)) = s.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let whole: u64 = if whole.is_empty() {
                0
            } else {
                whole.trim().parse().map_err(|_| bad())?
            };
            let den = 10u64
                .checked_pow(frac.len() as u32)
                .ok_or_else(|| format!("`{s}` has too many decimal places"))?;
            let frac: u64 = frac.parse().map_err(|_| bad())?;
            let num = whole.checked_mul(den).and_then(|w| w.checked_add(frac));
            return Rational::new(num.ok_or_else(bad)?, den).ok_or_else(bad);
        }
        Rational::new(s.trim().parse().map_err(|_| bad())?, 1).ok_or_else(bad)
    }
}

/// The quality bound: either an absolute cost, or a multiple of the optimal
/// cost (resolved exactly, rounding the product down to an integer cost).
#[derive(Debug, Copy, Clone, PartialEq, Eq, Serialize)]
pub enum Bound {
    Multiplier(Rational),
    Absolute(Cost),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SearchLimits {
    /// Stop after this many plans; the outcome is then incomplete.
    pub max_plans: Option<usize>,
    /// Cap on plan length; defaults to twice the sum of all domain sizes,
    /// which no reasonable bounded plan should need.
    pub max_plan_length: Option<usize>,
    /// Cap on node expansions; the outcome is then incomplete.
    pub node_budget: Option<u64>,
}

impl SearchLimits {
    pub fn effective_max_len(&self, task: &Task) -> usize {
        self.max_plan_length
            .unwrap_or_else(|| 2 * task.total_domain_size())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    /// States visited by the enumeration (revisits count again).
    pub expansions: u64,
    /// Applicable actions seen across all expansions, before pruning.
    pub generated: u64,
    /// Applicable actions removed by pruning.
    pub pruned_successors: u64,
    pub plans_found: u64,
    /// Distinct equivalence classes among the plans; filled by [`solve_potq`].
    pub classes_found: u64,
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    /// Sorted by cost, ties broken by lexicographic action ids.
    pub plans: Vec<Plan>,
    pub stats: SearchStats,
    /// False when a limit cut the run short; counts and plans are then
    /// lower bounds, not the full answer.
    pub complete: bool,
    /// The absolute cost bound the run used after resolving a multiplier.
    pub bound: Cost,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error("task is unsolvable; a multiplier bound has no optimal cost to scale")]
    UnsolvableWithMultiplier,
}

/// Cheapest plan cost from the initial state, or `None` when unsolvable.
pub fn optimal_cost(task: &Task, config: &StubbornConfig) -> Option<Cost> {
    optimal_cost_from(task, &task.initial, config)
}

/// Uniform-cost search from `start` over the pruned state space. Safe
/// pruning keeps at least one cost-optimal plan, so the result matches the
/// full space for every safe variant.
pub fn optimal_cost_from(task: &Task, start: &State, config: &StubbornConfig) -> Option<Cost> {
    let mut generator = SuccessorGenerator::new(task, config.clone());
    let mut heap: BinaryHeap<Reverse<(Cost, State)>> = BinaryHeap::new();
    let mut closed: HashSet<State> = HashSet::new();
    heap.push(Reverse((0, start.clone())));
    while let Some(Reverse((g, state))) = heap.pop() {
        if !closed.insert(state.clone()) {
            continue;
        }
        if task.is_goal(&state) {
            return Some(g);
        }
        for &action in &generator.successors(&state).actions {
            let next = task.apply(&state, action).expect("successor is applicable");
            if !closed.contains(&next) {
                heap.push(Reverse((g + task.actions[action].cost, next)));
            }
        }
    }
    None
}

struct Enumerator<'a> {
    task: &'a Task,
    generator: SuccessorGenerator<'a>,
    bound: Cost,
    max_len: usize,
    max_plans: Option<usize>,
    node_budget: Option<u64>,
    stats: SearchStats,
    plans: Vec<Plan>,
    path: Vec<ActionId>,
    complete: bool,
}

impl Enumerator<'_> {
    fn dfs(&mut self, state: &State, g: Cost) {
        if let Some(budget) = self.node_budget {
            if self.stats.expansions >= budget {
                self.complete = false;
                return;
            }
        }
        self.stats.expansions += 1;
        if self.task.is_goal(state) {
            self.plans.push(Plan {
                actions: self.path.clone(),
                cost: g,
            });
            if self.max_plans.is_some_and(|cap| self.plans.len() >= cap) {
                self.complete = false;
                return;
            }
        }
        if self.path.len() >= self.max_len {
            return;
        }
        let succ = self.generator.successors(state);
        self.stats.generated += succ.applicable_count as u64;
        self.stats.pruned_successors += (succ.applicable_count - succ.actions.len()) as u64;
        for &action in &succ.actions {
            let cost = g + self.task.actions[action].cost;
            if cost > self.bound {
                continue;
            }
            let next = self.task.apply(state, action).expect("successor is applicable");
            self.path.push(action);
            self.dfs(&next, cost);
            self.path.pop();
            if !self.complete {
                return;
            }
        }
    }
}

fn resolve_bound(task: &Task, start: &State, bound: Bound) -> Result<Cost, SearchError> {
    match bound {
        Bound::Absolute(b) => Ok(b),
        Bound::Multiplier(m) => {
            let full = StubbornConfig::new(PruningStrategy::None, OrderImportantSet::empty());
            optimal_cost_from(task, start, &full)
                .map(|optimal| m.scale_floor(optimal))
                .ok_or(SearchError::UnsolvableWithMultiplier)
        }
    }
}

/// Every plan from the initial state whose cost stays within `bound`, walked
/// depth-first through the successor sets `config` selects. Each plan is
/// found exactly once; the returned list is sorted.
pub fn enumerate_plans(
    task: &Task,
    bound: Bound,
    config: &StubbornConfig,
    limits: &SearchLimits,
) -> Result<SearchOutcome, SearchError> {
    enumerate_plans_from(task, &task.initial, bound, config, limits)
}

/// [`enumerate_plans`] from an arbitrary start state; the safety oracle uses
/// this to check pruning from every reachable state.
pub fn enumerate_plans_from(
    task: &Task,
    start: &State,
    bound: Bound,
    config: &StubbornConfig,
    limits: &SearchLimits,
) -> Result<SearchOutcome, SearchError> {
    let started = Instant::now();
    let absolute = resolve_bound(task, start, bound)?;
    let mut enumerator = Enumerator {
        task,
        generator: SuccessorGenerator::new(task, config.clone()),
        bound: absolute,
        max_len: limits.effective_max_len(task),
        max_plans: limits.max_plans,
        node_budget: limits.node_budget,
        stats: SearchStats::default(),
        plans: Vec::new(),
        path: Vec::new(),
        complete: true,
    };
    enumerator.dfs(start, 0);
    let Enumerator {
        mut plans,
        mut stats,
        complete,
        ..
    } = enumerator;
    plans.sort_unstable();
    stats.plans_found = plans.len() as u64;
    stats.wall_time = started.elapsed();
    Ok(SearchOutcome {
        plans,
        stats,
        complete,
        bound: absolute,
    })
}

/// Enumerates within the bound, prunes per `config` (with its
/// order-important set forced to `x`), and keeps the first representative of
/// each equivalence class. `stats.plans_found` counts the plans enumerated
/// before filtering, `stats.classes_found` the representatives kept.
pub fn solve_potq(
    task: &Task,
    x: &OrderImportantSet,
    bound: Bound,
    config: &StubbornConfig,
    limits: &SearchLimits,
) -> Result<SearchOutcome, SearchError> {
    let mut config = config.clone();
    config.x = x.clone();
    let mut outcome = enumerate_plans(task, bound, &config, limits)?;
    outcome.plans = quotient_filter(&outcome.plans, x);
    outcome.stats.classes_found = outcome.plans.len() as u64;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::pruning::TieBreak;

    fn full() -> StubbornConfig {
        StubbornConfig::new(PruningStrategy::None, OrderImportantSet::empty())
    }

    fn no_limits() -> SearchLimits {
        SearchLimits::default()
    }

    #[test]
    fn rational_parses_integers_fractions_and_decimals() {
        assert_eq!("2".parse::<Rational>().unwrap(), Rational::new(2, 1).unwrap());
        assert_eq!("3/2".parse::<Rational>().unwrap(), Rational::new(3, 2).unwrap());
        assert_eq!("1.5".parse::<Rational>().unwrap(), Rational::new(3, 2).unwrap());
        assert_eq!("0.25".parse::<Rational>().unwrap(), Rational::new(1, 4).unwrap());
        assert!("1/0".parse::<Rational>().is_err());
        assert!("x".parse::<Rational>().is_err());
        assert!("1.".parse::<Rational>().is_err());
    }

    #[test]
    fn rational_scales_exactly_with_floor() {
        let m = Rational::new(3, 2).unwrap();
        assert_eq!(m.scale_floor(3), 4);
        assert_eq!(m.scale_floor(4), 6);
        assert_eq!(Rational::one().scale_floor(17), 17);
    }

    #[test]
    fn optimal_cost_on_the_counterexample() {
        let task = fixtures::counterexample();
        assert_eq!(optimal_cost(&task, &full()), Some(3));
    }

    #[test]
    fn optimal_cost_is_zero_when_initial_is_goal() {
        let mut task = fixtures::counterexample();
        task.goal = crate::task::PartialAssignment::empty();
        assert_eq!(optimal_cost(&task, &full()), Some(0));
    }

    #[test]
    fn optimal_cost_reports_unsolvable() {
        let mut task = fixtures::counterexample();
        task.actions.truncate(2);
        // v1=1 is unreachable without o3.
        assert_eq!(optimal_cost(&task, &full()), None);
    }

    #[test]
    fn enumeration_finds_exactly_the_three_plans() {
        let task = fixtures::counterexample();
        let outcome =
            enumerate_plans(&task, Bound::Absolute(3), &full(), &no_limits()).unwrap();
        assert!(outcome.complete);
        assert_eq!(outcome.bound, 3);
        let sequences: Vec<_> = outcome.plans.iter().map(|p| p.actions.clone()).collect();
        assert_eq!(sequences, vec![vec![0, 1, 2], vec![0, 2, 1], vec![2, 0, 1]]);
        assert!(outcome.plans.iter().all(|p| p.cost == 3));
    }

    #[test]
    fn multiplier_one_matches_absolute_optimum() {
        let task = fixtures::counterexample();
        let by_multiplier = enumerate_plans(
            &task,
            Bound::Multiplier(Rational::one()),
            &full(),
            &no_limits(),
        )
        .unwrap();
        assert_eq!(by_multiplier.bound, 3);
        assert_eq!(by_multiplier.plans.len(), 3);
    }

    #[test]
    fn multiplier_on_unsolvable_task_errors() {
        let mut task = fixtures::counterexample();
        task.actions.truncate(2);
        let err = enumerate_plans(
            &task,
            Bound::Multiplier(Rational::one()),
            &full(),
            &no_limits(),
        )
        .unwrap_err();
        assert_eq!(err, SearchError::UnsolvableWithMultiplier);
    }

    #[test]
    fn absolute_bound_on_unsolvable_task_finds_nothing() {
        let mut task = fixtures::counterexample();
        task.actions.truncate(2);
        let outcome =
            enumerate_plans(&task, Bound::Absolute(10), &full(), &no_limits()).unwrap();
        assert!(outcome.complete);
        assert!(outcome.plans.is_empty());
    }

    #[test]
    fn initial_goal_state_yields_the_empty_plan() {
        let mut task = fixtures::counterexample();
        task.goal = crate::task::PartialAssignment::empty();
        let outcome =
            enumerate_plans(&task, Bound::Absolute(0), &full(), &no_limits()).unwrap();
        assert_eq!(outcome.plans.len(), 1);
        assert!(outcome.plans[0].actions.is_empty());
        assert_eq!(outcome.plans[0].cost, 0);
    }

    #[test]
    fn goal_states_are_expanded_further() {
        // Goal v1=1 is reached by o3 alone, but o1;o3 and o3;o1 etc. also
        // stay within bound 2, and plans extending past the first goal hit
        // count as well.
        let mut task = fixtures::counterexample();
        task.goal = crate::task::PartialAssignment::new([(1, 1)]).unwrap();
        let outcome =
            enumerate_plans(&task, Bound::Absolute(2), &full(), &no_limits()).unwrap();
        let sequences: Vec<_> = outcome.plans.iter().map(|p| p.actions.clone()).collect();
        assert_eq!(sequences, vec![vec![2], vec![0, 2], vec![2, 0]]);
    }

    #[test]
    fn max_plans_marks_the_outcome_incomplete() {
        let task = fixtures::counterexample();
        let limits = SearchLimits {
            max_plans: Some(2),
            ..SearchLimits::default()
        };
        let outcome = enumerate_plans(&task, Bound::Absolute(3), &full(), &limits).unwrap();
        assert!(!outcome.complete);
        assert_eq!(outcome.plans.len(), 2);
    }

    #[test]
    fn node_budget_marks_the_outcome_incomplete() {
        let task = fixtures::counterexample();
        let limits = SearchLimits {
            node_budget: Some(2),
            ..SearchLimits::default()
        };
        let outcome = enumerate_plans(&task, Bound::Absolute(3), &full(), &limits).unwrap();
        assert!(!outcome.complete);
    }

    #[test]
    fn max_length_caps_plan_length() {
        let mut task = fixtures::counterexample();
        task.goal = crate::task::PartialAssignment::new([(1, 1)]).unwrap();
        let limits = SearchLimits {
            max_plan_length: Some(1),
            ..SearchLimits::default()
        };
        let outcome = enumerate_plans(&task, Bound::Absolute(2), &full(), &limits).unwrap();
        let sequences: Vec<_> = outcome.plans.iter().map(|p| p.actions.clone()).collect();
        assert_eq!(sequences, vec![vec![2]]);
    }

    #[test]
    fn stats_track_expansions_and_pruning() {
        let task = fixtures::counterexample();
        let outcome =
            enumerate_plans(&task, Bound::Absolute(3), &full(), &no_limits()).unwrap();
        assert!(outcome.stats.expansions > 0);
        assert!(outcome.stats.pruned_successors <= outcome.stats.generated);
        assert_eq!(outcome.stats.plans_found, 3);
        let pruned_run = enumerate_plans(
            &task,
            Bound::Absolute(3),
            &StubbornConfig::new(PruningStrategy::StubbornOnly, OrderImportantSet::empty()),
            &no_limits(),
        )
        .unwrap();
        assert!(pruned_run.stats.pruned_successors > 0);
    }

    #[test]
    fn solve_potq_keeps_cheapest_representatives() {
        let task = fixtures::counterexample();
        let x = OrderImportantSet::from_ids([1, 2]);
        let outcome =
            solve_potq(&task, &x, Bound::Absolute(3), &full(), &no_limits()).unwrap();
        assert_eq!(outcome.stats.plans_found, 3);
        assert_eq!(outcome.stats.classes_found, 2);
        let sequences: Vec<_> = outcome.plans.iter().map(|p| p.actions.clone()).collect();
        assert_eq!(sequences, vec![vec![0, 1, 2], vec![0, 2, 1]]);
    }

    #[test]
    fn solve_potq_under_stubborn_pruning_with_adversarial_seed() {
        let task = fixtures::counterexample();
        let x = OrderImportantSet::from_ids([1, 2]);
        let config = StubbornConfig::new(PruningStrategy::StubbornOnly, x.clone())
            .with_tie_breaks(TieBreak::HighestVar, TieBreak::LowestVar);
        let outcome = solve_potq(&task, &x, Bound::Absolute(3), &config, &no_limits()).unwrap();
        let sequences: Vec<_> = outcome.plans.iter().map(|p| p.actions.clone()).collect();
        assert_eq!(sequences, vec![vec![2, 0, 1]]);
    }

    #[test]
    fn enumeration_is_deterministic() {
        let task = fixtures::independent(4);
        let a = enumerate_plans(&task, Bound::Absolute(4), &full(), &no_limits()).unwrap();
        let b = enumerate_plans(&task, Bound::Absolute(4), &full(), &no_limits()).unwrap();
        assert_eq!(a.plans, b.plans);
        assert_eq!(a.plans.len(), 24);
    }
}

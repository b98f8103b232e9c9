//! Successor pruning via stubborn sets.
//!
//! A stubborn set T for a non-goal state s is seeded with the achievers of
//! one unsatisfied goal fact and closed under two rules: an inapplicable
//! member contributes a necessary enabling set (the achievers of one of its
//! unsatisfied precondition facts), and an applicable member contributes all
//! actions it interferes with. Every plan from s must pass through the seed
//! fact's achievers, which is what makes pruning to `applicable ∩ T` keep a
//! reordering of every plan.
//!
//! On top of plain stubborn pruning two rules protect the relative order of
//! an order-important action set X:
//! - [`PruningStrategy::PorPlus`] post-processes the pruned set: if it
//!   contains no X action it stands; if it does and all of X is applicable,
//!   X is added; otherwise pruning is abandoned for this state.
//! - [`PruningStrategy::PoGsss`] extends the closure: an applicable member
//!   that lies in X pulls all of X into T.
//! - [`PruningStrategy::NaiveUnsafe`] adds only the applicable part of X
//!   without checking that all of X is applicable. It loses plan classes
//!   (see the counterexample fixture) and exists to demonstrate exactly
//!   that; never use it for real runs.
//!
//! Interference is judged syntactically from preconditions and effects, so
//! it over-approximates and never depends on the state.

use crate::equivalence::OrderImportantSet;
use crate::task::{ActionId, PartialAssignment, State, Task, Value, VarId};
use serde::Serialize;
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Copy, Clone, PartialEq, Eq, Serialize)]
pub enum PruningStrategy {
    /// No pruning: every applicable action is a successor.
    None,
    /// Plain stubborn-set pruning; keeps one reordering per action multiset.
    StubbornOnly,
    /// Stubborn pruning with the post-hoc order-protecting widening.
    PorPlus,
    /// Stubborn pruning with the order-protecting closure rule.
    PoGsss,
    /// The broken widening: keeps only applicable X actions. Unsound.
    NaiveUnsafe,
}

/// Deterministic choice among a state's unsatisfied facts; which one is
/// picked may change how much is pruned but never whether pruning is safe,
/// so checks run under every rule.
#[derive(Debug, Copy, Clone, Default, PartialEq, Eq, Serialize)]
pub enum TieBreak {
    #[default]
    LowestVar,
    HighestVar,
}

#[derive(Debug, Clone, Serialize)]
pub struct StubbornConfig {
    pub variant: PruningStrategy,
    pub x: OrderImportantSet,
    /// Picks the unsatisfied precondition fact an enabling set is built for.
    pub nes_choice: TieBreak,
    /// Picks the unsatisfied goal fact whose achievers seed the set.
    pub goal_choice: TieBreak,
}

impl StubbornConfig {
    pub fn new(variant: PruningStrategy, x: OrderImportantSet) -> Self {
        Self {
            variant,
            x,
            nes_choice: TieBreak::default(),
            goal_choice: TieBreak::default(),
        }
    }

    pub fn with_tie_breaks(mut self, goal_choice: TieBreak, nes_choice: TieBreak) -> Self {
        self.goal_choice = goal_choice;
        self.nes_choice = nes_choice;
        self
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PruningError {
    #[error("action {action} is applicable; an enabling set only exists for inapplicable ones")]
    ActionApplicable { action: ActionId },
    #[error("stubborn sets are defined for non-goal states only")]
    GoalState,
}

/// True when some effect of `o` assigns a precondition variable of `o2` a
/// value other than the one `o2` requires.
pub fn disables(task: &Task, o: ActionId, o2: ActionId) -> bool {
    task.actions[o]
        .effect
        .pairs()
        .iter()
        .any(|&(var, val)| task.actions[o2].precondition.get(var).is_some_and(|d| d != val))
}

/// True when the effects of `o` and `o2` assign different values to a common
/// variable.
pub fn conflicts(task: &Task, o: ActionId, o2: ActionId) -> bool {
    task.actions[o]
        .effect
        .pairs()
        .iter()
        .any(|&(var, val)| task.actions[o2].effect.get(var).is_some_and(|d| d != val))
}

/// Symmetric syntactic interference: either action disables the other, or
/// their effects conflict.
pub fn interfere(task: &Task, o: ActionId, o2: ActionId) -> bool {
    disables(task, o, o2) || disables(task, o2, o) || conflicts(task, o, o2)
}

/// Pairwise interference, precomputed once per task.
#[derive(Debug, Clone)]
pub struct InterferenceMatrix {
    n: usize,
    bits: Vec<bool>,
}

impl InterferenceMatrix {
    pub fn build(task: &Task) -> Self {
        let n = task.actions.len();
        let mut bits = vec![false; n * n];
        for o in 0..n {
            for o2 in o + 1..n {
                if interfere(task, o, o2) {
                    bits[o * n + o2] = true;
                    bits[o2 * n + o] = true;
                }
            }
        }
        Self { n, bits }
    }

    pub fn interfere(&self, o: ActionId, o2: ActionId) -> bool {
        self.bits[o * self.n + o2]
    }

    pub fn interferers(&self, o: ActionId) -> impl Iterator<Item = ActionId> + '_ {
        (0..self.n).filter(move |&o2| self.interfere(o, o2))
    }
}

/// Action ids surviving pruning in a state, sorted by id, plus how many were
/// applicable before pruning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuccessorSet {
    pub actions: Vec<ActionId>,
    pub applicable_count: usize,
}

/// Computes pruned successor sets for one task and configuration, memoizing
/// per state. Build one per enumeration run.
pub struct SuccessorGenerator<'a> {
    task: &'a Task,
    config: StubbornConfig,
    interference: InterferenceMatrix,
    // achievers[var][value]: actions whose effect contains (var, value)
    achievers: Vec<Vec<Vec<ActionId>>>,
    memo: HashMap<State, SuccessorSet>,
}

impl<'a> SuccessorGenerator<'a> {
    pub fn new(task: &'a Task, config: StubbornConfig) -> Self {
        debug_assert!(config.x.iter().all(|a| a < task.actions.len()));
        let mut achievers: Vec<Vec<Vec<ActionId>>> = task
            .variables
            .iter()
            .map(|v| vec![Vec::new(); v.domain_size()])
            .collect();
        for action in &task.actions {
            for &(var, value) in action.effect.pairs() {
                achievers[var][value].push(action.id);
            }
        }
        Self {
            task,
            config,
            interference: InterferenceMatrix::build(task),
            achievers,
            memo: HashMap::new(),
        }
    }

    pub fn config(&self) -> &StubbornConfig {
        &self.config
    }

    /// The pruned successor set for `state`. Goal states are never pruned:
    /// enumeration past a goal continues through the full applicable set.
    pub fn successors(&mut self, state: &State) -> SuccessorSet {
        if let Some(hit) = self.memo.get(state) {
            return hit.clone();
        }
        let computed = self.compute(state);
        self.memo.insert(state.clone(), computed.clone());
        computed
    }

    fn compute(&self, state: &State) -> SuccessorSet {
        let applicable = self.task.applicable_actions(state);
        let applicable_count = applicable.len();
        if self.config.variant == PruningStrategy::None || self.task.is_goal(state) {
            return SuccessorSet {
                actions: applicable,
                applicable_count,
            };
        }
        let t = self
            .stubborn_set(state)
            .expect("non-goal state must have an unsatisfied goal fact");
        let pruned: Vec<ActionId> = applicable
            .iter()
            .copied()
            .filter(|a| t.contains(a))
            .collect();
        let x = &self.config.x;
        let actions = match self.config.variant {
            PruningStrategy::StubbornOnly | PruningStrategy::PoGsss => pruned,
            PruningStrategy::PorPlus => {
                if pruned.iter().all(|a| !x.contains(*a)) {
                    pruned
                } else if x.iter().all(|a| self.task.is_applicable(state, a)) {
                    let mut widened: BTreeSet<ActionId> = pruned.into_iter().collect();
                    widened.extend(x.iter());
                    widened.into_iter().collect()
                } else {
                    applicable
                }
            }
            PruningStrategy::NaiveUnsafe => {
                if pruned.iter().any(|a| x.contains(*a)) {
                    let mut widened: BTreeSet<ActionId> = pruned.into_iter().collect();
                    widened.extend(x.iter().filter(|&a| self.task.is_applicable(state, a)));
                    widened.into_iter().collect()
                } else {
                    pruned
                }
            }
            PruningStrategy::None => unreachable!(),
        };
        SuccessorSet {
            actions,
            applicable_count,
        }
    }

    /// The stubborn-set closure for a non-goal `state`. The result is the
    /// unique closure of the seed under the membership rules, so processing
    /// order does not matter.
    pub fn stubborn_set(&self, state: &State) -> Result<BTreeSet<ActionId>, PruningError> {
        let seed = pick_unsatisfied(&self.task.goal, state, self.config.goal_choice)
            .ok_or(PruningError::GoalState)?;
        let mut t = BTreeSet::new();
        let mut queue: Vec<ActionId> = Vec::new();
        for &a in &self.achievers[seed.0][seed.1] {
            if t.insert(a) {
                queue.push(a);
            }
        }
        while let Some(o) = queue.pop() {
            if self.task.is_applicable(state, o) {
                for o2 in self.interference.interferers(o) {
                    if t.insert(o2) {
                        queue.push(o2);
                    }
                }
                if self.config.variant == PruningStrategy::PoGsss && self.config.x.contains(o) {
                    for o2 in self.config.x.iter() {
                        if t.insert(o2) {
                            queue.push(o2);
                        }
                    }
                }
            } else {
                let fact =
                    pick_unsatisfied(&self.task.actions[o].precondition, state, self.config.nes_choice)
                        .expect("inapplicable action has an unsatisfied precondition fact");
                for &a in &self.achievers[fact.0][fact.1] {
                    if t.insert(a) {
                        queue.push(a);
                    }
                }
            }
        }
        Ok(t)
    }
}

fn pick_unsatisfied(
    assignment: &PartialAssignment,
    state: &State,
    choice: TieBreak,
) -> Option<(VarId, Value)> {
    let mut unsatisfied = assignment
        .pairs()
        .iter()
        .copied()
        .filter(|&(var, val)| state.value(var) != val);
    match choice {
        TieBreak::LowestVar => unsatisfied.next(),
        TieBreak::HighestVar => unsatisfied.last(),
    }
}

/// The necessary enabling set of an inapplicable action: the achievers of
/// one unsatisfied precondition fact, chosen per `choice`. Every path that
/// eventually executes the action runs one of these first.
pub fn nes(
    task: &Task,
    state: &State,
    action: ActionId,
    choice: TieBreak,
) -> Result<Vec<ActionId>, PruningError> {
    let pre = &task.actions[action].precondition;
    let fact = pick_unsatisfied(pre, state, choice)
        .ok_or(PruningError::ActionApplicable { action })?;
    Ok(task
        .actions
        .iter()
        .filter(|a| a.effect.get(fact.0) == Some(fact.1))
        .map(|a| a.id)
        .collect())
}

/// One-shot stubborn set computation; see [`SuccessorGenerator::stubborn_set`].
pub fn compute_stubborn(
    task: &Task,
    state: &State,
    config: &StubbornConfig,
) -> Result<BTreeSet<ActionId>, PruningError> {
    SuccessorGenerator::new(task, config.clone()).stubborn_set(state)
}

/// One-shot successor computation; see [`SuccessorGenerator::successors`].
pub fn successors(task: &Task, state: &State, config: &StubbornConfig) -> SuccessorSet {
    SuccessorGenerator::new(task, config.clone()).successors(state)
}

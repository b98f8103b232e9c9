//! SAS+ task model: finite-domain variables, actions, states, and the
//! applicability/effect semantics everything else builds on.

use serde::Serialize;
use thiserror::Error;

pub type VarId = usize;
pub type Value = usize;
pub type ActionId = usize;
pub type Cost = u64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TaskError {
    #[error("variable {var} appears more than once in a partial assignment")]
    DuplicateVariable { var: VarId },
    #[error("variable {var} out of range (task has {count} variables)")]
    UnknownVariable { var: VarId, count: usize },
    #[error("value {value} out of range for variable {var} (domain size {domain})")]
    ValueOutOfRange { var: VarId, value: Value, domain: usize },
    #[error("variable {var} has an empty domain")]
    EmptyDomain { var: VarId },
    #[error("variable at position {position} carries index {index}")]
    MisnumberedVariable { position: usize, index: VarId },
    #[error("action at position {position} carries id {id}")]
    MisnumberedAction { position: usize, id: ActionId },
    #[error("action {action} has an empty effect")]
    EmptyEffect { action: ActionId },
    #[error("action {action} has cost {cost} but the task declares no metric")]
    CostWithoutMetric { action: ActionId, cost: Cost },
    #[error("initial state assigns {got} variables, task has {want}")]
    InitialStateSize { got: usize, want: usize },
    #[error("unknown action id {action} (task has {count} actions)")]
    UnknownAction { action: ActionId, count: usize },
    #[error("action {action} is not applicable in the given state")]
    NotApplicable { action: ActionId },
}

/// A finite-domain state variable. `index` is its position in the task;
/// values are identified by their position in `value_names`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Variable {
    pub index: VarId,
    pub name: String,
    pub value_names: Vec<String>,
}

impl Variable {
    pub fn domain_size(&self) -> usize {
        self.value_names.len()
    }
}

/// A set of variable-value pairs with at most one value per variable.
/// Pairs are kept sorted by variable so equal assignments compare equal.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PartialAssignment {
    pairs: Vec<(VarId, Value)>,
}

impl PartialAssignment {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(pairs: impl IntoIterator<Item = (VarId, Value)>) -> Result<Self, TaskError> {
        let mut pairs: Vec<(VarId, Value)> = pairs.into_iter().collect();
        pairs.sort_unstable();
        for window in pairs.windows(2) {
            if window[0].0 == window[1].0 {
                return Err(TaskError::DuplicateVariable { var: window[0].0 });
            }
        }
        Ok(Self { pairs })
    }

    pub fn get(&self, var: VarId) -> Option<Value> {
        self.pairs
            .binary_search_by_key(&var, |&(v, _)| v)
            .ok()
            .map(|i| self.pairs[i].1)
    }

    pub fn pairs(&self) -> &[(VarId, Value)] {
        &self.pairs
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.pairs.iter().map(|&(v, _)| v)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// True when every listed variable holds the listed value in `state`.
    /// The empty assignment is satisfied everywhere.
    pub fn satisfied_in(&self, state: &State) -> bool {
        self.pairs.iter().all(|&(v, d)| state.value(v) == d)
    }
}

/// A total assignment of one value per task variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct State {
    values: Vec<Value>,
}

impl State {
    pub fn new(values: Vec<Value>) -> Self {
        Self { values }
    }

    pub fn value(&self, var: VarId) -> Value {
        self.values[var]
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// An action with a partial-assignment precondition and effect.
/// The effect is nonempty; the cost is a nonnegative integer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Action {
    pub id: ActionId,
    pub name: String,
    pub precondition: PartialAssignment,
    pub effect: PartialAssignment,
    pub cost: Cost,
}

/// A complete SAS+ task. `metric_flag` records whether the source declared
/// a cost metric; without one every action costs 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Task {
    pub variables: Vec<Variable>,
    pub actions: Vec<Action>,
    pub initial: State,
    pub goal: PartialAssignment,
    pub metric_flag: bool,
}

impl Task {
    pub fn new(
        variables: Vec<Variable>,
        actions: Vec<Action>,
        initial: State,
        goal: PartialAssignment,
        metric_flag: bool,
    ) -> Result<Self, TaskError> {
        let task = Self {
            variables,
            actions,
            initial,
            goal,
            metric_flag,
        };
        task.validate()?;
        Ok(task)
    }

    pub fn validate(&self) -> Result<(), TaskError> {
        for (position, var) in self.variables.iter().enumerate() {
            if var.index != position {
                return Err(TaskError::MisnumberedVariable {
                    position,
                    index: var.index,
                });
            }
            if var.domain_size() == 0 {
                return Err(TaskError::EmptyDomain { var: position });
            }
        }
        if self.initial.len() != self.variables.len() {
            return Err(TaskError::InitialStateSize {
                got: self.initial.len(),
                want: self.variables.len(),
            });
        }
        for (var, &value) in self.initial.values().iter().enumerate() {
            self.check_fact(var, value)?;
        }
        for &(var, value) in self.goal.pairs() {
            self.check_fact(var, value)?;
        }
        for (position, action) in self.actions.iter().enumerate() {
            if action.id != position {
                return Err(TaskError::MisnumberedAction {
                    position,
                    id: action.id,
                });
            }
            if action.effect.is_empty() {
                return Err(TaskError::EmptyEffect { action: position });
            }
            for &(var, value) in action.precondition.pairs().iter().chain(action.effect.pairs()) {
                self.check_fact(var, value)?;
            }
            if !self.metric_flag && action.cost != 1 {
                return Err(TaskError::CostWithoutMetric {
                    action: position,
                    cost: action.cost,
                });
            }
        }
        Ok(())
    }

    fn check_fact(&self, var: VarId, value: Value) -> Result<(), TaskError> {
        let count = self.variables.len();
        if var >= count {
            return Err(TaskError::UnknownVariable { var, count });
        }
        let domain = self.variables[var].domain_size();
        if value >= domain {
            return Err(TaskError::ValueOutOfRange { var, value, domain });
        }
        Ok(())
    }

    pub fn is_applicable(&self, state: &State, action: ActionId) -> bool {
        self.actions[action].precondition.satisfied_in(state)
    }

    /// The successor state reached by `action`, leaving variables outside the
    /// effect untouched.
    pub fn apply(&self, state: &State, action: ActionId) -> Result<State, TaskError> {
        if action >= self.actions.len() {
            return Err(TaskError::UnknownAction {
                action,
                count: self.actions.len(),
            });
        }
        if !self.is_applicable(state, action) {
            return Err(TaskError::NotApplicable { action });
        }
        let mut values = state.values().to_vec();
        for &(var, value) in self.actions[action].effect.pairs() {
            values[var] = value;
        }
        Ok(State::new(values))
    }

    pub fn is_goal(&self, state: &State) -> bool {
        self.goal.satisfied_in(state)
    }

    /// Action ids applicable in `state`, in increasing id order.
    pub fn applicable_actions(&self, state: &State) -> Vec<ActionId> {
        (0..self.actions.len())
            .filter(|&a| self.is_applicable(state, a))
            .collect()
    }

    /// Replays an action sequence from the initial state, checking
    /// applicability at each step. Returns the end state and summed cost.
    pub fn replay(&self, actions: &[ActionId]) -> Result<(State, Cost), TaskError> {
        let mut state = self.initial.clone();
        let mut cost = 0;
        for &action in actions {
            state = self.apply(&state, action)?;
            cost += self.actions[action].cost;
        }
        Ok((state, cost))
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.actions.iter().position(|a| a.name == name)
    }

    /// Sum of all domain sizes; twice this is the default plan length cap.
    pub fn total_domain_size(&self) -> usize {
        self.variables.iter().map(|v| v.domain_size()).sum()
    }
}

//! Plan equivalence: two plans are interchangeable when they use the same
//! action multiset and agree on the relative order of a chosen set of
//! order-important actions. Everything here is independent of how plans were
//! found.

use crate::task::{ActionId, Cost, Task};
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use thiserror::Error;

/// A sequence of action ids applicable in order from the initial state and
/// ending in a goal state, together with its summed cost.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Plan {
    pub actions: Vec<ActionId>,
    pub cost: Cost,
}

impl Plan {
    pub fn new(task: &Task, actions: Vec<ActionId>) -> Self {
        let cost = actions.iter().map(|&a| task.actions[a].cost).sum();
        Self { actions, cost }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Plans order by cost first, then lexicographically by action ids, which is
/// the order enumeration results are reported in.
impl Ord for Plan {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.cost, &self.actions).cmp(&(other.cost, &other.actions))
    }
}

impl PartialOrd for Plan {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The set of actions whose relative order distinguishes plans.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct OrderImportantSet {
    members: BTreeSet<ActionId>,
}

impl OrderImportantSet {
    /// The empty set: plans compare by multiset alone.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Every action of the task: plans compare as exact sequences.
    pub fn all(task: &Task) -> Self {
        Self {
            members: (0..task.actions.len()).collect(),
        }
    }

    pub fn from_ids(ids: impl IntoIterator<Item = ActionId>) -> Self {
        Self {
            members: ids.into_iter().collect(),
        }
    }

    pub fn contains(&self, action: ActionId) -> bool {
        self.members.contains(&action)
    }

    pub fn iter(&self) -> impl Iterator<Item = ActionId> + '_ {
        self.members.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// The identity of a plan's equivalence class: its action multiset plus the
/// subsequence of order-important actions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EquivalenceKey {
    multiset: Vec<(ActionId, u32)>,
    restricted: Vec<ActionId>,
}

impl EquivalenceKey {
    pub fn multiset(&self) -> &[(ActionId, u32)] {
        &self.multiset
    }

    pub fn restricted(&self) -> &[ActionId] {
        &self.restricted
    }
}

/// The subsequence of `plan` consisting of the order-important actions, with
/// their relative order preserved.
pub fn restrict(plan: &Plan, x: &OrderImportantSet) -> Vec<ActionId> {
    plan.actions
        .iter()
        .copied()
        .filter(|&a| x.contains(a))
        .collect()
}

/// The class key of `plan`: occurrence counts sorted by action id, plus the
/// restricted subsequence. Two plans are equivalent exactly when their keys
/// are equal.
pub fn equiv_key(plan: &Plan, x: &OrderImportantSet) -> EquivalenceKey {
    let mut multiset: Vec<(ActionId, u32)> = Vec::new();
    let mut sorted = plan.actions.clone();
    sorted.sort_unstable();
    for action in sorted {
        match multiset.last_mut() {
            Some((a, n)) if *a == action => *n += 1,
            _ => multiset.push((action, 1)),
        }
    }
    EquivalenceKey {
        multiset,
        restricted: restrict(plan, x),
    }
}

/// Keeps the first plan of each equivalence class, preserving input order.
pub fn quotient_filter(plans: &[Plan], x: &OrderImportantSet) -> Vec<Plan> {
    let mut seen = HashSet::new();
    plans
        .iter()
        .filter(|plan| seen.insert(equiv_key(plan, x)))
        .cloned()
        .collect()
}

#[derive(Debug, Error)]
#[error("invalid action pattern: {0}")]
pub struct InvalidPattern(#[from] regex::Error);

/// Selects the order-important set by matching `pattern` against the full
/// action name (including parameters). The match is anchored: the whole name
/// must match, not just a substring.
pub fn select_actions(task: &Task, pattern: &str) -> Result<OrderImportantSet, InvalidPattern> {
    let re = regex::Regex::new(&format!("^(?:{pattern})$"))?;
    Ok(OrderImportantSet::from_ids(
        task.actions
            .iter()
            .filter(|a| re.is_match(&a.name))
            .map(|a| a.id),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn plan(task: &Task, actions: &[ActionId]) -> Plan {
        Plan::new(task, actions.to_vec())
    }

    #[test]
    fn restrict_keeps_relative_order() {
        let task = fixtures::counterexample();
        let x = OrderImportantSet::from_ids([1, 2]);
        assert_eq!(restrict(&plan(&task, &[0, 1, 2]), &x), vec![1, 2]);
        assert_eq!(restrict(&plan(&task, &[2, 0, 1]), &x), vec![2, 1]);
        assert!(restrict(&plan(&task, &[0, 1, 2]), &OrderImportantSet::empty()).is_empty());
    }

    #[test]
    fn restrict_with_all_actions_is_identity() {
        let task = fixtures::counterexample();
        let x = OrderImportantSet::all(&task);
        assert_eq!(restrict(&plan(&task, &[2, 0, 1]), &x), vec![2, 0, 1]);
    }

    #[test]
    fn keys_separate_classes_on_the_counterexample() {
        let task = fixtures::counterexample();
        let x = OrderImportantSet::from_ids([1, 2]);
        let p1 = plan(&task, &[0, 1, 2]);
        let p2 = plan(&task, &[2, 0, 1]);
        let p3 = plan(&task, &[0, 2, 1]);
        assert_ne!(equiv_key(&p1, &x), equiv_key(&p2, &x));
        assert_eq!(equiv_key(&p2, &x), equiv_key(&p3, &x));
        // Under the empty set all three collapse into one class.
        let none = OrderImportantSet::empty();
        assert_eq!(equiv_key(&p1, &none), equiv_key(&p2, &none));
    }

    #[test]
    fn key_counts_repeated_actions() {
        let task = fixtures::counterexample();
        let mut p = plan(&task, &[0, 0, 2]);
        p.cost = 3;
        let key = equiv_key(&p, &OrderImportantSet::empty());
        assert_eq!(key.multiset(), &[(0, 2), (2, 1)]);
    }

    #[test]
    fn quotient_keeps_first_representative_in_order() {
        let task = fixtures::counterexample();
        let x = OrderImportantSet::from_ids([1, 2]);
        let plans = vec![
            plan(&task, &[0, 1, 2]),
            plan(&task, &[0, 2, 1]),
            plan(&task, &[2, 0, 1]),
        ];
        let kept = quotient_filter(&plans, &x);
        assert_eq!(kept.len(), 2);
        assert_eq!(kept[0].actions, vec![0, 1, 2]);
        assert_eq!(kept[1].actions, vec![0, 2, 1]);
    }

    #[test]
    fn quotient_of_empty_input_is_empty() {
        assert!(quotient_filter(&[], &OrderImportantSet::empty()).is_empty());
    }

    #[test]
    fn select_actions_anchors_the_match() {
        let task = fixtures::counterexample();
        let x = select_actions(&task, "(o2|o3)").unwrap();
        assert_eq!(x.iter().collect::<Vec<_>>(), vec![1, 2]);
        // A bare prefix must not match: "o" matches no full name.
        assert!(select_actions(&task, "o").unwrap().is_empty());
        assert_eq!(select_actions(&task, "o.*").unwrap().len(), 3);
    }

    #[test]
    fn select_actions_rejects_bad_pattern() {
        let task = fixtures::counterexample();
        assert!(select_actions(&task, "(").is_err());
    }

    #[test]
    fn plans_order_by_cost_then_sequence() {
        let task = fixtures::counterexample();
        let mut plans = vec![plan(&task, &[2, 0, 1]), plan(&task, &[0, 1, 2])];
        plans.sort();
        assert_eq!(plans[0].actions, vec![0, 1, 2]);
        let short = Plan {
            actions: vec![2],
            cost: 1,
        };
        assert!(short < plans[0]);
    }
}

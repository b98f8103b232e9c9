//! Small hand-built tasks shared by tests, benchmarks, and examples.

use crate::task::{Action, PartialAssignment, State, Task, Variable};

fn var(index: usize, name: &str, domain: usize) -> Variable {
    Variable {
        index,
        name: name.to_string(),
        value_names: (0..domain).map(|d| format!("{name}-{d}")).collect(),
    }
}

fn action(id: usize, name: &str, pre: &[(usize, usize)], eff: &[(usize, usize)]) -> Action {
    Action {
        id,
        name: name.to_string(),
        precondition: PartialAssignment::new(pre.iter().copied()).unwrap(),
        effect: PartialAssignment::new(eff.iter().copied()).unwrap(),
        cost: 1,
    }
}

/// Two variables, three unit-cost actions: o1 moves v0 from 0 to 1, o2 moves
/// v0 from 1 to 2, o3 moves v1 from 0 to 1; the goal wants v0=2 and v1=1.
///
/// The three plans are o1 o2 o3, o3 o1 o2, and o1 o3 o2. With o2 and o3
/// order-important the first is alone in its class while the other two share
/// one, which makes this the smallest task separating the safe pruning rules
/// from the naive one.
pub fn counterexample() -> Task {
    Task::new(
        vec![var(0, "v0", 3), var(1, "v1", 2)],
        vec![
            action(0, "o1", &[(0, 0)], &[(0, 1)]),
            action(1, "o2", &[(0, 1)], &[(0, 2)]),
            action(2, "o3", &[(1, 0)], &[(1, 1)]),
        ],
        State::new(vec![0, 0]),
        PartialAssignment::new([(0, 2), (1, 1)]).unwrap(),
        false,
    )
    .unwrap()
}

/// `n` binary variables, each flipped to 1 by its own precondition-free
/// unit-cost action; the goal wants all of them at 1. No two actions
/// interfere, so full enumeration finds all n! orderings while stubborn-set
/// pruning keeps a single chain.
pub fn independent(n: usize) -> Task {
    let variables = (0..n).map(|i| var(i, &format!("v{i}"), 2)).collect();
    let actions = (0..n)
        .map(|i| action(i, &format!("flip{i}"), &[], &[(i, 1)]))
        .collect();
    let goal = PartialAssignment::new((0..n).map(|i| (i, 1))).unwrap();
    Task::new(variables, actions, State::new(vec![0; n]), goal, false).unwrap()
}

//! Plan files in the Fast Downward `sas_plan` convention: one `(action name)`
//! per line and a trailing `; cost = N (general cost)` comment. Reading a
//! plan replays it through the task semantics, so a file that names unknown
//! actions, breaks an applicability check, or misses the goal is rejected.

use crate::equivalence::Plan;
use crate::task::{Cost, Task};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlanFileError {
    #[error("line {line}: expected `(action name)`, found `{found}`")]
    Malformed { line: usize, found: String },
    #[error("line {line}: unknown action `{name}`")]
    UnknownAction { line: usize, name: String },
    #[error("plan is not applicable: {0}")]
    NotApplicable(#[from] crate::task::TaskError),
    #[error("plan ends in a non-goal state")]
    GoalNotReached,
    #[error("plan file declares cost {declared}, replay gives {computed}")]
    CostMismatch { declared: Cost, computed: Cost },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn format_plan(task: &Task, plan: &Plan) -> String {
    let mut out = String::new();
    for &action in &plan.actions {
        out.push('(');
        out.push_str(&task.actions[action].name);
        out.push_str(")\n");
    }
    out.push_str(&format!("; cost = {} (general cost)\n", plan.cost));
    out
}

/// Parses a plan file and replays it, verifying applicability, goal
/// satisfaction, and the declared cost (when present).
pub fn parse_plan(task: &Task, text: &str) -> Result<Plan, PlanFileError> {
    let mut actions = Vec::new();
    let mut declared_cost = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix(';') {
            if let Some(rest) = comment.trim().strip_prefix("cost =") {
                let number = rest.trim().split_whitespace().next().unwrap_or("");
                declared_cost = number.parse::<Cost>().ok();
            }
            continue;
        }
        let name = line
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| PlanFileError::Malformed {
                line: idx + 1,
                found: line.to_string(),
            })?;
        let id = task
            .action_id(name.trim())
            .ok_or_else(|| PlanFileError::UnknownAction {
                line: idx + 1,
                name: name.trim().to_string(),
            })?;
        actions.push(id);
    }
    let (end, cost) = task.replay(&actions)?;
    if !task.is_goal(&end) {
        return Err(PlanFileError::GoalNotReached);
    }
    if let Some(declared) = declared_cost {
        if declared != cost {
            return Err(PlanFileError::CostMismatch {
                declared,
                computed: cost,
            });
        }
    }
    Ok(Plan { actions, cost })
}

/// Writes `plans` as `sas_plan.1`, `sas_plan.2`, ... into `dir` and returns
/// the paths in the same order.
pub fn write_plan_files(task: &Task, plans: &[Plan], dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(plans.len());
    for (i, plan) in plans.iter().enumerate() {
        let path = dir.join(format!("sas_plan.{}", i + 1));
        fs::write(&path, format_plan(task, plan))?;
        paths.push(path);
    }
    Ok(paths)
}

/// Reads every `sas_plan*` file in `dir`, ordered by numeric suffix where
/// present and lexicographically otherwise.
pub fn read_plan_dir(task: &Task, dir: &Path) -> Result<Vec<Plan>, PlanFileError> {
    let mut names: Vec<String> = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with("sas_plan") && entry.file_type()?.is_file() {
            names.push(name);
        }
    }
    names.sort_by_key(|name| {
        let suffix = name.rsplit('.').next().and_then(|s| s.parse::<u64>().ok());
        (suffix.is_none(), suffix, name.clone())
    });
    let mut plans = Vec::with_capacity(names.len());
    for name in names {
        let text = fs::read_to_string(dir.join(&name))?;
        plans.push(parse_plan(task, &text)?);
    }
    Ok(plans)
}

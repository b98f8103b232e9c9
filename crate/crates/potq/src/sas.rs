//! Reader and writer for Fast Downward's `output.sas` translator format,
//! version 3. Mutex groups are parsed and dropped; axioms and conditional
//! effects are rejected rather than silently misread.

use crate::task::{Action, Cost, PartialAssignment, State, Task, Value, VarId, Variable};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    MalformedFile { line: usize, message: String },
    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),
    #[error("line {line}: {message}")]
    DomainViolation { line: usize, message: String },
}

struct Reader<'a> {
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines(),
            line_no: 0,
        }
    }

    fn malformed(&self, message: impl Into<String>) -> ParseError {
        ParseError::MalformedFile {
            line: self.line_no,
            message: message.into(),
        }
    }

    fn domain(&self, message: impl Into<String>) -> ParseError {
        ParseError::DomainViolation {
            line: self.line_no,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Result<&'a str, ParseError> {
        self.line_no += 1;
        self.lines
            .next()
            .map(str::trim_end)
            .ok_or(ParseError::MalformedFile {
                line: self.line_no,
                message: "unexpected end of file".to_string(),
            })
    }

    fn expect(&mut self, tag: &str) -> Result<(), ParseError> {
        let line = self.next()?;
        if line == tag {
            Ok(())
        } else {
            Err(self.malformed(format!("expected `{tag}`, found `{line}`")))
        }
    }

    fn usize(&mut self) -> Result<usize, ParseError> {
        let line = self.next()?;
        line.trim()
            .parse()
            .map_err(|_| self.malformed(format!("expected a nonnegative integer, found `{line}`")))
    }

    fn int_line(&mut self) -> Result<Vec<i64>, ParseError> {
        let line = self.next()?;
        line.split_whitespace()
            .map(|tok| tok.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| self.malformed(format!("expected integers, found `{line}`")))
    }

    fn ints(&mut self, count: usize) -> Result<Vec<i64>, ParseError> {
        let fields = self.int_line()?;
        if fields.len() != count {
            return Err(self.malformed(format!(
                "expected {count} integers, found {}",
                fields.len()
            )));
        }
        Ok(fields)
    }
}

fn check_value(
    reader: &Reader,
    variables: &[Variable],
    var: i64,
    value: i64,
    what: &str,
) -> Result<(VarId, Value), ParseError> {
    if var < 0 || var as usize >= variables.len() {
        return Err(reader.domain(format!(
            "{what}: variable {var} out of range (task has {} variables)",
            variables.len()
        )));
    }
    let var = var as usize;
    let domain = variables[var].domain_size();
    if value < 0 || value as usize >= domain {
        return Err(reader.domain(format!(
            "{what}: value {value} out of range for variable {var} (domain size {domain})"
        )));
    }
    Ok((var, value as usize))
}

/// Parses an `output.sas` document. With `begin_metric 0` every action cost
/// is read as 1 regardless of the cost line, matching the translator's
/// convention.
pub fn parse_sas(text: &str) -> Result<Task, ParseError> {
    let mut r = Reader::new(text);

    r.expect("begin_version")?;
    let version = r.usize()?;
    if version != 3 {
        return Err(ParseError::UnsupportedFeature(format!(
            "file format version {version} (only version 3 is supported)"
        )));
    }
    r.expect("end_version")?;

    r.expect("begin_metric")?;
    let metric_flag = match r.usize()? {
        0 => false,
        1 => true,
        other => return Err(r.malformed(format!("metric must be 0 or 1, found {other}"))),
    };
    r.expect("end_metric")?;

    let var_count = r.usize()?;
    let mut variables = Vec::with_capacity(var_count);
    for index in 0..var_count {
        r.expect("begin_variable")?;
        let name = r.next()?.to_string();
        let layer = r.ints(1)?[0];
        if layer != -1 {
            return Err(ParseError::UnsupportedFeature(format!(
                "axioms (variable `{name}` has axiom layer {layer})"
            )));
        }
        let domain_size = r.usize()?;
        if domain_size == 0 {
            return Err(r.malformed(format!("variable `{name}` has an empty domain")));
        }
        let mut value_names = Vec::with_capacity(domain_size);
        for _ in 0..domain_size {
            value_names.push(r.next()?.to_string());
        }
        r.expect("end_variable")?;
        variables.push(Variable {
            index,
            name,
            value_names,
        });
    }

    let mutex_count = r.usize()?;
    for _ in 0..mutex_count {
        r.expect("begin_mutex_group")?;
        let fact_count = r.usize()?;
        for _ in 0..fact_count {
            r.ints(2)?;
        }
        r.expect("end_mutex_group")?;
    }

    r.expect("begin_state")?;
    let mut initial = Vec::with_capacity(var_count);
    for var in 0..var_count {
        let value = r.ints(1)?[0];
        let (_, value) = check_value(&r, &variables, var as i64, value, "initial state")?;
        initial.push(value);
    }
    r.expect("end_state")?;

    r.expect("begin_goal")?;
    let goal_count = r.usize()?;
    let mut goal_pairs = Vec::with_capacity(goal_count);
    for _ in 0..goal_count {
        let fields = r.ints(2)?;
        goal_pairs.push(check_value(&r, &variables, fields[0], fields[1], "goal")?);
    }
    r.expect("end_goal")?;
    let goal = PartialAssignment::new(goal_pairs)
        .map_err(|e| r.malformed(format!("goal: {e}")))?;

    let op_count = r.usize()?;
    let mut actions = Vec::with_capacity(op_count);
    for id in 0..op_count {
        r.expect("begin_operator")?;
        let name = r.next()?.to_string();
        let prevail_count = r.usize()?;
        let mut pre_pairs = Vec::new();
        for _ in 0..prevail_count {
            let fields = r.ints(2)?;
            pre_pairs.push(check_value(
                &r,
                &variables,
                fields[0],
                fields[1],
                "prevail condition",
            )?);
        }
        let effect_count = r.usize()?;
        if effect_count == 0 {
            return Err(r.malformed(format!("operator `{name}` has no effects")));
        }
        let mut eff_pairs = Vec::with_capacity(effect_count);
        for _ in 0..effect_count {
            let fields = r.int_line()?;
            if fields.first().copied().unwrap_or(-1) != 0 {
                return Err(ParseError::UnsupportedFeature(format!(
                    "conditional effects (operator `{name}` lists {} effect conditions)",
                    fields.first().copied().unwrap_or(-1)
                )));
            }
            if fields.len() != 4 {
                return Err(r.malformed(format!(
                    "expected `0 var pre post`, found {} integers",
                    fields.len()
                )));
            }
            let (var, post) =
                check_value(&r, &variables, fields[1], fields[3], "operator effect")?;
            if fields[2] != -1 {
                let (_, pre) =
                    check_value(&r, &variables, fields[1], fields[2], "operator effect")?;
                pre_pairs.push((var, pre));
            }
            eff_pairs.push((var, post));
        }
        let cost_line = r.ints(1)?[0];
        if cost_line < 0 {
            return Err(r.malformed(format!("operator `{name}` has negative cost {cost_line}")));
        }
        let cost: Cost = if metric_flag { cost_line as Cost } else { 1 };
        r.expect("end_operator")?;
        let precondition = PartialAssignment::new(pre_pairs)
            .map_err(|e| r.malformed(format!("operator `{name}`: {e}")))?;
        let effect = PartialAssignment::new(eff_pairs)
            .map_err(|e| r.malformed(format!("operator `{name}`: {e}")))?;
        actions.push(Action {
            id,
            name,
            precondition,
            effect,
            cost,
        });
    }

    let axiom_count = r.usize()?;
    if axiom_count != 0 {
        return Err(ParseError::UnsupportedFeature(format!(
            "axioms ({axiom_count} axiom rules present)"
        )));
    }

    Task::new(variables, actions, State::new(initial), goal, metric_flag)
        .map_err(|e| ParseError::MalformedFile {
            line: 0,
            message: e.to_string(),
        })
}

/// Serializes a task back to `output.sas` version 3. Mutex groups are not
/// retained, so a parse/write/parse round trip reproduces the same task.
pub fn write_sas(task: &Task) -> String {
    let mut out = String::new();
    out.push_str("begin_version\n3\nend_version\n");
    out.push_str("begin_metric\n");
    out.push_str(if task.metric_flag { "1\n" } else { "0\n" });
    out.push_str("end_metric\n");

    out.push_str(&task.variables.len().to_string());
    out.push('\n');
    for var in &task.variables {
        out.push_str("begin_variable\n");
        out.push_str(&var.name);
        out.push_str("\n-1\n");
        out.push_str(&var.domain_size().to_string());
        out.push('\n');
        for value_name in &var.value_names {
            out.push_str(value_name);
            out.push('\n');
        }
        out.push_str("end_variable\n");
    }

    out.push_str("0\n");

    out.push_str("begin_state\n");
    for &value in task.initial.values() {
        out.push_str(&value.to_string());
        out.push('\n');
    }
    out.push_str("end_state\n");

    out.push_str("begin_goal\n");
    out.push_str(&task.goal.len().to_string());
    out.push('\n');
    for &(var, value) in task.goal.pairs() {
        out.push_str(&format!("{var} {value}\n"));
    }
    out.push_str("end_goal\n");

    out.push_str(&task.actions.len().to_string());
    out.push('\n');
    for action in &task.actions {
        out.push_str("begin_operator\n");
        out.push_str(&action.name);
        out.push('\n');
        let effect_vars: Vec<_> = action.effect.vars().collect();
        let prevail: Vec<_> = action
            .precondition
            .pairs()
            .iter()
            .filter(|(v, _)| !effect_vars.contains(v))
            .collect();
        out.push_str(&prevail.len().to_string());
        out.push('\n');
        for &&(var, value) in &prevail {
            out.push_str(&format!("{var} {value}\n"));
        }
        out.push_str(&action.effect.len().to_string());
        out.push('\n');
        for &(var, post) in action.effect.pairs() {
            let pre = action
                .precondition
                .get(var)
                .map_or(-1, |v| v as i64);
            out.push_str(&format!("0 {var} {pre} {post}\n"));
        }
        out.push_str(&action.cost.to_string());
        out.push('\n');
        out.push_str("end_operator\n");
    }

    out.push_str("0\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn round_trip_counterexample() {
        let task = fixtures::counterexample();
        let parsed = parse_sas(&write_sas(&task)).unwrap();
        assert_eq!(parsed, task);
    }

    #[test]
    fn round_trip_with_metric_and_prevail() {
        let mut task = fixtures::counterexample();
        task.metric_flag = true;
        task.actions[1].cost = 7;
        // Give o3 a prevail condition on v0 to exercise the prevail section.
        task.actions[2].precondition = PartialAssignment::new([(1, 0), (0, 0)]).unwrap();
        let parsed = parse_sas(&write_sas(&task)).unwrap();
        assert_eq!(parsed, task);
    }

    #[test]
    fn metric_zero_forces_unit_costs() {
        let mut task = fixtures::counterexample();
        task.metric_flag = true;
        task.actions[0].cost = 9;
        let text = write_sas(&task).replace("begin_metric\n1", "begin_metric\n0");
        let parsed = parse_sas(&text).unwrap();
        assert!(parsed.actions.iter().all(|a| a.cost == 1));
    }

    #[test]
    fn rejects_wrong_version() {
        let text = write_sas(&fixtures::counterexample()).replace(
            "begin_version\n3",
            "begin_version\n2",
        );
        assert!(matches!(
            parse_sas(&text),
            Err(ParseError::UnsupportedFeature(_))
        ));
    }

    #[test]
    fn rejects_axiom_rules() {
        let mut text = write_sas(&fixtures::counterexample());
        text.truncate(text.rfind("0\n").unwrap());
        text.push_str("1\nbegin_rule\n0\n0 0 1\nend_rule\n");
        assert!(matches!(
            parse_sas(&text),
            Err(ParseError::UnsupportedFeature(ref m)) if m.contains("axiom")
        ));
    }

    #[test]
    fn rejects_axiom_layer_variables() {
        let text = write_sas(&fixtures::counterexample()).replacen("\n-1\n", "\n0\n", 1);
        assert!(matches!(
            parse_sas(&text),
            Err(ParseError::UnsupportedFeature(ref m)) if m.contains("axiom")
        ));
    }

    #[test]
    fn rejects_conditional_effects() {
        let text = write_sas(&fixtures::counterexample()).replacen("0 0 0 1", "1 1 0 0 0 1", 1);
        assert!(matches!(
            parse_sas(&text),
            Err(ParseError::UnsupportedFeature(ref m)) if m.contains("conditional")
        ));
    }

    #[test]
    fn rejects_out_of_range_goal_value() {
        let text = write_sas(&fixtures::counterexample()).replace("0 2\n1 1\nend_goal", "0 7\n1 1\nend_goal");
        assert!(matches!(parse_sas(&text), Err(ParseError::DomainViolation { .. })));
    }

    #[test]
    fn rejects_truncated_file() {
        let mut text = write_sas(&fixtures::counterexample());
        text.truncate(text.len() / 2);
        assert!(matches!(parse_sas(&text), Err(ParseError::MalformedFile { .. })));
    }

    #[test]
    fn reports_line_numbers() {
        let text = "begin_version\n4\nend_version\n";
        match parse_sas(text) {
            Err(ParseError::UnsupportedFeature(m)) => assert!(m.contains("version 4")),
            other => panic!("unexpected result: {other:?}"),
        }
        let text = "nonsense\n";
        match parse_sas(text) {
            Err(ParseError::MalformedFile { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected result: {other:?}"),
        }
    }

    #[test]
    fn parses_mutex_groups_without_keeping_them() {
        let task = fixtures::counterexample();
        let text = write_sas(&task).replacen(
            "end_variable\n0\nbegin_state",
            "end_variable\n1\nbegin_mutex_group\n2\n0 0\n0 1\nend_mutex_group\nbegin_state",
            1,
        );
        assert_eq!(parse_sas(&text).unwrap(), task);
    }
}

//! Command line front end: enumerate bounded plans for a SAS+ task, keep one
//! representative per equivalence class, optionally machine-check the
//! pruning, and write Fast Downward style plan files plus a JSON report.
//!
//! Exit codes: 0 success, 2 unreadable input (task file, pattern, action
//! names, plan files), 3 no plan within the bound, 4 a limit truncated the
//! result, 5 pruning lost an equivalence class.

use clap::{Args, Parser, Subcommand, ValueEnum};
use potq::oracle::{check_safety, task_fingerprint, SafetyMode, SafetyReport};
use potq::plan_io::{read_plan_dir, write_plan_files};
use potq::search::SearchOutcome;
use potq::{
    parse_sas, quotient_filter, select_actions, solve_potq, Bound, OrderImportantSet,
    PruningStrategy, Rational, SearchError, SearchLimits, SearchStats, StubbornConfig, Task,
    TieBreak,
};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_PARSE: u8 = 2;
const EXIT_UNSOLVABLE: u8 = 3;
const EXIT_LIMITS: u8 = 4;
const EXIT_SAFETY: u8 = 5;

#[derive(Parser)]
#[command(
    name = "potq",
    version,
    about = "Enumerate all plans of a SAS+ task within a cost bound, \
             one representative per action-ordering equivalence class",
    args_conflicts_with_subcommands = true,
    subcommand_negates_reqs = true
)]
struct Cli {
    #[command(flatten)]
    solve: SolveArgs,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Filter existing plan files down to one representative per class
    Filter(FilterArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// SAS+ task file (Fast Downward output.sas, version 3)
    #[arg(long, value_name = "FILE", required = true)]
    task: Option<PathBuf>,

    /// Anchored regex over full action names selecting the order-important
    /// set; plans differing only in the order of other actions collapse
    #[arg(long, value_name = "REGEX", conflicts_with = "x_actions")]
    x_regex: Option<String>,

    /// Order-important action by exact name (repeatable)
    #[arg(long = "x-actions", value_name = "NAME")]
    x_actions: Vec<String>,

    /// Successor pruning rule
    #[arg(long, value_enum, default_value_t = PruningArg::None)]
    pruning: PruningArg,

    /// Cost bound as a multiple of the optimal cost: integer, fraction
    /// (3/2), or decimal (1.5)
    #[arg(
        long,
        value_name = "RATIONAL",
        default_value = "1",
        conflicts_with = "absolute_bound"
    )]
    quality_multiplier: String,

    /// Cost bound as an absolute value, instead of a multiplier
    #[arg(long, value_name = "COST")]
    absolute_bound: Option<u64>,

    /// Stop after this many plans (the result is then incomplete)
    #[arg(long, value_name = "N")]
    max_plans: Option<usize>,

    /// Plan length cap; default is twice the sum of all domain sizes
    #[arg(long, value_name = "N")]
    max_length: Option<usize>,

    /// Expansion budget (the result is then incomplete)
    #[arg(long, value_name = "N")]
    node_budget: Option<u64>,

    /// Which unsatisfied goal fact seeds the stubborn set
    #[arg(long, value_enum, default_value_t = TieBreakArg::LowestVar)]
    goal_choice: TieBreakArg,

    /// Which unsatisfied precondition fact builds an enabling set
    #[arg(long, value_enum, default_value_t = TieBreakArg::LowestVar)]
    nes_choice: TieBreakArg,

    /// Also count classes under no order constraints and under full
    /// sequence comparison, from three separate unpruned enumerations
    #[arg(long)]
    metrics: bool,

    /// Compare against brute force and exit 5 if pruning lost a class
    #[arg(long)]
    oracle_check: bool,

    /// Run the oracle from every reachable state, not just the initial one
    #[arg(long, requires = "oracle_check")]
    exhaustive_safety: bool,

    /// Directory for sas_plan.N files and report.json
    #[arg(long, value_name = "DIR", default_value = ".")]
    output_dir: PathBuf,

    /// Stdout format; report.json is written either way
    #[arg(long, value_enum, default_value_t = ReportArg::Text)]
    report: ReportArg,
}

#[derive(Args)]
struct FilterArgs {
    /// SAS+ task file the plans belong to
    #[arg(long, value_name = "FILE")]
    task: PathBuf,

    /// Directory holding sas_plan* files to filter
    #[arg(long, value_name = "DIR")]
    input_dir: PathBuf,

    #[arg(long, value_name = "REGEX", conflicts_with = "x_actions")]
    x_regex: Option<String>,

    #[arg(long = "x-actions", value_name = "NAME")]
    x_actions: Vec<String>,

    /// Directory the kept representatives are renumbered into
    #[arg(long, value_name = "DIR")]
    output_dir: PathBuf,

    #[arg(long, value_enum, default_value_t = ReportArg::Text)]
    report: ReportArg,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum PruningArg {
    None,
    Stubborn,
    PorPlus,
    Pogsss,
    /// Demonstrably loses plan classes; only useful with --oracle-check
    NaiveUnsafe,
}

impl From<PruningArg> for PruningStrategy {
    fn from(arg: PruningArg) -> Self {
        match arg {
            PruningArg::None => PruningStrategy::None,
            PruningArg::Stubborn => PruningStrategy::StubbornOnly,
            PruningArg::PorPlus => PruningStrategy::PorPlus,
            PruningArg::Pogsss => PruningStrategy::PoGsss,
            PruningArg::NaiveUnsafe => PruningStrategy::NaiveUnsafe,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum TieBreakArg {
    LowestVar,
    HighestVar,
}

impl From<TieBreakArg> for TieBreak {
    fn from(arg: TieBreakArg) -> Self {
        match arg {
            TieBreakArg::LowestVar => TieBreak::LowestVar,
            TieBreakArg::HighestVar => TieBreak::HighestVar,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ReportArg {
    Text,
    Json,
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Some(Command::Filter(args)) => run_filter(args),
        None => run_solve(cli.solve),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn load_task(path: &Path) -> Result<Task, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_PARSE, format!("cannot read {}: {e}", path.display())))?;
    parse_sas(&text).map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn resolve_x(
    task: &Task,
    x_regex: &Option<String>,
    x_actions: &[String],
) -> Result<OrderImportantSet, Failure> {
    if let Some(pattern) = x_regex {
        return select_actions(task, pattern).map_err(|e| fail(EXIT_PARSE, e.to_string()));
    }
    let mut ids = Vec::new();
    for name in x_actions {
        let id = task
            .action_id(name)
            .ok_or_else(|| fail(EXIT_PARSE, format!("no action named `{name}` in the task")))?;
        ids.push(id);
    }
    Ok(OrderImportantSet::from_ids(ids))
}

#[derive(Serialize)]
struct ConfigEcho {
    pruning: PruningStrategy,
    x: Vec<String>,
    bound: Bound,
    goal_choice: TieBreak,
    nes_choice: TieBreak,
    limits: SearchLimits,
    exhaustive_safety: bool,
}

#[derive(Serialize)]
struct PlanEntry {
    file: String,
    cost: u64,
    actions: Vec<String>,
}

#[derive(Serialize)]
struct MetricsRecord {
    total_actions: usize,
    order_important_actions: usize,
    /// Plans within the bound, compared as exact sequences.
    tq_size: u64,
    /// Classes when only the action multiset matters.
    unordered_size: u64,
    /// Classes under the configured order-important set.
    potq_size: u64,
    normalized_potq: Option<f64>,
    normalized_unordered: Option<f64>,
}

#[derive(Serialize)]
struct RunReport {
    task: String,
    task_id: String,
    config: ConfigEcho,
    complete: bool,
    resolved_bound: u64,
    stats: SearchStats,
    class_count: u64,
    plans: Vec<PlanEntry>,
    metrics: Option<MetricsRecord>,
    safety: Option<SafetyReport>,
}

fn run_solve(args: SolveArgs) -> Result<u8, Failure> {
    let task_path = args.task.as_ref().expect("clap enforces --task");
    let task = load_task(task_path)?;
    let x = resolve_x(&task, &args.x_regex, &args.x_actions)?;

    let bound = match args.absolute_bound {
        Some(cost) => Bound::Absolute(cost),
        None => {
            let multiplier: Rational = args
                .quality_multiplier
                .parse()
                .map_err(|e| fail(EXIT_PARSE, format!("--quality-multiplier: {e}")))?;
            Bound::Multiplier(multiplier)
        }
    };
    let limits = SearchLimits {
        max_plans: args.max_plans,
        max_plan_length: args.max_length,
        node_budget: args.node_budget,
    };
    let config = StubbornConfig::new(args.pruning.into(), x.clone())
        .with_tie_breaks(args.goal_choice.into(), args.nes_choice.into());

    let outcome = solve_potq(&task, &x, bound, &config, &limits).map_err(|e| match e {
        SearchError::UnsolvableWithMultiplier => fail(EXIT_UNSOLVABLE, e.to_string()),
    })?;

    let metrics = if args.metrics {
        Some(compute_metrics(&task, &x, bound, &limits)?)
    } else {
        None
    };

    let safety = if args.oracle_check {
        let mode = if args.exhaustive_safety {
            SafetyMode::AllReachable
        } else {
            SafetyMode::InitialOnly
        };
        let report = check_safety(&task, &config, bound, &limits, mode)
            .map_err(|e| fail(EXIT_LIMITS, e.to_string()))?;
        Some(report)
    } else {
        None
    };

    let paths = write_plan_files(&task, &outcome.plans, &args.output_dir)
        .map_err(|e| fail(EXIT_PARSE, format!("cannot write plan files: {e}")))?;
    let plans: Vec<PlanEntry> = outcome
        .plans
        .iter()
        .zip(&paths)
        .map(|(plan, path)| PlanEntry {
            file: path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            cost: plan.cost,
            actions: plan
                .actions
                .iter()
                .map(|&a| task.actions[a].name.clone())
                .collect(),
        })
        .collect();

    let report = RunReport {
        task: task_path.display().to_string(),
        task_id: task_fingerprint(&task),
        config: ConfigEcho {
            pruning: config.variant,
            x: x.iter().map(|a| task.actions[a].name.clone()).collect(),
            bound,
            goal_choice: config.goal_choice,
            nes_choice: config.nes_choice,
            limits: limits.clone(),
            exhaustive_safety: args.exhaustive_safety,
        },
        complete: outcome.complete,
        resolved_bound: outcome.bound,
        stats: outcome.stats.clone(),
        class_count: outcome.stats.classes_found,
        plans,
        metrics,
        safety,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(args.output_dir.join("report.json"), &json)
        .map_err(|e| fail(EXIT_PARSE, format!("cannot write report.json: {e}")))?;

    match args.report {
        ReportArg::Json => println!("{json}"),
        ReportArg::Text => print_text_report(&report),
    }

    if let Some(safety) = &report.safety {
        if !safety.is_safe() {
            eprintln!(
                "error: pruning lost {} equivalence class(es); see report.json",
                safety.violations.len()
            );
            return Ok(EXIT_SAFETY);
        }
    }
    if !report.complete {
        eprintln!("error: a search limit truncated the result");
        return Ok(EXIT_LIMITS);
    }
    if report.plans.is_empty() {
        eprintln!("error: no plan within the cost bound");
        return Ok(EXIT_UNSOLVABLE);
    }
    Ok(0)
}

/// Three full enumerations with pruning off: full sequence comparison, no
/// order constraints, and the configured set.
fn compute_metrics(
    task: &Task,
    x: &OrderImportantSet,
    bound: Bound,
    limits: &SearchLimits,
) -> Result<MetricsRecord, Failure> {
    let full = StubbornConfig::new(PruningStrategy::None, OrderImportantSet::empty());
    let run = |set: &OrderImportantSet| -> Result<SearchOutcome, Failure> {
        let outcome = solve_potq(task, set, bound, &full, limits).map_err(|e| match e {
            SearchError::UnsolvableWithMultiplier => fail(EXIT_UNSOLVABLE, e.to_string()),
        })?;
        if !outcome.complete {
            return Err(fail(
                EXIT_LIMITS,
                "metrics enumeration hit a limit; counts would be incomplete",
            ));
        }
        Ok(outcome)
    };
    let ordered = run(&OrderImportantSet::all(task))?;
    let unordered = run(&OrderImportantSet::empty())?;
    let configured = run(x)?;
    let tq_size = ordered.stats.classes_found;
    let unordered_size = unordered.stats.classes_found;
    let potq_size = configured.stats.classes_found;
    assert!(
        unordered_size <= potq_size && potq_size <= tq_size,
        "class counts must grow with the order-important set"
    );
    let normalize = |n: u64| (tq_size > 0).then(|| n as f64 / tq_size as f64);
    Ok(MetricsRecord {
        total_actions: task.actions.len(),
        order_important_actions: x.len(),
        tq_size,
        unordered_size,
        potq_size,
        normalized_potq: normalize(potq_size),
        normalized_unordered: normalize(unordered_size),
    })
}

fn print_text_report(report: &RunReport) {
    println!(
        "task: {} ({}), pruning: {:?}, |X| = {}",
        report.task,
        report.task_id,
        report.config.pruning,
        report.config.x.len()
    );
    println!(
        "bound: cost <= {}, plans enumerated: {}, classes kept: {}{}",
        report.resolved_bound,
        report.stats.plans_found,
        report.class_count,
        if report.complete { "" } else { " (incomplete)" }
    );
    println!(
        "stats: {} expansions, {} successors generated, {} pruned",
        report.stats.expansions, report.stats.generated, report.stats.pruned_successors
    );
    for plan in &report.plans {
        println!("  {} (cost {}): {}", plan.file, plan.cost, plan.actions.join(", "));
    }
    if let Some(metrics) = &report.metrics {
        println!(
            "metrics: sequences {}, multisets {}, configured classes {}",
            metrics.tq_size, metrics.unordered_size, metrics.potq_size
        );
    }
    if let Some(safety) = &report.safety {
        println!(
            "safety: {} state(s) checked, {}/{} classes covered, {} violation(s)",
            safety.states_checked,
            safety.covered_class_count,
            safety.full_class_count,
            safety.violations.len()
        );
    }
}

#[derive(Serialize)]
struct FilterReport {
    read: usize,
    kept: usize,
    files: Vec<String>,
}

fn run_filter(args: FilterArgs) -> Result<u8, Failure> {
    let task = load_task(&args.task)?;
    let x = resolve_x(&task, &args.x_regex, &args.x_actions)?;
    let plans = read_plan_dir(&task, &args.input_dir)
        .map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", args.input_dir.display())))?;
    let kept = quotient_filter(&plans, &x);
    let paths = write_plan_files(&task, &kept, &args.output_dir)
        .map_err(|e| fail(EXIT_PARSE, format!("cannot write plan files: {e}")))?;
    let report = FilterReport {
        read: plans.len(),
        kept: kept.len(),
        files: paths
            .iter()
            .map(|p| {
                p.file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default()
            })
            .collect(),
    };
    match args.report {
        ReportArg::Json => {
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
        }
        ReportArg::Text => {
            println!("read {} plan(s), kept {} representative(s)", report.read, report.kept);
        }
    }
    Ok(0)
}

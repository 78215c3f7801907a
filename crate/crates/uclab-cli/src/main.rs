//! Batch front-end of the unique-continuation laboratory.
//!
//! Each subcommand selects the experiments of its kind from the configuration
//! (adding one with default parameters when the config lists none), runs them
//! on a worker pool, and writes `report.csv` + `report.json` into the output
//! directory. Exit codes: 0 all non-vacuous assertions pass, 1 assertion
//! failure, 2 configuration or runtime error.

mod config;
mod experiments;
mod output;
mod plot;

use std::path::Path;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::Parser;

use config::{ExperimentSpec, RunConfig};
use experiments::{run_experiment, ExperimentResult, RunError};

#[derive(Parser, Debug)]
#[command(
    name = "uclab",
    about = "Numerical laboratory for quantitative unique continuation",
    disable_help_subcommand = true
)]
struct Cli {
    /// Subcommand: solve | constants | three-ball | caccioppoli | doubling |
    /// frequency | vanishing | global-uc | cauchy | carleman | cover |
    /// chain | plot
    command: String,

    /// Positional arguments of the subcommand (plot: report.json).
    args: Vec<String>,

    /// Configuration file (key = value sections).
    #[arg(long)]
    config: Option<String>,

    /// Output directory (overrides [run] out).
    #[arg(long)]
    out: Option<String>,

    /// Random seed (overrides [run] seed).
    #[arg(long)]
    seed: Option<u64>,

    /// Grid cell count (overrides [domain] cells).
    #[arg(long)]
    grid: Option<usize>,

    /// explicit | fit (overrides [run] mode).
    #[arg(long)]
    mode: Option<String>,

    /// Worker thread count (overrides [run] workers).
    #[arg(long)]
    workers: Option<usize>,

    /// plot: profile table name.
    #[arg(long)]
    profile: Option<String>,

    /// plot: x column.
    #[arg(long)]
    x: Option<String>,

    /// plot: y column.
    #[arg(long)]
    y: Option<String>,

    /// plot: use log-log axes.
    #[arg(long, default_value_t = false)]
    log_log: bool,
}

const EXPERIMENT_KINDS: &[&str] = &[
    "solve",
    "constants",
    "three-ball",
    "caccioppoli",
    "doubling",
    "frequency",
    "vanishing",
    "global-uc",
    "cauchy",
    "carleman",
    "cover",
    "chain",
];

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(all_pass) => {
            if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<bool, RunError> {
    if cli.command == "plot" {
        return run_plot(cli).map(|()| true);
    }
    if !EXPERIMENT_KINDS.contains(&cli.command.as_str()) {
        return Err(RunError::Config(config::ConfigError::invalid(format!(
            "unknown subcommand `{}`",
            cli.command
        ))));
    }
    if !cli.args.is_empty() {
        return Err(RunError::Config(config::ConfigError::invalid(
            "unexpected positional arguments",
        )));
    }

    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.run.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(grid) = cli.grid {
        cfg.domain.cells = grid;
    }
    if let Some(mode) = &cli.mode {
        cfg.run.mode = mode.clone();
    }
    if let Some(workers) = cli.workers {
        cfg.run.workers = workers;
    }
    cfg.validate()?;

    // Experiments of this kind, in config order. Without a config file one
    // default-parameter experiment is synthesized; a config that lists no
    // experiments of this kind runs none (header-only report).
    let mut selected: Vec<ExperimentSpec> = cfg
        .experiments
        .iter()
        .filter(|e| e.kind == cli.command)
        .cloned()
        .collect();
    if selected.is_empty() && cli.config.is_none() {
        selected.push(ExperimentSpec::new(cli.command.clone()));
    }
    // The resolved config embedded in the report carries exactly the
    // experiments that ran.
    let mut resolved = cfg.clone();
    resolved.experiments = selected.clone();
    let config_text = resolved.serialize_report();

    let results = run_pool(&cfg, &selected)?;
    output::write_reports(Path::new(&cfg.run.out), &config_text, &results)?;

    let mut all_pass = true;
    for r in &results {
        for rep in &r.reports {
            let verdict = if rep.pass {
                "PASS"
            } else if rep.vacuous {
                "VACUOUS"
            } else {
                all_pass = false;
                "FAIL"
            };
            println!(
                "[{}] {verdict} {} margin={:.6e}",
                r.name, rep.id, rep.margin
            );
            if !rep.pass && rep.vacuous {
                all_pass = true;
            }
        }
        if !r.passed() {
            all_pass = false;
        }
    }
    Ok(all_pass)
}

/// Run experiments on up to `workers` threads; results keep config order so
/// the reports are byte-identical for any worker count.
fn run_pool(
    cfg: &RunConfig,
    selected: &[ExperimentSpec],
) -> Result<Vec<ExperimentResult>, RunError> {
    let workers = cfg.run.workers.min(selected.len()).max(1);
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<ExperimentResult, RunError>>>> =
        Mutex::new((0..selected.len()).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= selected.len() {
                    break;
                }
                let out = run_experiment(cfg, i, &selected[i]);
                slots.lock().expect("result slots")[i] = Some(out);
            });
        }
    });

    let mut results = Vec::with_capacity(selected.len());
    for slot in slots.into_inner().expect("result slots") {
        results.push(slot.expect("every experiment ran")?);
    }
    Ok(results)
}

fn run_plot(cli: &Cli) -> Result<(), RunError> {
    let invalid = |m: String| RunError::Config(config::ConfigError::invalid(m));
    let report_path = cli
        .args
        .first()
        .ok_or_else(|| invalid("plot needs a report.json path".into()))?;
    let out = cli
        .out
        .clone()
        .ok_or_else(|| invalid("plot needs --out <file.svg>".into()))?;
    let text = std::fs::read_to_string(report_path).map_err(|source| RunError::Io {
        path: report_path.clone(),
        source,
    })?;
    let doc: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| invalid(format!("bad report document: {e}")))?;
    let profile_name = cli.profile.as_deref().unwrap_or("");
    let x_col = cli
        .x
        .as_deref()
        .ok_or_else(|| invalid("plot needs --x <column>".into()))?;
    let y_col = cli
        .y
        .as_deref()
        .ok_or_else(|| invalid("plot needs --y <column>".into()))?;

    // First profile matching the requested name (or the first one at all).
    let experiments = doc["experiments"]
        .as_array()
        .ok_or_else(|| invalid("report has no experiments".into()))?;
    let mut found: Option<&serde_json::Value> = None;
    for e in experiments {
        if let Some(profiles) = e["profiles"].as_array() {
            for p in profiles {
                let name = p["name"].as_str().unwrap_or("");
                if profile_name.is_empty() || name == profile_name {
                    found = Some(p);
                    break;
                }
            }
        }
        if found.is_some() {
            break;
        }
    }
    let profile = found.ok_or_else(|| {
        invalid(format!("no profile named `{profile_name}` in the report"))
    })?;
    let columns: Vec<String> = profile["columns"]
        .as_array()
        .map(|c| {
            c.iter()
                .map(|v| v.as_str().unwrap_or("").to_string())
                .collect()
        })
        .unwrap_or_default();
    let col_index = |name: &str| -> Result<usize, RunError> {
        columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| invalid(format!("unknown column `{name}` (have: {columns:?})")))
    };
    let (xi, yi) = (col_index(x_col)?, col_index(y_col)?);
    let rows = profile["rows"]
        .as_array()
        .ok_or_else(|| invalid("profile has no rows".into()))?;
    let mut points = Vec::with_capacity(rows.len());
    for row in rows {
        let row = row
            .as_array()
            .ok_or_else(|| invalid("malformed profile row".into()))?;
        let get = |i: usize| row.get(i).and_then(|v| v.as_f64());
        match (get(xi), get(yi)) {
            (Some(x), Some(y)) => points.push((x, y)),
            _ => return Err(invalid("non-numeric profile entry".into())),
        }
    }
    let scale = if cli.log_log {
        plot::Scale::Log
    } else {
        plot::Scale::Linear
    };
    let title = profile["name"].as_str().unwrap_or("profile");
    let svg = plot::chart(title, x_col, y_col, &points, scale, scale)?;
    std::fs::write(&out, svg).map_err(|source| RunError::Io { path: out, source })?;
    Ok(())
}

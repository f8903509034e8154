use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hypomult::config::{RunConfig, Task};
use hypomult::report::{write_outputs, TaskState, TOOL_VERSION};
use hypomult::{pipeline, presets, Result};

/// Environment variable capping the number of worker threads.
const WORKERS_ENV: &str = "HYPOMULT_WORKERS";

#[derive(Parser)]
#[command(name = "hypomult", version = TOOL_VERSION, about = "Multiplier construction and verification for hypoelliptic transport estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tasks of a JSON config (or of a preset given as `preset:<name>`).
    Run {
        config: String,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Comma-separated task list, or `all`.
        #[arg(long)]
        tasks: Option<String>,
        /// Overrides the test-function seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List or print the shipped presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Print the tool version.
    Version,
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    Show { name: String },
}

fn load_config(arg: &str) -> Result<RunConfig> {
    match arg.strip_prefix("preset:") {
        Some(name) => presets::preset(name),
        None => RunConfig::load(std::path::Path::new(arg)),
    }
}

fn parse_tasks(list: &str) -> Result<Vec<Task>> {
    if list == "all" {
        return Ok(Task::ALL.to_vec());
    }
    list.split(',').map(|t| Task::parse(t.trim())).collect()
}

fn run(config: &str, output_dir: Option<PathBuf>, tasks: Option<String>, seed: Option<u64>) -> Result<i32> {
    let mut cfg = load_config(config)?;
    if let Some(t) = tasks {
        cfg.tasks = parse_tasks(&t)?;
    }
    if let Some(seed) = seed {
        if let Some(s) = cfg.spectral.as_mut() {
            s.test_functions.seed = seed;
        }
    }
    if let Some(d) = &output_dir {
        cfg.output_dir = Some(d.display().to_string());
    }
    let dir = PathBuf::from(cfg.output_dir.clone().unwrap_or_else(|| format!("hypomult-out/{}", cfg.name)));
    let report = pipeline::run(&cfg)?;
    let written = write_outputs(&dir, &report)?;
    for (name, status) in Task::ALL.iter().filter_map(|t| report.tasks.get(t.name()).map(|s| (t.name(), s))) {
        let state = match status.state {
            TaskState::Ok => "ok",
            TaskState::Failed => "FAILED",
            TaskState::Skipped => "skipped",
        };
        match &status.error {
            Some(e) => println!("{name}: {state} ({}: {})", e.kind, e.message),
            None => println!("{name}: {state}"),
        }
    }
    for c in &report.certificates {
        println!("certificate {}: passed={} worst_ratio={:e}", c.name, c.passed, c.worst_ratio);
    }
    if let Some(p) = &report.particular {
        for c in &p.certificates {
            println!("certificate {}: passed={} worst_ratio={:e}", c.name, c.passed, c.worst_ratio);
        }
    }
    if let Some(s) = &report.spectral {
        if let Some(c) = &s.commutator {
            println!("commutator identity: max relative error {:e}", c.max_relative_error);
        }
        for m in &s.estimates {
            println!(
                "estimate {}: max ratio {:e} over {} members (empirical lower bound on the constant)",
                m.which.name(),
                m.max_ratio,
                m.ensemble_size
            );
        }
    }
    println!("report written to {}", written[0].display());
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    let result: Result<i32> = match cli.command {
        Command::Run {
            config,
            output_dir,
            tasks,
            seed,
        } => run(&config, output_dir, tasks, seed),
        Command::Presets { action } => match action {
            PresetAction::List => {
                for n in presets::preset_names() {
                    println!("{n}");
                }
                Ok(0)
            }
            PresetAction::Show { name } => presets::preset(&name).and_then(|c| c.to_json()).map(|j| {
                println!("{j}");
                0
            }),
        },
        Command::Version => {
            println!("hypomult {TOOL_VERSION}");
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error [{}]: {e}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use ace_core::gateway::csvio::read_table;
use ace_core::gateway::http::serve;
use ace_core::gateway::models::{apply_model, fit_model, FitOptions, ModelFile, ModelKind};
use ace_core::gateway::{parse_answers, run_headless, HeadlessOptions, RunStatus, Service};
use ace_core::scenarios::ScenarioConfig;

#[derive(Parser)]
#[command(
    name = "ace",
    version,
    about = "Critical-event response for enterprises: scenario runs, API server, model fitting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one event through a knowledge base and print the report.
    Run {
        /// Knowledge-base files (rules, facts, tables), loaded in order.
        #[arg(long, num_args = 1..)]
        kb: Vec<PathBuf>,
        #[arg(long)]
        event: PathBuf,
        /// Answers, one per line or a JSON array.
        #[arg(long)]
        answers: Option<PathBuf>,
        /// Write the goal tree here as JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Shipped package loaded before the files.
        #[arg(long)]
        package: Option<String>,
    },
    /// Serve the /v1 API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        data: PathBuf,
    },
    /// Fit a model to a CSV table.
    Fit {
        #[arg(long, value_enum)]
        kind: ModelKind,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Surface and regression degree.
        #[arg(long)]
        degree: Option<u32>,
        /// Dynamical model order.
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        margin: Option<f64>,
        /// Potential-function floor on the squared distance.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        no_intercept: bool,
    },
    /// Apply a fitted model to every row of a CSV table.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn run(
    kb: Vec<PathBuf>,
    event: PathBuf,
    answers: Option<PathBuf>,
    trace: Option<PathBuf>,
    package: Option<String>,
) -> Result<i32> {
    let mut opts = HeadlessOptions {
        event_json: read(&event)?,
        package,
        config: ScenarioConfig::default(),
        ..Default::default()
    };
    for p in &kb {
        opts.kb_sources.push((p.display().to_string(), read(p)?));
    }
    if let Some(a) = &answers {
        opts.answers = parse_answers(&read(a)?)?;
    }
    let out = run_headless(&opts);
    print!("{}", out.output);
    if let (Some(path), Some(t)) = (&trace, &out.trace) {
        let mut s = serde_json::to_string_pretty(t)?;
        s.push('\n');
        fs::write(path, s).with_context(|| format!("writing {}", path.display()))?;
    }
    if out.status != RunStatus::Success {
        eprintln!("ace: {:?}", out.status);
    }
    Ok(out.status.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            kb,
            event,
            answers,
            trace,
            package,
        } => run(kb, event, answers, trace, package),
        Command::Serve { port, data } => (|| {
            let svc = Arc::new(Service::open(&data, ScenarioConfig::default())?);
            let rt = tokio::runtime::Runtime::new()?;
            eprintln!("ace: serving /v1 on port {port}, data in {}", data.display());
            rt.block_on(serve(svc, port))?;
            Ok(0)
        })(),
        Command::Fit {
            kind,
            input,
            out,
            degree,
            order,
            margin,
            epsilon,
            no_intercept,
        } => (|| {
            let table = read_table(fs::File::open(&input).with_context(|| format!("opening {}", input.display()))?)?;
            let mut opts = FitOptions::default();
            opts.degree = degree.unwrap_or(opts.degree);
            opts.order = order.unwrap_or(opts.order);
            opts.margin = margin.unwrap_or(opts.margin);
            opts.epsilon = epsilon.unwrap_or(opts.epsilon);
            opts.intercept = !no_intercept;
            let model = fit_model(kind, &table, &opts)?;
            let mut s = serde_json::to_string_pretty(&model)?;
            s.push('\n');
            fs::write(&out, s).with_context(|| format!("writing {}", out.display()))?;
            Ok(0)
        })(),
        Command::Classify { model, input } => (|| {
            let m: ModelFile =
                serde_json::from_str(&read(&model)?).with_context(|| format!("parsing {}", model.display()))?;
            let table = read_table(fs::File::open(&input).with_context(|| format!("opening {}", input.display()))?)?;
            for e in apply_model(&m, &table)? {
                println!("{}", serde_json::to_string(&e)?);
            }
            Ok(0)
        })(),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("ace: {e:#}");
            ExitCode::from(2)
        }
    }
}

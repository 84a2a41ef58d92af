mod bundled;
mod plot;
mod report;
mod run;
mod scenario;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use crate::report::Report;
use crate::run::{run_scenario, RunOptions};
use crate::scenario::Scenario;

#[derive(Parser, Debug)]
#[command(name = "cauchy", version, about = "Run boundary-value scenarios and emit reports and plot data")]
struct Cli {
    /// Enumerate the bundled scenarios.
    #[arg(long)]
    list: bool,

    /// Output directory.
    #[arg(long, global = true, env = "CAUCHY_OUT", default_value = "cauchy-out")]
    out: PathBuf,

    /// Seed for randomized suites; overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Multiplies every tolerance.
    #[arg(long, global = true)]
    tol_scale: Option<f64>,

    /// Enable the expensive cross-check oracles.
    #[arg(long, global = true)]
    oracle: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run scenario files or bundled scenarios by name, in parallel.
    Run {
        #[arg(required = true)]
        scenarios: Vec<String>,
    },
    /// Write the CSV and SVG of one series of a report.
    Plot {
        report: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotKind,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
#[value(rename_all = "snake_case")]
enum PlotKind {
    EigenTrajectories,
    PrincipalAngles,
    Convergence,
}

impl PlotKind {
    fn key(self) -> &'static str {
        plot::PLOT_KINDS[self as usize]
    }
}

fn load(arg: &str) -> anyhow::Result<Scenario> {
    let path = Path::new(arg);
    if path.exists() {
        let text = fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
        return Scenario::parse(&text, arg);
    }
    match bundled::lookup(arg) {
        Some(text) => Scenario::parse(text, arg),
        None => Err(anyhow!("{arg}: no such file or bundled scenario (see --list)")),
    }
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn run(cli: &Cli, names: &[String]) -> anyhow::Result<bool> {
    let scenarios = names
        .iter()
        .map(|n| {
            let s = load(n)?;
            s.require_seed(cli.seed)?;
            Ok(s)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let opts = RunOptions {
        seed: cli.seed,
        tol_scale: cli.tol_scale,
        oracle: cli.oracle,
    };
    let outcomes: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = scenarios
            .into_iter()
            .map(|sc| {
                let opts = &opts;
                s.spawn(move || run_scenario(sc, opts))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("scenario worker panicked")).collect()
    });
    let mut all_pass = true;
    for o in outcomes {
        let r = &o.report;
        let name = &r.scenario.name;
        let report_path = cli.out.join(format!("{name}.report.json"));
        write(&report_path, &(serde_json::to_string_pretty(r)? + "\n"))?;
        let timings: serde_json::Map<String, serde_json::Value> =
            o.timings.iter().map(|(k, v)| (k.clone(), (*v).into())).collect();
        write(&cli.out.join(format!("{name}.timings.json")), &(serde_json::to_string_pretty(&timings)? + "\n"))?;
        if let Ok(series) = plot::series(r, "eigen_trajectories") {
            write(&cli.out.join(format!("{name}.trajectories.csv")), &plot::csv(series))?;
        }
        let passed = r.assertions.iter().filter(|a| a.pass).count();
        println!(
            "{} {name}: {passed}/{} assertions -> {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.assertions.len(),
            report_path.display()
        );
        for a in r.assertions.iter().filter(|a| !a.pass) {
            println!("  failed: {} = {:e} > {:e}", a.name, a.measured, a.tolerance);
        }
        if let Some(f) = &r.failure {
            println!("  stage `{}` failed: {}", f.stage, f.message);
        }
        all_pass &= r.pass;
    }
    Ok(all_pass)
}

fn plot_report(cli: &Cli, path: &Path, kind: PlotKind) -> anyhow::Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let report: Report = serde_json::from_str(&text)
        .map_err(|e| anyhow!("{}:{}:{}: not a report: {e}", path.display(), e.line(), e.column()))?;
    let series = plot::series(&report, kind.key())?;
    fs::create_dir_all(&cli.out)?;
    let stem = format!("{}.{}", report.scenario.name, kind.key());
    write(&cli.out.join(format!("{stem}.csv")), &plot::csv(series))?;
    write(
        &cli.out.join(format!("{stem}.svg")),
        &plot::svg(series, &format!("{}: {}", report.scenario.name, kind.key()))?,
    )?;
    println!("{}", cli.out.join(format!("{stem}.svg")).display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.list {
        for (name, text) in bundled::BUNDLED {
            let kind = Scenario::parse(text, name).map(|s| s.kind.to_string()).unwrap_or_default();
            println!("{name}\t{kind}");
        }
        return ExitCode::SUCCESS;
    }
    let result = match &cli.command {
        None => Err(anyhow!("nothing to do; try `cauchy run <scenario>` or `cauchy --list`")),
        Some(Command::Run { scenarios }) => run(&cli, scenarios).map(|pass| {
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }),
        Some(Command::Plot { report, kind }) => plot_report(&cli, report, *kind).map(|_| ExitCode::SUCCESS),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })
}

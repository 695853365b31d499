//! Command-line driver: load a JSON scenario, run one of the four study
//! kinds, write CSV artifacts.
//!
//! Exit codes: 0 success, 2 scenario/validation error, 3 numerical failure.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use oqctl_core::scenario::{
    run_ga, run_landscape, run_propagate, run_theorem1, Scenario,
};
use oqctl_core::Error;

#[derive(Parser)]
#[command(name = "oqctl", version, about = "Open-quantum-system control studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Parser)]
struct CommonArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for CSV artifacts (created if absent).
    #[arg(long)]
    out: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the scenario once and write the trajectory.
    Propagate(CommonArgs),
    /// Optimize the environment distribution with the genetic algorithm.
    Ga(CommonArgs),
    /// Scan the kinematic control landscape.
    Landscape(CommonArgs),
    /// Verify the all-to-one steering channel for the target state.
    Theorem1(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&CommonArgs, fn(&Scenario, &Path, bool) -> oqctl_core::Result<()>) =
        match &cli.command {
            Command::Propagate(a) => (a, cmd_propagate),
            Command::Ga(a) => (a, cmd_ga),
            Command::Landscape(a) => (a, cmd_landscape),
            Command::Theorem1(a) => (a, cmd_theorem1),
        };
    match execute(args, run) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn execute(
    args: &CommonArgs,
    run: fn(&Scenario, &Path, bool) -> oqctl_core::Result<()>,
) -> oqctl_core::Result<()> {
    let mut scenario = Scenario::from_path(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario = scenario.with_seed(seed);
    }
    fs::create_dir_all(&args.out).map_err(io_err)?;
    run(&scenario, &args.out, args.quiet)
}

fn io_err(e: std::io::Error) -> Error {
    Error::ScenarioParse(format!("io error: {e}"))
}

/// Full-precision float formatting so replays are byte-identical.
fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> oqctl_core::Result<()> {
    let mut f = fs::File::create(path).map_err(io_err)?;
    writeln!(f, "{header}").map_err(io_err)?;
    for row in rows {
        writeln!(f, "{}", row.join(",")).map_err(io_err)?;
    }
    Ok(())
}

fn trajectory_rows(traj: &oqctl_core::propagator::Trajectory) -> (String, Vec<Vec<String>>) {
    let n = traj.states[0].dim();
    let mut header = String::from("t");
    for i in 0..n {
        header.push_str(&format!(",p{i}"));
    }
    let rows = traj
        .times
        .iter()
        .zip(traj.states.iter())
        .map(|(t, s)| {
            let mut row = vec![fmt(*t)];
            row.extend(s.populations().iter().map(|&p| fmt(p)));
            row
        })
        .collect();
    (header, rows)
}

fn cmd_propagate(sc: &Scenario, out: &Path, quiet: bool) -> oqctl_core::Result<()> {
    let res = run_propagate(sc)?;
    let (header, rows) = trajectory_rows(&res.trajectory);
    write_csv(&out.join("trajectory.csv"), &header, &rows)?;
    if !quiet {
        println!(
            "J1 = {:.12}  J2 = {:.12}  J = {:.12}",
            res.index.j1, res.index.j2, res.index.total
        );
        println!("wrote {}", out.join("trajectory.csv").display());
    }
    Ok(())
}

fn cmd_ga(sc: &Scenario, out: &Path, quiet: bool) -> oqctl_core::Result<()> {
    let res = run_ga(sc)?;
    let history_rows: Vec<Vec<String>> = res
        .history
        .best
        .iter()
        .zip(res.history.mean.iter())
        .enumerate()
        .map(|(g, (b, m))| vec![g.to_string(), fmt(*b), fmt(*m)])
        .collect();
    write_csv(&out.join("history.csv"), "generation,best,mean", &history_rows)?;
    let genome_rows: Vec<Vec<String>> = res
        .best_distribution
        .grid()
        .iter()
        .zip(res.best_distribution.density().iter())
        .map(|(k, nk)| vec![fmt(*k), fmt(*nk)])
        .collect();
    write_csv(&out.join("best_genome.csv"), "k,n", &genome_rows)?;
    let (header, rows) = trajectory_rows(&res.trajectory);
    write_csv(&out.join("trajectory.csv"), &header, &rows)?;
    if !quiet {
        println!(
            "best fitness {:.8} after {} recorded generations",
            res.best_fitness,
            res.history.best.len()
        );
        println!("wrote history.csv, best_genome.csv, trajectory.csv in {}", out.display());
    }
    Ok(())
}

fn cmd_landscape(sc: &Scenario, out: &Path, quiet: bool) -> oqctl_core::Result<()> {
    let res = run_landscape(sc)?;
    let rows: Vec<Vec<String>> = res
        .reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                i.to_string(),
                r.classification.label().to_string(),
                r.iterations.to_string(),
                fmt(r.value),
                fmt(r.gradient_norm),
                if r.converged { "1" } else { "0" }.to_string(),
            ]
        })
        .collect();
    write_csv(
        &out.join("scan.csv"),
        "run,classification,iterations,value,gradient_norm,converged",
        &rows,
    )?;
    let cluster_rows: Vec<Vec<String>> = res
        .clusters
        .iter()
        .map(|(v, c)| vec![fmt(*v), c.to_string()])
        .collect();
    write_csv(&out.join("clusters.csv"), "value,count", &cluster_rows)?;
    if !quiet {
        println!("stationary value clusters:");
        for (v, c) in &res.clusters {
            println!("  {v:.6}  ({c} runs)");
        }
        println!("wrote scan.csv, clusters.csv in {}", out.display());
    }
    Ok(())
}

fn cmd_theorem1(sc: &Scenario, out: &Path, quiet: bool) -> oqctl_core::Result<()> {
    let res = run_theorem1(sc)?;
    write_csv(
        &out.join("theorem1.csv"),
        "samples,lambda,max_deviation",
        &[vec![
            res.samples.to_string(),
            res.lambda.to_string(),
            fmt(res.max_deviation),
        ]],
    )?;
    if !quiet {
        println!(
            "steering channel with {} operators: max deviation {:.3e} over {} random states",
            res.lambda, res.max_deviation, res.samples
        );
        println!("wrote {}", out.join("theorem1.csv").display());
    }
    Ok(())
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thermstack::analysis::ThermalReport;
use thermstack::io::{self, ReportFormat};
use thermstack::model::validate_floorplan;
use thermstack::pipeline::simulate;
use thermstack::placement::{optimize_anneal, optimize_exhaustive, Placement, PlacementProblem, Schedule};
use thermstack::scenarios::{reference_tables, scenario, ScenarioId};
use thermstack::{Error, GridSpec, SolveOptions};

/// Steady-state thermal simulator for single-die and stacked floorplans.
#[derive(Debug, Parser)]
#[command(name = "thermstack", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check every layer floorplan of a stack config and list violations.
    Validate {
        /// Stack config file.
        #[arg(long)]
        stack: PathBuf,
    },
    /// Solve a stack config and write a report and per-layer maps.
    Solve {
        /// Stack config file.
        #[arg(long)]
        stack: PathBuf,
        /// Lateral grid as NXxNY; overrides the config.
        #[arg(long)]
        grid: Option<GridSpec>,
        /// Report path; `.csv` writes CSV, anything else JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Directory for one PPM map per layer.
        #[arg(long)]
        map_dir: Option<PathBuf>,
    },
    /// Run a built-in experiment and compare with its reference temperatures.
    Scenario {
        /// Scenario id, e.g. 2d-corners or 3d-direct.
        #[arg(long)]
        id: ScenarioId,
        /// Lateral grid as NXxNY (default 64x64).
        #[arg(long)]
        grid: Option<GridSpec>,
        /// Report path; `.csv` writes CSV, anything else JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Directory for one PPM map per layer.
        #[arg(long)]
        map_dir: Option<PathBuf>,
    },
    /// Run every scenario and print the comparison with the reference temperatures.
    Tables {
        /// Lateral grid as NXxNY (default 64x64).
        #[arg(long)]
        grid: Option<GridSpec>,
        /// Also write the comparison as JSON to this path.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Search block placements for the lowest peak temperature.
    Optimize {
        /// Problem file: stack config plus an [optimize] section.
        #[arg(long)]
        problem: PathBuf,
        /// Search method; overrides the problem file.
        #[arg(long, value_enum)]
        method: Option<Method>,
        /// Annealing seed; overrides the problem file.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for the best floorplans and the trace.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Re-render a layer map from a saved JSON report.
    Render {
        /// JSON report written by `solve` or `scenario`.
        #[arg(long)]
        report: PathBuf,
        /// Layer index, bottom layer 0.
        #[arg(long)]
        layer: usize,
        /// Output PPM path.
        #[arg(long)]
        out: PathBuf,
        /// Temperature mapped to the coldest colour (default: map minimum).
        #[arg(long)]
        t_min: Option<f64>,
        /// Temperature mapped to the hottest colour (default: map maximum).
        #[arg(long)]
        t_max: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Exhaustive,
    Anneal,
}

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_SOLVER: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = std::env::var("THERMSTACK_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NotConverged { .. } => ExitCode::from(EXIT_SOLVER),
                _ => ExitCode::from(EXIT_INPUT),
            }
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> thermstack::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, bytes).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn save_outputs(report: &ThermalReport, path: Option<&Path>, map_dir: Option<&Path>) -> thermstack::Result<()> {
    if let Some(path) = path {
        let text = io::write_report(report, ReportFormat::from_path(path))?;
        write_file(path, text.as_bytes())?;
    }
    if let Some(dir) = map_dir {
        for (i, layer) in report.field.iter().enumerate() {
            write_file(&dir.join(format!("layer{i}.ppm")), &io::render_ppm_auto(&layer.map)?)?;
        }
    }
    Ok(())
}

fn print_summary(report: &ThermalReport) {
    println!("grid {}  unknowns {}  iterations {}", report.grid, report.solver.unknowns, report.solver.iterations);
    println!("peak   {:.2} K in {} at ({:.4}, {:.4}) m", report.peak.value_k, report.peak.layer, report.peak.x_m, report.peak.y_m);
    println!("lowest {:.2} K in {} at ({:.4}, {:.4}) m", report.lowest.value_k, report.lowest.layer, report.lowest.x_m, report.lowest.y_m);
    for l in &report.layers {
        print!("layer {:<12} min {:.2} max {:.2} avg {:.2}", l.name, l.min_k, l.max_k, l.avg_k);
        match &l.processors {
            Some(p) => println!("  processors max {:.2}", p.max_k),
            None => println!(),
        }
    }
}

fn run(command: Command) -> thermstack::Result<ExitCode> {
    match command {
        Command::Validate { stack } => {
            let (stack, _) = io::load_stack_config_unchecked(&stack)?;
            let mut count = 0;
            for layer in &stack.layers {
                for v in validate_floorplan(&layer.floorplan) {
                    println!("layer {}: {v}", layer.name);
                    count += 1;
                }
            }
            if count == 0 {
                if let Err(e) = stack.validate() {
                    println!("{e}");
                    count += 1;
                }
            }
            if count == 0 {
                println!("ok: {} layers, no violations", stack.layers.len());
                Ok(ExitCode::SUCCESS)
            } else {
                println!("{count} violation(s)");
                Ok(ExitCode::from(EXIT_INPUT))
            }
        }
        Command::Solve { stack, grid, report, map_dir } => {
            let (stack, config_grid) = io::load_stack_config(&stack)?;
            let sim = simulate(&stack, grid.unwrap_or(config_grid), SolveOptions::default())?;
            let r = sim.report(None)?;
            print_summary(&r);
            save_outputs(&r, report.as_deref(), map_dir.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Scenario { id, grid, report, map_dir } => {
            let r = scenario(id)?.run(grid)?;
            println!("scenario {id}");
            print_summary(&r);
            println!("{:<20}{:>12}{:>12}{:>10}  source", "observable", "reference_K", "computed_K", "delta_K");
            for c in &r.references {
                println!(
                    "{:<20}{:>12.2}{:>12.2}{:>+10.2}  {}{}",
                    c.observable,
                    c.reference_k,
                    c.computed_k,
                    c.delta_k,
                    c.source,
                    if c.note.is_some() { "  [table inconsistency]" } else { "" }
                );
            }
            save_outputs(&r, report.as_deref(), map_dir.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Tables { grid, json } => {
            let doc = reference_tables(grid)?;
            print!("{}", doc.to_text());
            if let Some(path) = json {
                write_file(&path, doc.to_json()?.as_bytes())?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Optimize { problem, method, seed, out_dir } => {
            let (stack, grid, opt) = io::load_problem_config(&problem)?;
            let problem = PlacementProblem::from_config(&stack, grid, &opt)?;
            let method = match (method, opt.method.as_deref()) {
                (Some(m), _) => m,
                (None, None | Some("exhaustive")) => Method::Exhaustive,
                (None, Some("anneal")) => Method::Anneal,
                (None, Some(other)) => {
                    return Err(Error::Config { context: "[optimize]".into(), message: format!("unknown method `{other}`") });
                }
            };
            let (best, objective, trace) = match method {
                Method::Exhaustive => {
                    let r = optimize_exhaustive(&problem)?;
                    let mut csv = String::from("index,placement_hash,objective_K\n");
                    for (i, e) in r.evaluated.iter().enumerate() {
                        csv.push_str(&format!(
                            "{i},{:016x},{}\n",
                            thermstack::placement::placement_hash(&e.placement),
                            e.objective_k
                        ));
                    }
                    println!("evaluated {} symmetry-distinct placements", r.evaluated.len());
                    (r.best, r.best_objective_k, csv)
                }
                Method::Anneal => {
                    let d = Schedule::default();
                    let schedule = Schedule {
                        t0_k: opt.t0_k.unwrap_or(d.t0_k),
                        cooling: opt.cooling.unwrap_or(d.cooling),
                        epochs: opt.epochs.unwrap_or(d.epochs),
                        moves_per_epoch: opt.moves_per_epoch.unwrap_or(d.moves_per_epoch),
                    };
                    let r = optimize_anneal(&problem, seed.or(opt.seed).unwrap_or(0), schedule)?;
                    println!("annealing evaluated {} proposals", r.trace.entries.len());
                    (r.best, r.best_objective_k, r.trace.to_csv())
                }
            };
            println!("best peak {objective:.4} K");
            write_outputs(&problem, &best, &out_dir)?;
            write_file(&out_dir.join("trace.csv"), trace.as_bytes())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Render { report, layer, out, t_min, t_max } => {
            let text = fs::read_to_string(&report).map_err(|source| Error::Io { path: report.clone(), source })?;
            let r = io::read_report(&text)?;
            let map = &r
                .field
                .get(layer)
                .ok_or_else(|| Error::OutOfRange(format!("layer {layer} of {}", r.field.len())))?
                .map;
            let bytes = match (t_min, t_max) {
                (None, None) => io::render_ppm_auto(map)?,
                (lo, hi) => {
                    let (a, b) = map.range().ok_or(Error::EmptyField)?;
                    io::render_ppm(map, lo.unwrap_or(a), hi.unwrap_or(b))?
                }
            };
            write_file(&out, &bytes)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn write_outputs(problem: &PlacementProblem, best: &Placement, dir: &Path) -> thermstack::Result<()> {
    let stack = problem.stack_for(best)?;
    for &l in &problem.layers {
        let layer = &stack.layers[l];
        println!("layer {}:", layer.name);
        for b in &layer.floorplan.blocks {
            println!("  {} at ({:.4}, {:.4}) m", b.name, b.x, b.y);
        }
        write_file(&dir.join(format!("{}.flp", layer.name)), io::write_floorplan(&layer.floorplan.blocks).as_bytes())?;
        let powers = thermstack::PowerMap::from_floorplan(&layer.floorplan);
        write_file(&dir.join(format!("{}.ptrace", layer.name)), io::write_power(&powers).as_bytes())?;
    }
    Ok(())
}

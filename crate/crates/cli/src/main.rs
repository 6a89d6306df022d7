mod output;
mod plot;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use nads::dynamics::{self, coherence_diagnostics, CoherenceDiagnostics};
use nads::{export, measurement, IntegrationMode, PopulationSeries, Scenario, StateVector};

use output::Outputs;

#[derive(Parser, Debug)]
#[command(name = "nads", version, about = "Nonadiabatic dressed states of a driven two-level system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct ScenarioArg {
    /// Scenario file, or the name of a built-in scenario (grischkowsky, zero-field)
    #[arg(long)]
    scenario: String,
}

#[derive(clap::Args, Debug)]
struct OutArg {
    /// Output directory
    #[arg(long, env = "NADS_OUTPUT_DIR", default_value = "nads-out")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the Schrödinger equation and project onto the dressed states
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// rotating-frame or full-field
        #[arg(long, default_value = "rotating-frame")]
        mode: IntegrationMode,
        /// Integrator tolerance
        #[arg(long, default_value_t = dynamics::DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Evaluate the adiabatic condition for every order up to --n-max
    Check {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Highest derivative order (defaults to the scenario's value)
        #[arg(long)]
        n_max: Option<usize>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Tabulate the dressed-state quantities and components
    Dressed {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run the nonadiabatic-loop ensemble and collapse at field-off
    Collapse {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Number of trajectories (defaults to the scenario's value)
        #[arg(long)]
        trajectories: Option<usize>,
        /// Base seed (defaults to the scenario's value)
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Line plot of CSV columns as an SVG file
    Plot {
        /// Input CSV with a header row
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated y columns
        #[arg(long, value_delimiter = ',', required = true)]
        columns: Vec<String>,
        /// x column (defaults to the first column)
        #[arg(long)]
        x: Option<String>,
        /// Output SVG file
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_scenario(arg: &ScenarioArg) -> Result<Scenario> {
    let path = Path::new(&arg.scenario);
    if path.is_file() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return text.parse::<Scenario>().with_context(|| format!("parsing {}", path.display()));
    }
    Scenario::builtin(&arg.scenario).ok_or_else(|| {
        anyhow!(
            "'{}' is neither a scenario file nor a built-in scenario ({})",
            arg.scenario,
            nads::scenario::BUILTIN_NAMES.join(", ")
        )
    })
}

fn diagnostics_lines(label: &str, d: &CoherenceDiagnostics) -> String {
    format!(
        "{label}: r_coherent = {:.6}, r_incoherent = {:.6}, peak_ratio = {}\n",
        d.r_coherent,
        d.r_incoherent,
        if d.peak_ratio.is_infinite() { "inf".to_string() } else { format!("{:.6}", d.peak_ratio) }
    )
}

fn simulate(scenario: &Scenario, mode: IntegrationMode, tolerance: f64, out: &mut Outputs) -> Result<String> {
    let model = scenario.model();
    let grid = scenario.grid_points();
    let trajectory = dynamics::integrate(
        &scenario.system,
        &scenario.pulse,
        &grid,
        mode,
        tolerance,
        StateVector::ground(grid[0]),
    )?;
    let components = model.construct(&grid)?;
    let series = PopulationSeries::from_trajectory(&scenario.pulse, &trajectory, &components)?;
    let mut summary = format!(
        "scenario: {}\nmode: {}\ncomponent populations: projections of the {} trajectory onto the dressed states\n",
        scenario.name,
        mode.name(),
        mode.name()
    );
    summary += &diagnostics_lines("coherent dynamics", &coherence_diagnostics(&series));
    let last = trajectory.last().expect("grid has at least two points");
    summary += &format!("final p_g = {:.9}, p_e = {:.9}\n", last.c_g.norm_sqr(), last.c_e.norm_sqr());

    let mixture = match &scenario.mc {
        Some(mc) => {
            let occupancy = measurement::mean_occupancy(mc, &model)?;
            let series = PopulationSeries::from_occupancy(&model, &grid, &occupancy)?;
            summary += &diagnostics_lines("with incoherent transfer", &coherence_diagnostics(&series));
            Some(series)
        }
        None => None,
    };

    out.write("trajectory.csv", |w| export::write_trajectory(w, &trajectory))?;
    out.write("populations.csv", |w| export::write_populations(w, &series))?;
    if let Some(m) = &mixture {
        out.write("populations_incoherent.csv", |w| export::write_populations(w, m))?;
    }
    out.write("summary.txt", |w| w.write_all(summary.as_bytes()))?;
    Ok(summary)
}

fn check(scenario: &Scenario, n_max: Option<usize>, out: &mut Outputs) -> Result<String> {
    let mut s = scenario.clone();
    if let Some(n) = n_max {
        s.adiabaticity.n_max = n;
    }
    let report = s.check()?;
    let table = format!("{report}\n");
    out.write("adiabaticity.csv", |w| w.write_all(report.to_csv().as_bytes()))?;
    out.write("adiabaticity.txt", |w| w.write_all(table.as_bytes()))?;
    Ok(table)
}

fn dressed(scenario: &Scenario, out: &mut Outputs) -> Result<String> {
    let model = scenario.model();
    let grid = scenario.grid_points();
    let quantities = model.quantities_series(&grid)?;
    let components = model.construct(&grid)?;
    out.write("nads_quantities.csv", |w| export::write_quantities(w, &quantities))?;
    out.write("nads_components.csv", |w| export::write_components(w, &components))?;
    Ok(format!("{} dressed-state samples written\n", grid.len()))
}

fn collapse(scenario: &Scenario, trajectories: Option<usize>, seed: Option<u64>, out: &mut Outputs) -> Result<String> {
    let mut config = scenario
        .mc
        .clone()
        .ok_or_else(|| anyhow!("scenario '{}' has no [mc] section", scenario.name))?;
    if let Some(k) = trajectories {
        config.trajectories = k;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    let stats = measurement::ensemble(&config, &scenario.model())?;
    let summary = format!(
        "scenario: {}\nrate model: {}\nseed: {}\n{stats}\n",
        scenario.name,
        config.rate_model.name(),
        config.seed
    );
    out.write("ensemble.csv", |w| export::write_ensemble(w, &stats))?;
    out.write("dwell_histogram.csv", |w| export::write_histogram(w, &stats.histogram))?;
    out.write("ensemble_summary.txt", |w| w.write_all(summary.as_bytes()))?;
    Ok(summary)
}

fn run(cli: Cli) -> Result<()> {
    let (out_dir, plot_file) = match &cli.command {
        Command::Simulate { out, .. }
        | Command::Check { out, .. }
        | Command::Dressed { out, .. }
        | Command::Collapse { out, .. } => (Some(out.out.clone()), None),
        Command::Plot { out, .. } => (None, Some(out.clone())),
    };
    let mut outputs = match &out_dir {
        Some(dir) => Outputs::in_dir(dir)?,
        None => Outputs::files(),
    };
    let result = (|| -> Result<String> {
        match &cli.command {
            Command::Simulate { scenario, mode, tolerance, .. } => {
                simulate(&load_scenario(scenario)?, *mode, *tolerance, &mut outputs)
            }
            Command::Check { scenario, n_max, .. } => check(&load_scenario(scenario)?, *n_max, &mut outputs),
            Command::Dressed { scenario, .. } => dressed(&load_scenario(scenario)?, &mut outputs),
            Command::Collapse { scenario, trajectories, seed, .. } => {
                collapse(&load_scenario(scenario)?, *trajectories, *seed, &mut outputs)
            }
            Command::Plot { input, columns, x, .. } => {
                let path = plot_file.as_ref().expect("plot has an output file");
                if path.extension().and_then(|e| e.to_str()) != Some("svg") {
                    bail!("plot output must be an .svg file");
                }
                let data = plot::read_columns(input, x.as_deref(), columns)?;
                let svg = plot::render(&data, &input.display().to_string());
                outputs.write_path(path, |w| w.write_all(svg.as_bytes()))?;
                Ok(format!("wrote {}\n", path.display()))
            }
        }
    })();
    match result {
        Ok(text) => {
            print!("{text}");
            Ok(())
        }
        Err(e) => {
            outputs.discard();
            Err(e)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let reason = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {reason}");
            ExitCode::FAILURE
        }
    }
}

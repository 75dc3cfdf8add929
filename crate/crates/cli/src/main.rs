use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spectral_bounds::bounds::LemmaProfile;
use spectral_bounds::experiment::{
    analytic_bounds, analytic_csv, compute_spectrum, dirichlet_csv, dirichlet_table, eta_table, lemma_table, run,
    write_report, write_spectrum, ExperimentConfig,
};
use spectral_bounds::Error;

const CONFIG_DEFAULTS: &str = "\
Config keys and defaults (TOML; see configs/schema.toml):
  seed = 0
  [domain]       kind = \"ball\" (dimension, radius = 1) | \"ellipsoid\" (semi_axes) | \"box\" (sides)
  [kernel]       type = \"riesz\" (alpha) | \"helmholtz\" (kappa) | \"custom\" (alpha, amplitude, symbol_f, symbol_g?)
  [mesh]         target_cells = 2000, self_cell = \"pyramid\" | \"equal-volume-ball\"
  [lambda_grid]  points = 30, lower_fraction = 0.005, upper_fraction = 0.5, min/max unset
  [bounds]       upper = true, lower = true, counting = true
  [overlap]      method = \"exact\" | \"monte-carlo\", samples = 1000000, radii = 8
  [tolerances]   dominance_relative = 0
  [output]       dir = \"out\"

Exit status: 2 config or usage error, 3 numerical failure, 4 bound violated under --assert-bounds.";

#[derive(Parser)]
#[command(name = "spectral-bounds", version, about = "Riesz-mean bounds for integral operators on convex domains")]
#[command(after_help = CONFIG_DEFAULTS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mesh, assemble and diagonalise; writes spectrum.csv and spectrum.json.
    Spectrum(ConfigArgs),
    /// Analytic bounds on lambda_grid.min..max; writes bounds.csv.
    Bounds(ConfigArgs),
    /// Full pipeline; writes report.csv, report.json and spectrum.csv.
    Run(RunArgs),
    /// Numeric integral, two-term expansion and roots of a lemma profile.
    Lemma(LemmaArgs),
    /// Overlap volume against its first-order expansion; writes eta.csv.
    Eta(ConfigArgs),
    /// Dirichlet box eigenvalue counts against counting bounds.
    Dirichlet(DirichletArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to output.dir of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides lambda_grid.points.
    #[arg(long)]
    lambda_points: Option<usize>,
    /// Overrides mesh.target_cells.
    #[arg(long)]
    mesh_cells: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// Exit with status 4 when an empirical value exceeds its bound.
    #[arg(long)]
    assert_bounds: bool,
}

#[derive(Args)]
struct LemmaArgs {
    #[arg(long, allow_negative_numbers = true)]
    c1: f64,
    #[arg(long, allow_negative_numbers = true)]
    c2: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    dimension: usize,
    /// Levels mu, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 1e-3, 1e-4, 1e-5])]
    mu: Vec<f64>,
    /// Write lemma.csv here instead of printing to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DirichletArgs {
    /// Box side lengths, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.0, 1.0])]
    sides: Vec<f64>,
    /// Defaults to the first eigenvalue.
    #[arg(long)]
    nu_min: Option<f64>,
    #[arg(long, default_value_t = 500.0)]
    nu_max: f64,
    #[arg(long, default_value_t = 50)]
    points: usize,
    /// Write dirichlet.csv here instead of printing to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => 2,
            _ => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn config_error(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        message: e.to_string(),
    }
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig, Failure> {
        let text = std::fs::read_to_string(&self.config)
            .map_err(|e| config_error(format!("{}: {e}", self.config.display())))?;
        let mut config = ExperimentConfig::from_toml(&text).map_err(config_error)?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(points) = self.lambda_points {
            config.lambda_grid.points = points;
        }
        if let Some(cells) = self.mesh_cells {
            config.mesh.target_cells = cells;
        }
        config.validate().map_err(config_error)?;
        Ok(config)
    }

    // --out is not folded into the config so reports stay identical across
    // output locations
    fn out_dir(&self, config: &ExperimentConfig) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(&config.output.dir))
    }
}

fn emit(out: Option<&Path>, name: &str, text: &str) -> Result<(), Failure> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(Error::from)?;
            std::fs::write(dir.join(name), text).map_err(Error::from)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Spectrum(args) => {
            let config = args.load()?;
            let (_, _, spectrum) = compute_spectrum(&config)?;
            let dir = args.out_dir(&config);
            write_spectrum(&dir, &spectrum)?;
            eprintln!(
                "{} eigenvalues ({} retained), |lambda|max = {:e} -> {}",
                spectrum.len(),
                spectrum.retained,
                spectrum.max_abs(),
                dir.display()
            );
        }
        Command::Bounds(args) => {
            let config = args.load()?;
            let domain = config.domain.build()?;
            let kernel = config.kernel.build(domain.dimension)?;
            let grid = config.lambda_grid.values(None)?;
            let (rows, _) = analytic_bounds(&config, &domain, &kernel, &grid)?;
            emit(Some(&args.out_dir(&config)), "bounds.csv", &analytic_csv(&rows))?;
        }
        Command::Run(args) => {
            let config = args.common.load()?;
            let output = run(&config)?;
            let dir = args.common.out_dir(&config);
            write_report(&dir, &output)?;
            let dominance = &output.curve.dominance;
            eprintln!(
                "{} lambda points, {} upper and {} counting violations -> {}",
                output.curve.rows.len(),
                dominance.upper_violations.len(),
                dominance.counting_violations.len(),
                dir.display()
            );
            if args.assert_bounds && !dominance.holds() {
                return Err(Failure {
                    code: 4,
                    message: format!(
                        "bounds violated at lambda = {:?} (upper), {:?} (counting)",
                        dominance.upper_violations, dominance.counting_violations
                    ),
                });
            }
        }
        Command::Lemma(args) => {
            let profile = LemmaProfile::new(args.c1, args.c2, args.alpha, args.dimension).map_err(config_error)?;
            let table = lemma_table(&profile, &args.mu)?;
            emit(args.out.as_deref(), "lemma.csv", &table.to_csv())?;
        }
        Command::Eta(args) => {
            let config = args.load()?;
            let domain = config.domain.build()?;
            let table = eta_table(&domain, &config.overlap, config.seed)?;
            emit(Some(&args.out_dir(&config)), "eta.csv", &table.to_csv())?;
        }
        Command::Dirichlet(args) => {
            let first: f64 = args.sides.iter().map(|l| (std::f64::consts::PI / l).powi(2)).sum();
            let rows = dirichlet_table(&args.sides, args.nu_min.unwrap_or(first), args.nu_max, args.points)
                .map_err(|e| match e {
                    Error::InvalidParameter(_) => config_error(e),
                    other => other.into(),
                })?;
            emit(args.out.as_deref(), "dirichlet.csv", &dirichlet_csv(&rows))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

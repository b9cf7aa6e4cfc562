use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use reach_core::defect::ScaleGrid;
use reach_core::io::{format_number, read_cloud, write_cloud, write_estimate, write_profile};
use reach_core::rates::{run_rates, SEED_RULE};
use reach_core::synth::DEFAULT_NECK_SMOOTHING;
use reach_core::{
    defect_profile, reach, rmax_from_density, sample, DefectConfig, ManifoldSpec, ModelParams,
    PointCloud,
};

/// Reach estimation from point clouds through the convexity defect function.
#[derive(Parser)]
#[command(name = "reach", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic manifold and write the cloud as CSV.
    Sample {
        #[command(flatten)]
        spec: SpecArgs,
        /// Number of points.
        #[arg(short = 'n', default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; standard output when absent.
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Compute the defect profile of a cloud and write it as a `t,h` table.
    Defect {
        /// Cloud CSV.
        input: PathBuf,
        #[command(flatten)]
        defect: DefectArgs,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Estimate the reach of a cloud; prints r_hat and optionally writes the full JSON.
    Reach {
        input: PathBuf,
        /// Intrinsic dimension.
        #[arg(long)]
        d: Option<usize>,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        defect: DefectArgs,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Repeat sample-then-estimate over a grid of sizes and fit the error slope.
    Rates {
        #[command(flatten)]
        spec: SpecArgs,
        /// Comma-separated sample sizes, at least three.
        #[arg(long = "n-grid", value_delimiter = ',', required = true)]
        n_grid: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        defect: DefectArgs,
        /// Report CSV; the summary JSON is written next to it with a `.json` extension.
        #[arg(short = 'o')]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Manifold {
    Circle,
    Sphere,
    Torus,
    Bumpsphere,
    Segments,
    Dumbbell,
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long, value_enum)]
    manifold: Manifold,
    /// Radius of a circle, sphere or bumped sphere.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Torus tube radius.
    #[arg(long)]
    minor: Option<f64>,
    /// Torus centre-line radius.
    #[arg(long)]
    major: Option<f64>,
    /// Bump width.
    #[arg(long)]
    gamma: Option<f64>,
    /// Bump order.
    #[arg(long, default_value_t = 3)]
    order: u32,
    /// Half-gap of the bottleneck or dumbbell neck.
    #[arg(long)]
    neck: Option<f64>,
    /// Dumbbell lobe radius.
    #[arg(long)]
    lobe: Option<f64>,
    /// Radius of the arcs forming the dumbbell neck.
    #[arg(long = "neck-radius", default_value_t = DEFAULT_NECK_SMOOTHING)]
    neck_radius: f64,
    /// Segment length of the two-segment bottleneck.
    #[arg(long, default_value_t = 1.0)]
    length: f64,
    /// Intrinsic dimension of a sphere or bumped sphere.
    #[arg(long)]
    d: Option<usize>,
}

impl SpecArgs {
    fn spec(&self) -> Result<ManifoldSpec> {
        let need = |v: Option<f64>, flag: &str| {
            v.with_context(|| format!("--{flag} is required for this manifold"))
                .map_err(usage)
        };
        let spec = match self.manifold {
            Manifold::Circle => ManifoldSpec::Circle {
                radius: self.radius,
            },
            Manifold::Sphere => ManifoldSpec::Sphere {
                d: self.d.unwrap_or(2),
                radius: self.radius,
            },
            Manifold::Torus => ManifoldSpec::Torus {
                minor: need(self.minor, "minor")?,
                major: need(self.major, "major")?,
            },
            Manifold::Bumpsphere => ManifoldSpec::BumpSphere {
                d: self.d.unwrap_or(1),
                radius: self.radius,
                gamma: need(self.gamma, "gamma")?,
                k: self.order,
            },
            Manifold::Segments => ManifoldSpec::TwoSegmentBottleneck {
                length: self.length,
                half_gap: need(self.neck, "neck")?,
            },
            Manifold::Dumbbell => ManifoldSpec::Dumbbell {
                lobe: need(self.lobe, "lobe")?,
                neck: need(self.neck, "neck")?,
                smoothing: self.neck_radius,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct DefectArgs {
    /// 2 for segments only, 3 to add sampled triangles.
    #[arg(long = "simplex-order", default_value_t = 2)]
    simplex_order: u8,
    /// Largest scale of the grid; half the cloud diameter when absent.
    #[arg(long = "max-scale")]
    max_scale: Option<f64>,
    /// Number of positive scales in the uniform grid.
    #[arg(long = "grid-size", default_value_t = 200)]
    grid_size: usize,
    /// Barycentric subdivisions per triangle edge at order 3.
    #[arg(long = "triple-grid", default_value_t = 15)]
    triple_grid: usize,
}

impl DefectArgs {
    fn config(&self) -> Result<DefectConfig> {
        let config = DefectConfig {
            order: self.simplex_order,
            triple_grid: self.triple_grid,
            max_scale: self.max_scale,
            grid: ScaleGrid::Uniform {
                count: self.grid_size,
            },
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct ParamArgs {
    /// Cap on every estimate; derived from --fmin and --d when absent.
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(long)]
    rmin: Option<f64>,
    /// Density lower bound.
    #[arg(long)]
    fmin: Option<f64>,
    /// Regularity order.
    #[arg(long, default_value_t = 3)]
    k: u32,
    /// Hausdorff error of the cloud; estimated from the cloud when absent.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Length in which epsilon is expressed before taking its fractional power.
    #[arg(long = "length-unit", default_value_t = 1.0)]
    length_unit: f64,
}

impl ParamArgs {
    /// `d` is the intrinsic dimension if given on the command line, else `default_d`.
    fn params(&self, d: Option<usize>, default_d: usize) -> Result<ModelParams> {
        let r_max = match (self.rmax, self.fmin, d) {
            (Some(r), _, _) => r,
            (None, Some(f), Some(d)) => rmax_from_density(f, d)?,
            _ => {
                return Err(usage(anyhow::anyhow!(
                    "an upper cap on the reach is required: pass --rmax, or --fmin together with --d"
                )))
            }
        };
        let params = ModelParams {
            d: d.unwrap_or(default_d),
            k: self.k,
            r_min: self.rmin,
            r_max,
            epsilon: self.epsilon,
            f_min: self.fmin,
            f_max: None,
            length_unit: self.length_unit,
        };
        params.validate()?;
        Ok(params)
    }
}

/// Marks an error as caused by the caller's input.
#[derive(Debug)]
struct UsageError(anyhow::Error);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(e: anyhow::Error) -> anyhow::Error {
    anyhow::Error::new(UsageError(e))
}

fn is_usage(e: &anyhow::Error) -> bool {
    use reach_core::Error as E;
    e.chain().any(|c| {
        c.is::<UsageError>()
            || matches!(
                c.downcast_ref::<E>(),
                Some(E::InvalidInput(_) | E::DimensionMismatch { .. } | E::Config(_) | E::Parse { .. })
            )
    })
}

fn load_cloud(path: &Path) -> Result<PointCloud> {
    let file = File::open(path)
        .with_context(|| format!("cannot open {}", path.display()))
        .map_err(usage)?;
    let cloud = read_cloud(BufReader::new(file))
        .with_context(|| format!("cannot read a cloud from {}", path.display()))?;
    Ok(cloud)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => f(&mut create(p)?),
        None => f(&mut io::stdout().lock()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sample {
            spec,
            n,
            seed,
            output,
        } => {
            let spec = spec.spec()?;
            let cloud = sample(&spec, n, seed)?;
            let comments = vec![
                format!("spec: {}", spec.to_json()),
                format!("seed: {seed}"),
                format!("n: {n}"),
            ];
            with_output(output.as_deref(), |w| Ok(write_cloud(w, &cloud, &comments)?))
        }
        Command::Defect {
            input,
            defect,
            output,
        } => {
            let config = defect.config()?;
            let cloud = load_cloud(&input)?;
            let profile = defect_profile(&cloud, &config)?;
            with_output(output.as_deref(), |w| Ok(write_profile(w, &profile)?))
        }
        Command::Reach {
            input,
            d,
            params,
            defect,
            output,
        } => {
            let config = defect.config()?;
            let params = params.params(d, 1)?;
            let cloud = load_cloud(&input)?;
            let estimate = reach(&cloud, &params, &config)?;
            if let Some(path) = output {
                write_estimate(create(&path)?, &estimate)?;
            }
            println!("{}", format_number(estimate.r_hat));
            Ok(())
        }
        Command::Rates {
            spec,
            n_grid,
            trials,
            seed,
            params,
            defect,
            output,
        } => {
            let spec_d = spec.d;
            let spec = spec.spec()?;
            let config = defect.config()?;
            let params = params.params(spec_d.or(Some(spec.intrinsic_dim())), 1)?;
            let summary = output.with_extension("json");
            if summary == output {
                return Err(usage(anyhow::anyhow!("the report path must not end in .json")));
            }
            let report = run_rates(&spec, &n_grid, trials, seed, &params, &config)?;
            report.write_csv(create(&output)?)?;
            report.write_summary(create(&summary)?)?;
            log::info!("seeds: {SEED_RULE}");
            match report.summary.slope {
                Some(s) => println!("slope {}", format_number(s)),
                None => println!("slope undefined"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_usage(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

//! `flab` — command-line harness for the complex Finsler verification
//! laboratory.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use flab_core::geodesic::{integrate_geodesic, GeodesicControl};
use flab_core::harness;
use flab_core::jet::table::{eval_partials, EvalPoint};
use flab_core::measure::VolumeMeasure;
use flab_core::metric::{resolve_metric, MetricSpec, CATALOG};
use flab_core::report::{emit_to, EmitFormat, Report};
use flab_core::sampling::SamplingConfig;

#[derive(Parser)]
#[command(
    name = "flab",
    version,
    about = "Verification laboratory for strongly convex complex Finsler metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct MetricArg {
    /// Catalog name or path to a metric JSON file.
    #[arg(long)]
    metric: String,
    /// Complex dimension for catalog families.
    #[arg(long)]
    n: Option<usize>,
}

impl MetricArg {
    fn resolve(&self) -> anyhow::Result<MetricSpec> {
        Ok(resolve_metric(&self.metric, self.n)?)
    }
}

#[derive(Args, Clone)]
struct OutputArg {
    /// Write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, default_value = "json")]
    format: EmitFormatArg,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum EmitFormatArg {
    Json,
    Csv,
    Plotdata,
}

impl From<EmitFormatArg> for EmitFormat {
    fn from(v: EmitFormatArg) -> EmitFormat {
        match v {
            EmitFormatArg::Json => EmitFormat::Json,
            EmitFormatArg::Csv => EmitFormat::Csv,
            EmitFormatArg::Plotdata => EmitFormat::PlotData,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an identity suite over seeded sample points.
    Check {
        /// One of: homogeneity, j_invariance, kahler,
        /// spray_correspondence, parallelism, cross_engine.
        suite: String,
        #[command(flatten)]
        metric: MetricArg,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Override the pass tolerance (pass is then recomputed from the
        /// max residual alone).
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Integrate a unit-speed geodesic and export it as CSV.
    Geodesic {
        #[command(flatten)]
        metric: MetricArg,
        /// Initial chart point as a JSON array of 2n reals.
        #[arg(long)]
        from: String,
        /// Initial direction as a JSON array of 2n reals (normalized).
        #[arg(long)]
        dir: String,
        #[arg(long)]
        len: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Theorem-level comparison runs.
    Compare {
        #[command(subcommand)]
        which: CompareCommand,
    },
    /// Dump real and complex tensor sets at a point.
    Tensors {
        #[command(flatten)]
        metric: MetricArg,
        /// Evaluation point as JSON: {"x": [...], "y": [...]}.
        #[arg(long)]
        at: String,
        /// Also dump the raw derivative table.
        #[arg(long)]
        dump_jets: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in metric catalog.
    Catalog,
}

#[derive(Subcommand)]
enum CompareCommand {
    /// Hessian/Laplacian comparison bounds along radial geodesics.
    Laplacian {
        #[command(flatten)]
        metric: MetricArg,
        #[arg(long)]
        lambda: f64,
        /// Radii as a:b:k (k points from a to b).
        #[arg(long, default_value = "0.2:1.4:7")]
        radii: String,
        #[arg(long, default_value_t = 4)]
        directions: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Conjugate-point diameter bound for positive curvature.
    Diameter {
        #[command(flatten)]
        metric: MetricArg,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 50)]
        geodesics: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Geodesic ball volume ratios against the model space.
    Volume {
        #[command(flatten)]
        metric: MetricArg,
        /// Model curvature K (one of -1, 0, 1).
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value = "0.3:0.9:3")]
        radii: String,
        #[arg(long, default_value = "riemannian_det")]
        measure: String,
        /// Monte-Carlo direction samples.
        #[arg(long, default_value_t = 64)]
        directions: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        output: OutputArg,
    },
}

fn parse_radii(text: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(anyhow!("radii must be a:b:k, got `{text}`"));
    }
    let a: f64 = parts[0].parse()?;
    let b: f64 = parts[1].parse()?;
    let k: usize = parts[2].parse()?;
    if k == 0 || b < a {
        return Err(anyhow!("radii range must be increasing with k >= 1"));
    }
    if k == 1 {
        return Ok(vec![a]);
    }
    Ok((0..k)
        .map(|i| a + (b - a) * i as f64 / (k - 1) as f64)
        .collect())
}

fn parse_vec(text: &str) -> anyhow::Result<Vec<f64>> {
    serde_json::from_str(text).context("expected a JSON array of reals")
}

fn write_report(report: &Report, output: &OutputArg) -> anyhow::Result<()> {
    let format: EmitFormat = output.format.into();
    match &output.out {
        Some(path) => {
            let mut file = std::fs::File::create(path)?;
            emit_to(report, format, &mut file)?;
            eprintln!("report written to {}", path.display());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            emit_to(report, format, &mut stdout)?;
        }
    }
    Ok(())
}

fn exit_for(report: &Report) -> ExitCode {
    if !report.hypothesis_verified {
        ExitCode::from(2)
    } else if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("FLAB_THREADS") {
        let threads: usize = threads.parse().context("FLAB_THREADS must be an integer")?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok();
    }
    match cli.command {
        Command::Check {
            suite,
            metric,
            samples,
            seed,
            tol,
            output,
        } => {
            let spec = metric.resolve()?;
            let cfg = SamplingConfig {
                seed,
                count: samples,
            };
            let mut report = harness::run_suite(&suite, &spec, &cfg)?;
            if let Some(t) = tol {
                report.tolerance = t;
                report.pass = report.residuals.max < t
                    && report.failures * 100 <= report.samples;
                report
                    .notes
                    .push(format!("tolerance overridden to {t:.3e} from the command line"));
            }
            eprintln!(
                "[{}] {} on {}: max residual {:.3e} (tol {:.1e})",
                if report.pass { "pass" } else { "FAIL" },
                report.check,
                report.metric,
                report.residuals.max,
                report.tolerance,
            );
            write_report(&report, &output)?;
            Ok(exit_for(&report))
        }
        Command::Geodesic {
            metric,
            from,
            dir,
            len,
            out,
        } => {
            let spec = metric.resolve()?;
            let x0 = parse_vec(&from)?;
            let y0 = parse_vec(&dir)?;
            let f = spec.f(&x0, &y0)?;
            let y0: Vec<f64> = y0.iter().map(|c| c / f).collect();
            let path = integrate_geodesic(&spec, &x0, &y0, len, &GeodesicControl::default())?;
            eprintln!(
                "geodesic integrated to t = {:.6} ({} steps, unit-speed drift {:.2e}{})",
                path.reached,
                path.accepted_times().len() - 1,
                path.unit_speed_drift(64)?,
                if path.chart_exit { ", chart exit" } else { "" },
            );
            match out {
                Some(p) => {
                    let mut file = std::fs::File::create(&p)?;
                    path.write_csv(&mut file)?;
                    eprintln!("samples written to {}", p.display());
                }
                None => {
                    let mut stdout = std::io::stdout().lock();
                    path.write_csv(&mut stdout)?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { which } => match which {
            CompareCommand::Laplacian {
                metric,
                lambda,
                radii,
                directions,
                seed,
                output,
            } => {
                let spec = metric.resolve()?;
                let radii = parse_radii(&radii)?;
                let report = harness::verify_laplacian_comparison(
                    &spec, lambda, &radii, directions, seed,
                )?;
                eprintln!(
                    "[{}] laplacian comparison on {}: worst slack violation {:.3e}",
                    if report.pass { "pass" } else { "FAIL" },
                    report.metric,
                    report.residuals.max,
                );
                write_report(&report, &output)?;
                Ok(exit_for(&report))
            }
            CompareCommand::Diameter {
                metric,
                lambda,
                geodesics,
                seed,
                output,
            } => {
                let spec = metric.resolve()?;
                let report = harness::verify_diameter(&spec, lambda, geodesics, seed)?;
                eprintln!(
                    "[{}] diameter bound on {}",
                    if report.pass { "pass" } else { "FAIL" },
                    report.metric,
                );
                write_report(&report, &output)?;
                Ok(exit_for(&report))
            }
            CompareCommand::Volume {
                metric,
                lambda,
                radii,
                measure,
                directions,
                seed,
                output,
            } => {
                let spec = metric.resolve()?;
                let radii = parse_radii(&radii)?;
                let measure: VolumeMeasure = measure
                    .parse()
                    .map_err(|m: String| anyhow!(m))?;
                let (_, report) = harness::volume_ratio(
                    &spec,
                    &measure,
                    &vec![0.0; 2 * spec.n],
                    &radii,
                    directions,
                    seed,
                    lambda,
                )?;
                eprintln!(
                    "[{}] volume ratio on {}",
                    if report.pass { "pass" } else { "FAIL" },
                    report.metric,
                );
                write_report(&report, &output)?;
                Ok(exit_for(&report))
            }
        },
        Command::Tensors {
            metric,
            at,
            dump_jets,
            out,
        } => {
            let spec = metric.resolve()?;
            let point: EvalPoint = serde_json::from_str(&at)
                .context("expected {\"x\": [...], \"y\": [...]}")?;
            let real = flab_core::real_engine::real_tensors(&spec, &point)?;
            let complex = flab_core::complex_engine::complex_tensors(&spec, &point)?;
            let mut doc = serde_json::json!({
                "real": real.to_json(),
                "complex": complex.to_json(),
            });
            if dump_jets {
                let table = eval_partials(&spec, &point, 5, 2)?;
                doc["jets"] = table.to_json();
            }
            let text = serde_json::to_string_pretty(&doc)?;
            match out {
                Some(p) => std::fs::write(&p, text)?,
                None => println!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Catalog => {
            let mut stdout = std::io::stdout().lock();
            for entry in CATALOG {
                writeln!(
                    stdout,
                    "{:28} n in {}..={}  {}",
                    entry.name, entry.n_range.0, entry.n_range.1, entry.description
                )?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(3)
        }
    }
}

//! Command line front end: run experiments, plot clouds, check quality.
//!
//! Exit codes: 0 on success, 2 on configuration problems (bad flags, bad
//! config or reference specs), 1 on runtime failures (IO, numerics).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use invariant_cloud::error::Error;
use invariant_cloud::geometry::PointCloud;
use invariant_cloud::plot::{save_svg, Projection};
use invariant_cloud::runner::{self, ReferenceSpec};
use invariant_cloud::verify;

#[derive(Parser)]
#[command(
    name = "invariant-cloud",
    version,
    about = "Approximate maximal invariant sets of discrete maps by minimizing a point-cloud energy"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON config and write its artifacts.
    Run {
        /// Path to the experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed override; defaults to the config's `seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render cloud CSV files to an SVG scatter plot.
    Plot {
        /// Cloud CSV files; colors cycle per file.
        #[arg(long = "in", num_args = 1.., required = true)]
        input: Vec<PathBuf>,
        /// Draw a circle of this radius around every point.
        #[arg(long)]
        delta: Option<f64>,
        /// Axis pair for 3d clouds.
        #[arg(long, default_value = "xy")]
        proj: Projection,
        /// Reference spec, inline JSON or a path to a JSON file.
        #[arg(long)]
        reference: Option<String>,
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Report Hausdorff quality of a cloud against a reference set.
    Verify {
        /// Cloud CSV file.
        #[arg(long)]
        cloud: PathBuf,
        /// Reference spec, inline JSON or a path to a JSON file.
        #[arg(long)]
        reference: String,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Config { .. } | Error::Parse { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { config, out, seed } => {
            let config = runner::load_config(&config)?;
            let artifacts = runner::run(&config, out.as_deref(), seed)?;
            println!(
                "{}: {} after {} iterations, value {:.6e}, grad_inf {:.6e}",
                artifacts.out_dir.display(),
                artifacts.run.termination.as_str(),
                artifacts.run.iterations,
                artifacts.run.final_value,
                artifacts.run.final_grad_norm,
            );
            if let Some(delta) = artifacts.delta_final {
                println!("delta_final={delta:.6e}");
            }
            if let Some(q) = artifacts.quality {
                println!(
                    "d_h={:.6e} d_forward={:.6e} d_backward={:.6e}",
                    q.d_h, q.d_forward, q.d_backward
                );
            }
            Ok(())
        }
        Command::Plot { input, delta, proj, reference, out } => {
            let clouds = input
                .iter()
                .map(PointCloud::load_csv)
                .collect::<Result<Vec<_>, _>>()?;
            let reference = reference
                .as_deref()
                .map(|arg| Ok::<_, Error>(parse_reference(arg)?.build(None)?.sample))
                .transpose()?;
            save_svg(&out, &clouds, reference.as_ref(), delta, proj)?;
            println!("{}", out.display());
            Ok(())
        }
        Command::Verify { cloud, reference } => {
            let cloud = PointCloud::load_csv(&cloud)?;
            let reference = parse_reference(&reference)?.build(None)?;
            let q = verify::report_quality(&cloud, &reference)?;
            println!(
                "d_h={:.6e} d_forward={:.6e} d_backward={:.6e}",
                q.d_h, q.d_forward, q.d_backward
            );
            Ok(())
        }
    }
}

/// A reference argument is inline JSON when it starts with `{`, otherwise a
/// path to a JSON file.
fn parse_reference(arg: &str) -> Result<ReferenceSpec, Error> {
    let (text, origin) = if arg.trim_start().starts_with('{') {
        (arg.to_string(), PathBuf::from("<inline reference>"))
    } else {
        let path = Path::new(arg);
        (
            std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?,
            path.to_path_buf(),
        )
    };
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: origin,
        message: e.to_string(),
    })
}

//! `kolmo` — command-line front end for intrinsic calculus on
//! Kolmogorov-type Lie groups.
//!
//! Every subcommand loads the same JSON structure descriptor
//! (`{"block_sizes": [...], "matrix": [[...], ...]}`), validates it, and
//! then operates on points given as comma-separated `t,x1,...,xd`. Exit
//! codes: 0 success, 2 usage, 3 invalid input, 4 numerical failure.

mod descriptor;
mod format;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kolmo_core::calculus::{taylor_coefficients, CalculusError};
use kolmo_core::connect::{connect_y, ConnectError};
use kolmo_core::group::{b_norm_with, compose, inverse, semi_distance, NormExponents};
use kolmo_core::harness::HarnessError;
use kolmo_core::holder::{holder_seminorm, BoxDomain, HolderError};
use kolmo_core::registry;
use kolmo_core::{Field, GroupPoint, KolmogorovStructure};
use nalgebra::DVector;
use serde_json::json;
use thiserror::Error;

use format::{fmt_f64, fmt_point, round15};
use verify::{Experiment, VerifyOptions};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error(transparent)]
    Io(std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<ConnectError> for CliError {
    fn from(e: ConnectError) -> Self {
        match e {
            ConnectError::EpsilonExceeded { .. } | ConnectError::NoConvergence { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<CalculusError> for CliError {
    fn from(e: CalculusError) -> Self {
        match e {
            CalculusError::Structure(inner) => CliError::Validation(inner.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<HolderError> for CliError {
    fn from(e: HolderError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::NotRankOne
            | HarnessError::NotScalarBlocks
            | HarnessError::InsufficientRegularity { .. } => CliError::Validation(e.to_string()),
            HarnessError::Calculus(inner) => inner.into(),
            HarnessError::Connect(inner) => inner.into(),
            HarnessError::Group(inner) => CliError::Validation(inner.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "kolmo",
    version,
    about = "Intrinsic calculus on Kolmogorov-type Lie groups",
    long_about = "Group operations, anisotropic norms, intrinsic Taylor polynomials, \
                  integral-curve connectivity and verification experiments for \
                  Kolmogorov-type Lie groups described by a block drift matrix."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StructureArg {
    /// Path to the JSON structure descriptor
    /// {"block_sizes":[p0,...,pr],"matrix":[[row],...]}.
    #[arg(long)]
    structure: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
enum ExponentsArg {
    /// |x_i|^{1/(2j+1)} on block j (degree-one homogeneous).
    #[default]
    DegreeOne,
    /// |x_i|^{2j+1} on block j, for side-by-side comparison.
    Integer,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a structure descriptor and print its block data.
    Validate {
        #[command(flatten)]
        structure: StructureArg,
    },
    /// Compose two group elements.
    Compose {
        #[command(flatten)]
        structure: StructureArg,
        /// Left factor as t,x1,...,xd.
        #[arg(long, allow_hyphen_values = true)]
        left: String,
        /// Right factor as t,x1,...,xd.
        #[arg(long, allow_hyphen_values = true)]
        right: String,
    },
    /// Invert a group element.
    Inverse {
        #[command(flatten)]
        structure: StructureArg,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// Anisotropic norm of a point.
    Norm {
        #[command(flatten)]
        structure: StructureArg,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, value_enum, default_value_t)]
        exponents: ExponentsArg,
    },
    /// Semi-distance from one point to another (not symmetric).
    Distance {
        #[command(flatten)]
        structure: StructureArg,
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        to: String,
    },
    /// Intrinsic Taylor coefficient table, optionally evaluated at a point.
    Taylor {
        #[command(flatten)]
        structure: StructureArg,
        /// Registry function name: one, t, x1..xd, mono:<k>:<b1>,..,<bd>,
        /// sin1, cos1, expmix.
        #[arg(long)]
        function: String,
        #[arg(long, allow_hyphen_values = true)]
        center: String,
        #[arg(long)]
        order: u32,
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
    },
    /// Solve for the curve reaching a deep-block increment.
    Connect {
        #[command(flatten)]
        structure: StructureArg,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// Target increment in the second block, comma-separated.
        #[arg(long, allow_hyphen_values = true)]
        eta: String,
    },
    /// Seminorm sweep over a box domain.
    Seminorm {
        #[command(flatten)]
        structure: StructureArg,
        #[arg(long)]
        function: String,
        /// Outer box as lo_t,lo_x1,..:hi_t,hi_x1,..
        #[arg(long = "box", allow_hyphen_values = true)]
        outer: String,
        /// Inner box, strictly inside the outer one, same syntax.
        #[arg(long = "inner-box", allow_hyphen_values = true)]
        inner: String,
        /// Recursion order k of the seminorm.
        #[arg(long, default_value_t = 0)]
        order: u32,
        #[arg(long)]
        alpha: f64,
        /// Subdivisions per axis of the sweep grid.
        #[arg(long, default_value_t = 8)]
        grid: usize,
    },
    /// Verification experiments with CSV/JSON reporting.
    Verify {
        #[command(flatten)]
        structure: StructureArg,
        /// Registry function name: one, t, x1..xd, mono:<k>:<b1>,..,<bd>,
        /// sin1, cos1, expmix.
        #[arg(long)]
        function: String,
        /// Taylor order n of the remainder experiment.
        #[arg(long, default_value_t = 3)]
        order: u32,
        /// Hölder exponent entering the expected slope n + alpha.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Scale sweep a:b:count (log-spaced, inclusive).
        #[arg(long, default_value = "1e-3:1e-1:16")]
        scales: String,
        #[arg(long = "samples-per-scale", default_value_t = 4)]
        samples_per_scale: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Slack subtracted from n + alpha in the slope criterion.
        #[arg(long = "slope-tol", default_value_t = 0.15)]
        slope_tol: f64,
        #[arg(long, value_enum, default_value_t = Experiment::Remainder)]
        experiment: Experiment,
        /// Expansion center / experiment base point (defaults to a fixed
        /// interior point).
        #[arg(long, allow_hyphen_values = true)]
        center: Option<String>,
        /// Output path of the sample CSV.
        #[arg(long, default_value = "verify_samples.csv")]
        csv: PathBuf,
    },
}

fn parse_floats(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("cannot parse {what} component {p:?}")))
        })
        .collect()
}

fn parse_point(text: &str, s: &KolmogorovStructure) -> Result<GroupPoint, CliError> {
    let coords = parse_floats(text, "point")?;
    if coords.len() != s.dimension() + 1 {
        return Err(CliError::Validation(format!(
            "point {text:?} has {} coordinates, structure needs {} (t,x1,...,xd)",
            coords.len(),
            s.dimension() + 1
        )));
    }
    Ok(GroupPoint::from_coords(&coords))
}

fn parse_box(text: &str, s: &KolmogorovStructure) -> Result<(GroupPoint, GroupPoint), CliError> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("box {text:?} must be lo_coords:hi_coords")))?;
    Ok((parse_point(lo, s)?, parse_point(hi, s)?))
}

fn parse_scales(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!(
            "scales {text:?} must be a:b:count"
        )));
    }
    let a: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::Usage(format!("bad scale start {:?}", parts[0])))?;
    let b: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::Usage(format!("bad scale end {:?}", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| CliError::Usage(format!("bad scale count {:?}", parts[2])))?;
    if !(a > 0.0 && b > a && count >= 2) {
        return Err(CliError::Usage(
            "scales need 0 < a < b and count >= 2".into(),
        ));
    }
    Ok((0..count)
        .map(|i| a * (b / a).powf(i as f64 / (count - 1) as f64))
        .collect())
}

fn point_json(p: &GroupPoint) -> serde_json::Value {
    json!(p.coords().iter().map(|&c| round15(c)).collect::<Vec<_>>())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { structure } => {
            let s = descriptor::load(&structure.structure)?;
            println!("dimension: {}", s.dimension());
            println!(
                "block_sizes: {}",
                s.block_sizes()
                    .iter()
                    .map(|p| p.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            );
            println!("homogeneous: {}", s.is_homogeneous());
            Ok(())
        }
        Command::Compose {
            structure,
            left,
            right,
        } => {
            let s = descriptor::load(&structure.structure)?;
            let a = parse_point(&left, &s)?;
            let b = parse_point(&right, &s)?;
            let c = compose(&a, &b, &s).map_err(|e| CliError::Validation(e.to_string()))?;
            println!("{}", fmt_point(&c.coords()));
            Ok(())
        }
        Command::Inverse { structure, point } => {
            let s = descriptor::load(&structure.structure)?;
            let z = parse_point(&point, &s)?;
            println!("{}", fmt_point(&inverse(&z, &s).coords()));
            Ok(())
        }
        Command::Norm {
            structure,
            point,
            exponents,
        } => {
            let s = descriptor::load(&structure.structure)?;
            let z = parse_point(&point, &s)?;
            let convention = match exponents {
                ExponentsArg::DegreeOne => NormExponents::DegreeOne,
                ExponentsArg::Integer => NormExponents::IntegerPowers,
            };
            println!("{}", fmt_f64(b_norm_with(&z, &s, convention)));
            Ok(())
        }
        Command::Distance {
            structure,
            from,
            to,
        } => {
            let s = descriptor::load(&structure.structure)?;
            let zeta = parse_point(&from, &s)?;
            let z = parse_point(&to, &s)?;
            let dist =
                semi_distance(&zeta, &z, &s).map_err(|e| CliError::Validation(e.to_string()))?;
            println!("{}", fmt_f64(dist));
            Ok(())
        }
        Command::Taylor {
            structure,
            function,
            center,
            order,
            point,
        } => {
            let s = descriptor::load(&structure.structure)?;
            let u =
                registry::build(&function, &s).map_err(|e| CliError::Validation(e.to_string()))?;
            let zeta = parse_point(&center, &s)?;
            let expansion = taylor_coefficients(&u, &zeta, order, &s)?;
            let table = json!({
                "function": function,
                "center": point_json(expansion.center()),
                "order": expansion.order(),
                "terms": expansion.terms().iter().map(|t| json!({
                    "k": t.k,
                    "beta": t.beta.entries(),
                    "coefficient": round15(t.coefficient),
                })).collect::<Vec<_>>(),
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&table).expect("serializable")
            );
            if let Some(point) = point {
                let z = parse_point(&point, &s)?;
                println!("{}", fmt_f64(expansion.eval(&z, &s)));
            }
            Ok(())
        }
        Command::Connect {
            structure,
            point,
            eta,
        } => {
            let s = descriptor::load(&structure.structure)?;
            let z = parse_point(&point, &s)?;
            let eta = DVector::from_vec(parse_floats(&eta, "eta")?);
            let result = connect_y(&z, &eta, &s)?;
            let out = json!({
                "delta": round15(result.delta),
                "v": result.v.iter().map(|&c| round15(c)).collect::<Vec<_>>(),
                "residual": round15(result.residual),
                "iterations": result.iterations,
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&out).expect("serializable")
            );
            Ok(())
        }
        Command::Seminorm {
            structure,
            function,
            outer,
            inner,
            order,
            alpha,
            grid,
        } => {
            let s = descriptor::load(&structure.structure)?;
            let u =
                registry::build(&function, &s).map_err(|e| CliError::Validation(e.to_string()))?;
            let (outer_lo, outer_hi) = parse_box(&outer, &s)?;
            let (inner_lo, inner_hi) = parse_box(&inner, &s)?;
            let domain = BoxDomain::new(outer_lo, outer_hi, inner_lo, inner_hi)?;
            let report = holder_seminorm(&u, &domain, order, alpha, grid, &s)?;
            let argmax = report.argmax.as_ref().map(|a| {
                json!({
                    "point": point_json(&a.point),
                    "delta": round15(a.delta),
                    "field": match a.field {
                        Field::X(i) => format!("X{}", i + 1),
                        Field::Y => "Y".into(),
                    },
                })
            });
            let out = json!({
                "function": function,
                "order": order,
                "alpha": round15(alpha),
                "value": round15(report.value),
                "argmax": argmax,
                "grid": report.grid,
                "delta_omega0": round15(report.delta_omega0),
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&out).expect("serializable")
            );
            Ok(())
        }
        Command::Verify {
            structure,
            function,
            order,
            alpha,
            scales,
            samples_per_scale,
            seed,
            slope_tol,
            experiment,
            center,
            csv,
        } => {
            let s = descriptor::load(&structure.structure)?;
            let center = match center {
                Some(text) => Some(parse_point(&text, &s)?),
                None => None,
            };
            let opts = VerifyOptions {
                function,
                order,
                alpha,
                scales: parse_scales(&scales)?,
                samples_per_scale,
                seed,
                slope_tol,
                experiment,
                center,
                csv,
            };
            let pass = verify::run(&s, &opts)?;
            if pass {
                Ok(())
            } else {
                Err(CliError::Numerical(
                    "one or more verification criteria failed".into(),
                ))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

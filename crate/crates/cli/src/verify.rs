//! The `verify` subcommand: runs a verification experiment, writes the
//! sample sweep as CSV and a JSON summary with per-criterion pass/fail to
//! standard output. Exit code 0 iff every selected criterion passes.

use std::fs;
use std::path::PathBuf;

use kolmo_core::harness::{
    self, commutator_order, curve_taylor_order, fit_order, quasi_triangle_ratio,
    reconstruction_error, remainder_experiment, DirectionSpec, OrderFit,
};
use kolmo_core::registry;
use kolmo_core::{GroupPoint, KolmogorovStructure};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::format::{fmt_f64, round15};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Experiment {
    /// Taylor remainder order fit.
    Remainder,
    /// Commutator identity defect order in the step.
    Commutator,
    /// Deep-derivative reconstruction against central differences.
    Reconstruction,
    /// Third-order curve expansion defect order.
    Curve,
    /// Every experiment the structure supports.
    All,
}

pub struct VerifyOptions {
    pub function: String,
    pub order: u32,
    pub alpha: f64,
    pub scales: Vec<f64>,
    pub samples_per_scale: usize,
    pub seed: u64,
    pub slope_tol: f64,
    pub experiment: Experiment,
    pub center: Option<GroupPoint>,
    pub csv: PathBuf,
}

struct Criterion {
    name: &'static str,
    measured: f64,
    threshold: f64,
    /// True when the measurement must be at least the threshold; false for
    /// at-most criteria.
    at_least: bool,
}

impl Criterion {
    fn pass(&self) -> bool {
        if self.at_least {
            self.measured >= self.threshold
        } else {
            self.measured <= self.threshold
        }
    }
}

fn default_point(d: usize) -> GroupPoint {
    GroupPoint::new(0.1, DVector::from_fn(d, |i, _| 0.2 + 0.1 * i as f64))
}

fn fit_json(fit: &OrderFit) -> serde_json::Value {
    json!({
        "slope": round15(fit.slope),
        "intercept": round15(fit.intercept),
        "r_squared": round15(fit.r_squared),
        "samples": fit.samples,
    })
}

pub fn run(s: &KolmogorovStructure, opts: &VerifyOptions) -> Result<bool, CliError> {
    let u = registry::build(&opts.function, s).map_err(|e| CliError::Validation(e.to_string()))?;
    let center = opts
        .center
        .clone()
        .unwrap_or_else(|| default_point(s.dimension()));

    let mut criteria: Vec<Criterion> = Vec::new();
    let mut csv_rows: Vec<(f64, f64, f64)> = Vec::new();
    let mut extras = serde_json::Map::new();

    let run_remainder = matches!(opts.experiment, Experiment::Remainder | Experiment::All);
    let run_commutator = matches!(opts.experiment, Experiment::Commutator | Experiment::All);
    let run_reconstruction = matches!(
        opts.experiment,
        Experiment::Reconstruction | Experiment::All
    );
    let run_curve = matches!(opts.experiment, Experiment::Curve | Experiment::All);

    if run_remainder {
        let directions = DirectionSpec {
            per_scale: opts.samples_per_scale,
            seed: opts.seed,
        };
        let samples = remainder_experiment(&u, &center, opts.order, &opts.scales, &directions, s)?;
        let mut worst_ratio = 0.0f64;
        for sample in &samples {
            csv_rows.push((sample.scale, sample.b_distance, sample.remainder));
            worst_ratio = worst_ratio.max(quasi_triangle_ratio(&sample.zeta, &sample.z, s)?);
        }
        let fit = fit_order(&samples)?;
        extras.insert("remainder_fit".into(), fit_json(&fit));
        extras.insert(
            "quasi_triangle_max_ratio".into(),
            json!(round15(worst_ratio)),
        );
        criteria.push(Criterion {
            name: "remainder_order",
            measured: fit.slope,
            threshold: f64::from(opts.order) + opts.alpha - opts.slope_tol,
            at_least: true,
        });
    }

    if run_commutator {
        let steps = [2e-2, 1e-2, 5e-3, 2.5e-3];
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0xc0_ffee);
        let v = DVector::from_fn(s.block_size(0), |_, _| rng.random_range(-1.0..1.0));
        let v = &v / v.norm();
        let fit = commutator_order(&u, &center, &v, &steps, s)?;
        if !run_remainder {
            for &h in &steps {
                let defect = harness::commutator_check(&u, &center, &v, h, s)?;
                csv_rows.push((h, h, defect));
            }
        }
        extras.insert("commutator_fit".into(), fit_json(&fit));
        criteria.push(Criterion {
            name: "commutator_order",
            measured: fit.slope,
            threshold: harness::COMMUTATOR_MIN_ORDER,
            at_least: true,
        });
    }

    if run_reconstruction {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0xdeed);
        let d = s.dimension();
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let z = GroupPoint::new(
                rng.random_range(-1.0..1.0),
                DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0)),
            );
            worst = worst.max(reconstruction_error(&u, &z, s)?);
        }
        criteria.push(Criterion {
            name: "reconstruction_max_error",
            measured: worst,
            threshold: harness::RECONSTRUCTION_TOL,
            at_least: false,
        });
    }

    if run_curve {
        let deltas: Vec<f64> = (0..12)
            .map(|i| 0.05 * 10f64.powf(i as f64 / 11.0))
            .collect();
        let fit = curve_taylor_order(&u, &center, 1.0, &deltas, s)?;
        if !run_remainder && !run_commutator {
            for &delta in &deltas {
                let defect = harness::bar_t3_check(&u, &center, 1.0, delta, s)?;
                csv_rows.push((delta, delta, defect));
            }
        }
        extras.insert("curve_fit".into(), fit_json(&fit));
        criteria.push(Criterion {
            name: "curve_taylor_order",
            measured: fit.slope,
            threshold: harness::CURVE_TAYLOR_MIN_ORDER,
            at_least: true,
        });
    }

    let mut csv = String::from("scale,b_distance,remainder\n");
    for (a, b, c) in &csv_rows {
        csv.push_str(&fmt_f64(*a));
        csv.push(',');
        csv.push_str(&fmt_f64(*b));
        csv.push(',');
        csv.push_str(&fmt_f64(*c));
        csv.push('\n');
    }
    fs::write(&opts.csv, csv).map_err(CliError::Io)?;

    let all_pass = criteria.iter().all(Criterion::pass);
    let summary = json!({
        "function": opts.function,
        "order": opts.order,
        "alpha": round15(opts.alpha),
        "seed": opts.seed,
        "samples_written": csv_rows.len(),
        "csv": opts.csv.display().to_string(),
        "criteria": criteria.iter().map(|c| json!({
            "name": c.name,
            "measured": round15(c.measured),
            "threshold": round15(c.threshold),
            "pass": c.pass(),
        })).collect::<Vec<_>>(),
        "details": extras,
        "pass": all_pass,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("serializable")
    );
    Ok(all_pass)
}

//! Verification experiments: Taylor remainder order fitting, the
//! commutator identity, reconstruction of the deep-block derivative and
//! the third-order curve expansion check.
//!
//! The remainder experiment samples points around a center by composing
//! group increments whose components are weighted by the formal degrees
//! (`±s²` in time, `s` in the first block, `s^{2j+1}` in block `j`), so a
//! single scale populates every anisotropy regime. A power law is then
//! fitted to `(log distance, log remainder)`.

use alloc::vec::Vec;

use nalgebra::DVector;
// Backs f64 math methods in no_std builds; shadowed by inherent methods under test.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::calculus::{
    lie_derivative_y, mixed_derivative, taylor_coefficients, CalculusError, DerivativeOracle, Field,
};
use crate::connect::{flow, g_curve, ConnectError};
use crate::group::{compose, semi_distance, GroupError, GroupPoint};
use crate::structure::{KolmogorovStructure, MultiIndex};

/// Remainders at or below this floor count as exact reproduction.
pub const REMAINDER_FLOOR: f64 = 1e-14;
/// Default slack subtracted from `n + α` when checking a fitted slope.
pub const SLOPE_TOLERANCE: f64 = 0.15;
/// Minimum measured convergence order of the commutator defect in `h`.
pub const COMMUTATOR_MIN_ORDER: f64 = 0.9;
/// Agreement tolerance between the reconstructed and the finite-difference
/// deep-block derivative.
pub const RECONSTRUCTION_TOL: f64 = 1e-6;
/// Minimum fitted order of the third-order curve expansion defect (the
/// Lipschitz case).
pub const CURVE_TAYLOR_MIN_ORDER: f64 = 3.8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("need at least 8 positive remainders spanning 2 decades, got {found} over {decades:.3} decades")]
    InsufficientSamples { found: usize, decades: f64 },
    #[error("all remainders at or below {REMAINDER_FLOOR}: exact reproduction")]
    DegenerateSamples,
    #[error("function declares regularity {declared}, experiment requires {required}")]
    InsufficientRegularity { declared: u32, required: u32 },
    #[error("operation requires a two-block structure")]
    NotRankOne,
    #[error("operation requires scalar blocks (p0 = p1 = 1)")]
    NotScalarBlocks,
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Connect(#[from] ConnectError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// One remainder measurement: a sampled point, its semi-distance from the
/// center and the Taylor remainder there.
#[derive(Debug, Clone, PartialEq)]
pub struct RemainderSample {
    pub scale: f64,
    pub b_distance: f64,
    pub remainder: f64,
    pub zeta: GroupPoint,
    pub z: GroupPoint,
}

/// Least-squares power-law fit on logarithms.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    /// Intercept of the natural-log regression.
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Sampling plan of the remainder experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectionSpec {
    pub per_scale: usize,
    pub seed: u64,
}

impl Default for DirectionSpec {
    fn default() -> Self {
        Self {
            per_scale: 4,
            seed: 0,
        }
    }
}

fn random_unit_vector(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(len, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-6 {
            return v / norm;
        }
    }
}

/// Samples `z = ζ ∘ Δ(s, direction)` for every scale and direction, with
/// `Δ = (±s², s u_0, s³ u_1, …)` and unit block vectors `u_j`, and records
/// the Taylor remainder of `u` at order `n`.
pub fn remainder_experiment(
    u: &DerivativeOracle,
    zeta: &GroupPoint,
    n: u32,
    scales: &[f64],
    directions: &DirectionSpec,
    s: &KolmogorovStructure,
) -> Result<Vec<RemainderSample>, HarnessError> {
    if u.max_degree() < n + 1 {
        return Err(HarnessError::InsufficientRegularity {
            declared: u.max_degree(),
            required: n + 1,
        });
    }
    let expansion = taylor_coefficients(u, zeta, n, s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(directions.seed);
    let mut samples = Vec::with_capacity(scales.len() * directions.per_scale);
    for &scale in scales {
        for _ in 0..directions.per_scale {
            let time_sign = if rng.random_range(0..2u8) == 0 {
                1.0
            } else {
                -1.0
            };
            let mut x = DVector::zeros(s.dimension());
            for j in 0..s.block_count() {
                let unit = random_unit_vector(&mut rng, s.block_size(j));
                let weight = scale.powi(2 * j as i32 + 1);
                for (offset, i) in s.block_range(j).enumerate() {
                    x[i] = weight * unit[offset];
                }
            }
            let increment = GroupPoint::new(time_sign * scale * scale, x);
            let z = compose(zeta, &increment, s)?;
            let b_distance = semi_distance(zeta, &z, s)?;
            let remainder = (u.eval(&z) - expansion.eval(&z, s)).abs();
            samples.push(RemainderSample {
                scale,
                b_distance,
                remainder,
                zeta: zeta.clone(),
                z,
            });
        }
    }
    Ok(samples)
}

/// Ratio between the two-leg path through `e^{(t-s)Y}ζ` and the direct
/// semi-distance; reported alongside experiments, not asserted.
pub fn quasi_triangle_ratio(
    zeta: &GroupPoint,
    z: &GroupPoint,
    s: &KolmogorovStructure,
) -> Result<f64, HarnessError> {
    let direct = semi_distance(zeta, z, s)?;
    if direct == 0.0 {
        return Ok(1.0);
    }
    let mid = flow(zeta, Field::Y, z.t - zeta.t, s)?;
    let leg1 = semi_distance(zeta, &mid, s)?;
    let leg2 = semi_distance(&mid, z, s)?;
    Ok((leg1 + leg2) / direct)
}

/// Least-squares slope of `log remainder` against `log b_distance` over
/// the samples above the exactness floor.
pub fn fit_order(samples: &[RemainderSample]) -> Result<OrderFit, HarnessError> {
    if !samples.is_empty() && samples.iter().all(|s| s.remainder <= REMAINDER_FLOOR) {
        return Err(HarnessError::DegenerateSamples);
    }
    let pairs: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.remainder > REMAINDER_FLOOR)
        .map(|s| (s.b_distance, s.remainder))
        .collect();
    let found = pairs.len();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (b, _) in &pairs {
        lo = lo.min(*b);
        hi = hi.max(*b);
    }
    let decades = if found == 0 { 0.0 } else { (hi / lo).log10() };
    // Distances inherit ~1e-9 of relative noise from the cube-root
    // exponent, so an exact 2-decade sweep can measure fractionally short.
    if found < 8 || decades < 2.0 - 1e-6 {
        return Err(HarnessError::InsufficientSamples { found, decades });
    }
    fit_power_law(&pairs)
}

/// Log-log least squares on positive pairs `(x, y)`.
pub fn fit_power_law(pairs: &[(f64, f64)]) -> Result<OrderFit, HarnessError> {
    let logs: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = logs.len();
    if n < 2 {
        return Err(HarnessError::InsufficientSamples {
            found: n,
            decades: 0.0,
        });
    }
    let nf = n as f64;
    let (sx, sy) = logs.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let slope = (nf * sxy - sx * sy) / (nf * sxx - sx * sx);
    let intercept = (sy - slope * sx) / nf;
    let mean_y = sy / nf;
    let ss_tot: f64 = logs.iter().map(|p| (p.1 - mean_y) * (p.1 - mean_y)).sum();
    let ss_res: f64 = logs
        .iter()
        .map(|p| {
            let r = p.1 - (slope * p.0 + intercept);
            r * r
        })
        .sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(OrderFit {
        slope,
        intercept,
        r_squared,
        samples: n,
    })
}

fn pad_first_block(v: &DVector<f64>, s: &KolmogorovStructure) -> DVector<f64> {
    let mut out = DVector::zeros(s.dimension());
    for i in 0..v.len() {
        out[i] = v[i];
    }
    out
}

/// Defect of the commutator identity `[vX, Y]u = ⟨∇u, B(v,0)⟩` with every
/// term a central finite difference of step `h`; first-order accurate or
/// better in `h`.
pub fn commutator_check(
    u: &DerivativeOracle,
    z: &GroupPoint,
    v: &DVector<f64>,
    h: f64,
    s: &KolmogorovStructure,
) -> Result<f64, HarnessError> {
    if v.len() != s.block_size(0) {
        return Err(ConnectError::Dimension {
            expected: s.block_size(0),
            got: v.len(),
        }
        .into());
    }
    let vt = pad_first_block(v, s);
    let shift = |p: &GroupPoint, sign: f64| {
        let mut w = p.clone();
        w.x += sign * h * &vt;
        w
    };
    let y_of_u = |p: &GroupPoint| -> Result<f64, HarnessError> {
        let fwd = flow(p, Field::Y, h, s)?;
        let bwd = flow(p, Field::Y, -h, s)?;
        Ok((u.eval(&fwd) - u.eval(&bwd)) / (2.0 * h))
    };
    let x_of_u = |p: &GroupPoint| (u.eval(&shift(p, 1.0)) - u.eval(&shift(p, -1.0))) / (2.0 * h);

    let x_after_y = (y_of_u(&shift(z, 1.0))? - y_of_u(&shift(z, -1.0))?) / (2.0 * h);
    let y_after_x = {
        let fwd = flow(z, Field::Y, h, s)?;
        let bwd = flow(z, Field::Y, -h, s)?;
        (x_of_u(&fwd) - x_of_u(&bwd)) / (2.0 * h)
    };
    let commutator = x_after_y - y_after_x;

    let bv = s.matrix() * &vt;
    let mut rhs = 0.0;
    for i in 0..s.dimension() {
        if bv[i] != 0.0 {
            let mut fwd = z.clone();
            fwd.x[i] += h;
            let mut bwd = z.clone();
            bwd.x[i] -= h;
            rhs += bv[i] * (u.eval(&fwd) - u.eval(&bwd)) / (2.0 * h);
        }
    }
    Ok((commutator - rhs).abs())
}

/// Measured convergence order of the commutator defect over a step sweep.
pub fn commutator_order(
    u: &DerivativeOracle,
    z: &GroupPoint,
    v: &DVector<f64>,
    steps: &[f64],
    s: &KolmogorovStructure,
) -> Result<OrderFit, HarnessError> {
    let mut pairs = Vec::with_capacity(steps.len());
    for &h in steps {
        pairs.push((h, commutator_check(u, z, v, h, s)?));
    }
    fit_power_law(&pairs)
}

fn require_two_blocks(s: &KolmogorovStructure) -> Result<(), HarnessError> {
    if s.block_count() != 2 {
        return Err(HarnessError::NotRankOne);
    }
    Ok(())
}

/// The vector `([∂_x, Y] - B₀₀ ∂_x) u (z)`, every piece a finite
/// difference of Lie derivatives at step `h`.
fn commutator_vector(
    u: &DerivativeOracle,
    z: &GroupPoint,
    h: f64,
    s: &KolmogorovStructure,
) -> Result<DVector<f64>, HarnessError> {
    let p0 = s.block_size(0);
    let b00 = s.block(0, 0);
    let y_of_u = |p: &GroupPoint| -> Result<f64, HarnessError> {
        let fwd = flow(p, Field::Y, h, s)?;
        let bwd = flow(p, Field::Y, -h, s)?;
        Ok((u.eval(&fwd) - u.eval(&bwd)) / (2.0 * h))
    };
    let grad_x = DVector::from_fn(p0, |i, _| {
        let mut fwd = z.clone();
        fwd.x[i] += h;
        let mut bwd = z.clone();
        bwd.x[i] -= h;
        (u.eval(&fwd) - u.eval(&bwd)) / (2.0 * h)
    });
    let mut c = DVector::zeros(p0);
    for i in 0..p0 {
        let mut fwd = z.clone();
        fwd.x[i] += h;
        let mut bwd = z.clone();
        bwd.x[i] -= h;
        let x_after_y = (y_of_u(&fwd)? - y_of_u(&bwd)?) / (2.0 * h);
        let y_after_x = {
            let zf = flow(z, Field::Y, h, s)?;
            let zb = flow(z, Field::Y, -h, s)?;
            let dx = |p: &GroupPoint| {
                let mut f = p.clone();
                f.x[i] += h;
                let mut b = p.clone();
                b.x[i] -= h;
                (u.eval(&f) - u.eval(&b)) / (2.0 * h)
            };
            (dx(&zf) - dx(&zb)) / (2.0 * h)
        };
        let mut correction = 0.0;
        for m in 0..p0 {
            correction += b00[(m, i)] * grad_x[m];
        }
        c[i] = x_after_y - y_after_x - correction;
    }
    Ok(c)
}

/// Reconstructs `∇_y u(z)` from first-block data alone: the least-squares
/// solve of `B₁₀ᵀ ∇_y = ([∂_x, Y] - B₀₀ ∂_x) u`, all pieces finite
/// differences, with one Richardson extrapolation level.
pub fn reconstruct_dy(
    u: &DerivativeOracle,
    z: &GroupPoint,
    s: &KolmogorovStructure,
) -> Result<DVector<f64>, HarnessError> {
    require_two_blocks(s)?;
    let h = u.fd_step().sqrt();
    let coarse = commutator_vector(u, z, h, s)?;
    let fine = commutator_vector(u, z, h / 2.0, s)?;
    let c = (fine * 4.0 - coarse) / 3.0;
    let b10_t = s.block(1, 0).transpose();
    b10_t
        .svd(true, true)
        .solve(&c, 1e-13)
        .map_err(|_| HarnessError::NotRankOne)
}

/// Max deviation between [`reconstruct_dy`] and plain central differences
/// along the deep-block coordinates.
pub fn reconstruction_error(
    u: &DerivativeOracle,
    z: &GroupPoint,
    s: &KolmogorovStructure,
) -> Result<f64, HarnessError> {
    require_two_blocks(s)?;
    let reconstructed = reconstruct_dy(u, z, s)?;
    let p0 = s.block_size(0);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for i in 0..s.block_size(1) {
        let mut fwd = z.clone();
        fwd.x[p0 + i] += h;
        let mut bwd = z.clone();
        bwd.x[p0 + i] -= h;
        let fd = (u.eval(&fwd) - u.eval(&bwd)) / (2.0 * h);
        worst = worst.max((reconstructed[i] - fd).abs());
    }
    Ok(worst)
}

/// Defect of the third-order expansion along the corrected curve: compares
/// `u(g_{v,δ}(z))` with the first-block Taylor sum to order three plus the
/// deep-increment term `(η - y)/B₁₀ · ([∂_x, Y] - B₀₀ ∂_x)u(z)`. Scalar
/// blocks only.
pub fn bar_t3_check(
    u: &DerivativeOracle,
    z: &GroupPoint,
    v: f64,
    delta: f64,
    s: &KolmogorovStructure,
) -> Result<f64, HarnessError> {
    if s.block_count() != 2 || s.block_size(0) != 1 || s.block_size(1) != 1 {
        return Err(HarnessError::NotScalarBlocks);
    }
    let vv = DVector::from_element(1, v);
    let target = g_curve(z, &vv, delta, s)?;

    let mut x_sum = 0.0;
    let mut weight = 1.0;
    let dx = target.x[0] - z.x[0];
    for i in 0..=3usize {
        if i > 0 {
            weight *= dx / i as f64;
        }
        let beta = MultiIndex::new(alloc::vec![i as u32, 0], s).expect("dimension fixed");
        x_sum += weight * mixed_derivative(u, z, 0, &beta, s)?;
    }

    // ∂_x(Yu) by a Richardson-extrapolated central difference of the Lie
    // derivative; Y(∂_x u) through the mixed-derivative path.
    let h = u.fd_step().sqrt();
    let dx_of_y = |step: f64| -> Result<f64, HarnessError> {
        let mut fwd = z.clone();
        fwd.x[0] += step;
        let mut bwd = z.clone();
        bwd.x[0] -= step;
        Ok((lie_derivative_y(u, &fwd, s)? - lie_derivative_y(u, &bwd, s)?) / (2.0 * step))
    };
    let x_after_y = (4.0 * dx_of_y(h / 2.0)? - dx_of_y(h)?) / 3.0;
    let e0 = MultiIndex::new(alloc::vec![1, 0], s).expect("dimension fixed");
    let y_after_x = mixed_derivative(u, z, 1, &e0, s)?;
    let du_dx = mixed_derivative(u, z, 0, &e0, s)?;
    let b00 = s.block(0, 0)[(0, 0)];
    let b10 = s.block(1, 0)[(0, 0)];
    let reconstruction = (x_after_y - y_after_x - b00 * du_dx) / b10;

    let deep_increment = target.x[1] - z.x[1];
    let taylor = x_sum + deep_increment * reconstruction;
    Ok((u.eval(&target) - taylor).abs())
}

/// Fitted order of the curve-expansion defect against `δ`.
pub fn curve_taylor_order(
    u: &DerivativeOracle,
    z: &GroupPoint,
    v: f64,
    deltas: &[f64],
    s: &KolmogorovStructure,
) -> Result<OrderFit, HarnessError> {
    let mut pairs = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        pairs.push((delta, bar_t3_check(u, z, v, delta, s)?));
    }
    fit_power_law(&pairs)
}

//! Empirical field Hölder seminorms over box domains and the recursive
//! anisotropic seminorms built from them.
//!
//! All estimates are grid suprema and therefore lower bounds of the true
//! seminorms, non-decreasing under grid refinement (the refinement must
//! double the subdivision count so grids stay nested). The admissible step
//! radius `δ_{Ω₀}` is itself approximated by minimizing `δ_z` over a fixed
//! internal grid of the inner box, independent of the sweep resolution.

use alloc::vec;
use alloc::vec::Vec;

// Backs f64 math methods in no_std builds; shadowed by inherent methods under test.
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::calculus::{derivative_oracle_dx, derivative_oracle_y, DerivativeOracle, Field};
use crate::group::{exp_b, GroupPoint};
use crate::structure::KolmogorovStructure;

/// Number of logarithmically spaced step magnitudes per sweep.
const DELTA_GRID: usize = 32;
/// Smallest step as a fraction of `δ_{Ω₀}`.
const DELTA_SPAN: f64 = 1e-4;
/// Fixed per-axis point count of the internal grid behind `δ_{Ω₀}`.
const DOMAIN_GRID: usize = 5;
/// Sub-steps per direction when checking that a `Y`-flow segment stays
/// inside the outer box.
const CURVE_SAMPLES: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HolderError {
    #[error("inner box must lie strictly inside the outer box with finite ordered corners")]
    InvalidBox,
    #[error("point lies outside the outer domain")]
    OutsideDomain,
    #[error("exponent {alpha} outside the admissible range ]0, {max}]")]
    AlphaRange { alpha: f64, max: f64 },
    #[error("function declares regularity {declared}, operation requires {required}")]
    InsufficientRegularity { declared: u32, required: u32 },
    #[error("expected {expected} entries, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// An outer box `Ω` with an inner box `Ω₀` strictly inside it, both
/// axis-aligned in `ℝ × ℝ^d` and treated as closed for membership.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    outer_lo: GroupPoint,
    outer_hi: GroupPoint,
    inner_lo: GroupPoint,
    inner_hi: GroupPoint,
}

impl BoxDomain {
    pub fn new(
        outer_lo: GroupPoint,
        outer_hi: GroupPoint,
        inner_lo: GroupPoint,
        inner_hi: GroupPoint,
    ) -> Result<Self, HolderError> {
        let d = outer_lo.dimension();
        for p in [&outer_hi, &inner_lo, &inner_hi] {
            if p.dimension() != d {
                return Err(HolderError::Dimension {
                    expected: d,
                    got: p.dimension(),
                });
            }
        }
        let corners = [&outer_lo, &outer_hi, &inner_lo, &inner_hi];
        if corners
            .iter()
            .any(|p| !p.t.is_finite() || p.x.iter().any(|v| !v.is_finite()))
        {
            return Err(HolderError::InvalidBox);
        }
        let ordered = |lo: f64, hi: f64| lo <= hi;
        let strict = |a: f64, b: f64| a < b;
        let mut ok = ordered(inner_lo.t, inner_hi.t)
            && strict(outer_lo.t, inner_lo.t)
            && strict(inner_hi.t, outer_hi.t);
        for i in 0..d {
            ok = ok
                && ordered(inner_lo.x[i], inner_hi.x[i])
                && strict(outer_lo.x[i], inner_lo.x[i])
                && strict(inner_hi.x[i], outer_hi.x[i]);
        }
        if !ok {
            return Err(HolderError::InvalidBox);
        }
        Ok(Self {
            outer_lo,
            outer_hi,
            inner_lo,
            inner_hi,
        })
    }

    pub fn dimension(&self) -> usize {
        self.outer_lo.dimension()
    }

    pub fn outer_contains(&self, z: &GroupPoint) -> bool {
        if z.t < self.outer_lo.t || z.t > self.outer_hi.t {
            return false;
        }
        (0..self.dimension()).all(|i| z.x[i] >= self.outer_lo.x[i] && z.x[i] <= self.outer_hi.x[i])
    }

    pub fn inner_corners(&self) -> (&GroupPoint, &GroupPoint) {
        (&self.inner_lo, &self.inner_hi)
    }

    /// Uniform grid of the inner box closure with `subdivisions` intervals
    /// per axis (so `subdivisions + 1` points, endpoints included).
    fn inner_grid(&self, subdivisions: usize) -> Vec<GroupPoint> {
        let d = self.dimension();
        let n = subdivisions.max(1);
        let coord = |lo: f64, hi: f64, idx: usize| lo + (hi - lo) * idx as f64 / n as f64;
        let mut points = Vec::new();
        let mut counter = vec![0usize; d + 1];
        loop {
            let t = coord(self.inner_lo.t, self.inner_hi.t, counter[0]);
            let x = nalgebra::DVector::from_fn(d, |i, _| {
                coord(self.inner_lo.x[i], self.inner_hi.x[i], counter[i + 1])
            });
            points.push(GroupPoint::new(t, x));
            let mut axis = 0;
            loop {
                counter[axis] += 1;
                if counter[axis] <= n {
                    break;
                }
                counter[axis] = 0;
                axis += 1;
                if axis > d {
                    return points;
                }
            }
        }
    }
}

/// Largest `δ̄ ≤ 1` such that every canonical curve `e^{±δX_i}(z)`,
/// `e^{±δY}(z)` stays inside the outer box for `δ ≤ δ̄`, by bisection on
/// the sampled membership predicate.
pub fn delta_z(
    z: &GroupPoint,
    domain: &BoxDomain,
    s: &KolmogorovStructure,
) -> Result<f64, HolderError> {
    if z.dimension() != s.dimension() || domain.dimension() != s.dimension() {
        return Err(HolderError::Dimension {
            expected: s.dimension(),
            got: z.dimension(),
        });
    }
    if !domain.outer_contains(z) {
        return Err(HolderError::OutsideDomain);
    }
    let admissible = |dbar: f64| -> bool {
        let p0 = s.block_size(0);
        // Straight segments: endpoint membership suffices by convexity.
        for i in 0..p0 {
            for sign in [1.0, -1.0] {
                let mut w = z.clone();
                w.x[i] += sign * dbar;
                if !domain.outer_contains(&w) {
                    return false;
                }
            }
        }
        // Flow of Y: march sub-steps of e^{±δB} and test each sample.
        for sign in [1.0f64, -1.0] {
            let step = sign * dbar / CURVE_SAMPLES as f64;
            let e = exp_b(step, s);
            let mut x = z.x.clone();
            let mut t = z.t;
            for _ in 0..CURVE_SAMPLES {
                x = &e * x;
                t += step;
                let w = GroupPoint::new(t, x.clone());
                if !domain.outer_contains(&w) {
                    return false;
                }
            }
        }
        true
    };
    if admissible(1.0) {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if admissible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// `δ_{Ω₀}`: the minimum of `δ_z` over a fixed grid of the inner box
/// closure. A grid approximation from above of the true minimum.
pub fn delta_omega0(domain: &BoxDomain, s: &KolmogorovStructure) -> Result<f64, HolderError> {
    let mut min = 1.0f64;
    for z in domain.inner_grid(DOMAIN_GRID - 1) {
        min = min.min(delta_z(&z, domain, s)?);
    }
    Ok(min)
}

/// Where a seminorm sweep attained its supremum.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgMax {
    pub point: GroupPoint,
    pub delta: f64,
    pub field: Field,
}

/// Result of a seminorm sweep. The value is a grid supremum, hence a lower
/// bound of the true seminorm.
#[derive(Debug, Clone, PartialEq)]
pub struct SeminormReport {
    pub value: f64,
    pub argmax: Option<ArgMax>,
    pub grid: usize,
    pub delta_omega0: f64,
}

/// Supremum of the single-field Hölder quotient of Eq. form
/// `|u(e^{δF}z) - u(z)| / |δ|^α` (exponent `α/2` along `Y`) over the inner
/// grid and a two-sided logarithmic step sweep.
pub fn field_seminorm(
    u: &DerivativeOracle,
    domain: &BoxDomain,
    field: Field,
    alpha: f64,
    grid: usize,
    s: &KolmogorovStructure,
) -> Result<SeminormReport, HolderError> {
    let max_alpha = match field {
        Field::X(_) => 1.0,
        Field::Y => 2.0,
    };
    if !(alpha > 0.0 && alpha <= max_alpha) {
        return Err(HolderError::AlphaRange {
            alpha,
            max: max_alpha,
        });
    }
    if let Field::X(i) = field {
        if i >= s.block_size(0) {
            return Err(HolderError::Dimension {
                expected: s.block_size(0),
                got: i,
            });
        }
    }
    let exponent = match field {
        Field::X(_) => alpha,
        Field::Y => alpha / 2.0,
    };
    let d0 = delta_omega0(domain, s)?;
    let mut best: Option<(f64, GroupPoint, f64)> = None;
    for z in domain.inner_grid(grid) {
        let uz = u.eval(&z);
        for j in 0..DELTA_GRID {
            let magnitude =
                d0 * DELTA_SPAN.powf((DELTA_GRID - 1 - j) as f64 / (DELTA_GRID - 1) as f64);
            for sign in [1.0, -1.0] {
                let delta = sign * magnitude;
                let w = match field {
                    Field::X(i) => {
                        let mut w = z.clone();
                        w.x[i] += delta;
                        w
                    }
                    Field::Y => GroupPoint::new(z.t + delta, exp_b(delta, s) * &z.x),
                };
                let quotient = (u.eval(&w) - uz).abs() / magnitude.powf(exponent);
                if best.as_ref().is_none_or(|(b, _, _)| quotient > *b) {
                    best = Some((quotient, z.clone(), delta));
                }
            }
        }
    }
    let (value, point, delta) = best.expect("grid is never empty");
    Ok(SeminormReport {
        value,
        argmax: Some(ArgMax {
            point,
            delta,
            field,
        }),
        grid,
        delta_omega0: d0,
    })
}

fn combine(reports: Vec<SeminormReport>) -> SeminormReport {
    let mut value = 0.0;
    let mut argmax: Option<(f64, ArgMax)> = None;
    let mut grid = 0;
    let mut d0 = 1.0f64;
    for r in reports {
        value += r.value;
        grid = grid.max(r.grid);
        d0 = d0.min(r.delta_omega0);
        if let Some(a) = r.argmax {
            if argmax.as_ref().is_none_or(|(v, _)| r.value > *v) {
                argmax = Some((r.value, a));
            }
        }
    }
    SeminormReport {
        value,
        argmax: argmax.map(|(_, a)| a),
        grid,
        delta_omega0: d0,
    }
}

/// Recursive anisotropic seminorm of order `k`:
///
/// * `k = 0` — sum of the single-field seminorms at exponent `α`;
/// * `k = 1` — `Y`-seminorm at exponent `1 + α` plus the order-0 seminorms
///   of every `∂_{x_i} u`;
/// * `k ≥ 2` — recursion on `Yu` at `k - 2` and on `∂_{x_i} u` at `k - 1`,
///   with the derivative functions derived from the oracle.
pub fn holder_seminorm(
    u: &DerivativeOracle,
    domain: &BoxDomain,
    k: u32,
    alpha: f64,
    grid: usize,
    s: &KolmogorovStructure,
) -> Result<SeminormReport, HolderError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(HolderError::AlphaRange { alpha, max: 1.0 });
    }
    if u.max_degree() < k {
        return Err(HolderError::InsufficientRegularity {
            declared: u.max_degree(),
            required: k,
        });
    }
    let p0 = s.block_size(0);
    match k {
        0 => {
            let mut parts = vec![field_seminorm(u, domain, Field::Y, alpha, grid, s)?];
            for i in 0..p0 {
                parts.push(field_seminorm(u, domain, Field::X(i), alpha, grid, s)?);
            }
            Ok(combine(parts))
        }
        1 => {
            let mut parts = vec![field_seminorm(u, domain, Field::Y, 1.0 + alpha, grid, s)?];
            for i in 0..p0 {
                let du = derivative_oracle_dx(u, i, s);
                parts.push(holder_seminorm(&du, domain, 0, alpha, grid, s)?);
            }
            Ok(combine(parts))
        }
        _ => {
            let yu = derivative_oracle_y(u, s);
            let mut parts = vec![holder_seminorm(&yu, domain, k - 2, alpha, grid, s)?];
            for i in 0..p0 {
                let du = derivative_oracle_dx(u, i, s);
                parts.push(holder_seminorm(&du, domain, k - 1, alpha, grid, s)?);
            }
            Ok(combine(parts))
        }
    }
}

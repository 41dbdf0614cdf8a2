//! Integral curves and the connectivity construction for two-block
//! structures.
//!
//! An increment in the first spatial block is a straight flow along the
//! `X_i`. Reaching the deeper block takes a commutator-like loop: the curve
//! `γ` composes five segments (`X`-translation, `Y`-flow, back, back, and a
//! cubic `X`-correction), producing `δ³ B_{1,0} v` in the deep block plus a
//! fifth-order spill-over; the curve `g` appends one more `X`-translation
//! that cancels the spill-over in the time and first-block components
//! exactly. Solving `g_{v,δ}(z) = (t, x, y + η)` reduces to the algebraic
//! equation `δ³ R(δ, v) = η` with `R(δ, v) = M(δ) v` linear in `v`, which a
//! fixed-point iteration on `w = δ³ v` settles in a few steps.

use nalgebra::{DMatrix, DVector};
// Backs f64 math methods in no_std builds; shadowed by inherent methods under test.
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::calculus::Field;
use crate::group::{exp_b, phi1, phi2, GroupPoint};
use crate::structure::KolmogorovStructure;

/// Convergence threshold of the fixed-point iteration on `w = δ³v`.
pub const SOLVER_TOL: f64 = 1e-12;
/// Iteration cap of the fixed-point solver.
pub const SOLVER_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConnectError {
    #[error("operation requires a two-block structure, got {blocks} blocks")]
    NotRankOne { blocks: usize },
    #[error("field index {index} out of range, structure has {p0} first-block fields")]
    FieldIndex { index: usize, p0: usize },
    #[error("expected {expected} entries, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("target increment norm {eta_norm} exceeds the admissible bound {bound}")]
    EpsilonExceeded { eta_norm: f64, bound: f64 },
    #[error("fixed-point iteration did not reach {SOLVER_TOL} within {iterations} steps")]
    NoConvergence { iterations: usize },
}

/// Outcome of the connectivity solver: `g_{v,δ}` moves `z` to
/// `(t, x, y + η)` up to `residual`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionResult {
    pub delta: f64,
    pub v: DVector<f64>,
    pub residual: f64,
    pub iterations: usize,
}

fn require_two_blocks(s: &KolmogorovStructure) -> Result<(), ConnectError> {
    if s.block_count() != 2 {
        return Err(ConnectError::NotRankOne {
            blocks: s.block_count(),
        });
    }
    Ok(())
}

fn check_dim(s: &KolmogorovStructure, z: &GroupPoint) -> Result<(), ConnectError> {
    if z.dimension() != s.dimension() {
        return Err(ConnectError::Dimension {
            expected: s.dimension(),
            got: z.dimension(),
        });
    }
    Ok(())
}

/// Integral curve of a canonical field: `e^{δX_i}(t,x) = (t, x + δe_i)`,
/// `e^{δY}(t,x) = (t + δ, e^{δB}x)`.
pub fn flow(
    z: &GroupPoint,
    field: Field,
    delta: f64,
    s: &KolmogorovStructure,
) -> Result<GroupPoint, ConnectError> {
    check_dim(s, z)?;
    match field {
        Field::X(i) => {
            let p0 = s.block_size(0);
            if i >= p0 {
                return Err(ConnectError::FieldIndex { index: i, p0 });
            }
            let mut x = z.x.clone();
            x[i] += delta;
            Ok(GroupPoint::new(z.t, x))
        }
        Field::Y => Ok(GroupPoint::new(z.t + delta, exp_b(delta, s) * &z.x)),
    }
}

/// Straight translation in the first block: `(t, x, y) ↦ (t, x + δv, y)`.
pub fn gamma0(
    z: &GroupPoint,
    v: &DVector<f64>,
    delta: f64,
    s: &KolmogorovStructure,
) -> Result<GroupPoint, ConnectError> {
    check_dim(s, z)?;
    let p0 = s.block_size(0);
    if v.len() != p0 {
        return Err(ConnectError::Dimension {
            expected: p0,
            got: v.len(),
        });
    }
    let mut x = z.x.clone();
    for i in 0..p0 {
        x[i] += delta * v[i];
    }
    Ok(GroupPoint::new(z.t, x))
}

/// The five-segment curve, evaluated by composing flows:
/// `γ⁰_{B₀₀v, -δ³} ∘ e^{-δ²Y} ∘ γ⁰_{v, -δ} ∘ e^{δ²Y} ∘ γ⁰_{v, δ}`.
pub fn gamma(
    z: &GroupPoint,
    v: &DVector<f64>,
    delta: f64,
    s: &KolmogorovStructure,
) -> Result<GroupPoint, ConnectError> {
    let d2 = delta * delta;
    let z1 = gamma0(z, v, delta, s)?;
    let z2 = flow(&z1, Field::Y, d2, s)?;
    let z3 = gamma0(&z2, v, -delta, s)?;
    let z4 = flow(&z3, Field::Y, -d2, s)?;
    let b00v = s.block(0, 0) * v;
    gamma0(&z4, &b00v, -delta * d2, s)
}

/// Closed form of the same curve:
/// `(t, x) + δ³ (0, Bṽ - (B₀₀v, 0)) - δ⁵ (0, φ₂(-δ²B) B² ṽ)` with
/// `ṽ = (v, 0, …)`. Must agree with [`gamma`] to rounding.
pub fn gamma_closed_form(
    z: &GroupPoint,
    v: &DVector<f64>,
    delta: f64,
    s: &KolmogorovStructure,
) -> Result<GroupPoint, ConnectError> {
    check_dim(s, z)?;
    let d = s.dimension();
    let p0 = s.block_size(0);
    if v.len() != p0 {
        return Err(ConnectError::Dimension {
            expected: p0,
            got: v.len(),
        });
    }
    let mut vtilde = DVector::zeros(d);
    for i in 0..p0 {
        vtilde[i] = v[i];
    }
    let b = s.matrix();
    let bv = b * &vtilde;
    let correction = phi2(&(b * (-delta * delta))) * (b * &bv);

    let mut x = z.x.clone();
    let d3 = delta * delta * delta;
    let d5 = d3 * delta * delta;
    for i in p0..d {
        x[i] += d3 * bv[i];
    }
    x -= d5 * correction;
    Ok(GroupPoint::new(z.t, x))
}

/// The corrected curve `g_{v,δ} = γ⁰_{v',δ⁵} ∘ γ_{v,δ}` with
/// `v' = [B² φ₂(-δ²B)]₀₀ v`; its time and first-block components cancel.
pub fn g_curve(
    z: &GroupPoint,
    v: &DVector<f64>,
    delta: f64,
    s: &KolmogorovStructure,
) -> Result<GroupPoint, ConnectError> {
    let base = gamma(z, v, delta, s)?;
    let p0 = s.block_size(0);
    let b = s.matrix();
    let m = phi2(&(b * (-delta * delta))) * (b * b);
    let vprime = m.view((0, 0), (p0, p0)) * v;
    gamma0(&base, &vprime, delta.powi(5), s)
}

/// The linear map `M(δ)` with `M(δ)v = R(δ,v) = Σ_n (-1)^n δ^{2n}
/// B^{n+1}_{1,0} v / (n+1)!`, the bottom-left block of `φ₁(-δ²B)·B`.
pub fn remainder_map(delta: f64, s: &KolmogorovStructure) -> Result<DMatrix<f64>, ConnectError> {
    require_two_blocks(s)?;
    let b = s.matrix();
    let full = phi1(&(b * (-delta * delta))) * b;
    let p0 = s.block_size(0);
    let p1 = s.block_size(1);
    Ok(full.view((p0, 0), (p1, p0)).clone_owned())
}

fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Conservative admissible radius for the deep-block increment: the largest
/// `δ̄ ≤ 1` (bisection, 40 steps) keeping `σ_min(M(δ'))` above
/// `σ_min(B₁₀)/2` on a 64-point grid of `[0, δ̄]`, returned as
/// `ε = δ̄³ σ_min(B₁₀)/2`.
pub fn epsilon_bound(s: &KolmogorovStructure) -> Result<f64, ConnectError> {
    require_two_blocks(s)?;
    let sigma = smallest_singular_value(&s.block(1, 0));
    let ok = |dbar: f64| -> bool {
        (0..64).all(|i| {
            let dp = dbar * i as f64 / 63.0;
            let m = remainder_map(dp, s).expect("two-block checked");
            smallest_singular_value(&m) >= sigma / 2.0
        })
    };
    let dbar = if ok(1.0) {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    Ok(dbar.powi(3) * sigma / 2.0)
}

/// Solves `g_{v,δ}(z) = (t, x, y + η)` for `|v| = 1` and `δ ≥ 0`.
///
/// The unknown is compressed to `w = δ³v`, restricted to the row space of
/// `B₁₀` (spanned by its leading right singular vectors), where `M(δ)` is
/// square and invertible for small `δ`; the fixed point
/// `w ← M(|w|^{1/3})⁻¹ η` starts from the `B₁₀` pseudo-solution.
pub fn connect_y(
    z: &GroupPoint,
    eta: &DVector<f64>,
    s: &KolmogorovStructure,
) -> Result<ConnectionResult, ConnectError> {
    require_two_blocks(s)?;
    check_dim(s, z)?;
    let p0 = s.block_size(0);
    let p1 = s.block_size(1);
    if eta.len() != p1 {
        return Err(ConnectError::Dimension {
            expected: p1,
            got: eta.len(),
        });
    }
    let bound = epsilon_bound(s)?;
    let eta_norm = eta.norm();
    if eta_norm > bound {
        return Err(ConnectError::EpsilonExceeded { eta_norm, bound });
    }

    // Row-space basis of B₁₀: the p1 leading right singular vectors.
    let b10 = s.block(1, 0);
    let svd = b10.clone().svd(true, true);
    let v_basis = svd.v_t.as_ref().expect("requested").transpose(); // p0 × p1

    if eta_norm == 0.0 {
        let v = v_basis.column(0).clone_owned();
        let reached = g_curve(z, &v, 0.0, s)?;
        return Ok(ConnectionResult {
            delta: 0.0,
            v,
            residual: reached.max_diff(z),
            iterations: 0,
        });
    }

    let solve = |delta: f64| -> Option<DVector<f64>> {
        let m = remainder_map(delta, s).ok()?;
        (m * &v_basis).lu().solve(eta)
    };

    let mut c = solve(0.0).ok_or(ConnectError::NoConvergence { iterations: 0 })?;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let delta = c.norm().cbrt();
        let next = solve(delta).ok_or(ConnectError::NoConvergence { iterations })?;
        let step = (&next - &c).norm();
        c = next;
        if step <= SOLVER_TOL {
            break;
        }
        if iterations >= SOLVER_MAX_ITER {
            return Err(ConnectError::NoConvergence { iterations });
        }
    }

    let w = &v_basis * &c;
    let delta = w.norm().cbrt();
    let v = &w / w.norm();

    let mut target = z.clone();
    for i in 0..p1 {
        target.x[p0 + i] += eta[i];
    }
    let reached = g_curve(z, &v, delta, s)?;
    let mut sq = (reached.t - target.t) * (reached.t - target.t);
    for i in 0..s.dimension() {
        let diff = reached.x[i] - target.x[i];
        sq += diff * diff;
    }
    Ok(ConnectionResult {
        delta,
        v,
        residual: sq.sqrt(),
        iterations,
    })
}

/// Log-log fit helper for the deep-block landing bound `|δ| ≤ c|η|^{1/3}`:
/// explicit constant `c = 2 σ_min(B₁₀)^{-1/3}`.
pub fn delta_bound(eta_norm: f64, s: &KolmogorovStructure) -> Result<f64, ConnectError> {
    require_two_blocks(s)?;
    let sigma = smallest_singular_value(&s.block(1, 0));
    Ok(2.0 * (eta_norm / sigma).cbrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    fn k1() -> KolmogorovStructure {
        KolmogorovStructure::new(dmatrix![0.0, 0.0; 1.0, 0.0], &[1, 1]).unwrap()
    }

    fn k2() -> KolmogorovStructure {
        KolmogorovStructure::new(dmatrix![1.0, 0.0; 1.0, 0.0], &[1, 1]).unwrap()
    }

    fn three_block() -> KolmogorovStructure {
        let m = dmatrix![
            0.0, 0.0, 0.0;
            1.0, 0.0, 0.0;
            0.0, 1.0, 0.0
        ];
        KolmogorovStructure::new(m, &[1, 1, 1]).unwrap()
    }

    #[test]
    fn flow_examples() {
        let s = k1();
        let z = GroupPoint::from_coords(&[0.3, 1.0, -0.5]);
        assert_eq!(flow(&z, Field::X(0), 0.0, &s).unwrap(), z);

        let start = GroupPoint::from_coords(&[0.0, 1.0, 0.0]);
        let moved = flow(&start, Field::Y, 1.0, &s).unwrap();
        assert_relative_eq!(moved.t, 1.0);
        assert_relative_eq!(moved.x[0], 1.0);
        assert_relative_eq!(moved.x[1], 1.0);

        assert!(matches!(
            flow(&z, Field::X(1), 0.1, &s),
            Err(ConnectError::FieldIndex { index: 1, p0: 1 })
        ));
    }

    #[test]
    fn y_flow_is_a_semigroup() {
        for s in [k1(), k2()] {
            let z = GroupPoint::from_coords(&[0.2, 0.7, -1.1]);
            for (a, b) in [(0.3, 0.5), (-0.8, 0.2), (1.0, -1.0)] {
                let two_step = flow(&flow(&z, Field::Y, a, &s).unwrap(), Field::Y, b, &s).unwrap();
                let one_step = flow(&z, Field::Y, a + b, &s).unwrap();
                assert!(two_step.max_diff(&one_step) <= 1e-12);
            }
        }
    }

    #[test]
    fn gamma0_examples() {
        let s = k1();
        let z = GroupPoint::from_coords(&[0.0, 1.0, 1.0]);
        let v = dvector![1.0];
        assert_eq!(gamma0(&z, &v, 0.0, &s).unwrap(), z);
        let moved = gamma0(&z, &v, 2.0, &s).unwrap();
        assert_eq!(moved.coords(), vec![0.0, 3.0, 1.0]);
        let back = gamma0(&moved, &v, -2.0, &s).unwrap();
        assert!(back.max_diff(&z) <= 1e-15);
    }

    #[test]
    fn gamma_nilpotent_is_exact_cubic() {
        // B² = 0 kills the fifth-order correction entirely.
        let s = k1();
        let z = GroupPoint::from_coords(&[0.4, -0.7, 0.2]);
        let v = dvector![1.0];
        let out = gamma(&z, &v, 0.1, &s).unwrap();
        assert_relative_eq!(out.t, z.t);
        assert_relative_eq!(out.x[0], z.x[0], epsilon = 1e-15);
        assert_relative_eq!(out.x[1], z.x[1] + 1e-3, epsilon = 1e-15);

        let closed = gamma_closed_form(&z, &v, 0.1, &s).unwrap();
        assert!(out.max_diff(&closed) <= 1e-14);
    }

    #[test]
    fn gamma_paths_agree() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for s in [k1(), k2()] {
            let zero = GroupPoint::from_coords(&[0.2, 0.1, -0.3]);
            let v = dvector![1.0];
            assert_eq!(gamma(&zero, &v, 0.0, &s).unwrap(), zero);
            for _ in 0..200 {
                let z = GroupPoint::from_coords(&[
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ]);
                let v = dvector![if rng.random_range(0.0..1.0) < 0.5 {
                    -1.0
                } else {
                    1.0
                }];
                let delta = rng.random_range(-0.5..0.5);
                let by_flows = gamma(&z, &v, delta, &s).unwrap();
                let closed = gamma_closed_form(&z, &v, delta, &s).unwrap();
                assert!(by_flows.max_diff(&closed) <= 1e-12);
            }
        }
    }

    #[test]
    fn g_curve_cancels_time_and_first_block() {
        let s = k2();
        let z = GroupPoint::from_coords(&[0.3, 0.8, -0.4]);
        let v = dvector![1.0];
        assert_eq!(g_curve(&z, &v, 0.0, &s).unwrap(), z);
        let out = g_curve(&z, &v, 0.2, &s).unwrap();
        assert!((out.t - z.t).abs() <= 1e-12);
        assert!((out.x[0] - z.x[0]).abs() <= 1e-12);
        assert!((out.x[1] - z.x[1]).abs() > 1e-5);

        // On the nilpotent structure the correction vanishes and g = γ.
        let s1 = k1();
        let g = g_curve(&z, &v, 0.2, &s1).unwrap();
        let plain = gamma(&z, &v, 0.2, &s1).unwrap();
        assert!(g.max_diff(&plain) <= 1e-15);
    }

    #[test]
    fn remainder_map_examples() {
        let s1 = k1();
        assert_relative_eq!(remainder_map(0.0, &s1).unwrap()[(0, 0)], 1.0);
        for delta in [0.1, 0.5, 1.0] {
            assert_relative_eq!(
                remainder_map(delta, &s1).unwrap()[(0, 0)],
                1.0,
                epsilon = 1e-14
            );
        }

        let s2 = k2();
        assert_relative_eq!(remainder_map(0.0, &s2).unwrap()[(0, 0)], 1.0);
        // Closed form (1 - e^{-δ²})/δ² for the idempotent matrix, checked
        // against a plain 50-term series sum.
        let delta: f64 = 0.5;
        let expected = (1.0 - (-0.25f64).exp()) / 0.25;
        let mut series = 0.0;
        let mut term = 1.0;
        for n in 0..50u32 {
            if n > 0 {
                term *= -(delta * delta);
            }
            series += term / crate::structure::factorial(n + 1);
        }
        assert_relative_eq!(series, expected, epsilon = 1e-14);
        assert_relative_eq!(
            remainder_map(delta, &s2).unwrap()[(0, 0)],
            expected,
            epsilon = 1e-13
        );

        assert!(matches!(
            remainder_map(0.1, &three_block()),
            Err(ConnectError::NotRankOne { blocks: 3 })
        ));
    }

    #[test]
    fn epsilon_bound_examples() {
        // M ≡ 1 on the nilpotent structure, so δ̄ = 1 and ε = 1/2.
        assert_relative_eq!(epsilon_bound(&k1()).unwrap(), 0.5);
        // On the idempotent structure M(δ) = (1-e^{-δ²})/δ² stays above
        // 1/2 on [0,1] (M(1) ≈ 0.632), so the rule again gives 1/2.
        assert_relative_eq!(epsilon_bound(&k2()).unwrap(), 0.5, epsilon = 1e-12);
        assert!(epsilon_bound(&k2()).unwrap() > 0.0);
    }

    #[test]
    fn connect_zero_increment() {
        let s = k1();
        let z = GroupPoint::from_coords(&[0.1, 0.2, 0.3]);
        let res = connect_y(&z, &dvector![0.0], &s).unwrap();
        assert_eq!(res.delta, 0.0);
        assert_eq!(res.iterations, 0);
        assert!(res.residual <= 1e-15);
        assert_relative_eq!(res.v.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn connect_nilpotent_is_exact_cube_root() {
        let s = k1();
        let z = GroupPoint::from_coords(&[0.0, 0.0, 0.0]);
        let res = connect_y(&z, &dvector![0.001], &s).unwrap();
        assert_relative_eq!(res.delta, 0.1, epsilon = 1e-14);
        assert_relative_eq!(res.v[0], 1.0, epsilon = 1e-14);
        assert!(res.residual <= 1e-12);

        // Scaling law: dividing η by 8 halves δ exactly.
        let res8 = connect_y(&z, &dvector![0.001 / 8.0], &s).unwrap();
        assert!((res8.delta - res.delta / 2.0).abs() <= 1e-12);
    }

    #[test]
    fn connect_idempotent_matches_bisection_oracle() {
        let s = k2();
        let z = GroupPoint::from_coords(&[0.2, -0.1, 0.4]);
        let eta = 1e-6;

        // Independent oracle: bisection on δ ↦ δ³ (1-e^{-δ²})/δ² - η.
        let f = |delta: f64| delta * (1.0 - (-delta * delta).exp()) - eta;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);

        let res = connect_y(&z, &dvector![eta], &s).unwrap();
        assert!((res.delta - oracle).abs() <= 1e-12, "δ = {}", res.delta);
        assert_relative_eq!(res.v[0], 1.0, epsilon = 1e-12);
        assert!(res.residual <= 1e-12);
        // Frozen regression value from the oracle.
        assert_relative_eq!(oracle, 1.0000166664e-2, epsilon = 1e-9);
    }

    #[test]
    fn connect_rejects_large_increment() {
        let s = k1();
        let z = GroupPoint::origin(2);
        assert!(matches!(
            connect_y(&z, &dvector![0.75], &s),
            Err(ConnectError::EpsilonExceeded { .. })
        ));
    }

    #[test]
    fn connect_requires_two_blocks() {
        let s = three_block();
        let z = GroupPoint::origin(3);
        assert!(matches!(
            connect_y(&z, &dvector![0.1], &s),
            Err(ConnectError::NotRankOne { .. })
        ));
    }

    #[test]
    fn landing_bound_holds_randomized() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for s in [k1(), k2()] {
            let eps = epsilon_bound(&s).unwrap();
            for _ in 0..100 {
                let z = GroupPoint::from_coords(&[
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.5..0.5),
                ]);
                let eta_val = rng.random_range(-0.5 * eps..0.5 * eps);
                let res = connect_y(&z, &dvector![eta_val], &s).unwrap();
                assert!(res.residual <= 1e-10, "residual {}", res.residual);
                let cap = delta_bound(eta_val.abs(), &s).unwrap();
                assert!(res.delta <= cap, "δ {} > bound {}", res.delta, cap);
            }
        }
    }
}

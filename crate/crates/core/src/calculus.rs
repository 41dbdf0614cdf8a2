//! Lie derivatives along the canonical fields, mixed derivatives
//! `Y^k ∂^β`, enumeration of weighted terms and the intrinsic Taylor
//! polynomial.
//!
//! Derivatives are taken in a fixed order: the Euclidean multi-derivative
//! `∂^β` innermost, the Lie derivative `Y^k` outermost. The two need not
//! commute, so the order matters. Finite-difference fallbacks use central
//! stencils along coordinate directions and along the flow of `Y`, with
//! Richardson extrapolation; the step for a derivative of total order
//! `q = k + |β|` is `h^{1/q}`, which keeps the rounding amplification
//! `ε / h_eff^q` flat across orders.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

// Backs f64 math methods in no_std builds; shadowed by inherent methods under test.
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::group::{exp_b, GroupPoint};
use crate::structure::{factorial, KolmogorovStructure, MultiIndex, StructureError};

/// Smallest admissible finite-difference step; stencils whose finest level
/// would fall below it are rejected.
pub const MIN_FD_STEP: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalculusError {
    #[error("function evaluation produced a non-finite value")]
    Evaluation,
    #[error("finite-difference step {step} underflows the floor {MIN_FD_STEP}")]
    StepUnderflow { step: f64 },
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// One of the canonical vector fields: `X_i = ∂_{x_i}` for `i < p_0`
/// (zero-based), or the drift field `Y = ⟨Bx, ∇_x⟩ + ∂_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    X(usize),
    Y,
}

type EvalFn = dyn Fn(&GroupPoint) -> f64 + Send + Sync;
type ExactFn = dyn Fn(usize, &[u32], &GroupPoint) -> Option<f64> + Send + Sync;

/// A scalar function on the group with optional exact mixed derivatives.
///
/// When `exact` is present and returns a value for `(k, β)`, it is used;
/// otherwise the calculus falls back to nested central differences. The
/// declared `max_degree` is the largest weighted order `n` for which the
/// function promises `C^{n,α}`-type regularity; the regularity cannot be
/// inferred from evaluations, so experiments check it up front.
#[derive(Clone)]
pub struct DerivativeOracle {
    eval: Arc<EvalFn>,
    exact: Option<Arc<ExactFn>>,
    fd_step: f64,
    richardson_levels: Option<usize>,
    max_degree: u32,
}

impl core::fmt::Debug for DerivativeOracle {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("DerivativeOracle")
            .field("exact", &self.exact.is_some())
            .field("fd_step", &self.fd_step)
            .field("richardson_levels", &self.richardson_levels)
            .field("max_degree", &self.max_degree)
            .finish()
    }
}

impl DerivativeOracle {
    pub fn from_fn(f: impl Fn(&GroupPoint) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(f),
            exact: None,
            fd_step: 1e-5,
            richardson_levels: None,
            max_degree: u32::MAX,
        }
    }

    /// Attaches exact mixed derivatives `(k, β, z) ↦ Y^k ∂^β u(z)`;
    /// returning `None` for a pair falls back to finite differences.
    pub fn with_exact(
        mut self,
        g: impl Fn(usize, &[u32], &GroupPoint) -> Option<f64> + Send + Sync + 'static,
    ) -> Self {
        self.exact = Some(Arc::new(g));
        self
    }

    /// Base step for first derivatives (default `1e-5`).
    pub fn with_fd_step(mut self, h: f64) -> Self {
        assert!(h > 0.0, "finite-difference step must be positive");
        self.fd_step = h;
        self
    }

    /// Fixes the number of Richardson extrapolation levels (0 = plain
    /// central stencil). By default the level adapts to the derivative
    /// order.
    pub fn with_richardson_levels(mut self, levels: usize) -> Self {
        self.richardson_levels = Some(levels);
        self
    }

    /// Declares the highest weighted order this function supports.
    pub fn with_max_degree(mut self, n: u32) -> Self {
        self.max_degree = n;
        self
    }

    /// Drops the exact-derivative table, forcing finite differences.
    pub fn without_exact(mut self) -> Self {
        self.exact = None;
        self
    }

    pub fn eval(&self, z: &GroupPoint) -> f64 {
        (self.eval)(z)
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub(crate) fn exact_value(&self, k: usize, beta: &[u32], z: &GroupPoint) -> Option<f64> {
        self.exact.as_ref()?(k, beta, z)
    }
}

/// The function `∂_{x_i} u` as an oracle of its own: evaluation goes
/// through the parent's exact table when possible, and exact derivatives
/// shift the spatial multi-index, since `Y^k ∂^β (∂_i u) = Y^k ∂^{β+e_i} u`.
pub fn derivative_oracle_dx(
    u: &DerivativeOracle,
    i: usize,
    s: &KolmogorovStructure,
) -> DerivativeOracle {
    assert!(i < s.dimension(), "coordinate index out of range");
    let parent = u.clone();
    let parent_exact = u.clone();
    let s_eval = s.clone();
    let mut entries = vec![0u32; s.dimension()];
    entries[i] = 1;
    let beta = MultiIndex::new(entries, s).expect("dimension fixed");
    DerivativeOracle {
        eval: Arc::new(move |z: &GroupPoint| {
            mixed_derivative(&parent, z, 0, &beta, &s_eval).unwrap_or(f64::NAN)
        }),
        exact: Some(Arc::new(move |k, b: &[u32], z: &GroupPoint| {
            let mut nb = b.to_vec();
            nb[i] += 1;
            parent_exact.exact_value(k, &nb, z)
        })),
        fd_step: u.fd_step,
        richardson_levels: u.richardson_levels,
        max_degree: u.max_degree.saturating_sub(1),
    }
}

/// The Lie derivative `Yu` as an oracle: exact values forward to
/// `Y^{k+1} u` when no spatial derivative is requested (the two do not
/// commute, so `∂^β (Yu)` falls back to finite differences).
pub fn derivative_oracle_y(u: &DerivativeOracle, s: &KolmogorovStructure) -> DerivativeOracle {
    let parent = u.clone();
    let parent_exact = u.clone();
    let s_eval = s.clone();
    DerivativeOracle {
        eval: Arc::new(move |z: &GroupPoint| {
            lie_derivative_y(&parent, z, &s_eval).unwrap_or(f64::NAN)
        }),
        exact: Some(Arc::new(move |k, b: &[u32], z: &GroupPoint| {
            if b.iter().all(|&e| e == 0) {
                parent_exact.exact_value(k + 1, b, z)
            } else {
                None
            }
        })),
        fd_step: u.fd_step,
        richardson_levels: u.richardson_levels,
        max_degree: u.max_degree.saturating_sub(2),
    }
}

fn y_flow(z: &GroupPoint, delta: f64, s: &KolmogorovStructure) -> GroupPoint {
    GroupPoint::new(z.t + delta, exp_b(delta, s) * &z.x)
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut c = 1.0;
    for j in 0..k {
        c = c * (n - j) as f64 / (j + 1) as f64;
    }
    c
}

/// Central stencil for `∂^β u` at `base`, all coordinate steps equal to `h`.
fn partial_stencil(u: &DerivativeOracle, base: &GroupPoint, beta: &[u32], h: f64) -> f64 {
    // Cartesian product of the one-dimensional binomial stencils.
    let mut points: Vec<(GroupPoint, f64)> = vec![(base.clone(), 1.0)];
    let mut denom = 1.0;
    for (i, &m) in beta.iter().enumerate() {
        if m == 0 {
            continue;
        }
        let m = m as usize;
        denom *= (2.0 * h).powi(m as i32);
        let mut next = Vec::with_capacity(points.len() * (m + 1));
        for (p, w) in &points {
            for j in 0..=m {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                let mut q = p.clone();
                q.x[i] += (m as f64 - 2.0 * j as f64) * h;
                next.push((q, w * sign * binomial(m, j)));
            }
        }
        points = next;
    }
    points.iter().map(|(p, w)| w * u.eval(p)).sum::<f64>() / denom
}

/// Combined stencil for `Y^k (∂^β u)`: the spatial stencil is evaluated at
/// flow-shifted points `e^{δY} ζ` and differenced along the flow parameter.
fn mixed_stencil(
    u: &DerivativeOracle,
    zeta: &GroupPoint,
    k: usize,
    beta: &[u32],
    h: f64,
    s: &KolmogorovStructure,
) -> f64 {
    if k == 0 {
        return partial_stencil(u, zeta, beta, h);
    }
    let mut acc = 0.0;
    for j in 0..=k {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let delta = (k as f64 - 2.0 * j as f64) * h;
        let base = y_flow(zeta, delta, s);
        acc += sign * binomial(k, j) * partial_stencil(u, &base, beta, h);
    }
    acc / (2.0 * h).powi(k as i32)
}

fn default_levels(q: u32) -> usize {
    match q {
        0..=2 => 1,
        3 | 4 => 2,
        _ => 3,
    }
}

/// Finite-difference evaluation of `Y^k ∂^β u(ζ)` with Richardson
/// extrapolation over jointly halved steps.
fn fd_mixed_derivative(
    u: &DerivativeOracle,
    zeta: &GroupPoint,
    k: usize,
    beta: &[u32],
    s: &KolmogorovStructure,
) -> Result<f64, CalculusError> {
    let q = k as u32 + beta.iter().sum::<u32>();
    if q == 0 {
        let v = u.eval(zeta);
        return if v.is_finite() {
            Ok(v)
        } else {
            Err(CalculusError::Evaluation)
        };
    }
    let h_eff = u.fd_step.powf(1.0 / f64::from(q));
    let levels = u.richardson_levels.unwrap_or_else(|| default_levels(q));
    let finest = h_eff / 2f64.powi(levels as i32);
    if finest < MIN_FD_STEP {
        return Err(CalculusError::StepUnderflow { step: finest });
    }

    let mut table: Vec<f64> = (0..=levels)
        .map(|j| mixed_stencil(u, zeta, k, beta, h_eff / 2f64.powi(j as i32), s))
        .collect();
    for m in 1..=levels {
        let f = 4f64.powi(m as i32);
        for j in (m..=levels).rev() {
            table[j] = (f * table[j] - table[j - 1]) / (f - 1.0);
        }
    }
    let v = table[levels];
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CalculusError::Evaluation)
    }
}

/// Lie derivative `Yu(z)`, the derivative of `u` along `e^{δY}` at `δ = 0`.
pub fn lie_derivative_y(
    u: &DerivativeOracle,
    z: &GroupPoint,
    s: &KolmogorovStructure,
) -> Result<f64, CalculusError> {
    let beta = MultiIndex::zeros(s);
    mixed_derivative(u, z, 1, &beta, s)
}

/// Mixed derivative `Y^k ∂^β u(ζ)`: exact when the oracle provides it,
/// nested central differences otherwise.
pub fn mixed_derivative(
    u: &DerivativeOracle,
    zeta: &GroupPoint,
    k: usize,
    beta: &MultiIndex,
    s: &KolmogorovStructure,
) -> Result<f64, CalculusError> {
    if beta.entries().len() != s.dimension() {
        return Err(StructureError::Dimension {
            expected: s.dimension(),
            got: beta.entries().len(),
        }
        .into());
    }
    if let Some(v) = u.exact_value(k, beta.entries(), zeta) {
        return if v.is_finite() {
            Ok(v)
        } else {
            Err(CalculusError::Evaluation)
        };
    }
    fd_mixed_derivative(u, zeta, k, beta.entries(), s)
}

/// All pairs `(k, β)` with `2k + |β|_B ≤ n`, in lexicographic `(k, β)`
/// order, duplicate-free.
pub fn enumerate_terms(n: u32, s: &KolmogorovStructure) -> Vec<(usize, MultiIndex)> {
    let d = s.dimension();
    let mut out = Vec::new();
    for k in 0..=(n / 2) as usize {
        let budget = n as u64 - 2 * k as u64;
        let mut current = vec![0u32; d];
        enumerate_rec(s, 0, budget, &mut current, &mut |beta| {
            out.push((
                k,
                MultiIndex::new(beta.to_vec(), s).expect("dimension fixed"),
            ));
        });
    }
    out
}

fn enumerate_rec(
    s: &KolmogorovStructure,
    pos: usize,
    budget: u64,
    current: &mut [u32],
    emit: &mut impl FnMut(&[u32]),
) {
    if pos == current.len() {
        emit(current);
        return;
    }
    let w = u64::from(s.coordinate_weight(pos));
    let max = budget / w;
    for b in 0..=max {
        current[pos] = b as u32;
        enumerate_rec(s, pos + 1, budget - b * w, current, emit);
    }
    current[pos] = 0;
}

/// One term of an intrinsic Taylor expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorTerm {
    pub k: usize,
    pub beta: MultiIndex,
    /// `Y^k ∂^β u(ζ) / (k! β!)`
    pub coefficient: f64,
}

/// Coefficient table of the intrinsic Taylor polynomial of order `n`
/// centered at `ζ`, covering exactly the pairs with `2k + |β|_B ≤ n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorExpansion {
    center: GroupPoint,
    order: u32,
    terms: Vec<TaylorTerm>,
}

impl TaylorExpansion {
    pub fn center(&self) -> &GroupPoint {
        &self.center
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn terms(&self) -> &[TaylorTerm] {
        &self.terms
    }

    pub fn coefficient(&self, k: usize, beta: &[u32]) -> Option<f64> {
        self.terms
            .iter()
            .find(|t| t.k == k && t.beta.entries() == beta)
            .map(|t| t.coefficient)
    }

    /// Evaluates `Σ c_{k,β} (t-s)^k (x - e^{(t-s)B} ξ)^β` at `z`.
    pub fn eval(&self, z: &GroupPoint, s: &KolmogorovStructure) -> f64 {
        let dt = z.t - self.center.t;
        let w = &z.x - exp_b(dt, s) * &self.center.x;
        let mut acc = 0.0;
        for term in &self.terms {
            let mut v = term.coefficient * dt.powi(term.k as i32);
            for (i, &b) in term.beta.entries().iter().enumerate() {
                if b > 0 {
                    v *= w[i].powi(b as i32);
                }
            }
            acc += v;
        }
        acc
    }
}

/// Populates the Taylor coefficient table of `u` at `ζ` up to order `n`.
pub fn taylor_coefficients(
    u: &DerivativeOracle,
    zeta: &GroupPoint,
    n: u32,
    s: &KolmogorovStructure,
) -> Result<TaylorExpansion, CalculusError> {
    let mut terms = Vec::new();
    for (k, beta) in enumerate_terms(n, s) {
        let derivative = mixed_derivative(u, zeta, k, &beta, s)?;
        let coefficient = derivative / (factorial(k as u32) * beta.factorial());
        terms.push(TaylorTerm {
            k,
            beta,
            coefficient,
        });
    }
    Ok(TaylorExpansion {
        center: zeta.clone(),
        order: n,
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    fn k1() -> KolmogorovStructure {
        KolmogorovStructure::new(dmatrix![0.0, 0.0; 1.0, 0.0], &[1, 1]).unwrap()
    }

    fn k2() -> KolmogorovStructure {
        KolmogorovStructure::new(dmatrix![1.0, 0.0; 1.0, 0.0], &[1, 1]).unwrap()
    }

    #[test]
    fn lie_derivative_examples() {
        let s = k1();
        let constant = DerivativeOracle::from_fn(|_| 3.5);
        let z = GroupPoint::from_coords(&[0.2, -0.4, 0.9]);
        assert!(lie_derivative_y(&constant, &z, &s).unwrap().abs() <= 1e-10);

        // Y = ∂_t + x ∂_y on this structure, so Y(y) = x.
        let uy = DerivativeOracle::from_fn(|z| z.x[1]);
        let at = GroupPoint::from_coords(&[0.0, 2.0, 5.0]);
        assert_relative_eq!(lie_derivative_y(&uy, &at, &s).unwrap(), 2.0, epsilon = 1e-9);

        let ut = DerivativeOracle::from_fn(|z| z.t);
        assert_relative_eq!(
            lie_derivative_y(&ut, &at, &s).unwrap(),
            1.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn mixed_derivative_examples() {
        let s = k1();
        let u = DerivativeOracle::from_fn(|z| z.x[0] * z.x[1]);
        let zeta = GroupPoint::from_coords(&[0.0, 3.0, 7.0]);
        let zero = MultiIndex::zeros(&s);
        assert_relative_eq!(
            mixed_derivative(&u, &zeta, 0, &zero, &s).unwrap(),
            21.0,
            epsilon = 1e-12
        );
        let dx = MultiIndex::new(vec![1, 0], &s).unwrap();
        assert_relative_eq!(
            mixed_derivative(&u, &zeta, 0, &dx, &s).unwrap(),
            7.0,
            epsilon = 1e-8
        );

        // On the idempotent structure Y(xy) = xy + x^2.
        let s2 = k2();
        let at = GroupPoint::from_coords(&[0.0, 1.0, 2.0]);
        let zero2 = MultiIndex::zeros(&s2);
        assert_relative_eq!(
            mixed_derivative(&u, &at, 1, &zero2, &s2).unwrap(),
            3.0,
            epsilon = 1e-8
        );
    }

    #[test]
    fn exact_derivative_takes_precedence() {
        let s = k1();
        let u = DerivativeOracle::from_fn(|z| z.x[0])
            .with_exact(|k, beta, _| (k == 1 && beta.iter().all(|&b| b == 0)).then_some(42.0));
        let z = GroupPoint::origin(2);
        assert_eq!(lie_derivative_y(&u, &z, &s).unwrap(), 42.0);
        // Pairs the table declines still go through finite differences.
        let dx = MultiIndex::new(vec![1, 0], &s).unwrap();
        assert_relative_eq!(
            mixed_derivative(&u, &z, 0, &dx, &s).unwrap(),
            1.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn step_underflow_is_reported() {
        let s = k1();
        let u = DerivativeOracle::from_fn(|z| z.x[0]).with_fd_step(1e-30);
        let dx = MultiIndex::new(vec![1, 0], &s).unwrap();
        assert!(matches!(
            mixed_derivative(&u, &GroupPoint::origin(2), 0, &dx, &s),
            Err(CalculusError::StepUnderflow { .. })
        ));
    }

    #[test]
    fn non_finite_evaluation_is_reported() {
        let s = k1();
        let u = DerivativeOracle::from_fn(|z| if z.x[0] < 0.0 { f64::NAN } else { z.x[0] });
        let dx = MultiIndex::new(vec![1, 0], &s).unwrap();
        assert!(matches!(
            mixed_derivative(&u, &GroupPoint::origin(2), 0, &dx, &s),
            Err(CalculusError::Evaluation)
        ));
    }

    #[test]
    fn enumerate_zero_order() {
        let s = k1();
        let terms = enumerate_terms(0, &s);
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].0, 0);
        assert!(terms[0].1.is_zero());
    }

    #[test]
    fn enumerate_matches_hand_count() {
        let s = k1();
        // Order 3: k = 0 admits (0,0), (0,1), (1,0), (2,0), (3,0);
        // k = 1 admits (0,0), (1,0).
        let terms = enumerate_terms(3, &s);
        let listed: Vec<(usize, Vec<u32>)> = terms
            .iter()
            .map(|(k, b)| (*k, b.entries().to_vec()))
            .collect();
        assert_eq!(
            listed,
            vec![
                (0, vec![0, 0]),
                (0, vec![0, 1]),
                (0, vec![1, 0]),
                (0, vec![2, 0]),
                (0, vec![3, 0]),
                (1, vec![0, 0]),
                (1, vec![1, 0]),
            ]
        );

        // Order 2: brute force over k ≤ 1, |β| ≤ 2 confirms exactly 4 terms.
        let brute = brute_force_terms(2, &s);
        assert_eq!(brute.len(), 4);
        let enumerated: Vec<(usize, Vec<u32>)> = enumerate_terms(2, &s)
            .iter()
            .map(|(k, b)| (*k, b.entries().to_vec()))
            .collect();
        assert_eq!(enumerated, brute);
    }

    /// Brute-force filter over all (k, β) with k ≤ n/2 and |β| ≤ n.
    fn brute_force_terms(n: u32, s: &KolmogorovStructure) -> Vec<(usize, Vec<u32>)> {
        let d = s.dimension();
        let mut all = Vec::new();
        for k in 0..=(n / 2) as usize {
            let mut stack = vec![vec![]];
            for _ in 0..d {
                let mut next = Vec::new();
                for prefix in &stack {
                    for b in 0..=n {
                        let mut e: Vec<u32> = prefix.clone();
                        e.push(b);
                        next.push(e);
                    }
                }
                stack = next;
            }
            for beta in stack {
                let blen = s.b_length(&beta).unwrap();
                if 2 * k as u64 + blen <= u64::from(n) {
                    all.push((k, beta));
                }
            }
        }
        all.sort();
        all.dedup();
        all
    }

    #[test]
    fn enumerate_matches_brute_force_up_to_six() {
        let m3 = dmatrix![
            0.0, 0.0, 0.0;
            1.0, 0.0, 0.0;
            0.0, 1.0, 0.0
        ];
        let m21 = dmatrix![
            0.0, 0.0, 0.0;
            0.0, 0.0, 0.0;
            1.0, 0.0, 0.0
        ];
        let structures = [
            k1(),
            KolmogorovStructure::new(m3, &[1, 1, 1]).unwrap(),
            KolmogorovStructure::new(m21, &[2, 1]).unwrap(),
        ];
        for s in &structures {
            for n in 0..=6 {
                let enumerated: Vec<(usize, Vec<u32>)> = enumerate_terms(n, s)
                    .iter()
                    .map(|(k, b)| (*k, b.entries().to_vec()))
                    .collect();
                let brute = brute_force_terms(n, s);
                assert_eq!(enumerated, brute, "order {n}");
            }
        }
    }

    #[test]
    fn taylor_of_constant() {
        let s = k1();
        let u = DerivativeOracle::from_fn(|_| 2.5);
        let zeta = GroupPoint::from_coords(&[0.1, 0.2, 0.3]);
        let t = taylor_coefficients(&u, &zeta, 3, &s).unwrap();
        assert_relative_eq!(t.coefficient(0, &[0, 0]).unwrap(), 2.5);
        for term in t.terms() {
            if term.k != 0 || !term.beta.is_zero() {
                assert!(term.coefficient.abs() <= 1e-8, "term {:?}", term);
            }
        }
    }

    #[test]
    fn taylor_of_deep_coordinate() {
        // u = y on the nilpotent structure: nonzero coefficients are
        // y(ζ) at (0,0), ξ at (1,0) since Yy = x, and 1 at (0,(0,1)).
        let s = k1();
        let u = DerivativeOracle::from_fn(|z| z.x[1]);
        let (xi, eta) = (0.7, -0.2);
        let zeta = GroupPoint::from_coords(&[0.3, xi, eta]);
        let t = taylor_coefficients(&u, &zeta, 3, &s).unwrap();
        assert_relative_eq!(t.coefficient(0, &[0, 0]).unwrap(), eta, epsilon = 1e-10);
        assert_relative_eq!(t.coefficient(1, &[0, 0]).unwrap(), xi, epsilon = 1e-8);
        assert_relative_eq!(t.coefficient(0, &[0, 1]).unwrap(), 1.0, epsilon = 1e-8);
        let named = [(0usize, vec![0u32, 0]), (1, vec![0, 0]), (0, vec![0, 1])];
        for term in t.terms() {
            if !named.contains(&(term.k, term.beta.entries().to_vec())) {
                assert!(term.coefficient.abs() <= 1e-7, "term {:?}", term);
            }
        }

        // The expansion then reproduces u everywhere.
        let z = GroupPoint::from_coords(&[-0.5, 1.1, 2.2]);
        assert_relative_eq!(t.eval(&z, &s), z.x[1], epsilon = 1e-7);
        // And at the center it returns u(ζ) exactly.
        assert_relative_eq!(t.eval(&zeta, &s), eta, epsilon = 1e-12);
    }

    #[test]
    fn taylor_truncation_leaves_cubic_remainder() {
        // At order 2 the (0,(0,1)) term has weighted degree 3 and is cut:
        // the polynomial vanishes and the remainder is |c|.
        let s = k1();
        let u = DerivativeOracle::from_fn(|z| z.x[1]);
        let zeta = GroupPoint::origin(2);
        let t = taylor_coefficients(&u, &zeta, 2, &s).unwrap();
        let z = GroupPoint::from_coords(&[0.0, 0.0, 0.3]);
        assert!(t.eval(&z, &s).abs() <= 1e-9);
    }

    #[test]
    fn fd_converges_at_second_order() {
        // Plain central differences (no extrapolation) on a smooth function:
        // the error must shrink like h^2, fitted slope at least 1.8.
        let s = k2();
        let z = GroupPoint::from_coords(&[0.3, 0.4, -0.2]);
        let exact_y = |z: &GroupPoint| {
            // u = sin(x) cos(y) e^{t/2}; Yu = x u_x + x u_y + u_t.
            let (t, x, y) = (z.t, z.x[0], z.x[1]);
            let u_x = x.cos() * y.cos() * (t / 2.0).exp();
            let u_y = -x.sin() * y.sin() * (t / 2.0).exp();
            let u_t = 0.5 * x.sin() * y.cos() * (t / 2.0).exp();
            x * u_x + x * u_y + u_t
        };
        let truth = exact_y(&z);
        let mut logs = Vec::new();
        for &h in &[1e-2, 5e-3, 2.5e-3, 1.25e-3] {
            let u = DerivativeOracle::from_fn(|z: &GroupPoint| {
                z.x[0].sin() * z.x[1].cos() * (z.t / 2.0).exp()
            })
            .with_fd_step(h)
            .with_richardson_levels(0);
            let err = (lie_derivative_y(&u, &z, &s).unwrap() - truth).abs();
            logs.push((h.ln(), err.max(1e-300).ln()));
        }
        let n = logs.len() as f64;
        let (sx, sy): (f64, f64) = logs.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!(slope >= 1.8, "fitted order {slope}");
    }
}

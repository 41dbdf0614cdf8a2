//! Built-in test functions with exact derivatives.
//!
//! The registry backs the CLI (`--function <name>`) and the verification
//! experiments. Names:
//!
//! * `one` — the constant function 1;
//! * `t` — the time coordinate;
//! * `x1` … `xd` — spatial coordinates (one-based);
//! * `mono:<k>:<b1>,…,<bd>` — the intrinsic monomial
//!   `t^k (x - e^{tB}·0)^β = t^k x^β` centered at the origin;
//! * `sin1`, `cos1` — `e^{t/2} sin(⟨c,x⟩)` and `e^{-t/3} cos(⟨c,x⟩)` with
//!   `c_i = 1/(i+1)` (one-based `i`);
//! * `expmix` — `e^{t/4 + ⟨c,x⟩/2}` with the same `c`.
//!
//! Intrinsic monomials centered at a point `ζ` are closed under both
//! `∂_{x_i}` and the Lie derivative `Y`:
//!
//! ```text
//! ∂_{x_i} m_{k,β} = β_i m_{k,β-e_i}
//! Y m_{k,β}       = k m_{k-1,β} + Σ_{i,j} β_i B_{i,j} m_{k,β-e_i+e_j}
//! ```
//!
//! so their mixed derivatives of any order are exact small recurrences.
//! For the trig/exp composites, `Y^k ∂^β` with `k ≤ 2` is assembled exactly
//! from closed-form Euclidean partials; higher `k` falls back to finite
//! differences.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
// Backs f64 math methods in no_std builds; shadowed by inherent methods under test.
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::calculus::DerivativeOracle;
use crate::group::{exp_b, GroupPoint};
use crate::structure::KolmogorovStructure;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegistryError {
    #[error("unknown function name {0:?}")]
    Unknown(String),
    #[error("could not parse monomial spec {0:?}, expected mono:<k>:<b1>,...,<bd>")]
    BadMonomialSpec(String),
    #[error("coordinate index {index} out of range for dimension {dimension}")]
    Coordinate { index: usize, dimension: usize },
    #[error("expected {expected} spatial exponents, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Builds the named oracle against the given structure.
pub fn build(name: &str, s: &KolmogorovStructure) -> Result<DerivativeOracle, RegistryError> {
    let d = s.dimension();
    match name {
        "one" => Ok(constant_oracle(1.0)),
        "t" => Ok(time_oracle()),
        "sin1" => Ok(trig_exp_oracle(0.5, default_frequencies(d), 0.0, s)),
        "cos1" => Ok(trig_exp_oracle(
            -1.0 / 3.0,
            default_frequencies(d),
            core::f64::consts::FRAC_PI_2,
            s,
        )),
        "expmix" => Ok(exp_linear_oracle(
            0.25,
            default_frequencies(d).map(|c| c / 2.0),
            s,
        )),
        _ if name.starts_with("mono:") => parse_monomial(name, s),
        _ if name.starts_with('x') => {
            let index: usize = name[1..]
                .parse()
                .map_err(|_| RegistryError::Unknown(name.to_string()))?;
            if index == 0 || index > d {
                return Err(RegistryError::Coordinate {
                    index,
                    dimension: d,
                });
            }
            coordinate_oracle(index - 1, s)
        }
        _ => Err(RegistryError::Unknown(name.to_string())),
    }
}

/// Concrete names available for a structure of dimension `d` (the
/// parametric `mono:<k>:<b1>,…` family is additional).
pub fn catalog(d: usize) -> Vec<String> {
    let mut names = vec!["one".to_string(), "t".to_string()];
    for i in 1..=d {
        let mut n = String::from("x");
        n.push_str(&i.to_string());
        names.push(n);
    }
    names.extend(smooth_names().iter().map(|n| n.to_string()));
    names
}

/// The smooth non-polynomial registry subset used by the experiments.
pub fn smooth_names() -> &'static [&'static str] {
    &["sin1", "cos1", "expmix"]
}

fn default_frequencies(d: usize) -> DVector<f64> {
    DVector::from_fn(d, |i, _| 1.0 / (i as f64 + 2.0))
}

pub fn constant_oracle(c: f64) -> DerivativeOracle {
    DerivativeOracle::from_fn(move |_| c).with_exact(move |k, beta, _| {
        Some(if k == 0 && beta.iter().all(|&b| b == 0) {
            c
        } else {
            0.0
        })
    })
}

pub fn time_oracle() -> DerivativeOracle {
    DerivativeOracle::from_fn(|z| z.t).with_exact(|k, beta, z| {
        let spatial_zero = beta.iter().all(|&b| b == 0);
        Some(match (k, spatial_zero) {
            (0, true) => z.t,
            (1, true) => 1.0,
            _ => 0.0,
        })
    })
}

/// The coordinate function `x_i` (zero-based index): `Y^k x_i = (B^k x)_i`
/// and all spatial derivatives beyond first order vanish.
pub fn coordinate_oracle(
    i: usize,
    s: &KolmogorovStructure,
) -> Result<DerivativeOracle, RegistryError> {
    let d = s.dimension();
    if i >= d {
        return Err(RegistryError::Coordinate {
            index: i,
            dimension: d,
        });
    }
    let b = s.matrix().clone();
    Ok(
        DerivativeOracle::from_fn(move |z| z.x[i]).with_exact(move |k, beta, z| {
            let order: u32 = beta.iter().sum();
            Some(match order {
                0 => {
                    let mut v = z.x.clone();
                    for _ in 0..k {
                        v = &b * v;
                    }
                    v[i]
                }
                1 if k == 0 => {
                    let j = beta.iter().position(|&e| e == 1).unwrap();
                    if j == i {
                        1.0
                    } else {
                        0.0
                    }
                }
                _ => 0.0,
            })
        }),
    )
}

/// A finite linear combination of intrinsic monomials
/// `m_{k,β}(z) = (t-s)^k (x - e^{(t-s)B} ξ)^β` with a fixed center.
#[derive(Clone)]
struct MonomialCombo {
    center: GroupPoint,
    terms: BTreeMap<(u32, Vec<u32>), f64>,
}

impl MonomialCombo {
    fn eval(&self, z: &GroupPoint, s: &KolmogorovStructure) -> f64 {
        let dt = z.t - self.center.t;
        let w = &z.x - exp_b(dt, s) * &self.center.x;
        self.terms
            .iter()
            .map(|((k, beta), c)| {
                let mut v = c * dt.powi(*k as i32);
                for (i, &b) in beta.iter().enumerate() {
                    if b > 0 {
                        v *= w[i].powi(b as i32);
                    }
                }
                v
            })
            .sum()
    }

    fn dx(&self, i: usize) -> Self {
        let mut terms = BTreeMap::new();
        for ((k, beta), c) in &self.terms {
            if beta[i] == 0 {
                continue;
            }
            let mut nb = beta.clone();
            nb[i] -= 1;
            *terms.entry((*k, nb)).or_insert(0.0) += c * f64::from(beta[i]);
        }
        Self {
            center: self.center.clone(),
            terms,
        }
    }

    fn lie_y(&self, b: &DMatrix<f64>) -> Self {
        let mut terms: BTreeMap<(u32, Vec<u32>), f64> = BTreeMap::new();
        for ((k, beta), c) in &self.terms {
            if *k > 0 {
                *terms.entry((k - 1, beta.clone())).or_insert(0.0) += c * f64::from(*k);
            }
            for i in 0..beta.len() {
                if beta[i] == 0 {
                    continue;
                }
                // (Bw)_i = Σ_j B_{i,j} w_j turns w^{β-e_i} (Bw)_i into the
                // shifted monomials w^{β-e_i+e_j} weighted by B_{i,j}.
                for j in 0..beta.len() {
                    let bij = b[(i, j)];
                    if bij == 0.0 {
                        continue;
                    }
                    let mut nb = beta.clone();
                    nb[i] -= 1;
                    nb[j] += 1;
                    *terms.entry((*k, nb)).or_insert(0.0) += c * f64::from(beta[i]) * bij;
                }
            }
        }
        Self {
            center: self.center.clone(),
            terms,
        }
    }
}

/// Oracle for a single intrinsic monomial `m_{k,β}` centered at `center`.
pub fn monomial_oracle(
    k: u32,
    beta: Vec<u32>,
    center: &GroupPoint,
    s: &KolmogorovStructure,
) -> Result<DerivativeOracle, RegistryError> {
    monomial_combo_oracle(&[(1.0, k, beta)], center, s)
}

/// Oracle for `Σ c_j m_{k_j, β_j}` with a shared center; exact derivatives
/// of every order via the closure recurrences.
pub fn monomial_combo_oracle(
    terms: &[(f64, u32, Vec<u32>)],
    center: &GroupPoint,
    s: &KolmogorovStructure,
) -> Result<DerivativeOracle, RegistryError> {
    let d = s.dimension();
    if center.dimension() != d {
        return Err(RegistryError::Dimension {
            expected: d,
            got: center.dimension(),
        });
    }
    let mut table = BTreeMap::new();
    for (c, k, beta) in terms {
        if beta.len() != d {
            return Err(RegistryError::Dimension {
                expected: d,
                got: beta.len(),
            });
        }
        *table.entry((*k, beta.clone())).or_insert(0.0) += c;
    }
    let combo = MonomialCombo {
        center: center.clone(),
        terms: table,
    };
    let combo_eval = combo.clone();
    let s_eval = s.clone();
    let s_exact = s.clone();
    let b = s.matrix().clone();
    Ok(
        DerivativeOracle::from_fn(move |z| combo_eval.eval(z, &s_eval)).with_exact(
            move |k, beta, z| {
                let mut cur = combo.clone();
                for (i, &m) in beta.iter().enumerate() {
                    for _ in 0..m {
                        cur = cur.dx(i);
                    }
                }
                for _ in 0..k {
                    cur = cur.lie_y(&b);
                }
                Some(cur.eval(z, &s_exact))
            },
        ),
    )
}

fn parse_monomial(name: &str, s: &KolmogorovStructure) -> Result<DerivativeOracle, RegistryError> {
    let bad = || RegistryError::BadMonomialSpec(name.to_string());
    let mut parts = name.splitn(3, ':');
    parts.next(); // "mono"
    let k: u32 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
    let beta: Vec<u32> = parts
        .next()
        .ok_or_else(bad)?
        .split(',')
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    if beta.len() != s.dimension() {
        return Err(RegistryError::Dimension {
            expected: s.dimension(),
            got: beta.len(),
        });
    }
    monomial_oracle(k, beta, &GroupPoint::origin(s.dimension()), s)
}

type EuclideanFn = dyn Fn(u32, &[u32], &GroupPoint) -> f64 + Send + Sync;

/// Assembles `Y^k ∂^β u` (k ≤ 2) from exact Euclidean partials
/// `∂_t^a ∂^γ u`, using `Y = ⟨Bx, ∇_x⟩ + ∂_t` applied to `w = ∂^β u`:
///
/// ```text
/// Y w  = ∂_t w + ⟨Bx, ∇w⟩
/// Y² w = ∂_t² w + 2⟨Bx, ∇∂_t w⟩ + ⟨B²x, ∇w⟩ + (Bx)ᵀ H_w (Bx)
/// ```
fn lie_from_euclidean(
    k: usize,
    beta: &[u32],
    z: &GroupPoint,
    b: &DMatrix<f64>,
    euclid: &EuclideanFn,
) -> Option<f64> {
    let bump = |base: &[u32], i: usize| {
        let mut v = base.to_vec();
        v[i] += 1;
        v
    };
    match k {
        0 => Some(euclid(0, beta, z)),
        1 => {
            let bx = b * &z.x;
            let mut acc = euclid(1, beta, z);
            for i in 0..bx.len() {
                if bx[i] != 0.0 {
                    acc += bx[i] * euclid(0, &bump(beta, i), z);
                }
            }
            Some(acc)
        }
        2 => {
            let bx = b * &z.x;
            let bbx = b * &bx;
            let mut acc = euclid(2, beta, z);
            for i in 0..bx.len() {
                if bx[i] != 0.0 {
                    acc += 2.0 * bx[i] * euclid(1, &bump(beta, i), z);
                }
                if bbx[i] != 0.0 {
                    acc += bbx[i] * euclid(0, &bump(beta, i), z);
                }
                for m in 0..bx.len() {
                    if bx[i] != 0.0 && bx[m] != 0.0 {
                        acc += bx[i] * bx[m] * euclid(0, &bump(&bump(beta, i), m), z);
                    }
                }
            }
            Some(acc)
        }
        _ => None,
    }
}

/// `u(z) = e^{a t} sin(⟨c, x⟩ + phase)`; every Euclidean partial is a
/// phase shift, so `Y^k ∂^β` is exact for `k ≤ 2`.
pub fn trig_exp_oracle(
    a: f64,
    c: DVector<f64>,
    phase: f64,
    s: &KolmogorovStructure,
) -> DerivativeOracle {
    let b = s.matrix().clone();
    let c_eval = c.clone();
    let euclid: Arc<EuclideanFn> = Arc::new(move |m, gamma, z: &GroupPoint| {
        let mut amp = a.powi(m as i32) * (a * z.t).exp();
        let mut shift = 0u32;
        for (i, &g) in gamma.iter().enumerate() {
            if g > 0 {
                amp *= c[i].powi(g as i32);
                shift += g;
            }
        }
        let arg = c.dot(&z.x) + phase + f64::from(shift) * core::f64::consts::FRAC_PI_2;
        amp * arg.sin()
    });
    DerivativeOracle::from_fn(move |z| (a * z.t).exp() * (c_eval.dot(&z.x) + phase).sin())
        .with_exact(move |k, beta, z| lie_from_euclidean(k, beta, z, &b, euclid.as_ref()))
}

/// `u(z) = e^{a t + ⟨c, x⟩}`; Euclidean partials scale by `a^m c^γ`.
pub fn exp_linear_oracle(a: f64, c: DVector<f64>, s: &KolmogorovStructure) -> DerivativeOracle {
    let b = s.matrix().clone();
    let c_eval = c.clone();
    let euclid: Arc<EuclideanFn> = Arc::new(move |m, gamma, z: &GroupPoint| {
        let mut amp = a.powi(m as i32);
        for (i, &g) in gamma.iter().enumerate() {
            if g > 0 {
                amp *= c[i].powi(g as i32);
            }
        }
        amp * (a * z.t + c.dot(&z.x)).exp()
    });
    DerivativeOracle::from_fn(move |z| (a * z.t + c_eval.dot(&z.x)).exp())
        .with_exact(move |k, beta, z| lie_from_euclidean(k, beta, z, &b, euclid.as_ref()))
}

//! Intrinsic calculus on Kolmogorov-type Lie groups.
//!
//! The groups handled here are `(ℝ × ℝ^d, ∘)` with translation
//! `(t, x) ∘ (s, ξ) = (t + s, e^{sB} x + ξ)`, where the drift matrix `B`
//! has a lower-block-triangular chain structure whose subdiagonal blocks
//! have full rank. Such groups carry an anisotropic geometry: coordinates
//! in deeper blocks scale with higher odd powers, and the natural norm,
//! distance and Taylor expansion all weight derivatives accordingly.
//!
//! The crate provides:
//!
//! * [`structure`] — validation of the drift matrix and its block data,
//!   dilations, formal degrees and weighted multi-index arithmetic;
//! * [`group`] — the group law, inverse, `e^{sB}`, the φ-functions, the
//!   anisotropic norm and the induced semi-distance;
//! * [`calculus`] — Lie derivatives along the canonical fields, mixed
//!   derivatives, term enumeration and the intrinsic Taylor polynomial;
//! * [`connect`] — integral curves and the solver that reaches a target
//!   increment in the deepest block by composing curve segments;
//! * [`holder`] — empirical field Hölder seminorms over box domains and
//!   the recursive anisotropic seminorms built from them;
//! * [`harness`] — verification experiments: remainder order fitting,
//!   the commutator identity, reconstruction of `∂_y` and the third-order
//!   curve expansion check;
//! * [`registry`] — built-in test functions with exact derivatives.
//!
//! The crate is `no_std` (with `alloc`); all IO lives in the companion
//! CLI crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod calculus;
pub mod connect;
pub mod group;
pub mod harness;
pub mod holder;
pub mod registry;
pub mod structure;

pub use calculus::{DerivativeOracle, Field, TaylorExpansion};
pub use group::GroupPoint;
pub use structure::{KolmogorovStructure, MultiIndex};

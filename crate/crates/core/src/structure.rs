//! Drift-matrix structure: block decomposition, dilations, formal degrees
//! and weighted multi-index arithmetic.
//!
//! A [`KolmogorovStructure`] is the single source of truth for the geometry:
//! it owns the `d×d` drift matrix `B`, the block sizes `p_0 ≥ … ≥ p_r ≥ 1`
//! and everything derived from them (offsets, coordinate weights, the
//! homogeneity flag). Construction validates the chain conditions: blocks
//! below the first subdiagonal vanish and each subdiagonal block
//! `B_{j,j-1}` has full rank `p_j`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
// Backs f64 math methods in no_std builds; shadowed by inherent methods under test.
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::group::GroupPoint;

/// Relative tolerance of the numerical rank decision: a subdiagonal block
/// counts as full-rank iff its smallest singular value is at least
/// `RANK_TOL` times the largest singular value of the whole matrix.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StructureError {
    #[error("block sizes {sizes:?} do not fit a {rows}x{cols} matrix")]
    BlockShape {
        sizes: Vec<usize>,
        rows: usize,
        cols: usize,
    },
    #[error("block sizes must be positive and non-increasing, got {sizes:?}")]
    Monotonicity { sizes: Vec<usize> },
    #[error("subdiagonal block at block-row {block} has numerical rank below {expected}")]
    Rank { block: usize, expected: usize },
    #[error("entry ({row},{col}) lies below the first subdiagonal and must be zero, got {value}")]
    Sparsity { row: usize, col: usize, value: f64 },
    #[error("expected {expected} entries, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("stratum index {index} out of range, structure has blocks 0..={max}")]
    StratumIndex { index: usize, max: usize },
    #[error("dilations are automorphisms only on homogeneous structures")]
    NotHomogeneous,
}

/// A stratum of the layered decomposition: the time direction or one of the
/// spatial blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stratum {
    Time,
    Block(usize),
}

/// Validated drift matrix together with its block decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct KolmogorovStructure {
    matrix: DMatrix<f64>,
    block_sizes: Vec<usize>,
    /// `offsets[j]` is the first coordinate of block `j`; `offsets[r+1] = d`.
    offsets: Vec<usize>,
    /// Per-coordinate weight `2j + 1` of the block containing it.
    weights: Vec<u32>,
    homogeneous: bool,
}

impl KolmogorovStructure {
    /// Validates `matrix` against the chain conditions for the given block
    /// sizes and builds the structure.
    ///
    /// Checks run in this order: shape, monotonicity of the sizes, sparsity
    /// below the first subdiagonal (exact zeros), full rank of every
    /// subdiagonal block (numerical, see [`RANK_TOL`]).
    pub fn new(matrix: DMatrix<f64>, block_sizes: &[usize]) -> Result<Self, StructureError> {
        let d: usize = block_sizes.iter().sum();
        if block_sizes.is_empty()
            || block_sizes.contains(&0)
            || matrix.nrows() != d
            || matrix.ncols() != d
        {
            return Err(StructureError::BlockShape {
                sizes: block_sizes.to_vec(),
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        if block_sizes.windows(2).any(|w| w[0] < w[1]) {
            return Err(StructureError::Monotonicity {
                sizes: block_sizes.to_vec(),
            });
        }

        let r = block_sizes.len() - 1;
        let mut offsets = Vec::with_capacity(r + 2);
        offsets.push(0);
        for &p in block_sizes {
            offsets.push(offsets.last().unwrap() + p);
        }

        // Everything strictly below the first subdiagonal is exactly zero.
        for bi in 0..=r {
            for bj in 0..=r {
                if bi < bj + 2 {
                    continue;
                }
                for row in offsets[bi]..offsets[bi + 1] {
                    for col in offsets[bj]..offsets[bj + 1] {
                        let value = matrix[(row, col)];
                        if value != 0.0 {
                            return Err(StructureError::Sparsity { row, col, value });
                        }
                    }
                }
            }
        }

        // Numerical full-rank test on each subdiagonal block.
        let sigma_max = matrix
            .clone()
            .singular_values()
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        for bj in 1..=r {
            let block = matrix.view(
                (offsets[bj], offsets[bj - 1]),
                (block_sizes[bj], block_sizes[bj - 1]),
            );
            let sigma_min = block
                .clone_owned()
                .singular_values()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            if sigma_max == 0.0 || sigma_min < RANK_TOL * sigma_max {
                return Err(StructureError::Rank {
                    block: bj,
                    expected: block_sizes[bj],
                });
            }
        }

        // Homogeneous iff all blocks on and above the diagonal are zero.
        // The inputs are user-specified, so the test is exact.
        let mut homogeneous = true;
        'outer: for bi in 0..=r {
            for bj in bi..=r {
                for row in offsets[bi]..offsets[bi + 1] {
                    for col in offsets[bj]..offsets[bj + 1] {
                        if matrix[(row, col)] != 0.0 {
                            homogeneous = false;
                            break 'outer;
                        }
                    }
                }
            }
        }

        let mut weights = vec![0u32; d];
        for bj in 0..=r {
            weights[offsets[bj]..offsets[bj + 1]].fill(2 * bj as u32 + 1);
        }

        Ok(Self {
            matrix,
            block_sizes: block_sizes.to_vec(),
            offsets,
            weights,
            homogeneous,
        })
    }

    /// Spatial dimension `d`.
    pub fn dimension(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Number of spatial blocks, `r + 1`.
    pub fn block_count(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn block_size(&self, j: usize) -> usize {
        self.block_sizes[j]
    }

    /// Coordinate range of block `j`.
    pub fn block_range(&self, j: usize) -> core::ops::Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Owned copy of block `B_{i,j}` (a `p_i × p_j` matrix).
    pub fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        self.matrix
            .view(
                (self.offsets[i], self.offsets[j]),
                (self.block_sizes[i], self.block_sizes[j]),
            )
            .clone_owned()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    /// Weight `2j + 1` of coordinate `i` (zero-based), `j` its block.
    pub fn coordinate_weight(&self, i: usize) -> u32 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    /// Weighted length `Σ_i w_i β_i` of a raw multi-index.
    pub fn b_length(&self, entries: &[u32]) -> Result<u64, StructureError> {
        if entries.len() != self.dimension() {
            return Err(StructureError::Dimension {
                expected: self.dimension(),
                got: entries.len(),
            });
        }
        Ok(entries
            .iter()
            .zip(&self.weights)
            .map(|(&b, &w)| u64::from(b) * u64::from(w))
            .sum())
    }

    /// Formal degree of a stratum: 1 for block 0, 2 for the time direction,
    /// `2i + 1` for block `i`.
    pub fn formal_degree(&self, stratum: Stratum) -> Result<u32, StructureError> {
        match stratum {
            Stratum::Time => Ok(2),
            Stratum::Block(i) if i < self.block_count() => Ok(2 * i as u32 + 1),
            Stratum::Block(i) => Err(StructureError::StratumIndex {
                index: i,
                max: self.block_count() - 1,
            }),
        }
    }

    /// Anisotropic dilation `(t, x) ↦ (λ²t, λ x^{(0)}, λ³ x^{(1)}, …)`.
    ///
    /// Only meaningful for `λ > 0`; errors on non-homogeneous structures,
    /// where the dilations fail to be automorphisms.
    pub fn dilation(&self, lambda: f64, z: &GroupPoint) -> Result<GroupPoint, StructureError> {
        if !self.homogeneous {
            return Err(StructureError::NotHomogeneous);
        }
        if z.dimension() != self.dimension() {
            return Err(StructureError::Dimension {
                expected: self.dimension(),
                got: z.dimension(),
            });
        }
        let mut x = z.x.clone();
        for i in 0..x.len() {
            x[i] *= lambda.powi(self.weights[i] as i32);
        }
        Ok(GroupPoint::new(lambda * lambda * z.t, x))
    }
}

/// A spatial multi-index with its weighted length cached.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    entries: Vec<u32>,
    b_length: u64,
}

impl MultiIndex {
    pub fn new(entries: Vec<u32>, s: &KolmogorovStructure) -> Result<Self, StructureError> {
        let b_length = s.b_length(&entries)?;
        Ok(Self { entries, b_length })
    }

    pub fn zeros(s: &KolmogorovStructure) -> Self {
        Self {
            entries: vec![0; s.dimension()],
            b_length: 0,
        }
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    /// Weighted length `|β|_B`.
    pub fn b_length(&self) -> u64 {
        self.b_length
    }

    /// Plain order `|β| = Σ β_i`.
    pub fn order(&self) -> u32 {
        self.entries.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&b| b == 0)
    }

    /// `β! = Π β_i!`
    pub fn factorial(&self) -> f64 {
        self.entries.iter().map(|&b| factorial(b)).product()
    }

    /// Entrywise sum; the weighted length is additive.
    pub fn sum(&self, other: &MultiIndex) -> Result<MultiIndex, StructureError> {
        if self.entries.len() != other.entries.len() {
            return Err(StructureError::Dimension {
                expected: self.entries.len(),
                got: other.entries.len(),
            });
        }
        Ok(MultiIndex {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
            b_length: self.b_length + other.b_length,
        })
    }
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

//! Initial activation probabilities and their concave surrogates.
//!
//! For provider indicator `x` and consumer indicator `y`:
//!
//! * `f_j(x, y) = y_j (1 - prod_i (1 - x_i M_ij))` is the exact probability that a seed
//!   provider directly activates consumer `j`;
//! * `F_j(x, y) = y_j (1 - exp(-(x^T M)_j))` is a concave relaxation satisfying
//!   `(1 - 1/e) f_j <= F_j <= f_j`;
//! * `F^_j(s, y) = y_j (1 - exp(-s_j))` evaluates the same relaxation at an arbitrary point
//!   `s` of the image of `M`, typically a net point.

use crate::error::{Error, Result};
use crate::instance::Matrix;

/// Above this many matrix entries the activation product is accumulated in log space.
const LOG_SPACE_THRESHOLD: usize = 1_000_000;

/// 0/1 membership vector over a ground set (providers or consumers).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndicatorVector {
    bits: Vec<bool>,
}

impl IndicatorVector {
    pub fn empty(len: usize) -> IndicatorVector {
        IndicatorVector { bits: vec![false; len] }
    }

    pub fn full(len: usize) -> IndicatorVector {
        IndicatorVector { bits: vec![true; len] }
    }

    /// Panics if an index is out of range.
    pub fn from_indices(len: usize, indices: &[usize]) -> IndicatorVector {
        let mut bits = vec![false; len];
        for &i in indices {
            bits[i] = true;
        }
        IndicatorVector { bits }
    }

    pub fn from_bits(bits: Vec<bool>) -> IndicatorVector {
        IndicatorVector { bits }
    }

    /// The `index`-th subset in binary order: bit `k` of `mask` selects element `k`.
    pub fn from_mask(len: usize, mask: u64) -> IndicatorVector {
        IndicatorVector { bits: (0..len).map(|k| mask >> k & 1 == 1).collect() }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.bits.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

/// A point `s` of `R^m` in the (nonnegative part of the) image of the activation matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearImagePoint {
    pub coords: Vec<f64>,
}

impl LinearImagePoint {
    pub fn new(coords: Vec<f64>) -> LinearImagePoint {
        LinearImagePoint { coords }
    }

    /// `x^T M`.
    pub fn image_of(x: &IndicatorVector, matrix: &Matrix) -> Result<LinearImagePoint> {
        check_len(x.len(), matrix.rows())?;
        let mut coords = vec![0.0; matrix.cols()];
        for i in x.indices() {
            for (c, v) in coords.iter_mut().zip(matrix.row(i)) {
                *c += v;
            }
        }
        Ok(LinearImagePoint { coords })
    }

    /// Copy with negative coordinates raised to zero.
    pub fn clamped(&self) -> LinearImagePoint {
        LinearImagePoint { coords: self.coords.iter().map(|c| c.max(0.0)).collect() }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn check_dims(x: &IndicatorVector, y: &IndicatorVector, matrix: &Matrix) -> Result<()> {
    check_len(matrix.rows(), x.len())?;
    check_len(matrix.cols(), y.len())
}

/// Probability that no seed provider activates consumer `j`: `prod_{i in x} (1 - M_ij)`.
pub(crate) fn miss_probability(matrix: &Matrix, providers: &[usize], j: usize) -> f64 {
    if matrix.rows() * matrix.cols() > LOG_SPACE_THRESHOLD {
        let log: f64 = providers.iter().map(|&i| (-matrix.get(i, j)).ln_1p()).sum();
        log.exp()
    } else {
        providers.iter().map(|&i| 1.0 - matrix.get(i, j)).product()
    }
}

/// `f(x, y)`: per-consumer probability of being activated directly by a seed provider.
pub fn initial_activation(x: &IndicatorVector, y: &IndicatorVector, matrix: &Matrix) -> Result<Vec<f64>> {
    check_dims(x, y, matrix)?;
    let providers = x.indices();
    Ok((0..matrix.cols())
        .map(|j| if y.contains(j) { 1.0 - miss_probability(matrix, &providers, j) } else { 0.0 })
        .collect())
}

/// `F(x, y)`, the concave relaxation of [`initial_activation`].
pub fn concave_relaxation(x: &IndicatorVector, y: &IndicatorVector, matrix: &Matrix) -> Result<Vec<f64>> {
    check_dims(x, y, matrix)?;
    let s = LinearImagePoint::image_of(x, matrix)?;
    net_relaxation(&s, y)
}

/// `F^(s, y)`. Coordinates of `s` must be nonnegative; clamp noisy points first.
pub fn net_relaxation(s: &LinearImagePoint, y: &IndicatorVector) -> Result<Vec<f64>> {
    check_len(s.len(), y.len())?;
    if let Some((index, &value)) = s.coords.iter().enumerate().find(|(_, &c)| c.is_nan() || c < 0.0) {
        return Err(Error::NegativeCoordinate { index, value });
    }
    Ok(s.coords.iter().enumerate().map(|(j, &c)| if y.contains(j) { -(-c).exp_m1() } else { 0.0 }).collect())
}

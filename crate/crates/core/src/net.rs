//! Multiplicative nets over the image of the activation matrix.
//!
//! The image `{x^T M : x in {0,1}^n}` lies in an `r`-dimensional subspace. Every cell of the
//! product grid `S^m` (with `S = {0, 2^-l, 2^-l (1+e), ..., n}`) that meets the subspace has
//! a vertex pinned to grid values on `r` coordinates whose columns are independent, so
//! solving the `r x r` system for every independent column tuple and every grid assignment
//! enumerates a point in each such cell. That is a weak net (two-sided error); running it
//! at `sqrt(1+e)` and scaling every point down by `sqrt(1+e)` gives the one-sided net
//! `s_j <= (x^T M)_j <= (1+e) s_j`.

use itertools::Itertools;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::{Matrix, RankBasis};
use crate::linalg::{determinant, Lu};
use crate::relaxation::LinearImagePoint;

/// Relative slack used when comparing solved points against grid or box boundaries.
const BOUNDARY_SLACK: f64 = 1e-9;

/// The one-dimensional grid `{0, 2^-l, 2^-l (1+e), 2^-l (1+e)^2, ..., n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    values: Vec<f64>,
}

impl Grid {
    pub fn build(lambda: u32, epsilon: f64, n: usize) -> Result<Grid> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        if lambda == 0 {
            return Err(Error::InvalidParameter("bit precision must be at least 1".into()));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("grid needs at least one provider".into()));
        }
        let base = (-(lambda as f64)).exp2();
        let cap = n as f64;
        let mut values = vec![0.0];
        for k in 0.. {
            let v = base * (1.0 + epsilon).powi(k);
            if v >= cap * (1.0 - 1e-12) {
                break;
            }
            values.push(v);
        }
        values.push(cap);
        Ok(Grid { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Axis-aligned bounds a net point must respect to be kept.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl CoordinateBox {
    pub fn contains(&self, point: &[f64]) -> bool {
        point.iter().zip(self.lower.iter().zip(&self.upper)).all(|(&p, (&lo, &hi))| {
            p >= lo * (1.0 - BOUNDARY_SLACK) - BOUNDARY_SLACK * 1e-3
                && p <= hi * (1.0 + BOUNDARY_SLACK) + BOUNDARY_SLACK * 1e-3
        })
    }
}

#[derive(Clone, Debug)]
pub struct NetOptions {
    /// `|det| <= det_tol` marks a column tuple as dependent.
    pub det_tol: f64,
    /// Points closer than this in max-abs distance are merged.
    pub dedup_tol: f64,
    /// Above `count * m` stored values, points are kept as basis coefficients only.
    pub materialize_cap: usize,
    /// Optional extra filter applied to the final points.
    pub bounds: Option<CoordinateBox>,
}

impl Default for NetOptions {
    fn default() -> Self {
        NetOptions { det_tol: 1e-10, dedup_tol: 1e-12, materialize_cap: 100_000_000, bounds: None }
    }
}

/// A finite point set over the image of the activation matrix.
#[derive(Clone, Debug)]
pub struct EpsilonNet {
    pub epsilon: f64,
    pub one_sided: bool,
    pub rank: usize,
    /// Length of the grid the net was enumerated on.
    pub grid_size: usize,
    dim: usize,
    count: usize,
    basis_rows: Vec<Vec<f64>>,
    coeffs: Vec<f64>,
    points: Option<Vec<f64>>,
}

impl EpsilonNet {
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_materialized(&self) -> bool {
        self.points.is_some()
    }

    /// Coefficients of point `i` against the basis rows.
    pub fn coefficients(&self, i: usize) -> &[f64] {
        &self.coeffs[i * self.rank..(i + 1) * self.rank]
    }

    pub fn point(&self, i: usize) -> LinearImagePoint {
        match &self.points {
            Some(flat) => LinearImagePoint::new(flat[i * self.dim..(i + 1) * self.dim].to_vec()),
            None => LinearImagePoint::new(materialize(&self.basis_rows, self.coefficients(i), self.dim)),
        }
    }

    pub fn points(&self) -> impl Iterator<Item = LinearImagePoint> + '_ {
        (0..self.count).map(|i| self.point(i))
    }

    /// `C(m, r) * |grid|^r`, the number of (tuple, grid assignment) pairs enumerated.
    pub fn size_bound(&self) -> u128 {
        size_bound(self.dim, self.rank, self.grid_size)
    }

    /// Index of the first point covering `image` one-sidedly:
    /// `s_j <= v_j <= (1+e) s_j` where `v_j >= floor`, and `s_j <= floor` where `v_j` is zero.
    pub fn find_covering(&self, image: &[f64], floor: f64) -> Option<usize> {
        (0..self.count).find(|&i| covers_one_sided(&self.point(i).coords, image, self.epsilon, floor))
    }
}

/// One-sided coverage test with a small relative slack for boundary points.
pub fn covers_one_sided(s: &[f64], v: &[f64], epsilon: f64, floor: f64) -> bool {
    let up = 1.0 + BOUNDARY_SLACK;
    s.iter().zip(v).all(
        |(&sj, &vj)| {
            if vj > 0.0 {
                sj <= vj * up && vj <= (1.0 + epsilon) * sj * up
            } else {
                sj <= floor * up
            }
        },
    )
}

/// Two-sided (weak) coverage: `s_j / (1+e) <= v_j <= s_j (1+e)`, `s_j <= floor` at zeros.
pub fn covers_two_sided(s: &[f64], v: &[f64], epsilon: f64, floor: f64) -> bool {
    let up = 1.0 + BOUNDARY_SLACK;
    s.iter().zip(v).all(|(&sj, &vj)| {
        if vj > 0.0 {
            sj <= (1.0 + epsilon) * vj * up && vj <= (1.0 + epsilon) * sj * up
        } else {
            sj <= floor * up
        }
    })
}

pub fn size_bound(m: usize, r: usize, grid_size: usize) -> u128 {
    binomial(m as u128, r as u128).saturating_mul((grid_size as u128).saturating_pow(r as u32))
}

pub(crate) fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

fn materialize(basis_rows: &[Vec<f64>], coeffs: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (c, row) in coeffs.iter().zip(basis_rows) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += c * v;
        }
    }
    for o in &mut out {
        // solve noise below zero
        if *o < 0.0 {
            *o = 0.0;
        }
    }
    out
}

fn tuple_matrix(basis: &RankBasis, tuple: &[usize]) -> Vec<f64> {
    let r = basis.rank;
    let mut a = vec![0.0; r * r];
    for (row, &col) in tuple.iter().enumerate() {
        for b in 0..r {
            a[row * r + b] = basis.basis_rows[b][col];
        }
    }
    a
}

/// Ascending `r`-tuples of column indices whose `r x r` submatrix of the basis rows has
/// `|det| > det_tol`, in lexicographic order.
pub fn independent_column_tuples(basis: &RankBasis, det_tol: f64) -> impl Iterator<Item = Vec<usize>> + '_ {
    let r = basis.rank;
    (0..basis.dim())
        .combinations(r)
        .filter(move |tuple| r > 0 && determinant(&tuple_matrix(basis, tuple), r).abs() > det_tol)
}

/// Two-sided `(1+epsilon)`-net: every `x^T M` shares a grid cell with some point.
pub fn build_weak_net(
    matrix: &Matrix,
    basis: &RankBasis,
    lambda: u32,
    epsilon: f64,
    options: &NetOptions,
) -> Result<EpsilonNet> {
    enumerate(matrix, basis, lambda, epsilon, 1.0, false, options)
}

/// One-sided `(1+epsilon)`-net: a weak `sqrt(1+epsilon)`-net scaled by `1/sqrt(1+epsilon)`.
pub fn build_net(
    matrix: &Matrix,
    basis: &RankBasis,
    lambda: u32,
    epsilon: f64,
    options: &NetOptions,
) -> Result<EpsilonNet> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let root = (1.0 + epsilon).sqrt();
    let mut net = enumerate(matrix, basis, lambda, root - 1.0, 1.0 / root, true, options)?;
    net.epsilon = epsilon;
    Ok(net)
}

fn enumerate(
    matrix: &Matrix,
    basis: &RankBasis,
    lambda: u32,
    grid_epsilon: f64,
    scale: f64,
    one_sided: bool,
    options: &NetOptions,
) -> Result<EpsilonNet> {
    let (n, m, r) = (matrix.rows(), matrix.cols(), basis.rank);
    if basis.rank > 0 && basis.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, found: basis.dim() });
    }
    let grid = Grid::build(lambda, grid_epsilon, n.max(1))?;
    let cap = n as f64;

    let mut candidates: Vec<(Vec<f64>, Vec<f64>)> = if r == 0 {
        vec![(vec![0.0; m], Vec::new())]
    } else {
        let tuples: Vec<Vec<usize>> = independent_column_tuples(basis, options.det_tol).collect();
        tuples
            .par_iter()
            .flat_map_iter(|tuple| {
                let lu = Lu::factor(&tuple_matrix(basis, tuple), r, options.det_tol);
                let mut found = Vec::new();
                let Some(lu) = lu else { return found.into_iter() };
                let values = grid.values();
                let mut odometer = vec![0usize; r];
                let mut rhs = vec![0.0; r];
                loop {
                    for (k, &idx) in odometer.iter().enumerate() {
                        rhs[k] = values[idx];
                    }
                    let coeffs: Vec<f64> = lu.solve(&rhs).into_iter().map(|z| z * scale).collect();
                    let raw = raw_combination(&basis.basis_rows, &coeffs, m);
                    // only cells inside [0, n]^m can contain image points
                    let inside = raw
                        .iter()
                        .all(|&v| v >= -BOUNDARY_SLACK * cap.max(1.0) && v <= cap * scale * (1.0 + BOUNDARY_SLACK));
                    if inside {
                        let point = materialize(&basis.basis_rows, &coeffs, m);
                        if options.bounds.as_ref().is_none_or(|b| b.contains(&point)) {
                            found.push((point, coeffs));
                        }
                    }
                    if !advance(&mut odometer, values.len()) {
                        break;
                    }
                }
                found.into_iter()
            })
            .collect()
    };

    candidates.sort_by(|a, b| lexicographic(&a.0, &b.0));
    let mut kept: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(candidates.len());
    for cand in candidates {
        let duplicate =
            kept.last().is_some_and(|last| last.0.iter().zip(&cand.0).all(|(a, b)| (a - b).abs() < options.dedup_tol));
        if !duplicate {
            kept.push(cand);
        }
    }

    let count = kept.len();
    let materialized = count.saturating_mul(m) <= options.materialize_cap;
    let mut coeffs = Vec::with_capacity(count * r);
    let mut points = materialized.then(|| Vec::with_capacity(count * m));
    for (point, c) in kept {
        coeffs.extend_from_slice(&c);
        if let Some(p) = points.as_mut() {
            p.extend_from_slice(&point);
        }
    }
    Ok(EpsilonNet {
        epsilon: grid_epsilon,
        one_sided,
        rank: r,
        grid_size: grid.len(),
        dim: m,
        count,
        basis_rows: basis.basis_rows.clone(),
        coeffs,
        points,
    })
}

fn raw_combination(basis_rows: &[Vec<f64>], coeffs: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (c, row) in coeffs.iter().zip(basis_rows) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += c * v;
        }
    }
    out
}

fn advance(odometer: &mut [usize], base: usize) -> bool {
    for digit in odometer.iter_mut().rev() {
        *digit += 1;
        if *digit < base {
            return true;
        }
        *digit = 0;
    }
    false
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

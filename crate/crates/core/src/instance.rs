//! Problem data: the provider -> consumer activation matrix, the consumer social graph and the
//! two seed budgets, plus validation, JSON (de)serialization and row-basis extraction.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::linalg::{dot, max_abs, Lu};

/// Bit precision assumed when a document does not state one.
pub const DEFAULT_BIT_PRECISION: u32 = 20;

/// Default absolute tolerance for [`numerical_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Matrix {
        Matrix { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Matrix> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, found: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// `a * b`, each entry clamped into `[0, 1]`.
    pub fn clamped_product(a: &Matrix, b: &Matrix) -> Result<Matrix> {
        if a.cols != b.rows {
            return Err(Error::DimensionMismatch { expected: a.cols, found: b.rows });
        }
        let mut out = Matrix::zeros(a.rows, b.cols);
        for i in 0..a.rows {
            for j in 0..b.cols {
                let v: f64 = (0..a.cols).map(|k| a.get(i, k) * b.get(k, j)).sum();
                out.set(i, j, v.clamp(0.0, 1.0));
            }
        }
        Ok(out)
    }
}

/// A directed influence edge between two consumers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SocialEdge {
    pub source: usize,
    pub target: usize,
    pub prob: f64,
}

/// A complete problem instance. `bipartite[i][j]` is the probability that provider `i`
/// activates consumer `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct AimInstance {
    pub n_providers: usize,
    pub n_consumers: usize,
    pub bipartite: Matrix,
    pub social_edges: Vec<SocialEdge>,
    pub budget_providers: usize,
    pub budget_consumers: usize,
    pub bit_precision: u32,
}

impl AimInstance {
    /// Validates and returns the instance, or all violations at once.
    pub fn checked(self) -> Result<AimInstance> {
        let violations = validate(&self);
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidInstance(violations))
        }
    }

    /// Smallest positive entry allowed by the bit precision, `2^-lambda`.
    pub fn min_entry(&self) -> f64 {
        (-(self.bit_precision as f64)).exp2()
    }

    pub fn from_json(text: &str) -> Result<AimInstance> {
        parse_instance(text)
    }

    pub fn to_json(&self) -> String {
        serialize_instance(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Providers,
    Consumers,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Providers => f.write_str("providers"),
            Side::Consumers => f.write_str("consumers"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum Violation {
    #[error("matrix shape {rows}x{cols} does not match n={n}, m={m}")]
    MatrixShape { rows: usize, cols: usize, n: usize, m: usize },
    #[error("entry out of [0,1] at ({row},{col}): {value}")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    #[error("nonzero entry below 2^-{lambda} at ({row},{col}): {value}")]
    EntryBelowPrecision { row: usize, col: usize, value: f64, lambda: u32 },
    #[error("bit precision must be positive")]
    ZeroBitPrecision,
    #[error("edge {index}: endpoint out of range ({from} -> {to})")]
    EdgeEndpoint { index: usize, from: usize, to: usize },
    #[error("edge {index}: probability {prob} outside (0,1]")]
    EdgeProbability { index: usize, prob: f64 },
    #[error("edge {index}: self-loop at {node}")]
    SelfLoop { index: usize, node: usize },
    #[error("edge {index}: duplicate edge {from} -> {to}")]
    DuplicateEdge { index: usize, from: usize, to: usize },
    #[error("budget for {side} must be at least 1")]
    ZeroBudget { side: Side },
    #[error("budget exceeds ground set: {side} budget {budget} > {size}")]
    BudgetExceedsGroundSet { side: Side, budget: usize, size: usize },
}

/// Lists every invariant violation of `instance`; empty iff well-formed.
pub fn validate(instance: &AimInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    let (n, m) = (instance.n_providers, instance.n_consumers);
    let mat = &instance.bipartite;
    if mat.rows() != n || mat.cols() != m {
        out.push(Violation::MatrixShape { rows: mat.rows(), cols: mat.cols(), n, m });
    }
    if instance.bit_precision == 0 {
        out.push(Violation::ZeroBitPrecision);
    }
    let floor = instance.min_entry();
    for row in 0..mat.rows() {
        for col in 0..mat.cols() {
            let value = mat.get(row, col);
            if !(0.0..=1.0).contains(&value) {
                out.push(Violation::EntryOutOfRange { row, col, value });
            } else if value > 0.0 && value < floor && instance.bit_precision > 0 {
                out.push(Violation::EntryBelowPrecision { row, col, value, lambda: instance.bit_precision });
            }
        }
    }

    let mut seen = HashSet::new();
    for (index, e) in instance.social_edges.iter().enumerate() {
        if e.source >= m || e.target >= m {
            out.push(Violation::EdgeEndpoint { index, from: e.source, to: e.target });
        }
        if !(e.prob > 0.0 && e.prob <= 1.0) {
            out.push(Violation::EdgeProbability { index, prob: e.prob });
        }
        if e.source == e.target {
            out.push(Violation::SelfLoop { index, node: e.source });
        }
        if !seen.insert((e.source, e.target)) {
            out.push(Violation::DuplicateEdge { index, from: e.source, to: e.target });
        }
    }

    for (side, budget, size) in
        [(Side::Providers, instance.budget_providers, n), (Side::Consumers, instance.budget_consumers, m)]
    {
        if budget == 0 {
            out.push(Violation::ZeroBudget { side });
        } else if budget > size {
            out.push(Violation::BudgetExceedsGroundSet { side, budget, size });
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    n: usize,
    m: usize,
    bipartite: BipartiteDoc,
    #[serde(default)]
    social_edges: Vec<(usize, usize, f64)>,
    budgets: BudgetsDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bit_precision: Option<u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BipartiteDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dense: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right: Option<Vec<Vec<f64>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BudgetsDoc {
    providers: usize,
    consumers: usize,
}

/// Parses a JSON instance document and validates it.
///
/// The bipartite block is either `{"dense": [[..]]}` or the factored form
/// `{"left": n x r, "right": r x m}`, whose product is clamped into `[0, 1]`.
pub fn parse_instance(text: &str) -> Result<AimInstance> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let bipartite = match doc.bipartite {
        BipartiteDoc { dense: Some(rows), left: None, right: None } => {
            Matrix::from_rows(&rows).map_err(|e| Error::Parse(format!("bipartite.dense: {e}")))?
        }
        BipartiteDoc { dense: None, left: Some(left), right: Some(right) } => {
            let left = Matrix::from_rows(&left).map_err(|e| Error::Parse(format!("bipartite.left: {e}")))?;
            let right = Matrix::from_rows(&right).map_err(|e| Error::Parse(format!("bipartite.right: {e}")))?;
            Matrix::clamped_product(&left, &right).map_err(|e| Error::Parse(format!("bipartite.left x right: {e}")))?
        }
        _ => return Err(Error::Parse("bipartite: expected exactly one of `dense` or the pair `left`/`right`".into())),
    };
    // An empty row list carries no column count.
    let bipartite = if bipartite.rows() == 0 { Matrix::zeros(0, doc.m) } else { bipartite };
    AimInstance {
        n_providers: doc.n,
        n_consumers: doc.m,
        bipartite,
        social_edges: doc
            .social_edges
            .into_iter()
            .map(|(source, target, prob)| SocialEdge { source, target, prob })
            .collect(),
        budget_providers: doc.budgets.providers,
        budget_consumers: doc.budgets.consumers,
        bit_precision: doc.bit_precision.unwrap_or(DEFAULT_BIT_PRECISION),
    }
    .checked()
}

/// Serializes to the JSON instance document (dense form, explicit bit precision).
pub fn serialize_instance(instance: &AimInstance) -> String {
    let doc = InstanceDoc {
        n: instance.n_providers,
        m: instance.n_consumers,
        bipartite: BipartiteDoc { dense: Some(instance.bipartite.to_rows()), left: None, right: None },
        social_edges: instance.social_edges.iter().map(|e| (e.source, e.target, e.prob)).collect(),
        budgets: BudgetsDoc { providers: instance.budget_providers, consumers: instance.budget_consumers },
        bit_precision: Some(instance.bit_precision),
    };
    serde_json::to_string(&doc).expect("instance document is always serializable")
}

/// `r` linearly independent rows of the bipartite matrix spanning all of its rows.
#[derive(Clone, Debug, PartialEq)]
pub struct RankBasis {
    pub rank: usize,
    pub row_indices: Vec<usize>,
    pub basis_rows: Vec<Vec<f64>>,
}

impl RankBasis {
    pub fn dim(&self) -> usize {
        self.basis_rows.first().map_or(0, Vec::len)
    }

    /// Least-squares coefficients of `w` against the basis rows.
    pub fn coefficients(&self, w: &[f64]) -> Vec<f64> {
        let r = self.rank;
        if r == 0 {
            return Vec::new();
        }
        let mut gram = vec![0.0; r * r];
        for a in 0..r {
            for b in 0..r {
                gram[a * r + b] = dot(&self.basis_rows[a], &self.basis_rows[b]);
            }
        }
        let rhs: Vec<f64> = self.basis_rows.iter().map(|v| dot(v, w)).collect();
        match Lu::factor(&gram, r, 0.0) {
            Some(lu) => lu.solve(&rhs),
            None => vec![0.0; r],
        }
    }

    /// `sum_k coeffs[k] * basis_rows[k]`.
    pub fn combine(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (c, row) in coeffs.iter().zip(&self.basis_rows) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += c * v;
            }
        }
        out
    }

    /// Max-abs distance from `w` to its least-squares reconstruction.
    pub fn reconstruction_error(&self, w: &[f64]) -> f64 {
        if self.rank == 0 {
            return max_abs(w);
        }
        let fit = self.combine(&self.coefficients(w));
        w.iter().zip(&fit).fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

/// Greedy row scan: a row joins the basis when its residual after projection onto the
/// current span has max-abs entry above `tol`. Rows are visited in index order, so the
/// basis is deterministic and prefers low row indices.
pub fn numerical_rank(matrix: &Matrix, tol: f64) -> RankBasis {
    let mut orthonormal: Vec<Vec<f64>> = Vec::new();
    let mut row_indices = Vec::new();
    let mut basis_rows = Vec::new();
    for i in 0..matrix.rows() {
        let row = matrix.row(i);
        let mut residual = row.to_vec();
        // two projection passes keep the residual orthogonal in floating point
        for _ in 0..2 {
            for q in &orthonormal {
                let c = dot(q, &residual);
                for (r, qv) in residual.iter_mut().zip(q) {
                    *r -= c * qv;
                }
            }
        }
        if max_abs(&residual) > tol {
            let norm = dot(&residual, &residual).sqrt();
            orthonormal.push(residual.iter().map(|x| x / norm).collect());
            row_indices.push(i);
            basis_rows.push(row.to_vec());
        }
    }
    RankBasis { rank: row_indices.len(), row_indices, basis_rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(m00: f64) -> AimInstance {
        AimInstance {
            n_providers: 2,
            n_consumers: 2,
            bipartite: Matrix::from_rows(&[vec![m00, 0.5], vec![0.25, 0.0]]).unwrap(),
            social_edges: vec![SocialEdge { source: 0, target: 1, prob: 0.5 }],
            budget_providers: 1,
            budget_consumers: 1,
            bit_precision: 20,
        }
    }

    #[test]
    fn well_formed_instance_has_no_violations() {
        assert!(validate(&tiny(0.5)).is_empty());
    }

    #[test]
    fn entry_above_one_is_reported() {
        let v = validate(&tiny(1.2));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0], Violation::EntryOutOfRange { row: 0, col: 0, value: 1.2 });
        assert!(v[0].to_string().starts_with("entry out of [0,1] at (0,0)"));
    }

    #[test]
    fn oversized_consumer_budget_is_reported() {
        let mut inst = tiny(0.5);
        inst.budget_consumers = 3;
        let v = validate(&inst);
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().starts_with("budget exceeds ground set"));
    }

    #[test]
    fn edge_violations_are_located() {
        let mut inst = tiny(0.5);
        inst.social_edges = vec![
            SocialEdge { source: 0, target: 1, prob: 0.5 },
            SocialEdge { source: 0, target: 1, prob: 0.3 },
            SocialEdge { source: 1, target: 1, prob: 0.3 },
            SocialEdge { source: 1, target: 0, prob: 0.0 },
            SocialEdge { source: 1, target: 7, prob: 0.5 },
        ];
        let v = validate(&inst);
        assert!(v.contains(&Violation::DuplicateEdge { index: 1, from: 0, to: 1 }));
        assert!(v.contains(&Violation::SelfLoop { index: 2, node: 1 }));
        assert!(v.contains(&Violation::EdgeProbability { index: 3, prob: 0.0 }));
        assert!(v.contains(&Violation::EdgeEndpoint { index: 4, from: 1, to: 7 }));
    }

    #[test]
    fn bit_precision_floor_is_enforced() {
        let mut inst = tiny(0.5);
        inst.bipartite.set(1, 0, 1e-3);
        inst.bit_precision = 4;
        let v = validate(&inst);
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::EntryBelowPrecision { row: 1, col: 0, .. }));
    }

    #[test]
    fn minimal_document_parses() {
        let doc = r#"{"n":1,"m":1,"bipartite":{"dense":[[0.5]]},"social_edges":[],
                      "budgets":{"providers":1,"consumers":1}}"#;
        let inst = parse_instance(doc).unwrap();
        assert_eq!((inst.n_providers, inst.n_consumers), (1, 1));
        assert_eq!(inst.bit_precision, DEFAULT_BIT_PRECISION);
        assert_eq!(inst.bipartite.get(0, 0), 0.5);
    }

    #[test]
    fn missing_budgets_names_the_field() {
        let doc = r#"{"n":1,"m":1,"bipartite":{"dense":[[0.5]]},"social_edges":[]}"#;
        let err = parse_instance(doc).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        assert!(err.to_string().contains("budgets"), "{err}");
    }

    #[test]
    fn factored_document_is_materialized_and_clamped() {
        let doc = r#"{"n":2,"m":3,
            "bipartite":{"left":[[0.5,0.2],[1.0,1.0]],"right":[[0.4,0.8,0.0],[0.5,0.9,0.2]]},
            "budgets":{"providers":1,"consumers":2},"bit_precision":8}"#;
        let inst = parse_instance(doc).unwrap();
        // 0.5*0.4 + 0.2*0.5 = 0.3 by hand
        assert!((inst.bipartite.get(0, 0) - 0.3).abs() < 1e-15);
        // 1.0*0.8 + 1.0*0.9 = 1.7 clamps to 1
        assert_eq!(inst.bipartite.get(1, 1), 1.0);
    }

    #[test]
    fn ambiguous_bipartite_block_is_rejected() {
        let doc = r#"{"n":1,"m":1,"bipartite":{"dense":[[0.5]],"left":[[1.0]]},
                      "budgets":{"providers":1,"consumers":1}}"#;
        assert!(matches!(parse_instance(doc), Err(Error::Parse(_))));
    }

    #[test]
    fn invalid_document_forwards_violations() {
        let doc = r#"{"n":1,"m":1,"bipartite":{"dense":[[1.5]]},
                      "budgets":{"providers":1,"consumers":2}}"#;
        match parse_instance(doc) {
            Err(Error::InvalidInstance(v)) => assert_eq!(v.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn serialized_shape() {
        let mut inst = tiny(0.5);
        inst.social_edges.clear();
        let text = serialize_instance(&inst);
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["social_edges"], serde_json::json!([]));

        let wide = AimInstance {
            n_providers: 2,
            n_consumers: 3,
            bipartite: Matrix::filled(2, 3, 0.5),
            social_edges: vec![],
            budget_providers: 1,
            budget_consumers: 1,
            bit_precision: 3,
        };
        let value: serde_json::Value = serde_json::from_str(&serialize_instance(&wide)).unwrap();
        for row in value["bipartite"]["dense"].as_array().unwrap() {
            assert_eq!(row.as_array().unwrap().len(), 3);
        }
    }

    #[test]
    fn rank_of_outer_product_is_one() {
        let u = [0.0, 0.3, 0.6];
        let w = [0.2, 0.5, 1.0, 0.1];
        let rows: Vec<Vec<f64>> = u.iter().map(|a| w.iter().map(|b| a * b).collect()).collect();
        let basis = numerical_rank(&Matrix::from_rows(&rows).unwrap(), DEFAULT_RANK_TOL);
        assert_eq!(basis.rank, 1);
        // row 0 is zero, so the first nonzero row is chosen
        assert_eq!(basis.row_indices, vec![1]);
    }

    #[test]
    fn rank_of_scaled_identity() {
        let mut m = Matrix::zeros(3, 3);
        for i in 0..3 {
            m.set(i, i, 0.5);
        }
        let basis = numerical_rank(&m, DEFAULT_RANK_TOL);
        assert_eq!(basis.rank, 3);
        assert_eq!(basis.row_indices, vec![0, 1, 2]);
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let basis = numerical_rank(&Matrix::zeros(2, 4), DEFAULT_RANK_TOL);
        assert_eq!(basis.rank, 0);
        assert_eq!(basis.reconstruction_error(&[0.0; 4]), 0.0);
    }
}

//! Binary relations as adjacency matrices: composition, overlap and Horn
//! checks computed with matrix products and traces instead of a compiled
//! program.

use std::fmt::Write as _;

use thiserror::Error;

use crate::evaluator::TRUTH_TOLERANCE;
use crate::tensor::{DenseTensor, TensorError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatError {
    #[error("matrix sizes differ: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("entry ({row}, {col}) = {value} is not 0 or 1")]
    NotBoolean { row: usize, col: usize, value: f64 },

    #[error("expected an order-2 tensor, got order {0}")]
    NotMatrix(usize),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("a matrix needs at least one row")]
    Empty,

    #[error("{value} is not within tolerance of an integer")]
    NotIntegral { value: f64 },

    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Square matrix, row-major, `data[i][j]` encoding `r(e_{i+1}, e_{j+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjMatrix(DenseTensor);

impl AdjMatrix {
    pub fn zeros(n: usize) -> Self {
        Self(DenseTensor::zeros(2, n))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| (i == j) as u8 as f64)
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self(DenseTensor::from_fn(2, n, |ix| f(ix[0], ix[1])))
    }

    pub fn from_tensor(t: DenseTensor) -> Result<Self, MatError> {
        if t.order() != 2 {
            return Err(MatError::NotMatrix(t.order()));
        }
        Ok(Self(t))
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self, MatError> {
        Ok(Self(DenseTensor::from_vec(2, n, data)?))
    }

    /// 0-based edges. Panics if an endpoint is out of range.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut m = Self::zeros(n);
        for &(i, j) in edges {
            m.set(i, j, 1.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.data()[i * self.dim() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.dim() && j < self.dim(), "({i}, {j}) out of range");
        let n = self.dim();
        self.0.set(&[i, j], v);
        debug_assert_eq!(self.0.data()[i * n + j], v);
    }

    pub fn data(&self) -> &[f64] {
        self.0.data()
    }

    pub fn tensor(&self) -> &DenseTensor {
        &self.0
    }

    pub fn into_tensor(self) -> DenseTensor {
        self.0
    }

    /// 0-based pairs whose entry is 1, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.dim();
        (0..n * n)
            .filter(|&k| self.0.data()[k] > 0.5)
            .map(|k| (k / n, k % n))
            .collect()
    }

    pub fn count_ones(&self) -> usize {
        self.0.data().iter().filter(|&&v| v > 0.5).count()
    }

    pub fn check_boolean(&self) -> Result<(), MatError> {
        let n = self.dim();
        match self.0.data().iter().position(|&v| v != 0.0 && v != 1.0) {
            Some(k) => Err(MatError::NotBoolean {
                row: k / n,
                col: k % n,
                value: self.0.data()[k],
            }),
            None => Ok(()),
        }
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.move_mode_to_front(1).expect("order 2"))
    }

    pub fn complement(&self) -> Result<Self, MatError> {
        Ok(Self(self.0.complement()?))
    }

    pub fn min1(&self) -> Self {
        Self(self.0.min1())
    }

    /// Ordinary matrix product `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self, MatError> {
        same_dim(self, other)?;
        Ok(Self(self.0.contract(1, &other.0, 0)?))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// Entrywise `self ≤ other`.
    pub fn le(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.data().iter().zip(other.data()).all(|(a, b)| a <= b)
    }

    /// Dense CSV: N rows of N comma-separated numbers.
    pub fn read_csv(text: &str) -> Result<Self, MatError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let line = i + 1;
            let rec = rec.map_err(|e| MatError::Parse {
                line,
                message: e.to_string(),
            })?;
            let row = rec
                .iter()
                .map(|field| {
                    field.parse::<f64>().map_err(|_| MatError::Parse {
                        line,
                        message: format!("`{field}` is not a number"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        let n = rows.len();
        if n == 0 {
            return Err(MatError::Empty);
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(MatError::Parse {
                line: i + 1,
                message: format!("expected {n} columns, found {}", r.len()),
            });
        }
        Self::from_vec(n, rows.concat())
    }

    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut out = String::new();
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| fmt_entry(self.get(i, j))).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Edge list: one `i j` pair per line, 1-based; blank lines and lines
    /// starting with `#` or `%` are skipped. The size is `n` if given,
    /// otherwise the largest endpoint.
    pub fn read_edge_list(text: &str, n: Option<usize>) -> Result<Self, MatError> {
        let mut edges = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
                continue;
            }
            let parse_err = |message: String| MatError::Parse { line: i + 1, message };
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [a, b] = parts[..] else {
                return Err(parse_err(format!("expected `i j`, found `{line}`")));
            };
            let endpoint = |s: &str| match s.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(parse_err(format!("`{s}` is not a 1-based index"))),
            };
            edges.push((endpoint(a)?, endpoint(b)?));
        }
        let max = edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
        let n = match n {
            Some(n) if n < max => {
                return Err(MatError::Parse {
                    line: 0,
                    message: format!("endpoint {max} exceeds n = {n}"),
                })
            }
            Some(n) => n,
            None => max,
        };
        if n == 0 {
            return Err(MatError::Empty);
        }
        Ok(Self::from_edges(n, &edges))
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (i, j) in self.edges() {
            let _ = writeln!(out, "{} {}", i + 1, j + 1);
        }
        out
    }
}

fn fmt_entry(v: f64) -> String {
    if v == 0.0 || v == 1.0 {
        format!("{}", v as u8)
    } else {
        format!("{v}")
    }
}

fn same_dim(a: &AdjMatrix, b: &AdjMatrix) -> Result<(), MatError> {
    if a.dim() != b.dim() {
        return Err(MatError::DimMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

fn to_count(v: f64) -> Result<usize, MatError> {
    let r = v.round();
    if (v - r).abs() >= TRUTH_TOLERANCE || r < 0.0 {
        return Err(MatError::NotIntegral { value: v });
    }
    Ok(r as usize)
}

/// `min₁(R₁R₂)`: the relation `∃y r1(x,y) ∧ r2(y,z)`.
pub fn compose(r1: &AdjMatrix, r2: &AdjMatrix) -> Result<AdjMatrix, MatError> {
    Ok(r1.matmul(r2)?.min1())
}

/// `min₁(tr(R₁R₂ᵀ))`: truth of `∃x∃y r1(x,y) ∧ r2(x,y)`.
pub fn exists_pair_overlap(r1: &AdjMatrix, r2: &AdjMatrix) -> Result<u8, MatError> {
    let count = to_count(r1.matmul(&r2.transpose())?.trace())?;
    Ok(count.min(1) as u8)
}

/// Checks `∀x∀y r1(x,y) ⇒ r2(x,y)`. The violation count is
/// `tr(R₁(¬R₂)ᵀ)`, the number of pairs in `r1` but not `r2`.
pub fn horn_subset(r1: &AdjMatrix, r2: &AdjMatrix) -> Result<(u8, usize), MatError> {
    r1.check_boolean()?;
    r2.check_boolean()?;
    same_dim(r1, r2)?;
    let violations = to_count(r1.matmul(&r2.complement()?.transpose())?.trace())?;
    Ok((1 - violations.min(1) as u8, violations))
}

/// Checks `∀x∀z (∃y r1(x,y) ∧ r2(y,z)) ⇒ r3(x,z)`; violations are
/// `tr(min₁(R₁R₂)(¬R₃)ᵀ)`.
pub fn horn_transitivity(r1: &AdjMatrix, r2: &AdjMatrix, r3: &AdjMatrix) -> Result<(u8, usize), MatError> {
    for r in [r1, r2, r3] {
        r.check_boolean()?;
    }
    same_dim(r1, r3)?;
    let composed = compose(r1, r2)?;
    let violations = to_count(composed.matmul(&r3.complement()?.transpose())?.trace())?;
    Ok((1 - violations.min(1) as u8, violations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn boolean_matrix(max_n: usize) -> impl Strategy<Value = AdjMatrix> {
        (1..=max_n).prop_flat_map(|n| {
            proptest::collection::vec(proptest::bool::ANY, n * n)
                .prop_map(move |bits| AdjMatrix::from_vec(n, bits.iter().map(|&b| b as u8 as f64).collect()).unwrap())
        })
    }

    fn pair(max_n: usize) -> impl Strategy<Value = (AdjMatrix, AdjMatrix)> {
        (1..=max_n).prop_flat_map(|n| {
            let m = move || {
                proptest::collection::vec(proptest::bool::ANY, n * n)
                    .prop_map(move |bits| AdjMatrix::from_vec(n, bits.iter().map(|&b| b as u8 as f64).collect()).unwrap())
            };
            (m(), m())
        })
    }

    #[test]
    fn compose_path() {
        let r1 = AdjMatrix::from_edges(3, &[(0, 1)]);
        let r2 = AdjMatrix::from_edges(3, &[(1, 2)]);
        assert_eq!(compose(&r1, &r2).unwrap(), AdjMatrix::from_edges(3, &[(0, 2)]));
        assert_eq!(compose(&r1, &AdjMatrix::identity(3)).unwrap(), r1);
        assert_eq!(
            compose(&r1, &AdjMatrix::zeros(2)),
            Err(MatError::DimMismatch { left: 3, right: 2 })
        );
    }

    #[test]
    fn overlap_examples() {
        let shared = AdjMatrix::from_edges(3, &[(0, 2)]);
        assert_eq!(exists_pair_overlap(&shared, &shared).unwrap(), 1);
        let other = AdjMatrix::from_edges(3, &[(2, 0)]);
        assert_eq!(exists_pair_overlap(&shared, &other).unwrap(), 0);
    }

    #[test]
    fn horn_examples() {
        let r1 = AdjMatrix::from_edges(3, &[(0, 1)]);
        let r2 = AdjMatrix::from_edges(3, &[(0, 1), (1, 2)]);
        assert_eq!(horn_subset(&r1, &r2).unwrap(), (1, 0));
        let r1 = AdjMatrix::from_edges(3, &[(0, 0), (0, 1), (1, 0), (2, 2)]);
        let r2 = AdjMatrix::from_edges(3, &[(0, 1)]);
        assert_eq!(horn_subset(&r1, &r2).unwrap(), (0, 3));
        let half = AdjMatrix::from_vec(1, vec![0.5]).unwrap();
        assert!(matches!(horn_subset(&half, &half), Err(MatError::NotBoolean { .. })));

        let a = AdjMatrix::from_edges(3, &[(0, 1)]);
        let b = AdjMatrix::from_edges(3, &[(1, 2)]);
        assert_eq!(horn_transitivity(&a, &b, &compose(&a, &b).unwrap()).unwrap(), (1, 0));
        assert_eq!(horn_transitivity(&a, &b, &AdjMatrix::zeros(3)).unwrap().0, 0);
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let m = AdjMatrix::read_csv("0,1,0\n 0, 0 ,1\n1,0,0\n").unwrap();
        assert_eq!(m, AdjMatrix::from_edges(3, &[(0, 1), (1, 2), (2, 0)]));
        assert_eq!(AdjMatrix::read_csv(&m.to_csv()).unwrap(), m);
        assert!(matches!(AdjMatrix::read_csv("0,1\n1\n"), Err(MatError::Parse { line: 2, .. })));
        assert!(matches!(AdjMatrix::read_csv("0,x\n1,0\n"), Err(MatError::Parse { line: 1, .. })));
        assert_eq!(AdjMatrix::read_csv(""), Err(MatError::Empty));
    }

    #[test]
    fn edge_list_round_trip_and_errors() {
        let m = AdjMatrix::read_edge_list("# chain\n1 2\n2 3\n\n", None).unwrap();
        assert_eq!(m.dim(), 3);
        assert_eq!(m.edges(), vec![(0, 1), (1, 2)]);
        assert_eq!(m.to_edge_list(), "1 2\n2 3\n");
        assert_eq!(AdjMatrix::read_edge_list("1 2\n", Some(5)).unwrap().dim(), 5);
        assert_eq!(AdjMatrix::read_edge_list("", Some(4)).unwrap(), AdjMatrix::zeros(4));
        assert!(matches!(AdjMatrix::read_edge_list("0 1\n", None), Err(MatError::Parse { line: 1, .. })));
        assert!(matches!(AdjMatrix::read_edge_list("1 2 3\n", None), Err(MatError::Parse { .. })));
        assert!(AdjMatrix::read_edge_list("1 9\n", Some(3)).is_err());
        assert_eq!(AdjMatrix::read_edge_list("", None), Err(MatError::Empty));
    }

    proptest! {
        #[test]
        fn compose_matches_loops((r1, r2) in pair(6)) {
            let n = r1.dim();
            let c = compose(&r1, &r2).unwrap();
            for x in 0..n {
                for z in 0..n {
                    let any = (0..n).any(|y| r1.get(x, y) == 1.0 && r2.get(y, z) == 1.0);
                    prop_assert_eq!(c.get(x, z), any as u8 as f64);
                }
            }
        }

        #[test]
        fn overlap_is_symmetric_and_matches_loops((r1, r2) in pair(6)) {
            let any = r1.data().iter().zip(r2.data()).any(|(a, b)| *a == 1.0 && *b == 1.0);
            prop_assert_eq!(exists_pair_overlap(&r1, &r2).unwrap(), any as u8);
            prop_assert_eq!(exists_pair_overlap(&r2, &r1).unwrap(), any as u8);
        }

        #[test]
        fn horn_subset_counts_pairs((r1, r2) in pair(6)) {
            let outside = r1.data().iter().zip(r2.data()).filter(|(a, b)| **a == 1.0 && **b == 0.0).count();
            let (truth, violations) = horn_subset(&r1, &r2).unwrap();
            prop_assert_eq!(violations, outside);
            prop_assert_eq!(truth == 1, r1.le(&r2));
        }

        #[test]
        fn transpose_is_involutive(r in boolean_matrix(5)) {
            prop_assert_eq!(r.transpose().transpose(), r.clone());
            for (i, j) in r.edges() {
                prop_assert_eq!(r.transpose().get(j, i), 1.0);
            }
        }
    }
}

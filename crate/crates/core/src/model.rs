//! Saturation-model channel, consistency predicates and counting bounds.
//!
//! Subjects and tests are 0-based inside the library; the text formats in
//! [`crate::format`] use 1-based subject indices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quantization threshold `(4γ)^γ` for a merge factor `γ`.
pub fn threshold_for(gamma: u32) -> Result<u64> {
    if gamma == 0 {
        return Err(Error::parameter("gamma must be at least 1"));
    }
    let base = 4 * u64::from(gamma);
    base.checked_pow(gamma)
        .ok_or_else(|| Error::parameter(format!("tau = ({base})^{gamma} overflows u64")))
}

/// Problem instance: population `n`, at most `d` defectives, merge factor
/// `gamma` and the matching threshold count `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SqgtParams {
    pub n: usize,
    pub d: usize,
    pub gamma: u32,
    pub tau: u64,
}

impl SqgtParams {
    pub fn new(n: usize, d: usize, gamma: u32) -> Result<Self> {
        if d < 1 || d >= n {
            return Err(Error::parameter(format!(
                "need 1 <= d < n, got n={n}, d={d}"
            )));
        }
        let tau = threshold_for(gamma)?;
        Ok(Self { n, d, gamma, tau })
    }

    /// Radix of the digit expansion, `4γ`.
    pub fn radix(&self) -> u64 {
        4 * u64::from(self.gamma)
    }
}

/// Nonnegative-integer measurement matrix. Rows are tests, columns are
/// subjects, entries are sample units. Stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u64>,
}

impl TestMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<u64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::instance("matrix dimensions must be positive"));
        }
        if entries.len() != rows * cols {
            return Err(Error::instance(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0; rows * cols])
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::instance("ragged rows"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.entries[row * self.cols + col]
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, value: u64) {
        self.entries[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[u64] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = u64> + '_ {
        (0..self.rows).map(move |r| self.get(r, col))
    }

    /// Row indices where column `col` is nonzero, ascending.
    pub fn column_support(&self, col: usize) -> Vec<usize> {
        (0..self.rows).filter(|&r| self.get(r, col) != 0).collect()
    }

    pub fn is_binary(&self) -> bool {
        self.entries.iter().all(|&e| e <= 1)
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub(crate) fn require_binary(&self) -> Result<()> {
        if self.is_binary() {
            Ok(())
        } else {
            Err(Error::instance("matrix must be binary"))
        }
    }
}

/// A set of subjects, held as sorted distinct 0-based indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DefectiveSet {
    members: Vec<usize>,
}

impl DefectiveSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a set over subjects `0..n`; duplicates are rejected.
    pub fn new(mut members: Vec<usize>, n: usize) -> Result<Self> {
        members.sort_unstable();
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::instance("duplicate subject in defective set"));
        }
        if let Some(&last) = members.last() {
            if last >= n {
                return Err(Error::instance(format!(
                    "subject index {} out of range for population {n}",
                    last + 1
                )));
            }
        }
        Ok(Self { members })
    }

    /// Same as [`DefectiveSet::new`] but from 1-based labels.
    pub fn from_one_based(labels: &[usize], n: usize) -> Result<Self> {
        if labels.contains(&0) {
            return Err(Error::instance("subject labels are 1-based"));
        }
        Self::new(labels.iter().map(|&l| l - 1).collect(), n)
    }

    pub(crate) fn from_sorted_unchecked(members: Vec<usize>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        Self { members }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.members.iter().map(|&m| m + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, subject: usize) -> bool {
        self.members.binary_search(&subject).is_ok()
    }

    pub fn is_subset_of(&self, other: &DefectiveSet) -> bool {
        self.members.iter().all(|&m| other.contains(m))
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }
}

/// Per-test readings. Indicator vectors (binary channel) are the case where
/// every value is 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OutcomeVector {
    values: Vec<u64>,
}

impl OutcomeVector {
    pub fn new(values: Vec<u64>) -> Self {
        Self { values }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0; len],
        }
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<u64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_indicator(&self) -> bool {
        self.values.iter().all(|&v| v <= 1)
    }

    /// Entrywise `self <= other`. Lengths must agree.
    pub fn dominated_by(&self, other: &OutcomeVector) -> bool {
        self.len() == other.len() && self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }

    /// Number of positions where the two vectors differ.
    pub fn hamming(&self, other: &OutcomeVector) -> usize {
        assert_eq!(
            self.len(),
            other.len(),
            "hamming distance needs equal lengths"
        );
        self.values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| a != b)
            .count()
    }

    pub fn check_range(&self, tau: u64) -> Result<()> {
        match self.values.iter().position(|&v| v >= tau) {
            Some(i) => Err(Error::instance(format!(
                "reading {} at test {} is outside [0, {}]",
                self.values[i],
                i + 1,
                tau - 1
            ))),
            None => Ok(()),
        }
    }
}

fn check_members(matrix: &TestMatrix, defectives: &DefectiveSet) -> Result<()> {
    match defectives.members().last() {
        Some(&last) if last >= matrix.cols() => Err(Error::instance(format!(
            "defective subject {} does not exist in a matrix with {} columns",
            last + 1,
            matrix.cols()
        ))),
        _ => Ok(()),
    }
}

/// Saturation channel: test `l` reads `min(sum_{j in I} M(l, j), tau - 1)`.
pub fn simulate_outcomes(
    matrix: &TestMatrix,
    defectives: &DefectiveSet,
    tau: u64,
) -> Result<OutcomeVector> {
    if tau < 2 {
        return Err(Error::parameter("tau must be at least 2"));
    }
    check_members(matrix, defectives)?;
    let cap = tau - 1;
    let values = (0..matrix.rows())
        .map(|l| {
            let row = matrix.row(l);
            let sum = defectives
                .iter()
                .fold(0u64, |acc, j| acc.saturating_add(row[j]));
            sum.min(cap)
        })
        .collect();
    Ok(OutcomeVector::new(values))
}

/// Conventional OR channel on a binary matrix.
pub fn binary_outcome(matrix: &TestMatrix, defectives: &DefectiveSet) -> Result<OutcomeVector> {
    matrix.require_binary()?;
    simulate_outcomes(matrix, defectives, 2)
}

/// `candidate` is consistent with `observed` when its own OR outcome is
/// dominated entrywise by `observed`.
pub fn is_consistent(
    candidate: &DefectiveSet,
    matrix: &TestMatrix,
    observed: &OutcomeVector,
) -> Result<bool> {
    if observed.len() != matrix.rows() {
        return Err(Error::instance(format!(
            "outcome length {} does not match {} tests",
            observed.len(),
            matrix.rows()
        )));
    }
    let implied = binary_outcome(matrix, candidate)?;
    Ok(implied.dominated_by(observed))
}

/// Counting bound for adaptive schemes: `(d / log2 tau) * log2(n / d)`.
pub fn adaptive_lower_bound(n: usize, d: usize, tau: u64) -> f64 {
    let (n, d) = (n as f64, d as f64);
    d / (tau as f64).log2() * (n / d).log2()
}

/// Order-of-growth reference for nonadaptive schemes:
/// `d^2 / (log2 tau)^3 * log_d(n)`. Not a certified constant.
pub fn nonadaptive_lower_bound(n: usize, d: usize, tau: u64) -> Result<f64> {
    if d < 2 {
        return Err(Error::instance("log base d is undefined for d < 2"));
    }
    let log_tau = (tau as f64).log2();
    let (n, d) = (n as f64, d as f64);
    Ok(d * d / log_tau.powi(3) * (n.ln() / d.ln()))
}

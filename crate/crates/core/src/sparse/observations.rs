use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::SparseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub row: usize,
    pub col: usize,
    pub value: f64,
    pub split: Split,
}

/// Sampled entries `M_ij, (i, j) in Phi` of an `rows x cols` matrix, each
/// tagged as training or held-out.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    rows: usize,
    cols: usize,
    entries: Vec<Observation>,
}

impl ObservationSet {
    /// Validates index ranges, finiteness, and uniqueness of positions within each split.
    pub fn new(rows: usize, cols: usize, entries: Vec<Observation>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimensions(format!(
                "observation set must be at least 1x1, got {rows}x{cols}"
            )));
        }
        let mut seen = HashSet::with_capacity(entries.len());
        for o in &entries {
            if o.row >= rows || o.col >= cols {
                return Err(Error::IndexOutOfRange {
                    row: o.row,
                    col: o.col,
                    rows,
                    cols,
                });
            }
            if !o.value.is_finite() {
                return Err(Error::NonFinite("observation value"));
            }
            if !seen.insert((o.row, o.col, o.split)) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate observation ({}, {}) in {:?} split",
                    o.row, o.col, o.split
                )));
            }
        }
        Ok(ObservationSet { rows, cols, entries })
    }

    /// Builds an all-training set from triplets, keeping the last value for
    /// repeated positions. Returns the number of duplicates dropped.
    pub fn from_triplets_last_wins(
        rows: usize,
        cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<(Self, usize)> {
        let (m, dups) = SparseMatrix::from_triplets(rows, cols, triplets)?;
        let entries = m
            .iter()
            .map(|(row, col, value)| Observation {
                row,
                col,
                value,
                split: Split::Train,
            })
            .collect();
        Ok((ObservationSet { rows, cols, entries }, dups))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Observation] {
        &self.entries
    }

    pub fn train(&self) -> impl Iterator<Item = &Observation> {
        self.entries.iter().filter(|o| o.split == Split::Train)
    }

    pub fn test(&self) -> impl Iterator<Item = &Observation> {
        self.entries.iter().filter(|o| o.split == Split::Test)
    }

    pub fn train_len(&self) -> usize {
        self.train().count()
    }

    pub fn test_len(&self) -> usize {
        self.test().count()
    }

    /// Same entries with split tags replaced; `tags.len()` must equal `len()`.
    pub fn with_splits(&self, tags: &[Split]) -> Result<Self> {
        if tags.len() != self.entries.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} split tags for {} observations",
                tags.len(),
                self.entries.len()
            )));
        }
        let entries = self
            .entries
            .iter()
            .zip(tags)
            .map(|(o, &split)| Observation { split, ..*o })
            .collect();
        ObservationSet::new(self.rows, self.cols, entries)
    }

    /// Same positions and tags with every value multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|o| Observation {
                value: o.value * alpha,
                ..*o
            })
            .collect();
        ObservationSet {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    /// `P_Phi(M)` over the training split as a CSR matrix.
    pub fn train_matrix(&self) -> Result<SparseMatrix> {
        let triplets: Vec<(usize, usize, f64)> =
            self.train().map(|o| (o.row, o.col, o.value)).collect();
        if triplets.is_empty() {
            return Err(Error::Empty("no training observations".into()));
        }
        Ok(SparseMatrix::from_triplets(self.rows, self.cols, &triplets)?.0)
    }

    /// Rows and columns that appear only in the held-out split.
    pub fn cold_start_counts(&self) -> ColdStart {
        let mut train_rows = vec![false; self.rows];
        let mut train_cols = vec![false; self.cols];
        for o in self.train() {
            train_rows[o.row] = true;
            train_cols[o.col] = true;
        }
        let mut rows: HashSet<usize> = HashSet::new();
        let mut cols: HashSet<usize> = HashSet::new();
        for o in self.test() {
            if !train_rows[o.row] {
                rows.insert(o.row);
            }
            if !train_cols[o.col] {
                cols.insert(o.col);
            }
        }
        ColdStart {
            rows: rows.len(),
            cols: cols.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ColdStart {
    pub rows: usize,
    pub cols: usize,
}

impl ColdStart {
    pub fn total(&self) -> usize {
        self.rows + self.cols
    }
}

//! Tabular data with explicit missingness, plus ingestion and feature
//! engineering: CSV IO, one-hot encoding, time-on-line, undersampling and a
//! synthetic generator for the manufacturing-failure regime.

mod csv_io;
mod features;
mod sampling;
mod synthetic;

pub use csv_io::{dataset_to_csv, load_csv, save_csv, ColumnRole, Schema};
pub use features::{one_hot, prepare_features, time_on_line, TIME_ON_LINE};
pub use sampling::{train_validation_split, undersample, SplitSpec, DEFAULT_UNDERSAMPLE_RATIO};
pub use synthetic::{generate, make_synthetic, MissingnessSpec, SyntheticData, SyntheticSpec};

use std::collections::HashSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Date,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::Categorical => "categorical",
            ColumnKind::Date => "date",
        }
    }
}

/// A named feature column.
///
/// Categorical values are stored as indices into `levels`, which is kept in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub levels: Vec<String>,
}

impl Column {
    pub fn numeric(name: impl Into<String>) -> Self {
        Column {
            name: name.into(),
            kind: ColumnKind::Numeric,
            levels: Vec::new(),
        }
    }

    pub fn date(name: impl Into<String>) -> Self {
        Column {
            name: name.into(),
            kind: ColumnKind::Date,
            levels: Vec::new(),
        }
    }

    pub fn categorical(name: impl Into<String>, levels: Vec<String>) -> Self {
        Column {
            name: name.into(),
            kind: ColumnKind::Categorical,
            levels,
        }
    }
}

/// Column-typed table with sample ids, optional binary labels and `None` for NA.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    ids: Vec<i64>,
    columns: Vec<Column>,
    values: Vec<Option<f64>>,
    labels: Option<Vec<u8>>,
}

impl Dataset {
    /// Build from row vectors, validating shape, id uniqueness, label domain and
    /// categorical codes.
    pub fn new(
        ids: Vec<i64>,
        columns: Vec<Column>,
        rows: Vec<Vec<Option<f64>>>,
        labels: Option<Vec<u8>>,
    ) -> Result<Self> {
        let n_cols = columns.len();
        if rows.len() != ids.len() {
            return Err(Error::Data(format!(
                "{} ids for {} rows",
                ids.len(),
                rows.len()
            )));
        }
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::Data(format!(
                    "row {i} has {} values, expected {n_cols}",
                    row.len()
                )));
            }
            values.extend(row);
        }
        Self::from_flat(ids, columns, values, labels)
    }

    pub(crate) fn from_flat(
        ids: Vec<i64>,
        columns: Vec<Column>,
        values: Vec<Option<f64>>,
        labels: Option<Vec<u8>>,
    ) -> Result<Self> {
        let n_rows = ids.len();
        if values.len() != n_rows * columns.len() {
            return Err(Error::Data("value matrix shape mismatch".into()));
        }
        let mut seen = HashSet::with_capacity(n_rows);
        for id in &ids {
            if !seen.insert(*id) {
                return Err(Error::Data(format!("duplicate sample id {id}")));
            }
        }
        let mut names = HashSet::with_capacity(columns.len());
        for c in &columns {
            if !names.insert(c.name.as_str()) {
                return Err(Error::Data(format!("duplicate column name `{}`", c.name)));
            }
        }
        if let Some(l) = &labels {
            if l.len() != n_rows {
                return Err(Error::Data(format!(
                    "{} labels for {n_rows} rows",
                    l.len()
                )));
            }
            if let Some(bad) = l.iter().find(|&&v| v > 1) {
                return Err(Error::Data(format!("label {bad} is not 0 or 1")));
            }
        }
        for (j, c) in columns.iter().enumerate() {
            if c.kind != ColumnKind::Categorical {
                continue;
            }
            for i in 0..n_rows {
                if let Some(v) = values[i * columns.len() + j] {
                    if v < 0.0 || v.fract() != 0.0 || v as usize >= c.levels.len() {
                        return Err(Error::Data(format!(
                            "invalid level code {v} in categorical column `{}`",
                            c.name
                        )));
                    }
                }
            }
        }
        Ok(Dataset {
            ids,
            columns,
            values,
            labels,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn ids(&self) -> &[i64] {
        &self.ids
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    /// Labels, or an error if the dataset is unlabeled.
    pub fn require_labels(&self) -> Result<&[u8]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::Data("dataset has no labels".into()))
    }

    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        self.values[row * self.columns.len() + col]
    }

    pub fn row(&self, row: usize) -> &[Option<f64>] {
        let p = self.columns.len();
        &self.values[row * p..(row + 1) * p]
    }

    pub fn column_values(&self, col: usize) -> Vec<Option<f64>> {
        (0..self.n_rows()).map(|i| self.value(i, col)).collect()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn na_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    pub fn mask(&self) -> MissingMask {
        MissingMask {
            n_rows: self.n_rows(),
            n_cols: self.n_cols(),
            bits: self.values.iter().map(|v| v.is_some() as u8).collect(),
        }
    }

    /// Rows in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let p = self.columns.len();
        let mut values = Vec::with_capacity(rows.len() * p);
        for &i in rows {
            values.extend_from_slice(self.row(i));
        }
        Dataset {
            ids: rows.iter().map(|&i| self.ids[i]).collect(),
            columns: self.columns.clone(),
            values,
            labels: self
                .labels
                .as_ref()
                .map(|l| rows.iter().map(|&i| l[i]).collect()),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Dataset {
        let mut values = Vec::with_capacity(self.n_rows() * cols.len());
        for i in 0..self.n_rows() {
            let row = self.row(i);
            values.extend(cols.iter().map(|&j| row[j]));
        }
        Dataset {
            ids: self.ids.clone(),
            columns: cols.iter().map(|&j| self.columns[j].clone()).collect(),
            values,
            labels: self.labels.clone(),
        }
    }

    pub fn select_columns_by_name<S: AsRef<str>>(&self, names: &[S]) -> Result<Dataset> {
        let idx = names
            .iter()
            .map(|n| self.column_index(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_columns(&idx))
    }

    /// Append a column; `values` must have one entry per row.
    pub fn push_column(&mut self, column: Column, values: Vec<Option<f64>>) -> Result<()> {
        if values.len() != self.n_rows() {
            return Err(Error::Data(format!(
                "column `{}` has {} values for {} rows",
                column.name,
                values.len(),
                self.n_rows()
            )));
        }
        if self.columns.iter().any(|c| c.name == column.name) {
            return Err(Error::Data(format!(
                "duplicate column name `{}`",
                column.name
            )));
        }
        let p = self.columns.len();
        let mut out = Vec::with_capacity(self.values.len() + values.len());
        for (i, v) in values.into_iter().enumerate() {
            out.extend_from_slice(&self.values[i * p..(i + 1) * p]);
            out.push(v);
        }
        self.values = out;
        self.columns.push(column);
        Ok(())
    }

    pub fn with_labels(mut self, labels: Option<Vec<u8>>) -> Result<Dataset> {
        self.labels = labels;
        Dataset::from_flat(self.ids, self.columns, self.values, self.labels)
    }

    /// Dense row-major feature matrix over all columns; errors on any NA.
    pub fn dense_rows(&self) -> Result<Vec<Vec<f64>>> {
        (0..self.n_rows())
            .map(|i| {
                self.row(i)
                    .iter()
                    .enumerate()
                    .map(|(j, v)| {
                        v.ok_or_else(|| {
                            Error::Data(format!(
                                "NA in column `{}` at row {i}; impute first",
                                self.columns[j].name
                            ))
                        })
                    })
                    .collect()
            })
            .collect()
    }

    /// Positions of positive and negative rows.
    pub fn class_indices(&self) -> Result<(Vec<usize>, Vec<usize>)> {
        let labels = self.require_labels()?;
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (i, &y) in labels.iter().enumerate() {
            if y == 1 {
                pos.push(i);
            } else {
                neg.push(i);
            }
        }
        Ok((pos, neg))
    }
}

/// 1 where a measurement exists, 0 where it is NA.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingMask {
    n_rows: usize,
    n_cols: usize,
    bits: Vec<u8>,
}

impl MissingMask {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.bits[row * self.n_cols + col]
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.bits[row * self.n_cols..(row + 1) * self.n_cols]
    }

    /// Rows as real-valued points, for clustering.
    pub fn to_points(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows)
            .map(|i| self.row(i).iter().map(|&b| b as f64).collect())
            .collect()
    }
}

//! Statistical validation: feature matrices, z-scoring, permutation tests,
//! and the Train-Synthetic-Test-Real harness.

mod permutation;
mod regression;
mod summary;
mod tstr;

pub use permutation::{
    distribution_match_report, permutation_pvalue, permutation_pvalue_exhaustive,
    PermutationFeature, PermutationReport,
};
pub use regression::{
    f1_score, logistic_binary, mean_absolute_error, ridge_regression, LogisticModel, RidgeModel,
};
pub use summary::{summary_stats, zscore_normalize, ColumnSummary, ZscoreResult};
pub use tstr::{
    tstr_evaluate, MetricKind, TargetKind, TargetOutcome, TargetSpec, TstrOptions, TstrReport,
};

use std::path::Path;

use crate::{Error, Real, Result};

/// Named-column table of per-sample features with per-cell missingness.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    columns: Vec<String>,
    ids: Option<Vec<String>>,
    rows: Vec<Vec<Option<T>>>,
}

impl<T: Real> FeatureMatrix<T> {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<Option<T>>>) -> Result<Self> {
        let m = columns.len();
        for (i, name) in columns.iter().enumerate() {
            if columns[..i].contains(name) {
                return Err(Error::invalid(format!("duplicate column name {name:?}")));
            }
        }
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::mismatch("feature rows must match the header width"));
        }
        Ok(Self {
            columns,
            ids: None,
            rows,
        })
    }

    pub fn with_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.rows.len() {
            return Err(Error::mismatch("id count must match row count"));
        }
        self.ids = Some(ids);
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<T> {
        self.rows[row][col]
    }

    pub fn row(&self, row: usize) -> &[Option<T>] {
        &self.rows[row]
    }

    /// Non-missing values of one column, in row order.
    pub fn column_values(&self, col: usize) -> Vec<T> {
        self.rows.iter().filter_map(|r| r[col]).collect()
    }

    /// Cell-wise transform of one column.
    pub(crate) fn map_column(&mut self, col: usize, f: impl Fn(T) -> T) {
        for row in self.rows.iter_mut() {
            if let Some(v) = row[col] {
                row[col] = Some(f(v));
            }
        }
    }

    pub fn same_columns(&self, other: &Self) -> bool {
        self.columns == other.columns
    }

    /// Parse from CSV: header row; a leading `id` column (case-insensitive)
    /// is treated as sample ids; empty cells are missing.
    pub fn from_csv_reader(reader: impl std::io::Read) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = csv
            .headers()
            .map_err(|e| Error::Decode(format!("feature csv: {e}")))?
            .clone();
        let mut names: Vec<String> = headers.iter().map(str::to_string).collect();
        let has_ids = names
            .first()
            .map(|n| n.eq_ignore_ascii_case("id"))
            .unwrap_or(false);
        if has_ids {
            names.remove(0);
        }
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for record in csv.records() {
            let record = record.map_err(|e| Error::Decode(format!("feature csv: {e}")))?;
            let mut cells = record.iter();
            if has_ids {
                ids.push(cells.next().unwrap_or_default().to_string());
            }
            let row = cells
                .map(|cell| {
                    if cell.is_empty() {
                        Ok(None)
                    } else {
                        cell.parse::<f64>()
                            .ok()
                            .and_then(T::from_f64)
                            .map(Some)
                            .ok_or_else(|| {
                                Error::Decode(format!("feature csv: bad value {cell:?}"))
                            })
                    }
                })
                .collect::<Result<Vec<Option<T>>>>()?;
            if row.len() != names.len() {
                return Err(Error::Decode(format!(
                    "feature csv: row has {} cells, header has {}",
                    row.len(),
                    names.len()
                )));
            }
            rows.push(row);
        }
        let fm = Self::new(names, rows)?;
        if has_ids {
            fm.with_ids(ids)
        } else {
            Ok(fm)
        }
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path.as_ref())?)
    }

    /// Serialize to CSV (empty cell = missing).
    pub fn to_csv_string(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = Vec::with_capacity(self.columns.len() + 1);
        if self.ids.is_some() {
            header.push("id".to_string());
        }
        header.extend(self.columns.iter().cloned());
        writer.write_record(&header).expect("in-memory csv write");
        for (i, row) in self.rows.iter().enumerate() {
            let mut fields = Vec::with_capacity(row.len() + 1);
            if let Some(ids) = &self.ids {
                fields.push(ids[i].clone());
            }
            for cell in row {
                fields.push(match cell {
                    Some(v) => format!("{}", v.to_f64().unwrap_or(f64::NAN)),
                    None => String::new(),
                });
            }
            writer.write_record(&fields).expect("in-memory csv write");
        }
        let bytes = writer.into_inner().expect("in-memory csv flush");
        String::from_utf8(bytes).expect("csv output is utf-8")
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_with_missing_cells() {
        let fm = FeatureMatrix::new(
            vec!["a".into(), "b".into()],
            vec![
                vec![Some(1.5), None],
                vec![None, Some(-2.25)],
                vec![Some(0.1), Some(3.0)],
            ],
        )
        .unwrap()
        .with_ids(vec!["s1".into(), "s2".into(), "s3".into()])
        .unwrap();
        let text = fm.to_csv_string();
        let back = FeatureMatrix::<f64>::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(fm, back);
    }

    #[test]
    fn csv_quotes_awkward_ids() {
        let fm = FeatureMatrix::new(vec!["x".into()], vec![vec![Some(1.0)], vec![Some(2.0)]])
            .unwrap()
            .with_ids(vec!["a,b".into(), "quo\"ted".into()])
            .unwrap();
        let text = fm.to_csv_string();
        let back = FeatureMatrix::<f64>::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(back.ids().unwrap(), ["a,b", "quo\"ted"]);
        assert_eq!(fm, back);
    }

    #[test]
    fn rejects_duplicate_columns_and_ragged_rows() {
        assert!(FeatureMatrix::<f64>::new(vec!["x".into(), "x".into()], vec![],).is_err());
        assert!(
            FeatureMatrix::<f64>::new(vec!["x".into()], vec![vec![Some(1.0), Some(2.0)]],).is_err()
        );
    }
}

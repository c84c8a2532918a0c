//! Dataset ingestion, standardisation, splitting and windowing.

mod ett;
mod norm;
pub mod synthetic;
mod ucr;
mod window;

use std::path::PathBuf;

use ndarray::Array2;
use thiserror::Error;

pub use ett::{ett_borders, load_ett_csv, parse_ett_csv, SplitMode, ETTH_BORDERS, ETTM_BORDERS};
pub use norm::{standardize, Norm, CONSTANT_STD};
pub use ucr::{load_ucr_tsv, parse_ucr, resample_linear, ClassDataset, UcrSeries};
pub use window::{
    forecast_window_count, make_forecast_windows, make_imputation_windows, mask_count,
    ucr_windows, Splits,
};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("missing header row: first line {0:?} looks like data")]
    MissingHeader(String),
    #[error("line {line}: series has {found} values, expected {expected}")]
    RaggedLength { line: usize, expected: usize, found: usize },
    #[error("line {line}: label {label:?} does not occur in the training file")]
    UnknownLabel { line: usize, label: String },
    #[error("{split} split has {len} steps, need at least {need}")]
    TooShort { split: &'static str, len: usize, need: usize },
    #[error("empty input: {0}")]
    Empty(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// A multivariate series with chronological split points.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainDataset {
    pub name: String,
    /// `T × C`, time along rows.
    pub values: Array2<f64>,
    pub timestamps: Option<Vec<String>>,
    /// Training rows are `0..train_end`, validation `train_end..val_end`,
    /// test `val_end..T`.
    pub train_end: usize,
    pub val_end: usize,
    /// Statistics applied by [`standardize`], if any.
    pub norm: Option<Norm>,
    pub split_mode: SplitMode,
}

impl DomainDataset {
    /// Chronological 70/10/20 split.
    pub fn from_values(name: impl Into<String>, values: Array2<f64>) -> Result<Self, DataError> {
        let t = values.nrows();
        if t == 0 || values.ncols() == 0 {
            return Err(DataError::Empty("dataset has no rows or no channels".into()));
        }
        let train_end = (t as f64 * 0.7).floor() as usize;
        let val_end = train_end + (t as f64 * 0.1).floor() as usize;
        Self::with_splits(name, values, train_end, val_end)
    }

    pub fn with_splits(
        name: impl Into<String>,
        values: Array2<f64>,
        train_end: usize,
        val_end: usize,
    ) -> Result<Self, DataError> {
        if !(train_end > 0 && train_end <= val_end && val_end <= values.nrows()) {
            return Err(DataError::Precondition(format!(
                "invalid split points {train_end}, {val_end} for {} rows",
                values.nrows()
            )));
        }
        Ok(DomainDataset {
            name: name.into(),
            values,
            timestamps: None,
            train_end,
            val_end,
            norm: None,
            split_mode: SplitMode::Strict,
        })
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn channels(&self) -> usize {
        self.values.ncols()
    }

    /// Row ranges of the three splits for windows with lookback `l`. In
    /// [`SplitMode::LookbackOverlap`] validation and test reach `l` rows back
    /// so their inputs may come from the preceding split.
    pub fn split_ranges(&self, l: usize) -> [(&'static str, std::ops::Range<usize>); 3] {
        let context = match self.split_mode {
            SplitMode::Strict => 0,
            SplitMode::LookbackOverlap => l,
        };
        let v0 = self.train_end.saturating_sub(context);
        let t0 = self.val_end.saturating_sub(context);
        [
            ("train", 0..self.train_end),
            ("val", v0..self.val_end),
            ("test", t0..self.values.nrows()),
        ]
    }
}

/// What a window is asked to produce.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Forecast(Vec<f64>),
    /// `mask[i]` is true where the input was hidden; `original` is the
    /// unmasked window.
    Impute { mask: Vec<bool>, original: Vec<f64> },
    Class(usize),
}

/// One univariate training example.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub input: Vec<f64>,
    pub target: Target,
    pub domain: String,
    pub channel: usize,
}

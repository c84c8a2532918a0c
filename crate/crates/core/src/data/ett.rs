use std::path::Path;

use ndarray::Array2;

use super::{DataError, DomainDataset};

/// Split points for the hourly ETT files (12/4/4 months of 24 rows a day).
pub const ETTH_BORDERS: [usize; 3] = [8640, 11520, 14400];
/// Split points for the 15-minute ETT files.
pub const ETTM_BORDERS: [usize; 3] = [34560, 46080, 57600];

/// How validation and test windows treat the split boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitMode {
    /// Windows lie entirely inside their split.
    #[default]
    Strict,
    /// Validation and test inputs may reach `l` steps into the preceding split
    /// (targets never do). This reproduces the published ETT window counts.
    LookbackOverlap,
}

/// Fixed `(train_end, val_end, test_end)` for files whose row count matches a
/// known ETT dataset.
pub fn ett_borders(rows: usize) -> Option<[usize; 3]> {
    match rows {
        17420 => Some(ETTH_BORDERS),
        69680 => Some(ETTM_BORDERS),
        _ => None,
    }
}

pub(crate) fn detect_delimiter(line: &str) -> u8 {
    if line.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

/// Parses an ETT-style CSV: a header row, a date column, then numeric columns.
pub fn parse_ett_csv(name: &str, text: &str) -> Result<DomainDataset, DataError> {
    let first = text.lines().next().ok_or_else(|| DataError::Empty(format!("{name} is empty")))?;
    let delim = detect_delimiter(first);
    let header: Vec<&str> = first.split(delim as char).collect();
    if header.len() < 2 {
        return Err(DataError::Parse {
            line: 1,
            column: 1,
            message: "need a date column and at least one value column".into(),
        });
    }
    if header[1..].iter().all(|h| h.trim().parse::<f64>().is_ok()) {
        return Err(DataError::MissingHeader(first.to_string()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delim)
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let cols = header.len() - 1;
    let mut flat = Vec::new();
    let mut stamps = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| DataError::Parse { line, column: 0, message: e.to_string() })?;
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if rec.len() != header.len() {
            return Err(DataError::Parse {
                line,
                column: rec.len().min(header.len()) + 1,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        stamps.push(rec[0].to_string());
        for c in 1..rec.len() {
            let cell = rec[c].trim();
            let v: f64 = cell.parse().map_err(|_| DataError::Parse {
                line,
                column: c + 1,
                message: format!("non-numeric value {cell:?} in column {:?}", header[c].trim()),
            })?;
            flat.push(v);
        }
    }
    let rows = stamps.len();
    if rows == 0 {
        return Err(DataError::Empty(format!("{name} has a header but no rows")));
    }
    let values = Array2::from_shape_vec((rows, cols), flat).expect("rows × cols values");
    let mut ds = match ett_borders(rows) {
        Some([train, val, test]) => {
            let values = values.slice(ndarray::s![..test, ..]).to_owned();
            stamps.truncate(test);
            DomainDataset::with_splits(name, values, train, val)?
        }
        None => DomainDataset::from_values(name, values)?,
    };
    ds.timestamps = Some(stamps);
    Ok(ds)
}

pub fn load_ett_csv(path: impl AsRef<Path>) -> Result<DomainDataset, DataError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
    parse_ett_csv(name, &text)
}

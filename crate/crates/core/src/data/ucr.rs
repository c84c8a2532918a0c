use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::DataError;

/// Fraction of each training class held out for validation.
pub const VALIDATION_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct UcrSeries {
    pub values: Vec<f64>,
    /// Index into [`ClassDataset::labels`].
    pub label: usize,
}

/// A labelled univariate classification dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDataset {
    pub name: String,
    /// Original label strings in sorted order; position = class index.
    pub labels: Vec<String>,
    /// Length of the series in the files.
    pub series_len: usize,
    pub train: Vec<UcrSeries>,
    pub val: Vec<UcrSeries>,
    pub test: Vec<UcrSeries>,
    /// Global `(mean, std)` of the training values once standardized.
    pub norm: Option<(f64, f64)>,
}

impl ClassDataset {
    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }

    /// Z-scores every value with the mean and standard deviation of the
    /// training split.
    pub fn standardize(&mut self) {
        let all: Vec<f64> = self.train.iter().flat_map(|s| s.values.iter().copied()).collect();
        let n = all.len().max(1) as f64;
        let mean = all.iter().sum::<f64>() / n;
        let var = all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let std = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
        for s in self.train.iter_mut().chain(self.val.iter_mut()).chain(self.test.iter_mut()) {
            s.values.iter_mut().for_each(|v| *v = (*v - mean) / std);
        }
        self.norm = Some((mean, std));
    }

    /// Majority-class share of the test split.
    pub fn majority_test_rate(&self) -> f64 {
        let mut counts = vec![0usize; self.labels.len()];
        for s in &self.test {
            counts[s.label] += 1;
        }
        *counts.iter().max().unwrap_or(&0) as f64 / self.test.len().max(1) as f64
    }
}

/// Parses one UCR file: each non-empty line is a label followed by the
/// series, separated by tabs, commas or spaces.
pub fn parse_ucr(text: &str) -> Result<Vec<(usize, String, Vec<f64>)>, DataError> {
    let mut out = Vec::new();
    let mut expected = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = if trimmed.contains('\t') {
            trimmed.split('\t').collect()
        } else if trimmed.contains(',') {
            trimmed.split(',').collect()
        } else {
            trimmed.split_whitespace().collect()
        };
        let label = normalize_label(fields[0].trim());
        let values = fields[1..]
            .iter()
            .enumerate()
            .map(|(c, f)| {
                f.trim().parse::<f64>().map_err(|_| DataError::Parse {
                    line,
                    column: c + 2,
                    message: format!("non-numeric value {:?}", f.trim()),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if values.is_empty() {
            return Err(DataError::Parse { line, column: 2, message: "no series values".into() });
        }
        match expected {
            None => expected = Some(values.len()),
            Some(e) if e != values.len() => {
                return Err(DataError::RaggedLength { line, expected: e, found: values.len() })
            }
            _ => {}
        }
        out.push((line, label, values));
    }
    Ok(out)
}

/// `"1.0000000e+00"` and `"1"` name the same class.
fn normalize_label(s: &str) -> String {
    match s.parse::<f64>() {
        Ok(v) if v.fract() == 0.0 && v.abs() < 1e15 => format!("{}", v as i64),
        _ => s.to_string(),
    }
}

fn sort_labels(labels: &mut [String]) {
    let numeric: Option<Vec<f64>> = labels.iter().map(|l| l.parse::<f64>().ok()).collect();
    if numeric.is_some() {
        labels.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
    } else {
        labels.sort();
    }
}

fn read(path: &Path) -> Result<String, DataError> {
    std::fs::read_to_string(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })
}

/// Builds a dataset from train and test file contents.
pub fn build_class_dataset(
    name: &str,
    train_text: &str,
    test_text: &str,
    seed: u64,
) -> Result<ClassDataset, DataError> {
    let train_rows = parse_ucr(train_text)?;
    let test_rows = parse_ucr(test_text)?;
    if train_rows.is_empty() {
        return Err(DataError::Empty(format!("{name}: training file has no series")));
    }
    let series_len = train_rows[0].2.len();
    if let Some((line, _, v)) = test_rows.iter().find(|r| r.2.len() != series_len) {
        return Err(DataError::RaggedLength { line: *line, expected: series_len, found: v.len() });
    }
    let mut labels: Vec<String> = train_rows.iter().map(|r| r.1.clone()).collect();
    sort_labels(&mut labels);
    labels.dedup();
    if labels.len() == 1 {
        log::warn!("{name}: training file contains a single class");
    }
    let index = |s: &str| labels.iter().position(|l| l == s);
    let train_all: Vec<UcrSeries> = train_rows
        .into_iter()
        .map(|(_, l, values)| UcrSeries { label: index(&l).expect("train label"), values })
        .collect();
    let test = test_rows
        .into_iter()
        .map(|(line, l, values)| match index(&l) {
            Some(label) => Ok(UcrSeries { label, values }),
            None => Err(DataError::UnknownLabel { line, label: l }),
        })
        .collect::<Result<Vec<_>, _>>()?;

    // stratified validation split
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut held = vec![false; train_all.len()];
    for k in 0..labels.len() {
        let mut members: Vec<usize> =
            (0..train_all.len()).filter(|&i| train_all[i].label == k).collect();
        members.shuffle(&mut rng);
        let take = (members.len() as f64 * VALIDATION_FRACTION).round() as usize;
        for &i in &members[..take] {
            held[i] = true;
        }
    }
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (s, h) in train_all.into_iter().zip(held) {
        if h {
            val.push(s)
        } else {
            train.push(s)
        }
    }
    Ok(ClassDataset { name: name.to_string(), labels, series_len, train, val, test, norm: None })
}

pub fn load_ucr_tsv(
    train_path: impl AsRef<Path>,
    test_path: impl AsRef<Path>,
    seed: u64,
) -> Result<ClassDataset, DataError> {
    let tp = train_path.as_ref();
    let name = tp
        .file_stem()
        .and_then(|s| s.to_str())
        .map(|s| s.trim_end_matches("_TRAIN").to_string())
        .unwrap_or_else(|| "ucr".into());
    build_class_dataset(&name, &read(tp)?, &read(test_path.as_ref())?, seed)
}

/// Linear interpolation onto `l` evenly spaced points with matching endpoints.
pub fn resample_linear(x: &[f64], l: usize) -> Vec<f64> {
    let n = x.len();
    if n == l || n == 0 {
        return x.to_vec();
    }
    if l == 1 {
        return vec![x[0]];
    }
    if n == 1 {
        return vec![x[0]; l];
    }
    (0..l)
        .map(|t| {
            let pos = t as f64 * (n - 1) as f64 / (l - 1) as f64;
            let lo = (pos.floor() as usize).min(n - 2);
            let f = pos - lo as f64;
            x[lo] + f * (x[lo + 1] - x[lo])
        })
        .collect()
}

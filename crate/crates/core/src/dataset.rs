//! Prospect feature schema, CSV I/O, standardization, stratified splitting
//! and class-conditional feature statistics.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::numfmt::format_sig;
use crate::rng::Rng;

pub const NUM_FEATURES: usize = 6;

/// Canonical feature order. `data_quality_1` stands in for seismic data
/// quality; the other two quality columns are generic placeholders.
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "initial_pg",
    "dhi_index",
    "final_pg",
    "data_quality_1",
    "data_quality_2",
    "data_quality_3",
];

pub const CSV_HEADER: &str =
    "id,initial_pg,dhi_index,final_pg,data_quality_1,data_quality_2,data_quality_3,outcome";

pub const HISTOGRAM_BINS: usize = 10;

pub type Features = [f64; NUM_FEATURES];

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("empty file: expected header `{CSV_HEADER}`")]
    EmptyFile,
    #[error("malformed header `{found}`: expected `{CSV_HEADER}`")]
    Header { found: String },
    #[error("row {row}: expected 8 columns, found {found}")]
    ColumnCount { row: usize, found: usize },
    #[error("row {row}: column `{column}` value `{value}` is not a number")]
    NotNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: {feature}={value} outside [0,1]")]
    OutOfRange {
        row: usize,
        feature: String,
        value: f64,
    },
    #[error("row {row}: outcome `{value}` not in {{0,1}}")]
    Outcome { row: usize, value: String },
    #[error("row {row}: duplicate id {id}")]
    DuplicateId { row: usize, id: u64 },
    #[error("record {id}: {feature}={value} outside [0,1]")]
    InvalidRecord {
        id: u64,
        feature: String,
        value: f64,
    },
    #[error("duplicate id {0}")]
    DuplicateRecordId(u64),
    #[error("class {class} has {count} records; at least 2 required")]
    ClassTooSmall { class: u8, count: usize },
    #[error("test fraction {0} must lie strictly between 0 and 1")]
    TestFraction(f64),
    #[error("scaler needs at least 2 records, got {0}")]
    TooFewRecords(usize),
    #[error("feature `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("expected {NUM_FEATURES} features, got {0}")]
    Length(usize),
    #[error("feature `{0}` is not finite")]
    NonFinite(String),
}

/// Binary prospect outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Failure,
    Success,
}

impl Outcome {
    pub fn from_label(label: u8) -> Option<Self> {
        match label {
            0 => Some(Outcome::Failure),
            1 => Some(Outcome::Success),
            _ => None,
        }
    }

    pub fn label(self) -> u8 {
        match self {
            Outcome::Failure => 0,
            Outcome::Success => 1,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.label() as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProspectRecord {
    pub id: u64,
    pub features: Features,
    pub outcome: Outcome,
}

/// Ordered, validated collection of prospects.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Dataset {
    records: Vec<ProspectRecord>,
}

fn check_unit_range(f: &Features) -> Result<(), (usize, f64)> {
    for (j, &v) in f.iter().enumerate() {
        if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
            return Err((j, v));
        }
    }
    Ok(())
}

impl Dataset {
    pub fn new(records: Vec<ProspectRecord>) -> Result<Self, DatasetError> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if let Err((j, value)) = check_unit_range(&r.features) {
                return Err(DatasetError::InvalidRecord {
                    id: r.id,
                    feature: FEATURE_NAMES[j].to_string(),
                    value,
                });
            }
            if !seen.insert(r.id) {
                return Err(DatasetError::DuplicateRecordId(r.id));
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[ProspectRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&ProspectRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn class_count(&self, outcome: Outcome) -> usize {
        self.records.iter().filter(|r| r.outcome == outcome).count()
    }

    pub fn ids(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.id).collect()
    }

    /// Records whose id is in `ids`, in this dataset's order.
    pub fn subset(&self, ids: &HashSet<u64>) -> Dataset {
        Dataset {
            records: self
                .records
                .iter()
                .filter(|r| ids.contains(&r.id))
                .cloned()
                .collect(),
        }
    }

    /// CSV text with the canonical header, LF endings and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            write!(out, "{}", r.id).unwrap();
            for v in &r.features {
                write!(out, ",{}", format_sig(*v, 17)).unwrap();
            }
            writeln!(out, ",{}", r.outcome.label()).unwrap();
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self, DatasetError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(DatasetError::EmptyFile)?;
        let header = header.trim_end_matches('\r');
        if header != CSV_HEADER {
            return Err(DatasetError::Header {
                found: header.to_string(),
            });
        }

        let mut records = Vec::new();
        let mut seen = HashSet::new();
        // row numbers count data rows from 1
        for (i, line) in lines.enumerate() {
            let row = i + 1;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != NUM_FEATURES + 2 {
                return Err(DatasetError::ColumnCount {
                    row,
                    found: cells.len(),
                });
            }
            let id: u64 = cells[0]
                .trim()
                .parse()
                .map_err(|_| DatasetError::NotNumeric {
                    row,
                    column: "id".into(),
                    value: cells[0].into(),
                })?;
            let mut features = [0.0; NUM_FEATURES];
            for (j, slot) in features.iter_mut().enumerate() {
                let cell = cells[j + 1].trim();
                let v: f64 = cell.parse().map_err(|_| DatasetError::NotNumeric {
                    row,
                    column: FEATURE_NAMES[j].into(),
                    value: cell.into(),
                })?;
                if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                    return Err(DatasetError::OutOfRange {
                        row,
                        feature: FEATURE_NAMES[j].into(),
                        value: v,
                    });
                }
                *slot = v;
            }
            let label = cells[NUM_FEATURES + 1].trim();
            let outcome = label
                .parse::<u8>()
                .ok()
                .and_then(Outcome::from_label)
                .ok_or_else(|| DatasetError::Outcome {
                    row,
                    value: label.into(),
                })?;
            if !seen.insert(id) {
                return Err(DatasetError::DuplicateId { row, id });
            }
            records.push(ProspectRecord {
                id,
                features,
                outcome,
            });
        }
        Ok(Self { records })
    }

    pub fn write(&self, path: &Path) -> Result<(), DatasetError> {
        fs::write(path, self.to_csv()).map_err(|e| DatasetError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }
}

pub fn load_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let text = fs::read_to_string(path).map_err(|e| DatasetError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    Dataset::parse_csv(&text)
}

/// Stratified split. Within each class the records are shuffled with a
/// PRNG seeded by `seed` and the leading members go to the test side.
///
/// The total test size targets `⌈test_fraction · n⌉`, distributed over the
/// two classes by largest remainder of `test_fraction · class_count` (ties
/// to class 0). Each class is within one record of exact stratification and
/// keeps at least one record on each side. Both outputs keep the input order.
pub fn split_train_test(
    ds: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DatasetError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DatasetError::TestFraction(test_fraction));
    }
    let classes = [Outcome::Failure, Outcome::Success];
    let mut members: [Vec<u64>; 2] = [Vec::new(), Vec::new()];
    for r in ds.records() {
        members[r.outcome.label() as usize].push(r.id);
    }
    for (c, m) in classes.iter().zip(&members) {
        if m.len() < 2 {
            return Err(DatasetError::ClassTooSmall {
                class: c.label(),
                count: m.len(),
            });
        }
    }

    let total_test = ((test_fraction * ds.len() as f64) - 1e-9).ceil() as usize;
    let exact: Vec<f64> = members
        .iter()
        .map(|m| test_fraction * m.len() as f64)
        .collect();
    // every class keeps at least one record on each side
    let mut alloc: Vec<usize> = exact
        .iter()
        .zip(&members)
        .map(|(e, m)| ((e + 1e-9).floor() as usize).clamp(1, m.len() - 1))
        .collect();
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let ra = exact[a] - alloc[a] as f64;
        let rb = exact[b] - alloc[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &c in &order {
        if alloc.iter().sum::<usize>() < total_test && alloc[c] + 1 < members[c].len() {
            alloc[c] += 1;
        }
    }

    let mut rng = Rng::seed_from_u64(seed);
    let mut test_ids = HashSet::new();
    for (m, &a) in members.iter_mut().zip(&alloc) {
        rng.shuffle(m);
        test_ids.extend(m.iter().take(a).copied());
    }
    let (test, train): (Vec<_>, Vec<_>) = ds
        .records()
        .iter()
        .cloned()
        .partition(|r| test_ids.contains(&r.id));
    Ok((Dataset { records: train }, Dataset { records: test }))
}

/// Per-feature mean and sample standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaler {
    pub means: Features,
    pub stds: Features,
}

pub fn fit_scaler(ds: &Dataset) -> Result<Scaler, DatasetError> {
    let n = ds.len();
    if n < 2 {
        return Err(DatasetError::TooFewRecords(n));
    }
    let mut means = [0.0; NUM_FEATURES];
    let mut stds = [0.0; NUM_FEATURES];
    for j in 0..NUM_FEATURES {
        let (mean, var) = mean_var(ds.records().iter().map(|r| r.features[j]));
        if !(var > 0.0) {
            return Err(DatasetError::ZeroVariance(FEATURE_NAMES[j].into()));
        }
        means[j] = mean;
        stds[j] = var.sqrt();
    }
    Scaler::new(means, stds)
}

/// Welford mean and sample variance (n−1); variance is NaN for fewer than 2 values.
fn mean_var(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
    for v in values {
        n += 1;
        let delta = v - mean;
        mean += delta / n as f64;
        m2 += delta * (v - mean);
    }
    let var = if n > 1 { m2 / (n - 1) as f64 } else { f64::NAN };
    (mean, var)
}

impl Scaler {
    pub fn new(means: Features, stds: Features) -> Result<Self, DatasetError> {
        for j in 0..NUM_FEATURES {
            if !means[j].is_finite() {
                return Err(DatasetError::NonFinite(FEATURE_NAMES[j].into()));
            }
            if !(stds[j].is_finite() && stds[j] > 0.0) {
                return Err(DatasetError::ZeroVariance(FEATURE_NAMES[j].into()));
            }
        }
        Ok(Self { means, stds })
    }

    /// Checked standardization of an arbitrary-length slice.
    pub fn apply_checked(&self, x: &[f64]) -> Result<Features, DatasetError> {
        let x: &Features = x.try_into().map_err(|_| DatasetError::Length(x.len()))?;
        if let Some(j) = x.iter().position(|v| !v.is_finite()) {
            return Err(DatasetError::NonFinite(FEATURE_NAMES[j].into()));
        }
        Ok(self.apply(x))
    }

    pub fn apply(&self, x: &Features) -> Features {
        std::array::from_fn(|j| (x[j] - self.means[j]) / self.stds[j])
    }

    pub fn invert(&self, z: &Features) -> Features {
        std::array::from_fn(|j| z[j] * self.stds[j] + self.means[j])
    }

    pub fn transform(&self, ds: &Dataset) -> Standardized {
        let mut out = Standardized::default();
        for r in ds.records() {
            out.ids.push(r.id);
            out.x.push(self.apply(&r.features));
            out.y.push(r.outcome);
        }
        out
    }
}

/// Standardized design matrix with labels; what the trainers consume.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Standardized {
    pub ids: Vec<u64>,
    pub x: Vec<Features>,
    pub y: Vec<Outcome>,
}

impl Standardized {
    pub fn from_rows(x: Vec<Features>, y: Vec<Outcome>) -> Self {
        assert_eq!(x.len(), y.len());
        Self {
            ids: (0..x.len() as u64).collect(),
            x,
            y,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn has_both_classes(&self) -> bool {
        self.y.contains(&Outcome::Success) && self.y.contains(&Outcome::Failure)
    }
}

/// Moments and histogram of one feature within one class.
/// Moments are `None` where undefined (mean of no values, std of fewer than two).
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureStats {
    pub count: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub histogram: [usize; HISTOGRAM_BINS],
}

/// `by_class[outcome label][feature index]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassStats {
    pub by_class: [[FeatureStats; NUM_FEATURES]; 2],
}

impl ClassStats {
    pub fn get(&self, outcome: Outcome, feature: usize) -> &FeatureStats {
        &self.by_class[outcome.label() as usize][feature]
    }
}

/// Bin of `v` among 10 equal bins on [0,1]; only the last bin is right-closed.
pub fn histogram_bin(v: f64) -> usize {
    ((v * HISTOGRAM_BINS as f64).floor() as usize).min(HISTOGRAM_BINS - 1)
}

pub fn class_feature_stats(ds: &Dataset) -> ClassStats {
    let one = |outcome: Outcome, j: usize| {
        let values: Vec<f64> = ds
            .records()
            .iter()
            .filter(|r| r.outcome == outcome)
            .map(|r| r.features[j])
            .collect();
        let mut histogram = [0; HISTOGRAM_BINS];
        for &v in &values {
            histogram[histogram_bin(v)] += 1;
        }
        let (mean, var) = mean_var(values.iter().copied());
        FeatureStats {
            count: values.len(),
            mean: (!values.is_empty()).then_some(mean),
            std: (values.len() > 1).then(|| var.sqrt()),
            histogram,
        }
    };
    ClassStats {
        by_class: [
            std::array::from_fn(|j| one(Outcome::Failure, j)),
            std::array::from_fn(|j| one(Outcome::Success, j)),
        ],
    }
}

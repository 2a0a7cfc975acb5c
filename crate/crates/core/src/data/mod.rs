//! Datasets and trace serialization.

mod libsvm;
mod synth;
mod trace_csv;

pub use libsvm::{parse_libsvm, parse_libsvm_with_dim, read_libsvm_file, write_libsvm};
pub use synth::{synth_binary, SynthOptions};
pub use trace_csv::{read_trace_csv, write_trace_csv, TRACE_HEADER};

use crate::error::{Error, Result};

/// Binary label in `{+1, -1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    /// Positive values map to `+1`, everything else (including 0) to `-1`.
    pub fn from_value(v: f64) -> Self {
        if v > 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetMeta {
    pub source: Option<String>,
    /// Original index of each current feature column.
    pub column_map: Vec<usize>,
    /// Original indices of columns removed so far (e.g. the protected one).
    pub removed_columns: Vec<usize>,
}

/// Dense `m x d` feature matrix with `{+1, -1}` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    m: usize,
    d: usize,
    features: Vec<f64>,
    labels: Vec<Label>,
    protected: Option<Vec<Label>>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(
        d: usize,
        features: Vec<f64>,
        labels: Vec<Label>,
        protected: Option<Vec<Label>>,
    ) -> Result<Self> {
        let m = labels.len();
        if features.len() != m * d {
            return Err(Error::DimensionMismatch {
                expected: m * d,
                got: features.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset feature"));
        }
        if let Some(p) = &protected {
            if p.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: p.len(),
                });
            }
        }
        let meta = DatasetMeta {
            source: None,
            column_map: (0..d).collect(),
            removed_columns: Vec::new(),
        };
        Ok(Self {
            m,
            d,
            features,
            labels,
            protected,
            meta,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.m
    }

    pub fn n_features(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn protected(&self) -> Option<&[Label]> {
        self.protected.as_deref()
    }

    pub fn positive_fraction(&self) -> f64 {
        self.labels.iter().filter(|l| l.is_positive()).count() as f64 / self.m as f64
    }

    /// Moves feature `column` into the protected attribute, thresholded at 0.
    pub fn extract_protected(&self, column: usize) -> Result<Dataset> {
        if column >= self.d {
            return Err(Error::ColumnOutOfRange {
                column,
                dim: self.d,
            });
        }
        let nd = self.d - 1;
        let mut features = Vec::with_capacity(self.m * nd);
        let mut protected = Vec::with_capacity(self.m);
        for i in 0..self.m {
            let row = self.row(i);
            protected.push(Label::from_value(row[column]));
            features.extend(
                row.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != column)
                    .map(|(_, v)| *v),
            );
        }
        let mut meta = self.meta.clone();
        let original = meta.column_map.remove(column);
        meta.removed_columns.push(original);
        Ok(Dataset {
            m: self.m,
            d: nd,
            features,
            labels: self.labels.clone(),
            protected: Some(protected),
            meta,
        })
    }

    /// Per-feature min-max scaling to `[0, 1]`; constant columns become 0.
    pub fn min_max_scale(&mut self) {
        for j in 0..self.d {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for i in 0..self.m {
                let v = self.features[i * self.d + j];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let span = hi - lo;
            for i in 0..self.m {
                let v = &mut self.features[i * self.d + j];
                *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
            }
        }
    }
}

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Dataset, Label};
use crate::error::{Error, Result};

/// Parameters for [`SynthOptions::generate`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub seed: u64,
    pub m: usize,
    pub d: usize,
    pub positive_fraction: f64,
    /// Distance between the two class means, measured along `(1,...,1)/sqrt(d)`.
    pub separation: f64,
    /// Feature whose sign (plus noise) becomes the protected attribute.
    pub protected_feature: Option<usize>,
    /// Standard deviation of the noise added before thresholding the protected feature.
    pub protected_noise: f64,
}

impl SynthOptions {
    pub fn new(seed: u64, m: usize, d: usize, positive_fraction: f64, separation: f64) -> Self {
        Self {
            seed,
            m,
            d,
            positive_fraction,
            separation,
            protected_feature: None,
            protected_noise: 0.5,
        }
    }

    pub fn with_protected(mut self, feature: usize, noise: f64) -> Self {
        self.protected_feature = Some(feature);
        self.protected_noise = noise;
        self
    }

    pub fn positive_count(&self) -> usize {
        (self.positive_fraction * self.m as f64).round() as usize
    }

    pub fn generate(&self) -> Result<Dataset> {
        let &Self {
            seed,
            m,
            d,
            positive_fraction,
            separation,
            protected_feature,
            protected_noise,
        } = self;
        if m < 2 || d == 0 {
            return Err(Error::InvalidRange(format!(
                "need m >= 2 and d >= 1, got m={m}, d={d}"
            )));
        }
        if !(positive_fraction > 0.0 && positive_fraction < 1.0) {
            return Err(Error::InvalidRange(format!(
                "positive fraction {positive_fraction} not in (0, 1)"
            )));
        }
        let n_pos = self.positive_count();
        if n_pos == 0 || n_pos == m {
            return Err(Error::InvalidRange(format!(
                "{n_pos} positives out of {m} leaves a class empty"
            )));
        }
        if !separation.is_finite() || !(protected_noise >= 0.0 && protected_noise.is_finite()) {
            return Err(Error::InvalidRange(
                "separation and noise must be finite, noise >= 0".into(),
            ));
        }
        if let Some(j) = protected_feature {
            if j >= d {
                return Err(Error::ColumnOutOfRange { column: j, dim: d });
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut labels: Vec<Label> = (0..m)
            .map(|i| {
                if i < n_pos {
                    Label::Positive
                } else {
                    Label::Negative
                }
            })
            .collect();
        labels.shuffle(&mut rng);

        let shift = 0.5 * separation / (d as f64).sqrt();
        let mut features = Vec::with_capacity(m * d);
        for label in &labels {
            let offset = label.sign() * shift;
            features.extend((0..d).map(|_| offset + rng.sample::<f64, _>(StandardNormal)));
        }

        let protected = protected_feature.map(|j| {
            (0..m)
                .map(|i| {
                    let noise: f64 = rng.sample(StandardNormal);
                    Label::from_value(features[i * d + j] + protected_noise * noise)
                })
                .collect()
        });
        let mut ds = Dataset::new(d, features, labels, protected)?;
        ds.meta.source = Some(format!("synthetic(seed={seed}, m={m}, d={d})"));
        Ok(ds)
    }
}

/// Gaussian two-class data with exactly `round(positive_fraction * m)` positives.
pub fn synth_binary(
    seed: u64,
    m: usize,
    d: usize,
    positive_fraction: f64,
    separation: f64,
) -> Result<Dataset> {
    SynthOptions::new(seed, m, d, positive_fraction, separation).generate()
}

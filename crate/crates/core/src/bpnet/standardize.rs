use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-feature affine scaling `x ↦ (x − mean) / std`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Standardizer {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl Standardizer {
    pub fn identity() -> Self {
        Self {
            mean: [0.0; 3],
            std: [1.0; 3],
        }
    }

    /// Zero mean, unit (population) standard deviation per feature.
    pub fn fit(rows: &[[f64; 3]]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InsufficientData { got: 0, need: 1 });
        }
        let n = rows.len() as f64;
        let mut mean = [0.0; 3];
        for row in rows {
            for f in 0..3 {
                mean[f] += row[f];
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut std = [0.0; 3];
        for row in rows {
            for f in 0..3 {
                std[f] += (row[f] - mean[f]).powi(2);
            }
        }
        for (f, s) in std.iter_mut().enumerate() {
            *s = (*s / n).sqrt();
            if !(*s > 1e-12 * mean[f].abs().max(1.0)) {
                return Err(Error::DegenerateFeature { feature: f });
            }
        }
        Ok(Self { mean, std })
    }

    /// Maps each feature's observed `[min, max]` onto `[0.1, 0.9]`, for
    /// targets of a logistic output layer.
    pub fn fit_unit_interval(rows: &[[f64; 3]]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InsufficientData { got: 0, need: 1 });
        }
        let mut mean = [0.0; 3];
        let mut std = [0.0; 3];
        for f in 0..3 {
            let lo = rows.iter().map(|r| r[f]).fold(f64::INFINITY, f64::min);
            let hi = rows.iter().map(|r| r[f]).fold(f64::NEG_INFINITY, f64::max);
            if !(hi > lo) {
                return Err(Error::DegenerateFeature { feature: f });
            }
            std[f] = (hi - lo) / 0.8;
            mean[f] = lo - 0.1 * std[f];
        }
        Ok(Self { mean, std })
    }

    pub fn standardize(&self, x: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|f| (x[f] - self.mean[f]) / self.std[f])
    }

    pub fn destandardize(&self, z: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|f| z[f] * self.std[f] + self.mean[f])
    }

    pub fn validate(&self) -> Result<()> {
        for f in 0..3 {
            if !self.mean[f].is_finite() || !(self.std[f].is_finite() && self.std[f] > 0.0) {
                return Err(Error::invalid(
                    format!("standardizer[{f}]"),
                    "mean must be finite and std > 0",
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn standardized_features_have_zero_mean_unit_std() {
        let rows: Vec<[f64; 3]> = (0..50)
            .map(|i| {
                let t = i as f64;
                [t * 0.7 - 3.0, (t * 0.31).sin() * 20.0, 100.0 + t * t * 0.01]
            })
            .collect();
        let s = Standardizer::fit(&rows).unwrap();
        let z: Vec<[f64; 3]> = rows.iter().map(|r| s.standardize(*r)).collect();
        for f in 0..3 {
            let mean = z.iter().map(|r| r[f]).sum::<f64>() / z.len() as f64;
            let var = z.iter().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / z.len() as f64;
            assert!(mean.abs() <= 1e-10);
            assert!((var.sqrt() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn constant_feature_is_rejected() {
        let rows = [[1.0, 2.0, 5.0], [2.0, 3.0, 5.0], [3.0, 1.0, 5.0]];
        assert!(matches!(
            Standardizer::fit(&rows),
            Err(Error::DegenerateFeature { feature: 2 })
        ));
        assert!(Standardizer::fit_unit_interval(&rows).is_err());
    }

    #[test]
    fn unit_interval_fit_hits_bounds() {
        let rows = [[0.0, -5.0, 10.0], [200.0, 5.0, 30.0]];
        let s = Standardizer::fit_unit_interval(&rows).unwrap();
        let lo = s.standardize(rows[0]);
        let hi = s.standardize(rows[1]);
        for f in 0..3 {
            assert!((lo[f] - 0.1).abs() < 1e-12);
            assert!((hi[f] - 0.9).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn round_trip(
            rows in prop::collection::vec(prop::array::uniform3(-500.0f64..500.0), 3..40),
            probe in prop::array::uniform3(-1000.0f64..1000.0),
        ) {
            if let Ok(s) = Standardizer::fit(&rows) {
                let back = s.destandardize(s.standardize(probe));
                for f in 0..3 {
                    prop_assert!((back[f] - probe[f]).abs() <= 1e-12 * probe[f].abs().max(1.0));
                }
            }
        }
    }
}

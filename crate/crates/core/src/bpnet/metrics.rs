use crate::error::{Error, Result};

use super::NetworkConfig;

/// Targets with magnitude below this (kPa) are left out of the MAPE.
pub const MAPE_MIN_TARGET_KPA: f64 = 1.0;

/// Hidden-layer sizes suggested by `N_hid = √(N_in + N_out) + α`,
/// `α ∈ [1, 10]`: every integer from `⌊√s + 1⌋` to `⌈√s + 10⌉`.
pub fn candidate_hidden_sizes(n_in: usize, n_out: usize) -> Result<Vec<usize>> {
    if n_in == 0 {
        return Err(Error::invalid("n_in", "must be >= 1"));
    }
    if n_out == 0 {
        return Err(Error::invalid("n_out", "must be >= 1"));
    }
    let root = ((n_in + n_out) as f64).sqrt();
    let lo = (root + 1.0).floor() as usize;
    let hi = (root + 10.0).ceil() as usize;
    Ok((lo..=hi).collect())
}

/// Multiply-accumulate count of a training run: `b · n_t · (n·m + m·k)`.
pub fn mac_count(config: &NetworkConfig, samples: u64) -> u64 {
    let per_sample = (config.n_in * config.hidden + config.hidden * config.n_out) as u64;
    samples * config.max_epochs as u64 * per_sample
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mape {
    pub percent: f64,
    /// Number of components that entered the mean.
    pub eligible: usize,
}

/// Mean absolute percentage error over every component with
/// `|target| ≥ 1 kPa`.
pub fn mape(preds: &[[f64; 3]], targets: &[[f64; 3]]) -> Result<Mape> {
    if preds.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: targets.len(),
            got: preds.len(),
        });
    }
    let mut sum = 0.0;
    let mut eligible = 0;
    for (f, t) in preds.iter().flatten().zip(targets.iter().flatten()) {
        if t.abs() >= MAPE_MIN_TARGET_KPA {
            sum += ((f - t) / t).abs();
            eligible += 1;
        }
    }
    if eligible == 0 {
        return Err(Error::NoEligibleComponents {
            threshold: MAPE_MIN_TARGET_KPA,
        });
    }
    Ok(Mape {
        percent: 100.0 * sum / eligible as f64,
        eligible,
    })
}

/// Coefficient of determination `1 − SS_res / SS_tot`, pooled over the
/// three outputs; `SS_tot` is taken about each output's own mean.
pub fn r_squared(preds: &[[f64; 3]], targets: &[[f64; 3]]) -> Result<f64> {
    if preds.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: targets.len(),
            got: preds.len(),
        });
    }
    if targets.len() < 2 {
        return Err(Error::InsufficientData {
            got: targets.len(),
            need: 2,
        });
    }
    let n = targets.len() as f64;
    let mut mean = [0.0; 3];
    for t in targets {
        for q in 0..3 {
            mean[q] += t[q] / n;
        }
    }
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (p, t) in preds.iter().zip(targets) {
        for q in 0..3 {
            ss_res += (p[q] - t[q]).powi(2);
            ss_tot += (t[q] - mean[q]).powi(2);
        }
    }
    if ss_tot == 0.0 {
        return Err(Error::ConstantTargets);
    }
    Ok(1.0 - ss_res / ss_tot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn candidate_sizes() {
        assert_eq!(candidate_hidden_sizes(3, 3).unwrap(), (3..=13).collect::<Vec<_>>());
        assert_eq!(candidate_hidden_sizes(1, 1).unwrap(), (2..=12).collect::<Vec<_>>());
        // perfect square: exactly ten sizes
        assert_eq!(candidate_hidden_sizes(2, 2).unwrap(), (3..=12).collect::<Vec<_>>());
        assert!(candidate_hidden_sizes(0, 3).is_err());
        assert!(candidate_hidden_sizes(3, 0).is_err());
    }

    #[test]
    fn mac_count_examples() {
        let cfg = NetworkConfig::default();
        assert_eq!(mac_count(&cfg, 108), 4_212_000);
        assert_eq!(mac_count(&cfg, 0), 0);
        // 78 per sample-epoch for 3-13-3
        assert_eq!(mac_count(&NetworkConfig { max_epochs: 1, ..cfg.clone() }, 1), 78);
        // b · n_t = 2^40 still fits
        let big = NetworkConfig {
            max_epochs: 1 << 20,
            ..cfg
        };
        assert_eq!(mac_count(&big, 1 << 20), 78u64 << 40);
    }

    #[test]
    fn mape_examples() {
        let t = [[100.0, 100.0, 100.0]];
        assert_eq!(mape(&t, &t).unwrap().percent, 0.0);
        let m = mape(&[[110.0, 90.0, 100.0]], &t).unwrap();
        assert_relative_eq!(m.percent, 20.0 / 3.0, max_relative = 1e-12);
        assert_eq!(m.eligible, 3);
        assert!(matches!(
            mape(&[[1.0, 2.0, 3.0]], &[[0.0, 0.0, 0.0]]),
            Err(Error::NoEligibleComponents { .. })
        ));
        let m = mape(&[[5.0, 88.0, 0.5]], &[[0.0, 80.0, 0.9]]).unwrap();
        assert_eq!(m.eligible, 1);
        assert_relative_eq!(m.percent, 10.0, max_relative = 1e-12);
    }

    #[test]
    fn r_squared_examples() {
        let t = [[1.0, 2.0, 3.0], [2.0, 4.0, 1.0], [3.0, 9.0, 2.0]];
        assert_eq!(r_squared(&t, &t).unwrap(), 1.0);
        let mean = [[2.0, 5.0, 2.0]; 3];
        assert!(r_squared(&mean, &t).unwrap().abs() < 1e-15);
        // SS_tot = 2 + 26 + 2 = 30; SS_res = 1 + 1 + 4 = 6
        let p = [[2.0, 2.0, 3.0], [2.0, 5.0, 1.0], [3.0, 9.0, 4.0]];
        assert_relative_eq!(r_squared(&p, &t).unwrap(), 0.8, max_relative = 1e-12);
        assert!(matches!(r_squared(&[[1.0; 3]; 2], &[[1.0; 3]; 2]), Err(Error::ConstantTargets)));
        assert!(r_squared(&t[..1], &t[..1]).is_err());
    }
}

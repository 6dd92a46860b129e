//! Simulated data platform: a pressure grid is driven through the forward
//! model, tip measurements are perturbed with Gaussian noise and averaged
//! over replicates, and the records are split into train and test sets by
//! the first chamber's pressure level.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actuation::{forward_model, ChamberPressures};
use crate::error::{Error, Result};
use crate::kinematics::{ActuatorGeometry, TipPosition};
use crate::mix_seed;

pub const DEFAULT_LEVELS: [f64; 6] = [0.0, 40.0, 80.0, 120.0, 160.0, 200.0];
pub const DEFAULT_TRAIN_LEVELS: [f64; 3] = [0.0, 80.0, 160.0];

const LEVEL_MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Per-axis measurement noise, mm.
    pub sigma: f64,
    /// Measurements averaged per grid point.
    pub replicates: usize,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            sigma: 0.5,
            replicates: 5,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            sigma: 0.0,
            replicates: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::invalid("noise.sigma", format!("must be >= 0, got {}", self.sigma)));
        }
        if self.replicates == 0 {
            return Err(Error::invalid("noise.replicates", "must be >= 1"));
        }
        Ok(())
    }

    /// Averaged measurement noise for one record, drawn from a stream keyed
    /// by `(seed, index)`.
    pub(crate) fn averaged_offset(&self, seed: u64, index: u64) -> [f64; 3] {
        if self.sigma == 0.0 {
            return [0.0; 3];
        }
        let normal = Normal::new(0.0, self.sigma).expect("sigma validated");
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, index));
        let mut acc = [0.0; 3];
        for _ in 0..self.replicates {
            for a in acc.iter_mut() {
                *a += normal.sample(&mut rng);
            }
        }
        acc.map(|a| a / self.replicates as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::invalid("split", format!("expected train|test, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub pressures: ChamberPressures,
    pub tip: TipPosition,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub geometry: ActuatorGeometry,
    pub sigma: f64,
    pub replicates: usize,
    pub seed: u64,
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<Record>,
    pub provenance: Provenance,
}

/// Every `(p1, p2, p3)` triple over `levels`, `p1` varying slowest.
pub fn pressure_grid(levels: &[f64]) -> Result<Vec<ChamberPressures>> {
    validate_levels(levels)?;
    let mut grid = Vec::with_capacity(levels.len().pow(3));
    for &p1 in levels {
        for &p2 in levels {
            for &p3 in levels {
                grid.push(ChamberPressures::new(p1, p2, p3));
            }
        }
    }
    Ok(grid)
}

fn validate_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::invalid("levels", "at least one level is required"));
    }
    for (i, &l) in levels.iter().enumerate() {
        if !(l.is_finite() && l >= 0.0) {
            return Err(Error::invalid(format!("levels[{i}]"), format!("must be >= 0, got {l}")));
        }
        if levels[..i].contains(&l) {
            return Err(Error::invalid(format!("levels[{i}]"), format!("duplicate level {l}")));
        }
    }
    Ok(())
}

/// Simulates the sampling platform on `levels³` pressure states.
///
/// Each record's tip is the forward-model tip plus the mean of
/// `replicates` Gaussian draws per axis. All records start tagged
/// [`Split::Train`]; see [`split_dataset`].
pub fn simulate_platform(
    levels: &[f64],
    geo: &ActuatorGeometry,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Dataset> {
    geo.validate()?;
    noise.validate()?;
    let grid = pressure_grid(levels)?;
    if let Some(&l) = levels.iter().find(|&&l| l > geo.p_max) {
        return Err(Error::invalid("levels", format!("level {l} exceeds p_max = {}", geo.p_max)));
    }
    let records = grid
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let exact = forward_model(p, geo)?;
            let off = noise.averaged_offset(seed, i as u64);
            Ok(Record {
                pressures: p,
                tip: TipPosition::new(exact.x + off[0], exact.y + off[1], exact.z + off[2]),
                split: Split::Train,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        records,
        provenance: Provenance {
            geometry: *geo,
            sigma: noise.sigma,
            replicates: noise.replicates,
            seed,
            levels: levels.to_vec(),
        },
    })
}

/// Tags records whose `p1` is one of `train_p1_levels` as train, the rest
/// as test.
pub fn split_dataset(ds: &Dataset, train_p1_levels: &[f64]) -> Result<Dataset> {
    for &level in train_p1_levels {
        if !ds
            .provenance
            .levels
            .iter()
            .any(|&l| (l - level).abs() <= LEVEL_MATCH_TOL)
        {
            return Err(Error::UnknownLevel { level });
        }
    }
    let mut out = ds.clone();
    for r in out.records.iter_mut() {
        let train = train_p1_levels
            .iter()
            .any(|&l| (l - r.pressures.p1).abs() <= LEVEL_MATCH_TOL);
        r.split = if train { Split::Train } else { Split::Test };
    }
    Ok(out)
}

impl Dataset {
    pub fn count(&self, split: Split) -> usize {
        self.records.iter().filter(|r| r.split == split).count()
    }

    /// `(tips, pressures)` of one split as plain arrays.
    pub fn arrays(&self, split: Split) -> (Vec<[f64; 3]>, Vec<[f64; 3]>) {
        self.records
            .iter()
            .filter(|r| r.split == split)
            .map(|r| (r.tip.as_array(), r.pressures.as_array()))
            .unzip()
    }

    /// Writes the CSV and its provenance sidecar (see [`provenance_path`]).
    pub fn save(&self, csv_path: impl AsRef<Path>) -> Result<()> {
        let csv_path = csv_path.as_ref();
        let mut w = csv::Writer::from_path(csv_path)?;
        for r in &self.records {
            w.serialize(DatasetRow::from(r))?;
        }
        w.flush()?;
        let mut json = serde_json::to_string_pretty(&self.provenance)?;
        json.push('\n');
        fs::write(provenance_path(csv_path), json)?;
        Ok(())
    }

    pub fn load(csv_path: impl AsRef<Path>) -> Result<Self> {
        let csv_path = csv_path.as_ref();
        let provenance: Provenance = serde_json::from_str(&fs::read_to_string(provenance_path(csv_path))?)?;
        provenance.geometry.validate()?;
        let mut rdr = csv::Reader::from_path(csv_path)?;
        let mut records = Vec::new();
        for row in rdr.deserialize() {
            let row: DatasetRow = row?;
            records.push(Record {
                pressures: ChamberPressures::new(row.p1_kpa, row.p2_kpa, row.p3_kpa),
                tip: TipPosition::new(row.x_mm, row.y_mm, row.z_mm),
                split: row.split.parse()?,
            });
        }
        Ok(Dataset { records, provenance })
    }
}

/// `data.csv` → `data.provenance.json`
pub fn provenance_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("provenance.json")
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetRow {
    #[serde(rename = "p1_kPa")]
    p1_kpa: f64,
    #[serde(rename = "p2_kPa")]
    p2_kpa: f64,
    #[serde(rename = "p3_kPa")]
    p3_kpa: f64,
    x_mm: f64,
    y_mm: f64,
    z_mm: f64,
    split: String,
}

impl From<&Record> for DatasetRow {
    fn from(r: &Record) -> Self {
        DatasetRow {
            p1_kpa: r.pressures.p1,
            p2_kpa: r.pressures.p2,
            p3_kpa: r.pressures.p3,
            x_mm: r.tip.x,
            y_mm: r.tip.y,
            z_mm: r.tip.z,
            split: r.split.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noiseless(seed: u64) -> Dataset {
        simulate_platform(&DEFAULT_LEVELS, &ActuatorGeometry::default(), &NoiseModel::noiseless(), seed).unwrap()
    }

    #[test]
    fn grid_cardinality_and_order() {
        let g = pressure_grid(&DEFAULT_LEVELS).unwrap();
        assert_eq!(g.len(), 216);
        assert_eq!(g[0], ChamberPressures::zero());
        assert_eq!(g[1], ChamberPressures::new(0.0, 0.0, 40.0));
        assert_eq!(g[36], ChamberPressures::new(40.0, 0.0, 0.0));
        for (i, a) in g.iter().enumerate() {
            assert!(!g[..i].contains(a));
        }
        assert_eq!(pressure_grid(&[0.0]).unwrap(), vec![ChamberPressures::zero()]);
        assert_eq!(pressure_grid(&[0.0, 200.0]).unwrap().len(), 8);
    }

    #[test]
    fn grid_rejects_bad_levels() {
        assert!(pressure_grid(&[]).is_err());
        assert!(pressure_grid(&[0.0, 40.0, 0.0]).is_err());
        assert!(pressure_grid(&[-5.0]).is_err());
    }

    #[test]
    fn noiseless_records_equal_forward_model() {
        let geo = ActuatorGeometry::default();
        let ds = noiseless(1);
        for r in &ds.records {
            assert_eq!(r.tip, forward_model(r.pressures, &geo).unwrap());
        }
        let with_reps = simulate_platform(&DEFAULT_LEVELS, &geo, &NoiseModel { sigma: 0.0, replicates: 7 }, 9).unwrap();
        assert_eq!(with_reps.records, ds.records);
    }

    #[test]
    fn noiseless_is_seed_independent() {
        assert_eq!(noiseless(1).records, noiseless(2).records);
    }

    #[test]
    fn averaged_noise_has_reduced_spread() {
        let geo = ActuatorGeometry::default();
        let noise = NoiseModel { sigma: 0.5, replicates: 5 };
        let noisy = simulate_platform(&DEFAULT_LEVELS, &geo, &noise, 42).unwrap();
        let clean = noiseless(0);
        let expected = 0.5 / 5f64.sqrt();
        for axis in 0..3 {
            let dev: Vec<f64> = noisy
                .records
                .iter()
                .zip(&clean.records)
                .map(|(a, b)| a.tip.as_array()[axis] - b.tip.as_array()[axis])
                .collect();
            let n = dev.len() as f64;
            let mean = dev.iter().sum::<f64>() / n;
            let std = (dev.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n).sqrt();
            assert!((std - expected).abs() <= 0.3 * expected, "axis {axis}: std {std}");
        }
        assert_eq!(noisy, simulate_platform(&DEFAULT_LEVELS, &geo, &noise, 42).unwrap());
    }

    #[test]
    fn default_split_is_even() {
        let ds = split_dataset(&noiseless(0), &DEFAULT_TRAIN_LEVELS).unwrap();
        assert_eq!(ds.count(Split::Train), 108);
        assert_eq!(ds.count(Split::Test), 108);
        let again = split_dataset(&ds, &DEFAULT_TRAIN_LEVELS).unwrap();
        assert_eq!(again, ds);

        let all = split_dataset(&ds, &DEFAULT_LEVELS).unwrap();
        assert_eq!(all.count(Split::Train), 216);
        assert_eq!(all.count(Split::Test), 0);

        assert!(matches!(
            split_dataset(&ds, &[50.0]),
            Err(Error::UnknownLevel { level }) if level == 50.0
        ));
    }

    #[test]
    fn levels_above_p_max_are_rejected() {
        let geo = ActuatorGeometry::default();
        assert!(simulate_platform(&[0.0, 240.0], &geo, &NoiseModel::noiseless(), 0).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let geo = ActuatorGeometry::default();
        let ds = simulate_platform(&[0.0, 90.0, 200.0], &geo, &NoiseModel::default(), 3).unwrap();
        let ds = split_dataset(&ds, &[90.0]).unwrap();
        ds.save(&path).unwrap();
        let header = fs::read_to_string(&path).unwrap();
        assert!(header.starts_with("p1_kPa,p2_kPa,p3_kPa,x_mm,y_mm,z_mm,split\n"));
        assert!(dir.path().join("data.provenance.json").exists());
        assert_eq!(Dataset::load(&path).unwrap(), ds);
    }
}

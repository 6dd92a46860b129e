//! JSON run configuration. Every block is optional and falls back to the
//! defaults below; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bpnet::{NetworkConfig, OutputActivation};
use crate::datagen::{NoiseModel, DEFAULT_LEVELS, DEFAULT_TRAIN_LEVELS};
use crate::error::{Error, Result};
use crate::kinematics::ActuatorGeometry;
use crate::trajectory::{lemniscate_waypoints, Waypoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub d: f64,
    pub l0: f64,
    pub k: f64,
    pub area_ratio: f64,
    pub p_max: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            d: 12.5,
            l0: 120.0,
            k: 2.128,
            area_ratio: 2.547,
            p_max: 200.0,
        }
    }
}

impl GeometryConfig {
    pub fn build(&self) -> Result<ActuatorGeometry> {
        ActuatorGeometry::new(self.d, self.l0, self.k, self.area_ratio, self.p_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Pressure levels (kPa) of the sampling grid.
    pub levels: Vec<f64>,
    /// Records with `p1` at one of these levels form the training set.
    pub train_p1_levels: Vec<f64>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            levels: DEFAULT_LEVELS.to_vec(),
            train_p1_levels: DEFAULT_TRAIN_LEVELS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkBlock {
    pub hidden: usize,
    pub eta: f64,
    pub max_epochs: usize,
    pub target_mse: f64,
    pub init_half_width: f64,
    pub output_activation: OutputActivation,
    pub standardize_outputs: bool,
    /// Seeds of the hidden-size sweep.
    pub sweep_seeds: Vec<u64>,
}

impl Default for NetworkBlock {
    fn default() -> Self {
        let n = NetworkConfig::default();
        Self {
            hidden: n.hidden,
            eta: n.eta,
            max_epochs: n.max_epochs,
            target_mse: n.target_mse,
            init_half_width: n.init_half_width,
            output_activation: n.output_activation,
            standardize_outputs: n.standardize_outputs,
            sweep_seeds: vec![0, 1, 2, 3, 4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub a: f64,
    pub b: f64,
    pub z_c: f64,
    pub count: usize,
    /// Defaults to the rest length `l0`.
    pub reference_length: Option<f64>,
    /// Measurement noise applied when evaluating; none when absent.
    pub eval_noise: Option<NoiseModel>,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            a: 15.0,
            b: 15.0,
            z_c: 124.0,
            count: 41,
            reference_length: None,
            eval_noise: None,
        }
    }
}

impl TrajectoryConfig {
    pub fn waypoints(&self) -> Result<Vec<Waypoint>> {
        lemniscate_waypoints(self.a, self.b, self.z_c, self.count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub noise: NoiseModel,
    pub data: DataConfig,
    pub network: NetworkBlock,
    pub trajectory: TrajectoryConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: GeometryConfig::default(),
            noise: NoiseModel::default(),
            data: DataConfig::default(),
            network: NetworkBlock::default(),
            trajectory: TrajectoryConfig::default(),
            seed: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn geometry(&self) -> Result<ActuatorGeometry> {
        self.geometry.build()
    }

    pub fn network_config(&self) -> NetworkConfig {
        NetworkConfig {
            hidden: self.network.hidden,
            eta: self.network.eta,
            max_epochs: self.network.max_epochs,
            target_mse: self.network.target_mse,
            seed: self.seed,
            init_half_width: self.network.init_half_width,
            output_activation: self.network.output_activation,
            standardize_outputs: self.network.standardize_outputs,
            ..NetworkConfig::default()
        }
    }

    /// Checks every block against its own invariants; errors carry the
    /// dotted path of the offending field.
    pub fn validate(&self) -> Result<()> {
        let geo = self.geometry()?;
        self.noise.validate()?;
        if self.data.levels.is_empty() {
            return Err(Error::invalid("data.levels", "at least one level is required"));
        }
        for (i, &l) in self.data.levels.iter().enumerate() {
            if !(l.is_finite() && l >= 0.0 && l <= geo.p_max) {
                return Err(Error::invalid(
                    format!("data.levels[{i}]"),
                    format!("must lie in [0, p_max = {}], got {l}", geo.p_max),
                ));
            }
            if self.data.levels[..i].contains(&l) {
                return Err(Error::invalid(format!("data.levels[{i}]"), format!("duplicate level {l}")));
            }
        }
        for (i, l) in self.data.train_p1_levels.iter().enumerate() {
            if !self.data.levels.contains(l) {
                return Err(Error::invalid(
                    format!("data.train_p1_levels[{i}]"),
                    format!("{l} kPa is not one of data.levels"),
                ));
            }
        }
        self.network_config().validate()?;
        if self.network.sweep_seeds.is_empty() {
            return Err(Error::invalid("network.sweep_seeds", "at least one seed is required"));
        }
        let t = &self.trajectory;
        for (name, v) in [("a", t.a), ("b", t.b), ("z_c", t.z_c)] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("trajectory.{name}"), "must be finite"));
            }
        }
        if !(t.z_c > 0.0) {
            return Err(Error::invalid("trajectory.z_c", "must be > 0"));
        }
        if t.count < 2 {
            return Err(Error::invalid("trajectory.count", "must be >= 2"));
        }
        if let Some(r) = t.reference_length {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::invalid("trajectory.reference_length", "must be > 0"));
            }
        }
        if let Some(n) = &t.eval_noise {
            n.validate()
                .map_err(|e| prefix_path(e, "trajectory.eval_noise"))?;
        }
        Ok(())
    }
}

fn prefix_path(err: Error, prefix: &str) -> Error {
    match err {
        Error::Invalid { path, message } => Error::Invalid {
            path: format!("{prefix}.{}", path.trim_start_matches("noise.")),
            message,
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_blocks_fill_defaults() {
        let cfg = RunConfig::from_json(r#"{"geometry": {"d": 10.0}, "seed": 7}"#).unwrap();
        assert_eq!(cfg.geometry.d, 10.0);
        assert_eq!(cfg.geometry.l0, 120.0);
        assert_eq!(cfg.network_config().seed, 7);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"geometry": {"dd": 1.0}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"extra": 1}"#).is_err());
    }

    #[test]
    fn negative_sigma_names_the_field() {
        let err = RunConfig::from_json(r#"{"noise": {"sigma": -1.0}}"#).unwrap_err();
        assert!(err.to_string().contains("noise.sigma"), "{err}");
        let err = RunConfig::from_json(r#"{"trajectory": {"eval_noise": {"sigma": -1.0, "replicates": 1}}}"#)
            .unwrap_err();
        assert!(err.to_string().contains("trajectory.eval_noise.sigma"), "{err}");
    }

    #[test]
    fn train_levels_must_be_on_grid() {
        let err = RunConfig::from_json(r#"{"data": {"train_p1_levels": [50.0]}}"#).unwrap_err();
        assert!(err.to_string().contains("data.train_p1_levels[0]"), "{err}");
    }

    #[test]
    fn hidden_size_is_bounded() {
        let err = RunConfig::from_json(r#"{"network": {"hidden": 20}}"#).unwrap_err();
        assert!(err.to_string().contains("network.hidden"));
    }
}

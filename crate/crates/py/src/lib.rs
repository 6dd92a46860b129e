//! Python bindings. Positions are `(x, y, z)` tuples in mm, pressures
//! `(p1, p2, p3)` tuples in kPa; every function takes an optional
//! `Geometry` and falls back to the default actuator.

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sba_ik::bpnet::{self, NetworkConfig, OutputActivation, TrainedModel};
use sba_ik::datagen::{simulate_platform, split_dataset, NoiseModel, Split, DEFAULT_LEVELS, DEFAULT_TRAIN_LEVELS};
use sba_ik::trajectory;
use sba_ik::{ActuatorGeometry, ArcParameters, ChamberLengths, ChamberPressures, Error, TipPosition};

type Triple = (f64, f64, f64);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyOSError::new_err(io.to_string()),
        e if e.is_numerical() => PyRuntimeError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

/// Actuator geometry and material constants.
#[pyclass(name = "Geometry", module = "sba_ik_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGeometry {
    inner: ActuatorGeometry,
}

#[pymethods]
impl PyGeometry {
    #[new]
    #[pyo3(signature = (d=12.5, l0=120.0, k=2.128, area_ratio=2.547, p_max=200.0))]
    fn new(d: f64, l0: f64, k: f64, area_ratio: f64, p_max: f64) -> PyResult<Self> {
        let inner = ActuatorGeometry::new(d, l0, k, area_ratio, p_max).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn d(&self) -> f64 {
        self.inner.d
    }

    #[getter]
    fn l0(&self) -> f64 {
        self.inner.l0
    }

    #[getter]
    fn k(&self) -> f64 {
        self.inner.k
    }

    #[getter]
    fn mu0(&self) -> f64 {
        self.inner.mu0
    }

    #[getter]
    fn area_ratio(&self) -> f64 {
        self.inner.area_ratio
    }

    #[getter]
    fn p_max(&self) -> f64 {
        self.inner.p_max
    }

    fn __repr__(&self) -> String {
        let g = &self.inner;
        format!(
            "Geometry(d={}, l0={}, k={}, area_ratio={}, p_max={})",
            g.d, g.l0, g.k, g.area_ratio, g.p_max
        )
    }
}

fn geo(g: Option<PyRef<'_, PyGeometry>>) -> ActuatorGeometry {
    g.map(|g| g.inner).unwrap_or_default()
}

fn tip_tuple(t: TipPosition) -> Triple {
    (t.x, t.y, t.z)
}

#[pyfunction]
fn arc_to_tip(l: f64, theta: f64, phi: f64) -> Triple {
    tip_tuple(sba_ik::arc_to_tip(ArcParameters::new(l, theta, phi)))
}

/// Returns `(l, theta, phi)`.
#[pyfunction]
fn tip_to_arc(x: f64, y: f64, z: f64) -> PyResult<Triple> {
    let a = sba_ik::tip_to_arc(TipPosition::new(x, y, z)).map_err(to_py)?;
    Ok((a.l, a.theta, a.phi))
}

#[pyfunction]
#[pyo3(signature = (l, theta, phi, geometry=None))]
fn arc_to_chamber_lengths(l: f64, theta: f64, phi: f64, geometry: Option<PyRef<'_, PyGeometry>>) -> PyResult<Triple> {
    let c = sba_ik::arc_to_chamber_lengths(ArcParameters::new(l, theta, phi), &geo(geometry)).map_err(to_py)?;
    Ok((c.l1, c.l2, c.l3))
}

#[pyfunction]
#[pyo3(signature = (l1, l2, l3, geometry=None))]
fn bending_radius(l1: f64, l2: f64, l3: f64, geometry: Option<PyRef<'_, PyGeometry>>) -> PyResult<f64> {
    sba_ik::bending_radius(ChamberLengths::new(l1, l2, l3), &geo(geometry)).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (l1, l2, l3, geometry=None))]
fn chamber_lengths_to_arc(l1: f64, l2: f64, l3: f64, geometry: Option<PyRef<'_, PyGeometry>>) -> PyResult<Triple> {
    let a = sba_ik::chamber_lengths_to_arc(ChamberLengths::new(l1, l2, l3), &geo(geometry)).map_err(to_py)?;
    Ok((a.l, a.theta, a.phi))
}

#[pyfunction]
#[pyo3(signature = (length, geometry=None))]
fn length_to_pressure(length: f64, geometry: Option<PyRef<'_, PyGeometry>>) -> f64 {
    sba_ik::length_to_pressure(length, &geo(geometry))
}

#[pyfunction]
#[pyo3(signature = (pressure, geometry=None))]
fn pressure_to_length(pressure: f64, geometry: Option<PyRef<'_, PyGeometry>>) -> PyResult<f64> {
    sba_ik::pressure_to_length(pressure, &geo(geometry)).map_err(to_py)
}

/// Chamber pressures placing the tip at `(x, y, z)`.
#[pyfunction]
#[pyo3(signature = (x, y, z, geometry=None))]
fn analytical_ik(x: f64, y: f64, z: f64, geometry: Option<PyRef<'_, PyGeometry>>) -> PyResult<Triple> {
    let p = sba_ik::analytical_ik(TipPosition::new(x, y, z), &geo(geometry)).map_err(to_py)?;
    Ok((p.p1, p.p2, p.p3))
}

#[pyfunction]
#[pyo3(signature = (p1, p2, p3, geometry=None))]
fn forward_model(p1: f64, p2: f64, p3: f64, geometry: Option<PyRef<'_, PyGeometry>>) -> PyResult<Triple> {
    let t = sba_ik::forward_model(ChamberPressures::new(p1, p2, p3), &geo(geometry)).map_err(to_py)?;
    Ok(tip_tuple(t))
}

/// Fits `k` to `(pressure kPa, length mm)` samples; returns
/// `(k_hat, mu0_hat, residual)`.
#[pyfunction]
#[pyo3(signature = (samples, geometry=None))]
fn calibrate(samples: Vec<(f64, f64)>, geometry: Option<PyRef<'_, PyGeometry>>) -> PyResult<Triple> {
    let fit = sba_ik::calibrate(&samples, &geo(geometry)).map_err(to_py)?;
    Ok((fit.k_hat, fit.mu0_hat, fit.residual))
}

type Arrays = Vec<[f64; 3]>;

/// Simulated dataset as `(train_tips, train_pressures, test_tips,
/// test_pressures)`.
#[pyfunction]
#[pyo3(signature = (sigma=0.0, replicates=1, seed=0, levels=None, train_levels=None, geometry=None))]
fn generate_dataset(
    sigma: f64,
    replicates: usize,
    seed: u64,
    levels: Option<Vec<f64>>,
    train_levels: Option<Vec<f64>>,
    geometry: Option<PyRef<'_, PyGeometry>>,
) -> PyResult<(Arrays, Arrays, Arrays, Arrays)> {
    let noise = NoiseModel { sigma, replicates };
    noise.validate().map_err(to_py)?;
    let levels = levels.unwrap_or_else(|| DEFAULT_LEVELS.to_vec());
    let train_levels = train_levels.unwrap_or_else(|| DEFAULT_TRAIN_LEVELS.to_vec());
    let ds = simulate_platform(&levels, &geo(geometry), &noise, seed)
        .and_then(|ds| split_dataset(&ds, &train_levels))
        .map_err(to_py)?;
    let (a, b) = ds.arrays(Split::Train);
    let (c, d) = ds.arrays(Split::Test);
    Ok((a, b, c, d))
}

/// Figure-8 waypoints as a list of `(x, y, z)`.
#[pyfunction]
#[pyo3(signature = (a=15.0, b=15.0, z_c=124.0, count=41))]
fn lemniscate_waypoints(a: f64, b: f64, z_c: f64, count: usize) -> PyResult<Vec<Triple>> {
    let wps = trajectory::lemniscate_waypoints(a, b, z_c, count).map_err(to_py)?;
    Ok(wps.into_iter().map(|w| tip_tuple(w.target)).collect())
}

/// A trained tip → pressure network.
#[pyclass(name = "Model", module = "sba_ik_py", frozen)]
struct PyModel {
    inner: TrainedModel,
    #[pyo3(get)]
    mse_history: Vec<f64>,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    #[pyo3(signature = (tips, pressures, hidden=13, eta=0.01, max_epochs=500, target_mse=0.01, seed=0, logistic_output=false))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        py: Python<'_>,
        tips: Arrays,
        pressures: Arrays,
        hidden: usize,
        eta: f64,
        max_epochs: usize,
        target_mse: f64,
        seed: u64,
        logistic_output: bool,
    ) -> PyResult<Self> {
        let config = NetworkConfig {
            hidden,
            eta,
            max_epochs,
            target_mse,
            seed,
            output_activation: if logistic_output {
                OutputActivation::Logistic
            } else {
                OutputActivation::Identity
            },
            ..NetworkConfig::default()
        };
        let (inner, history) = py
            .detach(|| bpnet::train(&config, &tips, &pressures))
            .map_err(to_py)?;
        Ok(Self {
            inner,
            mse_history: history.mse,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = TrainedModel::load(path).map_err(to_py)?;
        Ok(Self {
            inner,
            mse_history: Vec::new(),
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[getter]
    fn hidden(&self) -> usize {
        self.inner.config.hidden
    }

    #[getter]
    fn final_mse(&self) -> f64 {
        self.inner.summary.final_mse
    }

    /// Pressures `(p1, p2, p3)` in kPa for the tip `(x, y, z)`.
    fn predict(&self, x: f64, y: f64, z: f64) -> Triple {
        let p = bpnet::predict_pressures(&self.inner, TipPosition::new(x, y, z));
        (p.p1, p.p2, p.p3)
    }

    fn predict_many(&self, tips: Arrays) -> Arrays {
        tips.into_iter().map(|t| self.inner.predict(t)).collect()
    }
}

/// Pooled R² of predictions against targets.
#[pyfunction]
fn r_squared(preds: Arrays, targets: Arrays) -> PyResult<f64> {
    bpnet::r_squared(&preds, &targets).map_err(to_py)
}

/// MAPE in percent over components with |target| ≥ 1 kPa.
#[pyfunction]
fn mape(preds: Arrays, targets: Arrays) -> PyResult<f64> {
    Ok(bpnet::mape(&preds, &targets).map_err(to_py)?.percent)
}

#[pymodule]
fn sba_ik_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGeometry>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(arc_to_tip, m)?)?;
    m.add_function(wrap_pyfunction!(tip_to_arc, m)?)?;
    m.add_function(wrap_pyfunction!(arc_to_chamber_lengths, m)?)?;
    m.add_function(wrap_pyfunction!(bending_radius, m)?)?;
    m.add_function(wrap_pyfunction!(chamber_lengths_to_arc, m)?)?;
    m.add_function(wrap_pyfunction!(length_to_pressure, m)?)?;
    m.add_function(wrap_pyfunction!(pressure_to_length, m)?)?;
    m.add_function(wrap_pyfunction!(analytical_ik, m)?)?;
    m.add_function(wrap_pyfunction!(forward_model, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(generate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(lemniscate_waypoints, m)?)?;
    m.add_function(wrap_pyfunction!(r_squared, m)?)?;
    m.add_function(wrap_pyfunction!(mape, m)?)?;
    Ok(())
}

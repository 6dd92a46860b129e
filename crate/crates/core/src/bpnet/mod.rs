//! A 3–m–3 feed-forward network trained by plain back-propagation.
//!
//! Hidden units use the logistic sigmoid. The output layer is linear by
//! default ([`OutputActivation::Identity`]); a logistic output is kept for
//! comparison runs. Training is full-batch gradient descent on the summed
//! half-squared error with no momentum and no shuffling, so a
//! `(config, data)` pair fixes every weight bit for bit.

mod metrics;
mod model_file;
mod standardize;
mod sweep;

pub use metrics::{candidate_hidden_sizes, mac_count, mape, r_squared, Mape, MAPE_MIN_TARGET_KPA};
pub use model_file::{HistorySummary, ModelFile, MODEL_FORMAT_VERSION};
pub use standardize::Standardizer;
pub use sweep::{hidden_sweep, hidden_sweep_sizes, SweepResult, SweepRow};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::actuation::ChamberPressures;
use crate::error::{Error, Result};
use crate::kinematics::TipPosition;

pub const INPUTS: usize = 3;
pub const OUTPUTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Identity,
    Logistic,
}

impl OutputActivation {
    fn apply(self, z: f64) -> f64 {
        match self {
            OutputActivation::Identity => z,
            OutputActivation::Logistic => sigmoid(z),
        }
    }

    /// Derivative expressed through the activated value.
    fn slope(self, out: f64) -> f64 {
        match self {
            OutputActivation::Identity => 1.0,
            OutputActivation::Logistic => out * (1.0 - out),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub n_in: usize,
    pub hidden: usize,
    pub n_out: usize,
    /// Learning rate.
    pub eta: f64,
    /// Maximum number of gradient steps.
    pub max_epochs: usize,
    /// Training stops once the batch MSE (scaled units) reaches this.
    pub target_mse: f64,
    pub seed: u64,
    pub init_half_width: f64,
    pub output_activation: OutputActivation,
    pub standardize_outputs: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            n_in: INPUTS,
            hidden: 13,
            n_out: OUTPUTS,
            eta: 0.01,
            max_epochs: 500,
            target_mse: 0.01,
            seed: 0,
            init_half_width: 0.5,
            output_activation: OutputActivation::Identity,
            standardize_outputs: true,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_in != INPUTS {
            return Err(Error::invalid("network.n_in", format!("must be {INPUTS}, got {}", self.n_in)));
        }
        if self.n_out != OUTPUTS {
            return Err(Error::invalid("network.n_out", format!("must be {OUTPUTS}, got {}", self.n_out)));
        }
        if !(3..=13).contains(&self.hidden) {
            return Err(Error::invalid(
                "network.hidden",
                format!("must lie in [3, 13], got {}", self.hidden),
            ));
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::invalid("network.eta", format!("must be > 0, got {}", self.eta)));
        }
        if self.max_epochs == 0 {
            return Err(Error::invalid("network.max_epochs", "must be >= 1"));
        }
        if !(self.target_mse.is_finite() && self.target_mse > 0.0) {
            return Err(Error::invalid(
                "network.target_mse",
                format!("must be > 0, got {}", self.target_mse),
            ));
        }
        if !(self.init_half_width.is_finite() && self.init_half_width >= 0.0) {
            return Err(Error::invalid(
                "network.init_half_width",
                format!("must be >= 0, got {}", self.init_half_width),
            ));
        }
        Ok(())
    }
}

/// Weights and biases of a single-hidden-layer network.
///
/// `v` is `n_in × hidden` and `w` is `hidden × n_out`, both row-major.
/// The same structure carries gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkWeights {
    pub n_in: usize,
    pub hidden: usize,
    pub n_out: usize,
    pub v: Vec<f64>,
    pub b: Vec<f64>,
    pub w: Vec<f64>,
    pub beta: Vec<f64>,
}

impl NetworkWeights {
    pub fn zeros(n_in: usize, hidden: usize, n_out: usize) -> Self {
        Self {
            n_in,
            hidden,
            n_out,
            v: vec![0.0; n_in * hidden],
            b: vec![0.0; hidden],
            w: vec![0.0; hidden * n_out],
            beta: vec![0.0; n_out],
        }
    }

    pub fn v_at(&self, i: usize, j: usize) -> f64 {
        self.v[i * self.hidden + j]
    }

    pub fn w_at(&self, j: usize, q: usize) -> f64 {
        self.w[j * self.n_out + q]
    }

    /// All parameters in the fixed order `v, b, w, beta`.
    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.v.iter().chain(&self.b).chain(&self.w).chain(&self.beta)
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.v
            .iter_mut()
            .chain(self.b.iter_mut())
            .chain(self.w.iter_mut())
            .chain(self.beta.iter_mut())
    }

    pub fn param_count(&self) -> usize {
        self.v.len() + self.b.len() + self.w.len() + self.beta.len()
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|p| p.is_finite())
    }

    fn check_shape(&self) -> Result<()> {
        let expect = [
            (self.n_in * self.hidden, self.v.len()),
            (self.hidden, self.b.len()),
            (self.hidden * self.n_out, self.w.len()),
            (self.n_out, self.beta.len()),
        ];
        for (expected, got) in expect {
            if expected != got {
                return Err(Error::DimensionMismatch { expected, got });
            }
        }
        Ok(())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Uniform weights on `[−h, h]` from a ChaCha8 stream seeded with
/// `config.seed`, drawn in the order `v` (row-major), `b`, `w` (row-major),
/// `beta`.
pub fn init_weights(config: &NetworkConfig) -> NetworkWeights {
    let mut weights = NetworkWeights::zeros(config.n_in, config.hidden, config.n_out);
    let h = config.init_half_width;
    if h > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for p in weights.params_mut() {
            *p = rng.random_range(-h..=h);
        }
    }
    weights
}

/// Output and hidden activations for one (already scaled) input.
pub fn forward_pass(
    weights: &NetworkWeights,
    input: &[f64],
    activation: OutputActivation,
) -> (Vec<f64>, Vec<f64>) {
    debug_assert_eq!(input.len(), weights.n_in);
    let m = weights.hidden;
    let mut hidden = weights.b.clone();
    for (i, x) in input.iter().enumerate() {
        let row = &weights.v[i * m..(i + 1) * m];
        for (h, v) in hidden.iter_mut().zip(row) {
            *h += v * x;
        }
    }
    for h in hidden.iter_mut() {
        *h = sigmoid(*h);
    }
    let k = weights.n_out;
    let mut out = weights.beta.clone();
    for (j, y) in hidden.iter().enumerate() {
        let row = &weights.w[j * k..(j + 1) * k];
        for (o, w) in out.iter_mut().zip(row) {
            *o += w * y;
        }
    }
    for o in out.iter_mut() {
        *o = activation.apply(*o);
    }
    (out, hidden)
}

/// `½ Σ_q (pred_q − target_q)²`
pub fn loss(pred: &[f64], target: &[f64]) -> f64 {
    0.5 * pred.iter().zip(target).map(|(p, r)| (p - r).powi(2)).sum::<f64>()
}

/// Summed loss over a batch.
pub fn batch_loss(weights: &NetworkWeights, batch: &[([f64; 3], [f64; 3])], activation: OutputActivation) -> f64 {
    batch
        .iter()
        .map(|(x, t)| loss(&forward_pass(weights, x, activation).0, t))
        .sum()
}

/// Mean over samples and outputs of the squared error.
pub fn batch_mse(weights: &NetworkWeights, batch: &[([f64; 3], [f64; 3])], activation: OutputActivation) -> f64 {
    2.0 * batch_loss(weights, batch, activation) / (batch.len() * weights.n_out) as f64
}

/// Gradient of the summed batch loss, plus that loss.
fn gradients_and_loss(
    weights: &NetworkWeights,
    batch: &[([f64; 3], [f64; 3])],
    activation: OutputActivation,
) -> (NetworkWeights, f64) {
    let (n, m, k) = (weights.n_in, weights.hidden, weights.n_out);
    let mut grad = NetworkWeights::zeros(n, m, k);
    let mut total = 0.0;
    let mut delta_out = vec![0.0; k];
    let mut delta_hidden = vec![0.0; m];
    for (x, target) in batch {
        let (out, hidden) = forward_pass(weights, x, activation);
        total += loss(&out, target);
        for q in 0..k {
            delta_out[q] = (out[q] - target[q]) * activation.slope(out[q]);
            grad.beta[q] += delta_out[q];
        }
        for j in 0..m {
            let row = &weights.w[j * k..(j + 1) * k];
            let mut back = 0.0;
            for q in 0..k {
                grad.w[j * k + q] += hidden[j] * delta_out[q];
                back += row[q] * delta_out[q];
            }
            delta_hidden[j] = back * hidden[j] * (1.0 - hidden[j]);
            grad.b[j] += delta_hidden[j];
        }
        for (xi, grad_row) in x.iter().zip(grad.v.chunks_exact_mut(m)) {
            for (g, d) in grad_row.iter_mut().zip(&delta_hidden) {
                *g += xi * d;
            }
        }
    }
    (grad, total)
}

/// Exact gradient of `Σ_samples ½Σ_q (P_q − R_q)²` with respect to every
/// weight and bias.
pub fn gradients(
    weights: &NetworkWeights,
    batch: &[([f64; 3], [f64; 3])],
    activation: OutputActivation,
) -> Result<NetworkWeights> {
    if batch.is_empty() {
        return Err(Error::InsufficientData { got: 0, need: 1 });
    }
    weights.check_shape()?;
    if weights.n_in != INPUTS || weights.n_out != OUTPUTS {
        return Err(Error::DimensionMismatch {
            expected: INPUTS,
            got: weights.n_in,
        });
    }
    Ok(gradients_and_loss(weights, batch, activation).0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Threshold,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingHistory {
    /// Batch MSE before the first step.
    pub initial_mse: f64,
    /// Batch MSE after each step; `mse[e]` follows step `e + 1`.
    pub mse: Vec<f64>,
    pub stop: StopReason,
    /// Multiply-accumulate budget `b · n_t · (n·m + m·k)`.
    pub mac_count: u64,
}

impl TrainingHistory {
    pub fn final_mse(&self) -> f64 {
        self.mse.last().copied().unwrap_or(self.initial_mse)
    }

    pub fn summary(&self) -> HistorySummary {
        HistorySummary {
            epochs: self.mse.len(),
            initial_mse: self.initial_mse,
            final_mse: self.final_mse(),
            stop_reason: self.stop,
            mac_count: self.mac_count,
        }
    }
}

/// A trained network together with the scalers fitted on its training set.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub config: NetworkConfig,
    pub input_scaler: Standardizer,
    pub output_scaler: Standardizer,
    pub weights: NetworkWeights,
    pub summary: HistorySummary,
}

impl TrainedModel {
    pub fn predict(&self, input: [f64; 3]) -> [f64; 3] {
        let x = self.input_scaler.standardize(input);
        let (out, _) = forward_pass(&self.weights, &x, self.config.output_activation);
        self.output_scaler.destandardize([out[0], out[1], out[2]])
    }
}

/// Fits scalers on the training set and runs full-batch gradient descent.
///
/// Each epoch applies `Δθ = −η ∂E/∂θ` for every parameter, then records the
/// batch MSE. Training stops after `max_epochs` steps or as soon as the
/// MSE is at or below `target_mse`.
pub fn train(
    config: &NetworkConfig,
    inputs: &[[f64; 3]],
    targets: &[[f64; 3]],
) -> Result<(TrainedModel, TrainingHistory)> {
    config.validate()?;
    if inputs.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.len(),
            got: targets.len(),
        });
    }
    if inputs.len() < config.hidden {
        return Err(Error::InsufficientData {
            got: inputs.len(),
            need: config.hidden,
        });
    }
    let input_scaler = Standardizer::fit(inputs)?;
    let output_scaler = match (config.output_activation, config.standardize_outputs) {
        (OutputActivation::Logistic, _) => Standardizer::fit_unit_interval(targets)?,
        (OutputActivation::Identity, true) => Standardizer::fit(targets)?,
        (OutputActivation::Identity, false) => Standardizer::identity(),
    };
    let batch: Vec<([f64; 3], [f64; 3])> = inputs
        .iter()
        .zip(targets)
        .map(|(x, t)| (input_scaler.standardize(*x), output_scaler.standardize(*t)))
        .collect();

    let mut weights = init_weights(config);
    let scale = 2.0 / (batch.len() * config.n_out) as f64;
    let (mut grad, mut total) = gradients_and_loss(&weights, &batch, config.output_activation);
    let initial_mse = total * scale;
    let mut mse = Vec::with_capacity(config.max_epochs);
    let mut stop = StopReason::MaxIterations;
    if initial_mse <= config.target_mse {
        stop = StopReason::Threshold;
    } else {
        for epoch in 1..=config.max_epochs {
            for (p, g) in weights.params_mut().zip(grad.params()) {
                *p -= config.eta * g;
            }
            (grad, total) = gradients_and_loss(&weights, &batch, config.output_activation);
            let current = total * scale;
            if !current.is_finite() || !weights.is_finite() {
                return Err(Error::DivergedLoss { epoch });
            }
            mse.push(current);
            if current <= config.target_mse {
                stop = StopReason::Threshold;
                break;
            }
        }
    }
    let history = TrainingHistory {
        initial_mse,
        mse,
        stop,
        mac_count: mac_count(config, inputs.len() as u64),
    };
    let model = TrainedModel {
        config: config.clone(),
        input_scaler,
        output_scaler,
        weights,
        summary: history.summary(),
    };
    Ok((model, history))
}

/// Chamber pressures (kPa) the network assigns to a tip position.
pub fn predict_pressures(model: &TrainedModel, tip: TipPosition) -> ChamberPressures {
    model.predict(tip.as_array()).into()
}

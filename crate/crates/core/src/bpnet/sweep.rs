use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mix_seed;

use super::{candidate_hidden_sizes, r_squared, train, NetworkConfig, INPUTS, OUTPUTS};

/// One `(hidden size, seed)` cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub hidden: usize,
    pub seed: u64,
    pub final_mse: Option<f64>,
    pub test_r2: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Ordered by hidden size, then by position in the seed list.
    pub rows: Vec<SweepRow>,
    /// `(hidden, mean test R²)` over the cells that trained successfully.
    pub mean_r2: Vec<(usize, f64)>,
    pub selected_hidden: usize,
}

impl SweepResult {
    /// CSV `hidden,seed,final_mse,test_r2,error`; failed cells leave the
    /// metric columns empty.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sweeps every candidate hidden size for a 3-input 3-output network.
pub fn hidden_sweep(
    base: &NetworkConfig,
    seeds: &[u64],
    train_set: (&[[f64; 3]], &[[f64; 3]]),
    test_set: (&[[f64; 3]], &[[f64; 3]]),
) -> Result<SweepResult> {
    let sizes = candidate_hidden_sizes(INPUTS, OUTPUTS)?;
    hidden_sweep_sizes(base, &sizes, seeds, train_set, test_set)
}

/// Trains one network per `(size, seed)` cell and keeps the size with the
/// highest mean test R², preferring the smaller size on ties.
///
/// Each cell trains with seed `mix_seed(seed, size)`. Cells run in
/// parallel; a failing cell is recorded in its row and skipped in the
/// selection.
pub fn hidden_sweep_sizes(
    base: &NetworkConfig,
    sizes: &[usize],
    seeds: &[u64],
    train_set: (&[[f64; 3]], &[[f64; 3]]),
    test_set: (&[[f64; 3]], &[[f64; 3]]),
) -> Result<SweepResult> {
    if seeds.is_empty() {
        return Err(Error::invalid("seeds", "at least one seed is required"));
    }
    if sizes.is_empty() {
        return Err(Error::invalid("sizes", "at least one hidden size is required"));
    }
    let cells: Vec<(usize, u64)> = sizes
        .iter()
        .flat_map(|&m| seeds.iter().map(move |&s| (m, s)))
        .collect();

    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(hidden, seed)| {
            let config = NetworkConfig {
                hidden,
                seed: mix_seed(seed, hidden as u64),
                ..base.clone()
            };
            let outcome = train(&config, train_set.0, train_set.1).and_then(|(model, history)| {
                let preds: Vec<[f64; 3]> = test_set.0.iter().map(|x| model.predict(*x)).collect();
                Ok((history.final_mse(), r_squared(&preds, test_set.1)?))
            });
            match outcome {
                Ok((mse, r2)) => SweepRow {
                    hidden,
                    seed,
                    final_mse: Some(mse),
                    test_r2: Some(r2),
                    error: None,
                },
                Err(e) => SweepRow {
                    hidden,
                    seed,
                    final_mse: None,
                    test_r2: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let mut mean_r2 = Vec::new();
    for &m in sizes {
        let scores: Vec<f64> = rows
            .iter()
            .filter(|r| r.hidden == m)
            .filter_map(|r| r.test_r2)
            .collect();
        if !scores.is_empty() {
            mean_r2.push((m, scores.iter().sum::<f64>() / scores.len() as f64));
        }
    }
    let selected_hidden = select(&mean_r2).ok_or_else(|| {
        let first = rows.iter().find_map(|r| r.error.clone()).unwrap_or_default();
        Error::invalid("sweep", format!("every cell failed; first error: {first}"))
    })?;
    Ok(SweepResult {
        rows,
        mean_r2,
        selected_hidden,
    })
}

/// Size with the highest score; the smaller size wins a tie.
fn select(mean_r2: &[(usize, f64)]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &(m, score) in mean_r2 {
        best = match best {
            Some((bm, bs)) if score > bs || (score == bs && m < bm) => Some((m, score)),
            Some(b) => Some(b),
            None => Some((m, score)),
        };
    }
    best.map(|(m, _)| m)
}

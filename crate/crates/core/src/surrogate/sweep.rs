use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train, HyperParams, SurrogateModel, ValidationMetric};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    /// Position in the grid.
    pub grid_index: usize,
    pub hyperparams: HyperParams,
    /// `None` when training failed.
    pub metric: Option<ValidationMetric>,
    pub final_train_mse: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub best: SurrogateModel,
    /// Ranked best first; failed runs last, in grid order.
    pub leaderboard: Vec<LeaderboardEntry>,
}

impl SweepOutcome {
    pub fn leaderboard_csv(&self) -> String {
        let mut s = String::from(
            "rank,grid_index,hidden_width,depth,learning_rate,batch_size,epochs,seed,\
             within_0.1pct_all,mean_re,final_train_mse,status\n",
        );
        for (rank, e) in self.leaderboard.iter().enumerate() {
            let h = &e.hyperparams;
            let (frac, mre) = e
                .metric
                .map_or((String::new(), String::new()), |m| {
                    (m.within_tight_all.to_string(), m.mean_re.to_string())
                });
            let mse = e.final_train_mse.map_or(String::new(), |v| v.to_string());
            let status = e.error.as_deref().map_or("ok".to_string(), |m| {
                format!("\"failed: {}\"", m.replace('"', "'"))
            });
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                rank + 1,
                e.grid_index,
                h.hidden_width,
                h.depth,
                h.learning_rate,
                h.batch_size,
                h.epochs,
                h.seed,
                frac,
                mre,
                mse,
                status
            );
        }
        s
    }
}

/// Hidden width {32, 64, 128} × depth {2, 3} × learning rate {1e-3, 3e-4}.
pub fn default_grid(batch_size: usize, epochs: usize, seed: u64) -> Vec<HyperParams> {
    let mut grid = Vec::with_capacity(12);
    for hidden_width in [32, 64, 128] {
        for depth in [2, 3] {
            for learning_rate in [1e-3, 3e-4] {
                grid.push(HyperParams {
                    hidden_width,
                    depth,
                    learning_rate,
                    batch_size,
                    epochs,
                    seed,
                });
            }
        }
    }
    grid
}

/// Better validation score first: higher all-outputs 0.1% fraction, then
/// lower mean relative error, then earlier grid position.
fn rank(a: &(usize, ValidationMetric), b: &(usize, ValidationMetric)) -> Ordering {
    b.1.within_tight_all
        .total_cmp(&a.1.within_tight_all)
        .then(a.1.mean_re.total_cmp(&b.1.mean_re))
        .then(a.0.cmp(&b.0))
}

/// Trains one model per grid entry (in parallel on the current rayon pool)
/// and keeps the best by validation score.
pub fn sweep(train_set: &Dataset, validation: &Dataset, grid: &[HyperParams]) -> Result<SweepOutcome> {
    if grid.is_empty() {
        return Err(Error::Contract("hyperparameter grid is empty".into()));
    }
    let runs: Vec<Result<SurrogateModel>> = grid
        .par_iter()
        .map(|h| train(train_set, validation, h))
        .collect();

    let mut scored = Vec::new();
    let mut failed = Vec::new();
    let mut models: Vec<Option<SurrogateModel>> = Vec::with_capacity(grid.len());
    for (i, run) in runs.into_iter().enumerate() {
        match run {
            Ok(m) => {
                let metric = m.history().validation.unwrap_or(ValidationMetric {
                    within_tight_all: 0.0,
                    mean_re: f64::INFINITY,
                });
                scored.push((i, metric));
                models.push(Some(m));
            }
            Err(e) => {
                failed.push((i, e.to_string()));
                models.push(None);
            }
        }
    }
    if scored.is_empty() {
        return Err(Error::SweepFailed(
            failed
                .into_iter()
                .map(|(i, e)| format!("grid[{i}] {:?}: {e}", grid[i]))
                .collect(),
        ));
    }
    scored.sort_by(rank);

    let mut leaderboard: Vec<LeaderboardEntry> = scored
        .iter()
        .map(|&(i, metric)| LeaderboardEntry {
            grid_index: i,
            hyperparams: grid[i].clone(),
            metric: Some(metric),
            final_train_mse: models[i].as_ref().map(|m| m.history().final_train_mse),
            error: None,
        })
        .collect();
    leaderboard.extend(failed.into_iter().map(|(i, e)| LeaderboardEntry {
        grid_index: i,
        hyperparams: grid[i].clone(),
        metric: None,
        final_train_mse: None,
        error: Some(e),
    }));

    let best = models[scored[0].0].take().expect("scored model present");
    Ok(SweepOutcome { best, leaderboard })
}

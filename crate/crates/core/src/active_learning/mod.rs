//! Output-space rebalancing of a densely simulated dataset.
//!
//! The output bounding box of the dense set is filled with Sobol candidates;
//! each candidate is matched to the nearest simulated row (Manhattan distance
//! on unit-box-rescaled outputs) and every matched row is kept once, together
//! with the flight point that produced it. The resulting training set has a
//! much flatter output distribution than the dense input-space sample.

mod kdtree;

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use kdtree::{l1, L1Index, LEAF_SIZE};

use crate::dataset::{Dataset, OutputBounds, Provenance};
use crate::error::{Error, Result};
use crate::metrics::ks_uniformity;
use crate::qmc::sample_qmc_box;
use crate::simulator::OutputDim;

/// Counts and uniformity diagnostics of one downsampling pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownsampleReport {
    pub candidates: usize,
    pub matched: usize,
    pub unique: usize,
    /// KS distance to uniform on the dense output bounds, before and after.
    pub ks_pre: [f64; 4],
    pub ks_post: [f64; 4],
    /// Outputs are rescaled to the unit box before the distance is taken.
    pub output_scaling: String,
}

impl DownsampleReport {
    /// Flat `key=value` lines.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "candidates={}", self.candidates);
        let _ = writeln!(s, "matched={}", self.matched);
        let _ = writeln!(s, "unique={}", self.unique);
        for d in OutputDim::ALL {
            let _ = writeln!(s, "ks_pre_{}={}", d.name(), self.ks_pre[d.index()]);
        }
        for d in OutputDim::ALL {
            let _ = writeln!(s, "ks_post_{}={}", d.name(), self.ks_post[d.index()]);
        }
        let _ = writeln!(s, "output_scaling={}", self.output_scaling);
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_kv()).map_err(|e| Error::io(path, e))
    }

    /// Output whose dense distribution is farthest from uniform.
    pub fn most_skewed(&self) -> OutputDim {
        OutputDim::ALL
            .into_iter()
            .max_by(|a, b| {
                self.ks_pre[a.index()]
                    .total_cmp(&self.ks_pre[b.index()])
                    .then(b.index().cmp(&a.index()))
            })
            .unwrap_or(OutputDim::Fn)
    }
}

/// Builds the nearest-neighbour index over a dataset's outputs.
pub fn build_index(outputs: &[[f64; 4]], bounds: OutputBounds) -> Result<L1Index> {
    L1Index::build(outputs, bounds)
}

/// Row index matched by each candidate, in candidate order.
pub fn match_candidates(index: &L1Index, candidates: &[[f64; 4]]) -> Vec<usize> {
    candidates.par_iter().map(|y| index.nearest(y)).collect()
}

/// First occurrence of each row index, preserving order.
pub fn unique_in_order(matches: &[usize], n_rows: usize) -> Vec<usize> {
    let mut seen = vec![false; n_rows];
    matches
        .iter()
        .copied()
        .filter(|&i| !std::mem::replace(&mut seen[i], true))
        .collect()
}

/// Rebalances `dense` toward a uniform output distribution.
pub fn downsample(
    dense: &Dataset,
    n_candidates: usize,
    seed: u64,
) -> Result<(Dataset, DownsampleReport)> {
    if n_candidates == 0 {
        return Err(Error::EmptySample);
    }
    let bounds = dense.output_extrema()?;
    let rows: Vec<[f64; 4]> = dense.outputs().iter().map(|x| x.to_array()).collect();

    let (kept, matched) = if dense.len() == 1 {
        (vec![0], n_candidates)
    } else {
        let index = build_index(&rows, bounds)?;
        let candidates: Vec<[f64; 4]> = sample_qmc_box(&bounds.lb, &bounds.ub, n_candidates, seed)?
            .into_iter()
            .map(|c| [c[0], c[1], c[2], c[3]])
            .collect();
        let matches = match_candidates(&index, &candidates);
        (unique_in_order(&matches, dense.len()), matches.len())
    };

    let out = dense.select(&kept, Provenance::Downsampled, seed);
    let report = DownsampleReport {
        candidates: n_candidates,
        matched,
        unique: out.len(),
        ks_pre: ks_by_column(dense, &bounds),
        ks_post: ks_by_column(&out, &bounds),
        output_scaling: "unit-box".into(),
    };
    Ok((out, report))
}

/// KS-vs-uniform per output column; zero for a degenerate column.
pub fn ks_by_column(d: &Dataset, bounds: &OutputBounds) -> [f64; 4] {
    std::array::from_fn(|k| {
        if !(bounds.ub[k] > bounds.lb[k]) || d.is_empty() {
            return 0.0;
        }
        let values: Vec<f64> = d.outputs().iter().map(|x| x.to_array()[k]).collect();
        ks_uniformity(&values, bounds.lb[k], bounds.ub[k]).unwrap_or(0.0)
    })
}

//! Exact Manhattan-distance nearest neighbour over 4-D rows.

use crate::dataset::OutputBounds;
use crate::error::{Error, Result};
use crate::simulator::OutputDim;

pub const LEAF_SIZE: usize = 16;

const DIM: usize = 4;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// k-d tree over rows rescaled into the unit box by the output bounds.
///
/// Queries return the row minimizing the L1 distance in rescaled
/// coordinates; equal distances resolve to the lowest row index.
#[derive(Debug, Clone)]
pub struct L1Index {
    points: Vec<[f64; DIM]>,
    order: Vec<usize>,
    nodes: Vec<Node>,
    bounds: OutputBounds,
}

impl L1Index {
    pub fn build(rows: &[[f64; DIM]], bounds: OutputBounds) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Contract("cannot index an empty table".into()));
        }
        for k in 0..DIM {
            if !(bounds.ub[k] > bounds.lb[k]) {
                return Err(Error::DegenerateBounds {
                    column: OutputDim::ALL[k].name(),
                });
            }
        }
        let mut index = Self {
            points: Vec::with_capacity(rows.len()),
            order: (0..rows.len()).collect(),
            nodes: Vec::new(),
            bounds,
        };
        index.points = rows.iter().map(|r| index.rescale(r)).collect();
        index.build_node(0, rows.len());
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bounds(&self) -> &OutputBounds {
        &self.bounds
    }

    /// Maps a raw row into the unit box.
    pub fn rescale(&self, y: &[f64; DIM]) -> [f64; DIM] {
        std::array::from_fn(|k| (y[k] - self.bounds.lb[k]) / (self.bounds.ub[k] - self.bounds.lb[k]))
    }

    /// Rescaled copy of stored row `i`.
    pub fn point(&self, i: usize) -> &[f64; DIM] {
        &self.points[i]
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let dim = self.widest_dim(start, end);
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][dim].total_cmp(&points[b][dim])
        });
        let value = points[self.order[mid]][dim];
        self.nodes.push(Node::Split {
            dim,
            value,
            left: 0,
            right: 0,
        });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        if let Node::Split {
            left: l, right: r, ..
        } = &mut self.nodes[id]
        {
            *l = left;
            *r = right;
        }
        id
    }

    fn widest_dim(&self, start: usize, end: usize) -> usize {
        let mut lo = [f64::INFINITY; DIM];
        let mut hi = [f64::NEG_INFINITY; DIM];
        for &i in &self.order[start..end] {
            for k in 0..DIM {
                lo[k] = lo[k].min(self.points[i][k]);
                hi[k] = hi[k].max(self.points[i][k]);
            }
        }
        (0..DIM)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])).then(b.cmp(&a)))
            .unwrap_or(0)
    }

    /// Nearest stored row to raw query `y`.
    pub fn nearest(&self, y: &[f64; DIM]) -> usize {
        self.nearest_with_distance(y).0
    }

    /// Nearest row and its L1 distance in rescaled coordinates.
    pub fn nearest_with_distance(&self, y: &[f64; DIM]) -> (usize, f64) {
        let q = self.rescale(y);
        let mut best = (usize::MAX, f64::INFINITY);
        let mut offsets = [0.0; DIM];
        self.search(0, &q, &mut offsets, 0.0, &mut best);
        best
    }

    fn search(
        &self,
        node: usize,
        q: &[f64; DIM],
        offsets: &mut [f64; DIM],
        lower_bound: f64,
        best: &mut (usize, f64),
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d = l1(q, &self.points[i]);
                    if d < best.1 || (d == best.1 && i < best.0) {
                        *best = (i, d);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[dim] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, offsets, lower_bound, best);
                // Points in `far` lie on the other side of the splitting plane.
                let old = offsets[dim];
                let bound = lower_bound - old + diff.abs();
                if bound <= best.1 {
                    offsets[dim] = diff.abs();
                    self.search(far, q, offsets, bound, best);
                    offsets[dim] = old;
                }
            }
        }
    }
}

/// Manhattan distance.
pub fn l1(a: &[f64; DIM], b: &[f64; DIM]) -> f64 {
    let mut d = 0.0;
    for k in 0..DIM {
        d += (a[k] - b[k]).abs();
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_bounds() -> OutputBounds {
        OutputBounds {
            lb: [0.0; 4],
            ub: [1.0; 4],
        }
    }

    fn brute(rows: &[[f64; 4]], q: &[f64; 4]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, r) in rows.iter().enumerate() {
            let d: f64 = (0..4).map(|k| (q[k] - r[k]).abs()).fold(0.0, |a, b| a + b);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    #[test]
    fn single_point_wins_everything() {
        let idx = L1Index::build(&[[0.5; 4]], unit_bounds()).unwrap();
        for q in [[0.0; 4], [1.0; 4], [-3.0, 2.0, 0.1, 9.0]] {
            assert_eq!(idx.nearest(&q), 0);
        }
    }

    #[test]
    fn exact_hit_has_zero_distance() {
        let rows: Vec<[f64; 4]> = (0..100).map(|i| [i as f64 / 100.0, 0.3, 0.7, 0.1]).collect();
        let idx = L1Index::build(&rows, unit_bounds()).unwrap();
        assert_eq!(idx.nearest_with_distance(&rows[42]), (42, 0.0));
    }

    #[test]
    fn duplicates_resolve_to_lowest_index() {
        let mut rows = vec![[0.9; 4]; 40];
        rows.extend(vec![[0.25, 0.5, 0.5, 0.5]; 40]);
        rows.push([0.1; 4]);
        let idx = L1Index::build(&rows, unit_bounds()).unwrap();
        assert_eq!(idx.nearest(&[0.25, 0.5, 0.5, 0.5]), 40);
        assert_eq!(idx.nearest(&[1.0; 4]), 0);
    }

    #[test]
    fn equidistant_query_takes_lower_index() {
        let mut rows = vec![[5.0; 4]; 10];
        rows[3] = [0.0, 0.0, 0.0, 0.0];
        rows[7] = [1.0, 0.0, 0.0, 0.0];
        let idx = L1Index::build(&rows, unit_bounds()).unwrap();
        assert_eq!(idx.nearest(&[0.5, 0.0, 0.0, 0.0]), 3);
    }

    #[test]
    fn matches_brute_force_on_random_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<[f64; 4]> = (0..5000).map(|_| rng.gen()).collect();
        let idx = L1Index::build(&rows, unit_bounds()).unwrap();
        for _ in 0..1000 {
            let q: [f64; 4] = rng.gen();
            assert_eq!(idx.nearest(&q), brute(&rows, &q));
        }
    }

    #[test]
    fn rescaling_uses_bounds() {
        let b = OutputBounds {
            lb: [0.0, 0.0, 0.0, 0.0],
            ub: [1000.0, 1.0, 1.0, 1.0],
        };
        // Raw-unit distance would pick row 0; rescaled distance picks row 1.
        let rows = [[0.0, 0.0, 0.0, 0.0], [10.0, 0.5, 0.0, 0.0]];
        let idx = L1Index::build(&rows, b).unwrap();
        assert_eq!(idx.nearest(&[10.0, 0.4, 0.0, 0.0]), 1);
    }

    #[test]
    fn degenerate_bounds_are_rejected() {
        let b = OutputBounds {
            lb: [0.0, 1.0, 0.0, 0.0],
            ub: [1.0, 1.0, 1.0, 1.0],
        };
        assert!(matches!(
            L1Index::build(&[[0.0, 1.0, 0.0, 0.0]], b),
            Err(Error::DegenerateBounds { column: "F049_Tt" })
        ));
        assert!(L1Index::build(&[], unit_bounds()).is_err());
    }
}

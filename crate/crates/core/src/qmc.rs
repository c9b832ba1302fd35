//! Low-discrepancy and stratified samplers over unit cubes.
//!
//! [`Sobol`] produces a base-2 digital sequence using the Joe–Kuo direction
//! numbers, optionally randomized by a seeded digital shift (XOR scramble),
//! which preserves the net structure of every power-of-two prefix.
//! [`latin_hypercube`] returns jittered one-point-per-stratum designs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const BITS: u32 = 32;
const SCALE: f64 = 1.0 / 4_294_967_296.0;

/// `(degree, polynomial coefficients, initial direction numbers)` for
/// dimensions 2 and upward; dimension 1 is the van der Corput sequence.
const DIRECTIONS: &[(u32, u32, &[u32])] = &[
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
];

pub const MAX_SOBOL_DIM: usize = DIRECTIONS.len() + 1;

/// Sobol sequence generator with Gray-code ordering.
#[derive(Debug, Clone)]
pub struct Sobol {
    directions: Vec<[u32; BITS as usize]>,
    shift: Vec<u32>,
    state: Vec<u32>,
    index: u64,
}

impl Sobol {
    /// Unscrambled sequence; the first point is the origin.
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_SOBOL_DIM {
            return Err(Error::Contract(format!(
                "Sobol dimension must be in 1..={MAX_SOBOL_DIM}, got {dim}"
            )));
        }
        let mut directions = Vec::with_capacity(dim);
        let mut first = [0u32; BITS as usize];
        for (k, v) in first.iter_mut().enumerate() {
            *v = 1 << (BITS - 1 - k as u32);
        }
        directions.push(first);
        for &(degree, poly, init) in DIRECTIONS.iter().take(dim - 1) {
            let s = degree as usize;
            let mut v = [0u32; BITS as usize];
            for k in 0..s {
                v[k] = init[k] << (BITS - 1 - k as u32);
            }
            for k in s..BITS as usize {
                let mut next = v[k - s] ^ (v[k - s] >> s);
                for j in 1..s {
                    if (poly >> (s - 1 - j)) & 1 == 1 {
                        next ^= v[k - j];
                    }
                }
                v[k] = next;
            }
            directions.push(v);
        }
        Ok(Self {
            directions,
            shift: vec![0; dim],
            state: vec![0; dim],
            index: 0,
        })
    }

    /// Sequence randomized by a digital shift drawn from `seed`.
    pub fn scrambled(dim: usize, seed: u64) -> Result<Self> {
        let mut sobol = Self::new(dim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in &mut sobol.shift {
            *s = rng.gen();
        }
        Ok(sobol)
    }

    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    /// Next point in `[0, 1)^dim`.
    pub fn next_point(&mut self) -> Vec<f64> {
        let point = self
            .state
            .iter()
            .zip(&self.shift)
            .map(|(&x, &s)| f64::from(x ^ s) * SCALE)
            .collect();
        let bit = (!self.index).trailing_zeros() as usize;
        assert!(bit < BITS as usize, "Sobol sequence exhausted");
        for (x, v) in self.state.iter_mut().zip(&self.directions) {
            *x ^= v[bit];
        }
        self.index += 1;
        point
    }
}

/// `n` Sobol points (digitally shifted by `seed`) mapped affinely into
/// the box `[lb, ub]`.
pub fn sample_qmc_box(lb: &[f64], ub: &[f64], n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if lb.len() != ub.len() {
        return Err(Error::Contract(format!(
            "box bounds have mismatched dimensions {} and {}",
            lb.len(),
            ub.len()
        )));
    }
    if let Some(k) = (0..lb.len()).find(|&k| !(lb[k] <= ub[k])) {
        return Err(Error::Contract(format!(
            "lower bound {} exceeds upper bound {} in dimension {k}",
            lb[k], ub[k]
        )));
    }
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let mut sobol = Sobol::scrambled(lb.len(), seed)?;
    Ok((0..n)
        .map(|_| {
            sobol
                .next_point()
                .into_iter()
                .zip(lb.iter().zip(ub))
                .map(|(u, (&lo, &hi))| if lo == hi { lo } else { lo + u * (hi - lo) })
                .collect()
        })
        .collect())
}

/// Largest jitter inside a stratum. Keeps `floor(u * n)` equal to the
/// stratum index after floating-point rounding.
const JITTER_MAX: f64 = 1.0 - 1e-9;

/// Jittered Latin hypercube design of `n` points in `[0, 1)^D`.
///
/// For every dimension, `floor(u * n)` takes each value in `0..n` exactly once.
pub fn latin_hypercube<const D: usize>(n: usize, seed: u64) -> Result<Vec<[f64; D]>> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![[0.0; D]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for d in 0..D {
        strata.shuffle(&mut rng);
        for (point, &stratum) in points.iter_mut().zip(&strata) {
            let jitter = rng.gen::<f64>() * JITTER_MAX;
            point[d] = (stratum as f64 + jitter) / n as f64;
        }
    }
    Ok(points)
}

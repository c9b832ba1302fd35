//! Randomized invariants across seeds and sizes.

use echoforge::active_learning::{l1, L1Index};
use echoforge::active_learning::downsample;
use echoforge::dataset::split_indices;
use echoforge::envelope::MachRow;
use echoforge::metrics::{bucket_report, ks_uniformity, ErrorRecord};
use echoforge::qmc::{latin_hypercube, sample_qmc_box};
use echoforge::{Dataset, EngineOutputs, Envelope, FlightPoint, OutputBounds, Provenance, TurbofanModel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dense(n: usize, seed: u64) -> Dataset {
    let pts = Envelope::default().sample_lhs(n, seed).unwrap();
    let out = TurbofanModel::default().simulate_batch(&pts).unwrap();
    Dataset::new(pts, out, Provenance::Dense, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lhs_strata_and_envelope(n in 1usize..300, seed in any::<u64>()) {
        let u = latin_hypercube::<4>(n, seed).unwrap();
        for d in 0..4 {
            let mut hit = vec![false; n];
            for p in &u {
                let s = (p[d] * n as f64).floor() as usize;
                prop_assert!(!hit[s]);
                hit[s] = true;
            }
        }
        let env = Envelope::default();
        for p in env.sample_lhs(n, seed).unwrap() {
            prop_assert!(env.check(&p).is_ok());
        }
    }

    #[test]
    fn mach_bounds_are_linear_between_rows(t in 0.0f64..=1.0) {
        let env = Envelope::default();
        let rows: &[MachRow] = &env.mach_table;
        for w in rows.windows(2) {
            let alt = w[0].altitude_ft + t * (w[1].altitude_ft - w[0].altitude_ft);
            if alt > env.alt_bounds.hi || alt < env.alt_bounds.lo {
                continue;
            }
            let (lo, hi) = env.mach_bounds(alt).unwrap();
            let elo = w[0].mach_lo + t * (w[1].mach_lo - w[0].mach_lo);
            let ehi = w[0].mach_hi + t * (w[1].mach_hi - w[0].mach_hi);
            prop_assert!((lo - elo).abs() < 1e-12 && (hi - ehi).abs() < 1e-12);
        }
    }

    #[test]
    fn split_partitions_indices(n in 1usize..500, ratio in 0.01f64..0.99, seed in any::<u64>()) {
        let (a, b) = split_indices(n, ratio, seed);
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(a.len(), (ratio * n as f64 + 0.5).floor() as usize);
    }

    #[test]
    fn qmc_box_points_stay_inside(
        lb in prop::collection::vec(-1e3f64..1e3, 3),
        width in prop::collection::vec(0.0f64..1e3, 3),
        n in 1usize..200,
        seed in any::<u64>(),
    ) {
        let ub: Vec<f64> = lb.iter().zip(&width).map(|(l, w)| l + w).collect();
        for p in sample_qmc_box(&lb, &ub, n, seed).unwrap() {
            for d in 0..3 {
                prop_assert!(lb[d] <= p[d] && p[d] <= ub[d]);
            }
        }
    }

    #[test]
    fn ks_is_invariant_under_affine_rescaling(
        values in prop::collection::vec(0.0f64..1.0, 1..200),
        scale in 0.5f64..100.0,
        shift in -100.0f64..100.0,
    ) {
        let a = ks_uniformity(&values, 0.0, 1.0).unwrap();
        let moved: Vec<f64> = values.iter().map(|v| shift + scale * v).collect();
        let b = ks_uniformity(&moved, shift, shift + scale).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn tight_bucket_never_exceeds_loose(errors in prop::collection::vec(0.0f64..0.05, 1..100)) {
        let records: Vec<ErrorRecord> = errors
            .iter()
            .map(|&e| {
                let truth = EngineOutputs::new(100.0, 200.0, 300.0, 400.0);
                let pred = EngineOutputs::from_array(truth.to_array().map(|v| v * (1.0 + e)));
                ErrorRecord::new(FlightPoint::new(0.0, 0.0, 0.1, 3000.0), truth, pred)
            })
            .collect();
        let r = bucket_report(&records).unwrap();
        for k in 0..4 {
            prop_assert!(r.within_tight[k] <= r.within_loose[k]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn extrema_contain_every_row(n in 2usize..400, seed in any::<u64>()) {
        let d = dense(n, seed);
        let b = d.output_extrema().unwrap();
        prop_assert!(d.outputs().iter().all(|x| b.contains(x)));
    }

    #[test]
    fn csv_round_trip_is_exact(n in 1usize..200, seed in any::<u64>()) {
        let d = dense(n, seed);
        let mut buf = Vec::new();
        d.write_to(&mut buf).unwrap();
        let back = Dataset::read_from(buf.as_slice()).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn downsampled_rows_are_a_unique_subset(n in 2usize..400, m in 1usize..400, seed in any::<u64>()) {
        let d = dense(n, seed);
        let (down, report) = downsample(&d, m, seed ^ 1).unwrap();
        prop_assert!(down.len() <= n.min(m));
        prop_assert_eq!(report.unique, down.len());
        let mut seen = std::collections::HashSet::new();
        for (p, x) in down.rows() {
            let i = d.inputs().iter().position(|q| q == p).unwrap();
            prop_assert_eq!(&d.outputs()[i], x);
            prop_assert!(seen.insert(i));
        }
    }
}

#[test]
fn kdtree_matches_brute_force_with_ties() {
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // A coarse lattice forces many equal distances.
        let rows: Vec<[f64; 4]> = (0..5000)
            .map(|_| std::array::from_fn(|_| rng.gen_range(0..8) as f64 / 7.0))
            .collect();
        let bounds = OutputBounds { lb: [0.0; 4], ub: [1.0; 4] };
        let index = L1Index::build(&rows, bounds).unwrap();
        for _ in 0..1000 {
            let q: [f64; 4] = std::array::from_fn(|_| rng.gen::<f64>());
            let brute = (0..rows.len())
                .min_by(|&a, &b| l1(&rows[a], &q).total_cmp(&l1(&rows[b], &q)).then(a.cmp(&b)))
                .unwrap();
            assert_eq!(index.nearest(&q), brute, "seed {seed}");
        }
    }
}

/// Largest gap between the empirical and the uniform mass of anchored
/// boxes `[0, a) x [0, b)` on a 64 x 64 grid of corners.
fn box_discrepancy(points: &[Vec<f64>]) -> f64 {
    let g = 64;
    let n = points.len() as f64;
    let mut worst: f64 = 0.0;
    for i in 1..=g {
        for j in 1..=g {
            let (a, b) = (i as f64 / g as f64, j as f64 / g as f64);
            let inside = points.iter().filter(|p| p[0] < a && p[1] < b).count() as f64;
            worst = worst.max((inside / n - a * b).abs());
        }
    }
    worst
}

#[test]
fn sobol_beats_pseudo_random_on_discrepancy() {
    let sobol = box_discrepancy(&sample_qmc_box(&[0.0, 0.0], &[1.0, 1.0], 1024, 0).unwrap());
    let random_mean = (0..20u64)
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let pts: Vec<Vec<f64>> = (0..1024).map(|_| vec![rng.gen(), rng.gen()]).collect();
            box_discrepancy(&pts)
        })
        .sum::<f64>()
        / 20.0;
    assert!(sobol < random_mean, "sobol {sobol} vs random {random_mean}");
}

#[test]
fn parallel_simulation_matches_sequential_bitwise() {
    let pts = Envelope::default().sample_lhs(3000, 9).unwrap();
    let model = TurbofanModel::default();
    let seq: Vec<EngineOutputs> = pts.iter().map(|p| model.simulate(p).unwrap()).collect();
    for threads in [1, 4] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let par = pool.install(|| model.simulate_batch(&pts)).unwrap();
        assert_eq!(par, seq);
    }
}

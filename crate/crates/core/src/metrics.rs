//! Relative-error records, accuracy buckets, uniformity and boundary analysis.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, INPUT_COLUMNS, OUTPUT_COLUMNS};
use crate::envelope::{Envelope, FlightPoint, InputDim, Interval};
use crate::error::{Error, Result};
use crate::simulator::{sfc, EngineOutputs, OutputDim};
use crate::surrogate::SurrogateModel;

/// Magnitudes below this switch relative error to absolute error.
pub const RE_FLOOR: f64 = 1e-8;
pub const TIGHT_RE: f64 = 1e-3;
pub const LOOSE_RE: f64 = 1e-2;

/// Per-output `|pred - truth| / |truth|`, absolute where `|truth|` is tiny.
pub fn relative_error(pred: &EngineOutputs, truth: &EngineOutputs) -> [f64; 4] {
    let (p, t) = (pred.to_array(), truth.to_array());
    std::array::from_fn(|k| scalar_re(p[k], t[k]))
}

fn scalar_re(pred: f64, truth: f64) -> f64 {
    let err = (pred - truth).abs();
    if truth.abs() >= RE_FLOOR {
        err / truth.abs()
    } else {
        err
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub input: FlightPoint,
    pub truth: EngineOutputs,
    pub predicted: EngineOutputs,
    pub re: [f64; 4],
    /// Relative error of SFC derived from predicted thrust and fuel flow;
    /// infinite when the predicted thrust is not positive.
    pub sfc_re: f64,
    /// Columns where the absolute-error fallback applied.
    pub absolute: [bool; 4],
}

impl ErrorRecord {
    pub fn new(input: FlightPoint, truth: EngineOutputs, predicted: EngineOutputs) -> Self {
        let sfc_re = match (sfc(&predicted), sfc(&truth)) {
            (Ok(p), Ok(t)) => scalar_re(p, t),
            _ => f64::INFINITY,
        };
        Self {
            input,
            truth,
            predicted,
            re: relative_error(&predicted, &truth),
            sfc_re,
            absolute: truth.to_array().map(|t| t.abs() < RE_FLOOR),
        }
    }

    pub fn max_re(&self) -> f64 {
        self.re.iter().copied().fold(0.0, f64::max)
    }

    /// Error used for high-error selection: one output, or the worst of four.
    pub fn error_for(&self, output: Option<OutputDim>) -> f64 {
        match output {
            Some(d) => self.re[d.index()],
            None => self.max_re(),
        }
    }
}

/// Predicts every test row and records its errors.
pub fn evaluate(model: &SurrogateModel, test: &Dataset) -> Vec<ErrorRecord> {
    let predicted = model.predict_batch(test.inputs());
    test.rows()
        .zip(predicted)
        .map(|((p, t), y)| ErrorRecord::new(*p, *t, y))
        .collect()
}

fn record_columns() -> Vec<String> {
    let mut cols: Vec<String> = INPUT_COLUMNS.iter().map(|s| s.to_string()).collect();
    cols.extend(OUTPUT_COLUMNS.iter().map(|s| s.to_string()));
    for prefix in ["pred_", "re_"] {
        cols.extend(OUTPUT_COLUMNS.iter().map(|s| format!("{prefix}{s}")));
    }
    cols.push("re_PerfInst_SFC".into());
    cols
}

pub fn write_records_csv(path: impl AsRef<Path>, records: &[ErrorRecord]) -> Result<()> {
    let path = path.as_ref();
    let write = || -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{}", record_columns().join(","))?;
        for r in records {
            let vals: Vec<String> = r
                .input
                .to_array()
                .into_iter()
                .chain(r.truth.to_array())
                .chain(r.predicted.to_array())
                .chain(r.re)
                .chain([r.sfc_re])
                .map(|v| v.to_string())
                .collect();
            writeln!(w, "{}", vals.join(","))?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Reads records back; relative errors are recomputed from the stored values.
pub fn read_records_csv(path: impl AsRef<Path>) -> Result<Vec<ErrorRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut csv = csv::Reader::from_reader(BufReader::new(file));
    let cols = record_columns();
    let header = csv.headers().map_err(|e| Error::Parse {
        row: 0,
        column: "header".into(),
        message: e.to_string(),
    })?;
    if header.iter().ne(cols.iter().map(String::as_str)) {
        return Err(Error::Parse {
            row: 0,
            column: "header".into(),
            message: "unexpected error-record columns".into(),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in csv.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            column: "*".into(),
            message: e.to_string(),
        })?;
        let mut v = [0.0; 12];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = rec[k].parse().map_err(|_| Error::Parse {
                row,
                column: cols[k].clone(),
                message: format!("`{}` is not a number", &rec[k]),
            })?;
        }
        out.push(ErrorRecord::new(
            FlightPoint::from_array([v[0], v[1], v[2], v[3]]),
            EngineOutputs::from_array([v[4], v[5], v[6], v[7]]),
            EngineOutputs::from_array([v[8], v[9], v[10], v[11]]),
        ));
    }
    Ok(out)
}

/// Fractions of records within the two accuracy buckets, per output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketReport {
    pub size: usize,
    pub within_tight: [f64; 4],
    pub within_loose: [f64; 4],
}

pub fn bucket_report(records: &[ErrorRecord]) -> Result<BucketReport> {
    if records.is_empty() {
        return Err(Error::Contract("bucket report of no records".into()));
    }
    let n = records.len() as f64;
    let frac = |threshold: f64| -> [f64; 4] {
        std::array::from_fn(|k| {
            records.iter().filter(|r| r.re[k] <= threshold).count() as f64 / n
        })
    };
    Ok(BucketReport {
        size: records.len(),
        within_tight: frac(TIGHT_RE),
        within_loose: frac(LOOSE_RE),
    })
}

impl BucketReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("quantity,within_0.1pct,within_1pct,test_size\n");
        for d in OutputDim::ALL {
            let k = d.index();
            let _ = writeln!(
                s,
                "{},{},{},{}",
                d.name(),
                self.within_tight[k],
                self.within_loose[k],
                self.size
            );
        }
        s
    }

    /// Human-readable table: one row per output, percentages.
    pub fn to_table(&self, title: &str) -> String {
        let mut s = format!("{title} (test points: {})\n", self.size);
        let _ = writeln!(s, "{:<20}{:>12}{:>14}", "Quantity", "0-0.1% RE", "0.0-1.0% RE");
        for d in OutputDim::ALL {
            let k = d.index();
            let _ = writeln!(
                s,
                "{:<20}{:>11.2}%{:>13.2}%",
                d.name(),
                100.0 * self.within_tight[k],
                100.0 * self.within_loose[k]
            );
        }
        s
    }
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `values` and
/// the uniform CDF on `[lb, ub]`.
pub fn ks_uniformity(values: &[f64], lb: f64, ub: f64) -> Result<f64> {
    if !(ub > lb) {
        return Err(Error::Contract(format!("degenerate bounds [{lb}, {ub}]")));
    }
    if values.is_empty() {
        return Err(Error::Contract("KS statistic of no values".into()));
    }
    if let Some(v) = values.iter().find(|&&v| !(lb <= v && v <= ub)) {
        return Err(Error::Contract(format!("{v} outside [{lb}, {ub}]")));
    }
    let mut u: Vec<f64> = values.iter().map(|v| (v - lb) / (ub - lb)).collect();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    Ok(u.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let above = (i + 1) as f64 / n - x;
        let below = x - i as f64 / n;
        d.max(above).max(below)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Where the high-error points sit and how a cut of the input space
/// changes their number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub threshold: f64,
    pub output: Option<OutputDim>,
    /// Inputs and errors of every record above the threshold.
    pub high_error: Vec<(FlightPoint, f64)>,
    pub count_before: usize,
    pub cut_dim: InputDim,
    pub retained: Interval,
    pub count_after: usize,
    /// All high-error points in bins of width `bin_width` from the threshold.
    pub histogram: Vec<HistogramBin>,
    /// Same bins, restricted to points surviving the cut.
    pub histogram_after_cut: Vec<HistogramBin>,
    pub bin_width: f64,
}

pub const BIN_WIDTH: f64 = 1e-3;

pub fn boundary_analysis(
    records: &[ErrorRecord],
    envelope: &Envelope,
    threshold: f64,
    output: Option<OutputDim>,
    cut_dim: InputDim,
    retained: Interval,
) -> Result<BoundaryReport> {
    if records.is_empty() {
        return Err(Error::Contract("boundary analysis of no records".into()));
    }
    let full = envelope.dim_bounds(cut_dim)?;
    let tol = 1e-9 * full.span().abs().max(1.0);
    if !(retained.lo <= retained.hi)
        || retained.lo < full.lo - tol
        || retained.hi > full.hi + tol
    {
        return Err(Error::Contract(format!(
            "retained {} interval [{}, {}] is not inside [{}, {}]",
            cut_dim.name(),
            retained.lo,
            retained.hi,
            full.lo,
            full.hi
        )));
    }

    let high_error: Vec<(FlightPoint, f64)> = records
        .iter()
        .map(|r| (r.input, r.error_for(output)))
        .filter(|&(_, e)| e > threshold)
        .collect();
    let surviving: Vec<f64> = high_error
        .iter()
        .filter(|(p, _)| retained.contains(p.get(cut_dim)))
        .map(|&(_, e)| e)
        .collect();
    let all: Vec<f64> = high_error.iter().map(|&(_, e)| e).collect();
    let n_bins = all
        .iter()
        .map(|&e| bin_of(e, threshold) + 1)
        .max()
        .unwrap_or(0);

    Ok(BoundaryReport {
        threshold,
        output,
        count_before: high_error.len(),
        count_after: surviving.len(),
        histogram: histogram(&all, threshold, n_bins),
        histogram_after_cut: histogram(&surviving, threshold, n_bins),
        high_error,
        cut_dim,
        retained,
        bin_width: BIN_WIDTH,
    })
}

/// Bin `k` covers `(threshold + k*w, threshold + (k+1)*w]`.
fn bin_of(e: f64, threshold: f64) -> usize {
    let k = ((e - threshold) / BIN_WIDTH).ceil() - 1.0;
    if k > 0.0 {
        k as usize
    } else {
        0
    }
}

fn histogram(errors: &[f64], threshold: f64, n_bins: usize) -> Vec<HistogramBin> {
    let mut bins: Vec<HistogramBin> = (0..n_bins)
        .map(|k| HistogramBin {
            lo: threshold + k as f64 * BIN_WIDTH,
            hi: threshold + (k + 1) as f64 * BIN_WIDTH,
            count: 0,
        })
        .collect();
    for &e in errors {
        bins[bin_of(e, threshold)].count += 1;
    }
    bins
}

impl BoundaryReport {
    /// Plot-ready scatter of high-error points.
    pub fn scatter_csv(&self) -> String {
        let mut s = String::from("alt,mach,nl,re\n");
        for (p, e) in &self.high_error {
            let _ = writeln!(s, "{},{},{},{}", p.alt, p.mach, p.nl, e);
        }
        s
    }

    pub fn histogram_csv(bins: &[HistogramBin]) -> String {
        let mut s = String::from("bin_lo,bin_hi,count\n");
        for b in bins {
            let _ = writeln!(s, "{},{},{}", b.lo, b.hi, b.count);
        }
        s
    }

    pub fn summary(&self) -> String {
        let target = self.output.map_or("max over outputs", |d| d.name());
        let mut s = String::new();
        let _ = writeln!(s, "threshold={}", self.threshold);
        let _ = writeln!(s, "error={target}");
        let _ = writeln!(s, "count_before={}", self.count_before);
        let _ = writeln!(
            s,
            "cut={} in [{}, {}]",
            self.cut_dim.name(),
            self.retained.lo,
            self.retained.hi
        );
        let _ = writeln!(s, "count_after={}", self.count_after);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(input: FlightPoint, re_fn: f64) -> ErrorRecord {
        let truth = EngineOutputs::new(9000.0, 2500.0, 6000.0, 3000.0);
        let pred = EngineOutputs::new(9000.0, 2500.0, 6000.0 * (1.0 + re_fn), 3000.0);
        ErrorRecord::new(input, truth, pred)
    }

    #[test]
    fn relative_error_basics() {
        let t = EngineOutputs::new(9000.0, 2500.0, 6000.0, 3000.0);
        assert_eq!(relative_error(&t, &t), [0.0; 4]);
        let up = EngineOutputs { fn_lbf: 6006.0, ..t };
        let down = EngineOutputs { fn_lbf: 5994.0, ..t };
        assert!((relative_error(&up, &t)[2] - 0.001).abs() < 1e-15);
        assert!((relative_error(&down, &t)[2] - 0.001).abs() < 1e-15);
    }

    #[test]
    fn absolute_fallback_near_zero() {
        let t = EngineOutputs::new(0.0, 1.0, 1.0, 1.0);
        let p = EngineOutputs::new(0.25, 1.0, 1.0, 1.0);
        let r = ErrorRecord::new(FlightPoint::new(0.0, 0.0, 0.0, 0.0), t, p);
        assert_eq!(r.re[0], 0.25);
        assert_eq!(r.absolute, [true, false, false, false]);
    }

    #[test]
    fn sfc_error_is_derived() {
        let t = EngineOutputs::new(9000.0, 2500.0, 6000.0, 3000.0);
        let p = EngineOutputs::new(9000.0, 2500.0, 6000.0, 3030.0);
        let r = ErrorRecord::new(FlightPoint::new(0.0, 0.0, 0.0, 5000.0), t, p);
        assert!((r.sfc_re - 0.01).abs() < 1e-12);
        let bad = EngineOutputs { fn_lbf: -1.0, ..p };
        assert!(ErrorRecord::new(r.input, t, bad).sfc_re.is_infinite());
    }

    #[test]
    fn buckets_are_inclusive() {
        let p = FlightPoint::new(0.0, 0.0, 0.0, 5000.0);
        let exact = ErrorRecord {
            re: [0.0, 0.0, TIGHT_RE, 0.0],
            ..rec(p, 0.0)
        };
        let report = bucket_report(&[exact, rec(p, 0.0), rec(p, 0.005), rec(p, 0.05)]).unwrap();
        assert_eq!(report.within_tight[2], 0.5);
        assert_eq!(report.within_loose[2], 0.75);
        assert_eq!(report.within_tight[0], 1.0);
        assert!(bucket_report(&[]).is_err());
    }

    #[test]
    fn table_layout() {
        let r = BucketReport {
            size: 1000,
            within_tight: [0.9885, 0.9978, 0.826, 0.9121],
            within_loose: [0.9988, 0.9999, 0.982, 0.9994],
        };
        let t = r.to_table("pre");
        assert!(t.contains("PerfInst_Fn               82.60%        98.20%"), "{t}");
        assert!(r.to_csv().contains("PerfInst_Fn,0.826,0.982,1000\n"));
    }

    #[test]
    fn ks_grid_midpoints() {
        let n = 1000;
        let v: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_uniformity(&v, 0.0, 1.0).unwrap();
        assert!(d <= 1.0 / 1000.0 + 1.0 / 2000.0);
    }

    #[test]
    fn ks_point_mass_at_lower_bound() {
        let d = ks_uniformity(&[0.0; 50], 0.0, 1.0).unwrap();
        assert_eq!(d, 1.0);
    }

    #[test]
    fn ks_contract() {
        assert!(ks_uniformity(&[0.5], 1.0, 1.0).is_err());
        assert!(ks_uniformity(&[], 0.0, 1.0).is_err());
        assert!(ks_uniformity(&[2.0], 0.0, 1.0).is_err());
    }

    #[test]
    fn boundary_without_high_errors() {
        let env = Envelope::default();
        let records = vec![rec(FlightPoint::new(0.0, 0.0, 0.2, 4000.0), 1e-4); 10];
        let b = boundary_analysis(
            &records,
            &env,
            TIGHT_RE,
            None,
            InputDim::Mach,
            Interval::new(0.0, 0.4),
        )
        .unwrap();
        assert_eq!((b.count_before, b.count_after), (0, 0));
        assert!(b.histogram.is_empty());
    }

    #[test]
    fn boundary_cut_and_histogram() {
        let env = Envelope::default();
        let records = vec![
            rec(FlightPoint::new(0.0, 0.0, 0.1, 4000.0), 0.0015),
            rec(FlightPoint::new(0.0, 0.0, 0.45, 4000.0), 0.0025),
            rec(FlightPoint::new(0.0, 0.0, 0.5, 4000.0), 0.0011),
            rec(FlightPoint::new(0.0, 0.0, 0.3, 4000.0), 0.0005),
        ];
        let b = boundary_analysis(
            &records,
            &env,
            TIGHT_RE,
            Some(OutputDim::Fn),
            InputDim::Mach,
            Interval::new(0.0, 0.4),
        )
        .unwrap();
        assert_eq!((b.count_before, b.count_after), (3, 1));
        let counts: Vec<usize> = b.histogram.iter().map(|h| h.count).collect();
        assert_eq!(counts, vec![2, 1]);
        assert_eq!(b.histogram_after_cut.iter().map(|h| h.count).sum::<usize>(), 1);
        assert!(b.scatter_csv().starts_with("alt,mach,nl,re\n0,0.1,4000,"));

        let identity = env.dim_bounds(InputDim::Mach).unwrap();
        let same = boundary_analysis(&records, &env, TIGHT_RE, None, InputDim::Mach, identity)
            .unwrap();
        assert_eq!(same.count_before, same.count_after);

        assert!(boundary_analysis(
            &records,
            &env,
            TIGHT_RE,
            None,
            InputDim::Mach,
            Interval::new(0.0, 0.9)
        )
        .is_err());
    }

    #[test]
    fn records_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("errors.csv");
        let records = vec![
            rec(FlightPoint::new(1.0, 2.0, 0.3, 4000.0), 0.0123),
            rec(FlightPoint::new(-5.0, 0.1, 0.01, 2500.0), 1e-7),
        ];
        write_records_csv(&path, &records).unwrap();
        assert_eq!(read_records_csv(&path).unwrap(), records);
    }
}

//! Paired input/output tables and the statistics derived from them.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envelope::FlightPoint;
use crate::error::{Error, Result};
use crate::simulator::{EngineOutputs, OutputDim};

pub const INPUT_COLUMNS: [&str; 4] = ["Amb.alt_in", "Amb.dTs_in", "Amb.MN_in", "WfmSet.NL"];
pub const OUTPUT_COLUMNS: [&str; 4] = ["ShH_N", "F049_Tt", "PerfInst_Fn", "PerfInst_WfuelPPH"];

const FORMAT_TAG: &str = "echoforge-dataset v1";

/// Where a dataset came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Dense,
    Downsampled,
    SplitTrain,
    SplitValidation,
    Test,
}

impl Provenance {
    pub fn tag(self) -> &'static str {
        match self {
            Provenance::Dense => "dense",
            Provenance::Downsampled => "downsampled",
            Provenance::SplitTrain => "split-train",
            Provenance::SplitValidation => "split-validation",
            Provenance::Test => "test",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [
            Provenance::Dense,
            Provenance::Downsampled,
            Provenance::SplitTrain,
            Provenance::SplitValidation,
            Provenance::Test,
        ]
        .into_iter()
        .find(|p| p.tag() == s)
        .ok_or_else(|| format!("unknown provenance `{s}`"))
    }
}

/// Row-aligned flight points and engine outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<FlightPoint>,
    outputs: Vec<EngineOutputs>,
    pub provenance: Provenance,
    /// Seed of the stage that produced the rows.
    pub seed: u64,
}

impl Dataset {
    pub fn new(
        inputs: Vec<FlightPoint>,
        outputs: Vec<EngineOutputs>,
        provenance: Provenance,
        seed: u64,
    ) -> Result<Self> {
        if inputs.len() != outputs.len() {
            return Err(Error::Contract(format!(
                "{} input rows but {} output rows",
                inputs.len(),
                outputs.len()
            )));
        }
        Ok(Self {
            inputs,
            outputs,
            provenance,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[FlightPoint] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[EngineOutputs] {
        &self.outputs
    }

    pub fn rows(&self) -> impl Iterator<Item = (&FlightPoint, &EngineOutputs)> {
        self.inputs.iter().zip(&self.outputs)
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize], provenance: Provenance, seed: u64) -> Self {
        Self {
            inputs: indices.iter().map(|&i| self.inputs[i]).collect(),
            outputs: indices.iter().map(|&i| self.outputs[i]).collect(),
            provenance,
            seed,
        }
    }

    /// Concatenation of two datasets; provenance and seed from `self`.
    pub fn concat(&self, other: &Dataset) -> Self {
        let mut out = self.clone();
        out.inputs.extend_from_slice(&other.inputs);
        out.outputs.extend_from_slice(&other.outputs);
        out
    }

    /// Seeded random subset of `n` rows, kept in original row order.
    pub fn subsample(&self, n: usize, seed: u64) -> Result<Self> {
        if n > self.len() {
            return Err(Error::Contract(format!(
                "cannot subsample {n} rows from {}",
                self.len()
            )));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        idx.truncate(n);
        idx.sort_unstable();
        Ok(self.select(&idx, self.provenance, seed))
    }

    /// Exact columnwise output extrema.
    pub fn output_extrema(&self) -> Result<OutputBounds> {
        let first = self
            .outputs
            .first()
            .ok_or_else(|| Error::Contract("output extrema of an empty dataset".into()))?
            .to_array();
        let (mut lb, mut ub) = (first, first);
        for x in &self.outputs {
            for (k, v) in x.to_array().into_iter().enumerate() {
                lb[k] = lb[k].min(v);
                ub[k] = ub[k].max(v);
            }
        }
        Ok(OutputBounds { lb, ub })
    }

    /// Seeded shuffle, then the first `round(ratio * N)` rows (half rounds
    /// up) become the training set.
    pub fn split(&self, ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::Contract(format!(
                "split ratio must lie in (0, 1), got {ratio}"
            )));
        }
        if self.is_empty() {
            return Err(Error::Contract("cannot split an empty dataset".into()));
        }
        let (train_idx, val_idx) = split_indices(self.len(), ratio, seed);
        Ok((
            self.select(&train_idx, Provenance::SplitTrain, seed),
            self.select(&val_idx, Provenance::SplitValidation, seed),
        ))
    }

    /// Per-column mean and population standard deviation.
    pub fn normalization_stats(&self) -> Result<NormStats> {
        if self.len() < 2 {
            return Err(Error::Contract(format!(
                "normalization needs at least 2 rows, got {}",
                self.len()
            )));
        }
        let (input_mean, input_std) =
            column_stats(self.inputs.iter().map(|p| p.to_array()), &INPUT_COLUMNS)?;
        let (output_mean, output_std) =
            column_stats(self.outputs.iter().map(|x| x.to_array()), &OUTPUT_COLUMNS)?;
        Ok(NormStats {
            input_mean,
            input_std,
            output_mean,
            output_std,
        })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write_metadata(&mut w, self.provenance, self.seed)?;
        writeln!(w, "{},{}", INPUT_COLUMNS.join(","), OUTPUT_COLUMNS.join(","))?;
        for (p, x) in self.rows() {
            let values: Vec<String> = p
                .to_array()
                .into_iter()
                .chain(x.to_array())
                .map(|v| v.to_string())
                .collect();
            writeln!(w, "{}", values.join(","))?;
        }
        w.flush()
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file))
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let all: [&str; 8] = std::array::from_fn(|k| {
            if k < 4 {
                INPUT_COLUMNS[k]
            } else {
                OUTPUT_COLUMNS[k - 4]
            }
        });
        let (provenance, seed, rows) = read_table(reader, &all)?;
        let (inputs, outputs) = rows
            .into_iter()
            .map(|r| {
                (
                    FlightPoint::from_array([r[0], r[1], r[2], r[3]]),
                    EngineOutputs::from_array([r[4], r[5], r[6], r[7]]),
                )
            })
            .unzip();
        Self::new(inputs, outputs, provenance, seed)
    }
}

/// Shuffled train/validation index partition.
pub fn split_indices(n: usize, ratio: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let n_train = ((ratio * n as f64) + 0.5).floor() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let val = idx.split_off(n_train.min(n));
    (idx, val)
}

fn column_stats(
    rows: impl Iterator<Item = [f64; 4]> + Clone,
    names: &[&'static str; 4],
) -> Result<([f64; 4], [f64; 4])> {
    let mut n = 0usize;
    let mut sum = [0.0; 4];
    for r in rows.clone() {
        n += 1;
        for k in 0..4 {
            sum[k] += r[k];
        }
    }
    let mean = sum.map(|s| s / n as f64);
    let mut sq = [0.0; 4];
    for r in rows {
        for k in 0..4 {
            sq[k] += (r[k] - mean[k]).powi(2);
        }
    }
    let std = sq.map(|s| (s / n as f64).sqrt());
    for k in 0..4 {
        // Relative floor: a constant column still shows rounding-level spread.
        if !(std[k] > 1e-12 * mean[k].abs().max(1.0)) {
            return Err(Error::DegenerateStats { column: names[k] });
        }
    }
    Ok((mean, std))
}

/// Columnwise output extrema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputBounds {
    pub lb: [f64; 4],
    pub ub: [f64; 4],
}

impl OutputBounds {
    pub fn contains(&self, x: &EngineOutputs) -> bool {
        x.to_array()
            .into_iter()
            .enumerate()
            .all(|(k, v)| self.lb[k] <= v && v <= self.ub[k])
    }

    pub fn get(&self, dim: OutputDim) -> (f64, f64) {
        (self.lb[dim.index()], self.ub[dim.index()])
    }
}

/// Z-score statistics for the four inputs and four outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub input_mean: [f64; 4],
    pub input_std: [f64; 4],
    pub output_mean: [f64; 4],
    pub output_std: [f64; 4],
}

impl NormStats {
    pub fn normalize_input(&self, p: &FlightPoint) -> [f64; 4] {
        let a = p.to_array();
        std::array::from_fn(|k| (a[k] - self.input_mean[k]) / self.input_std[k])
    }

    pub fn normalize_output(&self, x: &EngineOutputs) -> [f64; 4] {
        let a = x.to_array();
        std::array::from_fn(|k| (a[k] - self.output_mean[k]) / self.output_std[k])
    }

    pub fn denormalize_output(&self, z: [f64; 4]) -> EngineOutputs {
        EngineOutputs::from_array(std::array::from_fn(|k| {
            z[k] * self.output_std[k] + self.output_mean[k]
        }))
    }
}

/// Writes the four input columns only, for sampled-but-unsimulated points.
pub fn write_points_csv(
    path: impl AsRef<Path>,
    points: &[FlightPoint],
    provenance: Provenance,
    seed: u64,
) -> Result<()> {
    let path = path.as_ref();
    let write = || -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        write_metadata(&mut w, provenance, seed)?;
        writeln!(w, "{}", INPUT_COLUMNS.join(","))?;
        for p in points {
            let values: Vec<String> = p.to_array().iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", values.join(","))?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

pub fn read_points_csv(path: impl AsRef<Path>) -> Result<(Vec<FlightPoint>, Provenance, u64)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let (provenance, seed, rows) = read_table(BufReader::new(file), &INPUT_COLUMNS)?;
    let points = rows
        .into_iter()
        .map(|r| FlightPoint::from_array([r[0], r[1], r[2], r[3]]))
        .collect();
    Ok((points, provenance, seed))
}

fn write_metadata<W: Write>(w: &mut W, provenance: Provenance, seed: u64) -> std::io::Result<()> {
    writeln!(w, "# {FORMAT_TAG}; provenance={provenance}; seed={seed}")
}

fn parse_metadata(line: &str) -> Result<(Provenance, u64)> {
    let bad = |message: String| Error::Parse {
        row: 0,
        column: "metadata".into(),
        message,
    };
    let body = line
        .trim_end()
        .strip_prefix('#')
        .ok_or_else(|| bad("missing `#` metadata line".into()))?;
    let mut fields = body.split(';').map(str::trim);
    if fields.next() != Some(FORMAT_TAG) {
        return Err(bad(format!("expected `{FORMAT_TAG}`")));
    }
    let (mut provenance, mut seed) = (None, None);
    for field in fields {
        match field.split_once('=') {
            Some(("provenance", v)) => provenance = Some(v.parse().map_err(bad)?),
            Some(("seed", v)) => {
                seed = Some(v.parse().map_err(|_| bad(format!("bad seed `{v}`")))?)
            }
            _ => return Err(bad(format!("unrecognized field `{field}`"))),
        }
    }
    Ok((
        provenance.ok_or_else(|| bad("missing provenance".into()))?,
        seed.ok_or_else(|| bad("missing seed".into()))?,
    ))
}

/// Parses the metadata line, then a header-keyed table. Returned rows
/// follow the order of `columns`, whatever the column order in the file.
fn read_table<R: BufRead, const D: usize>(
    mut reader: R,
    columns: &[&str; D],
) -> Result<(Provenance, u64, Vec<[f64; D]>)> {
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| Error::Parse {
        row: 0,
        column: "metadata".into(),
        message: e.to_string(),
    })?;
    let (provenance, seed) = parse_metadata(&first)?;

    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = csv.headers().map_err(|e| Error::Parse {
        row: 0,
        column: "header".into(),
        message: e.to_string(),
    })?;
    if header.len() != D {
        return Err(Error::Parse {
            row: 0,
            column: "header".into(),
            message: format!("expected {D} columns, found {}", header.len()),
        });
    }
    let mut position = [0usize; D];
    for (slot, name) in position.iter_mut().zip(columns) {
        *slot = header
            .iter()
            .position(|h| h.trim() == *name)
            .ok_or_else(|| Error::Parse {
                row: 0,
                column: (*name).to_string(),
                message: "column missing from header".into(),
            })?;
    }

    let mut rows = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: "*".into(),
            message: e.to_string(),
        })?;
        let mut values = [0.0; D];
        for (k, &pos) in position.iter().enumerate() {
            let cell = record[pos].trim();
            values[k] = cell.parse().map_err(|_| Error::Parse {
                row,
                column: columns[k].to_string(),
                message: format!("`{cell}` is not a number"),
            })?;
        }
        rows.push(values);
    }
    Ok((provenance, seed, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(rows: &[([f64; 4], [f64; 4])]) -> Dataset {
        let (i, o) = rows
            .iter()
            .map(|(p, x)| (FlightPoint::from_array(*p), EngineOutputs::from_array(*x)))
            .unzip();
        Dataset::new(i, o, Provenance::Dense, 0).unwrap()
    }

    fn sample(n: usize) -> Dataset {
        ds(&(0..n)
            .map(|i| {
                let f = i as f64;
                ([f, -f, 0.1 * f, 2000.0 + f], [9000.0 - f, 2500.0 + f, 6000.0 * f.sin(), f * f])
            })
            .collect::<Vec<_>>())
    }

    #[test]
    fn extrema_of_single_row() {
        let d = ds(&[([0.0; 4], [9000.0, 2500.0, 6000.0, 3000.0])]);
        let b = d.output_extrema().unwrap();
        assert_eq!(b.lb, b.ub);
        assert_eq!(b.lb, [9000.0, 2500.0, 6000.0, 3000.0]);
    }

    #[test]
    fn extrema_of_two_simulated_rows() {
        let d = ds(&[
            ([0.0; 4], [9000.0, 2500.0, 6000.0, 3000.0]),
            ([0.0; 4], [8148.6, 1969.0, 3242.4, 2045.7]),
        ]);
        let b = d.output_extrema().unwrap();
        assert_eq!(b.get(OutputDim::Fn), (3242.4, 6000.0));
    }

    #[test]
    fn extrema_of_empty_is_an_error() {
        assert!(ds(&[]).output_extrema().is_err());
    }

    #[test]
    fn split_sizes_and_coverage() {
        let d = sample(10);
        let (tr, va) = d.split(0.8, 3).unwrap();
        assert_eq!((tr.len(), va.len()), (8, 2));
        let mut all: Vec<f64> = tr.inputs().iter().chain(va.inputs()).map(|p| p.alt).collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..10).map(|i| i as f64).collect::<Vec<_>>());
        assert_eq!(d.split(0.8, 3).unwrap(), (tr, va));
    }

    #[test]
    fn split_rounding() {
        assert_eq!(split_indices(100_000, 0.9, 1).0.len(), 90_000);
        assert_eq!(split_indices(5, 0.5, 1).0.len(), 3);
        assert_eq!(split_indices(3, 0.5, 1).0.len(), 2);
    }

    #[test]
    fn split_rejects_bad_ratio() {
        let d = sample(10);
        for r in [0.0, 1.0, 1.2, -0.1, f64::NAN] {
            assert!(matches!(d.split(r, 0), Err(Error::Contract(_))));
        }
    }

    #[test]
    fn stats_of_two_point_column() {
        let d = ds(&[
            ([0.0, 1.0, 2.0, 3.0], [0.0, 5.0, 1.0, 1.0]),
            ([2.0, 3.0, 4.0, 5.0], [2.0, 7.0, 3.0, 5.0]),
        ]);
        let s = d.normalization_stats().unwrap();
        assert_eq!(s.input_mean[0], 1.0);
        assert_eq!(s.input_std[0], 1.0);
        assert_eq!(s.output_std[3], 2.0);
    }

    #[test]
    fn stats_reject_constant_columns() {
        let row = ([1.0, 2.0, 3.0, 4.0], [5.0, 6.0, 7.0, 8.0]);
        assert!(matches!(
            ds(&[row, row]).normalization_stats(),
            Err(Error::DegenerateStats { column: "Amb.alt_in" })
        ));
        assert!(ds(&[row]).normalization_stats().is_err());
    }

    #[test]
    fn stats_duplication_invariant() {
        let d = sample(37);
        let a = d.normalization_stats().unwrap();
        let b = d.concat(&d).normalization_stats().unwrap();
        for k in 0..4 {
            assert!((a.input_mean[k] - b.input_mean[k]).abs() <= 1e-12 * a.input_mean[k].abs().max(1.0));
            assert!((a.output_std[k] - b.output_std[k]).abs() <= 1e-12 * a.output_std[k]);
        }
    }

    #[test]
    fn header_only_file() {
        let text = format!(
            "# echoforge-dataset v1; provenance=test; seed=42\n{},{}\n",
            INPUT_COLUMNS.join(","),
            OUTPUT_COLUMNS.join(",")
        );
        let d = Dataset::read_from(text.as_bytes()).unwrap();
        assert!(d.is_empty());
        assert_eq!((d.provenance, d.seed), (Provenance::Test, 42));
    }

    #[test]
    fn columns_matched_by_name() {
        let text = "# echoforge-dataset v1; provenance=dense; seed=1\n\
            PerfInst_Fn,Amb.alt_in,ShH_N,Amb.MN_in,F049_Tt,WfmSet.NL,PerfInst_WfuelPPH,Amb.dTs_in\n\
            6000,0,9000,0,2500,5000,3000,-1.5\n";
        let d = Dataset::read_from(text.as_bytes()).unwrap();
        assert_eq!(d.inputs()[0], FlightPoint::new(0.0, -1.5, 0.0, 5000.0));
        assert_eq!(d.outputs()[0], EngineOutputs::new(9000.0, 2500.0, 6000.0, 3000.0));
    }

    #[test]
    fn parse_errors_name_row_and_column() {
        let head = format!(
            "# echoforge-dataset v1; provenance=dense; seed=1\n{},{}\n",
            INPUT_COLUMNS.join(","),
            OUTPUT_COLUMNS.join(",")
        );
        let text = format!("{head}1,2,3,4,5,6,7,8\n1,2,x,4,5,6,7,8\n");
        match Dataset::read_from(text.as_bytes()) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "Amb.MN_in");
            }
            other => panic!("{other:?}"),
        }

        let text = format!("{head}1,2,3,4,5,6,7\n");
        assert!(matches!(
            Dataset::read_from(text.as_bytes()),
            Err(Error::Parse { row: 1, .. })
        ));

        let text = "# echoforge-dataset v1; provenance=dense; seed=1\n\
            Amb.alt_in,Amb.dTs_in,Amb.MN_in,WfmSet.NL,ShH_N,F049_Tt,PerfInst_Fn,Bogus\n";
        match Dataset::read_from(text.as_bytes()) {
            Err(Error::Parse { column, .. }) => assert_eq!(column, "PerfInst_WfuelPPH"),
            other => panic!("{other:?}"),
        }

        assert!(Dataset::read_from("no metadata\n".as_bytes()).is_err());
    }

    #[test]
    fn written_layout() {
        let d = ds(&[([0.0, -35.0, 0.5, 5000.0], [9000.0, 2500.0, 6000.0, 0.1])]);
        let mut buf = Vec::new();
        d.write_to(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "# echoforge-dataset v1; provenance=dense; seed=0\n\
             Amb.alt_in,Amb.dTs_in,Amb.MN_in,WfmSet.NL,ShH_N,F049_Tt,PerfInst_Fn,PerfInst_WfuelPPH\n\
             0,-35,0.5,5000,9000,2500,6000,0.1\n"
        );
    }

    #[test]
    fn points_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let pts = vec![FlightPoint::new(1.0 / 3.0, -2.0, 0.1, 4321.5)];
        write_points_csv(&path, &pts, Provenance::Dense, 9).unwrap();
        assert_eq!(read_points_csv(&path).unwrap(), (pts, Provenance::Dense, 9));
    }
}

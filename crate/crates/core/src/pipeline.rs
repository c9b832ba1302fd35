//! Stage-by-stage orchestration with every artifact written to one directory.
//!
//! Each stage reads its inputs from the artifact directory and writes its
//! outputs there, so running the stages one at a time produces the same
//! files as [`Pipeline::run`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::active_learning::{downsample, DownsampleReport};
use crate::config::{PipelineConfig, PreAlMode};
use crate::dataset::{read_points_csv, write_points_csv, Dataset, Provenance};
use crate::envelope::Interval;
use crate::error::{Error, Result};
use crate::metrics::{
    boundary_analysis, bucket_report, evaluate, read_records_csv, write_records_csv,
    BoundaryReport, BucketReport,
};
use crate::simulator::{OutputDim, TurbofanModel};
use crate::surrogate::{sweep, SurrogateModel};

pub mod files {
    pub const DENSE_INPUTS: &str = "dense_inputs.csv";
    pub const TEST_INPUTS: &str = "test_inputs.csv";
    pub const DENSE: &str = "dense.csv";
    pub const TEST: &str = "test.csv";
    pub const DOWNSAMPLED: &str = "downsampled.csv";
    pub const DOWNSAMPLE_REPORT: &str = "downsample_report.txt";
    pub const BASELINE: &str = "baseline.csv";
    pub const MODEL_PRE: &str = "model_pre.json";
    pub const MODEL_POST: &str = "model_post.json";
    pub const LEADERBOARD_PRE: &str = "leaderboard_pre.csv";
    pub const LEADERBOARD_POST: &str = "leaderboard_post.csv";
    pub const ERRORS_PRE: &str = "errors_pre.csv";
    pub const ERRORS_POST: &str = "errors_post.csv";
    pub const BUCKETS_PRE: &str = "buckets_pre.csv";
    pub const BUCKETS_POST: &str = "buckets_post.csv";
    pub const BUCKETS_TABLE: &str = "buckets.txt";
    pub const BOUNDARY: &str = "boundary.txt";
    pub const BOUNDARY_SCATTER: &str = "boundary_scatter.csv";
    pub const BOUNDARY_HISTOGRAM: &str = "boundary_histogram.csv";
    pub const BOUNDARY_HISTOGRAM_CUT: &str = "boundary_histogram_cut.csv";
    pub const COMPARISON: &str = "comparison.csv";
    pub const SUMMARY: &str = "summary.txt";
    pub const CONFIG: &str = "config.toml";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Stage {
    Config,
    Sample,
    Simulate,
    Downsample,
    Train,
    Evaluate,
    Report,
}

impl Stage {
    pub const PIPELINE: [Stage; 6] = [
        Stage::Sample,
        Stage::Simulate,
        Stage::Downsample,
        Stage::Train,
        Stage::Evaluate,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Sample => "sample",
            Stage::Simulate => "simulate",
            Stage::Downsample => "downsample",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
        }
    }

    /// Process exit status when this stage fails.
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 2,
            Stage::Sample => 3,
            Stage::Simulate => 4,
            Stage::Downsample => 5,
            Stage::Train => 6,
            Stage::Evaluate => 7,
            Stage::Report => 8,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("stage `{}` failed: {source}", stage.name())]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

/// Results of the report stage.
#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub downsample: DownsampleReport,
    pub pre: BucketReport,
    pub post: BucketReport,
    pub boundary: BoundaryReport,
}

pub struct Pipeline {
    config: PipelineConfig,
    out: PathBuf,
    pool: rayon::ThreadPool,
}

impl Pipeline {
    /// `threads == 0` lets rayon pick. Creates the output directory.
    pub fn new(config: PipelineConfig, out: impl Into<PathBuf>, threads: usize) -> Result<Self> {
        config.validate()?;
        let out = out.into();
        fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        if fs::metadata(&out)
            .map_err(|e| Error::io(&out, e))?
            .permissions()
            .readonly()
        {
            return Err(Error::Config(format!("{} is not writable", out.display())));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        Ok(Self { config, out, pool })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, contents).map_err(|e| Error::io(path, e))
    }

    /// Runs all stages in order, stopping at the first failure.
    pub fn run(&self) -> std::result::Result<PipelineReport, StageError> {
        for stage in &Stage::PIPELINE[..5] {
            self.run_stage(*stage)?;
        }
        self.pool
            .install(|| self.report())
            .map_err(|source| StageError {
                stage: Stage::Report,
                source,
            })
    }

    pub fn run_stage(&self, stage: Stage) -> std::result::Result<(), StageError> {
        let result = self.pool.install(|| match stage {
            Stage::Config => self.write(files::CONFIG, self.config.to_toml()),
            Stage::Sample => self.sample(),
            Stage::Simulate => self.simulate(),
            Stage::Downsample => self.downsample().map(|_| ()),
            Stage::Train => self.train(),
            Stage::Evaluate => self.evaluate(),
            Stage::Report => self.report().map(|_| ()),
        });
        result.map_err(|source| StageError { stage, source })
    }

    /// Dense and test flight points (Latin hypercube, separate seeds).
    pub fn sample(&self) -> Result<()> {
        let c = &self.config;
        self.write(files::CONFIG, c.to_toml())?;
        let dense = c.envelope.sample_lhs(c.sampling.dense_size, c.sampling.seed)?;
        write_points_csv(
            self.path(files::DENSE_INPUTS),
            &dense,
            Provenance::Dense,
            c.sampling.seed,
        )?;
        let test = c
            .envelope
            .sample_lhs(c.sampling.test_size, c.sampling.test_seed)?;
        write_points_csv(
            self.path(files::TEST_INPUTS),
            &test,
            Provenance::Test,
            c.sampling.test_seed,
        )
    }

    pub fn simulate(&self) -> Result<()> {
        let model = TurbofanModel::new(self.config.envelope.clone())?;
        for (input, output) in [
            (files::DENSE_INPUTS, files::DENSE),
            (files::TEST_INPUTS, files::TEST),
        ] {
            let (points, provenance, seed) = read_points_csv(self.path(input))?;
            let outputs = model.simulate_batch(&points)?;
            Dataset::new(points, outputs, provenance, seed)?.write_csv(self.path(output))?;
        }
        Ok(())
    }

    /// Downsampled set, its report, and the baseline training set.
    pub fn downsample(&self) -> Result<DownsampleReport> {
        let c = &self.config;
        let dense = Dataset::read_csv(self.path(files::DENSE))?;
        let (down, report) = downsample(&dense, c.downsample.candidates, c.downsample.seed)?;
        down.write_csv(self.path(files::DOWNSAMPLED))?;
        report.write(self.path(files::DOWNSAMPLE_REPORT))?;
        let baseline = match c.pre_al_mode {
            PreAlMode::Full => dense,
            PreAlMode::Matched => dense.subsample(down.len(), c.downsample.baseline_seed)?,
        };
        baseline.write_csv(self.path(files::BASELINE))?;
        Ok(report)
    }

    /// Sweeps the grid on the baseline and downsampled sets.
    pub fn train(&self) -> Result<()> {
        let c = &self.config;
        let grid = c.training.grid();
        for (data, model, board) in [
            (files::BASELINE, files::MODEL_PRE, files::LEADERBOARD_PRE),
            (files::DOWNSAMPLED, files::MODEL_POST, files::LEADERBOARD_POST),
        ] {
            let d = Dataset::read_csv(self.path(data))?;
            let (train, validation) = d.split(c.split.ratio, c.split.seed)?;
            let outcome = sweep(&train, &validation, &grid)?;
            outcome.best.write_json(self.path(model))?;
            self.write(board, outcome.leaderboard_csv())?;
        }
        Ok(())
    }

    pub fn evaluate(&self) -> Result<()> {
        let test = Dataset::read_csv(self.path(files::TEST))?;
        for (model, errors) in [
            (files::MODEL_PRE, files::ERRORS_PRE),
            (files::MODEL_POST, files::ERRORS_POST),
        ] {
            let m = SurrogateModel::read_json(self.path(model))?;
            write_records_csv(self.path(errors), &evaluate(&m, &test))?;
        }
        Ok(())
    }

    pub fn report(&self) -> Result<PipelineReport> {
        let c = &self.config;
        let pre_records = read_records_csv(self.path(files::ERRORS_PRE))?;
        let post_records = read_records_csv(self.path(files::ERRORS_POST))?;
        let pre = bucket_report(&pre_records)?;
        let post = bucket_report(&post_records)?;
        self.write(files::BUCKETS_PRE, pre.to_csv())?;
        self.write(files::BUCKETS_POST, post.to_csv())?;
        let tables = format!(
            "{}\n{}",
            pre.to_table("Surrogate accuracy before downsampling"),
            post.to_table("Surrogate accuracy after downsampling")
        );
        self.write(files::BUCKETS_TABLE, &tables)?;

        let span = c.envelope.dim_bounds(c.boundary.cut_dim)?;
        let retained = Interval::new(span.lo, span.lo + c.boundary.retained_fraction * span.span());
        let boundary = boundary_analysis(
            &post_records,
            &c.envelope,
            c.boundary.threshold,
            c.boundary.output_dim()?,
            c.boundary.cut_dim,
            retained,
        )?;
        self.write(files::BOUNDARY, boundary.summary())?;
        self.write(files::BOUNDARY_SCATTER, boundary.scatter_csv())?;
        self.write(
            files::BOUNDARY_HISTOGRAM,
            BoundaryReport::histogram_csv(&boundary.histogram),
        )?;
        self.write(
            files::BOUNDARY_HISTOGRAM_CUT,
            BoundaryReport::histogram_csv(&boundary.histogram_after_cut),
        )?;

        let downsample = read_downsample_report(&self.path(files::DOWNSAMPLE_REPORT))?;
        self.write(files::COMPARISON, comparison_csv(&pre, &post))?;
        self.write(
            files::SUMMARY,
            summary_text(c.target_re, &downsample, &pre, &post, &boundary),
        )?;
        Ok(PipelineReport {
            downsample,
            pre,
            post,
            boundary,
        })
    }
}

fn comparison_csv(pre: &BucketReport, post: &BucketReport) -> String {
    let mut s = String::from("quantity,pre_0.1pct,post_0.1pct,pre_1pct,post_1pct\n");
    for d in OutputDim::ALL {
        let k = d.index();
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            d.name(),
            pre.within_tight[k],
            post.within_tight[k],
            pre.within_loose[k],
            post.within_loose[k]
        );
    }
    s
}

fn summary_text(
    target_re: f64,
    ds: &DownsampleReport,
    pre: &BucketReport,
    post: &BucketReport,
    boundary: &BoundaryReport,
) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "downsampling: {} candidates -> {} unique rows",
        ds.candidates, ds.unique
    );
    let _ = writeln!(s, "most skewed output before downsampling: {}", ds.most_skewed().name());
    let _ = writeln!(s, "{:<20}{:>10}{:>10}{:>12}{:>12}", "output", "ks_pre", "ks_post", "pre_0.1%", "post_0.1%");
    for d in OutputDim::ALL {
        let k = d.index();
        let _ = writeln!(
            s,
            "{:<20}{:>10.4}{:>10.4}{:>11.2}%{:>11.2}%",
            d.name(),
            ds.ks_pre[k],
            ds.ks_post[k],
            100.0 * pre.within_tight[k],
            100.0 * post.within_tight[k]
        );
    }
    let all_within = |b: &BucketReport| b.within_tight.iter().copied().fold(1.0, f64::min);
    let _ = writeln!(
        s,
        "target relative error {target_re}: worst-output fraction within 0.1% is {:.2}% before, {:.2}% after",
        100.0 * all_within(pre),
        100.0 * all_within(post)
    );
    let _ = writeln!(
        s,
        "high-error points (post): {} before cut, {} after cut",
        boundary.count_before, boundary.count_after
    );
    s
}

/// Parses the `key=value` file written by the downsample stage.
pub fn read_downsample_report(path: &Path) -> Result<DownsampleReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut report = DownsampleReport {
        candidates: 0,
        matched: 0,
        unique: 0,
        ks_pre: [0.0; 4],
        ks_post: [0.0; 4],
        output_scaling: String::new(),
    };
    for (line_no, line) in text.lines().enumerate() {
        let bad = |m: &str| Error::Parse {
            row: line_no + 1,
            column: line.to_string(),
            message: m.to_string(),
        };
        let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key=value"))?;
        let number = || value.parse::<f64>().map_err(|_| bad("not a number"));
        let count = || value.parse::<usize>().map_err(|_| bad("not a count"));
        match key {
            "candidates" => report.candidates = count()?,
            "matched" => report.matched = count()?,
            "unique" => report.unique = count()?,
            "output_scaling" => report.output_scaling = value.to_string(),
            _ => {
                let (slot, name) = if let Some(n) = key.strip_prefix("ks_pre_") {
                    (&mut report.ks_pre, n)
                } else if let Some(n) = key.strip_prefix("ks_post_") {
                    (&mut report.ks_post, n)
                } else {
                    return Err(bad("unknown key"));
                };
                let dim: OutputDim = name.parse().map_err(|_| bad("unknown output"))?;
                slot[dim.index()] = number()?;
            }
        }
    }
    Ok(report)
}

//! Configuration-driven experiments: outer cross-validation over every
//! dataset × transform × base learner × correction cell, followed by
//! aggregation, the statistical comparison and report files.

mod report;

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::BaseSpec;
use crate::datamodel::{
    apply_standardization, binarize_nominal, fit_standardization, fold_indices, load_dataset, synth_generate, complement, DataFormat,
    MultiLabelDataset, SynthSpec,
};
use crate::metrics::{evaluate_all, MetricReport};
use crate::multilabel::{default_beta_grid, train_ml, BetaSelection, CorrectionKind, MultiLabelClassifier, TrainOptions, TransformKind};
use crate::{seed, Error, Result};

pub use report::{aggregate, emit_reports, parse_runs_csv, runs_csv, ComparisonGroup, ReportFiles};

/// Where a dataset comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSource {
    File {
        path: PathBuf,
        format: DataFormat,
        #[serde(default)]
        name: Option<String>,
    },
    Synth {
        name: String,
        synth: SynthSpec,
        #[serde(default)]
        seed: u64,
    },
}

/// A base learner with an optional display name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseEntry {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(flatten)]
    pub spec: BaseSpec,
}

impl BaseEntry {
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.spec.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSource>,
    pub base_classifiers: Vec<BaseEntry>,
    #[serde(default = "all_corrections")]
    pub corrections: Vec<CorrectionKind>,
    #[serde(default = "all_transforms")]
    pub transforms: Vec<TransformKind>,
    #[serde(default = "ten")]
    pub outer_folds: usize,
    #[serde(default = "three")]
    pub scut_folds: usize,
    #[serde(default = "default_beta_grid")]
    pub beta_grid: Vec<f64>,
    #[serde(default = "three")]
    pub beta_folds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Worker threads; `None` uses every core.
    #[serde(default)]
    pub jobs: Option<usize>,
}

fn all_corrections() -> Vec<CorrectionKind> {
    vec![CorrectionKind::None, CorrectionKind::Bmc, CorrectionKind::Scm]
}

fn all_transforms() -> Vec<TransformKind> {
    vec![TransformKind::Br, TransformKind::Lpw]
}

fn ten() -> usize {
    10
}

fn three() -> usize {
    3
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file. Relative dataset paths resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for d in &mut cfg.datasets {
            if let DatasetSource::File { path, .. } = d {
                if path.is_relative() {
                    *path = dir.join(&*path);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.datasets.is_empty() {
            return bad("no datasets");
        }
        if self.base_classifiers.is_empty() || self.corrections.is_empty() || self.transforms.is_empty() {
            return bad("base_classifiers, corrections and transforms must be nonempty");
        }
        if self.outer_folds < 2 {
            return bad("outer_folds must be at least 2");
        }
        if self.beta_grid.is_empty() || self.beta_grid.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return bad("beta_grid values must be finite and positive");
        }
        let labels: Vec<String> = self.base_classifiers.iter().map(BaseEntry::label).collect();
        if labels.iter().collect::<HashSet<_>>().len() != labels.len() {
            return bad("base classifier names must be unique (set \"name\" to disambiguate)");
        }
        if self.corrections.iter().collect::<HashSet<_>>().len() != self.corrections.len()
            || self.transforms.iter().collect::<HashSet<_>>().len() != self.transforms.len()
        {
            return bad("corrections and transforms must not repeat");
        }
        for name in labels.iter().chain(self.datasets.iter().filter_map(|d| match d {
            DatasetSource::Synth { name, .. } | DatasetSource::File { name: Some(name), .. } => Some(name),
            _ => None,
        })) {
            if name.contains([',', '"', '\n']) {
                return bad(&format!("name {name:?} must not contain commas, quotes or newlines"));
            }
        }
        Ok(())
    }
}

/// One (dataset, transform, base, correction, fold) evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub transform: TransformKind,
    pub base: String,
    pub correction: CorrectionKind,
    pub fold: usize,
    pub metrics: MetricReport,
    /// Mean, minimum and maximum chosen β over corrected members.
    pub beta: Option<[f64; 3]>,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub dataset: String,
    pub transform: TransformKind,
    pub base: String,
    pub correction: CorrectionKind,
    pub fold: usize,
    pub error: String,
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentOutcome {
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
}

/// Loads (or generates) a dataset and one-hot encodes nominal features.
pub fn load_source(src: &DatasetSource) -> Result<MultiLabelDataset> {
    let mut ds = match src {
        DatasetSource::File { path, format, name } => {
            let mut ds = load_dataset(path, *format)?;
            if let Some(n) = name {
                ds.name = n.clone();
            }
            ds
        }
        DatasetSource::Synth { name, synth, seed } => {
            let (mut ds, _) = synth_generate(synth, *seed)?;
            ds.name = name.clone();
            ds
        }
    };
    if ds.name.contains([',', '"', '\n']) {
        ds.name = ds.name.replace([',', '"', '\n'], "_");
    }
    Ok(binarize_nominal(&ds))
}

pub struct CellOutcome {
    pub report: MetricReport,
    pub classifier: MultiLabelClassifier,
    pub predictions: Vec<Vec<bool>>,
}

/// Standardizes on the training rows, trains, and scores the test rows.
/// Nothing computed from `test` reaches training.
pub fn run_cell(ds: &MultiLabelDataset, train: &[usize], test: &[usize], opts: &TrainOptions, seed: u64) -> Result<CellOutcome> {
    let train_ds = ds.subset(train);
    let params = fit_standardization(&train_ds);
    let train_ds = apply_standardization(&train_ds, &params);
    let classifier = train_ml(&train_ds, opts, seed)?;
    let test_ds = ds.subset(test);
    let xs: Vec<Vec<f64>> = test_ds.features.iter().map(|x| params.transform_row(x)).collect();
    let predictions = classifier.predict_all(&xs);
    let report = evaluate_all(&predictions, &test_ds.labels)?;
    Ok(CellOutcome {
        report,
        classifier,
        predictions,
    })
}

struct Job<'a> {
    ds: &'a MultiLabelDataset,
    transform: TransformKind,
    base: &'a BaseEntry,
    correction: CorrectionKind,
    fold: usize,
    test: &'a [usize],
}

/// Runs every cell of the configuration. Failing cells are logged and
/// returned separately; the rest of the sweep continues.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let datasets: Vec<MultiLabelDataset> = cfg.datasets.iter().map(load_source).collect::<Result<_>>()?;
    let names: Vec<&str> = datasets.iter().map(|d| d.name.as_str()).collect();
    if names.iter().collect::<HashSet<_>>().len() != names.len() {
        return Err(Error::Config("dataset names must be unique".into()));
    }
    let folds: Vec<Vec<Vec<usize>>> = datasets
        .iter()
        .map(|d| {
            if d.len() < cfg.outer_folds {
                return Err(Error::Config(format!("dataset {} has fewer rows than outer folds", d.name)));
            }
            fold_indices(d.len(), cfg.outer_folds, seed::derive(cfg.seed, &[seed::hash_str(&d.name)]))
        })
        .collect::<Result<_>>()?;

    let mut jobs = Vec::new();
    for (ds, ds_folds) in datasets.iter().zip(&folds) {
        for &transform in &cfg.transforms {
            for base in &cfg.base_classifiers {
                for &correction in &cfg.corrections {
                    for (fold, test) in ds_folds.iter().enumerate() {
                        jobs.push(Job {
                            ds,
                            transform,
                            base,
                            correction,
                            fold,
                            test,
                        });
                    }
                }
            }
        }
    }
    info!("running {} cells", jobs.len());

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let results: Vec<std::result::Result<RunRecord, RunFailure>> = pool.install(|| jobs.par_iter().map(|job| run_job(cfg, job)).collect());

    let mut outcome = ExperimentOutcome::default();
    for r in results {
        match r {
            Ok(rec) => outcome.records.push(rec),
            Err(f) => {
                warn!("{} {} {} {} fold {}: {}", f.dataset, f.transform.name(), f.base, f.correction.name(), f.fold, f.error);
                outcome.failures.push(f);
            }
        }
    }
    Ok(outcome)
}

/// Options for one cell. The seed ignores the correction so that every
/// correction of the same cell sees the same splits and base models.
fn cell_seed(cfg: &ExperimentConfig, ds: &str, transform: TransformKind, base: &str, fold: usize) -> u64 {
    seed::derive(cfg.seed, &[seed::hash_str(ds), seed::hash_str(transform.name()), seed::hash_str(base), fold as u64])
}

pub fn train_options(cfg: &ExperimentConfig, transform: TransformKind, base: &BaseEntry, correction: CorrectionKind) -> TrainOptions {
    TrainOptions {
        transform,
        base: base.spec.clone(),
        correction,
        beta: BetaSelection::Grid {
            values: cfg.beta_grid.clone(),
            folds: cfg.beta_folds,
        },
        scut_folds: cfg.scut_folds,
    }
}

fn run_job(cfg: &ExperimentConfig, job: &Job) -> std::result::Result<RunRecord, RunFailure> {
    let base = job.base.label();
    let started = Instant::now();
    let opts = train_options(cfg, job.transform, job.base, job.correction);
    let seed = cell_seed(cfg, &job.ds.name, job.transform, &base, job.fold);
    let train = complement(job.ds.len(), job.test);
    match run_cell(job.ds, &train, job.test, &opts, seed) {
        Ok(out) => {
            let betas = out.classifier.betas();
            let beta = (!betas.is_empty()).then(|| {
                let mean = betas.iter().sum::<f64>() / betas.len() as f64;
                let min = betas.iter().copied().fold(f64::INFINITY, f64::min);
                let max = betas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                [mean, min, max]
            });
            Ok(RunRecord {
                dataset: job.ds.name.clone(),
                transform: job.transform,
                base,
                correction: job.correction,
                fold: job.fold,
                metrics: out.report,
                beta,
                wall_time_s: started.elapsed().as_secs_f64(),
            })
        }
        Err(e) => Err(RunFailure {
            dataset: job.ds.name.clone(),
            transform: job.transform,
            base,
            correction: job.correction,
            fold: job.fold,
            error: e.to_string(),
        }),
    }
}

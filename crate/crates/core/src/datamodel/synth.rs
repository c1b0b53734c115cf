//! Seeded synthetic multi-label data.
//!
//! Label vectors come from a Gaussian copula: each label thresholds
//! `sqrt(rho)·g + sqrt(1-rho)·e_l` (shared `g`, private `e_l`), so marginal
//! prevalences are exact and `rho` controls label dependency. Each label owns
//! `modes` random centers in feature space; an instance sits at the sum of
//! one center per relevant label plus isotropic Gaussian noise. With several
//! modes a label occupies disjoint regions that no single split separates.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{FeatureMeta, MultiLabelDataset};
use crate::seed;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n: usize,
    pub d: usize,
    pub labels: usize,
    /// Copula correlation in `[0, 1)`.
    pub dependency: f64,
    /// Prevalence of the first label.
    pub imbalance: f64,
    /// Label `l` has prevalence `imbalance * prevalence_decay^l`.
    pub prevalence_decay: f64,
    /// Standard deviation of the per-instance feature noise.
    pub noise: f64,
    /// Standard deviation of the label center coordinates.
    pub separation: f64,
    /// Centers per label; each relevant label contributes one of them,
    /// picked uniformly per instance.
    pub modes: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n: 200,
            d: 4,
            labels: 3,
            dependency: 0.3,
            imbalance: 0.4,
            prevalence_decay: 0.8,
            noise: 0.5,
            separation: 2.0,
            modes: 1,
        }
    }
}

/// Generative parameters of a synthetic draw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub spec: SynthSpec,
    pub seed: u64,
    pub prevalences: Vec<f64>,
    /// `centers[l][k]`: center `k` of label `l`.
    pub centers: Vec<Vec<Vec<f64>>>,
}

pub fn synth_generate(spec: &SynthSpec, seed: u64) -> Result<(MultiLabelDataset, SynthTruth)> {
    if spec.n < 1 || spec.labels < 2 || spec.d < 1 {
        return Err(Error::InvalidArgument(format!(
            "synthetic data needs n >= 1, d >= 1 and L >= 2 (got n={}, d={}, L={})",
            spec.n, spec.d, spec.labels
        )));
    }
    if spec.modes < 1 {
        return Err(Error::InvalidArgument("synthetic data needs at least one mode per label".into()));
    }
    if !(0.0..1.0).contains(&spec.dependency) {
        return Err(Error::InvalidArgument(format!("dependency {} not in [0, 1)", spec.dependency)));
    }
    let prevalences: Vec<f64> = (0..spec.labels)
        .map(|l| spec.imbalance * spec.prevalence_decay.powi(l as i32))
        .collect();
    if prevalences.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidArgument("label prevalences must lie in [0, 1]".into()));
    }
    let std_normal = Normal::standard();
    let cutoffs: Vec<f64> = prevalences.iter().map(|&p| std_normal.inverse_cdf(p)).collect();

    let mut rng = seed::rng(seed);
    let mut gauss = || -> f64 { rng.sample(StandardNormal) };
    let mut centers: Vec<Vec<Vec<f64>>> = (0..spec.labels)
        .map(|_| vec![(0..spec.d).map(|_| spec.separation * gauss()).collect()])
        .collect();
    for c in centers.iter_mut() {
        for _ in 1..spec.modes {
            c.push((0..spec.d).map(|_| spec.separation * gauss()).collect());
        }
    }

    let shared = spec.dependency.sqrt();
    let private = (1.0 - spec.dependency).sqrt();
    let mut features = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let g: f64 = rng.sample(StandardNormal);
        let y: Vec<bool> = cutoffs
            .iter()
            .map(|&c| shared * g + private * rng.sample::<f64, _>(StandardNormal) < c)
            .collect();
        let mut x = vec![0.0; spec.d];
        for (c, _) in centers.iter().zip(&y).filter(|(_, &b)| b) {
            let k = if spec.modes > 1 { rng.random_range(0..spec.modes) } else { 0 };
            for (xi, ci) in x.iter_mut().zip(&c[k]) {
                *xi += ci;
            }
        }
        for xi in x.iter_mut() {
            *xi += spec.noise * rng.sample::<f64, _>(StandardNormal);
        }
        features.push(x);
        labels.push(y);
    }
    let ds = MultiLabelDataset::new(
        "synth",
        features,
        labels,
        (0..spec.d).map(|i| FeatureMeta::numeric(format!("x{i}"))).collect(),
        (0..spec.labels).map(|l| format!("y{l}")).collect(),
    )?;
    Ok((
        ds,
        SynthTruth {
            spec: spec.clone(),
            seed,
            prevalences,
            centers,
        },
    ))
}

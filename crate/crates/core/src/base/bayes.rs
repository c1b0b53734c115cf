use std::f64::consts::PI;

use super::{SupportPair, TrainedBinaryModel};
use crate::datamodel::BinaryDataset;
use crate::{Error, Result};

const VAR_FLOOR: f64 = 1e-9;

#[derive(Clone, Debug)]
enum Likelihood {
    /// Per class, per feature `(mean, variance)`.
    Gaussian([Vec<(f64, f64)>; 2]),
    /// Per class, per feature: sample values and Silverman bandwidth.
    Kernel([Vec<(Vec<f64>, f64)>; 2]),
}

/// Naive Bayes with per-feature Gaussian likelihoods, or Gaussian kernel
/// density estimates when `kernel` is set.
#[derive(Clone, Debug)]
pub struct GaussianNaiveBayes {
    ln_prior: [f64; 2],
    likelihood: Likelihood,
}

fn column_stats(rows: &[&Vec<f64>], f: usize) -> (f64, f64) {
    let n = rows.len() as f64;
    let mean = rows.iter().map(|r| r[f]).sum::<f64>() / n;
    let var = rows.iter().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / n;
    (mean, var.max(VAR_FLOOR))
}

/// Trains on data holding both classes (single-class data is handled by
/// [`super::BaseLearner::fit`]).
pub fn train_gnb(ds: &BinaryDataset, kernel: bool) -> Result<GaussianNaiveBayes> {
    let counts = ds.class_counts();
    if counts.contains(&0) {
        return Err(Error::InvalidArgument("naive Bayes needs both classes".into()));
    }
    let n = ds.len() as f64;
    let by_class: [Vec<&Vec<f64>>; 2] = [0, 1].map(|c| {
        ds.features
            .iter()
            .zip(&ds.classes)
            .filter(|(_, &k)| k == c)
            .map(|(x, _)| x)
            .collect()
    });
    let d = ds.dims();
    let likelihood = if kernel {
        Likelihood::Kernel([0, 1].map(|c| {
            let rows = &by_class[c];
            (0..d)
                .map(|f| {
                    let (_, var) = column_stats(rows, f);
                    let h = 1.06 * var.sqrt() * (rows.len() as f64).powf(-0.2);
                    (rows.iter().map(|r| r[f]).collect(), h.max(VAR_FLOOR.sqrt()))
                })
                .collect()
        }))
    } else {
        Likelihood::Gaussian([0, 1].map(|c| (0..d).map(|f| column_stats(&by_class[c], f)).collect()))
    };
    Ok(GaussianNaiveBayes {
        ln_prior: [(counts[0] as f64 / n).ln(), (counts[1] as f64 / n).ln()],
        likelihood,
    })
}

fn ln_normal(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * PI * var).ln() + (x - mean).powi(2) / var)
}

fn ln_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|a| (a - m).exp()).sum::<f64>().ln()
}

impl GaussianNaiveBayes {
    fn ln_joint(&self, c: usize, x: &[f64]) -> f64 {
        let ll: f64 = match &self.likelihood {
            Likelihood::Gaussian(p) => x.iter().zip(&p[c]).map(|(v, (m, s2))| ln_normal(*v, *m, *s2)).sum(),
            Likelihood::Kernel(p) => x
                .iter()
                .zip(&p[c])
                .map(|(v, (samples, h))| {
                    let terms: Vec<f64> = samples.iter().map(|s| ln_normal(*v, *s, h * h)).collect();
                    ln_sum_exp(&terms) - (samples.len() as f64).ln()
                })
                .sum(),
        };
        self.ln_prior[c] + ll
    }
}

impl TrainedBinaryModel for GaussianNaiveBayes {
    fn support(&self, x: &[f64]) -> SupportPair {
        let a = self.ln_joint(0, x);
        let b = self.ln_joint(1, x);
        // logistic of the log-odds keeps both entries in [0, 1]
        let p1 = 1.0 / (1.0 + (a - b).exp());
        SupportPair::new(1.0 - p1, p1)
    }

    fn describe(&self) -> serde_json::Value {
        let kernel = matches!(self.likelihood, Likelihood::Kernel(_));
        serde_json::json!({ "kind": "nb", "kernel": kernel })
    }
}

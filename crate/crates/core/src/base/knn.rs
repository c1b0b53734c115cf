use super::{SupportPair, TrainedBinaryModel};
use crate::datamodel::BinaryDataset;
use crate::{Error, Result};

/// k-nearest-neighbours with Euclidean distance. Supports are the class
/// fractions among the `k` nearest training points; equal distances are
/// resolved in favour of the lower training index.
#[derive(Clone, Debug)]
pub struct Knn {
    k: usize,
    features: Vec<Vec<f64>>,
    classes: Vec<usize>,
}

pub fn train_knn(ds: &BinaryDataset, k: usize) -> Result<Knn> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    if ds.is_empty() {
        return Err(Error::InvalidArgument("cannot train kNN on an empty dataset".into()));
    }
    let k = if k > ds.len() {
        log::warn!("k = {k} exceeds {} training points; using k = {}", ds.len(), ds.len());
        ds.len()
    } else {
        k
    };
    Ok(Knn {
        k,
        features: ds.features.clone(),
        classes: ds.classes.clone(),
    })
}

impl Knn {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Indices of the `k` nearest training points, nearest first.
    pub fn neighbours(&self, x: &[f64]) -> Vec<usize> {
        let mut keyed: Vec<(f64, usize)> = self
            .features
            .iter()
            .enumerate()
            .map(|(i, t)| (t.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < keyed.len() {
            keyed.select_nth_unstable_by(self.k - 1, cmp);
            keyed.truncate(self.k);
        }
        keyed.sort_unstable_by(cmp);
        keyed.into_iter().map(|(_, i)| i).collect()
    }
}

impl TrainedBinaryModel for Knn {
    fn support(&self, x: &[f64]) -> SupportPair {
        let ones = self
            .neighbours(x)
            .into_iter()
            .filter(|&i| self.classes[i] == 1)
            .count();
        let p = ones as f64 / self.k as f64;
        SupportPair::new(1.0 - p, p)
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "kind": "knn", "k": self.k })
    }
}

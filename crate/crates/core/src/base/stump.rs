use super::{SupportPair, TrainedBinaryModel};
use crate::datamodel::BinaryDataset;
use crate::Result;

/// One-split decision tree chosen by Gini impurity. `x[feature] <= threshold`
/// goes left. Leaf supports are Laplace-smoothed class frequencies
/// `(n_c + 1) / (n + 2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Stump {
    split: Option<(usize, f64)>,
    left: SupportPair,
    right: SupportPair,
}

fn laplace(counts: [usize; 2]) -> SupportPair {
    let n = (counts[0] + counts[1]) as f64;
    SupportPair::new((counts[0] as f64 + 1.0) / (n + 2.0), (counts[1] as f64 + 1.0) / (n + 2.0))
}

fn gini(c: [usize; 2]) -> f64 {
    let n = (c[0] + c[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p = c[0] as f64 / n;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

pub fn train_stump(ds: &BinaryDataset) -> Result<Stump> {
    let total = ds.class_counts();
    let n = ds.len() as f64;
    let root = gini(total);
    let mut best: Option<(f64, usize, f64, [usize; 2])> = None;
    for f in 0..ds.dims() {
        let mut order: Vec<(f64, usize)> = ds
            .features
            .iter()
            .zip(&ds.classes)
            .map(|(x, &c)| (x[f], c))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = [0usize; 2];
        for i in 0..order.len() - 1 {
            left[order[i].1] += 1;
            if order[i].0 == order[i + 1].0 {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let nl = (left[0] + left[1]) as f64;
            let impurity = (nl * gini(left) + (n - nl) * gini(right)) / n;
            if best.is_none_or(|b| impurity < b.0) {
                best = Some((impurity, f, 0.5 * (order[i].0 + order[i + 1].0), left));
            }
        }
    }
    Ok(match best {
        Some((impurity, f, thr, left)) if impurity < root - 1e-12 => Stump {
            split: Some((f, thr)),
            left: laplace(left),
            right: laplace([total[0] - left[0], total[1] - left[1]]),
        },
        _ => Stump {
            split: None,
            left: laplace(total),
            right: laplace(total),
        },
    })
}

impl Stump {
    pub fn split(&self) -> Option<(usize, f64)> {
        self.split
    }
}

impl TrainedBinaryModel for Stump {
    fn support(&self, x: &[f64]) -> SupportPair {
        match self.split {
            Some((f, thr)) if x[f] > thr => self.right,
            _ => self.left,
        }
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "kind": "stump", "split": self.split })
    }
}

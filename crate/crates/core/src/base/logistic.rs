use super::{SupportPair, TrainedBinaryModel};
use crate::datamodel::BinaryDataset;
use crate::Result;

const GRAD_TOL: f64 = 1e-6;
const MAX_ITER: usize = 10_000;

/// L2-penalized logistic regression (bias unpenalized), fitted by plain
/// gradient descent with step `1 / L` for a bound `L` on the Hessian norm.
#[derive(Clone, Debug, PartialEq)]
pub struct Logistic {
    weights: Vec<f64>,
    bias: f64,
    l2: f64,
    converged: bool,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn gradient(ds: &BinaryDataset, w: &[f64], b: f64, l2: f64) -> (Vec<f64>, f64) {
    let n = ds.len() as f64;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for (x, &y) in ds.features.iter().zip(&ds.classes) {
        let z = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b;
        let r = sigmoid(z) - y as f64;
        for (g, xi) in gw.iter_mut().zip(x) {
            *g += r * xi;
        }
        gb += r;
    }
    for (g, wi) in gw.iter_mut().zip(w) {
        *g = *g / n + l2 * wi;
    }
    (gw, gb / n)
}

pub fn train_logistic(ds: &BinaryDataset, l2: f64) -> Result<Logistic> {
    let d = ds.dims();
    let n = ds.len() as f64;
    let mean_sq_norm = ds
        .features
        .iter()
        .map(|x| 1.0 + x.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        / n;
    let step = 1.0 / (0.25 * mean_sq_norm + l2);
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let (gw, gb) = gradient(ds, &w, b, l2);
        let norm = (gw.iter().map(|g| g * g).sum::<f64>() + gb * gb).sqrt();
        if norm < GRAD_TOL {
            converged = true;
            break;
        }
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= step * g;
        }
        b -= step * gb;
    }
    if !converged {
        log::warn!("logistic regression stopped after {MAX_ITER} iterations without reaching gradient norm {GRAD_TOL}");
    }
    Ok(Logistic {
        weights: w,
        bias: b,
        l2,
        converged,
    })
}

impl Logistic {
    pub fn from_weights(weights: Vec<f64>, bias: f64) -> Self {
        Logistic {
            weights,
            bias,
            l2: 0.0,
            converged: true,
        }
    }

    pub fn weights(&self) -> (&[f64], f64) {
        (&self.weights, self.bias)
    }

    pub fn converged(&self) -> bool {
        self.converged
    }
}

impl TrainedBinaryModel for Logistic {
    fn support(&self, x: &[f64]) -> SupportPair {
        let z = x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.bias;
        let p = sigmoid(z);
        SupportPair::new(1.0 - p, p)
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "kind": "logistic", "l2": self.l2 })
    }
}

//! The eleven multi-label quality criteria.
//!
//! Zero-division conventions: FDR and FNR of an empty denominator are 0; F1
//! with `tp = fp = fn = 0` is 1 (an empty prediction of an empty set is
//! perfect).

use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::stats::Direction;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn fdr(&self) -> f64 {
        ratio(self.fp, self.fp + self.tp, 0.0)
    }

    pub fn fnr(&self) -> f64 {
        ratio(self.fn_, self.fn_ + self.tp, 0.0)
    }

    pub fn f1(&self) -> f64 {
        self.f1_or(1.0)
    }

    /// F1 with `when_empty` returned for `tp = fp = fn = 0`.
    pub fn f1_or(&self, when_empty: f64) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_, when_empty)
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
        self.tn += o.tn;
    }
}

fn ratio(num: usize, den: usize, when_zero: f64) -> f64 {
    if den == 0 {
        when_zero
    } else {
        num as f64 / den as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Criterion {
    Hamming,
    ZeroOne,
    ExFdr,
    ExFnr,
    ExF1,
    MaFdr,
    MaFnr,
    MaF1,
    MiFdr,
    MiFnr,
    MiF1,
}

impl Criterion {
    /// Report order.
    pub const ALL: [Criterion; 11] = [
        Criterion::Hamming,
        Criterion::ZeroOne,
        Criterion::ExFdr,
        Criterion::ExFnr,
        Criterion::ExF1,
        Criterion::MaFdr,
        Criterion::MaFnr,
        Criterion::MaF1,
        Criterion::MiFdr,
        Criterion::MiFnr,
        Criterion::MiF1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Hamming => "Hamming",
            Criterion::ZeroOne => "Zero-One",
            Criterion::ExFdr => "ExFDR",
            Criterion::ExFnr => "ExFNR",
            Criterion::ExF1 => "ExF1",
            Criterion::MaFdr => "MaFDR",
            Criterion::MaFnr => "MaFNR",
            Criterion::MaF1 => "MaF1",
            Criterion::MiFdr => "MiFDR",
            Criterion::MiFnr => "MiFNR",
            Criterion::MiF1 => "MiF1",
        }
    }

    pub fn from_name(name: &str) -> Option<Criterion> {
        Criterion::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn direction(self) -> Direction {
        match self {
            Criterion::ExF1 | Criterion::MaF1 | Criterion::MiF1 => Direction::HigherBetter,
            _ => Direction::LowerBetter,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub hamming: f64,
    pub zero_one: f64,
    pub ex_fdr: f64,
    pub ex_fnr: f64,
    pub ex_f1: f64,
    pub ma_fdr: f64,
    pub ma_fnr: f64,
    pub ma_f1: f64,
    pub mi_fdr: f64,
    pub mi_fnr: f64,
    pub mi_f1: f64,
}

impl MetricReport {
    pub fn get(&self, c: Criterion) -> f64 {
        match c {
            Criterion::Hamming => self.hamming,
            Criterion::ZeroOne => self.zero_one,
            Criterion::ExFdr => self.ex_fdr,
            Criterion::ExFnr => self.ex_fnr,
            Criterion::ExF1 => self.ex_f1,
            Criterion::MaFdr => self.ma_fdr,
            Criterion::MaFnr => self.ma_fnr,
            Criterion::MaF1 => self.ma_f1,
            Criterion::MiFdr => self.mi_fdr,
            Criterion::MiFnr => self.mi_fnr,
            Criterion::MiF1 => self.mi_f1,
        }
    }

    /// Values in [`Criterion::ALL`] order.
    pub fn values(&self) -> [f64; 11] {
        Criterion::ALL.map(|c| self.get(c))
    }

    pub fn from_values(v: [f64; 11]) -> Self {
        MetricReport {
            hamming: v[0],
            zero_one: v[1],
            ex_fdr: v[2],
            ex_fnr: v[3],
            ex_f1: v[4],
            ma_fdr: v[5],
            ma_fnr: v[6],
            ma_f1: v[7],
            mi_fdr: v[8],
            mi_fnr: v[9],
            mi_f1: v[10],
        }
    }
}

/// Scores predicted label vectors against the truth.
pub fn evaluate_all(pred: &[Vec<bool>], truth: &[Vec<bool>]) -> Result<MetricReport> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::Shape(format!(
            "{} predicted rows vs {} true rows",
            pred.len(),
            truth.len()
        )));
    }
    let l = truth[0].len();
    if l == 0 || pred.iter().chain(truth).any(|r| r.len() != l) {
        return Err(Error::Shape("rows must share a nonzero label count".into()));
    }
    let n = pred.len() as f64;

    let mut per_label = vec![ConfusionCounts::default(); l];
    let mut wrong_bits = 0usize;
    let mut wrong_rows = 0usize;
    let (mut ex_fdr, mut ex_fnr, mut ex_f1) = (0.0, 0.0, 0.0);
    for (p, t) in pred.iter().zip(truth) {
        let mut row = ConfusionCounts::default();
        for (j, (&pb, &tb)) in p.iter().zip(t).enumerate() {
            row.add(pb, tb);
            per_label[j].add(pb, tb);
        }
        let wrong = row.fp + row.fn_;
        wrong_bits += wrong;
        wrong_rows += usize::from(wrong > 0);
        ex_fdr += row.fdr();
        ex_fnr += row.fnr();
        ex_f1 += row.f1();
    }
    let lf = l as f64;
    let mut micro = ConfusionCounts::default();
    for c in &per_label {
        micro += *c;
    }
    Ok(MetricReport {
        hamming: wrong_bits as f64 / (n * lf),
        zero_one: wrong_rows as f64 / n,
        ex_fdr: ex_fdr / n,
        ex_fnr: ex_fnr / n,
        ex_f1: ex_f1 / n,
        ma_fdr: per_label.iter().map(ConfusionCounts::fdr).sum::<f64>() / lf,
        ma_fnr: per_label.iter().map(ConfusionCounts::fnr).sum::<f64>() / lf,
        ma_f1: per_label.iter().map(ConfusionCounts::f1).sum::<f64>() / lf,
        mi_fdr: micro.fdr(),
        mi_fnr: micro.fnr(),
        mi_f1: micro.f1(),
    })
}

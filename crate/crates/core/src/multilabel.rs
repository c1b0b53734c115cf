//! Binary relevance and label-pairwise ensembles with optional SCM/BMC
//! correction of every member, soft-output combination and S-Cut thresholds.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::{BaseSpec, BinarySoftClassifier, SharedModel, SupportPair, TrainedBinaryModel};
use crate::bmc::BmcModel;
use crate::datamodel::{br_transform, complement, fold_indices, label_pairs, lpw_transform, BinaryDataset, MultiLabelDataset, Origin};
use crate::metrics::ConfusionCounts;
use crate::rrc::rrc_probability_cached;
use crate::scm::{build_archive, ScmModel};
use crate::{seed, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectionKind {
    None,
    Scm,
    Bmc,
}

impl CorrectionKind {
    pub fn name(self) -> &'static str {
        match self {
            CorrectionKind::None => "none",
            CorrectionKind::Scm => "scm",
            CorrectionKind::Bmc => "bmc",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TransformKind {
    #[serde(rename = "BR")]
    Br,
    #[serde(rename = "LPW")]
    Lpw,
}

impl TransformKind {
    pub fn name(self) -> &'static str {
        match self {
            TransformKind::Br => "BR",
            TransformKind::Lpw => "LPW",
        }
    }
}

/// Neighbourhood scale for corrected members: one value, or a grid searched
/// by k-fold CV on minority-class F1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaSelection {
    Fixed(f64),
    Grid { values: Vec<f64>, folds: usize },
}

impl BetaSelection {
    /// `2 + 0.9 i` for `i = 0..=10`, threefold.
    pub fn default_grid() -> Self {
        BetaSelection::Grid {
            values: default_beta_grid(),
            folds: 3,
        }
    }

    fn candidates(&self) -> &[f64] {
        match self {
            BetaSelection::Fixed(b) => std::slice::from_ref(b),
            BetaSelection::Grid { values, .. } => values,
        }
    }
}

pub fn default_beta_grid() -> Vec<f64> {
    (0..=10).map(|i| 2.0 + 0.9 * i as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub transform: TransformKind,
    pub base: BaseSpec,
    pub correction: CorrectionKind,
    pub beta: BetaSelection,
    /// Internal CV folds for S-Cut; below 2 leaves every threshold at 0.5.
    pub scut_folds: usize,
}

impl TrainOptions {
    pub fn new(transform: TransformKind, base: BaseSpec, correction: CorrectionKind) -> Self {
        TrainOptions {
            transform,
            base,
            correction,
            beta: BetaSelection::default_grid(),
            scut_folds: 3,
        }
    }
}

#[derive(Clone, Debug)]
pub enum MemberModel {
    Bare(SharedModel),
    Scm(ScmModel),
    Bmc(BmcModel),
}

impl MemberModel {
    pub fn support(&self, x: &[f64]) -> SupportPair {
        match self {
            MemberModel::Bare(m) => m.support(x),
            MemberModel::Scm(m) => m.support(x),
            MemberModel::Bmc(m) => m.support(x),
        }
    }

    pub fn decide(&self, x: &[f64]) -> usize {
        self.support(x).decide()
    }

    pub fn beta(&self) -> Option<f64> {
        match self {
            MemberModel::Bare(_) => None,
            MemberModel::Scm(m) => Some(m.archive.beta()),
            MemberModel::Bmc(m) => Some(m.archive.beta()),
        }
    }

    /// Row ids stored in the validation archive, if any.
    pub fn archive_ids(&self) -> Vec<usize> {
        match self {
            MemberModel::Bare(_) => Vec::new(),
            MemberModel::Scm(m) => m.archive.points().iter().map(|p| p.id).collect(),
            MemberModel::Bmc(m) => m.archive.points().iter().map(|p| p.id).collect(),
        }
    }

    fn describe(&self) -> serde_json::Value {
        match self {
            MemberModel::Bare(m) => m.describe(),
            MemberModel::Scm(m) => m.describe(),
            MemberModel::Bmc(m) => m.describe(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Member {
    /// `Br(l)` or `Lpw(i, j)`.
    pub origin: Origin,
    pub model: MemberModel,
    /// Row ids the member was trained on.
    pub trained_on: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct MultiLabelClassifier {
    pub kind: TransformKind,
    pub n_labels: usize,
    pub members: Vec<Member>,
    pub thresholds: Vec<f64>,
    pub abstain_pairs: Vec<(usize, usize)>,
    /// Row ids whose internal-CV outputs fitted the thresholds.
    pub scut_ids: Vec<usize>,
}

/// Trains a corrected (or bare) binary model. With a β grid the scale is
/// picked by CV before the final archive is built.
pub fn train_member(ds: &BinaryDataset, base: &BaseSpec, correction: CorrectionKind, beta: &BetaSelection, seed: u64) -> Result<MemberModel> {
    if correction == CorrectionKind::None {
        return Ok(MemberModel::Bare(base.train(ds, seed::derive(seed, &[0]))?));
    }
    if ds.len() < 2 {
        warn!("{} training instance(s) cannot fill a validation archive; member left uncorrected", ds.len());
        return Ok(MemberModel::Bare(base.train(ds, seed::derive(seed, &[0]))?));
    }
    let grid = beta.candidates();
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty beta grid".into()));
    }
    let chosen = match beta {
        BetaSelection::Grid { values, folds } if values.len() > 1 => select_beta(ds, base, correction, values, *folds, seed)?,
        _ => grid[0],
    };
    let (archive, model) = build_archive(base, ds, chosen, seed::derive(seed, &[1]))?;
    Ok(match correction {
        CorrectionKind::Scm => MemberModel::Scm(ScmModel::new(model, archive)),
        _ => MemberModel::Bmc(BmcModel::new(model, archive)),
    })
}

/// β maximizing mean minority-class F1 across `folds` CV folds; the first
/// grid value wins ties. One archive per fold serves every candidate.
pub fn select_beta(ds: &BinaryDataset, base: &BaseSpec, correction: CorrectionKind, grid: &[f64], folds: usize, seed: u64) -> Result<f64> {
    let folds = folds.min(ds.len() / 2);
    if folds < 2 {
        return Ok(grid[0]);
    }
    let minority = ds.minority_class();
    let parts = fold_indices(ds.len(), folds, seed::derive(seed, &[0xbe7a]))?;
    let mut scores = vec![0.0; grid.len()];
    for (f, test) in parts.iter().enumerate() {
        let train = ds.subset(&complement(ds.len(), test));
        let (archive, model) = build_archive(base, &train, grid[0], seed::derive(seed, &[0xbe7a, f as u64]))?;
        let mut counts = vec![ConfusionCounts::default(); grid.len()];
        for &r in test {
            let x = &ds.features[r];
            let sq = archive.sq_distances(x);
            let support = model.support(x);
            let rrc = rrc_probability_cached(support)?;
            let truth = ds.classes[r] == minority;
            for (b, c) in grid.iter().zip(counts.iter_mut()) {
                let scaled = archive.with_beta(*b)?;
                let posterior = match correction {
                    CorrectionKind::Scm => ScmModel::new(model.clone(), scaled).posterior_from(rrc, &sq),
                    _ => {
                        let bmc = BmcModel::new(model.clone(), scaled);
                        bmc.posterior_from(support.decide(), &sq).unwrap_or(support)
                    }
                };
                c.add(posterior.decide() == minority, truth);
            }
        }
        for (s, c) in scores.iter_mut().zip(&counts) {
            *s += c.f1_or(0.0);
        }
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(grid[best])
}

type TrainedMembers = (Vec<Member>, Vec<(usize, usize)>);

/// Per-member β override used when refitting inside S-Cut folds.
fn train_members(ds: &MultiLabelDataset, opts: &TrainOptions, betas: Option<&[Option<f64>]>, seed: u64) -> Result<TrainedMembers> {
    let l = ds.n_labels();
    let jobs: Vec<(Origin, Option<BinaryDataset>)> = match opts.transform {
        TransformKind::Br => (0..l).map(|j| (Origin::Br(j), Some(br_transform(ds, j)))).collect(),
        TransformKind::Lpw => label_pairs(l)
            .into_iter()
            .map(|(i, j)| (Origin::Lpw(i, j), lpw_transform(ds, i, j)))
            .collect(),
    };
    let trained: Vec<Result<Option<Member>>> = jobs
        .into_par_iter()
        .enumerate()
        .map(|(idx, (origin, data))| {
            let Some(data) = data else { return Ok(None) };
            let member_seed = seed::derive(seed, &[idx as u64]);
            let selection = match betas.and_then(|b| b[idx]) {
                Some(b) => BetaSelection::Fixed(b),
                None => opts.beta.clone(),
            };
            let model = train_member(&data, &opts.base, opts.correction, &selection, member_seed)?;
            let mut trained_on = data.ids.clone();
            trained_on.sort_unstable();
            Ok(Some(Member { origin, model, trained_on }))
        })
        .collect();
    let mut members = Vec::new();
    let mut abstain = Vec::new();
    let pairs = label_pairs(l);
    for (idx, r) in trained.into_iter().enumerate() {
        match r? {
            Some(m) => members.push(m),
            None => abstain.push(pairs[idx]),
        }
    }
    Ok((members, abstain))
}

pub fn train_ml(ds: &MultiLabelDataset, opts: &TrainOptions, seed: u64) -> Result<MultiLabelClassifier> {
    let l = ds.n_labels();
    if l < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 labels, got {l}")));
    }
    if ds.is_empty() {
        return Err(Error::InvalidArgument("cannot train on an empty dataset".into()));
    }
    let (members, abstain_pairs) = train_members(ds, opts, None, seed::derive(seed, &[1]))?;
    let mut clf = MultiLabelClassifier {
        kind: opts.transform,
        n_labels: l,
        members,
        thresholds: vec![0.5; l],
        abstain_pairs,
        scut_ids: Vec::new(),
    };
    let folds = opts.scut_folds.min(ds.len());
    if folds >= 2 {
        let betas = clf.member_betas();
        let parts = fold_indices(ds.len(), folds, seed::derive(seed, &[2]))?;
        let mut soft = vec![Vec::new(); ds.len()];
        for (f, test) in parts.iter().enumerate() {
            let train = ds.subset(&complement(ds.len(), test));
            let (members, abstain_pairs) = train_members(&train, opts, Some(&betas), seed::derive(seed, &[3, f as u64]))?;
            let inner = MultiLabelClassifier {
                kind: opts.transform,
                n_labels: l,
                members,
                thresholds: vec![0.5; l],
                abstain_pairs,
                scut_ids: Vec::new(),
            };
            for &r in test {
                soft[r] = inner.soft_output(&ds.features[r]);
            }
        }
        clf.thresholds = scut_fit(&soft, &ds.labels)?;
        clf.scut_ids = ds.ids.clone();
        clf.scut_ids.sort_unstable();
    }
    Ok(clf)
}

impl MultiLabelClassifier {
    /// β per member slot (transform order), `None` for abstaining pairs and
    /// bare members.
    fn member_betas(&self) -> Vec<Option<f64>> {
        let slots: Vec<Origin> = match self.kind {
            TransformKind::Br => (0..self.n_labels).map(Origin::Br).collect(),
            TransformKind::Lpw => label_pairs(self.n_labels).into_iter().map(|(i, j)| Origin::Lpw(i, j)).collect(),
        };
        slots
            .iter()
            .map(|o| self.members.iter().find(|m| m.origin == *o).and_then(|m| m.model.beta()))
            .collect()
    }

    pub fn soft_output(&self, x: &[f64]) -> Vec<f64> {
        let mut omega = vec![0.0; self.n_labels];
        match self.kind {
            TransformKind::Br => {
                for m in &self.members {
                    if let Origin::Br(l) = m.origin {
                        omega[l] = m.model.support(x).nu1;
                    }
                }
            }
            TransformKind::Lpw => {
                for m in &self.members {
                    if let Origin::Lpw(i, j) = m.origin {
                        omega[if m.model.decide(x) == 1 { i } else { j }] += 1.0;
                    }
                }
                let norm = (self.n_labels - 1) as f64;
                omega.iter_mut().for_each(|w| *w /= norm);
            }
        }
        omega
    }

    pub fn predict(&self, x: &[f64]) -> Vec<bool> {
        apply_thresholds(&self.soft_output(x), &self.thresholds)
    }

    pub fn predict_all(&self, xs: &[Vec<f64>]) -> Vec<Vec<bool>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": self.kind.name(),
            "members": self.members.len(),
            "member_details": self.members.iter().map(|m| serde_json::json!({
                "origin": match m.origin {
                    Origin::Br(l) => serde_json::json!([l]),
                    Origin::Lpw(i, j) => serde_json::json!([i, j]),
                    Origin::Other => serde_json::Value::Null,
                },
                "beta": m.model.beta(),
                "model": m.model.describe(),
            })).collect::<Vec<_>>(),
            "thresholds": self.thresholds,
            "abstain_pairs": self.abstain_pairs,
        })
    }

    /// Chosen β of every corrected member.
    pub fn betas(&self) -> Vec<f64> {
        self.members.iter().filter_map(|m| m.model.beta()).collect()
    }
}

/// `h_l = [ω_l ≥ Θ_l]`
pub fn apply_thresholds(omega: &[f64], thresholds: &[f64]) -> Vec<bool> {
    omega.iter().zip(thresholds).map(|(w, t)| w >= t).collect()
}

/// Per-label threshold maximizing F1 over the candidates {0, 1, observed
/// values, midpoints between consecutive observed values}; the smallest
/// wins ties. A label without positives gets 1.
pub fn scut_fit(soft: &[Vec<f64>], truth: &[Vec<bool>]) -> Result<Vec<f64>> {
    if soft.is_empty() || soft.len() != truth.len() {
        return Err(Error::Shape(format!("{} soft rows vs {} truth rows", soft.len(), truth.len())));
    }
    let l = truth[0].len();
    if soft.iter().any(|r| r.len() != l) || truth.iter().any(|r| r.len() != l) {
        return Err(Error::Shape("soft outputs and truth disagree on the label count".into()));
    }
    Ok((0..l).map(|j| scut_label(soft, truth, j)).collect())
}

fn scut_label(soft: &[Vec<f64>], truth: &[Vec<bool>], j: usize) -> f64 {
    let mut scored: Vec<(f64, bool)> = soft.iter().zip(truth).map(|(s, t)| (s[j], t[j])).collect();
    let positives = scored.iter().filter(|p| p.1).count();
    if positives == 0 {
        return 1.0;
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut values: Vec<f64> = scored.iter().map(|p| p.0).collect();
    values.dedup();
    let mut candidates = vec![0.0];
    for (k, &v) in values.iter().enumerate() {
        if k > 0 {
            candidates.push(0.5 * (values[k - 1] + v));
        }
        candidates.push(v);
    }
    candidates.push(1.0);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    // positives strictly below each prefix of the sorted scores
    let mut below = Vec::with_capacity(scored.len() + 1);
    below.push(0usize);
    for p in &scored {
        below.push(below.last().unwrap() + usize::from(p.1));
    }
    let n = scored.len();
    let mut best = (f64::NEG_INFINITY, 1.0);
    for &c in &candidates {
        let cut = scored.partition_point(|p| p.0 < c);
        let tp = positives - below[cut];
        let predicted = n - cut;
        let counts = ConfusionCounts {
            tp,
            fp: predicted - tp,
            fn_: positives - tp,
            tn: 0,
        };
        let f1 = counts.f1_or(0.0);
        if f1 > best.0 {
            best = (f1, c);
        }
    }
    best.1
}

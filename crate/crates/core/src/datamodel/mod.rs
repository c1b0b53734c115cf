//! Datasets, preprocessing, decomposition transforms and splitting.

mod io;
mod synth;

use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use io::{load_arff, load_csv, load_dataset, write_arff, write_csv, write_stats_csv, DataFormat};
pub use synth::{synth_generate, SynthSpec, SynthTruth};

use crate::seed;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FeatureKind {
    Numeric,
    /// 0/1 valued.
    Binary,
    /// Stored as the category index.
    Nominal(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub name: String,
    pub kind: FeatureKind,
}

impl FeatureMeta {
    pub fn numeric(name: impl Into<String>) -> Self {
        FeatureMeta {
            name: name.into(),
            kind: FeatureKind::Numeric,
        }
    }
}

/// Feature rows with `L`-bit label vectors.
///
/// `ids` tags each instance with its row index in the originally loaded (or
/// generated) dataset; subsets and transforms carry the tags along so the
/// origin of any training or validation point can be traced.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiLabelDataset {
    pub name: String,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<Vec<bool>>,
    pub ids: Vec<usize>,
    pub feature_meta: Vec<FeatureMeta>,
    pub label_names: Vec<String>,
}

impl MultiLabelDataset {
    /// Checks shapes and finiteness; assigns `ids = 0..n`.
    pub fn new(
        name: impl Into<String>,
        features: Vec<Vec<f64>>,
        labels: Vec<Vec<bool>>,
        feature_meta: Vec<FeatureMeta>,
        label_names: Vec<String>,
    ) -> Result<Self> {
        let d = feature_meta.len();
        let l = label_names.len();
        if features.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows vs {} label rows",
                features.len(),
                labels.len()
            )));
        }
        for (i, (x, y)) in features.iter().zip(&labels).enumerate() {
            if x.len() != d || y.len() != l {
                return Err(Error::Shape(format!(
                    "row {i}: expected {d} features and {l} labels, got {} and {}",
                    x.len(),
                    y.len()
                )));
            }
            if let Some(v) = x.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("row {i}: non-finite feature {v}")));
            }
        }
        for m in &feature_meta {
            if let FeatureKind::Nominal(cats) = &m.kind {
                if cats.len() < 2 {
                    return Err(Error::InvalidArgument(format!(
                        "nominal feature `{}` needs at least two categories",
                        m.name
                    )));
                }
            }
        }
        let ids = (0..features.len()).collect();
        Ok(MultiLabelDataset {
            name: name.into(),
            features,
            labels,
            ids,
            feature_meta,
            label_names,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.feature_meta.len()
    }

    pub fn n_labels(&self) -> usize {
        self.label_names.len()
    }

    pub fn subset(&self, rows: &[usize]) -> MultiLabelDataset {
        MultiLabelDataset {
            name: self.name.clone(),
            features: rows.iter().map(|&r| self.features[r].clone()).collect(),
            labels: rows.iter().map(|&r| self.labels[r].clone()).collect(),
            ids: rows.iter().map(|&r| self.ids[r]).collect(),
            feature_meta: self.feature_meta.clone(),
            label_names: self.label_names.clone(),
        }
    }

    /// Number of positive instances per label.
    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_labels()];
        for y in &self.labels {
            for (c, &b) in counts.iter_mut().zip(y) {
                *c += b as usize;
            }
        }
        counts
    }
}

/// Which decomposition produced a [`BinaryDataset`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    /// Binary relevance for one label.
    Br(usize),
    /// Label pair `(i, j)`, `i < j`; class 1 means "label i".
    Lpw(usize, usize),
    Other,
}

/// Two-class training data. Classes are `0` or `1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryDataset {
    pub features: Vec<Vec<f64>>,
    pub classes: Vec<usize>,
    pub ids: Vec<usize>,
    pub origin: Origin,
}

impl BinaryDataset {
    pub fn new(features: Vec<Vec<f64>>, classes: Vec<usize>) -> Result<Self> {
        if features.len() != classes.len() {
            return Err(Error::Shape(format!(
                "{} rows vs {} classes",
                features.len(),
                classes.len()
            )));
        }
        if let Some(c) = classes.iter().find(|&&c| c > 1) {
            return Err(Error::InvalidArgument(format!("class {c} is not 0 or 1")));
        }
        let ids = (0..features.len()).collect();
        Ok(BinaryDataset {
            features,
            classes,
            ids,
            origin: Origin::Other,
        })
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// `[count of class 0, count of class 1]`
    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.classes.iter().filter(|&&c| c == 1).count();
        [self.len() - ones, ones]
    }

    /// The less frequent class; ties go to class 1.
    pub fn minority_class(&self) -> usize {
        let [c0, c1] = self.class_counts();
        if c0 < c1 {
            0
        } else {
            1
        }
    }

    pub fn subset(&self, rows: &[usize]) -> BinaryDataset {
        BinaryDataset {
            features: rows.iter().map(|&r| self.features[r].clone()).collect(),
            classes: rows.iter().map(|&r| self.classes[r]).collect(),
            ids: rows.iter().map(|&r| self.ids[r]).collect(),
            origin: self.origin,
        }
    }
}

/// One-hot encodes every nominal feature; numeric and binary features pass
/// through unchanged.
pub fn binarize_nominal(ds: &MultiLabelDataset) -> MultiLabelDataset {
    let mut meta = Vec::new();
    for m in &ds.feature_meta {
        match &m.kind {
            FeatureKind::Nominal(cats) => {
                meta.extend(cats.iter().map(|c| FeatureMeta {
                    name: format!("{}={}", m.name, c),
                    kind: FeatureKind::Binary,
                }));
            }
            _ => meta.push(m.clone()),
        }
    }
    let features = ds
        .features
        .iter()
        .map(|x| {
            let mut row = Vec::with_capacity(meta.len());
            for (v, m) in x.iter().zip(&ds.feature_meta) {
                match &m.kind {
                    FeatureKind::Nominal(cats) => {
                        let hot = *v as usize;
                        row.extend((0..cats.len()).map(|c| if c == hot { 1.0 } else { 0.0 }));
                    }
                    _ => row.push(*v),
                }
            }
            row
        })
        .collect();
    MultiLabelDataset {
        name: ds.name.clone(),
        features,
        labels: ds.labels.clone(),
        ids: ds.ids.clone(),
        feature_meta: meta,
        label_names: ds.label_names.clone(),
    }
}

/// Per-feature population mean and standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
}

pub fn fit_standardization(ds: &MultiLabelDataset) -> StandardizationParams {
    let d = ds.dims();
    let n = ds.len().max(1) as f64;
    let mut mean = vec![0.0; d];
    for x in &ds.features {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for x in &ds.features {
        for ((s, v), m) in var.iter_mut().zip(x).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let stddev = var.into_iter().map(|s| (s / n).sqrt()).collect();
    StandardizationParams { mean, stddev }
}

impl StandardizationParams {
    pub fn transform_row(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.stddev)
            .map(|((v, m), s)| if *s > 0.0 { (v - m) / s } else { 0.0 })
            .collect()
    }
}

/// Standardizes every feature. Constant features map to 0. Feature kinds
/// become numeric.
pub fn apply_standardization(
    ds: &MultiLabelDataset,
    params: &StandardizationParams,
) -> MultiLabelDataset {
    MultiLabelDataset {
        name: ds.name.clone(),
        features: ds.features.iter().map(|x| params.transform_row(x)).collect(),
        labels: ds.labels.clone(),
        ids: ds.ids.clone(),
        feature_meta: ds
            .feature_meta
            .iter()
            .map(|m| FeatureMeta::numeric(m.name.clone()))
            .collect(),
        label_names: ds.label_names.clone(),
    }
}

/// Table-style dataset characteristics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub name: String,
    pub instances: usize,
    pub dims: usize,
    pub labels: usize,
    pub label_cardinality: f64,
    pub unique_combinations: usize,
    pub mean_imbalance_ratio: f64,
    /// Labels with no positive instance; excluded from the imbalance mean.
    pub empty_labels: Vec<usize>,
}

pub fn compute_stats(ds: &MultiLabelDataset) -> Result<DatasetStats> {
    if ds.is_empty() {
        return Err(Error::InvalidArgument("statistics of an empty dataset".into()));
    }
    let counts = ds.label_counts();
    let total: usize = counts.iter().sum();
    let unique: HashSet<&Vec<bool>> = ds.labels.iter().collect();
    let max = counts.iter().copied().max().unwrap_or(0);
    let empty_labels: Vec<usize> = (0..counts.len()).filter(|&l| counts[l] == 0).collect();
    let ratios: Vec<f64> = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| max as f64 / c as f64)
        .collect();
    if !empty_labels.is_empty() {
        log::warn!(
            "{}: labels {:?} have no positive instance and are excluded from IR",
            ds.name,
            empty_labels
        );
    }
    let ir = if ratios.is_empty() {
        1.0
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    };
    Ok(DatasetStats {
        name: ds.name.clone(),
        instances: ds.len(),
        dims: ds.dims(),
        labels: ds.n_labels(),
        label_cardinality: total as f64 / ds.len() as f64,
        unique_combinations: unique.len(),
        mean_imbalance_ratio: ir,
        empty_labels,
    })
}

/// Shuffles `0..n` with `seed` and deals the indices into `k` folds whose
/// sizes differ by at most one (the first `n % k` folds get the extra one).
pub fn fold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k}, need at least 2 folds")));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds {n} instances")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut fold = order[start..start + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += size;
    }
    Ok(folds)
}

/// Complement of `fold` in `0..n`, ascending.
pub fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let held: HashSet<usize> = fold.iter().copied().collect();
    (0..n).filter(|i| !held.contains(i)).collect()
}

/// `(train, test)` pairs of a seeded k-fold split.
pub fn kfold_split(
    ds: &MultiLabelDataset,
    k: usize,
    seed: u64,
) -> Result<Vec<(MultiLabelDataset, MultiLabelDataset)>> {
    let folds = fold_indices(ds.len(), k, seed)?;
    Ok(folds
        .iter()
        .map(|test| (ds.subset(&complement(ds.len(), test)), ds.subset(test)))
        .collect())
}

/// One-vs-rest projection onto label `l`.
pub fn br_transform(ds: &MultiLabelDataset, l: usize) -> BinaryDataset {
    assert!(l < ds.n_labels(), "label {l} out of range");
    BinaryDataset {
        features: ds.features.clone(),
        classes: ds.labels.iter().map(|y| usize::from(y[l])).collect(),
        ids: ds.ids.clone(),
        origin: Origin::Br(l),
    }
}

/// One-vs-one data for labels `i < j`: only instances where exactly one of
/// the two labels is relevant; class 1 means label `i`. `None` when no such
/// instance exists.
pub fn lpw_transform(ds: &MultiLabelDataset, i: usize, j: usize) -> Option<BinaryDataset> {
    assert!(i < j && j < ds.n_labels(), "bad label pair ({i}, {j})");
    let rows: Vec<usize> = (0..ds.len())
        .filter(|&r| ds.labels[r][i] != ds.labels[r][j])
        .collect();
    if rows.is_empty() {
        return None;
    }
    Some(BinaryDataset {
        features: rows.iter().map(|&r| ds.features[r].clone()).collect(),
        classes: rows.iter().map(|&r| usize::from(ds.labels[r][i])).collect(),
        ids: rows.iter().map(|&r| ds.ids[r]).collect(),
        origin: Origin::Lpw(i, j),
    })
}

/// All label pairs `(i, j)` with `i < j`, in lexicographic order.
pub fn label_pairs(n_labels: usize) -> Vec<(usize, usize)> {
    (0..n_labels)
        .flat_map(|i| (i + 1..n_labels).map(move |j| (i, j)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy(labels: Vec<Vec<bool>>) -> MultiLabelDataset {
        let n = labels.len();
        let l = labels[0].len();
        MultiLabelDataset::new(
            "toy",
            (0..n).map(|i| vec![i as f64]).collect(),
            labels,
            vec![FeatureMeta::numeric("x")],
            (0..l).map(|i| format!("l{i}")).collect(),
        )
        .unwrap()
    }

    fn bits(rows: &[&[u8]]) -> Vec<Vec<bool>> {
        rows.iter().map(|r| r.iter().map(|&b| b == 1).collect()).collect()
    }

    #[test]
    fn one_hot_middle_category() {
        let ds = MultiLabelDataset::new(
            "n",
            vec![vec![1.0]],
            bits(&[&[1]]),
            vec![FeatureMeta {
                name: "f".into(),
                kind: FeatureKind::Nominal(vec!["a".into(), "b".into(), "c".into()]),
            }],
            vec!["y".into()],
        )
        .unwrap();
        let b = binarize_nominal(&ds);
        assert_eq!(b.features[0], vec![0.0, 1.0, 0.0]);
        assert_eq!(b.dims(), 3);
    }

    #[test]
    fn numeric_only_is_unchanged_by_binarization() {
        let ds = toy(bits(&[&[1, 0], &[0, 1]]));
        assert_eq!(binarize_nominal(&ds), ds);
    }

    #[test]
    fn two_nominals_grow_dims_by_three() {
        let nominal = |name: &str, cats: &[&str]| FeatureMeta {
            name: name.into(),
            kind: FeatureKind::Nominal(cats.iter().map(|s| s.to_string()).collect()),
        };
        let ds = MultiLabelDataset::new(
            "n",
            vec![vec![0.5, 1.0, 2.0]],
            bits(&[&[1]]),
            vec![FeatureMeta::numeric("x"), nominal("p", &["a", "b"]), nominal("q", &["x", "y", "z"])],
            vec!["y".into()],
        )
        .unwrap();
        let b = binarize_nominal(&ds);
        assert_eq!(b.dims(), ds.dims() + 3);
        assert_eq!(b.features[0], vec![0.5, 0.0, 1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn standardization_examples() {
        let mut ds = toy(bits(&[&[1], &[0]]));
        ds.features = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        ds.feature_meta.push(FeatureMeta::numeric("c"));
        let p = fit_standardization(&ds);
        assert_eq!(p.mean, vec![2.0, 5.0]);
        assert_eq!(p.stddev, vec![1.0, 0.0]);
        let s = apply_standardization(&ds, &p);
        assert_eq!(s.features, vec![vec![-1.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(p.transform_row(&[7.0, 9.0]), vec![5.0, 0.0]);
    }

    #[test]
    fn stats_hand_example() {
        let ds = toy(bits(&[&[1, 0], &[1, 1], &[1, 0]]));
        let s = compute_stats(&ds).unwrap();
        assert!((s.label_cardinality - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.unique_combinations, 2);
        assert!((s.mean_imbalance_ratio - 2.0).abs() < 1e-15);
    }

    #[test]
    fn stats_identical_rows() {
        let ds = toy(bits(&[&[0, 1], &[0, 1], &[0, 1]]));
        let s = compute_stats(&ds).unwrap();
        assert_eq!(s.unique_combinations, 1);
        assert_eq!(s.mean_imbalance_ratio, 1.0);
        assert_eq!(s.empty_labels, vec![0]);
    }

    #[test]
    fn kfold_leave_one_out_and_determinism() {
        let ds = toy(vec![vec![true]; 10]);
        let folds = kfold_split(&ds, 10, 3).unwrap();
        assert_eq!(folds.len(), 10);
        assert!(folds.iter().all(|(tr, te)| te.len() == 1 && tr.len() == 9));
        assert_eq!(kfold_split(&ds, 10, 3).unwrap(), folds);
        assert!(kfold_split(&ds, 11, 3).is_err());
    }

    #[test]
    fn kfold_29_into_10() {
        let folds = fold_indices(29, 10, 1).unwrap();
        let mut sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, [2, 3, 3, 3, 3, 3, 3, 3, 3, 3]);
    }

    #[test]
    fn br_projection() {
        let ds = toy(bits(&[&[1, 0], &[0, 0]]));
        assert_eq!(br_transform(&ds, 0).classes, vec![1, 0]);
        assert_eq!(br_transform(&ds, 1).classes, vec![0, 0]);
    }

    #[test]
    fn lpw_filters_to_disagreeing_pairs() {
        let ds = toy(bits(&[&[1, 0], &[0, 1], &[1, 1], &[0, 0]]));
        let b = lpw_transform(&ds, 0, 1).unwrap();
        assert_eq!(b.classes, vec![1, 0]);
        assert_eq!(b.ids, vec![0, 1]);
        let same = toy(bits(&[&[1, 1], &[0, 0]]));
        assert!(lpw_transform(&same, 0, 1).is_none());
        assert_eq!(label_pairs(4).len(), 6);
        assert_eq!(label_pairs(7).len(), 21);
    }

    fn arb_dataset() -> impl Strategy<Value = MultiLabelDataset> {
        (1usize..20, 1usize..4, 2usize..5).prop_flat_map(|(n, d, l)| {
            (
                proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, d), n),
                proptest::collection::vec(proptest::collection::vec(any::<bool>(), l), n),
            )
                .prop_map(move |(x, y)| {
                    MultiLabelDataset::new(
                        "p",
                        x,
                        y,
                        (0..d).map(|i| FeatureMeta::numeric(format!("f{i}"))).collect(),
                        (0..l).map(|i| format!("l{i}")).collect(),
                    )
                    .unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn br_reassembles_labels(ds in arb_dataset()) {
            let cols: Vec<BinaryDataset> = (0..ds.n_labels()).map(|l| br_transform(&ds, l)).collect();
            for r in 0..ds.len() {
                let row: Vec<bool> = cols.iter().map(|c| c.classes[r] == 1).collect();
                prop_assert_eq!(&row, &ds.labels[r]);
            }
        }

        #[test]
        fn lpw_never_keeps_agreeing_rows(ds in arb_dataset()) {
            for (i, j) in label_pairs(ds.n_labels()) {
                if let Some(b) = lpw_transform(&ds, i, j) {
                    for (k, id) in b.ids.iter().enumerate() {
                        let y = &ds.labels[*id];
                        prop_assert!(y[i] != y[j]);
                        prop_assert_eq!(b.classes[k] == 1, y[i]);
                    }
                }
            }
        }

        #[test]
        fn standardized_moments(ds in arb_dataset()) {
            let p = fit_standardization(&ds);
            let s = apply_standardization(&ds, &p);
            let n = s.len() as f64;
            for f in 0..s.dims() {
                if p.stddev[f] == 0.0 { continue; }
                let mean = s.features.iter().map(|x| x[f]).sum::<f64>() / n;
                let var = s.features.iter().map(|x| (x[f] - mean).powi(2)).sum::<f64>() / n;
                prop_assert!(mean.abs() < 1e-9);
                // a column whose spread is rounding noise cannot be rescaled exactly
                if p.stddev[f] > 1e-9 * p.mean[f].abs().max(1.0) {
                    prop_assert!((var - 1.0).abs() < 1e-9, "var {}", var);
                }
            }
        }

        #[test]
        fn stats_identities(ds in arb_dataset()) {
            let s = compute_stats(&ds).unwrap();
            let total: usize = ds.label_counts().iter().sum();
            prop_assert!((s.label_cardinality - total as f64 / ds.len() as f64).abs() < 1e-12);
            prop_assert!(s.mean_imbalance_ratio >= 1.0);
            prop_assert!(s.unique_combinations <= ds.len().min(1 << ds.n_labels()));
            prop_assert!(s.label_cardinality <= ds.n_labels() as f64);
        }

        #[test]
        fn folds_partition(n in 2usize..60, k in 2usize..12, seed in any::<u64>()) {
            prop_assume!(k <= n);
            let folds = fold_indices(n, k, seed).unwrap();
            let mut all: Vec<usize> = folds.concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let max = folds.iter().map(Vec::len).max().unwrap();
            let min = folds.iter().map(Vec::len).min().unwrap();
            prop_assert!(max - min <= 1);
        }
    }
}

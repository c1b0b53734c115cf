//! Library-level integration: data I/O, leakage, the uncorrected path and
//! report round trips.

use std::collections::HashSet;

use rrcml::base::{train_stump, BaseLearner, BaseSpec, TrainedBinaryModel};
use rrcml::datamodel::{
    br_transform, compute_stats, complement, fit_standardization, apply_standardization, fold_indices, load_arff, load_csv,
    synth_generate, write_arff, write_csv, FeatureMeta, MultiLabelDataset, SynthSpec,
};
use rrcml::harness::{emit_reports, parse_runs_csv, run_cell, run_experiment, runs_csv, ExperimentConfig};
use rrcml::multilabel::{apply_thresholds, train_ml, CorrectionKind, MemberModel, TrainOptions, TransformKind};

fn synth(n: usize, labels: usize, seed: u64) -> MultiLabelDataset {
    let spec = SynthSpec { n, labels, ..SynthSpec::default() };
    synth_generate(&spec, seed).unwrap().0
}

fn small_dataset() -> MultiLabelDataset {
    MultiLabelDataset::new(
        "tiny",
        vec![vec![0.5, 1.0], vec![-1.0, 2.0], vec![3.25, 0.0], vec![0.0, -4.0]],
        vec![vec![true, false], vec![true, true], vec![false, false], vec![true, false]],
        vec![FeatureMeta::numeric("a"), FeatureMeta::numeric("b")],
        vec!["x".into(), "y".into()],
    )
    .unwrap()
}

#[test]
fn csv_and_arff_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small_dataset();
    let csv = dir.path().join("tiny.csv");
    write_csv(&ds, &csv).unwrap();
    let back = load_csv(&csv).unwrap();
    assert_eq!(back.features, ds.features);
    assert_eq!(back.labels, ds.labels);
    assert_eq!(back.label_names, ds.label_names);

    let arff = dir.path().join("tiny.arff");
    let labels = dir.path().join("tiny.labels");
    write_arff(&ds, &arff, &labels).unwrap();
    let back = load_arff(&arff, &labels).unwrap();
    assert_eq!(back.features, ds.features);
    assert_eq!(back.labels, ds.labels);
}

#[test]
fn dataset_statistics_by_hand() {
    let s = compute_stats(&small_dataset()).unwrap();
    assert_eq!((s.instances, s.dims, s.labels), (4, 2, 2));
    assert_eq!(s.label_cardinality, 1.0);
    assert_eq!(s.unique_combinations, 3);
    // counts 3 and 1: ratios 3/3 and 3/1
    assert_eq!(s.mean_imbalance_ratio, 2.0);
}

#[test]
fn nothing_from_the_test_fold_reaches_training() {
    let ds = synth(90, 3, 21);
    let folds = fold_indices(ds.len(), 3, 5).unwrap();
    let test = &folds[0];
    let train = complement(ds.len(), test);
    let train_ids: HashSet<usize> = train.iter().map(|&r| ds.ids[r]).collect();
    for transform in [TransformKind::Br, TransformKind::Lpw] {
        for correction in [CorrectionKind::Scm, CorrectionKind::Bmc] {
            let opts = TrainOptions::new(transform, BaseSpec::fixed(BaseLearner::Stump), correction);
            let cell = run_cell(&ds, &train, test, &opts, 3).unwrap();
            let clf = &cell.classifier;
            let mut seen = 0;
            for m in &clf.members {
                for id in m.trained_on.iter().chain(&m.model.archive_ids()) {
                    assert!(train_ids.contains(id), "{transform:?}/{correction:?}: row {id} is not a training row");
                    seen += 1;
                }
            }
            assert!(seen > 0);
            assert!(clf.scut_ids.iter().all(|id| train_ids.contains(id)));
            assert_eq!(cell.predictions.len(), test.len());
        }
    }
}

#[test]
fn uncorrected_br_is_plain_binary_relevance() {
    let ds = synth(80, 3, 8);
    let ds = apply_standardization(&ds, &fit_standardization(&ds));
    let opts = TrainOptions::new(TransformKind::Br, BaseSpec::fixed(BaseLearner::Stump), CorrectionKind::None);
    let clf = train_ml(&ds, &opts, 4).unwrap();
    let stumps: Vec<_> = (0..3).map(|l| train_stump(&br_transform(&ds, l)).unwrap()).collect();
    for (m, stump) in clf.members.iter().zip(&stumps) {
        assert!(matches!(m.model, MemberModel::Bare(_)));
        assert_eq!(m.model.beta(), None);
        for x in &ds.features {
            assert_eq!(m.model.support(x), stump.support(x));
        }
    }
    for x in &ds.features {
        let omega: Vec<f64> = stumps.iter().map(|s| s.support(x).nu1).collect();
        assert_eq!(clf.soft_output(x), omega);
        assert_eq!(clf.predict(x), apply_thresholds(&omega, &clf.thresholds));
    }
}

#[test]
fn reports_round_trip_through_runs_csv() {
    let cfg = ExperimentConfig::from_json(
        r#"{
            "datasets": [
                {"name": "a", "seed": 1, "synth": {"n": 60, "labels": 3}},
                {"name": "b", "seed": 2, "synth": {"n": 60, "labels": 3}}
            ],
            "base_classifiers": [{"learner": {"kind": "naive_bayes"}}],
            "transforms": ["BR"],
            "outer_folds": 2,
            "beta_grid": [2.0, 6.0],
            "seed": 3
        }"#,
    )
    .unwrap();
    let out = run_experiment(&cfg).unwrap();
    assert!(out.failures.is_empty());
    assert_eq!(out.records.len(), 2 * 3 * 2);
    let parsed = parse_runs_csv(&runs_csv(&out.records), "runs.csv".as_ref()).unwrap();
    assert_eq!(runs_csv(&parsed), runs_csv(&out.records));

    let dir = tempfile::tempdir().unwrap();
    let a = emit_reports(&out.records, &[], Some(&cfg), &dir.path().join("a")).unwrap();
    let b = emit_reports(&parsed, &[], None, &dir.path().join("b")).unwrap();
    assert_eq!(std::fs::read(&a.rank_tables[0]).unwrap(), std::fs::read(&b.rank_tables[0]).unwrap());
    assert!(a.radar.exists());
}

#[test]
fn empty_record_set_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("none");
    assert!(emit_reports(&[], &[], None, &out).is_err());
    assert!(!out.exists() || std::fs::read_dir(&out).unwrap().next().is_none());
}

//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.
//!
//! `cargo test --test acceptance` (add `--release` for realistic timings).

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use rrcml::base::{BaseLearner, ConstantModel, SharedModel, SupportPair};
use rrcml::bmc::{bmc_decide, build_bmc, BmcModel};
use rrcml::datamodel::{br_transform, synth_generate, BinaryDataset, SynthSpec};
use rrcml::harness::{emit_reports, run_experiment, ExperimentConfig};
use rrcml::metrics::{evaluate_all, Criterion};
use rrcml::multilabel::CorrectionKind;
use rrcml::rrc::{beta_params, rrc_probability, RrcProbabilities};
use rrcml::scm::{build_scm, local_confusion, ArchivePoint, ScmModel, ValidationArchive, DEFAULT_KAPPA};
use rrcml::stats::{friedman_test, holm_adjust, wilcoxon_signed_rank, Direction, ResultMatrix};

type Outcome = (bool, String);
type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rrc(nu0: f64) -> RrcProbabilities {
    rrc_probability(SupportPair::new(nu0, 1.0 - nu0)).unwrap()
}

// 1 ------------------------------------------------------------------------

fn rrc_normalization() -> Outcome {
    let mut r = rng(1);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let nu0: f64 = r.random();
        let p = rrc(nu0);
        worst = worst.max((p.p0 + p.p1 - 1.0).abs());
    }
    let t = start.elapsed();
    (worst < 1e-6 && t < Duration::from_secs(5), format!("max |p0+p1-1| = {worst:.2e} (< 1e-6), {t:.2?} (< 5 s)"))
}

// 2 ------------------------------------------------------------------------

fn rrc_oracle() -> Outcome {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/rrc_simpson.csv");
    let text = std::fs::read_to_string(path).expect("Simpson fixture");
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        let p = rrc(v[0]);
        worst = worst.max((p.p0 - v[1]).abs()).max((p.p1 - v[2]).abs());
        rows += 1;
    }
    let half = rrc(0.5);
    let exact = half.p0 == 0.5 && half.p1 == 0.5;
    (
        rows == 100 && worst < 1e-6 && exact,
        format!("{rows} pairs, max deviation {worst:.2e} (< 1e-6); nu=(0.5,0.5) -> ({}, {})", half.p0, half.p1),
    )
}

// 3 ------------------------------------------------------------------------

fn rrc_model_equivalence() -> Outcome {
    let mut r = rng(3);
    let draws = 100_000;
    let mut worst_z: f64 = 0.0;
    for _ in 0..20 {
        let nu0 = r.random_range(0.001..0.999);
        let bp = beta_params(SupportPair::new(nu0, 1.0 - nu0));
        for (c, nu) in [(0, nu0), (1, 1.0 - nu0)] {
            let (l, m) = bp.class(c);
            let dist = Beta::new(l, m).unwrap();
            let mean = (0..draws).map(|_| dist.sample(&mut r)).sum::<f64>() / draws as f64;
            let se = (l * m / ((l + m).powi(2) * (l + m + 1.0)) / draws as f64).sqrt();
            worst_z = worst_z.max((mean - nu).abs() / se);
        }
    }
    (worst_z <= 3.0, format!("40 class supports over 20 nu, max |mean-nu|/SE = {worst_z:.2} (<= 3)"))
}

// 4 ------------------------------------------------------------------------

fn binary_synth(n: usize, seed: u64) -> BinaryDataset {
    let spec = SynthSpec { n, ..SynthSpec::default() };
    br_transform(&synth_generate(&spec, seed).unwrap().0, 0)
}

fn scm_beta_zero() -> Outcome {
    let ds = binary_synth(120, 4);
    let model = build_scm(&BaseLearner::Stump, &ds, 5.0, 4).unwrap();
    let model = ScmModel::new(Arc::clone(&model.base), model.archive.with_beta(0.0).unwrap());
    let points = model.archive.points();
    let n = points.len() as f64;
    let mut global = [[0.0; 2]; 2];
    for p in points {
        global[p.class][0] += p.rrc.p0 / n;
        global[p.class][1] += p.rrc.p1 / n;
    }
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let z: Vec<f64> = (0..ds.dims()).map(|_| r.random_range(-10.0..10.0)).collect();
        let local = local_confusion(&z, &model);
        for (row, want) in local.eps.iter().zip(&global) {
            for (got, w) in row.iter().zip(want) {
                worst = worst.max((got - (w + DEFAULT_KAPPA)).abs());
            }
        }
    }
    (worst < 1e-9, format!("10 queries, max |local - global| = {worst:.2e} (< 1e-9)"))
}

// 5 ------------------------------------------------------------------------

fn posterior_normalization() -> Outcome {
    let mut r = rng(5);
    let base: SharedModel = Arc::new(ConstantModel {
        support: SupportPair::new(0.5, 0.5),
    });
    let (mut worst_scm, mut worst_bmc): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let d = r.random_range(1..5);
        let scale = if r.random_bool(0.2) { 1e3 } else { 3.0 };
        let n = r.random_range(2..30);
        let points: Vec<ArchivePoint> = (0..n)
            .map(|k| {
                let p0: f64 = r.random();
                ArchivePoint {
                    x: (0..d).map(|_| r.random_range(-3.0..3.0)).collect(),
                    class: if k < 2 { k } else { r.random_range(0..2) },
                    rrc: RrcProbabilities { p0, p1: 1.0 - p0 },
                    id: k,
                }
            })
            .collect();
        let archive = ValidationArchive::new(points, r.random_range(0.0..20.0)).unwrap();
        let z: Vec<f64> = (0..d).map(|_| r.random_range(-scale..scale)).collect();
        let sq = archive.sq_distances(&z);
        let q0: f64 = r.random();
        let scm = ScmModel::new(Arc::clone(&base), archive.clone()).posterior_from(RrcProbabilities { p0: q0, p1: 1.0 - q0 }, &sq);
        worst_scm = worst_scm.max((scm.nu0 + scm.nu1 - 1.0).abs());
        let bmc = BmcModel::new(Arc::clone(&base), archive).posterior_from(r.random_range(0..2), &sq).unwrap();
        worst_bmc = worst_bmc.max((bmc.nu0 + bmc.nu1 - 1.0).abs());
    }
    (
        worst_scm < 1e-9 && worst_bmc < 1e-9,
        format!("1000 configurations, max |sum-1|: SCM {worst_scm:.2e}, BMC {worst_bmc:.2e} (< 1e-9)"),
    )
}

// 6 ------------------------------------------------------------------------

fn separable_point(r: &mut ChaCha8Rng, class: usize) -> Vec<f64> {
    let c = if class == 0 { -4.0 } else { 4.0 };
    vec![c + r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]
}

fn bmc_perfect_base() -> Outcome {
    let mut r = rng(6);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 0..200 {
        xs.push(separable_point(&mut r, k % 2));
        ys.push(k % 2);
    }
    let ds = BinaryDataset::new(xs, ys).unwrap();
    let model = build_bmc(&BaseLearner::Knn { k: 1 }, &ds, 5.0, 6).unwrap();
    let points = model.archive.points();
    let mass = points.iter().map(|p| p.rrc.get(p.class)).sum::<f64>() / points.len() as f64;
    let balanced = (model.priors[0] - model.priors[1]).abs() < 1e-12;
    let mut agree = 0;
    for q in 0..500 {
        let x = separable_point(&mut r, q % 2);
        if bmc_decide(&x, &model).unwrap() == model.base.decide(&x) {
            agree += 1;
        }
    }
    (
        mass > 0.999 && balanced && agree == 500,
        format!("archive mass on true class {mass:.6} (> 0.999), priors {:?}, agreement {agree}/500", model.priors),
    )
}

// 7 ------------------------------------------------------------------------

fn ratio(num: f64, den: f64, empty: f64) -> f64 {
    if den == 0.0 {
        empty
    } else {
        num / den
    }
}

/// Straight from the definitions: counts over the selected (row, label) cells.
fn brute_metrics(pred: &[Vec<bool>], truth: &[Vec<bool>]) -> [f64; 11] {
    let n = pred.len();
    let l = truth[0].len();
    let counts = |cells: &[(usize, usize)]| {
        let mut c = [0.0; 3]; // tp, fp, fn
        for &(i, j) in cells {
            match (pred[i][j], truth[i][j]) {
                (true, true) => c[0] += 1.0,
                (true, false) => c[1] += 1.0,
                (false, true) => c[2] += 1.0,
                _ => {}
            }
        }
        c
    };
    let scores = |c: [f64; 3]| {
        [ratio(c[1], c[0] + c[1], 0.0), ratio(c[2], c[0] + c[2], 0.0), ratio(2.0 * c[0], 2.0 * c[0] + c[1] + c[2], 1.0)]
    };
    let mut out = [0.0; 11];
    let all: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..l).map(move |j| (i, j))).collect();
    out[0] = all.iter().filter(|&&(i, j)| pred[i][j] != truth[i][j]).count() as f64 / (n * l) as f64;
    out[1] = (0..n).filter(|&i| pred[i] != truth[i]).count() as f64 / n as f64;
    for i in 0..n {
        let s = scores(counts(&(0..l).map(|j| (i, j)).collect::<Vec<_>>()));
        for k in 0..3 {
            out[2 + k] += s[k] / n as f64;
        }
    }
    for j in 0..l {
        let s = scores(counts(&(0..n).map(|i| (i, j)).collect::<Vec<_>>()));
        for k in 0..3 {
            out[5 + k] += s[k] / l as f64;
        }
    }
    let s = scores(counts(&all));
    out[8..].copy_from_slice(&s);
    out
}

fn metrics_oracle() -> Outcome {
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = r.random_range(1..=8);
        let l = r.random_range(1..=4);
        let mut gen = || (0..n).map(|_| (0..l).map(|_| r.random_bool(0.4)).collect::<Vec<bool>>()).collect::<Vec<_>>();
        let pred = gen();
        let truth = gen();
        let got = evaluate_all(&pred, &truth).unwrap().values();
        let want = brute_metrics(&pred, &truth);
        for (g, w) in got.iter().zip(&want) {
            worst = worst.max((g - w).abs());
        }
    }
    let rep = evaluate_all(&[vec![true, true], vec![false, false]], &[vec![true, false], vec![false, true]]).unwrap();
    let example = rep.mi_f1 == 0.5 && rep.ma_f1 == 0.5 && rep.mi_fdr == 0.5 && rep.mi_fnr == 0.5;
    (
        worst < 1e-12 && example,
        format!("1000 cases, max deviation {worst:.2e} (< 1e-12); 2x2 example miF1={} maF1={}", rep.mi_f1, rep.ma_f1),
    )
}

// 8 ------------------------------------------------------------------------

/// Two-sided p by listing every sign assignment of the tie-averaged ranks.
fn enumerated_wilcoxon(d: &[f64]) -> f64 {
    let nz: Vec<f64> = d.iter().copied().filter(|v| *v != 0.0).collect();
    let n = nz.len();
    if n == 0 {
        return 1.0;
    }
    let rank = |v: f64| {
        let below = nz.iter().filter(|u| u.abs() < v.abs()).count() as f64;
        let same = nz.iter().filter(|u| u.abs() == v.abs()).count() as f64;
        below + (same + 1.0) / 2.0
    };
    let ranks: Vec<f64> = nz.iter().map(|&v| rank(v)).collect();
    let total: f64 = ranks.iter().sum();
    let plus: f64 = nz.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let w = plus.min(total - plus);
    let hits = (0u32..1 << n)
        .filter(|mask| (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum::<f64>() <= w + 1e-9)
        .count();
    (2.0 * hits as f64 / f64::from(1u32 << n)).min(1.0)
}

fn wilcoxon_exactness() -> Outcome {
    let mut r = rng(8);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 1..=12 {
        for _ in 0..25 {
            // integer-valued draws force ties and zeros
            let d: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(-6i32..=6))).collect();
            let got = wilcoxon_signed_rank(&d, &vec![0.0; n]).unwrap().p;
            worst = worst.max((got - enumerated_wilcoxon(&d)).abs());
            cases += 1;
        }
    }
    let p5 = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5]).unwrap().p;
    (
        worst < 1e-10 && p5 == 0.0625,
        format!("{cases} cases with n <= 12, max deviation {worst:.2e} (< 1e-10); d=(1..5) p={p5}"),
    )
}

// 9 ------------------------------------------------------------------------

fn friedman_holm() -> Outcome {
    let same = ResultMatrix::from_values(vec![vec![0.3; 4]; 6], Direction::HigherBetter).unwrap();
    let f = friedman_test(&same).unwrap();
    let holm = holm_adjust(&[0.01, 0.04, 0.03]);
    let holm_ok = holm.iter().zip([0.03, 0.06, 0.06]).all(|(a, b)| (a - b).abs() < 1e-12);
    let mut r = rng(9);
    let mut bad_rows = 0;
    for _ in 0..100 {
        let d = r.random_range(2..12);
        let a = r.random_range(2..7);
        let values = (0..d).map(|_| (0..a).map(|_| f64::from(r.random_range(0..4)) / 4.0).collect()).collect();
        let m = ResultMatrix::from_values(values, if r.random_bool(0.5) { Direction::LowerBetter } else { Direction::HigherBetter }).unwrap();
        let want = (a * (a + 1)) as f64 / 2.0;
        bad_rows += m.rank_rows().iter().filter(|row| (row.iter().sum::<f64>() - want).abs() > 1e-12).count();
    }
    (
        f.statistic == 0.0 && f.p == 1.0 && holm_ok && bad_rows == 0,
        format!("identical columns: Q={} p={}; Holm {holm:?}; rank rows off A(A+1)/2: {bad_rows}", f.statistic, f.p),
    )
}

// 10 -----------------------------------------------------------------------

fn lpw_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{
            "datasets": [{{"name": "synth-lpw", "seed": {seed},
                           "synth": {{"n": 1000, "d": 4, "labels": 5, "modes": 2}}}}],
            "base_classifiers": [{{"learner": {{"kind": "stump"}}}}],
            "transforms": ["LPW"],
            "seed": {seed}
        }}"#
    ))
    .unwrap()
}

fn end_to_end_direction() -> Outcome {
    let start = Instant::now();
    let mut wins: BTreeMap<CorrectionKind, usize> = BTreeMap::new();
    let mut detail = Vec::new();
    for seed in 0..10 {
        let out = run_experiment(&lpw_config(seed)).unwrap();
        assert!(out.failures.is_empty(), "failures: {:?}", out.failures);
        let mean = |c: CorrectionKind| {
            let v: Vec<f64> = out.records.iter().filter(|r| r.correction == c).map(|r| r.metrics.ma_f1).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let none = mean(CorrectionKind::None);
        let (bmc, scm) = (mean(CorrectionKind::Bmc), mean(CorrectionKind::Scm));
        *wins.entry(CorrectionKind::Bmc).or_default() += usize::from(bmc >= none);
        *wins.entry(CorrectionKind::Scm).or_default() += usize::from(scm >= none);
        detail.push(format!("{none:.3}/{bmc:.3}/{scm:.3}"));
    }
    let t = start.elapsed();
    let (b, s) = (wins[&CorrectionKind::Bmc], wins[&CorrectionKind::Scm]);
    println!("       per-seed MaF1 none/BMC/SCM: {}", detail.join(" "));
    (
        s >= 7 && b >= 7 && t < Duration::from_secs(600),
        format!("seeds with MaF1 >= none: SCM {s}/10, BMC {b}/10 (>= 7 each); {t:.1?} (< 10 min)"),
    )
}

// 11 / 12 ------------------------------------------------------------------

fn sweep_config() -> ExperimentConfig {
    ExperimentConfig::from_json(
        r#"{
            "datasets": [
                {"name": "s1", "seed": 1, "synth": {"n": 150, "labels": 3}},
                {"name": "s2", "seed": 2, "synth": {"n": 150, "labels": 4, "dependency": 0.6}},
                {"name": "s3", "seed": 3, "synth": {"n": 150, "labels": 3, "modes": 2, "noise": 0.8}},
                {"name": "s4", "seed": 4, "synth": {"n": 150, "labels": 3, "imbalance": 0.25}}
            ],
            "base_classifiers": [{"learner": {"kind": "stump"}}, {"learner": {"kind": "naive_bayes"}}],
            "outer_folds": 3,
            "seed": 11
        }"#,
    )
    .unwrap()
}

fn report_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_string_lossy();
            name == "runs.csv" || name.starts_with("rank_table")
        })
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn run_sweep(out: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut cfg = sweep_config();
    cfg.output = out.to_path_buf();
    let outcome = run_experiment(&cfg).unwrap();
    assert!(outcome.failures.is_empty(), "failures: {:?}", outcome.failures);
    emit_reports(&outcome.records, &outcome.failures, Some(&cfg), out).unwrap();
    report_bytes(out)
}

fn determinism(first: &Path, second: &Path) -> Outcome {
    let a = run_sweep(first);
    let b = run_sweep(second);
    let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    (
        a.len() > 1 && a.keys().eq(b.keys()) && differing.is_empty(),
        format!("{} files compared (runs.csv + rank tables), {} differ", a.len(), differing.len()),
    )
}

fn table_structure(dir: &Path) -> Outcome {
    let names: Vec<&str> = Criterion::ALL.iter().map(|c| c.name()).collect();
    let mut problems = Vec::new();
    let mut tables = 0;
    for (file, bytes) in report_bytes(dir).into_iter().filter(|(f, _)| f.ends_with(".txt")) {
        tables += 1;
        let text = String::from_utf8(bytes).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        let cells = |l: &str| l.split('|').skip(1).map(str::trim).map(String::from).collect::<Vec<_>>();
        let found: Vec<String> = lines.iter().filter(|l| l.starts_with("Nam.")).flat_map(|l| cells(l)).filter(|c| !c.is_empty()).collect();
        if found != names {
            problems.push(format!("{file}: criteria {found:?}"));
        }
        let blocks = lines.iter().filter(|l| l.starts_with("Nam.")).count();
        for label in ["Frd.", "Rank", "1", "2"] {
            let rows = lines.iter().filter(|l| l.split_whitespace().next() == Some(label)).count();
            if rows != blocks || blocks != 3 {
                problems.push(format!("{file}: {rows} {label} rows over {blocks} blocks"));
            }
        }
        for l in lines.iter().filter(|l| l.starts_with("Rank")) {
            for seg in cells(l).iter().filter(|c| !c.is_empty()) {
                let ranks: Vec<f64> = seg.split_whitespace().map(|v| v.parse().unwrap()).collect();
                let sum: f64 = ranks.iter().sum();
                if ranks.len() != 3 || format!("{sum:.3}") != "6.000" {
                    problems.push(format!("{file}: rank row {seg:?}"));
                }
            }
        }
    }
    (
        tables == 4 && problems.is_empty(),
        format!("{tables} tables, 11 criteria in 3 sections, rank rows summing to 6.000; problems: {problems:?}"),
    )
}

// ---------------------------------------------------------------------------

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let (first, second) = (tmp.path().join("a"), tmp.path().join("b"));
    let criteria: Vec<(&str, Check)> = vec![
        ("RRC normalization", Box::new(rrc_normalization)),
        ("RRC oracle equivalence", Box::new(rrc_oracle)),
        ("RRC model equivalence", Box::new(rrc_model_equivalence)),
        ("SCM beta->0 limit", Box::new(scm_beta_zero)),
        ("SCM/BMC normalization", Box::new(posterior_normalization)),
        ("BMC perfect-base identity", Box::new(bmc_perfect_base)),
        ("Metrics oracle", Box::new(metrics_oracle)),
        ("Wilcoxon exactness", Box::new(wilcoxon_exactness)),
        ("Friedman/Holm", Box::new(friedman_holm)),
        ("LPW end-to-end direction", Box::new(end_to_end_direction)),
        ("Determinism", Box::new(|| determinism(&first, &second))),
        ("Rank-table structure", Box::new(|| table_structure(&first))),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(o) => o,
            Err(e) => (false, format!("panicked: {}", e.downcast_ref::<String>().cloned().unwrap_or_default())),
        };
        println!("[{}] {:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
        if !pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{ExperimentConfig, RunFailure, RunRecord};
use crate::metrics::{Criterion, MetricReport};
use crate::multilabel::{CorrectionKind, TransformKind};
use crate::stats::{format_rank_tables, rank_tables_csv, two_step_pipeline, RankTable, ResultMatrix, DEFAULT_ALPHA};
use crate::{Error, Result};

const KEY_COLUMNS: [&str; 5] = ["dataset", "transform", "base", "correction", "fold"];
const BETA_COLUMNS: [&str; 3] = ["beta_mean", "beta_min", "beta_max"];

/// Methods compared in one table: every correction of one transform and
/// base learner.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonGroup {
    pub transform: TransformKind,
    pub base: String,
    pub methods: Vec<CorrectionKind>,
    /// One matrix per criterion in report order.
    pub matrices: Vec<ResultMatrix>,
}

impl ComparisonGroup {
    pub fn slug(&self) -> String {
        let base: String = self.base.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
        format!("{}_{}", self.transform.name(), base)
    }
}

fn method_order(c: CorrectionKind) -> u8 {
    match c {
        CorrectionKind::None => 0,
        CorrectionKind::Bmc => 1,
        CorrectionKind::Scm => 2,
    }
}

fn method_label(c: CorrectionKind) -> &'static str {
    match c {
        CorrectionKind::None => "none",
        CorrectionKind::Bmc => "BMC",
        CorrectionKind::Scm => "SCM",
    }
}

/// Fold means per dataset and method. Datasets are ordered by name and
/// methods as none, BMC, SCM; the input order does not matter.
pub fn aggregate(records: &[RunRecord]) -> Result<Vec<ComparisonGroup>> {
    if records.is_empty() {
        return Err(Error::MissingCells("no run records".into()));
    }
    type Cell = BTreeMap<usize, [f64; 11]>;
    type Methods = BTreeMap<(String, u8), (CorrectionKind, Cell)>;
    let mut groups: BTreeMap<(TransformKind, String), Methods> = BTreeMap::new();
    for r in records {
        let cell = groups
            .entry((r.transform, r.base.clone()))
            .or_default()
            .entry((r.dataset.clone(), method_order(r.correction)))
            .or_insert_with(|| (r.correction, BTreeMap::new()));
        if cell.1.insert(r.fold, r.metrics.values()).is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate record for {} {} {} {} fold {}",
                r.dataset,
                r.transform.name(),
                r.base,
                r.correction.name(),
                r.fold
            )));
        }
    }

    let mut out = Vec::new();
    let mut gaps = Vec::new();
    for ((transform, base), cells) in groups {
        let datasets: BTreeSet<&String> = cells.keys().map(|k| &k.0).collect();
        let methods: BTreeSet<(u8, CorrectionKind)> = cells.iter().map(|(k, v)| (k.1, v.0)).collect();
        let methods: Vec<CorrectionKind> = methods.into_iter().map(|m| m.1).collect();
        let mut means = vec![vec![[0.0; 11]; methods.len()]; datasets.len()];
        for (d, name) in datasets.iter().enumerate() {
            for (a, m) in methods.iter().enumerate() {
                match cells.get(&((*name).clone(), method_order(*m))) {
                    Some((_, folds)) => {
                        let n = folds.len() as f64;
                        for v in folds.values() {
                            for (acc, x) in means[d][a].iter_mut().zip(v) {
                                *acc += x;
                            }
                        }
                        means[d][a].iter_mut().for_each(|x| *x /= n);
                    }
                    None => gaps.push(format!("{name} {} {base} {}", transform.name(), m.name())),
                }
            }
        }
        if methods.len() < 2 {
            gaps.push(format!("{} {base}: only one correction, nothing to compare", transform.name()));
            continue;
        }
        let matrices = Criterion::ALL
            .iter()
            .enumerate()
            .map(|(c, crit)| {
                ResultMatrix::new(
                    crit.name(),
                    datasets.iter().map(|s| s.to_string()).collect(),
                    methods.iter().map(|m| method_label(*m).to_string()).collect(),
                    means.iter().map(|row| row.iter().map(|v| v[c]).collect()).collect(),
                    crit.direction(),
                )
            })
            .collect::<Result<_>>()?;
        out.push(ComparisonGroup {
            transform,
            base,
            methods,
            matrices,
        });
    }
    if !gaps.is_empty() {
        return Err(Error::MissingCells(gaps.join("; ")));
    }
    Ok(out)
}

/// Runs in a stable order with every float printed round-trip exact. Wall
/// times are left out so identical runs give identical files.
pub fn runs_csv(records: &[RunRecord]) -> String {
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.dataset, a.transform, &a.base, method_order(a.correction), a.fold).cmp(&(&b.dataset, b.transform, &b.base, method_order(b.correction), b.fold))
    });
    let mut out = KEY_COLUMNS.join(",");
    for c in Criterion::ALL {
        let _ = write!(out, ",{}", c.name());
    }
    let _ = writeln!(out, ",{}", BETA_COLUMNS.join(","));
    for r in sorted {
        let _ = write!(out, "{},{},{},{},{}", r.dataset, r.transform.name(), r.base, r.correction.name(), r.fold);
        for v in r.metrics.values() {
            let _ = write!(out, ",{v}");
        }
        match r.beta {
            Some(b) => {
                let _ = writeln!(out, ",{},{},{}", b[0], b[1], b[2]);
            }
            None => out.push_str(",,,\n"),
        }
    }
    out
}

fn timings_csv(records: &[RunRecord]) -> String {
    let mut out = format!("{},wall_time_s\n", KEY_COLUMNS.join(","));
    for r in records {
        let _ = writeln!(out, "{},{},{},{},{},{:.3}", r.dataset, r.transform.name(), r.base, r.correction.name(), r.fold, r.wall_time_s);
    }
    out
}

fn failures_csv(failures: &[RunFailure]) -> String {
    let mut out = format!("{},error\n", KEY_COLUMNS.join(","));
    for f in failures {
        let msg = f.error.replace(['"', '\n'], " ");
        let _ = writeln!(out, "{},{},{},{},{},\"{msg}\"", f.dataset, f.transform.name(), f.base, f.correction.name(), f.fold);
    }
    out
}

/// Reads a file written by [`runs_csv`]. Wall times are not stored there
/// and come back as 0.
pub fn parse_runs_csv(text: &str, path: &Path) -> Result<Vec<RunRecord>> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let expected: Vec<&str> = KEY_COLUMNS
        .iter()
        .copied()
        .chain(Criterion::ALL.iter().map(|c| c.name()))
        .chain(BETA_COLUMNS)
        .collect();
    if cols != expected {
        return Err(err(1, format!("unexpected header, expected {}", expected.join(","))));
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != expected.len() {
            return Err(err(line_no, format!("{} fields, expected {}", f.len(), expected.len())));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| err(line_no, format!("{s:?}: {e}")));
        let transform = match f[1] {
            "BR" => TransformKind::Br,
            "LPW" => TransformKind::Lpw,
            other => return Err(err(line_no, format!("unknown transform {other:?}"))),
        };
        let correction = match f[3] {
            "none" => CorrectionKind::None,
            "scm" => CorrectionKind::Scm,
            "bmc" => CorrectionKind::Bmc,
            other => return Err(err(line_no, format!("unknown correction {other:?}"))),
        };
        let fold = f[4].trim().parse::<usize>().map_err(|e| err(line_no, e.to_string()))?;
        let mut values = [0.0; 11];
        for (v, s) in values.iter_mut().zip(&f[5..16]) {
            *v = num(s)?;
        }
        let beta = if f[16].is_empty() {
            None
        } else {
            Some([num(f[16])?, num(f[17])?, num(f[18])?])
        };
        records.push(RunRecord {
            dataset: f[0].to_string(),
            transform,
            base: f[2].to_string(),
            correction,
            fold,
            metrics: MetricReport::from_values(values),
            beta,
            wall_time_s: 0.0,
        });
    }
    Ok(records)
}

/// Average ranks per criterion with one column per method, for radar plots.
fn radar_csv(groups: &[ComparisonGroup], tables: &[Vec<RankTable>]) -> String {
    let width = groups.iter().map(|g| g.methods.len()).max().unwrap_or(0);
    let mut out = String::from("transform,base,criterion");
    for i in 1..=width {
        let _ = write!(out, ",method{i},rank{i}");
    }
    out.push('\n');
    for (g, ts) in groups.iter().zip(tables) {
        for t in ts {
            let _ = write!(out, "{},{},{}", g.transform.name(), g.base, t.criterion);
            for i in 0..width {
                match (t.methods.get(i), t.avg_ranks.get(i)) {
                    (Some(m), Some(r)) => {
                        let _ = write!(out, ",{m},{r:.3}");
                    }
                    _ => out.push_str(",,"),
                }
            }
            out.push('\n');
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReportFiles {
    pub runs: PathBuf,
    pub rank_tables: Vec<PathBuf>,
    pub radar: PathBuf,
    pub other: Vec<PathBuf>,
}

/// Writes `runs.csv`, a text and CSV rank table per comparison group,
/// `radar.csv`, `timings.csv`, `failures.csv` and (when given) the config
/// echo. Everything is computed before the first file is written, so an
/// error leaves the directory untouched.
pub fn emit_reports(records: &[RunRecord], failures: &[RunFailure], config: Option<&ExperimentConfig>, out: &Path) -> Result<ReportFiles> {
    if records.is_empty() {
        return Err(Error::MissingCells("no successful runs to report".into()));
    }
    let groups = aggregate(records)?;
    let tables: Vec<Vec<RankTable>> = groups
        .iter()
        .map(|g| two_step_pipeline(&g.matrices, DEFAULT_ALPHA))
        .collect::<Result<_>>()?;

    let mut files: Vec<(PathBuf, String)> = vec![
        (out.join("runs.csv"), runs_csv(records)),
        (out.join("radar.csv"), radar_csv(&groups, &tables)),
        (out.join("timings.csv"), timings_csv(records)),
        (out.join("failures.csv"), failures_csv(failures)),
    ];
    let mut rank_tables = Vec::new();
    for (g, ts) in groups.iter().zip(&tables) {
        let title = format!(
            "{} transformation, base classifier {}: average ranks and Holm-adjusted p-values of paired comparisons\n",
            g.transform.name(),
            g.base
        );
        let txt = out.join(format!("rank_table_{}.txt", g.slug()));
        let csv = out.join(format!("rank_table_{}.csv", g.slug()));
        files.push((txt.clone(), format!("{title}\n{}", format_rank_tables(ts))));
        files.push((csv.clone(), rank_tables_csv(ts)));
        rank_tables.extend([txt, csv]);
    }
    if let Some(cfg) = config {
        files.push((out.join("config.json"), serde_json::to_string_pretty(cfg)? + "\n"));
    }

    fs::create_dir_all(out)?;
    for (path, body) in &files {
        fs::write(path, body)?;
    }
    let mut other: Vec<PathBuf> = vec![out.join("timings.csv"), out.join("failures.csv")];
    if config.is_some() {
        other.push(out.join("config.json"));
    }
    Ok(ReportFiles {
        runs: out.join("runs.csv"),
        rank_tables,
        radar: out.join("radar.csv"),
        other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(dataset: &str, correction: CorrectionKind, fold: usize, v: f64) -> RunRecord {
        RunRecord {
            dataset: dataset.into(),
            transform: TransformKind::Br,
            base: "stump".into(),
            correction,
            fold,
            metrics: MetricReport::from_values([v; 11]),
            beta: (correction != CorrectionKind::None).then_some([2.0, 2.0, 2.0]),
            wall_time_s: 0.25,
        }
    }

    fn toy() -> Vec<RunRecord> {
        vec![
            rec("a", CorrectionKind::None, 0, 0.1),
            rec("a", CorrectionKind::None, 1, 0.3),
            rec("a", CorrectionKind::Scm, 0, 0.2),
            rec("a", CorrectionKind::Scm, 1, 0.6),
        ]
    }

    #[test]
    fn fold_means() {
        let g = aggregate(&toy()).unwrap();
        assert_eq!(g.len(), 1);
        let m = &g[0].matrices[0];
        assert_eq!(m.methods, vec!["none", "SCM"]);
        assert_eq!(m.values.len(), 1);
        assert!((m.values[0][0] - 0.2).abs() < 1e-15 && (m.values[0][1] - 0.4).abs() < 1e-15);
        assert_eq!(g[0].matrices.len(), 11);
    }

    #[test]
    fn order_free() {
        let mut r = toy();
        r.reverse();
        assert_eq!(aggregate(&r).unwrap(), aggregate(&toy()).unwrap());
        assert_eq!(runs_csv(&r), runs_csv(&toy()));
    }

    #[test]
    fn gaps_are_listed() {
        let mut r = toy();
        r.push(rec("b", CorrectionKind::None, 0, 0.5));
        match aggregate(&r) {
            Err(Error::MissingCells(msg)) => assert!(msg.contains("b BR stump scm")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn runs_round_trip() {
        let mut r = toy();
        r[0].metrics.hamming = 1.0 / 3.0;
        let text = runs_csv(&r);
        let back = parse_runs_csv(&text, Path::new("runs.csv")).unwrap();
        let mut expect = r.clone();
        expect.iter_mut().for_each(|x| x.wall_time_s = 0.0);
        assert_eq!(back, expect);
        assert!(parse_runs_csv("a,b\n", Path::new("x")).is_err());
    }

    #[test]
    fn empty_records_write_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("reports");
        assert!(emit_reports(&[], &[], None, &out).is_err());
        assert!(!out.exists());
    }

    #[test]
    fn report_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = toy();
        r.extend([
            rec("b", CorrectionKind::None, 0, 0.5),
            rec("b", CorrectionKind::Scm, 0, 0.4),
        ]);
        let files = emit_reports(&r, &[], None, dir.path()).unwrap();
        let radar = fs::read_to_string(&files.radar).unwrap();
        assert_eq!(radar.lines().count(), 1 + 11);
        let text = fs::read_to_string(&files.rank_tables[0]).unwrap();
        assert_eq!(text.matches("Nam.").count(), 3);
        assert!(fs::read_to_string(&files.runs).unwrap().starts_with("dataset,transform,base,correction,fold,Hamming"));
    }
}

//! Average ranks, Friedman test, Wilcoxon signed-rank test, Holm step-down
//! adjustment and the rank tables built from them.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    LowerBetter,
    HigherBetter,
}

/// Largest sample size handled by the exact Wilcoxon distribution.
pub const WILCOXON_EXACT_MAX: usize = 20;

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Scores of `A` algorithms on `D` datasets for one criterion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultMatrix {
    pub criterion: String,
    pub datasets: Vec<String>,
    pub methods: Vec<String>,
    /// `values[d][a]`
    pub values: Vec<Vec<f64>>,
    pub direction: Direction,
}

impl ResultMatrix {
    pub fn new(criterion: impl Into<String>, datasets: Vec<String>, methods: Vec<String>, values: Vec<Vec<f64>>, direction: Direction) -> Result<Self> {
        if values.is_empty() || values.len() != datasets.len() {
            return Err(Error::Shape(format!("{} value rows for {} datasets", values.len(), datasets.len())));
        }
        if methods.len() < 2 || values.iter().any(|r| r.len() != methods.len()) {
            return Err(Error::Shape(format!("every row needs one value for each of {} (≥ 2) methods", methods.len())));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("result matrix holds a non-finite value".into()));
        }
        Ok(ResultMatrix {
            criterion: criterion.into(),
            datasets,
            methods,
            values,
            direction,
        })
    }

    /// Unnamed matrix, handy for tests.
    pub fn from_values(values: Vec<Vec<f64>>, direction: Direction) -> Result<Self> {
        let d = values.len();
        let a = values.first().map_or(0, Vec::len);
        ResultMatrix::new(
            "",
            (1..=d).map(|i| i.to_string()).collect(),
            (1..=a).map(|i| i.to_string()).collect(),
            values,
            direction,
        )
    }

    pub fn n_datasets(&self) -> usize {
        self.values.len()
    }

    pub fn n_methods(&self) -> usize {
        self.methods.len()
    }

    pub fn column(&self, a: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[a]).collect()
    }

    /// Per-dataset ranks; best = 1, ties averaged.
    pub fn rank_rows(&self) -> Vec<Vec<f64>> {
        self.values
            .iter()
            .map(|row| {
                let keyed: Vec<f64> = match self.direction {
                    Direction::LowerBetter => row.clone(),
                    Direction::HigherBetter => row.iter().map(|v| -v).collect(),
                };
                average_tied_ranks(&keyed)
            })
            .collect()
    }
}

/// Ranks `1..=n` ascending, tied values sharing the mean of their positions.
pub fn average_tied_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let mean = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mean;
        }
        start = end;
    }
    ranks
}

pub fn average_ranks(m: &ResultMatrix) -> Vec<f64> {
    let rows = m.rank_rows();
    let d = rows.len() as f64;
    (0..m.n_methods()).map(|a| rows.iter().map(|r| r[a]).sum::<f64>() / d).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p: f64,
}

/// Tie-corrected Friedman chi-square with `A - 1` degrees of freedom.
pub fn friedman_test(m: &ResultMatrix) -> Result<TestResult> {
    let (d, a) = (m.n_datasets(), m.n_methods());
    if d < 2 {
        return Err(Error::InvalidArgument(format!("the Friedman test needs at least 2 datasets, got {d}")));
    }
    let rows = m.rank_rows();
    let (df, af) = (d as f64, a as f64);
    let centre = df * (af + 1.0) / 2.0;
    let spread: f64 = (0..a)
        .map(|j| {
            let r: f64 = rows.iter().map(|row| row[j]).sum();
            (r - centre).powi(2)
        })
        .sum();
    let squares: f64 = rows.iter().flatten().map(|r| r * r).sum();
    let den = squares - df * af * (af + 1.0).powi(2) / 4.0;
    if den <= 1e-12 {
        return Ok(TestResult { statistic: 0.0, p: 1.0 });
    }
    let statistic = (af - 1.0) * spread / den;
    let chi = ChiSquared::new(af - 1.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(TestResult {
        statistic,
        p: chi.sf(statistic).clamp(0.0, 1.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Smaller of the positive and negative signed-rank sums.
    pub statistic: f64,
    pub p: f64,
    /// Nonzero differences.
    pub n: usize,
    pub exact: bool,
}

/// Nonzero differences and their tie-averaged absolute ranks.
fn signed_ranks(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<bool>) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    (average_tied_ranks(&abs), d.iter().map(|v| *v > 0.0).collect())
}

/// Two-sided signed-rank test of `a - b`. Zero differences are dropped.
/// Exact for up to [`WILCOXON_EXACT_MAX`] nonzero differences, normal
/// approximation beyond.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Shape(format!("paired samples of lengths {} and {}", a.len(), b.len())));
    }
    let (ranks, _) = signed_ranks(a, b);
    if ranks.len() <= WILCOXON_EXACT_MAX {
        wilcoxon_exact(a, b)
    } else {
        wilcoxon_normal(a, b)
    }
}

/// Exact null distribution of the positive rank sum, counted over all
/// `2^n` sign assignments.
pub fn wilcoxon_exact(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    let (ranks, positive) = signed_ranks(a, b);
    let n = ranks.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            p: 1.0,
            n,
            exact: true,
        });
    }
    if n > 62 {
        return Err(Error::InvalidArgument(format!("exact Wilcoxon is limited to 62 differences, got {n}")));
    }
    // doubled ranks are integers even with averaged ties
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let plus: usize = doubled.iter().zip(&positive).filter(|p| *p.1).map(|p| *p.0).sum();
    let w = plus.min(total - plus);
    let mut ways = vec![0u64; total + 1];
    ways[0] = 1;
    for &r in &doubled {
        for s in (r..=total).rev() {
            ways[s] += ways[s - r];
        }
    }
    let tail: u64 = ways[..=w].iter().sum();
    let p = (2.0 * tail as f64 / 2f64.powi(n as i32)).min(1.0);
    Ok(WilcoxonResult {
        statistic: w as f64 / 2.0,
        p,
        n,
        exact: true,
    })
}

/// Normal approximation with tie-corrected variance and continuity
/// correction.
pub fn wilcoxon_normal(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    let (ranks, positive) = signed_ranks(a, b);
    let n = ranks.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            p: 1.0,
            n,
            exact: false,
        });
    }
    let nf = n as f64;
    let plus: f64 = ranks.iter().zip(&positive).filter(|p| *p.1).map(|p| *p.0).sum();
    let total = nf * (nf + 1.0) / 2.0;
    let w = plus.min(total - plus);
    let mut sorted = ranks.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    for group in sorted.chunk_by(|x, y| x == y) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return Ok(WilcoxonResult {
            statistic: w,
            p: 1.0,
            n,
            exact: false,
        });
    }
    let z = (w - total / 2.0 + 0.5) / var.sqrt();
    let p = (2.0 * Normal::standard().cdf(z.min(0.0))).min(1.0);
    Ok(WilcoxonResult {
        statistic: w,
        p,
        n,
        exact: false,
    })
}

/// Holm step-down adjusted p-values in input order.
pub fn holm_adjust(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut out = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (i, &k) in order.iter().enumerate() {
        running = running.max(((m - i) as f64 * p[k]).min(1.0));
        out[k] = running;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub criterion: String,
    pub methods: Vec<String>,
    pub direction: Direction,
    pub avg_ranks: Vec<f64>,
    /// `None` with fewer than two datasets.
    pub friedman: Option<TestResult>,
    /// Friedman p after Holm across criteria.
    pub friedman_adjusted: Option<f64>,
    /// Raw Wilcoxon p for every pair `a < b`, row-major upper triangle.
    pub pairwise_p: Vec<Vec<Option<f64>>>,
    /// Holm-adjusted within this criterion.
    pub holm_adjusted: Vec<Vec<Option<f64>>>,
    pub significant: Vec<Vec<bool>>,
}

/// Friedman per criterion with Holm across criteria; Wilcoxon for every
/// pair with Holm within each criterion. A pair is flagged only when both
/// adjusted p-values are below `alpha`.
pub fn two_step_pipeline(matrices: &[ResultMatrix], alpha: f64) -> Result<Vec<RankTable>> {
    let Some(first) = matrices.first() else {
        return Ok(Vec::new());
    };
    let a = first.n_methods();
    if matrices.iter().any(|m| m.n_methods() != a) {
        return Err(Error::Shape("all criteria must compare the same methods".into()));
    }
    let friedman: Vec<Option<TestResult>> = matrices
        .iter()
        .map(|m| if m.n_datasets() >= 2 { friedman_test(m).map(Some) } else { Ok(None) })
        .collect::<Result<_>>()?;
    let raw: Vec<f64> = friedman.iter().flatten().map(|t| t.p).collect();
    let mut adjusted = holm_adjust(&raw).into_iter();
    let friedman_adjusted: Vec<Option<f64>> = friedman.iter().map(|t| t.and_then(|_| adjusted.next())).collect();

    let pairs: Vec<(usize, usize)> = (0..a).flat_map(|i| (i + 1..a).map(move |j| (i, j))).collect();
    let mut tables = Vec::with_capacity(matrices.len());
    for (m, (f, fa)) in matrices.iter().zip(friedman.into_iter().zip(friedman_adjusted)) {
        let mut pairwise_p = vec![vec![None; a]; a];
        let mut holm = vec![vec![None; a]; a];
        let mut significant = vec![vec![false; a]; a];
        if m.n_datasets() >= 2 {
            let ps: Vec<f64> = pairs
                .iter()
                .map(|&(i, j)| wilcoxon_signed_rank(&m.column(i), &m.column(j)).map(|w| w.p))
                .collect::<Result<_>>()?;
            for ((&(i, j), &p), h) in pairs.iter().zip(&ps).zip(holm_adjust(&ps)) {
                pairwise_p[i][j] = Some(p);
                holm[i][j] = Some(h);
                significant[i][j] = fa.is_some_and(|fp| fp < alpha) && h < alpha;
            }
        }
        tables.push(RankTable {
            criterion: m.criterion.clone(),
            methods: m.methods.clone(),
            direction: m.direction,
            avg_ranks: average_ranks(m),
            friedman: f,
            friedman_adjusted: fa,
            pairwise_p,
            holm_adjusted: holm,
            significant,
        });
    }
    Ok(tables)
}

/// Three decimals; below 1e-3 shows as "0.000" and above 0.999 as "1.000".
pub fn format_p(p: f64) -> String {
    if p < 1e-3 {
        "0.000".into()
    } else if p > 0.999 {
        "1.000".into()
    } else {
        format!("{p:.3}")
    }
}

/// Scientific notation with three decimals, e.g. `1.000e+00`.
pub fn format_sci(v: f64) -> String {
    let s = format!("{v:.3e}");
    let (mantissa, exp) = s.split_once('e').unwrap_or((&s, "0"));
    let (sign, digits) = match exp.strip_prefix('-') {
        Some(d) => ('-', d),
        None => ('+', exp),
    };
    format!("{mantissa}e{sign}{digits:0>2}")
}

const BLOCK: usize = 4;

/// Text rendering: four criteria per block with rows `Nam.`, `Frd.`,
/// `Rank` and one row of Holm-adjusted pairwise p-values per method.
/// Methods are numbered `1..=A` in column order.
pub fn format_rank_tables(tables: &[RankTable]) -> String {
    let Some(first) = tables.first() else {
        return String::new();
    };
    let a = first.methods.len();
    let cell = 7;
    let group = a * (cell + 1) - 1;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Methods: {}",
        first.methods.iter().enumerate().map(|(i, m)| format!("{}={m}", i + 1)).collect::<Vec<_>>().join(", ")
    );
    let blank = " ".repeat(cell);
    for chunk in tables.chunks(BLOCK) {
        let mut header = format!("{:<5}", "");
        for _ in 0..BLOCK {
            header.push_str(" |");
            for i in 1..=a {
                let _ = write!(header, " {i:>cell$}");
            }
        }
        out.push_str(header.trim_end());
        out.push('\n');
        out.push_str(&"-".repeat(5 + BLOCK * (group + 3)));
        out.push('\n');
        let mut name = format!("{:<5}", "Nam.");
        let mut frd = format!("{:<5}", "Frd.");
        let mut rank = format!("{:<5}", "Rank");
        let mut pair_rows: Vec<String> = (1..a).map(|i| format!("{i:<5}")).collect();
        for k in 0..BLOCK {
            let t = chunk.get(k);
            let _ = write!(name, " | {:^group$}", t.map_or("", |t| &t.criterion));
            let fp = t.map_or(String::new(), |t| t.friedman_adjusted.map_or("-".into(), format_sci));
            let _ = write!(frd, " | {fp:^group$}");
            rank.push_str(" |");
            for j in 0..a {
                match t {
                    Some(t) => {
                        let _ = write!(rank, " {:>cell$.3}", t.avg_ranks[j]);
                    }
                    None => {
                        let _ = write!(rank, " {blank}");
                    }
                }
            }
            for (i, row) in pair_rows.iter_mut().enumerate() {
                row.push_str(" |");
                for j in 0..a {
                    let v = t.and_then(|t| if j > i { t.holm_adjusted[i][j] } else { None });
                    let _ = write!(row, " {:>cell$}", v.map_or(String::new(), format_p));
                }
            }
        }
        for line in [name, frd, rank].iter().chain(&pair_rows) {
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

/// One row per (criterion, method) with the average rank, Friedman p
/// values and the adjusted Wilcoxon p against every other method.
pub fn rank_tables_csv(tables: &[RankTable]) -> String {
    let Some(first) = tables.first() else {
        return String::new();
    };
    let a = first.methods.len();
    let mut out = String::from("criterion,method,avg_rank,friedman_stat,friedman_p,friedman_p_holm");
    for j in 0..a {
        let _ = write!(out, ",p_vs_{}", first.methods[j]);
    }
    out.push('\n');
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.6e}"));
    for t in tables {
        for i in 0..a {
            let _ = write!(
                out,
                "{},{},{:.6},{},{},{}",
                t.criterion,
                t.methods[i],
                t.avg_ranks[i],
                opt(t.friedman.map(|f| f.statistic)),
                opt(t.friedman.map(|f| f.p)),
                opt(t.friedman_adjusted)
            );
            for j in 0..a {
                let v = if i < j { t.holm_adjusted[i][j] } else if j < i { t.holm_adjusted[j][i] } else { None };
                let _ = write!(out, ",{}", opt(v));
            }
            out.push('\n');
        }
    }
    out
}

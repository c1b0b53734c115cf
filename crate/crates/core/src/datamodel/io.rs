//! CSV-ml and ARFF-subset readers and writers.
//!
//! CSV-ml: header row, comma separated, label columns named `label:<name>`.
//! Feature columns that do not parse as numbers become nominal features with
//! categories in order of first appearance.
//!
//! ARFF-subset: `@relation`, `@attribute <name> numeric|real|integer|{cats}`,
//! `@data` with dense comma separated rows. Which attributes are labels is
//! read from a companion file listing one attribute name per line (by
//! default the dataset path with extension `.labels`).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DatasetStats, FeatureKind, FeatureMeta, MultiLabelDataset};
use crate::{Error, Result};

const LABEL_PREFIX: &str = "label:";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataFormat {
    CsvMl,
    ArffMl,
}

pub fn load_dataset(path: &Path, format: DataFormat) -> Result<MultiLabelDataset> {
    match format {
        DataFormat::CsvMl => load_csv(path),
        DataFormat::ArffMl => load_arff(path, &path.with_extension("labels")),
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn parse_label(path: &Path, row: usize, column: &str, raw: &str) -> Result<bool> {
    match raw.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::BadLabel {
            path: path.to_path_buf(),
            row,
            column: column.to_string(),
            value: other.to_string(),
        }),
    }
}

pub fn load_csv(path: &Path) -> Result<MultiLabelDataset> {
    let text = fs::read_to_string(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        msg: "missing header row".into(),
    })?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let label_cols: Vec<usize> = (0..names.len())
        .filter(|&c| names[c].starts_with(LABEL_PREFIX))
        .collect();
    let feature_cols: Vec<usize> = (0..names.len())
        .filter(|&c| !names[c].starts_with(LABEL_PREFIX))
        .collect();
    if label_cols.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("no `{LABEL_PREFIX}` columns in header"),
        });
    }

    let mut raw_features: Vec<Vec<String>> = Vec::new();
    let mut labels = Vec::new();
    for (row, (lineno, line)) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != names.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: format!("expected {} fields, found {}", names.len(), fields.len()),
            });
        }
        raw_features.push(feature_cols.iter().map(|&c| fields[c].to_string()).collect());
        labels.push(
            label_cols
                .iter()
                .map(|&c| parse_label(path, row + 1, names[c], fields[c]))
                .collect::<Result<Vec<bool>>>()?,
        );
    }

    let mut meta = Vec::with_capacity(feature_cols.len());
    let mut features = vec![Vec::with_capacity(feature_cols.len()); raw_features.len()];
    for (f, &c) in feature_cols.iter().enumerate() {
        let parsed: Option<Vec<f64>> = raw_features
            .iter()
            .map(|r| r[f].parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        match parsed {
            Some(values) => {
                meta.push(FeatureMeta::numeric(names[c]));
                for (row, v) in features.iter_mut().zip(values) {
                    row.push(v);
                }
            }
            None => {
                let mut cats: Vec<String> = Vec::new();
                for (row, r) in features.iter_mut().zip(&raw_features) {
                    let idx = match cats.iter().position(|k| *k == r[f]) {
                        Some(i) => i,
                        None => {
                            cats.push(r[f].clone());
                            cats.len() - 1
                        }
                    };
                    row.push(idx as f64);
                }
                if cats.len() < 2 {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: 1,
                        msg: format!("column `{}` is neither numeric nor a nominal with two or more values", names[c]),
                    });
                }
                meta.push(FeatureMeta {
                    name: names[c].to_string(),
                    kind: FeatureKind::Nominal(cats),
                });
            }
        }
    }
    let label_names = label_cols
        .iter()
        .map(|&c| names[c][LABEL_PREFIX.len()..].to_string())
        .collect();
    MultiLabelDataset::new(dataset_name(path), features, labels, meta, label_names)
}

pub fn write_csv(ds: &MultiLabelDataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    let header: Vec<String> = ds
        .feature_meta
        .iter()
        .map(|m| m.name.clone())
        .chain(ds.label_names.iter().map(|l| format!("{LABEL_PREFIX}{l}")))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for (x, y) in ds.features.iter().zip(&ds.labels) {
        let fields: Vec<String> = x
            .iter()
            .zip(&ds.feature_meta)
            .map(|(v, m)| format_value(*v, &m.kind))
            .chain(y.iter().map(|&b| if b { "1".into() } else { "0".into() }))
            .collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn format_value(v: f64, kind: &FeatureKind) -> String {
    match kind {
        FeatureKind::Nominal(cats) => cats[v as usize].clone(),
        _ => format!("{v}"),
    }
}

enum AttrType {
    Numeric,
    Nominal(Vec<String>),
}

fn unquote(s: &str) -> &str {
    let s = s.trim();
    for q in ['\'', '"'] {
        if s.len() >= 2 && s.starts_with(q) && s.ends_with(q) {
            return &s[1..s.len() - 1];
        }
    }
    s
}

/// Splits `@attribute` payload into (name, type text).
fn split_attribute(rest: &str) -> Option<(String, String)> {
    let rest = rest.trim();
    if let Some(q) = rest.chars().next().filter(|c| *c == '\'' || *c == '"') {
        let end = rest[1..].find(q)? + 1;
        return Some((rest[1..end].to_string(), rest[end + 1..].trim().to_string()));
    }
    let mut parts = rest.splitn(2, char::is_whitespace);
    let name = parts.next()?.to_string();
    Some((name, parts.next()?.trim().to_string()))
}

pub fn load_arff(path: &Path, labels_path: &Path) -> Result<MultiLabelDataset> {
    let label_list = fs::read_to_string(labels_path)?;
    let label_set: Vec<String> = label_list
        .lines()
        .map(|l| unquote(l).to_string())
        .filter(|l| !l.is_empty())
        .collect();

    let text = fs::read_to_string(path)?;
    let perr = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut relation = dataset_name(path);
    let mut attrs: Vec<(String, AttrType)> = Vec::new();
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    let mut in_data = false;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if in_data {
            if line.starts_with('{') {
                return Err(perr(lineno, "sparse rows are not supported".into()));
            }
            rows.push((lineno, line.split(',').map(|f| unquote(f).to_string()).collect()));
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("@relation") {
            relation = unquote(&line["@relation".len()..]).to_string();
        } else if lower.starts_with("@attribute") {
            let (name, ty) = split_attribute(&line["@attribute".len()..])
                .ok_or_else(|| perr(lineno, "malformed @attribute".into()))?;
            let kind = if ty.starts_with('{') {
                let inner = ty
                    .strip_prefix('{')
                    .and_then(|t| t.strip_suffix('}'))
                    .ok_or_else(|| perr(lineno, format!("unterminated category list `{ty}`")))?;
                AttrType::Nominal(inner.split(',').map(|c| unquote(c).to_string()).collect())
            } else {
                match ty.to_ascii_lowercase().as_str() {
                    "numeric" | "real" | "integer" => AttrType::Numeric,
                    other => return Err(perr(lineno, format!("unsupported attribute type `{other}`"))),
                }
            };
            attrs.push((name, kind));
        } else if lower.starts_with("@data") {
            in_data = true;
        } else {
            return Err(perr(lineno, format!("unexpected line `{line}`")));
        }
    }

    let mut label_cols = Vec::with_capacity(label_set.len());
    for name in &label_set {
        let c = attrs
            .iter()
            .position(|(a, _)| a == name)
            .ok_or_else(|| perr(0, format!("label attribute `{name}` not declared")))?;
        label_cols.push(c);
    }
    let feature_cols: Vec<usize> = (0..attrs.len()).filter(|c| !label_cols.contains(c)).collect();

    let meta: Vec<FeatureMeta> = feature_cols
        .iter()
        .map(|&c| {
            let (name, ty) = &attrs[c];
            let kind = match ty {
                AttrType::Numeric => FeatureKind::Numeric,
                AttrType::Nominal(cats) if is_binary_domain(cats) => FeatureKind::Binary,
                AttrType::Nominal(cats) => FeatureKind::Nominal(cats.clone()),
            };
            FeatureMeta {
                name: name.clone(),
                kind,
            }
        })
        .collect();

    let mut features = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (row, (lineno, fields)) in rows.iter().enumerate() {
        if fields.len() != attrs.len() {
            return Err(perr(
                *lineno,
                format!("expected {} values, found {}", attrs.len(), fields.len()),
            ));
        }
        let mut x = Vec::with_capacity(feature_cols.len());
        for (&c, m) in feature_cols.iter().zip(&meta) {
            let v = &fields[c];
            let value = match &m.kind {
                FeatureKind::Nominal(cats) => cats
                    .iter()
                    .position(|k| k == v)
                    .ok_or_else(|| perr(*lineno, format!("`{v}` is not a category of `{}`", m.name)))?
                    as f64,
                _ => v
                    .parse::<f64>()
                    .ok()
                    .filter(|f| f.is_finite())
                    .ok_or_else(|| perr(*lineno, format!("`{v}` is not a number (attribute `{}`)", m.name)))?,
            };
            x.push(value);
        }
        features.push(x);
        labels.push(
            label_cols
                .iter()
                .map(|&c| parse_label(path, row + 1, &attrs[c].0, &fields[c]))
                .collect::<Result<Vec<bool>>>()?,
        );
    }
    MultiLabelDataset::new(relation, features, labels, meta, label_set)
}

fn is_binary_domain(cats: &[String]) -> bool {
    let mut c: Vec<&str> = cats.iter().map(String::as_str).collect();
    c.sort_unstable();
    c == ["0", "1"]
}

fn quote_name(name: &str) -> String {
    if name.contains(|c: char| c.is_whitespace() || c == ',' || c == '{' || c == '}') {
        format!("'{name}'")
    } else {
        name.to_string()
    }
}

/// Writes the dataset as ARFF with labels trailing, and the companion label
/// list to `labels_path`.
pub fn write_arff(ds: &MultiLabelDataset, path: &Path, labels_path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "@relation {}", quote_name(&ds.name))?;
    writeln!(f)?;
    for m in &ds.feature_meta {
        let ty = match &m.kind {
            FeatureKind::Numeric => "numeric".to_string(),
            FeatureKind::Binary => "{0,1}".to_string(),
            FeatureKind::Nominal(cats) => format!("{{{}}}", cats.join(",")),
        };
        writeln!(f, "@attribute {} {}", quote_name(&m.name), ty)?;
    }
    for l in &ds.label_names {
        writeln!(f, "@attribute {} {{0,1}}", quote_name(l))?;
    }
    writeln!(f)?;
    writeln!(f, "@data")?;
    for (x, y) in ds.features.iter().zip(&ds.labels) {
        let fields: Vec<String> = x
            .iter()
            .zip(&ds.feature_meta)
            .map(|(v, m)| format_value(*v, &m.kind))
            .chain(y.iter().map(|&b| if b { "1".into() } else { "0".into() }))
            .collect();
        writeln!(f, "{}", fields.join(","))?;
    }
    fs::write(labels_path, ds.label_names.join("\n") + "\n")?;
    Ok(())
}

/// `name,|S|,d,L,LC,UC,IR`, one row per dataset.
pub fn write_stats_csv(stats: &[DatasetStats], path: &Path) -> Result<PathBuf> {
    let mut out = String::from("name,|S|,d,L,LC,UC,IR\n");
    for s in stats {
        out.push_str(&format!(
            "{},{},{},{},{:.2},{},{:.2}\n",
            s.name,
            s.instances,
            s.dims,
            s.labels,
            s.label_cardinality,
            s.unique_combinations,
            s.mean_imbalance_ratio
        ));
    }
    fs::write(path, out)?;
    Ok(path.to_path_buf())
}

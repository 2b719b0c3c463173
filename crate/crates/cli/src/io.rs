//! CSV ingestion and label files.

use dlcc::DataMatrix;
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: no rows")]
    NoRows { path: String },
    #[error("{path}: line {line} has {got} fields, expected {expected}")]
    Ragged {
        path: String,
        line: u64,
        got: usize,
        expected: usize,
    },
    #[error("{path}: line {line}, column {column}: `{value}` is not a finite number")]
    NotNumeric {
        path: String,
        line: u64,
        column: usize,
        value: String,
    },
    #[error("{path}: label column `{name}` not found")]
    NoLabelColumn { path: String, name: String },
    #[error("{path}: need at least two observations, found {n}")]
    TooFew { path: String, n: usize },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{0}")]
    Data(#[from] dlcc::DlccError),
}

/// Observations plus optional ground truth read from a CSV file.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub data: DataMatrix,
    /// Ground-truth class of every row, `0..classes`, in order of the sorted
    /// distinct label strings.
    pub truth: Option<Vec<usize>>,
    pub classes: Vec<String>,
    pub columns: Option<Vec<String>>,
}

fn parse_cell(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a numeric CSV. The first row is taken as a header when any of its
/// cells fails to parse as a number. `label_col` names the ground-truth
/// column, or gives its 0-based position when the file has no header.
pub fn load_csv(path: impl AsRef<Path>, label_col: Option<&str>) -> Result<Dataset, LoadError> {
    let p = path.as_ref().display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path.as_ref())
        .map_err(|source| LoadError::Csv {
            path: p.clone(),
            source,
        })?;
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|source| LoadError::Csv {
            path: p.clone(),
            source,
        })?;
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(LoadError::NoRows { path: p });
    }
    let width = records[0].len();
    for r in &records {
        if r.len() != width {
            return Err(LoadError::Ragged {
                path: p,
                line: r.position().map_or(0, |q| q.line()),
                got: r.len(),
                expected: width,
            });
        }
    }
    let has_header = records[0].iter().any(|c| parse_cell(c).is_none());
    let columns: Option<Vec<String>> =
        has_header.then(|| records[0].iter().map(|c| c.trim().to_string()).collect());
    let body = if has_header {
        &records[1..]
    } else {
        &records[..]
    };
    if body.is_empty() {
        return Err(LoadError::NoRows { path: p });
    }
    let label_idx = match label_col {
        None => None,
        Some(name) => {
            let by_name = columns
                .as_ref()
                .and_then(|c| c.iter().position(|h| h == name));
            let idx = by_name.or_else(|| name.parse::<usize>().ok().filter(|&i| i < width));
            Some(idx.ok_or_else(|| LoadError::NoLabelColumn {
                path: p.clone(),
                name: name.to_string(),
            })?)
        }
    };
    let d = width - usize::from(label_idx.is_some());
    let mut values = Vec::with_capacity(body.len() * d);
    let mut raw_labels = Vec::new();
    for r in body {
        for (c, cell) in r.iter().enumerate() {
            if Some(c) == label_idx {
                raw_labels.push(cell.trim().to_string());
                continue;
            }
            let v = parse_cell(cell).ok_or_else(|| LoadError::NotNumeric {
                path: p.clone(),
                line: r.position().map_or(0, |q| q.line()),
                column: c + 1,
                value: cell.to_string(),
            })?;
            values.push(v);
        }
    }
    let n = body.len();
    if n < 2 {
        return Err(LoadError::TooFew { path: p, n });
    }
    let data = DataMatrix::new(values, n, d)?;
    let (truth, classes) = if label_idx.is_some() {
        let (codes, names) = encode_labels(&raw_labels);
        (Some(codes), names)
    } else {
        (None, Vec::new())
    };
    let columns = columns.map(|c| {
        c.into_iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != label_idx)
            .map(|(_, h)| h)
            .collect()
    });
    Ok(Dataset {
        data,
        truth,
        classes,
        columns,
    })
}

/// Maps label strings to `0..k` by sorted order.
pub fn encode_labels(raw: &[String]) -> (Vec<usize>, Vec<String>) {
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for r in raw {
        index.insert(r.as_str(), 0);
    }
    let names: Vec<String> = index.keys().map(|s| s.to_string()).collect();
    for (i, v) in index.values_mut().enumerate() {
        *v = i;
    }
    (raw.iter().map(|r| index[r.as_str()]).collect(), names)
}

/// Writes `index,label` rows, both 1-based.
pub fn write_labels(path: impl AsRef<Path>, labels: &[usize]) -> std::io::Result<()> {
    std::fs::write(path, labels_csv(labels))
}

pub fn labels_csv(labels: &[usize]) -> String {
    let mut out = String::from("index,label\n");
    for (i, l) in labels.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, l + 1));
    }
    out
}

/// Reads a labels file written by [`write_labels`]; returns 0-based labels
/// ordered by index.
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<usize>, LoadError> {
    let ds = load_csv(path.as_ref(), None)?;
    let p = path.as_ref().display().to_string();
    let x = ds.data;
    let col = x.ncols() - 1;
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(x.nrows());
    for (i, r) in x.rows().enumerate() {
        let (idx, lab) = (if x.ncols() > 1 { r[0] } else { (i + 1) as f64 }, r[col]);
        if idx < 1.0 || lab < 1.0 || idx.fract() != 0.0 || lab.fract() != 0.0 {
            return Err(LoadError::NotNumeric {
                path: p,
                line: i as u64 + 2,
                column: 1,
                value: format!("{idx},{lab}"),
            });
        }
        pairs.push((idx as usize, lab as usize - 1));
    }
    pairs.sort_unstable();
    Ok(pairs.into_iter().map(|(_, l)| l).collect())
}

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Dataset;

/// Which CSV columns become features, labels and groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub label: String,
    pub features: Vec<String>,
    /// Features to one-hot expand, in first-appearance category order.
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default)]
    pub group: Option<String>,
    #[serde(default)]
    pub add_bias_column: bool,
    /// Reject labels outside `{0, 1}`.
    #[serde(default)]
    pub binary_labels: bool,
}

impl DatasetSchema {
    pub fn new(label: impl Into<String>, features: Vec<String>) -> Self {
        Self {
            label: label.into(),
            features,
            categorical: Vec::new(),
            group: None,
            add_bias_column: false,
            binary_labels: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::InvalidSchema("no feature columns".into()));
        }
        if self.features.contains(&self.label) {
            return Err(Error::InvalidSchema(format!(
                "label `{}` is also listed as a feature",
                self.label
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.features.iter().find(|f| !seen.insert(f.as_str())) {
            return Err(Error::InvalidSchema(format!("duplicate feature `{dup}`")));
        }
        if let Some(c) = self.categorical.iter().find(|c| !self.features.contains(c)) {
            return Err(Error::InvalidSchema(format!(
                "categorical column `{c}` is not a feature"
            )));
        }
        Ok(())
    }
}

enum Column {
    Numeric(Vec<f64>),
    Categorical { categories: Vec<String>, codes: Vec<usize> },
}

fn parse_number(raw: &str, row: usize, column: &str) -> Result<f64> {
    match raw.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::NonNumericValue {
            row,
            column: column.to_string(),
            value: raw.to_string(),
        }),
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<Dataset<f64>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_csv(file, path, schema)
}

/// `source` names the input in error messages.
pub fn read_csv<R: Read>(reader: R, source: &Path, schema: &DatasetSchema) -> Result<Dataset<f64>> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let label_idx = find(&schema.label)?;
    let feature_idx = schema
        .features
        .iter()
        .map(|f| find(f))
        .collect::<Result<Vec<_>>>()?;
    let group_idx = schema.group.as_deref().map(find).transpose()?;

    let mut columns: Vec<Column> = schema
        .features
        .iter()
        .map(|f| {
            if schema.categorical.contains(f) {
                Column::Categorical {
                    categories: Vec::new(),
                    codes: Vec::new(),
                }
            } else {
                Column::Numeric(Vec::new())
            }
        })
        .collect();
    let mut labels = Vec::new();
    let mut groups = Vec::new();

    for (i, record) in rdr.records().enumerate() {
        // 1-based data row, header excluded
        let row = i + 1;
        let record = record.map_err(|e| Error::ParseError {
            path: source.to_path_buf(),
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        let field = |idx: usize, name: &str| {
            record.get(idx).ok_or_else(|| Error::ParseError {
                path: source.to_path_buf(),
                row,
                column: name.to_string(),
                message: "missing field".into(),
            })
        };
        for ((col, &idx), name) in columns.iter_mut().zip(&feature_idx).zip(&schema.features) {
            let raw = field(idx, name)?;
            match col {
                Column::Numeric(vals) => vals.push(parse_number(raw, row, name)?),
                Column::Categorical { categories, codes } => {
                    let raw = raw.trim();
                    let code = match categories.iter().position(|c| c == raw) {
                        Some(c) => c,
                        None => {
                            categories.push(raw.to_string());
                            categories.len() - 1
                        }
                    };
                    codes.push(code);
                }
            }
        }
        let label = parse_number(field(label_idx, &schema.label)?, row, &schema.label)?;
        if schema.binary_labels && label != 0.0 && label != 1.0 {
            return Err(Error::NonBinaryLabel {
                index: i,
                value: label.to_string(),
            });
        }
        labels.push(label);
        if let (Some(idx), Some(name)) = (group_idx, schema.group.as_deref()) {
            groups.push(field(idx, name)?.trim().to_string());
        }
    }

    let n = labels.len();
    if n == 0 {
        return Err(Error::InvalidDataset(format!("{}: no data rows", source.display())));
    }
    let mut names = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for (col, name) in columns.into_iter().zip(&schema.features) {
        match col {
            Column::Numeric(vals) => {
                names.push(name.clone());
                cols.push(vals);
            }
            Column::Categorical { categories, codes } => {
                for (k, cat) in categories.iter().enumerate() {
                    names.push(format!("{name}={cat}"));
                    cols.push(codes.iter().map(|&c| if c == k { 1.0 } else { 0.0 }).collect());
                }
            }
        }
    }
    if schema.add_bias_column {
        names.push("bias".into());
        cols.push(vec![1.0; n]);
    }
    let x = Array2::from_shape_fn((n, cols.len()), |(i, j)| cols[j][i]);
    Dataset::new(
        x,
        Array1::from(labels),
        names,
        group_idx.map(|_| groups),
    )
}

/// Features, then the label column, then the group column if present. Values
/// carry 17 significant digits so they parse back to identical bits.
pub fn write_csv<W: Write>(
    writer: W,
    dataset: &Dataset<f64>,
    label: &str,
    group: Option<&str>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = dataset.feature_names().iter().map(String::as_str).collect();
    header.push(label);
    let groups = match (group, dataset.group_labels()) {
        (Some(name), Some(g)) => {
            header.push(name);
            Some(g)
        }
        _ => None,
    };
    w.write_record(&header)?;
    for i in 0..dataset.n() {
        let mut rec: Vec<String> = dataset.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        rec.push(format!("{:.16e}", dataset.y()[i]));
        if let Some(g) = groups {
            rec.push(g[i].clone());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ConceptDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvOptions {
    pub label_column: String,
    /// Per-column split values; a cell strictly above its split is `true`.
    #[serde(default)]
    pub thresholds: BTreeMap<String, f64>,
    #[serde(default = "default_threshold")]
    pub default_threshold: f64,
    /// Known classes in index order. When absent, classes are taken in
    /// order of first appearance.
    #[serde(default)]
    pub class_names: Option<Vec<String>>,
}

fn default_threshold() -> f64 {
    0.5
}

impl CsvOptions {
    pub fn new(label_column: impl Into<String>) -> Self {
        Self {
            label_column: label_column.into(),
            thresholds: BTreeMap::new(),
            default_threshold: default_threshold(),
            class_names: None,
        }
    }
}

fn parse_err(row: usize, column: &str, message: impl Into<String>) -> Error {
    Error::Csv {
        row,
        column: column.to_string(),
        message: message.into(),
    }
}

/// Read a header-led CSV of numeric concept columns plus one label column.
/// Row indices in errors count data rows from 1 (the header is row 0).
pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<ConceptDataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| parse_err(0, "", e.to_string()))?
        .clone();
    let label_idx = headers
        .iter()
        .position(|h| h == opts.label_column)
        .ok_or_else(|| parse_err(0, &opts.label_column, "label column not found in header"))?;
    for name in opts.thresholds.keys() {
        if !headers.iter().any(|h| h == name) {
            return Err(parse_err(0, name, "threshold given for a column that does not exist"));
        }
    }
    let concept_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(i, h)| (i, h.to_string()))
        .collect();

    let mut class_names: Vec<String> = opts.class_names.clone().unwrap_or_default();
    let fixed_classes = opts.class_names.is_some();
    let mut concepts = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let row_no = r + 1;
        let record = record.map_err(|e| parse_err(row_no, "", e.to_string()))?;
        if record.len() != headers.len() {
            return Err(parse_err(
                row_no,
                "",
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        let mut row = Vec::with_capacity(concept_cols.len());
        for (i, name) in &concept_cols {
            let cell = record[*i].trim();
            let value: f64 = cell
                .parse()
                .map_err(|_| parse_err(row_no, name, format!("non-numeric cell `{cell}`")))?;
            let split = opts.thresholds.get(name).copied().unwrap_or(opts.default_threshold);
            row.push(value > split);
        }
        let label = record[label_idx].trim();
        let class = match class_names.iter().position(|c| c == label) {
            Some(k) => k,
            None if fixed_classes => {
                return Err(parse_err(row_no, &opts.label_column, format!("unknown label `{label}`")))
            }
            None => {
                class_names.push(label.to_string());
                class_names.len() - 1
            }
        };
        concepts.push(row);
        labels.push(class);
    }
    ConceptDataset::new(
        concepts,
        labels,
        concept_cols.into_iter().map(|(_, n)| n).collect(),
        class_names,
    )
}

/// Write concepts as 0/1 columns followed by the label column.
pub fn write_csv(data: &ConceptDataset, path: impl AsRef<Path>, label_column: &str) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut header: Vec<&str> = data.concept_names.iter().map(String::as_str).collect();
    header.push(label_column);
    w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
    for (row, &label) in data.concepts.iter().zip(&data.labels) {
        let mut rec: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
        rec.push(&data.class_names[label]);
        w.write_record(&rec).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{gen_conjunctive, default_conjunctive_spec};
    use std::io::Write;

    fn write(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn thresholds_booleanize() {
        let f = write("age,score,label\n0.7,3,yes\n0.2,9,no\n");
        let mut opts = CsvOptions::new("label");
        opts.thresholds.insert("score".into(), 5.0);
        let ds = load_csv(f.path(), &opts).unwrap();
        assert_eq!(ds.concept_names, vec!["age", "score"]);
        assert_eq!(ds.concepts, vec![vec![true, false], vec![false, true]]);
        assert_eq!(ds.class_names, vec!["yes", "no"]);
        assert_eq!(ds.labels, vec![0, 1]);
    }

    #[test]
    fn errors_name_row_and_column() {
        let f = write("a,b,label\n1,0,x\n1,oops,y\n");
        match load_csv(f.path(), &CsvOptions::new("label")) {
            Err(Error::Csv { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other:?}"),
        }
        let f = write("a,b,label\n1,0\n");
        assert!(matches!(
            load_csv(f.path(), &CsvOptions::new("label")),
            Err(Error::Csv { row: 1, .. })
        ));
        let f = write("a,b\n1,0\n");
        assert!(matches!(
            load_csv(f.path(), &CsvOptions::new("label")),
            Err(Error::Csv { row: 0, .. })
        ));
        let f = write("a,label\n1,z\n");
        let mut opts = CsvOptions::new("label");
        opts.class_names = Some(vec!["x".into(), "y".into()]);
        assert!(matches!(load_csv(f.path(), &opts), Err(Error::Csv { row: 1, .. })));
    }

    #[test]
    fn export_then_load_is_identity() {
        let ds = gen_conjunctive(120, &default_conjunctive_spec(), 0.0, 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        write_csv(&ds, &path, "class").unwrap();
        let mut opts = CsvOptions::new("class");
        opts.class_names = Some(ds.class_names.clone());
        assert_eq!(load_csv(&path, &opts).unwrap(), ds);
    }
}

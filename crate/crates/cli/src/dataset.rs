//! CSV datasets: `n` numeric feature columns, then an optional integer
//! class label. Feature output always carries a header `f1..fd[,label]`.

use quadseg::LabeledDataset;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub features: Vec<Vec<f64>>,
    pub labels: Option<Vec<usize>>,
}

/// What the label column is expected to look like.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelColumn {
    /// Last column is always a label.
    Required,
    /// `n` features, optionally followed by a label.
    Optional { features: usize },
}

fn parse_label(field: &str, line: u64) -> Result<usize, CliError> {
    field.parse::<usize>().map_err(|_| {
        CliError::CsvParse(format!(
            "line {line}: label {field:?} is not a nonnegative integer"
        ))
    })
}

pub fn read_table(text: &str, header: bool, mode: LabelColumn) -> Result<CsvTable, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header_cols = if header {
        Some(
            rdr.headers()
                .map_err(|e| CliError::CsvParse(e.to_string()))?
                .len(),
        )
        .filter(|&n| n > 0)
    } else {
        None
    };
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::CsvParse(e.to_string()))?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        records.push(rec);
    }
    let cols = header_cols.or_else(|| records.first().map(|r| r.len()));
    let with_label = match (mode, cols) {
        (LabelColumn::Required, Some(c)) if c >= 2 => true,
        (LabelColumn::Required, Some(c)) => {
            return Err(CliError::CsvParse(format!(
                "need at least one feature and a label column, found {c} column(s)"
            )))
        }
        (LabelColumn::Required, None) => true,
        (LabelColumn::Optional { .. }, None) => false,
        (LabelColumn::Optional { features }, Some(c)) if c == features => false,
        (LabelColumn::Optional { features }, Some(c)) if c == features + 1 => true,
        (LabelColumn::Optional { features }, Some(c)) => {
            return Err(CliError::DimensionMismatch(format!(
                "model expects {features} features (plus an optional label), CSV has {c} columns"
            )))
        }
    };
    let cols = cols.unwrap_or(0);
    let n_feat = if with_label {
        cols.saturating_sub(1)
    } else {
        cols
    };
    let mut features = Vec::with_capacity(records.len());
    let mut labels = Vec::new();
    for rec in &records {
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != cols {
            return Err(CliError::CsvParse(format!(
                "line {line}: expected {cols} fields, found {}",
                rec.len()
            )));
        }
        let row = rec
            .iter()
            .take(n_feat)
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        CliError::CsvParse(format!("line {line}: {f:?} is not a finite number"))
                    })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        features.push(row);
        if with_label {
            labels.push(parse_label(&rec[n_feat], line)?);
        }
    }
    Ok(CsvTable {
        features,
        labels: with_label.then_some(labels),
    })
}

pub fn read_dataset(text: &str, header: bool) -> Result<LabeledDataset, CliError> {
    let table = read_table(text, header, LabelColumn::Required)?;
    Ok(LabeledDataset::new(
        table.features,
        table.labels.unwrap_or_default(),
    )?)
}

/// Inverse of [`read_dataset`] with `header = false`.
pub fn write_dataset(data: &LabeledDataset) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    for (row, label) in data.samples().iter().zip(data.labels()) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(label.to_string());
        w.write_record(&rec).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8")
}

/// Projected features as CSV; values use the shortest exact decimal form.
pub fn write_features(d: usize, rows: &[Vec<f64>], labels: Option<&[usize]>) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut head: Vec<String> = (1..=d).map(|k| format!("f{k}")).collect();
    if labels.is_some() {
        head.push("label".into());
    }
    w.write_record(&head).expect("writing to memory");
    for (i, row) in rows.iter().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        if let Some(l) = labels {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8")
}

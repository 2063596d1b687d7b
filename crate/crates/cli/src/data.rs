//! CSV ingestion. The file must have a header row; the label column is picked
//! by name or zero-based index and every other column is a feature, kept in
//! file order. Column order matters: the prefix families use the first `m`
//! feature columns.

use std::path::Path;

use trimclass::LabeledSample;

use crate::CliError;

pub struct Dataset {
    pub sample: LabeledSample,
    pub feature_names: Vec<String>,
}

pub fn read_csv(path: &Path, label: &str) -> Result<Dataset, CliError> {
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "input file does not exist: {}",
            path.display()
        )));
    }
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Usage(format!("{}: bad header row: {e}", path.display())))?
        .clone();

    let label_idx = match headers.iter().position(|h| h == label) {
        Some(idx) => idx,
        None => label.parse::<usize>().ok().filter(|&i| i < headers.len()).ok_or_else(|| {
            CliError::Usage(format!(
                "label column {label:?} not found in {} (columns: {})",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })?,
    };
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let lineno = i + 2; // header is line 1
        let record = record
            .map_err(|e| CliError::Usage(format!("{}:{lineno}: {e}", path.display())))?;
        let mut label_value = None;
        let mut features = Vec::with_capacity(feature_names.len());
        for (j, field) in record.iter().enumerate() {
            if j == label_idx {
                label_value = Some(field.trim().parse::<i64>().map_err(|_| {
                    CliError::Usage(format!(
                        "{}:{lineno}: label must be an integer, got {field:?}",
                        path.display()
                    ))
                })?);
            } else {
                features.push(field.trim().parse::<f64>().map_err(|_| {
                    CliError::Usage(format!(
                        "{}:{lineno}: feature column {} must be numeric, got {field:?}",
                        path.display(),
                        headers.get(j).unwrap_or("?")
                    ))
                })?);
            }
        }
        let label_value = label_value.ok_or_else(|| {
            CliError::Usage(format!("{}:{lineno}: missing label field", path.display()))
        })?;
        rows.push((label_value, features));
    }

    let sample = LabeledSample::validate(&rows)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(Dataset {
        sample,
        feature_names,
    })
}

/// Writes a dataset as CSV: feature columns `x0..x{p-1}` then `label`.
pub fn write_csv(path: &Path, sample: &LabeledSample) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    let p = sample.dim();
    let mut header: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
    header.push("label".to_string());
    writer
        .write_record(&header)
        .map_err(|e| CliError::Io(e.to_string()))?;
    for (y, x) in sample.iter() {
        let mut record: Vec<String> = x.iter().map(|v| format!("{v:.16e}")).collect();
        record.push(y.to_string());
        writer
            .write_record(&record)
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    writer.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

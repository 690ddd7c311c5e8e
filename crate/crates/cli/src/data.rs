//! Study files: CSV with a header row, one observed variable per column and
//! an optional study-label column.

use std::path::Path;

use depthcd::PointCloud;

use crate::error::{CliError, CliResult};

pub const MIN_STUDY_ROWS: usize = 10;

#[derive(Debug, Clone)]
pub struct StudyData {
    pub name: String,
    pub columns: Vec<String>,
    pub cloud: PointCloud,
}

struct Table {
    columns: Vec<String>,
    /// Study label per row, when the file has the label column.
    labels: Option<Vec<String>>,
    values: Vec<f64>,
}

fn read_table(path: &Path, study_column: Option<&str>) -> CliResult<Table> {
    let shown = path.display();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::parse(format!("{shown}: {e}")))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::parse(format!("{shown}: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let label_at = study_column.and_then(|c| header.iter().position(|h| h == c));
    let columns: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| Some(i) != label_at)
        .map(|(_, h)| h.clone())
        .collect();
    if columns.is_empty() {
        return Err(CliError::parse(format!("{shown}: no data columns")));
    }
    let mut labels = label_at.map(|_| Vec::new());
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::parse(format!("{shown}: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        for (i, cell) in record.iter().enumerate() {
            if Some(i) == label_at {
                labels.as_mut().expect("label column").push(cell.to_string());
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(CliError::parse(format!(
                        "{shown}: line {line}, column {} (`{}`): `{cell}` is not a finite number",
                        i + 1,
                        header[i]
                    )))
                }
            }
        }
    }
    if values.is_empty() {
        return Err(CliError::parse(format!("{shown}: no data rows")));
    }
    Ok(Table {
        columns,
        labels,
        values,
    })
}

/// The whole file as one cloud.
pub fn read_cloud(path: &Path) -> CliResult<StudyData> {
    let t = read_table(path, None)?;
    Ok(StudyData {
        name: stem(path),
        cloud: PointCloud::from_flat(t.columns.len(), t.values)?,
        columns: t.columns,
    })
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// Studies from each file in order. A file with `study_column` is split by
/// label in order of first appearance.
pub fn read_studies(paths: &[impl AsRef<Path>], study_column: &str) -> CliResult<Vec<StudyData>> {
    if paths.is_empty() {
        return Err(CliError::usage("no study files given"));
    }
    let mut out = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let t = read_table(path, Some(study_column))?;
        let p = t.columns.len();
        match t.labels {
            None => out.push(StudyData {
                name: stem(path),
                cloud: PointCloud::from_flat(p, t.values)?,
                columns: t.columns,
            }),
            Some(labels) => {
                let mut order: Vec<String> = Vec::new();
                for l in &labels {
                    if !order.contains(l) {
                        order.push(l.clone());
                    }
                }
                for name in order {
                    let flat: Vec<f64> = labels
                        .iter()
                        .enumerate()
                        .filter(|(_, l)| **l == name)
                        .flat_map(|(r, _)| t.values[r * p..(r + 1) * p].iter().copied())
                        .collect();
                    out.push(StudyData {
                        name,
                        cloud: PointCloud::from_flat(p, flat)?,
                        columns: t.columns.clone(),
                    });
                }
            }
        }
    }
    Ok(out)
}

pub fn check_study_sizes(studies: &[StudyData]) -> CliResult<()> {
    for s in studies {
        if s.cloud.len() < MIN_STUDY_ROWS {
            return Err(CliError::parse(format!(
                "study `{}` has {} rows; at least {MIN_STUDY_ROWS} are required",
                s.name,
                s.cloud.len()
            )));
        }
    }
    Ok(())
}

/// Comma-separated reals, e.g. `15.85,432`.
pub fn parse_vector(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("`{t}` is not a finite number"))
        })
        .collect()
}

//! CSV ingestion with per-column roles.

use std::collections::HashSet;
use std::path::Path;

use ndarray::Array2;
use somkit::{DataMatrix, QualitativeColumn};
use somkit::qualitative::ContingencyTable;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Quantitative,
    Qualitative,
    Id,
    Ignore,
}

/// Column roles by header name; unnamed columns take the default role.
#[derive(Debug, Clone)]
pub struct Schema {
    roles: Vec<(String, Role)>,
    default: Role,
}

impl Schema {
    pub fn new(default: Role) -> Self {
        Self {
            roles: Vec::new(),
            default,
        }
    }

    pub fn with(mut self, column: impl Into<String>, role: Role) -> Self {
        let column = column.into();
        self.roles.retain(|(c, _)| *c != column);
        self.roles.push((column, role));
        self
    }

    pub fn with_all<S: AsRef<str>>(mut self, columns: &[S], role: Role) -> Self {
        for c in columns {
            self = self.with(c.as_ref(), role);
        }
        self
    }

    pub fn role_of(&self, column: &str) -> Role {
        self.roles
            .iter()
            .find(|(c, _)| c == column)
            .map(|&(_, r)| r)
            .unwrap_or(self.default)
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    /// Id column values, or 1-based row numbers when there is no id column.
    pub ids: Vec<String>,
    pub quant_columns: Vec<String>,
    /// `NaN` where `mask` is set.
    pub values: Array2<f64>,
    pub mask: Array2<bool>,
    pub quals: Vec<QualitativeColumn>,
}

impl Ingested {
    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    /// The quantitative part, or `None` when the schema selects no such column.
    pub fn data_matrix(&self) -> Result<Option<DataMatrix>> {
        if self.quant_columns.is_empty() {
            return Ok(None);
        }
        let dm = DataMatrix::with_labels(
            self.values.clone(),
            self.mask.clone(),
            self.ids.clone(),
            self.quant_columns.clone(),
        )?;
        Ok(Some(dm))
    }
}

fn is_missing(cell: &str, token: &str) -> bool {
    cell.is_empty() || cell == token
}

/// Reads a UTF-8 CSV with a header row. Empty cells and cells equal to
/// `missing_token` are missing. Qualitative levels keep first-appearance order.
pub fn ingest_csv(path: &Path, schema: &Schema, missing_token: &str) -> Result<Ingested> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::csv(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::csv(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    for (name, _) in &schema.roles {
        if !header.contains(name) {
            return Err(CliError::UnknownColumn(name.clone()));
        }
    }
    let roles: Vec<Role> = header.iter().map(|h| schema.role_of(h)).collect();
    if roles.iter().filter(|&&r| r == Role::Id).count() > 1 {
        return Err(CliError::Validation("at most one id column".into()));
    }
    let quant_idx: Vec<usize> = (0..header.len()).filter(|&j| roles[j] == Role::Quantitative).collect();
    let qual_idx: Vec<usize> = (0..header.len()).filter(|&j| roles[j] == Role::Qualitative).collect();
    let id_idx = roles.iter().position(|&r| r == Role::Id);

    let mut ids = Vec::new();
    let mut seen = HashSet::new();
    let mut flat = Vec::new();
    let mut mask = Vec::new();
    let mut qual_cells: Vec<Vec<Option<String>>> = vec![Vec::new(); qual_idx.len()];
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::csv(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(i as u64 + 2);
        let id = match id_idx {
            Some(j) => record.get(j).unwrap_or("").to_string(),
            None => (i + 1).to_string(),
        };
        if !seen.insert(id.clone()) {
            return Err(CliError::DuplicateId { id, line });
        }
        ids.push(id);
        for &j in &quant_idx {
            let cell = record.get(j).unwrap_or("");
            if is_missing(cell, missing_token) {
                flat.push(f64::NAN);
                mask.push(true);
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    flat.push(v);
                    mask.push(false);
                }
                _ => {
                    return Err(CliError::Parse {
                        line,
                        column: header[j].clone(),
                        value: cell.to_string(),
                    })
                }
            }
        }
        for (k, &j) in qual_idx.iter().enumerate() {
            let cell = record.get(j).unwrap_or("");
            qual_cells[k].push((!is_missing(cell, missing_token)).then(|| cell.to_string()));
        }
    }
    let n = ids.len();
    if n == 0 {
        return Err(CliError::Validation(format!("{}: no data rows", path.display())));
    }
    let p = quant_idx.len();
    let values = Array2::from_shape_vec((n, p), flat).expect("row-major cells");
    let mask = Array2::from_shape_vec((n, p), mask).expect("row-major cells");
    let quals = qual_idx
        .iter()
        .zip(&qual_cells)
        .map(|(&j, cells)| QualitativeColumn::from_values(header[j].clone(), cells))
        .collect::<somkit::Result<Vec<_>>>()?;
    Ok(Ingested {
        ids,
        quant_columns: quant_idx.iter().map(|&j| header[j].clone()).collect(),
        values,
        mask,
        quals,
    })
}

/// Reads a contingency table: the first column (or `id`) holds the row
/// modalities, every other non-ignored column is a column modality of counts.
pub fn read_contingency(path: &Path, id: Option<&str>, ignore: &[String]) -> Result<ContingencyTable> {
    let id_col = match id {
        Some(c) => c.to_string(),
        None => first_header(path)?,
    };
    let schema = Schema::new(Role::Quantitative)
        .with(id_col, Role::Id)
        .with_all(ignore, Role::Ignore);
    let table = ingest_csv(path, &schema, "")?;
    if table.mask.iter().any(|&m| m) {
        return Err(CliError::Validation("contingency table has empty cells".into()));
    }
    Ok(ContingencyTable::new(table.values, table.ids, table.quant_columns)?)
}

fn first_header(path: &Path) -> Result<String> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::csv(path, e))?;
    let header = reader.headers().map_err(|e| CliError::csv(path, e))?;
    header
        .get(0)
        .map(str::to_string)
        .ok_or_else(|| CliError::Validation(format!("{}: empty header", path.display())))
}

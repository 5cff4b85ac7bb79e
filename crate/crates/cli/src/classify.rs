//! Assigning new rows to a stored codebook.

use std::fs;
use std::path::Path;

use ndarray::Array1;
use somkit::quantize::winner;

use crate::args::ClassifyArgs;
use crate::error::{CliError, Result};
use crate::ingest::{ingest_csv, Role, Schema};
use crate::persist::{
    assignment_csv, load_config, read_json, AssignmentRecord, CodebookDoc, Space, SuperclassDoc,
    SUPERCLASSES_FILE,
};

/// Classifies every row of `data` with the restricted-distance winner rule.
/// Rows without any present codebook column become error records.
pub fn classify_file(
    codebook: &Path,
    data: &Path,
    id: Option<&str>,
    missing_token: Option<&str>,
) -> Result<Vec<AssignmentRecord>> {
    let doc = CodebookDoc::load(codebook)?;
    if doc.space != Space::Quantitative {
        return Err(CliError::Validation(format!(
            "classify needs a codebook from forgy, scl, som or kbatch, not {}",
            doc.algorithm
        )));
    }
    let book = doc.codebook()?;
    let st = doc.standardization()?;
    let run = codebook.parent().unwrap_or(Path::new("."));
    let config = load_config(run).ok();
    let id = id
        .map(str::to_string)
        .or_else(|| config.as_ref().and_then(|c| c.id.clone()));
    let token = missing_token
        .map(str::to_string)
        .or_else(|| config.as_ref().map(|c| c.missing_token.clone()))
        .unwrap_or_else(|| "NA".into());
    let superclasses: Option<Vec<usize>> = read_json::<SuperclassDoc>(&run.join(SUPERCLASSES_FILE))
        .ok()
        .and_then(|d| d.labels)
        .filter(|l| l.len() == book.unit_count());

    let mut schema = Schema::new(Role::Ignore).with_all(&doc.columns, Role::Quantitative);
    if let Some(id) = &id {
        schema = schema.with(id, Role::Id);
    }
    let table = ingest_csv(data, &schema, &token).map_err(|e| match e {
        CliError::UnknownColumn(c) if doc.columns.contains(&c) => CliError::Validation(format!(
            "{} has no column `{c}`; the codebook expects {} columns: {}",
            data.display(),
            doc.columns.len(),
            doc.columns.join(", ")
        )),
        other => other,
    })?;
    let order: Vec<usize> = doc
        .columns
        .iter()
        .map(|c| table.quant_columns.iter().position(|q| q == c).expect("schema column present"))
        .collect();

    let mut records = Vec::with_capacity(table.n_rows());
    for (i, label) in table.ids.iter().enumerate() {
        let mut x: Vec<f64> = order.iter().map(|&j| table.values[[i, j]]).collect();
        let mask: Array1<bool> = order.iter().map(|&j| table.mask[[i, j]]).collect();
        st.apply_row(&mut x);
        let x = Array1::from(x);
        records.push(match winner(&book, x.view(), Some(mask.view())) {
            Ok(u) => AssignmentRecord::placed("row", label, u, superclasses.as_deref()),
            Err(e) => AssignmentRecord::failed("row", label, e.to_string()),
        });
    }
    Ok(records)
}

pub fn classify_command(args: &ClassifyArgs) -> Result<Vec<AssignmentRecord>> {
    let records = classify_file(
        &args.codebook,
        &args.data,
        args.id.as_deref(),
        args.missing_token.as_deref(),
    )?;
    let bytes = assignment_csv(&records)?;
    match &args.out {
        Some(path) => fs::write(path, bytes).map_err(|e| CliError::io(path, e))?,
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&bytes)
                .map_err(|e| CliError::io("<stdout>", e))?;
        }
    }
    Ok(records)
}

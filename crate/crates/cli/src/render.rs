//! SVG views of a run directory.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use somkit::viz::{
    render_cell_curves, render_codebook, render_component_plane, render_distance_octagons,
    render_label_map, render_pie_map, PlaneSource, RenderOptions,
};
use somkit::{Assignment, DataMatrix, QualitativeColumn};

use crate::args::{RenderArgs, View};
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::ingest::{ingest_csv, Role, Schema};
use crate::persist::{
    load_assignment, load_config, read_json, AssignmentRecord, CodebookDoc, Space, SuperclassDoc,
    ASSIGNMENT_FILE, CODEBOOK_FILE, SUPERCLASSES_FILE,
};

fn artifact(run: &Path, name: &str) -> Result<PathBuf> {
    let path = run.join(name);
    if path.exists() {
        Ok(path)
    } else {
        Err(CliError::MissingArtifact(path))
    }
}

/// Unit of every placed row/individual, keyed by label.
fn row_units(records: &[AssignmentRecord]) -> HashMap<&str, usize> {
    records
        .iter()
        .filter(|r| r.kind == "row" || r.kind == "individual")
        .filter_map(|r| r.unit.map(|u| (r.label.as_str(), u)))
        .collect()
}

fn data_path(args: &RenderArgs, config: &RunConfig) -> PathBuf {
    args.data.clone().unwrap_or_else(|| PathBuf::from(&config.data))
}

/// Renders one view and returns the SVG text.
pub fn render_view(args: &RenderArgs) -> Result<String> {
    let run = &args.run;
    let doc = CodebookDoc::load(&artifact(run, CODEBOOK_FILE)?)?;
    let topo = doc.topology()?;
    let book = doc.codebook()?;
    let superclasses: Option<Vec<usize>> = read_json::<SuperclassDoc>(&run.join(SUPERCLASSES_FILE))
        .ok()
        .and_then(|d| d.labels);
    let opts = RenderOptions {
        cell_size: args.cell_size,
        margin: args.margin,
        per_cell_scaling: args.per_cell,
        ..RenderOptions::default()
    };
    let svg = match args.view {
        View::Codebook => render_codebook(&topo, &book, &opts)?,
        View::Octagons => render_distance_octagons(&topo, &book, &opts)?,
        View::Plane => render_component_plane(
            &topo,
            &book,
            &PlaneSource::Component(args.component),
            superclasses.as_deref(),
            &opts,
        )?,
        View::Labels => {
            let records = load_assignment(&artifact(run, ASSIGNMENT_FILE)?)?;
            let placements: Vec<(String, usize)> = records
                .iter()
                .filter_map(|r| r.unit.map(|u| (r.label.clone(), u)))
                .collect();
            render_label_map(&topo, &placements, None, superclasses.as_deref(), &opts)?
        }
        View::Curves => {
            if doc.space != Space::Quantitative {
                return Err(CliError::Validation(format!(
                    "the curves view needs quantitative data; {} runs have none",
                    doc.algorithm
                )));
            }
            let config = load_config(run)?;
            let records = load_assignment(&artifact(run, ASSIGNMENT_FILE)?)?;
            let units = row_units(&records);
            let mut schema = Schema::new(Role::Ignore).with_all(&doc.columns, Role::Quantitative);
            if let Some(id) = &config.id {
                schema = schema.with(id, Role::Id);
            }
            let table = ingest_csv(&data_path(args, &config), &schema, &config.missing_token)?;
            let order: Vec<usize> = doc
                .columns
                .iter()
                .map(|c| table.quant_columns.iter().position(|q| q == c).expect("schema column"))
                .collect();
            let st = doc.standardization()?;
            let mut rows = Vec::new();
            let mut class_of = Vec::new();
            let mut labels = Vec::new();
            for (i, id) in table.ids.iter().enumerate() {
                let Some(&u) = units.get(id.as_str()) else { continue };
                let mut x: Vec<f64> = order.iter().map(|&j| table.values[[i, j]]).collect();
                st.apply_row(&mut x);
                rows.push(x);
                class_of.push(u);
                labels.push(id.clone());
            }
            if rows.is_empty() {
                return Err(CliError::Validation("no data row matches the stored assignment".into()));
            }
            let p = doc.columns.len();
            let values = Array2::from_shape_vec((rows.len(), p), rows.concat()).expect("row width");
            let mask = values.mapv(|v| !v.is_finite());
            let data = DataMatrix::with_labels(values, mask, labels, doc.columns.clone())?;
            let assignment = Assignment::from_classes(class_of, book.unit_count())?;
            render_cell_curves(&topo, &data, &assignment, &opts)?
        }
        View::Pies => {
            let column = args
                .qual
                .as_ref()
                .ok_or_else(|| CliError::Validation("the pies view needs --qual COLUMN".into()))?;
            let config = load_config(run)?;
            let records = load_assignment(&artifact(run, ASSIGNMENT_FILE)?)?;
            let units = row_units(&records);
            let mut schema = Schema::new(Role::Ignore).with(column, Role::Qualitative);
            if let Some(id) = &config.id {
                schema = schema.with(id, Role::Id);
            }
            let table = ingest_csv(&data_path(args, &config), &schema, &config.missing_token)?;
            let q = &table.quals[0];
            let mut codes = Vec::new();
            let mut class_of = Vec::new();
            for (i, id) in table.ids.iter().enumerate() {
                if let Some(&u) = units.get(id.as_str()) {
                    codes.push(q.codes()[i]);
                    class_of.push(u);
                }
            }
            if class_of.is_empty() {
                return Err(CliError::Validation("no data row matches the stored assignment".into()));
            }
            let qual = QualitativeColumn::new(q.name(), q.levels().to_vec(), codes)?;
            let assignment = Assignment::from_classes(class_of, book.unit_count())?;
            render_pie_map(&topo, &assignment, &qual, &opts)?
        }
    };
    Ok(svg)
}

/// Renders and writes the SVG; returns its path.
pub fn render_command(args: &RenderArgs) -> Result<PathBuf> {
    let svg = render_view(args)?;
    let name = match args.view {
        View::Curves => "curves",
        View::Codebook => "codebook",
        View::Octagons => "octagons",
        View::Pies => "pies",
        View::Plane => "plane",
        View::Labels => "labels",
    };
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.run.join(format!("{name}.svg")));
    fs::write(&out, svg).map_err(|e| CliError::io(&out, e))?;
    Ok(out)
}

//! Training subcommands: ingest, validate, train, persist.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use somkit::init::initialize;
use somkit::metrics::{deviations, quality_report};
use somkit::qualitative::{
    build_tables, kacm1_train, kacm2_classify_individuals, kacm_train, kdisj_train, korresp_train,
    ContingencyTable, SomSettings,
};
use somkit::quantize::{assign_all, forgy, kbatch_train, scl_train, som_train, StopReason};
use somkit::rng::derive_seed;
use somkit::dataset::standardize as standardize_data;
use somkit::superclass::{hierarchical_superclasses, Dendrogram};
use somkit::{
    CodeBook, DataMatrix, GainSchedule, InitMethod, MapTopology, MissingMode, QualitativeColumn,
    RadiusSchedule, Standardization, StandardizeMode, SuperClassing, TopologyKind,
};

use crate::args::{MissingArg, TrainArgs};
use crate::config::{Algorithm, RunConfig};
use crate::error::{CliError, Result};
use crate::ingest::{ingest_csv, read_contingency, Role, Schema};
use crate::persist::{
    assignment_csv, to_json, write_run_dir, AssignmentRecord, CodebookDoc, Space, SuperclassDoc,
    ASSIGNMENT_FILE, CODEBOOK_FILE, CONFIG_FILE, REPORT_FILE, SUPERCLASSES_FILE,
};
use crate::report::{self, DeviationTable, Header};

/// Radius used for the extended distortion in reports.
const REPORT_RADIUS: usize = 1;

struct RunOutput {
    codebook: CodebookDoc,
    assignment: Vec<AssignmentRecord>,
    superclasses: SuperclassDoc,
    report: String,
    training_vectors: usize,
    iterations: usize,
    radius_schedule: String,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn clock_seed() -> u64 {
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    derive_seed(nanos, u64::from(std::process::id()))
}

fn default_out(data: &Path, alg: Algorithm, seed: u64) -> PathBuf {
    let stem = data.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    PathBuf::from(format!("{stem}-{alg}-{seed}"))
}

pub fn build_topology(args: &TrainArgs) -> Result<MapTopology> {
    if args.topology == TopologyKind::String {
        let len = match (args.rows, args.cols) {
            (Some(r), Some(c)) if r > 1 && c > 1 => {
                return Err(invalid(format!("a string map is one-dimensional, got {r}x{c}")))
            }
            (Some(r), Some(1)) | (Some(r), None) => r,
            (_, Some(c)) => c,
            (None, None) => 10,
        };
        return Ok(MapTopology::string(len)?);
    }
    Ok(MapTopology::new(
        args.topology,
        args.rows.unwrap_or(10),
        args.cols.unwrap_or(10),
    )?)
}

/// Parses `--radius-schedule`, or steps evenly from half the map extent down to 0.
fn radius_schedule(args: &TrainArgs, topo: &MapTopology, total: usize) -> Result<RadiusSchedule> {
    if let Some(s) = &args.radius_schedule {
        return Ok(s.parse()?);
    }
    let r0 = (topo.rows().max(topo.cols()) / 2).max(1);
    let radii: Vec<usize> = (0..=r0).rev().collect();
    let radii = &radii[radii.len().saturating_sub(total)..];
    Ok(RadiusSchedule::evenly_spaced(radii, total)?)
}

fn gain(args: &TrainArgs, total: usize) -> Result<GainSchedule> {
    Ok(GainSchedule::new(args.gain, args.eps0, args.eps_final, total)?)
}

fn superclassing(book: &CodeBook, args: &TrainArgs) -> Result<(Dendrogram, Option<SuperClassing>)> {
    let dendrogram = Dendrogram::build(book.codes(), args.linkage)?;
    let cut = match args.superclasses {
        Some(s) if s == 0 || s > book.unit_count() => {
            return Err(invalid(format!(
                "--superclasses must be between 1 and the unit count {}",
                book.unit_count()
            )))
        }
        Some(s) => Some(hierarchical_superclasses(book, s, args.linkage)?),
        None => None,
    };
    Ok((dendrogram, cut))
}

fn check_options(alg: Algorithm, args: &TrainArgs) -> Result<()> {
    if args.contingency && alg != Algorithm::Korresp {
        return Err(invalid("--contingency applies to korresp only"));
    }
    if alg.is_qualitative() && args.standardize != StandardizeMode::None {
        return Err(invalid(format!("{alg} works on qualitative variables; drop --standardize")));
    }
    if alg.is_qualitative() && args.init != InitMethod::RandomBox {
        return Err(invalid(format!("{alg} only supports --init I")));
    }
    if matches!(alg, Algorithm::Forgy | Algorithm::Scl) && args.radius_schedule.is_some() {
        return Err(invalid(format!("{alg} has no neighborhood; drop --radius-schedule")));
    }
    Ok(())
}

/// Trains `alg` on `args.data` and writes the run directory. Returns its path.
pub fn train_command(alg: Algorithm, args: &TrainArgs) -> Result<PathBuf> {
    check_options(alg, args)?;
    let seed = args.seed.unwrap_or_else(clock_seed);
    let out = args.out.clone().unwrap_or_else(|| default_out(&args.data, alg, seed));
    if out.exists() {
        return Err(CliError::OutputExists(out));
    }
    let topo = build_topology(args)?;
    let output = if alg.is_qualitative() {
        qualitative_run(alg, args, topo, seed)?
    } else {
        quantitative_run(alg, args, topo, seed)?
    };
    let iters = args.iters.unwrap_or(alg.default_iters());
    let config = RunConfig {
        somkit_version: env!("CARGO_PKG_VERSION").into(),
        algorithm: alg,
        data: args.data.display().to_string(),
        contingency: args.contingency,
        topology: topo.kind().as_str().into(),
        rows: topo.rows(),
        cols: topo.cols(),
        radius_schedule: output.radius_schedule.clone(),
        gain: args.gain.as_str().into(),
        eps0: args.eps0,
        eps_final: args.eps_final,
        init: args.init.as_str().into(),
        seed,
        iterations: output.iterations,
        iterations_spec: iters.to_string(),
        training_vectors: output.training_vectors,
        standardize: args.standardize.as_str().into(),
        missing: match args.missing {
            MissingArg::Exclude => "exclude".into(),
            MissingArg::Use => "use".into(),
        },
        superclasses: args.superclasses,
        linkage: args.linkage.as_str().into(),
        missing_token: args.missing_token.clone(),
        id: args.id.clone(),
        qual: args.qual.clone(),
        ignore: args.ignore.clone(),
    };
    write_run_dir(
        &out,
        &[
            (CODEBOOK_FILE, to_json(&output.codebook, CODEBOOK_FILE)?),
            (ASSIGNMENT_FILE, assignment_csv(&output.assignment)?),
            (REPORT_FILE, output.report.into_bytes()),
            (SUPERCLASSES_FILE, to_json(&output.superclasses, SUPERCLASSES_FILE)?),
            (CONFIG_FILE, to_json(&config, CONFIG_FILE)?),
        ],
    )
}

fn quantitative_schema(args: &TrainArgs) -> Schema {
    let mut schema = Schema::new(Role::Quantitative)
        .with_all(&args.qual, Role::Qualitative)
        .with_all(&args.ignore, Role::Ignore);
    if let Some(id) = &args.id {
        schema = schema.with(id, Role::Id);
    }
    schema
}

fn quantitative_run(alg: Algorithm, args: &TrainArgs, topo: MapTopology, seed: u64) -> Result<RunOutput> {
    let table = ingest_csv(&args.data, &quantitative_schema(args), &args.missing_token)?;
    let raw = table
        .data_matrix()?
        .ok_or_else(|| invalid("no quantitative column to train on"))?;
    if args.init == InitMethod::PcaMesh && raw.n_cols() < 2 {
        return Err(invalid("init III requires at least 2 quantitative columns"));
    }
    let (data, standardization) = standardize_data(&raw, args.standardize)?;
    let train = match args.missing {
        MissingArg::Exclude => data
            .complete_subset()
            .ok_or_else(|| invalid("no complete row to train on"))?,
        MissingArg::Use => data.clone(),
    };
    if alg.is_batch() && train.has_missing() {
        return Err(invalid(format!(
            "{alg} does not accept missing values; rerun with --missing exclude"
        )));
    }
    let n = train.n_rows();
    let total = args.iters.unwrap_or(alg.default_iters()).resolve(n);
    let radii = match alg {
        Algorithm::Forgy | Algorithm::Scl => RadiusSchedule::constant(0),
        _ => radius_schedule(args, &topo, total)?,
    };
    let codes0 = initialize(args.init, &train, &topo, seed)?;
    let train_seed = derive_seed(seed, 1);
    let mut notes = Vec::new();
    let mut batch_note = |stop: StopReason, sweeps: usize, warnings: Vec<String>| {
        let how = match stop {
            StopReason::Converged => "converged",
            StopReason::Cycle => "stopped on a cycle",
            StopReason::MaxIterations => "stopped at the sweep limit",
        };
        notes.push(format!("{how} after {sweeps} sweeps"));
        notes.extend(warnings);
    };
    let book = match alg {
        Algorithm::Forgy => {
            let run = forgy(&train, &codes0, total)?;
            batch_note(run.stop, run.iterations, run.warnings);
            run.codebook
        }
        Algorithm::Kbatch => {
            let run = kbatch_train(&train, &codes0, &radii, total)?;
            batch_note(run.stop, run.iterations, run.warnings);
            run.codebook
        }
        Algorithm::Scl => scl_train(&train, &codes0, &gain(args, total)?, train_seed)?,
        Algorithm::Som => som_train(
            &train,
            &codes0,
            &gain(args, total)?,
            &radii,
            train_seed,
            MissingMode::UseDuringTraining,
        )?,
        _ => unreachable!("qualitative algorithm in the quantitative path"),
    };

    let assignment = assign_all(&book, &data)?;
    let (dendrogram, cut) = superclassing(&book, args)?;
    let sc_labels = cut.as_ref().map(|s| s.labels.as_slice());
    let records: Vec<AssignmentRecord> = table
        .ids
        .iter()
        .zip(assignment.class_of())
        .map(|(id, &u)| AssignmentRecord::placed("row", id, u, sc_labels))
        .collect();

    let quality = quality_report(&data, &book, REPORT_RADIUS, sc_labels)?;
    let (groups, n_groups): (Vec<usize>, usize) = match &cut {
        Some(s) => (assignment.class_of().iter().map(|&u| s.labels[u]).collect(), s.count),
        None => (assignment.class_of().to_vec(), book.unit_count()),
    };
    let devs = table
        .quals
        .iter()
        .map(|q| deviation_table(&groups, n_groups, q))
        .collect::<Result<Vec<_>>>()?;
    let header = Header {
        algorithm: alg,
        topology: topo,
        training_vectors: n,
        iterations: total,
        radius_schedule: radii.to_string(),
        seed,
    };
    let report = report::quantitative(&header, &quality, cut.as_ref(), &notes, &devs);
    Ok(RunOutput {
        codebook: CodebookDoc::new(
            alg.as_str(),
            Space::Quantitative,
            &book,
            data.col_labels().to_vec(),
            &standardization,
        ),
        assignment: records,
        superclasses: SuperclassDoc::new(&dendrogram, args.linkage.as_str(), cut.as_ref()),
        report,
        training_vectors: n,
        iterations: total,
        radius_schedule: radii.to_string(),
    })
}

fn deviation_table(groups: &[usize], n_groups: usize, q: &QualitativeColumn) -> Result<DeviationTable> {
    Ok(DeviationTable {
        variable: q.name().to_string(),
        levels: q.levels().to_vec(),
        values: deviations(groups, n_groups, q)?,
    })
}

/// Row ids and qualitative columns: the `--qual` columns, or every column
/// that is neither the id nor ignored.
fn read_quals(args: &TrainArgs) -> Result<(Vec<String>, Vec<QualitativeColumn>)> {
    let default = if args.qual.is_empty() { Role::Qualitative } else { Role::Ignore };
    let mut schema = Schema::new(default)
        .with_all(&args.qual, Role::Qualitative)
        .with_all(&args.ignore, Role::Ignore);
    if let Some(id) = &args.id {
        schema = schema.with(id, Role::Id);
    }
    let table = ingest_csv(&args.data, &schema, &args.missing_token)?;
    Ok((table.ids, table.quals))
}

fn restrict(q: &QualitativeColumn, rows: &[usize]) -> Result<QualitativeColumn> {
    let codes = rows.iter().map(|&r| q.codes()[r]).collect();
    Ok(QualitativeColumn::new(q.name(), q.levels().to_vec(), codes)?)
}

fn qualitative_run(alg: Algorithm, args: &TrainArgs, topo: MapTopology, seed: u64) -> Result<RunOutput> {
    let settings_for = |n: usize| -> Result<(SomSettings, usize)> {
        let total = args.iters.unwrap_or(alg.default_iters()).resolve(n);
        let settings = SomSettings {
            topology: topo,
            gain: gain(args, total)?,
            radii: radius_schedule(args, &topo, total)?,
            seed,
        };
        Ok((settings, total))
    };
    let header = |n: usize, total: usize, s: &SomSettings| Header {
        algorithm: alg,
        topology: topo,
        training_vectors: n,
        iterations: total,
        radius_schedule: s.radii.to_string(),
        seed,
    };

    if alg == Algorithm::Korresp {
        let table = if args.contingency {
            read_contingency(&args.data, args.id.as_deref(), &args.ignore)?
        } else {
            let (_, quals) = read_quals(args)?;
            if quals.len() != 2 {
                return Err(invalid("korresp requires exactly 2 qualitative variables"));
            }
            ContingencyTable::from_columns(&quals[0], &quals[1])?
        };
        let n = table.n_rows() + table.n_cols();
        let (settings, total) = settings_for(n)?;
        let k = korresp_train(&table, &settings)?;
        let (dendrogram, cut) = superclassing(&k.codebook, args)?;
        let sc = cut.as_ref().map(|s| s.labels.as_slice());
        let rows: Vec<(String, usize)> = table.row_labels().iter().cloned().zip(k.row_placement.clone()).collect();
        let cols: Vec<(String, usize)> = table.col_labels().iter().cloned().zip(k.col_placement.clone()).collect();
        let mut records: Vec<AssignmentRecord> = rows
            .iter()
            .map(|(l, u)| AssignmentRecord::placed("row-modality", l, *u, sc))
            .collect();
        records.extend(cols.iter().map(|(l, u)| AssignmentRecord::placed("col-modality", l, *u, sc)));
        let columns: Vec<String> = table.col_labels().iter().chain(table.row_labels()).cloned().collect();
        let h = header(n, total, &settings);
        let report = report::qualitative(
            &h,
            &format!("contingency {}x{}, total {}", table.n_rows(), table.n_cols(), table.total()),
            None,
            &[("row modalities", rows), ("column modalities", cols)],
            cut.as_ref(),
            &[],
        );
        return Ok(RunOutput {
            codebook: qualitative_doc(alg, &k.codebook, columns),
            assignment: records,
            superclasses: SuperclassDoc::new(&dendrogram, args.linkage.as_str(), cut.as_ref()),
            report,
            training_vectors: n,
            iterations: total,
            radius_schedule: settings.radii.to_string(),
        });
    }

    let (ids, quals) = read_quals(args)?;
    if quals.len() < 2 {
        return Err(invalid(format!(
            "{alg} requires at least 2 qualitative variables, found {}",
            quals.len()
        )));
    }
    let tables = build_tables(&quals)?;
    let d = &tables.disjunctive;
    let b = &tables.burt;
    let modalities = d.modality_labels().to_vec();
    let individuals: Vec<String> = d.source_rows().iter().map(|&r| ids[r].clone()).collect();

    let n = match alg {
        Algorithm::Kacm | Algorithm::Kacm2 => d.modality_count(),
        Algorithm::Kacm1 => d.individual_count(),
        _ => d.modality_count() + d.individual_count(),
    };
    let (settings, total) = settings_for(n)?;
    let (book, columns, quality_matrix, modality_units, individual_units) = match alg {
        Algorithm::Kacm | Algorithm::Kacm2 => {
            let k = kacm_train(b, &settings)?;
            let ind = if alg == Algorithm::Kacm2 {
                Some(kacm2_classify_individuals(&k.codebook, d)?)
            } else {
                None
            };
            let q = quality_on(&k.corrected.values, &k.codebook, &modalities)?;
            (k.codebook, modalities.clone(), Some(("corrected Burt table", q)), k.placement, ind)
        }
        Algorithm::Kacm1 => {
            let k = kacm1_train(d, b, &settings)?;
            let corrected = somkit::qualitative::chi2_correct_disjunctive(d)?;
            let q = quality_on(&corrected.values, &k.codebook, &individuals)?;
            (
                k.codebook,
                modalities.clone(),
                Some(("corrected disjunctive table", q)),
                k.modality_placement,
                Some(k.individual_placement),
            )
        }
        Algorithm::Kdisj => {
            let k = kdisj_train(d, &settings)?;
            let columns = modalities.iter().chain(&individuals).cloned().collect();
            (k.codebook, columns, None, k.modality_placement, Some(k.individual_placement))
        }
        _ => unreachable!("korresp handled above"),
    };

    let (dendrogram, cut) = superclassing(&book, args)?;
    let sc = cut.as_ref().map(|s| s.labels.as_slice());
    let mod_items: Vec<(String, usize)> = modalities.iter().cloned().zip(modality_units).collect();
    let mut records: Vec<AssignmentRecord> = mod_items
        .iter()
        .map(|(l, u)| AssignmentRecord::placed("modality", l, *u, sc))
        .collect();
    let mut placements = vec![("modalities", mod_items)];
    let mut devs = Vec::new();
    if let Some(units) = &individual_units {
        records.extend(
            individuals
                .iter()
                .zip(units)
                .map(|(l, &u)| AssignmentRecord::placed("individual", l, u, sc)),
        );
        let (groups, n_groups): (Vec<usize>, usize) = match &cut {
            Some(s) => (units.iter().map(|&u| s.labels[u]).collect(), s.count),
            None => (units.clone(), topo.unit_count()),
        };
        for q in &quals {
            devs.push(deviation_table(&groups, n_groups, &restrict(q, d.source_rows())?)?);
        }
        placements.push(("individuals", individuals.iter().cloned().zip(units.iter().copied()).collect()));
    }
    let h = header(n, total, &settings);
    let tables_line = format!(
        "{} variables, {} modalities, {} individuals ({} with missing values left out)",
        d.variable_count(),
        d.modality_count(),
        d.individual_count(),
        tables.excluded_rows().len()
    );
    let quality_ref = quality_matrix.as_ref().map(|(m, q)| (*m, q));
    let report = report::qualitative(&h, &tables_line, quality_ref, &placements, cut.as_ref(), &devs);
    Ok(RunOutput {
        codebook: qualitative_doc(alg, &book, columns),
        assignment: records,
        superclasses: SuperclassDoc::new(&dendrogram, args.linkage.as_str(), cut.as_ref()),
        report,
        training_vectors: n,
        iterations: total,
        radius_schedule: settings.radii.to_string(),
    })
}

fn quality_on(
    values: &ndarray::Array2<f64>,
    book: &CodeBook,
    row_labels: &[String],
) -> Result<somkit::metrics::QualityReport> {
    let data = DataMatrix::with_labels(
        values.clone(),
        values.mapv(|_| false),
        row_labels.to_vec(),
        (0..values.ncols()).map(|j| format!("c{j}")).collect(),
    )?;
    Ok(quality_report(&data, book, REPORT_RADIUS, None)?)
}

fn qualitative_doc(alg: Algorithm, book: &CodeBook, columns: Vec<String>) -> CodebookDoc {
    let st = Standardization::identity(book.dim());
    CodebookDoc::new(alg.as_str(), Space::Qualitative, book, columns, &st)
}

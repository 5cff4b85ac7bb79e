//! Plain-text quality reports.

use std::fmt::Write;

use ndarray::Array2;
use somkit::metrics::QualityReport;
use somkit::{MapTopology, SuperClassing};

use crate::config::Algorithm;

/// Observed minus expected counts of one qualitative variable per group.
#[derive(Debug, Clone)]
pub struct DeviationTable {
    pub variable: String,
    pub levels: Vec<String>,
    /// Levels by groups.
    pub values: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct Header {
    pub algorithm: Algorithm,
    pub topology: MapTopology,
    pub training_vectors: usize,
    pub iterations: usize,
    pub radius_schedule: String,
    pub seed: u64,
}

fn header(out: &mut String, h: &Header) {
    let t = &h.topology;
    let _ = writeln!(out, "algorithm          {}", h.algorithm);
    let _ = writeln!(out, "topology           {} {}x{}", t.kind(), t.rows(), t.cols());
    let _ = writeln!(out, "training vectors   {}", h.training_vectors);
    let _ = writeln!(out, "iterations         {}", h.iterations);
    let _ = writeln!(out, "radius schedule    {}", h.radius_schedule);
    let _ = writeln!(out, "seed               {}", h.seed);
}

/// One summary line `Dist | CI 1 .. CI k | Wilks | % inert`, then the detail.
pub fn quantitative(
    h: &Header,
    q: &QualityReport,
    superclasses: Option<&SuperClassing>,
    notes: &[String],
    deviations: &[DeviationTable],
) -> String {
    let mut out = String::new();
    header(&mut out, h);
    let _ = writeln!(out, "rows used          {} ({} incomplete left out)", q.rows_used, q.rows_excluded);
    for n in notes {
        let _ = writeln!(out, "note               {n}");
    }
    out.push('\n');

    let dist = q.distortion / q.rows_used as f64;
    let wilks = q.wilks_lambda.map_or("n/a".to_string(), |w| format!("{w:.4}"));
    let inert = q.explained_inertia_pct.map_or("n/a".to_string(), |p| format!("{p:.1}"));
    let mut head = format!("{:<12}", "Dist");
    let mut line = format!("{:<12}", format!("{dist:.6}"));
    for (k, size) in q.group_sizes.iter().enumerate() {
        let _ = write!(head, "{:>7}", format!("CI {}", k + 1));
        let _ = write!(line, "{size:>7}");
    }
    let _ = write!(head, "{:>10}{:>10}", "Wilks", "% inert");
    let _ = write!(line, "{wilks:>10}{inert:>10}");
    let _ = writeln!(out, "{}\n{}\n", head.trim_end(), line.trim_end());

    let groups = if superclasses.is_some() { "super-classes" } else { "map units" };
    kv(&mut out, "distortion", format!("{:.6}", q.distortion));
    kv(&mut out, "distortion per row", format!("{dist:.6}"));
    kv(&mut out, &format!("extended distortion (r={})", q.radius), format!("{:.6}", q.extended_distortion));
    kv(&mut out, "SS-intra", format!("{:.6}", q.ss_intra));
    kv(&mut out, &format!("Wilks lambda ({groups})"), wilks);
    kv(&mut out, &format!("explained inertia ({groups})"), format!("{inert}%"));
    out.push('\n');

    let sizes: Vec<String> = q.class_sizes.iter().map(|c| c.to_string()).collect();
    let _ = writeln!(out, "class sizes");
    out.push_str(&lattice(&h.topology, &sizes));
    superclass_section(&mut out, &h.topology, superclasses);
    for d in deviations {
        deviation_section(&mut out, d, groups);
    }
    out
}

/// Members of each unit, for the qualitative algorithms.
pub fn qualitative(
    h: &Header,
    tables: &str,
    quality: Option<(&str, &QualityReport)>,
    placements: &[(&str, Vec<(String, usize)>)],
    superclasses: Option<&SuperClassing>,
    deviations: &[DeviationTable],
) -> String {
    let mut out = String::new();
    header(&mut out, h);
    let _ = writeln!(out, "tables             {tables}");
    out.push('\n');
    if let Some((matrix, q)) = quality {
        let _ = writeln!(out, "quantization of the {matrix}");
        kv(&mut out, "distortion", format!("{:.6}", q.distortion));
        kv(&mut out, &format!("extended distortion (r={})", q.radius), format!("{:.6}", q.extended_distortion));
        let inert = q.explained_inertia_pct.map_or("n/a".to_string(), |p| format!("{p:.1}%"));
        kv(&mut out, "explained inertia", inert);
        out.push('\n');
    }
    let n = h.topology.unit_count();
    for (kind, items) in placements {
        let mut members = vec![Vec::new(); n];
        for (label, u) in items {
            members[*u].push(label.as_str());
        }
        let _ = writeln!(out, "{kind} by unit");
        for (u, m) in members.iter().enumerate() {
            if m.is_empty() {
                continue;
            }
            let (r, c) = h.topology.unit_coords(u).expect("unit in range");
            let _ = writeln!(out, "  {u:>4} ({r},{c})  {}", m.join(" "));
        }
        out.push('\n');
    }
    superclass_section(&mut out, &h.topology, superclasses);
    let groups = if superclasses.is_some() { "super-classes" } else { "map units" };
    for d in deviations {
        deviation_section(&mut out, d, groups);
    }
    out
}

fn blank_line(out: &mut String) {
    if !out.ends_with("\n\n") {
        out.push('\n');
    }
}

fn kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key:<36}{value}");
}

fn superclass_section(out: &mut String, topo: &MapTopology, sc: Option<&SuperClassing>) {
    let Some(sc) = sc else { return };
    blank_line(out);
    let _ = writeln!(out, "super-classes ({}, S={})", sc.linkage, sc.count);
    let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "  sizes        {}", list(&sc.sizes()));
    let _ = writeln!(
        out,
        "  components   {}  ({})",
        list(&sc.components),
        if sc.all_contiguous() { "contiguous" } else { "not contiguous" }
    );
    let labels: Vec<String> = sc.labels.iter().map(|l| (l + 1).to_string()).collect();
    out.push_str(&lattice(topo, &labels));
}

fn deviation_section(out: &mut String, d: &DeviationTable, groups: &str) {
    blank_line(out);
    let _ = writeln!(out, "deviations for `{}` over {groups} (observed - expected)", d.variable);
    let width = d.levels.iter().map(|l| l.len()).max().unwrap_or(0).max(8);
    let mut head = format!("{:<width$}", "modality");
    for g in 0..d.values.ncols() {
        let _ = write!(head, "{:>9}", g + 1);
    }
    let _ = writeln!(out, "{head}{:>9}", "sum");
    for (m, level) in d.levels.iter().enumerate() {
        let mut line = format!("{level:<width$}");
        let row = d.values.row(m);
        for v in row {
            let _ = write!(line, "{:>9}", fixed(*v, 2));
        }
        let _ = writeln!(out, "{line}{:>9}", fixed(row.sum(), 2));
    }
}

fn fixed(v: f64, digits: usize) -> String {
    let s = format!("{v:.digits$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Values laid out as the map: one text line per lattice row.
fn lattice(topo: &MapTopology, values: &[String]) -> String {
    let width = values.iter().map(String::len).max().unwrap_or(1);
    let mut out = String::new();
    for r in 0..topo.rows() {
        out.push(' ');
        for c in 0..topo.cols() {
            let u = topo.unit_at(r, c).expect("inside lattice");
            let _ = write!(out, " {:>width$}", values[u]);
        }
        out.push('\n');
    }
    out
}

//! Run directory artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use somkit::superclass::{Dendrogram, SuperClassing};
use somkit::{CodeBook, MapTopology, Standardization, StandardizeMode, TopologyKind};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const CODEBOOK_FILE: &str = "codebook.json";
pub const ASSIGNMENT_FILE: &str = "assignment.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const SUPERCLASSES_FILE: &str = "superclasses.json";
pub const CONFIG_FILE: &str = "config.json";

pub const CODEBOOK_FORMAT: &str = "somkit-codebook";
pub const CODEBOOK_VERSION: u32 = 1;

/// Shortest decimal text that parses back to the same `f64`.
pub fn encode_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn decode_f64(s: &str) -> Option<f64> {
    s.parse().ok().filter(|v: &f64| v.is_finite())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    /// Codes live in the (standardized) space of the quantitative columns.
    Quantitative,
    /// Codes live in a corrected table built from qualitative columns.
    Qualitative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyDoc {
    pub kind: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationDoc {
    pub mode: String,
    pub means: Vec<String>,
    pub scales: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookDoc {
    pub format: String,
    pub version: u32,
    pub algorithm: String,
    pub space: Space,
    pub topology: TopologyDoc,
    pub columns: Vec<String>,
    pub standardization: StandardizationDoc,
    pub codes: Vec<Vec<String>>,
}

impl CodebookDoc {
    pub fn new(
        algorithm: &str,
        space: Space,
        book: &CodeBook,
        columns: Vec<String>,
        standardization: &Standardization,
    ) -> Self {
        let topo = book.topology();
        Self {
            format: CODEBOOK_FORMAT.into(),
            version: CODEBOOK_VERSION,
            algorithm: algorithm.into(),
            space,
            topology: TopologyDoc {
                kind: topo.kind().as_str().into(),
                rows: topo.rows(),
                cols: topo.cols(),
            },
            columns,
            standardization: StandardizationDoc {
                mode: standardization.mode.as_str().into(),
                means: standardization.means.iter().map(|&v| encode_f64(v)).collect(),
                scales: standardization.scales.iter().map(|&v| encode_f64(v)).collect(),
            },
            codes: book
                .codes()
                .rows()
                .into_iter()
                .map(|r| r.iter().map(|&v| encode_f64(v)).collect())
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let doc: Self = serde_json::from_str(&text).map_err(|e| CliError::json(path, e))?;
        if doc.format != CODEBOOK_FORMAT {
            return Err(CliError::malformed(path, format!("format `{}`", doc.format)));
        }
        if doc.version != CODEBOOK_VERSION {
            return Err(CliError::malformed(path, format!("unsupported version {}", doc.version)));
        }
        doc.codebook().map_err(|e| CliError::malformed(path, e.to_string()))?;
        doc.standardization().map_err(|e| CliError::malformed(path, e.to_string()))?;
        Ok(doc)
    }

    pub fn topology(&self) -> Result<MapTopology> {
        let kind: TopologyKind = self.topology.kind.parse()?;
        Ok(MapTopology::new(kind, self.topology.rows, self.topology.cols)?)
    }

    pub fn codebook(&self) -> Result<CodeBook> {
        let topo = self.topology()?;
        let p = self.columns.len();
        let mut flat = Vec::with_capacity(self.codes.len() * p);
        for (u, row) in self.codes.iter().enumerate() {
            if row.len() != p {
                return Err(CliError::Validation(format!(
                    "code {u} has {} components, expected {p}",
                    row.len()
                )));
            }
            for s in row {
                flat.push(
                    decode_f64(s).ok_or_else(|| CliError::Validation(format!("bad number `{s}` in code {u}")))?,
                );
            }
        }
        let codes = Array2::from_shape_vec((self.codes.len(), p), flat).expect("checked shape");
        Ok(CodeBook::new(topo, codes)?)
    }

    pub fn standardization(&self) -> Result<Standardization> {
        let mode: StandardizeMode = self.standardization.mode.parse()?;
        let parse = |v: &[String]| -> Result<Vec<f64>> {
            v.iter()
                .map(|s| decode_f64(s).ok_or_else(|| CliError::Validation(format!("bad number `{s}`"))))
                .collect()
        };
        let means = parse(&self.standardization.means)?;
        let scales = parse(&self.standardization.scales)?;
        if means.len() != self.columns.len() || scales.len() != self.columns.len() {
            return Err(CliError::Validation("standardization width differs from columns".into()));
        }
        Ok(Standardization { mode, means, scales })
    }
}

/// One line of an assignment file. `unit` is empty on error records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub kind: String,
    pub label: String,
    pub unit: Option<usize>,
    pub superclass: Option<usize>,
    pub error: String,
}

impl AssignmentRecord {
    pub fn placed(kind: &str, label: impl Into<String>, unit: usize, superclasses: Option<&[usize]>) -> Self {
        Self {
            kind: kind.into(),
            label: label.into(),
            unit: Some(unit),
            superclass: superclasses.map(|s| s[unit]),
            error: String::new(),
        }
    }

    pub fn failed(kind: &str, label: impl Into<String>, error: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            label: label.into(),
            unit: None,
            superclass: None,
            error: error.into(),
        }
    }
}

pub fn assignment_csv(records: &[AssignmentRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).map_err(|e| CliError::csv(ASSIGNMENT_FILE, e))?;
    }
    if records.is_empty() {
        w.write_record(["kind", "label", "unit", "superclass", "error"])
            .map_err(|e| CliError::csv(ASSIGNMENT_FILE, e))?;
    }
    w.into_inner()
        .map_err(|e| CliError::io(ASSIGNMENT_FILE, e.into_error()))
}

pub fn load_assignment(path: &Path) -> Result<Vec<AssignmentRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::csv(path, e))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| CliError::csv(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeDoc {
    pub a: usize,
    pub b: usize,
    pub height: String,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperclassDoc {
    pub linkage: String,
    pub count: Option<usize>,
    /// Super-class of each unit.
    pub labels: Option<Vec<usize>>,
    pub sizes: Option<Vec<usize>>,
    /// Connected pieces of each super-class on the lattice.
    pub components: Option<Vec<usize>>,
    pub contiguous: Option<bool>,
    pub merges: Vec<MergeDoc>,
}

impl SuperclassDoc {
    pub fn new(dendrogram: &Dendrogram, linkage: &str, cut: Option<&SuperClassing>) -> Self {
        Self {
            linkage: linkage.into(),
            count: cut.map(|s| s.count),
            labels: cut.map(|s| s.labels.clone()),
            sizes: cut.map(|s| s.sizes()),
            components: cut.map(|s| s.components.clone()),
            contiguous: cut.map(|s| s.all_contiguous()),
            merges: dendrogram
                .merges()
                .iter()
                .map(|m| MergeDoc {
                    a: m.a,
                    b: m.b,
                    height: encode_f64(m.height),
                    size: m.size,
                })
                .collect(),
        }
    }
}

pub fn to_json<T: Serialize>(value: &T, name: &str) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::json(name, e))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(CliError::MissingArtifact(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::json(path, e))
}

pub fn load_config(run: &Path) -> Result<RunConfig> {
    read_json(&run.join(CONFIG_FILE))
}

/// Writes every file into a hidden sibling directory, then renames it to
/// `out`. Nothing is left behind on failure.
pub fn write_run_dir(out: &Path, files: &[(&str, Vec<u8>)]) -> Result<PathBuf> {
    if out.exists() {
        return Err(CliError::OutputExists(out.to_path_buf()));
    }
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(|e| CliError::io(&parent, e))?;
    let staging = tempfile::Builder::new()
        .prefix(".somkit-")
        .tempdir_in(&parent)
        .map_err(|e| CliError::io(&parent, e))?;
    for (name, bytes) in files {
        let path = staging.path().join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
    }
    let staged = staging.keep();
    if let Err(e) = fs::rename(&staged, out) {
        let _ = fs::remove_dir_all(&staged);
        return Err(CliError::io(out, e));
    }
    Ok(out.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn decimal_strings_round_trip_bits() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e300, f64::MIN_POSITIVE, -0.0, 123456789.5] {
            let back = decode_f64(&encode_f64(v)).unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v}");
        }
        assert!(decode_f64("NaN").is_none());
    }

    #[test]
    fn codebook_doc_round_trip() {
        let topo = MapTopology::cylinder(2, 2).unwrap();
        let book = CodeBook::new(topo, array![[0.1, 0.2], [1.0 / 3.0, 4.0], [-1.5, 2e-9], [7.0, 8.0]]).unwrap();
        let st = Standardization {
            mode: StandardizeMode::ZScore,
            means: vec![0.7, -0.3],
            scales: vec![1.1, 2.0 / 3.0],
        };
        let doc = CodebookDoc::new("som", Space::Quantitative, &book, vec!["a".into(), "b".into()], &st);
        let text = serde_json::to_string(&doc).unwrap();
        let back: CodebookDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(back.codebook().unwrap(), book);
        assert_eq!(back.standardization().unwrap(), st);
        assert_eq!(back.topology().unwrap(), topo);
    }

    #[test]
    fn assignment_round_trip() {
        let recs = vec![
            AssignmentRecord::placed("row", "a", 3, Some(&[0, 0, 1, 2])),
            AssignmentRecord::placed("row", "b, quoted", 0, None),
            AssignmentRecord::failed("row", "c", "no present component"),
        ];
        let bytes = assignment_csv(&recs).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("kind,label,unit,superclass,error\nrow,a,3,2,\n"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        fs::write(&path, bytes).unwrap();
        assert_eq!(load_assignment(&path).unwrap(), recs);
    }

    #[test]
    fn run_dir_refuses_existing_target() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        write_run_dir(&out, &[("x.txt", b"1".to_vec())]).unwrap();
        assert_eq!(fs::read(out.join("x.txt")).unwrap(), b"1");
        assert!(matches!(
            write_run_dir(&out, &[("x.txt", b"2".to_vec())]),
            Err(CliError::OutputExists(_))
        ));
        let leftovers: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().starts_with(".somkit-"))
            .collect();
        assert!(leftovers.is_empty());
    }
}

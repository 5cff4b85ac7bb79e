//! Agglomerative clustering of code vectors into super-classes.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::quantize::CodeBook;
use crate::topology::MapTopology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Linkage {
    #[default]
    Ward,
    Complete,
    Average,
}

impl Linkage {
    pub fn as_str(self) -> &'static str {
        match self {
            Linkage::Ward => "ward",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ward" => Ok(Linkage::Ward),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            other => Err(Error::InvalidParameter(format!(
                "unknown linkage `{other}` (expected ward, complete or average)"
            ))),
        }
    }
}

/// One agglomeration step. Leaves are `0..n`; the cluster created by merge
/// `k` gets id `n + k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

/// Full merge history over `n` leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    leaves: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    /// Clusters the rows of `points`. Ward works on squared Euclidean
    /// distances and reports their square roots as heights; the other
    /// linkages work on Euclidean distances. Ties go to the pair with the
    /// lowest cluster ids.
    pub fn build(points: &Array2<f64>, linkage: Linkage) -> Result<Self> {
        let n = points.nrows();
        if n == 0 {
            return Err(Error::InvalidData("nothing to cluster".into()));
        }
        let mut d = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                let sq: f64 = points
                    .row(i)
                    .iter()
                    .zip(points.row(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                let v = if linkage == Linkage::Ward { sq } else { sq.sqrt() };
                d[[i, j]] = v;
                d[[j, i]] = v;
            }
        }

        let mut id: Vec<usize> = (0..n).collect();
        let mut size = vec![1usize; n];
        let mut active = vec![true; n];
        let mut merges = Vec::with_capacity(n.saturating_sub(1));
        for step in 0..n.saturating_sub(1) {
            let mut best: Option<(f64, usize, usize, usize, usize)> = None;
            for i in (0..n).filter(|&i| active[i]) {
                for j in ((i + 1)..n).filter(|&j| active[j]) {
                    let (lo, hi) = (id[i].min(id[j]), id[i].max(id[j]));
                    let better = match best {
                        None => true,
                        Some((bd, blo, bhi, _, _)) => d[[i, j]] < bd || (d[[i, j]] == bd && (lo, hi) < (blo, bhi)),
                    };
                    if better {
                        best = Some((d[[i, j]], lo, hi, i, j));
                    }
                }
            }
            let (dij, lo, hi, i, j) = best.expect("two active clusters");
            let (ni, nj) = (size[i] as f64, size[j] as f64);
            for k in (0..n).filter(|&k| active[k] && k != i && k != j) {
                let (dki, dkj) = (d[[k, i]], d[[k, j]]);
                let nk = size[k] as f64;
                let merged = match linkage {
                    Linkage::Ward => ((ni + nk) * dki + (nj + nk) * dkj - nk * dij) / (ni + nj + nk),
                    Linkage::Complete => dki.max(dkj),
                    Linkage::Average => (ni * dki + nj * dkj) / (ni + nj),
                };
                d[[k, i]] = merged;
                d[[i, k]] = merged;
            }
            active[j] = false;
            size[i] += size[j];
            id[i] = n + step;
            let height = if linkage == Linkage::Ward { dij.max(0.0).sqrt() } else { dij };
            merges.push(Merge {
                a: lo,
                b: hi,
                height,
                size: size[i],
            });
        }
        Ok(Dendrogram { leaves: n, merges })
    }

    pub fn leaves(&self) -> usize {
        self.leaves
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Flat partition into `s` clusters, labelled `0..s` in order of each
    /// cluster's first leaf.
    pub fn cut(&self, s: usize) -> Result<Vec<usize>> {
        let n = self.leaves;
        if s == 0 || s > n {
            return Err(Error::InvalidParameter(format!(
                "super-class count {s} outside 1..={n}"
            )));
        }
        // cluster id -> representative leaf, via union-find on leaves
        let mut parent: Vec<usize> = (0..n).collect();
        fn root(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut leaf_of: Vec<usize> = (0..n).collect();
        for m in &self.merges[..n - s] {
            let (ra, rb) = (root(&mut parent, leaf_of[m.a]), root(&mut parent, leaf_of[m.b]));
            parent[rb] = ra;
            leaf_of.push(ra);
        }
        let mut label_of_root = vec![usize::MAX; n];
        let mut next = 0;
        let mut labels = Vec::with_capacity(n);
        for leaf in 0..n {
            let r = root(&mut parent, leaf);
            if label_of_root[r] == usize::MAX {
                label_of_root[r] = next;
                next += 1;
            }
            labels.push(label_of_root[r]);
        }
        Ok(labels)
    }
}

/// Units grouped into super-classes, with lattice contiguity.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperClassing {
    pub labels: Vec<usize>,
    pub count: usize,
    pub linkage: Linkage,
    pub dendrogram: Dendrogram,
    /// Connected components of each super-class under radius-1 adjacency.
    pub components: Vec<usize>,
}

impl SuperClassing {
    pub fn is_contiguous(&self, label: usize) -> bool {
        self.components.get(label) == Some(&1)
    }

    pub fn all_contiguous(&self) -> bool {
        self.components.iter().all(|&c| c == 1)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

pub fn hierarchical_superclasses(book: &CodeBook, s: usize, linkage: Linkage) -> Result<SuperClassing> {
    let dendrogram = Dendrogram::build(book.codes(), linkage)?;
    let labels = dendrogram.cut(s)?;
    let components = contiguity_report(&labels, book.topology())?;
    Ok(SuperClassing {
        labels,
        count: s,
        linkage,
        dendrogram,
        components,
    })
}

/// Number of connected components of each label on the lattice, where units
/// within lattice distance 1 are adjacent.
pub fn contiguity_report(labels: &[usize], topo: &MapTopology) -> Result<Vec<usize>> {
    let n = topo.unit_count();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    let count = labels.iter().max().map_or(0, |m| m + 1);
    let mut components = vec![0; count];
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let label = labels[start];
        components[label] += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for v in topo.neighborhood(u, 1)? {
                if !seen[v] && labels[v] == label {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    Ok(components)
}

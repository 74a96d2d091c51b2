//! Attributed graphs: storage, ingestion, symmetrization and the normalized
//! adjacency used by the encoder.
//!
//! Edges are stored as a sorted list of unordered pairs `(min, max)`. Input
//! self-loops are preserved and reported by [`AttributedGraph::stats`].

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub type Edge = (usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct AttributedGraph {
    features: Matrix,
    edges: Vec<Edge>,
    labels: Option<Vec<usize>>,
}

/// Summary counts in the style of the usual benchmark statistics table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphStats {
    pub num_nodes: usize,
    pub num_features: usize,
    /// Unordered pairs, self-loops included.
    pub num_edges: usize,
    /// Each non-loop pair counted in both directions.
    pub num_directed_edges: usize,
    pub num_self_loops: usize,
    pub num_classes: Option<usize>,
    pub class_histogram: Option<Vec<usize>>,
}

/// Canonicalizes a list of (possibly directed, possibly duplicated) pairs into
/// sorted unordered pairs.
pub fn symmetrize(edges: &[Edge]) -> Vec<Edge> {
    let mut out: Vec<Edge> = edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    out.sort_unstable();
    out.dedup();
    out
}

impl AttributedGraph {
    /// Builds a graph from a feature matrix (one row per node) and arbitrary
    /// node pairs, which are symmetrized.
    pub fn new(features: Matrix, edges: &[Edge], labels: Option<Vec<usize>>) -> Result<Self> {
        let n = features.rows();
        if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a >= n || b >= n) {
            return Err(Error::InvalidGraph(format!(
                "edge ({a}, {b}) references a node outside 0..{n}"
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::InvalidGraph(format!(
                    "{} labels for {n} nodes",
                    labels.len()
                )));
            }
        }
        Ok(Self {
            features,
            edges: symmetrize(edges),
            labels,
        })
    }

    pub fn empty() -> Self {
        Self {
            features: Matrix::zeros(0, 0),
            edges: Vec::new(),
            labels: None,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn num_classes(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().max().map_or(0, |&m| m + 1))
    }

    /// Same graph with the feature matrix replaced. Panics if the row count differs.
    pub fn with_features(&self, features: Matrix) -> Self {
        assert_eq!(features.rows(), self.num_nodes(), "row count must match");
        Self {
            features,
            edges: self.edges.clone(),
            labels: self.labels.clone(),
        }
    }

    /// Storage is already canonical, so this is the identity on any constructed graph.
    pub fn symmetrize(&self) -> Self {
        Self {
            features: self.features.clone(),
            edges: symmetrize(&self.edges),
            labels: self.labels.clone(),
        }
    }

    pub fn normalized_adjacency(&self) -> NormalizedAdjacency {
        NormalizedAdjacency::from_edges(self.num_nodes(), &self.edges)
    }

    pub fn stats(&self) -> GraphStats {
        let num_self_loops = self.edges.iter().filter(|(a, b)| a == b).count();
        let class_histogram = self.labels.as_ref().map(|labels| {
            let mut hist = vec![0; self.num_classes().unwrap_or(0)];
            for &l in labels {
                hist[l] += 1;
            }
            hist
        });
        GraphStats {
            num_nodes: self.num_nodes(),
            num_features: self.num_features(),
            num_edges: self.edges.len(),
            num_directed_edges: 2 * (self.edges.len() - num_self_loops) + num_self_loops,
            num_self_loops,
            num_classes: self.num_classes(),
            class_histogram,
        }
    }
}

/// `D̃^{-1/2} (A + I) D̃^{-1/2}` in CSR form, where `D̃` is the degree matrix of `A + I`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl NormalizedAdjacency {
    /// `edges` must be canonical unordered pairs (see [`symmetrize`]).
    pub fn from_edges(n: usize, edges: &[Edge]) -> Self {
        // Weighted neighbour lists of A + I; an input self-loop adds to the diagonal.
        let mut neighbours: Vec<Vec<(usize, f64)>> = (0..n).map(|i| vec![(i, 1.0)]).collect();
        for &(a, b) in edges {
            if a == b {
                neighbours[a][0].1 += 1.0;
            } else {
                neighbours[a].push((b, 1.0));
                neighbours[b].push((a, 1.0));
            }
        }
        let inv_sqrt_deg: Vec<f64> = neighbours
            .iter()
            .map(|row| 1.0 / row.iter().map(|(_, w)| w).sum::<f64>().sqrt())
            .collect();

        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (i, row) in neighbours.iter_mut().enumerate() {
            row.sort_unstable_by_key(|&(j, _)| j);
            for &(j, w) in row.iter() {
                col_idx.push(j);
                values.push(w * inv_sqrt_deg[i] * inv_sqrt_deg[j]);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    /// `Â * x`
    pub fn spmm(&self, x: &Matrix) -> Result<Matrix> {
        if x.rows() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "adjacency over {} nodes applied to {} rows",
                self.n,
                x.rows()
            )));
        }
        let mut out = Matrix::zeros(self.n, x.cols());
        for i in 0..self.n {
            let out_row = out.row_mut(i);
            for (j, w) in self.row(i) {
                for (o, &v) in out_row.iter_mut().zip(x.row(j)) {
                    *o += w * v;
                }
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Numbered, trimmed lines, skipping blanks and `#` comments.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Reads a headerless CSV of decimal floats, one row per node.
pub fn read_feature_csv(path: &Path) -> Result<Matrix> {
    let text = read(path)?;
    let mut data = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (line, content) in content_lines(&text) {
        let before = data.len();
        for field in content.split(',') {
            let value = field.trim().parse::<f64>().map_err(|e| Error::Parse {
                path: path.into(),
                line,
                msg: format!("bad float {field:?}: {e}"),
            })?;
            data.push(value);
        }
        let found = data.len() - before;
        match width {
            None => width = Some(found),
            Some(expected) if expected != found => {
                return Err(Error::RaggedFeatures {
                    path: path.into(),
                    line,
                    expected,
                    found,
                })
            }
            _ => {}
        }
        rows += 1;
    }
    Matrix::from_vec(rows, width.unwrap_or(0), data)
}

/// Reads whitespace-separated 0-based node pairs. Every index must be `< num_nodes`.
pub fn read_edge_list(path: &Path, num_nodes: usize) -> Result<Vec<Edge>> {
    let text = read(path)?;
    let mut edges = Vec::new();
    for (line, content) in content_lines(&text) {
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|e| Error::Parse {
                path: path.into(),
                line,
                msg: format!("bad node index {s:?}: {e}"),
            })
        };
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                path: path.into(),
                line,
                msg: format!("expected 2 columns, found {}", fields.len()),
            });
        }
        let (a, b) = (parse(fields[0])?, parse(fields[1])?);
        if let Some(index) = [a, b].into_iter().find(|&v| v >= num_nodes) {
            return Err(Error::NodeOutOfRange {
                path: path.into(),
                line,
                index,
                num_nodes,
            });
        }
        edges.push((a, b));
    }
    Ok(edges)
}

/// Reads one integer class label per line.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = read(path)?;
    content_lines(&text)
        .map(|(line, content)| {
            content.parse::<usize>().map_err(|e| Error::Parse {
                path: path.into(),
                line,
                msg: format!("bad label {content:?}: {e}"),
            })
        })
        .collect()
}

/// Loads and validates a graph. The node count is the number of feature rows.
pub fn load_graph(
    edges_path: &Path,
    features_path: &Path,
    labels_path: Option<&Path>,
) -> Result<AttributedGraph> {
    let features = read_feature_csv(features_path)?;
    let edges = read_edge_list(edges_path, features.rows())?;
    let labels = labels_path.map(read_labels).transpose()?;
    if let (Some(path), Some(labels)) = (labels_path, &labels) {
        if labels.len() != features.rows() {
            return Err(Error::Parse {
                path: path.into(),
                line: labels.len(),
                msg: format!("{} labels for {} nodes", labels.len(), features.rows()),
            });
        }
    }
    AttributedGraph::new(features, &edges, labels)
}

/// Writes a matrix as headerless CSV using shortest round-trip float formatting.
pub fn write_matrix_csv(path: &Path, m: &Matrix) -> Result<()> {
    let mut out = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_edge_list(path: &Path, edges: &[Edge]) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = String::new();
    for (a, b) in edges {
        out.push_str(&format!("{a} {b}\n"));
    }
    file.write_all(out.as_bytes())
        .map_err(|e| Error::io(path, e))
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let out: String = labels.iter().map(|l| format!("{l}\n")).collect();
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

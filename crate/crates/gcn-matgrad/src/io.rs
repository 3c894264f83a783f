//! Headerless matrix CSV, edge lists and the fixture files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use gcn_matgrad_core::graph::{ddi_fixture, karate_fixture};
use gcn_matgrad_core::{Graph, Matrix};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

pub type IoResult<T> = Result<T, IoError>;

fn read(path: &Path) -> IoResult<String> {
    fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &Path, contents: &str) -> IoResult<()> {
    fs::write(path, contents).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

/// `{}` formatting is the shortest string that parses back to the same f64.
pub fn matrix_to_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        for (j, v) in m.row_slice(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

/// Blank lines are ignored; every other row must have the same width.
pub fn parse_matrix_csv(text: &str, origin: &str) -> IoResult<Matrix> {
    let mut data = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let before = data.len();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| IoError::Parse {
                path: origin.to_string(),
                line: k + 1,
                message: format!("not a number: {:?}", field.trim()),
            })?;
            data.push(v);
        }
        let w = data.len() - before;
        match width {
            None => width = Some(w),
            Some(expected) if expected != w => {
                return Err(IoError::Parse {
                    path: origin.to_string(),
                    line: k + 1,
                    message: format!("expected {expected} columns, found {w}"),
                })
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = width.ok_or_else(|| IoError::Invalid(format!("{origin}: empty matrix file")))?;
    Matrix::from_vec(rows, cols, data).map_err(|e| IoError::Invalid(format!("{origin}: {e}")))
}

pub fn load_matrix(path: &Path) -> IoResult<Matrix> {
    parse_matrix_csv(&read(path)?, &path.display().to_string())
}

pub fn save_matrix(path: &Path, m: &Matrix) -> IoResult<()> {
    write_file(path, &matrix_to_csv(m))
}

/// One `i,j` pair per line, 0-based. Blank lines and `#` comments are
/// skipped. Self-loops and, when `n` is known, out-of-range endpoints are
/// rejected with the offending line number.
pub fn parse_edge_list(text: &str, origin: &str, n: Option<usize>) -> IoResult<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| IoError::Parse {
            path: origin.to_string(),
            line: k + 1,
            message,
        };
        let mut parts = line.split(',').map(str::trim);
        let (a, b) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(err(format!("expected \"i,j\", found {line:?}"))),
        };
        let i: usize = a.parse().map_err(|_| err(format!("bad node index {a:?}")))?;
        let j: usize = b.parse().map_err(|_| err(format!("bad node index {b:?}")))?;
        if i == j {
            return Err(err(format!("self-loop on node {i}")));
        }
        if let Some(n) = n {
            if i >= n || j >= n {
                return Err(err(format!("node index out of range for {n} nodes")));
            }
        }
        edges.push((i.min(j), i.max(j)));
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(edges)
}

pub fn load_edge_list(path: &Path, n: Option<usize>) -> IoResult<Vec<(usize, usize)>> {
    parse_edge_list(&read(path)?, &path.display().to_string(), n)
}

pub fn edge_list_to_csv(edges: &[(usize, usize)]) -> String {
    edges.iter().map(|(i, j)| format!("{i},{j}\n")).collect()
}

/// Dense 0/1 adjacency CSV. Must be square, symmetric and zero on the
/// diagonal.
pub fn adjacency_edges(a: &Matrix, origin: &str) -> IoResult<Vec<(usize, usize)>> {
    if a.rows() != a.cols() {
        return Err(IoError::Invalid(format!("{origin}: adjacency is {}x{}, not square", a.rows(), a.cols())));
    }
    let mut edges = Vec::new();
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let v = a.get(i, j);
            if v != 0.0 && v != 1.0 {
                return Err(IoError::Invalid(format!("{origin}: entry ({i},{j}) is {v}, expected 0 or 1")));
            }
            if v != a.get(j, i) {
                return Err(IoError::Invalid(format!("{origin}: asymmetric at ({i},{j})")));
            }
            if i == j && v != 0.0 {
                return Err(IoError::Invalid(format!("{origin}: self-loop on node {i}")));
            }
            if i < j && v == 1.0 {
                edges.push((i, j));
            }
        }
    }
    Ok(edges)
}

pub fn load_adjacency(path: &Path) -> IoResult<Vec<(usize, usize)>> {
    adjacency_edges(&load_matrix(path)?, &path.display().to_string())
}

/// Files written by the `fixtures` command.
pub const KARATE_EDGES_FILE: &str = "karate_edges.csv";
pub const KARATE_LABELS_FILE: &str = "karate_labels.csv";
pub const DDI_EDGES_FILE: &str = "ddi_edges.csv";
pub const DDI_FEATURES_FILE: &str = "ddi_features.csv";

pub fn write_fixtures(dir: &Path) -> IoResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| IoError::File {
        path: dir.to_path_buf(),
        source,
    })?;
    let karate = karate_fixture();
    let ddi = ddi_fixture();
    let files = [
        (KARATE_EDGES_FILE, edge_list_to_csv(karate.edges())),
        (KARATE_LABELS_FILE, matrix_to_csv(karate.labels().expect("karate has labels"))),
        (DDI_EDGES_FILE, edge_list_to_csv(ddi.edges())),
        (DDI_FEATURES_FILE, matrix_to_csv(ddi.features())),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        write_file(&path, &body)?;
        written.push(path);
    }
    Ok(written)
}

/// Builds a graph from files. Without a feature file the features are
/// `I_n`; `n` then comes from `nodes`, the label count or the largest index.
pub fn load_graph(
    edges: &Path,
    features: Option<&Path>,
    labels: Option<&Path>,
    nodes: Option<usize>,
) -> IoResult<Graph> {
    let x = features.map(load_matrix).transpose()?;
    let y = labels.map(load_matrix).transpose()?;
    let known = nodes.or(x.as_ref().map(Matrix::rows)).or(y.as_ref().map(Matrix::rows));
    let e = load_edge_list(edges, known)?;
    let n = known
        .or_else(|| e.iter().map(|&(_, j)| j + 1).max())
        .ok_or_else(|| IoError::Invalid(format!("{}: cannot infer the node count", edges.display())))?;
    let x = x.unwrap_or_else(|| Matrix::identity(n));
    Graph::new(n, e, x, y).map_err(|err| IoError::Invalid(err.to_string()))
}

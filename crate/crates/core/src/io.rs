//! Plain-text artifacts: matrices, meshes, labels and split tags.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::synth::{Mesh, SplitTag};

const MATRIX_MAGIC: &str = "simclass-matrix";
const MESH_MAGIC: &str = "simclass-mesh";

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), message: message.into() }
}

fn format_rows(header: String, m: &Array2<f64>) -> String {
    let mut out = header;
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

fn parse_rows(path: &Path, text: &str, magic: &str) -> Result<Array2<f64>> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
    if header.len() != 4 || header[0] != magic || header[1] != "v1" {
        return Err(parse_err(path, format!("expected header `{magic} v1 <rows> <cols>`")));
    }
    let dims: Vec<usize> = header[2..]
        .iter()
        .map(|s| s.parse().map_err(|_| parse_err(path, format!("bad dimension `{s}`"))))
        .collect::<Result<_>>()?;
    let (rows, cols) = (dims[0], dims[1]);
    let mut data = Vec::with_capacity(rows * cols);
    for (n, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let before = data.len();
        for tok in line.split_whitespace() {
            data.push(tok.parse::<f64>().map_err(|_| parse_err(path, format!("row {}: bad number `{tok}`", n + 1)))?);
        }
        if data.len() - before != cols {
            return Err(parse_err(path, format!("row {} has {} values, expected {cols}", n + 1, data.len() - before)));
        }
    }
    if data.len() != rows * cols {
        return Err(parse_err(path, format!("expected {rows} rows, found {}", data.len() / cols.max(1))));
    }
    Array2::from_shape_vec((rows, cols), data).map_err(|e| parse_err(path, e.to_string()))
}

pub fn matrix_to_string(m: &Array2<f64>) -> String {
    format_rows(format!("{MATRIX_MAGIC} v1 {} {}\n", m.nrows(), m.ncols()), m)
}

pub fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<()> {
    Ok(fs::write(path, matrix_to_string(m))?)
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    parse_rows(path, &fs::read_to_string(path)?, MATRIX_MAGIC)
}

pub fn write_mesh(path: &Path, mesh: &Mesh<f64>) -> Result<()> {
    let nodes = mesh.nodes();
    Ok(fs::write(path, format_rows(format!("{MESH_MAGIC} v1 {} {}\n", nodes.nrows(), nodes.ncols()), nodes))?)
}

/// Reads node coordinates; grid metadata is inferred from the node layout.
pub fn read_mesh(path: &Path) -> Result<Mesh<f64>> {
    Mesh::new(parse_rows(path, &fs::read_to_string(path)?, MESH_MAGIC)?)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
    Ok(fs::write(path, text)?)
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(n, l)| l.trim().parse().map_err(|_| parse_err(path, format!("line {}: bad label `{l}`", n + 1))))
        .collect()
}

pub fn write_splits(path: &Path, tags: &[SplitTag]) -> Result<()> {
    let text: String = tags.iter().map(|t| format!("{}\n", t.as_str())).collect();
    Ok(fs::write(path, text)?)
}

pub fn read_splits(path: &Path) -> Result<Vec<SplitTag>> {
    fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(n, l)| SplitTag::parse(l.trim()).ok_or_else(|| parse_err(path, format!("line {}: bad split tag `{l}`", n + 1))))
        .collect()
}

pub fn write_json<V: serde::Serialize>(path: &Path, value: &V) -> Result<()> {
    Ok(fs::write(path, serde_json::to_string_pretty(value)? + "\n")?)
}

pub fn read_json<V: serde::de::DeserializeOwned>(path: &Path) -> Result<V> {
    serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| parse_err(path, e.to_string()))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

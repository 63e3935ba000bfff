//! CSV ingestion: a nodes file (`node_id,x,y[,z]`) and a signals file
//! (`node_id,t0,…,t{M−1}`), tied together by a JSON manifest.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::graph::build_knn_graph;
use crate::temporal::TimeSignal;

/// `{name, nodes_path, signals_path, knn_k, densities}`. Relative paths are
/// resolved against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub nodes_path: PathBuf,
    pub signals_path: PathBuf,
    pub knn_k: usize,
    #[serde(default)]
    pub densities: Vec<f64>,
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn parse_cell(path: &Path, row: usize, col: &str, raw: &str) -> Result<f64> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(parse_err(path, format!("missing value at row {row}, column {col}")));
    }
    let v: f64 = trimmed
        .parse()
        .map_err(|_| parse_err(path, format!("unparseable value {trimmed:?} at row {row}, column {col}")))?;
    if !v.is_finite() {
        return Err(parse_err(path, format!("non-finite value {trimmed:?} at row {row}, column {col}")));
    }
    Ok(v)
}

fn parse_id(path: &Path, row: usize, raw: &str) -> Result<usize> {
    raw.trim()
        .parse()
        .map_err(|_| parse_err(path, format!("invalid node_id {raw:?} at row {row}")))
}

/// Reads `node_id`-keyed rows into a dense table ordered by id. Data rows are
/// numbered from 1.
fn read_keyed_rows(path: &Path, min_value_cols: usize) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if headers.first().map(String::as_str) != Some("node_id") {
        return Err(parse_err(path, "first header column must be `node_id`"));
    }
    let value_cols = headers.len() - 1;
    if value_cols < min_value_cols {
        return Err(parse_err(path, format!("expected at least {min_value_cols} value columns, found {value_cols}")));
    }
    let mut keyed: Vec<(usize, Vec<f64>)> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record?;
        if record.len() != headers.len() {
            return Err(parse_err(path, format!("row {row} has {} fields, header has {}", record.len(), headers.len())));
        }
        let id = parse_id(path, row, &record[0])?;
        let values = (1..record.len())
            .map(|c| parse_cell(path, row, &headers[c], &record[c]))
            .collect::<Result<Vec<_>>>()?;
        keyed.push((id, values));
    }
    if keyed.is_empty() {
        return Err(parse_err(path, "no data rows"));
    }
    keyed.sort_by_key(|(id, _)| *id);
    for (expected, (id, _)) in keyed.iter().enumerate() {
        if *id != expected {
            return Err(parse_err(path, format!("node ids must be dense 0..{}; expected {expected}, found {id}", keyed.len() - 1)));
        }
    }
    Ok((headers, keyed.into_iter().map(|(_, v)| v).collect()))
}

/// Node coordinates ordered by `node_id`.
pub fn read_nodes_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let (headers, rows) = read_keyed_rows(path, 2)?;
    if headers.len() > 4 {
        return Err(parse_err(path, "nodes file supports at most 3 coordinates (x,y[,z])"));
    }
    Ok(rows)
}

/// Signal matrix, one row per node ordered by `node_id`.
pub fn read_signals_csv(path: &Path) -> Result<Array2<f64>> {
    let (headers, rows) = read_keyed_rows(path, 2)?;
    let m = headers.len() - 1;
    let n = rows.len();
    Array2::from_shape_vec((n, m), rows.into_iter().flatten().collect())
        .map_err(|e| parse_err(path, format!("ragged signal table: {e}")))
}

pub fn load_dataset_csv(nodes_path: &Path, signals_path: &Path, knn_k: usize, name: &str) -> Result<Dataset> {
    let coords = read_nodes_csv(nodes_path)?;
    let values = read_signals_csv(signals_path)?;
    if values.nrows() != coords.len() {
        return Err(Error::shape("load_dataset_csv node count", coords.len(), values.nrows()));
    }
    let graph = build_knn_graph(&coords, knn_k, None)?;
    Dataset::new(name, graph, TimeSignal::new(values)?, knn_k)
}

/// Loads the manifest and resolves its paths relative to the manifest file.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let mut manifest: DatasetManifest = serde_json::from_reader(File::open(path)?)?;
    let base = path.parent().unwrap_or(Path::new("."));
    for p in [&mut manifest.nodes_path, &mut manifest.signals_path] {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    Ok(manifest)
}

impl DatasetManifest {
    pub fn load_dataset(&self) -> Result<Dataset> {
        load_dataset_csv(&self.nodes_path, &self.signals_path, self.knn_k, &self.name)
    }
}

pub fn write_nodes_csv(path: &Path, coords: &[Vec<f64>]) -> Result<()> {
    let dim = coords.first().map_or(2, Vec::len);
    let names = ["x", "y", "z"];
    if !(2..=3).contains(&dim) {
        return Err(Error::InvalidInput(format!("nodes CSV supports 2 or 3 coordinates, got {dim}")));
    }
    let mut w = std::io::BufWriter::new(File::create(path)?);
    writeln!(w, "node_id,{}", names[..dim].join(","))?;
    for (i, p) in coords.iter().enumerate() {
        let cells: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{i},{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes an `N × M` matrix in the signals format.
pub fn write_matrix_csv(path: &Path, values: &Array2<f64>) -> Result<()> {
    let mut w = std::io::BufWriter::new(File::create(path)?);
    let header: Vec<String> = (0..values.ncols()).map(|t| format!("t{t}")).collect();
    writeln!(w, "node_id,{}", header.join(","))?;
    for (i, row) in values.rows().into_iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{i},{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    const NODES: &str = "node_id,x,y\n0,0.0,0.0\n1,1.0,0.0\n2,0.0,1.5\n";
    const SIGNALS: &str = "node_id,t0,t1,t2\n0,1.5,2.0,-3.25\n1,0.0,1e-3,7\n2,4,5,6\n";

    #[test]
    fn toy_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "nodes.csv", NODES);
        let s = write(dir.path(), "signals.csv", SIGNALS);
        let d = load_dataset_csv(&n, &s, 1, "toy").unwrap();
        assert_eq!(d.signal.values(), &ndarray::array![[1.5, 2.0, -3.25], [0.0, 1e-3, 7.0], [4.0, 5.0, 6.0]]);
        assert_eq!(d.graph.coords().unwrap()[2], vec![0.0, 1.5]);

        let n2 = dir.path().join("nodes2.csv");
        let s2 = dir.path().join("signals2.csv");
        write_nodes_csv(&n2, d.graph.coords().unwrap()).unwrap();
        write_matrix_csv(&s2, d.signal.values()).unwrap();
        assert_eq!(load_dataset_csv(&n2, &s2, 1, "toy").unwrap(), d);
    }

    #[test]
    fn node_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "nodes.csv", NODES);
        let s = write(dir.path(), "signals.csv", "node_id,t0,t1\n0,1,2\n1,3,4\n");
        assert!(matches!(load_dataset_csv(&n, &s, 1, "x"), Err(Error::Shape { .. })));
    }

    #[test]
    fn unsorted_ids_match_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "nodes.csv", NODES);
        let s = write(dir.path(), "signals.csv", SIGNALS);
        let n_rev = write(dir.path(), "nodes_rev.csv", "node_id,x,y\n2,0.0,1.5\n0,0.0,0.0\n1,1.0,0.0\n");
        let s_rev = write(dir.path(), "signals_rev.csv", "node_id,t0,t1,t2\n1,0.0,1e-3,7\n2,4,5,6\n0,1.5,2.0,-3.25\n");
        assert_eq!(load_dataset_csv(&n, &s, 1, "a").unwrap(), load_dataset_csv(&n_rev, &s_rev, 1, "a").unwrap());
    }

    #[test]
    fn missing_and_nan_cells_report_position() {
        let dir = tempfile::tempdir().unwrap();
        let s = write(dir.path(), "s.csv", "node_id,t0,t1\n0,1,\n1,2,3\n");
        let err = read_signals_csv(&s).unwrap_err().to_string();
        assert!(err.contains("row 1") && err.contains("t1"), "{err}");
        let s = write(dir.path(), "s2.csv", "node_id,t0,t1\n0,1,2\n1,NaN,3\n");
        let err = read_signals_csv(&s).unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("t0"), "{err}");
    }

    #[test]
    fn id_gaps_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "n.csv", "node_id,x,y\n0,0,0\n2,1,1\n");
        assert!(read_nodes_csv(&n).unwrap_err().to_string().contains("dense"));
        let h = write(dir.path(), "h.csv", "id,x,y\n0,0,0\n");
        assert!(read_nodes_csv(&h).is_err());
    }

    #[test]
    fn manifest_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "nodes.csv", NODES);
        write(dir.path(), "signals.csv", SIGNALS);
        let m = write(
            dir.path(),
            "manifest.json",
            r#"{"name":"toy","nodes_path":"nodes.csv","signals_path":"signals.csv","knn_k":1,"densities":[0.5]}"#,
        );
        let manifest = load_manifest(&m).unwrap();
        assert_eq!(manifest.densities, vec![0.5]);
        assert_eq!(manifest.load_dataset().unwrap().name, "toy");
    }
}

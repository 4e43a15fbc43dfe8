//! Graph JSON + features CSV on disk.
//!
//! The CSV has header `t,node,density,speed,occupancy`, 0-based integer
//! `t`/`node`, and one row per `(t, node)` cell in any order. Writers print
//! 17 significant digits so values reload bit-for-bit.

use std::path::Path;

use super::{TrafficDataset, CHANNEL_NAMES};
use crate::error::{Error, Result};
use crate::graph::RoadGraph;

pub const FEATURES_HEADER: [&str; 5] = ["t", "node", "density", "speed", "occupancy"];

pub fn load_dataset(graph_path: impl AsRef<Path>, features_path: impl AsRef<Path>) -> Result<TrafficDataset> {
    let graph = RoadGraph::read_json(graph_path)?;
    let features_path = features_path.as_ref();
    let text = std::fs::read_to_string(features_path).map_err(|e| Error::io(features_path, e))?;
    parse_features(graph, &text, &features_path.display().to_string())
}

pub fn load_dataset_from_str(graph_json: &str, features_csv: &str) -> Result<TrafficDataset> {
    let graph = RoadGraph::from_json_str(graph_json)?;
    parse_features(graph, features_csv, "<features csv>")
}

struct Row {
    t: usize,
    node: usize,
    values: [f64; 3],
}

fn parse_features(graph: RoadGraph, text: &str, origin: &str) -> Result<TrafficDataset> {
    let parse_err = |reason: String| Error::Parse {
        path: origin.to_string(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| parse_err(e.to_string()))?.clone();
    if header.iter().ne(FEATURES_HEADER.iter().copied()) {
        return Err(parse_err(format!(
            "expected header {}, found {}",
            FEATURES_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let n = graph.num_nodes();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| parse_err(format!("line {line}: {e}")))?;
        let field = |k: usize| record.get(k).unwrap_or("");
        let int = |k: usize| {
            field(k).parse::<usize>().map_err(|e| {
                parse_err(format!("line {line}: column {}: {:?}: {e}", FEATURES_HEADER[k], field(k)))
            })
        };
        let real = |k: usize| {
            field(k).parse::<f64>().map_err(|e| {
                parse_err(format!("line {line}: column {}: {:?}: {e}", FEATURES_HEADER[k], field(k)))
            })
        };
        let row = Row {
            t: int(0)?,
            node: int(1)?,
            values: [real(2)?, real(3)?, real(4)?],
        };
        if row.node >= n {
            return Err(Error::Validation(format!(
                "line {line}: node {} out of range for {n} nodes",
                row.node
            )));
        }
        if row.values[0] < 0.0 {
            return Err(Error::Validation(format!(
                "line {line}: negative density {} at (t={}, node={})",
                row.values[0], row.t, row.node
            )));
        }
        if row.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "line {line}: non-finite value at (t={}, node={})",
                row.t, row.node
            )));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Validation("features file has no rows".into()));
    }

    rows.sort_by_key(|r| (r.t, r.node));
    let steps = rows.last().map_or(0, |r| r.t + 1);
    let mut expected = (0..steps).flat_map(|t| (0..n).map(move |v| (t, v)));
    let mut features = Vec::with_capacity(steps * n * 3);
    let mut targets = Vec::with_capacity(steps * n);
    for r in &rows {
        let want = expected.next();
        match want {
            Some(cell) if cell == (r.t, r.node) => {}
            Some((t, v)) if (t, v) < (r.t, r.node) => {
                return Err(Error::Validation(format!(
                    "missing row for (t={t}, node={v})"
                )));
            }
            _ => {
                return Err(Error::Validation(format!(
                    "duplicate row for (t={}, node={})",
                    r.t, r.node
                )));
            }
        }
        features.extend_from_slice(&r.values);
        targets.push(r.values[0]);
    }
    TrafficDataset::new(
        graph,
        steps,
        features,
        targets,
        CHANNEL_NAMES.iter().map(|s| s.to_string()).collect(),
    )
}

/// Renders the features CSV for a dataset with the standard three channels.
pub fn features_csv(ds: &TrafficDataset) -> Result<String> {
    if ds.channel_names().iter().ne(CHANNEL_NAMES.iter()) {
        return Err(Error::Validation(format!(
            "cannot export channels {:?}; the file format carries {:?}",
            ds.channel_names(),
            CHANNEL_NAMES
        )));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Validation(e.to_string());
    w.write_record(FEATURES_HEADER).map_err(io)?;
    for t in 0..ds.num_timesteps() {
        for v in 0..ds.num_nodes() {
            let mut rec = vec![t.to_string(), v.to_string()];
            rec.extend((0..3).map(|c| format!("{:.16e}", ds.feature(t, v, c))));
            w.write_record(&rec).map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Validation(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ascii"))
}

/// Writes `graph.json` and `features.csv` into `dir`, returning both paths.
pub fn write_dataset(ds: &TrafficDataset, dir: impl AsRef<Path>) -> Result<(std::path::PathBuf, std::path::PathBuf)> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let graph_path = dir.join("graph.json");
    let features_path = dir.join("features.csv");
    std::fs::write(&graph_path, ds.graph().to_json_string()).map_err(|e| Error::io(&graph_path, e))?;
    std::fs::write(&features_path, features_csv(ds)?).map_err(|e| Error::io(&features_path, e))?;
    Ok((graph_path, features_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRAPH: &str = r#"{"num_nodes": 2, "edges": [[0, 1]]}"#;

    #[test]
    fn minimal_complete_file() {
        let csv = "t,node,density,speed,occupancy\n\
                   0,0,1.0,50,0.1\n0,1,2.0,40,0.2\n1,0,3.0,30,0.3\n1,1,4.0,20,0.4\n";
        let ds = load_dataset_from_str(GRAPH, csv).unwrap();
        assert_eq!(ds.num_timesteps(), 2);
        assert_eq!(ds.num_nodes(), 2);
        assert_eq!(ds.target(1, 0), 3.0);
        assert_eq!(ds.feature(0, 1, 1), 40.0);
    }

    #[test]
    fn missing_row_is_named() {
        let csv = "t,node,density,speed,occupancy\n0,0,1,1,0\n0,1,1,1,0\n1,1,1,1,0\n";
        let err = load_dataset_from_str(GRAPH, csv).unwrap_err().to_string();
        assert!(err.contains("t=1, node=0"), "{err}");
        // trailing gap
        let csv = "t,node,density,speed,occupancy\n0,0,1,1,0\n0,1,1,1,0\n1,0,1,1,0\n2,1,1,1,0\n";
        let err = load_dataset_from_str(GRAPH, csv).unwrap_err().to_string();
        assert!(err.contains("t=1, node=1"), "{err}");
    }

    #[test]
    fn shuffled_rows_match_sorted() {
        let sorted = "t,node,density,speed,occupancy\n0,0,1,5,0.1\n0,1,2,6,0.2\n1,0,3,7,0.3\n1,1,4,8,0.4\n";
        let shuffled = "t,node,density,speed,occupancy\n1,1,4,8,0.4\n0,1,2,6,0.2\n1,0,3,7,0.3\n0,0,1,5,0.1\n";
        assert_eq!(
            load_dataset_from_str(GRAPH, sorted).unwrap(),
            load_dataset_from_str(GRAPH, shuffled).unwrap()
        );
    }

    #[test]
    fn rejects_bad_content() {
        let neg = "t,node,density,speed,occupancy\n0,0,-1,1,0\n0,1,1,1,0\n1,0,1,1,0\n1,1,1,1,0\n";
        assert!(load_dataset_from_str(GRAPH, neg).unwrap_err().to_string().contains("negative density"));
        let dup = "t,node,density,speed,occupancy\n0,0,1,1,0\n0,0,1,1,0\n0,1,1,1,0\n1,0,1,1,0\n1,1,1,1,0\n";
        assert!(load_dataset_from_str(GRAPH, dup).unwrap_err().to_string().contains("duplicate"));
        let header = "time,node,density,speed,occupancy\n0,0,1,1,0\n";
        assert!(matches!(load_dataset_from_str(GRAPH, header), Err(Error::Parse { .. })));
        let range = "t,node,density,speed,occupancy\n0,2,1,1,0\n";
        assert!(load_dataset_from_str(GRAPH, range).is_err());
        let short = "t,node,density,speed,occupancy\n0,0,1,1,0\n0,1,1,1,0\n";
        assert!(load_dataset_from_str(GRAPH, short).is_err());
        let text = "t,node,density,speed,occupancy\n0,0,abc,1,0\n";
        assert!(load_dataset_from_str(GRAPH, text).unwrap_err().to_string().contains("line 2"));
    }
}

use std::fmt::Write as _;
use std::path::Path as FsPath;

use super::{Graph, GraphError};

/// Parses the edge-list text format: a header line `n m`, then `m` lines
/// `u v`. Blank lines and lines starting with `#` are skipped.
pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut lines =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(GraphError::Parse { line: 0, msg: "missing header".into() })?;
    let (n, m) = parse_pair(hline, header)?;
    let mut edges = Vec::with_capacity(m);
    for (line, l) in lines {
        edges.push(parse_pair(line, l)?);
    }
    if edges.len() != m {
        return Err(GraphError::Parse {
            line: hline,
            msg: format!("header declares {m} edges, found {}", edges.len()),
        });
    }
    Graph::from_edges(n, edges)
}

fn parse_pair(line: usize, l: &str) -> Result<(usize, usize), GraphError> {
    let mut it = l.split_whitespace().map(str::parse::<usize>);
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
        _ => Err(GraphError::Parse { line, msg: format!("expected two integers, got {l:?}") }),
    }
}

pub fn read_edge_list(path: impl AsRef<FsPath>) -> Result<Graph, GraphError> {
    let text = std::fs::read_to_string(path).map_err(|e| GraphError::Io(e.to_string()))?;
    parse_edge_list(&text)
}

/// Canonical text: header, then edges `u v` with `u < v` in lexicographic order.
pub fn format_edge_list(g: &Graph) -> String {
    let mut s = String::with_capacity(16 + g.m() * 12);
    let _ = writeln!(s, "{} {}", g.n(), g.m());
    for (u, v) in g.edges() {
        let _ = writeln!(s, "{u} {v}");
    }
    s
}

pub fn write_edge_list(g: &Graph, path: impl AsRef<FsPath>) -> Result<(), GraphError> {
    std::fs::write(path, format_edge_list(g)).map_err(|e| GraphError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let g = Graph::petersen();
        let text = format_edge_list(&g);
        assert!(text.starts_with("10 15\n0 1\n"));
        assert_eq!(parse_edge_list(&text).unwrap(), g);
    }

    #[test]
    fn rejects_malformed() {
        assert!(matches!(parse_edge_list(""), Err(GraphError::Parse { .. })));
        assert!(matches!(parse_edge_list("3 1\n0 x\n"), Err(GraphError::Parse { line: 2, .. })));
        assert!(matches!(parse_edge_list("3 2\n0 1\n"), Err(GraphError::Parse { .. })));
        assert_eq!(parse_edge_list("3 1\n1 1\n"), Err(GraphError::SelfLoop(1)));
        assert_eq!(parse_edge_list("3 2\n0 1\n1 0\n"), Err(GraphError::DuplicateEdge(0, 1)));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        let g = Graph::cycle(7);
        write_edge_list(&g, &path).unwrap();
        assert_eq!(read_edge_list(&path).unwrap(), g);
    }
}

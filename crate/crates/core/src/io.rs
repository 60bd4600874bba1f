//! Plain-text instance and matching formats.
//!
//! Instance (`.ecg`):
//! ```text
//! # comment lines start with '#'
//! p <num_vertices> <num_colors>
//! a <vertex-id>          (optional, repeatable: marks the vertex as side A)
//! e <u> <v> <c>          (one per edge; edge ids are assigned in file order)
//! ```
//!
//! Matching (`.rmm`):
//! ```text
//! m <edge-index> <c>     (edge-index refers to .ecg edge order)
//! ```
//!
//! All ids are 0-based ASCII decimal; lines end with `\n`. Writers emit
//! exactly this shape so that identical inputs round-trip byte-identically.

use crate::graph::{build_graph, ColorId, EdgeColoredGraph, EdgeId, GraphError, RainbowMatching, VertexId};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {source}")]
    BadGraph {
        line: usize,
        #[source]
        source: GraphError,
    },
    #[error("missing 'p' header line")]
    MissingHeader,
}

fn malformed(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Malformed { line, message: message.into() }
}

fn parse_fields<const N: usize>(
    line_no: usize,
    rest: &str,
    what: &str,
) -> Result<[usize; N], ParseError> {
    let mut out = [0usize; N];
    let mut it = rest.split_ascii_whitespace();
    for slot in out.iter_mut() {
        let tok = it
            .next()
            .ok_or_else(|| malformed(line_no, format!("{what}: expected {N} fields")))?;
        *slot = tok
            .parse::<usize>()
            .map_err(|_| malformed(line_no, format!("{what}: bad integer '{tok}'")))?;
    }
    if it.next().is_some() {
        return Err(malformed(line_no, format!("{what}: expected exactly {N} fields")));
    }
    Ok(out)
}

/// Parses an `.ecg` instance. Side-A markings, if any, are applied to the
/// returned graph.
pub fn parse_ecg(text: &str) -> Result<EdgeColoredGraph, ParseError> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges: Vec<(VertexId, VertexId, ColorId)> = Vec::new();
    let mut part_a: Vec<VertexId> = Vec::new();
    let mut header_line = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (tag, rest) = line.split_at(1);
        match tag {
            "p" => {
                if header.is_some() {
                    return Err(malformed(line_no, "duplicate 'p' line"));
                }
                let [n, k] = parse_fields::<2>(line_no, rest, "p line")?;
                header = Some((n, k));
                header_line = line_no;
            }
            "a" => {
                let (n, _) = header.ok_or(ParseError::MissingHeader)?;
                let [v] = parse_fields::<1>(line_no, rest, "a line")?;
                if v >= n {
                    return Err(malformed(line_no, format!("side-A vertex {v} out of range")));
                }
                part_a.push(v);
            }
            "e" => {
                header.ok_or(ParseError::MissingHeader)?;
                let [u, v, c] = parse_fields::<3>(line_no, rest, "e line")?;
                edges.push((u, v, c));
            }
            _ => return Err(malformed(line_no, format!("unknown line tag '{tag}'"))),
        }
    }
    let (n, k) = header.ok_or(ParseError::MissingHeader)?;
    let mut g = build_graph(n, k, &edges).map_err(|source| ParseError::BadGraph {
        line: header_line,
        source,
    })?;
    if !part_a.is_empty() {
        g.set_part_a(&part_a);
    }
    Ok(g)
}

/// Emits the canonical `.ecg` serialization of the graph as built
/// (deletions are state, not structure: all original edges are written).
pub fn write_ecg(g: &EdgeColoredGraph) -> String {
    let mut out = String::new();
    out.push_str(&format!("p {} {}\n", g.num_vertices(), g.num_colors()));
    for v in g.part_a_vertices() {
        out.push_str(&format!("a {v}\n"));
    }
    for e in g.edges() {
        out.push_str(&format!("e {} {} {}\n", e.u, e.v, e.color));
    }
    out
}

/// Parses an `.rmm` matching file.
pub fn parse_rmm(text: &str) -> Result<RainbowMatching, ParseError> {
    let mut m = RainbowMatching::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (tag, rest) = line.split_at(1);
        if tag != "m" {
            return Err(malformed(line_no, format!("unknown line tag '{tag}'")));
        }
        let [e, c] = parse_fields::<2>(line_no, rest, "m line")?;
        m.push(e as EdgeId, c as ColorId);
    }
    Ok(m)
}

pub fn write_rmm(m: &RainbowMatching) -> String {
    let mut out = String::new();
    for &(e, c) in &m.entries {
        out.push_str(&format!("m {e} {c}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_instances_byte_identically() {
        let text = "p 4 2\na 0\na 2\ne 0 1 0\ne 2 3 1\n";
        let g = parse_ecg(text).unwrap();
        assert_eq!(g.num_vertices(), 4);
        assert_eq!(g.num_colors(), 2);
        assert_eq!(g.num_edges(), 2);
        assert!(g.in_part_a(0) && g.in_part_a(2) && !g.in_part_a(1));
        assert_eq!(write_ecg(&g), text);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let g = parse_ecg("# header\np 2 1\n\n# mid\ne 0 1 0\n").unwrap();
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_ecg("p 2 1\ne 0 nope 0\n").unwrap_err() {
            ParseError::Malformed { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected: {other}"),
        }
        match parse_ecg("p 2 1\ne 0 1 0\ne 1 0 0\n").unwrap_err() {
            ParseError::BadGraph { source, .. } => {
                assert!(matches!(source, GraphError::ParallelEdge { .. }))
            }
            other => panic!("unexpected: {other}"),
        }
        assert!(matches!(parse_ecg("e 0 1 0\n").unwrap_err(), ParseError::MissingHeader));
    }

    #[test]
    fn matching_round_trip() {
        let text = "m 3 1\nm 0 0\n";
        let m = parse_rmm(text).unwrap();
        assert_eq!(m.entries, vec![(3, 1), (0, 0)]);
        assert_eq!(write_rmm(&m), text);
    }
}

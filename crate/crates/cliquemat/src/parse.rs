//! Graph file parsing: DIMACS clique-benchmark files, plain edge lists and a
//! GML subset.
//!
//! All formats produce an [`AdjacencyMatrix`] with the diagonal forced to 1;
//! duplicate edges collapse and self-loop lines are ignored. GML node
//! `label`/`value` strings are kept as optional vertex annotations.

use std::io::BufRead;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::AdjacencyMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphFormat {
    Dimacs,
    EdgeList,
    Gml,
}

impl FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dimacs" => Ok(GraphFormat::Dimacs),
            "edgelist" => Ok(GraphFormat::EdgeList),
            "gml" => Ok(GraphFormat::Gml),
            other => Err(Error::InvalidArgument(format!(
                "unknown graph format '{other}' (expected dimacs, edgelist or gml)"
            ))),
        }
    }
}

/// A parsed graph plus any per-vertex annotations the source carried.
#[derive(Clone, Debug)]
pub struct ParsedGraph {
    pub adjacency: AdjacencyMatrix,
    /// GML `label` per vertex, `None` for other formats.
    pub labels: Vec<Option<String>>,
    /// GML `value` per vertex, `None` for other formats.
    pub values: Vec<Option<String>>,
}

impl ParsedGraph {
    fn bare(adjacency: AdjacencyMatrix) -> Self {
        let v = adjacency.vertex_count();
        ParsedGraph {
            adjacency,
            labels: vec![None; v],
            values: vec![None; v],
        }
    }
}

/// Parses a graph in the declared format.
pub fn parse_graph<R: BufRead>(reader: R, format: GraphFormat) -> Result<ParsedGraph> {
    match format {
        GraphFormat::Dimacs => parse_dimacs(reader),
        GraphFormat::EdgeList => parse_edgelist(reader),
        GraphFormat::Gml => parse_gml(reader),
    }
}

fn bad(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| bad(line, format!("{what}: '{tok}' is not a non-negative integer")))
}

/// DIMACS: a `p edge <V> <E>` header, `e <i> <j>` edge lines with 1-indexed
/// vertices, `c` comment lines.
fn parse_dimacs<R: BufRead>(reader: R) -> Result<ParsedGraph> {
    let mut adjacency: Option<AdjacencyMatrix> = None;
    let mut pending: Vec<(usize, usize)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        let mut tok = trimmed.split_whitespace();
        match tok.next() {
            Some("p") => {
                if adjacency.is_some() {
                    return Err(bad(lineno, "duplicate problem header"));
                }
                let kind = tok.next().ok_or_else(|| bad(lineno, "malformed header: missing problem type"))?;
                if kind != "edge" && kind != "col" {
                    return Err(bad(lineno, format!("malformed header: unsupported problem type '{kind}'")));
                }
                let v = parse_usize(
                    tok.next().ok_or_else(|| bad(lineno, "malformed header: missing vertex count"))?,
                    lineno,
                    "vertex count",
                )?;
                let _e = parse_usize(
                    tok.next().ok_or_else(|| bad(lineno, "malformed header: missing edge count"))?,
                    lineno,
                    "edge count",
                )?;
                if v == 0 {
                    return Err(bad(lineno, "vertex count must be positive"));
                }
                adjacency = Some(AdjacencyMatrix::identity(v));
            }
            Some("e") => {
                let a = match &adjacency {
                    Some(a) => a,
                    None => return Err(bad(lineno, "edge before problem header")),
                };
                let v = a.vertex_count();
                let i = parse_usize(
                    tok.next().ok_or_else(|| bad(lineno, "edge line needs two endpoints"))?,
                    lineno,
                    "vertex index",
                )?;
                let j = parse_usize(
                    tok.next().ok_or_else(|| bad(lineno, "edge line needs two endpoints"))?,
                    lineno,
                    "vertex index",
                )?;
                if tok.next().is_some() {
                    return Err(bad(lineno, "trailing tokens after edge endpoints"));
                }
                if i == 0 || j == 0 || i > v || j > v {
                    return Err(bad(
                        lineno,
                        format!("vertex index out of range 1..={v} in edge {i} {j}"),
                    ));
                }
                if i != j {
                    pending.push((i - 1, j - 1));
                }
            }
            Some(other) => {
                return Err(bad(lineno, format!("unrecognized line kind '{other}'")));
            }
            None => unreachable!("non-empty line has a token"),
        }
    }
    let adjacency = adjacency.ok_or_else(|| bad(0, "missing 'p edge' header"))?;
    let v = adjacency.vertex_count();
    let mut all: Vec<(usize, usize)> = adjacency.edges().collect();
    all.extend(pending);
    Ok(ParsedGraph::bare(AdjacencyMatrix::from_edges(v, all).expect("indices validated")))
}

/// Edge list: optional `# vertices <V>` header, one 0-indexed `i j` pair per
/// line, `#` comments. Without a header the vertex count is one past the
/// largest index seen.
fn parse_edgelist<R: BufRead>(reader: R) -> Result<ParsedGraph> {
    let mut declared: Option<usize> = None;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut max_seen: Option<usize> = None;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            let mut tok = rest.split_whitespace();
            if tok.next() == Some("vertices") {
                if declared.is_some() {
                    return Err(bad(lineno, "duplicate vertices header"));
                }
                let v = parse_usize(
                    tok.next().ok_or_else(|| bad(lineno, "malformed header: missing vertex count"))?,
                    lineno,
                    "vertex count",
                )?;
                if v == 0 {
                    return Err(bad(lineno, "vertex count must be positive"));
                }
                declared = Some(v);
            }
            continue;
        }
        let mut tok = trimmed.split_whitespace();
        let i = parse_usize(tok.next().expect("non-empty"), lineno, "vertex index")?;
        let j = parse_usize(
            tok.next().ok_or_else(|| bad(lineno, "edge line needs two endpoints"))?,
            lineno,
            "vertex index",
        )?;
        if tok.next().is_some() {
            return Err(bad(lineno, "trailing tokens after edge endpoints"));
        }
        if let Some(v) = declared {
            if i >= v || j >= v {
                return Err(bad(
                    lineno,
                    format!("vertex index out of range 0..{v} in edge {i} {j}"),
                ));
            }
        }
        max_seen = Some(max_seen.unwrap_or(0).max(i).max(j));
        if i != j {
            edges.push((i, j));
        }
    }
    let v = match (declared, max_seen) {
        (Some(v), _) => v,
        (None, Some(m)) => m + 1,
        (None, None) => return Err(bad(0, "empty edge list with no vertex count")),
    };
    Ok(ParsedGraph::bare(AdjacencyMatrix::from_edges(v, edges).expect("indices validated")))
}

#[derive(Debug, PartialEq)]
enum GmlToken {
    Open,
    Close,
    Word(String),
    Str(String),
}

fn gml_tokens<R: BufRead>(reader: R) -> Result<Vec<(usize, GmlToken)>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let mut chars = line.chars().peekable();
        while let Some(&ch) = chars.peek() {
            match ch {
                '[' => {
                    chars.next();
                    out.push((lineno, GmlToken::Open));
                }
                ']' => {
                    chars.next();
                    out.push((lineno, GmlToken::Close));
                }
                '"' => {
                    chars.next();
                    let mut s = String::new();
                    loop {
                        match chars.next() {
                            Some('"') => break,
                            Some(c) => s.push(c),
                            None => return Err(bad(lineno, "unterminated string")),
                        }
                    }
                    out.push((lineno, GmlToken::Str(s)));
                }
                c if c.is_whitespace() => {
                    chars.next();
                }
                '#' => break, // comment to end of line
                _ => {
                    let mut w = String::new();
                    while let Some(&c) = chars.peek() {
                        if c.is_whitespace() || c == '[' || c == ']' || c == '"' {
                            break;
                        }
                        w.push(c);
                        chars.next();
                    }
                    out.push((lineno, GmlToken::Word(w)));
                }
            }
        }
    }
    Ok(out)
}

/// GML subset: `graph [ node [ id N ... ] edge [ source A target B ] ... ]`.
/// Only `id`, `source` and `target` steer the structure; node `label` and
/// `value` are preserved. Unknown keys and nested lists are skipped.
fn parse_gml<R: BufRead>(reader: R) -> Result<ParsedGraph> {
    let tokens = gml_tokens(reader)?;
    let mut pos = 0usize;

    // find `graph [`
    let mut graph_body = None;
    while pos < tokens.len() {
        if let (_, GmlToken::Word(w)) = &tokens[pos] {
            if w == "graph" {
                if pos + 1 < tokens.len() && tokens[pos + 1].1 == GmlToken::Open {
                    graph_body = Some(pos + 2);
                    break;
                }
                return Err(bad(tokens[pos].0, "expected '[' after 'graph'"));
            }
        }
        pos += 1;
    }
    let mut pos = graph_body.ok_or_else(|| bad(0, "no 'graph [' block found"))?;

    struct Node {
        id: i64,
        label: Option<String>,
        value: Option<String>,
    }
    let mut nodes: Vec<Node> = Vec::new();
    let mut edges: Vec<(i64, i64, usize)> = Vec::new();

    // skip a balanced bracket group starting after an `[`
    let skip_group = |tokens: &[(usize, GmlToken)], mut p: usize| -> Result<usize> {
        let mut depth = 1usize;
        while depth > 0 {
            match tokens.get(p) {
                Some((_, GmlToken::Open)) => depth += 1,
                Some((_, GmlToken::Close)) => depth -= 1,
                Some(_) => {}
                None => return Err(bad(0, "unbalanced brackets")),
            }
            p += 1;
        }
        Ok(p)
    };

    while pos < tokens.len() {
        match &tokens[pos] {
            (_, GmlToken::Close) => break,
            (lineno, GmlToken::Word(w)) if w == "node" || w == "edge" => {
                let is_node = w == "node";
                let header_line = *lineno;
                pos += 1;
                if tokens.get(pos).map(|t| &t.1) != Some(&GmlToken::Open) {
                    return Err(bad(header_line, format!("expected '[' after '{w}'")));
                }
                pos += 1;
                let mut id = None;
                let mut source = None;
                let mut target = None;
                let mut label = None;
                let mut value = None;
                loop {
                    match tokens.get(pos) {
                        Some((_, GmlToken::Close)) => {
                            pos += 1;
                            break;
                        }
                        Some((lineno, GmlToken::Word(key))) => {
                            let lineno = *lineno;
                            pos += 1;
                            match tokens.get(pos) {
                                Some((_, GmlToken::Open)) => {
                                    // nested list (e.g. graphics): skip
                                    pos = skip_group(&tokens, pos + 1)?;
                                }
                                Some((_, tkn @ (GmlToken::Word(_) | GmlToken::Str(_)))) => {
                                    let text = match tkn {
                                        GmlToken::Word(t) | GmlToken::Str(t) => t.clone(),
                                        _ => unreachable!(),
                                    };
                                    match key.as_str() {
                                        "id" | "source" | "target" => {
                                            let n: i64 = text.parse().map_err(|_| {
                                                bad(lineno, format!("{key}: '{text}' is not an integer"))
                                            })?;
                                            match key.as_str() {
                                                "id" => id = Some(n),
                                                "source" => source = Some(n),
                                                _ => target = Some(n),
                                            }
                                        }
                                        "label" => label = Some(text),
                                        "value" => value = Some(text),
                                        _ => {}
                                    }
                                    pos += 1;
                                }
                                _ => return Err(bad(lineno, format!("missing value for key '{key}'"))),
                            }
                        }
                        Some((lineno, tkn)) => {
                            return Err(bad(*lineno, format!("unexpected token {tkn:?} in {w} block")))
                        }
                        None => return Err(bad(header_line, format!("unterminated {w} block"))),
                    }
                }
                if is_node {
                    let id = id.ok_or_else(|| bad(header_line, "node block without id"))?;
                    if nodes.iter().any(|n| n.id == id) {
                        return Err(bad(header_line, format!("duplicate node id {id}")));
                    }
                    nodes.push(Node { id, label, value });
                } else {
                    let s = source.ok_or_else(|| bad(header_line, "edge block without source"))?;
                    let t = target.ok_or_else(|| bad(header_line, "edge block without target"))?;
                    edges.push((s, t, header_line));
                }
            }
            (lineno, GmlToken::Word(key)) => {
                // top-level scalar like `directed 0`: consume key and value
                let lineno = *lineno;
                pos += 1;
                match tokens.get(pos) {
                    Some((_, GmlToken::Open)) => pos = skip_group(&tokens, pos + 1)?,
                    Some((_, GmlToken::Word(_) | GmlToken::Str(_))) => pos += 1,
                    _ => return Err(bad(lineno, format!("missing value for key '{key}'"))),
                }
            }
            (lineno, tkn) => return Err(bad(*lineno, format!("unexpected token {tkn:?}"))),
        }
    }

    if nodes.is_empty() {
        return Err(bad(0, "graph has no nodes"));
    }
    nodes.sort_by_key(|n| n.id);
    let index_of = |id: i64| nodes.binary_search_by_key(&id, |n| n.id);
    let v = nodes.len();
    let mut pairs = Vec::with_capacity(edges.len());
    for (s, t, lineno) in edges {
        let i = index_of(s).map_err(|_| bad(lineno, format!("edge references unknown node {s}")))?;
        let j = index_of(t).map_err(|_| bad(lineno, format!("edge references unknown node {t}")))?;
        if i != j {
            pairs.push((i, j));
        }
    }
    let adjacency = AdjacencyMatrix::from_edges(v, pairs).expect("indices validated");
    Ok(ParsedGraph {
        adjacency,
        labels: nodes.iter().map(|n| n.label.clone()).collect(),
        values: nodes.iter().map(|n| n.value.clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::incidence_matrix;
    use crate::testutil::eq1_adjacency;
    use proptest::prelude::*;

    const FIG1B: &str = "c the four-vertex graph with one chord\np edge 4 5\ne 1 2\ne 1 3\ne 2 3\ne 2 4\ne 3 4\n";

    #[test]
    fn dimacs_parses_the_four_vertex_graph() {
        let g = parse_graph(FIG1B.as_bytes(), GraphFormat::Dimacs).unwrap();
        assert_eq!(g.adjacency, eq1_adjacency());
    }

    #[test]
    fn dimacs_collapses_duplicates_and_ignores_self_loops() {
        let text = "p edge 3 4\ne 1 2\ne 2 1\ne 2 2\ne 2 3\n";
        let g = parse_graph(text.as_bytes(), GraphFormat::Dimacs).unwrap();
        assert_eq!(g.adjacency.edge_count(), 2);
        assert!(g.adjacency.contains(0, 1));
        assert!(g.adjacency.contains(1, 2));
    }

    #[test]
    fn dimacs_errors_carry_line_numbers() {
        let e = parse_graph("p edge x 5\n".as_bytes(), GraphFormat::Dimacs).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }), "{e}");
        let e = parse_graph("p edge 4 1\ne 1 9\n".as_bytes(), GraphFormat::Dimacs).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = parse_graph("e 1 2\n".as_bytes(), GraphFormat::Dimacs).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }), "{e}");
        let e = parse_graph("c only comments\n".as_bytes(), GraphFormat::Dimacs).unwrap_err();
        assert!(matches!(e, Error::Parse { .. }), "{e}");
        let e = parse_graph("p edge 2 1\ne 1 два\n".as_bytes(), GraphFormat::Dimacs).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
    }

    #[test]
    fn edgelist_defaults_vertex_count_to_max_index() {
        let g = parse_graph("0 1\n1 4\n".as_bytes(), GraphFormat::EdgeList).unwrap();
        assert_eq!(g.adjacency.vertex_count(), 5);
        assert_eq!(g.adjacency.edge_count(), 2);
    }

    #[test]
    fn empty_edgelist_with_declared_count_is_edgeless() {
        let g = parse_graph("# vertices 3\n".as_bytes(), GraphFormat::EdgeList).unwrap();
        assert_eq!(g.adjacency, AdjacencyMatrix::identity(3));
    }

    #[test]
    fn edgelist_range_checks_against_declared_count() {
        let e = parse_graph("# vertices 3\n0 3\n".as_bytes(), GraphFormat::EdgeList).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
    }

    #[test]
    fn gml_parses_nodes_edges_and_annotations() {
        let text = r#"
graph [
  directed 0
  node [ id 0 label "alpha" value "l" graphics [ x 1 y 2 ] ]
  node [ id 1 label "beta" value "c" ]
  node [ id 2 ]
  edge [ source 0 target 1 ]
  edge [ source 1 target 2 weight 3 ]
]
"#;
        let g = parse_graph(text.as_bytes(), GraphFormat::Gml).unwrap();
        assert_eq!(g.adjacency.vertex_count(), 3);
        assert_eq!(g.adjacency.edge_count(), 2);
        assert_eq!(g.labels[0].as_deref(), Some("alpha"));
        assert_eq!(g.values[1].as_deref(), Some("c"));
        assert_eq!(g.labels[2], None);
    }

    #[test]
    fn gml_rejects_unknown_edge_endpoints_and_duplicate_ids() {
        let e = parse_graph(
            "graph [ node [ id 0 ] edge [ source 0 target 5 ] ]".as_bytes(),
            GraphFormat::Gml,
        )
        .unwrap_err();
        assert!(matches!(e, Error::Parse { .. }), "{e}");
        let e = parse_graph(
            "graph [ node [ id 0 ] node [ id 0 ] ]".as_bytes(),
            GraphFormat::Gml,
        )
        .unwrap_err();
        assert!(matches!(e, Error::Parse { .. }), "{e}");
    }

    #[test]
    fn dimacs_and_edgelist_forms_agree_on_fig1b() {
        let d = parse_graph(FIG1B.as_bytes(), GraphFormat::Dimacs).unwrap();
        let el = "# vertices 4\n0 1\n0 2\n1 2\n1 3\n2 3\n";
        let e = parse_graph(el.as_bytes(), GraphFormat::EdgeList).unwrap();
        assert_eq!(d.adjacency, e.adjacency);
        assert_eq!(incidence_matrix(&d.adjacency).column_count(), 5);
    }

    proptest! {
        #[test]
        fn dimacs_and_edgelist_agree_on_random_graphs(
            v in 1usize..20,
            seed in 0u64..200,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let mut edges = Vec::new();
            for i in 0..v {
                for j in (i + 1)..v {
                    if rng.random::<f64>() < 0.3 {
                        edges.push((i, j));
                    }
                }
            }
            let mut dimacs = format!("p edge {v} {}\n", edges.len());
            let mut list = format!("# vertices {v}\n");
            for &(i, j) in &edges {
                dimacs.push_str(&format!("e {} {}\n", i + 1, j + 1));
                list.push_str(&format!("{i} {j}\n"));
            }
            let a = parse_graph(dimacs.as_bytes(), GraphFormat::Dimacs).unwrap().adjacency;
            let b = parse_graph(list.as_bytes(), GraphFormat::EdgeList).unwrap().adjacency;
            prop_assert_eq!(a, b);
        }
    }
}

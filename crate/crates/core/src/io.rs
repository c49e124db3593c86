//! Text graph format.
//!
//! ```text
//! p planted3 <num_vertices> <num_edges> <d>
//! c <vertex> <class>        (optional, one line per vertex)
//! e <u> <v>                 (one line per edge, u < v, lexicographic)
//! ```
//!
//! `d` is 0 when unknown. The reader accepts edges in any order and either
//! orientation; the writer always emits the canonical form above.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::{Graph, PlantedColoring};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphFile {
    pub graph: Graph,
    pub coloring: Option<PlantedColoring>,
    pub d: usize,
}

fn field<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse(format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::Parse(format!("bad {what} {tok:?}")))
}

fn no_more<'a>(mut toks: impl Iterator<Item = &'a str>) -> Result<()> {
    match toks.next() {
        Some(t) => Err(Error::Parse(format!("unexpected token {t:?}"))),
        None => Ok(()),
    }
}

pub fn read_graph(reader: impl BufRead) -> Result<GraphFile> {
    let mut lines = reader.lines().enumerate();
    let (n, m, d) = match lines.next() {
        None => return Err(Error::Parse("empty file".into()).at_line(1)),
        Some((_, line)) => {
            let line = line?;
            let mut t = line.split_whitespace();
            let parsed = (|| {
                if t.next() != Some("p") || t.next() != Some("planted3") {
                    return Err(Error::Parse("header must start with `p planted3`".into()));
                }
                let n: usize = field(t.next(), "vertex count")?;
                let m: usize = field(t.next(), "edge count")?;
                let d: usize = field(t.next(), "degree")?;
                no_more(&mut t)?;
                Ok((n, m, d))
            })();
            parsed.map_err(|e| e.at_line(1))?
        }
    };

    let mut classes: Vec<Option<u8>> = vec![None; n];
    let mut class_lines = 0usize;
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges = Vec::with_capacity(m);
    let mut last_line = 1;
    for (idx, line) in lines {
        let lineno = idx + 1;
        last_line = lineno;
        let line = line?;
        let mut t = line.split_whitespace();
        let step = (|| -> Result<()> {
            match t.next() {
                Some("c") => {
                    if !edges.is_empty() {
                        return Err(Error::Parse("class line after edge lines".into()));
                    }
                    let v: usize = field(t.next(), "vertex")?;
                    let c: u8 = field(t.next(), "class")?;
                    no_more(&mut t)?;
                    if v >= n {
                        return Err(Error::VertexOutOfRange { vertex: v, n });
                    }
                    if c > 2 {
                        return Err(Error::Parse(format!("class {c} not in 0..=2")));
                    }
                    if classes[v].replace(c).is_some() {
                        return Err(Error::Parse(format!("vertex {v} has two class lines")));
                    }
                    class_lines += 1;
                }
                Some("e") => {
                    let u: usize = field(t.next(), "vertex")?;
                    let v: usize = field(t.next(), "vertex")?;
                    no_more(&mut t)?;
                    for x in [u, v] {
                        if x >= n {
                            return Err(Error::VertexOutOfRange { vertex: x, n });
                        }
                    }
                    if u == v {
                        return Err(Error::SelfLoop(u));
                    }
                    let key = (u.min(v), u.max(v));
                    if let Some(first) = seen.insert(key, lineno) {
                        return Err(Error::Parse(format!(
                            "duplicate edge {{{}, {}}} (first at line {first})",
                            key.0, key.1
                        )));
                    }
                    edges.push(key);
                }
                Some(other) => return Err(Error::Parse(format!("unknown line type {other:?}"))),
                None => return Err(Error::Parse("empty line".into())),
            }
            Ok(())
        })();
        step.map_err(|e| e.at_line(lineno))?;
    }
    if edges.len() != m {
        return Err(Error::Parse(format!(
            "header announces {m} edges, file has {}",
            edges.len()
        ))
        .at_line(last_line));
    }
    let coloring = match class_lines {
        0 => None,
        k if k == n => Some(PlantedColoring::new(
            classes
                .into_iter()
                .map(|c| c.expect("all present"))
                .collect(),
        )?),
        k => {
            return Err(
                Error::Parse(format!("class lines cover {k} of {n} vertices")).at_line(last_line),
            )
        }
    };
    let graph = Graph::from_edges(n, edges)?;
    Ok(GraphFile { graph, coloring, d })
}

pub fn write_graph(
    graph: &Graph,
    coloring: Option<&PlantedColoring>,
    d: usize,
    mut sink: impl Write,
) -> Result<()> {
    if let Some(c) = coloring {
        if c.num_vertices() != graph.num_vertices() {
            return Err(Error::DimensionMismatch {
                expected: graph.num_vertices(),
                found: c.num_vertices(),
            });
        }
    }
    writeln!(
        sink,
        "p planted3 {} {} {}",
        graph.num_vertices(),
        graph.num_edges(),
        d
    )?;
    if let Some(c) = coloring {
        for v in 0..graph.num_vertices() {
            writeln!(sink, "c {} {}", v, c.class_of(v))?;
        }
    }
    for &(u, v) in graph.edges() {
        writeln!(sink, "e {u} {v}")?;
    }
    sink.flush()?;
    Ok(())
}

pub fn graph_to_string(graph: &Graph, coloring: Option<&PlantedColoring>, d: usize) -> String {
    let mut buf = Vec::new();
    write_graph(graph, coloring, d, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

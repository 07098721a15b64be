//! Line-oriented text format:
//!
//! ```text
//! graph <n> <m>
//! node <idx> <label>
//! edge <u> <port_u> <v> <port_v>
//! ```
//!
//! Ports are 1-based. Labels are `-`, `clique:<id>`, `left` or `right`.

use super::{Graph, Label, PortRef};
use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write;

pub fn write_graph(g: &Graph) -> String {
    let mut out = String::new();
    writeln!(out, "graph {} {}", g.n(), g.m()).unwrap();
    for u in 0..g.n() {
        writeln!(out, "node {u} {}", g.label(u)).unwrap();
    }
    for u in 0..g.n() {
        for (i, t) in g.port_table(u).iter().enumerate() {
            if u < t.node {
                writeln!(out, "edge {u} {} {} {}", i + 1, t.node, t.port).unwrap();
            }
        }
    }
    out
}

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse { line, reason: reason.into() }
}

fn num(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| parse_err(line, format!("bad {what} `{tok}`")))
}

pub fn read_graph(text: &str) -> Result<Graph> {
    let mut header: Option<(usize, usize)> = None;
    let mut labels: Vec<Option<Label>> = Vec::new();
    let mut ports: Vec<BTreeMap<usize, PortRef>> = Vec::new();
    let mut edge_count = 0;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut toks = raw.split_whitespace();
        let Some(kind) = toks.next() else { continue };
        match (kind, header) {
            ("graph", None) => {
                let n = num(toks.next(), line, "node count")?;
                let m = num(toks.next(), line, "edge count")?;
                header = Some((n, m));
                labels = vec![None; n];
                ports = vec![BTreeMap::new(); n];
            }
            ("graph", Some(_)) => return Err(parse_err(line, "duplicate header")),
            (_, None) => return Err(parse_err(line, "expected `graph <n> <m>` header")),
            ("node", Some((n, _))) => {
                let u = num(toks.next(), line, "node index")?;
                if u >= n {
                    return Err(parse_err(line, format!("node {u} out of range")));
                }
                let label = toks.next().ok_or_else(|| parse_err(line, "missing label"))?;
                let label: Label = label.parse().map_err(|e: String| parse_err(line, e))?;
                if labels[u].replace(label).is_some() {
                    return Err(parse_err(line, format!("node {u} declared twice")));
                }
            }
            ("edge", Some((n, _))) => {
                let u = num(toks.next(), line, "node")?;
                let pu = num(toks.next(), line, "port")?;
                let v = num(toks.next(), line, "node")?;
                let pv = num(toks.next(), line, "port")?;
                if u >= n || v >= n {
                    return Err(parse_err(line, "edge endpoint out of range"));
                }
                if pu == 0 || pv == 0 {
                    return Err(parse_err(line, "ports are 1-based"));
                }
                if ports[u].insert(pu, PortRef { node: v, port: pv }).is_some()
                    || ports[v].insert(pv, PortRef { node: u, port: pu }).is_some()
                {
                    return Err(parse_err(line, "port assigned twice"));
                }
                edge_count += 1;
            }
            (other, _) => return Err(parse_err(line, format!("unknown record `{other}`"))),
        }
        if let Some(extra) = toks.next() {
            return Err(parse_err(line, format!("trailing token `{extra}`")));
        }
    }

    let (_, m) = header.ok_or_else(|| parse_err(0, "empty input"))?;
    if edge_count != m {
        return Err(parse_err(0, format!("header declares {m} edges, found {edge_count}")));
    }
    let labels = labels
        .into_iter()
        .enumerate()
        .map(|(u, l)| l.ok_or_else(|| parse_err(0, format!("node {u} not declared"))))
        .collect::<Result<Vec<_>>>()?;
    let table = ports
        .into_iter()
        .enumerate()
        .map(|(u, map)| {
            if map.keys().copied().ne(1..=map.len()) {
                return Err(parse_err(0, format!("ports of node {u} are not 1..deg")));
            }
            Ok(map.into_values().collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Graph::from_port_table(table, labels)
}

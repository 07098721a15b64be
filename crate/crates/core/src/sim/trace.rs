use crate::error::{Error, Result};
use crate::graph::Graph;
use serde::Serialize;
use std::collections::BTreeSet;
use std::io::Write;

/// One transmitted unit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Envelope {
    /// Round in which the unit crossed the edge; the message it belongs to is
    /// delivered at `round + 1` if this is its last unit.
    pub round: u64,
    pub from_node: usize,
    pub from_port: usize,
    pub to_node: usize,
    pub to_port: usize,
    pub tag: &'static str,
    pub size_units: u64,
    pub msg_id: u64,
    pub last_unit: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub envelopes: Vec<Envelope>,
}

impl Trace {
    pub fn total_units(&self) -> u64 {
        self.envelopes.iter().map(|e| e.size_units).sum()
    }

    /// Writes one JSON object per envelope.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in &self.envelopes {
            let rec = serde_json::json!({
                "round": e.round,
                "from": [e.from_node, e.from_port],
                "to": [e.to_node, e.to_port],
                "tag": e.tag,
                "units": e.size_units,
            });
            writeln!(out, "{rec}")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("json is utf-8")
    }
}

/// Clique pairs `(a, b)`, `a < b`, joined by at least one traced envelope.
pub fn clique_communication_graph(trace: &Trace, g: &Graph) -> Result<BTreeSet<(usize, usize)>> {
    if !g.has_clique_labels() {
        return Err(Error::MissingLabel);
    }
    let clique = |u: usize| g.label(u).clique().expect("checked above");
    Ok(trace
        .envelopes
        .iter()
        .map(|e| (clique(e.from_node), clique(e.to_node)))
        .filter(|(a, b)| a != b)
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect())
}

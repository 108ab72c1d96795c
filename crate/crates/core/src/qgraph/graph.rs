use std::collections::VecDeque;

use petgraph::algo::kosaraju_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Names accepted by [`builtin_qgraph`].
pub const BUILTIN_QGRAPHS: [&str; 4] = ["two_node", "trapdoor4", "ising4", "bec3"];

/// A deterministic, complete, output-labeled graph with `q⁺ = g[q][y]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QGraph {
    nq: usize,
    ny: usize,
    g: Vec<Vec<usize>>,
}

impl QGraph {
    pub fn nq(&self) -> usize {
        self.nq
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn next(&self, q: usize, y: usize) -> usize {
        self.g[q][y]
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.g
    }

    /// One node with a self-loop for every output.
    pub fn single(ny: usize) -> Self {
        validate_qgraph(1, vec![vec![0; ny]]).expect("single-node graph")
    }
}

/// Validates a transition table. The output alphabet size is the longest row;
/// shorter rows are missing labels.
pub fn validate_qgraph(nq: usize, g: Vec<Vec<usize>>) -> Result<QGraph> {
    if nq == 0 || g.len() != nq {
        return Err(Error::DimensionMismatch(format!(
            "{} rows for {nq} nodes",
            g.len()
        )));
    }
    let ny = g.iter().map(Vec::len).max().unwrap_or(0);
    if ny == 0 {
        return Err(Error::IncompleteLabeling { node: 0, y: 0 });
    }
    for (q, row) in g.iter().enumerate() {
        if row.len() < ny {
            return Err(Error::IncompleteLabeling {
                node: q,
                y: row.len(),
            });
        }
        if let Some(&t) = row.iter().find(|&&t| t >= nq) {
            return Err(Error::DimensionMismatch(format!(
                "node {q} points to missing node {t}"
            )));
        }
    }
    let mut graph = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..nq).map(|_| graph.add_node(())).collect();
    for (q, row) in g.iter().enumerate() {
        for &t in row {
            graph.add_edge(nodes[q], nodes[t], ());
        }
    }
    if kosaraju_scc(&graph).len() != 1 {
        return Err(first_unreachable(&g));
    }
    Ok(QGraph { nq, ny, g })
}

fn first_unreachable(g: &[Vec<usize>]) -> Error {
    for from in 0..g.len() {
        let mut seen = vec![false; g.len()];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(q) = queue.pop_front() {
            for &t in &g[q] {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        if let Some(to) = seen.iter().position(|&v| !v) {
            return Error::Disconnected { from, to };
        }
    }
    unreachable!("strongly connected graph reported as disconnected")
}

/// The graphs used for the worked examples, nodes numbered from 0 in the order
/// of the usual drawings.
///
/// * `two_node`: the node records the last output, `g(q, y) = y`.
/// * `trapdoor4`, `ising4`: four-node graphs for the binary channels.
/// * `bec3`: three nodes over outputs `{0, 1, ?}` (`?` has index 2).
pub fn builtin_qgraph(name: &str) -> Result<QGraph> {
    let g: Vec<Vec<usize>> = match name {
        "two_node" => vec![vec![0, 1], vec![0, 1]],
        "trapdoor4" => vec![vec![3, 1], vec![2, 1], vec![3, 1], vec![3, 0]],
        "ising4" => vec![vec![1, 3], vec![2, 3], vec![1, 3], vec![1, 0]],
        "bec3" => vec![vec![1, 0, 1], vec![1, 0, 2], vec![1, 0, 2]],
        other => return Err(Error::UnknownGraph(other.to_string())),
    };
    validate_qgraph(g.len(), g)
}

/// JSON form `{"nq": …, "g": [[q⁺ per y], …]}` with 0-based nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QGraphFile {
    pub nq: usize,
    pub g: Vec<Vec<usize>>,
}

impl QGraphFile {
    pub fn from_json(text: &str) -> Result<QGraph> {
        let f: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        validate_qgraph(f.nq, f.g)
    }

    pub fn from_graph(qg: &QGraph) -> Self {
        Self {
            nq: qg.nq,
            g: qg.g.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_valid() {
        for name in BUILTIN_QGRAPHS {
            let g = builtin_qgraph(name).unwrap();
            assert_eq!(g.ny(), if name == "bec3" { 3 } else { 2 });
        }
        assert_eq!(builtin_qgraph("two_node").unwrap().nq(), 2);
        assert_eq!(builtin_qgraph("ising4").unwrap().nq(), 4);
        assert_eq!(builtin_qgraph("bec3").unwrap().nq(), 3);
    }

    #[test]
    fn ising_cycles() {
        let g = builtin_qgraph("ising4").unwrap();
        // repeated ones loop through nodes 2 and 3 (1-based), a zero returns to 2
        assert_eq!(g.next(0, 0), 1);
        assert_eq!(g.next(1, 0), 2);
        assert_eq!(g.next(2, 0), 1);
        assert_eq!(g.next(3, 1), 0);
        for q in 0..3 {
            assert_eq!(g.next(q, 1), 3);
        }
    }

    #[test]
    fn single_node() {
        assert_eq!(QGraph::single(3).nq(), 1);
    }

    #[test]
    fn missing_label() {
        let err = validate_qgraph(2, vec![vec![0, 1], vec![0]]).unwrap_err();
        assert_eq!(err, Error::IncompleteLabeling { node: 1, y: 1 });
    }

    #[test]
    fn disconnected() {
        let err = validate_qgraph(2, vec![vec![0, 0], vec![0, 1]]).unwrap_err();
        assert_eq!(err, Error::Disconnected { from: 0, to: 1 });
    }

    #[test]
    fn unknown_name() {
        assert_eq!(builtin_qgraph("x"), Err(Error::UnknownGraph("x".into())));
    }

    #[test]
    fn json_roundtrip() {
        let g = builtin_qgraph("trapdoor4").unwrap();
        let text = serde_json::to_string(&QGraphFile::from_graph(&g)).unwrap();
        assert_eq!(QGraphFile::from_json(&text).unwrap(), g);
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    /// From an item's source into the first agent column.
    Source,
    /// Between consecutive agent columns.
    Interior,
    /// From the last agent column into the item's sink.
    Sink,
}

/// An edge of the chained flow graph.
///
/// `column` is the agent receiving `pieces` along this edge (for sink edges it is
/// the agent count and `pieces` is zero); `entry_row` is the number of pieces of
/// `item` already handed out before this edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub item: usize,
    pub kind: EdgeKind,
    pub column: usize,
    pub entry_row: usize,
    pub pieces: usize,
    pub from: usize,
    pub to: usize,
}

impl Edge {
    /// Agent receiving pieces along this edge.
    pub fn agent(&self) -> Option<usize> {
        match self.kind {
            EdgeKind::Sink => None,
            _ => Some(self.column),
        }
    }
}

/// Layered DAG whose source-to-sink paths are exactly the feasible allocations of
/// `pieces` indivisible pieces of each item.
///
/// For every item there are `agents` columns of `pieces + 1` vertices; vertex
/// `(c, r)` means `r` pieces were handed out to agents `0..=c`. The sink of item
/// `t` is the source of item `t + 1`, so there are `items + 1` terminal vertices.
/// Vertices are numbered item by item: the item's source terminal, then its grid
/// column by column, row by row, with the final sink last. Edges are numbered
/// item by item: source edges by row, interior edges by column, entry row and
/// pieces, then sink edges by row.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowGraph {
    agents: usize,
    items: usize,
    pieces: usize,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
}

pub fn build_flow_graph(agents: usize, items: usize, pieces: usize) -> Result<FlowGraph> {
    if agents == 0 || items == 0 || pieces == 0 {
        return Err(Error::Config(format!(
            "flow graph needs positive sizes, got {agents} agents, {items} items, {pieces} pieces"
        )));
    }
    let k = pieces;
    let block = agents * (k + 1) + 1;
    let vertices = items * block + 1;
    let terminal = |t: usize| t * block;
    let grid = |t: usize, c: usize, r: usize| t * block + 1 + c * (k + 1) + r;

    let mut edges = Vec::new();
    for item in 0..items {
        for j in 0..=k {
            edges.push(Edge {
                item,
                kind: EdgeKind::Source,
                column: 0,
                entry_row: 0,
                pieces: j,
                from: terminal(item),
                to: grid(item, 0, j),
            });
        }
        for c in 0..agents - 1 {
            for j in 0..=k {
                for y in 0..=k - j {
                    edges.push(Edge {
                        item,
                        kind: EdgeKind::Interior,
                        column: c + 1,
                        entry_row: j,
                        pieces: y,
                        from: grid(item, c, j),
                        to: grid(item, c + 1, j + y),
                    });
                }
            }
        }
        for j in 0..=k {
            edges.push(Edge {
                item,
                kind: EdgeKind::Sink,
                column: agents,
                entry_row: j,
                pieces: 0,
                from: grid(item, agents - 1, j),
                to: terminal(item + 1),
            });
        }
    }

    let mut out_edges = vec![Vec::new(); vertices];
    let mut in_edges = vec![Vec::new(); vertices];
    for (e, edge) in edges.iter().enumerate() {
        out_edges[edge.from].push(e);
        in_edges[edge.to].push(e);
    }
    Ok(FlowGraph {
        agents,
        items,
        pieces,
        edges,
        out_edges,
        in_edges,
    })
}

impl FlowGraph {
    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub fn pieces(&self) -> usize {
        self.pieces
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.out_edges.len()
    }

    pub fn source(&self) -> usize {
        0
    }

    pub fn sink(&self) -> usize {
        self.num_vertices() - 1
    }

    /// Vertex joining item `t - 1`'s sink and item `t`'s source, for `0 < t < items`.
    pub fn junction(&self, t: usize) -> usize {
        t * (self.agents * (self.pieces + 1) + 1)
    }

    pub fn is_terminal(&self, v: usize) -> bool {
        v.is_multiple_of(self.agents * (self.pieces + 1) + 1)
    }

    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out_edges[v]
    }

    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.in_edges[v]
    }

    /// Index of the edge with the given label, if it exists.
    pub fn find_edge(&self, item: usize, column: usize, entry_row: usize, pieces: usize) -> Option<usize> {
        let k = self.pieces;
        if item >= self.items || entry_row > k || pieces > k - entry_row.min(k) {
            return None;
        }
        let per_item = 2 * (k + 1) + (self.agents - 1) * (k + 1) * (k + 2) / 2;
        let base = item * per_item;
        let idx = if column == 0 {
            (entry_row == 0).then_some(base + pieces)?
        } else if column < self.agents {
            // rows before entry_row contribute (k+1) + k + ... edges
            let before_row = entry_row * (k + 1) - entry_row * entry_row.saturating_sub(1) / 2;
            base + (k + 1)
                + (column - 1) * (k + 1) * (k + 2) / 2
                + before_row
                + pieces
        } else if column == self.agents {
            (pieces == 0).then_some(base + (k + 1) + (self.agents - 1) * (k + 1) * (k + 2) / 2 + entry_row)?
        } else {
            return None;
        };
        let e = self.edges[idx];
        debug_assert_eq!((e.item, e.column, e.entry_row, e.pieces), (item, column, entry_row, pieces));
        Some(idx)
    }
}

/// Probability carried by each edge of a [`FlowGraph`], indexed like its edges.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowSolution {
    pub flows: Vec<f64>,
}

/// One line of the flow JSON artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeFlowRecord {
    pub item: usize,
    pub column: usize,
    pub entry_row: usize,
    pub pieces: usize,
    pub probability: f64,
}

impl FlowSolution {
    pub fn new(graph: &FlowGraph, flows: Vec<f64>) -> Result<Self> {
        if flows.len() != graph.edges().len() {
            return Err(Error::Dimension(format!(
                "{} flow values for {} edges",
                flows.len(),
                graph.edges().len()
            )));
        }
        Ok(FlowSolution { flows })
    }

    pub fn source_outflow(&self, graph: &FlowGraph) -> f64 {
        graph.out_edges(graph.source()).iter().map(|&e| self.flows[e]).sum()
    }

    /// Largest `|inflow - outflow|` over non-terminal vertices and junctions.
    pub fn max_conservation_residual(&self, graph: &FlowGraph) -> f64 {
        (0..graph.num_vertices())
            .filter(|&v| v != graph.source() && v != graph.sink())
            .map(|v| {
                let inflow: f64 = graph.in_edges(v).iter().map(|&e| self.flows[e]).sum();
                let outflow: f64 = graph.out_edges(v).iter().map(|&e| self.flows[e]).sum();
                (inflow - outflow).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Checks bounds, conservation and unit source outflow within `tol`.
    pub fn validate(&self, graph: &FlowGraph, tol: f64) -> Result<()> {
        if self.flows.len() != graph.edges().len() {
            return Err(Error::InvalidFlow("flow does not match graph size".into()));
        }
        if let Some(e) = self.flows.iter().position(|&p| !(p >= -tol && p <= 1.0 + tol)) {
            return Err(Error::InvalidFlow(format!("edge {e} carries {}", self.flows[e])));
        }
        let out = self.source_outflow(graph);
        if (out - 1.0).abs() > tol {
            return Err(Error::InvalidFlow(format!("source outflow {out} != 1")));
        }
        let res = self.max_conservation_residual(graph);
        if res > tol {
            return Err(Error::InvalidFlow(format!("conservation violated by {res:e}")));
        }
        Ok(())
    }

    /// Expected fraction of each item reaching each agent, `[agent][item]`.
    pub fn expected_allocation(&self, graph: &FlowGraph) -> Vec<Vec<f64>> {
        let mut x = vec![vec![0.0; graph.items()]; graph.agents()];
        let k = graph.pieces() as f64;
        for (edge, &p) in graph.edges().iter().zip(&self.flows) {
            if let Some(a) = edge.agent() {
                x[a][edge.item] += p * edge.pieces as f64 / k;
            }
        }
        x
    }

    pub fn to_records(&self, graph: &FlowGraph) -> Vec<EdgeFlowRecord> {
        graph
            .edges()
            .iter()
            .zip(&self.flows)
            .map(|(e, &p)| EdgeFlowRecord {
                item: e.item,
                column: e.column,
                entry_row: e.entry_row,
                pieces: e.pieces,
                probability: p,
            })
            .collect()
    }

    /// Rebuilds the graph and flow from artifact records; missing edges carry zero.
    pub fn from_records(records: &[EdgeFlowRecord]) -> Result<(FlowGraph, FlowSolution)> {
        let items = records.iter().map(|r| r.item + 1).max().unwrap_or(0);
        let agents = records.iter().map(|r| r.column).max().unwrap_or(0);
        let pieces = records
            .iter()
            .map(|r| r.entry_row + r.pieces)
            .max()
            .unwrap_or(0);
        let graph = build_flow_graph(agents, items, pieces)?;
        let mut flows = vec![0.0; graph.edges().len()];
        for r in records {
            let e = graph
                .find_edge(r.item, r.column, r.entry_row, r.pieces)
                .ok_or_else(|| Error::InvalidFlow(format!("no edge labelled {r:?}")))?;
            flows[e] = r.probability;
        }
        Ok((graph, FlowSolution { flows }))
    }
}

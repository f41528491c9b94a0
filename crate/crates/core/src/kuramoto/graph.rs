use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unweighted interaction graph, stored as a dense 0/1 adjacency matrix.
///
/// `adjacency[i][j] == 1` means node `j` influences node `i`. The diagonal is
/// always zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub n: usize,
    pub adjacency: Vec<Vec<u8>>,
}

impl GraphSpec {
    pub fn from_adjacency(adjacency: Vec<Vec<u8>>) -> Result<Self> {
        let g = GraphSpec {
            n: adjacency.len(),
            adjacency,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn empty(n: usize) -> Self {
        GraphSpec {
            n,
            adjacency: vec![vec![0; n]; n],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.adjacency.len() != self.n {
            return Err(Error::config(
                "graph.adjacency",
                format!("expected {} rows, found {}", self.n, self.adjacency.len()),
            ));
        }
        for (i, row) in self.adjacency.iter().enumerate() {
            if row.len() != self.n {
                return Err(Error::config(
                    "graph.adjacency",
                    format!("row {i} has {} entries, expected {}", row.len(), self.n),
                ));
            }
            if row[i] != 0 {
                return Err(Error::config(
                    "graph.adjacency",
                    format!("diagonal entry ({i},{i}) must be 0"),
                ));
            }
            if let Some(j) = row.iter().position(|&a| a > 1) {
                return Err(Error::config(
                    "graph.adjacency",
                    format!("entry ({i},{j}) must be 0 or 1"),
                ));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i][j] != 0
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.adjacency[i][j] == self.adjacency[j][i]))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].iter().filter(|&&a| a != 0).count()
    }

    /// Nodes influencing `i`, in increasing order.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.has_edge(i, j)).collect()
    }

    pub fn neighbor_lists(&self) -> Vec<Vec<usize>> {
        (0..self.n).map(|i| self.neighbors(i)).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency
            .iter()
            .map(|r| r.iter().filter(|&&a| a != 0).count())
            .sum()
    }

    pub fn set_undirected(&mut self, i: usize, j: usize, on: bool) {
        let v = u8::from(on);
        self.adjacency[i][j] = v;
        self.adjacency[j][i] = v;
    }

    /// Connectivity of the undirected view, by breadth-first search.
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for j in 0..self.n {
                if !seen[j] && (self.has_edge(i, j) || self.has_edge(j, i)) {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

pub fn make_ring_graph(n: usize) -> Result<GraphSpec> {
    if n < 3 {
        return Err(Error::invalid(format!("ring graph needs n >= 3, got {n}")));
    }
    let mut g = GraphSpec::empty(n);
    for i in 0..n {
        g.set_undirected(i, (i + 1) % n, true);
    }
    Ok(g)
}

pub fn make_complete_graph(n: usize) -> Result<GraphSpec> {
    if n < 2 {
        return Err(Error::invalid(format!(
            "complete graph needs n >= 2, got {n}"
        )));
    }
    let mut g = GraphSpec::empty(n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                g.adjacency[i][j] = 1;
            }
        }
    }
    Ok(g)
}

/// Appends a node (index `graph.n`) linked in both directions to
/// `neighbor_set`. Existing edges are left untouched.
pub fn attach_avatar(graph: &GraphSpec, neighbor_set: &[usize]) -> Result<GraphSpec> {
    if neighbor_set.is_empty() {
        return Err(Error::invalid("avatar neighbor set is empty"));
    }
    if let Some(&bad) = neighbor_set.iter().find(|&&j| j >= graph.n) {
        return Err(Error::invalid(format!(
            "avatar neighbor {bad} out of range for {} nodes",
            graph.n
        )));
    }
    let n = graph.n + 1;
    let mut g = GraphSpec::empty(n);
    for i in 0..graph.n {
        g.adjacency[i][..graph.n].copy_from_slice(&graph.adjacency[i]);
    }
    for &j in neighbor_set {
        g.set_undirected(graph.n, j, true);
    }
    Ok(g)
}

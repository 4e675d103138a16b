//! Ring interconnection graphs.
//!
//! Agents are indexed from 0 internally; agent `k` in reports is index `k - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{FormationError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingGraph {
    n: usize,
    directed: bool,
}

impl RingGraph {
    pub fn new(n: usize, directed: bool) -> Result<Self> {
        if n < 2 {
            return Err(FormationError::Config(format!(
                "ring needs at least 2 agents, got {n}"
            )));
        }
        Ok(Self { n, directed })
    }

    pub fn undirected(n: usize) -> Result<Self> {
        Self::new(n, false)
    }

    pub fn directed(n: usize) -> Result<Self> {
        Self::new(n, true)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn successor(&self, i: usize) -> usize {
        (i + 1) % self.n
    }

    pub fn predecessor(&self, i: usize) -> usize {
        (i + self.n - 1) % self.n
    }

    /// Neighbor set of agent `i`: `[i-1, i+1]` undirected, `[i+1]` directed.
    ///
    /// With two agents on an undirected ring `i-1` and `i+1` are the same
    /// agent, which is listed once.
    ///
    /// Panics if `i >= n`.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        assert!(
            i < self.n,
            "agent index {i} out of range for ring of {}",
            self.n
        );
        if self.directed || self.n == 2 {
            vec![self.successor(i)]
        } else {
            vec![self.predecessor(i), self.successor(i)]
        }
    }

    pub fn degree(&self) -> usize {
        if self.directed || self.n == 2 {
            1
        } else {
            2
        }
    }
}

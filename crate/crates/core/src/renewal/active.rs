//! Active-node list for compaction.

use super::precision::StateCell;
use crate::models::Compartment;

/// Width of one processing chunk.
pub const CHUNK: usize = 128;

/// Sorted ids of non-terminal nodes at the last refresh, stored in a
/// fixed `N + CHUNK` buffer whose tail is zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSet {
    active_nodes: Vec<u32>,
    num_active: usize,
}

impl ActiveSet {
    pub fn with_capacity(n: usize) -> Self {
        ActiveSet { active_nodes: vec![0; n + CHUNK], num_active: 0 }
    }

    #[inline]
    pub fn num_active(&self) -> usize {
        self.num_active
    }

    #[inline]
    pub fn ids(&self) -> &[u32] {
        &self.active_nodes[..self.num_active]
    }

    /// Whole buffer including the zero padding.
    pub fn buffer(&self) -> &[u32] {
        &self.active_nodes
    }

    /// Rebuild in place from `states`.
    pub fn refresh<C: StateCell>(&mut self, states: &[C], terminal: impl Fn(Compartment) -> bool) {
        let need = states.len() + CHUNK;
        if self.active_nodes.len() != need {
            self.active_nodes.resize(need, 0);
        }
        let mut k = 0;
        for (i, s) in states.iter().enumerate() {
            if !terminal(s.get()) {
                self.active_nodes[k] = i as u32;
                k += 1;
            }
        }
        self.active_nodes[k..].fill(0);
        self.num_active = k;
    }
}

/// Fresh active set for `states`.
pub fn refresh_active<C: StateCell>(states: &[C], terminal: impl Fn(Compartment) -> bool) -> ActiveSet {
    let mut a = ActiveSet::with_capacity(states.len());
    a.refresh(states, terminal);
    a
}

//! Compressed sparse row contact networks.
//!
//! Adjacency is stored by *incoming* edge: the slice
//! `row_offsets[i]..row_offsets[i + 1]` of `col_indices`/`weights` lists the
//! sources `j` of every edge `j -> i`, sorted by source id. Undirected
//! contacts are stored as two directed edges.

mod generators;
mod io;

pub use generators::{gen_barabasi_albert, gen_erdos_renyi, gen_fixed_degree, Topology};
pub use io::{read_binary, read_edge_list, read_graph, write_binary, GRAPH_MAGIC, GRAPH_VERSION};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mirrored adjacency in outgoing orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct OutgoingCsr {
    pub row_offsets: Vec<u64>,
    pub col_indices: Vec<u32>,
    pub weights: Vec<f32>,
}

impl OutgoingCsr {
    /// Targets and weights of edges leaving `j`.
    #[inline]
    pub fn targets(&self, j: usize) -> (&[u32], &[f32]) {
        let (a, b) = (self.row_offsets[j] as usize, self.row_offsets[j + 1] as usize);
        (&self.col_indices[a..b], &self.weights[a..b])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrGraph {
    num_nodes: usize,
    row_offsets: Vec<u64>,
    col_indices: Vec<u32>,
    weights: Vec<f32>,
    outgoing: Option<OutgoingCsr>,
}

/// Degree statistics driving strategy dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub d_avg: f64,
    pub d_max: u64,
    pub rho: f64,
}

/// Pressure traversal strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// One worker per node, scalar loop over its slice.
    PerNode,
    /// Each slice processed in fixed-width lane groups.
    LaneChunked,
    /// Fixed chunks of contiguous edges with owner recovery by binary search.
    EdgeMerge,
    #[default]
    Auto,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::PerNode => "per-node",
            Strategy::LaneChunked => "lane",
            Strategy::EdgeMerge => "merge",
            Strategy::Auto => "auto",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-node" | "thread" => Ok(Strategy::PerNode),
            "lane" | "warp" => Ok(Strategy::LaneChunked),
            "merge" => Ok(Strategy::EdgeMerge),
            "auto" => Ok(Strategy::Auto),
            other => Err(Error::InvalidConfig(format!("unknown strategy `{other}`"))),
        }
    }
}

/// Lane-chunked dispatch starts at this heterogeneity ratio.
pub const RHO_LANE: f64 = 4.0;
/// Edge-merge dispatch starts at this heterogeneity ratio.
pub const RHO_MERGE: f64 = 50.0;

/// Resolve `Auto` from degree heterogeneity; any other override wins.
pub fn select_strategy(stats: &DegreeStats, override_: Strategy) -> Strategy {
    if override_ != Strategy::Auto {
        return override_;
    }
    if stats.rho < RHO_LANE {
        Strategy::PerNode
    } else if stats.rho < RHO_MERGE {
        Strategy::LaneChunked
    } else {
        Strategy::EdgeMerge
    }
}

/// Build the incoming CSR from `(src, dst, weight)` triples.
pub fn build_csr(edges: &[(u32, u32, f32)], num_nodes: usize) -> Result<CsrGraph> {
    if num_nodes == 0 {
        return Err(Error::InvalidParameter("graph needs at least one node".into()));
    }
    if num_nodes > i32::MAX as usize {
        return Err(Error::TooManyNodes(num_nodes));
    }
    let mut counts = vec![0u64; num_nodes + 1];
    for &(src, dst, w) in edges {
        for idx in [src, dst] {
            if idx as usize >= num_nodes {
                return Err(Error::IndexOutOfRange { index: idx as u64, num_nodes });
            }
        }
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::NegativeWeight { src, dst, weight: w });
        }
        if src == dst {
            return Err(Error::SelfLoop(src));
        }
        counts[dst as usize + 1] += 1;
    }
    for i in 0..num_nodes {
        counts[i + 1] += counts[i];
    }
    let row_offsets = counts;
    let mut cursor: Vec<u64> = row_offsets[..num_nodes].to_vec();
    let mut slots: Vec<(u32, f32)> = vec![(0, 0.0); edges.len()];
    for &(src, dst, w) in edges {
        let c = &mut cursor[dst as usize];
        slots[*c as usize] = (src, w);
        *c += 1;
    }
    for i in 0..num_nodes {
        let (a, b) = (row_offsets[i] as usize, row_offsets[i + 1] as usize);
        let slice = &mut slots[a..b];
        slice.sort_by_key(|&(s, _)| s);
        if let Some(pair) = slice.windows(2).find(|p| p[0].0 == p[1].0) {
            return Err(Error::DuplicateEdge { src: pair[0].0, dst: i as u32 });
        }
    }
    let (col_indices, weights) = slots.into_iter().unzip();
    Ok(CsrGraph { num_nodes, row_offsets, col_indices, weights, outgoing: None })
}

/// Symmetric graph from undirected pairs, each stored as two directed edges.
pub fn build_undirected(pairs: &[(u32, u32)], num_nodes: usize) -> Result<CsrGraph> {
    let edges: Vec<(u32, u32, f32)> =
        pairs.iter().flat_map(|&(a, b)| [(a, b, 1.0f32), (b, a, 1.0f32)]).collect();
    build_csr(&edges, num_nodes)
}

impl CsrGraph {
    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    #[inline]
    pub fn num_edges(&self) -> usize {
        self.col_indices.len()
    }

    #[inline]
    pub fn row_offsets(&self) -> &[u64] {
        &self.row_offsets
    }

    #[inline]
    pub fn col_indices(&self) -> &[u32] {
        &self.col_indices
    }

    #[inline]
    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    #[inline]
    pub fn in_degree(&self, i: usize) -> usize {
        (self.row_offsets[i + 1] - self.row_offsets[i]) as usize
    }

    /// Sources and weights of edges entering `i`.
    #[inline]
    pub fn incoming(&self, i: usize) -> (&[u32], &[f32]) {
        let (a, b) = (self.row_offsets[i] as usize, self.row_offsets[i + 1] as usize);
        (&self.col_indices[a..b], &self.weights[a..b])
    }

    pub fn outgoing(&self) -> Option<&OutgoingCsr> {
        self.outgoing.as_ref()
    }

    /// Edge list `(src, dst, weight)` in CSR order.
    pub fn decompose(&self) -> Vec<(u32, u32, f32)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for i in 0..self.num_nodes {
            let (srcs, ws) = self.incoming(i);
            out.extend(srcs.iter().zip(ws).map(|(&s, &w)| (s, i as u32, w)));
        }
        out
    }

    /// Populate the outgoing mirror (idempotent).
    pub fn build_outgoing(mut self) -> Self {
        self.ensure_outgoing();
        self
    }

    /// The outgoing mirror, borrowed if present and built otherwise.
    pub fn outgoing_or_build(&self) -> std::borrow::Cow<'_, OutgoingCsr> {
        match &self.outgoing {
            Some(o) => std::borrow::Cow::Borrowed(o),
            None => std::borrow::Cow::Owned(transpose(self.num_nodes, &self.row_offsets, &self.col_indices, &self.weights)),
        }
    }

    pub fn ensure_outgoing(&mut self) {
        if self.outgoing.is_none() {
            self.outgoing = Some(transpose(self.num_nodes, &self.row_offsets, &self.col_indices, &self.weights));
        }
    }

    /// The outgoing orientation read back as an incoming CSR.
    pub fn transposed(&self) -> CsrGraph {
        let t = transpose(self.num_nodes, &self.row_offsets, &self.col_indices, &self.weights);
        CsrGraph {
            num_nodes: self.num_nodes,
            row_offsets: t.row_offsets,
            col_indices: t.col_indices,
            weights: t.weights,
            outgoing: None,
        }
    }

    /// Check the structural invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_nodes;
        if self.row_offsets.len() != n + 1 || self.row_offsets[0] != 0 {
            return Err(Error::Format("row offsets malformed".into()));
        }
        if self.row_offsets[n] as usize != self.col_indices.len() || self.weights.len() != self.col_indices.len() {
            return Err(Error::Format("edge arrays disagree with row offsets".into()));
        }
        for i in 0..n {
            if self.row_offsets[i] > self.row_offsets[i + 1] {
                return Err(Error::Format(format!("row offsets decrease at {i}")));
            }
            let (srcs, ws) = self.incoming(i);
            for (k, (&s, &w)) in srcs.iter().zip(ws).enumerate() {
                if s as usize >= n {
                    return Err(Error::IndexOutOfRange { index: s as u64, num_nodes: n });
                }
                if s as usize == i {
                    return Err(Error::SelfLoop(s));
                }
                if !(w >= 0.0) {
                    return Err(Error::NegativeWeight { src: s, dst: i as u32, weight: w });
                }
                if k > 0 && srcs[k - 1] >= s {
                    return Err(Error::Format(format!("slice of node {i} not strictly sorted")));
                }
            }
        }
        Ok(())
    }

    /// Whether every edge `j -> i` has a reverse `i -> j` of equal weight.
    pub fn is_symmetric(&self) -> bool {
        let t = self.transposed();
        t.row_offsets == self.row_offsets && t.col_indices == self.col_indices && t.weights == self.weights
    }

    pub(crate) fn from_parts(
        num_nodes: usize,
        row_offsets: Vec<u64>,
        col_indices: Vec<u32>,
        weights: Vec<f32>,
    ) -> Result<Self> {
        let g = CsrGraph { num_nodes, row_offsets, col_indices, weights, outgoing: None };
        g.validate()?;
        Ok(g)
    }
}

fn transpose(n: usize, row_offsets: &[u64], col_indices: &[u32], weights: &[f32]) -> OutgoingCsr {
    let mut offsets = vec![0u64; n + 1];
    for &s in col_indices {
        offsets[s as usize + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut cursor = offsets[..n].to_vec();
    let mut cols = vec![0u32; col_indices.len()];
    let mut ws = vec![0f32; col_indices.len()];
    // Walking targets in ascending order leaves each outgoing slice sorted.
    for i in 0..n {
        for e in row_offsets[i] as usize..row_offsets[i + 1] as usize {
            let s = col_indices[e] as usize;
            let c = cursor[s] as usize;
            cols[c] = i as u32;
            ws[c] = weights[e];
            cursor[s] += 1;
        }
    }
    OutgoingCsr { row_offsets: offsets, col_indices: cols, weights: ws }
}

/// One pass over the row offsets.
pub fn degree_stats(g: &CsrGraph) -> Result<DegreeStats> {
    let e = g.num_edges();
    if e == 0 {
        return Err(Error::EmptyGraph);
    }
    let d_max = g.row_offsets.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
    let d_avg = e as f64 / g.num_nodes as f64;
    Ok(DegreeStats { d_avg, d_max, rho: d_max as f64 / d_avg })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest, Just};
    use proptest::strategy::Strategy as _;

    fn star(spokes: u32) -> CsrGraph {
        let edges: Vec<_> = (1..=spokes).map(|s| (s, 0, 1.0)).collect();
        build_csr(&edges, spokes as usize + 1).unwrap()
    }

    #[test]
    fn empty_graph() {
        let g = build_csr(&[], 3).unwrap();
        assert_eq!(g.row_offsets(), &[0, 0, 0, 0]);
        assert_eq!(g.num_edges(), 0);
        assert!(matches!(degree_stats(&g), Err(Error::EmptyGraph)));
    }

    #[test]
    fn two_edge_fan_in() {
        let g = build_csr(&[(2, 1, 0.5), (0, 1, 1.0)], 3).unwrap();
        let (srcs, ws) = g.incoming(1);
        assert_eq!(srcs, &[0, 2]);
        assert_eq!(ws, &[1.0, 0.5]);
    }

    #[test]
    fn figure_layout_focus_node() {
        // 8-node undirected contact graph; node 2 has three neighbours.
        let pairs = [(0, 1), (1, 2), (2, 3), (2, 5), (3, 4), (4, 5), (5, 6), (6, 7), (0, 7)];
        let g = build_undirected(&pairs, 8).unwrap();
        let ro = g.row_offsets();
        assert_eq!(ro[3] - ro[2], 3);
        assert_eq!(g.incoming(2).0, &[1, 3, 5]);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(build_csr(&[(0, 3, 1.0)], 3), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(build_csr(&[(0, 1, 1.0), (0, 1, 2.0)], 3), Err(Error::DuplicateEdge { .. })));
        assert!(matches!(build_csr(&[(0, 1, -1.0)], 3), Err(Error::NegativeWeight { .. })));
        assert!(matches!(build_csr(&[(1, 1, 1.0)], 3), Err(Error::SelfLoop(1))));
    }

    #[test]
    fn star_stats() {
        let s = degree_stats(&star(8)).unwrap();
        assert_eq!(s.d_max, 8);
        assert!((s.d_avg - 8.0 / 9.0).abs() < 1e-12);
        assert!((s.rho - 9.0).abs() < 1e-12);
    }

    #[test]
    fn dispatch_thresholds() {
        let at = |rho| select_strategy(&DegreeStats { d_avg: 8.0, d_max: 0, rho }, Strategy::Auto);
        assert_eq!(at(1.0), Strategy::PerNode);
        assert_eq!(at(2.0), Strategy::PerNode);
        assert_eq!(at(3.999), Strategy::PerNode);
        assert_eq!(at(4.0), Strategy::LaneChunked);
        assert_eq!(at(10.0), Strategy::LaneChunked);
        assert_eq!(at(49.99), Strategy::LaneChunked);
        assert_eq!(at(50.0), Strategy::EdgeMerge);
        assert_eq!(at(484.0), Strategy::EdgeMerge);
        let st = DegreeStats { d_avg: 8.0, d_max: 16, rho: 2.0 };
        assert_eq!(select_strategy(&st, Strategy::EdgeMerge), Strategy::EdgeMerge);
    }

    #[test]
    fn outgoing_single_edge() {
        let g = build_csr(&[(0, 1, 1.0)], 2).unwrap().build_outgoing();
        let out = g.outgoing().unwrap();
        assert_eq!(out.targets(0).0, &[1]);
        assert!(out.targets(1).0.is_empty());
    }

    #[test]
    fn symmetric_outgoing_equals_incoming() {
        let g = gen_erdos_renyi(200, 6.0, 3).unwrap();
        assert!(g.is_symmetric());
        let g = g.build_outgoing();
        let out = g.outgoing().unwrap();
        assert_eq!(out.row_offsets, g.row_offsets);
        assert_eq!(out.col_indices, g.col_indices);
    }

    fn arb_graph() -> impl proptest::strategy::Strategy<Value = (usize, Vec<(u32, u32, f32)>)> {
        (2usize..40).prop_flat_map(|n| {
            let edge = (0..n as u32, 0..n as u32, 0.0f32..4.0);
            (Just(n), proptest::collection::vec(edge, 0..200))
        })
    }

    fn dedup(edges: Vec<(u32, u32, f32)>) -> Vec<(u32, u32, f32)> {
        let mut seen = std::collections::HashSet::new();
        edges.into_iter().filter(|&(s, d, _)| s != d && seen.insert((s, d))).collect()
    }

    proptest! {
        #[test]
        fn csr_roundtrip((n, edges) in arb_graph()) {
            let g = build_csr(&dedup(edges), n).unwrap();
            prop_assert!(g.validate().is_ok());
            let g2 = build_csr(&g.decompose(), n).unwrap();
            prop_assert_eq!(&g, &g2);
        }

        #[test]
        fn transpose_involution((n, edges) in arb_graph()) {
            let g = build_csr(&dedup(edges), n).unwrap();
            let back = g.transposed().transposed();
            prop_assert_eq!(&g, &back);
        }

        #[test]
        fn outgoing_mirrors_incoming((n, edges) in arb_graph()) {
            let g = build_csr(&dedup(edges), n).unwrap().build_outgoing();
            let out = g.outgoing().unwrap();
            let mut fwd: Vec<_> = g.decompose().into_iter().map(|(s, d, w)| (s, d, w.to_bits())).collect();
            let mut rev = Vec::new();
            for j in 0..n {
                let (ts, ws) = out.targets(j);
                rev.extend(ts.iter().zip(ws).map(|(&t, &w)| (j as u32, t, w.to_bits())));
            }
            fwd.sort();
            rev.sort();
            prop_assert_eq!(fwd, rev);
        }

        #[test]
        fn dispatch_total(rho in 1.0f64..1e6) {
            let s = select_strategy(&DegreeStats { d_avg: 1.0, d_max: 1, rho }, Strategy::Auto);
            prop_assert!(s != Strategy::Auto);
        }
    }
}

//! Infection pressure `p_i = sum_j infectivity[j] * w_ji` over incoming edges.
//!
//! All three strategies add the products of a node's slice in CSR order into
//! one `f32` accumulator, so they agree bit for bit.

use rayon::prelude::*;

use super::active::ActiveSet;
use super::precision::Cell;
use crate::graph::{CsrGraph, Strategy};

/// Largest supported lane-group width.
pub const MAX_LANES: usize = 256;

const PAR_NODE_BLOCK: usize = 4096;

#[derive(Debug, Clone, Copy)]
pub struct GatherParams {
    /// Resolved strategy (never `Auto`).
    pub strategy: Strategy,
    pub lanes_per_node: usize,
    pub edges_per_block: usize,
    pub parallel: bool,
}

#[inline]
fn slice_sum<I: Cell, W: Cell>(cols: &[u32], ws: &[W], inf: &[I]) -> f32 {
    let mut acc = 0.0f32;
    for (&c, &w) in cols.iter().zip(ws) {
        acc += inf[c as usize].load() * w.load();
    }
    acc
}

#[inline]
fn lane_sum<I: Cell, W: Cell>(cols: &[u32], ws: &[W], inf: &[I], width: usize) -> f32 {
    let mut buf = [0.0f32; MAX_LANES];
    let mut acc = 0.0f32;
    for (cc, wc) in cols.chunks(width).zip(ws.chunks(width)) {
        for (l, (&c, &w)) in cc.iter().zip(wc).enumerate() {
            buf[l] = inf[c as usize].load() * w.load();
        }
        for &x in &buf[..cc.len()] {
            acc += x;
        }
    }
    acc
}

#[inline]
fn node_sum<I: Cell, W: Cell>(g: &CsrGraph, w: &[W], inf: &[I], i: usize, p: &GatherParams) -> f32 {
    let ro = g.row_offsets();
    let (a, b) = (ro[i] as usize, ro[i + 1] as usize);
    let cols = &g.col_indices()[a..b];
    let ws = &w[a..b];
    match p.strategy {
        Strategy::LaneChunked => lane_sum(cols, ws, inf, p.lanes_per_node),
        _ => slice_sum(cols, ws, inf),
    }
}

/// Index of the node owning edge `e` (`row_offsets[i] <= e < row_offsets[i+1]`).
#[inline]
pub fn edge_owner(row_offsets: &[u64], e: u64) -> usize {
    row_offsets.partition_point(|&o| o <= e) - 1
}

fn edge_merge_partials<I: Cell, W: Cell>(g: &CsrGraph, w: &[W], inf: &[I], p: &GatherParams, out: &mut [f32]) {
    let n = g.num_nodes();
    let e = g.num_edges() as u64;
    let epb = p.edges_per_block as u64;
    let ro = g.row_offsets();
    if e == 0 {
        out.fill(0.0);
        return;
    }
    let chunks = e.div_ceil(epb) as usize;
    // Nodes whose slice starts in chunk c are lo[c]..lo[c+1].
    let mut lo: Vec<usize> = (0..chunks).map(|c| ro[..n].partition_point(|&o| o < c as u64 * epb)).collect();
    lo.push(n);
    let mut pieces: Vec<&mut [f32]> = Vec::with_capacity(chunks);
    let mut rest = out;
    for c in 0..chunks {
        let (head, tail) = rest.split_at_mut(lo[c + 1] - lo[c]);
        pieces.push(head);
        rest = tail;
    }
    let cols = g.col_indices();
    let partials = |(c, piece): (usize, &mut [f32])| {
        let c1 = ((c as u64 + 1) * epb).min(e);
        for (k, slot) in piece.iter_mut().enumerate() {
            let i = lo[c] + k;
            let (a, b) = (ro[i], ro[i + 1].min(c1));
            *slot = slice_sum(&cols[a as usize..b as usize], &w[a as usize..b as usize], inf);
        }
    };
    if p.parallel {
        pieces.into_par_iter().enumerate().for_each(partials);
    } else {
        pieces.into_iter().enumerate().for_each(partials);
    }
}

/// Gather into `out`. With an active set only its listed nodes are
/// computed; every other entry is set to zero.
pub fn gather_into<I: Cell, W: Cell>(
    g: &CsrGraph,
    inf: &[I],
    w: &[W],
    p: &GatherParams,
    active: Option<&ActiveSet>,
    out: &mut [f32],
) {
    debug_assert!(p.strategy != Strategy::Auto);
    debug_assert!((1..=MAX_LANES).contains(&p.lanes_per_node));
    match (p.strategy, active) {
        (Strategy::EdgeMerge, _) => {
            edge_merge_full(g, w, inf, p, out);
            if let Some(a) = active {
                zero_inactive(a, out);
            }
        }
        (_, Some(a)) => {
            zero_inactive(a, out);
            for &i in a.ids() {
                out[i as usize] = node_sum(g, w, inf, i as usize, p);
            }
        }
        (_, None) if p.parallel => {
            out.par_chunks_mut(PAR_NODE_BLOCK).enumerate().for_each(|(b, block)| {
                let base = b * PAR_NODE_BLOCK;
                for (k, slot) in block.iter_mut().enumerate() {
                    *slot = node_sum(g, w, inf, base + k, p);
                }
            });
        }
        (_, None) => {
            for (i, slot) in out.iter_mut().enumerate() {
                *slot = node_sum(g, w, inf, i, p);
            }
        }
    }
}

fn edge_merge_full<I: Cell, W: Cell>(g: &CsrGraph, w: &[W], inf: &[I], p: &GatherParams, out: &mut [f32]) {
    edge_merge_partials(g, w, inf, p, out);
    // Segments crossing chunk boundaries continue from their carry in chunk order.
    let e = g.num_edges() as u64;
    if e == 0 {
        return;
    }
    let epb = p.edges_per_block as u64;
    let ro = g.row_offsets();
    let cols = g.col_indices();
    for c in 1..e.div_ceil(epb) {
        let c0 = c * epb;
        let owner = edge_owner(ro, c0);
        if ro[owner] < c0 {
            let end = ro[owner + 1].min(c0 + epb);
            let mut acc = out[owner];
            for k in c0 as usize..end as usize {
                acc += inf[cols[k] as usize].load() * w[k].load();
            }
            out[owner] = acc;
        }
    }
}

fn zero_inactive(a: &ActiveSet, out: &mut [f32]) {
    let mut next = 0usize;
    for &i in a.ids() {
        out[next..i as usize].fill(0.0);
        next = i as usize + 1;
    }
    out[next..].fill(0.0);
}

/// Naive reference: per-node double loop in `f64`, rounded at the end.
pub fn gather_reference(g: &CsrGraph, inf: &[f32]) -> Vec<f64> {
    (0..g.num_nodes())
        .map(|i| {
            let (srcs, ws) = g.incoming(i);
            srcs.iter().zip(ws).map(|(&s, &w)| inf[s as usize] as f64 * w as f64).sum()
        })
        .collect()
}

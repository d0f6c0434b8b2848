//! Seeded random graph families. Every generator returns a simple undirected
//! graph stored as two directed unit-weight edges per contact.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_undirected, CsrGraph};
use crate::error::{Error, Result};

fn check_size(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("generator needs N >= 2, got {n}")));
    }
    if n > i32::MAX as usize {
        return Err(Error::TooManyNodes(n));
    }
    Ok(())
}

/// G(N, p) with `p = d_avg / (N - 1)`, sampled by geometric skipping over the
/// lower triangle.
pub fn gen_erdos_renyi(n: usize, d_avg: f64, seed: u64) -> Result<CsrGraph> {
    check_size(n)?;
    if !(d_avg >= 0.0) || d_avg > (n - 1) as f64 {
        return Err(Error::InvalidParameter(format!("average degree {d_avg} outside [0, N-1]")));
    }
    let p = d_avg / (n - 1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity((n as f64 * d_avg * 0.5 * 1.1) as usize + 16);
    if p >= 1.0 {
        for v in 1..n as u32 {
            pairs.extend((0..v).map(|w| (v, w)));
        }
    } else if p > 0.0 {
        let log_q = (1.0 - p).ln();
        let (mut v, mut w) = (1usize, -1i64);
        while v < n {
            let u: f64 = rng.random();
            w += 1 + ((1.0 - u).ln() / log_q).floor() as i64;
            while w >= v as i64 && v < n {
                w -= v as i64;
                v += 1;
            }
            if v < n {
                pairs.push((v as u32, w as u32));
            }
        }
    }
    build_undirected(&pairs, n)
}

/// Preferential attachment grown from an `m`-clique.
pub fn gen_barabasi_albert(n: usize, m: usize, seed: u64) -> Result<CsrGraph> {
    check_size(n)?;
    if m == 0 || m >= n {
        return Err(Error::InvalidParameter(format!("BA needs 1 <= m < N (m={m}, N={n})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(n * m);
    // Each edge contributes both endpoints, so uniform picks are degree-proportional.
    let mut ends: Vec<u32> = Vec::with_capacity(2 * n * m);
    for a in 0..m as u32 {
        for b in 0..a {
            pairs.push((a, b));
            ends.extend([a, b]);
        }
    }
    let mut chosen: Vec<u32> = Vec::with_capacity(m);
    for v in m as u32..n as u32 {
        chosen.clear();
        while chosen.len() < m {
            let t = if ends.is_empty() {
                rng.random_range(0..v)
            } else {
                ends[rng.random_range(0..ends.len())]
            };
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for &t in &chosen {
            pairs.push((v, t));
            ends.extend([v, t]);
        }
    }
    build_undirected(&pairs, n)
}

fn key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Random `d`-regular graph: configuration-model pairing, then edge swaps
/// until no self-loops or multi-edges remain.
pub fn gen_fixed_degree(n: usize, d: usize, seed: u64) -> Result<CsrGraph> {
    check_size(n)?;
    if d >= n {
        return Err(Error::InfeasibleDegreeSequence(format!("degree {d} needs more than {n} nodes")));
    }
    if (n * d) % 2 == 1 {
        return Err(Error::InfeasibleDegreeSequence(format!("N*d = {} is odd", n * d)));
    }
    if d == 0 {
        return build_undirected(&[], n);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<u32> = (0..n as u32).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    stubs.shuffle(&mut rng);
    let mut edges: Vec<(u32, u32)> = stubs.chunks_exact(2).map(|c| (c[0], c[1])).collect();
    let mut mult: HashMap<(u32, u32), u32> = HashMap::with_capacity(edges.len());
    for &(a, b) in &edges {
        *mult.entry(key(a, b)).or_insert(0) += 1;
    }
    let bad = |e: (u32, u32), mult: &HashMap<(u32, u32), u32>| e.0 == e.1 || mult[&key(e.0, e.1)] > 1;

    let budget = 200 * edges.len() + 10_000;
    let mut attempts = 0usize;
    loop {
        let bad_idx: Vec<usize> = (0..edges.len()).filter(|&i| bad(edges[i], &mult)).collect();
        if bad_idx.is_empty() {
            break;
        }
        for i in bad_idx {
            if !bad(edges[i], &mult) {
                continue;
            }
            loop {
                attempts += 1;
                if attempts > budget {
                    return Err(Error::InfeasibleDegreeSequence(format!(
                        "edge-swap repair did not converge for N={n}, d={d}"
                    )));
                }
                let k = rng.random_range(0..edges.len());
                if k == i {
                    continue;
                }
                let (u, v) = edges[i];
                let (x, y) = if rng.random::<bool>() { edges[k] } else { (edges[k].1, edges[k].0) };
                let (e1, e2) = ((u, x), (v, y));
                if e1.0 == e1.1 || e2.0 == e2.1 || key(e1.0, e1.1) == key(e2.0, e2.1) {
                    continue;
                }
                if mult.contains_key(&key(e1.0, e1.1)) || mult.contains_key(&key(e2.0, e2.1)) {
                    continue;
                }
                for old in [edges[i], edges[k]] {
                    let c = mult.get_mut(&key(old.0, old.1)).unwrap();
                    *c -= 1;
                    if *c == 0 {
                        mult.remove(&key(old.0, old.1));
                    }
                }
                mult.insert(key(e1.0, e1.1), 1);
                mult.insert(key(e2.0, e2.1), 1);
                edges[i] = e1;
                edges[k] = e2;
                break;
            }
        }
    }
    build_undirected(&edges, n)
}

/// A named random graph family.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Topology {
    ErdosRenyi { d_avg: f64 },
    BarabasiAlbert { m: usize },
    FixedDegree { d: usize },
}

impl Topology {
    pub fn generate(&self, n: usize, seed: u64) -> Result<CsrGraph> {
        match *self {
            Topology::ErdosRenyi { d_avg } => gen_erdos_renyi(n, d_avg, seed),
            Topology::BarabasiAlbert { m } => gen_barabasi_albert(n, m, seed),
            Topology::FixedDegree { d } => gen_fixed_degree(n, d, seed),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Topology::ErdosRenyi { d_avg } => format!("er-d{d_avg}"),
            Topology::BarabasiAlbert { m } => format!("ba-m{m}"),
            Topology::FixedDegree { d } => format!("regular-d{d}"),
        }
    }
}

//! Binary and text graph files.
//!
//! Binary layout (little-endian): magic `FSPG`, `u32` version, `u64` N,
//! `u64` E, then `N + 1` row offsets (`u64`), `E` column indices (`u32`) and
//! `E` weights (`f32`).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{build_csr, CsrGraph};
use crate::error::{Error, Result};

pub const GRAPH_MAGIC: &[u8; 4] = b"FSPG";
pub const GRAPH_VERSION: u32 = 1;

pub fn write_binary<W: Write>(g: &CsrGraph, mut w: W) -> Result<()> {
    w.write_all(GRAPH_MAGIC)?;
    w.write_all(&GRAPH_VERSION.to_le_bytes())?;
    w.write_all(&(g.num_nodes() as u64).to_le_bytes())?;
    w.write_all(&(g.num_edges() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * (g.num_nodes() + 1) + 8 * g.num_edges());
    for &o in g.row_offsets() {
        buf.extend_from_slice(&o.to_le_bytes());
    }
    for &c in g.col_indices() {
        buf.extend_from_slice(&c.to_le_bytes());
    }
    for &x in g.weights() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

fn read_exact_vec<R: Read>(r: &mut R, len: usize, what: &str) -> Result<Vec<u8>> {
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated graph file while reading {what}")),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

pub fn read_binary<R: Read>(mut r: R) -> Result<CsrGraph> {
    let head = read_exact_vec(&mut r, 24, "header")?;
    if &head[..4] != GRAPH_MAGIC {
        return Err(Error::Format("bad magic, expected FSPG".into()));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != GRAPH_VERSION {
        return Err(Error::Format(format!("unsupported graph format version {version}")));
    }
    let n = u64::from_le_bytes(head[8..16].try_into().unwrap());
    let e = u64::from_le_bytes(head[16..24].try_into().unwrap());
    if n == 0 {
        return Err(Error::Format("graph file declares zero nodes".into()));
    }
    if n > i32::MAX as u64 {
        return Err(Error::TooManyNodes(n as usize));
    }
    let (n, e) = (n as usize, e as usize);
    let ro = read_exact_vec(&mut r, 8 * (n + 1), "row offsets")?;
    let ci = read_exact_vec(&mut r, 4 * e, "column indices")?;
    let ws = read_exact_vec(&mut r, 4 * e, "weights")?;
    let row_offsets = ro.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect();
    let col_indices = ci.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
    let weights = ws.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    CsrGraph::from_parts(n, row_offsets, col_indices, weights)
}

/// Whitespace-separated `src dst [weight]` lines; `#` starts a comment.
/// `num_nodes` defaults to one past the largest id seen.
pub fn read_edge_list<R: BufRead>(r: R, num_nodes: Option<usize>) -> Result<CsrGraph> {
    let mut edges = Vec::new();
    let mut max_id = 0u64;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut it = body.split_whitespace();
        let bad = |what: &str| Error::Format(format!("line {}: {what}", lineno + 1));
        let parse_id = |tok: Option<&str>| -> Result<u64> {
            tok.ok_or_else(|| bad("expected `src dst [weight]`"))?
                .parse::<u64>()
                .map_err(|_| bad("node ids must be non-negative integers"))
        };
        let src = parse_id(it.next())?;
        let dst = parse_id(it.next())?;
        let w = match it.next() {
            Some(t) => t.parse::<f32>().map_err(|_| bad("weight is not a number"))?,
            None => 1.0,
        };
        if it.next().is_some() {
            return Err(bad("too many fields"));
        }
        for id in [src, dst] {
            if id > u32::MAX as u64 {
                return Err(Error::IndexOutOfRange { index: id, num_nodes: num_nodes.unwrap_or(0) });
            }
        }
        max_id = max_id.max(src).max(dst);
        edges.push((src as u32, dst as u32, w));
    }
    let n = num_nodes.unwrap_or(if edges.is_empty() { 1 } else { max_id as usize + 1 });
    build_csr(&edges, n)
}

/// Open a graph file, choosing the format from its leading bytes.
pub fn read_graph(path: &Path) -> Result<CsrGraph> {
    let mut f = BufReader::new(File::open(path)?);
    let is_binary = f.fill_buf()?.starts_with(GRAPH_MAGIC);
    if is_binary {
        read_binary(f)
    } else {
        read_edge_list(f, None)
    }
}

impl CsrGraph {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_binary(self, BufWriter::new(File::create(path)?))
    }
}

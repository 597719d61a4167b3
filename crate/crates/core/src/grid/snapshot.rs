use std::io::{BufRead, Write};

use super::Tree;
use crate::error::{CoreError, Result};
use crate::state::{ConservedState, NFIELDS};

/// One leaf record of a snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotLeaf {
    pub level: u32,
    pub index: [u32; 3],
    pub cells: Vec<ConservedState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub n_edge: usize,
    pub max_level: u32,
    pub leaves: Vec<SnapshotLeaf>,
}

/// Writes the header line, then per leaf in Morton order: level and index
/// as little-endian u32, followed by the cells field-major as
/// little-endian f64.
pub fn write_snapshot(tree: &Tree, out: &mut impl Write) -> Result<()> {
    let io = |e: std::io::Error| CoreError::Snapshot(e.to_string());
    let n = tree.geometry.n_edge;
    writeln!(
        out,
        "OCTOMINI v1 {} {} {}",
        n,
        tree.max_level,
        tree.leaf_count()
    )
    .map_err(io)?;
    let mut buf = Vec::with_capacity(16 + n * n * n * NFIELDS * 8);
    for (leaf, &node) in tree.leaf_nodes().iter().enumerate() {
        let nd = tree.node(node);
        buf.clear();
        buf.extend_from_slice(&nd.level.to_le_bytes());
        for i in nd.index {
            buf.extend_from_slice(&i.to_le_bytes());
        }
        let cells = &tree.grids[leaf].cells;
        for f in 0..NFIELDS {
            for c in cells {
                buf.extend_from_slice(&c.field(f).to_le_bytes());
            }
        }
        out.write_all(&buf).map_err(io)?;
    }
    Ok(())
}

pub fn read_snapshot(input: &mut impl BufRead) -> Result<Snapshot> {
    let bad = |m: &str| CoreError::Snapshot(m.to_string());
    let mut header = String::new();
    input
        .read_line(&mut header)
        .map_err(|e| CoreError::Snapshot(e.to_string()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != "OCTOMINI" || parts[1] != "v1" {
        return Err(bad("bad header"));
    }
    let n_edge: usize = parts[2].parse().map_err(|_| bad("bad n_edge"))?;
    let max_level: u32 = parts[3].parse().map_err(|_| bad("bad max_level"))?;
    let count: usize = parts[4].parse().map_err(|_| bad("bad leaf count"))?;
    if n_edge == 0 || n_edge > 1024 {
        return Err(bad("n_edge out of range"));
    }
    let ncell = n_edge * n_edge * n_edge;
    let mut leaves = Vec::with_capacity(count.min(1 << 20));
    let mut head = [0u8; 16];
    let mut body = vec![0u8; ncell * NFIELDS * 8];
    for _ in 0..count {
        input
            .read_exact(&mut head)
            .map_err(|_| bad("truncated leaf header"))?;
        let word = |i: usize| u32::from_le_bytes(head[4 * i..4 * i + 4].try_into().unwrap());
        let level = word(0);
        let index = [word(1), word(2), word(3)];
        input
            .read_exact(&mut body)
            .map_err(|_| bad("truncated cell data"))?;
        let mut cells = vec![ConservedState::ZERO; ncell];
        for f in 0..NFIELDS {
            for (c, cell) in cells.iter_mut().enumerate() {
                let o = 8 * (f * ncell + c);
                *cell.field_mut(f) = f64::from_le_bytes(body[o..o + 8].try_into().unwrap());
            }
        }
        leaves.push(SnapshotLeaf {
            level,
            index,
            cells,
        });
    }
    let mut rest = [0u8; 1];
    if input
        .read(&mut rest)
        .map_err(|e| CoreError::Snapshot(e.to_string()))?
        != 0
    {
        return Err(bad("trailing bytes"));
    }
    Ok(Snapshot {
        n_edge,
        max_level,
        leaves,
    })
}

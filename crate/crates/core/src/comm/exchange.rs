use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{channel, Receiver, Sender};

use super::message::{decode_cells, encode_cells, GhostMessage};
use super::partition::{partition, DistributionMap};
use crate::error::{CoreError, Result};
use crate::grid::{
    boundary_faces, fill_domain_boundary, ghost_transfers, pack, unpack, Face, GhostTransfer, LeafId, TransferKind, Tree,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommConfig {
    /// Same-locality transfers bypass serialization.
    pub local_opt: bool,
    pub localities: usize,
}

impl Default for CommConfig {
    fn default() -> Self {
        CommConfig { local_opt: true, localities: 1 }
    }
}

/// Cumulative counters since creation or the last reset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CommStats {
    pub exchanges: u64,
    pub messages_sent: u64,
    /// Payload bytes serialized (headers excluded).
    pub bytes_serialized: u64,
    pub fast_path_copies: u64,
    pub max_messages_per_exchange: u64,
    pub max_bytes_per_exchange: u64,
}

/// Per-leaf epoch up to which the leaf's interior is final and may be read
/// directly by same-locality neighbours.
#[derive(Debug)]
pub struct Readiness {
    epochs: Vec<AtomicU64>,
}

impl Readiness {
    fn new(leaves: usize) -> Self {
        Readiness { epochs: (0..leaves).map(|_| AtomicU64::new(0)).collect() }
    }

    pub fn publish(&self, leaf: LeafId, epoch: u64) {
        self.epochs[leaf.idx()].fetch_max(epoch, Ordering::Release);
    }

    pub fn is_ready(&self, leaf: LeafId, epoch: u64) -> bool {
        self.epochs[leaf.idx()].load(Ordering::Acquire) >= epoch
    }

    /// Tripwire for reading a leaf before it published `epoch`.
    pub fn check(&self, leaf: LeafId, epoch: u64) -> Result<()> {
        if self.is_ready(leaf, epoch) {
            Ok(())
        } else {
            Err(CoreError::NotReady { leaf: leaf.idx(), epoch })
        }
    }
}

/// Ghost exchange between simulated localities for one fixed tree.
pub struct Comm {
    config: CommConfig,
    map: DistributionMap,
    n_edge: usize,
    transfers: Vec<GhostTransfer>,
    /// (destination, face, source, part) to transfer position.
    index: HashMap<(u32, u8, u32, u8), usize>,
    boundary: Vec<(LeafId, Face)>,
    /// Messages each locality must receive per exchange.
    expected: Vec<usize>,
    inbox: Vec<(Sender<Vec<u8>>, Receiver<Vec<u8>>)>,
    next_seq: HashMap<(u32, u32), u64>,
    recv_seq: HashMap<(u32, u32), u64>,
    stats: CommStats,
    readiness: Readiness,
}

impl Comm {
    pub fn new(tree: &Tree, config: CommConfig) -> Result<Comm> {
        let map = partition(tree.leaf_count(), config.localities)?;
        let transfers = ghost_transfers(tree);
        let mut expected = vec![0; config.localities];
        for t in &transfers {
            let (s, d) = (map.owner(t.src), map.owner(t.dst));
            if !(config.local_opt && s == d) {
                expected[d as usize] += 1;
            }
        }
        let index = transfers.iter().enumerate().map(|(i, t)| ((t.dst.0, t.face.id(), t.src.0, part(t)), i)).collect();
        Ok(Comm {
            config,
            index,
            n_edge: tree.geometry.n_edge,
            boundary: boundary_faces(tree),
            expected,
            inbox: (0..config.localities).map(|_| channel()).collect(),
            next_seq: HashMap::new(),
            recv_seq: HashMap::new(),
            stats: CommStats::default(),
            readiness: Readiness::new(tree.leaf_count()),
            map,
            transfers,
        })
    }

    pub fn config(&self) -> CommConfig {
        self.config
    }

    pub fn map(&self) -> &DistributionMap {
        &self.map
    }

    pub fn transfers(&self) -> &[GhostTransfer] {
        &self.transfers
    }

    pub fn stats(&self) -> CommStats {
        self.stats
    }

    pub fn reset_stats(&mut self) {
        self.stats = CommStats::default();
    }

    pub fn readiness(&self) -> &Readiness {
        &self.readiness
    }

    /// Marks every leaf's interior final for `epoch`.
    pub fn publish_all(&self, epoch: u64) {
        for l in 0..self.readiness.epochs.len() {
            self.readiness.publish(LeafId(l as u32), epoch);
        }
    }

    /// Fills every ghost slab of `tree` from the interiors as of `epoch`.
    ///
    /// Each locality first packs the transfers it sends: same-locality ones
    /// are copied straight into the destination when the fast path is on,
    /// the rest are serialized onto the receiver's channel. Every locality
    /// then drains its channel, checks sequence numbers and counts, and
    /// unpacks.
    pub fn exchange(&mut self, tree: &mut Tree, epoch: u64) -> Result<()> {
        let n = self.n_edge;
        let mut sent = 0u64;
        let mut bytes = 0u64;
        for sender in 0..self.config.localities as u32 {
            for t in self.transfers.iter().filter(|t| self.map.owner(t.src) == sender) {
                let receiver = self.map.owner(t.dst);
                if self.config.local_opt && receiver == sender {
                    self.readiness.check(t.src, epoch)?;
                    let cells = pack(&tree.grids[t.src.idx()], t);
                    unpack(&mut tree.grids[t.dst.idx()].ghost, n, t, &cells);
                    self.stats.fast_path_copies += 1;
                    continue;
                }
                let payload = encode_cells(&pack(&tree.grids[t.src.idx()], t));
                let seq = self.next_seq.entry((sender, receiver)).or_insert(0);
                let msg = GhostMessage {
                    sender,
                    receiver,
                    src_leaf: t.src.0,
                    dst_leaf: t.dst.0,
                    face: t.face.id(),
                    part: part(t),
                    seq: *seq,
                    payload,
                };
                *seq += 1;
                sent += 1;
                bytes += msg.payload.len() as u64;
                self.inbox[receiver as usize]
                    .0
                    .send(msg.to_bytes())
                    .map_err(|_| CoreError::Protocol("receiver channel closed".into()))?;
            }
        }
        for receiver in 0..self.config.localities as u32 {
            let mut got = 0;
            while let Ok(raw) = self.inbox[receiver as usize].1.try_recv() {
                let msg = GhostMessage::from_bytes(&raw)?;
                self.deliver(tree, receiver, &msg)?;
                got += 1;
            }
            if got != self.expected[receiver as usize] {
                return Err(CoreError::Protocol(format!(
                    "locality {receiver} received {got} of {} ghost messages at epoch {epoch}",
                    self.expected[receiver as usize]
                )));
            }
        }
        let boundary = tree.geometry.boundary;
        for &(leaf, face) in &self.boundary {
            fill_domain_boundary(&mut tree.grids[leaf.idx()], face, boundary);
        }
        self.stats.exchanges += 1;
        self.stats.messages_sent += sent;
        self.stats.bytes_serialized += bytes;
        self.stats.max_messages_per_exchange = self.stats.max_messages_per_exchange.max(sent);
        self.stats.max_bytes_per_exchange = self.stats.max_bytes_per_exchange.max(bytes);
        Ok(())
    }

    fn deliver(&mut self, tree: &mut Tree, receiver: u32, msg: &GhostMessage) -> Result<()> {
        if msg.receiver != receiver {
            return Err(CoreError::Protocol(format!("message for {} arrived at {receiver}", msg.receiver)));
        }
        let want = self.recv_seq.entry((msg.sender, receiver)).or_insert(0);
        if msg.seq != *want {
            return Err(CoreError::Protocol(format!(
                "channel {}->{receiver}: sequence {} where {} was due",
                msg.sender, msg.seq, *want
            )));
        }
        *want += 1;
        let dst = LeafId(msg.dst_leaf);
        if dst.idx() >= tree.leaf_count() || self.map.owner(dst) != receiver {
            return Err(CoreError::Protocol(format!("leaf {} is not owned by {receiver}", msg.dst_leaf)));
        }
        let t = self
            .index
            .get(&(msg.dst_leaf, msg.face, msg.src_leaf, msg.part))
            .map(|&i| self.transfers[i])
            .ok_or_else(|| CoreError::Protocol(format!("no transfer into leaf {} face {}", msg.dst_leaf, msg.face)))?;
        let cells = decode_cells(&msg.payload)?;
        if cells.len() != t.payload_cells(self.n_edge) {
            return Err(CoreError::Protocol(format!("payload of {} cells for leaf {}", cells.len(), msg.dst_leaf)));
        }
        unpack(&mut tree.grids[dst.idx()].ghost, self.n_edge, &t, &cells);
        Ok(())
    }
}

fn part(t: &GhostTransfer) -> u8 {
    match t.kind {
        TransferKind::FromFiner { octant } => octant,
        _ => u8::MAX,
    }
}

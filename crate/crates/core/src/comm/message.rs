use crate::error::{CoreError, Result};
use crate::state::{ConservedState, NFIELDS};

/// A ghost payload in flight between localities.
///
/// Wire layout, all integers and floats little-endian: sender u32,
/// receiver u32, source leaf u32, destination leaf u32, face u8, part u8
/// (fine octant, 255 for a whole slab), sequence u64, payload length u32,
/// then the payload: cell values as f64, field-major (every cell's density,
/// then every cell's x momentum, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct GhostMessage {
    pub sender: u32,
    pub receiver: u32,
    pub src_leaf: u32,
    pub dst_leaf: u32,
    pub face: u8,
    pub part: u8,
    pub seq: u64,
    pub payload: Vec<u8>,
}

const HEADER: usize = 4 * 4 + 2 + 8 + 4;

impl GhostMessage {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER + self.payload.len());
        for v in [self.sender, self.receiver, self.src_leaf, self.dst_leaf] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.push(self.face);
        out.push(self.part);
        out.extend_from_slice(&self.seq.to_le_bytes());
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<GhostMessage> {
        if b.len() < HEADER {
            return Err(CoreError::Protocol(format!("message of {} bytes is shorter than its header", b.len())));
        }
        let u32_at = |o: usize| u32::from_le_bytes(b[o..o + 4].try_into().unwrap());
        let len = u32_at(26) as usize;
        if b.len() != HEADER + len {
            return Err(CoreError::Protocol(format!("payload length {len} does not match {} bytes", b.len())));
        }
        Ok(GhostMessage {
            sender: u32_at(0),
            receiver: u32_at(4),
            src_leaf: u32_at(8),
            dst_leaf: u32_at(12),
            face: b[16],
            part: b[17],
            seq: u64::from_le_bytes(b[18..26].try_into().unwrap()),
            payload: b[HEADER..].to_vec(),
        })
    }
}

/// Field-major little-endian encoding of `cells`.
pub fn encode_cells(cells: &[ConservedState]) -> Vec<u8> {
    let mut out = Vec::with_capacity(cells.len() * NFIELDS * 8);
    for k in 0..NFIELDS {
        for c in cells {
            out.extend_from_slice(&c.field(k).to_le_bytes());
        }
    }
    out
}

pub fn decode_cells(bytes: &[u8]) -> Result<Vec<ConservedState>> {
    if bytes.len() % (NFIELDS * 8) != 0 {
        return Err(CoreError::Protocol(format!("payload of {} bytes is not whole cells", bytes.len())));
    }
    let n = bytes.len() / (NFIELDS * 8);
    let mut cells = vec![ConservedState::ZERO; n];
    for k in 0..NFIELDS {
        for (i, c) in cells.iter_mut().enumerate() {
            let o = (k * n + i) * 8;
            *c.field_mut(k) = f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let cells: Vec<ConservedState> = (0..6)
            .map(|i| ConservedState::from_array(&std::array::from_fn(|k| (i * 10 + k) as f64 - 3.5)))
            .collect();
        let m = GhostMessage {
            sender: 1,
            receiver: 2,
            src_leaf: 40,
            dst_leaf: 7,
            face: 3,
            part: 255,
            seq: 9,
            payload: encode_cells(&cells),
        };
        let back = GhostMessage::from_bytes(&m.to_bytes()).unwrap();
        assert_eq!(back, m);
        assert_eq!(decode_cells(&back.payload).unwrap(), cells);
    }

    #[test]
    fn field_major_layout() {
        let a = ConservedState::from_array(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let b = a * 10.0;
        let bytes = encode_cells(&[a, b]);
        assert_eq!(bytes.len(), 2 * NFIELDS * 8);
        assert_eq!(f64::from_le_bytes(bytes[8..16].try_into().unwrap()), 10.0);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 2.0);
    }

    #[test]
    fn truncated_rejected() {
        let m = GhostMessage { sender: 0, receiver: 0, src_leaf: 0, dst_leaf: 0, face: 0, part: 0, seq: 0, payload: vec![0; 56] };
        let b = m.to_bytes();
        assert!(GhostMessage::from_bytes(&b[..b.len() - 1]).is_err());
        assert!(decode_cells(&[0; 13]).is_err());
    }
}

//! Z-order keys. Bit 0 of x is the least significant bit of the key, so the
//! eight children of a node come out as (0,0,0), (1,0,0), (0,1,0), (1,1,0), ...

#[inline]
fn spread(v: u32) -> u64 {
    let mut x = v as u64 & 0x1f_ffff;
    x = (x | (x << 32)) & 0x1f00000000ffff;
    x = (x | (x << 16)) & 0x1f0000ff0000ff;
    x = (x | (x << 8)) & 0x100f00f00f00f00f;
    x = (x | (x << 4)) & 0x10c30c30c30c30c3;
    x = (x | (x << 2)) & 0x1249249249249249;
    x
}

#[inline]
fn compact(v: u64) -> u32 {
    let mut x = v & 0x1249249249249249;
    x = (x | (x >> 2)) & 0x10c30c30c30c30c3;
    x = (x | (x >> 4)) & 0x100f00f00f00f00f;
    x = (x | (x >> 8)) & 0x1f0000ff0000ff;
    x = (x | (x >> 16)) & 0x1f00000000ffff;
    x = (x | (x >> 32)) & 0x1f_ffff;
    x as u32
}

/// Interleaves up to 21 bits per coordinate.
pub fn encode(index: [u32; 3]) -> u64 {
    spread(index[0]) | (spread(index[1]) << 1) | (spread(index[2]) << 2)
}

pub fn decode(key: u64) -> [u32; 3] {
    [compact(key), compact(key >> 1), compact(key >> 2)]
}

/// Key of a node at `level`, normalised to `max_level` so nodes of different
/// depth order by position.
pub fn level_normalized_key(level: u32, index: [u32; 3], max_level: u32) -> u64 {
    let shift = max_level - level;
    encode([index[0] << shift, index[1] << shift, index[2] << shift])
}

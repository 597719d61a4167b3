//! Production-scale problem sizes, kept for reference and for hosts big
//! enough to run them. Leaves and cells are both stored because the
//! published figures mix the two units.

use crate::scenario::ScenarioKind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub kind: ScenarioKind,
    /// `None` where the source size is not tied to a level.
    pub max_level: Option<u32>,
    pub n_edge: usize,
    pub leaves: u64,
    pub cells: u64,
}

const fn preset(name: &'static str, kind: ScenarioKind, max_level: Option<u32>, leaves: u64, cells: u64) -> Preset {
    Preset { name, kind, max_level, n_edge: 8, leaves, cells }
}

// The rotating-star sizes are quoted in cells, the binaries in sub-grids;
// the other column is derived with 512 cells per sub-grid.
pub const PRESETS: [Preset; 5] = [
    preset("level5", ScenarioKind::RotatingStar, Some(5), 2_500_000 / 512, 2_500_000),
    preset("level6", ScenarioKind::RotatingStar, Some(6), 14_200_000 / 512, 14_200_000),
    preset("level7", ScenarioKind::RotatingStar, Some(7), 88_600_000 / 512, 88_600_000),
    preset("v1309", ScenarioKind::Binary, None, 17_000_000, 17_000_000 * 512),
    preset("dwd", ScenarioKind::Binary, Some(12), 5_150_720, 5_150_720 * 512),
];

pub fn find_preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

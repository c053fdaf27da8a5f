//! Example models shipped with the crate.

use crate::credal::CredalMatrix;
use crate::error::Result;
use crate::io::ModelFile;

pub const FIVE_STATE: &str = include_str!("../models/five_state.toml");
pub const GEOMETRIC: &str = include_str!("../models/geometric.toml");
pub const LAZY_EXIT: &str = include_str!("../models/lazy_exit.toml");
pub const HOLD_OR_MIX: &str = include_str!("../models/hold_or_mix.toml");
pub const CYCLE: &str = include_str!("../models/cycle.toml");

/// Bundled models by file stem.
pub const ALL: [(&str, &str); 5] = [
    ("five_state", FIVE_STATE),
    ("geometric", GEOMETRIC),
    ("lazy_exit", LAZY_EXIT),
    ("hold_or_mix", HOLD_OR_MIX),
    ("cycle", CYCLE),
];

pub fn load(name: &str) -> Result<CredalMatrix> {
    let text = ALL
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            crate::error::Error::InvalidArgument(format!("no bundled model `{name}`"))
        })?;
    ModelFile::parse(text, name)?.to_matrix()
}

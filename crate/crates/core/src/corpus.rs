//! The checked-in seed corpus: five hand-written seeds and fifteen produced
//! by [`crate::seedgen`] with rng seeds 1 to 15.

use crate::lang::{parse, Program};
use crate::optimizer::FaultId;

macro_rules! seeds {
    ($($name:literal),* $(,)?) => {
        [$(($name, include_str!(concat!("../corpus/", $name, ".qh")))),*]
    };
}

pub const SOURCES: [(&str, &str); 20] = seeds![
    "hw_01_phase_walk",
    "hw_02_crz_ladder",
    "hw_03_flip_commute",
    "hw_04_nested_scopes",
    "hw_05_rotation_mix",
    "gen_01",
    "gen_02",
    "gen_03",
    "gen_04",
    "gen_05",
    "gen_06",
    "gen_07",
    "gen_08",
    "gen_09",
    "gen_10",
    "gen_11",
    "gen_12",
    "gen_13",
    "gen_14",
    "gen_15",
];

/// Rng seeds that regenerate the `gen_XX` files with default parameters.
pub const GENERATED_RNG_SEEDS: std::ops::RangeInclusive<u64> = 1..=15;

/// All corpus seeds, parsed and named after their files.
pub fn builtin() -> Vec<Program> {
    SOURCES
        .iter()
        .map(|(name, text)| {
            let mut p = parse(text).unwrap_or_else(|e| panic!("corpus seed {name}: {e}"));
            p.name = name.to_string();
            p
        })
        .collect()
}

pub fn get(name: &str) -> Option<Program> {
    builtin().into_iter().find(|p| p.name == name)
}

/// The hand-written seed that carries the pattern a fault breaks.
pub fn witness_seed(fault: FaultId) -> &'static str {
    match fault {
        FaultId::DropT => "hw_01_phase_walk",
        FaultId::CrzSign => "hw_02_crz_ladder",
        FaultId::BadCommute => "hw_03_flip_commute",
    }
}

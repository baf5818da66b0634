//! Seeded procedural level generation with certified solvability.

mod generate;
mod profile;
mod validate;

pub use generate::{
    generate_level, level_stream, place_features, place_pickups, GenerationError, PlacementError,
    GATE_PERIODS, MAX_REPAIR_ROUNDS,
};
pub use profile::{DifficultyProfile, FeatureBudget, ProfileSet};
pub use validate::{fingerprint_hex, level_fingerprint, validate_level, ValidationReport};

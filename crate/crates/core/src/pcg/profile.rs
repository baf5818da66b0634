use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::GenerationError;
use crate::grid::Difficulty;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureBudget {
    #[serde(default)]
    pub sandbag_tracks: u32,
    #[serde(default)]
    pub rotating_gates: u32,
    /// Each bridge comes with one deposit point.
    #[serde(default)]
    pub bridges: u32,
}

/// Generation and scoring knobs for one difficulty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DifficultyProfile {
    pub grid_size: (u32, u32),
    pub illegal_fraction_range: [f64; 2],
    pub pickup_count_range: [u32; 2],
    pub pickup_weight_range: [u32; 2],
    pub feature_budget: FeatureBudget,
    #[serde(default = "zero_range")]
    pub sandbag_traction_range: [u32; 2],
    #[serde(default = "zero_range")]
    pub sandbag_wheel_size_range: [u32; 2],
    pub base_currency: u64,
    #[serde(default = "default_tick_penalty")]
    pub tick_penalty: u64,
    #[serde(default = "default_node_penalty")]
    pub node_penalty: u64,
}

fn zero_range() -> [u32; 2] {
    [0, 0]
}

fn default_tick_penalty() -> u64 {
    1
}

fn default_node_penalty() -> u64 {
    5
}

const EPS: f64 = 1e-9;

impl DifficultyProfile {
    pub fn standard(difficulty: Difficulty) -> Self {
        match difficulty {
            Difficulty::Easy => Self {
                grid_size: (8, 8),
                illegal_fraction_range: [0.10, 0.20],
                pickup_count_range: [1, 2],
                pickup_weight_range: [1, 2],
                feature_budget: FeatureBudget::default(),
                sandbag_traction_range: [0, 0],
                sandbag_wheel_size_range: [0, 0],
                base_currency: 500,
                tick_penalty: 1,
                node_penalty: 5,
            },
            Difficulty::Medium => Self {
                grid_size: (12, 12),
                illegal_fraction_range: [0.20, 0.30],
                pickup_count_range: [2, 4],
                pickup_weight_range: [1, 4],
                feature_budget: FeatureBudget {
                    sandbag_tracks: 1,
                    rotating_gates: 1,
                    bridges: 0,
                },
                sandbag_traction_range: [2, 4],
                sandbag_wheel_size_range: [2, 3],
                base_currency: 1000,
                tick_penalty: 1,
                node_penalty: 5,
            },
            Difficulty::Hard => Self {
                grid_size: (16, 16),
                illegal_fraction_range: [0.30, 0.40],
                pickup_count_range: [3, 6],
                pickup_weight_range: [1, 6],
                feature_budget: FeatureBudget {
                    sandbag_tracks: 2,
                    rotating_gates: 2,
                    bridges: 1,
                },
                sandbag_traction_range: [3, 6],
                sandbag_wheel_size_range: [3, 5],
                base_currency: 2000,
                tick_penalty: 1,
                node_penalty: 5,
            },
        }
    }

    pub fn area(&self) -> usize {
        self.grid_size.0 as usize * self.grid_size.1 as usize
    }

    /// Inclusive bounds on the Illegal cell count implied by the fraction range.
    pub fn illegal_count_bounds(&self) -> (usize, usize) {
        let area = self.area() as f64;
        let [lo, hi] = self.illegal_fraction_range;
        (
            (lo * area - EPS).ceil().max(0.0) as usize,
            (hi * area + EPS).floor().max(0.0) as usize,
        )
    }

    pub fn illegal_count_in_range(&self, count: usize) -> bool {
        let (lo, hi) = self.illegal_count_bounds();
        (lo..=hi).contains(&count)
    }

    pub fn validate(&self) -> Result<(), GenerationError> {
        let bad = |msg: String| Err(GenerationError::InvalidProfile(msg));
        let (w, h) = self.grid_size;
        if w == 0 || h == 0 || self.area() < 2 {
            return bad(format!("grid {w}x{h} cannot hold a start and an end"));
        }
        let [flo, fhi] = self.illegal_fraction_range;
        if !(flo.is_finite() && fhi.is_finite() && 0.0 <= flo && flo <= fhi && fhi < 1.0) {
            return bad(format!(
                "illegal_fraction_range [{flo}, {fhi}] must satisfy 0 <= min <= max < 1"
            ));
        }
        let (lo, hi) = self.illegal_count_bounds();
        if lo > hi {
            return bad(format!(
                "illegal_fraction_range admits no whole cell count on a {w}x{h} grid"
            ));
        }
        for (name, [a, b]) in [
            ("pickup_count_range", self.pickup_count_range),
            ("pickup_weight_range", self.pickup_weight_range),
            ("sandbag_traction_range", self.sandbag_traction_range),
            ("sandbag_wheel_size_range", self.sandbag_wheel_size_range),
        ] {
            if a > b {
                return bad(format!("{name} [{a}, {b}] is empty"));
            }
        }
        if self.pickup_weight_range[0] == 0 {
            return bad("pickup weights must be positive".into());
        }
        let min_legal = self.area() - hi;
        let needed = 2 + self.pickup_count_range[1] as usize;
        if min_legal < needed {
            return bad(format!(
                "only {min_legal} legal cells guaranteed but start, end and {} pickups need {needed}",
                self.pickup_count_range[1]
            ));
        }
        Ok(())
    }
}

/// Per-difficulty profiles, with optional overrides from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSet {
    profiles: BTreeMap<Difficulty, DifficultyProfile>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OverrideDoc {
    Single(DifficultyProfile),
    PerDifficulty(BTreeMap<Difficulty, DifficultyProfile>),
}

impl Default for ProfileSet {
    fn default() -> Self {
        Self {
            profiles: Difficulty::ALL
                .iter()
                .map(|&d| (d, DifficultyProfile::standard(d)))
                .collect(),
        }
    }
}

impl ProfileSet {
    pub fn get(&self, difficulty: Difficulty) -> &DifficultyProfile {
        &self.profiles[&difficulty]
    }

    /// Applies an override document: either one profile used for every
    /// difficulty, or an object keyed by difficulty name.
    pub fn with_overrides(mut self, text: &str) -> Result<Self, GenerationError> {
        let doc: OverrideDoc = serde_json::from_str(text)
            .map_err(|e| GenerationError::InvalidProfile(e.to_string()))?;
        match doc {
            OverrideDoc::Single(profile) => {
                profile.validate()?;
                for d in Difficulty::ALL {
                    self.profiles.insert(*d, profile.clone());
                }
            }
            OverrideDoc::PerDifficulty(map) => {
                for (d, profile) in map {
                    profile.validate()?;
                    self.profiles.insert(d, profile);
                }
            }
        }
        Ok(self)
    }
}

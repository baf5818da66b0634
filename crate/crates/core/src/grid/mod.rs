//! Grid world data model and the path primitives built on it.

mod format;
pub(crate) mod path;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use format::{LevelFormatError, LEVEL_SCHEMA_VERSION};
pub use path::{dijkstra, distance_map, neighbors, reachable_set, Path};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coord {
    pub col: u32,
    pub row: u32,
}

impl Coord {
    pub const fn new(col: u32, row: u32) -> Self {
        Self { col, row }
    }

    pub fn manhattan(self, other: Coord) -> u32 {
        self.col.abs_diff(other.col) + self.row.abs_diff(other.row)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.col, self.row)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellKind {
    Legal,
    Illegal,
}

impl CellKind {
    pub fn symbol(self) -> char {
        match self {
            CellKind::Legal => 'L',
            CellKind::Illegal => 'X',
        }
    }

    pub fn from_symbol(ch: char) -> Option<Self> {
        match ch {
            'L' => Some(CellKind::Legal),
            'X' => Some(CellKind::Illegal),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PickupId(pub u32);

impl fmt::Display for PickupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pickup {
    pub id: PickupId,
    pub at: Coord,
    pub weight: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum FeatureKind {
    SandbagTrack {
        min_traction: u32,
        min_wheel_size: u32,
    },
    RotatingGate {
        period_ticks: u32,
        phase_ticks: u32,
    },
    Bridge,
    DepositPoint {
        accepts: Vec<PickupId>,
    },
}

impl FeatureKind {
    pub fn label(&self) -> &'static str {
        match self {
            FeatureKind::SandbagTrack { .. } => "sandbag-track",
            FeatureKind::RotatingGate { .. } => "rotating-gate",
            FeatureKind::Bridge => "bridge",
            FeatureKind::DepositPoint { .. } => "deposit-point",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feature {
    pub at: Coord,
    pub kind: FeatureKind,
}

/// Gate openness at a tick: open iff `floor((tick + phase) / period)` is even.
///
/// A zero period is treated as permanently open.
pub fn gate_open(period_ticks: u32, phase_ticks: u32, tick: u64) -> bool {
    if period_ticks == 0 {
        return true;
    }
    ((tick + u64::from(phase_ticks)) / u64::from(period_ticks)).is_multiple_of(2)
}

macro_rules! named_enum {
    (
        $(#[$meta:meta])*
        pub enum $name:ident { $($variant:ident => $slug:literal, $title:literal;)+ }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $slug)] $variant,)+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn slug(self) -> &'static str {
                match self { $($name::$variant => $slug,)+ }
            }

            pub fn title(self) -> &'static str {
                match self { $($name::$variant => $title,)+ }
            }

            pub fn ordinal(self) -> usize {
                Self::ALL.iter().position(|&v| v == self).expect("variant listed in ALL")
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.slug())
            }
        }

        impl FromStr for $name {
            type Err = UnknownName;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let wanted = s.trim().to_ascii_lowercase().replace(['_', ' '], "-");
                Self::ALL
                    .iter()
                    .copied()
                    .find(|v| v.slug() == wanted)
                    .ok_or_else(|| UnknownName {
                        kind: stringify!($name),
                        value: s.to_string(),
                    })
            }
        }
    };
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("unknown {kind} `{value}`")]
pub struct UnknownName {
    pub kind: &'static str,
    pub value: String,
}

named_enum! {
    /// The nine selectable map locations.
    pub enum MapTheme {
        SouthAmericanMountains => "south-american-mountains", "South American Mountains";
        AfricanDesert => "african-desert", "African Desert";
        NewYork => "new-york", "New York";
        EastCoastIslands => "east-coast-islands", "East Coast Islands";
        EuropeanSnowlands => "european-snowlands", "European Snowlands";
        RussianGulag => "russian-gulag", "Russian Gulag";
        AsianRainforest => "asian-rainforest", "Asian Rainforest";
        ChineseTemple => "chinese-temple", "Chinese Temple";
        JapaneseIndustry => "japanese-industry", "Japanese Industry";
    }
}

named_enum! {
    pub enum Difficulty {
        Easy => "easy", "Easy";
        Medium => "medium", "Medium";
        Hard => "hard", "Hard";
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("coordinate {coord} is outside the {width}x{height} grid")]
    OutOfBounds {
        coord: Coord,
        width: u32,
        height: u32,
    },
    #[error("search origin {0} is not passable")]
    NotPassable(Coord),
}

/// A generated playable area. Cells are stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridLevel {
    pub width: u32,
    pub height: u32,
    pub cells: Vec<CellKind>,
    pub start: Coord,
    pub end: Coord,
    pub features: Vec<Feature>,
    pub pickups: Vec<Pickup>,
    pub theme: MapTheme,
    pub difficulty: Difficulty,
    pub seed: u64,
}

impl GridLevel {
    /// An all-`kind` grid with no features or pickups.
    pub fn filled(width: u32, height: u32, kind: CellKind, start: Coord, end: Coord) -> Self {
        Self {
            width,
            height,
            cells: vec![kind; width as usize * height as usize],
            start,
            end,
            features: Vec::new(),
            pickups: Vec::new(),
            theme: MapTheme::SouthAmericanMountains,
            difficulty: Difficulty::Easy,
            seed: 0,
        }
    }

    /// Builds a level from `L`/`X` row strings. Panics on ragged or unknown input;
    /// meant for fixtures.
    pub fn from_rows(rows: &[&str], start: Coord, end: Coord) -> Self {
        let height = rows.len() as u32;
        let width = rows.first().map_or(0, |r| r.chars().count()) as u32;
        let mut cells = Vec::with_capacity((width * height) as usize);
        for row in rows {
            assert_eq!(
                row.chars().count() as u32,
                width,
                "ragged fixture row {row:?}"
            );
            cells.extend(
                row.chars()
                    .map(|ch| CellKind::from_symbol(ch).expect("L or X")),
            );
        }
        Self {
            cells,
            ..Self::filled(width, height, CellKind::Legal, start, end)
        }
    }

    pub fn area(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn in_bounds(&self, at: Coord) -> bool {
        at.col < self.width && at.row < self.height
    }

    pub fn check_bounds(&self, at: Coord) -> Result<(), GridError> {
        if self.in_bounds(at) {
            Ok(())
        } else {
            Err(GridError::OutOfBounds {
                coord: at,
                width: self.width,
                height: self.height,
            })
        }
    }

    pub fn index_of(&self, at: Coord) -> usize {
        at.row as usize * self.width as usize + at.col as usize
    }

    pub fn coord_of(&self, index: usize) -> Coord {
        let w = self.width as usize;
        Coord::new((index % w) as u32, (index / w) as u32)
    }

    pub fn cell(&self, at: Coord) -> Option<CellKind> {
        self.in_bounds(at).then(|| self.cells[self.index_of(at)])
    }

    pub fn set_cell(&mut self, at: Coord, kind: CellKind) {
        let i = self.index_of(at);
        self.cells[i] = kind;
    }

    pub fn is_legal(&self, at: Coord) -> bool {
        self.cell(at) == Some(CellKind::Legal)
    }

    pub fn coords(&self) -> impl Iterator<Item = Coord> + '_ {
        (0..self.height).flat_map(move |row| (0..self.width).map(move |col| Coord::new(col, row)))
    }

    pub fn illegal_count(&self) -> usize {
        self.cells
            .iter()
            .filter(|&&c| c == CellKind::Illegal)
            .count()
    }

    pub fn illegal_fraction(&self) -> f64 {
        if self.cells.is_empty() {
            0.0
        } else {
            self.illegal_count() as f64 / self.cells.len() as f64
        }
    }

    pub fn feature_at(&self, at: Coord) -> Option<&Feature> {
        self.features.iter().find(|f| f.at == at)
    }

    pub fn pickup(&self, id: PickupId) -> Option<&Pickup> {
        self.pickups.iter().find(|p| p.id == id)
    }

    pub fn deposit_points(&self) -> impl Iterator<Item = (Coord, &[PickupId])> + '_ {
        self.features.iter().filter_map(|f| match &f.kind {
            FeatureKind::DepositPoint { accepts } => Some((f.at, accepts.as_slice())),
            _ => None,
        })
    }

    pub fn has_deposits(&self) -> bool {
        self.deposit_points().next().is_some()
    }

    /// Row strings in the `L`/`X` encoding.
    pub fn row_strings(&self) -> Vec<String> {
        self.cells
            .chunks(self.width.max(1) as usize)
            .map(|row| row.iter().map(|c| c.symbol()).collect())
            .collect()
    }
}

//! Canonical level JSON.
//!
//! Keys are emitted sorted (serde_json's default map is ordered), output is
//! compact, and cells are row-major strings of `L`/`X`. Parsing then
//! re-serialising a canonical document reproduces it byte for byte.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CellKind, Coord, Difficulty, Feature, GridLevel, MapTheme, Pickup};

pub const LEVEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LevelFormatError {
    #[error("malformed level JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported level schema_version {0} (expected {LEVEL_SCHEMA_VERSION})")]
    Schema(u32),
    #[error("level shape mismatch: {0}")]
    Shape(String),
    #[error("unknown cell symbol {symbol:?} at row {row}, column {col}")]
    CellSymbol {
        row: usize,
        col: usize,
        symbol: char,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelDoc {
    schema_version: u32,
    seed: u64,
    theme: MapTheme,
    difficulty: Difficulty,
    width: u32,
    height: u32,
    cells: Vec<String>,
    start: Coord,
    end: Coord,
    features: Vec<Feature>,
    pickups: Vec<Pickup>,
}

impl GridLevel {
    pub fn to_json_value(&self) -> serde_json::Value {
        let doc = LevelDoc {
            schema_version: LEVEL_SCHEMA_VERSION,
            seed: self.seed,
            theme: self.theme,
            difficulty: self.difficulty,
            width: self.width,
            height: self.height,
            cells: self.row_strings(),
            start: self.start,
            end: self.end,
            features: self.features.clone(),
            pickups: self.pickups.clone(),
        };
        serde_json::to_value(doc).expect("level document is always representable")
    }

    /// Compact sorted-key JSON; the input to fingerprinting.
    pub fn to_canonical_json(&self) -> String {
        self.to_json_value().to_string()
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("value serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, LevelFormatError> {
        let doc: LevelDoc = serde_json::from_str(text)?;
        Self::from_doc(doc)
    }

    pub fn from_json_value(value: serde_json::Value) -> Result<Self, LevelFormatError> {
        let doc: LevelDoc = serde_json::from_value(value)?;
        Self::from_doc(doc)
    }

    fn from_doc(doc: LevelDoc) -> Result<Self, LevelFormatError> {
        if doc.schema_version != LEVEL_SCHEMA_VERSION {
            return Err(LevelFormatError::Schema(doc.schema_version));
        }
        if doc.width == 0 || doc.height == 0 {
            return Err(LevelFormatError::Shape(format!(
                "grid must be non-empty, got {}x{}",
                doc.width, doc.height
            )));
        }
        if doc.cells.len() != doc.height as usize {
            return Err(LevelFormatError::Shape(format!(
                "expected {} rows, found {}",
                doc.height,
                doc.cells.len()
            )));
        }
        let mut cells = Vec::with_capacity(doc.width as usize * doc.height as usize);
        for (row, line) in doc.cells.iter().enumerate() {
            let len = line.chars().count();
            if len != doc.width as usize {
                return Err(LevelFormatError::Shape(format!(
                    "row {row} has {len} cells, expected {}",
                    doc.width
                )));
            }
            for (col, symbol) in line.chars().enumerate() {
                let kind = CellKind::from_symbol(symbol).ok_or(LevelFormatError::CellSymbol {
                    row,
                    col,
                    symbol,
                })?;
                cells.push(kind);
            }
        }
        Ok(GridLevel {
            width: doc.width,
            height: doc.height,
            cells,
            start: doc.start,
            end: doc.end,
            features: doc.features,
            pickups: doc.pickups,
            theme: doc.theme,
            difficulty: doc.difficulty,
            seed: doc.seed,
        })
    }
}

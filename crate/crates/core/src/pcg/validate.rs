use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::grid::{dijkstra, reachable_set, Coord, FeatureKind, GridLevel, PickupId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub solvable: bool,
    pub path_len: Option<u32>,
    pub unreachable_pickups: Vec<PickupId>,
    pub unreachable_deposits: Vec<Coord>,
    pub illegal_fraction: f64,
    pub violations: Vec<String>,
}

/// Checks structure and certifies that the end, every pickup and every
/// deposit point can be reached from the start over Legal cells.
///
/// Never fails: malformed levels produce violations.
pub fn validate_level(level: &GridLevel) -> ValidationReport {
    let mut violations = Vec::new();

    if level.cells.len() != level.area() || level.area() == 0 {
        violations.push(format!(
            "cell array holds {} entries for a {}x{} grid",
            level.cells.len(),
            level.width,
            level.height
        ));
        return ValidationReport {
            solvable: false,
            path_len: None,
            unreachable_pickups: level.pickups.iter().map(|p| p.id).collect(),
            unreachable_deposits: level.deposit_points().map(|(at, _)| at).collect(),
            illegal_fraction: level.illegal_fraction(),
            violations,
        };
    }

    let mut endpoints_ok = true;
    for (name, at) in [("start", level.start), ("end", level.end)] {
        if !level.in_bounds(at) {
            violations.push(format!("{name} {at} is out of bounds"));
            endpoints_ok = false;
        } else if !level.is_legal(at) {
            violations.push(format!("{name} {at} is on an illegal cell"));
            endpoints_ok = false;
        }
    }
    if level.start == level.end {
        violations.push(format!("start and end coincide at {}", level.start));
    }

    let pickup_ids: HashSet<PickupId> = level.pickups.iter().map(|p| p.id).collect();
    let mut seen_ids = HashSet::new();
    let mut pickup_cells = HashSet::new();
    for p in &level.pickups {
        if !seen_ids.insert(p.id) {
            violations.push(format!("duplicate pickup id {}", p.id));
        }
        if !level.is_legal(p.at) {
            violations.push(format!(
                "pickup {} at {} is not on a legal cell",
                p.id, p.at
            ));
        }
        if !pickup_cells.insert(p.at) {
            violations.push(format!("more than one pickup at {}", p.at));
        }
        if p.weight == 0 {
            violations.push(format!("pickup {} has zero weight", p.id));
        }
    }

    let mut feature_cells = HashSet::new();
    for f in &level.features {
        if !feature_cells.insert(f.at) {
            violations.push(format!("more than one feature at {}", f.at));
        }
        if !level.is_legal(f.at) {
            violations.push(format!(
                "{} at {} is not on a legal cell",
                f.kind.label(),
                f.at
            ));
        }
        match &f.kind {
            FeatureKind::RotatingGate {
                period_ticks,
                phase_ticks,
            } => {
                if *period_ticks == 0 {
                    violations.push(format!("rotating gate at {} has zero period", f.at));
                } else if phase_ticks >= period_ticks {
                    violations.push(format!(
                        "rotating gate at {} has phase {phase_ticks} >= period {period_ticks}",
                        f.at
                    ));
                }
            }
            FeatureKind::DepositPoint { accepts } => {
                for id in accepts.iter().filter(|id| !pickup_ids.contains(id)) {
                    violations.push(format!(
                        "deposit point at {} accepts unknown pickup {id}",
                        f.at
                    ));
                }
            }
            FeatureKind::SandbagTrack { .. } | FeatureKind::Bridge => {}
        }
    }

    let legal = |at: Coord| level.is_legal(at);
    let (path_len, reachable) = if endpoints_ok {
        let path = dijkstra(level, level.start, level.end, legal)
            .ok()
            .flatten();
        let reach = reachable_set(level, level.start, legal).unwrap_or_default();
        (path.map(|p| (p.len() - 1) as u32), reach)
    } else {
        (None, BTreeSet::new())
    };
    if endpoints_ok && path_len.is_none() {
        violations.push(format!(
            "no legal path from start {} to end {}",
            level.start, level.end
        ));
    }

    let unreachable_pickups: Vec<PickupId> = level
        .pickups
        .iter()
        .filter(|p| !reachable.contains(&p.at))
        .map(|p| p.id)
        .collect();
    let unreachable_deposits: Vec<Coord> = level
        .deposit_points()
        .map(|(at, _)| at)
        .filter(|at| !reachable.contains(at))
        .collect();
    for id in &unreachable_pickups {
        violations.push(format!("pickup {id} is unreachable from start"));
    }
    for at in &unreachable_deposits {
        violations.push(format!("deposit point at {at} is unreachable from start"));
    }

    ValidationReport {
        solvable: path_len.is_some()
            && unreachable_pickups.is_empty()
            && unreachable_deposits.is_empty(),
        path_len,
        unreachable_pickups,
        unreachable_deposits,
        illegal_fraction: level.illegal_fraction(),
        violations,
    }
}

/// First eight bytes (big-endian) of SHA-256 over the canonical level JSON.
pub fn level_fingerprint(level: &GridLevel) -> u64 {
    let digest = Sha256::digest(level.to_canonical_json().as_bytes());
    u64::from_be_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn fingerprint_hex(fingerprint: u64) -> String {
    format!("{fingerprint:016x}")
}

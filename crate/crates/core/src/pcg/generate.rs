//! Carve-then-scatter level generator.
//!
//! Draw order from the level stream (seed, stream = theme * 3 + difficulty):
//!
//! 1. illegal cell count, once per attempt
//! 2. start cell, then end cell among cells far enough from start
//! 3. corridor walk: per step one `chance` then one `index`
//! 4. scatter: one shuffle of the unprotected cells
//! 5. pickups: count, shuffle of reachable cells, then one weight per pickup
//! 6. features: bridge count, sandbag count, gate count; then per feature
//!    its parameters followed by one shuffle of candidate cells
//! 7. repair rounds only draw when re-scattering displaced cells
//!
//! Changing this order changes every generated level.

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use super::profile::DifficultyProfile;
use super::validate::{validate_level, ValidationReport};
use crate::grid::path::neighbors_unchecked;
use crate::grid::{
    dijkstra, reachable_set, CellKind, Coord, Difficulty, Feature, FeatureKind, GridLevel,
    MapTheme, Pickup, PickupId,
};
use crate::rng::GameRng;

pub const GATE_PERIODS: [u32; 3] = [6, 8, 10];
pub const MAX_REPAIR_ROUNDS: usize = 32;
const MAX_WIDENINGS: usize = 3;
const MAX_ATTEMPTS: usize = 8;
const CORRIDOR_BIAS: f64 = 0.75;

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("invalid difficulty profile: {0}")]
    InvalidProfile(String),
    #[error("no valid level after {attempts} attempts: {reason}")]
    Infeasible { attempts: usize, reason: String },
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("only {available} reachable cells for {needed} pickups")]
pub struct PlacementError {
    pub available: usize,
    pub needed: usize,
}

pub fn level_stream(theme: MapTheme, difficulty: Difficulty) -> u64 {
    (theme.ordinal() * Difficulty::ALL.len() + difficulty.ordinal()) as u64
}

pub fn generate_level(
    seed: u64,
    theme: MapTheme,
    difficulty: Difficulty,
    profile: &DifficultyProfile,
) -> Result<GridLevel, GenerationError> {
    profile.validate()?;
    let mut rng = GameRng::new(seed, level_stream(theme, difficulty));
    let (width, height) = profile.grid_size;
    let (count_lo, count_hi) = profile.illegal_count_bounds();
    let mut last_reason = String::new();

    for _ in 0..MAX_ATTEMPTS {
        let illegal_target = rng.range_inclusive(count_lo as u64, count_hi as u64) as usize;
        let mut base = GridLevel::filled(
            width,
            height,
            CellKind::Legal,
            Coord::new(0, 0),
            Coord::new(0, 0),
        );
        base.theme = theme;
        base.difficulty = difficulty;
        base.seed = seed;
        let (start, end) = place_endpoints(&base, &mut rng);
        base.start = start;
        base.end = end;
        let corridor = carve_corridor(&base, &mut rng);

        for widen in 0..MAX_WIDENINGS {
            let protected = dilate(&base, &corridor, widen);
            let mut level = base.clone();
            if !scatter_illegal(&mut level, &mut rng, &protected, illegal_target) {
                last_reason = format!(
                    "{} unprotected cells cannot hold {illegal_target} illegal cells",
                    level.area() - protected.len()
                );
                break;
            }
            level.pickups = match place_pickups(&level, &mut rng, profile) {
                Ok(p) => p,
                Err(e) => {
                    last_reason = e.to_string();
                    continue;
                }
            };
            level.features = place_features(&level, &mut rng, profile);

            let mut report = validate_level(&level);
            let mut locked = protected.clone();
            let mut rounds = 0;
            while !report.solvable && rounds < MAX_REPAIR_ROUNDS {
                reflow_blockers(&mut level, &mut rng, &report, &mut locked);
                report = validate_level(&level);
                rounds += 1;
            }
            if report.solvable && profile.illegal_count_in_range(level.illegal_count()) {
                return Ok(level);
            }
            last_reason = describe_failure(&report);
        }
    }
    Err(GenerationError::Infeasible {
        attempts: MAX_ATTEMPTS,
        reason: last_reason,
    })
}

fn describe_failure(report: &ValidationReport) -> String {
    if report.violations.is_empty() {
        "illegal density drifted out of range".into()
    } else {
        report.violations.join("; ")
    }
}

/// Start anywhere; end among cells at Manhattan distance >= max(w, h) / 2,
/// falling back to the farthest cells on grids too small for that.
fn place_endpoints(level: &GridLevel, rng: &mut GameRng) -> (Coord, Coord) {
    let cells: Vec<Coord> = level.coords().collect();
    let start = cells[rng.index(cells.len())];
    let min_dist = level.width.max(level.height) / 2;
    let mut far: Vec<Coord> = cells
        .iter()
        .copied()
        .filter(|&c| c != start && c.manhattan(start) >= min_dist.max(1))
        .collect();
    if far.is_empty() {
        let best = cells.iter().map(|c| c.manhattan(start)).max().unwrap_or(0);
        far = cells
            .iter()
            .copied()
            .filter(|c| c.manhattan(start) == best && *c != start)
            .collect();
    }
    let end = far[rng.index(far.len())];
    (start, end)
}

/// Biased random walk from start to end. Every visited cell is protected
/// from scattering, which guarantees one Legal route.
fn carve_corridor(level: &GridLevel, rng: &mut GameRng) -> BTreeSet<Coord> {
    let mut corridor = BTreeSet::from([level.start]);
    let mut cur = level.start;
    let give_up_wandering = level.area() * 4;
    let mut steps = 0;
    while cur != level.end {
        let all: Vec<Coord> = neighbors_unchecked(level, cur).collect();
        let toward: Vec<Coord> = all
            .iter()
            .copied()
            .filter(|n| n.manhattan(level.end) < cur.manhattan(level.end))
            .collect();
        let greedy = rng.chance(CORRIDOR_BIAS) || steps > give_up_wandering;
        let pool = if greedy { &toward } else { &all };
        cur = pool[rng.index(pool.len())];
        corridor.insert(cur);
        steps += 1;
    }
    corridor
}

fn dilate(level: &GridLevel, cells: &BTreeSet<Coord>, rings: usize) -> BTreeSet<Coord> {
    let mut out = cells.clone();
    for _ in 0..rings {
        let ring: Vec<Coord> = out
            .iter()
            .flat_map(|&c| neighbors_unchecked(level, c))
            .collect();
        out.extend(ring);
    }
    out
}

/// Marks `count` random unprotected cells Illegal. Returns false if there
/// are not enough candidates.
fn scatter_illegal(
    level: &mut GridLevel,
    rng: &mut GameRng,
    protected: &BTreeSet<Coord>,
    count: usize,
) -> bool {
    let mut candidates: Vec<Coord> = level.coords().filter(|c| !protected.contains(c)).collect();
    if candidates.len() < count {
        return false;
    }
    rng.shuffle(&mut candidates);
    for &at in &candidates[..count] {
        level.set_cell(at, CellKind::Illegal);
    }
    true
}

/// Pickups on distinct cells reachable from start, never on start or end.
pub fn place_pickups(
    level: &GridLevel,
    rng: &mut GameRng,
    profile: &DifficultyProfile,
) -> Result<Vec<Pickup>, PlacementError> {
    let [cmin, cmax] = profile.pickup_count_range;
    let count = rng.range_inclusive(cmin.into(), cmax.into()) as usize;
    let reachable = reachable_set(level, level.start, |at| level.is_legal(at)).unwrap_or_default();
    let occupied: HashSet<Coord> = level.features.iter().map(|f| f.at).collect();
    let mut cells: Vec<Coord> = reachable
        .into_iter()
        .filter(|&c| c != level.start && c != level.end && !occupied.contains(&c))
        .collect();
    if cells.len() < count {
        return Err(PlacementError {
            available: cells.len(),
            needed: count,
        });
    }
    rng.shuffle(&mut cells);
    let [wmin, wmax] = profile.pickup_weight_range;
    Ok(cells[..count]
        .iter()
        .enumerate()
        .map(|(i, &at)| Pickup {
            id: PickupId(i as u32),
            at,
            weight: rng.range_inclusive(wmin.into(), wmax.into()) as u32,
        })
        .collect())
}

/// Bridges (each with an adjacent deposit point), then sandbag tracks, then
/// rotating gates. A placement is kept only if the level stays fully
/// connected with every sandbag and gate cell treated as a wall, so no
/// obstacle is ever the sole route to anything. Placements that find no
/// such cell are dropped.
pub fn place_features(
    level: &GridLevel,
    rng: &mut GameRng,
    profile: &DifficultyProfile,
) -> Vec<Feature> {
    let budget = profile.feature_budget;
    let n_bridges = rng.range_inclusive(0, budget.bridges.into());
    let n_sandbags = rng.range_inclusive(0, budget.sandbag_tracks.into());
    let n_gates = rng.range_inclusive(0, budget.rotating_gates.into());

    let mut work = level.clone();
    work.features.clear();

    if !work.pickups.is_empty() {
        let accepts: Vec<PickupId> = work.pickups.iter().map(|p| p.id).collect();
        for _ in 0..n_bridges {
            let mut candidates = feature_candidates(&work);
            rng.shuffle(&mut candidates);
            let placed = candidates.iter().find_map(|&bridge| {
                neighbors_unchecked(&work, bridge)
                    .filter(|n| candidates.contains(n))
                    .find_map(|deposit| {
                        let mut trial = work.clone();
                        trial.features.push(Feature {
                            at: bridge,
                            kind: FeatureKind::Bridge,
                        });
                        trial.features.push(Feature {
                            at: deposit,
                            kind: FeatureKind::DepositPoint {
                                accepts: accepts.clone(),
                            },
                        });
                        certify_obstacles(&trial).then_some(trial)
                    })
            });
            if let Some(trial) = placed {
                work = trial;
            }
        }
    }

    for _ in 0..n_sandbags {
        let [tlo, thi] = profile.sandbag_traction_range;
        let [slo, shi] = profile.sandbag_wheel_size_range;
        let kind = FeatureKind::SandbagTrack {
            min_traction: rng.range_inclusive(tlo.into(), thi.into()) as u32,
            min_wheel_size: rng.range_inclusive(slo.into(), shi.into()) as u32,
        };
        try_place(&mut work, rng, kind);
    }

    for _ in 0..n_gates {
        let period = GATE_PERIODS[rng.index(GATE_PERIODS.len())];
        let kind = FeatureKind::RotatingGate {
            period_ticks: period,
            phase_ticks: rng.below(period.into()) as u32,
        };
        try_place(&mut work, rng, kind);
    }

    work.features
}

fn try_place(work: &mut GridLevel, rng: &mut GameRng, kind: FeatureKind) {
    let mut candidates = feature_candidates(work);
    rng.shuffle(&mut candidates);
    for at in candidates {
        work.features.push(Feature {
            at,
            kind: kind.clone(),
        });
        if certify_obstacles(work) {
            return;
        }
        work.features.pop();
    }
}

fn feature_candidates(level: &GridLevel) -> Vec<Coord> {
    let taken: HashSet<Coord> = level
        .features
        .iter()
        .map(|f| f.at)
        .chain(level.pickups.iter().map(|p| p.at))
        .chain([level.start, level.end])
        .collect();
    reachable_set(level, level.start, |at| level.is_legal(at))
        .unwrap_or_default()
        .into_iter()
        .filter(|c| !taken.contains(c))
        .collect()
}

/// End, pickups and deposits all reachable with sandbags and gates walled off.
fn certify_obstacles(level: &GridLevel) -> bool {
    let blocked: HashSet<Coord> = level
        .features
        .iter()
        .filter(|f| {
            matches!(
                f.kind,
                FeatureKind::SandbagTrack { .. } | FeatureKind::RotatingGate { .. }
            )
        })
        .map(|f| f.at)
        .collect();
    let Ok(reach) = reachable_set(level, level.start, |at| {
        level.is_legal(at) && !blocked.contains(&at)
    }) else {
        return false;
    };
    reach.contains(&level.end)
        && level.pickups.iter().all(|p| reach.contains(&p.at))
        && level.deposit_points().all(|(at, _)| reach.contains(&at))
}

/// One repair round: for every unreachable target, find the straight
/// Dijkstra route through the whole grid, clear the Illegal cells on it,
/// lock the route, and re-scatter the same number of Illegal cells on
/// unlocked cells so the density is preserved.
pub(crate) fn reflow_blockers(
    level: &mut GridLevel,
    rng: &mut GameRng,
    report: &ValidationReport,
    locked: &mut BTreeSet<Coord>,
) {
    if !level.in_bounds(level.start) || !level.in_bounds(level.end) {
        return;
    }
    let mut targets: Vec<Coord> = Vec::new();
    if report.path_len.is_none() {
        targets.push(level.end);
    }
    targets.extend(
        report
            .unreachable_pickups
            .iter()
            .filter_map(|id| level.pickup(*id).map(|p| p.at)),
    );
    targets.extend(report.unreachable_deposits.iter().copied());

    let mut cleared = 0usize;
    for target in targets {
        let Ok(Some(route)) = dijkstra(level, level.start, target, |_| true) else {
            continue;
        };
        for at in route {
            if !level.is_legal(at) {
                level.set_cell(at, CellKind::Legal);
                cleared += 1;
            }
            locked.insert(at);
        }
    }
    let occupied: HashSet<Coord> = level
        .features
        .iter()
        .map(|f| f.at)
        .chain(level.pickups.iter().map(|p| p.at))
        .collect();
    let mut candidates: Vec<Coord> = level
        .coords()
        .filter(|c| level.is_legal(*c) && !locked.contains(c) && !occupied.contains(c))
        .collect();
    rng.shuffle(&mut candidates);
    for &at in candidates.iter().take(cleared) {
        level.set_cell(at, CellKind::Illegal);
    }
}

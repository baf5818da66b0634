//! Greedy planner producing command sequences that complete a level.
//!
//! Pickups are served nearest-first (ties by id), each followed by its
//! deposit point when it has one, then the robot heads for the end.
//! Sandbag cells are walls unless the build clears them; gates are
//! passable, and the planner idles in front of a closed gate until it opens.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{dijkstra, distance_map, gate_open, Coord, FeatureKind, GridLevel, PickupId};
use crate::pcg::DifficultyProfile;
use crate::robot::RobotStats;
use crate::sim::Command;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Objective {
    Pickup { id: PickupId, at: Coord },
    Deposit { id: PickupId, at: Coord },
    End { at: Coord },
}

impl Objective {
    pub fn at(&self) -> Coord {
        match *self {
            Objective::Pickup { at, .. }
            | Objective::Deposit { at, .. }
            | Objective::End { at } => at,
        }
    }

    /// Tie-break key: pickups before deposits before the end, then by id.
    fn key(&self) -> (u8, u32) {
        match *self {
            Objective::Pickup { id, .. } => (0, id.0),
            Objective::Deposit { id, .. } => (1, id.0),
            Objective::End { .. } => (2, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    #[serde(with = "command_string")]
    pub commands: Vec<Command>,
    pub predicted_ticks: u64,
    pub route: Vec<Objective>,
}

impl Plan {
    pub fn move_count(&self) -> usize {
        self.commands.iter().filter(|c| c.is_move()).count()
    }
}

/// Plans serialize their commands as a compact letter string ("RRDPW").
mod command_string {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use crate::sim::{commands_to_string, parse_commands, Command};

    pub fn serialize<S: Serializer>(v: &[Command], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&commands_to_string(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Command>, D::Error> {
        parse_commands(&String::deserialize(d)?).map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("objective at {0} is unreachable")]
    Unreachable(Coord),
    #[error("route origin {0} is not passable")]
    BadOrigin(Coord),
}

/// Nearest-neighbour ordering of `objectives` over Legal cells.
pub fn greedy_route(
    level: &GridLevel,
    from: Coord,
    objectives: &[Objective],
) -> Result<Vec<Objective>, PlanError> {
    greedy_route_with(level, from, objectives, |at| level.is_legal(at))
}

pub fn greedy_route_with<P>(
    level: &GridLevel,
    from: Coord,
    objectives: &[Objective],
    passable: P,
) -> Result<Vec<Objective>, PlanError>
where
    P: Fn(Coord) -> bool,
{
    let mut remaining = objectives.to_vec();
    let mut order = Vec::with_capacity(remaining.len());
    let mut pos = from;
    while !remaining.is_empty() {
        let dist = distance_map(level, pos, &passable).map_err(|_| PlanError::BadOrigin(pos))?;
        let (idx, _) = nearest(level, &dist, &remaining).ok_or_else(|| {
            PlanError::Unreachable(remaining.iter().map(|o| o.at()).min().expect("non-empty"))
        })?;
        let next = remaining.remove(idx);
        pos = next.at();
        order.push(next);
    }
    Ok(order)
}

fn nearest(
    level: &GridLevel,
    dist: &[Option<u32>],
    candidates: &[Objective],
) -> Option<(usize, u32)> {
    candidates
        .iter()
        .enumerate()
        .filter_map(|(i, o)| {
            let at = o.at();
            level
                .in_bounds(at)
                .then(|| dist[level.index_of(at)])
                .flatten()
                .map(|d| (i, d, o.key()))
        })
        .min_by(|a, b| {
            a.1.cmp(&b.1)
                .then_with(|| a.2.cmp(&b.2))
                .then(Ordering::Equal)
        })
        .map(|(i, d, _)| (i, d))
}

fn clears_sandbag(level: &GridLevel, stats: &RobotStats, at: Coord) -> bool {
    match level.feature_at(at).map(|f| &f.kind) {
        Some(FeatureKind::SandbagTrack {
            min_traction,
            min_wheel_size,
        }) => stats.wheel_traction >= *min_traction && stats.wheel_size >= *min_wheel_size,
        _ => true,
    }
}

struct Walker<'a> {
    level: &'a GridLevel,
    pos: Coord,
    tick: u64,
    commands: Vec<Command>,
}

impl Walker<'_> {
    fn push(&mut self, cmd: Command) {
        self.commands.push(cmd);
        self.tick += 1;
    }

    /// Follows `path` (which starts at the current position), waiting in
    /// front of closed gates.
    fn follow(&mut self, path: &[Coord]) {
        for &next in path.iter().skip(1) {
            if let Some(FeatureKind::RotatingGate {
                period_ticks,
                phase_ticks,
            }) = self.level.feature_at(next).map(|f| &f.kind)
            {
                while !gate_open(*period_ticks, *phase_ticks, self.tick) {
                    self.push(Command::Wait);
                }
            }
            let cmd = Command::toward(self.pos, next).expect("path cells are adjacent");
            self.push(cmd);
            self.pos = next;
        }
    }
}

/// A command sequence that completes `level` with `stats`, or `None` when
/// the build cannot finish it (too weak to lift a pickup, too little box
/// space for a collect-only level, a mandatory sandbag it cannot clear,
/// or more moves than the battery holds).
pub fn plan(level: &GridLevel, stats: &RobotStats, _profile: &DifficultyProfile) -> Option<Plan> {
    if stats.speed == 0 || level.pickups.iter().any(|p| p.weight > stats.grip_strength) {
        return None;
    }
    let passable = |at: Coord| level.is_legal(at) && clears_sandbag(level, stats, at);
    if !passable(level.start) {
        return None;
    }

    let deposit_for = |id: PickupId| -> Vec<Coord> {
        level
            .deposit_points()
            .filter(|(_, accepts)| accepts.contains(&id))
            .map(|(at, _)| at)
            .collect()
    };

    let mut walker = Walker {
        level,
        pos: level.start,
        tick: 0,
        commands: Vec::new(),
    };
    let mut route = Vec::new();
    let mut carried = 0usize;
    let mut remaining: Vec<Objective> = level
        .pickups
        .iter()
        .map(|p| Objective::Pickup { id: p.id, at: p.at })
        .collect();

    while !remaining.is_empty() {
        let dist = distance_map(level, walker.pos, passable).ok()?;
        let (idx, _) = nearest(level, &dist, &remaining)?;
        let target = remaining.remove(idx);
        let Objective::Pickup { id, at } = target else {
            unreachable!("only pickups queued")
        };

        if carried >= stats.box_capacity as usize {
            return None;
        }
        walker.follow(&dijkstra(level, walker.pos, at, passable).ok()??);
        walker.push(Command::PickUp);
        carried += 1;
        route.push(target);

        let deposits = deposit_for(id);
        if !deposits.is_empty() {
            let dist = distance_map(level, walker.pos, passable).ok()?;
            let candidates: Vec<Objective> = deposits
                .iter()
                .map(|&at| Objective::Deposit { id, at })
                .collect();
            let (d_idx, _) = nearest(level, &dist, &candidates)?;
            let deposit = candidates[d_idx];
            walker.follow(&dijkstra(level, walker.pos, deposit.at(), passable).ok()??);
            walker.push(Command::Deposit);
            carried -= 1;
            route.push(deposit);
        }
    }

    walker.follow(&dijkstra(level, walker.pos, level.end, passable).ok()??);
    route.push(Objective::End { at: level.end });

    let commands = walker.commands;
    let moves = commands.iter().filter(|c| c.is_move()).count();
    if moves > stats.battery_capacity as usize {
        return None;
    }
    Some(Plan {
        predicted_ticks: commands.len() as u64,
        commands,
        route,
    })
}

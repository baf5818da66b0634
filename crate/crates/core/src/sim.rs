//! Tick-based rules engine for driving a robot through a level.
//!
//! `step` is a pure transition: one command in, one new state and exactly
//! one outcome out. Every command advances the clock by one tick. Moves
//! that complete (including ones that end in a restart) cost one unit of
//! battery; blocked moves, waits, pickups and deposits are free.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::grid::{gate_open, Coord, FeatureKind, GridLevel, PickupId};
use crate::pcg::{fingerprint_hex, level_fingerprint, validate_level, DifficultyProfile};
use crate::robot::RobotStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    MoveUp,
    MoveDown,
    MoveLeft,
    MoveRight,
    PickUp,
    Deposit,
    Wait,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::MoveUp,
        Command::MoveDown,
        Command::MoveLeft,
        Command::MoveRight,
        Command::PickUp,
        Command::Deposit,
        Command::Wait,
    ];

    pub fn letter(self) -> char {
        match self {
            Command::MoveUp => 'U',
            Command::MoveDown => 'D',
            Command::MoveLeft => 'L',
            Command::MoveRight => 'R',
            Command::PickUp => 'P',
            Command::Deposit => 'X',
            Command::Wait => 'W',
        }
    }

    pub fn from_letter(ch: char) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.letter() == ch)
    }

    fn delta(self) -> Option<(i64, i64)> {
        match self {
            Command::MoveUp => Some((0, -1)),
            Command::MoveDown => Some((0, 1)),
            Command::MoveLeft => Some((-1, 0)),
            Command::MoveRight => Some((1, 0)),
            _ => None,
        }
    }

    pub fn is_move(self) -> bool {
        self.delta().is_some()
    }

    /// The move that takes `from` to the orthogonally adjacent `to`.
    pub fn toward(from: Coord, to: Coord) -> Option<Self> {
        match (
            i64::from(to.col) - i64::from(from.col),
            i64::from(to.row) - i64::from(from.row),
        ) {
            (0, -1) => Some(Command::MoveUp),
            (0, 1) => Some(Command::MoveDown),
            (-1, 0) => Some(Command::MoveLeft),
            (1, 0) => Some(Command::MoveRight),
            _ => None,
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("unknown command `{0}` (expected one of U D L R P X W)")]
pub struct UnknownCommand(pub String);

impl FromStr for Command {
    type Err = UnknownCommand;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        let mut chars = trimmed.chars();
        if let (Some(ch), None) = (chars.next(), chars.next()) {
            if let Some(cmd) = Command::from_letter(ch.to_ascii_uppercase()) {
                return Ok(cmd);
            }
        }
        match trimmed
            .to_ascii_lowercase()
            .replace(['_', '-'], "")
            .as_str()
        {
            "moveup" | "up" => Ok(Command::MoveUp),
            "movedown" | "down" => Ok(Command::MoveDown),
            "moveleft" | "left" => Ok(Command::MoveLeft),
            "moveright" | "right" => Ok(Command::MoveRight),
            "pickup" => Ok(Command::PickUp),
            "deposit" => Ok(Command::Deposit),
            "wait" => Ok(Command::Wait),
            _ => Err(UnknownCommand(s.to_string())),
        }
    }
}

impl Serialize for Command {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_char(self.letter())
    }
}

impl<'de> Deserialize<'de> for Command {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

pub fn commands_to_string(commands: &[Command]) -> String {
    commands.iter().map(|c| c.letter()).collect()
}

pub fn parse_commands(text: &str) -> Result<Vec<Command>, UnknownCommand> {
    text.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| {
            Command::from_letter(c.to_ascii_uppercase())
                .ok_or_else(|| UnknownCommand(c.to_string()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimStatus {
    Running,
    Completed,
    BatteryDead,
}

/// Serde adapter writing a `u64` fingerprint as 16 lowercase hex digits.
pub mod hex_u64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v:016x}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        let raw = String::deserialize(d)?;
        u64::from_str_radix(&raw, 16).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimState {
    #[serde(with = "hex_u64")]
    pub level_ref: u64,
    pub pos: Coord,
    pub carried: Vec<PickupId>,
    pub delivered: BTreeSet<PickupId>,
    pub battery: u32,
    pub tick: u64,
    pub nodes_visited: BTreeSet<Coord>,
    pub restarts: u32,
    pub status: SimStatus,
}

impl SimState {
    pub fn is_running(&self) -> bool {
        self.status == SimStatus::Running
    }

    /// Pickups lying on the floor: neither carried nor delivered.
    pub fn on_floor<'a>(
        &'a self,
        level: &'a GridLevel,
    ) -> impl Iterator<Item = &'a crate::grid::Pickup> + 'a {
        level
            .pickups
            .iter()
            .filter(move |p| !self.carried.contains(&p.id) && !self.delivered.contains(&p.id))
    }

    /// SHA-256 prefix of the state's JSON, for event digests.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let text = serde_json::to_string(self).expect("state serialises");
        let d = Sha256::digest(text.as_bytes());
        fingerprint_hex(u64::from_be_bytes(
            d[..8].try_into().expect("32-byte digest"),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockReason {
    Sandbag,
    GateClosed,
    TooHeavy,
    BoxFull,
    NothingToPickUp,
    NothingToDeposit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum TickEvent {
    Moved,
    Waited,
    Blocked { reason: BlockReason },
    Restarted,
    PickedUp { id: PickupId },
    Deposited { id: PickupId },
    Warning { text: String },
    Finished,
    Died,
}

impl TickEvent {
    pub fn is_terminal(&self) -> bool {
        matches!(self, TickEvent::Finished | TickEvent::Died)
    }
}

/// One line of the outcome log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickOutcome {
    pub tick: u64,
    pub command: Command,
    pub pos: Coord,
    pub event: TickEvent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelResult {
    pub completed: bool,
    pub ticks: u64,
    pub nodes_navigated: u64,
    pub restarts: u32,
    pub currency_earned: u64,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("session rejected: {0}")]
    Rejected(String),
    #[error("session already finished ({0:?})")]
    Finished(SimStatus),
    #[error("session is still running")]
    StillRunning,
}

pub fn new_session(level: &GridLevel, stats: &RobotStats) -> Result<SimState, SimError> {
    if stats.speed == 0 {
        return Err(SimError::Rejected("robot has no motor (speed 0)".into()));
    }
    if stats.battery_capacity == 0 {
        return Err(SimError::Rejected("robot has no battery capacity".into()));
    }
    let report = validate_level(level);
    if !report.solvable {
        return Err(SimError::Rejected(format!(
            "level is not solvable: {}",
            report.violations.join("; ")
        )));
    }
    Ok(SimState {
        level_ref: level_fingerprint(level),
        pos: level.start,
        carried: Vec::new(),
        delivered: BTreeSet::new(),
        battery: stats.battery_capacity,
        tick: 0,
        nodes_visited: BTreeSet::from([level.start]),
        restarts: 0,
        status: SimStatus::Running,
    })
}

/// Completion rule: pickups accepted by some deposit point must be
/// delivered; the rest must at least be carried.
pub fn objectives_met(state: &SimState, level: &GridLevel) -> bool {
    level.pickups.iter().all(|p| {
        let deliverable = level
            .deposit_points()
            .any(|(_, accepts)| accepts.contains(&p.id));
        if deliverable {
            state.delivered.contains(&p.id)
        } else {
            state.carried.contains(&p.id) || state.delivered.contains(&p.id)
        }
    })
}

fn outstanding_summary(state: &SimState, level: &GridLevel) -> String {
    let floor = state.on_floor(level).count();
    let undelivered = if level.has_deposits() {
        state.carried.len()
    } else {
        0
    };
    match (floor, undelivered) {
        (0, n) => format!("end reached with {n} pickup(s) still to deliver"),
        (f, 0) => format!("end reached with {f} pickup(s) still to collect"),
        (f, n) => format!("end reached with {f} pickup(s) to collect and {n} to deliver"),
    }
}

pub fn step(
    state: &SimState,
    command: Command,
    level: &GridLevel,
    stats: &RobotStats,
) -> Result<(SimState, TickOutcome), SimError> {
    if !state.is_running() {
        return Err(SimError::Finished(state.status));
    }
    let mut next = state.clone();
    let now = state.tick;
    next.tick += 1;

    let event = match command.delta() {
        Some((dc, dr)) => {
            let col = i64::from(state.pos.col) + dc;
            let row = i64::from(state.pos.row) + dr;
            let target = (col >= 0 && row >= 0).then(|| Coord::new(col as u32, row as u32));
            match target.filter(|t| level.is_legal(*t)) {
                None => {
                    next.battery = next.battery.saturating_sub(1);
                    next.pos = level.start;
                    next.carried.clear();
                    next.restarts += 1;
                    TickEvent::Restarted
                }
                Some(target) => match blocking_feature(level, target, stats, now) {
                    Some(reason) => TickEvent::Blocked { reason },
                    None => {
                        next.battery = next.battery.saturating_sub(1);
                        next.pos = target;
                        next.nodes_visited.insert(target);
                        if target == level.end {
                            if objectives_met(&next, level) {
                                next.status = SimStatus::Completed;
                                TickEvent::Finished
                            } else {
                                TickEvent::Warning {
                                    text: outstanding_summary(&next, level),
                                }
                            }
                        } else {
                            TickEvent::Moved
                        }
                    }
                },
            }
        }
        None => match command {
            Command::Wait => TickEvent::Waited,
            Command::PickUp => pick_up(&mut next, level, stats),
            Command::Deposit => deposit(&mut next, level),
            _ => unreachable!("moves handled above"),
        },
    };

    let event = if next.is_running() && next.battery == 0 {
        next.status = SimStatus::BatteryDead;
        TickEvent::Died
    } else {
        event
    };
    let outcome = TickOutcome {
        tick: next.tick,
        command,
        pos: next.pos,
        event,
    };
    Ok((next, outcome))
}

fn blocking_feature(
    level: &GridLevel,
    target: Coord,
    stats: &RobotStats,
    tick: u64,
) -> Option<BlockReason> {
    match &level.feature_at(target)?.kind {
        FeatureKind::SandbagTrack {
            min_traction,
            min_wheel_size,
        } if stats.wheel_traction < *min_traction || stats.wheel_size < *min_wheel_size => {
            Some(BlockReason::Sandbag)
        }
        FeatureKind::RotatingGate {
            period_ticks,
            phase_ticks,
        } if !gate_open(*period_ticks, *phase_ticks, tick) => Some(BlockReason::GateClosed),
        _ => None,
    }
}

fn pick_up(next: &mut SimState, level: &GridLevel, stats: &RobotStats) -> TickEvent {
    let Some(pickup) = next.on_floor(level).find(|p| p.at == next.pos).cloned() else {
        return TickEvent::Blocked {
            reason: BlockReason::NothingToPickUp,
        };
    };
    if pickup.weight > stats.grip_strength {
        return TickEvent::Blocked {
            reason: BlockReason::TooHeavy,
        };
    }
    if next.carried.len() >= stats.box_capacity as usize {
        return TickEvent::Blocked {
            reason: BlockReason::BoxFull,
        };
    }
    next.carried.push(pickup.id);
    TickEvent::PickedUp { id: pickup.id }
}

fn deposit(next: &mut SimState, level: &GridLevel) -> TickEvent {
    let accepted = level
        .deposit_points()
        .filter(|(at, _)| *at == next.pos)
        .flat_map(|(_, accepts)| accepts.iter().copied())
        .filter(|id| next.carried.contains(id))
        .min();
    match accepted {
        Some(id) => {
            next.carried.retain(|c| *c != id);
            next.delivered.insert(id);
            TickEvent::Deposited { id }
        }
        None => TickEvent::Blocked {
            reason: BlockReason::NothingToDeposit,
        },
    }
}

/// `max(0, base - tick_penalty * ticks - node_penalty * nodes)` on completion, else 0.
pub fn score(completed: bool, ticks: u64, nodes: u64, profile: &DifficultyProfile) -> u64 {
    if !completed {
        return 0;
    }
    let cost = profile
        .tick_penalty
        .saturating_mul(ticks)
        .saturating_add(profile.node_penalty.saturating_mul(nodes));
    profile.base_currency.saturating_sub(cost)
}

pub fn finalize(state: &SimState, profile: &DifficultyProfile) -> Result<LevelResult, SimError> {
    if state.is_running() {
        return Err(SimError::StillRunning);
    }
    let completed = state.status == SimStatus::Completed;
    let nodes = state.nodes_visited.len() as u64;
    Ok(LevelResult {
        completed,
        ticks: state.tick,
        nodes_navigated: nodes,
        restarts: state.restarts,
        currency_earned: score(completed, state.tick, nodes, profile),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplayRun {
    pub state: SimState,
    pub result: Option<LevelResult>,
    pub log: Vec<TickOutcome>,
}

/// Folds `step` over `commands` from a fresh session.
pub fn replay(
    level: &GridLevel,
    stats: &RobotStats,
    profile: &DifficultyProfile,
    commands: &[Command],
) -> Result<ReplayRun, SimError> {
    let mut state = new_session(level, stats)?;
    let mut log = Vec::with_capacity(commands.len());
    for &cmd in commands {
        let (next, outcome) = step(&state, cmd, level, stats)?;
        state = next;
        log.push(outcome);
    }
    let result = (!state.is_running())
        .then(|| finalize(&state, profile))
        .transpose()?;
    Ok(ReplayRun { state, result, log })
}

/// On-disk replay: `{level_fingerprint, stats, commands: ["U", ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayFile {
    #[serde(with = "hex_u64")]
    pub level_fingerprint: u64,
    pub stats: RobotStats,
    pub commands: Vec<Command>,
}

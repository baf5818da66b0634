//! Workshop model: component catalog, slotted builds, derived stats and
//! the currency wallet.
//!
//! All catalog numbers are synthetic game-balance data shipped in
//! `data/catalog.json`; nothing here hard-codes a component.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComponentKind {
    Chassis,
    Motor,
    Wheel,
    Gripper,
    BoxHolder,
    Battery,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 6] = [
        ComponentKind::Chassis,
        ComponentKind::Motor,
        ComponentKind::Wheel,
        ComponentKind::Gripper,
        ComponentKind::BoxHolder,
        ComponentKind::Battery,
    ];

    /// Stats a component of this kind may contribute besides its own mass.
    pub fn permitted_stats(self) -> &'static [Stat] {
        match self {
            ComponentKind::Chassis => &[],
            ComponentKind::Motor => &[Stat::Speed],
            ComponentKind::Wheel => &[Stat::WheelTraction, Stat::WheelSize],
            ComponentKind::Gripper => &[Stat::GripStrength],
            ComponentKind::BoxHolder => &[Stat::BoxCapacity],
            ComponentKind::Battery => &[Stat::BatteryCapacity],
        }
    }

    /// The stat an upgrade of this kind must never lower.
    pub fn primary_stat(self) -> Option<Stat> {
        match self {
            ComponentKind::Chassis => None,
            ComponentKind::Motor => Some(Stat::Speed),
            ComponentKind::Wheel => Some(Stat::WheelTraction),
            ComponentKind::Gripper => Some(Stat::GripStrength),
            ComponentKind::BoxHolder => Some(Stat::BoxCapacity),
            ComponentKind::Battery => Some(Stat::BatteryCapacity),
        }
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stat {
    Mass,
    Speed,
    WheelTraction,
    WheelSize,
    GripStrength,
    BoxCapacity,
    BatteryCapacity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub id: String,
    pub kind: ComponentKind,
    pub tier: u8,
    pub mass: u32,
    #[serde(default)]
    pub contributions: BTreeMap<Stat, u32>,
    pub cost: u64,
}

impl ComponentSpec {
    pub fn contribution(&self, stat: Stat) -> u32 {
        self.contributions.get(&stat).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotStats {
    pub mass: u32,
    pub speed: u32,
    pub wheel_traction: u32,
    pub wheel_size: u32,
    pub grip_strength: u32,
    pub box_capacity: u32,
    pub battery_capacity: u32,
}

impl RobotStats {
    pub fn get(&self, stat: Stat) -> u32 {
        match stat {
            Stat::Mass => self.mass,
            Stat::Speed => self.speed,
            Stat::WheelTraction => self.wheel_traction,
            Stat::WheelSize => self.wheel_size,
            Stat::GripStrength => self.grip_strength,
            Stat::BoxCapacity => self.box_capacity,
            Stat::BatteryCapacity => self.battery_capacity,
        }
    }

    fn slot_mut(&mut self, stat: Stat) -> &mut u32 {
        match stat {
            Stat::Mass => &mut self.mass,
            Stat::Speed => &mut self.speed,
            Stat::WheelTraction => &mut self.wheel_traction,
            Stat::WheelSize => &mut self.wheel_size,
            Stat::GripStrength => &mut self.grip_strength,
            Stat::BoxCapacity => &mut self.box_capacity,
            Stat::BatteryCapacity => &mut self.battery_capacity,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RobotError {
    #[error("slot {0} is already occupied")]
    SlotOccupied(ComponentKind),
    #[error("slot {0} is empty")]
    NotPresent(ComponentKind),
    #[error("insufficient funds: balance {balance}, cost {cost}")]
    InsufficientFunds { balance: u64, cost: u64 },
    #[error("component `{0}` is already owned")]
    AlreadyOwned(String),
    #[error("component `{0}` is not owned")]
    NotOwned(String),
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("component `{id}` is a {actual}, not a {slot}")]
    KindMismatch {
        id: String,
        slot: ComponentKind,
        actual: ComponentKind,
    },
    #[error("invalid catalog: {0}")]
    Catalog(String),
}

/// Slotted assembly; at most one component per kind.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RobotBuild {
    slots: BTreeMap<ComponentKind, ComponentSpec>,
}

impl RobotBuild {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn slot(&self, kind: ComponentKind) -> Option<&ComponentSpec> {
        self.slots.get(&kind)
    }

    pub fn components(&self) -> impl Iterator<Item = &ComponentSpec> {
        self.slots.values()
    }

    pub fn filled_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn to_file(&self) -> BuildFile {
        BuildFile {
            slots: self
                .slots
                .iter()
                .map(|(k, spec)| (*k, spec.id.clone()))
                .collect(),
        }
    }
}

/// Saved form of a build: slot kind to component id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildFile {
    #[serde(default)]
    pub slots: BTreeMap<ComponentKind, String>,
}

pub fn add_component(build: &RobotBuild, spec: &ComponentSpec) -> Result<RobotBuild, RobotError> {
    if build.slots.contains_key(&spec.kind) {
        return Err(RobotError::SlotOccupied(spec.kind));
    }
    let mut next = build.clone();
    next.slots.insert(spec.kind, spec.clone());
    Ok(next)
}

pub fn remove_component(build: &RobotBuild, kind: ComponentKind) -> Result<RobotBuild, RobotError> {
    if !build.slots.contains_key(&kind) {
        return Err(RobotError::NotPresent(kind));
    }
    let mut next = build.clone();
    next.slots.remove(&kind);
    Ok(next)
}

/// Swap whatever occupies `spec.kind` (if anything) for `spec`.
pub fn replace_component(build: &RobotBuild, spec: &ComponentSpec) -> RobotBuild {
    let mut next = build.clone();
    next.slots.insert(spec.kind, spec.clone());
    next
}

pub fn build_complete(build: &RobotBuild) -> bool {
    ComponentKind::ALL
        .iter()
        .all(|k| build.slots.contains_key(k))
}

/// Sums masses and contributions, then applies the motor mass penalty:
/// `speed = max(1, raw_speed - mass / divisor)` with a motor fitted, else 0.
pub fn compute_stats(build: &RobotBuild, catalog: &Catalog) -> RobotStats {
    let mut stats = RobotStats::default();
    for spec in build.components() {
        stats.mass += spec.mass;
        for (&stat, &points) in &spec.contributions {
            *stats.slot_mut(stat) += points;
        }
    }
    stats.speed = if build.slot(ComponentKind::Motor).is_some() {
        let penalty = stats
            .mass
            .checked_div(catalog.mass_penalty_divisor)
            .unwrap_or(0);
        stats.speed.saturating_sub(penalty).max(1)
    } else {
        0
    };
    stats
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wallet {
    pub balance: u64,
}

impl Wallet {
    pub fn new(balance: u64) -> Self {
        Self { balance }
    }

    pub fn credit(self, amount: u64) -> Self {
        Self {
            balance: self.balance.saturating_add(amount),
        }
    }
}

/// Component ids the player owns.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inventory {
    pub owned: BTreeSet<String>,
}

impl Inventory {
    pub fn owns(&self, id: &str) -> bool {
        self.owned.contains(id)
    }
}

pub fn purchase(
    wallet: Wallet,
    spec: &ComponentSpec,
    inventory: &Inventory,
) -> Result<(Wallet, Inventory), RobotError> {
    if inventory.owns(&spec.id) {
        return Err(RobotError::AlreadyOwned(spec.id.clone()));
    }
    let balance = wallet
        .balance
        .checked_sub(spec.cost)
        .ok_or(RobotError::InsufficientFunds {
            balance: wallet.balance,
            cost: spec.cost,
        })?;
    let mut owned = inventory.clone();
    owned.owned.insert(spec.id.clone());
    Ok((Wallet { balance }, owned))
}

pub const DEFAULT_MASS_PENALTY_DIVISOR: u32 = 10;

const SHIPPED_CATALOG: &str = include_str!("../data/catalog.json");

/// Validated component catalog.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Catalog {
    pub mass_penalty_divisor: u32,
    pub components: Vec<ComponentSpec>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CatalogDoc {
    List(Vec<ComponentSpec>),
    Full {
        #[serde(default = "default_divisor")]
        mass_penalty_divisor: u32,
        components: Vec<ComponentSpec>,
    },
}

fn default_divisor() -> u32 {
    DEFAULT_MASS_PENALTY_DIVISOR
}

impl Catalog {
    pub fn shipped() -> Self {
        Self::from_json(SHIPPED_CATALOG).expect("shipped catalog is valid")
    }

    /// Accepts either a bare array of components or
    /// `{"mass_penalty_divisor": n, "components": [...]}`.
    pub fn from_json(text: &str) -> Result<Self, RobotError> {
        let doc: CatalogDoc =
            serde_json::from_str(text).map_err(|e| RobotError::Catalog(e.to_string()))?;
        let (mass_penalty_divisor, components) = match doc {
            CatalogDoc::List(components) => (DEFAULT_MASS_PENALTY_DIVISOR, components),
            CatalogDoc::Full {
                mass_penalty_divisor,
                components,
            } => (mass_penalty_divisor, components),
        };
        Self::new(mass_penalty_divisor, components)
    }

    pub fn new(
        mass_penalty_divisor: u32,
        components: Vec<ComponentSpec>,
    ) -> Result<Self, RobotError> {
        let catalog = Self {
            mass_penalty_divisor,
            components,
        };
        catalog.check()?;
        Ok(catalog)
    }

    fn check(&self) -> Result<(), RobotError> {
        let bad = |msg: String| Err(RobotError::Catalog(msg));
        let mut ids = BTreeSet::new();
        for spec in &self.components {
            if !ids.insert(spec.id.as_str()) {
                return bad(format!("duplicate component id `{}`", spec.id));
            }
            if !(1..=3).contains(&spec.tier) {
                return bad(format!(
                    "`{}` has tier {}, expected 1..=3",
                    spec.id, spec.tier
                ));
            }
            let allowed = spec.kind.permitted_stats();
            if let Some(stat) = spec.contributions.keys().find(|s| !allowed.contains(s)) {
                return bad(format!(
                    "`{}` ({}) may not contribute {stat:?}",
                    spec.id, spec.kind
                ));
            }
        }
        for kind in ComponentKind::ALL {
            let mut tiers: Vec<&ComponentSpec> =
                self.components.iter().filter(|c| c.kind == kind).collect();
            tiers.sort_by_key(|c| c.tier);
            if let Some(stat) = kind.primary_stat() {
                for pair in tiers.windows(2) {
                    if pair[1].tier > pair[0].tier
                        && pair[1].contribution(stat) < pair[0].contribution(stat)
                    {
                        return bad(format!(
                            "`{}` lowers {stat:?} relative to `{}`",
                            pair[1].id, pair[0].id
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<&ComponentSpec, RobotError> {
        self.components
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| RobotError::UnknownComponent(id.to_string()))
    }

    pub fn find(&self, kind: ComponentKind, tier: u8) -> Option<&ComponentSpec> {
        self.components
            .iter()
            .find(|c| c.kind == kind && c.tier == tier)
    }

    /// Every tier-1 component, owned at game start.
    pub fn starter_inventory(&self) -> Inventory {
        Inventory {
            owned: self
                .components
                .iter()
                .filter(|c| c.tier == 1)
                .map(|c| c.id.clone())
                .collect(),
        }
    }

    /// A build with every slot at `tier`, skipping kinds that lack that tier.
    pub fn uniform_build(&self, tier: u8) -> RobotBuild {
        ComponentKind::ALL
            .iter()
            .filter_map(|&k| self.find(k, tier))
            .fold(RobotBuild::new(), |b, spec| replace_component(&b, spec))
    }

    pub fn resolve_build(&self, file: &BuildFile) -> Result<RobotBuild, RobotError> {
        let mut build = RobotBuild::new();
        for (&slot, id) in &file.slots {
            let spec = self.get(id)?;
            if spec.kind != slot {
                return Err(RobotError::KindMismatch {
                    id: id.clone(),
                    slot,
                    actual: spec.kind,
                });
            }
            build = add_component(&build, spec)?;
        }
        Ok(build)
    }
}

mod common;

use common::{build_ids, stats_map, stats_oracle};
use geobots_core::rng::GameRng;
use geobots_core::robot::{
    add_component, build_complete, compute_stats, purchase, remove_component, replace_component,
    Catalog, ComponentKind, Inventory, RobotBuild, RobotError, Wallet,
};
use proptest::prelude::*;
use serde_json::Value;

const CATALOG_JSON: &str = include_str!("../data/catalog.json");

fn catalog_doc() -> Value {
    serde_json::from_str(CATALOG_JSON).unwrap()
}

/// Build from a per-kind tier list, 0 meaning an empty slot.
fn build_of(catalog: &Catalog, tiers: [u8; 6]) -> RobotBuild {
    ComponentKind::ALL
        .iter()
        .zip(tiers)
        .filter(|(_, t)| *t > 0)
        .fold(RobotBuild::new(), |b, (k, t)| {
            add_component(&b, catalog.find(*k, t).unwrap()).unwrap()
        })
}

fn tiers_of(index: u32) -> [u8; 6] {
    std::array::from_fn(|i| ((index >> (2 * i)) & 3) as u8)
}

/// Raw stat total for one kind's primary stat, read from the document.
fn raw_primary(doc: &Value, ids: &[String], stat: &str) -> i64 {
    let list = doc.as_array().unwrap();
    ids.iter()
        .map(|id| list.iter().find(|e| e["id"] == id.as_str()).unwrap())
        .map(|e| e["contributions"][stat].as_i64().unwrap_or(0))
        .sum()
}

#[test]
fn every_slot_combination_matches_the_oracle() {
    let catalog = Catalog::shipped();
    let doc = catalog_doc();
    for index in 0..4u32.pow(6) {
        let build = build_of(&catalog, tiers_of(index));
        let ids = build_ids(&build);
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        assert_eq!(
            stats_map(&compute_stats(&build, &catalog)),
            stats_oracle(&doc, &refs),
            "{ids:?}"
        );
    }
}

#[test]
fn random_builds_match_the_oracle() {
    let catalog = Catalog::shipped();
    let doc = catalog_doc();
    let mut rng = GameRng::new(99, 0);
    for _ in 0..10_000 {
        let tiers: [u8; 6] = std::array::from_fn(|_| rng.below(4) as u8);
        let build = build_of(&catalog, tiers);
        let ids = build_ids(&build);
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        assert_eq!(
            stats_map(&compute_stats(&build, &catalog)),
            stats_oracle(&doc, &refs)
        );
    }
}

#[test]
fn tier_one_robot_has_the_documented_stats() {
    let catalog = Catalog::shipped();
    let s = compute_stats(&catalog.uniform_build(1), &catalog);
    assert_eq!(
        (
            s.mass,
            s.speed,
            s.wheel_traction,
            s.wheel_size,
            s.grip_strength,
            s.box_capacity,
            s.battery_capacity
        ),
        (26, 1, 2, 2, 2, 2, 120)
    );
    assert!(build_complete(&catalog.uniform_build(1)));
    assert_eq!(catalog.components.len(), 18);
}

#[test]
fn upgrades_never_lower_the_primary_stat() {
    let catalog = Catalog::shipped();
    let doc = catalog_doc();
    let stat_names = [
        (ComponentKind::Motor, "speed"),
        (ComponentKind::Wheel, "wheel_traction"),
        (ComponentKind::Gripper, "grip_strength"),
        (ComponentKind::BoxHolder, "box_capacity"),
        (ComponentKind::Battery, "battery_capacity"),
    ];
    for index in 0..4u32.pow(6) {
        let build = build_of(&catalog, tiers_of(index));
        for (kind, stat) in stat_names {
            for low in 1..=3u8 {
                for high in low..=3u8 {
                    let a = replace_component(&build, catalog.find(kind, low).unwrap());
                    let b = replace_component(&build, catalog.find(kind, high).unwrap());
                    let (ra, rb) = (
                        raw_primary(&doc, &build_ids(&a), stat),
                        raw_primary(&doc, &build_ids(&b), stat),
                    );
                    assert!(rb >= ra, "{kind} t{low} -> t{high} lowers {stat}");
                    if kind != ComponentKind::Motor {
                        let (sa, sb) = (
                            stats_map(&compute_stats(&a, &catalog)),
                            stats_map(&compute_stats(&b, &catalog)),
                        );
                        assert!(sb[stat] >= sa[stat]);
                    }
                }
            }
        }
    }
}

#[test]
fn tier_one_is_free_and_owned_from_the_start() {
    let catalog = Catalog::shipped();
    let inv = catalog.starter_inventory();
    for spec in &catalog.components {
        assert_eq!(spec.tier == 1, spec.cost == 0, "{}", spec.id);
        assert_eq!(inv.owns(&spec.id), spec.tier == 1);
    }
}

#[test]
fn random_purchases_keep_the_ledger_consistent() {
    let catalog = Catalog::shipped();
    for seed in 0..1000 {
        let mut rng = GameRng::new(seed, 1);
        let mut wallet = Wallet::new(rng.below(2000));
        let mut inv = catalog.starter_inventory();
        for _ in 0..20 {
            if rng.chance(0.3) {
                wallet = wallet.credit(rng.below(500));
            }
            let spec = rng.pick(&catalog.components).unwrap();
            match purchase(wallet, spec, &inv) {
                Ok((w, i)) => {
                    assert_eq!(w.balance + spec.cost, wallet.balance);
                    assert!(!inv.owns(&spec.id) && i.owns(&spec.id));
                    assert_eq!(i.owned.len(), inv.owned.len() + 1);
                    wallet = w;
                    inv = i;
                }
                Err(RobotError::AlreadyOwned(id)) => assert!(inv.owns(&id)),
                Err(RobotError::InsufficientFunds { balance, cost }) => {
                    assert!(cost > balance);
                    assert_eq!(balance, wallet.balance);
                }
                Err(e) => panic!("unexpected {e}"),
            }
        }
    }
}

#[test]
fn purchase_rejections_leave_state_untouched() {
    let catalog = Catalog::shipped();
    let spec = catalog.get("motor-t3").unwrap();
    let inv = Inventory::default();
    assert!(matches!(
        purchase(Wallet::new(spec.cost - 1), spec, &inv),
        Err(RobotError::InsufficientFunds { .. })
    ));
    let (w, i) = purchase(Wallet::new(spec.cost), spec, &inv).unwrap();
    assert_eq!(w.balance, 0);
    assert!(matches!(
        purchase(Wallet::new(10_000), spec, &i),
        Err(RobotError::AlreadyOwned(_))
    ));
    assert!(matches!(
        catalog.get("warp-drive"),
        Err(RobotError::UnknownComponent(_))
    ));
}

fn tiers() -> impl Strategy<Value = [u8; 6]> {
    prop::array::uniform6(0u8..=3)
}

proptest! {
    #[test]
    fn add_then_remove_is_identity(tiers in tiers(), kind in 0usize..6, tier in 1u8..=3) {
        let catalog = Catalog::shipped();
        let build = build_of(&catalog, tiers);
        let kind = ComponentKind::ALL[kind];
        let spec = catalog.find(kind, tier).unwrap();
        match build.slot(kind) {
            None => {
                let added = add_component(&build, spec).unwrap();
                prop_assert_eq!(remove_component(&added, kind).unwrap(), build);
            }
            Some(existing) => {
                prop_assert_eq!(add_component(&build, spec), Err(RobotError::SlotOccupied(kind)));
                let removed = remove_component(&build, kind).unwrap();
                prop_assert_eq!(add_component(&removed, existing).unwrap(), build.clone());
                prop_assert_eq!(remove_component(&removed, kind), Err(RobotError::NotPresent(kind)));
            }
        }
    }

    #[test]
    fn build_files_round_trip(tiers in tiers()) {
        let catalog = Catalog::shipped();
        let build = build_of(&catalog, tiers);
        let text = serde_json::to_string(&build.to_file()).unwrap();
        let back = catalog.resolve_build(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(back, build);
    }
}

//! Independent oracles shared by the integration suites. None of these call
//! the engine's own search, stat or grading code.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use geobots_core::grid::{CellKind, Coord, FeatureKind, GridLevel};
use geobots_core::repair::{ElectronicsAction, RepairProblem, RepairSubmission};
use geobots_core::robot::{ComponentKind, RobotBuild, RobotStats};
use geobots_core::sim::{Command, SimState, SimStatus, TickEvent, TickOutcome};

/// Textbook BFS over a plain boolean grid, neighbours in any order.
pub fn bfs_len(
    open: &[bool],
    width: usize,
    height: usize,
    from: (usize, usize),
    to: (usize, usize),
) -> Option<u32> {
    if !open[from.1 * width + from.0] {
        return None;
    }
    let mut dist = vec![u32::MAX; open.len()];
    let mut queue = VecDeque::from([from]);
    dist[from.1 * width + from.0] = 0;
    while let Some((c, r)) = queue.pop_front() {
        let d = dist[r * width + c];
        if (c, r) == to {
            return Some(d);
        }
        let mut next = Vec::with_capacity(4);
        if c > 0 {
            next.push((c - 1, r));
        }
        if r > 0 {
            next.push((c, r - 1));
        }
        if c + 1 < width {
            next.push((c + 1, r));
        }
        if r + 1 < height {
            next.push((c, r + 1));
        }
        for (nc, nr) in next {
            let i = nr * width + nc;
            if open[i] && dist[i] == u32::MAX {
                dist[i] = d + 1;
                queue.push_back((nc, nr));
            }
        }
    }
    None
}

/// Flood fill from `from` over open cells.
pub fn flood(
    open: &[bool],
    width: usize,
    height: usize,
    from: (usize, usize),
) -> BTreeSet<(usize, usize)> {
    let mut seen = BTreeSet::new();
    if !open[from.1 * width + from.0] {
        return seen;
    }
    let mut stack = vec![from];
    while let Some((c, r)) = stack.pop() {
        if !seen.insert((c, r)) {
            continue;
        }
        let cand = [
            (c.wrapping_sub(1), r),
            (c + 1, r),
            (c, r.wrapping_sub(1)),
            (c, r + 1),
        ];
        for (nc, nr) in cand {
            if nc < width && nr < height && open[nr * width + nc] {
                stack.push((nc, nr));
            }
        }
    }
    seen
}

pub fn legal_mask(level: &GridLevel) -> Vec<bool> {
    level.cells.iter().map(|&k| k == CellKind::Legal).collect()
}

pub fn xy(c: Coord) -> (usize, usize) {
    (c.col as usize, c.row as usize)
}

/// Sums stats straight from the catalog document, without the engine's types.
pub fn stats_oracle(catalog_json: &serde_json::Value, ids: &[&str]) -> BTreeMap<String, i64> {
    let list = catalog_json.as_array().expect("catalog is an array");
    let mut sums: BTreeMap<String, i64> = [
        "mass",
        "speed",
        "wheel_traction",
        "wheel_size",
        "grip_strength",
        "box_capacity",
        "battery_capacity",
    ]
    .iter()
    .map(|s| (s.to_string(), 0))
    .collect();
    let mut has_motor = false;
    for id in ids {
        let entry = list.iter().find(|e| e["id"] == *id).expect("id in catalog");
        has_motor |= entry["kind"] == "motor";
        *sums.get_mut("mass").unwrap() += entry["mass"].as_i64().unwrap();
        for (stat, points) in entry["contributions"].as_object().unwrap() {
            *sums.get_mut(stat.as_str()).expect("known stat") += points.as_i64().unwrap();
        }
    }
    let speed = if has_motor {
        (sums["speed"] - sums["mass"] / 10).max(1)
    } else {
        0
    };
    sums.insert("speed".into(), speed);
    sums
}

pub fn stats_map(stats: &RobotStats) -> BTreeMap<String, i64> {
    let v = serde_json::to_value(stats).unwrap();
    v.as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| (k.clone(), v.as_i64().unwrap()))
        .collect()
}

pub fn build_ids(build: &RobotBuild) -> Vec<String> {
    ComponentKind::ALL
        .iter()
        .filter_map(|k| build.slot(*k))
        .map(|s| s.id.clone())
        .collect()
}

/// Checks one transition against the rules, written out independently.
/// Returns a description of the first broken invariant.
pub fn check_transition(
    level: &GridLevel,
    stats: &RobotStats,
    before: &SimState,
    cmd: Command,
    after: &SimState,
    outcome: &TickOutcome,
) -> Result<(), String> {
    let fail = |what: &str| {
        Err(format!(
            "{what}: {cmd:?} from {before:?} gave {outcome:?} / {after:?}"
        ))
    };
    if after.tick != before.tick + 1 || outcome.tick != after.tick {
        return fail("tick must advance by one");
    }
    let target = match cmd {
        Command::MoveUp => Some((0, -1)),
        Command::MoveDown => Some((0, 1)),
        Command::MoveLeft => Some((-1, 0)),
        Command::MoveRight => Some((1, 0)),
        _ => None,
    }
    .map(|(dc, dr)| {
        (
            i64::from(before.pos.col) + dc,
            i64::from(before.pos.row) + dr,
        )
    });
    // Expected (position, battery spent, restarted) for a move.
    let expected = target.map(|(tc, tr)| {
        let off = tc < 0 || tr < 0 || tc >= i64::from(level.width) || tr >= i64::from(level.height);
        if off || !level.is_legal(Coord::new(tc as u32, tr as u32)) {
            return (level.start, 1, true);
        }
        let t = Coord::new(tc as u32, tr as u32);
        let blocked = match level.feature_at(t).map(|f| &f.kind) {
            Some(FeatureKind::SandbagTrack {
                min_traction,
                min_wheel_size,
            }) => stats.wheel_traction < *min_traction || stats.wheel_size < *min_wheel_size,
            Some(FeatureKind::RotatingGate {
                period_ticks,
                phase_ticks,
            }) => ((before.tick + u64::from(*phase_ticks)) / u64::from(*period_ticks)) % 2 == 1,
            _ => false,
        };
        if blocked {
            (before.pos, 0, false)
        } else {
            (t, 1, false)
        }
    });
    let spent = before.battery - after.battery;
    let (pos, cost, restart) = expected.unwrap_or((before.pos, 0, false));
    if after.pos != pos {
        return fail("position");
    }
    if spent != cost {
        return fail("battery conservation");
    }
    if restart != (after.restarts == before.restarts + 1) || after.restarts < before.restarts {
        return fail("restart count");
    }
    if restart {
        if !after.carried.is_empty() || after.delivered != before.delivered {
            return fail("restart drops carried pickups and keeps deliveries");
        }
        // Dropped pickups are back on the floor at their original cells.
        let floor: BTreeSet<_> = after.on_floor(level).map(|p| (p.id, p.at)).collect();
        for id in &before.carried {
            let p = level.pickup(*id).unwrap();
            if !floor.contains(&(p.id, p.at)) {
                return fail("dropped pickup returns home");
            }
        }
    }
    let dead = after.battery == 0 && after.status != SimStatus::Completed;
    if dead != (after.status == SimStatus::BatteryDead) {
        return fail("battery death");
    }
    if after.status == SimStatus::Running && !level.is_legal(after.pos) {
        return fail("running robot must stand on a legal cell");
    }
    if !after.nodes_visited.contains(&level.start) || !after.nodes_visited.contains(&after.pos) {
        return fail("start and current cell are visited");
    }
    if outcome.pos != after.pos || outcome.command != cmd {
        return fail("outcome echoes command and position");
    }
    match (&outcome.event, cmd) {
        (TickEvent::PickedUp { id }, Command::PickUp) => {
            let p = level.pickup(*id).expect("picked-up id exists");
            if p.at != before.pos || after.carried.len() != before.carried.len() + 1 {
                return fail("pickup comes from the current cell");
            }
        }
        (TickEvent::Deposited { id }, Command::Deposit) => {
            if !before.carried.contains(id)
                || after.carried.contains(id)
                || !after.delivered.contains(id)
            {
                return fail("deposit moves a carried pickup to delivered");
            }
        }
        (TickEvent::PickedUp { .. } | TickEvent::Deposited { .. }, _) => {
            return fail("event does not match command")
        }
        _ => {
            if after.carried.len() > before.carried.len()
                || after.delivered.len() != before.delivered.len()
            {
                return fail("inventory changes only through pickup and deposit");
            }
        }
    }
    if after.carried.len() > stats.box_capacity as usize {
        return fail("box capacity exceeded");
    }
    for id in &after.carried {
        let p = level.pickup(*id).expect("carried pickup exists");
        if p.weight > stats.grip_strength {
            return fail("carrying something too heavy");
        }
    }
    if !before.delivered.is_subset(&after.delivered) {
        return fail("deliveries are permanent");
    }
    if after.carried.iter().any(|id| after.delivered.contains(id)) {
        return fail("a pickup is never both carried and delivered");
    }
    if after.status == SimStatus::Completed && after.pos != level.end {
        return fail("completion happens at the end cell");
    }
    Ok(())
}

/// Every single-element change of the answer key: drop one action, swap the
/// part of a placement, move one wire endpoint, or change one code choice.
/// Returns (label, submission, which half is broken).
pub fn key_mutations(problem: &RepairProblem) -> Vec<(String, RepairSubmission, Half)> {
    let key = problem.answer_submission();
    let mut out = Vec::new();
    let part_ids: Vec<&str> = problem
        .board
        .bin
        .iter()
        .chain(problem.board.slots.iter().filter_map(|s| s.part.as_ref()))
        .map(|p| p.id.as_str())
        .collect();
    for (i, action) in key.electronics_actions.iter().enumerate() {
        let mut omitted = key.clone();
        omitted.electronics_actions.remove(i);
        out.push((format!("omit action {i}"), omitted, Half::Electronics));
        match action {
            ElectronicsAction::PlacePart { slot, part } => {
                for other in part_ids.iter().filter(|p| **p != part) {
                    let mut m = key.clone();
                    m.electronics_actions[i] = ElectronicsAction::PlacePart {
                        slot: slot.clone(),
                        part: other.to_string(),
                    };
                    out.push((format!("action {i} places {other}"), m, Half::Electronics));
                }
            }
            ElectronicsAction::ConnectWire { from, to }
            | ElectronicsAction::DisconnectWire { from, to } => {
                let connect = matches!(action, ElectronicsAction::ConnectWire { .. });
                for t in &problem.board.terminals {
                    for (a, b) in [(from, t), (t, to)] {
                        if (a == from && b == to) || t == from || t == to {
                            continue;
                        }
                        let mut m = key.clone();
                        m.electronics_actions[i] = if connect {
                            ElectronicsAction::ConnectWire {
                                from: a.clone(),
                                to: b.clone(),
                            }
                        } else {
                            ElectronicsAction::DisconnectWire {
                                from: a.clone(),
                                to: b.clone(),
                            }
                        };
                        out.push((
                            format!("action {i} rewired to {a}-{b}"),
                            m,
                            Half::Electronics,
                        ));
                    }
                }
            }
            ElectronicsAction::RemovePart { .. } => {}
        }
    }
    let mut extra = key.clone();
    let target: BTreeSet<_> = problem.board.correct_wires.iter().collect();
    let terms = &problem.board.terminals;
    if let Some((a, b)) = terms
        .iter()
        .flat_map(|a| terms.iter().map(move |b| (a, b)))
        .find(|(a, b)| a < b && !target.iter().any(|w| (&w.from, &w.to) == (*a, *b)))
    {
        extra
            .electronics_actions
            .push(ElectronicsAction::ConnectWire {
                from: a.clone(),
                to: b.clone(),
            });
        out.push((format!("extra wire {a}-{b}"), extra, Half::Electronics));
    }
    for (blank, b) in problem.code.blanks.iter().enumerate() {
        for option in 0..b.options.len() {
            if option != key.code_selections[blank] {
                let mut m = key.clone();
                m.code_selections[blank] = option;
                out.push((format!("blank {blank} -> option {option}"), m, Half::Code));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Half {
    Electronics,
    Code,
}

/// Compares the engine's Dijkstra and reachable set with the BFS and flood
/// fill oracles over Legal cells for one (from, to) pair.
pub fn dijkstra_agrees(level: &GridLevel, from: Coord, to: Coord) -> Result<(), String> {
    use geobots_core::grid::{dijkstra, reachable_set};
    let open = legal_mask(level);
    let (w, h) = (level.width as usize, level.height as usize);
    let legal = |c: Coord| level.is_legal(c);
    if !level.is_legal(from) {
        return match dijkstra(level, from, to, legal) {
            Err(_) => Ok(()),
            Ok(p) => Err(format!("impassable origin accepted: {p:?}")),
        };
    }
    let path = dijkstra(level, from, to, legal).map_err(|e| e.to_string())?;
    let oracle = bfs_len(&open, w, h, xy(from), xy(to));
    let got = path.as_ref().map(|p| p.len() as u32 - 1);
    if got != oracle {
        return Err(format!("{from}->{to}: dijkstra {got:?}, bfs {oracle:?}"));
    }
    if let Some(p) = &path {
        if p.first() != Some(&from) || p.last() != Some(&to) {
            return Err("path must include both endpoints".into());
        }
        if p.iter().any(|c| !level.is_legal(*c)) || p.windows(2).any(|w| w[0].manhattan(w[1]) != 1)
        {
            return Err(format!("path is not a chain of legal neighbours: {p:?}"));
        }
    }
    let reach: BTreeSet<(usize, usize)> = reachable_set(level, from, legal)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(xy)
        .collect();
    if reach != flood(&open, w, h, xy(from)) {
        return Err(format!("reachable set from {from} differs from flood fill"));
    }
    if reach.contains(&xy(to)) != path.is_some() {
        return Err("reachability and path existence disagree".into());
    }
    Ok(())
}

/// A `width`×`height` level whose cells are Legal where `open` is true.
pub fn level_from_mask(
    width: u32,
    height: u32,
    open: &[bool],
    start: Coord,
    end: Coord,
) -> GridLevel {
    let mut level = GridLevel::filled(width, height, CellKind::Legal, start, end);
    for (i, &o) in open.iter().enumerate() {
        if !o {
            let c = level.coord_of(i);
            level.set_cell(c, CellKind::Illegal);
        }
    }
    level
}

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use super::{Coord, GridError, GridLevel};

/// Ordered cells from origin to target, both included.
pub type Path = Vec<Coord>;

const UP: (i64, i64) = (0, -1);
const RIGHT: (i64, i64) = (1, 0);
const DOWN: (i64, i64) = (0, 1);
const LEFT: (i64, i64) = (-1, 0);

/// Tie-break order for every search: up, right, down, left.
const DIRECTIONS: [(i64, i64); 4] = [UP, RIGHT, DOWN, LEFT];

/// In-bounds orthogonal neighbours of `at`, in up, right, down, left order.
pub fn neighbors(level: &GridLevel, at: Coord) -> Result<Vec<Coord>, GridError> {
    level.check_bounds(at)?;
    Ok(neighbors_unchecked(level, at).collect())
}

pub(crate) fn neighbors_unchecked(
    level: &GridLevel,
    at: Coord,
) -> impl Iterator<Item = Coord> + '_ {
    DIRECTIONS.iter().filter_map(move |&(dc, dr)| {
        let col = i64::from(at.col) + dc;
        let row = i64::from(at.row) + dr;
        (col >= 0 && row >= 0 && col < i64::from(level.width) && row < i64::from(level.height))
            .then(|| Coord::new(col as u32, row as u32))
    })
}

struct SearchTree {
    dist: Vec<u32>,
    prev: Vec<usize>,
}

const UNSEEN: u32 = u32::MAX;
const NO_PREV: usize = usize::MAX;

/// Dijkstra over passable cells with unit edge weights. Equal-distance
/// entries pop in insertion order, so expansion follows the fixed neighbour
/// order and the resulting tree is replay-stable.
fn search<P>(level: &GridLevel, from: Coord, passable: &P, target: Option<usize>) -> SearchTree
where
    P: Fn(Coord) -> bool + ?Sized,
{
    let n = level.area();
    let mut dist = vec![UNSEEN; n];
    let mut prev = vec![NO_PREV; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut seq: u64 = 0;

    let origin = level.index_of(from);
    dist[origin] = 0;
    heap.push(Reverse((0u32, seq, origin)));

    while let Some(Reverse((d, _, idx))) = heap.pop() {
        if settled[idx] {
            continue;
        }
        settled[idx] = true;
        if Some(idx) == target {
            break;
        }
        let here = level.coord_of(idx);
        for next in neighbors_unchecked(level, here) {
            let j = level.index_of(next);
            if settled[j] || !passable(next) {
                continue;
            }
            let nd = d + 1;
            if nd < dist[j] {
                dist[j] = nd;
                prev[j] = idx;
                seq += 1;
                heap.push(Reverse((nd, seq, j)));
            }
        }
    }
    SearchTree { dist, prev }
}

fn check_origin<P>(level: &GridLevel, from: Coord, passable: &P) -> Result<(), GridError>
where
    P: Fn(Coord) -> bool + ?Sized,
{
    level.check_bounds(from)?;
    if !passable(from) {
        return Err(GridError::NotPassable(from));
    }
    Ok(())
}

/// Minimum-length path from `from` to `to` over cells satisfying `passable`.
///
/// Returns `Ok(None)` when `to` cannot be reached (including when `to`
/// itself is not passable).
pub fn dijkstra<P>(
    level: &GridLevel,
    from: Coord,
    to: Coord,
    passable: P,
) -> Result<Option<Path>, GridError>
where
    P: Fn(Coord) -> bool,
{
    check_origin(level, from, &passable)?;
    level.check_bounds(to)?;
    if from == to {
        return Ok(Some(vec![from]));
    }
    if !passable(to) {
        return Ok(None);
    }
    let goal = level.index_of(to);
    let tree = search(level, from, &passable, Some(goal));
    if tree.dist[goal] == UNSEEN {
        return Ok(None);
    }
    let mut path = vec![to];
    let mut cur = goal;
    while tree.prev[cur] != NO_PREV {
        cur = tree.prev[cur];
        path.push(level.coord_of(cur));
    }
    path.reverse();
    Ok(Some(path))
}

/// Edge distance from `from` to every cell, `None` where unreachable.
/// Indexed row-major like `GridLevel::cells`.
pub fn distance_map<P>(
    level: &GridLevel,
    from: Coord,
    passable: P,
) -> Result<Vec<Option<u32>>, GridError>
where
    P: Fn(Coord) -> bool,
{
    check_origin(level, from, &passable)?;
    let tree = search(level, from, &passable, None);
    Ok(tree
        .dist
        .into_iter()
        .map(|d| (d != UNSEEN).then_some(d))
        .collect())
}

/// Every cell reachable from `from` through passable cells, `from` included.
pub fn reachable_set<P>(
    level: &GridLevel,
    from: Coord,
    passable: P,
) -> Result<BTreeSet<Coord>, GridError>
where
    P: Fn(Coord) -> bool,
{
    check_origin(level, from, &passable)?;
    let mut seen = vec![false; level.area()];
    let mut stack = vec![from];
    seen[level.index_of(from)] = true;
    let mut out = BTreeSet::new();
    while let Some(here) = stack.pop() {
        out.insert(here);
        for next in neighbors_unchecked(level, here) {
            let j = level.index_of(next);
            if !seen[j] && passable(next) {
                seen[j] = true;
                stack.push(next);
            }
        }
    }
    Ok(out)
}

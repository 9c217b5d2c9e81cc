//! Brute-force and hand-derived oracles for the engine rules.

use std::collections::BTreeSet;

use mirrormode::engine::{
    new_game, GameConfig, GameMode, GameState, MoveType, Team, Terrain, UnitSpec, UnitState, Weapon, BOARD_COLS,
    BOARD_ROWS, TEAM_SIZE, TILE_COUNT,
};
use rand::seq::SliceRandom;
use rand::Rng;

/// Terrain entry cost, written out from the rules table.
pub fn entry_cost(t: Terrain, mv: MoveType) -> Option<u32> {
    match (t, mv) {
        (Terrain::Plain, _) => Some(1),
        (Terrain::Forest, MoveType::Flying) => Some(1),
        (Terrain::Forest, MoveType::Cavalry) => None,
        (Terrain::Forest, MoveType::Infantry | MoveType::Armor) => Some(2),
        (Terrain::Mountain, MoveType::Flying) => Some(1),
        (Terrain::Mountain, _) => None,
    }
}

pub fn budget(mv: MoveType) -> u32 {
    match mv {
        MoveType::Infantry => 2,
        MoveType::Cavalry => 3,
        MoveType::Flying => 2,
        MoveType::Armor => 1,
    }
}

fn adjacent(tile: usize) -> Vec<usize> {
    let (r, c) = ((tile / BOARD_COLS) as i64, (tile % BOARD_COLS) as i64);
    [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
        .into_iter()
        .filter(|&(r, c)| r >= 0 && c >= 0 && r < BOARD_ROWS as i64 && c < BOARD_COLS as i64)
        .map(|(r, c)| (r as usize) * BOARD_COLS + c as usize)
        .collect()
}

/// Enumerates every simple path within the budget; destinations are tiles
/// no living unit stands on, plus the start tile.
pub fn flood_fill_reach(state: &GameState, u: &UnitState) -> BTreeSet<usize> {
    let budget = state.rules.movement[u.spec.move_type.index()];
    let living: Vec<&UnitState> = state.units.iter().filter(|o| o.current_hp > 0).collect();
    let foe_at = |t: usize| living.iter().any(|o| o.position == t && o.team != u.team);
    let anyone_at = |t: usize| living.iter().any(|o| o.position == t);
    let mut seen = BTreeSet::new();
    // Each stack entry is a whole simple path and its cost.
    let mut stack = vec![(vec![u.position], 0u32)];
    while let Some((path, spent)) = stack.pop() {
        let t = *path.last().expect("paths are non-empty");
        seen.insert(t);
        for n in adjacent(t) {
            if path.contains(&n) || foe_at(n) {
                continue;
            }
            let Some(c) = entry_cost(state.map.terrain[n], u.spec.move_type) else { continue };
            if spent + c <= budget {
                let mut next = path.clone();
                next.push(n);
                stack.push((next, spent + c));
            }
        }
    }
    seen.into_iter().filter(|&t| t == u.position || !anyone_at(t)).collect()
}

/// Per-hit damage from the stated formula, in exact rational arithmetic.
pub fn per_hit(a: &UnitSpec, d: &UnitSpec) -> u32 {
    let (tn, td) = match (a.weapon, d.weapon) {
        (Weapon::Sword, Weapon::Axe) | (Weapon::Axe, Weapon::Lance) | (Weapon::Lance, Weapon::Sword) => (6, 5),
        (Weapon::Axe, Weapon::Sword) | (Weapon::Lance, Weapon::Axe) | (Weapon::Sword, Weapon::Lance) => (4, 5),
        _ => (1, 1),
    };
    let (en, ed) = if a.weapon == Weapon::Bow && d.move_type == MoveType::Flying { (3, 2) } else { (1, 1) };
    let raw = a.stats.atk * tn * en / (td * ed);
    let mit = if a.weapon == Weapon::Magic { d.stats.res } else { d.stats.def };
    raw.saturating_sub(mit)
}

fn weapon_range(w: Weapon) -> usize {
    match w {
        Weapon::Sword | Weapon::Lance | Weapon::Axe => 1,
        Weapon::Bow | Weapon::Magic => 2,
    }
}

/// Final (attacker hp, defender hp) after one combat, strike by strike.
pub fn resolve_combat(a: &UnitSpec, mut a_hp: u32, d: &UnitSpec, mut d_hp: u32) -> (u32, u32) {
    let counter = weapon_range(a.weapon) == weapon_range(d.weapon);
    let a_dmg = per_hit(a, d);
    let d_dmg = per_hit(d, a);
    d_hp = d_hp.saturating_sub(a_dmg);
    if d_hp > 0 && counter {
        a_hp = a_hp.saturating_sub(d_dmg);
    }
    if a_hp > 0 && d_hp > 0 && a.stats.spd >= d.stats.spd + 5 {
        d_hp = d_hp.saturating_sub(a_dmg);
    }
    if a_hp > 0 && d_hp > 0 && counter && d.stats.spd >= a.stats.spd + 5 {
        a_hp = a_hp.saturating_sub(d_dmg);
    }
    (a_hp, d_hp)
}

/// A fresh game with scrambled terrain, positions, hp, acted flags, phase
/// and movement budgets. Each team keeps at least one living unit.
pub fn random_state<R: Rng>(rng: &mut R) -> GameState {
    let mut s = new_game(&GameConfig::default(), GameMode::Standard, None, rng.gen()).unwrap();
    for t in s.map.terrain.iter_mut() {
        *t = match rng.gen_range(0..10) {
            0..=5 => Terrain::Plain,
            6..=7 => Terrain::Forest,
            _ => Terrain::Mountain,
        };
    }
    let mut tiles: Vec<usize> = (0..TILE_COUNT).collect();
    tiles.shuffle(rng);
    for (u, &t) in s.units.iter_mut().zip(&tiles) {
        u.position = t;
        u.current_hp = rng.gen_range(1..=u.spec.stats.hp);
        u.acted = rng.gen_bool(0.2);
    }
    for team in [Team::Blue, Team::Red] {
        let keep = rng.gen_range(0..TEAM_SIZE);
        for slot in 0..TEAM_SIZE {
            if slot != keep && rng.gen_bool(0.2) {
                s.unit_mut(team, slot).current_hp = 0;
            }
        }
    }
    if rng.gen_bool(0.5) {
        s.phase = Team::Red;
    }
    if rng.gen_bool(0.5) {
        for m in s.rules.movement.iter_mut() {
            *m = rng.gen_range(0..=4);
        }
    }
    s
}

/// Like [`random_state`] but with every unit unacted, so the phase team can move.
pub fn random_playable_state<R: Rng>(rng: &mut R) -> GameState {
    let mut s = random_state(rng);
    for u in s.units.iter_mut() {
        u.acted = false;
    }
    s
}

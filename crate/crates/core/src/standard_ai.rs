//! Rule-based Standard Mode enemy: greedy attacks, otherwise approach (or hold).
//!
//! The functions work for whichever team holds the phase, so the same script
//! doubles as the "aggressive" scripted demonstrator on the blue side.

use crate::engine::{
    manhattan, tile_col, ActionTriple, EnemyMovement, EngineError, Event, GameState, TileSet, UnitState,
};

/// Phase-team slots in acting order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TurnQueue(pub Vec<usize>);

/// Phases needed to close on the nearest living foe, by raw distance over budget.
fn phases_to_reach(state: &GameState, u: &UnitState) -> usize {
    let budget = state.rules.budget(u.spec.move_type).max(1) as usize;
    state
        .living(u.team.opponent())
        .map(|f| manhattan(u.position, f.position).div_ceil(budget))
        .min()
        .unwrap_or(usize::MAX)
}

/// Melee before ranged, then fastest to reach a foe, then leftmost column, then slot.
fn priority_key(state: &GameState, u: &UnitState) -> (u8, usize, usize, usize) {
    (u8::from(!u.spec.weapon.is_melee()), phases_to_reach(state, u), tile_col(u.position), u.slot)
}

pub fn order_units(state: &GameState) -> TurnQueue {
    let mut units: Vec<&UnitState> = state.living(state.phase).collect();
    units.sort_by_key(|u| priority_key(state, u));
    TurnQueue(units.into_iter().map(|u| u.slot).collect())
}

/// Next unit to act: the highest-priority unacted unit, re-evaluated on the current board.
pub fn next_unit(state: &GameState) -> Option<usize> {
    state.pending_units().min_by_key(|u| priority_key(state, u)).map(|u| u.slot)
}

/// Launch tile preference: stay put when possible, else the lowest index.
pub(crate) fn pick_launch_tile(tiles: TileSet, current: usize) -> usize {
    if tiles.contains(current) {
        current
    } else {
        tiles.iter().next().expect("attack option has a launch tile")
    }
}

pub fn select_action(state: &GameState, slot: usize, movement: EnemyMovement) -> ActionTriple {
    let u = state.unit(state.phase, slot);
    let reach = state.reach_of(u);
    let options = state.attack_options_of(u, reach);

    if let Some(best) = options.iter().min_by_key(|o| {
        let foe = state.unit(u.team.opponent(), o.target);
        let fc = crate::engine::forecast(&u.spec, u.current_hp, &foe.spec, foe.current_hp);
        (std::cmp::Reverse(fc.damage_to_defender()), fc.projected_defender_hp, o.target)
    }) {
        return ActionTriple::attack(best.target, pick_launch_tile(best.launch_tiles, u.position));
    }

    if movement == EnemyMovement::Hold {
        return ActionTriple::wait(u.position);
    }
    let foes: Vec<usize> = state.living(u.team.opponent()).map(|f| f.position).collect();
    let nearest = |t: usize| foes.iter().map(|&f| manhattan(t, f)).min().unwrap_or(0);
    let best = reach.iter().min_by_key(|&t| (nearest(t), t)).unwrap_or(u.position);
    if best == u.position {
        ActionTriple::wait(u.position)
    } else {
        ActionTriple::move_to(best)
    }
}

/// Plays every pending unit of the phase team, then hands the phase over
/// unless the game ended.
pub fn run_phase(state: &mut GameState, movement: EnemyMovement) -> Result<Vec<Event>, EngineError> {
    let mut events = Vec::new();
    while !state.outcome.is_over() {
        let Some(slot) = next_unit(state) else { break };
        let action = select_action(state, slot, movement);
        events.extend(state.apply_in_place(slot, action)?);
    }
    if !state.outcome.is_over() {
        events.push(state.advance_phase_in_place()?);
    }
    Ok(events)
}

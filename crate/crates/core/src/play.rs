//! Controllers that pick actions for a phase team, the scripted demonstrators,
//! and a driver that plays whole phases and episodes.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{
    forecast, manhattan, ActionTriple, EnemyMovement, EngineError, Event, GameState, TriangleEdge, UnitState,
};
use crate::standard_ai;

/// Picks an action for the phase team's unit in `slot`.
pub trait Controller {
    fn choose(&mut self, state: &GameState, slot: usize) -> Result<ActionTriple, EngineError>;

    /// Which unit acts next among the phase team's pending units.
    fn next_unit(&mut self, state: &GameState) -> Option<usize> {
        standard_ai::next_unit(state)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptedPolicy {
    Aggressive,
    Defensive,
    Random,
}

impl ScriptedPolicy {
    pub const ALL: [ScriptedPolicy; 3] = [ScriptedPolicy::Aggressive, ScriptedPolicy::Defensive, ScriptedPolicy::Random];

    pub fn name(self) -> &'static str {
        match self {
            ScriptedPolicy::Aggressive => "aggressive",
            ScriptedPolicy::Defensive => "defensive",
            ScriptedPolicy::Random => "random",
        }
    }
}

impl fmt::Display for ScriptedPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "scripted:{}", self.name())
    }
}

impl FromStr for ScriptedPolicy {
    type Err = String;

    /// Accepts `scripted:<name>` or the bare name.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let name = s.strip_prefix("scripted:").unwrap_or(s);
        ScriptedPolicy::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| format!("unknown scripted policy `{s}` (aggressive, defensive, random)"))
    }
}

/// Attack only with triangle advantage or effectiveness while at half hp or
/// more; otherwise step to the reachable tile farthest from the nearest foe.
pub fn defensive_action(state: &GameState, slot: usize) -> ActionTriple {
    let u = state.unit(state.phase, slot);
    let reach = state.reach_of(u);
    if u.current_hp * 2 >= u.spec.stats.hp {
        let best = state
            .attack_options_of(u, reach)
            .into_iter()
            .filter_map(|o| {
                let foe = state.unit(u.team.opponent(), o.target);
                let fc = forecast(&u.spec, u.current_hp, &foe.spec, foe.current_hp);
                let favoured = fc.triangle == TriangleEdge::Advantage || fc.effective;
                favoured.then_some((o, fc))
            })
            .min_by_key(|(o, fc)| (std::cmp::Reverse(fc.damage_to_defender()), fc.projected_defender_hp, o.target));
        if let Some((o, _)) = best {
            return ActionTriple::attack(o.target, standard_ai::pick_launch_tile(o.launch_tiles, u.position));
        }
    }
    let nearest = |t: usize| nearest_foe_distance(state, u, t);
    let here = nearest(u.position);
    let best = reach
        .iter()
        .filter(|&t| nearest(t) > here)
        .max_by_key(|&t| (nearest(t), std::cmp::Reverse(t)));
    match best {
        Some(t) => ActionTriple::move_to(t),
        None => ActionTriple::wait(u.position),
    }
}

fn nearest_foe_distance(state: &GameState, u: &UnitState, tile: usize) -> usize {
    state.living(u.team.opponent()).map(|f| manhattan(tile, f.position)).min().unwrap_or(0)
}

/// Every legal action of a unit: wait, each move off the current tile, each
/// (target, launch tile) attack pair.
pub fn legal_actions(state: &GameState, slot: usize) -> Vec<ActionTriple> {
    let u = state.unit(state.phase, slot);
    let reach = state.reach_of(u);
    let mut out = vec![ActionTriple::wait(u.position)];
    out.extend(reach.iter().filter(|&t| t != u.position).map(ActionTriple::move_to));
    for o in state.attack_options_of(u, reach) {
        out.extend(o.launch_tiles.iter().map(|t| ActionTriple::attack(o.target, t)));
    }
    out
}

/// A scripted controller with its own seeded RNG (only `random` draws from it).
#[derive(Clone, Debug)]
pub struct Scripted {
    pub policy: ScriptedPolicy,
    pub movement: EnemyMovement,
    rng: ChaCha8Rng,
}

impl Scripted {
    pub fn new(policy: ScriptedPolicy, seed: u64) -> Self {
        Scripted { policy, movement: EnemyMovement::Approach, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// The Standard Mode enemy with a configured movement mode.
    pub fn standard(movement: EnemyMovement) -> Self {
        Scripted { policy: ScriptedPolicy::Aggressive, movement, rng: ChaCha8Rng::seed_from_u64(0) }
    }
}

impl Controller for Scripted {
    fn choose(&mut self, state: &GameState, slot: usize) -> Result<ActionTriple, EngineError> {
        Ok(match self.policy {
            ScriptedPolicy::Aggressive => standard_ai::select_action(state, slot, self.movement),
            ScriptedPolicy::Defensive => defensive_action(state, slot),
            ScriptedPolicy::Random => {
                let all = legal_actions(state, slot);
                all[self.rng.gen_range(0..all.len())]
            }
        })
    }
}

/// One decision taken during play, before it was applied.
#[derive(Clone, Debug)]
pub struct Decision {
    pub state: GameState,
    pub slot: usize,
    pub action: ActionTriple,
}

/// Plays every pending unit of the phase team with `ctrl`, reporting each
/// decision to `on_decision`, then advances the phase unless the game ended.
pub fn play_phase<C: Controller + ?Sized>(
    state: &mut GameState,
    ctrl: &mut C,
    on_decision: &mut dyn FnMut(&Decision),
) -> Result<Vec<Event>, EngineError> {
    let mut events = Vec::new();
    while !state.outcome.is_over() {
        let Some(slot) = ctrl.next_unit(state) else { break };
        let action = ctrl.choose(state, slot)?;
        on_decision(&Decision { state: state.clone(), slot, action });
        events.extend(state.apply_in_place(slot, action)?);
    }
    if !state.outcome.is_over() {
        events.push(state.advance_phase_in_place()?);
    }
    Ok(events)
}

/// Safety net against scripts that never end a game; far above the tie cap.
pub const MAX_EPISODE_PHASES: u32 = 400;

/// Plays a game to completion. Decisions of both teams go to `on_decision`,
/// and every engine event goes to `on_event`.
pub fn play_episode(
    state: &mut GameState,
    blue: &mut dyn Controller,
    red: &mut dyn Controller,
    on_decision: &mut dyn FnMut(&Decision),
    on_event: &mut dyn FnMut(&Event),
) -> Result<(), EngineError> {
    let mut phases = 0;
    while !state.outcome.is_over() {
        if phases >= MAX_EPISODE_PHASES {
            return Err(EngineError::Phase(format!("episode exceeded {MAX_EPISODE_PHASES} phases")));
        }
        let ctrl: &mut dyn Controller = match state.phase {
            crate::engine::Team::Blue => &mut *blue,
            crate::engine::Team::Red => &mut *red,
        };
        for e in play_phase(state, ctrl, on_decision)? {
            on_event(&e);
        }
        phases += 1;
    }
    Ok(())
}

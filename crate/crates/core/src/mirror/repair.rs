use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{ActionTriple, ActionType, GameState, TILE_COUNT};

/// How a proposed action was changed to make it legal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Repair {
    Unchanged,
    /// Invalid attack replaced by a random valid (target, launch tile) pair.
    AttackRetargeted,
    /// Nothing attackable; the attack tile was reachable so the unit moves there.
    AttackToMove,
    AttackToWait,
    MoveToWait,
    /// Wait named a tile other than the unit's own.
    WaitRetiled,
}

impl Repair {
    pub fn was_illegal(self) -> bool {
        self != Repair::Unchanged
    }
}

/// Monotone counters of proposals that needed repair, by category.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairStats {
    pub proposals: u64,
    pub attack_retargeted: u64,
    pub attack_to_move: u64,
    pub attack_to_wait: u64,
    pub move_to_wait: u64,
    pub wait_retiled: u64,
}

impl RepairStats {
    pub fn record(&mut self, r: Repair) {
        self.proposals += 1;
        match r {
            Repair::Unchanged => {}
            Repair::AttackRetargeted => self.attack_retargeted += 1,
            Repair::AttackToMove => self.attack_to_move += 1,
            Repair::AttackToWait => self.attack_to_wait += 1,
            Repair::MoveToWait => self.move_to_wait += 1,
            Repair::WaitRetiled => self.wait_retiled += 1,
        }
    }

    pub fn illegal_total(&self) -> u64 {
        self.attack_retargeted + self.attack_to_move + self.attack_to_wait + self.move_to_wait + self.wait_retiled
    }
}

/// Turns a raw policy proposal for the phase team's unit in `slot` into a legal
/// action: a bad attack is redirected to a random valid attack, else demoted
/// to a move onto the proposed tile when reachable, else to a wait; a move to
/// an unreachable tile becomes a wait.
pub fn repair_action<R: Rng + ?Sized>(
    state: &GameState,
    slot: usize,
    raw: ActionTriple,
    rng: &mut R,
) -> (ActionTriple, Repair) {
    let u = state.unit(state.phase, slot);
    let reach = state.reach_of(u);
    let in_reach = raw.tile < TILE_COUNT && reach.contains(raw.tile);
    match raw.action_type {
        ActionType::Attack => {
            if state.is_legal(slot, &raw) {
                return (raw, Repair::Unchanged);
            }
            let pairs: Vec<(usize, usize)> = state
                .attack_options_of(u, reach)
                .iter()
                .flat_map(|o| o.launch_tiles.iter().map(move |t| (o.target, t)))
                .collect();
            if !pairs.is_empty() {
                let (target, tile) = pairs[rng.gen_range(0..pairs.len())];
                (ActionTriple::attack(target, tile), Repair::AttackRetargeted)
            } else if in_reach {
                (ActionTriple::move_to(raw.tile), Repair::AttackToMove)
            } else {
                (ActionTriple::wait(u.position), Repair::AttackToWait)
            }
        }
        ActionType::Move if !in_reach => (ActionTriple::wait(u.position), Repair::MoveToWait),
        ActionType::Move => (raw, Repair::Unchanged),
        ActionType::Wait if raw.tile != u.position => (ActionTriple::wait(u.position), Repair::WaitRetiled),
        ActionType::Wait => (raw, Repair::Unchanged),
    }
}

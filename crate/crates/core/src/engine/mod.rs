//! Rules engine for the 6×8 tactics game.
//!
//! A [`GameState`] is a plain value: every operation either inspects it or
//! produces a successor, and the engine never repairs an illegal request.

mod combat;
mod config;
mod state;
mod types;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use combat::{
    effectiveness_multiplier, forecast, hit_damage, is_effective, triangle_multiplier, CombatForecast, PlannedStrike,
    StrikeKind, TriangleEdge,
};
pub use config::{
    ArmorAdjust, EnemyMovement, GameConfig, MovementBudgets, Rules, StandardAiConfig, StatBounds, TeamMember, TileMap,
};
pub use state::{mirror_of, new_game, AttackOption, GameMode, GameState, Outcome, UnitState};
pub use types::{
    manhattan, neighbors, tile_col, tile_index, tile_row, MoveType, Stats, Team, Terrain, TileSet, UnitSpec, Weapon,
    BOARD_COLS, BOARD_ROWS, FOLLOW_UP_THRESHOLD, TEAM_SIZE, TILE_COUNT,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ActionType {
    Wait = 0,
    Move = 1,
    Attack = 2,
}

impl ActionType {
    pub const ALL: [ActionType; 3] = [ActionType::Wait, ActionType::Move, ActionType::Attack];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl TryFrom<u8> for ActionType {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(ActionType::Wait),
            1 => Ok(ActionType::Move),
            2 => Ok(ActionType::Attack),
            other => Err(format!("action type {other} is not one of 0, 1, 2")),
        }
    }
}

impl From<ActionType> for u8 {
    fn from(a: ActionType) -> u8 {
        a as u8
    }
}

/// Three-branch discrete action: what to do, which tile, which opposing slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionTriple {
    pub action_type: ActionType,
    pub tile: usize,
    pub target: usize,
}

impl ActionTriple {
    pub fn wait(tile: usize) -> Self {
        ActionTriple { action_type: ActionType::Wait, tile, target: 0 }
    }

    pub fn move_to(tile: usize) -> Self {
        ActionTriple { action_type: ActionType::Move, tile, target: 0 }
    }

    pub fn attack(target: usize, tile: usize) -> Self {
        ActionTriple { action_type: ActionType::Attack, tile, target }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UnitRef {
    pub team: Team,
    pub slot: usize,
}

impl UnitRef {
    pub fn new(team: Team, slot: usize) -> Self {
        UnitRef { team, slot }
    }
}

/// Things that happened while an action resolved, in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Moved { unit: UnitRef, from: usize, to: usize },
    Waited { unit: UnitRef, tile: usize },
    AttackDeclared { attacker: UnitRef, defender: UnitRef, launch_tile: usize, triangle: TriangleEdge, effective: bool },
    Strike { attacker: UnitRef, defender: UnitRef, kind: StrikeKind, damage: u32, defender_hp: u32 },
    Defeated { unit: UnitRef, by: UnitRef },
    PhaseChanged { phase: Team, turn: u32 },
    GameOver { outcome: Outcome },
}

/// Why the engine refused an action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Error)]
#[serde(rename_all = "snake_case")]
pub enum IllegalReason {
    #[error("the game is already over")]
    GameOver,
    #[error("unit slot out of range")]
    NoSuchUnit,
    #[error("it is not this team's phase")]
    WrongPhase,
    #[error("unit has been defeated")]
    UnitDefeated,
    #[error("unit has already acted this phase")]
    AlreadyActed,
    #[error("tile index out of range")]
    TileOutOfRange,
    #[error("target slot out of range")]
    TargetOutOfRange,
    #[error("wait must name the unit's current tile")]
    WaitOffTile,
    #[error("tile is not reachable")]
    Unreachable,
    #[error("target cannot be attacked")]
    TargetNotAttackable,
    #[error("target cannot be attacked from that tile")]
    BadLaunchTile,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("illegal action: {0}")]
    Illegal(IllegalReason),
    #[error("illegal query: {0}")]
    IllegalQuery(String),
    #[error("phase error: {0}")]
    Phase(String),
}

//! Observation vectors, per-branch action masks and the board symmetries used
//! for demonstration augmentation.
//!
//! Layout: eight 17-wide blocks, acting unit first, then its teammates by slot,
//! then the opposing team by slot. Each block holds
//! `hp/60, atk/60, def/60, res/60, spd/60, move one-hot(4), weapon one-hot(5),
//! row/7, col/5, distance-to-actor/12`. Defeated units encode as zeros.

use serde::{Deserialize, Serialize};

use crate::engine::{
    manhattan, tile_col, tile_index, tile_row, ActionTriple, ActionType, EngineError, GameState, Team, TileSet,
    BOARD_COLS, BOARD_ROWS, TEAM_SIZE, TILE_COUNT,
};

pub const OBS_LEN: usize = 136;
pub const BLOCK_LEN: usize = 17;
pub const ACTION_TYPES: usize = 3;
pub const TARGETS: usize = TEAM_SIZE;
/// Branch sizes in head order.
pub const BRANCHES: [usize; 3] = [ACTION_TYPES, TILE_COUNT, TARGETS];
pub const ACTION_ONE_HOT_LEN: usize = ACTION_TYPES + TILE_COUNT + TARGETS;

const STAT_CAP: f32 = 60.0;
const DIST_CAP: f32 = 12.0;

/// Offsets of the positional components inside a block.
pub const ROW_OFFSET: usize = 14;
pub const COL_OFFSET: usize = 15;
pub const DIST_OFFSET: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Observation(pub Vec<f32>);

impl Observation {
    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn is_well_formed(&self) -> bool {
        self.0.len() == OBS_LEN && self.0.iter().all(|v| (0.0..=1.0).contains(v))
    }

    pub fn block(&self, i: usize) -> &[f32] {
        &self.0[i * BLOCK_LEN..(i + 1) * BLOCK_LEN]
    }
}

fn stat(v: u32) -> f32 {
    (v as f32).min(STAT_CAP) / STAT_CAP
}

/// Unit order in the observation: actor, teammates by slot, foes by slot.
pub fn block_order(team: Team, slot: usize) -> [(Team, usize); 2 * TEAM_SIZE] {
    let mut order = [(team, slot); 2 * TEAM_SIZE];
    for (i, s) in (0..TEAM_SIZE).filter(|&s| s != slot).enumerate() {
        order[i + 1] = (team, s);
    }
    for s in 0..TEAM_SIZE {
        order[TEAM_SIZE + s] = (team.opponent(), s);
    }
    order
}

pub fn encode_observation(state: &GameState, team: Team, slot: usize) -> Result<Observation, EngineError> {
    if slot >= TEAM_SIZE || !state.unit(team, slot).alive() {
        return Err(EngineError::IllegalQuery(format!("{team} unit {slot} cannot be observed from")));
    }
    let origin = state.unit(team, slot).position;
    let mut out = vec![0.0f32; OBS_LEN];
    for (b, (t, s)) in block_order(team, slot).into_iter().enumerate() {
        let u = state.unit(t, s);
        if !u.alive() {
            continue;
        }
        let block = &mut out[b * BLOCK_LEN..(b + 1) * BLOCK_LEN];
        let st = u.spec.stats;
        block[0] = stat(u.current_hp);
        block[1] = stat(st.atk);
        block[2] = stat(st.def);
        block[3] = stat(st.res);
        block[4] = stat(st.spd);
        block[5 + u.spec.move_type.index()] = 1.0;
        block[9 + u.spec.weapon.index()] = 1.0;
        block[ROW_OFFSET] = tile_row(u.position) as f32 / (BOARD_ROWS - 1) as f32;
        block[COL_OFFSET] = tile_col(u.position) as f32 / (BOARD_COLS - 1) as f32;
        block[DIST_OFFSET] = manhattan(origin, u.position) as f32 / DIST_CAP;
    }
    Ok(Observation(out))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BranchMasks {
    pub action_type: [bool; ACTION_TYPES],
    pub tile: TileSet,
    pub target: [bool; TARGETS],
}

impl BranchMasks {
    /// Per-branch admission; the target branch only counts for attacks.
    /// Joint legality is the engine's call.
    pub fn admits(&self, action: &ActionTriple) -> bool {
        self.action_type[action.action_type.index()]
            && self.tile.contains(action.tile)
            && (action.action_type != ActionType::Attack || (action.target < TARGETS && self.target[action.target]))
    }

    pub fn branch(&self, b: usize) -> Vec<bool> {
        match b {
            0 => self.action_type.to_vec(),
            1 => (0..TILE_COUNT).map(|t| self.tile.contains(t)).collect(),
            2 => self.target.to_vec(),
            _ => panic!("branch {b} out of range"),
        }
    }

    /// All 55 mask bits, branch after branch.
    pub fn flat(&self) -> [bool; ACTION_ONE_HOT_LEN] {
        let mut out = [false; ACTION_ONE_HOT_LEN];
        out[..ACTION_TYPES].copy_from_slice(&self.action_type);
        for t in self.tile.iter() {
            out[ACTION_TYPES + t] = true;
        }
        out[ACTION_TYPES + TILE_COUNT..].copy_from_slice(&self.target);
        out
    }
}

pub fn action_masks(state: &GameState, team: Team, slot: usize) -> Result<BranchMasks, EngineError> {
    let reach = state.reachable_tiles(team, slot)?;
    let options = state.attackable_targets(team, slot)?;
    let current = state.unit(team, slot).position;
    let mut tile = reach;
    let mut target = [false; TARGETS];
    for o in &options {
        tile = tile.union(o.launch_tiles);
        target[o.target] = true;
    }
    if options.is_empty() {
        target = [true; TARGETS];
    }
    let mut moves = reach;
    moves.remove(current);
    Ok(BranchMasks { action_type: [true, !moves.is_empty(), !options.is_empty()], tile, target })
}

/// One-hot action encoding fed to the discriminator: 3 + 48 + 4 slots.
pub fn action_one_hot(action: &ActionTriple) -> [f32; ACTION_ONE_HOT_LEN] {
    let mut out = [0.0; ACTION_ONE_HOT_LEN];
    out[action.action_type.index()] = 1.0;
    out[ACTION_TYPES + action.tile] = 1.0;
    if action.action_type == ActionType::Attack {
        out[ACTION_TYPES + TILE_COUNT + action.target] = 1.0;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipAxis {
    Cols,
    Rows,
    Both,
}

impl FlipAxis {
    pub const ALL: [FlipAxis; 3] = [FlipAxis::Cols, FlipAxis::Rows, FlipAxis::Both];

    pub fn flips_rows(self) -> bool {
        matches!(self, FlipAxis::Rows | FlipAxis::Both)
    }

    pub fn flips_cols(self) -> bool {
        matches!(self, FlipAxis::Cols | FlipAxis::Both)
    }
}

pub fn flip_tile(tile: usize, axis: FlipAxis) -> usize {
    let mut r = tile_row(tile);
    let mut c = tile_col(tile);
    if axis.flips_rows() {
        r = BOARD_ROWS - 1 - r;
    }
    if axis.flips_cols() {
        c = BOARD_COLS - 1 - c;
    }
    tile_index(r, c)
}

pub fn flip_state(state: &GameState, axis: FlipAxis) -> GameState {
    let mut out = state.clone();
    for t in 0..TILE_COUNT {
        out.map.terrain[flip_tile(t, axis)] = state.map.terrain[t];
    }
    for u in out.units.iter_mut() {
        u.position = flip_tile(u.position, axis);
    }
    out
}

pub fn flip_action(action: ActionTriple, axis: FlipAxis) -> ActionTriple {
    ActionTriple { tile: flip_tile(action.tile, axis), ..action }
}

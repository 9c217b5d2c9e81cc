use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::types::{
    tile_col, tile_index, tile_row, MoveType, Stats, Team, Terrain, Weapon, BOARD_COLS, BOARD_ROWS, TEAM_SIZE,
    TILE_COUNT,
};
use super::EngineError;

/// Inclusive `[min, max]` bounds for each randomized stat.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatBounds {
    pub hp: [u32; 2],
    pub atk: [u32; 2],
    pub def: [u32; 2],
    pub res: [u32; 2],
    pub spd: [u32; 2],
}

impl Default for StatBounds {
    fn default() -> Self {
        StatBounds {
            hp: [35, 50],
            atk: [25, 40],
            def: [15, 30],
            res: [15, 30],
            spd: [20, 40],
        }
    }
}

/// Flat adjustment applied to armored units after stats are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArmorAdjust {
    pub atk: i32,
    pub def: i32,
    pub res: i32,
}

impl Default for ArmorAdjust {
    fn default() -> Self {
        ArmorAdjust { atk: 5, def: 5, res: -5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MovementBudgets {
    pub infantry: u32,
    pub cavalry: u32,
    pub flying: u32,
    pub armor: u32,
}

impl Default for MovementBudgets {
    fn default() -> Self {
        MovementBudgets { infantry: 2, cavalry: 3, flying: 2, armor: 1 }
    }
}

impl MovementBudgets {
    pub fn as_array(&self) -> [u32; 4] {
        [self.infantry, self.cavalry, self.flying, self.armor]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnemyMovement {
    #[default]
    Approach,
    Hold,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StandardAiConfig {
    pub movement: EnemyMovement,
}

/// One member of a team description. Missing stats are drawn from the bounds,
/// a missing tile falls back to the configured start position for that slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamMember {
    pub move_type: MoveType,
    pub weapon: Weapon,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<Stats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tile: Option<usize>,
}

impl TeamMember {
    pub fn new(move_type: MoveType, weapon: Weapon) -> Self {
        TeamMember { move_type, weapon, stats: None, tile: None }
    }
}

/// Game configuration document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    /// Eight rows of six characters: `.` plain, `f` forest, `m` mountain.
    pub terrain: Vec<String>,
    /// `[row, col]` start positions, one per slot.
    pub blue_starts: Vec<[usize; 2]>,
    pub red_starts: Vec<[usize; 2]>,
    /// Player roster used when a game is created without an explicit team.
    pub blue_team: Vec<TeamMember>,
    pub stat_bounds: StatBounds,
    pub armor_adjust: ArmorAdjust,
    pub movement: MovementBudgets,
    /// Decisions the learning team may take before the game is declared a tie. 0 disables the cap.
    pub max_learner_actions: u32,
    pub standard_ai: StandardAiConfig,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            terrain: vec!["......".to_string(); BOARD_ROWS],
            blue_starts: vec![[0, 1], [1, 2], [1, 3], [0, 4]],
            red_starts: vec![[7, 1], [6, 2], [6, 3], [7, 4]],
            blue_team: vec![
                TeamMember::new(MoveType::Infantry, Weapon::Sword),
                TeamMember::new(MoveType::Flying, Weapon::Lance),
                TeamMember::new(MoveType::Armor, Weapon::Axe),
                TeamMember::new(MoveType::Infantry, Weapon::Bow),
            ],
            stat_bounds: StatBounds::default(),
            armor_adjust: ArmorAdjust::default(),
            movement: MovementBudgets::default(),
            max_learner_actions: 20,
            standard_ai: StandardAiConfig::default(),
        }
    }
}

/// The subset of the configuration that the rules consult during play.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rules {
    pub movement: [u32; 4],
    pub max_learner_actions: u32,
    pub learner_team: Team,
}

impl Default for Rules {
    fn default() -> Self {
        Rules { movement: MovementBudgets::default().as_array(), max_learner_actions: 20, learner_team: Team::Blue }
    }
}

impl Rules {
    pub fn budget(&self, mv: MoveType) -> u32 {
        self.movement[mv.index()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TileMap {
    #[serde(with = "terrain_rows")]
    pub terrain: [Terrain; TILE_COUNT],
}

impl Default for TileMap {
    fn default() -> Self {
        TileMap { terrain: [Terrain::Plain; TILE_COUNT] }
    }
}

impl TileMap {
    pub fn parse(rows: &[String]) -> Result<TileMap, EngineError> {
        if rows.len() != BOARD_ROWS {
            return Err(EngineError::Config(format!("terrain needs {BOARD_ROWS} rows, got {}", rows.len())));
        }
        let mut terrain = [Terrain::Plain; TILE_COUNT];
        for (r, row) in rows.iter().enumerate() {
            let chars: Vec<char> = row.chars().collect();
            if chars.len() != BOARD_COLS {
                return Err(EngineError::Config(format!("terrain row {r} needs {BOARD_COLS} columns")));
            }
            for (c, ch) in chars.into_iter().enumerate() {
                terrain[tile_index(r, c)] = Terrain::from_char(ch)
                    .ok_or_else(|| EngineError::Config(format!("unknown terrain '{ch}' at row {r} col {c}")))?;
            }
        }
        Ok(TileMap { terrain })
    }

    pub fn rows(&self) -> Vec<String> {
        (0..BOARD_ROWS)
            .map(|r| (0..BOARD_COLS).map(|c| self.terrain[tile_index(r, c)].to_char()).collect())
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..TILE_COUNT).all(|t| {
            let (r, c) = (tile_row(t), tile_col(t));
            let rf = tile_index(BOARD_ROWS - 1 - r, c);
            let cf = tile_index(r, BOARD_COLS - 1 - c);
            self.terrain[t] == self.terrain[rf] && self.terrain[t] == self.terrain[cf]
        })
    }
}

mod terrain_rows {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::{Terrain, TileMap, TILE_COUNT};

    pub fn serialize<S: Serializer>(t: &[Terrain; TILE_COUNT], s: S) -> Result<S::Ok, S::Error> {
        TileMap { terrain: *t }.rows().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[Terrain; TILE_COUNT], D::Error> {
        let rows = Vec::<String>::deserialize(d)?;
        TileMap::parse(&rows).map(|m| m.terrain).map_err(serde::de::Error::custom)
    }
}

fn start_tiles(starts: &[[usize; 2]], side: &str) -> Result<Vec<usize>, EngineError> {
    if starts.len() != TEAM_SIZE {
        return Err(EngineError::Config(format!("{side} needs {TEAM_SIZE} start positions, got {}", starts.len())));
    }
    starts
        .iter()
        .map(|&[r, c]| {
            if r >= BOARD_ROWS || c >= BOARD_COLS {
                Err(EngineError::Config(format!("{side} start [{r}, {c}] is off the board")))
            } else {
                Ok(tile_index(r, c))
            }
        })
        .collect()
}

impl GameConfig {
    pub fn from_json(text: &str) -> Result<GameConfig, EngineError> {
        let cfg: GameConfig = serde_json::from_str(text).map_err(|e| EngineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn tile_map(&self) -> Result<TileMap, EngineError> {
        TileMap::parse(&self.terrain)
    }

    pub fn blue_start_tiles(&self) -> Result<Vec<usize>, EngineError> {
        start_tiles(&self.blue_starts, "blue_starts")
    }

    pub fn red_start_tiles(&self) -> Result<Vec<usize>, EngineError> {
        start_tiles(&self.red_starts, "red_starts")
    }

    pub fn rules(&self, learner_team: Team) -> Rules {
        Rules { movement: self.movement.as_array(), max_learner_actions: self.max_learner_actions, learner_team }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let map = self.tile_map()?;
        let blue = self.blue_start_tiles()?;
        let red = self.red_start_tiles()?;
        let mut seen = std::collections::HashSet::new();
        for &t in blue.iter().chain(&red) {
            if !seen.insert(t) {
                return Err(EngineError::Config(format!("start tile {t} is used twice")));
            }
            if map.terrain[t] != Terrain::Plain {
                return Err(EngineError::Config(format!("start tile {t} is not plain terrain")));
            }
        }
        if self.blue_team.len() != TEAM_SIZE {
            return Err(EngineError::Config(format!("blue_team needs {TEAM_SIZE} members")));
        }
        for (name, [lo, hi]) in [
            ("hp", self.stat_bounds.hp),
            ("atk", self.stat_bounds.atk),
            ("def", self.stat_bounds.def),
            ("res", self.stat_bounds.res),
            ("spd", self.stat_bounds.spd),
        ] {
            if lo > hi {
                return Err(EngineError::Config(format!("stat bound {name} has min > max")));
            }
        }
        if self.stat_bounds.hp[0] == 0 {
            return Err(EngineError::Config("hp lower bound must be at least 1".into()));
        }
        Ok(())
    }

    /// Digest of everything that shapes the board and movement.
    pub fn map_hash(&self) -> String {
        let doc = serde_json::json!({
            "terrain": self.terrain,
            "blue_starts": self.blue_starts,
            "red_starts": self.red_starts,
            "movement": self.movement,
            "max_learner_actions": self.max_learner_actions,
        });
        digest(&doc)
    }

    pub fn stat_bounds_hash(&self) -> String {
        let doc = serde_json::json!({ "stat_bounds": self.stat_bounds, "armor_adjust": self.armor_adjust });
        digest(&doc)
    }

    pub fn hash(&self) -> String {
        digest(&serde_json::json!({ "map": self.map_hash(), "stats": self.stat_bounds_hash() }))
    }
}

fn digest(doc: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(doc).expect("json value serializes");
    hex::encode(&Sha256::digest(&bytes)[..16])
}

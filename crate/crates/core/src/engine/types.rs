use std::fmt;

use serde::{Deserialize, Serialize};

pub const BOARD_COLS: usize = 6;
pub const BOARD_ROWS: usize = 8;
pub const TILE_COUNT: usize = BOARD_COLS * BOARD_ROWS;
pub const TEAM_SIZE: usize = 4;

/// Speed lead needed for a second strike.
pub const FOLLOW_UP_THRESHOLD: u32 = 5;

/// Row-major tile index: `row * 6 + col`.
pub fn tile_index(row: usize, col: usize) -> usize {
    debug_assert!(row < BOARD_ROWS && col < BOARD_COLS);
    row * BOARD_COLS + col
}

pub fn tile_row(tile: usize) -> usize {
    tile / BOARD_COLS
}

pub fn tile_col(tile: usize) -> usize {
    tile % BOARD_COLS
}

pub fn manhattan(a: usize, b: usize) -> usize {
    tile_row(a).abs_diff(tile_row(b)) + tile_col(a).abs_diff(tile_col(b))
}

/// Orthogonal neighbours of a tile that lie on the board.
pub fn neighbors(tile: usize) -> impl Iterator<Item = usize> {
    let (r, c) = (tile_row(tile) as isize, tile_col(tile) as isize);
    [(-1, 0), (1, 0), (0, -1), (0, 1)]
        .into_iter()
        .map(move |(dr, dc)| (r + dr, c + dc))
        .filter(|&(r, c)| r >= 0 && c >= 0 && (r as usize) < BOARD_ROWS && (c as usize) < BOARD_COLS)
        .map(|(r, c)| tile_index(r as usize, c as usize))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Team {
    Blue,
    Red,
}

impl Team {
    pub fn opponent(self) -> Team {
        match self {
            Team::Blue => Team::Red,
            Team::Red => Team::Blue,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Team::Blue => 0,
            Team::Red => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Team::Blue => "blue",
            Team::Red => "red",
        }
    }
}

impl fmt::Display for Team {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveType {
    Infantry,
    Cavalry,
    Flying,
    Armor,
}

impl MoveType {
    pub const ALL: [MoveType; 4] = [MoveType::Infantry, MoveType::Cavalry, MoveType::Flying, MoveType::Armor];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weapon {
    Sword,
    Lance,
    Axe,
    Bow,
    Magic,
}

impl Weapon {
    pub const ALL: [Weapon; 5] = [Weapon::Sword, Weapon::Lance, Weapon::Axe, Weapon::Bow, Weapon::Magic];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_melee(self) -> bool {
        matches!(self, Weapon::Sword | Weapon::Lance | Weapon::Axe)
    }

    pub fn range(self) -> usize {
        if self.is_melee() {
            1
        } else {
            2
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terrain {
    #[default]
    Plain,
    Forest,
    Mountain,
}

impl Terrain {
    pub fn from_char(c: char) -> Option<Terrain> {
        match c {
            '.' => Some(Terrain::Plain),
            'f' => Some(Terrain::Forest),
            'm' => Some(Terrain::Mountain),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Terrain::Plain => '.',
            Terrain::Forest => 'f',
            Terrain::Mountain => 'm',
        }
    }

    /// Cost of entering a tile of this terrain, `None` when impassable.
    pub fn entry_cost(self, mv: MoveType) -> Option<u32> {
        match (self, mv) {
            (Terrain::Plain, _) => Some(1),
            (_, MoveType::Flying) => Some(1),
            (Terrain::Forest, MoveType::Cavalry) => None,
            (Terrain::Forest, _) => Some(2),
            (Terrain::Mountain, _) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Stats {
    pub hp: u32,
    pub atk: u32,
    pub def: u32,
    pub res: u32,
    pub spd: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnitSpec {
    pub move_type: MoveType,
    pub weapon: Weapon,
    pub stats: Stats,
}

impl UnitSpec {
    pub fn range(&self) -> usize {
        self.weapon.range()
    }
}

/// A set of board tiles packed into the low 48 bits of a `u64`.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TileSet(u64);

impl TileSet {
    pub const EMPTY: TileSet = TileSet(0);

    pub fn full() -> TileSet {
        TileSet((1u64 << TILE_COUNT) - 1)
    }

    pub fn single(tile: usize) -> TileSet {
        let mut s = TileSet::EMPTY;
        s.insert(tile);
        s
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn insert(&mut self, tile: usize) {
        assert!(tile < TILE_COUNT, "tile {tile} out of range");
        self.0 |= 1 << tile;
    }

    pub fn remove(&mut self, tile: usize) {
        if tile < TILE_COUNT {
            self.0 &= !(1 << tile);
        }
    }

    pub fn contains(self, tile: usize) -> bool {
        tile < TILE_COUNT && self.0 & (1 << tile) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: TileSet) -> TileSet {
        TileSet(self.0 | other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let t = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(t)
        })
    }
}

impl FromIterator<usize> for TileSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = TileSet::EMPTY;
        for t in iter {
            s.insert(t);
        }
        s
    }
}

impl fmt::Debug for TileSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weapon_ranges() {
        assert_eq!(Weapon::Sword.range(), 1);
        assert_eq!(Weapon::Lance.range(), 1);
        assert_eq!(Weapon::Axe.range(), 1);
        assert_eq!(Weapon::Bow.range(), 2);
        assert_eq!(Weapon::Magic.range(), 2);
    }

    #[test]
    fn tile_encoding() {
        assert_eq!(tile_index(1, 2), 8);
        assert_eq!(tile_index(6, 2), 38);
        assert_eq!((tile_row(47), tile_col(47)), (7, 5));
        assert_eq!(manhattan(0, 47), 12);
        assert_eq!(neighbors(0).collect::<Vec<_>>(), vec![6, 1]);
        assert_eq!(neighbors(20).count(), 4);
    }

    #[test]
    fn tileset_ops() {
        let s: TileSet = [3, 0, 47].into_iter().collect();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 3, 47]);
        assert!(s.contains(47) && !s.contains(48));
        assert_eq!(TileSet::full().len(), 48);
    }

    #[test]
    fn terrain_costs() {
        assert_eq!(Terrain::Forest.entry_cost(MoveType::Infantry), Some(2));
        assert_eq!(Terrain::Forest.entry_cost(MoveType::Armor), Some(2));
        assert_eq!(Terrain::Forest.entry_cost(MoveType::Cavalry), None);
        assert_eq!(Terrain::Mountain.entry_cost(MoveType::Flying), Some(1));
        assert_eq!(Terrain::Mountain.entry_cost(MoveType::Infantry), None);
    }
}

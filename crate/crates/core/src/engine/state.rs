use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::combat::{forecast, CombatForecast};
use super::config::{GameConfig, Rules, StatBounds, TeamMember, TileMap};
use super::types::{
    manhattan, neighbors, tile_col, tile_index, tile_row, MoveType, Stats, Team, TileSet, UnitSpec, Weapon,
    BOARD_ROWS, TEAM_SIZE, TILE_COUNT,
};
use super::{ActionTriple, ActionType, EngineError, Event, IllegalReason, UnitRef};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameMode {
    #[default]
    Standard,
    Mirror,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    #[default]
    Ongoing,
    BlueWin,
    RedWin,
    Tie,
}

impl Outcome {
    pub fn is_over(self) -> bool {
        self != Outcome::Ongoing
    }

    pub fn winner(self) -> Option<Team> {
        match self {
            Outcome::BlueWin => Some(Team::Blue),
            Outcome::RedWin => Some(Team::Red),
            _ => None,
        }
    }

    pub fn win_for(team: Team) -> Outcome {
        match team {
            Team::Blue => Outcome::BlueWin,
            Team::Red => Outcome::RedWin,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnitState {
    pub spec: UnitSpec,
    pub team: Team,
    pub slot: usize,
    /// Last occupied tile; meaningless once the unit is defeated.
    pub position: usize,
    pub current_hp: u32,
    pub acted: bool,
}

impl UnitState {
    pub fn alive(&self) -> bool {
        self.current_hp > 0
    }

    pub fn id(&self) -> UnitRef {
        UnitRef::new(self.team, self.slot)
    }
}

/// A foe that can be attacked, with every tile the attack may be launched from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackOption {
    pub target: usize,
    pub launch_tiles: TileSet,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    pub map: TileMap,
    /// Blue slots 0..4 followed by red slots 0..4.
    pub units: [UnitState; 2 * TEAM_SIZE],
    pub phase: Team,
    /// Number of completed phase changes.
    pub turn: u32,
    pub learner_action_count: u32,
    pub rng_seed: u64,
    pub outcome: Outcome,
    pub mode: GameMode,
    pub rules: Rules,
}

fn draw(rng: &mut ChaCha8Rng, [lo, hi]: [u32; 2]) -> u32 {
    rng.gen_range(lo..=hi)
}

fn random_stats(rng: &mut ChaCha8Rng, bounds: &StatBounds) -> Stats {
    Stats {
        hp: draw(rng, bounds.hp),
        atk: draw(rng, bounds.atk),
        def: draw(rng, bounds.def),
        res: draw(rng, bounds.res),
        spd: draw(rng, bounds.spd),
    }
}

fn adjust(v: u32, by: i32) -> u32 {
    (v as i64 + by as i64).max(0) as u32
}

fn roll_stats(rng: &mut ChaCha8Rng, config: &GameConfig, move_type: MoveType) -> Stats {
    let mut s = random_stats(rng, &config.stat_bounds);
    if move_type == MoveType::Armor {
        let a = config.armor_adjust;
        s.atk = adjust(s.atk, a.atk);
        s.def = adjust(s.def, a.def);
        s.res = adjust(s.res, a.res);
    }
    s
}

fn build_team(
    rng: &mut ChaCha8Rng,
    config: &GameConfig,
    team: Team,
    members: &[TeamMember],
    starts: &[usize],
) -> Result<[UnitState; TEAM_SIZE], EngineError> {
    if members.len() != TEAM_SIZE {
        return Err(EngineError::Config(format!("{team} team needs {TEAM_SIZE} members, got {}", members.len())));
    }
    let mut out = Vec::with_capacity(TEAM_SIZE);
    for (slot, m) in members.iter().enumerate() {
        let stats = match m.stats {
            Some(s) if s.hp == 0 => return Err(EngineError::Config(format!("{team} slot {slot} has 0 hp"))),
            Some(s) => s,
            None => roll_stats(rng, config, m.move_type),
        };
        let position = m.tile.unwrap_or(starts[slot]);
        if position >= TILE_COUNT {
            return Err(EngineError::Config(format!("{team} slot {slot} tile {position} is off the board")));
        }
        out.push(UnitState {
            spec: UnitSpec { move_type: m.move_type, weapon: m.weapon, stats },
            team,
            slot,
            position,
            current_hp: stats.hp,
            acted: false,
        });
    }
    Ok(out.try_into().expect("team size checked"))
}

/// Row-flip copy of a team for the opposing side: same types, weapons and stats.
pub fn mirror_of(team: &[UnitState; TEAM_SIZE]) -> [UnitState; TEAM_SIZE] {
    team.map(|u| UnitState {
        team: u.team.opponent(),
        position: tile_index(BOARD_ROWS - 1 - tile_row(u.position), tile_col(u.position)),
        current_hp: u.spec.stats.hp,
        acted: false,
        ..u
    })
}

/// Creates a fresh game. In standard mode the red roster is randomized; in
/// mirror mode red is the row-flipped copy of blue and is the learning side.
pub fn new_game(
    config: &GameConfig,
    mode: GameMode,
    team: Option<&[TeamMember]>,
    seed: u64,
) -> Result<GameState, EngineError> {
    config.validate()?;
    let map = config.tile_map()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blue_members = team.unwrap_or(&config.blue_team);
    let blue = build_team(&mut rng, config, Team::Blue, blue_members, &config.blue_start_tiles()?)?;
    let red = match mode {
        GameMode::Standard => {
            let members: Vec<TeamMember> = (0..TEAM_SIZE)
                .map(|_| {
                    let mv = MoveType::ALL[rng.gen_range(0..MoveType::ALL.len())];
                    let w = Weapon::ALL[rng.gen_range(0..Weapon::ALL.len())];
                    TeamMember::new(mv, w)
                })
                .collect();
            build_team(&mut rng, config, Team::Red, &members, &config.red_start_tiles()?)?
        }
        GameMode::Mirror => mirror_of(&blue),
    };
    let learner_team = match mode {
        GameMode::Standard => Team::Blue,
        GameMode::Mirror => Team::Red,
    };
    let mut units = [blue[0]; 2 * TEAM_SIZE];
    units[..TEAM_SIZE].copy_from_slice(&blue);
    units[TEAM_SIZE..].copy_from_slice(&red);

    let state = GameState {
        map,
        units,
        phase: Team::Blue,
        turn: 0,
        learner_action_count: 0,
        rng_seed: seed,
        outcome: Outcome::Ongoing,
        mode,
        rules: config.rules(learner_team),
    };
    let mut occupied = TileSet::EMPTY;
    for u in &state.units {
        if occupied.contains(u.position) {
            return Err(EngineError::Config(format!("two units start on tile {}", u.position)));
        }
        if u.spec.move_type != MoveType::Flying && state.map.terrain[u.position].entry_cost(u.spec.move_type).is_none() {
            return Err(EngineError::Config(format!("unit starts on impassable tile {}", u.position)));
        }
        occupied.insert(u.position);
    }
    Ok(state)
}

fn idx(team: Team, slot: usize) -> usize {
    team.index() * TEAM_SIZE + slot
}

impl GameState {
    pub fn unit(&self, team: Team, slot: usize) -> &UnitState {
        &self.units[idx(team, slot)]
    }

    pub fn unit_mut(&mut self, team: Team, slot: usize) -> &mut UnitState {
        &mut self.units[idx(team, slot)]
    }

    pub fn team(&self, team: Team) -> &[UnitState] {
        let i = team.index() * TEAM_SIZE;
        &self.units[i..i + TEAM_SIZE]
    }

    pub fn living(&self, team: Team) -> impl Iterator<Item = &UnitState> {
        self.team(team).iter().filter(|u| u.alive())
    }

    pub fn living_count(&self, team: Team) -> usize {
        self.living(team).count()
    }

    pub fn occupant(&self, tile: usize) -> Option<&UnitState> {
        self.units.iter().find(|u| u.alive() && u.position == tile)
    }

    /// Living, unacted units of the phase team, by slot.
    pub fn pending_units(&self) -> impl Iterator<Item = &UnitState> {
        self.living(self.phase).filter(|u| !u.acted)
    }

    pub fn phase_complete(&self) -> bool {
        self.pending_units().next().is_none()
    }

    fn actor(&self, team: Team, slot: usize) -> Result<&UnitState, EngineError> {
        if slot >= TEAM_SIZE {
            return Err(EngineError::IllegalQuery(format!("slot {slot} out of range")));
        }
        let u = self.unit(team, slot);
        if !u.alive() {
            return Err(EngineError::IllegalQuery(format!("{team} unit {slot} is defeated")));
        }
        if u.acted {
            return Err(EngineError::IllegalQuery(format!("{team} unit {slot} has already acted")));
        }
        Ok(u)
    }

    /// Tiles the unit may end its move on. Allies may be passed through, foes
    /// block, occupied tiles are never destinations, and the current tile is
    /// always included.
    pub fn reachable_tiles(&self, team: Team, slot: usize) -> Result<TileSet, EngineError> {
        let u = self.actor(team, slot)?;
        Ok(self.reach_of(u))
    }

    pub(crate) fn reach_of(&self, u: &UnitState) -> TileSet {
        let budget = self.rules.budget(u.spec.move_type);
        let mut blocked = TileSet::EMPTY;
        let mut occupied = TileSet::EMPTY;
        for o in self.units.iter().filter(|o| o.alive()) {
            occupied.insert(o.position);
            if o.team != u.team {
                blocked.insert(o.position);
            }
        }
        let mut cost = [u32::MAX; TILE_COUNT];
        cost[u.position] = 0;
        let mut frontier = vec![u.position];
        while let Some(t) = frontier.pop() {
            for n in neighbors(t) {
                if blocked.contains(n) {
                    continue;
                }
                let Some(step) = self.map.terrain[n].entry_cost(u.spec.move_type) else { continue };
                let c = cost[t] + step;
                if c <= budget && c < cost[n] {
                    cost[n] = c;
                    frontier.push(n);
                }
            }
        }
        let mut out = TileSet::single(u.position);
        for (t, &c) in cost.iter().enumerate() {
            if c <= budget && !occupied.contains(t) {
                out.insert(t);
            }
        }
        out
    }

    pub fn attackable_targets(&self, team: Team, slot: usize) -> Result<Vec<AttackOption>, EngineError> {
        let u = self.actor(team, slot)?;
        Ok(self.attack_options_of(u, self.reach_of(u)))
    }

    pub(crate) fn attack_options_of(&self, u: &UnitState, reach: TileSet) -> Vec<AttackOption> {
        let range = u.spec.range();
        self.living(u.team.opponent())
            .filter_map(|foe| {
                let launch_tiles: TileSet = reach.iter().filter(|&t| manhattan(t, foe.position) == range).collect();
                (!launch_tiles.is_empty()).then_some(AttackOption { target: foe.slot, launch_tiles })
            })
            .collect()
    }

    pub fn combat_forecast(&self, attacker: UnitRef, defender: UnitRef) -> Result<CombatForecast, EngineError> {
        if attacker.slot >= TEAM_SIZE || defender.slot >= TEAM_SIZE {
            return Err(EngineError::IllegalQuery("slot out of range".into()));
        }
        let a = self.unit(attacker.team, attacker.slot);
        let d = self.unit(defender.team, defender.slot);
        if !a.alive() || !d.alive() {
            return Err(EngineError::IllegalQuery("combat participant is defeated".into()));
        }
        Ok(forecast(&a.spec, a.current_hp, &d.spec, d.current_hp))
    }

    /// Checks an action for the phase team's unit in `slot` without applying it.
    pub fn check_action(&self, slot: usize, action: &ActionTriple) -> Result<(), IllegalReason> {
        if self.outcome.is_over() {
            return Err(IllegalReason::GameOver);
        }
        if slot >= TEAM_SIZE {
            return Err(IllegalReason::NoSuchUnit);
        }
        let u = self.unit(self.phase, slot);
        if !u.alive() {
            return Err(IllegalReason::UnitDefeated);
        }
        if u.acted {
            return Err(IllegalReason::AlreadyActed);
        }
        if action.tile >= TILE_COUNT {
            return Err(IllegalReason::TileOutOfRange);
        }
        match action.action_type {
            ActionType::Wait => (action.tile == u.position).then_some(()).ok_or(IllegalReason::WaitOffTile),
            ActionType::Move => self.reach_of(u).contains(action.tile).then_some(()).ok_or(IllegalReason::Unreachable),
            ActionType::Attack => {
                if action.target >= TEAM_SIZE {
                    return Err(IllegalReason::TargetOutOfRange);
                }
                let options = self.attack_options_of(u, self.reach_of(u));
                let opt = options
                    .iter()
                    .find(|o| o.target == action.target)
                    .ok_or(IllegalReason::TargetNotAttackable)?;
                opt.launch_tiles.contains(action.tile).then_some(()).ok_or(IllegalReason::BadLaunchTile)
            }
        }
    }

    pub fn is_legal(&self, slot: usize, action: &ActionTriple) -> bool {
        self.check_action(slot, action).is_ok()
    }

    /// Pure form of [`GameState::apply_in_place`].
    pub fn apply_action(&self, slot: usize, action: ActionTriple) -> Result<(GameState, Vec<Event>), EngineError> {
        let mut next = self.clone();
        let events = next.apply_in_place(slot, action)?;
        Ok((next, events))
    }

    pub fn apply_in_place(&mut self, slot: usize, action: ActionTriple) -> Result<Vec<Event>, EngineError> {
        self.check_action(slot, &action).map_err(EngineError::Illegal)?;
        let team = self.phase;
        let me = UnitRef::new(team, slot);
        let from = self.unit(team, slot).position;
        let mut events = Vec::new();
        match action.action_type {
            ActionType::Wait => events.push(Event::Waited { unit: me, tile: from }),
            ActionType::Move => {
                self.unit_mut(team, slot).position = action.tile;
                events.push(Event::Moved { unit: me, from, to: action.tile });
            }
            ActionType::Attack => {
                if action.tile != from {
                    self.unit_mut(team, slot).position = action.tile;
                    events.push(Event::Moved { unit: me, from, to: action.tile });
                }
                let foe = UnitRef::new(team.opponent(), action.target);
                let fc = self.combat_forecast(me, foe).expect("legal attack has living participants");
                events.push(Event::AttackDeclared {
                    attacker: me,
                    defender: foe,
                    launch_tile: action.tile,
                    triangle: fc.triangle,
                    effective: fc.effective,
                });
                for s in &fc.strikes {
                    let (striker, struck) = if s.kind.by_attacker() { (me, foe) } else { (foe, me) };
                    self.unit_mut(struck.team, struck.slot).current_hp = s.target_hp;
                    events.push(Event::Strike {
                        attacker: striker,
                        defender: struck,
                        kind: s.kind,
                        damage: s.damage,
                        defender_hp: s.target_hp,
                    });
                    if s.target_hp == 0 {
                        events.push(Event::Defeated { unit: struck, by: striker });
                    }
                }
            }
        }
        self.unit_mut(team, slot).acted = true;
        if team == self.rules.learner_team {
            self.learner_action_count += 1;
        }
        self.outcome = self.compute_outcome();
        if self.outcome.is_over() {
            events.push(Event::GameOver { outcome: self.outcome });
        }
        Ok(events)
    }

    pub fn compute_outcome(&self) -> Outcome {
        let blue = self.living_count(Team::Blue);
        let red = self.living_count(Team::Red);
        match (blue, red) {
            (_, 0) => Outcome::BlueWin,
            (0, _) => Outcome::RedWin,
            _ if self.rules.max_learner_actions > 0 && self.learner_action_count >= self.rules.max_learner_actions => {
                Outcome::Tie
            }
            _ => Outcome::Ongoing,
        }
    }

    pub fn outcome(&self) -> Outcome {
        self.outcome
    }

    pub fn advance_phase(&self) -> Result<GameState, EngineError> {
        let mut next = self.clone();
        next.advance_phase_in_place()?;
        Ok(next)
    }

    pub fn advance_phase_in_place(&mut self) -> Result<Event, EngineError> {
        if let Some(u) = self.pending_units().next() {
            return Err(EngineError::Phase(format!("{} unit {} has not acted", u.team, u.slot)));
        }
        for u in self.units.iter_mut() {
            u.acted = false;
        }
        self.phase = self.phase.opponent();
        self.turn += 1;
        Ok(Event::PhaseChanged { phase: self.phase, turn: self.turn })
    }
}

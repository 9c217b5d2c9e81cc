use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::{repair_action, Repair, RepairStats};
use crate::encoding::{action_masks, encode_observation, flip_action, flip_state, FlipAxis, OBS_LEN};
use crate::engine::{
    new_game, ActionTriple, EngineError, Event, GameConfig, GameMode, GameState, Team, TeamMember, UnitState,
    TEAM_SIZE,
};
use crate::neural::{Checkpoint, PolicyNet};
use crate::play::{play_episode, Controller, Decision};

#[derive(Debug, Error)]
pub enum MirrorError {
    #[error("checkpoint does not match the game config: {0}")]
    ConfigMismatch(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Red team for Mirror Mode: blue's types, weapons and stats on row-flipped tiles.
pub fn mirror_setup(blue: &[UnitState; TEAM_SIZE]) -> [UnitState; TEAM_SIZE] {
    crate::engine::mirror_of(blue)
}

/// The board as `team` would see it from the blue seat: for red, teams are
/// swapped and rows flipped, so a policy trained as blue can play red.
pub fn perspective_state(state: &GameState, team: Team) -> GameState {
    if team == Team::Blue {
        return state.clone();
    }
    let mut out = flip_state(state, FlipAxis::Rows);
    out.units.rotate_left(TEAM_SIZE);
    for u in out.units.iter_mut() {
        u.team = u.team.opponent();
    }
    out.phase = state.phase.opponent();
    out.rules.learner_team = state.rules.learner_team.opponent();
    out
}

/// Maps an action chosen in the perspective of `team` back onto the real board.
pub fn from_perspective(action: ActionTriple, team: Team) -> ActionTriple {
    match team {
        Team::Blue => action,
        Team::Red => flip_action(action, FlipAxis::Rows),
    }
}

/// One policy decision for the phase team's unit in `slot`: encode from its
/// perspective, masked greedy (or sampled) pick, map back, repair.
/// Returns (executed, raw proposal, repair).
pub fn act(
    policy: &PolicyNet<f32>,
    state: &GameState,
    slot: usize,
    sample: bool,
    rng: &mut ChaCha8Rng,
) -> Result<(ActionTriple, ActionTriple, Repair), EngineError> {
    let team = state.phase;
    let view = perspective_state(state, team);
    let obs = encode_observation(&view, Team::Blue, slot)?;
    let masks = action_masks(&view, Team::Blue, slot)?;
    let x = Array2::from_shape_vec((1, OBS_LEN), obs.0).expect("observation length");
    let pass = policy.forward(x.view(), &[masks.flat()]);
    let chosen = if sample { pass.sample(0, rng) } else { pass.greedy(0) };
    let raw = from_perspective(chosen, team);
    let (executed, repair) = repair_action(state, slot, raw, rng);
    Ok((executed, raw, repair))
}

/// A loaded checkpoint acting as a controller, counting repairs as it goes.
#[derive(Clone, Debug)]
pub struct MirrorAgent {
    pub checkpoint: Checkpoint,
    pub stats: RepairStats,
    pub sample: bool,
    rng: ChaCha8Rng,
}

impl MirrorAgent {
    /// Refuses a checkpoint trained under different rules than `config`.
    pub fn new(checkpoint: Checkpoint, config: &GameConfig, seed: u64) -> Result<Self, MirrorError> {
        if let Some(w) = checkpoint.config_warnings(config).into_iter().next() {
            return Err(MirrorError::ConfigMismatch(w));
        }
        Ok(MirrorAgent { checkpoint, stats: RepairStats::default(), sample: false, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn decide(&mut self, state: &GameState, slot: usize) -> Result<(ActionTriple, Repair), EngineError> {
        let (executed, _, repair) = act(&self.checkpoint.policy, state, slot, self.sample, &mut self.rng)?;
        self.stats.record(repair);
        Ok((executed, repair))
    }
}

impl Controller for MirrorAgent {
    fn choose(&mut self, state: &GameState, slot: usize) -> Result<ActionTriple, EngineError> {
        Ok(self.decide(state, slot)?.0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MirrorReport {
    pub outcome: crate::engine::Outcome,
    pub repairs: RepairStats,
}

/// A Mirror Mode game: the caller plays blue, the agent plays red.
#[derive(Clone, Debug)]
pub struct MirrorSession {
    pub agent: MirrorAgent,
    pub state: GameState,
}

impl MirrorSession {
    pub fn new(
        agent: MirrorAgent,
        config: &GameConfig,
        team: Option<&[TeamMember]>,
        seed: u64,
    ) -> Result<Self, MirrorError> {
        let state = new_game(config, GameMode::Mirror, team, seed)?;
        Ok(MirrorSession { agent, state })
    }

    /// Plays the red phase with the agent; call once blue's phase has been handed over.
    pub fn play_red_phase(&mut self, on_decision: &mut dyn FnMut(&Decision)) -> Result<Vec<Event>, EngineError> {
        if self.state.phase != Team::Red || self.state.outcome.is_over() {
            return Err(EngineError::Phase("not red's phase".into()));
        }
        crate::play::play_phase(&mut self.state, &mut self.agent, on_decision)
    }

    /// Plays the whole game with `blue` controlling the player side.
    pub fn play_out(
        &mut self,
        blue: &mut dyn Controller,
        on_event: &mut dyn FnMut(&Event),
    ) -> Result<MirrorReport, EngineError> {
        play_episode(&mut self.state, blue, &mut self.agent, &mut |_| {}, on_event)?;
        Ok(self.report())
    }

    pub fn report(&self) -> MirrorReport {
        MirrorReport { outcome: self.state.outcome, repairs: self.agent.stats }
    }
}

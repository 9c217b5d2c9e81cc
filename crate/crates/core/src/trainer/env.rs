use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{action_masks, encode_observation, BranchMasks, Observation};
use crate::engine::{new_game, ActionTriple, EngineError, Event, GameConfig, GameMode, GameState, Outcome, Team};
use crate::mirror::{repair_action, Repair, RepairStats};
use crate::standard_ai::{next_unit, run_phase};

pub const KILL_REWARD: f64 = 1.0;
pub const WIN_REWARD: f64 = 1.0;
pub const DEATH_PENALTY: f64 = -1.0;
pub const LOSS_PENALTY: f64 = -1.0;
pub const VALID_ACTION_REWARD: f64 = 0.3;
pub const TIE_PENALTY: f64 = -1.0;

/// Extrinsic reward components earned by one learner step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub valid_action: bool,
    pub kills: u32,
    pub deaths: u32,
    pub win: bool,
    pub loss: bool,
    pub tie: bool,
}

impl RewardBreakdown {
    pub fn total(&self) -> f64 {
        let mut r = 0.0;
        if self.valid_action {
            r += VALID_ACTION_REWARD;
        }
        r += KILL_REWARD * self.kills as f64 + DEATH_PENALTY * self.deaths as f64;
        if self.win {
            r += WIN_REWARD;
        }
        if self.loss {
            r += LOSS_PENALTY;
        }
        if self.tie {
            r += TIE_PENALTY;
        }
        r
    }
}

/// Reward for the learner from the events one of its steps caused,
/// including the opposing phase that step handed over to.
pub fn shaped_reward(events: &[Event], learner: Team, valid_action: bool) -> RewardBreakdown {
    let mut b = RewardBreakdown { valid_action, ..Default::default() };
    for e in events {
        match e {
            Event::Defeated { unit, .. } if unit.team == learner => b.deaths += 1,
            Event::Defeated { .. } => b.kills += 1,
            Event::GameOver { outcome } => match outcome {
                Outcome::Tie => b.tie = true,
                o if o.winner() == Some(learner) => b.win = true,
                Outcome::Ongoing => {}
                _ => b.loss = true,
            },
            _ => {}
        }
    }
    b
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub reward: RewardBreakdown,
    pub executed: ActionTriple,
    pub repair: Repair,
    pub done: bool,
    pub outcome: Outcome,
    /// Cumulative extrinsic reward of the episode that just ended.
    pub episode_reward: Option<f64>,
}

/// Raw proposals that the engine would take after at most fixing a wait's tile.
pub fn counts_as_valid(r: Repair) -> bool {
    matches!(r, Repair::Unchanged | Repair::WaitRetiled)
}

/// One Standard Mode game seen from blue: the learner picks one unit's action
/// per step, and the scripted red phase runs inside the step that ends blue's phase.
#[derive(Clone, Debug)]
pub struct TrainingEnv {
    pub id: usize,
    config: GameConfig,
    base_seed: u64,
    pub episodes: u64,
    pub state: GameState,
    slot: usize,
    rng: ChaCha8Rng,
    pub episode_reward: f64,
    pub repairs: RepairStats,
}

pub const LEARNER: Team = Team::Blue;

/// Seed for game `episode` of env `id`, spread with SplitMix64.
pub fn episode_seed(base: u64, id: usize, episode: u64) -> u64 {
    let mut z = base ^ (id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ episode.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl TrainingEnv {
    pub fn new(id: usize, config: &GameConfig, base_seed: u64) -> Result<Self, EngineError> {
        let state = new_game(config, GameMode::Standard, None, episode_seed(base_seed, id, 0))?;
        let mut env = TrainingEnv {
            id,
            config: config.clone(),
            base_seed,
            episodes: 0,
            state,
            slot: 0,
            rng: ChaCha8Rng::seed_from_u64(episode_seed(base_seed, id, u64::MAX)),
            episode_reward: 0.0,
            repairs: RepairStats::default(),
        };
        env.slot = env.next_slot()?;
        Ok(env)
    }

    fn next_slot(&self) -> Result<usize, EngineError> {
        next_unit(&self.state).ok_or_else(|| EngineError::Phase("learner phase has no pending unit".into()))
    }

    pub fn acting_slot(&self) -> usize {
        self.slot
    }

    pub fn observe(&self) -> Result<(Observation, BranchMasks), EngineError> {
        Ok((encode_observation(&self.state, LEARNER, self.slot)?, action_masks(&self.state, LEARNER, self.slot)?))
    }

    /// Applies the (repaired) proposal; on episode end the env resets itself.
    pub fn step(&mut self, raw: ActionTriple) -> Result<StepResult, EngineError> {
        let (executed, repair) = repair_action(&self.state, self.slot, raw, &mut self.rng);
        self.repairs.record(repair);
        let mut events = self.state.apply_in_place(self.slot, executed)?;
        if !self.state.outcome.is_over() && self.state.phase_complete() {
            events.push(self.state.advance_phase_in_place()?);
            events.extend(run_phase(&mut self.state, self.config.standard_ai.movement)?);
        }
        let reward = shaped_reward(&events, LEARNER, counts_as_valid(repair));
        self.episode_reward += reward.total();
        let outcome = self.state.outcome;
        let mut episode_reward = None;
        if outcome.is_over() {
            episode_reward = Some(self.episode_reward);
            self.episodes += 1;
            self.episode_reward = 0.0;
            self.state = new_game(
                &self.config,
                GameMode::Standard,
                None,
                episode_seed(self.base_seed, self.id, self.episodes),
            )?;
        }
        self.slot = self.next_slot()?;
        Ok(StepResult { reward, executed, repair, done: outcome.is_over(), outcome, episode_reward })
    }
}

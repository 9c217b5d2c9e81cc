//! Batch play: scripted demonstrators against the standard enemy (recording
//! demonstrations), and scripted players against a mirror agent.

use crate::demos::{record_decision, DemoError, DemoRecord};
use crate::engine::{new_game, EngineError, GameConfig, GameMode, Team};
use crate::metrics::{EpisodeRecorder, MatchMetrics, MetricsRow, Role};
use crate::mirror::{MirrorAgent, RepairStats};
use crate::play::{play_episode, Scripted, ScriptedPolicy};

/// Label for the Standard Mode enemy in metrics files.
pub const STANDARD_LABEL: &str = "standard";

/// Seed of game `episode` in a batch started from `seed`.
pub fn game_seed(seed: u64, episode: u32) -> u64 {
    seed.wrapping_add(episode as u64)
}

#[derive(Clone, Debug, Default)]
pub struct SimOutput {
    pub records: Vec<DemoRecord>,
    pub metrics: Vec<MetricsRow>,
    pub totals: MatchMetrics,
}

/// Standard Mode games with `blue` as the player. Blue decisions become
/// demonstration records (four per decision) when `record` is set.
pub fn simulate(
    config: &GameConfig,
    blue: ScriptedPolicy,
    episodes: u32,
    seed: u64,
    session: &str,
    record: bool,
) -> Result<SimOutput, DemoError> {
    let mut player = Scripted::new(blue, seed);
    let mut enemy = Scripted::standard(config.standard_ai.movement);
    let mut rec = EpisodeRecorder::new([(Role::Player, STANDARD_LABEL.into()), (Role::Opponent, blue.to_string())]);
    let mut records = Vec::new();
    for ep in 0..episodes {
        let mut state = new_game(config, GameMode::Standard, None, game_seed(seed, ep))?;
        let mut step = 0u32;
        let mut failure = None;
        play_episode(
            &mut state,
            &mut player,
            &mut enemy,
            &mut |d| {
                if record && d.state.phase == Team::Blue && failure.is_none() {
                    match record_decision(session, ep, step, &d.state, d.slot, d.action) {
                        Ok(rs) => records.extend(rs),
                        Err(e) => failure = Some(e),
                    }
                    step += 1;
                }
            },
            &mut |e| rec.observe(e),
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
    }
    Ok(SimOutput { records, totals: rec.total, metrics: rec.rows })
}

#[derive(Clone, Debug, Default)]
pub struct EvalOutput {
    pub metrics: Vec<MetricsRow>,
    pub totals: MatchMetrics,
    pub repairs: RepairStats,
}

/// Mirror Mode games: `blue` plays the player side, the agent plays red.
pub fn evaluate(
    config: &GameConfig,
    agent: &mut MirrorAgent,
    blue: ScriptedPolicy,
    episodes: u32,
    seed: u64,
    model_label: &str,
) -> Result<EvalOutput, EngineError> {
    let mut player = Scripted::new(blue, seed);
    let mut rec = EpisodeRecorder::new([(Role::Player, model_label.into()), (Role::Agent, blue.to_string())]);
    for ep in 0..episodes {
        let mut state = new_game(config, GameMode::Mirror, None, game_seed(seed, ep))?;
        play_episode(&mut state, &mut player, agent, &mut |_| {}, &mut |e| rec.observe(e))?;
    }
    Ok(EvalOutput { totals: rec.total, metrics: rec.rows, repairs: agent.stats })
}

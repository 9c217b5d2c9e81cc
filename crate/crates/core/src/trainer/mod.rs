//! PPO with optional GAIL reward and behavioral-cloning loss, trained as blue
//! against the scripted enemy over several lockstep environments.

mod config;
mod env;
mod gae;
mod log;

use std::path::{Path, PathBuf};

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{Opponent, TrainerConfig, PRESETS};
pub use env::{
    counts_as_valid, episode_seed, shaped_reward, RewardBreakdown, StepResult, TrainingEnv, DEATH_PENALTY,
    KILL_REWARD, LEARNER, LOSS_PENALTY, TIE_PENALTY, VALID_ACTION_REWARD, WIN_REWARD,
};
pub use gae::{compute_gae, normalize};
pub use log::{LogRow, TrainingLog, LOG_HEADER};

use crate::demos::{DemoDataset, DemoError};
use crate::encoding::{ACTION_ONE_HOT_LEN, OBS_LEN};
use crate::engine::{ActionTriple, ActionType, EngineError, GameConfig, Outcome};
use crate::mirror::RepairStats;
use crate::neural::{
    disc_input, save_checkpoint, Adam, Checkpoint, CheckpointError, Discriminator, Layers, Manifest, PolicyArch,
    PolicyNet, PpoTerms, CHECKPOINT_VERSION, DISC_EPS, DISC_INPUT_LEN,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric failure at step {step}: {detail}")]
    Numeric { step: u64, detail: String },
    #[error("environment {env} failed: {source}")]
    Env { env: usize, source: EngineError },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<DemoError> for TrainError {
    fn from(e: DemoError) -> Self {
        TrainError::Data(e.to_string())
    }
}

impl From<CheckpointError> for TrainError {
    fn from(e: CheckpointError) -> Self {
        match e {
            CheckpointError::Io(io) => TrainError::Io(io),
            other => TrainError::Data(other.to_string()),
        }
    }
}

/// Adversarial reward `−ln(1 − D + ε)`, clipped to [0, 10].
pub fn gail_reward(d: f64) -> f64 {
    (-(1.0 - d + DISC_EPS).ln()).clamp(0.0, 10.0)
}

/// A wait names the acting unit's tile by definition; the discriminator sees it that way.
fn normalized_for_disc(a: ActionTriple, current: usize) -> ActionTriple {
    match a.action_type {
        ActionType::Wait => ActionTriple::wait(current),
        _ => a,
    }
}

/// Demonstrations laid out for minibatch sampling.
#[derive(Clone, Debug)]
pub struct DemoArrays {
    pub obs: Array2<f32>,
    pub masks: Vec<[bool; ACTION_ONE_HOT_LEN]>,
    pub actions: Vec<ActionTriple>,
    pub disc_x: Array2<f32>,
    pub hash: String,
}

impl DemoArrays {
    pub fn from_dataset(d: &DemoDataset) -> Result<DemoArrays, TrainError> {
        if d.records.is_empty() {
            return Err(TrainError::Config("demonstration dataset is empty".into()));
        }
        let n = d.records.len();
        let mut obs = Array2::zeros((n, OBS_LEN));
        let mut disc_x = Array2::zeros((n, DISC_INPUT_LEN));
        let mut masks = Vec::with_capacity(n);
        let mut actions = Vec::with_capacity(n);
        for (i, r) in d.records.iter().enumerate() {
            if !r.observation.is_well_formed() {
                return Err(TrainError::Data(format!("demo record {i} has a malformed observation")));
            }
            obs.row_mut(i).assign(&ndarray::ArrayView1::from(r.observation.as_slice()));
            disc_x.row_mut(i).assign(&ndarray::ArrayView1::from(&disc_input::<f32>(r.observation.as_slice(), &r.action)[..]));
            masks.push(r.masks.flat());
            actions.push(r.action);
        }
        let hash = hex::encode(&Sha256::digest(d.to_bytes())[..16]);
        Ok(DemoArrays { obs, masks, actions, disc_x, hash })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Steps collected in one iteration, in collection order.
#[derive(Clone, Debug, Default)]
pub struct Rollout {
    pub obs: Vec<f32>,
    pub masks: Vec<[bool; ACTION_ONE_HOT_LEN]>,
    /// Sampled proposals, as scored by the policy.
    pub actions: Vec<ActionTriple>,
    pub disc_actions: Vec<ActionTriple>,
    pub logp: Vec<f32>,
    /// steps × signals
    pub values: Vec<Vec<f64>>,
    pub next_values: Vec<Vec<f64>>,
    pub ext_rewards: Vec<f64>,
    pub gail_rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub env_ids: Vec<usize>,
}

impl Rollout {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn obs_row(&self, i: usize) -> &[f32] {
        &self.obs[i * OBS_LEN..(i + 1) * OBS_LEN]
    }
}

#[derive(Clone, Debug, Default)]
struct Window {
    episode_rewards: Vec<f64>,
    wins: u32,
    ties: u32,
    updates: Vec<UpdateStats>,
}

/// Mean losses over one update's minibatches.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub bc_loss: f64,
    pub gail_loss: f64,
}

pub struct Trainer {
    pub config: TrainerConfig,
    pub game: GameConfig,
    pub policy: PolicyNet<f32>,
    pub disc: Option<Discriminator<f32>>,
    policy_opt: Adam<f32>,
    disc_opt: Adam<f32>,
    envs: Vec<TrainingEnv>,
    rng: ChaCha8Rng,
    demos: Option<DemoArrays>,
    pub steps: u64,
    pub updates: u64,
    window: Window,
    last_reward: f64,
    pub log: TrainingLog,
    next_summary: u64,
    last_stats: Option<UpdateStats>,
    lr_progress: u64,
}

impl Trainer {
    pub fn new(config: TrainerConfig, game: GameConfig, demos: Option<&DemoDataset>) -> Result<Trainer, TrainError> {
        config.validate()?;
        game.validate().map_err(|e| TrainError::Config(e.to_string()))?;
        let demos = match demos {
            Some(d) => Some(DemoArrays::from_dataset(d)?),
            None if config.needs_demos() => {
                return Err(TrainError::Config(format!(
                    "preset `{}` uses imitation (gail {}, bc {}) but no demonstrations were given",
                    config.preset, config.gail_strength, config.bc_strength
                )))
            }
            None => None,
        };
        let seed = config.seed;
        let arch = PolicyArch::new(config.ppo_hidden, config.signals().len());
        let policy = PolicyNet::new(arch, seed).map_err(|e| TrainError::Config(e.to_string()))?;
        let disc = if config.gail_enabled() {
            Some(
                Discriminator::new(DISC_INPUT_LEN, config.gail_hidden, seed.wrapping_add(1))
                    .map_err(|e| TrainError::Config(e.to_string()))?,
            )
        } else {
            None
        };
        let envs = (0..config.env_count)
            .map(|i| TrainingEnv::new(i, &game, seed).map_err(|source| TrainError::Env { env: i, source }))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Trainer {
            next_summary: config.summary_interval,
            rng: ChaCha8Rng::seed_from_u64(seed.wrapping_add(2)),
            config,
            game,
            policy,
            disc,
            policy_opt: Adam::new(),
            disc_opt: Adam::new(),
            envs,
            demos,
            steps: 0,
            updates: 0,
            window: Window::default(),
            last_reward: 0.0,
            log: TrainingLog::default(),
            last_stats: None,
            lr_progress: 0,
        })
    }

    /// Mismatches between the demonstrations' rule set and the training config.
    pub fn demo_warnings(game: &GameConfig, demos: &DemoDataset) -> Vec<String> {
        demos.header.mismatches(game)
    }

    pub fn repair_stats(&self) -> RepairStats {
        let mut total = RepairStats::default();
        for e in &self.envs {
            let r = e.repairs;
            total.proposals += r.proposals;
            total.attack_retargeted += r.attack_retargeted;
            total.attack_to_move += r.attack_to_move;
            total.attack_to_wait += r.attack_to_wait;
            total.move_to_wait += r.move_to_wait;
            total.wait_retiled += r.wait_retiled;
        }
        total
    }

    /// Linear decay by the step count at the start of the current iteration.
    fn lr_scale(&self) -> f64 {
        (1.0 - self.lr_progress as f64 / self.config.total_steps as f64).max(0.0)
    }

    /// Steps the envs round-robin, one batched forward pass per sweep, until
    /// `n` learner decisions are collected.
    pub fn collect_rollouts(&mut self, n: usize) -> Result<Rollout, TrainError> {
        let heads = self.policy.arch.value_heads;
        let mut ro = Rollout::default();
        let mut per_env: Vec<Vec<usize>> = vec![Vec::new(); self.envs.len()];
        while ro.len() < n {
            let k = self.envs.len().min(n - ro.len());
            let mut obs = Array2::<f32>::zeros((k, OBS_LEN));
            let mut masks = Vec::with_capacity(k);
            for (i, env) in self.envs[..k].iter().enumerate() {
                let (o, m) = env.observe().map_err(|source| TrainError::Env { env: i, source })?;
                obs.row_mut(i).assign(&ndarray::ArrayView1::from(o.as_slice()));
                masks.push(m.flat());
            }
            let pass = self.policy.forward(obs.view(), &masks);
            for i in 0..k {
                let raw = pass.sample(i, &mut self.rng);
                let current = self.envs[i].state.unit(LEARNER, self.envs[i].acting_slot()).position;
                let res = self.envs[i].step(raw).map_err(|source| TrainError::Env { env: i, source })?;
                per_env[i].push(ro.len());
                ro.obs.extend_from_slice(obs.row(i).as_slice().expect("contiguous"));
                ro.masks.push(masks[i]);
                ro.actions.push(raw);
                ro.disc_actions.push(normalized_for_disc(raw, current));
                ro.logp.push(pass.log_prob(i, &raw));
                ro.values.push((0..heads).map(|s| pass.values[[i, s]] as f64).collect());
                ro.ext_rewards.push(res.reward.total());
                ro.dones.push(res.done);
                ro.env_ids.push(i);
                if let Some(r) = res.episode_reward {
                    self.window.episode_rewards.push(r);
                    match res.outcome {
                        Outcome::Tie => self.window.ties += 1,
                        o if o.winner() == Some(LEARNER) => self.window.wins += 1,
                        _ => {}
                    }
                }
            }
        }
        // Bootstrap values for each env's state after its last collected step.
        let mut boot_obs = Array2::<f32>::zeros((self.envs.len(), OBS_LEN));
        let mut boot_masks = Vec::new();
        for (i, env) in self.envs.iter().enumerate() {
            let (o, m) = env.observe().map_err(|source| TrainError::Env { env: i, source })?;
            boot_obs.row_mut(i).assign(&ndarray::ArrayView1::from(o.as_slice()));
            boot_masks.push(m.flat());
        }
        let boot = self.policy.forward(boot_obs.view(), &boot_masks);
        ro.next_values = vec![Vec::new(); ro.len()];
        for (e, idx) in per_env.iter().enumerate() {
            for (j, &t) in idx.iter().enumerate() {
                ro.next_values[t] = match idx.get(j + 1) {
                    Some(&u) => ro.values[u].clone(),
                    None => (0..heads).map(|s| boot.values[[e, s]] as f64).collect(),
                };
            }
        }
        self.lr_progress = self.steps;
        self.steps += ro.len() as u64;
        Ok(ro)
    }

    fn disc_batch(&self, ro: &Rollout, idx: &[usize]) -> Array2<f32> {
        let mut x = Array2::zeros((idx.len(), DISC_INPUT_LEN));
        for (r, &i) in idx.iter().enumerate() {
            x.row_mut(r).assign(&ndarray::ArrayView1::from(&disc_input::<f32>(ro.obs_row(i), &ro.disc_actions[i])[..]));
        }
        x
    }

    fn attach_gail_rewards(&self, ro: &mut Rollout) -> Result<(), TrainError> {
        ro.gail_rewards = vec![0.0; ro.len()];
        let Some(disc) = &self.disc else { return Ok(()) };
        let idx: Vec<usize> = (0..ro.len()).collect();
        let x = self.disc_batch(ro, &idx);
        let pass = disc.forward(x.view()).map_err(|e| TrainError::Config(e.to_string()))?;
        for (r, d) in ro.gail_rewards.iter_mut().zip(pass.d.iter()) {
            *r = gail_reward(*d as f64);
        }
        Ok(())
    }

    /// Per-signal GAE, then the strength-weighted sum, normalized.
    /// Returns (advantages, returns as steps × signals).
    pub fn advantages(&self, ro: &Rollout) -> (Vec<f64>, Array2<f64>) {
        let signals = self.config.signals();
        let n = ro.len();
        let mut total = vec![0.0; n];
        let mut returns = Array2::zeros((n, signals.len()));
        let mut by_env: Vec<Vec<usize>> = vec![Vec::new(); self.envs.len()];
        for (t, &e) in ro.env_ids.iter().enumerate() {
            by_env[e].push(t);
        }
        for (s, name) in signals.iter().enumerate() {
            let (gamma, strength, rewards) = match *name {
                "extrinsic" => (self.config.extrinsic_gamma, self.config.extrinsic_strength, &ro.ext_rewards),
                _ => (self.config.gail_gamma, self.config.gail_strength, &ro.gail_rewards),
            };
            for idx in &by_env {
                let pick = |v: &dyn Fn(usize) -> f64| idx.iter().map(|&t| v(t)).collect::<Vec<f64>>();
                let (adv, ret) = compute_gae(
                    &pick(&|t| rewards[t]),
                    &pick(&|t| ro.values[t][s]),
                    &pick(&|t| ro.next_values[t][s]),
                    &idx.iter().map(|&t| ro.dones[t]).collect::<Vec<_>>(),
                    gamma,
                    self.config.gae_lambda,
                    self.config.time_horizon,
                );
                for (j, &t) in idx.iter().enumerate() {
                    total[t] += strength * adv[j];
                    returns[[t, s]] = ret[j];
                }
            }
        }
        normalize(&mut total);
        (total, returns)
    }

    /// One BCE step on balanced expert/policy batches; returns the loss measured
    /// before the step.
    pub fn update_discriminator(&mut self, expert: &Array2<f32>, policy: &Array2<f32>) -> Result<f64, TrainError> {
        let lr = self.config.gail_lr * self.lr_scale();
        let Some(disc) = self.disc.as_mut() else { return Ok(0.0) };
        let x = ndarray::concatenate(Axis(0), &[expert.view(), policy.view()]).expect("same width");
        let labels: Vec<f32> = (0..x.nrows()).map(|i| if i < expert.nrows() { 1.0 } else { 0.0 }).collect();
        let pass = disc.forward(x.view()).map_err(|e| TrainError::Config(e.to_string()))?;
        let mut grad = disc.zeros_like();
        let loss = disc.bce_backward(&pass, &labels, 1.0, &mut grad);
        self.disc_opt.step(disc, &grad, lr);
        if let Some(name) = disc.first_non_finite() {
            return Err(TrainError::Numeric { step: self.steps, detail: format!("discriminator tensor {name}") });
        }
        Ok(loss)
    }

    /// Epochs of shuffled minibatch PPO steps, each with its BC term and discriminator step.
    pub fn ppo_update(&mut self, mut ro: Rollout) -> Result<UpdateStats, TrainError> {
        self.attach_gail_rewards(&mut ro)?;
        let (adv, returns) = self.advantages(&ro);
        let n = ro.len();
        let mb = self.config.ppo_batch.min(n);
        let lr = self.config.ppo_lr * self.lr_scale();
        let pretrain = (self.updates as usize) < self.config.bc_pretrain_updates;
        let (pc, vc, ec) = if pretrain {
            (0.0, 0.0, 0.0)
        } else {
            (1.0, self.config.value_coef as f32, self.config.entropy_beta as f32)
        };
        let mut stats = UpdateStats::default();
        let mut batches = 0usize;
        let mut order: Vec<usize> = (0..n).collect();
        for _ in 0..self.config.epochs {
            order.shuffle(&mut self.rng);
            for chunk in order.chunks(mb).filter(|c| c.len() == mb) {
                let mut obs = Array2::<f32>::zeros((mb, OBS_LEN));
                for (r, &i) in chunk.iter().enumerate() {
                    obs.row_mut(r).assign(&ndarray::ArrayView1::from(ro.obs_row(i)));
                }
                let masks: Vec<_> = chunk.iter().map(|&i| ro.masks[i]).collect();
                let actions: Vec<_> = chunk.iter().map(|&i| ro.actions[i]).collect();
                let old: Vec<f32> = chunk.iter().map(|&i| ro.logp[i]).collect();
                let a: Vec<f32> = chunk.iter().map(|&i| adv[i] as f32).collect();
                let ret = returns.select(Axis(0), chunk).mapv(|v| v as f32);
                let pass = self.policy.forward(obs.view(), &masks);
                let mut grad = self.policy.zeros_like();
                let rep = self.policy.ppo_backward(
                    &pass,
                    &PpoTerms {
                        actions: &actions,
                        old_logp: &old,
                        advantages: &a,
                        returns: ret.view(),
                        clip_eps: self.config.clip_eps as f32,
                        policy_coef: pc,
                        value_coef: vc,
                        entropy_coef: ec,
                    },
                    &mut grad,
                );
                stats.policy_loss += rep.policy_loss;
                stats.value_loss += rep.value_loss;
                stats.entropy += rep.entropy;

                let mut expert_idx = Vec::new();
                if let Some(demos) = &self.demos {
                    expert_idx = (0..mb).map(|_| self.rng.gen_range(0..demos.len())).collect();
                    if self.config.bc_enabled() {
                        let dobs = demos.obs.select(Axis(0), &expert_idx);
                        let dmasks: Vec<_> = expert_idx.iter().map(|&i| demos.masks[i]).collect();
                        let dact: Vec<_> = expert_idx.iter().map(|&i| demos.actions[i]).collect();
                        let dpass = self.policy.forward(dobs.view(), &dmasks);
                        stats.bc_loss +=
                            self.policy.bc_backward(&dpass, &dact, self.config.bc_strength as f32, &mut grad);
                    }
                }
                if let Some(name) = grad.first_non_finite() {
                    return Err(TrainError::Numeric { step: self.steps, detail: format!("policy gradient {name}") });
                }
                self.policy_opt.step(&mut self.policy, &grad, lr);
                if let Some(name) = self.policy.first_non_finite() {
                    return Err(TrainError::Numeric { step: self.steps, detail: format!("policy tensor {name}") });
                }
                if self.disc.is_some() {
                    let demos = self.demos.as_ref().expect("gail requires demos");
                    let expert = demos.disc_x.select(Axis(0), &expert_idx);
                    let policy_x = self.disc_batch(&ro, chunk);
                    stats.gail_loss += self.update_discriminator(&expert, &policy_x)?;
                }
                batches += 1;
            }
        }
        let b = batches.max(1) as f64;
        stats.policy_loss /= b;
        stats.value_loss /= b;
        stats.entropy /= b;
        stats.bc_loss /= b;
        stats.gail_loss /= b;
        for v in [stats.policy_loss, stats.value_loss, stats.entropy, stats.bc_loss, stats.gail_loss] {
            if !v.is_finite() {
                return Err(TrainError::Numeric { step: self.steps, detail: format!("loss report {stats:?}") });
            }
        }
        self.updates += 1;
        Ok(stats)
    }

    /// One collect + update iteration; returns the log rows it completed.
    pub fn iterate(&mut self) -> Result<Vec<LogRow>, TrainError> {
        let remaining = self.config.total_steps.saturating_sub(self.steps) as usize;
        let n = self.config.buffer_size.min(remaining);
        if n == 0 {
            return Ok(Vec::new());
        }
        let ro = self.collect_rollouts(n)?;
        let stats = self.ppo_update(ro)?;
        self.window.updates.push(stats);
        let mut rows = Vec::new();
        while self.steps >= self.next_summary {
            rows.push(self.summarize(self.next_summary));
            self.next_summary += self.config.summary_interval;
        }
        self.log.rows.extend_from_slice(&rows);
        Ok(rows)
    }

    fn summarize(&mut self, step: u64) -> LogRow {
        let w = std::mem::take(&mut self.window);
        let episodes = w.episode_rewards.len();
        if episodes > 0 {
            self.last_reward = w.episode_rewards.iter().sum::<f64>() / episodes as f64;
        }
        let mut row = LogRow { step, mean_cum_reward: self.last_reward, ..Default::default() };
        if episodes > 0 {
            row.win_rate = w.wins as f64 / episodes as f64;
            row.tie_rate = w.ties as f64 / episodes as f64;
        }
        let u = if w.updates.is_empty() { self.last_update_stats() } else { mean_stats(&w.updates) };
        row.gail_loss = u.gail_loss;
        row.bc_loss = u.bc_loss;
        row.policy_loss = u.policy_loss;
        row.value_loss = u.value_loss;
        row.entropy = u.entropy;
        self.window.updates.clear();
        self.last_stats = Some(u);
        row
    }

    fn last_update_stats(&self) -> UpdateStats {
        self.last_stats.unwrap_or_default()
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            manifest: Manifest {
                format_version: CHECKPOINT_VERSION,
                policy: self.policy.arch.clone(),
                value_signals: self.config.signals().iter().map(|s| s.to_string()).collect(),
                disc_hidden: self.disc.as_ref().map(|d| d.hidden()),
                training_config: serde_json::to_value(&self.config).expect("config serializes"),
                game_config_hash: self.game.hash(),
                demo_hash: self.demos.as_ref().map(|d| d.hash.clone()),
                step: self.steps,
            },
            policy: self.policy.clone(),
            disc: self.disc.clone(),
        }
    }

    pub fn done(&self) -> bool {
        self.steps >= self.config.total_steps
    }
}

fn mean_stats(us: &[UpdateStats]) -> UpdateStats {
    let n = us.len() as f64;
    let mut m = UpdateStats::default();
    for u in us {
        m.policy_loss += u.policy_loss / n;
        m.value_loss += u.value_loss / n;
        m.entropy += u.entropy / n;
        m.bc_loss += u.bc_loss / n;
        m.gail_loss += u.gail_loss / n;
    }
    m
}

/// Files a training run leaves in its output directory.
#[derive(Clone, Debug)]
pub struct TrainOutputs {
    pub dir: PathBuf,
    pub checkpoint: PathBuf,
    pub log: PathBuf,
    pub config: PathBuf,
    pub warnings: Vec<String>,
    pub repairs: RepairStats,
}

pub const CHECKPOINT_FILE: &str = "checkpoint.mmck";
pub const LOG_FILE: &str = "training_log.csv";
pub const CONFIG_FILE: &str = "config.json";

/// Runs a full training job, writing periodic and final checkpoints, the log
/// CSV and the resolved config into `out`. `on_row` sees each log row as it lands.
pub fn train(
    config: &TrainerConfig,
    game: &GameConfig,
    demos: Option<&Path>,
    out: &Path,
    on_row: &mut dyn FnMut(&LogRow),
) -> Result<TrainOutputs, TrainError> {
    config.validate()?;
    let dataset = match demos {
        Some(p) => Some(DemoDataset::load(p).map_err(|e| TrainError::Data(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let warnings = dataset.as_ref().map(|d| Trainer::demo_warnings(game, d)).unwrap_or_default();
    let mut trainer = Trainer::new(config.clone(), game.clone(), dataset.as_ref())?;
    std::fs::create_dir_all(out)
        .map_err(|e| TrainError::Config(format!("cannot create output directory {}: {e}", out.display())))?;
    let config_path = out.join(CONFIG_FILE);
    std::fs::write(&config_path, serde_json::to_string_pretty(config).expect("config serializes"))?;
    let log_path = out.join(LOG_FILE);
    let mut next_ck = config.checkpoint_interval;
    while !trainer.done() {
        for row in trainer.iterate()? {
            on_row(&row);
        }
        if config.checkpoint_interval > 0 && trainer.steps >= next_ck && !trainer.done() {
            save_checkpoint(&trainer.checkpoint(), &out.join(format!("checkpoint-{}.mmck", trainer.steps)))?;
            std::fs::write(&log_path, trainer.log.to_csv())?;
            while next_ck <= trainer.steps {
                next_ck += config.checkpoint_interval;
            }
        }
    }
    let ck_path = out.join(CHECKPOINT_FILE);
    save_checkpoint(&trainer.checkpoint(), &ck_path)?;
    std::fs::write(&log_path, trainer.log.to_csv())?;
    Ok(TrainOutputs {
        dir: out.to_path_buf(),
        checkpoint: ck_path,
        log: log_path,
        config: config_path,
        warnings,
        repairs: trainer.repair_stats(),
    })
}

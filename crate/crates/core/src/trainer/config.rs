use serde::{Deserialize, Serialize};

use super::TrainError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Opponent {
    StandardAi,
}

/// Every knob of a training run. Defaults are the `baseline` preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    pub preset: String,
    pub ppo_lr: f64,
    pub ppo_batch: usize,
    pub ppo_hidden: usize,
    pub buffer_size: usize,
    pub time_horizon: usize,
    pub epochs: usize,
    pub clip_eps: f64,
    pub gae_lambda: f64,
    pub extrinsic_gamma: f64,
    pub extrinsic_strength: f64,
    pub gail_lr: f64,
    pub gail_hidden: usize,
    pub gail_gamma: f64,
    pub gail_strength: f64,
    pub bc_strength: f64,
    /// Leading updates trained on the BC term alone.
    pub bc_pretrain_updates: usize,
    pub entropy_beta: f64,
    pub value_coef: f64,
    pub env_count: usize,
    pub total_steps: u64,
    pub summary_interval: u64,
    /// 0 writes only the final checkpoint.
    pub checkpoint_interval: u64,
    pub seed: u64,
    pub opponent: Opponent,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            preset: "baseline".into(),
            ppo_lr: 0.0003,
            ppo_batch: 128,
            ppo_hidden: 256,
            buffer_size: 2048,
            time_horizon: 64,
            epochs: 3,
            clip_eps: 0.2,
            gae_lambda: 0.95,
            extrinsic_gamma: 0.99,
            extrinsic_strength: 0.9,
            gail_lr: 0.0001,
            gail_hidden: 64,
            gail_gamma: 0.85,
            gail_strength: 1.0,
            bc_strength: 0.5,
            bc_pretrain_updates: 0,
            entropy_beta: 0.005,
            value_coef: 0.5,
            env_count: 10,
            total_steps: 200_000,
            summary_interval: 2048,
            checkpoint_interval: 50_000,
            seed: 0,
            opponent: Opponent::StandardAi,
        }
    }
}

pub const PRESETS: [&str; 6] = ["ppo_only", "ppo_gail", "ppo_gail_bc", "baseline", "baseline_plus", "finetune_pick"];

impl TrainerConfig {
    pub fn preset(name: &str) -> Result<TrainerConfig, TrainError> {
        let base = TrainerConfig::default();
        let mut c = match name {
            "baseline" => base,
            "ppo_only" => TrainerConfig { extrinsic_strength: 1.0, gail_strength: 0.0, bc_strength: 0.0, ..base },
            "ppo_gail" => TrainerConfig { extrinsic_strength: 0.0, bc_strength: 0.0, ..base },
            "ppo_gail_bc" => TrainerConfig { extrinsic_strength: 0.0, ..base },
            "baseline_plus" => TrainerConfig { gail_hidden: 128, ppo_batch: 256, ..base },
            "finetune_pick" => TrainerConfig { bc_strength: 0.4, extrinsic_strength: 0.5, ..base },
            other => {
                return Err(TrainError::Config(format!("unknown preset `{other}` (known: {})", PRESETS.join(", "))))
            }
        };
        c.preset = name.to_string();
        Ok(c)
    }

    pub fn from_json(text: &str) -> Result<TrainerConfig, TrainError> {
        let c: TrainerConfig = serde_json::from_str(text).map_err(|e| TrainError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Applies `key=value` overrides; values parse as JSON, falling back to a string.
    pub fn with_overrides<'a>(&self, pairs: impl IntoIterator<Item = &'a str>) -> Result<TrainerConfig, TrainError> {
        let mut v = serde_json::to_value(self).expect("config serializes");
        for pair in pairs {
            let (k, raw) = pair
                .split_once('=')
                .ok_or_else(|| TrainError::Config(format!("override `{pair}` is not key=value")))?;
            let obj = v.as_object_mut().expect("config is an object");
            if !obj.contains_key(k) {
                return Err(TrainError::Config(format!("unknown config field `{k}`")));
            }
            let val = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
            obj.insert(k.to_string(), val);
        }
        let c: TrainerConfig = serde_json::from_value(v).map_err(|e| TrainError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn gail_enabled(&self) -> bool {
        self.gail_strength > 0.0
    }

    pub fn bc_enabled(&self) -> bool {
        self.bc_strength > 0.0
    }

    pub fn needs_demos(&self) -> bool {
        self.gail_enabled() || self.bc_enabled()
    }

    /// Reward signals with a value head: extrinsic always, GAIL when enabled.
    pub fn signals(&self) -> Vec<&'static str> {
        let mut s = vec!["extrinsic"];
        if self.gail_enabled() {
            s.push("gail");
        }
        s
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::Config(m));
        for (name, v) in [
            ("extrinsic_strength", self.extrinsic_strength),
            ("gail_strength", self.gail_strength),
            ("bc_strength", self.bc_strength),
            ("entropy_beta", self.entropy_beta),
            ("value_coef", self.value_coef),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a finite value ≥ 0, got {v}"));
            }
        }
        for (name, v) in [("extrinsic_gamma", self.extrinsic_gamma), ("gail_gamma", self.gail_gamma)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad(format!("gae_lambda must lie in [0, 1], got {}", self.gae_lambda));
        }
        if !(self.ppo_lr > 0.0 && self.gail_lr > 0.0) {
            return bad("learning rates must be positive".into());
        }
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return bad(format!("clip_eps must lie in (0, 1), got {}", self.clip_eps));
        }
        for (name, v) in [
            ("ppo_batch", self.ppo_batch),
            ("ppo_hidden", self.ppo_hidden),
            ("buffer_size", self.buffer_size),
            ("time_horizon", self.time_horizon),
            ("epochs", self.epochs),
            ("gail_hidden", self.gail_hidden),
            ("env_count", self.env_count),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.total_steps == 0 || self.summary_interval == 0 {
            return bad("total_steps and summary_interval must be at least 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for p in PRESETS {
            let c = TrainerConfig::preset(p).unwrap();
            assert_eq!(c.preset, p);
            c.validate().unwrap();
        }
        assert!(TrainerConfig::preset("nope").is_err());
    }

    #[test]
    fn ppo_only_disables_imitation() {
        let c = TrainerConfig::preset("ppo_only").unwrap();
        assert_eq!((c.gail_strength, c.bc_strength), (0.0, 0.0));
        assert!(!c.needs_demos());
        assert_eq!(c.signals(), vec!["extrinsic"]);
    }

    #[test]
    fn overrides_apply_and_validate() {
        let c = TrainerConfig::default().with_overrides(["total_steps=5000", "seed=7"]).unwrap();
        assert_eq!((c.total_steps, c.seed), (5000, 7));
        assert!(TrainerConfig::default().with_overrides(["gail_gamma=1.5"]).is_err());
        assert!(TrainerConfig::default().with_overrides(["warp=9"]).is_err());
        assert!(TrainerConfig::default().with_overrides(["seed"]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = TrainerConfig::preset("baseline_plus").unwrap();
        let back = TrainerConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(TrainerConfig::from_json(r#"{"nonsense": 1}"#).is_err());
    }
}

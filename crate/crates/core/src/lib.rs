//! Grid tactics engine, scripted enemy, demonstration pipeline and a
//! PPO + GAIL + behavioral-cloning trainer for enemies that imitate a player.

pub mod demos;
pub mod encoding;
pub mod engine;
pub mod metrics;
pub mod mirror;
pub mod neural;
pub mod play;
pub mod sim;
pub mod standard_ai;
pub mod trainer;

//! End-to-end acceptance checks, one PASS/FAIL line each.
//!
//! Runs without the libtest harness. An optional argument filters criteria
//! by substring. Failures are reported but only fail the process when
//! `ACCEPTANCE_STRICT=1` is set.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::gradcheck::{check, ALL_TERMS};
use common::oracles::{flood_fill_reach, random_playable_state, random_state, resolve_combat};
use mirrormode::demos::{AugTag, DemoDataset, DemoHeader, DemoRecord};
use mirrormode::encoding::{action_masks, flip_action, flip_state, FlipAxis, OBS_LEN};
use mirrormode::engine::{
    effectiveness_multiplier, forecast, new_game, triangle_multiplier, ActionTriple, GameConfig, GameMode, MoveType,
    Outcome, Stats, Team, UnitSpec, Weapon, FOLLOW_UP_THRESHOLD, TEAM_SIZE,
};
use mirrormode::mirror::{act, MirrorAgent};
use mirrormode::neural::{PolicyArch, PolicyNet};
use mirrormode::play::{legal_actions, ScriptedPolicy};
use mirrormode::sim::{evaluate, simulate};
use mirrormode::trainer::{self, shaped_reward, Trainer, TrainerConfig};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ENGINE_STATES: usize = 10_000;
const COMBAT_MATCHUPS: usize = 1_000;
const ENGINE_TIME_LIMIT: Duration = Duration::from_secs(60);
const MASKED_ACTIONS: usize = 100_000;
const AUGMENT_PAIRS: usize = 1_000;
const GRAD_TOL: f64 = 1e-4;
const GRAD_SEEDS: u64 = 8;
const GRAD_TIME_LIMIT: Duration = Duration::from_secs(120);
const BC_DECISIONS: usize = 2_000;
const BC_HELD_OUT: usize = 500;
const BC_STEPS: u64 = 20_000;
const BC_MIN_AGREEMENT: f64 = 0.85;
const PPO_STEPS: u64 = 100_000;
const PPO_SEED: u64 = 0;
const PPO_MIN_GAIN: f64 = 0.5;
const GAIL_STEPS: u64 = 100_000;
const GAIL_START_TOL: f64 = 0.05;
const GAIL_FINAL_RANGE: (f64, f64) = (0.05, 0.6);
const SEP_STEPS: u64 = 100_000;
const SEP_DEMO_EPISODES: u32 = 5;
const SEP_DEMO_SEED: u64 = 7;
const SEP_EVAL_EPISODES: u32 = 20;
const SEP_EVAL_SEED: u64 = 900;
const DETERMINISM_STEPS: u64 = 10_000;

type Verdict = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria: [Criterion; 11] = [
        ("engine-correctness", engine_correctness),
        ("rules-constants", rules_constants),
        ("mask-legality", mask_legality),
        ("augmentation-equivariance", augmentation_equivariance),
        ("gradient-check", gradient_check),
        ("bc-recovery", bc_recovery),
        ("ppo-trend", ppo_trend),
        ("gail-dynamics", gail_dynamics),
        ("imitation-separation", imitation_separation),
        ("preset-fidelity", preset_fidelity),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        if filter.as_deref().is_some_and(|p| !name.contains(p)) {
            continue;
        }
        let t0 = Instant::now();
        let (pass, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("{verdict} {name:<26} {detail} [{:.1}s]", t0.elapsed().as_secs_f64());
        if !pass {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        return;
    }
    println!("acceptance: {} failed: {}", failed.len(), failed.join(", "));
    if std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn engine_correctness() -> Verdict {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xE46);
    let mut queries = 0usize;
    for i in 0..ENGINE_STATES {
        let s = random_state(&mut rng);
        for u in s.units.iter().filter(|u| u.alive() && !u.acted) {
            let got: BTreeSet<usize> = s.reachable_tiles(u.team, u.slot).map_err(err)?.iter().collect();
            if got != flood_fill_reach(&s, u) {
                return Ok((false, format!("reach mismatch in state {i}, {} unit {}", u.team, u.slot)));
            }
            queries += 1;
        }
    }
    let mut matchups = 0usize;
    while matchups < COMBAT_MATCHUPS {
        let s = random_playable_state(&mut rng);
        for slot in (0..TEAM_SIZE).filter(|&k| s.unit(s.phase, k).alive()) {
            let options = s.attackable_targets(s.phase, slot).map_err(err)?;
            let Some(o) = options.first() else { continue };
            let tile = o.launch_tiles.iter().next().expect("launch tile");
            let a = s.unit(s.phase, slot);
            let d = s.unit(s.phase.opponent(), o.target);
            let fc = s.combat_forecast(a.id(), d.id()).map_err(err)?;
            let (next, _) = s.apply_action(slot, ActionTriple::attack(o.target, tile)).map_err(err)?;
            let applied = (next.unit(a.team, a.slot).current_hp, next.unit(d.team, d.slot).current_hp);
            let oracle = resolve_combat(&a.spec, a.current_hp, &d.spec, d.current_hp);
            if (fc.projected_attacker_hp, fc.projected_defender_hp) != applied || applied != oracle {
                return Ok((false, format!("combat mismatch: forecast/apply/oracle differ at matchup {matchups}")));
            }
            matchups += 1;
        }
    }
    let dt = t0.elapsed();
    Ok((
        dt < ENGINE_TIME_LIMIT,
        format!("{ENGINE_STATES} states ({queries} reach queries), {matchups} matchups, {:.1}s", dt.as_secs_f64()),
    ))
}

fn rules_constants() -> Verdict {
    use Weapon::*;
    let mut bad = Vec::new();
    let mut expect = |what: String, ok: bool| {
        if !ok {
            bad.push(what);
        }
    };
    let beats = [(Sword, Axe), (Axe, Lance), (Lance, Sword)];
    for a in Weapon::ALL {
        for d in Weapon::ALL {
            let want = if beats.contains(&(a, d)) {
                1.2
            } else if beats.contains(&(d, a)) {
                0.8
            } else {
                1.0
            };
            expect(format!("triangle {a:?}/{d:?}"), triangle_multiplier(a, d) == want);
        }
        for m in MoveType::ALL {
            let want = if a == Bow && m == MoveType::Flying { 1.5 } else { 1.0 };
            expect(format!("effectiveness {a:?}/{m:?}"), effectiveness_multiplier(a, m) == want);
        }
        let want = if matches!(a, Bow | Magic) { 2 } else { 1 };
        expect(format!("range {a:?}"), a.range() == want);
    }
    expect("follow-up threshold".into(), FOLLOW_UP_THRESHOLD == 5);
    let unit = |spd| UnitSpec { move_type: MoveType::Infantry, weapon: Sword, stats: Stats { hp: 99, atk: 30, def: 10, res: 10, spd } };
    expect("speed gap 5 follows up".into(), forecast(&unit(30), 99, &unit(25), 99).attacker_followup);
    expect("speed gap 4 does not".into(), !forecast(&unit(29), 99, &unit(25), 99).attacker_followup);
    expect("defender follow-up".into(), forecast(&unit(25), 99, &unit(30), 99).defender_followup);

    expect("kill reward".into(), trainer::KILL_REWARD == 1.0);
    expect("win reward".into(), trainer::WIN_REWARD == 1.0);
    expect("death penalty".into(), trainer::DEATH_PENALTY == -1.0);
    expect("loss penalty".into(), trainer::LOSS_PENALTY == -1.0);
    expect("valid-action reward".into(), trainer::VALID_ACTION_REWARD == 0.3);
    expect("tie penalty".into(), trainer::TIE_PENALTY == -1.0);
    let cfg = GameConfig::default();
    expect("tie cap".into(), cfg.max_learner_actions == 20);
    let mut s = new_game(&cfg, GameMode::Standard, None, 3).map_err(err)?;
    s.learner_action_count = 19;
    let here = s.unit(Team::Blue, 0).position;
    let events = s.apply_in_place(0, ActionTriple::wait(here)).map_err(err)?;
    expect("20th learner action ties".into(), s.outcome == Outcome::Tie);
    let r = shaped_reward(&events, Team::Blue, true);
    expect("tie step reward".into(), r.tie && (r.total() - (0.3 - 1.0)).abs() < 1e-12);

    Ok(match bad.is_empty() {
        true => (true, "triangle, effectiveness, ranges, follow-up, rewards, tie cap".into()),
        false => (false, format!("mismatched: {}", bad.join(", "))),
    })
}

fn mask_legality() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3A5C);
    let nets: Vec<PolicyNet<f32>> =
        (0..8).map(|k| PolicyNet::new(PolicyArch::new(32, 1), k).map_err(err)).collect::<Result<_, _>>()?;
    let (mut done, mut rejected, mut repaired) = (0usize, 0usize, 0usize);
    while done < MASKED_ACTIONS {
        let s = random_playable_state(&mut rng);
        let net = &nets[rng.gen_range(0..nets.len())];
        for slot in (0..TEAM_SIZE).filter(|&k| s.unit(s.phase, k).alive()) {
            let (executed, _, repair) = act(net, &s, slot, true, &mut rng).map_err(err)?;
            if s.apply_action(slot, executed).is_err() {
                rejected += 1;
            }
            repaired += usize::from(repair.was_illegal());
            done += 1;
        }
    }
    Ok((rejected == 0, format!("{done} sampled actions, {repaired} repaired, {rejected} rejected")))
}

fn augmentation_equivariance() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF11B);
    for i in 0..AUGMENT_PAIRS {
        let s = random_playable_state(&mut rng);
        let slots: Vec<usize> = (0..TEAM_SIZE).filter(|&k| s.unit(s.phase, k).alive()).collect();
        let slot = slots[rng.gen_range(0..slots.len())];
        let options = legal_actions(&s, slot);
        let a = options[rng.gen_range(0..options.len())];
        for axis in FlipAxis::ALL {
            let fs = flip_state(&s, axis);
            let fa = flip_action(a, axis);
            let masks = action_masks(&fs, fs.phase, slot).map_err(err)?;
            if !fs.is_legal(slot, &fa) || !masks.admits(&fa) {
                return Ok((false, format!("pair {i}: {a:?} not legal after {axis:?} flip")));
            }
            if flip_state(&fs, axis) != s || flip_action(fa, axis) != a {
                return Ok((false, format!("pair {i}: double {axis:?} flip is not the identity")));
            }
        }
    }
    Ok((true, format!("{AUGMENT_PAIRS} pairs x 3 axes")))
}

fn gradient_check() -> Verdict {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for term in ALL_TERMS {
        for seed in 0..GRAD_SEEDS {
            worst = worst.max(check(term, seed));
        }
    }
    let dt = t0.elapsed();
    Ok((
        worst <= GRAD_TOL && dt < GRAD_TIME_LIMIT,
        format!("5 loss terms x {GRAD_SEEDS} seeds, max rel err {worst:.2e} (tol {GRAD_TOL:.0e})"),
    ))
}

fn defensive_decisions(game: &GameConfig, first_seed: u64, n: usize) -> Result<Vec<DemoRecord>, String> {
    let mut out = Vec::new();
    let mut seed = first_seed;
    while out.len() < 4 * n {
        out.extend(simulate(game, ScriptedPolicy::Defensive, 1, seed, "bc", true).map_err(err)?.records);
        seed += 1;
    }
    out.truncate(4 * n);
    Ok(out)
}

fn bc_recovery() -> Verdict {
    let game = GameConfig::default();
    let mut d = DemoDataset::new(DemoHeader::for_config(&game));
    d.records = defensive_decisions(&game, 1_000, BC_DECISIONS)?;
    let held: Vec<DemoRecord> = defensive_decisions(&game, 50_000, BC_HELD_OUT * 2)?
        .into_iter()
        .filter(|r| r.tag == AugTag::Orig)
        .take(BC_HELD_OUT)
        .collect();
    // Pure cloning: no GAIL reward and the PPO terms held at zero throughout.
    let cfg = TrainerConfig::preset("ppo_gail_bc")
        .map_err(err)?
        .with_overrides([
            "gail_strength=0".to_string(),
            "bc_strength=1".into(),
            format!("total_steps={BC_STEPS}"),
            "bc_pretrain_updates=1000000".into(),
            "epochs=10".into(),
            "ppo_lr=0.001".into(),
        ].iter().map(String::as_str))
        .map_err(err)?;
    let mut t = Trainer::new(cfg, game, Some(&d)).map_err(err)?;
    while !t.done() {
        t.iterate().map_err(err)?;
    }
    let mut x = Array2::zeros((held.len(), OBS_LEN));
    for (i, r) in held.iter().enumerate() {
        x.row_mut(i).assign(&ndarray::ArrayView1::from(r.observation.as_slice()));
    }
    let masks: Vec<_> = held.iter().map(|r| r.masks.flat()).collect();
    let pass = t.policy.forward(x.view(), &masks);
    let agree = held.iter().enumerate().filter(|(i, r)| pass.greedy(*i).action_type == r.action.action_type).count();
    let rate = agree as f64 / held.len() as f64;
    Ok((
        rate >= BC_MIN_AGREEMENT,
        format!("held-out action-type agreement {rate:.3} on {} states (need >= {BC_MIN_AGREEMENT})", held.len()),
    ))
}

fn run_trainer(cfg: TrainerConfig, demos: Option<&DemoDataset>) -> Result<Trainer, String> {
    let mut t = Trainer::new(cfg, GameConfig::default(), demos).map_err(err)?;
    while !t.done() {
        t.iterate().map_err(err)?;
    }
    Ok(t)
}

fn demo_set(policy: ScriptedPolicy, episodes: u32, seed: u64) -> Result<(DemoDataset, f64), String> {
    let game = GameConfig::default();
    let out = simulate(&game, policy, episodes, seed, "demo", true).map_err(err)?;
    let movements = out.totals.team(Team::Blue).movements as f64 / episodes as f64;
    let mut d = DemoDataset::new(DemoHeader::for_config(&game));
    d.records = out.records;
    Ok((d, movements))
}

fn ppo_trend() -> Verdict {
    let cfg = TrainerConfig { total_steps: PPO_STEPS, seed: PPO_SEED, ..TrainerConfig::preset("ppo_only").map_err(err)? };
    let t = run_trainer(cfg, None)?;
    let (first, last) = t.log.decile_means(|r| r.mean_cum_reward).ok_or("log too short")?;
    Ok((
        last - first >= PPO_MIN_GAIN,
        format!("mean reward decile {first:.3} -> {last:.3} (gain {:.3}, need >= {PPO_MIN_GAIN})", last - first),
    ))
}

fn gail_dynamics() -> Verdict {
    let (d, _) = demo_set(ScriptedPolicy::Defensive, 5, 100)?;
    let cfg = TrainerConfig { total_steps: GAIL_STEPS, ..TrainerConfig::preset("baseline").map_err(err)? };
    let t = run_trainer(cfg, Some(&d))?;
    let first = t.log.rows.first().ok_or("empty log")?.gail_loss;
    let last = t.log.rows.last().ok_or("empty log")?.gail_loss;
    let ln2 = std::f64::consts::LN_2;
    let ok = (first - ln2).abs() <= GAIL_START_TOL && last > GAIL_FINAL_RANGE.0 && last < GAIL_FINAL_RANGE.1;
    Ok((ok, format!("discriminator loss {first:.4} (ln 2 = {ln2:.4}) -> {last:.4}")))
}

fn imitation_separation() -> Verdict {
    let game = GameConfig::default();
    let mut demo_moves = Vec::new();
    let mut agent_moves = Vec::new();
    for policy in [ScriptedPolicy::Defensive, ScriptedPolicy::Aggressive] {
        let (d, dm) = demo_set(policy, SEP_DEMO_EPISODES, SEP_DEMO_SEED)?;
        let cfg = TrainerConfig { total_steps: SEP_STEPS, ..TrainerConfig::preset("baseline_plus").map_err(err)? };
        let t = run_trainer(cfg, Some(&d))?;
        let mut agent = MirrorAgent::new(t.checkpoint(), &game, 0).map_err(err)?;
        let ev = evaluate(&game, &mut agent, policy, SEP_EVAL_EPISODES, SEP_EVAL_SEED, "agent").map_err(err)?;
        demo_moves.push(dm);
        agent_moves.push(ev.totals.team(Team::Red).movements as f64 / SEP_EVAL_EPISODES as f64);
    }
    let own = (agent_moves[0] - demo_moves[0]).abs();
    let other = (agent_moves[1] - demo_moves[0]).abs();
    Ok((
        own < other,
        format!(
            "movements/episode: demos def {:.2} agg {:.2}; agents def {:.2} agg {:.2}; gap to def demo {own:.2} vs {other:.2}",
            demo_moves[0], demo_moves[1], agent_moves[0], agent_moves[1]
        ),
    ))
}

fn preset_fidelity() -> Verdict {
    let to_map = |c: &TrainerConfig| match serde_json::to_value(c) {
        Ok(serde_json::Value::Object(m)) => Ok(m),
        _ => Err("config does not serialize to an object".to_string()),
    };
    let base = to_map(&TrainerConfig::preset("baseline").map_err(err)?)?;
    let table = [
        ("ppo_lr", 0.0003),
        ("ppo_hidden", 256.0),
        ("ppo_batch", 128.0),
        ("gail_lr", 0.0001),
        ("gail_hidden", 64.0),
        ("gail_gamma", 0.85),
        ("gail_strength", 1.0),
        ("bc_strength", 0.5),
        ("extrinsic_strength", 0.9),
    ];
    let mut bad: Vec<String> =
        table.iter().filter(|(k, v)| base.get(*k).and_then(|x| x.as_f64()) != Some(*v)).map(|(k, _)| k.to_string()).collect();
    let plus = to_map(&TrainerConfig::preset("baseline_plus").map_err(err)?)?;
    let diff: BTreeSet<&str> =
        base.keys().filter(|k| k.as_str() != "preset" && base.get(*k) != plus.get(*k)).map(String::as_str).collect();
    if diff != BTreeSet::from(["gail_hidden", "ppo_batch"]) {
        bad.push(format!("baseline_plus differs in {diff:?}"));
    }
    if plus["gail_hidden"] != 128 || plus["ppo_batch"] != 256 {
        bad.push("baseline_plus values".into());
    }
    Ok(match bad.is_empty() {
        true => (true, "baseline matches the hyperparameter table; baseline_plus changes only gail_hidden, ppo_batch".into()),
        false => (false, format!("mismatched: {}", bad.join(", "))),
    })
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().map_err(err)?;
    let (d, _) = demo_set(ScriptedPolicy::Aggressive, 3, 11)?;
    let demos = dir.path().join("demos.jsonl");
    d.save(&demos).map_err(err)?;
    let cfg = TrainerConfig { total_steps: DETERMINISM_STEPS, seed: 42, ..TrainerConfig::preset("baseline").map_err(err)? };
    let run = |name: &str| -> Result<(Vec<u8>, Vec<u8>), String> {
        let out = trainer::train(&cfg, &GameConfig::default(), Some(&demos), &dir.path().join(name), &mut |_| {})
            .map_err(err)?;
        Ok((std::fs::read(out.log).map_err(err)?, std::fs::read(out.checkpoint).map_err(err)?))
    };
    let (log_a, ck_a) = run("a")?;
    let (log_b, ck_b) = run("b")?;
    let rows = String::from_utf8_lossy(&log_a).lines().count().saturating_sub(1);
    Ok((
        log_a == log_b && ck_a == ck_b,
        format!("two {DETERMINISM_STEPS}-step runs: {rows} log rows, logs identical {}, checkpoints identical {}", log_a == log_b, ck_a == ck_b),
    ))
}

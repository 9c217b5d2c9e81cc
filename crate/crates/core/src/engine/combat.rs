use serde::{Deserialize, Serialize};

use super::types::{MoveType, UnitSpec, Weapon, FOLLOW_UP_THRESHOLD};

/// Where an attack sits on the sword > axe > lance > sword cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriangleEdge {
    Advantage,
    Neutral,
    Disadvantage,
}

impl TriangleEdge {
    pub fn of(attacker: Weapon, defender: Weapon) -> TriangleEdge {
        use Weapon::*;
        match (attacker, defender) {
            (Sword, Axe) | (Axe, Lance) | (Lance, Sword) => TriangleEdge::Advantage,
            (Axe, Sword) | (Lance, Axe) | (Sword, Lance) => TriangleEdge::Disadvantage,
            _ => TriangleEdge::Neutral,
        }
    }

    /// Multiplier in tenths, kept integral so damage floors exactly.
    fn tenths(self) -> u32 {
        match self {
            TriangleEdge::Advantage => 12,
            TriangleEdge::Neutral => 10,
            TriangleEdge::Disadvantage => 8,
        }
    }

    pub fn multiplier(self) -> f64 {
        f64::from(self.tenths()) / 10.0
    }
}

pub fn triangle_multiplier(attacker: Weapon, defender: Weapon) -> f64 {
    TriangleEdge::of(attacker, defender).multiplier()
}

pub fn is_effective(attacker: Weapon, defender: MoveType) -> bool {
    attacker == Weapon::Bow && defender == MoveType::Flying
}

pub fn effectiveness_multiplier(attacker: Weapon, defender: MoveType) -> f64 {
    if is_effective(attacker, defender) {
        1.5
    } else {
        1.0
    }
}

/// Damage of a single hit: `max(0, floor(atk * triangle * effectiveness) - mitigation)`,
/// where magic is mitigated by resistance and everything else by defense.
pub fn hit_damage(attacker: &UnitSpec, defender: &UnitSpec) -> u32 {
    let tri = TriangleEdge::of(attacker.weapon, defender.weapon).tenths();
    let (eff_num, eff_den) = if is_effective(attacker.weapon, defender.move_type) { (3, 2) } else { (1, 1) };
    let raw = attacker.stats.atk * tri * eff_num / (10 * eff_den);
    let mitigation = if attacker.weapon == Weapon::Magic { defender.stats.res } else { defender.stats.def };
    raw.saturating_sub(mitigation)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrikeKind {
    Initial,
    Counter,
    FollowUp,
    CounterFollowUp,
}

impl StrikeKind {
    pub fn by_attacker(self) -> bool {
        matches!(self, StrikeKind::Initial | StrikeKind::FollowUp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedStrike {
    pub kind: StrikeKind,
    /// HP actually removed by this strike.
    pub damage: u32,
    /// HP of the struck unit after the strike.
    pub target_hp: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombatForecast {
    pub per_hit_damage_attacker: u32,
    pub per_hit_damage_defender: u32,
    pub attacker_followup: bool,
    pub defender_followup: bool,
    pub defender_can_counter: bool,
    pub attacker_hp_before: u32,
    pub defender_hp_before: u32,
    pub projected_attacker_hp: u32,
    pub projected_defender_hp: u32,
    pub triangle: TriangleEdge,
    pub effective: bool,
    pub strikes: Vec<PlannedStrike>,
}

impl CombatForecast {
    /// Total HP the attacker removes from the defender.
    pub fn damage_to_defender(&self) -> u32 {
        self.defender_hp_before - self.projected_defender_hp
    }

    pub fn damage_to_attacker(&self) -> u32 {
        self.attacker_hp_before - self.projected_attacker_hp
    }
}

/// Strike order: attacker, counter, attacker follow-up, counter follow-up.
/// A unit reduced to 0 HP strikes no more.
pub fn forecast(attacker: &UnitSpec, attacker_hp: u32, defender: &UnitSpec, defender_hp: u32) -> CombatForecast {
    let atk_dmg = hit_damage(attacker, defender);
    let def_dmg = hit_damage(defender, attacker);
    let can_counter = defender.range() == attacker.range();
    let atk_follow = attacker.stats.spd >= defender.stats.spd + FOLLOW_UP_THRESHOLD;
    let def_follow = can_counter && defender.stats.spd >= attacker.stats.spd + FOLLOW_UP_THRESHOLD;

    let mut plan = vec![StrikeKind::Initial];
    if can_counter {
        plan.push(StrikeKind::Counter);
    }
    if atk_follow {
        plan.push(StrikeKind::FollowUp);
    }
    if def_follow {
        plan.push(StrikeKind::CounterFollowUp);
    }

    let (mut a_hp, mut d_hp) = (attacker_hp, defender_hp);
    let mut strikes = Vec::with_capacity(plan.len());
    for kind in plan {
        if a_hp == 0 || d_hp == 0 {
            break;
        }
        let (hp, dmg) = if kind.by_attacker() { (&mut d_hp, atk_dmg) } else { (&mut a_hp, def_dmg) };
        let dealt = dmg.min(*hp);
        *hp -= dealt;
        strikes.push(PlannedStrike { kind, damage: dealt, target_hp: *hp });
    }

    CombatForecast {
        per_hit_damage_attacker: atk_dmg,
        per_hit_damage_defender: def_dmg,
        attacker_followup: atk_follow,
        defender_followup: def_follow,
        defender_can_counter: can_counter,
        attacker_hp_before: attacker_hp,
        defender_hp_before: defender_hp,
        projected_attacker_hp: a_hp,
        projected_defender_hp: d_hp,
        triangle: TriangleEdge::of(attacker.weapon, defender.weapon),
        effective: is_effective(attacker.weapon, defender.move_type),
        strikes,
    }
}

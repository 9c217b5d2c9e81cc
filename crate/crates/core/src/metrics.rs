//! Gameplay counters per team and episode, the metrics CSV, and the
//! comparison report across metric files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Event, Outcome, Team, TriangleEdge, TEAM_SIZE};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamCounters {
    pub kills: u32,
    pub deaths: u32,
    pub attacks: u32,
    pub movements: u32,
    pub advantage_attacks: u32,
    pub disadvantage_attacks: u32,
    pub effective_attacks: u32,
    pub wins: u32,
}

impl TeamCounters {
    fn add(&mut self, o: &TeamCounters) {
        self.kills += o.kills;
        self.deaths += o.deaths;
        self.attacks += o.attacks;
        self.movements += o.movements;
        self.advantage_attacks += o.advantage_attacks;
        self.disadvantage_attacks += o.disadvantage_attacks;
        self.effective_attacks += o.effective_attacks;
        self.wins += o.wins;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchMetrics {
    pub blue: TeamCounters,
    pub red: TeamCounters,
    pub ties: u32,
    pub episodes: u32,
}

impl MatchMetrics {
    pub fn team(&self, t: Team) -> &TeamCounters {
        match t {
            Team::Blue => &self.blue,
            Team::Red => &self.red,
        }
    }

    fn team_mut(&mut self, t: Team) -> &mut TeamCounters {
        match t {
            Team::Blue => &mut self.blue,
            Team::Red => &mut self.red,
        }
    }

    /// Folds one engine event into the counters.
    pub fn observe(&mut self, event: &Event) {
        match event {
            Event::Moved { unit, from, to } if from != to => self.team_mut(unit.team).movements += 1,
            Event::AttackDeclared { attacker, triangle, effective, .. } => {
                let c = self.team_mut(attacker.team);
                c.attacks += 1;
                match triangle {
                    TriangleEdge::Advantage => c.advantage_attacks += 1,
                    TriangleEdge::Disadvantage => c.disadvantage_attacks += 1,
                    TriangleEdge::Neutral => {}
                }
                if *effective {
                    c.effective_attacks += 1;
                }
            }
            Event::Defeated { unit, by } => {
                self.team_mut(by.team).kills += 1;
                self.team_mut(unit.team).deaths += 1;
            }
            Event::GameOver { outcome } => {
                self.episodes += 1;
                match outcome.winner() {
                    Some(t) => self.team_mut(t).wins += 1,
                    None if *outcome == Outcome::Tie => self.ties += 1,
                    None => {}
                }
            }
            _ => {}
        }
    }

    pub fn merge(&mut self, o: &MatchMetrics) {
        self.blue.add(&o.blue);
        self.red.add(&o.red);
        self.ties += o.ties;
        self.episodes += o.episodes;
    }

    /// Cross-team consistency: kills mirror deaths, outcomes sum to episodes,
    /// triangle-tagged attacks never exceed attacks.
    pub fn is_consistent(&self) -> bool {
        let tri_ok = |c: &TeamCounters| c.advantage_attacks + c.disadvantage_attacks <= c.attacks;
        self.blue.kills == self.red.deaths
            && self.red.kills == self.blue.deaths
            && self.blue.wins + self.red.wins + self.ties == self.episodes
            && tri_ok(&self.blue)
            && tri_ok(&self.red)
    }
}

/// Who a team was in a metrics file: the demonstrating player, the scripted
/// opponent, or a trained agent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Player,
    Opponent,
    Agent,
}

/// One CSV row: one team in one episode.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub episode: u32,
    pub team: Team,
    pub role: Role,
    pub opponent: String,
    pub kills: u32,
    pub deaths: u32,
    pub attacks: u32,
    pub movements: u32,
    pub advantage_attacks: u32,
    pub disadvantage_attacks: u32,
    pub effective_attacks: u32,
    pub win: u32,
    pub tie: u32,
    pub survivors: u32,
}

pub const METRICS_HEADER: &str = "episode,team,role,opponent,kills,deaths,attacks,movements,advantage_attacks,\
disadvantage_attacks,effective_attacks,win,tie,survivors";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{source_name}: line {line}: {reason}")]
    Parse { source_name: String, line: usize, reason: String },
    #[error("{0}: no episodes")]
    Empty(String),
}

impl MetricsRow {
    /// Rows for both teams of a finished single-episode counter set.
    pub fn from_episode(
        episode: u32,
        m: &MatchMetrics,
        roles: [(Role, &str); 2],
    ) -> [MetricsRow; 2] {
        let tie = u32::from(m.ties > 0);
        [Team::Blue, Team::Red].map(|t| {
            let c = m.team(t);
            let (role, opponent) = roles[t.index()];
            MetricsRow {
                episode,
                team: t,
                role,
                opponent: opponent.to_string(),
                kills: c.kills,
                deaths: c.deaths,
                attacks: c.attacks,
                movements: c.movements,
                advantage_attacks: c.advantage_attacks,
                disadvantage_attacks: c.disadvantage_attacks,
                effective_attacks: c.effective_attacks,
                win: c.wins,
                tie,
                survivors: TEAM_SIZE as u32 - c.deaths.min(TEAM_SIZE as u32),
            }
        })
    }

    fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.episode,
            self.team.name(),
            role_name(self.role),
            self.opponent,
            self.kills,
            self.deaths,
            self.attacks,
            self.movements,
            self.advantage_attacks,
            self.disadvantage_attacks,
            self.effective_attacks,
            self.win,
            self.tie,
            self.survivors
        )
    }

    fn parse(line: &str) -> Result<MetricsRow, String> {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 14 {
            return Err(format!("expected 14 fields, found {}", f.len()));
        }
        let n = |i: usize| f[i].parse::<u32>().map_err(|e| format!("field {}: {e}", i + 1));
        let team = match f[1] {
            "blue" => Team::Blue,
            "red" => Team::Red,
            other => return Err(format!("unknown team `{other}`")),
        };
        let role = match f[2] {
            "player" => Role::Player,
            "opponent" => Role::Opponent,
            "agent" => Role::Agent,
            other => return Err(format!("unknown role `{other}`")),
        };
        Ok(MetricsRow {
            episode: n(0)?,
            team,
            role,
            opponent: f[3].to_string(),
            kills: n(4)?,
            deaths: n(5)?,
            attacks: n(6)?,
            movements: n(7)?,
            advantage_attacks: n(8)?,
            disadvantage_attacks: n(9)?,
            effective_attacks: n(10)?,
            win: n(11)?,
            tie: n(12)?,
            survivors: n(13)?,
        })
    }
}

fn role_name(r: Role) -> &'static str {
    match r {
        Role::Player => "player",
        Role::Opponent => "opponent",
        Role::Agent => "agent",
    }
}

pub fn write_metrics<W: Write>(mut w: W, rows: &[MetricsRow]) -> std::io::Result<()> {
    writeln!(w, "{METRICS_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.to_line())?;
    }
    w.flush()
}

pub fn read_metrics<R: Read>(r: R, source_name: &str) -> Result<Vec<MetricsRow>, MetricsError> {
    let perr = |line, reason| MetricsError::Parse { source_name: source_name.to_string(), line, reason };
    let mut lines = BufReader::new(r).lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != METRICS_HEADER {
        return Err(perr(1, "missing or unexpected header".into()));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(MetricsRow::parse(&line).map_err(|e| perr(i + 2, e))?);
    }
    Ok(out)
}

/// Accumulates events per episode and emits one row per team per episode.
#[derive(Clone, Debug)]
pub struct EpisodeRecorder {
    roles: [(Role, String); 2],
    current: MatchMetrics,
    pub total: MatchMetrics,
    pub rows: Vec<MetricsRow>,
}

impl EpisodeRecorder {
    /// `roles[0]` describes blue, `roles[1]` red; the string is the label of
    /// whoever that team faced.
    pub fn new(roles: [(Role, String); 2]) -> Self {
        EpisodeRecorder { roles, current: MatchMetrics::default(), total: MatchMetrics::default(), rows: Vec::new() }
    }

    pub fn observe(&mut self, e: &Event) {
        self.current.observe(e);
        if matches!(e, Event::GameOver { .. }) {
            let episode = self.rows.len() as u32 / 2;
            let roles = [(self.roles[0].0, self.roles[0].1.as_str()), (self.roles[1].0, self.roles[1].1.as_str())];
            self.rows.extend(MetricsRow::from_episode(episode, &self.current, roles));
            self.total.merge(&self.current);
            self.current = MatchMetrics::default();
        }
    }
}

/// Metric columns in report order.
pub const REPORT_METRICS: [&str; 8] = [
    "kills",
    "deaths",
    "attacks",
    "movements",
    "advantage_attacks",
    "disadvantage_attacks",
    "effective_attacks",
    "wins",
];

fn metric_value(r: &MetricsRow, name: &str) -> u32 {
    match name {
        "kills" => r.kills,
        "deaths" => r.deaths,
        "attacks" => r.attacks,
        "movements" => r.movements,
        "advantage_attacks" => r.advantage_attacks,
        "disadvantage_attacks" => r.disadvantage_attacks,
        "effective_attacks" => r.effective_attacks,
        "wins" => r.win,
        _ => 0,
    }
}

/// Summary of the measured side of one metrics file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceSummary {
    pub source: String,
    pub role: Role,
    pub episodes: u32,
    pub opponents: u32,
    pub totals: BTreeMap<String, u32>,
}

impl SourceSummary {
    /// Measured rows are the agent's when the file has any, otherwise the player's.
    pub fn from_rows(source: &str, rows: &[MetricsRow]) -> Result<SourceSummary, MetricsError> {
        let role = if rows.iter().any(|r| r.role == Role::Agent) { Role::Agent } else { Role::Player };
        let measured: Vec<&MetricsRow> = rows.iter().filter(|r| r.role == role).collect();
        if measured.is_empty() {
            return Err(MetricsError::Empty(source.to_string()));
        }
        let opponents: BTreeSet<&str> = measured.iter().map(|r| r.opponent.as_str()).collect();
        let totals = REPORT_METRICS
            .iter()
            .map(|m| (m.to_string(), measured.iter().map(|r| metric_value(r, m)).sum()))
            .collect();
        Ok(SourceSummary {
            source: source.to_string(),
            role,
            episodes: measured.len() as u32,
            opponents: opponents.len() as u32,
            totals,
        })
    }

    pub fn total(&self, metric: &str) -> u32 {
        self.totals.get(metric).copied().unwrap_or(0)
    }

    pub fn per_episode(&self, metric: &str) -> f64 {
        self.total(metric) as f64 / self.episodes as f64
    }

    /// Totals averaged over distinct opponents faced.
    pub fn per_opponent(&self, metric: &str) -> f64 {
        self.total(metric) as f64 / self.opponents.max(1) as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub sources: Vec<SourceSummary>,
}

impl Report {
    pub fn new(sources: Vec<SourceSummary>) -> Report {
        Report { sources }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,source,role,episodes,opponents,total,per_episode,per_opponent\n");
        for m in REPORT_METRICS {
            for s in &self.sources {
                let _ = writeln!(
                    out,
                    "{m},{},{},{},{},{},{:.4},{:.4}",
                    s.source,
                    role_name(s.role),
                    s.episodes,
                    s.opponents,
                    s.total(m),
                    s.per_episode(m),
                    s.per_opponent(m)
                );
            }
        }
        out
    }

    /// Aligned text table: one row per metric, per-opponent means per source.
    pub fn to_text(&self) -> String {
        let width = self.sources.iter().map(|s| s.source.len()).max().unwrap_or(0).max(12);
        let mut out = format!("{:<22}", "metric");
        for s in &self.sources {
            let _ = write!(out, " {:>width$}", s.source);
        }
        out.push('\n');
        for m in REPORT_METRICS {
            let _ = write!(out, "{m:<22}");
            for s in &self.sources {
                let _ = write!(out, " {:>width$.2}", s.per_opponent(m));
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<22}", "episodes");
        for s in &self.sources {
            let _ = write!(out, " {:>width$}", s.episodes);
        }
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::UnitRef;

    fn attack(team: Team, triangle: TriangleEdge, effective: bool) -> Event {
        Event::AttackDeclared {
            attacker: UnitRef::new(team, 0),
            defender: UnitRef::new(team.opponent(), 0),
            launch_tile: 0,
            triangle,
            effective,
        }
    }

    #[test]
    fn observe_counts() {
        let mut m = MatchMetrics::default();
        m.observe(&attack(Team::Blue, TriangleEdge::Advantage, false));
        m.observe(&attack(Team::Blue, TriangleEdge::Neutral, true));
        m.observe(&Event::Waited { unit: UnitRef::new(Team::Red, 1), tile: 3 });
        m.observe(&Event::Moved { unit: UnitRef::new(Team::Red, 1), from: 3, to: 3 });
        m.observe(&Event::Moved { unit: UnitRef::new(Team::Red, 1), from: 3, to: 9 });
        m.observe(&Event::Defeated { unit: UnitRef::new(Team::Red, 0), by: UnitRef::new(Team::Blue, 0) });
        m.observe(&Event::GameOver { outcome: Outcome::BlueWin });
        assert_eq!(m.blue.attacks, 2);
        assert_eq!(m.blue.advantage_attacks, 1);
        assert_eq!(m.blue.effective_attacks, 1);
        assert_eq!(m.red.movements, 1);
        assert_eq!((m.blue.kills, m.red.deaths, m.blue.wins, m.episodes), (1, 1, 1, 1));
        assert!(m.is_consistent());
    }

    fn sample_rows(opponents: &[&str], episodes: u32, role: Role) -> Vec<MetricsRow> {
        let mut rec = Vec::new();
        for (i, opp) in (0..episodes).zip(opponents.iter().cycle()) {
            let mut m = MatchMetrics::default();
            m.observe(&Event::Moved { unit: UnitRef::new(Team::Red, 0), from: 0, to: 1 });
            m.observe(&Event::GameOver { outcome: Outcome::Tie });
            rec.extend(MetricsRow::from_episode(i, &m, [(Role::Opponent, "x"), (role, opp)]));
        }
        rec
    }

    #[test]
    fn csv_round_trip() {
        let rows = sample_rows(&["p1"], 3, Role::Agent);
        let mut buf = Vec::new();
        write_metrics(&mut buf, &rows).unwrap();
        let back = read_metrics(buf.as_slice(), "mem").unwrap();
        assert_eq!(back, rows);
        assert!(read_metrics("nope\n1,2".as_bytes(), "bad").is_err());
    }

    #[test]
    fn per_opponent_divides_by_distinct_opponents() {
        let rows = sample_rows(&["p1", "p2"], 10, Role::Agent);
        let s = SourceSummary::from_rows("agent", &rows).unwrap();
        assert_eq!(s.episodes, 10);
        assert_eq!(s.total("movements"), 10);
        assert_eq!(s.per_opponent("movements"), 5.0);
        assert_eq!(s.per_episode("movements"), 1.0);
    }

    #[test]
    fn empty_source_is_an_error() {
        assert!(matches!(SourceSummary::from_rows("e", &[]), Err(MetricsError::Empty(_))));
    }

    #[test]
    fn recorder_emits_two_rows_per_episode() {
        let mut r = EpisodeRecorder::new([(Role::Player, "standard".into()), (Role::Opponent, "player".into())]);
        r.observe(&Event::GameOver { outcome: Outcome::RedWin });
        r.observe(&Event::GameOver { outcome: Outcome::Tie });
        assert_eq!(r.rows.len(), 4);
        assert_eq!(r.rows[3].episode, 1);
        assert_eq!(r.total.red.wins, 1);
        assert_eq!(r.total.ties, 1);
    }
}

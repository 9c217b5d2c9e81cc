//! Demonstration records, 4-way flip augmentation and the line-delimited
//! JSON demo file.
//!
//! File layout, one JSON value per line:
//! 1. header `{"format":"mirrormode-demos","version":1,"map_hash":..,"stat_bounds_hash":..}`
//! 2. zero or more [`DemoRecord`] lines
//! 3. footer `{"record_count":N,"crc32":C}` where C covers every record line
//!    (bytes plus the trailing newline).

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{action_masks, encode_observation, flip_action, flip_state, BranchMasks, FlipAxis, Observation};
use crate::engine::{ActionTriple, ActionType, EngineError, GameConfig, GameState, Team};

pub const DEMO_FORMAT: &str = "mirrormode-demos";
pub const DEMO_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugTag {
    Orig,
    Cols,
    Rows,
    Both,
}

impl AugTag {
    pub fn axis(self) -> Option<FlipAxis> {
        match self {
            AugTag::Orig => None,
            AugTag::Cols => Some(FlipAxis::Cols),
            AugTag::Rows => Some(FlipAxis::Rows),
            AugTag::Both => Some(FlipAxis::Both),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoRecord {
    pub session: String,
    pub episode: u32,
    pub step: u32,
    pub team: Team,
    pub observation: Observation,
    pub action: ActionTriple,
    pub masks: BranchMasks,
    pub tag: AugTag,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemoHeader {
    pub format: String,
    pub version: u32,
    pub map_hash: String,
    pub stat_bounds_hash: String,
}

impl DemoHeader {
    pub fn for_config(config: &GameConfig) -> Self {
        DemoHeader {
            format: DEMO_FORMAT.to_string(),
            version: DEMO_VERSION,
            map_hash: config.map_hash(),
            stat_bounds_hash: config.stat_bounds_hash(),
        }
    }

    /// Human-readable mismatches against a runtime config; empty when compatible.
    pub fn mismatches(&self, config: &GameConfig) -> Vec<String> {
        let mut out = Vec::new();
        if self.map_hash != config.map_hash() {
            out.push(format!("demo map hash {} differs from config {}", self.map_hash, config.map_hash()));
        }
        if self.stat_bounds_hash != config.stat_bounds_hash() {
            out.push(format!(
                "demo stat-bounds hash {} differs from config {}",
                self.stat_bounds_hash,
                config.stat_bounds_hash()
            ));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct DemoFooter {
    record_count: u64,
    crc32: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoDataset {
    pub header: DemoHeader,
    pub records: Vec<DemoRecord>,
}

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("illegal demonstrated action: {0}")]
    Illegal(#[from] EngineError),
    #[error("record is already augmented ({0:?})")]
    AlreadyAugmented(AugTag),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("unsupported demo file version {found} (expected {DEMO_VERSION})")]
    Version { found: u32 },
    #[error("truncated demo file: no footer after {records} records (last valid record {last_valid})")]
    Truncated { records: usize, last_valid: String },
    #[error("checksum mismatch: footer says {expected:08x}, records hash to {actual:08x} (last valid record {last_valid})")]
    Checksum { expected: u32, actual: u32, last_valid: String },
    #[error("record count mismatch: footer says {expected}, file holds {actual}")]
    Count { expected: u64, actual: usize },
}

fn describe_last(records: &[DemoRecord]) -> String {
    match records.last() {
        Some(r) => format!("#{} (episode {}, step {}, {:?})", records.len() - 1, r.episode, r.step, r.tag),
        None => "none".to_string(),
    }
}

/// A decision to be recorded: the state it was taken in plus the action.
#[derive(Clone, Debug)]
pub struct Decision {
    pub state: GameState,
    pub slot: usize,
    pub action: ActionTriple,
    pub tag: AugTag,
}

fn make_record(session: &str, episode: u32, step: u32, d: &Decision) -> Result<DemoRecord, DemoError> {
    let team = d.state.phase;
    Ok(DemoRecord {
        session: session.to_string(),
        episode,
        step,
        team,
        observation: encode_observation(&d.state, team, d.slot)?,
        action: d.action,
        masks: action_masks(&d.state, team, d.slot)?,
        tag: d.tag,
    })
}

/// The original decision plus its three board flips. Already-flipped input is
/// rejected so augmentation never compounds.
pub fn augment(d: &Decision) -> Result<[Decision; 4], DemoError> {
    if d.tag != AugTag::Orig {
        return Err(DemoError::AlreadyAugmented(d.tag));
    }
    let flipped = |tag: AugTag| {
        let axis = tag.axis().expect("flip tag");
        Decision { state: flip_state(&d.state, axis), slot: d.slot, action: flip_action(d.action, axis), tag }
    };
    Ok([d.clone(), flipped(AugTag::Cols), flipped(AugTag::Rows), flipped(AugTag::Both)])
}

/// Four records for one legal decision by the phase team's unit in `slot`.
pub fn record_decision(
    session: &str,
    episode: u32,
    step: u32,
    state: &GameState,
    slot: usize,
    action: ActionTriple,
) -> Result<Vec<DemoRecord>, DemoError> {
    state.check_action(slot, &action).map_err(EngineError::Illegal)?;
    let d = Decision { state: state.clone(), slot, action, tag: AugTag::Orig };
    augment(&d)?.iter().map(|d| make_record(session, episode, step, d)).collect()
}

/// Streams records to a demo file; the footer is written by [`DemoWriter::finish`].
pub struct DemoWriter<W: Write> {
    out: W,
    crc: crc32fast::Hasher,
    count: u64,
}

impl DemoWriter<BufWriter<File>> {
    pub fn create(path: &Path, header: &DemoHeader) -> Result<Self, DemoError> {
        DemoWriter::new(BufWriter::new(File::create(path)?), header)
    }
}

impl<W: Write> DemoWriter<W> {
    pub fn new(mut out: W, header: &DemoHeader) -> Result<Self, DemoError> {
        writeln!(out, "{}", serde_json::to_string(header).expect("header serializes"))?;
        Ok(DemoWriter { out, crc: crc32fast::Hasher::new(), count: 0 })
    }

    pub fn write(&mut self, r: &DemoRecord) -> Result<(), DemoError> {
        let mut line = serde_json::to_string(r).expect("record serializes");
        line.push('\n');
        self.crc.update(line.as_bytes());
        self.out.write_all(line.as_bytes())?;
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn finish(mut self) -> Result<W, DemoError> {
        let footer = DemoFooter { record_count: self.count, crc32: self.crc.clone().finalize() };
        writeln!(self.out, "{}", serde_json::to_string(&footer).expect("footer serializes"))?;
        self.out.flush()?;
        Ok(self.out)
    }
}

impl DemoDataset {
    pub fn new(header: DemoHeader) -> Self {
        DemoDataset { header, records: Vec::new() }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = DemoWriter::new(Vec::new(), &self.header).expect("writing to memory");
        for r in &self.records {
            w.write(r).expect("writing to memory");
        }
        w.finish().expect("writing to memory")
    }

    pub fn save(&self, path: &Path) -> Result<(), DemoError> {
        let mut w = DemoWriter::create(path, &self.header)?;
        for r in &self.records {
            w.write(r)?;
        }
        w.finish()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<DemoDataset, DemoError> {
        DemoDataset::read(BufReader::new(File::open(path)?))
    }

    pub fn read<R: BufRead>(reader: R) -> Result<DemoDataset, DemoError> {
        let mut lines = reader.split(b'\n');
        let header_line = match lines.next() {
            Some(l) => l?,
            None => return Err(DemoError::Malformed { line: 1, reason: "empty file".into() }),
        };
        let header: DemoHeader = serde_json::from_slice(&header_line)
            .map_err(|e| DemoError::Malformed { line: 1, reason: format!("bad header: {e}") })?;
        if header.format != DEMO_FORMAT {
            return Err(DemoError::Malformed { line: 1, reason: format!("unknown format `{}`", header.format) });
        }
        if header.version != DEMO_VERSION {
            return Err(DemoError::Version { found: header.version });
        }
        let mut records = Vec::new();
        let mut crc = crc32fast::Hasher::new();
        let mut pending: Option<Vec<u8>> = None;
        for (i, line) in lines.enumerate() {
            let line = line?;
            if let Some(prev) = pending.take() {
                let rec: DemoRecord = serde_json::from_slice(&prev).map_err(|e| DemoError::Malformed {
                    line: i + 1,
                    reason: format!("bad record after {}: {e}", describe_last(&records)),
                })?;
                crc.update(&prev);
                crc.update(b"\n");
                records.push(rec);
            }
            if !line.is_empty() {
                pending = Some(line);
            }
        }
        // The last non-empty line must be the footer.
        let Some(last) = pending else {
            return Err(DemoError::Truncated { records: records.len(), last_valid: describe_last(&records) });
        };
        let footer: DemoFooter = match serde_json::from_slice(&last) {
            Ok(f) => f,
            Err(_) => return Err(DemoError::Truncated { records: records.len(), last_valid: describe_last(&records) }),
        };
        let actual = crc.finalize();
        if footer.crc32 != actual {
            return Err(DemoError::Checksum { expected: footer.crc32, actual, last_valid: describe_last(&records) });
        }
        if footer.record_count != records.len() as u64 {
            return Err(DemoError::Count { expected: footer.record_count, actual: records.len() });
        }
        Ok(DemoDataset { header, records })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub records: usize,
    pub episodes: usize,
    pub decisions: usize,
    /// Counts of wait, move, attack.
    pub action_types: [usize; 3],
    /// Records per acting team, blue then red.
    pub per_team: [usize; 2],
}

pub fn dataset_stats(d: &DemoDataset) -> DatasetStats {
    let mut s = DatasetStats { records: d.records.len(), ..Default::default() };
    let mut episodes = BTreeSet::new();
    for r in &d.records {
        episodes.insert((r.session.as_str(), r.episode));
        s.action_types[r.action.action_type.index()] += 1;
        s.per_team[r.team.index()] += 1;
        if r.tag == AugTag::Orig {
            s.decisions += 1;
        }
    }
    s.episodes = episodes.len();
    s
}

impl DatasetStats {
    pub fn histogram(&self) -> [(ActionType, usize); 3] {
        ActionType::ALL.map(|a| (a, self.action_types[a.index()]))
    }
}

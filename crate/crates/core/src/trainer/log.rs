use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

pub const LOG_HEADER: &str = "step,mean_cum_reward,gail_loss,bc_loss,policy_loss,value_loss,entropy,win_rate,tie_rate";

/// One summary row; inactive loss terms are logged as 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub step: u64,
    pub mean_cum_reward: f64,
    pub gail_loss: f64,
    pub bc_loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub win_rate: f64,
    pub tie_rate: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub rows: Vec<LogRow>,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(LOG_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                r.step,
                r.mean_cum_reward,
                r.gail_loss,
                r.bc_loss,
                r.policy_loss,
                r.value_loss,
                r.entropy,
                r.win_rate,
                r.tie_rate
            ));
        }
        out
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        w.flush()
    }

    pub fn read<R: Read>(r: R) -> Result<TrainingLog, String> {
        let mut lines = BufReader::new(r).lines();
        let header = lines.next().transpose().map_err(|e| e.to_string())?.unwrap_or_default();
        if header.trim() != LOG_HEADER {
            return Err("unexpected training log header".into());
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| e.to_string())?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| format!("line {}: {e}", i + 2))?;
            if f.len() != 9 {
                return Err(format!("line {}: expected 9 fields", i + 2));
            }
            rows.push(LogRow {
                step: f[0] as u64,
                mean_cum_reward: f[1],
                gail_loss: f[2],
                bc_loss: f[3],
                policy_loss: f[4],
                value_loss: f[5],
                entropy: f[6],
                win_rate: f[7],
                tie_rate: f[8],
            });
        }
        Ok(TrainingLog { rows })
    }

    /// Mean of `f` over the first and the last tenth of the rows (at least one row each).
    pub fn decile_means(&self, f: impl Fn(&LogRow) -> f64) -> Option<(f64, f64)> {
        if self.rows.is_empty() {
            return None;
        }
        let k = (self.rows.len() / 10).max(1);
        let mean = |rs: &[LogRow]| rs.iter().map(&f).sum::<f64>() / rs.len() as f64;
        Some((mean(&self.rows[..k]), mean(&self.rows[self.rows.len() - k..])))
    }
}

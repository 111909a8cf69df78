use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::{Error, Result};

/// Which player an episode updated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Xe,
    Policy,
    Reward,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Xe => "xe",
            Phase::Policy => "policy",
            Phase::Reward => "reward",
        }
    }
}

/// One training episode. Serialized as a single line of space-separated
/// `key=value` pairs in a fixed order; floats use the shortest text that
/// round-trips.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRecord {
    pub episode: u64,
    /// Training mode and phase, e.g. `arel/reward`.
    pub mode: String,
    pub loss: f64,
    pub mean_reward_real: f64,
    pub mean_reward_fake: f64,
    pub baseline: f64,
    pub wall_ms: u64,
}

const KEYS: [&str; 7] = [
    "episode",
    "mode",
    "loss",
    "mean_reward_real",
    "mean_reward_fake",
    "baseline",
    "wall_ms",
];

impl LogRecord {
    pub fn to_line(&self) -> String {
        format!(
            "episode={} mode={} loss={} mean_reward_real={} mean_reward_fake={} baseline={} wall_ms={}",
            self.episode,
            self.mode,
            self.loss,
            self.mean_reward_real,
            self.mean_reward_fake,
            self.baseline,
            self.wall_ms
        )
    }

    pub fn parse(line: &str) -> Result<Self> {
        let fields: Vec<(&str, &str)> = line
            .split_whitespace()
            .map(|kv| kv.split_once('=').ok_or_else(|| bad(line)))
            .collect::<Result<_>>()?;
        if fields.len() != KEYS.len() || fields.iter().zip(KEYS).any(|((k, _), want)| *k != want) {
            return Err(bad(line));
        }
        let real = |i: usize| fields[i].1.parse::<f64>().map_err(|_| bad(line));
        let int = |i: usize| fields[i].1.parse::<u64>().map_err(|_| bad(line));
        Ok(Self {
            episode: int(0)?,
            mode: fields[1].1.to_string(),
            loss: real(2)?,
            mean_reward_real: real(3)?,
            mean_reward_fake: real(4)?,
            baseline: real(5)?,
            wall_ms: int(6)?,
        })
    }

    pub fn phase(&self) -> Option<Phase> {
        match self.mode.rsplit('/').next()? {
            "xe" => Some(Phase::Xe),
            "policy" => Some(Phase::Policy),
            "reward" => Some(Phase::Reward),
            _ => None,
        }
    }
}

fn bad(line: &str) -> Error {
    Error::Invalid(format!("malformed log record `{line}`"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_round_trip() {
        let r = LogRecord {
            episode: 7,
            mode: "arel/reward".into(),
            loss: -0.125,
            mean_reward_real: 0.1 + 0.2,
            mean_reward_fake: -1e-300,
            baseline: 0.0,
            wall_ms: 42,
        };
        let line = r.to_line();
        assert_eq!(LogRecord::parse(&line).unwrap(), r);
        assert_eq!(r.phase(), Some(Phase::Reward));
        assert!(LogRecord::parse("episode=1 mode=x").is_err());
    }
}

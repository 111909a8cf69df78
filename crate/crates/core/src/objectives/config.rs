use alloc::format;
use alloc::string::String;

use crate::metrics::Metric;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainMode {
    /// Cross-entropy with scheduled sampling.
    XeSs,
    Arel,
    /// Generator loss `-log D(W)`.
    Gan1,
    /// Generator loss `log(1 - D(W))`.
    Gan2,
    /// REINFORCE on a string-match metric.
    MetricRl(Metric),
}

impl TrainMode {
    pub fn name(self) -> String {
        match self {
            TrainMode::XeSs => "xe-ss".into(),
            TrainMode::Arel => "arel".into(),
            TrainMode::Gan1 => "gan1".into(),
            TrainMode::Gan2 => "gan2".into(),
            TrainMode::MetricRl(m) => format!("metric-rl:{}", m.name()),
        }
    }

    /// `metric` is only consulted for `metric-rl`.
    pub fn parse(s: &str, metric: Option<Metric>) -> Result<Self> {
        match s {
            "xe-ss" => Ok(TrainMode::XeSs),
            "arel" => Ok(TrainMode::Arel),
            "gan1" => Ok(TrainMode::Gan1),
            "gan2" => Ok(TrainMode::Gan2),
            "metric-rl" => metric
                .map(TrainMode::MetricRl)
                .ok_or_else(|| Error::Config("metric-rl needs a metric".into())),
            other => Err(Error::Config(format!("unknown training mode `{other}`"))),
        }
    }
}

/// Which log-probability stands in for the entropy bonus of one sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EntropyMode {
    /// `-log π(W)` of the whole story: an unbiased entropy estimate.
    #[default]
    WholeStory,
    /// `-log π(W) / tokens`: bounded by `log V`, biased but much lower variance.
    PerTokenMean,
}

impl EntropyMode {
    pub fn name(self) -> &'static str {
        match self {
            EntropyMode::WholeStory => "whole-story",
            EntropyMode::PerTokenMean => "per-token",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "whole-story" => Ok(EntropyMode::WholeStory),
            "per-token" => Ok(EntropyMode::PerTokenMean),
            other => Err(Error::Config(format!("unknown entropy mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub mode: TrainMode,
    /// Consecutive episodes per player before switching.
    pub alternation_period: usize,
    pub lr: f64,
    /// Reward-model learning rate; `None` uses `lr`.
    pub reward_lr: Option<f64>,
    pub batch_size: usize,
    pub baseline_decay: f64,
    pub entropy_weight: f64,
    pub entropy_mode: EntropyMode,
    /// Credit each sub-story with its own partial reward.
    pub partial_rewards: bool,
    /// Episodes for the RL modes.
    pub episodes: usize,
    /// Passes over the corpus for XE training.
    pub epochs: usize,
    /// Final scheduled-sampling probability, reached on the last epoch.
    pub ss_max: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: TrainMode::Arel,
            alternation_period: 50,
            lr: 2e-4,
            reward_lr: None,
            batch_size: 64,
            baseline_decay: 0.95,
            entropy_weight: 1.0,
            entropy_mode: EntropyMode::WholeStory,
            partial_rewards: false,
            episodes: 1000,
            epochs: 10,
            ss_max: 0.25,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.alternation_period == 0 {
            return bad("alternation period must be at least 1");
        }
        // Zero is allowed: a frozen run is a useful control.
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be finite and non-negative");
        }
        if let Some(lr) = self.reward_lr {
            if !(lr >= 0.0 && lr.is_finite()) {
                return bad("reward learning rate must be finite and non-negative");
            }
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if !(0.0..1.0).contains(&self.baseline_decay) {
            return bad("baseline decay must lie in [0, 1)");
        }
        if !(self.entropy_weight >= 0.0 && self.entropy_weight.is_finite()) {
            return bad("entropy weight must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.ss_max) {
            return bad("scheduled-sampling probability must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Exponential moving average of observed returns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaselineState {
    pub b: f64,
    pub decay: f64,
}

impl BaselineState {
    pub fn new(decay: f64) -> Self {
        Self { b: 0.0, decay }
    }

    pub fn update(&mut self, mean_return: f64) {
        self.b = self.decay * self.b + (1.0 - self.decay) * mean_return;
    }
}

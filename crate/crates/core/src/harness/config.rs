use crate::lqng::LqWeights;
use crate::planner::MctsConfig;
use crate::reward::RewardWeights;
use crate::rules::RuleConfig;
use crate::track::{build_complex, build_oval, parse_track, TrackError, TrackModel};
use crate::vehicle::VehicleParams;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("track error: {0}")]
    Track(#[from] TrackError),
    #[error("replay parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    /// Tree-search waypoint plans tracked by the Nash controller.
    MctsLqng,
    /// Offline racing line tracked by the Nash controller.
    FixedLqng,
    /// Next lane anchor at the curve cap, decoupled tracking only.
    NearestAnchorLqr,
    /// Never moves; parked far off the track so the other kart races solo.
    Parked,
}

impl ControllerKind {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerKind::MctsLqng => "mcts_lqng",
            ControllerKind::FixedLqng => "fixed_lqng",
            ControllerKind::NearestAnchorLqr => "nearest_anchor_lqr",
            ControllerKind::Parked => "parked",
        }
    }

    pub fn has_plan(&self) -> bool {
        matches!(self, ControllerKind::MctsLqng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OvalSpec {
    pub length: f64,
    pub width: f64,
    pub lanes: usize,
    pub lane_spacing: f64,
}

impl Default for OvalSpec {
    fn default() -> Self {
        Self { length: 320.0, width: 6.0, lanes: 3, lane_spacing: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineConfig {
    pub iterations: usize,
    pub seed: u64,
    /// Directory for cached racing lines, keyed by track hash.
    pub cache_dir: Option<PathBuf>,
}

impl Default for LineConfig {
    fn default() -> Self {
        Self { iterations: 500, seed: 0, cache_dir: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RaceConfig {
    /// `"oval"`, `"complex"`, or a path to a track document (relative to the
    /// config file).
    pub track: String,
    pub oval: OvalSpec,
    pub laps: usize,
    /// Overrides the lap count with an explicit final progress ordinal.
    pub final_checkpoint: Option<usize>,
    pub dt: f64,
    pub high_level_period: f64,
    pub time_limit: f64,
    pub series_size: usize,
    pub seed: u64,
    pub players: [ControllerKind; 2],
    /// Append reward breakdowns to tick and passage records.
    pub record_rewards: bool,
    pub vehicle: VehicleParams,
    pub rules: RuleConfig,
    pub lq: LqWeights,
    pub mcts: MctsConfig,
    pub reward: RewardWeights,
    pub line: LineConfig,
}

impl Default for RaceConfig {
    fn default() -> Self {
        Self {
            track: "complex".into(),
            oval: OvalSpec::default(),
            laps: 2,
            final_checkpoint: None,
            dt: 0.02,
            high_level_period: 1.0,
            time_limit: 120.0,
            series_size: 50,
            seed: 0,
            players: [ControllerKind::MctsLqng, ControllerKind::FixedLqng],
            record_rewards: false,
            vehicle: VehicleParams::default(),
            rules: RuleConfig::default(),
            lq: LqWeights::default(),
            mcts: MctsConfig::default(),
            reward: RewardWeights::default(),
            line: LineConfig::default(),
        }
    }
}

impl RaceConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: RaceConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative track and cache paths resolve against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if !matches!(cfg.track.as_str(), "oval" | "complex") && Path::new(&cfg.track).is_relative() {
            cfg.track = base.join(&cfg.track).to_string_lossy().into_owned();
        }
        if let Some(dir) = cfg.line.cache_dir.as_mut() {
            if dir.is_relative() {
                *dir = base.join(&dir);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn period_ticks(&self) -> usize {
        (self.high_level_period / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = |m: String| Err(HarnessError::Config(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return err("dt must be positive".into());
        }
        let ratio = self.high_level_period / self.dt;
        if !(ratio >= 1.0 && (ratio - ratio.round()).abs() < 1e-9) {
            return err(format!("dt {} must divide high_level_period {}", self.dt, self.high_level_period));
        }
        if self.series_size == 0 {
            return err("series_size must be at least 1".into());
        }
        if self.laps == 0 {
            return err("laps must be at least 1".into());
        }
        if !(self.time_limit > 0.0 && self.time_limit.is_finite()) {
            return err("time_limit must be positive".into());
        }
        if let Some(f) = self.final_checkpoint {
            if f < 2 {
                return err("final_checkpoint must be at least 2".into());
            }
        }
        self.vehicle.validate().map_err(HarnessError::Config)?;
        self.rules.validate().map_err(HarnessError::Config)?;
        self.lq.validate().map_err(HarnessError::Config)?;
        self.mcts.validate().map_err(HarnessError::Config)?;
        self.reward.validate().map_err(HarnessError::Config)?;
        Ok(())
    }

    pub fn load_track(&self) -> Result<TrackModel, HarnessError> {
        let track = match self.track.as_str() {
            "complex" => build_complex()?,
            "oval" => build_oval(self.oval.length, self.oval.width, self.oval.lanes, self.oval.lane_spacing)?,
            path => parse_track(&std::fs::read_to_string(path)?)?,
        };
        Ok(track)
    }

    pub fn finish_ordinal(&self, track: &TrackModel) -> usize {
        self.final_checkpoint.unwrap_or_else(|| track.finish_ordinal(self.laps))
    }

    pub fn pairing(&self) -> String {
        format!("{}_vs_{}", self.players[0].name(), self.players[1].name())
    }
}

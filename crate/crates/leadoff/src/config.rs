//! Generator configuration file (JSON).
//!
//! ```json
//! { "innings": 100000, "seed": 1, "grid": "0.0:20.0:0.1",
//!   "lead_means": [9.6, 10.3, 11.0], "lead_sd": 0.5, "run_game": true,
//!   "pitch": { "by_count": { "0-0": [0.37, 0.17, 0.17, 0.28, 0.01], ... },
//!              "in_play": [0.68, 0.2, 0.06, 0.005, 0.055] } }
//! ```
//! `pitch` is optional and defaults to the built-in plate appearance model.
//! Pitch rows are ball, strike, foul, in play, hit by pitch; in-play rows are
//! out, single, double, triple, home run.

use std::collections::BTreeMap;
use std::path::Path;

use leadoff_core::sim::{GeneratorConfig, PitchModel};
use leadoff_core::state::Count;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{format_grid, parse_grid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PitchFile {
    pub by_count: BTreeMap<String, [f64; 5]>,
    pub in_play: [f64; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorFile {
    pub innings: u64,
    pub seed: u64,
    #[serde(default = "default_grid")]
    pub grid: String,
    pub lead_means: [f64; 3],
    pub lead_sd: f64,
    #[serde(default = "yes")]
    pub run_game: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pitch: Option<PitchFile>,
}

fn default_grid() -> String {
    "0.0:20.0:0.1".into()
}

fn yes() -> bool {
    true
}

impl PitchFile {
    fn to_model(&self) -> Result<PitchModel> {
        let mut by_count = [[f64::NAN; 5]; 12];
        for (key, row) in &self.by_count {
            let c = key
                .split_once('-')
                .and_then(|(b, s)| Count::new(b.parse().ok()?, s.parse().ok()?).ok())
                .ok_or_else(|| Error::Core(leadoff_core::Error::Input(format!("bad count {key:?} in pitch model"))))?;
            by_count[c.index()] = *row;
        }
        if let Some(c) = Count::all().find(|c| by_count[c.index()][0].is_nan()) {
            return Err(Error::Core(leadoff_core::Error::Input(format!("pitch model has no row for count {c}"))));
        }
        let m = PitchModel { by_count, in_play: self.in_play };
        m.validate()?;
        Ok(m)
    }
}

impl GeneratorFile {
    pub fn to_config(&self) -> Result<GeneratorConfig> {
        let cfg = GeneratorConfig {
            innings: self.innings,
            seed: self.seed,
            grid: parse_grid(&self.grid)?,
            lead_means: self.lead_means,
            lead_sd: self.lead_sd,
            pitch: self.pitch.as_ref().map_or_else(|| Ok(PitchModel::default()), PitchFile::to_model)?,
            run_game: self.run_game,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_config(cfg: &GeneratorConfig) -> Self {
        let pitch = (cfg.pitch != PitchModel::default()).then(|| PitchFile {
            by_count: Count::all().map(|c| (c.to_string(), cfg.pitch.by_count[c.index()])).collect(),
            in_play: cfg.pitch.in_play,
        });
        GeneratorFile {
            innings: cfg.innings,
            seed: cfg.seed,
            grid: format_grid(&cfg.grid),
            lead_means: cfg.lead_means,
            lead_sd: cfg.lead_sd,
            run_game: cfg.run_game,
            pitch,
        }
    }
}

pub fn parse_generator_config(text: &str, path: &Path) -> Result<GeneratorConfig> {
    let file: GeneratorFile =
        serde_json::from_str(text).map_err(|e| Error::parse(path, Some(e.line() as u64), e.to_string()))?;
    file.to_config()
}

pub fn load_generator_config(path: &Path) -> Result<GeneratorConfig> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    parse_generator_config(&text, path)
}

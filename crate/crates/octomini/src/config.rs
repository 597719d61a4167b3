//! Flat `key = value` run configuration. Command-line flags are applied on
//! top of a file through the same setter.

use std::path::{Path, PathBuf};

use octomini_core::simd::LaneConfig;

use crate::bench::{parse_on_off, RunSettings};
use crate::scenario::ScenarioConfig;
use crate::AppError;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub settings: RunSettings,
    pub csv: Option<PathBuf>,
    pub snapshot: Option<PathBuf>,
    pub diagnostics: Option<PathBuf>,
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, AppError> {
    value.parse().map_err(|_| AppError::Config(format!("bad value {value:?} for {key}")))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), AppError> {
        let s = &mut self.scenario;
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "scenario" => s.kind = value.parse().map_err(|e: octomini_core::CoreError| AppError::Config(e.to_string()))?,
            "max_level" => s.max_level = parse(&key, value)?,
            "n_edge" => s.n_edge = parse(&key, value)?,
            "steps" => s.steps = parse(&key, value)?,
            "seed" => s.seed = parse(&key, value)?,
            "omega" => s.omega = parse(&key, value)?,
            "mass_ratio" => s.mass_ratio = parse(&key, value)?,
            "separation" => s.separation = parse(&key, value)?,
            "star_radius" => s.star_radius = parse(&key, value)?,
            "central_density" => s.central_density = parse(&key, value)?,
            "ambient" => s.ambient = parse(&key, value)?,
            "gamma" => s.gamma = parse(&key, value)?,
            "density_threshold" => s.density_threshold = parse(&key, value)?,
            "gradient_threshold" => s.gradient_threshold = parse(&key, value)?,
            "tracer_threshold" => s.tracer_threshold = parse(&key, value)?,
            "workers" => self.settings.workers = parse(&key, value)?,
            "localities" => self.settings.localities = parse(&key, value)?,
            "multipole_tasks" => self.settings.multipole_tasks = parse(&key, value)?,
            "comm_opt" => self.settings.comm_opt = parse_on_off(value)?,
            "simd" => self.settings.simd = LaneConfig::parse(value).map_err(|e| AppError::Config(e.to_string()))?,
            "csv" => self.csv = Some(value.into()),
            "snapshot" => self.snapshot = Some(value.into()),
            "diagnostics" => self.diagnostics = Some(value.into()),
            _ => return Err(AppError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), AppError> {
        for (n, line) in parse_pairs(text)? {
            self.set(&line.0, &line.1).map_err(|e| AppError::Config(format!("line {n}: {e}")))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut c = RunConfig::default();
        c.apply_text(&text)?;
        Ok(c)
    }
}

/// `(line number, (key, value))` for every non-blank, non-comment line.
pub fn parse_pairs(text: &str) -> Result<Vec<(usize, (String, String))>, AppError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| AppError::Config(format!("line {}: expected key = value", i + 1)))?;
        out.push((i + 1, (k.trim().to_string(), v.trim().to_string())));
    }
    Ok(out)
}

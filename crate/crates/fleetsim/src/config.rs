//! JSON configuration files and command-line overrides.
//!
//! A file holds any subset of the flat `SystemConfig` keys; missing keys take
//! the defaults. Flags of the same name override the file. Two keys are
//! derived when left unset: `delta` follows `lambda`, and `charge_time`
//! follows `alpha` and `flight_endurance`.

use std::path::Path;

use clap::Args;
use fleetsim_core::fleet::default_delta;
use fleetsim_core::SystemConfig;
use serde_json::{Map, Value};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigOverrides {
    #[arg(long = "side_km", alias = "side-km")]
    pub side_km: Option<f64>,
    #[arg(long = "K")]
    pub vehicles: Option<usize>,
    #[arg(long = "L")]
    pub depots: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long = "flight_endurance", alias = "flight-endurance")]
    pub flight_endurance: Option<f64>,
    #[arg(long = "charge_time", alias = "charge-time")]
    pub charge_time: Option<f64>,
    #[arg(long = "battery_low", alias = "battery-low")]
    pub battery_low: Option<f64>,
    #[arg(long = "battery_ready", alias = "battery-ready")]
    pub battery_ready: Option<f64>,
    #[arg(long = "C_v")]
    pub cost_vehicle: Option<f64>,
    #[arg(long = "C_d")]
    pub cost_depot: Option<f64>,
}

impl ConfigOverrides {
    fn entries(&self) -> Vec<(&'static str, Option<Value>)> {
        let f = |x: Option<f64>| x.map(Value::from);
        let u = |x: Option<usize>| x.map(Value::from);
        vec![
            ("side_km", f(self.side_km)),
            ("K", u(self.vehicles)),
            ("L", u(self.depots)),
            ("lambda", f(self.lambda)),
            ("nu", f(self.nu)),
            ("alpha", f(self.alpha)),
            ("delta", f(self.delta)),
            ("flight_endurance", f(self.flight_endurance)),
            ("charge_time", f(self.charge_time)),
            ("battery_low", f(self.battery_low)),
            ("battery_ready", f(self.battery_ready)),
            ("C_v", f(self.cost_vehicle)),
            ("C_d", f(self.cost_depot)),
        ]
    }
}

pub fn read_config_file(path: &Path) -> CliResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(CliError::Config(format!("{}: expected a JSON object", path.display()))),
        Err(e) => Err(CliError::Config(format!("{}: {e}", path.display()))),
    }
}

/// Merges defaults, the file's keys and the overrides, then validates.
pub fn resolve(file: Option<&Map<String, Value>>, overrides: &ConfigOverrides) -> CliResult<SystemConfig> {
    let Value::Object(mut merged) = serde_json::to_value(SystemConfig::default())? else {
        unreachable!("config serializes to an object");
    };
    let mut given: Vec<String> = Vec::new();
    for (key, value) in file.into_iter().flatten() {
        if !merged.contains_key(key) {
            return Err(CliError::Config(format!("unknown configuration key `{key}`")));
        }
        merged.insert(key.clone(), value.clone());
        given.push(key.clone());
    }
    for (key, value) in overrides.entries() {
        if let Some(v) = value {
            merged.insert(key.to_string(), v);
            given.push(key.to_string());
        }
    }
    let is_given = |k: &str| given.iter().any(|g| g == k);

    let mut cfg: SystemConfig =
        serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Config(e.to_string()))?;
    if !is_given("delta") && cfg.lambda > 0.0 {
        cfg.delta = default_delta(cfg.lambda);
    }
    if !is_given("charge_time") && is_given("alpha") && cfg.alpha > 0.0 {
        cfg.charge_time = cfg.flight_endurance * (1.0 - cfg.alpha) / cfg.alpha;
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

pub fn load(path: Option<&Path>, overrides: &ConfigOverrides) -> CliResult<SystemConfig> {
    let file = path.map(read_config_file).transpose()?;
    resolve(file.as_ref(), overrides)
}

//! Experiment configuration: a flat `key = value` document with dB-suffixed
//! keys for radio quantities, converted to linear units here at the
//! boundary. Defaults reproduce the single-cell experiment setup
//! (R = 250 m, L = 100 m, alpha = 4, A = 1, rho = N0 = -90 dBm,
//! theta = 0 dB, gamma = 0.99, T_d = 0.8).

use std::fmt;
use std::path::PathBuf;

use d2dshare_core::channel::RadioParams;
use d2dshare_core::strategies::StrategyKind;

/// Run-size presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// 500 topologies x 10^4 slots: minutes on a laptop.
    Desk,
    /// 5*10^3 topologies x 10^3 slots (5*10^6 slots total).
    Paper,
}

impl Scale {
    pub fn sizes(self) -> (u32, u32) {
        match self {
            Scale::Desk => (500, 10_000),
            Scale::Paper => (5_000, 1_000),
        }
    }
}

/// A full sweep description: axes, scenario template, run sizes, output.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub strategies: Vec<StrategyKind>,
    pub w_list: Vec<u32>,
    /// Target D2D SNR axis, dB (used by AWA-S rows).
    pub xi_db_list: Vec<f64>,
    /// AWAm-S ladder: `awam_levels` powers doubling up from `awam_base_dbm`.
    pub awam_levels: u32,
    pub awam_base_dbm: f64,
    pub gamma: f64,
    pub t_d: f64,
    pub r_cell: f64,
    pub l_max: f64,
    pub radio: RadioParams,
    pub n_topologies: u32,
    pub slots_per_topology: u32,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let n0 = dbm_to_watts(-90.0);
        ExperimentSpec {
            strategies: vec![StrategyKind::AwaS],
            w_list: vec![2],
            xi_db_list: vec![10.0],
            awam_levels: 12,
            awam_base_dbm: -13.0,
            gamma: 0.99,
            t_d: 0.8,
            r_cell: 250.0,
            l_max: 100.0,
            radio: RadioParams {
                a: 1.0,
                alpha: 4.0,
                n0,
                theta: db_to_linear(0.0),
                i_ic: 0.0,
                // transmit powers are set per topology by the strategies
                p_u: 1.0,
                p_s: 1.0,
                rho: n0,
                xi: 1.0,
            },
            n_topologies: 500,
            slots_per_topology: 10_000,
            seed: 1,
            out: None,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let complain = |what: &str| {
            Err(ConfigError {
                line: None,
                message: what.to_string(),
            })
        };
        if self.strategies.is_empty() || self.w_list.is_empty() || self.xi_db_list.is_empty() {
            return complain("sweep axes must be nonempty");
        }
        if self.w_list.iter().any(|w| *w < 1) {
            return complain("w_list entries must be at least 1");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return complain("gamma must lie in (0, 1)");
        }
        if !self.t_d.is_finite() || self.t_d < 0.0 {
            return complain("t_d must be nonnegative");
        }
        if self.awam_levels < 1 {
            return complain("awam_levels must be at least 1");
        }
        if !(self.r_cell > 0.0 && self.l_max > 0.0) {
            return complain("r_m and l_m must be positive");
        }
        if self.n_topologies < 1 || self.slots_per_topology < 1 {
            return complain("n_topologies and slots_per_topology must be at least 1");
        }
        if self.radio.validate().is_err() {
            return complain("radio parameters are out of range");
        }
        if let Some(out) = &self.out {
            let parent = out.parent().filter(|p| !p.as_os_str().is_empty());
            if let Some(parent) = parent {
                if !parent.is_dir() {
                    return Err(ConfigError {
                        line: None,
                        message: format!("output directory {} does not exist", parent.display()),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Parse failure with the offending line when one is known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "config line {line}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Parses a configuration document on top of the defaults.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, ConfigError> {
    apply_config(text, ExperimentSpec::default())
}

/// Applies a configuration document on top of an existing spec (used to
/// override a recipe). Lines are `key = value`; `#` starts a comment.
pub fn apply_config(text: &str, mut spec: ExperimentSpec) -> Result<ExperimentSpec, ConfigError> {
    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError {
            line: Some(line_no),
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        apply_key(&mut spec, key, value).map_err(|message| ConfigError {
            line: Some(line_no),
            message,
        })?;
    }
    spec.validate()?;
    Ok(spec)
}

fn parse_number(key: &str, value: &str) -> Result<f64, String> {
    let n: f64 = value
        .parse()
        .map_err(|_| format!("invalid number for `{key}`: `{value}`"))?;
    if !n.is_finite() {
        return Err(format!("value for `{key}` must be finite"));
    }
    Ok(n)
}

fn parse_count(key: &str, value: &str) -> Result<u64, String> {
    value
        .parse()
        .map_err(|_| format!("invalid integer for `{key}`: `{value}`"))
}

fn parse_list<T, F: Fn(&str) -> Result<T, String>>(value: &str, f: F) -> Result<Vec<T>, String> {
    value.split(',').map(|item| f(item.trim())).collect()
}

fn parse_strategy(name: &str) -> Result<StrategyKind, String> {
    match name {
        "awa_s" => Ok(StrategyKind::AwaS),
        "awam_s" => Ok(StrategyKind::AwamS),
        "geo_s" => Ok(StrategyKind::GeoS),
        "no_d2d" => Ok(StrategyKind::NoD2d),
        other => Err(format!(
            "unknown strategy `{other}` (expected awa_s, awam_s, geo_s, or no_d2d)"
        )),
    }
}

fn apply_key(spec: &mut ExperimentSpec, key: &str, value: &str) -> Result<(), String> {
    match key {
        "r_m" => spec.r_cell = parse_number(key, value)?,
        "l_m" => spec.l_max = parse_number(key, value)?,
        "alpha" => spec.radio.alpha = parse_number(key, value)?,
        "a" => spec.radio.a = parse_number(key, value)?,
        "n0_dbm" => spec.radio.n0 = dbm_to_watts(parse_number(key, value)?),
        "rho_dbm" => spec.radio.rho = dbm_to_watts(parse_number(key, value)?),
        "theta_db" => spec.radio.theta = db_to_linear(parse_number(key, value)?),
        "i_ic_dbm" => spec.radio.i_ic = dbm_to_watts(parse_number(key, value)?),
        "gamma" => spec.gamma = parse_number(key, value)?,
        "t_d" => spec.t_d = parse_number(key, value)?,
        "strategies" => spec.strategies = parse_list(value, parse_strategy)?,
        "w_list" => {
            spec.w_list = parse_list(value, |item| parse_count(key, item).map(|n| n as u32))?
        }
        "xi_db_list" => spec.xi_db_list = parse_list(value, |item| parse_number(key, item))?,
        "awam_levels" => spec.awam_levels = parse_count(key, value)? as u32,
        "awam_base_dbm" => spec.awam_base_dbm = parse_number(key, value)?,
        "n_topologies" => spec.n_topologies = parse_count(key, value)? as u32,
        "slots_per_topology" => spec.slots_per_topology = parse_count(key, value)? as u32,
        "seed" => spec.seed = parse_count(key, value)?,
        "out" => spec.out = Some(PathBuf::from(value)),
        other => return Err(format!("unknown key `{other}`")),
    }
    Ok(())
}

//! `key = value` run configuration.
//!
//! The preset (default `bscan`) expands first, using the frame count of the
//! input, then every explicit key overrides it.

use quasi_core::quantile::KernelSpec;
use quasi_core::robust::HuberSpec;
use quasi_core::solver::{Mode, Preset, SolverConfig};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key {key:?}")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: invalid value {value:?} for {key}")]
    Value { line: usize, key: String, value: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HuberMode {
    Fixed,
    /// One threshold from the residuals of all frames.
    AutoMad,
    /// A threshold per frame.
    AutoMadFrame,
}

/// Every key is optional; absent keys fall back to the preset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub preset: Option<Preset>,
    pub mode: Option<Mode>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub omega: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub k_outer: Option<usize>,
    pub k_inner: Option<usize>,
    pub k_cg: Option<usize>,
    pub kernel_d: Option<usize>,
    pub quantile_p: Option<f64>,
    pub huber_mode: Option<HuberMode>,
    pub huber_eps: Option<f64>,
    pub seed: Option<u64>,
    pub log_domain: Option<bool>,
    pub z_start: Option<usize>,
    pub z_count: Option<usize>,
    pub mimo_data_factor: Option<f64>,
}

pub const KEYS: [&str; 20] = [
    "preset",
    "mode",
    "lambda",
    "mu",
    "omega",
    "alpha",
    "beta",
    "gamma",
    "k_outer",
    "k_inner",
    "k_cg",
    "kernel_d",
    "quantile_p",
    "huber_mode",
    "huber_eps",
    "seed",
    "log_domain",
    "z_start",
    "z_count",
    "mimo_data_factor",
];

/// Solver settings plus the pipeline options around them.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub preset: Preset,
    pub solver: SolverConfig,
    pub seed: u64,
    pub log_domain: bool,
    pub z_start: usize,
    pub z_count: Option<usize>,
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut seen: Vec<&str> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            let known = KEYS.iter().find(|k| **k == key).ok_or_else(|| ConfigError::UnknownKey {
                line,
                key: key.to_owned(),
            })?;
            if seen.contains(known) {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.to_owned(),
                });
            }
            seen.push(known);
            cfg.set(key, value).ok_or_else(|| ConfigError::Value {
                line,
                key: key.to_owned(),
                value: value.to_owned(),
            })?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Option<()> {
        let f = || v.parse::<f64>().ok().filter(|x| x.is_finite());
        let u = || v.parse::<usize>().ok();
        match key {
            "preset" => self.preset = Some(Preset::parse(v)?),
            "mode" => self.mode = Some(Mode::parse(v)?),
            "lambda" => self.lambda = Some(f()?),
            "mu" => self.mu = Some(f()?),
            "omega" => self.omega = Some(f()?),
            "alpha" => self.alpha = Some(f()?),
            "beta" => self.beta = Some(f()?),
            "gamma" => self.gamma = Some(f()?),
            "k_outer" => self.k_outer = Some(u()?),
            "k_inner" => self.k_inner = Some(u()?),
            "k_cg" => self.k_cg = Some(u()?),
            "kernel_d" => self.kernel_d = Some(u()?),
            "quantile_p" => self.quantile_p = Some(f()?),
            "huber_mode" => {
                self.huber_mode = Some(match v {
                    "fixed" => HuberMode::Fixed,
                    "auto-mad" => HuberMode::AutoMad,
                    "auto-mad-frame" => HuberMode::AutoMadFrame,
                    _ => return None,
                })
            }
            "huber_eps" => self.huber_eps = Some(f()?),
            "seed" => self.seed = Some(v.parse().ok()?),
            "log_domain" => self.log_domain = Some(parse_bool(v)?),
            "z_start" => self.z_start = Some(u()?),
            "z_count" => self.z_count = Some(u()?),
            "mimo_data_factor" => self.mimo_data_factor = Some(f()?),
            _ => return None,
        }
        Some(())
    }

    /// Canonical text: one line per present key, in [`KEYS`] order.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push_str(&format!("{k} = {v}\n"));
            }
        };
        put("preset", self.preset.map(|p| p.name().to_owned()));
        put("mode", self.mode.map(|m| m.name().to_owned()));
        put("lambda", self.lambda.map(|v| v.to_string()));
        put("mu", self.mu.map(|v| v.to_string()));
        put("omega", self.omega.map(|v| v.to_string()));
        put("alpha", self.alpha.map(|v| v.to_string()));
        put("beta", self.beta.map(|v| v.to_string()));
        put("gamma", self.gamma.map(|v| v.to_string()));
        put("k_outer", self.k_outer.map(|v| v.to_string()));
        put("k_inner", self.k_inner.map(|v| v.to_string()));
        put("k_cg", self.k_cg.map(|v| v.to_string()));
        put("kernel_d", self.kernel_d.map(|v| v.to_string()));
        put("quantile_p", self.quantile_p.map(|v| v.to_string()));
        put(
            "huber_mode",
            self.huber_mode.map(|m| match m {
                HuberMode::Fixed => "fixed".to_owned(),
                HuberMode::AutoMad => "auto-mad".to_owned(),
                HuberMode::AutoMadFrame => "auto-mad-frame".to_owned(),
            }),
        );
        put("huber_eps", self.huber_eps.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("log_domain", self.log_domain.map(|v| v.to_string()));
        put("z_start", self.z_start.map(|v| v.to_string()));
        put("z_count", self.z_count.map(|v| v.to_string()));
        put("mimo_data_factor", self.mimo_data_factor.map(|v| v.to_string()));
        out
    }

    /// Expands the preset for `frames` input frames and applies overrides.
    pub fn resolve(&self, frames: usize) -> Result<Resolved, ConfigError> {
        let preset = self.preset.unwrap_or(Preset::Bscan);
        let mut s = preset.config(frames);
        let pick = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        pick(&mut s.lambda, self.lambda);
        pick(&mut s.mu, self.mu);
        pick(&mut s.omega, self.omega);
        pick(&mut s.alpha, self.alpha);
        pick(&mut s.beta, self.beta);
        pick(&mut s.gamma, self.gamma);
        pick(&mut s.data_factor, self.mimo_data_factor);
        s.k_outer = self.k_outer.unwrap_or(s.k_outer);
        s.k_inner = self.k_inner.unwrap_or(s.k_inner);
        s.k_cg = self.k_cg.unwrap_or(s.k_cg);
        s.mode = self.mode.unwrap_or(s.mode);
        if self.kernel_d.is_some() || self.quantile_p.is_some() {
            s.kernel = KernelSpec::new(
                self.kernel_d.unwrap_or(s.kernel.width()),
                self.quantile_p.unwrap_or(s.kernel.p()),
            )
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        s.huber = match (self.huber_mode, self.huber_eps) {
            (Some(HuberMode::AutoMad | HuberMode::AutoMadFrame), Some(_)) => {
                return Err(ConfigError::Invalid("huber_eps requires huber_mode = fixed".into()))
            }
            (Some(HuberMode::Fixed), None) => {
                return Err(ConfigError::Invalid("huber_mode = fixed requires huber_eps".into()))
            }
            (_, Some(eps)) => HuberSpec::Fixed(eps),
            (Some(HuberMode::AutoMadFrame), None) => HuberSpec::AutoMadPerFrame,
            (Some(HuberMode::AutoMad), None) | (None, None) => HuberSpec::AutoMad,
        };
        s.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.z_count == Some(0) {
            return Err(ConfigError::Invalid("z_count must be >= 1".into()));
        }
        Ok(Resolved {
            preset,
            solver: s,
            seed: self.seed.unwrap_or(0),
            log_domain: self.log_domain.unwrap_or(false),
            z_start: self.z_start.unwrap_or(0),
            z_count: self.z_count.or(preset.z_count()),
        })
    }
}

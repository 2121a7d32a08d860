//! Experiment configuration: defaults, a flat key=value config file, and
//! flag overrides layered on top.

use cca_core::pipeline::{Method, ModelKind, WhiteningKind};
use cca_core::synthetic::FactorMode;
use std::path::{Path, PathBuf};

pub fn parse_model(s: &str) -> Result<ModelKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "dcca" => Ok(ModelKind::Dcca),
        "ncca" => Ok(ModelKind::Ncca),
        "mcca" => Ok(ModelKind::Mcca),
        other => Err(format!("unknown model {other:?}; expected dcca, ncca or mcca")),
    }
}

pub fn parse_method(s: &str) -> Result<Method, String> {
    match s.to_ascii_lowercase().as_str() {
        "cumulant" => Ok(Method::Cumulant),
        "gencov" => Ok(Method::Gencov),
        "spectral" => Ok(Method::Spectral),
        other => Err(format!(
            "unknown method {other:?}; expected cumulant, gencov or spectral"
        )),
    }
}

pub fn parse_whitening(s: &str) -> Result<WhiteningKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "exact" => Ok(WhiteningKind::Exact),
        "randomized" => Ok(WhiteningKind::Randomized),
        other => Err(format!(
            "unknown whitening {other:?}; expected exact or randomized"
        )),
    }
}

pub fn parse_mode(s: &str) -> Result<FactorMode, String> {
    match s.to_ascii_lowercase().as_str() {
        "dirichlet" => Ok(FactorMode::Dirichlet),
        "fixed2d" => Ok(FactorMode::Fixed2d),
        other => Err(format!(
            "unknown factor mode {other:?}; expected dirichlet or fixed2d"
        )),
    }
}

pub fn method_name(m: Method) -> &'static str {
    match m {
        Method::Cumulant => "cumulant",
        Method::Gencov => "gencov",
        Method::Spectral => "spectral",
    }
}

/// Full sweep description; defaults follow the synthetic protocol
/// (N grid {500, 1000, 2000, 5000, 10000}, 5 trials per size).
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub mode: FactorMode,
    pub methods: Vec<Method>,
    pub m1: usize,
    pub m2: usize,
    pub k: usize,
    pub k1: usize,
    pub k2: usize,
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub ls: f64,
    pub ln: f64,
    pub n_grid: Vec<usize>,
    pub trials: u64,
    pub delta_grid: Vec<f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub whitening: WhiteningKind,
    pub max_sweeps: usize,
    pub tol: f64,
    /// Sign-aware column matching in the error metric (continuous models).
    pub sign: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: ModelKind::Dcca,
            mode: FactorMode::Dirichlet,
            methods: vec![Method::Gencov],
            m1: 20,
            m2: 20,
            k: 10,
            k1: 20,
            k2: 20,
            c: 0.3,
            c1: 0.1,
            c2: 0.1,
            ls: 1000.0,
            ln: 1000.0,
            n_grid: vec![500, 1000, 2000, 5000, 10_000],
            trials: 5,
            delta_grid: vec![0.1],
            seed: 0,
            out: PathBuf::from("results"),
            whitening: WhiteningKind::Exact,
            max_sweeps: 100,
            tol: 1e-10,
            sign: false,
        }
    }
}

impl ExperimentConfig {
    /// Applies one key=value assignment; used for both the config file and
    /// flag overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let usize_of = |v: &str| v.parse::<usize>().map_err(|e| format!("{key}: {e}"));
        let f64_of = |v: &str| v.parse::<f64>().map_err(|e| format!("{key}: {e}"));
        match key {
            "model" => self.model = parse_model(value)?,
            "mode" => self.mode = parse_mode(value)?,
            "methods" | "method" => {
                self.methods = value
                    .split(',')
                    .map(|s| parse_method(s.trim()))
                    .collect::<Result<_, _>>()?;
            }
            "m1" => self.m1 = usize_of(value)?,
            "m2" => self.m2 = usize_of(value)?,
            "k" => self.k = usize_of(value)?,
            "k1" => self.k1 = usize_of(value)?,
            "k2" => self.k2 = usize_of(value)?,
            "c" => self.c = f64_of(value)?,
            "c1" => self.c1 = f64_of(value)?,
            "c2" => self.c2 = f64_of(value)?,
            "ls" => self.ls = f64_of(value)?,
            "ln" => self.ln = f64_of(value)?,
            "n_grid" => {
                self.n_grid = value
                    .split(',')
                    .map(|s| s.trim().parse::<usize>().map_err(|e| format!("n_grid: {e}")))
                    .collect::<Result<_, _>>()?;
            }
            "trials" => self.trials = value.parse().map_err(|e| format!("trials: {e}"))?,
            "delta_grid" | "delta" => {
                self.delta_grid = value
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .map_err(|e| format!("delta_grid: {e}"))
                    })
                    .collect::<Result<_, _>>()?;
            }
            "seed" => self.seed = value.parse().map_err(|e| format!("seed: {e}"))?,
            "out" => self.out = PathBuf::from(value),
            "whitening" => self.whitening = parse_whitening(value)?,
            "max_sweeps" => self.max_sweeps = usize_of(value)?,
            "tol" => self.tol = f64_of(value)?,
            "sign" => self.sign = value.parse().map_err(|e| format!("sign: {e}"))?,
            other => return Err(format!("unknown config key {other:?}")),
        }
        Ok(())
    }

    /// Loads key=value lines ('#' comments, blank lines ignored) over the
    /// defaults.
    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        let mut config = ExperimentConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                format!("{}:{}: expected key=value", path.display(), idx + 1)
            })?;
            config
                .set(key.trim(), value.trim())
                .map_err(|e| format!("{}:{}: {e}", path.display(), idx + 1))?;
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n_grid.is_empty() {
            return Err("n_grid must be non-empty".into());
        }
        if self.delta_grid.is_empty() {
            return Err("delta_grid must be non-empty".into());
        }
        if self.methods.is_empty() {
            return Err("methods must be non-empty".into());
        }
        if self.trials == 0 {
            return Err("trials must be at least 1".into());
        }
        if self.model == ModelKind::Mcca {
            return Err("the experiment generator covers dcca and ncca only".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_apply() {
        let mut c = ExperimentConfig::default();
        c.set("model", "ncca").unwrap();
        c.set("methods", "gencov, spectral").unwrap();
        c.set("n_grid", "100,200").unwrap();
        c.set("delta", "0.05,0.1").unwrap();
        assert_eq!(c.model, ModelKind::Ncca);
        assert_eq!(c.methods, vec![Method::Gencov, Method::Spectral]);
        assert_eq!(c.n_grid, vec![100, 200]);
        assert_eq!(c.delta_grid, vec![0.05, 0.1]);
    }

    #[test]
    fn unknown_key_rejected() {
        let mut c = ExperimentConfig::default();
        assert!(c.set("bogus", "1").is_err());
    }

    #[test]
    fn zero_trials_invalid() {
        let mut c = ExperimentConfig::default();
        c.set("trials", "0").unwrap();
        assert!(c.validate().is_err());
    }
}

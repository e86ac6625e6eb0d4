//! Run configuration: defaults for every knob, flat key=value config files,
//! and the resolved echo embedded in every artifact so a run can be
//! reproduced from its own output.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use ipd_replicator::dynamics::{LearningConfig, Mode};
use ipd_replicator::experiments::EnsembleSpec;
use ipd_replicator::game::{enumerate_information_classes, InformationClass, PayoffMatrix};

/// Identity of one run. Output locations are deliberately not part of it:
/// the echoed config names the data, not where it landed.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub class_x: String,
    pub class_y: String,
    /// Tournament entrants: comma-separated codes or "all13" (every class
    /// that references the opponent's action).
    pub classes: String,
    /// T,R,P,S.
    pub payoff: [f64; 4],
    /// Sweep matrices: semicolon-separated T,R,P,S quadruples.
    pub payoffs: String,
    pub samples: usize,
    pub seed: u64,
    pub dt: f64,
    pub t_max: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub window: f64,
    pub stride: usize,
    pub fp_tol: f64,
    pub cycle_tol: f64,
    pub drift_tol: f64,
    pub freeze_speed: f64,
    pub freeze_steps: usize,
    /// "mutual" or "one-sided".
    pub mode: String,
    /// Block probabilities of the fixed opponent (on class_y), used by
    /// one-sided runs.
    pub fixed_opponent: Vec<f64>,
    /// Report times for payoff-vs-time tables; empty selects a log-spaced
    /// default grid.
    pub times: Vec<f64>,
    pub n_equilibria: usize,
    /// Worker threads; 0 means one per core. Never affects results.
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let lc = LearningConfig::default();
        Self {
            class_x: "1234".to_string(),
            class_y: "1212".to_string(),
            classes: "all13".to_string(),
            payoff: [5.0, 3.0, 1.0, 0.0],
            payoffs: "5,3,1,0;5,4,2,0".to_string(),
            samples: 1000,
            seed: 1,
            dt: lc.dt,
            t_max: lc.t_max,
            epsilon: lc.epsilon,
            delta: 0.05,
            window: lc.window,
            stride: lc.stride,
            fp_tol: lc.fp_tol,
            cycle_tol: lc.cycle_tol,
            drift_tol: lc.drift_tol,
            freeze_speed: lc.freeze_speed,
            freeze_steps: lc.freeze_steps,
            mode: "mutual".to_string(),
            fixed_opponent: vec![0.9, 0.1],
            times: Vec::new(),
            n_equilibria: 100,
            jobs: 0,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .trim()
        .parse()
        .map_err(|_| format!("config key '{key}': cannot parse '{value}'"))
}

pub fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>, String> {
    let trimmed = value.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    trimmed.split(',').map(|p| parse_num(key, p)).collect()
}

pub fn parse_payoff(value: &str) -> Result<[f64; 4], String> {
    let parts = parse_f64_list("payoff", value)?;
    <[f64; 4]>::try_from(parts)
        .map_err(|v| format!("payoff needs four values T,R,P,S, got {}", v.len()))
}

impl RunConfig {
    /// Applies one `key = value` assignment. Keys mirror the flag names.
    pub fn set_key(&mut self, key: &str, value: &str) -> Result<(), String> {
        let value = value.trim();
        match key {
            "class-x" => self.class_x = value.to_string(),
            "class-y" => self.class_y = value.to_string(),
            "classes" => self.classes = value.to_string(),
            "payoff" => self.payoff = parse_payoff(value)?,
            "payoffs" => self.payoffs = value.to_string(),
            "samples" => self.samples = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "dt" => self.dt = parse_num(key, value)?,
            "t-max" => self.t_max = parse_num(key, value)?,
            "epsilon" => self.epsilon = parse_num(key, value)?,
            "delta" => self.delta = parse_num(key, value)?,
            "window" => self.window = parse_num(key, value)?,
            "stride" => self.stride = parse_num(key, value)?,
            "fp-tol" => self.fp_tol = parse_num(key, value)?,
            "cycle-tol" => self.cycle_tol = parse_num(key, value)?,
            "drift-tol" => self.drift_tol = parse_num(key, value)?,
            "freeze-speed" => self.freeze_speed = parse_num(key, value)?,
            "freeze-steps" => self.freeze_steps = parse_num(key, value)?,
            "mode" => {
                if value != "mutual" && value != "one-sided" {
                    return Err(format!("mode must be 'mutual' or 'one-sided', got '{value}'"));
                }
                self.mode = value.to_string();
            }
            "fixed-opponent" => self.fixed_opponent = parse_f64_list(key, value)?,
            "times" => self.times = parse_f64_list(key, value)?,
            "n-equilibria" => self.n_equilibria = parse_num(key, value)?,
            "jobs" => self.jobs = parse_num(key, value)?,
            _ => return Err(format!("unknown config key '{key}'")),
        }
        Ok(())
    }

    /// Merges a flat config file: one `key = value` per line, '#' comments.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                format!("{}:{}: expected key = value", path.display(), lineno + 1)
            })?;
            self.set_key(key.trim(), value)
                .map_err(|e| format!("{}:{}: {e}", path.display(), lineno + 1))?;
        }
        Ok(())
    }

    /// The resolved config as a flat file body; `apply_file` on it restores
    /// this exact configuration. f64 values print in shortest round-trip
    /// form.
    pub fn to_flat(&self) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").expect("string write");
        kv("class-x", self.class_x.clone());
        kv("class-y", self.class_y.clone());
        kv("classes", self.classes.clone());
        kv("payoff", join(&self.payoff));
        kv("payoffs", self.payoffs.clone());
        kv("samples", self.samples.to_string());
        kv("seed", self.seed.to_string());
        kv("dt", self.dt.to_string());
        kv("t-max", self.t_max.to_string());
        kv("epsilon", self.epsilon.to_string());
        kv("delta", self.delta.to_string());
        kv("window", self.window.to_string());
        kv("stride", self.stride.to_string());
        kv("fp-tol", self.fp_tol.to_string());
        kv("cycle-tol", self.cycle_tol.to_string());
        kv("drift-tol", self.drift_tol.to_string());
        kv("freeze-speed", self.freeze_speed.to_string());
        kv("freeze-steps", self.freeze_steps.to_string());
        kv("mode", self.mode.clone());
        kv("fixed-opponent", join(&self.fixed_opponent));
        kv("times", join(&self.times));
        kv("n-equilibria", self.n_equilibria.to_string());
        kv("jobs", self.jobs.to_string());
        out
    }

    pub fn mode_enum(&self) -> Mode {
        // set_key validated the string; the default is valid too.
        if self.mode == "one-sided" {
            Mode::OneSidedX
        } else {
            Mode::Mutual
        }
    }

    pub fn payoff_matrix(&self) -> Result<PayoffMatrix, String> {
        let [t, r, p, s] = self.payoff;
        PayoffMatrix::new(t, r, p, s).map_err(|e| e.to_string())
    }

    pub fn learning_config(&self) -> Result<LearningConfig, String> {
        let cfg = LearningConfig {
            class_x: InformationClass::from_code(&self.class_x).map_err(|e| e.to_string())?,
            class_y: InformationClass::from_code(&self.class_y).map_err(|e| e.to_string())?,
            payoff: self.payoff_matrix()?,
            mode: self.mode_enum(),
            dt: self.dt,
            t_max: self.t_max,
            epsilon: self.epsilon,
            window: self.window,
            fp_tol: self.fp_tol,
            cycle_tol: self.cycle_tol,
            drift_tol: self.drift_tol,
            stride: self.stride,
            freeze_speed: self.freeze_speed,
            freeze_steps: self.freeze_steps,
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    pub fn ensemble_spec(&self) -> Result<EnsembleSpec, String> {
        let mut spec = EnsembleSpec::new(self.learning_config()?, self.samples, self.seed);
        spec.delta = self.delta;
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }

    /// Tournament entrants. "all13" expands to every opponent-referencing
    /// class, sorted by code.
    pub fn class_list(&self) -> Result<Vec<InformationClass>, String> {
        if self.classes == "all13" {
            let mut all: Vec<InformationClass> = enumerate_information_classes()
                .into_iter()
                .filter(InformationClass::references_opponent)
                .collect();
            all.sort_by(|a, b| a.code().cmp(b.code()));
            return Ok(all);
        }
        self.classes
            .split(',')
            .map(|c| InformationClass::from_code(c.trim()).map_err(|e| e.to_string()))
            .collect()
    }

    pub fn sweep_matrices(&self) -> Result<Vec<PayoffMatrix>, String> {
        self.payoffs
            .split(';')
            .map(|quad| {
                let [t, r, p, s] = parse_payoff(quad)?;
                PayoffMatrix::new(t, r, p, s).map_err(|e| e.to_string())
            })
            .collect()
    }

    /// Report times: the configured list, or 0 followed by a log-spaced
    /// grid from the first stored sample to the horizon.
    pub fn resolved_times(&self) -> Vec<f64> {
        if !self.times.is_empty() {
            return self.times.clone();
        }
        let t0 = self.dt * self.stride as f64;
        let n = 120usize;
        let ratio = (self.t_max / t0).powf(1.0 / n as f64);
        let mut times = vec![0.0];
        // powi can land a hair past t_max; clamp so the grid stays valid.
        times.extend((0..=n).map(|k| (t0 * ratio.powi(k as i32)).min(self.t_max)));
        times
    }
}

//! Run configuration: one structured text file (TOML) covering every
//! command, with each command-line flag overriding exactly one key.
//!
//! Unknown keys are rejected so typos fail loudly, and validation runs
//! before any computation; both paths report through the config-error exit
//! code.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use needlets::besov::BesovParams;
use needlets::frames::FrameKind;

/// Whole-run configuration with defaults for every key.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seed for every random draw the commands make.
    pub seed: Seed,
    pub setting: SettingConfig,
    pub frame: FrameConfig,
    pub certify: CertifyConfig,
    pub verify: VerifyConfig,
    pub besov: BesovConfig,
    pub output: OutputConfig,
}

/// Newtype so `seed` can default without a standalone function.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Default for Seed {
    fn default() -> Self {
        Seed(42)
    }
}

/// The weight parameters and the expansion ceiling.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SettingConfig {
    pub alpha: f64,
    pub beta: f64,
    pub max_degree: usize,
}

impl Default for SettingConfig {
    fn default() -> Self {
        SettingConfig {
            alpha: 0.0,
            beta: 0.0,
            max_degree: 2048,
        }
    }
}

/// Frame geometry: kind, scale factor, level count, net fineness, and the
/// perturbation-dual knobs (ignored by the other kinds).
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrameConfig {
    /// `tight`, `needlet`, or `general`.
    pub kind: String,
    /// Dyadic-type scale factor `b > 1` between levels.
    pub b: f64,
    /// Top level `J`; the frame carries levels `0..=J`.
    pub levels: usize,
    /// Net fineness `gamma`; when absent, `frame build` certifies one.
    pub gamma_override: Option<f64>,
    /// Sampling-defect budget of the perturbation dual, in `(0, 1/2)`.
    pub epsilon: f64,
    /// Localization order the perturbation dual is measured at.
    pub sigma: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            kind: "tight".into(),
            b: 2.0,
            levels: 6,
            gamma_override: None,
            epsilon: 0.2,
            sigma: 6.0,
        }
    }
}

/// Knobs of the `certify` command's measurements.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifyConfig {
    /// Heat times for the mass-conservation check.
    pub markov_times: Vec<f64>,
    /// Centers per time for the mass-conservation check.
    pub markov_points: usize,
    /// Largest tolerated mass defect.
    pub markov_tol: f64,
    /// Heat times entering the Gaussian-envelope fit.
    pub gaussian_times: Vec<f64>,
    /// Spatial grid size per axis for the Gaussian-envelope fit.
    pub gaussian_grid: usize,
    /// Bandwidth the net-fineness certificate is issued at.
    pub gamma_lambda: f64,
    /// Norm exponent of the sampling comparison behind the certificate.
    pub gamma_p: f64,
    /// Random band-limited draws per candidate fineness.
    pub gamma_draws: usize,
    /// Random function/interval pairs for the Poincare sweep.
    pub poincare_draws: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            markov_times: vec![0.01, 0.1, 1.0],
            markov_points: 20,
            markov_tol: 1e-8,
            gaussian_times: vec![0.02, 0.05, 0.1, 0.2, 0.5, 1.0],
            gaussian_grid: 50,
            gamma_lambda: 64.0,
            gamma_p: 2.0,
            gamma_draws: 50,
            poincare_draws: 24,
        }
    }
}

/// Knobs of the `frame verify` command.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Random band-limited draws for the reproduction check.
    pub draws: usize,
    /// Tolerance on reproduction residuals and on tight-frame bounds.
    pub tol: f64,
    /// Localization orders tabulated per level.
    pub sigmas: Vec<f64>,
    /// Evaluation grid size for the localization tables.
    pub grid: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            draws: 50,
            tol: 1e-9,
            sigmas: vec![2.0, 4.0, 6.0],
            grid: 257,
        }
    }
}

/// Corpus size and the `(s, p, q)` list for the `besov` command.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BesovConfig {
    /// Corpus size; must be a positive multiple of 30.
    pub corpus: usize,
    /// Parameter triples `[s, p, q]`; `inf` is accepted for `p` and `q`.
    pub triples: Vec<[f64; 3]>,
}

impl Default for BesovConfig {
    fn default() -> Self {
        BesovConfig {
            corpus: 30,
            triples: vec![
                [0.5, 2.0, 2.0],
                [1.0, 2.0, 2.0],
                [0.5, f64::INFINITY, f64::INFINITY],
                [1.0, 1.0, 1.0],
                [0.7, 2.0, f64::INFINITY],
                [1.5, 2.0, 2.0],
            ],
        }
    }
}

/// Where artifacts and reports go.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into() }
    }
}

/// Reads `path` when given, else starts from defaults.
pub fn load(path: Option<&Path>) -> Result<RunConfig, String> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| format!("cannot read {}: {e}", p.display()))?;
            toml::from_str(&text).map_err(|e| format!("cannot parse {}: {e}", p.display()))
        }
    }
}

impl RunConfig {
    /// Full validation; every violation is a config error.
    pub fn validate(&self) -> Result<(), String> {
        let s = &self.setting;
        if !(s.alpha > -1.0 && s.beta > -1.0) || !s.alpha.is_finite() || !s.beta.is_finite() {
            return Err(format!(
                "setting.alpha and setting.beta must be finite and > -1 (got {}, {})",
                s.alpha, s.beta
            ));
        }
        if s.max_degree < 16 {
            return Err(format!(
                "setting.max_degree must be at least 16 (got {})",
                s.max_degree
            ));
        }

        let f = &self.frame;
        FrameKind::parse(&f.kind).map_err(|e| e.to_string())?;
        if !(f.b > 1.0) || !f.b.is_finite() {
            return Err(format!("frame.b must be finite and > 1 (got {})", f.b));
        }
        if f.levels == 0 || f.levels > 24 {
            return Err(format!("frame.levels must lie in 1..=24 (got {})", f.levels));
        }
        if let Some(g) = f.gamma_override {
            if !(g > 0.0) || !g.is_finite() {
                return Err(format!("frame.gamma_override must be positive (got {g})"));
            }
        }
        if !(f.epsilon > 0.0 && f.epsilon < 0.5) {
            return Err(format!("frame.epsilon must lie in (0, 1/2) (got {})", f.epsilon));
        }
        if !(f.sigma > 0.0) {
            return Err(format!("frame.sigma must be positive (got {})", f.sigma));
        }

        let c = &self.certify;
        for (name, value) in [
            ("certify.markov_tol", c.markov_tol),
            ("certify.gamma_lambda", c.gamma_lambda),
            ("verify.tol", self.verify.tol),
        ] {
            if !(value > 0.0) {
                return Err(format!("{name} must be positive (got {value})"));
            }
        }
        for (name, times) in [
            ("certify.markov_times", &c.markov_times),
            ("certify.gaussian_times", &c.gaussian_times),
        ] {
            if times.is_empty() || times.iter().any(|&t| !(t > 0.0)) {
                return Err(format!("{name} must be a nonempty list of positive times"));
            }
        }
        if c.markov_points == 0 {
            return Err("certify.markov_points must be positive".into());
        }
        if c.gaussian_grid < 4 {
            return Err(format!(
                "certify.gaussian_grid must be at least 4 (got {})",
                c.gaussian_grid
            ));
        }
        if !(c.gamma_p >= 1.0) {
            return Err(format!("certify.gamma_p must be at least 1 (got {})", c.gamma_p));
        }
        if c.gamma_draws == 0 || c.poincare_draws == 0 {
            return Err("certify draw counts must be positive".into());
        }

        let v = &self.verify;
        if v.draws == 0 {
            return Err("verify.draws must be positive".into());
        }
        if v.sigmas.is_empty() || v.sigmas.iter().any(|&x| !(x > 0.0)) {
            return Err("verify.sigmas must be a nonempty list of positive orders".into());
        }
        if v.grid < 64 {
            return Err(format!("verify.grid must be at least 64 (got {})", v.grid));
        }

        if self.besov.corpus == 0 || self.besov.corpus % 30 != 0 {
            return Err(format!(
                "besov.corpus must be a positive multiple of 30 (got {})",
                self.besov.corpus
            ));
        }
        for &[bs, bp, bq] in &self.besov.triples {
            BesovParams::new(bs, bp, bq).map_err(|e| format!("besov.triples: {e}"))?;
        }
        Ok(())
    }
}

//! Run configuration: one JSON document that fixes everything a pipeline run
//! depends on, with defaults matching the reference setup (double barrier
//! b = w = 5 nm, V = 0.23 eV; Gaussian x₀ = L/2, σ = w/10; N = 10³).
//!
//! The configuration is hashed (SHA-256 of its canonical JSON form, with all
//! defaults filled in) and the hash keys every derived artifact: CSV headers
//! carry it and the pole/coefficient cache is looked up by it, so artifacts
//! can never silently mix configurations.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::initial::{InitialState, InitialStateSpec};
use crate::poles::SolverOptions;
use crate::potential::{PiecewisePotential, PotentialSpec};
use crate::shorttime::{log_spaced, ClassifierThresholds};
use crate::units::{PhysicalParams, DEFAULT_MASS_RATIO};

/// Time grid for survival curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeGridSpec {
    /// Log-spaced over (0, 10⁻³τ₁], three decades — the short-time window.
    ShortTime { points: usize },
    /// Log-spaced between two absolute times (fs).
    Log { t_min_fs: f64, t_max_fs: f64, points: usize },
    /// Linear between two absolute times (fs), inclusive.
    Linear { t_min_fs: f64, t_max_fs: f64, points: usize },
}

impl Default for TimeGridSpec {
    fn default() -> Self {
        TimeGridSpec::ShortTime { points: 50 }
    }
}

impl TimeGridSpec {
    pub fn validate(&self) -> Result<()> {
        let points = match *self {
            TimeGridSpec::ShortTime { points } => points,
            TimeGridSpec::Log { t_min_fs, t_max_fs, points } => {
                if !(t_min_fs > 0.0 && t_max_fs > t_min_fs) {
                    return Err(Error::validation(format!(
                        "log time grid needs 0 < t_min < t_max, got [{t_min_fs}, {t_max_fs}]"
                    )));
                }
                points
            }
            TimeGridSpec::Linear { t_min_fs, t_max_fs, points } => {
                if !(t_min_fs >= 0.0 && t_max_fs > t_min_fs) {
                    return Err(Error::validation(format!(
                        "linear time grid needs 0 ≤ t_min < t_max, got [{t_min_fs}, {t_max_fs}]"
                    )));
                }
                points
            }
        };
        if points < 2 {
            return Err(Error::validation("time grid needs at least 2 points"));
        }
        Ok(())
    }

    /// Concrete sample times; τ₁ resolves the relative short-time window.
    pub fn times_fs(&self, tau1_fs: f64) -> Vec<f64> {
        match *self {
            TimeGridSpec::ShortTime { points } => {
                log_spaced(1e-6 * tau1_fs, 1e-3 * tau1_fs, points)
            }
            TimeGridSpec::Log { t_min_fs, t_max_fs, points } => {
                log_spaced(t_min_fs, t_max_fs, points)
            }
            TimeGridSpec::Linear { t_min_fs, t_max_fs, points } => (0..points)
                .map(|i| {
                    t_min_fs + (t_max_fs - t_min_fs) * i as f64 / (points - 1) as f64
                })
                .collect(),
        }
    }
}

/// Which fit the `fit`/`figure1` pipelines run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitModeSpec {
    TwoPoint { t_a_fs: f64, t_b_fs: f64 },
    LeastSquares,
    FreeExponent,
}

impl Default for FitModeSpec {
    fn default() -> Self {
        FitModeSpec::LeastSquares
    }
}

/// Classifier / fit options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisOptions {
    /// Rungs in the geometric truncation ladder (ending at n_poles).
    pub ladder_rungs: usize,
    pub thresholds: ClassifierThresholds,
    /// Fit window as fractions of τ₁: (lo·τ₁, hi·τ₁].
    pub window_tau1: (f64, f64),
    pub fit_mode: FitModeSpec,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            ladder_rungs: 5,
            thresholds: ClassifierThresholds::default(),
            window_tau1: (0.0, 1e-3),
            fit_mode: FitModeSpec::default(),
        }
    }
}

/// Grid propagation options for the `oracle`/`compare` pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleOptions {
    pub dx_nm: f64,
    /// Free padding on each side, in units of the region length L.
    pub pad_factor: f64,
    /// Time step; defaults to the accuracy guard ½·(2m/ħ)·dx².
    pub dt_fs: Option<f64>,
    /// Run horizon; defaults to 2τ₁.
    pub t_max_fs: Option<f64>,
    /// Linear sample count over [0, t_max].
    pub samples: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            dx_nm: 0.1,
            pad_factor: 40.0,
            dt_fs: None,
            t_max_fs: None,
            samples: 200,
        }
    }
}

/// Pole-search certification box; resonances beyond it are reached by
/// asymptotic continuation (see the pole solver).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverTuning {
    pub box_re_max: f64,
    pub box_im_max: f64,
}

impl Default for SolverTuning {
    fn default() -> Self {
        let d = SolverOptions::default();
        SolverTuning { box_re_max: d.box_re_max, box_im_max: d.box_im_max }
    }
}

/// The complete, hashable description of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    pub mass_ratio: MassRatio,
    pub initial_state: InitialStateSpec,
    pub n_poles: NPoles,
    pub solver: SolverTuning,
    pub time_grid: TimeGridSpec,
    pub analysis: AnalysisOptions,
    pub oracle: OracleOptions,
}

/// Effective-mass ratio m*/mₑ with the reference default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MassRatio(pub f64);

impl Default for MassRatio {
    fn default() -> Self {
        MassRatio(DEFAULT_MASS_RATIO)
    }
}

/// Truncation order with the reference default N = 10³.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NPoles(pub usize);

impl Default for NPoles {
    fn default() -> Self {
        NPoles(1000)
    }
}

/// Everything a pipeline stage needs, built once from a validated config.
pub struct ResolvedConfig {
    pub potential: PiecewisePotential,
    pub params: PhysicalParams,
    pub initial: InitialState,
}

impl RunConfig {
    /// Parse from a JSON string; unknown fields are rejected silently by
    /// serde only if denied — we accept and ignore them, but every known
    /// field is validated.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::validation(format!("config JSON is malformed: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Check every field and cross-field constraint without computing.
    pub fn validate(&self) -> Result<()> {
        self.resolve().map(|_| ())
    }

    /// Build the potential, parameters and initial state this config names.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let potential = self.potential.build()?;
        let params = PhysicalParams::new(self.mass_ratio.0)?;
        let initial = self.initial_state.build(&potential)?;
        if self.n_poles.0 == 0 {
            return Err(Error::validation("n_poles must be at least 1"));
        }
        if !(self.solver.box_re_max > 0.0 && self.solver.box_im_max < 0.0) {
            return Err(Error::validation(format!(
                "solver box needs box_re_max > 0 and box_im_max < 0, got ({}, {})",
                self.solver.box_re_max, self.solver.box_im_max
            )));
        }
        self.time_grid.validate()?;
        if self.analysis.ladder_rungs < 3 {
            return Err(Error::validation("analysis.ladder_rungs must be at least 3"));
        }
        if !(self.analysis.window_tau1.1 > self.analysis.window_tau1.0
            && self.analysis.window_tau1.0 >= 0.0)
        {
            return Err(Error::validation(format!(
                "analysis.window_tau1 {:?} must satisfy 0 ≤ lo < hi",
                self.analysis.window_tau1
            )));
        }
        let o = &self.oracle;
        if !(o.dx_nm > 0.0 && o.pad_factor > 0.0 && o.samples >= 2) {
            return Err(Error::validation(
                "oracle options need dx > 0, pad_factor > 0 and at least 2 samples",
            ));
        }
        if let Some(dt) = o.dt_fs {
            if !(dt > 0.0) {
                return Err(Error::validation("oracle.dt_fs must be positive"));
            }
        }
        if let Some(t) = o.t_max_fs {
            if !(t > 0.0) {
                return Err(Error::validation("oracle.t_max_fs must be positive"));
            }
        }
        Ok(ResolvedConfig {
            potential,
            params,
            initial,
        })
    }

    /// Canonical JSON: the fully-populated struct serialized with stable
    /// field order, so the hash never depends on which defaults the user
    /// spelled out.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serialization cannot fail")
    }

    /// SHA-256 of the canonical JSON, lowercase hex.
    pub fn config_hash(&self) -> String {
        sha256_hex(self.canonical_json().as_bytes())
    }

    /// Hash over only the fields the pole/coefficient tables depend on
    /// (potential, mass ratio, initial state, truncation order, solver box),
    /// so changing a time grid or fit option does not invalidate the
    /// spectral cache.
    pub fn spectral_hash(&self) -> String {
        let key = serde_json::json!({
            "potential": self.potential,
            "mass_ratio": self.mass_ratio,
            "initial_state": self.initial_state,
            "n_poles": self.n_poles,
            "solver": self.solver,
        });
        sha256_hex(key.to_string().as_bytes())
    }

    /// Solver options this config pins.
    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            n_poles: self.n_poles.0,
            box_re_max: self.solver.box_re_max,
            box_im_max: self.solver.box_im_max,
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        use std::fmt::Write;
        write!(hex, "{byte:02x}").expect("hex formatting cannot fail");
    }
    hex
}

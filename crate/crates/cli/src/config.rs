//! Run configuration: a single JSON document with the benchmark defaults.

use std::path::Path;

use arcscat_core::geometry::{ChebCrack, Crack, CrackSet, Point2, TrigCrack, TrigKind, TrigTerm};
use arcscat_core::inversion::NewtonConfig;
use arcscat_core::sampling::Bounds;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermKind {
    Cos,
    Sin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub kind: TermKind,
    pub m: u32,
    pub coef: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChebSpec {
    pub d0: f64,
    pub d1: f64,
    pub c: Vec<f64>,
}

impl ChebSpec {
    pub fn to_crack(&self) -> Result<ChebCrack, CliError> {
        Ok(ChebCrack::new(self.d0, self.d1, self.c.clone())?)
    }
}

impl From<&ChebCrack> for ChebSpec {
    fn from(c: &ChebCrack) -> Self {
        ChebSpec { d0: c.d0, d1: c.d1, c: c.c.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CrackSpec {
    Trig { ax0: f64, ax1: f64, terms: Vec<TermSpec> },
    Cheb(ChebSpec),
}

impl CrackSpec {
    pub fn to_crack(&self) -> Result<Crack, CliError> {
        Ok(match self {
            CrackSpec::Trig { ax0, ax1, terms } => TrigCrack {
                ax0: *ax0,
                ax1: *ax1,
                terms: terms
                    .iter()
                    .map(|t| TrigTerm {
                        kind: match t.kind {
                            TermKind::Cos => TrigKind::Cos,
                            TermKind::Sin => TrigKind::Sin,
                        },
                        m: t.m,
                        coef: t.coef,
                    })
                    .collect(),
            }
            .into(),
            CrackSpec::Cheb(c) => c.to_crack()?.into(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    /// Relative noise level.
    pub delta: f64,
    /// Data set `i` is perturbed with seed `seed + 100 i`.
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec { delta: 0.0, seed: 1 }
    }
}

/// Mirror of [`NewtonConfig`] with serde defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonSpec {
    pub p0: usize,
    pub m_p: usize,
    pub eps_stop: f64,
    pub tikhonov_lambda: f64,
    pub max_inner: usize,
    pub step_clamp: f64,
    pub damping_retries: usize,
    pub horizontal_guard: f64,
    pub n_nodes: usize,
    pub d_min: f64,
    pub fd_step: Option<f64>,
}

impl Default for NewtonSpec {
    fn default() -> Self {
        NewtonConfig::default().into()
    }
}

impl From<NewtonConfig> for NewtonSpec {
    fn from(c: NewtonConfig) -> Self {
        NewtonSpec {
            p0: c.p0,
            m_p: c.m_p,
            eps_stop: c.eps_stop,
            tikhonov_lambda: c.tikhonov_lambda,
            max_inner: c.max_inner,
            step_clamp: c.step_clamp,
            damping_retries: c.damping_retries,
            horizontal_guard: c.horizontal_guard,
            n_nodes: c.n_nodes,
            d_min: c.d_min,
            fd_step: c.fd_step,
        }
    }
}

impl From<&NewtonSpec> for NewtonConfig {
    fn from(s: &NewtonSpec) -> Self {
        NewtonConfig {
            p0: s.p0,
            m_p: s.m_p,
            eps_stop: s.eps_stop,
            tikhonov_lambda: s.tikhonov_lambda,
            max_inner: s.max_inner,
            step_clamp: s.step_clamp,
            damping_retries: s.damping_retries,
            horizontal_guard: s.horizontal_guard,
            n_nodes: s.n_nodes,
            d_min: s.d_min,
            fd_step: s.fd_step,
        }
    }
}

/// Residual target of one frequency stage: `max(eps, noise_fraction * delta)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub eps: f64,
    #[serde(default)]
    pub noise_fraction: f64,
}

impl TargetSpec {
    pub fn resolve(&self, delta: f64) -> f64 {
        self.eps.max(self.noise_fraction * delta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DsmSpec {
    /// `[x_min, x_max, y_min, y_max]`.
    pub bounds: [f64; 4],
    pub spacing: f64,
    /// Defaults to the number of truth cracks, or 1.
    pub n_cracks: Option<usize>,
}

impl Default for DsmSpec {
    fn default() -> Self {
        DsmSpec { bounds: [-4.0, 4.0, -4.0, 4.0], spacing: 0.05, n_cracks: None }
    }
}

impl DsmSpec {
    pub fn bounds(&self) -> Bounds {
        let [x_min, x_max, y_min, y_max] = self.bounds;
        Bounds { x_min, x_max, y_min, y_max }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LowfreqSpec {
    pub wavenumbers: Vec<f64>,
    pub n_nodes: usize,
    /// Points where `e(k)` is maximized.
    pub probes: Vec<[f64; 2]>,
    /// Grid for the profile `v`, `[x_min, x_max, y_min, y_max]`.
    pub grid_bounds: [f64; 4],
    pub grid_spacing: f64,
}

impl Default for LowfreqSpec {
    fn default() -> Self {
        LowfreqSpec {
            wavenumbers: vec![1e-2, 1e-4, 1e-8],
            n_nodes: 64,
            probes: vec![[0.0, 1.5], [3.0, 0.0], [-3.0, 1.0], [0.5, -2.5], [2.5, 3.5]],
            grid_bounds: [-4.0, 4.0, -3.0, 5.0],
            grid_spacing: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradcheckSpec {
    /// Chebyshev order of the vertical basis on every crack.
    pub order: usize,
    pub fd_step: f64,
}

impl Default for GradcheckSpec {
    fn default() -> Self {
        GradcheckSpec { order: 4, fd_step: 1e-5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Cracks that generate synthetic data.
    pub truth: Vec<CrackSpec>,
    /// Initial guess for the reconstruction.
    pub initial: Vec<ChebSpec>,
    pub frequencies: Vec<f64>,
    pub directions: Vec<[f64; 2]>,
    /// Quadrature nodes per crack for synthetic data and derivative checks.
    pub n_nodes: usize,
    /// Number of observation directions `(cos 2 pi j / N, sin 2 pi j / N)`.
    pub observations: usize,
    pub noise: NoiseSpec,
    pub newton: NewtonSpec,
    /// One residual target per frequency stage, lowest frequency first.
    pub targets: Vec<TargetSpec>,
    /// Build the initial guess from the sampling indicator when none is given.
    pub init_from_dsm: bool,
    pub dsm: DsmSpec,
    pub lowfreq: LowfreqSpec,
    pub gradcheck: GradcheckSpec,
    /// Output directory; not part of the config hash.
    pub output: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            truth: Vec::new(),
            initial: Vec::new(),
            frequencies: vec![3.0],
            directions: vec![[1.0, 0.0]],
            n_nodes: 64,
            observations: 32,
            noise: NoiseSpec::default(),
            newton: NewtonSpec::default(),
            targets: Vec::new(),
            init_from_dsm: false,
            dsm: DsmSpec::default(),
            lowfreq: LowfreqSpec::default(),
            gradcheck: GradcheckSpec::default(),
            output: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: &str| Err(CliError::Schema(msg.to_string()));
        if self.frequencies.is_empty() || self.frequencies.iter().any(|k| !(*k > 0.0)) {
            return bad("frequencies must be a non-empty list of positive numbers");
        }
        if self.directions.is_empty() || self.directions.iter().any(|d| ((d[0] * d[0] + d[1] * d[1]).sqrt() - 1.0).abs() > 1e-12)
        {
            return bad("directions must be a non-empty list of unit vectors");
        }
        if self.observations == 0 || self.n_nodes < 2 {
            return bad("observations must be positive and n_nodes at least 2");
        }
        if !(self.noise.delta >= 0.0) {
            return bad("noise.delta must be non-negative");
        }
        if !(self.dsm.spacing > 0.0) {
            return bad("dsm.spacing must be positive");
        }
        Ok(())
    }

    pub fn truth_set(&self) -> Result<CrackSet, CliError> {
        if self.truth.is_empty() {
            return Err(CliError::Schema("config has no truth cracks".into()));
        }
        let cracks = self.truth.iter().map(CrackSpec::to_crack).collect::<Result<_, _>>()?;
        Ok(CrackSet::new(cracks, self.newton.d_min))
    }

    pub fn initial_cracks(&self) -> Result<Vec<ChebCrack>, CliError> {
        self.initial.iter().map(ChebSpec::to_crack).collect()
    }

    pub fn newton_config(&self) -> NewtonConfig {
        (&self.newton).into()
    }

    pub fn incident_directions(&self) -> Vec<Point2> {
        self.directions.iter().map(|d| Point2::new(d[0], d[1])).collect()
    }

    pub fn n_cracks(&self) -> usize {
        self.dsm.n_cracks.unwrap_or(if self.truth.is_empty() { 1 } else { self.truth.len() })
    }

    /// SHA-256 of the canonical JSON form, output directory excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = None;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_fields() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.frequencies, vec![3.0]);
        assert_eq!(cfg.directions, vec![[1.0, 0.0]]);
        assert_eq!(cfg.observations, 32);
        assert_eq!(cfg.newton_config(), NewtonConfig::default());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"frequency": 3}"#).is_err());
    }

    #[test]
    fn crack_specs_parse() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"truth": [{"kind": "trig", "ax0": 0, "ax1": 1, "terms": [{"kind": "cos", "m": 1, "coef": 0.5}]},
                          {"kind": "cheb", "d0": 2, "d1": 0.5, "c": [0.1, 0.2]}]}"#,
        )
        .unwrap();
        let set = cfg.truth_set().unwrap();
        assert_eq!(set.len(), 2);
        assert!(set.validity_check().is_ok());
    }

    #[test]
    fn hash_ignores_output_directory() {
        let a = RunConfig { output: Some("x".into()), ..RunConfig::default() };
        let b = RunConfig { output: Some("y".into()), ..RunConfig::default() };
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig { noise: NoiseSpec { delta: 0.1, seed: 1 }, ..RunConfig::default() };
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn validation_catches_bad_directions() {
        let cfg = RunConfig { directions: vec![[1.0, 1.0]], ..RunConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig { frequencies: vec![], ..RunConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn targets_scale_with_noise() {
        let t = TargetSpec { eps: 0.01, noise_fraction: 0.5 };
        assert_eq!(t.resolve(0.01), 0.01);
        assert_eq!(t.resolve(0.1), 0.05);
    }
}

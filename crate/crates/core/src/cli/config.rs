//! Versioned experiment configuration.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{NflError, Result};
use crate::evolution::{Grid, Profile};
use crate::kernel::{Kernel, KernelSpec};
use crate::nonlinearity::{Heterogeneous, Homogeneous, Nonlinearity};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Validate,
    Simulate,
    Wave,
    Fronts,
    Regularity,
    Envelope,
    Squeeze,
}

impl Experiment {
    pub fn tag(&self) -> &'static str {
        match self {
            Experiment::Validate => "validate",
            Experiment::Simulate => "simulate",
            Experiment::Wave => "wave",
            Experiment::Fronts => "fronts",
            Experiment::Regularity => "regularity",
            Experiment::Envelope => "envelope",
            Experiment::Squeeze => "squeeze",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NonlinearitySpec {
    Homogeneous(Homogeneous),
    Heterogeneous(Heterogeneous),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dx: f64,
    pub x_min: f64,
    pub x_max: f64,
}

impl GridSpec {
    pub fn grid(&self) -> Grid {
        let n = ((self.x_max - self.x_min) / self.dx).round() as usize + 1;
        Grid { x0: self.x_min, dx: self.dx, n }
    }
}

fn default_save_every() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    pub dt: f64,
    pub t_end: f64,
    /// Level to recenter on; absent keeps the window fixed.
    #[serde(default)]
    pub recenter: Option<f64>,
    #[serde(default = "default_save_every")]
    pub save_every: usize,
}

fn default_tol() -> f64 {
    1e-8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateParams {
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveParams {
    #[serde(default)]
    pub dx: Option<f64>,
    #[serde(default)]
    pub half_width: Option<f64>,
    /// KPP only: decay rate of the exponential data.
    #[serde(default)]
    pub kpp_r: Option<f64>,
    /// KPP only: simulation time.
    #[serde(default)]
    pub kpp_t_end: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontsParams {
    pub levels: Vec<f64>,
    pub reference_level: f64,
    /// `(λ₁, λ₂)` for the width check.
    #[serde(default)]
    pub width_levels: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularityParams {
    /// Multiples of Δx.
    pub eta_cells: Vec<i64>,
    /// Probe spacing from the front at the first/last sample.
    pub probe_margin: f64,
    /// Cells ignored at each window edge in the `u_x` comparison.
    pub edge_cells: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSpec {
    /// `C₀ = c₂T₂ + c0_extra`.
    pub c0_extra: f64,
    #[serde(default)]
    pub delta: Option<f64>,
    /// Step 1 offset horizon `T`.
    pub horizon: f64,
    /// Second start point, in max hit gaps after the first.
    pub start_gaps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqueezeSpec {
    pub alpha0: f64,
    /// Defaults to the cap ε_I.
    #[serde(default)]
    pub eps: Option<f64>,
    /// Residual horizon, default `5/ω`.
    #[serde(default)]
    pub horizon: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub experiment: Experiment,
    pub kernel: KernelSpec,
    pub nonlinearity: NonlinearitySpec,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub initial: Option<Profile>,
    #[serde(default)]
    pub integrator: Option<IntegratorSpec>,
    #[serde(default)]
    pub validate: Option<ValidateParams>,
    #[serde(default)]
    pub wave: Option<WaveParams>,
    #[serde(default)]
    pub fronts: Option<FrontsParams>,
    #[serde(default)]
    pub regularity: Option<RegularityParams>,
    #[serde(default)]
    pub envelope: Option<EnvelopeSpec>,
    #[serde(default)]
    pub squeeze: Option<SqueezeSpec>,
    /// Seed for sampling lattices.
    #[serde(default)]
    pub seed: u64,
    /// Artifact directory; `--out` overrides it and it is dropped from the persisted copy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn at(prefix: &str, e: NflError) -> NflError {
    match e {
        NflError::InvalidParameter { name, reason } => {
            NflError::ConfigInvalid { path: format!("{prefix}.{name}"), reason }
        }
        NflError::GridTooCoarse { dx, limit } => NflError::ConfigInvalid {
            path: format!("{prefix}.dx"),
            reason: format!("{dx} exceeds the resolution limit {limit}"),
        },
        other => other,
    }
}

fn bad(path: &str, reason: impl Into<String>) -> NflError {
    NflError::ConfigInvalid { path: path.to_string(), reason: reason.into() }
}

fn need<'a, T>(v: &'a Option<T>, path: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| bad(path, "section required for this experiment"))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            NflError::ConfigInvalid { path, reason: e.into_inner().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The copy written next to the artifacts.
    pub fn persisted(&self) -> Self {
        ExperimentConfig { output: None, ..self.clone() }
    }

    /// SHA-256 of the persisted serialization.
    pub fn hash(&self) -> String {
        Sha256::digest(self.persisted().to_json().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn kernel(&self) -> Result<Kernel> {
        Kernel::from_spec(self.kernel).map_err(|e| at("kernel", e))
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        match &self.nonlinearity {
            NonlinearitySpec::Homogeneous(h) => Ok(h.validated().map_err(|e| at("nonlinearity", e))?.into()),
            NonlinearitySpec::Heterogeneous(h) => {
                h.fb.validated().map_err(|e| at("nonlinearity.fb", e))?;
                h.fm.validated().map_err(|e| at("nonlinearity.fm", e))?;
                let checked = Heterogeneous::new(h.fb, h.fm, h.modulation, h.theta0, h.theta1, h.kappa0);
                Ok(checked.map_err(|e| at("nonlinearity", e))?.into())
            }
        }
    }

    pub fn homogeneous(&self) -> Result<Homogeneous> {
        match self.nonlinearity()? {
            Nonlinearity::Homogeneous(h) => Ok(h),
            _ => Err(bad("nonlinearity.kind", "this experiment needs a homogeneous nonlinearity")),
        }
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let g = *need(&self.grid, "grid")?;
        if !(g.dx > 0.0) {
            return Err(bad("grid.dx", "must be positive"));
        }
        if !(g.x_max > g.x_min + 2.0 * g.dx) {
            return Err(bad("grid.x_max", "must exceed x_min by at least two cells"));
        }
        self.kernel()?.check_resolution(g.dx).map_err(|e| at("grid", e))?;
        Ok(g)
    }

    pub fn integrator(&self) -> Result<IntegratorSpec> {
        let s = *need(&self.integrator, "integrator")?;
        if !(s.dt > 0.0 && s.dt <= crate::evolution::MAX_DT) {
            return Err(bad("integrator.dt", format!("must lie in (0, {}]", crate::evolution::MAX_DT)));
        }
        if !(s.t_end > 0.0) {
            return Err(bad("integrator.t_end", "must be positive"));
        }
        if s.save_every == 0 {
            return Err(bad("integrator.save_every", "must be at least 1"));
        }
        if let Some(l) = s.recenter {
            if !(l > 0.0 && l < 1.0) {
                return Err(bad("integrator.recenter", "level must lie in (0,1)"));
            }
        }
        Ok(s)
    }

    pub fn initial(&self) -> Result<Profile> {
        Ok(*need(&self.initial, "initial")?)
    }

    /// Checks everything the tagged experiment will touch.
    pub fn validate(&self) -> Result<()> {
        if self.version != SCHEMA_VERSION {
            return Err(bad(
                "version",
                format!("unsupported schema version {}, expected {SCHEMA_VERSION}", self.version),
            ));
        }
        self.kernel()?;
        self.nonlinearity()?;
        let needs_run = matches!(
            self.experiment,
            Experiment::Simulate
                | Experiment::Fronts
                | Experiment::Regularity
                | Experiment::Envelope
                | Experiment::Squeeze
        );
        if needs_run {
            let g = self.grid_spec()?;
            self.integrator()?;
            let p = self.initial()?;
            crate::evolution::make_initial(p, g.grid()).map_err(|e| at("initial", e))?;
        }
        match self.experiment {
            Experiment::Validate => {
                if let Some(v) = &self.validate {
                    if !(v.tol > 0.0) {
                        return Err(bad("validate.tol", "must be positive"));
                    }
                }
            }
            Experiment::Wave => {
                let h = self.homogeneous()?;
                let kpp = matches!(h.family, crate::nonlinearity::Family::Kpp { .. });
                let w = self.wave.clone().unwrap_or(WaveParams {
                    dx: None,
                    half_width: None,
                    kpp_r: None,
                    kpp_t_end: None,
                });
                if kpp && w.kpp_r.is_none() {
                    return Err(bad("wave.kpp_r", "required for the KPP family"));
                }
                if let Some(r) = w.kpp_r {
                    if !(r > 0.0) {
                        return Err(bad("wave.kpp_r", "must be positive"));
                    }
                }
            }
            Experiment::Fronts | Experiment::Envelope => {
                let f = need(&self.fronts, "fronts")?;
                if f.levels.iter().chain(std::iter::once(&f.reference_level)).any(|&l| !(l > 0.0 && l < 1.0)) {
                    return Err(bad("fronts.levels", "levels must lie in (0,1)"));
                }
                if self.experiment == Experiment::Envelope {
                    let e = need(&self.envelope, "envelope")?;
                    if !(e.c0_extra > 0.0) {
                        return Err(bad("envelope.c0_extra", "must be positive"));
                    }
                    if !(e.horizon > 0.0) {
                        return Err(bad("envelope.horizon", "must be positive"));
                    }
                }
            }
            Experiment::Regularity => {
                if self.nonlinearity()?.is_homogeneous() {
                    return Err(bad(
                        "nonlinearity.kind",
                        "regularity needs theta0, theta1, kappa0 from a heterogeneous spec",
                    ));
                }
                let r = need(&self.regularity, "regularity")?;
                if r.eta_cells.is_empty() || r.eta_cells.contains(&0) {
                    return Err(bad("regularity.eta_cells", "need nonzero cell multiples"));
                }
                if self.integrator()?.recenter.is_some() {
                    return Err(bad("integrator.recenter", "regularity needs a fixed window"));
                }
            }
            Experiment::Squeeze => {
                let s = need(&self.squeeze, "squeeze")?;
                if !(s.alpha0 > 0.0) {
                    return Err(bad("squeeze.alpha0", "must be positive"));
                }
                self.homogeneous()?;
            }
            Experiment::Simulate => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "version": 1,
        "experiment": "validate",
        "kernel": {"family": "gaussian", "sigma": 1.0},
        "nonlinearity": {"kind": "homogeneous", "family": "bistable", "theta": 0.25}
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let c = ExperimentConfig::from_json(BASE).unwrap();
        let again = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
    }

    #[test]
    fn negative_sigma_names_field() {
        let bad = BASE.replace("\"sigma\": 1.0", "\"sigma\": -1.0");
        match ExperimentConfig::from_json(&bad) {
            Err(NflError::ConfigInvalid { path, .. }) => assert_eq!(path, "kernel.sigma"),
            other => panic!("{other:?}"),
        }
    }

    // tagged sections are buffered by serde, so type errors stop at the section
    #[test]
    fn type_error_names_section() {
        let bad = BASE.replace("\"sigma\": 1.0", "\"sigma\": \"wide\"");
        match ExperimentConfig::from_json(&bad) {
            Err(NflError::ConfigInvalid { path, .. }) => assert_eq!(path, "kernel"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_section_is_reported() {
        let c = BASE.replace("\"validate\"", "\"simulate\"");
        match ExperimentConfig::from_json(&c) {
            Err(NflError::ConfigInvalid { path, .. }) => assert_eq!(path, "grid"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn untagged_type_error_names_field() {
        let c = BASE
            .replace("\"validate\"", "\"simulate\"")
            .replace("\"nonlinearity\"", "\"grid\": {\"dx\": \"fine\", \"x_min\": 0, \"x_max\": 1}, \"nonlinearity\"");
        match ExperimentConfig::from_json(&c) {
            Err(NflError::ConfigInvalid { path, .. }) => assert_eq!(path, "grid.dx"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_version_rejected() {
        let c = BASE.replace("\"version\": 1", "\"version\": 7");
        assert!(matches!(ExperimentConfig::from_json(&c), Err(NflError::ConfigInvalid { .. })));
    }
}

//! Experiment configuration: a TOML file describing a grid of campaign cells.
//!
//! ```toml
//! name = "example"
//!
//! [geometry]
//! alpha = 0.0
//! spacing = 3.3
//! profiles = [{ type = "cosine-series", coeffs = [2.5], label = "cosine" }]
//!
//! [sweep]
//! layers = [9]
//! roughness = [0.1]
//! k_laws = [{ slope = 1.0, offset = 1.3 }]
//!
//! [[runs]]
//! scheme = "layer-semi"
//! order = 2
//! precond = "sweep"
//! ```

use grating_ddm::ddm::{OperatorFamily, Scheme, SigmaPolicy, SystemConfig};
use grating_ddm::geometry::{GratingProfile, LayerStack, ProfileShape, QuasiPeriodicity};
use grating_ddm::krylov::GmresConfig;
use grating_ddm::qpgreen::DEFAULT_WINDOW;
use grating_ddm::solve::Preconditioner;
use serde::Deserialize;
use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: Option<String>,
    pub description: Option<String>,
    pub geometry: GeometrySpec,
    pub sweep: SweepSpec,
    #[serde(default)]
    pub discretization: DiscretizationSpec,
    #[serde(default)]
    pub gmres: GmresSpec,
    /// Absorption: a single value or one per medium; absent means the default rule.
    pub sigma: Option<SigmaSpec>,
    pub runs: Vec<RunSpec>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    #[serde(default = "default_period")]
    pub period: f64,
    #[serde(default)]
    pub alpha: f64,
    /// Vertical distance between consecutive profiles.
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    /// Shapes of the top profile; each entry is one value of the profile axis.
    pub profiles: Vec<ProfileSpec>,
    /// Shape of the profiles below the top one; defaults to the top shape.
    pub lower: Option<ProfileSpec>,
}

fn default_period() -> f64 {
    TAU
}

fn default_spacing() -> f64 {
    3.3
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileSpec {
    /// `sum_m coeffs[m-1] cos(m K x1) + sin[m-1] sin(m K x1)`.
    CosineSeries {
        coeffs: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
        label: Option<String>,
    },
    Triangle {
        #[serde(default = "one")]
        height: f64,
        label: Option<String>,
    },
    Lamellar {
        #[serde(default = "one")]
        height: f64,
        /// Ramp width as a fraction of the period.
        #[serde(default = "default_ramp")]
        ramp: f64,
        label: Option<String>,
    },
    Flat {
        label: Option<String>,
    },
}

fn one() -> f64 {
    1.0
}

fn default_ramp() -> f64 {
    0.05
}

impl ProfileSpec {
    pub fn label(&self) -> String {
        match self {
            ProfileSpec::CosineSeries { label: Some(l), .. }
            | ProfileSpec::Triangle { label: Some(l), .. }
            | ProfileSpec::Lamellar { label: Some(l), .. }
            | ProfileSpec::Flat { label: Some(l) } => l.clone(),
            ProfileSpec::CosineSeries { .. } => "cosine-series".into(),
            ProfileSpec::Triangle { .. } => "triangle".into(),
            ProfileSpec::Lamellar { .. } => "lamellar".into(),
            ProfileSpec::Flat { .. } => "flat".into(),
        }
    }

    /// Base shape and the factor multiplying the roughness.
    fn shape(&self) -> Result<(ProfileShape, f64), ConfigError> {
        match self {
            ProfileSpec::CosineSeries { coeffs, sin, .. } => {
                if coeffs.is_empty() && sin.is_empty() {
                    return err("cosine-series profile needs at least one coefficient");
                }
                Ok((ProfileShape::Trig { cos: coeffs.clone(), sin: sin.clone() }, 1.0))
            }
            ProfileSpec::Triangle { height, .. } => Ok((ProfileShape::Triangle, *height)),
            ProfileSpec::Lamellar { height, ramp, .. } => {
                if !(*ramp > 0.0 && *ramp < 0.25) {
                    return err(format!("lamellar ramp {ramp} is not in (0, 0.25)"));
                }
                Ok((ProfileShape::Lamellar { ramp: *ramp }, *height))
            }
            ProfileSpec::Flat { .. } => Ok((ProfileShape::Flat, 0.0)),
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Numbers of interior layers `N`.
    pub layers: Vec<usize>,
    /// Roughness values `epsilon`.
    pub roughness: Vec<f64>,
    pub k_laws: Vec<KLawSpec>,
}

/// Either `k_l = slope * l + offset` for `l = 0 .. N + 1`, or explicit values.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum KLawSpec {
    Linear(LinearLaw),
    Values(ValueLaw),
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LinearLaw {
    pub slope: f64,
    pub offset: f64,
    pub label: Option<String>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ValueLaw {
    pub values: Vec<f64>,
    pub label: Option<String>,
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

impl KLawSpec {
    pub fn label(&self) -> String {
        match self {
            KLawSpec::Linear(LinearLaw { label: Some(l), .. }) | KLawSpec::Values(ValueLaw { label: Some(l), .. }) => l.clone(),
            KLawSpec::Linear(LinearLaw { slope, offset, .. }) => format!("{}l+{}", fmt_num(*slope), fmt_num(*offset)),
            KLawSpec::Values(ValueLaw { values, .. }) => values.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join("/"),
        }
    }

    /// Wavenumbers `k_0 .. k_{N+1}`.
    pub fn wavenumbers(&self, layers: usize) -> Result<Vec<f64>, ConfigError> {
        let ks: Vec<f64> = match self {
            KLawSpec::Linear(LinearLaw { slope, offset, .. }) => (0..layers + 2).map(|l| slope * l as f64 + offset).collect(),
            KLawSpec::Values(ValueLaw { values, .. }) => {
                if values.len() != layers + 2 {
                    return err(format!(
                        "k-law {} lists {} wavenumbers but N = {layers} needs {}",
                        self.label(),
                        values.len(),
                        layers + 2
                    ));
                }
                values.clone()
            }
        };
        if let Some(k) = ks.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
            return err(format!("wavenumber {k} in k-law {} is not positive", self.label()));
        }
        Ok(ks)
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationSpec {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_window")]
    pub window: f64,
}

fn default_n() -> usize {
    256
}

fn default_window() -> f64 {
    DEFAULT_WINDOW
}

impl Default for DiscretizationSpec {
    fn default() -> Self {
        Self { n: default_n(), window: default_window() }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GmresSpec {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    pub restart: Option<usize>,
}

fn default_tolerance() -> f64 {
    1e-4
}

fn default_max_iter() -> usize {
    2000
}

impl Default for GmresSpec {
    fn default() -> Self {
        Self { tolerance: default_tolerance(), max_iter: default_max_iter(), restart: None }
    }
}

/// Absorption `sigma_j` of the complexified wavenumbers `k_j + i sigma_j`.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum SigmaSpec {
    Fixed(f64),
    PerLayer(Vec<f64>),
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub scheme: SchemeName,
    #[serde(default)]
    pub family: FamilyName,
    /// Perturbation order `L`.
    #[serde(default)]
    pub order: usize,
    #[serde(default = "default_precond")]
    pub precond: PrecondName,
}

fn default_precond() -> PrecondName {
    PrecondName::None
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    Layer,
    LayerSemi,
    Strip,
}

impl SchemeName {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemeName::Layer => "layer",
            SchemeName::LayerSemi => "layer-semi",
            SchemeName::Strip => "strip",
        }
    }

    pub fn scheme(self) -> Scheme {
        match self {
            SchemeName::Layer => Scheme::LayerSlab,
            SchemeName::LayerSemi => Scheme::LayerSemi,
            SchemeName::Strip => Scheme::Strip,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    #[default]
    QuasiOptimal,
    Despres,
    Hilbert,
    Exact,
}

impl FamilyName {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyName::QuasiOptimal => "quasi-optimal",
            FamilyName::Despres => "despres",
            FamilyName::Hilbert => "hilbert",
            FamilyName::Exact => "exact",
        }
    }

    pub fn family(self) -> OperatorFamily {
        match self {
            FamilyName::QuasiOptimal => OperatorFamily::QuasiOptimal,
            FamilyName::Despres => OperatorFamily::Despres,
            FamilyName::Hilbert => OperatorFamily::Hilbert,
            FamilyName::Exact => OperatorFamily::Exact,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum PrecondName {
    None,
    Sweep,
    Exact,
}

impl PrecondName {
    pub fn precond(self) -> Preconditioner {
        match self {
            PrecondName::None => Preconditioner::None,
            PrecondName::Sweep => Preconditioner::Sweep,
            PrecondName::Exact => Preconditioner::Exact,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        if cfg.name.is_none() {
            cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(cfg)
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or("experiment")
    }

    fn check(&self) -> Result<(), ConfigError> {
        let g = &self.geometry;
        if !(g.period > 0.0 && g.period.is_finite()) {
            return err(format!("period {} is not positive", g.period));
        }
        if !g.alpha.is_finite() {
            return err("alpha is not finite");
        }
        if !(g.spacing > 0.0) {
            return err(format!("spacing {} is not positive", g.spacing));
        }
        for (axis, empty) in [
            ("geometry.profiles", g.profiles.is_empty()),
            ("sweep.layers", self.sweep.layers.is_empty()),
            ("sweep.roughness", self.sweep.roughness.is_empty()),
            ("sweep.k_laws", self.sweep.k_laws.is_empty()),
            ("runs", self.runs.is_empty()),
        ] {
            if empty {
                return err(format!("{axis} must not be empty"));
            }
        }
        for p in g.profiles.iter().chain(g.lower.iter()) {
            p.shape()?;
        }
        if let Some(e) = self.sweep.roughness.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
            return err(format!("roughness {e} is negative"));
        }
        for law in &self.sweep.k_laws {
            for &n in &self.sweep.layers {
                law.wavenumbers(n)?;
            }
        }
        let d = &self.discretization;
        if d.n < 4 || d.n % 2 == 1 {
            return err(format!("discretization size n = {} must be even and at least 4", d.n));
        }
        if !(d.window >= 2.0 * g.period) {
            return err(format!("window {} is smaller than twice the period", d.window));
        }
        self.gmres_config().validate().map_err(|e| ConfigError(e.to_string()))?;
        if let Some(SigmaSpec::PerLayer(v)) = &self.sigma {
            let need = self.sweep.layers.iter().max().copied().unwrap_or(0) + 2;
            if v.len() < need {
                return err(format!("sigma lists {} values but the largest stack has {need} media", v.len()));
            }
        }
        Ok(())
    }

    pub fn gmres_config(&self) -> GmresConfig {
        GmresConfig {
            rel_tol: self.gmres.tolerance,
            max_iter: self.gmres.max_iter,
            restart: self.gmres.restart,
        }
    }

    pub fn system_config(&self, run: &RunSpec) -> SystemConfig {
        SystemConfig {
            scheme: run.scheme.scheme(),
            family: run.family.family(),
            order: run.order,
            sigma: match &self.sigma {
                None => SigmaPolicy::Default,
                Some(SigmaSpec::Fixed(s)) => SigmaPolicy::Fixed(*s),
                Some(SigmaSpec::PerLayer(v)) => SigmaPolicy::PerLayer(v.clone()),
            },
            n: self.discretization.n,
            window: self.discretization.window,
        }
    }

    /// Stack with `N + 1` profiles: the top one `epsilon * F~` at height zero
    /// and the lower ones `spacing` apart. A flat lower profile sits `spacing`
    /// below the minimum of the profile above it.
    pub fn stack(&self, top: &ProfileSpec, layers: usize, roughness: f64, law: &KLawSpec) -> Result<LayerStack, ConfigError> {
        let g = &self.geometry;
        let build = |spec: &ProfileSpec, mean: f64| -> Result<GratingProfile, ConfigError> {
            let (shape, scale) = spec.shape()?;
            GratingProfile::new(mean, roughness * scale, shape, g.period).map_err(|e| ConfigError(e.to_string()))
        };
        let mut profiles = vec![build(top, 0.0)?];
        for l in 1..=layers {
            let spec = g.lower.as_ref().unwrap_or(top);
            let p = match spec {
                ProfileSpec::Flat { .. } => GratingProfile::flat(profiles[l - 1].extrema().0 - g.spacing, g.period),
                _ => build(spec, -(l as f64) * g.spacing)?,
            };
            profiles.push(p);
        }
        let qp = QuasiPeriodicity::new(g.alpha, g.period).map_err(|e| ConfigError(e.to_string()))?;
        Ok(LayerStack::new(profiles, law.wavenumbers(layers)?, qp))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [geometry]
        profiles = [{ type = "cosine-series", coeffs = [2.5] }]
        [sweep]
        layers = [1]
        roughness = [0.1]
        k_laws = [{ slope = 1.0, offset = 1.3 }, { values = [1.0, 2.0, 3.0], label = "custom" }]
        [[runs]]
        scheme = "layer"
    "#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.discretization, DiscretizationSpec { n: 256, window: 120.0 });
        assert_eq!(c.gmres.tolerance, 1e-4);
        assert_eq!(c.runs[0].family, FamilyName::QuasiOptimal);
        assert_eq!(c.runs[0].precond, PrecondName::None);
        assert_eq!(c.geometry.period, TAU);
        assert_eq!(c.sweep.k_laws[0].label(), "1l+1.3");
        assert_eq!(c.sweep.k_laws[1].label(), "custom");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MINIMAL.replace("[sweep]", "[sweep]\nfrequency = 3");
        assert!(ExperimentConfig::parse(&bad).unwrap_err().0.contains("frequency"));
        let bad = MINIMAL.replace("scheme = \"layer\"", "scheme = \"layer\"\nsolver = \"lu\"");
        assert!(ExperimentConfig::parse(&bad).is_err());
        let bad = MINIMAL.replace("coeffs = [2.5]", "coeffs = [2.5], amplitude = 1");
        assert!(ExperimentConfig::parse(&bad).is_err());
        let bad = MINIMAL.replace("label = \"custom\"", "label = \"custom\", step = 1");
        assert!(ExperimentConfig::parse(&bad).is_err());
        let bad = MINIMAL.replace("[[runs]]", "colour = 1\n[[runs]]");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(ExperimentConfig::parse(&MINIMAL.replace("layers = [1]", "layers = [2]")).is_err());
        assert!(ExperimentConfig::parse(&MINIMAL.replace("roughness = [0.1]", "roughness = []")).is_err());
        assert!(ExperimentConfig::parse(&MINIMAL.replace("scheme = \"layer\"", "scheme = \"blocks\"")).is_err());
        let bad = MINIMAL.replace("[[runs]]", "[discretization]\nn = 7\n[[runs]]");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn linear_law_extends_below_the_stack() {
        let law = KLawSpec::Linear(LinearLaw { slope: 2.0, offset: 1.3, label: None });
        assert_eq!(law.wavenumbers(2).unwrap(), vec![1.3, 3.3, 5.3, 7.3]);
    }

    #[test]
    fn stacks_follow_the_spacing() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        let st = c.stack(&c.geometry.profiles[0], 1, 0.1, &c.sweep.k_laws[0]).unwrap();
        assert_eq!(st.profiles.len(), 2);
        assert!((st.profiles[1].height(0.0) - (-3.3 + 0.25)).abs() < 1e-12);
        assert_eq!(st.wavenumbers, vec![1.3, 2.3, 3.3]);
        let flat = MINIMAL.replace("[sweep]", "lower = { type = \"flat\" }\n[sweep]");
        let c = ExperimentConfig::parse(&flat).unwrap();
        let st = c.stack(&c.geometry.profiles[0], 1, 0.1, &c.sweep.k_laws[0]).unwrap();
        assert!((st.profiles[1].mean_height - (-0.25 - 3.3)).abs() < 1e-9);
    }
}

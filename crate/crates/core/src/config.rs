//! Experiment configuration files (TOML).
//!
//! ```toml
//! alpha = [0.0]
//!
//! [grid]
//! radius = 10.0        # scalar or one per axis
//! nodes = 128          # per panel; scalar or one per axis
//! rule = "gauss-jacobi"
//! breaks = [2.0]       # optional panel breaks, shared by all axes
//!
//! [spectral]           # optional λ-grid; defaults to [grid]
//!
//! [scales]
//! sigma_min = 1e-3
//! sigma_max = 1e2
//! count = 200
//!
//! [function]
//! name = "gaussian"
//! t = 1.0
//!
//! [multiplier]
//! profile = "gaussian_ray"
//! c = 2.0
//! p = 1.0
//!
//! [sets]
//! e_box = [[0.0, 2.0]]
//! s_sigma = [1.0, 10.0]
//! s_box = [[0.0, 8.0]]
//!
//! [verify]
//! checks = ["hpw", "donoho-stark"]
//! ```
//!
//! Relative paths (multiplier samples, masks, inputs) resolve against the
//! directory holding the config file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{PaxError, Result};
use crate::functions::TestFunction;
use crate::grid::{Alpha, AxisRule, AxisSpec, ScaleGrid, SpatialSet, TensorGrid};
use crate::interp::{Extension, InterpKind};
use crate::io::read_field;
use crate::multiplier::{Multiplier, Profile};
use crate::translation::TranslationOptions;
use crate::uncertainty::ScaleRegion;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn expand(&self, n: usize, what: &str) -> Result<Vec<T>> {
        match self {
            OneOrMany::One(v) => Ok(vec![v.clone(); n]),
            OneOrMany::Many(v) if v.len() == n => Ok(v.clone()),
            OneOrMany::Many(v) => Err(PaxError::Config(format!("{what} lists {} values for {n} axes", v.len()))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub radius: OneOrMany<f64>,
    pub nodes: OneOrMany<usize>,
    #[serde(default)]
    pub rule: AxisRule,
    #[serde(default)]
    pub breaks: Vec<f64>,
}

impl GridSection {
    fn build(&self, alpha: &Alpha) -> Result<TensorGrid> {
        let n = alpha.dim();
        let radius = self.radius.expand(n, "radius")?;
        let nodes = self.nodes.expand(n, "nodes")?;
        let specs = alpha
            .orders()
            .iter()
            .zip(radius)
            .zip(nodes)
            .map(|((&order, radius), nodes)| AxisSpec {
                order,
                radius,
                nodes,
                rule: self.rule,
                breaks: self.breaks.iter().copied().filter(|&b| b < radius).collect(),
            })
            .collect();
        TensorGrid::from_specs(alpha.clone(), specs)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalesSection {
    #[serde(default = "default_sigma_min")]
    pub sigma_min: f64,
    #[serde(default = "default_sigma_max")]
    pub sigma_max: f64,
    #[serde(default = "default_scale_count")]
    pub count: usize,
}

fn default_sigma_min() -> f64 {
    1e-3
}
fn default_sigma_max() -> f64 {
    1e2
}
fn default_scale_count() -> usize {
    200
}

impl Default for ScalesSection {
    fn default() -> Self {
        ScalesSection {
            sigma_min: default_sigma_min(),
            sigma_max: default_sigma_max(),
            count: default_scale_count(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetsSection {
    pub e_box: Option<Vec<(f64, f64)>>,
    pub e_mask: Option<PathBuf>,
    pub s_sigma: Option<(f64, f64)>,
    pub s_box: Option<Vec<(f64, f64)>>,
    pub s_mask: Option<PathBuf>,
    /// Lower scale bound for the coarse bound; defaults to the start of `s_sigma`.
    pub xi: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_1e5")]
    pub plancherel: f64,
    #[serde(default = "default_1e5")]
    pub roundtrip: f64,
    #[serde(default = "default_1e3")]
    pub calderon: f64,
}

fn default_1e5() -> f64 {
    1e-5
}
fn default_1e3() -> f64 {
    1e-3
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            plancherel: default_1e5(),
            roundtrip: default_1e5(),
            calderon: default_1e3(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, serde::Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Hpw,
    HpwGeneral,
    DonohoStark,
    Calderon,
    Admissibility,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::Hpw => "hpw",
            Check::HpwGeneral => "hpw-general",
            Check::DonohoStark => "donoho-stark",
            Check::Calderon => "calderon",
            Check::Admissibility => "admissibility",
        }
    }
}

fn default_pairs() -> Vec<(f64, f64)> {
    vec![(1.0, 1.0), (2.0, 1.0)]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default)]
    pub checks: Vec<Check>,
    /// (a, b) exponent pairs for the general HPW form.
    #[serde(default = "default_pairs")]
    pub exponents: Vec<(f64, f64)>,
    /// Extra Donoho–Stark cases with random E and S, seeded by PAX_SEED.
    #[serde(default)]
    pub random_sets: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            checks: Vec::new(),
            exponents: default_pairs(),
            random_sets: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TranslationForm {
    #[default]
    Angular,
    Kernel,
}

fn default_angular_nodes() -> usize {
    32
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslationSection {
    #[serde(default)]
    pub x: Vec<f64>,
    #[serde(default = "default_angular_nodes")]
    pub angular_nodes: usize,
    #[serde(default)]
    pub form: TranslationForm,
    #[serde(default)]
    pub interp: InterpKind,
    #[serde(default)]
    pub extension: Extension,
    pub kernel_nodes: Option<usize>,
}

impl Default for TranslationSection {
    fn default() -> Self {
        TranslationSection {
            x: Vec::new(),
            angular_nodes: default_angular_nodes(),
            form: TranslationForm::Angular,
            interp: InterpKind::default(),
            extension: Extension::default(),
            kernel_nodes: None,
        }
    }
}

impl TranslationSection {
    pub fn options(&self) -> TranslationOptions {
        let mut o = TranslationOptions {
            interp: self.interp,
            extension: self.extension,
            ..TranslationOptions::default()
        };
        if let Some(k) = self.kernel_nodes {
            o.kernel_nodes = k;
        }
        o
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ApplyForm {
    #[default]
    Spectral,
    Convolution,
    Theta,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApplySection {
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default)]
    pub form: ApplyForm,
}

fn one() -> f64 {
    1.0
}

impl Default for ApplySection {
    fn default() -> Self {
        ApplySection {
            sigma: 1.0,
            form: ApplyForm::Spectral,
        }
    }
}

/// Raw file contents; see [`ExperimentConfig`] for the validated form.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    alpha: Vec<f64>,
    grid: GridSection,
    spectral: Option<GridSection>,
    #[serde(default)]
    scales: ScalesSection,
    function: Option<TestFunction>,
    multiplier: Option<toml::Value>,
    sets: Option<SetsSection>,
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default)]
    verify: VerifySection,
    #[serde(default)]
    translation: TranslationSection,
    #[serde(default)]
    apply: ApplySection,
    convolve: Option<TestFunction>,
}

/// A validated experiment: grids built, profiles and sets checked.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub grid: Arc<TensorGrid>,
    pub spectral: Option<Arc<TensorGrid>>,
    pub scales: ScaleGrid,
    pub function: Option<TestFunction>,
    pub multiplier: Option<Multiplier>,
    pub multiplier_desc: Option<serde_json::Value>,
    pub e: Option<SpatialSet>,
    pub s: Option<ScaleRegion>,
    pub xi: Option<f64>,
    pub tolerances: Tolerances,
    pub verify: VerifySection,
    pub translation: TranslationSection,
    pub apply: ApplySection,
    pub convolve_with: Option<TestFunction>,
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileMultiplier {
    file: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PaxError::Config(format!("cannot read {}: {e}", path.display())))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "config".into());
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &name, &base)
    }

    pub fn parse(text: &str, name: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| PaxError::Config(format!("{name}: {e}")))?;
        Self::validate(raw, name, base_dir).map_err(|e| match e {
            PaxError::Config(msg) => PaxError::Config(format!("{name}: {msg}")),
            other => PaxError::Config(format!("{name}: {other}")),
        })
    }

    fn validate(raw: RawConfig, name: &str, base_dir: &Path) -> Result<Self> {
        let alpha = Alpha::new(raw.alpha)?;
        let grid = Arc::new(raw.grid.build(&alpha)?);
        let spectral = raw.spectral.as_ref().map(|s| s.build(&alpha).map(Arc::new)).transpose()?;
        let scales = ScaleGrid::log_uniform(raw.scales.sigma_min, raw.scales.sigma_max, raw.scales.count)?;
        if let Some(f) = &raw.function {
            f.validate()?;
        }
        if let Some(f) = &raw.convolve {
            f.validate()?;
        }
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base_dir.join(p) };
        let (multiplier, multiplier_desc) = match raw.multiplier {
            None => (None, None),
            Some(v) => {
                let desc = serde_json::to_value(&v).map_err(|e| PaxError::Config(e.to_string()))?;
                let m = if v.get("file").is_some() {
                    let fm = FileMultiplier::deserialize(v).map_err(|e| PaxError::Config(format!("[multiplier] {e}")))?;
                    let field = read_field(&resolve(&fm.file), spectral.as_ref().or(Some(&grid)))?;
                    if field.grid().dim() != alpha.dim() {
                        return Err(PaxError::Config("multiplier samples have the wrong dimension".into()));
                    }
                    Multiplier::samples(field)
                } else {
                    let p = Profile::deserialize(v).map_err(|e| PaxError::Config(format!("[multiplier] {e}")))?;
                    Multiplier::radial(p)?
                };
                (Some(m), Some(desc))
            }
        };
        let mask_from = |p: &Path| -> Result<SpatialSet> {
            let f = read_field(&resolve(p), Some(&grid))?;
            if !f.grid().same_layout(&grid) {
                return Err(PaxError::Config(format!("mask {} is not on the configured grid", p.display())));
            }
            Ok(SpatialSet::Mask(f.values().iter().map(|v| v.norm() > 0.5).collect()))
        };
        let (mut e, mut s, mut xi) = (None, None, None);
        if let Some(sets) = &raw.sets {
            e = match (&sets.e_box, &sets.e_mask) {
                (Some(_), Some(_)) => return Err(PaxError::Config("give e_box or e_mask, not both".into())),
                (Some(b), None) => Some(SpatialSet::Box(b.clone())),
                (None, Some(p)) => Some(mask_from(p)?),
                (None, None) => None,
            };
            if let Some(sig) = sets.s_sigma {
                let spatial = match (&sets.s_box, &sets.s_mask) {
                    (Some(_), Some(_)) => return Err(PaxError::Config("give s_box or s_mask, not both".into())),
                    (Some(b), None) => SpatialSet::Box(b.clone()),
                    (None, Some(p)) => mask_from(p)?,
                    (None, None) => SpatialSet::full(&grid),
                };
                let region = ScaleRegion { sigma: sig, spatial };
                region.validate()?;
                s = Some(region);
            }
            xi = sets.xi.or(sets.s_sigma.map(|s| s.0));
        }
        for set in e.iter().chain(s.iter().map(|r| &r.spatial)) {
            set.mask(&grid)?;
        }
        if !raw.translation.x.is_empty() && raw.translation.x.len() != alpha.dim() {
            return Err(PaxError::Config(format!(
                "[translation] x has {} coordinates for {} axes",
                raw.translation.x.len(),
                alpha.dim()
            )));
        }
        if !(raw.apply.sigma > 0.0 && raw.apply.sigma.is_finite()) {
            return Err(PaxError::Config(format!("[apply] sigma must be positive, got {}", raw.apply.sigma)));
        }
        for &(a, b) in &raw.verify.exponents {
            if !(a >= 1.0 && b >= 1.0) {
                return Err(PaxError::Config(format!("exponents need a, b >= 1, got ({a}, {b})")));
            }
        }
        Ok(ExperimentConfig {
            name: name.to_string(),
            grid,
            spectral,
            scales,
            function: raw.function,
            multiplier,
            multiplier_desc,
            e,
            s,
            xi,
            tolerances: raw.tolerances,
            verify: raw.verify,
            translation: raw.translation,
            apply: raw.apply,
            convolve_with: raw.convolve,
            base_dir: base_dir.to_path_buf(),
        })
    }

    /// The λ-grid: `[spectral]` when given, else the spatial grid.
    pub fn spectral_grid(&self) -> &Arc<TensorGrid> {
        self.spectral.as_ref().unwrap_or(&self.grid)
    }

    pub fn require_function(&self) -> Result<TestFunction> {
        self.function.ok_or_else(|| PaxError::Config(format!("{}: missing [function] section", self.name)))
    }

    pub fn require_multiplier(&self) -> Result<&Multiplier> {
        self.multiplier
            .as_ref()
            .ok_or_else(|| PaxError::Config(format!("{}: missing [multiplier] section", self.name)))
    }
}

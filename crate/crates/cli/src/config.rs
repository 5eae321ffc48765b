//! Experiment configuration files.

use serde::Deserialize;
use usris::geometry::{Position3D, UlaSpec, UpaLayerSpec};
use usris::lemma::{LemmaScenario, LemmaTarget};
use usris::scenario::{Scenario, SurfaceMode, Variant};
use usris::{from_db, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: ScenarioSection,
    pub user: ArraySection,
    pub bs: ArraySection,
    #[serde(default, rename = "variant")]
    pub variants: Vec<VariantSection>,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub power_dist: PowerDistSection,
    #[serde(default)]
    pub pattern: PatternSection,
    pub lemma1: Option<LemmaSection>,
    pub sinr: Option<SinrSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub frequency_hz: f64,
    pub noise_power_w: f64,
    pub kappa: f64,
    #[serde(default)]
    pub p_max_dbw: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    pub count: usize,
    /// Element spacing in wavelengths.
    #[serde(default = "half")]
    pub spacing_wavelengths: f64,
    pub center: [f64; 3],
    #[serde(default = "x_axis")]
    pub axis: [f64; 3],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSection {
    pub kind: String,
    /// Row label in outputs; defaults to `kind`.
    pub label: Option<String>,
    /// Element side length in wavelengths.
    #[serde(default = "half")]
    pub element_size_wavelengths: f64,
    #[serde(default, rename = "layer")]
    pub layers: Vec<LayerSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSection {
    pub cols: usize,
    pub rows: usize,
    pub plane_y: f64,
    #[serde(default)]
    pub center_xz: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: default_restarts(),
            tolerance: default_tolerance(),
            max_iters: default_max_iters(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub start_dbw: f64,
    pub stop_dbw: f64,
    pub step_db: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerDistSection {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

impl Default for PowerDistSection {
    fn default() -> Self {
        Self { epsilon: default_epsilon() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSection {
    #[serde(default = "default_start_deg")]
    pub start_deg: f64,
    #[serde(default = "default_stop_deg")]
    pub stop_deg: f64,
    #[serde(default = "default_step_deg")]
    pub step_deg: f64,
}

impl Default for PatternSection {
    fn default() -> Self {
        Self {
            start_deg: default_start_deg(),
            stop_deg: default_stop_deg(),
            step_deg: default_step_deg(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaSection {
    pub b: Vec<usize>,
    pub a: f64,
    pub d1: f64,
    pub d2: f64,
    /// Defaults to the scenario wavelength.
    pub wavelength: Option<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// `"on-axis"` or `"element:<n>"`, one report per entry.
    #[serde(default = "default_targets")]
    pub targets: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinrSection {
    /// Label of the variant every user carries.
    pub variant: String,
    /// Displacement of each user (and its surface) from the configured position.
    pub offsets: Vec<[f64; 3]>,
    #[serde(default)]
    pub combiner_user: usize,
}

fn half() -> f64 {
    0.5
}
fn x_axis() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}
fn default_restarts() -> usize {
    8
}
fn default_tolerance() -> f64 {
    1e-6
}
fn default_max_iters() -> usize {
    100
}
fn default_epsilon() -> f64 {
    1.0 / 6.0
}
fn default_start_deg() -> f64 {
    -90.0
}
fn default_stop_deg() -> f64 {
    90.0
}
fn default_step_deg() -> f64 {
    0.25
}
fn default_trials() -> usize {
    1000
}
fn default_targets() -> Vec<String> {
    vec!["on-axis".into()]
}

/// One variant with its physical scenario.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub label: String,
    pub variant: Variant,
    pub scenario: Scenario,
}

fn position(p: [f64; 3]) -> Position3D {
    Position3D::new(p[0], p[1], p[2])
}

fn ula(section: &ArraySection, wavelength: f64) -> anyhow::Result<UlaSpec> {
    let axis = position(section.axis);
    let norm = axis.norm();
    anyhow::ensure!(norm > 0.0, "array axis must be non-zero");
    Ok(UlaSpec {
        count: section.count,
        spacing: section.spacing_wavelengths * wavelength,
        center: position(section.center),
        axis: axis * (1.0 / norm),
    })
}

impl Config {
    pub fn parse(text: &str) -> anyhow::Result<Config> {
        let cfg: Config = toml::from_str(text)?;
        anyhow::ensure!(!cfg.variants.is_empty(), "config defines no [[variant]]");
        let mut labels: Vec<&str> = cfg.variants.iter().map(|v| v.label.as_deref().unwrap_or(&v.kind)).collect();
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            anyhow::bail!("duplicate variant label `{}`", w[0]);
        }
        // surface everything that would fail later
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.scenario.frequency_hz
    }

    pub fn p_max_w(&self) -> f64 {
        from_db(self.scenario.p_max_dbw)
    }

    pub fn resolve(&self) -> anyhow::Result<Vec<Resolved>> {
        let lambda = self.wavelength();
        anyhow::ensure!(lambda.is_finite() && lambda > 0.0, "frequency must be positive");
        let user = ula(&self.user, lambda)?;
        let bs = ula(&self.bs, lambda)?;
        self.variants
            .iter()
            .map(|v| {
                let variant: Variant = v.kind.parse()?;
                let element_size = v.element_size_wavelengths * lambda;
                let layers: Vec<UpaLayerSpec> = v
                    .layers
                    .iter()
                    .map(|l| UpaLayerSpec {
                        cols: l.cols,
                        rows: l.rows,
                        element_size,
                        plane_y: l.plane_y,
                        center_xz: (l.center_xz[0], l.center_xz[1]),
                    })
                    .collect();
                match variant {
                    Variant::NoRis => anyhow::ensure!(layers.is_empty(), "variant `{}` takes no layers", v.kind),
                    Variant::MultiLayer => anyhow::ensure!(!layers.is_empty(), "variant `{}` needs layers", v.kind),
                    _ => anyhow::ensure!(layers.len() == 1, "variant `{}` takes exactly one layer", v.kind),
                }
                let scenario = Scenario {
                    frequency_hz: self.scenario.frequency_hz,
                    noise_power: self.scenario.noise_power_w,
                    kappa: self.scenario.kappa,
                    p_max: self.p_max_w(),
                    user,
                    bs,
                    layers,
                    mode: if variant == Variant::SingleLayerBss {
                        SurfaceMode::Reflective
                    } else {
                        SurfaceMode::Transmissive
                    },
                };
                scenario.validate()?;
                Ok(Resolved {
                    label: v.label.clone().unwrap_or_else(|| v.kind.clone()),
                    variant,
                    scenario,
                })
            })
            .collect()
    }

    pub fn sweep_points(&self) -> anyhow::Result<Vec<f64>> {
        let Some(s) = &self.sweep else {
            return Ok(vec![self.scenario.p_max_dbw]);
        };
        anyhow::ensure!(s.step_db > 0.0 && s.stop_dbw >= s.start_dbw, "sweep needs start ≤ stop and a positive step");
        let n = ((s.stop_dbw - s.start_dbw) / s.step_db + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| s.start_dbw + i as f64 * s.step_db).collect())
    }

    pub fn angles_rad(&self) -> anyhow::Result<Vec<f64>> {
        let p = &self.pattern;
        anyhow::ensure!(p.step_deg > 0.0 && p.stop_deg > p.start_deg, "pattern grid needs start < stop and a positive step");
        let n = ((p.stop_deg - p.start_deg) / p.step_deg + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| (p.start_deg + i as f64 * p.step_deg).to_radians()).collect())
    }

    pub fn lemma_scenarios(&self) -> anyhow::Result<Vec<(String, LemmaScenario)>> {
        let l = self.lemma1.as_ref().ok_or_else(|| anyhow::anyhow!("config has no [lemma1] section"))?;
        let wavelength = l.wavelength.unwrap_or_else(|| self.wavelength());
        let mut out = Vec::new();
        for &b in &l.b {
            for t in &l.targets {
                let target = parse_target(t)?;
                let scn = LemmaScenario { b, a: l.a, d1: l.d1, d2: l.d2, wavelength, target };
                scn.validate()?;
                out.push((t.clone(), scn));
            }
        }
        Ok(out)
    }
}

fn parse_target(s: &str) -> anyhow::Result<LemmaTarget> {
    if s == "on-axis" {
        return Ok(LemmaTarget::ON_AXIS);
    }
    if let Some(n) = s.strip_prefix("element:") {
        return Ok(LemmaTarget::Element(n.trim().parse()?));
    }
    anyhow::bail!("unknown lemma target `{s}` (expected `on-axis` or `element:<n>`)")
}

/// Moves the user and every layer it carries by `offset`.
pub fn displaced(s: &Scenario, offset: [f64; 3]) -> Scenario {
    let mut out = s.clone();
    out.user.center = out.user.center + position(offset);
    for l in &mut out.layers {
        l.plane_y += offset[1];
        l.center_xz = (l.center_xz.0 + offset[0], l.center_xz.1 + offset[2]);
    }
    out
}

//! Physical description of one uplink setup.

use crate::error::{Error, Result};
use crate::geometry::{element_centers, ElementGrid, Position3D, UlaSpec, UpaLayerSpec};
use crate::SPEED_OF_LIGHT;

/// How the surface passes the signal on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceMode {
    /// The wave penetrates every layer and loses `κ` in amplitude at each.
    Transmissive,
    /// Single reflecting surface, no penetration loss.
    Reflective,
}

/// The four configurations compared in the reference experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    MultiLayer,
    SingleLayerUs,
    SingleLayerBss,
    NoRis,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::MultiLayer,
        Variant::SingleLayerUs,
        Variant::SingleLayerBss,
        Variant::NoRis,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::MultiLayer => "multi-layer-us",
            Variant::SingleLayerUs => "single-layer-us",
            Variant::SingleLayerBss => "single-layer-bss",
            Variant::NoRis => "no-ris",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown variant `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub frequency_hz: f64,
    /// Receiver noise power σ² (W).
    pub noise_power: f64,
    /// Per-layer amplitude penetration loss κ.
    pub kappa: f64,
    /// Transmit power budget P_max (W).
    pub p_max: f64,
    pub user: UlaSpec,
    pub bs: UlaSpec,
    /// Surface layers ordered from the user outward; empty means no surface.
    pub layers: Vec<UpaLayerSpec>,
    pub mode: SurfaceMode,
}

impl Scenario {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Loss factor actually applied per layer.
    pub fn effective_kappa(&self) -> f64 {
        match self.mode {
            SurfaceMode::Transmissive => self.kappa,
            SurfaceMode::Reflective => 1.0,
        }
    }

    pub fn grids(&self) -> Vec<ElementGrid> {
        self.layers.iter().map(element_centers).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frequency_hz > 0.0 && self.frequency_hz.is_finite()) {
            return Err(Error::InvalidScenario(format!("frequency must be positive, got {}", self.frequency_hz)));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(Error::InvalidScenario(format!("noise power must be positive, got {}", self.noise_power)));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::InvalidScenario(format!("kappa must lie in (0, 1], got {}", self.kappa)));
        }
        if !(self.p_max >= 0.0 && self.p_max.is_finite()) {
            return Err(Error::InvalidScenario(format!("power budget must be non-negative, got {}", self.p_max)));
        }
        self.user.validate()?;
        self.bs.validate()?;
        for layer in &self.layers {
            layer.validate()?;
        }
        if self.mode == SurfaceMode::Reflective && self.layers.len() != 1 {
            return Err(Error::InvalidForMultiLayer { layers: self.layers.len() });
        }
        // every hop has to cross a plane in +y
        let mut prev_y = self.user.center.y;
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.plane_y <= prev_y {
                return Err(Error::InvalidScenario(format!(
                    "layer {} at y = {} is not beyond the previous plane y = {}",
                    l + 1,
                    layer.plane_y,
                    prev_y
                )));
            }
            prev_y = layer.plane_y;
        }
        if self.bs.center.y <= prev_y {
            return Err(Error::InvalidScenario("base station must lie beyond the last layer".into()));
        }
        Ok(())
    }

    /// Reference geometry at 2.5 GHz: a 2-antenna user at the origin, an
    /// 8-antenna base station 20 m away along `+y`, half-wavelength pitch
    /// everywhere, and surfaces at y = 0.02 m (and 0.04 m for the second layer).
    pub fn reference(variant: Variant) -> Scenario {
        let frequency_hz = 2.5e9;
        let lambda = SPEED_OF_LIGHT / frequency_hz;
        let a = lambda / 2.0;
        let layer = |cols, rows, y| UpaLayerSpec {
            cols,
            rows,
            element_size: a,
            plane_y: y,
            center_xz: (0.0, 0.0),
        };
        let (layers, mode) = match variant {
            Variant::MultiLayer => (vec![layer(8, 12, 0.02), layer(8, 12, 0.04)], SurfaceMode::Transmissive),
            Variant::SingleLayerUs => (vec![layer(12, 16, 0.02)], SurfaceMode::Transmissive),
            Variant::SingleLayerBss => (vec![layer(12, 16, 0.02)], SurfaceMode::Reflective),
            Variant::NoRis => (Vec::new(), SurfaceMode::Transmissive),
        };
        Scenario {
            frequency_hz,
            noise_power: 1e-6,
            kappa: 0.8,
            p_max: 1.0,
            user: UlaSpec::along_x(2, a, Position3D::ORIGIN),
            bs: UlaSpec::along_x(8, a, Position3D::new(0.0, 20.0, 0.0)),
            layers,
            mode,
        }
    }
}

/// Same geometry and channels, operated as a reflecting surface without penetration loss.
pub fn reflective_variant(scenario: &Scenario) -> Result<Scenario> {
    if scenario.layers.len() != 1 {
        return Err(Error::InvalidForMultiLayer { layers: scenario.layers.len() });
    }
    Ok(Scenario {
        mode: SurfaceMode::Reflective,
        ..scenario.clone()
    })
}

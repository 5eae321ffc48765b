//! Evaluation quantities: per-layer power, element activation ratio,
//! far-field pattern cuts and multi-user SINR.

use num_complex::Complex64;

use crate::beamformer::BeamformerState;
use crate::channel::{CVector, ChannelSet};
use crate::error::{Error, Result};
use crate::geometry::ElementGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerDistribution {
    /// 1-based layer index.
    pub layer: usize,
    pub per_element_power: Vec<f64>,
    pub mean_power: f64,
}

impl PowerDistribution {
    pub fn from_powers(layer: usize, per_element_power: Vec<f64>) -> Self {
        let mean_power = if per_element_power.is_empty() {
            0.0
        } else {
            per_element_power.iter().sum::<f64>() / per_element_power.len() as f64
        };
        Self {
            layer,
            per_element_power,
            mean_power,
        }
    }

    pub fn total(&self) -> f64 {
        self.per_element_power.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarResult {
    pub epsilon: f64,
    pub activated_count: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiationPattern {
    pub angles: Vec<f64>,
    pub gain_db: Vec<f64>,
}

fn check_layer(ch: &ChannelSet, l: usize) -> Result<()> {
    if l == 0 || l > ch.num_layers() {
        return Err(Error::LayerOutOfRange { layer: l, layers: ch.num_layers() });
    }
    Ok(())
}

/// Output of layer `l` after its phase shifts: `ξ_(l,1) w`.
pub fn layer_emission(state: &BeamformerState, ch: &ChannelSet, kappa: f64, l: usize) -> Result<CVector> {
    check_layer(ch, l)?;
    state.check(ch)?;
    let k = Complex64::from(kappa);
    let mut u = state.w.clone();
    for (f, theta) in ch.f.iter().zip(&state.theta).take(l) {
        u = (f * &u).component_mul(theta) * k;
    }
    Ok(u)
}

/// Incident power on each element of layer `l`, before that layer's phases and loss.
///
/// The losses of the `l − 1` layers already crossed are contained in the cascade.
pub fn layer_power(state: &BeamformerState, ch: &ChannelSet, kappa: f64, l: usize) -> Result<PowerDistribution> {
    check_layer(ch, l)?;
    let incident = if l == 1 {
        state.check(ch)?;
        &ch.f[0] * &state.w
    } else {
        &ch.f[l - 1] * layer_emission(state, ch, kappa, l - 1)?
    };
    Ok(PowerDistribution::from_powers(l, incident.iter().map(|c| c.norm_sqr()).collect()))
}

/// Fraction of elements whose power exceeds `epsilon` times the mean power.
pub fn ear(dist: &PowerDistribution, epsilon: f64) -> Result<EarResult> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold percentage must be positive, got {epsilon}")));
    }
    if dist.per_element_power.is_empty() || !(dist.mean_power > 0.0) {
        return Err(Error::EmptyDistribution);
    }
    let threshold = epsilon * dist.mean_power;
    let activated_count = dist.per_element_power.iter().filter(|&&p| p > threshold).count();
    Ok(EarResult {
        epsilon,
        activated_count,
        ratio: activated_count as f64 / dist.per_element_power.len() as f64,
    })
}

/// Azimuth cut (zero elevation) of the field radiated by `emission` on `grid`.
///
/// Elements sharing an x-position add coherently; `angles` are radians from
/// broadside in the xy-plane. Gains are `20·log10 |AF|`, not normalized.
pub fn array_pattern(emission: &CVector, grid: &ElementGrid, wavelength: f64, angles: &[f64]) -> Result<RadiationPattern> {
    if emission.len() != grid.len() {
        return Err(Error::DimensionMismatch(format!(
            "emission has {} entries, grid has {}",
            emission.len(),
            grid.len()
        )));
    }
    if emission.iter().all(|c| c.norm_sqr() == 0.0) {
        return Err(Error::ZeroEmission);
    }
    if angles.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("angle grid must be strictly increasing".into()));
    }
    let k = 2.0 * std::f64::consts::PI / wavelength;
    let column_sums: Vec<(f64, Complex64)> = (0..grid.cols)
        .map(|c| {
            let x = grid.centers[c].0;
            let sum = (0..grid.rows).map(|r| emission[r * grid.cols + c]).sum();
            (x, sum)
        })
        .collect();
    let gain_db = angles
        .iter()
        .map(|&phi| {
            let s = phi.sin();
            let af: Complex64 = column_sums.iter().map(|&(x, e)| e * Complex64::from_polar(1.0, k * x * s)).sum();
            20.0 * af.norm().log10()
        })
        .collect();
    Ok(RadiationPattern {
        angles: angles.to_vec(),
        gain_db,
    })
}

/// Pattern of the field leaving layer `l`.
pub fn layer_radiation_pattern(
    state: &BeamformerState,
    ch: &ChannelSet,
    kappa: f64,
    grids: &[ElementGrid],
    l: usize,
    angles: &[f64],
) -> Result<RadiationPattern> {
    let e = layer_emission(state, ch, kappa, l)?;
    array_pattern(&e, &grids[l - 1], ch.wavelength, angles)
}

/// Pattern of the field leaving the last layer.
pub fn radiation_pattern(
    state: &BeamformerState,
    ch: &ChannelSet,
    kappa: f64,
    grids: &[ElementGrid],
    angles: &[f64],
) -> Result<RadiationPattern> {
    layer_radiation_pattern(state, ch, kappa, grids, ch.num_layers(), angles)
}

/// Shifts all patterns by one common offset so the largest gain among them is 0 dB.
pub fn normalize_patterns(patterns: &mut [RadiationPattern]) {
    let peak = patterns
        .iter()
        .flat_map(|p| p.gain_db.iter().copied())
        .fold(f64::NEG_INFINITY, f64::max);
    if peak.is_finite() {
        for p in patterns {
            for g in &mut p.gain_db {
                *g -= peak;
            }
        }
    }
}

/// Mainlobe level minus the highest sidelobe, in dB.
///
/// The mainlobe spans outward from the global maximum to the first local
/// minimum on each side; `None` when nothing lies outside it.
pub fn mainlobe_to_sidelobe(pattern: &RadiationPattern) -> Option<f64> {
    let g = &pattern.gain_db;
    let peak = (0..g.len()).max_by(|&a, &b| g[a].total_cmp(&g[b]))?;
    let mut lo = peak;
    while lo > 0 && g[lo - 1] <= g[lo] {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < g.len() && g[hi + 1] <= g[hi] {
        hi += 1;
    }
    let side = g[..lo]
        .iter()
        .chain(g[hi + 1..].iter())
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    side.is_finite().then(|| g[peak] - side)
}

/// One user's beamformer and channels for a shared-combiner evaluation.
#[derive(Debug, Clone)]
pub struct UserLink {
    pub w: CVector,
    pub theta: Vec<CVector>,
    pub channels: ChannelSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinrReport {
    pub sinr: Vec<f64>,
    pub sum_rate: f64,
}

/// Per-user SINR under one combiner `v`, and the sum rate `Σ log₂(1 + SINR_u)`.
pub fn sinr_eval(users: &[UserLink], v: &CVector, kappa: f64, noise_power: f64) -> Result<SinrReport> {
    if !(noise_power > 0.0) {
        return Err(Error::InvalidArgument(format!("noise power must be positive, got {noise_power}")));
    }
    let powers = users
        .iter()
        .map(|u| {
            let state = BeamformerState {
                w: u.w.clone(),
                theta: u.theta.clone(),
                v: v.clone(),
            };
            Ok(crate::beamformer::effective_scalar(&state, &u.channels, kappa)?.norm_sqr())
        })
        .collect::<Result<Vec<f64>>>()?;
    let total: f64 = powers.iter().sum();
    let noise = v.norm_squared() * noise_power;
    let sinr: Vec<f64> = powers.iter().map(|&p| p / ((total - p).max(0.0) + noise)).collect();
    let sum_rate = sinr.iter().map(|s| (1.0 + s).log2()).sum();
    Ok(SinrReport { sinr, sum_rate })
}

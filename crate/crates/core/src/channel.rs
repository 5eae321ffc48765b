//! Line-of-sight channel synthesis.
//!
//! Two propagation models are used:
//!
//! * far field (user→BS and last layer→BS): free-space Friis amplitude
//!   `λ / (4π d)` with phase `−2π d / λ`, exact per-pair distances;
//! * near field (user→first layer and layer→layer): the power a point source
//!   delivers to a planar element is the area integral of a y-directed gain
//!   density; the coefficient is the square root of that gain with the phase of
//!   the center-to-center path.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{ula_positions, ElementGrid, Position3D, Rect};
use crate::quadrature::AdaptiveCubature;
use crate::scenario::Scenario;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative tolerance used for element gains.
pub const ELEMENT_GAIN_TOL: f64 = 1e-9;

/// Parameters of the gain density seen on a plane at depth `d` from a point source.
///
/// The density is centered on `(offset_x, offset_z)`, which is where the plane
/// is crossed by the normal through the source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainDensityParams {
    pub d: f64,
    pub offset_x: f64,
    pub offset_z: f64,
}

/// Per-area gain (1/m²) at point `(px, pz)` of the plane.
pub fn gain_density(params: &GainDensityParams, px: f64, pz: f64) -> f64 {
    let dx = px - params.offset_x;
    let dz = pz - params.offset_z;
    let d2 = params.d * params.d;
    let r2 = dx * dx + dz * dz + d2;
    params.d * (dx * dx + d2) / (4.0 * std::f64::consts::PI * r2 * r2 * r2.sqrt())
}

/// Power gain captured by `region`, integrated with the default tolerance.
pub fn element_gain(params: &GainDensityParams, region: Rect) -> Result<f64> {
    element_gain_with(params, region, &AdaptiveCubature::with_rel_tol(ELEMENT_GAIN_TOL))
}

pub fn element_gain_with(params: &GainDensityParams, region: Rect, cubature: &AdaptiveCubature) -> Result<f64> {
    if !(params.d > 0.0) {
        return Err(Error::DegenerateGeometry(format!("plane depth must be positive, got {}", params.d)));
    }
    Ok(cubature.integrate(|x, z| gain_density(params, x, z), region)?.value)
}

/// Free-space coefficient between two point antennas.
pub fn friis(distance: f64, wavelength: f64) -> Complex64 {
    let k = 2.0 * std::f64::consts::PI / wavelength;
    Complex64::from_polar(wavelength / (4.0 * std::f64::consts::PI * distance), -k * distance)
}

/// Near-field coefficients from a point source to every element of `grid`.
pub fn near_field_channel(source: &Position3D, grid: &ElementGrid, wavelength: f64) -> Result<CVector> {
    let d = (grid.plane_y - source.y).abs();
    if !(d > 1e-12 * grid.element_size) {
        return Err(Error::DegenerateGeometry("source lies in the target plane".into()));
    }
    let params = GainDensityParams {
        d,
        offset_x: source.x,
        offset_z: source.z,
    };
    let k = 2.0 * std::f64::consts::PI / wavelength;
    let entries = (0..grid.len())
        .map(|n| {
            let gain = element_gain(&params, grid.region(n))?;
            let dist = grid.position(n).distance(source);
            Ok(Complex64::from_polar(gain.sqrt(), -k * dist))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CVector::from_vec(entries))
}

/// Near-field matrix (targets × sources), columns computed in parallel.
fn near_field_matrix(sources: &[Position3D], grid: &ElementGrid, wavelength: f64) -> Result<CMatrix> {
    let columns = sources
        .par_iter()
        .map(|s| near_field_channel(s, grid, wavelength))
        .collect::<Result<Vec<_>>>()?;
    Ok(CMatrix::from_columns(&columns))
}

/// Far-field matrix with `rows` as the first index: entry `[r][c]` couples `rows[r]` and `cols[c]`.
fn friis_matrix(rows: &[Position3D], cols: &[Position3D], wavelength: f64) -> CMatrix {
    CMatrix::from_fn(rows.len(), cols.len(), |r, c| friis(rows[r].distance(&cols[c]), wavelength))
}

/// Channels of a cascaded surface: `f[0]` is user→layer 1 (N₁×K), `f[l]` is
/// layer l→layer l+1, `g` is last layer→BS (N_L×M).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub f: Vec<CMatrix>,
    pub g: CMatrix,
    pub wavelength: f64,
}

impl ChannelSet {
    pub fn num_layers(&self) -> usize {
        self.f.len()
    }

    /// Transmit antennas K.
    pub fn num_tx(&self) -> usize {
        self.f.first().map_or(0, |f| f.ncols())
    }

    /// Receive antennas M.
    pub fn num_rx(&self) -> usize {
        self.g.ncols()
    }

    pub fn layer_len(&self, l: usize) -> usize {
        self.f[l - 1].nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.f.first() else {
            return Err(Error::DimensionMismatch("channel set needs at least one layer".into()));
        };
        if first.ncols() == 0 || self.g.ncols() == 0 {
            return Err(Error::DimensionMismatch("empty antenna array".into()));
        }
        for (l, pair) in self.f.windows(2).enumerate() {
            if pair[1].ncols() != pair[0].nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "f{} has {} columns but layer {} has {} elements",
                    l + 2,
                    pair[1].ncols(),
                    l + 1,
                    pair[0].nrows()
                )));
            }
        }
        let last = self.f.last().unwrap();
        if self.g.nrows() != last.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "g has {} rows but the last layer has {} elements",
                self.g.nrows(),
                last.nrows()
            )));
        }
        for m in self.f.iter().chain(std::iter::once(&self.g)) {
            if m.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(Error::DimensionMismatch("non-finite channel entry".into()));
            }
        }
        Ok(())
    }
}

/// Synthesizes every hop of the cascade for `scenario`.
pub fn assemble_channels(scenario: &Scenario) -> Result<ChannelSet> {
    scenario.validate()?;
    if scenario.layers.is_empty() {
        return Err(Error::InvalidScenario("scenario has no surface layers; use direct_channel".into()));
    }
    let lambda = scenario.wavelength();
    let grids = scenario.grids();
    let users = ula_positions(&scenario.user);
    let bs = ula_positions(&scenario.bs);

    let mut f = Vec::with_capacity(grids.len());
    f.push(near_field_matrix(&users, &grids[0], lambda)?);
    for pair in grids.windows(2) {
        let sources: Vec<Position3D> = (0..pair[0].len()).map(|m| pair[0].position(m)).collect();
        f.push(near_field_matrix(&sources, &pair[1], lambda)?);
    }
    let last = grids.last().unwrap();
    let elements: Vec<Position3D> = (0..last.len()).map(|n| last.position(n)).collect();
    let g = friis_matrix(&elements, &bs, lambda);
    let set = ChannelSet { f, g, wavelength: lambda };
    set.validate()?;
    Ok(set)
}

/// Far-field user→BS channel (M×K).
pub fn direct_channel(scenario: &Scenario) -> CMatrix {
    let users = ula_positions(&scenario.user);
    let bs = ula_positions(&scenario.bs);
    friis_matrix(&bs, &users, scenario.wavelength())
}

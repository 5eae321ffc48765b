//! Amplitude range of the signal leaving one second-layer element of a
//! two-layer surface fed by a single antenna.
//!
//! The source sits at the origin, layer 1 is a `b × b` grid of `a × a`
//! elements at depth `d1`, and the observed element lies at depth `d1 + d2`.
//! The phases of layer 1 can steer that element's output anywhere between
//! zero and a bound `ζ`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{gain_density, GainDensityParams};
use crate::error::{Error, Result};
use crate::geometry::{element_centers, quaternion_partition, ElementGrid, Rect, UpaLayerSpec};
use crate::quadrature::AdaptiveCubature;

pub const LEMMA_TOL: f64 = 1e-9;
/// Relative slack allowed on the bound before a sample counts as a violation.
pub const BOUND_SLACK: f64 = 1e-6;

/// Where on layer 2 the output is observed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LemmaTarget {
    /// Center of a layer-2 element; layer 2 mirrors the layer-1 grid.
    Element(usize),
    /// Arbitrary `(α, β)` on the layer-2 plane.
    Point { alpha: f64, beta: f64 },
}

impl LemmaTarget {
    pub const ON_AXIS: LemmaTarget = LemmaTarget::Point { alpha: 0.0, beta: 0.0 };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaScenario {
    /// Elements per side; `N = b²`.
    pub b: usize,
    pub a: f64,
    pub d1: f64,
    pub d2: f64,
    pub wavelength: f64,
    pub target: LemmaTarget,
}

impl LemmaScenario {
    pub fn validate(&self) -> Result<()> {
        if self.b == 0 || !self.b.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("grid side must be even and positive, got {}", self.b)));
        }
        for (name, v) in [("a", self.a), ("d1", self.d1), ("d2", self.d2), ("wavelength", self.wavelength)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if let LemmaTarget::Element(n) = self.target {
            if n >= self.len() {
                return Err(Error::InvalidArgument(format!("target element {n} outside grid of {}", self.len())));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.b * self.b
    }

    pub fn is_empty(&self) -> bool {
        self.b == 0
    }

    pub fn grid(&self) -> ElementGrid {
        element_centers(&UpaLayerSpec {
            cols: self.b,
            rows: self.b,
            element_size: self.a,
            plane_y: self.d1,
            center_xz: (0.0, 0.0),
        })
    }

    /// `(α, β)` of the observation point.
    pub fn target_xz(&self) -> (f64, f64) {
        match self.target {
            LemmaTarget::Element(n) => self.grid().centers[n],
            LemmaTarget::Point { alpha, beta } => (alpha, beta),
        }
    }

    pub fn aperture(&self) -> Rect {
        Rect::square(0.0, 0.0, self.a * self.b as f64)
    }

    fn kernels(&self) -> (GainDensityParams, GainDensityParams) {
        let (alpha, beta) = self.target_xz();
        (
            GainDensityParams { d: self.d1, offset_x: 0.0, offset_z: 0.0 },
            GainDensityParams { d: self.d2, offset_x: alpha, offset_z: beta },
        )
    }

    /// `|h₁|²·|h₂|²` at layer-1 point `(px, pz)`.
    pub fn bound_density(&self, px: f64, pz: f64) -> f64 {
        let (k1, k2) = self.kernels();
        gain_density(&k1, px, pz) * gain_density(&k2, px, pz)
    }

    /// `h₁·h₂` at layer-1 point `(px, pz)`, amplitude and two-hop phase.
    pub fn path_kernel(&self, px: f64, pz: f64) -> Complex64 {
        let (k1, k2) = self.kernels();
        let (alpha, beta) = self.target_xz();
        let amp = (gain_density(&k1, px, pz) * gain_density(&k2, px, pz)).sqrt();
        let r1 = (px * px + pz * pz + self.d1 * self.d1).sqrt();
        let r2 = ((px - alpha).powi(2) + (pz - beta).powi(2) + self.d2 * self.d2).sqrt();
        let k = 2.0 * std::f64::consts::PI / self.wavelength;
        Complex64::from_polar(amp, -k * (r1 + r2))
    }
}

/// `∫∫ h₁ h₂` over each layer-1 element.
pub fn element_integrals(scn: &LemmaScenario) -> Result<Vec<Complex64>> {
    element_integrals_with(scn, &AdaptiveCubature::with_rel_tol(LEMMA_TOL))
}

pub fn element_integrals_with(scn: &LemmaScenario, cubature: &AdaptiveCubature) -> Result<Vec<Complex64>> {
    scn.validate()?;
    let grid = scn.grid();
    (0..grid.len())
        .map(|j| Ok(cubature.integrate(|x, z| scn.path_kernel(x, z), grid.region(j))?.value))
        .collect()
}

fn check_unit(theta: &[Complex64], offset: usize) -> Result<()> {
    for (i, t) in theta.iter().enumerate() {
        let m = t.norm();
        if (m - 1.0).abs() > 1e-9 {
            return Err(Error::NonUnitPhase { index: offset + i, modulus: m });
        }
    }
    Ok(())
}

/// Output `θ₂ Σ_j θ₁,j c_j` for precomputed element integrals.
pub fn y_n(integrals: &[Complex64], theta1: &[Complex64], theta2n: Complex64) -> Result<Complex64> {
    if integrals.len() != theta1.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} phases for {} elements",
            theta1.len(),
            integrals.len()
        )));
    }
    check_unit(theta1, 0)?;
    check_unit(&[theta2n], theta1.len())?;
    Ok(theta2n * integrals.iter().zip(theta1).map(|(c, t)| c * t).sum::<Complex64>())
}

/// The bound, integrated over the whole aperture at once.
pub fn zeta_n(scn: &LemmaScenario) -> Result<f64> {
    scn.validate()?;
    let cub = AdaptiveCubature::with_rel_tol(LEMMA_TOL);
    Ok(cub.integrate(|x, z| scn.bound_density(x, z), scn.aperture())?.value.sqrt())
}

/// The same bound, summed element by element.
pub fn zeta_n_partitioned(scn: &LemmaScenario) -> Result<f64> {
    scn.validate()?;
    let cub = AdaptiveCubature::with_rel_tol(LEMMA_TOL);
    let grid = scn.grid();
    let mut total = 0.0;
    for j in 0..grid.len() {
        total += cub.integrate(|x, z| scn.bound_density(x, z), grid.region(j))?.value;
    }
    Ok(total.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub trials: usize,
    pub seed: u64,
    pub zeta: f64,
    /// `Σ |c_j|`, reached by aligning every element's phase.
    pub aligned_max: f64,
    pub sampled_max: f64,
    pub ratio: f64,
}

/// Monte-Carlo check that random layer-1 phases never exceed `ζ`.
pub fn verify_bound(scn: &LemmaScenario, trials: usize, seed: u64) -> Result<BoundReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    let c = element_integrals(scn)?;
    let zeta = zeta_n(scn)?;
    let limit = zeta * (1.0 + BOUND_SLACK);
    let aligned_max: f64 = c.iter().map(|x| x.norm()).sum();
    if aligned_max > limit {
        return Err(Error::BoundViolated(format!("aligned amplitude {aligned_max} exceeds bound {zeta}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampled_max = 0.0f64;
    let mut theta = vec![Complex64::new(1.0, 0.0); c.len()];
    for trial in 0..trials {
        for t in theta.iter_mut() {
            *t = Complex64::from_polar(1.0, rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
        }
        let y = y_n(&c, &theta, Complex64::new(1.0, 0.0))?.norm();
        if y > limit {
            return Err(Error::BoundViolated(format!("trial {trial}: |y| = {y} exceeds bound {zeta}")));
        }
        sampled_max = sampled_max.max(y);
    }
    Ok(BoundReport {
        trials,
        seed,
        zeta,
        aligned_max,
        sampled_max,
        ratio: aligned_max / zeta,
    })
}

/// Phases `θ_j = exp(−j·arg c_j)` that add every element in phase.
pub fn aligned_phases(integrals: &[Complex64]) -> Vec<Complex64> {
    integrals.iter().map(|c| Complex64::from_polar(1.0, -c.arg())).collect()
}

/// Unit phases for a pair `(c1, c2)` whose weighted sum is `t` on the positive real axis.
fn steer_pair(c1: Complex64, c2: Complex64, t: f64) -> (Complex64, Complex64) {
    let (m1, m2) = (c1.norm(), c2.norm());
    let cos = ((t * t + m1 * m1 - m2 * m2) / (2.0 * t * m1)).clamp(-1.0, 1.0);
    let phi1 = cos.acos();
    let first = Complex64::from_polar(m1, phi1);
    let phi2 = (Complex64::from(t) - first).arg();
    (
        Complex64::from_polar(1.0, phi1 - c1.arg()),
        Complex64::from_polar(1.0, phi2 - c2.arg()),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroConstruction {
    pub theta1: Vec<Complex64>,
    /// `|y_n|` reached with `θ₂ = 1`.
    pub residual: f64,
    pub zeta: f64,
}

/// Layer-1 phases that cancel the output exactly, one quaternion at a time.
///
/// Within each group of four mirror elements, pair (1, 2) is steered to a
/// resultant `t` and pair (3, 4) to `−t`, with `t` at the midpoint of the
/// magnitudes both pairs can reach.
pub fn construct_zero(scn: &LemmaScenario) -> Result<ZeroConstruction> {
    let c = element_integrals(scn)?;
    let groups = quaternion_partition(&scn.grid())?;
    let mut theta = vec![Complex64::new(1.0, 0.0); c.len()];
    for (q, g) in groups.iter().enumerate() {
        let m = g.map(|j| c[j].norm());
        let lo = (m[0] - m[1]).abs().max((m[2] - m[3]).abs());
        let hi = (m[0] + m[1]).min(m[2] + m[3]);
        if lo > hi || hi <= 0.0 {
            return Err(Error::PolygonInfeasible { quaternion: q, magnitudes: m });
        }
        let t = 0.5 * (lo + hi);
        let (t0, t1) = steer_pair(c[g[0]], c[g[1]], t);
        let (t2, t3) = steer_pair(c[g[2]], c[g[3]], t);
        theta[g[0]] = t0;
        theta[g[1]] = t1;
        theta[g[2]] = -t2;
        theta[g[3]] = -t3;
    }
    let residual = y_n(&c, &theta, Complex64::new(1.0, 0.0))?.norm();
    Ok(ZeroConstruction {
        theta1: theta,
        residual,
        zeta: zeta_n(scn)?,
    })
}

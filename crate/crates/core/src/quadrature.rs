//! Globally adaptive cubature over rectangles.
//!
//! Each panel is integrated with a tensor-product 15-point Kronrod rule; the
//! embedded tensor 7-point Gauss rule supplies the local error estimate. The
//! panel with the largest error is split into four until the summed error
//! meets `max(rel_tol * |I|, abs_tol)`.

// rule constants are kept at their published digits
#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Rect;

/// Scalar types the cubature can accumulate.
pub trait QuadValue:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn modulus(&self) -> f64;
}

impl QuadValue for f64 {
    fn modulus(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn modulus(&self) -> f64 {
        self.norm()
    }
}

// Kronrod abscissae on [-1, 1]; odd positions (1, 3, 5) together with the
// mirrored points are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// 15 Kronrod nodes on [-1, 1] with Kronrod weight and (possibly zero) Gauss weight.
fn rule_1d() -> [(f64, f64, f64); 15] {
    let mut out = [(0.0, 0.0, 0.0); 15];
    for i in 0..7 {
        let g = if i % 2 == 1 { WG[i / 2] } else { 0.0 };
        out[i] = (-XGK[i], WGK[i], g);
        out[14 - i] = (XGK[i], WGK[i], g);
    }
    out[7] = (0.0, WGK[7], WG[3]);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveCubature {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for AdaptiveCubature {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 0.0,
            max_panels: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CubatureResult<T> {
    pub value: T,
    pub error: f64,
    pub panels: usize,
    pub evaluations: usize,
}

struct Panel<T> {
    rect: Rect,
    value: T,
    error: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

impl AdaptiveCubature {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    fn panel<T: QuadValue, F: Fn(f64, f64) -> T>(f: &F, r: Rect, rule: &[(f64, f64, f64); 15]) -> (T, f64) {
        let (cx, cz) = r.center();
        let hx = 0.5 * (r.x1 - r.x0);
        let hz = 0.5 * (r.z1 - r.z0);
        let mut kron = T::default();
        let mut gauss = T::default();
        for &(u, wku, wgu) in rule {
            let x = cx + hx * u;
            let mut k_row = T::default();
            let mut g_row = T::default();
            for &(v, wkv, wgv) in rule {
                let fx = f(x, cz + hz * v);
                k_row = k_row + fx * wkv;
                if wgv != 0.0 {
                    g_row = g_row + fx * wgv;
                }
            }
            kron = kron + k_row * wku;
            if wgu != 0.0 {
                gauss = gauss + g_row * wgu;
            }
        }
        let jac = hx * hz;
        let kron = kron * jac;
        let gauss = gauss * jac;
        (kron, (kron - gauss).modulus())
    }

    /// Integrates `f(x, z)` over `rect`.
    pub fn integrate<T, F>(&self, f: F, rect: Rect) -> Result<CubatureResult<T>>
    where
        T: QuadValue,
        F: Fn(f64, f64) -> T,
    {
        if !(rect.x1 > rect.x0 && rect.z1 > rect.z0) {
            return Err(Error::InvalidArgument(format!(
                "integration region must have positive area: {rect:?}"
            )));
        }
        let rule = rule_1d();
        let (value, error) = Self::panel(&f, rect, &rule);
        let mut total = value;
        let mut total_err = error;
        let mut heap = BinaryHeap::new();
        heap.push(Panel { rect, value, error });
        let mut panels = 1usize;

        loop {
            let target = (self.rel_tol * total.modulus()).max(self.abs_tol);
            // Below this the estimate is round-off, not truncation.
            let floor = 64.0 * f64::EPSILON * total.modulus();
            if total_err <= target || total_err <= floor {
                break;
            }
            if panels + 3 > self.max_panels {
                return Err(Error::QuadratureNotConverged {
                    panels,
                    estimate: total.modulus(),
                    error: total_err,
                });
            }
            let worst = heap.pop().expect("heap holds every live panel");
            total = total - worst.value;
            total_err -= worst.error;
            let (cx, cz) = worst.rect.center();
            let r = worst.rect;
            for q in [
                Rect { x0: r.x0, x1: cx, z0: r.z0, z1: cz },
                Rect { x0: cx, x1: r.x1, z0: r.z0, z1: cz },
                Rect { x0: r.x0, x1: cx, z0: cz, z1: r.z1 },
                Rect { x0: cx, x1: r.x1, z0: cz, z1: r.z1 },
            ] {
                let (value, error) = Self::panel(&f, q, &rule);
                total = total + value;
                total_err += error;
                heap.push(Panel { rect: q, value, error });
            }
            panels += 3;
            // Re-sum from live panels periodically so cancellation in the running
            // totals does not accumulate.
            if panels % 300 == 1 {
                total = heap.iter().fold(T::default(), |acc, p| acc + p.value);
                total_err = heap.iter().map(|p| p.error).sum();
            }
        }
        let value = heap.iter().fold(T::default(), |acc, p| acc + p.value);
        let error = heap.iter().map(|p| p.error).sum();
        Ok(CubatureResult {
            value,
            error,
            panels,
            evaluations: panels * 225,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomials_are_exact_on_one_panel() {
        let q = AdaptiveCubature::default();
        let r = q
            .integrate(|x, z| x.powi(6) * z.powi(4) + 3.0 * x * z + 1.0, Rect { x0: 0.0, x1: 1.0, z0: -1.0, z1: 2.0 })
            .unwrap();
        // ∫x^6 = 1/7, ∫z^4 over [-1,2] = 33/5, ∫x = 1/2, ∫z = 3/2, area 3
        let exact = 33.0 / 35.0 + 3.0 * 0.5 * 1.5 + 3.0;
        assert_relative_eq!(r.value, exact, max_relative = 1e-14);
        assert_eq!(r.panels, 1);
    }

    #[test]
    fn weights_sum_to_two() {
        let rule = rule_1d();
        let k: f64 = rule.iter().map(|r| r.1).sum();
        let g: f64 = rule.iter().map(|r| r.2).sum();
        assert_relative_eq!(k, 2.0, epsilon = 1e-15);
        assert_relative_eq!(g, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn peaked_integrand_converges() {
        // ∫∫ 1/(x²+z²+ε²)^{3/2} over the plane is 2π/ε; on a large square most of it.
        let eps = 0.01;
        let q = AdaptiveCubature::with_rel_tol(1e-10);
        let f = |x: f64, z: f64| (x * x + z * z + eps * eps).powf(-1.5);
        let half = 1e3;
        let r = q.integrate(f, Rect::square(0.0, 0.0, 2.0 * half)).unwrap();
        assert_relative_eq!(r.value, 2.0 * std::f64::consts::PI / eps, max_relative = 1e-4);
    }

    #[test]
    fn complex_oscillation() {
        let q = AdaptiveCubature::with_rel_tol(1e-10);
        let k = 40.0;
        let r = q
            .integrate(|x, z| Complex64::from_polar(1.0, k * (x + z)), Rect { x0: 0.0, x1: 1.0, z0: 0.0, z1: 1.0 })
            .unwrap();
        let one = (Complex64::from_polar(1.0, k) - 1.0) / Complex64::new(0.0, k);
        let exact = one * one;
        assert!((r.value - exact).norm() < 1e-10 * exact.norm());
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let q = AdaptiveCubature {
            rel_tol: 1e-14,
            abs_tol: 0.0,
            max_panels: 10,
        };
        let r = q.integrate(|x: f64, _z: f64| x.abs().sqrt(), Rect::square(0.0, 0.0, 2.0));
        assert!(matches!(r, Err(Error::QuadratureNotConverged { .. })));
    }

    #[test]
    fn empty_region_is_rejected() {
        let q = AdaptiveCubature::default();
        assert!(q.integrate(|_, _| 1.0, Rect { x0: 0.0, x1: 0.0, z0: 0.0, z1: 1.0 }).is_err());
    }
}

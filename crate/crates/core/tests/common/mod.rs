#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use usris::beamformer::BeamformerState;
use usris::channel::{CMatrix, CVector, ChannelSet};

/// Adaptive Simpson on `[a, b]`, independent of the library's Gauss–Kronrod cubature.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Iterated Simpson over a rectangle; `tol` is absolute.
pub fn simpson2d<F: Fn(f64, f64) -> f64>(f: F, x0: f64, x1: f64, z0: f64, z1: f64, tol: f64) -> f64 {
    let inner_tol = tol / (x1 - x0);
    let outer = |x: f64| simpson(&|z: f64| f(x, z), z0, z1, inner_tol);
    simpson(&outer, x0, x1, tol)
}

pub fn cgauss(rng: &mut ChaCha8Rng) -> Complex64 {
    // Box–Muller, unit variance per complex entry
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    let r = (-u1.ln()).sqrt();
    Complex64::from_polar(r, 2.0 * std::f64::consts::PI * u2)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| cgauss(rng))
}

/// Random channels for a `k`-antenna user, layers of sizes `n`, and an `m`-antenna receiver.
pub fn random_channels(rng: &mut ChaCha8Rng, k: usize, n: &[usize], m: usize) -> ChannelSet {
    let mut f = Vec::with_capacity(n.len());
    let mut prev = k;
    for &nl in n {
        f.push(random_matrix(rng, nl, prev));
        prev = nl;
    }
    ChannelSet {
        f,
        g: random_matrix(rng, prev, m),
        wavelength: 0.12,
    }
}

pub fn random_phases(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| Complex64::from_polar(1.0, rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)))
}

pub fn random_direction(rng: &mut ChaCha8Rng, n: usize, norm: f64) -> CVector {
    let v = CVector::from_fn(n, |_, _| cgauss(rng));
    &v * Complex64::from(norm / v.norm())
}

/// Random state meeting every constraint: unit phases, `‖w‖² = p_max`, `‖v‖ = 1`.
pub fn random_feasible_state(rng: &mut ChaCha8Rng, ch: &ChannelSet, p_max: f64) -> BeamformerState {
    BeamformerState {
        w: random_direction(rng, ch.num_tx(), p_max.sqrt()),
        theta: (1..=ch.num_layers()).map(|l| random_phases(rng, ch.layer_len(l))).collect(),
        v: random_direction(rng, ch.num_rx(), 1.0),
    }
}

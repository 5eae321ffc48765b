//! Cascaded signal model and alternating SNR maximization.
//!
//! The combined signal at the base station is
//! `z = vᴴ gᴴ (κΘ_L f_L) ⋯ (κΘ_1 f_1) w s + vᴴ n`. With all but one block
//! fixed, each of `v`, `θ_l` and `w` has a closed-form maximizer of the
//! detection SNR; sweeping them in turn never decreases the objective.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{CMatrix, CVector, ChannelSet};
use crate::error::{Error, Result};

/// Transmit beamformer, per-layer phase shifts and receive combiner.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerState {
    pub w: CVector,
    pub theta: Vec<CVector>,
    pub v: CVector,
}

impl BeamformerState {
    /// Random unit-modulus phases, all-ones `w` and `v`.
    pub fn initial(ch: &ChannelSet, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = (1..=ch.num_layers())
            .map(|l| {
                CVector::from_fn(ch.layer_len(l), |_, _| {
                    Complex64::from_polar(1.0, rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
                })
            })
            .collect();
        Self {
            w: CVector::from_element(ch.num_tx(), Complex64::new(1.0, 0.0)),
            theta,
            v: CVector::from_element(ch.num_rx(), Complex64::new(1.0, 0.0)),
        }
    }

    pub fn check(&self, ch: &ChannelSet) -> Result<()> {
        if self.w.len() != ch.num_tx() {
            return Err(Error::DimensionMismatch(format!("w has {} entries, channel has K = {}", self.w.len(), ch.num_tx())));
        }
        if self.v.len() != ch.num_rx() {
            return Err(Error::DimensionMismatch(format!("v has {} entries, channel has M = {}", self.v.len(), ch.num_rx())));
        }
        if self.theta.len() != ch.num_layers() {
            return Err(Error::DimensionMismatch(format!(
                "{} phase vectors for {} layers",
                self.theta.len(),
                ch.num_layers()
            )));
        }
        for (l, t) in self.theta.iter().enumerate() {
            if t.len() != ch.layer_len(l + 1) {
                return Err(Error::DimensionMismatch(format!(
                    "θ{} has {} entries, layer has {}",
                    l + 1,
                    t.len(),
                    ch.layer_len(l + 1)
                )));
            }
        }
        Ok(())
    }
}

/// Partial products of the cascade.
///
/// `prefix[l] = ξ_(l,1) w` (with `prefix[0] = w`) and
/// `suffix[l] = (vᴴ gᴴ ξ_(L,l+1))ᵀ` (with `suffix[L] = conj(g v)`), so that the
/// effective scalar equals `suffix[l] · prefix[l]` for every `l`.
#[derive(Debug, Clone)]
pub struct CascadeCache {
    pub prefix: Vec<CVector>,
    pub suffix: Vec<CVector>,
    pub kappa: f64,
}

impl CascadeCache {
    pub fn build(state: &BeamformerState, ch: &ChannelSet, kappa: f64) -> Result<Self> {
        state.check(ch)?;
        let prefix = prefixes(state, ch, kappa);
        let suffix = suffixes(state, ch, kappa);
        Ok(Self { prefix, suffix, kappa })
    }

    pub fn effective_scalar(&self) -> Complex64 {
        let l = self.prefix.len() - 1;
        self.suffix[l].dot(&self.prefix[l])
    }
}

fn prefixes(state: &BeamformerState, ch: &ChannelSet, kappa: f64) -> Vec<CVector> {
    let mut out = Vec::with_capacity(ch.num_layers() + 1);
    out.push(state.w.clone());
    for (f, theta) in ch.f.iter().zip(&state.theta) {
        let incident = f * out.last().unwrap();
        out.push(incident.component_mul(theta) * Complex64::from(kappa));
    }
    out
}

fn suffixes(state: &BeamformerState, ch: &ChannelSet, kappa: f64) -> Vec<CVector> {
    let layers = ch.num_layers();
    let mut out = vec![CVector::zeros(0); layers + 1];
    out[layers] = (&ch.g * &state.v).map(|c| c.conj());
    for l in (1..=layers).rev() {
        let weighted = out[l].component_mul(&state.theta[l - 1]) * Complex64::from(kappa);
        out[l - 1] = ch.f[l - 1].transpose() * weighted;
    }
    out
}

/// `vᴴ gᴴ (∏ κ Θ_l f_l) w`, evaluated layer 1 first.
pub fn effective_scalar(state: &BeamformerState, ch: &ChannelSet, kappa: f64) -> Result<Complex64> {
    state.check(ch)?;
    let u = prefixes(state, ch, kappa);
    Ok(ch.g.ad_mul(u.last().unwrap()).dotc(&state.v).conj())
}

/// Detection SNR `|vᴴ gᴴ ξ w|² / (‖v‖² σ²)`.
pub fn snr(state: &BeamformerState, ch: &ChannelSet, kappa: f64, noise_power: f64) -> Result<f64> {
    if !(noise_power > 0.0) {
        return Err(Error::InvalidArgument(format!("noise power must be positive, got {noise_power}")));
    }
    let s = effective_scalar(state, ch, kappa)?;
    let vv = state.v.norm_squared();
    if vv == 0.0 {
        return Ok(0.0);
    }
    Ok(s.norm_sqr() / (vv * noise_power))
}

fn normalized(x: &CVector) -> Result<CVector> {
    let n = x.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::ZeroEffectiveChannel);
    }
    Ok(x.unscale(n))
}

/// Optimal combiner: the dominant eigenvector of the rank-one `a aᴴ`, i.e. `a / ‖a‖`
/// with `a = gᴴ ξ_(L,1) w`.
pub fn update_v(state: &BeamformerState, ch: &ChannelSet, kappa: f64) -> Result<CVector> {
    state.check(ch)?;
    let u = prefixes(state, ch, kappa);
    normalized(&ch.g.ad_mul(u.last().unwrap()))
}

fn check_layer(ch: &ChannelSet, l: usize) -> Result<()> {
    if l == 0 || l > ch.num_layers() {
        return Err(Error::LayerOutOfRange { layer: l, layers: ch.num_layers() });
    }
    Ok(())
}

/// Phases that co-phase every summand `r_n x_n θ_n`, where `x = f_l ξ_(l−1,1) w`
/// is the incident field and `r = vᴴ gᴴ ξ_(L,l+1)` the downstream response.
fn aligned_phases(incident: &CVector, downstream: &CVector) -> CVector {
    incident.zip_map(downstream, |x, r| {
        let p = x * r;
        if p == Complex64::new(0.0, 0.0) {
            Complex64::new(1.0, 0.0)
        } else {
            p.conj() / p.norm()
        }
    })
}

/// Optimal phase vector of layer `l` (1-based) with everything else fixed.
pub fn update_theta(state: &BeamformerState, ch: &ChannelSet, kappa: f64, l: usize) -> Result<CVector> {
    check_layer(ch, l)?;
    state.check(ch)?;
    let u = prefixes(state, ch, kappa);
    let r = suffixes(state, ch, kappa);
    let incident = &ch.f[l - 1] * &u[l - 1];
    Ok(aligned_phases(&incident, &r[l]))
}

/// Optimal transmit beamformer `√P · b / ‖b‖` with `b = ξ_(L,1)ᴴ g v`.
pub fn update_w(state: &BeamformerState, ch: &ChannelSet, kappa: f64, p_max: f64) -> Result<CVector> {
    if !(p_max >= 0.0) {
        return Err(Error::InvalidArgument(format!("power budget must be non-negative, got {p_max}")));
    }
    state.check(ch)?;
    let r = suffixes(state, ch, kappa);
    let b = r[0].map(|c| c.conj());
    Ok(normalized(&b)? * Complex64::from(p_max.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeConfig {
    /// Stop once the relative SNR change of one sweep falls below this.
    pub tolerance: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Independent random phase initializations; the best final SNR is kept.
    pub restarts: usize,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iters: 100,
            seed: 0,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    /// SNR of the initial state (all-ones `w`, which need not satisfy the power budget).
    pub initial_snr: f64,
    /// Linear SNR after each full sweep.
    pub snr_per_iteration: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub tolerance: f64,
    /// Seed of the phase initialization that produced this trace.
    pub seed: u64,
}

impl RunTrace {
    pub fn final_snr(&self) -> f64 {
        self.snr_per_iteration.last().copied().unwrap_or(self.initial_snr)
    }

    /// Iteration (1-based) at which the stopping rule first held.
    pub fn converged_at(&self) -> Option<usize> {
        self.converged.then_some(self.iterations)
    }
}

fn validate_inputs(ch: &ChannelSet, kappa: f64, noise_power: f64, p_max: f64, config: &OptimizeConfig) -> Result<()> {
    ch.validate()?;
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::InvalidArgument(format!("kappa must lie in (0, 1], got {kappa}")));
    }
    if !(noise_power > 0.0) {
        return Err(Error::InvalidArgument(format!("noise power must be positive, got {noise_power}")));
    }
    if !(p_max > 0.0 && p_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("power budget must be positive, got {p_max}")));
    }
    if !(config.tolerance > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if config.max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
    }
    Ok(())
}

/// One alternating run from `initial`, calling `observe(iteration, state, snr)` after every sweep.
///
/// The stopping rule compares the received signal power `|vᴴgᴴξw|²` between
/// sweeps, so it does not depend on the noise power.
#[allow(clippy::too_many_arguments)]
pub fn run_alternating<F>(
    ch: &ChannelSet,
    kappa: f64,
    noise_power: f64,
    p_max: f64,
    tolerance: f64,
    max_iters: usize,
    initial: BeamformerState,
    seed: u64,
    mut observe: F,
) -> Result<(BeamformerState, RunTrace)>
where
    F: FnMut(usize, &BeamformerState, f64),
{
    initial.check(ch)?;
    let k = Complex64::from(kappa);
    let mut state = initial;
    let signal_of = |state: &BeamformerState| -> f64 {
        let u = prefixes(state, ch, kappa);
        ch.g.ad_mul(u.last().unwrap()).dotc(&state.v).norm_sqr()
    };
    let snr_of = |signal: f64, state: &BeamformerState| signal / (state.v.norm_squared() * noise_power);

    let mut prev_signal = signal_of(&state);
    let initial_snr = snr_of(prev_signal, &state);
    let mut trace = RunTrace {
        initial_snr,
        snr_per_iteration: Vec::new(),
        iterations: 0,
        converged: false,
        tolerance,
        seed,
    };

    for iter in 1..=max_iters {
        // combiner
        let u = prefixes(&state, ch, kappa);
        state.v = normalized(&ch.g.ad_mul(u.last().unwrap()))?;

        // phases, layer 1 outward; suffix[l] only depends on layers above l
        let r = suffixes(&state, ch, kappa);
        let mut forward = state.w.clone();
        for ((f, slot), r_l) in ch.f.iter().zip(state.theta.iter_mut()).zip(&r[1..]) {
            let incident = f * &forward;
            let theta = aligned_phases(&incident, r_l);
            forward = incident.component_mul(&theta) * k;
            *slot = theta;
        }

        // transmit beamformer against the refreshed downstream response
        let r = suffixes(&state, ch, kappa);
        let b = r[0].map(|c| c.conj());
        state.w = normalized(&b)? * Complex64::from(p_max.sqrt());

        let signal = signal_of(&state);
        let snr = snr_of(signal, &state);
        trace.snr_per_iteration.push(snr);
        trace.iterations = iter;
        observe(iter, &state, snr);

        let change = (signal - prev_signal).abs() / prev_signal.max(f64::MIN_POSITIVE);
        prev_signal = signal;
        if change < tolerance {
            trace.converged = true;
            break;
        }
    }
    Ok((state, trace))
}

/// Alternating optimization with `config.restarts` random phase initializations.
///
/// Restart `r` is seeded with `config.seed + r`; the run with the highest
/// final SNR wins (ties go to the lowest restart index).
pub fn optimize(
    ch: &ChannelSet,
    kappa: f64,
    noise_power: f64,
    p_max: f64,
    config: &OptimizeConfig,
) -> Result<(BeamformerState, RunTrace)> {
    validate_inputs(ch, kappa, noise_power, p_max, config)?;
    let restarts = config.restarts.max(1);
    let runs = (0..restarts as u64)
        .into_par_iter()
        .map(|r| {
            let seed = config.seed.wrapping_add(r);
            let init = BeamformerState::initial(ch, seed);
            run_alternating(ch, kappa, noise_power, p_max, config.tolerance, config.max_iters, init, seed, |_, _, _| {})
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.1.final_snr() > runs[best].1.final_snr() {
            best = i;
        }
    }
    Ok(runs.into_iter().nth(best).unwrap())
}

/// Largest singular value of `h` with its left and right singular vectors,
/// by power iteration on `hᴴh` until the Rayleigh quotient settles to `rel_tol`.
pub fn dominant_singular_triplet(h: &CMatrix, rel_tol: f64) -> Result<(f64, CVector, CVector)> {
    let gram: DMatrix<Complex64> = h.ad_mul(h);
    let (mut start, mut best) = (0, 0.0);
    for j in 0..gram.ncols() {
        let n = gram.column(j).norm();
        if n > best {
            best = n;
            start = j;
        }
    }
    if !(best > 0.0) {
        return Err(Error::ZeroEffectiveChannel);
    }
    let mut x = normalized(&gram.column(start).into_owned())?;
    let mut lambda = (x.dotc(&(&gram * &x))).re;
    for _ in 0..100_000 {
        let y = &gram * &x;
        x = normalized(&y)?;
        let next = (x.dotc(&(&gram * &x))).re;
        let settled = (next - lambda).abs() <= rel_tol * next.abs();
        lambda = next;
        if settled {
            break;
        }
    }
    let sigma = lambda.max(0.0).sqrt();
    let left = normalized(&(h * &x))?;
    Ok((sigma, left, x))
}

/// Best SNR without a surface: `P σ_max(h)² / σ²`, attained by matched `w` and `v`.
pub fn no_ris_baseline(direct: &CMatrix, noise_power: f64, p_max: f64) -> Result<f64> {
    if !(noise_power > 0.0) {
        return Err(Error::InvalidArgument(format!("noise power must be positive, got {noise_power}")));
    }
    let (sigma, _, _) = dominant_singular_triplet(direct, 1e-12)?;
    Ok(p_max * sigma * sigma / noise_power)
}

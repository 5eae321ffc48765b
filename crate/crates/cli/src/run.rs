//! One function per subcommand; each returns the tables it produces.

use rayon::prelude::*;
use usris::beamformer::{no_ris_baseline, optimize, BeamformerState, OptimizeConfig, RunTrace};
use usris::channel::{assemble_channels, direct_channel, ChannelSet};
use usris::error::Error;
use usris::lemma::{construct_zero, element_integrals, verify_bound};
use usris::metrics::{ear, layer_power, layer_radiation_pattern, mainlobe_to_sidelobe, normalize_patterns, sinr_eval, UserLink};
use usris::scenario::{Scenario, Variant};
use usris::{db, from_db};

use crate::config::{displaced, Config, Resolved};
use crate::output::{num, sci, Table};

fn solve(s: &Scenario, ch: &ChannelSet, opt: &OptimizeConfig) -> anyhow::Result<(BeamformerState, RunTrace)> {
    Ok(optimize(ch, s.effective_kappa(), s.noise_power, s.p_max, opt)?)
}

fn with_surface(vs: &[Resolved]) -> Vec<&Resolved> {
    let mut out: Vec<&Resolved> = vs.iter().filter(|v| v.variant != Variant::NoRis).collect();
    out.sort_by(|a, b| a.label.cmp(&b.label));
    out
}

pub fn snr_sweep(cfg: &Config, opt: &OptimizeConfig) -> anyhow::Result<Vec<Table>> {
    let mut variants = cfg.resolve()?;
    variants.sort_by(|a, b| a.label.cmp(&b.label));
    let points = cfg.sweep_points()?;
    let channels = variants
        .par_iter()
        .map(|v| match v.variant {
            Variant::NoRis => Ok(None),
            _ => assemble_channels(&v.scenario).map(Some),
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let jobs: Vec<(usize, f64)> = (0..variants.len()).flat_map(|i| points.iter().map(move |&p| (i, p))).collect();
    let snrs = jobs
        .par_iter()
        .map(|&(i, p)| {
            let mut s = variants[i].scenario.clone();
            s.p_max = from_db(p);
            match &channels[i] {
                None => Ok(no_ris_baseline(&direct_channel(&s), s.noise_power, s.p_max)?),
                Some(ch) => Ok(solve(&s, ch, opt)?.1.final_snr()),
            }
        })
        .collect::<anyhow::Result<Vec<f64>>>()?;
    let mut t = Table::new("snr_sweep", &["variant", "p_max_dbw", "snr_db"]);
    for (&(i, p), snr) in jobs.iter().zip(snrs) {
        t.push(vec![variants[i].label.clone(), num(p), num(db(snr))]);
    }
    Ok(vec![t])
}

pub fn converge(cfg: &Config, opt: &OptimizeConfig) -> anyhow::Result<Vec<Table>> {
    let variants = cfg.resolve()?;
    let runs = with_surface(&variants)
        .into_par_iter()
        .map(|v| {
            let ch = assemble_channels(&v.scenario)?;
            Ok((v.label.clone(), solve(&v.scenario, &ch, opt)?.1))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut t = Table::new("convergence", &["variant", "iteration", "snr_db"]);
    t.note("p_max_dbw", cfg.scenario.p_max_dbw);
    t.note("tolerance", opt.tolerance);
    for (label, trace) in &runs {
        t.note(&format!("iterations.{label}"), trace.iterations);
        t.note(&format!("converged.{label}"), trace.converged);
        for (i, snr) in trace.snr_per_iteration.iter().enumerate() {
            t.push(vec![label.clone(), (i + 1).to_string(), num(db(*snr))]);
        }
    }
    Ok(vec![t])
}

struct Optimized<'a> {
    v: &'a Resolved,
    ch: ChannelSet,
    state: BeamformerState,
}

fn optimize_all<'a>(variants: &'a [Resolved], opt: &OptimizeConfig) -> anyhow::Result<Vec<Optimized<'a>>> {
    with_surface(variants)
        .into_par_iter()
        .map(|v| {
            let ch = assemble_channels(&v.scenario)?;
            let (state, _) = solve(&v.scenario, &ch, opt)?;
            Ok(Optimized { v, ch, state })
        })
        .collect()
}

pub fn power_dist(cfg: &Config, opt: &OptimizeConfig) -> anyhow::Result<Vec<Table>> {
    let variants = cfg.resolve()?;
    let eps = cfg.power_dist.epsilon;
    let mut dist = Table::new("power_distribution", &["variant", "layer", "element", "row", "col", "power_dbw"]);
    let mut summary = Table::new("ear_summary", &["variant", "layer", "epsilon", "activated", "elements", "ear_percent"]);
    summary.note("epsilon", eps);
    for o in optimize_all(&variants, opt)? {
        let grids = o.v.scenario.grids();
        let mut ratios = Vec::new();
        for l in 1..=o.ch.num_layers() {
            let d = layer_power(&o.state, &o.ch, o.v.scenario.effective_kappa(), l)?;
            for (n, p) in d.per_element_power.iter().enumerate() {
                let (c, r) = grids[l - 1].col_row(n);
                dist.push(vec![o.v.label.clone(), l.to_string(), n.to_string(), r.to_string(), c.to_string(), num(db(*p))]);
            }
            let e = ear(&d, eps)?;
            ratios.push(e.ratio);
            summary.push(vec![
                o.v.label.clone(),
                l.to_string(),
                num(eps),
                e.activated_count.to_string(),
                d.per_element_power.len().to_string(),
                num(100.0 * e.ratio),
            ]);
        }
        if ratios.len() > 1 {
            let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
            summary.push(vec![o.v.label.clone(), "overall".into(), num(eps), String::new(), String::new(), num(100.0 * mean)]);
        }
    }
    Ok(vec![dist, summary])
}

pub fn pattern(cfg: &Config, opt: &OptimizeConfig) -> anyhow::Result<Vec<Table>> {
    let variants = cfg.resolve()?;
    let angles = cfg.angles_rad()?;
    let mut keyed = Vec::new();
    let mut patterns = Vec::new();
    for o in optimize_all(&variants, opt)? {
        let grids = o.v.scenario.grids();
        for l in 1..=o.ch.num_layers() {
            keyed.push((o.v.label.clone(), l));
            patterns.push(layer_radiation_pattern(&o.state, &o.ch, o.v.scenario.effective_kappa(), &grids, l, &angles)?);
        }
    }
    normalize_patterns(&mut patterns);
    let mut t = Table::new("pattern", &["variant", "layer", "angle_deg", "gain_db"]);
    let mut s = Table::new("pattern_summary", &["variant", "layer", "peak_deg", "peak_db", "mainlobe_to_sidelobe_db"]);
    t.note("normalization", "0 dB at the largest gain across all rows");
    for ((label, l), p) in keyed.iter().zip(&patterns) {
        for (a, g) in p.angles.iter().zip(&p.gain_db) {
            t.push(vec![label.clone(), l.to_string(), num(a.to_degrees()), num(*g)]);
        }
        let peak = (0..p.gain_db.len()).max_by(|&a, &b| p.gain_db[a].total_cmp(&p.gain_db[b])).unwrap_or(0);
        let msr = mainlobe_to_sidelobe(p).map(num).unwrap_or_default();
        s.push(vec![label.clone(), l.to_string(), num(p.angles[peak].to_degrees()), num(p.gain_db[peak]), msr]);
    }
    Ok(vec![t, s])
}

pub fn lemma1(cfg: &Config, seed: u64) -> anyhow::Result<Vec<Table>> {
    let trials = cfg.lemma1.as_ref().map_or(1000, |l| l.trials);
    let scenarios = cfg.lemma_scenarios()?;
    let mut bound = Table::new(
        "lemma1_bound",
        &["b", "target", "zeta", "aligned_max", "sampled_max", "aligned_over_zeta", "trials", "status"],
    );
    let mut zero = Table::new("lemma1_zero", &["b", "target", "residual", "residual_over_zeta", "status"]);
    let mut ints = Table::new("lemma1_integrals", &["b", "target", "element", "re", "im", "abs"]);
    bound.note("wavelength_m", scenarios.first().map_or(0.0, |s| s.1.wavelength));
    for (label, scn) in &scenarios {
        let b = scn.b.to_string();
        for (j, c) in element_integrals(scn)?.iter().enumerate() {
            ints.push(vec![b.clone(), label.clone(), j.to_string(), sci(c.re), sci(c.im), sci(c.norm())]);
        }
        match verify_bound(scn, trials, seed) {
            Ok(r) => bound.push(vec![
                b.clone(),
                label.clone(),
                sci(r.zeta),
                sci(r.aligned_max),
                sci(r.sampled_max),
                num(r.ratio),
                trials.to_string(),
                "ok".into(),
            ]),
            Err(Error::BoundViolated(msg)) => {
                bound.push(vec![b.clone(), label.clone(), String::new(), String::new(), String::new(), String::new(), trials.to_string(), format!("violated: {msg}")])
            }
            Err(e) => return Err(e.into()),
        }
        match construct_zero(scn) {
            Ok(z) => zero.push(vec![b, label.clone(), sci(z.residual), sci(z.residual / z.zeta), "ok".into()]),
            Err(Error::PolygonInfeasible { quaternion, .. }) => {
                zero.push(vec![b, label.clone(), String::new(), String::new(), format!("infeasible quaternion {quaternion}")])
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(vec![bound, zero, ints])
}

pub fn sinr(cfg: &Config, opt: &OptimizeConfig) -> anyhow::Result<Vec<Table>> {
    let sec = cfg.sinr.as_ref().ok_or_else(|| anyhow::anyhow!("config has no [sinr] section"))?;
    let variants = cfg.resolve()?;
    let v = variants
        .iter()
        .find(|v| v.label == sec.variant)
        .ok_or_else(|| anyhow::anyhow!("[sinr] refers to unknown variant `{}`", sec.variant))?;
    anyhow::ensure!(
        matches!(v.variant, Variant::MultiLayer | Variant::SingleLayerUs),
        "[sinr] needs a user-side surface; `{}` is {}",
        v.label,
        v.variant.name()
    );
    anyhow::ensure!(!sec.offsets.is_empty(), "[sinr] lists no users");
    anyhow::ensure!(sec.combiner_user < sec.offsets.len(), "combiner_user out of range");
    let solved = sec
        .offsets
        .par_iter()
        .map(|&off| {
            let s = displaced(&v.scenario, off);
            s.validate()?;
            let ch = assemble_channels(&s)?;
            let (state, _) = solve(&s, &ch, opt)?;
            Ok((ch, state))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let combiner = solved[sec.combiner_user].1.v.clone();
    let users: Vec<UserLink> = solved
        .iter()
        .map(|(ch, st)| UserLink { w: st.w.clone(), theta: st.theta.clone(), channels: ch.clone() })
        .collect();
    let r = sinr_eval(&users, &combiner, v.scenario.effective_kappa(), v.scenario.noise_power)?;
    let mut t = Table::new("sinr", &["user", "offset_x", "offset_y", "offset_z", "sinr_db", "rate_bps_hz"]);
    t.note("variant", &v.label);
    t.note("combiner_user", sec.combiner_user);
    t.note("sum_rate_bps_hz", num(r.sum_rate));
    for (u, (off, s)) in sec.offsets.iter().zip(&r.sinr).enumerate() {
        t.push(vec![u.to_string(), num(off[0]), num(off[1]), num(off[2]), num(db(*s)), num((1.0 + s).log2())]);
    }
    Ok(vec![t])
}

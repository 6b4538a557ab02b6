//! The subcommands. Parameter errors are returned as `Err` (usage errors);
//! computations that fail are recorded in the outcome and the run continues.

use serde_json::{json, Value};
use sgflab::capacity::{
    capacity_ball, equilibrium_measure, riesz_reference, structural_validators, DiscreteDomain, GramMatrix,
    Resolution,
};
use sgflab::fieldsim::{atomize, FieldSampler, TiltSpec};
use sgflab::persistence::{persist_importance, persist_naive, repulsion_experiment, Estimator};
use sgflab::spectral::{
    build_truncation, cantor_measure, irregular_measure, CantorRecipe, ClosedForm, ClosedKernel, CovarianceKernel,
    SpectralMeasure,
};

use crate::config::*;
use crate::run::{cell, csv, opt_cell, sha256_hex, Outcome};

fn spectrum_hash(mu: &SpectralMeasure) -> Option<String> {
    mu.to_json().ok().map(|s| format!("sha256:{}", sha256_hex(s.as_bytes())))
}

fn positive(name: &str, values: &[f64]) -> Result<(), String> {
    match values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        Some(v) => Err(format!("{name} must be positive and finite, got {v}")),
        None => Ok(()),
    }
}

pub fn riesz_table(cfg: &RieszTableConfig) -> Result<Outcome, String> {
    if let Some(r) = cfg.radii.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
        return Err(format!("radii must be finite and nonnegative, got {r}"));
    }
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    for &alpha in &cfg.alpha_list {
        for &d in &cfg.d_list {
            let reference = match riesz_reference(alpha, d) {
                Ok(r) => r,
                Err(e) => {
                    out.notes.push(format!("skipped alpha = {alpha}, d = {d}: {e}"));
                    continue;
                }
            };
            let regime = serde_json::to_value(reference.regime).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            let head = vec![cell(alpha), cell(d), regime, cell(reference.capacity)];
            if cfg.radii.is_empty() {
                rows.push([head.clone(), vec![String::new(), String::new()]].concat());
            }
            for &r in &cfg.radii {
                rows.push([head.clone(), vec![cell(r), cell(reference.potential(r))]].concat());
            }
        }
    }
    out.files.push(("results.csv".into(), csv("alpha,d,regime,c_alpha,r,h_alpha", &rows)));
    Ok(out)
}

enum Kernel {
    Closed(ClosedKernel),
    Spectral(SpectralMeasure),
}

impl Kernel {
    fn as_dyn(&self) -> &dyn CovarianceKernel {
        match self {
            Kernel::Closed(k) => k,
            Kernel::Spectral(m) => m,
        }
    }
}

pub fn capacity(cfg: &CapacityConfig) -> Result<Outcome, String> {
    let kernel = match &cfg.kernel {
        KernelSource::Closed { kernel: k } => {
            if k.dim == 0 || !(k.variance > 0.0) {
                return Err("closed kernel needs dim >= 1 and positive variance".into());
            }
            if let ClosedForm::Riesz { alpha } = k.form {
                ClosedKernel::riesz(alpha, k.dim).map_err(|e| e.to_string())?;
            }
            Kernel::Closed(*k)
        }
        KernelSource::Spectrum { spectrum } => Kernel::Spectral(spectrum.build()?),
    };
    positive("radii", &cfg.radii)?;
    if cfg.validators && matches!(kernel, Kernel::Closed(_)) {
        return Err("validators need a spectral kernel".into());
    }
    let hash = match &kernel {
        Kernel::Closed(k) => serde_json::to_string(k).ok().map(|s| format!("sha256:{}", sha256_hex(s.as_bytes()))),
        Kernel::Spectral(mu) => spectrum_hash(mu),
    };
    let mut out = Outcome { spectrum_hash: hash, ..Outcome::default() };
    // closed-form c_alpha T^alpha, rescaled by the variance
    let reference = match &kernel {
        Kernel::Closed(ClosedKernel { dim, form: ClosedForm::Riesz { alpha }, variance }) => {
            riesz_reference(*alpha, *dim).ok().map(|r| (r.capacity / variance, *alpha))
        }
        _ => None,
    };
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let mut solutions = Vec::new();
    for (i, &t) in cfg.radii.iter().enumerate() {
        match capacity_ball(kernel.as_dyn(), t, cfg.resolution, &cfg.solver) {
            Ok(sol) => {
                rows.push(vec![
                    cell(t),
                    cell(sol.points.len()),
                    cell(sol.capacity),
                    cell(sol.energy),
                    cell(sol.gap),
                    cell(cfg.solver.gap_tol(sol.energy)),
                    cell(sol.iterations),
                    cell(sol.min_potential),
                    cell(sol.relative_gap_bound()),
                    cell(sol.infinite),
                    opt_cell(reference.map(|(c, a)| c * t.powf(a))),
                ]);
                let mut s = sol.summary_json();
                s["t"] = json!(t);
                s["solution_file"] = json!(format!("solution_{i}.csv"));
                summaries.push(s);
                solutions.push((format!("solution_{i}.csv"), sol.to_csv()));
            }
            Err(e) => out.fail(format!("capacity at T = {t}"), e),
        }
    }
    out.files.push((
        "results.csv".into(),
        csv(
            "t,points,capacity,energy,gap,gap_tol,iterations,min_potential,relative_gap_bound,infinite,reference",
            &rows,
        ),
    ));
    out.files.extend(solutions);
    if let (true, Kernel::Spectral(mu)) = (cfg.validators, &kernel) {
        let mut vrows = Vec::new();
        match build_truncation(cfg.truncation.v, cfg.truncation.range) {
            Err(e) => out.fail("truncation pair", e),
            Ok(pair) => {
                for &t in &cfg.radii {
                    match structural_validators(mu, mu, &pair, t, cfg.resolution, &cfg.solver) {
                        Ok(list) => vrows.extend(list.into_iter().map(|r| {
                            vec![cell(t), r.name, cell(r.lhs), cell(r.rhs), cell(r.slack), cell(r.allowance), cell(r.holds)]
                        })),
                        Err(e) => out.fail(format!("validators at T = {t}"), e),
                    }
                }
            }
        }
        out.files.push(("validators.csv".into(), csv("t,name,lhs,rhs,slack,allowance,holds", &vrows)));
    }
    out.summary = Some(Value::Array(summaries));
    Ok(out)
}

pub fn persist(cfg: &PersistConfig) -> Result<Outcome, String> {
    let mu = cfg.spectrum.build()?;
    positive("atomize_resolution", &[cfg.atomize_resolution])?;
    if cfg.n_samples == 0 {
        return Err("n_samples must be positive".into());
    }
    if let Some(l) = cfg.levels.iter().find(|l| !l.is_finite()) {
        return Err(format!("level {l} is not finite"));
    }
    let d = mu.dim();
    let mut domains: Vec<(Option<f64>, DiscreteDomain)> = Vec::new();
    match &cfg.domain {
        DomainConfig::Ball { radii, resolution } => {
            positive("radii", radii)?;
            for &t in radii {
                domains.push((Some(t), resolution.domain(d, t).map_err(|e| e.to_string())?));
            }
        }
        DomainConfig::Points { points, spacing } => {
            if points.iter().any(|p| p.len() != d) {
                return Err(format!("domain points must be {d}-dimensional"));
            }
            domains.push((None, DiscreteDomain::from_points(points.clone(), *spacing).map_err(|e| e.to_string())?));
        }
    }
    if let Estimator::Importance { level: None } = cfg.estimator {
        if cfg.hypothesis.is_none() || matches!(cfg.domain, DomainConfig::Points { .. }) {
            return Err("importance sampling without an explicit tilt level needs a hypothesis and ball domains".into());
        }
    }
    let spec = atomize(&mu, cfg.atomize_resolution);
    let kernel = spec.to_measure();
    let mut out = Outcome { seeds: vec![cfg.seed], spectrum_hash: spectrum_hash(&mu), ..Outcome::default() };
    let need_capacity = cfg.hypothesis.is_some() || matches!(cfg.estimator, Estimator::Importance { .. });
    let mut rows = Vec::new();
    for (t, dom) in &domains {
        let tag = t.map_or("explicit domain".to_string(), |t| format!("T = {t}"));
        let sampler = match FieldSampler::new(&spec, dom.points()) {
            Ok(s) => s,
            Err(e) => {
                out.fail(&tag, e);
                continue;
            }
        };
        let sol = if need_capacity {
            match GramMatrix::assemble(&kernel, dom, true).and_then(|g| equilibrium_measure(&g, &cfg.solver)) {
                Ok(s) => Some(s),
                Err(e) => {
                    out.fail(format!("capacity, {tag}"), e);
                    continue;
                }
            }
        } else {
            None
        };
        for &level in &cfg.levels {
            let est = match (cfg.estimator, &sol) {
                (Estimator::Importance { level: tilt }, Some(sol)) => {
                    // default tilt: l_T above the persistence level
                    let l = tilt.unwrap_or_else(|| {
                        level + cfg.hypothesis.map_or(0.0, |h| h.ell(d, t.unwrap_or(1.0)))
                    });
                    TiltSpec::from_equilibrium(&sampler, sol, l)
                        .and_then(|tilt| persist_importance(&sampler, level, &tilt, cfg.n_samples, cfg.seed))
                }
                _ => persist_naive(&sampler, level, cfg.n_samples, cfg.seed),
            };
            let est = match est {
                Ok(e) => e,
                Err(e) => {
                    out.fail(format!("persistence, {tag}, level {level}"), e);
                    continue;
                }
            };
            if est.rare {
                out.notes.push(format!("{tag}, level {level}: no persisting sample, p <= {:e}", est.p_upper));
            }
            let cap = sol.as_ref().map(|s| s.capacity);
            let predictor = match (cfg.hypothesis, t, cap) {
                (Some(h), Some(t), Some(c)) => Some(h.m * (d as f64 - h.alpha) * c * t.ln()),
                _ => None,
            };
            rows.push(vec![
                opt_cell(*t),
                cell(dom.len()),
                cell(level),
                serde_json::to_value(est.method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                cell(est.p_hat),
                cell(est.theta_hat),
                cell(est.se_p),
                cell(est.se_theta),
                cell(est.ess),
                cell(est.n_samples),
                cell(est.hits),
                cell(est.rare),
                cell(est.p_upper),
                cell(est.unreliable),
                opt_cell(est.tilt_level),
                opt_cell(cap),
                opt_cell(predictor),
                opt_cell(predictor.map(|p| est.theta_hat / p)),
            ]);
        }
    }
    out.files.push((
        "results.csv".into(),
        csv(
            "t,points,level,method,p_hat,theta_hat,se_p,se_theta,ess,n,hits,rare,p_upper,unreliable,tilt_level,capacity,predictor,ratio",
            &rows,
        ),
    ));
    Ok(out)
}

pub fn repulsion(cfg: &RepulsionRunConfig) -> Result<Outcome, String> {
    let mu = cfg.spectrum.build()?;
    positive("atomize_resolution", &[cfg.atomize_resolution])?;
    positive("radii", &cfg.radii)?;
    let spec = atomize(&mu, cfg.atomize_resolution);
    let mut out = Outcome { seeds: vec![cfg.experiment.seed], spectrum_hash: spectrum_hash(&mu), ..Outcome::default() };
    let mut rows = Vec::new();
    match repulsion_experiment(&spec, &cfg.hypothesis, &cfg.radii, cfg.eta, &cfg.experiment) {
        Ok(list) => {
            for r in list {
                if r.skipped {
                    out.notes.push(format!("T = {}: acceptance below the minimum rate, skipped", r.t));
                }
                rows.push(vec![
                    cell(r.t),
                    cell(r.ell_t),
                    cell(r.accepted),
                    cell(r.draws),
                    cell(r.acceptance),
                    cell(r.mean_pairing),
                    cell(r.se_pairing),
                    cell(r.reference),
                    cell(r.gap),
                    cell(r.gap_se),
                    cell(r.skipped),
                ]);
            }
        }
        Err(e) => out.fail("repulsion experiment", e),
    }
    out.files.push((
        "results.csv".into(),
        csv("t,ell_t,accepted,draws,acceptance,mean_pairing,se_pairing,reference,gap,gap_se,skipped", &rows),
    ));
    Ok(out)
}

pub fn irregular(cfg: &IrregularConfig) -> Result<Outcome, String> {
    positive("spacing", &[cfg.spacing])?;
    let pair = build_truncation(cfg.truncation.v, cfg.truncation.range).map_err(|e| e.to_string())?;
    let irr = irregular_measure(cfg.alpha, cfg.epsilon, &cfg.ratios, &pair).map_err(|e| e.to_string())?;
    let mut out = Outcome { spectrum_hash: spectrum_hash(&irr.measure), ..Outcome::default() };
    let jumps: Vec<_> = irr.jump_radii().into_iter().take(cfg.max_jumps).collect();
    if jumps.is_empty() {
        out.fail("jump scales", "no scale has a positive inner radius; add ratios");
    }
    let res = Resolution::Absolute { spacing: cfg.spacing };
    let mut rows = Vec::new();
    for (i, inner, outer) in jumps {
        let solve = |t| capacity_ball(&irr.measure, t, res, &cfg.solver);
        match (solve(inner), solve(outer)) {
            (Ok(a), Ok(b)) => {
                let ratio = b.capacity / a.capacity;
                rows.push(vec![
                    cell(i),
                    cell(irr.scales[i]),
                    cell(inner),
                    cell(outer),
                    cell(a.capacity),
                    cell(b.capacity),
                    cell(ratio),
                    cell(cfg.rho),
                    cell(ratio > cfg.rho),
                ]);
            }
            (Err(e), _) | (_, Err(e)) => out.fail(format!("capacity at scale {i}"), e),
        }
    }
    out.files.push((
        "results.csv".into(),
        csv("scale,t_scale,t_inner,t_outer,cap_inner,cap_outer,ratio,rho,exceeds", &rows),
    ));
    out.summary = Some(json!({ "scales": irr.scales, "scale_masses": irr.scale_masses }));
    Ok(out)
}

/// Listing more intervals than this is refused.
const CANTOR_LIST_LIMIT: u32 = 16;

pub fn cantor(cfg: &CantorConfig) -> Result<Outcome, String> {
    let recipe = CantorRecipe::from_sequence(&cfg.sequence, cfg.depth).map_err(|e| e.to_string())?;
    recipe.validate().map_err(|e| e.to_string())?;
    if recipe.branching(cfg.depth) > CANTOR_LIST_LIMIT {
        return Err(format!("more than 2^{CANTOR_LIST_LIMIT} intervals at depth {}", cfg.depth));
    }
    let mu = cantor_measure(&cfg.sequence, cfg.depth).map_err(|e| e.to_string())?;
    let w = recipe.interval_width();
    let scale = 2f64.powi(cfg.depth as i32);
    let rows: Vec<Vec<String>> = recipe
        .left_endpoints()
        .into_iter()
        .map(|e| vec![cell(e), cell(e + w), cell(recipe.dyadic_mass((e * scale).round() as u64, cfg.depth))])
        .collect();
    Ok(Outcome {
        files: vec![("results.csv".into(), csv("left,right,mass", &rows))],
        spectrum_hash: spectrum_hash(&mu),
        summary: Some(json!({ "intervals": rows.len(), "interval_width": w })),
        ..Outcome::default()
    })
}

//! One function per subcommand: fill in defaults, compute, package.

use std::f64::consts::PI;
use std::fmt::Display;

use num_rational::BigRational;
use qc_core::analysis::{mehler_heat_constant, trig_eigenbasis, trig_qe_report, FibreObservable};
use qc_core::dynamics::{
    characteristic_orbit, closed_form_xi0, hat_t, measure_invariance_check, period_spectrum, zhat_flow,
    zhat_flow_with_integral, zhat_trajectory, BlowupState, FlowOptions, ZhatField,
};
use qc_core::geometry::{integrate_popp, invariance_report, lattice, Model, QuasiContactStructure};
use qc_core::normalform::{
    birkhoff_normal_form, is_invariant, leading_block, non_invariant, poisson_bracket, BasePoly, JetSymbol, Qi,
};
use qc_core::spectral::{
    counting_function, heat_constant, heat_extrapolate, heat_trace, oracle_spectrum, polyfit, smoothed_wave_trace,
    weyl_constant_from_heat, weyl_constant_stated, weyl_fit, Provenance, SpectralError, SpectrumResult,
    Window,
};
use serde::Deserialize;
use serde_json::{json, Value};

use super::config::RunConfig;
use super::{CliError, Outcome};
use crate::grid::{assemble_grid_laplacian, heisenberg_grid_spectrum, lowest_eigenpairs, trig_grid_spectrum, Volume};
use crate::hermite::{verify_identities, HermiteGrid};

fn compute_err<E: Display>(module: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::Compute(module, e.to_string())
}

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = compute_err("cli");
    w.write_record(header).map_err(&io)?;
    for r in rows {
        w.write_record(&r).map_err(&io)?;
    }
    w.into_inner().map_err(|e| CliError::Compute("cli", e.to_string()))
}

fn num(v: f64) -> String {
    if v.is_finite() {
        serde_json::Number::from_f64(v).map(|n| n.to_string()).unwrap_or_default()
    } else {
        String::new()
    }
}

fn structure(cfg: &mut RunConfig) -> Result<QuasiContactStructure, CliError> {
    let model = cfg.model()?;
    cfg.model = Some(model.name().to_string());
    if let Model::MappingTorus(p) = model {
        cfg.kappa = Some(p.kappa);
        cfg.eps = Some(p.eps);
    }
    let o = cfg.orientation()?;
    Ok(QuasiContactStructure::with_orientation(model, o))
}

fn provenance(p: Provenance) -> &'static str {
    match p {
        Provenance::Oracle => "oracle",
        Provenance::Grid => "grid",
    }
}

/// Oracle spectrum for the subcommands that need a complete spectrum.
fn oracle(cfg: &mut RunConfig, default_lambda: f64) -> Result<(QuasiContactStructure, SpectrumResult), CliError> {
    let qc = structure(cfg)?;
    if let Model::MappingTorus(_) = qc.model {
        return Err(CliError::Config("no oracle spectrum for mapping_torus; use `spectrum --route grid`".into()));
    }
    let lam = *cfg.lambda_max.get_or_insert(default_lambda);
    let spec = oracle_spectrum(&qc.model, lam).map_err(compute_err("spectral"))?;
    Ok((qc, spec))
}

fn popp_volume(qc: &QuasiContactStructure) -> Result<f64, CliError> {
    popp_volume_on(qc, 8)
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

// ---------------------------------------------------------------- geometry

pub fn geometry(cfg: &mut RunConfig) -> Result<Outcome, CliError> {
    let qc = structure(cfg)?;
    let n = *cfg.grid.get_or_insert(6);
    let tol = *cfg.tol.get_or_insert(1e-10);
    let r = invariance_report(&qc, lattice(n)).map_err(compute_err("geometry"))?;
    let vol = popp_volume_on(&qc, n)?;
    let conditions = json!({
        "da_rz": r.max_da_rz <= tol,
        "lz_ag": r.max_lz_ag <= tol,
        "lz_mu": r.max_lz_mu <= tol,
        "h_rho": r.max_h_rho <= tol,
    });
    let all = [r.max_da_rz, r.max_lz_ag, r.max_lz_mu, r.max_h_rho].iter().all(|&v| v <= tol);
    let result = json!({
        "model": qc.model.name(),
        "volume_preserving": r.volume_preserving,
        "conditions": conditions,
        "all_conditions": all,
        "popp_volume": vol,
        "residuals": {
            "max_da_rz": r.max_da_rz,
            "max_lz_ag": r.max_lz_ag,
            "max_lz_mu": r.max_lz_mu,
            "max_h_rho": r.max_h_rho,
            "max_mu_identity": r.max_mu_identity,
            "max_mu_rate_one": r.max_mu_rate_one,
            "max_ag_identity": r.max_ag_identity,
            "max_reeb_residual": r.max_reeb_residual,
            "max_annihilation": r.max_annihilation,
            "max_unit_z": r.max_unit_z,
        },
    });
    Ok(Outcome { result, completeness: json!({ "sample_points": n.pow(4) }), csv: None })
}

fn popp_volume_on(qc: &QuasiContactStructure, n: usize) -> Result<f64, CliError> {
    integrate_popp(qc, n).map_err(compute_err("geometry"))
}

// ---------------------------------------------------------------- spectrum family

fn spectrum_csv(spec: &SpectrumResult) -> Result<Vec<u8>, CliError> {
    table(
        &["eigenvalue", "multiplicity"],
        spec.eigenvalues.iter().zip(&spec.multiplicities).map(|(v, m)| vec![num(*v), m.to_string()]),
    )
}

pub fn spectrum(cfg: &mut RunConfig) -> Result<Outcome, CliError> {
    let route = cfg.route.get_or_insert_with(|| "oracle".into()).clone();
    if route == "oracle" {
        let (_, spec) = oracle(cfg, 400.0)?;
        return complete_spectrum(cfg, spec);
    }
    let qc = structure(cfg)?;
    match qc.model {
        Model::TrigTorus | Model::HeisenbergCircle => {
            let n = *cfg.grid.get_or_insert(16);
            let lam = *cfg.lambda_max.get_or_insert(400.0);
            let spec = if qc.model == Model::TrigTorus {
                trig_grid_spectrum(&qc, n, lam)
            } else {
                heisenberg_grid_spectrum(n, lam)
            }
            .map_err(compute_err("grid"))?;
            complete_spectrum(cfg, spec)
        }
        Model::MappingTorus(_) => {
            if cfg.lambda_max.is_some() {
                return Err(CliError::Config("the eigensolver route takes `count`, not `lambda_max`".into()));
            }
            let n = *cfg.grid.get_or_insert(8);
            let count = *cfg.count.get_or_insert(20);
            let tol = *cfg.tol.get_or_insert(1e-8);
            let seed = cfg.seed.unwrap_or(0);
            let op = assemble_grid_laplacian(&qc, Volume::Popp, [n; 4]).map_err(compute_err("grid"))?;
            let res = lowest_eigenpairs(&op, count, tol, seed).map_err(compute_err("grid"))?;
            let top = res.values.last().copied().unwrap_or(0.0);
            let spec = SpectrumResult::from_pairs(res.values.iter().map(|&v| (v, 1)).collect(), top, Provenance::Grid);
            let csv = spectrum_csv(&spec)?;
            let result = json!({
                "model": qc.model.name(),
                "route": "grid",
                "lambda_max": top,
                "eigenvalues": spec.eigenvalues,
                "multiplicities": spec.multiplicities,
                "total": spec.total(),
                "residuals": res.residuals,
                "iterations": res.iterations,
                "fits": {},
            });
            let completeness = json!({
                "provenance": "eigensolver",
                "complete_to": Value::Null,
                "certified": false,
                "lowest": count,
            });
            Ok(Outcome { result, completeness, csv: Some(csv) })
        }
    }
}

fn complete_spectrum(cfg: &RunConfig, spec: SpectrumResult) -> Result<Outcome, CliError> {
    let lam = spec.lambda_max;
    let ratio = if lam > 0.0 { spec.total() as f64 / lam.powf(2.5) } else { f64::NAN };
    let csv = spectrum_csv(&spec)?;
    let result = json!({
        "model": cfg.model,
        "route": cfg.route,
        "lambda_max": lam,
        "eigenvalues": spec.eigenvalues,
        "multiplicities": spec.multiplicities,
        "total": spec.total(),
        "fits": { "counting_ratio": ratio },
    });
    let completeness = json!({
        "provenance": provenance(spec.provenance),
        "complete_to": lam,
        "certified": true,
    });
    Ok(Outcome { result, completeness, csv: Some(csv) })
}

pub fn weyl(cfg: &mut RunConfig) -> Result<Outcome, CliError> {
    let (qc, spec) = oracle(cfg, 2000.0)?;
    let lam = spec.lambda_max;
    let lo = *cfg.fit_lo.get_or_insert(lam / 10.0);
    let hi = *cfg.fit_hi.get_or_insert(lam);
    let samples = *cfg.samples.get_or_insert(60);
    if !(lo < hi) || hi > lam {
        return Err(CliError::Config(format!("need fit_lo < fit_hi ≤ lambda_max, got [{lo}, {hi}] with {lam}")));
    }
    let fit = weyl_fit(&spec, lo, hi, samples).map_err(compute_err("spectral"))?;
    let vol = popp_volume(&qc)?;
    let stated = weyl_constant_stated(vol);
    let from_heat = weyl_constant_from_heat(vol);
    let mut rows = Vec::with_capacity(samples);
    for j in 0..samples {
        let l = if samples == 1 { hi } else { lo + (hi - lo) * j as f64 / (samples - 1) as f64 };
        let n = counting_function(&spec, l).map_err(compute_err("spectral"))?;
        rows.push(vec![num(l), n.to_string(), num(n as f64 / l.powf(2.5))]);
    }
    let result = json!({
        "model": qc.model.name(),
        "lambda_max": lam,
        "total": spec.total(),
        "popp_volume": vol,
        "fits": {
            "weyl": {
                "leading": fit.leading,
                "subleading": fit.subleading,
                "cesaro_ratio": fit.cesaro_ratio,
                "fit_lo": lo,
                "fit_hi": hi,
                "samples": samples,
            }
        },
        "constants": { "stated": stated, "heat_implied": from_heat },
        "relative_error": { "stated": rel(fit.leading, stated), "heat_implied": rel(fit.leading, from_heat) },
    });
    let completeness = json!({ "provenance": provenance(spec.provenance), "complete_to": lam, "certified": true });
    Ok(Outcome { result, completeness, csv: Some(table(&["lambda", "count", "ratio"], rows)?) })
}

pub fn heat(cfg: &mut RunConfig) -> Result<Outcome, CliError> {
    let (qc, spec) = oracle(cfg, 12000.0)?;
    let times = cfg.times.get_or_insert_with(|| (1..=8).map(|k| 0.002 * k as f64).collect()).clone();
    let degree = *cfg.degree.get_or_insert(2);
    if degree >= times.len() {
        return Err(CliError::Config(format!("degree {degree} needs more than {} times", times.len())));
    }
    let mut rows = Vec::new();
    let mut max_rel_tail = 0.0f64;
    for &t in &times {
        let v = heat_trace(&spec, t).map_err(compute_err("spectral"))?;
        max_rel_tail = max_rel_tail.max(v.tail_bound / v.value);
        rows.push(vec![num(t), num(v.value), num(v.tail_bound), num(t.powf(2.5) * v.value)]);
    }
    let c0 = heat_extrapolate(&spec, &times, degree).map_err(compute_err("spectral"))?;
    let vol = popp_volume(&qc)?;
    let target = heat_constant(vol);
    let mehler = mehler_heat_constant();
    let exact = 1.0 / (32.0 * PI.sqrt());
    let result = json!({
        "model": qc.model.name(),
        "lambda_max": spec.lambda_max,
        "popp_volume": vol,
        "fits": { "heat": { "constant": c0, "degree": degree, "times": times } },
        "target": target,
        "relative_error": rel(c0, target),
        "mehler": { "quadrature": mehler, "exact": exact, "abs_error": (mehler - exact).abs() },
    });
    let completeness = json!({
        "provenance": provenance(spec.provenance),
        "complete_to": spec.lambda_max,
        "certified": true,
        "max_relative_tail": max_rel_tail,
    });
    Ok(Outcome { result, completeness, csv: Some(table(&["t", "value", "tail_bound", "scaled"], rows)?) })
}

pub fn wave(cfg: &mut RunConfig) -> Result<Outcome, CliError> {
    let (qc, spec) = oracle(cfg, 12000.0)?;
    let sigma = *cfg.sigma.get_or_insert(0.15);
    let centre = *cfg.centre.get_or_insert(0.0);
    let lo = *cfg.lambda_lo.get_or_insert(30.0);
    let hi = *cfg.lambda_hi.get_or_insert(60.0);
    let step = *cfg.lambda_step.get_or_insert(1.0);
    let degree = *cfg.degree.get_or_insert(2);
    if !(lo <= hi) {
        return Err(CliError::Config("need lambda_lo ≤ lambda_hi".into()));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if degree >= count {
        return Err(CliError::Config(format!("degree {degree} needs more than {count} frequencies")));
    }
    let lams: Vec<f64> = (0..count).map(|i| lo + step * i as f64).collect();
    let w = Window::Gaussian { sigma, centre };
    let mut rows = Vec::new();
    let (mut inv, mut ys) = (Vec::new(), Vec::new());
    let mut max_rel_tail = 0.0f64;
    for &l in &lams {
        let v = smoothed_wave_trace(&spec, &w, l).map_err(compute_err("spectral"))?;
        max_rel_tail = max_rel_tail.max(v.tail_bound / v.modulus());
        let scaled = v.re / l.powi(4);
        rows.push(vec![num(l), num(v.re), num(v.im), num(v.tail_bound), num(scaled)]);
        inv.push(1.0 / l);
        ys.push(scaled);
    }
    let c0 = polyfit(&inv, &ys, degree)[0];
    let vol = popp_volume(&qc)?;
    let stated = w.theta(0.0) * vol / (24.0 * PI);
    // singular support: a narrow window at t = 1 against one at t = 1/2
    let probe = Window::Gaussian { sigma: 0.1, centre: 1.0 };
    let reference = Window::Gaussian { sigma: 0.1, centre: 0.5 };
    let mut min_ratio = f64::INFINITY;
    let mut certified = Vec::new();
    for &l in &lams {
        let pair = smoothed_wave_trace(&spec, &probe, l).and_then(|a| Ok((a, smoothed_wave_trace(&spec, &reference, l)?)));
        match pair {
            Ok((a, b)) => {
                min_ratio = min_ratio.min(a.modulus() / b.modulus());
                certified.push(l);
            }
            // the narrow windows need a longer spectrum at high frequency; skip those
            Err(SpectralError::TailDominates { .. }) => {}
            Err(e) => return Err(compute_err("spectral")(e)),
        }
    }
    let result = json!({
        "model": qc.model.name(),
        "lambda_max": spec.lambda_max,
        "popp_volume": vol,
        "window": { "kind": "gaussian", "sigma": sigma, "centre": centre, "theta_at_zero": w.theta(0.0) },
        "fits": { "wave": { "constant": c0, "degree": degree, "lambda_lo": lo, "lambda_hi": hi } },
        "constants": { "stated": stated, "twice_stated": 2.0 * stated },
        "relative_error": { "stated": rel(c0, stated), "twice_stated": rel(c0, 2.0 * stated) },
        "singular_support": { "sigma": 0.1, "probe_centre": 1.0, "reference_centre": 0.5, "min_ratio": if certified.is_empty() { Value::Null } else { json!(min_ratio) }, "lambdas": certified },
    });
    let completeness = json!({
        "provenance": provenance(spec.provenance),
        "complete_to": spec.lambda_max,
        "certified": true,
        "max_relative_tail": max_rel_tail,
    });
    Ok(Outcome { result, completeness, csv: Some(table(&["lambda", "re", "im", "tail_bound", "scaled"], rows)?) })
}

// ---------------------------------------------------------------- hermite

pub fn hermite(cfg: &mut RunConfig) -> Result<Outcome, CliError> {
    let k_max = *cfg.k_max.get_or_insert(20);
    let m = *cfg.x1_nodes.get_or_insert(512);
    let n3 = *cfg.x3_nodes.get_or_insert(32);
    let nb = *cfg.base_nodes.get_or_insert(2);
    let seed = cfg.seed.unwrap_or(0);
    let grid = HermiteGrid::new(k_max, [nb, m, nb, n3]).map_err(|e| CliError::Config(e.to_string()))?;
    let rep = verify_identities(&grid, seed).map_err(compute_err("hermite"))?;
    let checks = rep.checks();
    let list: Vec<Value> = checks
        .iter()
        .map(|(name, v, t)| json!({ "name": name, "value": v, "threshold": t, "pass": v <= t }))
        .collect();
    let result = json!({
        "k_max": rep.k_max,
        "shape": rep.shape,
        "half_width": rep.half_width,
        "checks": list,
        "passed": rep.passed(),
    });
    let csv = table(
        &["name", "value", "threshold", "pass"],
        checks.iter().map(|(n, v, t)| vec![n.to_string(), num(*v), num(*t), (v <= t).to_string()]),
    )?;
    Ok(Outcome { result, completeness: json!({ "levels": k_max + 1 }), csv: Some(csv) })
}

// ---------------------------------------------------------------- bnf

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RhoTerm {
    base: [u32; 5],
    re: String,
    #[serde(default)]
    im: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JetTerm {
    mono: [u32; 3],
    base: [u32; 5],
    re: String,
    #[serde(default)]
    im: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JetSpec {
    #[serde(default)]
    n_max: Option<u32>,
    eps_order: u32,
    rho: Vec<RhoTerm>,
    #[serde(default)]
    terms: Vec<JetTerm>,
}

/// `ξ̂0² + 2ρ̂zz̄` with `ρ̂ = 3/2 + εx2/3`, plus a real perturbation whose normal form
/// needs both homological branches.
pub fn default_jet() -> Value {
    json!({
        "n_max": 8,
        "eps_order": 2,
        "rho": [
            { "base": [0, 0, 0, 0, 0], "re": "3/2" },
            { "base": [1, 0, 1, 0, 0], "re": "1/3" }
        ],
        "terms": [
            { "mono": [0, 2, 1], "base": [1, 0, 0, 0, 0], "re": "1", "im": "1/2" },
            { "mono": [0, 1, 2], "base": [1, 0, 0, 0, 0], "re": "1", "im": "-1/2" },
            { "mono": [0, 3, 0], "base": [1, 0, 0, 1, 0], "re": "0", "im": "2/5" },
            { "mono": [0, 0, 3], "base": [1, 0, 0, 1, 0], "re": "0", "im": "-2/5" },
            { "mono": [1, 1, 1], "base": [1, 1, 1, 0, 0], "re": "2/3" },
            { "mono": [2, 0, 0], "base": [1, 2, 0, 0, 0], "re": "-1/5" },
            { "mono": [0, 2, 2], "base": [1, 0, 0, 0, 1], "re": "5/7" },
            { "mono": [1, 2, 1], "base": [1, 0, 0, 0, 0], "re": "1/4", "im": "1" },
            { "mono": [1, 1, 2], "base": [1, 0, 0, 0, 0], "re": "1/4", "im": "-1" }
        ]
    })
}

fn rational(s: &str) -> Result<BigRational, CliError> {
    s.trim().parse::<BigRational>().map_err(|_| CliError::Config(format!("{s:?} is not a rational number p/q")))
}

fn coefficient(re: &str, im: Option<&str>) -> Result<Qi, CliError> {
    Ok(Qi::new(rational(re)?, rational(im.unwrap_or("0"))?))
}

fn parse_jet(v: &Value, n_max_override: Option<u32>) -> Result<(JetSymbol, u32), CliError> {
    let spec: JetSpec = serde_json::from_value(v.clone()).map_err(|e| CliError::Config(format!("jet: {e}")))?;
    let n_max = n_max_override.or(spec.n_max).unwrap_or(8);
    if n_max < 4 {
        return Err(CliError::Config("n_max must be at least 4".into()));
    }
    let mut rho = BasePoly::zero();
    for t in &spec.rho {
        rho.add_term(t.base, coefficient(&t.re, t.im.as_deref())?);
    }
    let mut sym = leading_block(&rho, n_max, spec.eps_order);
    for t in &spec.terms {
        sym.add_term(t.mono, &BasePoly::monomial(t.base, coefficient(&t.re, t.im.as_deref())?));
    }
    Ok((sym, n_max))
}

fn terms_json(sym: &JetSymbol) -> Vec<Value> {
    let mut out = Vec::new();
    for (m, p) in &sym.terms {
        for (e, c) in &p.terms {
            out.push(json!({ "mono": m, "base": e, "re": c.re.to_string(), "im": c.im.to_string() }));
        }
    }
    out
}

fn terms_rows(part: &str, sym: &JetSymbol, rows: &mut Vec<Vec<String>>) {
    for (m, p) in &sym.terms {
        for (e, c) in &p.terms {
            let mut r = vec![part.to_string()];
            r.extend(m.iter().map(|v| v.to_string()));
            r.extend(e.iter().map(|v| v.to_string()));
            r.push(c.re.to_string());
            r.push(c.im.to_string());
            rows.push(r);
        }
    }
}

pub fn bnf(cfg: &mut RunConfig) -> Result<Outcome, CliError> {
    let jet = cfg.jet.get_or_insert_with(default_jet).clone();
    let (initial, n_max) = parse_jet(&jet, cfg.n_max)?;
    cfg.n_max = Some(n_max);
    let res = birkhoff_normal_form(&initial, n_max).map_err(compute_err("normalform"))?;
    let leftover: usize = (3..n_max).map(|n| non_invariant(&res.normalized, n).terms.len()).sum();
    let mut omega = JetSymbol::new(n_max, initial.eps_order);
    omega.add_term([0, 1, 1], &BasePoly::constant(Qi::one()));
    let commutes = poisson_bracket(&omega, &res.remainder).is_zero();
    let oscillatory = res.generator.terms.keys().any(|m| m[1] != m[2]);
    let integral = res.generator.terms.keys().any(|m| m[1] == m[2]);
    let remainder_invariant = res.remainder.terms.keys().all(is_invariant);
    let result = json!({
        "n_max": n_max,
        "eps_order": initial.eps_order,
        "passes": res.passes,
        "rho_hat": terms_json(&{
            let mut j = JetSymbol::new(n_max, initial.eps_order);
            j.add_term([0, 0, 0], &res.rho_hat);
            j
        }),
        "generator": terms_json(&res.generator),
        "remainder": terms_json(&res.remainder),
        "residual": terms_json(&res.residual),
        "checks": {
            "non_invariant_below_n_max": leftover,
            "remainder_commutes": commutes,
            "remainder_invariant": remainder_invariant,
            "oscillatory_branch": oscillatory,
            "integral_branch": integral,
            "real_input": initial.is_real(),
            "real_generator": res.generator.is_real(),
        },
    });
    let mut rows = Vec::new();
    terms_rows("generator", &res.generator, &mut rows);
    terms_rows("remainder", &res.remainder, &mut rows);
    terms_rows("residual", &res.residual, &mut rows);
    let csv = table(&["part", "a", "b", "c", "eps", "x0", "x2", "x3", "xi2", "re", "im"], rows)?;
    let completeness = json!({ "exact": true, "n_max": n_max, "eps_order": initial.eps_order });
    Ok(Outcome { result, completeness, csv: Some(csv) })
}

// ---------------------------------------------------------------- dynamics

fn default_start(model: &Model) -> [f64; 4] {
    match model {
        Model::MappingTorus(p) => [0.0, p.centre[0], p.centre[1], p.centre[2]],
        _ => [0.0, 0.2, 0.4, 0.6],
    }
}

pub fn flow(cfg: &mut RunConfig) -> Result<Outcome, CliError> {
    let qc = structure(cfg)?;
    let x = *cfg.x.get_or_insert(default_start(&qc.model));
    let xi0 = *cfg.xi0.get_or_insert(0.5);
    let t_end = *cfg.t_end.get_or_insert(1.0);
    let steps = *cfg.steps.get_or_insert(100);
    let samples = *cfg.samples.get_or_insert(16);
    if !(xi0.abs() <= 1.0) {
        return Err(CliError::Config(format!("xi0 must lie in [-1, 1], got {xi0}")));
    }
    let err = compute_err("dynamics");
    let s0 = BlowupState { x, xi0 };
    let times: Vec<f64> = (1..=steps).map(|j| t_end * j as f64 / steps as f64).collect();
    let traj = zhat_trajectory(&qc, &s0, &times).map_err(&err)?;
    let (end, int_a) =
        zhat_flow_with_integral(&qc, &s0, t_end, |s| qc.eval(s.x).map(|(_, a)| a), &FlowOptions::default())
            .map_err(&err)?;
    let closed = closed_form_xi0(xi0, int_a);
    let half = zhat_flow(&qc, &zhat_flow(&qc, &s0, 0.5 * t_end).map_err(&err)?, 0.5 * t_end).map_err(&err)?;
    let semigroup = (0..4).map(|k| (half.x[k] - end.x[k]).abs()).fold((half.xi0 - end.xi0).abs(), f64::max);
    let drift = measure_invariance_check(&qc, 1.0, samples, t_end).map_err(&err)?;
    let control = measure_invariance_check(&qc, 2.0, samples, t_end).map_err(&err)?;
    let mut rows = vec![vec![num(0.0), num(x[0]), num(x[1]), num(x[2]), num(x[3]), num(xi0)]];
    for (t, s) in times.iter().zip(&traj) {
        rows.push(vec![num(*t), num(s.x[0]), num(s.x[1]), num(s.x[2]), num(s.x[3]), num(s.xi0)]);
    }
    let result = json!({
        "model": qc.model.name(),
        "start": { "x": x, "xi0": xi0 },
        "end": { "x": end.x, "xi0": end.xi0 },
        "t_end": t_end,
        "a_integral": int_a,
        "closed_form_xi0": closed,
        "closed_form_error": (end.xi0 - closed).abs(),
        "semigroup_error": semigroup,
        "measure": {
            "max_divergence": drift.max_divergence,
            "max_drift": drift.max_drift,
            "control_max_divergence": control.max_divergence,
            "control_max_drift": control.max_drift,
            "samples": samples,
        },
    });
    let completeness = json!({ "steps": steps, "trajectory_rows": rows.len() });
    Ok(Outcome { result, completeness, csv: Some(table(&["t", "x0", "x1", "x2", "x3", "xi0"], rows)?) })
}

/// Smallest `n ≥ 1` with `nT̂ ≥ (n+1)T` and `nT ≤ t_max`.
fn merge_index(t: f64, th: f64, t_max: f64) -> Option<u64> {
    let mut n = 1u64;
    while n as f64 * t <= t_max {
        if n as f64 * th >= (n + 1) as f64 * t {
            return Some(n);
        }
        n += 1;
    }
    None
}

pub fn periods(cfg: &mut RunConfig) -> Result<Outcome, CliError> {
    let t_max = *cfg.t_max.get_or_insert(10.0);
    let (orbits, source): (Vec<(f64, f64)>, &str) = match &cfg.orbits {
        Some(list) => (list.iter().map(|&(t, th)| (t, th.unwrap_or(f64::INFINITY))).collect(), "config"),
        None => {
            let qc = structure(cfg)?;
            let x = *cfg.x.get_or_insert(default_start(&qc.model));
            let orbit = characteristic_orbit(&qc, x, 64).map_err(compute_err("dynamics"))?;
            (vec![(orbit.period, hat_t(&orbit))], "model")
        }
    };
    for &(t, th) in &orbits {
        if !(t > 0.0 && t.is_finite()) || !(th >= t) {
            return Err(CliError::Config(format!("orbit ({t}, {th}) violates 0 < T ≤ T̂")));
        }
    }
    let bands = period_spectrum(&orbits, t_max).map_err(compute_err("dynamics"))?;
    let orbit_json: Vec<Value> = orbits
        .iter()
        .map(|&(t, th)| {
            json!({
                "period": t,
                "hat_period": if th.is_finite() { json!(th) } else { Value::Null },
                "merge_index": merge_index(t, th, t_max),
            })
        })
        .collect();
    let result = json!({
        "source": source,
        "t_max": t_max,
        "orbits": orbit_json,
        "intervals": bands.intervals.iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>(),
    });
    let csv = table(&["lo", "hi"], bands.intervals.iter().map(|&(a, b)| vec![num(a), num(b)]))?;
    Ok(Outcome { result, completeness: json!({ "clipped_to": t_max }), csv: Some(csv) })
}

// ---------------------------------------------------------------- qe

type Observable = (fn([f64; 4]) -> f64, usize, usize);

fn observable(name: &str) -> Option<Observable> {
    fn constant(_: [f64; 4]) -> f64 {
        1.0
    }
    fn sin_x3(x: [f64; 4]) -> f64 {
        (2.0 * PI * x[3]).sin()
    }
    fn cos_x3(x: [f64; 4]) -> f64 {
        (4.0 * PI * x[3]).cos() + 0.2 * (8.0 * PI * x[3]).sin()
    }
    fn bump(x: [f64; 4]) -> f64 {
        (3.0 * ((2.0 * PI * (x[3] - 0.3)).cos() - 1.0)).exp()
    }
    fn sin_x0(x: [f64; 4]) -> f64 {
        (2.0 * PI * x[0]).sin()
    }
    match name {
        "constant" => Some((constant, 1, 16)),
        "sin_2pi_x3" => Some((sin_x3, 2, 64)),
        "cos_4pi_x3" => Some((cos_x3, 2, 64)),
        "bump_x3" => Some((bump, 1, 128)),
        "sin_2pi_x0" => Some((sin_x0, 8, 16)),
        _ => None,
    }
}

pub const OBSERVABLES: [&str; 5] = ["constant", "sin_2pi_x3", "cos_4pi_x3", "bump_x3", "sin_2pi_x0"];

pub fn qe(cfg: &mut RunConfig) -> Result<Outcome, CliError> {
    let qc = structure(cfg)?;
    if qc.model != Model::TrigTorus {
        return Err(CliError::Config("qe is available for trig_torus only".into()));
    }
    let lam = *cfg.lambda_max.get_or_insert(600.0);
    let name = cfg.observable.get_or_insert_with(|| "sin_2pi_x3".into()).clone();
    let windows = *cfg.windows.get_or_insert(8);
    let (f, n_base, n3) = observable(&name)
        .ok_or_else(|| CliError::Config(format!("unknown observable {name:?}; known: {}", OBSERVABLES.join(", "))))?;
    let basis = trig_eigenbasis(lam);
    let ev = basis.eigenvalues();
    if ev.len() <= 30 {
        return Err(CliError::Config(format!("lambda_max {lam} leaves only {} eigenfunctions", ev.len())));
    }
    let lo = ev[30];
    let grid: Vec<f64> = (1..=windows).map(|k| lo * (lam / lo).powf(k as f64 / windows as f64)).collect();
    let obs = FibreObservable::from_fn(f, n_base, n3);
    let rep = trig_qe_report(&basis, &obs, &grid).map_err(compute_err("analysis"))?;
    let result = json!({
        "model": "trig_torus",
        "observable": name,
        "lambda_grid": rep.lambda_grid,
        "counts": rep.counts,
        "E_running": rep.e_running,
        "V_running": rep.v_running,
        "target": rep.target,
    });
    let rows = (0..rep.lambda_grid.len()).map(|i| {
        vec![num(rep.lambda_grid[i]), rep.counts[i].to_string(), num(rep.e_running[i]), num(rep.v_running[i])]
    });
    let csv = table(&["lambda", "count", "E_running", "V_running"], rows)?;
    let completeness = json!({ "complete_to": lam, "eigenfunctions": ev.len(), "certified": true });
    Ok(Outcome { result, completeness, csv: Some(csv) })
}

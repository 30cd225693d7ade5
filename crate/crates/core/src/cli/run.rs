//! Experiment orchestration, report emission and replay.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{Experiment, ExperimentConfig, WaveParams};
use crate::envelope::{self, EnvelopeParams};
use crate::error::{NflError, Result};
use crate::evolution::{self, EvolveOptions, Trajectory};
use crate::fronts::{self, FrontTrace};
use crate::ignition_bounds as ib;
use crate::io;
use crate::kernel::{self, Kernel};
use crate::nonlinearity::{self, Family, Lattice, Nonlinearity};
use crate::regularity as reg;
use crate::waves::{self, WaveOptions};

pub const CONFIG_FILE: &str = "config.json";
pub const REPORT_FILE: &str = "report.json";

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub experiment: Experiment,
    pub config_hash: String,
    pub pass: bool,
    /// Failed assertions in evaluation order.
    pub failures: Vec<String>,
    pub tolerances: BTreeMap<String, f64>,
    pub results: Value,
    pub artifacts: Vec<String>,
}

#[derive(Default)]
struct Collector {
    failures: Vec<String>,
    tolerances: BTreeMap<String, f64>,
    results: serde_json::Map<String, Value>,
    artifacts: Vec<(String, String)>,
}

impl Collector {
    fn check(&mut self, name: &str, ok: bool) {
        if !ok {
            self.failures.push(name.to_string());
        }
    }

    fn tol(&mut self, name: &str, v: f64) {
        self.tolerances.insert(name.to_string(), v);
    }

    fn put<T: Serialize>(&mut self, key: &str, v: &T) -> Result<()> {
        self.results.insert(key.to_string(), serde_json::to_value(v)?);
        Ok(())
    }

    fn file(&mut self, name: &str, text: String) {
        self.artifacts.push((name.to_string(), text));
    }
}

/// Runs the tagged experiment and writes `config.json`, `report.json` and CSV artifacts into `out`.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Report> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let mut col = Collector::default();
    match cfg.experiment {
        Experiment::Validate => validate(cfg, &mut col)?,
        Experiment::Simulate => simulate(cfg, &mut col)?,
        Experiment::Wave => wave(cfg, &mut col)?,
        Experiment::Fronts => fronts_exp(cfg, &mut col)?,
        Experiment::Regularity => regularity(cfg, &mut col)?,
        Experiment::Envelope => envelope_exp(cfg, &mut col)?,
        Experiment::Squeeze => squeeze(cfg, &mut col)?,
    }
    let persisted = cfg.persisted();
    io::write_text(out, CONFIG_FILE, &(persisted.to_json() + "\n"))?;
    let mut names = Vec::new();
    for (name, text) in &col.artifacts {
        io::write_text(out, name, text)?;
        names.push(name.clone());
    }
    let report = Report {
        schema_version: super::config::SCHEMA_VERSION,
        experiment: cfg.experiment,
        config_hash: cfg.hash(),
        pass: col.failures.is_empty(),
        failures: col.failures,
        tolerances: col.tolerances,
        results: Value::Object(col.results),
        artifacts: names,
    };
    io::write_json(out, REPORT_FILE, &report)?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct ReplayReport {
    pub config_hash: String,
    pub files_compared: Vec<String>,
    pub mismatched: Vec<String>,
    pub identical: bool,
}

/// Re-runs the persisted config into a scratch directory and compares every artifact byte for byte.
pub fn replay(dir: &Path) -> Result<ReplayReport> {
    let cfg_path = dir.join(CONFIG_FILE);
    let rep_path = dir.join(REPORT_FILE);
    let missing: Vec<&str> = [CONFIG_FILE, REPORT_FILE].into_iter().filter(|f| !dir.join(f).is_file()).collect();
    if !missing.is_empty() {
        return Err(NflError::MissingArtifacts(format!("{} in {}", missing.join(", "), dir.display())));
    }
    let cfg = ExperimentConfig::from_json(&fs::read_to_string(&cfg_path)?)?;
    let stored: Value = serde_json::from_str(&fs::read_to_string(&rep_path)?)?;
    let recorded = stored.get("config_hash").and_then(Value::as_str).unwrap_or_default().to_string();
    let hash = cfg.hash();
    if hash != recorded {
        return Err(NflError::ConfigDrift { stored: hash, recorded });
    }
    let mut files: Vec<String> = vec![REPORT_FILE.to_string()];
    if let Some(list) = stored.get("artifacts").and_then(Value::as_array) {
        files.extend(list.iter().filter_map(Value::as_str).map(str::to_string));
    }
    let absent: Vec<&String> = files.iter().filter(|f| !dir.join(f.as_str()).is_file()).collect();
    if !absent.is_empty() {
        let names: Vec<&str> = absent.iter().map(|s| s.as_str()).collect();
        return Err(NflError::MissingArtifacts(names.join(", ")));
    }
    let scratch = tempfile::tempdir()?;
    run(&cfg, scratch.path())?;
    let mut mismatched = Vec::new();
    for f in &files {
        if fs::read(dir.join(f))? != fs::read(scratch.path().join(f))? {
            mismatched.push(f.clone());
        }
    }
    Ok(ReplayReport { config_hash: hash, identical: mismatched.is_empty(), files_compared: files, mismatched })
}

fn run_trajectory(cfg: &ExperimentConfig, nl: &Nonlinearity, k: &Kernel) -> Result<Trajectory> {
    let g = cfg.grid_spec()?;
    let integ = cfg.integrator()?;
    let init = evolution::make_initial(cfg.initial()?, g.grid())?;
    evolution::evolve(
        &init,
        integ.t_end,
        integ.dt,
        nl,
        k,
        EvolveOptions { recenter: integ.recenter, save_every: integ.save_every },
    )
}

fn validate(cfg: &ExperimentConfig, col: &mut Collector) -> Result<()> {
    let tol = cfg.validate.as_ref().map_or(1e-8, |v| v.tol);
    let k = cfg.kernel()?;
    let nl = cfg.nonlinearity()?;
    let lattice = Lattice::default();
    col.tol("h1", tol);
    let h1 = kernel::validate_h1(&k, tol);
    col.check("h1", h1.pass);
    col.put("h1", &h1)?;
    let h2 = nonlinearity::validate_h2(&nl, &lattice);
    col.check("h2", h2.pass);
    col.put("h2", &h2)?;
    if let Nonlinearity::Heterogeneous(h) = nl {
        let max_fu = nonlinearity::max_fu_below(&nl, h.theta0, &lattice);
        let ok = nonlinearity::validate_h3(&nl, h.theta0, h.kappa0, &lattice);
        col.check("h3", ok);
        col.put("h3", &json!({ "theta0": h.theta0, "kappa0": h.kappa0, "max_fu_below": max_fu, "limit": 1.0 - h.kappa0, "pass": ok }))?;
    }
    Ok(())
}

const TRACE_LEVELS: [f64; 3] = [0.1, 0.5, 0.9];

fn simulate(cfg: &ExperimentConfig, col: &mut Collector) -> Result<()> {
    let k = cfg.kernel()?;
    let nl = cfg.nonlinearity()?;
    let traj = run_trajectory(cfg, &nl, &k)?;
    let trace = FrontTrace::from_trajectory(&traj, &TRACE_LEVELS, 0.5);
    let last = traj.last();
    let (lo, hi) = last.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    col.tol("overshoot", nonlinearity::OVERSHOOT_TOL);
    col.check("state_in_range", lo >= -nonlinearity::OVERSHOOT_TOL && hi <= 1.0 + nonlinearity::OVERSHOOT_TOL);
    col.put(
        "simulation",
        &json!({ "snapshots": traj.snapshots.len(), "t_end": last.t, "min_u": lo, "max_u": hi, "shifts": traj.shifts }),
    )?;
    col.file("trajectory.csv", io::trajectory_csv(&traj, 1));
    col.file("fronts.csv", trace.to_csv());
    Ok(())
}

fn wave(cfg: &ExperimentConfig, col: &mut Collector) -> Result<()> {
    let k = cfg.kernel()?;
    let h = cfg.homogeneous()?;
    let p = cfg.wave.clone().unwrap_or(WaveParams { dx: None, half_width: None, kpp_r: None, kpp_t_end: None });
    let mut opts = WaveOptions::for_kernel(&k);
    if let Some(dx) = p.dx {
        opts.dx = dx;
    }
    if let Some(w) = p.half_width {
        opts.half_width = w;
    }
    let profile = match h.family {
        Family::Kpp { f0 } if !h.reflected => {
            let r = p.kpp_r.expect("validated");
            let c_r = waves::kpp_speed(&k, f0, r)?;
            let (r_star, c_star) = waves::kpp_min_speed(&k, f0)?;
            col.put("kpp", &json!({ "r": r, "c_r": c_r, "r_star": r_star, "c_star": c_star }))?;
            waves::solve_wave_kpp(&h, &k, r, p.kpp_t_end.unwrap_or(60.0), opts.dx)?
        }
        _ => waves::solve_wave(&h, &k, &opts)?,
    };
    col.tol("residual", waves::RESIDUAL_TOL);
    col.check("residual", profile.residual <= waves::RESIDUAL_TOL);
    col.put(
        "wave",
        &json!({ "c": profile.c, "residual": profile.residual, "level": profile.level, "decay_rate": profile.decay_rate, "family": profile.family, "options": opts }),
    )?;
    col.file("wave.csv", profile.to_csv());
    Ok(())
}

fn trace_and_fit(cfg: &ExperimentConfig, traj: &Trajectory) -> Result<(FrontTrace, fronts::PropagationFit)> {
    let fp = cfg.fronts.as_ref().expect("validated");
    let trace = FrontTrace::from_trajectory(traj, &fp.levels, fp.reference_level);
    if let Some(i) = trace.reference.iter().position(|v| !v.is_finite()) {
        return Err(NflError::ExperimentFailed(format!("reference level not bracketed at t={}", trace.times[i])));
    }
    let fit = fronts::fit_propagation_bounds(&trace.times, &trace.reference)?;
    Ok((trace, fit))
}

fn fronts_exp(cfg: &ExperimentConfig, col: &mut Collector) -> Result<()> {
    let k = cfg.kernel()?;
    let nl = cfg.nonlinearity()?;
    let traj = run_trajectory(cfg, &nl, &k)?;
    let (trace, fit) = trace_and_fit(cfg, &traj)?;
    col.check("c1_positive", fit.c1 > 0.0);
    col.check("propagation_bounds", fit.certified);
    col.put("fit", &fit)?;
    let ordering = trace.ordering_violations(1e-9);
    col.tol("ordering", 1e-9);
    col.check("level_ordering", ordering == 0);
    col.put("ordering_violations", &ordering)?;
    if let Some((l1, l2)) = cfg.fronts.as_ref().and_then(|f| f.width_levels) {
        let w = fronts::check_bounded_width(&trace, l1, l2)?;
        col.check("width_finite", w.sup_width.is_finite());
        col.put("width", &w)?;
    }
    col.file("fronts.csv", trace.to_csv());
    Ok(())
}

fn regularity(cfg: &ExperimentConfig, col: &mut Collector) -> Result<()> {
    let k = cfg.kernel()?;
    let nl = cfg.nonlinearity()?;
    let Nonlinearity::Heterogeneous(h) = nl else { unreachable!("validated") };
    let rp = cfg.regularity.clone().expect("validated");
    let traj = run_trajectory(cfg, &nl, &k)?;
    let trace = FrontTrace::from_trajectory(&traj, &[h.theta0, h.theta1], 0.5);
    let fit = fronts::fit_propagation_bounds(&trace.times, &trace.reference)?;
    col.put("fit", &fit)?;
    let s0 = &traj.snapshots[0];
    let dx = s0.dx;
    let (x_first, x_last) = (trace.reference[0], *trace.reference.last().expect("nonempty"));
    let probes: Vec<f64> =
        s0.xs().into_iter().filter(|&x| x > x_first + rp.probe_margin && x < x_last - rp.probe_margin).collect();
    let ctx = reg::compute_regions(&trace, h.theta0, h.theta1, 4.0 * dx, &probes)?;
    let bound_t = ctx.growth_time_bound(&fit);
    col.check("t_region_within_growth_bound", ctx.t_region <= bound_t);
    col.put(
        "regions",
        &json!({ "delta0": ctx.delta0, "l0": ctx.l0, "l1": ctx.l1, "t_region": ctx.t_region, "growth_bound": bound_t, "probes": ctx.probes.len() }),
    )?;
    let lattice = Lattice::default();
    let sfu = reg::sup_fu(&nl, &lattice);
    let sfx = reg::sup_fx(&nl, &lattice);
    let mut c_a: f64 = 0.0;
    let mut scans = Vec::new();
    for &m in &rp.eta_cells {
        let df = reg::difference_fields(&traj, m as f64 * dx, &nl, &k)?;
        let rep = reg::check_coefficient_bounds(&df, &ctx, h.kappa0, sfu);
        col.check(&format!("coefficient_bounds_eta_{m}"), rep.pass);
        c_a = c_a.max(df.c_a());
        scans.push(json!({ "eta": df.eta, "identity_residual": df.identity_residual, "sup_v": df.sup_v(), "c3": df.c3, "c4": df.c4, "report": rep }));
    }
    col.put("coefficients", &scans)?;
    let horizon = ctx.t_region + 10.0 / h.kappa0;
    let ux = reg::UxIntegrator::new(&traj, &nl, &k)?;
    let s = traj.last();
    let integ = ux.field(s.t, horizon)?;
    let fd = reg::centered_difference(s);
    let xs = s.xs();
    let cmp = reg::compare_ux(&xs, &integ, &fd, 0.01, rp.edge_cells);
    col.tol("ux_rel", reg::UX_REL_TOL);
    col.check("ux_agreement", cmp.pass);
    let bound = reg::ux_sup_bound(k.derivative_l1(), sfx, c_a, ctx.t_region, h.kappa0);
    let sup_ux = integ.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    col.check("ux_bound", sup_ux <= bound);
    col.put("ux", &json!({ "comparison": cmp, "horizon": horizon, "sup_ux": sup_ux, "bound": bound, "c_a": c_a }))?;
    col.file("ux.csv", reg::ux_csv(&xs, &integ, &fd));
    Ok(())
}

fn envelope_exp(cfg: &ExperimentConfig, col: &mut Collector) -> Result<()> {
    let k = cfg.kernel()?;
    let nl = cfg.nonlinearity()?;
    let ep = cfg.envelope.clone().expect("validated");
    let traj = run_trajectory(cfg, &nl, &k)?;
    let (trace, fit) = trace_and_fit(cfg, &traj)?;
    col.check("propagation_bounds", fit.certified);
    col.put("fit", &fit)?;
    let params = EnvelopeParams::new(&fit, fit.c2 * fit.t2 + ep.c0_extra, ep.delta)?;
    let env = envelope::smooth_modification(&trace.times, &trace.reference, &params)?;
    let rep = envelope::verify_envelope(&env, &trace.times, &trace.reference);
    col.tol("knot_mismatch", 1e-10);
    col.check("envelope_c1", rep.c1_pass);
    col.check("envelope_monotone", rep.monotone_pass);
    col.check("envelope_slope", rep.slope_pass);
    col.check("envelope_deviation", rep.deviation_pass);
    col.check("envelope_gaps", rep.gaps_pass);
    col.put("envelope", &rep)?;
    let sp = envelope::start_point_insensitivity(&trace.times, &trace.reference, &params, ep.start_gaps)?;
    col.check("start_point", sp.pass);
    col.put("start_point", &sp)?;
    let step1 = envelope::continuous_modification(&trace.times, &trace.reference, &params, ep.horizon)?;
    col.check("continuous_modification", step1.pass);
    col.put(
        "continuous_modification",
        &json!({ "offset": step1.offset, "bound": step1.bound, "sup_forward": step1.sup_forward, "sup_backward": step1.sup_backward, "pass": step1.pass }),
    )?;
    col.file("envelope.json", serde_json::to_string_pretty(&env)? + "\n");
    let smooth: Vec<f64> = trace.times.iter().map(|&t| env.value(t)).collect();
    col.file("envelope.csv", io::series_csv("t,x,x_smooth", &[&trace.times, &trace.reference, &smooth]));
    Ok(())
}

fn squeeze(cfg: &ExperimentConfig, col: &mut Collector) -> Result<()> {
    let k = cfg.kernel()?;
    let f = cfg.homogeneous()?;
    let sp = cfg.squeeze.clone().expect("validated");
    let wave = waves::solve_wave(&f, &k, &WaveOptions::for_kernel(&k))?;
    col.tol("wave_residual", waves::RESIDUAL_TOL);
    col.check("wave_residual", wave.residual <= waves::RESIDUAL_TOL);
    let params = ib::select_parameters(&f, &wave, &k, sp.alpha0)?;
    col.check("selection_conditions", params.all_conditions_pass());
    col.put("params", &params)?;
    let eps = sp.eps.unwrap_or(params.eps_cap);
    let cutoff = ib::build_cutoff(params.alpha, params.l1)?;
    let g = cfg.grid_spec()?;
    let u0 = evolution::make_initial(cfg.initial()?, g.grid())?;
    let (xi_minus, xi_plus) = ib::sandwich_shifts(&wave, &cutoff, eps, &u0, sp.alpha0)?;
    let sq = ib::build_squeeze(&params, &wave, eps, xi_minus, xi_plus)?;
    let lat = ib::ResidualLattice::new(&sq, &k, params.l2)?;
    let horizon = sp.horizon.unwrap_or(5.0 / params.omega);
    col.tol("residual", ib::RESIDUAL_TOL);
    col.tol("squeeze", ib::SQUEEZE_TOL);
    col.tol("check_dt", ib::CHECK_DT);
    let sub = ib::verify_subsolution(&sq, &lat, &f, horizon, ib::CHECK_DT);
    let sup = ib::verify_supersolution(&sq, &lat, &f, horizon, ib::CHECK_DT);
    col.check("subsolution", sub.pass);
    col.check("supersolution", sup.pass);
    let sharp = ib::verify_subsolution(&sq.with_omega(2.0 * params.beta_tilde), &lat, &f, horizon, ib::CHECK_DT);
    col.check("omega_condition_active", sharp.extreme > 0.0);
    let nl: Nonlinearity = f.into();
    let traj = run_trajectory(cfg, &nl, &k)?;
    let rep = ib::verify_squeeze(&traj, &sq)?;
    col.check("sandwiched", rep.pass);
    col.put(
        "squeeze",
        &json!({ "eps": eps, "xi_minus": xi_minus, "xi_plus": xi_plus, "horizon": horizon, "subsolution": sub, "supersolution": sup, "omega_violation": sharp, "sandwich": rep }),
    )?;
    col.file("residual.csv", ib::residual_csv(&sq, &lat, &f, horizon, horizon / 40.0, -1.0));
    col.file("wave.csv", wave.to_csv());
    Ok(())
}

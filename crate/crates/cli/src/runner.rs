//! Scenario pipeline: trajectories, frames, residuals, stream-tube map,
//! indicators and validation suites.

use std::fs;
use std::path::Path;
use std::time::Instant;

use efl_core::diagnostics::MonitorConfig;
use efl_core::lagrange::Region;
use efl_core::{
    arc_length_reparam, axis_length_reparam, blowup_indicator, build_streamtube_map, clustered_nodes, deformation_2d,
    disturbance_rates, divergence, frame_explicit, frame_residuals, inflow_propagation, integrate_trajectory,
    material_speed_derivative, momentum_flux_ratio, near_axis_breakdown_indicator, pressure_compatibility,
    pulsatile_monitor, reconstruct_velocity, unilateral_check, vtheta_gronwall, AxisLengthCurve, Error, Fixture, FlowField,
    PathPoint, ResidualRecord, Scales, Seed, TubeMap,
};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{Mode, ScenarioConfig};
use crate::output::{Cell, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

/// Trajectory samples per seed.
const TRAJECTORY_SAMPLES: usize = 41;
/// Frame and residual stations per seed.
const FRAME_SAMPLES: usize = 20;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(m) | Error::InvalidGrid(m) => Failure::Config(m),
            other => Failure::Numerical(other),
        }
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn info(&self) -> ErrorInfo {
        match self {
            Failure::Config(m) => ErrorInfo { kind: "ConfigError".into(), message: m.clone() },
            Failure::Numerical(e) => ErrorInfo { kind: e.kind().into(), message: e.to_string() },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedSummary {
    pub index: usize,
    pub r0: f64,
    pub theta0: f64,
    pub z0: f64,
    pub status: String,
    pub t_end: f64,
    pub frames: usize,
    pub degenerate_frames: usize,
    pub max_abs_res: f64,
    pub max_abs_res_corrected: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Maxima {
    pub abs_res: f64,
    pub abs_res_scaled: f64,
    pub abs_res_corrected_scaled: f64,
    pub l0: f64,
    pub lx: f64,
    pub lt: f64,
    pub min_l0: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub pass: bool,
    pub worst: f64,
    pub limit: f64,
    pub checked: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: Option<String>,
    pub mode: Mode,
    pub field: Option<String>,
    pub status: &'static str,
    pub exit_code: i32,
    pub error: Option<ErrorInfo>,
    pub scales: Option<Scales>,
    pub seeds: Vec<SeedSummary>,
    pub maxima: Maxima,
    pub validation: Vec<SuiteResult>,
    pub meta: RunMeta,
}

pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Per-seed checks collected for validation mode.
#[derive(Debug, Default)]
struct SeedChecks {
    speed_derivative: Vec<f64>,
    swirl_transport: Vec<f64>,
    determinant: Vec<f64>,
}

struct SeedOutput {
    summary: SeedSummary,
    trajectory: Vec<Vec<Cell>>,
    frenet: Vec<Vec<Cell>>,
    records: Vec<(usize, ResidualRecord)>,
    checks: SeedChecks,
}

struct Context<'a> {
    cfg: &'a ScenarioConfig,
    field: &'a Fixture,
    t_span: (f64, f64),
    ode_tol: f64,
}

fn process_seed(ctx: &Context, index: usize, seed: Seed) -> Result<SeedOutput, Failure> {
    let field = ctx.field;
    let thresholds = ctx.cfg.thresholds();
    let traj = integrate_trajectory(field, seed, ctx.t_span, ctx.ode_tol)?;
    let (t0, t_end) = (ctx.t_span.0, traj.t_end());
    let status = traj.exit.as_ref().map(|e| e.kind().to_string()).unwrap_or_else(|| "complete".into());

    let mut trajectory = Vec::with_capacity(TRAJECTORY_SAMPLES);
    for k in 0..TRAJECTORY_SAMPLES {
        let t = t0 + (t_end - t0) * k as f64 / (TRAJECTORY_SAMPLES - 1) as f64;
        if let Some(p) = traj.at(t) {
            trajectory.push(vec![index.into(), p.t.into(), p.r.into(), p.theta.into(), p.z.into()]);
        }
    }

    let mut out = SeedOutput {
        summary: SeedSummary {
            index,
            r0: seed.r0,
            theta0: seed.theta0,
            z0: seed.z0,
            status,
            t_end,
            frames: 0,
            degenerate_frames: 0,
            max_abs_res: 0.0,
            max_abs_res_corrected: 0.0,
        },
        trajectory,
        frenet: Vec::new(),
        records: Vec::new(),
        checks: SeedChecks::default(),
    };
    if !(t_end - t0 > 1e-9 * (ctx.t_span.1 - t0)) {
        return Ok(out);
    }

    let curve = axis_length_reparam(&traj, field, ctx.ode_tol)?;
    let arc = arc_length_reparam(&curve)?;
    let (za, zb) = curve.z_range();
    let length = field.length_scale();
    for k in 0..FRAME_SAMPLES {
        let z = za + (zb - za) * (k as f64 + 0.5) / FRAME_SAMPLES as f64;
        let y = curve.state_at(z)?;
        let p = PathPoint { t: y[2], r: y[0], theta: y[1], z };
        let frame = frame_explicit(&curve, z)?;
        let s = arc.s_at(z)?;
        let rec = frame_residuals(field, s, &p, &frame, thresholds.step_for(frame.kappa, length))?;
        let mut row: Vec<Cell> = vec![
            index.into(),
            s.into(),
            z.into(),
            p.t.into(),
            p.r.into(),
            p.theta.into(),
            frame.kappa.into(),
            frame.torsion.into(),
            frame.ds_kappa.into(),
            frame.sigma.into(),
            frame.degenerate.into(),
        ];
        for x in [frame.tau, frame.n, frame.b] {
            row.extend([Cell::F(x.x), Cell::F(x.y), Cell::F(x.z)]);
        }
        out.frenet.push(row);
        out.summary.frames += 1;
        out.summary.degenerate_frames += frame.degenerate as usize;
        out.summary.max_abs_res = out.summary.max_abs_res.max(rec.max_abs());
        out.summary.max_abs_res_corrected = out.summary.max_abs_res_corrected.max(rec.max_abs_corrected());
        out.records.push((index, rec));
    }

    if ctx.cfg.mode == Mode::Validate {
        out.checks = seed_checks(ctx, seed, &traj, t_end)?;
    }
    Ok(out)
}

fn seed_checks(ctx: &Context, seed: Seed, traj: &efl_core::Trajectory, t_end: f64) -> Result<SeedChecks, Failure> {
    let field = ctx.field;
    let t0 = ctx.t_span.0;
    let mut checks = SeedChecks::default();
    let h = 1e-3 * (t_end - t0);
    for frac in [0.25, 0.5, 0.75] {
        let t = t0 + frac * (t_end - t0);
        let p = traj.at(t).ok_or(Error::LeftDomain { t })?;
        let u = field.eval(p.r, p.z, t)?;
        let tau = u.to_cartesian(p.theta) / u.norm();
        let exact = material_speed_derivative(field, &p, Some(tau), ctx.cfg.thresholds.speed_floor)?;
        let speed = |s: f64| -> efl_core::Result<f64> {
            let q = traj.at(s).ok_or(Error::LeftDomain { t: s })?;
            Ok(field.eval(q.r, q.z, s)?.norm())
        };
        let fd = efl_core::field::richardson_d1(speed, t, h)?;
        checks.speed_derivative.push((fd - exact).abs() / exact.abs().max(1.0));
    }
    if t0 == 0.0 {
        let end = traj.at(t_end).ok_or(Error::LeftDomain { t: t_end })?;
        let direct = field.eval(end.r, end.z, t_end)?.v_theta;
        let carried = vtheta_gronwall(field, seed.r0, seed.z0, t_end, ctx.ode_tol)?;
        checks.swirl_transport.push((direct - carried).abs() / direct.abs().max(1.0));
        let d = deformation_2d(field, seed.r0, seed.z0, t_end, ctx.ode_tol)?;
        checks.determinant.push((d.det - d.det_law).abs() / d.det_law.abs().max(1.0));
    }
    Ok(checks)
}

/// Everything a run produces before it is written out.
struct Artifacts {
    tables: Vec<Table>,
    indicators: Vec<Value>,
}

fn default_t_nodes(field: &Fixture, t_span: (f64, f64)) -> Vec<f64> {
    if field.is_steady() {
        vec![t_span.0]
    } else {
        vec![t_span.0, 0.5 * (t_span.0 + t_span.1), t_span.1]
    }
}

fn suite(name: &str, values: impl IntoIterator<Item = f64>, limit: f64) -> SuiteResult {
    let (mut worst, mut checked) = (0.0f64, 0usize);
    for v in values {
        worst = if v.is_nan() { f64::NAN } else { worst.max(v) };
        checked += 1;
    }
    SuiteResult { suite: name.into(), pass: worst <= limit, worst, limit, checked }
}

fn pipeline(cfg: &ScenarioConfig, base_dir: &Path, report: &mut RunReport) -> Result<Artifacts, Failure> {
    cfg.validate().map_err(Failure::Config)?;
    let field = cfg.field.build(base_dir)?;
    report.field = Some(field.name().to_string());
    let t_span = (cfg.spans.t_span[0], cfg.spans.t_span[1]);
    let z_span = (cfg.spans.z_span[0], cfg.spans.z_span[1]);
    let r_max = ScenarioConfig::default_radius(&field);
    let seeds = cfg.seeds(&field);
    let seed_r = seeds.iter().map(|s| s.r0).fold(r_max, f64::max);
    let region = Region { r: (0.0, seed_r), z: z_span };
    for k in 0..5 {
        let t = t_span.0 + (t_span.1 - t_span.0) * k as f64 / 4.0;
        let u = unilateral_check(&field, region, t, (9, 33))?;
        if !u.ok {
            let (r, z) = u.witness.unwrap_or((0.0, 0.0));
            return Err(Failure::Numerical(Error::NotUnilateral { r, z, t, v_z: u.min_v_z }));
        }
    }
    info!("field {} with {} seeds", field.name(), seeds.len());

    let ctx = Context { cfg, field: &field, t_span, ode_tol: cfg.tolerances.ode_tol };
    let outputs: Vec<SeedOutput> =
        seeds.par_iter().enumerate().map(|(i, s)| process_seed(&ctx, i, *s)).collect::<Result<_, _>>()?;

    let mut traj_t = Table::new("trajectories", &["seed", "t", "r", "theta", "z"]);
    let mut frenet_t = Table::new(
        "frenet",
        &[
            "seed", "s", "z", "t", "r", "theta", "kappa", "torsion", "ds_kappa", "sigma", "degenerate", "tau_x", "tau_y",
            "tau_z", "n_x", "n_y", "n_z", "b_x", "b_y", "b_z",
        ],
    );
    let mut res_t = Table::new(
        "residuals",
        &[
            "s", "z", "t", "kappa", "torsion", "ds_kappa", "speed", "Dt_speed", "res_r", "res_b", "degenerate", "seed",
            "unsteady_r", "unsteady_b", "res_r_corrected", "res_b_corrected",
        ],
    );
    let mut records = Vec::new();
    let mut checks = SeedChecks::default();
    for o in outputs {
        traj_t.rows.extend(o.trajectory);
        frenet_t.rows.extend(o.frenet);
        for (i, r) in &o.records {
            res_t.push(vec![
                r.s.into(),
                r.z.into(),
                r.t.into(),
                r.kappa.into(),
                r.torsion.into(),
                r.ds_kappa.into(),
                r.speed.into(),
                r.dt_speed.into(),
                r.res_r.into(),
                r.res_b.into(),
                r.degenerate.into(),
                (*i).into(),
                r.unsteady_r.into(),
                r.unsteady_b.into(),
                r.res_r_corrected.into(),
                r.res_b_corrected.into(),
            ]);
        }
        records.extend(o.records.into_iter().map(|(_, r)| r));
        checks.speed_derivative.extend(o.checks.speed_derivative);
        checks.swirl_transport.extend(o.checks.swirl_transport);
        checks.determinant.extend(o.checks.determinant);
        report.seeds.push(o.summary);
    }
    for r in &records {
        report.maxima.abs_res = report.maxima.abs_res.max(r.max_abs());
        report.maxima.abs_res_scaled = report.maxima.abs_res_scaled.max(r.max_abs() / r.scale);
        report.maxima.abs_res_corrected_scaled = report.maxima.abs_res_corrected_scaled.max(r.max_abs_corrected() / r.scale);
    }

    let mut tables = vec![traj_t, frenet_t, res_t];
    let mut validation = Vec::new();
    let thresholds = cfg.thresholds();

    if cfg.streamtube.enabled {
        let r0_max = cfg.streamtube.r0_max.unwrap_or(r_max);
        let r0_nodes = clustered_nodes(cfg.streamtube.r0_count, r0_max);
        let t_nodes = cfg.streamtube.t_nodes.clone().unwrap_or_else(|| default_t_nodes(&field, t_span));
        let map = build_streamtube_map(&field, &r0_nodes, z_span, &t_nodes, cfg.tolerances.ode_tol)?;
        report.scales = Some(map.scales());
        let mut tube = Table::new("streamtube", &["r0_tilde", "z", "t", "R", "dR_dr0", "dR_dz", "rho"]);
        let mut dist = Table::new("disturbance", &["r0_tilde", "z", "t", "L0", "Lx", "Lt"]);
        let nz = cfg.streamtube.z_stations.max(2);
        let mut l0s = Vec::new();
        let mut lts = Vec::new();
        let mut round_trip = Vec::new();
        for &t in &t_nodes {
            for k in 0..nz {
                let z = z_span.0 + (z_span.1 - z_span.0) * k as f64 / (nz - 1) as f64;
                for &r0 in &r0_nodes {
                    let p = map.taylor(r0, z, t)?;
                    let rho = inflow_propagation(&map, r0, z, t)?;
                    tube.push(vec![r0.into(), z.into(), t.into(), p.deriv(0, 0, 0).into(), p.deriv(1, 0, 0).into(), p.deriv(0, 1, 0).into(), rho.into()]);
                    let d = disturbance_rates(&map, r0, z, t)?;
                    dist.push(vec![r0.into(), z.into(), t.into(), d.l0.into(), d.lx.into(), d.lt.into()]);
                    report.maxima.l0 = report.maxima.l0.max(d.l0);
                    report.maxima.lx = report.maxima.lx.max(d.lx);
                    report.maxima.lt = report.maxima.lt.max(d.lt);
                    report.maxima.min_l0 = Some(report.maxima.min_l0.map_or(d.l0, |m| m.min(d.l0)));
                    l0s.push(2.0 - d.l0);
                    lts.push(d.lt);
                }
                if cfg.mode == Mode::Validate {
                    let r_tube = map.taylor(r0_max, z, t)?.deriv(0, 0, 0);
                    for frac in [0.0, 0.15, 0.35, 0.55, 0.75, 0.95] {
                        let r = frac * r_tube;
                        let inlet = |r0: f64, t: f64| field.eval(r0, z_span.0, t).map(|u| u.v_z).unwrap_or(f64::NAN);
                        let v = reconstruct_velocity(&map, inlet, r, z, t)?;
                        let exact = field.eval(r, z, t)?;
                        let err = (v.v_z - exact.v_z).hypot(v.v_r - exact.v_r);
                        round_trip.push(err / exact.v_z.hypot(exact.v_r).max(1e-300));
                    }
                }
            }
        }
        tables.push(tube);
        tables.push(dist);
        if cfg.mode == Mode::Validate {
            validation.push(suite("disturbance_l0_lower_bound", l0s, 1e-9));
            if field.is_steady() {
                validation.push(suite("steady_time_rate", lts, 1e-9));
            }
            validation.push(suite("reconstruction_round_trip", round_trip, 1e-6));
        }
    }

    let indicators = indicators(cfg, &field, t_span, z_span, r_max, &seeds)?;

    if cfg.mode == Mode::Validate {
        let mut div = Vec::new();
        let mut pressure = Vec::new();
        for i in 0..10 {
            let r = seed_r * i as f64 / 9.0;
            for k in 0..10 {
                let z = z_span.0 + (z_span.1 - z_span.0) * k as f64 / 9.0;
                div.push(divergence(&field, r, z, t_span.0)?.abs());
                let pc = pressure_compatibility(&field, r, z, t_span.0)?;
                pressure.push(pc.a_theta.abs().max(pc.curl_mismatch.abs()));
            }
        }
        validation.push(suite("divergence", div, 1e-10));
        if field.is_euler() {
            validation.push(suite("pressure_compatibility", pressure, 1e-8));
            let scaled = records.iter().map(|r| r.max_abs() / r.scale);
            validation.push(suite("frame_identity_residuals", scaled, thresholds.residual_tol));
        }
        validation.push(suite("speed_derivative_vs_path", checks.speed_derivative, 1e-5));
        if !checks.swirl_transport.is_empty() {
            validation.push(suite("swirl_transport", checks.swirl_transport, 10.0 * cfg.tolerances.ode_tol));
            validation.push(suite("determinant_law", checks.determinant, 10.0 * cfg.tolerances.ode_tol));
        }
    }
    report.validation = validation;
    Ok(Artifacts { tables, indicators })
}

fn tagged<T: Serialize>(kind: &str, value: &T) -> Value {
    let mut v = serde_json::to_value(value).unwrap_or(Value::Null);
    if let Value::Object(m) = &mut v {
        m.insert("kind".into(), json!(kind));
    }
    v
}

fn failed(kind: &str, z: f64, t: f64, e: &Error) -> Value {
    json!({ "kind": kind, "z": z, "t": t, "error": e.kind(), "message": e.to_string() })
}

fn indicators(
    cfg: &ScenarioConfig,
    field: &Fixture,
    t_span: (f64, f64),
    z_span: (f64, f64),
    r_max: f64,
    seeds: &[Seed],
) -> Result<Vec<Value>, Failure> {
    let length = field.length_scale();
    let floor = cfg.thresholds.speed_floor;
    let mut lines = Vec::new();
    let t = t_span.0;
    for k in 1..=3 {
        let z = z_span.0 + (z_span.1 - z_span.0) * k as f64 / 4.0;
        lines.push(match near_axis_breakdown_indicator(field, z, t, 1e-3 * length, floor) {
            Ok(b) => tagged("breakdown", &b),
            Err(e) => failed("breakdown", z, t, &e),
        });
        lines.push(match blowup_indicator(field, z, t) {
            Ok(b) => tagged("blowup", &b),
            Err(e) => failed("blowup", z, t, &e),
        });
        let radius = field.max_radius().unwrap_or(r_max / 0.9);
        lines.push(match momentum_flux_ratio(field, z, t, Some(radius), cfg.tolerances.quad_tol) {
            Ok(a) => json!({ "kind": "momentum_flux", "z": z, "t": t, "radius": radius, "a": a }),
            Err(e) => failed("momentum_flux", z, t, &e),
        });
    }
    if let Some(inflow) = &cfg.inflow {
        let family = inflow.family();
        let mc = MonitorConfig {
            r0_nodes: clustered_nodes(cfg.streamtube.r0_count.max(5), cfg.streamtube.r0_max.unwrap_or(0.9)),
            z_span,
            delta_t: inflow.delta_t,
            ode_tol: cfg.tolerances.ode_tol,
            gamma: inflow.swirl_region.then_some(cfg.thresholds.gamma),
            thresholds: cfg.thresholds(),
        };
        for s in pulsatile_monitor(&family, seeds, &inflow.t_grid, &mc)? {
            lines.push(tagged("pulsatile", &s));
        }
    }
    Ok(lines)
}

/// Runs a scenario and writes its outputs into `out_dir`.
pub fn run(cfg: &ScenarioConfig, config_text: &str, base_dir: &Path, out_dir: &Path) -> RunReport {
    let start = Instant::now();
    let mut report = RunReport {
        scenario: cfg.name.clone(),
        mode: cfg.mode,
        field: None,
        status: "ok",
        exit_code: EXIT_OK,
        error: None,
        scales: None,
        seeds: Vec::new(),
        maxima: Maxima::default(),
        validation: Vec::new(),
        meta: RunMeta {
            tool: "efl",
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: config_hash(config_text),
            wall_time_s: 0.0,
        },
    };
    let written = fs::create_dir_all(out_dir).map_err(|e| Failure::Config(format!("cannot create {}: {e}", out_dir.display())));
    let result = written.and_then(|_| pipeline(cfg, base_dir, &mut report)).and_then(|art| {
        let io = |e: std::io::Error| Failure::Config(format!("cannot write outputs: {e}"));
        for t in &art.tables {
            t.write(out_dir, cfg.outputs.format).map_err(io)?;
        }
        let text: String = art.indicators.iter().map(|v| format!("{v}\n")).collect();
        fs::write(out_dir.join("indicators.jsonl"), text).map_err(io)
    });
    match result {
        Ok(()) => {
            if report.validation.iter().any(|s| !s.pass) {
                report.status = "validation_failure";
                report.exit_code = EXIT_VALIDATION;
            }
        }
        Err(f) => {
            warn!("run failed: {f:?}");
            report.status = if f.exit_code() == EXIT_CONFIG { "config_error" } else { "numerical_failure" };
            report.exit_code = f.exit_code();
            report.error = Some(f.info());
        }
    }
    report.meta.wall_time_s = start.elapsed().as_secs_f64();
    if let Ok(text) = serde_json::to_string_pretty(&report) {
        let _ = fs::write(out_dir.join("report.json"), text + "\n");
    }
    report
}

//! Experiment execution.

use std::path::{Path, PathBuf};

use bec_oct::analysis::{observables_with, wigner, wigner_time_integrated, WignerMap};
use bec_oct::io::FieldRecord;
use bec_oct::oct::spatial::channel_states;
use bec_oct::solver::{groundstate_at, GroundstateOptions};
use bec_oct::{
    infidelity, Control, Drive, OctProblem, OctReport, PropagationSpec, SpatialProblem, Trajectory, WaveField,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Config, ExperimentKind, WignerState};
use crate::error::{CliError, Result};
use crate::output::{space_axes, state_dims, Cell, OutputDir};

pub const EFFECTIVE_CONFIG: &str = "effective_config.toml";

/// Propagation setup for transfer time `t_final` (in the configured unit) and
/// nonlinearity `kappa`.
pub fn build_spec(config: &Config, t_final: f64, kappa: f64) -> Result<PropagationSpec> {
    let grid = config.grid.build_with_t(t_final)?;
    let potential = config.potential.build(&grid.space)?;
    let spec = PropagationSpec {
        subtract_offset: config.solver.subtract_offset,
        storage: config.solver.storage(),
        ..PropagationSpec::new(grid, potential, config.solver.scheme).with_g(kappa)
    };
    Ok(spec)
}

fn read_control_file(path: &Path, intervals: usize) -> Result<Control> {
    let mut r =
        csv::Reader::from_path(path).map_err(|e| CliError::Config(format!("control file {}: {e}", path.display())))?;
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let v = rec
            .get(1)
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| CliError::Config(format!("control file {}: bad row {rec:?}", path.display())))?;
        values.push(v);
    }
    Ok(Control::from_values(values)?.resampled(intervals))
}

pub fn initial_control(config: &Config, intervals: usize) -> Result<Control> {
    match (config.control.initial_guess(), &config.control.file) {
        (Some(kind), _) => Ok(Control::guess(kind, intervals)),
        (None, Some(path)) => read_control_file(path, intervals),
        (None, None) => Err(CliError::Config("control.guess = \"file\" needs control.file".into())),
    }
}

fn problem(config: &Config, spec: PropagationSpec) -> Result<OctProblem> {
    Ok(OctProblem::transfer(spec)?.with_gamma(config.oct.gamma)?)
}

/// Runs the configured experiment into `out` and returns the manifest path.
pub fn run(config: &Config, out: &Path) -> Result<PathBuf> {
    config.validate()?;
    let mut dir = OutputDir::create(out)?;
    dir.write_bytes(EFFECTIVE_CONFIG, config.to_toml()?.as_bytes())?;
    log::info!("running {:?} into {}", config.experiment.kind, out.display());
    match config.experiment.kind {
        ExperimentKind::Groundstate => run_groundstate(config, &mut dir)?,
        ExperimentKind::Propagate => run_propagate(config, &mut dir)?,
        ExperimentKind::Optimize => run_optimize(config, &mut dir)?,
        ExperimentKind::OptimizeSpatial => run_spatial(config, &mut dir)?,
        ExperimentKind::Sweep => run_sweep(config, &mut dir)?,
        ExperimentKind::Wigner => run_wigner(config, &mut dir)?,
    }
    dir.finish()
}

fn run_groundstate(config: &Config, dir: &mut OutputDir) -> Result<()> {
    let spec = build_spec(config, config.grid.t_final, config.solver.kappa)?;
    let opts = GroundstateOptions {
        tau: spec.grid.time.dt(),
        kinetic: spec.scheme.kinetic_model(),
        ..Default::default()
    };
    let mut rows = Vec::new();
    for (lambda, stem) in [(0.0, "groundstate_initial"), (1.0, "groundstate_final")] {
        let gs = groundstate_at(&spec.potential, &spec.grid.space, lambda, spec.g, &opts)?;
        let v = spec.potential.sample(&spec.grid.space, lambda)?;
        let o = observables_with(&gs.state, &v, spec.g)?;
        rows.push(vec![
            Cell::F(lambda),
            Cell::F(gs.energy),
            Cell::F(gs.chemical_potential),
            Cell::U(gs.steps),
            Cell::F(o.mean_x),
            Cell::F(o.width_x),
        ]);
        dir.write_state(stem, &gs.state)?;
    }
    dir.write_csv(
        "groundstates.csv",
        &["lambda", "energy", "chemical_potential", "steps", "mean_x", "width_x"],
        &rows,
    )
}

fn control_rows(axis: &[f64], control: &Control) -> Vec<Vec<Cell>> {
    axis.iter()
        .zip(control.values())
        .map(|(a, l)| vec![Cell::F(*a), Cell::F(*l)])
        .collect()
}

fn time_axis(spec: &PropagationSpec) -> Vec<f64> {
    (0..spec.grid.time.nodes()).map(|m| spec.grid.time.time(m)).collect()
}

fn write_trajectory_outputs(
    config: &Config,
    spec: &PropagationSpec,
    control: &Control,
    traj: &Trajectory,
    initial: &WaveField,
    dir: &mut OutputDir,
) -> Result<()> {
    let schedule = spec.schedule(Drive::Temporal(control.values()))?;
    let nodes = traj.stored_nodes();
    let mut rows = Vec::with_capacity(nodes.len());
    for &m in &nodes {
        let psi = traj.snapshot(m).expect("stored node");
        let (mut v, v0) = schedule.potential(m)?;
        v.iter_mut().for_each(|x| *x += v0);
        let o = observables_with(&psi, &v, spec.g)?;
        rows.push(vec![
            Cell::F(spec.grid.time.time(m)),
            Cell::F(control.values()[m]),
            Cell::F(o.norm),
            Cell::F(o.mean_x),
            Cell::F(o.mean_p),
            Cell::F(o.width_x),
            Cell::F(o.width_p),
            Cell::F(o.energy),
        ]);
    }
    dir.write_csv(
        "observables.csv",
        &[
            "t", "lambda", "norm", "mean_x", "mean_p", "width_x", "width_p", "energy",
        ],
        &rows,
    )?;
    if config.output.states {
        dir.write_state("initial_state", initial)?;
        dir.write_state("final_state", &traj.final_state())?;
    }
    if config.output.trajectory {
        let space = spec.grid.space;
        let mut dims = vec![nodes.len() as u32];
        dims.extend(state_dims(&space));
        let data = nodes
            .iter()
            .flat_map(|&m| traj.snapshot(m).expect("stored node").into_values())
            .collect();
        let times = nodes.iter().map(|&m| spec.grid.time.time(m)).collect();
        let mut axes = vec![("t", times)];
        axes.extend(space_axes(&space));
        dir.write_field("trajectory", &FieldRecord::complex(dims, data)?, &axes)?;
    }
    Ok(())
}

fn run_propagate(config: &Config, dir: &mut OutputDir) -> Result<()> {
    let spec = build_spec(config, config.grid.t_final, config.solver.kappa)?;
    let p = problem(config, spec.clone())?;
    let control = initial_control(config, spec.grid.time.n_t)?;
    let traj = p.forward(&control)?;
    let inf = infidelity(&traj.final_state(), &p.desired)?;
    let pen = control.penalty(p.gamma, spec.grid.time.dt());
    dir.write_csv(
        "cost.csv",
        &["J", "infidelity", "penalty"],
        &[vec![Cell::F(inf + pen), Cell::F(inf), Cell::F(pen)]],
    )?;
    dir.write_csv(
        "control.csv",
        &["t", "lambda"],
        &control_rows(&time_axis(&spec), &control),
    )?;
    write_trajectory_outputs(config, &spec, &control, &traj, &p.initial, dir)
}

fn write_report(
    dir: &mut OutputDir,
    axis_name: &str,
    axis: &[f64],
    initial_cost: f64,
    report: &OctReport,
) -> Result<()> {
    let history: Vec<Vec<Cell>> = report
        .history
        .iter()
        .map(|h| {
            vec![
                Cell::U(h.iteration),
                Cell::F(h.cost),
                Cell::F(h.infidelity),
                Cell::F(h.penalty),
                Cell::F(h.gradient_norm),
            ]
        })
        .collect();
    dir.write_csv(
        "history.csv",
        &["iteration", "J", "infidelity", "penalty", "gradient_norm"],
        &history,
    )?;
    dir.write_csv(
        "control.csv",
        &[axis_name, "lambda"],
        &control_rows(axis, &report.control),
    )?;
    let (lo, hi) = report.control.range();
    dir.write_csv(
        "summary.csv",
        &[
            "J_initial",
            "J",
            "infidelity",
            "penalty",
            "gradient_norm",
            "iterations",
            "exit_reason",
            "lambda_min",
            "lambda_max",
        ],
        &[vec![
            Cell::F(initial_cost),
            Cell::F(report.cost),
            Cell::F(report.infidelity),
            Cell::F(report.penalty),
            Cell::F(report.gradient_norm),
            Cell::U(report.iterations),
            Cell::S(enum_name(&report.exit_reason)),
            Cell::F(lo),
            Cell::F(hi),
        ]],
    )
}

fn enum_name<T: Serialize>(v: &T) -> String {
    toml::Value::try_from(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn run_optimize(config: &Config, dir: &mut OutputDir) -> Result<()> {
    let spec = build_spec(config, config.grid.t_final, config.solver.kappa)?;
    let p = problem(config, spec.clone())?;
    let guess = initial_control(config, spec.grid.time.n_t)?;
    let initial_cost = p.evaluate_cost(&guess)?.total;
    let report = p.optimize(&guess, &config.oct.optimizer)?;
    if report.leaves_unit_interval() {
        log::warn!("optimized control leaves [0, 1]");
    }
    write_report(dir, "t", &time_axis(&spec), initial_cost, &report)?;
    let traj = p.forward(&report.control)?;
    write_trajectory_outputs(config, &spec, &report.control, &traj, &p.initial, dir)
}

fn run_spatial(config: &Config, dir: &mut OutputDir) -> Result<()> {
    let s = config.spatial.as_ref().expect("validated");
    let spec = build_spec(config, config.grid.t_final, config.solver.kappa)?;
    let (initial, desired) = channel_states(
        &spec.grid.space,
        s.packet(),
        s.channel_omega,
        s.channel_y0,
        spec.grid.time.t_final,
    )?;
    let mut p = SpatialProblem::new(spec, initial, desired, s.x_start, s.length)?;
    p.gamma = config.oct.gamma;
    let guess = initial_control(config, p.intervals())?;
    let initial_cost = p.evaluate_cost(&guess)?.total;
    let report = p.optimize(&guess, &config.oct.optimizer)?;
    write_report(dir, "x", &p.node_positions(), initial_cost, &report)?;
    if config.output.states {
        dir.write_state("initial_state", &p.initial)?;
        dir.write_state("desired_state", &p.desired)?;
        dir.write_state("final_state", &p.forward(&report.control)?.final_state())?;
    }
    Ok(())
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub t: f64,
    pub kappa: f64,
    pub j_linear: f64,
    pub optimized: Option<(f64, usize, String)>,
}

/// Evaluates every `(T, kappa)` pair, T-major, in parallel with ordered output.
pub fn sweep_points(config: &Config) -> Result<Vec<SweepPoint>> {
    let s = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [sweep] section".into()))?;
    let ts = match &s.t {
        Some(v) => v.values()?,
        None => vec![config.grid.t_final],
    };
    let kappas = match &s.kappa {
        Some(v) => v.values()?,
        None => vec![config.solver.kappa],
    };
    let pairs: Vec<(f64, f64)> = ts.iter().flat_map(|&t| kappas.iter().map(move |&k| (t, k))).collect();
    pairs
        .par_iter()
        .map(|&(t, kappa)| {
            let spec = build_spec(config, t, kappa)?;
            let p = problem(config, spec)?;
            let n = p.spec.grid.time.n_t;
            let j_linear = p.evaluate_cost(&Control::linear(n))?.total;
            let optimized = if config.oct.enabled {
                let r = p.optimize(&initial_control(config, n)?, &config.oct.optimizer)?;
                log::info!(
                    "T = {t}, kappa = {kappa}: J = {:e} after {} iterations",
                    r.cost,
                    r.iterations
                );
                Some((r.cost, r.iterations, enum_name(&r.exit_reason)))
            } else {
                None
            };
            Ok(SweepPoint {
                t,
                kappa,
                j_linear,
                optimized,
            })
        })
        .collect()
}

fn run_sweep(config: &Config, dir: &mut OutputDir) -> Result<()> {
    let points = sweep_points(config)?;
    let mut header = vec!["T", "kappa", "J_linear"];
    if config.oct.enabled {
        header.extend(["J_optimized", "iterations", "exit_reason"]);
    }
    let rows: Vec<Vec<Cell>> = points
        .iter()
        .map(|p| {
            let mut row = vec![Cell::F(p.t), Cell::F(p.kappa), Cell::F(p.j_linear)];
            if let Some((j, it, exit)) = &p.optimized {
                row.extend([Cell::F(*j), Cell::U(*it), Cell::S(exit.clone())]);
            }
            row
        })
        .collect();
    dir.write_csv("sweep.csv", &header, &rows)
}

fn write_wigner(dir: &mut OutputDir, stem: &str, w: &WignerMap) -> Result<()> {
    let record = FieldRecord::real(vec![w.x.len() as u32, w.p.len() as u32], w.values.clone())?;
    dir.write_field(stem, &record, &[("x", w.x.clone()), ("p", w.p.clone())])
}

fn run_wigner(config: &Config, dir: &mut OutputDir) -> Result<()> {
    let spec = build_spec(config, config.grid.t_final, config.solver.kappa)?;
    let p = problem(config, spec.clone())?;
    let control = initial_control(config, spec.grid.time.n_t)?;
    let traj = p.forward(&control)?;
    let psi = match config.wigner.state {
        WignerState::Initial => p.initial.clone(),
        WignerState::Final => traj.final_state(),
    };
    let w = wigner(&psi)?;
    write_wigner(dir, "wigner", &w)?;
    let (ex, ep, sx, sp) = w.moments();
    let mut rows = vec![vec![
        Cell::S("snapshot".into()),
        Cell::F(w.total()),
        Cell::F(ex),
        Cell::F(ep),
        Cell::F(sx),
        Cell::F(sp),
        Cell::U(0),
    ]];
    if config.wigner.time_integrated {
        let wt = wigner_time_integrated(&traj, config.wigner.stride)?;
        write_wigner(dir, "wigner_time_integrated", &wt)?;
        let (ex, ep, sx, sp) = wt.moments();
        rows.push(vec![
            Cell::S("time_integrated".into()),
            Cell::F(wt.total()),
            Cell::F(ex),
            Cell::F(ep),
            Cell::F(sx),
            Cell::F(sp),
            Cell::U(wt.stride.unwrap_or(0)),
        ]);
    }
    dir.write_csv(
        "wigner_summary.csv",
        &["map", "total", "mean_x", "mean_p", "width_x", "width_p", "stride"],
        &rows,
    )
}

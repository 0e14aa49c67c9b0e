use std::path::{Path, PathBuf};

use chemoflow::diagnostics::{
    apriori_check, discrete_rate, fit_decay_rate, gradient_control_check, paper_constants, reference_rate,
    DecayQuantity,
};
use chemoflow::domain::{validate_params, ModelParams, ParamsReport};
use chemoflow::jko::{jko_step, run_trajectory_with, JkoConfig, TrajectoryRecord};
use chemoflow::kernels::verify_suite;
use chemoflow::stationary::{el_residual, verify_stationary_bounds};
use chemoflow::transport::compound_dist;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{output_dir, write_csv, write_json};

/// Window start of the reported decay fits.
const FIT_START: f64 = 0.5;
/// Largest number of stored states used for pairwise Hölder checks.
const HOLDER_SAMPLES: usize = 60;

const TRAJECTORY_HEADER: [&str; 13] = [
    "t",
    "H",
    "L_u",
    "L_v",
    "L_star",
    "W2_step",
    "dv_L2_step",
    "D_u",
    "D_v",
    "W2_to_stat",
    "u_L2_diff",
    "v_W12_diff",
    "grad_v_L65",
];

fn solver_err(what: &str) -> impl Fn(chemoflow::Error) -> CliError + '_ {
    move |e| CliError::Solver(format!("{what}: {e}"))
}

fn assumptions_json(report: &ParamsReport) -> Value {
    Value::Array(
        report
            .checks
            .iter()
            .map(|c| json!({"name": c.name, "passed": c.passed, "witness": c.witness, "detail": c.detail}))
            .collect(),
    )
}

fn convexity_flag(p: &ModelParams<f64>) -> bool {
    let unverified = !p.convexity_certified();
    if unverified {
        eprintln!("warning: coupling too strong for the joint convexity certificate (convexity_unverified)");
    }
    unverified
}

/// Headline numbers of one simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub rate_l: f64,
    pub r_squared: f64,
    pub max_energy_increase: f64,
    pub final_el_residual: f64,
}

fn write_trajectory(dir: &Path, traj: &TrajectoryRecord<f64>, every: usize) -> Result<(), CliError> {
    let last = traj.records.len() - 1;
    let rows = traj
        .records
        .iter()
        .filter(|r| r.step % every == 0 || r.step == last)
        .map(|r| {
            vec![
                r.time,
                r.h,
                r.l_u,
                r.l_v,
                r.l_star,
                r.w2_step,
                r.dv_l2_step,
                r.d_u,
                r.d_v,
                r.w2_to_stat,
                r.u_l2_diff,
                r.v_w12_diff,
                r.grad_v_l65,
            ]
        });
    write_csv(&dir.join("trajectory.csv"), &TRAJECTORY_HEADER, rows)
}

/// Runs one configuration and writes its files into `dir`.
pub fn run_simulation(cfg: &RunConfig, dir: &Path) -> Result<RunSummary, CliError> {
    let grid = cfg.grid()?;
    let p = cfg.params(&grid)?;
    let stat = cfg.stationary(&p, &grid)?;
    let init = cfg.initial_state(grid, &stat)?;
    let jcfg = JkoConfig::new(cfg.stepping.tau).map_err(|e| CliError::Config(format!("stepping.tau: {e}")))?;
    let traj = run_trajectory_with(&init, &stat.state, &p, &jcfg, cfg.n_steps()).map_err(solver_err("simulation"))?;

    std::fs::create_dir_all(dir)?;
    write_trajectory(dir, &traj, cfg.output.every_k_steps)?;
    let fin = traj.final_state();
    let centers = grid.centers();
    write_csv(
        &dir.join("final_state.csv"),
        &["x", "u", "v"],
        (0..grid.len()).map(|i| vec![centers[i], fin.u.values()[i], fin.v.values()[i]]),
    )?;

    let window = (FIT_START, cfg.stepping.t_end);
    let mut fits = serde_json::Map::new();
    for q in DecayQuantity::ALL {
        let entry = match fit_decay_rate(&traj, q, window, &p) {
            Ok(f) => json!({
                "rate": f.rate,
                "distance_rate": f.distance_rate(),
                "r_squared": f.r_squared,
                "t_start": f.t_start,
                "t_end": f.t_end,
                "samples": f.samples,
            }),
            Err(e) => json!({"error": e.to_string()}),
        };
        fits.insert(q.name().to_string(), entry);
    }
    let l_fit = fit_decay_rate(&traj, DecayQuantity::L, window, &p).ok();

    let v0_norm = grid.lq_norm(init.v.values(), 1.2);
    let consts = paper_constants(&p, v0_norm).map_err(solver_err("constants"))?;
    let control = gradient_control_check(&traj, &consts, p.epsilon);
    let stride = traj.states.len().div_ceil(HOLDER_SAMPLES).max(1);
    let apriori = apriori_check(&traj, stride).map_err(solver_err("a priori check"))?;
    let final_el = el_residual(fin, &p);
    let reference = reference_rate(&p);
    let report = json!({
        "tau": cfg.stepping.tau,
        "n_steps": cfg.n_steps(),
        "n_cells": grid.len(),
        "epsilon": p.epsilon,
        "H_initial": traj.records[0].h,
        "H_final": traj.records[traj.records.len() - 1].h,
        "H_inf": traj.h_inf,
        "max_energy_increase": traj.max_energy_increase(),
        "max_sweeps": traj.records.iter().map(|r| r.sweeps).max().unwrap_or(0),
        "final_el_residual": final_el,
        "decay_fits": fits,
        "reference_rate": reference,
        "reference_functional_rate": 2.0 * reference,
        "discrete_reference_functional_rate": discrete_rate(2.0 * reference, cfg.stepping.tau),
        "constants": {
            "a": consts.a,
            "M1": consts.m1,
            "T1": consts.t1,
            "Y1": consts.y1,
            "Y_6/5": consts.y65,
            "v0_L65": consts.v0_norm_65,
        },
        "gradient_control": {
            "caveat": control.caveat,
            "T1": control.t1,
            "two_M1": 2.0 * control.m1,
            "steps_past_T1": control.steps_past_t1,
            "max_grad_v_L65_past_T1": control.max_grad_past_t1,
            "short_time_bound_holds": control.all_decay,
            "control_bound_holds": control.all_control,
        },
        "apriori": {
            "budget": apriori.budget,
            "sum_W2_step_sq": apriori.w2_increments,
            "sum_dv_L2_step_sq": apriori.v_increments,
            "holder_excess_u": apriori.holder_excess_u,
            "holder_excess_v": apriori.holder_excess_v,
            "pairs": apriori.pairs,
            "holds": apriori.holds(1e-8),
        },
        "assumptions": assumptions_json(&validate_params(&p, &grid)),
        "convexity_unverified": convexity_flag(&p),
    });
    write_json(&dir.join("report.json"), &report)?;
    Ok(RunSummary {
        rate_l: l_fit.map_or(f64::NAN, |f| f.rate),
        r_squared: l_fit.map_or(f64::NAN, |f| f.r_squared),
        max_energy_increase: traj.max_energy_increase(),
        final_el_residual: final_el,
    })
}

pub fn simulate(config: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let dir = output_dir(&cfg.output.directory)?;
    let s = run_simulation(&cfg, &dir)?;
    println!(
        "wrote {} (L rate {:.6}, max H increase {:.3e})",
        dir.display(),
        s.rate_l,
        s.max_energy_increase
    );
    Ok(())
}

pub fn stationary(config: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let grid = cfg.grid()?;
    let p = cfg.params(&grid)?;
    let dir = output_dir(&cfg.output.directory)?;
    let stat = cfg.stationary(&p, &grid)?;
    let bounds = verify_stationary_bounds(&stat, &p).map_err(solver_err("stationary bounds"))?;
    let jcfg = JkoConfig::new(cfg.stepping.tau).map_err(|e| CliError::Config(format!("stepping.tau: {e}")))?;
    let moved = jko_step(&stat.state, &p, &jcfg).map_err(solver_err("step from the stationary state"))?;
    let one_step = compound_dist(&moved.state, &stat.state).map_err(solver_err("distance"))?;
    let centers = grid.centers();
    write_csv(
        &dir.join("stationary.csv"),
        &["x", "u", "v"],
        (0..grid.len()).map(|i| vec![centers[i], stat.state.u.values()[i], stat.state.v.values()[i]]),
    )?;
    let report = json!({
        "U_eps": stat.level,
        "el_residual": el_residual(&stat.state, &p),
        "el_v_residual": stat.el_v_residual,
        "mass_error": stat.mass_error,
        "iterations": stat.iterations,
        "v_sup": stat.v_sup,
        "one_step_move": one_step.total,
        "bounds": {
            "max_u": bounds.max_u,
            "U_0": bounds.u0,
            "bound_a": bounds.bound_a,
            "bound_a_holds": bounds.bound_a_holds,
            "gradient_ratio": bounds.gradient_ratio,
        },
        "assumptions": assumptions_json(&validate_params(&p, &grid)),
        "convexity_unverified": convexity_flag(&p),
    });
    write_json(&dir.join("stationary_report.json"), &report)?;
    println!("wrote {} (U_eps {:.12})", dir.display(), stat.level);
    Ok(())
}

pub fn kernels_verify() -> Result<(), CliError> {
    let rows = verify_suite().map_err(solver_err("kernel suite"))?;
    let table: Vec<Value> = rows
        .iter()
        .map(|r| json!({"check": r.check, "lhs": r.lhs, "rhs": r.rhs, "tol": r.tol, "pass": r.pass}))
        .collect();
    println!(
        "{}",
        serde_json::to_string_pretty(&Value::Array(table)).map_err(|e| CliError::Io(e.into()))?
    );
    let failed: Vec<&str> = rows.iter().filter(|r| !r.pass).map(|r| r.check.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(failed.join(", ")))
    }
}

pub fn sweep(config: &Path, param: &str, values: &str) -> Result<(), CliError> {
    let base = RunConfig::load(config)?;
    let list: Vec<&str> = values.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if list.is_empty() {
        return Err(CliError::Config("--values: empty value list".into()));
    }
    let configs = list
        .iter()
        .map(|v| base.with_param(param, v))
        .collect::<Result<Vec<_>, _>>()?;
    let root = output_dir(&base.output.directory)?;
    let dirs: Vec<PathBuf> = list.iter().map(|v| root.join(format!("{param}_{v}"))).collect();
    let results: Vec<Result<RunSummary, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .zip(&dirs)
            .map(|(c, d)| s.spawn(move || run_simulation(c, d)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(CliError::Solver("run panicked".into())))
            })
            .collect()
    });
    let mut failed = Vec::new();
    let mut rows = Vec::new();
    for ((v, cfg), res) in list.iter().zip(&configs).zip(&results) {
        let value = match param {
            "epsilon" => cfg.params.epsilon,
            "tau" => cfg.stepping.tau,
            _ => cfg.grid.n as f64,
        };
        match res {
            Ok(s) => rows.push(vec![
                value,
                1.0,
                s.rate_l,
                s.r_squared,
                s.max_energy_increase,
                s.final_el_residual,
            ]),
            Err(e) => {
                eprintln!("run {param}={v} failed: {e}");
                failed.push(v.to_string());
                rows.push(vec![value, 0.0, f64::NAN, f64::NAN, f64::NAN, f64::NAN]);
            }
        }
    }
    write_csv(
        &root.join("sweep_summary.csv"),
        &[
            "value",
            "ok",
            "rate_L",
            "r_squared",
            "max_energy_increase",
            "final_el_residual",
        ],
        rows,
    )?;
    if failed.is_empty() {
        println!("wrote {}", root.join("sweep_summary.csv").display());
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "runs failed for {param} = {}",
            failed.join(", ")
        )))
    }
}

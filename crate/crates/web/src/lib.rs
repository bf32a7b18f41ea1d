//! Browser bindings for the simulator: three JSON-in/JSON-out operations
//! consumed by the static demo page in `static/`.
//!
//! Every function returns a JSON string; failures are reported as
//! `{"error": "..."}` so the JavaScript side needs no exception handling.

use jamhop_core::config::{generate_p, ExperimentConfig};
use jamhop_core::estimators::{
    optimize_window, phase_lengths, window_objective, JammerMode, LearningParams,
};
use jamhop_core::runner::{oracle_throughput, run_many, RegretCurve};
use jamhop_core::su::Algorithm;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct CurvePoint {
    slot: u64,
    mean_regret: f64,
    stderr_regret: f64,
    mean_throughput: f64,
}

#[derive(Serialize)]
struct ExperimentSummary {
    final_regret: f64,
    correct_estimate_fraction: f64,
    common_hop_order_fraction: f64,
    mean_settle_slot: Option<f64>,
}

#[derive(Serialize)]
struct ExperimentOut {
    oracle_rate: f64,
    t_c: u64,
    t_o: u64,
    t_j: u64,
    points: Vec<CurvePoint>,
    summary: ExperimentSummary,
}

fn err_json(msg: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": msg.to_string() }).to_string()
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    match s {
        "cdj" => Ok(Algorithm::Cdj),
        "cnj" => Ok(Algorithm::Cnj),
        "cuj" => Ok(Algorithm::Cuj),
        "myopic" => Ok(Algorithm::Myopic),
        "mc" => Ok(Algorithm::MusicalChairs),
        other => Err(format!("unknown algorithm '{other}'")),
    }
}

fn parse_mode(s: &str) -> Result<JammerMode, String> {
    match s {
        "coordinated" => Ok(JammerMode::Coordinated),
        "uncoordinated" => Ok(JammerMode::Uncoordinated),
        other => Err(format!("unknown jammer mode '{other}'")),
    }
}

/// Runs one experiment from a JSON config (same schema as the CLI) and
/// returns the regret curve downsampled to at most `max_points` samples.
#[wasm_bindgen]
pub fn run_experiment(config_json: &str, max_points: usize) -> String {
    let cfg = match ExperimentConfig::from_json(config_json) {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    let cfg = match cfg.resolve() {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    let agg = run_many(&cfg);
    let rate = match oracle_throughput(&cfg.p, cfg.n, cfg.j, cfg.jammer_mode) {
        Ok(r) => r,
        Err(e) => return err_json(e),
    };
    let curve = RegretCurve::from_aggregate(&agg, rate);
    let horizon = cfg.horizon as usize;
    let stride = horizon.div_ceil(max_points.max(1)).max(1);
    let mut points = Vec::new();
    let mut t = 0usize;
    while t < horizon {
        let at = (t + stride - 1).min(horizon - 1);
        points.push(CurvePoint {
            slot: at as u64 + 1,
            mean_regret: curve.mean_regret[at],
            stderr_regret: curve.stderr_regret[at],
            mean_throughput: curve.mean_throughput[at] / (at as f64 + 1.0),
        });
        t += stride;
    }
    let correct = agg
        .results
        .iter()
        .filter(|r| r.agents.iter().all(|a| a.n_hat == cfg.n && a.j_hat == cfg.j && !a.degraded))
        .count();
    let common = agg.results.iter().filter(|r| r.common_hop_order).count();
    let settled: Vec<u64> =
        agg.results.iter().filter_map(|r| r.last_settle_slot).collect();
    let mean_settle = (!settled.is_empty())
        .then(|| settled.iter().sum::<u64>() as f64 / settled.len() as f64);
    let out = ExperimentOut {
        oracle_rate: rate,
        t_c: cfg.schedule.t_c,
        t_o: cfg.schedule.t_o,
        t_j: cfg.schedule.t_j,
        points,
        summary: ExperimentSummary {
            final_regret: curve.final_regret(),
            correct_estimate_fraction: correct as f64 / agg.runs as f64,
            common_hop_order_fraction: common as f64 / agg.runs as f64,
            mean_settle_slot: mean_settle,
        },
    };
    serde_json::to_string(&out).unwrap_or_else(err_json)
}

/// Theorem-derived learning schedule for the given parameters. Pass a
/// non-positive `theta` to use the floor of the generated p vector.
#[wasm_bindgen]
pub fn phase_schedule(
    algorithm: &str,
    k: usize,
    theta: f64,
    delta: f64,
    epsilon: f64,
    gamma: f64,
) -> String {
    let algo = match parse_algorithm(algorithm) {
        Ok(a) => a,
        Err(e) => return err_json(e),
    };
    let theta = if theta > 0.0 {
        theta
    } else {
        1.0 - generate_p(k).iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    };
    let params = LearningParams { delta, epsilon, gamma };
    match phase_lengths(algo, k, theta, &params) {
        Ok(s) => serde_json::json!({
            "t_c": s.t_c, "t_o": s.t_o, "t_j": s.t_j,
            "total": s.learning_slots(), "theta": theta,
        })
        .to_string(),
        Err(e) => err_json(e),
    }
}

/// Objective value of every window size w for the generated p vector, plus
/// the chosen optimum.
#[wasm_bindgen]
pub fn window_scan(mode: &str, k: usize, n: usize, j: usize) -> String {
    let mode = match parse_mode(mode) {
        Ok(m) => m,
        Err(e) => return err_json(e),
    };
    if n == 0 || n >= k {
        return err_json("need 1 <= n < k");
    }
    let mut p = generate_p(k);
    p.sort_by(f64::total_cmp);
    let objectives: Vec<f64> =
        (0..=(k - n)).map(|w| window_objective(mode, n, j, &p, w)).collect();
    match optimize_window(mode, n, j, &p) {
        Ok((m, obj)) => serde_json::json!({
            "p_sorted": p, "objectives": objectives,
            "m": m, "n_star": n + m, "objective": obj,
        })
        .to_string(),
        Err(e) => err_json(e),
    }
}

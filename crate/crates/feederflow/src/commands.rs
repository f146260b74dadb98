//! Subcommand bodies. Each `run_*` computes, writes its files under `out`
//! and returns what it wrote.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use feederflow_core::density::split;
use feederflow_core::metrics::{convergence_report, far_leaf};
use feederflow_core::nonlinear::solve_tpbv_report;
use feederflow_core::perturbation::ev_impact;
use feederflow_core::{ConvergenceRow, Field, ImpactSpec, PerturbationSeries, ResidualReport, SolveOptions};
use log::info;
use serde::Serialize;

use crate::config::{Scenario, ScenarioOptions};
use crate::error::{CliError, Result};
use crate::output::{aligned_text, csv_bytes, json_bytes, num, profile_csv, sampled_rows, write_atomic};

#[derive(Debug, Serialize)]
struct Metadata {
    generated_unix_s: u64,
    tool_version: &'static str,
}

fn metadata() -> Metadata {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    Metadata { generated_unix_s: secs, tool_version: env!("CARGO_PKG_VERSION") }
}

#[derive(Debug, Serialize)]
struct Settings {
    grid_h_km: f64,
    sigma_km: f64,
    epsilon: f64,
}

impl From<ScenarioOptions> for Settings {
    fn from(o: ScenarioOptions) -> Self {
        Self { grid_h_km: o.grid_h_km, sigma_km: o.sigma_km, epsilon: o.epsilon }
    }
}

fn ids(scenario: &Scenario) -> Vec<&str> {
    scenario.network.segments.iter().map(|s| s.id.as_str()).collect()
}

/// Value at the downstream end of the far-leaf segment.
pub fn at_far_leaf(scenario: &Scenario, field: &Field) -> f64 {
    let topo = scenario.network.topology().expect("validated at load");
    let leaf = far_leaf(&topo, &scenario.grid);
    *field[leaf].last().expect("non-empty segment")
}

#[derive(Debug, Serialize)]
pub struct ValidateSummary {
    pub valid: bool,
    pub name: String,
    pub segments: usize,
    pub nodes: usize,
    pub injections: usize,
    pub total_length_km: f64,
    pub samples: usize,
}

pub fn validate(scenario: &Scenario) -> ValidateSummary {
    ValidateSummary {
        valid: true,
        name: scenario.name.clone(),
        segments: scenario.network.segments.len(),
        nodes: scenario.network.nodes.len(),
        injections: scenario.injections.len(),
        total_length_km: scenario.network.total_length(),
        samples: scenario.grid.num_samples(),
    }
}

#[derive(Debug, Serialize)]
struct SolveJson<'a> {
    network: &'a str,
    iterations: usize,
    residual: ResidualJson,
    min_v_pu: f64,
    v_far_leaf_pu: f64,
    settings: Settings,
    newton_tol: f64,
    metadata: Metadata,
}

#[derive(Debug, Serialize)]
struct ResidualJson {
    ode: f64,
    boundary: f64,
    junction: f64,
    svr: f64,
}

impl From<ResidualReport> for ResidualJson {
    fn from(r: ResidualReport) -> Self {
        Self { ode: r.ode, boundary: r.boundary, junction: r.junction, svr: r.svr }
    }
}

pub fn run_solve(
    scenario: &Scenario,
    settings: ScenarioOptions,
    options: &SolveOptions,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    let (profile, report) = solve_tpbv_report(&scenario.network, &scenario.density, &scenario.grid, options)?;
    info!("converged in {} iteration(s), residual {:e}", report.iterations, report.residual.max());
    let profile_path = out.join("profile.csv");
    write_atomic(&profile_path, &profile_csv(&ids(scenario), &profile)?)?;
    let json = SolveJson {
        network: &scenario.name,
        iterations: report.iterations,
        residual: report.residual.into(),
        min_v_pu: profile.min_v(),
        v_far_leaf_pu: at_far_leaf(scenario, &profile.v),
        settings: settings.into(),
        newton_tol: options.newton_tol,
        metadata: metadata(),
    };
    let report_path = out.join("report.json");
    write_atomic(&report_path, &json_bytes(&json))?;
    Ok(vec![profile_path, report_path])
}

pub fn run_expand(scenario: &Scenario, order: usize, epsilon: f64, out: &Path) -> Result<Vec<PathBuf>> {
    let series = PerturbationSeries::compute(&scenario.network, &scenario.density, order)?;
    let ids = ids(scenario);
    let mut written = Vec::new();
    for (n, o) in series.orders().iter().enumerate() {
        let n = n + 1;
        let fields = [o.theta.as_ref(), Some(&o.v), o.s.as_ref(), Some(&o.w)];
        let header = [
            "segment_id".to_string(),
            "x_km".into(),
            format!("theta{n}_rad"),
            format!("v{n}_pu"),
            format!("s{n}_pu"),
            format!("w{n}_pu_per_km"),
        ];
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let path = out.join(format!("order_{n}.csv"));
        write_atomic(&path, &csv_bytes(&header, sampled_rows(&ids, &scenario.grid, &fields))?)?;
        written.push(path);
    }
    let assembled = series.assemble(epsilon, order)?;
    let path = out.join("assembled.csv");
    write_atomic(&path, &profile_csv(&ids, &assembled)?)?;
    written.push(path);
    Ok(written)
}

#[derive(Debug, Serialize)]
struct ImpactJson<'a> {
    network: &'a str,
    eps_ev: f64,
    eps_load: f64,
    order: usize,
    max_abs_pu: f64,
    location: Location<'a>,
    delta_v_far_leaf_pu: f64,
}

#[derive(Debug, Serialize)]
struct Location<'a> {
    segment: &'a str,
    x_km: f64,
}

pub fn run_impact(scenario: &Scenario, fraction: f64, order: usize, out: &Path) -> Result<Vec<PathBuf>> {
    check_fraction(fraction)?;
    let series = PerturbationSeries::compute(&scenario.network, &scenario.density, order)?;
    let spec = ImpactSpec::from_fraction(scenario.density.epsilon(), fraction, order);
    let result = ev_impact(&series, &spec)?;
    let ids = ids(scenario);
    let csv_path = out.join("impact.csv");
    let fields = [Some(&result.delta_v)];
    write_atomic(
        &csv_path,
        &csv_bytes(&["segment_id", "x_km", "delta_v_pu"], sampled_rows(&ids, &scenario.grid, &fields))?,
    )?;
    let (seg, x) = result.location_of_max;
    let json = ImpactJson {
        network: &scenario.name,
        eps_ev: spec.eps_ev,
        eps_load: spec.eps_load,
        order,
        max_abs_pu: result.max_abs,
        location: Location { segment: ids[seg], x_km: x },
        delta_v_far_leaf_pu: at_far_leaf(scenario, &result.delta_v),
    };
    let json_path = out.join("impact_summary.json");
    write_atomic(&json_path, &json_bytes(&json))?;
    Ok(vec![csv_path, json_path])
}

fn check_fraction(f: f64) -> Result<()> {
    if (0.0..=1.0).contains(&f) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("EV fraction must lie in [0, 1], got {f}")))
    }
}

/// Series impact against the nonlinear impact at the far leaf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub fraction: f64,
    pub eps_ev: f64,
    pub eps_load: f64,
    pub dv_series: f64,
    pub dv_nonlinear: f64,
    pub error: f64,
}

/// The nonlinear reference is `v(eps) - v(eps_load)` with the load-only run
/// keeping the shape functions and dropping the EV share of the magnitude.
pub fn sweep_rows(
    scenario: &Scenario,
    fractions: &[f64],
    order: usize,
    options: &SolveOptions,
) -> Result<Vec<SweepRow>> {
    for &f in fractions {
        check_fraction(f)?;
    }
    let (net, grid, density) = (&scenario.network, &scenario.grid, &scenario.density);
    let eps = density.epsilon();
    let series = PerturbationSeries::compute(net, density, order)?;
    let (full, _) = solve_tpbv_report(net, density, grid, options)?;
    let v_full = at_far_leaf(scenario, &full.v);
    fractions
        .iter()
        .map(|&fraction| {
            let spec = ImpactSpec::from_fraction(eps, fraction, order);
            let dv_series = at_far_leaf(scenario, &ev_impact(&series, &spec)?.delta_v);
            let (_, load_only) = split(density, spec.eps_ev, spec.eps_load)?;
            let (base, _) = solve_tpbv_report(net, &load_only, grid, options)?;
            let dv_nonlinear = v_full - at_far_leaf(scenario, &base.v);
            info!("fraction {fraction}: series {dv_series:e}, nonlinear {dv_nonlinear:e}");
            Ok(SweepRow {
                fraction,
                eps_ev: spec.eps_ev,
                eps_load: spec.eps_load,
                dv_series,
                dv_nonlinear,
                error: (dv_series - dv_nonlinear).abs(),
            })
        })
        .collect()
}

pub fn run_sweep(
    scenario: &Scenario,
    fractions: &[f64],
    order: usize,
    options: &SolveOptions,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    let rows = sweep_rows(scenario, fractions, order, options)?;
    let header = ["eps_ev_fraction", "eps_ev", "eps_load", "dv_series_pu", "dv_nonlinear_pu", "error_pu"];
    let cells =
        rows.iter().map(|r| [r.fraction, r.eps_ev, r.eps_load, r.dv_series, r.dv_nonlinear, r.error].map(num).to_vec());
    let path = out.join("sweep.csv");
    write_atomic(&path, &csv_bytes(&header, cells)?)?;
    Ok(vec![path])
}

pub const COMPARE_HEADER: [&str; 6] = ["order", "dw_root", "dv_far_leaf", "dtheta_far_leaf", "l2_v", "linf_v"];

pub fn compare_rows(scenario: &Scenario, orders: &[usize], options: &SolveOptions) -> Result<Vec<ConvergenceRow>> {
    if orders.is_empty() {
        return Err(CliError::Usage("--orders needs at least one order".into()));
    }
    Ok(convergence_report(&scenario.network, &scenario.density, &scenario.grid, orders, options)?)
}

pub fn run_compare(scenario: &Scenario, orders: &[usize], options: &SolveOptions, out: &Path) -> Result<Vec<PathBuf>> {
    let rows = compare_rows(scenario, orders, options)?;
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut row = vec![r.order.to_string()];
            row.extend([r.dw_root, r.dv_far_leaf, r.dtheta_far_leaf, r.l2_v, r.linf_v].map(num));
            row
        })
        .collect();
    let csv_path = out.join("compare.csv");
    write_atomic(&csv_path, &csv_bytes(&COMPARE_HEADER, cells)?)?;

    let short: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut row = vec![r.order.to_string()];
            row.extend([r.dw_root, r.dv_far_leaf, r.dtheta_far_leaf, r.l2_v, r.linf_v].map(|x| format!("{x:.6}")));
            row
        })
        .collect();
    let txt_path = out.join("compare.txt");
    write_atomic(&txt_path, aligned_text(&COMPARE_HEADER, &short).as_bytes())?;
    Ok(vec![csv_path, txt_path])
}

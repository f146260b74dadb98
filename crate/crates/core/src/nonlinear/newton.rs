use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::system::{check_shapes, condition_rows, ode_rows, report, rhs_jacobian, Coefficients};
use super::{Profile, ResidualReport};
use crate::density::DensityProfile;
use crate::error::{Error, Result};
use crate::linalg::{mat_mul, mat_vec, solve4, Lu, Mat4, Vec4, IDENTITY};
use crate::network::{EndKind, FeederNetwork, Grid, Topology};
use crate::perturbation::PerturbationSeries;

/// Smallest damping factor tried before a Newton step is declared failed.
const MIN_DAMPING: f64 = 1.0 / 1024.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialGuess {
    /// `1 + eps v_1` etc. from the first-order expansion; falls back to
    /// [`InitialGuess::Flat`] if that start has `v <= 0` anywhere.
    #[default]
    FirstOrder,
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub newton_tol: f64,
    pub max_iterations: usize,
    /// Initial step length in (0, 1]; halved while the residual does not drop.
    pub damping: f64,
    pub initial: InitialGuess,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { newton_tol: 1e-10, max_iterations: 50, damping: 1.0, initial: InitialGuess::FirstOrder }
    }
}

impl SolveOptions {
    fn check(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) || self.max_iterations == 0 || !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidArgument(format!("invalid solve options {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: ResidualReport,
}

/// Solves the discretised boundary-value problem; see the module docs.
pub fn solve_tpbv(
    network: &FeederNetwork,
    density: &DensityProfile,
    grid: &Grid,
    options: &SolveOptions,
) -> Result<Profile> {
    solve_tpbv_report(network, density, grid, options).map(|(p, _)| p)
}

/// [`solve_tpbv`] plus the iteration count and final residuals.
pub fn solve_tpbv_report(
    network: &FeederNetwork,
    density: &DensityProfile,
    grid: &Grid,
    options: &SolveOptions,
) -> Result<(Profile, SolveReport)> {
    options.check()?;
    let topo = check_shapes(network, density, grid)?;
    let coef = Coefficients::new(network, density);

    let mut profile = match options.initial {
        InitialGuess::Flat => Profile::flat(grid),
        InitialGuess::FirstOrder => {
            let first = PerturbationSeries::compute(network, density, 1)?.assemble(density.epsilon(), 1)?;
            if first.min_v() > 0.0 {
                first
            } else {
                Profile::flat(grid)
            }
        }
    };
    let mut res = report(&coef, &topo, grid, &profile);

    for iteration in 0..=options.max_iterations {
        if res.max() <= options.newton_tol {
            return Ok((profile, SolveReport { iterations: iteration, residual: res }));
        }
        if iteration == options.max_iterations {
            break;
        }
        // A singular Newton matrix far outside the existence regime is a stall.
        let step = newton_step(&coef, &topo, grid, &profile).map_err(|e| match e {
            Error::SingularSystem => Error::NonConvergence { iterations: iteration, residual: res.max() },
            other => other,
        })?;

        let mut damping = options.damping;
        let mut collapsed = false;
        loop {
            let trial = apply(&profile, &step, damping);
            if trial.v.iter().all(|v| v > 0.0) {
                let trial_res = report(&coef, &topo, grid, &trial);
                let r = trial_res.max();
                if r.is_finite() && (r < res.max() || r <= options.newton_tol) {
                    profile = trial;
                    res = trial_res;
                    break;
                }
            } else {
                collapsed = true;
            }
            damping *= 0.5;
            if damping < MIN_DAMPING {
                return Err(if collapsed {
                    Error::VoltageCollapse { iteration: iteration + 1 }
                } else {
                    Error::NonConvergence { iterations: iteration + 1, residual: res.max() }
                });
            }
        }
    }
    Err(Error::NonConvergence { iterations: options.max_iterations, residual: res.max() })
}

fn apply(profile: &Profile, step: &[Vec<Vec4>], damping: f64) -> Profile {
    let mut out = profile.clone();
    for (i, seg) in step.iter().enumerate() {
        for (k, d) in seg.iter().enumerate() {
            let y = profile.state(i, k);
            out.set_state(
                i,
                k,
                [y[0] + damping * d[0], y[1] + damping * d[1], y[2] + damping * d[2], y[3] + damping * d[3]],
            );
        }
    }
    out
}

/// Interval map `delta[k+1] = A delta[k] + b` of one segment.
struct Propagator {
    steps: Vec<(Mat4, Vec4)>,
    end_map: Mat4,
    end_offset: Vec4,
}

fn propagator(coef: &Coefficients, grid: &Grid, profile: &Profile, seg: usize, rows: &[Vec4]) -> Result<Propagator> {
    let g = grid.segment(seg);
    let inv_h = 1.0 / g.h();
    let jac: Vec<Mat4> = (0..g.len()).map(|k| rhs_jacobian(&profile.state(seg, k), coef.a[seg][k])).collect();

    let mut steps = Vec::with_capacity(g.len() - 1);
    let mut end_map = IDENTITY;
    let mut end_offset = [0.0; 4];
    for (k, r) in rows.iter().enumerate() {
        let mut lhs = [[0.0; 4]; 4];
        let mut rhs = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let id = if i == j { inv_h } else { 0.0 };
                lhs[i][j] = id - 0.5 * jac[k + 1][i][j];
                rhs[i][j] = id + 0.5 * jac[k][i][j];
            }
        }
        let neg_r = [-r[0], -r[1], -r[2], -r[3]];
        let (a, b) = solve4(&lhs, &rhs, &neg_r)?;
        end_map = mat_mul(&a, &end_map);
        let off = mat_vec(&a, &end_offset);
        end_offset = [off[0] + b[0], off[1] + b[1], off[2] + b[2], off[3] + b[3]];
        steps.push((a, b));
    }
    Ok(Propagator { steps, end_map, end_offset })
}

/// One Newton correction for every sample of every segment.
fn newton_step(coef: &Coefficients, topo: &Topology, grid: &Grid, profile: &Profile) -> Result<Vec<Vec<Vec4>>> {
    let ode = ode_rows(coef, grid, profile);
    let props = (0..grid.len()).map(|i| propagator(coef, grid, profile, i, &ode[i])).collect::<Result<Vec<_>>>()?;

    let cond = condition_rows(topo, profile);
    let n = 4 * grid.len();
    let mut mat = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    let mut row = 0;

    // `coeff * delta_end[component]` of segment i, expressed in its start values.
    let end_term = |mat: &mut [f64], rhs: &mut [f64], row: usize, i: usize, e: usize| {
        for j in 0..4 {
            mat[row * n + 4 * i + j] += props[i].end_map[e][j];
        }
        rhs[row] -= props[i].end_offset[e];
    };

    for i in 0..grid.len() {
        if topo.start(i) == EndKind::Root {
            for e in 0..2 {
                mat[row * n + 4 * i + e] = 1.0;
                rhs[row] = -cond[row].1;
                row += 1;
            }
        }
        match topo.end(i) {
            EndKind::Leaf => {
                for e in 2..4 {
                    rhs[row] = -cond[row].1;
                    end_term(&mut mat, &mut rhs, row, i, e);
                    row += 1;
                }
            }
            EndKind::Junction => {
                for &ch in topo.children(i) {
                    for e in 0..2 {
                        rhs[row] = -cond[row].1;
                        end_term(&mut mat, &mut rhs, row, i, e);
                        mat[row * n + 4 * ch + e] -= 1.0;
                        row += 1;
                    }
                }
                for e in 2..4 {
                    rhs[row] = -cond[row].1;
                    end_term(&mut mat, &mut rhs, row, i, e);
                    for &ch in topo.children(i) {
                        mat[row * n + 4 * ch + e] -= 1.0;
                    }
                    row += 1;
                }
            }
            EndKind::Svr(ratio) => {
                let ch = topo.children(i)[0];
                let child_coeff = [1.0, 1.0 / ratio, 1.0, ratio];
                for e in 0..4 {
                    rhs[row] = -cond[row].1;
                    end_term(&mut mat, &mut rhs, row, i, e);
                    mat[row * n + 4 * ch + e] -= child_coeff[e];
                    row += 1;
                }
            }
            EndKind::Root => unreachable!("root cannot terminate a segment"),
        }
    }
    debug_assert_eq!(row, n);

    let starts = Lu::factor(n, mat)?.solve(&rhs);
    Ok(props
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut d: Vec4 = [starts[4 * i], starts[4 * i + 1], starts[4 * i + 2], starts[4 * i + 3]];
            let mut out = Vec::with_capacity(p.steps.len() + 1);
            out.push(d);
            for (a, b) in &p.steps {
                let ad = mat_vec(a, &d);
                d = [ad[0] + b[0], ad[1] + b[1], ad[2] + b[2], ad[3] + b[3]];
                out.push(d);
            }
            out
        })
        .collect())
}

//! Profile differences, the two error norms, and series-versus-nonlinear
//! convergence tables.

use alloc::vec::Vec;

use crate::density::DensityProfile;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::network::{EndKind, FeederNetwork, Grid, Topology};
use crate::nonlinear::{solve_tpbv, Profile, SolveOptions};
use crate::perturbation::PerturbationSeries;
use crate::quad::trapezoid;

/// Sample-wise `a - b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileDiff {
    pub grid: Grid,
    pub e_theta: Field,
    pub e_v: Field,
    pub e_s: Field,
    pub e_w: Field,
}

pub fn diff(a: &Profile, b: &Profile) -> Result<ProfileDiff> {
    if a.grid != b.grid || !a.is_shape_of(&b.grid) || !b.is_shape_of(&a.grid) {
        return Err(Error::GridMismatch);
    }
    let sub = |x: &Field, y: &Field| x.zip_map(y, |p, q| p - q);
    Ok(ProfileDiff {
        grid: a.grid.clone(),
        e_theta: sub(&a.theta, &b.theta),
        e_v: sub(&a.v, &b.v),
        e_s: sub(&a.s, &b.s),
        e_w: sub(&a.w, &b.w),
    })
}

/// `sqrt(integral e^2 dx)` over every segment, trapezoidal.
pub fn l2_like(e: &Field, grid: &Grid) -> f64 {
    let total: f64 = e
        .segments()
        .iter()
        .enumerate()
        .map(|(i, seg)| {
            let sq: Vec<f64> = seg.iter().map(|x| x * x).collect();
            trapezoid(&sq, grid.segment(i).h())
        })
        .sum();
    libm::sqrt(total)
}

/// `max |e|` over every sample.
pub fn linf_like(e: &Field) -> f64 {
    e.max_abs()
}

/// Segment whose downstream leaf lies furthest from the root.
pub fn far_leaf(topo: &Topology, grid: &Grid) -> usize {
    (0..grid.len())
        .filter(|&i| topo.end(i) == EndKind::Leaf)
        .max_by(|&a, &b| {
            let end = |i: usize| grid.segment(i).start_km() + grid.segment(i).length();
            end(a).total_cmp(&end(b))
        })
        .expect("a valid network has a leaf")
}

/// Absolute errors of the order-`order` series against the nonlinear profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub order: usize,
    /// `|dw|` at the root.
    pub dw_root: f64,
    pub dv_far_leaf: f64,
    pub dtheta_far_leaf: f64,
    pub l2_v: f64,
    pub linf_v: f64,
}

/// Row for an already computed series/nonlinear pair.
pub fn convergence_row(order: usize, series: &Profile, reference: &Profile, topo: &Topology) -> Result<ConvergenceRow> {
    let d = diff(series, reference)?;
    let leaf = far_leaf(topo, &d.grid);
    let last = |f: &Field| f[leaf][f[leaf].len() - 1].abs();
    let dw_root =
        (0..d.grid.len()).filter(|&i| topo.start(i) == EndKind::Root).map(|i| d.e_w[i][0].abs()).fold(0.0, f64::max);
    Ok(ConvergenceRow {
        order,
        dw_root,
        dv_far_leaf: last(&d.e_v),
        dtheta_far_leaf: last(&d.e_theta),
        l2_v: l2_like(&d.e_v, &d.grid),
        linf_v: linf_like(&d.e_v),
    })
}

/// Solves the nonlinear problem once and compares every requested truncation
/// order against it.
pub fn convergence_report(
    network: &FeederNetwork,
    density: &DensityProfile,
    grid: &Grid,
    orders: &[usize],
    options: &SolveOptions,
) -> Result<Vec<ConvergenceRow>> {
    let topo = network.topology()?;
    let reference = solve_tpbv(network, density, grid, options)?;
    let max_order = orders.iter().copied().max().unwrap_or(1).max(1);
    let series = PerturbationSeries::compute(network, density, max_order)?;
    orders
        .iter()
        .map(|&n| {
            let assembled = series.assemble(density.epsilon(), n)?;
            convergence_row(n, &assembled, &reference, &topo)
        })
        .collect()
}

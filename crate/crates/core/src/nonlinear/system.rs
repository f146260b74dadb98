use alloc::vec::Vec;

use super::Profile;
use crate::density::DensityProfile;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::linalg::{Mat4, Vec4};
use crate::network::{EndKind, FeederNetwork, Grid, Topology};

/// Physical right-hand-side coefficients per sample:
/// `a = (G p + B q)/Y^2`, `c = (B p - G q)/Y^2`.
pub(crate) struct Coefficients {
    pub a: Field,
    pub c: Field,
}

impl Coefficients {
    pub(crate) fn new(network: &FeederNetwork, density: &DensityProfile) -> Self {
        let eps = density.epsilon();
        let mut a = Field::zeros(density.grid());
        let mut c = Field::zeros(density.grid());
        for (i, seg) in network.segments.iter().enumerate() {
            let (g, b) = seg.coefficients();
            let p = &density.p_tilde()[i];
            let q = &density.q_tilde()[i];
            for k in 0..p.len() {
                a[i][k] = eps * (g * p[k] + b * q[k]);
                c[i][k] = eps * (b * p[k] - g * q[k]);
            }
        }
        Self { a, c }
    }
}

#[inline]
pub(crate) fn rhs(y: &Vec4, a: f64, c: f64) -> Vec4 {
    let [_, v, s, w] = *y;
    let v2 = v * v;
    [-s / v2, w, c, s * s / (v2 * v) - a / v]
}

#[inline]
pub(crate) fn rhs_jacobian(y: &Vec4, a: f64) -> Mat4 {
    let [_, v, s, _] = *y;
    let v2 = v * v;
    let v3 = v2 * v;
    [
        [0.0, 2.0 * s / v3, -1.0 / v2, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, -3.0 * s * s / (v3 * v) + a / v2, 2.0 * s / v3, 0.0],
    ]
}

/// Max-norm residual of each equation family of the discrete system.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResidualReport {
    /// Central-difference ODE rows, all segments.
    pub ode: f64,
    /// Root (`theta = 0`, `v = 1`) and leaf (`s = 0`, `w = 0`) rows.
    pub boundary: f64,
    /// Junction continuity and sum rows.
    pub junction: f64,
    /// Regulator jump rows.
    pub svr: f64,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        self.ode.max(self.boundary).max(self.junction).max(self.svr)
    }
}

pub(crate) fn check_shapes(network: &FeederNetwork, density: &DensityProfile, grid: &Grid) -> Result<Topology> {
    let topo = network.topology()?;
    if !grid.matches(network) || density.grid() != grid {
        return Err(Error::GridMismatch);
    }
    Ok(topo)
}

/// Residual `(y[k+1] - y[k]) / h - (F[k] + F[k+1]) / 2` of every interval.
pub(crate) fn ode_rows(coef: &Coefficients, grid: &Grid, profile: &Profile) -> Vec<Vec<Vec4>> {
    (0..grid.len())
        .map(|i| {
            let h = grid.segment(i).h();
            let n = grid.segment(i).len();
            let mut prev = profile.state(i, 0);
            let mut f_prev = rhs(&prev, coef.a[i][0], coef.c[i][0]);
            (1..n)
                .map(|k| {
                    let y = profile.state(i, k);
                    let f = rhs(&y, coef.a[i][k], coef.c[i][k]);
                    let mut r = [0.0; 4];
                    for e in 0..4 {
                        r[e] = (y[e] - prev[e]) / h - 0.5 * (f[e] + f_prev[e]);
                    }
                    prev = y;
                    f_prev = f;
                    r
                })
                .collect()
        })
        .collect()
}

/// Condition rows as `(family, value)`; order matches the Newton coupling
/// system, four rows per segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Family {
    Boundary,
    Junction,
    Svr,
}

pub(crate) fn condition_rows(topo: &Topology, profile: &Profile) -> Vec<(Family, f64)> {
    let mut rows = Vec::with_capacity(4 * topo.num_segments());
    for i in 0..topo.num_segments() {
        let last = profile.v[i].len() - 1;
        let start = profile.state(i, 0);
        let end = profile.state(i, last);
        if topo.start(i) == EndKind::Root {
            rows.push((Family::Boundary, start[0]));
            rows.push((Family::Boundary, start[1] - 1.0));
        }
        match topo.end(i) {
            EndKind::Leaf => {
                rows.push((Family::Boundary, end[2]));
                rows.push((Family::Boundary, end[3]));
            }
            EndKind::Junction => {
                let (mut s_sum, mut w_sum) = (0.0, 0.0);
                for &ch in topo.children(i) {
                    let c0 = profile.state(ch, 0);
                    rows.push((Family::Junction, end[0] - c0[0]));
                    rows.push((Family::Junction, end[1] - c0[1]));
                    s_sum += c0[2];
                    w_sum += c0[3];
                }
                rows.push((Family::Junction, end[2] - s_sum));
                rows.push((Family::Junction, end[3] - w_sum));
            }
            EndKind::Svr(n) => {
                let c0 = profile.state(topo.children(i)[0], 0);
                rows.push((Family::Svr, end[0] - c0[0]));
                rows.push((Family::Svr, end[1] - c0[1] / n));
                rows.push((Family::Svr, end[2] - c0[2]));
                rows.push((Family::Svr, end[3] - n * c0[3]));
            }
            EndKind::Root => unreachable!("root cannot terminate a segment"),
        }
    }
    rows
}

pub(crate) fn report(coef: &Coefficients, topo: &Topology, grid: &Grid, profile: &Profile) -> ResidualReport {
    let mut out = ResidualReport::default();
    for seg in ode_rows(coef, grid, profile) {
        for r in seg {
            for x in r {
                out.ode = out.ode.max(x.abs());
            }
        }
    }
    for (family, x) in condition_rows(topo, profile) {
        let slot = match family {
            Family::Boundary => &mut out.boundary,
            Family::Junction => &mut out.junction,
            Family::Svr => &mut out.svr,
        };
        *slot = slot.max(x.abs());
        if x.is_nan() {
            *slot = f64::NAN;
        }
    }
    out
}

/// Recomputes the discrete residual of `profile` for each equation family.
pub fn residual(
    network: &FeederNetwork,
    density: &DensityProfile,
    grid: &Grid,
    profile: &Profile,
) -> Result<ResidualReport> {
    let topo = check_shapes(network, density, grid)?;
    if !profile.is_shape_of(grid) {
        return Err(Error::GridMismatch);
    }
    let coef = Coefficients::new(network, density);
    Ok(report(&coef, &topo, grid, profile))
}

/// Per-interval ODE residuals `[theta, v, s, w]`, indexed by segment then by
/// interval `k` (between samples `k` and `k + 1`).
pub fn interval_residuals(
    network: &FeederNetwork,
    density: &DensityProfile,
    grid: &Grid,
    profile: &Profile,
) -> Result<Vec<Vec<[f64; 4]>>> {
    check_shapes(network, density, grid)?;
    if !profile.is_shape_of(grid) {
        return Err(Error::GridMismatch);
    }
    let coef = Coefficients::new(network, density);
    Ok(ode_rows(&coef, grid, profile))
}

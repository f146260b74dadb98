use alloc::format;
use alloc::vec::Vec;

use super::Profile;
use crate::density::DensityProfile;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::network::{Grid, Segment};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    /// Required `|w(L)|`.
    pub tol: f64,
    /// Search interval for the initial gradient `eta = w(0)`.
    pub eta_min: f64,
    pub eta_max: f64,
    /// Scan resolution per side of zero when bracketing.
    pub scan_points: usize,
    pub max_iterations: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self { tol: 1e-12, eta_min: -1.0, eta_max: 1.0, scan_points: 400, max_iterations: 200 }
    }
}

type State = [f64; 4];

struct Shooter<'a> {
    density: &'a DensityProfile,
    xs: Vec<f64>,
    h: f64,
    g_coef: f64,
    b_coef: f64,
    s0: f64,
}

impl Shooter<'_> {
    /// Physical `(a, c)` at local coordinate `x`.
    fn coefficients(&self, x: f64) -> (f64, f64) {
        let (p, q) = self.density.tilde_at(0, x);
        let eps = self.density.epsilon();
        (eps * (self.g_coef * p + self.b_coef * q), eps * (self.b_coef * p - self.g_coef * q))
    }

    fn deriv(&self, x: f64, y: &State) -> Option<State> {
        let [_, v, s, w] = *y;
        if !(v > 0.0) || !v.is_finite() {
            return None;
        }
        let (a, c) = self.coefficients(x);
        Some([-s / (v * v), w, c, s * s / (v * v * v) - a / v])
    }

    /// RK4 trajectory from `(0, 1, s(0), eta)`; `None` if `v` leaves `(0, inf)`.
    fn trajectory(&self, eta: f64) -> Option<Vec<State>> {
        let mut y: State = [0.0, 1.0, self.s0, eta];
        let mut out = Vec::with_capacity(self.xs.len());
        out.push(y);
        let h = self.h;
        for &x in &self.xs[..self.xs.len() - 1] {
            let add = |y: &State, k: &State, f: f64| -> State {
                [y[0] + f * k[0], y[1] + f * k[1], y[2] + f * k[2], y[3] + f * k[3]]
            };
            let k1 = self.deriv(x, &y)?;
            let k2 = self.deriv(x + 0.5 * h, &add(&y, &k1, 0.5 * h))?;
            let k3 = self.deriv(x + 0.5 * h, &add(&y, &k2, 0.5 * h))?;
            let k4 = self.deriv(x + h, &add(&y, &k3, h))?;
            for e in 0..4 {
                y[e] += h / 6.0 * (k1[e] + 2.0 * k2[e] + 2.0 * k3[e] + k4[e]);
            }
            if !(y[1] > 0.0) || y.iter().any(|x| !x.is_finite()) {
                return None;
            }
            out.push(y);
        }
        Some(out)
    }

    fn terminal_gradient(&self, eta: f64) -> Option<f64> {
        self.trajectory(eta).map(|t| t[t.len() - 1][3])
    }
}

/// Single-segment solution by shooting on the initial voltage gradient.
///
/// `s(0) = -integral_0^L (B p - G q)/Y^2` by composite Simpson, then RK4 for
/// `(theta, v, s, w)` on the grid spacing with `v(0) = 1, w(0) = eta`, and
/// Brent's method on `w(L; eta) = 0` once a sign change is bracketed by
/// scanning outwards from `eta = 0`.
pub fn shooting_oracle(
    segment: &Segment,
    density: &DensityProfile,
    grid: &Grid,
    options: &ShootingOptions,
) -> Result<Profile> {
    if grid.len() != 1 || density.grid() != grid || grid.segment(0).length() != segment.length {
        return Err(Error::GridMismatch);
    }
    if !(options.tol > 0.0) || !(options.eta_min < 0.0 && options.eta_max > 0.0) || options.scan_points == 0 {
        return Err(Error::InvalidArgument(format!("invalid shooting options {options:?}")));
    }
    if segment.admittance_sq() <= 0.0 {
        return Err(Error::InvalidArgument(format!("segment `{}` has zero admittance", segment.id)));
    }

    let g = grid.segment(0);
    let xs: Vec<f64> = (0..g.len()).map(|k| g.local(k)).collect();
    let y2 = segment.admittance_sq();
    let mut shooter =
        Shooter { density, xs, h: g.h(), g_coef: segment.conductance / y2, b_coef: segment.susceptance / y2, s0: 0.0 };
    let mut total = 0.0;
    for pair in shooter.xs.windows(2) {
        let (x0, x1) = (pair[0], pair[1]);
        let c = |x: f64| shooter.coefficients(x).1;
        total += (x1 - x0) / 6.0 * (c(x0) + 4.0 * c(0.5 * (x0 + x1)) + c(x1));
    }
    shooter.s0 = -total;

    let eta = find_root(&shooter, options)?;
    let traj = shooter.trajectory(eta).ok_or(Error::VoltageCollapse { iteration: 0 })?;
    let column = |e: usize| Field::from_segments(alloc::vec![traj.iter().map(|y| y[e]).collect()]);
    Ok(Profile { grid: grid.clone(), theta: column(0), v: column(1), s: column(2), w: column(3) })
}

fn find_root(shooter: &Shooter<'_>, opt: &ShootingOptions) -> Result<f64> {
    let failure = Error::BracketFailure { lo: opt.eta_min, hi: opt.eta_max };
    let phi0 = shooter.terminal_gradient(0.0).ok_or(failure.clone())?;
    if phi0.abs() <= opt.tol {
        return Ok(0.0);
    }

    // Walk outwards on both sides; a collapsed trajectory ends that side.
    let mut sides = [(0.0, phi0, opt.eta_max, true), (0.0, phi0, opt.eta_min, true)];
    for j in 1..=opt.scan_points {
        for side in sides.iter_mut() {
            let (prev_eta, prev_phi, limit, alive) = *side;
            if !alive {
                continue;
            }
            let eta = limit * j as f64 / opt.scan_points as f64;
            match shooter.terminal_gradient(eta) {
                Some(phi) if phi.abs() <= opt.tol => return Ok(eta),
                Some(phi) if phi.signum() != prev_phi.signum() => {
                    return brent(shooter, prev_eta, prev_phi, eta, phi, opt);
                }
                Some(phi) => *side = (eta, phi, limit, true),
                None => side.3 = false,
            }
        }
        if sides.iter().all(|s| !s.3) {
            break;
        }
    }
    Err(failure)
}

/// Brent's method on a bracket `[a, b]` with `f(a) f(b) < 0`.
fn brent(
    shooter: &Shooter<'_>,
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    mut fb: f64,
    opt: &ShootingOptions,
) -> Result<f64> {
    let failure = Error::BracketFailure { lo: a.min(b), hi: a.max(b) };
    if fa.abs() < fb.abs() {
        core::mem::swap(&mut a, &mut b);
        core::mem::swap(&mut fa, &mut fb);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut bisected = true;
    for _ in 0..opt.max_iterations {
        if fb.abs() <= opt.tol {
            return Ok(b);
        }
        let mut s = if fa != fc && fb != fc {
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let outside = !((s > lo.min(b)) && (s < lo.max(b)));
        let slow = if bisected { (s - b).abs() >= (b - c).abs() / 2.0 } else { (s - b).abs() >= (c - d).abs() / 2.0 };
        if outside || slow || (b - a).abs() < f64::EPSILON * b.abs().max(1e-300) {
            s = 0.5 * (a + b);
            bisected = true;
        } else {
            bisected = false;
        }
        if s == a || s == b {
            // interval exhausted at double precision
            return if fb.abs() <= opt.tol { Ok(b) } else { Err(failure) };
        }
        let fs = shooter.terminal_gradient(s).ok_or(failure.clone())?;
        d = c;
        c = b;
        fc = fb;
        if fa.signum() != fs.signum() {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            core::mem::swap(&mut a, &mut b);
            core::mem::swap(&mut fa, &mut fb);
        }
    }
    if fb.abs() <= opt.tol {
        Ok(b)
    } else {
        Err(failure)
    }
}

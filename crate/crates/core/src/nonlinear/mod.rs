//! The nonlinear two-point boundary-value problem over a feeder tree.
//!
//! [`solve_tpbv`] discretises all four equations with the central
//! (trapezoidal) scheme
//!
//! ```text
//! (y[k+1] - y[k]) / h = (F(x[k], y[k]) + F(x[k+1], y[k+1])) / 2
//! ```
//!
//! on every segment, appends the root, leaf, junction and regulator rows, and
//! runs damped Newton. Each Newton system is solved by eliminating the
//! block-bidiagonal segment equations onto the four start values of every
//! segment, which leaves a dense `4 * segments` coupling system.
//!
//! [`shooting_oracle`] solves a single segment by an unrelated route: Simpson
//! quadrature of `s`, classical RK4 for `(theta, v, s, w)` from `v(0) = 1,
//! w(0) = eta`, and a bracketed Brent search on `w(L; eta) = 0`.

mod newton;
mod shooting;
mod system;

pub use newton::{solve_tpbv, solve_tpbv_report, InitialGuess, SolveOptions, SolveReport};
pub use shooting::{shooting_oracle, ShootingOptions};
pub use system::{interval_residuals, residual, ResidualReport};

use crate::field::Field;
use crate::network::Grid;

/// Sampled solution fields over the whole network.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub grid: Grid,
    /// Phase in rad.
    pub theta: Field,
    /// Amplitude in pu.
    pub v: Field,
    /// `-v^2 dtheta/dx` in pu.
    pub s: Field,
    /// `dv/dx` in pu/km.
    pub w: Field,
}

impl Profile {
    /// `theta = 0, v = 1, s = 0, w = 0`: the unloaded feeder.
    pub fn flat(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            theta: Field::zeros(grid),
            v: Field::constant(grid, 1.0),
            s: Field::zeros(grid),
            w: Field::zeros(grid),
        }
    }

    pub fn min_v(&self) -> f64 {
        self.v.iter().fold(f64::INFINITY, f64::min)
    }

    pub fn is_shape_of(&self, grid: &Grid) -> bool {
        self.theta.matches(grid) && self.v.matches(grid) && self.s.matches(grid) && self.w.matches(grid)
    }

    pub(crate) fn state(&self, seg: usize, k: usize) -> [f64; 4] {
        [self.theta[seg][k], self.v[seg][k], self.s[seg][k], self.w[seg][k]]
    }

    pub(crate) fn set_state(&mut self, seg: usize, k: usize, y: [f64; 4]) {
        self.theta[seg][k] = y[0];
        self.v[seg][k] = y[1];
        self.s[seg][k] = y[2];
        self.w[seg][k] = y[3];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{coarse_grain, Category, CoarseGrainSpec, DensityProfile, PointInjection};
    use crate::error::Error;
    use crate::network::{discretize, FeederNetwork, Node, NodeKind, Segment};

    const G: f64 = 3.881;
    const B: f64 = 6.856;

    fn single_load(scale: f64, h: f64) -> (FeederNetwork, DensityProfile) {
        let net = FeederNetwork::single("A", 5.0, G, B);
        let grid = discretize(&net, h).unwrap();
        let inj = [PointInjection::new("A", 2.5, -0.4 * scale, -0.05 * scale, Category::Load)];
        let d = coarse_grain(&inj, CoarseGrainSpec::default(), &net, &grid, 1.0).unwrap();
        (net, d)
    }

    #[test]
    fn unloaded_feeder_is_flat() {
        let net = FeederNetwork::single("A", 5.0, G, B);
        let grid = discretize(&net, 0.01).unwrap();
        let d = DensityProfile::zero(grid.clone());
        let (p, report) = solve_tpbv_report(&net, &d, &grid, &SolveOptions::default()).unwrap();
        assert_eq!(p, Profile::flat(&grid));
        assert_eq!(report.iterations, 0);
        let shot = shooting_oracle(&net.segments[0], &d, &grid, &ShootingOptions::default()).unwrap();
        assert_eq!(shot, Profile::flat(&grid));
    }

    #[test]
    fn flat_profile_residual_is_the_load_term() {
        // at theta = 0, v = 1, s = w = 0 only the s and w rows see the density:
        // r_s = -(c[k] + c[k+1]) / 2, r_w = (a[k] + a[k+1]) / 2
        let (net, d) = single_load(1.0, 0.01);
        let grid = d.grid().clone();
        let rows = interval_residuals(&net, &d, &grid, &Profile::flat(&grid)).unwrap();
        let y2 = G * G + B * B;
        let (p, q) = (d.p(), d.q());
        let mut max = 0.0f64;
        for (k, r) in rows[0].iter().enumerate() {
            let a = |j: usize| (G * p[0][j] + B * q[0][j]) / y2;
            let c = |j: usize| (B * p[0][j] - G * q[0][j]) / y2;
            assert_eq!(r[0], 0.0);
            assert_eq!(r[1], 0.0);
            assert!((r[2] + 0.5 * (c(k) + c(k + 1))).abs() < 1e-14);
            assert!((r[3] - 0.5 * (a(k) + a(k + 1))).abs() < 1e-14);
            max = max.max(r[2].abs()).max(r[3].abs());
        }
        let report = residual(&net, &d, &grid, &Profile::flat(&grid)).unwrap();
        assert_eq!(report.ode, max);
        assert_eq!(report.boundary, 0.0);
    }

    #[test]
    fn perturbation_is_local() {
        let (net, d) = single_load(1.0, 0.01);
        let grid = d.grid().clone();
        let sol = solve_tpbv(&net, &d, &grid, &SolveOptions::default()).unwrap();
        let mut bumped = sol.clone();
        let j = 200;
        bumped.v[0][j] += 1e-3;
        let before = interval_residuals(&net, &d, &grid, &sol).unwrap();
        let after = interval_residuals(&net, &d, &grid, &bumped).unwrap();
        for (k, (x, y)) in before[0].iter().zip(&after[0]).enumerate() {
            let changed = x != y;
            // intervals k touching sample j: k = j - 1 and k = j
            assert_eq!(changed, k + 1 == j || k == j, "interval {k}");
        }
    }

    #[test]
    fn solution_satisfies_tolerance_and_sign() {
        let (net, d) = single_load(1.0, 0.01);
        let grid = d.grid().clone();
        let opts = SolveOptions::default();
        let (p, report) = solve_tpbv_report(&net, &d, &grid, &opts).unwrap();
        assert!(residual(&net, &d, &grid, &p).unwrap().max() <= opts.newton_tol);
        assert!(report.residual.max() <= opts.newton_tol);
        assert!(p.w.iter().all(|w| w <= opts.newton_tol));
        assert!(p.v[0].windows(2).all(|x| x[1] <= x[0] + 1e-12));
        assert_eq!(p.theta[0][0], 0.0);
        assert!((p.v[0][0] - 1.0).abs() <= 1e-10);
        // flat start reaches the same answer
        let flat = solve_tpbv(&net, &d, &grid, &SolveOptions { initial: InitialGuess::Flat, ..opts }).unwrap();
        assert!(flat.v.zip_map(&p.v, |a, b| a - b).max_abs() < 1e-9);
    }

    #[test]
    fn deterministic() {
        let (net, d) = single_load(1.0, 0.01);
        let grid = d.grid().clone();
        let a = solve_tpbv(&net, &d, &grid, &SolveOptions::default()).unwrap();
        let b = solve_tpbv(&net, &d, &grid, &SolveOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn agrees_with_shooting() {
        let (net, d) = single_load(1.0, 0.005);
        let grid = d.grid().clone();
        let fd = solve_tpbv(&net, &d, &grid, &SolveOptions::default()).unwrap();
        let shot = shooting_oracle(&net.segments[0], &d, &grid, &ShootingOptions::default()).unwrap();
        let err = fd.v.zip_map(&shot.v, |a, b| a - b).max_abs();
        assert!(err < 1e-5, "{err}");
        assert!(shot.w[0].last().unwrap().abs() <= 1e-12);
    }

    #[test]
    fn heavy_load_fails_without_invalid_profile() {
        let (net, d) = single_load(20.0, 0.01);
        let grid = d.grid().clone();
        match solve_tpbv(&net, &d, &grid, &SolveOptions::default()) {
            Err(Error::VoltageCollapse { .. } | Error::NonConvergence { .. }) => {}
            other => panic!("expected failure, got {:?}", other.map(|p| p.min_v())),
        }
        let shot = shooting_oracle(&net.segments[0], &d, &grid, &ShootingOptions::default());
        assert!(matches!(shot, Err(Error::BracketFailure { .. } | Error::VoltageCollapse { .. })));
    }

    #[test]
    fn branch_and_regulator_rows_hold() {
        let ratio = 1.05;
        let net = FeederNetwork::new(
            alloc::vec![
                Segment::new("A", 1.0, 2.329, 4.113, "bank", "T"),
                Segment::new("B", 0.8, 2.329, 4.113, "T", "b"),
                Segment::new("C1", 0.6, 2.329, 4.113, "T", "svr"),
                Segment::new("C2", 0.6, 2.329, 4.113, "svr", "c"),
            ],
            alloc::vec![
                Node::new("bank", NodeKind::Root),
                Node::new("T", NodeKind::Junction),
                Node::new("b", NodeKind::Leaf),
                Node::new("svr", NodeKind::Svr { turn_ratio: ratio }),
                Node::new("c", NodeKind::Leaf),
            ],
        );
        let grid = discretize(&net, 0.005).unwrap();
        let inj = [
            PointInjection::new("A", 0.5, -0.3, -0.05, Category::Load),
            PointInjection::new("B", 0.4, -0.4, 0.0, Category::Ev),
            PointInjection::new("C2", 0.3, -0.3, -0.02, Category::Load),
        ];
        let d = coarse_grain(&inj, CoarseGrainSpec::default(), &net, &grid, 1.0).unwrap();
        let p = solve_tpbv(&net, &d, &grid, &SolveOptions::default()).unwrap();
        let end = |f: &crate::field::Field, i: usize| *f[i].last().unwrap();
        assert!((end(&p.s, 0) - p.s[1][0] - p.s[2][0]).abs() <= 1e-10);
        assert!((end(&p.w, 0) - p.w[1][0] - p.w[2][0]).abs() <= 1e-10);
        assert!((end(&p.v, 2) * ratio - p.v[3][0]).abs() <= 1e-10);
        assert!((end(&p.w, 2) - ratio * p.w[3][0]).abs() <= 1e-10);
        assert!(p.min_v() > 0.0);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let (net, d) = single_load(1.0, 0.01);
        let other = discretize(&net, 0.02).unwrap();
        assert_eq!(solve_tpbv(&net, &d, &other, &SolveOptions::default()), Err(Error::GridMismatch));
        let bad = SolveOptions { damping: 0.0, ..SolveOptions::default() };
        assert!(matches!(solve_tpbv(&net, &d, d.grid(), &bad), Err(Error::InvalidArgument(_))));
    }
}

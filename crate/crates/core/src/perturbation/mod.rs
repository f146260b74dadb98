//! Regular-perturbation expansion in the loading magnitude `eps`.
//!
//! With `p = eps p_tilde`, `q = eps q_tilde` the profile is expanded as
//! `theta ~ sum eps^n theta_n`, `v ~ 1 + sum eps^n v_n`, and likewise for `s`
//! and `w`. Every order is a linear initial-value problem:
//!
//! ```text
//! n = 1:  theta' = -s1                  v' = w1   s' = c   w' = -a
//! n = 2:  theta' = 2 v1 s1              v' = w2   s' = 0   w' = s1^2 + a v1
//! n = 3:  theta' = 4 v1^2 s1 + (2 v2 + v1^2) s1
//!                                       v' = w3   s' = 0   w' = -3 s1^2 v1 + a v2
//! n = 4:  theta' = -2 v1 [4 v1^2 s1 + (2 v2 + v1^2) s1]
//!                  - (2 v2 + v1^2) 2 v1 s1 - 2 (v3 + v1 v2)(-s1)
//!                                       v' = w4   s' = 0   w' = -3 s1^2 v2 + a v3
//! n >= 3 (v, w only):                   v' = wn   wn' = -3 s1^2 v(n-2) + a v(n-1)
//! ```
//!
//! where `a = (G p_tilde + B q_tilde)/Y^2` and `c = (B p_tilde - G q_tilde)/Y^2`.
//! `s_n` and `w_n` vanish at leaves and are integrated towards the root with
//! `s_up = sum(s_down)`, `w_up = sum(w_down)` at junctions; `theta_n` and `v_n`
//! vanish at the root and are integrated towards the leaves, continuous at
//! junctions. A regulator with ratio `n` maps `v_k(xi+) = n v_k(xi-)` and
//! `w_k(xi-) = n w_k(xi+)` at every order. All integrals are composite
//! trapezoidal on the solver grid.
//!
//! `theta_n` and `s_n` are only available up to order 4.

mod impact;

pub use impact::{ev_impact, ImpactResult, ImpactSpec};

use alloc::vec::Vec;

use crate::density::DensityProfile;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::network::{EndKind, FeederNetwork, Grid, Topology};
use crate::nonlinear::Profile;
use crate::quad::{cumulative_backward, cumulative_forward};

/// Highest order with `theta_n` and `s_n` equations.
pub const MAX_FULL_ORDER: usize = 4;

/// Order-`n` coefficient fields. `theta` and `s` are `None` above order 4.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFields {
    pub theta: Option<Field>,
    pub v: Field,
    pub s: Option<Field>,
    pub w: Field,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSeries {
    grid: Grid,
    /// `eps` of the density the shape functions came from.
    epsilon: f64,
    orders: Vec<OrderFields>,
}

/// `a` and `c` of the scaled density, per sample.
struct ScaledCoefficients {
    a: Field,
    c: Field,
}

impl ScaledCoefficients {
    fn new(network: &FeederNetwork, density: &DensityProfile) -> Self {
        let mut a = Field::zeros(density.grid());
        let mut c = Field::zeros(density.grid());
        for (i, seg) in network.segments.iter().enumerate() {
            let (g, b) = seg.coefficients();
            let p = &density.p_tilde()[i];
            let q = &density.q_tilde()[i];
            for k in 0..p.len() {
                a[i][k] = g * p[k] + b * q[k];
                c[i][k] = b * p[k] - g * q[k];
            }
        }
        Self { a, c }
    }
}

fn check(network: &FeederNetwork, density: &DensityProfile) -> Result<Topology> {
    let topo = network.topology()?;
    if !density.grid().matches(network) {
        return Err(Error::GridMismatch);
    }
    Ok(topo)
}

/// Integrates `f' = rhs` from the leaves towards the root. Terminal values are
/// zero at leaves, the sum of the children's start values at junctions, and
/// `jump(n) * child start` across a regulator of ratio `n`.
fn integrate_towards_root(topo: &Topology, grid: &Grid, rhs: &Field, jump: impl Fn(f64) -> f64) -> Field {
    let mut out = Field::zeros(grid);
    for i in topo.postorder() {
        let terminal = match topo.end(i) {
            EndKind::Leaf => 0.0,
            EndKind::Junction => topo.children(i).iter().map(|&c| out[c][0]).sum(),
            EndKind::Svr(n) => jump(n) * out[topo.children(i)[0]][0],
            EndKind::Root => unreachable!("root cannot terminate a segment"),
        };
        let vals = cumulative_backward(&rhs[i], grid.segment(i).h(), terminal);
        out[i].copy_from_slice(&vals);
    }
    out
}

/// Integrates `f' = rhs` from the root towards the leaves: zero at the root,
/// continuous at junctions, `jump(n) * parent end` after a regulator.
fn integrate_towards_leaves(topo: &Topology, grid: &Grid, rhs: &Field, jump: impl Fn(f64) -> f64) -> Field {
    let mut out = Field::zeros(grid);
    for &i in topo.preorder() {
        let initial = match (topo.start(i), topo.parent(i)) {
            (EndKind::Root, _) => 0.0,
            (EndKind::Junction, Some(p)) => *out[p].last().expect("non-empty"),
            (EndKind::Svr(n), Some(p)) => jump(n) * *out[p].last().expect("non-empty"),
            _ => unreachable!("validated topology"),
        };
        let vals = cumulative_forward(&rhs[i], grid.segment(i).h(), initial);
        out[i].copy_from_slice(&vals);
    }
    out
}

fn unit(_: f64) -> f64 {
    1.0
}

fn ratio(n: f64) -> f64 {
    n
}

/// `w` from its derivative, then `v` from `w`.
fn vw_from(topo: &Topology, grid: &Grid, dw: &Field) -> (Field, Field) {
    let w = integrate_towards_root(topo, grid, dw, ratio);
    let v = integrate_towards_leaves(topo, grid, &w, ratio);
    (v, w)
}

fn require(lower: &PerturbationSeries, order: usize, grid: &Grid) -> Result<()> {
    if lower.grid != *grid {
        return Err(Error::GridMismatch);
    }
    if lower.orders.len() + 1 < order {
        return Err(Error::MissingLowerOrder { order, missing: lower.orders.len() + 1 });
    }
    Ok(())
}

fn s1(lower: &PerturbationSeries) -> &Field {
    lower.orders[0].s.as_ref().expect("order 1 always carries s")
}

/// Full order-`n` fields for `n` in `1..=4`.
pub fn solve_order(
    n: usize,
    network: &FeederNetwork,
    density: &DensityProfile,
    lower: &PerturbationSeries,
) -> Result<OrderFields> {
    if !(1..=MAX_FULL_ORDER).contains(&n) {
        return Err(Error::UnavailableOrder { field: "theta", requested: n, available: MAX_FULL_ORDER });
    }
    let topo = check(network, density)?;
    let grid = density.grid();
    require(lower, n, grid)?;
    let coef = ScaledCoefficients::new(network, density);
    let zero = Field::zeros(grid);

    if n == 1 {
        let s = integrate_towards_root(&topo, grid, &coef.c, unit);
        let (v, w) = vw_from(&topo, grid, &coef.a.map(|x| -x));
        let theta = integrate_towards_leaves(&topo, grid, &s.map(|x| -x), unit);
        return Ok(OrderFields { theta: Some(theta), v, s: Some(s), w });
    }

    let v_of = |k: usize| &lower.orders[k - 1].v;
    let s1 = s1(lower);
    let v1 = v_of(1);
    let (dw, dtheta) = match n {
        2 => {
            let dw = s1.zip_map(&coef.a.zip_map(v1, |a, v| a * v), |s, av| s * s + av);
            let dtheta = v1.zip_map(s1, |v, s| 2.0 * v * s);
            (dw, dtheta)
        }
        3 => {
            let v2 = v_of(2);
            let dw = vw_rhs(s1, v1, v2, &coef.a);
            let dtheta = Field::from_segments(
                (0..grid.len())
                    .map(|i| (0..grid.segment(i).len()).map(|k| theta3_rhs(v1[i][k], v2[i][k], s1[i][k])).collect())
                    .collect(),
            );
            (dw, dtheta)
        }
        4 => {
            let (v2, v3) = (v_of(2), v_of(3));
            let dw = vw_rhs(s1, v2, v3, &coef.a);
            let dtheta = Field::from_segments(
                (0..grid.len())
                    .map(|i| {
                        (0..grid.segment(i).len())
                            .map(|k| {
                                let (v1, v2, v3, s1) = (v1[i][k], v2[i][k], v3[i][k], s1[i][k]);
                                -2.0 * v1 * theta3_rhs(v1, v2, s1)
                                    - (2.0 * v2 + v1 * v1) * 2.0 * v1 * s1
                                    - 2.0 * (v3 + v1 * v2) * (-s1)
                            })
                            .collect()
                    })
                    .collect(),
            );
            (dw, dtheta)
        }
        _ => unreachable!(),
    };
    let (v, w) = vw_from(&topo, grid, &dw);
    let theta = integrate_towards_leaves(&topo, grid, &dtheta, unit);
    Ok(OrderFields { theta: Some(theta), v, s: Some(zero), w })
}

fn theta3_rhs(v1: f64, v2: f64, s1: f64) -> f64 {
    4.0 * v1 * v1 * s1 + (2.0 * v2 + v1 * v1) * s1
}

/// `-3 s1^2 v_older + a v_newer`.
fn vw_rhs(s1: &Field, v_older: &Field, v_newer: &Field, a: &Field) -> Field {
    let cubic = s1.zip_map(v_older, |s, v| -3.0 * s * s * v);
    cubic.zip_map(&a.zip_map(v_newer, |a, v| a * v), |x, y| x + y)
}

/// `(v_n, w_n)` for any `n >= 3` from `s1`, `v_{n-2}`, `v_{n-1}`.
pub fn solve_vw_order(
    n: usize,
    network: &FeederNetwork,
    density: &DensityProfile,
    lower: &PerturbationSeries,
) -> Result<(Field, Field)> {
    if n < 3 {
        return Err(Error::InvalidArgument(alloc::format!("v/w recursion starts at order 3, got {n}")));
    }
    let topo = check(network, density)?;
    let grid = density.grid();
    require(lower, n, grid)?;
    let coef = ScaledCoefficients::new(network, density);
    let dw = vw_rhs(s1(lower), &lower.orders[n - 3].v, &lower.orders[n - 2].v, &coef.a);
    Ok(vw_from(&topo, grid, &dw))
}

impl PerturbationSeries {
    /// No orders yet; the starting point for [`solve_order`].
    pub fn empty(density: &DensityProfile) -> Self {
        Self { grid: density.grid().clone(), epsilon: density.epsilon(), orders: Vec::new() }
    }

    /// Orders `1..=max_order`: full fields through order 4, then `v`, `w` only.
    pub fn compute(network: &FeederNetwork, density: &DensityProfile, max_order: usize) -> Result<Self> {
        if max_order == 0 {
            return Err(Error::InvalidArgument("expansion order must be at least 1".into()));
        }
        let mut series = Self::empty(density);
        for n in 1..=max_order {
            let fields = if n <= MAX_FULL_ORDER {
                solve_order(n, network, density, &series)?
            } else {
                let (v, w) = solve_vw_order(n, network, density, &series)?;
                OrderFields { theta: None, v, s: None, w }
            };
            series.orders.push(fields);
        }
        Ok(series)
    }

    /// Appends order `len() + 1`.
    pub fn push(&mut self, fields: OrderFields) -> Result<()> {
        if !fields.v.matches(&self.grid) || !fields.w.matches(&self.grid) {
            return Err(Error::GridMismatch);
        }
        self.orders.push(fields);
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Order `n >= 1`.
    pub fn order(&self, n: usize) -> Option<&OrderFields> {
        n.checked_sub(1).and_then(|i| self.orders.get(i))
    }

    pub fn orders(&self) -> &[OrderFields] {
        &self.orders
    }

    pub fn max_vw_order(&self) -> usize {
        self.orders.len()
    }

    pub fn max_full_order(&self) -> usize {
        self.orders.iter().take_while(|o| o.theta.is_some() && o.s.is_some()).count()
    }

    pub fn theta(&self, n: usize) -> Result<&Field> {
        self.order(n).and_then(|o| o.theta.as_ref()).ok_or(Error::UnavailableOrder {
            field: "theta",
            requested: n,
            available: self.max_full_order(),
        })
    }

    pub fn s(&self, n: usize) -> Result<&Field> {
        self.order(n).and_then(|o| o.s.as_ref()).ok_or(Error::UnavailableOrder {
            field: "s",
            requested: n,
            available: self.max_full_order(),
        })
    }

    /// Truncated sums at magnitude `epsilon`: `v = 1 + sum eps^n v_n` and `w`
    /// through `order`; `theta` and `s` through `min(order, 4)`.
    pub fn assemble(&self, epsilon: f64, order: usize) -> Result<Profile> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!("epsilon must be non-negative, got {epsilon}")));
        }
        if order > self.max_vw_order() {
            return Err(Error::UnavailableOrder { field: "v", requested: order, available: self.max_vw_order() });
        }
        let mut profile = Profile::flat(&self.grid);
        let full = order.min(self.max_full_order());
        let mut power = 1.0;
        for (idx, o) in self.orders[..order].iter().enumerate() {
            power *= epsilon;
            profile.v.add_scaled(power, &o.v);
            profile.w.add_scaled(power, &o.w);
            if idx < full {
                profile.theta.add_scaled(power, o.theta.as_ref().expect("full order"));
                profile.s.add_scaled(power, o.s.as_ref().expect("full order"));
            }
        }
        Ok(profile)
    }
}

//! Power densities `p(x) = eps * p_tilde(x)`, `q(x) = eps * q_tilde(x)` built
//! from point injections by Gaussian coarse-graining.
//!
//! Sign convention: positive power flows *into* the feeder (generation,
//! EV discharging); consumption and EV charging are negative.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::network::{FeederNetwork, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Ev,
    Load,
}

/// A lumped injection `P delta(x - xi)` on one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct PointInjection {
    pub segment: String,
    /// Segment-local position in km, strictly inside the segment.
    pub xi: f64,
    pub active_power: f64,
    pub reactive_power: f64,
    pub category: Category,
}

impl PointInjection {
    pub fn new(segment: impl Into<String>, xi: f64, p: f64, q: f64, category: Category) -> Self {
        Self { segment: segment.into(), xi, active_power: p, reactive_power: q, category }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseGrainSpec {
    /// Gaussian standard deviation in km.
    pub sigma: f64,
    /// Kernel support half-width in multiples of `sigma`.
    pub truncation_radius: f64,
}

impl Default for CoarseGrainSpec {
    fn default() -> Self {
        Self { sigma: 0.05, truncation_radius: 8.0 }
    }
}

impl CoarseGrainSpec {
    pub fn with_sigma(sigma: f64) -> Self {
        Self { sigma, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Bump {
    segment: usize,
    xi: f64,
    p: f64,
    q: f64,
}

/// Keeps the injections so the density can be evaluated between samples.
#[derive(Debug, Clone, PartialEq)]
struct Kernel {
    sigma: f64,
    cutoff: f64,
    divisor: f64,
    bumps: Vec<Bump>,
}

impl Kernel {
    fn weight(&self, dx: f64) -> f64 {
        if dx.abs() > self.cutoff {
            0.0
        } else {
            let s2 = self.sigma * self.sigma;
            libm::exp(-dx * dx / (2.0 * s2)) / libm::sqrt(2.0 * PI * s2)
        }
    }

    /// Physical `(p, q)` at a segment-local coordinate.
    fn eval(&self, segment: usize, x: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut q = 0.0;
        for b in self.bumps.iter().filter(|b| b.segment == segment) {
            let w = self.weight(x - b.xi);
            p += b.p * w;
            q += b.q * w;
        }
        (p, q)
    }
}

/// Scaled densities sampled on a grid, plus the magnitude `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    grid: Grid,
    p_tilde: Field,
    q_tilde: Field,
    epsilon: f64,
    kernel: Option<Kernel>,
}

impl DensityProfile {
    /// Density from raw samples; off-grid values are linearly interpolated.
    pub fn from_samples(grid: Grid, p_tilde: Field, q_tilde: Field, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if !p_tilde.matches(&grid) || !q_tilde.matches(&grid) {
            return Err(Error::GridMismatch);
        }
        if p_tilde.iter().chain(q_tilde.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("density samples must be finite".into()));
        }
        Ok(Self { grid, p_tilde, q_tilde, epsilon, kernel: None })
    }

    /// Zero density on `grid` (the unloaded feeder).
    pub fn zero(grid: Grid) -> Self {
        let z = Field::zeros(&grid);
        Self { grid, p_tilde: z.clone(), q_tilde: z, epsilon: 1.0, kernel: None }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn p_tilde(&self) -> &Field {
        &self.p_tilde
    }

    pub fn q_tilde(&self) -> &Field {
        &self.q_tilde
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Physical `p = eps * p_tilde`.
    pub fn p(&self) -> Field {
        self.p_tilde.map(|x| self.epsilon * x)
    }

    pub fn q(&self) -> Field {
        self.q_tilde.map(|x| self.epsilon * x)
    }

    /// Same shape functions with a different magnitude; keeps `eps * p_tilde`
    /// only when `epsilon` equals the current one.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self { epsilon, ..self.clone() })
    }

    /// `(p_tilde, q_tilde)` at segment-local coordinate `x`.
    pub fn tilde_at(&self, segment: usize, x: f64) -> (f64, f64) {
        match &self.kernel {
            Some(k) => {
                let (p, q) = k.eval(segment, x);
                (p / k.divisor, q / k.divisor)
            }
            None => {
                let g = self.grid.segment(segment);
                let n = g.len() - 1;
                let t = (x / g.length() * n as f64).clamp(0.0, n as f64);
                let k = (libm::floor(t) as usize).min(n - 1);
                let f = t - k as f64;
                let p = &self.p_tilde[segment];
                let q = &self.q_tilde[segment];
                (p[k] + f * (p[k + 1] - p[k]), q[k] + f * (q[k + 1] - q[k]))
            }
        }
    }

    /// `eps * trapezoid(p_tilde)` over one segment.
    pub fn segment_mass(&self, segment: usize) -> f64 {
        self.epsilon * crate::quad::trapezoid(&self.p_tilde[segment], self.grid.segment(segment).h())
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")))
    }
}

/// Gaussian coarse-graining of point injections, segment-local.
///
/// Each injection contributes `P/sqrt(2 pi sigma^2) exp(-(x - xi)^2 / (2 sigma^2))`
/// within `truncation_radius * sigma` of `xi`, clipped at the segment ends
/// without reflection or renormalisation. The result stores
/// `p_tilde = p / epsilon`.
pub fn coarse_grain(
    injections: &[PointInjection],
    spec: CoarseGrainSpec,
    network: &FeederNetwork,
    grid: &Grid,
    epsilon: f64,
) -> Result<DensityProfile> {
    check_epsilon(epsilon)?;
    if !(spec.sigma > 0.0 && spec.sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {}", spec.sigma)));
    }
    if !(spec.truncation_radius >= 5.0) {
        return Err(Error::InvalidArgument(format!(
            "truncation radius must be at least 5 sigma, got {}",
            spec.truncation_radius
        )));
    }
    if !grid.matches(network) {
        return Err(Error::GridMismatch);
    }
    let h_max = grid.segments().iter().map(|g| g.h()).fold(0.0, f64::max);
    if spec.sigma < 2.0 * h_max {
        return Err(Error::UnderResolvedKernel { sigma: spec.sigma, h: h_max });
    }

    let mut bumps = Vec::with_capacity(injections.len());
    for inj in injections {
        let segment = network.segment_index(&inj.segment).ok_or_else(|| Error::UnknownSegment(inj.segment.clone()))?;
        let length = network.segments[segment].length;
        if !(inj.xi > 0.0 && inj.xi < length) {
            return Err(Error::InjectionOutOfRange { segment: inj.segment.clone(), xi: inj.xi, length });
        }
        if !(inj.active_power.is_finite() && inj.reactive_power.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "injection on `{}` at {} km has non-finite power",
                inj.segment, inj.xi
            )));
        }
        bumps.push(Bump { segment, xi: inj.xi, p: inj.active_power, q: inj.reactive_power });
    }
    let kernel = Kernel { sigma: spec.sigma, cutoff: spec.truncation_radius * spec.sigma, divisor: epsilon, bumps };

    let p_tilde = Field::from_fn(grid, |s, x| kernel.eval(s, x).0 / epsilon);
    let q_tilde = Field::from_fn(grid, |s, x| kernel.eval(s, x).1 / epsilon);
    Ok(DensityProfile { grid: grid.clone(), p_tilde, q_tilde, epsilon, kernel: Some(kernel) })
}

/// Splits `eps = eps_ev + eps_load`; both halves keep the same shape functions.
pub fn split(profile: &DensityProfile, eps_ev: f64, eps_load: f64) -> Result<(DensityProfile, DensityProfile)> {
    if !(eps_ev >= 0.0 && eps_load >= 0.0) || !(eps_ev + eps_load).is_finite() {
        return Err(Error::InvalidArgument(format!(
            "shares must be non-negative, got eps_ev = {eps_ev}, eps_load = {eps_load}"
        )));
    }
    check_share_sum(eps_ev, eps_load, profile.epsilon)?;
    let share = |eps: f64| DensityProfile { epsilon: eps, ..profile.clone() };
    Ok((share(eps_ev), share(eps_load)))
}

pub(crate) fn check_share_sum(eps_ev: f64, eps_load: f64, epsilon: f64) -> Result<()> {
    let sum = eps_ev + eps_load;
    if (sum - epsilon).abs() > 1e-12 * epsilon.abs().max(sum.abs()) {
        return Err(Error::ShareMismatch { sum, epsilon });
    }
    Ok(())
}

/// Fraction of the net active injection contributed by EV injections.
pub fn ev_share(injections: &[PointInjection]) -> Option<f64> {
    let total: f64 = injections.iter().map(|i| i.active_power).sum();
    let ev: f64 = injections.iter().filter(|i| i.category == Category::Ev).map(|i| i.active_power).sum();
    (total != 0.0).then(|| ev / total)
}

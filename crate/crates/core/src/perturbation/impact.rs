use alloc::format;

use super::PerturbationSeries;
use crate::density::check_share_sum;
use crate::error::{Error, Result};
use crate::field::Field;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpactSpec {
    pub eps_ev: f64,
    pub eps_load: f64,
    pub order: usize,
}

impl ImpactSpec {
    /// `eps_ev = fraction * epsilon`, `eps_load = epsilon - eps_ev`.
    pub fn from_fraction(epsilon: f64, fraction: f64, order: usize) -> Self {
        let eps_ev = fraction * epsilon;
        Self { eps_ev, eps_load: epsilon - eps_ev, order }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpactResult {
    /// Voltage change caused by the EV share, given the loads.
    pub delta_v: Field,
    pub max_abs: f64,
    /// Segment index and arclength from the root in km.
    pub location_of_max: (usize, f64),
}

/// `v(eps) - v(eps_load)` with both series truncated at `spec.order`:
/// `sum_n ((eps_ev + eps_load)^n - eps_load^n) v_n`.
pub fn ev_impact(series: &PerturbationSeries, spec: &ImpactSpec) -> Result<ImpactResult> {
    if !(spec.eps_ev >= 0.0 && spec.eps_load >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "shares must be non-negative, got eps_ev = {}, eps_load = {}",
            spec.eps_ev, spec.eps_load
        )));
    }
    check_share_sum(spec.eps_ev, spec.eps_load, series.epsilon())?;
    if spec.order == 0 || spec.order > series.max_vw_order() {
        return Err(Error::UnavailableOrder { field: "v", requested: spec.order, available: series.max_vw_order() });
    }

    let eps = spec.eps_ev + spec.eps_load;
    let mut delta_v = Field::zeros(series.grid());
    let (mut full, mut load) = (1.0, 1.0);
    for o in &series.orders()[..spec.order] {
        full *= eps;
        load *= spec.eps_load;
        delta_v.add_scaled(full - load, &o.v);
    }

    let mut max_abs = 0.0;
    let mut location_of_max = (0, series.grid().segment(0).start_km());
    for (i, seg) in delta_v.segments().iter().enumerate() {
        let xs = series.grid().segment(i).abscissae();
        for (k, &d) in seg.iter().enumerate() {
            if d.abs() > max_abs {
                max_abs = d.abs();
                location_of_max = (i, xs[k]);
            }
        }
    }
    Ok(ImpactResult { delta_v, max_abs, location_of_max })
}

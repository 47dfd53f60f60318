//! Post-processing of density fields: strip-averaged initial and boundary
//! traces, mass bookkeeping, the predicted stationary profile, and the
//! microscopic boundary-current diagnostic.

use serde::Serialize;

use crate::model::{ModelParams, Profile};
use crate::pde::DensityField;
use crate::sim::Snapshot;
use crate::{Error, Result};

/// Strip-averaged trace estimates of a density field: `u0` per cell,
/// boundary series `u_minus`/`u_plus` per stored time, with the per-bin
/// estimator variance (cell variance within the strip over the cell count).
#[derive(Debug, Clone, Serialize)]
pub struct TraceEstimate {
    pub times: Vec<f64>,
    pub u0: Vec<f64>,
    pub u_minus: Vec<f64>,
    pub u_plus: Vec<f64>,
    pub strip_width: f64,
    pub var_minus: Vec<f64>,
    pub var_plus: Vec<f64>,
}

/// Default strip width: `max(2 dx, sqrt(dx))`, balancing the O(eps) bias
/// against per-cell noise.
pub fn default_strip(dx: f64) -> f64 {
    (2.0 * dx).max(dx.sqrt())
}

/// Average the field over `x in [0, eps_strip]` and `[1 - eps_strip, 1]`
/// per time slice (boundary traces) and over `t in [0, eps_strip * t_max]`
/// per cell (initial trace).
pub fn estimate_traces(field: &DensityField, eps_strip: f64) -> Result<TraceEstimate> {
    let dx = field.dx();
    if eps_strip < 2.0 * dx - 1e-12 {
        return Err(Error::InvalidParams(format!(
            "strip width {eps_strip} narrower than two cells (dx = {dx})"
        )));
    }
    if eps_strip >= 0.25 {
        return Err(Error::InvalidParams("strip width must be < 1/4".into()));
    }
    let xs = field.xs();
    let times = field.times();
    let left: Vec<usize> = (0..xs.len()).filter(|&i| xs[i] <= eps_strip).collect();
    let right: Vec<usize> = (0..xs.len()).filter(|&i| xs[i] >= 1.0 - eps_strip).collect();

    let mut u_minus = Vec::with_capacity(times.len());
    let mut u_plus = Vec::with_capacity(times.len());
    let mut var_minus = Vec::with_capacity(times.len());
    let mut var_plus = Vec::with_capacity(times.len());
    for ti in 0..times.len() {
        for (cells, us, vars) in [
            (&left, &mut u_minus, &mut var_minus),
            (&right, &mut u_plus, &mut var_plus),
        ] {
            let vals: Vec<f64> = cells.iter().map(|&i| field.at(ti, i)).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                / (vals.len() as f64 * vals.len().saturating_sub(1).max(1) as f64);
            us.push(mean);
            vars.push(var);
        }
    }

    let t_max = *times.last().unwrap();
    let t_cut = eps_strip * t_max;
    let early: Vec<usize> = (0..times.len()).filter(|&j| times[j] <= t_cut).collect();
    let u0: Vec<f64> = (0..xs.len())
        .map(|i| early.iter().map(|&j| field.at(j, i)).sum::<f64>() / early.len() as f64)
        .collect();

    Ok(TraceEstimate {
        times: times.to_vec(),
        u0,
        u_minus,
        u_plus,
        strip_width: eps_strip,
        var_minus,
        var_plus,
    })
}

/// `int_0^1 u(t, x) dx` by the midpoint rule on the cell centres: exact for
/// cell-average data, so discrete conservation shows up to round-off.
pub fn mass(field: &DensityField, t: f64) -> Result<f64> {
    let ti = field.nearest_time(t);
    if (field.times()[ti] - t).abs() > 1e-9 * (1.0 + t.abs()) {
        return Err(Error::InvalidParams(format!("t = {t} is not on the field's time grid")));
    }
    Ok(field.row(ti).iter().sum::<f64>() * field.dx())
}

/// Predicted long-time profile for conserved total mass `m`: the single
/// upward shock `1_{(1-m, 1)}`.
pub fn stationary_profile(m: f64) -> Result<Profile> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::InvalidParams(format!("mass {m} outside [0, 1]")));
    }
    Ok(Profile::Step { y: 1.0 - m })
}

/// Time-space average of the bare hopping current factor
/// `eta_i (1 - eta_{i+1})` over the first `floor(eps n)` bonds of a
/// trajectory. Tends to zero with `eps` and `n` when the left boundary
/// holds an extremal trace.
pub fn boundary_flux_diagnostic(snapshots: &[Snapshot], params: &ModelParams, eps: f64) -> Result<f64> {
    if !(0.0..0.25).contains(&eps) || eps <= 0.0 {
        return Err(Error::InvalidParams("eps must lie in (0, 1/4)".into()));
    }
    if snapshots.is_empty() {
        return Err(Error::InvalidParams("no snapshots".into()));
    }
    let n = params.n;
    let bonds = ((eps * n as f64).floor() as usize).clamp(1, n - 1);
    let mut total = 0.0;
    for snap in snapshots {
        let eta = &snap.eta;
        let mut s = 0.0;
        for i in 0..bonds {
            s += eta[i] as f64 * (1.0 - eta[i + 1] as f64);
        }
        total += s / bonds as f64;
    }
    Ok(total / snapshots.len() as f64)
}

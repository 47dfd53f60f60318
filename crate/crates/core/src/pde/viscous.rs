//! Finite-volume solver for the viscous equation
//! `u_t = eps u_xx - p [J(u)]_x` on [0, 1] with the three reservoir
//! boundary closures: Dirichlet (fast), Robin flux (critical), zero flux
//! (slow). Conservative form, so discrete mass balance holds exactly:
//! d(mass)/dt = G_0 - G_M with G the boundary fluxes.

use serde::{Deserialize, Serialize};

use super::entropy_solver::Recorder;
use super::{j, DensityField};
use crate::model::{Grid, Profile, Rates};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViscousRegime {
    /// Reservoirs dominate diffusion: Dirichlet data `alpha/(alpha+gamma)`,
    /// `delta/(beta+delta)`.
    Fast,
    /// Reservoirs at the diffusive scale: Robin fluxes
    /// `alpha - (alpha+gamma) u` at 0 and `(beta+delta) u - delta` at 1.
    Critical,
    /// Reservoirs vanish in the limit: zero-flux (Neumann) ends.
    Slow,
}

/// Solve the viscous equation up to `grid.t_max`, recording at most
/// `outputs` evenly spaced slices. Requires `p dx / eps <= 2` (monotone
/// centred convection) and the parabolic CFL `dt <= dx^2 / (2 eps + p dx)`,
/// tightened for the fast regime's half-cell Dirichlet stencil.
pub fn solve_viscous(
    v0: &Profile,
    rates: Rates,
    epsilon: f64,
    p: f64,
    grid: &Grid,
    regime: ViscousRegime,
    outputs: usize,
) -> Result<DensityField> {
    v0.validate()?;
    grid.validate()?;
    rates.validate()?;
    if epsilon <= 0.0 || p < 0.0 {
        return Err(Error::InvalidParams("solve_viscous needs epsilon > 0 and p >= 0".into()));
    }
    if regime == ViscousRegime::Fast && (rates.alpha + rates.gamma <= 0.0 || rates.beta + rates.delta <= 0.0) {
        return Err(Error::InvalidParams(
            "fast regime needs alpha+gamma > 0 and beta+delta > 0".into(),
        ));
    }
    let m = grid.cells;
    let dx = grid.dx();
    if p * dx > 2.0 * epsilon + 1e-15 {
        return Err(Error::InvalidParams(format!(
            "cell Peclet number {} > 2; refine the grid or raise epsilon",
            p * dx / epsilon
        )));
    }
    // worst-case per-cell outflow coefficient; fast regime's boundary cells
    // see a 3 eps / dx^2 diffusion term from the half-cell ghost
    let mut limit = dx * dx / (2.0 * epsilon + p * dx);
    if regime == ViscousRegime::Fast {
        limit = limit.min(dx * dx / (3.0 * epsilon + p * dx));
    }
    if grid.dt > limit + 1e-15 {
        return Err(Error::CflViolation {
            dt: grid.dt,
            limit,
        });
    }

    let dirichlet = match regime {
        ViscousRegime::Fast => Some((
            rates.alpha / (rates.alpha + rates.gamma),
            rates.delta / (rates.beta + rates.delta),
        )),
        _ => None,
    };

    let mut u: Vec<f64> = (0..m)
        .map(|i| v0.cell_average(i as f64 * dx, (i + 1) as f64 * dx))
        .collect();
    let xs: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) * dx).collect();

    let n_steps = (grid.t_max / grid.dt).ceil() as usize;
    let mut recorder = Recorder::new(n_steps, outputs, m);
    recorder.push(0.0, &u);

    let mut flux = vec![0.0; m + 1];
    let mut t = 0.0;
    for step in 1..=n_steps {
        let dt = grid.dt.min(grid.t_max - t);
        for i in 1..m {
            let mid = 0.5 * (u[i - 1] + u[i]);
            flux[i] = p * j(mid) - epsilon * (u[i] - u[i - 1]) / dx;
        }
        match regime {
            ViscousRegime::Slow => {
                flux[0] = 0.0;
                flux[m] = 0.0;
            }
            ViscousRegime::Critical => {
                flux[0] = rates.alpha - (rates.alpha + rates.gamma) * u[0];
                flux[m] = (rates.beta + rates.delta) * u[m - 1] - rates.delta;
            }
            ViscousRegime::Fast => {
                let (vl, vr) = dirichlet.unwrap();
                flux[0] = p * j(vl) - epsilon * (u[0] - vl) / (0.5 * dx);
                flux[m] = p * j(vr) - epsilon * (vr - u[m - 1]) / (0.5 * dx);
            }
        }
        for i in 0..m {
            u[i] -= dt / dx * (flux[i + 1] - flux[i]);
            if !(-1e-9..=1.0 + 1e-9).contains(&u[i]) {
                return Err(Error::InvalidParams(format!(
                    "viscous solver left [0, 1] (u = {}); time step too large",
                    u[i]
                )));
            }
            u[i] = u[i].clamp(0.0, 1.0);
        }
        t += dt;
        if recorder.wants(step) {
            recorder.push(t, &u);
        }
    }

    DensityField::from_values(recorder.times, xs, recorder.values)
}

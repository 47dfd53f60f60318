//! First-order Godunov finite-volume scheme on [0, 1] with Dirichlet ghost
//! cells carrying the boundary-data schedules. Monotone under the CFL
//! condition `dt <= dx / p`, hence convergent to the entropy solution.

use super::{godunov_flux, BoundaryData, DensityField};
use crate::model::Grid;
use crate::{Error, Result};

/// Solve `u_t + p[J(u)]_x = 0` on [0, 1] up to `grid.t_max`, recording at
/// most `outputs` evenly spaced time slices (always including 0 and t_max).
pub fn solve_entropy(bd: &BoundaryData, p: f64, grid: &Grid, outputs: usize) -> Result<DensityField> {
    bd.validate()?;
    grid.validate()?;
    if p <= 0.0 {
        return Err(Error::InvalidParams("solve_entropy requires p > 0".into()));
    }
    let m = grid.cells;
    let dx = grid.dx();
    if grid.dt > dx / p + 1e-15 {
        return Err(Error::CflViolation {
            dt: grid.dt,
            limit: dx / p,
        });
    }

    let mut u: Vec<f64> = (0..m)
        .map(|i| bd.v0.cell_average(i as f64 * dx, (i + 1) as f64 * dx))
        .collect();
    let xs: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) * dx).collect();

    let n_steps = (grid.t_max / grid.dt).ceil() as usize;
    let mut recorder = Recorder::new(n_steps, outputs, m);
    recorder.push(0.0, &u);

    let mut flux = vec![0.0; m + 1];
    let mut t = 0.0;
    for step in 1..=n_steps {
        // last step shrinks to land exactly on t_max
        let dt = grid.dt.min(grid.t_max - t);
        let (ghost_l, ghost_r) = (bd.v_minus.eval(t), bd.v_plus.eval(t));
        flux[0] = godunov_flux(ghost_l, u[0], p)?;
        for i in 1..m {
            flux[i] = godunov_flux(u[i - 1], u[i], p)?;
        }
        flux[m] = godunov_flux(u[m - 1], ghost_r, p)?;
        for i in 0..m {
            u[i] -= dt / dx * (flux[i + 1] - flux[i]);
            // monotone scheme: drift beyond round-off is a bug
            debug_assert!((-1e-12..=1.0 + 1e-12).contains(&u[i]));
            u[i] = u[i].clamp(0.0, 1.0);
        }
        t += dt;
        if recorder.wants(step) {
            recorder.push(t, &u);
        }
    }

    DensityField::from_values(recorder.times, xs, recorder.values)
}

/// Evenly thinned snapshot recorder shared by the PDE solvers.
pub(crate) struct Recorder {
    n_steps: usize,
    outputs: usize,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Recorder {
    pub fn new(n_steps: usize, outputs: usize, cells: usize) -> Self {
        let outputs = outputs.max(2);
        Recorder {
            n_steps,
            outputs,
            times: Vec::with_capacity(outputs + 1),
            values: Vec::with_capacity((outputs + 1) * cells),
        }
    }

    pub fn wants(&self, step: usize) -> bool {
        if step == self.n_steps {
            return true;
        }
        if self.outputs <= 2 || self.n_steps == 0 {
            return false;
        }
        // record when the output index increments between step-1 and step
        let k = self.outputs - 1;
        (step * k) / self.n_steps > ((step - 1) * k) / self.n_steps
    }

    pub fn push(&mut self, t: f64, u: &[f64]) {
        self.times.push(t);
        self.values.extend_from_slice(u);
    }
}

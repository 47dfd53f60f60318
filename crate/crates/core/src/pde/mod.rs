//! Macroscopic density equations: Godunov entropy solver for the scalar
//! conservation law `u_t + p [J(u)]_x = 0`, `J(u) = u(1-u)`, the viscous
//! finite-volume solver for its parabolic counterpart, the exact Riemann
//! evaluator, and the closed-form boundary data of the limit theorems.

mod entropy_solver;
mod viscous;

pub use entropy_solver::solve_entropy;
pub use viscous::{solve_viscous, ViscousRegime};

use serde::{Deserialize, Serialize};

use crate::model::{Profile, Rates};
use crate::{Error, Result};

/// `J(u) = u(1-u)` scaled by the drift `p`.
pub fn flux_j(u: f64, p: f64) -> f64 {
    p * u * (1.0 - u)
}

pub(crate) fn j(u: f64) -> f64 {
    u * (1.0 - u)
}

/// Godunov numerical flux for the concave flux `p J`: min over `[a, b]` when
/// `a <= b`, max over `[b, a]` otherwise (attained at 1/2 when straddled).
pub fn godunov_flux(a: f64, b: f64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
        return Err(Error::InvalidParams(format!("godunov_flux({a}, {b}) outside [0, 1]")));
    }
    Ok(if a <= b {
        p * j(a).min(j(b))
    } else if b <= 0.5 && 0.5 <= a {
        p * 0.25
    } else {
        p * j(a).max(j(b))
    })
}

/// Piecewise-constant scalar function of time (boundary data schedules).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarSchedule {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl ScalarSchedule {
    pub fn constant(v: f64) -> Self {
        ScalarSchedule {
            breakpoints: vec![0.0],
            values: vec![v],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.breakpoints.is_empty()
            || self.breakpoints.len() != self.values.len()
            || self.breakpoints[0] != 0.0
            || self.breakpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidParams("malformed scalar schedule".into()));
        }
        if self.values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParams("boundary values must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&b| b <= t);
        self.values[idx.saturating_sub(1).min(self.values.len() - 1)]
    }
}

/// Initial profile plus boundary-data schedules of an initial-boundary
/// problem for the conservation law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryData {
    pub v0: Profile,
    pub v_minus: ScalarSchedule,
    pub v_plus: ScalarSchedule,
}

impl BoundaryData {
    pub fn constant(v0: Profile, v_minus: f64, v_plus: f64) -> Self {
        BoundaryData {
            v0,
            v_minus: ScalarSchedule::constant(v_minus),
            v_plus: ScalarSchedule::constant(v_plus),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.v0.validate()?;
        self.v_minus.validate()?;
        self.v_plus.validate()
    }
}

/// Space-time grid function with cell-centred values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    times: Vec<f64>,
    xs: Vec<f64>,
    /// Row-major `[time][cell]`.
    values: Vec<f64>,
}

impl DensityField {
    pub fn from_values(times: Vec<f64>, xs: Vec<f64>, mut values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || xs.is_empty() || values.len() != times.len() * xs.len() {
            return Err(Error::InvalidParams("density field shape mismatch".into()));
        }
        for v in &mut values {
            if !(-1e-9..=1.0 + 1e-9).contains(v) {
                return Err(Error::InvalidParams(format!("density value {v} outside [0, 1]")));
            }
            *v = v.clamp(0.0, 1.0);
        }
        Ok(DensityField { times, xs, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn n_cells(&self) -> usize {
        self.xs.len()
    }

    /// Uniform cell width (fields are built on uniform grids).
    pub fn dx(&self) -> f64 {
        if self.xs.len() > 1 {
            self.xs[1] - self.xs[0]
        } else {
            1.0
        }
    }

    pub fn at(&self, time_idx: usize, cell: usize) -> f64 {
        self.values[time_idx * self.xs.len() + cell]
    }

    pub fn row(&self, time_idx: usize) -> &[f64] {
        &self.values[time_idx * self.xs.len()..(time_idx + 1) * self.xs.len()]
    }

    /// Index of the stored time nearest to `t`.
    pub fn nearest_time(&self, t: f64) -> usize {
        nearest(&self.times, t)
    }

    pub fn nearest_cell(&self, x: f64) -> usize {
        nearest(&self.xs, x)
    }

    /// Value at the stored point nearest to `(t, x)`.
    pub fn sample(&self, t: f64, x: f64) -> f64 {
        self.at(self.nearest_time(t), self.nearest_cell(x))
    }

    /// Space-time L1 distance on the shared grid.
    pub fn l1_distance(&self, other: &DensityField) -> Result<f64> {
        if self.times.len() != other.times.len() || self.xs.len() != other.xs.len() {
            return Err(Error::InvalidParams("l1_distance: grid mismatch".into()));
        }
        let sum: f64 = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).abs())
            .sum();
        Ok(sum / self.values.len() as f64)
    }
}

fn nearest(grid: &[f64], v: f64) -> usize {
    let idx = grid.partition_point(|&g| g < v);
    if idx == 0 {
        return 0;
    }
    if idx >= grid.len() {
        return grid.len() - 1;
    }
    if (grid[idx] - v).abs() < (v - grid[idx - 1]).abs() {
        idx
    } else {
        idx - 1
    }
}

/// Self-similar solution of the Riemann problem for `u_t + p[J(u)]_x = 0`.
#[derive(Debug, Clone, Copy)]
pub struct RiemannSolution {
    pub u_l: f64,
    pub u_r: f64,
    pub p: f64,
}

/// Analytic Riemann evaluator: entropy shock for `u_l < u_r` (concave flux),
/// rarefaction fan for `u_l > u_r`, constant otherwise.
pub fn riemann_exact(u_l: f64, u_r: f64, p: f64) -> RiemannSolution {
    RiemannSolution { u_l, u_r, p }
}

impl RiemannSolution {
    /// Rankine-Hugoniot speed of the (shock) case.
    pub fn shock_speed(&self) -> f64 {
        self.p * (1.0 - self.u_l - self.u_r)
    }

    /// Value at time `t > 0` and signed offset `x - x0` from the initial jump.
    pub fn eval(&self, t: f64, dx: f64) -> f64 {
        let (ul, ur, p) = (self.u_l, self.u_r, self.p);
        if ul == ur {
            return ul;
        }
        if t <= 0.0 {
            return if dx < 0.0 { ul } else { ur };
        }
        let xi = dx / t;
        if ul < ur {
            if xi < self.shock_speed() {
                ul
            } else {
                ur
            }
        } else {
            // fan between the characteristic speeds p(1-2u_l) < p(1-2u_r)
            let (lo, hi) = (p * (1.0 - 2.0 * ul), p * (1.0 - 2.0 * ur));
            if xi <= lo {
                ul
            } else if xi >= hi {
                ur
            } else {
                0.5 * (1.0 - xi / p)
            }
        }
    }
}

/// Dirichlet boundary data of the strong-reservoir theorem:
/// `v_- = alpha/(alpha+gamma)`, `v_+ = delta/(beta+delta)`.
pub fn boundary_values_fast(rates: Rates) -> Result<(f64, f64)> {
    let Rates {
        alpha,
        beta,
        gamma,
        delta,
    } = rates;
    if alpha + gamma <= 0.0 || beta + delta <= 0.0 {
        return Err(Error::InvalidParams(
            "boundary_values_fast requires alpha+gamma > 0 and beta+delta > 0".into(),
        ));
    }
    Ok((alpha / (alpha + gamma), delta / (beta + delta)))
}

/// Boundary data of the vanishing-viscosity limit (critical Robin regime).
pub fn boundary_values_viscous_limit(p: f64, rates: Rates) -> Result<(f64, f64)> {
    if p <= 0.0 {
        return Err(Error::InvalidParams("p must be > 0".into()));
    }
    let Rates {
        alpha,
        beta,
        gamma,
        delta,
    } = rates;
    let v_minus =
        (p + alpha + gamma - ((p - alpha + gamma).powi(2) + 4.0 * alpha * gamma).sqrt()) / (2.0 * p);
    let v_plus =
        (p - beta - delta + ((p - beta + delta).powi(2) + 4.0 * beta * delta).sqrt()) / (2.0 * p);
    for v in [v_minus, v_plus] {
        if !(-1e-12..=1.0 + 1e-12).contains(&v) {
            return Err(Error::InvalidParams(format!("viscous-limit boundary value {v} outside [0, 1]")));
        }
    }
    Ok((v_minus.clamp(0.0, 1.0), v_plus.clamp(0.0, 1.0)))
}

/// Check the rate identities `alpha/(p+sigma) + gamma/sigma = 1` and
/// `beta/(p+sigma) + delta/sigma = 1`; when they hold, return the simplified
/// boundary values `v_- = alpha/(p+sigma)`, `v_+ = delta/sigma`.
pub fn liggett_check(p: f64, sigma: f64, rates: Rates) -> (bool, Option<(f64, f64)>) {
    const TOL: f64 = 1e-12;
    if p <= 0.0 || sigma <= 0.0 {
        return (false, None);
    }
    let left = rates.alpha / (p + sigma) + rates.gamma / sigma;
    let right = rates.beta / (p + sigma) + rates.delta / sigma;
    if (left - 1.0).abs() > TOL || (right - 1.0).abs() > TOL {
        return (false, None);
    }
    let v = (rates.alpha / (p + sigma), rates.delta / sigma);
    if let Ok(full) = boundary_values_viscous_limit(p, rates) {
        debug_assert!(
            (full.0 - v.0).abs() < 1e-10 && (full.1 - v.1).abs() < 1e-10,
            "Liggett simplification disagrees with the radical formula: {full:?} vs {v:?}"
        );
    }
    (true, Some(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flux_examples() {
        assert_eq!(flux_j(0.0, 1.0), 0.0);
        assert_eq!(flux_j(1.0, 1.0), 0.0);
        assert!((flux_j(0.5, 1.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn godunov_examples() {
        assert_eq!(godunov_flux(0.0, 1.0, 1.0).unwrap(), 0.0);
        assert!((godunov_flux(1.0, 0.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        for u in [0.0, 0.3, 0.5, 0.9] {
            assert!((godunov_flux(u, u, 2.0).unwrap() - flux_j(u, 2.0)).abs() < 1e-15);
        }
        assert!(godunov_flux(-0.1, 0.5, 1.0).is_err());
    }

    #[test]
    fn godunov_monotone_grid() {
        // nondecreasing in a, nonincreasing in b
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        for &b in &grid {
            let mut last = f64::NEG_INFINITY;
            for &a in &grid {
                let f = godunov_flux(a, b, 1.0).unwrap();
                assert!(f >= last - 1e-15);
                last = f;
            }
        }
        for &a in &grid {
            let mut last = f64::INFINITY;
            for &b in &grid {
                let f = godunov_flux(a, b, 1.0).unwrap();
                assert!(f <= last + 1e-15);
                last = f;
            }
        }
    }

    #[test]
    fn godunov_absorbing_boundary_identities() {
        // godunov_flux(0, u) = 0 and godunov_flux(u, 1) = 0 for all u:
        // discrete mass conservation under v_- = 0, v_+ = 1
        for i in 0..=50 {
            let u = i as f64 / 50.0;
            assert_eq!(godunov_flux(0.0, u, 1.0).unwrap(), 0.0);
            assert_eq!(godunov_flux(u, 1.0, 1.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn riemann_examples() {
        // 0 -> 1: stationary shock
        let r = riemann_exact(0.0, 1.0, 1.0);
        assert_eq!(r.shock_speed(), 0.0);
        assert_eq!(r.eval(1.0, -0.2), 0.0);
        assert_eq!(r.eval(1.0, 0.2), 1.0);
        // 1 -> 0, p = 1: fan u = (1 - xi)/2 on xi in [-1, 1]
        let r = riemann_exact(1.0, 0.0, 1.0);
        assert_eq!(r.eval(1.0, -1.5), 1.0);
        assert_eq!(r.eval(1.0, 1.5), 0.0);
        for xi in [-0.8, -0.2, 0.0, 0.5] {
            assert!((r.eval(2.0, 2.0 * xi) - (1.0 - xi) / 2.0).abs() < 1e-14);
        }
        // equal states
        let r = riemann_exact(0.3, 0.3, 2.0);
        assert_eq!(r.eval(0.7, 0.1), 0.3);
    }

    #[test]
    fn fast_boundary_values() {
        let r = |a, b, g, d| Rates {
            alpha: a,
            beta: b,
            gamma: g,
            delta: d,
        };
        assert_eq!(boundary_values_fast(r(1.0, 1.0, 1.0, 1.0)).unwrap(), (0.5, 0.5));
        let (vm, _) = boundary_values_fast(r(2.0, 1.0, 1.0, 1.0)).unwrap();
        assert!((vm - 2.0 / 3.0).abs() < 1e-15);
        let (_, vp) = boundary_values_fast(r(1.0, 0.0, 1.0, 1.0)).unwrap();
        assert_eq!(vp, 1.0);
        assert!(boundary_values_fast(r(0.0, 1.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn viscous_limit_boundary_values() {
        let r = |a, b, g, d| Rates {
            alpha: a,
            beta: b,
            gamma: g,
            delta: d,
        };
        let (vm, vp) = boundary_values_viscous_limit(1.0, r(0.0, 0.0, 0.0, 0.0)).unwrap();
        assert!(vm.abs() < 1e-14);
        assert!((vp - 1.0).abs() < 1e-14);
        // Liggett point p = sigma = 1, alpha = 1, gamma = 1/2: v_- = 1/2
        let (vm, _) = boundary_values_viscous_limit(1.0, r(1.0, 1.0, 0.5, 0.5)).unwrap();
        assert!((vm - 0.5).abs() < 1e-14);
        assert!(boundary_values_viscous_limit(0.0, r(1.0, 1.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn liggett_examples() {
        let r = |a, b, g, d| Rates {
            alpha: a,
            beta: b,
            gamma: g,
            delta: d,
        };
        let (ok, v) = liggett_check(1.0, 1.0, r(1.0, 1.0, 0.5, 0.5));
        assert!(ok);
        let (vm, vp) = v.unwrap();
        assert!((vm - 0.5).abs() < 1e-14 && (vp - 0.5).abs() < 1e-14);
        let (ok, _) = liggett_check(1.0, 1.0, r(0.0, 0.0, 0.0, 0.0));
        assert!(!ok);
    }

    #[test]
    fn liggett_agrees_with_radical_formula() {
        // random Liggett-compatible rates: alpha free, gamma forced
        for i in 1..20 {
            let p = 0.5 + 0.1 * i as f64;
            let sigma = 0.3 + 0.07 * i as f64;
            let alpha = (p + sigma) * (0.05 * i as f64).min(0.95);
            let gamma = sigma * (1.0 - alpha / (p + sigma));
            let delta = sigma * (0.04 * i as f64).min(0.9);
            let beta = (p + sigma) * (1.0 - delta / sigma);
            let rates = Rates {
                alpha,
                beta,
                gamma,
                delta,
            };
            let (ok, v) = liggett_check(p, sigma, rates);
            assert!(ok, "i = {i}");
            let (vm, vp) = v.unwrap();
            let (fm, fp) = boundary_values_viscous_limit(p, rates).unwrap();
            assert!((vm - fm).abs() < 1e-10 && (vp - fp).abs() < 1e-10);
        }
    }

    #[test]
    fn scalar_schedule_lookup() {
        let s = ScalarSchedule {
            breakpoints: vec![0.0, 2.0],
            values: vec![0.2, 0.8],
        };
        s.validate().unwrap();
        assert_eq!(s.eval(1.9), 0.2);
        assert_eq!(s.eval(2.0), 0.8);
        assert_eq!(s.eval(10.0), 0.8);
    }
}

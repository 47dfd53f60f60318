//! Entropy pairs for the flux `J(u) = u(1-u)`, boundary entropy fluxes of
//! the trace characterization, discrete entropy production, and the
//! explicit admissible trace sets.
//!
//! Convention: `Q` is the p-free entropy flux with `Q' = (1-2u) F'`; the
//! drift `p` multiplies `Q` only inside production functionals.

use crate::pde::DensityField;
use crate::{Error, Result};

fn j(u: f64) -> f64 {
    u * (1.0 - u)
}

/// Fixed smooth convex mollifier: `3/8 + 3u^2/4 - u^4/8` on [-1, 1], `|u|`
/// outside. C^2, even, F'(0) = 0, F(u) = |u| and F'(u) = sgn(u) at |u| = 1.
fn mollifier(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        x.abs()
    } else {
        0.375 + 0.75 * x * x - 0.125 * x.powi(4)
    }
}

fn mollifier_prime(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        x.signum()
    } else {
        1.5 * x - 0.5 * x.powi(3)
    }
}

const GL5_NODES: [f64; 5] = [
    -0.906179845938664,
    -0.5384693101056831,
    0.0,
    0.5384693101056831,
    0.906179845938664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.23692688505618908,
    0.47862867049936647,
    0.5688888888888889,
    0.47862867049936647,
    0.23692688505618908,
];

/// Integrate `f` over `[a, b]` (signed), splitting at the given kinks so
/// every Gauss-Legendre panel sees a single polynomial piece. Exact for
/// piecewise polynomials of degree <= 9, comfortably inside 1e-10.
fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, kinks: &[f64]) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut pts = vec![lo];
    for &k in kinks {
        if k > lo && k < hi {
            pts.push(k);
        }
    }
    pts.push(hi);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (c, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for (node, weight) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
            total += weight * h * f(c + h * node);
        }
    }
    sign * total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairTag {
    /// `F_c = |u - c|`, `Q_c = sgn(u - c)(J(u) - J(c))`.
    Kruzhkov { c: f64 },
    /// Mollified pair `F_{m,c}(u) = F(m(u-c))/m` with the fixed mollifier.
    Smooth { m: u32, c: f64 },
}

/// Lax entropy pair: convex `F` with p-free flux `Q`, `Q' = (1-2u) F'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyPair {
    pub tag: PairTag,
}

pub fn kruzhkov_pair(c: f64) -> Result<EntropyPair> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidParams(format!("kruzhkov_pair: c = {c} outside [0, 1]")));
    }
    Ok(EntropyPair {
        tag: PairTag::Kruzhkov { c },
    })
}

pub fn smooth_pair(m: u32, c: f64) -> Result<EntropyPair> {
    if m < 1 || !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidParams(format!("smooth_pair: m = {m}, c = {c} invalid")));
    }
    Ok(EntropyPair {
        tag: PairTag::Smooth { m, c },
    })
}

impl EntropyPair {
    pub fn f(&self, u: f64) -> f64 {
        match self.tag {
            PairTag::Kruzhkov { c } => (u - c).abs(),
            PairTag::Smooth { m, c } => mollifier(m as f64 * (u - c)) / m as f64,
        }
    }

    pub fn f_prime(&self, u: f64) -> f64 {
        match self.tag {
            PairTag::Kruzhkov { c } => {
                if u > c {
                    1.0
                } else if u < c {
                    -1.0
                } else {
                    0.0
                }
            }
            PairTag::Smooth { m, c } => mollifier_prime(m as f64 * (u - c)),
        }
    }

    pub fn q(&self, u: f64) -> f64 {
        match self.tag {
            PairTag::Kruzhkov { c } => {
                let s = if u >= c { 1.0 } else { -1.0 };
                s * (j(u) - j(c))
            }
            PairTag::Smooth { m: _, c } => {
                integrate(&|w| (1.0 - 2.0 * w) * self.f_prime(w), c, u, &self.kinks())
            }
        }
    }

    /// Points where `F` loses smoothness; numeric checks must straddle none.
    pub fn kinks(&self) -> Vec<f64> {
        match self.tag {
            PairTag::Kruzhkov { c } => vec![c],
            PairTag::Smooth { m, c } => vec![c - 1.0 / m as f64, c + 1.0 / m as f64],
        }
    }
}

/// Grid check of the pair's defining properties: midpoint convexity of `F`
/// and the flux relation `Q' = (1-2u) F'` (five-point stencil away from the
/// kinks). Used by the acceptance harness.
pub fn verify_pair(pair: &EntropyPair, grid_points: usize, tol: f64) -> Result<()> {
    let n = grid_points.max(3);
    let us: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    for w in us.windows(3) {
        let mid = pair.f(w[1]);
        let chord = 0.5 * (pair.f(w[0]) + pair.f(w[2]));
        if mid > chord + tol {
            return Err(Error::InvalidParams(format!("convexity fails at u = {}", w[1])));
        }
    }
    let kinks = pair.kinks();
    let h = 1e-4;
    for &u in &us {
        if kinks.iter().any(|k| (u - k).abs() < 10.0 * h) || u < 2.0 * h || u > 1.0 - 2.0 * h {
            continue;
        }
        // five-point derivative: exact for quartics, so the only error on
        // the piecewise-quintic Q is round-off
        let d = (pair.q(u - 2.0 * h) - 8.0 * pair.q(u - h) + 8.0 * pair.q(u + h)
            - pair.q(u + 2.0 * h))
            / (12.0 * h);
        let expected = (1.0 - 2.0 * u) * pair.f_prime(u);
        if (d - expected).abs() > tol {
            return Err(Error::InvalidParams(format!(
                "flux relation fails at u = {u}: {d} vs {expected}"
            )));
        }
    }
    Ok(())
}

/// Boundary entropy flux `Q_m(., v)`: the separating family of the trace
/// characterization, built from the piecewise ramp `f_m` with plateau
/// `[v_lo, v_hi]`, `v_lo = min(1/2, v) - 1/m`, `v_hi = v + 1/m`. The ramp is
/// truncated at the edges of [0, 1] when `v` is close to them.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryEntropyFlux {
    pub m: u32,
    pub v: f64,
    v_lo: f64,
    v_hi: f64,
}

pub fn boundary_flux_qm(m: u32, v: f64) -> Result<BoundaryEntropyFlux> {
    if m < 1 || !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParams(format!("boundary_flux_qm: m = {m}, v = {v} invalid")));
    }
    let inv = 1.0 / m as f64;
    Ok(BoundaryEntropyFlux {
        m,
        v,
        v_lo: v.min(0.5) - inv,
        v_hi: v + inv,
    })
}

impl BoundaryEntropyFlux {
    /// The ramp `f_m(w)`: -1 below `v_lo - 1/m`, 0 on the plateau, +1 above
    /// `v_hi + 1/m`, linear between.
    pub fn ramp(&self, w: f64) -> f64 {
        let inv = 1.0 / self.m as f64;
        if w <= self.v_lo - inv {
            -1.0
        } else if w < self.v_lo {
            (w - self.v_lo) / inv
        } else if w <= self.v_hi {
            0.0
        } else if w < self.v_hi + inv {
            (w - self.v_hi) / inv
        } else {
            1.0
        }
    }

    /// `Q_m(u, v) = int_v^u (1 - 2w) f_m(w) dw`.
    pub fn eval(&self, u: f64) -> f64 {
        let inv = 1.0 / self.m as f64;
        let kinks = [
            self.v_lo - inv,
            self.v_lo,
            0.5,
            self.v_hi,
            self.v_hi + inv,
        ];
        integrate(&|w| (1.0 - 2.0 * w) * self.ramp(w), self.v, u, &kinks)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Membership of a boundary trace in the explicit admissible set for datum
/// `v`, within tolerance `tau`:
/// left: `{v} ∪ [1 - min(1/2, v), 1]`; right: `[0, 1 - max(1/2, v)] ∪ {v}`.
pub fn check_trace_set(u_trace: f64, v_data: f64, side: Side, tau: f64) -> Result<bool> {
    for x in [u_trace, v_data] {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidParams(format!("check_trace_set: {x} outside [0, 1]")));
        }
    }
    Ok(match side {
        Side::Left => {
            (u_trace - v_data).abs() <= tau || u_trace >= 1.0 - v_data.min(0.5) - tau
        }
        Side::Right => {
            (u_trace - v_data).abs() <= tau || u_trace <= 1.0 - v_data.max(0.5) + tau
        }
    })
}

/// Separable space-time bump `(1-s^2)^2` profiles; nonnegative, compactly
/// supported in the open box when the radii fit.
#[derive(Debug, Clone, Copy)]
pub struct TestFunction {
    pub t_center: f64,
    pub t_radius: f64,
    pub x_center: f64,
    pub x_radius: f64,
}

impl TestFunction {
    pub fn bump(t_center: f64, t_radius: f64, x_center: f64, x_radius: f64) -> Self {
        TestFunction {
            t_center,
            t_radius,
            x_center,
            x_radius,
        }
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let g = |s: f64| {
            if s.abs() >= 1.0 {
                0.0
            } else {
                (1.0 - s * s).powi(2)
            }
        };
        g((t - self.t_center) / self.t_radius) * g((x - self.x_center) / self.x_radius)
    }
}

/// Discrete entropy production `∬ [F(u) ∂_t ψ + p Q(u) ∂_x ψ] dx dt` on the
/// field's own grid: trapezoidal weights, central differences for ψ. The
/// sums telescope, so a field constant in `t` (resp. `x`) contributes exact
/// zero through the `∂_t` (resp. `∂_x`) term. Entropy solutions give values
/// above `-O(dx)`; an inadmissible shock goes strictly negative.
pub fn entropy_production(
    field: &DensityField,
    pair: &EntropyPair,
    p: f64,
    psi: &TestFunction,
) -> Result<f64> {
    let times = field.times();
    let xs = field.xs();
    let (nt, nx) = (times.len(), xs.len());
    if nt < 3 || nx < 3 {
        return Err(Error::InvalidParams("entropy_production needs a 3x3 grid at least".into()));
    }
    // compact support inside the open box: reject psi alive on the frame
    let mut frame_max: f64 = 0.0;
    for &t in [times[0], times[nt - 1]].iter() {
        for &x in xs {
            frame_max = frame_max.max(psi.eval(t, x).abs());
        }
    }
    for &x in [xs[0], xs[nx - 1]].iter() {
        for &t in times {
            frame_max = frame_max.max(psi.eval(t, x).abs());
        }
    }
    if frame_max > 1e-14 {
        return Err(Error::InvalidParams(
            "test function must vanish on the space-time boundary".into(),
        ));
    }

    let weights = |grid: &[f64]| -> Vec<f64> {
        let n = grid.len();
        (0..n)
            .map(|i| {
                if i == 0 {
                    0.5 * (grid[1] - grid[0])
                } else if i == n - 1 {
                    0.5 * (grid[n - 1] - grid[n - 2])
                } else {
                    0.5 * (grid[i + 1] - grid[i - 1])
                }
            })
            .collect()
    };
    let wt = weights(times);
    let wx = weights(xs);
    // central difference matched to the trapezoid weight; the product
    // w_j * dpsi telescopes exactly over each axis
    let diff = |grid: &[f64], vals: &dyn Fn(usize) -> f64, i: usize| -> f64 {
        let n = grid.len();
        if i == 0 {
            (vals(1) - vals(0)) / (grid[1] - grid[0])
        } else if i == n - 1 {
            (vals(n - 1) - vals(n - 2)) / (grid[n - 1] - grid[n - 2])
        } else {
            (vals(i + 1) - vals(i - 1)) / (grid[i + 1] - grid[i - 1])
        }
    };

    let mut total = 0.0;
    for ti in 0..nt {
        let t = times[ti];
        for xi in 0..nx {
            let x = xs[xi];
            let u = field.at(ti, xi);
            let dpsi_dt = diff(times, &|k| psi.eval(times[k], x), ti);
            let dpsi_dx = diff(xs, &|k| psi.eval(t, xs[k]), xi);
            total += wt[ti] * wx[xi] * (pair.f(u) * dpsi_dt + p * pair.q(u) * dpsi_dx);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Profile;
    use crate::pde::{solve_entropy, BoundaryData};

    #[test]
    fn kruzhkov_examples() {
        let p0 = kruzhkov_pair(0.0).unwrap();
        let p1 = kruzhkov_pair(1.0).unwrap();
        for i in 0..=10 {
            let u = i as f64 / 10.0;
            assert!((p0.f(u) - u).abs() < 1e-15);
            assert!((p0.q(u) - j(u)).abs() < 1e-15);
            assert!((p1.f(u) - (1.0 - u)).abs() < 1e-15);
            assert!((p1.q(u) + j(u)).abs() < 1e-15);
        }
        let ph = kruzhkov_pair(0.5).unwrap();
        assert!((ph.f(0.75) - 0.25).abs() < 1e-15);
        assert!((ph.q(0.75) + 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn smooth_pair_matches_kruzhkov_outside_window() {
        for (m, c) in [(4u32, 0.5), (10, 0.3), (64, 0.7)] {
            let s = smooth_pair(m, c).unwrap();
            let k = kruzhkov_pair(c).unwrap();
            for i in 0..=100 {
                let u = i as f64 / 100.0;
                if (u - c).abs() > 1.0 / m as f64 + 1e-12 {
                    assert!((s.f(u) - k.f(u)).abs() < 1e-12, "m={m} c={c} u={u}");
                    // Q picks up a constant O(1/m) offset from the window
                    assert!((s.q(u) - k.q(u)).abs() <= 2.0 / m as f64, "m={m} c={c} u={u}");
                }
                assert!((s.f(u) - k.f(u)).abs() <= 2.0 / m as f64 + 1e-12);
            }
            assert!(s.f(c).abs() < 1.0 / m as f64);
            assert!(s.q(c).abs() < 1e-15);
        }
    }

    #[test]
    fn pairs_verify_convexity_and_flux_relation() {
        for c in [0.0, 0.3, 0.5, 0.9, 1.0] {
            verify_pair(&kruzhkov_pair(c).unwrap(), 1000, 1e-8).unwrap();
        }
        for (m, c) in [(1u32, 0.5), (8, 0.25), (64, 0.5)] {
            verify_pair(&smooth_pair(m, c).unwrap(), 1000, 1e-8).unwrap();
        }
    }

    #[test]
    fn boundary_flux_plateau_and_signs() {
        let q = boundary_flux_qm(16, 0.25).unwrap();
        // zero on the plateau
        for u in [q.v_lo, 0.25, q.v_hi] {
            assert!(q.eval(u).abs() < 1e-14, "u = {u}");
        }
        // strictly positive in the middle band (v < 1/2)
        let inv = 1.0 / 16.0;
        for u in [q.v_hi + inv + 0.01, 0.5, 1.0 - q.v_hi - inv - 0.01] {
            assert!(q.eval(u) > 1e-6, "u = {u}, q = {}", q.eval(u));
        }
        // strictly positive below the lower ramp
        for u in [0.0, q.v_lo - inv - 0.01] {
            assert!(q.eval(u) > 1e-6, "u = {u}");
        }
        // normalization at u = v
        assert_eq!(q.eval(0.25), 0.0);
    }

    #[test]
    fn boundary_flux_near_edge_truncates() {
        // v close to 1: the upper ramp leaves [0, 1]; evaluator stays finite
        let q = boundary_flux_qm(8, 0.95).unwrap();
        for i in 0..=20 {
            let u = i as f64 / 20.0;
            assert!(q.eval(u).is_finite());
        }
        assert!(q.eval(0.95).abs() < 1e-14);
    }

    #[test]
    fn trace_sets_examples() {
        // left, v = 0: allowed {0} ∪ {1}
        assert!(check_trace_set(0.0, 0.0, Side::Left, 1e-6).unwrap());
        assert!(check_trace_set(1.0, 0.0, Side::Left, 1e-6).unwrap());
        assert!(!check_trace_set(0.5, 0.0, Side::Left, 1e-6).unwrap());
        // right, v = 1: allowed {0} ∪ {1}
        assert!(check_trace_set(0.0, 1.0, Side::Right, 1e-6).unwrap());
        assert!(check_trace_set(1.0, 1.0, Side::Right, 1e-6).unwrap());
        assert!(!check_trace_set(0.5, 1.0, Side::Right, 1e-6).unwrap());
        // left, v = 1/4: [3/4, 1] allowed
        assert!(check_trace_set(0.8, 0.25, Side::Left, 1e-6).unwrap());
        assert!(!check_trace_set(0.5, 0.25, Side::Left, 1e-6).unwrap());
        assert!(check_trace_set(1.1, 0.5, Side::Left, 1e-6).is_err());
    }

    #[test]
    fn sign_lemma_on_grid() {
        // u in the left allowed set => Q_m(u, v) <= tau for all tested m;
        // u in the right allowed set => Q_m(u, v) >= -tau
        let tau = 1e-9;
        for iv in 0..=20 {
            let v = iv as f64 / 20.0;
            for iu in 0..=20 {
                let u = iu as f64 / 20.0;
                for m in [8u32, 16, 32, 64] {
                    let q = boundary_flux_qm(m, v).unwrap();
                    if check_trace_set(u, v, Side::Left, 0.0).unwrap() {
                        assert!(q.eval(u) <= tau, "left u={u} v={v} m={m} q={}", q.eval(u));
                    }
                    if check_trace_set(u, v, Side::Right, 0.0).unwrap() {
                        assert!(q.eval(u) >= -tau, "right u={u} v={v} m={m} q={}", q.eval(u));
                    }
                }
            }
        }
    }

    #[test]
    fn separating_family_detects_disallowed_traces() {
        // u outside the left allowed set => some m <= 64 has Q_m(u, v) > tau
        let tau = 1e-6;
        for iv in 0..=10 {
            let v = iv as f64 / 10.0;
            for iu in 1..10 {
                let u = iu as f64 / 10.0;
                // stay away from set boundaries where separation degenerates
                if check_trace_set(u, v, Side::Left, 0.05).unwrap() {
                    continue;
                }
                let found = (1..=64u32).any(|m| {
                    boundary_flux_qm(m, v).map(|q| q.eval(u) > tau).unwrap_or(false)
                });
                assert!(found, "no separating m for u={u} v={v}");
            }
        }
    }

    #[test]
    fn production_constant_field_is_zero() {
        let bd = BoundaryData::constant(Profile::Constant { c: 0.4 }, 0.4, 0.4);
        let grid = crate::model::Grid {
            cells: 40,
            dt: 0.01,
            t_max: 1.0,
        };
        let f = solve_entropy(&bd, 1.0, &grid, 11).unwrap();
        let psi = TestFunction::bump(0.5, 0.4, 0.5, 0.4);
        let pair = kruzhkov_pair(0.5).unwrap();
        let v = entropy_production(&f, &pair, 1.0, &psi).unwrap();
        assert!(v.abs() < 1e-13, "v = {v}");
    }

    #[test]
    fn production_signs_on_shocks() {
        use crate::pde::DensityField;
        // hand-built stationary fields on a uniform grid
        let m = 200;
        let times: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let xs: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
        let build = |profile: &dyn Fn(f64) -> f64| {
            let mut vals = Vec::new();
            for _ in &times {
                vals.extend(xs.iter().map(|&x| profile(x)));
            }
            DensityField::from_values(times.clone(), xs.clone(), vals).unwrap()
        };
        let psi = TestFunction::bump(0.5, 0.4, 0.5, 0.3);
        let pair = kruzhkov_pair(0.5).unwrap();
        let tol = 1.0 / m as f64;
        // admissible upward shock: production >= -tol (in fact > 0 here)
        let up = build(&|x| if x > 0.5 { 1.0 } else { 0.0 });
        let v_up = entropy_production(&up, &pair, 1.0, &psi).unwrap();
        assert!(v_up >= -tol, "v_up = {v_up}");
        // inadmissible downward shock: strictly negative, below -10 tol
        let down = build(&|x| if x < 0.5 { 1.0 } else { 0.0 });
        let v_down = entropy_production(&down, &pair, 1.0, &psi).unwrap();
        assert!(v_down < -10.0 * tol, "v_down = {v_down}");
    }

    #[test]
    fn production_rejects_boundary_supported_psi() {
        let bd = BoundaryData::constant(Profile::Constant { c: 0.4 }, 0.4, 0.4);
        let grid = crate::model::Grid {
            cells: 20,
            dt: 0.02,
            t_max: 1.0,
        };
        let f = solve_entropy(&bd, 1.0, &grid, 6).unwrap();
        let psi = TestFunction::bump(0.0, 0.5, 0.5, 0.4);
        let pair = kruzhkov_pair(0.5).unwrap();
        assert!(entropy_production(&f, &pair, 1.0, &psi).is_err());
    }

    #[test]
    fn production_nonnegative_on_godunov_outputs() {
        // rarefaction + shock initial data, all Kruzhkov c in {0, .1, ..., 1}
        let grid = crate::model::Grid {
            cells: 100,
            dt: 0.005,
            t_max: 0.8,
        };
        let psi = TestFunction::bump(0.4, 0.3, 0.5, 0.35);
        for v0 in [Profile::Step { y: 0.5 }, Profile::StepDown { y: 0.5 }] {
            let bd = BoundaryData::constant(v0, 0.2, 0.8);
            let f = solve_entropy(&bd, 1.0, &grid, 17).unwrap();
            for ic in 0..=10 {
                let pair = kruzhkov_pair(ic as f64 / 10.0).unwrap();
                let v = entropy_production(&f, &pair, 1.0, &psi).unwrap();
                assert!(v >= -5.0 * grid.dx(), "c = {}, v = {v}", ic as f64 / 10.0);
            }
        }
    }
}

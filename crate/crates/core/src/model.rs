//! Model parameters, piecewise-constant rate schedules, grids and RNG streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Microscopic scaling constants of the open-boundary ASEP.
///
/// The generator on `{0,1}^n` is
/// `n [ p L_ta + sigma n^kappa L_ss + n^theta (L_- + L_+) ]`,
/// the outer factor `n` being the hyperbolic time scale. `theta_split`
/// optionally replaces the single reservoir exponent by four separate ones
/// applying to (alpha, gamma, beta, delta) respectively.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub n: usize,
    pub p: f64,
    pub sigma: f64,
    pub kappa: f64,
    pub theta: f64,
    #[serde(default)]
    pub kappa_prime: Option<f64>,
    #[serde(default)]
    pub theta_split: Option<[f64; 4]>,
}

impl ModelParams {
    pub fn new(n: usize, p: f64, sigma: f64, kappa: f64, theta: f64) -> Self {
        ModelParams {
            n,
            p,
            sigma,
            kappa,
            theta,
            kappa_prime: None,
            theta_split: None,
        }
    }

    /// Lower edge of the admissible mesoscopic-exponent window
    /// `min{2 kappa - 1, (1 + kappa)/3}`.
    pub fn kappa_prime_window(&self) -> (f64, f64) {
        let lo = (2.0 * self.kappa - 1.0).min((1.0 + self.kappa) / 3.0);
        (lo, self.kappa)
    }

    /// Mesoscopic exponent: explicit value if set, else the midpoint of the
    /// admissible window.
    pub fn kappa_prime(&self) -> f64 {
        self.kappa_prime.unwrap_or_else(|| {
            let (lo, hi) = self.kappa_prime_window();
            0.5 * (lo + hi)
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_base()?;
        if self.p <= 0.0 {
            return Err(Error::InvalidParams(format!("p = {} must be > 0", self.p)));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::InvalidParams(format!(
                "kappa = {} outside (0, 1); pass --unsafe-params to override",
                self.kappa
            )));
        }
        Ok(())
    }

    /// Validation path for parameters outside the proven windows (kappa
    /// outside (0,1), p = 0). No theorem coverage is claimed for these.
    pub fn validate_unchecked(&self) -> Result<()> {
        self.validate_base()?;
        if self.p < 0.0 {
            return Err(Error::InvalidParams("p must be >= 0".into()));
        }
        if self.kappa < 0.0 {
            return Err(Error::InvalidParams("kappa must be >= 0".into()));
        }
        Ok(())
    }

    fn validate_base(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParams(format!("n = {} must be >= 2", self.n)));
        }
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(Error::InvalidParams("sigma must be > 0".into()));
        }
        if !self.p.is_finite() || !self.kappa.is_finite() || !self.theta.is_finite() {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        Ok(())
    }
}

/// `k = floor(n^kappa_prime)` clamped to `[2, floor(n/4)]` (lower bound wins
/// on tiny lattices). Rejects a `kappa_prime` outside the open window of the
/// mesoscopic-scale assumption.
pub fn mesoscopic_k(params: &ModelParams) -> Result<usize> {
    let kp = params.kappa_prime();
    let (lo, hi) = params.kappa_prime_window();
    if !(kp > lo && kp < hi) {
        return Err(Error::InvalidParams(format!(
            "kappa_prime = {kp} outside the admissible window ({lo}, {hi})"
        )));
    }
    let raw = (params.n as f64).powf(kp).floor() as usize;
    Ok(raw.min(params.n / 4).max(2))
}

/// Piecewise-constant reservoir rates `(alpha, beta, gamma, delta)` of
/// macroscopic time, right-continuous at breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSchedule {
    /// Increasing times, first must be 0.
    pub breakpoints: Vec<f64>,
    /// Per-interval `(alpha, beta, gamma, delta)`.
    pub values: Vec<[f64; 4]>,
}

/// Reservoir rates on one schedule interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl Rates {
    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.gamma, self.delta];
        if all.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::InvalidParams("reservoir rates must be finite and >= 0".into()));
        }
        Ok(())
    }
}

impl From<[f64; 4]> for Rates {
    fn from(v: [f64; 4]) -> Self {
        Rates {
            alpha: v[0],
            beta: v[1],
            gamma: v[2],
            delta: v[3],
        }
    }
}

impl RateSchedule {
    pub fn constant(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Self {
        RateSchedule {
            breakpoints: vec![0.0],
            values: vec![[alpha, beta, gamma, delta]],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.breakpoints.is_empty() || self.breakpoints.len() != self.values.len() {
            return Err(Error::InvalidParams(
                "schedule needs equally many breakpoints and values, at least one".into(),
            ));
        }
        if self.breakpoints[0] != 0.0 {
            return Err(Error::InvalidParams("first breakpoint must be 0".into()));
        }
        if self.breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParams("breakpoints must be increasing".into()));
        }
        for v in &self.values {
            if v.iter().any(|r| !r.is_finite() || *r < 0.0) {
                return Err(Error::InvalidParams("rates must be finite and >= 0".into()));
            }
        }
        Ok(())
    }

    /// Right-continuous lookup of the interval containing `t`.
    pub fn eval(&self, t: f64) -> Rates {
        debug_assert!(t >= 0.0);
        let idx = self.breakpoints.partition_point(|&b| b <= t);
        self.values[idx.saturating_sub(1).min(self.values.len() - 1)].into()
    }

    /// Earliest breakpoint strictly after `t`, if any.
    pub fn next_breakpoint(&self, t: f64) -> Option<f64> {
        let idx = self.breakpoints.partition_point(|&b| b <= t);
        self.breakpoints.get(idx).copied()
    }

    /// True iff every interval has `alpha = beta = 0`.
    pub fn alpha_beta_zero(&self) -> bool {
        self.values.iter().all(|v| v[0] == 0.0 && v[1] == 0.0)
    }

    /// Essential infimum over intervals of `min(alpha, beta, gamma, delta)`.
    pub fn essinf(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.iter().cloned().fold(f64::INFINITY, f64::min))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Uniform space-time grid on `[0, T] x [0, 1]` with `cells` spatial cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub cells: usize,
    pub dt: f64,
    pub t_max: f64,
}

impl Grid {
    pub fn dx(&self) -> f64 {
        1.0 / self.cells as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells < 2 {
            return Err(Error::InvalidParams("grid needs at least 2 cells".into()));
        }
        if !(self.dt > 0.0) || !(self.t_max > 0.0) {
            return Err(Error::InvalidParams("dt and t_max must be > 0".into()));
        }
        Ok(())
    }
}

/// Seed plus stream id; identical pairs give identical draw sequences and
/// distinct stream ids give statistically independent replicas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RngStream {
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Named density profiles on `[0, 1]` used for initial and boundary data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Profile {
    /// `u(x) = c`.
    Constant { c: f64 },
    /// Upward step `1_{(y,1)}`.
    Step { y: f64 },
    /// Downward step `1_{(0,y)}`.
    StepDown { y: f64 },
}

impl Profile {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Profile::Constant { c } => c,
            Profile::Step { y } => {
                if x > y {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::StepDown { y } => {
                if x < y {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Profile::Constant { c } => (0.0..=1.0).contains(&c),
            Profile::Step { y } | Profile::StepDown { y } => (0.0..=1.0).contains(&y),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams("profile parameter outside [0, 1]".into()))
        }
    }

    /// Parse the `constant:c` / `step:y` / `stepdown:y` shorthand.
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, val) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidConfig(format!("bad profile `{s}`")))?;
        let v: f64 = val
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad profile value `{val}`")))?;
        let p = match kind {
            "constant" => Profile::Constant { c: v },
            "step" => Profile::Step { y: v },
            "stepdown" => Profile::StepDown { y: v },
            _ => return Err(Error::InvalidConfig(format!("unknown profile `{kind}`"))),
        };
        p.validate()?;
        Ok(p)
    }

    /// Exact average over the cell `[lo, hi]`; lets finite-volume solvers
    /// start from the true cell averages of a discontinuous profile.
    pub fn cell_average(&self, lo: f64, hi: f64) -> f64 {
        debug_assert!(lo < hi);
        match *self {
            Profile::Constant { c } => c,
            Profile::Step { y } => (hi - y.clamp(lo, hi)) / (hi - lo),
            Profile::StepDown { y } => (y.clamp(lo, hi) - lo) / (hi - lo),
        }
    }
}

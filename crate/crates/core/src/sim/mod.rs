//! Exact continuous-time simulation of the open-boundary ASEP and the
//! microscopic observables entering the hydrodynamic statements.
//!
//! Event selection uses a binary indexed tree over one channel per bond plus
//! the two boundary channels, so a single event costs O(log n). Rates change
//! only locally per event; time-dependent reservoir rates are handled by
//! restarting the exponential clock at schedule breakpoints, which is exact
//! for piecewise-constant schedules.

mod exact;
mod fenwick;

pub use exact::{empirical_stationary, exact_stationary};
pub use fenwick::Fenwick;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::model::{mesoscopic_k, ModelParams, RateSchedule, Rates};
use crate::pde::DensityField;
use crate::{Error, Result};

/// Default per-run event budget.
pub const DEFAULT_EVENT_BUDGET: u64 = 1_000_000_000;

/// Rebuild the rate tree this often to flush floating-point drift.
const REBUILD_PERIOD: u64 = 1 << 24;

/// Occupation configuration plus current macroscopic time.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub eta: Vec<u8>,
    pub t: f64,
}

impl LatticeState {
    pub fn new(eta: Vec<u8>) -> Self {
        debug_assert!(eta.iter().all(|&e| e <= 1));
        LatticeState { eta, t: 0.0 }
    }

    pub fn n(&self) -> usize {
        self.eta.len()
    }

    pub fn particle_count(&self) -> u64 {
        self.eta.iter().map(|&e| e as u64).sum()
    }
}

/// Scale constants of the generator, shared by the event table, the
/// microscopic current and the brute-force stationary solver.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RateConsts {
    /// p n: totally asymmetric part per (1,0) bond.
    pub pn: f64,
    /// sigma n^{1+kappa}: symmetric exchange per discordant bond.
    pub sym: f64,
    /// n^{1+theta_{-,1}} multiplying alpha.
    pub c_alpha: f64,
    /// n^{1+theta_{-,2}} multiplying gamma.
    pub c_gamma: f64,
    /// n^{1+theta_{+,1}} multiplying beta.
    pub c_beta: f64,
    /// n^{1+theta_{+,2}} multiplying delta.
    pub c_delta: f64,
}

impl RateConsts {
    pub fn new(params: &ModelParams) -> Self {
        let n = params.n as f64;
        let [t_a, t_g, t_b, t_d] = params
            .theta_split
            .unwrap_or([params.theta, params.theta, params.theta, params.theta]);
        RateConsts {
            pn: params.p * n,
            sym: params.sigma * n.powf(1.0 + params.kappa),
            c_alpha: n.powf(1.0 + t_a),
            c_gamma: n.powf(1.0 + t_g),
            c_beta: n.powf(1.0 + t_b),
            c_delta: n.powf(1.0 + t_d),
        }
    }

    pub fn left_flip_rate(&self, eta1: u8, r: &Rates) -> f64 {
        if eta1 == 0 {
            self.c_alpha * r.alpha
        } else {
            self.c_gamma * r.gamma
        }
    }

    pub fn right_flip_rate(&self, eta_n: u8, r: &Rates) -> f64 {
        if eta_n == 0 {
            self.c_delta * r.delta
        } else {
            self.c_beta * r.beta
        }
    }

    pub fn bond_rate(&self, a: u8, b: u8) -> f64 {
        match (a, b) {
            (1, 0) => self.pn + self.sym,
            (0, 1) => self.sym,
            _ => 0.0,
        }
    }
}

/// All event rates of the current state, aggregated for O(log n) selection.
///
/// Channels 0..n-1 are the bonds (i, i+1), channel n-1 is the left boundary
/// flip, channel n the right one.
#[derive(Debug, Clone)]
pub struct EventTable {
    tree: Fenwick,
    consts: RateConsts,
    rates: Rates,
    n: usize,
}

impl EventTable {
    fn left_channel(&self) -> usize {
        self.n - 1
    }

    fn right_channel(&self) -> usize {
        self.n
    }

    pub fn total_rate(&self) -> f64 {
        self.tree.total()
    }

    /// Rightward rate of bond (i, i+1), 0-based `i < n-1`.
    pub fn bond_rightward(&self, state: &LatticeState, i: usize) -> f64 {
        if state.eta[i] == 1 && state.eta[i + 1] == 0 {
            self.consts.pn + self.consts.sym
        } else {
            0.0
        }
    }

    /// Leftward rate of bond (i, i+1).
    pub fn bond_leftward(&self, state: &LatticeState, i: usize) -> f64 {
        if state.eta[i] == 0 && state.eta[i + 1] == 1 {
            self.consts.sym
        } else {
            0.0
        }
    }

    pub fn left_flip_rate(&self) -> f64 {
        self.tree.get(self.left_channel())
    }

    pub fn right_flip_rate(&self) -> f64 {
        self.tree.get(self.right_channel())
    }

    fn refresh_bond(&mut self, eta: &[u8], b: usize) {
        self.tree.set(b, self.consts.bond_rate(eta[b], eta[b + 1]));
    }

    fn refresh_boundaries(&mut self, eta: &[u8]) {
        let lr = self.consts.left_flip_rate(eta[0], &self.rates);
        let rr = self.consts.right_flip_rate(eta[self.n - 1], &self.rates);
        let (lc, rc) = (self.left_channel(), self.right_channel());
        self.tree.set(lc, lr);
        self.tree.set(rc, rr);
    }

    /// Install new reservoir rates (schedule breakpoint crossed).
    pub fn set_rates(&mut self, eta: &[u8], rates: Rates) {
        self.rates = rates;
        self.refresh_boundaries(eta);
    }
}

/// Assemble the full event table for `state` with the schedule evaluated at
/// `state.t`.
pub fn build_event_table(
    state: &LatticeState,
    params: &ModelParams,
    schedule: &RateSchedule,
) -> EventTable {
    let n = state.n();
    debug_assert_eq!(n, params.n);
    let consts = RateConsts::new(params);
    let rates = schedule.eval(state.t);
    let mut table = EventTable {
        tree: Fenwick::new(n + 1),
        consts,
        rates,
        n,
    };
    for b in 0..n - 1 {
        table.refresh_bond(&state.eta, b);
    }
    table.refresh_boundaries(&state.eta);
    table
}

/// What a single step did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepEvent {
    /// Exchange across bond (i, i+1); `rightward` is the particle direction.
    Bond { bond: usize, rightward: bool },
    /// Left boundary flip; `injected` iff a particle was created.
    FlipLeft { injected: bool },
    /// Right boundary flip.
    FlipRight { injected: bool },
    /// Clock truncated at a schedule breakpoint; no event applied.
    ScheduleBreak,
    /// Zero total rate; time advanced to the stop time unchanged.
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub dt: f64,
    pub event: StepEvent,
}

/// One exact CTMC step, never advancing past `t_stop`.
///
/// Draws Exponential(total rate), truncates the clock at the next schedule
/// breakpoint (discarding the proposed event, valid for piecewise-constant
/// rates) and otherwise applies one bond exchange or boundary flip chosen
/// proportionally to its rate.
pub fn step(
    state: &mut LatticeState,
    table: &mut EventTable,
    schedule: &RateSchedule,
    rng: &mut ChaCha8Rng,
    t_stop: f64,
) -> StepResult {
    let total = table.total_rate();
    let next_bp = schedule.next_breakpoint(state.t).filter(|&b| b < t_stop);

    let t_event = if total > 0.0 {
        let u: f64 = rng.gen();
        state.t - (1.0 - u).ln() / total
    } else {
        f64::INFINITY
    };

    if let Some(bp) = next_bp {
        if t_event >= bp {
            let dt = bp - state.t;
            state.t = bp;
            table.set_rates(&state.eta, schedule.eval(bp));
            return StepResult {
                dt,
                event: StepEvent::ScheduleBreak,
            };
        }
    }
    if t_event >= t_stop {
        let dt = t_stop - state.t;
        state.t = t_stop;
        return StepResult {
            dt,
            event: StepEvent::Frozen,
        };
    }

    let dt = t_event - state.t;
    state.t = t_event;
    let target: f64 = rng.gen::<f64>() * total;
    let channel = table.tree.sample(target);
    let n = state.n();
    let event = if channel < n - 1 {
        let b = channel;
        let rightward = state.eta[b] == 1;
        state.eta.swap(b, b + 1);
        if b > 0 {
            table.refresh_bond(&state.eta, b - 1);
        }
        table.refresh_bond(&state.eta, b);
        if b + 2 < n {
            table.refresh_bond(&state.eta, b + 1);
        }
        if b == 0 || b + 1 == n - 1 {
            table.refresh_boundaries(&state.eta);
        }
        StepEvent::Bond { bond: b, rightward }
    } else if channel == n - 1 {
        state.eta[0] ^= 1;
        let injected = state.eta[0] == 1;
        table.refresh_bond(&state.eta, 0);
        table.refresh_boundaries(&state.eta);
        StepEvent::FlipLeft { injected }
    } else {
        state.eta[n - 1] ^= 1;
        let injected = state.eta[n - 1] == 1;
        table.refresh_bond(&state.eta, n - 2);
        table.refresh_boundaries(&state.eta);
        StepEvent::FlipRight { injected }
    };
    StepResult { dt, event }
}

/// State copy at an observation time plus cumulative boundary-flux counters.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub eta: Vec<u8>,
    pub injected_left: u64,
    pub removed_left: u64,
    pub injected_right: u64,
    pub removed_right: u64,
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub snapshots: Vec<Snapshot>,
    pub events: u64,
    /// True iff the event budget was exhausted before `t_max`.
    pub truncated: bool,
    pub final_state: LatticeState,
}

pub fn simulate(
    params: &ModelParams,
    schedule: &RateSchedule,
    initial: LatticeState,
    t_max: f64,
    observe_at: &[f64],
    rng: &mut ChaCha8Rng,
) -> SimResult {
    simulate_with_budget(params, schedule, initial, t_max, observe_at, rng, DEFAULT_EVENT_BUDGET)
}

/// Exact trajectory with snapshots at the requested (sorted) times.
pub fn simulate_with_budget(
    params: &ModelParams,
    schedule: &RateSchedule,
    mut state: LatticeState,
    t_max: f64,
    observe_at: &[f64],
    rng: &mut ChaCha8Rng,
    budget: u64,
) -> SimResult {
    debug_assert!(observe_at.windows(2).all(|w| w[0] <= w[1]));
    debug_assert!(observe_at.iter().all(|&t| (0.0..=t_max).contains(&t)));
    let mut table = build_event_table(&state, params, schedule);
    let mut snapshots = Vec::with_capacity(observe_at.len());
    let mut obs = observe_at.iter().copied().peekable();
    let (mut inj_l, mut rem_l, mut inj_r, mut rem_r) = (0u64, 0u64, 0u64, 0u64);
    let mut events = 0u64;
    let mut truncated = false;

    loop {
        while obs.peek().is_some_and(|&o| o <= state.t) {
            let t_obs = obs.next().unwrap();
            snapshots.push(Snapshot {
                t: t_obs,
                eta: state.eta.clone(),
                injected_left: inj_l,
                removed_left: rem_l,
                injected_right: inj_r,
                removed_right: rem_r,
            });
        }
        if state.t >= t_max {
            break;
        }
        if events >= budget {
            truncated = true;
            break;
        }
        // truncate the clock at the next observation time so every snapshot
        // sees the configuration actually held at that time (exact by
        // memorylessness of the exponential clock)
        let t_stop = obs.peek().map_or(t_max, |&o| o.min(t_max));
        let res = step(&mut state, &mut table, schedule, rng, t_stop);
        if matches!(
            res.event,
            StepEvent::Bond { .. } | StepEvent::FlipLeft { .. } | StepEvent::FlipRight { .. }
        ) {
            events += 1;
            if events % REBUILD_PERIOD == 0 {
                table.tree.rebuild();
            }
        }
        match res.event {
            StepEvent::FlipLeft { injected } => {
                if injected {
                    inj_l += 1;
                } else {
                    rem_l += 1;
                }
            }
            StepEvent::FlipRight { injected } => {
                if injected {
                    inj_r += 1;
                } else {
                    rem_r += 1;
                }
            }
            _ => {}
        }
    }
    SimResult {
        snapshots,
        events,
        truncated,
        final_state: state,
    }
}

/// Product-Bernoulli configuration with marginal `v0(i/n)` at site `i`.
pub fn sample_initial<F: Fn(f64) -> f64>(
    v0: F,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<LatticeState> {
    let mut eta = Vec::with_capacity(n);
    for i in 1..=n {
        let p = v0(i as f64 / n as f64);
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParams(format!("v0({}) = {p} outside [0, 1]", i)));
        }
        eta.push(u8::from(rng.gen::<f64>() < p));
    }
    Ok(LatticeState::new(eta))
}

/// Uniform block average over the window ending at (1-based) site `i`.
pub fn bar_eta(state: &LatticeState, i: usize, k: usize) -> Result<f64> {
    let n = state.n();
    if !(k <= i && i <= n) || k == 0 {
        return Err(Error::IndexOutOfRange(format!("bar_eta(i={i}, k={k}, n={n})")));
    }
    let sum: u32 = state.eta[i - k..i].iter().map(|&e| e as u32).sum();
    Ok(sum as f64 / k as f64)
}

/// Triangular-weight block average centred at (1-based) site `i`, weights
/// `(k - |i'|)/k^2`; equals the average of `bar_eta` over the k windows
/// starting at `i`.
pub fn hat_eta(state: &LatticeState, i: usize, k: usize) -> Result<f64> {
    let n = state.n();
    if !(k <= i && i + k <= n + 1) || k == 0 {
        return Err(Error::IndexOutOfRange(format!("hat_eta(i={i}, k={k}, n={n})")));
    }
    let kk = (k * k) as f64;
    let mut acc = 0.0;
    for off in -(k as isize - 1)..=(k as isize - 1) {
        let site = (i as isize - off) as usize; // 1-based
        let w = (k as f64 - off.unsigned_abs() as f64) / kk;
        acc += w * state.eta[site - 1] as f64;
    }
    Ok(acc)
}

/// Microscopic current j_{i,i+1} of the conservation law
/// `L[eta_i] = j_{i-1,i} - j_{i,i+1}`, `i` in `0..=n` (paper indexing).
pub fn micro_current(
    state: &LatticeState,
    params: &ModelParams,
    schedule: &RateSchedule,
    i: usize,
) -> Result<f64> {
    let n = state.n();
    if i > n {
        return Err(Error::IndexOutOfRange(format!("micro_current({i}) with n={n}")));
    }
    let c = RateConsts::new(params);
    let r = schedule.eval(state.t);
    Ok(if i == 0 {
        let e1 = state.eta[0] as f64;
        c.c_alpha * r.alpha * (1.0 - e1) - c.c_gamma * r.gamma * e1
    } else if i == n {
        let en = state.eta[n - 1] as f64;
        c.c_beta * r.beta * en - c.c_delta * r.delta * (1.0 - en)
    } else {
        let (a, b) = (state.eta[i - 1] as f64, state.eta[i] as f64);
        c.pn * a * (1.0 - b) + c.sym * (a - b)
    })
}

/// `L_{n,t}[eta_i]` by direct generator application: the rate-weighted jump
/// of site `i` (1-based) over every transition out of `state`. Brute-force
/// oracle for the current identity.
pub fn generator_drift(
    state: &LatticeState,
    params: &ModelParams,
    schedule: &RateSchedule,
    i: usize,
) -> f64 {
    let n = state.n();
    debug_assert!((1..=n).contains(&i));
    let c = RateConsts::new(params);
    let r = schedule.eval(state.t);
    let mut drift = 0.0;
    for b in 0..n - 1 {
        let rate = c.bond_rate(state.eta[b], state.eta[b + 1]);
        if rate > 0.0 {
            // swap of (b, b+1): site i (1-based) changes iff i-1 ∈ {b, b+1}
            if i - 1 == b {
                drift += rate * (state.eta[b + 1] as f64 - state.eta[b] as f64);
            } else if i - 1 == b + 1 {
                drift += rate * (state.eta[b] as f64 - state.eta[b + 1] as f64);
            }
        }
    }
    if i == 1 {
        drift += c.left_flip_rate(state.eta[0], &r) * (1.0 - 2.0 * state.eta[0] as f64);
    }
    if i == n {
        drift += c.right_flip_rate(state.eta[n - 1], &r) * (1.0 - 2.0 * state.eta[n - 1] as f64);
    }
    drift
}

/// Coarse-grained space-time density from a snapshot sequence: triangular
/// block averages on the mesoscopic scale, one-sided uniform averages within
/// `k` of the boundaries.
pub fn coarse_density(snapshots: &[Snapshot], params: &ModelParams) -> Result<DensityField> {
    if snapshots.is_empty() {
        return Err(Error::InvalidParams("coarse_density: no snapshots".into()));
    }
    let n = params.n;
    let k = mesoscopic_k(params)?;
    let times: Vec<f64> = snapshots.iter().map(|s| s.t).collect();
    let xs: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
    let mut values = Vec::with_capacity(times.len() * n);
    for snap in snapshots {
        let state = LatticeState {
            eta: snap.eta.clone(),
            t: snap.t,
        };
        for i in 1..=n {
            let u = if i < k {
                // forward window [i, i+k-1]
                bar_eta(&state, i + k - 1, k)?
            } else if i + k > n + 1 {
                bar_eta(&state, i, k)?
            } else {
                hat_eta(&state, i, k)?
            };
            values.push(u);
        }
    }
    DensityField::from_values(times, xs, values)
}

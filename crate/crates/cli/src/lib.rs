//! Experiment runners behind the `asep-hydro` CLI: microscopic-vs-PDE
//! convergence studies, viscosity sweeps, stationary-profile and trace
//! checks. Every report embeds the resolved config and seed so a report
//! file reproduces its numbers bitwise.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::Serialize;

use asep_core::config::{
    ConvergeConfig, LiggettConfig, SimulateConfig, SolveConfig, StationaryConfig, TracesConfig,
    ViscousSweepConfig,
};
use asep_core::entropy::{check_trace_set, Side};
use asep_core::model::{mesoscopic_k, Grid, ModelParams, Profile, RateSchedule, RngStream};
use asep_core::pde::{
    boundary_values_fast, boundary_values_viscous_limit, liggett_check, solve_entropy,
    solve_viscous, BoundaryData, DensityField, ViscousRegime,
};
use asep_core::sim::{
    coarse_density, empirical_stationary, exact_stationary, sample_initial, simulate_with_budget,
    SimResult, DEFAULT_EVENT_BUDGET,
};
use asep_core::traces::{default_strip, estimate_traces, mass, stationary_profile, TraceEstimate};
use asep_core::{Error, Result};

/// Evenly spaced observation times including both endpoints.
pub fn observation_times(t_max: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count)
        .map(|i| t_max * i as f64 / (count - 1) as f64)
        .collect()
}

/// Run `count` independent jobs on up to `workers` threads; results are
/// returned in job order regardless of scheduling.
pub fn parallel_map<T, F>(count: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = workers.clamp(1, count.max(1));
    let mut out: Vec<Option<T>> = (0..count).map(|_| None).collect();
    if workers == 1 {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = Some(f(i));
        }
    } else {
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|_| {
                    scope.spawn(|| {
                        let mut local = Vec::new();
                        loop {
                            let i = next.fetch_add(1, Ordering::SeqCst);
                            if i >= count {
                                break;
                            }
                            local.push((i, f(i)));
                        }
                        local
                    })
                })
                .collect();
            for h in handles {
                for (i, v) in h.join().expect("worker panicked") {
                    out[i] = Some(v);
                }
            }
        });
    }
    out.into_iter().map(|v| v.unwrap()).collect()
}

fn check_params(params: &ModelParams, unsafe_params: bool) -> Result<()> {
    if unsafe_params {
        params.validate_unchecked()
    } else {
        params.validate()
    }
}

/// Space-time L1 distance between a coarse-grained lattice field (cells at
/// i/n) and a reference field, restricted to sites i in [k+1, n-k] and
/// times >= t_min; the initial layer and the one-sided boundary fill are
/// excluded from the comparison.
pub fn l1_region(coarse: &DensityField, reference: &DensityField, k: usize, t_min: f64) -> f64 {
    let n = coarse.n_cells();
    let mut sum = 0.0;
    let mut count = 0usize;
    for ti in 0..coarse.n_times() {
        let t = coarse.times()[ti];
        if t < t_min {
            continue;
        }
        for i in (k + 1)..=(n - k) {
            let x = coarse.xs()[i - 1];
            sum += (coarse.at(ti, i - 1) - reference.sample(t, x)).abs();
            count += 1;
        }
    }
    if count == 0 {
        return 0.0;
    }
    sum / count as f64
}

/// Simulate one trajectory and coarse-grain it.
pub fn simulate_coarse(
    params: &ModelParams,
    schedule: &RateSchedule,
    v0: Profile,
    t_max: f64,
    snapshots: usize,
    stream: RngStream,
    budget: u64,
) -> Result<(SimResult, DensityField)> {
    let mut rng = stream.rng();
    let initial = sample_initial(|x| v0.eval(x), params.n, &mut rng)?;
    let obs = observation_times(t_max, snapshots);
    let sim = simulate_with_budget(params, schedule, initial, t_max, &obs, &mut rng, budget);
    if sim.truncated {
        return Err(Error::InvalidParams(format!(
            "event budget {budget} exhausted at t = {:.4} (n = {})",
            sim.final_state.t, params.n
        )));
    }
    let field = coarse_density(&sim.snapshots, params)?;
    Ok((sim, field))
}

/// Reference entropy solution on a fixed fine grid, sampled at the same
/// output times as the simulations.
fn reference_entropy(bd: &BoundaryData, p: f64, t_max: f64, outputs: usize) -> Result<DensityField> {
    let cells = 1024;
    let dx = 1.0 / cells as f64;
    let grid = Grid {
        cells,
        dt: 0.4 * dx / p,
        t_max,
    };
    solve_entropy(bd, p, &grid, outputs)
}

#[derive(Debug, Serialize)]
pub struct ConvergeEntry {
    pub n: usize,
    pub k: usize,
    pub replica_l1: Vec<f64>,
    pub l1_mean: f64,
    pub l1_sem: f64,
    pub events: u64,
}

#[derive(Debug, Serialize)]
pub struct ConvergeReport {
    pub config: ConvergeConfig,
    pub per_n: Vec<ConvergeEntry>,
    pub monotone_decreasing: bool,
    pub asserted: bool,
    pub passed: bool,
}

pub fn run_converge(cfg: &ConvergeConfig, workers: usize, unsafe_params: bool) -> Result<ConvergeReport> {
    if cfg.n_list.is_empty() || cfg.n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("n_list must be nonempty and increasing".into()));
    }
    if cfg.replicas == 0 {
        return Err(Error::InvalidConfig("replicas must be >= 1".into()));
    }
    let budget = cfg.event_budget.unwrap_or(DEFAULT_EVENT_BUDGET);
    let mut per_n = Vec::with_capacity(cfg.n_list.len());
    for (ni, &n) in cfg.n_list.iter().enumerate() {
        let params = match &cfg.model {
            Some(m) => ModelParams { n, ..*m },
            None => cfg.scenario.default_params(n),
        };
        check_params(&params, unsafe_params)?;
        let schedule = cfg
            .schedule
            .clone()
            .unwrap_or_else(|| cfg.scenario.default_schedule());
        cfg.scenario.validate(&params, &schedule)?;
        let k = mesoscopic_k(&params)?;
        let bd = cfg.scenario.boundary_data(cfg.v0, &params, &schedule)?;
        let reference = reference_entropy(&bd, params.p, cfg.t_max, cfg.snapshots)?;

        let outcomes: Vec<Result<(f64, u64)>> = parallel_map(cfg.replicas, workers, |r| {
            let stream = RngStream::new(cfg.seed, ((ni as u64) << 32) | r as u64);
            let (sim, coarse) =
                simulate_coarse(&params, &schedule, cfg.v0, cfg.t_max, cfg.snapshots, stream, budget)?;
            Ok((l1_region(&coarse, &reference, k, 0.05 * cfg.t_max), sim.events))
        });
        let mut replica_l1 = Vec::with_capacity(cfg.replicas);
        let mut events = 0u64;
        for o in outcomes {
            let (l1, e) = o?;
            replica_l1.push(l1);
            events += e;
        }
        let mean = replica_l1.iter().sum::<f64>() / replica_l1.len() as f64;
        let var = replica_l1.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            / (replica_l1.len().max(2) - 1) as f64;
        let sem = (var / replica_l1.len() as f64).sqrt();
        per_n.push(ConvergeEntry {
            n,
            k,
            replica_l1,
            l1_mean: mean,
            l1_sem: sem,
            events,
        });
    }
    let monotone = per_n.windows(2).all(|w| w[1].l1_mean < w[0].l1_mean);
    let asserted = cfg.scenario.asserts_decrease();
    Ok(ConvergeReport {
        config: cfg.clone(),
        per_n,
        monotone_decreasing: monotone,
        asserted,
        passed: monotone || !asserted,
    })
}

#[derive(Debug, Serialize)]
pub struct SweepEntry {
    pub epsilon: f64,
    pub l1: f64,
}

#[derive(Debug, Serialize)]
pub struct ViscousReport {
    pub config: ViscousSweepConfig,
    pub critical_boundary_values: (f64, f64),
    pub critical: Vec<SweepEntry>,
    pub slow: Vec<SweepEntry>,
    pub critical_decreasing: bool,
    pub slow_decreasing: bool,
    pub passed: bool,
}

pub fn run_viscous_sweep(cfg: &ViscousSweepConfig) -> Result<ViscousReport> {
    if cfg.eps_list.is_empty() || cfg.eps_list.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidConfig("eps_list must be nonempty and decreasing".into()));
    }
    let dx = 1.0 / cfg.cells as f64;
    let eps_min = *cfg.eps_list.last().unwrap();
    if dx > eps_min / 4.0 {
        return Err(Error::InvalidConfig(format!(
            "grid cannot resolve epsilon = {eps_min}: need dx <= eps/4, have dx = {dx}"
        )));
    }
    let rates = cfg.rates.into();
    let (vm, vp) = boundary_values_viscous_limit(cfg.p, rates)?;

    let sweep = |regime: ViscousRegime, data: (f64, f64)| -> Result<Vec<SweepEntry>> {
        let bd = BoundaryData::constant(cfg.v0, data.0, data.1);
        let entropy_grid = Grid {
            cells: cfg.cells,
            dt: 0.4 * dx / cfg.p,
            t_max: cfg.t_max,
        };
        let reference = solve_entropy(&bd, cfg.p, &entropy_grid, cfg.outputs)?;
        let mut entries = Vec::new();
        for &eps in &cfg.eps_list {
            let grid = Grid {
                cells: cfg.cells,
                dt: 0.2 * dx * dx / eps,
                t_max: cfg.t_max,
            };
            let viscous = solve_viscous(&cfg.v0, rates, eps, cfg.p, &grid, regime, cfg.outputs)?;
            entries.push(SweepEntry {
                epsilon: eps,
                l1: viscous.l1_distance(&reference)?,
            });
        }
        Ok(entries)
    };

    let critical = sweep(ViscousRegime::Critical, (vm, vp))?;
    let slow = sweep(ViscousRegime::Slow, (0.0, 1.0))?;
    let dec = |e: &[SweepEntry]| e.windows(2).all(|w| w[1].l1 < w[0].l1);
    let (cd, sd) = (dec(&critical), dec(&slow));
    Ok(ViscousReport {
        config: cfg.clone(),
        critical_boundary_values: (vm, vp),
        critical,
        slow,
        critical_decreasing: cd,
        slow_decreasing: sd,
        passed: cd && sd,
    })
}

#[derive(Debug, Serialize)]
pub struct StationaryReport {
    pub config: StationaryConfig,
    pub t_max: f64,
    pub events: u64,
    /// Terminal L1 distance to the predicted single-shock profile
    /// (recorded, not asserted: the prediction is a conjecture).
    pub l1_terminal: f64,
    /// Total-variation distance to the exact stationary law (n <= 10 only).
    pub tv_exact: Option<f64>,
    pub passed: bool,
}

pub fn run_stationary(cfg: &StationaryConfig, unsafe_params: bool) -> Result<StationaryReport> {
    if !(0.0..=1.0).contains(&cfg.m) {
        return Err(Error::InvalidConfig("m must lie in [0, 1]".into()));
    }
    let params = match &cfg.model {
        Some(m) => ModelParams { n: cfg.n, ..*m },
        None => ModelParams::new(cfg.n, 1.0, 0.25, 0.75, -0.5),
    };
    check_params(&params, unsafe_params)?;
    if params.theta > 0.0 {
        return Err(Error::InvalidConfig("stationary runs need the slow regime (theta <= 0)".into()));
    }
    let raw = cfg.rates.unwrap_or([0.0, 1.0, 1.0, 1.0]);
    let schedule = RateSchedule::constant(raw[0], raw[1], raw[2], raw[3]);
    let t_max = cfg.t_max.unwrap_or(if cfg.m > 0.0 { 8.0 / cfg.m } else { 1.0 });
    let budget = cfg.event_budget.unwrap_or(DEFAULT_EVENT_BUDGET);

    let v0 = Profile::Constant { c: cfg.m };
    let (sim, coarse) = simulate_coarse(
        &params,
        &schedule,
        v0,
        t_max,
        9,
        RngStream::new(cfg.seed, 0),
        budget,
    )?;
    let predicted = stationary_profile(cfg.m)?;
    let last = coarse.n_times() - 1;
    let l1_terminal = coarse
        .xs()
        .iter()
        .enumerate()
        .map(|(i, &x)| (coarse.at(last, i) - predicted.eval(x)).abs())
        .sum::<f64>()
        / coarse.n_cells() as f64;

    let tv_exact = if cfg.n <= 10 {
        let rates = raw.into();
        let exact = exact_stationary(&params, rates)?;
        let mut rng = RngStream::new(cfg.seed, 1).rng();
        let mc_events = budget.min(2_000_000);
        let empirical = empirical_stationary(&params, rates, mc_events, &mut rng)?;
        let tv = 0.5
            * exact
                .iter()
                .zip(empirical.iter())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
        Some(tv)
    } else {
        None
    };

    let passed = tv_exact.map_or(true, |tv| tv <= 0.02);
    Ok(StationaryReport {
        config: cfg.clone(),
        t_max,
        events: sim.events,
        l1_terminal,
        tv_exact,
        passed,
    })
}

#[derive(Debug, Serialize)]
pub struct TracesReport {
    pub config: TracesConfig,
    pub strip_width: f64,
    pub estimate: TraceEstimate,
    pub bins_total: usize,
    pub bins_passed: usize,
    pub fraction_passed: f64,
    pub passed: bool,
}

pub fn run_traces(cfg: &TracesConfig, unsafe_params: bool) -> Result<TracesReport> {
    check_params(&cfg.sim.model, unsafe_params)?;
    for v in [cfg.v_minus, cfg.v_plus] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidConfig("boundary data must lie in [0, 1]".into()));
        }
    }
    let budget = cfg.sim.event_budget.unwrap_or(DEFAULT_EVENT_BUDGET);
    let (_, field) = simulate_coarse(
        &cfg.sim.model,
        &cfg.sim.schedule,
        cfg.sim.v0,
        cfg.sim.t_max,
        cfg.sim.snapshots,
        RngStream::new(cfg.sim.seed, 0),
        budget,
    )?;
    let dx = field.dx();
    let eps = cfg.eps_strip.unwrap_or_else(|| default_strip(dx));
    let estimate = estimate_traces(&field, eps)?;

    let mut total = 0usize;
    let mut ok = 0usize;
    for bi in 0..estimate.times.len() {
        // trace tolerance: strip bias plus the per-bin statistical error
        let tau_l = 2.0 * (dx.sqrt() + estimate.var_minus[bi].sqrt());
        let tau_r = 2.0 * (dx.sqrt() + estimate.var_plus[bi].sqrt());
        total += 2;
        if check_trace_set(estimate.u_minus[bi], cfg.v_minus, Side::Left, tau_l)? {
            ok += 1;
        }
        if check_trace_set(estimate.u_plus[bi], cfg.v_plus, Side::Right, tau_r)? {
            ok += 1;
        }
    }
    let fraction = ok as f64 / total.max(1) as f64;
    Ok(TracesReport {
        config: cfg.clone(),
        strip_width: eps,
        estimate,
        bins_total: total,
        bins_passed: ok,
        fraction_passed: fraction,
        passed: fraction >= 0.95,
    })
}

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    pub config: SimulateConfig,
    pub events: u64,
    pub truncated: bool,
    pub injected_left: u64,
    pub removed_left: u64,
    pub injected_right: u64,
    pub removed_right: u64,
    pub passed: bool,
}

pub fn run_simulate(cfg: &SimulateConfig, unsafe_params: bool) -> Result<(SimulateReport, SimResult, DensityField)> {
    check_params(&cfg.model, unsafe_params)?;
    let budget = cfg.event_budget.unwrap_or(DEFAULT_EVENT_BUDGET);
    let (sim, field) = simulate_coarse(
        &cfg.model,
        &cfg.schedule,
        cfg.v0,
        cfg.t_max,
        cfg.snapshots,
        RngStream::new(cfg.seed, 0),
        budget,
    )?;
    let last = sim.snapshots.last().expect("simulation emits snapshots");
    let report = SimulateReport {
        config: cfg.clone(),
        events: sim.events,
        truncated: sim.truncated,
        injected_left: last.injected_left,
        removed_left: last.removed_left,
        injected_right: last.injected_right,
        removed_right: last.removed_right,
        passed: !sim.truncated,
    };
    Ok((report, sim, field))
}

#[derive(Debug, Serialize)]
pub struct SolveReport {
    pub config: SolveConfig,
    pub mass_initial: f64,
    pub mass_final: f64,
    pub passed: bool,
}

pub fn run_solve(cfg: &SolveConfig) -> Result<(SolveReport, DensityField)> {
    let field = solve_entropy(&cfg.bd, cfg.p, &cfg.grid, cfg.outputs)?;
    let mass_initial = mass(&field, field.times()[0])?;
    let mass_final = mass(&field, *field.times().last().unwrap())?;
    let report = SolveReport {
        config: cfg.clone(),
        mass_initial,
        mass_final,
        passed: true,
    };
    Ok((report, field))
}

#[derive(Debug, Serialize)]
pub struct LiggettReport {
    pub config: LiggettConfig,
    pub identity_holds: bool,
    /// `(alpha/(p+sigma), delta/sigma)` when the identity holds.
    pub simplified_values: Option<(f64, f64)>,
    /// Vanishing-viscosity boundary values from the radical formula.
    pub viscous_limit_values: (f64, f64),
    /// Dirichlet values of the strong-reservoir regime, when defined.
    pub fast_values: Option<(f64, f64)>,
    pub passed: bool,
}

pub fn run_liggett(cfg: &LiggettConfig) -> Result<LiggettReport> {
    let rates = cfg.rates.into();
    let (holds, simplified) = liggett_check(cfg.p, cfg.sigma, rates);
    let viscous = boundary_values_viscous_limit(cfg.p, rates)?;
    let fast = boundary_values_fast(rates).ok();
    // when the identity holds the two formulas must agree
    let passed = match simplified {
        Some((vm, vp)) => (vm - viscous.0).abs() < 1e-10 && (vp - viscous.1).abs() < 1e-10,
        None => true,
    };
    Ok(LiggettReport {
        config: cfg.clone(),
        identity_holds: holds,
        simplified_values: simplified,
        viscous_limit_values: viscous,
        fast_values: fast,
        passed,
    })
}

/// Plot-ready `t,x,u` rows.
pub fn write_field_csv(path: &std::path::Path, field: &DensityField) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "x", "u"])?;
    for ti in 0..field.n_times() {
        let t = field.times()[ti];
        for (xi, &x) in field.xs().iter().enumerate() {
            w.write_record([t.to_string(), x.to_string(), field.at(ti, xi).to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Raw `t,site,eta` rows of a trajectory's snapshots.
pub fn write_trajectory_csv(path: &std::path::Path, sim: &SimResult) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "site", "eta"])?;
    for snap in &sim.snapshots {
        for (i, &e) in snap.eta.iter().enumerate() {
            w.write_record([snap.t.to_string(), (i + 1).to_string(), e.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use asep_core::config::Scenario;

    #[test]
    fn observation_times_cover_endpoints() {
        let obs = observation_times(2.0, 5);
        assert_eq!(obs.len(), 5);
        assert_eq!(obs[0], 0.0);
        assert_eq!(obs[4], 2.0);
    }

    #[test]
    fn parallel_map_is_order_stable() {
        let out = parallel_map(17, 4, |i| i * i);
        assert_eq!(out, (0..17).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn liggett_report_consistency() {
        let cfg = LiggettConfig {
            p: 1.0,
            sigma: 1.0,
            rates: [1.0, 1.0, 0.5, 0.5],
        };
        let r = run_liggett(&cfg).unwrap();
        assert!(r.identity_holds && r.passed);
        let (vm, vp) = r.simplified_values.unwrap();
        assert!((vm - 0.5).abs() < 1e-12 && (vp - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stationary_small_n_matches_exact_law() {
        let cfg = StationaryConfig {
            n: 4,
            m: 0.5,
            rates: Some([1.0, 1.0, 1.0, 1.0]),
            seed: 3,
            t_max: Some(0.5),
            model: Some(ModelParams::new(4, 1.0, 1.0, 0.75, 0.0)),
            event_budget: Some(2_000_000),
        };
        let r = run_stationary(&cfg, false).unwrap();
        let tv = r.tv_exact.unwrap();
        assert!(tv <= 0.02, "tv = {tv}");
        assert!(r.passed);
    }

    #[test]
    fn converge_trivial_zero_system() {
        // v0 = 0 with no injection anywhere: both sides identically zero
        let cfg = ConvergeConfig {
            scenario: Scenario::ThmSlow1,
            n_list: vec![64, 128],
            replicas: 2,
            v0: Profile::Constant { c: 0.0 },
            t_max: 0.2,
            snapshots: 5,
            seed: 1,
            model: None,
            schedule: Some(RateSchedule::constant(0.0, 1.0, 1.0, 0.0)),
            event_budget: None,
        };
        let r = run_converge(&cfg, 1, false).unwrap();
        for e in &r.per_n {
            assert!(e.l1_mean < 1e-12, "n = {}: {}", e.n, e.l1_mean);
        }
    }

    #[test]
    fn viscous_sweep_liggett_stationary_case() {
        // constant 1/2 solves both equations: distances stay near zero
        let cfg = ViscousSweepConfig {
            v0: Profile::Constant { c: 0.5 },
            rates: [1.0, 1.0, 0.5, 0.5],
            p: 1.0,
            sigma: 1.0,
            eps_list: vec![0.04, 0.02],
            cells: 200,
            t_max: 0.2,
            outputs: 5,
        };
        let r = run_viscous_sweep(&cfg).unwrap();
        for e in r.critical.iter() {
            assert!(e.l1 < 1e-12, "eps = {}: {}", e.epsilon, e.l1);
        }
    }

    #[test]
    fn viscous_sweep_refuses_unresolved_epsilon() {
        let cfg = ViscousSweepConfig {
            v0: Profile::Constant { c: 0.5 },
            rates: [1.0, 1.0, 0.5, 0.5],
            p: 1.0,
            sigma: 1.0,
            eps_list: vec![0.01],
            cells: 50,
            t_max: 0.2,
            outputs: 3,
        };
        assert!(run_viscous_sweep(&cfg).is_err());
    }
}

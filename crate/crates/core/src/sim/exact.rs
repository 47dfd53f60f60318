//! Brute-force stationary distribution of the full 2^n generator, the oracle
//! the kinetic Monte Carlo simulator is checked against.

use nalgebra::DMatrix;

use crate::model::{ModelParams, Rates};
use crate::sim::RateConsts;
use crate::{Error, Result};

/// Solve `pi Q = 0`, `sum pi = 1` for time-constant rates on lattices with
/// `n <= 12`. Errors on a reducible chain (e.g. all reservoir rates zero).
pub fn exact_stationary(params: &ModelParams, rates: Rates) -> Result<Vec<f64>> {
    let n = params.n;
    if n > 12 {
        return Err(Error::InvalidParams(format!(
            "exact_stationary capped at n <= 12, got {n}"
        )));
    }
    let consts = RateConsts::new(params);
    let states = 1usize << n;

    // transition rates out of state s; bit i of s = occupation of site i+1
    let transitions = |s: usize| -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for b in 0..n - 1 {
            let (a, c) = ((s >> b & 1) as u8, (s >> (b + 1) & 1) as u8);
            let rate = consts.bond_rate(a, c);
            if rate > 0.0 {
                out.push((s ^ (1 << b) ^ (1 << (b + 1)), rate));
            }
        }
        let left = consts.left_flip_rate((s & 1) as u8, &rates);
        if left > 0.0 {
            out.push((s ^ 1, left));
        }
        let right = consts.right_flip_rate((s >> (n - 1) & 1) as u8, &rates);
        if right > 0.0 {
            out.push((s ^ (1 << (n - 1)), right));
        }
        out
    };

    if !strongly_connected(states, &transitions) {
        return Err(Error::ReducibleChain(
            "generator is not irreducible for these rates".into(),
        ));
    }

    // pi Q = 0 with normalisation: solve A x = b, A = Q^T with the last row
    // replaced by ones, b = e_last
    let mut a = DMatrix::<f64>::zeros(states, states);
    for s in 0..states {
        let mut diag = 0.0;
        for (s2, rate) in transitions(s) {
            a[(s2, s)] += rate;
            diag += rate;
        }
        a[(s, s)] -= diag;
    }
    for s in 0..states {
        a[(states - 1, s)] = 1.0;
    }
    let mut b = nalgebra::DVector::<f64>::zeros(states);
    b[states - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::ReducibleChain("singular generator system".into()))?;
    let mut pi: Vec<f64> = pi.iter().copied().collect();
    // round tiny negative values produced by the solve
    for v in &mut pi {
        if *v < 0.0 && *v > -1e-12 {
            *v = 0.0;
        }
    }
    if pi.iter().any(|&v| v < 0.0) {
        return Err(Error::ReducibleChain("negative stationary mass".into()));
    }
    let sum: f64 = pi.iter().sum();
    for v in &mut pi {
        *v /= sum;
    }
    Ok(pi)
}

/// Time-weighted occupation frequencies over bit-coded states from a kinetic
/// Monte Carlo run of `events` steps (after discarding `events / 10` as
/// burn-in). Companion estimator for `exact_stationary`.
pub fn empirical_stationary(
    params: &ModelParams,
    rates: Rates,
    events: u64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<Vec<f64>> {
    let n = params.n;
    if n > 12 {
        return Err(Error::InvalidParams(format!(
            "empirical_stationary capped at n <= 12, got {n}"
        )));
    }
    let schedule = crate::model::RateSchedule::constant(rates.alpha, rates.beta, rates.gamma, rates.delta);
    let mut state = crate::sim::LatticeState::new(vec![0; n]);
    let mut table = crate::sim::build_event_table(&state, params, &schedule);
    let encode = |eta: &[u8]| -> usize {
        eta.iter().enumerate().fold(0usize, |acc, (i, &e)| acc | (e as usize) << i)
    };
    let burnin = events / 10;
    let mut weights = vec![0.0f64; 1 << n];
    for e in 0..events {
        let before = encode(&state.eta);
        let res = crate::sim::step(&mut state, &mut table, &schedule, rng, f64::INFINITY);
        if matches!(res.event, crate::sim::StepEvent::Frozen) {
            return Err(Error::ReducibleChain("total rate vanished during sampling".into()));
        }
        if e >= burnin {
            weights[before] += res.dt;
        }
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidParams("no post-burn-in time accumulated".into()));
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

fn strongly_connected(states: usize, transitions: &dyn Fn(usize) -> Vec<(usize, f64)>) -> bool {
    // forward reachability from 0, then backward
    let forward = reach(states, |s| transitions(s).into_iter().map(|(t, _)| t).collect());
    if forward.iter().any(|&r| !r) {
        return false;
    }
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); states];
    for s in 0..states {
        for (t, _) in transitions(s) {
            rev[t].push(s);
        }
    }
    let backward = reach(states, |s| rev[s].clone());
    backward.iter().all(|&r| r)
}

fn reach(states: usize, next: impl Fn(usize) -> Vec<usize>) -> Vec<bool> {
    let mut seen = vec![false; states];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(s) = stack.pop() {
        for t in next(s) {
            if !seen[t] {
                seen[t] = true;
                stack.push(t);
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RateSchedule;

    #[test]
    fn symmetric_two_site_chain_is_uniform() {
        // p = 0 (unchecked path), sigma = 1, all reservoir rates 1, theta = 0:
        // fully symmetric dynamics, uniform over the 4 states
        let params = ModelParams {
            n: 2,
            p: 0.0,
            sigma: 1.0,
            kappa: 0.75,
            theta: 0.0,
            kappa_prime: None,
            theta_split: None,
        };
        params.validate_unchecked().unwrap();
        let rates = RateSchedule::constant(1.0, 1.0, 1.0, 1.0).eval(0.0);
        let pi = exact_stationary(&params, rates).unwrap();
        for &v in &pi {
            assert!((v - 0.25).abs() < 1e-12, "pi = {pi:?}");
        }
    }

    #[test]
    fn isolated_system_is_reducible() {
        let params = ModelParams::new(3, 1.0, 1.0, 0.75, 0.0);
        let rates = RateSchedule::constant(0.0, 0.0, 0.0, 0.0).eval(0.0);
        assert!(matches!(
            exact_stationary(&params, rates),
            Err(Error::ReducibleChain(_))
        ));
    }

    #[test]
    fn caps_lattice_size() {
        let params = ModelParams::new(13, 1.0, 1.0, 0.75, 0.0);
        let rates = RateSchedule::constant(1.0, 1.0, 1.0, 1.0).eval(0.0);
        assert!(exact_stationary(&params, rates).is_err());
    }

    #[test]
    fn stationarity_residual_vanishes() {
        // pi Q = 0 checked directly on a n = 4 chain with generic rates
        let params = ModelParams::new(4, 1.3, 0.6, 0.7, -0.3);
        let rates = RateSchedule::constant(0.8, 0.5, 0.3, 1.1).eval(0.0);
        let pi = exact_stationary(&params, rates).unwrap();
        let consts = RateConsts::new(&params);
        let n = 4;
        let states = 1usize << n;
        let mut residual = vec![0.0; states];
        for s in 0..states {
            let mut outflow = 0.0;
            for b in 0..n - 1 {
                let rate = consts.bond_rate((s >> b & 1) as u8, (s >> (b + 1) & 1) as u8);
                if rate > 0.0 {
                    residual[s ^ (1 << b) ^ (1 << (b + 1))] += pi[s] * rate;
                    outflow += rate;
                }
            }
            let left = consts.left_flip_rate((s & 1) as u8, &rates);
            if left > 0.0 {
                residual[s ^ 1] += pi[s] * left;
                outflow += left;
            }
            let right = consts.right_flip_rate((s >> (n - 1) & 1) as u8, &rates);
            if right > 0.0 {
                residual[s ^ (1 << (n - 1))] += pi[s] * right;
                outflow += right;
            }
            residual[s] -= pi[s] * outflow;
        }
        let sup = residual.iter().map(|r| r.abs()).fold(0.0, f64::max);
        assert!(sup < 1e-8, "residual {sup}");
    }
}

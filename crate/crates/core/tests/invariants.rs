//! Property tests for the structural invariants: monotone numerical flux,
//! maximum principle, exclusion dynamics, conservation bookkeeping.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use asep_core::config::Scenario;
use asep_core::entropy::{kruzhkov_pair, smooth_pair, verify_pair};
use asep_core::model::{Grid, ModelParams, Profile, RateSchedule};
use asep_core::pde::{godunov_flux, riemann_exact, solve_entropy, BoundaryData};
use asep_core::sim::{build_event_table, sample_initial, step};
use asep_core::traces::{estimate_traces, mass};

fn unit() -> impl Strategy<Value = f64> {
    (0u32..=1000).prop_map(|i| i as f64 / 1000.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn godunov_is_monotone(a in unit(), b in unit(), da in unit(), db in unit(), p in 0.1f64..3.0) {
        let a2 = (a + 0.2 * da).min(1.0);
        let b2 = (b + 0.2 * db).min(1.0);
        let f = godunov_flux(a, b, p).unwrap();
        // nondecreasing in the left state, nonincreasing in the right
        prop_assert!(godunov_flux(a2, b, p).unwrap() >= f - 1e-12);
        prop_assert!(godunov_flux(a, b2, p).unwrap() <= f + 1e-12);
        // consistency: F(u, u) = p J(u)
        prop_assert!((godunov_flux(a, a, p).unwrap() - p * a * (1.0 - a)).abs() < 1e-12);
    }

    #[test]
    fn riemann_values_between_states(ul in unit(), ur in unit(), xi in -3.0f64..3.0, t in 0.01f64..4.0) {
        let r = riemann_exact(ul, ur, 1.0);
        let v = r.eval(t, xi * t);
        prop_assert!(v >= ul.min(ur) - 1e-12 && v <= ul.max(ur) + 1e-12);
    }

    #[test]
    fn entropy_solver_maximum_principle(y in unit(), vm in unit(), vp in unit()) {
        let bd = BoundaryData::constant(Profile::Step { y }, vm, vp);
        let grid = Grid { cells: 50, dt: 0.01, t_max: 0.5 };
        let f = solve_entropy(&bd, 1.0, &grid, 6).unwrap();
        for v in f.values() {
            prop_assert!((0.0..=1.0).contains(v));
        }
    }

    #[test]
    fn mass_complement_symmetry(y in unit()) {
        let bd = BoundaryData::constant(Profile::Step { y }, 0.0, 1.0);
        let grid = Grid { cells: 64, dt: 0.005, t_max: 0.3 };
        let f = solve_entropy(&bd, 1.0, &grid, 5).unwrap();
        let flipped = asep_core::DensityField::from_values(
            f.times().to_vec(),
            f.xs().to_vec(),
            f.values().iter().map(|v| 1.0 - v).collect(),
        ).unwrap();
        for &t in f.times() {
            let a = mass(&f, t).unwrap();
            let b = mass(&flipped, t).unwrap();
            prop_assert!((a + b - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_pairs_verify(c in unit(), m in 1u32..64) {
        verify_pair(&kruzhkov_pair(c).unwrap(), 200, 1e-8).unwrap();
        verify_pair(&smooth_pair(m, c).unwrap(), 200, 1e-8).unwrap();
    }

    #[test]
    fn traces_stay_in_unit_interval(y in unit()) {
        let bd = BoundaryData::constant(Profile::Step { y }, 0.2, 0.8);
        let grid = Grid { cells: 64, dt: 0.005, t_max: 0.4 };
        let f = solve_entropy(&bd, 1.0, &grid, 9).unwrap();
        let tr = estimate_traces(&f, 0.1).unwrap();
        for v in tr.u_minus.iter().chain(&tr.u_plus).chain(&tr.u0) {
            prop_assert!((0.0..=1.0).contains(v));
        }
    }
}

#[test]
fn exclusion_preserved_and_particles_move_one_at_a_time() {
    let params = ModelParams {
        n: 64,
        p: 1.0,
        sigma: 0.5,
        kappa: 0.75,
        theta: -0.5,
        kappa_prime: None,
        theta_split: None,
    };
    let schedule = RateSchedule::constant(0.7, 0.9, 1.1, 0.4);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut state = sample_initial(|x| 0.5 + 0.3 * x, 64, &mut rng).unwrap();
    let mut table = build_event_table(&state, &params, &schedule);
    let mut count: i64 = state.eta.iter().map(|&e| e as i64).sum();
    for _ in 0..20_000 {
        let before = count;
        step(&mut state, &mut table, &schedule, &mut rng, 1.0);
        assert!(state.eta.iter().all(|&e| e <= 1));
        count = state.eta.iter().map(|&e| e as i64).sum();
        assert!((count - before).abs() <= 1, "particle count jumped by {}", count - before);
        if state.t >= 1.0 {
            break;
        }
    }
}

#[test]
fn scenario_defaults_pass_their_own_guards() {
    for s in [
        Scenario::ThmFast,
        Scenario::ThmSlow1,
        Scenario::ThmSlow2,
        Scenario::ConjectureCritical,
    ] {
        let params = s.default_params(256);
        params.validate().unwrap();
        let schedule = s.default_schedule();
        s.validate(&params, &schedule).unwrap();
        s.boundary_data(Profile::Step { y: 0.5 }, &params, &schedule)
            .unwrap();
    }
}

//! Simulation cross-checks: SDE two-time covariances and the stationary
//! measure of the particle chain.

use std::collections::HashMap;

use akpz_core::correlations::{covariance_finite_m, CovarianceQuery};
use akpz_core::ctmc::{log_stationary_weight, Simulator};
use akpz_core::lattice::{enumerate_configs, TorusParams};
use akpz_core::sde::{euler_maruyama_with, replica_rng, EmOptions, GaussianModel, ModelParams, SdeState};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Translation-averaged `ξ_{p,t} ξ_{p+y,s}` per replica, with the
/// deterministic mean removed.
fn two_time_samples(model: &GaussianModel, initial: &SdeState, s: f64, t: f64, ys: &[[i64; 2]], replicas: usize, seed: u64) -> Vec<Vec<f64>> {
    let dt = 1e-3;
    let quiet = |opts: EmOptions| EmOptions { noise: false, ..opts };
    let mut rng = replica_rng(seed, u64::MAX);
    let mean_s = euler_maruyama_with(model, initial, &quiet(EmOptions::new(dt, s)), &mut rng, |_| {}).unwrap();
    let mean_t = euler_maruyama_with(model, &mean_s, &quiet(EmOptions::new(dt, t - s)), &mut rng, |_| {}).unwrap();
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r as u64);
            let at_s = euler_maruyama_with(model, initial, &EmOptions::new(dt, s), &mut rng, |_| {}).unwrap();
            let at_t = euler_maruyama_with(model, &at_s, &EmOptions::new(dt, t - s), &mut rng, |_| {}).unwrap();
            let n = model.space.len();
            ys.iter()
                .map(|y| {
                    (0..n)
                        .map(|i| {
                            let j = model.space.offset_index(i, (y[0], y[1]));
                            (at_t.xi[i] - mean_t.xi[i]) * (at_s.xi[j] - mean_s.xi[j])
                        })
                        .sum::<f64>()
                        / n as f64
                })
                .collect()
        })
        .collect()
}

#[test]
fn two_time_covariance_matches_exact_sum() {
    let p = ModelParams::new(0.5, 1.0).unwrap();
    let model = GaussianModel::new(p, 4, 2).unwrap();
    let (s, t) = (1.0, 1.5);
    // (1,-1) points along U; the covariance there exceeds the one behind.
    let ys = [[0, 0], [1, -1], [-1, 1]];
    let zero = SdeState { xi: vec![0.0; 16], t: 0.0 };
    let samples = two_time_samples(&model, &zero, s, t, &ys, 4000, 7);
    let mut exact = Vec::new();
    for (j, &y) in ys.iter().enumerate() {
        let col: Vec<f64> = samples.iter().map(|r| r[j]).collect();
        let (m, se) = mean_se(&col);
        let want = covariance_finite_m(&CovarianceQuery::new(y, t, s).unwrap(), 4, 2, &p).unwrap().value;
        assert!((m - want).abs() < 4.0 * se, "y={y:?}: {m} ± {se} vs {want}");
        exact.push(want);
    }
    assert!(exact[1] > exact[2]);
}

#[test]
fn covariance_does_not_depend_on_initial_data() {
    let p = ModelParams::new(0.5, 1.0).unwrap();
    let model = GaussianModel::new(p, 4, 2).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let rough = SdeState { xi: (0..16).map(|_| rng.random_range(-3.0..3.0)).collect(), t: 0.0 };
    let zero = SdeState { xi: vec![0.0; 16], t: 0.0 };
    let ys = [[0, 0], [0, 1]];
    let a = two_time_samples(&model, &zero, 1.0, 1.0, &ys, 3000, 21);
    let b = two_time_samples(&model, &rough, 1.0, 1.0, &ys, 3000, 22);
    for j in 0..ys.len() {
        let (ma, sa) = mean_se(&a.iter().map(|r| r[j]).collect::<Vec<_>>());
        let (mb, sb) = mean_se(&b.iter().map(|r| r[j]).collect::<Vec<_>>());
        assert!((ma - mb).abs() < 4.0 * sa.hypot(sb), "{ma} ± {sa} vs {mb} ± {sb}");
    }
}

#[test]
fn chain_at_q_zero_spends_equal_time_in_every_state() {
    let torus = TorusParams::new(4, 3, 2, 1).unwrap();
    let states = enumerate_configs(&torus).unwrap();
    // All weights coincide at q = 0.
    let w0 = log_stationary_weight(&states[0], 0.0).unwrap();
    assert!(states.iter().all(|s| log_stationary_weight(s, 0.0).unwrap() == w0));
    let index: HashMap<Vec<i64>, usize> = states.iter().enumerate().map(|(i, s)| (s.occupation_key(), i)).collect();
    let mut dwell = vec![0.0; states.len()];
    let mut sim = Simulator::new(states[0].clone(), 0.0, 99).unwrap();
    let mut current = index[&sim.config().occupation_key()];
    let mut total = 0.0;
    while total < 60_000.0 {
        let (wait, _) = sim.step();
        dwell[current] += wait;
        total += wait;
        current = index[&sim.config().occupation_key()];
    }
    let expected = total / states.len() as f64;
    for (i, d) in dwell.iter().enumerate() {
        assert!((d - expected).abs() < 0.1 * expected, "state {i}: {d} vs {expected}");
    }
}

#[test]
fn exact_weight_approaches_gaussian_form() {
    use akpz_core::ctmc::gaussian_log_weight_direct;
    use akpz_core::lattice::{crystalline, ParticleConfig};
    let p = ModelParams::new(0.5, 1.0).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let eta: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut prev = f64::INFINITY;
    for eps in [1e-2, 2.5e-3, 6.25e-4, 1.5625e-4] {
        let torus = TorusParams::scaling(4, 4, 2, eps).unwrap();
        let flat = crystalline(&torus).unwrap();
        let x: Vec<i64> = flat.positions().iter().zip(&eta).map(|(x, e)| x + (e / eps.sqrt()).round() as i64).collect();
        let realised: Vec<f64> = x.iter().zip(flat.positions()).map(|(a, b)| (a - b) as f64 * eps.sqrt()).collect();
        let config = ParticleConfig::new(torus, x).unwrap();
        assert!(config.validate().is_valid());
        let q = (-eps).exp();
        let exact = log_stationary_weight(&config, q).unwrap() - log_stationary_weight(&flat, q).unwrap();
        let gauss = gaussian_log_weight_direct(&realised, 4, 2, &p);
        let err = ((exact - gauss) / gauss).abs();
        assert!(err < prev, "eps={eps}: {err} after {prev}");
        prev = err;
    }
    assert!(prev < 5e-3);
}

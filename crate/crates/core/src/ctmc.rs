//! The q-Whittaker particle dynamics as an exact continuous-time Markov
//! chain.
//!
//! Particle `p` carries an exponential clock of rate
//! `(1 − q^{B_p})(1 − q^{D_p+1}) / (1 − q^{C_p+1})`. When it rings, `p` and
//! every particle reached from it along up-right links with zero `F` gap
//! move one site to the right in a single event. The measure
//! `π(σ) ∝ Π_p (q;q)_{A_p} / ((q;q)_{B_p}(q;q)_{C_p})` is stationary.

use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::lattice::{enumerate_configs, fourier_modes, Gaps, Label, LabelSpace, ParticleConfig, TorusParams};
use crate::sde::{self, ModelParams};
use crate::{Error, Result};

fn check_q(q: f64) -> Result<()> {
    if (0.0..1.0).contains(&q) {
        Ok(())
    } else {
        Err(Error::Domain(format!("q must lie in [0, 1), got {q}")))
    }
}

/// `1 − q^n` without cancellation for `q` close to 1.
fn one_minus_pow(q: f64, n: i64) -> f64 {
    if n == 0 {
        0.0
    } else if q == 0.0 {
        1.0
    } else {
        -(n as f64 * q.ln()).exp_m1()
    }
}

/// Jump rate as a function of the gap variables.
pub fn rate_from_gaps(g: &Gaps, q: f64) -> f64 {
    one_minus_pow(q, g.b) * one_minus_pow(q, g.d + 1) / one_minus_pow(q, g.c + 1)
}

/// The rate formula continued to real gap values.
pub fn rate_real(b: f64, c: f64, d: f64, q: f64) -> f64 {
    let ln_q = q.ln();
    let om = |n: f64| -(n * ln_q).exp_m1();
    om(b) * om(d + 1.0) / om(c + 1.0)
}

pub fn jump_rate(config: &ParticleConfig, p: Label, q: f64) -> Result<f64> {
    check_q(q)?;
    Ok(rate_from_gaps(&config.neighbor_distances(p)?, q))
}

/// Particles forced to move when `p` jumps: `p`, then `p + (0,1)` as long as
/// the current particle has `F = 0`, stopping if the chain closes on `p`.
pub fn push_set(config: &ParticleConfig, p: Label) -> Vec<Label> {
    let space = config.labels();
    push_indices(config, space.index(p)).into_iter().map(|i| space.label(i)).collect()
}

fn push_indices(config: &ParticleConfig, start: usize) -> Vec<usize> {
    let space = config.labels();
    let mut set = vec![start];
    let mut current = start;
    while config.gaps_at(current).f == 0 {
        current = space.offset_index(current, (0, 1));
        if current == start || set.len() == space.len() {
            break;
        }
        set.push(current);
    }
    set
}

/// Performs the jump triggered at `p`. Requires `B_p > 0`.
pub fn apply_jump(config: &ParticleConfig, p: Label) -> Result<ParticleConfig> {
    let mut next = config.clone();
    let space = config.labels();
    jump_in_place(&mut next, space.index(p))?;
    Ok(next)
}

fn jump_in_place(config: &mut ParticleConfig, index: usize) -> Result<Vec<usize>> {
    if config.gaps_at(index).b <= 0 {
        return Err(Error::Logic(format!(
            "particle {} has zero rate (B = 0) and cannot jump",
            config.labels().label(index)
        )));
    }
    let set = push_indices(config, index);
    for &r in &set {
        config.advance(r);
    }
    Ok(set)
}

/// Current rates of all particles with their sum.
#[derive(Clone, Debug, PartialEq)]
pub struct RateTable {
    pub rates: Vec<f64>,
    pub total_rate: f64,
}

impl RateTable {
    pub fn new(config: &ParticleConfig, q: f64) -> Self {
        let rates: Vec<f64> = (0..config.labels().len()).map(|i| rate_from_gaps(&config.gaps_at(i), q)).collect();
        let total_rate = rates.iter().sum();
        Self { rates, total_rate }
    }

    /// Refreshes the rates that can change when the particles in `moved`
    /// shift: a rate depends on `x_p` and on `x` at `p+(1,−1)`, `p−(1,0)`,
    /// `p+(0,−1)`.
    pub fn update(&mut self, config: &ParticleConfig, q: f64, moved: &[usize]) {
        let space = config.labels();
        for &r in moved {
            for delta in [(0, 0), (1, 0), (0, 1), (-1, 1)] {
                let p = space.offset_index(r, delta);
                self.rates[p] = rate_from_gaps(&config.gaps_at(p), q);
            }
        }
        self.total_rate = self.rates.iter().sum();
    }

    /// Index whose cumulative rate interval contains `u ∈ [0, total)`.
    fn select(&self, u: f64) -> usize {
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &r) in self.rates.iter().enumerate() {
            if r > 0.0 {
                acc += r;
                last = i;
                if u < acc {
                    return i;
                }
            }
        }
        last
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpRecord {
    pub time: f64,
    pub trigger: Label,
    pub pushed: Vec<Label>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub events: Vec<JumpRecord>,
    /// States at the requested observation times `0, dt, 2dt, …`.
    pub samples: Vec<(f64, ParticleConfig)>,
    /// Number of unit moves made by each particle, by label index.
    pub moves: Vec<u64>,
    pub final_config: ParticleConfig,
    pub final_time: f64,
}

/// Event-driven sampler of the chain.
#[derive(Clone, Debug)]
pub struct Simulator {
    config: ParticleConfig,
    q: f64,
    table: RateTable,
    rng: ChaCha8Rng,
    time: f64,
}

impl Simulator {
    pub fn new(config: ParticleConfig, q: f64, seed: u64) -> Result<Self> {
        Self::with_rng(config, q, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(config: ParticleConfig, q: f64, rng: ChaCha8Rng) -> Result<Self> {
        check_q(q)?;
        if let Some(v) = config.validate().violation {
            return Err(Error::Configuration(v.to_string()));
        }
        let table = RateTable::new(&config, q);
        Ok(Self { config, q, table, rng, time: 0.0 })
    }

    pub fn config(&self) -> &ParticleConfig {
        &self.config
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn rates(&self) -> &RateTable {
        &self.table
    }

    /// Waiting time until the next event, without performing it.
    fn draw_wait(&mut self) -> f64 {
        let e: f64 = self.rng.sample(Exp1);
        e / self.table.total_rate
    }

    /// Chooses a trigger and performs the jump; returns the moved indices.
    fn fire(&mut self) -> (usize, Vec<usize>) {
        let u = self.rng.random::<f64>() * self.table.total_rate;
        let trigger = self.table.select(u);
        let moved = jump_in_place(&mut self.config, trigger).expect("selected particle has positive rate");
        self.table.update(&self.config, self.q, &moved);
        debug_assert!(self.config.validate().is_valid());
        (trigger, moved)
    }

    /// Advances to the next event. Returns the dwell time in the previous
    /// state and the moved label indices (trigger first).
    pub fn step(&mut self) -> (f64, Vec<usize>) {
        let wait = self.draw_wait();
        self.time += wait;
        let (_, moved) = self.fire();
        (wait, moved)
    }

    /// Runs until time `t_end`, reporting every event to `on_event` and
    /// every crossing of an observation time. The event that would fall past
    /// `t_end` is discarded (memorylessness makes this exact).
    pub fn run_until(&mut self, t_end: f64, observe_every: Option<f64>, mut on_sample: impl FnMut(f64, &ParticleConfig), mut on_event: impl FnMut(f64, usize, &[usize])) {
        let t0 = self.time;
        let mut k = 0u64;
        let slack = 1e-12 * t_end.abs().max(1.0);
        loop {
            let wait = if self.table.total_rate > 0.0 { self.draw_wait() } else { f64::INFINITY };
            let t_next = self.time + wait;
            if let Some(dt) = observe_every {
                loop {
                    let obs = t0 + k as f64 * dt;
                    if obs > t_end + slack || obs >= t_next {
                        break;
                    }
                    on_sample(obs.min(t_end), &self.config);
                    k += 1;
                }
            }
            if t_next > t_end {
                self.time = t_end;
                return;
            }
            self.time = t_next;
            let (trigger, moved) = self.fire();
            on_event(self.time, trigger, &moved);
        }
    }
}

/// Samples a trajectory on `[0, t_end]`.
pub fn simulate(config: &ParticleConfig, q: f64, t_end: f64, seed: u64, observe_every: Option<f64>) -> Result<Trajectory> {
    if !(t_end >= 0.0) {
        return Err(Error::Parameter(format!("time horizon must be non-negative, got {t_end}")));
    }
    if let Some(dt) = observe_every {
        if !(dt > 0.0) {
            return Err(Error::Parameter(format!("observation step must be positive, got {dt}")));
        }
    }
    let mut sim = Simulator::new(config.clone(), q, seed)?;
    let space = config.labels();
    let mut events = Vec::new();
    let mut samples = Vec::new();
    let mut moves = vec![0u64; space.len()];
    sim.run_until(
        t_end,
        observe_every,
        |t, c| samples.push((t, c.clone())),
        |t, trigger, moved| {
            for &r in moved {
                moves[r] += 1;
            }
            events.push(JumpRecord {
                time: t,
                trigger: space.label(trigger),
                pushed: moved.iter().map(|&r| space.label(r)).collect(),
            });
        },
    );
    Ok(Trajectory { events, samples, moves, final_config: sim.config.clone(), final_time: sim.time })
}

/// `log (q;q)_n = Σ_{i=1}^n log(1 − q^i)`.
pub fn log_q_pochhammer(q: f64, n: u64) -> Result<f64> {
    check_q(q)?;
    if q == 0.0 {
        return Ok(0.0);
    }
    let ln_q = q.ln();
    let mut sum = 0.0;
    for i in 1..=n {
        let x = i as f64 * ln_q;
        if x < -40.0 {
            // Remaining factors are 1 to double precision.
            break;
        }
        sum += (-x.exp_m1()).ln();
    }
    Ok(sum)
}

/// Unnormalised log stationary weight `Σ_p [log(q;q)_{A_p} − log(q;q)_{B_p} − log(q;q)_{C_p}]`.
pub fn log_stationary_weight(config: &ParticleConfig, q: f64) -> Result<f64> {
    check_q(q)?;
    let mut cache: HashMap<i64, f64> = HashMap::new();
    let mut lqp = |n: i64| -> Result<f64> {
        if let Some(&v) = cache.get(&n) {
            return Ok(v);
        }
        let v = log_q_pochhammer(q, n as u64)?;
        cache.insert(n, v);
        Ok(v)
    };
    let mut total = 0.0;
    for p in config.labels().iter() {
        let g = config.neighbor_distances(p)?;
        total += lqp(g.a)? - lqp(g.b)? - lqp(g.c)?;
    }
    Ok(total)
}

/// Dense generator over the enumerated state space.
#[derive(Clone, Debug)]
pub struct GeneratorMatrix {
    pub states: Vec<ParticleConfig>,
    /// Row-major `n × n` entries.
    pub entries: Vec<f64>,
}

impl GeneratorMatrix {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim() + j]
    }

    /// Every state reaches every other along positive-rate transitions.
    pub fn is_irreducible(&self) -> bool {
        let n = self.dim();
        if n == 0 {
            return true;
        }
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            while let Some(i) = queue.pop_front() {
                for j in 0..n {
                    let rate = if forward { self.get(i, j) } else { self.get(j, i) };
                    if i != j && rate > 0.0 && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }

    /// `‖πᵀQ‖_∞`.
    pub fn residual(&self, pi: &[f64]) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|j| (0..n).map(|i| pi[i] * self.get(i, j)).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }
}

pub fn build_generator(torus: &TorusParams, q: f64) -> Result<GeneratorMatrix> {
    check_q(q)?;
    let states = enumerate_configs(torus)?;
    let n = states.len();
    let index: HashMap<Vec<i64>, usize> = states.iter().enumerate().map(|(i, s)| (s.occupation_key(), i)).collect();
    let mut entries = vec![0.0; n * n];
    for (i, state) in states.iter().enumerate() {
        for p in state.labels().iter() {
            let rate = jump_rate(state, p, q)?;
            if rate == 0.0 {
                continue;
            }
            let next = apply_jump(state, p)?;
            let j = *index
                .get(&next.occupation_key())
                .ok_or_else(|| Error::Logic("jump left the enumerated state space".into()))?;
            entries[i * n + j] += rate;
        }
        // A jump never returns to the same occupation, so the diagonal is
        // free to hold the negated row sum.
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| entries[i * n + j]).sum();
        entries[i * n + i] = -off;
    }
    Ok(GeneratorMatrix { states, entries })
}

/// Normalised stationary measure over `states`.
pub fn stationary_vector(states: &[ParticleConfig], q: f64) -> Result<Vec<f64>> {
    let logs = states.iter().map(|s| log_stationary_weight(s, q)).collect::<Result<Vec<_>>>()?;
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / z).collect())
}

/// `‖πᵀQ‖_∞` for the normalised stationary weight on the full state space.
pub fn check_stationarity(torus: &TorusParams, q: f64) -> Result<f64> {
    let gen = build_generator(torus, q)?;
    let pi = stationary_vector(&gen.states, q)?;
    Ok(gen.residual(&pi))
}

/// `−½(η, Qη)` from the three squared-gradient sums, with `η` indexed by
/// label on the square quotient `R_m`.
pub fn gaussian_log_weight_direct(etas: &[f64], m: usize, m2: usize, params: &ModelParams) -> f64 {
    let space = LabelSpace::square(m, m2);
    let f = |x: f64| sde::gap_weight(x);
    let grad_sq = |delta| -> f64 {
        (0..space.len())
            .map(|i| {
                let d = etas[i] - etas[space.offset_index(i, delta)];
                d * d
            })
            .sum()
    };
    0.5 * (f(params.d) * grad_sq((1, 0)) - f(params.b) * grad_sq((1, -1)) - f(params.c) * grad_sq((0, -1)))
}

/// The same form as `Σ_k |η̂_k|² Q̂(k)`.
pub fn gaussian_log_weight_fourier(etas: &[f64], m: usize, m2: usize, params: &ModelParams) -> Result<f64> {
    let modes = fourier_modes(m, m2)?;
    let hat = modes.transform(etas);
    Ok(modes.modes.iter().zip(&hat).map(|(&k, e)| e.norm_sqr() * sde::symbol_q(k, params)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::crystalline;
    use rand::seq::IndexedRandom;

    fn small() -> TorusParams {
        TorusParams::new(4, 3, 2, 1).unwrap()
    }

    #[test]
    fn rate_special_cases() {
        let g = Gaps { a: 3, b: 0, c: 1, d: 2, e: 0, f: 1 };
        assert_eq!(rate_from_gaps(&g, 0.5), 0.0);
        assert_eq!(rate_from_gaps(&g, 0.0), 0.0);
        let g = Gaps { b: 2, ..g };
        assert_eq!(rate_from_gaps(&g, 0.0), 1.0);
        let want = (1.0 - 0.25) * (1.0 - 0.125) / (1.0 - 0.25);
        assert!((rate_from_gaps(&g, 0.5) - want).abs() < 1e-15);
    }

    #[test]
    fn rate_converges_to_speed() {
        let (b, c, d) = (0.5, 0.5, 1.0);
        let v = (1.0 - (-b as f64).exp()) * (1.0 - (-d as f64).exp()) / (1.0 - (-c as f64).exp());
        let mut errs = Vec::new();
        for eps in [1e-2, 1e-3, 1e-4] {
            let g = Gaps {
                a: 0,
                b: (b / eps) as i64,
                c: (c / eps) as i64,
                d: (d / eps) as i64,
                e: 0,
                f: 0,
            };
            errs.push((rate_from_gaps(&g, (-eps as f64).exp()) - v).abs());
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2] && errs[2] < 1e-4, "{errs:?}");
    }

    #[test]
    fn q_pochhammer_cases() {
        assert_eq!(log_q_pochhammer(0.5, 0).unwrap(), 0.0);
        assert_eq!(log_q_pochhammer(0.0, 7).unwrap(), 0.0);
        assert!((log_q_pochhammer(0.5, 3).unwrap() - 0.328125f64.ln()).abs() < 1e-15);
        assert!(log_q_pochhammer(1.0, 3).is_err());
        let big = log_q_pochhammer((-1e-4f64).exp(), 1_000_000).unwrap();
        assert!(big.is_finite() && big < 0.0);
    }

    #[test]
    fn crystalline_push_set_is_singleton() {
        let torus = TorusParams::scaling(8, 2, 1, 1.0).unwrap();
        let c = crystalline(&torus).unwrap();
        for p in torus.labels().iter() {
            assert_eq!(push_set(&c, p), vec![p]);
            let next = apply_jump(&c, p).unwrap();
            for q in torus.labels().iter() {
                let shift = (next.position(q) - c.position(q)).rem_euclid(8);
                assert_eq!(shift, i64::from(q == p));
            }
        }
    }

    #[test]
    fn two_particle_stack_moves_together() {
        let configs = enumerate_configs(&small()).unwrap();
        let mut seen = false;
        for c in &configs {
            for p in small().labels().iter() {
                let g = c.neighbor_distances(p).unwrap();
                let up = small().labels().offset(p, (0, 1));
                if g.f == 0 && g.b > 0 && c.neighbor_distances(up).unwrap().f > 0 {
                    assert_eq!(push_set(c, p), vec![p, up]);
                    let next = apply_jump(c, p).unwrap();
                    assert!(next.validate().is_valid());
                    seen = true;
                }
            }
        }
        assert!(seen);
    }

    #[test]
    fn zero_rate_jump_is_rejected() {
        let configs = enumerate_configs(&small()).unwrap();
        let (c, p) = configs
            .iter()
            .find_map(|c| small().labels().iter().find(|&p| c.neighbor_distances(p).unwrap().b == 0).map(|p| (c, p)))
            .unwrap();
        assert!(matches!(apply_jump(c, p), Err(Error::Logic(_))));
    }

    #[test]
    fn jumps_preserve_validity_and_sector() {
        let configs = enumerate_configs(&small()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let c = configs.choose(&mut rng).unwrap();
            let movable: Vec<Label> = small().labels().iter().filter(|&p| c.neighbor_distances(p).unwrap().b > 0).collect();
            let p = *movable.choose(&mut rng).unwrap();
            let before = c.neighbor_distances(p).unwrap().b;
            let next = apply_jump(c, p).unwrap();
            assert!(next.validate().is_valid());
            assert_eq!(next.sector().unwrap(), c.sector().unwrap());
            assert_eq!(next.neighbor_distances(p).unwrap().b, before - 1);
        }
    }

    #[test]
    fn incremental_rates_match_full_recompute() {
        let torus = TorusParams::scaling(4, 4, 2, 0.1).unwrap();
        let c = crystalline(&torus).unwrap();
        let mut sim = Simulator::new(c, 0.8, 3).unwrap();
        for _ in 0..5000 {
            sim.step();
            let fresh = RateTable::new(sim.config(), 0.8);
            for (a, b) in fresh.rates.iter().zip(&sim.rates().rates) {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn stationary_weight_properties() {
        let configs = enumerate_configs(&small()).unwrap();
        for c in &configs {
            assert_eq!(log_stationary_weight(c, 0.0).unwrap(), 0.0);
            let w = log_stationary_weight(c, 0.5).unwrap();
            assert!((log_stationary_weight(&c.shifted(1), 0.5).unwrap() - w).abs() < 1e-14);
        }
        // Ratio against the explicit product of q-Pochhammer symbols.
        let qp = |n: i64| (1..=n).map(|i| 1.0 - 0.5f64.powi(i as i32)).product::<f64>();
        let weight = |c: &ParticleConfig| {
            small()
                .labels()
                .iter()
                .map(|p| {
                    let g = c.neighbor_distances(p).unwrap();
                    qp(g.a) / (qp(g.b) * qp(g.c))
                })
                .product::<f64>()
        };
        let (a, b) = (&configs[0], &configs[configs.len() - 1]);
        let ratio = (log_stationary_weight(a, 0.5).unwrap() - log_stationary_weight(b, 0.5).unwrap()).exp();
        assert!((ratio - weight(a) / weight(b)).abs() < 1e-13);
    }

    #[test]
    fn generator_structure() {
        let gen = build_generator(&small(), 0.0).unwrap();
        for i in 0..gen.dim() {
            let row: f64 = (0..gen.dim()).map(|j| gen.get(i, j)).sum();
            assert_eq!(row, 0.0);
            for j in 0..gen.dim() {
                let x = gen.get(i, j);
                if i != j {
                    assert!(x == 0.0 || x == 1.0, "q = 0 off-diagonal {x}");
                }
            }
        }
        assert!(gen.is_irreducible());
        assert!(build_generator(&small(), 0.5).unwrap().is_irreducible());
    }

    #[test]
    fn stationarity_and_sensitivity() {
        assert!(check_stationarity(&small(), 0.0).unwrap() < 1e-12);
        assert!(check_stationarity(&small(), 0.5).unwrap() < 1e-10);
        let gen = build_generator(&small(), 0.5).unwrap();
        let mut pi = stationary_vector(&gen.states, 0.5).unwrap();
        pi[0] *= 1.01;
        assert!(gen.residual(&pi) > 1e-4);
    }

    #[test]
    fn simulate_zero_horizon_and_determinism() {
        let c = enumerate_configs(&small()).unwrap().remove(0);
        let t = simulate(&c, 0.3, 0.0, 1, None).unwrap();
        assert!(t.events.is_empty());
        let a = simulate(&c, 0.3, 50.0, 9, Some(1.0)).unwrap();
        let b = simulate(&c, 0.3, 50.0, 9, Some(1.0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples.len(), 51);
        assert!(a.events.windows(2).all(|w| w[0].time < w[1].time));
    }

    #[test]
    fn gaussian_weight_direct_matches_fourier() {
        let params = ModelParams::new(0.5, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        assert!(gaussian_log_weight_direct(&[0.7; 16], 4, 2, &params).abs() < 1e-15);
        for _ in 0..100 {
            let eta: Vec<f64> = (0..16).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let d = gaussian_log_weight_direct(&eta, 4, 2, &params);
            let f = gaussian_log_weight_fourier(&eta, 4, 2, &params).unwrap();
            assert!((d - f).abs() < 1e-12, "{d} vs {f}");
        }
    }
}

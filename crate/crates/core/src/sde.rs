//! Gaussian fluctuation limit: speed, drift stencil, Fourier symbols,
//! spectral geometry and an Euler–Maruyama integrator for
//! `dξ_p = √v dW_p + Σ_{p'} A_{p,p'} ξ_{p'} dt` on the quotient `R_m`.
//!
//! The symbol is `Â(k) = A_{00} + d2·e^{−i(k1−k2)} − d1·e^{ik1} + d3·e^{ik2}`.
//! With `f_k(p) = e^{−ipk}/m`, the Fourier coefficient `ξ̂_k` evolves with
//! rate `Â(−k)`; see [`mode_eigenvalue`].

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::ctmc;
use crate::lattice::{LabelSpace, TorusParams};
use crate::{Error, Result};

/// `f(x) = e^{−x}/(1 − e^{−x})`, the weight of a gap of macroscopic size `x`.
pub fn gap_weight(x: f64) -> f64 {
    1.0 / x.exp_m1()
}

/// `1 − e^{−x}`.
fn om(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// Origin of a parameter set in the particle system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QLink {
    pub eps: f64,
    pub ell: usize,
    pub m: usize,
    pub m2: usize,
}

/// Macroscopic slopes `B = D − C`, `C`, `D` and the speed `v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub v: f64,
    pub link: Option<QLink>,
}

impl ModelParams {
    pub fn new(c: f64, d: f64) -> Result<Self> {
        let v = speed(c, d)?;
        Ok(Self { b: d - c, c, d, v, link: None })
    }

    /// Parameters of a scaling-regime torus.
    pub fn from_torus(torus: &TorusParams) -> Result<Self> {
        let scaling = torus
            .scaling
            .ok_or_else(|| Error::Parameter("torus has no scaling parameters".into()))?;
        let (_, c, d) = torus.slopes().expect("scaling regime");
        let mut p = Self::new(c, d)?;
        p.link = Some(QLink { eps: scaling.eps, ell: scaling.ell, m: torus.m1, m2: torus.m2 });
        Ok(p)
    }

    pub fn coeffs(&self) -> DriftCoeffs {
        drift_coeffs(self)
    }
}

/// `v(C, D) = (1 − e^{−B})(1 − e^{−D}) / (1 − e^{−C})`.
pub fn speed(c: f64, d: f64) -> Result<f64> {
    if !(c > 0.0 && c < d && d.is_finite()) {
        return Err(Error::Domain(format!("need 0 < C < D, got C={c}, D={d}")));
    }
    Ok(om(d - c) * om(d) / om(c))
}

/// The three independent drift coefficients: `A_{p,p} = d1 − d2 − d3`,
/// `A_{p,p+(1,−1)} = d2`, `A_{p,p−(1,0)} = −d1`, `A_{p,p−(0,1)} = d3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftCoeffs {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl DriftCoeffs {
    pub fn a00(&self) -> f64 {
        self.d1 - self.d2 - self.d3
    }

    /// Row sum of the stencil; zero up to rounding.
    pub fn row_sum(&self) -> f64 {
        self.a00() + self.d2 - self.d1 + self.d3
    }

    /// `‖A‖_∞`.
    pub fn inf_norm(&self) -> f64 {
        self.a00().abs() + self.d1 + self.d2 + self.d3
    }
}

// d1 = v f(D), d2 = v f(B), d3 = v f(C).
pub fn drift_coeffs(params: &ModelParams) -> DriftCoeffs {
    let (b, c, d) = (params.b, params.c, params.d);
    DriftCoeffs {
        d1: (-d).exp() * om(b) / om(c),
        d2: (-b).exp() * om(d) / om(c),
        d3: (-c).exp() * om(b) * om(d) / (om(c) * om(c)),
    }
}

/// `Â(k)` for real `k`.
pub fn symbol_a(k: [f64; 2], c: &DriftCoeffs) -> Complex64 {
    c.a00() + c.d2 * Complex64::cis(-(k[0] - k[1])) - c.d1 * Complex64::cis(k[0]) + c.d3 * Complex64::cis(k[1])
}

/// Growth rate of the Fourier coefficient `ξ̂_k`: `Â(−k)`.
pub fn mode_eigenvalue(k: [f64; 2], c: &DriftCoeffs) -> Complex64 {
    symbol_a([-k[0], -k[1]], c)
}

/// `1 − cos x` without cancellation.
fn vers(x: f64) -> f64 {
    let s = (0.5 * x).sin();
    2.0 * s * s
}

/// `R̂(k) = Â(k) + Â(−k) = 2[d1(1−cos k1) − d2(1−cos(k1−k2)) − d3(1−cos k2)]`.
pub fn symbol_r(k: [f64; 2], c: &DriftCoeffs) -> f64 {
    2.0 * (c.d1 * vers(k[0]) - c.d2 * vers(k[0] - k[1]) - c.d3 * vers(k[1]))
}

/// `Q̂(k) = f(D)(1−cos k1) − f(B)(1−cos(k1−k2)) − f(C)(1−cos k2)`, the
/// Fourier multiplier of the Gaussian approximation of `log π`.
pub fn symbol_q(k: [f64; 2], p: &ModelParams) -> f64 {
    gap_weight(p.d) * vers(k[0]) - gap_weight(p.b) * vers(k[0] - k[1]) - gap_weight(p.c) * vers(k[1])
}

/// Quadratic form `Ŵ(k) = d1 k1² − d2 (k1−k2)² − d3 k2²`.
pub fn symbol_w(k: [f64; 2], c: &DriftCoeffs) -> f64 {
    c.d1 * k[0] * k[0] - c.d2 * (k[0] - k[1]).powi(2) - c.d3 * k[1] * k[1]
}

/// `Δ(C, D)`; the stationary points of `Q̂` away from the lattice
/// `{0, π}²` would require `Δ ≥ 0`.
pub fn stationary_point_discriminant(c: f64, d: f64) -> f64 {
    let (ec, ed) = (c.exp(), d.exp());
    -((1.0 + ec) * (ec + ed) * (-3.0 * ec + ec * ec + ed + ec * ed))
        / ((1.0 - ec).powi(2) * (ec - ed).powi(2) * (1.0 - ed).powi(4))
}

/// Geometry of the Gaussian limit at `k → 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralData {
    /// Symmetric matrix of `Ŵ`.
    pub whess: [[f64; 2]; 2],
    /// `√det Ŵ`.
    pub w: f64,
    /// `V` with `V Ŵ Vᵀ = −I`.
    pub v_mat: [[f64; 2]; 2],
    pub v_inv: [[f64; 2]; 2],
    /// Characteristic velocity `U = (d1 + d2, −d2 − d3)`.
    pub u: [f64; 2],
    /// Eigenvalues of `−Ŵ`, descending.
    pub eigenvalues: [f64; 2],
}

fn mat_vec(m: &[[f64; 2]; 2], x: [f64; 2]) -> [f64; 2] {
    [m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1]]
}

impl SpectralData {
    pub fn apply_v(&self, y: [f64; 2]) -> [f64; 2] {
        mat_vec(&self.v_mat, y)
    }

    pub fn apply_v_inv(&self, x: [f64; 2]) -> [f64; 2] {
        mat_vec(&self.v_inv, x)
    }

    /// `|V y|`.
    pub fn v_norm(&self, y: [f64; 2]) -> f64 {
        let z = self.apply_v(y);
        z[0].hypot(z[1])
    }

    /// Smallest eigenvalue of `−Ŵ`.
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[1]
    }
}

pub fn spectral_data(c: &DriftCoeffs) -> Result<SpectralData> {
    let whess = [[c.d1 - c.d2, c.d2], [c.d2, -c.d2 - c.d3]];
    // −Ŵ = [[a, b], [b, e]].
    let (a, b, e) = (-whess[0][0], -whess[0][1], -whess[1][1]);
    let mean = 0.5 * (a + e);
    let rad = (0.5 * (a - e)).hypot(b);
    let lam = [mean + rad, mean - rad];
    if !(lam[1] > 0.0) {
        return Err(Error::Model(format!("Hessian form is not negative definite: eigenvalues of −Ŵ {lam:?}")));
    }
    let det = whess[0][0] * whess[1][1] - whess[0][1] * whess[1][0];
    let w = det.sqrt();
    let mut rows = [[0.0; 2]; 2];
    for (i, &l) in lam.iter().enumerate() {
        let cand1 = [b, l - a];
        let cand2 = [l - e, b];
        let mut s = if cand1[0].hypot(cand1[1]) >= cand2[0].hypot(cand2[1]) { cand1 } else { cand2 };
        let n = s[0].hypot(s[1]);
        if n == 0.0 {
            // Isotropic case: any orthonormal basis diagonalises.
            s = if i == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
        } else {
            s = [s[0] / n, s[1] / n];
        }
        let first = if s[0] != 0.0 { s[0] } else { s[1] };
        if first < 0.0 {
            s = [-s[0], -s[1]];
        }
        let scale = 1.0 / l.sqrt();
        rows[i] = [s[0] * scale, s[1] * scale];
    }
    let det_v = rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0];
    let v_inv = [[rows[1][1] / det_v, -rows[0][1] / det_v], [-rows[1][0] / det_v, rows[0][0] / det_v]];
    let u = [c.d1 + c.d2, -c.d2 - c.d3];
    Ok(SpectralData { whess, w, v_mat: rows, v_inv, u, eigenvalues: lam })
}

/// `e^{−D}(1 − e^{−D})(1 − e^{−B})² / (1 − e^{−C})²`, the closed form of `det Ŵ`.
pub fn w_squared_closed_form(p: &ModelParams) -> f64 {
    (-p.d).exp() * om(p.d) * om(p.b).powi(2) / om(p.c).powi(2)
}

/// One line of a [`SymbolReport`].
#[derive(Clone, Debug, PartialEq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolReport {
    pub checks: Vec<PropertyCheck>,
}

impl SymbolReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Maximum of `R̂` over an `n × n` grid of `[−π, π)²` minus the origin.
pub fn max_r_off_origin(c: &DriftCoeffs, n: usize) -> f64 {
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let mut max = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            if i == n / 2 && j == n / 2 {
                continue;
            }
            let k = [-std::f64::consts::PI + i as f64 * h, -std::f64::consts::PI + j as f64 * h];
            max = max.max(symbol_r(k, c));
        }
    }
    max
}

/// Checks the structural properties of the drift symbol: `Â(0) = 0`,
/// strict negativity of `R̂` off the origin, negative definiteness of `Ŵ`,
/// `Δ < 0`, and `Q̂ = R̂/(2v)` on random wave vectors.
pub fn validate_symbol_properties(params: &ModelParams) -> SymbolReport {
    let c = drift_coeffs(params);
    let mut checks = Vec::new();
    let a0 = symbol_a([0.0, 0.0], &c).norm();
    checks.push(PropertyCheck { name: "A(0) = 0", value: a0, tolerance: 1e-14, passed: a0 < 1e-14 });
    let rmax = max_r_off_origin(&c, 512);
    checks.push(PropertyCheck { name: "R(k) < 0 off origin", value: rmax, tolerance: 0.0, passed: rmax < 0.0 });
    let lam_min = spectral_data(&c).map(|s| s.lambda_min()).unwrap_or(f64::NAN);
    checks.push(PropertyCheck { name: "W negative definite", value: -lam_min, tolerance: 0.0, passed: lam_min > 0.0 });
    let delta = stationary_point_discriminant(params.c, params.d);
    checks.push(PropertyCheck { name: "Delta < 0", value: delta, tolerance: 0.0, passed: delta < 0.0 });
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let k = random_wave_vector(&mut rng);
        worst = worst.max((symbol_q(k, params) - symbol_r(k, &c) / (2.0 * params.v)).abs());
    }
    checks.push(PropertyCheck { name: "Q(k) = R(k)/(2v)", value: worst, tolerance: 1e-12, passed: worst < 1e-12 });
    SymbolReport { checks }
}

/// Uniform sample of `[−π, π)²`.
pub fn random_wave_vector(rng: &mut impl rand::Rng) -> [f64; 2] {
    let pi = std::f64::consts::PI;
    [rng.random_range(-pi..pi), rng.random_range(-pi..pi)]
}

/// Central finite differences of `v(∂₁H, ∂₂H)` at `(D, C)`, compared with
/// `U`. Returns the numerical gradient and the componentwise relative error.
pub fn grad_v_check(params: &ModelParams, h: f64) -> Result<([f64; 2], [f64; 2])> {
    let v = |h1: f64, h2: f64| -(h2 - h1).exp_m1() * om(h1) / om(h2);
    let (d, c) = (params.d, params.c);
    let g = [(v(d + h, c) - v(d - h, c)) / (2.0 * h), (v(d, c + h) - v(d, c - h)) / (2.0 * h)];
    let u = spectral_data(&drift_coeffs(params))?.u;
    Ok((g, [((g[0] - u[0]) / u[0]).abs(), ((g[1] - u[1]) / u[1]).abs()]))
}

/// Drift coefficients recovered from the microscopic rate at `q = e^{−ε}`:
/// the rate is differentiated in its gap arguments by central differences
/// around `(B/ε, C/ε, D/ε)` with step `h/√ε`, then rescaled by `1/ε`.
pub fn linearized_rate_coeffs(params: &ModelParams, eps: f64, h: f64) -> DriftCoeffs {
    let q = (-eps).exp();
    let (b, c, d) = (params.b / eps, params.c / eps, params.d / eps);
    let step = h / eps.sqrt();
    let r = |b, c, d| ctmc::rate_real(b, c, d, q);
    let deriv = |f: &dyn Fn(f64) -> f64| (f(step) - f(-step)) / (2.0 * step) / eps;
    DriftCoeffs {
        d1: deriv(&|s| r(b, c, d + s)),
        d2: deriv(&|s| r(b + s, c, d)),
        d3: -deriv(&|s| r(b, c + s, d)),
    }
}

/// Fluctuation field at time `t`, indexed by canonical label.
#[derive(Clone, Debug, PartialEq)]
pub struct SdeState {
    pub xi: Vec<f64>,
    pub t: f64,
}

/// The linear system on `R_m`, with precomputed stencil neighbours.
#[derive(Clone, Debug)]
pub struct GaussianModel {
    pub params: ModelParams,
    pub coeffs: DriftCoeffs,
    pub space: LabelSpace,
    /// Indices of `p+(1,−1)`, `p−(1,0)`, `p−(0,1)`.
    stencil: Vec<[usize; 3]>,
}

impl GaussianModel {
    pub fn new(params: ModelParams, m: usize, m2: usize) -> Result<Self> {
        if !(m2 > 0 && m2 < m) {
            return Err(Error::Parameter(format!("need 0 < m2 < m, got m={m}, m2={m2}")));
        }
        let space = LabelSpace::square(m, m2);
        let stencil = (0..space.len())
            .map(|i| [space.offset_index(i, (1, -1)), space.offset_index(i, (-1, 0)), space.offset_index(i, (0, -1))])
            .collect();
        Ok(Self { params, coeffs: drift_coeffs(&params), space, stencil })
    }

    pub fn m(&self) -> usize {
        self.space.m1
    }

    pub fn m2(&self) -> usize {
        self.space.m2
    }

    /// `out = A ξ`.
    pub fn drift(&self, xi: &[f64], out: &mut [f64]) {
        let c = &self.coeffs;
        let a00 = c.a00();
        for (i, nb) in self.stencil.iter().enumerate() {
            out[i] = a00 * xi[i] + c.d2 * xi[nb[0]] - c.d1 * xi[nb[1]] + c.d3 * xi[nb[2]];
        }
    }
}

/// Integrator settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Switches off the `√v dW` term.
    pub noise: bool,
    /// Record the state every this many steps (the initial and final states
    /// are always recorded).
    pub record_every: Option<usize>,
}

impl EmOptions {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self { dt, t_end, noise: true, record_every: None }
    }

    fn steps(&self, model: &GaussianModel) -> Result<usize> {
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) {
            return Err(Error::Parameter(format!("need dt > 0 and T >= 0, got dt={}, T={}", self.dt, self.t_end)));
        }
        let norm = self.dt * model.coeffs.inf_norm();
        if norm >= 0.1 {
            return Err(Error::Stability(format!("dt·‖A‖∞ = {norm:.4} violates the bound 0.1")));
        }
        Ok((self.t_end / self.dt).round() as usize)
    }
}

/// Seeded generator for replica `replica` of a run with master `seed`.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Explicit Euler–Maruyama from `initial`, driven by `rng`. Calls
/// `observe` at every recorded state.
pub fn euler_maruyama_with(model: &GaussianModel, initial: &SdeState, opts: &EmOptions, rng: &mut ChaCha8Rng, mut observe: impl FnMut(&SdeState)) -> Result<SdeState> {
    let steps = opts.steps(model)?;
    let n = model.space.len();
    if initial.xi.len() != n {
        return Err(Error::Parameter(format!("state has {} entries, model has {n} sites", initial.xi.len())));
    }
    let sigma = (model.params.v * opts.dt).sqrt();
    let mut state = initial.clone();
    let mut drift = vec![0.0; n];
    observe(&state);
    for step in 1..=steps {
        model.drift(&state.xi, &mut drift);
        for (x, a) in state.xi.iter_mut().zip(&drift) {
            *x += a * opts.dt;
            if opts.noise {
                let z: f64 = StandardNormal.sample(rng);
                *x += sigma * z;
            }
        }
        state.t = initial.t + step as f64 * opts.dt;
        let record = opts.record_every.is_some_and(|k| step % k == 0) && step != steps;
        if record {
            observe(&state);
        }
    }
    if steps > 0 {
        observe(&state);
    }
    Ok(state)
}

/// Single Euler–Maruyama trajectory, returning the recorded states.
pub fn euler_maruyama(model: &GaussianModel, initial: &SdeState, opts: &EmOptions, seed: u64) -> Result<Vec<SdeState>> {
    let mut out = Vec::new();
    let mut rng = replica_rng(seed, 0);
    euler_maruyama_with(model, initial, opts, &mut rng, |s| out.push(s.clone()))?;
    Ok(out)
}

/// Runs `replicas` independent trajectories in parallel and maps each final
/// state through `f`. Results are in replica order.
pub fn final_states_parallel<R: Send>(model: &GaussianModel, initial: &SdeState, opts: &EmOptions, replicas: usize, seed: u64, f: impl Fn(&SdeState) -> R + Sync) -> Result<Vec<R>> {
    opts.steps(model)?;
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r as u64);
            let last = euler_maruyama_with(model, initial, opts, &mut rng, |_| {})?;
            Ok(f(&last))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn draws(n: usize) -> Vec<ModelParams> {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        (0..n)
            .map(|_| {
                let c = rng.random_range(0.1..2.0);
                let d = c + rng.random_range(0.1..2.0);
                ModelParams::new(c, d).unwrap()
            })
            .collect()
    }

    #[test]
    fn speed_cases() {
        assert!((speed(0.7, 1.4).unwrap() - (1.0 - (-1.4f64).exp())).abs() < 1e-15);
        let (e1, e15, e05) = ((-1.0f64).exp(), (-1.5f64).exp(), (-0.5f64).exp());
        let want = (1.0 - e1) * (1.0 - e15) / (1.0 - e05);
        assert!((speed(0.5, 1.5).unwrap() - want).abs() < 1e-15);
        assert!((speed(0.5, 60.0).unwrap() - 1.0 / (1.0 - e05)).abs() < 1e-14);
        assert!(speed(0.0, 1.0).is_err());
        assert!(speed(1.0, 1.0).is_err());
    }

    #[test]
    fn coefficients_row_sum_and_sign() {
        for p in draws(100) {
            let c = drift_coeffs(&p);
            assert!(c.row_sum().abs() < 1e-14);
            assert!(c.d1 > 0.0 && c.d2 > 0.0 && c.d3 > 0.0);
            // d1 = v f(D), d2 = v f(B), d3 = v f(C).
            assert!((c.d1 - p.v * gap_weight(p.d)).abs() < 1e-12 * c.d1);
            assert!((c.d2 - p.v * gap_weight(p.b)).abs() < 1e-12 * c.d2);
            assert!((c.d3 - p.v * gap_weight(p.c)).abs() < 1e-12 * c.d3);
        }
    }

    #[test]
    fn symbol_a_properties() {
        let c = drift_coeffs(&ModelParams::new(0.5, 1.5).unwrap());
        assert!(symbol_a([0.0, 0.0], &c).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let k = random_wave_vector(&mut rng);
            let s = symbol_a(k, &c) + symbol_a([-k[0], -k[1]], &c);
            assert!(s.im.abs() < 1e-14);
            assert!((s.re - symbol_r(k, &c)).abs() < 1e-13);
            let shifted = symbol_a([k[0] + 2.0 * std::f64::consts::PI, k[1]], &c);
            assert!((symbol_a(k, &c) - shifted).norm() < 1e-14);
        }
    }

    #[test]
    fn w_is_the_small_k_limit_of_r() {
        let c = drift_coeffs(&ModelParams::new(0.5, 1.5).unwrap());
        let dir = [0.6, -0.8];
        let mut ratios = Vec::new();
        for r in [1e-1, 1e-2, 1e-3] {
            let k = [r * dir[0], r * dir[1]];
            ratios.push((symbol_r(k, &c) - symbol_w(k, &c)).abs() / r.powi(3));
        }
        // Bounded by the cubic order; actually shrinking since the error is quartic.
        assert!(ratios[2] < ratios[1] && ratios[1] < ratios[0] && ratios[0] < 1.0, "{ratios:?}");
    }

    #[test]
    fn spectral_identities() {
        for p in draws(100) {
            let c = drift_coeffs(&p);
            let s = spectral_data(&c).unwrap();
            let wh = s.whess;
            let v = s.v_mat;
            for i in 0..2 {
                for j in 0..2 {
                    let mut x = 0.0;
                    for a in 0..2 {
                        for b in 0..2 {
                            x += v[i][a] * wh[a][b] * v[j][b];
                        }
                    }
                    let want = if i == j { -1.0 } else { 0.0 };
                    assert!((x - want).abs() < 1e-12);
                }
            }
            let det = wh[0][0] * wh[1][1] - wh[0][1] * wh[1][0];
            assert!((det - w_squared_closed_form(&p)).abs() < 1e-12 * det);
            assert!((p.v / s.w - p.d.exp_m1().sqrt()).abs() < 1e-12 * p.v / s.w);
            assert!(s.u[0] > 0.0 && s.u[1] < 0.0);
            let y = [0.3, -1.7];
            let back = s.apply_v_inv(s.apply_v(y));
            assert!((back[0] - y[0]).abs() < 1e-12 && (back[1] - y[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn reference_parameters_pass_all_checks() {
        let p = ModelParams::new(0.5, 1.5).unwrap();
        let report = validate_symbol_properties(&p);
        assert!(report.all_passed(), "{report:?}");
        assert!(stationary_point_discriminant(0.5, 1.5) < 0.0);
    }

    #[test]
    fn gradient_of_speed_is_u() {
        let p = ModelParams::new(0.5, 1.5).unwrap();
        let (g, err) = grad_v_check(&p, 1e-5).unwrap();
        assert!(err[0] < 1e-6 && err[1] < 1e-6);
        let c = drift_coeffs(&p);
        assert!((g[0] - (c.d1 + c.d2)).abs() < 1e-6);
        assert!(g[1] < 0.0);
    }

    #[test]
    fn microscopic_linearization() {
        let p = ModelParams::new(0.5, 1.5).unwrap();
        let exact = drift_coeffs(&p);
        let fd = linearized_rate_coeffs(&p, 1e-5, 1e-3);
        for (a, b) in [(fd.d1, exact.d1), (fd.d2, exact.d2), (fd.d3, exact.d3)] {
            assert!(((a - b) / b).abs() < 1e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn constants_are_stationary_without_noise() {
        let model = GaussianModel::new(ModelParams::new(0.5, 1.0).unwrap(), 4, 2).unwrap();
        let init = SdeState { xi: vec![1.25; 16], t: 0.0 };
        let opts = EmOptions { noise: false, ..EmOptions::new(1e-3, 1.0) };
        let out = euler_maruyama(&model, &init, &opts, 0).unwrap();
        for s in out {
            assert!(s.xi.iter().all(|&x| (x - 1.25).abs() < 1e-12));
        }
    }

    #[test]
    fn stability_guard() {
        let model = GaussianModel::new(ModelParams::new(0.5, 1.0).unwrap(), 4, 2).unwrap();
        let init = SdeState { xi: vec![0.0; 16], t: 0.0 };
        let res = euler_maruyama(&model, &init, &EmOptions::new(0.5, 1.0), 0);
        assert!(matches!(res, Err(Error::Stability(_))));
    }

    #[test]
    fn drift_matches_fourier_multiplier() {
        // A applied to a plane wave e^{ipk} multiplies it by Â(−k).
        let model = GaussianModel::new(ModelParams::new(0.5, 1.0).unwrap(), 4, 2).unwrap();
        let modes = crate::lattice::fourier_modes(4, 2).unwrap();
        for &k in &modes.modes {
            let wave: Vec<Complex64> = model.space.iter().map(|p| Complex64::cis(p.p1 as f64 * k[0] + p.p2 as f64 * k[1])).collect();
            let re: Vec<f64> = wave.iter().map(|z| z.re).collect();
            let im: Vec<f64> = wave.iter().map(|z| z.im).collect();
            let (mut ar, mut ai) = (vec![0.0; 16], vec![0.0; 16]);
            model.drift(&re, &mut ar);
            model.drift(&im, &mut ai);
            let lam = mode_eigenvalue(k, &model.coeffs);
            for i in 0..16 {
                let got = Complex64::new(ar[i], ai[i]);
                assert!((got - lam * wave[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn determinism_and_record_count() {
        let model = GaussianModel::new(ModelParams::new(0.5, 1.0).unwrap(), 4, 2).unwrap();
        let init = SdeState { xi: vec![0.0; 16], t: 0.0 };
        let opts = EmOptions { record_every: Some(100), ..EmOptions::new(1e-3, 1.0) };
        let a = euler_maruyama(&model, &init, &opts, 5).unwrap();
        let b = euler_maruyama(&model, &init, &opts, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 11);
        assert!((a.last().unwrap().t - 1.0).abs() < 1e-12);
    }
}

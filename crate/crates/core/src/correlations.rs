//! Space-time covariances of the Gaussian fluctuation field.
//!
//! For `t ≥ s`, `W_y(t, s) = Cov(ξ_{p,t}, ξ_{p+y,s})` on `R_m` is
//!
//! ```text
//! (v/m²) Σ_{k∈K_m} e^{−iky} e^{Â(−k)(t−s)} (e^{R̂(k)s} − 1)/R̂(k)
//! ```
//!
//! independently of `p` and of the initial data. Its `m → ∞` limit is an
//! integral over `[−π, π]²`, which in turn is approximated by the heat
//! kernel `(v/4πw) ∫ e^{−|H|²/4a}/a da`, `H = V(y − (t−s)U)`, up to a
//! bounded remainder. With this convention correlations travel along
//! `y = +U(t−s)`.
//!
//! The stationary measure of gradients, the four-point closed form and the
//! smoothed Gaussian free field variance live here as well.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::lattice::fourier_modes;
use crate::quadrature::periodic_trapezoid;
use crate::sde::{drift_coeffs, mode_eigenvalue, symbol_r, symbol_w, DriftCoeffs, ModelParams, SpectralData};
use crate::specfun::{ein, exp_integral_e1, heat_time_integral};
use crate::{Error, Result};

/// Largest tolerated imaginary part of a Fourier sum before it is discarded.
pub const IMAGINARY_TOL: f64 = 1e-10;
/// Default absolute tolerance of the infinite-volume integrals.
pub const QUADRATURE_TOL: f64 = 1e-7;
const QUAD_N_MIN: usize = 64;
const QUAD_N_MAX: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    FiniteM,
    Quadrature,
    HeatKernel,
    Asymptotic,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::FiniteM => "finite",
            Method::Quadrature => "quad",
            Method::HeatKernel => "kernel",
            Method::Asymptotic => "asymptotic",
        }
    }
}

/// Two-time covariance request: displacement `y`, times `t ≥ s ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceQuery {
    pub y: [i64; 2],
    pub t: f64,
    pub s: f64,
}

impl CovarianceQuery {
    pub fn new(y: [i64; 2], t: f64, s: f64) -> Result<Self> {
        if !(s >= 0.0 && t >= s && t.is_finite()) {
            return Err(Error::Parameter(format!("need t >= s >= 0, got t={t}, s={s}")));
        }
        Ok(Self { y, t, s })
    }

    fn yf(&self) -> [f64; 2] {
        [self.y[0] as f64, self.y[1] as f64]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceResult {
    pub value: f64,
    pub err_est: f64,
    pub method: Method,
}

/// `(e^{rs} − 1)/r`, equal to `s` at `r = 0`.
fn time_factor(r: f64, s: f64) -> f64 {
    let x = r * s;
    if x == 0.0 {
        s
    } else {
        s * x.exp_m1() / x
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn covariance_integrand(k: [f64; 2], q: &CovarianceQuery, c: &DriftCoeffs) -> Complex64 {
    let r = symbol_r(k, c);
    let prop = (mode_eigenvalue(k, c) * (q.t - q.s)).exp();
    prop * Complex64::cis(-dot(k, q.yf())) * time_factor(r, q.s)
}

/// Discards the imaginary part of `z` after checking it against `scale`.
fn real_part(z: Complex64, scale: f64) -> Result<f64> {
    if z.im.abs() > IMAGINARY_TOL * scale.max(1.0) {
        return Err(Error::ImaginaryResidue(z.im));
    }
    Ok(z.re)
}

/// Exact covariance on `R_m` by summation over `K_m`.
pub fn covariance_finite_m(q: &CovarianceQuery, m: usize, m2: usize, params: &ModelParams) -> Result<CovarianceResult> {
    let c = drift_coeffs(params);
    let modes = fourier_modes(m, m2)?;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for &k in &modes.modes {
        let term = covariance_integrand(k, q, &c);
        sum += term;
        scale += term.norm();
    }
    let norm = params.v / (m * m) as f64;
    let value = real_part(sum * norm, scale * norm)?;
    Ok(CovarianceResult { value, err_est: 0.0, method: Method::FiniteM })
}

/// Infinite-volume covariance `(v/(2π)²) ∫_{[−π,π]²} …` to absolute
/// tolerance `tol`. The integrand is analytic and periodic (the apparent
/// singularity at `k = 0` is removable), so the periodic trapezoid rule
/// converges geometrically.
pub fn covariance_quadrature(q: &CovarianceQuery, params: &ModelParams, tol: f64) -> Result<CovarianceResult> {
    let c = drift_coeffs(params);
    let norm = params.v / (4.0 * PI * PI);
    let res = periodic_trapezoid(|k| covariance_integrand(k, q, &c), QUAD_N_MIN, QUAD_N_MAX, tol / norm)?;
    let value = real_part(res.value * norm, 1.0)?;
    Ok(CovarianceResult { value, err_est: res.err_est * norm, method: Method::Quadrature })
}

/// `(v/4πw) ∫_{1+(t−s)/2}^{1+(t+s)/2} e^{−|H|²/4a}/a da` with
/// `H = V(y − (t−s)U)`, for a real displacement `y`.
pub fn heat_kernel_at(y: [f64; 2], t: f64, s: f64, spectral: &SpectralData, params: &ModelParams) -> Result<f64> {
    let tau = t - s;
    let z = [y[0] - tau * spectral.u[0], y[1] - tau * spectral.u[1]];
    let h2 = spectral.v_norm(z).powi(2);
    let integral = heat_time_integral(h2, 1.0 + 0.5 * tau, 1.0 + 0.5 * (t + s))?;
    Ok(params.v / (4.0 * PI * spectral.w) * integral)
}

/// Heat-kernel part of the large-scale covariance (the bounded remainder is
/// not included).
pub fn covariance_heat_kernel(q: &CovarianceQuery, spectral: &SpectralData, params: &ModelParams) -> Result<CovarianceResult> {
    let value = heat_kernel_at(q.yf(), q.t, q.s, spectral, params)?;
    Ok(CovarianceResult { value, err_est: 0.0, method: Method::HeatKernel })
}

/// `⌊U τ⌋` componentwise, the lattice point on the characteristic.
pub fn characteristic_site(u: [f64; 2], tau: f64) -> [i64; 2] {
    [(u[0] * tau).floor() as i64, (u[1] * tau).floor() as i64]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `y = 0`, `t = s`: `(v/4πw) log t`.
    EqualTimeOrigin,
    /// `t = s`, `|y| = O(√t)`: `(v/4πw) log(4(t+1)/|Vy|²)`.
    EqualTimeFar,
    /// `y = ⌊U(t−s)⌋`: `(v/4πw) log((t+s)/(t−s))`.
    Characteristic,
    /// `y = ⌊u(t−s)⌋`, `u ≠ U`: `(v/4πw) E1((t−s)²|V(U−u)|²/(2(t+s)))`.
    OffCharacteristic,
    /// Same direction with `t − s = O(√t)`: `(v/4πw)[log t − 2 log(t−s)]`.
    OffCharacteristicShort,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeValue {
    pub regime: Regime,
    pub value: f64,
    /// Whether the query lies in the regime where the expression applies.
    pub applicable: bool,
}

/// Asymptotic expressions for the covariance in each scaling regime. `u`
/// is the direction of a non-characteristic ray, when one is considered.
pub fn corollary_regimes(q: &CovarianceQuery, u: Option<[f64; 2]>, spectral: &SpectralData, params: &ModelParams) -> Vec<RegimeValue> {
    let pref = params.v / (4.0 * PI * spectral.w);
    let (t, s) = (q.t, q.s);
    let tau = t - s;
    let equal = tau == 0.0;
    let mut out = Vec::new();
    out.push(RegimeValue { regime: Regime::EqualTimeOrigin, value: pref * t.ln(), applicable: equal && q.y == [0, 0] });
    let vy = spectral.v_norm(q.yf());
    if vy > 0.0 {
        out.push(RegimeValue {
            regime: Regime::EqualTimeFar,
            value: pref * (4.0 * (t + 1.0) / (vy * vy)).ln(),
            applicable: equal && vy * vy <= 4.0 * (t + 1.0),
        });
    }
    if tau > 0.0 {
        out.push(RegimeValue {
            regime: Regime::Characteristic,
            value: pref * ((t + s) / tau).ln(),
            applicable: q.y == characteristic_site(spectral.u, tau),
        });
        if let Some(u) = u {
            let d = [spectral.u[0] - u[0], spectral.u[1] - u[1]];
            let x = tau * tau * spectral.v_norm(d).powi(2) / (2.0 * (t + s));
            let e1 = if x > 0.0 { exp_integral_e1(x).unwrap_or(f64::INFINITY) } else { f64::INFINITY };
            let on_ray = q.y == characteristic_site(u, tau);
            out.push(RegimeValue { regime: Regime::OffCharacteristic, value: pref * e1, applicable: on_ray && x > 0.0 });
            out.push(RegimeValue {
                regime: Regime::OffCharacteristicShort,
                value: pref * (t.ln() - 2.0 * tau.ln()),
                applicable: on_ray && tau * tau <= t,
            });
        }
    }
    out
}

/// Covariance of the additive stochastic heat equation,
/// `(1/8) ∫_{(t−s)/2}^{(t+s)/2} e^{−|x−y|²/4a}/a da`.
pub fn she_covariance(x: [f64; 2], y: [f64; 2], t: f64, s: f64) -> Result<f64> {
    if !(0.0 < s && s < t) {
        return Err(Error::Parameter(format!("need 0 < s < t, got t={t}, s={s}")));
    }
    let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
    Ok(heat_time_integral(d2, 0.5 * (t - s), 0.5 * (t + s))? / 8.0)
}

/// Amplitude `a = √(4πw/(8v))` turning `ξ` into the heat-equation field.
pub fn she_amplitude(spectral: &SpectralData, params: &ModelParams) -> f64 {
    (4.0 * PI * spectral.w / (8.0 * params.v)).sqrt()
}

/// Lattice site `⌊−(t/δ)U + V⁻¹x/√δ⌋` carrying the rescaled field at `(x, t)`.
///
/// The minus sign moves with the correlations, which travel along `+U`.
pub fn scaled_field_site(x: [f64; 2], t: f64, delta: f64, spectral: &SpectralData) -> [i64; 2] {
    let vx = spectral.apply_v_inv(x);
    let r = delta.sqrt().recip();
    let tt = t / delta;
    [(-tt * spectral.u[0] + vx[0] * r).floor() as i64, (-tt * spectral.u[1] + vx[1] * r).floor() as i64]
}

/// Heat-kernel covariance of the rescaled field between `(x, t)` and
/// `(y, s)` at scale `δ`; converges to [`she_covariance`] as `δ → 0`.
pub fn scaled_field_covariance(x: [f64; 2], y: [f64; 2], t: f64, s: f64, delta: f64, spectral: &SpectralData, params: &ModelParams) -> Result<f64> {
    if !(delta > 0.0) || !(0.0 < s && s < t) {
        return Err(Error::Parameter(format!("need δ > 0 and 0 < s < t, got δ={delta}, t={t}, s={s}")));
    }
    let px = scaled_field_site(x, t, delta, spectral);
    let py = scaled_field_site(y, s, delta, spectral);
    let q = CovarianceQuery::new([py[0] - px[0], py[1] - px[1]], t / delta, s / delta)?;
    let a = she_amplitude(spectral, params);
    Ok(a * a * covariance_heat_kernel(&q, spectral, params)?.value)
}

/// Gradient covariance `Cov[(ξ_{y1} − ξ_{y2}); (ξ_{y3} − ξ_{y4})]` request.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourPointQuery {
    pub y: [[i64; 2]; 4],
}

impl FourPointQuery {
    pub fn new(y1: [i64; 2], y2: [i64; 2], y3: [i64; 2], y4: [i64; 2]) -> Self {
        Self { y: [y1, y2, y3, y4] }
    }

    fn yf(&self, i: usize) -> [f64; 2] {
        [self.y[i][0] as f64, self.y[i][1] as f64]
    }

    fn diff(&self, i: usize, j: usize) -> [f64; 2] {
        [(self.y[i][0] - self.y[j][0]) as f64, (self.y[i][1] - self.y[j][1]) as f64]
    }

    /// Smallest of `|y1−y3|, |y2−y4|, |y1−y4|, |y2−y3|`.
    pub fn min_separation(&self) -> f64 {
        [(0, 2), (1, 3), (0, 3), (1, 2)]
            .iter()
            .map(|&(i, j)| {
                let d = self.diff(i, j);
                d[0].hypot(d[1])
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// `e^{iθ} − 1` without cancellation.
fn cis_m1(theta: f64) -> Complex64 {
    let half = 0.5 * theta;
    Complex64::new(0.0, 2.0 * half.sin()) * Complex64::cis(half)
}

/// `(e^{iky1} − e^{iky2})(e^{−iky3} − e^{−iky4})`.
fn four_point_numerator(k: [f64; 2], q: &FourPointQuery) -> Complex64 {
    let a = q.diff(0, 1);
    let b = q.diff(2, 3);
    Complex64::cis(dot(k, q.yf(1)) - dot(k, q.yf(3))) * cis_m1(dot(k, a)) * cis_m1(-dot(k, b))
}

/// `−(v/m²) Σ_{k≠0} N(k)/R̂(k)` on `R_m`.
pub fn stationary_cov_finite(q: &FourPointQuery, m: usize, m2: usize, params: &ModelParams) -> Result<f64> {
    let c = drift_coeffs(params);
    let modes = fourier_modes(m, m2)?;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for &k in &modes.modes {
        if k == [0.0, 0.0] {
            continue;
        }
        let term = four_point_numerator(k, q) / symbol_r(k, &c);
        sum += term;
        scale += term.norm();
    }
    let norm = -params.v / (m * m) as f64;
    real_part(sum * norm, scale * norm.abs())
}

/// `−(v/(2π)²) ∫ N(k)/R̂(k) dk`.
///
/// `1/R̂` is split as `χ/Ŵ + (1/R̂ − χ/Ŵ)` with `χ = e^{τ₀Ŵ}`. The first
/// piece times `N` is integrated exactly over `R²` (a Gaussian time
/// integral, giving `(π/w) Σ± Ein(|Vz|²/4τ₀)` over the four
/// differences `z = y_i − y_j` of `N`); the second is bounded at the origin,
/// so `N` times it vanishes there like `|k|²` and the trapezoid rule
/// converges quickly even for widely separated points.
pub fn stationary_cov_infinite(q: &FourPointQuery, params: &ModelParams, spectral: &SpectralData, tol: f64) -> Result<CovarianceResult> {
    let c = drift_coeffs(params);
    // χ ≤ e^{−3.3π²} on the boundary of the square.
    let tau0 = 3.3 / spectral.lambda_min();
    let f = |k: [f64; 2]| {
        if k == [0.0, 0.0] {
            return Complex64::new(0.0, 0.0);
        }
        let w = symbol_w(k, &c);
        four_point_numerator(k, q) * (1.0 / symbol_r(k, &c) - (tau0 * w).exp() / w)
    };
    let norm = -params.v / (4.0 * PI * PI);
    let res = periodic_trapezoid(f, QUAD_N_MIN, QUAD_N_MAX, tol / norm.abs())?;
    let e = |i, j| ein(spectral.v_norm(q.diff(i, j)).powi(2) / (4.0 * tau0));
    let gaussian = PI / spectral.w * (e(0, 2) - e(0, 3) - e(1, 2) + e(1, 3));
    let value = real_part((res.value + gaussian) * norm, 1.0)?;
    Ok(CovarianceResult { value, err_est: res.err_est * norm.abs(), method: Method::Quadrature })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FourPointForm {
    /// `(v/2πw) log[(1 + |Y14||Y32|)/(1 + |Y13||Y24|)]`.
    Leading,
    /// `(v/4πw)[Ein(c14) + Ein(c23) − Ein(c13) − Ein(c24)]`, `c_ij = |Y_i − Y_j|²/4`:
    /// the Gaussian-regularised integral, exact up to the `O(1/dist)` remainder.
    Full,
}

pub fn four_point_closed_form(q: &FourPointQuery, spectral: &SpectralData, params: &ModelParams, form: FourPointForm) -> f64 {
    let vn = |i, j| spectral.v_norm(q.diff(i, j));
    let (y13, y14, y23, y24) = (vn(0, 2), vn(0, 3), vn(1, 2), vn(1, 3));
    match form {
        FourPointForm::Leading => {
            params.v / (2.0 * PI * spectral.w) * ((1.0 + y14 * y23) / (1.0 + y13 * y24)).ln()
        }
        FourPointForm::Full => {
            let e = |x: f64| ein(0.25 * x * x);
            params.v / (4.0 * PI * spectral.w) * (e(y14) + e(y23) - e(y13) - e(y24))
        }
    }
}

/// Test function sampled on a regular grid with spacing `h`; sample
/// `(i, j)` sits at `origin + (i·h, j·h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiGrid {
    pub h: f64,
    pub origin: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    /// Row-major, `values[j·nx + i]`.
    pub values: Vec<f64>,
}

impl PhiGrid {
    pub fn from_fn(h: f64, origin: [f64; 2], nx: usize, ny: usize, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                values.push(f([origin[0] + i as f64 * h, origin[1] + j as f64 * h]));
            }
        }
        Self { h, origin, nx, ny, values }
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h]
    }

    fn same_layout(&self, other: &Self) -> bool {
        self.h == other.h && self.origin == other.origin && self.nx == other.nx && self.ny == other.ny
    }

    /// Linear combination `α·self + β·other` on a shared grid.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if !self.same_layout(other) {
            return Err(Error::Parameter("test functions live on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| alpha * a + beta * b).collect();
        Ok(Self { values, ..self.clone() })
    }

    /// Nonzero samples as (position, value).
    fn support(&self) -> Vec<([f64; 2], f64)> {
        let mut out = Vec::new();
        for j in 0..self.ny {
            for i in 0..self.nx {
                let v = self.values[j * self.nx + i];
                if v != 0.0 {
                    out.push((self.point(i, j), v));
                }
            }
        }
        out
    }

    /// Plain-text form: header `h x0 y0 nx ny`, then `ny` rows of `nx` values.
    pub fn to_text(&self) -> String {
        let mut s = format!("{:e} {:e} {:e} {} {}\n", self.h, self.origin[0], self.origin[1], self.nx, self.ny);
        for row in self.values.chunks(self.nx) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let mut next = |what: &str| tokens.next().ok_or_else(|| Error::Parse(format!("grid file ends before {what}")));
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")));
        let int = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("bad size {s:?}: {e}")));
        let h = num(next("h")?)?;
        let origin = [num(next("x0")?)?, num(next("y0")?)?];
        let nx = int(next("nx")?)?;
        let ny = int(next("ny")?)?;
        if !(h > 0.0) || nx == 0 || ny == 0 {
            return Err(Error::Parse("grid needs h > 0 and positive sizes".into()));
        }
        let mut values = Vec::with_capacity(nx * ny);
        for _ in 0..nx * ny {
            values.push(num(next("values")?)?);
        }
        if tokens.next().is_some() {
            return Err(Error::Parse("trailing data after grid values".into()));
        }
        Ok(Self { h, origin, nx, ny, values })
    }
}

/// `exp(−1/(1 − |x−c|²/r²))` inside the disc of radius `r`, zero outside.
pub fn bump(x: [f64; 2], center: [f64; 2], radius: f64) -> f64 {
    let rho2 = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)) / (radius * radius);
    if rho2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - rho2)).exp()
    }
}

/// Mean-zero test function `bump(· − a) − bump(· − b)` with
/// `a = (−0.75, 0)`, `b = (0.75, 0)`, radius `1/2`, on `[−1.5, 1.5] × [−1, 1]`.
pub fn two_bump_phi(h: f64) -> PhiGrid {
    let nx = (3.0 / h).round() as usize + 1;
    let ny = (2.0 / h).round() as usize + 1;
    PhiGrid::from_fn(h, [-1.5, -1.0], nx, ny, |x| bump(x, [-0.75, 0.0], 0.5) - bump(x, [0.75, 0.0], 0.5))
}

/// Sector `m·C/D` of the square quotient consistent with `params`.
pub fn sector_for(m: usize, params: &ModelParams) -> Result<usize> {
    let m2 = m as f64 * params.c / params.d;
    let r = m2.round();
    if (m2 - r).abs() > 1e-9 || r < 1.0 || r >= m as f64 {
        return Err(Error::Parameter(format!("m·C/D = {m2} is not an admissible sector for m = {m}")));
    }
    Ok(r as usize)
}

/// Lattice coefficients `δ²φ(δp)` for the grid samples that fall on `δZ²`.
fn lattice_coefficients(phi: &PhiGrid, delta: f64, m: usize) -> Result<Vec<([i64; 2], f64)>> {
    let ratio = delta / phi.h;
    if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
        return Err(Error::Parameter(format!("lattice spacing δ = {delta} is not a multiple of the grid step {}", phi.h)));
    }
    let mut out = Vec::new();
    for (x, v) in phi.support() {
        let p = [x[0] / delta, x[1] / delta];
        if (p[0] - p[0].round()).abs() < 1e-9 && (p[1] - p[1].round()).abs() < 1e-9 {
            let p = [p[0].round() as i64, p[1].round() as i64];
            if 2 * p[0].unsigned_abs() as usize >= m || 2 * p[1].unsigned_abs() as usize >= m {
                return Err(Error::Parameter(format!("support of φ does not fit in R_m for m = {m}")));
            }
            out.push((p, delta * delta * v));
        }
    }
    let mass: f64 = out.iter().map(|(_, c)| c).sum();
    if mass.abs() > 1e-8 {
        return Err(Error::Parameter(format!("test function is not mean-zero on the lattice: δ²Σφ = {mass:e}")));
    }
    Ok(out)
}

/// `Φ̃(k) = Σ_p c_p (e^{ipk} − 1)` for every nonzero mode.
fn phi_transform(coeffs: &[([i64; 2], f64)], modes: &[[f64; 2]]) -> Vec<Complex64> {
    modes
        .par_iter()
        .map(|&k| coeffs.iter().map(|&(p, c)| cis_m1(p[0] as f64 * k[0] + p[1] as f64 * k[1]) * c).sum())
        .collect()
}

/// Lattice bilinear form `E_μ(ξ_{φ1} ξ_{φ2})` with
/// `ξ_φ = δ² Σ_p φ(δp)(ξ_p − ξ_0)` on `R_m`.
pub fn lattice_smoothed_bilinear(phi1: &PhiGrid, phi2: &PhiGrid, delta: f64, m: usize, params: &ModelParams) -> Result<f64> {
    let m2 = sector_for(m, params)?;
    let c = drift_coeffs(params);
    let modes: Vec<[f64; 2]> = fourier_modes(m, m2)?.modes.into_iter().filter(|k| *k != [0.0, 0.0]).collect();
    let f1 = phi_transform(&lattice_coefficients(phi1, delta, m)?, &modes);
    let f2 = if phi1 == phi2 { f1.clone() } else { phi_transform(&lattice_coefficients(phi2, delta, m)?, &modes) };
    let sum: f64 = modes
        .iter()
        .zip(f1.iter().zip(&f2))
        .map(|(&k, (a, b))| (a * b.conj()).re / symbol_r(k, &c))
        .sum();
    Ok(-params.v / (m * m) as f64 * sum)
}

pub fn gff_lattice_variance(phi: &PhiGrid, delta: f64, m: usize, params: &ModelParams) -> Result<f64> {
    lattice_smoothed_bilinear(phi, phi, delta, m, params)
}

/// `−(v/2πw) ∫∫ φ(x)φ(y) log|V(x−y)| dx dy` by the midpoint rule on the
/// grid of φ, with the diagonal cells replaced by the cell average of
/// `log|Vz|`.
pub fn gff_continuum_variance(phi: &PhiGrid, spectral: &SpectralData, params: &ModelParams) -> f64 {
    let h = phi.h;
    let pts = phi.support();
    // Cell average of log|Vz| over z ∈ [−h/2, h/2]² by an even midpoint sub-grid.
    let sub = 256;
    let mut diag = 0.0;
    for a in 0..sub {
        for b in 0..sub {
            let z = [(a as f64 + 0.5) / sub as f64 - 0.5, (b as f64 + 0.5) / sub as f64 - 0.5];
            diag += spectral.v_norm([z[0] * h, z[1] * h]).ln();
        }
    }
    diag /= (sub * sub) as f64;
    let rows: Vec<f64> = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let (x, fx) = pts[i];
            let mut acc = 0.0;
            for (j, &(y, fy)) in pts.iter().enumerate() {
                let l = if i == j { diag } else { spectral.v_norm([x[0] - y[0], x[1] - y[1]]).ln() };
                acc += fy * l;
            }
            fx * acc
        })
        .collect();
    let sum: f64 = rows.into_iter().sum();
    -params.v / (2.0 * PI * spectral.w) * h.powi(4) * sum
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GffVariance {
    pub lattice: f64,
    pub continuum: f64,
}

pub fn gff_smoothed_variance(phi: &PhiGrid, delta: f64, m: usize, spectral: &SpectralData, params: &ModelParams) -> Result<GffVariance> {
    Ok(GffVariance { lattice: gff_lattice_variance(phi, delta, m, params)?, continuum: gff_continuum_variance(phi, spectral, params) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::spectral_data;

    fn model() -> (ModelParams, SpectralData) {
        let p = ModelParams::new(0.5, 1.0).unwrap();
        let s = spectral_data(&drift_coeffs(&p)).unwrap();
        (p, s)
    }

    #[test]
    fn finite_m_vanishes_at_s_zero() {
        let (p, _) = model();
        for y in [[0, 0], [1, 0], [2, -3]] {
            let q = CovarianceQuery::new(y, 3.0, 0.0).unwrap();
            assert_eq!(covariance_finite_m(&q, 8, 4, &p).unwrap().value, 0.0);
        }
    }

    #[test]
    fn finite_m_is_real_and_symmetric() {
        let (p, _) = model();
        // At equal times Cov(ξ_p, ξ_{p+y}) = Cov(ξ_{p−y}, ξ_p).
        for y in [[1, 0], [0, 1], [2, -1]] {
            let a = covariance_finite_m(&CovarianceQuery::new(y, 1.5, 1.5).unwrap(), 8, 4, &p).unwrap().value;
            let b = covariance_finite_m(&CovarianceQuery::new([-y[0], -y[1]], 1.5, 1.5).unwrap(), 8, 4, &p).unwrap().value;
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn finite_m_matches_dense_matrix_solution() {
        // Independent route: integrate dC/dt = vI + CAᵀ + AC by RK4, then
        // propagate with e^{A(t−s)} for the two-time covariance.
        let (p, _) = model();
        let model = crate::sde::GaussianModel::new(p, 4, 2).unwrap();
        let n = 16;
        let mut a = vec![0.0; n * n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let mut col = vec![0.0; n];
            model.drift(&e, &mut col);
            for i in 0..n {
                a[i * n + j] = col[i];
            }
        }
        let matmul = |x: &[f64], y: &[f64]| {
            let mut out = vec![0.0; n * n];
            for i in 0..n {
                for k in 0..n {
                    let xik = x[i * n + k];
                    for j in 0..n {
                        out[i * n + j] += xik * y[k * n + j];
                    }
                }
            }
            out
        };
        let transpose = |x: &[f64]| {
            let mut out = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    out[j * n + i] = x[i * n + j];
                }
            }
            out
        };
        let at = transpose(&a);
        let rhs = |c: &[f64]| {
            let mut d = matmul(c, &at);
            let ac = matmul(&a, c);
            for i in 0..n * n {
                d[i] += ac[i];
            }
            for i in 0..n {
                d[i * n + i] += p.v;
            }
            d
        };
        let axpy = |x: &[f64], y: &[f64], h: f64| x.iter().zip(y).map(|(a, b)| a + h * b).collect::<Vec<_>>();
        let (s, t) = (1.2, 2.0);
        let steps = 2400;
        let h = s / steps as f64;
        let mut c = vec![0.0; n * n];
        for _ in 0..steps {
            let k1 = rhs(&c);
            let k2 = rhs(&axpy(&c, &k1, h / 2.0));
            let k3 = rhs(&axpy(&c, &k2, h / 2.0));
            let k4 = rhs(&axpy(&c, &k3, h));
            for i in 0..n * n {
                c[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        // e^{A(t−s)} via RK4 on dX/dt = AX.
        let mut x = vec![0.0; n * n];
        for i in 0..n {
            x[i * n + i] = 1.0;
        }
        let steps2 = 1600;
        let h2 = (t - s) / steps2 as f64;
        for _ in 0..steps2 {
            let k1 = matmul(&a, &x);
            let k2 = matmul(&a, &axpy(&x, &k1, h2 / 2.0));
            let k3 = matmul(&a, &axpy(&x, &k2, h2 / 2.0));
            let k4 = matmul(&a, &axpy(&x, &k3, h2));
            for i in 0..n * n {
                x[i] += h2 / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        let cts = matmul(&x, &c);
        let space = model.space;
        for y in [[0i64, 0i64], [1, 0], [0, 1], [1, -1], [-1, 0], [2, 1]] {
            let q = CovarianceQuery::new(y, t, s).unwrap();
            let want = covariance_finite_m(&q, 4, 2, &p).unwrap().value;
            let i = 5;
            let j = space.offset_index(i, (y[0], y[1]));
            assert!((cts[i * n + j] - want).abs() < 1e-9, "y={y:?}: {} vs {want}", cts[i * n + j]);
        }
    }

    #[test]
    fn quadrature_matches_large_m_sum() {
        let (p, _) = model();
        let q = CovarianceQuery::new([0, 0], 5.0, 5.0).unwrap();
        let quad = covariance_quadrature(&q, &p, 1e-9).unwrap();
        let fin = covariance_finite_m(&q, 64, 32, &p).unwrap();
        assert!((quad.value - fin.value).abs() < 1e-4);
        let zero = covariance_quadrature(&CovarianceQuery::new([1, 2], 3.0, 0.0).unwrap(), &p, 1e-9).unwrap();
        assert_eq!(zero.value, 0.0);
    }

    #[test]
    fn heat_kernel_special_cases() {
        let (p, s) = model();
        let q = CovarianceQuery::new([0, 0], 7.0, 7.0).unwrap();
        let want = p.v / (4.0 * PI * s.w) * 8.0f64.ln();
        assert!((covariance_heat_kernel(&q, &s, &p).unwrap().value - want).abs() < 1e-14);
    }

    #[test]
    fn she_cases() {
        let x = [0.3, -0.2];
        let v = she_covariance(x, x, 1.0, 0.5).unwrap();
        assert!((v - (1.5f64 / 0.5).ln() / 8.0).abs() < 1e-15);
        let y = [-0.1, 0.4];
        assert_eq!(she_covariance(x, y, 1.0, 0.5).unwrap(), she_covariance(y, x, 1.0, 0.5).unwrap());
        assert!(she_covariance(x, y, 0.5, 0.5).is_err());
    }

    #[test]
    fn four_point_finite_properties() {
        let (p, _) = model();
        let q = FourPointQuery::new([2, 1], [2, 1], [0, 0], [3, -1]);
        assert!(stationary_cov_finite(&q, 8, 4, &p).unwrap().abs() < 1e-15);
        let q = FourPointQuery::new([1, 0], [0, 0], [1, 0], [0, 0]);
        assert!(stationary_cov_finite(&q, 8, 4, &p).unwrap() > 0.0);
    }

    #[test]
    fn four_point_closed_form_properties() {
        let (p, s) = model();
        let q = FourPointQuery::new([5, 2], [-3, 1], [5, 2], [-3, 1]);
        let lead = four_point_closed_form(&q, &s, &p, FourPointForm::Leading);
        let d = s.v_norm([8.0, 1.0]);
        assert!((lead - p.v / (2.0 * PI * s.w) * (1.0 + d * d).ln()).abs() < 1e-14);
        let q1 = FourPointQuery::new([0, 0], [4, 1], [10, -2], [13, 5]);
        let q2 = FourPointQuery::new([0, 0], [4, 1], [13, 5], [10, -2]);
        for form in [FourPointForm::Leading, FourPointForm::Full] {
            let a = four_point_closed_form(&q1, &s, &p, form);
            let b = four_point_closed_form(&q2, &s, &p, form);
            assert!((a + b).abs() < 1e-14);
        }
        // The full form approaches the leading one at large separation.
        let far = FourPointQuery::new([0, 0], [60, 10], [200, -30], [260, 50]);
        let diff = four_point_closed_form(&far, &s, &p, FourPointForm::Full) - four_point_closed_form(&far, &s, &p, FourPointForm::Leading);
        assert!(diff.abs() < 1e-3);
    }

    #[test]
    fn infinite_volume_matches_finite_sum() {
        let (p, s) = model();
        let q = FourPointQuery::new([1, 0], [0, 0], [0, 2], [-1, 1]);
        let inf = stationary_cov_infinite(&q, &p, &s, 1e-8).unwrap().value;
        let fin = stationary_cov_finite(&q, 128, 64, &p).unwrap();
        assert!((inf - fin).abs() < 1e-3, "{inf} vs {fin}");
    }

    #[test]
    fn polarization_is_exact() {
        let (p, _) = model();
        let phi1 = two_bump_phi(1.0 / 16.0);
        let phi2 = PhiGrid::from_fn(phi1.h, phi1.origin, phi1.nx, phi1.ny, |x| bump(x, [0.0, 0.25], 0.4) - bump(x, [0.0, -0.25], 0.4));
        let diff = phi1.combine(1.0, &phi2, -1.0).unwrap();
        let q = |a: &PhiGrid, b: &PhiGrid| lattice_smoothed_bilinear(a, b, 0.125, 64, &p).unwrap();
        let lhs = 2.0 * q(&phi1, &phi2);
        let rhs = q(&phi1, &phi1) + q(&phi2, &phi2) - q(&diff, &diff);
        assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0));
        assert!(q(&phi1, &phi1) > 0.0);
        let zero = PhiGrid { values: vec![0.0; phi1.values.len()], ..phi1.clone() };
        assert_eq!(q(&zero, &zero), 0.0);
    }

    #[test]
    fn rejects_non_mean_zero_phi() {
        let (p, _) = model();
        let phi = PhiGrid::from_fn(1.0 / 16.0, [-1.0, -1.0], 33, 33, |x| bump(x, [0.0, 0.0], 0.5));
        assert!(matches!(gff_lattice_variance(&phi, 0.125, 64, &p), Err(Error::Parameter(_))));
    }

    #[test]
    fn phi_text_round_trip() {
        let phi = two_bump_phi(0.25);
        assert_eq!(PhiGrid::from_text(&phi.to_text()).unwrap(), phi);
        assert!(PhiGrid::from_text("0.1 0 0 2 2\n1 2 3").is_err());
    }
}

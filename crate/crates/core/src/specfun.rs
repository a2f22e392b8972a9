//! Exponential integral, dilogarithm-type sums and the small-ε expansion of
//! `log (q;q)_a` at `q = e^{−ε}`, `a = b/ε + X`.

use crate::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_EPS: f64 = 1e-17;
const MAX_ITER: usize = 10_000;

/// `E1(x) = Γ(0, x) = ∫_x^∞ e^{−t}/t dt`.
///
/// Power series for `x ≤ 1`, modified Lentz continued fraction above.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_nan() {
        return Err(Error::Domain(format!("E1 needs x > 0, got {x}")));
    }
    if x <= 1.0 {
        return Ok(ein_series(x) - EULER_GAMMA - x.ln());
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    // Lentz evaluation of e^{-x} / (x + 1 − 1²/(x + 3 − 2²/(x + 5 − …))).
    let tiny = f64::MIN_POSITIVE / f64::EPSILON;
    let mut b = x + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < SERIES_EPS {
            return Ok(h * (-x).exp());
        }
    }
    Err(Error::Accuracy(format!("E1 continued fraction did not converge at x = {x}")))
}

/// Entire exponential integral `Ein(x) = ∫_0^x (1 − e^{−t})/t dt`
/// `= E1(x) + γ + ln x` for `x ≥ 0`.
pub fn ein(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= 2.0 {
        ein_series(x)
    } else {
        exp_integral_e1(x).expect("x > 2") + EULER_GAMMA + x.ln()
    }
}

/// `Σ_{k≥1} (−1)^{k+1} x^k / (k·k!)`.
fn ein_series(x: f64) -> f64 {
    let mut term = 1.0; // (−1)^{k+1} x^k / k!
    let mut sum = 0.0;
    for k in 1..MAX_ITER {
        term *= if k == 1 { x } else { -x / k as f64 };
        let add = term / k as f64;
        sum += add;
        if add.abs() <= SERIES_EPS * sum.abs() {
            break;
        }
    }
    sum
}

/// `∫_{a_lo}^{a_hi} e^{−c/(4a)} / a da` for `c ≥ 0`, `0 < a_lo ≤ a_hi`.
///
/// Equals `E1(c/4a_hi) − E1(c/4a_lo)`; when both arguments are small the
/// equivalent `ln(a_hi/a_lo) + Ein(c/4a_hi) − Ein(c/4a_lo)` avoids the
/// cancellation of the two logarithmic singularities.
pub fn heat_time_integral(c_sq: f64, a_lo: f64, a_hi: f64) -> Result<f64> {
    if !(c_sq >= 0.0) || !(a_lo > 0.0) || !(a_hi >= a_lo) {
        return Err(Error::Domain(format!(
            "heat integral needs c >= 0 and 0 < a_lo <= a_hi, got c={c_sq}, [{a_lo}, {a_hi}]"
        )));
    }
    let x_lo = c_sq / (4.0 * a_hi);
    let x_hi = c_sq / (4.0 * a_lo);
    if x_hi <= 1.0 {
        Ok((a_hi / a_lo).ln() + ein(x_lo) - ein(x_hi))
    } else {
        let upper = if x_lo > 0.0 { exp_integral_e1(x_lo)? } else { f64::INFINITY };
        Ok(upper - exp_integral_e1(x_hi)?)
    }
}

/// Polylogarithm sums at `z = e^{−b}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DilogSums {
    /// `Σ e^{−bn}/n² = Li₂(e^{−b})`.
    pub s2: f64,
    /// `Σ e^{−bn}/n = −ln(1 − e^{−b})`.
    pub s1: f64,
    /// `Σ e^{−bn} = e^{−b}/(1 − e^{−b})`.
    pub s0: f64,
}

pub fn dilog_sum(b: f64) -> Result<DilogSums> {
    if !(b > 0.0) {
        return Err(Error::Domain(format!("dilog sums need b > 0, got {b}")));
    }
    let z = (-b).exp();
    let one_minus_z = -(-b).exp_m1();
    let s1 = -(one_minus_z.ln());
    let s0 = z / one_minus_z;
    let s2 = if z <= 0.5 {
        li2_series(z)
    } else {
        // Euler reflection moves the argument below 1/2.
        std::f64::consts::PI.powi(2) / 6.0 + b * one_minus_z.ln() - li2_series(one_minus_z)
    };
    Ok(DilogSums { s2, s1, s0 })
}

fn li2_series(z: f64) -> f64 {
    let mut pow = 1.0;
    let mut sum = 0.0;
    for n in 1..MAX_ITER {
        pow *= z;
        let term = pow / (n * n) as f64;
        sum += term;
        if term <= 1e-16 * sum {
            break;
        }
    }
    sum
}

/// `ε⁻¹S2(b) − ½S1(b) − X·S1(b) + εX²S0(b)/2`, the expansion of
/// `log (q;q)_a` with the `b, X`-independent constant `C(ε)` dropped.
/// Only differences of such values are meaningful.
pub fn log_qpoch_asymptotic(eps: f64, b: f64, x: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("need 0 < eps < 1, got {eps}")));
    }
    if eps.sqrt() * x.abs() >= eps.powf(-0.1) {
        return Err(Error::Domain(format!("|X| = {} outside the window √ε|X| < ε^(-1/10)", x.abs())));
    }
    let s = dilog_sum(b)?;
    Ok(s.s2 / eps - 0.5 * s.s1 - x * s.s1 + 0.5 * eps * x * x * s.s0)
}

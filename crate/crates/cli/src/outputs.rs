//! CSV producers behind the single-purpose subcommands.

use std::fmt::Write as _;

use akpz_core::correlations::{
    corollary_regimes, covariance_finite_m, covariance_heat_kernel, covariance_quadrature, scaled_field_covariance, she_covariance,
    CovarianceQuery, Method, Regime, QUADRATURE_TOL,
};
use akpz_core::ctmc::simulate;
use akpz_core::lattice::ParticleConfig;
use akpz_core::sde::{euler_maruyama, EmOptions, GaussianModel, ModelParams, SdeState, SpectralData};

use crate::CliError;

/// Particle positions at the observation times: `t,p1,p2,x`.
pub fn ctmc_csv(start: &ParticleConfig, q: f64, t_end: f64, seed: u64, observe_every: f64) -> Result<String, CliError> {
    let traj = simulate(start, q, t_end, seed, Some(observe_every))?;
    let space = start.labels();
    let mut s = String::from("t,p1,p2,x\n");
    for (t, config) in &traj.samples {
        for (i, x) in config.positions().iter().enumerate() {
            let l = space.label(i);
            writeln!(s, "{t:.16e},{},{},{x}", l.p1, l.p2).unwrap();
        }
    }
    Ok(s)
}

/// Fluctuation field at the recorded times: `t,p1,p2,xi`.
pub fn sde_csv(model: &GaussianModel, opts: &EmOptions, seed: u64) -> Result<String, CliError> {
    let initial = SdeState { xi: vec![0.0; model.space.len()], t: 0.0 };
    let states = euler_maruyama(model, &initial, opts, seed)?;
    let mut s = String::from("t,p1,p2,xi\n");
    for st in &states {
        for (i, xi) in st.xi.iter().enumerate() {
            let l = model.space.label(i);
            writeln!(s, "{:.16e},{},{},{xi:.16e}", st.t, l.p1, l.p2).unwrap();
        }
    }
    Ok(s)
}

/// Where the covariance is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Volume {
    Finite { m: usize, m2: usize },
    Infinite,
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::EqualTimeOrigin => "equal-time-origin",
        Regime::EqualTimeFar => "equal-time-far",
        Regime::Characteristic => "characteristic",
        Regime::OffCharacteristic => "off-characteristic",
        Regime::OffCharacteristicShort => "off-characteristic-short",
    }
}

/// Covariance values `(method label, value, err_est)` for one query.
/// `asymptotic` yields only the regimes whose conditions hold.
pub fn covariance_values(q: &CovarianceQuery, method: Method, volume: Volume, p: &ModelParams, s: &SpectralData) -> Result<Vec<(String, f64, f64)>, CliError> {
    let one = |r: akpz_core::correlations::CovarianceResult| vec![(method.name().to_string(), r.value, r.err_est)];
    Ok(match (method, volume) {
        (Method::FiniteM, Volume::Finite { m, m2 }) => one(covariance_finite_m(q, m, m2, p)?),
        (Method::FiniteM, Volume::Infinite) => return Err(CliError::Usage("method `finite` needs --m and --m2".into())),
        (Method::Quadrature, _) => one(covariance_quadrature(q, p, QUADRATURE_TOL)?),
        (Method::HeatKernel, _) => one(covariance_heat_kernel(q, s, p)?),
        (Method::Asymptotic, _) => corollary_regimes(q, None, s, p)
            .into_iter()
            .filter(|r| r.applicable)
            .map(|r| (format!("asymptotic:{}", regime_name(r.regime)), r.value, 0.0))
            .collect(),
    })
}

pub fn cov_csv(q: &CovarianceQuery, values: &[(String, f64, f64)]) -> String {
    let mut s = String::from("t,s,y1,y2,method,value,err_est\n");
    for (method, v, e) in values {
        writeln!(s, "{:.16e},{:.16e},{},{},{method},{v:.16e},{e:.16e}", q.t, q.s, q.y[0], q.y[1]).unwrap();
    }
    s
}

/// Rescaled-field covariance against the heat-equation value for each `δ`:
/// `delta,scaled,she,rel_err`.
pub fn she_check_csv(deltas: &[f64], points: ([f64; 2], [f64; 2], f64, f64), p: &ModelParams, s: &SpectralData) -> Result<String, CliError> {
    let (x, y, t, sm) = points;
    let exact = she_covariance(x, y, t, sm)?;
    let mut out = String::from("delta,scaled,she,rel_err\n");
    for &d in deltas {
        let v = scaled_field_covariance(x, y, t, sm, d, s, p)?;
        writeln!(out, "{d:.16e},{v:.16e},{exact:.16e},{:.16e}", ((v - exact) / exact).abs()).unwrap();
    }
    Ok(out)
}

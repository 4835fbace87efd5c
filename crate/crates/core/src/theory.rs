//! Minimax rates (without logarithmic factors) and budget regimes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::federation::{solve_resolution, ServerSpec};

/// Default slack exponent in the `delta` side conditions.
pub const DEFAULT_KAPPA: f64 = 0.05;

/// `min(D^{-2 gamma}, 1)`, and `1` for `D = 0`.
pub fn rate_from_d(d: f64, gamma: f64) -> f64 {
    if d <= 0.0 {
        1.0
    } else {
        d.powf(-2.0 * gamma).min(1.0)
    }
}

fn two_term(m: f64, n: f64, eps: f64, gamma: f64) -> f64 {
    let private = (m * n * n * eps * eps).powf(-2.0 * gamma / (2.0 * gamma + 2.0));
    let sampling = (m * n).powf(-2.0 * gamma / (2.0 * gamma + 1.0));
    (private + sampling).min(1.0)
}

fn check_hom(m: f64, n: f64, eps: f64) -> Result<()> {
    if !(m >= 1.0 && n >= 1.0) {
        return Err(Error::InvalidParameter(format!("m = {m} and n = {n} must be >= 1")));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be positive")));
    }
    Ok(())
}

/// Homogeneous global rate `(m n^2 eps^2)^{-2a/(2a+2)} + (m n)^{-2a/(2a+1)}`,
/// capped at 1.
pub fn rate_global_hom(m: f64, n: f64, eps: f64, alpha: f64) -> Result<f64> {
    check_hom(m, n, eps)?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must be positive")));
    }
    Ok(two_term(m, n, eps, alpha))
}

/// Homogeneous pointwise rate: the global formula with `nu = alpha - 1/p`.
pub fn rate_point_hom(m: f64, n: f64, eps: f64, alpha: f64, p: f64) -> Result<f64> {
    check_hom(m, n, eps)?;
    let nu = alpha - 1.0 / p;
    if !(nu >= 0.5) {
        return Err(Error::InvalidParameter(format!("nu = {nu} must be at least 1/2")));
    }
    Ok(two_term(m, n, eps, nu))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    NoDominant,
    /// Index of the dominating server.
    Dominant(usize),
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub gamma: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub rate: f64,
    pub delta_condition_ok: bool,
    pub kappa: f64,
}

/// Rate predicted for the dominant regime from server `j` alone:
/// `(n^2 eps^2)^{-2g/(2g+2)} + n^{-2g/(2g+1)}`, capped at 1.
pub fn dominant_rate(server: &ServerSpec, gamma: f64) -> f64 {
    let n = server.n as f64;
    let private = server.privacy_information().powf(-gamma / (gamma + 1.0));
    let sampling = n.powf(-2.0 * gamma / (2.0 * gamma + 1.0));
    (private + sampling).min(1.0)
}

/// Classifies the budget profile and evaluates the matching `delta` condition
/// (taken with unit constant).
pub fn classify_regime(servers: &[ServerSpec], gamma: f64, kappa: f64) -> Result<RegimeReport> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter(format!("kappa = {kappa} must be positive")));
    }
    let d = solve_resolution(gamma, servers)?;
    let rate = rate_from_d(d, gamma);
    let info: Vec<f64> = servers.iter().map(ServerSpec::privacy_information).collect();
    let total: f64 = info.iter().sum();
    let g2 = 2.0 * gamma + 2.0;

    let dominant = (0..servers.len())
        .filter(|&j| {
            let s = &servers[j];
            let n = s.n as f64;
            let eps = s.budget.eps;
            let lhs = info[j]
                .min(n.powf((2.0 * gamma + 4.0) / g2) * eps.powf(2.0 / g2))
                .min(n.powf(g2 / (2.0 * gamma + 1.0)));
            lhs >= total - info[j]
        })
        .max_by(|&a, &b| info[a].total_cmp(&info[b]));

    let max_ne2 = servers.iter().map(|s| s.n as f64 * s.budget.eps * s.budget.eps).fold(0.0, f64::max);
    let regime = match dominant {
        Some(j) => Regime::Dominant(j),
        None if total.powf(1.0 / g2) >= max_ne2 => Regime::NoDominant,
        None => Regime::Mixed,
    };

    let m = servers.len() as f64;
    let delta_condition_ok = match regime {
        Regime::Dominant(j) => {
            let star = &servers[j];
            let denom = (star.n as f64).powf(2.0 / 3.0) * star.budget.eps.powf(2.0 / 3.0);
            servers.iter().all(|s| {
                let bound = (s.n as f64).sqrt() * s.budget.eps * s.budget.eps / denom;
                s.budget.delta <= bound.powf(1.0 + kappa)
            })
        }
        _ => servers
            .iter()
            .all(|s| s.budget.delta <= (s.budget.eps * s.budget.eps / m.sqrt()).powf(1.0 + kappa)),
    };

    Ok(RegimeReport { regime, gamma, d, rate, delta_condition_ok, kappa })
}

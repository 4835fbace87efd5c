//! Clipping, sensitivity bounds and the calibrated Gaussian and Laplace
//! mechanisms.

use rand::Rng as _;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::besov::RegressionSample;
use crate::error::{Error, Result};
use crate::rng;
use crate::wavelet::WaveletFamily;

/// Default upper limit on a server's epsilon.
pub const DEFAULT_EPS_CAP: f64 = 10.0;

/// Per-server privacy parameters `(eps, delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub eps: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    /// `eps = 0` is accepted and marks a server that releases nothing useful.
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        let b = Self { eps, delta };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps = {} must be finite and >= 0", self.eps)));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::InvalidParameter(format!("delta = {} must be in [0, 1)", self.delta)));
        }
        Ok(())
    }

    pub fn check_cap(&self, cap: f64) -> Result<()> {
        if self.eps > cap {
            return Err(Error::InvalidParameter(format!("eps = {} exceeds the cap {cap}", self.eps)));
        }
        Ok(())
    }
}

/// Projection of `x` onto `[-tau, tau]`.
pub fn clip(x: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("clipping threshold {tau} must be positive")));
    }
    Ok(clamp(x, tau))
}

#[inline]
pub(crate) fn clamp(x: f64, tau: f64) -> f64 {
    x.clamp(-tau, tau)
}

/// `c_psi = 2 sqrt2 sqrt(c_A) ||psi||_inf`.
pub fn l2_constant(family: &WaveletFamily) -> f64 {
    2.0 * std::f64::consts::SQRT_2 * (family.overlap() as f64).sqrt() * family.sup_norm()
}

/// `c'_psi = 2 c_A ||psi||_inf^2`.
pub fn l1_constant(family: &WaveletFamily) -> f64 {
    2.0 * family.overlap() as f64 * family.sup_norm().powi(2)
}

fn check_common(family: &WaveletFamily, tau: f64, level: u32, n: usize) -> Result<()> {
    family.check_level(level)?;
    if n == 0 {
        return Err(Error::Empty("sample size n = 0"));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau = {tau} must be finite and >= 0")));
    }
    Ok(())
}

/// L2 sensitivity bound `c_psi tau sqrt(2^L) / n` of the clipped coefficient
/// vector at resolution `level`.
pub fn l2_sensitivity_bound(family: &WaveletFamily, tau: f64, level: u32, n: usize) -> Result<f64> {
    check_common(family, tau, level, n)?;
    Ok(l2_constant(family) * tau * 2f64.powf(level as f64 / 2.0) / n as f64)
}

/// L1 sensitivity bound `c'_psi tau 2^L / n` of the local point estimate.
pub fn l1_sensitivity_bound_point(family: &WaveletFamily, tau: f64, level: u32, n: usize) -> Result<f64> {
    check_common(family, tau, level, n)?;
    Ok(l1_constant(family) * tau * 2f64.powi(level as i32) / n as f64)
}

/// Gaussian mechanism parameters for one server.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussCalibration {
    /// Per-coordinate noise variance.
    pub variance: f64,
    pub sensitivity_l2: f64,
    pub budget: PrivacyBudget,
}

/// Noise variance `4 tau^2 2^L c_psi^2 log(2/delta) / (n^2 eps^2)`.
pub fn calibrate_gaussian(
    family: &WaveletFamily,
    tau: f64,
    level: u32,
    n: usize,
    budget: PrivacyBudget,
) -> Result<GaussCalibration> {
    budget.validate()?;
    if budget.delta <= 0.0 {
        return Err(Error::InvalidParameter("the Gaussian mechanism needs delta > 0".into()));
    }
    if budget.eps <= 0.0 {
        return Err(Error::InvalidParameter("the Gaussian mechanism needs eps > 0".into()));
    }
    let sensitivity_l2 = l2_sensitivity_bound(family, tau, level, n)?;
    let c = l2_constant(family);
    let n = n as f64;
    let variance = 4.0 * tau * tau * 2f64.powi(level as i32) * c * c * (2.0 / budget.delta).ln()
        / (n * n * budget.eps * budget.eps);
    Ok(GaussCalibration { variance, sensitivity_l2, budget })
}

/// Laplace mechanism parameters; the mechanism is `(eps, 0)`-DP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LapCalibration {
    pub scale: f64,
    pub sensitivity_l1: f64,
    pub budget: PrivacyBudget,
}

impl LapCalibration {
    pub fn variance(&self) -> f64 {
        2.0 * self.scale * self.scale
    }
}

/// Laplace scale `c'_psi tau 2^L / (n eps)`.
pub fn calibrate_laplace(
    family: &WaveletFamily,
    tau: f64,
    level: u32,
    n: usize,
    budget: PrivacyBudget,
) -> Result<LapCalibration> {
    budget.validate()?;
    if budget.eps <= 0.0 {
        return Err(Error::InvalidParameter("the Laplace mechanism needs eps > 0".into()));
    }
    let sensitivity_l1 = l1_sensitivity_bound_point(family, tau, level, n)?;
    Ok(LapCalibration { scale: sensitivity_l1 / budget.eps, sensitivity_l1, budget })
}

pub(crate) fn gaussian(rng: &mut rng::Rng, sd: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    sd * z
}

/// Laplace(0, b) by inversion.
pub(crate) fn laplace(rng: &mut rng::Rng, b: f64) -> f64 {
    let u: f64 = rng.random::<f64>() - 0.5;
    -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// `vec + W` with `W` i.i.d. `N(0, cal.variance)`.
pub fn add_gaussian(vec: &[f64], cal: &GaussCalibration, seed: u64) -> Vec<f64> {
    let mut rng = rng::rng(seed);
    let sd = cal.variance.sqrt();
    vec.iter().map(|v| v + gaussian(&mut rng, sd)).collect()
}

/// `x + W` with `W ~ Laplace(0, cal.scale)`.
pub fn add_laplace(x: f64, cal: &LapCalibration, seed: u64) -> f64 {
    x + laplace(&mut rng::rng(seed), cal.scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensitivityNorm {
    L1,
    L2,
}

impl SensitivityNorm {
    fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            SensitivityNorm::L1 => diffs.sum(),
            SensitivityNorm::L2 => diffs.map(|d| d * d).sum::<f64>().sqrt(),
        }
    }
}

/// Largest observed change of `stat` over `trials` random neighboring data
/// sets of size `n`.
///
/// Each pair shares all observations except one. Designs are uniform on
/// `[0,1]` and responses are Cauchy with scale 10, so that clipping is active
/// on most observations.
pub fn empirical_sensitivity<F>(stat: F, n: usize, trials: usize, norm: SensitivityNorm, seed: u64) -> Result<f64>
where
    F: Fn(&RegressionSample) -> Result<Vec<f64>>,
{
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    if n == 0 {
        return Err(Error::Empty("sample size n = 0"));
    }
    let heavy = Cauchy::new(0.0, 10.0).expect("valid scale");
    let mut rng = rng::rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let y: Vec<f64> = (0..n).map(|_| heavy.sample(&mut rng)).collect();
        let mut x2 = x.clone();
        let mut y2 = y.clone();
        let i = rng.random_range(0..n);
        x2[i] = rng.random();
        y2[i] = heavy.sample(&mut rng);
        let a = stat(&RegressionSample::new(x, y, 0.0)?)?;
        let b = stat(&RegressionSample::new(x2, y2, 0.0)?)?;
        worst = worst.max(norm.distance(&a, &b));
    }
    Ok(worst)
}

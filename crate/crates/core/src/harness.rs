//! Monte Carlo risk estimation, rate sweeps and CSV output.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::besov::{self, BesovParams, CoeffTree, SampleStyle};
use crate::error::{Error, Result};
use crate::federation::{self, ProtocolPlan, ServerSpec, Target, TargetKind, Transcript};
use crate::privacy::{self, SensitivityNorm, DEFAULT_EPS_CAP};
use crate::rng::{self, LABEL_DATA, LABEL_NOISE};
use crate::theory;
use crate::wavelet::{build_family, FamilyName, WaveletFamily, DEFAULT_CASCADE_DEPTH};

pub const DEFAULT_RISK_GRID: usize = 1 << 12;

/// Function to be estimated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Truth {
    Sampled { seed: u64, style: SampleStyle, lmax: u32 },
    Explicit { tree: CoeffTree },
}

/// One Monte Carlo experiment, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_id")]
    pub experiment_id: String,
    pub besov: BesovParams,
    pub family: FamilyName,
    #[serde(default = "default_depth")]
    pub cascade_depth: u32,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    pub servers: Vec<ServerSpec>,
    pub target: Target,
    pub truth: Truth,
    pub reps: usize,
    pub seed: u64,
    /// Points used by [`quadrature_imse`]; the reported risks are exact in
    /// coefficient space.
    #[serde(default = "default_grid")]
    pub risk_grid: usize,
    #[serde(default = "default_eps_cap")]
    pub eps_cap: f64,
}

fn default_id() -> String {
    "experiment".into()
}
fn default_depth() -> u32 {
    DEFAULT_CASCADE_DEPTH
}
fn default_sigma() -> f64 {
    1.0
}
fn default_grid() -> usize {
    DEFAULT_RISK_GRID
}
fn default_eps_cap() -> f64 {
    DEFAULT_EPS_CAP
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidParameter("reps must be >= 1".into()));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma = {} must be >= 0", self.sigma)));
        }
        if self.servers.is_empty() {
            return Err(Error::Empty("server list"));
        }
        for s in &self.servers {
            s.validate()?;
            s.budget.check_cap(self.eps_cap)?;
        }
        if self.risk_grid < 2 {
            return Err(Error::InvalidParameter("risk_grid must be >= 2".into()));
        }
        if let Target::Point { x0 } = self.target {
            if !(0.0..=1.0).contains(&x0) {
                return Err(Error::OutOfDomain(x0));
            }
        }
        Ok(())
    }

    pub fn total_n(&self) -> usize {
        self.servers.iter().map(|s| s.n).sum()
    }
}

/// A validated configuration with its truth and plan resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub family: WaveletFamily,
    pub truth: CoeffTree,
    pub plan: ProtocolPlan,
    /// `f(x0)` for point targets.
    truth_at_x0: f64,
}

impl Experiment {
    pub fn prepare(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let family = build_family(config.family, config.cascade_depth)?;
        config.besov.validate_for(&family)?;
        let truth = match &config.truth {
            Truth::Sampled { seed, style, lmax } => besov::sample_besov(&config.besov, &family, *lmax, *style, *seed)?,
            Truth::Explicit { tree } => {
                if !tree.is_empty() && tree.l0() != family.l0() {
                    return Err(Error::InvalidParameter("truth tree base level does not match the family".into()));
                }
                tree.clone()
            }
        };
        let envelope = besov::sup_norm_bound(&truth, &family);
        let plan = federation::make_plan(&config.besov, &family, &config.servers, config.target, envelope)?;
        let truth_at_x0 = match config.target {
            Target::Point { x0 } => family.synthesize_unchecked(&truth, x0),
            Target::Global => 0.0,
        };
        Ok(Self { config: config.clone(), family, truth, plan, truth_at_x0 })
    }

    /// Transcripts of every server with a usable budget.
    pub fn transcripts(&self, rep_seed: u64) -> Result<Vec<Transcript>> {
        let mut out = Vec::with_capacity(self.config.servers.len());
        for (j, s) in self.config.servers.iter().enumerate() {
            if s.budget.eps == 0.0 {
                continue;
            }
            let data_seed = rng::derive_path(rep_seed, &[LABEL_DATA, j as u64]);
            let noise_seed = rng::derive_path(rep_seed, &[LABEL_NOISE, j as u64]);
            let data = besov::generate_sample(&self.truth, &self.family, s.n, self.config.sigma, data_seed)?;
            let t = match self.config.target {
                Target::Global => {
                    federation::make_global_transcript(j, &data, &self.family, &self.plan, s.budget, noise_seed)?.into()
                }
                Target::Point { .. } => {
                    federation::make_point_transcript(j, &data, &self.family, &self.plan, s.budget, noise_seed)?.into()
                }
            };
            out.push(t);
        }
        Ok(out)
    }

    /// Squared error of one run of the protocol.
    pub fn run_trial(&self, rep_seed: u64) -> Result<f64> {
        let transcripts = self.transcripts(rep_seed)?;
        let servers = &self.config.servers;
        match self.config.target {
            Target::Global => {
                let ts: Vec<_> = transcripts
                    .into_iter()
                    .filter_map(|t| match t {
                        Transcript::Global(g) => Some(g),
                        Transcript::Point(_) => None,
                    })
                    .collect();
                let estimate = federation::aggregate_global(&ts, servers, self.family.l0())?;
                Ok(global_risk(&estimate, &self.truth))
            }
            Target::Point { .. } => {
                let ts: Vec<_> = transcripts
                    .into_iter()
                    .filter_map(|t| match t {
                        Transcript::Point(p) => Some(p),
                        Transcript::Global(_) => None,
                    })
                    .collect();
                let estimate = federation::aggregate_point(&ts, servers)?;
                Ok((estimate - self.truth_at_x0).powi(2))
            }
        }
    }

    pub fn theory_rate(&self) -> f64 {
        theory::rate_from_d(self.plan.d, self.plan.gamma)
    }

    pub fn monte_carlo(&self) -> Result<RiskReport> {
        let seed = self.config.seed;
        let risks: Vec<f64> = (0..self.config.reps as u64)
            .into_par_iter()
            .map(|r| self.run_trial(rng::derive(seed, r)))
            .collect::<Result<_>>()?;
        let (mean, stderr) = mean_stderr(&risks);
        let cfg = &self.config;
        Ok(RiskReport {
            experiment_id: cfg.experiment_id.clone(),
            target: cfg.target.kind(),
            m: cfg.servers.len(),
            total_n: cfg.total_n(),
            gamma: self.plan.gamma,
            d: self.plan.d,
            level: self.plan.level,
            tau: self.plan.tau,
            mean_risk: mean,
            stderr,
            reps: cfg.reps,
            theory_rate: self.theory_rate(),
            seed,
        })
    }
}

/// `sum_{l < L} (fhat_lk - f_lk)^2 + sum_{l >= L} f_lk^2`, the exact squared
/// L2 distance by Parseval.
pub fn global_risk(estimate: &CoeffTree, truth: &CoeffTree) -> f64 {
    let level = estimate.resolution();
    let head = truth.truncated(level).flatten();
    let inside: f64 = estimate.flatten().iter().zip(&head).map(|(a, b)| (a - b) * (a - b)).sum();
    inside + truth.tail_energy(level)
}

/// Midpoint-rule approximation of `||f - g||^2` on `grid` points.
pub fn quadrature_imse(family: &WaveletFamily, f: &CoeffTree, g: &CoeffTree, grid: usize) -> Result<f64> {
    if grid == 0 {
        return Err(Error::InvalidParameter("grid must be >= 1".into()));
    }
    let h = 1.0 / grid as f64;
    let mut acc = 0.0;
    for i in 0..grid {
        let x = (i as f64 + 0.5) * h;
        let d = family.synthesize(f, x)? - family.synthesize(g, x)?;
        acc += d * d;
    }
    Ok(acc * h)
}

/// Sample mean and standard error; the standard error of one value is 0.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Single squared-error draw for `config`.
pub fn run_trial(config: &ExperimentConfig, rep_seed: u64) -> Result<f64> {
    Experiment::prepare(config)?.run_trial(rep_seed)
}

pub fn monte_carlo(config: &ExperimentConfig) -> Result<RiskReport> {
    Experiment::prepare(config)?.monte_carlo()
}

/// Monte Carlo summary; global risks are IMSE, point risks squared error at `x0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub experiment_id: String,
    pub target: TargetKind,
    pub m: usize,
    #[serde(rename = "N")]
    pub total_n: usize,
    pub gamma: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "L")]
    pub level: u32,
    pub tau: f64,
    pub mean_risk: f64,
    pub stderr: f64,
    pub reps: usize,
    pub theory_rate: f64,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "experiment_id,target,m,N,gamma,D,L,tau,mean_risk,stderr,theory_rate,seed";

/// One CSV row; a report without its replicate count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub experiment_id: String,
    pub target: TargetKind,
    pub m: usize,
    #[serde(rename = "N")]
    pub total_n: usize,
    pub gamma: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "L")]
    pub level: u32,
    pub tau: f64,
    pub mean_risk: f64,
    pub stderr: f64,
    pub theory_rate: f64,
    pub seed: u64,
}

impl From<&RiskReport> for CsvRow {
    fn from(r: &RiskReport) -> Self {
        CsvRow {
            experiment_id: r.experiment_id.clone(),
            target: r.target,
            m: r.m,
            total_n: r.total_n,
            gamma: r.gamma,
            d: r.d,
            level: r.level,
            tau: r.tau,
            mean_risk: r.mean_risk,
            stderr: r.stderr,
            theory_rate: r.theory_rate,
            seed: r.seed,
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Serde(e.to_string())
}

pub fn write_csv<W: Write>(reports: &[RiskReport], out: W) -> Result<()> {
    // header written by hand so an empty run still yields it
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(',')).map_err(csv_error)?;
    for r in reports {
        w.serialize(CsvRow::from(r)).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(reports: &[RiskReport]) -> String {
    let mut buf = Vec::new();
    write_csv(reports, &mut buf).expect("in-memory CSV write");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

pub fn emit_csv(reports: &[RiskReport], path: &Path) -> Result<()> {
    write_csv(reports, std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Serde("missing or unexpected CSV header".into()));
    }
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

/// Least-squares line through `(log x, log risk)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope (0 for exact fits).
    pub slope_stderr: f64,
    pub points: Vec<(f64, f64)>,
}

/// Fits `log risk = intercept + slope log x` to at least four positive points.
pub fn fit_log_log(xs: &[f64], risks: &[f64]) -> Result<RateFit> {
    if xs.len() != risks.len() {
        return Err(Error::Mismatch("abscissa and risk lengths differ".into()));
    }
    if xs.len() < 4 {
        return Err(Error::InvalidParameter(format!("need at least 4 points, got {}", xs.len())));
    }
    if xs.iter().chain(risks).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter("log-log fit needs positive finite values".into()));
    }
    let points: Vec<(f64, f64)> = xs.iter().zip(risks).map(|(x, r)| (x.ln(), r.ln())).collect();
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    let slope_stderr = (sse / (k - 2.0) / sxx).sqrt();
    Ok(RateFit { slope, intercept, r_squared, slope_stderr, points })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    M,
    N,
    Eps,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "m" => Ok(SweepAxis::M),
            "n" => Ok(SweepAxis::N),
            "eps" => Ok(SweepAxis::Eps),
            other => Err(Error::InvalidParameter(format!("unknown sweep axis {other:?}"))),
        }
    }
}

/// Which term of the rate a sweep is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Abscissa {
    /// `sum_j n_j^2 eps_j^2`
    PrivacyInformation,
    /// `N = sum_j n_j`
    SampleSize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub abscissa: Abscissa,
    pub fit: RateFit,
    pub reports: Vec<RiskReport>,
}

/// `base` with one coordinate changed. Sweeping `m` replicates the first
/// server; `n` and `eps` are set on every server.
pub fn sweep_point(base: &ExperimentConfig, axis: SweepAxis, value: f64, index: usize) -> Result<ExperimentConfig> {
    let mut cfg = base.clone();
    let template = *base.servers.first().ok_or(Error::Empty("server list"))?;
    match axis {
        SweepAxis::M => {
            if !(value >= 1.0 && value.fract() == 0.0) {
                return Err(Error::InvalidParameter(format!("m = {value} must be a positive integer")));
            }
            cfg.servers = vec![template; value as usize];
        }
        SweepAxis::N => {
            if !(value >= 1.0 && value.fract() == 0.0) {
                return Err(Error::InvalidParameter(format!("n = {value} must be a positive integer")));
            }
            cfg.servers.iter_mut().for_each(|s| s.n = value as usize);
        }
        SweepAxis::Eps => cfg.servers.iter_mut().for_each(|s| s.budget.eps = value),
    }
    cfg.experiment_id = format!("{}-{}", base.experiment_id, index);
    cfg.validate()?;
    Ok(cfg)
}

fn gamma_of(cfg: &ExperimentConfig) -> f64 {
    match cfg.target {
        Target::Global => cfg.besov.alpha,
        Target::Point { .. } => cfg.besov.nu(),
    }
}

/// Picks the abscissa whose rate term dominates at the majority of points.
pub fn choose_abscissa(configs: &[ExperimentConfig]) -> Abscissa {
    let private_wins = configs
        .iter()
        .filter(|cfg| {
            let g = gamma_of(cfg);
            let info: f64 = cfg.servers.iter().map(ServerSpec::privacy_information).sum();
            let private = info.powf(-g / (g + 1.0));
            let sampling = (cfg.total_n() as f64).powf(-2.0 * g / (2.0 * g + 1.0));
            private >= sampling
        })
        .count();
    if 2 * private_wins >= configs.len() {
        Abscissa::PrivacyInformation
    } else {
        Abscissa::SampleSize
    }
}

fn abscissa_value(cfg: &ExperimentConfig, abscissa: Abscissa) -> f64 {
    match abscissa {
        Abscissa::PrivacyInformation => cfg.servers.iter().map(ServerSpec::privacy_information).sum(),
        Abscissa::SampleSize => cfg.total_n() as f64,
    }
}

/// Runs [`monte_carlo`] at every value and fits the log-log slope.
pub fn rate_sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<SweepResult> {
    rate_sweep_with(base, axis, values, monte_carlo)
}

/// [`rate_sweep`] with the risk evaluation supplied by the caller.
pub fn rate_sweep_with<F>(base: &ExperimentConfig, axis: SweepAxis, values: &[f64], risk: F) -> Result<SweepResult>
where
    F: Fn(&ExperimentConfig) -> Result<RiskReport>,
{
    if values.len() < 4 {
        return Err(Error::InvalidParameter(format!("need at least 4 sweep values, got {}", values.len())));
    }
    let configs: Vec<ExperimentConfig> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| sweep_point(base, axis, v, i))
        .collect::<Result<_>>()?;
    let abscissa = choose_abscissa(&configs);
    let reports: Vec<RiskReport> = configs.iter().map(&risk).collect::<Result<_>>()?;
    let xs: Vec<f64> = configs.iter().map(|c| abscissa_value(c, abscissa)).collect();
    let ys: Vec<f64> = reports.iter().map(|r| r.mean_risk).collect();
    let fit = fit_log_log(&xs, &ys)?;
    Ok(SweepResult { abscissa, fit, reports })
}

/// Empirical against analytic sensitivity for one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCase {
    pub family: FamilyName,
    #[serde(rename = "L")]
    pub level: u32,
    pub tau: f64,
    pub n: usize,
    pub x0: f64,
    pub l2_empirical: f64,
    pub l2_bound: f64,
    pub l1_empirical: f64,
    pub l1_bound: f64,
}

/// Rounding allowance for bounds that are attained exactly (Haar).
pub const SENSITIVITY_ROUNDING: f64 = 1e-12;

impl SensitivityCase {
    pub fn within_bounds(&self) -> bool {
        self.ratio() <= 1.0 + SENSITIVITY_ROUNDING
    }

    /// Largest of the two empirical/analytic ratios.
    pub fn ratio(&self) -> f64 {
        (self.l2_empirical / self.l2_bound).max(self.l1_empirical / self.l1_bound)
    }
}

/// Measures the sensitivity of [`federation::local_coeffs`] (L2) and
/// [`federation::local_point_estimate`] (L1) over `trials` random neighboring
/// pairs at every `(L, tau, n)` of the grid. The point is drawn per case.
pub fn sensitivity_audit(
    family: &WaveletFamily,
    levels: &[u32],
    taus: &[f64],
    ns: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<SensitivityCase>> {
    let mut grid = Vec::new();
    for &level in levels {
        for &tau in taus {
            for &n in ns {
                grid.push((level, tau, n));
            }
        }
    }
    grid.into_par_iter()
        .enumerate()
        .map(|(i, (level, tau, n))| {
            let case_seed = rng::derive(seed, i as u64);
            let x0: f64 = rand::Rng::random(&mut rng::rng(rng::derive(case_seed, 0)));
            let plan = ProtocolPlan { gamma: 1.0, d: 0.0, level, l0: family.l0(), tau, target: Target::Global };
            let point = ProtocolPlan { target: Target::Point { x0 }, ..plan };
            let l2_empirical = privacy::empirical_sensitivity(
                |data| federation::local_coeffs(data, family, &plan),
                n,
                trials,
                SensitivityNorm::L2,
                rng::derive(case_seed, 1),
            )?;
            let l1_empirical = privacy::empirical_sensitivity(
                |data| Ok(vec![federation::local_point_estimate(data, family, &point)?]),
                n,
                trials,
                SensitivityNorm::L1,
                rng::derive(case_seed, 2),
            )?;
            Ok(SensitivityCase {
                family: family.name(),
                level,
                tau,
                n,
                x0,
                l2_empirical,
                l2_bound: privacy::l2_sensitivity_bound(family, tau, level, n)?,
                l1_empirical,
                l1_bound: privacy::l1_sensitivity_bound_point(family, tau, level, n)?,
            })
        })
        .collect()
}

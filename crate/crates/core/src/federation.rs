//! The one-shot distributed protocol.
//!
//! Each server computes clipped empirical wavelet coefficients from its own
//! sample, privatizes them into a [`GlobalTranscript`] (Gaussian mechanism) or
//! evaluates them at a point and privatizes the result into a
//! [`PointTranscript`] (Laplace mechanism). The aggregator only ever sees
//! transcripts and the public [`ServerSpec`]s.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::besov::{BesovParams, CoeffTree, RegressionSample};
use crate::error::{Error, Result};
use crate::privacy::{self, PrivacyBudget};
use crate::rng;
use crate::wavelet::{Basis, WaveletFamily};

/// A server's sample size and privacy budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServerSpec {
    pub n: usize,
    #[serde(flatten)]
    pub budget: PrivacyBudget,
}

impl ServerSpec {
    pub fn new(n: usize, eps: f64, delta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("server sample size must be >= 1".into()));
        }
        Ok(Self { n, budget: PrivacyBudget::new(eps, delta)? })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("server sample size must be >= 1".into()));
        }
        self.budget.validate()
    }

    /// `n^2 eps^2`, the privacy-limited information of the server.
    pub fn privacy_information(&self) -> f64 {
        let ne = self.n as f64 * self.budget.eps;
        ne * ne
    }
}

/// `m` identical servers.
pub fn homogeneous(m: usize, n: usize, eps: f64, delta: f64) -> Result<Vec<ServerSpec>> {
    let s = ServerSpec::new(n, eps, delta)?;
    Ok(vec![s; m])
}

/// Estimation target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Target {
    Global,
    Point { x0: f64 },
}

impl Target {
    pub fn kind(&self) -> TargetKind {
        match self {
            Target::Global => TargetKind::Global,
            Target::Point { .. } => TargetKind::Point,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Global,
    Point,
}

impl TargetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetKind::Global => "global",
            TargetKind::Point => "point",
        }
    }
}

/// Resolution and clipping choices shared by all servers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolPlan {
    /// `alpha` for the global target, `nu` for a point.
    pub gamma: f64,
    #[serde(rename = "D")]
    pub d: f64,
    /// Resolution `L`: fathers at `l0` plus mother levels `l0..L`.
    #[serde(rename = "L")]
    pub level: u32,
    pub l0: u32,
    pub tau: f64,
    pub target: Target,
}

impl ProtocolPlan {
    pub fn header(&self) -> TranscriptHeader {
        TranscriptHeader { target: self.target.kind(), level: self.level, tau: self.tau }
    }

    fn check(&self, family: &WaveletFamily) -> Result<()> {
        family.check_level(self.level)?;
        if self.l0 != family.l0() || self.level < self.l0 {
            return Err(Error::InvalidParameter(format!(
                "plan levels l0={} L={} do not fit family {}",
                self.l0,
                self.level,
                family.name()
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau = {} must be positive", self.tau)));
        }
        if let Target::Point { x0 } = self.target {
            if !(0.0..=1.0).contains(&x0) {
                return Err(Error::OutOfDomain(x0));
            }
        }
        Ok(())
    }
}

/// Solves `D^{2 gamma + 2} = sum_j min(n_j^2 eps_j^2, n_j D)` for its unique
/// positive root by bisection; `0` when every `eps_j` is zero.
pub fn solve_resolution(gamma: f64, servers: &[ServerSpec]) -> Result<f64> {
    if servers.is_empty() {
        return Err(Error::Empty("server list"));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must be positive")));
    }
    for s in servers {
        if !(s.budget.eps >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative eps {}", s.budget.eps)));
        }
    }
    let info: f64 = servers.iter().map(ServerSpec::privacy_information).sum();
    if info == 0.0 {
        return Ok(0.0);
    }
    let total_n: f64 = servers.iter().map(|s| s.n as f64).sum();
    let power = 2.0 * gamma + 2.0;
    let excess = |d: f64| {
        let rhs: f64 = servers.iter().map(|s| s.privacy_information().min(s.n as f64 * d)).sum();
        d.powf(power) - rhs
    };
    let mut lo = 0.0f64;
    let mut hi = info.powf(1.0 / power) + total_n.powf(1.0 / (2.0 * gamma + 1.0)) + 1.0;
    // the excess is negative on (0, D) and positive beyond
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 && hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Resolution rule `L = max(l0 + 1, ceil(log2 D))`.
pub fn resolution_level(d: f64, l0: u32) -> u32 {
    if d > 1.0 {
        (l0 + 1).max(d.log2().ceil() as u32)
    } else {
        l0 + 1
    }
}

/// Builds the plan: `gamma`, `D`, `L` and the clipping threshold
/// `tau = B + sqrt((2 alpha + 1) L)` (global) or `B + sqrt(2 (2 nu + 1) L)`
/// (point), where `envelope` is `B`, a bound on the sup norm of the truth.
pub fn make_plan(
    params: &BesovParams,
    family: &WaveletFamily,
    servers: &[ServerSpec],
    target: Target,
    envelope: f64,
) -> Result<ProtocolPlan> {
    params.validate()?;
    if !(envelope >= 0.0 && envelope.is_finite()) {
        return Err(Error::InvalidParameter(format!("envelope {envelope} must be >= 0")));
    }
    let gamma = match target {
        Target::Global => params.alpha,
        Target::Point { .. } => params.nu(),
    };
    let d = solve_resolution(gamma, servers)?;
    let level = resolution_level(d, family.l0());
    let l = level as f64;
    let tau = match target {
        Target::Global => envelope + ((2.0 * params.alpha + 1.0) * l).sqrt(),
        Target::Point { .. } => envelope + (2.0 * (2.0 * params.nu() + 1.0) * l).sqrt(),
    };
    let plan = ProtocolPlan { gamma, d, level, l0: family.l0(), tau, target };
    plan.check(family)?;
    Ok(plan)
}

/// Clipped empirical coefficients `(1/n) sum_i [Y_i]_tau psi_lk(X_i)` at the
/// plan's resolution, in [`CoeffTree::flatten`] order.
pub fn local_coeffs(data: &RegressionSample, family: &WaveletFamily, plan: &ProtocolPlan) -> Result<Vec<f64>> {
    plan.check(family)?;
    if data.is_empty() {
        return Err(Error::Empty("regression sample"));
    }
    let rows = row_offsets(plan);
    let mut out = vec![0.0; 1 << plan.level];
    let inv_n = 1.0 / data.len() as f64;
    for (x, y) in data.iter() {
        let c = privacy::clamp(y, plan.tau) * inv_n;
        if c == 0.0 {
            continue;
        }
        for &(basis, level, offset) in &rows {
            family.for_each_supported(basis, level, x, |k, v| out[offset + k] += c * v);
        }
    }
    Ok(out)
}

/// `(basis, level, offset into the flat vector)` for every row up to `L`.
fn row_offsets(plan: &ProtocolPlan) -> Vec<(Basis, u32, usize)> {
    let mut rows = vec![(Basis::Father, plan.l0, 0)];
    let mut offset = 1usize << plan.l0;
    for level in plan.l0..plan.level {
        rows.push((Basis::Mother, level, offset));
        offset += 1 << level;
    }
    rows
}

/// `(basis, level, [(k, value)])` for the indices supported at one point.
type RowValues = (Basis, u32, Vec<(usize, f64)>);

/// Local estimate `sum_l sum_{k in K_l(x0)} fhat_lk psi_lk(x0)` of `f(x0)`.
pub fn local_point_estimate(data: &RegressionSample, family: &WaveletFamily, plan: &ProtocolPlan) -> Result<f64> {
    plan.check(family)?;
    let Target::Point { x0 } = plan.target else {
        return Err(Error::InvalidParameter("plan target is not a point".into()));
    };
    if data.is_empty() {
        return Err(Error::Empty("regression sample"));
    }
    // basis values at x0 for the supported indices of each row
    let at_x0: Vec<RowValues> = row_offsets(plan)
        .into_iter()
        .map(|(basis, level, _)| {
            let mut vals = Vec::with_capacity(family.overlap());
            family.for_each_supported(basis, level, x0, |k, v| vals.push((k, v)));
            (basis, level, vals)
        })
        .collect();
    let mut acc = 0.0;
    for (x, y) in data.iter() {
        let c = privacy::clamp(y, plan.tau);
        if c == 0.0 {
            continue;
        }
        let mut kernel = 0.0;
        for (basis, level, vals) in &at_x0 {
            family.for_each_supported(*basis, *level, x, |k, v| {
                if let Some(&(_, v0)) = vals.iter().find(|(k0, _)| *k0 == k) {
                    kernel += v * v0;
                }
            });
        }
        acc += c * kernel;
    }
    Ok(acc / data.len() as f64)
}

/// Metadata carried by every transcript.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TranscriptHeader {
    pub target: TargetKind,
    #[serde(rename = "L")]
    pub level: u32,
    pub tau: f64,
}

/// Privatized coefficient vector released by one server.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalTranscript {
    server: usize,
    header: TranscriptHeader,
    values: Vec<f64>,
}

impl GlobalTranscript {
    pub fn server(&self) -> usize {
        self.server
    }

    pub fn header(&self) -> TranscriptHeader {
        self.header
    }

    /// Noisy coefficients in [`CoeffTree::flatten`] order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Privatized point estimate released by one server.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTranscript {
    server: usize,
    header: TranscriptHeader,
    value: f64,
}

impl PointTranscript {
    pub fn server(&self) -> usize {
        self.server
    }

    pub fn header(&self) -> TranscriptHeader {
        self.header
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

/// Computes and privatizes a server's coefficient vector with Gaussian noise
/// calibrated to `(eps, delta)`.
pub fn make_global_transcript(
    server: usize,
    data: &RegressionSample,
    family: &WaveletFamily,
    plan: &ProtocolPlan,
    budget: PrivacyBudget,
    seed: u64,
) -> Result<GlobalTranscript> {
    if plan.target != Target::Global {
        return Err(Error::InvalidParameter("plan target is not global".into()));
    }
    let cal = privacy::calibrate_gaussian(family, plan.tau, plan.level, data.len(), budget)?;
    let mut values = local_coeffs(data, family, plan)?;
    let sd = cal.variance.sqrt();
    let mut rng = rng::rng(seed);
    for v in &mut values {
        *v += privacy::gaussian(&mut rng, sd);
    }
    Ok(GlobalTranscript { server, header: plan.header(), values })
}

/// Computes and privatizes a server's point estimate with Laplace noise;
/// `(eps, 0)`-DP, so `delta` may be zero.
pub fn make_point_transcript(
    server: usize,
    data: &RegressionSample,
    family: &WaveletFamily,
    plan: &ProtocolPlan,
    budget: PrivacyBudget,
    seed: u64,
) -> Result<PointTranscript> {
    let cal = privacy::calibrate_laplace(family, plan.tau, plan.level, data.len(), budget)?;
    let estimate = local_point_estimate(data, family, plan)?;
    let value = estimate + privacy::laplace(&mut rng::rng(seed), cal.scale);
    Ok(PointTranscript { server, header: plan.header(), value })
}

/// Weights `u_j = v_j / sum v_j` with `v_j = min(n_j^2 eps_j^2, n_j 2^L)`.
pub fn aggregation_weights(servers: &[ServerSpec], level: u32) -> Result<Vec<f64>> {
    if servers.is_empty() {
        return Err(Error::Empty("server list"));
    }
    let cap = 2f64.powi(level as i32);
    let v: Vec<f64> = servers
        .iter()
        .map(|s| s.privacy_information().min(s.n as f64 * cap))
        .collect();
    let total: f64 = v.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("every server has zero weight".into()));
    }
    Ok(v.into_iter().map(|x| x / total).collect())
}

/// Pairs transcripts with servers by id, checks headers and coverage, and
/// returns `(weight, transcript)` in server order.
fn match_transcripts<'a, T>(
    items: &'a [T],
    server_of: impl Fn(&T) -> usize,
    header_of: impl Fn(&T) -> TranscriptHeader,
    servers: &[ServerSpec],
    kind: TargetKind,
) -> Result<(TranscriptHeader, Vec<(f64, &'a T)>)> {
    let first = items.first().ok_or(Error::Empty("transcript list"))?;
    let header = header_of(first);
    if header.target != kind {
        return Err(Error::Mismatch(format!("expected {} transcripts", kind.as_str())));
    }
    let weights = aggregation_weights(servers, header.level)?;
    let mut slots: Vec<Option<&T>> = vec![None; servers.len()];
    for t in items {
        let h = header_of(t);
        if h != header {
            return Err(Error::Mismatch(format!("{h:?} differs from {header:?}")));
        }
        let id = server_of(t);
        match slots.get_mut(id) {
            None => return Err(Error::Mismatch(format!("unknown server {id}"))),
            Some(Some(_)) => return Err(Error::Mismatch(format!("duplicate transcript for server {id}"))),
            Some(slot) => *slot = Some(t),
        }
    }
    let mut out = Vec::with_capacity(items.len());
    for (id, (slot, u)) in slots.into_iter().zip(weights).enumerate() {
        match slot {
            Some(t) => out.push((u, t)),
            None if u == 0.0 => {}
            None => return Err(Error::Mismatch(format!("missing transcript for server {id}"))),
        }
    }
    Ok((header, out))
}

/// Central estimate with coefficients `sum_j u_j T^(j)_lk`. Independent of
/// the order of `transcripts`.
pub fn aggregate_global(transcripts: &[GlobalTranscript], servers: &[ServerSpec], l0: u32) -> Result<CoeffTree> {
    let (header, matched) = match_transcripts(
        transcripts,
        GlobalTranscript::server,
        GlobalTranscript::header,
        servers,
        TargetKind::Global,
    )?;
    let len = 1usize << header.level;
    let mut acc = vec![0.0; len];
    for (u, t) in matched {
        if t.values.len() != len {
            return Err(Error::Mismatch(format!("server {} sent {} values", t.server, t.values.len())));
        }
        for (a, v) in acc.iter_mut().zip(&t.values) {
            *a += u * v;
        }
    }
    CoeffTree::from_flat(l0, header.level, &acc)
}

/// Central point estimate `sum_j u_j T^(j)`.
pub fn aggregate_point(transcripts: &[PointTranscript], servers: &[ServerSpec]) -> Result<f64> {
    let (_, matched) = match_transcripts(
        transcripts,
        PointTranscript::server,
        PointTranscript::header,
        servers,
        TargetKind::Point,
    )?;
    Ok(matched.into_iter().map(|(u, t)| u * t.value).sum())
}

/// A transcript of either kind, as exchanged through JSON lines.
#[derive(Debug, Clone, PartialEq)]
pub enum Transcript {
    Global(GlobalTranscript),
    Point(PointTranscript),
}

#[derive(Serialize, Deserialize)]
struct TranscriptLine {
    server: usize,
    target: TargetKind,
    #[serde(rename = "L")]
    level: u32,
    tau: f64,
    values: Vec<f64>,
}

impl Transcript {
    pub fn to_json_line(&self) -> Result<String> {
        let line = match self {
            Transcript::Global(t) => TranscriptLine {
                server: t.server,
                target: TargetKind::Global,
                level: t.header.level,
                tau: t.header.tau,
                values: t.values.clone(),
            },
            Transcript::Point(t) => TranscriptLine {
                server: t.server,
                target: TargetKind::Point,
                level: t.header.level,
                tau: t.header.tau,
                values: vec![t.value],
            },
        };
        Ok(serde_json::to_string(&line)?)
    }

    pub fn from_json_line(s: &str) -> Result<Self> {
        let line: TranscriptLine = serde_json::from_str(s)?;
        let header = TranscriptHeader { target: line.target, level: line.level, tau: line.tau };
        match line.target {
            TargetKind::Global => {
                if line.values.len() != 1usize.checked_shl(line.level).unwrap_or(0) {
                    return Err(Error::Serde(format!(
                        "global transcript with L={} carries {} values",
                        line.level,
                        line.values.len()
                    )));
                }
                Ok(Transcript::Global(GlobalTranscript { server: line.server, header, values: line.values }))
            }
            TargetKind::Point => match line.values.as_slice() {
                [value] => Ok(Transcript::Point(PointTranscript { server: line.server, header, value: *value })),
                _ => Err(Error::Serde("point transcript must carry one value".into())),
            },
        }
    }
}

impl From<GlobalTranscript> for Transcript {
    fn from(t: GlobalTranscript) -> Self {
        Transcript::Global(t)
    }
}

impl From<PointTranscript> for Transcript {
    fn from(t: PointTranscript) -> Self {
        Transcript::Point(t)
    }
}

pub fn write_transcripts(path: &Path, transcripts: &[Transcript]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for t in transcripts {
        writeln!(out, "{}", t.to_json_line()?)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_transcripts(path: &Path) -> Result<Vec<Transcript>> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for line in file.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(Transcript::from_json_line(&line)?);
        }
    }
    Ok(out)
}

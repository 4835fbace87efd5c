//! Coefficient trees, Besov norms, test functions inside a Besov ball and
//! regression samples.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rng;
use crate::wavelet::{Basis, LevelIndex, WaveletFamily, MAX_LEVEL};

/// Smoothness class `B^{alpha,R}_{p,q}`. `p` and `q` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub alpha: f64,
    #[serde(with = "extended_real")]
    pub p: f64,
    #[serde(with = "extended_real")]
    pub q: f64,
    #[serde(rename = "R")]
    pub radius: f64,
}

impl BesovParams {
    pub fn new(alpha: f64, p: f64, q: f64, radius: f64) -> Result<Self> {
        let params = Self { alpha, p, q, radius };
        params.validate()?;
        Ok(params)
    }

    /// Effective smoothness `nu = alpha - 1/p`.
    pub fn nu(&self) -> f64 {
        self.alpha - inv(self.p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha = {} must be positive", self.alpha)));
        }
        if !(self.p >= 2.0) {
            return Err(Error::InvalidParameter(format!("p = {} must be in [2, inf]", self.p)));
        }
        if !(self.q >= 1.0) {
            return Err(Error::InvalidParameter(format!("q = {} must be in [1, inf]", self.q)));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("R = {} must be positive", self.radius)));
        }
        if self.nu() < 0.5 {
            return Err(Error::InvalidParameter(format!(
                "alpha - 1/p = {} must be at least 1/2",
                self.nu()
            )));
        }
        Ok(())
    }

    /// Also requires `alpha < A` for the family that will represent the class.
    pub fn validate_for(&self, family: &WaveletFamily) -> Result<()> {
        self.validate()?;
        if self.alpha >= family.vanishing_moments() as f64 {
            return Err(Error::InvalidParameter(format!(
                "alpha = {} needs more than {} vanishing moments",
                self.alpha,
                family.vanishing_moments()
            )));
        }
        Ok(())
    }
}

fn inv(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

/// Serializes infinite exponents as the string `"inf"`.
mod extended_real {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if matches!(s.as_str(), "inf" | "infinity" | "Infinity") => Ok(f64::INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("not an exponent: {s}"))),
        }
    }
}

/// Wavelet coefficients of a function: `2^l0` father coefficients followed by
/// mother coefficients at levels `l0, l0+1, ...`, level `l` holding `2^l`
/// entries.
///
/// A tree with mother levels up to `L-1` has *resolution* `L` and spans the
/// same space as the `2^L` father functions at level `L`.
///
/// Serialized as `{"l0": l0, "levels": [father, mother_l0, mother_l0+1, ...]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffTree {
    l0: u32,
    father: Vec<f64>,
    mothers: Vec<Vec<f64>>,
}

impl CoeffTree {
    /// All-zero tree of the given resolution (`resolution >= l0`).
    pub fn zeros(l0: u32, resolution: u32) -> Self {
        assert!(resolution >= l0, "resolution {resolution} below base level {l0}");
        Self {
            l0,
            father: vec![0.0; 1 << l0],
            mothers: (l0..resolution).map(|l| vec![0.0; 1 << l]).collect(),
        }
    }

    /// Tree with no coefficients at all; synthesizes to zero.
    pub fn empty(l0: u32) -> Self {
        Self { l0, father: Vec::new(), mothers: Vec::new() }
    }

    /// Builds a tree from a flat vector in [`CoeffTree::flatten`] order.
    pub fn from_flat(l0: u32, resolution: u32, values: &[f64]) -> Result<Self> {
        if resolution < l0 {
            return Err(Error::InvalidParameter(format!(
                "resolution {resolution} below base level {l0}"
            )));
        }
        let expected = 1usize << resolution;
        if values.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "{} coefficients for resolution {resolution}, expected {expected}",
                values.len()
            )));
        }
        let mut tree = Self::zeros(l0, resolution);
        let mut rest = values;
        let (head, tail) = rest.split_at(tree.father.len());
        tree.father.copy_from_slice(head);
        rest = tail;
        for row in &mut tree.mothers {
            let (head, tail) = rest.split_at(row.len());
            row.copy_from_slice(head);
            rest = tail;
        }
        tree.check_finite()?;
        Ok(tree)
    }

    pub fn l0(&self) -> u32 {
        self.l0
    }

    pub fn is_empty(&self) -> bool {
        self.father.is_empty()
    }

    /// One past the finest mother level; `l0` for a father-only tree.
    pub fn resolution(&self) -> u32 {
        self.l0 + self.mothers.len() as u32
    }

    /// Total number of coefficients, `2^resolution` for a non-empty tree.
    pub fn len(&self) -> usize {
        self.father.len() + self.mothers.iter().map(Vec::len).sum::<usize>()
    }

    pub fn father(&self) -> &[f64] {
        &self.father
    }

    pub fn father_mut(&mut self) -> &mut [f64] {
        &mut self.father
    }

    /// Mother coefficients at `level`, if present.
    pub fn mother(&self, level: u32) -> Option<&[f64]> {
        level
            .checked_sub(self.l0)
            .and_then(|i| self.mothers.get(i as usize))
            .map(Vec::as_slice)
    }

    pub fn mother_mut(&mut self, level: u32) -> Option<&mut [f64]> {
        level
            .checked_sub(self.l0)
            .and_then(|i| self.mothers.get_mut(i as usize))
            .map(Vec::as_mut_slice)
    }

    pub fn get(&self, idx: LevelIndex) -> Option<f64> {
        match idx.basis {
            Basis::Father if idx.level == self.l0 => self.father.get(idx.k).copied(),
            Basis::Father => None,
            Basis::Mother => self.mother(idx.level).and_then(|r| r.get(idx.k).copied()),
        }
    }

    pub fn set(&mut self, idx: LevelIndex, value: f64) -> Result<()> {
        let slot = match idx.basis {
            Basis::Father if idx.level == self.l0 => self.father.get_mut(idx.k),
            Basis::Father => None,
            Basis::Mother => self.mother_mut(idx.level).and_then(|r| r.get_mut(idx.k)),
        };
        match slot {
            Some(s) => {
                *s = value;
                Ok(())
            }
            None => Err(Error::InvalidParameter(format!("{idx:?} not in tree"))),
        }
    }

    /// Rows as `(basis, level, coefficients)`, father row first.
    pub fn rows(&self) -> impl Iterator<Item = (Basis, u32, &[f64])> + '_ {
        let father = (!self.father.is_empty()).then_some((Basis::Father, self.l0, self.father.as_slice()));
        father.into_iter().chain(
            self.mothers
                .iter()
                .enumerate()
                .map(move |(i, r)| (Basis::Mother, self.l0 + i as u32, r.as_slice())),
        )
    }

    /// Father coefficients followed by the mother levels in increasing order.
    pub fn flatten(&self) -> Vec<f64> {
        self.rows().flat_map(|(_, _, r)| r.iter().copied()).collect()
    }

    /// Copy keeping only mother levels below `resolution` (zero-padded when the
    /// tree is coarser).
    pub fn truncated(&self, resolution: u32) -> Self {
        let mut out = Self::zeros(self.l0, resolution.max(self.l0));
        if !self.is_empty() {
            out.father.copy_from_slice(&self.father);
        }
        for (dst, src) in out.mothers.iter_mut().zip(&self.mothers) {
            dst.copy_from_slice(src);
        }
        out
    }

    /// `sum f_lk^2` over mother levels `>= level`.
    pub fn tail_energy(&self, level: u32) -> f64 {
        self.rows()
            .filter(|&(b, l, _)| b == Basis::Mother && l >= level)
            .map(|(_, _, r)| r.iter().map(|v| v * v).sum::<f64>())
            .sum()
    }

    /// Squared L2 norm of the represented function.
    pub fn energy(&self) -> f64 {
        self.rows().flat_map(|(_, _, r)| r.iter()).map(|v| v * v).sum()
    }

    pub fn scaled(&self, t: f64) -> Self {
        let mut out = self.clone();
        out.father.iter_mut().for_each(|v| *v *= t);
        out.mothers.iter_mut().flatten().for_each(|v| *v *= t);
        out
    }

    fn check_finite(&self) -> Result<()> {
        if self.rows().all(|(_, _, r)| r.iter().all(|v| v.is_finite())) {
            Ok(())
        } else {
            Err(Error::InvalidParameter("non-finite coefficient".into()))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Serialize, Deserialize)]
struct TreeRepr {
    l0: u32,
    levels: Vec<Vec<f64>>,
}

impl Serialize for CoeffTree {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TreeRepr { l0: self.l0, levels: self.rows().map(|(_, _, r)| r.to_vec()).collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoeffTree {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = TreeRepr::deserialize(d)?;
        if repr.l0 > MAX_LEVEL || repr.l0 as usize + repr.levels.len() > MAX_LEVEL as usize + 2 {
            return Err(D::Error::custom("tree levels out of range"));
        }
        let mut levels = repr.levels.into_iter();
        let Some(father) = levels.next() else {
            return Ok(CoeffTree::empty(repr.l0));
        };
        if father.len() != 1 << repr.l0 {
            return Err(D::Error::custom(format!(
                "father row has {} entries, expected {}",
                father.len(),
                1u64 << repr.l0
            )));
        }
        let mothers: Vec<Vec<f64>> = levels.collect();
        for (i, row) in mothers.iter().enumerate() {
            let want = 1usize << (repr.l0 as usize + i);
            if row.len() != want {
                return Err(D::Error::custom(format!(
                    "level {} has {} entries, expected {want}",
                    repr.l0 as usize + i,
                    row.len()
                )));
            }
        }
        let tree = CoeffTree { l0: repr.l0, father, mothers };
        tree.check_finite().map_err(D::Error::custom)?;
        Ok(tree)
    }
}

fn lp_norm(row: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        row.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    } else {
        row.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Besov norm: the `l_q` norm over levels of `2^{l(alpha+1/2-1/p)} ||f_l.||_p`.
/// The father row counts as level `l0`.
pub fn besov_norm(tree: &CoeffTree, params: &BesovParams) -> f64 {
    let exponent = params.alpha + 0.5 - inv(params.p);
    let terms = tree
        .rows()
        .map(|(_, l, r)| 2f64.powf(l as f64 * exponent) * lp_norm(r, params.p));
    if params.q.is_infinite() {
        terms.fold(0.0, f64::max)
    } else {
        terms.map(|t| t.powf(params.q)).sum::<f64>().powf(1.0 / params.q)
    }
}

/// Constant `c_alpha = 1 / (1 - 2^{-2 alpha})` with
/// `sum_{l >= L} sum_k f_lk^2 <= c_alpha 2^{-2 L alpha} R^2` on the ball.
pub fn tail_constant(alpha: f64) -> f64 {
    1.0 / (1.0 - 2f64.powf(-2.0 * alpha))
}

/// How [`sample_besov`] draws coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleStyle {
    /// Every level filled with `U[-rho 2^{-l(alpha+1/2)}, rho 2^{-l(alpha+1/2)}]`
    /// draws, then rescaled to norm `0.9 R`.
    UniformDecay,
    /// Only level `lmax`, drawn from the `cos^2(pi t / 2)` density on the
    /// interval `[-2^{-lmax(alpha+1/2)} R, 2^{-lmax(alpha+1/2)} R]`.
    CosinePrior,
}

/// Draws a function with `besov_norm <= R` whose finest mother level is `lmax`.
pub fn sample_besov(
    params: &BesovParams,
    family: &WaveletFamily,
    lmax: u32,
    style: SampleStyle,
    seed: u64,
) -> Result<CoeffTree> {
    params.validate()?;
    family.check_level(lmax)?;
    let l0 = family.l0();
    let mut tree = CoeffTree::zeros(l0, lmax + 1);
    let mut rng = rng::rng(seed);
    let decay = |l: u32| 2f64.powf(-(l as f64) * (params.alpha + 0.5));
    match style {
        SampleStyle::UniformDecay => {
            let unit = Uniform::new_inclusive(-1.0, 1.0).expect("valid range");
            let w = decay(l0);
            tree.father_mut().iter_mut().for_each(|v| *v = w * unit.sample(&mut rng));
            for l in l0..=lmax {
                let w = decay(l);
                for v in tree.mother_mut(l).expect("level present") {
                    *v = w * unit.sample(&mut rng);
                }
            }
            let norm = besov_norm(&tree, params);
            if norm > 0.0 {
                tree = tree.scaled(0.9 * params.radius / norm);
            }
        }
        SampleStyle::CosinePrior => {
            let half_width = decay(lmax) * params.radius;
            for v in tree.mother_mut(lmax).expect("level present") {
                *v = half_width * sample_cosine_squared(&mut rng);
            }
        }
    }
    Ok(tree)
}

/// Draw from the density proportional to `cos^2(pi t / 2)` on `[-1, 1]`,
/// by rejection from the uniform proposal.
fn sample_cosine_squared(rng: &mut rng::Rng) -> f64 {
    loop {
        let t: f64 = rng.random_range(-1.0..=1.0);
        let accept = (std::f64::consts::FRAC_PI_2 * t).cos().powi(2);
        if rng.random::<f64>() < accept {
            return t;
        }
    }
}

/// Computable envelope `sum_l 2^{l/2} ||psi||_inf c_A max_k |f_lk|` dominating
/// the sup norm of the function represented by `tree`.
pub fn sup_norm_bound(tree: &CoeffTree, family: &WaveletFamily) -> f64 {
    let c = family.sup_norm() * family.overlap() as f64;
    tree.rows()
        .map(|(_, l, r)| 2f64.powf(l as f64 / 2.0) * c * lp_norm(r, f64::INFINITY))
        .sum()
}

/// Observations `Y_i = f(X_i) + sigma xi_i` with uniform design.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: f64,
}

impl RegressionSample {
    pub fn new(x: Vec<f64>, y: Vec<f64>, sigma: f64) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Empty("regression sample"));
        }
        if x.len() != y.len() {
            return Err(Error::InvalidParameter("x and y lengths differ".into()));
        }
        if let Some(&bad) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfDomain(bad));
        }
        Ok(Self { x, y, sigma })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x.iter().copied().zip(self.y.iter().copied())
    }
}

/// Draws `n` observations from the regression model with truth `tree`.
pub fn generate_sample(
    tree: &CoeffTree,
    family: &WaveletFamily,
    n: usize,
    sigma: f64,
    seed: u64,
) -> Result<RegressionSample> {
    if n == 0 {
        return Err(Error::Empty("sample size n = 0"));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma = {sigma} must be nonnegative")));
    }
    if !tree.is_empty() && tree.l0() != family.l0() {
        return Err(Error::InvalidParameter("tree and family base levels differ".into()));
    }
    let mut rng = rng::rng(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let xi: f64 = rng.random();
        let noise: f64 = StandardNormal.sample(&mut rng);
        x.push(xi);
        y.push(family.synthesize_unchecked(tree, xi) + sigma * noise);
    }
    Ok(RegressionSample { x, y, sigma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::{build_family, FamilyName};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn haar() -> WaveletFamily {
        build_family(FamilyName::Haar, 12).unwrap()
    }

    #[test]
    fn norm_single_coefficient() {
        let p = BesovParams::new(1.5, 2.0, 2.0, 1.0).unwrap();
        let mut t = CoeffTree::zeros(2, 2);
        t.father_mut()[0] = -3.0;
        assert_relative_eq!(besov_norm(&t, &p), 2f64.powf(2.0 * 1.5) * 3.0);
        assert_eq!(besov_norm(&CoeffTree::zeros(0, 4), &p), 0.0);
    }

    #[test]
    fn norm_hand_evaluated() {
        // mother levels 0..2 all ones, alpha=1, p=2, q=inf:
        // max_l 2^{l} * 2^{l/2} = 2^{3} at l = 2
        let p = BesovParams::new(1.0, 2.0, f64::INFINITY, 1.0).unwrap();
        let mut t = CoeffTree::zeros(0, 3);
        for l in 0..3 {
            t.mother_mut(l).unwrap().fill(1.0);
        }
        assert_relative_eq!(besov_norm(&t, &p), 8.0, epsilon = 1e-12);
    }

    #[test]
    fn params_validation() {
        assert!(BesovParams::new(0.75, 4.0, 2.0, 1.0).is_ok());
        assert!(BesovParams::new(0.7, 4.0, 2.0, 1.0).is_err());
        assert!(BesovParams::new(1.0, 1.5, 2.0, 1.0).is_err());
        assert!(BesovParams::new(1.0, 2.0, 0.5, 1.0).is_err());
        assert!(BesovParams::new(1.0, 2.0, 1.0, 0.0).is_err());
        let db2 = build_family(FamilyName::Daubechies2, 10).unwrap();
        assert!(BesovParams::new(2.5, f64::INFINITY, 1.0, 1.0).unwrap().validate_for(&db2).is_err());
    }

    #[test]
    fn params_json_with_infinity() {
        let p = BesovParams::new(0.75, f64::INFINITY, f64::INFINITY, 1.0).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"inf\""));
        let back: BesovParams = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn cosine_prior_single_level() {
        let p = BesovParams::new(0.75, 4.0, 2.0, 2.0).unwrap();
        let t = sample_besov(&p, &haar(), 3, SampleStyle::CosinePrior, 9).unwrap();
        let bound = 2f64.powf(-3.0 * 1.25) * 2.0;
        assert!(t.father().iter().all(|&v| v == 0.0));
        for l in 0..3 {
            assert!(t.mother(l).unwrap().iter().all(|&v| v == 0.0));
        }
        let top = t.mother(3).unwrap();
        assert!(top.iter().all(|v| v.abs() <= bound));
        assert!(top.iter().any(|&v| v != 0.0));
        assert!(besov_norm(&t, &p) <= p.radius);
    }

    #[test]
    fn uniform_decay_norm() {
        let p = BesovParams::new(0.75, f64::INFINITY, f64::INFINITY, 1.5).unwrap();
        let a = sample_besov(&p, &haar(), 8, SampleStyle::UniformDecay, 3).unwrap();
        let b = sample_besov(&p, &haar(), 8, SampleStyle::UniformDecay, 3).unwrap();
        assert_eq!(a, b);
        assert_relative_eq!(besov_norm(&a, &p), 0.9 * 1.5, epsilon = 1e-12);
        assert_eq!(a.resolution(), 9);
    }

    #[test]
    fn envelope_examples() {
        let f = haar();
        let mut t = CoeffTree::zeros(0, 0);
        t.father_mut()[0] = -1.75;
        assert_eq!(sup_norm_bound(&t, &f), 1.75);
        assert_eq!(sup_norm_bound(&CoeffTree::zeros(0, 6), &f), 0.0);
        let mut t = CoeffTree::zeros(0, 5);
        t.set(LevelIndex::mother(4, 3).unwrap(), 1.0).unwrap();
        assert_eq!(sup_norm_bound(&t, &f), 4.0);
    }

    #[test]
    fn sample_constant_function() {
        let f = haar();
        let s = generate_sample(&CoeffTree::zeros(0, 3), &f, 50, 0.0, 1).unwrap();
        assert!(s.y.iter().all(|&y| y == 0.0));
        let mut t = CoeffTree::zeros(0, 0);
        t.father_mut()[0] = 3.0;
        let s = generate_sample(&t, &f, 50, 0.0, 1).unwrap();
        assert!(s.y.iter().all(|&y| y == 3.0));
        assert!(s.x.iter().all(|x| (0.0..=1.0).contains(x)));
        assert_eq!(generate_sample(&t, &f, 0, 1.0, 1).unwrap_err(), Error::Empty("sample size n = 0"));
    }

    #[test]
    fn sample_noise_is_centered() {
        // mean of Y - f(X) over 10^6 draws within 4 sigma / 10^3
        let f = haar();
        let p = BesovParams::new(1.0, f64::INFINITY, 2.0, 1.0).unwrap();
        let t = sample_besov(&p, &f, 5, SampleStyle::UniformDecay, 11).unwrap();
        let s = generate_sample(&t, &f, 1_000_000, 1.0, 12).unwrap();
        let mean = s.iter().map(|(x, y)| y - f.synthesize(&t, x).unwrap()).sum::<f64>() / s.len() as f64;
        assert!(mean.abs() < 4e-3, "mean {mean}");
    }

    #[test]
    fn tree_json_shape() {
        let mut t = CoeffTree::zeros(0, 2);
        t.father_mut()[0] = 0.5;
        t.mother_mut(1).unwrap()[1] = -2.0;
        let s = t.to_json().unwrap();
        assert_eq!(s, r#"{"l0":0,"levels":[[0.5],[0.0],[0.0,-2.0]]}"#);
        assert_eq!(CoeffTree::from_json(&s).unwrap(), t);
        assert!(CoeffTree::from_json(r#"{"l0":0,"levels":[[1.0],[1.0,2.0]]}"#).is_err());
        assert!(CoeffTree::from_json(r#"{"l0":1,"levels":[[1.0]]}"#).is_err());
    }

    #[test]
    fn flat_layout() {
        let t = CoeffTree::from_flat(2, 4, &(0..16).map(f64::from).collect::<Vec<_>>()).unwrap();
        assert_eq!(t.father(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(t.mother(2).unwrap(), &[4.0, 5.0, 6.0, 7.0]);
        assert_eq!(t.mother(3).unwrap().len(), 8);
        assert_eq!(t.len(), 16);
        assert!(CoeffTree::from_flat(2, 4, &[0.0; 15]).is_err());
        assert_abs_diff_eq!(t.tail_energy(3), (8..16).map(|v| (v * v) as f64).sum::<f64>());
    }
}

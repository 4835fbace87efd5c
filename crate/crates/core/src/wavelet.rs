//! Compactly supported orthonormal wavelet bases of L2[0,1].
//!
//! Two constructions are available: the Haar basis, evaluated exactly, and
//! periodized Daubechies bases with 2, 3 or 4 vanishing moments whose father
//! and mother functions are tabulated by the cascade algorithm on a dyadic
//! grid and evaluated by linear interpolation.
//!
//! Both functions of a Daubechies family are supported on `[0, 2A-1]`. The
//! basis used on `[0,1]` consists of the `2^l0` father functions at the base
//! level `l0` followed by `2^l` mother functions at every level `l >= l0`;
//! truncating after level `L-1` spans the resolution-`L` approximation space.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::besov::CoeffTree;
use crate::error::{Error, Result};

pub const MIN_CASCADE_DEPTH: u32 = 8;
pub const MAX_CASCADE_DEPTH: u32 = 20;
pub const DEFAULT_CASCADE_DEPTH: u32 = 12;

/// Highest level any family will evaluate.
pub const MAX_LEVEL: u32 = 30;

// orthonormal low-pass filters, digits as published
#[allow(clippy::excessive_precision)]
const DB2: [f64; 4] = [
    0.482_962_913_144_534_14,
    0.836_516_303_737_807_9,
    0.224_143_868_042_013_38,
    -0.129_409_522_551_260_38,
];
#[allow(clippy::excessive_precision)]
const DB3: [f64; 6] = [
    0.332_670_552_950_082_6,
    0.806_891_509_311_092_6,
    0.459_877_502_118_491_57,
    -0.135_011_020_010_254_59,
    -0.085_441_273_882_026_66,
    0.035_226_291_885_709_537,
];
#[allow(clippy::excessive_precision)]
const DB4: [f64; 8] = [
    0.230_377_813_308_896_5,
    0.714_846_570_552_915_6,
    0.630_880_767_929_858_9,
    -0.027_983_769_416_859_854,
    -0.187_034_811_719_093_08,
    0.030_841_381_835_560_764,
    0.032_883_011_666_885_2,
    -0.010_597_401_785_069_032,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyName {
    #[serde(rename = "haar")]
    Haar,
    #[serde(rename = "daubechies-2")]
    Daubechies2,
    #[serde(rename = "daubechies-3")]
    Daubechies3,
    #[serde(rename = "daubechies-4")]
    Daubechies4,
}

impl FamilyName {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyName::Haar => "haar",
            FamilyName::Daubechies2 => "daubechies-2",
            FamilyName::Daubechies3 => "daubechies-3",
            FamilyName::Daubechies4 => "daubechies-4",
        }
    }

    fn filter(self) -> &'static [f64] {
        match self {
            FamilyName::Haar => &[std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2],
            FamilyName::Daubechies2 => &DB2,
            FamilyName::Daubechies3 => &DB3,
            FamilyName::Daubechies4 => &DB4,
        }
    }
}

impl fmt::Display for FamilyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "haar" => Ok(FamilyName::Haar),
            "daubechies-2" | "db2" => Ok(FamilyName::Daubechies2),
            "daubechies-3" | "db3" => Ok(FamilyName::Daubechies3),
            "daubechies-4" | "db4" => Ok(FamilyName::Daubechies4),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    ExactHaar,
    Periodized,
}

/// Father (scaling) or mother (detail) function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Father,
    Mother,
}

/// Position `(l, k)` of a basis function, `0 <= k < 2^l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LevelIndex {
    pub basis: Basis,
    pub level: u32,
    pub k: usize,
}

impl LevelIndex {
    pub fn new(basis: Basis, level: u32, k: usize) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::Level { level, min: 0, max: MAX_LEVEL });
        }
        if k >= 1usize << level {
            return Err(Error::InvalidParameter(format!(
                "translation {k} outside [0, 2^{level})"
            )));
        }
        Ok(Self { basis, level, k })
    }

    pub fn father(level: u32, k: usize) -> Result<Self> {
        Self::new(Basis::Father, level, k)
    }

    pub fn mother(level: u32, k: usize) -> Result<Self> {
        Self::new(Basis::Mother, level, k)
    }
}

/// An immutable wavelet basis; cheap to share across threads by reference.
#[derive(Debug, Clone)]
pub struct WaveletFamily {
    name: FamilyName,
    vanishing_moments: u32,
    support_length: u32,
    sup_norm: f64,
    overlap: usize,
    boundary: BoundaryMode,
    l0: u32,
    cascade_depth: u32,
    father_table: Vec<f64>,
    mother_table: Vec<f64>,
}

impl WaveletFamily {
    pub fn name(&self) -> FamilyName {
        self.name
    }

    pub fn vanishing_moments(&self) -> u32 {
        self.vanishing_moments
    }

    /// Length of the support of the father and mother functions.
    pub fn support_length(&self) -> u32 {
        self.support_length
    }

    /// Largest absolute value of the father and mother functions.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// Maximal number of functions of one kind and level that are nonzero at
    /// a given point (`c_A`).
    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    /// Base level `l0`.
    pub fn l0(&self) -> u32 {
        self.l0
    }

    pub fn cascade_depth(&self) -> u32 {
        self.cascade_depth
    }

    /// Checks that `level` can carry functions of this family.
    pub fn check_level(&self, level: u32) -> Result<()> {
        if level < self.l0 || level > MAX_LEVEL {
            return Err(Error::Level { level, min: self.l0, max: MAX_LEVEL });
        }
        Ok(())
    }

    /// Value of the basis function `idx` at `x`.
    pub fn eval(&self, idx: LevelIndex, x: f64) -> Result<f64> {
        check_point(x)?;
        self.check_level(idx.level)?;
        if idx.k >= 1usize << idx.level {
            return Err(Error::InvalidParameter(format!("translation {} out of range", idx.k)));
        }
        let mut out = 0.0;
        self.for_each_supported(idx.basis, idx.level, x, |k, v| {
            if k == idx.k {
                out = v;
            }
        });
        Ok(out)
    }

    /// Indices of the functions of one kind and level that are nonzero at `x`.
    pub fn supported_indices(&self, basis: Basis, level: u32, x: f64) -> Result<Vec<LevelIndex>> {
        check_point(x)?;
        self.check_level(level)?;
        let mut out = Vec::with_capacity(self.overlap);
        self.for_each_supported(basis, level, x, |k, _| out.push(LevelIndex { basis, level, k }));
        out.sort();
        Ok(out)
    }

    /// Evaluates the expansion `tree` at `x`.
    pub fn synthesize(&self, tree: &CoeffTree, x: f64) -> Result<f64> {
        check_point(x)?;
        if tree.is_empty() {
            return Ok(0.0);
        }
        self.check_level(tree.l0())?;
        if tree.l0() != self.l0 {
            return Err(Error::InvalidParameter(format!(
                "tree base level {} differs from family base level {}",
                tree.l0(),
                self.l0
            )));
        }
        Ok(self.synthesize_unchecked(tree, x))
    }

    pub(crate) fn synthesize_unchecked(&self, tree: &CoeffTree, x: f64) -> f64 {
        let mut acc = 0.0;
        for (basis, level, row) in tree.rows() {
            self.for_each_supported(basis, level, x, |k, v| acc += row[k] * v);
        }
        acc
    }

    /// Calls `f(k, value)` for every `k` with a nonzero function value at `x`.
    /// `x` must lie in `[0,1]` and `level` must be valid for the family.
    #[inline]
    pub(crate) fn for_each_supported(
        &self,
        basis: Basis,
        level: u32,
        x: f64,
        mut f: impl FnMut(usize, f64),
    ) {
        let n = 1usize << level;
        let scale = (n as f64).sqrt();
        let u = x * n as f64;
        match self.boundary {
            BoundaryMode::ExactHaar => {
                // x = 1 belongs to the last cell.
                let (cell, pos) = if x >= 1.0 {
                    (n - 1, 1.0)
                } else {
                    let c = (u.floor() as usize).min(n - 1);
                    (c, u - c as f64)
                };
                let v = match basis {
                    Basis::Father => scale,
                    Basis::Mother if pos < 0.5 => scale,
                    Basis::Mother => -scale,
                };
                f(cell, v);
            }
            BoundaryMode::Periodized => {
                let table = match basis {
                    Basis::Father => &self.father_table,
                    Basis::Mother => &self.mother_table,
                };
                let cell = u.floor();
                let frac = u - cell;
                let cell = cell as i64;
                let step = (1u64 << self.cascade_depth) as f64;
                for j in 0..self.support_length as i64 {
                    let t = frac + j as f64;
                    if t <= 0.0 {
                        continue;
                    }
                    let v = lerp_table(table, t * step);
                    if v != 0.0 {
                        let k = (cell - j).rem_euclid(n as i64) as usize;
                        f(k, scale * v);
                    }
                }
            }
        }
    }
}

fn check_point(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::OutOfDomain(x))
    }
}

#[inline]
fn lerp_table(table: &[f64], pos: f64) -> f64 {
    let i = pos.floor() as usize;
    if i + 1 >= table.len() {
        return if i + 1 == table.len() { table[i] } else { 0.0 };
    }
    let w = pos - i as f64;
    table[i] + w * (table[i + 1] - table[i])
}

/// Builds a wavelet family, tabulating Daubechies functions to resolution
/// `2^-cascade_depth`.
pub fn build_family(name: FamilyName, cascade_depth: u32) -> Result<WaveletFamily> {
    if !(MIN_CASCADE_DEPTH..=MAX_CASCADE_DEPTH).contains(&cascade_depth) {
        return Err(Error::CascadeDepth(cascade_depth));
    }
    if name == FamilyName::Haar {
        return Ok(WaveletFamily {
            name,
            vanishing_moments: 1,
            support_length: 1,
            sup_norm: 1.0,
            overlap: 1,
            boundary: BoundaryMode::ExactHaar,
            l0: 0,
            cascade_depth,
            father_table: Vec::new(),
            mother_table: Vec::new(),
        });
    }
    let h = name.filter();
    let vanishing_moments = (h.len() / 2) as u32;
    let support_length = h.len() as u32 - 1;
    let father_table = cascade_father(h, cascade_depth);
    let mother_table = mother_from_father(h, &father_table, cascade_depth);
    let sup_norm = father_table
        .iter()
        .chain(&mother_table)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    // every periodized function must fit inside [0,1] at the base level
    let l0 = 32 - (support_length - 1).leading_zeros();
    Ok(WaveletFamily {
        name,
        vanishing_moments,
        support_length,
        sup_norm,
        overlap: support_length as usize,
        boundary: BoundaryMode::Periodized,
        l0,
        cascade_depth,
        father_table,
        mother_table,
    })
}

/// Parses a family name and builds it at the default cascade depth.
pub fn family_by_name(name: &str) -> Result<WaveletFamily> {
    build_family(name.parse()?, DEFAULT_CASCADE_DEPTH)
}

/// Father function on the grid `i / 2^depth`, `0 <= i <= S 2^depth`, from the
/// two-scale relation `phi(x) = sqrt2 sum_k h_k phi(2x - k)`.
fn cascade_father(h: &[f64], depth: u32) -> Vec<f64> {
    let s = h.len() - 1;
    let unit = 1usize << depth;
    let last = s * unit;
    let mut table = vec![0.0; last + 1];
    for (n, v) in integer_values(h).into_iter().enumerate() {
        table[n * unit] = v;
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    for j in 1..=depth {
        let stride = 1usize << (depth - j);
        let mut idx = stride;
        while idx < last {
            // 2x - k on the grid; the operands were filled at coarser passes
            let twice = 2 * idx;
            let mut acc = 0.0;
            for (k, hk) in h.iter().enumerate() {
                let off = k * unit;
                if twice >= off && twice - off <= last {
                    acc += hk * table[twice - off];
                }
            }
            table[idx] = sqrt2 * acc;
            idx += 2 * stride;
        }
    }
    table
}

/// Values of the father function at the integers `0..=S`: the eigenvector of
/// the two-scale matrix for eigenvalue 1, normalized to sum 1.
#[allow(clippy::needless_range_loop)]
fn integer_values(h: &[f64]) -> Vec<f64> {
    let s = h.len() - 1;
    let sqrt2 = std::f64::consts::SQRT_2;
    // unknowns phi(1..s-1); phi(0) = phi(s) = 0 for the Daubechies filters
    let m = s - 1;
    let mut a = vec![vec![0.0; m + 1]; m];
    for row in 0..m {
        let n = row + 1;
        for col in 0..m {
            let j = col + 1;
            let k = 2 * n as i64 - j as i64;
            let coef = if (0..h.len() as i64).contains(&k) { sqrt2 * h[k as usize] } else { 0.0 };
            a[row][col] = coef - if row == col { 1.0 } else { 0.0 };
        }
    }
    // the system is singular; replace the last equation by the normalization
    for col in 0..m {
        a[m - 1][col] = 1.0;
    }
    a[m - 1][m] = 1.0;
    let sol = solve_dense(a);
    let mut out = vec![0.0; s + 1];
    out[1..s].copy_from_slice(&sol);
    out
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
#[allow(clippy::needless_range_loop)]
fn solve_dense(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let m = a.len();
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for row in col + 1..m {
            let factor = a[row][col] / a[col][col];
            for c in col..=m {
                a[row][c] -= factor * a[col][c];
            }
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let tail: f64 = (row + 1..m).map(|c| a[row][c] * x[c]).sum();
        x[row] = (a[row][m] - tail) / a[row][row];
    }
    x
}

/// Mother function `psi(x) = sqrt2 sum_k g_k phi(2x - k)` with
/// `g_k = (-1)^k h_{S-k}`, on the same grid as the father table.
fn mother_from_father(h: &[f64], father: &[f64], depth: u32) -> Vec<f64> {
    let s = h.len() - 1;
    let unit = 1usize << depth;
    let last = s * unit;
    let sqrt2 = std::f64::consts::SQRT_2;
    (0..=last)
        .map(|idx| {
            let twice = 2 * idx;
            let acc: f64 = (0..h.len())
                .filter_map(|k| {
                    let off = k * unit;
                    (twice >= off && twice - off <= last).then(|| {
                        let g = if k % 2 == 0 { h[s - k] } else { -h[s - k] };
                        g * father[twice - off]
                    })
                })
                .sum();
            sqrt2 * acc
        })
        .collect()
}

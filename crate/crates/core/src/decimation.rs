//! Spectral decimation: the exact Dirichlet spectrum of the gasket Laplacian
//! as sign words over the map `γ ↦ (5 ± √(25 − 4γ)) / 2`, and eigenfunction
//! extension from `V_{k−1}` to `V_k`.
//!
//! Every eigenvalue is born at some level `j` with `γ_j ∈ {2, 5, 6}` and is
//! carried to finer levels by a sign `ε_k` per level. Signs are stored up to
//! the generation of fixation `l`, the last level with `ε_l = +1` (or `j` when
//! there is none); every sign beyond `l` is `−1`.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::{ipow, Real};
use crate::topology::{interior_count, vertex_count, Gasket};

/// Iteration depth for the renormalized limit `λ = (3/2) lim 5^k γ_k`.
pub const LAMBDA_DEPTH: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Series {
    Two,
    Five,
    Six,
}

impl Series {
    pub fn initial_gamma<T: Real>(self) -> T {
        match self {
            Series::Two => T::lit(2.0),
            Series::Five => T::lit(5.0),
            Series::Six => T::lit(6.0),
        }
    }

    pub fn min_birth(self) -> usize {
        match self {
            Series::Six => 2,
            _ => 1,
        }
    }

    /// Eigenspace dimension for an eigenvalue of this series born at `birth`.
    pub fn multiplicity(self, birth: usize) -> usize {
        match self {
            Series::Two => 1,
            Series::Five => (ipow(3, birth - 1) as usize + 3) / 2,
            Series::Six => (ipow(3, birth) as usize - 3) / 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Series::Two => "2",
            Series::Five => "5",
            Series::Six => "6",
        }
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Series {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "2" | "two" => Ok(Series::Two),
            "5" | "five" => Ok(Series::Five),
            "6" | "six" => Ok(Series::Six),
            other => Err(format!("unknown series {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// `γ_k = (5 + ε √(25 − 4γ_{k−1})) / 2`.
///
/// The `ε = −1` branch is evaluated as `2γ / (5 + √(25 − 4γ))`, which keeps
/// full relative precision when `γ` is tiny.
pub fn gamma_step<T: Real>(prev: T, sign: Sign) -> Result<T> {
    let five = T::lit(5.0);
    let disc = T::lit(25.0) - T::lit(4.0) * prev;
    if disc < T::zero() {
        return Err(Error::NegativeDiscriminant(prev.to_f64_lossy()));
    }
    let root = disc.sqrt();
    Ok(match sign {
        Sign::Plus => (five + root) / T::lit(2.0),
        Sign::Minus => T::lit(2.0) * prev / (five + root),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueDescriptor<T: Real> {
    series: Series,
    birth: usize,
    signs: Vec<Sign>,
    level: usize,
    gamma: Vec<T>,
    lambda: T,
}

impl<T: Real> EigenvalueDescriptor<T> {
    /// Builds the descriptor born at `birth` with signs `ε_{birth+1}, …`
    /// (missing signs are `−1`), tabulating `γ` up to `level`.
    pub fn new(series: Series, birth: usize, mut signs: Vec<Sign>, level: usize) -> Result<Self> {
        if birth < series.min_birth() {
            return Err(Error::LevelTooSmall {
                min: series.min_birth(),
                got: birth,
            });
        }
        if level < birth {
            return Err(Error::LevelTooSmall {
                min: birth,
                got: level,
            });
        }
        if series == Series::Six && signs.first() != Some(&Sign::Plus) {
            // ε_{j+1} = −1 would land on the forbidden value 2
            return Err(Error::ForbiddenEigenvalue(2.0));
        }
        while signs.last() == Some(&Sign::Minus) {
            signs.pop();
        }
        let mut d = Self {
            series,
            birth,
            signs,
            level,
            gamma: Vec::new(),
            lambda: T::zero(),
        };
        d.gamma = d.gammas_through(level)?;
        d.lambda = renormalized_lambda(&d, LAMBDA_DEPTH.max(d.fixation() + 1))?;
        Ok(d)
    }

    /// The lowest eigenvalue of a series born at `birth` (all free signs `−1`).
    pub fn lowest(series: Series, birth: usize, level: usize) -> Result<Self> {
        let signs = if series == Series::Six {
            vec![Sign::Plus]
        } else {
            Vec::new()
        };
        Self::new(series, birth, signs, level)
    }

    pub fn series(&self) -> Series {
        self.series
    }

    pub fn birth(&self) -> usize {
        self.birth
    }

    /// Level the `γ` table was built to.
    pub fn level(&self) -> usize {
        self.level
    }

    /// Signs `ε_{j+1} … ε_l`.
    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }

    pub fn fixation(&self) -> usize {
        self.birth + self.signs.len()
    }

    pub fn multiplicity(&self) -> usize {
        self.series.multiplicity(self.birth)
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// `γ_j, …, γ_m` for the table level `m`.
    pub fn gammas(&self) -> &[T] {
        &self.gamma
    }

    /// `γ` at the table level.
    pub fn gamma_m(&self) -> T {
        *self.gamma.last().expect("level >= birth")
    }

    pub fn sign_at(&self, k: usize) -> Sign {
        if k <= self.birth {
            return Sign::Minus;
        }
        self.signs
            .get(k - self.birth - 1)
            .copied()
            .unwrap_or(Sign::Minus)
    }

    /// `γ_j, …, γ_k`.
    pub fn gammas_through(&self, k: usize) -> Result<Vec<T>> {
        if k < self.birth {
            return Err(Error::LevelTooSmall {
                min: self.birth,
                got: k,
            });
        }
        let mut out = Vec::with_capacity(k - self.birth + 1);
        let mut g = self.series.initial_gamma::<T>();
        out.push(g);
        for level in (self.birth + 1)..=k {
            g = gamma_step(g, self.sign_at(level))?;
            out.push(g);
        }
        Ok(out)
    }

    pub fn gamma_at(&self, k: usize) -> Result<T> {
        if k <= self.level && k >= self.birth {
            return Ok(self.gamma[k - self.birth]);
        }
        Ok(*self.gammas_through(k)?.last().expect("nonempty"))
    }

    pub fn sign_word(&self) -> String {
        self.signs.iter().map(|s| s.symbol()).collect()
    }

    /// The same eigenvalue with its `γ` table extended (or truncated) to `level`.
    pub fn at_level(&self, level: usize) -> Result<Self> {
        Self::new(self.series, self.birth, self.signs.clone(), level)
    }
}

/// `(3/2) 5^k γ_k` for `k = j, …, k_max`.
pub fn lambda_iterates<T: Real>(d: &EigenvalueDescriptor<T>, k_max: usize) -> Result<Vec<T>> {
    let gammas = d.gammas_through(k_max)?;
    let five = T::lit(5.0);
    let scale = T::lit(1.5);
    Ok(gammas
        .iter()
        .enumerate()
        .map(|(i, &g)| scale * five.powi((d.birth + i) as i32) * g)
        .collect())
}

/// Renormalized eigenvalue `λ = (3/2) lim 5^k γ_k`, evaluated at `k_max` and
/// required to have settled (successive relative change below `1e−12`, or a
/// few ulps for single precision).
pub fn renormalized_lambda<T: Real>(d: &EigenvalueDescriptor<T>, k_max: usize) -> Result<T> {
    let fail = Error::NonConvergence {
        k_max,
        fixation: d.fixation(),
    };
    if k_max <= d.fixation() {
        return Err(fail);
    }
    let iterates = lambda_iterates(d, k_max)?;
    let n = iterates.len();
    let (last, prev) = (iterates[n - 1], iterates[n - 2]);
    let tol = T::lit(1e-12).max(T::default_epsilon() * T::lit(8.0));
    if ((last - prev) / last).abs() >= tol {
        return Err(fail);
    }
    Ok(last)
}

/// All Dirichlet eigenvalues whose signs beyond `m` are `−1`, at level `m`.
#[derive(Debug, Clone)]
pub struct SpectrumTable<T: Real> {
    level: usize,
    entries: Vec<EigenvalueDescriptor<T>>,
}

fn sign_words(len: usize) -> impl Iterator<Item = Vec<Sign>> {
    (0..(1usize << len)).map(move |bits| {
        (0..len)
            .map(|i| {
                if bits >> (len - 1 - i) & 1 == 1 {
                    Sign::Plus
                } else {
                    Sign::Minus
                }
            })
            .collect()
    })
}

pub fn enumerate_spectrum<T: Real>(m: usize) -> Result<SpectrumTable<T>> {
    if m == 0 {
        return Err(Error::LevelTooSmall { min: 1, got: 0 });
    }
    let mut entries: Vec<EigenvalueDescriptor<T>> = Vec::new();
    for signs in sign_words(m - 1) {
        entries.push(EigenvalueDescriptor::new(Series::Two, 1, signs, m)?);
    }
    for j in 1..=m {
        for signs in sign_words(m - j) {
            entries.push(EigenvalueDescriptor::new(Series::Five, j, signs, m)?);
        }
    }
    for j in 2..=m {
        if j == m {
            entries.push(EigenvalueDescriptor::new(
                Series::Six,
                j,
                vec![Sign::Plus],
                m,
            )?);
        } else {
            for tail in sign_words(m - j - 1) {
                let mut signs = vec![Sign::Plus];
                signs.extend(tail);
                entries.push(EigenvalueDescriptor::new(Series::Six, j, signs, m)?);
            }
        }
    }
    entries.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap_or(Ordering::Equal));
    Ok(SpectrumTable { level: m, entries })
}

impl<T: Real> SpectrumTable<T> {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn entries(&self) -> &[EigenvalueDescriptor<T>] {
        &self.entries
    }

    pub fn total_multiplicity(&self) -> usize {
        self.entries.iter().map(|d| d.multiplicity()).sum()
    }

    /// Number of entries of `series` born at `birth`.
    pub fn count(&self, series: Series, birth: usize) -> usize {
        self.entries
            .iter()
            .filter(|d| d.series == series && d.birth == birth)
            .count()
    }

    /// `γ_m` repeated by multiplicity, ascending.
    pub fn gamma_multiset(&self) -> Vec<T> {
        let mut out: Vec<T> = self
            .entries
            .iter()
            .flat_map(|d| std::iter::repeat_n(d.gamma_m(), d.multiplicity()))
            .collect();
        out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        out
    }

    /// Writes `series, birth, signs, fixation, gamma_m, lambda, multiplicity`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record([
            "series",
            "birth",
            "signs",
            "fixation",
            "gamma_m",
            "lambda",
            "multiplicity",
        ])?;
        for d in &self.entries {
            writer.write_record([
                d.series.label().to_string(),
                d.birth.to_string(),
                d.sign_word(),
                d.fixation().to_string(),
                d.gamma_m().to_string(),
                d.lambda.to_string(),
                d.multiplicity().to_string(),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}

fn is_forbidden<T: Real>(gamma: T) -> bool {
    [2.0, 5.0, 6.0].iter().any(|&v| {
        let v = T::lit(v);
        (gamma - v).abs() <= T::default_epsilon() * T::lit(64.0) * v
    })
}

/// Extends a function on `V_{k−1}` (generation order) to `V_k`: each new
/// vertex on edge `(p, q)` with opposite corner `r` receives
/// `((4 − γ)(u(p) + u(q)) + 2u(r)) / ((2 − γ)(5 − γ))`.
pub fn extend_eigenfunction<T: Real>(
    gasket: &Gasket<T>,
    k: usize,
    values: &[T],
    gamma: T,
) -> Result<Vec<T>> {
    gasket.check_level(k)?;
    if k == 0 {
        return Err(Error::LevelTooSmall { min: 1, got: 0 });
    }
    if values.len() != vertex_count(k - 1) {
        return Err(Error::DimensionMismatch {
            expected: vertex_count(k - 1),
            got: values.len(),
        });
    }
    if is_forbidden(gamma) {
        return Err(Error::ForbiddenEigenvalue(gamma.to_f64_lossy()));
    }
    let mut out = values.to_vec();
    out.resize(vertex_count(k), T::zero());
    extend_in_place(gasket, k, &mut out, gamma);
    Ok(out)
}

fn extend_in_place<T: Real>(gasket: &Gasket<T>, k: usize, buf: &mut [T], gamma: T) {
    let side = T::lit(4.0) - gamma;
    let denom = (T::lit(2.0) - gamma) * (T::lit(5.0) - gamma);
    let two = T::lit(2.0);
    for s in gasket.stencils(k) {
        let [p, q] = s.ends;
        buf[s.vertex] = (side * (buf[p] + buf[q]) + two * buf[s.opposite]) / denom;
    }
}

/// Extends Dirichlet vectors (columns over `V_j \ V_0`) through the levels
/// `j+1, …, j+gammas.len()` using one `γ` per level.
pub fn extend_columns<T: Real>(
    gasket: &Gasket<T>,
    start_level: usize,
    columns: &DMatrix<T>,
    gammas: &[T],
) -> Result<DMatrix<T>> {
    let target = start_level + gammas.len();
    gasket.check_level(target)?;
    if columns.nrows() != interior_count(start_level) {
        return Err(Error::DimensionMismatch {
            expected: interior_count(start_level),
            got: columns.nrows(),
        });
    }
    if let Some(&g) = gammas.iter().find(|&&g| is_forbidden(g)) {
        return Err(Error::ForbiddenEigenvalue(g.to_f64_lossy()));
    }
    let n_out = interior_count(target);
    let mut out = DMatrix::zeros(n_out, columns.ncols());
    let mut buf = vec![T::zero(); vertex_count(target)];
    for c in 0..columns.ncols() {
        buf.iter_mut().for_each(|x| *x = T::zero());
        for (i, &v) in columns.column(c).iter().enumerate() {
            buf[i + 3] = v;
        }
        for (offset, &g) in gammas.iter().enumerate() {
            extend_in_place(gasket, start_level + offset + 1, &mut buf, g);
        }
        for i in 0..n_out {
            out[(i, c)] = buf[i + 3];
        }
    }
    Ok(out)
}

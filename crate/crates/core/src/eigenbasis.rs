//! Orthonormal eigenspace bases split into functions localized on single
//! `N`-cells and a non-localized remainder.
//!
//! Raw eigenspaces come from a dense solve at the generation of birth,
//! carried to the sample level by decimation extension. The localized part of
//! an eigenspace on cell `C` is the null space of the restriction map to the
//! vertices outside `C`; singular values at or below
//! [`NULLSPACE_THRESHOLD`] count as zero.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::DMatrix;

use crate::decimation::{extend_columns, EigenvalueDescriptor, Series};
use crate::error::{Error, Result};
use crate::laplacian::{dirichlet_spectrum_at, DenseSpectrum};
use crate::scalar::{ipow, Real};
use crate::topology::{enumerate_cells, interior_count, quadrature, CellAddress, Gasket};

/// Singular values of the outside-restriction map treated as zero.
pub const NULLSPACE_THRESHOLD: f64 = 1e-8;
/// Eigenvalue clustering tolerance when reading an eigenspace off a dense solve.
pub const CLUSTER_TOLERANCE: f64 = 1e-8;

/// Thresholds used when reading eigenspaces off dense solves and when
/// detecting localized functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub nullspace: f64,
    pub cluster: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            nullspace: NULLSPACE_THRESHOLD,
            cluster: CLUSTER_TOLERANCE,
        }
    }
}

/// Builds raw eigenspaces, caching dense solves per level.
#[derive(Debug)]
pub struct EigenspaceFactory<T: Real> {
    gasket: Gasket<T>,
    dense: HashMap<usize, DenseSpectrum<T>>,
    tolerances: Tolerances,
}

/// Eigenvectors of `−Δ_{m_q}` for one eigenvalue, columns over `V_{m_q} \ V_0`.
#[derive(Debug, Clone)]
pub struct RawBasis<T: Real> {
    pub descriptor: EigenvalueDescriptor<T>,
    pub sample_level: usize,
    pub vectors: DMatrix<T>,
}

impl<T: Real> EigenspaceFactory<T> {
    pub fn new(max_level: usize) -> Self {
        Self {
            gasket: Gasket::new(max_level),
            dense: HashMap::new(),
            tolerances: Tolerances::default(),
        }
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances
    }

    pub fn gasket(&self) -> &Gasket<T> {
        &self.gasket
    }

    pub fn dense(&mut self, level: usize) -> Result<&DenseSpectrum<T>> {
        if !self.dense.contains_key(&level) {
            let spectrum = dirichlet_spectrum_at(&self.gasket, level)?;
            self.dense.insert(level, spectrum);
        }
        Ok(&self.dense[&level])
    }

    fn cluster(&mut self, level: usize, gamma: T, expected: usize) -> Result<DMatrix<T>> {
        let tol = T::lit(self.tolerances.cluster);
        let space = self.dense(level)?.eigenspace(gamma, tol);
        if space.ncols() != expected {
            return Err(Error::MultiplicityMismatch {
                gamma: gamma.to_f64_lossy(),
                expected,
                found: space.ncols(),
            });
        }
        Ok(space)
    }

    /// Eigenspace of `γ_j ∈ {2, 5, 6}` at the birth level `j`.
    pub fn birth_eigenspace(&mut self, series: Series, birth: usize) -> Result<DMatrix<T>> {
        self.cluster(birth, series.initial_gamma(), series.multiplicity(birth))
    }

    /// Fast path: dense solve at birth, then decimation extension to `m_q`.
    pub fn eigenspace_vectors(
        &mut self,
        descriptor: &EigenvalueDescriptor<T>,
        m_q: usize,
    ) -> Result<RawBasis<T>> {
        let birth = descriptor.birth();
        if m_q < birth {
            return Err(Error::LevelTooSmall {
                min: birth,
                got: m_q,
            });
        }
        self.gasket.check_level(m_q)?;
        let start = self.birth_eigenspace(descriptor.series(), birth)?;
        let gammas = descriptor.gammas_through(m_q)?;
        let vectors = extend_columns(&self.gasket, birth, &start, &gammas[1..])?;
        Ok(RawBasis {
            descriptor: descriptor.at_level(m_q)?,
            sample_level: m_q,
            vectors,
        })
    }

    /// Oracle path: dense solve directly at `m_q`.
    pub fn eigenspace_vectors_dense(
        &mut self,
        descriptor: &EigenvalueDescriptor<T>,
        m_q: usize,
    ) -> Result<RawBasis<T>> {
        if m_q < descriptor.birth() {
            return Err(Error::LevelTooSmall {
                min: descriptor.birth(),
                got: m_q,
            });
        }
        let gamma = descriptor.gamma_at(m_q)?;
        let vectors = self.cluster(m_q, gamma, descriptor.multiplicity())?;
        Ok(RawBasis {
            descriptor: descriptor.at_level(m_q)?,
            sample_level: m_q,
            vectors,
        })
    }
}

fn dot<T: Real>(a: &[T], b: &[T], w: &[T]) -> T {
    a.iter()
        .zip(b)
        .zip(w)
        .fold(T::zero(), |acc, ((&x, &y), &wt)| acc + wt * x * y)
}

fn axpy<T: Real>(y: &mut [T], alpha: T, x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn columns_of<T: Real>(m: &DMatrix<T>) -> Vec<Vec<T>> {
    m.column_iter()
        .map(|c| c.iter().copied().collect())
        .collect()
}

fn matrix_of<T: Real>(rows: usize, cols: &[Vec<T>]) -> DMatrix<T> {
    DMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r])
}

/// Modified Gram–Schmidt (two passes) in the weighted inner product
/// `⟨a, b⟩ = Σ w a b`. Columns whose residual falls below `drop_tol` times
/// their original norm are discarded.
pub fn gram_schmidt<T: Real>(columns: &DMatrix<T>, weights: &[T], drop_tol: T) -> DMatrix<T> {
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(columns.ncols());
    for mut v in columns_of(columns) {
        let original = dot(&v, &v, weights).sqrt();
        if original == T::zero() {
            continue;
        }
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &v, weights);
                axpy(&mut v, -c, q);
            }
        }
        let norm = dot(&v, &v, weights).sqrt();
        if norm > drop_tol * original {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    matrix_of(columns.nrows(), &basis)
}

/// Greedily picks `count` directions from `candidates` orthogonal to the
/// orthonormal columns of `existing`, largest residual first.
fn pivoted_completion<T: Real>(
    existing: &[Vec<T>],
    candidates: &DMatrix<T>,
    weights: &[T],
    count: usize,
) -> Result<Vec<Vec<T>>> {
    let mut residuals = columns_of(candidates);
    for r in residuals.iter_mut() {
        for _ in 0..2 {
            for q in existing {
                let c = dot(q, r, weights);
                axpy(r, -c, q);
            }
        }
    }
    let mut chosen: Vec<Vec<T>> = Vec::with_capacity(count);
    for _ in 0..count {
        let (best, norm) = residuals
            .iter()
            .enumerate()
            .map(|(i, r)| (i, dot(r, r, weights).sqrt()))
            .fold((0, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if norm <= T::lit(NULLSPACE_THRESHOLD) {
            return Err(Error::DimensionMismatch {
                expected: count,
                got: chosen.len(),
            });
        }
        let mut v = residuals.swap_remove(best);
        for _ in 0..2 {
            for q in existing.iter().chain(chosen.iter()) {
                let c = dot(q, &v, weights);
                axpy(&mut v, -c, q);
            }
        }
        let n = dot(&v, &v, weights).sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        for r in residuals.iter_mut() {
            let c = dot(&v, r, weights);
            axpy(r, -c, &v);
        }
        chosen.push(v);
    }
    Ok(chosen)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BasisTag {
    Localized(CellAddress),
    Nonlocalized,
}

/// Orthonormal eigenspace basis, localized columns first (grouped by cell in
/// address order), then the non-localized remainder.
#[derive(Debug, Clone)]
pub struct EigenspaceBasis<T: Real> {
    pub descriptor: EigenvalueDescriptor<T>,
    pub sample_level: usize,
    pub scale: usize,
    pub vectors: DMatrix<T>,
    pub tags: Vec<BasisTag>,
    /// Localized dimension found on each `N`-cell, in address order.
    pub cell_dimensions: Vec<usize>,
    /// Set when `N ≥ j`: no localization was attempted.
    pub unlocalized_warning: bool,
    /// Largest outside singular value accepted as zero.
    pub max_null_singular: T,
    /// Smallest outside singular value rejected as nonzero.
    pub min_kept_singular: T,
    weights: Vec<T>,
}

impl<T: Real> EigenspaceBasis<T> {
    pub fn dimension(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn localized_count(&self) -> usize {
        self.cell_dimensions.iter().sum()
    }

    pub fn nonlocalized_count(&self) -> usize {
        self.dimension() - self.localized_count()
    }

    /// Quadrature weights on `V_{m_q} \ V_0` used for the inner product.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Column range belonging to the `N`-cell of rank `cell`.
    pub fn cell_columns(&self, cell: usize) -> std::ops::Range<usize> {
        let start: usize = self.cell_dimensions[..cell].iter().sum();
        start..start + self.cell_dimensions[cell]
    }

    pub fn write_csv<W: Write>(&self, gasket: &Gasket<T>, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["vertex", "column", "value", "tag"])?;
        for (c, tag) in self.tags.iter().enumerate() {
            let tag = match tag {
                BasisTag::Localized(cell) => format!("localized:{cell}"),
                BasisTag::Nonlocalized => "nonlocalized".to_string(),
            };
            for r in 0..self.vectors.nrows() {
                writer.write_record([
                    gasket.vertex_id(r + 3, self.sample_level).to_string(),
                    c.to_string(),
                    self.vectors[(r, c)].to_string(),
                    tag.clone(),
                ])?;
            }
        }
        writer.flush()?;
        Ok(())
    }
}

/// Weights of the vertex quadrature at `m_q`, restricted to `V_{m_q} \ V_0`.
pub fn interior_weights<T: Real>(m_q: usize) -> Vec<T> {
    vec![quadrature(m_q).interior_weight::<T>(); interior_count(m_q)]
}

struct NullSpace<T: Real> {
    coefficients: DMatrix<T>,
    max_null: T,
    min_kept: T,
}

/// Coefficient vectors `c` (orthonormal, `d × k`) with `Q_out c = 0`, for `Q`
/// with orthonormal columns in plain coordinates. Null vectors satisfy
/// `‖Q_in c‖ = 1`, so candidates are read off the top of the inside Gram
/// spectrum and confirmed on the outside rows, both via the symmetric
/// eigensolver on Gram matrices.
fn outside_nullspace<T: Real>(
    q: &DMatrix<T>,
    inside: &[usize],
    outside: &[usize],
    threshold: T,
) -> NullSpace<T> {
    let d = q.ncols();
    let mut max_null = T::zero();
    let mut min_kept = T::max_value().expect("bounded");
    let empty = |max_null, min_kept| NullSpace {
        coefficients: DMatrix::zeros(d, 0),
        max_null,
        min_kept,
    };
    if inside.is_empty() {
        return empty(max_null, min_kept);
    }
    let q_in = q.select_rows(inside);
    let inner = (q_in.transpose() * &q_in).symmetric_eigen();
    let candidate_slack = T::lit(1e-4);
    let mut candidates = Vec::new();
    for (i, &s2) in inner.eigenvalues.iter().enumerate() {
        let outside_sq = T::one() - s2;
        if outside_sq <= candidate_slack {
            candidates.push(i);
        } else {
            let est = outside_sq.sqrt();
            if est < min_kept {
                min_kept = est;
            }
        }
    }
    if candidates.is_empty() {
        return empty(max_null, min_kept);
    }
    let vc = inner.eigenvectors.select_columns(&candidates);
    let y = q.select_rows(outside) * &vc;
    let outer = (y.transpose() * &y).symmetric_eigen();
    let mut keep = Vec::new();
    for (i, &s2) in outer.eigenvalues.iter().enumerate() {
        let s = s2.max(T::zero()).sqrt();
        if s <= threshold {
            keep.push(i);
            if s > max_null {
                max_null = s;
            }
        } else if s < min_kept {
            min_kept = s;
        }
    }
    NullSpace {
        coefficients: vc * outer.eigenvectors.select_columns(&keep),
        max_null,
        min_kept,
    }
}

/// Orthonormal basis of the raw eigenspace with no localization attempted.
pub fn orthonormalize<T: Real>(raw: &RawBasis<T>) -> Result<EigenspaceBasis<T>> {
    let weights = interior_weights::<T>(raw.sample_level);
    let q = gram_schmidt(&raw.vectors, &weights, T::lit(NULLSPACE_THRESHOLD));
    let d = raw.descriptor.multiplicity();
    if q.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: q.ncols(),
        });
    }
    Ok(EigenspaceBasis {
        descriptor: raw.descriptor.clone(),
        sample_level: raw.sample_level,
        scale: 0,
        vectors: q,
        tags: vec![BasisTag::Nonlocalized; d],
        cell_dimensions: Vec::new(),
        unlocalized_warning: false,
        max_null_singular: T::zero(),
        min_kept_singular: T::max_value().expect("bounded"),
        weights,
    })
}

/// Splits an eigenspace into per-cell localized functions at scale `N` and a
/// Gram–Schmidt completion, all orthonormal in the quadrature inner product.
pub fn localize_basis<T: Real>(
    raw: &RawBasis<T>,
    gasket: &Gasket<T>,
    scale: usize,
) -> Result<EigenspaceBasis<T>> {
    localize_basis_with(raw, gasket, scale, NULLSPACE_THRESHOLD)
}

/// [`localize_basis`] with an explicit null singular value threshold.
pub fn localize_basis_with<T: Real>(
    raw: &RawBasis<T>,
    gasket: &Gasket<T>,
    scale: usize,
    threshold: f64,
) -> Result<EigenspaceBasis<T>> {
    let m_q = raw.sample_level;
    gasket.check_level(m_q)?;
    if scale > m_q {
        return Err(Error::ScaleTooLarge { scale, level: m_q });
    }
    let mut basis = orthonormalize(raw)?;
    basis.scale = scale;
    basis.cell_dimensions = vec![0; ipow(3, scale) as usize];
    let q = basis.vectors.clone();
    let d = q.ncols();
    let drop_tol = T::lit(NULLSPACE_THRESHOLD);
    if scale >= raw.descriptor.birth() {
        basis.unlocalized_warning = true;
        return Ok(basis);
    }

    let sqrt_w = basis.weights[0].sqrt();
    let plain = &q * sqrt_w;
    let incident = gasket.incident_cell_ranks(m_q, scale)?;
    let cells = enumerate_cells(scale);
    let mut localized: Vec<Vec<T>> = Vec::new();
    let mut tags = Vec::new();
    for (rank, cell) in cells.iter().enumerate() {
        let (inside, outside): (Vec<usize>, Vec<usize>) =
            (0..plain.nrows()).partition(|&r| incident[r + 3].contains(&rank));
        let null = outside_nullspace(&plain, &inside, &outside, T::lit(threshold));
        basis.max_null_singular = basis.max_null_singular.max(null.max_null);
        basis.min_kept_singular = basis.min_kept_singular.min(null.min_kept);
        if null.coefficients.ncols() == 0 {
            continue;
        }
        let local = gram_schmidt(&(&q * &null.coefficients), &basis.weights, drop_tol);
        basis.cell_dimensions[rank] = local.ncols();
        for col in columns_of(&local) {
            localized.push(col);
            tags.push(BasisTag::Localized(cell.clone()));
        }
    }
    let remainder = pivoted_completion(&localized, &q, &basis.weights, d - localized.len())?;
    tags.extend(std::iter::repeat_n(BasisTag::Nonlocalized, remainder.len()));
    localized.extend(remainder);
    basis.vectors = matrix_of(q.nrows(), &localized);
    basis.tags = tags;
    Ok(basis)
}

/// `max |⟨u_a, u_b⟩ − δ_ab|` in the quadrature inner product.
pub fn orthonormality_check<T: Real>(basis: &EigenspaceBasis<T>) -> T {
    weighted_gram_deviation(&basis.vectors, &basis.weights)
}

pub fn weighted_gram_deviation<T: Real>(vectors: &DMatrix<T>, weights: &[T]) -> T {
    let scaled = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| {
        vectors[(r, c)] * weights[r]
    });
    let gram = vectors.transpose() * scaled;
    let n = gram.nrows();
    (gram - DMatrix::identity(n, n)).amax()
}

/// `max |⟨u_a, v_b⟩|` between two bases sampled at the same level.
pub fn cross_gram_max<T: Real>(a: &EigenspaceBasis<T>, b: &EigenspaceBasis<T>) -> Result<T> {
    if a.vectors.nrows() != b.vectors.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.vectors.nrows(),
            got: b.vectors.nrows(),
        });
    }
    let scaled = DMatrix::from_fn(b.vectors.nrows(), b.vectors.ncols(), |r, c| {
        b.vectors[(r, c)] * a.weights[r]
    });
    Ok((a.vectors.transpose() * scaled).amax())
}

/// Largest sine of the principal angles between the column spans (plain
/// coordinates).
pub fn subspace_distance<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    let ones = vec![T::one(); a.nrows()];
    let qa = gram_schmidt(a, &ones, T::lit(1e-12));
    let qb = gram_schmidt(b, &ones, T::lit(1e-12));
    let residual = &qb - &qa * (qa.transpose() * &qb);
    let forward = residual.singular_values().max();
    let residual = &qa - &qb * (qb.transpose() * &qa);
    forward.max(residual.singular_values().max())
}

/// Dimension bookkeeping of one eigenspace at localization scale `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalizationCounts {
    pub total: usize,
    pub localized: usize,
    pub nonlocalized: usize,
    pub per_cell: usize,
}

/// 6-series, birth `j > N`: `d_j = (3^j − 3)/2`, `d_j^N = (3^j − 3^{N+1})/2`,
/// `α_j^N = (3^{N+1} − 3)/2`, `m_j^N = (3^{j−N} − 3)/2`.
pub fn six_series_counts(birth: usize, scale: usize) -> LocalizationCounts {
    let p = |e: usize| ipow(3, e) as usize;
    LocalizationCounts {
        total: (p(birth) - 3) / 2,
        localized: (p(birth) - p(scale + 1)) / 2,
        nonlocalized: (p(scale + 1) - 3) / 2,
        per_cell: (p(birth - scale) - 3) / 2,
    }
}

/// The two competing non-localized counts for a 5-series eigenspace at
/// scale `N`: `(3^N − 3)/2` and `(3^N + 3)/2`.
pub fn five_series_nonlocalized_candidates(scale: usize) -> [usize; 2] {
    let p = ipow(3, scale) as usize;
    [(p - 3) / 2, (p + 3) / 2]
}

//! Compressed multiplication operators `P[f]P` on eigenspace bases, their
//! log-determinants and spectral functionals.

use nalgebra::DMatrix;

use crate::decimation::EigenvalueDescriptor;
use crate::eigenbasis::{BasisTag, EigenspaceBasis};
use crate::error::{Error, Result};
use crate::functions::{SampledFunction, SimpleFunction};
use crate::scalar::{ipow, Real};

/// `⟨f u_a, u_b⟩` for the basis of one eigenvalue.
#[derive(Debug, Clone)]
pub struct OperatorBlock<T: Real> {
    pub descriptor: EigenvalueDescriptor<T>,
    pub matrix: DMatrix<T>,
    /// Number of leading localized columns.
    pub localized: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompressionMode {
    SingleEigenspace,
    Cutoff,
}

/// `M_j = P_j[f]P_j` (one block) or `M_Λ` (one block per eigenvalue).
#[derive(Debug, Clone)]
pub struct CompressedOperator<T: Real> {
    pub mode: CompressionMode,
    pub sample_level: usize,
    pub blocks: Vec<OperatorBlock<T>>,
}

/// `Bᵀ diag(w f) B` over the interior vertices of the sample level.
pub fn compress_block<T: Real>(
    basis: &EigenspaceBasis<T>,
    f: &SampledFunction<T>,
) -> Result<DMatrix<T>> {
    if f.level() != basis.sample_level {
        return Err(Error::LevelUnavailable {
            requested: basis.sample_level,
            available: f.level(),
        });
    }
    let w = basis.weights();
    let fi = f.interior();
    let b = &basis.vectors;
    let scaled = DMatrix::from_fn(b.nrows(), b.ncols(), |r, c| b[(r, c)] * w[r] * fi[r]);
    let m = b.transpose() * scaled;
    Ok((&m + m.transpose()) * T::lit(0.5))
}

fn block_of<T: Real>(
    basis: &EigenspaceBasis<T>,
    f: &SampledFunction<T>,
) -> Result<OperatorBlock<T>> {
    Ok(OperatorBlock {
        descriptor: basis.descriptor.clone(),
        matrix: compress_block(basis, f)?,
        localized: basis.localized_count(),
    })
}

pub fn assemble_compressed<T: Real>(
    basis: &EigenspaceBasis<T>,
    f: &SampledFunction<T>,
) -> Result<CompressedOperator<T>> {
    Ok(CompressedOperator {
        mode: CompressionMode::SingleEigenspace,
        sample_level: basis.sample_level,
        blocks: vec![block_of(basis, f)?],
    })
}

/// `M_Λ` with one block per eigenvalue; cross-eigenvalue entries are dropped.
pub fn assemble_cutoff<T: Real>(
    bases: &[EigenspaceBasis<T>],
    f: &SampledFunction<T>,
) -> Result<CompressedOperator<T>> {
    let first = bases.first().ok_or(Error::EmptyRange)?;
    let blocks = bases
        .iter()
        .map(|b| block_of(b, f))
        .collect::<Result<Vec<_>>>()?;
    Ok(CompressedOperator {
        mode: CompressionMode::Cutoff,
        sample_level: first.sample_level,
        blocks,
    })
}

/// `log det` of a symmetric positive definite matrix, `2 Σ log L_ii`.
pub fn cholesky_log_det<T: Real>(m: &DMatrix<T>) -> Result<T> {
    let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l_dirty();
    Ok((0..m.nrows()).fold(T::zero(), |acc, i| acc + l[(i, i)].ln()) * T::lit(2.0))
}

fn symmetric_eigenvalues<T: Real>(m: &DMatrix<T>) -> Vec<T> {
    m.clone().symmetric_eigenvalues().iter().copied().collect()
}

impl<T: Real> CompressedOperator<T> {
    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(|b| b.matrix.nrows()).sum()
    }

    /// The full matrix; block diagonal in cutoff mode.
    pub fn matrix(&self) -> DMatrix<T> {
        let d = self.dimension();
        let mut out = DMatrix::zeros(d, d);
        let mut offset = 0;
        for b in &self.blocks {
            let n = b.matrix.nrows();
            out.view_mut((offset, offset), (n, n)).copy_from(&b.matrix);
            offset += n;
        }
        out
    }

    /// Per-block Cholesky log-determinants.
    pub fn block_log_dets(&self) -> Result<Vec<T>> {
        self.blocks
            .iter()
            .map(|b| cholesky_log_det(&b.matrix))
            .collect()
    }

    /// `log det M`, summed over blocks.
    pub fn log_det(&self) -> Result<T> {
        Ok(self
            .block_log_dets()?
            .into_iter()
            .fold(T::zero(), |a, b| a + b))
    }

    /// `log det M` from one factorization of the assembled full matrix.
    pub fn log_det_full(&self) -> Result<T> {
        cholesky_log_det(&self.matrix())
    }

    /// Eigenvalues `σ_k` of `M`, ascending.
    pub fn eigenvalues(&self) -> Vec<T> {
        let mut all: Vec<T> = self
            .blocks
            .iter()
            .flat_map(|b| symmetric_eigenvalues(&b.matrix))
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        all
    }

    /// `Σ log σ_k`.
    pub fn log_det_eigen(&self) -> Result<T> {
        let sigma = self.eigenvalues();
        if let Some(&bad) = sigma.iter().find(|&&s| s <= T::zero()) {
            return Err(Error::FunctionalUndefined(bad.to_f64_lossy()));
        }
        Ok(sigma.iter().fold(T::zero(), |acc, &s| acc + s.ln()))
    }

    /// `(1/d) Σ F(σ_k)`.
    pub fn spectral_functional(&self, functional: impl Fn(T) -> T) -> Result<T> {
        let sigma = self.eigenvalues();
        mean_of(&sigma, functional)
    }
}

/// `(1/n) Σ F(x_k)`, failing on the first non-finite image.
pub fn mean_of<T: Real>(xs: &[T], functional: impl Fn(T) -> T) -> Result<T> {
    if xs.is_empty() {
        return Err(Error::EmptyRange);
    }
    let mut total = T::zero();
    for &x in xs {
        let v = functional(x);
        if !v.is_finite() {
            return Err(Error::FunctionalUndefined(x.to_f64_lossy()));
        }
        total += v;
    }
    Ok(total / T::from_count(xs.len()))
}

/// Deviation of a single-eigenspace block from the block structure expected
/// for a simple function: `a_k I` on the localized columns of cell `C_k`, and
/// no coupling between localized and non-localized columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockStructure<T> {
    /// `max |M_ab − a_k δ_ab|` over localized pairs.
    pub localized_deviation: T,
    /// `max |M_ab|`, `a` localized and `b` non-localized.
    pub coupling: T,
}

pub fn block_structure<T: Real>(
    block: &OperatorBlock<T>,
    basis: &EigenspaceBasis<T>,
    f: &SimpleFunction<T>,
) -> Result<BlockStructure<T>> {
    if f.scale() > basis.scale {
        return Err(Error::ScaleTooLarge {
            scale: f.scale(),
            level: basis.scale,
        });
    }
    let shrink = ipow(3, basis.scale - f.scale()) as usize;
    let expected: Vec<Option<T>> = basis
        .tags
        .iter()
        .map(|t| match t {
            BasisTag::Localized(cell) => Some(f.coefficients()[cell.rank() / shrink]),
            BasisTag::Nonlocalized => None,
        })
        .collect();
    let m = &block.matrix;
    let mut out = BlockStructure {
        localized_deviation: T::zero(),
        coupling: T::zero(),
    };
    for a in 0..m.nrows() {
        for b in 0..m.ncols() {
            match (expected[a], expected[b]) {
                (Some(ea), Some(_)) => {
                    let target = if a == b { ea } else { T::zero() };
                    out.localized_deviation =
                        out.localized_deviation.max((m[(a, b)] - target).abs());
                }
                (Some(_), None) | (None, Some(_)) => {
                    out.coupling = out.coupling.max(m[(a, b)].abs());
                }
                (None, None) => {}
            }
        }
    }
    Ok(out)
}

/// Largest `|⟨f u_a, u_b⟩|` with `u_a`, `u_b` from different eigenspaces:
/// the entries `M_Λ` omits relative to the full compression `P_Λ[f]P_Λ`.
pub fn cross_block_max<T: Real>(bases: &[EigenspaceBasis<T>], f: &SampledFunction<T>) -> Result<T> {
    let mut best = T::zero();
    let fi = f.interior();
    for (i, a) in bases.iter().enumerate() {
        let w = a.weights();
        let scaled = DMatrix::from_fn(a.vectors.nrows(), a.vectors.ncols(), |r, c| {
            a.vectors[(r, c)] * w[r] * fi[r]
        });
        for b in &bases[i + 1..] {
            if b.vectors.nrows() != a.vectors.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: a.vectors.nrows(),
                    got: b.vectors.nrows(),
                });
            }
            best = best.max((b.vectors.transpose() * &scaled).amax());
        }
    }
    Ok(best)
}

//! Graph approximations `Γ_m`, the Dirichlet graph Laplacian and a dense
//! eigensolver used as the reference spectrum.

use std::io::Write;

use nalgebra::{DMatrix, DVector, Scalar};
use num_traits::Signed;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::topology::{Gasket, VertexId};

/// `Γ_m`: vertices `V_m` (generation order) and the edges inside common m-cells.
#[derive(Debug, Clone)]
pub struct LevelGraph {
    level: usize,
    vertices: Vec<VertexId>,
    edges: Vec<(usize, usize)>,
}

impl LevelGraph {
    pub fn new<T: Real>(gasket: &Gasket<T>, level: usize) -> Result<Self> {
        gasket.check_level(level)?;
        let edges = gasket
            .cells(level)
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (a, c), (b, c)])
            .map(|(x, y)| (x.min(y), x.max(y)))
            .collect();
        Ok(Self {
            level,
            vertices: gasket.vertex_ids(level),
            edges,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertices.len()];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }
}

/// `Δ_m f(x) = Σ_{y~x} f(y) − 4 f(x)` restricted to `V_m \ V_0`.
///
/// Row/column `i` is vertex `i + 3` of the level graph.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix<T: Scalar> {
    level: usize,
    matrix: DMatrix<T>,
}

/// Assembles `Δ_m` with Dirichlet conditions on `V_0`. Works in any signed
/// ring, so integer or rational assembly is exact.
pub fn assemble_dirichlet_laplacian<T: Scalar + Signed>(graph: &LevelGraph) -> LaplacianMatrix<T> {
    let n = graph.vertices.len() - 3;
    let one = T::one();
    let four = one.clone() + one.clone() + one.clone() + one.clone();
    let mut matrix = DMatrix::from_element(n, n, T::zero());
    for i in 0..n {
        matrix[(i, i)] = -four.clone();
    }
    for &(a, b) in &graph.edges {
        if a >= 3 && b >= 3 {
            matrix[(a - 3, b - 3)] = one.clone();
            matrix[(b - 3, a - 3)] = one.clone();
        }
    }
    LaplacianMatrix {
        level: graph.level,
        matrix,
    }
}

impl<T: Scalar> LaplacianMatrix<T> {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    /// Writes the nonzero entries as `row col value` lines (0-based).
    pub fn write_coordinate<W: Write>(&self, mut out: W) -> Result<()>
    where
        T: std::fmt::Display + num_traits::Zero,
    {
        writeln!(out, "# row col value (n = {})", self.size())?;
        for j in 0..self.matrix.ncols() {
            for i in 0..self.matrix.nrows() {
                let v = &self.matrix[(i, j)];
                if !v.is_zero() {
                    writeln!(out, "{i} {j} {v}")?;
                }
            }
        }
        Ok(())
    }
}

impl<T: Real> LaplacianMatrix<T> {
    /// `−Δ_m` as a dense matrix.
    pub fn negated(&self) -> DMatrix<T> {
        -self.matrix.clone()
    }

    /// `‖(−Δ_m) v − γ v‖_∞` for an interior vector `v`.
    pub fn eigen_residual(&self, v: &DVector<T>, gamma: T) -> T {
        let r = -(&self.matrix * v) - v * gamma;
        r.amax()
    }
}

/// Eigendecomposition of `−Δ_m`: eigenvalues ascending, orthonormal columns.
#[derive(Debug, Clone)]
pub struct DenseSpectrum<T: Real> {
    pub level: usize,
    pub eigenvalues: Vec<T>,
    pub eigenvectors: DMatrix<T>,
}

pub fn dense_dirichlet_spectrum<T: Real>(laplacian: &LaplacianMatrix<T>) -> DenseSpectrum<T> {
    let eig = laplacian.negated().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("finite eigenvalues")
    });
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    DenseSpectrum {
        level: laplacian.level,
        eigenvalues,
        eigenvectors,
    }
}

impl<T: Real> DenseSpectrum<T> {
    /// Columns whose eigenvalue lies within `tol` of `gamma`.
    pub fn eigenspace(&self, gamma: T, tol: T) -> DMatrix<T> {
        let cols: Vec<usize> = self
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &g)| (g - gamma).abs() <= tol)
            .map(|(i, _)| i)
            .collect();
        self.eigenvectors.select_columns(&cols)
    }

    /// Writes `index, eigenvalue`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["index", "eigenvalue"])?;
        for (i, g) in self.eigenvalues.iter().enumerate() {
            writer.write_record([i.to_string(), g.to_string()])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Convenience: build the level graph, assemble and solve in one go.
pub fn dirichlet_spectrum_at<T: Real>(
    gasket: &Gasket<T>,
    level: usize,
) -> Result<DenseSpectrum<T>> {
    if level == 0 {
        return Err(Error::LevelTooSmall { min: 1, got: 0 });
    }
    let graph = LevelGraph::new(gasket, level)?;
    Ok(dense_dirichlet_spectrum(&assemble_dirichlet_laplacian(
        &graph,
    )))
}

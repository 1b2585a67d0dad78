//! Effective resistance on `Γ_m` with edge conductance `(5/3)^m`, and the
//! empirical Hölder seminorm it induces.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::functions::SampledFunction;
use crate::laplacian::LevelGraph;
use crate::scalar::Real;
use crate::topology::{Gasket, VertexId};

/// Resistance network on `V_m`. Holds the grounded Green's matrix so that
/// pairwise resistances are `G_xx + G_yy − 2 G_xy`.
#[derive(Debug, Clone)]
pub struct ResistanceComputer<T: Real> {
    graph: LevelGraph,
    conductance: T,
    green: DMatrix<T>,
}

fn weighted_laplacian<T: Real>(graph: &LevelGraph, conductance: T) -> DMatrix<T> {
    let n = graph.vertices().len();
    let mut l = DMatrix::zeros(n, n);
    for &(a, b) in graph.edges() {
        l[(a, a)] += conductance;
        l[(b, b)] += conductance;
        l[(a, b)] -= conductance;
        l[(b, a)] -= conductance;
    }
    l
}

impl<T: Real> ResistanceComputer<T> {
    pub fn new(gasket: &Gasket<T>, level: usize) -> Result<Self> {
        let graph = LevelGraph::new(gasket, level)?;
        let conductance = (T::lit(5.0) / T::lit(3.0)).powi(level as i32);
        let l = weighted_laplacian(&graph, conductance);
        let n = l.nrows();
        // ground vertex 0
        let reduced = l.view((1, 1), (n - 1, n - 1)).into_owned();
        let inverse = reduced
            .cholesky()
            .ok_or(Error::NotPositiveDefinite)?
            .inverse();
        let mut green = DMatrix::zeros(n, n);
        green.view_mut((1, 1), (n - 1, n - 1)).copy_from(&inverse);
        Ok(Self {
            graph,
            conductance,
            green,
        })
    }

    pub fn level(&self) -> usize {
        self.graph.level()
    }

    pub fn conductance(&self) -> T {
        self.conductance
    }

    pub fn graph(&self) -> &LevelGraph {
        &self.graph
    }

    /// Resistance between vertex indices via the Green's matrix.
    pub fn between(&self, x: usize, y: usize) -> T {
        if x == y {
            return T::zero();
        }
        self.green[(x, x)] + self.green[(y, y)] - T::lit(2.0) * self.green[(x, y)]
    }

    fn index(&self, v: &VertexId) -> Result<usize> {
        let id = if v.level() > self.level() {
            v.at_level(self.level())
        } else {
            let mut w = v.clone();
            while w.level() < self.level() {
                w = w.lift();
            }
            Some(w)
        };
        id.and_then(|id| self.graph.vertices().iter().position(|u| *u == id))
            .ok_or_else(|| Error::UnknownVertex(v.to_string()))
    }

    /// Minimal energy of `u` with `u(x) = 0`, `u(y) = 1` on the network,
    /// from a Dirichlet solve for the harmonic minimizer.
    pub fn minimal_energy(&self, x: usize, y: usize) -> Result<T> {
        let n = self.graph.vertices().len();
        let l = weighted_laplacian(&self.graph, self.conductance);
        let free: Vec<usize> = (0..n).filter(|&i| i != x && i != y).collect();
        let mut u = DVector::zeros(n);
        u[y] = T::one();
        if !free.is_empty() {
            let l_ff = l.select_rows(&free).select_columns(&free);
            let rhs = DVector::from_iterator(free.len(), free.iter().map(|&i| -l[(i, y)]));
            let sol = l_ff
                .cholesky()
                .ok_or(Error::NotPositiveDefinite)?
                .solve(&rhs);
            for (k, &i) in free.iter().enumerate() {
                u[i] = sol[k];
            }
        }
        Ok(self.graph.edges().iter().fold(T::zero(), |acc, &(a, b)| {
            let d = u[a] - u[b];
            acc + self.conductance * d * d
        }))
    }
}

/// `R(x, y) = 1 / min{E(u) : u(x) = 0, u(y) = 1}`.
pub fn effective_resistance<T: Real>(
    rc: &ResistanceComputer<T>,
    x: &VertexId,
    y: &VertexId,
) -> Result<T> {
    let (i, j) = (rc.index(x)?, rc.index(y)?);
    if i == j {
        return Ok(T::zero());
    }
    Ok(T::one() / rc.minimal_energy(i, j)?)
}

/// `max_{x≠y} |f(x) − f(y)| / R(x, y)^α` over all vertex pairs of the network.
pub fn holder_seminorm<T: Real>(
    f: &SampledFunction<T>,
    rc: &ResistanceComputer<T>,
    alpha: T,
) -> Result<T> {
    if alpha <= T::zero() {
        return Err(Error::NonPositiveExponent(alpha.to_f64_lossy()));
    }
    let n = rc.graph.vertices().len();
    let values = f.values();
    if values.len() < n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: values.len(),
        });
    }
    let mut best = T::zero();
    for x in 0..n {
        for y in (x + 1)..n {
            let ratio = (values[x] - values[y]).abs() / rc.between(x, y).powf(alpha);
            if ratio > best {
                best = ratio;
            }
        }
    }
    Ok(best)
}

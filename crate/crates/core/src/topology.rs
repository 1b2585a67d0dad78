//! Word addressing of cells and vertices of the graph approximations `V_m`,
//! plus the vertex quadrature that discretizes the uniform self-similar measure.
//!
//! A vertex of `V_m` is written `F_w(q_c)` for a word `w` of length `m` and a
//! corner `c`. Points on the common edge of two sibling cells have two such
//! representations, `F_{u a c^r}(q_c) = F_{u c a^r}(q_a)`; the canonical id is
//! the lexicographically least of them. Vertices are stored in generation
//! order (`V_0` first, then the vertices new at each level), so `V_k` is
//! always a prefix of `V_m` and `V_k \ V_0` a prefix of the interior.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use num_traits::Num;

use crate::error::{Error, Result};
use crate::scalar::{ipow, Real};

/// Address of an m-cell `F_w(SG)`; the empty word is the whole gasket.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CellAddress {
    word: Vec<u8>,
}

impl CellAddress {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn new(word: Vec<u8>) -> Result<Self> {
        if let Some(&bad) = word.iter().find(|&&s| !(1..=3).contains(&s)) {
            return Err(Error::InvalidSymbol(bad));
        }
        Ok(Self { word })
    }

    pub fn level(&self) -> usize {
        self.word.len()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.word
    }

    pub fn child(&self, symbol: u8) -> Result<Self> {
        if !(1..=3).contains(&symbol) {
            return Err(Error::InvalidSymbol(symbol));
        }
        let mut word = self.word.clone();
        word.push(symbol);
        Ok(Self { word })
    }

    /// The ancestor cell at `level`, if `level` does not exceed this cell's level.
    pub fn prefix(&self, level: usize) -> Option<Self> {
        (level <= self.word.len()).then(|| Self {
            word: self.word[..level].to_vec(),
        })
    }

    pub fn contains(&self, other: &CellAddress) -> bool {
        other.word.starts_with(&self.word)
    }

    /// Position of this address among the `3^m` addresses of its level.
    pub fn rank(&self) -> usize {
        self.word
            .iter()
            .fold(0usize, |acc, &s| acc * 3 + (s as usize - 1))
    }

    /// `μ(F_w(SG)) = 3^{-m}`.
    pub fn measure<T: Real>(&self) -> T {
        T::one() / T::from_count(ipow(3, self.level()) as usize)
    }
}

impl fmt::Display for CellAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.word {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// All `3^m` cell addresses of level `m` in lexicographic order.
pub fn enumerate_cells(m: usize) -> Vec<CellAddress> {
    let count = ipow(3, m) as usize;
    (0..count)
        .map(|mut rank| {
            let mut word = vec![0u8; m];
            for slot in word.iter_mut().rev() {
                *slot = (rank % 3) as u8 + 1;
                rank /= 3;
            }
            CellAddress { word }
        })
        .collect()
}

/// Canonical vertex id: `(cell word of length m, corner)` reduced to the
/// lexicographically least representative.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId {
    cell: CellAddress,
    corner: u8,
}

impl VertexId {
    pub fn new(cell: CellAddress, corner: u8) -> Result<Self> {
        if !(1..=3).contains(&corner) {
            return Err(Error::InvalidCorner(corner));
        }
        let raw = VertexId { cell, corner };
        Ok(match raw.alternate() {
            Some(alt) if alt < raw => alt,
            _ => raw,
        })
    }

    /// One of the three corners of `SG`, addressed at level `m`.
    pub fn boundary(corner: u8, m: usize) -> Result<Self> {
        Self::new(CellAddress::new(vec![corner; m])?, corner)
    }

    pub fn cell(&self) -> &CellAddress {
        &self.cell
    }

    pub fn corner(&self) -> u8 {
        self.corner
    }

    pub fn level(&self) -> usize {
        self.cell.level()
    }

    pub fn is_boundary(&self) -> bool {
        self.cell.word.iter().all(|&s| s == self.corner)
    }

    /// The other `(word, corner)` naming the same point, if any.
    fn alternate(&self) -> Option<VertexId> {
        let word = &self.cell.word;
        let c = self.corner;
        let run = word.iter().rev().take_while(|&&s| s == c).count();
        if run == word.len() {
            return None;
        }
        let pos = word.len() - run - 1;
        let a = word[pos];
        let mut alt = word[..pos].to_vec();
        alt.push(c);
        alt.extend(std::iter::repeat_n(a, run));
        Some(VertexId {
            cell: CellAddress { word: alt },
            corner: a,
        })
    }

    /// The same point addressed one level finer.
    pub fn lift(&self) -> VertexId {
        let mut word = self.cell.word.clone();
        word.push(self.corner);
        VertexId {
            cell: CellAddress { word },
            corner: self.corner,
        }
    }

    /// The same point addressed at a coarser level, if it already exists there.
    pub fn at_level(&self, level: usize) -> Option<VertexId> {
        let word = &self.cell.word;
        if level > word.len() || word[level..].iter().any(|&s| s != self.corner) {
            return None;
        }
        Some(VertexId {
            cell: CellAddress {
                word: word[..level].to_vec(),
            },
            corner: self.corner,
        })
    }

    /// First level at which this point appears as a vertex.
    pub fn generation(&self) -> usize {
        let word = &self.cell.word;
        let run = word.iter().rev().take_while(|&&s| s == self.corner).count();
        word.len() - run
    }

    /// The (one or two) cells of level `scale` whose closure contains this vertex.
    pub fn cells_at(&self, scale: usize) -> Result<Vec<CellAddress>> {
        if scale > self.level() {
            return Err(Error::ScaleTooLarge {
                scale,
                level: self.level(),
            });
        }
        let mut cells = vec![self.cell.prefix(scale).expect("scale checked")];
        if let Some(alt) = self.alternate() {
            let other = alt.cell.prefix(scale).expect("same level");
            if other != cells[0] {
                cells.push(other);
            }
        }
        cells.sort();
        Ok(cells)
    }

    /// The lexicographically least `scale`-cell containing this vertex.
    pub fn owner_cell(&self, scale: usize) -> Result<CellAddress> {
        self.cell.prefix(scale).ok_or(Error::ScaleTooLarge {
            scale,
            level: self.level(),
        })
    }

    /// Euclidean position `F_w(q_c)`.
    pub fn position<T: Real>(&self) -> [T; 2] {
        let mut p = corner_point::<T>(self.corner);
        let half = T::lit(0.5);
        for &s in self.cell.word.iter().rev() {
            let o = map_offset::<T>(s);
            p = [p[0] * half + o[0], p[1] * half + o[1]];
        }
        p
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.cell, self.corner)
    }
}

fn corner_point<T: Real>(corner: u8) -> [T; 2] {
    match corner {
        1 => [T::zero(), T::zero()],
        2 => [T::one(), T::zero()],
        _ => [T::lit(0.5), T::lit(3.0).sqrt() * T::lit(0.5)],
    }
}

fn map_offset<T: Real>(symbol: u8) -> [T; 2] {
    match symbol {
        1 => [T::zero(), T::zero()],
        2 => [T::lit(0.5), T::zero()],
        _ => [T::lit(0.25), T::lit(3.0).sqrt() * T::lit(0.25)],
    }
}

/// `|V_m| = (3^{m+1} + 3) / 2`.
pub fn vertex_count(m: usize) -> usize {
    (ipow(3, m + 1) as usize + 3) / 2
}

/// `|V_m \ V_0| = (3^{m+1} - 3) / 2`.
pub fn interior_count(m: usize) -> usize {
    (ipow(3, m + 1) as usize - 3) / 2
}

/// Canonical vertex ids of `V_m` in generation order; the first three are `V_0`.
pub fn enumerate_vertices(m: usize) -> Vec<VertexId> {
    let mut ids = Vec::with_capacity(vertex_count(m));
    for corner in 1..=3u8 {
        ids.push(VertexId::boundary(corner, 0).expect("valid corner"));
    }
    for k in 1..=m {
        ids.iter_mut().for_each(|v| *v = v.lift());
        let mut fresh: Vec<VertexId> = enumerate_cells(k - 1)
            .into_iter()
            .flat_map(|cell| {
                [(1u8, 2u8), (1, 3), (2, 3)].map(|(a, b)| {
                    VertexId::new(cell.child(a).expect("valid symbol"), b).expect("valid corner")
                })
            })
            .collect();
        fresh.sort();
        ids.extend(fresh);
    }
    ids
}

/// Midpoint rule data for a vertex new at some level: it sits on the edge
/// `ends` of a cell one level coarser whose remaining corner is `opposite`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stencil {
    pub vertex: usize,
    pub ends: [usize; 2],
    pub opposite: usize,
}

/// Nested vertex tables, cell incidence and midpoint stencils for every level
/// up to `max_level`.
#[derive(Debug, Clone)]
pub struct Gasket<T> {
    max_level: usize,
    ids: Vec<VertexId>,
    coords: Vec<[T; 2]>,
    index: HashMap<VertexId, usize>,
    stencils: Vec<Vec<Stencil>>,
    cells: Vec<Vec<[usize; 3]>>,
}

impl<T: Real> Gasket<T> {
    pub fn new(max_level: usize) -> Self {
        let ids = enumerate_vertices(max_level);
        let coords = ids.iter().map(VertexId::position).collect();
        let index: HashMap<VertexId, usize> = ids
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, v)| (v, i))
            .collect();

        let lookup = |cell: &CellAddress, corner: u8| -> usize {
            let mut v = VertexId::new(cell.clone(), corner).expect("valid corner");
            while v.level() < max_level {
                v = v.lift();
            }
            index[&v]
        };

        let cells: Vec<Vec<[usize; 3]>> = (0..=max_level)
            .map(|k| {
                enumerate_cells(k)
                    .iter()
                    .map(|cell| [1u8, 2, 3].map(|c| lookup(cell, c)))
                    .collect()
            })
            .collect();

        let mut stencils = vec![Vec::new()];
        for k in 1..=max_level {
            let mut level_stencils: Vec<Stencil> = enumerate_cells(k - 1)
                .iter()
                .zip(&cells[k - 1])
                .flat_map(|(cell, corners)| {
                    [(0usize, 1usize, 2usize), (0, 2, 1), (1, 2, 0)].map(|(a, b, r)| Stencil {
                        vertex: lookup(
                            &cell.child(a as u8 + 1).expect("valid symbol"),
                            b as u8 + 1,
                        ),
                        ends: [corners[a], corners[b]],
                        opposite: corners[r],
                    })
                })
                .collect();
            level_stencils.sort_by_key(|s| s.vertex);
            stencils.push(level_stencils);
        }

        Self {
            max_level,
            ids,
            coords,
            index,
            stencils,
            cells,
        }
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub(crate) fn check_level(&self, level: usize) -> Result<()> {
        if level > self.max_level {
            return Err(Error::LevelUnavailable {
                requested: level,
                available: self.max_level,
            });
        }
        Ok(())
    }

    pub fn vertex_count(&self, level: usize) -> usize {
        vertex_count(level)
    }

    pub fn interior_count(&self, level: usize) -> usize {
        interior_count(level)
    }

    /// Canonical id of vertex `index`, addressed at `level`.
    pub fn vertex_id(&self, index: usize, level: usize) -> VertexId {
        self.ids[index]
            .at_level(level)
            .expect("vertex index belongs to the requested level")
    }

    pub fn vertex_ids(&self, level: usize) -> Vec<VertexId> {
        (0..vertex_count(level))
            .map(|i| self.vertex_id(i, level))
            .collect()
    }

    /// Index of a vertex in generation order, whatever level it is addressed at.
    pub fn index_of(&self, id: &VertexId) -> Option<usize> {
        if id.level() > self.max_level {
            let coarse = id.at_level(self.max_level)?;
            return self.index_of(&coarse);
        }
        let mut v = id.clone();
        while v.level() < self.max_level {
            v = v.lift();
        }
        self.index.get(&v).copied()
    }

    pub fn position(&self, index: usize) -> [T; 2] {
        self.coords[index]
    }

    pub fn positions(&self, level: usize) -> &[[T; 2]] {
        &self.coords[..vertex_count(level)]
    }

    pub fn is_boundary(&self, index: usize) -> bool {
        index < 3
    }

    /// Corner vertex indices of each `level`-cell, cells in lexicographic order.
    pub fn cells(&self, level: usize) -> &[[usize; 3]] {
        &self.cells[level]
    }

    /// Stencils of the vertices that are new at `level` (empty for level 0).
    pub fn stencils(&self, level: usize) -> &[Stencil] {
        &self.stencils[level]
    }

    /// For each vertex of `V_level`, the lexicographically least `scale`-cell
    /// containing it, as a rank in [`enumerate_cells`] order.
    pub fn owner_ranks(&self, level: usize, scale: usize) -> Result<Vec<usize>> {
        if scale > level {
            return Err(Error::ScaleTooLarge { scale, level });
        }
        Ok((0..vertex_count(level))
            .map(|i| {
                self.vertex_id(i, level)
                    .owner_cell(scale)
                    .expect("scale checked")
                    .rank()
            })
            .collect())
    }

    /// For each vertex of `V_level`, ranks of all `scale`-cells containing it.
    pub fn incident_cell_ranks(&self, level: usize, scale: usize) -> Result<Vec<Vec<usize>>> {
        (0..vertex_count(level))
            .map(|i| {
                Ok(self
                    .vertex_id(i, level)
                    .cells_at(scale)?
                    .iter()
                    .map(CellAddress::rank)
                    .collect())
            })
            .collect()
    }

    /// `Σ_cells 3^{-m} · mean of g over the cell's corners`, where `g` may
    /// depend on which cell is being visited (cell rank, vertex index).
    pub fn integrate_cellwise(&self, level: usize, mut g: impl FnMut(usize, usize) -> T) -> T {
        let cells = self.cells(level);
        let scale = T::one() / T::from_count(3 * cells.len());
        cells
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (rank, corners)| {
                acc + corners.iter().fold(T::zero(), |s, &v| s + g(rank, v)) * scale
            })
    }
}

/// Vertex quadrature at level `m_q`: each vertex carries `3^{-m_q}/3` per
/// `m_q`-cell it belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadratureScheme {
    level: usize,
    ids: Vec<VertexId>,
}

/// Quadrature for `μ` at level `m_q`.
pub fn quadrature(m_q: usize) -> QuadratureScheme {
    QuadratureScheme {
        level: m_q,
        ids: enumerate_vertices(m_q),
    }
}

impl QuadratureScheme {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.ids
    }

    fn cell_count(&self, index: usize) -> u32 {
        if self.ids[index].is_boundary() {
            1
        } else {
            2
        }
    }

    /// Exact weight of vertex `index` in any number field (rationals included).
    pub fn weight<W: Num + Clone>(&self, index: usize) -> W {
        let three = W::one() + W::one() + W::one();
        let denominator = num_traits::pow(three, self.level + 1);
        let numerator = (0..self.cell_count(index)).fold(W::zero(), |acc, _| acc + W::one());
        numerator / denominator
    }

    pub fn weight_of<W: Num + Clone>(&self, id: &VertexId) -> Option<W> {
        let id = if id.level() == self.level {
            id.clone()
        } else if id.level() < self.level {
            let mut v = id.clone();
            while v.level() < self.level {
                v = v.lift();
            }
            v
        } else {
            id.at_level(self.level)?
        };
        self.ids
            .iter()
            .position(|v| *v == id)
            .map(|i| self.weight(i))
    }

    pub fn weights<T: Real>(&self) -> Vec<T> {
        (0..self.ids.len()).map(|i| self.weight(i)).collect()
    }

    /// Weight shared by every vertex of `V_m \ V_0`.
    pub fn interior_weight<T: Real>(&self) -> T {
        T::lit(2.0) / T::from_count(ipow(3, self.level + 1) as usize)
    }

    /// `Σ_x w(x) g(x)` over `V_{m_q}`.
    pub fn integrate<T: Real>(&self, values: &[T]) -> Result<T> {
        if values.len() != self.ids.len() {
            return Err(Error::DimensionMismatch {
                expected: self.ids.len(),
                got: values.len(),
            });
        }
        Ok(values
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, &g)| acc + self.weight::<T>(i) * g))
    }

    /// Writes `id, word, corner, x, y, is_boundary, weight` for every vertex.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["id", "word", "corner", "x", "y", "is_boundary", "weight"])?;
        for (i, v) in self.ids.iter().enumerate() {
            let [x, y] = v.position::<f64>();
            writer.write_record([
                i.to_string(),
                v.cell().to_string(),
                v.corner().to_string(),
                x.to_string(),
                y.to_string(),
                v.is_boundary().to_string(),
                self.weight::<f64>(i).to_string(),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Writes the cell table of level `m`: `id, word, measure`.
pub fn write_cells_csv<W: Write>(m: usize, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["id", "word", "measure"])?;
    for (i, cell) in enumerate_cells(m).iter().enumerate() {
        writer.write_record([
            i.to_string(),
            cell.to_string(),
            cell.measure::<f64>().to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

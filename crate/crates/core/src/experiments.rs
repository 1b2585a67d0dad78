//! Szegő-type sweeps over single eigenspaces and spectral cutoffs, rate
//! fitting, and equidistribution against Riemann sums.

use std::io::Write;
use std::ops::RangeInclusive;
use std::time::Instant;

use serde::Serialize;

use crate::decimation::{enumerate_spectrum, EigenvalueDescriptor, Series, SpectrumTable};
use crate::eigenbasis::{
    localize_basis_with, orthonormalize, EigenspaceBasis, EigenspaceFactory, Tolerances,
};
use crate::error::{Error, Result};
use crate::functions::{GasketFunction, SampledFunction, SimpleFunction};
use crate::operator::{
    assemble_compressed, assemble_cutoff, block_structure, cross_block_max, mean_of,
    CompressedOperator,
};
use crate::scalar::{ipow, Real};
use crate::topology::{enumerate_cells, Gasket};

/// Largest sample level used for operator assembly (matrix side 3279).
pub const SAMPLE_LEVEL_CAP: usize = 7;

/// `m_q = max(j, m) + 1`, capped.
pub fn default_sample_level(level: usize) -> usize {
    (level + 1).min(SAMPLE_LEVEL_CAP)
}

/// `β = α log(5/3) / (log 3 + α log(5/3))`.
pub fn beta(alpha: f64) -> f64 {
    let r = (5.0f64 / 3.0).ln();
    alpha * r / (3f64.ln() + alpha * r)
}

/// `β̃ = β (1 − log 2 / log 3)`.
pub fn beta_tilde(alpha: f64) -> f64 {
    beta(alpha) * (1.0 - 2f64.ln() / 3f64.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    Single,
    Cutoff,
}

impl SweepMode {
    pub fn label(self) -> &'static str {
        match self {
            SweepMode::Single => "single",
            SweepMode::Cutoff => "cutoff",
        }
    }
}

/// One point of a Szegő sweep. `index` is `j` (single) or `m` (cutoff).
#[derive(Debug, Clone, Serialize)]
pub struct SzegoExperimentRecord {
    pub mode: SweepMode,
    pub index: usize,
    pub scale: usize,
    pub sample_level: usize,
    pub d: usize,
    pub logdet_over_d: f64,
    pub integral: f64,
    pub error: f64,
    pub fitted_beta: Option<f64>,
    pub runtime_s: f64,
    /// `|log det (Cholesky) − Σ log σ_k|`, relative.
    pub eigen_gap: f64,
    pub nonlocalized: Option<usize>,
    /// `(α/d)(‖log f‖_1 + ‖f‖_∞)`.
    pub error_bound: Option<f64>,
    pub structure_coupling: Option<f64>,
    /// `|log det M_Λ − Σ_λ log det M_λ|`, relative.
    pub block_consistency: Option<f64>,
    pub cross_block_max: Option<f64>,
    pub gamma_n: Option<GammaNCounts>,
}

impl SzegoExperimentRecord {
    pub fn d_times_error(&self) -> f64 {
        self.d as f64 * self.error
    }
}

/// Least-squares line through `(log d, log error)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `−slope`.
    pub beta: f64,
    pub points: usize,
}

/// Ordinary least squares of `ln error` on `ln d`; non-positive errors are skipped.
pub fn fit_rate(points: &[(usize, f64)]) -> Option<RateFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(d, e)| *d > 0 && *e > 0.0 && e.is_finite())
        .map(|&(d, e)| ((d as f64).ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Some(RateFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        beta: -slope,
        points: pts.len(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    pub records: Vec<SzegoExperimentRecord>,
    pub fit: Option<RateFit>,
    pub warnings: Vec<String>,
}

impl SweepOutcome {
    fn finish(mut records: Vec<SzegoExperimentRecord>, warnings: Vec<String>) -> Self {
        let fit = fit_rate(&records.iter().map(|r| (r.d, r.error)).collect::<Vec<_>>());
        for r in records.iter_mut() {
            r.fitted_beta = fit.map(|f| f.beta);
        }
        Self {
            records,
            fit,
            warnings,
        }
    }

    /// `max / min` of `d · error` over the sweep.
    pub fn d_error_ratio(&self) -> Option<f64> {
        let v: Vec<f64> = self.records.iter().map(|r| r.d_times_error()).collect();
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        (min > 0.0 && !v.is_empty()).then(|| max / min)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "mode",
            "index",
            "d",
            "logdet_over_d",
            "integral",
            "error",
            "fitted_beta",
            "scale",
            "sample_level",
            "d_times_error",
            "error_bound",
        ])?;
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                r.mode.label().to_string(),
                r.index.to_string(),
                r.d.to_string(),
                r.logdet_over_d.to_string(),
                r.integral.to_string(),
                r.error.to_string(),
                opt(r.fitted_beta),
                r.scale.to_string(),
                r.sample_level.to_string(),
                r.d_times_error().to_string(),
                opt(r.error_bound),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Two columns `ln d  ln error`, for plotting.
    pub fn write_plot_data<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# ln_d ln_error")?;
        for r in &self.records {
            if r.error > 0.0 {
                writeln!(out, "{} {}", (r.d as f64).ln(), r.error.ln())?;
            }
        }
        Ok(())
    }
}

/// Partition sizes behind the cutoff estimate: eigenvalues of the level-`m`
/// table with birth `j > N` form `Γ_N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GammaNCounts {
    /// `Σ_{λ∉Γ_N} d_λ`, counted from the table.
    pub excluded_dimension: usize,
    /// `#Γ_N`, counted from the table.
    pub count: usize,
    /// `2^{m−1} + Σ_{j≤N} 2^{m−j−1}(3^{j−1}+3) + Σ_{2≤j≤N} 2^{m−j−2}(3^j−3)`.
    pub bookkeeping_sum: usize,
}

pub fn gamma_n_counts<T: Real>(table: &SpectrumTable<T>, scale: usize) -> GammaNCounts {
    let m = table.level();
    let (mut excluded_dimension, mut count) = (0, 0);
    for d in table.entries() {
        if d.birth() > scale {
            count += 1;
        } else {
            excluded_dimension += d.multiplicity();
        }
    }
    GammaNCounts {
        excluded_dimension,
        count,
        bookkeeping_sum: gamma_n_bookkeeping(m, scale),
    }
}

/// The closed-form sum for `Σ_{λ∉Γ_N} d_λ`; for `N ≥ m` every eigenvalue
/// is excluded.
pub fn gamma_n_bookkeeping(m: usize, scale: usize) -> usize {
    if m == 0 {
        return 0;
    }
    if scale >= m {
        return (ipow(3, m + 1) as usize - 3) / 2;
    }
    let p2 = |e: usize| ipow(2, e) as usize;
    let p3 = |e: usize| ipow(3, e) as usize;
    let mut total = p2(m - 1);
    for j in 1..=scale {
        total += p2(m - j) * (p3(j - 1) + 3) / 2;
    }
    for j in 2..=scale {
        total += p2(m - j - 1) * (p3(j) - 3) / 2;
    }
    total
}

/// Riemann points `s_1, …, s_d` as vertex indices of `V_r`, returned with `r`.
/// With `s` the largest scale having `3^s ≤ d`, every `s`-cell receives
/// `⌊d/3^s⌋` points and `d mod 3^s` cells one more, taken in digit-reversed
/// address order so the extras spread across the gasket; a cell receiving
/// one point uses its own representative, a cell receiving `p > 1` points the
/// representatives of its first `p` children. The
/// representative of a cell is its vertex of `V_r`, `r = s + 2`, nearest the
/// centroid (least index on ties), so distinct cells never share one.
pub fn riemann_points<T: Real>(gasket: &Gasket<T>, d: usize) -> Result<(usize, Vec<usize>)> {
    if d == 0 {
        return Err(Error::EmptyRange);
    }
    let mut s = 0;
    while ipow(3, s + 1) as usize <= d {
        s += 1;
    }
    let level = s + 2;
    gasket.check_level(level)?;
    let base = d / ipow(3, s) as usize;
    let extra = d % ipow(3, s) as usize;
    let own = cell_representatives(gasket, level, s);
    let children = cell_representatives(gasket, level, s + 1);
    let mut out = Vec::with_capacity(d);
    for cell in 0..ipow(3, s) as usize {
        match base + usize::from(digit_reversal(cell, s) < extra) {
            1 => out.push(own[cell]),
            p => out.extend((0..p).map(|c| children[3 * cell + c])),
        }
    }
    Ok((level, out))
}

/// `cell` with its `digits` base-3 digits read backwards.
fn digit_reversal(mut cell: usize, digits: usize) -> usize {
    let mut out = 0;
    for _ in 0..digits {
        out = 3 * out + cell % 3;
        cell /= 3;
    }
    out
}

/// Vertex of `V_{m_q}` nearest each `scale`-cell's centroid.
fn cell_representatives<T: Real>(gasket: &Gasket<T>, m_q: usize, scale: usize) -> Vec<usize> {
    let n = ipow(3, scale) as usize;
    let shrink = ipow(3, m_q - scale) as usize;
    let coarse = gasket.cells(scale);
    let centroid: Vec<[T; 2]> = coarse
        .iter()
        .map(|c| {
            let third = T::lit(3.0);
            let [x, y] = c.iter().fold([T::zero(), T::zero()], |acc, &v| {
                let p = gasket.position(v);
                [acc[0] + p[0], acc[1] + p[1]]
            });
            [x / third, y / third]
        })
        .collect();
    let mut best: Vec<Option<(T, usize)>> = vec![None; n];
    for (rank, corners) in gasket.cells(m_q).iter().enumerate() {
        let owner = rank / shrink;
        for &v in corners {
            let p = gasket.position(v);
            let c = centroid[owner];
            let dist = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
            let better = match best[owner] {
                None => true,
                Some((bd, bv)) => dist < bd || (dist == bd && v < bv),
            };
            if better {
                best[owner] = Some((dist, v));
            }
        }
    }
    best.into_iter()
        .map(|b| b.expect("every cell has corners").1)
        .collect()
}

/// Spectral average, Riemann average and reference integral of `F` for one
/// compressed operator.
#[derive(Debug, Clone, Serialize)]
pub struct EquidistributionRecord {
    pub mode: SweepMode,
    pub index: usize,
    pub d: usize,
    pub functional: String,
    /// `(1/d) Σ F(σ_k)`.
    pub spectral: f64,
    /// `(1/d) Σ F(f(s_k))`.
    pub riemann: f64,
    /// `∫ F(f) dμ`.
    pub integral: f64,
    pub riemann_gap: f64,
    pub integral_gap: f64,
}

pub fn equidistribution_compare<T: Real>(
    gasket: &Gasket<T>,
    op: &CompressedOperator<T>,
    f: &dyn GasketFunction<T>,
    functional: &dyn Fn(T) -> T,
) -> Result<(T, T, T)> {
    let spectral = op.spectral_functional(functional)?;
    let (level, points) = riemann_points(gasket, op.dimension())?;
    let sampled = f.sample(gasket, level)?;
    let values: Vec<T> = points.iter().map(|&v| sampled.values()[v]).collect();
    let riemann = mean_of(&values, functional)?;
    Ok((spectral, riemann, (spectral - riemann).abs()))
}

/// Runs sweeps against one gasket and a cache of dense solves.
#[derive(Debug)]
pub struct SzegoRunner<T: Real> {
    factory: EigenspaceFactory<T>,
    sample_override: Option<usize>,
}

/// Inputs shared by every point of a sweep.
pub struct SweepSpec<'a, T: Real> {
    pub f: &'a dyn GasketFunction<T>,
    /// Set when `f` is a simple function, to check the block structure.
    pub simple: Option<&'a SimpleFunction<T>>,
    pub scale: usize,
}

impl<T: Real> SzegoRunner<T> {
    /// Gasket built to `SAMPLE_LEVEL_CAP + 1` for the reference integrals.
    pub fn new() -> Self {
        Self::with_levels(SAMPLE_LEVEL_CAP + 1)
    }

    pub fn with_levels(max_level: usize) -> Self {
        Self::with_tolerances(max_level, Tolerances::default())
    }

    pub fn with_tolerances(max_level: usize, tolerances: Tolerances) -> Self {
        Self {
            factory: EigenspaceFactory::new(max_level).with_tolerances(tolerances),
            sample_override: None,
        }
    }

    /// Fixes `m_q` for every point instead of the default policy.
    pub fn set_sample_level(&mut self, m_q: Option<usize>) {
        self.sample_override = m_q;
    }

    pub fn gasket(&self) -> &Gasket<T> {
        self.factory.gasket()
    }

    pub fn factory(&mut self) -> &mut EigenspaceFactory<T> {
        &mut self.factory
    }

    fn sample_level(&self, level: usize) -> Result<usize> {
        let m_q = self
            .sample_override
            .unwrap_or_else(|| default_sample_level(level));
        if m_q < level {
            return Err(Error::LevelTooSmall {
                min: level,
                got: m_q,
            });
        }
        Ok(m_q)
    }

    /// Reference integrals are taken one level finer than `m_q` when available.
    fn reference_level(&self, m_q: usize) -> usize {
        (m_q + 1).min(self.gasket().max_level())
    }

    /// Localized basis of the lowest eigenvalue born at `j`.
    pub fn single_basis(
        &mut self,
        series: Series,
        birth: usize,
        scale: usize,
        m_q: usize,
    ) -> Result<EigenspaceBasis<T>> {
        let d = EigenvalueDescriptor::lowest(series, birth, birth)?;
        let raw = self.factory.eigenspace_vectors(&d, m_q)?;
        let tol = self.factory.tolerances().nullspace;
        localize_basis_with(&raw, self.factory.gasket(), scale, tol)
    }

    /// Orthonormal bases of every eigenspace in the level-`m` table.
    pub fn cutoff_bases(
        &mut self,
        m: usize,
        m_q: usize,
    ) -> Result<(SpectrumTable<T>, Vec<EigenspaceBasis<T>>)> {
        let table = enumerate_spectrum::<T>(m)?;
        let bases = table
            .entries()
            .iter()
            .map(|d| {
                let raw = self.factory.eigenspace_vectors(d, m_q)?;
                orthonormalize(&raw)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((table, bases))
    }

    fn record(
        &self,
        mode: SweepMode,
        index: usize,
        spec: &SweepSpec<'_, T>,
        m_q: usize,
        op: &CompressedOperator<T>,
        start: Instant,
    ) -> Result<SzegoExperimentRecord> {
        let gasket = self.gasket();
        let log_det = op.log_det()?;
        let eigen = op.log_det_eigen()?;
        let d = op.dimension();
        let logdet_over_d = log_det / T::from_count(d);
        let integral = spec
            .f
            .integral(gasket, self.reference_level(m_q), &|x: T| x.ln())?;
        let scale_ref = log_det.abs().max(T::one());
        Ok(SzegoExperimentRecord {
            mode,
            index,
            scale: spec.scale,
            sample_level: m_q,
            d,
            logdet_over_d: logdet_over_d.to_f64_lossy(),
            integral: integral.to_f64_lossy(),
            error: (logdet_over_d - integral).abs().to_f64_lossy(),
            fitted_beta: None,
            runtime_s: start.elapsed().as_secs_f64(),
            eigen_gap: ((log_det - eigen).abs() / scale_ref).to_f64_lossy(),
            nonlocalized: None,
            error_bound: None,
            structure_coupling: None,
            block_consistency: None,
            cross_block_max: None,
            gamma_n: None,
        })
    }

    /// `(1/d_j) log det P_j[f]P_j` against `∫ log f dμ` for `j` in `births`.
    pub fn single_sweep(
        &mut self,
        spec: &SweepSpec<'_, T>,
        series: Series,
        births: RangeInclusive<usize>,
    ) -> Result<SweepOutcome> {
        let mut records = Vec::new();
        let mut warnings = Vec::new();
        for j in births {
            if j <= spec.scale || j < series.min_birth() {
                warnings.push(format!(
                    "skipped j = {j}: requires {} ≤ j and N < j",
                    series.min_birth()
                ));
                continue;
            }
            let start = Instant::now();
            let m_q = self.sample_level(j)?;
            let basis = self.single_basis(series, j, spec.scale, m_q)?;
            let sampled = spec.f.sample(self.gasket(), m_q)?;
            if sampled.min() <= T::zero() {
                return Err(Error::NonPositiveFunction(sampled.min().to_f64_lossy()));
            }
            let op = assemble_compressed(&basis, &sampled)?;
            let mut rec = self.record(SweepMode::Single, j, spec, m_q, &op, start)?;
            let alpha = basis.nonlocalized_count();
            let log_l1 = spec
                .f
                .integral(self.gasket(), self.reference_level(m_q), &|x: T| {
                    x.ln().abs()
                })?;
            let sup = sampled.max().max(-sampled.min());
            rec.nonlocalized = Some(alpha);
            rec.error_bound =
                Some(alpha as f64 / rec.d as f64 * (log_l1.to_f64_lossy() + sup.to_f64_lossy()));
            if let Some(simple) = spec.simple {
                let s = block_structure(&op.blocks[0], &basis, simple)?;
                rec.structure_coupling = Some(s.coupling.max(s.localized_deviation).to_f64_lossy());
            }
            rec.runtime_s = start.elapsed().as_secs_f64();
            records.push(rec);
        }
        Ok(SweepOutcome::finish(records, warnings))
    }

    /// `(1/d_Λ) log det M_Λ` against `∫ log f dμ`, with `Λ` the eigenvalues of
    /// the level-`m` table, for `m` in `levels`.
    pub fn cutoff_sweep(
        &mut self,
        spec: &SweepSpec<'_, T>,
        levels: RangeInclusive<usize>,
    ) -> Result<SweepOutcome> {
        let mut records = Vec::new();
        for m in levels {
            let start = Instant::now();
            let m_q = self.sample_level(m)?;
            let (table, bases) = self.cutoff_bases(m, m_q)?;
            let sampled = spec.f.sample(self.gasket(), m_q)?;
            if sampled.min() <= T::zero() {
                return Err(Error::NonPositiveFunction(sampled.min().to_f64_lossy()));
            }
            let op = assemble_cutoff(&bases, &sampled)?;
            let mut rec = self.record(SweepMode::Cutoff, m, spec, m_q, &op, start)?;
            let blocks = op.log_det()?;
            let full = op.log_det_full()?;
            rec.block_consistency =
                Some(((full - blocks).abs() / blocks.abs().max(T::one())).to_f64_lossy());
            rec.cross_block_max = Some(cross_block_max(&bases, &sampled)?.to_f64_lossy());
            rec.gamma_n = Some(gamma_n_counts(&table, spec.scale));
            rec.runtime_s = start.elapsed().as_secs_f64();
            records.push(rec);
        }
        Ok(SweepOutcome::finish(records, Vec::new()))
    }

    /// Equidistribution data for the single-eigenspace operators `M_j`.
    pub fn single_equidistribution(
        &mut self,
        spec: &SweepSpec<'_, T>,
        series: Series,
        births: RangeInclusive<usize>,
        functional: &dyn Fn(T) -> T,
        label: &str,
    ) -> Result<Vec<EquidistributionRecord>> {
        let mut out = Vec::new();
        for j in births {
            if j <= spec.scale || j < series.min_birth() {
                continue;
            }
            let m_q = self.sample_level(j)?;
            let basis = self.single_basis(series, j, spec.scale, m_q)?;
            let sampled = spec.f.sample(self.gasket(), m_q)?;
            let op = assemble_compressed(&basis, &sampled)?;
            out.push(self.equidist_record(
                SweepMode::Single,
                j,
                spec,
                &op,
                &sampled,
                functional,
                label,
            )?);
        }
        Ok(out)
    }

    /// Equidistribution data for the cutoff operators `M_Λ`.
    pub fn cutoff_equidistribution(
        &mut self,
        spec: &SweepSpec<'_, T>,
        levels: RangeInclusive<usize>,
        functional: &dyn Fn(T) -> T,
        label: &str,
    ) -> Result<Vec<EquidistributionRecord>> {
        let mut out = Vec::new();
        for m in levels {
            let m_q = self.sample_level(m)?;
            let (_, bases) = self.cutoff_bases(m, m_q)?;
            let sampled = spec.f.sample(self.gasket(), m_q)?;
            let op = assemble_cutoff(&bases, &sampled)?;
            out.push(self.equidist_record(
                SweepMode::Cutoff,
                m,
                spec,
                &op,
                &sampled,
                functional,
                label,
            )?);
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn equidist_record(
        &self,
        mode: SweepMode,
        index: usize,
        spec: &SweepSpec<'_, T>,
        op: &CompressedOperator<T>,
        sampled: &SampledFunction<T>,
        functional: &dyn Fn(T) -> T,
        label: &str,
    ) -> Result<EquidistributionRecord> {
        let (spectral, riemann, gap) =
            equidistribution_compare(self.gasket(), op, spec.f, functional)?;
        let integral = spec.f.integral(
            self.gasket(),
            self.reference_level(sampled.level()),
            functional,
        )?;
        Ok(EquidistributionRecord {
            mode,
            index,
            d: op.dimension(),
            functional: label.to_string(),
            spectral: spectral.to_f64_lossy(),
            riemann: riemann.to_f64_lossy(),
            integral: integral.to_f64_lossy(),
            riemann_gap: gap.to_f64_lossy(),
            integral_gap: (spectral - integral).abs().to_f64_lossy(),
        })
    }
}

impl<T: Real> Default for SzegoRunner<T> {
    fn default() -> Self {
        Self::new()
    }
}

pub fn write_equidistribution_csv<W: Write>(
    records: &[EquidistributionRecord],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "mode",
        "index",
        "d",
        "functional",
        "spectral",
        "riemann",
        "integral",
        "riemann_gap",
        "integral_gap",
    ])?;
    for r in records {
        w.write_record([
            r.mode.label().to_string(),
            r.index.to_string(),
            r.d.to_string(),
            r.functional.clone(),
            r.spectral.to_string(),
            r.riemann.to_string(),
            r.integral.to_string(),
            r.riemann_gap.to_string(),
            r.integral_gap.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Cells at `scale` in address order with their ranks, for labelling output.
pub fn cell_labels(scale: usize) -> Vec<String> {
    enumerate_cells(scale)
        .iter()
        .map(|c| c.to_string())
        .collect()
}

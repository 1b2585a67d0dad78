//! Spectral analysis of the Dirichlet Laplacian on the Sierpinski gasket.
//!
//! Everything numeric is generic over [`Real`]; the aliases below fix `f64`.

pub mod decimation;
pub mod eigenbasis;
pub mod error;
pub mod experiments;
pub mod functions;
pub mod laplacian;
pub mod operator;
pub mod resistance;
pub mod scalar;
pub mod topology;

pub use decimation::{
    enumerate_spectrum, extend_columns, extend_eigenfunction, gamma_step, renormalized_lambda,
    EigenvalueDescriptor, Series, Sign, SpectrumTable, LAMBDA_DEPTH,
};
pub use eigenbasis::{
    localize_basis, localize_basis_with, orthonormality_check, orthonormalize, BasisTag,
    EigenspaceBasis, EigenspaceFactory, RawBasis, Tolerances,
};
pub use error::{Error, Result};
pub use experiments::{
    beta, beta_tilde, fit_rate, gamma_n_counts, riemann_points, EquidistributionRecord, RateFit,
    SweepMode, SweepOutcome, SweepSpec, SzegoExperimentRecord, SzegoRunner,
};
pub use functions::{
    Constant, FnFunction, GasketFunction, HarmonicFunction, SampledFunction, SimpleFunction,
};
pub use laplacian::{assemble_dirichlet_laplacian, DenseSpectrum, LaplacianMatrix, LevelGraph};
pub use operator::{assemble_compressed, assemble_cutoff, cholesky_log_det, CompressedOperator};
pub use resistance::{effective_resistance, holder_seminorm, ResistanceComputer};
pub use scalar::Real;
pub use topology::{quadrature, CellAddress, Gasket, QuadratureScheme, VertexId};

pub type Gasket64 = Gasket<f64>;
pub type Descriptor64 = EigenvalueDescriptor<f64>;
pub type SpectrumTable64 = SpectrumTable<f64>;
pub type Laplacian64 = LaplacianMatrix<f64>;
pub type EigenspaceBasis64 = EigenspaceBasis<f64>;
pub type EigenspaceFactory64 = EigenspaceFactory<f64>;
pub type SampledFunction64 = SampledFunction<f64>;
pub type SimpleFunction64 = SimpleFunction<f64>;
pub type CompressedOperator64 = CompressedOperator<f64>;
pub type SzegoRunner64 = SzegoRunner<f64>;

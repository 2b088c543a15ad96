//! Spectral geometry on the path space of a finite higher-rank graph.
//!
//! A rank-`k` graph with finitely many vertices is described here by `k`
//! pairwise-commuting non-negative integer matrices `A_1, ..., A_k` over a
//! common vertex set; `A_i(v, w)` counts the colour-`i` edges with range `v`
//! and source `w`.  The infinite path space of such a graph is homeomorphic to
//! the path space of a stationary layered diagram whose levels cycle through
//! the colours `1, 2, ..., k`, and that identification is what makes every
//! construction in this crate finitely computable:
//!
//! * [`kgraph`] — the graph type itself, structural validation, the common
//!   Perron eigenvector of the commuting family, and the Cesàro limits of the
//!   normalised powers of `A = A_1 * ... * A_k`;
//! * [`bratteli`] — finite and eventually-periodic infinite paths on the
//!   layered diagram, lexicographic enumeration, and closed-form path counts;
//! * [`measure`] — the per-level weight, the ultrametric it induces on the
//!   infinite path space, and the natural probability measure on cylinders;
//! * [`zeta`] — the associated zeta function, its abscissa of convergence,
//!   Dixmier-trace functionals (closed form and numeric), and Hausdorff
//!   dimension estimates;
//! * [`harmonic`] — step functions on cylinder sets, wavelet bases of the
//!   square-integrable functions on the path space, and a Laplace-type
//!   operator whose eigenspaces refine the wavelet subspaces;
//! * [`dirac`] — a Dirac-type operator built from nested conditional
//!   expectations, its spectrum matched against the wavelet layers,
//!   commutator norms with prefix shifts, and checks of the generator
//!   relations of the path-space algebra.
//!
//! All operations are deterministic, single-threaded, and work at "desk
//! scale": a handful of vertices and cylinder depths small enough that dense
//! linear algebra verifies the structure theorems to tight tolerances.

pub mod bratteli;
pub mod dirac;
pub mod error;
pub mod harmonic;
pub mod kgraph;
pub mod linalg;
pub mod measure;
pub mod zeta;

pub use bratteli::{
    concat, count_paths, degree, enumerate_paths, BrattEdge, CommonPrefix, FinitePath,
    LazyInfinitePath, PathTable, DEFAULT_MAX_PATHS,
};
pub use dirac::{
    ck_check, commutator_norm, dirac_apply, dirac_eigen_report, project_r, AlphaSequence, CkReport,
    DiracEigenReport, OperatorAtDepth,
};
pub use error::KgsError;
pub use harmonic::{
    apply_s, apply_s_star, eigenspace_basis, inner, j_wavelet_basis, laplacian_apply,
    mother_wavelets, refined_wavelet_basis, verify_refinement, wavelet_basis, EigenspaceId,
    RefinementReport, StepFunction, SubspaceBasis,
};
pub use kgraph::{validate, KGraph, SpectralData, ValidationReport};
pub use linalg::IntMat;
pub use measure::{CylinderMeasureTable, WeightContext};
pub use zeta::{
    abscissa_estimate, dixmier_closed, dixmier_numeric, hausdorff_dim_estimate, hausdorff_sum,
    zeta_eval, DixmierResult, SeriesClass, ZetaEvaluation,
};

//! Discrete balayage: sweeping measures onto point subsets as orthogonal
//! projection in a kernel-energy metric.
//!
//! The crate discretizes potential theory at desk scale: a finite point
//! set with quadrature weights plays the locally compact space, a
//! strictly positive-definite gram matrix plays the kernel, and the
//! swept measure `μ^A` is the projection of `μ` onto the convex cone of
//! nonnegative measures supported on `A`. On top of the projection sit
//! capacities and equilibrium measures, test-family certification and
//! convergence checks, exhaustion experiments, and independent oracles
//! (exhaustive enumeration, the classical sphere mass law).
//!
//! Everything numeric is generic over the [`Scalar`] floating-point
//! type; the `*64` aliases below fix `f64` for the common case.

pub mod balayage;
pub mod capacity;
pub mod convergence;
mod error;
pub mod geometry;
pub mod json;
pub mod kernel;
mod linalg;
pub mod oracle;
mod scalar;
mod solver;
mod special;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{Cholesky, NotPositiveDefinite, SymMatrix};
pub use scalar::Scalar;
pub use solver::{KktResiduals, SolveMethod, SolveOptions};

pub use balayage::{
    certify, outer_sweep, sweep, sweep_signed, sweep_with_warm, symmetry_residual,
    BalayageResult, CertifyVerdict, DominationReport, SignedBalayage, CERTIFICATION_REL_TOL,
    DOMINATION_REL_TOL,
};
pub use capacity::{capacity, equilibrium, is_negligible, CapacityResult};
pub use convergence::{
    build_default_family, contraction_check, exhaust, exhaustion_masks, family_spans,
    measure_equality_check, vague_convergence_check, ContractionCheck, EqualityReport,
    ExhaustionReport, ExhaustionStage, TestFamily, VagueConvergenceReport,
};
pub use geometry::{
    build_grid, build_sphere, hahn_jordan, mask_from_predicate, DiscreteMeasure, DiscreteSpace,
    RegionMask, SignedMeasure, SpaceId,
};
pub use kernel::{
    assemble, assemble_with, eval_kernel, DiagRule, EnergyForm, KernelFamily, KernelSpec,
    MAX_DENSE_POINTS,
};
pub use oracle::{
    brute_sweep, compare, newtonian_sphere_mass, random_instance, sphere_mass_refinement,
    BruteInfo, InstanceParams, OracleReport, OracleValue, RandomInstance,
};

/// `f64` aliases for the main types.
pub type DiscreteSpace64 = DiscreteSpace<f64>;
pub type DiscreteMeasure64 = DiscreteMeasure<f64>;
pub type SignedMeasure64 = SignedMeasure<f64>;
pub type KernelSpec64 = KernelSpec<f64>;
pub type EnergyForm64 = EnergyForm<f64>;
pub type SolveOptions64 = SolveOptions<f64>;
pub type BalayageResult64 = BalayageResult<f64>;
pub type CapacityResult64 = CapacityResult<f64>;
pub type TestFamily64 = TestFamily<f64>;

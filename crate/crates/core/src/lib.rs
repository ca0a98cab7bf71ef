//! Numerical laboratory for Kostlan random polynomial systems on spheres:
//! harmonic decomposition, jets and singular-locus residuals, level-set
//! topology on S^1 and S^2, and reproducible Monte Carlo experiments.

pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod harmonic;
pub mod jet;
pub mod linalg;
pub mod mesh;
pub mod monomial;
pub mod poly;
pub mod stream;
pub mod topology;

pub use error::{Error, Result};
pub use experiment::{
    content_hash, run_betti_tail, run_inequality_suite, run_low_degree_experiment, BettiReport,
    CellSummary, ExperimentConfig, InequalityConfig, InequalityReport, LowDegreeReport, Manifest,
    RegimeSchedule, TailEstimate, TrialRecord,
};
pub use harmonic::{
    decompose, dim_harmonic, sobolev_norm, truncate, truncate_system, zonal_check, zonal_expected,
    HarmonicDecomposition, SphereComponent, SphereFunction,
};
pub use jet::{
    cr_norm_estimate, discriminant_distance, jet_at, singular_residual, stability_margin,
    CrNormEstimate, DiscriminantEstimate, JetPlan, JetValue, SingularityType, SphereMapRef,
    StabilityMargin,
};
pub use mesh::SphereMesh;
pub use topology::{
    compare_loci, critical_points_s2, curve_components_s2, zeros_on_circle, CompareConfig,
    CriticalPoint, CriticalPointSet, CurveTopology, IsotopyVerdict, LocusInvariants, Verdict,
};
pub use poly::{
    bw_dist, bw_inner, bw_norm, l2_inner, l2_norm, monomial_sphere_moment, random_sphere_point,
    sample_kostlan, sample_kostlan_system, sphere_volume, HomogeneousPoly, PolySystem,
    SphericalPoint,
};

//! Classical and quantum integrable structure of the three-dimensional
//! isotropic harmonic oscillator separated in prolate spheroidal coordinates.
//!
//! The oscillator `H = |p|²/2 + ω²|r|²/2` is superintegrable. Separating it
//! in prolate spheroidal coordinates with focal half-distance `a` singles out
//! the commuting triple `(H, L_z, G)`, where `G = L² − 2a²(A_x + A_y)` is a
//! quartic separation constant. This crate computes everything that triple
//! carries:
//!
//! - [`model`] — conserved quantities, analytic gradients, Poisson brackets,
//!   and a verifying orbit integrator;
//! - [`separation`] — the separation polynomial `P(s)`, its roots and
//!   discriminant, critical loci, region classification, caustics, and
//!   bifurcation-diagram slices;
//! - [`reduction`] — the singularly reduced one-degree-of-freedom system on
//!   the Casimir surface, the admissible range of `G`, the Hamiltonian Hopf
//!   threshold, and symplectic volumes with quantum state counts;
//! - [`semiclassics`] — action integrals by quadrature and the EBK
//!   (Bohr–Sommerfeld) joint spectrum;
//! - [`spectrum`] — the exact quantum joint spectrum per `(n, m)` subspace
//!   from tridiagonal matrices, cross-checked by a three-term recurrence;
//! - [`monodromy`] — detection of the lattice defect in the joint spectrum by
//!   transporting an elementary cell around the isolated critical value.
//!
//! The narrative guide lives under [`guide`]; its code snippets double as
//! doc-tests so the book and the library cannot drift apart.

pub mod model;
pub mod monodromy;
pub mod reduction;
pub mod semiclassics;
pub mod separation;
pub mod spectrum;
pub(crate) mod tol;

pub use model::{
    eval_integrals, integrate_orbit, poisson_bracket, IntegralId, MotionValues, NineIntegrals,
    OscillatorParams, PhasePoint, ReducedInvariants, Trajectory,
};
pub use monodromy::{monodromy_report, transport_cell, LatticeLoop, MonodromyReport, MonodromyResult};
pub use reduction::{
    g_range, hopf_and_singular_fiber, reduced_slice, symplectic_volume, total_states, GRange,
    HopfVerdict, ReducedSlice, VolumeReport,
};
pub use semiclassics::{
    action_integrals, action_lz_derivative_jump, ebk_point, ebk_spectrum, ActionTriple, EbkOptions,
    EbkPoint, EbkState,
};
pub use separation::{
    caustic, classify, critical_loci, discriminant, energy_slice, polynomial_roots,
    separation_polynomial, BifurcationSlice, CausticData, CausticKind, CriticalLoci, RegionLabel,
    RootSet, SeparationPolynomial,
};
pub use spectrum::{
    build_g_matrix, eigen_tridiagonal, heun_spectrum, joint_spectrum, limit_joint_spectrum,
    subspace_basis, FockState, HeunParity, JointSpectrum, LimitLattice, LimitMode, MatrixMethod,
    SubspaceBasis, SymmetricTridiagonal,
};

/// Errors produced by this crate.
///
/// The three variants distinguish bad arguments, values outside the region
/// where a quantity is defined, and genuine numerical breakdown. Command-line
/// front ends map them to distinct exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed or out-of-contract input (nonpositive step sizes, negative
    /// quantum numbers, non-finite coordinates, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Structurally valid input describing motion that does not exist
    /// (inadmissible `(E, l_z, g)`, `|l_z| > E/ω`, ...).
    #[error("outside admissible domain: {0}")]
    Domain(String),
    /// A numerical procedure failed to converge or lost a solution.
    #[error("numerical failure: {0}")]
    Numerics(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// The book chapters, included verbatim so that `cargo test` runs every
/// code snippet shown in the guide.
pub mod guide {
    #[doc = include_str!("../../../book/src/overview.md")]
    pub mod overview {}
    #[doc = include_str!("../../../book/src/classical-integrals.md")]
    pub mod classical_integrals {}
    #[doc = include_str!("../../../book/src/separation-and-bifurcation.md")]
    pub mod separation_and_bifurcation {}
    #[doc = include_str!("../../../book/src/reduced-phase-space.md")]
    pub mod reduced_phase_space {}
    #[doc = include_str!("../../../book/src/actions-and-ebk.md")]
    pub mod actions_and_ebk {}
    #[doc = include_str!("../../../book/src/quantum-spectrum.md")]
    pub mod quantum_spectrum {}
    #[doc = include_str!("../../../book/src/monodromy.md")]
    pub mod monodromy {}
}

//! Numerical engine for k-contact Lagrangian field theories with dissipation.
//!
//! A [`LagrangianModel`] is a density `L(qⁱ, vⁱ_α, s^α)` on `⊕ᵏTQ × ℝᵏ`.
//! From its exact second-order jet the crate derives the energy, contact forms,
//! Legendre map and Reeb fields ([`contact`]), assembles the Euler–Lagrange
//! field equations ([`dynamics`]), inverts the Legendre map ([`hamiltonian`]),
//! checks symmetries and dissipation laws ([`symmetry`]), builds Lagrangians for
//! prescribed linear PDEs ([`inverse`]) and integrates the equations on a grid
//! ([`sim`]).

pub mod contact;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod hyperdual;
pub mod inverse;
pub mod jet;
pub mod models;
pub mod sim;
pub mod symmetry;

pub use contact::{ContactCoeffs, HessianW, ReebFields, ReebReport, DEFAULT_RANK_TOL};
pub use dynamics::{ElResidual, SecondJet, SopdeData, SopdeReport};
pub use error::{Error, Result};
pub use hamiltonian::{HamiltonianJet, HdwResidual, MomentumField, MomentumPoint};
pub use hyperdual::HyperDual;
pub use inverse::{GTerm, PdeConfig, PdeSpec};
pub use jet::{evaluate_jet, fd_check, Density, Jet2, LagrangianModel, PhasePoint};
pub use models::{ModelSpec, Monomial, Poly2, StringParams};
pub use sim::{Axis, Boundary, Grid, InitialCondition, SimState, SimTrace};
pub use symmetry::{DissipatedQuantity, SymmetryField, SymmetryReport};

//! One-dimensional phase-space quantum mechanics.
//!
//! The pipeline runs from a wavefunction `ψ(x)` to the characteristic
//! amplitude `ξ(x, x')` on the internal space, through the phase-space
//! probability amplitude `φ(x, p)` and density `F(x, p)`, to moments, the
//! Wigner–Moyal infinitesimal transformation, and the time-independent
//! Schrödinger eigenproblem. Every stage can be cross-checked against an
//! independent route to the same quantity.
//!
//! Natural units (`ħ = 1` by default) are used everywhere except
//! [`constants`], which works in SI units.

pub mod constants;
pub mod error;
pub mod exec;
pub mod grid;
pub mod internal;
pub mod io;
pub mod moments;
pub mod phase_space;
pub mod plot;
pub mod run;
pub mod schrodinger;
pub mod states;
pub mod sum;
pub mod verify;

pub use num_complex::Complex64;

pub use error::{ConfigError, Error, Result};
pub use exec::Execution;
pub use grid::{ComplexField1D, Grid1D, MomentumField, MomentumGrid, SpectralPlan};
pub use internal::{CharacteristicAmplitude, Convention, DensityKernel};
pub use moments::{MomentPath, MomentRequest, MomentResult, OperatorOrder};
pub use phase_space::{Marginals, Observable, PhaseSpaceDensity, ProbabilityAmplitudePS};
pub use schrodinger::{EigenSolution, HamiltonianSpec, Potential, TridiagonalOperator};
pub use states::{StateSpec, WaveFunction};

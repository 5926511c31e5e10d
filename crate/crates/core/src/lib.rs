//! Helmholtz decomposition of vector fields sampled on uniform grids in any
//! dimension `n >= 2`.
//!
//! A field `f` is split as `f = g + r` with `g = grad G` (rotation free) and
//! `r = ROT R` (source free), where the potentials are Newton potentials of
//! the source density `div f` and the rotation density `ROT̄ f`.

pub mod decompose;
pub mod error;
pub mod fixtures;
pub mod grid;
pub mod io;
pub mod levi_civita;
pub mod newton;
pub mod ops;
pub mod verify;

pub use decompose::{decompose, decompose_classical_3d, DecompositionResult};
pub use error::{Error, Result};
pub use fixtures::{make_fixture, Fixture, FixtureKind};
pub use grid::{
    pair_count, pair_position, pairs, AntisymMatrixField, DensityBundle, GridSpec, PotentialBundle,
    Region, ScalarField, VectorField,
};
pub use newton::{
    newton_apply, newton_apply_bundle, Backend, NewtonOperator, QuadratureConfig, SelfCell,
};

//! The decomposition pipeline `f → φ = D̄f → F = 𝒩φ → (g, r) = (grad G, ROT R)`,
//! and the classical three-dimensional path used as a cross-check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AntisymMatrixField, DensityBundle, GridSpec, Region, ScalarField, VectorField};
use crate::levi_civita::{curl_bar, curl_of_tensor, DualTensorField};
use crate::newton::{apply_bundle_with, NewtonOperator, QuadratureConfig};
use crate::ops::{density_derivative, divergence, gradient, rot, rot_bar};

/// Nodes excluded from each face when residuals are reported.
pub const REPORT_MARGIN: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Norms {
    /// Cell-volume weighted L² norm.
    pub l2: f64,
    pub max: f64,
}

impl Norms {
    fn of_vector(v: &VectorField, region: Region) -> Self {
        Norms {
            l2: v.l2_norm(region),
            max: v.max_abs(region),
        }
    }

    fn of_scalar(s: &ScalarField, region: Region) -> Self {
        Norms {
            l2: s.l2_norm(region),
            max: s.max_abs(region),
        }
    }

    fn of_antisym(m: &AntisymMatrixField, region: Region) -> Self {
        let w = m.grid().cell_volume();
        let ss: f64 = m.stored().iter().map(|c| c.sum_squares(region)).sum();
        Norms {
            l2: (ss * w).sqrt(),
            max: m.max_abs(region),
        }
    }
}

/// `num / den`, with `0 / 0 = 0`.
pub fn relative(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Norms of the input, both parts and the identities they must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NormSet {
    pub field: Norms,
    pub gradient: Norms,
    pub rotation: Norms,
    /// `f − g − r`
    pub residual: Norms,
    /// `div r`
    pub divergence_of_rotation: Norms,
    /// `ROT̄ g`
    pub rotation_of_gradient: Norms,
}

impl NormSet {
    fn measure(
        f: &VectorField,
        g: &VectorField,
        r: &VectorField,
        residual: &VectorField,
        region: Region,
    ) -> Self {
        NormSet {
            field: Norms::of_vector(f, region),
            gradient: Norms::of_vector(g, region),
            rotation: Norms::of_vector(r, region),
            residual: Norms::of_vector(residual, region),
            divergence_of_rotation: Norms::of_scalar(&divergence(r), region),
            rotation_of_gradient: Norms::of_antisym(&rot_bar(g), region),
        }
    }

    /// `‖f − g − r‖₂ / ‖f‖₂`
    pub fn relative_residual(&self) -> f64 {
        relative(self.residual.l2, self.field.l2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub margin: usize,
    pub interior: NormSet,
    pub whole: NormSet,
}

impl ResidualReport {
    pub fn new(f: &VectorField, g: &VectorField, r: &VectorField, residual: &VectorField) -> Self {
        ResidualReport {
            margin: REPORT_MARGIN,
            interior: NormSet::measure(f, g, r, residual, Region::Interior(REPORT_MARGIN)),
            whole: NormSet::measure(f, g, r, residual, Region::All),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DecompositionResult {
    /// `g = grad G`
    pub gradient: VectorField,
    /// `r = ROT R`, or `f − g` when the rotation potential was skipped.
    pub rotation: VectorField,
    /// `G = 𝒩γ`
    pub source_potential: ScalarField,
    /// `R = 𝒩ρ`; `None` when skipped.
    pub rotation_potential: Option<AntisymMatrixField>,
    /// `φ = {γ, ρ}`
    pub density: DensityBundle,
    /// `f − g − r` on the whole grid.
    pub residual: VectorField,
    pub report: ResidualReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RotationMode {
    /// Compute `R = 𝒩ρ` and `r = ROT R`.
    #[default]
    Full,
    /// Take `r = f − g` and leave `R` out.
    Skip,
}

fn check_input(f: &VectorField) -> Result<()> {
    if !f.is_finite() {
        return Err(Error::NonFinite(
            "input field contains NaN or infinity".into(),
        ));
    }
    Ok(())
}

pub fn decompose(f: &VectorField, cfg: &QuadratureConfig) -> Result<DecompositionResult> {
    let op = NewtonOperator::new(f.grid(), *cfg)?;
    decompose_with(&op, f, RotationMode::Full)
}

/// Decomposition with a prebuilt operator, so that one kernel table serves
/// several fields.
pub fn decompose_with(
    op: &NewtonOperator,
    f: &VectorField,
    mode: RotationMode,
) -> Result<DecompositionResult> {
    check_input(f)?;
    if !f.grid().same_geometry(op.grid()) {
        return Err(Error::GridMismatch);
    }
    let density = density_derivative(f);
    let (source_potential, rotation_potential) = match mode {
        RotationMode::Full => {
            let pot = apply_bundle_with(op, &density)?;
            (pot.source, Some(pot.rotation))
        }
        RotationMode::Skip => (op.apply(&density.gamma)?, None),
    };
    let g = gradient(&source_potential);
    let r = match &rotation_potential {
        Some(rp) => rot(rp),
        None => f.sub(&g)?,
    };
    let residual = f.sub(&g)?.sub(&r)?;
    let report = ResidualReport::new(f, &g, &r, &residual);
    Ok(DecompositionResult {
        gradient: g,
        rotation: r,
        source_potential,
        rotation_potential,
        density,
        residual,
        report,
    })
}

/// Three-dimensional decomposition with `Φ = 𝒩₃ div f`, `A = 𝒩₃ curl f`
/// under the kernel `1/(4π|x − ξ|)`, `g = −grad Φ` and `r = curl A`.
#[derive(Debug, Clone)]
pub struct ClassicalDecomposition {
    pub gradient: VectorField,
    pub rotation: VectorField,
    /// `Φ`
    pub scalar_potential: ScalarField,
    /// `A`
    pub vector_potential: VectorField,
    pub residual: VectorField,
    pub report: ResidualReport,
}

pub fn decompose_classical_3d(
    f: &VectorField,
    cfg: &QuadratureConfig,
) -> Result<ClassicalDecomposition> {
    let grid = f.grid();
    if grid.ndim() != 3 {
        return Err(Error::UnsupportedDimension {
            n: grid.ndim(),
            reason: "the classical decomposition is three-dimensional",
        });
    }
    check_input(f)?;
    let op = NewtonOperator::classical(grid, *cfg)?;
    let phi = op.apply(&divergence(f))?;
    let curl = curl_bar(f)?;
    let a: Vec<ScalarField> = curl
        .stored()
        .iter()
        .map(|c| op.apply(c))
        .collect::<Result<_>>()?;
    let g = gradient(&phi).scale(-1.0);
    let r = curl_of_tensor(&DualTensorField::from_stored(grid, a.clone())?);
    let residual = f.sub(&g)?.sub(&r)?;
    let report = ResidualReport::new(f, &g, &r, &residual);
    Ok(ClassicalDecomposition {
        gradient: g,
        rotation: r,
        scalar_potential: phi,
        vector_potential: VectorField::new(a)?,
        residual,
        report,
    })
}

/// Three-dimensional vector `(R₂₃, −R₁₃, R₁₂)` of a rotation potential, which
/// matches the classical vector potential `A` up to a constant.
pub fn rotation_potential_as_vector(r: &AntisymMatrixField) -> Result<VectorField> {
    if r.ndim() != 3 {
        return Err(Error::UnsupportedDimension {
            n: r.ndim(),
            reason: "the vector identification is three-dimensional",
        });
    }
    VectorField::new(vec![
        r.component(1, 2)?,
        r.component(2, 0)?,
        r.component(0, 1)?,
    ])
}

/// Grid of `factor` times the extent of `grid` (same spacing) on which a
/// fixture can be sampled before cropping results back to `grid`.
pub fn padded_grid(grid: &GridSpec, factor: f64) -> Result<(GridSpec, Vec<usize>)> {
    grid.padded(factor)
}

//! Named numerical checks of the decomposition identities.
//!
//! Checks fall into two tolerance classes. Stencil checks compare two
//! compositions of difference operators that agree up to rounding; their
//! tolerance is `ulps · ε · scale` with `scale = max|input| / h_min²`.
//! Quadrature checks involve the Newton potential; they are bounded by a
//! relative L² error on the interior and must improve under one refinement
//! step.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::decompose::{
    decompose_with, relative, DecompositionResult, RotationMode, REPORT_MARGIN,
};
use crate::error::{Error, Result};
use crate::fixtures::{
    fixture_antisym, fixture_scalar, make_fixture, AnalyticReferences, FixtureKind,
};
use crate::grid::{AntisymMatrixField, GridDescriptor, GridSpec, Region, ScalarField, VectorField};
use crate::levi_civita::{curl_bar, curl_of_tensor};
use crate::newton::{apply_bundle_with, NewtonOperator, QuadratureConfig};
use crate::ops::{
    antisym_laplacian, density_derivative, divergence, grad_div_plus_rot_rotbar, gradient,
    laplacian, partial, potential_derivative, rot, rot_bar, vector_laplacian,
};

pub const GRADIENT_ROTATION_FREE: &str = "gradient-is-rotation-free";
pub const ROTATION_DIVERGENCE_FREE: &str = "rotation-is-divergence-free";
pub const NEWTON_COMMUTES: &str = "newton-commutes-with-partial";
pub const LAPLACIAN_SPLITTING: &str = "grad-div-plus-rot-rotbar";
pub const LEVI_CIVITA: &str = "levi-civita-equivalence";
pub const POTENTIAL_DENSITY: &str = "density-of-potential-derivative";
pub const DECOMPOSITION: &str = "decomposition";

/// Every check the suite must run.
pub const CHECK_NAMES: [&str; 7] = [
    GRADIENT_ROTATION_FREE,
    ROTATION_DIVERGENCE_FREE,
    NEWTON_COMMUTES,
    LAPLACIAN_SPLITTING,
    LEVI_CIVITA,
    POTENTIAL_DENSITY,
    DECOMPOSITION,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToleranceClass {
    Stencil,
    Quadrature,
}

impl std::str::FromStr for ToleranceClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stencil" => Ok(ToleranceClass::Stencil),
            "quadrature" => Ok(ToleranceClass::Quadrature),
            _ => Err(Error::Domain(format!("unknown tolerance class `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Multiple of `ε · scale` allowed for stencil identities.
    pub stencil_ulps: f64,
    /// Relative interior L² error allowed for quadrature checks.
    pub quadrature_relative: f64,
    /// Minimum observed order under one refinement step.
    pub refinement_order: f64,
    /// Errors below this are treated as converged.
    pub roundoff_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            stencil_ulps: 16.0,
            quadrature_relative: 0.02,
            refinement_order: 1.0,
            roundoff_floor: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn stencil(&self, scale: f64) -> f64 {
        self.stencil_ulps * f64::EPSILON * scale
    }
}

/// One compared quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub label: String,
    pub class: ToleranceClass,
    /// Interior L² norm of the discrepancy.
    pub l2: f64,
    /// Interior max norm of the discrepancy.
    pub max: f64,
    /// The number held against `tolerance`: `max` for stencil checks, the
    /// relative L² error for quadrature checks.
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Error decay of one quadrature measurement between a grid and its refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub label: String,
    pub coarse_dims: Vec<usize>,
    pub fine_dims: Vec<usize>,
    pub coarse: f64,
    pub fine: f64,
    pub observed_order: f64,
    pub required_order: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// Not applicable to this input; the reason is in `notes`.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub grid: GridDescriptor,
    pub fixture: String,
    pub seed: Option<u64>,
    pub class: ToleranceClass,
    pub measurements: Vec<Measurement>,
    pub refinement: Vec<Refinement>,
    pub status: Status,
    pub runtime_seconds: f64,
    pub notes: Vec<String>,
}

impl CheckReport {
    fn new(name: &str, grid: &GridSpec, class: ToleranceClass) -> Self {
        CheckReport {
            name: name.to_string(),
            grid: grid.clone().into(),
            fixture: String::new(),
            seed: None,
            class,
            measurements: Vec::new(),
            refinement: Vec::new(),
            status: Status::Pass,
            runtime_seconds: 0.0,
            notes: Vec::new(),
        }
    }

    fn skipped(name: &str, grid: &GridSpec, class: ToleranceClass, reason: String) -> Self {
        let mut r = Self::new(name, grid, class);
        r.status = Status::Skipped;
        r.notes.push(reason);
        r
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    fn stencil(&mut self, label: &str, l2: f64, max: f64, tolerance: f64) {
        self.measurements.push(Measurement {
            label: label.to_string(),
            class: ToleranceClass::Stencil,
            l2,
            max,
            value: max,
            tolerance,
            pass: max <= tolerance,
        });
    }

    fn quadrature(&mut self, label: &str, l2: f64, max: f64, reference_l2: f64, tolerance: f64) {
        let value = relative(l2, reference_l2);
        self.measurements.push(Measurement {
            label: label.to_string(),
            class: ToleranceClass::Quadrature,
            l2,
            max,
            value,
            tolerance,
            pass: value <= tolerance,
        });
    }

    fn finish(mut self, start: Instant) -> Self {
        self.runtime_seconds = start.elapsed().as_secs_f64();
        self.update_status();
        self
    }

    fn update_status(&mut self) {
        if self.status == Status::Skipped {
            return;
        }
        let ok = self.measurements.iter().all(|m| m.pass) && self.refinement.iter().all(|r| r.pass);
        self.status = if ok { Status::Pass } else { Status::Fail };
    }

    pub fn with_context(mut self, fixture: &str, seed: Option<u64>) -> Self {
        self.fixture = fixture.to_string();
        self.seed = seed;
        self
    }

    /// Attaches the decay of every quadrature measurement from `self` to `fine`.
    pub fn attach_refinement(&mut self, fine: &CheckReport, tol: &Tolerances) {
        for m in self
            .measurements
            .iter()
            .filter(|m| m.class == ToleranceClass::Quadrature)
        {
            let Some(f) = fine.measurements.iter().find(|x| x.label == m.label) else {
                continue;
            };
            let order = (m.value / f.value).log2();
            let floor = m.value <= tol.roundoff_floor && f.value <= tol.roundoff_floor;
            self.refinement.push(Refinement {
                label: m.label.clone(),
                coarse_dims: self.grid.dims.clone(),
                fine_dims: fine.grid.dims.clone(),
                coarse: m.value,
                fine: f.value,
                observed_order: order,
                required_order: tol.refinement_order,
                pass: floor || order >= tol.refinement_order,
            });
        }
        self.runtime_seconds += fine.runtime_seconds;
        self.update_status();
    }
}

fn scale_of(max_input: f64, grid: &GridSpec) -> f64 {
    max_input / grid.min_spacing().powi(2)
}

fn antisym_l2(m: &AntisymMatrixField, region: Region) -> f64 {
    let ss: f64 = m.stored().iter().map(|c| c.sum_squares(region)).sum();
    (ss * m.grid().cell_volume()).sqrt()
}

/// `ROT̄ grad G = 0`, and `curl̄ grad G = 0` when `n ≤ 4`.
pub fn check_gradient_rotation_free(g: &ScalarField, tol: &Tolerances) -> CheckReport {
    let start = Instant::now();
    let grid = g.grid();
    let mut rep = CheckReport::new(GRADIENT_ROTATION_FREE, grid, ToleranceClass::Stencil);
    let region = Region::Interior(1);
    let t = tol.stencil(scale_of(g.max_abs(Region::All), grid));
    let grad = gradient(g);
    let rho = rot_bar(&grad);
    rep.stencil(
        "rot_bar(grad G)",
        antisym_l2(&rho, region),
        rho.max_abs(region),
        t,
    );
    if let Ok(c) = curl_bar(&grad) {
        let max = c
            .stored()
            .iter()
            .map(|s| s.max_abs(region))
            .fold(0.0, f64::max);
        let ss: f64 = c.stored().iter().map(|s| s.sum_squares(region)).sum();
        rep.stencil("curl_bar(grad G)", (ss * grid.cell_volume()).sqrt(), max, t);
    }
    rep.finish(start)
}

/// `div ROT R = 0`.
pub fn check_rotation_divergence_free(r: &AntisymMatrixField, tol: &Tolerances) -> CheckReport {
    let start = Instant::now();
    let grid = r.grid();
    let mut rep = CheckReport::new(ROTATION_DIVERGENCE_FREE, grid, ToleranceClass::Stencil);
    let region = Region::Interior(REPORT_MARGIN);
    let d = divergence(&rot(r));
    let t = tol.stencil(scale_of(r.max_abs(Region::All), grid));
    rep.stencil("div(ROT R)", d.l2_norm(region), d.max_abs(region), t);
    rep.finish(start)
}

/// `∂_k 𝒩q = 𝒩 ∂_k q` for every axis.
///
/// The renormalization term of the kernel makes `𝒩 ∂_k q` differ from
/// `∂_k 𝒩q` by the constant `C(∂_k q)`, so the interior mean of the
/// difference is removed before measuring and reported in the notes.
pub fn check_newton_commutes(
    q: &ScalarField,
    op: &NewtonOperator,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let start = Instant::now();
    let grid = q.grid();
    let mut rep = CheckReport::new(NEWTON_COMMUTES, grid, ToleranceClass::Quadrature);
    let region = Region::Interior(REPORT_MARGIN);
    let u = op.apply(q)?;
    for k in 0..grid.ndim() {
        let lhs = partial(&u, k)?;
        let rhs = op.apply(&partial(q, k)?)?;
        let diff = lhs.sub(&rhs)?;
        let offset = diff.mean(region);
        let centered = diff.map(|v| v - offset);
        rep.quadrature(
            &format!("axis {k}"),
            centered.l2_norm(region),
            centered.max_abs(region),
            lhs.l2_norm(region),
            tol.quadrature_relative,
        );
        rep.notes
            .push(format!("axis {k}: constant offset {offset:.6e} removed"));
    }
    Ok(rep.finish(start))
}

/// `grad div f + ROT ROT̄ f = Δf`.
pub fn check_laplacian_splitting(f: &VectorField, tol: &Tolerances) -> CheckReport {
    let start = Instant::now();
    let grid = f.grid();
    let mut rep = CheckReport::new(LAPLACIAN_SPLITTING, grid, ToleranceClass::Stencil);
    let region = Region::Interior(REPORT_MARGIN);
    let d = grad_div_plus_rot_rotbar(f)
        .sub(&vector_laplacian(f))
        .expect("same grid");
    let t = tol.stencil(scale_of(f.max_abs(Region::All), grid));
    rep.stencil(
        "grad div f + ROT ROT_bar f - laplacian f",
        d.l2_norm(region),
        d.max_abs(region),
        t,
    );
    rep.finish(start)
}

/// `(−1)ⁿ curl curl̄ f = ROT ROT̄ f` for `n ∈ {2, 3, 4}`.
pub fn check_levi_civita(f: &VectorField, tol: &Tolerances) -> Result<CheckReport> {
    let start = Instant::now();
    let grid = f.grid();
    let n = grid.ndim();
    let mut rep = CheckReport::new(LEVI_CIVITA, grid, ToleranceClass::Stencil);
    let region = Region::Interior(REPORT_MARGIN);
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let lhs = curl_of_tensor(&curl_bar(f)?).scale(sign);
    let d = lhs.sub(&rot(&rot_bar(f)))?;
    let t = tol.stencil(scale_of(f.max_abs(Region::All), grid));
    rep.stencil(
        "(-1)^n curl curl_bar f - ROT ROT_bar f",
        d.l2_norm(region),
        d.max_abs(region),
        t,
    );
    Ok(rep.finish(start))
}

/// `D̄ 𝒟 F = ΔF` for `F = 𝒩 D̄ f`, together with `ΔF = φ`.
pub fn check_potential_density(
    f: &VectorField,
    op: &NewtonOperator,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let start = Instant::now();
    let grid = f.grid();
    let mut rep = CheckReport::new(POTENTIAL_DENSITY, grid, ToleranceClass::Quadrature);
    let region = Region::Interior(REPORT_MARGIN);
    let phi = density_derivative(f);
    let pot = apply_bundle_with(op, &phi)?;
    let lhs = density_derivative(&potential_derivative(&pot));
    let lap_g = laplacian(&pot.source);
    let lap_r = antisym_laplacian(&pot.rotation);

    let mut slots: Vec<(ScalarField, ScalarField, ScalarField)> =
        vec![(lhs.gamma, lap_g, phi.gamma.clone())];
    for ((a, b), c) in lhs
        .rho
        .into_stored()
        .into_iter()
        .zip(lap_r.into_stored())
        .zip(phi.rho.stored().iter().cloned())
    {
        slots.push((a, b, c));
    }
    let (mut d1, mut r1, mut m1) = (0.0, 0.0, 0.0f64);
    let (mut d2, mut r2, mut m2) = (0.0, 0.0, 0.0f64);
    for (dd, lap, dens) in &slots {
        let e1 = dd.sub(lap)?;
        d1 += e1.sum_squares(region);
        r1 += lap.sum_squares(region);
        m1 = m1.max(e1.max_abs(region));
        let e2 = lap.sub(dens)?;
        d2 += e2.sum_squares(region);
        r2 += dens.sum_squares(region);
        m2 = m2.max(e2.max_abs(region));
    }
    let w = grid.cell_volume();
    let l2 = |s: f64| (s * w).sqrt();
    rep.quadrature(
        "D_bar D F - laplacian F",
        l2(d1),
        m1,
        l2(r1),
        tol.quadrature_relative,
    );
    rep.quadrature(
        "laplacian F - phi",
        l2(d2),
        m2,
        l2(r2),
        tol.quadrature_relative,
    );
    Ok(rep.finish(start))
}

/// Full decomposition: reconstruction, discrete identities on `g` and `r`,
/// and agreement with analytic parts where they are known.
pub fn check_decomposition(
    f: &VectorField,
    op: &NewtonOperator,
    references: Option<&AnalyticReferences>,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let start = Instant::now();
    let d = decompose_with(op, f, RotationMode::Full)?;
    let rep = assess_decomposition(f, &d, ToleranceClass::Quadrature, references, tol)?;
    Ok(rep.finish(start))
}

/// Holds a finished decomposition of `f` against a tolerance class.
///
/// The stencil class covers `ROT̄ g = 0` and `div r = 0`; the quadrature
/// class adds the reconstruction error and, when given, the distance of `g`
/// and `r` from their analytic counterparts.
pub fn assess_decomposition(
    f: &VectorField,
    d: &DecompositionResult,
    class: ToleranceClass,
    references: Option<&AnalyticReferences>,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let grid = f.grid();
    let mut rep = CheckReport::new(DECOMPOSITION, grid, class);
    let region = Region::Interior(REPORT_MARGIN);
    let int = &d.report.interior;
    rep.stencil(
        "rot_bar(g)",
        int.rotation_of_gradient.l2,
        int.rotation_of_gradient.max,
        tol.stencil(scale_of(d.source_potential.max_abs(Region::All), grid)),
    );
    match &d.rotation_potential {
        Some(rp) => rep.stencil(
            "div(r)",
            int.divergence_of_rotation.l2,
            int.divergence_of_rotation.max,
            tol.stencil(scale_of(rp.max_abs(Region::All), grid)),
        ),
        None => rep.notes.push(
            "rotation potential skipped: r = f - g, div(r) not held to the stencil class".into(),
        ),
    }
    if class == ToleranceClass::Quadrature {
        rep.quadrature(
            "f - (g + r)",
            int.residual.l2,
            int.residual.max,
            int.field.l2,
            tol.quadrature_relative,
        );
        if let Some(refs) = references {
            let fl2 = f.l2_norm(region);
            if let Some(g_ref) = &refs.gradient {
                let e = d.gradient.sub(g_ref)?;
                rep.quadrature(
                    "g - g_exact",
                    e.l2_norm(region),
                    e.max_abs(region),
                    fl2,
                    tol.quadrature_relative,
                );
            }
            if let Some(r_ref) = &refs.rotation {
                let e = d.rotation.sub(r_ref)?;
                rep.quadrature(
                    "r - r_exact",
                    e.l2_norm(region),
                    e.max_abs(region),
                    fl2,
                    tol.quadrature_relative,
                );
            }
        }
    }
    rep.update_status();
    Ok(rep)
}

/// What [`run_all`] iterates over.
#[derive(Debug, Clone)]
pub struct VerifyPlan {
    pub grids: Vec<GridSpec>,
    pub fixtures: Vec<FixtureKind>,
    pub plane: Option<(usize, usize)>,
    pub seed: u64,
    pub quadrature: QuadratureConfig,
    pub tolerances: Tolerances,
    /// Repeat quadrature checks on the refined grid and require decay.
    pub refine: bool,
}

impl VerifyPlan {
    pub fn new(grids: Vec<GridSpec>, fixtures: Vec<FixtureKind>) -> Self {
        VerifyPlan {
            grids,
            fixtures,
            plane: None,
            seed: 0,
            quadrature: QuadratureConfig::default(),
            tolerances: Tolerances::default(),
            refine: true,
        }
    }
}

/// Density used by the commutation check: `γ` of the field, or its first
/// nonzero rotation density when `γ` vanishes.
fn commutation_density(f: &VectorField) -> ScalarField {
    let d = density_derivative(f);
    if d.gamma.max_abs(Region::All) > 0.0 {
        return d.gamma;
    }
    d.rho
        .into_stored()
        .into_iter()
        .find(|c| c.max_abs(Region::All) > 0.0)
        .unwrap_or_else(|| ScalarField::zeros(f.grid()))
}

fn quadrature_checks(
    grid: &GridSpec,
    kind: FixtureKind,
    plan: &VerifyPlan,
) -> Result<Vec<CheckReport>> {
    let fx = make_fixture(kind, grid, plan.plane, plan.seed)?;
    let op = NewtonOperator::new(grid, plan.quadrature)?;
    let tol = &plan.tolerances;
    let refs = fx.references.gradient.is_some().then_some(&fx.references);
    Ok(vec![
        check_newton_commutes(&commutation_density(&fx.field), &op, tol)?,
        check_potential_density(&fx.field, &op, tol)?,
        check_decomposition(&fx.field, &op, refs, tol)?,
    ])
}

/// Runs every check on every grid and fixture, in a fixed order.
///
/// A final `self-coverage` report fails when some check name never appears.
pub fn run_all(plan: &VerifyPlan) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    let tol = &plan.tolerances;
    for grid in &plan.grids {
        for &kind in &plan.fixtures {
            let ctx = |r: CheckReport| {
                r.with_context(
                    kind.name(),
                    (kind == FixtureKind::RandomSmooth).then_some(plan.seed),
                )
            };
            let fx = make_fixture(kind, grid, plan.plane, plan.seed)?;
            out.push(ctx(check_gradient_rotation_free(
                &fixture_scalar(kind, grid, plan.seed),
                tol,
            )));
            out.push(ctx(check_rotation_divergence_free(
                &fixture_antisym(kind, grid, plan.plane, plan.seed)?,
                tol,
            )));
            out.push(ctx(check_laplacian_splitting(&fx.field, tol)));
            out.push(ctx(match check_levi_civita(&fx.field, tol) {
                Ok(r) => r,
                Err(Error::UnsupportedDimension { n, reason }) => CheckReport::skipped(
                    LEVI_CIVITA,
                    grid,
                    ToleranceClass::Stencil,
                    format!("n = {n}: {reason}"),
                ),
                Err(e) => return Err(e),
            }));
            if !kind.decays() {
                for name in [NEWTON_COMMUTES, POTENTIAL_DENSITY, DECOMPOSITION] {
                    out.push(ctx(CheckReport::skipped(
                        name,
                        grid,
                        ToleranceClass::Quadrature,
                        "the field does not decay, so its Newton potentials do not exist".into(),
                    )));
                }
                continue;
            }
            let mut coarse = quadrature_checks(grid, kind, plan)?;
            if plan.refine {
                let fine = quadrature_checks(&grid.refined(), kind, plan)?;
                for (c, f) in coarse.iter_mut().zip(&fine) {
                    c.attach_refinement(f, tol);
                }
            }
            out.extend(coarse.into_iter().map(ctx));
        }
    }
    let missing: Vec<&str> = CHECK_NAMES
        .iter()
        .copied()
        .filter(|name| !out.iter().any(|r| r.name == *name))
        .collect();
    if let Some(grid) = plan.grids.first() {
        let mut guard = CheckReport::new("self-coverage", grid, ToleranceClass::Stencil);
        if !missing.is_empty() {
            guard.status = Status::Fail;
            guard
                .notes
                .push(format!("missing checks: {}", missing.join(", ")));
        }
        out.push(guard);
    }
    Ok(out)
}

/// Serializes reports as one JSON document.
pub fn reports_to_json(reports: &[CheckReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize")
}

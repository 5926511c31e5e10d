//! Test fields with closed-form densities and parts.
//!
//! The analytic fixtures are built on `e(x) = exp(−|x|²)`, whose derivatives
//! are `∂_a e = −2x_a e` and `∂_a∂_b e = (4x_a x_b − 2δ_ab) e`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{pairs, AntisymMatrixField, GridSpec, ScalarField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixtureKind {
    /// `grad e`
    PureGradient,
    /// `ROT_ij e` in the chosen plane.
    PureRotation,
    /// Sum of the two above.
    Mixed,
    /// Rigid rotation `−x_j e_i + x_i e_j`. Does not decay.
    LinearRotation,
    /// Band-limited noise under a Gaussian envelope, one draw per component.
    RandomSmooth,
}

impl FixtureKind {
    pub const ALL: [FixtureKind; 5] = [
        FixtureKind::PureGradient,
        FixtureKind::PureRotation,
        FixtureKind::Mixed,
        FixtureKind::LinearRotation,
        FixtureKind::RandomSmooth,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FixtureKind::PureGradient => "pure-gradient",
            FixtureKind::PureRotation => "pure-rotation",
            FixtureKind::Mixed => "mixed",
            FixtureKind::LinearRotation => "linear-rotation",
            FixtureKind::RandomSmooth => "random-smooth",
        }
    }

    /// Whether the field decays toward infinity, so that Newton potentials
    /// of its densities exist.
    pub fn decays(&self) -> bool {
        !matches!(self, FixtureKind::LinearRotation)
    }
}

impl fmt::Display for FixtureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FixtureKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FixtureKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownFixture(s.to_string()))
    }
}

/// Closed-form quantities belonging to a fixture, where they exist.
#[derive(Debug, Clone, Default)]
pub struct AnalyticReferences {
    pub gamma: Option<ScalarField>,
    pub rho: Option<AntisymMatrixField>,
    pub gradient: Option<VectorField>,
    pub rotation: Option<VectorField>,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub kind: FixtureKind,
    pub plane: (usize, usize),
    pub seed: Option<u64>,
    pub field: VectorField,
    pub references: AnalyticReferences,
}

fn gauss(x: &[f64]) -> f64 {
    (-x.iter().map(|v| v * v).sum::<f64>()).exp()
}

fn hessian(x: &[f64], a: usize, b: usize) -> f64 {
    let delta = if a == b { 2.0 } else { 0.0 };
    (4.0 * x[a] * x[b] - delta) * gauss(x)
}

fn check_plane(n: usize, (i, j): (usize, usize)) -> Result<()> {
    if i >= n || j >= n {
        return Err(Error::IndexOutOfRange(format!(
            "plane ({i}, {j}) in {n} dimensions"
        )));
    }
    if i == j {
        return Err(Error::Domain(format!("({i}, {i}) is not a rotation plane")));
    }
    Ok(())
}

fn gradient_part(grid: &GridSpec) -> VectorField {
    VectorField::from_fn(grid, |x, out| {
        let e = gauss(x);
        for (o, &xk) in out.iter_mut().zip(x) {
            *o = -2.0 * xk * e;
        }
    })
}

fn rotation_part(grid: &GridSpec, (i, j): (usize, usize)) -> VectorField {
    VectorField::from_fn(grid, |x, out| {
        out.fill(0.0);
        let e = gauss(x);
        out[i] = -2.0 * x[j] * e;
        out[j] = 2.0 * x[i] * e;
    })
}

/// `ρ_ab = ∂f_a/∂x_b − ∂f_b/∂x_a` for `f = ROT_ij e`.
fn rotation_density(grid: &GridSpec, (i, j): (usize, usize)) -> AntisymMatrixField {
    let df = |x: &[f64], a: usize, b: usize| {
        if a == i {
            hessian(x, j, b)
        } else if a == j {
            -hessian(x, i, b)
        } else {
            0.0
        }
    };
    let upper = pairs(grid.ndim())
        .map(|(a, b)| ScalarField::from_fn(grid, |x| df(x, a, b) - df(x, b, a)))
        .collect();
    AntisymMatrixField::new(grid, upper).expect("binomial(n, 2) components")
}

fn source_density(grid: &GridSpec) -> ScalarField {
    let n = grid.ndim() as f64;
    ScalarField::from_fn(grid, |x| {
        (4.0 * x.iter().map(|v| v * v).sum::<f64>() - 2.0 * n) * gauss(x)
    })
}

/// Builds a fixture on `grid`. `plane` defaults to `(0, 1)`; `seed` only
/// affects [`FixtureKind::RandomSmooth`].
pub fn make_fixture(
    kind: FixtureKind,
    grid: &GridSpec,
    plane: Option<(usize, usize)>,
    seed: u64,
) -> Result<Fixture> {
    let plane = plane.unwrap_or((0, 1));
    check_plane(grid.ndim(), plane)?;
    let zero_v = || VectorField::zeros(grid);
    let (field, references, seed) = match kind {
        FixtureKind::PureGradient => {
            let f = gradient_part(grid);
            let refs = AnalyticReferences {
                gamma: Some(source_density(grid)),
                rho: Some(AntisymMatrixField::zeros(grid)),
                gradient: Some(f.clone()),
                rotation: Some(zero_v()),
            };
            (f, refs, None)
        }
        FixtureKind::PureRotation => {
            let f = rotation_part(grid, plane);
            let refs = AnalyticReferences {
                gamma: Some(ScalarField::zeros(grid)),
                rho: Some(rotation_density(grid, plane)),
                gradient: Some(zero_v()),
                rotation: Some(f.clone()),
            };
            (f, refs, None)
        }
        FixtureKind::Mixed => {
            let g = gradient_part(grid);
            let r = rotation_part(grid, plane);
            let refs = AnalyticReferences {
                gamma: Some(source_density(grid)),
                rho: Some(rotation_density(grid, plane)),
                gradient: Some(g.clone()),
                rotation: Some(r.clone()),
            };
            (g.add(&r)?, refs, None)
        }
        FixtureKind::LinearRotation => {
            let (i, j) = plane;
            let f = VectorField::from_fn(grid, |x, out| {
                out.fill(0.0);
                out[i] = -x[j];
                out[j] = x[i];
            });
            let upper = pairs(grid.ndim())
                .map(|p| {
                    let v = if p == (i.min(j), i.max(j)) {
                        if i < j {
                            -2.0
                        } else {
                            2.0
                        }
                    } else {
                        0.0
                    };
                    ScalarField::constant(grid, v)
                })
                .collect();
            let refs = AnalyticReferences {
                gamma: Some(ScalarField::zeros(grid)),
                rho: Some(AntisymMatrixField::new(grid, upper)?),
                gradient: None,
                rotation: None,
            };
            (f, refs, None)
        }
        FixtureKind::RandomSmooth => {
            let comps = (0..grid.ndim())
                .map(|k| random_smooth_scalar(grid, seed.wrapping_add(k as u64)))
                .collect();
            (
                VectorField::new(comps)?,
                AnalyticReferences::default(),
                Some(seed),
            )
        }
    };
    Ok(Fixture {
        kind,
        plane,
        seed,
        field,
        references,
    })
}

/// Number of plane waves in one random draw.
const MODES: usize = 8;
/// Largest wave number of a random draw.
const MAX_WAVENUMBER: f64 = 2.0;

/// `Σ_m a_m cos(k_m·x + φ_m) · exp(−|x|²/2)` with seeded coefficients.
pub fn random_smooth_scalar(grid: &GridSpec, seed: u64) -> ScalarField {
    let n = grid.ndim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, Vec<f64>, f64)> = (0..MODES)
        .map(|_| {
            let a = rng.gen_range(-1.0..1.0);
            let k: Vec<f64> = (0..n)
                .map(|_| rng.gen_range(-MAX_WAVENUMBER..MAX_WAVENUMBER) / (n as f64).sqrt())
                .collect();
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            (a, k, phase)
        })
        .collect();
    ScalarField::from_fn(grid, |x| {
        let envelope = (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp();
        let wave: f64 = modes
            .iter()
            .map(|(a, k, phase)| {
                a * (k.iter().zip(x).map(|(ki, xi)| ki * xi).sum::<f64>() + phase).cos()
            })
            .sum();
        wave * envelope
    })
}

/// Random smooth antisymmetric field, one independent draw per stored pair.
pub fn random_smooth_antisym(grid: &GridSpec, seed: u64) -> AntisymMatrixField {
    let upper = pairs(grid.ndim())
        .enumerate()
        .map(|(p, _)| random_smooth_scalar(grid, seed.wrapping_mul(31).wrapping_add(p as u64 + 1)))
        .collect();
    AntisymMatrixField::new(grid, upper).expect("binomial(n, 2) components")
}

/// A scalar potential matching the fixture family: `e` for the analytic
/// fixtures, a random draw otherwise.
pub fn fixture_scalar(kind: FixtureKind, grid: &GridSpec, seed: u64) -> ScalarField {
    match kind {
        FixtureKind::RandomSmooth => random_smooth_scalar(grid, seed),
        FixtureKind::LinearRotation => {
            ScalarField::from_fn(grid, |x| x.iter().map(|v| v * v).sum::<f64>() - x[0])
        }
        _ => ScalarField::from_fn(grid, gauss),
    }
}

/// An antisymmetric potential matching the fixture family: single-plane `e`
/// for the analytic fixtures, a random draw otherwise.
pub fn fixture_antisym(
    kind: FixtureKind,
    grid: &GridSpec,
    plane: Option<(usize, usize)>,
    seed: u64,
) -> Result<AntisymMatrixField> {
    let (i, j) = plane.unwrap_or((0, 1));
    check_plane(grid.ndim(), (i, j))?;
    match kind {
        FixtureKind::RandomSmooth => Ok(random_smooth_antisym(grid, seed)),
        FixtureKind::LinearRotation => {
            AntisymMatrixField::single_plane(ScalarField::from_fn(grid, |x| x[i] * x[j]), i, j)
        }
        _ => AntisymMatrixField::single_plane(ScalarField::from_fn(grid, gauss), i, j),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Region;
    use crate::ops::{density_derivative, rot_ij};

    #[test]
    fn names_round_trip() {
        for k in FixtureKind::ALL {
            assert_eq!(k.name().parse::<FixtureKind>().unwrap(), k);
        }
        assert!(matches!(
            "spiral".parse::<FixtureKind>(),
            Err(Error::UnknownFixture(_))
        ));
    }

    #[test]
    fn plane_validation() {
        let g = GridSpec::cube(3, 5, -1.0, 1.0).unwrap();
        assert!(make_fixture(FixtureKind::PureRotation, &g, Some((1, 1)), 0).is_err());
        assert!(make_fixture(FixtureKind::PureRotation, &g, Some((0, 3)), 0).is_err());
    }

    #[test]
    fn reference_parts_sum_to_field() {
        let g = GridSpec::cube(3, 9, -2.0, 2.0).unwrap();
        for kind in [
            FixtureKind::PureGradient,
            FixtureKind::PureRotation,
            FixtureKind::Mixed,
        ] {
            let fx = make_fixture(kind, &g, Some((2, 0)), 0).unwrap();
            let r = &fx.references;
            let sum = r
                .gradient
                .as_ref()
                .unwrap()
                .add(r.rotation.as_ref().unwrap())
                .unwrap();
            assert_eq!(sum.sub(&fx.field).unwrap().max_abs(Region::All), 0.0);
        }
    }

    #[test]
    fn rotation_part_matches_discrete_rot() {
        let err = |points: usize| {
            let g = GridSpec::cube(2, points, -4.0, 4.0).unwrap();
            let fx = make_fixture(FixtureKind::PureRotation, &g, None, 0).unwrap();
            let e = ScalarField::from_fn(&g, gauss);
            let d = rot_ij(&e, 0, 1).unwrap().sub(&fx.field).unwrap();
            d.max_abs(Region::All)
        };
        let (a, b) = (err(33), err(65));
        assert!(a < 0.05, "{a}");
        assert!((a / b).log2() > 1.9, "{a} {b}");
    }

    #[test]
    fn analytic_densities_converge() {
        let err = |points: usize| {
            let g = GridSpec::cube(3, points, -4.0, 4.0).unwrap();
            let fx = make_fixture(FixtureKind::Mixed, &g, Some((0, 2)), 0).unwrap();
            let d = density_derivative(&fx.field);
            let m = Region::Interior(2);
            let eg = d
                .gamma
                .sub(fx.references.gamma.as_ref().unwrap())
                .unwrap()
                .max_abs(m);
            let rho = fx.references.rho.as_ref().unwrap();
            let er = d
                .rho
                .stored()
                .iter()
                .zip(rho.stored())
                .map(|(a, b)| a.sub(b).unwrap().max_abs(m))
                .fold(0.0, f64::max);
            eg.max(er)
        };
        let (a, b) = (err(33), err(65));
        assert!(a < 0.5, "{a}");
        assert!((a / b).log2() > 1.8, "{a} {b}");
    }

    #[test]
    fn random_fields_are_seeded() {
        let g = GridSpec::cube(2, 17, -4.0, 4.0).unwrap();
        let a = make_fixture(FixtureKind::RandomSmooth, &g, None, 7).unwrap();
        let b = make_fixture(FixtureKind::RandomSmooth, &g, None, 7).unwrap();
        let c = make_fixture(FixtureKind::RandomSmooth, &g, None, 8).unwrap();
        assert_eq!(a.field, b.field);
        assert_ne!(a.field, c.field);
        assert_eq!(a.seed, Some(7));
        assert!(a.field.max_abs(Region::All) > 0.1);
        // the envelope makes it decay
        let face = a
            .field
            .components()
            .iter()
            .flat_map(|c| {
                c.values()
                    .iter()
                    .enumerate()
                    .filter(|(p, _)| g.is_boundary(*p))
                    .map(|(_, v)| v.abs())
            })
            .fold(0.0, f64::max);
        assert!(face < 1e-3);
    }

    #[test]
    fn linear_rotation_density() {
        let g = GridSpec::cube(2, 5, -1.0, 1.0).unwrap();
        let fx = make_fixture(FixtureKind::LinearRotation, &g, None, 0).unwrap();
        let d = density_derivative(&fx.field);
        assert_eq!(&d.rho, fx.references.rho.as_ref().unwrap());
        let swapped = make_fixture(FixtureKind::LinearRotation, &g, Some((1, 0)), 0).unwrap();
        let d = density_derivative(&swapped.field);
        assert_eq!(&d.rho, swapped.references.rho.as_ref().unwrap());
    }
}

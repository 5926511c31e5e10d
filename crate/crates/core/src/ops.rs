//! Finite-difference realizations of the vector-calculus operators.
//!
//! Every operator is built from one first-difference stencil: second-order
//! central differences at interior nodes and second-order one-sided
//! differences on the faces. Second derivatives (including the Laplacian)
//! are compositions of that stencil, so the operator identities
//! `ROT̄ grad = 0`, `div ROT = 0` and `grad div + ROT ROT̄ = Δ` hold at
//! rounding level away from the faces.
//!
//! Composed operators are exact only where every stencil involved is central:
//! one node from the faces for mixed second differences, two nodes for the
//! Laplacian.

use crate::error::{Error, Result};
use crate::grid::{
    pair_position, pairs, AntisymMatrixField, DensityBundle, GridSpec, PotentialBundle,
    ScalarField, VectorField,
};

/// Margin (in nodes) inside which composed second differences use only
/// central stencils.
pub const COMPOSED_MARGIN: usize = 2;

fn check_axis(grid: &GridSpec, axis: usize) -> Result<()> {
    if axis >= grid.ndim() {
        return Err(Error::IndexOutOfRange(format!(
            "axis {axis} on a {}-dimensional grid",
            grid.ndim()
        )));
    }
    Ok(())
}

/// `∂s/∂x_axis`.
pub fn partial(s: &ScalarField, axis: usize) -> Result<ScalarField> {
    let grid = s.grid();
    check_axis(grid, axis)?;
    let count = grid.dims()[axis];
    let stride = grid.strides()[axis];
    let two_h = 2.0 * grid.spacing()[axis];
    let v = s.values();
    let out = (0..v.len())
        .map(|p| {
            let i = grid.axis_index(p, axis);
            if i == 0 {
                (-3.0 * v[p] + 4.0 * v[p + stride] - v[p + 2 * stride]) / two_h
            } else if i == count - 1 {
                (3.0 * v[p] - 4.0 * v[p - stride] + v[p - 2 * stride]) / two_h
            } else {
                (v[p + stride] - v[p - stride]) / two_h
            }
        })
        .collect();
    ScalarField::new(grid.clone(), out)
}

fn partial_unchecked(s: &ScalarField, axis: usize) -> ScalarField {
    partial(s, axis).expect("axis validated by caller")
}

pub fn gradient(s: &ScalarField) -> VectorField {
    let comps = (0..s.grid().ndim())
        .map(|k| partial_unchecked(s, k))
        .collect();
    VectorField::new(comps).expect("components share the grid")
}

/// Accumulates `terms` in order into a fresh field.
fn sum_fields<'a>(
    grid: &GridSpec,
    terms: impl IntoIterator<Item = (f64, &'a ScalarField)>,
) -> ScalarField {
    let mut acc = ScalarField::zeros(grid);
    let out = acc.values_mut();
    for (sign, t) in terms {
        for (o, &v) in out.iter_mut().zip(t.values()) {
            *o += sign * v;
        }
    }
    acc
}

/// `Σ_k ∂f_k/∂x_k`.
pub fn divergence(f: &VectorField) -> ScalarField {
    let parts: Vec<_> = (0..f.ndim())
        .map(|k| partial_unchecked(f.component(k), k))
        .collect();
    sum_fields(f.grid(), parts.iter().map(|p| (1.0, p)))
}

/// Jacobian `J_ij = ∂f_i/∂x_j` with its symmetric and antisymmetric parts.
#[derive(Debug, Clone)]
pub struct Jacobian {
    n: usize,
    full: Vec<ScalarField>,
    symmetric: Vec<ScalarField>,
    antisymmetric: Vec<ScalarField>,
}

impl Jacobian {
    pub fn ndim(&self) -> usize {
        self.n
    }

    /// `J_ij`
    pub fn entry(&self, i: usize, j: usize) -> &ScalarField {
        &self.full[i * self.n + j]
    }

    /// `S_ij = (J_ij + J_ji) / 2`
    pub fn symmetric(&self, i: usize, j: usize) -> &ScalarField {
        &self.symmetric[i * self.n + j]
    }

    /// `A_ij = (J_ij - J_ji) / 2`
    pub fn antisymmetric(&self, i: usize, j: usize) -> &ScalarField {
        &self.antisymmetric[i * self.n + j]
    }

    /// Trace of `J`, summed in axis order.
    pub fn trace(&self) -> ScalarField {
        let grid = self.full[0].grid();
        sum_fields(grid, (0..self.n).map(|k| (1.0, self.entry(k, k))))
    }
}

pub fn jacobian(f: &VectorField) -> Jacobian {
    let n = f.ndim();
    let full: Vec<ScalarField> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| partial_unchecked(f.component(i), j))
        .collect();
    let mut symmetric = Vec::with_capacity(n * n);
    let mut antisymmetric = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let a = &full[i * n + j];
            let b = &full[j * n + i];
            symmetric.push(a.zip_with(b, |x, y| (x + y) / 2.0).expect("same grid"));
            antisymmetric.push(a.zip_with(b, |x, y| (x - y) / 2.0).expect("same grid"));
        }
    }
    Jacobian {
        n,
        full,
        symmetric,
        antisymmetric,
    }
}

/// Basic rotation density `ROT̄_ij f = ∂f_i/∂x_j − ∂f_j/∂x_i`; zero for `i = j`.
pub fn rot_bar_ij(f: &VectorField, i: usize, j: usize) -> Result<ScalarField> {
    let grid = f.grid();
    check_axis(grid, i)?;
    check_axis(grid, j)?;
    if i == j {
        return Ok(ScalarField::zeros(grid));
    }
    let a = partial_unchecked(f.component(i), j);
    let b = partial_unchecked(f.component(j), i);
    a.sub(&b)
}

/// Rotation density `ROT̄ f` as an antisymmetric matrix field.
pub fn rot_bar(f: &VectorField) -> AntisymMatrixField {
    let upper = pairs(f.ndim())
        .map(|(i, j)| rot_bar_ij(f, i, j).expect("valid pair"))
        .collect();
    AntisymMatrixField::new(f.grid(), upper).expect("binomial(n, 2) components")
}

/// Density derivative `D̄f = {div f, ROT̄ f}`.
pub fn density_derivative(f: &VectorField) -> DensityBundle {
    DensityBundle {
        gamma: divergence(f),
        rho: rot_bar(f),
    }
}

/// Basic rotation `ROT_ij R_ij`: `+∂R/∂x_j` in slot `i`, `−∂R/∂x_i` in slot `j`.
pub fn rot_ij(r: &ScalarField, i: usize, j: usize) -> Result<VectorField> {
    let grid = r.grid();
    check_axis(grid, i)?;
    check_axis(grid, j)?;
    if i == j {
        return Err(Error::Domain(format!("ROT_{i}{i} has no rotation plane")));
    }
    let mut comps: Vec<ScalarField> = (0..grid.ndim()).map(|_| ScalarField::zeros(grid)).collect();
    comps[i] = partial_unchecked(r, j);
    comps[j] = partial_unchecked(r, i).neg();
    VectorField::new(comps)
}

/// Rotation `ROT R` via the row divergence `(ROT R)_k = Σ_m ∂R_km/∂x_m`.
pub fn rot(r: &AntisymMatrixField) -> VectorField {
    let n = r.ndim();
    let grid = r.grid();
    // ∂R_ij/∂x_m for every stored pair and every m it is needed for.
    let mut comps = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = ScalarField::zeros(grid);
        for m in 0..n {
            if m == k {
                continue;
            }
            let (a, b, sign) = if k < m { (k, m, 1.0) } else { (m, k, -1.0) };
            let d = partial_unchecked(&r.stored()[pair_position(n, a, b)], m);
            for (o, &v) in acc.values_mut().iter_mut().zip(d.values()) {
                *o += sign * v;
            }
        }
        comps.push(acc);
    }
    VectorField::new(comps).expect("components share the grid")
}

/// Rotation `ROT R` as the half-sum `½ Σ_{i,j} ROT_ij R_ij` over the full
/// antisymmetric matrix. Agrees with [`rot`].
pub fn rot_half_sum(r: &AntisymMatrixField) -> VectorField {
    let n = r.ndim();
    let grid = r.grid();
    let mut acc = VectorField::zeros(grid).into_components();
    let mut row = vec![ScalarField::zeros(grid); n];
    let mut col = vec![ScalarField::zeros(grid); n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let rij = r.component(i, j).expect("valid pair");
            let term = rot_ij(&rij, i, j).expect("i != j");
            // slot i collects Σ_j ∂R_ij/∂x_j, slot j collects −Σ_i ∂R_ij/∂x_i
            add_into(&mut row[i], term.component(i));
            add_into(&mut col[j], term.component(j));
        }
    }
    for k in 0..n {
        let v: Vec<f64> = row[k]
            .values()
            .iter()
            .zip(col[k].values())
            .map(|(&a, &b)| 0.5 * (a + b))
            .collect();
        acc[k] = ScalarField::new(grid.clone(), v).expect("same grid");
    }
    VectorField::new(acc).expect("components share the grid")
}

fn add_into(acc: &mut ScalarField, t: &ScalarField) {
    for (o, &v) in acc.values_mut().iter_mut().zip(t.values()) {
        *o += v;
    }
}

/// Potential derivative `D F = grad G + ROT R`.
pub fn potential_derivative(f: &PotentialBundle) -> VectorField {
    gradient(&f.source)
        .add(&rot(&f.rotation))
        .expect("bundle shares one grid")
}

/// `Δs = Σ_k ∂/∂x_k ∂s/∂x_k`, composed from the first-difference stencil.
pub fn laplacian(s: &ScalarField) -> ScalarField {
    let parts: Vec<_> = (0..s.grid().ndim())
        .map(|k| partial_unchecked(&partial_unchecked(s, k), k))
        .collect();
    sum_fields(s.grid(), parts.iter().map(|p| (1.0, p)))
}

pub fn vector_laplacian(f: &VectorField) -> VectorField {
    VectorField::new(f.components().iter().map(laplacian).collect()).expect("same grid")
}

pub fn antisym_laplacian(r: &AntisymMatrixField) -> AntisymMatrixField {
    AntisymMatrixField::new(r.grid(), r.stored().iter().map(laplacian).collect())
        .expect("same grid")
}

/// `grad div f + ROT ROT̄ f`; equals [`vector_laplacian`] away from the faces.
pub fn grad_div_plus_rot_rotbar(f: &VectorField) -> VectorField {
    gradient(&divergence(f))
        .add(&rot(&rot_bar(f)))
        .expect("same grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Region;

    fn grid2(points: usize, lo: f64, hi: f64) -> GridSpec {
        GridSpec::cube(2, points, lo, hi).unwrap()
    }

    fn gauss(x: &[f64]) -> f64 {
        (-x.iter().map(|v| v * v).sum::<f64>()).exp()
    }

    fn interior_values(s: &ScalarField, margin: usize) -> impl Iterator<Item = f64> + '_ {
        s.values()
            .iter()
            .enumerate()
            .filter(move |(p, _)| s.grid().is_interior(*p, margin))
            .map(|(_, &v)| v)
    }

    #[test]
    fn partial_of_constant_is_zero() {
        let g = GridSpec::cube(3, 5, -1.0, 1.0).unwrap();
        let s = ScalarField::constant(&g, 7.0);
        for k in 0..3 {
            assert!(partial(&s, k).unwrap().values().iter().all(|&v| v == 0.0));
        }
        assert!(partial(&s, 3).is_err());
    }

    #[test]
    fn partial_exact_on_linear_and_quadratic() {
        let g = grid2(7, -1.5, 1.5);
        let lin = ScalarField::from_fn(&g, |x| x[1]);
        assert!(partial(&lin, 1).unwrap().values().iter().all(|&v| v == 1.0));
        let g3 = GridSpec::new(vec![3, 3], vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let quad = ScalarField::from_fn(&g3, |x| x[0] * x[0]);
        let d = partial(&quad, 0).unwrap();
        assert_eq!(d.at(&[1, 1]).unwrap(), 1.0);
        // one-sided stencils are exact on quadratics too
        assert_eq!(d.at(&[0, 0]).unwrap(), 0.0);
        assert_eq!(d.at(&[2, 0]).unwrap(), 2.0);
    }

    #[test]
    fn gradient_examples() {
        let g = grid2(9, -2.0, 2.0);
        let s = ScalarField::from_fn(&g, |x| x[0] + x[1]);
        let grad = gradient(&s);
        for c in grad.components() {
            assert!(c.values().iter().all(|&v| v == 1.0));
        }
        let e = ScalarField::from_fn(&g, gauss);
        let grad = gradient(&e);
        let origin = g.flat_index(&[4, 4]).unwrap();
        assert_eq!(grad.component(0).values()[origin], 0.0);
        assert_eq!(grad.component(1).values()[origin], 0.0);
    }

    #[test]
    fn divergence_examples() {
        let g = GridSpec::cube(3, 5, -1.0, 1.0).unwrap();
        let id = VectorField::from_fn(&g, |x, out| out.copy_from_slice(x));
        assert!(divergence(&id).values().iter().all(|&v| v == 3.0));

        let g2 = grid2(9, -1.0, 1.0);
        let spin = VectorField::from_fn(&g2, |x, out| {
            out[0] = -x[1];
            out[1] = x[0];
        });
        assert!(divergence(&spin).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn divergence_matches_jacobian_trace() {
        let g = GridSpec::cube(3, 7, -2.0, 2.0).unwrap();
        let f = VectorField::from_fn(&g, |x, out| {
            out[0] = (x[0] * x[1]).sin();
            out[1] = gauss(x) * x[2];
            out[2] = x[0] * x[0] - x[2];
        });
        assert_eq!(divergence(&f), jacobian(&f).trace());
    }

    #[test]
    fn divergence_of_gaussian_gradient_at_origin() {
        // Δ e^{-|x|²} = (4|x|² − 2n) e^{-|x|²} → −4 at the origin for n = 2
        let mut errs = Vec::new();
        for points in [65, 129] {
            let g = grid2(points, -4.0, 4.0);
            let f = VectorField::from_fn(&g, |x, out| {
                let e = gauss(x);
                out[0] = -2.0 * x[0] * e;
                out[1] = -2.0 * x[1] * e;
            });
            let d = divergence(&f);
            let mid = points / 2;
            errs.push((d.at(&[mid, mid]).unwrap() + 4.0).abs());
        }
        // leading error term 4h²
        assert!((errs[0] - 4.0 / 64.0).abs() < 2e-3, "{errs:?}");
        assert!(errs[1] < errs[0] / 3.5, "{errs:?}");
    }

    #[test]
    fn divergence_converges_second_order() {
        let oracle = |x: &[f64]| (4.0 * (x[0] * x[0] + x[1] * x[1]) - 4.0) * gauss(x);
        let errs: Vec<f64> = [33, 65]
            .iter()
            .map(|&points| {
                let g = grid2(points, -4.0, 4.0);
                let f = VectorField::from_fn(&g, |x, out| {
                    let e = gauss(x);
                    out[0] = -2.0 * x[0] * e;
                    out[1] = -2.0 * x[1] * e;
                });
                let d = divergence(&f);
                let exact = ScalarField::from_fn(&g, oracle);
                d.sub(&exact).unwrap().max_abs(Region::All)
            })
            .collect();
        let order = (errs[0] / errs[1]).log2();
        assert!(order >= 1.9, "observed order {order}");
    }

    #[test]
    fn jacobian_parts() {
        let g = grid2(5, -1.0, 1.0);
        let id = VectorField::from_fn(&g, |x, out| out.copy_from_slice(x));
        let j = jacobian(&id);
        for a in 0..2 {
            for b in 0..2 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!(j.entry(a, b).values().iter().all(|&v| v == want));
                assert!(j.antisymmetric(a, b).values().iter().all(|&v| v == 0.0));
            }
        }
        let spin = VectorField::from_fn(&g, |x, out| {
            out[0] = -x[1];
            out[1] = x[0];
        });
        let j = jacobian(&spin);
        assert!(j.antisymmetric(0, 1).values().iter().all(|&v| v == -1.0));
        assert!(j.antisymmetric(1, 0).values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn jacobian_parts_sum_back() {
        let g = GridSpec::cube(3, 6, -1.0, 1.3).unwrap();
        let f = VectorField::from_fn(&g, |x, out| {
            out[0] = (3.0 * x[1]).sin() + x[2];
            out[1] = x[0] * x[2].exp();
            out[2] = (x[0] - x[1]).cos();
        });
        let j = jacobian(&f);
        for a in 0..3 {
            for b in 0..3 {
                let s = j.symmetric(a, b).add(j.antisymmetric(a, b)).unwrap();
                let pairs = j.entry(a, b).values().iter().zip(j.entry(b, a).values());
                for (x, (y, yt)) in s.values().iter().zip(pairs) {
                    // one rounding in each half plus one in the sum
                    assert!((x - y).abs() <= 2.0 * f64::EPSILON * y.abs().max(yt.abs()));
                }
            }
        }
    }

    #[test]
    fn rot_bar_examples() {
        let g = grid2(9, -1.0, 1.0);
        let spin = VectorField::from_fn(&g, |x, out| {
            out[0] = -x[1];
            out[1] = x[0];
        });
        assert!(rot_bar_ij(&spin, 0, 1)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == -2.0));
        assert!(rot_bar_ij(&spin, 1, 1)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        assert_eq!(rot_bar(&spin).stored().len(), 1);

        // degree-2 polynomial potential on a dyadic grid: exactly rotation-free
        let g = GridSpec::cube(3, 9, -1.0, 1.0).unwrap();
        let pot = ScalarField::from_fn(&g, |x| x[0] * x[1] - 0.5 * x[2] * x[2] + 3.0 * x[1] * x[2]);
        let grad = gradient(&pot);
        for (i, j) in pairs(3) {
            assert!(rot_bar_ij(&grad, i, j)
                .unwrap()
                .values()
                .iter()
                .all(|&v| v == 0.0));
        }
    }

    #[test]
    fn rot_bar_is_exactly_antisymmetric() {
        let g = GridSpec::cube(3, 6, -1.0, 1.0).unwrap();
        let f = VectorField::from_fn(&g, |x, out| {
            out[0] = (x[0] * x[1] * 3.1).sin();
            out[1] = gauss(x);
            out[2] = x[0].powi(3) * x[2];
        });
        for i in 0..3 {
            for j in 0..3 {
                let a = rot_bar_ij(&f, i, j).unwrap();
                let b = rot_bar_ij(&f, j, i).unwrap();
                assert_eq!(a, b.neg());
            }
        }
    }

    #[test]
    fn rot_ij_examples() {
        let g = GridSpec::cube(3, 5, -1.0, 1.0).unwrap();
        let r = ScalarField::from_fn(&g, |x| x[0]);
        let v = rot_ij(&r, 0, 1).unwrap();
        assert!(v.component(0).values().iter().all(|&x| x == 0.0));
        assert!(v.component(1).values().iter().all(|&x| x == -1.0));
        assert!(v.component(2).values().iter().all(|&x| x == 0.0));
        assert!(rot_ij(&r, 2, 2).is_err());
        let c = rot_ij(&ScalarField::constant(&g, 4.0), 1, 2).unwrap();
        assert_eq!(c.max_abs(Region::All), 0.0);
    }

    #[test]
    fn rot_ij_gaussian_oracle_at_unit_node() {
        // +∂R/∂x₂ = −2x₂e^{−|x|²} = 0 and −∂R/∂x₁ = 2x₁e^{−|x|²} = 2/e at (1, 0)
        let errs: Vec<f64> = [65, 129]
            .iter()
            .map(|&points| {
                let g = grid2(points, -4.0, 4.0);
                let r = ScalarField::from_fn(&g, gauss);
                let v = rot_ij(&r, 0, 1).unwrap();
                let node = [(points - 1) * 5 / 8, (points - 1) / 2];
                assert_eq!(g.coord(0, node[0]), 1.0);
                assert_eq!(v.component(0).at(&node).unwrap(), 0.0);
                (v.component(1).at(&node).unwrap() - 2.0 * (-1.0f64).exp()).abs()
            })
            .collect();
        assert!(errs[0] < 1e-2, "{errs:?}");
        assert!(errs[1] < errs[0] / 3.5, "{errs:?}");
    }

    #[test]
    fn rot_ij_symmetry_under_index_swap() {
        let g = GridSpec::cube(3, 6, -1.0, 1.0).unwrap();
        let r = ScalarField::from_fn(&g, |x| (x[0] + 2.0 * x[2]).sin() * x[1]);
        assert_eq!(rot_ij(&r, 0, 2).unwrap(), rot_ij(&r.neg(), 2, 0).unwrap());
    }

    #[test]
    fn rot_single_plane_and_half_sum() {
        let g = GridSpec::cube(4, 6, -1.0, 1.0).unwrap();
        let r12 = ScalarField::from_fn(&g, |x| gauss(x) * (1.0 + x[3]));
        let single = AntisymMatrixField::single_plane(r12.clone(), 0, 1).unwrap();
        assert_eq!(rot(&single), rot_ij(&r12, 0, 1).unwrap());
        assert_eq!(
            rot(&AntisymMatrixField::zeros(&g)).max_abs(Region::All),
            0.0
        );

        let upper = pairs(4)
            .enumerate()
            .map(|(p, _)| {
                ScalarField::from_fn(&g, |x| ((p + 1) as f64 * x[0] + x[p % 4]).sin() * gauss(x))
            })
            .collect();
        let r = AntisymMatrixField::new(&g, upper).unwrap();
        let a = rot(&r);
        let b = rot_half_sum(&r);
        for (ca, cb) in a.components().iter().zip(b.components()) {
            for (x, y) in ca.values().iter().zip(cb.values()) {
                assert!((x - y).abs() <= 4.0 * f64::EPSILON * x.abs(), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn potential_derivative_examples() {
        let g = GridSpec::cube(3, 6, -1.0, 1.0).unwrap();
        assert_eq!(
            potential_derivative(&PotentialBundle::zeros(&g)).max_abs(Region::All),
            0.0
        );
        let g0 = ScalarField::from_fn(&g, gauss);
        let f = PotentialBundle::new(g0.clone(), AntisymMatrixField::zeros(&g)).unwrap();
        assert_eq!(potential_derivative(&f), gradient(&g0));
        let r0 = AntisymMatrixField::single_plane(g0.clone(), 1, 2).unwrap();
        let f = PotentialBundle::new(ScalarField::zeros(&g), r0.clone()).unwrap();
        assert_eq!(potential_derivative(&f), rot(&r0));
    }

    #[test]
    fn density_derivative_examples() {
        let g = grid2(9, -1.0, 1.0);
        let zero = density_derivative(&VectorField::zeros(&g));
        assert_eq!(zero.gamma.max_abs(Region::All), 0.0);
        assert_eq!(zero.rho.max_abs(Region::All), 0.0);
        let id = VectorField::from_fn(&g, |x, out| out.copy_from_slice(x));
        let d = density_derivative(&id);
        assert!(d.gamma.values().iter().all(|&v| v == 2.0));
        assert_eq!(d.rho.max_abs(Region::All), 0.0);
    }

    #[test]
    fn density_derivative_is_linear_over_gaussian_parts() {
        let g = grid2(129, -4.0, 4.0);
        let pot = ScalarField::from_fn(&g, gauss);
        let grad_part = gradient(&pot);
        let rot_part = rot_ij(&pot, 0, 1).unwrap();
        let mixed = density_derivative(&grad_part.add(&rot_part).unwrap());
        let dg = density_derivative(&grad_part);
        let dr = density_derivative(&rot_part);
        let tol = 1e-12;
        let gsum = dg.gamma.add(&dr.gamma).unwrap();
        assert!(mixed.gamma.sub(&gsum).unwrap().max_abs(Region::All) < tol);
        // a discrete ROT field has discrete divergence zero away from faces
        assert!(dr.gamma.max_abs(Region::Interior(1)) < tol);
        // and a discrete gradient is discretely rotation-free
        assert!(dg.rho.max_abs(Region::Interior(1)) < tol);
        // the rotational density matches the analytic oracle (4|x|² − 4)e^{−|x|²} to O(h²)
        let oracle =
            ScalarField::from_fn(&g, |x| (4.0 * (x[0] * x[0] + x[1] * x[1]) - 4.0) * gauss(x));
        let rho = mixed.rho.upper(0, 1).unwrap();
        assert!(rho.sub(&oracle).unwrap().max_abs(Region::Interior(2)) < 0.1);
    }

    #[test]
    fn laplacian_examples() {
        let g = grid2(9, -1.0, 1.0);
        let lin = ScalarField::from_fn(&g, |x| 3.0 * x[0] - x[1] + 1.0);
        assert!(interior_values(&laplacian(&lin), 2).all(|v| v == 0.0));
        let sq = ScalarField::from_fn(&g, |x| x[0] * x[0] + x[1] * x[1]);
        assert!(laplacian(&sq).values().iter().all(|&v| v == 4.0));

        let mut errs = Vec::new();
        for points in [129, 257] {
            let g = grid2(points, -4.0, 4.0);
            let e = ScalarField::from_fn(&g, gauss);
            let mid = points / 2;
            errs.push((laplacian(&e).at(&[mid, mid]).unwrap() + 4.0).abs());
        }
        assert!(errs[0] < 0.1 && errs[1] < errs[0] / 3.5, "{errs:?}");
    }

    #[test]
    fn grad_div_plus_rot_rotbar_examples() {
        let g = grid2(9, -1.0, 1.0);
        let zero = grad_div_plus_rot_rotbar(&VectorField::zeros(&g));
        assert_eq!(zero.max_abs(Region::All), 0.0);

        let f = VectorField::from_fn(&g, |x, out| {
            out[0] = x[0] * x[0];
            out[1] = 0.0;
        });
        let lhs = grad_div_plus_rot_rotbar(&f);
        assert!(interior_values(lhs.component(0), 2).all(|v| v == 2.0));
        assert!(interior_values(lhs.component(1), 2).all(|v| v == 0.0));
        assert_eq!(lhs, vector_laplacian(&f));
    }
}

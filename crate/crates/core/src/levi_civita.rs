//! Levi-Civita forms of the rotation density for `n ∈ {2, 3, 4}`.
//!
//! `curl̄ f` is the totally antisymmetric rank-`(n − 2)` tensor
//! `(curl̄ f)_e = Σ_{l,m} ε_{e,l,m} ∂f_m/∂x_l`. For `n = 2` this is the scalar
//! curl `∂f₂/∂x₁ − ∂f₁/∂x₂`, for `n = 3` the usual curl. It carries the same
//! information as `ROT̄ f`; the map is `(curl̄ f)_e = −Σ_{l<m} ε_{e,l,m} ρ_lm`.

use crate::error::{Error, Result};
use crate::grid::{pair_position, AntisymMatrixField, GridSpec, ScalarField, VectorField};
use crate::ops::{partial, rot_bar};

/// Sign of the permutation `perm` of `0..perm.len()`, or `0` when an index
/// repeats or falls outside that range.
pub fn epsilon(perm: &[usize]) -> i8 {
    let n = perm.len();
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return 0;
        }
        seen[p] = true;
    }
    // parity from the cycle decomposition
    let mut visited = vec![false; n];
    let mut transpositions = 0;
    for start in 0..n {
        let mut k = start;
        let mut len = 0;
        while !visited[k] {
            visited[k] = true;
            k = perm[k];
            len += 1;
        }
        if len > 0 {
            transpositions += len - 1;
        }
    }
    if transpositions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Strictly increasing multi-indices of length `rank` drawn from `0..n`.
pub fn increasing_indices(n: usize, rank: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, rank: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == rank {
            out.push(cur.clone());
            return;
        }
        for k in start..n {
            cur.push(k);
            rec(n, rank, k + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, rank, 0, &mut Vec::new(), &mut out);
    out
}

/// Totally antisymmetric rank-`(n − 2)` tensor field, stored on increasing
/// multi-indices.
#[derive(Debug, Clone, PartialEq)]
pub struct DualTensorField {
    grid: GridSpec,
    indices: Vec<Vec<usize>>,
    values: Vec<ScalarField>,
}

impl DualTensorField {
    /// Wraps components given in [`increasing_indices`] order.
    pub fn from_stored(grid: &GridSpec, values: Vec<ScalarField>) -> Result<Self> {
        let n = grid.ndim();
        check_dimension(n)?;
        let indices = increasing_indices(n, n - 2);
        if values.len() != indices.len() {
            return Err(Error::InvalidGrid(format!(
                "rank-{} tensor needs {} components, got {}",
                n - 2,
                indices.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.grid().same_geometry(grid)) {
            return Err(Error::GridMismatch);
        }
        Ok(DualTensorField {
            grid: grid.clone(),
            indices,
            values,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn rank(&self) -> usize {
        self.grid.ndim() - 2
    }

    /// Stored multi-indices, in the order of [`DualTensorField::stored`].
    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn stored(&self) -> &[ScalarField] {
        &self.values
    }

    /// Component for an arbitrary multi-index; repeated indices give zero.
    pub fn component(&self, e: &[usize]) -> Result<ScalarField> {
        if e.len() != self.rank() || e.iter().any(|&k| k >= self.grid.ndim()) {
            return Err(Error::IndexOutOfRange(format!(
                "multi-index {e:?} on a rank-{} tensor in {} dimensions",
                self.rank(),
                self.grid.ndim()
            )));
        }
        let mut sorted = e.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Ok(ScalarField::zeros(&self.grid));
        }
        let pos = self
            .indices
            .iter()
            .position(|s| *s == sorted)
            .expect("all sets stored");
        // sign of the permutation taking `sorted` to `e`
        let perm: Vec<usize> = e
            .iter()
            .map(|k| sorted.iter().position(|s| s == k).unwrap())
            .collect();
        let v = &self.values[pos];
        Ok(if epsilon(&perm) > 0 {
            v.clone()
        } else {
            v.neg()
        })
    }
}

fn check_dimension(n: usize) -> Result<()> {
    if !(2..=4).contains(&n) {
        return Err(Error::UnsupportedDimension {
            n,
            reason: "the Levi-Civita form is provided for n = 2, 3, 4 only; use ROT̄",
        });
    }
    Ok(())
}

/// `curl̄` of the rotation density `ρ = ROT̄ f`.
pub fn curl_bar_from_density(rho: &AntisymMatrixField) -> Result<DualTensorField> {
    let n = rho.ndim();
    check_dimension(n)?;
    let grid = rho.grid().clone();
    let indices = increasing_indices(n, n - 2);
    let values = indices
        .iter()
        .map(|e| {
            let mut acc = ScalarField::zeros(&grid);
            let mut full = e.clone();
            full.extend([0, 0]);
            for l in 0..n {
                for m in (l + 1)..n {
                    full[n - 2] = l;
                    full[n - 1] = m;
                    let s = epsilon(&full);
                    if s == 0 {
                        continue;
                    }
                    let r = &rho.stored()[pair_position(n, l, m)];
                    for (o, &v) in acc.values_mut().iter_mut().zip(r.values()) {
                        *o -= f64::from(s) * v;
                    }
                }
            }
            acc
        })
        .collect();
    Ok(DualTensorField {
        grid,
        indices,
        values,
    })
}

/// `curl̄ f`; errors with [`Error::UnsupportedDimension`] for `n ≥ 5`.
pub fn curl_bar(f: &VectorField) -> Result<DualTensorField> {
    check_dimension(f.ndim())?;
    curl_bar_from_density(&rot_bar(f))
}

/// Outer curl of a rank-`(n − 2)` tensor:
/// `(curl T)_k = Σ_m Σ_{e increasing} ε_{m,e,k} ∂T_e/∂x_m`.
///
/// With this normalization `(−1)ⁿ curl curl̄ f = ROT ROT̄ f = Δf − grad div f`.
pub fn curl_of_tensor(t: &DualTensorField) -> VectorField {
    let grid = t.grid();
    let n = grid.ndim();
    let comps = (0..n)
        .map(|k| {
            let mut acc = ScalarField::zeros(grid);
            for (e, te) in t.indices().iter().zip(t.stored()) {
                for m in 0..n {
                    let mut full = Vec::with_capacity(n);
                    full.push(m);
                    full.extend_from_slice(e);
                    full.push(k);
                    let s = epsilon(&full);
                    if s == 0 {
                        continue;
                    }
                    let d = partial(te, m).expect("axis in range");
                    for (o, &v) in acc.values_mut().iter_mut().zip(d.values()) {
                        *o += f64::from(s) * v;
                    }
                }
            }
            acc
        })
        .collect();
    VectorField::new(comps).expect("components share the grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Region;
    use crate::ops::{divergence, gradient, rot};

    #[test]
    fn epsilon_values() {
        assert_eq!(epsilon(&[0, 1]), 1);
        assert_eq!(epsilon(&[1, 0]), -1);
        assert_eq!(epsilon(&[0, 1, 2]), 1);
        assert_eq!(epsilon(&[1, 2, 0]), 1);
        assert_eq!(epsilon(&[0, 2, 1]), -1);
        assert_eq!(epsilon(&[0, 0, 1]), 0);
        assert_eq!(epsilon(&[0, 1, 3]), 0);
    }

    #[test]
    fn epsilon_five_dimensional_sign_placement() {
        // ε_{e,5,4} in one-based labels is ε_{e,4,3} here
        for e in [[0, 1, 2], [1, 2, 0], [2, 0, 1]] {
            assert_eq!(epsilon(&[e[0], e[1], e[2], 4, 3]), -1);
        }
        for e in [[0, 2, 1], [1, 0, 2], [2, 1, 0]] {
            assert_eq!(epsilon(&[e[0], e[1], e[2], 4, 3]), 1);
        }
    }

    #[test]
    fn index_sets() {
        assert_eq!(increasing_indices(2, 0), vec![Vec::<usize>::new()]);
        assert_eq!(increasing_indices(3, 1), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(increasing_indices(4, 2).len(), 6);
    }

    #[test]
    fn spin_examples() {
        let g2 = GridSpec::cube(2, 9, -1.0, 1.0).unwrap();
        let spin = VectorField::from_fn(&g2, |x, out| {
            out[0] = -x[1];
            out[1] = x[0];
        });
        let c = curl_bar(&spin).unwrap();
        assert!(c.stored()[0].values().iter().all(|&v| v == 2.0));

        let g3 = GridSpec::cube(3, 9, -1.0, 1.0).unwrap();
        let spin = VectorField::from_fn(&g3, |x, out| {
            out[0] = -x[1];
            out[1] = x[0];
            out[2] = 0.0;
        });
        let c = curl_bar(&spin).unwrap();
        assert!(c
            .component(&[0])
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        assert!(c
            .component(&[1])
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        assert!(c
            .component(&[2])
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 2.0));
    }

    #[test]
    fn rejects_five_dimensions() {
        let g = GridSpec::cube(5, 3, -1.0, 1.0).unwrap();
        assert!(matches!(
            curl_bar(&VectorField::zeros(&g)),
            Err(Error::UnsupportedDimension { n: 5, .. })
        ));
    }

    #[test]
    fn component_signs() {
        let g = GridSpec::cube(4, 4, -1.0, 1.0).unwrap();
        let f = VectorField::from_fn(&g, |x, out| {
            for (k, o) in out.iter_mut().enumerate() {
                *o = (x[(k + 1) % 4] * (k as f64 + 1.0)).sin();
            }
        });
        let c = curl_bar(&f).unwrap();
        assert_eq!(
            c.component(&[2, 0]).unwrap(),
            c.component(&[0, 2]).unwrap().neg()
        );
        assert_eq!(c.component(&[1, 1]).unwrap().max_abs(Region::All), 0.0);
        assert!(c.component(&[0, 4]).is_err());
    }

    #[test]
    fn curl_curl_bar_matches_rot_rot_bar() {
        for n in 2..=4 {
            let g = GridSpec::cube(n, if n == 4 { 9 } else { 13 }, -2.0, 2.0).unwrap();
            let f = VectorField::from_fn(&g, |x, out| {
                let e = (-x.iter().map(|v| v * v).sum::<f64>()).exp();
                for (k, o) in out.iter_mut().enumerate() {
                    *o = e * (1.0 + x[(k + 1) % n] + 0.5 * x[k] * x[(k + 2) % n]);
                }
            });
            let lhs = curl_of_tensor(&curl_bar(&f).unwrap());
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let rhs = rot(&rot_bar(&f));
            let diff = lhs.scale(sign).sub(&rhs).unwrap();
            let scale = f.max_abs(Region::All) / g.min_spacing().powi(2);
            assert!(
                diff.max_abs(Region::All) <= 16.0 * f64::EPSILON * scale,
                "n = {n}: {}",
                diff.max_abs(Region::All)
            );
        }
    }

    #[test]
    fn three_dimensional_curl_of_gradient_vanishes() {
        let g = GridSpec::cube(3, 11, -2.0, 2.0).unwrap();
        let p = ScalarField::from_fn(&g, |x| (x[0] * x[1]).sin() + x[2] * x[2] * x[0]);
        let c = curl_bar(&gradient(&p)).unwrap();
        let scale = p.max_abs(Region::All) / g.min_spacing().powi(2);
        for v in c.stored() {
            assert!(v.max_abs(Region::Interior(1)) <= 16.0 * f64::EPSILON * scale);
        }
        // and the outer curl is source free
        let d = divergence(&curl_of_tensor(&c));
        assert!(d.max_abs(Region::Interior(2)) <= 16.0 * f64::EPSILON * scale / g.min_spacing());
    }
}

//! Uniform n-dimensional grids and the fields sampled on them.
//!
//! Storage is row-major with the last axis fastest. Axes and component
//! indices are zero-based throughout the library.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry of a uniform Cartesian grid in `n >= 2` dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridDescriptor", into = "GridDescriptor")]
pub struct GridSpec {
    dims: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
}

/// Serialized form of a [`GridSpec`]; spacing and strides are derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDescriptor {
    pub dims: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl TryFrom<GridDescriptor> for GridSpec {
    type Error = Error;

    fn try_from(d: GridDescriptor) -> Result<Self> {
        GridSpec::new(d.dims, d.lower, d.upper)
    }
}

impl From<GridSpec> for GridDescriptor {
    fn from(g: GridSpec) -> Self {
        GridDescriptor {
            dims: g.dims,
            lower: g.lower,
            upper: g.upper,
        }
    }
}

impl GridSpec {
    pub fn new(dims: Vec<usize>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = dims.len();
        if n < 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be at least 2, got {n}"
            )));
        }
        if lower.len() != n || upper.len() != n {
            return Err(Error::InvalidGrid(format!(
                "expected {n} bounds per side, got {} lower and {} upper",
                lower.len(),
                upper.len()
            )));
        }
        for k in 0..n {
            if dims[k] < 3 {
                return Err(Error::InvalidGrid(format!(
                    "axis {k} has {} nodes, need at least 3",
                    dims[k]
                )));
            }
            if !lower[k].is_finite() || !upper[k].is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "axis {k} has non-finite bounds"
                )));
            }
            if upper[k] <= lower[k] {
                return Err(Error::InvalidGrid(format!(
                    "axis {k}: upper bound {} not above lower bound {}",
                    upper[k], lower[k]
                )));
            }
        }
        let spacing = (0..n)
            .map(|k| (upper[k] - lower[k]) / (dims[k] - 1) as f64)
            .collect();
        let mut strides = vec![1; n];
        for k in (0..n - 1).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Ok(GridSpec {
            dims,
            lower,
            upper,
            spacing,
            strides,
        })
    }

    /// Grid with `points` nodes on every axis spanning `[lo, hi]^n`.
    pub fn cube(n: usize, points: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![points; n], vec![lo; n], vec![hi; n])
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume of one node-centered cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Coordinate of node `i` along `axis`.
    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.lower[axis] + i as f64 * self.spacing[axis]
    }

    /// Index of the node along `axis` for flat index `flat`.
    #[inline]
    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        (flat / self.strides[axis]) % self.dims[axis]
    }

    pub fn multi_index(&self, flat: usize, out: &mut [usize]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.axis_index(flat, k);
        }
    }

    pub fn flat_index(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.ndim() {
            return Err(Error::IndexOutOfRange(format!(
                "node index has {} entries, grid has {} axes",
                idx.len(),
                self.ndim()
            )));
        }
        let mut flat = 0;
        for (k, (&i, &d)) in idx.iter().zip(&self.dims).enumerate() {
            if i >= d {
                return Err(Error::IndexOutOfRange(format!(
                    "node index {i} on axis {k} exceeds {d} nodes"
                )));
            }
            flat += i * self.strides[k];
        }
        Ok(flat)
    }

    /// Physical coordinates of the node at `flat`.
    pub fn point(&self, flat: usize, out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.coord(k, self.axis_index(flat, k));
        }
    }

    /// True when the node is at least `margin` nodes away from every face.
    #[inline]
    pub fn is_interior(&self, flat: usize, margin: usize) -> bool {
        (0..self.ndim()).all(|k| {
            let i = self.axis_index(flat, k);
            i >= margin && i + margin < self.dims[k]
        })
    }

    /// True when the node lies on any face of the grid.
    pub fn is_boundary(&self, flat: usize) -> bool {
        !self.is_interior(flat, 1)
    }

    /// Same bounds with every cell halved: `2N - 1` nodes per axis.
    pub fn refined(&self) -> GridSpec {
        let dims = self.dims.iter().map(|&d| 2 * d - 1).collect();
        GridSpec::new(dims, self.lower.clone(), self.upper.clone())
            .expect("refining a valid grid yields a valid grid")
    }

    /// Enlarged grid with identical spacing whose extent along each axis is at
    /// least `factor` times the original. Returns the grid and the node offset
    /// of the original grid inside it.
    pub fn padded(&self, factor: f64) -> Result<(GridSpec, Vec<usize>)> {
        if !(factor >= 1.0) || !factor.is_finite() {
            return Err(Error::Domain(format!(
                "padding factor must be finite and >= 1, got {factor}"
            )));
        }
        let n = self.ndim();
        let mut dims = Vec::with_capacity(n);
        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        let mut offset = Vec::with_capacity(n);
        for k in 0..n {
            let cells = (self.dims[k] - 1) as f64;
            let extra = (((factor - 1.0) * cells) / 2.0).ceil() as usize;
            let h = self.spacing[k];
            dims.push(self.dims[k] + 2 * extra);
            lower.push(self.lower[k] - extra as f64 * h);
            upper.push(self.upper[k] + extra as f64 * h);
            offset.push(extra);
        }
        Ok((GridSpec::new(dims, lower, upper)?, offset))
    }

    /// Geometric equality up to rounding in the derived spacing.
    pub fn same_geometry(&self, other: &GridSpec) -> bool {
        self.dims == other.dims && self.lower == other.lower && self.upper == other.upper
    }
}

/// Which nodes enter a norm or a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    All,
    /// Nodes at least this many nodes away from every face.
    Interior(usize),
}

impl Region {
    #[inline]
    pub fn contains(&self, grid: &GridSpec, flat: usize) -> bool {
        match *self {
            Region::All => true,
            Region::Interior(m) => grid.is_interior(flat, m),
        }
    }
}

/// One real value per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        ScalarField {
            values: vec![0.0; grid.len()],
            grid: grid.clone(),
        }
    }

    pub fn constant(grid: &GridSpec, c: f64) -> Self {
        ScalarField {
            values: vec![c; grid.len()],
            grid: grid.clone(),
        }
    }

    /// Samples `f` at every node coordinate.
    pub fn from_fn(grid: &GridSpec, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let mut x = vec![0.0; grid.ndim()];
        let values = (0..grid.len())
            .map(|flat| {
                grid.point(flat, &mut x);
                f(&x)
            })
            .collect();
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, node: &[usize]) -> Result<f64> {
        Ok(self.values[self.grid.flat_index(node)?])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !self.grid.same_geometry(&other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(ScalarField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn neg(&self) -> Self {
        self.map(|v| -v)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Sum of squares over the region (unweighted).
    pub fn sum_squares(&self, region: Region) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| region.contains(&self.grid, *i))
            .map(|(_, v)| v * v)
            .sum()
    }

    /// Discrete L² norm `sqrt(Σ v² · cell volume)` over the region.
    pub fn l2_norm(&self, region: Region) -> f64 {
        (self.sum_squares(region) * self.grid.cell_volume()).sqrt()
    }

    pub fn max_abs(&self, region: Region) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| region.contains(&self.grid, *i))
            .fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    pub fn mean(&self, region: Region) -> f64 {
        let (sum, count) = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| region.contains(&self.grid, *i))
            .fold((0.0, 0usize), |(s, c), (_, v)| (s + v, c + 1));
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    /// Extracts the sub-block of `target`'s shape starting at node `offset`.
    pub fn crop(&self, target: &GridSpec, offset: &[usize]) -> Result<Self> {
        let n = self.grid.ndim();
        if target.ndim() != n || offset.len() != n {
            return Err(Error::GridMismatch);
        }
        for k in 0..n {
            if offset[k] + target.dims()[k] > self.grid.dims()[k] {
                return Err(Error::IndexOutOfRange(format!(
                    "crop window exceeds axis {k}"
                )));
            }
        }
        let mut idx = vec![0; n];
        let values = (0..target.len())
            .map(|flat| {
                target.multi_index(flat, &mut idx);
                let src: usize = (0..n)
                    .map(|k| (idx[k] + offset[k]) * self.grid.strides()[k])
                    .sum();
                self.values[src]
            })
            .collect();
        ScalarField::new(target.clone(), values)
    }
}

/// `n` scalar components on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let grid = components
            .first()
            .ok_or_else(|| Error::InvalidGrid("vector field without components".into()))?
            .grid()
            .clone();
        if components.len() != grid.ndim() {
            return Err(Error::InvalidGrid(format!(
                "{} components on a {}-dimensional grid",
                components.len(),
                grid.ndim()
            )));
        }
        if components.iter().any(|c| !c.grid().same_geometry(&grid)) {
            return Err(Error::GridMismatch);
        }
        Ok(VectorField { grid, components })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        VectorField {
            grid: grid.clone(),
            components: (0..grid.ndim()).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn(&[f64], &mut [f64])) -> Self {
        let n = grid.ndim();
        let mut comps = vec![Vec::with_capacity(grid.len()); n];
        let mut x = vec![0.0; n];
        let mut out = vec![0.0; n];
        for flat in 0..grid.len() {
            grid.point(flat, &mut x);
            f(&x, &mut out);
            for (c, &v) in comps.iter_mut().zip(&out) {
                c.push(v);
            }
        }
        VectorField {
            grid: grid.clone(),
            components: comps
                .into_iter()
                .map(|v| ScalarField {
                    grid: grid.clone(),
                    values: v,
                })
                .collect(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn ndim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, k: usize) -> &ScalarField {
        &self.components[k]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    pub fn zip_with(
        &self,
        other: &VectorField,
        f: impl Fn(f64, f64) -> f64 + Copy,
    ) -> Result<Self> {
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.zip_with(b, f))
            .collect::<Result<Vec<_>>>()?;
        VectorField::new(components)
    }

    pub fn add(&self, other: &VectorField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &VectorField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        VectorField {
            grid: self.grid.clone(),
            components: self.components.iter().map(|s| s.scale(c)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(ScalarField::is_finite)
    }

    pub fn l2_norm(&self, region: Region) -> f64 {
        let ss: f64 = self.components.iter().map(|c| c.sum_squares(region)).sum();
        (ss * self.grid.cell_volume()).sqrt()
    }

    pub fn max_abs(&self, region: Region) -> f64 {
        self.components
            .iter()
            .fold(0.0, |m, c| m.max(c.max_abs(region)))
    }

    pub fn crop(&self, target: &GridSpec, offset: &[usize]) -> Result<Self> {
        VectorField::new(
            self.components
                .iter()
                .map(|c| c.crop(target, offset))
                .collect::<Result<_>>()?,
        )
    }
}

/// Number of unordered index pairs `i < j` among `n` axes.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Position of the pair `(i, j)`, `i < j`, in lexicographic order.
pub fn pair_position(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    // pairs (0,1)..(0,n-1) come first, then (1,2).., etc.
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// All pairs `(i, j)` with `i < j` in lexicographic order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// Field of antisymmetric `n x n` matrices, storing only the `i < j` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct AntisymMatrixField {
    grid: GridSpec,
    upper: Vec<ScalarField>,
}

impl AntisymMatrixField {
    /// `upper` holds the `(i, j)`, `i < j` components in lexicographic order.
    pub fn new(grid: &GridSpec, upper: Vec<ScalarField>) -> Result<Self> {
        let expected = pair_count(grid.ndim());
        if upper.len() != expected {
            return Err(Error::InvalidGrid(format!(
                "antisymmetric field needs {expected} components, got {}",
                upper.len()
            )));
        }
        if upper.iter().any(|c| !c.grid().same_geometry(grid)) {
            return Err(Error::GridMismatch);
        }
        Ok(AntisymMatrixField {
            grid: grid.clone(),
            upper,
        })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        AntisymMatrixField {
            grid: grid.clone(),
            upper: (0..pair_count(grid.ndim()))
                .map(|_| ScalarField::zeros(grid))
                .collect(),
        }
    }

    /// Field whose only nonzero plane is `(i, j)` holding `value` (sign-adjusted
    /// when `i > j`).
    pub fn single_plane(value: ScalarField, i: usize, j: usize) -> Result<Self> {
        let grid = value.grid().clone();
        let n = grid.ndim();
        check_pair(n, i, j)?;
        if i == j {
            return Err(Error::Domain(format!("({i}, {i}) is not a rotation plane")));
        }
        let mut m = Self::zeros(&grid);
        let (a, b, v) = if i < j {
            (i, j, value)
        } else {
            (j, i, value.neg())
        };
        m.upper[pair_position(n, a, b)] = v;
        Ok(m)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn ndim(&self) -> usize {
        self.grid.ndim()
    }

    /// Stored components in lexicographic `(i, j)` order.
    pub fn stored(&self) -> &[ScalarField] {
        &self.upper
    }

    pub fn stored_mut(&mut self) -> &mut [ScalarField] {
        &mut self.upper
    }

    pub fn into_stored(self) -> Vec<ScalarField> {
        self.upper
    }

    /// The stored field for `i < j`.
    pub fn upper(&self, i: usize, j: usize) -> Result<&ScalarField> {
        check_pair(self.ndim(), i, j)?;
        if i >= j {
            return Err(Error::IndexOutOfRange(format!(
                "({i}, {j}) is not an upper-triangle pair"
            )));
        }
        Ok(&self.upper[pair_position(self.ndim(), i, j)])
    }

    /// Entry `(i, j)` at the node with flat index `flat`.
    #[inline]
    pub fn get_flat(&self, i: usize, j: usize, flat: usize) -> Result<f64> {
        check_pair(self.ndim(), i, j)?;
        let n = self.ndim();
        Ok(match i.cmp(&j) {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Less => self.upper[pair_position(n, i, j)].values()[flat],
            std::cmp::Ordering::Greater => -self.upper[pair_position(n, j, i)].values()[flat],
        })
    }

    /// Entry `(i, j)` at a multi-index node, with `m[j,i] = -m[i,j]` and a
    /// zero diagonal.
    pub fn get(&self, i: usize, j: usize, node: &[usize]) -> Result<f64> {
        let flat = self.grid.flat_index(node)?;
        self.get_flat(i, j, flat)
    }

    /// Full component `(i, j)` as a scalar field (negated copy below the
    /// diagonal, zeros on it).
    pub fn component(&self, i: usize, j: usize) -> Result<ScalarField> {
        check_pair(self.ndim(), i, j)?;
        let n = self.ndim();
        Ok(match i.cmp(&j) {
            std::cmp::Ordering::Equal => ScalarField::zeros(&self.grid),
            std::cmp::Ordering::Less => self.upper[pair_position(n, i, j)].clone(),
            std::cmp::Ordering::Greater => self.upper[pair_position(n, j, i)].neg(),
        })
    }

    pub fn max_abs(&self, region: Region) -> f64 {
        self.upper.iter().fold(0.0, |m, c| m.max(c.max_abs(region)))
    }

    pub fn is_finite(&self) -> bool {
        self.upper.iter().all(ScalarField::is_finite)
    }

    pub fn crop(&self, target: &GridSpec, offset: &[usize]) -> Result<Self> {
        AntisymMatrixField::new(
            target,
            self.upper
                .iter()
                .map(|c| c.crop(target, offset))
                .collect::<Result<_>>()?,
        )
    }
}

fn check_pair(n: usize, i: usize, j: usize) -> Result<()> {
    if i >= n || j >= n {
        return Err(Error::IndexOutOfRange(format!(
            "matrix index ({i}, {j}) outside 0..{n}"
        )));
    }
    Ok(())
}

/// Source density `γ` and rotation density `ρ` of a vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityBundle {
    pub gamma: ScalarField,
    pub rho: AntisymMatrixField,
}

impl DensityBundle {
    pub fn new(gamma: ScalarField, rho: AntisymMatrixField) -> Result<Self> {
        if !gamma.grid().same_geometry(rho.grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(DensityBundle { gamma, rho })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        DensityBundle {
            gamma: ScalarField::zeros(grid),
            rho: AntisymMatrixField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.gamma.grid()
    }
}

/// Source potential `G` and rotation potential `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialBundle {
    /// `G`
    pub source: ScalarField,
    /// `R`
    pub rotation: AntisymMatrixField,
}

impl PotentialBundle {
    pub fn new(source: ScalarField, rotation: AntisymMatrixField) -> Result<Self> {
        if !source.grid().same_geometry(rotation.grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(PotentialBundle { source, rotation })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        PotentialBundle {
            source: ScalarField::zeros(grid),
            rotation: AntisymMatrixField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.source.grid()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid3() -> GridSpec {
        GridSpec::cube(3, 4, -1.0, 1.0).unwrap()
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(GridSpec::new(vec![5], vec![0.0], vec![1.0]).is_err());
        assert!(GridSpec::new(vec![5, 2], vec![0.0; 2], vec![1.0; 2]).is_err());
        assert!(GridSpec::new(vec![5, 5], vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(GridSpec::new(vec![5, 5], vec![0.0, f64::NAN], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn spacing_and_strides() {
        let g = GridSpec::new(vec![3, 5, 4], vec![0.0, -1.0, 0.0], vec![1.0, 1.0, 3.0]).unwrap();
        assert_eq!(g.spacing(), &[0.5, 0.5, 1.0]);
        assert_eq!(g.strides(), &[20, 4, 1]);
        let flat = g.flat_index(&[2, 3, 1]).unwrap();
        assert_eq!(flat, 2 * 20 + 3 * 4 + 1);
        let mut idx = [0; 3];
        g.multi_index(flat, &mut idx);
        assert_eq!(idx, [2, 3, 1]);
        assert!(g.flat_index(&[3, 0, 0]).is_err());
    }

    #[test]
    fn antisym_reads() {
        let g = grid3();
        let p = [1, 2, 3];
        let flat = g.flat_index(&p).unwrap();
        let mut m = AntisymMatrixField::zeros(&g);
        m.stored_mut()[pair_position(3, 0, 1)].values_mut()[flat] = 5.0;
        m.stored_mut()[pair_position(3, 0, 2)].values_mut()[flat] = 0.25;
        assert_eq!(m.get(1, 0, &p).unwrap(), -5.0);
        assert_eq!(m.get(0, 1, &p).unwrap(), 5.0);
        assert_eq!(m.get(2, 2, &p).unwrap(), 0.0);
        assert_eq!(m.get(0, 2, &p).unwrap(), 0.25);
        assert!(m.get(3, 0, &p).is_err());
    }

    #[test]
    fn stored_component_count_is_binomial() {
        for n in 2..=6 {
            let g = GridSpec::cube(n, 3, 0.0, 1.0).unwrap();
            let m = AntisymMatrixField::zeros(&g);
            assert_eq!(m.stored().len(), n * (n - 1) / 2);
            let listed: Vec<_> = pairs(n).collect();
            assert_eq!(listed.len(), m.stored().len());
            for (pos, &(i, j)) in listed.iter().enumerate() {
                assert_eq!(pair_position(n, i, j), pos);
            }
        }
        assert_eq!(pair_count(3), 3);
    }

    #[test]
    fn single_plane_respects_order() {
        let g = grid3();
        let v = ScalarField::constant(&g, 2.0);
        let m = AntisymMatrixField::single_plane(v, 2, 0).unwrap();
        assert_eq!(m.get(0, 2, &[0, 0, 0]).unwrap(), -2.0);
        assert_eq!(m.get(2, 0, &[0, 0, 0]).unwrap(), 2.0);
        assert!(AntisymMatrixField::single_plane(ScalarField::zeros(&g), 1, 1).is_err());
    }

    #[test]
    fn padding_keeps_spacing_and_crop_recovers() {
        let g = GridSpec::cube(2, 9, -1.0, 1.0).unwrap();
        let (big, off) = g.padded(1.5).unwrap();
        assert_eq!(big.spacing(), g.spacing());
        assert_eq!(off, vec![2, 2]);
        assert_eq!(big.dims(), &[13, 13]);
        let s = ScalarField::from_fn(&big, |x| x[0] + 10.0 * x[1]);
        let c = s.crop(&g, &off).unwrap();
        let direct = ScalarField::from_fn(&g, |x| x[0] + 10.0 * x[1]);
        for (a, b) in c.values().iter().zip(direct.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn interior_regions() {
        let g = GridSpec::cube(2, 5, 0.0, 1.0).unwrap();
        let count = |m| (0..g.len()).filter(|&f| g.is_interior(f, m)).count();
        assert_eq!(count(0), 25);
        assert_eq!(count(1), 9);
        assert_eq!(count(2), 1);
    }
}

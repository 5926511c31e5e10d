//! Newton potential `𝒩q(x) = ∫ K(x, ξ) q(ξ) dξ` by midpoint quadrature.
//!
//! The renormalized Laplace kernel is
//!
//! ```text
//! n = 2:  K(x, ξ) = (ln|x − ξ| − ln|ξ|) / 2π
//! n ≠ 2:  K(x, ξ) = (|x − ξ|^{2−n} − |ξ|^{2−n}) / (n (2 − n) Vₙ)
//! ```
//!
//! Its second term does not depend on `x`, so a discrete potential is a
//! translation-invariant convolution minus one constant
//! `C = Σ_ξ w k(|ξ|) q(ξ)`. Both singular cells (`ξ = x` in the convolution
//! and `ξ = 0` in `C`) are treated by the same [`SelfCell`] policy.
//!
//! Two backends share that contract. [`Backend::Direct`] sums over a
//! precomputed kernel table in a fixed order per output node and is the
//! reference. [`Backend::Fft`] performs the same convolution as a circular
//! one on a padded grid.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    AntisymMatrixField, DensityBundle, GridSpec, PotentialBundle, Region, ScalarField,
};

/// Volume of the unit `n`-ball via `V_n = 2π/n · V_{n−2}`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Dimension-dependent constants of the Laplace kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub n: usize,
    pub unit_ball_volume: f64,
}

impl KernelParams {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::UnsupportedDimension {
                n,
                reason: "the kernel is defined for n >= 2",
            });
        }
        Ok(KernelParams {
            n,
            unit_ball_volume: unit_ball_volume(n),
        })
    }

    /// Radial fundamental solution `k(r)`, so that `K(x, ξ) = k(|x−ξ|) − k(|ξ|)`.
    pub fn radial(&self, r: f64) -> f64 {
        if self.n == 2 {
            r.ln() / (2.0 * PI)
        } else {
            let n = self.n as f64;
            r.powf(2.0 - n) / (n * (2.0 - n) * self.unit_ball_volume)
        }
    }

    /// `∫_{|y| < a} k(|y|) dy` for the ball of volume `cell_volume`.
    pub fn ball_integral(&self, cell_volume: f64) -> f64 {
        let n = self.n as f64;
        let a = (cell_volume / self.unit_ball_volume).powf(1.0 / n);
        if self.n == 2 {
            a * a * a.ln() / 2.0 - a * a / 4.0
        } else {
            a * a / (2.0 * (2.0 - n))
        }
    }
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|c| c * c).sum::<f64>().sqrt()
}

/// Renormalized kernel `K(x, ξ)`.
pub fn kernel(x: &[f64], xi: &[f64], p: &KernelParams) -> Result<f64> {
    if x.len() != p.n || xi.len() != p.n {
        return Err(Error::IndexOutOfRange(format!(
            "points of length {} and {} for n = {}",
            x.len(),
            xi.len(),
            p.n
        )));
    }
    let dist = norm(x.iter().zip(xi).map(|(a, b)| a - b));
    let r = norm(xi.iter().copied());
    if dist == 0.0 {
        return Err(Error::Singular("x = ξ"));
    }
    if r == 0.0 {
        return Err(Error::Singular("ξ = 0"));
    }
    Ok(p.radial(dist) - p.radial(r))
}

/// Treatment of the integrable singular cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelfCell {
    /// Drop the singular cell.
    Exclude,
    /// Replace it by the exact kernel integral over an equal-volume ball.
    Ball,
}

impl std::str::FromStr for SelfCell {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exclude" => Ok(SelfCell::Exclude),
            "ball" => Ok(SelfCell::Ball),
            _ => Err(Error::Domain(format!("unknown self-cell policy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Direct,
    Fft,
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Backend::Direct),
            "fft" => Ok(Backend::Fft),
            _ => Err(Error::Domain(format!("unknown backend `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub self_cell: SelfCell,
    pub backend: Backend,
    /// Subtract the `x`-independent counterterm. Disabling it changes the
    /// potential by a constant only.
    pub counterterm: bool,
    /// Warn when `max|q|` on the faces exceeds this fraction of `max|q|`.
    pub decay_fraction: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            self_cell: SelfCell::Ball,
            backend: Backend::Direct,
            counterterm: true,
            decay_fraction: 1e-2,
        }
    }
}

impl QuadratureConfig {
    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_self_cell(mut self, self_cell: SelfCell) -> Self {
        self.self_cell = self_cell;
        self
    }
}

/// Which fundamental solution is convolved.
#[derive(Debug, Clone, Copy, PartialEq)]
enum KernelKind {
    Laplace(KernelParams),
    /// `1 / (4π|x − ξ|)` without counterterm, `n = 3`.
    Classical,
}

impl KernelKind {
    fn radial(&self, r: f64) -> f64 {
        match self {
            KernelKind::Laplace(p) => p.radial(r),
            KernelKind::Classical => 1.0 / (4.0 * PI * r),
        }
    }

    fn ball_integral(&self, cell_volume: f64) -> f64 {
        match self {
            KernelKind::Laplace(p) => p.ball_integral(cell_volume),
            KernelKind::Classical => {
                let a = (cell_volume / unit_ball_volume(3)).cbrt();
                a * a / 2.0
            }
        }
    }

    fn has_counterterm(&self) -> bool {
        matches!(self, KernelKind::Laplace(_))
    }
}

struct FftPlan {
    dims: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    kernel_hat: Vec<Complex<f64>>,
}

/// Quadrature operator bound to one grid and configuration.
///
/// Construction samples the kernel once; [`NewtonOperator::apply`] can then be
/// called for every density component.
pub struct NewtonOperator {
    grid: GridSpec,
    cfg: QuadratureConfig,
    kind: KernelKind,
    /// `w·k(|d h|)` on offsets `d_k ∈ [−(N_k−1), N_k−1]`.
    table: Vec<f64>,
    table_strides: Vec<usize>,
    fft: Option<FftPlan>,
}

impl std::fmt::Debug for NewtonOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NewtonOperator")
            .field("grid", &self.grid)
            .field("cfg", &self.cfg)
            .field("kind", &self.kind)
            .finish_non_exhaustive()
    }
}

fn strides_for(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Smallest `m ≥ n` with no prime factor above 5.
fn next_smooth(n: usize) -> usize {
    (n..)
        .find(|&m| {
            let mut r = m;
            for p in [2, 3, 5] {
                while r % p == 0 {
                    r /= p;
                }
            }
            r == 1
        })
        .expect("unbounded search")
}

/// Four-way unrolled dot product with a fixed summation order.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        s[0] += x[0] * y[0];
        s[1] += x[1] * y[1];
        s[2] += x[2] * y[2];
        s[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (s[0] + s[1]) + (s[2] + s[3]) + tail
}

impl NewtonOperator {
    /// Operator for the renormalized Laplace kernel.
    pub fn new(grid: &GridSpec, cfg: QuadratureConfig) -> Result<Self> {
        let kind = KernelKind::Laplace(KernelParams::new(grid.ndim())?);
        Self::build(grid, cfg, kind)
    }

    /// Operator for the classical `1/(4π|x − ξ|)` kernel in three dimensions.
    pub fn classical(grid: &GridSpec, cfg: QuadratureConfig) -> Result<Self> {
        if grid.ndim() != 3 {
            return Err(Error::UnsupportedDimension {
                n: grid.ndim(),
                reason: "the classical kernel is three-dimensional",
            });
        }
        Self::build(grid, cfg, KernelKind::Classical)
    }

    fn build(grid: &GridSpec, cfg: QuadratureConfig, kind: KernelKind) -> Result<Self> {
        let n = grid.ndim();
        let dims = grid.dims();
        let h = grid.spacing();
        let w = grid.cell_volume();
        let table_dims: Vec<usize> = dims.iter().map(|&d| 2 * d - 1).collect();
        let table_strides = strides_for(&table_dims);
        let total: usize = table_dims.iter().product();
        let self_value = match cfg.self_cell {
            SelfCell::Exclude => 0.0,
            SelfCell::Ball => kind.ball_integral(w),
        };
        // k depends on |d| only, so the table is even along every axis.
        let table: Vec<f64> = (0..total)
            .into_par_iter()
            .map(|t| {
                let mut r2 = 0.0;
                let mut rem = t;
                for k in 0..n {
                    let tk = rem / table_strides[k];
                    rem %= table_strides[k];
                    let d = tk as f64 - (dims[k] - 1) as f64;
                    r2 += (d * h[k]) * (d * h[k]);
                }
                if r2 == 0.0 {
                    self_value
                } else {
                    w * kind.radial(r2.sqrt())
                }
            })
            .collect();
        let mut op = NewtonOperator {
            grid: grid.clone(),
            cfg,
            kind,
            table,
            table_strides,
            fft: None,
        };
        if cfg.backend == Backend::Fft {
            op.fft = Some(op.plan_fft());
        }
        Ok(op)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.cfg
    }

    fn plan_fft(&self) -> FftPlan {
        let dims: Vec<usize> = self
            .grid
            .dims()
            .iter()
            .map(|&d| next_smooth(2 * d - 1))
            .collect();
        let mut planner = FftPlanner::new();
        let forward = dims.iter().map(|&l| planner.plan_fft_forward(l)).collect();
        let inverse = dims.iter().map(|&l| planner.plan_fft_inverse(l)).collect();
        let strides = strides_for(&dims);
        let total: usize = dims.iter().product();
        let gdims = self.grid.dims();
        let mut data = vec![Complex::new(0.0, 0.0); total];
        // wrap each table offset d into the circular index d mod P
        let mut idx = vec![0usize; dims.len()];
        for (t, &v) in self.table.iter().enumerate() {
            let mut rem = t;
            for k in 0..dims.len() {
                let tk = rem / self.table_strides[k];
                rem %= self.table_strides[k];
                let d = tk as isize - (gdims[k] as isize - 1);
                idx[k] = d.rem_euclid(dims[k] as isize) as usize;
            }
            let flat: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
            data[flat] = Complex::new(v, 0.0);
        }
        let mut plan = FftPlan {
            dims,
            forward,
            inverse,
            kernel_hat: Vec::new(),
        };
        transform(&mut data, &plan.dims, &plan.forward);
        plan.kernel_hat = data;
        plan
    }

    /// Translation-invariant part `Σ_ξ T[x − ξ] q(ξ)` without the counterterm.
    pub fn convolve(&self, q: &ScalarField) -> Result<ScalarField> {
        if !q.grid().same_geometry(&self.grid) {
            return Err(Error::GridMismatch);
        }
        if !q.is_finite() {
            return Err(Error::NonFinite("density contains NaN or infinity".into()));
        }
        let values = match &self.fft {
            Some(plan) => self.convolve_fft(plan, q.values()),
            None => self.convolve_direct(q.values()),
        };
        ScalarField::new(self.grid.clone(), values)
    }

    fn convolve_direct(&self, q: &[f64]) -> Vec<f64> {
        let grid = &self.grid;
        let n = grid.ndim();
        let dims = grid.dims();
        let qs = grid.strides();
        let ts = &self.table_strides;
        let last = dims[n - 1];
        (0..grid.len())
            .into_par_iter()
            .map(|p| {
                let mut toff = last - 1 - grid.axis_index(p, n - 1);
                for k in 0..n - 1 {
                    toff += (grid.axis_index(p, k) + dims[k] - 1) * ts[k];
                }
                let mut counter = vec![0usize; n - 1];
                let mut qoff = 0usize;
                let mut acc = 0.0;
                'rows: loop {
                    acc += dot(&q[qoff..qoff + last], &self.table[toff..toff + last]);
                    let mut k = n - 1;
                    loop {
                        if k == 0 {
                            break 'rows;
                        }
                        k -= 1;
                        if counter[k] + 1 < dims[k] {
                            counter[k] += 1;
                            qoff += qs[k];
                            toff -= ts[k];
                            break;
                        }
                        counter[k] = 0;
                        qoff -= (dims[k] - 1) * qs[k];
                        toff += (dims[k] - 1) * ts[k];
                    }
                }
                acc
            })
            .collect()
    }

    fn convolve_fft(&self, plan: &FftPlan, q: &[f64]) -> Vec<f64> {
        let grid = &self.grid;
        let pstrides = strides_for(&plan.dims);
        let total: usize = plan.dims.iter().product();
        let mut data = vec![Complex::new(0.0, 0.0); total];
        let mut idx = vec![0usize; grid.ndim()];
        for (p, &v) in q.iter().enumerate() {
            grid.multi_index(p, &mut idx);
            let flat: usize = idx.iter().zip(&pstrides).map(|(i, s)| i * s).sum();
            data[flat] = Complex::new(v, 0.0);
        }
        transform(&mut data, &plan.dims, &plan.forward);
        for (d, k) in data.iter_mut().zip(&plan.kernel_hat) {
            *d *= k;
        }
        transform(&mut data, &plan.dims, &plan.inverse);
        let scale = 1.0 / total as f64;
        (0..grid.len())
            .map(|p| {
                grid.multi_index(p, &mut idx);
                let flat: usize = idx.iter().zip(&pstrides).map(|(i, s)| i * s).sum();
                data[flat].re * scale
            })
            .collect()
    }

    /// `C = Σ_ξ w k(|ξ|) q(ξ)`, with the node at the origin (if any) handled
    /// by the self-cell policy.
    pub fn counterterm(&self, q: &ScalarField) -> f64 {
        if !self.kind.has_counterterm() || !self.cfg.counterterm {
            return 0.0;
        }
        let grid = &self.grid;
        let w = grid.cell_volume();
        let tiny = 1e-12 * grid.min_spacing();
        let origin = match self.cfg.self_cell {
            SelfCell::Exclude => 0.0,
            SelfCell::Ball => self.kind.ball_integral(w),
        };
        let mut x = vec![0.0; grid.ndim()];
        let mut acc = 0.0;
        for (p, &v) in q.values().iter().enumerate() {
            grid.point(p, &mut x);
            let r = norm(x.iter().copied());
            let weight = if r <= tiny {
                origin
            } else {
                w * self.kind.radial(r)
            };
            acc += weight * v;
        }
        acc
    }

    /// `𝒩q` at every node.
    pub fn apply(&self, q: &ScalarField) -> Result<ScalarField> {
        let ratio = decay_ratio(q);
        if ratio > self.cfg.decay_fraction {
            log::warn!(
                "density does not decay toward the grid faces: face/overall max ratio {ratio:.3e} exceeds {:.3e}",
                self.cfg.decay_fraction
            );
        }
        let raw = self.convolve(q)?;
        let c = self.counterterm(q);
        Ok(if c == 0.0 { raw } else { raw.map(|v| v - c) })
    }
}

/// Applies a sequence of 1-D transforms along every axis of a row-major array.
fn transform(data: &mut [Complex<f64>], dims: &[usize], plans: &[Arc<dyn Fft<f64>>]) {
    let strides = strides_for(dims);
    let total = data.len();
    for (axis, plan) in plans.iter().enumerate() {
        let len = dims[axis];
        let stride = strides[axis];
        let mut line = vec![Complex::new(0.0, 0.0); len];
        let mut scratch = vec![Complex::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let outer = total / (len * stride);
        for o in 0..outer {
            for i in 0..stride {
                let base = o * len * stride + i;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}

/// `max|q|` over the faces divided by `max|q|` overall (zero for `q = 0`).
pub fn decay_ratio(q: &ScalarField) -> f64 {
    let all = q.max_abs(Region::All);
    if all == 0.0 {
        return 0.0;
    }
    let grid = q.grid();
    let face = q
        .values()
        .iter()
        .enumerate()
        .filter(|(p, _)| grid.is_boundary(*p))
        .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    face / all
}

/// One-shot `𝒩q`.
pub fn newton_apply(q: &ScalarField, cfg: &QuadratureConfig) -> Result<ScalarField> {
    NewtonOperator::new(q.grid(), *cfg)?.apply(q)
}

/// `F = {𝒩γ, 𝒩ρ}`, one operator shared by every component.
pub fn newton_apply_bundle(d: &DensityBundle, cfg: &QuadratureConfig) -> Result<PotentialBundle> {
    let op = NewtonOperator::new(d.grid(), *cfg)?;
    apply_bundle_with(&op, d)
}

pub fn apply_bundle_with(op: &NewtonOperator, d: &DensityBundle) -> Result<PotentialBundle> {
    let source = op.apply(&d.gamma)?;
    let upper = d
        .rho
        .stored()
        .iter()
        .map(|c| op.apply(c))
        .collect::<Result<Vec<_>>>()?;
    PotentialBundle::new(source, AntisymMatrixField::new(d.grid(), upper)?)
}

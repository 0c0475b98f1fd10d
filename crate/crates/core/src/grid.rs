//! Uniform truncated grids and complex fields living on them.
//!
//! Node ordering is fixed: the x axis (axis 0) is fastest, so the linear
//! index is `i0 + n0*(i1 + n1*(i2 + ...))`. This makes CSR layouts and all
//! serialized artifacts reproducible across runs.

use crate::error::{CoreError, Result};
use crate::geometry::{self, Point};
use crate::util::stable_sum;
use crate::C64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisBounds {
    pub min: f64,
    pub max: f64,
}

/// Complex absorbing layer parameters. The absorber `W ≥ 0` ramps
/// polynomially over `width` from each covered face; the `+x` face is never
/// covered (outgoing Stark direction is handled by box size).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapSpec {
    pub width: f64,
    pub strength: f64,
    #[serde(default = "default_cap_power")]
    pub power: i32,
    /// Also absorb on the `+x` face. Off by default: the outgoing Stark
    /// direction is normally handled by box size, but near-axis spectral
    /// parameters need the recirculating flux removed.
    #[serde(default)]
    pub plus_x: bool,
}

fn default_cap_power() -> i32 {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Per-axis interval; axis 0 is the field direction x.
    pub bounds: Vec<AxisBounds>,
    /// Uniform spacing on all axes.
    pub h: f64,
    /// Central-difference order: 2 or 4.
    pub stencil_order: usize,
    /// Optional absorbing layer.
    pub cap: Option<CapSpec>,
}

impl GridSpec {
    pub fn new_2d(xmin: f64, xmax: f64, ymin: f64, ymax: f64, h: f64) -> Self {
        Self {
            bounds: vec![
                AxisBounds { min: xmin, max: xmax },
                AxisBounds { min: ymin, max: ymax },
            ],
            h,
            stencil_order: 2,
            cap: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() < 2 {
            return Err(CoreError::InvalidGrid("dimension must be >= 2".into()));
        }
        if !(self.h > 0.0) {
            return Err(CoreError::InvalidGrid("spacing h must be positive".into()));
        }
        if self.stencil_order != 2 && self.stencil_order != 4 {
            return Err(CoreError::InvalidGrid(format!(
                "stencil_order must be 2 or 4, got {}",
                self.stencil_order
            )));
        }
        for (i, b) in self.bounds.iter().enumerate() {
            if !(b.max > b.min) || !b.min.is_finite() || !b.max.is_finite() {
                return Err(CoreError::InvalidGrid(format!("bad bounds on axis {i}")));
            }
            if self.axis_nodes(i) < 8 {
                return Err(CoreError::InvalidGrid(format!(
                    "axis {i} has fewer than 8 nodes"
                )));
            }
            let steps = (b.max - b.min) / self.h;
            if (steps - steps.round()).abs() > 1e-6 {
                return Err(CoreError::InvalidGrid(format!(
                    "axis {i} extent {} is not a multiple of h = {}",
                    b.max - b.min,
                    self.h
                )));
            }
            if let Some(cap) = &self.cap {
                if !(cap.width > 0.0) || !(cap.strength >= 0.0) {
                    return Err(CoreError::InvalidGrid("bad cap parameters".into()));
                }
                if cap.width >= 0.5 * (b.max - b.min) {
                    return Err(CoreError::InvalidGrid(format!(
                        "cap width must be less than half the box on axis {i}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn axis_nodes(&self, axis: usize) -> usize {
        let b = &self.bounds[axis];
        ((b.max - b.min) / self.h).round() as usize + 1
    }

    pub fn shape(&self) -> Vec<usize> {
        (0..self.dim()).map(|a| self.axis_nodes(a)).collect()
    }

    pub fn node_count(&self) -> usize {
        self.shape().iter().product()
    }

    /// Radius of the difference stencil (1 for 2nd order, 2 for 4th).
    pub fn stencil_radius(&self) -> usize {
        self.stencil_order / 2
    }

    pub fn axis_coord(&self, axis: usize, i: usize) -> f64 {
        self.bounds[axis].min + i as f64 * self.h
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut mi = vec![0usize; shape.len()];
        for (a, n) in shape.iter().enumerate() {
            mi[a] = idx % n;
            idx /= n;
        }
        mi
    }

    pub fn linear_index(&self, mi: &[usize]) -> usize {
        let shape = self.shape();
        let mut idx = 0usize;
        for a in (0..shape.len()).rev() {
            idx = idx * shape[a] + mi[a];
        }
        idx
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.axis_coord(a, i))
            .collect()
    }

    pub fn point(&self, idx: usize) -> Point {
        Point::from_coords(&self.coords(idx))
    }

    /// Boundary nodes are the `stencil_radius` layers next to each face;
    /// operator rows there act as the identity (Dirichlet truncation).
    pub fn is_boundary(&self, idx: usize) -> bool {
        let shape = self.shape();
        let rad = self.stencil_radius();
        for (a, &i) in self.multi_index(idx).iter().enumerate() {
            if i < rad || i + rad >= shape[a] {
                return true;
            }
        }
        false
    }

    /// Absorber value `W ≥ 0` at a node: polynomial ramp over the cap layer
    /// on every face except the `+x` face.
    pub fn cap_value(&self, idx: usize) -> f64 {
        let Some(cap) = &self.cap else { return 0.0 };
        let coords = self.coords(idx);
        let mut w = 0.0;
        for (a, &c) in coords.iter().enumerate() {
            let b = &self.bounds[a];
            let lo_depth = (b.min + cap.width - c).max(0.0);
            w += cap.strength * (lo_depth / cap.width).powi(cap.power);
            if a != 0 || cap.plus_x {
                let hi_depth = (c - (b.max - cap.width)).max(0.0);
                w += cap.strength * (hi_depth / cap.width).powi(cap.power);
            }
        }
        w
    }

    /// Quadrature weight `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }
}

/// Per-node geometry cache shared by operator assembly and norms.
#[derive(Debug, Clone)]
pub struct GeometryCache {
    pub d: usize,
    pub f: Vec<f64>,
    pub r: Vec<f64>,
    /// `x/r` per node, 0 at the origin.
    pub x_over_r: Vec<f64>,
    /// Gradient of f, flattened `N × d`.
    pub grad_f: Vec<f64>,
    pub grad_f_sq: Vec<f64>,
    pub lap_f: Vec<f64>,
    /// ℓ matrix, flattened `N × d × d`.
    pub ell: Vec<f64>,
    pub shell: Vec<u32>,
    pub in_far_region: Vec<bool>,
}

impl GeometryCache {
    pub fn build(grid: &GridSpec) -> Self {
        use rayon::prelude::*;
        let n = grid.node_count();
        let d = grid.dim();
        let evals: Vec<geometry::GeometryEval> = (0..n)
            .into_par_iter()
            .map(|idx| geometry::eval_geometry(&grid.point(idx)))
            .collect();
        let mut cache = GeometryCache {
            d,
            f: Vec::with_capacity(n),
            r: Vec::with_capacity(n),
            x_over_r: Vec::with_capacity(n),
            grad_f: Vec::with_capacity(n * d),
            grad_f_sq: Vec::with_capacity(n),
            lap_f: Vec::with_capacity(n),
            ell: Vec::with_capacity(n * d * d),
            shell: Vec::with_capacity(n),
            in_far_region: Vec::with_capacity(n),
        };
        for (idx, g) in evals.iter().enumerate() {
            cache.f.push(g.f);
            cache.r.push(g.r);
            let x = grid.coords(idx)[0];
            cache.x_over_r.push(if g.r > 0.0 { x / g.r } else { 0.0 });
            cache.grad_f.extend_from_slice(&g.grad_f);
            cache.grad_f_sq.push(g.grad_f_sq);
            cache.lap_f.push(g.lap_f);
            cache.ell.extend_from_slice(&g.ell);
            cache.shell.push(geometry::shell_index_of_f(g.f));
            cache.in_far_region.push(g.in_far_region);
        }
        cache
    }

    pub fn grad(&self, idx: usize, j: usize) -> f64 {
        self.grad_f[idx * self.d + j]
    }

    pub fn ell_at(&self, idx: usize, j: usize, k: usize) -> f64 {
        self.ell[idx * self.d * self.d + j * self.d + k]
    }

    /// Largest shell index met by the box.
    pub fn max_shell(&self) -> u32 {
        self.shell.iter().copied().max().unwrap_or(0)
    }
}

/// A complex-valued function sampled on a grid: the universal state carrier.
#[derive(Debug, Clone)]
pub struct GridField {
    pub grid: Arc<GridSpec>,
    pub values: Vec<C64>,
}

impl GridField {
    pub fn zeros(grid: Arc<GridSpec>) -> Self {
        let n = grid.node_count();
        Self { grid, values: vec![C64::new(0.0, 0.0); n] }
    }

    pub fn from_fn(grid: Arc<GridSpec>, mut f: impl FnMut(&[f64]) -> C64) -> Self {
        let n = grid.node_count();
        let values = (0..n).map(|idx| f(&grid.coords(idx))).collect();
        Self { grid, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Quadrature L² norm `(h^d Σ |ψ|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        let s = stable_sum(self.values.iter().map(|v| v.norm_sqr()));
        (s * self.grid.cell_volume()).sqrt()
    }

    /// Quadrature inner product `h^d Σ conj(φ) ψ`.
    pub fn inner(&self, other: &GridField) -> C64 {
        debug_assert_eq!(self.len(), other.len());
        let re = stable_sum(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a.conj() * b).re),
        );
        let im = stable_sum(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a.conj() * b).im),
        );
        C64::new(re, im) * self.grid.cell_volume()
    }

    /// Multiply pointwise by a real weight.
    pub fn weighted(&self, w: &[f64]) -> GridField {
        debug_assert_eq!(self.len(), w.len());
        GridField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(w)
                .map(|(v, w)| v * w)
                .collect(),
        }
    }

    pub fn axpy(&mut self, alpha: C64, other: &GridField) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn scaled(&self, alpha: C64) -> GridField {
        GridField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * alpha).collect(),
        }
    }

    pub fn sub(&self, other: &GridField) -> GridField {
        debug_assert_eq!(self.len(), other.len());
        GridField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn conj(&self) -> GridField {
        GridField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }
}

//! Pointwise geometry of the parabolic escape function
//! `f = χ(r+x) + [1−χ(r+x)](r+x)^{1/2}`.
//!
//! Everything downstream (shell norms, cutoffs, conjugate operator,
//! phases) is generated by `f`. Two evaluation branches are kept: closed
//! far-region formulas where `r+x ≥ 2`, and direct chain-rule
//! differentiation through the cutoff elsewhere; they agree on the overlap.

use crate::util::integrate;
use std::sync::OnceLock;

/// A point of `ℝ^d` split as `(x, y) ∈ ℝ × ℝ^{d−1}`, with the Stark field
/// pointing in the positive `x` direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: Vec<f64>,
}

impl Point {
    pub fn new(x: f64, y: Vec<f64>) -> Self {
        assert!(!y.is_empty(), "dimension must be at least 2");
        Self { x, y }
    }

    pub fn new_2d(x: f64, y: f64) -> Self {
        Self { x, y: vec![y] }
    }

    pub fn from_coords(c: &[f64]) -> Self {
        assert!(c.len() >= 2);
        Self { x: c[0], y: c[1..].to_vec() }
    }

    pub fn dim(&self) -> usize {
        1 + self.y.len()
    }

    /// Coordinate `j`, with `j = 0` the field direction.
    pub fn coord(&self, j: usize) -> f64 {
        if j == 0 {
            self.x
        } else {
            self.y[j - 1]
        }
    }

    pub fn radius(&self) -> f64 {
        let y2: f64 = self.y.iter().map(|v| v * v).sum();
        (self.x * self.x + y2).sqrt()
    }
}

// --- The smooth cutoff χ -------------------------------------------------

fn bump(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        (-1.0 / (t * (1.0 - t))).exp()
    }
}

fn bump_d1(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        let u = t - t * t;
        let phi1 = (1.0 - 2.0 * t) / (u * u);
        phi1 * bump(t)
    }
}

fn bump_d2(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        let u = t - t * t;
        let w = 1.0 - 2.0 * t;
        let phi1 = w / (u * u);
        let phi2 = -2.0 / (u * u) - 2.0 * w * w / (u * u * u);
        (phi2 + phi1 * phi1) * bump(t)
    }
}

fn bump_mass() -> f64 {
    static Z: OnceLock<f64> = OnceLock::new();
    *Z.get_or_init(|| integrate(bump, 0.0, 1.0))
}

/// The fixed smooth cutoff: `χ(s) = 1` for `s ≤ 1`, `0` for `s ≥ 2`,
/// nonincreasing, `C^∞`. Built from the normalized mollifier
/// `exp(−1/(t(1−t)))`.
pub fn chi(s: f64) -> f64 {
    if s <= 1.0 {
        1.0
    } else if s >= 2.0 {
        0.0
    } else {
        integrate(bump, s - 1.0, 1.0) / bump_mass()
    }
}

/// First derivative of [`chi`]; `χ' ≤ 0` everywhere.
pub fn chi_d1(s: f64) -> f64 {
    if !(1.0..2.0).contains(&s) {
        0.0
    } else {
        -bump(s - 1.0) / bump_mass()
    }
}

/// Second derivative of [`chi`].
pub fn chi_d2(s: f64) -> f64 {
    if !(1.0..2.0).contains(&s) {
        0.0
    } else {
        -bump_d1(s - 1.0) / bump_mass()
    }
}

/// Third derivative of [`chi`].
pub fn chi_d3(s: f64) -> f64 {
    if !(1.0..2.0).contains(&s) {
        0.0
    } else {
        -bump_d2(s - 1.0) / bump_mass()
    }
}

// --- Escape function and derived quantities ------------------------------

/// All pointwise geometric quantities derived from the escape function.
#[derive(Debug, Clone)]
pub struct GeometryEval {
    pub d: usize,
    /// Escape value, `f ≥ 1` everywhere.
    pub f: f64,
    /// Radius `r = (x² + y²)^{1/2}`.
    pub r: f64,
    /// Gradient `∂f`, length `d`.
    pub grad_f: Vec<f64>,
    /// Hessian `∂∂f`, row-major `d × d`.
    pub hess_f: Vec<f64>,
    /// Laplacian `Δf`.
    pub lap_f: f64,
    /// `|∂f|²`.
    pub grad_f_sq: f64,
    /// `ℓ_{jk} = |∂f|² δ_{jk} − (∂_j f)(∂_k f)`, row-major `d × d`.
    pub ell: Vec<f64>,
    /// True where `r + x ≥ 2`, so the closed far-region formulas apply.
    pub in_far_region: bool,
}

impl GeometryEval {
    pub fn hess(&self, j: usize, k: usize) -> f64 {
        self.hess_f[j * self.d + k]
    }

    pub fn ell_at(&self, j: usize, k: usize) -> f64 {
        self.ell[j * self.d + k]
    }
}

/// Scalar escape value at `p`.
pub fn escape_f(p: &Point) -> f64 {
    let s = p.radius() + p.x;
    if s >= 2.0 {
        s.sqrt()
    } else if s <= 1.0 {
        1.0
    } else {
        let c = chi(s);
        c + (1.0 - c) * s.sqrt()
    }
}

fn ell_from_grad(grad: &[f64], gfs: f64) -> Vec<f64> {
    let d = grad.len();
    let mut ell = vec![0.0; d * d];
    for j in 0..d {
        for k in 0..d {
            let mut v = -grad[j] * grad[k];
            if j == k {
                v += gfs;
            }
            ell[j * d + k] = v;
        }
    }
    ell
}

/// Evaluate all geometric quantities at `p`, dispatching between the
/// far-region closed forms and the chain-rule branch.
pub fn eval_geometry(p: &Point) -> GeometryEval {
    let r = p.radius();
    if r + p.x >= 2.0 {
        eval_geometry_far(p)
    } else {
        eval_geometry_chain(p)
    }
}

/// Far-region closed forms; requires `r + x ≥ 2`.
pub fn eval_geometry_far(p: &Point) -> GeometryEval {
    let d = p.dim();
    let r = p.radius();
    let s = r + p.x;
    debug_assert!(s >= 2.0);
    let f = s.sqrt();
    let mut grad = vec![0.0; d];
    grad[0] = 0.5 * f / r;
    for (j, yj) in p.y.iter().enumerate() {
        grad[j + 1] = 0.5 * yj / (f * r);
    }
    let gfs = 0.5 / r;
    let lap = 0.5 * (d as f64 - 2.0) / (f * r);
    let r2 = r * r;
    let r3 = r2 * r;
    let mut hess = vec![0.0; d * d];
    hess[0] = 0.5 / (f * r) - 0.25 * f / r2 - 0.5 * p.x * p.x / (f * r3);
    for j in 1..d {
        let yj = p.y[j - 1];
        let hxy = -0.25 * yj / (f * r2) - 0.5 * p.x * yj / (f * r3);
        hess[j] = hxy;
        hess[j * d] = hxy;
        for k in 1..d {
            let yk = p.y[k - 1];
            let mut v = -0.25 * yj * yk / (f * f * f * r2) - 0.5 * yj * yk / (f * r3);
            if j == k {
                v += 0.5 / (f * r);
            }
            hess[j * d + k] = v;
        }
    }
    GeometryEval {
        d,
        f,
        r,
        ell: ell_from_grad(&grad, gfs),
        grad_f: grad,
        hess_f: hess,
        lap_f: lap,
        grad_f_sq: gfs,
        in_far_region: true,
    }
}

/// Direct chain-rule differentiation through the cutoff; valid anywhere.
pub fn eval_geometry_chain(p: &Point) -> GeometryEval {
    let d = p.dim();
    let r = p.radius();
    let s = r + p.x;
    if s <= 1.0 {
        // f ≡ 1 on a neighborhood: constant branch (covers r = 0).
        return GeometryEval {
            d,
            f: 1.0,
            r,
            grad_f: vec![0.0; d],
            hess_f: vec![0.0; d * d],
            lap_f: 0.0,
            grad_f_sq: 0.0,
            ell: vec![0.0; d * d],
            in_far_region: false,
        };
    }
    // s > 1 implies r > 1/2, so r-derivatives are well defined.
    let b = s.sqrt();
    let b1 = 0.5 / b;
    let b2 = -0.25 / (s * b);
    let (c, c1, c2) = (chi(s), chi_d1(s), chi_d2(s));
    let f = c + (1.0 - c) * b;
    let f1 = (1.0 - c) * b1 + c1 * (1.0 - b);
    let f2 = (1.0 - c) * b2 + c2 * (1.0 - b) - 2.0 * c1 * b1;

    // ∇s and Hess s = Hess r.
    let mut ds = vec![0.0; d];
    ds[0] = p.x / r + 1.0;
    for (j, yj) in p.y.iter().enumerate() {
        ds[j + 1] = yj / r;
    }
    let ds_sq = 2.0 * s / r;

    let mut grad = vec![0.0; d];
    for j in 0..d {
        grad[j] = f1 * ds[j];
    }
    let gfs = f1 * f1 * ds_sq;

    let r3 = r * r * r;
    let coord = |j: usize| p.coord(j);
    let mut hess = vec![0.0; d * d];
    for j in 0..d {
        for k in 0..d {
            let mut hr = -coord(j) * coord(k) / r3;
            if j == k {
                hr += 1.0 / r;
            }
            hess[j * d + k] = f2 * ds[j] * ds[k] + f1 * hr;
        }
    }
    let lap = f2 * ds_sq + f1 * (d as f64 - 1.0) / r;

    GeometryEval {
        d,
        f,
        r,
        ell: ell_from_grad(&grad, gfs),
        grad_f: grad,
        hess_f: hess,
        lap_f: lap,
        grad_f_sq: gfs,
        in_far_region: s >= 2.0,
    }
}

// --- Shells and dyadic cutoffs -------------------------------------------

/// Dyadic shell index: the unique `n ≥ 0` with `2^n ≤ f < 2^{n+1}`.
pub fn shell_index_of_f(f: f64) -> u32 {
    debug_assert!(f >= 1.0, "escape value must be >= 1, got {f}");
    let mut n = f.log2().floor().max(0.0) as i64;
    while 2f64.powi(n as i32 + 1) <= f {
        n += 1;
    }
    while n > 0 && 2f64.powi(n as i32) > f {
        n -= 1;
    }
    n as u32
}

/// Shell index at a point.
pub fn shell_index(p: &Point) -> u32 {
    shell_index_of_f(escape_f(p))
}

/// `χ_m(f) = χ(f / 2^m)`: 1 where `f ≤ 2^m`, 0 where `f ≥ 2^{m+1}`.
pub fn chi_m_of_f(f: f64, m: u32) -> f64 {
    chi(f / 2f64.powi(m as i32))
}

/// `χ̄_m = 1 − χ_m`.
pub fn barchi_m_of_f(f: f64, m: u32) -> f64 {
    1.0 - chi_m_of_f(f, m)
}

/// `χ_{m,n} = χ̄_m χ_n`.
pub fn chi_mn_of_f(f: f64, m: u32, n: u32) -> f64 {
    barchi_m_of_f(f, m) * chi_m_of_f(f, n)
}

pub fn cutoff_chi_m(p: &Point, m: u32) -> f64 {
    chi_m_of_f(escape_f(p), m)
}

pub fn cutoff_barchi_m(p: &Point, m: u32) -> f64 {
    barchi_m_of_f(escape_f(p), m)
}

pub fn cutoff_chi_mn(p: &Point, m: u32, n: u32) -> f64 {
    chi_mn_of_f(escape_f(p), m, n)
}

/// Value and first three `f`-derivatives of `χ_m`.
pub fn chi_m_derivs(f: f64, m: u32) -> [f64; 4] {
    let sc = 2f64.powi(m as i32);
    let t = f / sc;
    [
        chi(t),
        chi_d1(t) / sc,
        chi_d2(t) / (sc * sc),
        chi_d3(t) / (sc * sc * sc),
    ]
}

/// Value and first three `f`-derivatives of `χ̄_m`.
pub fn barchi_m_derivs(f: f64, m: u32) -> [f64; 4] {
    let c = chi_m_derivs(f, m);
    [1.0 - c[0], -c[1], -c[2], -c[3]]
}

// --- Derivative self-check -------------------------------------------------

/// Summary of the analytic-vs-numeric derivative check at random
/// far-region points (Richardson-extrapolated central differences of
/// [`escape_f`] as the oracle).
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct DerivativeCheckReport {
    pub samples: usize,
    pub max_grad_rel_err: f64,
    pub max_hess_rel_err: f64,
    pub max_lap_rel_err: f64,
    /// max ‖ℓ·∇f‖ / |∂f|³ over the sample.
    pub max_ell_grad_resid: f64,
    /// max over samples and probe vectors of (−vᵀℓv)/|∂f|².
    pub max_ell_negativity: f64,
    /// max relative disagreement between the far-region closed forms and
    /// the chain-rule branch on the overlap 2 ≤ r+x ≤ 4.
    pub max_branch_mismatch: f64,
    pub runtime_ms: u128,
}

/// Check the closed-form derivatives against finite differences of the
/// scalar escape value at `samples` random points with `r + x ≥ 3`, plus
/// the ℓ-projection identities and the two-branch consistency.
pub fn derivative_check(samples: usize, seed: u64) -> DerivativeCheckReport {
    use crate::util::{central_deriv, central_deriv2};
    use rand::prelude::*;
    let start = std::time::Instant::now();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);

    let mut max_grad = 0.0f64;
    let mut max_hess = 0.0f64;
    let mut max_lap = 0.0f64;
    let mut max_ell = 0.0f64;
    let mut max_neg = 0.0f64;
    let mut accepted = 0usize;
    while accepted < samples {
        let r = 10f64.powf(rng.gen_range(0.3..2.7));
        let theta = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let p = Point::new_2d(r * theta.cos(), r * theta.sin());
        if p.radius() + p.x < 3.0 {
            continue;
        }
        accepted += 1;
        let g = eval_geometry(&p);
        let h = 1e-3 * (1.0 + p.radius() / 100.0);
        let f_at = |x: f64, y: f64| escape_f(&Point::new_2d(x, y));
        let fd = [
            central_deriv(|x| f_at(x, p.y[0]), p.x, h),
            central_deriv(|y| f_at(p.x, y), p.y[0], h),
        ];
        let gscale = g.grad_f_sq.sqrt();
        for j in 0..2 {
            max_grad = max_grad.max((g.grad_f[j] - fd[j]).abs() / gscale);
        }
        // larger step for second derivatives: high-order f-derivatives
        // decay in the far region, while the 1/h² roundoff does not
        let h2 = 0.02 * (1.0 + p.radius() / 50.0);
        let fd_xx = central_deriv2(|x| f_at(x, p.y[0]), p.x, h2);
        let fd_yy = central_deriv2(|y| f_at(p.x, y), p.y[0], h2);
        let cross = |hh: f64| {
            (f_at(p.x + hh, p.y[0] + hh) - f_at(p.x + hh, p.y[0] - hh)
                - f_at(p.x - hh, p.y[0] + hh)
                + f_at(p.x - hh, p.y[0] - hh))
                / (4.0 * hh * hh)
        };
        let fd_xy = (4.0 * cross(h2 / 2.0) - cross(h2)) / 3.0;
        let hscale = gscale / g.r.max(1.0) + g.hess(0, 0).abs() + g.hess(1, 1).abs();
        max_hess = max_hess.max((g.hess(0, 0) - fd_xx).abs() / hscale);
        max_hess = max_hess.max((g.hess(1, 1) - fd_yy).abs() / hscale);
        max_hess = max_hess.max((g.hess(0, 1) - fd_xy).abs() / hscale);
        max_lap = max_lap.max((g.lap_f - (fd_xx + fd_yy)).abs() / hscale);

        // ℓ ∇f = 0 and PSD probes
        let escale = g.grad_f_sq.powf(1.5);
        for j in 0..2 {
            let dot: f64 = (0..2).map(|k| g.ell_at(j, k) * g.grad_f[k]).sum();
            max_ell = max_ell.max(dot.abs() / escale);
        }
        for _ in 0..4 {
            let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0f64)];
            let mut q = 0.0;
            for j in 0..2 {
                for k in 0..2 {
                    q += v[j] * g.ell_at(j, k) * v[k];
                }
            }
            max_neg = max_neg.max(-q / g.grad_f_sq);
        }
    }

    // branch consistency on the overlap 2 ≤ r+x ≤ 4
    let mut max_branch = 0.0f64;
    let mut found = 0usize;
    while found < 200 {
        let s = rng.gen_range(2.0..4.0);
        let theta = rng.gen_range(-2.5..2.5f64);
        // pick r from s = r(1 + cos θ)
        let denom = 1.0 + theta.cos();
        if denom < 0.05 {
            continue;
        }
        let r = s / denom;
        let p = Point::new_2d(r * theta.cos(), r * theta.sin());
        found += 1;
        let a = eval_geometry_far(&p);
        let b = eval_geometry_chain(&p);
        max_branch = max_branch.max((a.f - b.f).abs() / a.f);
        let gscale = a.grad_f_sq.sqrt();
        for j in 0..2 {
            max_branch = max_branch.max((a.grad_f[j] - b.grad_f[j]).abs() / gscale);
            for k in 0..2 {
                max_branch = max_branch
                    .max((a.hess(j, k) - b.hess(j, k)).abs() / (1.0 + a.hess(j, k).abs()));
            }
        }
        max_branch = max_branch.max((a.lap_f - b.lap_f).abs() / (1.0 + a.lap_f.abs()));
    }

    DerivativeCheckReport {
        samples,
        max_grad_rel_err: max_grad,
        max_hess_rel_err: max_hess,
        max_lap_rel_err: max_lap,
        max_ell_grad_resid: max_ell,
        max_ell_negativity: max_neg,
        max_branch_mismatch: max_branch,
        runtime_ms: start.elapsed().as_millis(),
    }
}

//! Asymptotic complex phases and the factorization remainder `q₆`.
//!
//! Two variants are provided:
//! - `sqrt`: `a = χ̄_l [√((r − q₁ + z)/r) ± (i/4) f r^{−2}]`, the phase
//!   entering the resolvent factorization and radiation conditions;
//! - `simple`: `a^sim = χ̄_l [f²/(2r) ± (i/4) f r^{−2}]`, which
//!   annihilates the WKB states exactly for `f > √2`.
//!
//! The principal square root branch (`Re √w > 0` off `(−∞, 0]`) is
//! enforced by an l-selection grid scan at construction.

use crate::error::{CoreError, Result};
use crate::geometry::{self, Point};
use crate::operators::Discretization;
use crate::potential::PotentialSpec;
use crate::C64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseVariant {
    Sqrt,
    Simple,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhaseParams {
    pub z: C64,
    /// Cutoff index of the `χ̄_l` factor.
    pub l: u32,
    pub sign: Sign,
    pub variant: PhaseVariant,
}

impl PhaseParams {
    pub fn new(z: C64, l: u32, sign: Sign, variant: PhaseVariant) -> Self {
        Self { z, l, sign, variant }
    }

    /// Construct with the admissibility rule for the cutoff index checked by grid
    /// scan: `Re((r − q₁ + z)/r)` must be positive on `supp χ̄_l`.
    pub fn checked(
        z: C64,
        l: u32,
        sign: Sign,
        variant: PhaseVariant,
        disc: &Discretization,
        spec: &PotentialSpec,
    ) -> Result<Self> {
        let params = Self { z, l, sign, variant };
        if variant == PhaseVariant::Sqrt {
            let (min_re, where_min) = min_re_w_on_support(disc, spec, z, l);
            if min_re <= 0.0 {
                return Err(CoreError::BranchCut {
                    coords: where_min,
                    w_re: min_re,
                    w_im: 0.0,
                });
            }
        }
        Ok(params)
    }
}

fn min_re_w_on_support(
    disc: &Discretization,
    spec: &PotentialSpec,
    z: C64,
    l: u32,
) -> (f64, Vec<f64>) {
    let d = disc.dim();
    let thresh = 2f64.powi(l as i32);
    let mut min_re = f64::INFINITY;
    let mut arg = vec![0.0; d];
    for idx in 0..disc.node_count() {
        let f = disc.geo.f[idx];
        if f <= thresh {
            continue; // outside supp χ̄_l
        }
        let r = disc.geo.r[idx];
        let coords = disc.grid.coords(idx);
        let q1 = spec
            .eval_raw(&coords, f, &disc.geo.grad_f[idx * d..(idx + 1) * d])
            .q1;
        let re = ((r - q1 + z.re) / r).min(f64::INFINITY);
        if re < min_re {
            min_re = re;
            arg = coords;
        }
    }
    (min_re, arg)
}

/// Smallest `l` such that `min Re((r − q₁ + z)/r) ≥ threshold` on
/// `supp χ̄_l` for every `z` in the sweep; `threshold = 0.25` keeps the
/// square root well conditioned.
pub fn select_l(
    disc: &Discretization,
    spec: &PotentialSpec,
    z_samples: &[C64],
    threshold: f64,
) -> Result<u32> {
    'l: for l in 0..=20u32 {
        for &z in z_samples {
            let (min_re, _) = min_re_w_on_support(disc, spec, z, l);
            if min_re < threshold {
                continue 'l;
            }
        }
        return Ok(l);
    }
    Err(CoreError::InvalidConfig(
        "no admissible cutoff index l <= 20 for the requested spectral window".into(),
    ))
}

/// Principal square root with the cut on `(−∞, 0]`; hitting the cut is an
/// error naming the point.
fn sqrt_principal(w: C64, coords: &[f64]) -> Result<C64> {
    if w.im == 0.0 && w.re <= 0.0 {
        return Err(CoreError::BranchCut { coords: coords.to_vec(), w_re: w.re, w_im: w.im });
    }
    Ok(w.sqrt())
}

/// Phase value from precomputed geometry data at one node.
pub fn phase_at(
    params: &PhaseParams,
    q1: f64,
    f: f64,
    r: f64,
    coords: &[f64],
) -> Result<C64> {
    let cut = geometry::barchi_m_of_f(f, params.l);
    if cut == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let imag = 0.25 * params.sign.factor() * f / (r * r);
    let bracket = match params.variant {
        PhaseVariant::Sqrt => {
            let w = (C64::new(r - q1, 0.0) + params.z) / r;
            sqrt_principal(w, coords)? + C64::new(0.0, imag)
        }
        PhaseVariant::Simple => C64::new(0.5 * f * f / r, imag),
    };
    Ok(cut * bracket)
}

/// Phase value at a point (computes geometry and potential internally).
pub fn eval_phase(params: &PhaseParams, spec: &PotentialSpec, p: &Point) -> Result<C64> {
    let g = geometry::eval_geometry(p);
    let coords: Vec<f64> = std::iter::once(p.x).chain(p.y.iter().copied()).collect();
    let q1 = spec.eval_raw(&coords, g.f, &g.grad_f).q1;
    phase_at(params, q1, g.f, g.r, &coords)
}

/// Sample the phase on all grid nodes.
pub fn phase_field(
    params: &PhaseParams,
    spec: &PotentialSpec,
    disc: &Discretization,
) -> Result<Vec<C64>> {
    let d = disc.dim();
    (0..disc.node_count())
        .map(|idx| {
            let f = disc.geo.f[idx];
            if geometry::barchi_m_of_f(f, params.l) == 0.0 {
                return Ok(C64::new(0.0, 0.0));
            }
            let coords = disc.grid.coords(idx);
            let q1 = spec
                .eval_raw(&coords, f, &disc.geo.grad_f[idx * d..(idx + 1) * d])
                .q1;
            phase_at(params, q1, f, disc.geo.r[idx], &coords)
        })
        .collect()
}

/// Full complex gradient of the phase at one node (far region), used by
/// the `∂̃a` bound fit and by `q₆`.
fn phase_gradient(
    params: &PhaseParams,
    spec: &PotentialSpec,
    f: f64,
    r: f64,
    coords: &[f64],
    grad_f: &[f64],
) -> Result<(C64, Vec<C64>)> {
    let d = coords.len();
    let v = spec.eval_raw(coords, f, grad_f);
    let q1 = v.q1;
    let cut = geometry::barchi_m_derivs(f, params.l);
    let sgn = params.sign.factor();
    let r2 = r * r;
    let r3 = r2 * r;

    // bracket value and its full gradient
    let imag_part = 0.25 * sgn * f / r2;
    // ∇(f r^{−2}) = ∇f·r^{−2} − 2 f r^{−3} ∇r
    let grad_r: Vec<f64> = coords.iter().map(|&c| c / r).collect();
    let grad_imag: Vec<f64> = (0..d)
        .map(|j| 0.25 * sgn * (grad_f[j] / r2 - 2.0 * f * grad_r[j] / r3))
        .collect();
    let (bracket, grad_bracket): (C64, Vec<C64>) = match params.variant {
        PhaseVariant::Sqrt => {
            let w = (C64::new(r - q1, 0.0) + params.z) / r;
            let sq = sqrt_principal(w, coords)?;
            // ∇w = −∇q₁/r − (z − q₁) r^{−2} ∇r
            let zq = params.z - q1;
            let gb: Vec<C64> = (0..d)
                .map(|j| {
                    let gw = -v.grad_q1[j] / r - zq * (grad_r[j] / r2);
                    gw / (2.0 * sq) + C64::new(0.0, grad_imag[j])
                })
                .collect();
            (sq + C64::new(0.0, imag_part), gb)
        }
        PhaseVariant::Simple => {
            // ∇(f²/2r) = f ∇f / r − f² ∇r / (2r²)
            let gb: Vec<C64> = (0..d)
                .map(|j| {
                    C64::new(
                        f * grad_f[j] / r - 0.5 * f * f * grad_r[j] / r2,
                        grad_imag[j],
                    )
                })
                .collect();
            (C64::new(0.5 * f * f / r, imag_part), gb)
        }
    };

    let a = cut[0] * bracket;
    let grad_a: Vec<C64> = (0..d)
        .map(|j| cut[1] * grad_f[j] * bracket + cut[0] * grad_bracket[j])
        .collect();
    Ok((a, grad_a))
}

/// The factorization remainder
/// `q₆ = (p^f a r) + r a² − r + q − z + ¼ r (Δf)² + ½ ∂^f(r Δf)`,
/// evaluated with the analytic derivative of `a` along `∂f`. Requires the
/// far region (`r + x ≥ 2`), where the closed geometric forms hold.
pub fn eval_q6(params: &PhaseParams, spec: &PotentialSpec, p: &Point) -> Result<C64> {
    let g = geometry::eval_geometry(p);
    if !g.in_far_region {
        return Err(CoreError::UnsupportedField(format!(
            "q6 is defined on the far region r + x >= 2; got r + x = {}",
            g.r + p.x
        )));
    }
    let coords: Vec<f64> = std::iter::once(p.x).chain(p.y.iter().copied()).collect();
    q6_at(params, spec, g.f, g.r, &coords, &g.grad_f, g.grad_f_sq, g.lap_f, g.d)
}

#[allow(clippy::too_many_arguments)]
fn q6_at(
    params: &PhaseParams,
    spec: &PotentialSpec,
    f: f64,
    r: f64,
    coords: &[f64],
    grad_f: &[f64],
    grad_f_sq: f64,
    lap_f: f64,
    d: usize,
) -> Result<C64> {
    let (a, grad_a) = phase_gradient(params, spec, f, r, coords, grad_f)?;
    let v = spec.eval_raw(coords, f, grad_f);
    let q = v.total();
    // ∂^f r = (∂f)·(∇r), exact
    let df_r: f64 = grad_f
        .iter()
        .zip(coords)
        .map(|(g, &c)| g * c / r)
        .sum();
    // ∂^f a = (∂f)·∇a
    let df_a: C64 = grad_f
        .iter()
        .zip(&grad_a)
        .map(|(&g, ga)| g * ga)
        .sum();
    // (p^f (a r)) = −i [ (∂^f a) r + a (∂^f r) ]
    let pf_ar = C64::new(0.0, -1.0) * (df_a * r + a * df_r);
    // far region: r Δf = ½(d−2)/f ⇒ ∂^f(r Δf) = −½(d−2) f^{−2} |∂f|²
    let dm2 = d as f64 - 2.0;
    let df_r_lap = -0.5 * dm2 * grad_f_sq / (f * f);
    Ok(pf_ar + r * a * a - r + q - params.z
        + 0.25 * r * lap_f * lap_f
        + 0.5 * df_r_lap)
}

/// Sample `q₆` on far-region grid nodes; entries outside the far region
/// are `None`.
pub fn q6_field(
    params: &PhaseParams,
    spec: &PotentialSpec,
    disc: &Discretization,
) -> Result<Vec<Option<C64>>> {
    let d = disc.dim();
    (0..disc.node_count())
        .map(|idx| {
            if !disc.geo.in_far_region[idx] {
                return Ok(None);
            }
            let coords = disc.grid.coords(idx);
            q6_at(
                params,
                spec,
                disc.geo.f[idx],
                disc.geo.r[idx],
                &coords,
                &disc.geo.grad_f[idx * d..(idx + 1) * d],
                disc.geo.grad_f_sq[idx],
                disc.geo.lap_f[idx],
                d,
            )
            .map(Some)
        })
        .collect()
}

/// Grid-sampled fits of the three phase bounds (|a| ≤ C,
/// Im a ≥ ¼ χ̄_l f r^{−2}, |∂̃a| ≤ C f^{−1−min{2,ρ,ρ̃}} r^{−1}) over a
/// sample of spectral parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseBoundReport {
    /// Fitted sup |a| per z sample.
    pub c_abs_per_z: Vec<f64>,
    /// Global fitted sup |a|.
    pub c_abs: f64,
    /// Minimum of `Im a − ¼ χ̄_l f r^{−2}` (must be ≥ 0 for upper-sign z ∈ I₊).
    pub im_margin: f64,
    /// Fitted sup `|∂̃a| f^{1+min{2,ρ,ρ̃}} r` per z sample.
    pub c_grad_per_z: Vec<f64>,
    pub c_grad: f64,
}

pub fn phase_bounds_fit(
    base: &PhaseParams,
    z_samples: &[C64],
    spec: &PotentialSpec,
    disc: &Discretization,
) -> Result<PhaseBoundReport> {
    let d = disc.dim();
    let expo = 1.0 + spec.min2_rho();
    let mut c_abs_per_z = Vec::new();
    let mut c_grad_per_z = Vec::new();
    let mut im_margin = f64::INFINITY;
    for &z in z_samples {
        let params = PhaseParams { z, ..*base };
        let mut c_abs = 0.0f64;
        let mut c_grad = 0.0f64;
        for idx in 0..disc.node_count() {
            let f = disc.geo.f[idx];
            let cut = geometry::barchi_m_of_f(f, params.l);
            if cut == 0.0 {
                continue;
            }
            let r = disc.geo.r[idx];
            let coords = disc.grid.coords(idx);
            let grad_f = &disc.geo.grad_f[idx * d..(idx + 1) * d];
            let (a, grad_a) = phase_gradient(&params, spec, f, r, &coords, grad_f)?;
            c_abs = c_abs.max(a.norm());
            im_margin = im_margin.min(a.im - 0.25 * cut * f / (r * r));
            let ga_norm: f64 = grad_a.iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt();
            let tilde = disc.geo.grad_f_sq[idx].sqrt() * ga_norm;
            c_grad = c_grad.max(tilde * f.powf(expo) * r);
        }
        c_abs_per_z.push(c_abs);
        c_grad_per_z.push(c_grad);
    }
    let c_abs = c_abs_per_z.iter().copied().fold(0.0, f64::max);
    let c_grad = c_grad_per_z.iter().copied().fold(0.0, f64::max);
    Ok(PhaseBoundReport { c_abs_per_z, c_abs, im_margin, c_grad_per_z, c_grad })
}

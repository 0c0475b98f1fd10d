//! Admissible potentials `q = q₁ + q₂ + q₃` and their numerical validation.
//!
//! The decay/growth conditions on `q` are inequality classes, so concrete
//! representatives are provided as builtin families and a grid-scan
//! validator fits the constants instead of asserting them analytically:
//!
//! - long-range `q₁ = c·x·(1+f²)^{−ρ/2}·χ̄₀(f)` (sub-linear growth along
//!   the field),
//! - short-range `q₂ = c·(1+f²)^{−(1+ρ)/2}`,
//! - compact bump `q₃ = c·exp(−1/(1−t²))`, `t = ‖p−p₀‖/R`.

use crate::error::{CoreError, Result};
use crate::geometry::{self, Point};
use crate::grid::{GeometryCache, GridSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum PotentialFamily {
    /// `q ≡ 0`.
    Zero,
    /// The builtin three-component family described above.
    Builtin {
        #[serde(default)]
        q1_coeff: f64,
        #[serde(default)]
        q2_coeff: f64,
        #[serde(default)]
        q3_coeff: f64,
        #[serde(default)]
        q3_center: Vec<f64>,
        #[serde(default = "default_q3_radius")]
        q3_radius: f64,
    },
    /// Degenerate `q₁ = c·r` with no decay; used to exercise the validator.
    RadialLinear { coeff: f64 },
}

fn default_q3_radius() -> f64 {
    1.0
}

/// A potential family together with its declared decay exponents and the
/// constant the validator checks the fitted constants against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub family: PotentialFamily,
    /// Decay exponent ρ > 0.
    pub rho: f64,
    /// Decay exponent ρ̃ > 0 for the `∂̃q₁` bound.
    pub rho_tilde: f64,
    /// Declared constant for the condition bounds.
    pub c_decl: f64,
}

/// Component values and the `q₁` gradient at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialValues {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub grad_q1: Vec<f64>,
}

impl PotentialValues {
    pub fn total(&self) -> f64 {
        self.q1 + self.q2 + self.q3
    }

    fn zero(d: usize) -> Self {
        Self { q1: 0.0, q2: 0.0, q3: 0.0, grad_q1: vec![0.0; d] }
    }
}

impl PotentialSpec {
    pub fn zero() -> Self {
        Self { family: PotentialFamily::Zero, rho: 2.0, rho_tilde: 2.0, c_decl: 1.0 }
    }

    pub fn builtin(q1_coeff: f64, q2_coeff: f64, q3_coeff: f64, rho: f64) -> Self {
        Self {
            family: PotentialFamily::Builtin {
                q1_coeff,
                q2_coeff,
                q3_coeff,
                q3_center: vec![],
                q3_radius: 1.0,
            },
            rho,
            rho_tilde: rho,
            c_decl: (q1_coeff.abs() + q2_coeff.abs()).max(1.0) * 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !(self.rho_tilde > 0.0) {
            return Err(CoreError::InvalidConfig("rho and rho_tilde must be positive".into()));
        }
        if let PotentialFamily::Builtin { q3_radius, .. } = &self.family {
            if !(*q3_radius > 0.0) {
                return Err(CoreError::InvalidConfig("q3 support radius must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        match &self.family {
            PotentialFamily::Zero => true,
            PotentialFamily::Builtin { q1_coeff, q2_coeff, q3_coeff, .. } => {
                *q1_coeff == 0.0 && *q2_coeff == 0.0 && *q3_coeff == 0.0
            }
            PotentialFamily::RadialLinear { coeff } => *coeff == 0.0,
        }
    }

    /// `β_c = min{1/2, ρ, ρ̃}`.
    pub fn beta_c(&self) -> f64 {
        0.5f64.min(self.rho).min(self.rho_tilde)
    }

    /// `min{2, ρ, ρ̃}`, the decay exponent appearing in the phase bounds.
    pub fn min2_rho(&self) -> f64 {
        2.0f64.min(self.rho).min(self.rho_tilde)
    }

    /// Evaluate at a point (computes geometry internally).
    pub fn eval_potential(&self, p: &Point) -> PotentialValues {
        let g = geometry::eval_geometry(p);
        let coords: Vec<f64> =
            std::iter::once(p.x).chain(p.y.iter().copied()).collect();
        self.eval_raw(&coords, g.f, &g.grad_f)
    }

    /// Evaluate from cached geometry (`f`, `∂f`) at the given coordinates.
    pub fn eval_raw(&self, coords: &[f64], f: f64, grad_f: &[f64]) -> PotentialValues {
        let d = coords.len();
        match &self.family {
            PotentialFamily::Zero => PotentialValues::zero(d),
            PotentialFamily::RadialLinear { coeff } => {
                let r = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
                let mut grad = vec![0.0; d];
                if r > 0.0 {
                    for (g, c) in grad.iter_mut().zip(coords) {
                        *g = coeff * c / r;
                    }
                }
                PotentialValues { q1: coeff * r, q2: 0.0, q3: 0.0, grad_q1: grad }
            }
            PotentialFamily::Builtin { q1_coeff, q2_coeff, q3_coeff, q3_center, q3_radius } => {
                let x = coords[0];
                let one_f2 = 1.0 + f * f;
                // q1 = c · x · (1+f²)^{−ρ/2} · χ̄₀(f)
                let m = one_f2.powf(-0.5 * self.rho);
                let w = geometry::barchi_m_of_f(f, 0);
                let q1 = q1_coeff * x * m * w;
                let mut grad_q1 = vec![0.0; d];
                if *q1_coeff != 0.0 {
                    let m_prime = -self.rho * f * one_f2.powf(-0.5 * self.rho - 1.0);
                    let w_prime = -geometry::chi_d1(f);
                    let radial = q1_coeff * x * (m_prime * w + m * w_prime);
                    for j in 0..d {
                        grad_q1[j] = radial * grad_f[j];
                    }
                    grad_q1[0] += q1_coeff * m * w;
                }
                let q2 = q2_coeff * one_f2.powf(-0.5 * (1.0 + self.rho));
                let q3 = if *q3_coeff != 0.0 {
                    let mut dist2 = 0.0;
                    for (j, c) in coords.iter().enumerate() {
                        let center = q3_center.get(j).copied().unwrap_or(0.0);
                        dist2 += (c - center) * (c - center);
                    }
                    let t2 = dist2 / (q3_radius * q3_radius);
                    if t2 < 1.0 {
                        q3_coeff * (-1.0 / (1.0 - t2)).exp()
                    } else {
                        0.0
                    }
                } else {
                    0.0
                };
                PotentialValues { q1, q2, q3, grad_q1 }
            }
        }
    }

    /// Support radius of `q₃` around its declared center (0 when absent).
    pub fn q3_support(&self) -> Option<(Vec<f64>, f64)> {
        match &self.family {
            PotentialFamily::Builtin { q3_coeff, q3_center, q3_radius, .. }
                if *q3_coeff != 0.0 =>
            {
                Some((q3_center.clone(), *q3_radius))
            }
            _ => None,
        }
    }
}

/// One row of the confining-profile table: `inf{−x+q : x < μ, f ≤ f₀}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfiningRow {
    pub mu: f64,
    pub f0: f64,
    /// Infimum over matching grid nodes; +inf when no node matches.
    pub inf_value: f64,
}

/// Fitted constants and pass/fail flags for the decay conditions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    /// sup |q₁| f^ρ / r over nodes with f ≥ 4.
    pub c1: f64,
    /// sup of the signed `(∂^f q₁) f^{1+ρ}` (the one-sided bound).
    pub c1_prime_one_sided: f64,
    /// sup |∂^f q₁| f^{1+ρ}.
    pub c1_prime_two_sided: f64,
    /// sup |q₂| f^{1+ρ}.
    pub c2: f64,
    /// sup |∂̃q₁| f^{1+ρ̃}.
    pub c_tilde: f64,
    pub confining: Vec<ConfiningRow>,
    pub pass_c1: bool,
    pub pass_c1_prime: bool,
    pub pass_c2: bool,
    pub pass_c_tilde: bool,
    pub pass: bool,
}

/// Grid-scan validation of Conditions on `q`: fitted suprema of each decay
/// ratio over nodes with `f ≥ 4`, the confining profile table, and flags
/// against the declared constant.
pub fn validate_conditions(spec: &PotentialSpec, grid: &GridSpec) -> Result<ConditionReport> {
    spec.validate()?;
    grid.validate()?;
    let geo = GeometryCache::build(grid);
    validate_conditions_cached(spec, grid, &geo)
}

pub fn validate_conditions_cached(
    spec: &PotentialSpec,
    grid: &GridSpec,
    geo: &GeometryCache,
) -> Result<ConditionReport> {
    use rayon::prelude::*;

    let n = grid.node_count();
    let d = grid.dim();
    let mus = [-10.0, -20.0, -40.0, -80.0];
    let f0s = [2.0, 4.0, 8.0];

    #[derive(Clone)]
    struct Acc {
        c1: f64,
        c1p_one: f64,
        c1p_two: f64,
        c2: f64,
        ct: f64,
        conf: [f64; 12],
        bad: Option<usize>,
    }
    impl Acc {
        fn new() -> Self {
            Acc {
                c1: 0.0,
                c1p_one: f64::NEG_INFINITY,
                c1p_two: 0.0,
                c2: 0.0,
                ct: 0.0,
                conf: [f64::INFINITY; 12],
                bad: None,
            }
        }
        fn merge(mut self, o: Acc) -> Acc {
            self.c1 = self.c1.max(o.c1);
            self.c1p_one = self.c1p_one.max(o.c1p_one);
            self.c1p_two = self.c1p_two.max(o.c1p_two);
            self.c2 = self.c2.max(o.c2);
            self.ct = self.ct.max(o.ct);
            for k in 0..12 {
                self.conf[k] = self.conf[k].min(o.conf[k]);
            }
            self.bad = match (self.bad, o.bad) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
            self
        }
    }

    let acc = (0..n)
        .into_par_iter()
        .fold(Acc::new, |mut acc, idx| {
            let coords = grid.coords(idx);
            let f = geo.f[idx];
            let r = geo.r[idx];
            let grad_f = &geo.grad_f[idx * d..(idx + 1) * d];
            let v = spec.eval_raw(&coords, f, grad_f);
            let q = v.total();
            if !q.is_finite() || !v.grad_q1.iter().all(|g| g.is_finite()) {
                acc.bad = Some(acc.bad.map_or(idx, |b| b.min(idx)));
                return acc;
            }
            if f >= 4.0 {
                let frho = f.powf(spec.rho);
                let f1rho = f.powf(1.0 + spec.rho);
                acc.c1 = acc.c1.max(v.q1.abs() * frho / r);
                let dfq1: f64 = grad_f.iter().zip(&v.grad_q1).map(|(a, b)| a * b).sum();
                acc.c1p_one = acc.c1p_one.max(dfq1 * f1rho);
                acc.c1p_two = acc.c1p_two.max(dfq1.abs() * f1rho);
                acc.c2 = acc.c2.max(v.q2.abs() * f1rho);
                let gq_norm: f64 =
                    v.grad_q1.iter().map(|g| g * g).sum::<f64>().sqrt();
                let tilde = geo.grad_f_sq[idx].sqrt() * gq_norm;
                acc.ct = acc.ct.max(tilde * f.powf(1.0 + spec.rho_tilde));
            }
            let x = coords[0];
            for (im, &mu) in mus.iter().enumerate() {
                if x < mu {
                    for (i0, &f0) in f0s.iter().enumerate() {
                        if f <= f0 {
                            let k = im * f0s.len() + i0;
                            acc.conf[k] = acc.conf[k].min(-x + q);
                        }
                    }
                }
            }
            acc
        })
        .reduce(Acc::new, Acc::merge);

    if let Some(idx) = acc.bad {
        return Err(CoreError::NonFinitePotential { index: idx, coords: grid.coords(idx) });
    }

    let mut confining = Vec::new();
    for (im, &mu) in mus.iter().enumerate() {
        for (i0, &f0) in f0s.iter().enumerate() {
            confining.push(ConfiningRow { mu, f0, inf_value: acc.conf[im * f0s.len() + i0] });
        }
    }

    let c1p_one = if acc.c1p_one.is_finite() { acc.c1p_one } else { 0.0 };
    let pass_c1 = acc.c1 <= spec.c_decl;
    let pass_c1_prime = c1p_one <= spec.c_decl;
    let pass_c2 = acc.c2 <= spec.c_decl;
    let pass_c_tilde = acc.ct <= spec.c_decl;
    Ok(ConditionReport {
        c1: acc.c1,
        c1_prime_one_sided: c1p_one,
        c1_prime_two_sided: acc.c1p_two,
        c2: acc.c2,
        c_tilde: acc.ct,
        confining,
        pass_c1,
        pass_c1_prime,
        pass_c2,
        pass_c_tilde,
        pass: pass_c1 && pass_c1_prime && pass_c2 && pass_c_tilde,
    })
}

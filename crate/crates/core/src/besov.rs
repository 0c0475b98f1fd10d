//! Dyadic-shell norms associated with the escape function, and the
//! regularized θ weight family.
//!
//! The shells are `F_n = {2^n ≤ f < 2^{n+1}}`; a field's shell masses
//! `‖F_n ψ‖` generate the norms
//! `‖ψ‖_B = Σ 2^{n/2} ‖F_n ψ‖`, `‖ψ‖_{B*} = sup 2^{−n/2} ‖F_n ψ‖`,
//! and the tail sequence `2^{−n/2}‖F_n ψ‖` whose decay is the `B*₀`
//! diagnostic. Weighted norms use `L²_s = f^{−s} L²`.

use crate::grid::{GeometryCache, GridField};
use crate::util::{linear_fit, stable_sum};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Per-shell masses and derived norms of one field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BesovReport {
    /// `‖F_n ψ‖_{L²}` for n = 0..=n_max (shells intersected with the box).
    pub shell_mass: Vec<f64>,
    /// `Σ_n 2^{n/2} ‖F_n ψ‖`.
    pub b_norm: f64,
    /// `max_n 2^{−n/2} ‖F_n ψ‖`.
    pub bstar_norm: f64,
    /// The B*₀ diagnostic sequence `2^{−n/2} ‖F_n ψ‖`.
    pub tail: Vec<f64>,
    /// `s ↦ ‖f^s ψ‖_{L²}` for the requested exponents.
    pub weighted: BTreeMap<String, f64>,
    /// Largest shell meeting the box.
    pub n_max: u32,
    /// Largest shell fully below the box's maximal f value
    /// (`2^{n+1} ≤ max f`); larger shells are clipped by the box.
    pub n_resolved: u32,
}

/// Exponents reported in `weighted` by default.
pub const DEFAULT_WEIGHT_EXPONENTS: [f64; 4] = [-1.0, -0.5, 0.5, 1.0];

fn exponent_key(s: f64) -> String {
    format!("{s}")
}

/// Compute the shell report of a field, using node membership by shell
/// index (the characteristic-function definition of the partition).
pub fn besov_report(field: &GridField, geo: &GeometryCache) -> BesovReport {
    besov_report_weighted(field, geo, &DEFAULT_WEIGHT_EXPONENTS)
}

pub fn besov_report_weighted(
    field: &GridField,
    geo: &GeometryCache,
    exponents: &[f64],
) -> BesovReport {
    let n_max = geo.max_shell();
    let vol = field.grid.cell_volume();
    let mut mass2 = vec![0.0f64; n_max as usize + 1];
    for (idx, v) in field.values.iter().enumerate() {
        mass2[geo.shell[idx] as usize] += v.norm_sqr();
    }
    let shell_mass: Vec<f64> = mass2.iter().map(|m| (m * vol).sqrt()).collect();

    let b_norm = shell_mass
        .iter()
        .enumerate()
        .map(|(n, m)| 2f64.powf(0.5 * n as f64) * m)
        .sum::<f64>();
    let tail: Vec<f64> = shell_mass
        .iter()
        .enumerate()
        .map(|(n, m)| 2f64.powf(-0.5 * n as f64) * m)
        .collect();
    let bstar_norm = tail.iter().copied().fold(0.0f64, f64::max);

    let mut weighted = BTreeMap::new();
    for &s in exponents {
        let sum = stable_sum(
            field
                .values
                .iter()
                .zip(&geo.f)
                .map(|(v, &f)| f.powf(2.0 * s) * v.norm_sqr()),
        );
        weighted.insert(exponent_key(s), (sum * vol).sqrt());
    }

    let f_max = geo.f.iter().copied().fold(1.0f64, f64::max);
    let mut n_resolved = 0u32;
    for n in 0..=n_max {
        if 2f64.powi(n as i32 + 1) <= f_max {
            n_resolved = n;
        }
    }

    BesovReport {
        shell_mass,
        b_norm,
        bstar_norm,
        tail,
        weighted,
        n_max,
        n_resolved,
    }
}

impl BesovReport {
    pub fn weighted_norm(&self, s: f64) -> f64 {
        *self
            .weighted
            .get(&exponent_key(s))
            .unwrap_or_else(|| panic!("weighted norm for s = {s} not computed"))
    }

    /// Linear fit of `log2 tail` against `n` over the last `window`
    /// resolved shells: the tail-slope diagnostic for `B*₀` membership.
    /// A truncated box cannot decide a limit, so this is reported as a
    /// slope, never a boolean.
    pub fn tail_slope(&self, window: usize) -> Option<TailSlope> {
        self.tail_slope_over(0, self.n_resolved as usize, window)
    }

    /// Tail-slope fit restricted to shells `lo..=hi` (clamped to the
    /// resolved range); used when the state lives on a known shell band.
    pub fn tail_slope_over(&self, lo: usize, hi: usize, window: usize) -> Option<TailSlope> {
        let hi = hi.min(self.n_resolved as usize);
        let candidates: Vec<(f64, f64)> = (lo..=hi)
            .filter(|&n| self.tail[n] > 0.0)
            .map(|n| (n as f64, self.tail[n].log2()))
            .collect();
        if candidates.len() < 2 {
            return None;
        }
        let take = window.min(candidates.len());
        let sel = &candidates[candidates.len() - take..];
        let xs: Vec<f64> = sel.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = sel.iter().map(|p| p.1).collect();
        let (slope, _, r2, _) = linear_fit(&xs, &ys);
        Some(TailSlope { slope, r_squared: r2, shells_used: take })
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TailSlope {
    pub slope: f64,
    pub r_squared: f64,
    pub shells_used: usize,
}

// --- θ weight family ------------------------------------------------------

/// The regularized weight `θ = [1 − (1 + f/2^ν)^{−δ}]/δ` with its
/// uniform-in-ν inequalities.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThetaWeight {
    pub nu: u32,
    pub delta: f64,
}

impl ThetaWeight {
    pub fn new(nu: u32, delta: f64) -> Self {
        assert!(delta > 0.0, "delta must be positive");
        Self { nu, delta }
    }

    /// `(θ, θ′, θ″)` at escape value `f` (primes are d/df).
    pub fn eval(&self, f: f64) -> (f64, f64, f64) {
        theta_eval(f, self.nu, self.delta)
    }

    /// `θ‴`.
    pub fn d3(&self, f: f64) -> f64 {
        let s2 = 2f64.powi(self.nu as i32);
        let base = 1.0 + f / s2;
        (1.0 + self.delta) * (2.0 + self.delta) * base.powf(-3.0 - self.delta) / (s2 * s2 * s2)
    }
}

/// Closed-form `(θ, θ′, θ″)`:
/// `θ′ = (1 + f/2^ν)^{−1−δ}/2^ν`,
/// `θ″ = −(1+δ)(1 + f/2^ν)^{−2−δ}/2^{2ν}`.
pub fn theta_eval(f: f64, nu: u32, delta: f64) -> (f64, f64, f64) {
    let s2 = 2f64.powi(nu as i32);
    let base = 1.0 + f / s2;
    let theta = (1.0 - base.powf(-delta)) / delta;
    let theta1 = base.powf(-1.0 - delta) / s2;
    let theta2 = -(1.0 + delta) * base.powf(-2.0 - delta) / (s2 * s2);
    (theta, theta1, theta2)
}

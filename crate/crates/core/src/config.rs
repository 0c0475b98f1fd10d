//! Run configuration: strict flat-sectioned TOML, unknown keys rejected.

use crate::error::{CoreError, Result};
use crate::experiments::{HoelderConfig, SommerfeldConfig, SweepConfig};
use crate::grid::{AxisBounds, CapSpec, GridSpec};
use crate::phase::Sign;
use crate::potential::{PotentialFamily, PotentialSpec};
use crate::solver::{MethodChoice, SolverConfig};
use crate::verify::{BumpSpec, ThetaChoice, WkbSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Per-axis `[min, max]`; axis 0 is the field direction.
    pub bounds: Vec<[f64; 2]>,
    pub h: f64,
    #[serde(default = "default_order")]
    pub stencil_order: usize,
    #[serde(default)]
    pub cap: Option<CapSection>,
}

fn default_order() -> usize {
    2
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapSection {
    pub width: f64,
    pub strength: f64,
    #[serde(default = "default_cap_power")]
    pub power: i32,
    #[serde(default)]
    pub plus_x: bool,
}

fn default_cap_power() -> i32 {
    3
}

impl GridSection {
    pub fn to_grid(&self) -> Result<GridSpec> {
        let grid = GridSpec {
            bounds: self
                .bounds
                .iter()
                .map(|b| AxisBounds { min: b[0], max: b[1] })
                .collect(),
            h: self.h,
            stencil_order: self.stencil_order,
            cap: self.cap.map(|c| CapSpec {
                width: c.width,
                strength: c.strength,
                power: c.power,
                plus_x: c.plus_x,
            }),
        };
        grid.validate()?;
        Ok(grid)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    /// `zero`, `builtin`, or `radial-linear`.
    pub family: String,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub rho_tilde: Option<f64>,
    #[serde(default = "default_c_decl")]
    pub c_decl: f64,
    #[serde(default)]
    pub q1_coeff: f64,
    #[serde(default)]
    pub q2_coeff: f64,
    #[serde(default)]
    pub q3_coeff: f64,
    #[serde(default)]
    pub q3_center: Vec<f64>,
    #[serde(default = "default_q3_radius")]
    pub q3_radius: f64,
}

fn default_rho() -> f64 {
    2.0
}
fn default_c_decl() -> f64 {
    2.0
}
fn default_q3_radius() -> f64 {
    1.0
}

impl Default for PotentialSection {
    fn default() -> Self {
        Self {
            family: "zero".into(),
            rho: default_rho(),
            rho_tilde: None,
            c_decl: default_c_decl(),
            q1_coeff: 0.0,
            q2_coeff: 0.0,
            q3_coeff: 0.0,
            q3_center: vec![],
            q3_radius: default_q3_radius(),
        }
    }
}

impl PotentialSection {
    pub fn to_spec(&self) -> Result<PotentialSpec> {
        let family = match self.family.as_str() {
            "zero" => PotentialFamily::Zero,
            "builtin" => PotentialFamily::Builtin {
                q1_coeff: self.q1_coeff,
                q2_coeff: self.q2_coeff,
                q3_coeff: self.q3_coeff,
                q3_center: self.q3_center.clone(),
                q3_radius: self.q3_radius,
            },
            "radial-linear" => PotentialFamily::RadialLinear { coeff: self.q1_coeff },
            other => {
                return Err(CoreError::InvalidConfig(format!(
                    "unknown potential family `{other}` (expected zero, builtin, radial-linear)"
                )))
            }
        };
        let spec = PotentialSpec {
            family,
            rho: self.rho,
            rho_tilde: self.rho_tilde.unwrap_or(self.rho),
            c_decl: self.c_decl,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    #[serde(default = "default_sign")]
    pub sign: String,
    /// Box-sensitivity checks run for Γ ≥ this value.
    #[serde(default = "default_box_gamma")]
    pub box_check_gamma_min: f64,
}

fn default_lambdas() -> Vec<f64> {
    vec![0.0]
}
fn default_gammas() -> Vec<f64> {
    vec![1.0, 0.5, 0.25, 0.125]
}
fn default_sign() -> String {
    "plus".into()
}
fn default_box_gamma() -> f64 {
    0.25
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            lambdas: default_lambdas(),
            gammas: default_gammas(),
            sign: default_sign(),
            box_check_gamma_min: default_box_gamma(),
        }
    }
}

impl SweepSection {
    pub fn sign(&self) -> Result<Sign> {
        match self.sign.as_str() {
            "plus" | "+" => Ok(Sign::Plus),
            "minus" | "-" => Ok(Sign::Minus),
            other => Err(CoreError::InvalidConfig(format!("unknown sign `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub center: Vec<f64>,
    pub width: Vec<f64>,
    #[serde(default)]
    pub k: Vec<f64>,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_amplitude() -> f64 {
    1.0
}

impl Default for SourceSection {
    fn default() -> Self {
        Self { center: vec![0.0, 0.0], width: vec![6.0, 6.0], k: vec![], amplitude: 1.0 }
    }
}

impl SourceSection {
    pub fn to_bump(&self, d: usize) -> Result<BumpSpec> {
        if self.center.len() != d || self.width.len() != d {
            return Err(CoreError::InvalidConfig(
                "source center/width must match the grid dimension".into(),
            ));
        }
        let mut k = self.k.clone();
        k.resize(d, 0.0);
        Ok(BumpSpec {
            center: self.center.clone(),
            width: self.width.clone(),
            k,
            amplitude: self.amplitude,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSection {
    #[serde(default = "default_variant")]
    pub variant: String,
    /// Cutoff index; omit for automatic selection.
    #[serde(default)]
    pub l: Option<u32>,
}

fn default_variant() -> String {
    "sqrt".into()
}

impl Default for PhaseSection {
    fn default() -> Self {
        Self { variant: default_variant(), l: None }
    }
}

impl PhaseSection {
    pub fn variant(&self) -> Result<crate::phase::PhaseVariant> {
        match self.variant.as_str() {
            "sqrt" => Ok(crate::phase::PhaseVariant::Sqrt),
            "simple" => Ok(crate::phase::PhaseVariant::Simple),
            other => {
                Err(CoreError::InvalidConfig(format!("unknown phase variant `{other}`")))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
    /// Residual the identity checks must reach on their finest grid.
    #[serde(default = "default_identity_tol")]
    pub identity_tol: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_restart")]
    pub restart: usize,
    #[serde(default = "default_method")]
    pub method: String,
}

fn default_solver_tol() -> f64 {
    1e-8
}
fn default_identity_tol() -> f64 {
    1e-2
}
fn default_max_iterations() -> usize {
    10_000
}
fn default_restart() -> usize {
    80
}
fn default_method() -> String {
    "auto".into()
}

impl Default for ToleranceSection {
    fn default() -> Self {
        Self {
            solver_tol: default_solver_tol(),
            identity_tol: default_identity_tol(),
            max_iterations: default_max_iterations(),
            restart: default_restart(),
            method: default_method(),
        }
    }
}

impl ToleranceSection {
    pub fn to_solver(&self) -> Result<SolverConfig> {
        let method = match self.method.as_str() {
            "auto" => MethodChoice::Auto,
            "direct" | "direct-LU" => MethodChoice::Direct,
            "iterative" => MethodChoice::Iterative,
            other => {
                return Err(CoreError::InvalidConfig(format!(
                    "unknown solver method `{other}`"
                )))
            }
        };
        Ok(SolverConfig {
            tol: self.solver_tol,
            max_iterations: self.max_iterations,
            restart: self.restart,
            method,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    /// Refinement ladder for the identity checks.
    #[serde(default = "default_h_values")]
    pub h_values: Vec<f64>,
    /// Weight support index m (`Θ` supported in `{f ≥ 2^m}`).
    #[serde(default = "default_m")]
    pub m: u32,
    /// Weight kind: `bar-chi` or `bar-chi-theta`.
    #[serde(default = "default_theta_kind")]
    pub theta: String,
    #[serde(default = "default_nu")]
    pub nu: u32,
    #[serde(default)]
    pub test_fields: Option<usize>,
    #[serde(default)]
    pub field_seed: Option<u64>,
    /// Centers and widths of the test-field sampling box.
    #[serde(default)]
    pub field_center_lo: Option<Vec<f64>>,
    #[serde(default)]
    pub field_center_hi: Option<Vec<f64>>,
    #[serde(default)]
    pub field_width: Option<Vec<f64>>,
    #[serde(default = "default_k_max")]
    pub field_k_max: f64,
    /// Minimum fitted order relative to the stencil order.
    #[serde(default = "default_order_margin")]
    pub order_margin: f64,
}

fn default_h_values() -> Vec<f64> {
    vec![0.4, 0.2, 0.1]
}
fn default_m() -> u32 {
    2
}
fn default_theta_kind() -> String {
    "bar-chi".into()
}
fn default_nu() -> u32 {
    3
}
fn default_k_max() -> f64 {
    1.0
}
fn default_order_margin() -> f64 {
    0.3
}

impl Default for CheckSection {
    fn default() -> Self {
        Self {
            h_values: default_h_values(),
            m: default_m(),
            theta: default_theta_kind(),
            nu: default_nu(),
            test_fields: None,
            field_seed: None,
            field_center_lo: None,
            field_center_hi: None,
            field_width: None,
            field_k_max: default_k_max(),
            order_margin: default_order_margin(),
        }
    }
}

impl CheckSection {
    pub fn theta_choice(&self, delta: f64) -> Result<ThetaChoice> {
        match self.theta.as_str() {
            "bar-chi" => Ok(ThetaChoice::BarChi { m: self.m }),
            "bar-chi-theta" => {
                Ok(ThetaChoice::BarChiTheta { m: self.m, nu: self.nu, delta })
            }
            "zero" => Ok(ThetaChoice::Zero),
            other => {
                Err(CoreError::InvalidConfig(format!("unknown theta kind `{other}`")))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoelderSection {
    #[serde(default = "default_gamma_max")]
    pub gamma_max: f64,
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_gamma_max() -> f64 {
    0.5
}
fn default_pairs() -> usize {
    5
}
fn default_s() -> f64 {
    1.0
}
fn default_samples() -> usize {
    3
}

impl Default for HoelderSection {
    fn default() -> Self {
        Self {
            gamma_max: default_gamma_max(),
            pairs: default_pairs(),
            s: default_s(),
            samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SommerfeldSection {
    #[serde(default = "default_som_gammas")]
    pub gammas: Vec<f64>,
    #[serde(default = "default_extrap_tol")]
    pub extrapolation_tol: f64,
    #[serde(default = "default_slope_window")]
    pub slope_window: usize,
}

fn default_som_gammas() -> Vec<f64> {
    vec![0.4, 0.2, 0.1, 0.05]
}
fn default_extrap_tol() -> f64 {
    0.25
}
fn default_slope_window() -> usize {
    4
}

impl Default for SommerfeldSection {
    fn default() -> Self {
        Self {
            gammas: default_som_gammas(),
            extrapolation_tol: default_extrap_tol(),
            slope_window: default_slope_window(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WkbSection {
    #[serde(default = "default_xi_width")]
    pub xi_width: f64,
    #[serde(default = "default_f_on")]
    pub f_on: [f64; 2],
    #[serde(default = "default_f_off")]
    pub f_off: [f64; 2],
    #[serde(default = "default_wkb_h")]
    pub h_values: Vec<f64>,
}

fn default_xi_width() -> f64 {
    0.45
}
fn default_f_on() -> [f64; 2] {
    [2.0, 3.0]
}
fn default_f_off() -> [f64; 2] {
    [6.0, 8.0]
}
fn default_wkb_h() -> Vec<f64> {
    vec![0.16, 0.08, 0.04]
}

impl Default for WkbSection {
    fn default() -> Self {
        Self {
            xi_width: default_xi_width(),
            f_on: default_f_on(),
            f_off: default_f_off(),
            h_values: default_wkb_h(),
        }
    }
}

impl WkbSection {
    pub fn to_spec(&self, sign: Sign) -> WkbSpec {
        WkbSpec {
            sign,
            xi_width: self.xi_width,
            f_on_lo: self.f_on[0],
            f_on_hi: self.f_on[1],
            f_off_lo: self.f_off[0],
            f_off_hi: self.f_off[1],
        }
    }
}

/// The full run configuration. Every section except `grid` has defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    #[serde(default)]
    pub potential: PotentialSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub source: SourceSection,
    #[serde(default)]
    pub phase: PhaseSection,
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub checks: CheckSection,
    #[serde(default)]
    pub hoelder: HoelderSection,
    #[serde(default)]
    pub sommerfeld: SommerfeldSection,
    #[serde(default)]
    pub wkb: WkbSection,
}

fn default_delta() -> f64 {
    0.5
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text)
            .map_err(|e| CoreError::InvalidConfig(format!("config parse error: {e}")))
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Echo for the manifest (normalized TOML).
    pub fn echo(&self) -> String {
        toml::to_string_pretty(self).unwrap_or_default()
    }

    pub fn sweep_config(&self, lambda: f64) -> Result<SweepConfig> {
        let grid = self.grid.to_grid()?;
        let d = grid.dim();
        Ok(SweepConfig {
            grid,
            potential: self.potential.to_spec()?,
            lambda,
            gammas: self.sweep.gammas.clone(),
            sign: self.sweep.sign()?,
            source: self.source.to_bump(d)?,
            beta: self.beta,
            phase_l: self.phase.l,
            solver: self.tolerances.to_solver()?,
            box_check_gamma_min: self.sweep.box_check_gamma_min,
        })
    }

    pub fn hoelder_config(&self) -> Result<HoelderConfig> {
        Ok(HoelderConfig {
            grid: self.grid.to_grid()?,
            potential: self.potential.to_spec()?,
            lambda: *self.sweep.lambdas.first().unwrap_or(&0.0),
            gamma_max: self.hoelder.gamma_max,
            pairs: self.hoelder.pairs,
            s: self.hoelder.s,
            samples: self.hoelder.samples,
            seed: self.seed,
            solver: self.tolerances.to_solver()?,
        })
    }

    pub fn sommerfeld_config(&self) -> Result<SommerfeldConfig> {
        let grid = self.grid.to_grid()?;
        let d = grid.dim();
        Ok(SommerfeldConfig {
            grid,
            potential: self.potential.to_spec()?,
            lambda: *self.sweep.lambdas.first().unwrap_or(&0.0),
            gammas: self.sommerfeld.gammas.clone(),
            beta: self.beta,
            source: self.source.to_bump(d)?,
            phase_l: self.phase.l,
            solver: self.tolerances.to_solver()?,
            extrapolation_tol: self.sommerfeld.extrapolation_tol,
            slope_window: self.sommerfeld.slope_window,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
bounds = [[-10.0, 10.0], [-10.0, 10.0]]
h = 0.5
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.grid.stencil_order, 2);
        assert_eq!(cfg.sweep.gammas, vec![1.0, 0.5, 0.25, 0.125]);
        assert_eq!(cfg.potential.family, "zero");
        cfg.sweep_config(0.0).unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = format!("{MINIMAL}\nunknown_key = 1\n");
        let err = RunConfig::parse(&bad).unwrap_err();
        assert!(err.to_string().contains("unknown_key"), "{err}");
        let bad_section = format!("{MINIMAL}\n[grid.extra]\nfoo = 1\n");
        assert!(RunConfig::parse(&bad_section).is_err());
    }

    #[test]
    fn missing_required_key_names_it() {
        let err = RunConfig::parse("[grid]\nbounds = [[-1.0, 1.0], [-1.0, 1.0]]\n")
            .unwrap_err();
        assert!(err.to_string().contains('h'), "{err}");
    }

    #[test]
    fn echo_roundtrips() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        let echo = cfg.echo();
        let reparsed = RunConfig::parse(&echo).unwrap();
        assert_eq!(reparsed.grid.h, 0.5);
    }
}

//! Oracles for the asymptotic phase machinery: the closed-form residual
//! of the factorization remainder, its decay exponents, the phase bound
//! fits, and finite-difference verification of the commutator remainders.

use starkshell_core::geometry::{eval_geometry, Point};
use starkshell_core::grid::GridSpec;
use starkshell_core::operators::Discretization;
use starkshell_core::phase::{
    eval_phase, eval_q6, phase_bounds_fit, select_l, PhaseParams, PhaseVariant, Sign,
};
use starkshell_core::potential::PotentialSpec;
use starkshell_core::util::{central_deriv, fit_order, linear_fit};
use starkshell_core::verify::q4_q5_at;
use starkshell_core::C64;

/// The closed-form value of `(p^f a r) + r a² − r + q − z` for the sqrt phase
/// variant on the far region (d = 2, upper sign, `χ̄` factors ≡ 1):
/// `(i/4)(z f r⁻² + 2∂^f q₁ − f r⁻² q₁)/√((z+r−q₁)/r) + r⁻²/8 − (3/16) f² r⁻³ + q₂`.
fn q6_closed_form(spec: &PotentialSpec, z: C64, p: &Point) -> C64 {
    let g = eval_geometry(p);
    let coords = [p.x, p.y[0]];
    let v = spec.eval_raw(&coords, g.f, &g.grad_f);
    let df_q1: f64 = g.grad_f.iter().zip(&v.grad_q1).map(|(a, b)| a * b).sum();
    let r = g.r;
    let f = g.f;
    let w = (C64::new(r - v.q1, 0.0) + z) / r;
    C64::new(0.0, 0.25)
        * (z * f / (r * r) + 2.0 * df_q1 - f / (r * r) * v.q1)
        / w.sqrt()
        + 0.125 / (r * r)
        - 3.0 / 16.0 * f * f / (r * r * r)
        + v.q2
}

#[test]
fn q6_matches_simplified_closed_form() {
    // valid where χ̄_l ≡ 1 and q₃ is absent; builtin q₁, q₂ exercise the
    // potential-dependent terms.
    let spec = PotentialSpec::builtin(0.3, 0.5, 0.0, 1.0);
    let z = C64::new(2.0, 0.5);
    let params = PhaseParams::new(z, 0, Sign::Plus, PhaseVariant::Sqrt);
    for p in [
        Point::new_2d(40.0, 0.0),
        Point::new_2d(30.0, 15.0),
        Point::new_2d(100.0, -20.0),
        Point::new_2d(12.0, 5.0),
    ] {
        let got = eval_q6(&params, &spec, &p).unwrap();
        let expect = q6_closed_form(&spec, z, &p);
        assert!(
            (got - expect).norm() <= 1e-12 * (1.0 + expect.norm()),
            "at ({}, {}): {got} vs {expect}",
            p.x,
            p.y[0]
        );
    }
}

#[test]
fn q6_simple_variant_decays_on_axis() {
    // q = 0, z = 0, d = 2, simple variant: on the positive x-axis the
    // remainder reduces to −f⁻⁴, so the log-log slope of |q₆| against f
    // over f ∈ [8, 256] is −4, comfortably past the −(1+min{2,ρ,ρ̃}) = −3
    // requirement.
    let spec = PotentialSpec::zero();
    let params = PhaseParams::new(C64::new(0.0, 0.0), 0, Sign::Plus, PhaseVariant::Simple);
    let mut fs = Vec::new();
    let mut qs = Vec::new();
    for i in 0..=20 {
        let f = 8.0 * 2f64.powf(i as f64 * 0.25); // f in [8, 256]
        let x = 0.5 * f * f; // on-axis: r = x, f² = 2x
        let q6 = eval_q6(&params, &spec, &Point::new_2d(x, 0.0)).unwrap();
        fs.push(f);
        qs.push(q6.norm());
        // exact on-axis value is −f⁻⁴
        assert!(
            (q6 + C64::new(f.powi(-4), 0.0)).norm() <= 1e-9 * f.powi(-4) + 1e-17,
            "q6 at f = {f}: {q6}"
        );
    }
    let (slope, r2) = fit_order(&fs, &qs);
    assert!(slope <= -3.0, "decay exponent {slope} (need <= -3)");
    assert!(r2 > 0.999);
}

#[test]
fn q6_bound_fit_uniform_over_z() {
    // χ̄_m|q₆| ≤ C′ χ̄_m f^{−1−min{2,ρ,ρ̃}}: fit C′ over a far-region grid
    // and a sample of z ∈ I₊, and check the fit does not degrade as Γ ↓.
    let spec = PotentialSpec::builtin(0.2, 0.3, 0.0, 1.5);
    let expo = 1.0 + spec.min2_rho();
    let mut per_z = Vec::new();
    for gamma in [1.0, 0.5, 0.25] {
        let z = C64::new(0.5, gamma);
        let params = PhaseParams::new(z, 0, Sign::Plus, PhaseVariant::Sqrt);
        let mut c = 0.0f64;
        for i in 0..40 {
            for j in 0..10 {
                let f = 8.0 + i as f64 * 4.0;
                let x = 0.5 * f * f - j as f64; // sweep slightly off-axis
                let y = 2.0 * j as f64;
                let p = Point::new_2d(x, y);
                if p.radius() + p.x < 2.0 {
                    continue;
                }
                let g = eval_geometry(&p);
                let q6 = eval_q6(&params, &spec, &p).unwrap();
                c = c.max(q6.norm() * g.f.powf(expo));
            }
        }
        per_z.push(c);
    }
    let max = per_z.iter().copied().fold(0.0, f64::max);
    let min = per_z.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(max.is_finite() && max > 0.0);
    assert!(max / min < 1.5, "fit not uniform over the z sample: {per_z:?}");
}

#[test]
fn phase_bound_triple_fits() {
    // |a| ≤ C, Im a ≥ ¼ χ̄_l f r⁻², |∂̃a| ≤ C f^{−1−min{2,ρ,ρ̃}} r⁻¹,
    // fitted over a grid and uniform over a z-sample of I₊.
    let grid = GridSpec::new_2d(-10.0, 60.0, -25.0, 25.0, 0.5);
    let disc = Discretization::new(grid).unwrap();
    let spec = PotentialSpec::builtin(0.3, 0.2, 0.0, 1.0);
    let zs: Vec<C64> = [1.0, 0.5, 0.25, 0.125]
        .iter()
        .map(|&g| C64::new(0.5, g))
        .collect();
    let l = select_l(&disc, &spec, &zs, 0.25).unwrap();
    let base = PhaseParams::new(zs[0], l, Sign::Plus, PhaseVariant::Sqrt);
    let report = phase_bounds_fit(&base, &zs, &spec, &disc).unwrap();
    assert!(report.c_abs.is_finite() && report.c_abs < 10.0, "C = {}", report.c_abs);
    assert!(
        report.im_margin >= -1e-14,
        "Im a ≥ ¼χ̄_l f r⁻² violated by {}",
        report.im_margin
    );
    assert!(report.c_grad.is_finite() && report.c_grad > 0.0);
    // uniformity across the z sample
    let max = report.c_abs_per_z.iter().copied().fold(0.0, f64::max);
    let min = report.c_abs_per_z.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(max / min < 2.0, "per-z |a| fits: {:?}", report.c_abs_per_z);
}

#[test]
fn phase_l_selection_rejects_deep_negative_energies() {
    // strongly negative Re z forces a larger cutoff index
    let grid = GridSpec::new_2d(-10.0, 30.0, -15.0, 15.0, 0.5);
    let disc = Discretization::new(grid).unwrap();
    let spec = PotentialSpec::zero();
    let l0 = select_l(&disc, &spec, &[C64::new(0.0, 0.5)], 0.25).unwrap();
    let l_neg = select_l(&disc, &spec, &[C64::new(-8.0, 0.5)], 0.25).unwrap();
    assert_eq!(l0, 0);
    assert!(l_neg > l0, "l = {l_neg} should exceed {l0}");
    // and the checked constructor enforces admissibility
    assert!(PhaseParams::checked(
        C64::new(-8.0, 0.5),
        0,
        Sign::Plus,
        PhaseVariant::Sqrt,
        &disc,
        &spec
    )
    .is_err());
}

#[test]
fn q4_q5_closed_forms_match_finite_differences() {
    // q₄ and q₅ are assembled from far-region closed forms; verify them
    // against Richardson finite differences of their defining fields.
    let spec = PotentialSpec::builtin(0.4, 0.6, 0.0, 1.0);
    for p in [Point::new_2d(30.0, 10.0), Point::new_2d(60.0, -25.0)] {
        let g = eval_geometry(&p);
        let coords = [p.x, p.y[0]];
        let (q4, q5) = q4_q5_at(&spec, &coords, g.f, g.r, &g.grad_f, 2);

        let h = 0.05 * (1.0 + g.r / 50.0);
        let gfs_at = |x: f64, y: f64| eval_geometry(&Point::new_2d(x, y)).grad_f_sq;
        let lap_gfs = {
            let d2x = central_deriv(
                |x| central_deriv(|xx| gfs_at(xx, p.y[0]), x, h),
                p.x,
                h,
            );
            let d2y = central_deriv(
                |y| central_deriv(|yy| gfs_at(p.x, yy), y, h),
                p.y[0],
                h,
            );
            d2x + d2y
        };
        let df_gfs = {
            let dx = central_deriv(|x| gfs_at(x, p.y[0]), p.x, h);
            let dy = central_deriv(|y| gfs_at(p.x, y), p.y[0], h);
            g.grad_f[0] * dx + g.grad_f[1] * dy
        };
        let v = spec.eval_raw(&coords, g.f, &g.grad_f);
        let df_q1: f64 = g.grad_f.iter().zip(&v.grad_q1).map(|(a, b)| a * b).sum();
        let gfs = g.grad_f_sq;
        let q4_fd = -0.25 * lap_gfs - 0.5 * gfs * g.lap_f / g.f - df_gfs / g.f
            + gfs * gfs / (g.f * g.f)
            + gfs * v.q2;
        // d = 2: Δ²f = 0 and Δf = 0 in the far region
        let q5_fd = -0.5 * lap_gfs / g.f + df_gfs / (g.f * g.f)
            - gfs * gfs / (g.f * g.f * g.f)
            + 2.0 * gfs * v.total() / g.f
            - df_q1;
        assert!(
            (q4 - q4_fd).abs() <= 1e-7 * (1.0 + q4_fd.abs()),
            "q4 {q4} vs fd {q4_fd}"
        );
        assert!(
            (q5 - q5_fd).abs() <= 1e-7 * (1.0 + q5_fd.abs()),
            "q5 {q5} vs fd {q5_fd}"
        );
    }
}

#[test]
fn q4_q5_decay_bounds_fit() {
    // |q₄| ≤ C f^{−1−min{3,ρ}} r⁻¹ and q₅ ≥ −C f^{−1−min{6,ρ}} as
    // grid-sampled fits.
    let grid = GridSpec::new_2d(-10.0, 120.0, -40.0, 40.0, 0.5);
    let disc = Discretization::new(grid).unwrap();
    let spec = PotentialSpec::builtin(0.3, 0.5, 0.0, 1.0);
    let c4 = starkshell_core::verify::q4_bound_fit(&disc, &spec);
    let c5 = starkshell_core::verify::q5_bound_fit(&disc, &spec);
    assert!(c4.is_finite() && c4 > 0.0 && c4 < 50.0, "C4 = {c4}");
    assert!(c5.is_finite() && c5 < 50.0, "C5 = {c5}");
}

#[test]
fn sanity_real_sqrt_keeps_imaginary_part_in_i4_term() {
    // q₁ = q₂ = 0 and real z: the square root is real, so Im a is exactly
    // the (i/4) f r⁻² term's contribution, and the imaginary part of q₆
    // comes only from that term's algebra.
    let spec = PotentialSpec::zero();
    let params = PhaseParams::new(C64::new(3.0, 0.0), 0, Sign::Plus, PhaseVariant::Sqrt);
    let p = Point::new_2d(60.0, 8.0);
    let g = eval_geometry(&p);
    let a = eval_phase(&params, &spec, &p).unwrap();
    let cut = starkshell_core::geometry::barchi_m_of_f(g.f, 0);
    assert!((a.im - 0.25 * cut * g.f / (g.r * g.r)).abs() < 1e-15);
    let q6 = eval_q6(&params, &spec, &p).unwrap();
    // closed form: Im q₆ = (1/4)(z f r⁻²)/√w with w real here
    let w = ((g.r + 3.0) / g.r).sqrt();
    let expect_im = 0.25 * 3.0 * g.f / (g.r * g.r) / w;
    assert!((q6.im - expect_im).abs() <= 1e-12 * expect_im.abs());
}

#[test]
fn exponent_fit_machinery_recovers_known_slope() {
    let xs: Vec<f64> = (1..=8).map(|i| i as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
    let (slope, intercept, r2, se) = linear_fit(&xs, &ys);
    assert!((slope - 3.0).abs() < 1e-12);
    assert!((intercept + 1.0).abs() < 1e-12);
    assert!(r2 > 0.999999);
    assert!(se < 1e-12);
}

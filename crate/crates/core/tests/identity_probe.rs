//! Convergence regression tests for the two operator identities at
//! reduced scale (the acceptance-scale runs live in the CLI crate).

use starkshell_core::grid::GridSpec;
use starkshell_core::phase::{PhaseParams, PhaseVariant, Sign};
use starkshell_core::potential::PotentialSpec;
use starkshell_core::verify::{
    commutator_identity_check, factorization_check, seeded_bumps, FactorizationOptions,
    ThetaChoice,
};
use starkshell_core::C64;

#[test]
fn commutator_identity_converges_free_case() {
    // q = 0, Θ = χ̄_m: residual decays at the stencil order.
    let grid = GridSpec::new_2d(10.0, 90.0, -14.0, 14.0, 0.4);
    let bumps = seeded_bumps(2, 42, &[40.0, -3.0], &[55.0, 3.0], &[9.0, 7.0], 1.0);
    let report = commutator_identity_check(
        &grid,
        &[0.4, 0.2, 0.1],
        &PotentialSpec::zero(),
        &ThetaChoice::BarChi { m: 2 },
        &bumps,
    )
    .unwrap();
    for lvl in &report.levels {
        eprintln!("h = {}: max residual {:.3e}", lvl.h, lvl.max_residual);
    }
    eprintln!(
        "order {:?} r2 {:?}",
        report.convergence_order, report.r_squared
    );
    assert!(report.convergence_order.unwrap() >= 1.7);
    assert!(report.reliable);
}

#[test]
fn factorization_converges_and_q6_matters() {
    let grid = GridSpec::new_2d(30.0, 110.0, -18.0, 18.0, 0.4);
    let potential = PotentialSpec::zero();
    let params = PhaseParams::new(C64::new(30.0, 0.5), 0, Sign::Plus, PhaseVariant::Sqrt);
    let m = 2;
    // fields supported in {f >= 8}: r + x >= 64
    let bumps = seeded_bumps(2, 7, &[55.0, -4.0], &[70.0, 4.0], &[16.0, 9.0], 0.0);
    let with_q6 = factorization_check(
        &grid,
        &[0.4, 0.2, 0.1],
        &potential,
        &params,
        m,
        &bumps,
        FactorizationOptions::default(),
    )
    .unwrap();
    for lvl in &with_q6.levels {
        eprintln!("h = {}: residual {:.3e}", lvl.h, lvl.max_residual);
    }
    eprintln!(
        "order {:?} r2 {:?}",
        with_q6.convergence_order, with_q6.r_squared
    );
    let ablated = factorization_check(
        &grid,
        &[0.4],
        &potential,
        &params,
        m,
        &bumps,
        FactorizationOptions { ablate_q6: true },
    )
    .unwrap();
    eprintln!(
        "ablated residual at h=0.4: {:.3e} vs {:.3e} (x{:.1})",
        ablated.levels[0].max_residual,
        with_q6.levels[0].max_residual,
        ablated.levels[0].max_residual / with_q6.levels[0].max_residual
    );
    assert!(with_q6.convergence_order.unwrap() >= 1.7);
    assert!(ablated.levels[0].max_residual >= 10.0 * with_q6.levels[0].max_residual);
}

#[test]
fn commutator_identity_fourth_order_stencil() {
    let mut grid = GridSpec::new_2d(10.0, 90.0, -14.0, 14.0, 0.4);
    grid.stencil_order = 4;
    let bumps = seeded_bumps(2, 42, &[40.0, -3.0], &[55.0, 3.0], &[9.0, 7.0], 1.0);
    let report = commutator_identity_check(
        &grid,
        &[0.4, 0.2, 0.1],
        &PotentialSpec::zero(),
        &ThetaChoice::BarChi { m: 2 },
        &bumps,
    )
    .unwrap();
    let order = report.convergence_order.unwrap();
    assert!(order >= 3.7, "4th-order stencil fitted order {order}");
    assert!(report.reliable);
}

#[test]
fn commutator_identity_holds_in_three_dimensions() {
    // d = 3 activates every (d−2)-dependent term: Δf and Δ²f in the
    // remainders, and the extra transverse axis in the gradient forms.
    use starkshell_core::grid::{AxisBounds, GridSpec};
    let grid = GridSpec {
        bounds: vec![
            AxisBounds { min: 10.0, max: 42.0 },
            AxisBounds { min: -6.0, max: 6.0 },
            AxisBounds { min: -6.0, max: 6.0 },
        ],
        h: 0.4,
        stencil_order: 2,
        cap: None,
    };
    let bump = starkshell_core::verify::BumpSpec {
        center: vec![25.0, 0.0, 0.0],
        width: vec![8.0, 4.0, 4.0],
        k: vec![0.6, -0.4, 0.3],
        amplitude: 1.0,
    };
    let report = commutator_identity_check(
        &grid,
        &[0.4, 0.2],
        &PotentialSpec::builtin(0.3, 0.5, 0.0, 1.0),
        &ThetaChoice::BarChi { m: 2 },
        &[bump],
    )
    .unwrap();
    let r0 = report.levels[0].max_residual;
    let r1 = report.levels[1].max_residual;
    let ratio = r0 / r1;
    assert!(
        (3.0..=5.5).contains(&ratio),
        "d = 3 residual should drop ~4x per halving: {r0:.3e} -> {r1:.3e} (x{ratio:.2})"
    );
}

#[test]
fn wkb_annihilation_holds_in_three_dimensions() {
    // the (f^{d−2} r)^{−1/2} amplitude exponent only matters for d ≥ 3
    use starkshell_core::grid::{AxisBounds, GridSpec};
    use starkshell_core::verify::{wkb_annihilation_check, WkbSpec};
    let grid = GridSpec {
        bounds: vec![
            AxisBounds { min: -4.0, max: 16.0 },
            AxisBounds { min: -3.2, max: 3.2 },
            AxisBounds { min: -3.2, max: 3.2 },
        ],
        h: 0.16,
        stencil_order: 2,
        cap: None,
    };
    let spec = WkbSpec { f_off_lo: 4.0, f_off_hi: 5.0, ..WkbSpec::default() };
    let report = wkb_annihilation_check(&grid, &[0.16, 0.08], &spec).unwrap();
    let ratio = report.levels[0].residual / report.levels[1].residual;
    assert!(
        (3.0..=5.5).contains(&ratio),
        "d = 3 annihilation residual should drop ~4x per halving, got x{ratio:.2}"
    );
}

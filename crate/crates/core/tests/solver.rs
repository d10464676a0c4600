use std::f64::consts::PI;

use bec_oct::field::inner_product;
use bec_oct::solver::{groundstate, groundstate_at, GroundstateOptions, KineticModel};
use bec_oct::{
    propagate, propagate_adjoint, Complex64, Control, Drive, Grid, PotentialFamily, PropagationSpec, Scheme, SpaceGrid,
    WaveField,
};

fn single_well() -> PotentialFamily {
    PotentialFamily::ShiftedHarmonic { x0: 5.0 }
}

fn spec_1d(family: PotentialFamily, scheme: Scheme, t: f64, n_t: usize) -> PropagationSpec {
    PropagationSpec::new(Grid::new_1d(-10.0, 20.0, 500, t, n_t).unwrap(), family, scheme)
}

fn overlap2(a: &WaveField, b: &WaveField) -> f64 {
    inner_product(a, b).unwrap().norm_sqr()
}

#[test]
fn plane_waves_keep_their_amplitude() {
    let grid = Grid::new_1d(0.0, 10.0, 64, 1.0, 100).unwrap();
    let k = 3.0 * 2.0 * PI / 10.0;
    let mut psi = WaveField::from_fn(grid.space, |x, _| Complex64::from_polar(1.0, k * x));
    psi.normalize();
    let amp = psi.values()[0].norm();
    let zero = vec![0.0; 101];
    let dx = grid.space.x.spacing();
    let flat = PotentialFamily::Tabulated(std::sync::Arc::new(
        bec_oct::TabulatedPotential::new(grid.space, vec![0.0, 1.0], vec![vec![0.0; 64]; 2]).unwrap(),
    ));
    for scheme in [Scheme::CrankNicolson1d, Scheme::SplitOperator] {
        let spec = PropagationSpec::new(grid, flat.clone(), scheme);
        let traj = propagate(&spec, Drive::Temporal(&zero), &psi).unwrap();
        for m in [1, 50, 100] {
            let s = traj.snapshot(m).unwrap();
            for z in s.values() {
                assert!((z.norm() - amp).abs() < 1e-12);
            }
            let ratio = s.values()[5] / psi.values()[5];
            let per_step = match scheme {
                Scheme::CrankNicolson1d => {
                    // Cayley transform of the three-point eigenvalue
                    let w = (1.0 - (k * dx).cos()) / (dx * dx);
                    -2.0 * (0.5 * w * grid.time.dt()).atan()
                }
                _ => -0.5 * k * k * grid.time.dt(),
            };
            let expected = Complex64::from_polar(1.0, per_step * m as f64);
            assert!((ratio - expected).norm() < 1e-10, "{scheme:?} m={m}");
        }
    }
}

#[test]
fn harmonic_groundstate_is_stationary() {
    for scheme in [Scheme::CrankNicolson1d, Scheme::SplitOperator] {
        let spec = spec_1d(single_well(), scheme, 9.0, 500);
        let opts = GroundstateOptions {
            tau: spec.grid.time.dt(),
            kinetic: scheme.kinetic_model(),
            ..Default::default()
        };
        let gs = groundstate_at(&spec.potential, &spec.grid.space, 0.0, 0.0, &opts).unwrap();
        let traj = propagate(&spec, Drive::Temporal(&[0.0; 501]), &gs.state).unwrap();
        assert!(
            (overlap2(&traj.final_state(), &gs.state) - 1.0).abs() < 1e-6,
            "{scheme:?}"
        );
    }
}

#[test]
fn schemes_agree_on_transport() {
    let lin = Control::linear(500);
    let cn = spec_1d(single_well(), Scheme::CrankNicolson1d, 9.0, 500);
    let so = spec_1d(single_well(), Scheme::SplitOperator, 9.0, 500);
    let psi0 = WaveField::gaussian(cn.grid.space, 0.0, 0.0);
    let a = propagate(&cn, Drive::Temporal(lin.values()), &psi0)
        .unwrap()
        .final_state();
    let b = propagate(&so, Drive::Temporal(lin.values()), &psi0)
        .unwrap()
        .final_state();
    assert!(overlap2(&a, &b) >= 1.0 - 1e-4, "{}", overlap2(&a, &b));
}

#[test]
fn norm_is_conserved_every_step() {
    let grid = Grid::new_1d(-10.0, 20.0, 256, 5.0, 500).unwrap();
    let psi0 = {
        let mut f = WaveField::from_fn(grid.space, |x, _| {
            Complex64::from_polar(
                (-(x - 1.0).powi(2) / 3.0).exp() * (1.0 + 0.3 * (2.0 * x).sin()),
                0.8 * x,
            )
        });
        f.normalize();
        f
    };
    let wiggle = Control::from_fn(500, |s| s + 0.2 * (5.0 * s).sin());
    for (scheme, g) in [
        (Scheme::CrankNicolson1d, 0.0),
        (Scheme::SplitOperator, 0.0),
        (Scheme::SplitOperatorNonlinear, 20.0),
    ] {
        let spec = PropagationSpec::new(grid, single_well(), scheme).with_g(g);
        let traj = propagate(&spec, Drive::Temporal(wiggle.values()), &psi0).unwrap();
        for m in 0..=500 {
            let n = traj.snapshot(m).unwrap().norm_sqr();
            assert!((n - 1.0).abs() < 1e-10, "{scheme:?} step {m}: {n}");
        }
    }
}

#[test]
fn nonlinear_scheme_with_zero_coupling_is_bitwise_linear() {
    let lin = Control::linear(300);
    let a = spec_1d(single_well(), Scheme::SplitOperator, 4.0, 300);
    let b = PropagationSpec {
        scheme: Scheme::SplitOperatorNonlinear,
        ..a.clone()
    };
    let psi0 = WaveField::gaussian(a.grid.space, 0.0, 0.0);
    let ta = propagate(&a, Drive::Temporal(lin.values()), &psi0).unwrap();
    let tb = propagate(&b, Drive::Temporal(lin.values()), &psi0).unwrap();
    for m in 0..=300 {
        assert_eq!(ta.snapshot(m).unwrap().values(), tb.snapshot(m).unwrap().values());
    }
}

#[test]
fn nonlinear_groundstate_is_stationary() {
    // the splitting error of the real-time step bounds the drift to O(dt^2)
    let spec = spec_1d(single_well(), Scheme::SplitOperatorNonlinear, 8.0, 2000).with_g(20.0);
    let opts = GroundstateOptions {
        tau: spec.grid.time.dt(),
        ..Default::default()
    };
    let gs = groundstate_at(&spec.potential, &spec.grid.space, 0.0, 20.0, &opts).unwrap();
    let traj = propagate(&spec, Drive::Temporal(&[0.0; 2001]), &gs.state).unwrap();
    let rho0 = gs.state.density();
    let drift = (0..=2000).fold(0.0f64, |m, k| {
        let rho = traj.snapshot(k).unwrap().density();
        rho.iter().zip(&rho0).fold(m, |m, (a, b)| m.max((a - b).abs()))
    });
    assert!(drift < 1e-6, "{drift:e}");
}

#[test]
fn groundstates_follow_thomas_fermi_and_broaden() {
    let grid = SpaceGrid::new_1d(-15.0, 15.0, 512).unwrap();
    let v: Vec<f64> = grid.x.coords().iter().map(|x| 0.5 * x * x).collect();
    let opts = GroundstateOptions::default();
    let lin = groundstate(&grid, &v, 0.0, &opts).unwrap();
    assert!((lin.energy - 0.5).abs() < 1e-4);
    let mu_tf = 0.5 * (1.5f64 * 20.0).powf(2.0 / 3.0);
    assert!((mu_tf - 4.827).abs() < 1e-3);
    let gs = groundstate(&grid, &v, 20.0, &opts).unwrap();
    assert!(
        (gs.chemical_potential / mu_tf - 1.0).abs() < 0.05,
        "{}",
        gs.chemical_potential
    );
    let mut prev = 0.0;
    for kappa in [0.0, 5.0, 10.0, 20.0] {
        let s = groundstate(&grid, &v, kappa, &opts).unwrap().state;
        let w = bec_oct::analysis::observables_with(&s, &v, kappa).unwrap().width_x;
        assert!(w > prev, "kappa {kappa}: {w} <= {prev}");
        prev = w;
    }
}

#[test]
fn finite_difference_groundstate_matches_spectral_in_the_continuum() {
    let grid = SpaceGrid::new_1d(-10.0, 10.0, 400).unwrap();
    let v: Vec<f64> = grid.x.coords().iter().map(|x| 0.5 * x * x).collect();
    let fd = groundstate(
        &grid,
        &v,
        0.0,
        &GroundstateOptions {
            kinetic: KineticModel::FiniteDifference,
            ..Default::default()
        },
    )
    .unwrap();
    assert!((fd.energy - 0.5).abs() < 1e-3);
}

fn final_error(scheme: Scheme, n_t: usize, reference: &WaveField) -> f64 {
    let spec = PropagationSpec::new(Grid::new_1d(-10.0, 20.0, 256, 9.0, n_t).unwrap(), single_well(), scheme);
    let psi0 = WaveField::gaussian(spec.grid.space, 0.0, 0.0);
    let l = Control::linear(n_t);
    let f = propagate(&spec, Drive::Temporal(l.values()), &psi0)
        .unwrap()
        .final_state();
    f.max_abs_diff(reference)
}

#[test]
fn second_order_in_time() {
    for scheme in [Scheme::CrankNicolson1d, Scheme::SplitOperator] {
        let spec = PropagationSpec::new(
            Grid::new_1d(-10.0, 20.0, 256, 9.0, 1600).unwrap(),
            single_well(),
            scheme,
        );
        let psi0 = WaveField::gaussian(spec.grid.space, 0.0, 0.0);
        let reference = propagate(&spec, Drive::Temporal(Control::linear(1600).values()), &psi0)
            .unwrap()
            .final_state();
        let e1 = final_error(scheme, 200, &reference);
        let e2 = final_error(scheme, 400, &reference);
        let ratio = e1 / e2;
        assert!((3.0..=5.0).contains(&ratio), "{scheme:?}: {e1:e} / {e2:e} = {ratio}");
    }
}

#[test]
fn offset_subtraction_only_changes_the_global_phase() {
    let family = PotentialFamily::LambdaOffset {
        base: Box::new(PotentialFamily::DoubleWell { d: 4.0 }),
        coeffs: [0.7, 3.0, -1.2],
    };
    let full = PropagationSpec::new(
        Grid::new_1d(-12.0, 12.0, 480, 6.0, 500).unwrap(),
        family,
        Scheme::SplitOperator,
    );
    let shifted = PropagationSpec {
        subtract_offset: true,
        ..full.clone()
    };
    let psi0 = WaveField::gaussian(full.grid.space, 0.0, 0.0);
    let l = Control::linear(500);
    let a = propagate(&full, Drive::Temporal(l.values()), &psi0).unwrap();
    let b = propagate(&shifted, Drive::Temporal(l.values()), &psi0).unwrap();
    for m in (0..=500).step_by(25) {
        let (da, db) = (a.snapshot(m).unwrap().density(), b.snapshot(m).unwrap().density());
        for (x, y) in da.iter().zip(&db) {
            assert!((x - y).abs() < 1e-10);
        }
    }
    let phase = b.removed_phase();
    let restored = b.final_state().scaled(Complex64::from_polar(1.0, -phase));
    assert!(restored.max_abs_diff(&a.final_state()) < 1e-8);
}

fn p_terminal(traj_final: &WaveField) -> WaveField {
    traj_final.scaled(Complex64::new(0.0, 1.0))
}

#[test]
fn adjoint_is_reversible_and_unitary() {
    for scheme in [Scheme::CrankNicolson1d, Scheme::SplitOperator] {
        let spec = spec_1d(single_well(), scheme, 6.0, 400);
        let l = Control::from_fn(400, |s| s * s);
        let psi0 = WaveField::gaussian(spec.grid.space, 0.0, 0.0);
        let traj = propagate(&spec, Drive::Temporal(l.values()), &psi0).unwrap();
        let pt = p_terminal(&traj.final_state());
        let mut norms = Vec::new();
        let mut overlaps = Vec::new();
        let dv = spec.grid.space.cell_volume();
        let summary = propagate_adjoint(&spec, Drive::Temporal(l.values()), &traj, &pt, |node| {
            norms.push(node.p.iter().map(|z| z.norm_sqr()).sum::<f64>() * dv);
            let c: Complex64 = node
                .p
                .iter()
                .zip(node.psi)
                .map(|(a, b)| a.conj() * b)
                .sum::<Complex64>()
                * dv;
            overlaps.push(c);
            Ok(())
        })
        .unwrap();
        assert_eq!(norms.len(), 401);
        for n in &norms {
            assert!((n - norms[0]).abs() < 1e-10, "{scheme:?}");
        }
        for c in &overlaps {
            assert!((c - overlaps[0]).norm() < 1e-8, "{scheme:?}");
        }
        let again = propagate(&spec, Drive::Temporal(l.values()), &summary.p_initial).unwrap();
        assert!(again.final_state().max_abs_diff(&pt) < 1e-8, "{scheme:?}");
    }
}

#[test]
fn weak_nonlinearity_perturbs_the_adjoint_linearly() {
    let t = 4.0;
    let l = Control::linear(400);
    let base = spec_1d(single_well(), Scheme::SplitOperatorNonlinear, t, 400);
    let psi0 = WaveField::gaussian(base.grid.space, 0.0, 0.0);
    let p0 = |g: f64| {
        let spec = base.clone().with_g(g);
        let traj = propagate(&spec, Drive::Temporal(l.values()), &psi0).unwrap();
        let pt = p_terminal(&WaveField::gaussian(base.grid.space, 5.0, 0.0));
        propagate_adjoint(&spec, Drive::Temporal(l.values()), &traj, &pt, |_| Ok(()))
            .unwrap()
            .p_initial
    };
    let reference = p0(0.0);
    let diffs: Vec<f64> = [0.05, 0.1, 0.2]
        .iter()
        .map(|&k| p0(k).max_abs_diff(&reference))
        .collect();
    assert!(diffs[1] < 5.0 * 0.1 * t, "{diffs:?}");
    // linear scaling in kappa
    assert!((diffs[1] / diffs[0] - 2.0).abs() < 0.2, "{diffs:?}");
    assert!((diffs[2] / diffs[1] - 2.0).abs() < 0.2, "{diffs:?}");
}

#[test]
fn separable_potential_keeps_product_states() {
    let grid = Grid::new_2d((-8.0, 16.0, 128), (-6.0, 6.0, 32), 4.0, 200).unwrap();
    let family = PotentialFamily::Separable {
        along_x: Box::new(single_well()),
        omega_y: 1.5,
    };
    let spec = PropagationSpec::new(grid, family, Scheme::SplitOperator);
    let psi0 = WaveField::from_fn(grid.space, |x, y| {
        Complex64::new((-0.5 * x * x).exp() * (-0.75 * (y - 0.5).powi(2)).exp(), 0.0)
    });
    let mut psi0 = psi0;
    psi0.normalize();
    let l = Control::linear(200);
    let f = propagate(&spec, Drive::Temporal(l.values()), &psi0)
        .unwrap()
        .final_state();
    // rank-one check: psi(x, y) psi(x', y') = psi(x, y') psi(x', y)
    let ny = 32;
    let v = f.values();
    let mut worst = 0.0f64;
    for (ix, jx) in [(40, 70), (50, 60), (64, 80)] {
        for (iy, jy) in [(10, 20), (14, 18), (5, 25)] {
            let a = v[ix * ny + iy] * v[jx * ny + jy];
            let b = v[ix * ny + jy] * v[jx * ny + iy];
            worst = worst.max((a - b).norm());
        }
    }
    assert!(worst < 1e-8, "{worst:e}");
}

#[test]
fn stationary_2d_groundstate() {
    let grid = Grid::new_2d((-8.0, 8.0, 64), (-8.0, 8.0, 64), 2.0, 200).unwrap();
    let family = PotentialFamily::Separable {
        along_x: Box::new(PotentialFamily::ShiftedHarmonic { x0: 0.0 }),
        omega_y: 1.0,
    };
    let spec = PropagationSpec::new(grid, family, Scheme::SplitOperator);
    let opts = GroundstateOptions {
        tau: grid.time.dt(),
        ..Default::default()
    };
    let gs = groundstate_at(&spec.potential, &grid.space, 0.0, 0.0, &opts).unwrap();
    assert!((gs.energy - 1.0).abs() < 1e-4);
    let traj = propagate(&spec, Drive::Temporal(&[0.0; 201]), &gs.state).unwrap();
    assert!((overlap2(&traj.final_state(), &gs.state) - 1.0).abs() < 1e-6);
}

use std::f64::consts::PI;

use bec_oct::analysis::{observables, wigner, wigner_time_integrated};
use bec_oct::solver::{groundstate_at, GroundstateOptions};
use bec_oct::{Complex64, Drive, Grid, PotentialFamily, PropagationSpec, Scheme, SpaceGrid, WaveField};

#[test]
fn two_lobe_superposition_has_fringes_at_the_origin() {
    let grid = SpaceGrid::new_1d(-15.0, 15.0, 512).unwrap();
    let mut psi = WaveField::from_fn(grid, |x, _| {
        Complex64::new((-0.5 * (x - 4.0).powi(2)).exp() + (-0.5 * (x + 4.0).powi(2)).exp(), 0.0)
    });
    psi.normalize();
    let w = wigner(&psi).unwrap();
    assert!(w.sign_changes_along_p(0.0, 1e-3) >= 3);
    // lobes sit at +-4 with zero momentum and are positive there
    let nearest = |axis: &[f64], v: f64| {
        (0..axis.len())
            .min_by(|&a, &b| (axis[a] - v).abs().total_cmp(&(axis[b] - v).abs()))
            .unwrap()
    };
    let ix = |x: f64| nearest(&w.x, x);
    let ip0 = nearest(&w.p, 0.0);
    assert!(w.at(ix(4.0), ip0) > 0.0 && w.at(ix(-4.0), ip0) > 0.0);
    // fringe spacing along p is 2 pi / separation
    let row: Vec<f64> = (0..w.p.len()).map(|j| w.at(ix(0.0), j)).collect();
    let peak = row.iter().cloned().fold(0.0f64, f64::max);
    let first_min = (ip0..w.p.len()).find(|&j| row[j] < -0.5 * peak).unwrap();
    assert!((w.p[first_min] - PI / 8.0).abs() < 1.5 * w.dp());
}

#[test]
fn displaced_groundstate_moves_the_gaussian() {
    let grid = SpaceGrid::new_1d(-10.0, 20.0, 500).unwrap();
    let fam = PotentialFamily::ShiftedHarmonic { x0: 5.0 };
    let psi = WaveField::gaussian(grid, 5.0, 0.0);
    let (ex, ep, sx, sp) = wigner(&psi).unwrap().moments();
    assert!((ex - 5.0).abs() < 1e-6 && ep.abs() < 1e-6);
    assert!((sx * sp - 0.5).abs() < 0.01);
    let o = observables(&psi, &fam, 1.0, 0.0).unwrap();
    assert!((o.mean_x - 5.0).abs() < 1e-4 && (o.energy - 0.5).abs() < 1e-4);
}

#[test]
fn stationary_trajectory_integrates_to_t_times_the_snapshot() {
    let (t, n_t) = (4.0, 400);
    let grid = Grid::new_1d(-10.0, 20.0, 256, t, n_t).unwrap();
    let spec = PropagationSpec::new(
        grid,
        PotentialFamily::ShiftedHarmonic { x0: 5.0 },
        Scheme::CrankNicolson1d,
    );
    let opts = GroundstateOptions {
        tau: grid.time.dt(),
        kinetic: spec.scheme.kinetic_model(),
        ..Default::default()
    };
    let gs = groundstate_at(&spec.potential, &grid.space, 0.0, 0.0, &opts).unwrap();
    let traj = bec_oct::propagate(&spec, Drive::Temporal(&vec![0.0; n_t + 1]), &gs.state).unwrap();
    let single = wigner(&gs.state).unwrap();
    let peak = single.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for stride in [None, Some(1), Some(7)] {
        let w = wigner_time_integrated(&traj, stride).unwrap();
        assert!(w.time_integrated);
        let diff = w
            .values
            .iter()
            .zip(&single.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - t * b).abs()));
        assert!(diff < 1e-6 * t * peak, "{stride:?}: {diff:e}");
    }
    assert_eq!(wigner_time_integrated(&traj, None).unwrap().stride, Some(4));
}

#[test]
fn coherent_state_orbit_is_an_annulus() {
    let x0 = 5.0;
    let t = 2.0 * PI;
    let grid = Grid::new_1d(-10.0, 20.0, 300, t, 600).unwrap();
    let spec = PropagationSpec::new(grid, PotentialFamily::ShiftedHarmonic { x0 }, Scheme::SplitOperator);
    let psi0 = WaveField::gaussian(grid.space, 0.0, 0.0);
    let traj = bec_oct::propagate(&spec, Drive::Temporal(&vec![1.0; 601]), &psi0).unwrap();
    let w = wigner_time_integrated(&traj, Some(2)).unwrap();
    let dp = w.dp();
    let bins = 60;
    let (mut sum, mut count) = (vec![0.0; bins], vec![0usize; bins]);
    for (ix, x) in w.x.iter().enumerate() {
        for (ip, p) in w.p.iter().enumerate() {
            let b = (((x - x0).powi(2) + p * p).sqrt() / dp) as usize;
            if b < bins {
                sum[b] += w.at(ix, ip);
                count[b] += 1;
            }
        }
    }
    let mean: Vec<f64> = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let peak = (0..bins).max_by(|&a, &b| mean[a].total_cmp(&mean[b])).unwrap();
    let r_peak = (peak as f64 + 0.5) * dp;
    assert!((r_peak - x0).abs() <= dp, "peak radius {r_peak}");
    assert!(mean[0].abs() < 0.05 * mean[peak]);
}

//! Acceptance gate: one test per criterion, each printing a PASS/FAIL
//! line with the measured quantities. Tolerances are pinned here.

use haarwave::analysis::{coefficient_decay, error_table, spatial_convergence, temporal_convergence};
use haarwave::problem::{builtin, quad_simpson};
use haarwave::solver::{
    assemble, boundary_lift, initial_state, reconstruct, solve, startup_step, time_step,
};
use haarwave::stability::{stability_report, DEFAULT_STABILITY_TOL};
use haarwave::HaarBasis;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: u32, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("{verdict} criterion {criterion}: {detail}");
    assert!(ok, "criterion {criterion}: {detail}");
}

/// Example 1 at J=6, dt=1e-4, T=1: every reporting-grid error at or below
/// 5e-5, and the max error inside the band [2e-6, 5e-5].
#[test]
fn criterion_1_example1_pointwise_accuracy() {
    const POINTWISE_TOL: f64 = 5e-5;
    const MAX_BAND: (f64, f64) = (2e-6, 5e-5);
    let spec = builtin("example1").unwrap();
    let record = solve(&spec, 6, 1e-4, 1.0, &[1.0]).unwrap();
    let table = error_table(&record, 1.0).unwrap();
    let worst_row = table.rows.iter().fold(0.0f64, |m, r| m.max(r.abs_error));
    let ok = table.rows.iter().all(|r| r.abs_error <= POINTWISE_TOL)
        && table.max_error >= MAX_BAND.0
        && table.max_error <= MAX_BAND.1;
    report(
        1,
        ok,
        &format!(
            "example1 J=6 dt=1e-4 T=1: max error {:.3e} (band [{:.0e}, {:.0e}]), worst row {:.3e}",
            table.max_error, MAX_BAND.0, MAX_BAND.1, worst_row
        ),
    );
}

/// Example 2 at J=6, T=0.25: dt=1e-4 errors at x=0.1 and x=0.8 at most
/// 7e-5 each; dt=1e-3 max error at most 1e-4.
///
/// The coarse-step bound presumes second-order accuracy in time. The
/// scheme couples the centered second difference to the spatial
/// operator at the new level only, so its truncation error carries a
/// dt * u_xxt term and the temporal order is one; the measured max at
/// dt=1e-3 lands near 1.9e-4 and this half of the criterion fails.
/// The failure documents a property of the method, not a defect of
/// the implementation: the fine-step errors below, the structural
/// identities, and the spectra all match independent oracles.
#[test]
fn criterion_2_example2_pointwise_accuracy() {
    const POINT_TOL: f64 = 7e-5;
    const COARSE_MAX_TOL: f64 = 1e-4;
    let spec = builtin("example2").unwrap();
    let record = solve(&spec, 6, 1e-4, 0.25, &[0.25]).unwrap();
    let table = error_table(&record, 0.25).unwrap();
    let err_at = |x: f64| {
        table
            .rows
            .iter()
            .find(|r| (r.x - x).abs() < 1e-9)
            .expect("reporting grid carries this point")
            .abs_error
    };
    let (e01, e08) = (err_at(0.1), err_at(0.8));
    let coarse = solve(&spec, 6, 1e-3, 0.25, &[0.25]).unwrap();
    let coarse_max = error_table(&coarse, 0.25).unwrap().max_error;
    let ok = e01 <= POINT_TOL && e08 <= POINT_TOL && coarse_max <= COARSE_MAX_TOL;
    report(
        2,
        ok,
        &format!(
            "example2 J=6 T=0.25: errors {:.3e} at x=0.1, {:.3e} at x=0.8 (tol {POINT_TOL:.0e}); \
             dt=1e-3 max {:.3e} (tol {COARSE_MAX_TOL:.0e})",
            e01, e08, coarse_max
        ),
    );
}

/// Spectral radius at most 1 + 1e-8 over (J, dt) in {4,5} x {1e-2, 1e-3};
/// the dt=0 degenerate spectrum has radius 1 within 1e-8.
#[test]
fn criterion_3_amplification_stability() {
    let mut worst = 0.0f64;
    let mut ok = true;
    for &j in &[4u32, 5] {
        for &dt in &[1e-2, 1e-3] {
            let rep = stability_report(j, dt, DEFAULT_STABILITY_TOL).unwrap();
            worst = worst.max(rep.spectral_radius);
            ok &= rep.stable && rep.spectral_radius <= 1.0 + 1e-8;
        }
    }
    let degenerate = stability_report(4, 0.0, DEFAULT_STABILITY_TOL).unwrap();
    ok &= (degenerate.spectral_radius - 1.0).abs() <= 1e-8;
    report(
        3,
        ok,
        &format!(
            "largest radius {:.12} over {{4,5}} x {{1e-2,1e-3}}; dt=0 radius {:.12}",
            worst, degenerate.spectral_radius
        ),
    );
}

/// Observed spatial orders for example1 over J = 3,4,5 at dt=1e-5, T=0.1
/// fall in [1.7, 2.3].
#[test]
fn criterion_4_spatial_convergence_order() {
    const BAND: (f64, f64) = (1.7, 2.3);
    let spec = builtin("example1").unwrap();
    let table = spatial_convergence(&spec, &[3, 4, 5], 1e-5, 0.1).unwrap();
    let orders: Vec<f64> = table
        .rows
        .iter()
        .filter_map(|r| r.observed_order)
        .collect();
    let ok = orders.len() == 2 && orders.iter().all(|o| (BAND.0..=BAND.1).contains(o));
    report(
        4,
        ok,
        &format!("example1 spatial orders {orders:?} (band [{}, {}])", BAND.0, BAND.1),
    );
}

/// Observed temporal orders for example2 over dt = 4e-3, 2e-3, 1e-3 at
/// J=8, T=0.25 fall in [1.7, 2.3].
///
/// Fails for the reason documented on criterion 2: the one-sided
/// treatment of the spatial operator caps the temporal order at one,
/// and the measured orders land near [1.04, 1.00]. Halving dt still
/// halves the error (the refinement invariant in the unit suite), but
/// this scheme does not reach order two at any resolution.
#[test]
fn criterion_5_temporal_convergence_order() {
    const BAND: (f64, f64) = (1.7, 2.3);
    let spec = builtin("example2").unwrap();
    let table = temporal_convergence(&spec, 8, &[4e-3, 2e-3, 1e-3], 0.25).unwrap();
    let orders: Vec<f64> = table
        .rows
        .iter()
        .filter_map(|r| r.observed_order)
        .collect();
    let ok = orders.len() == 2 && orders.iter().all(|o| (BAND.0..=BAND.1).contains(o));
    report(
        5,
        ok,
        &format!("example2 temporal orders {orders:?} (band [{}, {}])", BAND.0, BAND.1),
    );
}

/// Structural exactness at every step of short runs of both examples:
/// the reconstruction integrates to nu(t) within 1e-10, matches h(t) at
/// x=0 within 1e-13, and the linear-solve residual stays at or below
/// 1e-10 relative.
#[test]
fn criterion_6_structural_exactness() {
    const QUAD_TOL: f64 = 1e-10;
    const LEFT_TOL: f64 = 1e-13;
    const RESIDUAL_TOL: f64 = 1e-10;
    let mut ok = true;
    let mut worst_quad = 0.0f64;
    let mut worst_left = 0.0f64;
    let mut worst_res = 0.0f64;
    for name in ["example1", "example2"] {
        let spec = builtin(name).unwrap();
        let dt = 1e-3;
        let basis = HaarBasis::build(4).unwrap();
        let quad_panels = 4 * basis.size();
        let m = assemble(basis, dt).unwrap();
        let mut state = initial_state(&spec, m.basis()).unwrap();
        let mut prev = state.clone();
        state = startup_step(&spec, &m, &state).unwrap();
        for _ in 1..50 {
            let a = state.a_curr.as_ref().unwrap();
            // Quadrature of the reconstruction against the nonlocal data.
            let integral = quad_simpson(
                |x| reconstruct(m.basis(), a, &spec, state.t, &[x]).unwrap()[0],
                0.0,
                1.0,
                quad_panels,
            );
            let quad_err = (integral - spec.nu(state.t).unwrap()).abs();
            // Boundary value at x = 0.
            let left = reconstruct(m.basis(), a, &spec, state.t, &[0.0]).unwrap()[0];
            let left_err = (left - spec.h(state.t).unwrap()).abs();
            // Residual of the system that produced the coefficients.
            let xs = m.basis().collocation_points();
            let lift = boundary_lift(&spec, state.t, xs).unwrap();
            let (matrix, rhs): (_, Vec<f64>) = if state.n == 1 {
                let t0 = 0.0;
                (
                    m.a_start(),
                    xs.iter()
                        .enumerate()
                        .map(|(l, &x)| {
                            prev.u_curr[l] + dt * spec.g(x).unwrap()
                                + 0.5 * dt * dt * spec.phi(x, t0).unwrap()
                                - lift[l]
                        })
                        .collect(),
                )
            } else {
                let t_prev = (state.n - 1) as f64 * dt;
                (
                    m.a_main(),
                    xs.iter()
                        .enumerate()
                        .map(|(l, &x)| {
                            dt * dt * spec.phi(x, t_prev).unwrap() + 2.0 * prev.u_curr[l]
                                - prev.u_prev.as_ref().unwrap()[l]
                                - lift[l]
                        })
                        .collect(),
                )
            };
            let back = matrix.mul_vec(a);
            let scale = rhs.iter().fold(1.0f64, |s, v| s.max(v.abs()));
            let res = back
                .iter()
                .zip(&rhs)
                .fold(0.0f64, |r, (l, c)| r.max((l - c).abs()))
                / scale;
            worst_quad = worst_quad.max(quad_err);
            worst_left = worst_left.max(left_err);
            worst_res = worst_res.max(res);
            ok &= quad_err <= QUAD_TOL && left_err <= LEFT_TOL && res <= RESIDUAL_TOL;
            prev = state.clone();
            state = time_step(&spec, &m, &state).unwrap();
        }
    }
    report(
        6,
        ok,
        &format!(
            "both examples, 50 steps: worst nonlocal defect {:.2e} (tol {QUAD_TOL:.0e}), \
             worst boundary defect {:.2e} (tol {LEFT_TOL:.0e}), worst residual {:.2e} \
             (tol {RESIDUAL_TOL:.0e})",
            worst_quad, worst_left, worst_res
        ),
    );
}

/// Coefficient decay: |a| at level j at most L / 2^(j+1) + 1e-9 up to J=7,
/// for sin(pi x) with L = pi and for 20 random piecewise-linear functions
/// with computed Lipschitz constants.
#[test]
fn criterion_7_coefficient_decay() {
    let pi = std::f64::consts::PI;
    let mut ok = coefficient_decay(|x| (pi * x).sin(), pi, 7).unwrap().pass;
    let mut rng = ChaCha8Rng::seed_from_u64(7115);
    let mut checked = 0;
    for _ in 0..20 {
        let knots = rng.gen_range(2usize..8);
        let mut xs: Vec<f64> = (0..knots).map(|_| rng.gen_range(0.02..0.98)).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        let mut points = vec![0.0];
        points.extend(xs);
        points.push(1.0);
        let values: Vec<f64> = (0..points.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let lipschitz = points
            .windows(2)
            .zip(values.windows(2))
            .map(|(px, pv)| ((pv[1] - pv[0]) / (px[1] - px[0])).abs())
            .fold(0.0f64, f64::max)
            .max(1e-6);
        let interp = |x: f64| {
            let seg = points
                .windows(2)
                .position(|p| x <= p[1])
                .unwrap_or(points.len() - 2);
            let w = (x - points[seg]) / (points[seg + 1] - points[seg]);
            values[seg] * (1.0 - w) + values[seg + 1] * w
        };
        ok &= coefficient_decay(interp, lipschitz, 7).unwrap().pass;
        checked += 1;
    }
    report(
        7,
        ok,
        &format!("sin(pi x) and {checked} random piecewise-linear functions obey the bound up to J=7"),
    );
}

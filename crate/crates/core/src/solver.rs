//! Scheme assembly and time stepping.
//!
//! The second spatial derivative at the new time level is expanded in the
//! truncated Haar family, `u_xx = sum_i a_i h_i`. Integrating twice and
//! eliminating the unknown boundary values through the Dirichlet and
//! nonlocal data gives the reconstruction
//!
//! ```text
//! u(x,t) = sum_i a_i (P2_i(x) - 2 x C2_i) + 2 x (nu(t) - h(t)) + h(t)
//! ```
//!
//! whose integral over [0,1] is `nu(t)` and whose value at 0 is `h(t)` for
//! any coefficient vector. Central differencing in time and collocation at
//! the dyadic midpoints turn each step into one dense linear solve with a
//! fixed matrix, factored once.

use std::collections::BTreeSet;

use crate::error::Error;
use crate::haar::HaarBasis;
use crate::numerics::{lu_factor, DenseMatrix, LuFactorization};
use crate::problem::ProblemSpec;

/// Snapshot times must sit within this distance of a grid time.
const GRID_SNAP_TOL: f64 = 1e-10;

/// `E[(l-1, i-1)] = P2_i(x_l) - 2 x_l C2_i`: maps coefficients to
/// collocation values of the reconstruction, minus the boundary lift.
pub fn representation_matrix(basis: &HaarBasis) -> DenseMatrix {
    let size = basis.size();
    let xs = basis.collocation_points();
    DenseMatrix::from_fn(size, size, |l, i| {
        basis.p2()[(i, l)] - 2.0 * xs[l] * basis.c2()[i]
    })
}

/// The affine part of the reconstruction: `2 x (nu(t) - h(t)) + h(t)`.
pub fn boundary_lift(spec: &ProblemSpec, t: f64, xs: &[f64]) -> Result<Vec<f64>, Error> {
    let h = spec.h(t)?;
    let nu = spec.nu(t)?;
    Ok(xs.iter().map(|&x| 2.0 * x * (nu - h) + h).collect())
}

/// The factored collocation systems for one resolution level and step size.
#[derive(Debug)]
pub struct SchemeMatrices {
    basis: HaarBasis,
    dt: f64,
    e: DenseMatrix,
    a_main: DenseMatrix,
    a_start: DenseMatrix,
    fac_main: LuFactorization,
    fac_start: LuFactorization,
}

impl SchemeMatrices {
    pub fn basis(&self) -> &HaarBasis {
        &self.basis
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn e(&self) -> &DenseMatrix {
        &self.e
    }

    pub fn a_main(&self) -> &DenseMatrix {
        &self.a_main
    }

    pub fn a_start(&self) -> &DenseMatrix {
        &self.a_start
    }
}

/// Builds and factors the startup and main-step systems.
pub fn assemble(basis: HaarBasis, dt: f64) -> Result<SchemeMatrices, Error> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter {
            message: format!("time step must be positive and finite, got {dt}"),
        });
    }
    let size = basis.size();
    let e = representation_matrix(&basis);
    let dt2 = dt * dt;
    let a_main = DenseMatrix::from_fn(size, size, |l, i| e[(l, i)] - dt2 * basis.h()[(i, l)]);
    let a_start =
        DenseMatrix::from_fn(size, size, |l, i| e[(l, i)] - 0.5 * dt2 * basis.h()[(i, l)]);
    let level = basis.level();
    let recontext = |which: &str, err: Error| match err {
        Error::Singular { pivot, .. } => Error::Singular {
            context: format!("{which} system (J = {level}, dt = {dt})"),
            pivot,
        },
        other => other,
    };
    let fac_main = lu_factor(&a_main).map_err(|e| recontext("time-step", e))?;
    let fac_start = lu_factor(&a_start).map_err(|e| recontext("startup", e))?;
    Ok(SchemeMatrices {
        basis,
        dt,
        e,
        a_main,
        a_start,
        fac_main,
        fac_start,
    })
}

/// Time-marching state: collocation values at the newest two levels plus
/// the coefficient vector that produced the newest one.
#[derive(Debug, Clone)]
pub struct SolverState {
    /// Completed step count; `t = n * dt`.
    pub n: usize,
    pub t: f64,
    /// Values at the previous level; absent before the first step.
    pub u_prev: Option<Vec<f64>>,
    /// Values at the current level, on the collocation points.
    pub u_curr: Vec<f64>,
    /// Coefficients of the current level; absent at the initial level,
    /// which is sampled data rather than a solved expansion.
    pub a_curr: Option<Vec<f64>>,
}

/// State at t = 0: the initial data sampled on the collocation points.
pub fn initial_state(spec: &ProblemSpec, basis: &HaarBasis) -> Result<SolverState, Error> {
    let u_curr = basis
        .collocation_points()
        .iter()
        .map(|&x| spec.f(x))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SolverState {
        n: 0,
        t: 0.0,
        u_prev: None,
        u_curr,
        a_curr: None,
    })
}

fn ensure_finite(a: &[f64], u: &[f64], step: usize, t: f64) -> Result<(), Error> {
    if a.iter().chain(u).all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { step, t })
    }
}

/// First step, taking `u_t(x,0) = g` into account through a ghost level:
/// solves the half-weighted system for the coefficients at `t = dt`.
pub fn startup_step(
    spec: &ProblemSpec,
    matrices: &SchemeMatrices,
    state: &SolverState,
) -> Result<SolverState, Error> {
    assert_eq!(state.n, 0, "startup runs from the initial level only");
    let basis = matrices.basis();
    let xs = basis.collocation_points();
    let dt = matrices.dt();
    let t1 = dt;
    let lift = boundary_lift(spec, t1, xs)?;
    let mut rhs = Vec::with_capacity(xs.len());
    for (l, &x) in xs.iter().enumerate() {
        rhs.push(
            state.u_curr[l] + dt * spec.g(x)? + 0.5 * dt * dt * spec.phi(x, 0.0)? - lift[l],
        );
    }
    let a = matrices.fac_start.solve(&rhs);
    let mut u_next = matrices.e.mul_vec(&a);
    for (v, l) in u_next.iter_mut().zip(&lift) {
        *v += l;
    }
    ensure_finite(&a, &u_next, 1, t1)?;
    Ok(SolverState {
        n: 1,
        t: t1,
        u_prev: Some(state.u_curr.clone()),
        u_curr: u_next,
        a_curr: Some(a),
    })
}

/// Advances one central-difference step, from level `n >= 1` to `n + 1`.
pub fn time_step(
    spec: &ProblemSpec,
    matrices: &SchemeMatrices,
    state: &SolverState,
) -> Result<SolverState, Error> {
    assert!(state.n >= 1, "the first step must be the startup step");
    let u_prev = state
        .u_prev
        .as_ref()
        .expect("a state past startup carries its previous level");
    let basis = matrices.basis();
    let xs = basis.collocation_points();
    let dt = matrices.dt();
    let t_now = state.n as f64 * dt;
    let t_next = (state.n + 1) as f64 * dt;
    let lift = boundary_lift(spec, t_next, xs)?;
    let mut rhs = Vec::with_capacity(xs.len());
    for (l, &x) in xs.iter().enumerate() {
        rhs.push(
            dt * dt * spec.phi(x, t_now)? + 2.0 * state.u_curr[l] - u_prev[l] - lift[l],
        );
    }
    let a = matrices.fac_main.solve(&rhs);
    let mut u_next = matrices.e.mul_vec(&a);
    for (v, l) in u_next.iter_mut().zip(&lift) {
        *v += l;
    }
    ensure_finite(&a, &u_next, state.n + 1, t_next)?;
    Ok(SolverState {
        n: state.n + 1,
        t: t_next,
        u_prev: Some(state.u_curr.clone()),
        u_curr: u_next,
        a_curr: Some(a),
    })
}

/// Evaluates the reconstruction at arbitrary points, with the lift values
/// supplied directly (one per point).
pub fn reconstruct_with_lift(
    basis: &HaarBasis,
    coefficients: &[f64],
    lift: &[f64],
    xs: &[f64],
) -> Vec<f64> {
    assert_eq!(coefficients.len(), basis.size(), "dimension mismatch");
    assert_eq!(lift.len(), xs.len(), "dimension mismatch");
    xs.iter()
        .zip(lift)
        .map(|(&x, &l)| {
            let mut sum = 0.0;
            for (idx, &a) in coefficients.iter().enumerate() {
                let i = idx + 1;
                sum += a * (crate::haar::integral_p(2, i, x) - 2.0 * x * basis.c2()[idx]);
            }
            sum + l
        })
        .collect()
}

/// Evaluates the reconstruction at arbitrary points at time `t`.
pub fn reconstruct(
    basis: &HaarBasis,
    coefficients: &[f64],
    spec: &ProblemSpec,
    t: f64,
    xs: &[f64],
) -> Result<Vec<f64>, Error> {
    let lift = boundary_lift(spec, t, xs)?;
    Ok(reconstruct_with_lift(basis, coefficients, &lift, xs))
}

/// One sampled point of a snapshot's uniform reporting grid.
#[derive(Debug, Clone)]
pub struct GridSample {
    pub x: f64,
    pub approx: f64,
    pub exact: Option<f64>,
    pub abs_error: Option<f64>,
}

/// The solution at one recorded time level.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    /// Values on the collocation points.
    pub u_collocation: Vec<f64>,
    /// Expansion coefficients behind those values.
    pub coefficients: Vec<f64>,
    /// `h(t)`, the reconstruction's value at x = 0.
    pub boundary_value: f64,
    /// `nu(t)`, the reconstruction's integral over [0,1].
    pub nonlocal_value: f64,
    pub exact_collocation: Option<Vec<f64>>,
    pub error_collocation: Option<Vec<f64>>,
    /// `|h(t) - exact(0,t)|`, when the exact solution is known.
    pub error_at_left: Option<f64>,
    /// Uniform reporting grid x = 0.1, 0.2, ..., 1.0.
    pub report: Vec<GridSample>,
}

/// A completed run: configuration plus the recorded snapshots in time order.
#[derive(Debug, Clone)]
pub struct SolutionRecord {
    pub problem: String,
    pub level: u32,
    pub dt: f64,
    pub t_final: f64,
    pub snapshots: Vec<Snapshot>,
}

fn make_snapshot(
    spec: &ProblemSpec,
    basis: &HaarBasis,
    coefficients: Vec<f64>,
    u_collocation: Vec<f64>,
    t: f64,
) -> Result<Snapshot, Error> {
    let boundary_value = spec.h(t)?;
    let nonlocal_value = spec.nu(t)?;
    let lift_at = |x: f64| 2.0 * x * (nonlocal_value - boundary_value) + boundary_value;
    let report_xs: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
    let report_lift: Vec<f64> = report_xs.iter().map(|&x| lift_at(x)).collect();
    let report_approx = reconstruct_with_lift(basis, &coefficients, &report_lift, &report_xs);
    let mut report = Vec::with_capacity(report_xs.len());
    for (&x, &approx) in report_xs.iter().zip(&report_approx) {
        let exact = spec.exact(x, t).transpose()?;
        report.push(GridSample {
            x,
            approx,
            exact,
            abs_error: exact.map(|e| (approx - e).abs()),
        });
    }
    let (exact_collocation, error_collocation, error_at_left) = if spec.has_exact() {
        let exact: Vec<f64> = basis
            .collocation_points()
            .iter()
            .map(|&x| spec.exact(x, t).unwrap())
            .collect::<Result<Vec<_>, _>>()?;
        let errors: Vec<f64> = exact
            .iter()
            .zip(&u_collocation)
            .map(|(e, u)| (u - e).abs())
            .collect();
        let left = (boundary_value - spec.exact(0.0, t).unwrap()?).abs();
        (Some(exact), Some(errors), Some(left))
    } else {
        (None, None, None)
    };
    Ok(Snapshot {
        t,
        u_collocation,
        coefficients,
        boundary_value,
        nonlocal_value,
        exact_collocation,
        error_collocation,
        error_at_left,
        report,
    })
}

/// Resolves `t_final` to a whole number of steps, at least two.
fn step_count(t_final: f64, dt: f64) -> Result<usize, Error> {
    let ratio = t_final / dt;
    let rounded = ratio.round();
    if !(ratio.is_finite() && (ratio - rounded).abs() <= 1e-10 * ratio.max(1.0))
        || rounded < 2.0
    {
        return Err(Error::NonIntegerSteps { t_final, dt });
    }
    Ok(rounded as usize)
}

/// Runs the scheme from t = 0 to `t_final` and records snapshots at the
/// requested times, each of which must sit on the time grid.
pub fn solve(
    spec: &ProblemSpec,
    level: u32,
    dt: f64,
    t_final: f64,
    snapshot_times: &[f64],
) -> Result<SolutionRecord, Error> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter {
            message: format!("time step must be positive and finite, got {dt}"),
        });
    }
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidParameter {
            message: format!("final time must be positive and finite, got {t_final}"),
        });
    }
    let n_steps = step_count(t_final, dt)?;
    let mut snap_steps = BTreeSet::new();
    for &t in snapshot_times {
        let idx = (t / dt).round();
        if !(t / dt).is_finite() || (t - idx * dt).abs() > GRID_SNAP_TOL || idx < 0.0 {
            return Err(Error::SnapshotOffGrid { t, dt });
        }
        let idx = idx as usize;
        if idx > n_steps {
            return Err(Error::InvalidParameter {
                message: format!("snapshot time {t} lies beyond the final time {t_final}"),
            });
        }
        snap_steps.insert(idx);
    }

    let basis = HaarBasis::build(level)?;
    let matrices = assemble(basis, dt)?;
    let basis = matrices.basis();
    let mut snapshots = Vec::with_capacity(snap_steps.len());

    let mut state = initial_state(spec, basis)?;
    if snap_steps.contains(&0) {
        // The initial level has no solved expansion; project the sampled
        // data through the representation matrix instead.
        let lift = boundary_lift(spec, 0.0, basis.collocation_points())?;
        let rhs: Vec<f64> = state
            .u_curr
            .iter()
            .zip(&lift)
            .map(|(u, l)| u - l)
            .collect();
        let a = lu_factor(&matrices.e)
            .map_err(|e| match e {
                Error::Singular { pivot, .. } => Error::Singular {
                    context: format!("representation system (J = {level})"),
                    pivot,
                },
                other => other,
            })?
            .solve(&rhs);
        snapshots.push(make_snapshot(spec, basis, a, state.u_curr.clone(), 0.0)?);
    }

    state = startup_step(spec, &matrices, &state)?;
    if snap_steps.contains(&1) {
        snapshots.push(make_snapshot(
            spec,
            basis,
            state.a_curr.clone().expect("startup sets coefficients"),
            state.u_curr.clone(),
            state.t,
        )?);
    }
    for _ in 1..n_steps {
        state = time_step(spec, &matrices, &state)?;
        if snap_steps.contains(&state.n) {
            snapshots.push(make_snapshot(
                spec,
                basis,
                state.a_curr.clone().expect("time steps set coefficients"),
                state.u_curr.clone(),
                state.t,
            )?);
        }
    }

    Ok(SolutionRecord {
        problem: spec.name.clone(),
        level,
        dt,
        t_final,
        snapshots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{builtin, quad_simpson, ProblemSpec};
    use approx::assert_abs_diff_eq;

    fn zero_problem() -> ProblemSpec {
        ProblemSpec::from_sources("zero", "0", "0", "0", "0", "0", None, None, None).unwrap()
    }

    #[test]
    fn assembled_entries_match_the_closed_forms() {
        let basis = HaarBasis::build(0).unwrap();
        let m = assemble(basis, 0.1).unwrap();
        // l = 1, i = 1: x = 0.25, P2_1 = x^2/2, C2_1 = 1/6, h_1 = 1.
        assert_abs_diff_eq!(
            m.a_main()[(0, 0)],
            0.03125 - 0.01 - 1.0 / 12.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(m.e()[(0, 0)], 0.03125 - 1.0 / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn startup_system_is_the_mean_of_main_and_representation() {
        let basis = HaarBasis::build(3).unwrap();
        let m = assemble(basis, 1e-3).unwrap();
        for l in 0..m.e().rows() {
            for i in 0..m.e().cols() {
                let mean = 0.5 * (m.a_main()[(l, i)] + m.e()[(l, i)]);
                assert_abs_diff_eq!(m.a_start()[(l, i)], mean, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn lift_interpolates_boundary_and_nonlocal_data() {
        let spec = builtin("example1").unwrap();
        let lift = boundary_lift(&spec, 0.0, &[0.0, 0.5, 1.0]).unwrap();
        assert_abs_diff_eq!(lift[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(lift[1], 2.0 / std::f64::consts::PI, epsilon = 1e-15);
        assert_abs_diff_eq!(lift[2], 4.0 / std::f64::consts::PI, epsilon = 1e-15);
    }

    #[test]
    fn startup_tracks_the_exact_solution() {
        let spec = builtin("example1").unwrap();
        let dt = 1e-3;
        let basis = HaarBasis::build(3).unwrap();
        let m = assemble(basis, dt).unwrap();
        let state = initial_state(&spec, m.basis()).unwrap();
        let state = startup_step(&spec, &m, &state).unwrap();
        assert_eq!(state.n, 1);
        assert_eq!(state.t, dt);
        let mut worst = 0.0f64;
        for (l, &x) in m.basis().collocation_points().iter().enumerate() {
            let exact = spec.exact(x, dt).unwrap().unwrap();
            worst = worst.max((state.u_curr[l] - exact).abs());
        }
        assert!(worst <= 1e-4, "startup error {worst}");
    }

    #[test]
    fn zero_data_stays_exactly_zero() {
        let spec = zero_problem();
        let basis = HaarBasis::build(2).unwrap();
        let m = assemble(basis, 0.01).unwrap();
        let mut state = initial_state(&spec, m.basis()).unwrap();
        state = startup_step(&spec, &m, &state).unwrap();
        for _ in 1..1000 {
            state = time_step(&spec, &m, &state).unwrap();
        }
        assert_eq!(state.n, 1000);
        assert!(state.u_curr.iter().all(|&v| v == 0.0));
        assert!(state.a_curr.unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reconstruction_honors_the_problem_data_for_any_coefficients() {
        let spec = builtin("example1").unwrap();
        let basis = HaarBasis::build(3).unwrap();
        let t = 0.37;
        // An arbitrary, fixed coefficient vector.
        let a: Vec<f64> = (0..basis.size())
            .map(|i| ((i * 7 + 3) % 11) as f64 / 11.0 - 0.4)
            .collect();
        // Integral over [0,1] equals nu(t): Simpson panels aligned to the
        // dyadic cells integrate the piecewise-quadratic pieces exactly.
        let n = 4 * basis.size();
        let integral = quad_simpson(
            |x| reconstruct(&basis, &a, &spec, t, &[x]).unwrap()[0],
            0.0,
            1.0,
            n,
        );
        assert_abs_diff_eq!(integral, spec.nu(t).unwrap(), epsilon = 1e-10);
        // Value at 0 equals h(t).
        let left = reconstruct(&basis, &a, &spec, t, &[0.0]).unwrap()[0];
        assert_abs_diff_eq!(left, spec.h(t).unwrap(), epsilon = 1e-13);
        // Value at 1 equals the eliminated right boundary expression.
        let right = reconstruct(&basis, &a, &spec, t, &[1.0]).unwrap()[0];
        let elim: f64 = a
            .iter()
            .enumerate()
            .map(|(idx, &ai)| ai * (basis.c1()[idx] - 2.0 * basis.c2()[idx]))
            .sum::<f64>()
            + 2.0 * spec.nu(t).unwrap()
            - spec.h(t).unwrap();
        assert_abs_diff_eq!(right, elim, epsilon = 1e-12);
    }

    #[test]
    fn stepping_is_consistent_with_reconstruction_and_residuals() {
        let spec = builtin("example1").unwrap();
        let dt = 1e-3;
        let basis = HaarBasis::build(3).unwrap();
        let m = assemble(basis, dt).unwrap();
        let mut state = initial_state(&spec, m.basis()).unwrap();
        state = startup_step(&spec, &m, &state).unwrap();
        for _ in 1..10 {
            let before = state.clone();
            state = time_step(&spec, &m, &state).unwrap();
            // Rebuild the right-hand side and check the solve residual.
            let xs = m.basis().collocation_points();
            let t_now = before.n as f64 * dt;
            let lift = boundary_lift(&spec, state.t, xs).unwrap();
            let c: Vec<f64> = xs
                .iter()
                .enumerate()
                .map(|(l, &x)| {
                    dt * dt * spec.phi(x, t_now).unwrap() + 2.0 * before.u_curr[l]
                        - before.u_prev.as_ref().unwrap()[l]
                        - lift[l]
                })
                .collect();
            let a = state.a_curr.as_ref().unwrap();
            let back = m.a_main().mul_vec(a);
            let scale = c.iter().fold(0.0f64, |s, v| s.max(v.abs()));
            for (lhs, rhs) in back.iter().zip(&c) {
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10 * scale.max(1e-10));
            }
            // Stored collocation values equal the closed-form reconstruction.
            let rebuilt = reconstruct(m.basis(), a, &spec, state.t, xs).unwrap();
            for (u, r) in state.u_curr.iter().zip(&rebuilt) {
                assert_abs_diff_eq!(u, r, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn solve_validates_grid_and_times() {
        let spec = builtin("example1").unwrap();
        assert!(matches!(
            solve(&spec, 2, 1e-3, 1e-3, &[]),
            Err(Error::NonIntegerSteps { .. })
        ));
        assert!(matches!(
            solve(&spec, 2, 3e-3, 1e-2, &[]),
            Err(Error::NonIntegerSteps { .. })
        ));
        assert!(matches!(
            solve(&spec, 2, 1e-2, 0.1, &[0.055]),
            Err(Error::SnapshotOffGrid { .. })
        ));
        assert!(matches!(
            solve(&spec, 2, 1e-2, 0.1, &[0.2]),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            solve(&spec, 2, -1.0, 0.1, &[]),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn solve_records_requested_snapshots_in_order() {
        let spec = builtin("example1").unwrap();
        let record = solve(&spec, 3, 0.01, 0.1, &[0.1, 0.05, 0.0]).unwrap();
        assert_eq!(record.snapshots.len(), 3);
        let times: Vec<f64> = record.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(times, vec![0.0, 0.05, 0.1]);
        for snap in &record.snapshots {
            assert_eq!(snap.report.len(), 10);
            assert!(snap.exact_collocation.is_some());
            // The solution stays close to the exact one at this resolution.
            let worst = snap
                .error_collocation
                .as_ref()
                .unwrap()
                .iter()
                .fold(0.0f64, |m, v| m.max(*v));
            assert!(worst < 1e-2, "error {worst} at t = {}", snap.t);
        }
        // The shortest legal run: one startup step plus one main step.
        let record = solve(&spec, 2, 0.05, 0.1, &[0.1]).unwrap();
        assert_eq!(record.snapshots.len(), 1);
        assert_abs_diff_eq!(record.snapshots[0].t, 0.1, epsilon = 1e-12);
    }
}

//! Error norms, convergence-order studies, and the coefficient-decay check.

use crate::error::Error;
use crate::haar::{self, try_forward_coefficients};
use crate::problem::{ProblemSpec, DEFAULT_QUAD_N};
use crate::solver::{solve, SolutionRecord, Snapshot};

/// Pointwise errors on the reporting grid at one snapshot time.
#[derive(Debug, Clone)]
pub struct ErrorTable {
    pub t: f64,
    pub rows: Vec<ErrorRow>,
    /// Largest absolute error in the rows.
    pub max_error: f64,
    /// Root of the Simpson quadrature of the squared error over [0,1].
    pub l2_error: f64,
}

#[derive(Debug, Clone)]
pub struct ErrorRow {
    pub x: f64,
    pub exact: f64,
    pub approx: f64,
    pub abs_error: f64,
}

/// Pointwise errors at the snapshot recorded at time `t`.
pub fn error_table(record: &SolutionRecord, t: f64) -> Result<ErrorTable, Error> {
    let snap = record
        .snapshots
        .iter()
        .find(|s| (s.t - t).abs() <= 1e-9 * t.abs().max(1.0))
        .ok_or(Error::MissingSnapshot { t })?;
    snapshot_error_table(&record.problem, snap)
}

/// As [`error_table`], from a snapshot already in hand.
pub fn snapshot_error_table(problem: &str, snap: &Snapshot) -> Result<ErrorTable, Error> {
    if snap.exact_collocation.is_none() {
        return Err(Error::MissingExact {
            name: problem.to_string(),
        });
    }
    let rows: Vec<ErrorRow> = snap
        .report
        .iter()
        .map(|s| ErrorRow {
            x: s.x,
            exact: s.exact.expect("exact columns are filled together"),
            approx: s.approx,
            abs_error: s.abs_error.expect("exact columns are filled together"),
        })
        .collect();
    let max_error = rows.iter().fold(0.0f64, |m, r| m.max(r.abs_error));
    // Simpson over the 11 uniform nodes 0, 0.1, ..., 1.0; the left node is
    // the boundary error |h(t) - exact(0,t)|.
    let e0 = snap
        .error_at_left
        .expect("exact columns are filled together");
    let mut acc = e0 * e0 + rows[9].abs_error * rows[9].abs_error;
    for (k, row) in rows.iter().enumerate().take(9) {
        let w = if k % 2 == 0 { 4.0 } else { 2.0 };
        acc += w * row.abs_error * row.abs_error;
    }
    let l2_error = ((0.1 / 3.0) * acc).sqrt();
    Ok(ErrorTable {
        t: snap.t,
        rows,
        max_error,
        l2_error,
    })
}

/// Which discretization parameter a convergence study refines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceMode {
    Spatial,
    Temporal,
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    /// The resolution level J (spatial mode) or the step dt (temporal mode).
    pub param: f64,
    pub max_error: f64,
    pub l2_error: f64,
    /// `log2(previous max error / this max error)`; absent on the first
    /// row and when the ratio is degenerate.
    pub observed_order: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub mode: ConvergenceMode,
    pub rows: Vec<ConvergenceRow>,
}

/// Runs to the whole number of steps nearest `t_final` (at least two) and
/// returns the record with a snapshot at that rounded final time.
fn snapped_run(
    spec: &ProblemSpec,
    level: u32,
    dt: f64,
    t_final: f64,
) -> Result<(SolutionRecord, f64), Error> {
    if !(dt > 0.0) || !dt.is_finite() || !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidParameter {
            message: format!("need positive finite dt and T, got dt = {dt}, T = {t_final}"),
        });
    }
    let steps = (t_final / dt).round().max(2.0);
    let t_run = steps * dt;
    let record = solve(spec, level, dt, t_run, &[t_run])?;
    Ok((record, t_run))
}

fn order_from(prev: Option<f64>, current: f64) -> Option<f64> {
    prev.map(|p| (p / current).log2()).filter(|o| o.is_finite())
}

/// Error decay under spatial refinement: one solve per level, at fixed `dt`.
/// The step should be small enough that the temporal error does not
/// dominate; `t_final` is rounded to the nearest whole number of steps.
pub fn spatial_convergence(
    spec: &ProblemSpec,
    levels: &[u32],
    dt: f64,
    t_final: f64,
) -> Result<ConvergenceTable, Error> {
    let mut rows = Vec::with_capacity(levels.len());
    let mut prev = None;
    for &level in levels {
        let (record, t_run) = snapped_run(spec, level, dt, t_final)?;
        let table = error_table(&record, t_run)?;
        rows.push(ConvergenceRow {
            param: level as f64,
            max_error: table.max_error,
            l2_error: table.l2_error,
            observed_order: order_from(prev, table.max_error),
        });
        prev = Some(table.max_error);
    }
    Ok(ConvergenceTable {
        mode: ConvergenceMode::Spatial,
        rows,
    })
}

/// Error decay under temporal refinement at fixed level. The level should
/// be high enough that the spatial error does not dominate; each entry of
/// `dt_list` rounds `t_final` to its own grid.
pub fn temporal_convergence(
    spec: &ProblemSpec,
    level: u32,
    dt_list: &[f64],
    t_final: f64,
) -> Result<ConvergenceTable, Error> {
    let mut rows = Vec::with_capacity(dt_list.len());
    let mut prev = None;
    for &dt in dt_list {
        let (record, t_run) = snapped_run(spec, level, dt, t_final)?;
        let table = error_table(&record, t_run)?;
        rows.push(ConvergenceRow {
            param: dt,
            max_error: table.max_error,
            l2_error: table.l2_error,
            observed_order: order_from(prev, table.max_error),
        });
        prev = Some(table.max_error);
    }
    Ok(ConvergenceTable {
        mode: ConvergenceMode::Temporal,
        rows,
    })
}

/// How slack the decay bound is allowed to be, absorbing quadrature error.
pub const DECAY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct DecayLevel {
    pub j: u32,
    /// Largest coefficient magnitude among the level's wavelets.
    pub max_coefficient: f64,
    /// `L / 2^{j+1}`.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct DecayReport {
    pub lipschitz: f64,
    pub levels: Vec<DecayLevel>,
    pub pass: bool,
}

/// Checks the decay bound `|a_{2^j+k+1}| <= L / 2^{j+1}` that a Lipschitz
/// constant `L` forces on the wavelet coefficients, level by level up to
/// `j_max`. The scaling coefficient is a mean value, not covered by the
/// bound, and is not reported.
pub fn coefficient_decay<F>(u: F, lipschitz: f64, j_max: u32) -> Result<DecayReport, Error>
where
    F: Fn(f64) -> f64,
{
    if !(lipschitz > 0.0) || !lipschitz.is_finite() {
        return Err(Error::InvalidParameter {
            message: format!("Lipschitz constant must be positive and finite, got {lipschitz}"),
        });
    }
    let coefficients =
        try_forward_coefficients(|x| Ok::<_, Error>(u(x)), j_max, DEFAULT_QUAD_N)?;
    let mut levels = Vec::with_capacity(j_max as usize + 1);
    let mut pass = true;
    for j in 0..=j_max {
        let m = 1usize << j;
        let mut max_coefficient = 0.0f64;
        for k in 0..m {
            let i = haar::basis_index(j, k)?;
            max_coefficient = max_coefficient.max(coefficients[i - 1].abs());
        }
        let bound = lipschitz / (1 << (j + 1)) as f64;
        let level_pass = max_coefficient <= bound + DECAY_TOL;
        pass &= level_pass;
        levels.push(DecayLevel {
            j,
            max_coefficient,
            bound,
            pass: level_pass,
        });
    }
    Ok(DecayReport {
        lipschitz,
        levels,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::builtin;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear_problem() -> ProblemSpec {
        // u = 2xt solves the equation with zero forcing; the scheme
        // reproduces it exactly, so every error is exactly zero.
        ProblemSpec::from_sources(
            "linear",
            "0",
            "0",
            "2*x",
            "0",
            "t",
            Some("2*x*t"),
            Some("0"),
            Some("1"),
        )
        .unwrap()
    }

    #[test]
    fn error_table_reports_the_grid_and_norms() {
        let spec = builtin("example1").unwrap();
        let record = solve(&spec, 4, 1e-3, 0.1, &[0.1]).unwrap();
        let table = error_table(&record, 0.1).unwrap();
        assert_eq!(table.rows.len(), 10);
        for (k, row) in table.rows.iter().enumerate() {
            assert_abs_diff_eq!(row.x, (k + 1) as f64 / 10.0, epsilon = 1e-12);
            assert!(row.abs_error >= 0.0);
            assert_abs_diff_eq!(
                row.abs_error,
                (row.approx - row.exact).abs(),
                epsilon = 0.0
            );
        }
        let col_max = table.rows.iter().fold(0.0f64, |m, r| m.max(r.abs_error));
        assert_eq!(table.max_error, col_max);
        assert!(table.l2_error <= table.max_error + 1e-15);
        assert!(table.max_error > 0.0 && table.max_error < 1e-2);
    }

    #[test]
    fn error_table_requires_exact_data_and_a_snapshot() {
        let spec = builtin("example1").unwrap();
        let record = solve(&spec, 3, 1e-2, 0.1, &[0.1]).unwrap();
        assert!(matches!(
            error_table(&record, 0.05),
            Err(Error::MissingSnapshot { .. })
        ));
        let bare = ProblemSpec::from_sources(
            "bare", "0", "sin(pi*x)", "0", "0", "2/pi", None, None, None,
        )
        .unwrap();
        let record = solve(&bare, 3, 1e-2, 0.1, &[0.1]).unwrap();
        assert!(matches!(
            error_table(&record, 0.1),
            Err(Error::MissingExact { .. })
        ));
    }

    #[test]
    fn exactly_representable_solution_reaches_machine_precision() {
        // The time grid rounds t = n*dt per step, so the run tracks the
        // linear solution to rounding error rather than literal zero.
        let spec = linear_problem();
        let record = solve(&spec, 3, 1e-2, 0.1, &[0.1]).unwrap();
        let table = error_table(&record, 0.1).unwrap();
        assert!(table.max_error <= 1e-13, "max {}", table.max_error);
        assert!(table.l2_error <= 1e-13);
    }

    #[test]
    fn injected_zero_errors_give_a_zero_table() {
        let spec = builtin("example1").unwrap();
        let mut record = solve(&spec, 3, 1e-2, 0.1, &[0.1]).unwrap();
        for snap in &mut record.snapshots {
            for row in &mut snap.report {
                row.approx = row.exact.unwrap();
                row.abs_error = Some(0.0);
            }
            snap.error_collocation = snap
                .exact_collocation
                .as_ref()
                .map(|e| vec![0.0; e.len()]);
            snap.error_at_left = Some(0.0);
        }
        let table = error_table(&record, 0.1).unwrap();
        assert_eq!(table.max_error, 0.0);
        assert_eq!(table.l2_error, 0.0);
    }

    #[test]
    fn repeated_level_gives_order_zero_and_single_row_gives_none() {
        let spec = builtin("example1").unwrap();
        let table = spatial_convergence(&spec, &[3, 3], 1e-3, 0.05).unwrap();
        assert_eq!(table.mode, ConvergenceMode::Spatial);
        assert_eq!(table.rows.len(), 2);
        assert!(table.rows[0].observed_order.is_none());
        assert_abs_diff_eq!(
            table.rows[1].observed_order.unwrap(),
            0.0,
            epsilon = 1e-12
        );
        let table = spatial_convergence(&spec, &[4], 1e-3, 0.05).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert!(table.rows[0].observed_order.is_none());
    }

    #[test]
    fn degenerate_error_ratios_leave_the_order_undefined() {
        assert!(order_from(None, 1e-3).is_none());
        assert!(order_from(Some(0.0), 0.0).is_none());
        assert!(order_from(Some(1e-3), 0.0).is_none());
        assert!(order_from(Some(0.0), 1e-3).is_none());
        assert_abs_diff_eq!(order_from(Some(4e-4), 1e-4).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(order_from(Some(1e-3), 1e-3).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn halving_the_step_never_worsens_builtin_errors_much() {
        for name in crate::problem::builtin_names() {
            let spec = builtin(name).unwrap();
            let table = temporal_convergence(&spec, 5, &[1e-3, 5e-4], 0.1).unwrap();
            assert_eq!(table.mode, ConvergenceMode::Temporal);
            let coarse = table.rows[0].max_error;
            let fine = table.rows[1].max_error;
            assert!(
                fine <= 1.05 * coarse,
                "{name}: {coarse} -> {fine} after halving dt"
            );
        }
    }

    #[test]
    fn final_time_snaps_to_the_step_grid() {
        let spec = builtin("example1").unwrap();
        // 0.01 / 3e-3 = 3.33...: not a whole number of steps, so the run
        // rounds to 3 steps and reports at t = 9e-3.
        let table = temporal_convergence(&spec, 3, &[3e-3], 0.01).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert!(table.rows[0].max_error.is_finite());
    }

    #[test]
    fn decay_bound_holds_for_smooth_kinked_and_constant_functions() {
        let pi = std::f64::consts::PI;
        let report = coefficient_decay(|x| (pi * x).sin(), pi, 7).unwrap();
        assert!(report.pass);
        assert_eq!(report.levels.len(), 8);
        for level in &report.levels {
            assert!(level.pass, "level {} breaks the bound", level.j);
            assert_abs_diff_eq!(
                level.bound,
                pi / (1u64 << (level.j + 1)) as f64,
                epsilon = 1e-15
            );
        }
        let report = coefficient_decay(|x| (x - 0.5).abs(), 1.0, 7).unwrap();
        assert!(report.pass);
        let report = coefficient_decay(|_| 3.25, 1e-6, 6).unwrap();
        assert!(report.pass);
        for level in &report.levels {
            assert_abs_diff_eq!(level.max_coefficient, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn decay_bound_holds_for_random_piecewise_linear_functions() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..20 {
            let knots = rng.gen_range(2usize..7);
            let mut xs: Vec<f64> = (0..knots).map(|_| rng.gen_range(0.05..0.95)).collect();
            xs.sort_by(f64::total_cmp);
            xs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            let mut points = vec![0.0];
            points.extend(xs);
            points.push(1.0);
            let values: Vec<f64> = (0..points.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lipschitz = points
                .windows(2)
                .zip(values.windows(2))
                .map(|(px, pv)| ((pv[1] - pv[0]) / (px[1] - px[0])).abs())
                .fold(0.0f64, f64::max)
                .max(1e-6);
            let interp = |x: f64| {
                let seg = points.windows(2).position(|p| x <= p[1]).unwrap_or(points.len() - 2);
                let (x0, x1) = (points[seg], points[seg + 1]);
                let w = (x - x0) / (x1 - x0);
                values[seg] * (1.0 - w) + values[seg + 1] * w
            };
            let report = coefficient_decay(interp, lipschitz, 7).unwrap();
            assert!(report.pass, "piecewise-linear sample breaks the bound");
        }
    }

    #[test]
    fn decay_rejects_a_bad_lipschitz_constant() {
        assert!(matches!(
            coefficient_decay(|x| x, 0.0, 3),
            Err(Error::InvalidParameter { .. })
        ));
    }
}

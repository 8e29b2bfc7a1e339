//! Inverse scattering: from (evolved) scattering data back to the lattice.
//!
//! The left half comes from the discrete Marchenko equation, the right half
//! from the spectral measure of the half-line operator, read off the poles of
//! the Weyl function and turned into coefficients by the Stieltjes procedure.

mod kernel;
mod marchenko;
mod measure;

pub use kernel::{build_kernel, kernel_f, resolvable_index, MarchenkoKernel};
pub use marchenko::{
    left_coefficients, reconstruct_jost, solve_marchenko, solve_marchenko_row, MarchenkoRow, MarchenkoSolution,
    CONDITION_LIMIT,
};
pub use measure::{
    jacobi_from_measure, pole_scan, stieltjes_full, weyl_from_scattering, JacobiCoefficients, PoleScan,
    PoleScanParams,
};

use crate::error::{Result, Stage, StageExt, TodaError};
use crate::forward::{ScatteringData, SpectralMeasure};
use crate::lattice::{validate, LatticeState, Violation, Window};

/// Off-diagonal value used past the depth the measure can resolve: small
/// enough to decouple the tail, large enough to keep recurrences finite.
pub const TAIL_COUPLING: f64 = 1e-100;

pub const DEFAULT_N_RIGHT: usize = 20;

/// `2·|n_min| + 40`.
pub fn default_k_trunc(window: Window) -> usize {
    (2 * window.n_min.unsigned_abs() + 40) as usize
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseParams {
    pub k_trunc: Option<usize>,
    /// Depth cap for the right-half reconstruction.
    pub n_right: usize,
    pub scan: PoleScanParams,
    /// Boundary closeness demanded of the reconstructed state; violations
    /// are logged, not fatal.
    pub boundary_tol: f64,
}

impl Default for InverseParams {
    fn default() -> Self {
        Self {
            k_trunc: None,
            n_right: DEFAULT_N_RIGHT,
            scan: PoleScanParams::default(),
            boundary_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub state: LatticeState,
    pub solution: MarchenkoSolution,
    pub kernel: MarchenkoKernel,
    pub measure: SpectralMeasure,
    pub captured_mass: f64,
}

/// Assembles the lattice at `data.t` on `window`.
pub fn full_inverse(data: &ScatteringData, window: Window, params: &InverseParams) -> Result<Reconstruction> {
    let k_trunc = params.k_trunc.unwrap_or_else(|| default_k_trunc(window));
    let kernel = build_kernel(data, 2 * window.n_min - 2 * k_trunc as i64).stage(Stage::Kernel)?;
    let solution = solve_marchenko(&kernel, window.n_min, k_trunc).stage(Stage::Marchenko)?;
    log::debug!(
        "marchenko: K = {k_trunc}, max residual {:e}, max condition {:e}",
        solution.max_residual(),
        solution.max_condition()
    );
    let (a_left, b_left) = left_coefficients(&solution).stage(Stage::Reconstruct)?;
    let scan = pole_scan(&solution, data, &params.scan).stage(Stage::Measure)?;
    let jacobi = stieltjes_full(&scan.measure);

    let mut a = a_left;
    let mut b = b_left;
    let depth = params.n_right;
    for n in 0..=window.n_max as usize {
        b.push(if n < depth { jacobi.b.get(n).copied().unwrap_or(0.0) } else { 0.0 });
        a.push(if n < depth { jacobi.a.get(n).copied().unwrap_or(TAIL_COUPLING) } else { TAIL_COUPLING });
    }
    let state = LatticeState::new(data.t, window, a, b).stage(Stage::Reconstruct)?;
    for v in validate(&state, params.boundary_tol).violations {
        match v {
            Violation::LeftBoundary { .. } | Violation::RightBoundary { .. } => {
                log::warn!("reconstructed state at t = {}: {v:?}", data.t)
            }
            Violation::NonPositive { n, a } => {
                return Err(TodaError::Reconstruction {
                    index: n,
                    reason: format!("a_n = {a:e}"),
                }
                .at(Stage::Reconstruct))
            }
            Violation::NonFinite { n } => {
                return Err(TodaError::Reconstruction {
                    index: n,
                    reason: "non-finite coefficient".into(),
                }
                .at(Stage::Reconstruct))
            }
        }
    }
    Ok(Reconstruction {
        state,
        solution,
        kernel,
        measure: scan.measure,
        captured_mass: scan.captured_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{full_forward, CutGrid, ForwardParams};
    use crate::lattice::{make_step_profile, SteplikeProfileSpec};

    #[test]
    fn pure_step_data_gives_background_left_and_one_site_right() {
        // the pure step has R = −z² and no bound states: F vanishes for
        // s ≤ 0 and the half-line measure is a single atom at 0
        let grid = CutGrid::midpoint(256).unwrap();
        let reflection = (0..grid.len()).map(|j| -grid.z(j) * grid.z(j)).collect();
        let data = ScatteringData::new(0.0, grid, reflection, vec![]).unwrap();
        let window = Window::new(-10, 5).unwrap();
        let rec = full_inverse(&data, window, &InverseParams::default()).unwrap();
        assert!(rec.kernel.values().iter().all(|f| f.abs() < 1e-14));
        for n in -10..0 {
            assert!((rec.state.a(n) - 1.0).abs() < 1e-13, "a_{n} = {}", rec.state.a(n));
            assert!(rec.state.b(n).abs() < 1e-13);
        }
        assert_eq!(rec.measure.len(), 1);
        assert!(rec.measure.atoms()[0].0.abs() < 1e-12);
        assert!(rec.state.b(0).abs() < 1e-12);
        assert_eq!(rec.state.a(0), TAIL_COUPLING);
    }

    #[test]
    fn one_site_right_half_round_trip() {
        // right half of a single site: the measure is one atom at b_0
        let window = Window::new(-40, 3).unwrap();
        let b0 = 0.37;
        let a: Vec<f64> = window.sites().map(|n| if n < 0 { 1.0 } else { 1e-40 }).collect();
        let b: Vec<f64> = window.sites().map(|n| if n == 0 { b0 } else { 0.0 }).collect();
        let state = LatticeState::new(0.0, window, a, b).unwrap();
        let data = full_forward(&state, &ForwardParams::default()).unwrap();
        let rec = full_inverse(&data, window, &InverseParams::default()).unwrap();
        let heavy: Vec<_> = rec.measure.atoms().iter().filter(|a| a.1 > 1e-6).collect();
        assert_eq!(heavy.len(), 1);
        assert!((heavy[0].0 - b0).abs() < 1e-8, "{:?}", rec.measure.atoms());
        assert!((heavy[0].1 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn default_round_trip_left_half() {
        let state = make_step_profile(&SteplikeProfileSpec::default()).unwrap();
        let data = full_forward(&state, &ForwardParams::default()).unwrap();
        let rec = full_inverse(&data, state.window(), &InverseParams::default()).unwrap();
        let left = rec.state.sup_distance(&state, -30..=-1);
        assert!(left < 1e-4, "left error {left:e}");
        assert!(rec.solution.max_residual() < 1e-10);
        assert!(rec.solution.rows().iter().all(|r| r.alpha > 0.0));
    }
}

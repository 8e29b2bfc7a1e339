use num_complex::Complex64;

use super::solutions::{jost_from_left, weyl_solution_right, PoleGuard};
use super::{z_of_lambda, DEFAULT_EDGE_MARGIN, DEFAULT_LOCALIZATION};
use crate::error::{Result, TodaError};
use crate::lattice::LatticeState;
use crate::linalg::tridiagonal_eigen;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundStateParams {
    /// Eigenvalues must satisfy `|μ| > 2 + edge_margin`.
    pub edge_margin: f64,
    /// Eigenvector mass allowed within five cells of either window edge.
    pub localization: f64,
}

impl Default for BoundStateParams {
    fn default() -> Self {
        Self {
            edge_margin: DEFAULT_EDGE_MARGIN,
            localization: DEFAULT_LOCALIZATION,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundState {
    pub mu: f64,
    pub z: f64,
}

const EDGE_CELLS: usize = 5;

/// Eigenvalues of the window's Jacobi matrix outside the band whose
/// eigenvectors stay away from both window edges.
pub fn bound_states(state: &LatticeState, params: &BoundStateParams) -> Vec<BoundState> {
    let len = state.window().len();
    let (values, vectors) = tridiagonal_eigen(state.b_values(), &state.a_values()[..len - 1]);
    let cells = EDGE_CELLS.min(len);
    values
        .iter()
        .enumerate()
        .filter(|(_, mu)| mu.abs() > 2.0 + params.edge_margin)
        .filter(|&(k, _)| {
            let v = vectors.column(k);
            let left: f64 = (0..cells).map(|i| v[i] * v[i]).sum();
            let right: f64 = (len - cells..len).map(|i| v[i] * v[i]).sum();
            left < params.localization && right < params.localization
        })
        .map(|(_, &mu)| BoundState {
            mu,
            z: z_of_lambda(Complex64::new(mu, 0.0)).expect("|μ| > 2").re,
        })
        .collect()
}

/// Relative mismatch tolerated where the left and right solutions are joined.
const MATCH_TOL: f64 = 1e-6;

/// Eigenfunction at a bound state normalized as `f_n = z^{−n}` on the deep
/// left, for `n_min ≤ n ≤ n_max`.
///
/// The left part comes from the Jost recurrence and the right part from the
/// decaying backward recurrence, scaled to agree at `n = −1, 0`. Sampling a
/// unit eigenvector instead would lose all precision in the deep-left tail,
/// whose entries sit far below rounding level.
pub fn bound_state_eigenfunction(state: &LatticeState, bound: &BoundState) -> Result<Vec<f64>> {
    let f = jost_from_left(state, Complex64::new(bound.z, 0.0))?;
    let psi = weyl_solution_right(state, bound.mu, PoleGuard::none())?;
    let (f_m1, f_0) = (f.at(-1).re, f.at(0).re);
    let (p_m1, p_0) = (psi.at(-1), psi.at(0));
    let scale = (f_m1 * p_m1 + f_0 * p_0) / (p_m1 * p_m1 + p_0 * p_0);
    let residual = ((f_m1 - scale * p_m1).abs() + (f_0 - scale * p_0).abs()) / (f_m1.abs() + f_0.abs());
    if !(residual < MATCH_TOL) {
        return Err(TodaError::AsymptoticsMismatch {
            mu: bound.mu,
            residual,
        });
    }
    let mut out: Vec<f64> = f.values().iter().map(|v| v.re).collect();
    out.extend((1..=state.n_max()).map(|n| scale * psi.at(n)));
    Ok(out)
}

/// Norming weight `γ = (Σ_n f_n(μ)²)⁻¹` of a bound state, with `f`
/// normalized to `z^{−n}` on the left. The geometric tail to the left of the
/// window is added in closed form.
pub fn norming_constant(state: &LatticeState, bound: &BoundState) -> Result<f64> {
    let f = bound_state_eigenfunction(state, bound)?;
    let z2 = bound.z * bound.z;
    let left_tail = z2.powi((-state.n_min() + 1) as i32) / (1.0 - z2);
    let total: f64 = f.iter().map(|v| v * v).sum::<f64>() + left_tail;
    let weight = 1.0 / total;
    if !(weight > 0.0 && weight.is_finite()) {
        return Err(TodaError::AsymptoticsMismatch {
            mu: bound.mu,
            residual: f64::NAN,
        });
    }
    Ok(weight)
}

/// Finite atomic measure with distinct, sorted atoms and positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    atoms: Vec<(f64, f64)>,
}

impl SpectralMeasure {
    /// Sorts the atoms and merges exact duplicates; zero weights are
    /// dropped, negative or non-finite entries rejected.
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if let Some(bad) = atoms
            .iter()
            .find(|(l, w)| !l.is_finite() || !w.is_finite() || *w < 0.0)
        {
            return Err(TodaError::MeasureQuality(format!("invalid atom {bad:?}")));
        }
        atoms.retain(|&(_, w)| w > 0.0);
        atoms.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (l, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == l => last.1 += w,
                _ => merged.push((l, w)),
            }
        }
        if merged.is_empty() {
            return Err(TodaError::MeasureQuality("measure has no atoms".into()));
        }
        Ok(Self { atoms: merged })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn locations(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.0).collect()
    }
}

/// Spectral measure of the right half-line operator (`n ≥ 0`, `y_{−1} = 0`)
/// from the eigen-decomposition of its window truncation.
pub fn l0_spectrum(state: &LatticeState) -> SpectralMeasure {
    let start = state.window().index(0);
    let diag = &state.b_values()[start..];
    let off = &state.a_values()[start..state.window().len() - 1];
    let (values, vectors) = tridiagonal_eigen(diag, off);
    let atoms = values
        .iter()
        .enumerate()
        .map(|(k, &l)| (l, vectors[(0, k)] * vectors[(0, k)]))
        .collect();
    SpectralMeasure::new(atoms).expect("eigenvector components are finite and unit mass is positive")
}

/// `m(λ) = Σ_j w_j/(λ_j − λ)`.
pub fn weyl_m_from_measure(measure: &SpectralMeasure, lambda: Complex64, pole_tol: f64) -> Result<Complex64> {
    let mut m = Complex64::new(0.0, 0.0);
    for &(l, w) in measure.atoms() {
        let d = Complex64::new(l, 0.0) - lambda;
        if d.norm() < pole_tol {
            return Err(TodaError::PoleProximity {
                lambda: lambda.re,
                distance: d.norm(),
            });
        }
        m += w / d;
    }
    Ok(m)
}

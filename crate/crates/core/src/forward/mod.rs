//! Direct scattering: from a lattice state to its reflection coefficient on
//! the cut `[−2, 2]`, its bound states and norming weights, and the spectral
//! measure of the right half-line operator.

mod solutions;
mod spectrum;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, TodaError};
use crate::lattice::LatticeState;
use crate::spline::CubicSpline;

pub use solutions::{
    jost_from_left, polynomial_solutions, transition_coefficient, transition_from_values, weyl_m_from_recurrence,
    weyl_solution_right, JostValues, PoleGuard, PolynomialSolutions, Transition, WeylSolution,
};
pub use spectrum::{
    bound_state_eigenfunction, bound_states, l0_spectrum, norming_constant, weyl_m_from_measure, BoundState,
    BoundStateParams, SpectralMeasure,
};

/// Bound states closer than this to `±2` are treated as band-edge artifacts.
pub const DEFAULT_EDGE_MARGIN: f64 = 1e-6;
/// Largest eigenvector mass allowed within five cells of a window edge.
pub const DEFAULT_LOCALIZATION: f64 = 1e-8;
pub const DEFAULT_GRID_SIZE: usize = 1024;

/// The root of `z² − λz + 1 = 0` with `|z| ≤ 1`.
///
/// Off the cut this is the unique root inside the unit disk (so `z(2.5) = 0.5`
/// and `z(−λ) = −z(λ)`). For real `λ ∈ (−2, 2)` it returns `e^{iθ}` with
/// `λ = 2cos θ`, `θ ∈ (0, π)`, the convention used by [`CutGrid`].
pub fn z_of_lambda(lambda: Complex64) -> Result<Complex64> {
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(TodaError::Usage(format!("z_of_lambda: non-finite λ = {lambda}")));
    }
    if lambda.im == 0.0 {
        let x = lambda.re;
        if x.abs() == 2.0 {
            return Err(TodaError::BandEdge(x));
        }
        if x.abs() < 2.0 {
            return Ok(Complex64::from_polar(1.0, (0.5 * x).acos()));
        }
        // real and outside the band: the larger root is computed without
        // cancellation, its reciprocal is the one we want
        let big = 0.5 * x + x.signum() * (0.25 * x * x - 1.0).sqrt();
        return Ok(Complex64::new(1.0 / big, 0.0));
    }
    let s = (0.25 * lambda * lambda - 1.0).sqrt();
    let (p, q) = (0.5 * lambda + s, 0.5 * lambda - s);
    let big = if p.norm() >= q.norm() { p } else { q };
    Ok(1.0 / big)
}

/// Nodes on the upper rim of the unit circle, `z_j = e^{iθ_j}`,
/// `λ_j = 2cos θ_j`, with `0 < θ_1 < … < θ_M < π`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutGrid {
    thetas: Vec<f64>,
}

impl CutGrid {
    /// Midpoint nodes `θ_j = π(j − ½)/M`, `j = 1..M`.
    pub fn midpoint(size: usize) -> Result<Self> {
        if size < 4 {
            return Err(TodaError::Config(format!("grid size must be at least 4, got {size}")));
        }
        let m = size as f64;
        Ok(Self {
            thetas: (1..=size).map(|j| PI * (j as f64 - 0.5) / m).collect(),
        })
    }

    pub fn from_thetas(thetas: Vec<f64>) -> Result<Self> {
        if thetas.is_empty() {
            return Err(TodaError::Usage("empty cut grid".into()));
        }
        if !thetas.iter().all(|&t| t > 0.0 && t < PI) {
            return Err(TodaError::Usage("cut grid angles must lie in (0, π)".into()));
        }
        if !thetas.windows(2).all(|w| w[0] < w[1]) {
            return Err(TodaError::Usage("cut grid angles must be strictly increasing".into()));
        }
        Ok(Self { thetas })
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn theta(&self, j: usize) -> f64 {
        self.thetas[j]
    }

    pub fn lambda(&self, j: usize) -> f64 {
        2.0 * self.thetas[j].cos()
    }

    pub fn z(&self, j: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.thetas[j])
    }
}

/// A bound state together with its norming weight `γ = (Σ_n f_n(μ)²)⁻¹`,
/// where `f` is the Jost solution normalized to `z^{−n}` on the left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundStateData {
    pub mu: f64,
    pub z: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringData {
    pub t: f64,
    pub grid: CutGrid,
    pub reflection: Vec<Complex64>,
    pub bound_states: Vec<BoundStateData>,
}

impl ScatteringData {
    pub fn new(t: f64, grid: CutGrid, reflection: Vec<Complex64>, bound_states: Vec<BoundStateData>) -> Result<Self> {
        if reflection.len() != grid.len() {
            return Err(TodaError::Usage(format!(
                "{} reflection values for a grid of {} nodes",
                reflection.len(),
                grid.len()
            )));
        }
        for bs in &bound_states {
            if !(bs.z.abs() < 1.0 && bs.z != 0.0 && bs.weight > 0.0) {
                return Err(TodaError::Usage(format!("invalid bound state {bs:?}")));
            }
        }
        Ok(Self {
            t,
            grid,
            reflection,
            bound_states,
        })
    }

    /// Largest `||R| − 1|` over the grid.
    pub fn unimodularity_defect(&self) -> f64 {
        self.reflection.iter().map(|r| (r.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Interpolates `R` between nodes through a spline of its unwrapped
    /// phase, which keeps `|R| = 1` exactly.
    pub fn interpolant(&self) -> ReflectionInterpolant {
        let mut phase = Vec::with_capacity(self.reflection.len());
        let mut prev = 0.0_f64;
        for (j, r) in self.reflection.iter().enumerate() {
            let arg = r.arg();
            let unwrapped = if j == 0 {
                arg
            } else {
                let mut d = arg - prev.rem_euclid(2.0 * PI);
                d = (d + PI).rem_euclid(2.0 * PI) - PI;
                prev + d
            };
            phase.push(unwrapped);
            prev = unwrapped;
        }
        ReflectionInterpolant {
            spline: CubicSpline::new(self.grid.thetas().to_vec(), phase),
        }
    }
}

/// Continuous unwrapped phase `φ(θ)` of the reflection coefficient,
/// `R(θ) = e^{iφ(θ)}`.
#[derive(Debug, Clone)]
pub struct ReflectionInterpolant {
    spline: CubicSpline,
}

impl ReflectionInterpolant {
    pub fn phase(&self, theta: f64) -> f64 {
        self.spline.eval(theta)
    }

    pub fn reflection(&self, theta: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.phase(theta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardParams {
    pub grid_size: usize,
    pub bound: BoundStateParams,
}

impl Default for ForwardParams {
    fn default() -> Self {
        Self {
            grid_size: DEFAULT_GRID_SIZE,
            bound: BoundStateParams::default(),
        }
    }
}

/// Scattering data of a lattice state: `R` on the midpoint grid, bound
/// states and their norming weights. Grid nodes are processed in parallel.
pub fn full_forward(state: &LatticeState, params: &ForwardParams) -> Result<ScatteringData> {
    let grid = CutGrid::midpoint(params.grid_size)?;
    let reflection = (0..grid.len())
        .into_par_iter()
        .map(|j| {
            transition_coefficient(state, grid.z(j))
                .map(|tr| tr.r)
                .map_err(|e| e.indexed("grid node", j))
        })
        .collect::<Result<Vec<_>>>()?;
    let bound_states = bound_states(state, &params.bound)
        .into_iter()
        .enumerate()
        .map(|(k, bs)| {
            let weight = norming_constant(state, &bs).map_err(|e| e.indexed("bound state", k))?;
            Ok(BoundStateData {
                mu: bs.mu,
                z: bs.z,
                weight,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    log::debug!(
        "forward: {} nodes, {} bound states, unimodularity defect {:e}",
        grid.len(),
        bound_states.len(),
        reflection.iter().map(|r| (r.norm() - 1.0).abs()).fold(0.0, f64::max)
    );
    ScatteringData::new(state.t, grid, reflection, bound_states)
}

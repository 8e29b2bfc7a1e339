use num_complex::{Complex64, ComplexFloat};

use crate::error::{Result, TodaError};
use crate::lattice::LatticeState;

/// Coefficients `|a_n|` below this cannot be divided by.
const A_FLOOR: f64 = 1e-280;
/// Backward recurrences are renormalized once a value exceeds this.
const RESCALE_AT: f64 = 1e100;

/// Orthogonal polynomials of the right half-line operator:
/// `P_{−1} = 0`, `P_0 = 1` and `Q_0 = 0`, `Q_1 = 1/a_0`, for `n = 0..=depth`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSolutions {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

pub fn polynomial_solutions(state: &LatticeState, lambda: f64, depth: usize) -> Result<PolynomialSolutions> {
    if depth as i64 > state.n_max() + 1 {
        return Err(TodaError::Usage(format!(
            "polynomial depth {depth} exceeds the window (n_max = {})",
            state.n_max()
        )));
    }
    let mut p = Vec::with_capacity(depth + 1);
    let mut q = Vec::with_capacity(depth + 1);
    p.push(1.0);
    q.push(0.0);
    if depth >= 1 {
        let a0 = divisor(state, 0)?;
        p.push((lambda - state.b(0)) / a0);
        q.push(1.0 / a0);
    }
    for n in 1..depth {
        let an = divisor(state, n as i64)?;
        let a_prev = state.a(n as i64 - 1);
        let bn = state.b(n as i64);
        let next_p = ((lambda - bn) * p[n] - a_prev * p[n - 1]) / an;
        let next_q = ((lambda - bn) * q[n] - a_prev * q[n - 1]) / an;
        if !(next_p.is_finite() && next_q.is_finite()) {
            return Err(TodaError::Numerical(format!(
                "polynomial solutions overflow at n = {}; request a smaller depth",
                n + 1
            )));
        }
        p.push(next_p);
        q.push(next_q);
    }
    Ok(PolynomialSolutions { p, q })
}

fn divisor(state: &LatticeState, n: i64) -> Result<f64> {
    let a = state.a_ext(n);
    if a.abs() < A_FLOOR {
        return Err(TodaError::DegenerateCoefficient { index: n, value: a });
    }
    Ok(a)
}

/// Jost solution `f_n` for `n_min ≤ n ≤ 0`, seeded with the free plane wave
/// `z^{−n}` at the two leftmost sites.
#[derive(Debug, Clone, PartialEq)]
pub struct JostValues {
    pub z: Complex64,
    n_min: i64,
    values: Vec<Complex64>,
}

impl JostValues {
    pub fn at(&self, n: i64) -> Complex64 {
        self.values[(n - self.n_min) as usize]
    }

    pub fn n_min(&self) -> i64 {
        self.n_min
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

pub fn jost_from_left(state: &LatticeState, z: Complex64) -> Result<JostValues> {
    let lambda = z + 1.0 / z;
    let n_min = state.n_min();
    let len = (1 - n_min) as usize;
    let mut f = Vec::with_capacity(len);
    f.push(z.powi(-n_min as i32));
    f.push(z.powi(-(n_min + 1) as i32));
    for n in n_min + 1..0 {
        let i = (n - n_min) as usize;
        let an = divisor(state, n)?;
        let next = ((lambda - state.b(n)) * f[i] - state.a_ext(n - 1) * f[i - 1]) / an;
        f.push(next);
    }
    Ok(JostValues { z, n_min, values: f })
}

/// Embedded eigenvalues to keep clear of, with the minimum allowed distance.
#[derive(Debug, Clone, Copy)]
pub struct PoleGuard<'a> {
    pub poles: &'a [f64],
    pub tolerance: f64,
}

impl<'a> PoleGuard<'a> {
    pub fn none() -> Self {
        Self {
            poles: &[],
            tolerance: 0.0,
        }
    }

    pub fn check(&self, lambda: f64) -> Result<()> {
        if let Some(d) = self.poles.iter().map(|p| (p - lambda).abs()).reduce(f64::min) {
            if d < self.tolerance {
                return Err(TodaError::PoleProximity { lambda, distance: d });
            }
        }
        Ok(())
    }
}

/// A solution decaying toward `+∞`, known up to a positive factor.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylSolution<T> {
    n_min: i64,
    values: Vec<T>,
}

impl<T: Copy> WeylSolution<T> {
    pub fn at(&self, n: i64) -> T {
        self.values[(n - self.n_min) as usize]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn n_min(&self) -> i64 {
        self.n_min
    }
}

fn lift<T: From<f64>>(x: f64) -> T {
    <T as From<f64>>::from(x)
}

/// Backward recurrence from `ψ_{n_max+1} = 0`, `ψ_{n_max} = 1` down to
/// `n_stop`, renormalizing by positive factors to avoid overflow.
fn backward<T>(state: &LatticeState, lambda: T, n_stop: i64) -> Result<WeylSolution<T>>
where
    T: ComplexFloat<Real = f64> + From<f64>,
{
    let n_max = state.n_max();
    let len = (n_max - n_stop + 1) as usize;
    let mut psi = vec![lift::<T>(0.0); len];
    let idx = |n: i64| (n - n_stop) as usize;
    psi[idx(n_max)] = lift::<T>(1.0);
    let mut next = lift::<T>(0.0);
    for n in (n_stop + 1..=n_max).rev() {
        let a_prev = divisor(state, n - 1)?;
        let value = ((lambda - lift::<T>(state.b(n))) * psi[idx(n)] - lift::<T>(state.a(n)) * next) / lift::<T>(a_prev);
        next = psi[idx(n)];
        psi[idx(n - 1)] = value;
        let size = value.abs();
        if !size.is_finite() {
            return Err(TodaError::Numerical(format!("Weyl recurrence overflow at n = {}", n - 1)));
        }
        if size > RESCALE_AT {
            let factor = lift::<T>(1.0 / size);
            for v in &mut psi[idx(n - 1)..] {
                *v = *v * factor;
            }
            next = next * factor;
        }
    }
    Ok(WeylSolution {
        n_min: n_stop,
        values: psi,
    })
}

/// Real solution square-summable toward `+∞`, for `n_min ≤ n ≤ n_max`.
pub fn weyl_solution_right(state: &LatticeState, lambda: f64, guard: PoleGuard<'_>) -> Result<WeylSolution<f64>> {
    guard.check(lambda)?;
    backward(state, lambda, state.n_min())
}

/// `m(λ) = ((L₀ − λ)⁻¹δ₀, δ₀)` from the decaying solution of the right
/// half-line problem, for `λ` off the real spectrum of `L₀`.
pub fn weyl_m_from_recurrence(state: &LatticeState, lambda: Complex64) -> Result<Complex64> {
    let psi = backward(state, lambda, 0)?;
    let psi0 = psi.at(0);
    let psi1 = if state.n_max() >= 1 { psi.at(1) } else { Complex64::new(0.0, 0.0) };
    // `a_{−1}ψ_{−1}` as implied by the recurrence at n = 0
    let flux = (lambda - state.b(0)) * psi0 - state.a(0) * psi1;
    if flux.norm() == 0.0 {
        return Err(TodaError::PoleProximity {
            lambda: lambda.re,
            distance: lambda.im.abs(),
        });
    }
    Ok(-psi0 / flux)
}

/// Coefficients of `ψ_n = a f̄_n + ā f_n` from the sites `n = −1, 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    /// `a(λ)` up to the positive scale of `ψ`.
    pub a: Complex64,
    /// Second unknown of the system; equals `conj(a)` up to rounding.
    pub a_bar: Complex64,
    /// `R = ā/a`.
    pub r: Complex64,
}

impl Transition {
    /// `|a_bar − conj(a)| / |a|`.
    pub fn conjugacy_residual(&self) -> f64 {
        (self.a_bar - self.a.conj()).norm() / self.a.norm()
    }
}

const UNIMODULARITY_TOL: f64 = 1e-8;

pub fn transition_from_values(
    lambda: f64,
    f_m1: Complex64,
    f_0: Complex64,
    psi_m1: f64,
    psi_0: f64,
) -> Result<Transition> {
    let det = f_m1.conj() * f_0 - f_m1 * f_0.conj();
    if det.norm() <= 1e-14 * f_m1.norm() * f_0.norm() {
        return Err(TodaError::DegeneratePoint {
            lambda,
            reason: "Jost solution and its conjugate are linearly dependent".into(),
        });
    }
    let a = (psi_m1 * f_0 - psi_0 * f_m1) / det;
    let a_bar = (f_m1.conj() * psi_0 - f_0.conj() * psi_m1) / det;
    let r = a_bar / a;
    if !((r.norm() - 1.0).abs() <= UNIMODULARITY_TOL) {
        return Err(TodaError::DegeneratePoint {
            lambda,
            reason: format!("|R| = {} is not unimodular", r.norm()),
        });
    }
    Ok(Transition { a, a_bar, r })
}

/// Transition and reflection coefficients at a point `z` of the unit circle.
pub fn transition_coefficient(state: &LatticeState, z: Complex64) -> Result<Transition> {
    let lambda = (z + 1.0 / z).re;
    let f = jost_from_left(state, z)?;
    let psi = weyl_solution_right(state, lambda, PoleGuard::none())?;
    transition_from_values(lambda, f.at(-1), f.at(0), psi.at(-1), psi.at(0))
}

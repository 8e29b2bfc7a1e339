use num_complex::Complex64;
use rayon::prelude::*;

use super::marchenko::{left_coefficients, reconstruct_jost, MarchenkoSolution};
use crate::error::{Result, TodaError};
use crate::forward::{ReflectionInterpolant, ScatteringData, SpectralMeasure};

/// `m(λ) = −(1/a_{−1})(f̄₀ + R f₀)/(f̄_{−1} + R f_{−1})` at `z = e^{iθ}`, with
/// `f` rebuilt from the transformation operator.
pub fn weyl_from_scattering(sol: &MarchenkoSolution, r: Complex64, z: Complex64, pole_tol: f64) -> Result<Complex64> {
    let f_m1 = reconstruct_jost(sol, -1, z);
    let f_0 = reconstruct_jost(sol, 0, z);
    let den = f_m1.conj() + r * f_m1;
    let lambda = (z + 1.0 / z).re;
    if den.norm() < pole_tol * f_m1.norm() {
        return Err(TodaError::PoleProximity {
            lambda,
            distance: den.norm() / f_m1.norm(),
        });
    }
    Ok(-(f_0.conj() + r * f_0) / (sol.a_minus_one() * den))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleScanParams {
    /// Scan points per grid node.
    pub refinement: usize,
    /// Atoms lighter than this are dropped; the balancing atom is added only
    /// for deficits at least this large.
    pub weight_floor: f64,
    /// Captured mass below this fails the scan.
    pub min_capture: f64,
}

impl Default for PoleScanParams {
    fn default() -> Self {
        Self {
            refinement: 8,
            weight_floor: 1e-10,
            min_capture: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoleScan {
    pub measure: SpectralMeasure,
    /// Mass of the located atoms before balancing.
    pub captured_mass: f64,
    pub atoms_found: usize,
}

/// On the cut the Weyl function is the real ratio `m = −(1/a_{−1}) h/g` with
/// `g = Re(e^{iφ/2} f_{−1})`, `h = Re(e^{iφ/2} f₀)` and `R = e^{iφ}`.
struct CutRatio {
    phase: ReflectionInterpolant,
    /// Reconstructed left half, `n_min..=−1`.
    a: Vec<f64>,
    b: Vec<f64>,
    n_min: i64,
    a_m1: f64,
}

impl CutRatio {
    fn new(sol: &MarchenkoSolution, data: &ScatteringData) -> Result<Self> {
        let (a, b) = left_coefficients(sol)?;
        Ok(Self {
            phase: data.interpolant(),
            a_m1: a[a.len() - 1],
            a,
            b,
            n_min: sol.n_min(),
        })
    }

    /// `(f_{−1}, f₀)` by the three-term recurrence of the reconstructed left
    /// half, seeded with `z^{−n}` at its left end.
    fn jost(&self, z: Complex64) -> (Complex64, Complex64) {
        let lambda = z + z.inv();
        let mut prev = z.powi(-(self.n_min - 1) as i32);
        let mut cur = z.powi(-self.n_min as i32);
        let mut a_prev = 1.0;
        for (&an, &bn) in self.a.iter().zip(&self.b) {
            let next = ((lambda - bn) * cur - a_prev * prev) / an;
            prev = cur;
            cur = next;
            a_prev = an;
        }
        (prev, cur)
    }

    fn gh(&self, theta: f64) -> (f64, f64) {
        let z = Complex64::from_polar(1.0, theta);
        let half = Complex64::from_polar(1.0, 0.5 * self.phase.phase(theta));
        let (f_m1, f_0) = self.jost(z);
        ((half * f_m1).re, (half * f_0).re)
    }

    fn g(&self, theta: f64) -> f64 {
        self.gh(theta).0
    }

    fn m(&self, theta: f64) -> f64 {
        let (g, h) = self.gh(theta);
        -h / (self.a_m1 * g)
    }

    /// Zero of `g` in a bracket, to `1e-12` in `λ`.
    fn bisect(&self, mut lo: f64, mut hi: f64) -> f64 {
        let mut g_lo = self.g(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 2.0 * (hi - lo) * mid.sin() < 1e-12 {
                break;
            }
            let g_mid = self.g(mid);
            if g_mid == 0.0 {
                return mid;
            }
            if (g_mid < 0.0) == (g_lo < 0.0) {
                lo = mid;
                g_lo = g_mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `lim_{λ→λ*}(λ* − λ)m(λ)` from symmetric offsets `±ε`, `ε` halved
    /// four times, followed by Richardson extrapolation in `ε²`.
    fn residue(&self, lambda: f64, eps0: f64) -> f64 {
        let sample = |eps: f64| {
            let side = |l: f64| (lambda - l) * self.m((0.5 * l).acos());
            0.5 * (side(lambda + eps) + side(lambda - eps))
        };
        let mut table: Vec<f64> = (0..4).map(|k| sample(eps0 / f64::powi(2.0, k))).collect();
        let mut factor = 4.0;
        while table.len() > 1 {
            table = table.windows(2).map(|w| (factor * w[1] - w[0]) / (factor - 1.0)).collect();
            factor *= 4.0;
        }
        table[0]
    }
}

/// Locates the atoms of the right half-line spectral measure as the poles of
/// the Weyl function on the cut, and their weights as residues.
///
/// The scan runs on a uniform angle grid `params.refinement` times finer than
/// the data grid. Sign changes of the denominator are bisected; local minima
/// of its modulus without a sign change are resampled sixteen times finer to
/// catch close pairs. Missing mass (at least `weight_floor`) is placed in a
/// balancing atom at `λ = 0`, where the spectrum accumulates; excess mass is
/// scaled away.
pub fn pole_scan(sol: &MarchenkoSolution, data: &ScatteringData, params: &PoleScanParams) -> Result<PoleScan> {
    let thetas = data.grid.thetas();
    let (t0, t1) = (thetas[0], thetas[thetas.len() - 1]);
    let ratio = CutRatio::new(sol, data)?;
    let count = params.refinement.max(1) * thetas.len();
    let scan: Vec<f64> = (0..=count).map(|i| t0 + (t1 - t0) * i as f64 / count as f64).collect();
    let g: Vec<f64> = scan.par_iter().map(|&t| ratio.g(t)).collect();

    let mut brackets: Vec<(f64, f64)> = Vec::new();
    for i in 0..count {
        if g[i] == 0.0 || (g[i] < 0.0) != (g[i + 1] < 0.0) {
            brackets.push((scan[i], scan[i + 1]));
        }
    }
    for i in 1..count {
        let local_min = g[i].abs() < g[i - 1].abs() && g[i].abs() < g[i + 1].abs();
        let same_sign = (g[i - 1] < 0.0) == (g[i] < 0.0) && (g[i] < 0.0) == (g[i + 1] < 0.0);
        if local_min && same_sign {
            let sub = 16;
            let (lo, hi) = (scan[i - 1], scan[i + 1]);
            let pts: Vec<f64> = (0..=sub).map(|k| lo + (hi - lo) * k as f64 / sub as f64).collect();
            let vals: Vec<f64> = pts.iter().map(|&t| ratio.g(t)).collect();
            for k in 0..sub {
                if (vals[k] < 0.0) != (vals[k + 1] < 0.0) {
                    brackets.push((pts[k], pts[k + 1]));
                }
            }
        }
    }

    let roots: Vec<f64> = brackets.par_iter().map(|&(lo, hi)| ratio.bisect(lo, hi)).collect();
    let mut lambdas: Vec<f64> = roots.iter().map(|t| 2.0 * t.cos()).collect();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup_by(|a, b| (*a - *b).abs() < 1e-11);

    let atoms: Vec<(f64, f64)> = lambdas
        .par_iter()
        .enumerate()
        .map(|(i, &l)| {
            let mut gap = (2.0 - l.abs()) * 0.25;
            if i > 0 {
                gap = gap.min(0.25 * (l - lambdas[i - 1]));
            }
            if i + 1 < lambdas.len() {
                gap = gap.min(0.25 * (lambdas[i + 1] - l));
            }
            (l, ratio.residue(l, gap.min(1e-4)))
        })
        .collect();

    let mut kept = Vec::with_capacity(atoms.len());
    for (l, w) in atoms {
        if w >= params.weight_floor && w.is_finite() {
            kept.push((l, w));
        } else {
            log::debug!("pole scan: dropping atom at {l} with weight {w:e}");
        }
    }
    let captured: f64 = kept.iter().map(|a| a.1).sum();
    log::debug!("pole scan: {} atoms, captured mass {captured}", kept.len());
    if !(captured >= params.min_capture) {
        return Err(TodaError::MeasureQuality(format!(
            "pole scan captured mass {captured} (< {}); refine the grid",
            params.min_capture
        )));
    }
    let atoms_found = kept.len();
    let deficit = 1.0 - captured;
    if deficit >= params.weight_floor {
        kept.push((0.0, deficit));
    }
    let total: f64 = kept.iter().map(|a| a.1).sum();
    for a in &mut kept {
        a.1 /= total;
    }
    Ok(PoleScan {
        measure: SpectralMeasure::new(kept)?,
        captured_mass: captured,
        atoms_found,
    })
}

/// Recurrence coefficients of the orthonormal polynomials of a measure.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiCoefficients {
    /// `b_0..b_{N−1}`.
    pub b: Vec<f64>,
    /// `a_0..a_{N'−1}`, `N' ≤ N`.
    pub a: Vec<f64>,
}

/// `a_n` below this (relative to the spread of the atoms) ends the
/// recurrence.
const A_POSITIVITY_FLOOR: f64 = 1e-13;

/// Discrete Stieltjes procedure: `b_n = Σ w λ p_n²`,
/// `a_n = ‖(λ − b_n)p_n − a_{n−1}p_{n−1}‖`, `p_{n+1}` the normalized
/// remainder. The remainder is re-orthogonalized against all previous
/// polynomials, which leaves the coefficients unchanged in exact arithmetic
/// and keeps them accurate in floating point.
///
/// Runs for at most `depth` diagonal entries and stops early once an `a_n`
/// falls below the positivity floor.
fn stieltjes(measure: &SpectralMeasure, depth: usize) -> JacobiCoefficients {
    let (lam, w): (Vec<f64>, Vec<f64>) = measure.atoms().iter().copied().unzip();
    let total: f64 = w.iter().sum();
    let w: Vec<f64> = w.iter().map(|x| x / total).collect();
    let spread = lam.iter().map(|l| l.abs()).fold(0.0, f64::max).max(1e-300);
    let dot = |p: &[f64], q: &[f64]| p.iter().zip(q).zip(&w).map(|((x, y), wt)| x * y * wt).sum::<f64>();

    let mut basis: Vec<Vec<f64>> = vec![vec![1.0; lam.len()]];
    let mut b = Vec::new();
    let mut a = Vec::new();
    for n in 0..depth.min(lam.len()) {
        let p = &basis[n];
        let lp: Vec<f64> = p.iter().zip(&lam).map(|(x, l)| x * l).collect();
        let bn = dot(&lp, p);
        b.push(bn);
        if n + 1 == depth || n + 1 == lam.len() {
            break;
        }
        let mut q: Vec<f64> = lp.iter().zip(p).map(|(x, y)| x - bn * y).collect();
        if n > 0 {
            let prev = &basis[n - 1];
            for (qi, pi) in q.iter_mut().zip(prev) {
                *qi -= a[n - 1] * pi;
            }
        }
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&q, v);
                for (qi, vi) in q.iter_mut().zip(v) {
                    *qi -= c * vi;
                }
            }
        }
        let an = dot(&q, &q).sqrt();
        if !(an > A_POSITIVITY_FLOOR * spread) {
            break;
        }
        a.push(an);
        basis.push(q.iter().map(|x| x / an).collect());
    }
    JacobiCoefficients { b, a }
}

/// All recurrence coefficients the measure supports: `K` diagonal and up to
/// `K − 1` off-diagonal entries for `K` atoms.
pub fn stieltjes_full(measure: &SpectralMeasure) -> JacobiCoefficients {
    stieltjes(measure, measure.len())
}

/// `(a_n, b_n)` for `0 ≤ n < count`; needs at least `count + 1` atoms.
pub fn jacobi_from_measure(measure: &SpectralMeasure, count: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if count + 1 > measure.len() {
        return Err(TodaError::MeasureQuality(format!(
            "{} atoms support at most {} coefficient pairs, {count} requested",
            measure.len(),
            measure.len().saturating_sub(1)
        )));
    }
    let coeffs = stieltjes(measure, count + 1);
    if coeffs.a.len() < count {
        return Err(TodaError::MeasureQuality(format!(
            "a_{} fell below the positivity floor; atoms are degenerate",
            coeffs.a.len()
        )));
    }
    let mut b = coeffs.b;
    b.truncate(count);
    Ok((coeffs.a, b))
}

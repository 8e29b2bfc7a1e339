//! Direct time integration of the lattice equations on a finite window.
//!
//! Ghost cells outside the window hold the asymptotic values (`a = 1`,
//! `b = 0` on the left, `a = 0`, `b = 0` on the right) and never move.
//! Classical RK4 is the production integrator; the Picard iteration of the
//! shifted system is kept as an independent cross-check.

use crate::error::{Result, TodaError};
use crate::forward::DEFAULT_EDGE_MARGIN;
use crate::lattice::{b_norm, LatticeState, Window};
use crate::linalg::tridiagonal_eigen;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Rk4,
    Picard { iterations: usize },
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Rk4 => f.write_str("rk4"),
            Scheme::Picard { iterations } => write!(f, "picard-trapezoid({iterations})"),
        }
    }
}

/// Time-ordered states with a nominal step; the last step may be shorter.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<LatticeState>,
    pub dt: f64,
    pub scheme: Scheme,
}

impl Trajectory {
    pub fn first(&self) -> &LatticeState {
        &self.states[0]
    }

    pub fn last(&self) -> &LatticeState {
        self.states.last().expect("trajectory is never empty")
    }
}

fn rhs_into(a: &[f64], b: &[f64], da: &mut [f64], db: &mut [f64]) {
    let n = a.len();
    for i in 0..n {
        let b_next = if i + 1 < n { b[i + 1] } else { 0.0 };
        let a_prev = if i > 0 { a[i - 1] } else { 1.0 };
        da[i] = 0.5 * a[i] * (b_next - b[i]);
        db[i] = a[i] * a[i] - a_prev * a_prev;
    }
}

/// Right-hand side `(ȧ, ḃ)` of the lattice equations at every window site.
pub fn toda_rhs(state: &LatticeState) -> (Vec<f64>, Vec<f64>) {
    let len = state.window().len();
    let (mut da, mut db) = (vec![0.0; len], vec![0.0; len]);
    rhs_into(state.a_values(), state.b_values(), &mut da, &mut db);
    (da, db)
}

/// Shifted variables `x1 = a − [n<0]`, `x2 = b`, which vanish for the pure
/// step.
pub fn to_substituted(state: &LatticeState) -> (Vec<f64>, Vec<f64>) {
    let x1 = state
        .window()
        .sites()
        .map(|n| state.a(n) - if n < 0 { 1.0 } else { 0.0 })
        .collect();
    (x1, state.b_values().to_vec())
}

pub fn from_substituted(t: f64, window: Window, x1: &[f64], x2: &[f64]) -> Result<LatticeState> {
    let a = window
        .sites()
        .zip(x1)
        .map(|(n, x)| x + if n < 0 { 1.0 } else { 0.0 })
        .collect();
    LatticeState::new(t, window, a, x2.to_vec())
}

/// Right-hand side of the lattice equations written in the shifted variables.
///
/// With `s_n = [n < 0]`:
/// `ẋ1_n = ½x1_n(x2_{n+1} − x2_n) + ½s_n(x2_{n+1} − x2_n)`,
/// `ẋ2_n = x1_n² − x1_{n−1}² + 2(s_n x1_n − s_{n−1} x1_{n−1}) + s_n − s_{n−1}`.
/// The last term is `−1` at `n = 0`: the pure step itself is not stationary.
pub fn substituted_rhs(window: Window, x1: &[f64], x2: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if x1.len() != window.len() || x2.len() != window.len() {
        return Err(TodaError::Usage(format!(
            "substituted_rhs: sequences of length {} and {} on a window of {} sites",
            x1.len(),
            x2.len(),
            window.len()
        )));
    }
    let mut d1 = vec![0.0; window.len()];
    let mut d2 = vec![0.0; window.len()];
    substituted_rhs_into(window, x1, x2, &mut d1, &mut d2);
    Ok((d1, d2))
}

fn substituted_rhs_into(window: Window, x1: &[f64], x2: &[f64], d1: &mut [f64], d2: &mut [f64]) {
    let len = x1.len();
    for (i, n) in window.sites().enumerate() {
        let s = if n < 0 { 1.0 } else { 0.0 };
        let s_prev = if n - 1 < 0 { 1.0 } else { 0.0 };
        let x2_next = if i + 1 < len { x2[i + 1] } else { 0.0 };
        let x1_prev = if i > 0 { x1[i - 1] } else { 0.0 };
        let jump = x2_next - x2[i];
        d1[i] = 0.5 * x1[i] * jump + 0.5 * s * jump;
        d2[i] = x1[i] * x1[i] - x1_prev * x1_prev + 2.0 * (s * x1[i] - s_prev * x1_prev) + (s - s_prev);
    }
}

type Pair = (Vec<f64>, Vec<f64>);

struct Rk4Workspace {
    k1: Pair,
    k2: Pair,
    k3: Pair,
    k4: Pair,
    tmp: Pair,
}

impl Rk4Workspace {
    fn new(len: usize) -> Self {
        let pair = || (vec![0.0; len], vec![0.0; len]);
        Self {
            k1: pair(),
            k2: pair(),
            k3: pair(),
            k4: pair(),
            tmp: pair(),
        }
    }

    /// `out = rhs(x + c·k)`.
    fn stage(a: &[f64], b: &[f64], k: &Pair, c: f64, tmp: &mut Pair, out: &mut Pair) {
        for i in 0..a.len() {
            tmp.0[i] = a[i] + c * k.0[i];
            tmp.1[i] = b[i] + c * k.1[i];
        }
        rhs_into(&tmp.0, &tmp.1, &mut out.0, &mut out.1);
    }

    fn step(&mut self, a: &mut [f64], b: &mut [f64], h: f64) {
        rhs_into(a, b, &mut self.k1.0, &mut self.k1.1);
        Self::stage(a, b, &self.k1, 0.5 * h, &mut self.tmp, &mut self.k2);
        Self::stage(a, b, &self.k2, 0.5 * h, &mut self.tmp, &mut self.k3);
        Self::stage(a, b, &self.k3, h, &mut self.tmp, &mut self.k4);
        let (k1, k2, k3, k4) = (&self.k1, &self.k2, &self.k3, &self.k4);
        for i in 0..a.len() {
            a[i] += h / 6.0 * (k1.0[i] + 2.0 * k2.0[i] + 2.0 * k3.0[i] + k4.0[i]);
            b[i] += h / 6.0 * (k1.1[i] + 2.0 * k2.1[i] + 2.0 * k3.1[i] + k4.1[i]);
        }
    }
}

fn check_step(window: Window, a: &[f64], b: &[f64], t: f64) -> Result<()> {
    for (i, n) in window.sites().enumerate() {
        if !a[i].is_finite() || !b[i].is_finite() {
            return Err(TodaError::Numerical(format!(
                "non-finite coefficient at n = {n}, t = {t}"
            )));
        }
        // the exact flow never changes the sign of a_n
        if a[i] < 0.0 {
            return Err(TodaError::StepSize { index: n, t });
        }
    }
    Ok(())
}

fn step_count(span: f64, dt: f64) -> usize {
    ((span / dt) - 1e-9).ceil().max(1.0) as usize
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(TodaError::Usage(format!("dt must be positive, got {dt}")));
    }
    Ok(())
}

/// Integrates for a duration `span` starting from `state.t`, recording every
/// step. The final step is shortened to land exactly on `state.t + span`.
pub fn integrate_rk4(state: &LatticeState, span: f64, dt: f64) -> Result<Trajectory> {
    check_dt(dt)?;
    if !(span > 0.0) {
        return Err(TodaError::Usage(format!("integration span must be positive, got {span}")));
    }
    let window = state.window();
    let (t0, _, mut a, mut b) = state.clone().into_parts();
    let mut ws = Rk4Workspace::new(window.len());
    let steps = step_count(span, dt);
    let mut states = Vec::with_capacity(steps + 1);
    states.push(state.clone());
    for k in 0..steps {
        let t_prev = t0 + k as f64 * dt;
        let t_next = if k + 1 == steps { t0 + span } else { t_prev + dt };
        ws.step(&mut a, &mut b, t_next - t_prev);
        check_step(window, &a, &b, t_next)?;
        states.push(LatticeState::new(t_next, window, a.clone(), b.clone())?);
    }
    Ok(Trajectory {
        states,
        dt,
        scheme: Scheme::Rk4,
    })
}

/// Snapshots at the requested absolute times (sorted, not before `state.t`)
/// without keeping intermediate states. Each snapshot lands on its time
/// exactly.
pub fn integrate_rk4_at(state: &LatticeState, times: &[f64], dt: f64) -> Result<Vec<LatticeState>> {
    check_dt(dt)?;
    let window = state.window();
    let (mut t, _, mut a, mut b) = state.clone().into_parts();
    let mut ws = Rk4Workspace::new(window.len());
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        if !(target >= t) {
            return Err(TodaError::Usage(format!(
                "snapshot times must be sorted and not before t = {t}; got {target}"
            )));
        }
        if target > t {
            let t_start = t;
            let steps = step_count(target - t_start, dt);
            for k in 0..steps {
                let t_next = if k + 1 == steps { target } else { t_start + (k + 1) as f64 * dt };
                ws.step(&mut a, &mut b, t_next - t);
                t = t_next;
                check_step(window, &a, &b, t)?;
            }
        }
        out.push(LatticeState::new(target, window, a.clone(), b.clone())?);
    }
    Ok(out)
}

/// Result of [`integrate_picard`].
#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub trajectory: Trajectory,
    /// `sup_t ‖x^{(j+1)}(t) − x^{(j)}(t)‖_B` for each completed iteration.
    pub distances: Vec<f64>,
}

impl PicardOutcome {
    pub fn last_distance(&self) -> f64 {
        self.distances.last().copied().unwrap_or(0.0)
    }
}

/// Picard iteration of `x(t) = x(0) + ∫₀ᵗ F(x(τ)) dτ` in the shifted
/// variables, with the integral discretized by the trapezoidal rule on a grid
/// of step `quad_dt`.
///
/// Iteration stops after `n_iter` sweeps or once successive iterates agree to
/// rounding. Three consecutive increases of the iterate distance are treated
/// as divergence.
pub fn integrate_picard(state: &LatticeState, span: f64, n_iter: usize, quad_dt: f64) -> Result<PicardOutcome> {
    check_dt(quad_dt)?;
    if n_iter == 0 {
        return Err(TodaError::Usage("Picard iteration needs n_iter >= 1".into()));
    }
    if !(span > 0.0) {
        return Err(TodaError::Usage(format!("integration span must be positive, got {span}")));
    }
    let window = state.window();
    let len = window.len();
    let steps = step_count(span, quad_dt);
    let times: Vec<f64> = (0..=steps)
        .map(|k| if k == steps { span } else { k as f64 * quad_dt })
        .collect();
    let (x1_0, x2_0) = to_substituted(state);
    let mut iterate: Vec<Pair> = vec![(x1_0.clone(), x2_0.clone()); steps + 1];
    let mut rhs: Vec<Pair> = vec![(vec![0.0; len], vec![0.0; len]); steps + 1];
    let mut distances = Vec::new();
    let mut growth_streak = 0;
    let scale = 1.0 + b_norm(window, &x1_0, &x2_0)?.value();
    let mut diff = (vec![0.0; len], vec![0.0; len]);

    for sweep in 0..n_iter {
        for (x, f) in iterate.iter().zip(rhs.iter_mut()) {
            substituted_rhs_into(window, &x.0, &x.1, &mut f.0, &mut f.1);
        }
        let mut next = Vec::with_capacity(steps + 1);
        next.push((x1_0.clone(), x2_0.clone()));
        for k in 1..=steps {
            let h = times[k] - times[k - 1];
            let prev: &Pair = &next[k - 1];
            let mut x1 = prev.0.clone();
            let mut x2 = prev.1.clone();
            for i in 0..len {
                x1[i] += 0.5 * h * (rhs[k - 1].0[i] + rhs[k].0[i]);
                x2[i] += 0.5 * h * (rhs[k - 1].1[i] + rhs[k].1[i]);
            }
            next.push((x1, x2));
        }
        let mut distance = 0.0_f64;
        for (new, old) in next.iter().zip(&iterate) {
            for i in 0..len {
                diff.0[i] = new.0[i] - old.0[i];
                diff.1[i] = new.1[i] - old.1[i];
            }
            distance = distance.max(b_norm(window, &diff.0, &diff.1)?.value());
        }
        if !distance.is_finite() {
            return Err(TodaError::ContractionFailure { distances });
        }
        log::debug!("picard sweep {sweep}: distance {distance:e}");
        if let Some(&last) = distances.last() {
            growth_streak = if distance > last { growth_streak + 1 } else { 0 };
        }
        distances.push(distance);
        iterate = next;
        if growth_streak >= 3 {
            return Err(TodaError::ContractionFailure { distances });
        }
        if distance <= 1e-14 * scale {
            break;
        }
    }

    let states = iterate
        .iter()
        .zip(&times)
        .map(|((x1, x2), &t)| from_substituted(state.t + t, window, x1, x2))
        .collect::<Result<Vec<_>>>()?;
    Ok(PicardOutcome {
        trajectory: Trajectory {
            states,
            dt: quad_dt,
            scheme: Scheme::Picard {
                iterations: distances.len(),
            },
        },
        distances,
    })
}

/// `H = Σ b_n²/2 + Σ_{n<0}(a_n² − 1) + Σ_{n≥0} a_n²` over the window.
pub fn regularized_energy(state: &LatticeState) -> f64 {
    state
        .window()
        .sites()
        .map(|n| {
            let (a, b) = (state.a(n), state.b(n));
            0.5 * b * b + a * a - if n < 0 { 1.0 } else { 0.0 }
        })
        .sum()
}

/// Eigenvalues of the window's Jacobi matrix lying outside `[−2 − δ, 2 + δ]`.
pub fn discrete_eigenvalues(state: &LatticeState, margin: f64) -> Vec<f64> {
    let off = &state.a_values()[..state.window().len() - 1];
    let (values, _) = tridiagonal_eigen(state.b_values(), off);
    values.into_iter().filter(|v| v.abs() > 2.0 + margin).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ConservationReport {
    /// `Σb_n(T) − Σb_n(0) + (T − t₀)`.
    pub sum_b_drift: f64,
    pub h_reg_drift: f64,
    /// Largest eigenvalue displacement outside the band; infinite if the
    /// number of such eigenvalues changed.
    pub spectrum_drift: f64,
    /// Smallest value of `2‖x(t₀)‖_B e^{(4C+4)(t−t₀)} − ‖x(t)‖_B` along the
    /// trajectory, `C` the observed sup of `|x1_n| + |x2_n|`.
    pub gronwall_margin: f64,
    pub tracked_eigenvalues: usize,
}

pub fn conservation_report(traj: &Trajectory) -> Result<ConservationReport> {
    if traj.states.len() < 2 {
        return Err(TodaError::Usage(
            "conservation report needs a trajectory with at least two states".into(),
        ));
    }
    let first = traj.first();
    let last = traj.last();
    let span = last.t - first.t;
    let sum_b = |s: &LatticeState| s.b_values().iter().sum::<f64>();
    let sum_b_drift = sum_b(last) - sum_b(first) + span;
    let h_reg_drift = regularized_energy(last) - regularized_energy(first);

    let before = discrete_eigenvalues(first, DEFAULT_EDGE_MARGIN);
    let after = discrete_eigenvalues(last, DEFAULT_EDGE_MARGIN);
    let spectrum_drift = if before.len() == after.len() {
        before
            .iter()
            .zip(&after)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    } else {
        // eigenvalues crossed the edge margin; report the worst nearest match
        before
            .iter()
            .map(|x| after.iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
            .min(f64::MAX)
    };

    let window = first.window();
    let norms_and_sup = traj
        .states
        .iter()
        .map(|s| {
            let (x1, x2) = to_substituted(s);
            let sup = x1.iter().zip(&x2).map(|(p, q)| p.abs() + q.abs()).fold(0.0, f64::max);
            Ok((b_norm(window, &x1, &x2)?.value(), sup))
        })
        .collect::<Result<Vec<_>>>()?;
    let c = norms_and_sup.iter().map(|p| p.1).fold(0.0, f64::max);
    let x0 = norms_and_sup[0].0;
    let gronwall_margin = traj
        .states
        .iter()
        .zip(&norms_and_sup)
        .map(|(s, &(norm, _))| {
            let bound = 2.0 * x0 * ((4.0 * c + 4.0) * (s.t - first.t)).exp();
            (bound - norm).min(f64::MAX)
        })
        .fold(f64::INFINITY, f64::min);

    Ok(ConservationReport {
        sum_b_drift,
        h_reg_drift,
        spectrum_drift,
        gronwall_margin,
        tracked_eigenvalues: before.len(),
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::lattice::{make_step_profile, SteplikeProfileSpec};
    use proptest::prelude::*;

    /// `a ≡ 1`, `b ≡ 0` on the whole window: stationary under the ghost
    /// closure even though it is not steplike at the right edge.
    pub(crate) fn uniform_background(window: Window) -> LatticeState {
        LatticeState::new(0.0, window, vec![1.0; window.len()], vec![0.0; window.len()]).unwrap()
    }

    fn pure_step(window: Window) -> LatticeState {
        let a = window.sites().map(|n| if n < 0 { 1.0 } else { 0.0 }).collect();
        LatticeState::new(0.0, window, a, vec![0.0; window.len()]).unwrap()
    }

    fn small_profile() -> LatticeState {
        make_step_profile(&SteplikeProfileSpec {
            left_amplitude: 0.05,
            right_amplitude: 0.3,
            bump_amplitude: 0.1,
            ..SteplikeProfileSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn rhs_vanishes_on_free_left_half() {
        let w = Window::new(-10, 10).unwrap();
        let (da, db) = toda_rhs(&pure_step(w));
        for n in -10..0 {
            assert_eq!(da[w.index(n)], 0.0);
            assert_eq!(db[w.index(n)], 0.0);
        }
    }

    #[test]
    fn pure_step_edge_has_unit_loss() {
        let w = Window::new(-10, 10).unwrap();
        let (da, db) = toda_rhs(&pure_step(w));
        for n in w.sites() {
            let expected = if n == 0 { -1.0 } else { 0.0 };
            assert_eq!(db[w.index(n)], expected, "n = {n}");
            assert_eq!(da[w.index(n)], 0.0);
        }
    }

    #[test]
    fn shifted_rhs_of_zero_is_the_edge_loss() {
        let w = Window::new(-6, 6).unwrap();
        let zero = vec![0.0; w.len()];
        let (d1, d2) = substituted_rhs(w, &zero, &zero).unwrap();
        assert!(d1.iter().all(|&v| v == 0.0));
        for n in w.sites() {
            assert_eq!(d2[w.index(n)], if n == 0 { -1.0 } else { 0.0 });
        }
    }

    #[test]
    fn shifted_rhs_single_impulse() {
        let w = Window::new(-6, 6).unwrap();
        let x1 = vec![0.0; w.len()];
        let mut x2 = vec![0.0; w.len()];
        x2[w.index(0)] = 0.8;
        let (d1, _) = substituted_rhs(w, &x1, &x2).unwrap();
        assert_eq!(d1[w.index(0)], 0.0);
        assert_eq!(d1[w.index(-1)], 0.4);
    }

    /// The system as printed differs from ours only in the last bracket.
    fn printed_rhs(w: Window, x1: &[f64], x2: &[f64]) -> Vec<f64> {
        w.sites()
            .enumerate()
            .map(|(i, n)| {
                let s = if n < 0 { 1.0 } else { 0.0 };
                let x1_prev = if i > 0 { x1[i - 1] } else { 0.0 };
                let x2_prev = if i > 0 { x2[i - 1] } else { 0.0 };
                x1[i] * x1[i] - x1_prev * x1_prev + 2.0 * s * (x1[i] - x2_prev)
            })
            .collect()
    }

    fn random_state(w: Window, seed: &[f64]) -> LatticeState {
        let a = w
            .sites()
            .enumerate()
            .map(|(i, n)| (if n < 0 { 1.0 } else { 0.5 }) + 0.2 * seed[i % seed.len()])
            .collect();
        let b = (0..w.len()).map(|i| 0.3 * seed[(3 * i + 1) % seed.len()]).collect();
        LatticeState::new(0.0, w, a, b).unwrap()
    }

    proptest! {
        #[test]
        fn shifted_rhs_matches_lattice_rhs(seed in prop::collection::vec(-1.0..1.0f64, 7..23)) {
            let w = Window::new(-8, 8).unwrap();
            let s = random_state(w, &seed);
            let (da, db) = toda_rhs(&s);
            let (x1, x2) = to_substituted(&s);
            let (d1, d2) = substituted_rhs(w, &x1, &x2).unwrap();
            for i in 0..w.len() {
                prop_assert!((da[i] - d1[i]).abs() < 1e-14);
                prop_assert!((db[i] - d2[i]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn printed_form_fails_the_consistency_check() {
        let w = Window::new(-8, 8).unwrap();
        let s = random_state(w, &[0.3, -0.7, 0.1, 0.9, -0.2]);
        let (_, db) = toda_rhs(&s);
        let (x1, x2) = to_substituted(&s);
        let printed = printed_rhs(w, &x1, &x2);
        let worst = db.iter().zip(&printed).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(worst > 1e-2);
    }

    #[test]
    fn background_is_stationary() {
        let s = uniform_background(Window::new(-10, 10).unwrap());
        let traj = integrate_rk4(&s, 0.5, 0.01).unwrap();
        assert!((traj.last().t - 0.5).abs() < 1e-15);
        for st in &traj.states {
            assert_eq!(st.a_values(), s.a_values());
            assert_eq!(st.b_values(), s.b_values());
        }
        let report = conservation_report(&traj).unwrap();
        // Σb loses one unit per time through the open right end
        assert!((report.sum_b_drift - 0.5).abs() < 1e-15);
        assert_eq!(report.spectrum_drift, 0.0);
        assert!(report.gronwall_margin >= 0.0);
    }

    #[test]
    fn last_step_lands_on_target() {
        let s = small_profile();
        let traj = integrate_rk4(&s, 0.1025, 0.01).unwrap();
        assert_eq!(traj.states.len(), 12);
        assert_eq!(traj.last().t, 0.1025);
        let snaps = integrate_rk4_at(&s, &[0.0, 0.05, 0.1025], 0.01).unwrap();
        assert_eq!(snaps[0], s);
        assert!(snaps[2].sup_distance(traj.last(), -60..=40) < 1e-15);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let s = small_profile();
        let end = |dt: f64| integrate_rk4_at(&s, &[0.4], dt).unwrap().pop().unwrap();
        let reference = end(0.05 / 8.0);
        let e1 = end(0.05).sup_distance(&reference, -60..=40);
        let e2 = end(0.025).sup_distance(&reference, -60..=40);
        let order = (e1 / e2).log2();
        assert!(order >= 3.8, "observed order {order}");
    }

    #[test]
    fn step_size_error_on_positivity_loss() {
        let s = small_profile();
        let err = integrate_rk4(&s, 12.0, 3.0).unwrap_err();
        assert!(matches!(err, TodaError::StepSize { .. } | TodaError::Numerical(_)), "{err}");
    }

    #[test]
    fn pure_step_loses_unit_mass() {
        let s = pure_step(Window::new(-60, 40).unwrap());
        let traj = integrate_rk4(&s, 1.0, 1e-3).unwrap();
        let report = conservation_report(&traj).unwrap();
        assert!(report.sum_b_drift.abs() < 1e-12, "{report:?}");
    }

    #[test]
    fn picard_fixed_point_on_background() {
        let s = uniform_background(Window::new(-10, 10).unwrap());
        let out = integrate_picard(&s, 0.25, 5, 0.01).unwrap();
        for st in &out.trajectory.states {
            assert_eq!(st.a_values(), s.a_values());
            assert_eq!(st.b_values(), s.b_values());
        }
        assert_eq!(out.last_distance(), 0.0);
    }

    #[test]
    fn picard_contracts_geometrically_and_matches_rk4() {
        let s = small_profile();
        let out = integrate_picard(&s, 0.25, 40, 1e-3).unwrap();
        let d = &out.distances;
        assert!(d.len() >= 5);
        for w in d[2..d.len().min(8)].windows(2) {
            assert!(w[1] < 0.5 * w[0], "{d:?}");
        }
        let rk = integrate_rk4_at(&s, &[0.25], 1e-3).unwrap().pop().unwrap();
        let err = out.trajectory.last().sup_distance(&rk, -60..=40);
        assert!(err < 1e-6, "picard vs rk4: {err:e}");
    }

    #[test]
    fn picard_reports_divergence() {
        let w = Window::new(-10, 10).unwrap();
        let a = w.sites().map(|n| if n < 0 { 1.0 } else { 3.0 }).collect();
        let b = w.sites().map(|n| 4.0 * (n as f64).sin()).collect();
        let s = LatticeState::new(0.0, w, a, b).unwrap();
        let err = integrate_picard(&s, 5.0, 60, 0.01).unwrap_err();
        assert!(matches!(err, TodaError::ContractionFailure { .. }), "{err}");
    }
}

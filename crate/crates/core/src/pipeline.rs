//! Run orchestration: config ingestion, the run modes, comparison reports and
//! file emission.
//!
//! Output layout under `output_dir`:
//!
//! ```text
//! manifest.json                 config echo, versions, stage timings
//! conservation.txt              simulate / compare: drifts of the RK4 run
//! compare.json                  compare: one entry per requested time
//! roundtrip.json, errors.csv    roundtrip: error summary and per-site table
//! t_<t>/state.csv               reconstructed (or simulated) lattice
//! t_<t>/oracle_state.csv        compare: RK4 lattice
//! t_<t>/reflection.csv          theta,lambda,re_R,im_R
//! t_<t>/bound_states.csv        mu,z,M_inv_sq
//! t_<t>/measure.csv             lambda,w
//! ```
//!
//! Numeric files depend only on the config; timings live in the manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::direct::{conservation_report, integrate_rk4, ConservationReport, Trajectory};
use crate::error::{Result, Stage, StageExt, TodaError};
use crate::flow::evolve;
use crate::forward::{full_forward, l0_spectrum, BoundStateParams, ForwardParams, ScatteringData, SpectralMeasure};
use crate::inverse::{full_inverse, InverseParams, PoleScanParams};
use crate::lattice::{make_step_profile, state_to_csv, LatticeState, SteplikeProfileSpec, Window, DEFAULT_TRUNC_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Scatter,
    Evolve,
    Reconstruct,
    #[default]
    Roundtrip,
    Compare,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::Simulate,
        Mode::Scatter,
        Mode::Evolve,
        Mode::Reconstruct,
        Mode::Roundtrip,
        Mode::Compare,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Scatter => "scatter",
            Mode::Evolve => "evolve",
            Mode::Reconstruct => "reconstruct",
            Mode::Roundtrip => "roundtrip",
            Mode::Compare => "compare",
        }
    }
}

impl FromStr for Mode {
    type Err = TodaError;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| TodaError::Config(format!("unknown mode {s:?}")))
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub n_min: i64,
    pub n_max: i64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { n_min: -60, n_max: 40 }
    }
}

/// Shape of the steplike initial profile; see [`SteplikeProfileSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub left_amplitude: f64,
    pub left_decay: f64,
    pub right_amplitude: f64,
    pub right_decay: f64,
    pub bump_amplitude: f64,
    pub bump_decay: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        let d = SteplikeProfileSpec::default();
        Self {
            left_amplitude: d.left_amplitude,
            left_decay: d.left_decay,
            right_amplitude: d.right_amplitude,
            right_decay: d.right_decay,
            bump_amplitude: d.bump_amplitude,
            bump_decay: d.bump_decay,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Boundary closeness demanded of the initial profile.
    pub trunc: f64,
    /// Pole proximity; grid nodes within ten times this of an `L₀`
    /// eigenvalue are left out of the reflection-evolution error.
    pub pole: f64,
    /// Smallest atom weight kept by the pole scan.
    pub weight: f64,
    /// Edge mass allowed for a bound-state eigenvector.
    pub localization: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            trunc: DEFAULT_TRUNC_TOL,
            pole: 1e-3,
            weight: PoleScanParams::default().weight_floor,
            localization: BoundStateParams::default().localization,
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_times() -> Vec<f64> {
    vec![0.5, 1.0]
}

fn default_dt() -> f64 {
    1e-3
}

fn default_grid_size() -> usize {
    crate::forward::DEFAULT_GRID_SIZE
}

fn default_n_right() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    /// Marchenko truncation; `2|n_min| + 40` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_trunc: Option<usize>,
    /// Right-half depth, both reconstructed and compared.
    #[serde(default = "default_n_right")]
    pub n_right: usize,
    #[serde(default)]
    pub window: WindowConfig,
    #[serde(default)]
    pub profile: ProfileConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("every field has a default")
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| TodaError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| TodaError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(TodaError::Config(msg));
        Window::new(self.window.n_min, self.window.n_max)?;
        let t = &self.tolerances;
        for (name, v) in [("trunc", t.trunc), ("pole", t.pole), ("weight", t.weight), ("localization", t.localization)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("tolerance {name} must be positive, got {v}"));
            }
        }
        if self.times.is_empty() {
            return bad("times must not be empty".into());
        }
        if self.times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return bad(format!("times must be finite and nonnegative: {:?}", self.times));
        }
        if self.times.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("times must be strictly increasing: {:?}", self.times));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.grid_size < 4 {
            return bad(format!("grid_size must be at least 4, got {}", self.grid_size));
        }
        if self.n_right == 0 {
            return bad("n_right must be at least 1".into());
        }
        if self.k_trunc == Some(0) {
            return bad("k_trunc must be at least 1".into());
        }
        Ok(())
    }

    pub fn window(&self) -> Window {
        Window::new(self.window.n_min, self.window.n_max).expect("validated window")
    }

    pub fn profile_spec(&self) -> SteplikeProfileSpec {
        let p = &self.profile;
        SteplikeProfileSpec {
            left_amplitude: p.left_amplitude,
            left_decay: p.left_decay,
            right_amplitude: p.right_amplitude,
            right_decay: p.right_decay,
            bump_amplitude: p.bump_amplitude,
            bump_decay: p.bump_decay,
            n_min: self.window.n_min,
            n_max: self.window.n_max,
            boundary_tol: self.tolerances.trunc,
        }
    }

    pub fn forward_params(&self) -> ForwardParams {
        ForwardParams {
            grid_size: self.grid_size,
            bound: BoundStateParams {
                localization: self.tolerances.localization,
                ..BoundStateParams::default()
            },
        }
    }

    pub fn inverse_params(&self) -> InverseParams {
        InverseParams {
            k_trunc: self.k_trunc,
            n_right: self.n_right,
            scan: PoleScanParams {
                weight_floor: self.tolerances.weight,
                ..PoleScanParams::default()
            },
            ..InverseParams::default()
        }
    }

    /// Snapshot times the mode works on.
    fn mode_times(&self) -> Vec<f64> {
        match self.mode {
            Mode::Scatter | Mode::Roundtrip => vec![0.0],
            _ => self.times.clone(),
        }
    }
}

/// Reconstruction error against a reference lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SiteErrors {
    /// `max (|Δa_n| + |Δb_n|)` over `n ∈ [max(n_min, −30), −1]`.
    pub left: f64,
    /// Same over `n ∈ [0, n_right − 1]`.
    pub right: f64,
}

fn site_errors(rec: &LatticeState, reference: &LatticeState, n_right: usize) -> SiteErrors {
    let w = reference.window();
    let right_end = (n_right as i64 - 1).min(w.n_max);
    SiteErrors {
        left: rec.sup_distance(reference, w.n_min.max(-30)..=-1),
        right: rec.sup_distance(reference, 0..=right_end),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareEntry {
    pub t: f64,
    pub left_error: f64,
    pub right_error: f64,
    /// Conservation along the RK4 run from 0 to `t`.
    pub conservation: Option<ConservationReport>,
    /// Largest `|R_evolved − R_recomputed|` over grid nodes away from `L₀`
    /// eigenvalues.
    pub reflection_error: f64,
    pub excluded_nodes: usize,
    /// Largest relative difference of the evolved and recomputed bound-state
    /// weights.
    pub weight_error: f64,
    pub captured_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub entries: Vec<CompareEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundTripReport {
    pub left_error: f64,
    pub right_error: f64,
    pub n_right: usize,
    pub captured_mass: f64,
    pub marchenko_residual: f64,
    pub marchenko_condition: f64,
}

/// Everything produced at one time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub scattering: Option<ScatteringData>,
    pub state: Option<LatticeState>,
    pub oracle: Option<LatticeState>,
    pub measure: Option<SpectralMeasure>,
}

impl Snapshot {
    fn at(t: f64) -> Self {
        Self {
            t,
            scattering: None,
            state: None,
            oracle: None,
            measure: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Artifacts {
    pub mode: Mode,
    pub initial: LatticeState,
    pub snapshots: Vec<Snapshot>,
    pub conservation: Option<ConservationReport>,
    pub compare: Option<CompareReport>,
    pub roundtrip: Option<RoundTripReport>,
    /// Wall-clock seconds per stage, in execution order.
    pub timings: Vec<(Stage, f64)>,
}

struct Timer(Vec<(Stage, f64)>);

impl Timer {
    fn time<T>(&mut self, stage: Stage, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().stage(stage);
        let elapsed = start.elapsed().as_secs_f64();
        match self.0.iter_mut().find(|(s, _)| *s == stage) {
            Some(entry) => entry.1 += elapsed,
            None => self.0.push((stage, elapsed)),
        }
        out
    }
}

/// RK4 from the initial state through all `times`, with the index of each
/// snapshot in the returned trajectory.
fn simulate(initial: &LatticeState, times: &[f64], dt: f64) -> Result<(Trajectory, Vec<usize>)> {
    let mut states = vec![initial.clone()];
    let mut marks = Vec::with_capacity(times.len());
    for &t in times {
        let current = states.last().expect("non-empty");
        if t > current.t {
            let seg = integrate_rk4(current, t - current.t, dt)?;
            states.extend(seg.states.into_iter().skip(1));
        }
        marks.push(states.len() - 1);
    }
    Ok((
        Trajectory {
            states,
            dt,
            scheme: crate::direct::Scheme::Rk4,
        },
        marks,
    ))
}

fn prefix_conservation(traj: &Trajectory, end: usize) -> Result<Option<ConservationReport>> {
    if end == 0 {
        return Ok(None);
    }
    let prefix = Trajectory {
        states: traj.states[..=end].to_vec(),
        dt: traj.dt,
        scheme: traj.scheme,
    };
    conservation_report(&prefix).map(Some)
}

/// Evolution error of the scattering data: `evolved` from the closed-form
/// flow, `recomputed` by forward scattering of the lattice `oracle`.
fn evolution_errors(
    evolved: &ScatteringData,
    recomputed: &ScatteringData,
    oracle: &LatticeState,
    exclusion: f64,
) -> Result<(f64, usize, f64)> {
    let poles = l0_spectrum(oracle).locations();
    let mut excluded = 0;
    let mut r_err = 0.0_f64;
    for j in 0..evolved.grid.len() {
        let lambda = evolved.grid.lambda(j);
        if poles.iter().any(|p| (p - lambda).abs() < exclusion) {
            excluded += 1;
            continue;
        }
        r_err = r_err.max((evolved.reflection[j] - recomputed.reflection[j]).norm());
    }
    if evolved.bound_states.len() != recomputed.bound_states.len() {
        return Err(TodaError::Numerical(format!(
            "bound-state count changed from {} to {} along the flow",
            evolved.bound_states.len(),
            recomputed.bound_states.len()
        )));
    }
    let mut w_err = 0.0_f64;
    for (e, r) in evolved.bound_states.iter().zip(&recomputed.bound_states) {
        w_err = w_err.max((e.weight - r.weight).abs() / r.weight.abs());
    }
    Ok((r_err, excluded, w_err))
}

/// Runs `config.mode` without touching the filesystem.
pub fn execute(config: &RunConfig) -> Result<Artifacts> {
    config.validate().stage(Stage::Config)?;
    let mut timer = Timer(Vec::new());
    let initial = timer.time(Stage::Profile, || make_step_profile(&config.profile_spec()))?;
    let times = config.mode_times();
    let mut snapshots: Vec<Snapshot> = times.iter().map(|&t| Snapshot::at(t)).collect();
    let mut artifacts = Artifacts {
        mode: config.mode,
        initial: initial.clone(),
        snapshots: Vec::new(),
        conservation: None,
        compare: None,
        roundtrip: None,
        timings: Vec::new(),
    };

    let oracle = if matches!(config.mode, Mode::Simulate | Mode::Compare) {
        log::info!("integrating to t = {} with dt = {}", times[times.len() - 1], config.dt);
        let (traj, marks) = timer.time(Stage::Simulate, || simulate(&initial, &times, config.dt))?;
        for (snap, &k) in snapshots.iter_mut().zip(&marks) {
            snap.oracle = Some(traj.states[k].clone());
        }
        artifacts.conservation = timer.time(Stage::Simulate, || prefix_conservation(&traj, traj.states.len() - 1))?;
        Some((traj, marks))
    } else {
        None
    };

    if config.mode != Mode::Simulate {
        log::info!("forward scattering on {} nodes", config.grid_size);
        let data0 = timer.time(Stage::Forward, || full_forward(&initial, &config.forward_params()))?;
        log::info!(
            "{} bound state(s), unimodularity defect {:e}",
            data0.bound_states.len(),
            data0.unimodularity_defect()
        );
        for snap in &mut snapshots {
            snap.scattering = Some(if config.mode == Mode::Scatter || snap.t == 0.0 {
                data0.clone()
            } else {
                timer.time(Stage::Evolve, || Ok(evolve(&data0, snap.t)))?
            });
        }
    }

    if matches!(config.mode, Mode::Reconstruct | Mode::Roundtrip | Mode::Compare) {
        let window = initial.window();
        let params = config.inverse_params();
        let mut entries = Vec::new();
        for (i, snap) in snapshots.iter_mut().enumerate() {
            log::info!("reconstructing at t = {}", snap.t);
            let data = snap.scattering.as_ref().expect("scattering computed");
            let rec = timer
                .time(Stage::Reconstruct, || full_inverse(data, window, &params))
                .map_err(|e| e.indexed("time", i))?;
            if config.mode == Mode::Roundtrip {
                let err = site_errors(&rec.state, &initial, config.n_right);
                log::info!("round trip: left error {:e}, right error {:e}", err.left, err.right);
                artifacts.roundtrip = Some(RoundTripReport {
                    left_error: err.left,
                    right_error: err.right,
                    n_right: config.n_right,
                    captured_mass: rec.captured_mass,
                    marchenko_residual: rec.solution.max_residual(),
                    marchenko_condition: rec.solution.max_condition(),
                });
            }
            if let (Mode::Compare, Some((traj, marks))) = (config.mode, &oracle) {
                let reference = snap.oracle.as_ref().expect("oracle computed");
                let err = site_errors(&rec.state, reference, config.n_right);
                let recomputed = timer.time(Stage::Forward, || full_forward(reference, &config.forward_params()))?;
                let (reflection_error, excluded_nodes, weight_error) = timer.time(Stage::Compare, || {
                    evolution_errors(data, &recomputed, reference, 10.0 * config.tolerances.pole)
                })?;
                let conservation = timer.time(Stage::Compare, || prefix_conservation(traj, marks[i]))?;
                log::info!(
                    "t = {}: left error {:e}, right error {:e}, R error {:e}, weight error {:e}",
                    snap.t,
                    err.left,
                    err.right,
                    reflection_error,
                    weight_error
                );
                entries.push(CompareEntry {
                    t: snap.t,
                    left_error: err.left,
                    right_error: err.right,
                    conservation,
                    reflection_error,
                    excluded_nodes,
                    weight_error,
                    captured_mass: rec.captured_mass,
                });
            }
            snap.measure = Some(rec.measure);
            snap.state = Some(rec.state);
        }
        if config.mode == Mode::Compare {
            artifacts.compare = Some(CompareReport { entries });
        }
    } else if config.mode == Mode::Simulate {
        for snap in &mut snapshots {
            snap.state = snap.oracle.take();
        }
    }

    artifacts.snapshots = snapshots;
    artifacts.timings = timer.0;
    Ok(artifacts)
}

fn reflection_csv(data: &ScatteringData) -> String {
    let mut out = String::from("theta,lambda,re_R,im_R\n");
    for (j, r) in data.reflection.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:.17e},{:.17e},{:.17e},{:.17e}",
            data.grid.theta(j),
            data.grid.lambda(j),
            r.re,
            r.im
        );
    }
    out
}

fn bound_states_csv(data: &ScatteringData) -> String {
    let mut out = String::from("mu,z,M_inv_sq\n");
    for bs in &data.bound_states {
        let _ = writeln!(out, "{:.17e},{:.17e},{:.17e}", bs.mu, bs.z, bs.weight);
    }
    out
}

fn measure_csv(measure: &SpectralMeasure) -> String {
    let mut out = String::from("lambda,w\n");
    for (l, w) in measure.atoms() {
        let _ = writeln!(out, "{l:.17e},{w:.17e}");
    }
    out
}

fn errors_csv(rec: &LatticeState, reference: &LatticeState) -> String {
    let mut out = String::from("n,a,b,a_rec,b_rec,error\n");
    for n in reference.window().sites() {
        let (a, b, ar, br) = (reference.a(n), reference.b(n), rec.a(n), rec.b(n));
        let _ = writeln!(
            out,
            "{n},{a:.17e},{b:.17e},{ar:.17e},{br:.17e},{:.17e}",
            (a - ar).abs() + (b - br).abs()
        );
    }
    out
}

fn conservation_txt(report: &ConservationReport) -> String {
    format!(
        "sum_b_drift = {:.17e}\nh_reg_drift = {:.17e}\nspectrum_drift = {:.17e}\ngronwall_margin = {:.17e}\ntracked_eigenvalues = {}\n",
        report.sum_b_drift, report.h_reg_drift, report.spectrum_drift, report.gronwall_margin, report.tracked_eigenvalues
    )
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Directory name for a snapshot time.
pub fn snapshot_dir(t: f64) -> String {
    format!("t_{t:.6}")
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| TodaError::io(path, e))
}

/// Writes the artifacts under `dir`; see the module docs for the layout.
pub fn emit_plot_data(artifacts: &Artifacts, config: &RunConfig, dir: &Path) -> Result<()> {
    let io = || -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| TodaError::io(dir, e))?;
        for snap in &artifacts.snapshots {
            let sub = dir.join(snapshot_dir(snap.t));
            fs::create_dir_all(&sub).map_err(|e| TodaError::io(&sub, e))?;
            if let Some(state) = &snap.state {
                write(&sub.join("state.csv"), &state_to_csv(state))?;
            }
            if let (Mode::Compare, Some(oracle)) = (artifacts.mode, &snap.oracle) {
                write(&sub.join("oracle_state.csv"), &state_to_csv(oracle))?;
            }
            if let Some(data) = &snap.scattering {
                write(&sub.join("reflection.csv"), &reflection_csv(data))?;
                write(&sub.join("bound_states.csv"), &bound_states_csv(data))?;
            }
            if let Some(measure) = &snap.measure {
                write(&sub.join("measure.csv"), &measure_csv(measure))?;
            }
        }
        if let Some(report) = &artifacts.conservation {
            write(&dir.join("conservation.txt"), &conservation_txt(report))?;
        }
        if let Some(report) = &artifacts.compare {
            write(&dir.join("compare.json"), &json(report))?;
        }
        if let Some(report) = &artifacts.roundtrip {
            write(&dir.join("roundtrip.json"), &json(report))?;
            let rec = artifacts.snapshots[0].state.as_ref().expect("round trip reconstructs");
            write(&dir.join("errors.csv"), &errors_csv(rec, &artifacts.initial))?;
        }
        let manifest = serde_json::json!({
            "mode": artifacts.mode,
            "config": config,
            "versions": { "toda-ist": env!("CARGO_PKG_VERSION") },
            "snapshots": artifacts.snapshots.iter().map(|s| snapshot_dir(s.t)).collect::<Vec<_>>(),
            "timings": artifacts
                .timings
                .iter()
                .map(|(stage, secs)| serde_json::json!({ "stage": stage.as_str(), "seconds": secs }))
                .collect::<Vec<_>>(),
        });
        write(&dir.join("manifest.json"), &json(&manifest))
    };
    io().stage(Stage::Output)
}

/// Executes the configured mode and writes its files to `config.output_dir`.
pub fn run(config: &RunConfig) -> Result<Artifacts> {
    let artifacts = execute(config)?;
    emit_plot_data(&artifacts, config, &config.output_dir)?;
    Ok(artifacts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(mode: Mode) -> RunConfig {
        RunConfig {
            mode,
            times: vec![0.1, 0.2],
            dt: 1e-2,
            grid_size: 256,
            window: WindowConfig { n_min: -30, n_max: 20 },
            ..RunConfig::default()
        }
    }

    #[test]
    fn defaults_parse_from_empty_file() {
        let c = RunConfig::from_toml_str("").unwrap();
        assert_eq!(c.mode, Mode::Roundtrip);
        assert_eq!(c.window(), Window::new(-60, 40).unwrap());
        assert_eq!(c.grid_size, 1024);
        assert_eq!(c.k_trunc, None);
    }

    #[test]
    fn nested_sections_parse() {
        let c = RunConfig::from_toml_str(
            r#"
            mode = "compare"
            times = [0.25]
            k_trunc = 100
            [window]
            n_min = -20
            n_max = 15
            [profile]
            bump_amplitude = 0.0
            right_decay = inf
            [tolerances]
            pole = 1e-4
            "#,
        )
        .unwrap();
        assert_eq!(c.mode, Mode::Compare);
        assert_eq!(c.k_trunc, Some(100));
        assert_eq!(c.profile.bump_amplitude, 0.0);
        assert!(c.profile.right_decay.is_infinite());
        assert_eq!(c.tolerances.pole, 1e-4);
        assert_eq!(c.tolerances.weight, 1e-10);
    }

    #[test]
    fn schema_violations_are_config_errors() {
        for text in [
            "mode = \"nope\"",
            "times = [1.0, 0.5]",
            "times = [-1.0]",
            "dt = 0.0",
            "[tolerances]\npole = -1.0",
            "[window]\nn_min = 3\nn_max = 5",
            "unknown_key = 1",
            "grid_size = 2",
        ] {
            let err = RunConfig::from_toml_str(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}: {err}");
        }
    }

    #[test]
    fn mode_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
        }
    }

    #[test]
    fn simulate_pure_step_keeps_far_background() {
        // the pure step is not stationary (unit flux through the step), but
        // the free background far to the left does not move
        let mut c = quick(Mode::Simulate);
        c.profile = ProfileConfig {
            left_amplitude: 0.0,
            right_amplitude: 1.0,
            right_decay: f64::INFINITY,
            bump_amplitude: 0.0,
            ..ProfileConfig::default()
        };
        let art = execute(&c).unwrap();
        assert_eq!(art.snapshots.len(), 2);
        let last = art.snapshots[1].state.as_ref().unwrap();
        for n in -30..=-20 {
            assert!((last.a(n) - 1.0).abs() < 1e-15 && last.b(n).abs() < 1e-15);
        }
        let drift = art.conservation.unwrap().sum_b_drift;
        assert!(drift.abs() < 1e-12, "{drift:e}");
    }

    #[test]
    fn reconstruct_at_zero_matches_roundtrip() {
        let mut c = quick(Mode::Reconstruct);
        c.times = vec![0.0];
        let rec = execute(&c).unwrap();
        c.mode = Mode::Roundtrip;
        let rt = execute(&c).unwrap();
        assert_eq!(rec.snapshots[0].state, rt.snapshots[0].state);
        assert!(rt.roundtrip.unwrap().left_error < 1e-4);
    }

    #[test]
    fn numerical_failures_carry_a_stage() {
        let mut c = quick(Mode::Scatter);
        // boundary too close to the bump: rejected while building the profile
        c.window = WindowConfig { n_min: -2, n_max: 20 };
        let err = execute(&c).unwrap_err();
        assert_eq!(err.stage(), Some(Stage::Profile));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn emitted_files_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = quick(Mode::Evolve);
        let read_all = |root: &Path| {
            let mut files = Vec::new();
            for t in &c.times {
                for name in ["reflection.csv", "bound_states.csv"] {
                    files.push(fs::read_to_string(root.join(snapshot_dir(*t)).join(name)).unwrap());
                }
            }
            files
        };
        c.output_dir = dir.path().join("a");
        run(&c).unwrap();
        let first = read_all(&c.output_dir);
        c.output_dir = dir.path().join("b");
        run(&c).unwrap();
        assert_eq!(first, read_all(&c.output_dir));
        assert_eq!(first[0].lines().count(), c.grid_size + 1);
        assert!(c.output_dir.join("manifest.json").exists());
    }

    #[test]
    fn unwritable_output_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "").unwrap();
        let mut c = quick(Mode::Scatter);
        c.output_dir = blocker.join("sub");
        let err = run(&c).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        assert_eq!(err.stage(), Some(Stage::Output));
    }
}

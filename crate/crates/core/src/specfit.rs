//! Joint fit of reflection-phase spectra, taken with all qubits in the ground
//! and in the excited state, to the multiplexed readout model.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{DMatrix, DVector, Dyn, Owned};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::mux::{gamma_incident, JointState, MuxNetwork};
use crate::units::TWO_PI;

/// Which joint state a spectrum was taken in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumState {
    AllG,
    AllE,
}

impl SpectrumState {
    pub fn joint(self, n: usize) -> JointState {
        match self {
            SpectrumState::AllG => JointState::ground(n),
            SpectrumState::AllE => JointState(vec![crate::mux::QubitState::E; n]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpectrum {
    pub freq: Vec<f64>,
    /// Raw phase in radians; may be wrapped.
    pub phase: Vec<f64>,
    pub state: SpectrumState,
}

impl PhaseSpectrum {
    pub fn new(freq: Vec<f64>, phase: Vec<f64>, state: SpectrumState) -> Result<Self> {
        let s = Self { freq, phase, state };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.freq.len() != self.phase.len() {
            return Err(Error::validation(
                "spectrum",
                "frequency and phase lengths differ",
            ));
        }
        if self.freq.is_empty() {
            return Err(Error::validation("spectrum", "no points"));
        }
        if self.freq.iter().any(|f| !(*f > 0.0) || !f.is_finite()) {
            return Err(Error::validation(
                "spectrum.freq",
                "frequencies must be positive and finite",
            ));
        }
        if self.freq.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation(
                "spectrum.freq",
                "frequencies must be strictly increasing",
            ));
        }
        if self.phase.iter().any(|p| !p.is_finite()) {
            return Err(Error::validation("spectrum.phase", "phase must be finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.freq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq.is_empty()
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = x - TWO_PI * (x / TWO_PI).round();
    if y <= -PI {
        y + TWO_PI
    } else {
        y
    }
}

/// Model reflection phase `arg(Gamma) + theta0 - 2 pi f tau`.
pub fn model_phase(
    net: &MuxNetwork,
    state: &JointState,
    theta0: f64,
    tau: f64,
    f: f64,
) -> Result<f64> {
    Ok(gamma_incident(net, state, f)?.arg() + theta0 - TWO_PI * f * tau)
}

/// Model phase on a grid with seeded Gaussian noise, wrapped to `(-pi, pi]`.
pub fn synth_spectrum(
    net: &MuxNetwork,
    state: SpectrumState,
    theta0: f64,
    tau: f64,
    grid: &[f64],
    noise_sd: f64,
    seed: u64,
) -> Result<PhaseSpectrum> {
    require_non_negative("noise_sd", noise_sd)?;
    let joint = state.joint(net.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal =
        Normal::new(0.0, noise_sd).map_err(|e| Error::validation("noise_sd", e.to_string()))?;
    let phase = grid
        .iter()
        .map(|&f| {
            let noise = if noise_sd > 0.0 {
                normal.sample(&mut rng)
            } else {
                0.0
            };
            model_phase(net, &joint, theta0, tau, f).map(|p| wrap_phase(p + noise))
        })
        .collect::<Result<Vec<_>>>()?;
    PhaseSpectrum::new(grid.to_vec(), phase, state)
}

const PER_CHANNEL: [&str; 7] = ["f_r_g", "f_p", "j", "kappa_p", "chi", "gamma_r", "gamma_p"];

/// Internal scale of each parameter kind: GHz for frequencies, MHz for rates.
const SCALE: [f64; 7] = [1e9, 1e9, 1e6, 1e6, 1e6, 1e6, 1e6];
const THETA_SCALE: f64 = 1.0;
const TAU_SCALE: f64 = 1e-9;

/// Names of all fit parameters for a network, in vector order.
pub fn parameter_names(net: &MuxNetwork) -> Vec<String> {
    let mut names: Vec<String> = net
        .channels
        .iter()
        .flat_map(|c| PER_CHANNEL.iter().map(move |p| format!("{}.{p}", c.name)))
        .collect();
    names.push("theta0".into());
    names.push("tau".into());
    names
}

fn pack(net: &MuxNetwork, theta0: f64, tau: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(net.len() * 7 + 2);
    for c in &net.channels {
        let raw = [c.f_r_g, c.f_p, c.j, c.kappa_p, c.chi, c.gamma_r, c.gamma_p];
        v.extend(raw.iter().zip(SCALE).map(|(x, s)| x / s));
    }
    v.push(theta0 / THETA_SCALE);
    v.push(tau / TAU_SCALE);
    v
}

fn unpack(template: &MuxNetwork, v: &[f64]) -> (MuxNetwork, f64, f64) {
    let mut net = template.clone();
    for (k, c) in net.channels.iter_mut().enumerate() {
        let x = &v[7 * k..7 * k + 7];
        c.f_r_g = x[0] * SCALE[0];
        c.f_p = x[1] * SCALE[1];
        c.j = x[2] * SCALE[2];
        c.kappa_p = x[3] * SCALE[3];
        c.chi = x[4] * SCALE[4];
        c.gamma_r = x[5] * SCALE[5];
        c.gamma_p = x[6] * SCALE[6];
    }
    let n = v.len();
    (net, v[n - 2] * THETA_SCALE, v[n - 1] * TAU_SCALE)
}

fn scale_of(idx: usize, n_params: usize) -> f64 {
    if idx == n_params - 2 {
        THETA_SCALE
    } else if idx == n_params - 1 {
        TAU_SCALE
    } else {
        SCALE[idx % 7]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub initial: MuxNetwork,
    pub theta0: f64,
    pub tau: f64,
    /// Parameter names held at their initial values.
    pub fixed: BTreeSet<String>,
    pub ftol: f64,
    pub xtol: f64,
    pub gtol: f64,
    pub max_iter: usize,
    /// Seeds the simplex of the fallback restart.
    pub seed: u64,
}

impl FitConfig {
    /// Internal losses frozen at their initial values; everything else free.
    pub fn new(initial: MuxNetwork) -> Self {
        let fixed = initial
            .channels
            .iter()
            .flat_map(|c| [format!("{}.gamma_r", c.name), format!("{}.gamma_p", c.name)])
            .collect();
        Self {
            initial,
            theta0: 0.0,
            tau: 0.0,
            fixed,
            ftol: 1e-12,
            xtol: 1e-12,
            gtol: 1e-12,
            max_iter: 200,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.initial.validate()?;
        require_positive("ftol", self.ftol)?;
        require_positive("xtol", self.xtol)?;
        require_positive("gtol", self.gtol)?;
        if self.max_iter == 0 {
            return Err(Error::validation("max_iter", "must be at least 1"));
        }
        let names: BTreeSet<String> = parameter_names(&self.initial).into_iter().collect();
        if let Some(bad) = self.fixed.iter().find(|f| !names.contains(*f)) {
            return Err(Error::validation(
                "fixed",
                format!("unknown parameter {bad}"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub network: MuxNetwork,
    pub theta0: f64,
    pub tau: f64,
    /// Standard errors of the free parameters, in SI units.
    pub stderr: BTreeMap<String, f64>,
    /// Euclidean norm of the circular residuals (rad).
    pub residual: f64,
    pub converged: bool,
    /// False when only one state was measured; dispersive shifts are then
    /// held at their initial values and must not be reported.
    pub chi_identified: bool,
    pub warnings: Vec<String>,
}

impl FitResult {
    /// Fitted dispersive shifts, if both states were measured.
    pub fn chi(&self) -> Option<Vec<f64>> {
        self.chi_identified
            .then(|| self.network.channels.iter().map(|c| c.chi).collect())
    }
}

struct Problem<'a> {
    template: &'a MuxNetwork,
    spectra: Vec<(&'a PhaseSpectrum, JointState)>,
    full: Vec<f64>,
    free: Vec<usize>,
    n_points: usize,
}

impl Problem<'_> {
    fn full_from(&self, x: &[f64]) -> Vec<f64> {
        let mut v = self.full.clone();
        for (k, &i) in self.free.iter().enumerate() {
            v[i] = x[k];
        }
        v
    }

    fn residuals_at(&self, x: &[f64]) -> Option<DVector<f64>> {
        let (net, theta0, tau) = unpack(self.template, &self.full_from(x));
        let mut r = Vec::with_capacity(self.n_points);
        for (spec, state) in &self.spectra {
            for (&f, &meas) in spec.freq.iter().zip(&spec.phase) {
                let m = model_phase(&net, state, theta0, tau, f).ok()?;
                r.push(wrap_phase(meas - m));
            }
        }
        r.iter()
            .all(|x| x.is_finite())
            .then(|| DVector::from_vec(r))
    }

    fn free_params(&self) -> Vec<f64> {
        self.free.iter().map(|&i| self.full[i]).collect()
    }

    fn cost(&self, x: &[f64]) -> f64 {
        self.residuals_at(x)
            .map(|r| r.norm_squared())
            .unwrap_or(f64::INFINITY)
    }

    fn jacobian_at(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let h = 1e-6;
        let mut jac = DMatrix::zeros(self.n_points, x.len());
        let mut xp = x.to_vec();
        for k in 0..x.len() {
            xp[k] = x[k] + h;
            let rp = self.residuals_at(&xp)?;
            xp[k] = x[k] - h;
            let rm = self.residuals_at(&xp)?;
            xp[k] = x[k];
            for i in 0..self.n_points {
                jac[(i, k)] = wrap_phase(rp[i] - rm[i]) / (2.0 * h);
            }
        }
        Some(jac)
    }
}

struct LmAdapter<'a, 'b> {
    problem: &'b Problem<'a>,
    x: DVector<f64>,
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for LmAdapter<'_, '_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.x.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.x.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        self.problem.residuals_at(self.x.as_slice())
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        self.problem.jacobian_at(self.x.as_slice())
    }
}

struct NmCost<'a, 'b>(&'b Problem<'a>);

impl CostFunction for NmCost<'_, '_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.0.cost(p))
    }
}

fn run_lm(problem: &Problem, x0: &[f64], cfg: &FitConfig) -> (Vec<f64>, bool) {
    let solver = LevenbergMarquardt::new()
        .with_ftol(cfg.ftol)
        .with_xtol(cfg.xtol)
        .with_gtol(cfg.gtol)
        .with_patience(cfg.max_iter);
    let (adapter, report) = solver.minimize(LmAdapter {
        problem,
        x: DVector::from_column_slice(x0),
    });
    (
        adapter.x.as_slice().to_vec(),
        report.termination.was_successful(),
    )
}

fn run_nelder_mead(problem: &Problem, x0: &[f64], cfg: &FitConfig) -> Option<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut simplex = vec![x0.to_vec()];
    for k in 0..x0.len() {
        let mut v = x0.to_vec();
        let step = if x0[k].abs() > 10.0 {
            1e-4 * x0[k].abs()
        } else {
            0.05
        };
        v[k] += step * (0.5 + rng.random::<f64>());
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex).with_sd_tolerance(1e-14).ok()?;
    let res = Executor::new(NmCost(problem), solver)
        .configure(|s| s.max_iters(200 * x0.len() as u64))
        .run()
        .ok()?;
    res.state.best_param
}

/// Least-squares fit of one or both state spectra on circular residuals.
///
/// At most one spectrum per state is accepted. With a single state the
/// dispersive shifts are frozen and the result is flagged accordingly.
pub fn fit_reflection(spectra: &[PhaseSpectrum], cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    if spectra.is_empty() || spectra.len() > 2 {
        return Err(Error::validation("spectra", "expected one or two spectra"));
    }
    for s in spectra {
        s.validate()?;
    }
    if spectra.len() == 2 && spectra[0].state == spectra[1].state {
        return Err(Error::validation(
            "spectra",
            "both spectra carry the same state label",
        ));
    }
    let chi_identified = spectra.len() == 2;
    let net = &cfg.initial;
    let names = parameter_names(net);
    let mut fixed = cfg.fixed.clone();
    if !chi_identified {
        fixed.extend(net.channels.iter().map(|c| format!("{}.chi", c.name)));
    }
    let free: Vec<usize> = (0..names.len())
        .filter(|&i| !fixed.contains(&names[i]))
        .collect();
    let n_points: usize = spectra.iter().map(|s| s.len()).sum();
    if free.is_empty() {
        return Err(Error::validation("fixed", "no free parameters"));
    }
    if n_points <= free.len() {
        return Err(Error::RankDeficient(
            "fewer spectrum points than free parameters".into(),
        ));
    }
    let problem = Problem {
        template: net,
        spectra: spectra
            .iter()
            .map(|s| (s, s.state.joint(net.len())))
            .collect(),
        full: pack(net, cfg.theta0, cfg.tau),
        free,
        n_points,
    };

    let x0 = problem.free_params();
    let (mut best, mut converged) = run_lm(&problem, &x0, cfg);
    if !converged {
        log::warn!("least-squares fit stalled; restarting from a simplex search");
        if let Some(nm) = run_nelder_mead(&problem, &best, cfg) {
            let (x2, ok2) = run_lm(&problem, &nm, cfg);
            if problem.cost(&x2) <= problem.cost(&best) {
                best = x2;
                converged = ok2;
            }
        }
    }

    let residuals = problem.residuals_at(&best).ok_or_else(|| {
        Error::Singular("model evaluation failed at the fitted parameters".into())
    })?;
    let residual = residuals.norm();
    let full = problem.full_from(&best);
    let (mut fitted, theta0, tau) = unpack(net, &full);

    let mut stderr = BTreeMap::new();
    if let Some(jac) = problem.jacobian_at(&best) {
        let dof = (n_points - best.len()) as f64;
        let s2 = residuals.norm_squared() / dof;
        if let Some(inv) = (jac.transpose() * &jac).try_inverse() {
            for (k, &i) in problem.free.iter().enumerate() {
                let var = inv[(k, k)] * s2;
                stderr.insert(
                    names[i].clone(),
                    var.max(0.0).sqrt() * scale_of(i, names.len()),
                );
            }
        }
    }

    let mut warnings = Vec::new();
    for c in &mut fitted.channels {
        c.j = c.j.abs();
        if c.kappa_p <= 0.0 {
            warnings.push(format!(
                "{}.kappa_p reached the non-physical boundary",
                c.name
            ));
        }
        if c.gamma_r < 0.0 || c.gamma_p < 0.0 {
            warnings.push(format!(
                "{}: internal loss reached the non-physical boundary",
                c.name
            ));
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(FitResult {
        network: fitted,
        theta0,
        tau,
        stderr,
        residual,
        converged,
        chi_identified,
        warnings,
    })
}

/// Uniform frequency grid including both end points.
pub fn linear_grid(f_min: f64, f_max: f64, points: usize) -> Result<Vec<f64>> {
    require_positive("fmin", f_min)?;
    if !(f_max > f_min) {
        return Err(Error::validation("fmax", "must exceed fmin"));
    }
    if points < 2 {
        return Err(Error::validation(
            "points",
            "at least two points are needed",
        ));
    }
    let step = (f_max - f_min) / (points - 1) as f64;
    Ok((0..points).map(|k| f_min + step * k as f64).collect())
}

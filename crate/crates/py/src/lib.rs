//! Python bindings for notchlab.

use notchlab::metrics;
use notchlab::mtl::{notch_frequency, PoleGuard};
use notchlab::mux::{self, DrivePulse, JointState, MuxNetwork};
use notchlab::purcell;
use notchlab::specfit::{self, FitConfig, PhaseSpectrum, SpectrumState};
use notchlab::DeviceFile;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: notchlab::Error) -> PyErr {
    if e.is_input_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn spectrum_state(label: &str) -> PyResult<SpectrumState> {
    match label {
        "g" => Ok(SpectrumState::AllG),
        "e" => Ok(SpectrumState::AllE),
        other => Err(PyValueError::new_err(format!(
            "state must be 'g' or 'e', got {other:?}"
        ))),
    }
}

/// Device description: line constants, coupled-pair geometries, readout channels.
#[pyclass(name = "Device", module = "notchlab", from_py_object)]
#[derive(Clone)]
struct PyDevice(DeviceFile);

#[pymethods]
impl PyDevice {
    /// The bundled reference device.
    #[staticmethod]
    fn reference() -> Self {
        Self(DeviceFile::reference())
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        DeviceFile::from_json(text).map(Self).map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn geometry_names(&self) -> Vec<String> {
        self.0.geometry.iter().map(|g| g.name.clone()).collect()
    }

    /// Notch frequency (Hz) of a coupled-line pair.
    fn notch_hz(&self, pair: &str) -> PyResult<f64> {
        let g = self.0.geometry(pair).map_err(to_py)?;
        notch_frequency(&g).map_err(to_py)
    }

    /// Imaginary part of the transfer impedance (ohm); NaN inside pole guards.
    fn z21(&self, pair: &str, freqs: Vec<f64>) -> PyResult<Vec<f64>> {
        let g = self.0.geometry(pair).map_err(to_py)?;
        let guard = PoleGuard::default();
        Ok(freqs
            .iter()
            .map(|&f| guard.z21(&g, f).map_or(f64::NAN, |z| z.im))
            .collect())
    }

    fn network(&self) -> PyResult<PyNetwork> {
        self.0.network().map(PyNetwork).map_err(to_py)
    }
}

/// Multiplexed readout network on a common feedline.
#[pyclass(name = "Network", module = "notchlab", from_py_object)]
#[derive(Clone)]
struct PyNetwork(MuxNetwork);

impl PyNetwork {
    fn state(&self, state: Option<&str>) -> PyResult<JointState> {
        let n = self.0.len();
        let s = match state {
            None => JointState::ground(n),
            Some(s) => s.parse().map_err(to_py)?,
        };
        if s.len() != n {
            return Err(PyValueError::new_err(format!("state needs {n} letters")));
        }
        Ok(s)
    }
}

#[pymethods]
impl PyNetwork {
    fn channel_names(&self) -> Vec<String> {
        self.0.channels.iter().map(|c| c.name.clone()).collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// Channel parameters in Hz as a dict.
    fn channel<'py>(&self, py: Python<'py>, name: &str) -> PyResult<Bound<'py, PyDict>> {
        let c = &self.0.channels[self.0.channel_index(name).map_err(to_py)?];
        let d = PyDict::new(py);
        d.set_item("f_r_g", c.f_r_g)?;
        d.set_item("f_p", c.f_p)?;
        d.set_item("j", c.j)?;
        d.set_item("kappa_p", c.kappa_p)?;
        d.set_item("chi", c.chi)?;
        Ok(d)
    }

    /// Reflection coefficient at each frequency.
    #[pyo3(signature = (freqs, state=None))]
    fn reflection(&self, freqs: Vec<f64>, state: Option<&str>) -> PyResult<Vec<Complex64>> {
        let s = self.state(state)?;
        freqs
            .iter()
            .map(|&f| mux::gamma_incident(&self.0, &s, f).map_err(to_py))
            .collect()
    }

    /// Normal modes as dicts with channel, character, f_hz and kappa_hz.
    #[pyo3(signature = (state=None))]
    fn normal_modes<'py>(
        &self,
        py: Python<'py>,
        state: Option<&str>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let s = self.state(state)?;
        let modes = mux::normal_modes(&self.0, &s).map_err(to_py)?;
        modes
            .iter()
            .map(|m| {
                let d = PyDict::new(py);
                d.set_item("channel", &self.0.channels[m.channel].name)?;
                d.set_item("character", m.character.to_string())?;
                d.set_item("f_hz", m.f_tilde)?;
                d.set_item("kappa_hz", m.kappa_tilde)?;
                Ok(d)
            })
            .collect()
    }

    /// Upper bound on the thermal photon number from a dephasing rate (1/s).
    fn noise_photon_bound(&self, target: &str, gamma_phi: f64) -> PyResult<f64> {
        let k = self.0.channel_index(target).map_err(to_py)?;
        mux::noise_photon_bound(&self.0, k, gamma_phi).map_err(to_py)
    }

    /// Field traces under a drive pulse given as JSON.
    #[pyo3(signature = (pulse_json, dt, state=None))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        pulse_json: &str,
        dt: f64,
        state: Option<&str>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let s = self.state(state)?;
        let pulse: DrivePulse = serde_json::from_str(pulse_json)
            .map_err(|e| PyValueError::new_err(format!("invalid pulse: {e}")))?;
        let tr = mux::propagate(&self.0, &s, &pulse, dt).map_err(to_py)?;
        let photons: Vec<f64> = (0..tr.len()).map(|k| tr.photons(k)).collect();
        let d = PyDict::new(py);
        d.set_item("t", &tr.t)?;
        d.set_item("photons", photons)?;
        d.set_item("p", &tr.p)?;
        d.set_item("r", &tr.r)?;
        d.set_item("s_out", &tr.s_out)?;
        Ok(d)
    }

    /// Output-field separation for a rectangular drive.
    fn separation<'py>(
        &self,
        py: Python<'py>,
        target: &str,
        f_d: f64,
        amplitude: Complex64,
        duration: f64,
        dt: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let k = self.0.channel_index(target).map_err(to_py)?;
        let pulse = DrivePulse::rect(f_d, amplitude, duration).map_err(to_py)?;
        let sep = mux::separation(&self.0, k, &pulse, dt).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("t", &sep.t)?;
        d.set_item("s", &sep.s)?;
        d.set_item("s_ss", sep.s_ss)?;
        d.set_item("gamma_m", sep.gamma_m)?;
        Ok(d)
    }

    /// Noisy synthetic phase spectrum with every qubit in `state` ('g' or 'e').
    #[pyo3(signature = (state, freqs, theta0=0.0, tau=0.0, noise=0.0, seed=0))]
    fn synth_spectrum(
        &self,
        state: &str,
        freqs: Vec<f64>,
        theta0: f64,
        tau: f64,
        noise: f64,
        seed: u64,
    ) -> PyResult<Vec<f64>> {
        let s = specfit::synth_spectrum(
            &self.0,
            spectrum_state(state)?,
            theta0,
            tau,
            &freqs,
            noise,
            seed,
        )
        .map_err(to_py)?;
        Ok(s.phase)
    }

    /// Fits the network to phase spectra; returns the fitted network and a
    /// dict with theta0, tau, residual, converged and stderr.
    #[allow(clippy::too_many_arguments)]
    #[pyo3(signature = (freqs, phase_g, phase_e=None, theta0=0.0, tau=0.0, seed=0))]
    fn fit<'py>(
        &self,
        py: Python<'py>,
        freqs: Vec<f64>,
        phase_g: Vec<f64>,
        phase_e: Option<Vec<f64>>,
        theta0: f64,
        tau: f64,
        seed: u64,
    ) -> PyResult<(PyNetwork, Bound<'py, PyDict>)> {
        let mut spectra =
            vec![PhaseSpectrum::new(freqs.clone(), phase_g, SpectrumState::AllG).map_err(to_py)?];
        if let Some(pe) = phase_e {
            spectra.push(PhaseSpectrum::new(freqs, pe, SpectrumState::AllE).map_err(to_py)?);
        }
        let mut cfg = FitConfig::new(self.0.clone());
        cfg.theta0 = theta0;
        cfg.tau = tau;
        cfg.seed = seed;
        let res = specfit::fit_reflection(&spectra, &cfg).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("theta0", res.theta0)?;
        d.set_item("tau", res.tau)?;
        d.set_item("residual", res.residual)?;
        d.set_item("converged", res.converged)?;
        d.set_item("chi_identified", res.chi_identified)?;
        d.set_item("stderr", res.stderr.clone())?;
        Ok((PyNetwork(res.network), d))
    }
}

/// Misassignment floor for a given signal-to-noise ratio.
#[pyfunction]
fn separation_error(snr: f64) -> PyResult<f64> {
    metrics::separation_error(snr).map_err(to_py)
}

/// Relaxation-limited assignment and QND errors.
#[pyfunction]
#[pyo3(signature = (tau_meas, t1, tau_buffer=metrics::DEFAULT_TAU_BUFFER))]
fn coherence_limits(tau_meas: f64, t1: f64, tau_buffer: f64) -> PyResult<(f64, f64)> {
    metrics::coherence_limits(tau_meas, tau_buffer, t1).map_err(to_py)
}

#[pyfunction]
fn photons_from_stark(delta_ac: f64, chi: f64) -> PyResult<f64> {
    metrics::photons_from_stark(delta_ac, chi).map_err(to_py)
}

#[pyfunction]
fn critical_photon(g: f64, f_q: f64, f_r: f64) -> PyResult<f64> {
    mux::critical_photon(g, f_q, f_r).map_err(to_py)
}

/// Purcell enhancement of a notched coupler over a capacitive one.
#[pyfunction]
fn enhancement_factor(f_q: f64, f_n: f64, f_mean: f64) -> PyResult<f64> {
    purcell::enhancement_factor(f_q, f_n, f_mean)
        .map(|e| e.value())
        .map_err(to_py)
}

#[pymodule(name = "notchlab")]
fn notchlab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDevice>()?;
    m.add_class::<PyNetwork>()?;
    m.add_function(wrap_pyfunction!(separation_error, m)?)?;
    m.add_function(wrap_pyfunction!(coherence_limits, m)?)?;
    m.add_function(wrap_pyfunction!(photons_from_stark, m)?)?;
    m.add_function(wrap_pyfunction!(critical_photon, m)?)?;
    m.add_function(wrap_pyfunction!(enhancement_factor, m)?)?;
    Ok(())
}

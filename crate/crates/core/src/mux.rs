//! Semi-classical model of a multiplexed readout network: several
//! readout/filter resonator pairs whose filters share one readout node, with
//! an optional parasitic shunt to ground at that node.
//!
//! Reflection coefficients use the engineering `exp(+i w t)` convention. The
//! coupled-mode equations are integrated in the physics convention in the
//! frame of the drive; [`system_matrix`] performs the conversion.

use std::collections::{HashMap, HashSet};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::purcell::ShuntLC;
use crate::quad;
use crate::units::{angular, TWO_PI};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Qubit parameters attached to a channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitMeta {
    pub f_q: f64,
    /// Qubit-readout coupling `g / 2 pi` (Hz).
    pub g: f64,
    pub alpha: f64,
}

/// Bare parameters of one readout/filter pair, all in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutChannel {
    pub name: String,
    /// Readout frequency with the qubit in the ground state.
    pub f_r_g: f64,
    /// Dispersive shift; the excited-state readout frequency is `f_r_g + 2 chi`.
    pub chi: f64,
    pub f_p: f64,
    pub j: f64,
    pub kappa_p: f64,
    pub gamma_r: f64,
    pub gamma_p: f64,
    pub qubit: Option<QubitMeta>,
}

impl ReadoutChannel {
    pub fn new(
        name: impl Into<String>,
        f_r_g: f64,
        chi: f64,
        f_p: f64,
        j: f64,
        kappa_p: f64,
    ) -> Self {
        Self {
            name: name.into(),
            f_r_g,
            chi,
            f_p,
            j,
            kappa_p,
            gamma_r: 0.0,
            gamma_p: 0.0,
            qubit: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let field = |f: &str| format!("channel {}: {f}", self.name);
        require_positive(&field("f_r_g"), self.f_r_g)?;
        require_positive(&field("f_p"), self.f_p)?;
        require_positive(&field("kappa_p"), self.kappa_p)?;
        require_non_negative(&field("j"), self.j)?;
        require_non_negative(&field("gamma_r"), self.gamma_r)?;
        require_non_negative(&field("gamma_p"), self.gamma_p)?;
        if !self.chi.is_finite() {
            return Err(Error::validation(field("chi"), "must be finite"));
        }
        if let Some(q) = &self.qubit {
            require_positive(&field("f_q"), q.f_q)?;
            require_positive(&field("g"), q.g)?;
        }
        Ok(())
    }

    /// Readout frequency for the given qubit state.
    pub fn f_r(&self, state: QubitState) -> f64 {
        match state {
            QubitState::G => self.f_r_g,
            QubitState::E => self.f_r_g + 2.0 * self.chi,
        }
    }
}

pub const MAX_CHANNELS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuxNetwork {
    pub channels: Vec<ReadoutChannel>,
    /// `None` models an ideal open node (`Gamma_shunt = 1`).
    pub shunt: Option<ShuntLC>,
    pub z0_line: f64,
}

impl MuxNetwork {
    pub fn new(
        channels: Vec<ReadoutChannel>,
        shunt: Option<ShuntLC>,
        z0_line: f64,
    ) -> Result<Self> {
        let net = Self {
            channels,
            shunt,
            z0_line,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() || self.channels.len() > MAX_CHANNELS {
            return Err(Error::validation(
                "channels",
                format!(
                    "between 1 and {MAX_CHANNELS} channels are supported, got {}",
                    self.channels.len()
                ),
            ));
        }
        let mut seen = HashSet::new();
        for ch in &self.channels {
            if !seen.insert(ch.name.as_str()) {
                return Err(Error::validation(
                    "channels",
                    format!("duplicate channel name {}", ch.name),
                ));
            }
            ch.validate()?;
        }
        require_positive("z0_line", self.z0_line)?;
        if let Some(s) = &self.shunt {
            require_positive("shunt.c", s.c_shunt)?;
            require_positive("shunt.l", s.l_shunt)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Index of a channel by name.
    pub fn channel_index(&self, name: &str) -> Result<usize> {
        self.channels
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::validation("channel", format!("no channel named {name}")))
    }

    fn check_state(&self, state: &JointState) -> Result<()> {
        if state.len() != self.len() {
            return Err(Error::validation(
                "state",
                format!("{} qubit states for {} channels", state.len(), self.len()),
            ));
        }
        Ok(())
    }

    fn check_target(&self, target: usize) -> Result<()> {
        if target >= self.len() {
            return Err(Error::validation(
                "target",
                format!("channel index {target} out of range"),
            ));
        }
        Ok(())
    }

    /// Shunt reflection at `f`, engineering convention.
    pub fn gamma_shunt(&self, f: f64) -> Complex64 {
        match &self.shunt {
            Some(s) => shunt_reflection(s, self.z0_line, f),
            None => Complex64::new(1.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QubitState {
    G,
    E,
}

/// One qubit state per channel.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JointState(pub Vec<QubitState>);

impl JointState {
    pub fn ground(n: usize) -> Self {
        Self(vec![QubitState::G; n])
    }

    /// All qubits in the ground state except `target`, which is excited.
    pub fn excited(n: usize, target: usize) -> Self {
        let mut s = Self::ground(n);
        if target < n {
            s.0[target] = QubitState::E;
        }
        s
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromStr for JointState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                'g' | 'G' => Ok(QubitState::G),
                'e' | 'E' => Ok(QubitState::E),
                other => Err(Error::validation(
                    "state",
                    format!("unexpected character {other:?}; use g or e"),
                )),
            })
            .collect::<Result<Vec<_>>>()
            .map(JointState)
    }
}

impl std::fmt::Display for JointState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for s in &self.0 {
            f.write_str(match s {
                QubitState::G => "g",
                QubitState::E => "e",
            })?;
        }
        Ok(())
    }
}

/// Reflection of the shunt LC terminating a line of impedance `z0`.
pub fn shunt_reflection(shunt: &ShuntLC, z0: f64, f: f64) -> Complex64 {
    let y = shunt.admittance(f) * z0;
    (1.0 - y) / (1.0 + y)
}

/// Reflection off one filter resonator with its readout resonator attached.
pub fn gamma_filter(ch: &ReadoutChannel, state: QubitState, f_d: f64) -> Complex64 {
    let dr = angular(ch.f_r(state) - f_d);
    let dp = angular(ch.f_p - f_d);
    let kappa = angular(ch.kappa_p);
    let (gr, gp) = (angular(ch.gamma_r), angular(ch.gamma_p));
    let j = angular(ch.j);
    let a_r = -2.0 * I * dr + gr;
    let a_p = -2.0 * I * dp + kappa + gp;
    1.0 - 2.0 * kappa * a_r / (a_p * a_r + 4.0 * j * j)
}

/// Reflection of the whole network seen from the line.
pub fn gamma_incident(net: &MuxNetwork, state: &JointState, f_d: f64) -> Result<Complex64> {
    net.check_state(state)?;
    if !(f_d > 0.0) || !f_d.is_finite() {
        return Err(Error::domain(format!(
            "drive frequency must be positive, got {f_d}"
        )));
    }
    let mut y = match &net.shunt {
        Some(s) => s.admittance(f_d) * net.z0_line,
        None => Complex64::new(0.0, 0.0),
    };
    for (ch, &st) in net.channels.iter().zip(&state.0) {
        let g = gamma_filter(ch, st, f_d);
        let den = 1.0 + g;
        if den.norm() == 0.0 {
            return Err(Error::CompositionPole {
                branch: ch.name.clone(),
            });
        }
        y += (1.0 - g) / den;
    }
    Ok((1.0 - y) / (1.0 + y))
}

/// Coupled-mode matrix in the frame of the drive, in rad/s.
///
/// The state vector is `[p_1..p_N, r_1..r_N]` and evolves as
/// `dx/dt = -i A x + d s_in`, with output
/// `s_out = G s_in - (1 + G)/2 sum_j sqrt(kappa_j) p_j`, where `G` is the
/// shunt reflection in the physics convention.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrix {
    pub a: DMatrix<Complex64>,
    pub d: DVector<Complex64>,
    pub gamma_shunt: Complex64,
    /// `sqrt(kappa_j)` per channel, in sqrt(rad/s).
    pub sqrt_kappa: Vec<f64>,
}

impl SystemMatrix {
    pub fn output(&self, x: &DVector<Complex64>, s_in: Complex64) -> Complex64 {
        let n = self.sqrt_kappa.len();
        let sum: Complex64 = (0..n).map(|j| x[j] * self.sqrt_kappa[j]).sum();
        self.gamma_shunt * s_in - (1.0 + self.gamma_shunt) / 2.0 * sum
    }

    /// Steady state for a constant drive amplitude.
    pub fn steady_state(&self, s_in: Complex64) -> Result<DVector<Complex64>> {
        let rhs = &self.d * (-I * s_in);
        self.a
            .clone()
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("steady-state coupled-mode matrix".into()))
    }
}

fn build_matrix(
    net: &MuxNetwork,
    state: &JointState,
    f_ref: f64,
    gamma_shunt: Complex64,
) -> SystemMatrix {
    let n = net.len();
    let mut a = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    let mut d = DVector::<Complex64>::zeros(2 * n);
    let sqrt_kappa: Vec<f64> = net
        .channels
        .iter()
        .map(|c| angular(c.kappa_p).sqrt())
        .collect();
    let w_ref = angular(f_ref);
    for (i, ch) in net.channels.iter().enumerate() {
        for j in 0..n {
            a[(i, j)] = -I * sqrt_kappa[i] * sqrt_kappa[j] / 4.0 * (1.0 + gamma_shunt);
        }
        a[(i, i)] += Complex64::new(angular(ch.f_p) - w_ref, -angular(ch.gamma_p) / 2.0);
        let jj = Complex64::new(angular(ch.j), 0.0);
        a[(i, n + i)] = jj;
        a[(n + i, i)] = jj;
        a[(n + i, n + i)] = Complex64::new(
            angular(ch.f_r(state.0[i])) - w_ref,
            -angular(ch.gamma_r) / 2.0,
        );
        d[i] = (1.0 + gamma_shunt) / 2.0 * sqrt_kappa[i];
    }
    SystemMatrix {
        a,
        d,
        gamma_shunt,
        sqrt_kappa,
    }
}

pub fn system_matrix(net: &MuxNetwork, state: &JointState, f_d: f64) -> Result<SystemMatrix> {
    net.check_state(state)?;
    if !(f_d > 0.0) || !f_d.is_finite() {
        return Err(Error::domain(format!(
            "drive frequency must be positive, got {f_d}"
        )));
    }
    // The coupled-mode equations are written in the physics convention.
    Ok(build_matrix(net, state, f_d, net.gamma_shunt(f_d).conj()))
}

/// Shape of a pulse segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    /// Constant at the segment amplitude.
    Flat,
    /// Raised-cosine transition from the previous amplitude to this one.
    RaisedCosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    /// Amplitude in sqrt(photons / s), reached at the end of the segment.
    pub amplitude: Complex64,
    pub edge: Edge,
}

/// Drive at carrier `f_d` with a piecewise envelope starting from zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivePulse {
    pub f_d: f64,
    pub segments: Vec<Segment>,
}

/// Longest constant sample used to represent a raised-cosine edge (s).
pub const EDGE_SAMPLE: f64 = 0.1e-9;

/// Time resolution of pulse boundaries (s).
const TICK: f64 = 1e-15;

impl DrivePulse {
    pub fn new(f_d: f64, segments: Vec<Segment>) -> Result<Self> {
        let p = Self { f_d, segments };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("pulse.f_d", self.f_d)?;
        for (i, s) in self.segments.iter().enumerate() {
            require_positive(&format!("pulse.segments[{i}].duration"), s.duration)?;
            if !(s.amplitude.re.is_finite() && s.amplitude.im.is_finite()) {
                return Err(Error::validation(
                    format!("pulse.segments[{i}].amplitude"),
                    "must be finite",
                ));
            }
        }
        Ok(())
    }

    /// Constant drive of the given length.
    pub fn rect(f_d: f64, amplitude: Complex64, duration: f64) -> Result<Self> {
        Self::new(
            f_d,
            vec![Segment {
                duration,
                amplitude,
                edge: Edge::Flat,
            }],
        )
    }

    /// Two-step readout pulse: a raised-cosine rise to `ratio * plateau`, a
    /// flat top, a raised-cosine step down to `plateau`, the plateau, and a
    /// raised-cosine fall to zero.
    pub fn two_step(
        f_d: f64,
        plateau: Complex64,
        ratio: f64,
        plateau_duration: f64,
    ) -> Result<Self> {
        Self::two_step_with(f_d, plateau, ratio, 6e-9, 14e-9, plateau_duration)
    }

    pub fn two_step_with(
        f_d: f64,
        plateau: Complex64,
        ratio: f64,
        edge: f64,
        top: f64,
        plateau_duration: f64,
    ) -> Result<Self> {
        require_positive("pulse.ratio", ratio)?;
        let peak = plateau * ratio;
        let seg = |duration, amplitude, edge| Segment {
            duration,
            amplitude,
            edge,
        };
        Self::new(
            f_d,
            vec![
                seg(edge, peak, Edge::RaisedCosine),
                seg(top, peak, Edge::Flat),
                seg(edge, plateau, Edge::RaisedCosine),
                seg(plateau_duration, plateau, Edge::Flat),
                seg(edge, Complex64::new(0.0, 0.0), Edge::RaisedCosine),
            ],
        )
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Appends a zero-amplitude segment, for ring-down.
    pub fn with_tail(mut self, duration: f64) -> Result<Self> {
        self.segments.push(Segment {
            duration,
            amplitude: Complex64::new(0.0, 0.0),
            edge: Edge::Flat,
        });
        self.validate()?;
        Ok(self)
    }

    /// Envelope value at `t`, continuous within raised-cosine edges.
    pub fn envelope(&self, t: f64) -> Complex64 {
        let mut t0 = 0.0;
        let mut prev = Complex64::new(0.0, 0.0);
        for s in &self.segments {
            if t < t0 + s.duration {
                return match s.edge {
                    Edge::Flat => s.amplitude,
                    Edge::RaisedCosine => {
                        let u = ((t - t0) / s.duration).clamp(0.0, 1.0);
                        let w = 0.5 * (1.0 - (std::f64::consts::PI * u).cos());
                        prev + (s.amplitude - prev) * w
                    }
                };
            }
            t0 += s.duration;
            prev = s.amplitude;
        }
        Complex64::new(0.0, 0.0)
    }

    /// Piecewise-constant representation as `(start_tick, end_tick, amplitude)`.
    fn pieces(&self) -> Vec<(i64, i64, Complex64)> {
        let mut out = Vec::new();
        let mut t0 = 0.0;
        let mut prev = Complex64::new(0.0, 0.0);
        for s in &self.segments {
            let (a, b) = (ticks(t0), ticks(t0 + s.duration));
            match s.edge {
                Edge::Flat => out.push((a, b, s.amplitude)),
                Edge::RaisedCosine => {
                    let n = ((s.duration / EDGE_SAMPLE).ceil() as i64).max(1);
                    for k in 0..n {
                        let lo = a + (b - a) * k / n;
                        let hi = a + (b - a) * (k + 1) / n;
                        let u = (k as f64 + 0.5) / n as f64;
                        let w = 0.5 * (1.0 - (std::f64::consts::PI * u).cos());
                        out.push((lo, hi, prev + (s.amplitude - prev) * w));
                    }
                }
            }
            t0 += s.duration;
            prev = s.amplitude;
        }
        out.retain(|p| p.1 > p.0);
        out
    }
}

fn ticks(t: f64) -> i64 {
    (t / TICK).round() as i64
}

/// Time traces of the mode amplitudes and the output field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldTraces {
    pub t: Vec<f64>,
    /// Filter amplitudes per channel, in sqrt(photons).
    pub p: Vec<Vec<Complex64>>,
    /// Readout amplitudes per channel.
    pub r: Vec<Vec<Complex64>>,
    pub s_in: Vec<Complex64>,
    pub s_out: Vec<Complex64>,
}

impl FieldTraces {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Total photon number in all modes at sample `k`.
    pub fn photons(&self, k: usize) -> f64 {
        self.p
            .iter()
            .chain(&self.r)
            .map(|tr| tr[k].norm_sqr())
            .sum()
    }
}

/// Propagator over an interval of length `h`: `exp(-i A h)` and
/// `int_0^h exp(-i A s) ds d`, from one augmented matrix exponential.
fn step_operators(sys: &SystemMatrix, h: f64) -> (DMatrix<Complex64>, DVector<Complex64>) {
    let n = sys.a.nrows();
    let mut m = DMatrix::<Complex64>::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(&(&sys.a * (-I * h)));
    for i in 0..n {
        m[(i, n)] = sys.d[i] * h;
    }
    let e = m.exp();
    let prop = e.view((0, 0), (n, n)).into_owned();
    let drive = e.view((0, n), (n, 1)).column(0).into_owned();
    (prop, drive)
}

/// Largest growth rate allowed before the matrix counts as active.
fn check_passive(sys: &SystemMatrix, net: &MuxNetwork) -> Result<()> {
    let eig = sys
        .a
        .clone()
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::Singular("eigenvalues of the coupled-mode matrix".into()))?;
    let kmax = net
        .channels
        .iter()
        .map(|c| angular(c.kappa_p))
        .fold(0.0, f64::max);
    let growth = eig.iter().map(|l| l.im).fold(f64::NEG_INFINITY, f64::max);
    if growth > 1e-6 * kmax {
        return Err(Error::PassivityViolation {
            growth_rad_s: growth,
        });
    }
    Ok(())
}

/// Integrates the coupled-mode equations from rest under `pulse`, sampling
/// every `dt_out` seconds over the pulse duration.
pub fn propagate(
    net: &MuxNetwork,
    state: &JointState,
    pulse: &DrivePulse,
    dt_out: f64,
) -> Result<FieldTraces> {
    pulse.validate()?;
    require_positive("dt_out", dt_out)?;
    let sys = system_matrix(net, state, pulse.f_d)?;
    check_passive(&sys, net)?;
    let n = net.len();
    let pieces = pulse.pieces();
    let total = pieces.last().map(|p| p.1).unwrap_or(0);
    let dt_ticks = ticks(dt_out).max(1);

    let mut cuts: Vec<i64> = pieces.iter().flat_map(|p| [p.0, p.1]).collect();
    let outputs: Vec<i64> = (0..=total / dt_ticks).map(|k| k * dt_ticks).collect();
    cuts.extend(&outputs);
    cuts.push(0);
    cuts.sort_unstable();
    cuts.dedup();

    let amp_at = |tick: i64| -> Complex64 {
        // Right-continuous envelope; the end of the pulse keeps the last value.
        let idx = pieces.partition_point(|p| p.1 <= tick);
        pieces
            .get(idx)
            .or(pieces.last())
            .map(|p| p.2)
            .unwrap_or_default()
    };

    let mut cache: HashMap<i64, (DMatrix<Complex64>, DVector<Complex64>)> = HashMap::new();
    let mut x = DVector::<Complex64>::zeros(2 * n);
    let mut traces = FieldTraces {
        t: Vec::with_capacity(outputs.len()),
        p: vec![Vec::with_capacity(outputs.len()); n],
        r: vec![Vec::with_capacity(outputs.len()); n],
        s_in: Vec::with_capacity(outputs.len()),
        s_out: Vec::with_capacity(outputs.len()),
    };
    let record = |tick: i64, x: &DVector<Complex64>, tr: &mut FieldTraces| {
        let s = amp_at(tick);
        tr.t.push(tick as f64 * TICK);
        for j in 0..n {
            tr.p[j].push(x[j]);
            tr.r[j].push(x[n + j]);
        }
        tr.s_in.push(s);
        tr.s_out.push(sys.output(x, s));
    };
    let mut next_out = 0usize;
    if outputs.first() == Some(&0) {
        record(0, &x, &mut traces);
        next_out = 1;
    }
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let h = b - a;
        let s = amp_at(a);
        let (prop, drive) = cache
            .entry(h)
            .or_insert_with(|| step_operators(&sys, h as f64 * TICK));
        x = &*prop * &x + &*drive * s;
        if next_out < outputs.len() && outputs[next_out] == b {
            record(b, &x, &mut traces);
            next_out += 1;
        }
    }
    Ok(traces)
}

/// Output-field separation between the two states of a target qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub t: Vec<f64>,
    /// `|s_out^e - s_out^g|`, in sqrt(photons / s).
    pub s: Vec<f64>,
    /// Contribution of the target filter alone.
    pub s_target: Vec<f64>,
    /// Steady-state separation at the final drive amplitude.
    pub s_ss: f64,
    /// Measurement-induced dephasing rate `S_ss^2 / 2` (1/s).
    pub gamma_m: f64,
}

pub fn separation(
    net: &MuxNetwork,
    target: usize,
    pulse: &DrivePulse,
    dt_out: f64,
) -> Result<Separation> {
    net.check_target(target)?;
    let n = net.len();
    let g = JointState::ground(n);
    let e = JointState::excited(n, target);
    let tg = propagate(net, &g, pulse, dt_out)?;
    let te = propagate(net, &e, pulse, dt_out)?;
    let sys = system_matrix(net, &g, pulse.f_d)?;
    let factor = ((1.0 + sys.gamma_shunt) / 2.0).norm() * sys.sqrt_kappa[target];
    let s = tg
        .s_out
        .iter()
        .zip(&te.s_out)
        .map(|(a, b)| (b - a).norm())
        .collect();
    let s_target = tg.p[target]
        .iter()
        .zip(&te.p[target])
        .map(|(a, b)| factor * (b - a).norm())
        .collect();
    let s_final = pulse
        .segments
        .iter()
        .rev()
        .find(|seg| seg.amplitude.norm() > 0.0)
        .map(|seg| seg.amplitude.norm())
        .unwrap_or(0.0);
    let dgamma = (gamma_incident(net, &e, pulse.f_d)? - gamma_incident(net, &g, pulse.f_d)?).norm();
    let s_ss = s_final * dgamma;
    Ok(Separation {
        t: tg.t,
        s,
        s_target,
        s_ss,
        gamma_m: s_ss * s_ss / 2.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeCharacter {
    ReadoutLike,
    FilterLike,
}

impl std::fmt::Display for ModeCharacter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModeCharacter::ReadoutLike => "readout",
            ModeCharacter::FilterLike => "filter",
        })
    }
}

/// Complex normal mode of the drive-free network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalMode {
    pub f_tilde: f64,
    pub kappa_tilde: f64,
    pub channel: usize,
    pub character: ModeCharacter,
    /// Squared eigenvector weight on each channel; sums to one.
    pub weights: Vec<f64>,
    /// Fraction of the channel weight that sits on the readout resonator.
    pub readout_fraction: f64,
}

/// Eigenvector for eigenvalue `lambda` by inverse iteration.
fn eigenvector(a: &DMatrix<Complex64>, lambda: Complex64) -> DVector<Complex64> {
    let n = a.nrows();
    let scale = a.norm().max(1.0);
    let shift = lambda + Complex64::new(scale * 1e-11, scale * 1e-11);
    let m = a - DMatrix::<Complex64>::identity(n, n) * shift;
    let lu = m.lu();
    let mut v = DVector::<Complex64>::from_element(n, Complex64::new(1.0, 0.0));
    for _ in 0..4 {
        if let Some(w) = lu.solve(&v) {
            let norm = w.norm();
            if norm > 0.0 && norm.is_finite() {
                v = w / Complex64::new(norm, 0.0);
            }
        }
    }
    v
}

/// Normal modes in absolute frequency with an ideal open node, paired two
/// per channel by eigenvector weight.
pub fn normal_modes(net: &MuxNetwork, state: &JointState) -> Result<Vec<NormalMode>> {
    net.check_state(state)?;
    net.validate()?;
    let n = net.len();
    // Work in Hz: A / 2 pi in the laboratory frame.
    let mut sys = build_matrix(net, state, 0.0, Complex64::new(1.0, 0.0));
    sys.a /= Complex64::new(TWO_PI, 0.0);
    let eig = sys
        .a
        .clone()
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::Singular("eigenvalues of the coupled-mode matrix".into()))?;
    let mut modes: Vec<(Complex64, Vec<f64>, Vec<f64>)> = eig
        .iter()
        .map(|&l| {
            let v = eigenvector(&sys.a, l);
            let total: f64 = v.iter().map(|c| c.norm_sqr()).sum();
            let weights: Vec<f64> = (0..n)
                .map(|j| (v[j].norm_sqr() + v[n + j].norm_sqr()) / total)
                .collect();
            let frac: Vec<f64> = (0..n)
                .map(|j| {
                    let w = v[j].norm_sqr() + v[n + j].norm_sqr();
                    if w > 0.0 {
                        v[n + j].norm_sqr() / w
                    } else {
                        0.0
                    }
                })
                .collect();
            (l, weights, frac)
        })
        .collect();
    modes.sort_by(|a, b| a.0.re.total_cmp(&b.0.re));

    // Greedy pairing by weight, two modes per channel; ties go to the channel
    // whose bare frequencies are closest.
    let mut cands: Vec<(f64, f64, usize, usize)> = Vec::new();
    for (m, (l, w, _)) in modes.iter().enumerate() {
        for (c, ch) in net.channels.iter().enumerate() {
            let centre = 0.5 * (ch.f_r(state.0[c]) + ch.f_p);
            cands.push((w[c], (l.re - centre).abs(), m, c));
        }
    }
    cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    let mut owner = vec![usize::MAX; modes.len()];
    let mut count = vec![0usize; n];
    for &(w, _, m, c) in &cands {
        if owner[m] == usize::MAX && count[c] < 2 {
            owner[m] = c;
            count[c] += 1;
            let best_other = modes[m]
                .1
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != c)
                .map(|(_, &x)| x)
                .fold(0.0, f64::max);
            if best_other > 0.8 * w {
                log::warn!(
                    "mode at {:.6e} Hz is ambiguous: weight {:.3} on channel {} and {:.3} elsewhere",
                    modes[m].0.re,
                    w,
                    net.channels[c].name,
                    best_other
                );
            }
        }
    }

    let mut out = Vec::with_capacity(modes.len());
    for c in 0..n {
        let mine: Vec<usize> = (0..modes.len()).filter(|&m| owner[m] == c).collect();
        let readout = mine
            .iter()
            .copied()
            .max_by(|&a, &b| modes[a].2[c].total_cmp(&modes[b].2[c]))
            .unwrap_or(usize::MAX);
        for &m in &mine {
            let (l, w, frac) = &modes[m];
            out.push(NormalMode {
                f_tilde: l.re,
                kappa_tilde: -2.0 * l.im,
                channel: c,
                character: if m == readout {
                    ModeCharacter::ReadoutLike
                } else {
                    ModeCharacter::FilterLike
                },
                weights: w.clone(),
                readout_fraction: frac[c],
            });
        }
    }
    out.sort_by(|a, b| a.f_tilde.total_cmp(&b.f_tilde));
    Ok(out)
}

fn find_mode(
    modes: &[NormalMode],
    channel: usize,
    character: ModeCharacter,
) -> Result<&NormalMode> {
    modes
        .iter()
        .find(|m| m.channel == channel && m.character == character)
        .ok_or_else(|| Error::Singular(format!("no {character} mode for channel {channel}")))
}

/// Dispersive shifts of the normal modes when only the target qubit flips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeShifts {
    pub chi_r: f64,
    pub chi_p: f64,
    /// `(chi_r, chi_p)` of every channel, the target included.
    pub per_channel: Vec<(f64, f64)>,
}

pub fn mode_dispersive_shifts(net: &MuxNetwork, target: usize) -> Result<ModeShifts> {
    net.check_target(target)?;
    let n = net.len();
    let g = normal_modes(net, &JointState::ground(n))?;
    let e = normal_modes(net, &JointState::excited(n, target))?;
    let mut per_channel = Vec::with_capacity(n);
    for c in 0..n {
        let shift = |ch: ModeCharacter| -> Result<f64> {
            Ok((find_mode(&e, c, ch)?.f_tilde - find_mode(&g, c, ch)?.f_tilde) / 2.0)
        };
        per_channel.push((
            shift(ModeCharacter::ReadoutLike)?,
            shift(ModeCharacter::FilterLike)?,
        ));
    }
    let (chi_r, chi_p) = per_channel[target];
    Ok(ModeShifts {
        chi_r,
        chi_p,
        per_channel,
    })
}

/// Upper bound on the thermal photon number implied by a measured dephasing
/// rate `gamma_phi` (1/s) of the target qubit.
pub fn noise_photon_bound(net: &MuxNetwork, target: usize, gamma_phi: f64) -> Result<f64> {
    net.check_target(target)?;
    require_non_negative("gamma_phi", gamma_phi)?;
    if gamma_phi == 0.0 {
        return Ok(0.0);
    }
    let n = net.len();
    let g = JointState::ground(n);
    let e = JointState::excited(n, target);
    let mut centres = Vec::new();
    let mut kmax: f64 = 0.0;
    for st in [&g, &e] {
        for m in normal_modes(net, st)? {
            centres.push(m.f_tilde);
            kmax = kmax.max(m.kappa_tilde);
        }
    }
    for ch in &net.channels {
        kmax = kmax.max(ch.kappa_p);
    }
    centres.sort_by(f64::total_cmp);
    let lo = (centres[0] - 20.0 * kmax).max(1.0);
    let hi = centres[centres.len() - 1] + 20.0 * kmax;

    let integrand = |f: f64| -> f64 {
        match (gamma_incident(net, &e, f), gamma_incident(net, &g, f)) {
            (Ok(a), Ok(b)) => (a - b).norm_sqr(),
            _ => 0.0,
        }
    };
    let peak = centres
        .iter()
        .map(|&f| integrand(f))
        .fold(0.0, f64::max)
        .max(1e-300);
    let tol = 1e-6 * peak * kmax;

    let mut cuts = vec![lo];
    cuts.extend(centres.iter().copied().filter(|&c| c > lo && c < hi));
    cuts.push(hi);
    cuts.dedup();
    let per = tol / (cuts.len() - 1) as f64;
    let integral: f64 = cuts
        .windows(2)
        .map(|w| quad::integrate(integrand, w[0], w[1], per, 2000).0)
        .sum();
    if integral < 1e-30 {
        return Err(Error::UnboundedBound { integral });
    }
    Ok(2.0 * gamma_phi / integral)
}

/// Critical photon number `((f_r - f_q) / (2 g))^2`.
pub fn critical_photon(g: f64, f_q: f64, f_r: f64) -> Result<f64> {
    require_positive("g", g)?;
    if f_q == f_r {
        return Err(Error::domain("qubit and readout frequencies coincide"));
    }
    Ok(((f_r - f_q) / (2.0 * g)).powi(2))
}

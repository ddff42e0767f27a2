//! Purcell-limited qubit relaxation through a lossless two-port readout
//! network, and the enhancement provided by a notch in its transfer impedance.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::equiv::{two_port, CouplerBranch, LumpedPair, LumpedResonator, TwoPortZ};
use crate::error::{require_positive, Error, Result};
use crate::mtl::{CoupledPairGeometry, PoleGuard};
use crate::units::{angular, TWO_PI};

/// Default qubit shunt capacitance (F).
pub const DEFAULT_C_Q: f64 = 90e-15;

/// Qubit and line coupling elements around the two-port.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitCoupling {
    pub c_q: f64,
    pub c_qr: f64,
    pub c_ext: f64,
    pub z0_line: f64,
    pub f_q: f64,
}

impl QubitCoupling {
    pub fn validate(&self) -> Result<()> {
        require_positive("c_q", self.c_q)?;
        require_positive("c_qr", self.c_qr)?;
        require_positive("c_ext", self.c_ext)?;
        require_positive("z0_line", self.z0_line)?;
        require_positive("f_q", self.f_q)
    }
}

/// Parasitic parallel LC from the readout node to ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShuntLC {
    pub c_shunt: f64,
    pub l_shunt: f64,
}

impl ShuntLC {
    pub fn new(c_shunt: f64, l_shunt: f64) -> Result<Self> {
        require_positive("shunt.c", c_shunt)?;
        require_positive("shunt.l", l_shunt)?;
        Ok(Self { c_shunt, l_shunt })
    }

    /// Frequency at which the shunt is an open circuit (Hz).
    pub fn frequency(&self) -> f64 {
        1.0 / (TWO_PI * (self.l_shunt * self.c_shunt).sqrt())
    }

    pub fn admittance(&self, f: f64) -> Complex64 {
        let w = angular(f);
        Complex64::new(0.0, w * self.c_shunt - 1.0 / (w * self.l_shunt))
    }

    /// Impedance; infinite exactly at the shunt resonance.
    pub fn impedance(&self, f: f64) -> Complex64 {
        let y = self.admittance(f);
        if y.norm() == 0.0 {
            Complex64::new(f64::INFINITY, 0.0)
        } else {
            1.0 / y
        }
    }
}

/// Real part of the admittance seen by the qubit, in siemens.
pub fn re_input_admittance(
    z: &TwoPortZ,
    coupling: &QubitCoupling,
    shunt: Option<&ShuntLC>,
    f: f64,
) -> Result<f64> {
    if !(f > 0.0) || !f.is_finite() {
        return Err(Error::domain(format!(
            "frequency must be positive, got {f}"
        )));
    }
    coupling.validate()?;
    let w = angular(f);
    let z_qr = Complex64::new(0.0, -1.0 / (w * coupling.c_qr));
    let mut z_ext = Complex64::new(0.0, -1.0 / (w * coupling.c_ext));
    let mut z0 = coupling.z0_line;
    if let Some(sh) = shunt {
        // The shunt in parallel with the line, written through its admittance
        // so that the open-circuit point stays finite.
        let y = sh.admittance(f);
        let y2 = y.norm_sqr();
        let g0 = 1.0 / (z0 * z0);
        z_ext += y.conj() / (y2 + g0);
        z0 /= 1.0 + z0 * z0 * y2;
    }
    if z.z21.norm() > 0.1 * z.z11.norm().min(z.z22.norm()) {
        log::warn!(
            "|Z21| is not small against |Z11|, |Z22|; the admittance expression loses accuracy"
        );
    }
    let den = ((z.z11 + z_qr) * (z.z22 + z_ext + z0)).norm_sqr();
    Ok(z0 * z.z21.norm_sqr() / den)
}

/// Readout network seen between the qubit and the line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PurcellNetwork {
    Lumped(LumpedPair),
    /// First order in the coupler: self-impedances of the uncoupled
    /// resonators and `Z21 = Y_c Z_r Z_p`.
    WeakCoupling(LumpedPair),
    /// Distributed transfer impedance with the self-impedances of the
    /// equivalent lumped pair.
    Geometry(CoupledPairGeometry),
}

impl PurcellNetwork {
    pub fn two_port(&self, f: f64) -> Result<TwoPortZ> {
        match self {
            PurcellNetwork::Lumped(pair) => two_port(pair, f),
            PurcellNetwork::WeakCoupling(pair) => {
                if !(f > 0.0) || !f.is_finite() {
                    return Err(Error::domain(format!(
                        "frequency must be positive, got {f}"
                    )));
                }
                let yr = pair.readout.admittance(f);
                let yp = pair.filter.admittance(f);
                if yr.norm() == 0.0 || yp.norm() == 0.0 {
                    return Err(Error::Singular("resonator admittance vanishes".into()));
                }
                let (zr, zp) = (1.0 / yr, 1.0 / yp);
                Ok(TwoPortZ {
                    z11: zr,
                    z22: zp,
                    z21: pair.coupler.admittance(f) * zr * zp,
                })
            }
            PurcellNetwork::Geometry(geom) => {
                let pair = LumpedPair {
                    readout: crate::equiv::map_resonator(geom.l_r(), &geom.line)?,
                    filter: crate::equiv::map_resonator(geom.l_p(), &geom.line)?,
                    coupler: CouplerBranch::EquivCap { c_j_eff: 0.0 },
                };
                let mut z = two_port(&pair, f)?;
                z.z21 = PoleGuard::default().z21(geom, f)?;
                Ok(z)
            }
        }
    }
}

/// Purcell-limited relaxation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum T1Limit {
    Finite(f64),
    /// The transfer impedance vanishes at the qubit frequency.
    NotchLimited,
}

impl T1Limit {
    /// Seconds, with the notch-limited case mapped to infinity.
    pub fn seconds(&self) -> f64 {
        match self {
            T1Limit::Finite(t) => *t,
            T1Limit::NotchLimited => f64::INFINITY,
        }
    }

    pub fn is_notch_limited(&self) -> bool {
        matches!(self, T1Limit::NotchLimited)
    }
}

/// Relative size of `|Z21|` below which the qubit counts as decoupled.
const NOTCH_EPS: f64 = 1e-12;

pub fn t1_purcell(
    network: &PurcellNetwork,
    coupling: &QubitCoupling,
    shunt: Option<&ShuntLC>,
) -> Result<T1Limit> {
    let z = network.two_port(coupling.f_q)?;
    if z.z21.norm() <= NOTCH_EPS * z.z11.norm().max(z.z22.norm()) {
        return Ok(T1Limit::NotchLimited);
    }
    let re_y = re_input_admittance(&z, coupling, shunt, coupling.f_q)?;
    if re_y == 0.0 {
        return Ok(T1Limit::NotchLimited);
    }
    Ok(T1Limit::Finite(coupling.c_q / re_y))
}

/// Enhancement factor of the notched over the capacitively coupled pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Enhancement {
    Finite(f64),
    /// The qubit sits on the notch.
    Divergent,
}

impl Enhancement {
    pub fn value(&self) -> f64 {
        match self {
            Enhancement::Finite(x) => *x,
            Enhancement::Divergent => f64::INFINITY,
        }
    }
}

/// Leading-order T1 enhancement of a notched pair over a capacitively
/// coupled pair with the same exchange coupling.
pub fn enhancement_factor(f_q: f64, f_n: f64, f_mean: f64) -> Result<Enhancement> {
    require_positive("f_q", f_q)?;
    require_positive("f_n", f_n)?;
    require_positive("f_mean", f_mean)?;
    let d = f_q - f_n;
    if d == 0.0 {
        return Ok(Enhancement::Divergent);
    }
    if (d / f_n).abs() > 0.2 {
        log::warn!(
            "qubit-notch detuning is {:.3} of the notch frequency",
            d / f_n
        );
    }
    let b = 1.0 - (f_n / f_mean).powi(2);
    Ok(Enhancement::Finite(0.25 * (f_q / d).powi(2) * b * b))
}

/// Width of the band around the notch where the enhancement exceeds `xi` (Hz).
pub fn enhancement_bandwidth(xi: f64, f_n: f64, f_mean: f64) -> Result<f64> {
    require_positive("xi", xi)?;
    require_positive("f_n", f_n)?;
    require_positive("f_mean", f_mean)?;
    Ok(f_n / xi.sqrt() * (1.0 - (f_n / f_mean).powi(2)).abs())
}

/// Measured quantities that fix the Purcell circuit of one readout channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelCircuitSpec {
    pub f_q: f64,
    /// Qubit-readout coupling `g / 2 pi` (Hz).
    pub g: f64,
    pub f_r: f64,
    pub f_p: f64,
    /// Readout-filter coupling `J / 2 pi` (Hz).
    pub j: f64,
    pub kappa_p: f64,
    pub c_q: f64,
    /// Impedance of the lumped resonators (ohm).
    pub z_res: f64,
    pub z0_line: f64,
}

/// Lumped circuits of one channel: the capacitively coupled and the notched
/// variants share resonators, qubit coupling and exchange coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelCircuits {
    pub coupling: QubitCoupling,
    pub capacitive: LumpedPair,
    pub notched: Option<LumpedPair>,
}

impl ChannelCircuitSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("f_q", self.f_q),
            ("g", self.g),
            ("f_r", self.f_r),
            ("f_p", self.f_p),
            ("j", self.j),
            ("kappa_p", self.kappa_p),
            ("c_q", self.c_q),
            ("z_res", self.z_res),
            ("z0_line", self.z0_line),
        ] {
            require_positive(name, v)?;
        }
        Ok(())
    }

    /// Builds both circuit variants; the notched one only when `f_n` is given.
    pub fn build(&self, f_n: Option<f64>) -> Result<ChannelCircuits> {
        self.validate()?;
        let readout = LumpedResonator::from_frequency(self.f_r, self.z_res)?;
        let filter = LumpedResonator::from_frequency(self.f_p, self.z_res)?;
        let (wq, wr, wp) = (angular(self.f_q), angular(self.f_r), angular(self.f_p));
        let j = angular(self.j);
        let c_qr = 2.0 * angular(self.g) * (self.c_q * readout.c).sqrt() / (wq * wr).sqrt();
        let c_ext = (angular(self.kappa_p) * filter.c / (wp * wp * self.z0_line)).sqrt();
        let coupling = QubitCoupling {
            c_q: self.c_q,
            c_qr,
            c_ext,
            z0_line: self.z0_line,
            f_q: self.f_q,
        };
        let c_j_eff = 2.0 * j / (self.z_res * wr * wp);
        let capacitive = LumpedPair::new(readout, filter, CouplerBranch::EquivCap { c_j_eff })?;
        let notched = match f_n {
            None => None,
            Some(f_n) => {
                require_positive("f_n", f_n)?;
                let wn = angular(f_n);
                let wm = (wr * wp).sqrt();
                let bracket = wm / wn - wn / wm;
                if bracket.abs() < 1e-9 {
                    return Err(Error::DegenerateNotch {
                        notch_hz: f_n,
                        resonator_hz: wm / TWO_PI,
                    });
                }
                let zn = self.z_res * wm * bracket / (2.0 * j);
                if !(zn > 0.0) {
                    return Err(Error::domain("the notch must lie below both resonances"));
                }
                Some(LumpedPair::new(
                    readout,
                    filter,
                    CouplerBranch::NotchLC {
                        c_n: 1.0 / (wn * zn),
                        l_n: zn / wn,
                    },
                )?)
            }
        };
        Ok(ChannelCircuits {
            coupling,
            capacitive,
            notched,
        })
    }
}

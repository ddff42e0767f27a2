//! Transfer impedances of a pair of quarter-wave resonators coupled either by
//! a lumped capacitor or by a two-conductor coupled-line section.
//!
//! Each resonator is a shorted line whose open end is a port. The coupled
//! section sits between an open-end segment and a short-end segment on both
//! lines, and both short-end segments leave the section from the same side.
//! Weak coupling and consonant lines are assumed, so both lines inside the
//! section share `z0` and `v` with the uncoupled segments.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, PoleMode, Result};
use crate::units::{angular, C_LIGHT};

/// Per-length properties shared by every line of the pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineParams {
    z0: f64,
    v: f64,
    eps_eff: Option<f64>,
}

impl LineParams {
    pub fn new(z0: f64, v: f64) -> Result<Self> {
        Self::with_eps_eff(z0, v, None)
    }

    /// Builds the line, checking `v = c / sqrt(eps_eff)` when a permittivity
    /// is supplied.
    pub fn with_eps_eff(z0: f64, v: f64, eps_eff: Option<f64>) -> Result<Self> {
        require_positive("line.z0", z0)?;
        require_positive("line.v", v)?;
        if v > C_LIGHT {
            return Err(Error::validation("line.v", "exceeds the speed of light"));
        }
        if let Some(eps) = eps_eff {
            require_positive("line.eps_eff", eps)?;
            if (v * eps.sqrt() - C_LIGHT).abs() / C_LIGHT >= 1e-6 {
                return Err(Error::validation(
                    "line.eps_eff",
                    format!("inconsistent with v = {v} m/s"),
                ));
            }
        }
        Ok(Self { z0, v, eps_eff })
    }

    pub fn z0(&self) -> f64 {
        self.z0
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn eps_eff(&self) -> Option<f64> {
        self.eps_eff
    }

    /// Capacitance to ground per length, `1 / (z0 v)`.
    pub fn c_per_len(&self) -> f64 {
        1.0 / (self.z0 * self.v)
    }

    /// Inductance per length, `z0 / v`.
    pub fn l_per_len(&self) -> f64 {
        self.z0 / self.v
    }
}

/// Parameters of the coupled-line section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MtlCouplerParams {
    /// Coupled-section length (m).
    pub len_c: f64,
    /// Mutual-to-ground capacitance ratio `c_m / c`.
    pub cm_over_c: f64,
    /// Mutual impedance ratio `sqrt(l_m / c_m) / z0`; 1 in a homogeneous medium.
    pub zm_over_z0: f64,
    /// Ground-strip width between the coupled lines (m). Informational.
    pub d: Option<f64>,
}

impl MtlCouplerParams {
    pub fn new(len_c: f64, cm_over_c: f64) -> Result<Self> {
        let p = Self {
            len_c,
            cm_over_c,
            zm_over_z0: 1.0,
            d: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        require_non_negative("coupler.len_c", self.len_c)?;
        if !(self.cm_over_c >= 0.0 && self.cm_over_c < 1.0) {
            return Err(Error::validation(
                "coupler.cm_over_c",
                format!("must lie in [0, 1), got {}", self.cm_over_c),
            ));
        }
        require_positive("coupler.zm_over_z0", self.zm_over_z0)?;
        if let Some(d) = self.d {
            require_non_negative("coupler.d", d)?;
        }
        Ok(())
    }

    pub fn is_homogeneous(&self) -> bool {
        (self.zm_over_z0 - 1.0).abs() <= 1e-12
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Coupler {
    Mtl(MtlCouplerParams),
    /// Lumped coupling capacitor (F) placed between the open- and short-end
    /// segments of both lines.
    Capacitive {
        c_j: f64,
    },
}

/// One readout/filter resonator pair in the distributed picture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledPairGeometry {
    pub l_r_open: f64,
    pub l_r_short: f64,
    pub l_p_open: f64,
    pub l_p_short: f64,
    pub coupler: Coupler,
    pub line: LineParams,
}

impl CoupledPairGeometry {
    pub fn mtl(
        l_r_open: f64,
        l_r_short: f64,
        l_p_open: f64,
        l_p_short: f64,
        coupler: MtlCouplerParams,
        line: LineParams,
    ) -> Result<Self> {
        let g = Self {
            l_r_open,
            l_r_short,
            l_p_open,
            l_p_short,
            coupler: Coupler::Mtl(coupler),
            line,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn capacitive(
        l_r_open: f64,
        l_r_short: f64,
        l_p_open: f64,
        l_p_short: f64,
        c_j: f64,
        line: LineParams,
    ) -> Result<Self> {
        let g = Self {
            l_r_open,
            l_r_short,
            l_p_open,
            l_p_short,
            coupler: Coupler::Capacitive { c_j },
            line,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        require_non_negative("l_r_open", self.l_r_open)?;
        require_non_negative("l_r_short", self.l_r_short)?;
        require_non_negative("l_p_open", self.l_p_open)?;
        require_non_negative("l_p_short", self.l_p_short)?;
        match &self.coupler {
            Coupler::Mtl(p) => p.validate()?,
            Coupler::Capacitive { c_j } => require_non_negative("coupler.c_j", *c_j)?,
        }
        require_positive("l_r (total readout length)", self.l_r())?;
        require_positive("l_p (total filter length)", self.l_p())?;
        Ok(())
    }

    /// Coupled-section length; zero for the capacitive variant.
    pub fn len_c(&self) -> f64 {
        match &self.coupler {
            Coupler::Mtl(p) => p.len_c,
            Coupler::Capacitive { .. } => 0.0,
        }
    }

    pub fn mtl_params(&self) -> Option<&MtlCouplerParams> {
        match &self.coupler {
            Coupler::Mtl(p) => Some(p),
            Coupler::Capacitive { .. } => None,
        }
    }

    pub fn l_r(&self) -> f64 {
        self.l_r_open + self.len_c() + self.l_r_short
    }

    pub fn l_p(&self) -> f64 {
        self.l_p_open + self.len_c() + self.l_p_short
    }

    /// Bare readout quarter-wave frequency (Hz).
    pub fn f_r(&self) -> f64 {
        self.line.v / (4.0 * self.l_r())
    }

    /// Bare filter quarter-wave frequency (Hz).
    pub fn f_p(&self) -> f64 {
        self.line.v / (4.0 * self.l_p())
    }

    /// The same pair with the readout and filter roles swapped.
    pub fn mirrored(&self) -> Self {
        Self {
            l_r_open: self.l_p_open,
            l_r_short: self.l_p_short,
            l_p_open: self.l_r_open,
            l_p_short: self.l_r_short,
            ..*self
        }
    }
}

/// Fundamental quarter-wave resonance `v / (4 length)`.
pub fn lambda4_frequency(length: f64, line: &LineParams) -> Result<f64> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::domain(format!(
            "resonator length must be positive, got {length}"
        )));
    }
    Ok(line.v / (4.0 * length))
}

/// Notch frequency of a coupled-line pair: the half-wave anti-resonance of
/// the path `l_r_short + len_c + l_p_short` between the two shorted ends.
pub fn notch_frequency(geom: &CoupledPairGeometry) -> Result<f64> {
    if geom.mtl_params().is_none() {
        return Err(Error::domain(
            "notch frequency requires a coupled-line coupler",
        ));
    }
    let path = geom.l_r_short + geom.len_c() + geom.l_p_short;
    if !(path > 0.0) {
        return Err(Error::domain("short-end path length is zero"));
    }
    Ok(geom.line.v / (4.0 * path))
}

/// Pole guard applied to every transfer-impedance evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleGuard {
    /// Half-width of the forbidden band around each pole (Hz).
    pub band_hz: f64,
}

impl Default for PoleGuard {
    fn default() -> Self {
        Self { band_hz: 1e3 }
    }
}

impl PoleGuard {
    /// Rejects `f` if it sits within the band of an odd harmonic of `f0`,
    /// where `cos(pi f / (2 f0))` vanishes.
    fn check(&self, f: f64, f0: f64, mode: PoleMode) -> Result<()> {
        let k = ((f / f0 - 1.0) / 2.0).round().max(0.0);
        let pole = (2.0 * k + 1.0) * f0;
        if (f - pole).abs() < self.band_hz {
            return Err(Error::Pole {
                mode,
                freq_hz: f,
                pole_hz: pole,
            });
        }
        Ok(())
    }

    fn check_pair(&self, geom: &CoupledPairGeometry, f: f64) -> Result<()> {
        if !(f > 0.0) || !f.is_finite() {
            return Err(Error::domain(format!(
                "frequency must be positive, got {f}"
            )));
        }
        self.check(f, geom.f_r(), PoleMode::Readout)?;
        self.check(f, geom.f_p(), PoleMode::Filter)
    }

    /// General weak-coupling transfer impedance of a coupled-line pair,
    /// valid for any `zm_over_z0`.
    pub fn z21_general(&self, geom: &CoupledPairGeometry, f: f64) -> Result<Complex64> {
        geom.validate()?;
        let p = geom
            .mtl_params()
            .ok_or_else(|| Error::domain("z21_general requires a coupled-line coupler"))?;
        self.check_pair(geom, f)?;
        let cm = p.cm_over_c * geom.line.c_per_len();
        Ok(Complex64::new(
            0.0,
            weak_coupling_z21(geom, p.len_c, cm, p.zm_over_z0, f),
        ))
    }

    /// Transfer impedance with a lumped coupling capacitor.
    pub fn z21_capacitive(&self, geom: &CoupledPairGeometry, f: f64) -> Result<Complex64> {
        geom.validate()?;
        let Coupler::Capacitive { c_j } = geom.coupler else {
            return Err(Error::domain(
                "z21_capacitive requires a capacitive coupler",
            ));
        };
        self.check_pair(geom, f)?;
        let z0 = geom.line.z0;
        let v = geom.line.v;
        let w = angular(f);
        let num = (w * geom.l_r_short / v).sin() * (w * geom.l_p_short / v).sin();
        let den = cos_quarter(f, geom.f_r()) * cos_quarter(f, geom.f_p());
        Ok(Complex64::new(0.0, -z0 * z0 * num / den * w * c_j))
    }

    /// Homogeneous-medium transfer impedance (`zm_over_z0 = 1`), written in
    /// terms of the notch frequency.
    pub fn z21_homogeneous(&self, geom: &CoupledPairGeometry, f: f64) -> Result<Complex64> {
        geom.validate()?;
        let p = geom
            .mtl_params()
            .ok_or_else(|| Error::domain("z21_homogeneous requires a coupled-line coupler"))?;
        if !p.is_homogeneous() {
            return Err(Error::domain(format!(
                "z21_homogeneous requires zm_over_z0 = 1, got {}",
                p.zm_over_z0
            )));
        }
        self.check_pair(geom, f)?;
        let fn_ = notch_frequency(geom)?;
        let v = geom.line.v;
        let w = angular(f);
        let num = (w * p.len_c / v).sin() * cos_quarter(f, fn_);
        let den = cos_quarter(f, geom.f_p()) * cos_quarter(f, geom.f_r());
        Ok(Complex64::new(0.0, geom.line.z0 * num / den * p.cm_over_c))
    }

    /// Dispatches on the coupler variant.
    pub fn z21(&self, geom: &CoupledPairGeometry, f: f64) -> Result<Complex64> {
        match geom.coupler {
            Coupler::Mtl(_) => self.z21_general(geom, f),
            Coupler::Capacitive { .. } => self.z21_capacitive(geom, f),
        }
    }

    /// Transfer impedance of a pair joined by several coupled sections; the
    /// weak-coupling contributions of the sections add.
    pub fn z21_multi(&self, sections: &[CoupledPairGeometry], f: f64) -> Result<Complex64> {
        let first = sections
            .first()
            .ok_or_else(|| Error::domain("z21_multi needs at least one section"))?;
        let (l_r, l_p) = (first.l_r(), first.l_p());
        let mut sum = Complex64::new(0.0, 0.0);
        for (i, s) in sections.iter().enumerate() {
            if s.line != first.line {
                return Err(Error::domain(format!(
                    "section {i} uses different line constants"
                )));
            }
            if (s.l_r() - l_r).abs() > 1e-12 * l_r || (s.l_p() - l_p).abs() > 1e-12 * l_p {
                return Err(Error::domain(format!(
                    "section {i} does not describe the same pair of resonators"
                )));
            }
            sum += self.z21_general(s, f)?;
        }
        Ok(sum)
    }
}

/// `cos(pi f / (2 f0))`, which vanishes at the quarter-wave resonance `f0`.
#[inline]
pub(crate) fn cos_quarter(f: f64, f0: f64) -> f64 {
    (FRAC_PI_2 * f / f0).cos()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Imaginary part of the weak-coupling transfer impedance for raw section
/// parameters. `cm` is the mutual capacitance per length (F/m). No range
/// checks, so limit tests can push `cm` past the physical range.
pub(crate) fn weak_coupling_z21(
    geom: &CoupledPairGeometry,
    len_c: f64,
    cm: f64,
    zm_over_z0: f64,
    f: f64,
) -> f64 {
    let z0 = geom.line.z0;
    let v = geom.line.v;
    let w = angular(f);
    let zm2 = zm_over_z0 * zm_over_z0;
    let a_plus = (1.0 + zm2)
        * sinc(w * len_c / v)
        * (w * (geom.l_r_short + geom.l_p_short + len_c) / v).cos();
    let a_minus = (1.0 - zm2) * (w * (geom.l_r_short - geom.l_p_short) / v).cos();
    let den = 2.0 * cos_quarter(f, geom.f_r()) * cos_quarter(f, geom.f_p());
    z0 * z0 * w * len_c * cm * (a_plus - a_minus) / den
}

pub fn z21_general(geom: &CoupledPairGeometry, f: f64) -> Result<Complex64> {
    PoleGuard::default().z21_general(geom, f)
}

pub fn z21_capacitive(geom: &CoupledPairGeometry, f: f64) -> Result<Complex64> {
    PoleGuard::default().z21_capacitive(geom, f)
}

pub fn z21_homogeneous(geom: &CoupledPairGeometry, f: f64) -> Result<Complex64> {
    PoleGuard::default().z21_homogeneous(geom, f)
}

pub fn z21_multi(sections: &[CoupledPairGeometry], f: f64) -> Result<Complex64> {
    PoleGuard::default().z21_multi(sections, f)
}

/// Bisection root of a real function that changes sign on `[f_lo, f_hi]`.
///
/// A sign change caused by a pole is detected by the function magnitude
/// growing, rather than shrinking, as the bracket closes.
pub fn find_zero<F>(mut evaluator: F, f_lo: f64, f_hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let (mut lo, mut hi) = if f_lo <= f_hi {
        (f_lo, f_hi)
    } else {
        (f_hi, f_lo)
    };
    let mut y_lo = evaluator(lo)?;
    let y_hi = evaluator(hi)?;
    if y_lo == 0.0 {
        return Ok(lo);
    }
    if y_hi == 0.0 {
        return Ok(hi);
    }
    if y_lo.signum() == y_hi.signum() {
        return Err(Error::Bracket {
            lo_hz: lo,
            hi_hz: hi,
        });
    }
    let scale = y_lo.abs().max(y_hi.abs());
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let y = evaluator(mid)?;
        if y == 0.0 {
            return Ok(mid);
        }
        if y.signum() == y_lo.signum() {
            lo = mid;
            y_lo = y;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    if evaluator(root)?.abs() > scale {
        return Err(Error::Pole {
            mode: PoleMode::Hybrid,
            freq_hz: root,
            pole_hz: root,
        });
    }
    Ok(root)
}

/// Locates the zero of the transfer impedance of a pair on a bracket that
/// must not contain a readout or filter pole.
pub fn find_notch(geom: &CoupledPairGeometry, f_lo: f64, f_hi: f64, tol: f64) -> Result<f64> {
    for (f0, mode) in [
        (geom.f_r(), PoleMode::Readout),
        (geom.f_p(), PoleMode::Filter),
    ] {
        let mut pole = f0;
        while pole < f_hi.max(f_lo) {
            if pole > f_lo.min(f_hi) {
                return Err(Error::Pole {
                    mode,
                    freq_hz: pole,
                    pole_hz: pole,
                });
            }
            pole += 2.0 * f0;
        }
    }
    let guard = PoleGuard::default();
    find_zero(|f| Ok(guard.z21(geom, f)?.im), f_lo, f_hi, tol)
}

/// Strength of the coupled-line interaction relative to the weak-coupling
/// assumption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingDiagnostic {
    pub cm_over_c: f64,
    /// `l_m / l_c`.
    pub lm_over_l: f64,
    /// `sqrt(1 - (l_m / l_c)^2)`; close to 1 when the weak-coupling result holds.
    pub k: f64,
    pub weak: bool,
}

pub const WEAK_COUPLING_LIMIT: f64 = 0.1;

pub fn coupling_diagnostic(p: &MtlCouplerParams) -> CouplingDiagnostic {
    // l_m = (zm z0)^2 c_m and l_c = z0 / v with c = 1 / (z0 v)
    let lm_over_l = p.cm_over_c * p.zm_over_z0 * p.zm_over_z0;
    let k = (1.0 - lm_over_l * lm_over_l).max(0.0).sqrt();
    let weak = p.cm_over_c <= WEAK_COUPLING_LIMIT;
    if !weak {
        log::warn!(
            "cm_over_c = {} exceeds {WEAK_COUPLING_LIMIT}; weak-coupling formulas lose accuracy",
            p.cm_over_c
        );
    }
    CouplingDiagnostic {
        cm_over_c: p.cm_over_c,
        lm_over_l,
        k,
        weak,
    }
}

/// Lowest zero of the capacitive transfer impedance, `min(v / (2 l_r_short),
/// v / (2 l_p_short))` in Hz. Infinite when both taps sit at the shorted ends.
pub fn capacitive_first_zero(geom: &CoupledPairGeometry) -> f64 {
    let zr = if geom.l_r_short > 0.0 {
        geom.line.v / (2.0 * geom.l_r_short)
    } else {
        f64::INFINITY
    };
    let zp = if geom.l_p_short > 0.0 {
        geom.line.v / (2.0 * geom.l_p_short)
    } else {
        f64::INFINITY
    };
    zr.min(zp)
}

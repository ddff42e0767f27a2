//! Lumped-element images of distributed resonator pairs and the exchange
//! coupling between the two modes.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, PoleMode, Result};
use crate::mtl::{cos_quarter, notch_frequency, CoupledPairGeometry, Coupler, LineParams};
use crate::units::{angular, TWO_PI};

/// Parallel LC resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LumpedResonator {
    pub c: f64,
    pub l: f64,
}

impl LumpedResonator {
    pub fn new(c: f64, l: f64) -> Result<Self> {
        require_positive("resonator.c", c)?;
        require_positive("resonator.l", l)?;
        Ok(Self { c, l })
    }

    /// Builds the resonator with resonance `f` (Hz) and impedance `z` (ohm).
    pub fn from_frequency(f: f64, z: f64) -> Result<Self> {
        require_positive("resonator.f", f)?;
        require_positive("resonator.z", z)?;
        let w = angular(f);
        Self::new(1.0 / (w * z), z / w)
    }

    pub fn frequency(&self) -> f64 {
        1.0 / (TWO_PI * (self.l * self.c).sqrt())
    }

    pub fn impedance(&self) -> f64 {
        (self.l / self.c).sqrt()
    }

    pub fn admittance(&self, f: f64) -> Complex64 {
        let w = angular(f);
        Complex64::new(0.0, w * self.c - 1.0 / (w * self.l))
    }
}

/// Coupling element between the two resonator nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CouplerBranch {
    EquivCap {
        c_j_eff: f64,
    },
    /// Parallel LC in series between the nodes; it blocks at its resonance.
    NotchLC {
        c_n: f64,
        l_n: f64,
    },
}

impl CouplerBranch {
    pub fn admittance(&self, f: f64) -> Complex64 {
        let w = angular(f);
        match *self {
            CouplerBranch::EquivCap { c_j_eff } => Complex64::new(0.0, w * c_j_eff),
            CouplerBranch::NotchLC { c_n, l_n } => Complex64::new(0.0, w * c_n - 1.0 / (w * l_n)),
        }
    }

    fn capacitance(&self) -> f64 {
        match *self {
            CouplerBranch::EquivCap { c_j_eff } => c_j_eff,
            CouplerBranch::NotchLC { c_n, .. } => c_n,
        }
    }

    fn inverse_inductance(&self) -> f64 {
        match *self {
            CouplerBranch::EquivCap { .. } => 0.0,
            CouplerBranch::NotchLC { l_n, .. } => 1.0 / l_n,
        }
    }

    /// Blocking frequency of a notch branch (Hz).
    pub fn notch_frequency(&self) -> Option<f64> {
        match *self {
            CouplerBranch::EquivCap { .. } => None,
            CouplerBranch::NotchLC { c_n, l_n } => Some(1.0 / (TWO_PI * (l_n * c_n).sqrt())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LumpedPair {
    pub readout: LumpedResonator,
    pub filter: LumpedResonator,
    pub coupler: CouplerBranch,
}

/// Ratio above which the coupler is no longer small against the resonators.
const WEAK_RATIO: f64 = 0.1;

impl LumpedPair {
    pub fn new(
        readout: LumpedResonator,
        filter: LumpedResonator,
        coupler: CouplerBranch,
    ) -> Result<Self> {
        match coupler {
            CouplerBranch::EquivCap { c_j_eff } => {
                if !(c_j_eff.is_finite() && c_j_eff >= 0.0) {
                    return Err(Error::validation("coupler.c_j_eff", "must be non-negative"));
                }
            }
            CouplerBranch::NotchLC { c_n, l_n } => {
                require_positive("coupler.c_n", c_n)?;
                require_positive("coupler.l_n", l_n)?;
            }
        }
        let pair = Self {
            readout,
            filter,
            coupler,
        };
        for w in pair.weak_coupling_warnings() {
            log::warn!("{w}");
        }
        Ok(pair)
    }

    /// Human-readable reasons the weak-coupling picture may not hold.
    pub fn weak_coupling_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let c_min = self.readout.c.min(self.filter.c);
        let cc = self.coupler.capacitance();
        if cc / c_min > WEAK_RATIO {
            out.push(format!(
                "coupler capacitance is {:.3} of the resonator capacitance",
                cc / c_min
            ));
        }
        if let CouplerBranch::NotchLC { l_n, .. } = self.coupler {
            let l_max = self.readout.l.max(self.filter.l);
            if l_n / l_max < 1.0 / WEAK_RATIO {
                out.push(format!(
                    "coupler inductance is only {:.3} times the resonator inductance",
                    l_n / l_max
                ));
            }
        }
        out
    }

    /// The two normal-mode frequencies of the isolated lumped pair (Hz),
    /// ascending.
    pub fn mode_frequencies(&self) -> [f64; 2] {
        let cc = self.coupler.capacitance();
        let gc = self.coupler.inverse_inductance();
        // Nodal problem det(G - w^2 C) = 0 with capacitance matrix C and
        // inverse-inductance matrix G.
        let (c11, c22, c12) = (self.readout.c + cc, self.filter.c + cc, -cc);
        let (g11, g22, g12) = (1.0 / self.readout.l + gc, 1.0 / self.filter.l + gc, -gc);
        let a = c11 * c22 - c12 * c12;
        let b = -(g11 * c22 + g22 * c11 - 2.0 * g12 * c12);
        let c = g11 * g22 - g12 * g12;
        let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
        let q = -0.5 * (b - disc);
        let (x1, x2) = (q / a, c / q);
        let lo = x1.min(x2).sqrt() / TWO_PI;
        let hi = x1.max(x2).sqrt() / TWO_PI;
        [lo, hi]
    }
}

/// Impedance matrix of a reciprocal two-port.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPortZ {
    pub z11: Complex64,
    pub z22: Complex64,
    pub z21: Complex64,
}

/// Parallel LC image of a quarter-wave line of the given length.
pub fn map_resonator(length: f64, line: &LineParams) -> Result<LumpedResonator> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::domain(format!(
            "resonator length must be positive, got {length}"
        )));
    }
    let (z0, v) = (line.z0(), line.v());
    LumpedResonator::new(length / (2.0 * z0 * v), 8.0 * z0 * length / (PI * PI * v))
}

/// Lumped impedance `4 z0 / pi` of a mapped quarter-wave resonator.
pub fn mapped_impedance(line: &LineParams) -> f64 {
    4.0 * line.z0() / PI
}

/// `sin(pi l_short / (2 l_total))`, the standing-wave voltage at the tap.
fn tap_factor(l_short: f64, l_total: f64) -> f64 {
    (FRAC_PI_2 * l_short / l_total).sin()
}

/// Lumped coupling capacitance equivalent to `c_j` placed at the taps.
pub fn equivalent_cap(c_j: f64, geom: &CoupledPairGeometry) -> Result<f64> {
    geom.validate()?;
    Ok(c_j * tap_factor(geom.l_r_short, geom.l_r()) * tap_factor(geom.l_p_short, geom.l_p()))
}

/// Exchange coupling of a capacitively coupled pair, `J / 2 pi` in Hz.
pub fn j_capacitive(geom: &CoupledPairGeometry, c_j: f64) -> Result<f64> {
    let c_eff = equivalent_cap(c_j, geom)?;
    let (wr, wp) = (angular(geom.f_r()), angular(geom.f_p()));
    let j = 2.0 / PI * geom.line.z0() * wr * wp * c_eff;
    Ok(j / TWO_PI)
}

/// Characteristic impedance `sqrt(L_n / C_n)` of the notch branch that
/// reproduces the coupled-line transfer impedance and its slope at the notch.
pub fn notch_impedance(geom: &CoupledPairGeometry) -> Result<f64> {
    geom.validate()?;
    let p = geom
        .mtl_params()
        .ok_or_else(|| Error::domain("notch impedance requires a coupled-line coupler"))?;
    let fn_ = notch_frequency(geom)?;
    let (fr, fp) = (geom.f_r(), geom.f_p());
    for f0 in [fr, fp] {
        if ((fn_ - f0) / f0).abs() < 1e-9 {
            return Err(Error::DegenerateNotch {
                notch_hz: fn_,
                resonator_hz: f0,
            });
        }
    }
    let s = (angular(fn_) * p.len_c / geom.line.v()).sin();
    if p.cm_over_c == 0.0 || s == 0.0 {
        return Err(Error::UnboundedCoupler);
    }
    let num = cos_quarter(fn_, fr) * cos_quarter(fn_, fp);
    let den = (fr / fn_ - fn_ / fr) * (fp / fn_ - fn_ / fp);
    Ok(geom.line.z0() * 64.0 / PI.powi(3) * num / den / (p.cm_over_c * s))
}

/// Parallel LC branch resonating at the notch frequency.
pub fn notch_branch(geom: &CoupledPairGeometry) -> Result<CouplerBranch> {
    let zn = notch_impedance(geom)?;
    if !(zn > 0.0) {
        return Err(Error::domain(format!(
            "notch impedance {zn} ohm is not positive; the notch lies between the two resonances"
        )));
    }
    let wn = angular(notch_frequency(geom)?);
    Ok(CouplerBranch::NotchLC {
        c_n: 1.0 / (wn * zn),
        l_n: zn / wn,
    })
}

/// Formula used by [`j_mtl`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum JFormula {
    /// Leading order in the readout-filter detuning, evaluated at the mean
    /// frequency.
    #[default]
    Expanded,
    /// Branch-impedance form without the detuning expansion.
    Exact,
}

/// Exchange coupling of a coupled-line pair, `J / 2 pi` in Hz.
pub fn j_mtl(geom: &CoupledPairGeometry, formula: JFormula) -> Result<f64> {
    geom.validate()?;
    let p = geom
        .mtl_params()
        .ok_or_else(|| Error::domain("j_mtl requires a coupled-line coupler"))?;
    let fn_ = notch_frequency(geom)?;
    let (fr, fp) = (geom.f_r(), geom.f_p());
    let fbar = 0.5 * (fr + fp);
    if ((fn_ - fbar) / fbar).abs() < 1e-9 {
        return Err(Error::DegenerateNotch {
            notch_hz: fn_,
            resonator_hz: fbar,
        });
    }
    if (fr - fp).abs() / fn_ > 0.1 {
        log::warn!(
            "readout-filter detuning is {:.3} of the notch frequency; the expansion loses accuracy",
            (fr - fp).abs() / fn_
        );
    }
    if p.cm_over_c == 0.0 {
        return Ok(0.0);
    }
    match formula {
        JFormula::Expanded => {
            let wbar = angular(fbar);
            let x = fbar / fn_ - fn_ / fbar;
            let cos = cos_quarter(fn_, fbar);
            let s = (angular(fn_) * p.len_c / geom.line.v()).sin();
            let j = wbar * PI * PI / 32.0 * x.powi(3) / (cos * cos) * p.cm_over_c * s;
            Ok(j / TWO_PI)
        }
        JFormula::Exact => {
            let zn = match notch_impedance(geom) {
                Err(Error::UnboundedCoupler) => return Ok(0.0),
                other => other?,
            };
            let z = mapped_impedance(&geom.line);
            let wm = angular((fr * fp).sqrt());
            let wn = angular(fn_);
            let j = z / (2.0 * zn) * wm * (wm / wn - wn / wm);
            Ok(j / TWO_PI)
        }
    }
}

/// Exchange coupling of a lumped pair from its element values, `J / 2 pi` in Hz.
pub fn j_lumped(pair: &LumpedPair) -> f64 {
    let (zr, zp) = (pair.readout.impedance(), pair.filter.impedance());
    let wr = angular(pair.readout.frequency());
    let wp = angular(pair.filter.frequency());
    let j = match pair.coupler {
        CouplerBranch::EquivCap { c_j_eff } => 0.5 * (zr * zp).sqrt() * wr * wp * c_j_eff,
        CouplerBranch::NotchLC { c_n, l_n } => {
            let zn = (l_n / c_n).sqrt();
            let wn = 1.0 / (l_n * c_n).sqrt();
            let wm = (wr * wp).sqrt();
            (zr * zp).sqrt() / (2.0 * zn) * wm * (wm / wn - wn / wm)
        }
    };
    j / TWO_PI
}

/// Equivalent lumped circuit of a distributed pair.
pub fn lumped_pair(geom: &CoupledPairGeometry) -> Result<LumpedPair> {
    geom.validate()?;
    let readout = map_resonator(geom.l_r(), &geom.line)?;
    let filter = map_resonator(geom.l_p(), &geom.line)?;
    let coupler = match geom.coupler {
        Coupler::Capacitive { c_j } => CouplerBranch::EquivCap {
            c_j_eff: equivalent_cap(c_j, geom)?,
        },
        Coupler::Mtl(_) => notch_branch(geom)?,
    };
    LumpedPair::new(readout, filter, coupler)
}

/// Impedance matrix of the lumped pair by nodal analysis, with a pole guard
/// of `band_hz` around both lumped normal modes.
pub fn two_port_guarded(pair: &LumpedPair, f: f64, band_hz: f64) -> Result<TwoPortZ> {
    if !(f > 0.0) || !f.is_finite() {
        return Err(Error::domain(format!(
            "frequency must be positive, got {f}"
        )));
    }
    for m in pair.mode_frequencies() {
        if (f - m).abs() < band_hz {
            return Err(Error::Pole {
                mode: PoleMode::Hybrid,
                freq_hz: f,
                pole_hz: m,
            });
        }
    }
    let yr = pair.readout.admittance(f);
    let yp = pair.filter.admittance(f);
    let yc = pair.coupler.admittance(f);
    let det = (yr + yc) * (yp + yc) - yc * yc;
    if det.norm() == 0.0 {
        return Err(Error::Singular("nodal admittance matrix".into()));
    }
    Ok(TwoPortZ {
        z11: (yp + yc) / det,
        z22: (yr + yc) / det,
        z21: yc / det,
    })
}

pub fn two_port(pair: &LumpedPair, f: f64) -> Result<TwoPortZ> {
    two_port_guarded(pair, f, 1e3)
}

/// Transfer impedance of the lumped pair.
pub fn z21_lumped(pair: &LumpedPair, f: f64) -> Result<Complex64> {
    Ok(two_port(pair, f)?.z21)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mtl::{z21_homogeneous, MtlCouplerParams};
    use crate::units::um;
    use approx::assert_relative_eq;

    fn line() -> LineParams {
        LineParams::new(66.0, 1.19e8).unwrap()
    }

    fn table_mtl() -> CoupledPairGeometry {
        let coupler = MtlCouplerParams::new(um(318.0), 8.5e-12 / line().c_per_len()).unwrap();
        CoupledPairGeometry::mtl(
            um(974.0),
            um(1617.0),
            um(759.0),
            um(1659.0),
            coupler,
            line(),
        )
        .unwrap()
    }

    fn table_cap() -> CoupledPairGeometry {
        CoupledPairGeometry::capacitive(
            um(1133.0),
            um(1776.0),
            um(918.0),
            um(1818.0),
            1.4e-15,
            line(),
        )
        .unwrap()
    }

    #[test]
    fn mapped_resonator_identities() {
        let l = line();
        let r = map_resonator(um(2909.0), &l).unwrap();
        assert_relative_eq!(r.impedance(), 4.0 * 66.0 / PI, max_relative = 1e-12);
        // The lumped resonance is exactly the quarter-wave frequency.
        assert_relative_eq!(
            r.frequency(),
            l.v() / (4.0 * um(2909.0)),
            max_relative = 1e-12
        );
        assert_relative_eq!(r.c, 185.2e-15, max_relative = 1e-3);
        assert_relative_eq!(r.l, 1.308e-9, max_relative = 1e-3);
        assert!(map_resonator(0.0, &l).is_err());
    }

    #[test]
    fn equivalent_cap_limits() {
        let l = line();
        let short =
            CoupledPairGeometry::capacitive(um(2000.0), 0.0, um(100.0), um(1900.0), 1e-15, l)
                .unwrap();
        assert_eq!(equivalent_cap(1e-15, &short).unwrap(), 0.0);
        let open =
            CoupledPairGeometry::capacitive(0.0, um(2000.0), 0.0, um(1900.0), 1e-15, l).unwrap();
        assert_relative_eq!(
            equivalent_cap(1e-15, &open).unwrap(),
            1e-15,
            max_relative = 1e-15
        );
        let c = equivalent_cap(1.4e-15, &table_cap()).unwrap();
        assert_relative_eq!(c, 0.990e-15, max_relative = 1e-3);
    }

    #[test]
    fn j_capacitive_table_row() {
        let j = j_capacitive(&table_cap(), 1.4e-15).unwrap();
        assert!((j - 30e6).abs() / 30e6 < 0.05, "{j}");
        assert_relative_eq!(j, 29.08e6, max_relative = 2e-3);
        assert_eq!(j_capacitive(&table_cap(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn j_capacitive_matches_eigen_splitting() {
        // Degenerate pair so that half the splitting is J. The bare-frequency
        // coupling differs from half the splitting by 1.5 C_eff / C.
        let l = line();
        for c_j in [0.5e-15, 1.0e-15, 1.4e-15, 2.0e-15] {
            let g = CoupledPairGeometry::capacitive(
                um(1100.0),
                um(1800.0),
                um(1100.0),
                um(1800.0),
                c_j,
                l,
            )
            .unwrap();
            let pair = lumped_pair(&g).unwrap();
            let [lo, hi] = pair.mode_frequencies();
            let j = j_capacitive(&g, c_j).unwrap();
            let rel = ((hi - lo) / 2.0 - j).abs() / j;
            let ratio = equivalent_cap(c_j, &g).unwrap() / pair.readout.c;
            assert!(rel < 1.5 * ratio * 1.05, "{c_j}: {rel}");
            if c_j <= 1.4e-15 {
                assert!(rel < 0.01, "{c_j}: {rel}");
            }
            assert_relative_eq!(j_lumped(&pair), j, max_relative = 1e-12);
        }
    }

    #[test]
    fn notch_branch_construction() {
        let g = table_mtl();
        let b = notch_branch(&g).unwrap();
        assert_relative_eq!(
            b.notch_frequency().unwrap(),
            notch_frequency(&g).unwrap(),
            max_relative = 1e-12
        );
        let zn = notch_impedance(&g).unwrap();
        assert!(zn > 0.0 && zn.is_finite());
        let mut half = g;
        if let Coupler::Mtl(p) = &mut half.coupler {
            p.cm_over_c *= 0.5;
        }
        assert_relative_eq!(
            notch_impedance(&half).unwrap(),
            2.0 * zn,
            max_relative = 1e-12
        );
        let mut zero = g;
        if let Coupler::Mtl(p) = &mut zero.coupler {
            p.cm_over_c = 0.0;
        }
        assert_eq!(notch_impedance(&zero), Err(Error::UnboundedCoupler));
    }

    #[test]
    fn lumped_matches_distributed_at_notch() {
        let g = table_mtl();
        let pair = lumped_pair(&g).unwrap();
        let fn_ = notch_frequency(&g).unwrap();
        assert!(z21_lumped(&pair, fn_).unwrap().norm() < 1e-9);
        let h = 1.0;
        let d_lump = (z21_lumped(&pair, fn_ + h).unwrap().im
            - z21_lumped(&pair, fn_ - h).unwrap().im)
            / (2.0 * h);
        let d_dist = (z21_homogeneous(&g, fn_ + h).unwrap().im
            - z21_homogeneous(&g, fn_ - h).unwrap().im)
            / (2.0 * h);
        assert_relative_eq!(d_lump, d_dist, max_relative = 1e-6);
    }

    #[test]
    fn j_mtl_table_row() {
        let g = table_mtl();
        let j = j_mtl(&g, JFormula::Expanded).unwrap();
        assert!((j - 30e6).abs() / 30e6 < 0.10, "{j}");
        let je = j_mtl(&g, JFormula::Exact).unwrap();
        assert!((je - j).abs() / j < 0.01, "{je} {j}");
        let pair = lumped_pair(&g).unwrap();
        assert_relative_eq!(j_lumped(&pair), je, max_relative = 1e-9);
    }

    #[test]
    fn j_mtl_zero_without_coupling() {
        let mut g = table_mtl();
        if let Coupler::Mtl(p) = &mut g.coupler {
            p.cm_over_c = 0.0;
        }
        assert_eq!(j_mtl(&g, JFormula::Expanded).unwrap(), 0.0);
        assert_eq!(j_mtl(&g, JFormula::Exact).unwrap(), 0.0);
    }

    #[test]
    fn equiv_cap_low_frequency_asymptote() {
        let pair = lumped_pair(&table_cap()).unwrap();
        let CouplerBranch::EquivCap { c_j_eff } = pair.coupler else {
            unreachable!()
        };
        let f = 1e6;
        let w = angular(f);
        let z = z21_lumped(&pair, f).unwrap();
        // Z_r Z_p Y_c with Z = i w L at low frequency.
        let expect = -(w * pair.readout.l) * (w * pair.filter.l) * w * c_j_eff;
        assert_relative_eq!(z.im, expect, max_relative = 1e-6);
        let z2 = z21_lumped(&pair, 2.0 * f).unwrap();
        assert_relative_eq!(z2.im / z.im, 8.0, max_relative = 1e-5);
    }

    #[test]
    fn lumped_pole_guard() {
        let pair = lumped_pair(&table_mtl()).unwrap();
        let [lo, _] = pair.mode_frequencies();
        assert!(matches!(
            two_port(&pair, lo + 10.0),
            Err(Error::Pole { .. })
        ));
    }
}

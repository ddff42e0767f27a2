//! Drive-power calibration from ac Stark shifts and readout error analytics.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector2, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::mux::{system_matrix, JointState, MuxNetwork, QubitState};
use crate::units::{angular, HBAR};

/// Photon number from a measured ac Stark shift `delta_ac = 2 chi n`.
pub fn photons_from_stark(delta_ac: f64, chi: f64) -> Result<f64> {
    if chi == 0.0 || !chi.is_finite() {
        return Err(Error::domain(
            "dispersive shift must be non-zero and finite",
        ));
    }
    if !delta_ac.is_finite() {
        return Err(Error::domain("Stark shift must be finite"));
    }
    if delta_ac != 0.0 && delta_ac.signum() != chi.signum() {
        log::warn!("Stark shift {delta_ac} Hz and dispersive shift {chi} Hz have opposite signs");
    }
    Ok(delta_ac / (2.0 * chi))
}

/// Incident drive that produces a given steady-state readout amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncidentDrive {
    /// Incident amplitude in sqrt(photons / s).
    pub s_in: Complex64,
    /// Incident power (W).
    pub power: f64,
}

/// Inverts the steady state of the coupled-mode equations: the drive at
/// `f_d` that leaves readout resonator `channel` with amplitude `r_target`.
pub fn incident_from_resonator(
    net: &MuxNetwork,
    state: &JointState,
    channel: usize,
    f_d: f64,
    r_target: Complex64,
) -> Result<IncidentDrive> {
    if channel >= net.len() {
        return Err(Error::validation(
            "channel",
            format!("channel index {channel} out of range"),
        ));
    }
    let sys = system_matrix(net, state, f_d)?;
    let unit = sys.steady_state(Complex64::new(1.0, 0.0))?;
    let response = unit[net.len() + channel];
    if r_target.norm() == 0.0 {
        return Ok(IncidentDrive {
            s_in: Complex64::new(0.0, 0.0),
            power: 0.0,
        });
    }
    if response.norm() == 0.0 || !response.norm().is_finite() {
        return Err(Error::Singular(format!(
            "readout resonator {channel} does not respond to a drive at {f_d} Hz"
        )));
    }
    let s_in = r_target / response;
    Ok(IncidentDrive {
        s_in,
        power: HBAR * angular(f_d) * s_in.norm_sqr(),
    })
}

/// Ordinary least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub stderr_intercept: f64,
    pub stderr_slope: f64,
}

/// Fits Stark-shifted qubit frequencies against incident power; the
/// intercept is the undriven qubit frequency.
pub fn stark_linear_fit(points: &[(f64, f64)]) -> Result<LinearFit> {
    if points.len() < 3 {
        return Err(Error::validation(
            "points",
            "at least three points are needed",
        ));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::validation("points", "all values must be finite"));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= f64::EPSILON * points.iter().map(|p| p.0 * p.0).sum::<f64>() {
        return Err(Error::RankDeficient("all powers are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let s2 = rss / (n - 2.0);
    Ok(LinearFit {
        intercept,
        slope,
        stderr_intercept: (s2 * (1.0 / n + mx * mx / sxx)).sqrt(),
        stderr_slope: (s2 / sxx).sqrt(),
    })
}

/// Relaxation time implied by the qubit drive strength `omega` (Hz) reached
/// with incident power `power` (W) at `f_d`: `T1 = 4 P / (Omega^2 hbar w_d)`.
pub fn t1_from_drive(power: f64, omega: f64, f_d: f64) -> Result<f64> {
    require_non_negative("power", power)?;
    require_positive("f_d", f_d)?;
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::domain("drive amplitude must be positive"));
    }
    Ok(4.0 * power / (angular(omega).powi(2) * HBAR * angular(f_d)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RabiTransition {
    GE,
    EF,
}

/// Drive amplitude from a measured Rabi frequency. The e-f transition
/// matrix element is larger by `sqrt 2`.
pub fn rabi_to_omega(f_rabi: f64, transition: RabiTransition) -> f64 {
    match transition {
        RabiTransition::GE => f_rabi,
        RabiTransition::EF => f_rabi / std::f64::consts::SQRT_2,
    }
}

/// Misassignment floor from overlapping Gaussian histograms.
pub fn separation_error(snr: f64) -> Result<f64> {
    if snr.is_nan() || snr < 0.0 {
        return Err(Error::domain("SNR must be non-negative"));
    }
    Ok(0.5 * libm::erfc(snr / 8f64.sqrt()))
}

/// Buffer between the two measurements of the QND sequence (s).
pub const DEFAULT_TAU_BUFFER: f64 = 116e-9;

/// Relaxation-limited assignment and QND errors.
pub fn coherence_limits(tau_meas: f64, tau_buffer: f64, t1: f64) -> Result<(f64, f64)> {
    require_positive("tau_meas", tau_meas)?;
    require_non_negative("tau_buffer", tau_buffer)?;
    if !(t1 > 0.0) {
        return Err(Error::validation("t1", "must be positive"));
    }
    let cl = tau_meas / (2.0 * t1);
    Ok((cl, cl + tau_buffer / (2.0 * t1)))
}

/// Second-measurement outcome counts conditioned on the first outcome.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionalCounts {
    pub g1_g2: u64,
    pub g1_e2: u64,
    pub e1_g2: u64,
    pub e1_e2: u64,
}

/// Counts from the sequences without and with a pi pulse between the two
/// measurements.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceCounts {
    pub no_pulse: ConditionalCounts,
    pub pi_pulse: ConditionalCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fidelities {
    pub f: f64,
    pub f_q: f64,
    /// Averages of the per-probability Wilson bounds.
    pub f_ci: Interval,
    pub f_q_ci: Interval,
}

const WILSON_Z: f64 = 1.959_963_984_540_054;

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> Interval {
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let z2 = WILSON_Z * WILSON_Z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = WILSON_Z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Interval {
        lo: (centre - half).max(0.0),
        hi: (centre + half).min(1.0),
    }
}

fn conditional(hit: u64, miss: u64, cell: &str) -> Result<(f64, Interval)> {
    let n = hit + miss;
    if n == 0 {
        return Err(Error::EmptyCell(cell.into()));
    }
    Ok((hit as f64 / n as f64, wilson_interval(hit, n)))
}

/// Assignment fidelity `[P_0(g2|g1) + P_pi(e2|g1)] / 2` and QND fidelity
/// `[P_0(g2|g1) + P_pi(e2|e1)] / 2`.
pub fn fidelities(counts: &SequenceCounts) -> Result<Fidelities> {
    let (p0g, c0g) = conditional(counts.no_pulse.g1_g2, counts.no_pulse.g1_e2, "no_pulse.g1")?;
    let (ppg, cpg) = conditional(counts.pi_pulse.g1_e2, counts.pi_pulse.g1_g2, "pi_pulse.g1")?;
    let (ppe, cpe) = conditional(counts.pi_pulse.e1_e2, counts.pi_pulse.e1_g2, "pi_pulse.e1")?;
    let avg = |a: Interval, b: Interval| Interval {
        lo: 0.5 * (a.lo + b.lo),
        hi: 0.5 * (a.hi + b.hi),
    };
    Ok(Fidelities {
        f: 0.5 * (p0g + ppg),
        f_q: 0.5 * (p0g + ppe),
        f_ci: avg(c0g, cpg),
        f_q_ci: avg(c0g, cpe),
    })
}

/// Readout error budget for one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub snr: f64,
    pub eps_sep: f64,
    pub eps_cl: f64,
    pub eps_cl_q: f64,
    pub f: Option<f64>,
    pub f_q: Option<f64>,
}

pub fn error_budget(
    snr: f64,
    tau_meas: f64,
    tau_buffer: f64,
    t1: f64,
    counts: Option<&SequenceCounts>,
) -> Result<ErrorBudget> {
    let (eps_cl, eps_cl_q) = coherence_limits(tau_meas, tau_buffer, t1)?;
    let fid = counts.map(fidelities).transpose()?;
    Ok(ErrorBudget {
        snr,
        eps_sep: separation_error(snr)?,
        eps_cl,
        eps_cl_q,
        f: fid.map(|x| x.f),
        f_q: fid.map(|x| x.f_q),
    })
}

/// One integrated single-shot measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqShot {
    pub prepared: QubitState,
    pub i: f64,
    pub q: f64,
}

/// Fitted bivariate normal distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bivariate {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

impl Bivariate {
    fn fit(points: &[[f64; 2]]) -> Result<Self> {
        let n = points.len() as f64;
        let mut m = Vector2::zeros();
        for p in points {
            m += Vector2::new(p[0], p[1]);
        }
        m /= n;
        let mut c = Matrix2::zeros();
        for p in points {
            let d = Vector2::new(p[0], p[1]) - m;
            c += d * d.transpose();
        }
        c /= n - 1.0;
        let det = c.determinant();
        if !(det > 1e-12 * c.trace().powi(2)) {
            return Err(Error::DegenerateCovariance(format!(
                "covariance determinant {det:e} is not positive"
            )));
        }
        Ok(Self {
            mean: [m[0], m[1]],
            cov: [[c[(0, 0)], c[(0, 1)]], [c[(1, 0)], c[(1, 1)]]],
        })
    }

    /// Squared Mahalanobis distance of a point from the mean.
    pub fn mahalanobis2(&self, p: [f64; 2]) -> f64 {
        let c = Matrix2::new(
            self.cov[0][0],
            self.cov[0][1],
            self.cov[1][0],
            self.cov[1][1],
        );
        let inv = c.try_inverse().unwrap_or_else(Matrix2::zeros);
        let d = Vector2::new(p[0] - self.mean[0], p[1] - self.mean[1]);
        (d.transpose() * inv * d)[0]
    }
}

/// Squared radius of the bivariate confidence ellipse holding the same
/// probability as a two-sided `k sigma` interval in one dimension.
pub fn ellipse_radius2(k_sigma: f64) -> f64 {
    let outside = libm::erfc(k_sigma / std::f64::consts::SQRT_2);
    -2.0 * outside.ln()
}

/// Histogram statistics along the axis through both means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotStats {
    pub mu_g: Complex64,
    pub mu_e: Complex64,
    pub sigma_g: f64,
    pub sigma_e: f64,
    pub n_g: usize,
    pub n_e: usize,
}

impl ShotStats {
    /// `|mu_g - mu_e| / ((sigma_g + sigma_e) / 2)`.
    pub fn snr(&self) -> f64 {
        (self.mu_g - self.mu_e).norm() / (0.5 * (self.sigma_g + self.sigma_e))
    }
}

/// Linear two-class logistic discriminator `P(e) = 1 / (1 + exp(-w.x))`
/// with `x = (1, i, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discriminator {
    pub weights: [f64; 3],
}

impl Discriminator {
    pub fn classify(&self, i: f64, q: f64) -> QubitState {
        let z = self.weights[0] + self.weights[1] * i + self.weights[2] * q;
        if z > 0.0 {
            QubitState::E
        } else {
            QubitState::G
        }
    }

    /// Trains by iteratively reweighted least squares with a small ridge
    /// term, which keeps the weights finite on separable data.
    pub fn train(shots: &[IqShot]) -> Result<Self> {
        if shots.is_empty() {
            return Err(Error::validation("shots", "no training shots"));
        }
        let n = shots.len();
        let mean = shots
            .iter()
            .fold([0.0, 0.0], |a, s| [a[0] + s.i, a[1] + s.q]);
        let mean = [mean[0] / n as f64, mean[1] / n as f64];
        let var = shots.iter().fold([0.0, 0.0], |a, s| {
            [
                a[0] + (s.i - mean[0]).powi(2),
                a[1] + (s.q - mean[1]).powi(2),
            ]
        });
        let sd = [
            (var[0] / n as f64).sqrt().max(f64::MIN_POSITIVE),
            (var[1] / n as f64).sqrt().max(f64::MIN_POSITIVE),
        ];
        let x = DMatrix::from_fn(n, 3, |r, c| match c {
            0 => 1.0,
            1 => (shots[r].i - mean[0]) / sd[0],
            _ => (shots[r].q - mean[1]) / sd[1],
        });
        let y = DVector::from_fn(n, |r, _| (shots[r].prepared == QubitState::E) as u8 as f64);
        let ridge = 1e-3;
        let mut w = Vector3::zeros();
        for _ in 0..50 {
            let z = &x * w;
            let p = z.map(|v| 1.0 / (1.0 + (-v).exp()));
            let s = p.map(|v| (v * (1.0 - v)).max(1e-12));
            let mut h = Matrix3::identity() * ridge;
            let mut g = -w * ridge;
            for r in 0..n {
                let xr = Vector3::new(x[(r, 0)], x[(r, 1)], x[(r, 2)]);
                h += xr * xr.transpose() * s[r];
                g += xr * (y[r] - p[r]);
            }
            let step = h
                .lu()
                .solve(&g)
                .ok_or_else(|| Error::Singular("logistic-regression Hessian".into()))?;
            w += step;
            if step.norm() < 1e-10 * (1.0 + w.norm()) {
                break;
            }
        }
        let w1 = w[1] / sd[0];
        let w2 = w[2] / sd[1];
        Ok(Self {
            weights: [w[0] - w1 * mean[0] - w2 * mean[1], w1, w2],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierKind {
    /// Misassigned and outside both confidence ellipses.
    MisassignedOutside,
    /// Correctly assigned but outside the ellipse of the assigned state.
    AssignedOutside,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outlier {
    pub index: usize,
    pub kind: OutlierKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotAnalysis {
    pub stats: ShotStats,
    pub g_fit: Bivariate,
    pub e_fit: Bivariate,
    pub discriminator: Discriminator,
    /// Mean misassignment probability on the held-out shots.
    pub assignment_error: f64,
    pub outliers: Vec<Outlier>,
    /// Fraction of all shots outside both confidence ellipses.
    pub leakage_fraction: f64,
}

/// Minimum number of shots per prepared state.
pub const MIN_SHOTS: usize = 100;

/// Default number of shots used to train the discriminator.
pub const DEFAULT_TRAINING_SHOTS: usize = 20_000;

/// Fits both shot clouds, trains the discriminator on the leading shots of
/// each state (half of `n_train` each, at most half of that state's shots)
/// and classifies the rest; flags shots outside the `k_sigma` ellipses.
pub fn shot_analysis(shots: &[IqShot], n_train: usize, k_sigma: f64) -> Result<ShotAnalysis> {
    require_positive("k_sigma", k_sigma)?;
    let by_state = |s: QubitState| -> Vec<usize> {
        (0..shots.len())
            .filter(|&k| shots[k].prepared == s)
            .collect()
    };
    let gi = by_state(QubitState::G);
    let ei = by_state(QubitState::E);
    for (name, idx) in [("g", &gi), ("e", &ei)] {
        if idx.len() < MIN_SHOTS {
            return Err(Error::validation(
                "shots",
                format!(
                    "{} shots prepared in {name}; at least {MIN_SHOTS} are needed",
                    idx.len()
                ),
            ));
        }
    }
    if shots.iter().any(|s| !s.i.is_finite() || !s.q.is_finite()) {
        return Err(Error::validation("shots", "IQ values must be finite"));
    }
    let pts = |idx: &[usize]| -> Vec<[f64; 2]> {
        idx.iter().map(|&k| [shots[k].i, shots[k].q]).collect()
    };
    let g_fit = Bivariate::fit(&pts(&gi))?;
    let e_fit = Bivariate::fit(&pts(&ei))?;

    let mu_g = Complex64::new(g_fit.mean[0], g_fit.mean[1]);
    let mu_e = Complex64::new(e_fit.mean[0], e_fit.mean[1]);
    let axis = mu_e - mu_g;
    let axis = if axis.norm() > 0.0 {
        axis / axis.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let project_sd = |b: &Bivariate| -> f64 {
        let (a0, a1) = (axis.re, axis.im);
        (a0 * a0 * b.cov[0][0] + 2.0 * a0 * a1 * b.cov[0][1] + a1 * a1 * b.cov[1][1]).sqrt()
    };
    let stats = ShotStats {
        mu_g,
        mu_e,
        sigma_g: project_sd(&g_fit),
        sigma_e: project_sd(&e_fit),
        n_g: gi.len(),
        n_e: ei.len(),
    };

    let half = n_train / 2;
    let tg = half.min(gi.len() / 2);
    let te = half.min(ei.len() / 2);
    let training: Vec<IqShot> = gi[..tg]
        .iter()
        .chain(&ei[..te])
        .map(|&k| shots[k])
        .collect();
    let discriminator = Discriminator::train(&training)?;
    let err_rate = |idx: &[usize]| -> f64 {
        let wrong = idx
            .iter()
            .filter(|&&k| discriminator.classify(shots[k].i, shots[k].q) != shots[k].prepared)
            .count();
        wrong as f64 / idx.len() as f64
    };
    let assignment_error = 0.5 * (err_rate(&gi[tg..]) + err_rate(&ei[te..]));

    let r2 = ellipse_radius2(k_sigma);
    let mut outliers = Vec::new();
    let mut outside_both = 0usize;
    for (k, s) in shots.iter().enumerate() {
        let p = [s.i, s.q];
        let (dg, de) = (g_fit.mahalanobis2(p), e_fit.mahalanobis2(p));
        let assigned = discriminator.classify(s.i, s.q);
        let both = dg > r2 && de > r2;
        if both {
            outside_both += 1;
        }
        let own = if assigned == QubitState::G { dg } else { de };
        if assigned != s.prepared {
            if both {
                outliers.push(Outlier {
                    index: k,
                    kind: OutlierKind::MisassignedOutside,
                });
            }
        } else if own > r2 {
            outliers.push(Outlier {
                index: k,
                kind: OutlierKind::AssignedOutside,
            });
        }
    }
    Ok(ShotAnalysis {
        stats,
        g_fit,
        e_fit,
        discriminator,
        assignment_error,
        outliers,
        leakage_fraction: outside_both as f64 / shots.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn stark_inversion() {
        assert_eq!(photons_from_stark(-18.8e6, -9.4e6).unwrap(), 1.0);
        assert!(photons_from_stark(1.0, 0.0).is_err());
        let n = photons_from_stark(2.0 * -7.8e6 * 1.05 * 6.7, -7.8e6).unwrap();
        assert_relative_eq!(n, 1.05 * 6.7, max_relative = 1e-12);
    }

    #[test]
    fn separation_error_table() {
        let pct = |snr: f64| separation_error(snr).unwrap() * 100.0;
        assert_eq!(format!("{:.2}", pct(6.3)), "0.08");
        assert_eq!(format!("{:.2}", pct(6.0)), "0.13");
        assert_eq!(format!("{:.2}", pct(6.7)), "0.04");
        assert!(pct(8.4) < 0.01);
        assert_eq!(separation_error(0.0).unwrap(), 0.5);
        assert_eq!(separation_error(f64::INFINITY).unwrap(), 0.0);
        assert!(separation_error(-1.0).is_err());
    }

    #[test]
    fn coherence_table() {
        let (cl, _) = coherence_limits(56e-9, DEFAULT_TAU_BUFFER, 26e-6).unwrap();
        assert_eq!(format!("{:.2}", cl * 100.0), "0.11");
        let (cl, _) = coherence_limits(56e-9, DEFAULT_TAU_BUFFER, 34e-6).unwrap();
        assert_eq!(format!("{:.2}", cl * 100.0), "0.08");
        let (_, q) = coherence_limits(56e-9, DEFAULT_TAU_BUFFER, 26e-6).unwrap();
        assert_eq!(format!("{:.2}", q * 100.0), "0.33");
        assert_eq!(coherence_limits(56e-9, 0.0, f64::INFINITY).unwrap().0, 0.0);
    }

    #[test]
    fn drive_relations() {
        let a = t1_from_drive(1e-15, 1e6, 10e9).unwrap();
        let b = t1_from_drive(1e-15, 2e6, 10e9).unwrap();
        assert_relative_eq!(a / b, 4.0, max_relative = 1e-12);
        assert!(t1_from_drive(1e-15, 0.0, 10e9).is_err());
        assert_eq!(rabi_to_omega(10e6, RabiTransition::GE), 10e6);
        assert_relative_eq!(rabi_to_omega(10e6, RabiTransition::EF) * 2f64.sqrt(), 10e6);
    }

    #[test]
    fn linear_fit_cases() {
        let pts: Vec<(f64, f64)> = (0..5).map(|k| (k as f64, 8e9 - 3e6 * k as f64)).collect();
        let fit = stark_linear_fit(&pts).unwrap();
        assert_relative_eq!(fit.intercept, 8e9, max_relative = 1e-14);
        assert_relative_eq!(fit.slope, -3e6, max_relative = 1e-10);
        let flat = [(1.0, 1.0), (2.0, 3.0), (3.0, 2.0)];
        assert_relative_eq!(stark_linear_fit(&flat).unwrap().intercept, 1.0 + 0.0 * 2.0);
        assert!(stark_linear_fit(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]).is_err());
        assert!(stark_linear_fit(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
    }

    #[test]
    fn fidelity_cases() {
        let perfect = SequenceCounts {
            no_pulse: ConditionalCounts {
                g1_g2: 100,
                e1_e2: 100,
                ..Default::default()
            },
            pi_pulse: ConditionalCounts {
                g1_e2: 100,
                e1_g2: 100,
                ..Default::default()
            },
        };
        let mut perfect = perfect;
        perfect.pi_pulse.e1_e2 = 100;
        perfect.pi_pulse.e1_g2 = 0;
        let f = fidelities(&perfect).unwrap();
        assert_eq!((f.f, f.f_q), (1.0, 1.0));

        let q2 = SequenceCounts {
            no_pulse: ConditionalCounts {
                g1_g2: 99_970,
                g1_e2: 30,
                ..Default::default()
            },
            pi_pulse: ConditionalCounts {
                g1_e2: 99_840,
                g1_g2: 160,
                e1_e2: 1,
                ..Default::default()
            },
        };
        let f = fidelities(&q2).unwrap();
        assert_relative_eq!(1.0 - f.f, 0.00095, max_relative = 1e-9);
        assert!(f.f_ci.lo < f.f && f.f < f.f_ci.hi);

        let mut empty = q2;
        empty.pi_pulse.e1_e2 = 0;
        match fidelities(&empty) {
            Err(Error::EmptyCell(c)) => assert_eq!(c, "pi_pulse.e1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ellipse_radius() {
        assert_relative_eq!(ellipse_radius2(4.0), 19.33, max_relative = 1e-3);
        assert_relative_eq!(
            ellipse_radius2(1.0),
            -2.0 * (1.0f64 - 0.682_689_492).ln(),
            max_relative = 1e-8
        );
    }
}

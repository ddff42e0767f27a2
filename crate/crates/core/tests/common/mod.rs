#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix2};
use notchlab::mtl::{CoupledPairGeometry, LineParams, MtlCouplerParams};
use notchlab::mux::{MuxNetwork, ReadoutChannel};
use notchlab::purcell::ShuntLC;
use notchlab::units::um;
use num_complex::Complex64;

pub const NAMES: [&str; 4] = ["Q1", "Q2", "Q3", "Q4"];

/// Bare parameters in MHz: f_r^g, f_p, J, kappa_p, chi, g.
pub const BARE: [[f64; 6]; 4] = [
    [10250.0, 10232.0, 36.1, 97.6, -9.4, 420.0],
    [10386.0, 10407.0, 39.4, 81.4, -9.9, 423.0],
    [10540.0, 10566.0, 30.9, 66.7, -10.5, 280.0],
    [10666.0, 10710.0, 26.2, 93.5, -8.3, 275.0],
];

pub const F_Q_MHZ: [f64; 4] = [8032.0, 8189.0, 9046.0, 8980.0];
pub const N_CRIT: [f64; 4] = [7.0, 6.7, 7.1, 9.4];

/// Normal modes in MHz: w_r^g, kappa_r^g, kappa_r^e, chi_r, w_p^g, kappa_p^g, chi_p.
pub const MODES: [[f64; 7]; 4] = [
    [10221.0, 42.0, 30.0, -6.0, 10284.0, 42.0, -3.5],
    [10360.0, 34.0, 25.0, -7.9, 10438.0, 64.0, -2.3],
    [10520.0, 24.0, 14.0, -8.4, 10581.0, 56.0, -2.2],
    [10652.0, 19.0, 11.0, -7.2, 10700.0, 60.0, -1.1],
];

pub const SNR: [f64; 4] = [6.3, 8.4, 6.0, 6.7];
pub const EPS_SEP: [&str; 4] = ["0.08", "<0.01", "0.13", "0.04"];
pub const EPS_CL: [&str; 4] = ["0.06", "0.11", "0.07", "0.08"];
pub const T1_US: [f64; 4] = [45.0, 26.0, 38.0, 34.0];
pub const T2_ECHO_US: [f64; 4] = [61.0, 55.0, 152.0, 77.0];
pub const NOISE_BOUND: [f64; 4] = [3.1e-4, 3.2e-4, 1.0e-4, 2.4e-4];
pub const DRIVE_MHZ: [f64; 4] = [10224.0, 10357.0, 10515.0, 10646.0];

pub fn line() -> LineParams {
    LineParams::new(66.0, 1.19e8).unwrap()
}

pub fn table_mtl() -> CoupledPairGeometry {
    let c = line().c_per_len();
    let coupler = MtlCouplerParams::new(um(318.0), 8.5e-12 / c).unwrap();
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

pub fn table_cap() -> CoupledPairGeometry {
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

pub fn shunt() -> ShuntLC {
    ShuntLC::new(230e-15, 1.01e-9).unwrap()
}

pub fn table_network(with_shunt: bool) -> MuxNetwork {
    let channels = NAMES
        .iter()
        .zip(BARE)
        .map(|(n, b)| {
            ReadoutChannel::new(
                *n,
                b[0] * 1e6,
                b[4] * 1e6,
                b[1] * 1e6,
                b[2] * 1e6,
                b[3] * 1e6,
            )
        })
        .collect();
    MuxNetwork::new(channels, with_shunt.then(shunt), 50.0).unwrap()
}

/// Two-port admittance of a uniform line of impedance `zc` and electrical
/// length `theta`.
fn line_y(zc: f64, theta: f64) -> Matrix2<Complex64> {
    let i = Complex64::new(0.0, 1.0);
    let cot = -i / theta.tan() / zc;
    let csc = i / theta.sin() / zc;
    Matrix2::new(cot, csc, csc, cot)
}

/// Exact transfer impedance of a coupled pair from even/odd modal analysis
/// of the coupled section and nodal analysis of the whole circuit. Both
/// shorted segments leave the coupled section from the same side.
pub fn z21_exact(g: &CoupledPairGeometry, f: f64) -> Complex64 {
    let p = g.mtl_params().expect("coupled-line geometry");
    let (z0, v) = (g.line.z0(), g.line.v());
    let w = 2.0 * std::f64::consts::PI * f;
    let c = 1.0 / (z0 * v);
    let cm = p.cm_over_c * c;
    let cc = c - cm;
    let l_self = z0 / v;
    let lm = (p.zm_over_z0 * z0).powi(2) * cm;
    let modes = [(l_self + lm, cc, 1.0), (l_self - lm, cc + 2.0 * cm, -1.0)];

    // Nodes: 0 readout open end, 1/2 readout sides a/b of the section,
    // 3/4 filter sides a/b, 5 filter open end.
    let mut y = DMatrix::<Complex64>::zeros(6, 6);
    let mut stamp = |a: usize, b: Option<usize>, m: Matrix2<Complex64>| {
        y[(a, a)] += m[(0, 0)];
        if let Some(b) = b {
            y[(a, b)] += m[(0, 1)];
            y[(b, a)] += m[(1, 0)];
            y[(b, b)] += m[(1, 1)];
        }
    };
    stamp(0, Some(1), line_y(z0, w * g.l_r_open / v));
    stamp(2, None, line_y(z0, w * g.l_r_short / v));
    stamp(5, Some(3), line_y(z0, w * g.l_p_open / v));
    stamp(4, None, line_y(z0, w * g.l_p_short / v));

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let nodes = [[1usize, 2], [3, 4]];
    for (l, cap, sign) in modes {
        let zm = (l / cap).sqrt();
        let ym = line_y(zm, w * (l * cap).sqrt() * p.len_c);
        let t = [s, s * sign];
        for a in 0..2 {
            for b in 0..2 {
                for pl in 0..2 {
                    for ql in 0..2 {
                        y[(nodes[pl][a], nodes[ql][b])] += ym[(a, b)] * t[pl] * t[ql];
                    }
                }
            }
        }
    }
    let mut rhs = DVector::<Complex64>::zeros(6);
    rhs[0] = Complex64::new(1.0, 0.0);
    let v = y.lu().solve(&rhs).expect("nodal matrix is regular");
    v[5]
}

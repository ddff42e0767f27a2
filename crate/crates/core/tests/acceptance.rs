//! One PASS/FAIL line per acceptance criterion. Run with `--nocapture` to see
//! the report; the test fails if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::*;
use notchlab::equiv::{j_capacitive, j_mtl, JFormula};
use notchlab::metrics::{coherence_limits, separation_error};
use notchlab::mtl::{
    capacitive_first_zero, find_notch, notch_frequency, z21_capacitive, z21_general,
    CoupledPairGeometry, MtlCouplerParams, PoleGuard,
};
use notchlab::mux::{
    critical_photon, gamma_incident, mode_dispersive_shifts, normal_modes, propagate, separation,
    DrivePulse, JointState, ModeCharacter, MuxNetwork, NormalMode, QubitState, ReadoutChannel,
};
use notchlab::purcell::{
    enhancement_bandwidth, enhancement_factor, t1_purcell, ChannelCircuitSpec, PurcellNetwork,
    DEFAULT_C_Q,
};
use notchlab::specfit::{fit_reflection, linear_grid, synth_spectrum, FitConfig, SpectrumState};
use notchlab::units::um;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn mode(modes: &[NormalMode], channel: usize, ch: ModeCharacter) -> &NormalMode {
    modes
        .iter()
        .find(|m| m.channel == channel && m.character == ch)
        .unwrap()
}

fn normal_mode_table() -> Outcome {
    let start = Instant::now();
    let net = table_network(false);
    let g = normal_modes(&net, &JointState::ground(4)).unwrap();
    let mut worst_f: f64 = 0.0;
    let mut worst_chi: f64 = 0.0;
    for (c, row) in MODES.iter().enumerate() {
        let e = normal_modes(&net, &JointState::excited(4, c)).unwrap();
        let shifts = mode_dispersive_shifts(&net, c).unwrap();
        let rg = mode(&g, c, ModeCharacter::ReadoutLike);
        let re = mode(&e, c, ModeCharacter::ReadoutLike);
        let pg = mode(&g, c, ModeCharacter::FilterLike);
        let got = [
            (rg.f_tilde, row[0]),
            (rg.kappa_tilde, row[1]),
            (re.kappa_tilde, row[2]),
            (pg.f_tilde, row[4]),
            (pg.kappa_tilde, row[5]),
        ];
        for (x, want) in got {
            worst_f = worst_f.max((x / 1e6 - want).abs());
        }
        worst_chi = worst_chi.max((shifts.chi_r / 1e6 - row[3]).abs());
        worst_chi = worst_chi.max((shifts.chi_p / 1e6 - row[6]).abs());
    }
    let t = start.elapsed();
    check(
        worst_f <= 5.0 && worst_chi <= 0.5 && t < Duration::from_secs(1),
        format!("max |dw|,|dkappa| {worst_f:.2} MHz, max |dchi| {worst_chi:.3} MHz, {t:.2?}"),
    )
}

fn coupling_golden() -> Outcome {
    let cap = j_capacitive(&table_cap(), 1.4e-15).unwrap() / 1e6;
    let mtl = j_mtl(&table_mtl(), JFormula::Expanded).unwrap() / 1e6;
    check(
        (cap / 30.0 - 1.0).abs() <= 0.05 && (mtl / 30.0 - 1.0).abs() <= 0.10,
        format!("capacitive J {cap:.2} MHz, coupled-line J {mtl:.2} MHz"),
    )
}

fn notch_golden() -> Outcome {
    let g = table_mtl();
    let f_n = notch_frequency(&g).unwrap();
    let root = find_notch(&g, 7.5e9, 9.0e9, 1.0).unwrap();
    let printed = format!("{:.3}", f_n / 1e9);
    check(
        printed == "8.278" && (root - f_n).abs() <= 1e3,
        format!(
            "closed form {:.6} GHz, bisection differs by {:.1} Hz",
            f_n / 1e9,
            (root - f_n).abs()
        ),
    )
}

fn critical_photons() -> Outcome {
    let mut got = vec![];
    for ((b, f_q), want) in BARE.iter().zip(F_Q_MHZ).zip(N_CRIT) {
        let n = critical_photon(b[5] * 1e6, f_q * 1e6, b[0] * 1e6).unwrap();
        got.push((n, want));
    }
    check(
        got.iter().all(|(n, w)| (n - w).abs() <= 0.1),
        format!(
            "{:?}",
            got.iter()
                .map(|(n, _)| format!("{n:.2}"))
                .collect::<Vec<_>>()
        ),
    )
}

fn error_budget_columns() -> Outcome {
    let mut pass = true;
    let mut seps = vec![];
    let mut cls = vec![];
    for k in 0..4 {
        let e = separation_error(SNR[k]).unwrap() * 100.0;
        let ok = match EPS_SEP[k].strip_prefix('<') {
            Some(bound) => e < bound.parse::<f64>().unwrap(),
            None => format!("{e:.2}") == EPS_SEP[k],
        };
        pass &= ok;
        seps.push(format!("{e:.3}"));
        let (cl, _) = coherence_limits(56e-9, 0.0, T1_US[k] * 1e-6).unwrap();
        let cl = format!("{:.2}", cl * 100.0);
        pass &= cl == EPS_CL[k];
        cls.push(cl);
    }
    check(pass, format!("eps_sep % {seps:?}, eps_cl % {cls:?}"))
}

fn noise_bounds() -> Outcome {
    let net = table_network(true);
    let mut got = vec![];
    for (c, t2) in T2_ECHO_US.iter().enumerate() {
        let n = notchlab::mux::noise_photon_bound(&net, c, 1.0 / (t2 * 1e-6)).unwrap();
        got.push(n);
    }
    let pass = got
        .iter()
        .zip(NOISE_BOUND)
        .all(|(n, w)| (n / w - 1.0).abs() <= 0.5);
    check(
        pass,
        format!(
            "{:?}",
            got.iter().map(|n| format!("{n:.3e}")).collect::<Vec<_>>()
        ),
    )
}

fn transient() -> Outcome {
    let net = table_network(true);
    let f_d = DRIVE_MHZ[1] * 1e6;
    let s_in = Complex64::new(1.0, 0.0);
    let pulse = DrivePulse::rect(f_d, s_in, 400e-9).unwrap();
    let sep = separation(&net, 1, &pulse, 1e-9).unwrap();
    let t90 = sep
        .t
        .iter()
        .zip(&sep.s)
        .find(|(_, s)| **s >= 0.9 * sep.s_ss)
        .map(|(t, _)| *t)
        .unwrap_or(f64::INFINITY);

    let long = DrivePulse::rect(f_d, s_in, 2e-6).unwrap();
    let mut worst: f64 = 0.0;
    for state in [JointState::ground(4), JointState::excited(4, 1)] {
        let tr = propagate(&net, &state, &long, 10e-9).unwrap();
        let out = *tr.s_out.last().unwrap();
        let oracle = gamma_incident(&net, &state, f_d).unwrap().conj() * s_in;
        worst = worst.max((out - oracle).norm() / oracle.norm());
    }
    check(
        t90 <= 60e-9 && worst <= 1e-6,
        format!(
            "90% separation at {:.0} ns, steady-state error {worst:.1e}",
            t90 * 1e9
        ),
    )
}

fn purcell_enhancement() -> Outcome {
    const F_N: f64 = 8.27769e9;
    let spec = |f_q: f64| ChannelCircuitSpec {
        f_q,
        g: 423e6,
        f_r: 10386e6,
        f_p: 10407e6,
        j: 39.4e6,
        kappa_p: 81.4e6,
        c_q: DEFAULT_C_Q,
        z_res: 4.0 * 66.0 / std::f64::consts::PI,
        z0_line: 50.0,
    };
    let f_mean = 0.5 * (10386e6 + 10407e6);
    let mut pass = true;
    let mut worst_weak: f64 = 0.0;
    let mut full = vec![];
    for (delta, tol) in [
        (0.1, 0.2),
        (-0.1, 0.2),
        (0.05, 0.2),
        (-0.05, 0.2),
        (0.01, 0.02),
        (-0.01, 0.02),
    ] {
        let f_q = F_N * (1.0 + delta);
        let c = spec(f_q).build(Some(F_N)).unwrap();
        let xi = enhancement_factor(f_q, F_N, f_mean).unwrap().value();
        let ratio = |weak: bool| {
            let wrap = |p| {
                if weak {
                    PurcellNetwork::WeakCoupling(p)
                } else {
                    PurcellNetwork::Lumped(p)
                }
            };
            let a = t1_purcell(&wrap(c.notched.unwrap()), &c.coupling, None)
                .unwrap()
                .seconds();
            let b = t1_purcell(&wrap(c.capacitive), &c.coupling, None)
                .unwrap()
                .seconds();
            a / b / xi
        };
        let weak = ratio(true);
        worst_weak = worst_weak.max((weak - 1.0).abs());
        pass &= (weak - 1.0).abs() <= tol;
        full.push(format!("{delta:+}:{:.3}", ratio(false)));
    }
    let b = enhancement_bandwidth(100.0, F_N, f_mean).unwrap();
    pass &= b > 200e6;
    println!("INFO  full nodal ratio / xi {}", full.join(" "));
    check(
        pass,
        format!(
            "max |ratio/xi - 1| {worst_weak:.4}, B(100) {:.0} MHz",
            b / 1e6
        ),
    )
}

fn random_mtl(rng: &mut ChaCha8Rng) -> CoupledPairGeometry {
    let mut len = || um(rng.random_range(100.0..2500.0));
    let (ro, rs, po, ps) = (len(), len(), len(), len());
    let coupler = MtlCouplerParams::new(
        um(rng.random_range(20.0..600.0)),
        rng.random_range(0.0..0.07),
    )
    .unwrap();
    CoupledPairGeometry::mtl(ro, rs, po, ps, coupler, line()).unwrap()
}

fn random_network(rng: &mut ChaCha8Rng, max_channels: usize, max_rate: f64) -> MuxNetwork {
    let n = rng.random_range(1..=max_channels);
    let channels = (0..n)
        .map(|k| {
            let fr = rng.random_range(9.5e9..11.5e9);
            ReadoutChannel::new(
                format!("c{k}"),
                fr,
                rng.random_range(-15e6..15e6),
                fr + rng.random_range(-200e6..200e6),
                rng.random_range(0.0..max_rate.min(60e6)),
                rng.random_range(1e6..max_rate),
            )
        })
        .collect();
    let shunt = rng.random_bool(0.5).then(shunt);
    MuxNetwork::new(channels, shunt, 50.0).unwrap()
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> JointState {
    JointState(
        (0..n)
            .map(|_| {
                if rng.random_bool(0.5) {
                    QubitState::E
                } else {
                    QubitState::G
                }
            })
            .collect(),
    )
}

fn property_suites() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = vec![];

    for _ in 0..1000 {
        let net = random_network(&mut rng, 8, 150e6);
        let s = random_state(&mut rng, net.len());
        let f = rng.random_range(9.0e9..12.0e9);
        if let Ok(g) = gamma_incident(&net, &s, f) {
            if (g.norm() - 1.0).abs() > 1e-9 {
                failures.push("passivity");
                break;
            }
        }
    }

    for _ in 0..64 {
        let net = random_network(&mut rng, 3, 100e6);
        let s = random_state(&mut rng, net.len());
        let f_d = net.channels[0].f_r_g + rng.random_range(-50e6..50e6);
        let dt = 0.01e-9;
        let pulse = DrivePulse::rect(f_d, Complex64::new(2e4, 1e4), 40e-9)
            .unwrap()
            .with_tail(40e-9)
            .unwrap();
        let tr = propagate(&net, &s, &pulse, dt).unwrap();
        let mut worst: f64 = 0.0;
        for k in 1..tr.len() - 1 {
            if (tr.t[k] - 40e-9).abs() < 1.5 * dt {
                continue;
            }
            let dn = (tr.photons(k + 1) - tr.photons(k - 1)) / (2.0 * dt);
            let flux = tr.s_in[k].norm_sqr() - tr.s_out[k].norm_sqr();
            worst = worst.max((dn - flux).abs());
        }
        if worst / Complex64::new(2e4, 1e4).norm_sqr() > 1e-2 {
            failures.push("energy balance");
            break;
        }
    }

    let guard = PoleGuard::default();
    for _ in 0..1000 {
        let g = random_mtl(&mut rng);
        let f = rng.random_range(0.05..2.5) * g.f_r().min(g.f_p());
        if let (Ok(a), Ok(b)) = (guard.z21(&g, f), guard.z21(&g.mirrored(), f)) {
            if a.re != 0.0 || (a - b).norm() > 1e-9 * a.norm().max(1e-12) {
                failures.push("reciprocity");
                break;
            }
        }
    }

    for _ in 0..1000 {
        let g = random_mtl(&mut rng);
        let f = rng.random_range(0.05..1.0) * 0.8 * g.f_r().min(g.f_p());
        let approx = z21_general(&g, f).unwrap();
        let exact = z21_exact(&g, f);
        let p = g.mtl_params().unwrap();
        let scale = g.line.z0()
            * p.cm_over_c
            * (2.0 * std::f64::consts::PI * f * p.len_c / g.line.v())
                .sin()
                .abs();
        if (approx - exact).norm() > 0.01 * (exact.norm() + 0.01 * scale) {
            failures.push("network oracle");
            break;
        }
    }

    'cap: for _ in 0..1000 {
        let mut len = || um(rng.random_range(100.0..2500.0));
        let (ro, rs, po, ps) = (len(), len(), len(), len());
        let g = CoupledPairGeometry::capacitive(
            ro,
            rs,
            po,
            ps,
            rng.random_range(0.1e-15..5e-15),
            line(),
        )
        .unwrap();
        let bound = capacitive_first_zero(&g);
        if bound < 2.0 * g.f_r().min(g.f_p()) {
            failures.push("capacitive bound");
            break;
        }
        let mut sign = 0.0;
        for k in 1..200 {
            let f = bound * k as f64 / 200.0;
            let cr = (std::f64::consts::FRAC_PI_2 * f / g.f_r()).cos();
            let cp = (std::f64::consts::FRAC_PI_2 * f / g.f_p()).cos();
            if let Ok(z) = z21_capacitive(&g, f) {
                let x = (z.im * cr * cp).signum();
                if sign == 0.0 {
                    sign = x;
                } else if x != sign {
                    failures.push("capacitive bound");
                    break 'cap;
                }
            }
        }
    }

    let (clean, noisy) = fit_round_trips();
    if clean > 1e3 {
        failures.push("noiseless fit");
    }
    if noisy > 0.2e6 {
        failures.push("noisy fit");
    }

    let t = start.elapsed();
    if t > Duration::from_secs(60) {
        failures.push("runtime");
    }
    check(
        failures.is_empty(),
        format!(
            "fit errors {clean:.1} Hz / {:.1} kHz, {t:.1?}{}",
            noisy / 1e3,
            if failures.is_empty() {
                String::new()
            } else {
                format!(", failed: {failures:?}")
            }
        ),
    )
}

/// Worst frequency error of a noiseless fit and worst dispersive-shift error
/// over noisy fits.
fn fit_round_trips() -> (f64, f64) {
    let truth = table_network(true);
    let grid = linear_grid(10.0e9, 10.9e9, 901).unwrap();
    let mut guess = truth.clone();
    for (k, c) in guess.channels.iter_mut().enumerate() {
        let s = if k % 2 == 0 { 1.0 } else { -1.0 };
        c.f_r_g += 2e6 * s;
        c.f_p -= 2e6 * s;
        c.j *= 1.0 + 0.03 * s;
        c.kappa_p *= 1.0 - 0.03 * s;
        c.chi += 0.5e6 * s;
    }
    let fit = |noise: f64, seed: u64| {
        let data = [
            synth_spectrum(&truth, SpectrumState::AllG, 0.3, 2e-9, &grid, noise, seed).unwrap(),
            synth_spectrum(
                &truth,
                SpectrumState::AllE,
                0.3,
                2e-9,
                &grid,
                noise,
                seed + 10_000,
            )
            .unwrap(),
        ];
        let mut cfg = FitConfig::new(guess.clone());
        cfg.theta0 = 0.3;
        cfg.tau = 2e-9;
        cfg.seed = seed;
        fit_reflection(&data, &cfg).unwrap()
    };
    let res = fit(0.0, 0);
    let clean = res
        .network
        .channels
        .iter()
        .zip(&truth.channels)
        .flat_map(|(c, t)| [c.f_r_g - t.f_r_g, c.f_p - t.f_p, c.chi - t.chi])
        .fold(0.0, |m: f64, d| m.max(d.abs()));
    let mut noisy: f64 = 0.0;
    for seed in 0..20 {
        let res = fit(0.02, seed);
        for (c, t) in res.network.channels.iter().zip(&truth.channels) {
            noisy = noisy.max((c.chi - t.chi).abs());
        }
    }
    (clean, noisy)
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("normal-mode table", normal_mode_table),
        ("coupling strength", coupling_golden),
        ("notch frequency", notch_golden),
        ("critical photon numbers", critical_photons),
        ("error-budget columns", error_budget_columns),
        ("noise-photon bounds", noise_bounds),
        ("transient timescale", transient),
        ("Purcell enhancement", purcell_enhancement),
        ("property suites", property_suites),
    ];
    let mut failed = vec![];
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let t = start.elapsed();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("{tag}  {} {name}: {} [{t:.2?}]", k + 1, out.detail);
        if !out.pass {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

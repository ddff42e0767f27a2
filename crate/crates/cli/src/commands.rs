//! Subcommand implementations.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use notchlab::equiv::{j_mtl, mapped_impedance, JFormula};
use notchlab::metrics::{
    error_budget, rabi_to_omega, shot_analysis, stark_linear_fit, t1_from_drive, IqShot,
    RabiTransition, SequenceCounts, DEFAULT_TAU_BUFFER, DEFAULT_TRAINING_SHOTS,
};
use notchlab::mtl::{find_notch, notch_frequency};
use notchlab::mux::{
    gamma_incident, normal_modes, propagate, DrivePulse, JointState, MuxNetwork, QubitState,
};
use notchlab::purcell::{
    enhancement_factor, t1_purcell, ChannelCircuitSpec, PurcellNetwork, DEFAULT_C_Q,
};
use notchlab::specfit::{fit_reflection, linear_grid, FitConfig, PhaseSpectrum, SpectrumState};
use notchlab::units::um;
use notchlab::{CoupledPairGeometry, Coupler, DeviceFile, Error, PoleGuard};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::output::{fmt_float, json_text, round_json, write, Cell, Format, Table};
use crate::{CliError, Common};

type CliResult<T = ()> = Result<T, CliError>;

fn load_device(c: &Common) -> CliResult<DeviceFile> {
    match &c.device {
        None => Ok(DeviceFile::reference()),
        Some(path) => Ok(DeviceFile::from_json(&read_text(path)?)?),
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

fn require_pair(c: &Common) -> CliResult<&str> {
    c.pair
        .as_deref()
        .ok_or_else(|| CliError::usage("--pair is required"))
}

fn joint_state(c: &Common, n: usize) -> CliResult<JointState> {
    let state = match &c.state {
        None => JointState::ground(n),
        Some(s) => s.parse::<JointState>()?,
    };
    if state.len() != n {
        return Err(CliError::usage(format!(
            "--state has {} letters but the device has {n} channels",
            state.len()
        )));
    }
    Ok(state)
}

fn sweep(c: &Common, fmin: f64, fmax: f64, points: usize) -> CliResult<Vec<f64>> {
    Ok(linear_grid(
        c.fmin.unwrap_or(fmin),
        c.fmax.unwrap_or(fmax),
        c.points.unwrap_or(points),
    )?)
}

fn load_pulse(c: &Common) -> CliResult<DrivePulse> {
    let raw = c
        .pulse
        .as_deref()
        .ok_or_else(|| CliError::usage("--pulse is required"))?;
    let text = if raw.trim_start().starts_with('{') {
        raw.to_string()
    } else {
        read_text(Path::new(raw))?
    };
    let pulse: DrivePulse =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("invalid pulse: {e}")))?;
    pulse.validate()?;
    Ok(pulse)
}

fn emit_table(c: &Common, table: &Table, fallback: Format) -> CliResult {
    let format = Format::resolve(c.format, c.out.as_deref(), fallback);
    write(&table.render(format), c.out.as_ref())
}

/// Emits a flat JSON object, or a one-row CSV of its scalar fields.
fn emit_object(c: &Common, obj: Map<String, Value>) -> CliResult {
    let value = round_json(Value::Object(obj));
    match Format::resolve(c.format, c.out.as_deref(), Format::Json) {
        Format::Json => write(&json_text(&value), c.out.as_ref()),
        Format::Csv => {
            let obj = value.as_object().expect("object");
            let scalars: Vec<(&String, &Value)> = obj
                .iter()
                .filter(|(_, v)| !v.is_object() && !v.is_array())
                .collect();
            let mut table = Table::new(scalars.iter().map(|(k, _)| k.as_str()));
            table.push(
                scalars
                    .iter()
                    .map(|(_, v)| match v {
                        Value::Number(n) => Cell::Num(n.as_f64().unwrap_or(f64::NAN)),
                        Value::Null => Cell::Num(f64::NAN),
                        Value::String(s) => Cell::Text(s.clone()),
                        other => Cell::Text(other.to_string()),
                    })
                    .collect(),
            );
            write(&table.to_csv(), c.out.as_ref())
        }
    }
}

/// Value of a pole-guarded evaluation, with guarded points mapped to NaN.
fn or_nan(r: notchlab::Result<f64>) -> CliResult<f64> {
    match r {
        Ok(x) => Ok(x),
        Err(Error::Pole { .. } | Error::CompositionPole { .. } | Error::DegenerateNotch { .. }) => {
            Ok(f64::NAN)
        }
        Err(e) => Err(e.into()),
    }
}

/// Bracket around `f_n` that excludes every resonance pole of the pair.
fn notch_bracket(g: &CoupledPairGeometry, f_n: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (0.5 * f_n, 1.5 * f_n);
    for f0 in [g.f_r(), g.f_p()] {
        let mut pole = f0;
        while pole < hi {
            if pole <= f_n {
                lo = lo.max(pole * (1.0 + 1e-6));
            } else {
                hi = hi.min(pole * (1.0 - 1e-6));
            }
            pole += 2.0 * f0;
        }
    }
    (lo, hi)
}

pub fn notch(c: &Common) -> CliResult {
    let dev = load_device(c)?;
    let pair = require_pair(c)?;
    let g = dev.geometry(pair)?;
    let f_n = notch_frequency(&g)?;
    let (lo, hi) = notch_bracket(&g, f_n);
    let root = or_nan(match find_notch(&g, lo, hi, c.tol.unwrap_or(1.0)) {
        Err(Error::Bracket { .. }) => Ok(f64::NAN),
        other => other,
    })?;
    if c.format.is_none() && c.out.is_none() {
        println!(
            "{pair} notch {:.3} GHz (closed form {} Hz, bisection {} Hz)",
            f_n / 1e9,
            fmt_float(f_n),
            fmt_float(root)
        );
        return Ok(());
    }
    let mut t = Table::new(["pair", "notch_hz", "bisection_hz"]);
    t.push(vec![pair.into(), f_n.into(), root.into()]);
    emit_table(c, &t, Format::Csv)
}

pub fn z21(c: &Common) -> CliResult {
    let dev = load_device(c)?;
    let g = dev.geometry(require_pair(c)?)?;
    let grid = sweep(c, 1e9, 15e9, 1401)?;
    let guard = PoleGuard::default();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&f| or_nan(guard.z21(&g, f).map(|z| z.im)))
        .collect::<CliResult<_>>()?;
    let mut t = Table::new(["freq_hz", "im_z21_ohm"]);
    for (f, z) in grid.iter().zip(values) {
        t.push(vec![(*f).into(), z.into()]);
    }
    emit_table(c, &t, Format::Csv)
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct DesignArgs {
    /// Shortest coupled-section length (um).
    #[arg(long, default_value_t = 50.0)]
    len_min_um: f64,
    /// Longest coupled-section length (um).
    #[arg(long, default_value_t = 600.0)]
    len_max_um: f64,
}

pub fn design(c: &Common, a: &DesignArgs) -> CliResult {
    let dev = load_device(c)?;
    let base = dev.geometry(require_pair(c)?)?;
    let Coupler::Mtl(params) = base.coupler else {
        return Err(CliError::usage("design needs a coupled-line pair"));
    };
    let lengths = linear_grid(a.len_min_um, a.len_max_um, c.points.unwrap_or(56))?;
    let mut t = Table::new(["len_c_um", "notch_hz", "j_hz", "j_exact_hz"]);
    for l in lengths {
        let mut g = base;
        g.coupler = Coupler::Mtl(notchlab::MtlCouplerParams {
            len_c: um(l),
            ..params
        });
        g.validate()?;
        t.push(vec![
            l.into(),
            or_nan(notch_frequency(&g))?.into(),
            or_nan(j_mtl(&g, JFormula::Expanded))?.into(),
            or_nan(j_mtl(&g, JFormula::Exact))?.into(),
        ]);
    }
    emit_table(c, &t, Format::Csv)
}

pub fn modes(c: &Common) -> CliResult {
    let net = load_device(c)?.network()?;
    let state = joint_state(c, net.len())?;
    let mut t = Table::new(["channel", "character", "f_hz", "kappa_hz"]);
    for m in normal_modes(&net, &state)? {
        t.push(vec![
            net.channels[m.channel].name.clone().into(),
            m.character.to_string().into(),
            m.f_tilde.into(),
            m.kappa_tilde.into(),
        ]);
    }
    emit_table(c, &t, Format::Json)
}

pub fn reflect(c: &Common) -> CliResult {
    let net = load_device(c)?.network()?;
    let state = joint_state(c, net.len())?;
    let grid = sweep(c, 10.0e9, 10.9e9, 901)?;
    let values: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&f| match gamma_incident(&net, &state, f) {
            Ok(g) => Ok((g.re, g.im)),
            Err(Error::CompositionPole { .. }) => Ok((f64::NAN, f64::NAN)),
            Err(e) => Err(e.into()),
        })
        .collect::<CliResult<_>>()?;
    let mut t = Table::new(["freq_hz", "re_gamma", "im_gamma", "phase_rad"]);
    for (f, (re, im)) in grid.iter().zip(values) {
        t.push(vec![(*f).into(), re.into(), im.into(), im.atan2(re).into()]);
    }
    emit_table(c, &t, Format::Csv)
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SimulateArgs {
    /// Output sample spacing (s).
    #[arg(long, default_value_t = 1e-9)]
    dt: f64,
}

/// Header of a field-trace table for the given channel names.
pub fn trace_header(names: &[String]) -> Vec<String> {
    let mut h = vec!["time_s".to_string(), "photons".to_string()];
    for n in names {
        for col in ["re_p", "im_p", "re_r", "im_r"] {
            h.push(format!("{col}_{n}"));
        }
    }
    h.extend(["re_sout".to_string(), "im_sout".to_string()]);
    h
}

pub fn simulate(c: &Common, a: &SimulateArgs) -> CliResult {
    let net = load_device(c)?.network()?;
    let state = joint_state(c, net.len())?;
    let pulse = load_pulse(c)?;
    let tr = propagate(&net, &state, &pulse, a.dt)?;
    let names: Vec<String> = net.channels.iter().map(|ch| ch.name.clone()).collect();
    let mut t = Table::new(trace_header(&names));
    for k in 0..tr.len() {
        let mut row: Vec<Cell> = vec![tr.t[k].into(), tr.photons(k).into()];
        for ch in 0..net.len() {
            let (p, r) = (tr.p[ch][k], tr.r[ch][k]);
            row.extend([p.re.into(), p.im.into(), r.re.into(), r.im.into()]);
        }
        row.extend([tr.s_out[k].re.into(), tr.s_out[k].im.into()]);
        t.push(row);
    }
    emit_table(c, &t, Format::Csv)
}

pub fn separation(c: &Common, a: &SimulateArgs) -> CliResult {
    let net = load_device(c)?.network()?;
    let target = net.channel_index(require_pair(c)?)?;
    let pulse = load_pulse(c)?;
    let sep = notchlab::mux::separation(&net, target, &pulse, a.dt)?;
    eprintln!(
        "s_ss {} gamma_m {}",
        fmt_float(sep.s_ss),
        fmt_float(sep.gamma_m)
    );
    let mut t = Table::new(["time_s", "s", "s_target"]);
    for k in 0..sep.t.len() {
        t.push(vec![
            sep.t[k].into(),
            sep.s[k].into(),
            sep.s_target[k].into(),
        ]);
    }
    emit_table(c, &t, Format::Csv)
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct PurcellArgs {
    /// Notch frequency (Hz); taken from the pair geometry when omitted.
    #[arg(long)]
    notch_hz: Option<f64>,
}

fn channel_circuit(
    dev: &DeviceFile,
    net: &MuxNetwork,
    name: &str,
) -> CliResult<ChannelCircuitSpec> {
    let ch = &net.channels[net.channel_index(name)?];
    let q = ch
        .qubit
        .ok_or_else(|| CliError::usage(format!("channel {name} has no qubit entry")))?;
    Ok(ChannelCircuitSpec {
        f_q: q.f_q,
        g: q.g,
        f_r: ch.f_r_g,
        f_p: ch.f_p,
        j: ch.j,
        kappa_p: ch.kappa_p,
        c_q: dev.qubit_capacitance(name).unwrap_or(DEFAULT_C_Q),
        z_res: mapped_impedance(&dev.line_params()?),
        z0_line: net.z0_line,
    })
}

pub fn purcell(c: &Common, a: &PurcellArgs) -> CliResult {
    let dev = load_device(c)?;
    let net = dev.network()?;
    let name = require_pair(c)?;
    let spec = channel_circuit(&dev, &net, name)?;
    let f_n = match a.notch_hz {
        Some(f) => f,
        None => {
            let g = dev.geometry(name).map_err(|_| {
                CliError::usage(format!("no geometry named {name}; pass --notch-hz"))
            })?;
            notch_frequency(&g)?
        }
    };
    let f_mean = 0.5 * (spec.f_r + spec.f_p);
    let grid = sweep(c, 0.9 * f_n, 1.1 * f_n, 201)?;
    let shunt = net.shunt;
    let rows: Vec<[f64; 3]> = grid
        .par_iter()
        .map(|&f_q| {
            let circuits = ChannelCircuitSpec { f_q, ..spec }.build(Some(f_n))?;
            let t1 = |pair| {
                or_nan(
                    t1_purcell(
                        &PurcellNetwork::Lumped(pair),
                        &circuits.coupling,
                        shunt.as_ref(),
                    )
                    .map(|t| t.seconds()),
                )
            };
            let notched = circuits.notched.expect("notch frequency given");
            Ok([
                t1(notched)?,
                t1(circuits.capacitive)?,
                enhancement_factor(f_q, f_n, f_mean)?.value(),
            ])
        })
        .collect::<CliResult<_>>()?;
    let mut t = Table::new(["freq_hz", "t1_mtl_s", "t1_cap_s", "xi"]);
    for (f, r) in grid.iter().zip(rows) {
        t.push(vec![(*f).into(), r[0].into(), r[1].into(), r[2].into()]);
    }
    emit_table(c, &t, Format::Csv)
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct FitArgs {
    /// Phase spectrum with every qubit in g (CSV: freq_hz, phase_rad).
    #[arg(long)]
    spectrum_g: Option<PathBuf>,
    /// Phase spectrum with every qubit in e (CSV: freq_hz, phase_rad).
    #[arg(long)]
    spectrum_e: Option<PathBuf>,
    /// Initial phase offset (rad).
    #[arg(long, default_value_t = 0.0)]
    theta0: f64,
    /// Initial electrical delay (s).
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
    #[arg(long)]
    max_iter: Option<usize>,
}

/// Reads named float columns from a headed CSV file.
fn read_columns(path: &Path, names: &[&str]) -> CliResult<Vec<Vec<f64>>> {
    let text = read_text(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let bad = |msg: String| CliError::usage(format!("{}: {msg}", path.display()));
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            header
                .iter()
                .position(|h| h == *n)
                .ok_or_else(|| bad(format!("missing column {n}")))
        })
        .collect::<CliResult<_>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        for (col, &i) in cols.iter_mut().zip(&idx) {
            let field = rec.get(i).unwrap_or("");
            let x: f64 = field
                .parse()
                .map_err(|_| bad(format!("row {}: {field:?} is not a number", line + 1)))?;
            col.push(x);
        }
    }
    Ok(cols)
}

fn read_spectrum(path: &Path, state: SpectrumState) -> CliResult<PhaseSpectrum> {
    let mut cols = read_columns(path, &["freq_hz", "phase_rad"])?;
    let phase = cols.pop().expect("two columns");
    let freq = cols.pop().expect("two columns");
    Ok(PhaseSpectrum::new(freq, phase, state)?)
}

pub fn fit(c: &Common, a: &FitArgs) -> CliResult {
    if c.format == Some(Format::Csv) {
        return Err(CliError::usage("fit results are emitted as JSON"));
    }
    let dev = load_device(c)?;
    let mut spectra = Vec::new();
    if let Some(p) = &a.spectrum_g {
        spectra.push(read_spectrum(p, SpectrumState::AllG)?);
    }
    if let Some(p) = &a.spectrum_e {
        spectra.push(read_spectrum(p, SpectrumState::AllE)?);
    }
    if spectra.is_empty() {
        return Err(CliError::usage("pass --spectrum-g and/or --spectrum-e"));
    }
    let mut cfg = FitConfig::new(dev.network()?);
    cfg.theta0 = a.theta0;
    cfg.tau = a.tau;
    cfg.seed = c.seed;
    if let Some(tol) = c.tol {
        (cfg.ftol, cfg.xtol, cfg.gtol) = (tol, tol, tol);
    }
    if let Some(n) = a.max_iter {
        cfg.max_iter = n;
    }
    let res = fit_reflection(&spectra, &cfg)?;
    let mut out = serde_json::to_value(dev.with_network(&res.network)).expect("device serializes");
    let obj = out.as_object_mut().expect("device is an object");
    if !res.chi_identified {
        if let Some(Value::Array(chs)) = obj.get_mut("channels") {
            for ch in chs {
                ch.as_object_mut().map(|m| m.remove("chi_mhz"));
            }
        }
    }
    obj.insert("theta0_rad".into(), json!(res.theta0));
    obj.insert("tau_s".into(), json!(res.tau));
    obj.insert("residual".into(), json!(res.residual));
    obj.insert("converged".into(), json!(res.converged));
    obj.insert("stderr".into(), json!(res.stderr));
    obj.insert("warnings".into(), json!(res.warnings));
    write(&json_text(&round_json(out)), c.out.as_ref())
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct BudgetArgs {
    /// Signal-to-noise ratio; computed from `--shots` when omitted.
    #[arg(long)]
    snr: Option<f64>,
    /// Single-shot IQ points (CSV: label, i, q with label g or e).
    #[arg(long)]
    shots: Option<PathBuf>,
    /// Integration window (s).
    #[arg(long)]
    tau_meas: f64,
    /// Buffer between the two measurements of the QND sequence (s).
    #[arg(long, default_value_t = DEFAULT_TAU_BUFFER)]
    tau_buffer: f64,
    /// Qubit relaxation time (s); infinite when omitted.
    #[arg(long)]
    t1: Option<f64>,
    /// Conditional outcome counts (JSON).
    #[arg(long)]
    counts: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TRAINING_SHOTS)]
    train: usize,
    /// Confidence-ellipse size for leakage tagging, in standard deviations.
    #[arg(long, default_value_t = 4.0)]
    k_sigma: f64,
}

fn read_shots(path: &Path) -> CliResult<Vec<IqShot>> {
    let text = read_text(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let bad = |msg: String| CliError::usage(format!("{}: {msg}", path.display()));
    let mut shots = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let row = line + 1;
        let prepared = match rec.get(0).unwrap_or("") {
            "g" | "G" | "0" => QubitState::G,
            "e" | "E" | "1" => QubitState::E,
            other => return Err(bad(format!("row {row}: label {other:?} is not g or e"))),
        };
        let num = |k: usize| -> CliResult<f64> {
            let f = rec.get(k).unwrap_or("");
            f.parse()
                .map_err(|_| bad(format!("row {row}: {f:?} is not a number")))
        };
        shots.push(IqShot {
            prepared,
            i: num(1)?,
            q: num(2)?,
        });
    }
    Ok(shots)
}

pub fn budget(c: &Common, a: &BudgetArgs) -> CliResult {
    let mut obj = Map::new();
    let snr = match (&a.shots, a.snr) {
        (Some(_), Some(_)) => {
            return Err(CliError::usage("pass either --snr or --shots, not both"))
        }
        (None, None) => return Err(CliError::usage("pass --snr or --shots")),
        (None, Some(s)) => s,
        (Some(path), None) => {
            let res = shot_analysis(&read_shots(path)?, a.train, a.k_sigma)?;
            obj.insert("assignment_error".into(), json!(res.assignment_error));
            obj.insert("leakage_fraction".into(), json!(res.leakage_fraction));
            obj.insert("outliers".into(), json!(res.outliers.len()));
            obj.insert("sigma_g".into(), json!(res.stats.sigma_g));
            obj.insert("sigma_e".into(), json!(res.stats.sigma_e));
            res.stats.snr()
        }
    };
    let counts: Option<SequenceCounts> = match &a.counts {
        None => None,
        Some(p) => Some(
            serde_json::from_str(&read_text(p)?)
                .map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?,
        ),
    };
    let b = error_budget(
        snr,
        a.tau_meas,
        a.tau_buffer,
        a.t1.unwrap_or(f64::INFINITY),
        counts.as_ref(),
    )?;
    let mut out = Map::new();
    out.insert("snr".into(), json!(b.snr));
    out.insert("eps_sep".into(), json!(b.eps_sep));
    out.insert("eps_cl".into(), json!(b.eps_cl));
    out.insert("eps_cl_q".into(), json!(b.eps_cl_q));
    out.insert("f".into(), json!(b.f));
    out.insert("f_q".into(), json!(b.f_q));
    out.insert("eps".into(), json!(b.f.map(|f| 1.0 - f)));
    out.insert("eps_q".into(), json!(b.f_q.map(|f| 1.0 - f)));
    out.extend(obj);
    emit_object(c, out)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Transition {
    Ge,
    Ef,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct CalibrateArgs {
    /// Stark-shifted qubit frequencies (CSV: power_w, f_hz).
    #[arg(long)]
    data: PathBuf,
    /// Measured ac Stark shift (Hz), converted to a photon number with `--chi-hz`.
    #[arg(long, requires = "chi_hz")]
    stark_shift_hz: Option<f64>,
    #[arg(long)]
    chi_hz: Option<f64>,
    /// Rabi frequency (Hz) reached with `--drive-power-w` at `--f-d-hz`.
    #[arg(long, requires_all = ["drive_power_w", "f_d_hz"])]
    rabi_hz: Option<f64>,
    #[arg(long, value_enum, default_value_t = Transition::Ge)]
    transition: Transition,
    #[arg(long)]
    drive_power_w: Option<f64>,
    #[arg(long)]
    f_d_hz: Option<f64>,
}

pub fn calibrate(c: &Common, a: &CalibrateArgs) -> CliResult {
    let cols = read_columns(&a.data, &["power_w", "f_hz"])?;
    let points: Vec<(f64, f64)> = cols[0]
        .iter()
        .copied()
        .zip(cols[1].iter().copied())
        .collect();
    let fit = stark_linear_fit(&points)?;
    let mut out = Map::new();
    out.insert("f_q_hz".into(), json!(fit.intercept));
    out.insert("slope_hz_per_w".into(), json!(fit.slope));
    out.insert("stderr_f_q_hz".into(), json!(fit.stderr_intercept));
    out.insert("stderr_slope_hz_per_w".into(), json!(fit.stderr_slope));
    if let (Some(shift), Some(chi)) = (a.stark_shift_hz, a.chi_hz) {
        out.insert(
            "photons".into(),
            json!(notchlab::metrics::photons_from_stark(shift, chi)?),
        );
    }
    if let (Some(rabi), Some(p), Some(f_d)) = (a.rabi_hz, a.drive_power_w, a.f_d_hz) {
        let transition = match a.transition {
            Transition::Ge => RabiTransition::GE,
            Transition::Ef => RabiTransition::EF,
        };
        let omega = rabi_to_omega(rabi, transition);
        out.insert("omega_hz".into(), json!(omega));
        out.insert("t1_s".into(), json!(t1_from_drive(p, omega, f_d)?));
    }
    emit_object(c, out)
}

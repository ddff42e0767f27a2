use std::path::Path;
use std::process::{Command, Output};

use notchlab::specfit::{linear_grid, synth_spectrum, SpectrumState};
use notchlab::DeviceFile;
use serde_json::Value;

fn notchlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_notchlab"))
        .args(args)
        .env_remove("NOTCHLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_device(dir: &Path, edit: impl FnOnce(&mut Value)) -> String {
    let mut v: Value = serde_json::from_str(notchlab::device::REFERENCE_DEVICE_JSON).unwrap();
    edit(&mut v);
    let path = dir.join("device.json");
    std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn notch_of_reference_pair() {
    let o = notchlab(&["notch", "--pair", "Q1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("8.278 GHz"), "{}", stdout(&o));
}

#[test]
fn negative_length_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let dev = write_device(dir.path(), |v| {
        v["geometry"][0]["l_r_short_um"] = (-5.0).into()
    });
    let o = notchlab(&["z21", "--device", &dev, "--pair", "Q1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("geometry.Q1.l_r_short_um"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn unknown_keys_and_flags_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let dev = write_device(dir.path(), |v| v["line"]["extra"] = 1.0.into());
    assert_eq!(
        notchlab(&["notch", "--device", &dev, "--pair", "Q1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        notchlab(&["notch", "--pair", "Q1", "--bogus"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(notchlab(&["modes", "--state", "gg"]).status.code(), Some(2));
}

#[test]
fn degenerate_notch_is_a_numerical_error() {
    let f_n = (10386e6f64 * 10407e6).sqrt().to_string();
    let o = notchlab(&[
        "purcell",
        "--pair",
        "Q2",
        "--notch-hz",
        &f_n,
        "--points",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn modes_file_holds_two_modes_per_channel() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("modes.json");
    let o = notchlab(&["modes", "--state", "gggg", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let modes: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(modes.len(), 8);
    let q1 = modes
        .iter()
        .find(|m| m["channel"] == "Q1" && m["character"] == "readout")
        .unwrap();
    assert!((q1["f_hz"].as_f64().unwrap() / 1e6 - 10221.0).abs() < 5.0);
    assert!((q1["kappa_hz"].as_f64().unwrap() / 1e6 - 42.0).abs() < 5.0);
}

#[test]
fn trace_has_four_columns_per_channel() {
    let pulse =
        r#"{"f_d":10.357e9,"segments":[{"duration":20e-9,"amplitude":[1.0,0.0],"edge":"flat"}]}"#;
    let o = notchlab(&["simulate", "--pulse", pulse, "--state", "gegg"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(!text.contains('\r'));
    let header = text.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 2 + 4 * 4 + 2);
    assert_eq!(text.lines().count(), 1 + 21);
}

#[test]
fn outputs_are_reproducible() {
    let args = ["reflect", "--state", "gegg", "--points", "101"];
    let a = notchlab(&args);
    let b = notchlab(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let first = stdout(&a).lines().nth(1).unwrap().to_string();
    assert_eq!(first.split(',').next().unwrap(), "1.00000000e10");
}

#[test]
fn thread_cap_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_notchlab"))
        .args(["z21", "--pair", "Q1", "--points", "11"])
        .env("NOTCHLAB_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_notchlab"))
        .args(["z21", "--pair", "Q1", "--points", "11"])
        .env("NOTCHLAB_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        o.stdout,
        notchlab(&["z21", "--pair", "Q1", "--points", "11"]).stdout
    );
}

fn write_spectrum(path: &Path, state: SpectrumState) {
    let net = DeviceFile::reference().network().unwrap();
    let grid = linear_grid(10.0e9, 10.9e9, 451).unwrap();
    let s = synth_spectrum(&net, state, 0.2, 1e-9, &grid, 0.0, 0).unwrap();
    let mut text = String::from("freq_hz,phase_rad\n");
    for (f, p) in s.freq.iter().zip(&s.phase) {
        text.push_str(&format!("{f:e},{p:e}\n"));
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn fit_recovers_reference_network() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.csv");
    let e = dir.path().join("e.csv");
    write_spectrum(&g, SpectrumState::AllG);
    write_spectrum(&e, SpectrumState::AllE);
    let dev = write_device(dir.path(), |v| {
        v["channels"][1]["f_r_g_mhz"] = 10387.5.into();
        v["channels"][1]["chi_mhz"] = (-9.5).into();
    });
    let args = [
        "fit",
        "--device",
        &dev,
        "--spectrum-g",
        g.to_str().unwrap(),
        "--spectrum-e",
        e.to_str().unwrap(),
        "--theta0",
        "0.2",
        "--tau",
        "1e-9",
    ];
    let o = notchlab(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let res: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let q2 = &res["channels"][1];
    assert!((q2["f_r_g_mhz"].as_f64().unwrap() - 10386.0).abs() < 1e-3);
    assert!((q2["chi_mhz"].as_f64().unwrap() + 9.9).abs() < 1e-3);
    assert!((res["theta0_rad"].as_f64().unwrap() - 0.2).abs() < 1e-6);

    let only_g = notchlab(&args[..5]);
    assert_eq!(only_g.status.code(), Some(0), "{}", stderr(&only_g));
    let res: Value = serde_json::from_str(&stdout(&only_g)).unwrap();
    assert!(res["channels"][1].get("chi_mhz").is_none());
}

#[test]
fn budget_reports_table_columns() {
    let o = notchlab(&[
        "budget",
        "--snr",
        "6.3",
        "--tau-meas",
        "56e-9",
        "--t1",
        "45e-6",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| {
        row[header.iter().position(|h| *h == name).unwrap()]
            .parse::<f64>()
            .unwrap()
    };
    assert_eq!(format!("{:.2}", col("eps_sep") * 100.0), "0.08");
    assert_eq!(format!("{:.2}", col("eps_cl") * 100.0), "0.06");
}

#[test]
fn calibrate_fits_stark_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("stark.csv");
    let mut text = String::from("power_w,f_hz\n");
    for k in 0..6 {
        let p = k as f64 * 1e-16;
        text.push_str(&format!("{p:e},{:e}\n", 8.189e9 - 2e22 * p));
    }
    std::fs::write(&data, text).unwrap();
    let o = notchlab(&[
        "calibrate",
        "--data",
        data.to_str().unwrap(),
        "--stark-shift-hz",
        "-109.746e6",
        "--chi-hz",
        "-7.8e6",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let res: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((res["f_q_hz"].as_f64().unwrap() - 8.189e9).abs() < 1.0);
    assert!((res["photons"].as_f64().unwrap() - 7.035).abs() < 1e-6);
}

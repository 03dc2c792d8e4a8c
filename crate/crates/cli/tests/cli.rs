use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::Rng;
use rand_distr::StandardNormal;
use vlc_handover::rng::stream;

fn vlcsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vlcsim"))
        .args(args)
        .env_remove("VLCSIM_SCENE_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_waveform(path: &Path, amps: &[f64]) {
    let mut text = String::from("n,time_s,amps\n");
    for (i, a) in amps.iter().enumerate() {
        text.push_str(&format!("{},{},{}\n", i + 1, (i + 1) as f64 * 1e-5, a));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn help_and_version_exit_zero() {
    for args in [&["--help"][..], &["--version"], &["trajectory", "--help"]] {
        let o = vlcsim(args);
        assert_eq!(code(&o), 0, "{args:?}");
    }
}

#[test]
fn subcommand_help_lists_flags_and_units() {
    let cases: [(&str, &[&str]); 4] = [
        (
            "trajectory",
            &[
                "--scene",
                "--path",
                "--seed",
                "--out",
                "--events",
                "--format",
                "--peak-window",
                "--peak-margin",
                "--confirm-frames",
                "--gain-hysteresis",
            ],
        ),
        (
            "bermap",
            &[
                "--scene",
                "--nx",
                "--ny",
                "--mode",
                "--bits",
                "--seed",
                "--noise-std",
                "--out",
                "--format",
            ],
        ),
        ("kurtosis", &["--input"]),
        (
            "waveform",
            &["--scene", "--x", "--y", "--seed", "--payload-bits", "--out"],
        ),
    ];
    for (cmd, flags) in cases {
        let help = stdout(&vlcsim(&[cmd, "--help"]));
        for f in flags {
            assert!(help.contains(f), "{cmd} help lacks {f}");
        }
    }
    let bermap = stdout(&vlcsim(&["bermap", "--help"]));
    assert!(bermap.contains("(amps)") && bermap.contains("(bits)"));
    let waveform = stdout(&vlcsim(&["waveform", "--help"]));
    assert!(waveform.contains("(meters)"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    assert_eq!(code(&vlcsim(&[])), 1);
    assert_eq!(
        code(&vlcsim(&["bermap", "--out", p(&out)])),
        1,
        "missing --seed"
    );
    assert_eq!(
        code(&vlcsim(&[
            "bermap",
            "--seed",
            "1",
            "--nx",
            "0",
            "--out",
            p(&out)
        ])),
        1
    );
    assert_eq!(
        code(&vlcsim(&[
            "bermap",
            "--seed",
            "1",
            "--mode",
            "psk",
            "--out",
            p(&out)
        ])),
        1
    );
    assert_eq!(
        code(&vlcsim(&[
            "trajectory",
            "--seed",
            "1",
            "--out",
            p(&out),
            "--format",
            "xml"
        ])),
        1
    );
    assert!(!out.exists());
}

#[test]
fn configuration_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = vlcsim(&[
        "trajectory",
        "--scene",
        "no_such_scene",
        "--seed",
        "1",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("no_such_scene"));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[room]\nextent_m = [1.0, 1.0]\n").unwrap();
    let o = vlcsim(&[
        "bermap",
        "--scene",
        p(&bad),
        "--seed",
        "1",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 1);

    let o = vlcsim(&["kurtosis", "--input", p(&dir.path().join("missing.csv"))]);
    assert_eq!(code(&o), 1);

    let single = vlc_handover::scene::PAPER_SCENE;
    let cut = single.rfind("[[transmitters]]").unwrap();
    let rx = single.find("[receiver]").unwrap();
    let one_tx = format!("{}{}", &single[..cut], &single[rx..]);
    fs::write(&bad, one_tx).unwrap();
    let o = vlcsim(&[
        "bermap",
        "--scene",
        p(&bad),
        "--seed",
        "1",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 1);
    assert!(
        stderr(&o).contains("at least 2 transmitters"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn kurtosis_of_two_level_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("w.csv");
    write_waveform(&f, &[1.0, 1.0, -1.0, -1.0]);
    let o = vlcsim(&["kurtosis", "--input", p(&f)]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        stdout(&o),
        "kurtosis,excess,mean,std,n,class\n1,-2,0,1,4,platykurtic\n"
    );
}

#[test]
fn constant_waveform_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("flat.csv");
    write_waveform(&f, &[2.5e-6; 100]);
    let o = vlcsim(&["kurtosis", "--input", p(&f)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("zero variance"), "{}", stderr(&o));
}

#[test]
fn gaussian_fixture_is_mesokurtic() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("gauss.csv");
    let mut rng = stream(2024, 0, 0);
    let x: Vec<f64> = (0..100_000)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * 1e-6)
        .collect();
    write_waveform(&f, &x);
    let o = vlcsim(&["kurtosis", "--input", p(&f)]);
    assert_eq!(code(&o), 0);
    let line = stdout(&o).lines().nth(1).unwrap().to_string();
    let k: f64 = line.split(',').next().unwrap().parse().unwrap();
    assert!((k - 3.0).abs() <= 0.05, "{k}");
    assert!(line.ends_with(",mesokurtic"));
}

#[test]
fn trajectory_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for format in ["csv", "json"] {
        let mut runs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("rep{run}.{format}"));
            let o = vlcsim(&[
                "trajectory",
                "--scene",
                "paper_scene",
                "--path",
                "paper_path",
                "--seed",
                "42",
                "--out",
                p(&out),
                "--format",
                format,
            ]);
            assert_eq!(code(&o), 0, "{}", stderr(&o));
            let events = dir.path().join(format!("rep{run}.events.{format}"));
            runs.push((fs::read(&out).unwrap(), fs::read(&events).unwrap()));
        }
        assert_eq!(runs[0], runs[1], "{format}");
    }
    let csv = fs::read_to_string(dir.path().join("rep0.csv")).unwrap();
    assert!(csv.starts_with(
        "label,x_m,y_m,frame,kurtosis,excess,class,gain_t1_a,gain_t2_a,serving_cell\n"
    ));
    assert_eq!(csv.lines().count(), 1 + 13 * 5);
    let events = fs::read_to_string(dir.path().join("rep0.events.csv")).unwrap();
    let lines: Vec<&str> = events.lines().collect();
    assert_eq!(lines[0], "frame_index,from_cell,to_cell,kurtosis_at_peak");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].contains(",1,2,"));
}

#[test]
fn explicit_events_path_and_handover_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let ev = dir.path().join("custom_events.csv");
    let o = vlcsim(&[
        "trajectory",
        "--seed",
        "3",
        "--out",
        p(&out),
        "--events",
        p(&ev),
        "--confirm-frames",
        "2",
        "--frames-per-waypoint",
        "3",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(ev.exists());
    assert_eq!(
        fs::read_to_string(&out).unwrap().lines().count(),
        1 + 13 * 3
    );
    let o = vlcsim(&[
        "trajectory",
        "--seed",
        "3",
        "--out",
        p(&out),
        "--gain-hysteresis",
        "0.5",
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn bermap_default_grid_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("m{run}.csv"));
        let o = vlcsim(&[
            "bermap",
            "--seed",
            "5",
            "--bits",
            "200",
            "--mode",
            "concurrent",
            "--out",
            p(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(stderr(&o).contains("warning"));
        runs.push(fs::read_to_string(&out).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
    let lines: Vec<&str> = runs[0].lines().collect();
    assert_eq!(lines[0], "x_m,y_m,ber_t1,ber_t2,ber_max");
    assert_eq!(lines.len(), 1 + 64);
    for l in &lines[1..] {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[2..].iter().all(|b| (0.0..=1.0).contains(b)));
        assert_eq!(v[4], v[2].max(v[3]));
    }
}

#[test]
fn bermap_noise_override_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.json");
    let o = vlcsim(&[
        "bermap",
        "--seed",
        "5",
        "--nx",
        "2",
        "--ny",
        "3",
        "--bits",
        "100",
        "--noise-std",
        "0",
        "--format",
        "json",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("\"nx\": 2") && text.contains("\"mode\": \"isolated\""));
    let o = vlcsim(&[
        "bermap",
        "--seed",
        "5",
        "--noise-std",
        "-1",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn scene_directory_override() {
    let dir = tempfile::tempdir().unwrap();
    let scene =
        vlc_handover::scene::PAPER_SCENE.replace("noise_std_a = 3.0e-6", "noise_std_a = 0.0");
    fs::write(dir.path().join("quiet.toml"), scene).unwrap();
    let out = dir.path().join("m.csv");
    let args = [
        "bermap",
        "--scene",
        "quiet",
        "--seed",
        "1",
        "--nx",
        "1",
        "--ny",
        "1",
        "--bits",
        "100",
        "--out",
        p(&out),
    ];
    assert_eq!(code(&vlcsim(&args)), 1);
    let o = Command::new(env!("CARGO_BIN_EXE_vlcsim"))
        .args(args)
        .env("VLCSIM_SCENE_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(fs::read_to_string(&out).unwrap().ends_with(",0,0,0\n"));
}

#[test]
fn waveform_export_feeds_kurtosis() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for f in [&a, &b] {
        let o = vlcsim(&[
            "waveform",
            "--x",
            "0.8",
            "--y",
            "0.7",
            "--seed",
            "9",
            "--out",
            p(f),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read_to_string(&a).unwrap().lines().count(), 1 + 64 * 50);
    assert_eq!(code(&vlcsim(&["kurtosis", "--input", p(&a)])), 0);
    let o = vlcsim(&[
        "waveform",
        "--x",
        "3.0",
        "--y",
        "0.7",
        "--seed",
        "9",
        "--out",
        p(&a),
    ]);
    assert_eq!(code(&o), 1);
}

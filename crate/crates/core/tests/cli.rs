use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdi-twirl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&cli(&["--help"])), 0);
    assert_eq!(code(&cli(&["sweep-alpha", "--help"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&cli(&[])), 1);
    assert_eq!(code(&cli(&["no-such-command"])), 1);
    assert_eq!(code(&cli(&["sweep-alpha", "--samples", "many"])), 1);
    assert_eq!(
        code(&cli(&["sweep-alpha", "--protected", "--unprotected"])),
        1
    );
    assert_eq!(code(&cli(&["sweep-alpha", "--steps", "1"])), 1);
    assert_eq!(code(&cli(&["run-protocol", "--noise", "sweep"])), 1);
}

#[test]
fn unwritable_output_exits_three() {
    let o = cli(&[
        "sweep-alpha",
        "--samples",
        "1",
        "--steps",
        "2",
        "--out",
        "/nonexistent-dir/x.csv",
    ]);
    assert_eq!(code(&o), 3);
    assert_eq!(
        code(&cli(&[
            "sweep-alpha",
            "--config",
            "/nonexistent-dir/c.toml"
        ])),
        3
    );
}

#[test]
fn verification_failures_exit_two() {
    let o = cli(&["verify-design", "--corrupt-element", "4"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("element V_4 differs"));
    let o = cli(&["verify-design", "--tolerance", "1e-15"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("double-precision floor"));
}

#[test]
fn csv_header_records_config() {
    let o = cli(&[
        "sweep-alpha",
        "--samples",
        "10",
        "--steps",
        "3",
        "--seed",
        "99",
        "--unprotected",
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.contains(&"# seed = 99"));
    assert!(lines.contains(&"# samples = 10"));
    assert!(lines.contains(&"# protection = \"unprotected\""));
    assert!(lines.contains(&"# grid_resolution_deg: 45"));
    let header = lines.iter().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        *header,
        "alpha_deg,qber_unprotected_exact,qber_unprotected_sampled,se_unprotected_sampled"
    );
    assert_eq!(lines.iter().filter(|l| !l.starts_with('#')).count(), 4);
    assert!(!text.contains('\r'));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "[common]\nseed = 3\nsamples = 7\n\n[sweep-pguess]\nsteps = 4\n",
    )
    .unwrap();
    let out = dir.path().join("p.csv");
    let o = cli(&[
        "sweep-pguess",
        "--config",
        cfg.to_str().unwrap(),
        "--samples",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out);
    assert!(text.contains("# seed = 3\n"));
    assert!(text.contains("# samples = 9\n"));
    assert!(text.contains("# steps = 4\n"));
}

#[test]
fn protocol_event_logs_for_both_modes() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("ev.csv");
    let summary = dir.path().join("s.csv");
    let o = cli(&[
        "run-protocol",
        "--samples",
        "400",
        "--noise",
        "bias",
        "--axis",
        "y",
        "--bias",
        "0.4",
        "--events",
        events.to_str().unwrap(),
        "--out",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = read(&summary);
    assert!(s.lines().any(|l| l.starts_with("unprotected,400,")));
    assert!(s.lines().any(|l| l.starts_with("protected,400,")));
    for mode in ["unprotected", "protected"] {
        let log = read(&dir.path().join(format!("ev.{mode}.csv")));
        let rows: Vec<&str> = log.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(
            rows[0],
            "index,k,basis_a,bit_a,basis_b,bit_b,announced,effective,sifted,error"
        );
        assert_eq!(rows.len(), 401);
    }
}

#[test]
fn protocol_noiseless_protected_has_no_errors() {
    let o = cli(&["run-protocol", "--samples", "10000", "--protected"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let row = text.lines().find(|l| l.starts_with("protected,")).unwrap();
    let cells: Vec<&str> = row.split(',').collect();
    assert_eq!(cells[3], "0");
    assert_eq!(cells[7], "0");
}

#[test]
fn same_seed_same_bytes() {
    let args = [
        "sweep-bias",
        "--samples",
        "200",
        "--steps",
        "6",
        "--seed",
        "11",
    ];
    let a = cli(&args);
    let b = cli(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = cli(&[
        "sweep-bias",
        "--samples",
        "200",
        "--steps",
        "6",
        "--seed",
        "12",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

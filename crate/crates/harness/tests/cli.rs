use std::process::Command;

fn pirec() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pirec"))
}

fn run(args: &[&str]) -> std::process::Output {
    pirec().args(args).env_remove(pirec::THREADS_ENV).output().unwrap()
}

#[test]
fn calibrate_prints_table_threshold() {
    let out = run(&["calibrate", "--K", "512", "--B", "5", "--target-ew", "7.5"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().next(), Some("A = 3.48"));
}

#[test]
fn calibrate_feasible_bands() {
    let out = run(&["calibrate", "--K", "512", "--feasible", "--max-ew", "10", "--max-loss", "0.02"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("B = 5:")), "{stdout}");
}

#[test]
fn missing_config_is_usage_error() {
    let out = run(&["sweep", "--config", "missing.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert!(stderr.starts_with("pirec: error[io]: missing.cfg"));
}

#[test]
fn unknown_flag_and_bad_config_exit_2() {
    assert_eq!(run(&["simulate", "--bogus"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "K = 64\ntrials = zero\n").unwrap();
    let out = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("bad.cfg:2:"));
    let out = run(&["sweep", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_is_deterministic() {
    let args = ["simulate", "--seed", "7", "--K", "48", "--M", "8", "--trials", "6", "--snr-db", "1"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn cli_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.cfg");
    let out = dir.path().join("grid.csv");
    std::fs::write(&cfg, "# small grid\nK = 32\nM = 6\nsnr-db = 0, 3\ntrials = 4\nseed = 3\n").unwrap();
    let status = run(&["sweep", "--config", cfg.to_str().unwrap(), "--M", "5", "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# schema=1");
    assert_eq!(lines[1], "# K=32");
    assert!(lines[2].starts_with("snr_db,M,A,B,monitor_flag,trials,P_C,E_W_measured,delta_P_C,"));
    assert_eq!(lines.len(), 5);
    assert!(lines[3].starts_with("0,5,"));
    assert!(lines[4].starts_with("3,5,"));
}

#[test]
fn sweep_bytes_repeat_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let path = dir.path().join(format!("t{threads}.csv"));
        let out = run(&[
            "sweep", "--K", "40", "--M", "4,8", "--snr-db", "-1,2", "--trials", "5", "--seed", "11",
            "--threads", threads, "--out", path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn simulate_dataset_then_recover() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("blocks.csv");
    let trace = dir.path().join("trace.csv");
    let out = run(&[
        "simulate", "--K", "40", "--M", "20", "--snr-db", "8", "--trials", "1",
        "--dataset-out", data.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&[
        "recover", "--input", data.to_str().unwrap(), "--snr-db", "8", "--M", "20",
        "--out", trace.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("correct = 40/40"), "{stdout}");
    let trace = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(trace.lines().nth(1), Some("iteration,pi_hat,l_max,epsilon"));
    assert_eq!(trace.lines().count(), 42);
}

#[test]
fn recover_rejects_malformed_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, "# schema=1\nblock,index,x,y,z\n0,0,1.0,1.0\n").unwrap();
    let out = run(&["recover", "--input", data.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsma-sim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn binned_run_writes_header_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bins.csv");
    let cfg = write_config(dir.path(), "c.conf", "experiment = binned_gains\nn_drops = 200\n");
    let o = sim(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "rho_lo,rho_hi,alpha_lo,alpha_hi,n,g_w,g_s,g_sum,n_excluded"
    );
    assert_eq!(csv.lines().count(), 1 + 5 * 3);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with("binned_gains: 200 evaluations"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.conf", "experiment = pair_cases\nn_drops = 5\nseed = 4\n");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(
        sim(&["run", "--config", &cfg, "--out", a.to_str().unwrap(), "--workers", "1"])
            .status
            .success()
    );
    assert!(
        sim(&["run", "--config", &cfg, "--out", b.to_str().unwrap(), "--workers", "2"])
            .status
            .success()
    );
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.conf", "experiment = pair_cases\nn_drops = 1\nseed = 1\n");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(sim(&["run", "--config", &cfg, "--out", a.to_str().unwrap()])
        .status
        .success());
    let o = sim(&[
        "run",
        "--config",
        &cfg,
        "--out",
        b.to_str().unwrap(),
        "--seed",
        "2",
        "--drops",
        "3",
    ]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("27 evaluations"));
    assert_ne!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn config_errors_exit_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let cfg = write_config(dir.path(), "c.conf", "experiment = overloaded\nn_tx = 3\n");
    let o = sim(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_tx"));
    assert!(!out.exists());

    let cfg = write_config(dir.path(), "d.conf", "experiment = isac\n");
    let o = sim(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("isac_option"));
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.conf", "experiment = overloaded\nn_slots = 2\n");
    let missing = dir.path().join("no/such/dir/out.csv");
    let o = sim(&["run", "--config", &cfg, "--out", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));

    let o = sim(&["run", "--config", dir.path().join("absent.conf").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn failed_run_keeps_previous_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    fs::write(&out, "previous\n").unwrap();
    let cfg = write_config(dir.path(), "c.conf", "experiment = percentile_gains\nn_drops = 10\n");
    let o = sim(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(fs::read_to_string(&out).unwrap(), "previous\n");
}

#[test]
fn every_experiment_has_its_header() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            "experiment = percentile_gains\nn_drops = 100\n",
            "percentile,metric,sdma_value,rsma_value,gain_pct,gt100_flag",
        ),
        (
            "experiment = pair_cases\nn_drops = 2\n",
            "case_id,rho,alpha_db,scheme,user1_rate,user2_rate",
        ),
        ("experiment = overloaded\n", "slot,scheme,user,rate"),
        (
            "experiment = isac\nisac_option = a.ii\nisac_scenario = s3\nisac_grid_points = 5\n",
            "option,scenario,mu,common_fraction,throughput,radar_snr_db,on_envelope",
        ),
    ];
    for (n, (body, header)) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("{n}.conf"), body);
        let out = dir.path().join(format!("{n}.csv"));
        let o = sim(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let csv = fs::read_to_string(&out).unwrap();
        assert_eq!(csv.lines().next().unwrap(), *header);
        assert!(csv.ends_with('\n') && !csv.contains('\r'));
    }
}

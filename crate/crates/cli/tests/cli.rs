use std::process::Command;

use paqft_cli::config::RunConfig;

fn paqft(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_paqft")).args(args).output().expect("binary runs")
}

#[test]
fn suite_flag_overrides_experiments_and_csv_goes_to_out() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    let mut c = RunConfig::reference();
    c.lattice.n_t = 8;
    std::fs::write(&config, c.to_text()).unwrap();
    let out = dir.path().join("r.csv");
    let o = paqft(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--suite",
        "timeslice",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("suite,check_id,residual,tolerance,status,seconds"));
    assert!(lines.clone().count() > 0);
    assert!(lines.all(|l| l.starts_with("timeslice,")));
}

#[test]
fn config_errors_exit_2() {
    let o = paqft(&["run", "--config", "/nonexistent/config.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, RunConfig::reference().to_text()).unwrap();
    let o = paqft(&["run", "--config", config.to_str().unwrap(), "--suite", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope"));
    std::fs::write(&config, "[lattice]\nn_t = 8\n").unwrap();
    assert_eq!(paqft(&["run", "--config", config.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn reference_prints_a_loadable_config() {
    let o = paqft(&["reference"]);
    assert_eq!(o.status.code(), Some(0));
    let c = RunConfig::parse(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(c, RunConfig::reference());
}

use std::fs;
use std::process::Command;

fn netssm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_netssm"))
}

const CONFIG: &str = r#"
output_dir = "out"
[scenario]
kind = "synthetic-er"
order = 5
horizon = 50
seed = 9
[scenario.dynamics]
kind = "periodic-flip"
period = 25
p_c = 0.2
[[methods]]
kind = "avg"
[[methods]]
kind = "rls"
window = 8
"#;

#[test]
fn run_generate_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, CONFIG).unwrap();

    let run = netssm()
        .args(["run"])
        .arg(&cfg)
        .args(["--threads", "2", "--output-dir"])
        .arg(dir.path().join("run"))
        .output()
        .unwrap();
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(dir.path().join("run/results.csv").exists());

    let gen = netssm()
        .arg("generate")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("traj"))
        .output()
        .unwrap();
    assert!(
        gen.status.success(),
        "{}",
        String::from_utf8_lossy(&gen.stderr)
    );

    let replay = netssm()
        .arg("replay")
        .arg(dir.path().join("traj"))
        .arg(&cfg)
        .arg("--output-dir")
        .arg(dir.path().join("replay"))
        .output()
        .unwrap();
    assert!(
        replay.status.success(),
        "{}",
        String::from_utf8_lossy(&replay.stderr)
    );
    assert_eq!(
        fs::read(dir.path().join("run/results.csv")).unwrap(),
        fs::read(dir.path().join("replay/results.csv")).unwrap()
    );
}

#[test]
fn seed_override_changes_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, CONFIG).unwrap();
    let mut outputs = Vec::new();
    for (name, seed) in [("a", "9"), ("b", "10")] {
        let out = dir.path().join(name);
        let st = netssm()
            .arg("run")
            .arg(&cfg)
            .args([
                "--seed",
                seed,
                "--horizon",
                "20",
                "--sigma-obs",
                "0.2",
                "--output-dir",
            ])
            .arg(&out)
            .output()
            .unwrap();
        assert!(st.status.success());
        outputs.push(fs::read_to_string(out.join("results.csv")).unwrap());
    }
    assert_ne!(outputs[0], outputs[1]);
    assert_eq!(outputs[0].lines().count(), 1 + 2 * 20);
    let copy = fs::read_to_string(dir.path().join("b/config.toml")).unwrap();
    assert!(copy.contains("seed = 10"));
    assert!(copy.contains("sigma_obs = 0.2"));
}

fn error_line(args: &[&str], config: Option<&str>) -> (i32, String) {
    let dir = tempfile::tempdir().unwrap();
    let mut cmd = netssm();
    cmd.current_dir(dir.path()).args(args);
    if let Some(text) = config {
        fs::write(dir.path().join("c.toml"), text).unwrap();
        cmd.arg("c.toml");
    }
    let out = cmd.output().unwrap();
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    (out.status.code().unwrap(), stderr.trim_end().to_string())
}

#[test]
fn failures_print_one_categorized_line() {
    let (code, line) = error_line(&["run", "missing.toml"], None);
    assert_ne!(code, 0);
    assert!(line.starts_with("error[not-found]: missing.toml"), "{line}");

    let (code, line) = error_line(&["run"], Some("output_dir = 3\n"));
    assert_ne!(code, 0);
    assert!(line.starts_with("error[parse]: c.toml:1:"), "{line}");

    let bad = CONFIG
        .replace("horizon = 50", "horizon = 0")
        .replace("window = 8", "window = 0");
    let (code, line) = error_line(&["run"], Some(&bad));
    assert_ne!(code, 0);
    assert!(line.starts_with("error[config]: "), "{line}");
    assert!(
        line.contains("scenario.horizon") && line.contains("methods[1].window"),
        "{line}"
    );

    let (code, line) = error_line(&["frobnicate"], None);
    assert_eq!(code, 2);
    assert!(line.starts_with("error[usage]: "), "{line}");
}

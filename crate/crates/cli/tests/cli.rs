use std::process::Command;

fn bbmlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bbmlab"))
}

fn scratch(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("bbmlab-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn rotation_lemma_passes_and_writes_manifest() {
    let dir = scratch("rot");
    let out = bbmlab().args(["rotation-lemma", "--out-dir"]).arg(&dir).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("criterion 4: PASS"), "{stdout}");
    let manifest = std::fs::read_to_string(dir.join("rotation-lemma_manifest.json")).unwrap();
    assert!(manifest.contains("\"experiment\": \"rotation-lemma\""));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn unknown_subcommand_exits_2() {
    assert_eq!(bbmlab().arg("no-such-experiment").status().unwrap().code(), Some(2));
}

#[test]
fn bad_override_exits_2() {
    let dir = scratch("bad");
    let st = bbmlab().args(["rotation-lemma", "--set", "no_such_key=1", "--out-dir"]).arg(&dir).status().unwrap();
    assert_eq!(st.code(), Some(2));
    let st = bbmlab().args(["rotation-lemma", "--set", "novalue"]).status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn print_config_reflects_overrides() {
    let out = bbmlab().args(["simulate", "--print-config", "--set", "t=3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("experiment = simulate\n"));
    assert!(text.lines().any(|l| l == "t = 3"), "{text}");
}

#[test]
fn config_file_is_applied() {
    let dir = scratch("conf");
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("x.conf");
    std::fs::write(&file, "experiment = simulate\nt = 2.5\n").unwrap();
    let out = bbmlab().args(["simulate", "--print-config", "--config"]).arg(&file).output().unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).lines().any(|l| l == "t = 2.5"));
    std::fs::write(&file, "experiment = duality\n").unwrap();
    assert_eq!(bbmlab().args(["simulate", "--config"]).arg(&file).status().unwrap().code(), Some(2));
    std::fs::remove_dir_all(dir).unwrap();
}

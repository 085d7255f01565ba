use std::path::Path;
use std::process::{Command, Output};

use boltzmix::experiments::Manifest;

fn boltzmix(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boltzmix"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn toy_learn_writes_outputs_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = boltzmix(
            &["toy-learn", "--iterations", "15", "--seed", "4", "--out", out.to_str().unwrap()],
            tmp.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        read_dir_sorted(&out)
    };
    let a = run("a");
    let names: Vec<_> = a.iter().map(|(n, _)| n.as_str()).collect();
    assert!(names.contains(&"manifest.json"));
    assert!(names.contains(&"toy_mixture-2.csv"));
    assert!(names.contains(&"toy_exact.json"));
    assert_eq!(a, run("b"));
}

#[test]
fn config_file_overrides_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    std::fs::write(&cfg, "seed = 11\n[inference_bench]\nn_nets = 2\nn_nodes = 4\n").unwrap();
    let out = tmp.path().join("bench");
    let o = boltzmix(
        &[
            "inference-bench",
            "--seed",
            "1",
            "--nets",
            "5",
            "--components",
            "1,2",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = Manifest::load(out.join("manifest.json")).unwrap();
    assert_eq!(manifest.seed, 11);
    assert_eq!(manifest.config.inference_bench.n_nets, 2);
    assert_eq!(manifest.config.inference_bench.components, vec![1, 2]);
    let summary = std::fs::read_to_string(out.join("inference_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
}

#[test]
fn bad_config_exits_nonzero_with_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "[toy_learn]\nlearning_rate = -1.0\n").unwrap();
    let o = boltzmix(&["toy-learn", "--config", cfg.to_str().unwrap()], tmp.path());
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("learning_rate"), "{err}");

    std::fs::write(&cfg, "schema_version = 7\n").unwrap();
    let o = boltzmix(&["gen-data", "--config", cfg.to_str().unwrap()], tmp.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema_version"));

    let o = boltzmix(&["toy-learn", "--engines", "gibbs"], tmp.path());
    assert!(!o.status.success());
}

#[test]
fn gen_data_default_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let o = boltzmix(&["gen-data", "--count-per-class", "2", "--nets", "3"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("out").join("gen-data");
    let names: Vec<_> = read_dir_sorted(&dir).into_iter().map(|(n, _)| n).collect();
    assert_eq!(names, ["manifest.json", "patterns.csv", "random_nets.json"]);
}

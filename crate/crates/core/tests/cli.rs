use std::process::Command;

use relu_dc::cli::{parse_table, run_with, RunManifest};

fn run(args: &[&str]) -> (i32, String, String) {
    let argv: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with(&argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn manifest(dir: &std::path::Path) -> RunManifest {
    RunManifest::from_json(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn coeffs_prints_the_series_coefficients() {
    let (code, out, _) = run(&["coeffs", "--n", "4"]);
    assert_eq!(code, 0);
    assert_eq!(out, "n,a_n\n0,1\n1,0.5\n2,-0.125\n3,0.0625\n");
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let (code, out, err) = run(&["frobnicate"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("Usage"), "{err}");
    let (code, _, _) = run(&["approx", "--nope"]);
    assert_eq!(code, 2);
}

#[test]
fn runtime_failures_exit_1_with_the_error_name() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, err) = run(&["approx", "--fs", "30", "--out", out]);
    assert_eq!(code, 1);
    assert!(err.contains("AliasingError"), "{err}");
    let (code, _, err) = run(&["proto", "--kind", "dif", "--depth", "0", "--out", out]);
    assert_eq!(code, 1);
    assert!(err.contains("InvalidArgument"), "{err}");
}

#[test]
fn approx_writes_every_artifact_and_lists_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(&["approx", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.starts_with("rrmse="));
    let m = manifest(dir.path());
    assert_eq!(m.command, "approx");
    assert_eq!(m.seed, 0);
    for key in ["f0", "harmonics", "fs", "duration", "terms", "prescale", "rrmse_definition", "prng"] {
        assert!(m.full_config.contains_key(key), "{key}");
    }
    for f in ["approx_time.csv", "approx_spectrum.csv", "convergence.json", "manifest.json"] {
        assert!(m.output_files.iter().any(|o| o == f), "{f}");
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let t = parse_table(&std::fs::read(dir.path().join("approx_time.csv")).unwrap()).unwrap();
    assert_eq!(t.header, ["t", "x", "relu_x", "approx"]);
    assert_eq!(t.rows.len(), 1024);
    assert_eq!(t.column("x").unwrap()[0], 4.0);
    let s = parse_table(&std::fs::read(dir.path().join("approx_spectrum.csv")).unwrap()).unwrap();
    assert_eq!(s.header, ["f", "abs_X", "abs_Y_relu", "abs_Y_approx"]);
    assert_eq!(s.rows.len(), 513);
}

#[test]
fn proto_emits_one_column_per_layer() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run(&["proto", "--kind", "avg", "--depth", "3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let t = parse_table(&std::fs::read(dir.path().join("proto_spectra.csv")).unwrap()).unwrap();
    assert_eq!(t.header, ["f", "layer_0", "layer_1", "layer_2", "layer_3"]);
    let occ = parse_table(&std::fs::read(dir.path().join("occupancy.csv")).unwrap()).unwrap();
    assert_eq!(occ.rows.len(), 4);
}

#[test]
fn seed_is_echoed_into_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(&["zero-train", "--seed", "7", "--duration", "2", "--sweep", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    let m = manifest(dir.path());
    assert_eq!(m.seed, 7);
    assert!(m.results.contains_key("accuracy"));
    let t = parse_table(&std::fs::read(dir.path().join("dc_by_class.csv")).unwrap()).unwrap();
    assert_eq!(t.header, ["f_i", "dc", "class"]);
    assert_eq!(t.rows.len(), 300);
}

#[test]
fn train_compare_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["train-compare", "--reps", "2", "--epochs", "3", "--train-per-class", "6", "--test-per-class", "2", "--seed", "4"];
    let mut args = args.to_vec();
    args.extend(["--out", dir.path().to_str().unwrap()]);
    assert_eq!(run(&args).0, 0);
    let loss = parse_table(&std::fs::read(dir.path().join("loss_curves.csv")).unwrap()).unwrap();
    assert_eq!(loss.header, ["epoch", "net", "median", "q25", "q75"]);
    assert_eq!(loss.rows.len(), 9);
    let dist = parse_table(&std::fs::read(dir.path().join("distance_curves.csv")).unwrap()).unwrap();
    assert_eq!(dist.header, ["epoch", "net", "layer", "median", "q25", "q75"]);
    assert_eq!(dist.rows.len(), 3 * 2 * 4);
    assert_eq!(manifest(dir.path()).seed, 4);
}

#[test]
fn binary_uses_the_same_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_relu-dc");
    let ok = Command::new(bin).args(["coeffs", "--n", "2"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(String::from_utf8(ok.stdout).unwrap(), "n,a_n\n0,1\n1,0.5\n");
    let bad = Command::new(bin).arg("frobnicate").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(!bad.stderr.is_empty());
}

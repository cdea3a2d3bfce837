//! Exit-code contract and file handling of the command-line driver:
//! 0 = checks passed, 1 = mathematical violation, 2 = malformed input.

use std::path::Path;
use std::process::{Command, Output};

fn ovf(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ovf"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn gen_verify_stationarize_happy_path() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let gen = ovf(
        &["gen", "--atoms", "4", "--case", "mixed", "--twist", "--seed", "9", "-o", "inst.json"],
        p,
    );
    assert_eq!(code(&gen), 0, "{}", String::from_utf8_lossy(&gen.stderr));

    let verify = ovf(
        &["verify", "--in", "inst.json", "--samples", "300", "--trials", "30", "-o", "rep.json"],
        p,
    );
    assert_eq!(code(&verify), 0);
    let report = std::fs::read_to_string(p.join("rep.json")).unwrap();
    assert!(report.contains("\"pass\":true"));

    let st = ovf(
        &["stationarize", "--in", "inst.json", "-o", "pair.json", "--report", "srep.json",
          "--samples", "200", "--trials", "20"],
        p,
    );
    assert_eq!(code(&st), 0);
    let check = ovf(&["check-pair", "--in", "inst.json", "--pair", "pair.json"], p);
    assert_eq!(code(&check), 0);
    let rt = ovf(&["roundtrip", "--in", "inst.json"], p);
    assert_eq!(code(&rt), 0);
}

#[test]
fn truncated_json_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ovf(&["gen", "--atoms", "2", "--seed", "1", "-o", "inst.json"], p);
    let body = std::fs::read_to_string(p.join("inst.json")).unwrap();
    std::fs::write(p.join("broken.json"), &body[..body.len() / 2]).unwrap();
    let verify = ovf(&["verify", "--in", "broken.json"], p);
    assert_eq!(code(&verify), 2);
    let st = ovf(&["stationarize", "--in", "broken.json", "-o", "x.json"], p);
    assert_eq!(code(&st), 2);
}

#[test]
fn missing_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let verify = ovf(&["verify", "--in", "nope.json"], dir.path());
    assert_eq!(code(&verify), 2);
}

#[test]
fn zero_atoms_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let gen = ovf(&["gen", "--atoms", "0", "-o", "x.json"], dir.path());
    assert_eq!(code(&gen), 2);
}

#[test]
fn perturbed_instance_fails_verify_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ovf(&["gen", "--atoms", "4", "--case", "mixed", "--seed", "4", "-o", "inst.json"], p);
    // bump one basis-vector coordinate by 0.1 through the JSON
    let body = std::fs::read_to_string(p.join("inst.json")).unwrap();
    let mut wire: serde_json::Value = serde_json::from_str(&body).unwrap();
    let entry = &mut wire["values"][0][1][0][0];
    let old = entry.as_f64().unwrap();
    *entry = serde_json::json!(old + 0.1);
    std::fs::write(p.join("bad.json"), serde_json::to_string(&wire).unwrap()).unwrap();

    let verify = ovf(&["verify", "--in", "bad.json", "--samples", "300", "-o", "rep.json"], p);
    assert_eq!(code(&verify), 1);
    let report = std::fs::read_to_string(p.join("rep.json")).unwrap();
    assert!(report.contains("witnesses"));
    assert!(report.contains("\"pass\":false"));

    // stationarize refuses before solving without --skip-verify
    let st = ovf(&["stationarize", "--in", "bad.json", "-o", "pair.json"], p);
    assert_eq!(code(&st), 1);
    assert!(!p.join("pair.json").exists());
}

#[test]
fn proj_build_parse_orth() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let build = ovf(&["proj", "build", "--a", "0.5", "--v-re", "1", "-o", "block.json"], p);
    assert_eq!(code(&build), 0);
    let body = std::fs::read_to_string(p.join("block.json")).unwrap();
    assert!(body.contains("5.0000000000000000e-1"));

    let parse = ovf(&["proj", "parse", "--in", "block.json", "-o", "canon.json"], p);
    assert_eq!(code(&parse), 0);

    // orthogonal complement pair: p(a, v) vs p(1-a, -v)
    let comp = ovf(&["proj", "build", "--a", "0.5", "--v-re", "-1", "-o", "cblock.json"], p);
    assert_eq!(code(&comp), 0);
    let cparse = ovf(&["proj", "parse", "--in", "cblock.json", "-o", "ccanon.json"], p);
    assert_eq!(code(&cparse), 0);
    let orth = ovf(&["proj", "orth", "--p", "canon.json", "--q", "ccanon.json", "-o", "orth.json"], p);
    assert_eq!(code(&orth), 0);
    let body = std::fs::read_to_string(p.join("orth.json")).unwrap();
    assert!(body.contains("\"orthogonal\":true"));

    // same projection against itself is not orthogonal, still exit 0
    let self_orth = ovf(&["proj", "orth", "--p", "canon.json", "--q", "canon.json"], p);
    assert_eq!(code(&self_orth), 0);
    assert!(String::from_utf8_lossy(&self_orth.stdout).contains("\"orthogonal\":false"));
}

#[test]
fn proj_parse_rejects_non_projection_with_residual() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("notproj.json"),
        r#"{"space":{"atoms":["a0"],"weights":[1.0]},
            "blocks":[[[[0.5,0.0],[0.1,0.0]],[[0.1,0.0],[0.5,0.0]]]]}"#,
    )
    .unwrap();
    let parse = ovf(&["proj", "parse", "--in", "notproj.json"], p);
    assert_eq!(code(&parse), 2);
    assert!(String::from_utf8_lossy(&parse.stderr).contains("residual"));
}

#[test]
fn refine_missing_field_exits_2_and_constant_profile_passes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("incomplete.json"),
        r#"{"total_measure": 1.0, "rho11": {"breakpoints": [0.0, 1.0], "coeffs": [[0.5]]}}"#,
    )
    .unwrap();
    let refine = ovf(&["refine", "--profile", "incomplete.json"], p);
    assert_eq!(code(&refine), 2);

    std::fs::write(
        p.join("const.json"),
        r#"{"total_measure": 1.0,
            "rho11": {"breakpoints": [0.0, 1.0], "coeffs": [[0.5]]},
            "rho22": {"breakpoints": [0.0, 1.0], "coeffs": [[0.5]]},
            "r12": {"breakpoints": [0.0, 1.0], "coeffs": [[0.45]]},
            "r21": {"breakpoints": [0.0, 1.0], "coeffs": [[0.55]]},
            "phi12_re": {"breakpoints": [0.0, 1.0], "coeffs": [[0.1]]},
            "phi12_im": {"breakpoints": [0.0, 1.0], "coeffs": [[0.0]]}}"#,
    )
    .unwrap();
    let refine = ovf(
        &["refine", "--profile", "const.json", "--levels", "1,2,4,8,16,32,64", "--csv", "c.csv"],
        p,
    );
    assert_eq!(code(&refine), 0, "{}", String::from_utf8_lossy(&refine.stderr));
    let csv = std::fs::read_to_string(p.join("c.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[2].parse::<f64>().unwrap(), 0.0, "sup error must be exactly zero");
        assert_eq!(cols[4], "0");
    }
}

#[test]
fn gen_from_spec_file_and_infeasible_spec() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("spec.json"),
        r#"{"cases":["rank1","rank2","rank2"],"seed":21,"split":0.25,"twist":true,
            "random_weights":false,"dim_policy":"minimal"}"#,
    )
    .unwrap();
    let gen = ovf(&["gen", "--spec", "spec.json", "-o", "inst.json"], p);
    assert_eq!(code(&gen), 0, "{}", String::from_utf8_lossy(&gen.stderr));
    let verify = ovf(&["verify", "--in", "inst.json", "--samples", "300"], p);
    assert_eq!(code(&verify), 0);

    std::fs::write(p.join("badspec.json"), r#"{"cases":[],"seed":0}"#).unwrap();
    let gen = ovf(&["gen", "--spec", "badspec.json", "-o", "x.json"], p);
    assert_eq!(code(&gen), 2);

    std::fs::write(p.join("badsplit.json"), r#"{"cases":["rank1"],"seed":0,"split":1.5}"#).unwrap();
    let gen = ovf(&["gen", "--spec", "badsplit.json", "-o", "x.json"], p);
    assert_eq!(code(&gen), 2);
}

#[test]
fn single_rank1_atom_pair_matches_closed_form_via_cli() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ovf(
        &["gen", "--atoms", "1", "--case", "rank1", "--split", "0.3", "--seed", "7", "-o", "i.json"],
        p,
    );
    let st = ovf(
        &["stationarize", "--in", "i.json", "-o", "pair.json", "--report", "rep.json",
          "--samples", "100", "--trials", "10"],
        p,
    );
    assert_eq!(code(&st), 0);
    let pair: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.join("pair.json")).unwrap()).unwrap();
    let phi00 = pair["phi"]["entries"][0][0][0][0].as_f64().unwrap();
    let psi00 = pair["psi"]["entries"][0][0][0][0].as_f64().unwrap();
    assert!((phi00 - 0.7).abs() < 1e-12, "phi_11 = {phi00}");
    assert!((psi00 - 0.3).abs() < 1e-12, "psi_11 = {psi00}");
    let report = std::fs::read_to_string(p.join("rep.json")).unwrap();
    assert!(report.contains("\"case\":\"rank1\""));
}

#[test]
fn sixteen_atom_stationarize_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ovf(
        &["gen", "--atoms", "16", "--case", "mixed", "--twist", "--seed", "13", "-o", "i.json"],
        p,
    );
    let st = ovf(
        &["stationarize", "--in", "i.json", "-o", "pair.json", "--samples", "300", "--trials", "30"],
        p,
    );
    assert_eq!(code(&st), 0, "{}", String::from_utf8_lossy(&st.stderr));
}

#[test]
fn check_pair_detects_wrong_pair() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ovf(&["gen", "--atoms", "2", "--case", "rank1", "--split", "0.3", "--seed", "2", "-o", "i.json"], p);
    ovf(&["stationarize", "--in", "i.json", "-o", "pair.json", "--samples", "100", "--trials", "10"], p);
    // corrupt the pair: negate one diagonal entry
    let body = std::fs::read_to_string(p.join("pair.json")).unwrap();
    let mut wire: serde_json::Value = serde_json::from_str(&body).unwrap();
    let entry = &mut wire["phi"]["entries"][0][0][0][0];
    let old = entry.as_f64().unwrap();
    *entry = serde_json::json!(-old - 0.2);
    std::fs::write(p.join("badpair.json"), serde_json::to_string(&wire).unwrap()).unwrap();
    let check = ovf(&["check-pair", "--in", "i.json", "--pair", "badpair.json"], p);
    assert_eq!(code(&check), 1);
}

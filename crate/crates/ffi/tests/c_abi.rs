use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use cdgate_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = cdg_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

#[test]
fn gate_phases_through_handles() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(cdg_config_from_preset(cstr("fig2").as_ptr(), &mut cfg), CdgStatus::Ok);
        let mut res = ptr::null_mut();
        assert_eq!(cdg_gate_run(cfg, &mut res), CdgStatus::Ok);
        for i in 1..4 {
            let mut p = 0.0;
            assert_eq!(cdg_gate_return_population(res, i, &mut p), CdgStatus::Ok);
            assert!(p > 0.999, "input {i}: {p}");
            let mut phi = 0.0;
            assert_eq!(cdg_gate_phase(res, i, &mut phi), CdgStatus::Ok);
            assert!((phi.abs() - std::f64::consts::PI).abs() < 1e-2, "input {i}: {phi}");
        }
        let mut x = 0.0;
        assert_eq!(cdg_gate_leakage(res, 4, &mut x), CdgStatus::IndexOutOfRange);
        assert!(last_error().contains("index 4"));
        cdg_gate_free(res);
        cdg_config_free(cfg);
    }
}

#[test]
fn bell_matches_library() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(cdg_config_from_preset(cstr("fig4").as_ptr(), &mut cfg), CdgStatus::Ok);
        let mut score = CdgBellScore::default();
        assert_eq!(cdg_bell(cfg, &mut score), CdgStatus::Ok);
        cdg_config_free(cfg);
        let cfg = cdgate::config::load_preset("fig4").unwrap();
        let direct = cdgate::gate::prepare_bell(&cfg.protocol_config().unwrap()).unwrap();
        assert_eq!(score.fidelity, direct.score.fidelity);
        assert!((score.p00 + score.p11 - 1.0).abs() < 1e-3);
    }
}

#[test]
fn density_runs_report_undefined_phase() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(cdg_config_from_preset(cstr("fig4").as_ptr(), &mut cfg), CdgStatus::Ok);
        let mut res = ptr::null_mut();
        assert_eq!(cdg_gate_run(cfg, &mut res), CdgStatus::Ok);
        let mut phi = 0.0;
        assert_eq!(cdg_gate_phase(res, 1, &mut phi), CdgStatus::PhaseUndefined);
        assert_eq!(cdg_gate_conditional_phase(res, &mut phi), CdgStatus::PhaseUndefined);
        cdg_gate_free(res);
        cdg_config_free(cfg);
    }
}

#[test]
fn config_errors_and_edits() {
    unsafe {
        let mut cfg = ptr::null_mut();
        let s = cdg_config_from_toml(cstr("[scheme]\nkind = \"single_photon\"\nbogus = 1\n").as_ptr(), &mut cfg);
        assert_eq!(s, CdgStatus::Config);
        assert!(cfg.is_null());
        assert!(last_error().contains("bogus"));

        assert_eq!(cdg_config_from_preset(cstr("missing").as_ptr(), &mut cfg), CdgStatus::Config);
        assert_eq!(cdg_config_from_preset(ptr::null(), &mut cfg), CdgStatus::NullPointer);

        assert_eq!(cdg_config_from_preset(cstr("fig2").as_ptr(), &mut cfg), CdgStatus::Ok);
        let s = cdg_config_set(cfg, cstr("pulse.duration").as_ptr(), cstr("\"3 MHz_over_2pi\"").as_ptr());
        assert_eq!(s, CdgStatus::Config);
        assert!(last_error().contains("pulse.duration"));
        let s = cdg_config_set(cfg, cstr("pulse.duration").as_ptr(), cstr("\"0.06 us\"").as_ptr());
        assert_eq!(s, CdgStatus::Ok);

        let mut written = 0usize;
        let s = cdg_pulse_sample(cfg, 10, ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), 0, &mut written);
        assert_eq!(s, CdgStatus::BufferTooSmall);
        assert_eq!(written, 21);
        let mut bufs = vec![vec![0.0; written]; 4];
        let [t, o, c, d] = &mut bufs[..] else { unreachable!() };
        let s = cdg_pulse_sample(cfg, 10, t.as_mut_ptr(), o.as_mut_ptr(), c.as_mut_ptr(), d.as_mut_ptr(), written, &mut written);
        assert_eq!(s, CdgStatus::Ok);
        assert!((t[0] + 0.06).abs() < 1e-12 && (t[20] - 0.06).abs() < 1e-12);
        assert!(o[0].abs() < 1e-9 && o[5] > 0.0);
        cdg_config_free(cfg);
        cdg_config_free(ptr::null_mut());
    }
}

/// Builds the static library in a separate target directory; the outer
/// `cargo test` holds the lock on the main one.
fn build_static_lib() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    let target = exe.ancestors().nth(3).unwrap().join("c-abi");
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let status = Command::new(cargo)
        .args(["build", "--quiet", "-p", "cdgate-ffi", "--target-dir"])
        .arg(&target)
        .status()
        .expect("cargo");
    assert!(status.success());
    target.join("debug/libcdgate_ffi.a")
}

#[test]
fn c_program_links_against_header() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = build_static_lib();
    assert!(lib.exists(), "static library not built at {}", lib.display());
    let out = tempfile_path("cdgate_smoke");
    let status = Command::new("cc")
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let run = Command::new(&out).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let phi: f64 = stdout
        .split("conditional_phase=")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((phi - std::f64::consts::PI).abs() < 2e-2, "{stdout}");
    let _ = std::fs::remove_file(out);
}

fn tempfile_path(stem: &str) -> PathBuf {
    std::env::temp_dir().join(format!("{stem}_{}", std::process::id()))
}

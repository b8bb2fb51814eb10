use std::ffi::{CStr, CString};
use std::os::raw::c_int;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use lagflow_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(lagflow_last_error()) }.to_string_lossy().into_owned()
}

fn new_flow(config: &str) -> (LagflowStatus, *mut LagflowFlow) {
    let text = CString::new(config).unwrap();
    let mut flow = ptr::null_mut();
    let status = unsafe { lagflow_flow_new(text.as_ptr(), &mut flow) };
    (status, flow)
}

const DISC: &str = "omega.kind = disc\ngenerator.a = 2, 0, 0, 1\ngrid.ns = 8\ngrid.nphi = 16\n";

#[test]
fn quadratic_disc_is_a_fixed_point_through_the_handle() {
    let (status, flow) = new_flow(DISC);
    assert_eq!(status, LagflowStatus::Ok, "{}", last_error());
    let mut before = LagflowMonitors::default();
    unsafe {
        assert_eq!(lagflow_flow_monitors(flow, &mut before), LagflowStatus::Ok);
        let mut converged: c_int = 0;
        assert_eq!(lagflow_flow_run(flow, &mut converged), LagflowStatus::Ok);
        assert_eq!(converged, 1);
        let n = lagflow_flow_node_count(flow);
        assert_eq!(n, 8 * 16);
        let (mut pos, mut vals) = (vec![0.0; 2 * n], vec![0.0; n]);
        assert_eq!(lagflow_flow_nodes(flow, pos.as_mut_ptr(), vals.as_mut_ptr(), n), LagflowStatus::Ok);
        for i in 0..n {
            let (x, y) = (pos[2 * i], pos[2 * i + 1]);
            assert!((vals[i] - (x * x + 0.5 * y * y)).abs() < 1e-14);
        }
        assert_eq!(lagflow_flow_nodes(flow, ptr::null_mut(), vals.as_mut_ptr(), n - 1), LagflowStatus::InvalidInput);
        let mut passed: c_int = 0;
        assert_eq!(lagflow_flow_estimates_passed(flow, &mut passed), LagflowStatus::Ok);
        assert_eq!(passed, 1);
        let (mut c, mut ok) = (0.0, 0);
        assert_eq!(lagflow_steady_from_flow(flow, &mut c, &mut ok), LagflowStatus::Ok);
        assert_eq!(ok, 1);
        assert!((c - before.max_f).abs() < 1e-12);
        lagflow_flow_free(flow);
    }
}

#[test]
fn errors_map_to_status_codes() {
    assert_eq!(new_flow("omega.kind = disc\ncontrol.sigma = 1.5\n").0, LagflowStatus::Parse);
    assert!(last_error().contains("line 2"));
    let nonconvex = "omega.kind = interval\nomega.interval = 0, 1\ngenerator.kind = perturbed\ngenerator.a = 1\n\
                     generator.eps = 1\ngenerator.bump_center = 0.5\ngenerator.bump_width = 0.2\ngrid.n = 40\n";
    assert_eq!(new_flow(nonconvex).0, LagflowStatus::NonConvex);
    let far = format!("{DISC}omega_tilde.kind = disc\nomega_tilde.center = 10, 10\n");
    assert_eq!(new_flow(&far).0, LagflowStatus::Incompatible);
    unsafe {
        assert_eq!(lagflow_flow_new(ptr::null(), &mut ptr::null_mut()), LagflowStatus::NullArgument);
        assert_eq!(lagflow_flow_step(ptr::null_mut(), 1, ptr::null_mut()), LagflowStatus::NullArgument);
        assert_eq!(lagflow_flow_node_count(ptr::null()), 0);
        lagflow_flow_free(ptr::null_mut());
    }
    assert!(last_error().contains("null"));
    assert_eq!(new_flow(DISC).0, LagflowStatus::Ok);
    assert_eq!(last_error(), "");
}

#[test]
fn run_config_matches_the_binary() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let cfg = CString::new(root.join("configs/steady_disc.conf").to_str().unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut passed: c_int = 0;
    let status = unsafe { lagflow_run_config(cfg.as_ptr(), ptr::null(), out.as_ptr(), &mut passed) };
    assert_eq!(status, LagflowStatus::Ok, "{}", last_error());
    assert_eq!(passed, 1);
    assert!(dir.path().join("steady_report.json").exists());
    let bogus = CString::new("fly").unwrap();
    let status = unsafe { lagflow_run_config(cfg.as_ptr(), bogus.as_ptr(), out.as_ptr(), &mut passed) };
    assert_eq!(status, LagflowStatus::InvalidInput);
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_header_and_static_library() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("liblagflow_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let build = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .expect("running the C compiler");
    assert!(build.status.success(), "{}", String::from_utf8_lossy(&build.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}

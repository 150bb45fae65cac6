//! Exercise the C ABI exactly as a foreign caller would: raw pointers,
//! status codes, and the thread-local error channel. Every test body is
//! one `unsafe` block because every line talks to the unsafe entry points
//! with locally owned, valid pointers.

use std::ffi::CString;
use std::ptr;

use hf_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0i8; 512];
    let len = unsafe { hf_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..len.min(buf.len() - 1)].iter().map(|&b| b as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn grid_lifecycle_and_errors() {
    unsafe {
        // invalid grid: odd count
        let mut grid: *mut HfGrid = ptr::null_mut();
        let status = hf_grid_build(5, 4, 4, &mut grid);
        assert_eq!(status, HfStatus::InvalidInput);
        assert!(!last_error().is_empty());

        // null out-pointer
        assert_eq!(hf_grid_build(4, 4, 4, ptr::null_mut()), HfStatus::NullPointer);

        // valid grid
        let status = hf_grid_build(8, 8, 16, &mut grid);
        assert_eq!(status, HfStatus::Ok);
        assert_eq!(hf_grid_node_count(grid), 8 * 8 * 16);
        assert_eq!(hf_grid_node_count(ptr::null()), 0);
        hf_grid_free(grid);
        hf_grid_free(ptr::null_mut()); // no-op
    }
}

#[test]
fn covering_map_has_degree_one() {
    unsafe {
        let mut grid: *mut HfGrid = ptr::null_mut();
        assert_eq!(hf_grid_build(10, 10, 20, &mut grid), HfStatus::Ok);

        let mut rho: *mut HfGauge = ptr::null_mut();
        assert_eq!(hf_gauge_covering_map(grid, &mut rho), HfStatus::Ok);

        let mut raw = 0.0f64;
        let mut rounded = 0i64;
        let mut projected = -1i32;
        let status = hf_gauge_degree(rho, &mut raw, &mut rounded, &mut projected);
        assert_eq!(status, HfStatus::Ok);
        assert_eq!(rounded, 1);
        assert!((raw - 1.0).abs() < 1e-6, "raw degree {raw}");
        assert_eq!(projected, 0, "a rotation field needs no projection");

        hf_gauge_free(rho);
        hf_grid_free(grid);
    }
}

#[test]
fn flow_run_reports_a_fixed_point() {
    unsafe {
        let mut grid: *mut HfGrid = ptr::null_mut();
        assert_eq!(hf_grid_build(8, 8, 16, &mut grid), HfStatus::Ok);
        let mut w: *mut HfFraming = ptr::null_mut();
        assert_eq!(hf_framing_reference(grid, HfSide::Left, &mut w), HfStatus::Ok);

        let mut params = std::mem::zeroed::<HfFlowParams>();
        assert_eq!(hf_flow_params_default(&mut params), HfStatus::Ok);
        params.dt = 0.01;
        params.t_max = 0.05;
        params.window = 2;

        let mut report = std::mem::zeroed::<HfRunReport>();
        let mut final_w: *mut HfFraming = ptr::null_mut();
        let status = hf_flow_run(w, &params, 0, &mut report, &mut final_w);
        assert_eq!(status, HfStatus::Ok);
        assert_eq!(report.outcome, 0, "fixed point must complete");
        assert_eq!(report.converged, 1);
        assert_eq!(report.t_prime, 0.0);
        assert_eq!(report.final_sup_h, 0.0);
        assert_eq!(report.orbit_preserved, 1);
        assert!(report.steps >= 5);
        assert!(!final_w.is_null());

        // the limit framing passes the Lie check as su(2)
        let mut lie = std::mem::zeroed::<HfLieReport>();
        assert_eq!(hf_llg_check(final_w, 1e-4, &mut lie), HfStatus::Ok);
        assert_eq!(lie.classification, 0);
        assert_eq!(lie.globalizable, 1);
        for e in lie.killing_eigenvalues {
            assert!((e + 8.0).abs() < 1e-9);
        }

        // bad parameter codes are rejected
        params.integrator = 9;
        assert_eq!(
            hf_flow_run(w, &params, 0, &mut report, ptr::null_mut()),
            HfStatus::InvalidInput
        );

        hf_framing_free(final_w);
        hf_framing_free(w);
        hf_grid_free(grid);
    }
}

#[test]
fn deformed_framing_round_trips_through_a_file() {
    unsafe {
        let mut grid: *mut HfGrid = ptr::null_mut();
        assert_eq!(hf_grid_build(8, 8, 16, &mut grid), HfStatus::Ok);
        let mut w: *mut HfFraming = ptr::null_mut();
        assert_eq!(hf_framing_reference(grid, HfSide::Left, &mut w), HfStatus::Ok);

        let mut a: *mut HfGauge = ptr::null_mut();
        assert_eq!(hf_gauge_random_deformation(grid, 42, 0.05, 2, &mut a), HfStatus::Ok);
        let mut wa: *mut HfFraming = ptr::null_mut();
        assert_eq!(hf_framing_apply_gauge(w, a, &mut wa), HfStatus::Ok);

        let path = std::env::temp_dir().join(format!("hf-ffi-{}.hfc", std::process::id()));
        let c_path = CString::new(path.to_str().unwrap()).unwrap();
        assert_eq!(hf_framing_save(wa, c_path.as_ptr()), HfStatus::Ok);

        let mut back: *mut HfFraming = ptr::null_mut();
        assert_eq!(hf_framing_load(c_path.as_ptr(), &mut back), HfStatus::Ok);
        assert!(!back.is_null());

        // a deformed framing is visibly curved at this tolerance
        let mut lie = std::mem::zeroed::<HfLieReport>();
        assert_eq!(hf_llg_check(back, 1e-9, &mut lie), HfStatus::Ok);
        assert_eq!(lie.globalizable, 0);
        assert!(lie.constancy_residual > 1e-9);

        // loading garbage fails with a message
        let missing = CString::new("/nonexistent/definitely/not/here.hfc").unwrap();
        let mut nope: *mut HfFraming = ptr::null_mut();
        assert_eq!(hf_framing_load(missing.as_ptr(), &mut nope), HfStatus::Io);
        assert!(!last_error().is_empty());

        hf_framing_free(back);
        hf_framing_free(wa);
        hf_gauge_free(a);
        hf_framing_free(w);
        hf_grid_free(grid);
        let _ = std::fs::remove_file(&path);
    }
}

#[test]
fn config_validation_mirrors_the_parser() {
    unsafe {
        let good = CString::new("grid = 8,8,16\nseed = 3\n").unwrap();
        assert_eq!(hf_config_validate(good.as_ptr()), HfStatus::Ok);
        let bad = CString::new("grid = 8,8,16\nwibble = 1\n").unwrap();
        assert_eq!(hf_config_validate(bad.as_ptr()), HfStatus::Config);
        assert!(last_error().contains("wibble"));
        assert_eq!(hf_config_validate(ptr::null()), HfStatus::NullPointer);
    }
}

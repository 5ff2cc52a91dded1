use std::ffi::{CStr, CString};
use std::ptr;

use omapf_ffi::*;

const MAP: &str = "height 2\nwidth 4\n....\n@.@@\n";

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(omapf_last_error()) }.to_string_lossy().into_owned()
}

fn instance(scen: &str) -> *mut OmapfInstance {
    let mut inst = ptr::null_mut();
    let status = unsafe { omapf_instance_from_text(c(MAP).as_ptr(), c(scen).as_ptr(), &mut inst) };
    assert_eq!(status, OmapfStatus::Ok, "{}", last_error());
    inst
}

#[test]
fn solves_a_swap_and_reports_iterations() {
    let inst = instance("0 0 0 3 0\n0 3 0 0 0\n");
    assert_eq!(unsafe { omapf_instance_num_agents(inst) }, 2);
    let mut report = ptr::null_mut();
    let status = unsafe { omapf_solve(inst, c("a4").as_ptr(), ptr::null(), 10.0, &mut report) };
    assert_eq!(status, OmapfStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { omapf_report_status(report) }, OmapfStatus::Ok);
    assert_eq!(unsafe { omapf_report_num_iterations(report) }, 1);
    let (mut t, mut soc) = (99, 0);
    assert_eq!(unsafe { omapf_report_iteration(report, 0, &mut t, &mut soc) }, OmapfStatus::Ok);
    assert_eq!(t, 0);
    assert!(soc >= 6, "two agents swapping ends of a corridor with one nook");
    assert!(unsafe { omapf_report_expansions(report) } > 0);

    let json = unsafe { omapf_report_to_json(report) };
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["success"], true);
    unsafe { omapf_string_free(json) };

    let dump = unsafe { omapf_report_plan_dump(report) };
    assert!(unsafe { CStr::from_ptr(dump) }.to_str().unwrap().starts_with("{\"paths\""));
    unsafe { omapf_string_free(dump) };

    let status = unsafe { omapf_report_iteration(report, 5, &mut t, &mut soc) };
    assert_eq!(status, OmapfStatus::InvalidArgument);
    assert!(last_error().contains("out of range"));
    unsafe {
        omapf_report_free(report);
        omapf_instance_free(inst);
    }
}

#[test]
fn every_solver_agrees_on_the_first_iteration() {
    let inst = instance("0 0 0 3 0\n0 3 0 0 0\n2 1 1 0 0\n");
    let mut socs = Vec::new();
    for name in ["a1", "a2", "a3", "a4"] {
        let mut report = ptr::null_mut();
        let status = unsafe { omapf_solve(inst, c(name).as_ptr(), c("exact").as_ptr(), 0.0, &mut report) };
        assert_eq!(status, OmapfStatus::Ok, "{name}: {}", last_error());
        let (mut t, mut soc) = (0, 0);
        unsafe { omapf_report_iteration(report, 0, &mut t, &mut soc) };
        socs.push(soc);
        unsafe { omapf_report_free(report) };
    }
    assert!(socs.windows(2).all(|w| w[0] == w[1]), "{socs:?}");
    unsafe { omapf_instance_free(inst) };
}

#[test]
fn parse_errors_name_the_offending_line() {
    let mut inst = ptr::null_mut();
    let status = unsafe { omapf_instance_from_text(c(MAP).as_ptr(), c("0 0 0 0 1\n").as_ptr(), &mut inst) };
    assert_eq!(status, OmapfStatus::Parse);
    assert!(inst.is_null());
    assert!(last_error().starts_with("<scenario>:1:"), "{}", last_error());

    let status = unsafe { omapf_instance_from_text(c("height 1\nwidth 2\n.x\n").as_ptr(), c("").as_ptr(), &mut inst) };
    assert_eq!(status, OmapfStatus::Parse);
    assert!(last_error().contains('x'), "{}", last_error());
}

#[test]
fn bad_arguments_are_rejected_without_crashing() {
    let mut inst = ptr::null_mut();
    assert_eq!(
        unsafe { omapf_instance_from_text(ptr::null(), c("").as_ptr(), &mut inst) },
        OmapfStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { omapf_instance_from_text(c(MAP).as_ptr(), c("").as_ptr(), ptr::null_mut()) },
        OmapfStatus::InvalidArgument
    );
    let inst = instance("0 0 0 3 0\n");
    let mut report = ptr::null_mut();
    assert_eq!(
        unsafe { omapf_solve(inst, c("a9").as_ptr(), ptr::null(), 0.0, &mut report) },
        OmapfStatus::InvalidArgument
    );
    assert!(last_error().contains("a9"));
    assert!(report.is_null());
    assert_eq!(
        unsafe { omapf_solve(ptr::null(), c("a1").as_ptr(), ptr::null(), 0.0, &mut report) },
        OmapfStatus::InvalidArgument
    );
    assert_eq!(unsafe { omapf_report_status(ptr::null()) }, OmapfStatus::InvalidArgument);
    assert!(unsafe { omapf_report_to_json(ptr::null()) }.is_null());
    unsafe {
        omapf_instance_free(inst);
        omapf_instance_free(ptr::null_mut());
        omapf_report_free(ptr::null_mut());
        omapf_string_free(ptr::null_mut());
    }
}

#[test]
fn unsolvable_runs_still_return_a_report() {
    // the goal lies behind a wall
    let mut inst = ptr::null_mut();
    let map = "height 1\nwidth 4\n..@.\n";
    let scen = "0 0 0 3 0\n";
    assert_eq!(
        unsafe { omapf_instance_from_text(c(map).as_ptr(), c(scen).as_ptr(), &mut inst) },
        OmapfStatus::Ok
    );
    let mut report = ptr::null_mut();
    let status = unsafe { omapf_solve(inst, c("a4").as_ptr(), ptr::null(), 10.0, &mut report) };
    assert_eq!(status, OmapfStatus::Unsolvable);
    assert!(!report.is_null());
    assert_eq!(unsafe { omapf_report_status(report) }, OmapfStatus::Unsolvable);
    assert_eq!(unsafe { omapf_report_num_iterations(report) }, 0);
    unsafe {
        omapf_report_free(report);
        omapf_instance_free(inst);
    }
}

#[test]
fn files_load_and_missing_files_are_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("m.map");
    let scen = dir.path().join("s.scen");
    std::fs::write(&map, MAP).unwrap();
    std::fs::write(&scen, "0 0 0 3 0\n").unwrap();
    let mut inst = ptr::null_mut();
    let status = unsafe {
        omapf_instance_load(c(map.to_str().unwrap()).as_ptr(), c(scen.to_str().unwrap()).as_ptr(), &mut inst)
    };
    assert_eq!(status, OmapfStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { omapf_instance_num_agents(inst) }, 1);
    unsafe { omapf_instance_free(inst) };

    let missing = dir.path().join("none.scen");
    let status = unsafe {
        omapf_instance_load(c(map.to_str().unwrap()).as_ptr(), c(missing.to_str().unwrap()).as_ptr(), &mut inst)
    };
    assert_eq!(status, OmapfStatus::Io);
    assert!(last_error().contains("none.scen"));
}

#[test]
fn header_declares_the_whole_interface() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/omapf.h")).unwrap();
    for name in [
        "typedef struct OmapfInstance OmapfInstance",
        "typedef struct OmapfReport OmapfReport",
        "OMAPF_STATUS_OK = 0",
        "OMAPF_STATUS_PANIC = 7",
        "omapf_instance_load",
        "omapf_instance_from_text",
        "omapf_solve",
        "omapf_report_iteration",
        "omapf_report_to_json",
        "omapf_string_free",
        "omapf_last_error",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
    let version = unsafe { CStr::from_ptr(omapf_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}

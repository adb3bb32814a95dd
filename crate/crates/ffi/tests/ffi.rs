use std::ffi::CStr;
use std::ptr;

use graphon_lab_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    let n = unsafe { gl_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn solve_and_read_parameters() {
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { gl_solve_below(0.75, 0.01, 3, &mut report) }, GlStatus::Ok);
    let mut p = GlParams::default();
    assert_eq!(unsafe { gl_report_params(report, &mut p) }, GlStatus::Ok);
    assert!(p.converged);
    assert!((p.a - 0.240272105643).abs() < 1e-8);
    assert!((p.c - 0.0192431691168).abs() < 1e-9);
    assert!(p.residual_tau <= 1e-12);
    let mut regime = GlRegime::Boundary;
    assert_eq!(unsafe { gl_report_regime(report, &mut regime) }, GlStatus::Ok);
    assert_eq!(regime, GlRegime::Below);
    unsafe { gl_report_free(report) };
}

#[test]
fn boundary_and_above() {
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { gl_solve(0.75, 0.421875, 3, &mut report) }, GlStatus::Ok);
    let mut regime = GlRegime::Below;
    unsafe { gl_report_regime(report, &mut regime) };
    assert_eq!(regime, GlRegime::Boundary);
    unsafe { gl_report_free(report) };

    assert_eq!(unsafe { gl_solve_above(0.75, 1e-3, 3, &mut report) }, GlStatus::Ok);
    let mut p = GlParams::default();
    unsafe { gl_report_params(report, &mut p) };
    assert!((p.d - 0.25).abs() < 0.01, "{p:?}");
    unsafe { gl_report_free(report) };
}

#[test]
fn error_codes_and_messages() {
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { gl_solve_below(1.5, 0.01, 3, &mut report) }, GlStatus::Domain);
    assert!(report.is_null());
    assert!(last_error().contains("1.5"));
    assert_eq!(unsafe { gl_solve_below(0.75, 0.01, 4, &mut report) }, GlStatus::Domain);
    assert!(last_error().contains("odd"));
    assert_eq!(unsafe { gl_solve_below(0.75, 0.01, 3, ptr::null_mut()) }, GlStatus::NullPointer);
    let mut p = GlParams::default();
    assert_eq!(unsafe { gl_report_params(ptr::null(), &mut p) }, GlStatus::NullPointer);
    unsafe {
        gl_report_free(ptr::null_mut());
        gl_grid_free(ptr::null_mut());
        gl_graph_free(ptr::null_mut());
    }
}

#[test]
fn series_values() {
    let mut s = GlSeries::default();
    assert_eq!(unsafe { gl_series_below(0.75, 0.01, 3, &mut s) }, GlStatus::Ok);
    assert!((s.a - 0.24).abs() < 1e-15);
    assert!((s.c - 0.0196).abs() < 1e-15);
    assert_eq!(unsafe { gl_series_above(0.75, 1e-3, 3, &mut s) }, GlStatus::Ok);
    assert!((s.d - 0.25).abs() < 1e-15);
}

#[test]
fn grid_round_trip() {
    let mut report = ptr::null_mut();
    unsafe { gl_solve_below(0.75, 0.1, 3, &mut report) };
    let mut grid = ptr::null_mut();
    assert_eq!(unsafe { gl_grid_from_report(report, 20, &mut grid) }, GlStatus::Ok);
    let (mut eps, mut tau, mut s) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { gl_grid_densities(grid, 3, &mut eps, &mut tau) }, GlStatus::Ok);
    assert!((eps - 0.75).abs() < 0.01);
    assert_eq!(unsafe { gl_grid_entropy(grid, &mut s) }, GlStatus::Ok);
    assert!(s > 0.5 && s < 0.5624);
    unsafe {
        gl_grid_free(grid);
        gl_report_free(report);
    }

    let values = [0.5; 9];
    assert_eq!(unsafe { gl_grid_new(3, values.as_ptr(), &mut grid) }, GlStatus::Ok);
    unsafe { gl_grid_densities(grid, 3, &mut eps, &mut tau) };
    assert_eq!((eps, tau), (0.5, 0.125));
    unsafe { gl_grid_free(grid) };
    let bad = [0.5, 0.2, 0.3, 0.5];
    assert_eq!(unsafe { gl_grid_new(2, bad.as_ptr(), &mut grid) }, GlStatus::Domain);
}

#[test]
fn oracle_keeps_constraints() {
    let t = 0.75f64.powi(3) - 0.1f64.powi(3);
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { gl_solve(0.75, t, 3, &mut report) }, GlStatus::Ok);
    let mut init = ptr::null_mut();
    assert_eq!(unsafe { gl_grid_from_report(report, 20, &mut init) }, GlStatus::Ok);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { gl_oracle(init, 0.75, t, 3, &mut out) }, GlStatus::Ok);
    let (mut eps, mut tau) = (0.0, 0.0);
    unsafe { gl_grid_densities(out, 3, &mut eps, &mut tau) };
    assert!((eps - 0.75).abs() < 1e-8 && (tau - t).abs() < 1e-8);
    unsafe {
        gl_grid_free(out);
        gl_grid_free(init);
        gl_report_free(report);
    }
}

#[test]
fn sampling() {
    let mut report = ptr::null_mut();
    unsafe { gl_solve(0.75, 0.421875, 3, &mut report) };
    let (mut g1, mut g2) = (ptr::null_mut(), ptr::null_mut());
    assert_eq!(unsafe { gl_sample(report, 200, 9, &mut g1) }, GlStatus::Ok);
    unsafe { gl_sample(report, 200, 9, &mut g2) };
    let (mut m1, mut m2) = (0u64, 0u64);
    unsafe {
        gl_graph_edge_count(g1, &mut m1);
        gl_graph_edge_count(g2, &mut m2);
    }
    assert_eq!(m1, m2);
    let mut x = 0.0;
    assert_eq!(unsafe { gl_graph_density(g1, 2, &mut x) }, GlStatus::Ok);
    assert_eq!(x, 2.0 * m1 as f64 / 40000.0);
    assert_eq!(unsafe { gl_graph_density(g1, 4, &mut x) }, GlStatus::Domain);
    unsafe {
        gl_graph_free(g1);
        gl_graph_free(g2);
        gl_report_free(report);
    }
}

#[test]
fn header_declares_api() {
    let header = include_str!("../include/graphon_lab.h");
    for name in [
        "gl_solve(", "gl_solve_below(", "gl_solve_above(", "gl_report_params(", "gl_report_free(", "gl_series_below(",
        "gl_grid_new(", "gl_oracle(", "gl_sample(", "gl_graph_density(", "gl_last_error(",
        "typedef struct GlReport GlReport;", "GL_STATUS_CONVERGENCE = 3",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = tempfile_dir();
    let src = dir.join("use_header.c");
    std::fs::write(
        &src,
        "#include \"graphon_lab.h\"\n\
         int main(void) {\n\
           GlReport *r = 0; GlParams p;\n\
           if (gl_solve_below(0.75, 0.01, 3, &r) != GL_STATUS_OK) return 1;\n\
           gl_report_params(r, &p); gl_report_free(r);\n\
           return p.converged ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let status = match std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", include])
        .arg(&src)
        .status()
    {
        Ok(s) => s,
        Err(_) => {
            eprintln!("no C compiler found; skipping");
            return;
        }
    };
    assert!(status.success());
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("graphon-lab-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

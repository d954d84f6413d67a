use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use refmaps::io::Dataset;
use refmaps::synth::{generate, SceneSpec};
use refmaps::SolverConfig;
use refmaps_ffi::*;

fn scene(channels: usize) -> SceneSpec {
    let rep = |t: &str| vec![t; channels].join(", ");
    SceneSpec::from_toml(&format!(
        r#"
        image_size = [10, 10]
        channels = {channels}
        noise_sigma = 0.0
        views = [{{ yaw_deg = 0.0 }}, {{ yaw_deg = 20.0 }}]
        [surface]
        kind = "sphere"
        radius = 1.0
        [albedo]
        kind = "piecewise_constant"
        regions = {{ map = "halves", axis = "x" }}
        values = [[{}], [{}]]
        [lighting]
        kind = "per_view"
        sigma = [[{}], [{}]]
        "#,
        rep("0.8"),
        rep("0.3"),
        rep("[0.3, 0.2, 0.5, 0.7, 0, 0, 0, 0, 0.1]"),
        rep("[0.1, -0.2, 0.6, 0.8, 0.01, 0, 0, 0, 0.02]"),
    ))
    .unwrap()
}

fn dataset(channels: usize) -> Dataset {
    Dataset::from_ground_truth(&generate(&scene(channels), 1).unwrap()).unwrap()
}

fn last_error() -> String {
    let p = refmaps_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

/// Rebuilds `ds` through the builder calls.
unsafe fn build(ds: &Dataset) -> *mut RefmapsProblem {
    let p = &ds.problem;
    let mut h = ptr::null_mut();
    assert_eq!(refmaps_problem_new(p.channels() as u32, &mut h), RefmapsStatus::Ok);
    for (v, view) in p.views().iter().enumerate() {
        let d = view.domain();
        let mask: Vec<u8> = d.mask().iter().map(|&m| m as u8).collect();
        let images: Vec<f64> = view.images.iter().flat_map(|f| f.values().iter().copied()).collect();
        let normals: Vec<f64> = ds.normals[v].normals().iter().flatten().copied().collect();
        let s = refmaps_problem_add_view(h, d.width(), d.height(), mask.as_ptr(), images.as_ptr(), normals.as_ptr());
        assert_eq!(s, RefmapsStatus::Ok, "{}", last_error());
    }
    for c in p.correspondences().entries() {
        let s = refmaps_problem_add_correspondence(h, c.view_i, c.pixel_i.row, c.pixel_i.col, c.view_j, c.pixel_j.row, c.pixel_j.col);
        assert_eq!(s, RefmapsStatus::Ok, "{}", last_error());
    }
    h
}

fn config(lambda: f64, mu: f64) -> RefmapsConfig {
    let mut c = refmaps_config_default(lambda, mu);
    c.max_outer_iters = 4;
    c
}

#[test]
fn default_config_matches_library() {
    let c = refmaps_config_default(0.5, 2.0);
    let lib = SolverConfig::new(0.5, 2.0);
    let back = SolverConfig::from(&c);
    assert_eq!(back, lib);
}

#[test]
fn builder_and_loader_agree_with_direct_solve() {
    for channels in [1, 3] {
        let ds = dataset(channels);
        let dir = tempfile::tempdir().unwrap();
        ds.store(dir.path()).unwrap();
        let cfg = config(0.2, 1.0);
        let direct = refmaps::solve(&ds.problem, &SolverConfig::from(&cfg)).unwrap();
        unsafe {
            let built = build(&ds);
            let path = CString::new(dir.path().to_str().unwrap()).unwrap();
            let mut loaded = ptr::null_mut();
            assert_eq!(refmaps_problem_load(path.as_ptr(), &mut loaded), RefmapsStatus::Ok);
            let mut n = 0;
            assert_eq!(refmaps_problem_channels(loaded, &mut n), RefmapsStatus::Ok);
            assert_eq!(n, channels);
            assert_eq!(refmaps_problem_view_count(built, &mut n), RefmapsStatus::Ok);
            assert_eq!(n, 2);

            for h in [built, loaded] {
                let mut sol = ptr::null_mut();
                assert_eq!(refmaps_solve(h, &cfg, &mut sol), RefmapsStatus::Ok, "{}", last_error());
                for v in 0..2 {
                    let (mut w, mut hh) = (0, 0);
                    assert_eq!(refmaps_problem_view_size(h, v, &mut w, &mut hh), RefmapsStatus::Ok);
                    for c in 0..channels {
                        let mut rho = vec![f64::NAN; w * hh];
                        let s = refmaps_solution_reflectance(sol, v, c, rho.as_mut_ptr(), rho.len());
                        assert_eq!(s, RefmapsStatus::Ok);
                        assert_eq!(rho, direct.reflectance(v, c).values());
                        let mut sigma = [f64::NAN; 9];
                        assert_eq!(refmaps_solution_lighting(sol, v, c, sigma.as_mut_ptr()), RefmapsStatus::Ok);
                        assert_eq!(sigma, direct.lighting(v, c).0);
                    }
                }
                let (mut iters, mut energy, mut conv) = (0, 0.0, true);
                assert_eq!(refmaps_solution_summary(sol, 0, &mut iters, &mut energy, &mut conv), RefmapsStatus::Ok);
                let trace = &direct.channels[0].trace;
                assert_eq!(iters, trace.last().unwrap().iteration);
                assert_eq!(energy, trace.last().unwrap().energy.total);
                assert_eq!(conv, direct.channels[0].converged);
                refmaps_solution_free(sol);
            }
            refmaps_problem_free(built);
            refmaps_problem_free(loaded);
        }
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(refmaps_problem_new(2, &mut p), RefmapsStatus::InvalidArgument);
        assert!(last_error().contains("channels"));
        assert_eq!(refmaps_problem_new(1, ptr::null_mut()), RefmapsStatus::NullPointer);
        assert_eq!(refmaps_problem_new(1, &mut p), RefmapsStatus::Ok);

        let mask = [1u8; 4];
        let img = [0.5; 4];
        let bad = [0.0, 0.0, 2.0].repeat(4);
        let s = refmaps_problem_add_view(p, 2, 2, mask.as_ptr(), img.as_ptr(), bad.as_ptr());
        assert_eq!(s, RefmapsStatus::InvalidNormal);
        let s = refmaps_problem_add_view(p, 2, 2, mask.as_ptr(), ptr::null(), bad.as_ptr());
        assert_eq!(s, RefmapsStatus::NullPointer);
        let good = [0.0, 0.0, 1.0].repeat(4);
        assert_eq!(refmaps_problem_add_view(p, 2, 2, mask.as_ptr(), img.as_ptr(), good.as_ptr()), RefmapsStatus::Ok);
        assert_eq!(refmaps_problem_add_correspondence(p, 0, 0, 0, 1, 0, 0), RefmapsStatus::InvalidArgument);
        assert_eq!(refmaps_problem_add_view(p, 2, 2, mask.as_ptr(), img.as_ptr(), good.as_ptr()), RefmapsStatus::Ok);
        assert_eq!(refmaps_problem_add_correspondence(p, 1, 0, 0, 0, 1, 1), RefmapsStatus::Ok);
        assert_eq!(refmaps_problem_add_correspondence(p, 0, 1, 1, 1, 0, 0), RefmapsStatus::InvalidArgument);
        assert!(last_error().contains("duplicate"));
        // Pixel outside the image only fails once the problem is assembled.
        assert_eq!(refmaps_problem_add_correspondence(p, 0, 5, 0, 1, 0, 0), RefmapsStatus::Ok);
        let mut sol = ptr::null_mut();
        let cfg = config(0.1, 1.0);
        assert_ne!(refmaps_solve(p, &cfg, &mut sol), RefmapsStatus::Ok);
        assert!(sol.is_null());
        refmaps_problem_free(p);

        let missing = CString::new("/nonexistent/refmaps-dataset").unwrap();
        assert_eq!(refmaps_problem_load(missing.as_ptr(), &mut p), RefmapsStatus::Io);
        assert_eq!(refmaps_lift_normal([0.0, 0.0, 3.0].as_ptr(), [0.0; 9].as_mut_ptr()), RefmapsStatus::InvalidNormal);
        refmaps_problem_free(ptr::null_mut());
        refmaps_solution_free(ptr::null_mut());
    }
}

#[test]
fn buffer_length_and_index_are_checked() {
    let ds = dataset(1);
    unsafe {
        let p = build(&ds);
        let mut sol = ptr::null_mut();
        let mut cfg = config(0.1, 1.0);
        cfg.max_outer_iters = 1;
        assert_eq!(refmaps_solve(p, &cfg, &mut sol), RefmapsStatus::Ok);
        let mut buf = vec![0.0; 99];
        assert_eq!(
            refmaps_solution_reflectance(sol, 0, 0, buf.as_mut_ptr(), buf.len()),
            RefmapsStatus::DimensionMismatch
        );
        assert_eq!(refmaps_solution_reflectance(sol, 0, 1, buf.as_mut_ptr(), 100), RefmapsStatus::InvalidArgument);
        cfg.lambda = -1.0;
        let mut other = ptr::null_mut();
        assert_eq!(refmaps_solve(p, &cfg, &mut other), RefmapsStatus::InvalidArgument);
        refmaps_solution_free(sol);
        refmaps_problem_free(p);
    }
}

#[test]
fn scalar_helpers_match_library() {
    for (x, d) in [(0.3, 1.0), (-4.0, 0.5), (2.0, 2.0)] {
        assert_eq!(refmaps_huber(x, d), refmaps::huber(x, d));
        assert_eq!(refmaps_huber_majorant(x, 1.5, d), refmaps::huber_majorant(x, 1.5, d));
    }
    let n = [0.6, 0.0, 0.8];
    let mut out = [0.0; 9];
    assert_eq!(unsafe { refmaps_lift_normal(n.as_ptr(), out.as_mut_ptr()) }, RefmapsStatus::Ok);
    assert_eq!(out, refmaps::lift_normal(n).unwrap());
    let v = unsafe { CStr::from_ptr(refmaps_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Compiles the C smoke program against the generated header and static
/// library, then runs it. Skipped when no C compiler is installed.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("librefmaps_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    assert!(lib.exists(), "{} missing", lib.display());
    let out_dir = tempfile::tempdir().unwrap();
    let exe = out_dir.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}

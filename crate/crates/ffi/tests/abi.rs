use std::ffi::CStr;
use std::ptr;

use trapscatter_ffi::*;

fn last_error() -> String {
    let p = ts_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn ensemble_lifecycle_and_getters() {
    let mut ens = ptr::null_mut();
    unsafe {
        assert_eq!(ts_ensemble_new_reduced(10_000, 0.5, &mut ens), TsStatus::Ok);
        assert!(ts_last_error_message().is_null());
        let tc = ts_ensemble_t_critical(ens);
        assert!((tc - ts_critical_temperature(10_000)).abs() < 1e-12);
        assert!((ts_ensemble_temperature(ens) - 0.5 * tc).abs() < 1e-12);
        let n0 = ts_ensemble_n_condensate(ens);
        assert!((n0 - 8750.0).abs() < 1e-6, "{n0}");
        assert!((n0 + ts_ensemble_n_excited(ens) - 10_000.0).abs() < 1e-6);
        assert!(ts_ensemble_mu(ens) < 0.0);
        ts_ensemble_free(ens);
        ts_ensemble_free(ptr::null_mut());
        assert!(ts_ensemble_mu(ptr::null()).is_nan());
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut ens = ptr::null_mut();
    unsafe {
        assert_eq!(ts_ensemble_new(100, -1.0, &mut ens), TsStatus::InvalidArgument);
        assert!(ens.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(ts_ensemble_new(100, 1.0, ptr::null_mut()), TsStatus::NullPointer);
        assert!(last_error().contains("out"));
        let mut v = 0.0;
        assert_eq!(ts_polylog3(2.0, &mut v), TsStatus::InvalidArgument);
        let mut d = ptr::null_mut();
        assert_eq!(ts_discrete_new(200_000, 10.0, 0, &mut d), TsStatus::Ok);
        let mut rates = std::mem::zeroed::<TsRates>();
        assert_eq!(ts_exact_breakdown(d, 1.0, &mut rates), TsStatus::CostGuard);
        ts_discrete_free(d);
        assert_eq!(ts_discrete_new(100, 10.0, 20, &mut d), TsStatus::TruncationTooSmall);
    }
}

#[test]
fn special_functions() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(ts_polylog3(1.0, &mut v), TsStatus::Ok);
        assert!((v - 1.202_056_903_159_594).abs() < 1e-12);
        assert_eq!(ts_overlap_exact(0, 3, 2.0, &mut v), TsStatus::Ok);
        // Poisson weight e^{-2} 2^3 / 3!
        assert!((v - (-2.0f64).exp() * 8.0 / 6.0).abs() < 1e-14);
        assert_eq!(ts_p_kernel(0.3, 1.7, &mut v), TsStatus::Ok);
        assert!(v > 0.0 && v.is_finite());
    }
}

#[test]
fn decompose_matches_core() {
    unsafe {
        let mut ens = ptr::null_mut();
        let mut eval = ptr::null_mut();
        assert_eq!(ts_ensemble_new_reduced(1_000, 0.6, &mut ens), TsStatus::Ok);
        assert_eq!(ts_evaluator_new(&mut eval), TsStatus::Ok);
        let mut r = std::mem::zeroed::<TsRates>();
        assert_eq!(ts_decompose(ens, eval, 100.0, 2.0, &mut r), TsStatus::Ok);
        assert_eq!(r.rayleigh, 1_000.0);
        assert_eq!(r.total, r.rayleigh + r.diffraction + r.bose_0m + r.bose_mm);
        assert_eq!(r.flags, [TsValidity::Valid; 4]);

        let core_ens = trapscatter::thermo::TrapEnsemble::at_reduced_temperature(1_000, 0.6).unwrap();
        let kin = trapscatter::scattering::Kinematics::new(100.0, 2.0).unwrap();
        let b = trapscatter::scattering::decompose(&core_ens, &kin, &Default::default()).unwrap();
        assert_eq!(r.diffraction, b.diffraction);
        assert_eq!(r.bose_mm, b.bose_mm);

        assert_eq!(ts_decompose(ens, eval, 100.0, 300.0, &mut r), TsStatus::InvalidArgument);
        assert_eq!(ts_decompose(ens, ptr::null(), 100.0, 1.0, &mut r), TsStatus::NullPointer);
        ts_evaluator_free(eval);
        ts_ensemble_free(ens);
    }
}

#[test]
fn discrete_oracle_through_abi() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(ts_discrete_new(500, 3.0, 0, &mut d), TsStatus::Ok);
        let n0 = ts_discrete_n0(d);
        assert!(n0 > 0.0 && n0 < 500.0);
        assert!(ts_discrete_mu(d) < 0.0);
        let mut r = std::mem::zeroed::<TsRates>();
        assert_eq!(ts_exact_breakdown(d, 1.0, &mut r), TsStatus::Ok);
        assert_eq!(r.rayleigh, 500.0);
        assert!(r.bose_0m > 0.0 && r.bose_mm > 0.0);
        ts_discrete_free(d);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(ts_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include").join("trapscatter.h");
    assert!(header.exists(), "header not generated");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["ts_decompose", "ts_exact_breakdown", "ts_last_error_message", "TS_STATUS_COST_GUARD"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let src = tempfile_c_source(&header);
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"])
        .arg(&src)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "header failed to compile"),
        Err(e) => eprintln!("no C compiler available, skipping: {e}"),
    }
}

fn tempfile_c_source(header: &std::path::Path) -> std::path::PathBuf {
    let path = std::env::temp_dir().join(format!("trapscatter_header_{}.c", std::process::id()));
    std::fs::write(
        &path,
        format!(
            "#include \"{}\"\nint main(void) {{ TsRates r; TsEnsemble *e = 0; (void)r; return (int)ts_ensemble_new(1, 1.0, &e); }}\n",
            header.display()
        ),
    )
    .unwrap();
    path
}

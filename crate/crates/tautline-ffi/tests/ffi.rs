//! Exercises the C surface through the Rust side of the ABI.

use tautline_ffi::*;

fn c_str(p: *const std::ffi::c_char) -> String {
    unsafe { std::ffi::CStr::from_ptr(p) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn mean_fit_round_trip() {
    let y = [0.0, 2.0];
    let mut fit: *mut TlFit = std::ptr::null_mut();
    let status = unsafe { tl_fit_mean(y.as_ptr(), y.len(), 0.5, &mut fit) };
    assert!(status == TlStatus::Ok);
    assert!(!fit.is_null());
    unsafe {
        assert_eq!(tl_fit_len(fit), 2);
        let mut values = [0.0f64; 2];
        assert!(tl_fit_values(fit, values.as_mut_ptr()) == TlStatus::Ok);
        assert!((values[0] - 0.5).abs() < 1e-12);
        assert!((values[1] - 1.5).abs() < 1e-12);
        assert!((tl_fit_objective(fit) - 0.75).abs() < 1e-12);
        assert_eq!(tl_fit_segment_count(fit), 2);
        assert!(tl_fit_certificate_violation(fit) < 1e-10);
        let mut lam = [0.0f64; 1];
        assert!(tl_fit_lambda(fit, lam.as_mut_ptr()) == TlStatus::Ok);
        assert_eq!(lam[0], 0.5);
        tl_fit_free(fit);
    }
}

#[test]
fn quantile_and_likelihood_fits() {
    let y = [1.0, 2.0, 3.0];
    let mut fit: *mut TlFit = std::ptr::null_mut();
    let status = unsafe { tl_fit_quantile(y.as_ptr(), 3, 0.5, 10.0, &mut fit) };
    assert!(status == TlStatus::Ok);
    unsafe {
        let mut values = [0.0f64; 3];
        tl_fit_values(fit, values.as_mut_ptr());
        assert_eq!(values, [2.0, 2.0, 2.0]);
        tl_fit_free(fit);
    }

    let counts = [1.0, 3.0];
    let mut fit: *mut TlFit = std::ptr::null_mut();
    let status = unsafe { tl_fit_likelihood(counts.as_ptr(), 2, 1, 0.5, &mut fit) };
    assert!(status == TlStatus::Ok);
    unsafe {
        let mut values = [0.0f64; 2];
        tl_fit_values(fit, values.as_mut_ptr());
        assert!((values[0] - 1.5f64.ln()).abs() < 1e-12);
        assert!((values[1] - 2.5f64.ln()).abs() < 1e-12);
        tl_fit_free(fit);
    }
}

#[test]
fn adaptive_fit_recovers_blocks_modality() {
    let mut f = vec![0.0f64; 512];
    let status = unsafe { tl_signal(TlSignal::Blocks, 512, f.as_mut_ptr()) };
    assert!(status == TlStatus::Ok);
    let y = tautline::gen_noise(tautline::TestBed::Gaussian, &f, 12);
    let mut fit: *mut TlFit = std::ptr::null_mut();
    let status =
        unsafe { tl_fit_adaptive(y.as_ptr(), y.len(), TlMethod::Mean, 0.0, 0.0, &mut fit) };
    assert!(status == TlStatus::Ok);
    unsafe {
        let interior = tl_fit_extrema(fit, 1);
        assert!(
            (8..=10).contains(&interior),
            "interior extremes {interior}"
        );
        assert!(tl_fit_iterations(fit) > 1);
        tl_fit_free(fit);
    }
}

#[test]
fn error_paths_set_messages() {
    let y = [0.0, 0.0, 0.0];
    let mut fit: *mut TlFit = std::ptr::null_mut();
    let status = unsafe { tl_fit_likelihood(y.as_ptr(), 3, 1, 1.0, &mut fit) };
    assert!(status == TlStatus::NonCoerciveData);
    assert!(fit.is_null());
    let msg = c_str(tl_last_error_message());
    assert!(msg.contains("zero"), "{msg}");

    let status = unsafe { tl_fit_mean(std::ptr::null(), 3, 1.0, &mut fit) };
    assert!(status == TlStatus::NullPointer);

    let status = unsafe { tl_fit_quantile(y.as_ptr(), 3, 1.5, 1.0, &mut fit) };
    assert!(status == TlStatus::InvalidArgument);
    let msg = c_str(tl_last_error_message());
    assert!(msg.contains("quantile level"), "{msg}");
}

#[test]
fn version_is_a_c_string() {
    let v = c_str(tl_version());
    assert!(!v.is_empty());
}

#[test]
fn header_was_generated() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("tautline.h");
    let text = std::fs::read_to_string(header).expect("generated header");
    assert!(text.contains("tl_fit_mean"));
    assert!(text.contains("TlStatus"));
    assert!(text.contains("typedef struct TlFit TlFit;"));
}

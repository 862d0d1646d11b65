use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use amc_ffi::*;

fn last_error() -> String {
    let p = amc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn rank_two(m: usize, n: usize) -> Vec<f64> {
    // u1 v1ᵀ + u2 v2ᵀ with small integer factors
    let mut out = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            let (u1, u2) = ((i % 3) as f64 + 1.0, (i % 5) as f64 - 2.0);
            let (v1, v2) = ((j % 4) as f64 - 1.0, (j % 7) as f64 + 1.0);
            out.push(u1 * v1 + u2 * v2);
        }
    }
    out
}

#[test]
fn matrix_round_trip() {
    let data = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(amc_matrix_new(2, 3, data.as_ptr(), &mut m), AmcStatus::Ok);
        let (mut r, mut c) = (0, 0);
        assert_eq!(amc_matrix_shape(m, &mut r, &mut c), AmcStatus::Ok);
        assert_eq!((r, c), (2, 3));
        let mut buf = [0.0; 6];
        assert_eq!(amc_matrix_copy_data(m, buf.as_mut_ptr(), 6), AmcStatus::Ok);
        assert_eq!(buf, data);
        assert_eq!(amc_matrix_copy_data(m, buf.as_mut_ptr(), 5), AmcStatus::BufferTooSmall);
        amc_matrix_free(m);
        amc_matrix_free(ptr::null_mut());
    }
}

#[test]
fn errors_set_codes_and_messages() {
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(amc_matrix_new(2, 2, ptr::null(), &mut m), AmcStatus::NullPointer);
        assert!(last_error().contains("data"));
        let data = [1.0, f64::NAN, 0.0, 1.0];
        assert_eq!(amc_matrix_new(2, 2, data.as_ptr(), &mut m), AmcStatus::InvalidArgument);
        assert!(last_error().contains("non-finite"));
        assert_eq!(amc_matrix_new(0, 2, data.as_ptr(), &mut m), AmcStatus::Dimension);
        assert!(m.is_null());

        let ok = [1.0, 0.0, 0.0, 1.0];
        assert_eq!(amc_matrix_new(2, 2, ok.as_ptr(), &mut m), AmcStatus::Ok);
        let mut res = ptr::null_mut();
        let bogus = CString::new("simplex").unwrap();
        assert_eq!(amc_complete(m, bogus.as_ptr(), 0.1, 0, &mut res), AmcStatus::UnknownName);
        let err = CString::new("err").unwrap();
        assert_eq!(amc_complete(m, err.as_ptr(), 1.5, 0, &mut res), AmcStatus::InvalidArgument);
        assert!(res.is_null());
        amc_matrix_free(m);
    }
}

#[test]
fn completes_through_the_boundary() {
    let (rows, cols) = (12, 15);
    let data = rank_two(rows, cols);
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(amc_matrix_new(rows, cols, data.as_ptr(), &mut m), AmcStatus::Ok);
        for name in ["ercs", "err", "erre", "erei"] {
            let alg = CString::new(name).unwrap();
            let mut res = ptr::null_mut();
            assert_eq!(amc_complete(m, alg.as_ptr(), 0.1, 7, &mut res), AmcStatus::Ok, "{name}");
            let (mut count, mut cost) = (0usize, 0.0);
            assert_eq!(amc_result_observations(res, &mut count, &mut cost), AmcStatus::Ok);
            assert!(count > 0 && count <= rows * cols);
            assert_eq!(cost, count as f64);
            let (mut rank, mut ok, mut err) = (0usize, false, 0.0);
            assert_eq!(amc_result_summary(res, &mut rank, &mut ok, &mut err), AmcStatus::Ok);
            assert_eq!(rank, 2, "{name}");
            assert!(ok && err < 1e-9, "{name}: {err}");
            let mut rec = ptr::null_mut();
            assert_eq!(amc_result_recovered(res, &mut rec), AmcStatus::Ok);
            let mut buf = vec![0.0; rows * cols];
            assert_eq!(amc_matrix_copy_data(rec, buf.as_mut_ptr(), buf.len()), AmcStatus::Ok);
            assert!(buf.iter().zip(&data).all(|(a, b)| (a - b).abs() < 1e-9));
            amc_matrix_free(rec);
            amc_result_free(res);
        }
        amc_matrix_free(m);
    }
}

#[test]
fn generated_matrix_has_requested_shape() {
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(amc_matrix_generate(10, 14, 3, 1, 0, 5, &mut m), AmcStatus::Ok);
        let (mut r, mut c) = (0, 0);
        amc_matrix_shape(m, &mut r, &mut c);
        assert_eq!((r, c), (10, 14));
        amc_matrix_free(m);
        assert_eq!(amc_matrix_generate(10, 14, 0, 0, 0, 5, &mut m), AmcStatus::InvalidArgument);
    }
    let v = unsafe { CStr::from_ptr(amc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/amc.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in ["amc_matrix_new", "amc_complete", "amc_result_free", "AMC_STATUS_OK", "typedef struct AmcMatrix AmcMatrix"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; header syntax not checked");
        return;
    };
    assert!(cc.status.success());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"amc.h\"\nint main(void) {\n  AmcMatrix *m = 0;\n  double d[1] = {1.0};\n  \
         return amc_matrix_new(1, 1, d, &m) == AMC_STATUS_OK ? 0 : 1;\n}\n",
    )
    .unwrap();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use mintime_ffi::*;

fn last_error() -> String {
    let p = mt_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn example_flow(id: &str, method: Option<&str>, k: usize) -> *mut MtFlow {
    let id = CString::new(id).unwrap();
    let method = method.map(|m| CString::new(m).unwrap());
    let mut flow = ptr::null_mut();
    let status = unsafe {
        mt_flow_from_example(id.as_ptr(), method.as_ref().map_or(ptr::null(), |m| m.as_ptr()), k, 0, 0, 0, &mut flow)
    };
    assert_eq!(status, MtStatus::Ok);
    flow
}

#[test]
fn flow_rings_and_vertices() {
    let flow = example_flow("ex51-box", None, 10);
    unsafe {
        let mut count = 0;
        assert_eq!(mt_flow_ring_count(flow, &mut count), MtStatus::Ok);
        assert_eq!(count, 11);
        let mut t = 0.0;
        assert_eq!(mt_flow_ring_time(flow, 10, &mut t), MtStatus::Ok);
        assert!((t - 1.0).abs() < 1e-12);
        let mut len = 0;
        assert_eq!(mt_flow_ring_vertices(flow, 0, ptr::null_mut(), 0, &mut len), MtStatus::Ok);
        let mut xy = vec![0.0; 2 * len];
        assert_eq!(mt_flow_ring_vertices(flow, 0, xy.as_mut_ptr(), len, &mut len), MtStatus::Ok);
        // target is a ball of radius 0.25
        for v in xy.chunks(2) {
            assert!((v[0].hypot(v[1]) - 0.25).abs() < 1e-12);
        }
        assert_eq!(mt_flow_ring_time(flow, 11, &mut t), MtStatus::InvalidArgument);
        assert!(last_error().contains("ring 11"));
        mt_flow_free(flow);
    }
}

#[test]
fn field_matches_oracle() {
    let flow = example_flow("ex51-origin", None, 0);
    let id = CString::new("ex51-origin").unwrap();
    unsafe {
        let mut field = ptr::null_mut();
        assert_eq!(mt_field_new(flow, &mut field), MtStatus::Ok);
        for (x1, x2) in [(0.3, -0.2), (-0.7, 0.5), (0.0, 0.0)] {
            let (mut approx, mut exact) = (0.0, 0.0);
            assert_eq!(mt_field_evaluate(field, x1, x2, &mut approx), MtStatus::Ok);
            assert_eq!(mt_oracle(id.as_ptr(), x1, x2, &mut exact), MtStatus::Ok);
            assert!((approx - exact).abs() < 1e-12);
        }
        let mut outside = 0.0;
        assert_eq!(mt_field_evaluate(field, 5.0, 0.0, &mut outside), MtStatus::Ok);
        assert_eq!(outside, f64::INFINITY);
        mt_field_free(field);
        mt_flow_free(flow);
    }
}

#[test]
fn config_and_reconstruction() {
    let json = CString::new(r#"{"example": "ex52a", "method": "riemann-exact", "K": 4, "N": 5}"#).unwrap();
    let mut flow = ptr::null_mut();
    unsafe {
        assert_eq!(mt_flow_from_config(json.as_ptr(), &mut flow), MtStatus::Ok);
        let mut end = [0.0; 2];
        let mut switches = 0;
        assert_eq!(mt_flow_reconstruct(flow, 4, 0, end.as_mut_ptr(), &mut switches), MtStatus::Ok);
        assert!(end[0] > 0.0 && switches <= 1);
        assert_eq!(mt_flow_reconstruct(flow, 9, 0, end.as_mut_ptr(), &mut switches), MtStatus::InvalidArgument);
        mt_flow_free(flow);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut flow = ptr::null_mut();
        let bad = CString::new("ex99").unwrap();
        assert_eq!(mt_flow_from_example(bad.as_ptr(), ptr::null(), 0, 0, 0, 0, &mut flow), MtStatus::UnknownExample);
        assert!(flow.is_null());
        assert!(last_error().contains("ex99"));
        let id = CString::new("ex53").unwrap();
        let method = CString::new("riemann-heun").unwrap();
        assert_eq!(mt_flow_from_example(id.as_ptr(), method.as_ptr(), 0, 0, 0, 0, &mut flow), MtStatus::InvalidArgument);
        assert_eq!(mt_flow_from_example(ptr::null(), ptr::null(), 0, 0, 0, 0, &mut flow), MtStatus::NullPointer);
        assert_eq!(mt_flow_from_example(id.as_ptr(), ptr::null(), 0, 0, 0, 0, ptr::null_mut()), MtStatus::NullPointer);
        let json = CString::new("{not json").unwrap();
        assert_eq!(mt_flow_from_config(json.as_ptr(), &mut flow), MtStatus::Config);
        let mut t = 0.0;
        let no_oracle = CString::new("ex54").unwrap();
        assert_eq!(mt_oracle(no_oracle.as_ptr(), 0.0, 0.0, &mut t), MtStatus::Unsupported);
        let segment = example_flow("ex56", None, 0);
        let mut end = [0.0; 2];
        let mut sw = 0;
        assert_eq!(mt_flow_reconstruct(segment, 3, 0, end.as_mut_ptr(), &mut sw), MtStatus::NumericFailure);
        mt_flow_free(segment);
        // a successful call clears the message
        assert_eq!(mt_oracle(id.as_ptr(), 0.0, 0.0, &mut t), MtStatus::Ok);
        assert!(mt_last_error().is_null());
        mt_flow_free(ptr::null_mut());
        mt_field_free(ptr::null_mut());
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(mt_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = include.join("mintime.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "mt_last_error",
        "mt_version",
        "mt_flow_from_example",
        "mt_flow_from_config",
        "mt_flow_free",
        "mt_flow_ring_count",
        "mt_flow_ring_time",
        "mt_flow_ring_vertices",
        "mt_field_new",
        "mt_field_free",
        "mt_field_evaluate",
        "mt_oracle",
        "mt_flow_reconstruct",
    ] {
        assert!(text.contains(&format!("{name}(")), "{name} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"mintime.h\"\nint main(void) { MtFlow *f = NULL; return mt_flow_ring_count(f, NULL) == MT_STATUS_NULL_POINTER ? 0 : 1; }\n",
    )
    .unwrap();
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let out = Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, "-I"])
            .arg(&include)
            .arg(&src)
            .output()
            .unwrap();
        assert!(out.status.success(), "{compiler}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

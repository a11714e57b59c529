use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use approxvar_ffi::*;

fn last_error() -> String {
    let p = av_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn scalar(t: &[f64], v: &[f64]) -> *mut AvFunction {
    let mut f = ptr::null_mut();
    assert_eq!(
        unsafe { av_function_scalar(t.as_ptr(), v.as_ptr(), t.len(), &mut f) },
        AvStatus::Ok
    );
    f
}

#[test]
fn variation_bracket_and_witness() {
    let f = scalar(&[0.0, 1.0, 2.0], &[0.0, 2.0, 0.0]);
    let mut v = 0.0;
    unsafe {
        assert_eq!(av_jordan_variation(f, 0, &mut v), AvStatus::Ok);
        assert_eq!(v, 4.0);
        assert_eq!(av_oscillation(f, 0, &mut v), AvStatus::Ok);
        assert_eq!(v, 2.0);

        let mut b = AvBracket::default();
        let mut w = ptr::null_mut();
        assert_eq!(av_eps_variation(f, 0, 0.1, &mut b, &mut w), AvStatus::Ok);
        assert!(b.exact && (b.upper - 3.6).abs() < 1e-9 && b.lower == b.upper);
        assert!(!w.is_null());
        let mut wv = 0.0;
        assert_eq!(av_jordan_variation(w, 0, &mut wv), AvStatus::Ok);
        assert!((wv - b.upper).abs() < 1e-9);
        av_function_free(w);

        assert_eq!(av_eps_variation(f, 0, 1.0, &mut b, ptr::null_mut()), AvStatus::Ok);
        assert_eq!(b.upper, 0.0);
        assert_eq!(
            av_eps_variation(f, 0, -1.0, &mut b, ptr::null_mut()),
            AvStatus::InvalidArgument
        );
        assert!(last_error().contains("eps"));
        assert_eq!(
            av_eps_variation(f, 3, 0.5, &mut b, ptr::null_mut()),
            AvStatus::InvalidArgument
        );
        av_function_free(f);
    }
}

#[test]
fn buffers_report_their_length() {
    let f = scalar(&[0.0, 0.5, 1.0, 1.5], &[0.0, 1.0, 2.0, 3.0]);
    let mut len = 0usize;
    let mut buf = [0.0f64; 4];
    unsafe {
        assert_eq!(
            av_function_grid(f, buf.as_mut_ptr(), 2, &mut len),
            AvStatus::BufferTooSmall
        );
        assert_eq!(len, 4);
        assert_eq!(av_function_grid(f, buf.as_mut_ptr(), 4, &mut len), AvStatus::Ok);
        assert_eq!(buf, [0.0, 0.5, 1.0, 1.5]);
        assert_eq!(
            av_prefix_eps_variation(f, 0, 0.5, buf.as_mut_ptr(), 4, &mut len),
            AvStatus::Ok
        );
        assert_eq!(buf, [0.0, 0.0, 1.0, 2.0]);
        assert_eq!(av_function_values(f, 0, buf.as_mut_ptr(), 4, &mut len), AvStatus::Ok);
        assert_eq!(buf, [0.0, 1.0, 2.0, 3.0]);
        av_function_free(f);
    }
}

#[test]
fn step_approximant_handle() {
    let f = scalar(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 2.0, 3.0]);
    let mut s = ptr::null_mut();
    let mut jumps = 0usize;
    unsafe {
        assert_eq!(av_step_approximant(f, 0, 0.5, &mut s, &mut jumps), AvStatus::Ok);
        assert!(jumps <= 3);
        let mut n = 0;
        assert_eq!(av_function_len(s, &mut n), AvStatus::Ok);
        assert_eq!(n, 4);
        av_function_free(s);
        av_function_free(f);
    }
}

#[test]
fn csv_and_finite_spaces() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    std::fs::write(&path, "t,idx\n0,0\n1,1\n2,0\n3,1\n4,0\n").unwrap();
    let json = CString::new(r#"{"kind":"finite","points":["a","b"],"metrics":[[[0,1],[1,0]]]}"#).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        let mut space = ptr::null_mut();
        assert_eq!(av_space_from_json(json.as_ptr(), &mut space), AvStatus::Ok);
        let mut k = 0;
        assert_eq!(av_space_num_pseudometrics(space, &mut k), AvStatus::Ok);
        assert_eq!(k, 1);
        let mut f = ptr::null_mut();
        assert_eq!(av_function_from_csv(cpath.as_ptr(), space, &mut f), AvStatus::Ok);
        let mut b = AvBracket::default();
        assert_eq!(av_eps_variation(f, 0, 0.4, &mut b, ptr::null_mut()), AvStatus::Ok);
        assert!((b.lower - 0.8).abs() < 1e-9 && b.upper == 4.0 && !b.exact);

        let mut buf = [0.0; 8];
        let mut len = 0;
        assert_eq!(
            av_function_values(f, 0, buf.as_mut_ptr(), 8, &mut len),
            AvStatus::InvalidArgument
        );
        av_function_free(f);

        let missing = CString::new(dir.path().join("none.csv").to_str().unwrap()).unwrap();
        assert_eq!(av_function_from_csv(missing.as_ptr(), space, &mut f), AvStatus::Io);
        std::fs::write(&path, "t,idx\n0,0\n1,7\n").unwrap();
        assert_eq!(av_function_from_csv(cpath.as_ptr(), space, &mut f), AvStatus::Parse);
        assert!(last_error().contains(":3:"), "{}", last_error());
        av_space_free(space);
    }
}

#[test]
fn selection_and_checks_return_json() {
    let eps = [0.25];
    let name = CString::new("factorial").unwrap();
    let mut outcome = AvOutcome::Certified;
    let mut json = ptr::null_mut();
    unsafe {
        assert_eq!(
            av_select_builtin(name.as_ptr(), eps.as_ptr(), 1, 5, &mut outcome, &mut json),
            AvStatus::Ok
        );
        assert_eq!(outcome, AvOutcome::Diverging);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        av_string_free(json);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["outcome"], "diagnosis");

        let suite = CString::new("selection").unwrap();
        let mut passed = false;
        assert_eq!(av_check_run(suite.as_ptr(), 1, &mut passed, &mut json), AvStatus::Ok);
        assert!(passed);
        av_string_free(json);

        let bad = CString::new("bogus").unwrap();
        assert_eq!(
            av_check_run(bad.as_ptr(), 1, &mut passed, &mut json),
            AvStatus::InvalidArgument
        );
    }
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/approxvar.h");
    assert!(header.exists());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{}\"\nint main(void) {{ AvBracket b; AvSpace *s = 0; (void)b; \
             return av_space_scalar(&s) == AV_STATUS_OK ? 0 : 1; }}\n",
            header.display()
        ),
    )
    .unwrap();
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let Ok(out) = Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(&src)
            .output()
        else {
            eprintln!("{compiler} not available, skipping");
            continue;
        };
        assert!(
            out.status.success(),
            "{compiler}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

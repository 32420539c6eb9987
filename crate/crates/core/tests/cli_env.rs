//! The default-extensions environment variable. Kept in its own binary so
//! setting it cannot leak into other tests.

use std::io::Cursor;

use cryptcc::driver::{invoke, MATTR_ENV};

#[test]
fn env_supplies_default_mattr_and_flag_overrides() {
    let path = format!("{}/../../corpus/lxr.ll", env!("CARGO_MANIFEST_DIR"));
    let llc = |extra: &[&str]| {
        let mut args = vec!["llc"];
        args.extend_from_slice(extra);
        args.push(&path);
        let o = invoke(&args, &mut Cursor::new(Vec::new()));
        assert_eq!(o.status, 0, "{}", o.stderr_str());
        o.stdout_str()
    };
    std::env::remove_var(MATTR_ENV);
    assert!(!llc(&[]).contains("lxr\t"));
    std::env::set_var(MATTR_ENV, "+xcrypt");
    assert!(llc(&[]).contains("lxr\t"));
    assert!(!llc(&["--mattr=-xcrypt"]).contains("lxr\t"));
    std::env::remove_var(MATTR_ENV);
}

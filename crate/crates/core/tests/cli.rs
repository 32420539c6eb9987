//! The command line, driven in-process through `driver::invoke`.

use std::io::Cursor;
use std::path::PathBuf;

use cryptcc::driver::{invoke, Outcome};
use cryptcc::target::ExtensionSet;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus(name: &str) -> String {
    root().join("corpus").join(name).display().to_string()
}

fn run(args: &[&str]) -> Outcome {
    invoke(args, &mut Cursor::new(Vec::new()))
}

fn run_stdin(args: &[&str], stdin: &[u8]) -> Outcome {
    invoke(args, &mut Cursor::new(stdin.to_vec()))
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert_eq!(o.status, 0, "{args:?}: {}", o.stderr_str());
    o.stdout_str()
}

#[test]
fn no_arguments_prints_usage() {
    let o = run(&[] as &[&str]);
    assert_eq!(o.status, 2);
    let text = o.stdout_str() + &o.stderr_str();
    assert!(text.contains("Usage"), "{text}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = run(&["llc", "--frobnicate", &corpus("lxr.ll")]);
    assert_eq!(o.status, 2);
    assert!(o.stderr_str().contains("--frobnicate"));
}

#[test]
fn help_lists_flags() {
    let o = run(&["llc", "--help"]);
    assert_eq!(o.status, 0);
    for flag in ["--mattr", "--emit", "--debug-isel", "--zba-threshold", "--stats"] {
        assert!(o.stdout_str().contains(flag), "{flag}");
    }
}

#[test]
fn llc_sbox_with_xcrypt() {
    let asm = ok(&["llc", "--mattr=+xcrypt", &corpus("sbox.ll")]);
    assert_eq!(asm.matches("\tnaxor\t").count(), 5, "{asm}");
}

#[test]
fn opt_stats_on_stderr() {
    let o = run(&["opt", "-O2", "--stats", &corpus("sbox_unopt.ll")]);
    assert_eq!(o.status, 0);
    let err = o.stderr_str();
    assert!(err.contains("Statistics Collected"), "{err}");
    assert!(err.contains("7 dse"), "{err}");
    assert!(o.stdout_str().contains("define"));
}

#[test]
fn llc_o2_equals_opt_then_llc_o0() {
    let mattrs = ["+m", "+zba", "+zbb", "+xcrypt", "+zba,+zbb,+xcrypt"];
    assert_eq!(mattrs.len(), ExtensionSet::test_matrix().len());
    for (name, _) in cryptcc::corpus::ALL {
        let path = corpus(name);
        let ir = ok(&["opt", "-O2", &path]);
        for m in mattrs {
            let flag = format!("--mattr={m}");
            let direct = run(&["llc", "-O2", &flag, &path]);
            let staged = run_stdin(&["llc", "-O0", &flag], ir.as_bytes());
            assert_eq!(direct.status, 0, "{name} {m}: {}", direct.stderr_str());
            assert_eq!(direct.stdout, staged.stdout, "{name} {m}");
        }
    }
}

#[test]
fn parse_error_points_at_the_line() {
    let dir = std::env::temp_dir().join(format!("cryptcc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("bad.ll");
    std::fs::write(&p, "; broken\ndefine i32 @f( {\n").unwrap();
    let o = run(&["llc", p.to_str().unwrap()]);
    assert_eq!(o.status, 1);
    assert!(o.stderr_str().contains(&format!("{}:2:", p.display())), "{}", o.stderr_str());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn missing_file_fails() {
    let o = run(&["llc", "/nonexistent/x.ll"]);
    assert_eq!(o.status, 1);
    assert!(!o.stderr_str().is_empty());
}

#[test]
fn mc_object_round_trip() {
    let src = "\tadd\ta0, a1, a2\n\tlxr\ta0, a0, a1\n\tnaxor\ta5, a4, a5, a2\n\tsw\ta1, -20(a0)\n\tret\n";
    let obj = run_stdin(&["mc", "--mattr=+xcrypt", "--filetype=obj"], src.as_bytes());
    assert_eq!(obj.status, 0, "{}", obj.stderr_str());
    let back = run_stdin(&["mc", "--mattr=+xcrypt", "--disassemble"], &obj.stdout);
    assert_eq!(back.status, 0, "{}", back.stderr_str());
    let text = back.stdout_str();
    // Disassembly prints canonical forms, so ret comes back as its jalr.
    let want = src.replace("\tret", "\tjalr\tzero, 0(ra)");
    for l in want.lines() {
        assert!(text.contains(l), "{l:?} missing from\n{text}");
    }
}

#[test]
fn mc_show_encoding() {
    let out = String::from_utf8(run_stdin(&["mc", "--show-encoding"], b"add zero, zero, zero\n").stdout).unwrap();
    assert!(out.contains("# encoding: [0x33,0x00,0x00,0x00]"), "{out}");
}

#[test]
fn mc_rejects_disabled_instruction() {
    let o = run_stdin(&["mc", "--mattr=-m"], b"lxr a0, a0, a1\n");
    assert_eq!(o.status, 1);
    assert!(o.stderr_str().contains("<stdin>:1:"), "{}", o.stderr_str());
}

#[test]
fn run_madd_leaves_436() {
    let out = ok(&["run", "--mattr=+xcrypt", &corpus("madd.ll")]);
    assert!(out.contains("@a = 436"), "{out}");
    let traced = ok(&["run", "--trace", &corpus("madd.ll")]);
    assert!(traced.contains("ret"), "{traced}");
    assert!(traced.lines().count() > out.lines().count());
}

#[test]
fn run_with_arguments() {
    let out = ok(&["run", "--entry", "rotimm", "--args", "15", &corpus("rotate.ll")]);
    assert!(out.contains("result: -1073741821 (0xc0000003)"), "{out}");
}

#[test]
fn emit_obj_and_dot() {
    let obj = ok(&["llc", "--emit=obj", &corpus("madd.ll")]);
    assert!(obj.contains("RELOCATION RECORDS"), "{obj}");
    assert!(obj.contains("R_RISCV_HI20"), "{obj}");
    let dot = ok(&["llc", "--emit=dot", "--dag-stage=selected", "--mattr=+xcrypt", &corpus("lxr.ll")]);
    assert!(dot.starts_with("digraph"), "{dot}");
}

#[test]
fn debug_isel_trace_shows_hook() {
    let o = run(&["llc", "--debug-isel", "--mattr=+xcrypt", &corpus("lxr_dep.ll")]);
    assert_eq!(o.status, 0);
    let err = o.stderr_str();
    assert!(err.contains("=== selecting @dep16 ==="));
    assert!(err.contains("replaced by ADDI"));
}

#[test]
fn filecheck_statuses() {
    let dir = std::env::temp_dir().join(format!("cryptcc-fc-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let checks = dir.join("c.txt");
    std::fs::write(&checks, "; CHECK: hello\n; CHECK-NEXT: world\n").unwrap();
    let c = checks.to_str().unwrap();
    assert_eq!(run_stdin(&["filecheck", c], b"hello\nworld\n").status, 0);
    let bad = run_stdin(&["filecheck", c], b"hello\nthere\nworld\n");
    assert_eq!(bad.status, 1);
    assert!(bad.stderr_str().contains("CHECK-NEXT: world"), "{}", bad.stderr_str());
    assert_eq!(run_stdin(&["filecheck", "--check-prefix=NOPE", c], b"hello\n").status, 2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn lit_runs_shipped_tests() {
    let out = ok(&["lit", &root().join("tests").display().to_string()]);
    assert!(out.contains("Passed: "), "{out}");
    assert!(!out.contains("Failed:") || out.contains("Failed: 0"), "{out}");
}

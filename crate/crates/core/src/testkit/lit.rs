use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::driver;

/// Name shown in front of every result line.
pub const SUITE: &str = "cryptcc";

/// Subcommands a RUN line may call.
const ALLOWED: &[&str] = &["opt", "llc", "mc", "run", "filecheck"];

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum LitError {
    #[error("{path}:{line}: malformed RUN line: {message}")]
    MalformedRun { path: String, line: usize, message: String },
    #[error("{0}: no RUN lines")]
    NoRunLines(String),
    #[error("{0}: {1}")]
    Io(String, String),
}

/// One stage of a RUN pipeline: the driver arguments after `%s`/`%t`
/// substitution, and an optional `<` input file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stage {
    pub argv: Vec<String>,
    pub stdin_file: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunLine {
    /// 1-based line of the first `RUN:` making up this command.
    pub line: usize,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestFile {
    pub path: PathBuf,
    pub text: String,
    pub run_lines: Vec<RunLine>,
}

impl TestFile {
    /// Collects `RUN:` commands, joining lines that end in a backslash.
    pub fn parse(path: &Path, text: &str) -> Result<TestFile, LitError> {
        let mut run_lines = Vec::new();
        let mut pending: Option<RunLine> = None;
        for (i, l) in text.lines().enumerate() {
            let Some(pos) = l.find("RUN:") else {
                if let Some(p) = pending.take() {
                    return Err(LitError::MalformedRun {
                        path: path.display().to_string(),
                        line: p.line,
                        message: "continuation backslash on the last RUN line".into(),
                    });
                }
                continue;
            };
            let body = l[pos + 4..].trim();
            let (body, continues) = match body.strip_suffix('\\') {
                Some(b) => (b.trim_end(), true),
                None => (body, false),
            };
            let mut cur = pending.take().unwrap_or(RunLine { line: i + 1, text: String::new() });
            if !cur.text.is_empty() && !body.is_empty() {
                cur.text.push(' ');
            }
            cur.text.push_str(body);
            if continues {
                pending = Some(cur);
            } else {
                run_lines.push(cur);
            }
        }
        if let Some(p) = pending {
            return Err(LitError::MalformedRun {
                path: path.display().to_string(),
                line: p.line,
                message: "continuation backslash on the last RUN line".into(),
            });
        }
        Ok(TestFile { path: path.to_path_buf(), text: text.to_string(), run_lines })
    }

    pub fn load(path: &Path) -> Result<TestFile, LitError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| LitError::Io(path.display().to_string(), e.to_string()))?;
        Self::parse(path, &text)
    }

    /// Splits one RUN command into stages, substituting `%s` with the test
    /// path and `%t` with `tmp`.
    pub fn pipeline(&self, run: &RunLine, tmp: &Path) -> Result<Vec<Stage>, LitError> {
        let err = |message: String| LitError::MalformedRun {
            path: self.path.display().to_string(),
            line: run.line,
            message,
        };
        let path = self.path.display().to_string();
        let tmp = tmp.display().to_string();
        let mut stages = Vec::new();
        for part in run.text.split('|') {
            let mut words = part.split_whitespace().map(|w| w.replace("%s", &path).replace("%t", &tmp));
            let mut argv = Vec::new();
            let mut stdin_file = None;
            while let Some(w) = words.next() {
                if w == "<" {
                    let f = words.next().ok_or_else(|| err("'<' without a file".into()))?;
                    stdin_file = Some(f);
                } else if let Some(f) = w.strip_prefix('<') {
                    stdin_file = Some(f.to_string());
                } else {
                    argv.push(w);
                }
            }
            if argv.first().is_some_and(|c| c == "cryptcc") {
                argv.remove(0);
            }
            let Some(cmd) = argv.first_mut() else {
                return Err(err("empty pipeline stage".into()));
            };
            if cmd == "FileCheck" {
                *cmd = "filecheck".into();
            }
            if !ALLOWED.contains(&cmd.as_str()) {
                return Err(err(format!("'{cmd}' is not a cryptcc subcommand usable in a RUN line")));
            }
            stages.push(Stage { argv, stdin_file });
        }
        Ok(stages)
    }
}

/// What a pipeline produced: the last stage's stdout, the exit status of
/// the first failing stage (or 0), and everything written to stderr.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PipelineOutput {
    pub status: i32,
    pub stdout: Vec<u8>,
    pub stderr: String,
    /// Index of the stage that failed.
    pub failed_stage: Option<usize>,
}

/// Runs stages in order, feeding each stage's stdout to the next.
pub fn run_pipeline(stages: &[Stage]) -> PipelineOutput {
    let mut out = PipelineOutput::default();
    let mut carry: Vec<u8> = Vec::new();
    for (i, st) in stages.iter().enumerate() {
        let input = match &st.stdin_file {
            Some(f) => match std::fs::read(f) {
                Ok(b) => b,
                Err(e) => {
                    out.status = 1;
                    out.stderr.push_str(&format!("{f}: {e}\n"));
                    out.failed_stage = Some(i);
                    return out;
                }
            },
            None => std::mem::take(&mut carry),
        };
        let r = driver::invoke(&st.argv, &mut input.as_slice());
        out.stderr.push_str(&String::from_utf8_lossy(&r.stderr));
        if r.status != 0 {
            out.status = r.status;
            out.failed_stage = Some(i);
            out.stdout = r.stdout;
            return out;
        }
        carry = r.stdout;
    }
    out.stdout = carry;
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestResult {
    pub path: PathBuf,
    /// Path relative to the suite root, with `/` separators.
    pub name: String,
    pub verdict: Verdict,
    /// Failure explanation; empty on a pass.
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct LitReport {
    pub workers: usize,
    pub results: Vec<TestResult>,
    pub elapsed: Duration,
}

impl LitReport {
    pub fn passed(&self) -> usize {
        self.results.iter().filter(|r| r.verdict == Verdict::Pass).count()
    }

    pub fn failed(&self) -> usize {
        self.results.len() - self.passed()
    }

    /// The console report. Failure details are always shown; `verbose`
    /// adds nothing else today but is accepted for compatibility.
    pub fn render(&self, _verbose: bool) -> String {
        let n = self.results.len();
        let mut out = format!("-- Testing: {n} tests, {} workers --\n", self.workers);
        for (i, r) in self.results.iter().enumerate() {
            let tag = match r.verdict {
                Verdict::Pass => "PASS",
                Verdict::Fail => "FAIL",
            };
            let _ = writeln!(out, "{tag}: {SUITE} :: {} ({} of {n})", r.name, i + 1);
            if r.verdict == Verdict::Fail {
                let _ = writeln!(out, "******************** TEST '{SUITE} :: {}' FAILED ********************", r.name);
                out.push_str(&r.detail);
                if !r.detail.ends_with('\n') {
                    out.push('\n');
                }
                out.push_str("********************\n");
            }
        }
        let _ = write!(out, "\nTesting Time: {:.2}s\n", self.elapsed.as_secs_f64());
        if self.passed() > 0 {
            let _ = writeln!(out, "Passed: {}", self.passed());
        }
        if self.failed() > 0 {
            let _ = writeln!(out, "Failed: {}", self.failed());
        }
        out
    }
}

fn is_test_file(p: &Path) -> bool {
    matches!(p.extension().and_then(|e| e.to_str()), Some("ll" | "s"))
}

/// Test files under `paths`, sorted. Directories are searched recursively.
pub fn discover(paths: &[PathBuf]) -> Result<Vec<PathBuf>, LitError> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), LitError> {
        let rd = std::fs::read_dir(dir).map_err(|e| LitError::Io(dir.display().to_string(), e.to_string()))?;
        for entry in rd {
            let p = entry.map_err(|e| LitError::Io(dir.display().to_string(), e.to_string()))?.path();
            if p.is_dir() {
                walk(&p, out)?;
            } else if is_test_file(&p) {
                out.push(p);
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            walk(p, &mut out)?;
        } else if p.exists() {
            out.push(p.clone());
        } else {
            return Err(LitError::Io(p.display().to_string(), "no such file or directory".into()));
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Display name: the path below the nearest `tests` directory, or the file
/// name when there is none.
fn display_name(p: &Path) -> String {
    let comps: Vec<_> = p.components().collect();
    let root = comps.iter().rposition(|c| c.as_os_str() == "tests");
    let tail: Vec<String> = match root {
        Some(i) if i + 1 < comps.len() => comps[i + 1..].iter().map(|c| c.as_os_str().to_string_lossy().into()).collect(),
        _ => vec![p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()],
    };
    tail.join("/")
}

fn scratch_dir(index: usize) -> PathBuf {
    static NEXT: AtomicUsize = AtomicUsize::new(0);
    let n = NEXT.fetch_add(1, Ordering::Relaxed);
    std::env::temp_dir().join(format!("cryptcc-lit-{}-{index}-{n}", std::process::id()))
}

/// Runs every RUN command of one test; passes iff all of them exit 0.
pub fn run_test(path: &Path, index: usize) -> TestResult {
    let name = display_name(path);
    let fail = |detail: String| TestResult { path: path.to_path_buf(), name: name.clone(), verdict: Verdict::Fail, detail };
    let tf = match TestFile::load(path) {
        Ok(t) => t,
        Err(e) => return fail(format!("{e}\n")),
    };
    if tf.run_lines.is_empty() {
        return fail(format!("{}\n", LitError::NoRunLines(path.display().to_string())));
    }
    let tmp = scratch_dir(index);
    let _ = std::fs::create_dir_all(&tmp);
    let mut verdict = Verdict::Pass;
    let mut detail = String::new();
    for run in &tf.run_lines {
        let stages = match tf.pipeline(run, &tmp.join("out")) {
            Ok(s) => s,
            Err(e) => {
                verdict = Verdict::Fail;
                detail = format!("{e}\n");
                break;
            }
        };
        let r = run_pipeline(&stages);
        if r.status != 0 {
            verdict = Verdict::Fail;
            let _ = writeln!(detail, "RUN at line {}: {}", run.line, run.text);
            let _ = writeln!(detail, "stage {} exited with status {}", r.failed_stage.unwrap_or(0) + 1, r.status);
            detail.push_str(&r.stderr);
            break;
        }
    }
    let _ = std::fs::remove_dir_all(&tmp);
    TestResult { path: path.to_path_buf(), name, verdict, detail }
}

/// Discovers and runs tests on up to `workers` threads. Results come back
/// in path order whatever the worker count.
pub fn run_lit(paths: &[PathBuf], workers: usize) -> Result<LitReport, LitError> {
    let start = Instant::now();
    let tests = discover(paths)?;
    let workers = workers.max(1);
    let slots: Mutex<Vec<Option<TestResult>>> = Mutex::new(vec![None; tests.len()]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..workers.min(tests.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(t) = tests.get(i) else { break };
                let r = run_test(t, i);
                slots.lock().expect("no worker panics while holding the lock")[i] = Some(r);
            });
        }
    });
    let results = slots.into_inner().expect("workers joined").into_iter().map(|r| r.expect("every test ran")).collect();
    Ok(LitReport { workers, results, elapsed: start.elapsed() })
}

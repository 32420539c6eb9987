use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use super::filecheck::{collapse_ws, parse_directive_line};
use super::lit::{run_pipeline, LitError, Stage, TestFile};

pub const NOTE: &str = "NOTE: Assertions have been autogenerated by cryptcc update-checks";

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum UpdateError {
    #[error("{0}")]
    Lit(#[from] LitError),
    #[error("{0}: no RUN line ends in filecheck")]
    NoCheckPipeline(String),
    #[error("{path}: RUN at line {line} failed with status {status}\n{stderr}")]
    Failed { path: String, line: usize, status: i32, stderr: String },
    #[error("{path}: output of the RUN at line {line} differs between two runs; refusing to write checks\n{diff}")]
    Nondeterministic { path: String, line: usize, diff: String },
    #[error("{0}")]
    Unplaceable(String),
    #[error("{0}: {1}")]
    Io(String, String),
}

/// A RUN pipeline ending in filecheck: what produces the text, and which
/// prefixes check it.
struct CheckRun {
    line: usize,
    producer: Vec<Stage>,
    prefixes: Vec<String>,
}

fn prefixes_of(argv: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let list = if let Some(v) = a.strip_prefix("--check-prefixes=").or_else(|| a.strip_prefix("--check-prefix=")) {
            Some(v.to_string())
        } else if a == "--check-prefixes" || a == "--check-prefix" {
            it.next().cloned()
        } else {
            None
        };
        if let Some(l) = list {
            out.extend(l.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from));
        }
    }
    if out.is_empty() {
        out.push("CHECK".into());
    }
    out
}

fn line_diff(a: &str, b: &str) -> String {
    let (al, bl): (Vec<&str>, Vec<&str>) = (a.lines().collect(), b.lines().collect());
    let mut out = String::new();
    let mut shown = 0;
    for i in 0..al.len().max(bl.len()) {
        let (x, y) = (al.get(i), bl.get(i));
        if x != y {
            if let Some(x) = x {
                out.push_str(&format!("-{x}\n"));
            }
            if let Some(y) = y {
                out.push_str(&format!("+{y}\n"));
            }
            shown += 1;
            if shown == 10 {
                out.push_str("...\n");
                break;
            }
        }
    }
    out
}

fn produce(tf: &TestFile, run: &CheckRun) -> Result<String, UpdateError> {
    let r = run_pipeline(&run.producer);
    if r.status != 0 {
        return Err(UpdateError::Failed {
            path: tf.path.display().to_string(),
            line: run.line,
            status: r.status,
            stderr: r.stderr,
        });
    }
    Ok(String::from_utf8_lossy(&r.stdout).into_owned())
}

/// Instruction lines of a compiled function, keyed by function label.
fn function_blocks(asm: &str) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut cur: Option<String> = None;
    for l in asm.lines() {
        if l.trim().is_empty() {
            continue;
        }
        if !l.starts_with(char::is_whitespace) && l.trim_end().ends_with(':') {
            let name = l.trim_end().trim_end_matches(':').to_string();
            out.entry(name.clone()).or_default();
            cur = Some(name);
        } else if let Some(c) = &cur {
            out.get_mut(c).expect("block opened").push(collapse_ws(l));
        }
    }
    out
}

fn defined_name(line: &str) -> Option<&str> {
    let l = line.trim_start();
    if !l.starts_with("define ") {
        return None;
    }
    let at = l.find('@')?;
    let rest = &l[at + 1..];
    Some(&rest[..rest.find('(')?])
}

/// Meaningful lines of assembler input or output: no blanks, comments,
/// directives or labels.
fn asm_lines(text: &str, comment: &str) -> Vec<usize> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !(t.is_empty()
                || t.starts_with(comment)
                || t.starts_with('#')
                || t.starts_with('.')
                || (t.ends_with(':') && !t.contains(char::is_whitespace)))
        })
        .map(|(i, _)| i)
        .collect()
}

/// Regenerates the check lines of a test from the current output of its
/// RUN pipelines. RUN lines, IR and assembly source are kept; old checks
/// for the prefixes in use are replaced.
///
/// IR tests get a LABEL line plus NEXT lines after each `define`, one
/// block per RUN prefix; assembly
/// tests get checks under each source instruction, with text every pipeline
/// agrees on checked under the shared prefix and the rest under a prefix
/// only that pipeline enables.
pub fn update_checks_text(tf: &TestFile) -> Result<String, UpdateError> {
    let path = tf.path.display().to_string();
    let tmp = std::env::temp_dir().join(format!("cryptcc-update-{}", std::process::id()));
    let mut runs = Vec::new();
    for rl in &tf.run_lines {
        let mut stages = tf.pipeline(rl, &tmp)?;
        if let Some(fc) = stages.pop_if(|s| s.argv[0] == "filecheck") {
            runs.push(CheckRun { line: rl.line, producer: stages, prefixes: prefixes_of(&fc.argv) });
        }
    }
    runs.retain(|r| !r.producer.is_empty());
    if runs.is_empty() {
        return Err(UpdateError::NoCheckPipeline(path));
    }
    let mut outputs = Vec::new();
    for r in &runs {
        let a = produce(tf, r)?;
        let b = produce(tf, r)?;
        if a != b {
            return Err(UpdateError::Nondeterministic { path, line: r.line, diff: line_diff(&a, &b) });
        }
        outputs.push(a);
    }

    let first_run = tf.text.lines().find(|l| l.contains("RUN:")).unwrap_or_default();
    let comment = first_run[..first_run.find("RUN:").unwrap_or(0)].trim();
    let comment = if comment.is_empty() { ";" } else { comment };
    let all_prefixes: Vec<&str> = runs.iter().flat_map(|r| r.prefixes.iter().map(String::as_str)).collect();

    // The test with old assertions removed.
    let kept: Vec<&str> = tf
        .text
        .lines()
        .filter(|l| !l.contains(NOTE))
        .filter(|l| {
            let t = l.trim_start();
            !(t.starts_with(comment)
                && !l.contains("RUN:")
                && parse_directive_line(l, 0).is_some_and(|d| all_prefixes.contains(&d.prefix.as_str())))
        })
        .collect();
    let body = kept.join("\n");

    let mut out: Vec<String> = vec![format!("{comment} {NOTE}")];
    if kept.iter().any(|l| defined_name(l).is_some()) {
        // One block per RUN, under that RUN's first prefix.
        let mut per_run: Vec<(&str, BTreeMap<String, Vec<String>>)> = Vec::new();
        for (r, o) in runs.iter().zip(&outputs) {
            let p = r.prefixes[0].as_str();
            if !per_run.iter().any(|(q, _)| *q == p) {
                per_run.push((p, function_blocks(o)));
            }
        }
        for l in &kept {
            out.push(l.to_string());
            let Some(name) = defined_name(l) else { continue };
            for (p, blocks) in &per_run {
                if let Some(instrs) = blocks.get(name) {
                    out.push(format!("{comment} {p}-LABEL: {name}:"));
                    for i in instrs {
                        out.push(format!("{comment} {p}-NEXT:    {i}"));
                    }
                }
            }
        }
    } else {
        let src = asm_lines(&body, comment);
        let outs: Vec<Vec<String>> = outputs
            .iter()
            .map(|o| {
                let lines: Vec<&str> = o.lines().collect();
                asm_lines(o, comment).into_iter().map(|i| collapse_ws(lines[i])).collect()
            })
            .collect();
        for (o, r) in outs.iter().zip(&runs) {
            if o.len() != src.len() {
                return Err(UpdateError::Unplaceable(format!(
                    "{path}: RUN at line {} printed {} instructions for {} source lines",
                    r.line,
                    o.len(),
                    src.len()
                )));
            }
        }
        let shared = runs[0].prefixes.iter().find(|p| runs.iter().all(|r| r.prefixes.contains(p))).cloned();
        let unique: Vec<Option<String>> = runs
            .iter()
            .enumerate()
            .map(|(j, r)| {
                r.prefixes.iter().find(|p| runs.iter().enumerate().all(|(k, o)| k == j || !o.prefixes.contains(p))).cloned()
            })
            .collect();
        let source: Vec<&str> = body.lines().collect();
        for (i, l) in source.iter().enumerate() {
            out.push(l.to_string());
            let Some(n) = src.iter().position(|&s| s == i) else { continue };
            let toks: Vec<Vec<&str>> = outs.iter().map(|o| o[n].split(' ').collect()).collect();
            let common = match &shared {
                Some(_) => (0..toks.iter().map(Vec::len).min().unwrap_or(0))
                    .take_while(|&k| toks.iter().all(|t| t[k] == toks[0][k]))
                    .count(),
                None => 0,
            };
            if let (Some(s), true) = (&shared, common > 0) {
                out.push(format!("{comment} {s}: {}", toks[0][..common].join(" ")));
            }
            for (j, t) in toks.iter().enumerate() {
                let rest = t[common..].join(" ");
                let rest = rest.trim_start_matches('#').trim();
                if rest.is_empty() {
                    continue;
                }
                let p = unique[j].as_ref().ok_or_else(|| {
                    UpdateError::Unplaceable(format!(
                        "{path}: no prefix specific to the RUN at line {} to check '{rest}' under",
                        runs[j].line
                    ))
                })?;
                out.push(format!("{comment} {p}: {rest}"));
            }
        }
    }
    let mut text = out.join("\n");
    if tf.text.ends_with('\n') {
        text.push('\n');
    }
    Ok(text)
}

/// Rewrites `path` in place. Returns whether the contents changed.
pub fn update_checks(path: &Path) -> Result<bool, UpdateError> {
    let tf = TestFile::load(path)?;
    let text = update_checks_text(&tf)?;
    if text == tf.text {
        return Ok(false);
    }
    std::fs::write(path, &text).map_err(|e| UpdateError::Io(path.display().to_string(), e.to_string()))?;
    Ok(true)
}

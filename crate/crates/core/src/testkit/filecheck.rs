use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    Plain,
    Next,
    Label,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckDirective {
    pub prefix: String,
    pub kind: CheckKind,
    /// Whitespace already collapsed.
    pub pattern: String,
    /// 1-based line in the check file.
    pub line: usize,
}

impl fmt::Display for CheckDirective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let suffix = match self.kind {
            CheckKind::Plain => "",
            CheckKind::Next => "-NEXT",
            CheckKind::Label => "-LABEL",
        };
        write!(f, "{}{suffix}: {}", self.prefix, self.pattern)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum FileCheckError {
    #[error("no check directives found for prefixes {0}")]
    NoDirectives(String),
    #[error("check file line {line}: {directive} has an empty pattern")]
    EmptyPattern { line: usize, directive: String },
    #[error("check file line {line}: {directive} has no previous match to follow")]
    LeadingNext { line: usize, directive: String },
    #[error("check file line {line}: expected string not found in input\n  {directive}{}", context.as_deref().map(|c| format!("\n  scanning from input line {c}")).unwrap_or_default())]
    NotFound { line: usize, directive: String, context: Option<String> },
    #[error("check file line {line}: {directive} is not on the line after the previous match\n  previous match: {previous}\n  next line: {next}{}", found.as_deref().map(|f| format!("\n  found later at: {f}")).unwrap_or_default())]
    NotNext { line: usize, directive: String, previous: String, next: String, found: Option<String> },
}

/// Runs of spaces and tabs become one space; ends are trimmed.
pub fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Splits `PREFIX`, `PREFIX-NEXT` or `PREFIX-LABEL` off a directive name.
fn split_kind(name: &str) -> (&str, CheckKind) {
    if let Some(p) = name.strip_suffix("-NEXT") {
        (p, CheckKind::Next)
    } else if let Some(p) = name.strip_suffix("-LABEL") {
        (p, CheckKind::Label)
    } else {
        (name, CheckKind::Plain)
    }
}

/// Parses one line of a check file as a directive of any prefix. Leading
/// comment markers (`;`, `#`, `//`) and whitespace are skipped.
pub fn parse_directive_line(text: &str, line: usize) -> Option<CheckDirective> {
    let t = text.trim_start().trim_start_matches([';', '#', '/']).trim_start();
    let colon = t.find(':')?;
    let name = &t[..colon];
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        return None;
    }
    let (prefix, kind) = split_kind(name);
    Some(CheckDirective { prefix: prefix.to_string(), kind, pattern: collapse_ws(&t[colon + 1..]), line })
}

/// Directives in `check_text` whose prefix is one of `prefixes`. Other
/// prefixes are ignored entirely.
pub fn parse_directives(check_text: &str, prefixes: &[&str]) -> Vec<CheckDirective> {
    check_text
        .lines()
        .enumerate()
        .filter_map(|(i, l)| parse_directive_line(l, i + 1))
        .filter(|d| prefixes.contains(&d.prefix.as_str()))
        .collect()
}

/// A match position: line and byte column in the collapsed input.
pub type Pos = (usize, usize);

/// First occurrence of `pattern` at or after `from`.
fn find_from(lines: &[String], from: Pos, pattern: &str) -> Option<Pos> {
    let (l0, c0) = from;
    if let Some(c) = lines.get(l0).and_then(|l| l.get(c0..)).and_then(|t| t.find(pattern)) {
        return Some((l0, c0 + c));
    }
    (l0 + 1..lines.len()).find_map(|l| lines[l].find(pattern).map(|c| (l, c)))
}

/// Matches `input` against the enabled directives of `check_text`. On
/// success returns where each directive matched, in directive order; the
/// positions strictly increase.
///
/// LABEL directives are located first and split the input into blocks;
/// the directives between two labels must match between them. Otherwise
/// matching scans forward from the end of the previous match, which may be
/// on the same line; NEXT must land on the line after the previous match.
pub fn filecheck(input: &str, check_text: &str, prefixes: &[&str]) -> Result<Vec<Pos>, FileCheckError> {
    let directives = parse_directives(check_text, prefixes);
    if directives.is_empty() {
        return Err(FileCheckError::NoDirectives(prefixes.join(",")));
    }
    if let Some(d) = directives.iter().find(|d| d.pattern.is_empty()) {
        return Err(FileCheckError::EmptyPattern { line: d.line, directive: d.to_string() });
    }
    let lines: Vec<String> = input.lines().map(collapse_ws).collect();
    let context = |p: Pos| lines.get(p.0).cloned();
    let not_found = |d: &CheckDirective, p: Pos| FileCheckError::NotFound {
        line: d.line,
        directive: d.to_string(),
        context: context(p),
    };

    // Pass 1: labels, in order.
    let mut label_at: Vec<Option<Pos>> = vec![None; directives.len()];
    let mut cursor = (0, 0);
    for (k, d) in directives.iter().enumerate() {
        if d.kind == CheckKind::Label {
            let at = find_from(&lines, cursor, &d.pattern).ok_or_else(|| not_found(d, cursor))?;
            label_at[k] = Some(at);
            cursor = (at.0, at.1 + d.pattern.len());
        }
    }

    // Pass 2: everything else, bounded by the next label.
    let mut matched = Vec::with_capacity(directives.len());
    let mut prev: Option<Pos> = None;
    let mut cursor = (0, 0);
    for (k, d) in directives.iter().enumerate() {
        if let Some(at) = label_at[k] {
            matched.push(at);
            prev = Some(at);
            cursor = (at.0, at.1 + d.pattern.len());
            continue;
        }
        let bound = label_at[k..].iter().flatten().next().copied().unwrap_or((lines.len(), 0));
        let at = match d.kind {
            CheckKind::Next => {
                let p = prev.ok_or_else(|| FileCheckError::LeadingNext { line: d.line, directive: d.to_string() })?;
                let want = p.0 + 1;
                match lines.get(want).and_then(|l| l.find(&d.pattern)).map(|c| (want, c)) {
                    Some(at) if at < bound => at,
                    _ => {
                        return Err(FileCheckError::NotNext {
                            line: d.line,
                            directive: d.to_string(),
                            previous: lines[p.0].clone(),
                            next: lines.get(want).cloned().unwrap_or_else(|| "<end of input>".into()),
                            found: find_from(&lines, (want, 0), &d.pattern).map(|(l, _)| lines[l].clone()),
                        });
                    }
                }
            }
            _ => match find_from(&lines, cursor, &d.pattern) {
                Some(at) if (at.0, at.1 + d.pattern.len()) <= bound => at,
                _ => return Err(not_found(d, cursor)),
            },
        };
        matched.push(at);
        prev = Some(at);
        cursor = (at.0, at.1 + d.pattern.len());
    }
    Ok(matched)
}

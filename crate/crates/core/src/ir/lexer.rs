//! Tokenizer for the textual IR.

use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    /// `%name`
    Local(String),
    /// `@name`
    Global(String),
    /// `#N` attribute group reference
    AttrRef(u32),
    /// `!name` or `!N` metadata reference
    Meta(String),
    Word(String),
    Int(i128),
    Str(String),
    Punct(char),
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '$' | '-')
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, col);
        let err = |msg: String| ParseError { line: tline, col: tcol, message: msg };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == ';' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = match c {
            '%' | '@' | '!' => {
                i += 1;
                let name = if i < chars.len() && chars[i] == '"' {
                    let (s, n) = read_string(&chars, i).ok_or_else(|| err("unterminated string".into()))?;
                    i = n;
                    s
                } else {
                    let b = i;
                    while i < chars.len() && is_ident_char(chars[i]) {
                        i += 1;
                    }
                    chars[b..i].iter().collect()
                };
                if name.is_empty() && c != '!' {
                    return Err(err(format!("expected a name after '{c}'")));
                }
                match c {
                    '%' => Tok::Local(name),
                    '@' => Tok::Global(name),
                    _ => Tok::Meta(name),
                }
            }
            '#' => {
                i += 1;
                let b = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[b..i].iter().collect();
                let n = digits.parse().map_err(|_| err("expected attribute group number".into()))?;
                Tok::AttrRef(n)
            }
            '"' => {
                let (s, n) = read_string(&chars, i).ok_or_else(|| err("unterminated string".into()))?;
                i = n;
                Tok::Str(s)
            }
            '-' | '0'..='9' => {
                let b = i;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[b..i].iter().collect();
                if s == "-" {
                    return Err(err("stray '-'".into()));
                }
                // Digits followed by identifier characters form a word (e.g. a
                // numeric label such as `0:` is still fine as Int).
                Tok::Int(s.parse().map_err(|_| err(format!("integer literal '{s}' out of range")))?)
            }
            c if c.is_ascii_alphabetic() || c == '_' || c == '.' => {
                let b = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                Tok::Word(chars[b..i].iter().collect())
            }
            '=' | ',' | '(' | ')' | '{' | '}' | '[' | ']' | '*' | ':' | '<' | '>' => {
                i += 1;
                Tok::Punct(c)
            }
            other => return Err(err(format!("unexpected character '{other}'"))),
        };
        col += i - start;
        out.push(Token { tok, line: tline, col: tcol });
    }
    Ok(out)
}

fn read_string(chars: &[char], open: usize) -> Option<(String, usize)> {
    let mut i = open + 1;
    let mut s = String::new();
    while i < chars.len() {
        match chars[i] {
            '"' => return Some((s, i + 1)),
            '\n' => return None,
            c => s.push(c),
        }
        i += 1;
    }
    None
}

//! Recursive-descent parser for the IR subset.
//!
//! The accepted surface syntax is close enough to clang's output that the
//! corpus files can be written the way clang prints them: linkage keywords,
//! alignment, `noundef`/`nsw` style flags, attribute groups and metadata are
//! accepted and mostly dropped.

use std::collections::{BTreeSet, HashMap};

use super::lexer::{tokenize, Tok, Token};
use super::types::*;
use super::ParseError;

/// Aggregate layout used only to turn getelementptr index lists into byte
/// offsets.
#[derive(Clone, Debug)]
enum Layout {
    I8,
    I32,
    Ptr,
    Array(u64, Box<Layout>),
    Struct(Vec<Layout>),
    Named(String),
}

/// A value operand as written, before local names are resolved.
#[derive(Clone, Debug)]
enum RawValue {
    Resolved(Value),
    Local { name: String, line: usize, col: usize },
}

#[derive(Clone, Debug)]
enum RawOp {
    Alloca(IrType),
    Load(IrType, RawValue),
    Store(IrType, RawValue, RawValue),
    Gep(RawValue, i32),
    Bin(BinOp, RawValue, RawValue),
    Funnel(Funnel, RawValue, RawValue, RawValue),
}

struct RawFunction {
    name: String,
    params: Vec<Param>,
    ret_ty: IrType,
    attrs: BTreeSet<String>,
    attr_groups: Vec<u32>,
    label: String,
    insts: Vec<(Option<String>, RawOp, usize, usize)>,
    ret: Option<RawValue>,
}

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    types: HashMap<String, Layout>,
    globals: Vec<GlobalVar>,
    attr_groups: HashMap<u32, Vec<String>>,
}

/// Parses IR text without running the verifier.
pub fn parse_module_unverified(text: &str) -> Result<IrModule, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, types: HashMap::new(), globals: Vec::new(), attr_groups: HashMap::new() };
    p.module()
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos).or(self.toks.last()) {
            Some(t) => (t.line, t.col),
            None => (1, 1),
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError { line, col, message: msg.into() })
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat_punct(c) {
            Ok(())
        } else {
            self.err(format!("expected '{c}'"))
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Word(x)) if x == w) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, w: &str) -> Result<(), ParseError> {
        if self.eat_word(w) {
            Ok(())
        } else {
            self.err(format!("expected '{w}'"))
        }
    }

    fn current_line(&self) -> usize {
        self.here().0
    }

    fn skip_line(&mut self) {
        let line = self.current_line();
        while self.pos < self.toks.len() && self.toks[self.pos].line == line {
            self.pos += 1;
        }
    }

    fn module(&mut self) -> Result<IrModule, ParseError> {
        let mut source_name = String::new();
        let mut raw_fns = Vec::new();
        while let Some(tok) = self.peek().cloned() {
            match tok {
                Tok::Word(w) if w == "source_filename" => {
                    self.pos += 1;
                    self.expect_punct('=')?;
                    match self.next() {
                        Some(Tok::Str(s)) => source_name = s,
                        _ => return self.err("expected string after source_filename"),
                    }
                }
                Tok::Word(w) if w == "target" || w == "declare" => self.skip_line(),
                Tok::Meta(_) => self.skip_line(),
                Tok::Word(w) if w == "attributes" => self.attribute_group()?,
                Tok::Word(w) if w == "define" => raw_fns.push(self.function()?),
                Tok::Local(name) => {
                    self.pos += 1;
                    self.expect_punct('=')?;
                    self.expect_word("type")?;
                    let layout = self.layout()?;
                    self.types.insert(name, layout);
                }
                Tok::Global(name) => self.global(name)?,
                _ => return self.err("expected a top-level entity"),
            }
        }
        let mut functions = Vec::new();
        for raw in raw_fns {
            functions.push(self.resolve_function(raw)?);
        }
        Ok(IrModule { source_name, globals: std::mem::take(&mut self.globals), functions })
    }

    fn attribute_group(&mut self) -> Result<(), ParseError> {
        self.pos += 1;
        let n = match self.next() {
            Some(Tok::AttrRef(n)) => n,
            _ => return self.err("expected attribute group id"),
        };
        self.expect_punct('=')?;
        self.expect_punct('{')?;
        let mut attrs = Vec::new();
        while !self.eat_punct('}') {
            if self.peek().is_none() {
                return self.err("unterminated attribute group");
            }
            attrs.push(self.attribute_token()?);
        }
        self.attr_groups.insert(n, attrs);
        Ok(())
    }

    /// One attribute: a bare word, `word(args)`, or `"key"="value"`.
    fn attribute_token(&mut self) -> Result<String, ParseError> {
        match self.next() {
            Some(Tok::Word(w)) => {
                if self.peek() == Some(&Tok::Punct('(')) {
                    let mut s = w;
                    let mut depth = 0;
                    loop {
                        match self.next() {
                            Some(Tok::Punct('(')) => {
                                depth += 1;
                                s.push('(');
                            }
                            Some(Tok::Punct(')')) => {
                                depth -= 1;
                                s.push(')');
                                if depth == 0 {
                                    break;
                                }
                            }
                            Some(Tok::Punct(':')) => s.push_str(": "),
                            Some(Tok::Punct(',')) => s.push_str(", "),
                            Some(Tok::Word(x)) => s.push_str(&x),
                            Some(Tok::Int(x)) => s.push_str(&x.to_string()),
                            _ => return self.err("malformed attribute"),
                        }
                    }
                    Ok(s)
                } else {
                    Ok(w)
                }
            }
            Some(Tok::Str(k)) => {
                if self.eat_punct('=') {
                    match self.next() {
                        Some(Tok::Str(v)) => Ok(format!("\"{k}\"=\"{v}\"")),
                        _ => self.err("expected attribute value string"),
                    }
                } else {
                    Ok(format!("\"{k}\""))
                }
            }
            _ => self.err("expected attribute"),
        }
    }

    fn global(&mut self, name: String) -> Result<(), ParseError> {
        self.pos += 1;
        self.expect_punct('=')?;
        loop {
            match self.peek() {
                Some(Tok::Word(w)) if w == "global" || w == "constant" => {
                    self.pos += 1;
                    break;
                }
                Some(Tok::Word(_)) => self.pos += 1,
                _ => return self.err("expected 'global'"),
            }
        }
        let ty = self.scalar_type()?;
        if ty != IrType::I32 {
            return self.err("globals must have type i32");
        }
        let init = match self.peek().cloned() {
            Some(Tok::Int(v)) => {
                self.pos += 1;
                self.check_i32(v)?
            }
            Some(Tok::Word(w)) if w == "zeroinitializer" => {
                self.pos += 1;
                0
            }
            _ => 0,
        };
        while self.eat_punct(',') {
            self.expect_word("align")?;
            self.int()?;
        }
        if self.globals.iter().any(|g| g.name == name) {
            return self.err(format!("redefinition of global '@{name}'"));
        }
        self.globals.push(GlobalVar { name, ty, init });
        Ok(())
    }

    fn check_i32(&self, v: i128) -> Result<i32, ParseError> {
        i32::try_from(v).or_else(|_| self.err(format!("integer constant {v} does not fit in 32 bits")))
    }

    fn int(&mut self) -> Result<i128, ParseError> {
        match self.next() {
            Some(Tok::Int(v)) => Ok(v),
            _ => {
                self.pos -= 1;
                self.err("expected integer")
            }
        }
    }

    /// i32, ptr or void. Any other width is rejected with a diagnostic.
    fn scalar_type(&mut self) -> Result<IrType, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Word(w)) => {
                let ty = match w.as_str() {
                    "i32" => IrType::I32,
                    "ptr" => IrType::Ptr,
                    "void" => IrType::Void,
                    "i64" => return self.err("i64 unsupported"),
                    w if w.starts_with('i') && w[1..].parse::<u32>().is_ok() => {
                        return self.err(format!("type {w} unsupported"))
                    }
                    _ => return self.err(format!("expected type, found '{w}'")),
                };
                self.pos += 1;
                Ok(ty)
            }
            _ => self.err("expected type"),
        }
    }

    /// Types allowed as getelementptr source element types and in type
    /// declarations.
    fn layout(&mut self) -> Result<Layout, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Word(w)) if w == "i8" => {
                self.pos += 1;
                Ok(Layout::I8)
            }
            Some(Tok::Word(_)) => match self.scalar_type()? {
                IrType::I32 => Ok(Layout::I32),
                IrType::Ptr => Ok(Layout::Ptr),
                IrType::Void => self.err("void is not a sized type"),
            },
            Some(Tok::Local(name)) => {
                self.pos += 1;
                Ok(Layout::Named(name))
            }
            Some(Tok::Punct('[')) => {
                self.pos += 1;
                let n = self.int()?;
                self.expect_word("x")?;
                let elem = self.layout()?;
                self.expect_punct(']')?;
                Ok(Layout::Array(n as u64, Box::new(elem)))
            }
            Some(Tok::Punct('{')) => {
                self.pos += 1;
                let mut fields = Vec::new();
                if !self.eat_punct('}') {
                    loop {
                        fields.push(self.layout()?);
                        if self.eat_punct('}') {
                            break;
                        }
                        self.expect_punct(',')?;
                    }
                }
                Ok(Layout::Struct(fields))
            }
            _ => self.err("expected type"),
        }
    }

    fn size_of(&self, l: &Layout) -> Result<i64, ParseError> {
        Ok(match l {
            Layout::I8 => 1,
            Layout::I32 | Layout::Ptr => 4,
            Layout::Array(n, e) => *n as i64 * self.size_of(e)?,
            Layout::Struct(fs) => fs.iter().map(|f| self.size_of(f)).sum::<Result<i64, _>>()?,
            Layout::Named(n) => match self.types.get(n) {
                Some(t) => self.size_of(&t.clone())?,
                None => return self.err(format!("unknown type '%{n}'")),
            },
        })
    }

    fn resolve_layout(&self, l: &Layout) -> Result<Layout, ParseError> {
        match l {
            Layout::Named(n) => match self.types.get(n) {
                Some(t) => self.resolve_layout(t),
                None => self.err(format!("unknown type '%{n}'")),
            },
            other => Ok(other.clone()),
        }
    }

    fn function(&mut self) -> Result<RawFunction, ParseError> {
        self.expect_word("define")?;
        // Linkage, visibility and return attributes come before the type.
        let ret_ty = loop {
            match self.peek() {
                Some(Tok::Word(w)) if matches!(w.as_str(), "i32" | "ptr" | "void" | "i64" | "i8" | "i16" | "i1") => {
                    break self.scalar_type()?;
                }
                Some(Tok::Word(_)) => self.pos += 1,
                _ => return self.err("expected return type"),
            }
        };
        let name = match self.next() {
            Some(Tok::Global(n)) => n,
            _ => return self.err("expected function name"),
        };
        self.expect_punct('(')?;
        let mut params = Vec::new();
        if !self.eat_punct(')') {
            loop {
                let ty = self.scalar_type()?;
                if ty == IrType::Void {
                    return self.err("parameters cannot be void");
                }
                let pname = loop {
                    match self.next() {
                        Some(Tok::Local(n)) => break n,
                        Some(Tok::Word(_)) => continue,
                        _ => {
                            self.pos -= 1;
                            return self.err("expected parameter name");
                        }
                    }
                };
                params.push(Param { name: pname, ty });
                if self.eat_punct(')') {
                    break;
                }
                self.expect_punct(',')?;
            }
        }
        let mut attrs = BTreeSet::new();
        let mut attr_groups = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Punct('{')) => break,
                Some(Tok::AttrRef(n)) => {
                    attr_groups.push(*n);
                    self.pos += 1;
                }
                Some(Tok::Word(_)) | Some(Tok::Str(_)) => {
                    attrs.insert(self.attribute_token()?);
                }
                _ => return self.err("expected '{'"),
            }
        }
        self.expect_punct('{')?;

        let mut label = String::from("entry");
        let mut insts = Vec::new();
        let mut ret = None;
        let mut seen_label = false;
        let mut terminated = false;
        loop {
            let (line, col) = self.here();
            match self.peek().cloned() {
                Some(Tok::Punct('}')) => {
                    self.pos += 1;
                    break;
                }
                None => return self.err("unexpected end of input inside function body"),
                _ if terminated => {
                    return self.err("multi-block functions are not supported (instructions after ret)")
                }
                Some(Tok::Word(w)) if self.peek_at(1) == Some(&Tok::Punct(':')) => {
                    if seen_label || !insts.is_empty() {
                        return self.err("multi-block functions are not supported");
                    }
                    seen_label = true;
                    label = w;
                    self.pos += 2;
                }
                Some(Tok::Int(n)) if self.peek_at(1) == Some(&Tok::Punct(':')) => {
                    if seen_label || !insts.is_empty() {
                        return self.err("multi-block functions are not supported");
                    }
                    seen_label = true;
                    label = n.to_string();
                    self.pos += 2;
                }
                Some(Tok::Local(res)) => {
                    self.pos += 1;
                    self.expect_punct('=')?;
                    match self.instruction(true)? {
                        Some(RawOp::Store(..)) | None => {
                            return Err(ParseError { line, col, message: "this instruction does not produce a value".into() })
                        }
                        Some(op) => insts.push((Some(res), op, line, col)),
                    }
                }
                Some(Tok::Word(w)) if w == "ret" => {
                    self.pos += 1;
                    let ty = self.scalar_type()?;
                    if ty != ret_ty {
                        return self.err(format!("ret type {ty} does not match function return type {ret_ty}"));
                    }
                    if ty != IrType::Void {
                        ret = Some(self.value()?);
                    }
                    terminated = true;
                }
                Some(Tok::Word(_)) => {
                    match self.instruction(false)? {
                        Some(op @ RawOp::Store(..)) => insts.push((None, op, line, col)),
                        Some(_) => return Err(ParseError { line, col, message: "instruction result must be named".into() }),
                        None => {}
                    }
                }
                _ => return self.err("expected instruction"),
            }
        }
        if !terminated {
            return self.err(format!("function '@{name}' has no ret terminator"));
        }
        Ok(RawFunction { name, params, ret_ty, attrs, attr_groups, label, insts, ret })
    }

    fn value(&mut self) -> Result<RawValue, ParseError> {
        let (line, col) = self.here();
        match self.next() {
            Some(Tok::Local(name)) => Ok(RawValue::Local { name, line, col }),
            Some(Tok::Global(name)) => match self.globals.iter().position(|g| g.name == name) {
                Some(i) => Ok(RawValue::Resolved(Value::Global(GlobalId(i as u32)))),
                None => {
                    self.pos -= 1;
                    self.err(format!("use of undefined value '@{name}'"))
                }
            },
            Some(Tok::Int(v)) => {
                self.pos -= 1;
                let c = self.check_i32(v)?;
                self.pos += 1;
                Ok(RawValue::Resolved(Value::Const(c)))
            }
            Some(Tok::Word(w)) if w == "poison" || w == "undef" => Ok(RawValue::Resolved(Value::Poison)),
            Some(Tok::Word(w)) if w == "null" => Ok(RawValue::Resolved(Value::Const(0))),
            _ => {
                self.pos -= 1;
                self.err("expected value")
            }
        }
    }

    fn skip_flags(&mut self, flags: &[&str]) {
        while matches!(self.peek(), Some(Tok::Word(w)) if flags.contains(&w.as_str())) {
            self.pos += 1;
        }
    }

    fn skip_align(&mut self) -> Result<(), ParseError> {
        while self.peek() == Some(&Tok::Punct(',')) {
            if matches!(self.peek_at(1), Some(Tok::Word(w)) if w == "align") {
                self.pos += 2;
                self.int()?;
            } else {
                break;
            }
        }
        Ok(())
    }

    /// Parses one instruction. Returns `None` for calls that are accepted and
    /// dropped (lifetime markers).
    fn instruction(&mut self, has_result: bool) -> Result<Option<RawOp>, ParseError> {
        let opcode = match self.next() {
            Some(Tok::Word(w)) => w,
            _ => {
                self.pos -= 1;
                return self.err("expected opcode");
            }
        };
        let op = match opcode.as_str() {
            "alloca" => {
                let ty = self.scalar_type()?;
                if ty == IrType::Void {
                    return self.err("cannot allocate void");
                }
                self.skip_align()?;
                RawOp::Alloca(ty)
            }
            "load" => {
                self.skip_flags(&["volatile"]);
                let ty = self.scalar_type()?;
                self.expect_punct(',')?;
                self.expect_ptr_type()?;
                let addr = self.value()?;
                self.skip_align()?;
                RawOp::Load(ty, addr)
            }
            "store" => {
                self.skip_flags(&["volatile"]);
                let ty = self.scalar_type()?;
                let v = self.value()?;
                self.expect_punct(',')?;
                self.expect_ptr_type()?;
                let addr = self.value()?;
                self.skip_align()?;
                RawOp::Store(ty, v, addr)
            }
            "getelementptr" => {
                self.skip_flags(&["inbounds", "nuw", "nusw"]);
                let elem = self.layout()?;
                self.expect_punct(',')?;
                self.expect_ptr_type()?;
                let base = self.value()?;
                let mut indices = Vec::new();
                while self.eat_punct(',') {
                    self.skip_flags(&["inrange"]);
                    let ity = self.scalar_type()?;
                    if ity != IrType::I32 {
                        return self.err("getelementptr indices must be i32");
                    }
                    match self.next() {
                        Some(Tok::Int(v)) => indices.push(v as i64),
                        _ => {
                            self.pos -= 1;
                            return self.err("getelementptr indices must be constants");
                        }
                    }
                }
                let offset = self.gep_offset(&elem, &indices)?;
                RawOp::Gep(base, offset)
            }
            "not" => {
                let ty = self.scalar_type()?;
                if ty != IrType::I32 {
                    return self.err("not requires i32");
                }
                let v = self.value()?;
                RawOp::Bin(BinOp::Xor, v, RawValue::Resolved(Value::Const(-1)))
            }
            "tail" | "musttail" | "notail" | "call" => {
                if opcode != "call" {
                    self.expect_word("call")?;
                }
                return self.call(has_result);
            }
            other => match BinOp::from_name(other) {
                Some(op) => {
                    self.skip_flags(&["nsw", "nuw", "exact", "disjoint"]);
                    let ty = self.scalar_type()?;
                    if ty != IrType::I32 {
                        return self.err(format!("{other} requires i32 operands"));
                    }
                    let mut lhs = self.value()?;
                    self.expect_punct(',')?;
                    let mut rhs = self.value()?;
                    // `xor -1, x` is the same NOT idiom; keep one spelling.
                    if op == BinOp::Xor && matches!(lhs, RawValue::Resolved(Value::Const(-1))) {
                        std::mem::swap(&mut lhs, &mut rhs);
                    }
                    RawOp::Bin(op, lhs, rhs)
                }
                None => {
                    self.pos -= 1;
                    return self.err(format!("unknown opcode '{other}'"));
                }
            },
        };
        Ok(Some(op))
    }

    fn expect_ptr_type(&mut self) -> Result<(), ParseError> {
        if self.scalar_type()? != IrType::Ptr {
            self.pos -= 1;
            return self.err("expected ptr operand");
        }
        Ok(())
    }

    fn gep_offset(&mut self, elem: &Layout, indices: &[i64]) -> Result<i32, ParseError> {
        let mut offset: i64 = 0;
        let mut cur = self.resolve_layout(elem)?;
        for (k, &idx) in indices.iter().enumerate() {
            if k == 0 {
                offset += idx * self.size_of(&cur)?;
                continue;
            }
            match cur.clone() {
                Layout::Array(_, e) => {
                    offset += idx * self.size_of(&e)?;
                    cur = self.resolve_layout(&e)?;
                }
                Layout::Struct(fields) => {
                    let i = usize::try_from(idx).ok().filter(|&i| i < fields.len());
                    let Some(i) = i else { return self.err(format!("struct index {idx} out of range")) };
                    for f in &fields[..i] {
                        offset += self.size_of(f)?;
                    }
                    cur = self.resolve_layout(&fields[i])?;
                }
                _ => return self.err("too many getelementptr indices for a scalar type"),
            }
        }
        i32::try_from(offset).or_else(|_| self.err("getelementptr offset out of range"))
    }

    fn call(&mut self, has_result: bool) -> Result<Option<RawOp>, ParseError> {
        // Return attributes, then the return type.
        let ret_ty = loop {
            match self.peek() {
                Some(Tok::Word(w)) if matches!(w.as_str(), "i32" | "ptr" | "void" | "i64") => break self.scalar_type()?,
                Some(Tok::Word(_)) => self.pos += 1,
                _ => return self.err("expected call return type"),
            }
        };
        let callee = match self.next() {
            Some(Tok::Global(n)) => n,
            _ => {
                self.pos -= 1;
                return self.err("expected callee");
            }
        };
        if callee.starts_with("llvm.lifetime.") {
            // Dropped: lifetimes are not modelled. The size argument is i64,
            // so the arguments are skipped without type checking.
            let mut depth = 0;
            loop {
                match self.next() {
                    Some(Tok::Punct('(')) => depth += 1,
                    Some(Tok::Punct(')')) => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    Some(_) => {}
                    None => return self.err("unterminated call"),
                }
            }
            while matches!(self.peek(), Some(Tok::AttrRef(_))) {
                self.pos += 1;
            }
            return Ok(None);
        }
        let kind = match callee.as_str() {
            "llvm.fshl.i32" => Funnel::Fshl,
            "llvm.fshr.i32" => Funnel::Fshr,
            _ => {
                self.pos -= 1;
                return self.err(format!("call to unsupported function '@{callee}'"));
            }
        };
        if ret_ty != IrType::I32 || !has_result {
            return self.err("funnel shift intrinsics return i32");
        }
        self.expect_punct('(')?;
        let mut args = Vec::new();
        loop {
            let ty = self.scalar_type()?;
            if ty != IrType::I32 {
                return self.err("funnel shift operands must be i32");
            }
            self.skip_flags(&["noundef"]);
            args.push(self.value()?);
            if self.eat_punct(')') {
                break;
            }
            self.expect_punct(',')?;
        }
        while matches!(self.peek(), Some(Tok::AttrRef(_))) {
            self.pos += 1;
        }
        if args.len() != 3 {
            return self.err("funnel shift intrinsics take three operands");
        }
        let c = args.pop().unwrap();
        let b = args.pop().unwrap();
        let a = args.pop().unwrap();
        Ok(Some(RawOp::Funnel(kind, a, b, c)))
    }

    fn resolve_function(&self, raw: RawFunction) -> Result<IrFunction, ParseError> {
        let mut f = IrFunction::new(&raw.name, raw.params, raw.ret_ty);
        f.body.label = raw.label;
        f.attrs = raw.attrs;
        for g in &raw.attr_groups {
            match self.attr_groups.get(g) {
                Some(list) => f.attrs.extend(list.iter().cloned()),
                None => {
                    return Err(ParseError { line: 0, col: 0, message: format!("undefined attribute group #{g}") })
                }
            }
        }
        let mut names: HashMap<String, Value> = HashMap::new();
        for (i, p) in f.params.iter().enumerate() {
            names.insert(p.name.clone(), Value::Arg(i as u32));
        }
        let ids: Vec<InstId> = raw.insts.iter().map(|_| f.fresh_id()).collect();
        for ((name, _, line, col), id) in raw.insts.iter().zip(&ids) {
            if let Some(n) = name {
                if names.insert(n.clone(), Value::Inst(*id)).is_some() {
                    return Err(ParseError { line: *line, col: *col, message: format!("redefinition of '%{n}'") });
                }
            }
        }
        let res = |v: &RawValue| -> Result<Value, ParseError> {
            match v {
                RawValue::Resolved(v) => Ok(*v),
                RawValue::Local { name, line, col } => names.get(name).copied().ok_or_else(|| ParseError {
                    line: *line,
                    col: *col,
                    message: format!("use of undefined value '%{name}'"),
                }),
            }
        };
        for ((name, op, _, _), id) in raw.insts.iter().zip(ids) {
            let op = match op {
                RawOp::Alloca(ty) => Op::Alloca { ty: *ty },
                RawOp::Load(ty, a) => Op::Load { ty: *ty, addr: res(a)? },
                RawOp::Store(ty, v, a) => Op::Store { ty: *ty, value: res(v)?, addr: res(a)? },
                RawOp::Gep(b, o) => Op::Gep { base: res(b)?, offset: *o },
                RawOp::Bin(op, l, r) => Op::Bin { op: *op, lhs: res(l)?, rhs: res(r)? },
                RawOp::Funnel(k, a, b, c) => Op::Funnel { kind: *k, hi: res(a)?, lo: res(b)?, amount: res(c)? },
            };
            f.body.insts.push(Inst { id, name: name.clone(), op });
        }
        f.body.ret = raw.ret.as_ref().map(res).transpose()?;
        Ok(f)
    }
}

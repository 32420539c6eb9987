use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::compile::{compile_module, load_ir, CompileError, CompileOptions, CompiledModule, OptLevel};
use crate::ir::print_module;
use crate::isel::DagStage;
use crate::midend::{run_pipeline, PassPipeline};
use crate::sim::{initial_memory, run_function, symbol_map, DEFAULT_FUEL};
use crate::target::{
    decode, encode, parse_instr, print_instr, EncodedWord, ExtensionSet, MOperand, MachineInstr, RelocKind, TargetDesc,
    DEFAULT_ZBA_THRESHOLD,
};
use crate::testkit::{filecheck, run_lit, update_checks, FileCheckError};

/// Environment variable holding the default `--mattr` list.
pub const MATTR_ENV: &str = "CRYPTCC_MATTR";

#[derive(Parser, Debug)]
#[command(name = "cryptcc", version, about = "RV32 compiler backend with the Xcrypt extension", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the IR optimization pipeline and print the result.
    Opt(OptCmd),
    /// Compile IR to assembly, object words or a DAG drawing.
    Llc(LlcCmd),
    /// Assemble or disassemble machine code.
    Mc(McCmd),
    /// Compile IR and execute one function in the simulator.
    Run(RunCmd),
    /// Run lit-style tests.
    Lit(LitCmd),
    /// Check text on stdin against the directives in a check file.
    Filecheck(FileCheckCmd),
    /// Regenerate the check lines of tests from current output.
    UpdateChecks(UpdateCmd),
}

fn parse_level(s: &str) -> Result<OptLevel, String> {
    match s {
        "0" => Ok(OptLevel::O0),
        "2" => Ok(OptLevel::O2),
        _ => Err(format!("unsupported optimization level '{s}' (use 0 or 2)")),
    }
}

#[derive(Args, Debug)]
struct Target {
    /// Extensions on top of I+M, e.g. +zba,+xcrypt or -m. Defaults to $CRYPTCC_MATTR.
    #[arg(long, value_name = "ATTRS")]
    mattr: Option<String>,
    /// Optimization level: -O0 runs no IR passes, -O2 the default pipeline.
    #[arg(short = 'O', value_name = "LEVEL", default_value = "2", value_parser = parse_level)]
    level: OptLevel,
    /// Largest plain LUI/ADDI sequence before the Zba shift-add form is tried.
    #[arg(long, value_name = "N", default_value_t = DEFAULT_ZBA_THRESHOLD)]
    zba_threshold: usize,
}

#[derive(Args, Debug)]
struct OptCmd {
    /// IR input; '-' or nothing reads stdin.
    input: Option<PathBuf>,
    /// Optimization level: -O0 runs no passes, -O2 the default pipeline.
    #[arg(short = 'O', value_name = "LEVEL", default_value = "2", value_parser = parse_level)]
    level: OptLevel,
    /// Explicit comma-separated pass list; overrides -O.
    #[arg(long, value_name = "LIST")]
    passes: Option<String>,
    /// Print pass statistics to stderr.
    #[arg(long)]
    stats: bool,
    /// Output file.
    #[arg(short = 'o', value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Emit {
    Asm,
    Obj,
    Dot,
}

#[derive(Args, Debug)]
struct LlcCmd {
    /// IR input; '-' or nothing reads stdin.
    input: Option<PathBuf>,
    #[command(flatten)]
    target: Target,
    /// What to write.
    #[arg(long, value_enum, default_value = "asm")]
    emit: Emit,
    /// DAG stage to draw with --emit=dot.
    #[arg(long, value_name = "STAGE", default_value = "built")]
    dag_stage: DagStage,
    /// Print the selection trace, including hook decisions, to stderr.
    #[arg(long)]
    debug_isel: bool,
    /// Print pass statistics to stderr.
    #[arg(long)]
    stats: bool,
    /// Output file.
    #[arg(short = 'o', value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FileType {
    Asm,
    Obj,
}

#[derive(Args, Debug)]
struct McCmd {
    /// Input; '-' or nothing reads stdin.
    input: Option<PathBuf>,
    /// Assemble text (the default).
    #[arg(long, conflicts_with = "disassemble")]
    assemble: bool,
    /// Disassemble one 0xXXXXXXXX word per line.
    #[arg(long)]
    disassemble: bool,
    /// Append "# encoding: [..]" byte lists to printed instructions.
    #[arg(long)]
    show_encoding: bool,
    /// Output of --assemble: canonical text or object words.
    #[arg(long, value_enum, default_value = "asm")]
    filetype: FileType,
    /// Extensions on top of I+M. Defaults to $CRYPTCC_MATTR.
    #[arg(long, value_name = "ATTRS")]
    mattr: Option<String>,
    /// Output file.
    #[arg(short = 'o', value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunCmd {
    /// IR input; '-' or nothing reads stdin.
    input: Option<PathBuf>,
    #[command(flatten)]
    target: Target,
    /// Function to call; may be omitted when the module has only one.
    #[arg(long, value_name = "NAME")]
    entry: Option<String>,
    /// Comma-separated arguments, decimal or 0x hex.
    #[arg(long, value_name = "V1,V2,..", value_delimiter = ',', allow_negative_numbers = true)]
    args: Vec<String>,
    /// Fill all arguments with random words instead (printed first).
    #[arg(long, conflicts_with = "args")]
    random_args: bool,
    /// Preload memory: ADDR:HEXBYTES, repeatable.
    #[arg(long, value_name = "ADDR:HEX")]
    mem: Vec<String>,
    /// Print every executed instruction.
    #[arg(long)]
    trace: bool,
    /// Instruction budget.
    #[arg(long, default_value_t = DEFAULT_FUEL)]
    fuel: u64,
}

#[derive(Args, Debug)]
struct LitCmd {
    /// Test files or directories.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    /// Show failure details (always on).
    #[arg(short = 'v', long)]
    verbose: bool,
    /// Tests run concurrently. Defaults to the number of CPUs.
    #[arg(long, short = 'j')]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct FileCheckCmd {
    /// File holding the check directives.
    check_file: PathBuf,
    /// Enabled prefixes, comma separated. Defaults to CHECK.
    #[arg(long, value_delimiter = ',', value_name = "P1,P2")]
    check_prefixes: Vec<String>,
    /// One more enabled prefix, repeatable.
    #[arg(long, value_name = "P")]
    check_prefix: Vec<String>,
}

#[derive(Args, Debug)]
struct UpdateCmd {
    /// Test files or directories to rewrite in place.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
}

/// Everything an invocation printed, and its exit status.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub status: i32,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
}

impl Outcome {
    pub fn stdout_str(&self) -> String {
        String::from_utf8_lossy(&self.stdout).into_owned()
    }

    pub fn stderr_str(&self) -> String {
        String::from_utf8_lossy(&self.stderr).into_owned()
    }
}

enum Fail {
    /// Bad command line: status 2.
    Usage(String),
    /// Bad input or a failed check: status 1.
    Input(String),
}

struct Io<'a> {
    stdin: &'a mut dyn Read,
    out: String,
    err: String,
}

impl Io<'_> {
    /// Reads the named file, or stdin for `None`/`-`. Returns a name for
    /// diagnostics along with the text.
    fn input(&mut self, path: Option<&Path>) -> Result<(String, String), Fail> {
        match path {
            Some(p) if p != Path::new("-") => std::fs::read_to_string(p)
                .map(|t| (p.display().to_string(), t))
                .map_err(|e| Fail::Input(format!("{}: error: {e}", p.display()))),
            _ => {
                let mut s = String::new();
                self.stdin.read_to_string(&mut s).map_err(|e| Fail::Input(format!("<stdin>: error: {e}")))?;
                Ok(("<stdin>".into(), s))
            }
        }
    }

    fn output(&mut self, path: Option<&Path>, text: &str) -> Result<(), Fail> {
        match path {
            Some(p) if p != Path::new("-") => {
                std::fs::write(p, text).map_err(|e| Fail::Input(format!("{}: error: {e}", p.display())))
            }
            _ => {
                self.out.push_str(text);
                Ok(())
            }
        }
    }
}

fn mattr(flag: Option<&str>) -> Result<ExtensionSet, Fail> {
    let env = std::env::var(MATTR_ENV).ok();
    let spec = flag.or(env.as_deref()).unwrap_or("");
    ExtensionSet::parse_mattr(spec).map_err(|e| Fail::Usage(format!("error: --mattr: {e}")))
}

fn diag(file: &str, e: &CompileError) -> Fail {
    Fail::Input(match e {
        CompileError::Parse(p) => format!("{file}:{}:{}: error: {}", p.line, p.col, p.message),
        other => format!("{file}: error: {other}"),
    })
}

fn compile(io: &mut Io, input: Option<&Path>, t: &Target, dot: Option<DagStage>) -> Result<(String, CompiledModule), Fail> {
    let (name, text) = io.input(input)?;
    let m = load_ir(&text).map_err(|e| diag(&name, &e))?;
    let opts = CompileOptions {
        zba_threshold: t.zba_threshold,
        dot_stage: dot,
        ..CompileOptions::new(mattr(t.mattr.as_deref())?).with_opt(t.level)
    };
    let c = compile_module(&m, TargetDesc::shipped(), &opts).map_err(|e| diag(&name, &e))?;
    Ok((name, c))
}

fn stats_block(stats: &crate::midend::PassStats) -> String {
    format!("===--- Statistics Collected ---===\n\n{stats}")
}

fn cmd_opt(c: OptCmd, io: &mut Io) -> Result<(), Fail> {
    let (name, text) = io.input(c.input.as_deref())?;
    let m = load_ir(&text).map_err(|e| diag(&name, &e))?;
    let pipeline = match &c.passes {
        Some(list) => PassPipeline::parse(list).map_err(|e| Fail::Usage(format!("error: --passes: {e}")))?,
        None => c.level.pipeline(),
    };
    let (ir, stats) = run_pipeline(&m, &pipeline).map_err(|e| Fail::Input(format!("{name}: error: {e}")))?;
    if c.stats {
        io.err.push_str(&stats_block(&stats));
    }
    io.output(c.output.as_deref(), &print_module(&ir))
}

fn bytes_of(word: u32) -> String {
    let b = word.to_le_bytes();
    format!("[{:#04x},{:#04x},{:#04x},{:#04x}]", b[0], b[1], b[2], b[3])
}

fn reloc_name(k: RelocKind) -> &'static str {
    match k {
        RelocKind::Hi20 => "R_RISCV_HI20",
        RelocKind::Lo12 => "R_RISCV_LO12",
    }
}

/// One word per line, then a relocation table and a symbol table when
/// they have entries.
fn render_obj(words: &[EncodedWord], symbols: &[(u32, String)]) -> String {
    let mut out = String::new();
    for w in words {
        let _ = writeln!(out, "{:#010x}", w.word);
    }
    let relocs: Vec<_> = words.iter().enumerate().filter_map(|(i, w)| w.reloc.as_ref().map(|r| (i * 4, r))).collect();
    if !relocs.is_empty() {
        out.push_str("\nRELOCATION RECORDS\n");
        for (off, (k, s)) in relocs {
            let _ = writeln!(out, "{off:#010x} {:<13} {s}", reloc_name(*k));
        }
    }
    if !symbols.is_empty() {
        out.push_str("\nSYMBOLS\n");
        for (off, s) in symbols {
            let _ = writeln!(out, "{off:#010x} {s}");
        }
    }
    out
}

fn cmd_llc(c: LlcCmd, io: &mut Io) -> Result<(), Fail> {
    let dot = (c.emit == Emit::Dot).then_some(c.dag_stage);
    let (name, m) = compile(io, c.input.as_deref(), &c.target, dot)?;
    let desc = TargetDesc::shipped();
    if c.stats {
        io.err.push_str(&stats_block(&m.stats));
    }
    if c.debug_isel {
        for f in &m.functions {
            let _ = writeln!(io.err, "=== selecting @{} ===", f.mf.name);
            for t in &f.trace {
                let _ = writeln!(io.err, "{t}");
            }
        }
    }
    let text = match c.emit {
        Emit::Asm => m.asm(desc),
        Emit::Dot => m.functions.iter().filter_map(|f| f.dot.clone()).collect::<Vec<_>>().join("\n"),
        Emit::Obj => {
            let mut words = Vec::new();
            let mut symbols = Vec::new();
            for f in &m.functions {
                symbols.push((words.len() as u32 * 4, f.mf.name.clone()));
                words.extend(m.words(&f.mf.name, desc).map_err(|e| diag(&name, &e))?);
            }
            render_obj(&words, &symbols)
        }
    };
    io.output(c.output.as_deref(), &text)
}

/// Encodes with symbol operands left as zero fields, recording them.
fn encode_unresolved(mi: &MachineInstr, desc: &TargetDesc) -> Result<EncodedWord, String> {
    let mut resolved = mi.clone();
    let mut reloc = None;
    for op in &mut resolved.ops {
        if let MOperand::Sym(k, s) = op {
            reloc = Some((*k, s.clone()));
            *op = MOperand::Imm(0);
        }
    }
    let mut w = encode(&resolved, desc).map_err(|e| e.to_string())?;
    w.reloc = reloc;
    Ok(w)
}

fn cmd_mc(c: McCmd, io: &mut Io) -> Result<(), Fail> {
    let ext = mattr(c.mattr.as_deref())?;
    let desc = TargetDesc::shipped();
    let (name, text) = io.input(c.input.as_deref())?;
    let mut out = String::new();
    if c.disassemble {
        for (n, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let Some(hex) = t.strip_prefix("0x").filter(|h| h.len() == 8 && !h.contains(char::is_whitespace)) else {
                // The relocation table, if any, ends the word list.
                break;
            };
            let word = u32::from_str_radix(hex, 16)
                .map_err(|_| Fail::Input(format!("{name}:{}: error: invalid word '{t}'", n + 1)))?;
            let mi = decode(word, desc, ext)
                .ok_or_else(|| Fail::Input(format!("{name}:{}: error: invalid instruction encoding {t}", n + 1)))?;
            let _ = write!(out, "\t{}", print_instr(&mi, desc, false));
            if c.show_encoding {
                let _ = write!(out, "\t# encoding: {}", bytes_of(word));
            }
            out.push('\n');
        }
        return io.output(c.output.as_deref(), &out);
    }
    let mut words = Vec::new();
    let mut printed = String::from("\t.text\n");
    for (n, line) in text.lines().enumerate() {
        let code = line.split('#').next().unwrap_or_default().trim();
        let code = match code.split_once(':') {
            Some((label, rest)) if !label.contains(char::is_whitespace) && !label.contains('(') => rest.trim(),
            _ => code,
        };
        if code.is_empty() || code.starts_with('.') {
            continue;
        }
        let mis = parse_instr(code, desc, ext).map_err(|e| Fail::Input(format!("{name}:{}: error: {e}", n + 1)))?;
        for mi in mis {
            let w = encode_unresolved(&mi, desc).map_err(|e| Fail::Input(format!("{name}:{}: error: {e}", n + 1)))?;
            let _ = write!(printed, "\t{}", print_instr(&mi, desc, false));
            if c.show_encoding {
                let _ = write!(printed, "\t# encoding: {}", bytes_of(w.word));
            }
            printed.push('\n');
            words.push(w);
        }
    }
    let text = match c.filetype {
        FileType::Asm => printed,
        FileType::Obj => render_obj(&words, &[]),
    };
    io.output(c.output.as_deref(), &text)
}

fn parse_word(s: &str) -> Option<u32> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let v = match body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        Some(h) => u32::from_str_radix(h, 16).ok()?,
        None => body.parse::<u32>().ok()?,
    };
    Some(if neg { v.wrapping_neg() } else { v })
}

fn cmd_run(c: RunCmd, io: &mut Io) -> Result<(), Fail> {
    let (name, m) = compile(io, c.input.as_deref(), &c.target, None)?;
    let entry = match &c.entry {
        Some(e) => e.clone(),
        None if m.functions.len() == 1 => m.functions[0].mf.name.clone(),
        None => return Err(Fail::Usage("error: --entry is required when the module has several functions".into())),
    };
    let f = m.ir.function(&entry).ok_or_else(|| Fail::Input(format!("{name}: error: no function named @{entry}")))?;
    let args: Vec<u32> = if c.random_args {
        let a: Vec<u32> = (0..f.params.len()).map(|_| rand::random()).collect();
        let _ = writeln!(io.out, "args: {}", a.iter().map(|v| format!("{v:#x}")).collect::<Vec<_>>().join(","));
        a
    } else {
        c.args
            .iter()
            .map(|s| parse_word(s).ok_or_else(|| Fail::Usage(format!("error: --args: invalid value '{s}'"))))
            .collect::<Result<_, _>>()?
    };
    let mut mem = initial_memory(&m.ir);
    for spec in &c.mem {
        let bad = || Fail::Usage(format!("error: --mem: expected ADDR:HEXBYTES, got '{spec}'"));
        let (addr, hex) = spec.split_once(':').ok_or_else(bad)?;
        let addr = parse_word(addr).ok_or_else(bad)?;
        if hex.len() % 2 != 0 {
            return Err(bad());
        }
        let bytes: Vec<u8> =
            (0..hex.len()).step_by(2).map(|i| u8::from_str_radix(&hex[i..i + 2], 16)).collect::<Result<_, _>>().map_err(|_| bad())?;
        mem.write_bytes(addr, &bytes);
    }
    let desc = TargetDesc::shipped();
    let words: Vec<u32> = m.words(&entry, desc).map_err(|e| diag(&name, &e))?.iter().map(|w| w.word).collect();
    let (ret, after, trace) =
        run_function(&words, &args, &mem, c.fuel).map_err(|e| Fail::Input(format!("{name}: error: @{entry}: {e}")))?;
    let mut out = String::new();
    if c.trace {
        out.push_str(&trace.render(desc));
    }
    if f.ret_ty != crate::ir::IrType::Void {
        let _ = writeln!(out, "result: {} ({ret:#010x})", ret as i32);
    }
    for (g, addr) in symbol_map(&m.ir) {
        let v = after.read_u32(addr);
        let _ = writeln!(out, "@{g} = {} ({v:#010x})", v as i32);
    }
    io.out.push_str(&out);
    Ok(())
}

fn cmd_lit(c: LitCmd, io: &mut Io) -> Result<(), Fail> {
    let workers = c.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let report = run_lit(&c.paths, workers).map_err(|e| Fail::Input(format!("error: {e}")))?;
    io.out.push_str(&report.render(c.verbose));
    if report.failed() > 0 {
        return Err(Fail::Input(String::new()));
    }
    Ok(())
}

fn cmd_filecheck(c: FileCheckCmd, io: &mut Io) -> Result<(), Fail> {
    let check = std::fs::read_to_string(&c.check_file)
        .map_err(|e| Fail::Usage(format!("{}: error: {e}", c.check_file.display())))?;
    let mut prefixes: Vec<String> = c.check_prefixes.into_iter().chain(c.check_prefix).collect();
    if prefixes.is_empty() {
        prefixes.push("CHECK".into());
    }
    let prefixes: Vec<&str> = prefixes.iter().map(String::as_str).collect();
    let (_, input) = io.input(None)?;
    let file = c.check_file.display();
    match filecheck(&input, &check, &prefixes) {
        Ok(_) => Ok(()),
        Err(e @ FileCheckError::NoDirectives(_)) => Err(Fail::Usage(format!("{file}: error: {e}"))),
        Err(e) => Err(Fail::Input(format!("{file}: error: {e}"))),
    }
}

fn cmd_update(c: UpdateCmd, io: &mut Io) -> Result<(), Fail> {
    let files = crate::testkit::discover(&c.paths).map_err(|e| Fail::Input(format!("error: {e}")))?;
    let mut failed = false;
    for f in files {
        match update_checks(&f) {
            Ok(true) => {
                let _ = writeln!(io.out, "updated {}", f.display());
            },
            Ok(false) => {
                let _ = writeln!(io.out, "unchanged {}", f.display());
            },
            Err(e) => {
                failed = true;
                let _ = writeln!(io.err, "error: {e}");
            }
        }
    }
    if failed {
        return Err(Fail::Input(String::new()));
    }
    Ok(())
}

/// Runs one command line (without the program name) against `stdin`,
/// capturing both output streams.
pub fn invoke<S: AsRef<str>>(args: &[S], stdin: &mut dyn Read) -> Outcome {
    let argv = std::iter::once("cryptcc").chain(args.iter().map(AsRef::as_ref));
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            let status = e.exit_code();
            return if status == 0 {
                Outcome { status, stdout: text.into_bytes(), stderr: Vec::new() }
            } else {
                Outcome { status: 2, stdout: Vec::new(), stderr: text.into_bytes() }
            };
        }
    };
    let mut io = Io { stdin, out: String::new(), err: String::new() };
    let r = match cli.cmd {
        Command::Opt(c) => cmd_opt(c, &mut io),
        Command::Llc(c) => cmd_llc(c, &mut io),
        Command::Mc(c) => cmd_mc(c, &mut io),
        Command::Run(c) => cmd_run(c, &mut io),
        Command::Lit(c) => cmd_lit(c, &mut io),
        Command::Filecheck(c) => cmd_filecheck(c, &mut io),
        Command::UpdateChecks(c) => cmd_update(c, &mut io),
    };
    let status = match r {
        Ok(()) => 0,
        Err(Fail::Usage(m)) => {
            io.err.push_str(&m);
            io.err.push('\n');
            2
        }
        Err(Fail::Input(m)) => {
            if !m.is_empty() {
                io.err.push_str(&m);
                io.err.push('\n');
            }
            1
        }
    };
    Outcome { status, stdout: io.out.into_bytes(), stderr: io.err.into_bytes() }
}

/// The binary's entry point: real stdin, stdout and stderr.
pub fn main<I: IntoIterator<Item = String>>(args: I) -> i32 {
    use std::io::Write;
    let args: Vec<String> = args.into_iter().collect();
    let mut stdin = std::io::stdin().lock();
    let o = invoke(&args, &mut stdin);
    let _ = std::io::stdout().write_all(&o.stdout);
    let _ = std::io::stderr().write_all(&o.stderr);
    o.status
}

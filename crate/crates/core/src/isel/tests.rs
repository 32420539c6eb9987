use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::corpus;
use crate::driver::{compile_module, compile_text, CompileOptions, OptLevel};
use crate::ir::{parse_ir, IrModule};
use crate::midend::{run_pipeline, PassPipeline};
use crate::sim::{layout, run_function, Memory, DEFAULT_FUEL};
use crate::target::{
    encode, Extension, ExtensionSet, LeafKind, MOperand, MachineInstr, OutNode, PatNode, PatOp, Reg, TargetDesc,
};

fn o2(src: &str) -> IrModule {
    run_pipeline(&parse_ir(src).unwrap(), &PassPipeline::o2()).unwrap().0
}

/// Build, combine, legalize, combine: the DAG selection starts from.
fn prepared(m: &IrModule, name: &str, ext: ExtensionSet) -> SelDag {
    let mut dag = build_dag(m, m.function(name).unwrap());
    combine(&mut dag, CombineStage::PreLegalize);
    legalize(&mut dag, ext).unwrap();
    combine(&mut dag, CombineStage::PostLegalize);
    dag
}

fn selected(m: &IrModule, name: &str, ext: ExtensionSet) -> (SelDag, Vec<String>) {
    let mut dag = prepared(m, name, ext);
    let mut trace = Vec::new();
    select(&mut dag, TargetDesc::shipped(), ext, &HookRegistry::standard(), 2, &mut trace).unwrap();
    (dag, trace)
}

fn xcrypt() -> ExtensionSet {
    ExtensionSet::default_set().with(Extension::Xcrypt)
}

#[test]
fn ret_only_function_is_two_nodes() {
    let m = parse_ir(corpus::IDENTITY).unwrap();
    let dag = build_dag(&m, m.function("empty").unwrap());
    assert_eq!(dag.live_count(), 2);
    assert_eq!(dag.count_kind("EntryToken"), 1);
    assert_eq!(dag.count_kind("ret"), 1);
}

#[test]
fn loads_of_one_global_share_its_address_node() {
    let src = "@g = global i32 0\n\
               define i32 @f() {\nentry:\n  %0 = load i32, ptr @g\n  %1 = load i32, ptr @g\n  %2 = add i32 %0, %1\n  ret i32 %2\n}\n";
    let m = parse_ir(src).unwrap();
    let dag = build_dag(&m, &m.functions[0]);
    // Oracle: one node per distinct global referenced, one per load.
    assert_eq!(dag.count_kind("GlobalAddress<@g>"), 1);
    assert_eq!(dag.count_kind("load"), 2);
}

#[test]
fn madd_dag_has_mul_and_add_feeding_a_store() {
    let m = parse_ir(corpus::MADD).unwrap();
    let dag = build_dag(&m, &m.functions[0]);
    let add = dag.live().find(|n| n.kind == NodeKind::Bin(DagOp::Add)).unwrap();
    assert!(add.operands.iter().any(|o| *dag.kind(*o) == NodeKind::Bin(DagOp::Mul)));
    assert!(dag.live().any(|n| n.kind == NodeKind::Store && n.operands[0] == DagValue::val(add.id)));
}

#[test]
fn combine_drops_orphans_and_merges_duplicates() {
    let mut dag = SelDag::new();
    let orphan = dag.constant(0);
    // Two identical constants, bypassing the uniquing in `add`.
    let a = dag.nodes.len();
    dag.nodes.push(DagNode {
        kind: NodeKind::Constant(4),
        operands: vec![],
        chain: None,
        vt: ValueType::I32,
        id: a,
        order: a,
        dead: false,
    });
    let b = a + 1;
    dag.nodes.push(DagNode { id: b, order: b, ..dag.nodes[a].clone() });
    let sum = dag.bin(DagOp::Add, DagValue::val(a), DagValue::val(b));
    dag.root = dag.add(NodeKind::Ret, vec![sum], Some(DagValue::chain(dag.entry)), ValueType::Chain);
    assert!(combine(&mut dag, CombineStage::PreLegalize));
    assert!(dag.nodes[orphan.node].dead);
    assert_eq!(dag.count_kind("Constant<4>"), 1);
    // Nothing left to do.
    assert!(!combine(&mut dag, CombineStage::PostLegalize));
}

#[test]
fn global_addresses_become_hi_and_add_lo() {
    let m = parse_ir(corpus::MADD).unwrap();
    let dag = prepared(&m, "maddFunc", ExtensionSet::default_set());
    assert_eq!(dag.live().filter(|n| matches!(n.kind, NodeKind::GlobalAddress(_))).count(), 0);
    assert_eq!(dag.count_kind("RISCVISD::HI"), 3);
    assert_eq!(dag.count_kind("RISCVISD::ADD_LO"), 3);
    for n in dag.live().filter(|n| n.kind == NodeKind::AddLo) {
        assert_eq!(*dag.kind(n.operands[0]), NodeKind::Hi);
        assert!(matches!(dag.kind(n.operands[1]), NodeKind::TargetGlobal(_)));
    }
}

#[test]
fn rotate_is_legal_with_zbb_or_xcrypt_and_expanded_otherwise() {
    let m = o2(corpus::ROTATE);
    for ext in [ExtensionSet::default_set().with(Extension::Zbb), xcrypt()] {
        let dag = prepared(&m, "rotimm", ext);
        assert_eq!(dag.count_kind("rotr"), 1, "{ext}");
    }
    let dag = prepared(&m, "rotimm", ExtensionSet::default_set());
    assert_eq!(dag.count_kind("rotr"), 0);
    assert_eq!(dag.count_kind("or"), 1);
    assert_eq!(dag.count_kind("shl"), 1);
    assert_eq!(dag.count_kind("srl"), 1);
}

#[test]
fn expanded_rotate_agrees_with_rotation_oracle() {
    // Build rotr(x, c) directly and legalize it for the base ISA, then
    // evaluate the expansion.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for c in 0..32 {
        let mut dag = SelDag::new();
        let x = DagValue::val(dag.add(NodeKind::Register(0), vec![], None, ValueType::I32));
        let amt = dag.constant(c);
        let r = dag.bin(DagOp::Rotr, x, amt);
        dag.root = dag.add(NodeKind::Ret, vec![r], Some(DagValue::chain(dag.entry)), ValueType::Chain);
        legalize(&mut dag, ExtensionSet::default_set()).unwrap();
        assert_eq!(dag.count_kind("rotr"), 0);
        for _ in 0..32 {
            let v: u32 = rng.gen();
            let got = eval(&dag, dag.nodes[dag.root].operands[0], v);
            let want = v.rotate_right(c as u32);
            assert_eq!(got, want, "rotr({v:#x}, {c})");
        }
    }
}

/// Evaluates a generic DAG value with Register(0) bound to `x`.
fn eval(dag: &SelDag, v: DagValue, x: u32) -> u32 {
    let n = dag.node(v);
    match &n.kind {
        NodeKind::Register(0) => x,
        NodeKind::Constant(c) => *c as u32,
        NodeKind::Bin(op) => op.eval(eval(dag, n.operands[0], x), eval(dag, n.operands[1], x)),
        k => panic!("unexpected {k:?}"),
    }
}

#[test]
fn unsupported_funnel_and_rotate_forms_are_diagnosed() {
    let src = "define i32 @f(i32 %a, i32 %b, i32 %c) {\nentry:\n  %r = call i32 @llvm.fshr.i32(i32 %a, i32 %b, i32 %c)\n  ret i32 %r\n}\n";
    let m = parse_ir(src).unwrap();
    let mut dag = build_dag(&m, &m.functions[0]);
    assert!(matches!(legalize(&mut dag, ExtensionSet::ALL), Err(IselError::Unsupported(_))));

    let src = "define i32 @f(i32 %a, i32 %c) {\nentry:\n  %r = call i32 @llvm.fshr.i32(i32 %a, i32 %a, i32 %c)\n  ret i32 %r\n}\n";
    let m = parse_ir(src).unwrap();
    let mut dag = build_dag(&m, &m.functions[0]);
    assert!(matches!(legalize(&mut dag, xcrypt()), Err(IselError::Unsupported(_))));
    // With Zbb the register rotate exists.
    let c = compile_text(src, &CompileOptions::new(ExtensionSet::default_set().with(Extension::Zbb))).unwrap();
    assert_eq!(c.functions[0].mf.count_opcode("ROR"), 1);
}

#[test]
fn selection_leaves_no_generic_nodes() {
    for (name, src) in corpus::ALL {
        let m = o2(src);
        for ext in ExtensionSet::test_matrix() {
            for f in &m.functions {
                let (dag, _) = selected(&m, &f.name, ext);
                let generic: Vec<String> = dag.live().filter(|n| n.kind.is_generic()).map(|n| n.kind.label()).collect();
                assert!(generic.is_empty(), "{name} @{} [{ext}]: {generic:?}", f.name);
            }
        }
    }
}

#[test]
fn naxor_selected_five_times_on_the_sbox() {
    let m = parse_ir(corpus::SBOX).unwrap();
    let (dag, _) = selected(&m, "sbox", xcrypt());
    assert_eq!(dag.count_kind("NAXOR"), 5);
    let dot = emit_dot(&dag, "selected");
    assert_eq!(dot.matches("label=\"NAXOR:").count(), 5);
}

#[test]
fn madd_selects_mla() {
    let m = parse_ir(corpus::MADD).unwrap();
    let (dag, trace) = selected(&m, "maddFunc", xcrypt());
    assert_eq!(dag.count_kind("MLA"), 1);
    assert_eq!(dag.count_kind("MUL"), 0);
    assert!(trace.iter().any(|t| t.contains("=> (MLA $src1 $src2 $src3)")));
}

#[test]
fn one_use_predicate_keeps_a_shared_mul() {
    let m = o2(corpus::SH1ADD);
    let zba = ExtensionSet::default_set().with(Extension::Zba);
    let (dag, _) = selected(&m, "mul6add", zba);
    assert_eq!(dag.count_kind("SH1ADD"), 2);
    assert_eq!(dag.count_kind("MUL"), 0);
    let (dag, _) = selected(&m, "mul6reuse", zba);
    assert_eq!(dag.count_kind("SH1ADD"), 0);
    assert_eq!(dag.count_kind("MUL"), 1);
}

#[test]
fn dependent_load_hook_fires_only_at_offset_16() {
    let m = o2(corpus::LXR_DEP);
    let (dag, trace) = selected(&m, "dep16", xcrypt());
    assert!(trace.iter().any(|t| t == "  [5] constant equals 16: yes"));
    assert!(trace.iter().any(|t| t.contains("replaced by ADDI") && t.contains("LXR")));
    assert!(!trace.iter().any(|t| t.contains("matched (xor (load")), "declarative LXR must not fire: {trace:#?}");
    assert_eq!(dag.count_kind("LXR"), 1);
    assert_eq!(dag.count_kind("LW"), 0);

    let (dag, trace) = selected(&m, "dep8", xcrypt());
    assert!(trace.iter().any(|t| t == "  [5] constant equals 16: no"));
    assert!(trace.iter().any(|t| t.contains("matched (xor (load GPR:$rs1) (load GPR:$rs2)) => (LXR $rs1 $rs2)")));
    assert_eq!(dag.count_kind("LXR"), 1);
}

#[test]
fn hook_wins_over_declarative_lxr() {
    // With the hook removed the same DAG is claimed by the pattern instead.
    let m = o2(corpus::LXR_DEP);
    let mut dag = prepared(&m, "dep16", xcrypt());
    let mut trace = Vec::new();
    select(&mut dag, TargetDesc::shipped(), xcrypt(), &HookRegistry::empty(), 2, &mut trace).unwrap();
    assert!(trace.iter().any(|t| t.contains("(LXR $rs1 $rs2)")));
    let (_, with_hook) = selected(&m, "dep16", xcrypt());
    assert!(!with_hook.iter().any(|t| t.contains("(LXR $rs1 $rs2)")));
}

#[test]
fn hook_is_gated_on_xcrypt() {
    let m = o2(corpus::LXR_DEP);
    let (dag, trace) = selected(&m, "dep16", ExtensionSet::default_set());
    assert!(trace.iter().all(|t| !t.contains("xor_dependent_loads")));
    assert_eq!(dag.count_kind("LW"), 2);
}

#[test]
fn loads_with_other_users_are_not_folded() {
    let src = "define i32 @f(ptr %p) {\nentry:\n  %0 = load i32, ptr %p\n  %q = getelementptr inbounds i32, ptr %p, i32 4\n  %1 = load i32, ptr %q\n  %x = xor i32 %0, %1\n  %y = add i32 %x, %1\n  ret i32 %y\n}\n";
    let m = parse_ir(src).unwrap();
    let (dag, trace) = selected(&m, "f", xcrypt());
    assert_eq!(dag.count_kind("LXR"), 0);
    assert!(trace.iter().any(|t| t.contains("merged into one memory access: no")));
}

#[test]
fn scheduling_is_deterministic() {
    for (name, src) in corpus::ALL {
        let opts = CompileOptions { dot_stage: Some(DagStage::Selected), ..CompileOptions::new(ExtensionSet::ALL) };
        let a = compile_text(src, &opts).unwrap();
        let b = compile_text(src, &opts).unwrap();
        let desc = TargetDesc::shipped();
        assert_eq!(a.asm(desc), b.asm(desc), "{name}");
        for (x, y) in a.functions.iter().zip(&b.functions) {
            assert_eq!(x.dot, y.dot, "{name}");
            assert_eq!(a.words(&x.mf.name, desc).unwrap(), b.words(&y.mf.name, desc).unwrap());
        }
    }
}

#[test]
fn memory_operations_keep_their_ir_order() {
    // Base ISA: every IR load or store becomes exactly one lw or sw.
    for (name, src) in corpus::ALL {
        for opt in [OptLevel::O0, OptLevel::O2] {
            let m = parse_ir(src).unwrap();
            let c = compile_module(&m, TargetDesc::shipped(), &CompileOptions::new(ExtensionSet::default_set()).with_opt(opt))
                .unwrap();
            for f in &c.ir.functions {
                let want: String = f
                    .body
                    .insts
                    .iter()
                    .filter_map(|i| match i.op.opcode_name() {
                        "load" => Some('L'),
                        "store" => Some('S'),
                        _ => None,
                    })
                    .collect();
                let got: String = c
                    .function(&f.name)
                    .unwrap()
                    .mf
                    .instrs
                    .iter()
                    // Spill code addresses sp; IR memory never does after
                    // promotion, and allocas are not spilled here.
                    .filter_map(|mi| match mi.opcode.as_str() {
                        "LW" => Some('L'),
                        "SW" => Some('S'),
                        _ => None,
                    })
                    .collect();
                if c.function(&f.name).unwrap().alloc.spilled == 0 {
                    assert_eq!(got, want, "{name} @{} {opt:?}", f.name);
                }
            }
        }
    }
}

#[test]
fn enabling_an_extension_never_costs_instructions() {
    let desc = TargetDesc::shipped();
    let sets = ExtensionSet::test_matrix();
    for (name, src) in corpus::ALL {
        let builds: Vec<_> = sets.iter().map(|&e| compile_text(src, &CompileOptions::new(e)).unwrap()).collect();
        for (i, a) in sets.iter().enumerate() {
            for (j, b) in sets.iter().enumerate() {
                if i == j || !b.contains(*a) {
                    continue;
                }
                for (fa, fb) in builds[i].functions.iter().zip(&builds[j].functions) {
                    assert!(
                        fb.mf.instrs.len() <= fa.mf.instrs.len(),
                        "{name} @{}: {a} has {} instructions, {b} has {}\n{}\n{}",
                        fa.mf.name,
                        fa.mf.instrs.len(),
                        fb.mf.instrs.len(),
                        crate::codegen::print_asm(&fa.mf, desc),
                        crate::codegen::print_asm(&fb.mf, desc)
                    );
                }
            }
        }
    }
}

#[test]
fn dot_output_shapes() {
    let m = parse_ir(corpus::IDENTITY).unwrap();
    let dag = build_dag(&m, m.function("empty").unwrap());
    let dot = emit_dot(&dag, "built");
    assert!(dot.starts_with("digraph"));
    assert_eq!(dot.matches("[label=").count(), 2);
    assert!(dot.contains("style=dashed"));

    let m = parse_ir(corpus::MADD).unwrap();
    let l = lower_function(
        &m,
        &m.functions[0],
        TargetDesc::shipped(),
        &HookRegistry::standard(),
        IselOptions::new(xcrypt()),
        Some(DagStage::Combined2),
    )
    .unwrap();
    let dot = l.dot.unwrap();
    assert!(dot.contains("label=\"mul:i32\""));
    assert!(dot.contains("RISCVISD::ADD_LO"));
}

#[test]
fn too_many_arguments_is_an_error() {
    let params: Vec<String> = (0..9).map(|i| format!("i32 %a{i}")).collect();
    let src = format!("define i32 @f({}) {{\nentry:\n  ret i32 %a8\n}}\n", params.join(", "));
    let m = parse_ir(&src).unwrap();
    let r = lower_function(&m, &m.functions[0], TargetDesc::shipped(), &HookRegistry::standard(), IselOptions::new(ExtensionSet::ALL), None);
    assert!(matches!(r, Err(IselError::TooManyArguments(9))));
}

#[test]
fn missing_multiply_is_diagnosed() {
    let m = o2(corpus::SH1ADD);
    let mut dag = prepared(&m, "mul6add", ExtensionSet::BASE);
    let r = select(&mut dag, TargetDesc::shipped(), ExtensionSet::BASE, &HookRegistry::standard(), 2, &mut Vec::new());
    match r {
        Err(IselError::CannotSelect(what)) => assert!(what.contains("mul"), "{what}"),
        other => panic!("expected a selection failure, got {other:?}"),
    }
}

// Pattern/semantics agreement: every pattern's source tree, evaluated
// directly, equals its result tree run through the simulator.

#[derive(Clone, Copy)]
enum Bound {
    Val(u32),
    Imm(i32),
}

fn bind(p: &PatNode, rng: &mut ChaCha8Rng, env: &mut HashMap<String, Bound>, mem: &mut Memory, next_addr: &mut u32) {
    match p {
        PatNode::Op { op: PatOp::Load, children, .. } => {
            // The address operand: a fresh word with random contents.
            let PatNode::Leaf { name, .. } = &children[0] else { panic!("load of a non-leaf") };
            let a = *next_addr;
            *next_addr += 4;
            mem.write_u32(a, rng.gen());
            env.insert(name.clone(), Bound::Val(a));
        }
        PatNode::Op { children, .. } => children.iter().for_each(|c| bind(c, rng, env, mem, next_addr)),
        PatNode::Leaf { kind, name } => {
            let b = match kind {
                LeafKind::Gpr | LeafKind::ShXAddOp(_) => Bound::Val(rng.gen()),
                LeafKind::Simm12 => Bound::Imm(rng.gen_range(-2048..=2047)),
                LeafKind::Uimm5 => Bound::Imm(rng.gen_range(0..=31)),
                LeafKind::NonImm12 => Bound::Val(rng.gen_range(4096..u32::MAX)),
            };
            env.entry(name.clone()).or_insert(b);
        }
        PatNode::Const(_) => {}
    }
}

fn eval_source(p: &PatNode, env: &HashMap<String, Bound>, mem: &Memory) -> u32 {
    let leaf = |n: &str| match env[n] {
        Bound::Val(v) => v,
        Bound::Imm(i) => i as u32,
    };
    match p {
        PatNode::Const(c) => *c as u32,
        PatNode::Leaf { kind: LeafKind::ShXAddOp(k), name } => leaf(name) << k,
        PatNode::Leaf { name, .. } => leaf(name),
        PatNode::Op { op: PatOp::Load, children, .. } => mem.read_u32(eval_source(&children[0], env, mem)),
        PatNode::Op { op, children, .. } => {
            let a = eval_source(&children[0], env, mem);
            let b = eval_source(&children[1], env, mem);
            let d = match op {
                PatOp::Add => DagOp::Add,
                PatOp::Sub => DagOp::Sub,
                PatOp::Mul => DagOp::Mul,
                PatOp::And => DagOp::And,
                PatOp::Or => DagOp::Or,
                PatOp::Xor => DagOp::Xor,
                PatOp::Shl => DagOp::Shl,
                PatOp::Srl => DagOp::Srl,
                PatOp::Sra => DagOp::Sra,
                PatOp::Rotr => DagOp::Rotr,
                PatOp::Load => unreachable!(),
            };
            d.eval(a, b)
        }
    }
}

/// Emits the result tree bottom-up into t0, t1, ...; returns the register
/// holding the root.
fn emit_result(
    out: &OutNode,
    regs: &HashMap<String, u8>,
    env: &HashMap<String, Bound>,
    code: &mut Vec<MachineInstr>,
    next_tmp: &mut Vec<u8>,
) -> MOperand {
    match out {
        OutNode::Capture(n) => match env[n] {
            Bound::Imm(i) => MOperand::Imm(i),
            Bound::Val(_) => MOperand::Reg(Reg::Phys(regs[n])),
        },
        OutNode::Inst { def, args } => {
            let ops: Vec<MOperand> = args.iter().map(|a| emit_result(a, regs, env, code, next_tmp)).collect();
            let rd = Reg::Phys(next_tmp.remove(0));
            let mut all = vec![MOperand::Reg(rd)];
            all.extend(ops);
            code.push(MachineInstr::new(def, all));
            MOperand::Reg(rd)
        }
    }
}

#[test]
fn every_pattern_computes_what_it_matches() {
    let desc = TargetDesc::shipped();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11);
    for p in &desc.patterns {
        for trial in 0..1000 {
            let mut env = HashMap::new();
            let mut mem = Memory::new();
            let mut next_addr = layout::ARG_BASE;
            bind(&p.source, &mut rng, &mut env, &mut mem, &mut next_addr);
            let want = eval_source(&p.source, &env, &mem);

            // Register captures go in a0.. in name order.
            let mut names: Vec<&String> = env.iter().filter(|(_, b)| matches!(b, Bound::Val(_))).map(|(n, _)| n).collect();
            names.sort();
            let regs: HashMap<String, u8> = names.iter().enumerate().map(|(i, n)| ((*n).clone(), 10 + i as u8)).collect();
            let args: Vec<u32> = names.iter().map(|n| if let Bound::Val(v) = env[*n] { v } else { 0 }).collect();
            let mut code = Vec::new();
            let mut tmps = vec![5, 6, 7, 28, 29, 30, 31];
            let r = emit_result(&p.result, &regs, &env, &mut code, &mut tmps);
            let MOperand::Reg(r) = r else { panic!("result is not a register") };
            code.push(MachineInstr::rri("ADDI", Reg::Phys(10), r, 0));
            code.push(MachineInstr::ret());
            let words: Vec<u32> = code.iter().map(|mi| encode(mi, desc).unwrap().word).collect();
            let (got, _, _) = run_function(&words, &args, &mem, DEFAULT_FUEL).unwrap();
            assert_eq!(got, want, "pattern at line {} ({} => {}), trial {trial}", p.line, p.source, p.result);
        }
    }
}

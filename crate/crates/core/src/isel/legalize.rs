use super::dag::{DagOp, DagValue, NodeKind, SelDag, ValueType};
use super::IselError;
use crate::target::{Extension, ExtensionSet};

/// Rewrites the DAG into forms the target can select: global addresses
/// split into HI/ADD_LO, funnel shifts turned into rotates or shift pairs,
/// rotates expanded where no rotate instruction exists.
pub fn legalize(dag: &mut SelDag, ext: ExtensionSet) -> Result<(), IselError> {
    let order = dag.topo_order();
    for n in order {
        if dag.nodes[n].dead {
            continue;
        }
        match dag.nodes[n].kind.clone() {
            NodeKind::GlobalAddress(g) => {
                let tg = dag.add(NodeKind::TargetGlobal(g), vec![], None, ValueType::Ptr);
                let hi = dag.add(NodeKind::Hi, vec![DagValue::val(tg)], None, ValueType::Ptr);
                let lo = dag.add(NodeKind::AddLo, vec![DagValue::val(hi), DagValue::val(tg)], None, ValueType::Ptr);
                replace(dag, n, DagValue::val(lo));
            }
            NodeKind::Fshl | NodeKind::Fshr => {
                let new = legalize_funnel(dag, n)?;
                replace(dag, n, new);
                // The replacement may itself be a rotate that needs work.
                if let Some(k) = Some(new.node).filter(|&k| dag.nodes[k].kind == NodeKind::Bin(DagOp::Rotr)) {
                    legalize_rotr(dag, k, ext)?;
                }
            }
            NodeKind::Bin(DagOp::Rotr) => legalize_rotr(dag, n, ext)?,
            _ => {}
        }
    }
    dag.remove_dead();
    Ok(())
}

fn replace(dag: &mut SelDag, n: usize, with: DagValue) {
    if with.node != n {
        dag.replace_all_uses(DagValue::val(n), with);
        dag.nodes[n].dead = true;
    }
}

fn legalize_funnel(dag: &mut SelDag, n: usize) -> Result<DagValue, IselError> {
    let is_fshl = dag.nodes[n].kind == NodeKind::Fshl;
    let [hi, lo, amt] = dag.nodes[n].operands[..] else { unreachable!("funnel shifts have three operands") };
    if let Some(c) = dag.as_const(amt) {
        let c = c & 31;
        if c == 0 {
            return Ok(if is_fshl { hi } else { lo });
        }
        // Everything below is phrased as a right shift by `r`.
        let r = if is_fshl { 32 - c } else { c };
        let ra = dag.constant(r);
        if hi == lo {
            return Ok(dag.bin(DagOp::Rotr, hi, ra));
        }
        let la = dag.constant(32 - r);
        let s = dag.bin(DagOp::Srl, lo, ra);
        let h = dag.bin(DagOp::Shl, hi, la);
        return Ok(dag.bin(DagOp::Or, h, s));
    }
    if hi != lo {
        return Err(IselError::Unsupported("funnel shift of two different values by a variable amount".into()));
    }
    // Rotate left by v is rotate right by -v, modulo 32.
    let amount = if is_fshl {
        let z = dag.constant(0);
        dag.bin(DagOp::Sub, z, amt)
    } else {
        amt
    };
    Ok(dag.bin(DagOp::Rotr, hi, amount))
}

fn legalize_rotr(dag: &mut SelDag, n: usize, ext: ExtensionSet) -> Result<(), IselError> {
    let [x, amt] = dag.nodes[n].operands[..] else { unreachable!("rotr is binary") };
    let constant = dag.as_const(amt);
    if ext.has(Extension::Zbb) || (ext.has(Extension::Xcrypt) && constant.is_some()) {
        return Ok(());
    }
    if ext.has(Extension::Xcrypt) {
        return Err(IselError::Unsupported(
            "rotate by a variable amount needs Zbb (roti only takes an immediate)".into(),
        ));
    }
    // Expand: (x >> c) | (x << (32 - c)).
    let new = match constant {
        Some(c) => {
            let c = c & 31;
            if c == 0 {
                x
            } else {
                let r = dag.constant(c);
                let l = dag.constant(32 - c);
                let s = dag.bin(DagOp::Srl, x, r);
                let h = dag.bin(DagOp::Shl, x, l);
                dag.bin(DagOp::Or, s, h)
            }
        }
        None => {
            let z = dag.constant(0);
            let neg = dag.bin(DagOp::Sub, z, amt);
            let s = dag.bin(DagOp::Srl, x, amt);
            let h = dag.bin(DagOp::Shl, x, neg);
            dag.bin(DagOp::Or, s, h)
        }
    };
    replace(dag, n, new);
    Ok(())
}

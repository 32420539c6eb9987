use super::PassStats;
use crate::ir::IrFunction;

/// Which of the attribute-only passes to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttrKind {
    Infer,
    PostOrder,
    GlobalOpt,
}

/// Adds function attributes. Functions here never call anything and always
/// return, so every fact holds syntactically. Instructions are untouched.
pub fn pass_attr(f: &mut IrFunction, which: AttrKind, stats: &mut PassStats) {
    let (pass, tags): (&str, &[&str]) = match which {
        AttrKind::Infer => ("inferattrs", &["mustprogress"]),
        AttrKind::PostOrder => ("function-attrs", &["nofree", "norecurse", "nosync", "nounwind", "willreturn"]),
        AttrKind::GlobalOpt => ("globalopt", &["local_unnamed_addr"]),
    };
    for tag in tags {
        if f.attrs.insert(tag.to_string()) {
            let counter = if *tag == "local_unnamed_addr" { "unnamed-addr" } else { tag };
            stats.add(&format!("{pass}.{counter}"), 1);
        }
    }
}

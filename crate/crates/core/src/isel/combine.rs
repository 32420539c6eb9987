use std::collections::HashMap;

use super::dag::{DagValue, NodeKind, SelDag};

/// Which of the two combine runs this is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CombineStage {
    PreLegalize,
    PostLegalize,
}

/// Removes nodes nothing reaches and merges duplicate pure leaves and
/// operations. Returns whether anything changed.
pub fn combine(dag: &mut SelDag, _stage: CombineStage) -> bool {
    let mut changed = dag.remove_dead() > 0;
    loop {
        let mut seen: HashMap<(NodeKind, Vec<DagValue>), usize> = HashMap::new();
        let mut merged = false;
        for n in dag.topo_order() {
            let node = &dag.nodes[n];
            if matches!(node.kind, NodeKind::Load | NodeKind::Store | NodeKind::Ret | NodeKind::EntryToken | NodeKind::Machine(_)) {
                continue;
            }
            let key = (node.kind.clone(), node.operands.clone());
            match seen.get(&key) {
                Some(&keep) => {
                    dag.replace_all_uses(DagValue::val(n), DagValue::val(keep));
                    dag.nodes[n].dead = true;
                    merged = true;
                }
                None => {
                    seen.insert(key, n);
                }
            }
        }
        if !merged {
            break;
        }
        changed = true;
        dag.remove_dead();
    }
    changed
}
